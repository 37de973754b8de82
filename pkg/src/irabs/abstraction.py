"""Single-level abstraction problems: distances, metric checks and clustering."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .crswf import AbstractionMap, CrswfContext, CrswfError, choose_delta_weighted, nature_weights
from .efg_core import GameTree

EXACT_LIMIT = 25


class SlapTooLarge(ValueError):
    """The instance exceeds the exact-search size guard."""


# -------------------------------------------------------------- instances
@dataclass
class TreeObjective:
    """Error tree over the candidates: leaves are (candidate, cost-matrix index).

    Nodes are ("leaf", item, matrix) | ("max", [children]) | ("sum", [(w, child)]).
    A leaf's value is its candidate's largest cost to any co-clustered item.
    """

    root: tuple
    matrices: list[np.ndarray]

    def evaluate(self, labels: np.ndarray) -> float:
        def rec(node) -> float:
            kind = node[0]
            if kind == "leaf":
                _, item, m = node
                if labels[item] < 0:
                    return 0.0
                mates = np.flatnonzero(labels == labels[item])
                return float(self.matrices[m][item, mates].max())
            if kind == "max":
                return max((rec(c) for c in node[1]), default=0.0)
            return float(sum(w * rec(c) for w, c in node[1]))
        return rec(self.root)


@dataclass
class SlapInstance:
    """Candidates with a symmetric distance matrix and an objective.

    ``cost`` holds directional costs for the weighted objective (defaults to
    ``dist``); ``members`` optionally lists, per candidate, the information
    sets it stands for (aligned across candidates by slot).
    """

    names: list[str]
    dist: np.ndarray
    weights: np.ndarray | None = None
    objective: str = "diameter"
    cost: np.ndarray | None = None
    tree: TreeObjective | None = None
    members: list[list[str]] | None = None

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        if self.weights is None:
            self.weights = np.ones(len(self.names))
        if self.cost is None:
            self.cost = self.dist
        if self.objective not in ("diameter", "weighted", "tree"):
            raise ValueError(f"unknown objective {self.objective!r}")

    @property
    def size(self) -> int:
        return len(self.names)

    def evaluate(self, labels: np.ndarray) -> float:
        labels = np.asarray(labels)
        if self.objective == "tree":
            return self.tree.evaluate(labels)
        total = 0.0
        worst = 0.0
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            if self.objective == "diameter":
                worst = max(worst, float(self.dist[np.ix_(idx, idx)].max()))
            else:
                total += float(np.dot(self.weights[idx], self.cost[np.ix_(idx, idx)].max(axis=1)))
        return worst if self.objective == "diameter" else total


@dataclass
class Clustering:
    labels: np.ndarray
    objective: float
    representatives: list[int] = field(default_factory=list)

    @property
    def clusters(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for j, c in enumerate(self.labels):
            out.setdefault(int(c), []).append(j)
        return [out[c] for c in sorted(out, key=lambda c: out[c][0])]


# -------------------------------------------------------------- distances
def pair_distance(ctx: CrswfContext, a: str, b: str, mode: str = "fixed") -> float:
    """Bound increase from merging {I, Ĭ}: the larger directional ψ-term.

    Node weights are nature weights π₀(s)/π₀(I). ``mode="optimized"`` picks
    δ to minimize this quantity; ``"fixed"`` uses δ = 1.
    """
    if mode == "optimized":
        return choose_delta_weighted(ctx, a, b).value
    if mode != "fixed":
        raise ValueError(f"unknown delta mode {mode!r}")
    wa, wb = nature_weights(ctx.game, a), nature_weights(ctx.game, b)
    return max(ctx.pair_errors(a, b, 1).psi_term(wa), ctx.pair_errors(b, a, 1).psi_term(wb))


def distance_matrix(ctx: CrswfContext, sets: Sequence[str], mode: str = "fixed") -> np.ndarray:
    n = len(sets)
    d = np.zeros((n, n))
    for x in range(n):
        for y in range(x + 1, n):
            d[x, y] = d[y, x] = pair_distance(ctx, sets[x], sets[y], mode)
    return d


def group_costs(ctx: CrswfContext, members: list[list[str]],
                delta: str = "fixed") -> tuple[np.ndarray, np.ndarray]:
    """Directional costs between candidates standing for aligned groups of sets.

    D[x, y] is the strategy-agnostic bound contribution of x's sets when each
    is merged with y's set in the same slot, divided by x's nature weight
    π₀ of its first set; weights are those nature weights. ``delta`` is
    "fixed" (δ = 1) or "optimized" (per slot pair, choose_delta_weighted).
    """
    if delta not in ("fixed", "optimized"):
        raise ValueError(f"unknown delta mode {delta!r}")
    game = ctx.game
    ct = game.compact
    pos = np.full(game.num_nodes, -1, dtype=np.int64)
    pos[ct.nodes] = np.arange(len(ct.nodes))
    n = len(members)
    weights = np.array([game.chance_reach[list(game.infoset_nodes[m[0]])].sum() for m in members])
    D = np.zeros((n, n))
    costs = np.zeros(len(ct.nodes))
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            costs[:] = 0.0
            for a, b in zip(members[x], members[y]):
                d = 1 if delta == "fixed" else choose_delta_weighted(ctx, a, b).delta
                pe = ctx.pair_errors(a, b, d)
                costs[pos[pe.nodes]] = 2.0 * pe.node_errors + pe.distribution
            val = _kernels.agnostic_dp(ct.owner, ct.ptr, ct.cidx, ct.echance, costs)
            D[x, y] = val / weights[x] if weights[x] > 0 else 0.0
    return D, weights


def merged_context(game: GameTree, members: list[list[str]]) -> CrswfContext:
    """Context in which every candidate's slot-s sets share one abstract id.

    Later sets of a group appear in the future sequences of earlier ones, so
    bijections between candidates exist only once the whole group is merged.
    """
    slots = len(members[0])
    classes = {f"~slot{h}|{members[0][h]}": tuple(m[h] for m in members) for h in range(slots)}
    return CrswfContext(game, AbstractionMap(classes))


def group_instance(game: GameTree, names: list[str], members: list[list[str]],
                   objective: str = "weighted", delta: str = "fixed") -> SlapInstance:
    D, w = group_costs(merged_context(game, members), members, delta)
    return SlapInstance(names, np.maximum(D, D.T), w, objective, cost=D, members=members)


# ------------------------------------------------------- metric validation
def zero_classes(dist: np.ndarray) -> list[list[int]]:
    """Connected components of the zero-distance graph (lowest index first)."""
    n = len(dist)
    label = -np.ones(n, dtype=np.int64)
    out = []
    for s in range(n):
        if label[s] >= 0:
            continue
        comp, stack = [], [s]
        label[s] = len(out)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in np.flatnonzero(dist[x] == 0):
                if label[y] < 0:
                    label[y] = len(out)
                    stack.append(y)
        out.append(sorted(comp))
    return out


def validate_metric(inst: SlapInstance, tol: float = 1e-9) -> tuple[bool, tuple | None]:
    """Non-negativity, zero diagonal, symmetry and the triangle inequality.

    Zero-distance sets are merged first, so identity of indiscernibles holds by
    construction; a zero-distance class whose members are not all at distance
    zero from each other is reported as a violation.
    """
    d = inst.dist
    n = inst.size
    if (d < 0).any():
        x, y = map(int, np.argwhere(d < 0)[0])
        return False, ("negative", x, y)
    if (np.diag(d) != 0).any():
        x = int(np.flatnonzero(np.diag(d) != 0)[0])
        return False, ("diagonal", x)
    if not np.array_equal(d, d.T):
        x, y = map(int, np.argwhere(d != d.T)[0])
        return False, ("symmetry", x, y)
    for comp in zero_classes(d):
        sub = d[np.ix_(comp, comp)]
        if (sub != 0).any():
            x, y = np.argwhere(sub != 0)[0]
            return False, ("identity", comp[x], comp[y])
    for z in range(n):
        # d(x,y) <= d(x,z) + d(z,y) for all x, y
        viol = d - (d[:, z][:, None] + d[z, :][None, :])
        if (viol > tol).any():
            x, y = map(int, np.argwhere(viol > tol)[0])
            return False, ("triangle", x, z, y)
    return True, None


# ------------------------------------------------------------- clustering
def gonzalez_cluster(inst: SlapInstance, k: int) -> Clustering:
    """Farthest-point traversal from the lowest-index candidate."""
    n = inst.size
    if k <= 0 or k > n:
        raise ValueError(f"k must be in 1..{n}")
    d = inst.dist
    centers = [0]
    near = d[0].copy()
    while len(centers) < k:
        nxt = int(np.argmax(near))
        centers.append(nxt)
        near = np.minimum(near, d[nxt])
    labels = np.argmin(d[:, centers], axis=1)
    labels[centers] = np.arange(len(centers))
    return Clustering(labels, inst.evaluate(labels), centers)


def _premerge(inst: SlapInstance) -> tuple[list[list[int]], np.ndarray, np.ndarray]:
    classes = zero_classes(inst.dist)
    m = len(classes)
    cost = np.zeros((m, m))
    dist = np.zeros((m, m))
    for p, cp in enumerate(classes):
        for q, cq in enumerate(classes):
            if p != q:
                cost[p, q] = inst.cost[np.ix_(cp, cq)].max()
                dist[p, q] = inst.dist[np.ix_(cp, cq)].max()
    w = np.array([inst.weights[c].sum() for c in classes])
    return classes, (dist if inst.objective == "diameter" else cost), w


def exact_cluster(inst: SlapInstance, k: int, limit: int = EXACT_LIMIT) -> Clustering:
    """Optimal partition into at most k clusters by branch and bound.

    Zero-distance candidates are merged beforehand; the Gonzalez solution is
    the initial incumbent.
    """
    n = inst.size
    if k <= 0 or k > n:
        raise ValueError(f"k must be in 1..{n}")
    if inst.objective == "tree":
        return _exact_tree(inst, k, limit)
    classes, mat, w = _premerge(inst)
    m = len(classes)
    if m > limit:
        raise SlapTooLarge(f"{m} candidates after merging zero-distance ones exceeds the limit {limit}")

    def expand(lab_small: np.ndarray) -> np.ndarray:
        labels = np.empty(n, dtype=np.int64)
        for p, cp in enumerate(classes):
            labels[cp] = lab_small[p]
        return _canonical(labels)

    if k >= m:
        labels = expand(np.arange(m))
        return Clustering(labels, inst.evaluate(labels), _reps(labels))
    # order classes farthest-first so early branching spreads items out
    sym = np.maximum(mat, mat.T)
    order = [0]
    near = sym[0].copy()
    while len(order) < m:
        near[order] = -1
        nxt = int(np.argmax(near))
        order.append(nxt)
        near = np.minimum(near, sym[nxt])
        near[order] = -1
    order = np.array(order)
    sub = SlapInstance([str(j) for j in range(m)], sym, w, inst.objective, cost=mat)
    inc = gonzalez_cluster(sub, k)
    kind = 0 if inst.objective == "diameter" else 1
    D = np.ascontiguousarray(mat[np.ix_(order, order)])
    inv = np.empty(m, dtype=np.int64)
    inv[order] = np.arange(m)
    inc_lab = _canonical(inc.labels[order])
    best, lab = _kernels.branch_and_bound(kind, D, w[order], k, inc.objective + 1e-9, inc_lab)
    lab_small = lab[inv]
    labels = expand(lab_small)
    return Clustering(labels, inst.evaluate(labels), _reps(labels))


def _canonical(labels: np.ndarray) -> np.ndarray:
    mapping: dict[int, int] = {}
    return np.array([mapping.setdefault(int(c), len(mapping)) for c in labels], dtype=np.int64)


def _reps(labels: np.ndarray) -> list[int]:
    return [int(np.flatnonzero(labels == c)[0]) for c in range(int(labels.max()) + 1)]


def _exact_tree(inst: SlapInstance, k: int, limit: int) -> Clustering:
    n = inst.size
    if n > min(limit, 12):
        raise SlapTooLarge("tree-composed objective supports exact search up to 12 candidates")
    best_val = np.inf
    best_lab = None
    lab = -np.ones(n, dtype=np.int64)

    def rec(j: int, used: int):
        nonlocal best_val, best_lab
        if inst.tree.evaluate(lab) >= best_val:
            return
        if j == n:
            best_val, best_lab = inst.tree.evaluate(lab), lab.copy()
            return
        for c in range(min(used + 1, k)):
            lab[j] = c
            rec(j + 1, max(used, c + 1))
            lab[j] = -1

    rec(0, 0)
    return Clustering(best_lab, float(best_val), _reps(best_lab))


def exhaustive_cluster(inst: SlapInstance, k: int) -> Clustering:
    """Brute-force oracle over all set partitions with at most k blocks."""
    n = inst.size
    best = None

    def rec(j, lab, used):
        nonlocal best
        if j == n:
            val = inst.evaluate(np.array(lab))
            if best is None or val < best[0] - 1e-12:
                best = (val, list(lab))
            return
        for c in range(min(used + 1, k)):
            lab.append(c)
            rec(j + 1, lab, max(used, c + 1))
            lab.pop()

    rec(0, [], 0)
    labels = np.array(best[1])
    return Clustering(labels, best[0], _reps(labels))


# ------------------------------------------------------- building the map
def build_abstraction(members: list[list[str]], clustering: Clustering,
                      ctx: CrswfContext | None = None, prefix: str = "A") -> AbstractionMap:
    """Merge, slot by slot, the sets of candidates sharing a cluster.

    With ``ctx`` every proposed merge is checked for a Def. 3 bijection.
    """
    classes: dict[str, tuple[str, ...]] = {}
    for cl in clustering.clusters:
        if len(cl) < 2:
            continue
        for slot in range(len(members[cl[0]])):
            sets = tuple(members[x][slot] for x in cl)
            if ctx is not None:
                for s in sets[1:]:
                    ctx.bijection(sets[0], s)
            classes[f"{prefix}|{sets[0]}"] = sets
    return AbstractionMap(classes, {}, "one")


def with_optimized_deltas(game: GameTree, amap: AbstractionMap) -> AbstractionMap:
    """Copy of ``amap`` with an explicit bound-minimizing δ for every merged pair."""
    ctx = CrswfContext(game, amap)
    deltas = dict(amap.deltas)
    for mem in amap.classes.values():
        for j, a in enumerate(mem):
            for b in mem[j + 1:]:
                deltas[(a, b)] = Fraction(choose_delta_weighted(ctx, a, b).delta)
    return AbstractionMap(amap.classes, deltas, amap.default_delta)


def combine_maps(*maps: AbstractionMap) -> AbstractionMap:
    classes: dict[str, tuple[str, ...]] = {}
    deltas: dict[tuple[str, str], Fraction] = {}
    for m in maps:
        for aid, mem in m.classes.items():
            if aid in classes:
                raise CrswfError(f"abstract id {aid!r} used twice")
            classes[aid] = mem
        deltas.update(m.deltas)
    return AbstractionMap(classes, deltas, "one")
