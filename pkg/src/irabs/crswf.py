"""CRSWF abstractions: leaf bijections between merged sets and their error terms."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import _kernels
from .efg_core import CHANCE, LEAF, GameError, GameTree, format_rational, parse_rational


class CrswfError(GameError):
    """An abstraction violating the structural conditions of a CRSWF game."""


# ------------------------------------------------------------ abstraction map
@dataclass
class AbstractionMap:
    """Partition of original information sets into abstract ones.

    ``classes`` maps abstract ids to member sets; sets not listed stay
    singletons under their own id. ``deltas`` holds explicit scaling factors per
    ordered pair (the reverse direction is the reciprocal). Pairs without an
    explicit factor use 1 (``default_delta="one"``) or choose_delta
    (``"choose"``).
    """

    classes: dict[str, tuple[str, ...]]
    deltas: dict[tuple[str, str], Fraction] = field(default_factory=dict)
    default_delta: str = "one"

    @classmethod
    def identity(cls) -> "AbstractionMap":
        return cls({})

    def abstract_of(self, iid: str) -> str:
        return self._inverse.get(iid, iid)

    @property
    def _inverse(self) -> dict[str, str]:
        inv = self.__dict__.get("_inv")
        if inv is None:
            inv = {}
            for aid, members in self.classes.items():
                for m in members:
                    if m in inv:
                        raise CrswfError(f"information set {m!r} appears in two classes")
                    inv[m] = aid
            self.__dict__["_inv"] = inv
        return inv

    def labels(self, game: GameTree) -> dict[str, str]:
        return {iid: self.abstract_of(iid) for iid in game.infoset_names}

    def members(self, game: GameTree) -> dict[str, list[str]]:
        """Abstract id -> member sets, for every abstract set of the game."""
        out: dict[str, list[str]] = {}
        for iid in game.infoset_names:
            out.setdefault(self.abstract_of(iid), []).append(iid)
        return out

    def abstract_game(self, game: GameTree) -> GameTree:
        return game.with_infosets(self.labels(game), name=game.name + "_abs")

    def explicit_delta(self, a: str, b: str) -> Fraction | None:
        if (a, b) in self.deltas:
            return Fraction(self.deltas[(a, b)])
        if (b, a) in self.deltas:
            return 1 / Fraction(self.deltas[(b, a)])
        return None

    def to_text(self) -> str:
        lines = [f"merge {aid} = {','.join(m)}" for aid, m in self.classes.items()]
        lines += [f"delta {a} {b} = {format_rational(d)}" for (a, b), d in self.deltas.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, default_delta: str = "choose") -> "AbstractionMap":
        classes: dict[str, tuple[str, ...]] = {}
        deltas: dict[tuple[str, str], Fraction] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            head, sep, rhs = line.partition("=")
            tok = head.split()
            if not sep or not tok:
                raise CrswfError(f"line {lineno}: expected 'merge ...' or 'delta ...'")
            if tok[0] == "merge" and len(tok) == 2:
                members = tuple(m.strip() for m in rhs.split(",") if m.strip())
                if tok[1] in classes:
                    raise CrswfError(f"line {lineno}: duplicate class {tok[1]!r}")
                classes[tok[1]] = members
            elif tok[0] == "delta" and len(tok) == 3:
                try:
                    d = parse_rational(rhs.strip())
                except ValueError as exc:
                    raise CrswfError(f"line {lineno}: {exc}") from exc
                if d <= 0:
                    raise CrswfError(f"line {lineno}: delta must be positive")
                deltas[(tok[1], tok[2])] = d
            else:
                raise CrswfError(f"line {lineno}: expected 'merge <id> = ...' or 'delta <a> <b> = q'")
        amap = cls(classes, deltas, default_delta)
        amap._inverse  # validates disjointness
        return amap


def refinement_problem(original: GameTree, amap: AbstractionMap) -> str | None:
    """Why ``amap`` is not a pure merge of ``original``'s sets, or None."""
    known = set(original.infoset_names)
    try:
        inv = amap._inverse
    except CrswfError as exc:
        return str(exc)
    for iid in inv:
        if iid not in known:
            return f"unknown information set {iid!r}"
    for aid, members in amap.classes.items():
        if not members:
            return f"class {aid!r} is empty"
        own = {original.infoset_owner[m] for m in members}
        if len(own) > 1:
            return f"class {aid!r} mixes owners"
        for m in members[1:]:
            if original.infoset_actions[m] != original.infoset_actions[members[0]]:
                return (f"class {aid!r} merges {members[0]!r} and {m!r}, "
                        "which have different action labels")
        if aid in known and aid not in members and amap.abstract_of(aid) == aid:
            return f"abstract id {aid!r} collides with an unmerged original set"
    return None


def check_refinement(original: GameTree, amap: AbstractionMap) -> bool:
    return refinement_problem(original, amap) is None


# --------------------------------------------------------------- leaf tables
@dataclass
class LeafTable:
    """Leaves below one information set, sorted by bijection key."""

    infoset: str
    nodes: np.ndarray        # members s of I in preorder
    leaves: np.ndarray       # leaf ids in key order
    keys: list[tuple]
    top: np.ndarray          # z[I] for each leaf
    cond0: np.ndarray        # π₀(z[I], z)
    ratio: np.ndarray        # π₀(z[I]) / π₀(I)


@dataclass
class PairErrors:
    """Errors of mapping I onto Ĭ (ordered pair)."""

    infoset: str
    other: str
    delta: Fraction | float
    leaves: np.ndarray
    mapped: np.ndarray
    leaf_reward: np.ndarray
    leaf_prob: np.ndarray
    nodes: np.ndarray
    node_reward: np.ndarray
    node_transition: np.ndarray
    node_dist: np.ndarray
    node_ubar: np.ndarray
    distribution: float

    @property
    def node_errors(self) -> np.ndarray:
        """ε^0(s) + ε^R(s) per member node."""
        return self.node_transition + self.node_reward

    def psi_term(self, weights: np.ndarray) -> float:
        """2·Σ_s w(s)(ε^0(s)+ε^R(s)) + ε^D for node weights over I's members."""
        return float(2.0 * np.dot(weights, self.node_errors) + self.distribution)


class CrswfContext:
    """Caches per-set leaf tables for one (game, abstraction) pair."""

    def __init__(self, game: GameTree, amap: AbstractionMap):
        problem = refinement_problem(game, amap)
        if problem:
            raise CrswfError(problem)
        self.game = game
        self.amap = amap
        self.labels = amap.labels(game)
        self._tables: dict[str, LeafTable] = {}
        self._other_sig: dict[int, np.ndarray] = {}
        self._natseq: list[tuple] | None = None
        n = game.num_nodes
        self._scratch = (np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))

    # signatures -----------------------------------------------------------
    def other_signature(self, player: int) -> np.ndarray:
        """Interned X_{-{i,0}}(s) under the abstraction for every node."""
        if player not in self._other_sig:
            g = self.game
            sig = np.zeros(g.num_nodes, dtype=np.int64)
            table: dict[tuple, int] = {}
            for n in range(1, g.num_nodes):
                p = g.parent[n]
                own = g.owners[p]
                if own > 0 and own != player and not g.dummy[p]:
                    key = (int(sig[p]), self.labels[g.infosets[p]], g.actions[p][g.action_index[n]])
                    sig[n] = table.setdefault(key, len(table) + 1)
                else:
                    sig[n] = sig[p]
            self._other_sig[player] = sig
        return self._other_sig[player]

    def nature_sequence(self, node: int) -> tuple:
        if self._natseq is None:
            g = self.game
            seq: list[tuple] = [()] * g.num_nodes
            for n in range(1, g.num_nodes):
                p = g.parent[n]
                seq[n] = seq[p] + (int(g.action_index[n]),) if g.owners[p] == CHANCE and not g.dummy[p] else seq[p]
            self._natseq = seq
        return self._natseq[node]

    def table(self, iid: str) -> LeafTable:
        if iid in self._tables:
            return self._tables[iid]
        g = self.game
        i = g.infoset_owner[iid]
        members = np.asarray(g.infoset_nodes[iid], dtype=np.int64)
        other = self.other_signature(i)
        c0 = g.chance_reach
        tot0 = c0[members].sum()
        rows = []
        leaves_all = g.leaves
        for s in members:
            lo, hi = np.searchsorted(leaves_all, [s, g.subtree_end[s]])
            ratio = c0[s] / tot0 if tot0 > 0 else 1.0 / len(members)
            for z in leaves_all[lo:hi]:
                own_f, nat_f = [], []
                prob = 1.0
                n = int(z)
                while n != s:
                    p = g.parent[n]
                    if not g.dummy[p]:
                        label = g.actions[p][g.action_index[n]]
                        if p == s:
                            # the set itself: identical on both sides once merged
                            own_f.append(("@", label))
                        elif g.owners[p] == i:
                            own_f.append((self.labels[g.infosets[p]], label))
                        elif g.owners[p] == CHANCE:
                            nat_f.append(label)
                    if g.owners[p] == CHANCE:
                        prob *= g.edge_chance[n]
                    n = p
                key = (int(other[z]), tuple(reversed(own_f)), tuple(reversed(nat_f)))
                rows.append((key, self.nature_sequence(int(z)), int(z), int(s), prob, ratio))
        rows.sort(key=lambda r: (r[0], r[1]))
        tab = LeafTable(
            infoset=iid,
            nodes=members,
            leaves=np.array([r[2] for r in rows], dtype=np.int64),
            keys=[r[0] for r in rows],
            top=np.array([r[3] for r in rows], dtype=np.int64),
            cond0=np.array([r[4] for r in rows]),
            ratio=np.array([r[5] for r in rows]),
        )
        self._tables[iid] = tab
        return tab

    # bijection and errors ---------------------------------------------------
    def bijection(self, a: str, b: str) -> tuple[LeafTable, LeafTable]:
        """Key-aligned leaf tables of I and Ĭ; raises CrswfError if keys differ."""
        ta, tb = self.table(a), self.table(b)
        if ta.keys != tb.keys:
            if len(ta.keys) != len(tb.keys):
                raise CrswfError(f"sets {a!r} and {b!r} have different leaf counts "
                                 f"({len(ta.keys)} vs {len(tb.keys)})")
            k = next(j for j, (x, y) in enumerate(zip(ta.keys, tb.keys)) if x != y)
            z = self.game.ids[ta.leaves[k]]
            raise CrswfError(f"no bijection between {a!r} and {b!r}: leaf {z!r} has no "
                             f"counterpart with matching action sequences")
        return ta, tb

    def pair_errors(self, a: str, b: str, delta: Fraction | float = 1) -> PairErrors:
        g = self.game
        ta, tb = self.bijection(a, b)
        d = float(delta)
        u = g.utils
        leaf_r = np.abs(u[ta.leaves] - d * u[tb.leaves]).max(axis=1)
        leaf_0 = np.abs(ta.cond0 - tb.cond0)
        leaf_d = np.abs(ta.ratio - tb.ratio)
        lr, l0, lub, R, S0, UB = self._scratch
        lr[ta.leaves] = leaf_r
        l0[ta.leaves] = leaf_0
        lub[ta.leaves] = u[ta.leaves].max(axis=1) + leaf_r
        roots = ta.nodes
        agg = _kernels.aggregate_errors(roots, g.subtree_end[roots], g.owner, g.child_ptr, g.child_idx,
                                        g.edge_chance, lr, l0, lub, R, S0, UB)
        node_d = np.zeros(len(roots))
        pos = np.searchsorted(roots, ta.top)
        np.maximum.at(node_d, pos, leaf_d)
        ubar = agg[:, 2]
        return PairErrors(
            infoset=a, other=b, delta=delta,
            leaves=ta.leaves, mapped=tb.leaves,
            leaf_reward=leaf_r, leaf_prob=leaf_0,
            nodes=roots,
            node_reward=agg[:, 0],
            node_transition=agg[:, 1] * ubar,
            node_dist=node_d,
            node_ubar=ubar,
            distribution=float(np.dot(node_d, ubar)),
        )

    def delta_for(self, a: str, b: str, cls_members: list[str]) -> Fraction:
        d = self.amap.explicit_delta(a, b)
        if d is not None:
            return d
        if self.amap.default_delta == "one" or a == b:
            return Fraction(1)
        # choose on the canonical direction and invert for the other
        if cls_members.index(a) < cls_members.index(b):
            return choose_delta(self, a, b).delta
        return 1 / choose_delta(self, b, a).delta


# ------------------------------------------------------------- choose delta
@dataclass
class DeltaChoice:
    delta: Fraction
    value: float
    flagged: bool = False


def choose_delta(ctx: CrswfContext, a: str, b: str) -> DeltaChoice:
    """δ > 0 minimizing max_z max_i |u_i(z) − δ·u_i(φ(z))| (ties: smallest δ)."""
    ta, tb = ctx.bijection(a, b)
    g = ctx.game
    pieces = set()
    for z, y in zip(ta.leaves, tb.leaves):
        for x, w in zip(g.utilities[z], g.utilities[y]):
            pieces.add((x, w))
    return _minimax_delta(sorted(pieces))


def _minimax_delta(pieces: list[tuple[Fraction, Fraction]]) -> DeltaChoice:
    def f(d):
        return max(abs(x - d * w) for x, w in pieces)

    if not any(w > 0 for _, w in pieces) or not any(x > 0 for x, _ in pieces):
        bad = any(x > 0 for x, _ in pieces) or any(w > 0 for _, w in pieces)
        return DeltaChoice(Fraction(1), float(f(Fraction(1))), flagged=bad)
    # g(d) = max(w d − x) rises, h(d) = max(x − w d) falls; the minimum of
    # max(g, h) is where they cross, found by bisection on the float envelope
    xs = np.array([float(x) for x, _ in pieces])
    ws = np.array([float(w) for _, w in pieces])
    lo, hi = 0.0, 1.0
    while (ws * hi - xs).max() < (xs - ws * hi).max():
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (ws * mid - xs).max() < (xs - ws * mid).max():
            lo = mid
        else:
            hi = mid
    # the crossing is between the active rising and falling lines
    cands = set()
    for pt in (lo, hi):
        jr = int(np.argmax(ws * pt - xs))
        jf = int(np.argmax(xs - ws * pt))
        x1, w1 = pieces[jr]
        x2, w2 = pieces[jf]
        if w1 + w2 > 0:
            cands.add((x1 + x2) / (w1 + w2))
    for x, w in pieces:
        if w > 0 and abs(float(x / w) - lo) <= 1e-9 * max(1.0, lo):
            cands.add(x / w)
    cands = [c for c in cands if c > 0] or [Fraction(1)]
    best = min(cands, key=lambda c: (f(c), c))
    m = f(best)
    # smallest δ with the same optimal value
    low = max([(x - m) / w for x, w in pieces if w > 0] + [Fraction(0)])
    if low > 0 and f(low) == m:
        best = min(best, low)
    return DeltaChoice(best, float(m))


def choose_delta_weighted(ctx: CrswfContext, a: str, b: str, weights: np.ndarray | None = None,
                          both: bool = True) -> DeltaChoice:
    """δ minimizing the pair's bound contribution 2·Σ w(s)(ε^0+ε^R) + ε^D.

    With ``both`` the objective is the max over the two directions (δ and 1/δ).
    The objective is convex and piecewise linear in δ; a golden-section search
    is snapped to the nearest leaf-utility ratio when that is at least as good.
    """
    wa = nature_weights(ctx.game, a) if weights is None else weights
    wb = nature_weights(ctx.game, b)

    def f(d: float) -> float:
        v = ctx.pair_errors(a, b, d).psi_term(wa)
        if both:
            v = max(v, ctx.pair_errors(b, a, 1.0 / d).psi_term(wb))
        return v

    ta, tb = ctx.bijection(a, b)
    ua, ub = ctx.game.utils[ta.leaves], ctx.game.utils[tb.leaves]
    ratios = sorted({Fraction(x) / Fraction(y)
                     for za, zb in zip(ta.leaves, tb.leaves)
                     for x, y in zip(ctx.game.utilities[za], ctx.game.utilities[zb]) if x > 0 and y > 0})
    if not ratios:
        return DeltaChoice(Fraction(1), f(1.0), flagged=bool(ua.any() or ub.any()))
    lo, hi = float(ratios[0]) * 0.5, float(ratios[-1]) * 2.0
    phi = (5 ** 0.5 - 1) / 2
    x1, x2 = hi - phi * (hi - lo), lo + phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(80):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = f(x2)
    cands = [(f1, Fraction(x1))] + [(f(float(r)), r) for r in ratios]
    val, best = min(cands, key=lambda t: (t[0], t[1]))
    return DeltaChoice(best, val)


def nature_weights(game: GameTree, iid: str) -> np.ndarray:
    """π₀(s)/π₀(I) over the members of I (uniform if π₀(I)=0)."""
    nodes = list(game.infoset_nodes[iid])
    c0 = game.chance_reach[nodes]
    tot = c0.sum()
    return c0 / tot if tot > 0 else np.full(len(nodes), 1.0 / len(nodes))


# ------------------------------------------------------------- verification
@dataclass
class ErrorReport:
    """Errors of every ordered intra-class pair of an abstraction."""

    game: GameTree
    amap: AbstractionMap
    pairs: dict[tuple[str, str], PairErrors]
    classes: dict[str, list[str]]

    def partners(self, iid: str) -> list[str]:
        return self.classes[self.amap.abstract_of(iid)]

    def pair(self, a: str, b: str) -> PairErrors:
        return self.pairs[(a, b)]

    def is_lossless(self, tol: float = 0.0) -> bool:
        return all(p.node_errors.max(initial=0) <= tol and p.distribution <= tol
                   for p in self.pairs.values())

    def summary_rows(self) -> list[tuple[str, str, float, float, float, float]]:
        """(I, Ĭ, δ, max transition, max reward, distribution) per ordered pair."""
        return [(a, b, float(p.delta), float(p.node_transition.max(initial=0)),
                 float(p.node_reward.max(initial=0)), p.distribution)
                for (a, b), p in self.pairs.items()]


def verify_crswf(original: GameTree, amap: AbstractionMap,
                 ctx: CrswfContext | None = None) -> ErrorReport:
    """Check Definition-3 structure of every merged class and compute all errors."""
    from .efg_core import is_perfect_recall

    ok, bad = is_perfect_recall(original)
    if not ok:
        raise CrswfError(f"original game lacks perfect recall at {bad[0]!r}")
    ctx = ctx or CrswfContext(original, amap)
    classes = amap.members(original)
    pairs: dict[tuple[str, str], PairErrors] = {}
    for aid, members in classes.items():
        if len(members) < 2:
            continue
        for a in members:
            for b in members:
                if a != b:
                    pairs[(a, b)] = ctx.pair_errors(a, b, ctx.delta_for(a, b, members))
    return ErrorReport(original, amap, pairs, classes)


def pair_mergeable(ctx: CrswfContext, a: str, b: str) -> bool:
    try:
        ctx.bijection(a, b)
    except CrswfError:
        return False
    return True


def iter_pairs(members: Iterable[str]):
    ms = list(members)
    for a in ms:
        for b in ms:
            if a != b:
                yield a, b
