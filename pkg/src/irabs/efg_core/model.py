"""Immutable game tree with exact-rational nature probabilities and utilities."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

CHANCE = 0
LEAF = -1


class GameError(ValueError):
    """Raised when a game description violates a structural invariant."""


@dataclass
class RawNode:
    """Mutable node description used while building a game.

    ``owner`` is a player index (1..N), CHANCE or LEAF.
    """

    id: str
    owner: int
    infoset: str | None = None
    actions: list[str] = field(default_factory=list)
    children: list[str] = field(default_factory=list)
    probs: list[Fraction] = field(default_factory=list)
    utils: tuple[Fraction, ...] | None = None
    dummy: bool = False


@dataclass(frozen=True)
class CompactTree:
    """Solver view of a tree: same nodes minus unary dummy nature nodes."""

    nodes: np.ndarray
    owner: np.ndarray
    ptr: np.ndarray
    cidx: np.ndarray
    echance: np.ndarray
    node_infoset: np.ndarray
    utils: np.ndarray


@dataclass(frozen=True)
class GameTree:
    """Extensive-form game stored in preorder (node 0 is the root).

    Exact data lives in tuples so two trees compare equal iff they describe the
    same game. Float arrays used by the solvers are derived lazily.
    """

    name: str
    num_players: int
    ids: tuple[str, ...]
    owners: tuple[int, ...]
    infosets: tuple[str | None, ...]
    actions: tuple[tuple[str, ...], ...]
    children: tuple[tuple[int, ...], ...]
    probs: tuple[tuple[Fraction, ...], ...]
    utilities: tuple[tuple[Fraction, ...] | None, ...]
    dummy: tuple[bool, ...]
    shift: tuple[Fraction, ...]

    # ------------------------------------------------------------------ sizes
    @property
    def num_nodes(self) -> int:
        return len(self.ids)

    @property
    def players(self) -> range:
        return range(1, self.num_players + 1)

    @cached_property
    def index(self) -> dict[str, int]:
        return {nid: k for k, nid in enumerate(self.ids)}

    # ------------------------------------------------------------ flat arrays
    @cached_property
    def owner(self) -> np.ndarray:
        return np.asarray(self.owners, dtype=np.int64)

    @cached_property
    def parent(self) -> np.ndarray:
        par = np.full(self.num_nodes, -1, dtype=np.int64)
        for n, ch in enumerate(self.children):
            for c in ch:
                par[c] = n
        return par

    @cached_property
    def action_index(self) -> np.ndarray:
        """Position of each node among its parent's children (-1 at the root)."""
        idx = np.full(self.num_nodes, -1, dtype=np.int64)
        for ch in self.children:
            for a, c in enumerate(ch):
                idx[c] = a
        return idx

    @cached_property
    def depth(self) -> np.ndarray:
        d = np.zeros(self.num_nodes, dtype=np.int64)
        par = self.parent
        for n in range(1, self.num_nodes):
            d[n] = d[par[n]] + 1
        return d

    @cached_property
    def subtree_end(self) -> np.ndarray:
        """Exclusive end of each node's subtree range in preorder."""
        end = np.arange(1, self.num_nodes + 1, dtype=np.int64)
        for n in range(self.num_nodes - 1, -1, -1):
            if self.children[n]:
                end[n] = end[self.children[n][-1]]
        return end

    @cached_property
    def child_ptr(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([len(c) for c in self.children])]).astype(np.int64)

    @cached_property
    def child_idx(self) -> np.ndarray:
        return np.fromiter((c for ch in self.children for c in ch), dtype=np.int64)

    @cached_property
    def edge_chance(self) -> np.ndarray:
        """Nature probability of the edge entering each node (1.0 below player nodes)."""
        p = np.ones(self.num_nodes)
        for n, ch in enumerate(self.children):
            if self.owners[n] == CHANCE:
                for c, q in zip(ch, self.probs[n]):
                    p[c] = float(q)
        return p

    @cached_property
    def utils(self) -> np.ndarray:
        u = np.zeros((self.num_nodes, self.num_players))
        for n, vals in enumerate(self.utilities):
            if vals is not None:
                u[n] = [float(v) for v in vals]
        return u

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.owner == LEAF)

    @cached_property
    def chance_reach(self) -> np.ndarray:
        """π₀(s) for every node."""
        r = np.ones(self.num_nodes)
        par, ec = self.parent, self.edge_chance
        for d in self.depth_levels[1:]:
            r[d] = r[par[d]] * ec[d]
        return r

    @cached_property
    def depth_levels(self) -> list[np.ndarray]:
        order = np.argsort(self.depth, kind="stable")
        counts = np.bincount(self.depth)
        return np.split(order, np.cumsum(counts)[:-1])

    @cached_property
    def max_utility(self) -> float:
        return float(self.utils[self.leaves].max()) if len(self.leaves) else 0.0

    @cached_property
    def compact(self) -> "CompactTree":
        """Preorder arrays with the unary dummy nature nodes spliced out."""
        keep = np.array([not (self.dummy[n] and self.owners[n] == CHANCE) for n in range(self.num_nodes)])
        new_id = np.cumsum(keep) - 1

        def resolve(c: int) -> int:
            while not keep[c]:
                c = self.children[c][0]
            return c

        ptr = [0]
        cidx: list[int] = []
        echance: list[float] = []
        ec = self.edge_chance
        kept = np.flatnonzero(keep)
        ech = np.ones(len(kept))
        for n in kept:
            for c in self.children[n]:
                cidx.append(int(new_id[resolve(c)]))
                ech[new_id[resolve(c)]] = ec[c]
            ptr.append(len(cidx))
        return CompactTree(
            nodes=kept,
            owner=self.owner[kept],
            ptr=np.asarray(ptr, dtype=np.int64),
            cidx=np.asarray(cidx, dtype=np.int64),
            echance=ech,
            node_infoset=self.node_infoset[kept],
            utils=self.utils[kept],
        )

    # ------------------------------------------------------- information sets
    @cached_property
    def infoset_names(self) -> tuple[str, ...]:
        """Player information sets in order of first appearance."""
        seen: dict[str, None] = {}
        for n, iid in enumerate(self.infosets):
            if iid is not None and self.owners[n] > 0:
                seen.setdefault(iid, None)
        return tuple(seen)

    @cached_property
    def infoset_index(self) -> dict[str, int]:
        return {iid: k for k, iid in enumerate(self.infoset_names)}

    @cached_property
    def node_infoset(self) -> np.ndarray:
        """Information-set index per node (-1 for chance nodes and leaves)."""
        out = np.full(self.num_nodes, -1, dtype=np.int64)
        idx = self.infoset_index
        for n, iid in enumerate(self.infosets):
            if iid is not None and self.owners[n] > 0:
                out[n] = idx[iid]
        return out

    @cached_property
    def infoset_nodes(self) -> dict[str, tuple[int, ...]]:
        groups: dict[str, list[int]] = {iid: [] for iid in self.infoset_names}
        for n, iid in enumerate(self.infosets):
            if iid is not None and self.owners[n] > 0:
                groups[iid].append(n)
        return {k: tuple(v) for k, v in groups.items()}

    @cached_property
    def infoset_owner(self) -> dict[str, int]:
        return {iid: self.owners[nodes[0]] for iid, nodes in self.infoset_nodes.items()}

    @cached_property
    def infoset_actions(self) -> dict[str, tuple[str, ...]]:
        return {iid: self.actions[nodes[0]] for iid, nodes in self.infoset_nodes.items()}

    @cached_property
    def action_offset(self) -> np.ndarray:
        """Offsets of each information set's actions in a flat strategy vector."""
        sizes = [len(self.infoset_actions[iid]) for iid in self.infoset_names]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    def infosets_of(self, player: int) -> list[str]:
        return [iid for iid in self.infoset_names if self.infoset_owner[iid] == player]

    def with_infosets(self, mapping: dict[str, str], name: str | None = None) -> "GameTree":
        """Same tree with information sets relabelled through ``mapping``."""
        new = tuple(None if iid is None else mapping.get(iid, iid) for iid in self.infosets)
        tree = GameTree(
            name=name or self.name,
            num_players=self.num_players,
            ids=self.ids,
            owners=self.owners,
            infosets=new,
            actions=self.actions,
            children=self.children,
            probs=self.probs,
            utilities=self.utilities,
            dummy=self.dummy,
            shift=self.shift,
        )
        _check_infosets(tree)
        return tree

    # ----------------------------------------------------------- sequences
    def path(self, node: int) -> list[int]:
        """Nodes from the root to ``node`` inclusive."""
        out = []
        par = self.parent
        while node >= 0:
            out.append(node)
            node = par[node]
        return out[::-1]

    def sequence(
        self,
        node: int,
        include: Iterable[int] | None = None,
        start: int = 0,
        labels: dict[str, str] | None = None,
    ) -> tuple[tuple[str, str], ...]:
        """Sequence X(s) of (information set, action) pairs above ``node``.

        ``include`` filters by owner (nature pairs use the node id as set id);
        ``start`` restricts to the part strictly below that ancestor's parent,
        i.e. the future sequence from ``start`` onwards. Dummy nodes are skipped.
        ``labels`` relabels information sets (e.g. abstract ids).
        """
        keep = None if include is None else set(include)
        path = self.path(node)
        if start:
            path = path[path.index(start):]
        seq = []
        for parent, child in zip(path, path[1:]):
            if self.dummy[parent]:
                continue
            own = self.owners[parent]
            if keep is not None and own not in keep:
                continue
            label = self.actions[parent][self.action_index[child]]
            if own == CHANCE:
                seq.append(("~nature", label))
            else:
                iid = self.infosets[parent]
                if labels is not None:
                    iid = labels.get(iid, iid)
                seq.append((iid, label))
        return tuple(seq)


# ---------------------------------------------------------------- building
def _check_infosets(tree: GameTree) -> None:
    owner: dict[str, int] = {}
    acts: dict[str, tuple[str, ...]] = {}
    for n, iid in enumerate(tree.infosets):
        own = tree.owners[n]
        if own <= 0 or iid is None:
            continue
        if iid in owner:
            if owner[iid] != own:
                raise GameError(f"mixed-owner information set {iid!r}")
            if acts[iid] != tree.actions[n]:
                raise GameError(f"information set {iid!r} has nodes with different action labels")
        else:
            owner[iid] = own
            acts[iid] = tree.actions[n]


def build_game(
    name: str,
    num_players: int,
    nodes: Sequence[RawNode],
    shift: Sequence[Fraction] | None = None,
) -> GameTree:
    """Validate raw nodes and produce a normalized GameTree.

    Normalization: a nature root gets a dummy unary player-1 parent, leaves are
    padded to uniform depth with dummy unary nature nodes, and negative
    utilities are shifted per player (the applied shift is accumulated).
    """
    if num_players < 1:
        raise GameError("game needs at least one player")
    by_id: dict[str, RawNode] = {}
    for raw in nodes:
        if raw.id in by_id:
            raise GameError(f"duplicate node id {raw.id!r}")
        by_id[raw.id] = raw
    parent_of: dict[str, str] = {}
    for raw in nodes:
        if raw.owner == LEAF:
            if raw.children:
                raise GameError(f"leaf {raw.id!r} has children")
            if raw.utils is None or len(raw.utils) != num_players:
                raise GameError(f"leaf {raw.id!r} needs {num_players} utilities")
            continue
        if raw.owner != CHANCE and not 1 <= raw.owner <= num_players:
            raise GameError(f"node {raw.id!r} has invalid owner {raw.owner}")
        if not raw.children:
            raise GameError(f"internal node {raw.id!r} has no actions")
        if len(set(raw.actions)) != len(raw.actions):
            raise GameError(f"node {raw.id!r} has duplicate action labels")
        if raw.owner > 0 and not raw.infoset:
            raise GameError(f"player node {raw.id!r} lacks an information set")
        for c in raw.children:
            if c not in by_id:
                raise GameError(f"dangling node reference {c!r} (child of {raw.id!r})")
            if c in parent_of:
                raise GameError(f"node {c!r} has two parents")
            parent_of[c] = raw.id
        if raw.owner == CHANCE:
            if len(raw.probs) != len(raw.children):
                raise GameError(f"chance node {raw.id!r} needs a probability per edge")
            if any(p < 0 for p in raw.probs):
                raise GameError(f"negative probability at chance node {raw.id!r}")
            if sum(raw.probs, Fraction(0)) != 1:
                raise GameError(f"probability-sum violation at chance node {raw.id!r}")
    roots = [raw.id for raw in nodes if raw.id not in parent_of]
    if len(roots) != 1:
        raise GameError(f"expected exactly one root, found {len(roots)}")
    root = roots[0]
    if by_id[root].owner == LEAF:
        raise GameError("root must be a decision node")
    if by_id[root].owner == CHANCE:
        rid = "~root"
        while rid in by_id:
            rid = "~" + rid
        new_root = RawNode(rid, 1, infoset=rid, actions=["~"], children=[root], dummy=True)
        by_id[rid] = new_root
        root = rid

    # preorder traversal, padding short leaves
    order: list[RawNode] = []
    stack = [(root, 0)]
    depth_of: dict[str, int] = {}
    while stack:
        nid, d = stack.pop()
        raw = by_id[nid]
        depth_of[nid] = d
        order.append(raw)
        for c in reversed(raw.children):
            stack.append((c, d + 1))
    if len(order) != len(by_id):
        raise GameError("game graph is not a tree (unreachable nodes or cycles)")
    max_depth = max(depth_of[r.id] for r in order if r.owner == LEAF)

    sh = [Fraction(0)] * num_players if shift is None else [Fraction(s) for s in shift]
    mins = [min(r.utils[i] for r in order if r.owner == LEAF) for i in range(num_players)]
    extra = [max(Fraction(0), -m) for m in mins]

    ids: list[str] = []
    owners: list[int] = []
    infosets: list[str | None] = []
    actions: list[tuple[str, ...]] = []
    children: list[list[int]] = []
    probs: list[tuple[Fraction, ...]] = []
    utilities: list[tuple[Fraction, ...] | None] = []
    dummy: list[bool] = []

    def add(nid, own, iid, acts, prb, ut, dm) -> int:
        ids.append(nid)
        owners.append(own)
        infosets.append(iid)
        actions.append(tuple(acts))
        children.append([])
        probs.append(tuple(prb))
        utilities.append(ut)
        dummy.append(dm)
        return len(ids) - 1

    # iterative preorder with explicit parent links
    stack2: list[tuple[str, int]] = [(root, -1)]
    while stack2:
        nid, par = stack2.pop()
        raw = by_id[nid]
        if raw.owner == LEAF:
            pad = max_depth - depth_of[nid]
            for k in range(pad):
                pid = f"{nid}~pad{k + 1}"
                n = add(pid, CHANCE, None, ["~"], [Fraction(1)], None, True)
                if par >= 0:
                    children[par].append(n)
                par = n
            ut = tuple(u + e for u, e in zip(raw.utils, extra))
            n = add(nid, LEAF, None, [], [], ut, False)
        else:
            iid = raw.infoset if raw.owner > 0 else None
            n = add(nid, raw.owner, iid, raw.actions, raw.probs if raw.owner == CHANCE else [],
                    None, raw.dummy)
            for c in reversed(raw.children):
                stack2.append((c, n))
        if par >= 0:
            children[par].append(n)

    tree = GameTree(
        name=name,
        num_players=num_players,
        ids=tuple(ids),
        owners=tuple(owners),
        infosets=tuple(infosets),
        actions=tuple(actions),
        children=tuple(tuple(c) for c in children),
        probs=tuple(probs),
        utilities=tuple(utilities),
        dummy=tuple(dummy),
        shift=tuple(s + e for s, e in zip(sh, extra)),
    )
    _check_infosets(tree)
    return tree


def tree_to_raw(tree: GameTree) -> list[RawNode]:
    """Inverse of build_game's flattening (keeps dummy nodes as ordinary nodes)."""
    out = []
    for n in range(tree.num_nodes):
        out.append(RawNode(
            id=tree.ids[n],
            owner=tree.owners[n],
            infoset=tree.infosets[n],
            actions=list(tree.actions[n]),
            children=[tree.ids[c] for c in tree.children[n]],
            probs=list(tree.probs[n]),
            utils=tree.utilities[n],
            dummy=tree.dummy[n],
        ))
    return out
