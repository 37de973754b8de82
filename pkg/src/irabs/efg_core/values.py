"""Strategies, reach probabilities, values, best responses and regrets."""
from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass, field

import numpy as np

from .model import CHANCE, LEAF, GameError, GameTree


@dataclass
class StrategyProfile:
    """Behavioral strategy: information-set id -> distribution over its actions."""

    probs: dict[str, np.ndarray]

    @classmethod
    def uniform(cls, game: GameTree) -> "StrategyProfile":
        return cls({iid: np.full(len(a), 1.0 / len(a)) for iid, a in game.infoset_actions.items()})

    @classmethod
    def from_flat(cls, game: GameTree, vec: np.ndarray) -> "StrategyProfile":
        off = game.action_offset
        return cls({iid: np.array(vec[off[k]:off[k + 1]], dtype=float)
                    for k, iid in enumerate(game.infoset_names)})

    def flat(self, game: GameTree) -> np.ndarray:
        off = game.action_offset
        out = np.empty(off[-1])
        for k, iid in enumerate(game.infoset_names):
            try:
                p = self.probs[iid]
            except KeyError:
                raise GameError(f"strategy has no entry for information set {iid!r}") from None
            if len(p) != off[k + 1] - off[k]:
                raise GameError(f"strategy for {iid!r} has wrong length")
            out[off[k]:off[k + 1]] = p
        return out

    def to_csv(self, game: GameTree) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["infoset_id", "action_label", "probability"])
        for iid in game.infoset_names:
            for label, p in zip(game.infoset_actions[iid], self.probs[iid]):
                w.writerow([iid, label, format(float(p), ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, game: GameTree, text: str) -> "StrategyProfile":
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] == ["infoset_id", "action_label", "probability"]:
            rows = rows[1:]
        table: dict[str, dict[str, float]] = {}
        for row in rows:
            if not row:
                continue
            if len(row) != 3:
                raise GameError(f"bad strategy row {row!r}")
            table.setdefault(row[0], {})[row[1]] = float(row[2])
        probs = {}
        for iid, acts in game.infoset_actions.items():
            if iid not in table:
                raise GameError(f"strategy file lacks information set {iid!r}")
            try:
                probs[iid] = np.array([table[iid][a] for a in acts])
            except KeyError as exc:
                raise GameError(f"strategy for {iid!r} lacks action {exc.args[0]!r}") from None
        return cls(probs)


def edge_probs(game: GameTree, sigma: StrategyProfile | np.ndarray) -> np.ndarray:
    """Probability of the edge entering each node under σ (and σ₀)."""
    flat = sigma if isinstance(sigma, np.ndarray) else sigma.flat(game)
    par = game.parent
    ep = game.edge_chance.copy()
    mask = np.zeros(game.num_nodes, dtype=bool)
    mask[1:] = game.owner[par[1:]] > 0
    nodes = np.flatnonzero(mask)
    pi = game.node_infoset[par[nodes]]
    ep[nodes] = flat[game.action_offset[pi] + game.action_index[nodes]]
    return ep


@dataclass
class ReachTable:
    """Per-node reach split by contributor (column 0 = nature, j = player j)."""

    by_player: np.ndarray
    game: GameTree = field(repr=False)

    @property
    def total(self) -> np.ndarray:
        return self.by_player.prod(axis=1)

    @property
    def chance(self) -> np.ndarray:
        return self.by_player[:, 0]

    def opponents(self, i: int) -> np.ndarray:
        """π_{-i}(s): every factor except player i's (nature included)."""
        cols = [j for j in range(self.by_player.shape[1]) if j != i]
        return self.by_player[:, cols].prod(axis=1)

    def own(self, i: int) -> np.ndarray:
        return self.by_player[:, i]

    def infoset(self, iid: str, i: int | None = None) -> float:
        """π^σ(I), or π^σ_{-i}(I) when i is given."""
        nodes = list(self.game.infoset_nodes[iid])
        vals = self.total if i is None else self.opponents(i)
        return float(vals[nodes].sum())


def compute_reach(game: GameTree, sigma: StrategyProfile | np.ndarray) -> ReachTable:
    ep = edge_probs(game, sigma)
    par = game.parent
    out = np.ones((game.num_nodes, game.num_players + 1))
    for lvl in game.depth_levels[1:]:
        parents = par[lvl]
        out[lvl] = out[parents]
        who = game.owner[parents]
        out[lvl, who] *= ep[lvl]
    return ReachTable(out, game)


def node_values(game: GameTree, sigma: StrategyProfile | np.ndarray) -> np.ndarray:
    """V_i^σ(s) for all nodes; column i-1 holds player i."""
    ep = edge_probs(game, sigma)
    v = game.utils.copy()
    v[game.owner != LEAF] = 0.0
    par = game.parent
    for lvl in reversed(game.depth_levels[1:]):
        np.add.at(v, par[lvl], v[lvl] * ep[lvl, None])
    return v


@dataclass
class InfosetValue:
    value: float
    kind: str
    flagged: bool = False


def counterfactual_value(game: GameTree, sigma: StrategyProfile, iid: str,
                         player: int | None = None) -> InfosetValue:
    i = game.infoset_owner[iid] if player is None else player
    reach = compute_reach(game, sigma).opponents(i)
    v = node_values(game, sigma)[:, i - 1]
    nodes = list(game.infoset_nodes[iid])
    tot = reach[nodes].sum()
    if tot <= 0:
        return InfosetValue(0.0, "counterfactual")
    return InfosetValue(float((reach[nodes] * v[nodes]).sum() / tot), "counterfactual")


def imperfect_value(game: GameTree, sigma: StrategyProfile, iid: str,
                    player: int | None = None) -> InfosetValue:
    """W(I') with full-reach weights; zero and flagged when π^σ(I')=0."""
    i = game.infoset_owner[iid] if player is None else player
    reach = compute_reach(game, sigma).total
    v = node_values(game, sigma)[:, i - 1]
    nodes = list(game.infoset_nodes[iid])
    tot = reach[nodes].sum()
    if tot <= 0:
        return InfosetValue(0.0, "imperfect", flagged=True)
    return InfosetValue(float((reach[nodes] * v[nodes]).sum() / tot), "imperfect")


# ------------------------------------------------------------ signatures
def own_signatures(game: GameTree) -> np.ndarray:
    """Interned X_i(s) per node for every player (column i-1)."""
    cache = _cache(game)
    if "own_sig" in cache:
        return cache["own_sig"]
    sig = np.zeros((game.num_nodes, game.num_players), dtype=np.int64)
    table: dict[tuple, int] = {}
    for n in range(1, game.num_nodes):
        p = game.parent[n]
        sig[n] = sig[p]
        own = game.owners[p]
        if own > 0 and not game.dummy[p]:
            key = (int(sig[p, own - 1]), game.infosets[p], game.actions[p][game.action_index[n]])
            sig[n, own - 1] = table.setdefault(key, len(table) + 1)
    cache["own_sig"] = sig
    return sig


def _cache(game: GameTree) -> dict:
    d = game.__dict__
    if "_scratch" not in d:
        d["_scratch"] = {}
    return d["_scratch"]


def is_perfect_recall(game: GameTree) -> tuple[bool, tuple[str, int, int] | None]:
    """Whether X_i agrees across every information set; else one violating (I, s1, s2)."""
    sig = own_signatures(game)
    for iid, nodes in game.infoset_nodes.items():
        i = game.infoset_owner[iid]
        col = sig[list(nodes), i - 1]
        bad = np.flatnonzero(col != col[0])
        if len(bad):
            return False, (iid, game.ids[nodes[0]], game.ids[nodes[bad[0]]])
    return True, None


def perfect_recall_sets(game: GameTree) -> set[str]:
    sig = own_signatures(game)
    out = set()
    for iid, nodes in game.infoset_nodes.items():
        col = sig[list(nodes), game.infoset_owner[iid] - 1]
        if np.all(col == col[0]):
            out.add(iid)
    return out


# -------------------------------------------------------- level schedule
@dataclass
class Schedule:
    """Bottom-up processing order for player i's information-set level DPs.

    Each level lists nature/opponent nodes (whose children are all on lower
    levels) and player-i information sets (all member nodes' children lower).
    """

    player: int
    levels: list[tuple[np.ndarray, list[str]]]


def schedule(game: GameTree, player: int) -> Schedule:
    cache = _cache(game)
    key = ("schedule", player)
    if key in cache:
        return cache[key]
    level = np.full(game.num_nodes, -1, dtype=np.int64)
    set_level: dict[str, int] = {}
    owners, children = game.owners, game.children
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10000))

    def lev(n: int) -> int:
        if level[n] >= 0:
            return level[n]
        if owners[n] == LEAF:
            level[n] = 0
        elif owners[n] == player:
            level[n] = set_lev(game.infosets[n])
        else:
            level[n] = 1 + max(lev(c) for c in children[n])
        return level[n]

    def set_lev(iid: str) -> int:
        if iid not in set_level:
            set_level[iid] = -2
            val = 1 + max(lev(c) for s in game.infoset_nodes[iid] for c in children[s])
            set_level[iid] = val
        elif set_level[iid] == -2:
            raise GameError(f"information set {iid!r} precedes itself; no bottom-up order exists")
        return set_level[iid]

    # iterate bottom-up by depth so recursion stays shallow
    for lvl in reversed(game.depth_levels):
        for n in lvl:
            lev(int(n))
    sys.setrecursionlimit(old)
    top = int(level.max())
    node_lists: list[list[int]] = [[] for _ in range(top + 1)]
    set_lists: list[list[str]] = [[] for _ in range(top + 1)]
    for n in range(game.num_nodes):
        if owners[n] != LEAF and owners[n] != player:
            node_lists[level[n]].append(n)
    for iid, lv in set_level.items():
        set_lists[lv].append(iid)
    sched = Schedule(player, [(np.array(node_lists[k], dtype=np.int64), sorted(set_lists[k], key=game.infoset_index.get))
                              for k in range(1, top + 1)])
    cache[key] = sched
    return sched


def best_response(game: GameTree, sigma: StrategyProfile, player: int) -> tuple[StrategyProfile, float]:
    """Pure best response of ``player`` against σ and its value at the root.

    Ties between actions resolve to the lowest action index.
    """
    ep = edge_probs(game, sigma)
    opp = compute_reach(game, sigma).opponents(player)
    v = np.zeros(game.num_nodes)
    leaves = game.leaves
    v[leaves] = game.utils[leaves, player - 1]
    ptr, cidx = game.child_ptr, game.child_idx
    br: dict[str, np.ndarray] = {}
    for nodes, sets in schedule(game, player).levels:
        if len(nodes):
            _sum_children(game, nodes, v, ep)
        for iid in sets:
            members = np.asarray(game.infoset_nodes[iid])
            na = len(game.infoset_actions[iid])
            kids = cidx[ptr[members][:, None] + np.arange(na)]
            q = (opp[members, None] * v[kids]).sum(axis=0)
            a = int(np.argmax(q))
            v[members] = v[kids[:, a]]
            dist = np.zeros(na)
            dist[a] = 1.0
            br[iid] = dist
    profile = StrategyProfile({iid: (br[iid] if iid in br else p) for iid, p in sigma.probs.items()})
    return profile, float(v[0])


def _sum_children(game: GameTree, nodes: np.ndarray, v: np.ndarray, weights: np.ndarray) -> None:
    ptr, cidx = game.child_ptr, game.child_idx
    counts = ptr[nodes + 1] - ptr[nodes]
    starts = np.repeat(ptr[nodes], counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    kids = cidx[starts + offs]
    v[nodes] = np.bincount(np.repeat(np.arange(len(nodes)), counts),
                           weights=weights[kids] * v[kids], minlength=len(nodes))


def full_game_regrets(game: GameTree, sigma: StrategyProfile) -> dict[int, float]:
    """Best-response value minus current value at the root, per player."""
    vals = node_values(game, sigma)[0]
    return {i: max(0.0, best_response(game, sigma, i)[1] - vals[i - 1]) for i in game.players}


# ---------------------------------------------------------------- regrets
@dataclass
class RegretReport:
    per_action: dict[str, np.ndarray]
    immediate: dict[str, float]
    opp_reach: dict[str, float]
    flagged: set[str] = field(default_factory=set)
    full_game: dict[int, float] = field(default_factory=dict)

    def max_immediate(self) -> float:
        return max(self.immediate.values(), default=0.0)


def immediate_regrets(game: GameTree, sigma: StrategyProfile) -> RegretReport:
    """r(I,a) for every information set.

    Perfect-recall sets use counterfactual weights π_{-i}(s)/π_{-i}(I); other
    sets use W weights π^σ(s)/π^σ(I'), falling back to π_{-i} weights when
    π^σ(I')=0 (a valid distribution over member sets). Sets with π_{-i}=0 get
    zero regret.
    """
    reach = compute_reach(game, sigma)
    vals = node_values(game, sigma)
    total = reach.total
    pr = perfect_recall_sets(game)
    opp_cache = {i: reach.opponents(i) for i in game.players}
    ptr, cidx = game.child_ptr, game.child_idx
    per_action, immediate, opp_reach, flagged = {}, {}, {}, set()
    for iid, nodes in game.infoset_nodes.items():
        i = game.infoset_owner[iid]
        members = np.asarray(nodes)
        na = len(game.infoset_actions[iid])
        opp = opp_cache[i][members]
        opp_tot = float(opp.sum())
        opp_reach[iid] = opp_tot
        if opp_tot <= 0:
            per_action[iid] = np.zeros(na)
            immediate[iid] = 0.0
            continue
        w = opp / opp_tot
        if iid not in pr:
            full = total[members]
            if full.sum() > 0:
                w = full / full.sum()
            else:
                flagged.add(iid)
        kids = cidx[ptr[members][:, None] + np.arange(na)]
        v = vals[:, i - 1]
        r = (w[:, None] * (v[kids] - v[members][:, None])).sum(axis=0)
        per_action[iid] = r
        immediate[iid] = max(0.0, float(r.max()))
    return RegretReport(per_action, immediate, opp_reach, flagged)
