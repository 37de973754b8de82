"""Solution-quality bounds for strategies computed in CRSWF abstractions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .crswf import ErrorReport
from .efg_core import LEAF, GameTree, RegretReport, StrategyProfile, compute_reach, edge_probs, schedule
from .efg_core.values import _sum_children


@dataclass
class PsiTerm:
    """ψ(I) and the parts of its maximizing bracket."""

    value: float
    regret_term: float
    node_term: float
    distribution_term: float
    partner: str


@dataclass
class BoundResult:
    per_player: dict[int, float]
    psi: dict[str, PsiTerm] = field(default_factory=dict)
    choices: dict[str, int] = field(default_factory=dict)

    @property
    def epsilon(self) -> float:
        return max(self.per_player.values(), default=0.0)

    @property
    def total(self) -> float:
        return float(sum(self.per_player.values()))


def node_weights(opp: np.ndarray, nodes: list[int]) -> np.ndarray:
    """π_{-i}(s)/π_{-i}(I), uniform when the set is unreachable by the others."""
    w = opp[nodes]
    tot = w.sum()
    return w / tot if tot > 0 else np.full(len(nodes), 1.0 / len(nodes))


def psi(report: ErrorReport, iid: str, weights: np.ndarray, regret: float = 0.0) -> PsiTerm:
    """max over partners Ĭ of δ·r(f_I) + 2Σ_s w(s)(ε^0(s)+ε^R(s)) + ε^D."""
    best = PsiTerm(regret, regret, 0.0, 0.0, iid)
    for other in report.partners(iid):
        if other == iid:
            continue
        pe = report.pair(iid, other)
        node = float(2.0 * np.dot(weights, pe.node_errors))
        reg = float(pe.delta) * regret
        val = reg + node + pe.distribution
        if val > best.value:
            best = PsiTerm(val, reg, node, pe.distribution, other)
    return best


def _abstract_regret(report: ErrorReport, regrets: RegretReport | None, iid: str) -> float:
    if regrets is None:
        return 0.0
    aid = report.amap.abstract_of(iid)
    if regrets.opp_reach.get(aid, 0.0) <= 0:
        return 0.0
    return max(0.0, regrets.immediate.get(aid, 0.0))


def theorem1_bound(game: GameTree, report: ErrorReport, sigma: StrategyProfile,
                   regrets: RegretReport | None) -> BoundResult:
    """ε_i = max over pure â of Σ_I π_{-i}(I)·ψ(I), by one bottom-up pass per player.

    ``sigma`` is the lifted profile on the original game; ``regrets`` are the
    abstract immediate regrets keyed by abstract set id (None drops the term).
    """
    reach = compute_reach(game, sigma)
    ep = edge_probs(game, sigma)
    ptr, cidx = game.child_ptr, game.child_idx
    result = BoundResult({})
    for i in game.players:
        opp = reach.opponents(i)
        L = np.zeros(game.num_nodes)
        for nodes, sets in schedule(game, i).levels:
            if len(nodes):
                _sum_children(game, nodes, L, ep)
            for iid in sets:
                members = list(game.infoset_nodes[iid])
                w = node_weights(opp, members)
                term = psi(report, iid, w, _abstract_regret(report, regrets, iid))
                na = len(game.infoset_actions[iid])
                kids = cidx[np.asarray(ptr[members])[:, None] + np.arange(na)]
                q = (w[:, None] * L[kids]).sum(axis=0)
                a = int(np.argmax(q))
                L[members] = term.value + q[a]
                result.psi[iid] = term
                result.choices[iid] = a
        result.per_player[i] = float(L[0])
    return result


def theorem2_bound(game: GameTree, report: ErrorReport, sigma: StrategyProfile) -> BoundResult:
    """Theorem 1 without the regret term (σ an exact abstract equilibrium)."""
    return theorem1_bound(game, report, sigma, None)


def node_costs(report: ErrorReport, player: int, only: set[str] | None = None,
               partner: dict[str, str] | None = None) -> np.ndarray:
    """c(s) = max_Ĭ [2(ε^0(s)+ε^R(s)) + ε^D_{I,Ĭ}] at player nodes, 0 elsewhere.

    ``only`` restricts to the listed sets; ``partner`` fixes Ĭ per set.
    """
    game = report.game
    c = np.zeros(game.num_nodes)
    for (a, b), pe in report.pairs.items():
        if game.infoset_owner[a] != player:
            continue
        if only is not None and a not in only:
            continue
        if partner is not None and partner.get(a) != b:
            continue
        c[pe.nodes] = np.maximum(c[pe.nodes], 2.0 * pe.node_errors + pe.distribution)
    return c


def agnostic_dp(game: GameTree, costs: np.ndarray) -> float:
    """Node-level DP: nature averages, every player maximizes, costs add at nodes."""
    L = np.zeros(game.num_nodes)
    par = game.parent
    owner = game.owner
    ec = game.edge_chance
    levels = game.depth_levels
    for d in range(len(levels) - 2, -1, -1):
        kids = levels[d + 1]
        nodes = levels[d]
        parents = par[kids]
        po = owner[parents]
        chance = po == 0
        np.add.at(L, parents[chance], ec[kids[chance]] * L[kids[chance]])
        play = ~chance
        tmp = np.full(game.num_nodes, -np.inf)
        np.maximum.at(tmp, parents[play], L[kids[play]])
        internal = nodes[(owner[nodes] > 0)]
        L[internal] = tmp[internal]
        L[nodes] += costs[nodes]
    return float(L[0])


def strategy_agnostic_bound(game: GameTree, report: ErrorReport) -> BoundResult:
    """σ-independent bound: nature weights only, max over every player's actions.

    Node-level version of Theorem 2: each player-i node adds its own worst
    partner error 2(ε^0(s)+ε^R(s)) + ε^D, which dominates π_{-i}(I)·ψ(I) for
    any opponent strategy, so the result upper-bounds theorem2_bound for all σ.
    """
    return BoundResult({i: agnostic_dp(game, node_costs(report, i)) for i in game.players})
