"""Vanilla CFR on (possibly imperfect-recall) abstract games."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .crswf import AbstractionMap, CrswfError
from .efg_core import (
    GameError,
    GameTree,
    RegretReport,
    StrategyProfile,
    full_game_regrets,
    immediate_regrets,
)


@dataclass
class CfrState:
    regret: np.ndarray
    strategy_sum: np.ndarray
    sigma: np.ndarray
    iterations: int = 0


class CfrSolver:
    """Alternating-update vanilla CFR with regret matching.

    The traversal walks the game's tree; tables are keyed by the game's
    information sets, so passing an abstract game (merged sets over the
    original tree) runs CFR in the abstraction.
    """

    def __init__(self, game: GameTree, seed: int = 0):
        self.game = game
        self.seed = seed
        g = game
        n_act = int(g.action_offset[-1])
        self.state = CfrState(np.zeros(n_act), np.zeros(n_act), np.zeros(n_act))
        self._tree = g.compact
        self._iset_owner = np.array([g.infoset_owner[iid] for iid in g.infoset_names], dtype=np.int64)
        self._buf = [np.zeros(len(self._tree.nodes)) for _ in range(3)]
        for p in g.players:
            _kernels.regret_matching(self.state.regret, self.state.sigma, g.action_offset,
                                     self._iset_owner, p)

    def iterate(self, iterations: int) -> None:
        g, st, t = self.game, self.state, self._tree
        own, opp, val = self._buf
        for _ in range(iterations):
            for p in g.players:
                _kernels.cfr_pass(p, t.owner, t.ptr, t.cidx, t.echance, t.node_infoset,
                                  g.action_offset, t.utils, st.sigma,
                                  st.regret, st.strategy_sum, own, opp, val, 1.0)
                _kernels.regret_matching(st.regret, st.sigma, g.action_offset, self._iset_owner, p)
            st.iterations += 1

    def average(self) -> StrategyProfile:
        g, st = self.game, self.state
        avg = np.empty_like(st.strategy_sum)
        off = g.action_offset
        for k in range(len(off) - 1):
            s = st.strategy_sum[off[k]:off[k + 1]]
            tot = s.sum()
            avg[off[k]:off[k + 1]] = s / tot if tot > 0 else 1.0 / len(s)
        return StrategyProfile.from_flat(g, avg)

    def current(self) -> StrategyProfile:
        return StrategyProfile.from_flat(self.game, self.state.sigma.copy())


def cfr_run(abstract_game: GameTree, iterations: int, seed: int = 0) -> tuple[StrategyProfile, RegretReport]:
    """Run CFR and return the average profile with its immediate regrets (W-based)."""
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    solver = CfrSolver(abstract_game, seed)
    solver.iterate(iterations)
    avg = solver.average()
    return avg, immediate_regrets(abstract_game, avg)


def lift_strategy(abstract_sigma: StrategyProfile, amap: AbstractionMap,
                  original: GameTree) -> StrategyProfile:
    """Every original set plays its abstract set's distribution."""
    probs = {}
    for iid in original.infoset_names:
        aid = amap.abstract_of(iid)
        if aid not in abstract_sigma.probs:
            raise GameError(f"abstract strategy lacks set {aid!r}")
        p = abstract_sigma.probs[aid]
        if len(p) != len(original.infoset_actions[iid]):
            raise CrswfError(f"action mismatch lifting {aid!r} to {iid!r}")
        probs[iid] = np.array(p, dtype=float)
    return StrategyProfile(probs)


def evaluate_in_original(original: GameTree, lifted: StrategyProfile) -> dict[int, float]:
    """Full-game regret per player (best-response value minus current value)."""
    return full_game_regrets(original, lifted)


def purify(game: GameTree, sigma: StrategyProfile) -> StrategyProfile:
    """Nearest pure profile: each set plays its most likely action (lowest index on ties)."""
    out = {}
    for iid, p in sigma.probs.items():
        q = np.zeros(len(p))
        q[int(np.argmax(p))] = 1.0
        out[iid] = q
    return StrategyProfile(out)
