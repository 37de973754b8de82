from fractions import Fraction

import numpy as np
import pytest

from irabs.bounds import node_weights, strategy_agnostic_bound, theorem1_bound, theorem2_bound
from irabs.cfr import CfrSolver, lift_strategy
from irabs.crswf import AbstractionMap, verify_crswf
from irabs.efg_core import StrategyProfile, full_game_regrets, immediate_regrets
from irabs.games import make_figure1_game, make_random_game

from oracles import random_profile


def _group_map(rg):
    return AbstractionMap({f"M{j}": tuple(grp) for j, grp in enumerate(rg.groups)})


def test_figure1_theorem2_by_hand():
    g, amap = make_figure1_game()
    res = theorem2_bound(g, verify_crswf(g, amap), StrategyProfile.uniform(g))
    # player 1: four sets each reached by the others w.p. 1/4; ψ = 2, 2, 1, 1
    assert res.per_player[1] == pytest.approx(0.25 * (2 + 2 + 1 + 1), abs=1e-12)
    # player 2: ψ(P2.L) = 2(2 + 0.5), ψ(P2.R) = 2(2.2 + 0.5), each w.p. 1/2
    assert res.per_player[2] == pytest.approx(0.5 * 5.0 + 0.5 * 5.4, abs=1e-12)
    assert res.epsilon == pytest.approx(5.2)
    assert res.total == pytest.approx(6.7)


def test_node_weights_uniform_when_unreached():
    assert list(node_weights(np.array([0.0, 0.0, 3.0]), [0, 1])) == [0.5, 0.5]
    np.testing.assert_allclose(node_weights(np.array([1.0, 3.0]), [0, 1]), [0.25, 0.75])


def test_lossless_abstraction_has_zero_bounds():
    rg = make_random_game(3)
    rep = verify_crswf(rg.game, _group_map(rg))
    sigma = StrategyProfile(random_profile(rg.game, np.random.default_rng(0)))
    assert strategy_agnostic_bound(rg.game, rep).total == pytest.approx(0, abs=1e-12)
    assert theorem2_bound(rg.game, rep, sigma).total == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_agnostic_dominates_theorem2(seed):
    rg = make_random_game(seed, utility_radius=Fraction(1, 2), prob_radius=Fraction(1, 10))
    rep = verify_crswf(rg.game, _group_map(rg))
    agn = strategy_agnostic_bound(rg.game, rep)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        sigma = StrategyProfile(random_profile(rg.game, rng))
        t2 = theorem2_bound(rg.game, rep, sigma)
        for p in rg.game.players:
            assert t2.per_player[p] <= agn.per_player[p] + 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_theorem1_bounds_lifted_cfr_regret(seed):
    rg = make_random_game(100 + seed, utility_radius=Fraction(1, 2), prob_radius=Fraction(1, 10))
    amap = _group_map(rg)
    rep = verify_crswf(rg.game, amap)
    abstract = amap.abstract_game(rg.game)
    solver = CfrSolver(abstract)
    solver.iterate(300)
    avg = solver.average()
    lifted = lift_strategy(avg, amap, rg.game)
    measured = full_game_regrets(rg.game, lifted)
    bound = theorem1_bound(rg.game, rep, lifted, immediate_regrets(abstract, avg))
    for p in rg.game.players:
        assert measured[p] <= bound.per_player[p] + 1e-6


def test_theorem1_without_abstraction_is_regret_bound():
    # identity map: ψ is the immediate regret, so the bound covers the true regret
    rg = make_random_game(7)
    rep = verify_crswf(rg.game, AbstractionMap.identity())
    sigma = StrategyProfile(random_profile(rg.game, np.random.default_rng(1)))
    res = theorem1_bound(rg.game, rep, sigma, immediate_regrets(rg.game, sigma))
    reg = full_game_regrets(rg.game, sigma)
    for p in rg.game.players:
        assert reg[p] <= res.per_player[p] + 1e-9
