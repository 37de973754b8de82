from fractions import Fraction

import numpy as np
import pytest

from irabs import _kernels
from irabs.cfr import CfrSolver, cfr_run, evaluate_in_original, lift_strategy, purify
from irabs.crswf import AbstractionMap
from irabs.efg_core import (
    LEAF,
    RawNode,
    StrategyProfile,
    build_game,
    compute_reach,
    full_game_regrets,
    imperfect_value,
    node_values,
)
from irabs.games import make_drp, make_figure1_game, make_random_game

from oracles import brute_regret, tiny_game


def test_regret_matching_distribution():
    regret = np.array([3.0, -1.0, 1.0, -2.0, -5.0])
    sigma = np.zeros(5)
    offset = np.array([0, 3, 5])
    owner = np.array([1, 1])
    _kernels.regret_matching(regret, sigma, offset, owner, 1)
    np.testing.assert_allclose(sigma, [0.75, 0.0, 0.25, 0.5, 0.5])


def test_cfr_rejects_nonpositive_iterations():
    g = tiny_game(0)
    with pytest.raises(ValueError):
        cfr_run(g, 0)


def test_single_action_game_has_zero_regret():
    nodes = [RawNode("r", 1, "I", ["a"], ["x"]), RawNode("x", 2, "J", ["b"], ["z"]),
             RawNode("z", LEAF, utils=(Fraction(1), Fraction(-1)))]
    g = build_game("one", 2, nodes)
    avg, rep = cfr_run(g, 1)
    assert rep.max_immediate() == 0
    assert all(v == 0 for v in full_game_regrets(g, avg).values())


def test_emitted_strategies_are_distributions():
    g = tiny_game(2)
    solver = CfrSolver(g)
    for _ in range(50):
        solver.iterate(1)
        sig = solver.state.sigma
        off = g.action_offset
        for k in range(len(off) - 1):
            s = sig[off[k]:off[k + 1]]
            assert s.min() >= 0 and abs(s.sum() - 1) <= 1e-12
    for p in solver.average().probs.values():
        assert abs(p.sum() - 1) <= 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_cfr_converges_on_tiny_games(seed):
    g = tiny_game(seed)
    avg, _ = cfr_run(g, 3000)
    probs = avg.probs
    total = sum(max(0.0, brute_regret(g, probs, p)) for p in g.players)
    assert total < 0.05


def test_exploitability_trend_on_drp2():
    g = make_drp(2)
    solver = CfrSolver(g)
    done, vals = 0, []
    for t in (100, 1000, 10000):
        solver.iterate(t - done)
        done = t
        vals.append(sum(full_game_regrets(g, solver.average()).values()))
    assert vals[1] <= 1.1 * vals[0] and vals[2] <= 1.1 * vals[1]
    assert vals[2] < 0.05


def test_determinism():
    g = tiny_game(6)
    a, b = CfrSolver(g, seed=3), CfrSolver(g, seed=3)
    a.iterate(200)
    b.iterate(200)
    assert np.array_equal(a.state.regret, b.state.regret)
    assert np.array_equal(a.state.strategy_sum, b.state.strategy_sum)


def test_identity_lift_is_identity():
    g = tiny_game(1)
    avg, _ = cfr_run(g, 50)
    lifted = lift_strategy(avg, AbstractionMap.identity(), g)
    for iid in g.infoset_names:
        assert np.array_equal(lifted.probs[iid], avg.probs[iid])


def test_figure1_lift_shares_distributions():
    g, amap = make_figure1_game()
    abstract = amap.abstract_game(g)
    avg, _ = cfr_run(abstract, 100)
    lifted = lift_strategy(avg, amap, g)
    assert np.array_equal(lifted.probs["P1.La"], lifted.probs["P1.Ra"])
    assert np.array_equal(lifted.probs["P1.Lb"], lifted.probs["P1.Rb"])
    assert np.array_equal(lifted.probs["P2.L"], lifted.probs["P2.R"])


def test_lifted_w_value_is_reach_weighted_mean():
    rg = make_random_game(4)
    amap = AbstractionMap({f"M{j}": tuple(grp) for j, grp in enumerate(rg.groups)})
    abstract = amap.abstract_game(rg.game)
    avg, _ = cfr_run(abstract, 100)
    lifted = lift_strategy(avg, amap, rg.game)
    reach = compute_reach(rg.game, lifted).total
    vals = node_values(rg.game, lifted)
    for aid, members in amap.classes.items():
        i = rg.game.infoset_owner[members[0]]
        nodes = [n for m in members for n in rg.game.infoset_nodes[m]]
        w = reach[nodes]
        if w.sum() <= 0:
            continue
        expect = float((w * vals[nodes, i - 1]).sum() / w.sum())
        assert imperfect_value(abstract, avg, aid).value == pytest.approx(expect, abs=1e-12)


def test_evaluate_in_original_and_purify():
    g = tiny_game(9)
    avg, _ = cfr_run(g, 2000)
    reg = evaluate_in_original(g, avg)
    assert sum(reg.values()) < 0.05
    pure = purify(g, StrategyProfile.uniform(g))
    for p in pure.probs.values():
        assert p[0] == 1.0 and p.sum() == 1.0
