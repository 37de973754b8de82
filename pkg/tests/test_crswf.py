from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irabs.crswf import (
    AbstractionMap,
    CrswfContext,
    CrswfError,
    _minimax_delta,
    check_refinement,
    choose_delta,
    choose_delta_weighted,
    pair_mergeable,
    verify_crswf,
)
from irabs.games import make_figure1_game, make_random_game

from oracles import counterexample_game, minimax_delta_oracle


@pytest.fixture(scope="module")
def fig1():
    return make_figure1_game()


def _node_value(pe, game, node_id, field):
    idx = game.index[node_id]
    return float(getattr(pe, field)[list(pe.nodes).index(idx)])


def test_figure1_left_p2_errors(fig1):
    g, amap = fig1
    pe = verify_crswf(g, amap).pair("P2.L", "P2.R")
    # |1/2 − 2/5| + |1/2 − 3/5| = 1/5 under action a, times ū = 10
    assert _node_value(pe, g, "left", "node_transition") == pytest.approx(2.0, abs=1e-9)
    # leaf 0/9 vs 0/10 under b: reward error 1, reached with chance 1/2
    assert _node_value(pe, g, "left", "node_reward") == pytest.approx(0.5, abs=1e-9)
    assert pe.distribution == 0


def test_figure1_leftmost_p1_distribution(fig1):
    g, amap = fig1
    pe = verify_crswf(g, amap).pair("P1.La", "P1.Ra")
    # per node |1/2 − 2/5| and |1/2 − 3/5|, each times ū = 10
    assert pe.distribution == pytest.approx(2.0, abs=1e-9)
    assert pe.node_reward.max() == 0


def test_figure1_reverse_direction(fig1):
    g, amap = fig1
    pe = verify_crswf(g, amap).pair("P2.R", "P2.L")
    # right's ū includes the reward error 1 from the 9-payoff leaf: 0.2 · 11
    assert _node_value(pe, g, "right", "node_transition") == pytest.approx(2.2, abs=1e-9)


def test_identity_is_lossless(fig1):
    g, _ = fig1
    rep = verify_crswf(g, AbstractionMap.identity())
    assert rep.pairs == {} and rep.is_lossless()


def test_map_text_round_trip(fig1):
    _, amap = fig1
    amap = AbstractionMap(amap.classes, {("P2.L", "P2.R"): Fraction(3, 2)}, "one")
    back = AbstractionMap.from_text(amap.to_text(), default_delta="one")
    assert back.classes == amap.classes and back.deltas == amap.deltas
    assert back.explicit_delta("P2.R", "P2.L") == Fraction(2, 3)


def test_map_rejects_overlap():
    with pytest.raises(CrswfError):
        AbstractionMap.from_text("merge A = x,y\nmerge B = y,z\n")


def test_refinement_rejects_mismatched_actions(fig1):
    g, _ = fig1
    amap = AbstractionMap({"bad": ("P1.La", "P1.Lb")})
    assert not check_refinement(g, amap)
    with pytest.raises(CrswfError, match="P1.La"):
        verify_crswf(g, amap)


def test_no_bijection_is_reported(fig1):
    g, _ = fig1
    # different owners can never be merged
    amap = AbstractionMap({"bad": ("P2.L", "P1.La")})
    with pytest.raises(CrswfError):
        verify_crswf(g, amap)


def test_bijection_failure_names_leaf():
    rg = make_random_game(2)
    g = rg.game
    # a group member against a set from another group with different shape
    a = rg.groups[0][0]
    others = [iid for iid in g.infosets_of(g.infoset_owner[a])
              if iid not in rg.groups[0] and g.infoset_actions[iid] == g.infoset_actions[a]]
    ctx = CrswfContext(g, AbstractionMap({}))
    bad = [b for b in others if not pair_mergeable(ctx, a, b)]
    assert bad
    with pytest.raises(CrswfError, match="leaf"):
        ctx.bijection(a, bad[0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=6))
def test_minimax_delta_matches_breakpoint_oracle(raw):
    pieces = sorted({(Fraction(x), Fraction(w)) for x, w in raw})
    if not any(w > 0 for _, w in pieces) or not any(x > 0 for x, _ in pieces):
        return
    res = _minimax_delta(pieces)
    assert res.value == pytest.approx(float(minimax_delta_oracle(pieces)), abs=1e-12)


def test_choose_delta_counterexample_pairs():
    g = counterexample_game()
    ctx = CrswfContext(g, AbstractionMap({"M": ("I1", "I2", "I3")}))
    assert choose_delta_weighted(ctx, "I2", "I1").delta == 5
    assert choose_delta_weighted(ctx, "I3", "I2").delta == 2
    assert choose_delta_weighted(ctx, "I3", "I1").delta == 10
    # the leaf-level minimax picks a different factor for I3 against I1
    assert choose_delta(ctx, "I3", "I1").delta == 11


def test_random_radius_zero_pairs_have_zero_error():
    rg = make_random_game(8)
    classes = {f"M{j}": tuple(grp) for j, grp in enumerate(rg.groups)}
    rep = verify_crswf(rg.game, AbstractionMap(classes))
    for pe in rep.pairs.values():
        assert np.all(pe.node_errors <= 1e-12) and pe.distribution <= 1e-12
