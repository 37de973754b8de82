from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irabs.efg_core import (
    CHANCE,
    LEAF,
    GameError,
    GameFormatError,
    RawNode,
    StrategyProfile,
    best_response,
    build_game,
    compute_reach,
    counterfactual_value,
    emit_game,
    full_game_regrets,
    immediate_regrets,
    imperfect_value,
    is_perfect_recall,
    node_values,
    parse_game,
    parse_rational,
)
from irabs.games import make_drp, make_figure1_game

from oracles import brute_regret, expected_utility, random_profile, tiny_game


def _leaf(nid, u1, u2=None):
    return RawNode(nid, LEAF, utils=(Fraction(u1), Fraction(-u1 if u2 is None else u2)))


def _simple():
    return [
        RawNode("r", 1, "I", ["a", "b"], ["x", "y"]),
        _leaf("x", 1),
        RawNode("y", CHANCE, None, ["h", "t"], ["y1", "y2"], [Fraction(1, 3), Fraction(2, 3)]),
        _leaf("y1", 3),
        _leaf("y2", 0),
    ]


# ------------------------------------------------------------ construction
def test_build_and_normalize():
    g = build_game("simple", 2, _simple())
    # padded to uniform leaf depth, shifted so utilities are non-negative
    depths = {int(g.depth[z]) for z in g.leaves}
    assert len(depths) == 1
    assert g.utils.min() >= 0
    assert g.shift == (Fraction(0), Fraction(3))


def test_chance_root_gets_dummy_player_root():
    nodes = [
        RawNode("r", CHANCE, None, ["h", "t"], ["a", "b"], [Fraction(1, 2)] * 2),
        _leaf("a", 1),
        _leaf("b", 2),
    ]
    g = build_game("c", 2, nodes)
    assert g.owners[0] == 1 and g.dummy[0]
    assert g.ids[1] == "r"


@pytest.mark.parametrize("mutate,msg", [
    (lambda ns: ns.append(_leaf("x", 2)), "duplicate node id"),
    (lambda ns: ns[0].children.__setitem__(1, "zz"), "dangling"),
    (lambda ns: ns[2].probs.__setitem__(0, Fraction(1, 2)), "probability-sum"),
    (lambda ns: ns[2].children.__setitem__(1, "x"), "two parents"),
    (lambda ns: ns.append(RawNode("r2", 1, "I", ["a", "b"], ["p", "q"])), "root"),
])
def test_build_rejects(mutate, msg):
    nodes = _simple()
    mutate(nodes)
    if msg == "root":
        nodes += [_leaf("p", 0), _leaf("q", 0)]
    with pytest.raises(GameError, match=msg):
        build_game("bad", 2, nodes)


def test_infoset_consistency_checked():
    nodes = [
        RawNode("r", CHANCE, None, ["h", "t"], ["a", "b"], [Fraction(1, 2)] * 2),
        RawNode("a", 1, "I", ["x", "y"], ["a1", "a2"]),
        RawNode("b", 1, "I", ["x", "z"], ["b1", "b2"]),
    ] + [_leaf(n, 0) for n in ("a1", "a2", "b1", "b2")]
    with pytest.raises(GameError, match="action"):
        build_game("bad", 2, nodes)


# ------------------------------------------------------------ file format
def test_round_trip_figure1():
    g, _ = make_figure1_game()
    assert parse_game(emit_game(g)) == g
    assert emit_game(parse_game(emit_game(g))) == emit_game(g)


def test_round_trip_small_drp():
    g = make_drp(2)
    assert parse_game(emit_game(g)) == g


def test_parse_errors_report_line():
    text = "game t players=2\nnode r owner=p1 infoset=I\nedge r a x\nleaf x utils=1,oops\n"
    with pytest.raises(GameFormatError) as exc:
        parse_game(text)
    assert exc.value.lineno == 4


def test_parse_rational():
    assert parse_rational("7/100") == Fraction(7, 100)
    assert parse_rational("0.25") == Fraction(1, 4)
    with pytest.raises(ValueError):
        parse_rational("x")


# ------------------------------------------------------------ values
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_node_values_match_recursion(seed):
    g = tiny_game(seed)
    probs = random_profile(g, np.random.default_rng(seed))
    v = node_values(g, StrategyProfile(probs))
    np.testing.assert_allclose(v[0], expected_utility(g, probs), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_best_response_matches_enumeration(seed):
    g = tiny_game(seed)
    probs = random_profile(g, np.random.default_rng(seed + 1))
    sigma = StrategyProfile(probs)
    regrets = full_game_regrets(g, sigma)
    for p in g.players:
        assert regrets[p] == pytest.approx(max(0.0, brute_regret(g, probs, p)), abs=1e-10)


def test_best_response_breaks_ties_low():
    nodes = [RawNode("r", 1, "I", ["a", "b"], ["x", "y"]), _leaf("x", 1), _leaf("y", 1)]
    g = build_game("tie", 2, nodes)
    br, val = best_response(g, StrategyProfile.uniform(g), 1)
    assert list(br.probs["I"]) == [1.0, 0.0]


def test_reach_factorizes():
    g = tiny_game(3)
    sigma = StrategyProfile(random_profile(g, np.random.default_rng(0)))
    r = compute_reach(g, sigma)
    np.testing.assert_allclose(r.total, r.own(1) * r.opponents(1), atol=1e-15)
    np.testing.assert_allclose(r.total, r.own(2) * r.opponents(2), atol=1e-15)


def test_counterfactual_and_imperfect_values_agree_under_perfect_recall_weights():
    g = tiny_game(5)
    sigma = StrategyProfile(random_profile(g, np.random.default_rng(2)))
    for iid in g.infoset_names:
        cv = counterfactual_value(g, sigma, iid).value
        w = imperfect_value(g, sigma, iid).value
        # player's own reach is constant across a perfect-recall set
        assert cv == pytest.approx(w, abs=1e-12)


def test_imperfect_value_flagged_when_unreached():
    g = tiny_game(1)
    probs = random_profile(g, np.random.default_rng(0))
    probs["P:0"] = np.array([1.0, 0.0])
    probs["P:1"] = np.array([1.0, 0.0])
    res = imperfect_value(g, StrategyProfile(probs), "Q:1")
    assert res.flagged and res.value == 0.0


def test_immediate_regret_matches_single_set_deviation():
    g = tiny_game(7)
    probs = random_profile(g, np.random.default_rng(3))
    rep = immediate_regrets(g, StrategyProfile(probs))
    for iid in g.infoset_names:
        if iid.startswith("~"):
            continue
        i = g.infoset_owner[iid]
        base = expected_utility(g, probs)[i - 1]
        opp = rep.opp_reach[iid]
        for a in range(len(g.infoset_actions[iid])):
            q = np.zeros(len(probs[iid]))
            q[a] = 1
            dev = expected_utility(g, {**probs, iid: q})[i - 1]
            # root-value change equals π_{-i}(I)·π_i(I)·r(I,a); π_i(I) cancels out
            own = compute_reach(g, StrategyProfile(probs)).own(i)[g.infoset_nodes[iid][0]]
            assert dev - base == pytest.approx(opp * own * rep.per_action[iid][a], abs=1e-10)


# ------------------------------------------------------------ perfect recall
def test_perfect_recall_detection():
    assert is_perfect_recall(tiny_game(0))[0]
    g = tiny_game(0)
    forgetful = g.with_infosets({iid: ("P" if iid.startswith("P:") else iid) for iid in g.infoset_names})
    assert is_perfect_recall(forgetful)[0]  # the deal is not player 1's own history
    g2 = g.with_infosets({iid: ("F" if iid.startswith("F:") else iid) for iid in g.infoset_names})
    has_f = sum(iid.startswith("F:") for iid in g.infoset_names) > 1
    if has_f:
        ok, bad = is_perfect_recall(g2)
        assert not ok and bad[0] == "F"


def test_strategy_csv_round_trip():
    g = tiny_game(4)
    sigma = StrategyProfile(random_profile(g, np.random.default_rng(9)))
    back = StrategyProfile.from_csv(g, sigma.to_csv(g))
    for iid in g.infoset_names:
        assert np.array_equal(back.probs[iid], sigma.probs[iid])
