from fractions import Fraction

import numpy as np
import pytest

from irabs.crswf import AbstractionMap, verify_crswf
from irabs.efg_core import GameError, StrategyProfile, emit_game, full_game_regrets, is_perfect_recall
from irabs.games import (
    DrpSpec,
    drp_bottom_groups,
    make_cdrp,
    make_drp,
    make_figure1_game,
    make_random_game,
    roll_distribution,
)


@pytest.fixture(scope="module")
def drp3():
    return make_drp(3)


def test_roll_distribution_sums_to_one():
    for sides in (2, 4, 6):
        for c in (Fraction(0), Fraction(1, 100), Fraction(7, 100)):
            d = roll_distribution(sides, c)
            assert sum(d.values()) == 1
            assert all(p >= 0 for p in d.values())
            for v in range(1, sides + 1):
                assert sum(d[(v, w)] for w in range(1, sides + 1)) == Fraction(1, sides)


def test_off_diagonal_formula():
    c = Fraction(1, 500)
    d = roll_distribution(6, c)
    assert d[(3, 5)] == Fraction(1, 36) - 2 * c
    assert d[(5, 3)] == Fraction(1, 36) - 2 * c


def test_cdrp_zero_is_drp():
    assert make_cdrp(DrpSpec(sides=2, c=0)) == make_drp(2)
    assert emit_game(make_cdrp(DrpSpec(sides=2, c=0))) == emit_game(make_drp(2))


def test_spec_validation():
    with pytest.raises(GameError):
        DrpSpec(sides=1)
    with pytest.raises(GameError):
        DrpSpec(c=Fraction(-1, 10))


def test_drp_zero_sum_before_shift(drp3):
    shift = drp3.shift
    for z in drp3.leaves:
        u = [drp3.utilities[z][i] - shift[i] for i in range(2)]
        assert u[0] + u[1] == 0


def test_drp_max_commitment(drp3):
    assert DrpSpec().max_commitment == 13
    raw = [abs(drp3.utilities[z][0] - drp3.shift[0]) for z in drp3.leaves]
    assert max(raw) == 13


def test_drp_perfect_recall(drp3):
    assert is_perfect_recall(drp3)[0]


def test_drp_always_fold_regret_is_one(drp3):
    probs = {}
    for iid, acts in drp3.infoset_actions.items():
        q = np.zeros(len(acts))
        q[acts.index("f") if "f" in acts else (acts.index("c") if "c" in acts else 0)] = 1
        probs[iid] = q
    reg = full_game_regrets(drp3, StrategyProfile(probs))
    assert reg[1] == pytest.approx(1.0) and reg[2] == pytest.approx(1.0)


def test_drp_bottom_groups_count():
    g = make_drp(6)
    for p in (1, 2):
        cands, members = drp_bottom_groups(g, p)
        assert len(cands) == 36
        assert len({len(m) for m in members}) == 1


def test_figure1_structure():
    g, amap = make_figure1_game()
    assert set(amap.classes) == {"P2", "P1.a", "P1.b"}
    rep = verify_crswf(g, amap)
    assert not rep.is_lossless()


def test_random_game_deterministic_and_lossless_at_radius_zero():
    a = make_random_game(11)
    b = make_random_game(11)
    assert a.game == b.game and a.groups == b.groups
    assert is_perfect_recall(a.game)[0]
    classes = {f"M{j}": tuple(g) for j, g in enumerate(a.groups)}
    rep = verify_crswf(a.game, AbstractionMap(classes))
    assert rep.is_lossless(1e-12)


def test_random_game_perturbed_still_mergeable():
    rg = make_random_game(5, utility_radius=Fraction(1, 10), prob_radius=Fraction(1, 20))
    classes = {f"M{j}": tuple(g) for j, g in enumerate(rg.groups)}
    verify_crswf(rg.game, AbstractionMap(classes))
