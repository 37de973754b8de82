import pytest

from oracles import brute_regret, sequence_form_equilibrium, tiny_game


@pytest.mark.parametrize("seed", range(8))
def test_sequence_form_equilibrium_has_no_pure_deviation(seed):
    g = tiny_game(seed)
    eq = sequence_form_equilibrium(g)
    for p in (1, 2):
        assert brute_regret(g, eq, p) <= 1e-9
