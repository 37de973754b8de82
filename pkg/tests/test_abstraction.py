from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irabs.abstraction import (
    Clustering,
    SlapInstance,
    SlapTooLarge,
    TreeObjective,
    build_abstraction,
    exact_cluster,
    exhaustive_cluster,
    gonzalez_cluster,
    group_instance,
    validate_metric,
    zero_classes,
)
from irabs.crswf import verify_crswf
from irabs.games import drp_bottom_groups, make_drp, make_random_game

from oracles import set_partitions


def _objective(kind, D, W, labels):
    """Independent evaluation of the two clustering objectives."""
    labels = list(labels)
    if kind == "diameter":
        return max((D[x][y] for x in range(len(labels)) for y in range(len(labels))
                    if labels[x] == labels[y]), default=0.0)
    total = 0.0
    for x in range(len(labels)):
        total += W[x] * max(D[x][y] for y in range(len(labels)) if labels[y] == labels[x])
    return total


def _points(seed, n):
    rng = np.random.default_rng(seed)
    p = rng.random((n, 2))
    return np.sqrt(((p[:, None] - p[None]) ** 2).sum(-1)), rng.random(n) + 0.1


def test_weighted_objective_by_hand():
    D = np.array([[0, 1, 4], [2, 0, 3], [4, 3, 0]], float)
    inst = SlapInstance(list("abc"), np.maximum(D, D.T), np.array([0.5, 0.25, 0.25]), "weighted", cost=D)
    # {a,b},{c}: 0.5·1 + 0.25·2 + 0
    assert inst.evaluate(np.array([0, 0, 1])) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 7), k=st.integers(1, 4),
       kind=st.sampled_from(["diameter", "weighted"]))
def test_exact_matches_partition_enumeration(seed, n, k, kind):
    k = min(k, n)
    D, W = _points(seed, n)
    rng = np.random.default_rng(seed)
    cost = D * (0.5 + rng.random((n, n))) if kind == "weighted" else D
    np.fill_diagonal(cost, 0)
    inst = SlapInstance([str(j) for j in range(n)], np.maximum(cost, cost.T), W, kind, cost=cost)
    best = min(_objective(kind, cost, W, lab) for lab in set_partitions(n, k))
    got = exact_cluster(inst, k)
    assert got.objective == pytest.approx(best, abs=1e-9)
    assert len(set(got.labels)) <= k
    assert exhaustive_cluster(inst, k).objective == pytest.approx(best, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 9), k=st.integers(1, 4))
def test_gonzalez_two_approximation(seed, n, k):
    k = min(k, n)
    D, _ = _points(seed, n)
    inst = SlapInstance([str(j) for j in range(n)], D)
    assert validate_metric(inst)[0]
    g = gonzalez_cluster(inst, k)
    assert len(g.representatives) == k
    assert g.objective <= 2 * exact_cluster(inst, k).objective + 1e-12


def test_validate_metric_reports_violation():
    D = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float)
    ok, why = validate_metric(SlapInstance(list("abc"), D))
    assert not ok and why[0] == "triangle"
    D2 = D.copy()
    D2[0, 1] = 2
    ok, why = validate_metric(SlapInstance(list("abc"), D2))
    assert not ok and why[0] == "symmetry"


def test_zero_classes_and_premerge():
    D = np.array([[0, 0, 3, 3], [0, 0, 3, 3], [3, 3, 0, 2], [3, 3, 2, 0]], float)
    assert zero_classes(D) == [[0, 1], [2], [3]]
    inst = SlapInstance(list("abcd"), D)
    cl = exact_cluster(inst, 3)
    assert cl.objective == 0 and cl.labels[0] == cl.labels[1]


def test_size_guard():
    D, _ = _points(0, 12)
    with pytest.raises(SlapTooLarge):
        exact_cluster(SlapInstance([str(j) for j in range(12)], D), 3, limit=10)


def test_tree_objective_exact():
    D, _ = _points(4, 5)
    tree = TreeObjective(("max", [("sum", [(0.5, ("leaf", 0, 0)), (0.5, ("leaf", 1, 0))]),
                                  ("leaf", 2, 0), ("leaf", 3, 0), ("leaf", 4, 0)]), [D])
    inst = SlapInstance([str(j) for j in range(5)], D, objective="tree", tree=tree)
    best = min(tree.evaluate(np.array(lab)) for lab in set_partitions(5, 2))
    assert exact_cluster(inst, 2).objective == pytest.approx(best)


def test_drp_sum_classes_are_lossless():
    g = make_drp(3)
    cands, members = drp_bottom_groups(g, 1)
    inst = group_instance(g, [str(c) for c in cands], members)
    classes = zero_classes(inst.dist)
    sums = sorted({sum(cands[c[0]]) for c in classes})
    assert len(classes) == len(sums) == 5
    for c in classes:
        assert len({sum(cands[j]) for j in c}) == 1
    cl = exact_cluster(inst, 5)
    assert cl.objective == 0
    amap = build_abstraction(members, cl, prefix="p1")
    assert verify_crswf(g, amap).is_lossless(1e-12)


def test_build_abstraction_merges_slot_by_slot():
    members = [["a1", "a2"], ["b1", "b2"], ["c1", "c2"]]
    cl = Clustering(np.array([0, 1, 0]), 0.0)
    amap = build_abstraction(members, cl, prefix="g")
    assert amap.classes == {"g|a1": ("a1", "c1"), "g|a2": ("a2", "c2")}


def test_random_group_distances_symmetric():
    rg = make_random_game(1, utility_radius=Fraction(1, 10), prob_radius=Fraction(1, 20))
    grp = max(rg.groups, key=len)
    inst = group_instance(rg.game, grp, [[s] for s in grp])
    assert np.array_equal(inst.dist, inst.dist.T)
    assert np.all(np.diag(inst.dist) == 0)


def test_reweighting_can_break_the_triangle_inequality():
    # sets reached with different nature distributions: the directional cost
    # weights reward errors by the source set's distribution, so the composed
    # mapping is not always dominated
    rg = make_random_game(168, utility_radius=Fraction(1, 2), prob_radius=Fraction(1, 10))
    grp = ["T:a1:h0:b1:x0", "T:a1:h1:b1:x0", "T:a1:h2:b1:x0"]
    inst = group_instance(rg.game, grp, [[s] for s in grp])
    ok, why = validate_metric(inst)
    assert not ok and why[0] == "triangle"
