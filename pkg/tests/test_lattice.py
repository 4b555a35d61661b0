import pytest
from hypothesis import given, settings

from nullscan.lattice import (
    B_INF,
    INF,
    BufInfo,
    PtrInfo,
    compare,
    fin,
    glb_le,
    inf_part,
    meet_alpha,
    meet_beta,
    meet_bufid,
    meet_nps,
    meet_size,
    sat_add,
    size_sub,
)

from .strategies import alphas, betas, buf_ids, nps_sets, sizes


def test_sat_add_examples():
    assert sat_add(3, 7, 14) == 10
    assert sat_add(6, 10, 14) == INF
    # a sum equal to the bound still fits
    assert sat_add(10, 4, 14) == 14
    assert sat_add(0, 0, INF) == INF
    assert sat_add(INF, 0, 14) == INF


def test_meet_size_and_bufid():
    assert meet_size(14, 14) == 14
    assert meet_size(10, 14) == INF
    assert meet_size(INF, INF) == INF
    assert meet_bufid("b1", "b1") == "b1"
    assert meet_bufid("b0", "b1") == B_INF
    assert meet_bufid("b1", B_INF) == B_INF


def test_fin_and_inf_part():
    x = frozenset({2, 5, 10, INF})
    assert fin(x) == {2, 5, 10} and inf_part(x) == {INF}
    assert fin({INF}) == frozenset() and inf_part({INF}) == {INF}
    assert fin(frozenset()) == inf_part(frozenset()) == frozenset()


def test_meet_nps_examples():
    assert meet_nps(frozenset({1, 5, 14}), frozenset({1, 7, INF})) == {1, INF}
    assert meet_nps(frozenset({3, 7}), frozenset({3, 7})) == {3, 7}
    assert meet_nps(frozenset(), frozenset({3, 7})) == frozenset()


def test_meet_alpha_examples():
    a = {"b1": BufInfo(14, frozenset({3, 7}))}
    a2 = {"b1": BufInfo(14, frozenset({3, 13}))}
    assert meet_alpha(a, a2) == {"b1": BufInfo(14, frozenset({3}))}
    assert meet_alpha(a, a) == a
    assert meet_alpha({"b1": BufInfo(10, frozenset({INF}))},
                      {"b1": BufInfo(14, frozenset({2}))}) == {"b1": BufInfo(INF, frozenset({INF}))}


def test_meet_beta_examples():
    assert meet_beta({"x": PtrInfo("b1", 4)}, {"x": PtrInfo("b1", 4)}) == {"x": PtrInfo("b1", 4)}
    assert meet_beta({"x": PtrInfo("b1", 4)}, {"x": PtrInfo("b1", 6)}) == {"x": PtrInfo("b1", INF)}
    # a buffer mismatch also forgets the offset, even an equal one
    assert meet_beta({"x": PtrInfo("b0", 0)}, {"x": PtrInfo("b1", 0)}) == {"x": PtrInfo(B_INF, INF)}


def test_glb_le():
    assert glb_le({7, 13}) == 7
    assert glb_le(set()) == INF
    assert glb_le({INF}) == INF


def test_compare_with_inf():
    assert compare(INF, ">=", 5) and compare(INF, ">", INF)
    assert not compare(INF, "<", 5) and not compare(INF, "<=", 5)
    assert compare(INF, "<=", INF) and compare(INF, "==", INF)


def test_size_sub():
    assert size_sub(7, 4) == 3
    assert size_sub(3, 4) == INF
    assert size_sub(INF, 4) == INF
    assert size_sub(4, INF) == INF


@given(sizes, sizes, sizes)
def test_sat_add_commutes(i, j, k):
    assert sat_add(i, j, k) == sat_add(j, i, k)


@given(sizes, sizes)
def test_sat_add_zero_is_identity_within_bound(i, k):
    if i != INF and k != INF and i <= k:
        assert sat_add(i, 0, k) == i


@given(sizes)
def test_inf_absorbs(i):
    assert meet_size(i, INF) == INF


@given(nps_sets)
def test_partition(x):
    assert fin(x) | inf_part(x) == x
    assert not fin(x) & inf_part(x)
    assert INF in meet_nps(x, frozenset({INF}))


@given(nps_sets, nps_sets)
@settings(max_examples=300)
def test_glb_le_of_union(x, y):
    assert glb_le(x | y) == min(glb_le(x), glb_le(y))


LAWS = [(meet_size, sizes), (meet_bufid, buf_ids), (meet_nps, nps_sets),
        (meet_alpha, alphas), (meet_beta, betas)]


@pytest.mark.parametrize("meet,values", LAWS, ids=lambda v: getattr(v, "__name__", ""))
def test_meet_laws(meet, values):
    @settings(max_examples=300)
    @given(values, values, values)
    def laws(a, b, c):
        assert meet(a, b) == meet(b, a)
        assert meet(meet(a, b), c) == meet(a, meet(b, c))
        assert meet(a, a) == a

    laws()
