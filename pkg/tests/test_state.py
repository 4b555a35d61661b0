from hypothesis import given

from nullscan.lattice import B_INF, INF, BufInfo, PtrInfo
from nullscan.state import (
    end_in,
    end_of,
    initial_state,
    make_state,
    nps_of,
    pt_of,
    rnps,
    size_of,
    start_of,
)

from .strategies import nps_sets, sizes

EXAMPLE = make_state({"b0": (10, {10}), "b1": (14, {3, 7, 13})},
                  {"w": ("b0", 0), "x": ("b1", 0), "y": ("b1", 4), "z": ("b1", 6)})


def test_extractors_on_running_example():
    assert size_of(EXAMPLE.alpha, "b1") == 14
    assert nps_of(EXAMPLE.alpha, "b1") == {3, 7, 13}
    assert size_of(EXAMPLE.alpha, B_INF) == INF and nps_of(EXAMPLE.alpha, B_INF) == frozenset()
    assert pt_of(EXAMPLE.beta, "y") == "b1" and start_of(EXAMPLE.beta, "y", "b1") == 4
    assert pt_of(EXAMPLE.beta, "w") == "b0" and start_of(EXAMPLE.beta, "w", "b0") == 0


def test_start_of_other_buffer_is_inf():
    assert start_of(EXAMPLE.beta, "y", "b0") == INF


def test_initial_state():
    s = initial_state(["b1", "b2"], ["x"])
    assert set(s.alpha) == {"b1", "b2", B_INF}
    assert all(info == (INF, frozenset()) for info in s.alpha.values())
    assert s.beta == {"x": PtrInfo(B_INF, INF)}
    empty = initial_state([], [])
    assert empty.beta == {} and set(empty.alpha) == {B_INF}


def test_rnps_examples():
    x = frozenset({3, 7, 13})
    assert rnps(x, 14, 0, 4, ">=") == {7, 13}
    assert rnps(x, 14, 0, 6, "<") == {3}
    assert rnps(x, 14, 0, 14, ">=") == frozenset()
    assert rnps(frozenset(), 5, 1, 0, ">=") == frozenset()


def test_rnps_saturation_hook():
    hits = []
    assert rnps(frozenset({3, 13}), 14, 4, 0, ">=", lambda: hits.append(1)) == {7, INF}
    assert hits == [1]
    # INF members are carried, not freshly produced
    hits.clear()
    rnps(frozenset({INF}), 14, 0, 0, ">=", lambda: hits.append(1))
    assert hits == []


def test_end_of_examples():
    assert end_of(EXAMPLE, "y", "b1") == 7
    after_call1 = EXAMPLE.with_buf("b1", EXAMPLE.alpha["b1"]._replace(nps=frozenset({3, 10, 13})))
    assert end_of(after_call1, "y", "b1") == 10
    v = EXAMPLE.with_ptr("v", PtrInfo("b1", 14))
    assert end_of(v, "v", "b1") == INF


@given(nps_sets, sizes)
def test_pivot_zero_keeps_everything(x, sat):
    if sat != INF and all(p == INF or p <= sat for p in x):
        r = rnps(x, sat, 0, 0, ">=")
        assert r == x


@given(nps_sets, sizes, sizes)
def test_end_is_antitone_in_start(x, a, b):
    lo, hi = sorted((a, b))
    a = {"b": BufInfo(20, x)}
    assert end_in(a, "b", lo) <= end_in(a, "b", hi)
