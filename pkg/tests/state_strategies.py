"""Whole analysis states and core statements for transfer properties."""

from hypothesis import strategies as st

from nullscan import ir
from nullscan.ir import UNKNOWN, Const, Range, Stmt
from nullscan.lattice import B_INF, INF, BufInfo, PtrInfo
from nullscan.state import AnalysisState

BUFS = ("b1", "b2")
PTRS = ("x", "y")

_sizes = st.one_of(st.integers(0, 16), st.just(INF))


@st.composite
def _buf(draw):
    size = draw(_sizes)
    hi = 16 if size == INF else size
    xs = draw(st.frozensets(st.one_of(st.integers(0, hi), st.just(INF)), max_size=5))
    return BufInfo(size, xs)


@st.composite
def states(draw):
    alpha = {b: draw(_buf()) for b in BUFS}
    alpha[B_INF] = BufInfo(INF, frozenset())
    beta = {}
    for x in PTRS:
        b = draw(st.sampled_from(BUFS + (B_INF,)))
        beta[x] = PtrInfo(b, INF if b == B_INF else draw(_sizes))
    return AnalysisState(alpha, beta)


states = states()

extents = st.one_of(st.integers(0, 16).map(Const),
                    st.tuples(st.integers(0, 12), st.integers(0, 4)).map(lambda t: Range(t[0], t[0] + t[1])),
                    st.just(UNKNOWN))


@st.composite
def stmts(draw):
    op = draw(st.sampled_from([k for k in ir.KINDS if k != ir.NOP]))
    x, y = draw(st.sampled_from(PTRS)), draw(st.sampled_from(PTRS))
    needs_extent = op in ir.ALLOCS + (ir.ASSIGN_ADD, ir.INDEX_NULL, ir.INDEX_CHAR, ir.MEMCPY,
                                      ir.STRNCPY, ir.STRNCAT, ir.READ_INDEX)
    two = op in ir.STRING_FUNCS + (ir.MEMCPY, ir.ASSIGN, ir.ASSIGN_ADD)
    return Stmt(1, op, x, y if two else None, draw(extents) if needs_extent else None)


stmts = stmts()
