"""Per-statement flow functions of the buffer analysis.

Every buffer-writing statement is described by a triple
``(D, K, R)``: the destination buffer, its new size and its new null
position set.  :func:`update_maps` applies the triple to the buffer map
and performs the pointer-map update for pointer assignments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from . import ir
from .lattice import (
    B_INF,
    INF,
    BufInfo,
    compare,
    NullPosSet,
    PtrInfo,
    Size,
    is_inf,
    sat_add,
    size_min,
    size_sub,
)
from .state import (
    AnalysisState,
    end_in,
    nps_of,
    pt_of,
    rnps,
    size_of,
    start_of,
)

Triple = Tuple[str, Size, NullPosSet]


class Fresh:
    """Records whether saturation over finite operands produced INF."""

    def __init__(self):
        self.hit = False

    def mark(self):
        self.hit = True

    def add(self, i: Size, j: Size, k: Size) -> Size:
        v = sat_add(i, j, k)
        if v == INF and not (is_inf(i) or is_inf(j) or is_inf(k)):
            self.hit = True
        return v

    def rnps(self, xs, sat, shift, pivot, cmp) -> NullPosSet:
        return rnps(xs, sat, shift, pivot, cmp, self.mark)


@dataclass(frozen=True)
class TransferOutcome:
    state: AnalysisState
    fresh_overflow: bool = False
    dest: Optional[str] = None  # buffer written by the statement, if any


def _index(n: ir.Stmt) -> Size:
    return ir.resolve_extent(n.extent, "index_or_shift")


# -- kernels shared with the multi-pointee mode -----------------------------

def _index_pos(size_x: Size, start_x: Size, i: Size, fresh: Fresh) -> Size:
    pos = fresh.add(i, start_x, size_x)
    if is_inf(pos) and not (is_inf(start_x) or is_inf(size_x)):
        # an unknown index into a well-defined buffer may land anywhere
        fresh.mark()
    return pos


def index_null_nps(nps_x: NullPosSet, size_x: Size, start_x: Size, i: Size,
                   fresh: Fresh, lo: Optional[int] = None) -> NullPosSet:
    """``x[i] = '\\0'``; ``lo`` is the low end when ``i`` is the top of a range."""
    pos = _index_pos(size_x, start_x, i, fresh)
    if lo is not None and lo != i and not is_inf(pos):
        # the terminator lands somewhere in a window: no single position is certain
        return nps_x
    return nps_x | {pos}


def index_char_nps(nps_x: NullPosSet, size_x: Size, start_x: Size, i: Size,
                   fresh: Fresh, lo: Optional[int] = None) -> NullPosSet:
    """``x[i] = c``; every null the write may hit is dropped."""
    pos = _index_pos(size_x, start_x, i, fresh)
    if is_inf(start_x) or is_inf(size_x):
        return frozenset({INF})
    low = start_x + (i if lo is None else lo)
    kept = frozenset(p for p in nps_x if p < low or compare(p, ">", pos))
    # removing INF would erase overflow evidence; record it instead
    return kept | {INF} if is_inf(pos) else kept


def strfun_nps(op: str, nps_x: NullPosSet, size_x: Size, start_x: Size,
               end_x: Size, span_y: Size, m: Size, fresh: Fresh,
               m_lo: Optional[int] = None) -> Tuple[Size, NullPosSet]:
    """Null positions after a strcpy/strcat family call.

    ``span_y`` is ``end_y - start_y``, the source string length, and
    ``m_lo`` the low end of a ranged length operand.  Returns ``(np_src, R)``.
    """
    copy_pos = start_x if op in (ir.STRCPY, ir.STRNCPY) else end_x
    length, certain = copy_length(op, span_y, m, m_lo)
    np_src = fresh.add(length, copy_pos, size_x)
    before = nps_before(nps_x, size_x, start_x, fresh)
    after = fresh.rnps(nps_x, size_x, 0, np_src, ">=")
    return np_src, before | at_position(np_src, certain) | after


def nps_before(nps_x: NullPosSet, size_x: Size, start_x: Size, fresh: Fresh) -> NullPosSet:
    """Nulls left of the write.  From an unknown offset the write may start
    anywhere, so no finite null is certain to survive."""
    if is_inf(start_x):
        return frozenset()
    return fresh.rnps(nps_x, size_x, 0, start_x, "<")


def copy_length(op: str, span_y: Size, m: Size, m_lo: Optional[int] = None) -> Tuple[Size, bool]:
    """Characters copied, and whether the terminator position is exact.

    When a ranged bound decides the length, the copy ends somewhere in a
    window, so no single terminator position can be claimed.
    """
    if op not in (ir.STRNCPY, ir.STRNCAT):
        return span_y, True
    length = size_min(m + 1, span_y)
    if is_inf(span_y):
        # the bound limits the copy, but an untracked null may end it sooner
        return length, False
    if m_lo is None or m_lo == m:
        return length, True
    return length, size_min(m_lo + 1, span_y) == length


def at_position(np_src: Size, certain: bool) -> NullPosSet:
    return frozenset({np_src}) if certain or is_inf(np_src) else frozenset()


def memcpy_nps(nps_x: NullPosSet, size_x: Size, start_x: Size,
               nps_y: NullPosSet, size_y: Size, start_y: Size,
               m: Size, fresh: Fresh, m_lo: Optional[int] = None) -> NullPosSet:
    """Cells ``start .. start + m`` are copied (the bound is inclusive).

    With a ranged ``m`` only the nulls inside the shortest copy are carried
    over, while the longest copy decides what is overwritten.
    """
    if m_lo is None:
        m_lo = m
    # signed shift: copying from further right in the source moves nulls left
    shift = INF if is_inf(start_x) or is_inf(start_y) else start_x - start_y
    src = (fresh.rnps(nps_y, size_x, shift, start_y, ">=")
           & fresh.rnps(nps_y, size_x, shift, _plus(start_y, m_lo), "<="))
    before = nps_before(nps_x, size_x, start_x, fresh)
    # cell start_x + m is overwritten, so only nulls strictly beyond it survive
    after = fresh.rnps(nps_x, size_x, 0, _plus(start_x, m), ">")
    return before | after | src | memcpy_oflow(size_x, start_x, size_y, start_y, m, fresh)


def _plus(i: Size, j: Size) -> Size:
    return INF if is_inf(i) or is_inf(j) else i + j


def memcpy_oflow(size_x, start_x, size_y, start_y, m, fresh: Fresh) -> NullPosSet:
    out = set()
    for size, start in ((size_x, start_x), (size_y, start_y)):
        v = fresh.add(m, start, size)
        if v != _plus(m, start):
            out.add(v)
        elif is_inf(v):
            # unknown length or offset: the copy may run past either buffer
            out.add(v)
            if not (is_inf(start) or is_inf(size)):
                fresh.mark()
    return frozenset(out)


# -- extractor triples --------------------------------------------------------

def r_alloc(s: AnalysisState, n: ir.Stmt) -> Triple:
    return n.site, ir.resolve_extent(n.extent, "alloc"), frozenset()


def r_calloc(s: AnalysisState, n: ir.Stmt) -> Triple:
    m = ir.resolve_extent(n.extent, "alloc")
    # an undefined size gives no null positions we could name
    nps = frozenset() if is_inf(m) else frozenset(range(m + 1))
    return n.site, m, nps


def r_free(s: AnalysisState, n: ir.Stmt) -> Triple:
    b = pt_of(s.beta, n.x)
    return b, 0, nps_of(s.alpha, b)


def _dest(s: AnalysisState, x: str):
    b = pt_of(s.beta, x)
    return b, size_of(s.alpha, b), nps_of(s.alpha, b), start_of(s.beta, x, b)


def r_index_null(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None) -> Triple:
    fresh = fresh or Fresh()
    b, size, nps, start = _dest(s, n.x)
    return b, size, index_null_nps(nps, size, start, _index(n), fresh, ir.extent_low(n.extent))


def r_index_char(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None) -> Triple:
    fresh = fresh or Fresh()
    b, size, nps, start = _dest(s, n.x)
    return b, size, index_char_nps(nps, size, start, _index(n), fresh, ir.extent_low(n.extent))


def r_strfun(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None) -> Triple:
    fresh = fresh or Fresh()
    bx, size_x, nps_x, start_x = _dest(s, n.x)
    end_x = end_in(s.alpha, bx, start_x, fresh.mark)
    by = pt_of(s.beta, n.y)
    start_y = start_of(s.beta, n.y, by)
    span_y = size_sub(end_in(s.alpha, by, start_y, fresh.mark), start_y)
    m = _index(n) if n.extent is not None else INF
    m_lo = ir.extent_low(n.extent) if n.extent is not None else None
    _, r = strfun_nps(n.op, nps_x, size_x, start_x, end_x, span_y, m, fresh, m_lo)
    return bx, size_x, r


def r_memcpy(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None) -> Triple:
    fresh = fresh or Fresh()
    bx, size_x, nps_x, start_x = _dest(s, n.x)
    by, size_y, nps_y, start_y = _dest(s, n.y)
    r = memcpy_nps(nps_x, size_x, start_x, nps_y, size_y, start_y, _index(n), fresh,
                   ir.extent_low(n.extent))
    return bx, size_x, r


def extractors(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None) -> Optional[Triple]:
    """The ``(D, K, R)`` triple of a buffer-writing statement, else None."""
    fresh = fresh if fresh is not None else Fresh()
    op = n.op
    if op == ir.MALLOC:
        return r_alloc(s, n)
    if op == ir.CALLOC:
        return r_calloc(s, n)
    if op == ir.FREE:
        return r_free(s, n)
    if op == ir.INDEX_NULL:
        return r_index_null(s, n, fresh)
    if op == ir.INDEX_CHAR:
        return r_index_char(s, n, fresh)
    if op in ir.STRING_FUNCS:
        return r_strfun(s, n, fresh)
    if op == ir.MEMCPY:
        return r_memcpy(s, n, fresh)
    return None


NULL_REMOVERS = (ir.FREE, ir.INDEX_CHAR, ir.MEMCPY) + ir.STRING_FUNCS


def havoc(a, op: str) -> dict:
    """A write through an undefined pointer may hit any buffer: no finite
    null is certain any more, and after a free no size is either."""
    return {b: info if b == B_INF else BufInfo(INF if op == ir.FREE else info.size, frozenset({INF}))
            for b, info in a.items()}


def update_buf(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None):
    triple = extractors(s, n, fresh)
    if triple is not None and triple[0] == B_INF and n.op in NULL_REMOVERS:
        return havoc(s.alpha, n.op)
    if triple is None or triple[0] == B_INF:
        # non-writers, and null writes through the undefined buffer, leave alpha alone
        return s.alpha
    d, k, r = triple
    alpha = dict(s.alpha)
    alpha[d] = BufInfo(k, r)
    return alpha


def shift_offset(s: AnalysisState, y: str, i: Size) -> PtrInfo:
    b = pt_of(s.beta, y)
    return PtrInfo(b, sat_add(start_of(s.beta, y, b), i, size_of(s.alpha, b)))


def update_bpt(s: AnalysisState, n: ir.Stmt):
    op = n.op
    if op in ir.ALLOCS:
        beta = dict(s.beta)
        beta[n.x] = PtrInfo(n.site, 0)
        return beta
    if op == ir.ASSIGN:
        beta = dict(s.beta)
        beta[n.x] = s.beta[n.y]
        return beta
    if op == ir.ASSIGN_ADD:
        beta = dict(s.beta)
        beta[n.x] = shift_offset(s, n.y, _index(n))
        return beta
    return s.beta


def update_maps(s: AnalysisState, n: ir.Stmt) -> TransferOutcome:
    fresh = Fresh()
    alpha = update_buf(s, n, fresh)
    beta = update_bpt(s, n)
    dest = None
    if n.op in ir.ALLOCS:
        dest = n.site
    elif n.op in ir.BUFFER_WRITERS:
        dest = pt_of(s.beta, n.x)
    out = s if alpha is s.alpha and beta is s.beta else AnalysisState(alpha, beta)
    return TransferOutcome(out, fresh.hit and dest not in (None, B_INF), dest)
