"""Analysis mode in which a pointer may refer to several buffers at once.

A pointer's row is either ``None`` (no defined pointee: the analogue of
pointing to ``b_inf``) or a dict ``{buffer: offset}`` of its possible
pointees.  Rows from two paths are merged by keeping every pointee and
meeting offsets of buffers present on both sides.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional, Set

from . import ir
from .lattice import (
    B_INF,
    INF,
    BufInfo,
    NullPosSet,
    Size,
    is_inf,
    meet_alpha,
    meet_nps,
    meet_size,
    sat_add,
    size_sub,
)
from .solver import Domain
from .state import AnalysisState, end_in, nps_of, size_of
from .transfer import (
    Fresh,
    TransferOutcome,
    at_position,
    NULL_REMOVERS,
    copy_length,
    havoc,
    index_char_nps,
    index_null_nps,
    memcpy_nps,
    nps_before,
)

MultiRow = Optional[Dict[str, Size]]


def meet_row(r: MultiRow, r2: MultiRow) -> MultiRow:
    if r is None or r2 is None:
        return None
    out = dict(r)
    for b, k in r2.items():
        out[b] = meet_size(out[b], k) if b in out else k
    return out


def meet_beta_multi(m: Mapping[str, MultiRow], m2: Mapping[str, MultiRow]) -> dict:
    if m.keys() != m2.keys():
        raise ValueError("pointer maps range over different pointer universes")
    return {x: meet_row(r, m2[x]) for x, r in m.items()}


def pt_set(m: Mapping[str, MultiRow], x: str) -> Set[str]:
    """Buffers ``x`` points to at a known offset."""
    row = m.get(x)
    return {b for b, k in (row or {}).items() if not is_inf(k)}


def initial_state_multi(sites: Iterable[str], pointers: Iterable[str]) -> AnalysisState:
    alpha = {b: BufInfo(INF, frozenset()) for b in sites}
    alpha[B_INF] = BufInfo(INF, frozenset())
    return AnalysisState(alpha, {x: None for x in pointers})


def meet_state_multi(s: AnalysisState, s2: AnalysisState) -> AnalysisState:
    return AnalysisState(meet_alpha(s.alpha, s2.alpha), meet_beta_multi(s.beta, s2.beta))


def _row(s: AnalysisState, x: str) -> Dict[str, Size]:
    return dict(s.beta.get(x) or {})


def _copy_pos(s: AnalysisState, op: str, b: str, start: Size, fresh: Fresh) -> Size:
    if op in (ir.STRCPY, ir.STRNCPY):
        return start
    return end_in(s.alpha, b, start, fresh.mark)


def r_strfun_multi(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None):
    """Shared approximation of ``R`` for string functions over all pointees.

    Longest source string, smallest destination size, farthest copy position.
    Returns ``(D, {b: K(b)}, R)``.
    """
    fresh = fresh or Fresh()
    xs = _row(s, n.x)
    ys = _row(s, n.y)
    if not xs:
        return [], {}, frozenset()
    spans = [size_sub(end_in(s.alpha, b, k, fresh.mark), k) for b, k in ys.items()]
    span = max(spans) if spans else INF
    size_x = min(size_of(s.alpha, b) for b in xs)
    copy_pos = max(_copy_pos(s, n.op, b, k, fresh) for b, k in xs.items())
    # one pointee at an unknown offset leaves the leftmost write position unknown
    start_x = INF if any(is_inf(k) for k in xs.values()) else min(xs.values())
    nps_x = _meet_many(nps_of(s.alpha, b) for b in xs)
    m = ir.resolve_extent(n.extent, "index_or_shift") if n.extent is not None else INF
    m_lo = ir.extent_low(n.extent) if n.extent is not None else None
    length, certain = copy_length(n.op, span, m, m_lo)
    np_src = fresh.add(length, copy_pos, size_x)
    before = nps_before(nps_x, size_x, start_x, fresh)
    after = fresh.rnps(nps_x, size_x, 0, np_src, ">=")
    r = before | at_position(np_src, certain) | after
    return sorted(xs), {b: size_of(s.alpha, b) for b in xs}, r


def _meet_many(sets: Iterable[NullPosSet]) -> NullPosSet:
    acc = None
    for xs in sets:
        acc = xs if acc is None else meet_nps(acc, xs)
    return acc if acc is not None else frozenset()


def r_memcpy_multi(s: AnalysisState, n: ir.Stmt, fresh: Optional[Fresh] = None):
    fresh = fresh or Fresh()
    xs = _row(s, n.x)
    ys = _row(s, n.y) or {B_INF: INF}
    if not xs:
        return [], {}, frozenset()
    m = ir.resolve_extent(n.extent, "index_or_shift")
    m_lo = ir.extent_low(n.extent)
    size_x = min(size_of(s.alpha, b) for b in xs)
    parts = []
    for bx, kx in xs.items():
        for by, ky in ys.items():
            parts.append(memcpy_nps(nps_of(s.alpha, bx), size_x, kx,
                                    nps_of(s.alpha, by), size_of(s.alpha, by), ky, m, fresh, m_lo))
    return sorted(xs), {b: size_of(s.alpha, b) for b in xs}, _meet_many(parts)


def update_buf_multi(a: Mapping[str, BufInfo], n: ir.Stmt, xs: Iterable[str],
                     sizes: Mapping[str, Size], r, weak: bool = False) -> dict:
    """Fold the per-buffer update over ``xs``.

    ``r`` is either one shared null-position set or a dict of per-buffer
    sets.  With ``weak`` the new value is met with the old one, since only
    one of several pointees is actually written.
    """
    alpha = dict(a)
    pending = set(xs)
    while pending:
        b = min(pending)
        pending.discard(b)
        nps = r[b] if isinstance(r, dict) else r
        new = BufInfo(sizes[b], nps)
        if weak:
            old = alpha[b]
            new = BufInfo(meet_size(old.size, new.size), meet_nps(old.nps, new.nps))
        alpha[b] = new
    return alpha


def extractors_multi(s: AnalysisState, n: ir.Stmt, fresh: Fresh):
    """``(D, K, R)`` with ``D`` a list of buffers; ``R`` shared or per buffer."""
    op = n.op
    if op in ir.STRING_FUNCS:
        return r_strfun_multi(s, n, fresh)
    if op == ir.MEMCPY:
        return r_memcpy_multi(s, n, fresh)
    xs = _row(s, n.x)
    if op == ir.FREE:
        return sorted(xs), {b: 0 for b in xs}, {b: nps_of(s.alpha, b) for b in xs}
    if op in (ir.INDEX_NULL, ir.INDEX_CHAR):
        i = ir.resolve_extent(n.extent, "index_or_shift")
        kernel = index_null_nps if op == ir.INDEX_NULL else index_char_nps
        lo = ir.extent_low(n.extent)
        r = {b: kernel(nps_of(s.alpha, b), size_of(s.alpha, b), k, i, fresh, lo) for b, k in xs.items()}
        return sorted(xs), {b: size_of(s.alpha, b) for b in xs}, r
    return None


def update_bpt_multi(s: AnalysisState, n: ir.Stmt):
    op = n.op
    if op in ir.ALLOCS:
        beta = dict(s.beta)
        beta[n.x] = {n.site: 0}
        return beta
    if op == ir.ASSIGN:
        beta = dict(s.beta)
        beta[n.x] = s.beta[n.y]
        return beta
    if op == ir.ASSIGN_ADD:
        beta = dict(s.beta)
        row = s.beta[n.y]
        i = ir.resolve_extent(n.extent, "index_or_shift")
        beta[n.x] = None if row is None else {
            b: sat_add(k, i, size_of(s.alpha, b)) for b, k in row.items()}
        return beta
    return s.beta


def update_maps_multi(s: AnalysisState, n: ir.Stmt) -> TransferOutcome:
    fresh = Fresh()
    alpha = s.alpha
    dest = None
    if n.op == ir.MALLOC or n.op == ir.CALLOC:
        size = ir.resolve_extent(n.extent, "alloc")
        nps = frozenset() if n.op == ir.MALLOC or is_inf(size) else frozenset(range(size + 1))
        alpha = dict(s.alpha)
        alpha[n.site] = BufInfo(size, nps)
        dest = n.site
    else:
        triple = extractors_multi(s, n, fresh)
        if triple is not None:
            xs, sizes, r = triple
            if xs:
                alpha = update_buf_multi(s.alpha, n, xs, sizes, r, weak=len(xs) > 1)
                dest = xs[0]
            elif n.op in NULL_REMOVERS:
                alpha = havoc(s.alpha, n.op)
    beta = update_bpt_multi(s, n)
    out = s if alpha is s.alpha and beta is s.beta else AnalysisState(alpha, beta)
    return TransferOutcome(out, fresh.hit and dest is not None, dest)


MULTI = Domain(
    initial=lambda g: initial_state_multi(g.alloc_sites(), g.pointers),
    meet=meet_state_multi,
    transfer=update_maps_multi,
)

__all__ = [
    "MULTI", "meet_beta_multi", "pt_set", "r_strfun_multi", "r_memcpy_multi",
    "update_buf_multi", "update_maps_multi", "initial_state_multi",
]
