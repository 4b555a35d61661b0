"""Analysis state (buffer map, pointer map) and its extractor functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Mapping, Optional

from .lattice import (
    B_INF,
    INF,
    UNDEF_BUF,
    UNDEF_PTR,
    BufInfo,
    NullPosSet,
    PtrInfo,
    Size,
    compare,
    glb_le,
    meet_alpha,
    meet_beta,
    sat_add,
)

# callback fired when a saturated addition over finite operands yields INF
SatHook = Optional[Callable[[], None]]


@dataclass(frozen=True, eq=True)
class AnalysisState:
    alpha: Mapping[str, BufInfo]
    beta: Mapping  # pointer -> PtrInfo, or pointer -> MultiRow in multi mode

    __hash__ = None  # mappings are not hashable

    def with_buf(self, b: str, info: BufInfo) -> "AnalysisState":
        alpha = dict(self.alpha)
        alpha[b] = info
        return AnalysisState(alpha, self.beta)

    def with_ptr(self, x: str, value) -> "AnalysisState":
        beta = dict(self.beta)
        beta[x] = value
        return AnalysisState(self.alpha, beta)


def size_of(a: Mapping[str, BufInfo], b: str) -> Size:
    return a.get(b, UNDEF_BUF).size


def nps_of(a: Mapping[str, BufInfo], b: str) -> NullPosSet:
    return a.get(b, UNDEF_BUF).nps


def pt_of(m: Mapping[str, PtrInfo], x: str) -> str:
    return m.get(x, UNDEF_PTR).buf


def start_of(m: Mapping[str, PtrInfo], x: str, b: str) -> Size:
    p = m.get(x, UNDEF_PTR)
    return p.offset if p.buf == b else INF


def rnps(xs: Iterable[Size], sat: Size, shift: Size, pivot: Size, cmp: str,
         on_saturate: SatHook = None) -> NullPosSet:
    """Filter null positions against ``pivot`` and shift them with saturation."""
    out = set()
    for i in xs:
        if compare(i, cmp, pivot):
            v = sat_add(i, shift, sat)
            if on_saturate is not None and v == INF and INF not in (i, shift, sat):
                on_saturate()
            out.add(v)
    return frozenset(out)


def end_in(a: Mapping[str, BufInfo], b: str, start: Size, on_saturate: SatHook = None) -> Size:
    """First null position at or after ``start`` in buffer ``b``."""
    return glb_le(rnps(nps_of(a, b), size_of(a, b), 0, start, ">=", on_saturate))


def end_of(s: AnalysisState, x: str, b: str) -> Size:
    return end_in(s.alpha, b, start_of(s.beta, x, b))


def initial_state(sites: Iterable[str], pointers: Iterable[str]) -> AnalysisState:
    """Boundary value: every buffer undefined, every pointer at (b_inf, inf)."""
    alpha: Dict[str, BufInfo] = {b: UNDEF_BUF for b in sites}
    alpha[B_INF] = UNDEF_BUF
    beta = {x: UNDEF_PTR for x in pointers}
    return AnalysisState(alpha, beta)


def meet_state(s: AnalysisState, s2: AnalysisState) -> AnalysisState:
    return AnalysisState(meet_alpha(s.alpha, s2.alpha), meet_beta(s.beta, s2.beta))


def make_state(alpha: Mapping[str, tuple], beta: Mapping[str, tuple]) -> AnalysisState:
    """Build a state from plain tuples, e.g. ``{"b1": (14, {3, 7, 13})}``."""
    a = {b: BufInfo(k, frozenset(xs)) for b, (k, xs) in alpha.items()}
    a.setdefault(B_INF, UNDEF_BUF)
    return AnalysisState(a, {x: PtrInfo(b, i) for x, (b, i) in beta.items()})
