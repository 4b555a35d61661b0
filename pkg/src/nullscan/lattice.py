"""Value domains and meets: sizes, buffer identities, null-position sets.

Sizes, offsets and null positions share one representation: a
non-negative ``int`` or :data:`INF` (``math.inf``).  Using the float
infinity keeps the natural order (every finite value below ``INF``) and
lets sizes live in ordinary sets and dicts.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, NamedTuple, Union

INF = math.inf
Size = Union[int, float]
NullPosSet = frozenset

# buffer identities are strings: "b<site>" for allocation sites
B_INF = "b_inf"


def buf_id(site: int) -> str:
    return f"b{site}"


def is_inf(v: Size) -> bool:
    return v == INF


def sat_add(i: Size, j: Size, k: Size) -> Size:
    """Saturated addition: ``i + j`` if it fits in ``k`` (and ``k`` is finite)."""
    if is_inf(i) or is_inf(j) or is_inf(k):
        return INF
    s = i + j
    return s if s <= k else INF


def size_sub(i: Size, j: Size) -> Size:
    """Subtraction on sizes; anything undefined or negative sinks to INF."""
    if is_inf(i) or is_inf(j) or i < j:
        return INF
    return i - j


def size_min(i: Size, j: Size) -> Size:
    return i if i <= j else j


def compare(i: Size, op: str, pivot: Size) -> bool:
    """Relational test used by :func:`rnps`.

    An INF left operand passes ``>=``/``>`` against everything and
    ``<=``/``<``/``==`` only against INF, so overflow evidence survives
    both the before- and after-filters of the string transfer functions.
    """
    if is_inf(i):
        if op in (">=", ">"):
            return True
        if op in ("<=", "<", "=="):
            return is_inf(pivot)
        if op == "!=":
            return not is_inf(pivot)
        raise ValueError(f"unknown comparison {op!r}")
    if op == "<":
        return i < pivot
    if op == "<=":
        return i <= pivot
    if op == ">":
        return i > pivot
    if op == ">=":
        return i >= pivot
    if op == "==":
        return i == pivot
    if op == "!=":
        return i != pivot
    raise ValueError(f"unknown comparison {op!r}")


def meet_size(i: Size, j: Size) -> Size:
    return i if i == j else INF


def meet_bufid(b: str, b2: str) -> str:
    return b if b == b2 else B_INF


def fin(xs: Iterable[Size]) -> NullPosSet:
    return frozenset(v for v in xs if not is_inf(v))


def inf_part(xs: Iterable[Size]) -> NullPosSet:
    return frozenset(v for v in xs if is_inf(v))


def meet_nps(xs: NullPosSet, ys: NullPosSet) -> NullPosSet:
    """Intersect the finite positions, keep INF from either side."""
    return (fin(xs) & fin(ys)) | inf_part(xs) | inf_part(ys)


def glb_le(xs: Iterable[Size]) -> Size:
    return min(xs, default=INF)


class BufInfo(NamedTuple):
    size: Size
    nps: NullPosSet


class PtrInfo(NamedTuple):
    buf: str
    offset: Size


UNDEF_BUF = BufInfo(INF, frozenset())
UNDEF_PTR = PtrInfo(B_INF, INF)


def meet_alpha(a: Mapping[str, BufInfo], a2: Mapping[str, BufInfo]) -> dict:
    if a.keys() != a2.keys():
        raise ValueError("buffer maps range over different buffer universes")
    out = {}
    for b, (k, xs) in a.items():
        k2, ys = a2[b]
        out[b] = BufInfo(meet_size(k, k2), meet_nps(xs, ys))
    return out


def meet_ptr(p: PtrInfo, p2: PtrInfo) -> PtrInfo:
    b = meet_bufid(p.buf, p2.buf)
    if b == B_INF:
        return UNDEF_PTR
    return PtrInfo(b, meet_size(p.offset, p2.offset))


def meet_beta(m: Mapping[str, PtrInfo], m2: Mapping[str, PtrInfo]) -> dict:
    if m.keys() != m2.keys():
        raise ValueError("pointer maps range over different pointer universes")
    return {x: meet_ptr(p, m2[x]) for x, p in m.items()}


def format_size(v: Size) -> str:
    return "inf" if is_inf(v) else str(v)


def sorted_positions(xs: Iterable[Size]) -> list:
    return sorted(xs)


def buf_sort_key(b: str):
    if b == B_INF:
        return (1, 0, b)
    tail = b[1:]
    return (0, int(tail), b) if tail.isdigit() else (0, -1, b)
