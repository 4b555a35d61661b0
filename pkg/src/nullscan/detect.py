"""Diagnostics from a solved flow result."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

from . import ir
from .lattice import B_INF, INF, PtrInfo, Size, format_size, is_inf, sat_add
from .solver import FlowResult
from .state import AnalysisState, end_in, size_of

WRITE_OVERFLOW = "write_overflow"
READ_OVERFLOW = "potential_read_overflow"
WRITE_UNDEFINED = "write_through_undefined"

ERROR_KINDS = (WRITE_OVERFLOW, WRITE_UNDEFINED)


@dataclass(frozen=True)
class Diagnostic:
    stmt_id: int
    line: int
    kind: str
    buffer: str
    reason: str
    message: str

    @property
    def severity(self) -> str:
        return "error" if self.kind in ERROR_KINDS else "warning"

    def to_json(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return f"{self.line}:{self.kind}:{self.buffer}:{self.reason}:{self.message}"


def pointees(s: AnalysisState, x: str) -> List[Tuple[str, Size]]:
    """(buffer, offset) pairs ``x`` may refer to, in either analysis mode."""
    row = s.beta.get(x)
    if isinstance(row, PtrInfo):
        return [(row.buf, row.offset)]
    if not row:
        # undefined pointer (or one with no known pointee)
        return [(B_INF, INF)]
    return sorted(row.items())


def _check_ref(s: AnalysisState, b: str, start: Size) -> Optional[str]:
    if b == B_INF:
        return "undefined_buffer"
    if is_inf(size_of(s.alpha, b)):
        return "undefined_size"
    if is_inf(start):
        return "undefined_offset"
    return None


def _read_problem(s: AnalysisState, x: str, idx: Optional[Size],
                  bound: Optional[Size]) -> Optional[Tuple[str, str]]:
    for b, start in pointees(s, x):
        reason = _check_ref(s, b, start)
        if reason is None:
            size = size_of(s.alpha, b)
            if idx is not None:
                if is_inf(sat_add(idx, start, size)):
                    reason = "saturation"
            elif is_inf(end_in(s.alpha, b, start)):
                # a bounded scan only overflows when the bound leaves the buffer
                if bound is None or is_inf(sat_add(bound, start, size)):
                    reason = "no_null_terminator"
        if reason is not None:
            return b, reason
    return None


def check_read(s: AnalysisState, x: str, idx: Optional[Size] = None,
               stmt: Optional[ir.Stmt] = None, bound: Optional[Size] = None) -> Optional[Diagnostic]:
    """Check a read through ``x`` against the state before the reading statement.

    ``idx`` selects an indexed read (``x[idx]``); otherwise the read scans
    for a terminator, optionally limited to ``bound`` characters.
    """
    problem = _read_problem(s, x, idx, bound)
    if problem is None:
        return None
    b, reason = problem
    what = f"{x}[{format_size(idx)}]" if idx is not None else x
    msg = {
        "undefined_buffer": f"read through {what}, which has no defined buffer",
        "undefined_size": f"read through {what} into {b}, whose size is not known",
        "undefined_offset": f"read through {what} at an unknown offset in {b}",
        "no_null_terminator": f"string at {what} may run past the end of {b}",
        "saturation": f"read of {what} may fall outside {b}",
    }[reason]
    sid, line = (stmt.id, stmt.line) if stmt is not None else (-1, 0)
    return Diagnostic(sid, line, READ_OVERFLOW, b, reason, msg)


def _write_problem(s: AnalysisState, n: ir.Stmt) -> Optional[Tuple[str, str]]:
    for b, start in pointees(s, n.x):
        if n.op == ir.FREE:
            if b == B_INF:
                return b, "undefined_buffer"
            continue
        reason = _check_ref(s, b, start)
        if reason is not None:
            return b, reason
    return None


def _string_reads(n: ir.Stmt):
    """(pointer, idx, bound) triples read by a writing statement."""
    m = ir.resolve_extent(n.extent, "index_or_shift") if n.extent is not None else None
    if n.op == ir.STRCPY:
        return [(n.y, None, None)]
    if n.op == ir.STRCAT:
        return [(n.x, None, None), (n.y, None, None)]
    if n.op == ir.STRNCPY:
        return [(n.y, None, m)]
    if n.op == ir.STRNCAT:
        return [(n.x, None, None), (n.y, None, m)]
    return []


def statement_diagnostics(fr: FlowResult, n: ir.Stmt, check_reads: bool = True) -> List[Diagnostic]:
    s = fr.bin[n.id]
    out: List[Diagnostic] = []
    if n.op in ir.BUFFER_WRITERS:
        problem = _write_problem(s, n)
        if problem is not None:
            b, reason = problem
            out.append(Diagnostic(n.id, n.line, WRITE_UNDEFINED, b, reason,
                                  f"{n.render()} writes through {n.x} ({reason.replace('_', ' ')})"))
        elif fr.fresh(n.id):
            b = fr.outcome[n.id].dest
            out.append(Diagnostic(n.id, n.line, WRITE_OVERFLOW, b, "saturation",
                                  f"{n.render()} writes past the end of {b}"))
        if n.op == ir.MEMCPY and problem is None and not fr.fresh(n.id):
            d = check_read(s, n.y, 0, n)
            if d is not None:
                out.append(d)
    if check_reads:
        if n.op in (ir.READ, ir.STRLEN):
            d = check_read(s, n.x, None, n)
            if d is not None:
                out.append(d)
        elif n.op == ir.READ_INDEX:
            d = check_read(s, n.x, ir.resolve_extent(n.extent, "index_or_shift"), n)
            if d is not None:
                out.append(d)
        for x, idx, bound in _string_reads(n):
            d = check_read(s, x, idx, n, bound)
            if d is not None:
                out.append(d)
    return out


def collect(fr: FlowResult, g: Optional[ir.Cfg] = None, check_reads: bool = True) -> List[Diagnostic]:
    """All diagnostics, ordered by statement id."""
    g = g or fr.cfg
    out: List[Diagnostic] = []
    for n in g.statements():
        out.extend(statement_diagnostics(fr, n, check_reads))
    out.sort(key=lambda d: (d.stmt_id, d.kind))
    return out
