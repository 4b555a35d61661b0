"""Concrete interpreter for the IR, used as ground truth for soundness checks.

Buffers hold cells ``0..size`` inclusive, each either null or non-null.
Every nondeterministic decision (branch arm, loop continuation, the
concrete value of a ranged or unknown extent) is drawn from a
:class:`Chooser`, so a run is fully determined by its choice sequence.
Searching over choice sequences gives the exhaustive or sampled
exploration used by :func:`check_soundness`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import ir
from .ir import Cfg, Extent, Stmt

UNKNOWN_MAX = 24  # concrete values tried for an extent written as "?"


class Chooser:
    """Replays a prefix of choices, then continues from ``rng`` (or zeros)."""

    def __init__(self, prefix: Sequence[int] = (), rng: Optional[random.Random] = None):
        self.prefix = list(prefix)
        self.rng = rng
        self.made: List[Tuple[int, int]] = []  # (value, number of options)

    def choose(self, n: int) -> int:
        if n <= 1:
            return 0
        k = len(self.made)
        if k < len(self.prefix):
            v = min(self.prefix[k], n - 1)
        elif self.rng is not None:
            v = self.rng.randrange(n)
        else:
            v = 0
        self.made.append((v, n))
        return v


@dataclass
class Buffer:
    site: str
    cells: List[bool]  # True = null
    freed: bool = False

    @property
    def size(self) -> int:
        return len(self.cells) - 1


@dataclass
class ConcreteHeap:
    buffers: List[Buffer] = field(default_factory=list)
    env: Dict[str, Optional[Tuple[int, int]]] = field(default_factory=dict)

    def alloc(self, site: str, size: int, null: bool) -> int:
        self.buffers.append(Buffer(site, [null] * (size + 1)))
        return len(self.buffers) - 1

    def seed(self, pointer: str, site: str, text: str, offset: int = 0) -> int:
        """Allocate a buffer whose cells spell ``text`` (``"\\0"`` is null)."""
        cells = [ch == "\0" for ch in text]
        self.buffers.append(Buffer(site, cells))
        ref = len(self.buffers) - 1
        self.env[pointer] = (ref, offset)
        return ref


def heap_from_assumptions(g: Cfg) -> ConcreteHeap:
    heap = ConcreteHeap()
    refs = {}
    for name, cells in g.assumed_buffers:
        heap.buffers.append(Buffer(name, [c == "\0" for c in cells]))
        refs[name] = len(heap.buffers) - 1
    for x, b, off in g.assumed_pointers:
        heap.env[x] = (refs[b], off)
    return heap


def string_length(heap: ConcreteHeap, x: str) -> Optional[int]:
    """Length of the string ``x`` refers to, or None when it is unterminated."""
    ref = heap.env.get(x)
    if ref is None:
        return None
    buf, off = heap.buffers[ref[0]], ref[1]
    for i in range(off, len(buf.cells)):
        if buf.cells[i]:
            return i - off
    return None


@dataclass(frozen=True)
class Event:
    stmt_id: int
    kind: str  # "read" or "write"
    detail: str


@dataclass
class RunReport:
    events: List[Event]
    completed: bool
    trace: List[int]
    choices: List[int]
    heap: ConcreteHeap

    @property
    def overflow_ids(self):
        return {e.stmt_id for e in self.events}


class _Halt(Exception):
    pass


class _Interp:
    def __init__(self, g: Cfg, chooser: Chooser, heap: ConcreteHeap, loop_bound: int, max_steps: int):
        self.g = g
        self.ch = chooser
        self.heap = heap
        self.loop_bound = loop_bound
        self.max_steps = max_steps
        self.events: List[Event] = []
        for p in g.pointers:
            heap.env.setdefault(p, None)

    def value(self, e: Extent) -> int:
        if e.kind == "const":
            return e.lo
        if e.kind == "range":
            return e.lo + self.ch.choose(e.hi - e.lo + 1)
        return self.ch.choose(UNKNOWN_MAX + 1)

    def event(self, n: Stmt, kind: str, detail: str):
        self.events.append(Event(n.id, kind, detail))

    def ref(self, n: Stmt, x: str, kind: str):
        r = self.heap.env.get(x)
        if r is None:
            self.event(n, kind, f"{x} is undefined")
            raise _Halt
        return self.heap.buffers[r[0]], r[1]

    def scan(self, n: Stmt, x: str, limit: Optional[int] = None) -> Optional[int]:
        """Length of the string at ``x``, at most ``limit`` characters.

        Running off the buffer (or reading through an undefined pointer)
        records a read event and returns None: the string is unbounded
        garbage as far as the rest of the statement is concerned.
        """
        r = self.heap.env.get(x)
        if r is None:
            self.event(n, "read", f"{x} is undefined")
            return None
        buf, off = self.heap.buffers[r[0]], r[1]
        i = off
        while True:
            if limit is not None and i - off == limit:
                return limit
            if i > buf.size:
                self.event(n, "read", f"scan of {x} runs past the end of {buf.site}")
                return None
            if buf.cells[i]:
                return i - off
            i += 1

    def store(self, n: Stmt, buf: Buffer, pos: Optional[int], cells: Sequence[bool], what: str):
        """Write ``cells`` at ``pos``; whatever falls outside the buffer is an event.

        ``pos`` None means the position is past the end already.
        """
        if pos is None or pos + len(cells) - 1 > buf.size:
            self.event(n, "write", f"{what} writes outside {buf.site}")
        if pos is None:
            return
        fit = max(0, min(len(cells), buf.size + 1 - pos))
        buf.cells[pos:pos + fit] = list(cells[:fit])

    def execute(self, n: Stmt):
        op = n.op
        h = self.heap
        if op in (ir.MALLOC, ir.CALLOC):
            ref = h.alloc(n.site, self.value(n.extent), op == ir.CALLOC)
            h.env[n.x] = (ref, 0)
        elif op == ir.FREE:
            buf, _ = self.ref(n, n.x, "write")
            buf.cells = buf.cells[:1]
            buf.freed = True
        elif op == ir.ASSIGN:
            h.env[n.x] = h.env.get(n.y)
        elif op == ir.ASSIGN_ADD:
            v = self.value(n.extent)
            r = h.env.get(n.y)
            h.env[n.x] = None if r is None else (r[0], r[1] + v)
        elif op in (ir.INDEX_NULL, ir.INDEX_CHAR):
            v = self.value(n.extent)
            buf, off = self.ref(n, n.x, "write")
            self.store(n, buf, off + v, [op == ir.INDEX_NULL], n.render())
        elif op in ir.STRING_FUNCS:
            self.string_op(n)
        elif op == ir.MEMCPY:
            m = self.value(n.extent)
            bx, ox = self.ref(n, n.x, "write")
            # the length operand is an inclusive bound: cells 0..m are copied
            r = h.env.get(n.y)
            if r is None:
                self.event(n, "read", f"{n.y} is undefined")
                src = [False] * (m + 1)
            else:
                by, oy = h.buffers[r[0]], r[1]
                src = by.cells[oy:oy + m + 1]
                if len(src) < m + 1:
                    self.event(n, "read", f"memcpy reads outside {by.site}")
                    src = src + [False] * (m + 1 - len(src))
            self.store(n, bx, ox, src, n.render())
        elif op in (ir.READ, ir.STRLEN):
            self.scan(n, n.x)
        elif op == ir.READ_INDEX:
            v = self.value(n.extent)
            buf, off = self.ref(n, n.x, "read")
            if off + v < 0 or off + v > buf.size:
                self.event(n, "read", f"read of {n.x}[{v}] falls outside {buf.site}")

    def string_op(self, n: Stmt):
        op = n.op
        m = self.value(n.extent) if n.extent is not None else None
        bx, ox = self.ref(n, n.x, "write")
        pos: Optional[int] = ox
        if op in (ir.STRCAT, ir.STRNCAT):
            end = self.scan(n, n.x)
            pos = None if end is None else ox + end
        # n-variants copy at most m + 1 characters, then terminate
        limit = None if m is None else m + 1
        length = self.scan(n, n.y, limit)
        if length is None:
            length = limit
        if length is None:
            # unbounded source: the copy runs off whatever the destination is
            self.event(n, "write", f"{n.render()} copies an unterminated string")
            if pos is not None:
                bx.cells[pos:] = [False] * max(0, bx.size + 1 - pos)
            return
        self.store(n, bx, pos, [False] * length + [True], n.render())

    def run(self) -> RunReport:
        g = self.g
        trace: List[int] = []
        visits: Dict[int, int] = {}
        n = g.entry
        completed = True
        while True:
            stmt = g.nodes[n]
            trace.append(n)
            if len(trace) > self.max_steps:
                completed = False
                break
            try:
                self.execute(stmt)
            except _Halt:
                pass
            succs = g.succs.get(n, [])
            if not succs:
                break
            if stmt.note == "loop":
                # succs = [first body node, exit]; loop_bound caps the iterations
                visits[n] = visits.get(n, 0) + 1
                if visits[n] > self.loop_bound:
                    visits[n] = 0
                    n = succs[-1]
                    continue
            if stmt.note == "latch":
                # the header decides whether to iterate again
                n = _header_of(g, n)
                continue
            n = succs[self.ch.choose(len(succs))]
        return RunReport(self.events, completed, trace, [v for v, _ in self.ch.made], self.heap)


def _header_of(g: Cfg, latch: int) -> int:
    for s in g.succs[latch]:
        if g.nodes[s].note == "loop":
            return s
    return g.succs[latch][0]


def interpret(g: Cfg, chooser: Optional[Chooser] = None, loop_bound: int = 8,
              heap: Optional[ConcreteHeap] = None, max_steps: int = 10_000) -> RunReport:
    """Run ``g`` once.  ``heap`` supplies pre-existing buffers and pointers."""
    if heap is None:
        heap = heap_from_assumptions(g)
    return _Interp(g, chooser or Chooser(), heap, loop_bound, max_steps).run()


# -- exploring many runs ------------------------------------------------------

def _next_prefix(made: List[Tuple[int, int]]) -> Optional[List[int]]:
    """Lexicographic successor of a finished choice sequence, or None when done."""
    values = [v for v, _ in made]
    for i in range(len(made) - 1, -1, -1):
        v, n = made[i]
        if v + 1 < n:
            return values[:i] + [v + 1]
    return None


class Exploration:
    """Iterates run reports.  Runs alternate between walking the choice
    sequences in lexicographic order and random sampling, so a large
    choice space still sees its early decisions varied.  ``exhaustive`` is
    true once every choice sequence has been run."""

    def __init__(self, g: Cfg, trials: int, loop_bound: int = 8, seed: int = 0,
                 setup: Optional[Callable[[], ConcreteHeap]] = None):
        self.g, self.trials, self.loop_bound = g, trials, loop_bound
        self.rng = random.Random(seed)
        self.setup = setup
        self.exhaustive = False
        self.runs = 0

    def _run(self, ch: Chooser) -> RunReport:
        self.runs += 1
        return interpret(self.g, ch, self.loop_bound, self.setup() if self.setup else None)

    def __iter__(self):
        prefix: List[int] = []
        while self.runs < self.trials:
            ch = Chooser(prefix)
            yield self._run(ch)
            nxt = _next_prefix(ch.made)
            if nxt is None:
                self.exhaustive = True
                return
            prefix = nxt
            if self.runs < self.trials:
                yield self._run(Chooser((), self.rng))


@dataclass
class Verdict:
    passed: bool
    runs: int
    exhaustive: bool
    missed: List[Event]
    counterexample: Optional[RunReport] = None
    events_seen: int = 0

    def detail(self) -> str:
        if not self.passed:
            e = self.missed[0]
            return (f"undiagnosed {e.kind} overflow at statement {e.stmt_id} "
                    f"after {self.runs} executions: {e.detail}")
        scope = "all executions" if self.exhaustive else f"{self.runs} sampled executions"
        return f"{scope}, {self.events_seen} overflow events, all diagnosed"

    def summary(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} ({self.detail()})"


def covered(event: Event, diag_ids: Sequence[int], position: Dict[int, int]) -> bool:
    """Write events are covered by a diagnostic at or before them in
    topological order, read events only by one at the same statement."""
    if event.kind == "read":
        return event.stmt_id in diag_ids
    here = position[event.stmt_id]
    return any(position[d] <= here for d in diag_ids)


def check_soundness(g: Cfg, fr, diags, trials: int = 200, loop_bound: int = 8, seed: int = 0,
                    setup: Optional[Callable[[], ConcreteHeap]] = None) -> Verdict:
    """Compare concrete overflow events against the analyzer's diagnostics."""
    position = {n: i for i, n in enumerate(fr.order)}
    diag_ids = sorted({d.stmt_id for d in diags})
    seen = 0
    runs = Exploration(g, trials, loop_bound, seed, setup)
    for report in runs:
        seen += len(report.events)
        missed = [e for e in report.events if not covered(e, diag_ids, position)]
        if missed:
            return Verdict(False, runs.runs, runs.exhaustive, missed, report, seen)
    return Verdict(True, runs.runs, runs.exhaustive, [], None, seen)
