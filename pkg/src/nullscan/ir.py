"""Core statements, control-flow graphs and back-edge elimination."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .lattice import INF, Size

Edge = Tuple[int, int]

# statement kinds
MALLOC = "malloc"
CALLOC = "calloc"
FREE = "free"
ASSIGN = "assign"
ASSIGN_ADD = "assign_add"
INDEX_NULL = "index_null"
INDEX_CHAR = "index_char"
STRCPY = "strcpy"
STRCAT = "strcat"
STRNCPY = "strncpy"
STRNCAT = "strncat"
MEMCPY = "memcpy"
READ = "read"
READ_INDEX = "read_index"
STRLEN = "strlen"
NOP = "nop"

STRING_FUNCS = (STRCPY, STRCAT, STRNCPY, STRNCAT)
ALLOCS = (MALLOC, CALLOC)
BUFFER_WRITERS = (FREE, INDEX_NULL, INDEX_CHAR, MEMCPY) + STRING_FUNCS
READS = (READ, READ_INDEX, STRLEN)
KINDS = ALLOCS + BUFFER_WRITERS + (ASSIGN, ASSIGN_ADD) + READS + (NOP,)


class IrregularCfg(Exception):
    """The CFG has a retreating edge whose target does not dominate its source."""


class CycleDetected(Exception):
    pass


@dataclass(frozen=True)
class Extent:
    """Integer operand: a constant, a range-annotated variable, or unknown."""

    kind: str  # "const" | "range" | "unknown"
    lo: int = 0
    hi: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("const", "range", "unknown"):
            raise ValueError(f"bad extent kind {self.kind!r}")
        if self.lo < 0 or self.hi < 0:
            raise ValueError("extents are natural numbers")
        if self.kind == "range" and self.lo > self.hi:
            raise ValueError(f"empty range {self.lo}..{self.hi}")

    @property
    def is_point(self) -> bool:
        return self.kind == "const" or (self.kind == "range" and self.lo == self.hi)

    def __str__(self):
        if self.kind == "const":
            return str(self.lo)
        if self.kind == "range":
            return f"{self.name or 'i'}@range({self.lo},{self.hi})"
        return "?"


def Const(n: int) -> Extent:
    return Extent("const", n, n)


def Range(lo: int, hi: int, name: str = "i") -> Extent:
    return Extent("range", lo, hi, name)


UNKNOWN = Extent("unknown")


def resolve_extent(e: Extent, ctx: str) -> Size:
    """Pick the static value of an extent.

    Allocation sizes take the low end of a range; indices, shifts and
    copy lengths take the high end.  Unknown extents are INF.
    """
    if e.kind == "const":
        return e.lo
    if e.kind == "range":
        if ctx == "alloc":
            return e.lo
        if ctx == "index_or_shift":
            return e.hi
        raise ValueError(f"unknown extent context {ctx!r}")
    return INF


def extent_low(e: Extent) -> int:
    """Smallest concrete value an extent may take."""
    return e.lo if e.kind in ("const", "range") else 0


@dataclass(frozen=True)
class Stmt:
    id: int
    op: str
    x: Optional[str] = None
    y: Optional[str] = None
    extent: Optional[Extent] = None
    line: int = 0
    note: str = ""  # structural role of Nops: "start", "if", "join", "loop", "latch"

    def __post_init__(self):
        if self.op not in KINDS:
            raise ValueError(f"unknown statement kind {self.op!r}")

    @property
    def site(self) -> str:
        return f"b{self.id}"

    def pointers(self) -> Tuple[str, ...]:
        return tuple(p for p in (self.x, self.y) if p is not None)

    def render(self) -> str:
        """Concrete syntax for this (core) statement."""
        x, y, e = self.x, self.y, self.extent
        op = self.op
        if op == MALLOC:
            return f"{x} = malloc({e})"
        if op == CALLOC:
            return f"{x} = calloc({e})"
        if op == FREE:
            return f"free({x})"
        if op == ASSIGN:
            return f"{x} = {y}"
        if op == ASSIGN_ADD:
            return f"{x} = {y} + {e}"
        if op == INDEX_NULL:
            return f"{x}[{e}] = null"
        if op == INDEX_CHAR:
            return f"{x}[{e}] = char"
        if op in (STRCPY, STRCAT):
            return f"{op}({x}, {y})"
        if op in (STRNCPY, STRNCAT, MEMCPY):
            return f"{op}({x}, {y}, {e})"
        if op == READ:
            return f"read {x}"
        if op == READ_INDEX:
            return f"read {x}[{e}]"
        if op == STRLEN:
            return f"strlen({x})"
        return f"nop {self.note}".strip()


@dataclass
class Cfg:
    nodes: Dict[int, Stmt]
    succs: Dict[int, List[int]]
    entry: int
    pointers: Tuple[str, ...] = ()
    back_edges: frozenset = field(default_factory=frozenset)
    # pre-existing buffers (name, cell text with "\0" for nulls) and pointers
    # (name, buffer, offset) established before the entry node
    assumed_buffers: Tuple[Tuple[str, str], ...] = ()
    assumed_pointers: Tuple[Tuple[str, str, int], ...] = ()

    def edges(self) -> List[Edge]:
        return [(u, v) for u in sorted(self.succs) for v in self.succs[u]]

    def preds(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {n: [] for n in self.nodes}
        for u, v in self.edges():
            out[v].append(u)
        return out

    def alloc_sites(self) -> List[str]:
        return [s.site for _, s in sorted(self.nodes.items()) if s.op in ALLOCS]

    def statements(self) -> List[Stmt]:
        return [s for _, s in sorted(self.nodes.items())]

    def without_back_edges(self) -> "Cfg":
        """The forward (acyclic) view; remembers what was dropped."""
        back = find_back_edges(self)
        succs = {u: [v for v in vs if (u, v) not in back] for u, vs in self.succs.items()}
        return replace(self, succs=succs, back_edges=frozenset(back) | self.back_edges)


def _dfs_back_edges(g: Cfg) -> Set[Edge]:
    color = {n: 0 for n in g.nodes}  # 0 white, 1 on stack, 2 done
    back: Set[Edge] = set()
    stack = [(g.entry, iter(g.succs.get(g.entry, ())))]
    color[g.entry] = 1
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            color[node] = 2
            stack.pop()
        elif color[nxt] == 1:
            back.add((node, nxt))
        elif color[nxt] == 0:
            color[nxt] = 1
            stack.append((nxt, iter(g.succs.get(nxt, ()))))
    unreached = [n for n, c in color.items() if c == 0]
    if unreached:
        raise IrregularCfg(f"nodes unreachable from entry: {sorted(unreached)}")
    return back


def dominators(g: Cfg) -> Dict[int, Set[int]]:
    preds = g.preds()
    allnodes = set(g.nodes)
    dom = {n: set(allnodes) for n in g.nodes}
    dom[g.entry] = {g.entry}
    changed = True
    while changed:
        changed = False
        for n in g.nodes:
            if n == g.entry:
                continue
            ps = [dom[p] for p in preds[n]]
            new = set.intersection(*ps) if ps else set()
            new = new | {n}
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


def find_back_edges(g: Cfg) -> Set[Edge]:
    """Retreating edges of a DFS from entry; raises on irreducible graphs."""
    back = _dfs_back_edges(g)
    if back:
        dom = dominators(g)
        for u, v in back:
            if v not in dom[u]:
                raise IrregularCfg(f"edge {u}->{v} closes an irreducible cycle")
    return back


def topo_order(g: Cfg) -> List[int]:
    """Reverse post-order of the (acyclic) graph, entry first."""
    seen = set()
    post: List[int] = []
    stack = [(g.entry, iter(g.succs.get(g.entry, ())))]
    seen.add(g.entry)
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            post.append(node)
            stack.pop()
        elif nxt not in seen:
            seen.add(nxt)
            stack.append((nxt, iter(g.succs.get(nxt, ()))))
    order = post[::-1]
    pos = {n: i for i, n in enumerate(order)}
    for u, v in g.edges():
        if u in pos and v in pos and pos[u] >= pos[v]:
            raise CycleDetected(f"edge {u}->{v} survives in a cycle")
    return order


def check_unique_ids(stmts: Iterable[Stmt]) -> None:
    seen = set()
    for s in stmts:
        if s.id in seen:
            raise ValueError(f"duplicate statement id {s.id}")
        seen.add(s.id)
