"""Parser for ``.bof`` programs and desugaring into core statements.

One statement per line, ``#`` starts a comment, a trailing ``;`` is
optional.  Besides the core statements the parser accepts a handful of
surface forms (string literals, ``realloc``, array declarations, the
strlen-like library calls) which :func:`desugar` rewrites into core
statements before the CFG is built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

from . import ir
from .ir import UNKNOWN, Cfg, Const, Extent, Range, Stmt


class BofSyntaxError(SyntaxError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class UndeclaredPointer(BofSyntaxError):
    def __init__(self, name: str, line: int):
        super().__init__(line, f"pointer {name!r} used before declaration")
        self.name = name


@dataclass
class SrcStmt:
    form: str  # a core kind, or a surface form such as "literal" or "realloc"
    args: Tuple = ()
    line: int = 0


@dataclass
class IfBlock:
    then: List = field(default_factory=list)
    orelse: Optional[List] = None
    line: int = 0


@dataclass
class WhileBlock:
    body: List = field(default_factory=list)
    line: int = 0


Node = Union[SrcStmt, IfBlock, WhileBlock]


@dataclass
class SourceProgram:
    pointers: List[str]
    body: List[Node]
    buffers: List[Tuple[str, str]] = field(default_factory=list)
    bindings: List[Tuple[str, str, int]] = field(default_factory=list)

    def count(self) -> int:
        def walk(nodes):
            total = 0
            for n in nodes:
                if isinstance(n, SrcStmt):
                    total += 1
                elif isinstance(n, IfBlock):
                    total += walk(n.then) + walk(n.orelse or [])
                else:
                    total += walk(n.body)
            return total
        return walk(self.body)


ID = r"[A-Za-z_]\w*"
EXT = rf"(?:\d+|{ID}\s*@range\(\s*\d+\s*,\s*\d+\s*\)|\?)"
CHARVAL = r"(null|char|'\\0'|'[^'\\]')"

_PATTERNS = [
    ("decl", rf"ptr\s+({ID}(?:\s*,\s*{ID})*)"),
    ("assume_buf", rf'assume\s+({ID})\s*=\s*"((?:[^"\\]|\\.)*)"'),
    ("assume_ptr", rf"assume\s+({ID})\s*->\s*({ID})(?:\s*\+\s*(\d+))?"),
    ("array", rf"char\s+({ID})\s*\[\s*({EXT})\s*\](?:\s*=\s*\{{(.*)\}})?"),
    (ir.MALLOC, rf"({ID})\s*=\s*malloc\(\s*({EXT})\s*\)"),
    (ir.CALLOC, rf"({ID})\s*=\s*calloc\(\s*({EXT})\s*\)"),
    ("realloc", rf"({ID})\s*=\s*realloc\(\s*({ID})\s*,\s*({EXT})\s*\)"),
    ("dynamic", rf"({ID})\s*=\s*dynamic\(\s*\)"),
    ("returns", rf"({ID})\s*=\s*(strstr|strtok|strchr|strrchr)\(\s*({ID})\s*,\s*([^)]*?)\s*\)"),
    ("literal", rf'({ID})\s*=\s*"((?:[^"\\]|\\.)*)"'),
    (ir.FREE, rf"free\(\s*({ID})\s*\)"),
    (ir.ASSIGN_ADD, rf"({ID})\s*=\s*({ID})\s*\+\s*({EXT})"),
    (ir.ASSIGN, rf"({ID})\s*=\s*({ID})"),
    ("index", rf"({ID})\s*\[\s*({EXT})\s*\]\s*=\s*{CHARVAL}"),
    ("deref", rf"\*\s*\(\s*({ID})\s*\+\s*({EXT})\s*\)\s*=\s*{CHARVAL}"),
    ("strfun", rf"(strcpy|strcat)\(\s*({ID})\s*,\s*({ID})\s*\)"),
    ("strnfun", rf"(strncpy|strncat|memcpy)\(\s*({ID})\s*,\s*({ID})\s*,\s*({EXT})\s*\)"),
    ("strlenlike", rf"(strcmp|strncmp|strchr|strrchr|strstr|strtok)\(\s*({ID})\s*,\s*([^)]*?)\s*\)"),
    (ir.READ_INDEX, rf"read\s+({ID})\s*\[\s*({EXT})\s*\]"),
    (ir.READ, rf"read\s+({ID})"),
    (ir.STRLEN, rf"strlen\(\s*({ID})\s*\)"),
    (ir.NOP, r"nop"),
]
_COMPILED = [(kind, re.compile(rf"^{pat}$")) for kind, pat in _PATTERNS]
_KEYWORDS = {"assume", "ptr", "char", "malloc", "calloc", "realloc", "free", "read", "null", "if", "else", "while"}


def parse_extent(text: str, line: int = 0) -> Extent:
    text = text.strip()
    if text == "?":
        return UNKNOWN
    if text.isdigit():
        return Const(int(text))
    m = re.fullmatch(rf"({ID})\s*@range\(\s*(\d+)\s*,\s*(\d+)\s*\)", text)
    if not m:
        raise BofSyntaxError(line, f"malformed extent {text!r}")
    lo, hi = int(m.group(2)), int(m.group(3))
    if lo > hi:
        raise BofSyntaxError(line, f"empty range {lo}..{hi}")
    return Range(lo, hi, m.group(1))


_NULL_ELEMENTS = ("'\\0'", "0", "null")


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t", "0": "\0"}.get(m.group(1), m.group(1)), body)


def _split_statements(text: str):
    """Yield (line number, statement text), splitting braces off their lines."""
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        # array initialisers keep their braces; every other brace token
        # ("if (*) {", "} else {", "while (*) {", "}") stands on its own
        inits = re.findall(r"=\s*\{[^{}]*\}", s)
        for k, init in enumerate(inits):
            s = s.replace(init, f"\0{k}\0", 1)
        for piece in re.split(r"(\bif\s*\(\s*\*\s*\)\s*\{|\}\s*else\s*\{|\bwhile\s*\(\s*\*\s*\)\s*\{|\})", s):
            for k, init in enumerate(inits):
                piece = piece.replace(f"\0{k}\0", init)
            piece = piece.strip()
            if not piece:
                continue
            for part in _split_semicolons(piece):
                yield no, part


def _split_semicolons(piece: str):
    out, cur, in_str = [], "", False
    for i, ch in enumerate(piece):
        if ch == '"' and (i == 0 or piece[i - 1] != "\\"):
            in_str = not in_str
        if ch == ";" and not in_str:
            if cur.strip():
                out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def parse(text: str) -> SourceProgram:
    pointers: List[str] = []
    buffers: List[Tuple[str, str]] = []
    bindings: List[Tuple[str, str, int]] = []
    declared = set()
    root: List[Node] = []
    stack: List[Tuple[Node, List[Node]]] = []
    current = root

    def need(name: str, no: int):
        if name not in declared:
            raise UndeclaredPointer(name, no)

    def declare(name: str, no: int):
        if name in _KEYWORDS:
            raise BofSyntaxError(no, f"{name!r} is reserved")
        if name not in declared:
            declared.add(name)
            pointers.append(name)

    for no, s in _split_statements(text):
        if re.fullmatch(r"if\s*\(\s*\*\s*\)\s*\{", s):
            blk = IfBlock(line=no)
            current.append(blk)
            stack.append((blk, current))
            current = blk.then
            continue
        if re.fullmatch(r"while\s*\(\s*\*\s*\)\s*\{", s):
            blk = WhileBlock(line=no)
            current.append(blk)
            stack.append((blk, current))
            current = blk.body
            continue
        if re.fullmatch(r"\}\s*else\s*\{", s):
            if not stack or not isinstance(stack[-1][0], IfBlock) or stack[-1][0].orelse is not None:
                raise BofSyntaxError(no, "'else' without matching 'if'")
            blk = stack[-1][0]
            blk.orelse = []
            current = blk.orelse
            continue
        if s == "}":
            if not stack:
                raise BofSyntaxError(no, "unbalanced '}'")
            _, current = stack.pop()
            continue
        node = _parse_simple(s, no, need, declare)
        if node.form == "assume_buf":
            if stack or any(isinstance(n, (IfBlock, WhileBlock)) or n.form != "decl" for n in root):
                raise BofSyntaxError(no, "assumptions must precede all statements")
            if node.args[0] in {b for b, _ in buffers}:
                raise BofSyntaxError(no, f"buffer {node.args[0]!r} assumed twice")
            buffers.append(node.args)
        elif node.form == "assume_ptr":
            if stack or any(isinstance(n, (IfBlock, WhileBlock)) or n.form != "decl" for n in root):
                raise BofSyntaxError(no, "assumptions must precede all statements")
            if node.args[1] not in {b for b, _ in buffers}:
                raise BofSyntaxError(no, f"buffer {node.args[1]!r} is not assumed")
            bindings.append(node.args)
        else:
            current.append(node)
    if stack:
        raise BofSyntaxError(stack[-1][0].line, "block is never closed")
    return SourceProgram(pointers, root, buffers, bindings)


def _parse_simple(s: str, no: int, need, declare) -> SrcStmt:
    for kind, rx in _COMPILED:
        m = rx.match(s)
        if not m:
            continue
        g = m.groups()
        if kind == "decl":
            for name in re.split(r"\s*,\s*", g[0]):
                declare(name, no)
            return SrcStmt("decl", (), no)
        if kind == "assume_buf":
            if not g[1]:
                raise BofSyntaxError(no, "an assumed buffer needs at least one cell")
            return SrcStmt("assume_buf", (g[0], _unescape(g[1])), no)
        if kind == "assume_ptr":
            need(g[0], no)
            return SrcStmt("assume_ptr", (g[0], g[1], int(g[2] or 0)), no)
        if kind == "array":
            declare(g[0], no)
            ext = parse_extent(g[1], no)
            init = None
            if g[2] is not None:
                init = [e.strip() for e in g[2].split(",") if e.strip()]
                if ext.kind == "const" and len(init) > ext.lo:
                    raise BofSyntaxError(no, f"too many initialisers for {g[0]}[{ext.lo}]")
            return SrcStmt("array", (g[0], ext, init), no)
        if kind in (ir.MALLOC, ir.CALLOC):
            need(g[0], no)
            return SrcStmt(kind, (g[0], parse_extent(g[1], no)), no)
        if kind == "realloc":
            need(g[0], no), need(g[1], no)
            return SrcStmt("realloc", (g[0], g[1], parse_extent(g[2], no)), no)
        if kind == "dynamic":
            need(g[0], no)
            return SrcStmt("dynamic", (g[0],), no)
        if kind == "returns":
            need(g[0], no), need(g[2], no)
            return SrcStmt("returns", (g[0], g[1], g[2], g[3]), no)
        if kind == "literal":
            need(g[0], no)
            return SrcStmt("literal", (g[0], _unescape(g[1])), no)
        if kind == ir.FREE:
            need(g[0], no)
            return SrcStmt(ir.FREE, (g[0],), no)
        if kind == ir.ASSIGN_ADD:
            need(g[0], no), need(g[1], no)
            return SrcStmt(ir.ASSIGN_ADD, (g[0], g[1], parse_extent(g[2], no)), no)
        if kind == ir.ASSIGN:
            if g[1] in ("null",):
                break
            need(g[0], no), need(g[1], no)
            return SrcStmt(ir.ASSIGN, (g[0], g[1]), no)
        if kind in ("index", "deref"):
            need(g[0], no)
            op = ir.INDEX_NULL if g[2] in ("null", "'\\0'") else ir.INDEX_CHAR
            return SrcStmt(op, (g[0], parse_extent(g[1], no)), no, ) if kind == "index" \
                else SrcStmt("deref", (op, g[0], parse_extent(g[1], no)), no)
        if kind == "strfun":
            need(g[1], no), need(g[2], no)
            return SrcStmt(g[0], (g[1], g[2]), no)
        if kind == "strnfun":
            need(g[1], no), need(g[2], no)
            return SrcStmt(g[0], (g[1], g[2], parse_extent(g[3], no)), no)
        if kind == "strlenlike":
            need(g[1], no)
            return SrcStmt("strlenlike", (g[0], g[1], g[2]), no)
        if kind in (ir.READ, ir.STRLEN):
            need(g[0], no)
            return SrcStmt(kind, (g[0],), no)
        if kind == ir.READ_INDEX:
            need(g[0], no)
            return SrcStmt(kind, (g[0], parse_extent(g[1], no)), no)
        if kind == ir.NOP:
            return SrcStmt(ir.NOP, (), no)
    raise BofSyntaxError(no, f"cannot parse statement {s!r}")


# -- desugaring ---------------------------------------------------------------

class _Builder:
    def __init__(self, pointers: Sequence[str]):
        self.nodes = {}
        self.succs = {}
        self.pointers = list(pointers)
        self.next_id = 0

    def node(self, op: str, preds: Sequence[int], x=None, y=None, extent=None,
             line: int = 0, note: str = "") -> int:
        n = self.next_id
        self.next_id += 1
        self.nodes[n] = Stmt(n, op, x, y, extent, line, note)
        self.succs[n] = []
        for p in preds:
            self.edge(p, n)
        return n

    def edge(self, u: int, v: int):
        if v not in self.succs[u]:
            self.succs[u].append(v)

    def temp(self, base: str) -> str:
        name = f"{base}.tmp{self.next_id}"
        self.pointers.append(name)
        return name


def _pointer_args(text: str, pointers) -> List[str]:
    return [a.strip() for a in text.split(",") if a.strip() in pointers]


def _emit(b: _Builder, s: SrcStmt, preds: List[int], pointers) -> List[int]:
    """Append the core statements for ``s``; returns the new exits."""
    f, a, line = s.form, s.args, s.line

    def seq(*steps):
        nonlocal preds
        for op, x, y, e in steps:
            preds = [b.node(op, preds, x, y, e, line)]
        return preds

    if f == "decl":
        return preds
    if f == "array":
        x, ext, init = a
        steps = [(ir.MALLOC, x, None, ext)]
        if init is not None:
            nulls = [i for i, e in enumerate(init) if e in _NULL_ELEMENTS]
            # the first zero-filled cell; the rest of the tail is left unknown
            if ext.kind == "const" and len(init) < ext.lo:
                nulls.append(len(init))
            steps += [(ir.INDEX_NULL, x, None, Const(i)) for i in nulls]
            steps.append((ir.INDEX_NULL, x, None, ext))
        return seq(*steps)
    if f == "literal":
        x, body = a
        k = Const(len(body))
        return seq((ir.MALLOC, x, None, k), (ir.INDEX_NULL, x, None, k))
    if f == "realloc":
        x, y, ext = a
        if x == y:
            t = b.temp(y)
            return seq((ir.ASSIGN, t, y, None), (ir.MALLOC, x, None, ext), (ir.STRCPY, x, t, None))
        return seq((ir.MALLOC, x, None, ext), (ir.STRCPY, x, y, None))
    if f == "dynamic":
        return seq((ir.MALLOC, a[0], None, UNKNOWN))
    if f == "returns":
        t, _fn, x, rest = a
        reads = [x] + _pointer_args(rest, pointers)
        return seq(*[(ir.STRLEN, p, None, None) for p in reads], (ir.MALLOC, t, None, UNKNOWN))
    if f == "strlenlike":
        _fn, x, rest = a
        reads = [x] + _pointer_args(rest, pointers)
        return seq(*[(ir.STRLEN, p, None, None) for p in reads])
    if f == "deref":
        op, x, ext = a
        return seq((op, x, None, ext))
    if f in (ir.MALLOC, ir.CALLOC, ir.INDEX_NULL, ir.INDEX_CHAR, ir.READ_INDEX):
        return seq((f, a[0], None, a[1]))
    if f in (ir.FREE, ir.READ, ir.STRLEN):
        return seq((f, a[0], None, None))
    if f in (ir.ASSIGN, ir.STRCPY, ir.STRCAT):
        return seq((f, a[0], a[1], None))
    if f in (ir.ASSIGN_ADD, ir.STRNCPY, ir.STRNCAT, ir.MEMCPY):
        return seq((f, a[0], a[1], a[2]))
    if f == ir.NOP:
        return seq((ir.NOP, None, None, None))
    raise ValueError(f"unknown source form {f!r}")


def _emit_block(b: _Builder, nodes: List[Node], preds: List[int], pointers) -> List[int]:
    for n in nodes:
        if isinstance(n, SrcStmt):
            preds = _emit(b, n, preds, pointers)
        elif isinstance(n, IfBlock):
            fork = b.node(ir.NOP, preds, line=n.line, note="if")
            exits = _emit_block(b, n.then, [fork], pointers)
            exits2 = _emit_block(b, n.orelse, [fork], pointers) if n.orelse is not None else [fork]
            preds = [b.node(ir.NOP, exits + [e for e in exits2 if e not in exits], line=n.line, note="join")]
        else:
            head = b.node(ir.NOP, preds, line=n.line, note="loop")
            exits = _emit_block(b, n.body, [head], pointers)
            latch = b.node(ir.NOP, exits, line=n.line, note="latch")
            b.edge(latch, head)
            # the latch also leaves the loop, so the body reaches the exit
            # once the back edge is dropped
            preds = [head, latch]
    return preds


def desugar(p: SourceProgram) -> Cfg:
    b = _Builder(p.pointers)
    start = b.node(ir.NOP, [], note="start")
    exits = _emit_block(b, p.body, [start], set(p.pointers))
    if len(exits) > 1:
        # a trailing loop leaves through both header and latch
        b.node(ir.NOP, exits, line=b.nodes[exits[0]].line, note="exit")
    g = Cfg(b.nodes, b.succs, start, tuple(b.pointers),
            assumed_buffers=tuple(p.buffers), assumed_pointers=tuple(p.bindings))
    clash = set(g.alloc_sites()) & {name for name, _ in p.buffers}
    if clash:
        raise BofSyntaxError(0, f"assumed buffer names clash with allocation sites: {sorted(clash)}")
    return g


def load(text: str) -> Cfg:
    return desugar(parse(text))


def render_program(g: Cfg) -> str:
    """Core statements of a CFG, one per line, with ids and source lines."""
    out = []
    for s in g.statements():
        out.append(f"{s.id:>3}  line {s.line:<3} {s.render()}")
    return "\n".join(out)
