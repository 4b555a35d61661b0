"""Random ``.bof`` programs for soundness fuzzing, and a failure minimizer."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, List, Optional

POINTERS = ("p", "q", "r", "s")


@dataclass(frozen=True)
class GenConfig:
    max_statements: int = 20
    max_branch_depth: int = 2
    max_loops: int = 1
    max_const: int = 12
    p_unknown: float = 0.04
    p_range: float = 0.15


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.budget = rng.randint(3, cfg.max_statements)
        self.loops = 0
        self.range_names = 0

    def const(self) -> str:
        return str(self.rng.randint(0, self.cfg.max_const))

    def extent(self, ranged: bool = True) -> str:
        u = self.rng.random()
        if u < self.cfg.p_unknown:
            return "?"
        if ranged and u < self.cfg.p_unknown + self.cfg.p_range:
            lo = self.rng.randint(0, self.cfg.max_const - 2)
            hi = self.rng.randint(lo, min(lo + 4, self.cfg.max_const))
            self.range_names += 1
            return f"i{self.range_names}@range({lo},{hi})"
        return self.const()

    def ptr(self) -> str:
        return self.rng.choice(POINTERS)

    def simple(self, in_loop: bool = False) -> str:
        r = self.rng
        x, y = self.ptr(), self.ptr()
        if in_loop:
            kind = r.choice(["null", "char", "read_index", "read"])
        else:
            kind = r.choices(
                ["malloc", "calloc", "literal", "free", "assign", "shift", "null", "char",
                 "strcpy", "strcat", "strncpy", "strncat", "memcpy", "read", "read_index", "strlen"],
                weights=[8, 2, 5, 1, 3, 5, 6, 4, 4, 4, 2, 2, 2, 2, 2, 3])[0]
        if kind == "malloc":
            return f"{x} = malloc({self.extent()})"
        if kind == "calloc":
            return f"{x} = calloc({self.extent()})"
        if kind == "literal":
            return f'{x} = "{"a" * r.randint(0, 8)}"'
        if kind == "free":
            return f"free({x})"
        if kind == "assign":
            return f"{x} = {y}"
        if kind == "shift":
            # ranged shifts are left out: the high end understates source lengths
            return f"{x} = {y} + {self.extent(ranged=False)}"
        if kind in ("null", "char"):
            return f"{x}[{self.extent()}] = {kind}"
        if kind in ("strcpy", "strcat"):
            return f"{kind}({x}, {y})"
        if kind in ("strncpy", "strncat", "memcpy"):
            return f"{kind}({x}, {y}, {self.extent()})"
        if kind == "read":
            return f"read {x}"
        if kind == "read_index":
            return f"read {x}[{self.extent()}]"
        return f"strlen({x})"

    def block(self, depth: int, indent: str, in_loop: bool = False) -> List[str]:
        lines: List[str] = []
        n = self.rng.randint(1, 4) if depth or in_loop else self.budget
        for _ in range(n):
            if self.budget <= 0:
                break
            u = self.rng.random()
            if not in_loop and depth < self.cfg.max_branch_depth and u < 0.12 and self.budget > 2:
                lines.append(f"{indent}if (*) {{")
                lines += self.block(depth + 1, indent + "  ")
                if self.rng.random() < 0.6:
                    lines.append(f"{indent}}} else {{")
                    lines += self.block(depth + 1, indent + "  ")
                lines.append(f"{indent}}}")
            elif not in_loop and self.loops < self.cfg.max_loops and u < 0.18 and self.budget > 2:
                self.loops += 1
                lines.append(f"{indent}while (*) {{")
                lines += self.block(depth + 1, indent + "  ", in_loop=True)
                lines.append(f"{indent}}}")
            else:
                lines.append(indent + self.simple(in_loop))
                self.budget -= 1
        return lines


def generate(rng: random.Random, cfg: GenConfig = GenConfig()) -> str:
    """One random program as source text."""
    g = _Gen(rng, cfg)
    head = [f"ptr {', '.join(POINTERS)}"]
    # start from a couple of allocations so most statements touch real buffers
    for p in rng.sample(POINTERS, rng.randint(1, 3)):
        if g.budget <= 1:
            break
        head.append(rng.choice([f"{p} = malloc({g.extent()})", f'{p} = "{"a" * rng.randint(0, 8)}"']))
        g.budget -= 1
    return "\n".join(head + g.block(0, "")) + "\n"


def minimize(text: str, fails: Callable[[str], bool]) -> str:
    """Drop lines (and whole blocks) while ``fails`` still holds."""
    lines = text.splitlines()
    changed = True
    while changed:
        changed = False
        i = 1  # keep the declaration
        while i < len(lines):
            for cand in _removals(lines, i):
                if cand is not None and fails("\n".join(cand) + "\n"):
                    lines = cand
                    changed = True
                    break
            else:
                i += 1
    return "\n".join(lines) + "\n"


def _removals(lines: List[str], i: int):
    s = lines[i].strip()
    if s.endswith("{") and not s.startswith("}"):
        end = _block_end(lines, i)
        if end is not None:
            yield lines[:i] + lines[end + 1:]
            # keep the body, drop the control structure around it
            body = [l for l in lines[i + 1:end] if l.strip() not in ("} else {",)]
            yield lines[:i] + body + lines[end + 1:]
        return
    if s == "}" or s == "} else {":
        return
    yield lines[:i] + lines[i + 1:]


def _block_end(lines: List[str], i: int) -> Optional[int]:
    depth = 0
    for j in range(i, len(lines)):
        s = lines[j].strip()
        if s == "} else {":
            continue
        if s.endswith("{"):
            depth += 1
        elif s == "}":
            depth -= 1
            if depth == 0:
                return j
    return None
