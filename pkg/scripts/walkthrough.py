"""Step through the running example: abstract state, diagnostics and one concrete run.

    python scripts/walkthrough.py [--mode multi]
"""

import argparse
from pathlib import Path

from nullscan import collect, frontend, ir
from nullscan.cli import state_text
from nullscan.oracle import interpret, string_length
from nullscan.solver import solve

PROGRAM = Path(__file__).resolve().parent.parent / "corpus" / "running_example_core.bof"


def cells(buf) -> str:
    return "".join("0" if c else "." for c in buf.cells)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mode", choices=("single", "multi"), default="single")
    args = p.parse_args(argv)

    g = frontend.load(PROGRAM.read_text())
    fr = solve(g, mode=args.mode)
    print(f"program: {PROGRAM.name} ({args.mode} mode)\n")
    for n in fr.order:
        st = g.nodes[n]
        if st.op == ir.NOP:
            continue
        flag = "  <- fresh overflow" if fr.fresh(n) else ""
        print(f"line {st.line}: {st.render()}{flag}")
        for line in state_text(fr.bout[n]):
            print(f"    {line}")
    print("\ndiagnostics:")
    for d in collect(fr):
        print(f"    {d.to_text()}")

    run = interpret(g)
    print("\nconcrete run ('0' = null cell):")
    for b in run.heap.buffers:
        print(f"    {b.site}: {cells(b)}")
    for x in g.pointers:
        n = string_length(run.heap, x)
        print(f"    strlen({x}) = {'unterminated' if n is None else n}")
    for e in run.events:
        print(f"    event at statement {e.stmt_id}: {e.detail}")


if __name__ == "__main__":
    main()
