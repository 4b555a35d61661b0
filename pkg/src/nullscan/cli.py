"""Command-line driver: ``nullscan analyze | fuzz | dump``."""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from . import detect, frontend, ir, oracle
from .gen import generate, minimize
from .lattice import buf_sort_key, format_size, is_inf, sorted_positions
from .solver import FlowResult, solve, unsummarised_loops

EXIT_CLEAN, EXIT_WARNINGS, EXIT_ERRORS, EXIT_USAGE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    input: Optional[str] = None
    mode: str = "single"
    format: str = "text"
    check_reads: bool = True
    trials: int = 200
    loop_bound: int = 8
    seed: int = 0
    programs: int = 100


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=("single", "multi"), default="single",
                        help="pointer model (default: single)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--no-check-reads", dest="check_reads", action="store_false",
                        help="report writes only")
    p = _Parser(prog="nullscan", description="Find potential string buffer overflows in .bof programs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    a = sub.add_parser("analyze", parents=[common], help="report diagnostics")
    a.add_argument("input")
    d = sub.add_parser("dump", parents=[common], help="print bIn/bOut at every node")
    d.add_argument("input")
    f = sub.add_parser("fuzz", parents=[common], help="check diagnostics against concrete runs")
    f.add_argument("input", nargs="?", help="a .bof file or a directory of them; "
                                            "random programs when omitted")
    f.add_argument("--trials", type=int, default=200, help="executions per program (default: 200)")
    f.add_argument("--loop-bound", type=int, default=8, help="iterations per loop (default: 8)")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--programs", type=int, default=100,
                   help="random programs to generate when no input is given (default: 100)")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input=ns.input, mode=ns.mode, format=ns.format, check_reads=ns.check_reads,
        trials=getattr(ns, "trials", 200), loop_bound=getattr(ns, "loop_bound", 8),
        seed=getattr(ns, "seed", 0), programs=getattr(ns, "programs", 100),
    )


# -- helpers --------------------------------------------------------------------

def _use_color(stream) -> bool:
    return os.environ.get("NULLSCAN_COLOR", "1") != "0" and hasattr(stream, "isatty") and stream.isatty()


def _paint(text: str, severity: str, color: bool) -> str:
    if not color:
        return text
    code = "31" if severity == "error" else "33"
    return f"\033[{code}m{text}\033[0m"


def jsonable(v):
    if isinstance(v, float) and is_inf(v):
        return "inf"
    return v


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def load_file(path: str) -> ir.Cfg:
    return frontend.load(Path(path).read_text(encoding="utf-8"))


def exit_status(diags: Sequence[detect.Diagnostic]) -> int:
    if any(d.severity == "error" for d in diags):
        return EXIT_ERRORS
    return EXIT_WARNINGS if diags else EXIT_CLEAN


def _analyze(g: ir.Cfg, cfg: RunConfig):
    fr = solve(g, mode=cfg.mode)
    return fr, detect.collect(fr, check_reads=cfg.check_reads)


# -- analyze --------------------------------------------------------------------

def cmd_analyze(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    g = load_file(cfg.input)
    _, diags = _analyze(g, cfg)
    if cfg.format == "json":
        out.write(_dumps([d.to_json() for d in diags]) + "\n")
    else:
        color = _use_color(out)
        for d in diags:
            out.write(_paint(d.to_text(), d.severity, color) + "\n")
    return exit_status(diags)


# -- dump -----------------------------------------------------------------------

def state_json(s) -> dict:
    alpha = {b: {"size": jsonable(info.size), "nps": [jsonable(p) for p in sorted_positions(info.nps)]}
             for b, info in s.alpha.items()}
    beta = {}
    for x, row in s.beta.items():
        if hasattr(row, "buf"):
            beta[x] = {"buf": row.buf, "offset": jsonable(row.offset)}
        else:
            beta[x] = None if row is None else {b: jsonable(k) for b, k in row.items()}
    return {"alpha": alpha, "beta": beta}


def dump_json(fr: FlowResult) -> dict:
    nodes = []
    for n in fr.order:
        st = fr.cfg.nodes[n]
        nodes.append({"id": n, "line": st.line, "stmt": st.render(),
                      "bin": state_json(fr.bin[n]), "bout": state_json(fr.bout[n]),
                      "fresh_overflow": fr.fresh(n)})
    return {"mode": fr.mode, "pointers": list(fr.cfg.pointers), "nodes": nodes}


def _fmt_nps(xs) -> str:
    return "{" + ", ".join(format_size(p) for p in sorted_positions(xs)) + "}"


def state_text(s) -> List[str]:
    bufs = ", ".join(f"({b}, {format_size(i.size)}, {_fmt_nps(i.nps)})"
                     for b, i in sorted(s.alpha.items(), key=lambda kv: buf_sort_key(kv[0])))
    ptrs = []
    for x, row in s.beta.items():
        if hasattr(row, "buf"):
            ptrs.append(f"({x}, {row.buf}, {format_size(row.offset)})")
        elif row is None:
            ptrs.append(f"({x}, undefined)")
        else:
            ptrs.extend(f"({x}, {b}, {format_size(k)})" for b, k in sorted(row.items()))
    return [f"alpha = {{{bufs}}}", f"beta  = {{{', '.join(ptrs)}}}"]


def dump_text(fr: FlowResult) -> str:
    lines = []
    for n in fr.order:
        st = fr.cfg.nodes[n]
        flag = "   [fresh overflow]" if fr.fresh(n) else ""
        lines.append(f"node {n} (line {st.line}): {st.render()}{flag}")
        for label, s in (("in ", fr.bin[n]), ("out", fr.bout[n])):
            a, b = state_text(s)
            lines.append(f"  {label} {a}")
            lines.append(f"      {b}")
    return "\n".join(lines)


def cmd_dump(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    g = load_file(cfg.input)
    fr = solve(g, mode=cfg.mode)
    if cfg.format == "json":
        out.write(_dumps(dump_json(fr)) + "\n")
    else:
        out.write(dump_text(fr) + "\n")
    return EXIT_CLEAN


# -- fuzz -----------------------------------------------------------------------

def check_program(g: ir.Cfg, cfg: RunConfig) -> Optional[oracle.Verdict]:
    """Soundness verdict, or None when a loop is not summarised by its ranges."""
    fr, diags = _analyze(g, cfg)
    if unsummarised_loops(fr):
        return None
    return oracle.check_soundness(g, fr, diags, cfg.trials, cfg.loop_bound, cfg.seed)


def _verdict_row(name: str, v: Optional[oracle.Verdict]) -> dict:
    if v is None:
        return {"program": name, "verdict": "SKIP", "detail": "loop effect not captured by range annotations"}
    return {"program": name, "verdict": "PASS" if v.passed else "FAIL", "runs": v.runs,
            "exhaustive": v.exhaustive, "events": v.events_seen, "detail": v.detail()}


def cmd_fuzz(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    rows = []
    failure_text = None
    if cfg.input is not None and Path(cfg.input).is_dir():
        for path in sorted(Path(cfg.input).glob("**/*.bof")):
            rows.append(_verdict_row(str(path), check_program(load_file(str(path)), cfg)))
    elif cfg.input is not None:
        rows.append(_verdict_row(cfg.input, check_program(load_file(cfg.input), cfg)))
    else:
        rng = random.Random(cfg.seed)
        for k in range(cfg.programs):
            text = generate(random.Random(rng.getrandbits(32)))
            v = check_program(frontend.load(text), cfg)
            rows.append(_verdict_row(f"generated#{k}", v))
            if v is not None and not v.passed:
                def fails(t: str) -> bool:
                    r = check_program(frontend.load(t), cfg)
                    return r is not None and not r.passed
                failure_text = minimize(text, fails)
                break
    failed = [r for r in rows if r["verdict"] == "FAIL"]
    if cfg.format == "json":
        report = {"results": rows, "passed": not failed}
        if failure_text is not None:
            report["counterexample"] = failure_text
        out.write(_dumps(report) + "\n")
    else:
        width = max([len(r["program"]) for r in rows] + [7])
        for r in rows:
            out.write(f"{r['program']:<{width}}  {r['verdict']:<4}  {r['detail']}\n")
        counts = {v: sum(r["verdict"] == v for r in rows) for v in ("PASS", "FAIL", "SKIP")}
        out.write(f"{len(rows)} programs: {counts['PASS']} pass, {counts['FAIL']} fail, "
                  f"{counts['SKIP']} skipped (loop bound {cfg.loop_bound}, {cfg.trials} trials each)\n")
        if failure_text is not None:
            out.write("minimized counterexample:\n" + failure_text)
    return EXIT_ERRORS if failed else EXIT_CLEAN


COMMANDS = {"analyze": cmd_analyze, "dump": cmd_dump, "fuzz": cmd_fuzz}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    try:
        return COMMANDS[ns.command](cfg)
    except (OSError, SyntaxError, ir.IrregularCfg, ir.CycleDetected) as e:
        print(f"nullscan: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
