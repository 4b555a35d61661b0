"""Soundness sweep over several generator settings.

    python scripts/run_fuzz.py --programs 2000 --mode multi
"""

import argparse
import random
import sys
import time
from dataclasses import replace

from nullscan import collect, frontend
from nullscan.gen import GenConfig, generate, minimize
from nullscan.oracle import check_soundness
from nullscan.solver import solve, unsummarised_loops

SETTINGS = {
    "default": GenConfig(),
    "ranged": GenConfig(p_range=0.5),
    "tight": GenConfig(max_const=5, p_range=0.3),
    "unknown": GenConfig(p_unknown=0.15),
}


def verdict(text, mode, trials):
    g = frontend.load(text)
    fr = solve(g, mode=mode)
    if unsummarised_loops(fr):
        return None
    return check_soundness(g, fr, collect(fr), trials=trials)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--programs", type=int, default=1000, help="programs per setting")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--mode", choices=("single", "multi"), default="single")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-statements", type=int)
    args = p.parse_args(argv)
    failed = False
    for name, cfg in SETTINGS.items():
        if args.max_statements:
            cfg = replace(cfg, max_statements=args.max_statements)
        rng = random.Random(f"{args.seed}/{name}")
        t0 = time.perf_counter()
        counts = {"pass": 0, "skip": 0, "fail": 0}
        for _ in range(args.programs):
            text = generate(random.Random(rng.getrandbits(32)), cfg)
            v = verdict(text, args.mode, args.trials)
            if v is None:
                counts["skip"] += 1
            elif v.passed:
                counts["pass"] += 1
            else:
                counts["fail"] += 1
                failed = True
                small = minimize(text, lambda t: (r := verdict(t, args.mode, args.trials)) is not None
                                 and not r.passed)
                print(f"[{name}] {v.detail()}\n{small}")
        print(f"{name:<8} {counts['pass']} pass, {counts['fail']} fail, {counts['skip']} skipped "
              f"in {time.perf_counter() - t0:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
