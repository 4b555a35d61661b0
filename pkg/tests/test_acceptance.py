"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import random
import time
from contextlib import contextmanager

import pytest

from nullscan import collect, frontend, ir
from nullscan.detect import READ_OVERFLOW, WRITE_OVERFLOW, check_read
from nullscan.gen import GenConfig, generate
from nullscan.lattice import (
    B_INF,
    INF,
    BufInfo,
    PtrInfo,
    meet_alpha,
    meet_beta,
    meet_bufid,
    meet_nps,
    meet_size,
)
from nullscan.oracle import Exploration, check_soundness, string_length
from nullscan.solver import solve, unsummarised_loops
from nullscan.state import AnalysisState, end_of
from nullscan.transfer import shift_offset

from .conftest import CORPUS, corpus_files, load_corpus

CASES = 10_000


@pytest.fixture
def verdict(request, capsys):
    @contextmanager
    def report(detail=""):
        name = request.node.name.removeprefix("test_")
        try:
            yield
        except BaseException as e:
            with capsys.disabled():
                print(f"\nFAIL {name}: {e}".rstrip())
            raise
        with capsys.disabled():
            print(f"\nPASS {name} {detail() if callable(detail) else detail}".rstrip())
    return report


def _calls(g):
    return [s.id for s in g.statements() if s.op in ir.STRING_FUNCS]


def test_1_golden_running_example(verdict):
    with verdict():
        g = load_corpus("running_example_core.bof")
        t0 = time.perf_counter()
        fr = solve(g)
        elapsed = time.perf_counter() - t0
        c1, c2, c3 = _calls(g)
        s = fr.bin[c1]
        assert s.alpha["b0"] == BufInfo(10, frozenset({10}))
        assert s.alpha["b1"] == BufInfo(14, frozenset({3, 7, 13}))
        assert s.beta == {"w": PtrInfo("b0", 0), "x": PtrInfo("b1", 0),
                          "y": PtrInfo("b1", 4), "z": PtrInfo("b1", 6)}
        assert fr.bout[c1].alpha["b1"] == BufInfo(14, frozenset({3, 10, 13}))
        assert fr.bout[c2].alpha["b1"] == BufInfo(14, frozenset({3, INF}))
        assert fr.bout[c3].alpha["b1"] == BufInfo(14, frozenset({3, 14, INF}))
        assert elapsed < 1


def test_2_read_checks(verdict):
    with verdict():
        t0 = time.perf_counter()
        g = load_corpus("running_example_core.bof")
        fr = solve(g)
        c1, c2, _ = _calls(g)
        before = fr.bin[c1]
        v = AnalysisState(before.alpha, {**before.beta, "v": shift_offset(before, "x", 14)})
        assert v.beta["v"] == PtrInfo("b1", 14)
        assert end_of(v, "v", "b1") == INF and check_read(v, "v").kind == READ_OVERFLOW
        assert end_of(before, "y", "b1") == 7 and check_read(before, "y") is None
        assert end_of(fr.bout[c1], "y", "b1") == 10 and check_read(fr.bout[c1], "y") is None
        assert end_of(fr.bout[c2], "y", "b1") == INF and check_read(fr.bout[c2], "y").kind == READ_OVERFLOW
        assert time.perf_counter() - t0 < 1


def test_3_diagnostic_placement(verdict):
    with verdict():
        for name in ("running_example_core.bof", "running_example.bof"):
            g = load_corpus(name)
            writes = [d for d in collect(solve(g)) if d.kind == WRITE_OVERFLOW]
            assert len(writes) == 1, name
            assert writes[0].stmt_id == _calls(g)[1], name
            assert writes[0].stmt_id != _calls(g)[2]


def _rand_size(r):
    return INF if r.random() < 0.2 else r.randint(0, 20)


def _rand_nps(r):
    return frozenset(_rand_size(r) for _ in range(r.randint(0, 6)))


def _rand_buf(r):
    return r.choice(["b1", "b2", "b3", B_INF])


def _rand_alpha(r):
    return {b: BufInfo(_rand_size(r), _rand_nps(r)) for b in ("b1", "b2", B_INF)}


def _rand_ptr(r):
    # (b_inf, k) with finite k is not a lattice element
    b = _rand_buf(r)
    return PtrInfo(b, INF if b == B_INF else _rand_size(r))


def _rand_beta(r):
    return {x: _rand_ptr(r) for x in ("x", "y", "z")}


MEETS = {
    "meet_size": (meet_size, _rand_size),
    "meet_bufid": (meet_bufid, _rand_buf),
    "meet_nps": (meet_nps, _rand_nps),
    "meet_alpha": (meet_alpha, _rand_alpha),
    "meet_beta": (meet_beta, _rand_beta),
}


def test_4_semilattice_laws(verdict):
    checked = {}
    with verdict(lambda: f"({', '.join(f'{k}: {v}' for k, v in checked.items())} cases per law)"):
        r = random.Random(4)
        for name, (meet, draw) in MEETS.items():
            bad = {"commutativity": 0, "associativity": 0, "idempotence": 0}
            for _ in range(CASES):
                a, b, c = draw(r), draw(r), draw(r)
                bad["commutativity"] += meet(a, b) != meet(b, a)
                bad["associativity"] += meet(meet(a, b), c) != meet(a, meet(b, c))
                bad["idempotence"] += meet(a, a) != a
            assert not any(bad.values()), f"{name}: {bad}"
            checked[name] = CASES


def test_5_overflow_evidence_persists(verdict):
    with verdict(f"({CASES} pairs)"):
        r = random.Random(5)
        bad = 0
        for _ in range(CASES):
            x, y = _rand_nps(r), _rand_nps(r)
            bad += (INF in meet_nps(x, y)) != (INF in x or INF in y)
        assert bad == 0, f"{bad} violations"


def test_6_oracle_soundness(verdict):
    stats = {"checked": 0, "skipped": 0, "events": 0, "exhaustive": 0}
    detail = lambda: (f"({stats['checked']} programs, {stats['exhaustive']} explored exhaustively, "
                      f"{stats['events']} overflow events, {stats['skipped']} skipped "
                      f"as loops not summarised by ranges, {time.perf_counter() - t0:.0f}s)")
    t0 = time.perf_counter()
    with verdict(detail):
        rng = random.Random(6)
        cfg = GenConfig(max_statements=20, max_branch_depth=2, max_loops=1)
        while stats["checked"] < 500:
            text = generate(random.Random(rng.getrandbits(32)), cfg)
            g = frontend.load(text)
            fr = solve(g)
            if unsummarised_loops(fr):
                stats["skipped"] += 1
                continue
            v = check_soundness(g, fr, collect(fr), trials=200, seed=stats["checked"])
            assert v.passed, f"{v.detail()}\n{text}"
            stats["checked"] += 1
            stats["events"] += v.events_seen
            stats["exhaustive"] += v.exhaustive
        assert time.perf_counter() - t0 < 300


def _single_pointee(path):
    fr = solve(frontend.load(path.read_text()), mode="multi")
    return not any(r is not None and len(r) > 1 for s in fr.bout.values() for r in s.beta.values())


def test_7_mode_degeneracy(verdict):
    files = [p for p in corpus_files() if _single_pointee(p)]
    with verdict(f"({len(files)} programs)"):
        assert files
        for p in files:
            g = frontend.load(p.read_text())
            a = [d.to_text() for d in collect(solve(g))]
            b = [d.to_text() for d in collect(solve(g, mode="multi"))]
            assert a == b, p.name


def test_8_solver_determinism(verdict):
    files = corpus_files()
    with verdict(f"({len(files)} programs, both modes)"):
        for p in files:
            g = frontend.load(p.read_text())
            for mode in ("single", "multi"):
                assert solve(g, mode=mode).same_as(solve(g, mode=mode, worklist=True)), (p.name, mode)


# what every run of each desugaring fixture must show
DOCUMENTED = {
    "literal": ({"x": 5}, set()),
    "array": ({"init": 3, "part": 2, "buf": None}, set()),
    "realloc": ({"x": 3, "y.tmp5": 3}, {"write"}),
    "deref": ({"x": 5}, set()),
    "compare": ({"a": 4, "b": 5}, set()),
    "search": ({"x": 8, "y": 2, "t": None, "u": None}, set()),
    "dynamic": ({"line": None}, {"read"}),
    "control": ({"x": 9}, set()),
}


def test_9_desugaring_fidelity(verdict):
    fixtures = sorted((CORPUS / "desugar").glob("*.bof"))
    with verdict(f"({len(fixtures)} surface forms)"):
        assert {p.stem for p in fixtures} == set(DOCUMENTED)
        for p in fixtures:
            g = frontend.load(p.read_text())
            assert frontend.render_program(g) + "\n" == p.with_suffix(".expected").read_text(), p.name
            lengths, kinds = DOCUMENTED[p.stem]
            runs = list(Exploration(g, trials=100))
            for r in runs:
                assert r.completed, p.name
                for x, n in lengths.items():
                    assert string_length(r.heap, x) == n, (p.name, x)
                assert {e.kind for e in r.events} == kinds, p.name
            fr = solve(g)
            assert check_soundness(g, fr, collect(fr), trials=100).passed, p.name
