import json

from nullscan import ir
from nullscan.detect import READ_OVERFLOW, WRITE_OVERFLOW, WRITE_UNDEFINED, check_read, collect
from nullscan.frontend import load
from nullscan.lattice import INF
from nullscan.solver import solve
from nullscan.state import AnalysisState, end_of
from nullscan.transfer import shift_offset

from .conftest import load_corpus


def _calls(g):
    return [s.id for s in g.statements() if s.op in ir.STRING_FUNCS]


def test_read_checks_on_running_example(example):
    fr = solve(example)
    c1, c2, c3 = _calls(example)
    before = fr.bin[c1]
    v = shift_offset(before, "x", 14)
    with_v = AnalysisState(before.alpha, {**before.beta, "v": v})
    assert v.offset == 14 and end_of(with_v, "v", "b1") == INF
    assert check_read(with_v, "v").reason == "no_null_terminator"
    assert end_of(before, "y", "b1") == 7 and check_read(before, "y") is None
    after1 = fr.bout[c1]
    assert end_of(after1, "y", "b1") == 10 and check_read(after1, "y") is None
    after2 = fr.bout[c2]
    assert end_of(after2, "y", "b1") == INF
    assert check_read(after2, "y").kind == READ_OVERFLOW


def test_single_write_overflow_at_second_strcat(example):
    fr = solve(example)
    diags = collect(fr)
    writes = [d for d in diags if d.kind == WRITE_OVERFLOW]
    assert len(writes) == 1
    assert writes[0].stmt_id == _calls(example)[1] and writes[0].buffer == "b1"
    assert writes[0].line == 12 and writes[0].severity == "error"
    assert not [d for d in diags if d.stmt_id == _calls(example)[2] and d.kind == WRITE_OVERFLOW]


def test_self_contained_running_example():
    diags = collect(solve(load_corpus("running_example.bof")))
    assert [(d.kind, d.line) for d in diags if d.severity == "error"] == [(WRITE_OVERFLOW, 12)]


def test_write_through_undefined_pointer():
    diags = collect(solve(load("ptr x\nx[0] = null\n")))
    assert [(d.kind, d.reason) for d in diags] == [(WRITE_UNDEFINED, "undefined_buffer")]


def test_diamond_offset_conflict_is_a_read_warning():
    diags = collect(solve(load_corpus("diamond.bof")))
    assert [(d.kind, d.reason, d.severity) for d in diags] == [(READ_OVERFLOW, "undefined_offset", "warning")]


def test_indexed_read_past_the_end():
    g = load("ptr x\nx = malloc(4)\nread x[5]\nread x[4]\n")
    diags = collect(solve(g))
    assert [(d.line, d.reason) for d in diags] == [(3, "saturation")]


def test_bounded_scan_inside_the_buffer_is_fine():
    g = load("ptr x, y\nx = malloc(10)\ny = malloc(4)\nstrncpy(x, y, 3)\n")
    assert [d for d in collect(solve(g)) if d.kind == READ_OVERFLOW] == []
    g = load("ptr x, y\nx = malloc(10)\ny = malloc(4)\nstrcpy(x, y)\n")
    assert [d.reason for d in collect(solve(g)) if d.kind == READ_OVERFLOW] == ["no_null_terminator"]


def test_reads_can_be_switched_off():
    g = load_corpus("diamond.bof")
    assert collect(solve(g), check_reads=False) == []


def test_formats(example):
    d = next(d for d in collect(solve(example)))
    assert d.to_text().split(":")[:4] == ["12", "write_overflow", "b1", "saturation"]
    assert json.loads(json.dumps(d.to_json()))["stmt_id"] == d.stmt_id
