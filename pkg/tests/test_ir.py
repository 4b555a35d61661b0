import pytest

from nullscan import ir
from nullscan.frontend import load
from nullscan.ir import UNKNOWN, Cfg, Const, Range, Stmt
from nullscan.lattice import INF


def _graph(edges, n):
    nodes = {i: Stmt(i, ir.NOP) for i in range(n)}
    succs = {i: [] for i in range(n)}
    for u, v in edges:
        succs[u].append(v)
    return Cfg(nodes, succs, 0)


def test_resolve_extent():
    assert ir.resolve_extent(Const(14), "alloc") == 14
    assert ir.resolve_extent(Range(8, 12), "alloc") == 8
    assert ir.resolve_extent(Range(8, 12), "index_or_shift") == 12
    assert ir.resolve_extent(UNKNOWN, "index_or_shift") == INF
    assert ir.resolve_extent(UNKNOWN, "alloc") == INF


def test_range_must_be_ordered():
    with pytest.raises(ValueError):
        Range(5, 2)


def test_back_edges_of_common_shapes():
    assert ir.find_back_edges(_graph([(0, 1), (1, 2)], 3)) == set()
    assert ir.find_back_edges(_graph([(0, 1), (0, 2), (1, 3), (2, 3)], 4)) == set()
    loop = load("ptr x\nx = malloc(4)\nwhile (*) {\n x[1] = null\n}\nread x\n")
    back = ir.find_back_edges(loop)
    assert len(back) == 1
    (u, v), = back
    assert loop.nodes[u].note == "latch" and loop.nodes[v].note == "loop"


def test_back_edge_removal_leaves_a_dag():
    g = load("ptr x\nx = malloc(4)\nwhile (*) {\n if (*) {\n x[1] = null\n }\n}\n")
    fwd = g.without_back_edges()
    assert len(fwd.edges()) == len(g.edges()) - len(fwd.back_edges)
    ir.topo_order(fwd)


def test_irreducible_graph_is_rejected():
    # two entries into the cycle 1 <-> 2
    g = _graph([(0, 1), (0, 2), (1, 2), (2, 1)], 3)
    with pytest.raises(ir.IrregularCfg):
        ir.find_back_edges(g)


def test_unreachable_nodes_are_rejected():
    with pytest.raises(ir.IrregularCfg):
        ir.find_back_edges(_graph([(0, 1)], 3))


def test_topo_order():
    assert ir.topo_order(_graph([(0, 1), (1, 2)], 3)) == [0, 1, 2]
    order = ir.topo_order(_graph([(0, 1), (0, 2), (1, 3), (2, 3)], 4))
    assert order[0] == 0 and order[-1] == 3
    assert ir.topo_order(_graph([], 1)) == [0]
    with pytest.raises(ir.CycleDetected):
        ir.topo_order(_graph([(0, 1), (1, 0)], 2))


def test_statement_render_round_trip():
    text = "ptr x, y\nx = malloc(14)\ny = x + 4\nx[3] = null\nstrncat(x, y, i@range(1,3))\nread y[2]\n"
    g = load(text)
    again = load("ptr x, y\n" + "\n".join(s.render() for s in g.statements()[1:]) + "\n")
    assert [s.render() for s in again.statements()] == [s.render() for s in g.statements()]
