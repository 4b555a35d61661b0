"""Forward data-flow evaluation over the back-edge-free CFG."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from . import ir
from .lattice import INF, BufInfo, PtrInfo
from .state import AnalysisState, initial_state, meet_state
from .transfer import TransferOutcome, update_maps


@dataclass
class FlowResult:
    cfg: ir.Cfg  # the forward graph the equations were solved on
    order: List[int]
    bin: Dict[int, AnalysisState]
    bout: Dict[int, AnalysisState]
    outcome: Dict[int, TransferOutcome] = field(default_factory=dict)
    mode: str = "single"

    def fresh(self, n: int) -> bool:
        return self.outcome[n].fresh_overflow

    def same_as(self, other: "FlowResult") -> bool:
        return (self.bin == other.bin and self.bout == other.bout
                and {n: o.fresh_overflow for n, o in self.outcome.items()}
                == {n: o.fresh_overflow for n, o in other.outcome.items()})


@dataclass(frozen=True)
class Domain:
    initial: Callable[[ir.Cfg], AnalysisState]
    meet: Callable[[AnalysisState, AnalysisState], AnalysisState]
    transfer: Callable[[AnalysisState, ir.Stmt], TransferOutcome]


SINGLE = Domain(
    initial=lambda g: initial_state(g.alloc_sites(), g.pointers),
    meet=meet_state,
    transfer=update_maps,
)


def domain_for(mode: str) -> Domain:
    if mode == "single":
        return SINGLE
    if mode == "multi":
        from .multipointee import MULTI
        return MULTI
    raise ValueError(f"unknown analysis mode {mode!r}")


def boundary_state(g: ir.Cfg, mode: str = "single") -> AnalysisState:
    """The entry state: everything undefined, except for assumed buffers."""
    s = domain_for(mode).initial(g)
    if not g.assumed_buffers:
        return s
    alpha = dict(s.alpha)
    beta = dict(s.beta)
    sizes = {}
    for name, cells in g.assumed_buffers:
        sizes[name] = len(cells) - 1
        alpha[name] = BufInfo(sizes[name], frozenset(i for i, c in enumerate(cells) if c == "\0"))
    for x, b, off in g.assumed_pointers:
        off = off if off <= sizes[b] else INF
        beta[x] = PtrInfo(b, off) if mode == "single" else {b: off}
    return AnalysisState(alpha, beta)


def _meet_all(dom: Domain, states: List[AnalysisState]) -> AnalysisState:
    acc = states[0]
    for s in states[1:]:
        acc = dom.meet(acc, s)
    return acc


def solve(g: ir.Cfg, mode: str = "single", entry_state: Optional[AnalysisState] = None,
          worklist: bool = False) -> FlowResult:
    """Solve the equations on ``g`` after dropping its back edges.

    ``entry_state`` replaces the boundary value at the start node, which
    lets callers seed an externally established pre-state.
    """
    dom = domain_for(mode)
    fwd = g.without_back_edges()
    order = ir.topo_order(fwd)
    start = entry_state if entry_state is not None else boundary_state(fwd, mode)
    if worklist:
        bin_, bout, outcome = _worklist(fwd, dom, start)
    else:
        bin_, bout, outcome = _single_pass(fwd, order, dom, start)
    return FlowResult(fwd, order, bin_, bout, outcome, mode)


def _single_pass(g: ir.Cfg, order: List[int], dom: Domain, start: AnalysisState):
    preds = g.preds()
    bin_: Dict[int, AnalysisState] = {}
    bout: Dict[int, AnalysisState] = {}
    outcome: Dict[int, TransferOutcome] = {}
    for n in order:
        bin_[n] = start if n == g.entry else _meet_all(dom, [bout[p] for p in preds[n]])
        outcome[n] = dom.transfer(bin_[n], g.nodes[n])
        bout[n] = outcome[n].state
    return bin_, bout, outcome


def _worklist(g: ir.Cfg, dom: Domain, start: AnalysisState):
    # chaotic iteration in id order; nodes wait until every predecessor has a value
    preds = g.preds()
    succs = g.succs
    bin_: Dict[int, AnalysisState] = {}
    bout: Dict[int, AnalysisState] = {}
    outcome: Dict[int, TransferOutcome] = {}
    work = sorted(g.nodes)
    queued = set(work)
    while work:
        n = work.pop(0)
        queued.discard(n)
        if n == g.entry:
            new_in = start
        else:
            if any(p not in bout for p in preds[n]):
                continue
            new_in = _meet_all(dom, [bout[p] for p in preds[n]])
        if n in bin_ and bin_[n] == new_in:
            continue
        bin_[n] = new_in
        outcome[n] = dom.transfer(new_in, g.nodes[n])
        bout[n] = outcome[n].state
        for v in succs.get(n, ()):
            if v not in queued:
                work.append(v)
                queued.add(v)
    return bin_, bout, outcome


def verify_equations(fr: FlowResult) -> List[str]:
    """Independent re-check of the equations; returns violations."""
    dom = domain_for(fr.mode)
    problems = []
    preds = fr.cfg.preds()
    for n, stmt in fr.cfg.nodes.items():
        if n != fr.cfg.entry:
            expect = _meet_all(dom, [fr.bout[p] for p in preds[n]])
            if expect != fr.bin[n]:
                problems.append(f"bIn of node {n} is not the meet of its predecessors")
        if dom.transfer(fr.bin[n], stmt).state != fr.bout[n]:
            problems.append(f"bOut of node {n} disagrees with its transfer function")
    return problems


def unsummarised_loops(fr: FlowResult) -> List[tuple]:
    """Back edges whose flow would still change the loop header's bIn.

    The analysis assumes range annotations summarise every iteration of a
    loop, so one pass over the acyclic graph suffices.  That holds exactly
    when meeting the latch's bOut into the header changes nothing.
    """
    dom = domain_for(fr.mode)
    bad = []
    for u, v in sorted(fr.cfg.back_edges):
        if dom.meet(fr.bin[v], fr.bout[u]) != fr.bin[v]:
            bad.append((u, v))
    return bad
