"""Grammar-directed driver: parses the action stream by recursive descent,
updating the dependency graph and the abstract model in lockstep.

Each production of the observable grammar has its own method.  Exit
categories are recognised from context: an ``Exit`` event closes the
innermost ++ or -+ method, and any non-callback event met while in
NoStatements mode means control came back from untraced code (exit-+).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

from . import lang, memmodel, stream
from .ddg import Ddg, SliceCriterion, SliceDocument
from .errors import CriterionNotExecuted, GrammarViolation
from .lang import RV_TERM, Program, StmtId
from .stream import ActionEvent, StatActionStream

log = logging.getLogger(__name__)

EXTERNAL = "<external>"


@dataclass
class Stats:
    events: int = 0
    model_ops: int = 0
    nodes: int = 0
    node_requests: int = 0
    havocs: int = 0
    callbacks: int = 0
    strong_updates: int = 0


@dataclass
class AnalysisResult:
    ddg: Ddg
    final_model: memmodel.AnalysisModel
    criterion_nodes: set[int]
    stats: Stats
    labels: list[str] = field(default_factory=list)
    truncated: bool = False
    criterion: SliceCriterion | None = None

    def slice(self) -> set[StmtId]:
        if not self.criterion_nodes:
            raise CriterionNotExecuted(f"criterion {self.criterion} was not executed")
        return self.ddg.slice(self.criterion_nodes)

    def slice_lines(self) -> set[int]:
        return {s.line for s in self.slice()}

    def document(self) -> SliceDocument:
        stmts = self.slice()
        reasons = self.ddg.slice_with_reasons(self.criterion_nodes)
        return SliceDocument(str(self.criterion), sorted(stmts), reasons)


class _Truncated(Exception):
    """The trace ended inside a method (the run aborted)."""


class Slicer:
    def __init__(self, program: Program, criterion: SliceCriterion | None = None, *,
                 type_filter: bool = True, subsumption: bool = True, on_step=None):
        self.p = program
        self.criterion = criterion
        self.ddg = Ddg(subsumption=subsumption)
        self.model = memmodel.init(program, type_filter=type_filter)
        self.stats = Stats()
        self.labels: list[str] = []
        self.crit_nodes: set[int] = set()
        self.ctrl: list[dict[StmtId, int]] = []
        self.on_step = on_step
        self.s: StatActionStream | None = None

    # -- helpers
    def _op(self, text: str, key: tuple) -> None:
        """Count one model operation; ``key`` names the matching concrete action."""
        self.stats.model_ops += 1
        self.labels.append(text)
        if self.on_step is not None:
            self.on_step(self, text, key)

    def _ctrl_of(self, stmt: lang.Stmt | None) -> set[int]:
        if stmt is None or stmt.ctrl_parent is None or not self.ctrl:
            return set()
        n = self.ctrl[-1].get(stmt.ctrl_parent)
        return {n} if n is not None else set()

    def _defs(self, terms: Iterable[lang.Term], env: int | None = None) -> set[int]:
        out: set[int] = set()
        for t in terms:
            out |= self.model.defs(t, env)
        return out

    def update_ddg(self, stmt: lang.Stmt, uses: Iterable[lang.Term], extra: Iterable[int] = (),
                   ctrl: bool = True, tag: str = "") -> int:
        """Node for ``stmt`` depending on the last definitions of ``uses``."""
        data = self._defs(uses) | set(extra)
        control = self._ctrl_of(stmt) if ctrl else set()
        return self.ddg.add_node(stmt.id, data, control, tag)

    def _capture(self, stmt: lang.Stmt, occurrence: int, own: list[int]) -> None:
        """Record criterion nodes once an occurrence has fully completed.

        ``own`` lists the occurrence's nodes, final one last.
        """
        c = self.criterion
        if c is None or not c.matches(stmt.id, occurrence):
            return
        nodes = set(own)
        if c.variable is not None:
            nodes = {own[-1]} | self.model.defs(c.variable)
        if c.occurrence == "last":
            self.crit_nodes = nodes
        else:
            self.crit_nodes |= nodes

    def _peek(self) -> ActionEvent:
        return self.s.peek()

    def _consume(self) -> ActionEvent:
        ev = self.s.consume()
        self.stats.events += 1
        return ev

    def _expect_exit(self, method: str) -> ActionEvent:
        ev = self._peek()
        if ev.kind == stream.END:
            raise _Truncated()
        if ev.kind != stream.EXIT:
            raise GrammarViolation(ev.position, f"exit of {method}", ev.kind)
        if ev.method != method:
            raise GrammarViolation(ev.position, f"exit of {method}", f"exit of {ev.method}")
        return self._consume()

    # -- entry point
    def analyze(self, s: StatActionStream) -> AnalysisResult:
        self.s = s
        truncated = False
        try:
            head = self._peek()
            if head.kind == stream.ENTER_PP:
                self.process_pp()
            elif head.kind == stream.ENTER_MP:
                self.process_root()
            elif head.kind != stream.END:
                raise GrammarViolation(head.position, "enter++Method or enter-+Method", head.kind)
            tail = self._peek()
            if tail.kind != stream.END:
                raise GrammarViolation(tail.position, "end of trace", tail.kind)
        except _Truncated:
            truncated = True
            log.info("trace ended inside a method; slicing what executed")
        self.stats.nodes = len(self.ddg)
        self.stats.node_requests = self.ddg.requests
        self.stats.strong_updates = self.model.strong_updates
        return AnalysisResult(self.ddg, self.model, self.crit_nodes, self.stats, self.labels,
                              truncated, self.criterion)

    # -- productions
    def process_root(self) -> None:
        """Entry method untraced: the whole run is NoStatements."""
        self.model.enter_pm(EXTERNAL, [], None)
        self.process_nostatements()

    def process_statements(self) -> None:
        while True:
            ev = self._peek()
            k = ev.kind
            if k in (stream.EXIT, stream.END):
                return
            if k == stream.ENTER_PP:
                self.process_pp()
            elif k == stream.ENTER_PM:
                self.process_pm()
            elif k == stream.ENTER_MP:
                raise GrammarViolation(ev.position, "a statement or a call", "callback outside untraced code")
            else:
                self._consume()
                self._simple(ev)

    def _simple(self, ev: ActionEvent) -> None:
        st = ev.stmt
        k = ev.kind
        if k == stream.BRANCH:
            n = self.update_ddg(st, ev.uses)
            self.ctrl[-1][st.id] = n
        elif k == stream.ALLOC:
            n = self.update_ddg(st, ev.uses)
            self.model.alloc(st.lhs_term, n, type_hint=st.new_class)
            self._op(stream.label(ev), ("stmt", st.id, ev.occurrence))
        elif k in (stream.ASSIGN, stream.RETURN):
            n = self.update_ddg(st, ev.uses)
            if k == stream.RETURN and st.rhs is None:
                pass
            else:
                lhs = RV_TERM if k == stream.RETURN else st.lhs_term
                self.model.assign(lhs, st.rhs_term, n)
                self._op(stream.label(ev), ("stmt", st.id, ev.occurrence))
        else:
            raise GrammarViolation(ev.position, "a statement", k)
        self._capture(st, ev.occurrence, [n])

    def process_pp(self) -> None:
        ev = self._consume()
        site = ev.stmt
        is_call = site.kind == lang.INVOKE
        n = self.update_ddg(site, ev.uses if is_call else (), tag="enter")
        self.model.enter_pp(ev.method, ev.params, ev.args, n)
        self._op(stream.label(ev), ("enter-site", site.id, ev.occurrence) if is_call else
                 ("enter", ev.method, ev.method_occurrence))
        self.ctrl.append({})
        try:
            self.process_statements()
        finally:
            self.ctrl.pop()
        self._expect_exit(ev.method)
        if not is_call:
            self.model.exit_pp(ev.method, None, n)
            self._op(stream.exit_label("exit++", ev.method, None), ("exit", ev.method, ev.method_occurrence))
            return
        callee_env = self.model.top
        rv_defs = self.model.defs(RV_TERM)
        caller_env = self.model.stack[-2]
        base = self._defs(lang.lhs_base_uses(site), caller_env)
        n2 = self.ddg.add_node(site.id, rv_defs | base, self._ctrl_of(site), "exit")
        assert self.model.top == callee_env
        self.model.exit_pp(ev.method, site.lhs_term, n2)
        self._op(stream.exit_label("exit++", ev.method, site.lhs_term), ("exit-site", site.id, ev.occurrence))
        self._capture(site, ev.occurrence, [n, n2])

    def process_pm(self) -> None:
        ev = self._consume()
        site = ev.stmt
        reach = self.model.reach_defs(self.model.havoc_set(ev.args))
        n = self.update_ddg(site, ev.uses, extra=reach, tag="enter")
        self.model.enter_pm(ev.method, ev.args, n)
        self.stats.havocs += 1
        self._op(stream.label(ev), ("enter-site", site.id, ev.occurrence))
        self.process_nostatements()
        nxt = self._peek()
        if nxt.kind == stream.END:
            raise _Truncated()
        # control is back in the traced caller: exit-+
        region = self.model.updated_heap()
        caller_env = self.model.stack[-2]
        data = {n} | self.model.reach_defs({region}) | self._defs(lang.lhs_base_uses(site), caller_env)
        n2 = self.ddg.add_node(site.id, data, self._ctrl_of(site), "exit")
        self.model.exit_mp(ev.method, site.lhs_term, n2)
        self._op(stream.exit_label("exit-+", ev.method, site.lhs_term), ("exit-site", site.id, ev.occurrence))
        self._capture(site, ev.occurrence, [n, n2])

    def process_nostatements(self) -> None:
        while self._peek().kind == stream.ENTER_MP:
            self.process_mp()

    def process_mp(self) -> None:
        ev = self._consume()
        m = self.p.methods[ev.method]
        region = self.model.updated_heap()
        n = self.ddg.add_node(m.enter.id, self.model.reach_defs({region}), (), "callback")
        self.model.enter_mp(ev.method, ev.params, n)
        self.stats.callbacks += 1
        self._op(stream.label(ev), ("enter", ev.method, ev.method_occurrence))
        self.ctrl.append({})
        try:
            self.process_statements()
        finally:
            self.ctrl.pop()
        done = self._expect_exit(ev.method)
        rv_defs = self.model.defs(RV_TERM)
        self.model.exit_pm(ev.method, rv_defs)
        self._op(stream.exit_label("exit+-", ev.method, None), ("exit", ev.method, done.method_occurrence))


def analyze(s: StatActionStream, program: Program, criterion: SliceCriterion | None = None, **kw) -> AnalysisResult:
    return Slicer(program, criterion, **kw).analyze(s)


def slice_program(program: Program, m2s, criterion, inputs=(), *, online: bool = False, seed=None, **kw):
    """Run, trace and slice in one call.  Returns ``(AnalysisResult, RunResult)``."""
    from . import runtime

    if isinstance(criterion, str):
        criterion = SliceCriterion.parse(criterion, program)
    if not isinstance(m2s, runtime.M2SConfig):
        m2s = runtime.M2SConfig.of(program, m2s)
    if online:
        events, holder = runtime.stream_online(program, m2s, inputs, seed=seed)
        result = analyze(stream.open_stream(events, program), program, criterion, **kw)
        run = holder.get("result")
    else:
        events, run = runtime.run_traced(program, m2s, inputs, seed=seed)
        result = analyze(stream.open_stream(events, program), program, criterion, **kw)
    return result, run
