"""From control-flow events to the observable action stream.

Two filters run in sequence.  :func:`lift` resolves statement events against
the program; :func:`classify` rewrites method boundaries, fusing a call site
with the callee's entry when both are observed.  Exit categories are left to
the parser, which detects them from context.  :func:`recognize` is an
independent pushdown check of the resulting word against the observable
grammar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import lang
from .errors import EndOfTrace, GrammarViolation, MalformedTrace, UnknownStatement
from .lang import Program, Stmt, Term
from .runtime import ControlFlowEvent

# event kinds
ALLOC, ASSIGN, RETURN, BRANCH = "Alloc", "Assign", "Return", "Branch"
ENTER_PP, ENTER_PM, ENTER_MP = "Enter++", "Enter+-", "Enter-+"
EXIT, END = "Exit", "End"


@dataclass(frozen=True)
class Lifted:
    kind: str  # "stmt", "enter" or "exit"
    occurrence: int
    stmt: Stmt | None = None
    method: str | None = None


@dataclass
class ActionEvent:
    kind: str
    position: int
    occurrence: int = 0
    stmt: Stmt | None = None
    method: str | None = None
    params: tuple[str, ...] = ()
    args: tuple[Term | None, ...] = ()
    uses: frozenset[Term] = frozenset()
    def_: Term | None = None
    method_occurrence: int | None = None

    def __repr__(self) -> str:
        where = f" {self.stmt.id}" if self.stmt is not None else ""
        return f"<{self.kind}{where} {self.method or ''}#{self.occurrence}>"


def lift(events: Iterable[ControlFlowEvent], p: Program) -> Iterator[Lifted]:
    for e in events:
        if e.kind == "S":
            s = p.stmts.get(e.ref)
            if s is None or s.kind == lang.ENTER:
                raise UnknownStatement(f"trace names unknown statement {e.ref}")
            yield Lifted("stmt", e.occurrence, stmt=s)
        elif e.kind == "E":
            if e.ref not in p.methods:
                raise UnknownStatement(f"trace names unknown method {e.ref}")
            yield Lifted("enter", e.occurrence, method=e.ref)
        elif e.kind == "X":
            yield Lifted("exit", e.occurrence, method=e.ref)
        else:
            raise MalformedTrace(f"unknown event kind {e.kind!r}")


def classify(lifted: Iterable[Lifted], p: Program) -> Iterator[ActionEvent]:
    """Rewrite lifted events into action events (see module docstring)."""
    it = iter(lifted)
    pending: list[Lifted] = []

    def nxt() -> Lifted | None:
        if pending:
            return pending.pop()
        return next(it, None)

    pos = 0
    depth = 0
    first = True
    while True:
        ev = nxt()
        if ev is None:
            return
        if ev.kind == "enter":
            m = p.methods[ev.method]
            kind = ENTER_PP if first and ev.method == p.entry else ENTER_MP
            depth += 1
            yield ActionEvent(kind, pos, ev.occurrence, stmt=m.enter, method=ev.method,
                              params=tuple(m.params), args=tuple(None for _ in m.params) if kind == ENTER_PP else (),
                              method_occurrence=ev.occurrence)
        elif ev.kind == "exit":
            depth -= 1
            if depth < 0:
                raise MalformedTrace(f"event {pos}: exit of {ev.method} without a matching enter")
            yield ActionEvent(EXIT, pos, ev.occurrence, method=ev.method, method_occurrence=ev.occurrence)
        else:
            s = ev.stmt
            if s.kind == lang.INVOKE:
                after = nxt()
                callee = p.methods[s.callee]
                if after is not None and after.kind == "enter" and after.method == s.callee:
                    depth += 1
                    yield ActionEvent(ENTER_PP, pos, ev.occurrence, stmt=s, method=s.callee,
                                      params=tuple(callee.params), args=s.arg_terms,
                                      uses=frozenset(lang.arg_uses(s)), def_=s.lhs_term,
                                      method_occurrence=after.occurrence)
                else:
                    if after is not None:
                        pending.append(after)
                    yield ActionEvent(ENTER_PM, pos, ev.occurrence, stmt=s, method=s.callee,
                                      args=s.arg_terms, uses=frozenset(lang.arg_uses(s)), def_=s.lhs_term)
            else:
                kind = {lang.ALLOC: ALLOC, lang.ASSIGN: ASSIGN, lang.RETURN: RETURN,
                        lang.IF: BRANCH, lang.WHILE: BRANCH}[s.kind]
                yield ActionEvent(kind, pos, ev.occurrence, stmt=s, method=s.method,
                                  uses=frozenset(lang.uses_of(s)), def_=lang.def_of(s))
        first = False
        pos += 1


_SENTINEL = ActionEvent(END, -1)


class StatActionStream:
    """One-event lookahead over a classified event source."""

    def __init__(self, events: Iterable[ActionEvent]):
        self._it = iter(events)
        self._head: ActionEvent | None = None
        self._done = False
        self.consumed = 0

    def _fill(self) -> None:
        if self._head is None and not self._done:
            nxt = next(self._it, None)
            if nxt is None:
                self._done = True
            else:
                self._head = nxt

    def peek(self) -> ActionEvent:
        self._fill()
        return self._head if self._head is not None else _SENTINEL

    def consume(self) -> ActionEvent:
        self._fill()
        if self._head is None:
            raise EndOfTrace("consume past the end of the trace")
        ev, self._head = self._head, None
        self.consumed += 1
        return ev

    @property
    def at_end(self) -> bool:
        return self.peek().kind == END


def open_stream(events: Iterable[ControlFlowEvent], p: Program) -> StatActionStream:
    return StatActionStream(classify(lift(events, p), p))


# --------------------------------------------------------------------------
# observable labels and the grammar recognizer


def _join(xs) -> str:
    return ",".join("_" if x is None else str(x) for x in xs)


def label(ev: ActionEvent) -> str:
    """Human-readable observable action for a non-exit event."""
    k = ev.kind
    if k == ENTER_PP:
        inner = list(ev.params) + [a for a in ev.args if a is not None] if ev.stmt.kind == lang.INVOKE else list(ev.params)
        return f"enter++Method_{ev.method}" + (f"({_join(inner)})" if inner else "")
    if k == ENTER_PM:
        return f"enter+-Method_{ev.method}({_join(ev.args)})"
    if k == ENTER_MP:
        return f"enter-+Method_{ev.method}({_join(ev.params)})"
    if k == ALLOC:
        return f"alloc({ev.stmt.lhs_term})"
    if k in (ASSIGN, RETURN):
        if k == RETURN and ev.stmt.rhs is None:
            return "return"
        lhs = lang.RV if k == RETURN else str(ev.stmt.lhs_term)
        rhs = ev.stmt.rhs_term if ev.stmt.rhs_term is not None else lang.format_expr(ev.stmt.rhs)
        return f"assign({lhs},{rhs})"
    if k == BRANCH:
        return f"branch({lang.format_expr(ev.stmt.cond)})"
    return k


def exit_label(kind: str, method: str, lhs: Term | None) -> str:
    if kind == "exit++":
        return f"exit++Method_{method}" + (f"({lhs})" if lhs is not None else "")
    if kind == "exit+-":
        return f"exit+-Method_{method}()"
    return f"exit-+Method_{method}({lhs if lhs is not None else ''})"


@dataclass
class _Frame:
    mode: str  # "++", "-+" or "+-" (NoStatements)
    method: str
    site: ActionEvent | None = None
    children: list = field(default_factory=list)


def recognize(events: Iterable[ActionEvent], *, observable_only: bool = True) -> list[str]:
    """Accept or reject a classified stream; return its observable labels.

    Implements the grammar as a pushdown automaton:

        start       ::= ++Method | NoStatements
        ++Method    ::= enter++ Statements exit++
        +-Method    ::= enter+- NoStatements exit-+
        -+Method    ::= enter-+ Statements exit+-
        Statements  ::= (stmt | ++Method | +-Method)*
        NoStatements::= -+Method*

    exit-+ has no event of its own: it is implied when a NoStatements run
    meets anything that is not a callback entry.  Branch and value-less
    return events are skipped from the label list when ``observable_only``.
    """
    out: list[str] = []
    stack: list[_Frame] = []
    started = False
    pos = -1

    def emit(text: str) -> None:
        out.append(text)

    def close_nostatements_until_statements() -> None:
        # an implicit exit-+ for every +- frame on top
        while stack and stack[-1].mode == "+-":
            f = stack.pop()
            if f.site is None:
                raise GrammarViolation(pos, "end of trace", "events after the external root")
            emit(exit_label("exit-+", f.method, f.site.def_))

    for ev in events:
        pos = ev.position
        k = ev.kind
        if not started:
            started = True
            if k == ENTER_PP:
                stack.append(_Frame("++", ev.method))
                emit(label(ev))
                continue
            if k == ENTER_MP:
                stack.append(_Frame("+-", "<external>"))
            else:
                raise GrammarViolation(pos, "enter++Method or enter-+Method", k)
        if not stack:
            raise GrammarViolation(pos, "end of trace", k)
        top = stack[-1]
        if k == ENTER_MP:
            if top.mode != "+-":
                raise GrammarViolation(pos, "a statement, enter++, enter+- or exit", "orphan enter-+ (callback)")
            stack.append(_Frame("-+", ev.method))
            emit(label(ev))
            continue
        if top.mode == "+-":
            if top.site is None:
                raise GrammarViolation(pos, "enter-+Method or end of trace", k)
            close_nostatements_until_statements()
            top = stack[-1]
        if k == EXIT:
            if top.method != ev.method:
                raise GrammarViolation(pos, f"exit of {top.method}", f"exit of {ev.method}")
            stack.pop()
            if top.mode == "++":
                emit(exit_label("exit++", top.method, top.site.def_ if top.site is not None else None))
            else:
                emit(exit_label("exit+-", top.method, None))
            continue
        if k == ENTER_PP:
            stack.append(_Frame("++", ev.method, site=ev))
            emit(label(ev))
        elif k == ENTER_PM:
            stack.append(_Frame("+-", ev.method, site=ev))
            emit(label(ev))
        elif k in (ALLOC, ASSIGN, RETURN, BRANCH):
            text = label(ev)
            if not observable_only or text not in ("return",) and k != BRANCH:
                emit(text)
        else:
            raise GrammarViolation(pos, "an action event", k)
    # end of trace
    if not started:
        return out
    if stack and stack[-1].mode == "+-" and stack[-1].site is None and len(stack) == 1:
        return out
    if stack:
        raise GrammarViolation(pos + 1, f"exit of {stack[-1].method}", "end of trace")
    return out


def observable_trace(events: Iterable[ControlFlowEvent], p: Program, **kw) -> list[str]:
    return recognize(classify(lift(events, p), p), **kw)
