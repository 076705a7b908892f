"""Tree-walking interpreter over concrete points-to configurations.

The interpreter produces two kinds of output:

* the lightweight control-flow trace (statement executions plus method
  enter/exit) restricted to the instrumented methods, and
* optionally, the full concrete action trace with object identities and the
  exact memory locations each statement occurrence read and wrote.
"""

from __future__ import annotations

import os
import queue
import random
import sys
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from . import lang
from .errors import (
    DivisionByZero,
    IndexOutOfBounds,
    MiniRuntimeError,
    NullDereference,
    StepLimitExceeded,
    TypeMismatch,
    UndefinedVariable,
)
from .lang import ARRAY_FIELD, RV, Access, BinOp, FieldSel, IndexSel, Lit, Program, Stmt, StmtId, UnOp

GLOBALS_ID = 0
GLOBALS_CLASS = "<globals>"
FRAME_PREFIX = "<frame:"

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

Location = tuple  # (ObjectId, field-name-or-index)


@dataclass(frozen=True)
class Ref:
    oid: int


# --------------------------------------------------------------------------
# configuration


@dataclass
class ConcreteConfig:
    """Heap plus activation stack.  ``stack[-1]`` is the current activation."""

    objects: dict[int, str] = field(default_factory=dict)
    cells: dict[Location, object] = field(default_factory=dict)
    stack: list[int] = field(default_factory=list)
    lengths: dict[int, int] = field(default_factory=dict)
    alloc_site: dict[int, tuple[StmtId, int]] = field(default_factory=dict)

    @property
    def edges(self) -> dict[Location, int]:
        return {loc: v.oid for loc, v in self.cells.items() if isinstance(v, Ref)}

    @property
    def scalars(self) -> dict[Location, object]:
        return {loc: v for loc, v in self.cells.items() if not isinstance(v, Ref)}

    @property
    def top(self) -> int:
        return self.stack[-1]

    def frame_method(self, oid: int) -> str | None:
        cls = self.objects.get(oid, "")
        return cls[len(FRAME_PREFIX):-1] if cls.startswith(FRAME_PREFIX) else None

    def copy(self) -> "ConcreteConfig":
        return ConcreteConfig(
            dict(self.objects), dict(self.cells), list(self.stack), dict(self.lengths), dict(self.alloc_site)
        )

    def out_edges(self, oid: int) -> Iterator[tuple[object, int]]:
        for (o, f), v in self.cells.items():
            if o == oid and isinstance(v, Ref):
                yield f, v.oid


@dataclass(frozen=True)
class ConcreteAction:
    """One recorded transition.

    ``kind`` is one of alloc, assign, enterMethod, exitMethod, or eval (a
    condition or a value-less return, which moves no pointers but still
    reads memory and anchors control dependences).  For enter and exit
    actions ``method`` is the callee and ``caller`` the calling method.
    """

    index: int
    kind: str
    stmt: StmtId
    occurrence: int
    method: str
    reads: frozenset
    writes: frozenset
    ctrl: int | None = None
    caller: str | None = None
    payload: dict = field(default_factory=dict, compare=False)

    @property
    def touched(self) -> set[int]:
        return {loc[0] for loc in self.reads | self.writes}


@dataclass(frozen=True)
class ControlFlowEvent:
    kind: str  # "E", "X" or "S"
    ref: object  # method name for E/X, StmtId for S
    occurrence: int

    def __str__(self) -> str:
        return f"{self.kind} {self.ref} {self.occurrence}"

    def describe(self) -> str:
        """Compact rendering, e.g. ``EnterMain^0`` or ``S3^0``."""
        if self.kind == "S":
            return f"S{self.ref.line}^{self.occurrence}"
        word = "Enter" if self.kind == "E" else "Exit"
        return f"{word}{str(self.ref)[:1].upper()}{str(self.ref)[1:]}^{self.occurrence}"

    @classmethod
    def parse(cls, line: str) -> "ControlFlowEvent":
        kind, ref, occ = line.split()
        if kind == "S":
            return cls(kind, StmtId.parse(ref), int(occ))
        return cls(kind, ref, int(occ))


@dataclass
class M2SConfig:
    instrumented: frozenset[str]

    @classmethod
    def of(cls, prog: Program, names: Iterable[str] | str) -> "M2SConfig":
        if isinstance(names, str):
            names = [n for n in names.split(",") if n]
        names = list(names)
        if "*" in names:
            return cls(frozenset(prog.methods))
        unknown = [n for n in names if n not in prog.methods]
        if unknown:
            raise ValueError(f"unknown methods in M2S: {unknown}")
        return cls(frozenset(names))

    def __contains__(self, name: str) -> bool:
        return name in self.instrumented


@dataclass
class RunResult:
    config: ConcreteConfig
    steps: int
    error: MiniRuntimeError | None = None
    return_value: object = None


class FullTrace(Sequence):
    """Full concrete action trace; behaves as a sequence of actions."""

    def __init__(self, actions, result: RunResult, snapshots=None):
        self.actions: list[ConcreteAction] = actions
        self.result = result
        self.snapshots: list[ConcreteConfig] | None = snapshots

    def __getitem__(self, i):
        return self.actions[i]

    def __len__(self):
        return len(self.actions)

    @property
    def error(self):
        return self.result.error


# --------------------------------------------------------------------------
# interpreter


class _Return(Exception):
    pass


class _Stop(Exception):
    pass


@dataclass
class _Frame:
    oid: int
    method: str
    mocc: int = 0
    ctrl: dict[StmtId, int] = field(default_factory=dict)


def default_value(ty: str | None):
    if ty == "int":
        return 0
    if ty == "bool":
        return False
    return None


class Interpreter:
    def __init__(
        self,
        program: Program,
        m2s: M2SConfig | None = None,
        *,
        record: bool = False,
        snapshots: bool = False,
        emit: Callable[[ControlFlowEvent], None] | None = None,
        max_steps: int = 5_000_000,
        max_depth: int = 400,
        seed: int | None = None,
        on_complete: Callable[["Interpreter", Stmt, int], None] | None = None,
    ):
        self.p = program
        self.m2s = m2s.instrumented if m2s is not None else frozenset()
        self.record = record or snapshots
        self.want_snapshots = snapshots
        self.emit = emit
        self.max_steps = max_steps
        self.max_depth = max_depth
        self.rng = random.Random(seed)
        self.on_complete = on_complete

        self.c = ConcreteConfig()
        self.c.objects[GLOBALS_ID] = GLOBALS_CLASS
        for name, ty in program.static_types.items():
            self.c.cells[(GLOBALS_ID, name)] = default_value(ty)
        self.next_oid = 1
        self.frames: list[_Frame] = []
        self.actions: list[ConcreteAction] = []
        self.snaps: list[ConcreteConfig] = []
        self.stmt_occ: dict[StmtId, int] = {}
        self.method_occ: dict[str, int] = {}
        self.site_occ: dict[StmtId, int] = {}
        self.steps = 0
        self._reads: set | None = None

    # -- bookkeeping
    def _fresh(self, cls: str) -> int:
        oid = self.next_oid
        self.next_oid += 1
        self.c.objects[oid] = cls
        return oid

    def _event(self, kind: str, ref, occ: int) -> None:
        if self.emit is not None:
            self.emit(ControlFlowEvent(kind, ref, occ))

    def _act(self, kind, stmt, occ, reads, writes, ctrl, caller=None, **payload) -> None:
        if not self.record:
            return
        frame = self.frames[-1] if self.frames else None
        a = ConcreteAction(
            len(self.actions),
            kind,
            stmt,
            occ,
            payload.pop("method", frame.method if frame else ""),
            frozenset(reads),
            frozenset(writes),
            ctrl,
            caller,
            payload,
        )
        self.actions.append(a)
        if self.want_snapshots and kind != "eval":
            self.snaps.append(self.c.copy())

    @property
    def frame(self) -> _Frame:
        return self.frames[-1]

    # -- memory
    def _read(self, loc: Location, stmt: Stmt):
        if self._reads is not None:
            self._reads.add(loc)
        if loc in self.c.cells:
            return self.c.cells[loc]
        if self.c.objects.get(loc[0], "").startswith(FRAME_PREFIX):
            raise UndefinedVariable(stmt.id, f"variable {loc[1]!r} read before assignment")
        raise TypeMismatch(stmt.id, f"object of class {self.c.objects.get(loc[0])} has no field {loc[1]!r}")

    def _write(self, loc: Location, value, stmt: Stmt) -> None:
        oid, fld = loc
        cls = self.c.objects[oid]
        if not cls.startswith(FRAME_PREFIX):
            if cls.endswith("[]"):
                ty = lang.element_type(cls)
            elif oid == GLOBALS_ID:
                ty = self.p.static_types.get(fld)
            else:
                ty = self.p.field_decl_type(cls, fld)
                if ty is None:
                    raise TypeMismatch(stmt.id, f"class {cls} has no field {fld!r}")
            self._check_type(ty, value, stmt)
        self.c.cells[loc] = value

    def _check_type(self, ty: str | None, value, stmt: Stmt) -> None:
        if ty is None:
            return
        if lang.is_ref_type(ty):
            if value is None:
                return
            if not isinstance(value, Ref) or self.c.objects[value.oid] != ty:
                raise TypeMismatch(stmt.id, f"cannot store {self._describe(value)} into a {ty} slot")
        elif isinstance(value, Ref) or value is None:
            raise TypeMismatch(stmt.id, f"cannot store {self._describe(value)} into a {ty} slot")

    def _describe(self, v) -> str:
        if isinstance(v, Ref):
            return f"a {self.c.objects[v.oid]} reference"
        return repr(v)

    def _root(self, a_var: str) -> int:
        return GLOBALS_ID if "." in a_var else self.frame.oid

    def _locate(self, a: Access, stmt: Stmt) -> Location:
        """Cell written by ``a``; reads of the path prefixes are recorded."""
        loc: Location = (self._root(a.var), a.var)
        for sel in a.selectors:
            cur = self._read(loc, stmt)
            if not isinstance(cur, Ref):
                raise NullDereference(stmt.id, f"dereference of {'null' if cur is None else repr(cur)}")
            if isinstance(sel, FieldSel):
                loc = (cur.oid, sel.name)
            else:
                idx = self._eval(sel.index, stmt)
                if not isinstance(idx, int) or isinstance(idx, bool):
                    raise TypeMismatch(stmt.id, "array index must be an int")
                length = self.c.lengths.get(cur.oid)
                if length is None:
                    raise TypeMismatch(stmt.id, "indexing a non-array object")
                if not 0 <= idx < length:
                    raise IndexOutOfBounds(stmt.id, f"index {idx} out of range [0, {length})")
                loc = (cur.oid, idx)
        return loc

    def _eval(self, e, stmt: Stmt):
        if isinstance(e, Lit):
            return e.value
        if isinstance(e, Access):
            return self._read(self._locate(e, stmt), stmt)
        if isinstance(e, UnOp):
            v = self._eval(e.operand, stmt)
            if e.op == "-":
                return -self._int(v, stmt)
            return not self._truth(v, stmt)
        left = self._eval(e.left, stmt)
        right = self._eval(e.right, stmt)
        op = e.op
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op == "&&":
            return self._truth(left, stmt) and self._truth(right, stmt)
        if op == "||":
            return self._truth(left, stmt) or self._truth(right, stmt)
        a, b = self._int(left, stmt), self._int(right, stmt)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op in ("/", "%"):
            if b == 0:
                raise DivisionByZero(stmt.id, "division by zero")
            return a // b if op == "/" else a % b
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]

    def _int(self, v, stmt: Stmt) -> int:
        if isinstance(v, Ref) or v is None:
            raise TypeMismatch(stmt.id, f"arithmetic on {self._describe(v)}")
        return int(v)

    def _truth(self, v, stmt: Stmt) -> bool:
        if isinstance(v, Ref) or v is None:
            raise TypeMismatch(stmt.id, f"condition on {self._describe(v)}")
        return bool(v)

    def _begin(self) -> None:
        self._reads = set()

    def _end(self) -> set:
        r, self._reads = self._reads, None
        return r

    # -- execution
    def run(self, inputs: Sequence[int] = ()) -> RunResult:
        entry = self.p.methods[self.p.entry]
        result = RunResult(self.c, 0)
        if len(inputs) != len(entry.params):
            raise ValueError(f"{entry.name} expects {len(entry.params)} inputs, got {len(inputs)}")
        try:
            result.return_value = self._call(entry, list(inputs), None, None, None)
        except MiniRuntimeError as exc:
            result.error = exc
        except _Stop:
            pass
        result.steps = self.steps
        return result

    def _call(self, m: lang.MethodDecl, values: list, site: Stmt | None, site_occ, site_ctrl):
        if len(self.frames) >= self.max_depth:
            raise StepLimitExceeded(site.id if site else None, "call depth limit exceeded")
        caller = self.frames[-1].method if self.frames else None
        oid = self._fresh(f"{FRAME_PREFIX}{m.name}>")
        mocc = self.method_occ.get(m.name, 0)
        self.method_occ[m.name] = mocc + 1
        self.c.stack.append(oid)
        self.frames.append(_Frame(oid, m.name, mocc))
        writes = set()
        for p, v in zip(m.params, values):
            self.c.cells[(oid, p)] = v
            writes.add((oid, p))
        stmt_id = site.id if site is not None else m.enter.id
        occ = site_occ if site is not None else 0
        self._act(
            "enterMethod", stmt_id, occ, self._arg_reads, writes, site_ctrl, caller,
            method=m.name, mocc=mocc, params=list(m.params),
            args=[str(t) if t is not None else None for t in (site.arg_terms if site else ())],
        )
        traced = m.name in self.m2s
        if traced:
            self._event("E", m.name, mocc)
        try:
            self._block(m.body)
        except _Return:
            pass
        if traced:
            self._event("X", m.name, mocc)
        rv = self.c.cells.get((oid, RV))
        return rv

    _arg_reads: set = frozenset()

    def _block(self, stmts: list[Stmt]) -> None:
        for s in stmts:
            self._stmt(s)

    def _tick(self, s: Stmt) -> int:
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepLimitExceeded(s.id, f"step limit {self.max_steps} exceeded")
        occ = self.stmt_occ.get(s.id, 0)
        self.stmt_occ[s.id] = occ + 1
        if s.method in self.m2s:
            self._event("S", s.id, occ)
        return occ

    def _stmt(self, s: Stmt) -> None:
        if s.kind == lang.WHILE:
            while True:
                if not self._cond(s):
                    return
                self._block(s.body)
        occ = self._tick(s)
        frame = self.frame
        ctrl = frame.ctrl.get(s.ctrl_parent) if s.ctrl_parent is not None else None
        k = s.kind
        if k == lang.IF:
            self._begin()
            v = self._truth(self._eval(s.cond, s), s)
            reads = self._end()
            self._act("eval", s.id, occ, reads, (), ctrl)
            frame.ctrl[s.id] = len(self.actions) - 1 if self.record else occ
            self._complete(s, occ)
            self._block(s.body if v else s.orelse)
            return
        elif k == lang.ALLOC:
            self._begin()
            length = None
            if s.new_size is not None:
                length = self._int(self._eval(s.new_size, s), s)
                if length < 0:
                    raise IndexOutOfBounds(s.id, "negative array size")
            loc = self._locate(s.lhs, s)
            reads = self._end()
            oid = self._fresh(s.new_class)
            site = self.site_occ.get(s.id, 0)
            self.site_occ[s.id] = site + 1
            self.c.alloc_site[oid] = (s.id, site)
            if length is not None:
                self.c.lengths[oid] = length
                init = default_value(lang.element_type(s.new_class))
                for i in range(length):
                    self.c.cells[(oid, i)] = init
            else:
                for name, ty in self.p.class_of(s.new_class).fields:
                    self.c.cells[(oid, name)] = default_value(ty)
            self._write(loc, Ref(oid), s)
            self._act("alloc", s.id, occ, reads, {loc}, ctrl, lhs=str(s.lhs_term), obj=oid)
        elif k == lang.ASSIGN:
            self._begin()
            v = self._eval(s.rhs, s)
            loc = self._locate(s.lhs, s)
            reads = self._end()
            self._write(loc, v, s)
            self._act("assign", s.id, occ, reads, {loc}, ctrl, lhs=str(s.lhs_term),
                      rhs=str(s.rhs_term) if s.rhs_term else None)
        elif k == lang.RETURN:
            if s.rhs is not None:
                self._begin()
                v = self._eval(s.rhs, s)
                reads = self._end()
                loc = (frame.oid, RV)
                self.c.cells[loc] = v
                self._act("assign", s.id, occ, reads, {loc}, ctrl, lhs=RV,
                          rhs=str(s.rhs_term) if s.rhs_term else None)
            else:
                self._act("eval", s.id, occ, (), (), ctrl)
            self._complete(s, occ)
            raise _Return()
        elif k == lang.INVOKE:
            self._invoke(s, occ, ctrl)
        self._complete(s, occ)

    def _complete(self, s: Stmt, occ: int) -> None:
        if self.on_complete is not None:
            self.on_complete(self, s, occ)

    def _cond(self, s: Stmt) -> bool:
        occ = self._tick(s)
        frame = self.frame
        ctrl = frame.ctrl.get(s.ctrl_parent) if s.ctrl_parent is not None else None
        self._begin()
        v = self._truth(self._eval(s.cond, s), s)
        reads = self._end()
        self._act("eval", s.id, occ, reads, (), ctrl)
        frame.ctrl[s.id] = len(self.actions) - 1 if self.record else occ
        self._complete(s, occ)
        return v

    def _invoke(self, s: Stmt, occ: int, ctrl) -> None:
        callee = self.p.methods[s.callee]
        self._begin()
        values = [self._eval(a, s) for a in s.args]
        self._arg_reads = self._end()
        caller_frame = self.frame
        try:
            rv = self._call(callee, values, s, occ, ctrl)
        finally:
            self._arg_reads = frozenset()
        callee_oid = self.c.stack[-1]
        callee_mocc = self.frames[-1].mocc
        reads = {(callee_oid, RV)}
        self._pop()
        writes = set()
        if s.lhs is not None:
            self._begin()
            loc = self._locate(s.lhs, s)
            reads |= self._end()
            self._write(loc, rv, s)
            writes.add(loc)
        self._act("exitMethod", s.id, occ, reads, writes, ctrl, caller_frame.method,
                  method=callee.name, mocc=callee_mocc,
                  lhs=str(s.lhs_term) if s.lhs is not None else None)

    def _pop(self) -> None:
        oid = self.c.stack.pop()
        self.frames.pop()
        del self.c.objects[oid]
        for loc in [loc for loc in self.c.cells if loc[0] == oid]:
            del self.c.cells[loc]

    # -- helpers for oracles
    def value_of(self, term: lang.Term):
        """Current value denoted by ``term`` in the current frame, or raise."""
        loc: Location = (self._root(term.base_var), term.base_var)
        for f in term.fields:
            cur = self.c.cells.get(loc)
            if not isinstance(cur, Ref):
                return None
            if f == ARRAY_FIELD:
                raise ValueError("array terms have no single value")
            loc = (cur.oid, f)
        return self.c.cells.get(loc)

    def location_of(self, term: lang.Term) -> Location | None:
        loc: Location = (self._root(term.base_var), term.base_var)
        for f in term.fields:
            cur = self.c.cells.get(loc)
            if not isinstance(cur, Ref):
                return None
            loc = (cur.oid, f)
        return loc


def _finish_main(interp: Interpreter, result: RunResult) -> None:
    """Pop the entry frame after a complete run, recording its exit."""
    if interp.frames and result.error is None:
        m = interp.p.methods[interp.p.entry]
        oid = interp.frames[-1].oid
        interp._pop()
        interp._act("exitMethod", m.enter.id, 0, {(oid, RV)}, (), None, None,
                    method=m.name, mocc=0, lhs=None)


def resolve_seed(seed: int | None) -> int | None:
    if seed is not None:
        return seed
    env = os.environ.get("ABSLICE_SEED")
    return int(env) if env else None


def run_traced(
    program: Program,
    m2s: M2SConfig,
    inputs: Sequence[int] = (),
    *,
    emit: Callable[[ControlFlowEvent], None] | None = None,
    seed: int | None = None,
    max_steps: int = 5_000_000,
) -> tuple[list[ControlFlowEvent], RunResult]:
    """Run ``program`` emitting control-flow events for the methods in ``m2s``.

    When ``emit`` is given, events are handed to it and the returned list is
    empty.  On a runtime error the trace up to the failure is still returned.
    """
    events: list[ControlFlowEvent] = []
    interp = Interpreter(program, m2s, emit=emit or events.append, max_steps=max_steps, seed=resolve_seed(seed))
    result = interp.run(inputs)
    if interp.frames and result.error is None:
        interp._pop()
    return events, result


def run_full(
    program: Program,
    inputs: Sequence[int] = (),
    *,
    snapshots: bool = False,
    m2s: M2SConfig | None = None,
    seed: int | None = None,
    max_steps: int = 5_000_000,
    on_complete=None,
) -> FullTrace:
    """Run ``program`` recording every concrete action with object identities."""
    interp = Interpreter(
        program, m2s, record=True, snapshots=snapshots, max_steps=max_steps,
        seed=resolve_seed(seed), on_complete=on_complete,
    )
    result = interp.run(inputs)
    _finish_main(interp, result)
    return FullTrace(interp.actions, result, interp.snaps if snapshots else None)


def step(program: Program, c: ConcreteConfig, s: Stmt, frame_method: str | None = None):
    """Execute one simple statement against a copy of ``c``.

    Only Alloc and Assign are accepted; calls need the whole interpreter.
    Returns ``(new_config, action)``.
    """
    if s.kind not in (lang.ALLOC, lang.ASSIGN, lang.RETURN):
        raise ValueError("step() handles Alloc, Assign and Return statements")
    interp = Interpreter(program, record=True)
    interp.c = c.copy()
    interp.next_oid = max(interp.c.objects, default=0) + 1
    if not interp.c.stack:
        raise MiniRuntimeError(s.id, "empty stack")
    interp.frames = [_Frame(interp.c.stack[-1], frame_method or s.method)]
    try:
        interp._stmt(s)
    except _Return:
        pass
    return interp.c, interp.actions[-1]


def initial_config(program: Program, method: str = "main") -> ConcreteConfig:
    """Configuration with the globals object and one empty activation."""
    interp = Interpreter(program)
    oid = interp._fresh(f"{FRAME_PREFIX}{method}>")
    interp.c.stack.append(oid)
    return interp.c


# --------------------------------------------------------------------------
# trace files and online streaming


def write_trace(events: Iterable[ControlFlowEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(f"{e}\n")


def read_trace(path) -> Iterator[ControlFlowEvent]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#") and not line.startswith("A "):
                yield ControlFlowEvent.parse(line)


def write_full_trace(trace: FullTrace, path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for a in trace.actions:
            payload = {
                "stmt": str(a.stmt),
                "occ": a.occurrence,
                "method": a.method,
                "reads": sorted([list(map(_jsonable, loc)) for loc in a.reads]),
                "writes": sorted([list(map(_jsonable, loc)) for loc in a.writes]),
                "ctrl": a.ctrl,
                **{k: v for k, v in a.payload.items()},
            }
            fh.write(f"A {a.kind} {json.dumps(payload, sort_keys=True)}\n")


def _jsonable(x):
    return x if isinstance(x, (int, str)) else str(x)


_DONE = object()


def stream_online(program: Program, m2s: M2SConfig, inputs=(), maxsize: int = 4096, seed=None):
    """Run the interpreter in a producer thread; yield events as they arrive.

    Returns ``(iterator, holder)`` where ``holder["result"]`` is filled with
    the :class:`RunResult` once the producer finishes.
    """
    q: queue.Queue = queue.Queue(maxsize=maxsize)
    holder: dict = {}

    def produce():
        try:
            _, holder["result"] = run_traced(program, m2s, inputs, emit=q.put, seed=seed)
        except BaseException as exc:  # surfaced to the consumer
            holder["exception"] = exc
        finally:
            q.put(_DONE)

    t = threading.Thread(target=produce, daemon=True)
    t.start()

    def consume():
        while True:
            item = q.get()
            if item is _DONE:
                break
            yield item
        t.join()
        if "exception" in holder:
            raise holder["exception"]

    return consume(), holder
