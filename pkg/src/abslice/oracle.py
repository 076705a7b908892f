"""Ground truth for the abstract slicer.

* :func:`concrete_slice` is a classic dynamic slicer over the full action
  trace, tracking the exact last writer of every concrete memory cell.
* :func:`check_abstraction` searches for a denotation function showing that
  an abstract model soundly describes a concrete configuration.
* :func:`compare` runs a focused and an extended instrumentation side by
  side and reports precision loss and analysis speedup.
* :func:`deletion_check` re-executes the program with statements removed, an
  independent check on :func:`concrete_slice`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from . import lang, runtime, slicer, stream
from .ddg import LAST, SliceCriterion
from .errors import AbsliceError, CriterionNotExecuted, MiniRuntimeError, SearchBudgetExceeded
from .lang import ARRAY_FIELD, WILDCARD, Program, StmtId
from .memmodel import ENV, GLOBALS, HEAP, REGION, AnalysisModel
from .runtime import FRAME_PREFIX, GLOBALS_CLASS, ConcreteConfig, M2SConfig

# --------------------------------------------------------------------------
# concrete slicing


@dataclass
class ConcreteSliceResult:
    statements: set[StmtId]
    actions: set[int]
    trace: runtime.FullTrace

    @property
    def lines(self) -> set[int]:
        return {s.line for s in self.statements}


def _criterion_hook(criterion: SliceCriterion, hits: list):
    def hook(interp: runtime.Interpreter, s: lang.Stmt, occ: int) -> None:
        if criterion.matches(s.id, occ):
            loc = interp.location_of(criterion.variable) if criterion.variable is not None else None
            hits.append((occ, len(interp.actions), loc))

    return hook


def concrete_slice(program: Program, criterion: SliceCriterion, inputs: Sequence[int] = (),
                   *, max_steps: int = 5_000_000) -> ConcreteSliceResult:
    """Exact dynamic slice from one fully recorded run."""
    hits: list = []
    trace = runtime.run_full(program, inputs, on_complete=_criterion_hook(criterion, hits), max_steps=max_steps)
    return slice_trace(trace, criterion, hits)


def slice_trace(trace: runtime.FullTrace, criterion: SliceCriterion, hits: list) -> ConcreteSliceResult:
    if not hits:
        raise CriterionNotExecuted(f"criterion {criterion} was not executed")
    chosen = [hits[-1]] if criterion.occurrence == LAST else hits
    cut_at = {h[1]: h for h in chosen}
    actions = trace.actions
    last_writer: dict = {}
    deps: list[set[int]] = []
    roots: set[int] = set()
    for i in range(len(actions) + 1):
        if i in cut_at:
            occ, _, loc = cut_at[i]
            own = [a.index for a in actions[:i] if a.stmt == criterion.stmt and a.occurrence == occ]
            if criterion.variable is not None:
                roots.add(own[-1])
                if loc is not None and loc in last_writer:
                    roots.add(last_writer[loc])
            else:
                roots |= set(own)
        if i == len(actions):
            break
        a = actions[i]
        d = {last_writer[loc] for loc in a.reads if loc in last_writer}
        if a.ctrl is not None:
            d.add(a.ctrl)
        deps.append(d)
        for loc in a.writes:
            last_writer[loc] = i
    seen: set[int] = set()
    work = list(roots)
    while work:
        i = work.pop()
        if i in seen:
            continue
        seen.add(i)
        work.extend(deps[i])
    return ConcreteSliceResult({actions[i].stmt for i in seen}, seen, trace)


def m2s_statements(program: Program, m2s) -> set[StmtId]:
    names = m2s.instrumented if isinstance(m2s, M2SConfig) else set(m2s)
    return {sid for sid in program.stmts if sid.method in names}


def m2s_lines(program: Program, m2s) -> set[int]:
    return {sid.line for sid in m2s_statements(program, m2s)}


# --------------------------------------------------------------------------
# denotation search


@dataclass
class DenotationWitness:
    delta: dict[int, frozenset[int]]
    assignment: dict[int, int] = field(default_factory=dict)  # concrete object -> class representative

    def __getitem__(self, abstract_id: int) -> frozenset[int]:
        return self.delta[abstract_id]


def project_stack(c: ConcreteConfig, m2s: frozenset[str] | None) -> list[int]:
    """Concrete frames the abstract stack is expected to mirror.

    With full instrumentation that is the whole stack.  Otherwise a frame is
    kept when its method is traced, when it is the bottom frame, or when it
    was called from a traced frame (an untraced call made by traced code).
    """
    if m2s is None:
        return list(c.stack)
    out = []
    for i, oid in enumerate(c.stack):
        m = c.frame_method(oid)
        caller = c.frame_method(c.stack[i - 1]) if i > 0 else None
        if i == 0 or m in m2s or caller in m2s:
            out.append(oid)
    return out


def _field_label(f) -> str:
    return ARRAY_FIELD if isinstance(f, int) else f


def _compatible(m: AnalysisModel, aid: int, c: ConcreteConfig, oid: int, types: bool) -> bool:
    ao = m.objects[aid]
    cls = c.objects[oid]
    if ao.kind == GLOBALS:
        return cls == GLOBALS_CLASS
    if ao.kind == ENV:
        return cls.startswith(FRAME_PREFIX)
    if not ao.singleton:
        return True
    if cls == GLOBALS_CLASS or cls.startswith(FRAME_PREFIX):
        return False
    return not types or ao.type_hint is None or ao.type_hint == cls


def _class_edges(m: AnalysisModel) -> dict[int, dict[str, set[int]]]:
    out: dict[int, dict[str, set[int]]] = {}
    for s, f, t in m.edge_list():
        out.setdefault(m.find(s), {}).setdefault(f, set()).add(m.find(t))
    return out


def _saturating(objs: list[int], singles: list[int], ok) -> dict[int, int] | None:
    """Give every object its own compatible singleton (augmenting paths)."""
    owner: dict[int, int] = {}  # singleton -> object

    def augment(o, seen):
        for s in singles:
            if s in seen or not ok(s, o):
                continue
            seen.add(s)
            if s not in owner or augment(owner[s], seen):
                owner[s] = o
                return True
        return False

    for o in objs:
        if not augment(o, set()):
            return None
    return owner


def _class_denotation(m, c, members: set[int], objs: list[int], pinned: dict[int, int], types: bool):
    """δ restricted to one λ-class, or None if conditions 1/3 cannot hold."""
    singles = sorted(a for a in members if m.objects[a].singleton)
    regions = sorted(a for a in members if not m.objects[a].singleton)
    delta: dict[int, frozenset[int]] = {}
    free = [s for s in singles if s not in pinned]
    for s, o in pinned.items():
        if s in members:
            delta[s] = frozenset({o})
    ok = lambda s, o: _compatible(m, s, c, o, types)  # noqa: E731
    if regions:
        for s in free:
            cand = [o for o in objs if ok(s, o)]
            if not cand:
                return None
            delta[s] = frozenset({cand[0]})
        covered = set().union(*delta.values()) if delta else set()
        rest = frozenset(o for o in objs if o not in covered)
        for r in regions:
            delta[r] = frozenset(objs) if not types else frozenset(o for o in objs if ok(r, o))
        if rest and not any(rest <= delta[r] for r in regions):
            return None
        return delta
    # no region: singletons alone must cover every object
    taken = {o for s, o in pinned.items() if s in members}
    uncovered = [o for o in objs if o not in taken]
    owner = _saturating(uncovered, free, ok)
    if owner is None:
        return None
    for s in free:
        if s in owner:
            delta[s] = frozenset({owner[s]})
        else:
            cand = [o for o in objs if ok(s, o)]
            if not cand:
                return None
            delta[s] = frozenset({cand[0]})
    return delta


def check_abstraction(m: AnalysisModel, c: ConcreteConfig, *, m2s: frozenset[str] | None = None,
                      types: bool = True, budget: int = 200_000,
                      max_objects: int | None = None) -> DenotationWitness | None:
    """Find δ with ``abs(m, c, δ)`` or return ``None`` when none exists.

    The search assigns every concrete object to one λ-class (conditions 2
    and 3 force a unique class per object), propagates field navigation
    (condition 4) from the pinned stack and globals objects, then solves the
    per-class singleton matching (condition 1).
    """
    if max_objects is not None and len(c.objects) > max_objects:
        raise SearchBudgetExceeded(f"{len(c.objects)} concrete objects exceed the limit of {max_objects}")
    conc = sorted(c.objects)
    if not m.objects:
        return DenotationWitness({}) if not conc else None

    frames = project_stack(c, m2s)
    if len(frames) != len(m.stack):
        return None
    pinned: dict[int, int] = dict(zip(m.stack, frames))  # abstract -> concrete
    if m.globals_id is not None and runtime.GLOBALS_ID in c.objects:
        pinned[m.globals_id] = runtime.GLOBALS_ID
    for a, o in pinned.items():
        if not _compatible(m, a, c, o, types):
            return None
    pin_class: dict[int, int] = {}
    for a, o in pinned.items():
        k = m.find(a)
        if pin_class.setdefault(o, k) != k:
            return None
    pinned_by_obj: dict[int, set[int]] = {}
    for a, o in pinned.items():
        pinned_by_obj.setdefault(o, set()).add(a)

    classes = {m.find(a): set(mem) for a, mem in ((a, m.members[m.find(a)]) for a in m.objects)}
    cedges = _class_edges(m)
    out_edges: dict[int, list[tuple[str, int]]] = {o: [] for o in conc}
    for (o, f), v in c.cells.items():
        if isinstance(v, runtime.Ref) and o in out_edges:
            out_edges[o].append((_field_label(f), v.oid))
    pinned_abs_objs = set(pinned_by_obj)

    def base_domain(o: int) -> set[int]:
        if o in pin_class:
            return {pin_class[o]}
        dom = set()
        for k, mem in classes.items():
            if any(_compatible(m, a, c, o, types) and a not in pinned for a in mem):
                dom.add(k)
        return dom

    domains = {o: base_domain(o) for o in conc}
    # order: breadth-first from pinned objects so successors get narrowed early
    order: list[int] = []
    seen = set()
    queue = [o for o in conc if o in pinned_abs_objs]
    while queue:
        o = queue.pop(0)
        if o in seen:
            continue
        seen.add(o)
        order.append(o)
        queue.extend(t for _, t in sorted(out_edges[o]))
    order += [o for o in conc if o not in seen]

    steps = 0
    assign: dict[int, int] = {}

    def allowed_from(k: int, f: str) -> set[int]:
        out = cedges.get(k, {})
        return out.get(f, set()) | out.get(WILDCARD, set())

    def consistent(o: int, k: int) -> bool:
        for f, t in out_edges[o]:
            if t in assign and assign[t] not in allowed_from(k, f):
                return False
        return True

    incoming: dict[int, list[tuple[int, str]]] = {o: [] for o in conc}
    for o in conc:
        for f, t in out_edges[o]:
            incoming[t].append((o, f))

    def candidates(o: int) -> list[int]:
        dom = set(domains[o])
        for src, f in incoming[o]:
            if src in assign:
                dom &= allowed_from(assign[src], f)
        return sorted(dom)

    def finish() -> DenotationWitness | None:
        delta: dict[int, frozenset[int]] = {}
        by_class: dict[int, list[int]] = {}
        for o, k in assign.items():
            by_class.setdefault(k, []).append(o)
        for k, mem in classes.items():
            objs = sorted(by_class.get(k, []))
            local_pins = {a: o for a, o in pinned.items() if a in mem}
            part = _class_denotation(m, c, mem, objs, local_pins, types)
            if part is None:
                return None
            delta.update(part)
        for a in m.objects:
            delta.setdefault(a, frozenset())
        return DenotationWitness(delta, dict(assign))

    def search(i: int) -> DenotationWitness | None:
        nonlocal steps
        steps += 1
        if steps > budget:
            raise SearchBudgetExceeded(f"denotation search exceeded {budget} steps")
        if i == len(order):
            return finish()
        o = order[i]
        for k in candidates(o):
            if not consistent(o, k):
                continue
            assign[o] = k
            found = search(i + 1)
            if found is not None:
                return found
            del assign[o]
        return None

    w = search(0)
    if w is not None and not verify_witness(m, c, w.delta, m2s=m2s, types=types):
        raise AssertionError("internal error: search produced an invalid witness")
    return w


def verify_witness(m: AnalysisModel, c: ConcreteConfig, delta: dict[int, frozenset[int]], *,
                   m2s: frozenset[str] | None = None, types: bool = True) -> bool:
    """Check conditions (1)-(5) literally for a given δ."""
    A = list(m.objects)
    # (1) singletons denote exactly one object
    if any(m.objects[a].singleton and len(delta.get(a, ())) != 1 for a in A):
        return False
    # (2) overlapping denotations only within a λ-class
    for i, a in enumerate(A):
        for b in A[i + 1:]:
            if delta.get(a, frozenset()) & delta.get(b, frozenset()) and not m.lam(a, b):
                return False
    # (3) totality
    covered = set().union(*delta.values()) if delta else set()
    if any(o not in covered for o in c.objects):
        return False
    # (4) field navigation, possibly through "?" and λ
    class_den: dict[int, set[int]] = {}
    for a in A:
        class_den.setdefault(m.find(a), set()).update(delta.get(a, ()))
    cedges = _class_edges(m)
    for a in A:
        k = m.find(a)
        for o in delta.get(a, ()):
            for (src, f), v in c.cells.items():
                if src != o or not isinstance(v, runtime.Ref):
                    continue
                lab = _field_label(f)
                targets = cedges.get(k, {}).get(lab, set()) | cedges.get(k, {}).get(WILDCARD, set())
                if not any(v.oid in class_den.get(t, ()) for t in targets):
                    return False
    # (5) stack correspondence
    frames = project_stack(c, m2s)
    if len(frames) != len(m.stack):
        return False
    if any(delta.get(a) != frozenset({o}) for a, o in zip(m.stack, frames)):
        return False
    # type compatibility (only with type filtering)
    for a in A:
        for o in delta.get(a, ()):
            if not _compatible(m, a, c, o, types):
                return False
    return True


# --------------------------------------------------------------------------
# replay with per-step abstraction checks


@dataclass
class ReplayCheck:
    steps: int
    witnesses: int
    failures: list[tuple[int, str]]
    inconclusive: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


def _action_keys(a: runtime.ConcreteAction) -> list[tuple]:
    if a.kind == "enterMethod":
        keys = [("enter", a.method, a.payload.get("mocc"))]
        if a.caller is not None:
            keys.append(("enter-site", a.stmt, a.occurrence))
        return keys
    if a.kind == "exitMethod":
        keys = [("exit", a.method, a.payload.get("mocc"))]
        if a.caller is not None:
            keys.append(("exit-site", a.stmt, a.occurrence))
        return keys
    return [("stmt", a.stmt, a.occurrence)]


def replay_snapshots(program: Program, m2s, inputs=(), *, types: bool = True, mutate=None,
                     budget: int = 200_000):
    """Yield ``(step, label, model_copy, concrete_config)`` after every model operation.

    ``mutate`` (step, model) may corrupt the model copy before it is yielded.
    """
    if not isinstance(m2s, M2SConfig):
        m2s = M2SConfig.of(program, m2s)
    full = runtime.run_full(program, inputs, snapshots=True)
    non_eval = [a for a in full.actions if a.kind != "eval"]
    by_key: dict[tuple, ConcreteConfig] = {}
    for a, snap in zip(non_eval, full.snapshots):
        for k in _action_keys(a):
            by_key[k] = snap
    events, _ = runtime.run_traced(program, m2s, inputs)
    out = []

    def on_step(sl, label, key):
        model = sl.model.snapshot()
        if mutate is not None:
            mutate(len(out), model)
        out.append((len(out), label, model, by_key.get(key), key))

    slicer.analyze(stream.open_stream(events, program), program, None, type_filter=types, on_step=on_step)
    return out, m2s


def check_replay(program: Program, m2s="*", inputs=(), *, types: bool = True, budget: int = 200_000,
                 mutate=None) -> ReplayCheck:
    steps, cfg = replay_snapshots(program, m2s, inputs, types=types, mutate=mutate)
    full = cfg.instrumented == frozenset(program.methods)
    failures = []
    found = inconclusive = 0
    for step, label, model, conc, key in steps:
        if conc is None:
            failures.append((step, f"{label}: no concrete counterpart for {key}"))
            continue
        try:
            w = check_abstraction(model, conc, m2s=None if full else cfg.instrumented, types=types, budget=budget)
        except SearchBudgetExceeded:
            inconclusive += 1
            continue
        if w is None:
            failures.append((step, label))
        else:
            found += 1
    return ReplayCheck(len(steps), found, failures, inconclusive)


# --------------------------------------------------------------------------
# corrupted models must be rejected


def _field_edges(m: AnalysisModel):
    for o, fields in m.edges.items():
        for f, ts in fields.items():
            if f != WILDCARD and ts and m.objects[o].kind != REGION:
                yield o, f, ts


def _mut_drop_edge(m: AnalysisModel):
    for o, f, ts in _field_edges(m):
        if m.objects[o].kind == ENV and WILDCARD in m.edges[o]:
            continue
        if all(m.objects[t].kind == HEAP for t in ts):
            del m.edges[o][f]
            return f"drop {o}.{f}"
    return None


def _mut_retarget_edge(m: AnalysisModel):
    heap = [oid for oid, a in m.objects.items() if a.kind == HEAP and a.singleton]
    for o, f, ts in _field_edges(m):
        if len(ts) != 1:
            continue
        (t,) = ts
        for t2 in heap:
            if not m.lam(t, t2) and m.objects[t2].type_hint == m.objects[t].type_hint:
                m.edges[o][f] = {t2}
                return f"retarget {o}.{f} to {t2}"
    return None


def _mut_stack_mismatch(m: AnalysisModel):
    if len(m.stack) < 2:
        return None
    m.stack[-1], m.stack[-2] = m.stack[-2], m.stack[-1]
    return "swap the two top frames"


def _mut_delete_object(m: AnalysisModel):
    for o, f, ts in _field_edges(m):
        for t in ts:
            if m.objects[t].kind == HEAP and m.objects[t].singleton and m.members[m.find(t)] == {t}:
                for fields in m.edges.values():
                    for ts2 in fields.values():
                        ts2.discard(t)
                del m.objects[t], m.edges[t], m.members[t], m.parent[t]
                return f"delete {t}"
    return None


def _mut_split_class(m: AnalysisModel):
    for rep, mem in m.members.items():
        if len(mem) < 2:
            continue
        # split off an object other than the root so the union-find stays valid
        victim = min((x for x in mem if x != rep), key=lambda x: (m.objects[x].kind != HEAP, x))
        mem.discard(victim)
        for x in mem:
            m.parent[x] = rep
        m.parent[victim] = victim
        m.members[victim] = {victim}
        return f"split {victim} from {rep}"
    return None


def _mut_region_singleton(m: AnalysisModel):
    for oid, a in m.objects.items():
        if a.kind == REGION:
            a.singleton = True
            return f"mark region {oid} singleton"
    return None


MUTATIONS = {
    "drop-edge": _mut_drop_edge,
    "retarget-edge": _mut_retarget_edge,
    "stack-mismatch": _mut_stack_mismatch,
    "delete-object": _mut_delete_object,
    "split-lambda": _mut_split_class,
    "region-singleton": _mut_region_singleton,
}


@dataclass
class MutationResult:
    mutation: str
    applied: str | None
    step: int | None
    label: str | None
    rejected: bool


def mutation_check(program: Program, mutation: str, m2s="*", inputs=(), *, after: int = -1,
                   at_label: str | None = None, types: bool = True, budget: int = 200_000) -> MutationResult:
    """Corrupt the model at the first applicable step from ``after`` on (-1: the
    last applicable step) and report whether the denotation search rejects it.

    ``at_label`` picks the first step whose observable label starts with it.
    """
    fn = MUTATIONS[mutation]
    steps, cfg = replay_snapshots(program, m2s, inputs, types=types)
    full = cfg.instrumented == frozenset(program.methods)
    if at_label is not None:
        after = next(i for i, st in enumerate(steps) if st[1].startswith(at_label))
    order = range(len(steps) - 1, -1, -1) if after < 0 else range(after, len(steps))
    for i in order:
        step, label, model, conc, _ = steps[i]
        if conc is None:
            continue
        what = fn(model)
        if what is None:
            continue
        w = check_abstraction(model, conc, m2s=None if full else cfg.instrumented, types=types, budget=budget)
        return MutationResult(mutation, what, step, label, w is None)
    return MutationResult(mutation, None, None, None, False)

# --------------------------------------------------------------------------
# focused vs extended comparison


@dataclass
class ComparisonReport:
    program: str
    input: tuple
    m2s_focused: list[str]
    m2s_extended: list[str]
    criterion: str
    slice_focused: set[int]
    slice_extended: set[int]
    slice_concrete: set[int]
    precision_loss: float
    speedup: float
    soundness_ok: bool
    time_focused: float = 0.0
    time_extended: float = 0.0
    events_focused: int = 0
    events_extended: int = 0
    executed_statements: int = 0

    def row(self) -> str:
        return (f"{self.criterion:<18} {self.executed_statements:>8} {len(self.slice_focused):>5} "
                f"{self.time_focused * 1000:>9.2f} {self.speedup:>8.2f} {self.precision_loss * 100:>9.1f}")

    @staticmethod
    def header() -> str:
        return f"{'Criteria':<18} {'ES':>8} {'SS':>5} {'t(ms)':>9} {'Speedup':>8} {'Prec.loss%':>9}"

    def to_dict(self) -> dict:
        return {
            "program": self.program, "input": list(self.input), "criterion": self.criterion,
            "m2s_focused": self.m2s_focused, "m2s_extended": self.m2s_extended,
            "slice_focused": sorted(self.slice_focused), "slice_extended": sorted(self.slice_extended),
            "slice_concrete": sorted(self.slice_concrete), "precision_loss": self.precision_loss,
            "speedup": self.speedup, "soundness_ok": self.soundness_ok,
            "time_focused": self.time_focused, "time_extended": self.time_extended,
            "events_focused": self.events_focused, "events_extended": self.events_extended,
            "executed_statements": self.executed_statements,
        }


def precision_loss(focused: set, extended: set, comparable: set) -> float:
    denom = len(extended & comparable)
    if denom == 0:
        return 0.0 if not (focused & comparable) else float("inf")
    return len(focused & comparable) / denom - 1


def _timed_analysis(program, events, criterion, repeats: int):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = slicer.analyze(stream.open_stream(events, program), program, criterion)
        best = min(best, time.perf_counter() - t0)
    return result, best


def compare(program: Program, inputs, criterion, m2s_focused, m2s_extended="*", *,
            name: str = "", repeats: int = 3) -> ComparisonReport:
    """Slice with two instrumentations and measure analysis time (min of repeats)."""
    if isinstance(criterion, str):
        criterion = SliceCriterion.parse(criterion, program)
    foc = M2SConfig.of(program, m2s_focused)
    ext = M2SConfig.of(program, m2s_extended)
    if not foc.instrumented <= ext.instrumented:
        raise ValueError("focused M2S must be a subset of the extended M2S")
    ev_f, _ = runtime.run_traced(program, foc, inputs)
    ev_e, _ = runtime.run_traced(program, ext, inputs)
    rf, tf = _timed_analysis(program, ev_f, criterion, repeats)
    re_, te = _timed_analysis(program, ev_e, criterion, repeats)
    sf, se = rf.slice(), re_.slice()
    conc = concrete_slice(program, criterion, inputs)
    ok = (sf >= conc.statements & m2s_statements(program, foc)) and (se >= conc.statements & m2s_statements(program, ext))
    lf, le = {s.line for s in sf}, {s.line for s in se}
    loss = precision_loss(lf, le, m2s_lines(program, foc))
    executed = sum(1 for a in conc.trace.actions if a.kind != "enterMethod" or a.caller is None)
    return ComparisonReport(
        name, tuple(inputs), sorted(foc.instrumented), sorted(ext.instrumented), str(criterion),
        lf, le, conc.lines, loss, te / tf if tf > 0 else float("inf"), ok, tf, te,
        len(ev_f), len(ev_e), executed,
    )


# --------------------------------------------------------------------------
# re-execution with deleted statements


@dataclass
class DeletionReport:
    checked: list[int]
    skipped: list[int]
    changed: list[int]
    explained: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.changed


def canonical(value, c: ConcreteConfig):
    if isinstance(value, runtime.Ref):
        site = c.alloc_site.get(value.oid)
        return ("ref", str(site[0]), site[1]) if site else ("ref", "?", value.oid)
    return ("val", value)


def criterion_value(program: Program, criterion: SliceCriterion, inputs=(), max_steps: int = 200_000):
    """Canonical value of the criterion variable at its (last) occurrence."""
    seen: list = []

    def hook(interp, s, occ):
        if criterion.matches(s.id, occ):
            seen.append((occ, canonical(interp.value_of(criterion.variable), interp.c)))

    interp = runtime.Interpreter(program, on_complete=hook, max_steps=max_steps)
    res = interp.run(inputs)
    if res.error is not None:
        raise res.error
    if not seen:
        raise CriterionNotExecuted(str(criterion))
    return seen[-1] if criterion.occurrence == LAST else [v for v in seen if v[0] == criterion.occurrence][0]


def deletion_check(program: Program, criterion: SliceCriterion, inputs=(), slice_lines: set[int] | None = None,
                   max_statements: int = 30) -> DeletionReport:
    """Delete each simple statement outside the slice; the criterion value must not move."""
    if criterion.variable is None:
        raise ValueError("deletion check needs a criterion variable")
    if slice_lines is None:
        slice_lines = concrete_slice(program, criterion, inputs).lines
    simple = [s for s in program.stmts.values() if s.kind in (lang.ALLOC, lang.ASSIGN, lang.INVOKE)]
    if len(program.stmts) > max_statements + len(program.methods):
        raise ValueError("program too large for the deletion check")
    base = criterion_value(program, criterion, inputs)
    src = program.source.splitlines()
    per_line: dict[int, int] = {}
    for s in program.stmts.values():
        if s.kind != lang.ENTER:
            per_line[s.line] = per_line.get(s.line, 0) + 1
    reaches_slice = _methods_reaching(program, slice_lines)
    checked, skipped, changed, explained = [], [], [], []
    for s in sorted(simple, key=lambda s: s.line):
        line = s.line
        if line in slice_lines:
            continue
        text = src[line - 1]
        if per_line[line] != 1 or "{" in text or "}" in text:
            skipped.append(line)
            continue
        if s.kind == lang.INVOKE and s.callee in reaches_slice:
            # deleting the call would delete executions of slice statements
            skipped.append(line)
            continue
        mutated = "\n".join(src[: line - 1] + [""] + src[line:])
        try:
            p2 = lang.parse(mutated, program.entry)
            crit2 = SliceCriterion(criterion.stmt, criterion.occurrence, criterion.variable)
            if crit2.stmt not in p2.stmts:
                skipped.append(line)
                continue
            v = criterion_value(p2, crit2, inputs)
        except (AbsliceError, MiniRuntimeError, IndexError):
            skipped.append(line)
            continue
        checked.append(line)
        if v != base:
            # a deleted kill lets another definition through; that new flow
            # shows up as lines outside the original slice
            new = concrete_slice(p2, crit2, inputs).lines
            (explained if new - slice_lines else changed).append(line)
    return DeletionReport(checked, skipped, changed, explained)


def _methods_reaching(program: Program, lines: set[int]) -> set[str]:
    """Methods whose execution may run a statement on one of ``lines``."""
    calls = {m: {s.callee for s in md.walk() if s.kind == lang.INVOKE} for m, md in program.methods.items()}
    hit = {m for m, md in program.methods.items() if any(s.line in lines for s in md.walk())}
    changed = True
    while changed:
        changed = False
        for m, callees in calls.items():
            if m not in hit and callees & hit:
                hit.add(m)
                changed = True
    return hit
