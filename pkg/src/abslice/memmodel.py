"""Abstract memory model: singleton and region objects, a lambda partition
kept in a disjoint-set forest, "?"-labelled wildcard edges and per-object
last-definition maps.

Operations mutate the model in place and return it so calls can be chained.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ArityMismatch, EmptyStack, NoEnvironment, ProtocolError, UnresolvedBase
from .lang import ARRAY_FIELD, RV, WILDCARD, Term

UPDATED_HEAP = "UpdatedHeap"

ENV, GLOBALS, HEAP, REGION = "env", "globals", "heap", "region"


@dataclass
class AbstractObject:
    id: int
    singleton: bool
    kind: str
    type_hint: str | None = None
    label: str = ""
    last_def: dict[str, set[int]] = field(default_factory=dict)

    @property
    def is_singleton(self) -> bool:
        return self.singleton

    def __repr__(self) -> str:
        tag = "s" if self.singleton else "r"
        return f"<{self.kind}:{self.id}{tag} {self.label}>"


@dataclass(frozen=True)
class GetResult:
    objects: frozenset[int]
    resolved_singleton: bool

    def __iter__(self):
        return iter(self.objects)

    def __len__(self):
        return len(self.objects)


class AnalysisModel:
    """The model ⟨Ô, Ô_s, λ, Ê, σ̂⟩ plus last-definition bookkeeping."""

    def __init__(self, field_types: dict[str, set[str]] | None = None,
                 static_types: dict[str, str] | None = None, type_filter: bool = True):
        self.objects: dict[int, AbstractObject] = {}
        self.edges: dict[int, dict[str, set[int]]] = {}
        self.parent: dict[int, int] = {}
        self.members: dict[int, set[int]] = {}
        self.stack: list[int] = []
        self.globals_id: int | None = None
        self.field_types = field_types or {}
        self.static_types = static_types or {}
        self.type_filter = type_filter
        self._next = 0
        self.strong_updates = 0

    # -- construction helpers
    def _new(self, singleton: bool, kind: str, type_hint=None, label="") -> AbstractObject:
        o = AbstractObject(self._next, singleton, kind, type_hint, label)
        self._next += 1
        self.objects[o.id] = o
        self.edges[o.id] = {}
        self.parent[o.id] = o.id
        self.members[o.id] = {o.id}
        return o

    def _ensure_globals(self) -> int:
        if self.globals_id is None:
            self.globals_id = self._new(True, GLOBALS, label="Globals").id
        return self.globals_id

    def _remove(self, oid: int) -> None:
        rep = self.find(oid)
        if self.members[rep] != {oid}:
            return  # still tied into a lambda class; keep it
        del self.members[rep]
        del self.parent[oid]
        del self.objects[oid]
        del self.edges[oid]

    # -- lambda partition
    def find(self, oid: int) -> int:
        root = oid
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[oid] != root:
            self.parent[oid], oid = root, self.parent[oid]
        return root

    def merge(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if len(self.members[ra]) < len(self.members[rb]):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.members[ra] |= self.members.pop(rb)

    def lam(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def closure(self, objs: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for o in objs:
            out |= self.members[self.find(o)]
        return out

    def classes(self) -> list[frozenset[int]]:
        return [frozenset(m) for m in self.members.values()]

    # -- queries
    @property
    def top(self) -> int:
        if not self.stack:
            raise NoEnvironment("the model has no environment yet")
        return self.stack[-1]

    def _step(self, frontier: set[int], fld: str, static: bool = False) -> set[int]:
        nxt: set[int] = set()
        for o in frontier:
            out = self.edges[o]
            nxt |= out.get(fld, set())
            nxt |= out.get(WILDCARD, set())
        nxt = self.closure(nxt)
        if self.type_filter and fld != ARRAY_FIELD:
            allowed = {self.static_types[fld]} if static and fld in self.static_types else (
                None if static else self.field_types.get(fld))
            if allowed is not None:
                nxt = {o for o in nxt if self.objects[o].type_hint is None or self.objects[o].type_hint in allowed}
        return nxt

    def _walk(self, root: set[int], fields: Iterable[str], static: bool) -> set[int]:
        frontier = self.closure(root)
        for i, f in enumerate(fields):
            frontier = self._step(frontier, f, static=static and i == 0)
            if not frontier:
                break
        return frontier

    def _result(self, objs: set[int]) -> GetResult:
        single = len(objs) == 1 and self.objects[next(iter(objs))].singleton
        return GetResult(frozenset(objs), single)

    def get(self, t: Term | None, env: int | None = None) -> GetResult:
        """Objects reachable along ``t`` from the current environment.

        ``None`` stands for the empty term and yields the current environment.
        ``env`` evaluates the term in another activation instead.
        """
        top = self.top if env is None else env
        if t is None:
            return self._result(self.closure({top}))
        if t.is_static:
            root = {self._ensure_globals()}
        else:
            root = {top}
        return self._result(self._walk(root, (t.base_var,) + tuple(t.fields), t.is_static))

    def _base(self, t: Term, env: int | None = None) -> tuple[GetResult, str]:
        """Objects holding the cell ``t`` names, and the field of that cell."""
        if not t.fields:
            if t.is_static:
                return self._result(self.closure({self._ensure_globals()})), t.base_var
            return self.get(None, env), t.base_var
        return self.get(t.base(), env), t.last()

    def defs(self, t: Term, env: int | None = None) -> set[int]:
        """Possible last-definition nodes of the cell named by ``t``."""
        base, f = self._base(t, env)
        out: set[int] = set()
        for o in base.objects:
            ld = self.objects[o].last_def
            out |= ld.get(f, set())
            out |= ld.get(WILDCARD, set())
        return out

    def reach_closure(self, objs: Iterable[int]) -> set[int]:
        seen = self.closure(objs)
        work = list(seen)
        while work:
            o = work.pop()
            for targets in self.edges[o].values():
                for t in self.closure(targets):
                    if t not in seen:
                        seen.add(t)
                        work.append(t)
        return seen

    def reach_defs(self, objs: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for o in self.reach_closure(objs):
            for nodes in self.objects[o].last_def.values():
                out |= nodes
        return out

    def updated_heap(self, env: int | None = None) -> int | None:
        env = self.top if env is None else env
        targets = self.edges[env].get(UPDATED_HEAP)
        return next(iter(targets)) if targets else None

    def is_external_env(self, env: int | None = None) -> bool:
        return self.updated_heap(env) is not None

    # -- updates
    def _update(self, t: Term, targets: set[int], n: int | Iterable[int]) -> None:
        base, f = self._base(t)
        if not base.objects:
            raise UnresolvedBase(f"base of {t} does not resolve")
        nodes = {n} if isinstance(n, int) else set(n)
        strong = base.resolved_singleton and f != ARRAY_FIELD
        for b in base.objects:
            out = self.edges[b]
            ld = self.objects[b].last_def
            if strong:
                out[f] = set(targets)
                ld[f] = set(nodes)
            else:
                out.setdefault(f, set()).update(targets)
                ld.setdefault(f, set()).update(nodes)
            if not out.get(f):
                out.pop(f, None)
        if strong:
            self.strong_updates += 1

    def alloc(self, t: Term, n: int, type_hint: str | None = None) -> "AnalysisModel":
        base, _ = self._base(t)
        if not base.objects:
            raise UnresolvedBase(f"base of {t} does not resolve")
        o = self._new(True, HEAP, type_hint, label=f"{type_hint or '?'}@{n}")
        self._update(t, {o.id}, n)
        return self

    def assign(self, lhs: Term, rhs: Term | None, n: int) -> "AnalysisModel":
        targets = set(self.get(rhs).objects) if rhs is not None else set()
        self._update(lhs, targets, n)
        return self

    def _push(self, method: str, external: bool = False) -> AbstractObject:
        self._ensure_globals()
        env = self._new(True, ENV, label=("+-" if external else "") + method)
        self.stack.append(env.id)
        return env

    def enter_pp(self, method: str, params, args, n: int) -> "AnalysisModel":
        params, args = list(params), list(args)
        if len(params) != len(args):
            raise ArityMismatch(f"{method}: {len(params)} params, {len(args)} args")
        targets = [set(self.get(a).objects) if a is not None and self.stack else set() for a in args]
        env = self._push(method)
        for p, tg in zip(params, targets):
            if tg:
                self.edges[env.id][p] = tg
            env.last_def[p] = {n}
        return self

    def _pop(self) -> int:
        if not self.stack:
            raise EmptyStack("pop on an empty abstract stack")
        env = self.stack.pop()
        return env

    def exit_pp(self, method: str, lhs: Term | None, n: int) -> "AnalysisModel":
        if not self.stack:
            raise EmptyStack(f"exit of {method} with an empty stack")
        env = self.stack[-1]
        rv = set(self.edges[env].get(RV, set()))
        self._pop()
        if lhs is not None and self.stack:
            self._update(lhs, rv, n)
        self._remove(env)
        return self

    def havoc_set(self, args) -> set[int]:
        roots: set[int] = {self._ensure_globals()}
        if self.stack:
            for a in args:
                if a is not None:
                    roots |= self.get(a).objects
        return self.reach_closure(roots)

    def enter_pm(self, method: str, args, n: int | None) -> "AnalysisModel":
        reach = self.havoc_set(args)
        r = self._new(False, REGION, label=f"region({method})")
        self.edges[r.id][WILDCARD] = {r.id}
        for o in reach:
            self.merge(r.id, o)
        r.last_def[WILDCARD] = {n} if n is not None else set()
        env = self._push(method, external=True)
        self.edges[env.id][UPDATED_HEAP] = {r.id}
        # locals of the untraced frame may point anywhere in the region
        self.edges[env.id][WILDCARD] = {r.id}
        return self

    def exit_mp(self, method: str, lhs: Term | None, n: int) -> "AnalysisModel":
        if not self.stack:
            raise EmptyStack(f"exit of {method} with an empty stack")
        env = self.stack[-1]
        r = self.updated_heap(env)
        if r is None:
            raise ProtocolError(f"exit-+ of {method} outside an untraced call")
        self._pop()
        self._remove(env)
        for o in self.closure({r}):
            self.objects[o].last_def.setdefault(WILDCARD, set()).add(n)
        if lhs is not None and self.stack:
            self._update(lhs, {r}, n)
        return self

    def enter_mp(self, method: str, params, n: int) -> "AnalysisModel":
        if not self.stack:
            raise ProtocolError(f"callback {method} with no enclosing untraced call")
        r = self.updated_heap()
        if r is None:
            raise ProtocolError(f"callback {method} outside an untraced call")
        env = self._push(method)
        for p in params:
            self.edges[env.id][p] = {r}
            env.last_def[p] = {n}
        return self

    def exit_pm(self, method: str, nodes: Iterable[int]) -> "AnalysisModel":
        if len(self.stack) < 2:
            raise EmptyStack(f"exit of callback {method} without a caller")
        env = self.stack[-1]
        rv = set(self.edges[env].get(RV, set()))
        self._pop()
        self._remove(env)
        r = self.updated_heap()
        if r is None:
            raise ProtocolError(f"callback {method} returned into a traced frame")
        # the untraced caller may now touch anything the callback exposed
        for o in self.reach_closure({r} | rv):
            self.merge(r, o)
        nodes = set(nodes)
        for o in self.closure({r}):
            self.objects[o].last_def.setdefault(WILDCARD, set()).update(nodes)
        return self

    # -- inspection
    def snapshot(self) -> "AnalysisModel":
        return copy.deepcopy(self)

    def singleton_ids(self) -> set[int]:
        return {o.id for o in self.objects.values() if o.singleton}

    def edge_list(self) -> list[tuple[int, str, int]]:
        return sorted((s, f, t) for s, out in self.edges.items() for f, ts in out.items() for t in ts)

    def to_dot(self) -> str:
        lines = ["digraph model {"]
        for o in self.objects.values():
            shape = "box" if o.singleton else "ellipse"
            cls = self.find(o.id)
            env = " (top)" if self.stack and o.id == self.stack[-1] else ""
            lines.append(f'  n{o.id} [shape={shape}, label="{o.kind}:{o.id} {o.label}{env} λ{cls}"];')
        for s, f, t in self.edge_list():
            lines.append(f'  n{s} -> n{t} [label="{f}"];')
        lines.append("}")
        return "\n".join(lines)


def init(program=None, type_filter: bool = True) -> AnalysisModel:
    """Fresh, empty model; pass a program to enable type filtering."""
    if program is None:
        return AnalysisModel(type_filter=type_filter)
    return AnalysisModel(program.field_types, program.static_types, type_filter)
