"""Dynamic dependency graph with node subsumption and backward slicing."""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import CriterionNotExecuted
from .lang import Program, StmtId, Term


@dataclass(frozen=True)
class DdgNode:
    id: int
    stmt: StmtId
    data: frozenset[int]
    control: frozenset[int]
    tag: str = ""

    @property
    def deps(self) -> frozenset[int]:
        return self.data | self.control


class Ddg:
    """Append-only dependency graph.

    A new occurrence reuses an earlier node of the same statement when either
    its direct dependency set matches exactly, or (Agrawal's reduction) the
    set of statements it transitively depends on is the same.  Both lookups are
    exact dictionary hits on frozensets, so no two different keys collide.
    """

    def __init__(self, subsumption: bool = True):
        self.nodes: list[DdgNode] = []
        self.last_node_for_stmt: dict[StmtId, int] = {}
        self.subsumption_index: dict[tuple[StmtId, frozenset[int]], int] = {}
        self.transitive_index: dict[tuple[StmtId, frozenset[StmtId]], int] = {}
        self._reach: list[frozenset[StmtId]] = []
        self.subsumption = subsumption
        self.requests = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, nid: int) -> DdgNode:
        return self.nodes[nid]

    def add_node(self, stmt: StmtId, data: Iterable[int] = (), control: Iterable[int] = (), tag: str = "") -> int:
        data, control = frozenset(data), frozenset(control)
        deps = data | control
        for d in deps:
            if not 0 <= d < len(self.nodes):
                raise ValueError(f"dependency on unknown node {d}")
        self.requests += 1
        if self.subsumption:
            hit = self.subsumption_index.get((stmt, deps))
            if hit is not None:
                self.last_node_for_stmt[stmt] = hit
                return hit
        reach = frozenset({stmt}).union(*(self._reach[d] for d in deps))
        if self.subsumption:
            hit = self.transitive_index.get((stmt, reach))
            if hit is not None:
                self.subsumption_index[(stmt, deps)] = hit
                self.last_node_for_stmt[stmt] = hit
                return hit
        nid = len(self.nodes)
        self.nodes.append(DdgNode(nid, stmt, data, control, tag))
        self._reach.append(reach)
        self.subsumption_index[(stmt, deps)] = nid
        self.transitive_index.setdefault((stmt, reach), nid)
        self.last_node_for_stmt[stmt] = nid
        return nid

    def slice(self, roots: Iterable[int]) -> set[StmtId]:
        roots = list(roots)
        if not roots:
            raise CriterionNotExecuted("no criterion nodes")
        return set().union(*(self._reach[r] for r in roots))

    def slice_with_reasons(self, roots: Iterable[int]) -> dict[StmtId, str]:
        """Statement -> "criterion", "data" or "control" (first way reached)."""
        reasons: dict[StmtId, str] = {}
        seen: set[int] = set()
        work: deque[tuple[int, str]] = deque((r, "criterion") for r in roots)
        while work:
            nid, why = work.popleft()
            if nid in seen:
                continue
            seen.add(nid)
            node = self.nodes[nid]
            reasons.setdefault(node.stmt, why)
            work.extend((d, "data") for d in node.data)
            work.extend((d, "control") for d in node.control)
        return reasons

    def is_acyclic(self) -> bool:
        return all(d < n.id for n in self.nodes for d in n.deps)


LAST = "last"
_CRIT = re.compile(r"^(?:(?P<cls>[A-Z]\w*)\.)?(?P<m>\w+):(?P<line>\d+)(?::(?P<occ>\d+|last))?(?:@(?P<var>.+))?$")


@dataclass(frozen=True)
class SliceCriterion:
    """Anchor of a slice: a statement occurrence and, optionally, a term."""

    stmt: StmtId
    occurrence: int | str = LAST
    variable: Term | None = None

    @classmethod
    def parse(cls, text: str, prog: Program) -> "SliceCriterion":
        """Parse ``[Class.]method:line[:occ|last][@term]``.

        The statement is the last one on that line, so for ``r = f(a)`` the
        whole call (not one of its parts) is the anchor.
        """
        m = _CRIT.match(text.strip())
        if not m:
            raise ValueError(f"bad criterion {text!r}; expected method:line[:occ][@var]")
        method, line = m["m"], int(m["line"])
        if method not in prog.methods:
            raise ValueError(f"unknown method {method!r} in criterion")
        on_line = [s for s in prog.stmts.values() if s.method == method and s.line == line and s.kind != "EnterMarker"]
        if not on_line:
            raise ValueError(f"no statement of {method} on line {line}")
        stmt = max(on_line, key=lambda s: s.id.idx).id
        occ = m["occ"] or LAST
        occ = occ if occ == LAST else int(occ)
        var = Term.parse(m["var"]) if m["var"] else None
        return cls(stmt, occ, var)

    def matches(self, stmt: StmtId, occurrence: int) -> bool:
        return stmt == self.stmt and (self.occurrence == LAST or self.occurrence == occurrence)

    def __str__(self) -> str:
        var = f"@{self.variable}" if self.variable is not None else ""
        return f"{self.stmt.method}:{self.stmt.line}:{self.occurrence}{var}"


@dataclass
class SliceDocument:
    criterion: str
    statements: list[StmtId]
    reasons: dict[StmtId, str] = field(default_factory=dict)

    @property
    def lines(self) -> list[int]:
        return sorted({s.line for s in self.statements})

    def to_json(self, prog: Program | None = None) -> str:
        src = prog.source.splitlines() if prog is not None else []
        entries = []
        for s in sorted(self.statements, key=lambda s: (s.line, s.idx, s.method)):
            entries.append({
                "stmt": str(s),
                "line": s.line,
                "reason": self.reasons.get(s, ""),
                **({"source": src[s.line - 1].strip()} if 0 < s.line <= len(src) else {}),
            })
        return json.dumps({"criterion": self.criterion, "lines": self.lines, "statements": entries}, indent=2)

    def to_lines(self) -> str:
        return "".join(f"{ln}\n" for ln in self.lines)

    def annotate(self, source: str) -> str:
        marked = set(self.lines)
        return "".join(
            f"{'*' if i in marked else ' '} {i:4d}  {text}\n" for i, text in enumerate(source.splitlines(), 1)
        )
