"""Bundled example programs, their expected slices, and a random generator.

Header comments configure a program:

    // m2s: main,f        focused methods for comparisons
    // input: 3, 4        entry arguments
    // criterion: main:3@r
    // tags: arrays

A criterion can also be attached to the line it anchors with an inline
``//@ crit <term>`` marker.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .. import lang, runtime

HERE = Path(__file__).resolve().parent
PROGRAMS = HERE / "programs"
EXPECTED = HERE / "expected"

_HEADER = re.compile(r"^\s*//\s*(m2s|input|criterion|tags):\s*(.*)$")
_MARK = re.compile(r"//@\s*crit\s+(\S+)")


@dataclass
class CorpusProgram:
    name: str
    source: str
    program: lang.Program
    criteria: list[str] = field(default_factory=list)
    m2s: list[str] = field(default_factory=list)
    inputs: tuple[int, ...] = ()
    tags: set[str] = field(default_factory=set)

    @property
    def array_free(self) -> bool:
        return "[" not in re.sub(r"//.*", "", self.source)

    @property
    def path(self) -> Path:
        return PROGRAMS / f"{self.name}.mini"


def _method_at(prog: lang.Program, line: int) -> str:
    for m in prog.methods.values():
        lo, hi = m.line_span
        if lo <= line <= hi:
            return m.name
    raise ValueError(f"line {line} is not inside a method")


def parse_corpus_source(name: str, source: str) -> CorpusProgram:
    prog = lang.parse(source)
    cp = CorpusProgram(name, source, prog)
    for i, text in enumerate(source.splitlines(), 1):
        h = _HEADER.match(text)
        if h:
            key, val = h[1], h[2].strip()
            if key == "m2s":
                cp.m2s = [v.strip() for v in val.split(",") if v.strip()]
            elif key == "input":
                cp.inputs = tuple(int(v) for v in val.split(",") if v.strip())
            elif key == "criterion":
                cp.criteria.append(val)
            else:
                cp.tags |= {v.strip() for v in val.split(",") if v.strip()}
            continue
        mk = _MARK.search(text)
        if mk:
            cp.criteria.append(f"{_method_at(prog, i)}:{i}@{mk[1]}")
    if not cp.m2s:
        cp.m2s = sorted(prog.methods)
    return cp


def names() -> list[str]:
    return sorted(p.stem for p in PROGRAMS.glob("*.mini"))


@lru_cache(maxsize=None)
def _load_cached(name: str) -> CorpusProgram:
    return parse_corpus_source(name, (PROGRAMS / f"{name}.mini").read_text(encoding="utf-8"))


def load(name: str) -> CorpusProgram:
    return _load_cached(name)


def load_all() -> list[CorpusProgram]:
    return [load(n) for n in names()]


def expected_path(name: str) -> Path:
    return EXPECTED / f"{name}.json"


def read_expected(name: str) -> dict:
    return json.loads(expected_path(name).read_text(encoding="utf-8"))


def compute_expected(cp: CorpusProgram) -> dict:
    """Expected slices: the concrete oracle's full slice, the concrete slice
    restricted to the focused methods, and the focused analyzer's slice."""
    from .. import oracle, slicer
    from ..ddg import SliceCriterion

    out = {"m2s": cp.m2s, "input": list(cp.inputs), "criteria": {}}
    focus = set(cp.m2s)
    for text in cp.criteria:
        crit = SliceCriterion.parse(text, cp.program)
        conc = oracle.concrete_slice(cp.program, crit, cp.inputs)
        res, _ = slicer.slice_program(cp.program, cp.m2s, crit, cp.inputs)
        out["criteria"][text] = {
            "concrete": sorted(conc.lines),
            "concrete_focused": sorted({s.line for s in conc.statements if s.method in focus}),
            "focused": sorted(res.slice_lines()),
        }
    return out


def write_expected(cp: CorpusProgram) -> Path:
    EXPECTED.mkdir(parents=True, exist_ok=True)
    path = expected_path(cp.name)
    path.write_text(json.dumps(compute_expected(cp), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# random programs


@dataclass
class GeneratedCase:
    seed: int
    source: str
    program: lang.Program
    m2s: list[str]
    criterion: str
    inputs: tuple[int, ...] = ()


class _Gen:
    """Emits well-typed programs that cannot dereference null.

    Every allocated ``N`` gets both reference fields pointed at a live object
    straight away, locals keep one type for their whole life, and the call
    graph is acyclic, so runs always terminate without errors.
    """

    def __init__(self, rng: random.Random, max_stmts: int, arrays: bool):
        self.r = rng
        self.max_stmts = max_stmts
        self.arrays = arrays
        self.count = 0
        self.fresh = 0
        self.methods: list[tuple[str, list[tuple[str, str]], str]] = []

    def var(self, prefix="v") -> str:
        self.fresh += 1
        return f"{prefix}{self.fresh}"

    def pick(self, env: dict, ty: str):
        cands = [v for v, t in env.items() if t == ty]
        return self.r.choice(cands) if cands else None

    def int_expr(self, env: dict) -> str:
        opts = [str(self.r.randint(0, 9))]
        iv = self.pick(env, "int")
        if iv:
            opts.append(iv)
        nv = self.pick(env, "N")
        if nv:
            opts.append(f"{nv}.v")
        a = self.r.choice(opts)
        if self.r.random() < 0.5:
            return f"{a} {self.r.choice(['+', '-', '*'])} {self.r.choice(opts)}"
        return a

    def n_expr(self, env: dict) -> str:
        nv = self.pick(env, "N")
        if self.r.random() < 0.4:
            return f"{nv}.{self.r.choice(['a', 'b'])}"
        if self.r.random() < 0.1:
            return "G.s"
        return nv

    def alloc(self, env: dict, out: list, ind: str, target: str | None = None) -> None:
        x = target or self.var("o")
        out.append(f"{ind}{x} = new N();")
        other = self.pick(env, "N") or x
        out.append(f"{ind}{x}.a = {other};")
        out.append(f"{ind}{x}.b = {x};")
        self.count += 3
        env[x] = "N"

    def block(self, env: dict, ind: str, depth: int, callees: list, budget: int) -> list[str]:
        out: list[str] = []
        n = self.r.randint(max(1, budget // 2), budget)
        for _ in range(n):
            if self.count >= self.max_stmts - 4:
                break
            self.stmt(env, out, ind, depth, callees)
        return out

    def stmt(self, env: dict, out: list, ind: str, depth: int, callees: list) -> None:
        r = self.r.random()
        if r < 0.15 or not self.pick(env, "N"):
            self.alloc(env, out, ind)
        elif r < 0.30:
            x = self.pick(env, "N")
            out.append(f"{ind}{x}.{self.r.choice(['a', 'b'])} = {self.n_expr(env)};")
            self.count += 1
        elif r < 0.45:
            x = self.pick(env, "N") if self.r.random() < 0.5 else None
            if x:
                out.append(f"{ind}{x}.v = {self.int_expr(env)};")
            else:
                x = self.pick(env, "int") if self.r.random() < 0.5 else None
                x = x or self.var("i")
                out.append(f"{ind}{x} = {self.int_expr(env)};")
                env[x] = "int"
            self.count += 1
        elif r < 0.55:
            x = self.var("p")
            out.append(f"{ind}{x} = {self.n_expr(env)};")
            env[x] = "N"
            self.count += 1
        elif r < 0.70 and callees:
            name, params, rty = self.r.choice(callees)
            args = []
            for _, pty in params:
                args.append(self.pick(env, "N") if pty == "N" else (self.pick(env, "int") or str(self.r.randint(0, 5))))
            call = f"{name}({', '.join(args)})"
            if self.r.random() < 0.8:
                existing = self.pick(env, rty) if self.r.random() < 0.3 else None
                x = existing or self.var("c")
                out.append(f"{ind}{x} = {call};")
                env[x] = rty
            else:
                out.append(f"{ind}{call};")
            self.count += 1
        elif r < 0.78 and depth < 2:
            out.append(f"{ind}if ({self.int_expr(env)} > {self.r.randint(0, 6)}) {{")
            self.count += 1
            inner = dict(env)
            out += self.block(inner, ind + "  ", depth + 1, callees, 3)
            self._sync(env, inner)
            if self.r.random() < 0.5:
                out.append(f"{ind}}} else {{")
                inner = dict(env)
                out += self.block(inner, ind + "  ", depth + 1, callees, 2)
                self._sync(env, inner)
            out.append(f"{ind}}}")
        elif r < 0.86 and depth < 2:
            k = self.var("k")
            out.append(f"{ind}{k} = 0;")
            out.append(f"{ind}while ({k} < {self.r.randint(1, 3)}) {{")
            self.count += 2
            inner = dict(env)
            inner[k] = "int"
            body = self.block(inner, ind + "  ", depth + 1, callees, 3)
            self._sync(env, inner)
            env[k] = "int"
            out += body
            out.append(f"{ind}  {k} = {k} + 1;")
            out.append(f"{ind}}}")
            self.count += 1
        elif r < 0.92:
            if self.r.random() < 0.5:
                out.append(f"{ind}G.s = {self.pick(env, 'N')};")
            else:
                x = self.var("g")
                out.append(f"{ind}{x} = G.s;")
                env[x] = "N"
            self.count += 1
        elif self.arrays:
            arr = self.pick(env, "N[]")
            if arr is None:
                arr = self.var("arr")
                out.append(f"{ind}{arr} = new N[2];")
                out.append(f"{ind}{arr}[0] = {self.pick(env, 'N')};")
                out.append(f"{ind}{arr}[1] = {self.pick(env, 'N')};")
                env[arr] = "N[]"
                self.count += 3
            elif self.r.random() < 0.5:
                out.append(f"{ind}{arr}[{self.r.randint(0, 1)}] = {self.n_expr(env)};")
                self.count += 1
            else:
                x = self.var("e")
                out.append(f"{ind}{x} = {arr}[{self.r.randint(0, 1)}];")
                env[x] = "N"
                self.count += 1
        else:
            x = self.pick(env, "N")
            y = self.var("t")
            out.append(f"{ind}{y} = {x}.v + 1;")
            env[y] = "int"
            self.count += 1

    @staticmethod
    def _sync(env: dict, inner: dict) -> None:
        # variables first assigned inside a block stay local to it, except
        # that an array variable must keep one type everywhere
        for v, t in inner.items():
            if v in env and env[v] != t:
                raise AssertionError("type drift")

    def program(self) -> str:
        nmeth = self.r.randint(2, 4)
        specs = []
        for i in range(nmeth - 1, 0, -1):
            params = [(f"q{j}", self.r.choice(["N", "N", "int"])) for j in range(self.r.randint(1, 2))]
            specs.append((f"m{i}", params, self.r.choice(["N", "int"])))
        lines = ["class N { field a: N; field b: N; field v: int; }", "class G { static s: N; }"]
        bodies: dict[str, list[str]] = {}
        # callees of m_i are m_j with j > i; main may call any of them
        by_name = {s[0]: s for s in specs}
        for name, params, rty in sorted(specs, key=lambda s: -int(s[0][1:])):
            idx = int(name[1:])
            callees = [by_name[f"m{j}"] for j in range(idx + 1, nmeth)]
            env = dict(params)
            if not any(t == "N" for t in env.values()):
                body = []
                self.alloc(env, body, "  ")
            else:
                body = []
            body += self.block(env, "  ", 0, callees, 4)
            ret = self.pick(env, rty)
            if ret is None:
                ret = "0" if rty == "int" else None
                if ret is None:
                    self.alloc(env, body, "  ")
                    ret = self.pick(env, "N")
            body.append(f"  return {ret};")
            self.count += 1
            bodies[name] = [f"def {name}({', '.join(p for p, _ in params)}) {{"] + body + ["}"]
        env: dict = {}
        main = ["def main() {"]
        self.alloc(env, main, "  ")
        main.append(f"  G.s = {self.pick(env, 'N')};")
        self.count += 1
        main += self.block(env, "  ", 0, specs, 14)
        main.append("}")
        lines += main
        for name in sorted(bodies):
            lines += bodies[name]
        return "\n".join(lines) + "\n"


def generate(seed: int, *, max_stmts: int = 40, arrays: bool | None = None, tries: int = 50) -> GeneratedCase:
    """A random program, a random M2S and a random executed criterion.

    The same seed always yields the same case.
    """
    rng = random.Random(seed)
    for _ in range(tries):
        g = _Gen(rng, max_stmts, rng.random() < 0.3 if arrays is None else arrays)
        src = g.program()
        prog = lang.parse(src)
        n_stmts = sum(1 for s in prog.stmts.values() if s.kind != lang.ENTER)
        if n_stmts > max_stmts:
            continue
        trace = runtime.run_full(prog, (), max_steps=20_000)
        if trace.error is not None:
            continue
        executed = list(dict.fromkeys(a.stmt for a in trace.actions
                                      if a.stmt in prog.stmts and prog.stmts[a.stmt].kind in (lang.ALLOC, lang.ASSIGN, lang.INVOKE)))
        if not executed:
            continue
        # favour late statements: their slices reach further back
        sid = executed[int(len(executed) * (1 - rng.random() ** 2)) - 1] if len(executed) > 1 else executed[0]
        st = prog.stmts[sid]
        term = st.lhs_term
        methods = sorted(prog.methods)
        m2s = sorted({m for m in methods if rng.random() < 0.5} | {sid.method})
        var = f"@{term}" if term is not None else ""
        return GeneratedCase(seed, src, prog, m2s, f"{sid.method}:{sid.line}{var}")
    raise RuntimeError(f"no valid program for seed {seed}")
