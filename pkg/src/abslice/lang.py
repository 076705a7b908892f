"""Front-end for the mini object-oriented language.

Parses ``.mini`` sources into a :class:`Program` whose statements carry the
static facts the analyzer needs: the defined term, the read terms, the
statement kind and its source line.  Terms are static access paths; array
indexes are erased to the ``[]`` pseudo-field.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .errors import MiniSyntaxError, ResolutionError

ARRAY_FIELD = "[]"
WILDCARD = "?"
RV = "rv"
TOP_CLASS = "Main"

ALLOC = "Alloc"
ASSIGN = "Assign"
INVOKE = "Invoke"
RETURN = "Return"
IF = "If"
WHILE = "While"
ENTER = "EnterMarker"

SCALAR_TYPES = ("int", "bool")


# --------------------------------------------------------------------------
# terms and statement ids


@dataclass(frozen=True, order=True)
class Term:
    """A static access path: a variable followed by field names."""

    base_var: str
    fields: tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Term":
        text = text.replace("[]", ".[]").replace("..", ".")
        parts = [p for p in text.split(".") if p]
        if not parts:
            raise ValueError("empty term")
        # ``Cls.static`` stays fused as the base variable
        if len(parts) > 1 and parts[0][:1].isupper() and parts[1] != ARRAY_FIELD:
            return cls(parts[0] + "." + parts[1], tuple(parts[2:]))
        return cls(parts[0], tuple(parts[1:]))

    @property
    def is_static(self) -> bool:
        return "." in self.base_var

    def last(self) -> str:
        return self.fields[-1] if self.fields else self.base_var

    def base(self) -> "Term | None":
        """The term without its last element; ``None`` stands for epsilon."""
        if not self.fields:
            return None
        return Term(self.base_var, self.fields[:-1])

    def prefixes(self) -> list["Term"]:
        """Proper prefixes, shortest first."""
        return [Term(self.base_var, self.fields[:i]) for i in range(len(self.fields))]

    def extend(self, name: str) -> "Term":
        return Term(self.base_var, self.fields + (name,))

    def __str__(self) -> str:
        out = self.base_var
        for f in self.fields:
            out += f".{f}"
        return out


RV_TERM = Term(RV)


@dataclass(frozen=True, order=True)
class StmtId:
    method: str
    line: int
    idx: int = 0

    @classmethod
    def parse(cls, text: str) -> "StmtId":
        parts = text.split(":")
        if len(parts) == 2:
            parts.append("0")
        if len(parts) != 3:
            raise ValueError(f"bad statement id {text!r}")
        return cls(parts[0], int(parts[1]), int(parts[2]))

    def __str__(self) -> str:
        return f"{self.method}:{self.line}:{self.idx}"


# --------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Lit:
    value: Union[int, bool, None]


@dataclass(frozen=True)
class FieldSel:
    name: str


@dataclass(frozen=True)
class IndexSel:
    index: "Expr"


@dataclass(frozen=True)
class Access:
    var: str
    selectors: tuple[Union[FieldSel, IndexSel], ...] = ()

    @property
    def is_static(self) -> bool:
        return "." in self.var

    def term(self) -> Term:
        names = tuple(s.name if isinstance(s, FieldSel) else ARRAY_FIELD for s in self.selectors)
        return Term(self.var, names)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"


Expr = Union[Lit, Access, BinOp, UnOp]


def expr_terms(e: Expr | None) -> set[Term]:
    """Every term read when evaluating ``e``, prefixes and index variables included."""
    out: set[Term] = set()
    if e is None or isinstance(e, Lit):
        return out
    if isinstance(e, Access):
        out.update(_access_terms(e, include_self=True))
    elif isinstance(e, BinOp):
        out |= expr_terms(e.left)
        out |= expr_terms(e.right)
    elif isinstance(e, UnOp):
        out |= expr_terms(e.operand)
    return out


def _access_terms(a: Access, include_self: bool) -> set[Term]:
    out: set[Term] = set()
    t = a.term()
    out.update(t.prefixes())
    if include_self:
        out.add(t)
    for s in a.selectors:
        if isinstance(s, IndexSel):
            out |= expr_terms(s.index)
    return out


def format_expr(e: Expr | None) -> str:
    if e is None:
        return ""
    if isinstance(e, Lit):
        if e.value is None:
            return "null"
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Access):
        out = e.var
        for s in e.selectors:
            out += f".{s.name}" if isinstance(s, FieldSel) else f"[{format_expr(s.index)}]"
        return out
    if isinstance(e, UnOp):
        return f"{e.op}{_fmt_operand(e.operand)}"
    return f"{_fmt_operand(e.left)} {e.op} {_fmt_operand(e.right)}"


def _fmt_operand(e: Expr) -> str:
    s = format_expr(e)
    return f"({s})" if isinstance(e, BinOp) else s


# --------------------------------------------------------------------------
# declarations


@dataclass(eq=False)
class Stmt:
    id: StmtId
    kind: str
    lhs: Access | None = None
    rhs: Expr | None = None
    callee: str | None = None
    args: tuple[Expr, ...] = ()
    cond: Expr | None = None
    new_class: str | None = None
    new_size: Expr | None = None
    body: list["Stmt"] = field(default_factory=list)
    orelse: list["Stmt"] = field(default_factory=list)
    ctrl_parent: StmtId | None = None

    @property
    def method(self) -> str:
        return self.id.method

    @property
    def line(self) -> int:
        return self.id.line

    @property
    def lhs_term(self) -> Term | None:
        return self.lhs.term() if self.lhs is not None else None

    @property
    def rhs_term(self) -> Term | None:
        """The copied term for reference-style assignments, else ``None``."""
        return self.rhs.term() if isinstance(self.rhs, Access) else None

    @property
    def arg_terms(self) -> tuple[Term | None, ...]:
        return tuple(a.term() if isinstance(a, Access) else None for a in self.args)

    @property
    def cond_uses(self) -> frozenset[Term]:
        return frozenset(expr_terms(self.cond))

    def __repr__(self) -> str:
        return f"Stmt({self.id}, {self.kind})"


@dataclass(eq=False)
class MethodDecl:
    name: str
    params: tuple[str, ...]
    body: list[Stmt]
    line_span: tuple[int, int]
    owner: str = TOP_CLASS
    enter: Stmt | None = None

    def walk(self) -> Iterator[Stmt]:
        yield from _walk(self.body)


def _walk(stmts: Iterable[Stmt]) -> Iterator[Stmt]:
    for s in stmts:
        yield s
        yield from _walk(s.body)
        yield from _walk(s.orelse)


@dataclass(eq=False)
class ClassDecl:
    name: str
    fields: list[tuple[str, str]] = field(default_factory=list)
    methods: list[MethodDecl] = field(default_factory=list)
    static_fields: list[tuple[str, str]] = field(default_factory=list)


@dataclass(eq=False)
class Program:
    classes: list[ClassDecl]
    entry: str = "main"
    source: str = ""

    def __post_init__(self):
        self.methods: dict[str, MethodDecl] = {}
        self.stmts: dict[StmtId, Stmt] = {}
        self.class_names = {c.name for c in self.classes}
        self.field_types: dict[str, set[str]] = {}
        self.static_types: dict[str, str] = {}
        for c in self.classes:
            for name, ty in c.fields:
                self.field_types.setdefault(name, set()).add(ty)
            for name, ty in c.static_fields:
                self.static_types[f"{c.name}.{name}"] = ty
            for m in c.methods:
                self.methods[m.name] = m
                if m.enter is not None:
                    self.stmts[m.enter.id] = m.enter
                for s in m.walk():
                    self.stmts[s.id] = s

    def stmt(self, sid: StmtId) -> Stmt:
        return self.stmts[sid]

    def class_of(self, name: str) -> ClassDecl:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)

    def field_decl_type(self, cls: str, name: str) -> str | None:
        for c in self.classes:
            if c.name == cls:
                for n, ty in c.fields:
                    if n == name:
                        return ty
        return None

    def method_lines(self, method: str) -> set[int]:
        m = self.methods[method]
        return {s.line for s in m.walk()}


def is_ref_type(ty: str | None) -> bool:
    return ty is not None and ty not in SCALAR_TYPES


def element_type(array_ty: str) -> str:
    return array_ty[:-2]


# --------------------------------------------------------------------------
# read/write sets


def lhs_base_uses(s: Stmt) -> set[Term]:
    """Terms read to locate the written cell (proper prefixes and index variables)."""
    if s.lhs is None:
        return set()
    return _access_terms(s.lhs, include_self=False)


def arg_uses(s: Stmt) -> set[Term]:
    out: set[Term] = set()
    for a in s.args:
        out |= expr_terms(a)
    return out


def uses_of(s: Stmt) -> set[Term]:
    """Every term read by ``s``."""
    k = s.kind
    if k == ALLOC:
        return lhs_base_uses(s) | expr_terms(s.new_size)
    if k == ASSIGN:
        return expr_terms(s.rhs) | lhs_base_uses(s)
    if k == INVOKE:
        return arg_uses(s) | lhs_base_uses(s)
    if k == RETURN:
        return expr_terms(s.rhs)
    if k in (IF, WHILE):
        return expr_terms(s.cond)
    return set()


def def_of(s: Stmt) -> Term | None:
    if s.kind in (ALLOC, ASSIGN, INVOKE):
        return s.lhs_term
    if s.kind == RETURN and s.rhs is not None:
        return RV_TERM
    return None


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[{}()\[\];,.=<>+\-*/%!:])
    """,
    re.VERBOSE,
)

KEYWORDS = {"class", "field", "static", "def", "if", "else", "while", "return", "new", "true", "false", "null"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int


def tokenize(source: str) -> list[Token]:
    out: list[Token] = []
    line = 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MiniSyntaxError(line, f"unexpected character {source[pos]!r}")
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
        elif kind == "ident":
            out.append(Token("kw" if text in KEYWORDS else "ident", text, line))
        elif kind in ("int", "op"):
            out.append(Token(kind, text, line))
        pos = m.end()
    out.append(Token("eof", "", line))
    return out


# --------------------------------------------------------------------------
# parser

_BINARY_LEVELS = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.pos = 0
        self.classes: dict[str, ClassDecl] = {}
        self._method: str | None = None
        self._line_idx: dict[int, int] = {}

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise MiniSyntaxError(self.tok.line, f"expected {text!r}, got {self.tok.text or 'end of file'!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise MiniSyntaxError(self.tok.line, f"expected identifier, got {self.tok.text or 'end of file'!r}")
        return self.advance()

    def _next_id(self, line: int) -> StmtId:
        idx = self._line_idx.get(line, 0)
        self._line_idx[line] = idx + 1
        return StmtId(self._method, line, idx)

    # declarations
    def program(self) -> list[ClassDecl]:
        top = ClassDecl(TOP_CLASS)
        order = [top]
        self.classes[TOP_CLASS] = top
        while self.tok.kind != "eof":
            if self.at("class"):
                self.advance()
                name = self.ident().text
                cls = self.classes.get(name)
                if cls is None:
                    cls = ClassDecl(name)
                    self.classes[name] = cls
                    order.append(cls)
                self.expect("{")
                while not self.at("}"):
                    self.member(cls)
                self.expect("}")
            elif self.at("def"):
                top.methods.append(self.method(TOP_CLASS))
            else:
                raise MiniSyntaxError(self.tok.line, f"unexpected {self.tok.text!r} at top level")
        if not top.methods and not top.fields and not top.static_fields:
            order.remove(top)
        return order

    def member(self, cls: ClassDecl) -> None:
        if self.at("field") or self.at("static"):
            is_static = self.advance().text == "static"
            name = self.ident().text
            self.expect(":")
            ty = self.type_name()
            self.expect(";")
            target = cls.static_fields if is_static else cls.fields
            if any(n == name for n, _ in target):
                raise ResolutionError(f"duplicate field {name!r} in class {cls.name}", self.tok.line)
            target.append((name, ty))
        elif self.at("def"):
            cls.methods.append(self.method(cls.name))
        else:
            raise MiniSyntaxError(self.tok.line, f"unexpected {self.tok.text!r} in class body")

    def type_name(self) -> str:
        t = self.advance()
        if t.kind not in ("ident",):
            raise MiniSyntaxError(t.line, f"expected type, got {t.text!r}")
        ty = t.text
        if self.at("["):
            self.advance()
            self.expect("]")
            ty += "[]"
        return ty

    def method(self, owner: str) -> MethodDecl:
        start = self.expect("def").line
        name = self.ident().text
        self._method = name
        self._line_idx = {}
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.ident().text)
            while self.at(","):
                self.advance()
                params.append(self.ident().text)
        self.expect(")")
        if len(set(params)) != len(params):
            raise ResolutionError(f"duplicate parameter in {name}", start)
        enter = Stmt(self._next_id(start), ENTER)
        body = self.block(None)
        end = self.toks[self.pos - 1].line
        return MethodDecl(name, tuple(params), body, (start, end), owner, enter)

    def block(self, parent: StmtId | None) -> list[Stmt]:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise MiniSyntaxError(self.tok.line, "unterminated block")
            out.append(self.statement(parent))
        self.expect("}")
        return out

    def statement(self, parent: StmtId | None) -> Stmt:
        line = self.tok.line
        if self.at("if") or self.at("while"):
            kind = IF if self.advance().text == "if" else WHILE
            sid = self._next_id(line)
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            s = Stmt(sid, kind, cond=cond, ctrl_parent=parent)
            s.body = self.block(sid)
            if kind == IF and self.at("else"):
                self.advance()
                s.orelse = self.block(sid)
            return s
        if self.at("return"):
            self.advance()
            sid = self._next_id(line)
            rhs = None if self.at(";") else self.expr()
            self.expect(";")
            return Stmt(sid, RETURN, rhs=rhs, ctrl_parent=parent)
        if self.tok.kind == "ident" and self.peek().text == "(":
            sid = self._next_id(line)
            callee, args = self.call()
            self.expect(";")
            return Stmt(sid, INVOKE, callee=callee, args=args, ctrl_parent=parent)
        sid = self._next_id(line)
        lhs = self.access()
        self.expect("=")
        if self.at("new"):
            self.advance()
            cname = self.ident().text
            size = None
            if self.at("["):
                self.advance()
                size = self.expr()
                self.expect("]")
                cname += "[]"
            else:
                self.expect("(")
                self.expect(")")
            self.expect(";")
            return Stmt(sid, ALLOC, lhs=lhs, new_class=cname, new_size=size, ctrl_parent=parent)
        if self.tok.kind == "ident" and self.peek().text == "(":
            callee, args = self.call()
            self.expect(";")
            return Stmt(sid, INVOKE, lhs=lhs, callee=callee, args=args, ctrl_parent=parent)
        rhs = self.expr()
        self.expect(";")
        return Stmt(sid, ASSIGN, lhs=lhs, rhs=rhs, ctrl_parent=parent)

    def call(self) -> tuple[str, tuple[Expr, ...]]:
        callee = self.ident().text
        self.expect("(")
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        for a in args:
            if not isinstance(a, (Access, Lit)) and not (isinstance(a, UnOp) and isinstance(a.operand, Lit)):
                raise MiniSyntaxError(self.tok.line, "call arguments must be terms or literals")
        return callee, tuple(args)

    def access(self) -> Access:
        name = self.ident().text
        sels: list[Union[FieldSel, IndexSel]] = []
        if name in self.classes or (name[:1].isupper() and self.at(".")):
            # static field of a class
            self.expect(".")
            name = f"{name}.{self.ident().text}"
        while self.at(".") or self.at("["):
            if self.advance().text == ".":
                sels.append(FieldSel(self.ident().text))
            else:
                sels.append(IndexSel(self.expr()))
                self.expect("]")
        return Access(name, tuple(sels))

    def expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY_LEVELS[level]:
            op = self.advance().text
            left = BinOp(op, left, self.expr(level + 1))
        return left

    def unary(self) -> Expr:
        if self.at("-") or self.at("!"):
            op = self.advance().text
            inner = self.unary()
            if op == "-" and isinstance(inner, Lit) and isinstance(inner.value, int):
                return Lit(-inner.value)
            return UnOp(op, inner)
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Lit(int(t.text))
        if t.kind == "kw" and t.text in ("true", "false", "null"):
            self.advance()
            return Lit({"true": True, "false": False, "null": None}[t.text])
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            return self.access()
        raise MiniSyntaxError(t.line, f"unexpected {t.text or 'end of file'!r} in expression")


def parse(source: str, entry: str = "main") -> Program:
    """Parse ``source`` and resolve every class, field and method name."""
    p = _Parser(source)
    classes = p.program()
    prog = Program(classes, entry=entry, source=source)
    _resolve(prog)
    return prog


def _resolve(prog: Program) -> None:
    seen: dict[str, int] = {}
    for c in prog.classes:
        for m in c.methods:
            if m.name in seen:
                raise ResolutionError(f"method {m.name!r} declared twice (no overloading)", m.line_span[0])
            seen[m.name] = 1
    if prog.entry not in prog.methods:
        raise ResolutionError("no entry method")
    known_fields = set(prog.field_types)
    for c in prog.classes:
        for _, ty in c.fields + c.static_fields:
            base = ty[:-2] if ty.endswith("[]") else ty
            if base not in SCALAR_TYPES and base not in prog.class_names:
                raise ResolutionError(f"unknown type {ty!r} in class {c.name}")

    def check_access(a: Access, line: int) -> None:
        if a.is_static and a.var not in prog.static_types:
            raise ResolutionError(f"unknown static field {a.var!r}", line)
        for s in a.selectors:
            if isinstance(s, FieldSel) and s.name not in known_fields:
                raise ResolutionError(f"unknown field {s.name!r}", line)
            if isinstance(s, IndexSel):
                check_expr(s.index, line)

    def check_expr(e: Expr | None, line: int) -> None:
        if isinstance(e, Access):
            check_access(e, line)
        elif isinstance(e, BinOp):
            check_expr(e.left, line)
            check_expr(e.right, line)
        elif isinstance(e, UnOp):
            check_expr(e.operand, line)

    for m in prog.methods.values():
        for s in m.walk():
            if s.lhs is not None:
                check_access(s.lhs, s.line)
                if s.lhs.var in (RV,):
                    raise ResolutionError("'rv' is reserved", s.line)
            check_expr(s.rhs, s.line)
            check_expr(s.cond, s.line)
            check_expr(s.new_size, s.line)
            for a in s.args:
                check_expr(a, s.line)
            if s.kind == ALLOC:
                base = s.new_class[:-2] if s.new_class.endswith("[]") else s.new_class
                if base not in prog.class_names and base not in SCALAR_TYPES:
                    raise ResolutionError(f"unknown class {s.new_class!r}", s.line)
                if s.new_class.endswith("[]") != (s.new_size is not None):
                    raise MiniSyntaxError(s.line, "malformed allocation")
            if s.kind == INVOKE:
                callee = prog.methods.get(s.callee)
                if callee is None:
                    raise ResolutionError(f"unknown method {s.callee!r}", s.line)
                if len(callee.params) != len(s.args):
                    raise ResolutionError(
                        f"{s.callee} expects {len(callee.params)} arguments, got {len(s.args)}", s.line
                    )


# --------------------------------------------------------------------------
# pretty printer


def pretty(prog: Program) -> str:
    """Render ``prog`` back to source; one statement per line."""
    out: list[str] = []

    def emit_method(m: MethodDecl, indent: str) -> None:
        out.append(f"{indent}def {m.name}({', '.join(m.params)}) {{")
        emit_block(m.body, indent + "  ")
        out.append(f"{indent}}}")

    def emit_block(stmts: list[Stmt], indent: str) -> None:
        for s in stmts:
            emit_stmt(s, indent)

    def emit_stmt(s: Stmt, ind: str) -> None:
        lhs = format_expr(s.lhs)
        if s.kind == ALLOC:
            if s.new_size is not None:
                out.append(f"{ind}{lhs} = new {s.new_class[:-2]}[{format_expr(s.new_size)}];")
            else:
                out.append(f"{ind}{lhs} = new {s.new_class}();")
        elif s.kind == ASSIGN:
            out.append(f"{ind}{lhs} = {format_expr(s.rhs)};")
        elif s.kind == INVOKE:
            call = f"{s.callee}({', '.join(format_expr(a) for a in s.args)})"
            out.append(f"{ind}{lhs} = {call};" if s.lhs is not None else f"{ind}{call};")
        elif s.kind == RETURN:
            out.append(f"{ind}return {format_expr(s.rhs)};" if s.rhs is not None else f"{ind}return;")
        else:
            kw = "if" if s.kind == IF else "while"
            out.append(f"{ind}{kw} ({format_expr(s.cond)}) {{")
            emit_block(s.body, ind + "  ")
            if s.orelse:
                out.append(f"{ind}}} else {{")
                emit_block(s.orelse, ind + "  ")
            out.append(f"{ind}}}")

    for c in prog.classes:
        if c.name == TOP_CLASS and not c.fields and not c.static_fields:
            for m in c.methods:
                emit_method(m, "")
            continue
        out.append(f"class {c.name} {{")
        for n, ty in c.fields:
            out.append(f"  field {n}: {ty};")
        for n, ty in c.static_fields:
            out.append(f"  static {n}: {ty};")
        for m in c.methods:
            emit_method(m, "  ")
        out.append("}")
    return "\n".join(out) + "\n"


def shape(prog: Program) -> tuple:
    """Line-independent structural summary, used for round-trip comparison."""

    def st(s: Stmt) -> tuple:
        return (
            s.kind,
            format_expr(s.lhs),
            format_expr(s.rhs),
            s.callee,
            tuple(format_expr(a) for a in s.args),
            format_expr(s.cond),
            s.new_class,
            format_expr(s.new_size),
            tuple(st(b) for b in s.body),
            tuple(st(b) for b in s.orelse),
        )

    return tuple(
        (
            c.name,
            tuple(c.fields),
            tuple(c.static_fields),
            tuple((m.name, m.params, tuple(st(s) for s in m.body)) for m in c.methods),
        )
        for c in prog.classes
    )
