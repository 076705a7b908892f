import pytest

from abslice import lang
from abslice.errors import MiniSyntaxError, ResolutionError
from abslice.lang import StmtId, Term


def stmt_at(prog, method, line):
    return [s for s in prog.stmts.values() if s.method == method and s.line == line and s.kind != lang.ENTER][-1]


def test_fig2_methods_and_lines(fig2):
    prog = fig2.program
    assert set(prog.methods) == {"main", "f", "g", "h"}
    assert {m: prog.methods[m].line_span[0] for m in prog.methods} == {"main": 1, "f": 5, "g": 10, "h": 14}
    assert prog.method_lines("h") == {15, 16}
    assert stmt_at(prog, "main", 2).kind == lang.ALLOC
    call = stmt_at(prog, "main", 3)
    assert call.kind == lang.INVOKE and call.callee == "f" and call.lhs_term == Term("r")


def test_empty_program_has_no_entry():
    with pytest.raises(ResolutionError, match="no entry method"):
        lang.parse("")


def test_array_index_is_erased(parse):
    prog = parse("class A { field f: B[]; } class B { field g: int; }\n"
                 "def main(y, i) {\n  x = y.f[i].g;\n}\n")
    s = stmt_at(prog, "main", 3)
    assert s.kind == lang.ASSIGN
    assert s.lhs_term == Term("x")
    assert s.rhs_term == Term("y", ("f", "[]", "g"))


@pytest.mark.parametrize("src, expect", [
    ("x = y;", {"y"}),
    ("a.b = c[i];", {"a", "c", "i", "c.[]"}),
    ("x = new A();", set()),
    ("x = y + z.v;", {"y", "z", "z.v"}),
])
def test_uses(parse, src, expect):
    prog = parse("class A { field b: int; field v: int; }\ndef main(y, z, a, c, i) {\n  " + src + "\n}\n")
    assert {str(t) for t in lang.uses_of(stmt_at(prog, "main", 3))} == expect


@pytest.mark.parametrize("src, expect", [
    ("return s;", lang.RV_TERM),
    ("if (s > 0) { }", None),
    ("r = f(s);", Term("r")),
])
def test_def(parse, src, expect):
    prog = parse("def main(s) {\n  " + src + "\n}\ndef f(q) {\n  return q;\n}\n")
    s = stmt_at(prog, "main", 2)
    assert (lang.RV_TERM if s.kind == lang.RETURN and s.rhs is not None else lang.def_of(s)) == expect


def test_term_helpers():
    t = Term.parse("a.b.c")
    assert t.base() == Term("a", ("b",))
    assert t.last() == "c"
    assert Term("a").base() is None
    assert Term.parse("G.s.f") == Term("G.s", ("f",)) and Term.parse("G.s").is_static
    assert [str(p) for p in t.prefixes()] == ["a", "a.b"]
    assert Term.parse("x[].v") == Term("x", ("[]", "v"))


def test_stmt_id_roundtrip():
    sid = StmtId("main", 3, 1)
    assert StmtId.parse(str(sid)) == sid
    assert StmtId.parse("f:7") == StmtId("f", 7, 0)


def test_enter_marker_on_def_line(fig2):
    m = fig2.program.methods["f"]
    assert m.enter.kind == lang.ENTER and m.enter.id == StmtId("f", 5, 0)


def test_control_parent(parse):
    prog = parse("def main(n) {\n  while (n > 0) {\n    if (n > 2) {\n      n = n - 2;\n    }\n    n = n - 1;\n  }\n}\n")
    inner = stmt_at(prog, "main", 4)
    assert prog.stmts[inner.ctrl_parent].kind == lang.IF
    assert prog.stmts[stmt_at(prog, "main", 6).ctrl_parent].kind == lang.WHILE
    assert stmt_at(prog, "main", 2).ctrl_parent is None


@pytest.mark.parametrize("src, err", [
    ("def main( {\n}\n", MiniSyntaxError),
    ("def main() {\n  x = f(1 + 2);\n}\ndef f(a) {\n  return a;\n}\n", MiniSyntaxError),
    ("def main() {\n  x = g();\n}\n", ResolutionError),
    ("def main() {\n  x = new Nope();\n}\n", ResolutionError),
    ("def main() {\n}\ndef main() {\n}\n", ResolutionError),
])
def test_errors(src, err):
    with pytest.raises(err):
        lang.parse(src)


def test_syntax_error_carries_line():
    with pytest.raises(MiniSyntaxError) as exc:
        lang.parse("def main() {\n  x = ;\n}\n")
    assert exc.value.line == 2


def test_pretty_roundtrip_preserves_shape():
    from abslice import corpus

    for cp in corpus.load_all():
        again = lang.parse(lang.pretty(cp.program))
        assert lang.shape(again) == lang.shape(cp.program), cp.name
