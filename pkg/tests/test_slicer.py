import pytest

from abslice import corpus, lang, oracle, slicer, stream
from abslice.ddg import SliceCriterion
from abslice.stream import StatActionStream


def run(prog, m2s, crit, inputs=(), **kw):
    text = crit if isinstance(crit, str) else str(crit)
    res, _ = slicer.slice_program(prog, m2s, text, inputs, **kw)
    return res


def test_fig2_focused(fig2):
    res = run(fig2.program, "main,f,h", "main:3@r")
    assert res.slice_lines() == {3, 6, 7, 8, 15, 16}
    assert res.stats.model_ops == 13 and res.stats.havocs == 1 and res.stats.callbacks == 1
    assert res.labels[0] == "enter++Method_main" and res.labels[-1] == "exit++Method_main"


def test_fig2_full(fig2):
    res = run(fig2.program, "*", "main:3@r")
    assert res.slice_lines() == {3, 7, 8, 11, 12, 15, 16}
    assert res.stats.havocs == 0


def test_return_after_untraced_call_depends_on_it(fig2):
    res = run(fig2.program, "main,f,h", "f:8@s")
    g = res.ddg
    ret = [n for n in g.nodes if n.stmt.method == "f" and n.stmt.line == 8]
    assert len(ret) == 1
    deps = {g.nodes[d].stmt.line for d in ret[0].data}
    assert deps == {7}


def test_empty_stream(fig2):
    res = slicer.analyze(StatActionStream([]), fig2.program)
    assert len(res.ddg) == 0 and not res.truncated


def test_single_assignment(parse):
    prog = parse("def main() {\n  x = 1;\n}\n")
    assert run(prog, "*", "main:2@x").slice_lines() == {2}


def test_loop_accumulation(parse):
    prog = parse("def main() {\n  s = 0;\n  i = 0;\n  while (i < 3) {\n    s = s + i;\n"
                 "    i = i + 1;\n  }\n  t = 9;\n  r = s;\n}\n")
    assert run(prog, "*", "main:9@r").slice_lines() == {2, 3, 4, 5, 6, 9}


def test_criterion_occurrence(parse):
    prog = parse("def main() {\n  i = 0;\n  y = 5;\n  while (i < 3) {\n    if (i == 2) {\n      i = y;\n    }\n"
                 "    i = i + 1;\n  }\n}\n")
    first = run(prog, "*", "main:8:0@i").slice_lines()
    last = run(prog, "*", "main:8@i").slice_lines()
    assert 3 not in first and 3 in last


def test_criterion_not_executed(parse):
    from abslice.errors import CriterionNotExecuted

    prog = parse("def main() {\n  x = 1;\n  if (x > 5) {\n    x = 2;\n  }\n}\n")
    res = run(prog, "*", "main:4@x")
    with pytest.raises(CriterionNotExecuted):
        res.slice()


def test_double_callback_uses_one_region():
    cp = corpus.load("double_callback")
    res = run(cp.program, cp.m2s, cp.criteria[0], cp.inputs)
    assert res.stats.callbacks == 2 and res.stats.havocs == 1


def test_exit_from_untraced_code_on_plain_assignment(parse):
    # the event after the callback run is an assignment in the traced caller
    prog = parse("def main() {\n  x = lib(1);\n  y = x;\n}\ndef lib(a) {\n  b = cb(a);\n  return b;\n}\n"
                 "def cb(z) {\n  return z;\n}\n")
    res = run(prog, "main,cb", "main:3@y")
    assert "exit-+Method_lib(x)" in res.labels
    assert res.slice_lines() >= {2, 3, 10}


def test_online_matches_offline(fig2):
    a = run(fig2.program, "main,f,h", "main:3@r")
    b = run(fig2.program, "main,f,h", "main:3@r", online=True)
    assert a.slice_lines() == b.slice_lines() and a.labels == b.labels


def test_truncated_run_is_sliced(parse):
    prog = parse("class A { field v: int; }\ndef main() {\n  x = 1;\n  y = x + 1;\n  z = null;\n  w = z.v;\n}\n")
    res, runres = slicer.slice_program(prog, "*", "main:4@y")
    assert runres.error is not None and res.truncated
    assert res.slice_lines() == {3, 4}


def test_without_type_filter_still_sound():
    for cp in corpus.load_all():
        for text in cp.criteria:
            crit = SliceCriterion.parse(text, cp.program)
            conc = oracle.concrete_slice(cp.program, crit, cp.inputs)
            res = run(cp.program, cp.m2s, text, cp.inputs, type_filter=False)
            focus = {s.line for s in conc.statements if s.method in set(cp.m2s)}
            assert focus <= res.slice_lines(), (cp.name, text)


def test_grammar_violation_on_corrupt_stream(fig2):
    from abslice import runtime
    from abslice.errors import GrammarViolation
    from abslice.runtime import ControlFlowEvent

    events, _ = runtime.run_traced(fig2.program, runtime.M2SConfig.of(fig2.program, "main,f,h"))
    events.insert(2, ControlFlowEvent("E", "h", 1))
    with pytest.raises(GrammarViolation):
        slicer.analyze(stream.open_stream(events, fig2.program), fig2.program)


def test_on_step_sees_every_model_operation(fig2):
    seen = []
    from abslice import runtime

    events, _ = runtime.run_traced(fig2.program, runtime.M2SConfig.of(fig2.program, "main,f,h"))
    slicer.Slicer(fig2.program, on_step=lambda sl, label, key: seen.append(label)).analyze(
        stream.open_stream(events, fig2.program))
    assert len(seen) == 13
