import json
import subprocess
import sys

import pytest

from abslice import cli, corpus


def run(*argv):
    return cli.main(list(argv))


def test_slice_fig2_focused(capsys, tmp_path):
    assert run("slice", "fig2.mini", "--m2s", "main,f,h", "--criterion", "Main.main:3@r", "--out", str(tmp_path)) == 0
    assert capsys.readouterr().out.split() == ["3", "6", "7", "8", "15", "16"]
    doc = json.loads((tmp_path / "slice.json").read_text())
    assert doc["lines"] == [3, 6, 7, 8, 15, 16]
    assert (tmp_path / "slice.lines").read_text().split() == ["3", "6", "7", "8", "15", "16"]
    annotated = (tmp_path / "fig2.sliced.txt").read_text().splitlines()
    assert annotated[5].startswith("*") and not annotated[10].startswith("*")


def test_slice_fig2_full(capsys):
    assert run("slice", "fig2.mini", "--m2s", "*", "--criterion", "Main.main:3@r") == 0
    assert capsys.readouterr().out.split() == ["3", "7", "8", "11", "12", "15", "16"]


def test_slice_expect_against_corpus_file(capsys):
    exp = str(corpus.expected_path("fig2"))
    assert run("slice", "fig2", "--criterion", "main:3@r", "--expect", exp) == 0
    assert run("slice", "fig2", "--m2s", "*", "--criterion", "main:3@r", "--expect", exp) == 0
    assert run("slice", "fig2", "--m2s", "main,f", "--criterion", "main:3@r", "--expect", exp) == cli.EXIT_FAILED


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.mini"
    bad.write_text("def main( {\n")
    assert run("slice", str(bad), "--criterion", "main:1") == cli.EXIT_PARSE
    ne = tmp_path / "ne.mini"
    ne.write_text("def main(n) {\n  x = 1;\n  if (n > 5) {\n    x = 2;\n  }\n}\n")
    assert run("slice", str(ne), "--input", "1", "--criterion", "main:4@x") == cli.EXIT_NOT_EXECUTED
    rt = tmp_path / "rt.mini"
    rt.write_text("class A { field v: int; }\ndef main() {\n  x = null;\n  y = x.v;\n}\n")
    assert run("slice", str(rt), "--criterion", "main:3@x") == cli.EXIT_RUNTIME
    assert run("slice", "fig2", "--criterion", "main:99@r") == cli.EXIT_USAGE
    assert run("slice", "fig2", "--m2s", "main,zz", "--criterion", "main:3@r") == cli.EXIT_USAGE
    assert run("slice", "no_such_program", "--criterion", "main:3") == cli.EXIT_USAGE
    err = capsys.readouterr().err
    assert "parse error" in err and "criterion not executed" in err


def test_analysis_error_exit_code(tmp_path):
    trace = tmp_path / "t.trace"
    trace.write_text("E main 0\nX f 0\n")
    assert run("slice", "fig2", "--criterion", "main:3@r", "--trace", str(trace)) == cli.EXIT_ANALYSIS


def test_trace_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("trace", "fig2", "--m2s", "main,f,h", "-o", str(a)) == 0
    assert run("trace", "fig2", "--m2s", "main,f,h", "-o", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run("trace", "fig2", "--compact") == 0
    assert capsys.readouterr().out.strip().startswith("EnterMain^0 S2^0 S3^0 EnterF^0")


def test_offline_trace_then_slice(tmp_path, capsys):
    t = tmp_path / "fig2.trace"
    run("trace", "fig2", "--m2s", "main,f,h", "-o", str(t))
    capsys.readouterr()
    assert run("slice", "fig2", "--trace", str(t), "--criterion", "main:3@r") == 0
    assert capsys.readouterr().out.split() == ["3", "6", "7", "8", "15", "16"]


def test_online_flag(capsys):
    assert run("slice", "fig2", "--online", "--criterion", "main:3@r") == 0
    assert capsys.readouterr().out.split() == ["3", "6", "7", "8", "15", "16"]


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# batch run\nprogram = fig2\nm2s = *\ncriterion = main:3@r\n")
    assert run("slice", "--config", str(cfg)) == 0
    assert capsys.readouterr().out.split() == ["3", "7", "8", "11", "12", "15", "16"]
    # flags win over the file
    assert run("slice", "--config", str(cfg), "--m2s", "main,f,h") == 0
    assert capsys.readouterr().out.split() == ["3", "6", "7", "8", "15", "16"]


def test_compare(capsys):
    assert run("compare", "fig2", "--json", "--repeats", "1") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["soundness_ok"] is True and rep["precision_loss"] == pytest.approx(0.2)


def test_check_three_deep_calls(capsys):
    assert run("check", "callchain3") == 0
    out = capsys.readouterr().out
    assert "15/15 steps with a witness, 0 failures" in out


def test_check_mutations(capsys):
    assert run("check", "linkedlist", "--mutations") == 0
    out = capsys.readouterr().out
    assert out.count("rejected") >= 4 and "accepted" not in out


def test_corpus_run_and_list(capsys):
    assert run("corpus", "run", "fig2", "statics") == 0
    assert "FAIL" not in capsys.readouterr().out
    assert run("corpus", "list") == 0
    assert "deep_library" in capsys.readouterr().out
    assert run("corpus", "generate", "--seed", "3") == 0
    assert capsys.readouterr().out.startswith("// m2s:")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "abslice", "slice", "fig2", "--criterion", "main:3@r"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["3", "6", "7", "8", "15", "16"]


def test_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("ABSLICE_SEED", "5")
    assert run("corpus", "generate") == 0
    first = capsys.readouterr().out
    assert run("corpus", "generate", "--seed", "5") == 0
    assert capsys.readouterr().out == first
