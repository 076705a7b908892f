import pytest

from abslice import corpus, lang, runtime, slicer


def test_loader_reads_headers(fig2):
    assert fig2.m2s == ["main", "f", "h"]
    assert fig2.criteria == ["main:3@r"]
    assert fig2.array_free


def test_inline_markers():
    cp = corpus.load("statics")
    assert cp.criteria == ["main:8@c", "main:9@o"]


def test_corpus_size():
    progs = corpus.load_all()
    assert len(progs) >= 25
    assert sum(cp.array_free for cp in progs) >= 20
    assert all(cp.criteria for cp in progs)


@pytest.mark.parametrize("name", corpus.names())
def test_expected_file_matches(name):
    cp = corpus.load(name)
    want = corpus.read_expected(name)
    assert want["m2s"] == cp.m2s
    got = corpus.compute_expected(cp)
    assert got["criteria"] == want["criteria"]


@pytest.mark.parametrize("name", corpus.names())
def test_runs_without_error(name):
    cp = corpus.load(name)
    assert runtime.run_full(cp.program, cp.inputs).error is None


def test_generator_is_deterministic():
    a, b = corpus.generate(11), corpus.generate(11)
    assert a.source == b.source and a.m2s == b.m2s and a.criterion == b.criterion
    assert corpus.generate(12).source != a.source


@pytest.mark.parametrize("seed", range(20))
def test_generated_cases_are_valid(seed):
    case = corpus.generate(seed)
    n = sum(1 for s in case.program.stmts.values() if s.kind != lang.ENTER)
    assert n <= 40
    assert runtime.run_full(case.program).error is None
    assert case.criterion.split(":")[0] in case.m2s
    res, _ = slicer.slice_program(case.program, case.m2s, case.criterion)
    assert res.slice()
