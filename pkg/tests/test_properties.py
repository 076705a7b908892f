"""Property tests over generated programs and random terms."""

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from abslice import corpus, lang, oracle, runtime, slicer, stream
from abslice.ddg import SliceCriterion
from abslice.runtime import M2SConfig

seeds = st.integers(min_value=10_000, max_value=10**6)
fast = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@fast
@given(seeds)
def test_focused_slice_covers_concrete(seed):
    case = corpus.generate(seed)
    crit = SliceCriterion.parse(case.criterion, case.program)
    conc = oracle.concrete_slice(case.program, crit, case.inputs)
    res, _ = slicer.slice_program(case.program, case.m2s, crit, case.inputs)
    focus = set(case.m2s)
    want = {s for s in conc.statements if s.method in focus}
    assert want <= {s for s in res.slice() if s.method in focus}


@fast
@given(seeds)
def test_full_instrumentation_is_exact_on_generated(seed):
    case = corpus.generate(seed, arrays=False)
    crit = SliceCriterion.parse(case.criterion, case.program)
    res, _ = slicer.slice_program(case.program, "*", crit, case.inputs)
    assert res.slice_lines() == oracle.concrete_slice(case.program, crit, case.inputs).lines


@fast
@given(seeds, st.data())
def test_generated_traces_are_grammatical(seed, data):
    case = corpus.generate(seed)
    methods = sorted(case.program.methods)
    chosen = data.draw(st.lists(st.sampled_from(methods), unique=True))
    m2s = ",".join(chosen) if chosen else "main"
    events, _ = runtime.run_traced(case.program, M2SConfig.of(case.program, m2s), case.inputs)
    stream.recognize(stream.classify(stream.lift(events, case.program), case.program))


idents = st.from_regex(r"[a-z][a-z0-9]{0,3}", fullmatch=True).filter(lambda s: s not in lang.KEYWORDS)


@given(idents, st.lists(st.one_of(idents, st.just("[]")), max_size=4))
def test_term_text_round_trips(base, fields):
    t = lang.Term(base, tuple(fields))
    assert lang.Term.parse(str(t)) == t
