"""Command-line entry point: ``abslice trace|slice|compare|check|corpus``.

Exit codes: 0 success, 1 a check or expected-slice comparison failed,
2 usage error, 3 parse error, 4 runtime error in the interpreted program,
5 analysis error, 6 criterion never executed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus, lang, oracle, runtime, slicer, stream
from .ddg import SliceCriterion
from .errors import (AbsliceError, CriterionNotExecuted, MiniRuntimeError, MiniSyntaxError,
                     ResolutionError)

log = logging.getLogger("abslice")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
EXIT_PARSE, EXIT_RUNTIME, EXIT_ANALYSIS, EXIT_NOT_EXECUTED = 3, 4, 5, 6


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    """Everything one pipeline run needs, after flags and config are merged."""

    path: Path
    source: str
    program: lang.Program
    inputs: tuple[int, ...] = ()
    m2s: list[str] = field(default_factory=lambda: ["*"])
    criterion: str | None = None
    out: Path | None = None
    type_filter: bool = True
    online: bool = False
    seed: int | None = None


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in _split_list(text))
    except ValueError:
        raise UsageError(f"inputs must be integers, got {text!r}") from None


def read_config(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _truthy(v) -> bool:
    return str(v).lower() in ("1", "true", "yes", "on")


def resolve_program(text: str) -> Path:
    """A file path, or the name of a bundled corpus program."""
    p = Path(text)
    if p.exists():
        return p
    name = p.stem if p.suffix == ".mini" else p.name
    if name in corpus.names():
        return corpus.PROGRAMS / f"{name}.mini"
    raise UsageError(f"no such program: {text}")


def build_spec(args) -> RunSpec:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}

    def pick(name, default=None):
        v = getattr(args, name, None)
        return v if v is not None else cfg.get(name, default)

    prog_text = pick("program")
    if prog_text is None:
        raise UsageError("no program given")
    path = resolve_program(prog_text)
    source = path.read_text(encoding="utf-8")
    program = lang.parse(source)
    header = corpus.parse_corpus_source(path.stem, source)
    m2s_text = pick("m2s")
    m2s = _split_list(m2s_text) if m2s_text is not None else (header.m2s if _has_header(source, "m2s") else ["*"])
    inp = pick("input")
    inputs = _ints(inp) if inp is not None else header.inputs
    crit = pick("criterion")
    if crit is None and header.criteria:
        crit = header.criteria[0]
    seed = pick("seed")
    return RunSpec(
        path=path, source=source, program=program, inputs=inputs, m2s=m2s, criterion=crit,
        out=Path(pick("out")) if pick("out") else None,
        type_filter=not _truthy(pick("no_type_filter", False)),
        online=_truthy(pick("online", False)),
        seed=int(seed) if seed is not None else None,
    )


def _has_header(source: str, key: str) -> bool:
    return any(line.strip().startswith(f"// {key}:") for line in source.splitlines())


def _criterion(spec: RunSpec) -> SliceCriterion:
    if spec.criterion is None:
        raise UsageError("no criterion given (use --criterion method:line[@var])")
    try:
        return SliceCriterion.parse(spec.criterion, spec.program)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _m2s(spec: RunSpec) -> runtime.M2SConfig:
    try:
        return runtime.M2SConfig.of(spec.program, spec.m2s)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# commands


def cmd_trace(args) -> int:
    spec = build_spec(args)
    m2s = _m2s(spec)
    if args.full:
        trace = runtime.run_full(spec.program, spec.inputs, seed=spec.seed)
        if args.output:
            runtime.write_full_trace(trace, args.output)
        else:
            for a in trace.actions:
                print(f"{a.kind} {a.stmt} {a.occurrence}")
        run = trace.result
    else:
        events, run = runtime.run_traced(spec.program, m2s, spec.inputs, seed=spec.seed)
        if args.output:
            runtime.write_trace(events, args.output)
        elif args.compact:
            print(" ".join(e.describe() for e in events))
        else:
            for e in events:
                print(e)
        if args.observable:
            for text in stream.observable_trace(events, spec.program):
                print(text, file=sys.stderr if not args.output else sys.stdout)
    if run.error is not None:
        print(f"error: {run.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _expected_lines(path: str, criterion: str, mode: str) -> list[int]:
    p = Path(path)
    if p.suffix == ".json":
        data = json.loads(p.read_text(encoding="utf-8"))
        entries = data["criteria"]
        entry = entries.get(criterion) or next(iter(entries.values()))
        return entry[mode]
    return [int(t) for t in p.read_text(encoding="utf-8").split()]


def cmd_slice(args) -> int:
    spec = build_spec(args)
    crit = _criterion(spec)
    m2s = _m2s(spec)
    if args.trace:
        events = list(runtime.read_trace(args.trace))
        result = slicer.analyze(stream.open_stream(events, spec.program), spec.program, crit,
                                type_filter=spec.type_filter)
        run_error = None
    else:
        result, run = slicer.slice_program(spec.program, m2s, crit, spec.inputs, online=spec.online,
                                           seed=spec.seed, type_filter=spec.type_filter)
        run_error = run.error if run is not None else None
    doc = result.document()
    text = " ".join(str(n) for n in doc.lines)
    print(text)
    if spec.out is not None:
        spec.out.mkdir(parents=True, exist_ok=True)
        (spec.out / "slice.json").write_text(doc.to_json(spec.program) + "\n", encoding="utf-8")
        (spec.out / "slice.lines").write_text(doc.to_lines(), encoding="utf-8")
        (spec.out / f"{spec.path.stem}.sliced.txt").write_text(doc.annotate(spec.source), encoding="utf-8")
    if args.verbose:
        s = result.stats
        print(f"events={s.events} model_ops={s.model_ops} nodes={s.nodes} havocs={s.havocs} "
              f"callbacks={s.callbacks} strong_updates={s.strong_updates}", file=sys.stderr)
    if run_error is not None:
        print(f"error: {run_error} (sliced the trace up to the failure)", file=sys.stderr)
        return EXIT_RUNTIME
    if args.expect:
        mode = "concrete" if set(m2s.instrumented) == set(spec.program.methods) else "focused"
        want = _expected_lines(args.expect, spec.criterion, mode)
        if list(doc.lines) != list(want):
            print(f"mismatch against {args.expect} [{mode}]: expected {want}, got {doc.lines}", file=sys.stderr)
            return EXIT_FAILED
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = build_spec(args)
    crit = _criterion(spec)
    _m2s(spec)
    extended = _split_list(args.extended)
    report = oracle.compare(spec.program, spec.inputs, crit, spec.m2s, extended, name=spec.path.stem,
                            repeats=args.repeats)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(report.header())
        print(report.row())
    return EXIT_OK if report.soundness_ok else EXIT_FAILED


def cmd_check(args) -> int:
    spec = build_spec(args)
    m2s = spec.m2s if args.m2s is not None else ["*"]
    _m2s(RunSpec(spec.path, spec.source, spec.program, m2s=m2s))
    rc = oracle.check_replay(spec.program, m2s, spec.inputs, types=spec.type_filter, budget=args.budget)
    print(f"{spec.path.stem}: {rc.witnesses}/{rc.steps} steps with a witness, "
          f"{len(rc.failures)} failures, {rc.inconclusive} inconclusive")
    for step, label in rc.failures:
        print(f"  no denotation after step {step}: {label}")
    status = EXIT_OK if rc.ok else EXIT_FAILED
    if args.mutations:
        for name in oracle.MUTATIONS:
            mr = oracle.mutation_check(spec.program, name, m2s, spec.inputs, types=spec.type_filter,
                                       budget=args.budget)
            verdict = "n/a" if mr.applied is None else ("rejected" if mr.rejected else "accepted")
            print(f"  mutation {name:16} {verdict:9} {mr.applied or ''} {('@ ' + mr.label) if mr.label else ''}")
    return status


def cmd_corpus(args) -> int:
    if args.action == "list":
        for cp in corpus.load_all():
            print(f"{cp.name:18} m2s={','.join(cp.m2s)} input={list(cp.inputs)} criteria={cp.criteria}")
        return EXIT_OK
    if args.action == "generate":
        case = corpus.generate(args.seed if args.seed is not None else runtime.resolve_seed(None) or 0)
        print(f"// m2s: {','.join(case.m2s)}")
        print(f"// criterion: {case.criterion}")
        print(case.source, end="")
        return EXIT_OK
    bad = 0
    names = args.names or corpus.names()
    for name in names:
        cp = corpus.load(name)
        if args.update:
            corpus.write_expected(cp)
            print(f"{name:18} expected file written")
            continue
        want = corpus.read_expected(name)["criteria"]
        for text in cp.criteria:
            full, _ = slicer.slice_program(cp.program, "*", text, cp.inputs)
            foc, _ = slicer.slice_program(cp.program, cp.m2s, text, cp.inputs)
            got_full, got_foc = sorted(full.slice_lines()), sorted(foc.slice_lines())
            ok_full = got_full == want[text]["concrete"] or not cp.array_free and set(want[text]["concrete"]) <= set(got_full)
            ok_foc = got_foc == want[text]["focused"]
            sound = set(want[text]["concrete_focused"]) <= set(got_foc)
            status = "ok" if ok_full and ok_foc and sound else "FAIL"
            bad += status != "ok"
            print(f"{name:18} {text:24} full={'ok' if ok_full else got_full} "
                  f"focused={'ok' if ok_foc else got_foc} sound={sound} {status}")
    return EXIT_FAILED if bad else EXIT_OK


# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, criterion: bool = True) -> None:
    p.add_argument("program", nargs="?", help="program file or corpus program name")
    p.add_argument("--m2s", help="comma-separated methods to trace, '*' for all")
    p.add_argument("--input", help="comma-separated integer arguments of the entry method")
    if criterion:
        p.add_argument("--criterion", help="[Class.]method:line[:occ|last][@term]")
    p.add_argument("--config", help="key = value file supplying any of these options")
    p.add_argument("--seed", type=int, help="PRNG seed (default: $ABSLICE_SEED)")
    p.add_argument("--no-type-filter", action="store_true", default=None, help="disable the abstract type filter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abslice", description=__doc__.splitlines()[0])
    ap.add_argument("--log-level", default="WARNING", help="logging level")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="run a program and write its control-flow trace")
    _common(p, criterion=False)
    p.add_argument("-o", "--output", help="trace file (default: standard output)")
    p.add_argument("--full", action="store_true", help="write the full concrete action trace instead")
    p.add_argument("--compact", action="store_true", help="one line, EnterMain^0 S2^0 ... notation")
    p.add_argument("--observable", action="store_true", help="also print the observable action labels")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("slice", help="slice a program run (or a recorded trace)")
    _common(p)
    p.add_argument("--out", help="directory for slice.json, slice.lines and the annotated source")
    p.add_argument("--online", action="store_true", default=None, help="stream events while the program runs")
    p.add_argument("--trace", help="analyze this recorded trace file instead of running the program")
    p.add_argument("--expect", help="expected slice (corpus .json or whitespace-separated lines)")
    p.add_argument("--verbose", action="store_true", help="print analysis statistics to standard error")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("compare", help="focused vs extended instrumentation")
    _common(p)
    p.add_argument("--extended", default="*", help="extended M2S (default '*')")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check", help="search a denotation after every analysis step")
    _common(p, criterion=False)
    p.add_argument("--budget", type=int, default=200_000, help="search node budget per step")
    p.add_argument("--mutations", action="store_true", help="also run the model-corruption catalogue")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("corpus", help="bundled programs")
    p.add_argument("action", choices=["run", "list", "generate"])
    p.add_argument("names", nargs="*", help="restrict to these programs")
    p.add_argument("--update", action="store_true", help="rewrite the expected-slice files")
    p.add_argument("--seed", type=int, help="seed for 'generate'")
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"abslice: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MiniSyntaxError, ResolutionError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CriterionNotExecuted as exc:
        print(f"criterion not executed: {exc}", file=sys.stderr)
        return EXIT_NOT_EXECUTED
    except MiniRuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except AbsliceError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except OSError as exc:
        print(f"abslice: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
