"""How untraced code is summarised, and how the summary is checked.

``havoc2`` calls an untraced ``lib`` that allocates two objects and hangs
them off its argument.  The analyzer never sees those statements.  It models
them with an UpdatedHeap region reachable from ``b``, so ``r = b.f.w`` still
depends on the call.  The script prints the slice, runs the denotation search
after every step, and then corrupts the model to show the search notices.

    python3 walkthroughs/havoc_regions.py
"""

from abslice import corpus, oracle, slicer
from abslice.ddg import SliceCriterion


def main():
    cp = corpus.load("havoc2")
    crit = SliceCriterion.parse(cp.criteria[0], cp.program)
    res, _ = slicer.slice_program(cp.program, cp.m2s, crit, cp.inputs)
    print(f"M2S = {cp.m2s}, criterion {crit}")
    print("focused slice :", sorted(res.slice_lines()))
    print("concrete slice:", sorted(oracle.concrete_slice(cp.program, crit, cp.inputs).lines))

    rc = oracle.check_replay(cp.program, cp.m2s, cp.inputs)
    print(f"\nwitness search: {rc.steps} steps, ok={rc.ok}")

    for mutation in ("region-singleton", "drop-edge", "split-lambda"):
        r = oracle.mutation_check(cp.program, mutation, cp.m2s, cp.inputs)
        if r.applied is None:
            print(f"{mutation:17} not applicable")
            continue
        verdict = "rejected" if r.rejected else "ACCEPTED"
        print(f"{mutation:17} at step {r.step} ({r.label}): {r.applied} -> {verdict}")


if __name__ == "__main__":
    main()
