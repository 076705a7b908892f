"""Focused versus full instrumentation on a library-heavy program.

``deep_library`` spends almost all of its time in methods outside the focus
set.  For growing inputs this prints the table the ``compare`` command prints:
executed statements, slice size, analysis time, speedup and precision loss.

    python3 walkthroughs/focus_tradeoff.py [n ...]
"""

import sys

from abslice import corpus, oracle
from abslice.ddg import SliceCriterion


def main(argv):
    sizes = [int(a) for a in argv] or [10, 100, 300]
    cp = corpus.load("deep_library")
    crit = SliceCriterion.parse(cp.criteria[0], cp.program)
    print(f"M2S = {{{', '.join(cp.m2s)}}}, criterion {crit}\n")
    print(f"{'n':>5} {oracle.ComparisonReport.header()}  sound")
    for n in sizes:
        rep = oracle.compare(cp.program, (n,), crit, cp.m2s, "*", name=cp.name, repeats=3)
        print(f"{n:>5} {rep.row()}  {rep.soundness_ok}")


if __name__ == "__main__":
    main(sys.argv[1:])
