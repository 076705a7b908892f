"""Dynamic slicing with an abstract memory model for partially traced runs.

The pipeline is ``lang.parse`` → ``runtime.run_traced`` → ``stream.open_stream``
→ ``slicer.analyze``; :func:`slicer.slice_program` wires it together.  The
``oracle`` module holds the concrete ground truth used by the tests.
"""

from .ddg import SliceCriterion, SliceDocument
from .errors import AbsliceError
from .lang import Program, StmtId, Term, parse
from .runtime import M2SConfig, run_full, run_traced
from .slicer import AnalysisResult, Slicer, analyze, slice_program

__version__ = "0.1.0"

__all__ = [
    "AbsliceError", "AnalysisResult", "M2SConfig", "Program", "SliceCriterion", "SliceDocument",
    "Slicer", "StmtId", "Term", "analyze", "parse", "run_full", "run_traced", "slice_program",
]
