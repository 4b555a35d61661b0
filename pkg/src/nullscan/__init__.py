"""Static detection of string-buffer overflows in a small C-like IR."""

from .detect import Diagnostic, collect
from .frontend import BofSyntaxError, UndeclaredPointer, load, parse, desugar
from .solver import FlowResult, solve

__all__ = [
    "BofSyntaxError", "Diagnostic", "FlowResult", "UndeclaredPointer",
    "analyze_text", "collect", "desugar", "load", "parse", "solve",
]
__version__ = "0.1.0"


def analyze_text(text: str, mode: str = "single", check_reads: bool = True):
    """Parse, solve and collect diagnostics for a program given as text."""
    g = load(text)
    fr = solve(g, mode=mode)
    return collect(fr, check_reads=check_reads)
