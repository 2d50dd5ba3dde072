"""Token alignment with a compiled fast path and a pure-Python fallback.

The compiled kernel (``_align_fast``, built from Cython when a compiler is
available) and the pure kernel (``_align_py``) implement the identical
algorithm with identical tie-breaks, so the choice of backend never changes
results, only speed.
"""

from __future__ import annotations

from typing import Sequence

from gecombine import _align_py
from gecombine._align_py import OP_DEL, OP_INS, OP_MATCH, OP_SUB

try:
    from gecombine import _align_fast as _kernel

    _BACKEND = "compiled"
except ImportError:
    _kernel = _align_py
    _BACKEND = "pure"

__all__ = [
    "OP_MATCH",
    "OP_SUB",
    "OP_DEL",
    "OP_INS",
    "align",
    "backend_name",
]


def backend_name() -> str:
    """Name of the active alignment backend: "compiled" or "pure"."""
    return _BACKEND


def _intern(source: Sequence[str], hypothesis: Sequence[str]) -> tuple[list[int], list[int]]:
    ids: dict[str, int] = {}
    src = [ids.setdefault(t, len(ids)) for t in source]
    hyp = [ids.setdefault(t, len(ids)) for t in hypothesis]
    return src, hyp


def align(source: Sequence[str], hypothesis: Sequence[str]) -> list[int]:
    """Minimum-cost op sequence turning source into hypothesis.

    Costs are 0 for a match and 1 for substitution, deletion, and insertion.
    Among minimum-cost paths the one with the most matches is chosen, and
    remaining ties prefer match over substitution over deletion over
    insertion during backtracking, which keeps the result deterministic.

    Returns a list of op codes (OP_MATCH, OP_SUB, OP_DEL, OP_INS): reading
    left to right, match and substitution consume one token from each side,
    deletion consumes a source token, insertion a hypothesis token.
    """
    src, hyp = _intern(source, hypothesis)
    return _kernel.align_ops(src, hyp)
