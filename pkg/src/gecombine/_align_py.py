"""Pure-Python token alignment kernel (fallback for the compiled one).

Levenshtein DP over token ids with lexicographic objective: minimise edit
cost first (match 0, substitution/insertion/deletion 1), then maximise the
number of matches among equal-cost paths.  Both objectives are packed into
one integer per cell, ``cost * BIG - matches``, so a single ``min`` handles
the tie-break.  Backtracking prefers match > substitution > deletion >
insertion, which pins a unique alignment.
"""

from __future__ import annotations

from typing import Sequence

# 2**32 leaves plenty of headroom: matches < 2**32 and cost * BIG stays
# far below the int64 range for any realistic sentence length.
BIG = 1 << 32

OP_MATCH, OP_SUB, OP_DEL, OP_INS = 0, 1, 2, 3


def align_ops(src: Sequence[int], hyp: Sequence[int]) -> list[int]:
    """Align two id sequences; returns op codes in left-to-right order."""
    l, m = len(src), len(hyp)
    prev = list(range(0, (m + 1) * BIG, BIG)) if m else [0]
    rows = [prev]
    for i in range(1, l + 1):
        si = src[i - 1]
        cur = [i * BIG] + [0] * m
        for j in range(1, m + 1):
            diag = prev[j - 1] + (-1 if si == hyp[j - 1] else BIG)
            up = prev[j] + BIG
            left = cur[j - 1] + BIG
            best = diag if diag <= up else up
            if left < best:
                best = left
            cur[j] = best
        rows.append(cur)
        prev = cur

    ops: list[int] = []
    i, j = l, m
    while i > 0 or j > 0:
        v = rows[i][j]
        if i > 0 and j > 0 and src[i - 1] == hyp[j - 1] and rows[i - 1][j - 1] - 1 == v:
            ops.append(OP_MATCH)
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and rows[i - 1][j - 1] + BIG == v:
            ops.append(OP_SUB)
            i -= 1
            j -= 1
        elif i > 0 and rows[i - 1][j] + BIG == v:
            ops.append(OP_DEL)
            i -= 1
        else:
            ops.append(OP_INS)
            j -= 1
    ops.reverse()
    return ops
