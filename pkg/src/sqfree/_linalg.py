"""Small exact linear algebra over the rationals (Fraction entries)."""
from __future__ import annotations

from fractions import Fraction


def rref(rows):
    """Reduced row echelon form. Returns (matrix, pivot_columns)."""
    m = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def inverse(mat):
    n = len(mat)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red]


def solve_least(a_rows, b):
    """Exact solution of the (possibly overdetermined) system A x = b.

    Returns (x, rank, consistent). ``x`` is None when A lacks full column
    rank; ``consistent`` reports whether every equation holds exactly.
    """
    ncols = len(a_rows[0])
    aug = [list(r) + [Fraction(v)] for r, v in zip(a_rows, b)]
    red, piv = rref(aug)
    rank = sum(1 for p in piv if p < ncols)
    consistent = ncols not in piv
    if rank < ncols:
        return None, rank, consistent
    x = [red[i][ncols] for i in range(ncols)]
    return x, rank, consistent
