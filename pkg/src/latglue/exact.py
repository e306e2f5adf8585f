"""Exact integer / rational matrix kernel.

Matrices are plain nested lists (row-major) of ``int`` or ``fractions.Fraction``.
Every routine copies its input; nothing here mutates caller data.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Sequence

Matrix = list  # list[list[int | Fraction]]


class SingularMatrixError(ValueError):
    pass


class SnfResult(NamedTuple):
    D: Matrix
    U: Matrix
    V: Matrix


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def copy(M: Sequence[Sequence]) -> Matrix:
    return [list(row) for row in M]


def transpose(M: Sequence[Sequence]) -> Matrix:
    return [list(col) for col in zip(*M)] if M else []


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def vecmat(v: Sequence, M: Sequence[Sequence]) -> list:
    return [sum(v[i] * M[i][j] for i in range(len(v))) for j in range(len(M[0]))] if M else []


def congruent(P: Sequence[Sequence], G: Sequence[Sequence]) -> Matrix:
    """Return ``P * G * P^T``."""
    return matmul(matmul(P, G), transpose(P))


def block_diag(*blocks: Sequence[Sequence]) -> Matrix:
    n = sum(len(b) for b in blocks)
    out = [[0] * n for _ in range(n)]
    k = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, x in enumerate(row):
                out[k + i][k + j] = x
        k += len(b)
    return out


def diag(entries: Sequence) -> Matrix:
    return block_diag(*[[[x]] for x in entries])


def is_square(M: Sequence[Sequence]) -> bool:
    return all(len(row) == len(M) for row in M)


def is_symmetric(M: Sequence[Sequence]) -> bool:
    return is_square(M) and all(M[i][j] == M[j][i] for i in range(len(M)) for j in range(i))


def is_integral(M: Sequence[Sequence]) -> bool:
    return all(Fraction(x).denominator == 1 for row in M for x in row)


def to_int(M: Sequence[Sequence]) -> Matrix:
    out = []
    for row in M:
        r = []
        for x in row:
            x = Fraction(x)
            if x.denominator != 1:
                raise ValueError(f"non-integral entry {x}")
            r.append(x.numerator)
        out.append(r)
    return out


def to_fractions(M: Sequence[Sequence]) -> Matrix:
    return [[Fraction(x) for x in row] for row in M]


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``x*a + y*b == g == gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def det_exact(M: Sequence[Sequence]) -> int | Fraction:
    """Determinant by fraction-free Bareiss elimination.

    Integer input gives an ``int``; rational input is cleared to a common
    denominator first, so the result is exact either way.
    """
    if not is_square(M):
        raise ValueError("determinant of a non-square matrix")
    n = len(M)
    if n == 0:
        return 1
    if all(type(x) is int for row in M for x in row):
        den = 1
        A = [list(row) for row in M]
    else:
        den = common_denominator(M)
        A = [[int(Fraction(x) * den) for x in row] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    d = sign * A[n - 1][n - 1]
    if den == 1:
        return d
    return Fraction(d, den**n)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def hnf(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row Hermite normal form.

    Returns ``(H, U)`` with ``U`` unimodular and ``U * M == H``.  Pivots are
    positive, entries above each pivot lie in ``[0, pivot)``, zero rows are last.
    """
    A = copy(M)
    m = len(A)
    n = len(A[0]) if m else 0
    U = identity(m)
    r = 0
    for c in range(n):
        if r >= m:
            break
        for i in range(r + 1, m):
            b = A[i][c]
            if b == 0:
                continue
            a = A[r][c]
            g, x, y = xgcd(a, b)
            p, q = a // g, b // g
            # [[x, y], [-q, p]] has determinant 1
            for T in (A, U):
                ri, rr = T[i], T[r]
                T[r] = [x * s + y * t for s, t in zip(rr, ri)]
                T[i] = [-q * s + p * t for s, t in zip(rr, ri)]
        if A[r][c] == 0:
            continue
        if A[r][c] < 0:
            A[r] = [-x for x in A[r]]
            U[r] = [-x for x in U[r]]
        piv = A[r][c]
        for i in range(r):
            f = A[i][c] // piv
            if f:
                A[i] = [s - f * t for s, t in zip(A[i], A[r])]
                U[i] = [s - f * t for s, t in zip(U[i], U[r])]
        r += 1
    return A, U


def snf(M: Sequence[Sequence[int]]) -> SnfResult:
    """Smith normal form ``U * M * V == D`` with ``d_1 | d_2 | ...``, ``d_i >= 1``."""
    A = copy(M)
    m = len(A)
    n = len(A[0]) if m else 0
    U = identity(m)
    V = identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):
        A[dst] = [a - f * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a - f * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, f):
        for row in A:
            row[dst] -= f * row[src]
        for row in V:
            row[dst] -= f * row[src]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            swap_rows(t, best[0])
            swap_cols(t, best[1])
            piv = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, A[i][t] // piv)
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, A[t][j] // piv)
            if any(A[i][t] for i in range(t + 1, m)) or any(A[t][j] for j in range(t + 1, n)):
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % piv),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, -1)
        if A[t][t] < 0:
            # sign goes to V so U keeps the dual-lattice generators positive
            for row in A:
                row[t] = -row[t]
            for row in V:
                row[t] = -row[t]
    return SnfResult(A, U, V)


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    D = snf(M).D
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0)) if D[i][i]]


def signature(G: Sequence[Sequence]) -> tuple[int, int]:
    """Exact inertia ``(r, s)`` of a symmetric rational matrix.

    Symmetric congruence pivoting over Q; when the remaining diagonal is zero
    the pair ``(i, j)`` with ``G[i][j] != 0`` is merged into ``e_i + e_j``.
    """
    if not is_symmetric(G):
        raise ValueError("signature of a non-symmetric matrix")
    A = to_fractions(G)
    n = len(A)
    r = s = 0
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][i] != 0), None)
        if piv is None:
            off = next(((i, j) for i in range(k, n) for j in range(i + 1, n) if A[i][j] != 0), None)
            if off is None:
                raise SingularMatrixError("degenerate form")
            i, j = off
            for c in range(n):
                A[i][c] += A[j][c]
            for c in range(n):
                A[c][i] += A[c][j]
            piv = i
        A[k], A[piv] = A[piv], A[k]
        for row in A:
            row[k], row[piv] = row[piv], row[k]
        p = A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / p
            if f:
                for c in range(k, n):
                    A[i][c] -= f * A[k][c]
                for c in range(k, n):
                    A[c][i] = A[i][c]
        if p > 0:
            r += 1
        else:
            s += 1
    return r, s


def rat_inverse(M: Sequence[Sequence]) -> Matrix:
    """Inverse over Q by Gauss-Jordan elimination."""
    if not is_square(M):
        raise ValueError("inverse of a non-square matrix")
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            raise SingularMatrixError("singular matrix")
        A[k], A[piv] = A[piv], A[k]
        p = A[k][k]
        A[k] = [x / p for x in A[k]]
        for i in range(n):
            if i != k and A[i][k] != 0:
                f = A[i][k]
                A[i] = [a - f * b for a, b in zip(A[i], A[k])]
    return [row[n:] for row in A]


def solve_left(v: Sequence, B: Sequence[Sequence]) -> list[Fraction]:
    """Solve ``z * B == v`` for square nonsingular ``B``."""
    return vecmat(v, rat_inverse(B))


def common_denominator(M: Sequence[Sequence]) -> int:
    den = 1
    for row in M:
        for x in row:
            q = Fraction(x).denominator
            den = den * q // _gcd(den, q)
    return den


def left_kernel(M: Sequence[Sequence]) -> Matrix:
    """Integer basis of ``{z in Z^m : z * M == 0}`` for a rational matrix ``M``."""
    den = common_denominator(M)
    A = [[int(Fraction(x) * den) for x in row] for row in M]
    H, U = hnf(A)
    return [U[i] for i, row in enumerate(H) if not any(row)]


def mod_matrix(M: Sequence[Sequence[int]], m: int) -> Matrix:
    return [[x % m for x in row] for row in M]
