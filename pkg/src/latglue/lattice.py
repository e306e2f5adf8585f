"""Integral lattices given by Gram matrices, their duals and discriminant forms."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Sequence

from . import exact


class LatticeError(ValueError):
    """Invalid Gram matrix (non-square, non-symmetric, non-integral, singular)."""


@dataclass(frozen=True)
class Lattice:
    """An integral lattice ``L`` with inner product matrix ``gram``.

    Coordinates are row vectors in the basis of ``L``; ``(x, y) = x G y^T``.
    """

    gram: tuple[tuple[int, ...], ...]
    name: str | None = field(default=None, compare=False)
    det: int = field(init=False, compare=False)
    signature: tuple[int, int] = field(init=False, compare=False)

    def __post_init__(self):
        g = self.gram
        if not exact.is_square(g):
            raise LatticeError("Gram matrix must be square")
        if not exact.is_symmetric(g):
            raise LatticeError("Gram matrix must be symmetric")
        if any(type(x) is not int for row in g for x in row):
            raise LatticeError("Gram matrix must have integer entries")
        d = exact.det_exact(g)
        if d == 0:
            raise LatticeError("Gram matrix is singular (degenerate form)")
        object.__setattr__(self, "det", d)
        object.__setattr__(self, "signature", exact.signature(g) if g else (0, 0))

    @property
    def dim(self) -> int:
        return len(self.gram)

    def matrix(self) -> list[list[int]]:
        return exact.copy(self.gram)

    def inner(self, x: Sequence, y: Sequence):
        G = self.gram
        return sum(x[i] * G[i][j] * y[j] for i in range(len(x)) for j in range(len(y)) if x[i] and y[j])

    def norm(self, x: Sequence):
        return self.inner(x, x)

    def is_odd(self) -> bool:
        return any(self.gram[i][i] % 2 for i in range(self.dim))

    def is_unimodular(self) -> bool:
        return abs(self.det) == 1

    def is_positive_definite(self) -> bool:
        return self.signature == (self.dim, 0)


def make_lattice(gram: Sequence[Sequence[int]], name: str | None = None) -> Lattice:
    rows = []
    for row in gram:
        r = []
        for x in row:
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise LatticeError("Gram matrix must have integer entries")
                x = x.numerator
            if isinstance(x, bool) or not isinstance(x, int):
                raise LatticeError(f"Gram entry {x!r} is not an integer")
            r.append(int(x))
        rows.append(tuple(r))
    return Lattice(tuple(rows), name=name)


def standard_lorentzian(n: int) -> Lattice:
    """The odd unimodular lattice ``I_{n,1}`` with form ``-x0^2 + x1^2 + ... + xn^2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return make_lattice(exact.diag([-1] + [1] * n), name=f"I_{n},1")


def direct_sum(L1: Lattice, L2: Lattice) -> Lattice:
    return make_lattice(exact.block_diag(L1.gram, L2.gram))


def negate(L: Lattice) -> Lattice:
    return make_lattice([[-x for x in row] for row in L.gram])


def sublattice(L: Lattice, rows: Sequence[Sequence[int]]) -> tuple[Lattice, int]:
    """Sublattice spanned by ``rows`` (coordinates in ``L``) and its index."""
    if len(rows) != L.dim or not exact.is_square(rows):
        raise LatticeError("sublattice basis must be a square matrix of full rank")
    d = exact.det_exact(rows)
    if d == 0:
        raise LatticeError("sublattice basis is singular")
    S = make_lattice(exact.congruent(rows, L.gram))
    index = abs(d)
    assert S.det == index**2 * L.det
    return S, index


@dataclass(frozen=True)
class DiscriminantGroup:
    """``L*/L`` as a product of cyclic groups ``Z/d_1 x ... x Z/d_k``.

    ``lifts[i]`` is a representative of the i-th generator in ``L`` coordinates,
    reduced into ``[0, 1)``.  ``coords`` maps a dual vector ``w`` to its
    generator coefficients: ``(w * coords)[i] mod d_i``.
    """

    factors: tuple[int, ...]
    lifts: tuple[tuple[Fraction, ...], ...]
    coords: tuple[tuple[Fraction, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def order(self) -> int:
        return prod(self.factors)

    def coefficients(self, w: Sequence) -> tuple[int, ...]:
        """Generator coefficients of a dual vector ``w``."""
        z = exact.vecmat(list(w), self.coords) if self.coords and self.factors else []
        out = []
        for zi, d in zip(z, self.factors):
            zi = Fraction(zi)
            if zi.denominator != 1:
                raise ValueError("vector is not in the dual lattice")
            out.append(zi.numerator % d)
        return tuple(out)

    def element(self, coeffs: Sequence[int]) -> tuple[Fraction, ...]:
        """Reduced lift of ``sum coeffs[i] * g_i``."""
        n = len(self.coords)
        v = [Fraction(0)] * n
        for c, g in zip(coeffs, self.lifts):
            for k in range(n):
                v[k] += c * g[k]
        return tuple(x - (x.numerator // x.denominator) for x in v)

    def elements(self):
        """All coefficient vectors, lexicographic."""
        from itertools import product

        return product(*[range(d) for d in self.factors])


def frac_part(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def discriminant_group(L: Lattice) -> DiscriminantGroup:
    # L* = Z^n G^{-1} = {z D^{-1} U}, with U G V = D
    D, U, _ = exact.snf(L.matrix())
    Uinv = exact.rat_inverse(U)
    n = L.dim
    factors, lifts, cols = [], [], []
    for i in range(n):
        d = D[i][i]
        if d == 1:
            continue
        factors.append(d)
        lifts.append(tuple(frac_part(Fraction(x, d)) for x in U[i]))
        cols.append([Uinv[k][i] * d for k in range(n)])
    coords = tuple(tuple(r) for r in exact.transpose(cols)) if cols else tuple(() for _ in range(n))
    return DiscriminantGroup(tuple(factors), tuple(lifts), coords)


@dataclass(frozen=True)
class DiscForm:
    """Q/Z-valued bilinear form on the generators; ``norms`` is its diagonal."""

    pairings: tuple[tuple[Fraction, ...], ...]

    @property
    def norms(self) -> tuple[Fraction, ...]:
        return tuple(self.pairings[i][i] for i in range(len(self.pairings)))

    def value(self, a: Sequence[int], b: Sequence[int]) -> Fraction:
        P = self.pairings
        return frac_part(sum((a[i] * b[j] * P[i][j] for i in range(len(a)) for j in range(len(b)) if a[i] and b[j]), Fraction(0)))


def discriminant_form(L: Lattice, D: DiscriminantGroup | None = None) -> DiscForm:
    if D is None:
        D = discriminant_group(L)
    G = L.gram
    n = L.dim
    P = []
    for x in D.lifts:
        xG = [sum(x[i] * G[i][j] for i in range(n)) for j in range(n)]
        P.append(tuple(frac_part(sum(a * b for a, b in zip(xG, y))) for y in D.lifts))
    return DiscForm(tuple(P))


def is_ssf(L: Lattice) -> tuple[bool, int]:
    """Strongly square-free test; returns ``(flag, rank of the discriminant group)``."""
    from sympy import factorint

    D = discriminant_group(L)
    squarefree = all(max(factorint(d).values()) == 1 for d in D.factors)
    return (squarefree and 2 * D.rank <= L.dim), D.rank


def lattice_from_json(data) -> Lattice:
    if not isinstance(data, dict) or "gram" not in data:
        raise LatticeError('lattice JSON must be an object with a "gram" field')
    gram = data["gram"]
    if not isinstance(gram, list) or not all(isinstance(r, list) for r in gram):
        raise LatticeError('"gram" must be a list of integer rows')
    return make_lattice(gram, name=data.get("name"))


def lattice_to_json(L: Lattice) -> dict:
    out = {"gram": L.matrix()}
    if L.name:
        out["name"] = L.name
    return out


def load_lattice(path) -> Lattice:
    with open(path) as fh:
        return lattice_from_json(json.load(fh))
