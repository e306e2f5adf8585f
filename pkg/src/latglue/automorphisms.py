"""Lattice automorphisms, level-m congruence, and extension across a gluing.

Convention: a matrix ``g`` acts on row vectors, ``v -> v g``, so ``g`` is an
automorphism of ``L`` iff ``g A_L g^T == A_L``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Iterable, Sequence

from . import exact
from .gluing import Embedding
from .lattice import Lattice, discriminant_group, make_lattice


class PreconditionError(ValueError):
    pass


class ExtensionNotFound(RuntimeError):
    """No companion automorphism in the candidate list induced the required action."""


def _as_tuple(g) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(x) for x in row) for row in g)


def is_automorphism(L: Lattice, g: Sequence[Sequence[int]]) -> bool:
    if len(g) != L.dim or not exact.is_square(g):
        raise ValueError(f"expected a {L.dim}x{L.dim} matrix")
    return exact.congruent(g, L.gram) == L.matrix()


def congruence_level(L: Lattice, g: Sequence[Sequence[int]], m: int) -> bool:
    """``g == I mod m`` entrywise."""
    n = len(g)
    return all((g[i][j] - (i == j)) % m == 0 for i in range(n) for j in range(n))


def reflection(L: Lattice, v: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    """Reflection ``x -> x - 2 (x, v) / (v, v) v`` as an integer matrix."""
    nv = L.norm(v)
    if nv == 0:
        raise ValueError("cannot reflect in an isotropic vector")
    Gv = exact.vecmat(list(v), L.gram)  # (e_i, v) since G is symmetric
    rows = []
    for i in range(L.dim):
        c = Fraction(2 * Gv[i], nv)
        if c.denominator != 1:
            raise ValueError(f"reflection in {tuple(v)} is not integral")
        rows.append(tuple(int(i == j) - c.numerator * v[j] for j in range(L.dim)))
    return tuple(rows)


def short_vectors(L: Lattice, bound: int) -> dict[int, list[tuple[int, ...]]]:
    """All nonzero vectors with entries in ``[-bound, bound]``, grouped by norm.

    Within a norm, vectors are ordered by (sum of |entries|, lexicographic).
    """
    G = L.gram
    n = L.dim
    out: dict[int, list] = {}
    for v in product(range(-bound, bound + 1), repeat=n):
        if not any(v):
            continue
        nv = 0
        for i in range(n):
            if v[i]:
                row = G[i]
                nv += v[i] * sum(row[j] * v[j] for j in range(n) if v[j])
        out.setdefault(nv, []).append(v)
    for vs in out.values():
        vs.sort(key=lambda v: (sum(map(abs, v)), v))
    return out


def find_automorphisms(L: Lattice, bound: int, limit: int = 256) -> list[tuple[tuple[int, ...], ...]]:
    """A deterministic finite harvest of ``Aut(L)``.

    Contains the identity, ``-I``, every integral reflection in a vector of
    norm +-1 or +-2 with entries bounded by ``bound``, and up to ``limit``
    further elements found by backtracking over basis images with entries
    bounded by ``bound``.
    """
    n = L.dim
    G = L.gram
    I = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    found: list = [I, tuple(tuple(-x for x in r) for r in I)]
    seen = set(found)

    def keep(g):
        if g not in seen:
            seen.add(g)
            found.append(g)

    vecs = short_vectors(L, bound)
    for nv in (1, -1, 2, -2):
        for v in vecs.get(nv, ()):
            try:
                keep(reflection(L, v))
            except ValueError:
                pass

    cands = [vecs.get(G[i][i], []) for i in range(n)]
    rows: list = []
    rowG: list = []
    budget = [limit]

    def rec(i):
        if budget[0] <= 0:
            return
        if i == n:
            g = tuple(rows)
            if g not in seen:
                keep(g)
                budget[0] -= 1
            return
        for v in cands[i]:
            if all(sum(a * b for a, b in zip(rowG[j], v)) == G[j][i] for j in range(i)):
                rows.append(v)
                rowG.append(exact.vecmat(list(v), G))
                rec(i + 1)
                rows.pop()
                rowG.pop()
                if budget[0] <= 0:
                    return

    rec(0)
    return found


def induced_action(L: Lattice, g, D=None) -> list[tuple[int, ...]]:
    """Rows: coefficients of ``g``-image of each discriminant generator."""
    D = D or discriminant_group(L)
    return [D.coefficients(exact.vecmat(list(x), g)) for x in D.lifts]


@dataclass(frozen=True)
class ExtendedAut:
    source: tuple  # g on L
    companion: tuple  # h on K
    extension: tuple  # g (+) h on L (+) K
    conjugated: tuple  # action on the glued lattice, in glue_basis coordinates


def _signed_diagonals(m):
    for signs in product((1, -1), repeat=m):
        yield tuple(tuple(signs[i] if i == j else 0 for j in range(m)) for i in range(m))


def _signed_permutations(m):
    for perm in permutations(range(m)):
        for signs in product((1, -1), repeat=m):
            yield tuple(tuple(signs[i] if perm[i] == j else 0 for j in range(m)) for i in range(m))


def companion_candidates(K: Lattice, bound: int = 2) -> Iterable:
    """Identity, -I, signed diagonals, signed permutations, then a harvest."""
    m = K.dim
    seen = set()
    I = tuple(tuple(int(i == j) for j in range(m)) for i in range(m))
    sources = [[I, tuple(tuple(-x for x in r) for r in I)], _signed_diagonals(m), _signed_permutations(m)]
    for src in sources:
        for h in src:
            if h not in seen and is_automorphism(K, h):
                seen.add(h)
                yield h
    for h in find_automorphisms(K, bound):
        if h not in seen:
            seen.add(h)
            yield h


def conjugate(E: Embedding, ext) -> list:
    """``P ext P^{-1}``: the action of ``ext`` in the glued lattice's basis."""
    P = E.glue_basis
    return exact.matmul(exact.matmul(P, ext), exact.rat_inverse(P))


def extend_automorphism(
    E: Embedding, g, bound: int = 2, require_level2: bool = True
) -> ExtendedAut:
    """Extend ``g`` in ``Aut(L)`` to ``g (+) h`` preserving the glued lattice.

    ``h`` is the first candidate of ``companion_candidates`` whose action on
    ``Delta(K)`` matches ``phi g phi^-1``; with ``require_level2`` the
    conjugated matrix must also be ``== I mod 2``.
    """
    L, K = E.L, E.K
    g = _as_tuple(g)
    if not is_automorphism(L, g):
        raise PreconditionError("matrix is not an automorphism of L")
    if require_level2 and not congruence_level(L, g, 2):
        raise PreconditionError("automorphism is not level 2 (not == I mod 2)")
    DL, DK = discriminant_group(L), discriminant_group(K)
    images = E.glue_map.images
    act = induced_action(L, g, DL)
    # phi(x_i g) = sum_j act[i][j] phi(x_j)
    want = []
    for row in act:
        c = [0] * DK.rank
        for a, im in zip(row, images):
            for k in range(DK.rank):
                c[k] += a * im[k]
        want.append(tuple(x % d for x, d in zip(c, DK.factors)))
    lifts = [DK.element(im) for im in images]
    n = L.dim + K.dim
    for h in companion_candidates(K, bound):
        if any(DK.coefficients(exact.vecmat(list(y), h)) != w for y, w in zip(lifts, want)):
            continue
        ext = exact.block_diag(g, h)
        conj = conjugate(E, ext)
        if not exact.is_integral(conj):
            continue
        conj = exact.to_int(conj)
        if require_level2 and not congruence_level(E.glued, conj, 2):
            continue
        return ExtendedAut(g, h, _as_tuple(ext), _as_tuple(conj))
    raise ExtensionNotFound(f"no companion automorphism within bound {bound} induces the required action")


@dataclass(frozen=True)
class ExtensionVerdict:
    passed: bool
    integral: bool
    preserves_gram: bool
    level2: bool
    extension: ExtendedAut | None = None


def check_level2_extension(E: Embedding, g, bound: int = 2) -> ExtensionVerdict:
    """Check that a level-2 automorphism of ``L`` extends to a level-2
    automorphism of the glued lattice."""
    g = _as_tuple(g)
    if not is_automorphism(E.L, g) or not congruence_level(E.L, g, 2):
        raise PreconditionError("not an element of Aut(L)_(2)")
    X = extend_automorphism(E, g, bound)
    C = X.conjugated
    preserves = exact.congruent(C, E.glued.gram) == E.glued.matrix()
    level2 = congruence_level(E.glued, C, 2)
    return ExtensionVerdict(preserves and level2, True, preserves, level2, X)


# --------------------------------------------------------------------------
# the explicit diag(-7,1,1,1) example


EXAMPLE_L = (-7, 1, 1, 1)
EXAMPLE_K = (7, 1, 1)
EXAMPLE_GLUE = (Fraction(4, 7), 0, 0, 0, Fraction(3, 7), 0, 0)


def example_B() -> list:
    """Change of basis to an orthonormal basis ``{u', e1, e2, e3, v', e5, e6}``."""
    B = exact.to_fractions(exact.identity(7))
    B[0] = [Fraction(4, 7), 0, 0, 0, Fraction(-3, 7), 0, 0]
    B[4] = [Fraction(-3, 7), 0, 0, 0, Fraction(4, 7), 0, 0]
    return [[Fraction(x) for x in row] for row in B]


def example_pattern(gamma, case: int) -> list:
    """Closed 7x7 form of ``B gamma B^-1`` for ``gamma`` with first row
    ``(7a + 1, 7b, 7c, 7d)`` (case 1) or ``(7a - 1, 7b, 7c, 7d)`` (case 2)."""
    sgn = 1 if case == 1 else -1
    a = (gamma[0][0] - sgn) // 7
    b, c, d = (x // 7 for x in gamma[0][1:])
    rest = [list(r) for r in gamma[1:]]
    out = [[16 * a + sgn, 4 * b, 4 * c, 4 * d, 12 * a, 0, 0]]
    for r in rest:
        out.append([4 * r[0], r[1], r[2], r[3], 3 * r[0], 0, 0])
    out.append([-12 * a, -3 * b, -3 * c, -3 * d, -9 * a + sgn, 0, 0])
    out.append([0, 0, 0, 0, 0, sgn, 0])
    out.append([0, 0, 0, 0, 0, 0, 1])
    return out


def example_extension(gamma, case: int) -> list:
    tail = exact.identity(3) if case == 1 else exact.diag([-1, -1, 1])
    return exact.block_diag(gamma, tail)


def example_instances():
    """``(name, gamma, case)`` spot instances in ``Aut(diag(-7,1,1,1))``."""
    L = make_lattice(exact.diag(EXAMPLE_L))
    r = reflection(L, (1, 2, 1, 1))  # norm -1; first row (-13, -28, -14, -14)
    neg = tuple(tuple(-x for x in row) for row in r)
    return [
        ("case +1: identity (a=0)", _as_tuple(exact.identity(4)), 1),
        ("case +1: diag(1,-1,1,1) (a=0)", _as_tuple(exact.diag([1, -1, 1, 1])), 1),
        ("case -1: -I4 (a=0)", _as_tuple(exact.diag([-1, -1, -1, -1])), 2),
        ("case -1: diag(-1,1,1,1) (a=0)", _as_tuple(exact.diag([-1, 1, 1, 1])), 2),
        ("case +1: reflection in (1,2,1,1) (a=-2)", r, 1),
        ("case -1: minus that reflection (a=2)", neg, 2),
    ]


def verify_example_matrices() -> dict:
    """Exact checks of the matrix identities for the diag(-7,1,1,1) gluing.

    Returns a dict of named boolean checks.
    """
    B = example_B()
    Binv = exact.rat_inverse(B)
    L = make_lattice(exact.diag(EXAMPLE_L))
    checks = {}
    big = exact.diag(EXAMPLE_L + EXAMPLE_K)
    checks["B diag(-7,1,1,1,7,1,1) B^T = diag(-1,1,...,1)"] = exact.congruent(B, big) == exact.diag(
        [-1] + [1] * 6
    )
    I7 = exact.diag([-1] + [1] * 6)
    for name, gamma, case in example_instances():
        ok = is_automorphism(L, gamma)
        conj = exact.matmul(exact.matmul(B, example_extension(gamma, case)), Binv)
        ok = ok and conj == example_pattern(gamma, case)
        ok = ok and exact.is_integral(conj) and exact.congruent(conj, I7) == I7
        checks[name] = ok
    return checks
