"""Unimodular overlattices ``L (+)_G K`` built by gluing along an anti-isometry."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd, prod
from typing import Iterator, Sequence

from . import exact
from .genus import (
    GenusSpec,
    JordanBlock,
    PadicSymbol,
    genus_exists,
    kronecker2,
    legendre,
    negate_symbol,
    p_excess,
    padic_symbol,
    relevant_primes,
    valuation,
)
from .lattice import (
    DiscForm,
    DiscriminantGroup,
    Lattice,
    discriminant_form,
    discriminant_group,
    make_lattice,
)

DEFAULT_BUDGET = 64


class GluingError(Exception):
    stage = "glue"

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info

    def __str__(self):
        return f"[{self.stage}] {self.args[0]}"


class CompanionSpecError(GluingError):
    stage = "spec"


class SearchExhausted(GluingError):
    stage = "search"


class AntiIsometryError(GluingError):
    stage = "anti-isometry"


class VerificationError(GluingError):
    stage = "verify"


def companion_dim(delta: int) -> int:
    return max(delta + 1, 3)


# --------------------------------------------------------------------------
# the companion's local data


def companion_spec(L: Lattice) -> GenusSpec:
    """Genus of a positive definite ``K`` whose discriminant form is ``-q_L``.

    Raises ``CompanionSpecError`` for unimodular input and for even
    determinant when the 2-part of the discriminant group is not 2-elementary.
    """
    if L.is_unimodular():
        raise CompanionSpecError("lattice is unimodular; no companion needed")
    r, s = L.signature
    d = (-1) ** s * L.det
    DL = discriminant_group(L)
    m = companion_dim(DL.rank)
    alpha = valuation(d, 2)
    if alpha and any(f % 4 == 0 for f in DL.factors):
        raise CompanionSpecError(
            "2-part of the discriminant group is not 2-elementary; "
            "pass to a strongly square-free lattice first",
            factors=DL.factors,
        )
    if alpha:
        two = [b for b in padic_symbol(L, 2).blocks if b.exponent == 1]
        if two and two[0].type_ii:
            # the companion's scale-2 constituent is type I, so its discriminant
            # 2-part has an element of norm 1/2; L's has only norms 0
            raise CompanionSpecError(
                "scale-2 Jordan constituent of L is type II (even); the companion "
                "genus [1 2]_t cannot carry an anti-isometry",
                factors=DL.factors,
            )
    symbols: dict[int, PadicSymbol] = {}
    excess = 0
    for p in relevant_primes(d):
        if p == 2:
            continue
        neg = negate_symbol(padic_symbol(L, p))
        upper = [b for b in neg.blocks if b.exponent > 0]
        a = d // p ** valuation(d, p)
        eps = legendre(a, p)
        for b in upper:
            eps *= b.sign
        n1 = m - sum(b.dim for b in upper)
        sym = PadicSymbol(p, (JordanBlock(p, 0, n1, eps),) + tuple(upper))
        symbols[p] = sym
        excess += p_excess(sym)
    t = (m + excess) % 8
    if alpha == 0:
        symbols[2] = PadicSymbol(2, (JordanBlock(2, 0, m, kronecker2(d), oddity=t),))
    else:
        a = d // 2**alpha
        symbols[2] = PadicSymbol(
            2,
            (
                JordanBlock(2, 0, m - alpha, kronecker2(a), oddity=t),
                JordanBlock(2, 1, alpha, 1, oddity=0),
            ),
        )
    spec = GenusSpec((m, 0), d, dict(sorted(symbols.items())))
    verdict = genus_exists(spec)
    if not verdict:
        raise CompanionSpecError(f"companion genus fails {verdict.violations}")
    return spec


# --------------------------------------------------------------------------
# candidate enumeration


def _diagonal_candidates(d: int, m: int, bound: int) -> Iterator[tuple[int, ...]]:
    def rec(rest, k, lo):
        if k == 1:
            if lo <= rest <= bound:
                yield (rest,)
            return
        a = lo
        while a**k <= rest and a <= bound:
            if rest % a == 0:
                for tail in rec(rest // a, k - 1, a):
                    yield (a,) + tail
            a += 1

    yield from rec(d, m, 1)


def _general_candidates(d: int, m: int, bound: int) -> Iterator[list[list[int]]]:
    """Reduced positive definite Grams of determinant ``d``, non-diagonal,
    in lexicographic order of the row-major upper triangle.

    Only forms with ``a_11 <= ... <= a_mm``, ``|2 a_ij| <= a_ii`` and
    ``prod a_ii <= (4/3)^(m(m-1)/2) d`` are produced.
    """
    cells = [(i, j) for i in range(m) for j in range(i, m)]
    cap = Fraction(4, 3) ** (m * (m - 1) // 2) * d
    A = [[0] * m for _ in range(m)]

    def rec(k, diag_prod):
        i, j = cells[k]
        if k == len(cells) - 1:
            # det is affine in the last diagonal entry: solve for it
            A[i][i] = 0
            base = exact.det_exact(A)
            minor = exact.det_exact([row[:i] for row in A[:i]])
            x, rem = divmod(d - base, minor)
            lo = A[i - 1][i - 1] if i else 1
            if rem == 0 and lo <= x <= bound and diag_prod * x <= cap:
                A[i][i] = x
                if any(A[a][b] for a in range(m) for b in range(a + 1, m)):
                    yield exact.copy(A)
            A[i][i] = 0
            return
        if i == j:
            lo = A[i - 1][i - 1] if i else 1
            x = lo
            while x <= bound and diag_prod * x * x ** (m - 1 - i) <= cap:
                A[i][i] = x
                if exact.det_exact([row[: i + 1] for row in A[: i + 1]]) > 0:
                    yield from rec(k + 1, diag_prod * x)
                x += 1
            A[i][i] = 0
        else:
            h = min(A[i][i] // 2, bound)
            for x in range(-h, h + 1):
                A[i][j] = A[j][i] = x
                yield from rec(k + 1, diag_prod)
            A[i][j] = A[j][i] = 0

    yield from rec(0, 1)


def candidate_grams(d: int, m: int, bound: int) -> Iterator[list[list[int]]]:
    """Deterministic candidate order: diagonal forms first, then reduced forms."""
    for t in _diagonal_candidates(d, m, bound):
        yield exact.diag(t)
    yield from _general_candidates(d, m, bound)


# --------------------------------------------------------------------------
# anti-isometries


@dataclass(frozen=True)
class GlueMap:
    """``images[i]`` = coefficients over the generators of ``Delta(K)`` of
    the image of the i-th generator of ``Delta(L)``."""

    images: tuple[tuple[int, ...], ...]


def _element_order(c: Sequence[int], factors: Sequence[int]) -> int:
    o = 1
    for ci, d in zip(c, factors):
        k = d // gcd(ci, d)
        o = o * k // gcd(o, k)
    return o


def _is_bijective(images, factors) -> bool:
    k = len(factors)
    if k == 0:
        return True
    rows = [list(c) for c in images] + [[d * int(i == j) for j in range(k)] for i, d in enumerate(factors)]
    H, _ = exact.hnf(rows)
    return prod(H[i][i] for i in range(k)) == 1


def anti_isometry(
    DL: DiscriminantGroup, FL: DiscForm, DK: DiscriminantGroup, FK: DiscForm
) -> GlueMap:
    """First (lexicographic) isomorphism ``Delta(L) -> Delta(K)`` negating the Q/Z form."""
    if DL.factors != DK.factors:
        raise AntiIsometryError(f"discriminant groups differ: {DL.factors} vs {DK.factors}")
    if not DL.factors:
        return GlueMap(())
    elems = list(DK.elements())
    by_order: dict[int, list] = {}
    for c in elems:
        by_order.setdefault(_element_order(c, DK.factors), []).append(c)
    target = [[(-x) % 1 for x in row] for row in FL.pairings]
    n = DL.rank
    chosen: list = []

    def rec(i):
        if i == n:
            return _is_bijective(chosen, DK.factors)
        for c in by_order.get(DL.factors[i], ()):
            if FK.value(c, c) != target[i][i]:
                continue
            if any(FK.value(c, chosen[j]) != target[i][j] for j in range(i)):
                continue
            chosen.append(c)
            if rec(i + 1):
                return True
            chosen.pop()
        return False

    if not rec(0):
        raise AntiIsometryError("no anti-isometry between the discriminant forms")
    return GlueMap(tuple(tuple(c) for c in chosen))


def companion_search(L: Lattice, budget: int = DEFAULT_BUDGET, spec: GenusSpec | None = None):
    """Find ``(K, phi)`` for the companion genus; ``budget`` bounds Gram entries."""
    if spec is None:
        spec = companion_spec(L)
    m, d = spec.dim, spec.det
    DL = discriminant_group(L)
    FL = discriminant_form(L, DL)
    odd = {p: sym for p, sym in spec.symbols.items() if p != 2}
    tried = 0
    for gram in candidate_grams(d, m, budget):
        tried += 1
        K = make_lattice(gram)
        if any(padic_symbol(K, p) != sym for p, sym in odd.items()):
            continue
        DK = discriminant_group(K)
        if DK.factors != DL.factors:
            continue
        try:
            phi = anti_isometry(DL, FL, DK, discriminant_form(K, DK))
        except AntiIsometryError:
            continue
        return K, phi
    raise SearchExhausted(
        f"no companion with entries <= {budget} ({tried} candidates); companion genus: {spec}",
        spec=spec,
    )


# --------------------------------------------------------------------------
# gluing


@dataclass
class Embedding:
    L: Lattice
    K: Lattice
    glue_map: GlueMap
    generators: list  # glue vectors (x, phi x) in L(+)K coordinates
    glue_basis: list  # rows: basis of the glued lattice in L(+)K coordinates
    glued: Lattice
    glue_index: int
    certificate: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.K.dim

    def ambient_gram(self):
        return exact.block_diag(self.L.gram, self.K.gram)


def glue_vectors(L: Lattice, K: Lattice, generators: Sequence[Sequence], glue_map=None) -> Embedding:
    """Overlattice of ``L (+) K`` generated by its standard basis and ``generators``."""
    n = L.dim + K.dim
    gens = [[Fraction(x) for x in g] for g in generators]
    basis = _span(exact.to_fractions(exact.identity(n)) + gens)
    G = exact.block_diag(L.gram, K.gram)
    gram = exact.congruent(basis, G)
    if not exact.is_integral(gram):
        raise GluingError("glued Gram matrix is not integral; glue group is not isotropic")
    index = Fraction(1) / abs(exact.det_exact(basis))
    assert index.denominator == 1
    glued = make_lattice(exact.to_int(gram))
    return Embedding(L, K, glue_map or GlueMap(()), gens, basis, glued, index.numerator)


def glue(L: Lattice, K: Lattice, phi: GlueMap) -> Embedding:
    DL = discriminant_group(L)
    DK = discriminant_group(K)
    gens = [list(x) + list(DK.element(c)) for x, c in zip(DL.lifts, phi.images)]
    return glue_vectors(L, K, gens, phi)


def _span(rows):
    """HNF basis (rational rows) of the lattice spanned by ``rows``."""
    D = exact.common_denominator(rows)
    H, _ = exact.hnf([[int(Fraction(x) * D) for x in row] for row in rows])
    return [[Fraction(x, D) for x in row] for row in H if any(row)]


def complement_transform(E: Embedding):
    """Rows of ``C`` (L coordinates) span ``K``'s orthogonal complement in the
    glued lattice; returns ``C`` if it is an integral unimodular matrix, i.e.
    the complement is exactly ``L`` and its Gram is ``C A_L C^T``; else None.
    """
    C = orthogonal_complement_of_K(E.glue_basis, E.L.dim)
    if len(C) != E.L.dim or not exact.is_integral(C) or abs(exact.det_exact(C)) != 1:
        return None
    return exact.to_int(C)


def orthogonal_complement_of_K(basis, nL: int):
    """Integer transform ``C`` whose rows span ``M`` meet ``L (x) Q``, in L coordinates."""
    PK = [row[nL:] for row in basis]
    Z = exact.left_kernel(PK) if PK and PK[0] else exact.identity(len(basis))
    return [exact.vecmat(z, basis)[:nL] for z in Z]


def certify(E: Embedding) -> dict:
    """Recompute every certificate flag from the raw embedding data."""
    L, K, P = E.L, E.K, E.glue_basis
    n = L.dim + K.dim
    G = exact.block_diag(L.gram, K.gram)
    flags: dict = {}
    square = len(P) == n and all(len(r) == n for r in P)
    detP = exact.det_exact(P) if square else 0
    gram = exact.congruent(P, G) if square else None
    flags["integral"] = bool(square and exact.is_integral(gram) and detP != 0)
    if flags["integral"] and E.generators:
        span = _span(list(P) + list(E.generators))
        flags["integral"] = exact.is_integral(exact.congruent(span, G))
        flags["generators_ok"] = span == [list(map(Fraction, r)) for r in _span(P)]
    else:
        flags["generators_ok"] = flags["integral"] or not E.generators
    gdet = exact.det_exact(gram) if square else 0
    flags["unimodular"] = bool(square and abs(gdet) == 1)
    r, s = L.signature
    try:
        flags["signature_ok"] = bool(square and detP and exact.signature(gram) == (r + K.dim, s))
    except exact.SingularMatrixError:
        flags["signature_ok"] = False
    flags["odd_type"] = bool(flags["integral"] and any(gram[i][i] % 2 for i in range(n)))
    flags["contains_sum"] = bool(detP and exact.is_integral(exact.rat_inverse(P)))
    idx = Fraction(1) / abs(detP) if detP else None
    flags["index_ok"] = bool(
        idx is not None and idx == E.glue_index and E.glue_index == discriminant_group(L).order
    )
    # checked against the stored glued Gram and index, so edits to L, K or the
    # stored Gram surface here
    try:
        stored_det = exact.det_exact(E.glued.matrix())
    except (ValueError, TypeError, IndexError):
        stored_det = None
    flags["det_law"] = bool(
        E.glue_index and stored_det is not None
        and stored_det * E.glue_index**2 == L.det * K.det
    )
    flags["gram_consistent"] = bool(square and detP and exact.is_integral(gram) and exact.to_int(gram) == E.glued.matrix())
    flags["positive_companion"] = K.is_positive_definite()
    flags["m_ok"] = K.dim == (companion_dim(discriminant_group(L).rank) if not L.is_unimodular() else 3)
    C = complement_transform(E) if square and detP else None
    flags["complement_is_L"] = C is not None
    flags["m"] = K.dim
    flags["glue_index"] = E.glue_index
    return flags


CHECKS = (
    "integral",
    "generators_ok",
    "unimodular",
    "signature_ok",
    "odd_type",
    "contains_sum",
    "index_ok",
    "det_law",
    "gram_consistent",
    "positive_companion",
    "m_ok",
    "complement_is_L",
)


def failed_checks(cert: dict) -> list[str]:
    return [c for c in CHECKS if not cert.get(c)]


def verify_embedding(E: Embedding) -> dict:
    cert = certify(E)
    E.certificate = cert
    bad = failed_checks(cert)
    if bad:
        raise VerificationError("failed checks: " + ", ".join(bad), failed=bad, certificate=cert)
    return cert


def embed_unimodular(L: Lattice, budget: int = DEFAULT_BUDGET) -> Embedding:
    """Certified embedding of ``L`` into a unimodular lattice of signature ``(r+m, s)``."""
    if L.is_unimodular():
        E = glue_vectors(L, make_lattice(exact.identity(3)), [])
    else:
        spec = companion_spec(L)
        K, phi = companion_search(L, budget, spec)
        E = glue(L, K, phi)
    verify_embedding(E)
    return E


# --------------------------------------------------------------------------
# serialization


def frac_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def embedding_to_json(E: Embedding) -> dict:
    cert = E.certificate or certify(E)
    return {
        "L": {"gram": E.L.matrix()},
        "K": {"gram": E.K.matrix()},
        "glue_map": [list(c) for c in E.glue_map.images],
        "glue_generators": [[frac_str(x) for x in g] for g in E.generators],
        "glue_basis": [[frac_str(x) for x in row] for row in E.glue_basis],
        "glued": {"gram": E.glued.matrix()},
        "m": E.m,
        "glue_index": E.glue_index,
        "certificate": {k: cert[k] for k in CHECKS},
    }


def embedding_from_json(data: dict) -> Embedding:
    """Rebuild an ``Embedding`` from stored data without trusting stored flags."""
    L = make_lattice(data["L"]["gram"])
    K = make_lattice(data["K"]["gram"])
    basis = [[Fraction(x) for x in row] for row in data["glue_basis"]]
    gens = [[Fraction(x) for x in g] for g in data.get("glue_generators", [])]
    phi = GlueMap(tuple(tuple(int(x) for x in c) for c in data.get("glue_map", [])))
    glued_gram = data["glued"]["gram"]
    try:
        glued = make_lattice(glued_gram)
    except ValueError:
        glued = None
    E = Embedding(L, K, phi, gens, basis, glued, int(data["glue_index"]))
    if glued is None:
        E.glued = _PlaceholderLattice(glued_gram)
    return E


class _PlaceholderLattice:
    """Stand-in for a stored glued Gram that is not a valid lattice."""

    def __init__(self, gram):
        self.gram = gram

    def matrix(self):
        return [list(r) for r in self.gram]


def generators_in_basis(E: Embedding) -> bool:
    """Every stored glue generator lies in the lattice spanned by ``glue_basis``."""
    for g in E.generators:
        z = exact.solve_left(g, E.glue_basis)
        if not all(Fraction(x).denominator == 1 for x in z):
            return False
    return True
