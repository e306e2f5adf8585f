"""Jordan decompositions, Conway-Sloane p-adic symbols and genus existence."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Sequence

from sympy import factorint, isprime

from . import exact
from .lattice import Lattice


class MalformedGenusError(ValueError):
    """A genus description that is not even well formed (dims, det, primes)."""


class SymbolSyntaxError(ValueError):
    pass


def legendre(a: int, p: int) -> int:
    """Quadratic residue symbol ``(a/p)`` for an odd prime ``p``."""
    if p == 2 or p < 2:
        raise ValueError("legendre needs an odd prime")
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def kronecker2(a: int) -> int:
    """``(a/2)``: +1 if ``a = +-1 mod 8``, -1 if ``a = +-3 mod 8``."""
    if a % 2 == 0:
        raise ValueError("kronecker2 is only defined for odd a")
    return 1 if a % 8 in (1, 7) else -1


def valuation(x, p: int) -> int:
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def unit_part(x, p: int) -> int:
    """An integer representing the p-adic unit part of ``x`` (up to squares of units)."""
    x = Fraction(x)
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
    while d % p == 0:
        d //= p
    # 1/d and d differ by a unit square
    return n * d


def unit_char(x, p: int) -> int:
    u = unit_part(x, p)
    return kronecker2(u) if p == 2 else legendre(u, p)


# --------------------------------------------------------------------------
# Jordan decomposition


def jordan_pieces(G: Sequence[Sequence], p: int):
    """Split ``G`` p-locally into 1x1 and 2x2 pieces.

    Returns ``(pieces, T)`` where ``pieces`` is a list of ``(valuation, block)``
    in nondecreasing valuation and ``T * G * T^T`` is the block diagonal sum of
    the pieces.  ``T`` has p-integral entries and determinant +-1.
    """
    A = exact.to_fractions(G)
    n = len(A)
    T = exact.to_fractions(exact.identity(n))
    pieces = []

    def swap(i, j):
        if i == j:
            return
        A[i], A[j] = A[j], A[i]
        for row in A:
            row[i], row[j] = row[j], row[i]
        T[i], T[j] = T[j], T[i]

    def add(dst, src, f):
        # e_dst <- e_dst + f * e_src
        A[dst] = [a + f * b for a, b in zip(A[dst], A[src])]
        for row in A:
            row[dst] += f * row[src]
        T[dst] = [a + f * b for a, b in zip(T[dst], T[src])]

    k = 0
    while k < n:
        vals = [(valuation(A[i][j], p), i, j) for i in range(k, n) for j in range(i, n) if A[i][j] != 0]
        if not vals:
            raise exact.SingularMatrixError("degenerate form")
        v = min(t[0] for t in vals)
        diag_hit = next((i for (w, i, j) in vals if w == v and i == j), None)
        if diag_hit is not None:
            swap(k, diag_hit)
            a = A[k][k]
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    add(i, k, -A[i][k] / a)
            pieces.append((v, [[a]]))
            k += 1
            continue
        _, i, j = next(t for t in vals if t[0] == v)
        if p != 2:
            add(i, j, Fraction(1))
            continue
        swap(k, i)
        swap(k + 1, j)
        a, b, c = A[k][k], A[k][k + 1], A[k + 1][k + 1]
        det = a * c - b * b
        inv = [[c / det, -b / det], [-b / det, a / det]]
        for r in range(k + 2, n):
            x, y = A[r][k], A[r][k + 1]
            if x == 0 and y == 0:
                continue
            f0 = x * inv[0][0] + y * inv[1][0]
            f1 = x * inv[0][1] + y * inv[1][1]
            if f0:
                add(r, k, -f0)
            if f1:
                add(r, k + 1, -f1)
        pieces.append((v, [[a, b], [b, c]]))
        k += 2
    return pieces, T


def jordan_decompose(L: Lattice | Sequence[Sequence], p: int) -> list[tuple[int, list]]:
    """Jordan constituents ``[(q, f_q), ...]`` with ``f_q`` p-adically unimodular.

    The form is congruent over the p-local integers to ``sum q * f_q``.
    """
    G = L.gram if isinstance(L, Lattice) else L
    pieces, _ = jordan_pieces(G, p)
    by_val: dict[int, list] = {}
    for v, block in pieces:
        by_val.setdefault(v, []).append(block)
    out = []
    for v in sorted(by_val):
        q = p**v
        blk = exact.block_diag(*by_val[v])
        out.append((q, [[Fraction(x) / q for x in row] for row in blk]))
    return out


# --------------------------------------------------------------------------
# symbols


@dataclass(frozen=True)
class JordanBlock:
    """One constituent ``q^{eps n}`` (odd p) or ``q^{eps n}_t`` / type II (p = 2)."""

    prime: int
    exponent: int
    dim: int
    sign: int
    type_ii: bool = False
    oddity: int = 0

    @property
    def scale(self) -> int:
        return self.prime**self.exponent

    @property
    def type_i(self) -> bool:
        return self.prime == 2 and not self.type_ii


@dataclass(frozen=True)
class PadicSymbol:
    prime: int
    blocks: tuple[JordanBlock, ...]

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def compartments(self) -> list[list[JordanBlock]]:
        """Maximal runs of type I blocks at consecutive scales (p = 2 only)."""
        out: list[list[JordanBlock]] = []
        for b in self.blocks:
            if not b.type_i:
                continue
            if out and out[-1][-1].exponent == b.exponent - 1:
                out[-1].append(b)
            else:
                out.append([b])
        return out

    def __str__(self) -> str:
        return render_symbol(self)


def _block_from_form(p: int, q: int, f) -> JordanBlock:
    e = valuation(q, p)
    n = len(f)
    d = exact.det_exact(f)
    sign = unit_char(d, p)
    if p != 2:
        return JordanBlock(p, e, n, sign)
    odd_diag = [f[i][i] for i in range(n) if f[i][i] != 0 and valuation(f[i][i], 2) == 0]
    if not odd_diag:
        return JordanBlock(2, e, n, sign, type_ii=True, oddity=0)
    t = sum(unit_part(x, 2) for x in odd_diag) % 8
    return JordanBlock(2, e, n, sign, type_ii=False, oddity=t)


def padic_symbol(L: Lattice, p: int) -> PadicSymbol:
    """The p-adic symbol read off the Jordan decomposition.

    At ``p = 2`` the oddity of a type I constituent is the sum of the unit
    parts of its 1x1 pieces; 2x2 even pieces have oddity 0.
    """
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    return PadicSymbol(p, tuple(_block_from_form(p, q, f) for q, f in jordan_decompose(L, p)))


def relevant_primes(det: int) -> list[int]:
    return sorted(set(factorint(abs(2 * det))))


def p_excess(sym: PadicSymbol) -> int:
    p = sym.prime
    if p == 2:
        raise ValueError("p-excess is for odd primes; use oddity at 2")
    total = 0
    for b in sym.blocks:
        total += b.dim * (pow(p, b.exponent, 8) - 1)
        if b.exponent % 2 == 1 and b.sign == -1:
            total += 4
    return total % 8


def oddity(sym: PadicSymbol) -> int:
    if sym.prime != 2:
        raise ValueError("oddity is for the 2-adic symbol")
    total = 0
    for b in sym.blocks:
        total += b.oddity
        if b.exponent % 2 == 1 and b.sign == -1:
            total += 4
    return total % 8


def negate_symbol(sym: PadicSymbol) -> PadicSymbol:
    """Local symbol of the lattice with all inner products negated."""
    p = sym.prime
    blocks = []
    for b in sym.blocks:
        if p == 2:
            blocks.append(replace(b, oddity=(-b.oddity) % 8))
        else:
            blocks.append(replace(b, sign=b.sign * legendre((-1) ** b.dim, p)))
    return PadicSymbol(p, tuple(blocks))


@dataclass(frozen=True)
class OddityCheck:
    holds: bool
    lhs: int  # signature + sum of p-excesses, mod 8
    rhs: int  # oddity of the 2-adic symbol, mod 8


def oddity_formula_check(L: Lattice) -> OddityCheck:
    r, s = L.signature
    lhs = r - s
    for p in relevant_primes(L.det):
        if p != 2:
            lhs += p_excess(padic_symbol(L, p))
    rhs = oddity(padic_symbol(L, 2))
    return OddityCheck(lhs % 8 == rhs, lhs % 8, rhs)


# --------------------------------------------------------------------------
# genus existence


@dataclass(frozen=True)
class GenusSpec:
    signature: tuple[int, int]
    det: int
    symbols: dict = field(hash=False)  # prime -> PadicSymbol

    @property
    def dim(self) -> int:
        return sum(self.signature)

    def __str__(self) -> str:
        return render_genus(self)


def genus_spec(L: Lattice) -> GenusSpec:
    return GenusSpec(L.signature, L.det, {p: padic_symbol(L, p) for p in relevant_primes(L.det)})


@dataclass(frozen=True)
class GenusVerdict:
    exists: bool
    violations: tuple[str, ...]

    def __bool__(self):
        return self.exists


DETERMINANT = "determinant condition"
ODDITY = "oddity formula"
TYPE_II = "type II oddity"
DIM1 = "n_q=1 table"
DIM2 = "type I n_q=2 table"
PARITY = "oddity parity"


def _check_malformed(spec: GenusSpec) -> list[str]:
    errs = []
    r, s = spec.signature
    if r < 0 or s < 0:
        errs.append("negative signature entry")
    if spec.det == 0:
        return errs + ["determinant is zero"]
    if (spec.det < 0) != (s % 2 == 1):
        errs.append("sign of determinant does not match signature")
    need = relevant_primes(spec.det)
    for p in need:
        if p not in spec.symbols:
            errs.append(f"missing symbol at p={p}")
    for p, sym in spec.symbols.items():
        if not isprime(p):
            errs.append(f"{p} is not prime")
            continue
        if sym.prime != p:
            errs.append(f"symbol keyed by {p} has prime {sym.prime}")
        if sym.dim != spec.dim:
            errs.append(f"p={p}: symbol dimension {sym.dim} != {spec.dim}")
        exps = [b.exponent for b in sym.blocks]
        if exps != sorted(set(exps)):
            errs.append(f"p={p}: scales must be distinct and ascending")
        if any(b.dim < 1 or b.exponent < 0 or b.sign not in (1, -1) for b in sym.blocks):
            errs.append(f"p={p}: bad block")
        if p != 2 and any(b.type_ii or b.oddity for b in sym.blocks):
            errs.append(f"p={p}: oddity/type only apply at p=2")
        if sum(b.exponent * b.dim for b in sym.blocks) != valuation(spec.det, p):
            errs.append(f"p={p}: scales do not match the p-part of det")
    return errs


def _block_table_ok(b: JordanBlock, t: int) -> list[str]:
    """Violated conditions for a single type I block carrying oddity ``t``."""
    bad = []
    if (t - b.dim) % 2:
        bad.append(PARITY)
    if b.dim == 1:
        if t % 8 not in ((1, 7) if b.sign == 1 else (3, 5)):
            bad.append(DIM1)
    elif b.dim == 2:
        if t % 8 not in ((0, 2, 6) if b.sign == 1 else (4, 2, 6)):
            bad.append(DIM2)
    return bad


def _compartment_violations(comp: list[JordanBlock]) -> list[str]:
    n = sum(b.dim for b in comp)
    t = sum(b.oddity for b in comp) % 8
    if n >= 3:
        return [] if (t - n) % 2 == 0 else [PARITY]
    if len(comp) == 1:
        return _block_table_ok(comp[0], t)
    # two 1-dimensional blocks: the total may be shared between them
    for t0 in range(8):
        if not _block_table_ok(comp[0], t0) and not _block_table_ok(comp[1], t - t0):
            return []
    return [DIM1]


def genus_exists(spec: GenusSpec) -> GenusVerdict:
    """Decide whether an integral lattice with these local data exists.

    Raises ``MalformedGenusError`` if the description is inconsistent
    (dimensions, determinant, missing primes) rather than merely unrealisable.
    """
    errs = _check_malformed(spec)
    if errs:
        raise MalformedGenusError("; ".join(errs))
    bad: list[str] = []
    for p in sorted(spec.symbols):
        sym = spec.symbols[p]
        a = spec.det // p ** valuation(spec.det, p)
        target = kronecker2(a) if p == 2 else legendre(a, p)
        eps = 1
        for b in sym.blocks:
            eps *= b.sign
        if eps != target:
            bad.append(f"{DETERMINANT} (p={p})")
    r, s = spec.signature
    lhs = r - s + sum(p_excess(sym) for p, sym in spec.symbols.items() if p != 2)
    if lhs % 8 != oddity(spec.symbols[2]):
        bad.append(ODDITY)
    sym2 = spec.symbols[2]
    for b in sym2.blocks:
        if b.type_ii:
            if b.oddity % 8:
                bad.append(f"{TYPE_II} (q={b.scale})")
            if b.dim % 2:
                bad.append(f"{PARITY} (q={b.scale})")
    for comp in sym2.compartments():
        where = " ".join(str(b.scale) for b in comp)
        bad.extend(f"{v} (q={where})" for v in _compartment_violations(comp))
    return GenusVerdict(not bad, tuple(bad))


def violation_kinds(verdict: GenusVerdict) -> set[str]:
    return {v.split(" (")[0] for v in verdict.violations}


# --------------------------------------------------------------------------
# text format


def _fmt_block(b: JordanBlock) -> str:
    return f"{b.scale}^{'+' if b.sign > 0 else '-'}{b.dim}"


def render_symbol(sym: PadicSymbol) -> str:
    """Conway-Sloane style text, compartments bracketed at p = 2."""
    if sym.prime != 2:
        return " ".join(_fmt_block(b) for b in sym.blocks)
    parts = []
    comp: list[JordanBlock] = []

    def flush():
        if comp:
            t = sum(x.oddity for x in comp) % 8
            parts.append("[" + " ".join(_fmt_block(x) for x in comp) + f"]_{t}")
            comp.clear()

    for b in sym.blocks:
        if b.type_ii:
            flush()
            parts.append(_fmt_block(b))
        else:
            if comp and comp[-1].exponent != b.exponent - 1:
                flush()
            comp.append(b)
    flush()
    return " ".join(parts)


_TOKEN = re.compile(r"\[|\]_(-?\d+)|(\d+)\^([+-])(\d+)(?:_(-?\d+))?")


def parse_symbol(text: str, p: int) -> PadicSymbol:
    """Parse ``"1^+2 7^+1"`` or, at p = 2, ``"[1^-2 2^+1]_3 4^+2"``.

    At p = 2 a bracketed compartment is type I and its oddity is stored on
    its first block; a block with its own ``_t`` subscript is type I; a bare
    block is type II.
    """
    blocks: list[JordanBlock] = []
    pos = 0
    text = text.strip()
    in_comp: list[JordanBlock] | None = None
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise SymbolSyntaxError(f"unexpected {text[pos:pos + 10]!r} at column {pos + 1}")
        pos = m.end()
        tok = m.group(0)
        if tok == "[":
            if in_comp is not None or p != 2:
                raise SymbolSyntaxError(f"unexpected '[' at column {m.start() + 1}")
            in_comp = []
            continue
        if tok.startswith("]"):
            if not in_comp:
                raise SymbolSyntaxError(f"unexpected ']' at column {m.start() + 1}")
            t = int(m.group(1)) % 8
            first = in_comp[0]
            blocks[len(blocks) - len(in_comp)] = replace(first, oddity=t)
            in_comp = None
            continue
        q, sgn, n, t = int(m.group(2)), m.group(3), int(m.group(4)), m.group(5)
        e = 0
        while q % p == 0:
            q //= p
            e += 1
        if q != 1:
            raise SymbolSyntaxError(f"scale {m.group(2)} is not a power of {p}")
        sign = 1 if sgn == "+" else -1
        if p != 2:
            if t is not None:
                raise SymbolSyntaxError("oddity subscripts only at p=2")
            blocks.append(JordanBlock(p, e, n, sign))
        elif in_comp is not None:
            if t is not None:
                raise SymbolSyntaxError("per-block oddity inside a compartment")
            b = JordanBlock(2, e, n, sign, type_ii=False, oddity=0)
            in_comp.append(b)
            blocks.append(b)
        elif t is not None:
            blocks.append(JordanBlock(2, e, n, sign, type_ii=False, oddity=int(t) % 8))
        else:
            blocks.append(JordanBlock(2, e, n, sign, type_ii=True, oddity=0))
    if in_comp is not None:
        raise SymbolSyntaxError("unterminated compartment")
    return PadicSymbol(p, tuple(blocks))


def render_genus(spec: GenusSpec) -> str:
    r, s = spec.signature
    parts = [f"signature={r},{s}", f"det={spec.det}"]
    parts += [f"{p}: {render_symbol(spec.symbols[p])}" for p in sorted(spec.symbols)]
    return "; ".join(parts)


def parse_genus(text: str) -> GenusSpec:
    """Parse ``"signature=3,0; det=7; 2: [1^+3]_1; 7: 1^+2 7^+1"``."""
    sig = det = None
    symbols = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, val = part.partition("=") if "=" in part.split(":")[0] else part.partition(":")
        if not sep:
            raise SymbolSyntaxError(f"cannot parse {part!r}")
        key = key.strip()
        try:
            if key == "signature":
                r, s = (int(x) for x in val.replace("(", "").replace(")", "").split(","))
                sig = (r, s)
            elif key == "det":
                det = int(val)
            else:
                p = int(key)
                if not isprime(p):
                    raise SymbolSyntaxError(f"{p} is not prime")
                symbols[p] = parse_symbol(val, p)
        except ValueError as exc:
            if isinstance(exc, SymbolSyntaxError):
                raise
            raise SymbolSyntaxError(f"cannot parse {part!r}: {exc}") from None
    if sig is None or det is None:
        raise SymbolSyntaxError("genus needs signature= and det=")
    return GenusSpec(sig, det, symbols)


def genus_from_json(data: dict) -> GenusSpec:
    try:
        sig = tuple(int(x) for x in data["signature"])
        det = int(data["det"])
        syms = {int(p): parse_symbol(text, int(p)) for p, text in data["symbols"].items()}
    except (KeyError, TypeError) as exc:
        raise SymbolSyntaxError(f"bad genus JSON: {exc}") from None
    return GenusSpec(sig, det, syms)


def genus_to_json(spec: GenusSpec) -> dict:
    return {
        "signature": list(spec.signature),
        "det": spec.det,
        "symbols": {str(p): render_symbol(spec.symbols[p]) for p in sorted(spec.symbols)},
    }


def mutate_sign(spec: GenusSpec, p: int, idx: int) -> GenusSpec:
    sym = spec.symbols[p]
    blocks = list(sym.blocks)
    blocks[idx] = replace(blocks[idx], sign=-blocks[idx].sign)
    return GenusSpec(spec.signature, spec.det, {**spec.symbols, p: PadicSymbol(p, tuple(blocks))})


def mutate_oddity(spec: GenusSpec, idx: int, delta: int) -> GenusSpec:
    sym = spec.symbols[2]
    blocks = list(sym.blocks)
    blocks[idx] = replace(blocks[idx], oddity=(blocks[idx].oddity + delta) % 8)
    return GenusSpec(spec.signature, spec.det, {**spec.symbols, 2: PadicSymbol(2, tuple(blocks))})
