"""The reduction O_d / 2 and the order of SL_2 over it.

``O_d`` is the ring of integers of Q(sqrt(-d)) with integral basis ``1, w``.
Reducing mod 2 leaves a ring of order four; we tabulate it and count the
2x2 matrices of determinant one.

In characteristic 2 we have -I = I, so the reduction map from SL_2(O_d)
already factors through PSL_2(O_d) and the index of the level-2 principal
congruence subgroup equals the order of the image.  That the image is all
of SL_2(O_d/2) is the classical strong-approximation fact; it is assumed
here, not proved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from sympy import factorint

# an element a + b*w of O_d/2 is stored as the pair (a, b) with a, b in {0, 1}
ELEMENTS = ((0, 0), (1, 0), (0, 1), (1, 1))
ZERO, ONE = (0, 0), (1, 0)
_NAMES = {(0, 0): "0", (1, 0): "1", (0, 1): "w", (1, 1): "1+w"}


class BianchiError(ValueError):
    pass


def is_squarefree(d: int) -> bool:
    return d >= 1 and all(e == 1 for e in factorint(d).values())


@dataclass(frozen=True)
class FiniteRing4:
    d: int
    w_squared: tuple[int, int]  # w^2 = c0 + c1 w mod 2
    add: dict = field(repr=False, compare=False)
    mul: dict = field(repr=False, compare=False)

    def is_field(self) -> bool:
        return all(any(self.mul[x, y] == ONE for y in ELEMENTS) for x in ELEMENTS if x != ZERO)

    def nilpotents(self) -> list:
        return [x for x in ELEMENTS if x != ZERO and self.mul[x, x] == ZERO]

    def idempotents(self) -> list:
        return [x for x in ELEMENTS if self.mul[x, x] == x]

    def describe(self) -> str:
        if self.is_field():
            return "F4 (field)"
        if self.nilpotents():
            return "F2[x]/(x^2) (local, not a field)"
        return "F2 x F2 (split)"


def _omega_square(d: int) -> tuple[int, int]:
    if d % 4 == 3:
        # w = (1 + sqrt(-d))/2 satisfies w^2 = w - (1 + d)/4
        return (-((1 + d) // 4)) % 2, 1
    # w = sqrt(-d), w^2 = -d
    return (-d) % 2, 0


def _check_ring(add: dict, mul: dict) -> None:
    for x, y, z in product(ELEMENTS, repeat=3):
        if add[add[x, y], z] != add[x, add[y, z]]:
            raise AssertionError(f"addition not associative at {x, y, z}")
        if mul[mul[x, y], z] != mul[x, mul[y, z]]:
            raise AssertionError(f"multiplication not associative at {x, y, z}")
        if mul[x, add[y, z]] != add[mul[x, y], mul[x, z]]:
            raise AssertionError(f"not distributive at {x, y, z}")
    for x, y in product(ELEMENTS, repeat=2):
        if mul[x, y] != mul[y, x] or add[x, y] != add[y, x]:
            raise AssertionError("not commutative")
    for x in ELEMENTS:
        if mul[ONE, x] != x or add[ZERO, x] != x:
            raise AssertionError("bad identity elements")


def ring_mod2(d: int) -> FiniteRing4:
    if not isinstance(d, int) or not is_squarefree(d):
        raise BianchiError(f"d = {d} is not a square-free positive integer")
    c0, c1 = _omega_square(d)
    add, mul = {}, {}
    for (a, b), (x, y) in product(ELEMENTS, repeat=2):
        add[(a, b), (x, y)] = ((a + x) % 2, (b + y) % 2)
        # (a + b w)(x + y w) = ax + (ay + bx) w + by w^2
        by = b * y
        mul[(a, b), (x, y)] = ((a * x + by * c0) % 2, (a * y + b * x + by * c1) % 2)
    _check_ring(add, mul)
    return FiniteRing4(d, (c0, c1), add, mul)


def sl2_order(R: FiniteRing4) -> int:
    count = 0
    for a, b, c, e in product(ELEMENTS, repeat=4):
        # minus is plus in characteristic 2
        if R.add[R.mul[a, e], R.mul[b, c]] == ONE:
            count += 1
    return count


def bianchi_index(d: int) -> int:
    """[PSL(2, O_d) : PSL(2, O_d)_(2)], computed as |SL_2(O_d / 2)|."""
    return sl2_order(ring_mod2(d))


def residue_class(d: int) -> str:
    if d % 4 in (1, 2):
        return f"d = {d % 4} mod 4"
    return f"d = {d % 8} mod 8"


def element_name(x) -> str:
    return _NAMES[tuple(x)]
