"""Hypothesis strategies and seeded generators shared by the tests."""

import random

from hypothesis import strategies as st

from latglue import exact


def int_matrices(n_min=1, n_max=5, lo=-10, hi=10, rows=None):
    @st.composite
    def build(draw):
        n = draw(st.integers(n_min, n_max))
        r = rows if rows is not None else n
        return [[draw(st.integers(lo, hi)) for _ in range(n)] for _ in range(r)]

    return build()


@st.composite
def gram_matrices(draw, n_min=1, n_max=5, lo=-10, hi=10):
    n = draw(st.integers(n_min, n_max))
    G = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            G[i][j] = G[j][i] = draw(st.integers(lo, hi))
    return G


def nonsingular_grams(**kw):
    return gram_matrices(**kw).filter(lambda G: exact.det_exact(G) != 0)


def random_gram(rng: random.Random, n: int, lo=-10, hi=10):
    while True:
        G = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                G[i][j] = G[j][i] = rng.randint(lo, hi)
        if exact.det_exact(G) != 0:
            return G


def random_grams(count: int, seed: int, dims=(2, 6)):
    rng = random.Random(seed)
    return [random_gram(rng, rng.randint(*dims)) for _ in range(count)]
