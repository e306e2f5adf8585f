import dataclasses
import json
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, assume, given, settings

from latglue import exact
from latglue import genus as gn
from latglue import gluing as gl
from latglue.automorphisms import EXAMPLE_GLUE
from latglue.lattice import discriminant_form, discriminant_group, is_ssf, make_lattice, standard_lorentzian
from strategies import nonsingular_grams

L7 = make_lattice(exact.diag([-7, 1, 1, 1]))
K7 = make_lattice(exact.diag([7, 1, 1]))


def test_companion_dim():
    assert [gl.companion_dim(d) for d in range(5)] == [3, 3, 3, 4, 5]


def test_companion_spec_examples():
    spec = gl.companion_spec(L7)
    assert gn.render_genus(spec) == "signature=3,0; det=7; 2: [1^+3]_1; 7: 1^+2 7^+1"
    assert spec == gn.genus_spec(K7)
    spec = gl.companion_spec(make_lattice(exact.diag([-2, 1, 1, 1])))
    assert gn.render_genus(spec) == "signature=3,0; det=2; 2: [1^+2 2^+1]_3"


def test_companion_spec_rejections():
    with pytest.raises(gl.CompanionSpecError, match="unimodular"):
        gl.companion_spec(make_lattice(exact.diag([-1, 1, 1])))
    with pytest.raises(gl.CompanionSpecError, match="2-elementary") as exc:
        gl.companion_spec(make_lattice(exact.diag([-4, 1])))
    assert exc.value.stage == "spec"
    # U(2) + I_3 is strongly square-free but its scale-2 constituent is even
    U2 = [[0, 2, 0, 0, 0], [2, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]]
    L = make_lattice(U2)
    assert is_ssf(L) == (True, 2)
    with pytest.raises(gl.CompanionSpecError, match="type II"):
        gl.companion_spec(L)


def test_no_small_companion_for_even_scale2():
    # the recipe's genus for U(2)+I_3 exists, yet no K of it glues: the anti-isometry
    # needs an element of norm 0 and order 2 in Delta(K), which [1^+2 2^+2]_t lacks
    U2 = make_lattice([[0, 2, 0, 0, 0], [2, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]])
    DL = discriminant_group(U2)
    FL = discriminant_form(U2, DL)
    for gram in gl.candidate_grams(4, 3, 8):
        K = make_lattice(gram)
        DK = discriminant_group(K)
        if DK.factors != DL.factors:
            continue
        with pytest.raises(gl.AntiIsometryError):
            gl.anti_isometry(DL, FL, DK, discriminant_form(K, DK))


def test_companion_search_examples():
    K, phi = gl.companion_search(L7)
    assert K.matrix() == exact.diag([1, 1, 7])
    assert phi.images == ((1,),)
    for k in (3, 15):
        K, _ = gl.companion_search(make_lattice(exact.diag([-k, 1, 1, 1])))
        assert (K.det, K.dim) == (k, 3) and K.is_positive_definite()
    with pytest.raises(gl.SearchExhausted) as exc:
        gl.companion_search(L7, budget=0)
    assert exc.value.stage == "search"


def test_candidate_order():
    grams = list(gl.candidate_grams(7, 3, 8))
    assert grams[0] == exact.diag([1, 1, 7])
    for g in grams:
        assert exact.det_exact(g) == 7 and make_lattice(g).is_positive_definite()
        assert max(abs(x) for row in g for x in row) <= 8
    assert len({tuple(map(tuple, g)) for g in grams}) == len(grams)


def test_anti_isometry_examples():
    DL, DK = discriminant_group(L7), discriminant_group(K7)
    FL, FK = discriminant_form(L7, DL), discriminant_form(K7, DK)
    phi = gl.anti_isometry(DL, FL, DK, FK)
    c = phi.images[0][0]
    x = DL.coefficients([Fraction(1, 7), 0, 0, 0])
    assert FK.value((c * x[0],), (c * x[0],)) == 1 - FL.value(x, x)
    empty = make_lattice(exact.identity(3))
    De = discriminant_group(empty)
    assert gl.anti_isometry(De, discriminant_form(empty, De), De, discriminant_form(empty, De)).images == ()
    three = make_lattice([[3]])
    D3 = discriminant_group(three)
    with pytest.raises(gl.AntiIsometryError):
        gl.anti_isometry(D3, discriminant_form(three, D3), D3, discriminant_form(three, D3))


def test_example_glue():
    E = gl.glue_vectors(L7, K7, [EXAMPLE_GLUE])
    assert E.glued.det == -1 and E.glue_index == 7
    assert E.glued.signature == (6, 1) and E.glued.is_odd()
    cert = gl.verify_embedding(E)
    assert gl.failed_checks(cert) == []
    I61 = standard_lorentzian(6)
    assert (I61.det, I61.signature, I61.is_odd()) == (E.glued.det, E.glued.signature, True)


def test_trivial_glue():
    E = gl.glue_vectors(make_lattice(exact.diag([-1, 1, 1])), make_lattice(exact.identity(3)), [])
    assert E.glued.matrix() == exact.block_diag(exact.diag([-1, 1, 1]), exact.identity(3))
    assert E.glue_index == 1


def test_non_isotropic_glue_fails():
    with pytest.raises(gl.GluingError):
        gl.glue_vectors(L7, K7, [[Fraction(1, 7), 0, 0, 0, 0, 0, 0]])
    E = gl.embed_unimodular(L7)
    bad = dataclasses.replace(E, generators=[[Fraction(1, 7), 0, 0, 0, 0, 0, 0]])
    cert = gl.certify(bad)
    assert not cert["integral"]
    with pytest.raises(gl.VerificationError) as exc:
        gl.verify_embedding(bad)
    assert "integral" in exc.value.info["failed"]


def test_embed_unimodular_examples():
    E = gl.embed_unimodular(L7)
    assert (E.m, E.glue_index, E.glued.signature, E.glued.det) == (3, 7, (6, 1), -1)
    assert E.certificate["complement_is_L"]
    C = gl.complement_transform(E)
    assert abs(exact.det_exact(C)) == 1
    # the complement's Gram, computed in the ambient form, is C A_L C^T
    rows = [list(r) + [0, 0, 0] for r in C]
    assert exact.congruent(rows, E.ambient_gram()) == exact.congruent(C, L7.gram)
    U = gl.embed_unimodular(make_lattice(exact.diag([-1, 1, 1])))
    assert U.K.matrix() == exact.identity(3) and U.glue_index == 1
    for k in (3, 5, 15):
        E = gl.embed_unimodular(make_lattice(exact.diag([-k, 1, 1, 1, 1])))
        assert E.glued.signature == (7, 1) and abs(E.glued.det) == 1


def test_json_roundtrip():
    E = gl.embed_unimodular(L7)
    data = json.loads(json.dumps(gl.embedding_to_json(E)))
    F = gl.embedding_from_json(data)
    assert gl.failed_checks(gl.certify(F)) == []
    assert all(isinstance(x, str) for row in data["glue_basis"] for x in row)
    data["glue_basis"][0][0] = "2/7"
    assert "integral" in gl.failed_checks(gl.certify(gl.embedding_from_json(data)))


def test_tampered_k_fails_det_law():
    data = gl.embedding_to_json(gl.embed_unimodular(L7))
    data["K"]["gram"][2][2] = 8
    assert "det_law" in gl.failed_checks(gl.certify(gl.embedding_from_json(data)))


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(nonsingular_grams(n_min=2, n_max=4, lo=-5, hi=5))
def test_random_ssf_embeddings(G):
    L = make_lattice(G)
    assume(not L.is_unimodular() and is_ssf(L)[0])
    try:
        E = gl.embed_unimodular(L)
    except gl.CompanionSpecError as exc:
        assert "type II" in str(exc) or "2-elementary" in str(exc)
        return
    r, s = L.signature
    assert E.glued.signature == (r + E.m, s)
    assert abs(E.glued.det) == 1
    assert E.glue_index == abs(L.det)
    assert gl.failed_checks(E.certificate) == []
