import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apollonian import moebius as mb, packing
from apollonian.errors import DegenerateTriple, IncompleteEnumeration

S3 = math.sqrt(3)


def descartes_ok(ks):
    s = sum(ks)
    return abs(s * s - 2 * sum(k * k for k in ks)) <= 1e-10 * s * s


def test_fig1_tangent_circles():
    s = packing.preset_system("fig1")
    assert abs(s.C0.center - 4 * S3 / 3) < 1e-12 and abs(s.C0.radius - (4 * S3 / 3 + 2)) < 1e-12
    assert s.C0.curvature < 0
    assert abs(s.C4.center - 4 * S3 / 3) < 1e-12 and abs(s.C4.radius - (4 * S3 / 3 - 2)) < 1e-12


def test_unit_triple_descartes():
    t = packing.triple_from_curvatures(1, 1, 1)
    C0, C4 = packing.tangent_circles(t)
    assert abs(C4.curvature - (3 + 2 * S3)) < 1e-12
    assert abs(C0.curvature - (3 - 2 * S3)) < 1e-12
    for C in (C0, C4):
        assert descartes_ok([1, 1, 1, C.curvature])


def test_dual_circle_symmetric(symmetric):
    # K0 passes through the three corners and is the unit circle in this normalization
    K0 = symmetric.K[0]
    for p in symmetric.triple.tangency_points:
        assert abs(abs(p - K0.center) - K0.radius) < 1e-12
    assert abs(K0.radius - 1) < 1e-12


def test_horocircles_through_opposite_corner(symmetric):
    tp = symmetric.triple.tangency_points
    for j in (1, 2, 3):
        H = symmetric.H[j - 1]
        assert abs(H.power(tp[j - 1])) < 1e-9
        for C in (symmetric.C0, symmetric.triple.circle(j)):
            assert abs(abs(H.inversive(C)) - 1) < 1e-9


def test_printed_generators(symmetric, ford):
    assert symmetric.gen(3).almost_equal(mb.MobiusMap(S3 - 1, 1, -1, S3 + 1))
    z = np.array([0.1 + 0.2j, -0.4j, 0.7])
    assert np.allclose(ford.gen(3)(z), 1 / (z - 1j) - 1j)
    assert np.allclose(ford.gen(1)(z), -4 / (z + 3 + 1j) + 1 - 1j)


@pytest.mark.parametrize("name", sorted(packing.PRESETS))
def test_generator_containment(name):
    s = packing.preset_system(name)
    assert packing.check_generator_containment(s, n=200) < 1e-12


def test_depth_zero_is_c4(symmetric):
    pk = packing.generate_packing(symmetric, max_depth=(0, 5))
    assert len(pk) == 1 and abs(pk.radius[0] - symmetric.C4.radius) < 1e-15


def test_fig1_first_generation():
    s = packing.preset_system("fig1")
    pk = packing.generate_packing(s, max_depth=(1, 1))
    first = np.sort(pk.radius[pk.generation == 1])
    assert np.allclose(first, 18 / 33 - 8 / 33 * S3, rtol=1e-12)


@pytest.mark.parametrize("name", sorted(packing.PRESETS))
def test_generator_matches_descartes(name):
    s = packing.preset_system(name)
    eps = s.C4.radius / 50
    P = packing.generate_packing(s, min_radius=eps)
    Q, worst = packing.descartes_bfs(s.triple, eps)
    ok, nP, nQ, err = packing.match_packings(P, Q)
    assert ok, (nP, nQ, err)
    assert worst < 1e-10


def test_addresses_reconstruct(symmetric):
    P = packing.generate_packing(symmetric, min_radius=symmetric.C4.radius / 40)
    for pc in list(P.circles())[:400]:
        M = symmetric.word_map(pc.word.letters)
        C = mb.image_circle(M, symmetric.C4)
        assert abs(C.radius - pc.circle.radius) < 1e-9 * pc.circle.radius
        assert abs(C.center - pc.circle.center) < 1e-9 * max(1, abs(pc.circle.center))
        assert 0 < pc.circle.radius <= symmetric.C4.radius


def test_disjoint_interiors(symmetric):
    P = packing.generate_packing(symmetric, min_radius=symmetric.C4.radius / 60, keep_words=False)
    c, r = P.center[:2000], P.radius[:2000]
    d = np.abs(c[:, None] - c[None, :])
    gap = d - (r[:, None] + r[None, :])
    np.fill_diagonal(gap, 1.0)
    assert gap.min() > -1e-10


def test_counting_edges(symmetric):
    r4 = symmetric.C4.radius
    P = packing.generate_packing(symmetric, min_radius=r4 / 100, keep_words=False)
    assert packing.count_circles(P, r4) == 0
    second = np.sort(P.radius)[-2]
    assert packing.count_circles(P, 0.5 * (second + r4)) == 1
    with pytest.raises(IncompleteEnumeration):
        packing.count_circles(P, r4 / 1000)
    Q, _ = packing.descartes_bfs(symmetric.triple, r4)
    assert len(Q) == 0


def test_derivative_envelope(symmetric):
    Q, ratios = packing.derivative_envelope(symmetric, kmax=200)
    assert 1 < Q < 20
    assert np.all(ratios >= 1 / Q - 1e-12) and np.all(ratios <= Q + 1e-12)


def test_non_tangent_rejected():
    with pytest.raises(DegenerateTriple):
        packing.TangentTriple(mb.Circle.from_center(0, 1), mb.Circle.from_center(3, 1), mb.Circle.from_center(1j, 1))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3), st.floats(0.3, 3), st.floats(0.3, 3))
def test_random_triples_oracles_agree(k1, k2, k3):
    s = packing.build_system(packing.triple_from_curvatures(k1, k2, k3))
    C0, C4 = s.C0, s.C4
    assert descartes_ok([k1, k2, k3, C4.curvature]) and descartes_ok([k1, k2, k3, C0.curvature])
    eps = s.C4.radius / 15
    P = packing.generate_packing(s, min_radius=eps)
    Q, worst = packing.descartes_bfs(s.triple, eps)
    assert packing.match_packings(P, Q)[0]
    assert worst < 1e-10
    assert packing.check_generator_containment(s, n=60) < 1e-9
