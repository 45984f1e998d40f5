import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apollonian import packing, thermo
from apollonian.errors import NonSummable, NotPeriodic
from apollonian.words import Word, periodic_edge_word

D_GASKET = 1.30568


@pytest.fixture(scope="module")
def gasket(symmetric_report):
    rep = symmetric_report
    return rep.spec, rep.eigen.op, rep.eigen, rep.D


def test_word_counts(symmetric):
    spec = thermo.apollonian_spec(symmetric, K=5)
    assert thermo.count_words(spec, 1, 5) == 30
    assert thermo.count_words(spec, 2, 3) == 108
    assert [w.letters for w in thermo.admissible_words(spec, 0, 5)] == [()]


def test_similarity_derivative_bounds():
    spec = thermo.similarity_spec([0.3, 0.2])
    w = Word(((0, 1), (0, 2), (0, 1)), 0, False)
    a, b = thermo.cylinder_derivative_bounds(spec, w)
    assert a == pytest.approx(0.3 * 0.2 * 0.3, rel=1e-14) and b == pytest.approx(a, rel=1e-14)


def test_apollonian_edge_bounds(symmetric):
    # one constant Q brackets every edge: Q^-1 k^-2 <= inf, sup <= Q k^-2, and Q does not grow with k
    spec = thermo.apollonian_spec(symmetric, K=200)
    qs = {}
    for w in thermo.admissible_words(spec, 1, 200):
        k = w.letters[0][1]
        a, b = thermo.cylinder_derivative_bounds(spec, w)
        assert 0 < a <= b
        qs[k] = max(qs.get(k, 1.0), b * k * k, 1 / (a * k * k))
    q = np.array([qs[k] for k in sorted(qs)])
    assert q.max() < 10 and q[-1] <= q[:10].max()


def test_bounds_submultiplicative(symmetric):
    spec = thermo.apollonian_spec(symmetric, K=3)
    rho = thermo.distortion_constants(spec, 2, 3)
    assert rho[0] >= rho[1] >= 1
    for w in list(thermo.admissible_words(spec, 1, 3)):
        for u in thermo.admissible_words(spec, 1, 3):
            if u.letters[0][0] != w.terminal or u.letters[0][0] == w.letters[-1][0]:
                continue
            wu = w.concat(u)
            a, b = thermo.cylinder_derivative_bounds(spec, wu)
            a1, b1 = thermo.cylinder_derivative_bounds(spec, w)
            a2, b2 = thermo.cylinder_derivative_bounds(spec, u)
            assert a >= a1 * a2 / rho[0] * (1 - 1e-12) and b <= b1 * b2 * (1 + 1e-12)


def test_toy_pressure_closed_form():
    spec = thermo.similarity_spec([0.5, 0.5], gaps=[0.0])
    for s in (0.5, 1.0, 2.0):
        p = thermo.pressure(spec, s)
        assert p.lower == pytest.approx(math.log(2 * 2 ** -s), abs=1e-14)
    assert thermo.pressure(spec, 1.0).estimate == pytest.approx(0.0, abs=1e-14)


def test_toy_operator_pressure_without_closed_form():
    # same system with the closed form removed: the operator route must reproduce it
    spec = thermo.similarity_spec([1 / 3, 1 / 3])
    del spec.info["pressure"], spec.info["lyapunov"]
    lo, hi = thermo.bowen_dimension(spec, tol=1e-12)
    assert lo - 1e-10 <= math.log(2) / math.log(3) <= hi + 1e-10


def test_cylinder_sum_matches_operator(gasket):
    spec, op, _, _ = gasket
    p = thermo.pressure(spec, 1.2, op=op)
    # the sup-side cylinder sum is submultiplicative, so it bounds P from above at every m,
    # and the naive estimates approach the operator value as m grows
    gaps = []
    for m in (1, 2):
        lo, hi = thermo.pressure_cylinder_sum(spec, 1.2, m=m, K=20)
        assert hi > p.upper
        gaps.append(abs(0.5 * (lo + hi) - p.estimate))
    assert gaps[1] < gaps[0]
    assert p.lower <= p.estimate <= p.upper


def test_pressure_monotone(gasket):
    spec, op, _, _ = gasket
    vals = [op.log_eigenvalue(s) for s in (1.0, 1.2, 1.3, 1.5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(NonSummable):
        thermo.pressure(spec, 0.5, op=op)


def test_pressure_zero_near_dimension(gasket):
    spec, op, _, _ = gasket
    p = thermo.pressure(spec, D_GASKET, op=op)
    assert p.lower <= 0 <= p.upper
    assert p.upper - p.lower < 2e-3


def test_dimension_contains_value(gasket, symmetric_report):
    lo, hi = symmetric_report.D_bracket
    assert lo <= D_GASKET <= hi and hi - lo < 5e-3


def test_transfer_apply_toy():
    r = 0.4
    spec = thermo.linear_spec([r], [0.0], m=2)
    out = thermo.transfer_apply(spec, 1.7, lambda v, z: np.ones(len(z)))
    _, vals = out[0]
    assert np.allclose(vals, r ** 1.7, rtol=1e-12)


def test_transfer_linearity(gasket):
    spec, op, _, D = gasket
    g1 = lambda v, z: np.real(z) + 2
    g2 = lambda v, z: np.abs(z) ** 2
    a = thermo.transfer_apply(spec, D, lambda v, z: 3 * g1(v, z) + g2(v, z), op=op)
    b = thermo.transfer_apply(spec, D, g1, op=op)
    c = thermo.transfer_apply(spec, D, g2, op=op)
    for v in a:
        assert np.allclose(a[v][1], 3 * b[v][1] + c[v][1], rtol=1e-10)


def test_eigen_data(gasket):
    _, _, ed, _ = gasket
    assert abs(ed.eigenvalue - 1) < 1e-3
    assert ed.R > 0 and ed.gamma < 1
    assert ed.integrate(lambda v, z: ed.h_at(v, z)) == pytest.approx(1.0, abs=1e-8)
    # log residuals decrease roughly linearly
    assert ed.residuals[-1] < 1e-6 * ed.residuals[0] or ed.residuals[-1] < 1e-12


def test_uniform_weights_equal_ratios():
    spec = thermo.similarity_spec([0.25] * 3)
    D = math.log(3) / math.log(4)
    meas, _ = thermo.conformal_measure(spec, D, m=2)
    assert np.allclose(meas.weights, 1 / 9, atol=1e-12)


def test_measure_symmetry_and_gibbs(gasket):
    spec, op, ed, D = gasket
    meas = thermo.cylinder_measures(spec, ed, 1, 10)
    perm = {1: 2, 2: 3, 3: 1}
    table = {(w.letters, w.terminal): x for w, x in zip(meas.words, meas.weights)}
    worst = 0.0
    for (letters, t), x in table.items():
        img = (tuple((perm[v], k) for v, k in letters), perm[t])
        worst = max(worst, abs(table[img] - x) / x)
    assert worst < 1e-6
    cs = [thermo.cylinder_measures(spec, ed, m, K).gibbs_constant for m, K in ((1, 10), (2, 5))]
    assert all(c >= 1 for c in cs) and max(cs) / min(cs) < 2


def test_lyapunov_toy():
    spec = thermo.similarity_spec([0.2, 0.2])
    D = math.log(2) / math.log(5)
    assert thermo.lyapunov_exponent(spec, D) == pytest.approx(math.log(5), rel=1e-14)


def test_lyapunov_routes_and_entropy(gasket):
    spec, op, _, D = gasket
    a, b = thermo.lyapunov_exponent(spec, D, op=op, both=True)
    assert abs(a - b) < 5e-3
    h, resid = thermo.entropy(spec, D, op=op)
    assert resid < 1e-6


def test_ford_birkhoff_and_lattice(ford):
    spec = thermo.apollonian_spec(ford, K=10)
    w1 = periodic_edge_word([(1, 2, 1), (2, 1, 1)])
    w2 = periodic_edge_word([(1, 2, 1), (2, 1, 2)])
    s1 = thermo.birkhoff_sum(spec, w1)
    assert s1 == pytest.approx(4 * math.log(1 + math.sqrt(5)) - 4 * math.log(2), abs=1e-10)
    assert thermo.birkhoff_sum(spec, w1.rotate()) == pytest.approx(s1, abs=1e-10)
    s2 = thermo.birkhoff_sum(spec, w2)
    assert s2 == pytest.approx(2 * math.log(math.sqrt(3) + 2), abs=1e-10)
    v = thermo.lattice_test(spec, [w1, w2])
    assert v.verdict == "non-lattice" and v.heuristic
    with pytest.raises(NotPeriodic):
        thermo.birkhoff_sum(spec, Word(((1, 1),), 2))


def test_toy_lattice():
    v = thermo.lattice_from_sums([math.log(4), math.log(2)])
    assert v.verdict == "lattice" and v.a == pytest.approx(math.log(2), rel=1e-12)


def test_birkhoff_concatenation():
    spec = thermo.similarity_spec([0.3, 0.5])
    w = Word(((0, 1), (0, 2)), 0, False)
    u = Word(((0, 2), (0, 2), (0, 1)), 0, False)
    lhs = thermo.birkhoff_sum(spec, w.concat(u))
    assert lhs == pytest.approx(thermo.birkhoff_sum(spec, w) + thermo.birkhoff_sum(spec, u), abs=1e-10)


def test_summability_threshold(symmetric):
    spec = thermo.apollonian_spec(symmetric, K=10)
    for s, grows in ((-0.6, False), (-0.45, True)):
        S = thermo.one_cylinder_sums(spec, s, [10, 100, 1000, 10 ** 4, 10 ** 5])
        blocks = np.diff(S)
        ratio = blocks[1:] / blocks[:-1]
        assert np.all(ratio > 1) if grows else np.all(ratio < 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 0.45), min_size=2, max_size=4))
def test_bowen_bracket_contains_similarity_dimension(ratios):
    spec = thermo.similarity_spec(ratios)
    lo, hi = thermo.bowen_dimension(spec, tol=1e-12)
    D = 0.5 * (lo + hi)
    assert abs(sum(r ** D for r in ratios) - 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 0.45), min_size=2, max_size=3), st.floats(0.1, 2), st.floats(0.1, 2))
def test_closed_form_pressure_decreasing(ratios, s1, ds):
    spec = thermo.similarity_spec(ratios)
    assert thermo.pressure(spec, s1).estimate > thermo.pressure(spec, s1 + ds).estimate
