import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apollonian import numth as nt, thermo
from apollonian.errors import ConditionViolated


def test_zeta_values():
    assert abs(nt.zeta(2) - math.pi ** 2 / 6) < 1e-12
    assert abs(nt.zeta(4) - math.pi ** 4 / 90) < 1e-12
    assert abs(nt.zeta(3) - 1.2020569031595942) < 1e-12


def test_zeta_tools_evens():
    z, zl, dl = nt.zeta_tools(3.0, nt.DigitSet.parse("even"))
    assert abs(zl - 2 ** -3 * z) < 1e-12
    # (log zeta_Lambda)' = -log 2 + zeta'/zeta
    h = 1e-5
    num = (math.log(nt.DigitSet.parse("even").zeta(3 + h).real) - math.log(nt.DigitSet.parse("even").zeta(3 - h).real)) / (2 * h)
    assert abs(dl - num) < 1e-8


def test_digit_parse_forms():
    assert 4 not in nt.DigitSet.parse("exclude:4,7") and 5 in nt.DigitSet.parse("exclude:4,7")
    assert list(nt.DigitSet.parse("odd").upto(7)) == [1, 3, 5, 7]
    assert nt.DigitSet.parse("2,3").finite == (2, 3)


def test_lueroth_naturals_dimension_one():
    assert nt.lueroth_delta(nt.DigitSet.naturals(), 2.0) == pytest.approx(1.0, abs=1e-12)


def test_lueroth_delta_resubstitution():
    d = nt.DigitSet.naturals([1])
    delta = nt.lueroth_delta(d, 2.0)
    resid = math.log(d.zeta(2 * delta).real) - delta * math.log(nt.zeta(2.0))
    assert abs(resid) < 1e-10 and 0 < delta < 1


def test_lueroth_delta_monotone_in_digits():
    sets = [nt.DigitSet.of(range(1, n)) for n in (8, 6, 4, 3)]
    ds = [nt.lueroth_delta(D, 2.0) for D in sets]
    assert all(a > b for a, b in zip(ds, ds[1:]))


def test_lueroth_branch_lengths():
    L = nt.LuerothSystem(2.0, nt.DigitSet.naturals())
    n = np.arange(1, 200)
    t = L.t(n)
    assert np.max(np.abs(t[:-1] - t[1:] - L.a(n[:-1]))) < 1e-13


def test_lueroth_finite_content_vs_interval_oracle():
    d = nt.DigitSet.of([2, 3])
    res = nt.lueroth_content(d, 2.0)
    direct = nt.lueroth_direct(nt.LuerothSystem(2.0, d), 2.0 ** -20)
    assert abs(direct / res.content - 1) < 0.02


def test_lueroth_cofinite_matches_closed_form():
    res = nt.lueroth_content(nt.DigitSet.naturals([3]), 2.0)
    assert res.closed_form is not None
    assert res.content == pytest.approx(res.closed_form, rel=1e-8)


def test_lueroth_equal_dimension_different_content():
    a = nt.DigitSet.of([2, 3])
    b = nt.DigitSet.of([1, 5])
    da = nt.lueroth_delta(a, 2.0)
    sb = nt.matching_s(b, da, hi=2.0)
    ra, rb = nt.lueroth_content(a, 2.0), nt.lueroth_content(b, sb)
    assert abs(ra.delta - rb.delta) < 1e-10
    assert abs(ra.content - rb.content) > 0.05 * ra.content


def test_lueroth_lattice_refusal():
    digits, s = nt.lattice_preset()
    out = nt.lueroth_content(digits, s)
    assert isinstance(out, nt.LatticeRefusal)
    assert out.amplitude > 0 and out.span > 0


def test_cf_two_digits_dimension():
    d = nt.DigitSet.of([1, 2])
    lo, hi = thermo.bowen_dimension(nt.cf_system(d))
    assert lo - 5e-3 <= 0.531 <= hi + 5e-3
    assert abs(nt.cf_covering_dimension(d) - 0.5 * (lo + hi)) < 2e-2


def test_cf_no_one_dimension_cross_check():
    d = nt.DigitSet.naturals([1])
    lo, hi = thermo.bowen_dimension(nt.cf_system(d, K=100, m=6, degree=16))
    assert abs(nt.cf_covering_dimension(d) - 0.5 * (lo + hi)) < 2e-2


def test_cf_truncations_increase():
    Ds = [thermo.bowen_dimension(nt.cf_system(nt.DigitSet.of(range(1, K + 1)), K=K, degree=12))[0]
          for K in (2, 4, 8)]
    assert Ds[0] < Ds[1] < Ds[2] < 1


def test_cf_derivative_envelope():
    x = np.linspace(0, 1, 101)
    for k in (1, 2, 7, 50):
        assert np.all(1 / (k + x) ** 2 <= k ** -2.0 + 1e-15)


def test_cf_neighbor_condition():
    with pytest.raises(ConditionViolated):
        nt.cf_content(nt.DigitSet.of([1, 2]))
    assert nt.DigitSet.parse("odd").neighbor_condition()
    assert nt.DigitSet.parse("even").neighbor_condition()
    assert not nt.DigitSet.naturals([4, 5]).neighbor_condition()


def test_cf_exclude_five_vs_oracle():
    d = nt.DigitSet.parse("exclude:5")
    res = nt.cf_content(d)
    assert abs(nt.cf_direct(d, res.D, 2.0 ** -18) / res.content - 1) < 0.03


def test_cf_odd_stabilizes():
    res = nt.cf_content(nt.DigitSet.parse("odd"))
    assert 0 < res.D < 1 and res.gap_limit_error < 1e-2 * res.gap_limit


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 8.0))
def test_delta_of_naturals_is_one(s):
    assert nt.lueroth_delta(nt.DigitSet.naturals(), s) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=2, max_size=5, unique=True), st.floats(1.5, 4.0))
def test_delta_resubstitution_property(digits, s):
    d = nt.DigitSet.of(digits)
    delta = nt.lueroth_delta(d, s)
    assert abs(math.log(d.zeta(delta * s).real) - delta * math.log(nt.zeta(s))) < 1e-10
