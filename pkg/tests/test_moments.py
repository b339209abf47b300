from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from ghostsnr.moments import (
    INDEX_PAIRS,
    SourceKind,
    difference_variance,
    marginal_moments,
    single_mode,
    thermal_single_mode,
    twin_single_mode,
)

fractions_01 = st.fractions(min_value=0, max_value=1, max_denominator=50)
positive_mu = st.fractions(min_value=Fraction(1, 100), max_value=20, max_denominator=100)
sources = st.sampled_from(["twin", "thermal"])


def test_twin_marginals_at_unit_brightness():
    t = twin_single_mode(1, 1, 1)
    assert [t[(k, 0)] for k in range(1, 5)] == [1, 3, 13, 75]
    assert t[(1, 1)] == 3 and t[(2, 1)] == 13 and t[(3, 1)] == 75 and t[(2, 2)] == 75


def test_thermal_cross_moments_at_unit_brightness():
    t = thermal_single_mode(1, 1, 1)
    assert t[(1, 1)] == 2
    assert t[(2, 1)] == 8
    assert t[(2, 2)] == 38
    assert t[(3, 1)] == 44


def test_thermal_third_by_first_uses_corrected_form():
    t = thermal_single_mode(2, 1, 1)
    assert t[(3, 1)] == 536
    # the uncorrected prefactor would give half of this
    assert t[(3, 1)] != 268


def test_zero_efficiency_reduces_to_zero_moments():
    for source in ("twin", "thermal"):
        t = single_mode(source, Fraction(3, 10), 0, Fraction(1, 2))
        for p, q in INDEX_PAIRS:
            if p > 0:
                assert t[(p, q)] == 0
        assert t[(0, 2)] == marginal_moments(Fraction(3, 10), Fraction(1, 2))[1]


def test_invalid_domain_is_rejected():
    with pytest.raises(ValueError):
        twin_single_mode(0, 1, 1)
    with pytest.raises(ValueError):
        thermal_single_mode(1, 1.2, 1)
    with pytest.raises(ValueError):
        twin_single_mode(1, 0.5, -0.1)
    with pytest.raises(ValueError):
        single_mode("laser", 1, 1, 1)


def test_source_aliases():
    assert SourceKind.parse("TwGI") is SourceKind.TWIN_BEAM
    assert SourceKind.parse("thermal") is SourceKind.THERMAL


@given(sources, positive_mu, fractions_01, fractions_01)
def test_matches_exact_factorial_moment_derivation(source, mu, e1, e2):
    t = single_mode(source, mu, e1, e2)
    ref = oracles.exact_single_mode(source, mu, e1, e2)
    for k in INDEX_PAIRS:
        assert t[k] == ref[k]


@given(sources, positive_mu, fractions_01, fractions_01)
def test_arm_exchange_symmetry(source, mu, e1, e2):
    a = single_mode(source, mu, e1, e2)
    b = single_mode(source, mu, e2, e1)
    for p, q in INDEX_PAIRS:
        assert a[(p, q)] == b[(q, p)]


@given(sources, positive_mu, fractions_01, fractions_01)
def test_cauchy_schwarz(source, mu, e1, e2):
    t = single_mode(source, mu, e1, e2)
    assert t[(1, 1)] ** 2 <= t[(2, 0)] * t[(0, 2)]
    assert t[(2, 1)] ** 2 <= t[(4, 0)] * t[(0, 2)]
    assert t[(2, 2)] ** 2 <= t[(4, 0)] * t[(0, 4)]


@given(positive_mu)
def test_lossless_twin_arms_are_identical(mu):
    t = twin_single_mode(mu, 1, 1)
    for p, q in INDEX_PAIRS:
        assert t[(p, q)] == t[(p + q, 0)]


@given(positive_mu, fractions_01.filter(lambda e: e > 0))
def test_twin_covariance_exceeds_thermal(mu, eta):
    tw = twin_single_mode(mu, eta, eta)
    th = thermal_single_mode(mu, eta, eta)
    cov_tw = tw[(1, 1)] - tw[(1, 0)] * tw[(0, 1)]
    cov_th = th[(1, 1)] - th[(1, 0)] * th[(0, 1)]
    assert cov_tw > cov_th
    assert cov_tw - cov_th == eta**2 * mu


def test_difference_variance_values():
    assert difference_variance("twin", Fraction(1, 5), Fraction(1, 2)) == 2 * Fraction(1, 2) * Fraction(1, 5) * Fraction(1, 2)
    assert difference_variance("thermal", Fraction(1, 5), Fraction(1, 2)) == 2 * Fraction(1, 2) * Fraction(1, 5)
    assert difference_variance("twin", 3, 1) == 0


@given(sources, positive_mu, fractions_01)
def test_difference_variance_matches_moment_table(source, mu, eta):
    t = single_mode(source, mu, eta, eta)
    var = t[(2, 0)] + t[(0, 2)] - 2 * t[(1, 1)] - (t[(1, 0)] - t[(0, 1)]) ** 2
    assert difference_variance(source, mu, eta) == var


@pytest.mark.parametrize(
    "source,mu,e1,e2",
    [("twin", 0.2, 0.62, 0.62), ("thermal", 2.0, 1.0, 1.0), ("twin", 1.0, 0.9, 0.4), ("thermal", 0.3, 0.42, 0.8)],
)
def test_sampling_oracle_agreement(source, mu, e1, e2):
    rng = np.random.default_rng(2024)
    a, b = oracles.mode_pairs(rng, source, mu, e1, e2, 1_000_000)
    m, se = oracles.sample_moments(a, b)
    assert oracles.within(m, se, single_mode(source, mu, e1, e2).as_float()) < 5
