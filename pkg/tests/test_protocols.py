import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ghostsnr.geometry import ExperimentParams
from ghostsnr.protocols import (
    ALL_PROTOCOLS,
    ProtocolKind,
    asymptotic_exponent,
    protocol_mean,
    protocol_variance,
    pump_instability_cov,
    snr,
    table1_closed_form,
)


def params(**kw):
    base = dict(source="twin", mu=1.0, modes_per_pixel=1, eta1=1.0, eta2=1.0, resolution_cells=1, frames=1000)
    base.update(kw)
    return ExperimentParams(**base)


@pytest.mark.parametrize(
    "kind,source,expected",
    [
        ("Cov", "twin", math.sqrt(2) / math.sqrt(19)),
        ("Cov", "thermal", 1 / math.sqrt(20)),
        ("g2", "twin", math.sqrt(2) / math.sqrt(11)),
        ("Var", "twin", 2 / math.sqrt(21)),
        ("G2", "twin", math.sqrt(2) / math.sqrt(27)),
        ("G2", "thermal", 1 / math.sqrt(30)),
        ("Var", "thermal", math.sqrt(2) / math.sqrt(40)),
    ],
)
def test_unit_brightness_spot_values(kind, source, expected):
    got = snr(kind, params(source=source)).snr_per_sqrt_frame
    assert got == pytest.approx(expected, rel=1e-12)
    assert table1_closed_form(kind, source, 1, 1, 1) == pytest.approx(expected, rel=1e-12)


def test_pipeline_reproduces_closed_forms_on_grid():
    grid = itertools.product(ALL_PROTOCOLS, ("twin", "thermal"), (0.01, 0.2, 1.0, 10.0, 1e4), (1, 4, 100), (1, 10, 100))
    for kind, source, mu, M, R in grid:
        got = snr(kind, params(source=source, mu=mu, modes_per_pixel=M, resolution_cells=R)).snr_per_sqrt_frame
        assert got == pytest.approx(table1_closed_form(kind, source, mu, M, R), rel=1e-9)


def test_float_path_agrees_with_exact_path_at_moderate_scale():
    p = params(mu=0.7, modes_per_pixel=4, resolution_cells=10, eta1=0.6, eta2=0.5)
    for kind in ALL_PROTOCOLS:
        assert snr(kind, p, exact=False).snr == pytest.approx(snr(kind, p).snr, rel=1e-9)


@pytest.mark.parametrize("source", ["twin", "thermal"])
def test_covariance_out_region_is_zero(source):
    _, s_out = protocol_mean("Cov", params(source=source, mu=0.3, modes_per_pixel=5, resolution_cells=7, eta1=0.5))
    assert s_out == 0


def test_covariance_contrast_at_large_frame_count():
    for R in (1, 10, 100):
        s_in, s_out = protocol_mean("Cov", params(resolution_cells=R, frames=10**9))
        assert s_in - s_out == pytest.approx(2, rel=1e-8)
    s_in, _ = protocol_mean("Cov", params(frames=4))
    assert s_in == pytest.approx(2 * 3 / 4)


def test_thermal_normalized_correlation_out_is_one():
    for mu in (0.1, 3.0, 100.0):
        _, s_out = protocol_mean("g2", params(source="thermal", mu=mu))
        assert s_out == pytest.approx(1.0, rel=1e-14)


def test_snr_result_invariants():
    p = params(source="thermal", mu=0.4, modes_per_pixel=3, resolution_cells=5, frames=400, eta2=0.7)
    r = snr("Var", p)
    assert r.snr == pytest.approx(abs(r.contrast) / r.noise, rel=1e-12)
    assert r.snr_per_sqrt_frame * math.sqrt(r.frames) == pytest.approx(r.snr, rel=1e-12)
    assert r.noise**2 == pytest.approx(protocol_variance("Var", p), rel=1e-12)
    assert {"S_in", "S_out", "frame_variance"} <= set(r.intermediates)


@pytest.mark.parametrize("kind", ["G2", "Cov", "Var"])
def test_snr_scales_as_square_root_of_frames(kind):
    a = snr(kind, params(mu=0.5, modes_per_pixel=3, resolution_cells=4, frames=100))
    b = snr(kind, params(mu=0.5, modes_per_pixel=3, resolution_cells=4, frames=10000))
    assert b.snr / a.snr == pytest.approx(10.0, rel=1e-12)


def test_finite_frame_option_only_changes_var_and_vanishes_at_large_k():
    p = params(source="thermal", mu=0.5, resolution_cells=3, frames=10)
    assert snr("Var", p, finite_frames=True).snr < snr("Var", p).snr
    assert snr("Cov", p, finite_frames=True).snr == snr("Cov", p).snr
    big = p.with_(frames=10**8)
    assert snr("Var", big, finite_frames=True).snr == pytest.approx(snr("Var", big).snr, rel=1e-6)
    assert protocol_variance("Var", p, finite_frames=True) > protocol_variance("Var", p)


def test_zero_efficiency_is_degenerate():
    r = snr("Cov", params(eta1=0.0, resolution_cells=3))
    assert r.degenerate and r.snr == 0


def test_normalized_correlation_rejects_zero_means():
    with pytest.raises(ZeroDivisionError):
        protocol_mean("g2", params(eta1=0.0))
    with pytest.raises(ZeroDivisionError):
        protocol_variance("g2", params(eta2=0.0))


def test_protocol_aliases():
    assert ProtocolKind.parse("covariance") is ProtocolKind.COVARIANCE
    assert ProtocolKind.parse("g2") is ProtocolKind.NORMALIZED_G2
    assert ProtocolKind.parse("G2") is ProtocolKind.G2
    with pytest.raises(ValueError):
        ProtocolKind.parse("g3")


etas = st.sampled_from([Fraction(1), Fraction(62, 100), Fraction(42, 100), Fraction(1, 10)])


@given(
    st.sampled_from(ALL_PROTOCOLS),
    st.sampled_from([0.01, 0.2, 1.0, 10.0]),
    st.sampled_from([1, 4, 100]),
    st.sampled_from([1, 10, 100]),
    etas,
)
def test_twin_beams_never_lose_to_thermal_light(kind, mu, M, R, eta):
    tw = snr(kind, params(mu=mu, modes_per_pixel=M, resolution_cells=R, eta1=eta, eta2=eta)).snr
    th = snr(kind, params(source="thermal", mu=mu, modes_per_pixel=M, resolution_cells=R, eta1=eta, eta2=eta)).snr
    assert tw >= th


def test_plateau_at_high_illumination():
    for kind, source in itertools.product(("g2", "Cov", "Var"), ("twin", "thermal")):
        p = params(source=source, resolution_cells=100).with_illumination(1e4)
        assert snr(kind, p).snr_per_sqrt_frame == pytest.approx((2 * 100) ** -0.5, rel=0.05)


def test_g2_degrades_as_inverse_resolution_while_covariance_as_inverse_root():
    g, c = [], []
    for R in (10, 100, 1000, 10000):
        g.append(table1_closed_form("G2", "twin", 100, 1, R) * R)
        c.append(table1_closed_form("Cov", "twin", 100, 1, R) * math.sqrt(R))
    assert g[-1] == pytest.approx(g[-2], rel=0.02) and g[-1] > 0
    assert c[-1] == pytest.approx(c[-2], rel=0.01) and c[-1] > 0


def test_twin_covariance_is_insensitive_to_mode_count():
    for mu in (0.2, 1.0):
        one = snr("Cov", params(mu=mu, resolution_cells=1000)).snr_per_sqrt_frame
        many = snr("Cov", params(mu=mu, resolution_cells=1000, modes_per_pixel=10000)).snr_per_sqrt_frame
        assert abs(one - many) / many < 0.01


def test_thermal_covariance_invariant_to_balanced_losses_at_fixed_illumination():
    vals = [snr("Cov", params(source="thermal", resolution_cells=100, eta1=e, eta2=e).with_illumination(1e4)).snr for e in (1.0, 0.5, 0.1)]
    assert max(vals) / min(vals) - 1 < 1e-6


def test_pump_instability_covariances():
    assert pump_instability_cov(0.2, 0.0, 0.42, 100, 25) == pytest.approx((0.42**2 * 100 * 0.2 * 1.2, 0.0))
    V = (0.14 * 2 * 0.2) ** 2
    cov_in, cov_out = pump_instability_cov(0.2, V, 0.42, 20000, 100)
    assert cov_out == pytest.approx(0.42**2 * 20000**2 * V * 100)
    assert cov_out > 100 * 0.42**2 * 20000 * 0.2 * 1.2
    assert cov_in - cov_out == pytest.approx(0.42**2 * 20000 * (0.2 * 1.2 + V))
    with pytest.raises(ValueError):
        pump_instability_cov(0.2, V, 0.42, 100, 0)
    with pytest.raises(ValueError):
        pump_instability_cov(0.2, -1.0, 0.42, 100, 1)


@pytest.mark.parametrize(
    "kind,source,exponent",
    [("Var", "thermal", 1.5), ("Cov", "twin", 0.5), ("G2", "thermal", 1.0), ("g2", "thermal", 1.0), ("G2", "twin", 0.5)],
)
def test_asymptotic_exponents(kind, source, exponent):
    assert asymptotic_exponent(kind, source) == exponent


@pytest.mark.parametrize("kind,source", list(itertools.product(ALL_PROTOCOLS, ("twin", "thermal"))))
def test_deep_low_illumination_slope_matches_exponent(kind, source):
    base = params(source=source, resolution_cells=100)
    lo, hi = 1e-9, 1e-8
    s_lo = snr(kind, base.with_illumination(lo)).snr
    s_hi = snr(kind, base.with_illumination(hi)).snr
    slope = math.log(s_hi / s_lo) / math.log(hi / lo)
    assert slope == pytest.approx(asymptotic_exponent(kind, source), abs=0.01)
