"""Self-validation suites run by ``ghostsnr validate``.

Each check records what was measured, what it was compared against and the
tolerance.  Failures are report content, not exceptions.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .composition import bucket_from_pixel, pixel_from_single
from .geometry import ExperimentParams
from .moments import SourceKind, single_mode
from .protocols import ALL_PROTOCOLS, asymptotic_exponent, pump_instability_cov, snr, table1_closed_form
from .simulator import MaskSpec, empirical_moments, normalize_frames, sample_stack

TABLE1_MU = (0.01, 0.2, 1.0, 10.0, 1e4)
TABLE1_M = (1, 4, 100)
TABLE1_R = (1, 10, 100)
SOURCES = (SourceKind.TWIN_BEAM, SourceKind.THERMAL)


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    detail: Dict = field(default_factory=dict)


def suite_table1() -> List[Check]:
    checks = []
    for source, kind in itertools.product(SOURCES, ALL_PROTOCOLS):
        worst, where = 0.0, None
        for mu, M, R in itertools.product(TABLE1_MU, TABLE1_M, TABLE1_R):
            got = snr(kind, ExperimentParams(source, mu, M, 1.0, 1.0, R, 2)).snr_per_sqrt_frame
            ref = table1_closed_form(kind, source, mu, M, R)
            err = abs(got - ref) / ref
            if err >= worst:
                worst, where = err, {"mu": mu, "M": M, "R": R, "pipeline": got, "closed_form": ref}
        checks.append(Check("table1", f"{source.value}/{kind.value}", worst <= 1e-9, worst, 0.0, 1e-9, where))
    return checks


def _loglog_slope(f: Callable[[float], float], lo: float, hi: float, n: int = 11) -> float:
    x = np.logspace(math.log10(lo), math.log10(hi), n)
    y = np.log([f(v) for v in x])
    return float(np.polyfit(np.log(x), y, 1)[0])


def suite_asymptotics(lo: float = 1e-3, hi: float = 1e-2, tol: float = 0.1) -> List[Check]:
    """Fitted low-illumination log-log slopes at M=1, R=100, eta=1."""
    checks = []
    for source, kind in itertools.product(SOURCES, ALL_PROTOCOLS):
        base = ExperimentParams(source, 1.0, 1, 1.0, 1.0, 100, 2)
        slope = _loglog_slope(lambda I: snr(kind, base.with_illumination(I)).snr_per_sqrt_frame, lo, hi)
        expected = asymptotic_exponent(kind, source)
        checks.append(
            Check("asymptotics", f"{source.value}/{kind.value} [{lo:g},{hi:g}]", abs(slope - expected) <= tol, slope, expected, tol)
        )
    return checks


def _max_z(emp, analytic) -> float:
    return max(abs(z) for z in emp.z(analytic).values())


def suite_oracle(samples: int = 1_000_000, seed: int = 1, z_max: float = 5.0) -> List[Check]:
    """Analytic moments against per-mode Monte-Carlo sampling."""
    cases = [
        (SourceKind.TWIN_BEAM, 0.2, 0.62, 0.62, 1, 2),
        (SourceKind.THERMAL, 2.0, 1.0, 1.0, 1, 2),
        (SourceKind.TWIN_BEAM, 0.5, 0.9, 0.7, 2, 2),
        (SourceKind.THERMAL, 0.5, 0.9, 0.7, 7, 3),
        (SourceKind.TWIN_BEAM, 0.3, 0.8, 0.6, 7, 3),
        (SourceKind.THERMAL, 2.0, 1.0, 1.0, 1, 3),
    ]
    checks = []
    for i, (source, mu, e1, e2, M, R) in enumerate(cases):
        p = ExperimentParams(source, mu, M, e1, e2, R, samples)
        stack = sample_stack(p, MaskSpec.strip(R, 1), seed + i, method="per_mode")
        emp = empirical_moments(stack)
        pix = pixel_from_single(single_mode(source, mu, e1, e2), M)
        bucket = bucket_from_pixel(pix, R)
        label = f"{source.value} mu={mu} eta=({e1},{e2}) M={M} R={R}"
        for level, ref in (("pixel", pix.m), ("bucket", bucket.m), ("out", bucket.out_m)):
            z = _max_z(emp[level], {k: float(v) for k, v in ref.items()})
            checks.append(Check("oracle", f"{label} {level}", z <= z_max, z, 0.0, z_max))
    return checks


def pump_variance_from_power(mu_mean: float, power_rel_sd: float = 0.14) -> float:
    # mu taken proportional to the square of the pump power
    return (2 * power_rel_sd * mu_mean) ** 2


def pump_experiment(frames: int = 4000, seed: int = 7, mu: float = 0.2, eta: float = 0.42, M: int = 100, R: int = 25,
                    analysis_cells: int = 25, monitor_cells: int = 1950) -> Dict[str, float]:
    """Bucket/out-pixel covariance with a fluctuating pump, before and after normalization.

    The grid holds ``R`` transmitting cells, ``analysis_cells`` opaque cells
    on which the out covariance is measured and ``monitor_cells`` opaque
    cells used only for frame normalization.
    """
    V = pump_variance_from_power(mu)
    p = ExperimentParams(SourceKind.TWIN_BEAM, mu, M, eta, eta, R, frames, V)
    n = R + analysis_cells + monitor_cells
    t = np.zeros((1, n), dtype=bool)
    t[0, :R] = True
    analysis = np.zeros_like(t)
    analysis[0, R : R + analysis_cells] = True
    monitor = ~t & ~analysis
    mask = MaskSpec(t)
    stack = sample_stack(p, mask, seed)
    out = {"expected_pre": pump_instability_cov(mu, V, eta, M, R)[1], "mu_variance": V}
    for tag, s in (("pre", stack), ("post", normalize_frames(stack, monitor))):
        c, se = out_covariance(s.bucket, s.reference_cells()[:, analysis.ravel()])
        out[f"cov_{tag}"], out[f"se_{tag}"] = c, se
    return out


def out_covariance(bucket: np.ndarray, cells: np.ndarray, blocks: int = 100):
    """Cell-averaged plug-in covariance of the bucket with each column, and its jackknife SE."""
    K = len(bucket)
    size = K // blocks

    def est(sel):
        b = bucket[sel]
        c = cells[sel]
        return float(((b[:, None] * c).mean(axis=0) - b.mean() * c.mean(axis=0)).mean())

    full = est(slice(None))
    loo = []
    for i in range(blocks):
        keep = np.ones(K, dtype=bool)
        keep[i * size : (i + 1) * size] = False
        loo.append(est(keep))
    loo = np.asarray(loo)
    se = float(np.sqrt((blocks - 1) / blocks * ((loo - loo.mean()) ** 2).sum()))
    return full, se


def suite_pump(frames: int = 4000, seed: int = 7, z_max: float = 5.0) -> List[Check]:
    r = pump_experiment(frames=frames, seed=seed)
    z_pre = (r["cov_pre"] - r["expected_pre"]) / r["se_pre"]
    z_post = r["cov_post"] / r["se_post"]
    return [
        Check("pump", "out covariance before normalization", abs(z_pre) <= z_max, r["cov_pre"], r["expected_pre"], z_max, {"z": z_pre, "se": r["se_pre"]}),
        Check("pump", "out covariance after normalization", abs(z_post) <= z_max, r["cov_post"], 0.0, z_max, {"z": z_post, "se": r["se_post"]}),
    ]


SUITES = {
    "table1": suite_table1,
    "oracle": suite_oracle,
    "asymptotics": suite_asymptotics,
    "pump": suite_pump,
}


def validate(suites=("table1", "oracle", "asymptotics", "pump"), **options) -> Dict:
    report = {"suites": {}, "passed": True}
    for name in suites:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        t0 = time.perf_counter()
        kwargs = options.get(name, {})
        checks = SUITES[name](**kwargs)
        ok = all(c.passed for c in checks)
        report["suites"][name] = {
            "passed": ok,
            "seconds": time.perf_counter() - t0,
            "checks": [asdict(c) for c in checks],
        }
        report["passed"] &= ok
    return report
