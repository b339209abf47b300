"""Analytic contrast, estimator noise and SNR of the four ghost-imaging protocols.

Per frame three counts enter every estimator: the bucket ``B`` (object arm
summed over the ``R`` transmitting cells), a reference pixel ``A`` correlated
with one bucket cell ("in") and a reference pixel ``O`` outside the object
("out").  ``O`` is independent of ``(B, A)``, but the in and out estimators
share the bucket, so their fluctuations are correlated and the noise of
``S_in - S_out`` includes that covariance.

The computations accept floats and run internally in exact rational
arithmetic by default; raw moments of the bucket grow like ``(R*M*mu)**4``
and the central moments needed here would otherwise lose every significant
digit to cancellation.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from .composition import JointMomentTable, bucket_from_pixel, pixel_from_single
from .geometry import ExperimentParams
from .moments import Number, SourceKind, single_mode


class ProtocolKind(str, enum.Enum):
    G2 = "G2"
    NORMALIZED_G2 = "g2"
    COVARIANCE = "Cov"
    DIFFERENCE_VARIANCE = "Var"

    @classmethod
    def parse(cls, value: "str | ProtocolKind") -> "ProtocolKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        table = {
            "G2": cls.G2,
            "glauber": cls.G2,
            "g2": cls.NORMALIZED_G2,
            "normalizedg2": cls.NORMALIZED_G2,
            "cov": cls.COVARIANCE,
            "covariance": cls.COVARIANCE,
            "var": cls.DIFFERENCE_VARIANCE,
            "variance": cls.DIFFERENCE_VARIANCE,
            "differencevariance": cls.DIFFERENCE_VARIANCE,
        }
        if key in table:
            return table[key]
        low = key.lower().replace("_", "").replace("-", "")
        if low in table and low != "g2":
            return table[low]
        raise ValueError(f"unknown protocol {value!r}")


ALL_PROTOCOLS = tuple(ProtocolKind)


# --- polynomials in (B, A, O) -------------------------------------------------

Monomial = Tuple[int, int, int]


class _Poly:
    """Polynomial in the bucket ``B``, in-pixel ``A`` and out-pixel ``O``."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Monomial, Number]] = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def const(cls, c: Number) -> "_Poly":
        return cls({(0, 0, 0): c})

    def __add__(self, other):
        other = other if isinstance(other, _Poly) else _Poly.const(other)
        out = defaultdict(int, self.terms)
        for k, v in other.terms.items():
            out[k] += v
        return _Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return _Poly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, _Poly) else _Poly.const(-other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, _Poly):
            return _Poly({k: v * other for k, v in self.terms.items()})
        out: Dict[Monomial, Number] = defaultdict(int)
        for (a1, b1, c1), v1 in self.terms.items():
            for (a2, b2, c2), v2 in other.terms.items():
                out[(a1 + a2, b1 + b2, c1 + c2)] += v1 * v2
        return _Poly(out)

    __rmul__ = __mul__


_B = _Poly({(1, 0, 0): 1})
_A = _Poly({(0, 1, 0): 1})
_O = _Poly({(0, 0, 1): 1})


class _Expectation:
    """Expectation of polynomials in ``(B, A, O)`` from a bucket-level table."""

    def __init__(self, table: JointMomentTable):
        if table.out_m is None:
            raise ValueError("a bucket-level moment table is required")
        self.m = table.m
        # marginal of the out pixel equals the pixel marginal of the reference arm
        self.o = [table.m[(0, q)] for q in range(5)]

    def __call__(self, poly: _Poly) -> Number:
        total: Number = 0
        for (i, j, k), c in poly.terms.items():
            if i + j > 4 or k > 4:
                raise ValueError(f"moment B^{i} A^{j} O^{k} exceeds fourth order")
            total += c * self.m[(i, j)] * self.o[k]
        return total

    def var(self, poly: _Poly) -> Number:
        return self(poly * poly) - self(poly) ** 2

    def cov(self, p1: _Poly, p2: _Poly) -> Number:
        return self(p1 * p2) - self(p1) * self(p2)


# --- results ------------------------------------------------------------------


@dataclass
class SnrResult:
    kind: ProtocolKind
    source: SourceKind
    contrast: float
    noise: float
    snr: float
    snr_per_sqrt_frame: float
    frames: int
    degenerate: bool = False
    intermediates: Dict[str, float] = field(default_factory=dict)


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def bucket_moments(params: ExperimentParams, exact: bool = True) -> JointMomentTable:
    conv = _exact if exact else float
    s = single_mode(params.source, conv(params.mu), conv(params.eta1), conv(params.eta2))
    return bucket_from_pixel(pixel_from_single(s, params.modes_per_pixel), params.resolution_cells)


def _statistics(kind: ProtocolKind, E: _Expectation):
    """Per-frame polynomials whose frame averages define the estimator."""
    b, a, o = E(_B), E(_A), E(_O)
    dB, dA, dO = _B - b, _A - a, _O - o
    if kind is ProtocolKind.G2:
        return _B * _A, _B * _O
    if kind is ProtocolKind.COVARIANCE:
        return dB * dA, dB * dO
    if kind is ProtocolKind.DIFFERENCE_VARIANCE:
        return (dB - dA) * (dB - dA), (dB - dO) * (dB - dO)
    raise ValueError(f"no per-frame statistic for {kind}")


def _means(kind: ProtocolKind, params: ExperimentParams, table: JointMomentTable):
    E = _Expectation(table)
    if kind is ProtocolKind.NORMALIZED_G2:
        b, a, o = E(_B), E(_A), E(_O)
        if b == 0 or a == 0 or o == 0:
            raise ZeroDivisionError("g2 undefined: a mean count is zero")
        return E(_B * _A) / (b * a), E(_B * _O) / (b * o)
    s_in, s_out = _statistics(kind, E)
    return E(s_in), E(s_out)


def protocol_mean(kind, params: ExperimentParams, exact: bool = True) -> Tuple[float, float]:
    """Expected ``(S_in, S_out)``.

    Cov carries the ``(K-1)/K`` factor of the plug-in covariance estimator.
    """
    kind = ProtocolKind.parse(kind)
    s_in, s_out = _means(kind, params, bucket_moments(params, exact))
    if kind is ProtocolKind.COVARIANCE:
        f = Fraction(params.frames - 1, params.frames)
        s_in, s_out = s_in * f, s_out * f
    return float(s_in), float(s_out)


def _g2_variance(E: _Expectation) -> Number:
    # delta method over the frame means of (BA, BO, B, A, O)
    stats = [_B * _A, _B * _O, _B, _A, _O]
    G_in, G_out, b, a, o = (E(p) for p in stats)
    if b == 0 or a == 0 or o == 0:
        raise ZeroDivisionError("g2 propagation undefined: a mean count is zero")
    grad = [
        1 / (b * a),
        -1 / (b * o),
        -G_in / (b * b * a) + G_out / (b * b * o),
        -G_in / (b * a * a),
        G_out / (b * o * o),
    ]
    lin = _Poly()
    for g, p in zip(grad, stats):
        lin = lin + p * g
    return E.var(lin)


def frame_variance(kind, table: JointMomentTable) -> Number:
    """Variance of ``S_in - S_out`` times the number of frames (large-K form)."""
    kind = ProtocolKind.parse(kind)
    E = _Expectation(table)
    if kind is ProtocolKind.NORMALIZED_G2:
        return _g2_variance(E)
    s_in, s_out = _statistics(kind, E)
    return E.var(s_in - s_out)


def protocol_variance(kind, params: ExperimentParams, exact: bool = True, finite_frames: bool = False) -> float:
    """Sampling variance of the ``S_in - S_out`` estimator over ``K`` frames.

    With ``finite_frames`` the Var protocol uses the exact variance of
    unbiased sample variances instead of the large-``K`` form.
    """
    kind = ProtocolKind.parse(kind)
    table = bucket_moments(params, exact)
    K = params.frames
    v = frame_variance(kind, table)
    if finite_frames and kind is ProtocolKind.DIFFERENCE_VARIANCE:
        v += _sample_variance_correction(_Expectation(table), K)
    return float(v / K)


def _sample_variance_correction(E: _Expectation, K: int) -> Number:
    """Extra per-frame variance of unbiased sample variances over large-``K``."""
    dB, dA, dO = _B - E(_B), _A - E(_A), _O - E(_O)
    c_in, c_out, c_x = E((dB - dA) * (dB - dA)), E((dB - dO) * (dB - dO)), E((dB - dA) * (dB - dO))
    return 2 * (c_in**2 + c_out**2 - 2 * c_x**2) / (K - 1)


def snr(kind, params: ExperimentParams, exact: bool = True, finite_frames: bool = False) -> SnrResult:
    """Ratio of the mean contrast to its standard deviation.

    For Cov the ``(K-1)/K`` estimator factor multiplies both contrast and
    noise and is left out, so the result is the large-``K`` SNR at any ``K``.
    """
    kind = ProtocolKind.parse(kind)
    table = bucket_moments(params, exact)
    E = _Expectation(table)
    K = params.frames
    s_in, s_out = _means(kind, params, table)
    contrast = s_in - s_out
    var1 = frame_variance(kind, table)
    if finite_frames and kind is ProtocolKind.DIFFERENCE_VARIANCE:
        var1 += _sample_variance_correction(E, K)
    inter = {
        "S_in": float(s_in),
        "S_out": float(s_out),
        "frame_variance": float(var1),
        "bucket_mean": float(E(_B)),
        "pixel_mean": float(E(_A)),
    }
    if kind is ProtocolKind.COVARIANCE:
        inter["estimator_bias_factor"] = (K - 1) / K
    if var1 <= 0:
        degenerate = contrast == 0
        if not degenerate:
            raise ArithmeticError("nonzero contrast with vanishing noise")
        return SnrResult(kind, params.source, 0.0, 0.0, 0.0, 0.0, K, degenerate=True, intermediates=inter)
    per_frame = math.sqrt(float(Fraction(contrast) ** 2 / Fraction(var1))) if isinstance(var1, Fraction) else (
        abs(float(contrast)) / math.sqrt(float(var1))
    )
    noise = math.sqrt(float(var1) / K)
    return SnrResult(
        kind=kind,
        source=params.source,
        contrast=float(contrast),
        noise=noise,
        snr=per_frame * math.sqrt(K),
        snr_per_sqrt_frame=per_frame,
        frames=K,
        intermediates=inter,
    )


# --- closed forms for the lossless case ---------------------------------------


def table1_closed_form(kind, source, mu: float, M: float, R: float) -> float:
    """Lossless (``eta1 = eta2 = 1``) SNR per square-root frame, closed forms."""
    kind = ProtocolKind.parse(kind)
    source = SourceKind.parse(source)
    sq = math.sqrt
    twin = source is SourceKind.TWIN_BEAM
    if kind is ProtocolKind.G2:
        if twin:
            return sq(M * mu * (1 + mu)) / sq(
                1 + mu * (6 + M + 4 * M * R) + mu**2 * (6 + M + 6 * M * R + 2 * M**2 * R**2)
            )
        return sq(M) * mu / sq(
            1
            + 2 * M * R
            + 2 * mu * (2 + 3 * M * R + M**2 * R**2)
            + mu**2 * (6 + M + 6 * M * R + 2 * M**2 * R**2)
        )
    if kind is ProtocolKind.NORMALIZED_G2:
        if twin:
            return sq(M * R * mu * (1 + mu)) / sq(
                1 + mu * R * (2 + M + 2 * M * R) + mu**2 * (-1 + (3 + M) * R + 2 * M * R**2)
            )
        return sq(M * R) * mu / sq(
            -mu * (1 + mu) + (1 + 3 * mu + (3 + M) * mu**2) * R + 2 * M * (1 + mu) ** 2 * R**2
        )
    if kind is ProtocolKind.COVARIANCE:
        if twin:
            return sq(M * mu * (1 + mu)) / sq(1 + mu * (6 + M + 2 * M * R) + mu**2 * (6 + M + 2 * M * R))
        return sq(M) * mu / sq(1 + 2 * M * R + 4 * mu * (1 + M * R) + mu**2 * (6 + M + 2 * M * R))
    if twin:
        return sq(2 * M * mu * (1 + mu)) / sq(1 + mu * (6 + 4 * M * R) + mu**2 * (6 + 4 * M * R))
    return sq(2 * M) * mu**1.5 / sq(
        1 + mu * (7 + M * (2 + 4 * R)) + 8 * mu**2 * (1 + M * R) + mu**3 * (6 + 4 * M * R)
    )


def pump_instability_cov(mu_mean: float, mu_variance: float, eta: float, M: int, R: int) -> Tuple[float, float]:
    """Expected in/out covariance of a twin-beam image when ``mu`` fluctuates frame to frame.

    Returns ``(cov_in, cov_out)``; ``cov_out`` is a spurious background
    correlation growing as ``M**2 * R``.
    """
    if mu_variance < 0:
        raise ValueError("mu_variance must be >= 0")
    if int(R) != R or R < 1 or int(M) != M or M < 1:
        raise ValueError("M and R must be integers >= 1")
    cov_in = eta**2 * M * (mu_mean * (1 + mu_mean) + mu_variance * (1 + R * M))
    cov_out = eta**2 * M**2 * mu_variance * R
    return cov_in, cov_out


def asymptotic_exponent(kind, source, M: int = 1, R: int = 1) -> float:
    """Low-illumination power law of SNR in the illumination level."""
    kind = ProtocolKind.parse(kind)
    source = SourceKind.parse(source)
    if source is SourceKind.TWIN_BEAM:
        return 0.5
    return 1.5 if kind is ProtocolKind.DIFFERENCE_VARIANCE else 1.0
