"""Lift single-mode moments to pixel level (M modes) and bucket level (R cells).

A pixel sums ``M`` independent, identically distributed mode pairs; the bucket
sums ``R`` independent pixels of the object arm, exactly one of which is
correlated with the tracked reference pixel ("in").  A reference pixel that
sees light not passing through the mask ("out") is independent of the bucket.

Composition must not be nested: a pixel of ``a*b`` modes is not a pixel of
``b`` "modes" that are themselves ``a``-mode pixels fed through the same
polynomials unless those are re-derived; always compose from the single-mode
table.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Dict, Optional, Tuple

from .moments import INDEX_PAIRS, Number, SingleModeJointMoments, SourceKind

Table = Dict[Tuple[int, int], Number]

SINGLE_MODE = "single-mode"
PIXEL = "pixel"
BUCKET = "bucket-by-pixel"


@dataclass(frozen=True)
class JointMomentTable:
    """Raw joint moments ``<X1**p X2**q>``, ``p + q <= 4``.

    ``(X1, X2)`` is ``(n1, n2)``, ``(N1, N2)`` or ``(bucket, N2_in)``
    depending on ``level``.  At bucket level ``out_m`` carries
    ``<bucket**p N2_out**q>``.
    """

    level: str
    m: Table
    source: Optional[SourceKind] = None
    modes: int = 1
    cells: int = 1
    out_m: Optional[Table] = None

    def __getitem__(self, pq: Tuple[int, int]) -> Number:
        return self.m[pq]

    def out(self) -> "JointMomentTable":
        """The bucket/out-pixel table as a table of its own."""
        if self.out_m is None:
            raise ValueError("out-pixel moments exist only at bucket level")
        return JointMomentTable(level=self.level, m=self.out_m, source=self.source, modes=self.modes, cells=self.cells)

    def as_float(self) -> Dict[Tuple[int, int], float]:
        return {k: float(v) for k, v in self.m.items()}


def single_mode_table(s: SingleModeJointMoments) -> JointMomentTable:
    return JointMomentTable(level=SINGLE_MODE, m=dict(s.m), source=s.source)


def _raw(s: "SingleModeJointMoments | JointMomentTable | Table") -> Table:
    if isinstance(s, (SingleModeJointMoments, JointMomentTable)):
        return s.m
    return s


def _sum_marginal(x, k: int) -> Tuple[Number, Number, Number, Number]:
    """First four raw moments of a sum of ``k`` iid copies; ``x[p]`` is the p-th moment."""
    k2 = k * (k - 1)
    k3 = k2 * (k - 2)
    k4 = k3 * (k - 3)
    return (
        k * x[1],
        k * x[2] + k2 * x[1] ** 2,
        k * x[3] + 3 * k2 * x[2] * x[1] + k3 * x[1] ** 3,
        k * x[4] + k2 * (3 * x[2] ** 2 + 4 * x[3] * x[1]) + 6 * k3 * x[2] * x[1] ** 2 + k4 * x[1] ** 4,
    )


def _sum_iid(n: Table, k: int) -> Table:
    """Joint moments of the sum of ``k`` iid copies of a pair with moments ``n``."""
    k1 = k
    k2 = k * (k - 1)
    k3 = k2 * (k - 2)
    k4 = k3 * (k - 3)

    out: Table = {(0, 0): n[(0, 0)]}
    for p, v in enumerate(_sum_marginal([n[(i, 0)] for i in range(5)], k), start=1):
        out[(p, 0)] = v
    for q, v in enumerate(_sum_marginal([n[(0, i)] for i in range(5)], k), start=1):
        out[(0, q)] = v

    def swap(t: Table) -> Table:
        return {(q, p): v for (p, q), v in t.items()}

    def n21(t: Table) -> Number:
        return k1 * t[(2, 1)] + k2 * (t[(2, 0)] * t[(0, 1)] + 2 * t[(1, 1)] * t[(1, 0)]) + k3 * t[(1, 0)] ** 2 * t[(0, 1)]

    def n31(t: Table) -> Number:
        return (
            k1 * t[(3, 1)]
            + k2 * (t[(3, 0)] * t[(0, 1)] + 3 * t[(2, 0)] * t[(1, 1)] + 3 * t[(2, 1)] * t[(1, 0)])
            + k3 * (3 * t[(1, 1)] * t[(1, 0)] ** 2 + 3 * t[(2, 0)] * t[(1, 0)] * t[(0, 1)])
            + k4 * t[(1, 0)] ** 3 * t[(0, 1)]
        )

    out[(1, 1)] = k1 * n[(1, 1)] + k2 * n[(1, 0)] * n[(0, 1)]
    out[(2, 1)] = n21(n)
    out[(1, 2)] = n21(swap(n))
    out[(2, 2)] = (
        k1 * n[(2, 2)]
        + k2
        * (
            n[(2, 0)] * n[(0, 2)]
            + 2 * n[(2, 1)] * n[(0, 1)]
            + 2 * n[(1, 1)] ** 2
            + 2 * n[(1, 2)] * n[(1, 0)]
        )
        + k3 * (n[(2, 0)] * n[(0, 1)] ** 2 + n[(1, 0)] ** 2 * n[(0, 2)] + 4 * n[(1, 1)] * n[(1, 0)] * n[(0, 1)])
        + k4 * n[(1, 0)] ** 2 * n[(0, 1)] ** 2
    )
    out[(3, 1)] = n31(n)
    out[(1, 3)] = n31(swap(n))
    return out


def pixel_from_single(s: "SingleModeJointMoments | JointMomentTable", M: int) -> JointMomentTable:
    """Moments of ``N_j = sum of M modes`` in two symmetric pixels."""
    if int(M) != M or M < 1:
        raise ValueError(f"M must be an integer >= 1, got {M}")
    if isinstance(s, JointMomentTable) and s.level != SINGLE_MODE:
        raise ValueError("pixel_from_single expects a single-mode table; nested composition is not supported")
    M = int(M)
    source = s.source
    return JointMomentTable(level=PIXEL, m=_sum_iid(_raw(s), M), source=source, modes=M)


def bucket_from_pixel(p: JointMomentTable, R: int) -> JointMomentTable:
    """Bucket (sum over ``R`` object cells) against one reference pixel.

    The in-pixel correlates with exactly one of the ``R`` cells; the
    out-pixel is independent of the bucket.
    """
    if int(R) != R or R < 1:
        raise ValueError(f"R must be an integer >= 1, got {R}")
    if p.level != PIXEL:
        raise ValueError(f"bucket_from_pixel expects a pixel table, got {p.level}")
    R = int(R)
    n = p.m
    r1, r2, r3 = R - 1, (R - 1) * (R - 2), (R - 1) * (R - 2) * (R - 3)

    m: Table = {(0, 0): n[(0, 0)]}
    for p_, v in enumerate(_sum_marginal([n[(i, 0)] for i in range(5)], R), start=1):
        m[(p_, 0)] = v
    for q in range(1, 5):
        m[(0, q)] = n[(0, q)]
    m[(1, 1)] = n[(1, 1)] + r1 * n[(1, 0)] * n[(0, 1)]
    m[(2, 1)] = (
        n[(2, 1)]
        + r1 * (n[(2, 0)] * n[(0, 1)] + 2 * n[(1, 1)] * n[(1, 0)])
        + r2 * n[(1, 0)] ** 2 * n[(0, 1)]
    )
    m[(1, 2)] = n[(1, 2)] + r1 * n[(1, 0)] * n[(0, 2)]
    m[(2, 2)] = (
        n[(2, 2)]
        + r1 * (n[(2, 0)] * n[(0, 2)] + 2 * n[(1, 2)] * n[(1, 0)])
        + r2 * n[(1, 0)] ** 2 * n[(0, 2)]
    )
    m[(3, 1)] = (
        n[(3, 1)]
        + r1 * (n[(3, 0)] * n[(0, 1)] + 3 * n[(2, 0)] * n[(1, 1)] + 3 * n[(2, 1)] * n[(1, 0)])
        + r2 * (3 * n[(1, 1)] * n[(1, 0)] ** 2 + 3 * n[(2, 0)] * n[(1, 0)] * n[(0, 1)])
        + r3 * n[(1, 0)] ** 3 * n[(0, 1)]
    )
    # third moment of the reference pixel, not the cube of its mean
    m[(1, 3)] = n[(1, 3)] + r1 * n[(1, 0)] * n[(0, 3)]

    out_m: Table = {(a, b): m[(a, 0)] * n[(0, b)] for a, b in INDEX_PAIRS}
    return JointMomentTable(level=BUCKET, m=m, source=p.source, modes=p.modes, cells=R, out_m=out_m)


def central_moment(t: "JointMomentTable | Table", p: int, q: int) -> Number:
    """``<(X1 - <X1>)**p (X2 - <X2>)**q>`` expanded in raw moments."""
    m = _raw(t)
    a = m[(1, 0)]
    b = m[(0, 1)]
    total: Number = 0
    for i in range(p + 1):
        for j in range(q + 1):
            total += comb(p, i) * comb(q, j) * (-a) ** (p - i) * (-b) ** (q - j) * m[(i, j)]
    return total


def difference_central_moment(t: "JointMomentTable | Table", k: int) -> Number:
    """``k``-th central moment of ``X1 - X2``."""
    return sum(comb(k, i) * (-1) ** (k - i) * central_moment(t, i, k - i) for i in range(k + 1))


@dataclass(frozen=True)
class CentralViews:
    var1: Number
    var2: Number
    cov: Number
    cov_sq: Number  # <(dX1 dX2)^2>
    diff_var: Number
    diff_mu4: Number


def central_views(t: "JointMomentTable | Table") -> CentralViews:
    return CentralViews(
        var1=central_moment(t, 2, 0),
        var2=central_moment(t, 0, 2),
        cov=central_moment(t, 1, 1),
        cov_sq=central_moment(t, 2, 2),
        diff_var=difference_central_moment(t, 2),
        diff_mu4=difference_central_moment(t, 4),
    )


def bucket_table(source, mu, eta1, eta2, M: int, R: int) -> JointMomentTable:
    """Convenience: single mode -> pixel -> bucket in one call."""
    from .moments import single_mode

    return bucket_from_pixel(pixel_from_single(single_mode(source, mu, eta1, eta2), M), R)
