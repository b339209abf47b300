"""Single-mode joint photon-number moments for correlated mode pairs.

A mode pair is either a twin-beam pair (the two arms carry the same photon
number before losses) or a thermal mode split on a 50/50 beam splitter.
Losses in arm ``j`` are a binomial thinning with detection probability
``eta_j``.  All moments are raw moments ``<n1**p n2**q>`` with ``p + q <= 4``.

Every function is written with plain arithmetic so that passing
:class:`fractions.Fraction` inputs yields exact rational results.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, Tuple, Union

Number = Union[float, int, Fraction]

MAX_ORDER = 4

# (p, q) with 0 <= p + q <= 4, in a fixed order.
INDEX_PAIRS: Tuple[Tuple[int, int], ...] = tuple(
    (p, q) for total in range(MAX_ORDER + 1) for p in range(total, -1, -1) for q in [total - p]
)


class SourceKind(str, enum.Enum):
    TWIN_BEAM = "twin"
    THERMAL = "thermal"

    @classmethod
    def parse(cls, value: "str | SourceKind") -> "SourceKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "twin": cls.TWIN_BEAM,
            "twinbeam": cls.TWIN_BEAM,
            "twgi": cls.TWIN_BEAM,
            "pdc": cls.TWIN_BEAM,
            "thermal": cls.THERMAL,
            "thgi": cls.THERMAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown source kind {value!r}") from None


@dataclass(frozen=True)
class SingleModeJointMoments:
    """Raw joint moments ``<n1**p n2**q>`` of one detected mode pair."""

    m: Dict[Tuple[int, int], Number]
    source: SourceKind
    mu: Number
    eta1: Number
    eta2: Number
    label: str = field(default="single-mode")

    def __getitem__(self, pq: Tuple[int, int]) -> Number:
        return self.m[pq]

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(INDEX_PAIRS)

    def as_float(self) -> Dict[Tuple[int, int], float]:
        return {k: float(v) for k, v in self.m.items()}


def _check_domain(mu: Number, eta1: Number, eta2: Number) -> None:
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    for name, eta in (("eta1", eta1), ("eta2", eta2)):
        if not 0 <= eta <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {eta}")


def marginal_moments(mu: Number, eta: Number) -> Tuple[Number, Number, Number, Number]:
    """``<n>, <n^2>, <n^3>, <n^4>`` of a thinned single thermal mode.

    Both sources share these marginals: each arm on its own is thermal.
    """
    x = mu * eta
    return (
        x,
        x + 2 * x**2,
        x * (1 + 6 * x + 6 * x**2),
        x * (1 + 14 * x + 36 * x**2 + 24 * x**3),
    )


def _fill(cross: Dict[Tuple[int, int], Number], mu, eta1, eta2, source, label) -> SingleModeJointMoments:
    m1 = marginal_moments(mu, eta1)
    m2 = marginal_moments(mu, eta2)
    table: Dict[Tuple[int, int], Number] = {(0, 0): 1}
    for k in range(1, MAX_ORDER + 1):
        table[(k, 0)] = m1[k - 1]
        table[(0, k)] = m2[k - 1]
    table.update(cross)
    return SingleModeJointMoments(m=table, source=source, mu=mu, eta1=eta1, eta2=eta2, label=label)


def _twin_cross(mu, e1, e2) -> Dict[Tuple[int, int], Number]:
    def n12(a, b):  # <n_a^2 n_b>
        return mu * a * b * (1 + 6 * mu**2 * a + mu * (2 + 4 * a))

    def n13(a, b):  # <n_a^3 n_b>
        return mu * a * b * (1 + 24 * mu**3 * a**2 + 18 * mu**2 * a * (1 + a) + 2 * mu * (1 + 6 * a))

    n22 = mu * e1 * e2 * (
        1
        + 24 * mu**3 * e1 * e2
        + 6 * mu**2 * (e1 + e2 + 4 * e1 * e2)
        + 2 * mu * (1 + 2 * e1 + 2 * e2 + 2 * e1 * e2)
    )
    return {
        (1, 1): mu * (1 + 2 * mu) * e1 * e2,
        (2, 1): n12(e1, e2),
        (1, 2): n12(e2, e1),
        (2, 2): n22,
        (3, 1): n13(e1, e2),
        (1, 3): n13(e2, e1),
    }


def _thermal_cross(mu, e1, e2) -> Dict[Tuple[int, int], Number]:
    def n12(a, b):
        return 2 * mu**2 * a * b * (1 + 3 * mu * a)

    # Leading factor is 2 mu^2, not 2 mu as sometimes printed; the split
    # thermal model fixes it (536 at mu=2, eta=1).
    def n13(a, b):
        return 2 * mu**2 * a * b * (1 + 9 * a * mu + 12 * mu**2 * a**2)

    n22 = 2 * mu**2 * e1 * e2 * (1 + 12 * mu**2 * e1 * e2 + 3 * mu * (e1 + e2))
    return {
        (1, 1): 2 * mu**2 * e1 * e2,
        (2, 1): n12(e1, e2),
        (1, 2): n12(e2, e1),
        (2, 2): n22,
        (3, 1): n13(e1, e2),
        (1, 3): n13(e2, e1),
    }


def twin_single_mode(mu: Number, eta1: Number, eta2: Number) -> SingleModeJointMoments:
    """Joint moments of one twin-beam mode pair after independent losses.

    Examples
    --------
    >>> t = twin_single_mode(1, 1, 1)
    >>> t[(1, 1)], t[(2, 2)], t[(3, 1)]
    (3, 75, 75)
    """
    _check_domain(mu, eta1, eta2)
    return _fill(_twin_cross(mu, eta1, eta2), mu, eta1, eta2, SourceKind.TWIN_BEAM, "twin single-mode")


def thermal_single_mode(mu: Number, eta1: Number, eta2: Number) -> SingleModeJointMoments:
    """Joint moments of one thermal mode split 50/50, each arm with mean ``eta_j * mu``."""
    _check_domain(mu, eta1, eta2)
    return _fill(_thermal_cross(mu, eta1, eta2), mu, eta1, eta2, SourceKind.THERMAL, "thermal single-mode")


def single_mode(source: "SourceKind | str", mu: Number, eta1: Number, eta2: Number) -> SingleModeJointMoments:
    source = SourceKind.parse(source)
    if source is SourceKind.TWIN_BEAM:
        return twin_single_mode(mu, eta1, eta2)
    return thermal_single_mode(mu, eta1, eta2)


def difference_variance(source: "SourceKind | str", mu: Number, eta: Number) -> Number:
    """Variance of ``n1 - n2`` for a balanced pair (``eta1 = eta2 = eta``).

    Twin beams give ``2*eta*mu*(1 - eta)`` (sub-shot-noise), thermal light
    the shot-noise level ``2*eta*mu``.
    """
    source = SourceKind.parse(source)
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if source is SourceKind.TWIN_BEAM:
        return 2 * eta * mu * (1 - eta)
    return 2 * eta * mu
