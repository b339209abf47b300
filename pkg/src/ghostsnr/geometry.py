"""Experiment parameters and their derivation from detection geometry."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict

from .moments import SourceKind


def _round_count(x: float) -> int:
    # nearest integer, never below 1
    return max(int(math.floor(x + 0.5)), 1)


@dataclass(frozen=True)
class DetectionGeometry:
    """Physical detection geometry: areas and times in any consistent units."""

    pixel_area: float
    coherence_area: float
    detection_time: float
    coherence_time: float
    object_area: float
    base_efficiency_1: float = 1.0
    base_efficiency_2: float = 1.0

    def __post_init__(self):
        for name in ("pixel_area", "coherence_area", "detection_time", "coherence_time", "object_area"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite positive number, got {v}")
        for name in ("base_efficiency_1", "base_efficiency_2"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def spatial_modes(self) -> int:
        return _round_count(max(self.pixel_area / self.coherence_area, 1.0))

    @property
    def temporal_modes(self) -> int:
        return _round_count(max(self.detection_time / self.coherence_time, 1.0))

    @property
    def collection_efficiency(self) -> float:
        return min(self.pixel_area / self.coherence_area, 1.0)

    @property
    def resolution_cells(self) -> int:
        return _round_count(self.object_area / max(self.pixel_area, self.coherence_area))


@dataclass(frozen=True)
class ExperimentParams:
    """Statistical description of one ghost-imaging run.

    ``illumination`` (detected photons per reference pixel per frame) and
    ``excess_noise`` are derived on access and never stored.
    """

    source: SourceKind
    mu: float
    modes_per_pixel: int = 1
    eta1: float = 1.0
    eta2: float = 1.0
    resolution_cells: int = 1
    frames: int = 2
    pump_mu_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "source", SourceKind.parse(self.source))
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be finite and > 0, got {self.mu}")
        for name in ("modes_per_pixel", "resolution_cells"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v}")
            object.__setattr__(self, name, int(v))
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if int(self.frames) != self.frames or self.frames < 2:
            raise ValueError(f"frames must be an integer >= 2, got {self.frames}")
        object.__setattr__(self, "frames", int(self.frames))
        if not self.pump_mu_variance >= 0:
            raise ValueError(f"pump_mu_variance must be >= 0, got {self.pump_mu_variance}")

    @property
    def M(self) -> int:
        return self.modes_per_pixel

    @property
    def R(self) -> int:
        return self.resolution_cells

    @property
    def K(self) -> int:
        return self.frames

    @property
    def illumination(self) -> float:
        return self.eta2 * self.modes_per_pixel * self.mu

    @property
    def excess_noise(self) -> float:
        return self.illumination / self.modes_per_pixel

    def with_(self, **changes: Any) -> "ExperimentParams":
        return replace(self, **changes)

    def with_illumination(self, illumination: float) -> "ExperimentParams":
        """Same setup with ``mu`` back-solved so that ``eta2*M*mu`` hits ``illumination``."""
        denom = self.eta2 * self.modes_per_pixel
        if denom <= 0:
            raise ValueError("cannot back-solve mu: eta2 * M is zero")
        return replace(self, mu=illumination / denom)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["source"] = self.source.value
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExperimentParams":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def derive_params(
    geom: DetectionGeometry,
    mu: float,
    frames: int,
    source: "SourceKind | str" = SourceKind.TWIN_BEAM,
    pump_mu_variance: float = 0.0,
) -> ExperimentParams:
    """Statistical parameters implied by a detection geometry.

    Mode and cell counts are rounded to the nearest integer (at least 1) so
    that analytic and Monte-Carlo paths use the same integers.

    Examples
    --------
    >>> g = DetectionGeometry(240**2, 120**2, 5e-9, 1e-12, 1e6)
    >>> derive_params(g, mu=0.2, frames=4000).modes_per_pixel
    20000
    """
    eta2 = geom.base_efficiency_2 * geom.collection_efficiency
    if not 0 <= eta2 <= 1:
        raise ValueError(f"composed eta2 = {eta2} outside [0, 1]")
    return ExperimentParams(
        source=SourceKind.parse(source),
        mu=mu,
        modes_per_pixel=geom.spatial_modes * geom.temporal_modes,
        eta1=geom.base_efficiency_1,
        eta2=eta2,
        resolution_cells=geom.resolution_cells,
        frames=frames,
        pump_mu_variance=pump_mu_variance,
    )
