"""Parameter sweeps and figure presets producing plot-ready tables."""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .geometry import ExperimentParams
from .moments import SourceKind
from .protocols import ALL_PROTOCOLS, ProtocolKind, snr
from .simulator import MaskSpec, empirical_snr, reconstruct, sample_stack

AXES = ("illumination", "resolution", "efficiency", "eta2", "modes")
MODES = ("analytic", "mc", "both")

COLUMNS = (
    "series",
    "axis",
    "value",
    "source",
    "protocol",
    "mu",
    "M",
    "R",
    "eta1",
    "eta2",
    "illumination",
    "frames",
    "analytic_snr_per_sqrt_frame",
    "mc_snr_per_sqrt_frame",
    "mc_se",
    "mc_replicas",
)


@dataclass
class SweepSpec:
    """One curve family: ``axis`` runs over ``values`` with everything else fixed."""

    axis: str
    values: Sequence[float]
    fixed: ExperimentParams
    protocols: Sequence[ProtocolKind] = ALL_PROTOCOLS
    sources: Sequence[SourceKind] = (SourceKind.TWIN_BEAM, SourceKind.THERMAL)
    mode: str = "analytic"
    replicas: int = 5
    out_cells: Optional[int] = None
    seed: int = 0
    workers: int = 1
    series: str = ""

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        vals = [float(v) for v in self.values]
        if not vals:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        self.values = vals
        self.protocols = tuple(ProtocolKind.parse(p) for p in self.protocols)
        self.sources = tuple(SourceKind.parse(s) for s in self.sources)

    def params_at(self, value: float, source: SourceKind) -> ExperimentParams:
        p = self.fixed.with_(source=source)
        if self.axis == "illumination":
            return p.with_illumination(value)
        if self.axis == "resolution":
            return p.with_(resolution_cells=_as_count(value))
        if self.axis == "efficiency":
            return p.with_(eta1=value, eta2=value)
        if self.axis == "eta2":
            return p.with_(eta2=value)
        return p.with_(modes_per_pixel=_as_count(value))

    def to_dict(self) -> Dict:
        return {
            "axis": self.axis,
            "values": list(self.values),
            "fixed": self.fixed.to_dict(),
            "protocols": [p.value for p in self.protocols],
            "sources": [s.value for s in self.sources],
            "mode": self.mode,
            "replicas": self.replicas,
            "out_cells": self.out_cells,
            "seed": self.seed,
            "series": self.series,
        }


def _as_count(v: float) -> int:
    if v != int(v):
        raise ValueError(f"{v} is not an integer count")
    return int(v)


def _replica_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0])


def mc_snr(
    params: ExperimentParams,
    protocols: Iterable[ProtocolKind],
    replicas: int,
    seed: int,
    out_cells: Optional[int] = None,
    workers: int = 1,
) -> Dict[ProtocolKind, Tuple[float, float]]:
    """Mean and standard error of empirical SNR/sqrt(K) over independent replicas."""
    R = params.resolution_cells
    if R < 2:
        raise ValueError("Monte-Carlo SNR needs at least two transmitting cells")
    mask = MaskSpec.strip(R, out_cells or max(R, 16))
    protocols = tuple(protocols)
    vals: Dict[ProtocolKind, List[float]] = {k: [] for k in protocols}
    for r in range(replicas):
        stack = sample_stack(params, mask, _replica_seed(seed, r), workers=workers)
        for k in protocols:
            vals[k].append(empirical_snr(reconstruct(stack, k), mask).snr_per_sqrt_frame)
    out = {}
    for k, v in vals.items():
        a = np.asarray(v)
        se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else math.nan
        out[k] = (float(a.mean()), se)
    return out


def run_sweep(spec: SweepSpec) -> List[Dict]:
    """One row per (axis value, source, protocol)."""
    rows = []
    for i, value in enumerate(spec.values):
        for j, source in enumerate(spec.sources):
            p = spec.params_at(value, source)
            mc: Dict[ProtocolKind, Tuple[float, float]] = {}
            if spec.mode != "analytic" and p.resolution_cells >= 2:
                mc = mc_snr(p, spec.protocols, spec.replicas, _replica_seed(spec.seed, i, j), spec.out_cells, spec.workers)
            for k in spec.protocols:
                analytic = math.nan
                if spec.mode != "mc":
                    analytic = snr(k, p).snr_per_sqrt_frame
                m, se = mc.get(k, (math.nan, math.nan))
                rows.append(
                    {
                        "series": spec.series,
                        "axis": spec.axis,
                        "value": value,
                        "source": source.value,
                        "protocol": k.value,
                        "mu": p.mu,
                        "M": p.modes_per_pixel,
                        "R": p.resolution_cells,
                        "eta1": p.eta1,
                        "eta2": p.eta2,
                        "illumination": p.illumination,
                        "frames": p.frames,
                        "analytic_snr_per_sqrt_frame": analytic,
                        "mc_snr_per_sqrt_frame": m,
                        "mc_se": se,
                        "mc_replicas": spec.replicas if mc else 0,
                    }
                )
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(rows: List[Dict], path: Union[str, Path, None], meta: Optional[Dict] = None) -> None:
    """Fixed column order, ``repr`` floats (shortest round-trip form)."""
    if path is None or str(path) == "-":
        fh = sys.stdout
        close = False
    else:
        fh = open(path, "w", newline="")
        close = True
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])
    finally:
        if close:
            fh.close()
    if meta is not None and path is not None and str(path) != "-":
        Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_csv(path: Union[str, Path]) -> List[Dict]:
    ints = {"M", "R", "frames", "mc_replicas"}
    strs = {"series", "axis", "source", "protocol"}
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.append({k: (v if k in strs else int(v) if k in ints else float(v)) for k, v in r.items()})
    return out


def run_metadata(specs: Sequence[SweepSpec], **extra) -> Dict:
    return {"tool": "ghostsnr", "tool_version": __version__, "sweeps": [s.to_dict() for s in specs], **extra}


# --- figure presets -----------------------------------------------------------

ILLUMINATION_GRID = tuple(float(x) for x in np.logspace(-3, 4, 29))
FIGURES = ("fig2", "fig3a", "fig3b", "fig4", "fig7", "fig8")


def figure_specs(name: str, mode: str = "analytic", frames: Optional[int] = None, seed: int = 0, replicas: int = 5) -> List[SweepSpec]:
    """Named sweep presets, one curve family per figure."""
    common = dict(mode=mode, seed=seed, replicas=replicas)
    if name == "fig2":
        base = ExperimentParams(SourceKind.TWIN_BEAM, 1.0, 1, 1.0, 1.0, 100, frames or 1000)
        return [SweepSpec("illumination", ILLUMINATION_GRID, base, series="fig2", **common)]
    if name == "fig3a":
        specs = []
        for eta in (1.0, 0.5, 0.1):
            base = ExperimentParams(SourceKind.TWIN_BEAM, 1.0, 1, eta, eta, 100, frames or 1000)
            specs.append(SweepSpec("illumination", ILLUMINATION_GRID, base, protocols=(ProtocolKind.COVARIANCE,), series=f"eta={eta}", **common))
        return specs
    if name == "fig3b":
        specs = []
        for eta2 in (0.9, 0.5, 0.1):
            base = ExperimentParams(SourceKind.TWIN_BEAM, 1.0, 1, 1.0, eta2, 100, frames or 1000)
            specs.append(SweepSpec("illumination", ILLUMINATION_GRID, base, protocols=(ProtocolKind.COVARIANCE,), series=f"eta2={eta2}", **common))
        return specs
    if name == "fig4":
        specs = []
        for M in (1, 10, 100, 1000, 10000):
            base = ExperimentParams(SourceKind.TWIN_BEAM, 1.0, M, 1.0, 1.0, 100, frames or 1000)
            specs.append(SweepSpec("illumination", ILLUMINATION_GRID, base, protocols=(ProtocolKind.COVARIANCE,), series=f"M={M}", **common))
        return specs
    if name == "fig7":
        base = ExperimentParams(SourceKind.TWIN_BEAM, 0.2, 20000, 0.42, 0.42, 1, frames or 4000)
        values = (1, 2, 5, 10, 20, 50, 100, 195)
        return [SweepSpec("resolution", values, base, sources=(SourceKind.TWIN_BEAM,), series="fig7", **common)]
    if name == "fig8":
        # I ~ 300 detected photons per pixel at mu ~ 1e4 gives eta = 0.03
        base = ExperimentParams(SourceKind.THERMAL, 1e4, 1, 0.03, 0.03, 1, frames or 1000)
        values = (4, 10, 20, 50, 100, 200)
        return [SweepSpec("resolution", values, base, sources=(SourceKind.THERMAL,), series="fig8", **common)]
    raise ValueError(f"unknown figure {name!r}; choose from {FIGURES}")
