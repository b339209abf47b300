"""Monte-Carlo photon-count frames, numerical masks and ghost-image estimators.

Each grid cell carries ``M`` independent mode pairs.  Cell ``j`` of the
object arm is correlated with cell ``j`` of the reference arm and with
nothing else.  Frames are generated in fixed-size blocks, each block drawing
from its own counter-based stream keyed by ``(seed, block index)``, so the
output does not depend on how blocks are spread over workers.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import stats

from .geometry import ExperimentParams
from .moments import INDEX_PAIRS, SourceKind
from .protocols import ProtocolKind

log = logging.getLogger(__name__)

FRAMES_PER_BLOCK = 256
# maximum admissible P(mu < 0) of the untruncated pump distribution
MAX_NEGATIVE_MU_MASS = 1e-3


@dataclass(frozen=True)
class MaskSpec:
    """Binary object transmission on a 2-D grid of cells (True = transmits)."""

    transmission: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transmission).astype(bool)
        if t.ndim != 2:
            raise ValueError("mask must be a 2-D grid")
        if t.sum() < 1:
            raise ValueError("mask needs at least one transmitting cell")
        if (~t).sum() < 1:
            raise ValueError("mask needs at least one opaque cell for the out region")
        t.setflags(write=False)
        object.__setattr__(self, "transmission", t)

    @classmethod
    def strip(cls, n_in: int, n_out: int) -> "MaskSpec":
        """One row: ``n_in`` transmitting cells followed by ``n_out`` opaque ones."""
        return cls(np.array([[True] * n_in + [False] * n_out]))

    @classmethod
    def rectangle(cls, rows: int, cols: int, in_rows: int, in_cols: int) -> "MaskSpec":
        t = np.zeros((rows, cols), dtype=bool)
        t[:in_rows, :in_cols] = True
        return cls(t)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.transmission.shape

    @property
    def total_cells(self) -> int:
        return int(self.transmission.size)

    @property
    def in_cell_count(self) -> int:
        return int(self.transmission.sum())

    @property
    def out_cell_count(self) -> int:
        return self.total_cells - self.in_cell_count

    @property
    def flat(self) -> np.ndarray:
        return self.transmission.ravel()

    def __eq__(self, other):
        return isinstance(other, MaskSpec) and np.array_equal(self.transmission, other.transmission)

    def __hash__(self):
        return hash(self.transmission.tobytes())


@dataclass
class FrameStack:
    """``K`` frames of object-arm and reference-arm counts.

    ``obj`` and ``ref`` have shape ``(K, rows, cols)``.  Object cells outside
    the mask are already zeroed.  Counts are unsigned integers until the
    stack is normalized, reals afterwards.
    """

    obj: np.ndarray
    ref: np.ndarray
    params: ExperimentParams
    mask: MaskSpec
    seed: int
    frame_mu: Optional[np.ndarray] = None
    normalized: bool = False

    def __post_init__(self):
        if self.obj.shape != self.ref.shape:
            raise ValueError("object and reference grids differ")
        if self.obj.shape[1:] != self.mask.shape:
            raise ValueError("frame grid does not match the mask")

    @property
    def frames(self) -> int:
        return self.obj.shape[0]

    @property
    def bucket(self) -> np.ndarray:
        return self.obj.reshape(self.frames, -1)[:, self.mask.flat].sum(axis=1, dtype=np.float64)

    def reference_cells(self) -> np.ndarray:
        """Reference counts as ``(K, cells)`` float64."""
        return self.ref.reshape(self.frames, -1).astype(np.float64)


@dataclass
class GhostImage:
    S: np.ndarray
    kind: ProtocolKind
    frames_used: int
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


@dataclass
class SnrReport:
    kind: ProtocolKind
    contrast: float
    noise: float
    snr: float
    snr_per_sqrt_frame: float
    frames: int
    n_in: int
    n_out: int
    degenerate: bool = False
    analytic: Optional[float] = None


# --- sampling -----------------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _frame_mus(rng: np.random.Generator, n: int, mu: float, var: float) -> np.ndarray:
    if var <= 0:
        return np.full(n, mu)
    sd = math.sqrt(var)
    out = rng.normal(mu, sd, size=n)
    bad = out <= 0
    while bad.any():
        out[bad] = rng.normal(mu, sd, size=int(bad.sum()))
        bad = out <= 0
    return out


def _check_pump(params: ExperimentParams) -> None:
    var = params.pump_mu_variance
    if var <= 0:
        return
    neg = stats.norm.cdf(0.0, loc=params.mu, scale=math.sqrt(var))
    if neg > MAX_NEGATIVE_MU_MASS:
        raise ValueError(f"pump variance puts {neg:.3g} of the mu distribution below zero")
    if neg > 0:
        warnings.warn(f"truncating {neg:.2e} negative-mu probability mass", RuntimeWarning, stacklevel=3)


def _draw_cells(rng, source, mus, M, eta1, eta2, cells, method):
    """Counts ``(frames, cells)`` for both arms."""
    n = len(mus)
    mus = mus[:, None]
    if method == "aggregate":
        # a sum of M iid geometric counts is negative binomial, and thinning
        # a sum photon by photon equals summing thinned modes
        mean = mus if source is SourceKind.TWIN_BEAM else 2 * mus
        total = rng.negative_binomial(M, 1.0 / (1.0 + mean), size=(n, cells))
    elif method == "per_mode":
        mean = mus[:, :, None] if source is SourceKind.TWIN_BEAM else 2 * mus[:, :, None]
        total = rng.geometric(1.0 / (1.0 + mean), size=(n, cells, M)) - 1
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    if source is SourceKind.TWIN_BEAM:
        a = rng.binomial(total, eta1)
        b = rng.binomial(total, eta2)
    else:
        # 50/50 split then losses: each photon lands in arm 1 w.p. eta1/2,
        # in arm 2 w.p. eta2/2, else lost
        p1, p2 = eta1 / 2, eta2 / 2
        a = rng.binomial(total, p1)
        rest = total - a
        b = rng.binomial(rest, p2 / (1 - p1))
    if method == "per_mode":
        a, b = a.sum(axis=2), b.sum(axis=2)
    return a.astype(np.uint32), b.astype(np.uint32)


def sample_stack(
    params: ExperimentParams,
    mask: MaskSpec,
    seed: int,
    workers: int = 1,
    method: str = "aggregate",
) -> FrameStack:
    """Draw ``params.frames`` frames of counts for both arms.

    ``method="per_mode"`` draws every mode explicitly (slow for large ``M``);
    the default draws each cell's ``M``-mode total directly, which has the
    same distribution.
    """
    _check_pump(params)
    K = params.frames
    cells = mask.total_cells
    blocks = [(b, min(FRAMES_PER_BLOCK, K - b * FRAMES_PER_BLOCK)) for b in range(-(-K // FRAMES_PER_BLOCK))]

    def run(block):
        b, n = block
        rng = _block_rng(seed, b)
        mus = _frame_mus(rng, n, params.mu, params.pump_mu_variance)
        a, r = _draw_cells(rng, params.source, mus, params.modes_per_pixel, params.eta1, params.eta2, cells, method)
        return mus, a, r

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]

    mus = np.concatenate([p[0] for p in parts])
    obj = np.concatenate([p[1] for p in parts])
    ref = np.concatenate([p[2] for p in parts])
    obj[:, ~mask.flat] = 0
    shape = (K,) + mask.shape
    return FrameStack(
        obj=obj.reshape(shape),
        ref=ref.reshape(shape),
        params=params,
        mask=mask,
        seed=int(seed),
        frame_mu=mus if params.pump_mu_variance > 0 else None,
    )


# --- normalization ------------------------------------------------------------


def normalize_frames(stack: FrameStack, region: "np.ndarray | str" = "out") -> FrameStack:
    """Divide every frame by its mean reference count over ``region``.

    ``region`` is a boolean grid over the reference arm, or ``"out"`` (the
    opaque cells, whose reference light never reaches the bucket) or
    ``"all"``.  Both arms of a frame share the factor; the stack is rescaled
    by the mean of the frame means so absolute magnitudes are kept.  Frames
    with an empty region are dropped.
    """
    if isinstance(region, str):
        if region == "out":
            sel = ~stack.mask.transmission
        elif region == "all":
            sel = np.ones(stack.mask.shape, dtype=bool)
        else:
            raise ValueError(f"unknown region {region!r}")
    else:
        sel = np.asarray(region, dtype=bool)
        if sel.shape != stack.mask.shape:
            raise ValueError("region grid does not match the reference grid")
    if not sel.any():
        raise ValueError("normalization region is empty")

    ref = stack.ref.astype(np.float64)
    obj = stack.obj.astype(np.float64)
    level = ref[:, sel].mean(axis=1)
    keep = level > 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} frame(s) with empty normalization region", RuntimeWarning, stacklevel=2)
    level = level[keep]
    if level.size < 2:
        raise ValueError("fewer than two usable frames after normalization")
    scale = (level.mean() / level)[:, None, None]
    params = stack.params.with_(frames=int(keep.sum()))
    return replace(
        stack,
        obj=obj[keep] * scale,
        ref=ref[keep] * scale,
        params=params,
        frame_mu=None if stack.frame_mu is None else stack.frame_mu[keep],
        normalized=True,
    )


# --- reconstruction -----------------------------------------------------------


def reconstruct(stack: FrameStack, kind, mask: Optional[MaskSpec] = None) -> GhostImage:
    """Ghost image ``S(x_j)`` for every reference cell, from frame averages."""
    kind = ProtocolKind.parse(kind)
    mask = stack.mask if mask is None else mask
    K = stack.frames
    if K < 2:
        raise ValueError("need at least two frames")
    obj = stack.obj.reshape(K, -1)
    B = obj[:, mask.flat].sum(axis=1, dtype=np.float64)
    N = stack.reference_cells()
    flagged = np.zeros(N.shape[1], dtype=bool)

    mB = B.mean()
    mN = N.mean(axis=0)
    G = (B[:, None] * N).mean(axis=0)
    if kind is ProtocolKind.G2:
        S = G
    elif kind is ProtocolKind.COVARIANCE:
        S = G - mB * mN
    elif kind is ProtocolKind.DIFFERENCE_VARIANCE:
        S = (B[:, None] - N).var(axis=0)
    else:
        denom = mB * mN
        flagged = denom == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            S = np.where(flagged, np.nan, G / np.where(flagged, 1.0, denom))
    return GhostImage(S=S.reshape(mask.shape), kind=kind, frames_used=K, flagged=flagged.reshape(mask.shape))


def empirical_snr(image: GhostImage, mask: MaskSpec) -> SnrReport:
    """SNR from space averages over the in and out regions of one image."""
    valid = ~image.flagged if image.flagged.size else np.ones(mask.shape, dtype=bool)
    s_in = image.S[mask.transmission & valid]
    s_out = image.S[~mask.transmission & valid]
    if s_in.size < 2 or s_out.size < 2:
        raise ValueError("each region needs at least two usable cells")
    contrast = abs(s_in.mean() - s_out.mean())
    noise = math.sqrt(s_in.var(ddof=1) + s_out.var(ddof=1))
    K = image.frames_used
    if noise == 0:
        if contrast != 0:
            raise ArithmeticError("nonzero contrast with zero spatial noise")
        return SnrReport(image.kind, 0.0, 0.0, 0.0, 0.0, K, s_in.size, s_out.size, degenerate=True)
    value = contrast / noise
    return SnrReport(image.kind, float(contrast), noise, value, value / math.sqrt(K), K, s_in.size, s_out.size)


# --- empirical moments --------------------------------------------------------


def jackknife_mean_se(x: np.ndarray, blocks: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """Delete-one-block jackknife estimate and standard error of column means.

    ``x`` has samples along axis 0.  Trailing samples that do not fill a
    block are dropped from the error estimate but not from the mean.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    nb = min(blocks, n)
    size = n // nb
    used = x[: nb * size].reshape((nb, size) + x.shape[1:])
    block_sums = used.sum(axis=1)
    total = block_sums.sum(axis=0)
    loo = (total - block_sums) / ((nb - 1) * size)
    se = np.sqrt((nb - 1) / nb * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return x.mean(axis=0), se


@dataclass
class EmpiricalMoments:
    level: str
    m: Dict[Tuple[int, int], float]
    se: Dict[Tuple[int, int], float]
    samples: int

    def z(self, analytic: Dict[Tuple[int, int], float]) -> Dict[Tuple[int, int], float]:
        """Deviation from ``analytic`` in standard errors (0 where both agree exactly)."""
        out = {}
        for k, v in self.m.items():
            d = v - float(analytic[k])
            out[k] = 0.0 if d == 0 else (math.inf if self.se[k] == 0 else d / self.se[k])
        return out


def joint_raw_moments(x1: np.ndarray, x2: np.ndarray, level: str, blocks: int = 100) -> EmpiricalMoments:
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    m, se = {}, {}
    # one column at a time keeps memory flat for 10^7 frames
    for pq in INDEX_PAIRS:
        mean, err = jackknife_mean_se(x1 ** pq[0] * x2 ** pq[1], blocks)
        m[pq], se[pq] = float(mean), float(err)
    return EmpiricalMoments(level=level, m=m, se=se, samples=x1.shape[0])


def empirical_moments(stack: FrameStack, cell: Optional[int] = None, out_cell: Optional[int] = None, blocks: int = 100):
    """Sample raw moments ``p + q <= 4`` with jackknife standard errors.

    Returns a dict with ``"pixel"`` (object cell vs its reference twin),
    ``"bucket"`` (bucket vs the in reference cell) and ``"out"`` (bucket vs
    an out reference cell).
    """
    if stack.frames < 100:
        raise ValueError("empirical moments need at least 100 frames")
    flat = stack.mask.flat
    in_idx = np.flatnonzero(flat)
    out_idx = np.flatnonzero(~flat)
    cell = int(in_idx[0]) if cell is None else int(cell)
    out_cell = int(out_idx[0]) if out_cell is None else int(out_cell)
    if not flat[cell]:
        raise ValueError("cell must transmit")
    if flat[out_cell]:
        raise ValueError("out_cell must be opaque")
    obj = stack.obj.reshape(stack.frames, -1)
    ref = stack.ref.reshape(stack.frames, -1)
    B = stack.bucket
    return {
        "pixel": joint_raw_moments(obj[:, cell], ref[:, cell], "pixel", blocks),
        "bucket": joint_raw_moments(B, ref[:, cell], "bucket", blocks),
        "out": joint_raw_moments(B, ref[:, out_cell], "out", blocks),
    }
