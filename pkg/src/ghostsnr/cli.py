"""Command-line entry point.

Subcommands: ``sweep``, ``simulate``, ``reconstruct``, ``validate`` and
``figure``.  Parameters come from an INI-style config file (``--config``)
with ``[params]`` or ``[geometry]``, ``[mask]`` and ``[sweep]`` sections;
command-line flags override the file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .geometry import DetectionGeometry, ExperimentParams, derive_params
from .protocols import ALL_PROTOCOLS, ProtocolKind, snr
from .simulator import MaskSpec, empirical_snr, normalize_frames, reconstruct, sample_stack
from .stackio import export_csv, load_stack, save_stack
from .sweep import FIGURES, SweepSpec, figure_specs, run_metadata, run_sweep, write_csv
from .validation import validate

log = logging.getLogger("ghostsnr")

PARAM_KEYS = {
    "source": str,
    "mu": float,
    "modes_per_pixel": int,
    "eta1": float,
    "eta2": float,
    "resolution_cells": int,
    "frames": int,
    "pump_mu_variance": float,
}
GEOMETRY_KEYS = (
    "pixel_area",
    "coherence_area",
    "detection_time",
    "coherence_time",
    "object_area",
    "base_efficiency_1",
    "base_efficiency_2",
)


def _parse_values(text: str) -> List[float]:
    """``"1, 2, 5"`` or ``"logspace(-3, 4, 29)"`` / ``"linspace(a, b, n)"``."""
    text = text.strip()
    for fn in ("logspace", "linspace"):
        if text.startswith(fn + "("):
            a, b, n = (float(x) for x in text[len(fn) + 1 : -1].split(","))
            return [float(v) for v in getattr(np, fn)(a, b, int(n))]
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def load_config(path: Optional[str]) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path:
        with open(path) as fh:
            cfg.read_file(fh)
    return cfg


def params_from_config(cfg: configparser.ConfigParser, args: argparse.Namespace) -> ExperimentParams:
    values: Dict = {}
    if cfg.has_section("params"):
        for k, conv in PARAM_KEYS.items():
            if cfg.has_option("params", k):
                values[k] = conv(cfg.get("params", k))
    for k in ("source", "mu", "frames"):
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    if cfg.has_section("geometry"):
        g = {k: float(cfg.get("geometry", k)) for k in GEOMETRY_KEYS if cfg.has_option("geometry", k)}
        geom = DetectionGeometry(**g)
        p = derive_params(
            geom,
            mu=values.get("mu", 1.0),
            frames=values.get("frames", 1000),
            source=values.get("source", "twin"),
            pump_mu_variance=values.get("pump_mu_variance", 0.0),
        )
        log.info("derived M=%d (rounded), R=%d (rounded), eta2=%g from geometry", p.modes_per_pixel, p.resolution_cells, p.eta2)
        return p
    values.setdefault("source", "twin")
    values.setdefault("mu", 1.0)
    values.setdefault("frames", 1000)
    return ExperimentParams(**values)


def mask_from_config(cfg: configparser.ConfigParser, params: ExperimentParams, out_cells: Optional[int]) -> MaskSpec:
    n_out = out_cells
    if n_out is None and cfg.has_option("mask", "out_cells"):
        n_out = cfg.getint("mask", "out_cells")
    if n_out is None:
        n_out = max(params.resolution_cells, 16)
    return MaskSpec.strip(params.resolution_cells, n_out)


def _meta(args, **extra) -> Dict:
    return {"tool": "ghostsnr", "tool_version": __version__, "command": args.command, "argv": sys.argv[1:], **extra}


# --- subcommands --------------------------------------------------------------


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    params = params_from_config(cfg, args)
    sec = cfg["sweep"] if cfg.has_section("sweep") else {}
    axis = args.axis or sec.get("axis", "illumination")
    values = _parse_values(args.values) if args.values else _parse_values(sec.get("values", "logspace(-3, 4, 29)"))
    protocols = args.protocols or sec.get("protocols", ",".join(p.value for p in ALL_PROTOCOLS))
    sources = args.sources or sec.get("sources", "twin,thermal")
    spec = SweepSpec(
        axis=axis,
        values=values,
        fixed=params,
        protocols=[ProtocolKind.parse(p) for p in protocols.split(",")],
        sources=sources.split(","),
        mode=_mode(args.mode or sec.get("mode", "analytic")),
        replicas=args.replicas if args.replicas is not None else int(sec.get("replicas", 5)),
        out_cells=args.out_cells,
        seed=args.seed,
        workers=args.workers,
    )
    rows = run_sweep(spec)
    write_csv(rows, args.out, run_metadata([spec], seed=args.seed, argv=sys.argv[1:]))
    return 0


def _mode(m: str) -> str:
    return "mc" if m == "monte_carlo" else m


def cmd_figure(args) -> int:
    specs = figure_specs(args.name, mode=_mode(args.mode or "analytic"), frames=args.frames, seed=args.seed, replicas=args.replicas or 5)
    for s in specs:
        s.workers = args.workers
    rows = [r for s in specs for r in run_sweep(s)]
    write_csv(rows, args.out, run_metadata(specs, figure=args.name, seed=args.seed, argv=sys.argv[1:]))
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    params = params_from_config(cfg, args)
    mask = mask_from_config(cfg, params, args.out_cells)
    stack = sample_stack(params, mask, args.seed, workers=args.workers)
    if args.normalize:
        stack = normalize_frames(stack, args.normalize)
    out = Path(args.out)
    save_stack(stack, out)
    if args.csv:
        export_csv(stack, args.csv)
    log.info("wrote %d frames (%s) to %s", stack.frames, "x".join(map(str, mask.shape)), out)
    return 0


def cmd_reconstruct(args) -> int:
    stack = load_stack(args.stack)
    if args.normalize:
        stack = normalize_frames(stack, args.normalize)
    kinds = [ProtocolKind.parse(k) for k in args.protocols.split(",")]
    images = {k: reconstruct(stack, k) for k in kinds}
    report = {"stack": str(args.stack), "frames": stack.frames, "seed": stack.seed, "params": stack.params.to_dict(), "protocols": {}}
    for k, img in images.items():
        rep = empirical_snr(img, stack.mask)
        try:
            analytic = snr(k, stack.params).snr_per_sqrt_frame
        except (ZeroDivisionError, ArithmeticError):
            analytic = math.nan
        report["protocols"][k.value] = {
            "contrast": rep.contrast,
            "noise": rep.noise,
            "snr": rep.snr,
            "snr_per_sqrt_frame": rep.snr_per_sqrt_frame,
            "analytic_snr_per_sqrt_frame": analytic,
            "degenerate": rep.degenerate,
        }
    if args.out:
        rows, cols = stack.mask.shape
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "transmission", *[k.value for k in kinds]])
            for i in range(rows):
                for j in range(cols):
                    w.writerow([i, j, int(stack.mask.transmission[i, j]), *[repr(float(images[k].S[i, j])) for k in kinds]])
    print(json.dumps(report, indent=2, default=float))
    return 0


def cmd_validate(args) -> int:
    suites = ["table1", "oracle", "asymptotics", "pump"] if args.suite == "all" else args.suite.split(",")
    options = {"oracle": {"samples": args.samples}}
    if args.frames:
        options["pump"] = {"frames": args.frames}
    report = validate(suites, **options)
    report["meta"] = _meta(args)
    text = json.dumps(report, indent=2, default=float)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    for name, s in report["suites"].items():
        n_ok = sum(c["passed"] for c in s["checks"])
        print(f"{name}: {'PASS' if s['passed'] else 'FAIL'} ({n_ok}/{len(s['checks'])})", file=sys.stderr)
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ghostsnr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ghostsnr {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, params=True):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
        p.add_argument("--frames", type=int, help="number of frames K")
        p.add_argument("--out", help="output path")
        p.add_argument("--workers", type=int, default=1, help="worker threads (never changes results)")
        if params:
            p.add_argument("--source", choices=["twin", "thermal"])
            p.add_argument("--mu", type=float)

    p = sub.add_parser("sweep", help="SNR versus one parameter")
    common(p)
    p.add_argument("--axis", choices=["illumination", "resolution", "efficiency", "eta2", "modes"])
    p.add_argument("--values", help='"1,2,5" or "logspace(-3,4,29)"')
    p.add_argument("--protocols", help="comma list of G2,g2,Cov,Var")
    p.add_argument("--sources", help="comma list of twin,thermal")
    p.add_argument("--mode", choices=["analytic", "mc", "monte_carlo", "both"])
    p.add_argument("--replicas", type=int)
    p.add_argument("--out-cells", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="run a named figure preset")
    p.add_argument("name", choices=FIGURES)
    common(p, params=False)
    p.add_argument("--mode", choices=["analytic", "mc", "monte_carlo", "both"])
    p.add_argument("--replicas", type=int)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("simulate", help="generate a frame stack")
    common(p)
    p.add_argument("--out-cells", type=int)
    p.add_argument("--normalize", choices=["out", "all"], help="normalize frames before saving")
    p.add_argument("--csv", help="also export the stack as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="ghost images and empirical SNR from a stack file")
    p.add_argument("stack")
    p.add_argument("--protocols", default="G2,g2,Cov,Var")
    p.add_argument("--normalize", choices=["out", "all"])
    p.add_argument("--out", help="per-cell image CSV")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("validate", help="run validation suites")
    p.add_argument("--suite", default="all", help="table1, oracle, asymptotics, pump, comma list or all")
    p.add_argument("--samples", type=int, default=1_000_000, help="oracle sample count")
    p.add_argument("--frames", type=int, help="pump-suite frames")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "simulate" and not args.out:
        build_parser().error("simulate requires --out")
    try:
        return args.func(args)
    except (ValueError, ZeroDivisionError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
