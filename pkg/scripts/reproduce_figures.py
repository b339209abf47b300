"""Regenerate the SNR curves for every figure preset and plot them.

Writes ``<outdir>/<figure>.csv`` for each preset and, when matplotlib is
available, a matching PNG.

    python scripts/reproduce_figures.py --outdir figures
    python scripts/reproduce_figures.py --figures fig7 --mode both --replicas 10
"""

import argparse
import logging
from collections import defaultdict
from pathlib import Path

from ghostsnr.sweep import FIGURES, figure_specs, read_csv, run_metadata, run_sweep, write_csv

log = logging.getLogger("reproduce_figures")


def plot(rows, path, title):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed, skipping %s", path)
        return
    curves = defaultdict(list)
    for r in rows:
        curves[(r["series"], r["source"], r["protocol"])].append(r)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (series, source, protocol), pts in sorted(curves.items()):
        x = [p["value"] for p in pts]
        label = " ".join(s for s in (series, source, protocol) if s)
        line = ax.plot(x, [p["analytic_snr_per_sqrt_frame"] for p in pts], label=label)[0]
        mc = [(p["value"], p["mc_snr_per_sqrt_frame"], p["mc_se"]) for p in pts if p["mc_snr_per_sqrt_frame"] == p["mc_snr_per_sqrt_frame"]]
        if mc:
            xs, ys, es = zip(*mc)
            ax.errorbar(xs, ys, yerr=es, fmt="o", ms=3, color=line.get_color())
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(pts[0]["axis"])
    ax.set_ylabel("SNR / sqrt(K)")
    ax.set_title(title)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--figures", default=",".join(FIGURES))
    ap.add_argument("--outdir", default="figures")
    ap.add_argument("--mode", default="analytic", choices=["analytic", "mc", "both"])
    ap.add_argument("--replicas", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in args.figures.split(","):
        specs = figure_specs(name, mode=args.mode, seed=args.seed, replicas=args.replicas)
        rows = [r for s in specs for r in run_sweep(s)]
        csv_path = outdir / f"{name}.csv"
        write_csv(rows, csv_path, run_metadata(specs, figure=name, seed=args.seed))
        plot(read_csv(csv_path), outdir / f"{name}.png", name)
        log.info("%s: %d rows -> %s", name, len(rows), csv_path)


if __name__ == "__main__":
    main()
