"""Background correlation from a fluctuating pump, before and after frame normalization.

    python scripts/pump_normalization.py --frames 4000 --seeds 5
"""

import argparse
import warnings

from ghostsnr.validation import pump_experiment, pump_variance_from_power


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mu", type=float, default=0.2)
    ap.add_argument("--power-sd", type=float, default=0.14, help="relative pump power fluctuation")
    ap.add_argument("--eta", type=float, default=0.42)
    ap.add_argument("--modes", type=int, default=100)
    ap.add_argument("--cells", type=int, default=25)
    ap.add_argument("--frames", type=int, default=4000)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    V = pump_variance_from_power(args.mu, args.power_sd)
    print(f"mu={args.mu} V(mu)={V:.3g} eta={args.eta} M={args.modes} R={args.cells} K={args.frames}")
    print(f"{'seed':>4} {'before':>10} {'se':>7} {'expected':>9} {'after':>8} {'se':>6}")
    for seed in range(args.seeds):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r = pump_experiment(frames=args.frames, seed=seed, mu=args.mu, eta=args.eta, M=args.modes, R=args.cells)
        print(f"{seed:4d} {r['cov_pre']:10.2f} {r['se_pre']:7.2f} {r['expected_pre']:9.2f} {r['cov_post']:8.3f} {r['se_post']:6.3f}")


if __name__ == "__main__":
    main()
