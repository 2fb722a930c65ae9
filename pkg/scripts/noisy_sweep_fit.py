"""Noisy density-matrix sweep of the toy circuit on the bundled device, then the amplitude fit.

    python3 scripts/noisy_sweep_fit.py --out results/noisy.csv
"""
import argparse
import json
import time

from swapclf import experiments as ex
from swapclf.noise import bundled_device_path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--device", default=None, help="calibration JSON (defaults to the bundled fixture)")
    ap.add_argument("--order", default="thermal-first", choices=["thermal-first", "depolarizing-first"])
    ap.add_argument("--shots", type=int, default=8192)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cfg = ex.SweepConfig(backend="noisy", device=args.device or bundled_device_path(),
                         noise_order=args.order, shots=args.shots, seed=args.seed, workers=args.workers)
    t0 = time.perf_counter()
    res = ex.sweep(cfg)
    exact = ex.fit(ex.sweep(ex.SweepConfig()))
    noisy = ex.fit(res)
    if args.out:
        ex.emit(res, "csv", args.out)
    print(json.dumps({
        "exact": {"a": exact.a, "vartheta": exact.vartheta, "w2": exact.w2},
        "noisy": {"a": noisy.a, "vartheta": noisy.vartheta, "w2": noisy.w2,
                  "residual_norm": noisy.residual_norm},
        "seconds": round(time.perf_counter() - t0, 2),
    }, indent=2))


if __name__ == "__main__":
    main()
