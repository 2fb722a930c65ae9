"""Command-line entry point: ``swapclf {sweep,fit,resources,sharpen}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import experiments as ex
from .errors import SwapClfError
from .noise import BUNDLED_DEVICE, bundled_device_path
from .resources import estimate


def _device_arg(value: str) -> str:
    return bundled_device_path() if value in ("bundled", BUNDLED_DEVICE) else value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swapclf", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="theta sweep of the two-point toy problem")
    s.add_argument("--classifier", choices=["hadamard", "swaptest", "forking"], default="swaptest")
    s.add_argument("--copies", type=int, default=1)
    s.add_argument("--theta-start", type=float, default=0.0)
    s.add_argument("--theta-end", type=float, default=2 * math.pi)
    s.add_argument("--theta-step", type=float, default=0.1)
    s.add_argument("--shots", type=int, default=8192)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--w2", type=float, default=0.5)
    s.add_argument("--backend", choices=["exact", "sampled", "noisy"], default="exact")
    s.add_argument("--device", type=_device_arg, default=None,
                   help="device calibration JSON, or 'bundled' for the shipped fixture")
    s.add_argument("--noise-order", choices=["thermal-first", "depolarizing-first"], default="thermal-first")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="-")
    s.add_argument("--format", choices=["csv", "json"], default="csv")

    f = sub.add_parser("fit", help="fit a(sin^2((theta+vartheta)/2+pi/4)-w2) to a sweep file")
    f.add_argument("path")

    r = sub.add_parser("resources", help="qubit and gate counts of the forking construction")
    r.add_argument("--copies", type=int, default=1)
    r.add_argument("-M", type=int, required=True)
    r.add_argument("-N", type=int, required=True)

    h = sub.add_parser("sharpen", help="toy-problem curves for several copy counts")
    h.add_argument("--copies", default="1,10,100")
    h.add_argument("--theta-step", type=float, default=0.1)
    h.add_argument("--w2", type=float, default=0.5)
    return p


def _run(args) -> str:
    if args.command == "sweep":
        cfg = ex.SweepConfig(
            args.classifier, args.copies, args.theta_start, args.theta_end, args.theta_step,
            args.shots, args.seed, args.w2, args.backend, args.device, args.noise_order, args.workers,
        )
        text = ex.emit(ex.sweep(cfg), args.format, args.out)
        return text if args.out == "-" else ""
    if args.command == "fit":
        return json.dumps(asdict(ex.fit(ex.parse(args.path)))) + "\n"
    if args.command == "resources":
        return json.dumps(estimate(args.copies, args.M, args.N).as_dict()) + "\n"
    if args.command == "sharpen":
        ns = [int(x) for x in args.copies.split(",") if x.strip()]
        thetas = ex.SweepConfig(theta_step=args.theta_step).thetas()
        curves = ex.sharpening_curves(ns, thetas, args.w2)
        lines = ["theta," + ",".join(f"n{n}" for n in ns)]
        for i, t in enumerate(thetas):
            lines.append(",".join([repr(float(t))] + [repr(float(curves[n][i])) for n in ns]))
        return "\n".join(lines) + "\n"
    raise SwapClfError(f"unknown command {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = _run(args)
    except (SwapClfError, ValueError) as e:
        err = {"error": type(e).__name__, "message": str(e)}
        if getattr(e, "required", None) is not None:
            err["required"] = e.required
        print(json.dumps(err), file=sys.stderr)
        return 2
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
