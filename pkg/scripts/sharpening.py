"""Toy-problem expectation for several copy counts and the width of the > 0.25 region."""
import argparse

from swapclf import experiments as ex


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--copies", default="1,10,100")
    ap.add_argument("--level", type=float, default=0.25)
    args = ap.parse_args()
    ns = [int(s) for s in args.copies.split(",")]
    thetas = ex.SweepConfig().thetas()
    curves = ex.sharpening_curves(ns, thetas)
    for n in ns:
        print(f"n={n:<4d} width(> {args.level}) = {ex.width_above(thetas, curves[n], args.level):.2f} rad")


if __name__ == "__main__":
    main()
