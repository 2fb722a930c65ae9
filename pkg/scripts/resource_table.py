"""Qubit, Toffoli and CNOT counts of the forking construction over a small grid."""
import argparse

from swapclf.resources import estimate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--copies", type=int, nargs="+", default=[1, 2])
    ap.add_argument("-M", type=int, nargs="+", default=[2, 16, 32, 64])
    ap.add_argument("-N", type=int, nargs="+", default=[2, 8, 16])
    args = ap.parse_args()
    print(f"{'n':>3} {'M':>5} {'N':>5} {'qubits':>7} {'toffoli':>8} {'cnot':>6}")
    for n in args.copies:
        for M in args.M:
            for N in args.N:
                e = estimate(n, M, N)
                print(f"{n:>3} {M:>5} {N:>5} {e.qubits:>7} {e.toffoli:>8} {e.cnot:>6}")


if __name__ == "__main__":
    main()
