"""Theorem bound against the legacy bound over a (k, N) grid, as CSV."""
import argparse
import sys

from sqfree.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", default="12-26")
    ap.add_argument("--Ns", default="1,2,11")
    ap.add_argument("--eps", default="0.01")
    ap.add_argument("--out", default="results/bounds.csv")
    args = ap.parse_args()
    sys.exit(run(["bounds", "--ks", args.ks, "--Ns", args.Ns, "--eps", args.eps, "--out", args.out]))


if __name__ == "__main__":
    main()
