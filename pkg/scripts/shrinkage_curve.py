"""Shrinkage of the averaged reference under one reflection-family member.

For each register size the script measures |Omega - (S_n x I) Omega| two
independent ways: the Frobenius route |I - S_n|_F / sqrt(2^(2n+1)) on the
dense member, and the trace route sqrt(2 Tr[I - S_n] / 2^(2n+1)) using only
the member's known trace. Both must land on 2^((1-n)/2).
"""
import argparse
import math

import numpy as np

from oraclebench.oracles import SwapOracleFamily
from oraclebench.seeds import SeedPath


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="optional csv path")
    args = ap.parse_args()

    fam = SwapOracleFamily(SeedPath(args.seed))
    rows = []
    print(f"{'n':>3} {'frobenius':>12} {'trace':>12} {'predicted':>12} {'defect':>10}")
    for n in range(1, args.max_n + 1):
        member = fam.dense_oracle(n).mat
        dim = member.shape[0]
        frob = np.linalg.norm(np.eye(dim) - member) / math.sqrt(2 ** (2 * n + 1))
        tr = math.sqrt(2 * float(np.real(np.trace(np.eye(dim) - member))) / 2 ** (2 * n + 1))
        pred = 2 ** ((1 - n) / 2)
        defect = max(abs(frob - pred), abs(tr - pred))
        rows.append((n, frob, tr, pred))
        print(f"{n:>3} {frob:>12.8f} {tr:>12.8f} {pred:>12.8f} {defect:>10.2e}")

    if args.out:
        with open(args.out, "w") as fh:
            fh.write("n,frobenius,trace,predicted\n")
            for n, frob, tr, pred in rows:
                fh.write(f"{n},{frob!r},{tr!r},{pred!r}\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
