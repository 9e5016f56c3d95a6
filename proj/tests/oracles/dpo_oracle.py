#!/usr/bin/env python3
"""-ln sigmoid(z) at 50 digits for the DPO fixtures."""

from mpmath import mp, mpf, log, exp

mp.dps = 50


def dpo(pc, pr, rc, rr, beta):
    z = mpf(beta) * ((mpf(pc) - mpf(pr)) - (mpf(rc) - mpf(rr)))
    return -log(1 / (1 + exp(-z)))


if __name__ == "__main__":
    print("equal      ", dpo(-1, -1, -1, -1, "0.1"), "ln2 =", log(2))
    print("derived    ", dpo("-1.0", "-2.0", "-1.2", "-1.8", "0.1"))
    print("z = 0.04   ", -log(1 / (1 + exp(-mpf("0.04")))))
    print("published value 0.673345 differs by", dpo("-1.0", "-2.0", "-1.2", "-1.8", "0.1") - mpf("0.673345"))
    print("combined   ", mpf("0.6931") + mpf("0.3") * 2)
