#!/usr/bin/env python3
"""Counting and closed-form fixtures: pruning, nearest rank, two-step plan,
first-fit-decreasing, hard segmentation, least-squares duplicate invariance."""

from fractions import Fraction as F
import math

import numpy as np


def ffd(sizes, cap):
    bins = []
    for s in sorted(sizes, reverse=True):
        for b in bins:
            if sum(b) + s <= cap:
                b.append(s)
                break
        else:
            bins.append([s])
    return bins


def nearest_rank(sorted_vals, q):
    return sorted_vals[math.ceil(q * len(sorted_vals)) - 1]


def features(w):
    k = len(w)
    f = list(w) + [x * x for x in w]
    f += [w[i] * w[j] for i in range(k) for j in range(i + 1, k)]
    return f


if __name__ == "__main__":
    w = [F("0.7"), F("0.2995")]
    s = sum(w)
    print("prune:", [float(x / s) for x in w], [x / s for x in w])
    print("nearest rank 1..100: median", nearest_rank(list(range(1, 101)), 0.5), "p95",
          nearest_rank(list(range(1, 101)), 0.95))
    print("plan |SNS|=100: step1 general", math.floor(100 * 3 / 1), "step2 general", math.floor(100 * 1 / 4))
    print("ffd [3000,1500,600] @4096:", ffd([3000, 1500, 600], 4096))
    print("hard split 9000 @4096:", [4096, 4096, 9000 - 2 * 4096])

    rng = np.random.default_rng(0)
    W = rng.dirichlet(np.ones(3), size=40)
    y = np.array([(a - .6) ** 2 + (b - .3) ** 2 + (c - .1) ** 2 for a, b, c in W])
    X = np.array([features(r) for r in W])
    Xc = np.c_[np.ones(len(X)), X]
    beta1 = np.linalg.lstsq(Xc, y, rcond=None)[0]
    beta2 = np.linalg.lstsq(np.r_[Xc, Xc], np.r_[y, y], rcond=None)[0]
    print("duplicate-invariance max |delta pred|:", np.abs(Xc @ beta1 - Xc @ beta2).max())
    print("quadratic exactness max residual:", np.abs(Xc @ beta1 - y).max())
