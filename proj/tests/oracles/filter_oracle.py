#!/usr/bin/env python3
"""Hand-checkable values for the character bigram scorer (add-k, k = 1)."""

from collections import Counter
from fractions import Fraction
from itertools import permutations
import math

BEGIN, UNK = "<s>", "<unk>"


def train(texts, k=1):
    vocab = set("".join(texts))
    grams, hist = Counter(), Counter()
    for t in texts:
        seq = [BEGIN] + list(t)
        for i in range(1, len(seq)):
            grams[(seq[i - 1], seq[i])] += 1
            hist[seq[i - 1]] += 1
    V = len(vocab) + 1

    def prob(h, c):
        return Fraction(grams[(h, c)] + k, hist[h] + k * V)

    def score(text):
        seq = [BEGIN] + [c if c in vocab else UNK for c in text]
        return sum(math.log(prob(seq[i - 1], seq[i])) for i in range(1, len(seq))) / (len(seq) - 1)

    return prob, score


if __name__ == "__main__":
    seed = "ab ab ab"
    prob, score = train([seed])
    print("P(b|a) =", prob("a", "b"), " P(a|a) =", prob("a", "a"), " P(' '|a) =", prob("a", " "))
    print(f"score('ab') = {score('ab'):.15f}")
    print(f"score('zq') = {score('zq'):.15f}")
    best = max(score("".join(p)) for p in set(permutations(seed)))
    print(f"score(seed) = {score(seed):.15f}  best permutation = {best:.15f}")
