#!/usr/bin/env python3
"""Reference values for the metric fixtures, computed from first principles
with exact fractions, then cross-checked against sacrebleu when installed."""

from collections import Counter
from fractions import Fraction
import math


def words(s):
    return s.split()


def ngrams(seq, n):
    return Counter(tuple(seq[i:i + n]) for i in range(len(seq) - n + 1))


def f_beta(h, r, beta2=4):
    m = sum((h & r).values())
    th, tr = sum(h.values()), sum(r.values())
    if th == 0 and tr == 0:
        return None
    if m == 0:
        return Fraction(0)
    p, rc = Fraction(m, th), Fraction(m, tr)
    return (1 + beta2) * p * rc / (beta2 * p + rc)


def chrf_pp(hyp, ref):
    hc = [c for c in hyp if not c.isspace()]
    rc = [c for c in ref if not c.isspace()]
    fs = [f_beta(ngrams(hc, n), ngrams(rc, n)) for n in range(1, 7)]
    fs += [f_beta(ngrams(words(hyp), n), ngrams(words(ref), n)) for n in range(1, 3)]
    fs = [f for f in fs if f is not None]
    return Fraction(100) if not fs else 100 * sum(fs) / len(fs)


def bleu(hyps, refs, floor=0.1):
    match, th, tr = [0] * 4, [0] * 4, [0] * 4
    hl = rl = 0
    for h, r in zip(hyps, refs):
        h, r = words(h), words(r)
        hl += len(h)
        rl += len(r)
        for n in range(1, 5):
            hn, rn = ngrams(h, n), ngrams(r, n)
            match[n - 1] += sum((hn & rn).values())
            th[n - 1] += sum(hn.values())
            tr[n - 1] += sum(rn.values())
    logs = [math.log((match[i] if match[i] else floor) / max(th[i], 1)) for i in range(4) if th[i] or tr[i]]
    bp = math.exp(1 - rl / hl) if hl < rl else 1.0
    return 100 * bp * math.exp(sum(logs) / len(logs))


def span_f1(p, g):
    p, g = Counter(words(p)), Counter(words(g))
    m = sum((p & g).values())
    if m == 0:
        return Fraction(0)
    pr, rc = Fraction(m, sum(p.values())), Fraction(m, sum(g.values()))
    return 100 * 2 * pr * rc / (pr + rc)


CHRF_CASES = [
    ("abc", "abd"),
    ("the cat sat on the mat", "the cat is on the mat"),
    ("a quick brown fox jumps", "the quick brown dog jumps over"),
    ("今天 天气 很好", "今天 天气 不错"),
]
BLEU_CASES = [
    (["the cat sat on"], ["the cat sat on mat"]),
    (["the cat sat on the mat", "a dog ran in the park today"], ["the cat is on the mat", "a dog ran in a park today"]),
]

if __name__ == "__main__":
    for h, r in CHRF_CASES:
        v = chrf_pp(h, r)
        print(f"chrf_pp {h!r} {r!r} = {float(v):.15f} ({v})")
    for h, r in BLEU_CASES:
        print(f"bleu {h!r} = {bleu(h, r):.15f}")
    print(f"span_f1 'a b c' 'b c d' = {float(span_f1('a b c', 'b c d')):.15f}")
    try:
        import sacrebleu
        from sacrebleu.metrics import BLEU, CHRF
        # sacrebleu takes F of the order-averaged precision and recall rather
        # than averaging per-order F, so its chrF++ lands slightly off ours.
        c = CHRF(word_order=2)
        h, r = CHRF_CASES[1]
        print("sacrebleu chrF++", c.sentence_score(h, [r]).score, float(chrf_pp(h, r)))
        b = BLEU(tokenize="none", smooth_method="floor", smooth_value=0.1, effective_order=False)
        for hs, rs in BLEU_CASES:
            print("sacrebleu bleu", b.corpus_score(hs, [rs]).score, bleu(hs, rs))
    except ImportError:
        pass
