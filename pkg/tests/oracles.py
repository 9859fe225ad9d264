"""Brute-force oracle implementations, independent of the package's kernels.

Counts come from direct enumeration (Counter over tuple slices, subsequence
enumeration for LCS) so the optimized implementation paths can be checked
against something that cannot share their bugs.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

EPS = 1e-9


def ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def clipped_matches(cand, ref, n):
    cand_counts = ngram_counts(cand, n)
    ref_counts = ngram_counts(ref, n)
    return sum(min(count, ref_counts[g]) for g, count in cand_counts.items() if g in ref_counts)


def bleu_n(cand, ref, n):
    assert ref, "oracle requires non-empty reference"
    if not cand:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        total = len(cand) - k + 1
        if total <= 0:
            p = EPS
        else:
            matched = clipped_matches(cand, ref, k)
            p = matched / total if matched > 0 else EPS
        log_sum += math.log(p)
    brevity = min(1.0, math.exp(1.0 - len(ref) / len(cand)))
    return brevity * math.exp(log_sum / n)


def bleu_mean(cand, ref):
    return sum(bleu_n(cand, ref, k) for k in range(1, 5)) / 4.0


def _is_subsequence(needle, haystack):
    it = iter(haystack)
    return all(tok in it for tok in needle)


def lcs_length(a, b):
    """True brute force: enumerate all subsequences of the shorter sequence."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    best = 0
    for size in range(len(short), best, -1):
        for combo in itertools.combinations(short, size):
            if _is_subsequence(combo, long_):
                return size
    return 0


def rouge_l(cand, ref):
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(list(cand), list(ref))
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return 2 * p * r / (p + r)


def df_table(reference_token_lists, n_max=4):
    """Document frequency by explicit set membership per document."""
    df = Counter()
    for tokens in reference_token_lists:
        grams = set()
        for n in range(1, n_max + 1):
            grams.update(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
        for gram in grams:
            df[gram] += 1
    return dict(df)
