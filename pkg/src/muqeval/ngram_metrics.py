"""Lexical similarity metrics: BLEU, BLEU-4, ROUGE-L, METEOR-lite, CIDEr.

All metrics are sentence-level over a single reference and share one
tokenization rule. Conventions pinned here:

* BLEU-n is the geometric mean of clipped modified n-gram precisions for
  orders 1..n times the brevity penalty min(1, e^(1-r/c)). An order whose
  clipped count is zero (including "candidate too short to have n-grams")
  contributes precision EPSILON.
* "BLEU" (:func:`bleu_mean`) is the arithmetic mean of BLEU-1..BLEU-4.
* ROUGE is the LCS F1 (beta=1).
* METEOR-lite matches unigrams exactly first, then by Porter stem, with
  leftmost-first tie-breaking; no synonym module.
* CIDEr is plain single-reference CIDEr over orders 1..4, scaled by 10;
  zero-vector cosines are defined as 0 and unseen n-grams take df=1.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from . import _kernels
from .errors import InvalidReferenceError
from .stemmer import porter_stem

EPSILON = 1e-9
NGRAM_ORDER = 4


@dataclass(frozen=True)
class TokenSequence:
    """Lowercase tokens, already cleaned by :func:`tokenize`."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        for tok in self.tokens:
            if not tok:
                raise ValueError("empty token in TokenSequence")
            if tok != tok.lower():
                raise ValueError(f"token not lowercase: {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __bool__(self) -> bool:
        return bool(self.tokens)


def _strip_punct(token: str) -> str:
    start = 0
    end = len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> TokenSequence:
    """Lowercase, split on unicode whitespace, strip edge punctuation."""
    tokens = []
    for raw in text.lower().split():
        tok = _strip_punct(raw)
        if tok:
            tokens.append(tok)
    return TokenSequence(tuple(tokens))


def _ngrams(tokens, n: int):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _encode(candidate: TokenSequence, reference: TokenSequence):
    return _kernels.encode_pair(candidate.tokens, reference.tokens)


def _clipped_count(cand_ids, ref_ids, vocab_size: int, n: int, candidate, reference) -> int:
    if vocab_size >= _kernels.MAX_VOCAB:
        # Pathological input (tens of thousands of distinct tokens in one
        # pair); fall back to plain counting rather than overflow the keys.
        cc = Counter(_ngrams(candidate.tokens, n))
        rc = Counter(_ngrams(reference.tokens, n))
        return sum(min(count, rc[g]) for g, count in cc.items() if g in rc)
    return _kernels.clipped_matches(
        _kernels.ngram_keys(cand_ids, n), _kernels.ngram_keys(ref_ids, n)
    )


def bleu_n(candidate: TokenSequence, reference: TokenSequence, n: int) -> float:
    """Sentence BLEU over n-gram orders 1..n with add-epsilon smoothing."""
    if not 1 <= n <= NGRAM_ORDER:
        raise ValueError(f"n must be in 1..{NGRAM_ORDER}, got {n}")
    if not reference:
        raise InvalidReferenceError("BLEU reference must be non-empty")
    if not candidate:
        return 0.0
    cand_ids, ref_ids, vocab = _encode(candidate, reference)
    log_sum = 0.0
    for k in range(1, n + 1):
        total = len(candidate) - k + 1
        if total <= 0:
            precision = EPSILON
        else:
            clipped = _clipped_count(cand_ids, ref_ids, vocab, k, candidate, reference)
            precision = clipped / total if clipped > 0 else EPSILON
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / n)
    brevity = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    return brevity * geo_mean


def bleu_mean(candidate: TokenSequence, reference: TokenSequence) -> float:
    """Arithmetic mean of BLEU-1 through BLEU-4."""
    return sum(bleu_n(candidate, reference, k) for k in range(1, NGRAM_ORDER + 1)) / NGRAM_ORDER


def rouge_l(candidate: TokenSequence, reference: TokenSequence) -> float:
    """LCS F1: P = L/|candidate|, R = L/|reference|, F = 2PR/(P+R)."""
    if not reference:
        raise InvalidReferenceError("ROUGE reference must be non-empty")
    if not candidate:
        return 0.0
    cand_ids, ref_ids, _ = _encode(candidate, reference)
    lcs = _kernels.lcs_length(cand_ids, ref_ids)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2.0 * precision * recall / (precision + recall)


def _meteor_alignment(candidate: TokenSequence, reference: TokenSequence):
    """Match unigrams exactly, then by Porter stem; leftmost-first both passes."""
    ref_taken = [False] * len(reference)
    pairs: list[tuple[int, int]] = []
    cand_matched = [False] * len(candidate)

    for i, tok in enumerate(candidate.tokens):
        for j, ref_tok in enumerate(reference.tokens):
            if not ref_taken[j] and ref_tok == tok:
                ref_taken[j] = True
                cand_matched[i] = True
                pairs.append((i, j))
                break

    ref_stems = [porter_stem(t) for t in reference.tokens]
    for i, tok in enumerate(candidate.tokens):
        if cand_matched[i]:
            continue
        stem = porter_stem(tok)
        for j in range(len(reference)):
            if not ref_taken[j] and ref_stems[j] == stem:
                ref_taken[j] = True
                pairs.append((i, j))
                break

    pairs.sort()
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return len(pairs), chunks


def meteor_lite(candidate: TokenSequence, reference: TokenSequence) -> float:
    """Exact+stem METEOR: F_mean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3."""
    if not reference:
        raise InvalidReferenceError("METEOR reference must be non-empty")
    if not candidate:
        return 0.0
    matches, chunks = _meteor_alignment(candidate, reference)
    if matches == 0:
        return 0.0
    precision = matches / len(candidate)
    recall = matches / len(reference)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (chunks / matches) ** 3
    return f_mean * (1.0 - penalty)


@dataclass
class IdfTable:
    """Document frequencies of reference n-grams, orders 1..n_max."""

    n_max: int
    doc_count: int
    df: dict[tuple[str, ...], int] = field(default_factory=dict)

    def weight(self, gram: tuple[str, ...]) -> float:
        return math.log(self.doc_count / max(self.df.get(gram, 0), 1))


def build_idf(references: list[TokenSequence], n_max: int = NGRAM_ORDER) -> IdfTable:
    """Count, per n-gram, the number of reference documents containing it."""
    if not references:
        raise ValueError("cannot build IDF table from an empty corpus")
    table = IdfTable(n_max=n_max, doc_count=len(references))
    for ref in references:
        seen = set()
        for n in range(1, n_max + 1):
            seen.update(_ngrams(ref.tokens, n))
        for gram in seen:
            table.df[gram] = table.df.get(gram, 0) + 1
    return table


def _tfidf_vector(tokens, n: int, idf: IdfTable) -> dict[tuple[str, ...], float]:
    return {g: count * idf.weight(g) for g, count in Counter(_ngrams(tokens, n)).items()}


def _sparse_cosine(a: dict, b: dict) -> float:
    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    dot = sum(v * b[g] for g, v in a.items() if g in b)
    # float error can push an identity cosine one ulp past 1
    return min(dot / (norm_a * norm_b), 1.0)


def cider(candidate: TokenSequence, reference: TokenSequence, idf: IdfTable) -> float:
    """Mean over orders 1..n_max of TF-IDF cosines, scaled by 10."""
    sims = []
    for n in range(1, idf.n_max + 1):
        cand_vec = _tfidf_vector(candidate.tokens, n, idf)
        ref_vec = _tfidf_vector(reference.tokens, n, idf)
        sims.append(_sparse_cosine(cand_vec, ref_vec))
    return 10.0 * sum(sims) / idf.n_max
