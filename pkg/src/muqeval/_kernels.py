"""Hot numeric kernels behind the lexical metrics.

Two implementations ship for each kernel: a numba ``@njit`` version and a
pure-numpy fallback. The JIT path is used whenever numba imports cleanly;
set ``MUQEVAL_DISABLE_JIT=1`` to force the numpy path (useful for debugging
and as the comparison baseline in ``benchmarks/bench_kernels.py``).

Token sequences are encoded as int32 id arrays by the caller; n-grams are
packed 15 bits per token into int64 keys, which bounds the per-pair
vocabulary at ``MAX_VOCAB`` ids.
"""

from __future__ import annotations

import os

import numpy as np

# 15 bits per token keeps a 4-gram key inside a signed int64.
MAX_VOCAB = 1 << 15
_KEY_BITS = 15


def _jit_requested() -> bool:
    return os.environ.get("MUQEVAL_DISABLE_JIT", "").strip().lower() not in ("1", "true", "yes")


JIT_ENABLED = _jit_requested()
if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False


def encode_pair(cand_tokens, ref_tokens):
    """Map two token sequences onto a shared id space.

    Returns (cand_ids, ref_ids, vocab_size); ids are assigned in first-seen
    order over candidate then reference.
    """
    vocab: dict[str, int] = {}
    cand_ids = np.empty(len(cand_tokens), dtype=np.int64)
    for i, tok in enumerate(cand_tokens):
        cand_ids[i] = vocab.setdefault(tok, len(vocab))
    ref_ids = np.empty(len(ref_tokens), dtype=np.int64)
    for i, tok in enumerate(ref_tokens):
        ref_ids[i] = vocab.setdefault(tok, len(vocab))
    return cand_ids, ref_ids, len(vocab)


def ngram_keys(ids: np.ndarray, n: int) -> np.ndarray:
    """Pack every length-``n`` window of ``ids`` into one int64 key."""
    count = ids.shape[0] - n + 1
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    keys = ids[:count].copy()
    for k in range(1, n):
        keys |= ids[k : count + k] << (_KEY_BITS * k)
    return keys


# --- LCS length ------------------------------------------------------------


def _lcs_length_np(a: np.ndarray, b: np.ndarray) -> int:
    """Row-vectorized LCS DP: cur[j] = accumulate-max of max(prev[j], prev[j-1]+eq)."""
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        np.maximum(prev[1:], prev[:-1] + (b == a[i]), out=cur[1:])
        np.maximum.accumulate(cur, out=cur)
        prev, cur = cur, prev
    return int(prev[m])


if JIT_ENABLED:

    @njit(cache=True)
    def _lcs_length_jit(a, b):  # pragma: no cover - exercised via lcs_length
        n = a.shape[0]
        m = b.shape[0]
        prev = np.zeros(m + 1, dtype=np.int64)
        cur = np.zeros(m + 1, dtype=np.int64)
        for i in range(n):
            for j in range(m):
                if a[i] == b[j]:
                    cur[j + 1] = prev[j] + 1
                elif prev[j + 1] >= cur[j]:
                    cur[j + 1] = prev[j + 1]
                else:
                    cur[j + 1] = cur[j]
            prev, cur = cur, prev
        return prev[m]


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    """Length of the longest common subsequence of two id arrays."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 0
    if JIT_ENABLED:
        return int(_lcs_length_jit(a, b))
    return _lcs_length_np(a, b)


# --- Clipped n-gram matches -------------------------------------------------


def _clipped_matches_np(cand_keys: np.ndarray, ref_keys: np.ndarray) -> int:
    cu, cc = np.unique(cand_keys, return_counts=True)
    ru, rc = np.unique(ref_keys, return_counts=True)
    pos = np.searchsorted(ru, cu)
    pos = np.minimum(pos, len(ru) - 1)
    hit = ru[pos] == cu
    return int(np.minimum(cc[hit], rc[pos[hit]]).sum())


if JIT_ENABLED:

    @njit(cache=True)
    def _clipped_matches_jit(cand_keys, ref_keys):  # pragma: no cover
        c = np.sort(cand_keys)
        r = np.sort(ref_keys)
        i = 0
        j = 0
        total = 0
        while i < c.shape[0] and j < r.shape[0]:
            if c[i] == r[j]:
                key = c[i]
                ci = 0
                while i < c.shape[0] and c[i] == key:
                    ci += 1
                    i += 1
                rj = 0
                while j < r.shape[0] and r[j] == key:
                    rj += 1
                    j += 1
                total += min(ci, rj)
            elif c[i] < r[j]:
                i += 1
            else:
                j += 1
        return total


def clipped_matches(cand_keys: np.ndarray, ref_keys: np.ndarray) -> int:
    """Sum over shared keys of min(candidate count, reference count)."""
    if cand_keys.shape[0] == 0 or ref_keys.shape[0] == 0:
        return 0
    if JIT_ENABLED:
        return int(_clipped_matches_jit(cand_keys, ref_keys))
    return _clipped_matches_np(cand_keys, ref_keys)
