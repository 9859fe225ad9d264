"""Parity between the numba kernels and the pure-numpy fallback paths."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from muqeval import _kernels

IDS = st.lists(st.integers(min_value=0, max_value=5), min_size=0, max_size=12)


@settings(max_examples=200, deadline=None)
@given(IDS, IDS)
def test_lcs_numpy_matches_bruteforce(a, b):
    arr_a = np.asarray(a, dtype=np.int64)
    arr_b = np.asarray(b, dtype=np.int64)
    expected = oracles.lcs_length(a, b) if (a and b) else 0
    assert _kernels._lcs_length_np(arr_a, arr_b) == expected if (a and b) else True
    assert _kernels.lcs_length(arr_a, arr_b) == expected


@settings(max_examples=200, deadline=None)
@given(IDS, IDS, st.integers(min_value=1, max_value=4))
def test_clipped_matches_both_paths(a, b, n):
    arr_a = np.asarray(a, dtype=np.int64)
    arr_b = np.asarray(b, dtype=np.int64)
    keys_a = _kernels.ngram_keys(arr_a, n)
    keys_b = _kernels.ngram_keys(arr_b, n)
    expected = oracles.clipped_matches(a, b, n)
    assert _kernels.clipped_matches(keys_a, keys_b) == expected
    if len(keys_a) and len(keys_b):
        assert _kernels._clipped_matches_np(keys_a, keys_b) == expected


def test_jit_enabled_by_default():
    # The env flag is read at import; in the normal test run numba is on.
    import os

    expected = os.environ.get("MUQEVAL_DISABLE_JIT", "").strip().lower() not in ("1", "true", "yes")
    assert _kernels.JIT_ENABLED == expected


@pytest.mark.skipif(not _kernels.JIT_ENABLED, reason="numba disabled in this run")
@settings(max_examples=100, deadline=None)
@given(IDS, IDS)
def test_jit_and_numpy_paths_agree(a, b):
    if not a or not b:
        return
    arr_a = np.asarray(a, dtype=np.int64)
    arr_b = np.asarray(b, dtype=np.int64)
    assert int(_kernels._lcs_length_jit(arr_a, arr_b)) == _kernels._lcs_length_np(arr_a, arr_b)
    for n in (1, 2, 3):
        ka = _kernels.ngram_keys(arr_a, n)
        kb = _kernels.ngram_keys(arr_b, n)
        if len(ka) and len(kb):
            assert int(_kernels._clipped_matches_jit(ka, kb)) == _kernels._clipped_matches_np(ka, kb)


def test_encode_pair_shares_vocabulary():
    cand_ids, ref_ids, vocab = _kernels.encode_pair(("the", "cat"), ("the", "dog"))
    assert vocab == 3
    assert cand_ids[0] == ref_ids[0]
    assert cand_ids[1] != ref_ids[1]


def test_ngram_keys_short_sequence():
    assert _kernels.ngram_keys(np.asarray([1], dtype=np.int64), 2).shape == (0,)
