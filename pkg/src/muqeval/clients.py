"""HTTP plumbing shared by the model, rewrite, extractor and embedding clients.

All remote calls go through :func:`post_json`, which retries transient
failures with exponential backoff and raises :class:`UpstreamError` carrying
the last HTTP status. :class:`SingleFlight` coalesces duplicate in-flight
requests for one cache key so concurrent workers issue each call once.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor

import requests

from .errors import UpstreamError

DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 2


def post_json(
    url: str,
    payload: dict,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff: float = 0.5,
    session: requests.Session | None = None,
) -> dict:
    last_error: Exception | None = None
    status: int | None = None
    post = (session or requests).post
    for attempt in range(retries + 1):
        try:
            response = post(url, json=payload, timeout=timeout)
            status = response.status_code
            if 200 <= status < 300:
                return response.json()
            # 4xx is not retryable; the request itself is wrong.
            if status < 500:
                raise UpstreamError(f"POST {url} failed with status {status}", status=status)
            last_error = UpstreamError(f"POST {url} failed with status {status}", status=status)
        except UpstreamError:
            raise
        except requests.RequestException as exc:
            last_error = exc
        if attempt < retries:
            time.sleep(backoff * (2**attempt))
    raise UpstreamError(f"POST {url} failed after {retries + 1} attempts: {last_error}", status=status)


def get_json(url: str, timeout: float = DEFAULT_TIMEOUT) -> dict:
    try:
        response = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise UpstreamError(f"GET {url} failed: {exc}") from exc
    if response.status_code != 200:
        raise UpstreamError(f"GET {url} failed with status {response.status_code}", status=response.status_code)
    return response.json()


class SingleFlight:
    """Coalesce concurrent computations of the same key into one call."""

    def __init__(self):
        self._lock = threading.Lock()
        self._inflight: dict[object, Future] = {}

    def do(self, key, fn):
        with self._lock:
            future = self._inflight.get(key)
            owner = future is None
            if owner:
                future = Future()
                self._inflight[key] = future
        if owner:
            try:
                future.set_result(fn())
            except BaseException as exc:  # propagate to all waiters
                future.set_exception(exc)
            finally:
                with self._lock:
                    self._inflight.pop(key, None)
        return future.result()


def bounded_map(fn, tasks, workers: int = 4) -> list:
    """Run fn over tasks with a bounded pool; preserves order.

    Returns a list of (result, exception) pairs so callers can account for
    partial failure without aborting the batch.
    """
    results: list[tuple[object, Exception | None]] = [(None, None)] * len(tasks)
    if workers <= 1 or len(tasks) <= 1:
        for i, task in enumerate(tasks):
            try:
                results[i] = (fn(task), None)
            except Exception as exc:
                results[i] = (None, exc)
        return results
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, task): i for i, task in enumerate(tasks)}
        for future, i in futures.items():
            try:
                results[i] = (future.result(), None)
            except Exception as exc:
                results[i] = (None, exc)
    return results
