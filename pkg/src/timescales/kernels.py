"""Partial-likelihood evaluation kernels.

Two interchangeable backends compute the Breslow/Efron partial
log-likelihood, its gradient, and the observed information over
preprocessed risk-interval arrays:

* ``cython`` — the compiled extension ``timescales._speedups`` (single fused
  pass over the sorted arrays); built automatically at install time.
* ``python`` — the NumPy implementation in this module (suffix cumulative
  sums over the same sorted arrays).

The compiled backend is selected at import when present; set the environment
variable ``TIMESCALES_BACKEND=python`` (or call :func:`set_backend`) to force
the fallback, e.g. for benchmarking.

Array contract shared by both backends (n subjects, m grouped event times,
E event rows, p covariates; all in one fixed canonical subject order):

``eta``            (n,)   linear predictor x'beta
``w``              (n,)   exp(eta)
``x``              (n,p)  covariate matrix, C-contiguous
``order_stop``     (n,)   subject indices sorted ascending by interval stop
``pos_stop``       (m,)   first sorted position with stop >= event time k
``order_start``    (n,)   subject indices sorted ascending by interval start
``pos_start``      (m,)   first sorted position with start >= event time k
``d``              (m,)   tie multiplicities (float)
``event_idx``      (E,)   event-subject indices grouped by event time
``group_off``      (m+1,) group boundaries into event_idx
``sum_z_events``   (m,p)  per-group sums of covariate rows

The at-risk sum at event time k is (sum over stop >= t_k) minus
(sum over start >= t_k), i.e. the subjects with start < t_k <= stop.
A non-positive or non-finite denominator makes the evaluation return
NaN so the caller can step-halve.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _speedups
except ImportError:  # pragma: no cover - depends on build environment
    _speedups = None

_env = os.environ.get("TIMESCALES_BACKEND", "").strip().lower()
_active = "python" if (_speedups is None or _env == "python") else "cython"


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _speedups is not None else ("python",)


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = name


def _suffix_gather(values: np.ndarray, order: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Sum of ``values`` rows over sorted positions >= pos[k], for each k."""
    v = values[order]
    suff = np.zeros((v.shape[0] + 1,) + v.shape[1:], dtype=np.float64)
    np.cumsum(v[::-1], axis=0, out=suff[-2::-1])
    return suff[pos]


def _py_loglik(eta, w, order_stop, pos_stop, order_start, pos_start,
               d, event_idx, group_off, efron):
    s0 = _suffix_gather(w, order_stop, pos_stop) - _suffix_gather(w, order_start, pos_start)
    sum_eta = np.add.reduceat(eta[event_idx], group_off[:-1])
    total = float(sum_eta.sum())
    if not efron:
        if not np.all(np.isfinite(s0)) or np.any(s0 <= 0.0):
            return float("nan")
        return total - float(d @ np.log(s0))
    w_d = np.add.reduceat(w[event_idx], group_off[:-1])
    acc = 0.0
    for l in range(int(d.max())):
        mask = d > l
        denom = s0[mask] - (l / d[mask]) * w_d[mask]
        if not np.all(np.isfinite(denom)) or np.any(denom <= 0.0):
            return float("nan")
        acc += float(np.log(denom).sum())
    return total - acc


def _pair_columns(x: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    p = x.shape[1]
    pairs = [(a, b) for a in range(p) for b in range(a, p)]
    cols = np.empty((x.shape[0], len(pairs)), dtype=np.float64)
    for t, (a, b) in enumerate(pairs):
        np.multiply(x[:, a], x[:, b], out=cols[:, t])
    return cols, pairs


def _unpack_s2(spair: np.ndarray, pairs, p: int) -> np.ndarray:
    s2 = np.empty(spair.shape[:-1] + (p, p), dtype=np.float64)
    for t, (a, b) in enumerate(pairs):
        s2[..., a, b] = spair[..., t]
        s2[..., b, a] = spair[..., t]
    return s2


def _py_score_info(eta, w, x, order_stop, pos_stop, order_start, pos_start,
                   d, event_idx, group_off, sum_z_events, efron):
    n, p = x.shape
    pcols, pairs = _pair_columns(x)
    stacked = np.empty((n, 1 + p + len(pairs)), dtype=np.float64)
    stacked[:, 0] = w
    stacked[:, 1:1 + p] = w[:, None] * x
    stacked[:, 1 + p:] = w[:, None] * pcols

    s = _suffix_gather(stacked, order_stop, pos_stop) - _suffix_gather(stacked, order_start, pos_start)
    s0 = s[:, 0]
    s1 = s[:, 1:1 + p]
    s2 = _unpack_s2(s[:, 1 + p:], pairs, p)

    sum_eta = np.add.reduceat(eta[event_idx], group_off[:-1])
    nan = (float("nan"), np.full(p, np.nan), np.full((p, p), np.nan))

    if not efron:
        if not np.all(np.isfinite(s0)) or np.any(s0 <= 0.0):
            return nan
        ll = float(sum_eta.sum()) - float(d @ np.log(s0))
        r1 = s1 / s0[:, None]
        grad = (sum_z_events - d[:, None] * r1).sum(axis=0)
        info = np.einsum("k,kij->ij", d, s2 / s0[:, None, None]) - np.einsum("k,ki,kj->ij", d, r1, r1)
        return ll, grad, info

    ev = stacked[event_idx]
    gsum = np.add.reduceat(ev, group_off[:-1], axis=0)
    w_d = gsum[:, 0]
    s1_d = gsum[:, 1:1 + p]
    s2_d = _unpack_s2(gsum[:, 1 + p:], pairs, p)

    ll = float(sum_eta.sum())
    grad = sum_z_events.sum(axis=0)
    info = np.zeros((p, p))
    for l in range(int(d.max())):
        mask = d > l
        f = l / d[mask]
        denom = s0[mask] - f * w_d[mask]
        if not np.all(np.isfinite(denom)) or np.any(denom <= 0.0):
            return nan
        v = (s1[mask] - f[:, None] * s1_d[mask]) / denom[:, None]
        m2 = (s2[mask] - f[:, None, None] * s2_d[mask]) / denom[:, None, None]
        ll -= float(np.log(denom).sum())
        grad = grad - v.sum(axis=0)
        info += np.einsum("kij->ij", m2) - np.einsum("ki,kj->ij", v, v)
    return ll, grad, info


def cox_loglik(eta, w, order_stop, pos_stop, order_start, pos_start,
               d, event_idx, group_off, efron: bool) -> float:
    if _active == "cython":
        return _speedups.cox_loglik(eta, w, order_stop, pos_stop, order_start,
                                    pos_start, d, event_idx, group_off, efron)
    return _py_loglik(eta, w, order_stop, pos_stop, order_start, pos_start,
                      d, event_idx, group_off, efron)


def cox_score_info(eta, w, x, order_stop, pos_stop, order_start, pos_start,
                   d, event_idx, group_off, sum_z_events, efron: bool):
    if _active == "cython":
        return _speedups.cox_score_info(eta, w, x, order_stop, pos_stop, order_start,
                                        pos_start, d, event_idx, group_off,
                                        sum_z_events, efron)
    return _py_score_info(eta, w, x, order_stop, pos_stop, order_start, pos_start,
                          d, event_idx, group_off, sum_z_events, efron)


def risk_denominators(w, order_stop, pos_stop, order_start, pos_start) -> np.ndarray:
    """Per-event-time at-risk sums of ``w`` (the Breslow denominators)."""
    return _suffix_gather(w, order_stop, pos_stop) - _suffix_gather(w, order_start, pos_start)
