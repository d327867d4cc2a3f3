"""Convergence diagnostics: potential scale reduction factor across
parallel chains and trace autocorrelation."""
from __future__ import annotations

import json

import numpy as np


def _chain_matrix(chains) -> np.ndarray:
    arr = np.asarray(chains, dtype=float)
    if arr.ndim != 2:
        lengths = {len(c) for c in chains}
        if len(lengths) != 1:
            raise ValueError("all chains must have equal length")
        arr = np.vstack([np.asarray(c, dtype=float) for c in chains])
    if arr.shape[0] < 2:
        raise ValueError("need at least two chains")
    if arr.shape[1] < 2:
        raise ValueError("need at least two samples per chain")
    return arr


def psfr(chains) -> float:
    """Potential scale reduction factor over an (M, N_c) chain ensemble.

    sqrt((N_c-1)/N_c + B/(N_c W)).  Degenerate conventions: 1.0 when both
    variances vanish, +inf when only the within-sequence variance does.
    """
    v = _chain_matrix(chains)
    m, n_c = v.shape
    chain_means = v.mean(axis=1)
    grand = chain_means.mean()
    w = np.sum((v - chain_means[:, None]) ** 2) / (m * (n_c - 1))
    b = n_c / (m - 1) * np.sum((chain_means - grand) ** 2)
    if w == 0.0:
        return 1.0 if b == 0.0 else np.inf
    return float(np.sqrt((n_c - 1) / n_c + b / (n_c * w)))


def psfr_from_log(log_chains) -> float:
    """PSFR of exp(trace) with a global max shift for overflow safety.

    B/W is invariant under the common scale factor exp(-max), so the shift
    is exact for the ratio; only the exponentiation order differs.
    """
    v = _chain_matrix(log_chains)
    return psfr(np.exp(v - v.max()))


def running_psfr(log_chains, n_points: int = 50, log_domain: bool = True):
    """PSFR of the leading i samples, on a geometric grid of chain lengths.

    Returns (lengths, psfr values).  Computed from iteration 1 onward; the
    paper-style convergence plot includes the burn-in segment.
    """
    v = _chain_matrix(log_chains)
    n_c = v.shape[1]
    lengths = np.unique(np.geomspace(2, n_c, n_points).astype(int))
    f = psfr_from_log if log_domain else psfr
    return lengths, np.array([f(v[:, :n]) for n in lengths])


def autocorrelation(trace, max_lag: int):
    """Biased (divide-by-N) normalized autocorrelation, lags 0..max_lag.

    A constant trace is defined as perfectly correlated (all ones).
    """
    v = np.asarray(trace, dtype=float).ravel()
    if max_lag >= v.size:
        raise ValueError("max_lag must be < trace length")
    v = v - v.mean()
    c0 = np.dot(v, v) / v.size
    if c0 == 0.0:
        return np.ones(max_lag + 1)
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        out[lag] = np.dot(v[: v.size - lag], v[lag:]) / v.size / c0
    return out


def diagnostic_report(log_chains, threshold: float = 1.01, max_lag: int = 100, n_points: int = 50) -> dict:
    """JSON-ready convergence report for an ensemble of log-Lambda chains."""
    lengths, trace = running_psfr(log_chains, n_points=n_points)
    final = psfr_from_log(log_chains)
    v = _chain_matrix(log_chains)
    shifted = np.exp(v[0] - v[0].max())
    return {
        "psfr_iterations": lengths.tolist(),
        "psfr_trace": trace.tolist(),
        "final_psfr": final,
        "converged": bool(final < threshold),
        "threshold": threshold,
        "autocorrelation": autocorrelation(shifted, min(max_lag, v.shape[1] - 1)).tolist(),
    }


def save_report(report: dict, path):
    with open(path, "w") as f:
        json.dump(report, f, indent=2)
