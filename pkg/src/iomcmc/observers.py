"""BKE likelihood ratios, the Monte Carlo IO estimate, and the Hotelling
observer via covariance decomposition."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .generator import SOMBinding
from .imaging import Measurement, NoiseModel
from .objects import LumpyModelParams


@dataclass(frozen=True, eq=False)
class DetectionTask:
    """One SKE/BKS experiment: signal, noise, and the background model."""

    signal: Measurement
    noise: NoiseModel
    binding: SOMBinding | None = None
    lumpy_params: LumpyModelParams | None = None
    prf_system: object | None = None
    label: str = ""


@dataclass(frozen=True, eq=False)
class ObserverScoreSet:
    scores_h0: np.ndarray
    scores_h1: np.ndarray
    observer: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scores_h0", np.asarray(self.scores_h0, dtype=float).ravel())
        object.__setattr__(self, "scores_h1", np.asarray(self.scores_h1, dtype=float).ravel())
        if self.scores_h0.size == 0 or self.scores_h1.size == 0:
            raise ValueError("both score classes must be non-empty")

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["case_id", "hypothesis", "score"])
            for i, v in enumerate(self.scores_h0):
                w.writerow([i, 0, repr(float(v))])
            for i, v in enumerate(self.scores_h1):
                w.writerow([i, 1, repr(float(v))])

    @classmethod
    def from_csv(cls, path, observer=""):
        s0, s1 = [], []
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                (s1 if int(row["hypothesis"]) else s0).append(float(row["score"]))
        return cls(scores_h0=s0, scores_h1=s1, observer=observer)


def log_bke_likelihood_ratio(g, b, s, sigma: float) -> float:
    """log Lambda_BKE = (g - b - s/2)^T s / sigma^2 for i.i.d. Gaussian noise."""
    g = np.asarray(getattr(g, "data", g), dtype=float).ravel()
    b = np.asarray(getattr(b, "data", b), dtype=float).ravel()
    s = np.asarray(getattr(s, "data", s), dtype=float).ravel()
    if g.shape != b.shape or g.shape != s.shape:
        raise ValueError("dimension mismatch")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(np.dot(g - b - 0.5 * s, s) / sigma**2)


def estimate_log_likelihood_ratio(chain) -> float:
    """Stable log of the mean of exp(log Lambda_BKE) over post-burn-in samples."""
    trace = np.asarray(chain.post_burn_in() if hasattr(chain, "post_burn_in") else chain, dtype=float)
    if trace.size == 0:
        raise ValueError("empty post-burn-in segment")
    m = float(trace.max())
    if not np.isfinite(m):
        return m
    return m + float(np.log(np.mean(np.exp(trace - m))))


def sample_covariance(samples) -> np.ndarray:
    """Unbiased sample covariance of a list/array of measurement vectors."""
    X = np.asarray(
        [np.asarray(getattr(x, "data", x), dtype=float).ravel() for x in samples]
    )
    if X.shape[0] < 2:
        raise ValueError("need at least two samples")
    K = np.cov(X, rowvar=False, bias=False)
    K = np.atleast_2d(K)
    return 0.5 * (K + K.T)


def ho_template(K_b: np.ndarray, sigma: float, s) -> np.ndarray:
    """Hotelling template: solves (sigma^2 I + K_b) w = s."""
    K_b = np.atleast_2d(np.asarray(K_b, dtype=float))
    s = np.asarray(getattr(s, "data", s), dtype=float).ravel()
    if not np.allclose(K_b, K_b.T, atol=1e-8 * max(1.0, np.abs(K_b).max())):
        raise ValueError("K_b must be symmetric")
    K_g = K_b + sigma**2 * np.eye(K_b.shape[0])
    return scipy.linalg.solve(K_g, s, assume_a="pos")


def ho_template_from_samples(samples, sigma: float, s, loading: float = 1e-6) -> np.ndarray:
    """Estimate K_b from background samples and solve for the HO template.

    Diagonal loading of loading * trace / M is applied for robustness.
    """
    K_b = sample_covariance(samples)
    eps = loading * np.trace(K_b) / K_b.shape[0]
    return ho_template(K_b + eps * np.eye(K_b.shape[0]), sigma, s)


def ho_test_statistic(w, g) -> float:
    """Linear observer score w^T g."""
    g = np.asarray(getattr(g, "data", g), dtype=float).ravel()
    return float(np.dot(np.asarray(w, dtype=float).ravel(), g))
