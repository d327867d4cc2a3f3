"""Continuous lumpy background model and the Gaussian signal profile."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LumpyModelParams:
    """Parameters of the lumpy background: Poisson lump count, Gaussian lumps."""

    mean_lumps: float = 6.0
    amplitude: float = 1.0
    width: float = 8.0
    fov: tuple[int, int] = (64, 64)
    fixed_count: int | None = None

    def __post_init__(self):
        if self.mean_lumps <= 0:
            raise ValueError("mean_lumps must be positive")
        if self.width <= 0:
            raise ValueError("width must be positive")
        if len(self.fov) != 2 or min(self.fov) < 1:
            raise ValueError("fov must be a pair of dims >= 1")
        if self.fixed_count is not None and self.fixed_count < 0:
            raise ValueError("fixed_count must be non-negative")


@dataclass(frozen=True, eq=False)
class LumpyRealization:
    """One sampled background: lump centers plus the shape parameters."""

    centers: np.ndarray  # (n, 2) float
    amplitude: float
    width: float
    fov: tuple[int, int]

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.size == 0:
            c = np.zeros((0, 2))
        if c.shape[1] != 2:
            raise ValueError("centers must be (n, 2)")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "fov", tuple(int(d) for d in self.fov))
        if c.shape[0] and (
            (c < 0).any() or (c[:, 0] > self.fov[0]).any() or (c[:, 1] > self.fov[1]).any()
        ):
            raise ValueError("lump centers must lie inside the field of view")

    @property
    def n_lumps(self) -> int:
        return self.centers.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "centers": self.centers.tolist(),
                "a": self.amplitude,
                "w_b": self.width,
                "fov": list(self.fov),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LumpyRealization":
        d = json.loads(text)
        return cls(
            centers=np.asarray(d["centers"], dtype=float).reshape(-1, 2),
            amplitude=d["a"],
            width=d["w_b"],
            fov=tuple(d["fov"]),
        )


@dataclass(frozen=True)
class GaussianSignal:
    """Deterministic Gaussian signal profile (SKE task)."""

    amplitude: float = 0.3
    width: float = 2.5
    center: tuple[float, float] = (32.0, 32.0)

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")


def sample_lumpy_realization(params: LumpyModelParams, rng: np.random.Generator) -> LumpyRealization:
    """Draw one lumpy background realization.

    The lump count is Poisson(mean_lumps) unless params.fixed_count is set;
    centers are i.i.d. uniform over the (continuous) field of view.
    """
    if params.fixed_count is not None:
        n = params.fixed_count
    else:
        n = int(rng.poisson(params.mean_lumps))
    centers = rng.uniform(low=(0.0, 0.0), high=params.fov, size=(n, 2))
    return LumpyRealization(
        centers=centers, amplitude=params.amplitude, width=params.width, fov=params.fov
    )


def _gaussian_sum(points, centers, amplitude, width):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if centers.shape[0] == 0:
        out = np.zeros(pts.shape[0])
    else:
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        out = amplitude * np.exp(-d2 / (2.0 * width**2)).sum(axis=1)
    return float(out[0]) if single else out


def eval_object_field(real: LumpyRealization, point) -> float | np.ndarray:
    """Evaluate the lumpy object f_b at a point (or an (n, 2) array of points)."""
    return _gaussian_sum(point, real.centers, real.amplitude, real.width)


def eval_signal_field(sig: GaussianSignal, point) -> float | np.ndarray:
    """Evaluate the signal profile f_s at a point (or an (n, 2) array of points)."""
    return _gaussian_sum(point, np.asarray(sig.center, dtype=float).reshape(1, 2), sig.amplitude, sig.width)
