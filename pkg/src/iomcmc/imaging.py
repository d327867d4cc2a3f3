"""Imaging operators, noise models and the measurement container.

Two forward models are provided: an idealized parallel-hole collimator
described by a Gaussian point response function (continuous-to-discrete),
and an undersampled-Fourier operator (discrete-to-discrete) with a
variable-density Poisson-disc k-space mask.  Complex k-space data are
stored as stacked real vectors [Re; Im] so that the i.i.d. Gaussian
likelihood machinery applies unchanged.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .objects import GaussianSignal, LumpyRealization

LAYOUT_REAL = "real"
LAYOUT_STACKED = "stacked-complex"

_IOMM_MAGIC = b"IOMM"
_IOMM_VERSION = 1


@dataclass(frozen=True, eq=False)
class Measurement:
    """Measured data vector g; complex data stacked as [real; imag]."""

    data: np.ndarray
    layout: str = LAYOUT_REAL
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float).ravel()
        object.__setattr__(self, "data", d)
        if self.layout not in (LAYOUT_REAL, LAYOUT_STACKED):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.layout == LAYOUT_STACKED and d.size % 2:
            raise ValueError("stacked-complex data must have even length")
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    def as_complex(self) -> np.ndarray:
        if self.layout != LAYOUT_STACKED:
            raise ValueError("measurement is not complex")
        half = self.data.size // 2
        return self.data[:half] + 1j * self.data[half:]

    def save(self, path):
        with open(path, "wb") as f:
            dims = self.dims or (0, 0)
            f.write(_IOMM_MAGIC)
            f.write(struct.pack("<IBB", _IOMM_VERSION, 0 if self.layout == LAYOUT_REAL else 1, 2))
            f.write(struct.pack("<2I", *dims))
            f.write(struct.pack("<Q", self.data.size))
            f.write(self.data.astype("<f4").tobytes())

    @classmethod
    def load(cls, path) -> "Measurement":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != _IOMM_MAGIC:
                raise ValueError(f"bad magic {magic!r}, expected IOMM")
            version, layout_tag, ndim = struct.unpack("<IBB", f.read(6))
            if version != _IOMM_VERSION:
                raise ValueError(f"unsupported IOMM version {version}")
            dims = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
            (count,) = struct.unpack("<Q", f.read(8))
            data = np.frombuffer(f.read(4 * count), dtype="<f4", count=count).astype(float)
        return cls(
            data=data,
            layout=LAYOUT_REAL if layout_tag == 0 else LAYOUT_STACKED,
            dims=dims if dims != (0, 0) else None,
        )


@dataclass(frozen=True)
class GaussianPRFSystem:
    """Gaussian point-response-function imaging system on a pixel-center grid."""

    height: float = 35.0
    width: float = 2.0
    grid: tuple[int, int] = (64, 64)

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("PRF width must be positive")
        object.__setattr__(self, "grid", tuple(int(d) for d in self.grid))

    def detector_coords(self) -> np.ndarray:
        """(M, 2) detector locations at pixel centers, raster (row-major) order."""
        nx, ny = self.grid
        xs = np.arange(nx) + 0.5
        ys = np.arange(ny) + 0.5
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "iid-gaussian"  # or "iid-complex-gaussian"
    sigma: float = 20.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind not in ("iid-gaussian", "iid-complex-gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")


def _gaussian_image(centers, amplitude, obj_width, sys: GaussianPRFSystem) -> np.ndarray:
    """Closed-form Gaussian/Gaussian convolution sampled at the detectors."""
    eff2 = obj_width**2 + sys.width**2
    pref = amplitude * sys.height * obj_width**2 / eff2
    rm = sys.detector_coords()
    centers = np.atleast_2d(centers)
    if centers.shape[0] == 0:
        return np.zeros(rm.shape[0])
    d2 = ((rm[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return pref * np.exp(-d2 / (2.0 * eff2)).sum(axis=1)


def image_lumpy_analytic(real: LumpyRealization, sys: GaussianPRFSystem) -> Measurement:
    """Noiseless background image b of a lumpy realization (closed form)."""
    b = _gaussian_image(real.centers, real.amplitude, real.width, sys)
    return Measurement(data=b, layout=LAYOUT_REAL, dims=sys.grid)


def image_signal_analytic(sig: GaussianSignal, sys: GaussianPRFSystem) -> Measurement:
    """Noiseless signal image s (closed form)."""
    s = _gaussian_image(np.asarray(sig.center).reshape(1, 2), sig.amplitude, sig.width, sys)
    return Measurement(data=s, layout=LAYOUT_REAL, dims=sys.grid)


def project_prf_numeric(field, sys: GaussianPRFSystem, quad_step: float, pad: float | None = None) -> Measurement:
    """Quadrature oracle for the C-D mapping.

    `field` must accept an (n, 2) array of points and return n values.
    Midpoint tensor-product rule over the field of view padded by `pad`
    (default 8 PRF widths plus the grid overhang of broad objects).
    """
    if quad_step <= 0:
        raise ValueError("quad_step must be positive")
    if quad_step > sys.width / 4:
        raise ValueError("quad_step must be <= PRF width / 4")
    nx, ny = sys.grid
    if pad is None:
        pad = 8.0 * sys.width + 48.0
    xs = np.arange(-pad, nx + pad, quad_step) + quad_step / 2
    ys = np.arange(-pad, ny + pad, quad_step) + quad_step / 2
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    vals = np.asarray(field(np.column_stack([gx.ravel(), gy.ravel()]))).reshape(len(xs), len(ys))

    # Separable Gaussian kernel: b = w * Kx @ F @ Ky^T on the detector grid.
    det_x = np.arange(nx) + 0.5
    det_y = np.arange(ny) + 0.5
    kx = np.exp(-((det_x[:, None] - xs[None, :]) ** 2) / (2 * sys.width**2))
    ky = np.exp(-((det_y[:, None] - ys[None, :]) ** 2) / (2 * sys.width**2))
    weight = sys.height / (2 * np.pi * sys.width**2) * quad_step**2
    b = weight * (kx @ vals @ ky.T)
    return Measurement(data=b.ravel(), layout=LAYOUT_REAL, dims=sys.grid)


@dataclass(frozen=True, eq=False)
class FourierSamplingOperator:
    """Masked unnormalized 2-D DFT (D-D imaging operator)."""

    dims: tuple[int, int]
    mask: np.ndarray
    acceleration: float = 16.0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != self.dims:
            raise ValueError("mask shape must match dims")
        object.__setattr__(self, "mask", m)
        frac = m.mean()
        if not (0.9 / self.acceleration <= frac <= 1.1 / self.acceleration):
            raise ValueError(
                f"mask fraction {frac:.4f} outside +-10% of 1/acceleration ({1/self.acceleration:.4f})"
            )

    @property
    def n_selected(self) -> int:
        return int(self.mask.sum())


def _local_radius(rho: np.ndarray, scale: float) -> np.ndarray:
    # Linearly increasing exclusion radius with normalized frequency magnitude.
    return scale * (0.5 + 2.5 * rho)


def _dart_throw(order, coords, rho, calib, scale):
    """Sequential dart throwing; calibration points are pre-accepted."""
    accepted = coords[calib]
    keep = calib.copy()
    for idx in order:
        if keep[idx]:
            continue
        r = _local_radius(rho[idx], scale)
        d2 = ((accepted - coords[idx]) ** 2).sum(axis=1)
        if d2.size == 0 or d2.min() >= r * r:
            keep[idx] = True
            accepted = np.vstack([accepted, coords[idx]])
    return keep


def make_poisson_disc_mask(
    dims,
    acceleration: float,
    rng: np.random.Generator,
    calib_size: int = 16,
    tol: float = 0.02,
    return_scale: bool = False,
):
    """Variable-density Poisson-disc k-space mask (centered frequency grid).

    The sampled fraction is driven to 1/acceleration by bisection on the
    radius scale; a fully sampled calib_size x calib_size center block is
    always included.  Deterministic given the rng state.
    """
    if acceleration < 1:
        raise ValueError("acceleration must be >= 1")
    dims = tuple(int(d) for d in dims)
    if acceleration == 1:
        full = np.ones(dims, dtype=bool)
        return (full, 0.0) if return_scale else full

    nx, ny = dims
    fx = np.arange(nx) - nx // 2
    fy = np.arange(ny) - ny // 2
    gx, gy = np.meshgrid(fx, fy, indexing="ij")
    coords = np.column_stack([gx.ravel(), gy.ravel()]).astype(float)
    rho = np.hypot(coords[:, 0] / (nx / 2), coords[:, 1] / (ny / 2)) / np.sqrt(2)

    half = min(calib_size, min(dims)) // 2
    calib = ((np.abs(gx) < half) & (np.abs(gy) < half)).ravel()

    order = rng.permutation(coords.shape[0])
    target = 1.0 / acceleration
    lo, hi = 1e-3, 4.0 * max(nx, ny)
    best = None
    for _ in range(40):
        scale = np.sqrt(lo * hi)
        keep = _dart_throw(order, coords, rho, calib, scale)
        frac = keep.mean()
        if abs(frac - target) <= tol * target:
            best = keep
            break
        if frac > target:
            lo = scale
        else:
            hi = scale
        best = keep
    mask = best.reshape(dims)
    return (mask, scale) if return_scale else mask


def apply_fourier_operator(object_image, op: FourierSamplingOperator) -> Measurement:
    """Unnormalized forward 2-D DFT restricted to the mask (raster order)."""
    f = np.asarray(object_image, dtype=float).ravel()
    n = op.dims[0] * op.dims[1]
    if f.size != n:
        raise ValueError(f"object length {f.size} != dims product {n}")
    spec = np.fft.fft2(f.reshape(op.dims))
    # Mask is defined on the centered grid; shift the spectrum to match.
    kept = np.fft.fftshift(spec)[op.mask]
    data = np.concatenate([kept.real, kept.imag])
    return Measurement(data=data, layout=LAYOUT_STACKED, dims=op.dims)


def add_noise(g: Measurement, noise: NoiseModel, rng: np.random.Generator) -> Measurement:
    """Add i.i.d. N(0, sigma^2) to every stored component."""
    data = g.data + rng.normal(0.0, noise.sigma, size=g.data.size)
    return Measurement(data=data, layout=g.layout, dims=g.dims)


def psnr(test_set, sigma: float) -> float:
    """PSNR in dB: 20 log10(max over all components / sigma)."""
    max_g = max(float(np.max(m.data)) for m in test_set)
    return 20.0 * np.log10(max_g / sigma)
