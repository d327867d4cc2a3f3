"""Feed-forward generator networks used as stochastic object models.

The layer set is the minimal closure needed for small dense and
upsample-conv generators; weights are stored float32 in the portable GSOM
container and widened to float64 for the forward pass (chain acceptance
ratios are exponentials of large numbers).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_GSOM_MAGIC = b"GSOM"
_GSOM_VERSION = 1

# output transforms applied after the last layer
TRANSFORM_NONE = 0
TRANSFORM_TANH01 = 1  # tanh rescaled from [-1, 1] to [0, 1]


class GsomFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dense:
    weights: np.ndarray  # (out, in), row-major
    bias: np.ndarray  # (out,)

    tag = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float32)
        b = np.asarray(self.bias, dtype=np.float32)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("dense weights must be (out, in) with matching bias")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class LeakyReLU:
    alpha: float = 0.2

    tag = 2

    def __post_init__(self):
        # stored as float32 on disk, so keep the in-memory value at the
        # same precision to make save/load round trips exact
        object.__setattr__(self, "alpha", float(np.float32(self.alpha)))


@dataclass(frozen=True)
class Tanh:
    tag = 3


@dataclass(frozen=True)
class Reshape:
    dims: tuple[int, ...]  # (channels, h, w)

    tag = 4

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


@dataclass(frozen=True)
class Upsample2x:
    """Nearest-neighbor 2x spatial upsampling of a (c, h, w) tensor."""

    tag = 5


@dataclass(frozen=True, eq=False)
class Conv2d:
    """Same-padded 2-D convolution on a (c, h, w) tensor; 3x3 or 5x5 kernels."""

    weights: np.ndarray  # (out_ch, in_ch, kh, kw)
    bias: np.ndarray  # (out_ch,)

    tag = 6

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float32)
        b = np.asarray(self.bias, dtype=np.float32)
        if w.ndim != 4 or w.shape[2] not in (3, 5) or w.shape[2] != w.shape[3]:
            raise ValueError("conv kernel must be (out_ch, in_ch, k, k) with k in {3, 5}")
        if b.shape != (w.shape[0],):
            raise ValueError("conv bias shape mismatch")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True, eq=False)
class GeneratorNet:
    input_dim: int
    layers: tuple
    output_dims: tuple[int, ...]
    output_transform: int = TRANSFORM_NONE

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "output_dims", tuple(int(d) for d in self.output_dims))
        _check_dims(self)

    @property
    def output_size(self) -> int:
        return int(np.prod(self.output_dims))


def _layer_out_shape(layer, shape):
    """shape is a tuple: (n,) for flat or (c, h, w) for spatial."""
    if isinstance(layer, Dense):
        if len(shape) != 1 or shape[0] != layer.weights.shape[1]:
            raise GsomFormatError(
                f"dense layer expects flat input of {layer.weights.shape[1]}, got {shape}"
            )
        return (layer.weights.shape[0],)
    if isinstance(layer, (LeakyReLU, Tanh)):
        return shape
    if isinstance(layer, Reshape):
        if int(np.prod(shape)) != int(np.prod(layer.dims)):
            raise GsomFormatError(f"cannot reshape {shape} to {layer.dims}")
        return layer.dims
    if isinstance(layer, Upsample2x):
        if len(shape) != 3:
            raise GsomFormatError("upsample2x expects a (c, h, w) tensor")
        return (shape[0], 2 * shape[1], 2 * shape[2])
    if isinstance(layer, Conv2d):
        if len(shape) != 3 or shape[0] != layer.weights.shape[1]:
            raise GsomFormatError(
                f"conv layer expects {layer.weights.shape[1]} channels, got {shape}"
            )
        return (layer.weights.shape[0], shape[1], shape[2])
    raise GsomFormatError(f"unknown layer {layer!r}")


def _check_dims(net: GeneratorNet):
    shape = (net.input_dim,)
    for i, layer in enumerate(net.layers):
        try:
            shape = _layer_out_shape(layer, shape)
        except GsomFormatError as exc:
            raise GsomFormatError(f"layer {i}: {exc}") from None
    if int(np.prod(shape)) != net.output_size:
        raise GsomFormatError(
            f"network output size {int(np.prod(shape))} != declared {net.output_size}"
        )


def generator_forward(net: GeneratorNet, z) -> np.ndarray:
    """Deterministic forward pass; float64 arithmetic, flat output."""
    x = np.asarray(z, dtype=float).ravel()
    if x.size != net.input_dim:
        raise ValueError(f"latent length {x.size} != k={net.input_dim}")
    for layer in net.layers:
        if isinstance(layer, Dense):
            x = layer.weights.astype(float) @ x.ravel() + layer.bias.astype(float)
        elif isinstance(layer, LeakyReLU):
            x = np.where(x >= 0, x, layer.alpha * x)
        elif isinstance(layer, Tanh):
            x = np.tanh(x)
        elif isinstance(layer, Reshape):
            x = x.reshape(layer.dims)
        elif isinstance(layer, Upsample2x):
            x = np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)
        elif isinstance(layer, Conv2d):
            x = _conv2d_same(x, layer.weights.astype(float), layer.bias.astype(float))
    x = x.ravel()
    if net.output_transform == TRANSFORM_TANH01:
        x = 0.5 * (np.tanh(x) + 1.0)
    return x


def _conv2d_same(x, w, b):
    """x: (in_ch, h, w); w: (out_ch, in_ch, k, k); same (zero) padding."""
    k = w.shape[2]
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    # win: (in_ch, h, w, k, k)
    return np.einsum("oikl,ihwkl->ohw", w, win) + b[:, None, None]


def make_linear_generator(W, c) -> GeneratorNet:
    """Single dense-layer generator b = W z + c.

    Under z ~ N(0, I) the induced background is Gaussian N(c, W W^T), which
    makes the ideal observer analytic; used as an oracle by the tests.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    if W.shape[0] != c.size:
        raise ValueError("W rows must match len(c)")
    return GeneratorNet(
        input_dim=W.shape[1],
        layers=(Dense(weights=W, bias=c),),
        output_dims=(c.size,),
    )


def fit_linear_surrogate(images, k=None, c=None) -> GeneratorNet:
    """Fit a linear generator to the mean/covariance of an image ensemble.

    W is built from the top-k eigenpairs of the sample covariance, so the
    surrogate matches the ensemble's first and second moments.
    """
    X = np.asarray(images, dtype=float)
    X = X.reshape(X.shape[0], -1)
    mean = X.mean(axis=0)
    if k is None:
        k = min(X.shape[0] - 1, X.shape[1])
    # Economy eigendecomposition via SVD of the centered data.
    u, svals, vt = np.linalg.svd(X - mean, full_matrices=False)
    std = svals[:k] / np.sqrt(X.shape[0] - 1)
    W = vt[:k].T * std
    return make_linear_generator(W, mean if c is None else c)


@dataclass(frozen=True)
class SOMBinding:
    """How generator output maps to measurement space.

    image-domain: G(z) already lives in measurement space.
    object-domain: G(z) is an object; an imaging operator must be supplied
    (a FourierSamplingOperator or any callable vector -> Measurement).
    """

    mode: str = "image-domain"
    operator: object | None = None

    def __post_init__(self):
        if self.mode not in ("image-domain", "object-domain"):
            raise ValueError(f"unknown SOM binding mode {self.mode!r}")
        if self.mode == "object-domain" and self.operator is None:
            raise ValueError("object-domain binding requires an imaging operator")


def generated_background(net: GeneratorNet, binding: SOMBinding, z):
    """Background measurement vector (flat, stacked-real for complex ops)."""
    from .imaging import FourierSamplingOperator, Measurement, apply_fourier_operator

    out = generator_forward(net, z)
    if binding.mode == "image-domain":
        return out
    op = binding.operator
    if isinstance(op, FourierSamplingOperator):
        return apply_fourier_operator(out, op).data
    res = op(out)
    return res.data if isinstance(res, Measurement) else np.asarray(res, dtype=float).ravel()


# --- GSOM container -------------------------------------------------------

def save_generator(net: GeneratorNet, path):
    with open(path, "wb") as f:
        f.write(_GSOM_MAGIC)
        f.write(struct.pack("<II", _GSOM_VERSION, net.input_dim))
        f.write(struct.pack("<B", len(net.output_dims)))
        f.write(struct.pack(f"<{len(net.output_dims)}I", *net.output_dims))
        f.write(struct.pack("<BI", net.output_transform, len(net.layers)))
        for layer in net.layers:
            f.write(struct.pack("<B", layer.tag))
            if isinstance(layer, Dense):
                out_d, in_d = layer.weights.shape
                f.write(struct.pack("<II", out_d, in_d))
                f.write(layer.weights.astype("<f4").tobytes())
                f.write(layer.bias.astype("<f4").tobytes())
            elif isinstance(layer, LeakyReLU):
                f.write(struct.pack("<f", layer.alpha))
            elif isinstance(layer, Tanh):
                pass
            elif isinstance(layer, Reshape):
                f.write(struct.pack("<B", len(layer.dims)))
                f.write(struct.pack(f"<{len(layer.dims)}I", *layer.dims))
            elif isinstance(layer, Upsample2x):
                pass
            elif isinstance(layer, Conv2d):
                f.write(struct.pack("<4I", *layer.weights.shape))
                f.write(layer.weights.astype("<f4").tobytes())
                f.write(layer.bias.astype("<f4").tobytes())


def _read(f, n, what):
    buf = f.read(n)
    if len(buf) != n:
        raise GsomFormatError(f"truncated file while reading {what}")
    return buf


def load_generator(path) -> GeneratorNet:
    """Load a GSOM weight file; validates dimensions and weight finiteness."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _GSOM_MAGIC:
            raise GsomFormatError(f"bad magic {magic!r}, expected GSOM")
        version, k = struct.unpack("<II", _read(f, 8, "header"))
        if version != _GSOM_VERSION:
            raise GsomFormatError(f"unsupported GSOM version {version}")
        (ndim,) = struct.unpack("<B", _read(f, 1, "header"))
        out_dims = struct.unpack(f"<{ndim}I", _read(f, 4 * ndim, "output dims"))
        transform, n_layers = struct.unpack("<BI", _read(f, 5, "header"))
        layers = []
        for i in range(n_layers):
            what = f"layer {i}"
            (tag,) = struct.unpack("<B", _read(f, 1, what))
            if tag == Dense.tag:
                out_d, in_d = struct.unpack("<II", _read(f, 8, what))
                w = np.frombuffer(_read(f, 4 * out_d * in_d, what), dtype="<f4").reshape(out_d, in_d)
                b = np.frombuffer(_read(f, 4 * out_d, what), dtype="<f4")
                layers.append(Dense(weights=w, bias=b))
            elif tag == LeakyReLU.tag:
                (alpha,) = struct.unpack("<f", _read(f, 4, what))
                layers.append(LeakyReLU(alpha=alpha))
            elif tag == Tanh.tag:
                layers.append(Tanh())
            elif tag == Reshape.tag:
                (nd,) = struct.unpack("<B", _read(f, 1, what))
                dims = struct.unpack(f"<{nd}I", _read(f, 4 * nd, what))
                layers.append(Reshape(dims=dims))
            elif tag == Upsample2x.tag:
                layers.append(Upsample2x())
            elif tag == Conv2d.tag:
                shape = struct.unpack("<4I", _read(f, 16, what))
                w = np.frombuffer(_read(f, 4 * int(np.prod(shape)), what), dtype="<f4").reshape(shape)
                b = np.frombuffer(_read(f, 4 * shape[0], what), dtype="<f4")
                layers.append(Conv2d(weights=w, bias=b))
            else:
                raise GsomFormatError(f"layer {i}: unknown layer tag {tag}")
            last = layers[-1]
            for arr_name in ("weights", "bias"):
                arr = getattr(last, arr_name, None)
                if arr is not None and not np.isfinite(arr).all():
                    raise GsomFormatError(f"layer {i}: non-finite {arr_name}")
    return GeneratorNet(
        input_dim=k, layers=layers, output_dims=out_dims, output_transform=transform
    )
