"""Metropolis-Hastings chains: pCN in generator latent space and
random-walk / birth-death moves over lump parameters.

All likelihood arithmetic is done in log space; the per-iteration BKE log
likelihood ratio trace is the quantity persisted and averaged.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .generator import Dense, GeneratorNet, SOMBinding, generated_background
from .imaging import FourierSamplingOperator, GaussianPRFSystem, apply_fourier_operator
from .objects import LumpyModelParams, LumpyRealization

_IOCH_MAGIC = b"IOCH"
_IOCH_VERSION = 1

_BLOCK = 4096
_TUNE_BLOCK = 500
_TUNE_TARGET = (0.2, 0.4)


@dataclass(frozen=True)
class ChainConfig:
    n_iterations: int = 200_000
    burn_in: int = 10_000
    beta: float = 0.1
    seed: int = 0
    init: object = "prior"  # "prior" or an explicit initial state
    thinning: int = 0  # store every n-th latent state if > 0
    tune_beta: bool = False  # adapt beta during burn-in, frozen afterwards

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError("burn_in must be < n_iterations")


@dataclass(frozen=True, eq=False)
class ChainRecord:
    log_lambda: np.ndarray  # per-iteration BKE log likelihood ratio
    accepted: np.ndarray  # bool per iteration
    burn_in: int
    final_state: np.ndarray
    seed: int
    beta: float  # beta in effect after tuning
    extra: dict = field(default_factory=dict)
    states: np.ndarray | None = None  # thinned latent trace, optional

    @property
    def n_iterations(self) -> int:
        return self.log_lambda.size

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())

    def post_burn_in(self) -> np.ndarray:
        return self.log_lambda[self.burn_in :]

    def save(self, path):
        cfg = {
            "n_iterations": int(self.n_iterations),
            "burn_in": int(self.burn_in),
            "beta": float(self.beta),
            "seed": int(self.seed),
            "extra": self.extra,
        }
        blob = json.dumps(cfg).encode()
        with open(path, "wb") as f:
            f.write(_IOCH_MAGIC)
            f.write(struct.pack("<II", _IOCH_VERSION, len(blob)))
            f.write(blob)
            f.write(struct.pack("<Q", self.n_iterations))
            f.write(self.log_lambda.astype("<f4").tobytes())
            f.write(np.packbits(self.accepted.astype(np.uint8)).tobytes())
            fs = np.asarray(self.final_state, dtype=float).ravel()
            f.write(struct.pack("<I", fs.size))
            f.write(fs.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ChainRecord":
        with open(path, "rb") as f:
            if f.read(4) != _IOCH_MAGIC:
                raise ValueError("not an IOCH chain file")
            version, blob_len = struct.unpack("<II", f.read(8))
            if version != _IOCH_VERSION:
                raise ValueError(f"unsupported IOCH version {version}")
            cfg = json.loads(f.read(blob_len).decode())
            (n,) = struct.unpack("<Q", f.read(8))
            log_lambda = np.frombuffer(f.read(4 * n), dtype="<f4").astype(float)
            nbytes = (n + 7) // 8
            accepted = np.unpackbits(
                np.frombuffer(f.read(nbytes), dtype=np.uint8), count=n
            ).astype(bool)
            (fs_len,) = struct.unpack("<I", f.read(4))
            final_state = np.frombuffer(f.read(8 * fs_len), dtype="<f8").copy()
        return cls(
            log_lambda=log_lambda,
            accepted=accepted,
            burn_in=cfg["burn_in"],
            final_state=final_state,
            seed=cfg["seed"],
            beta=cfg["beta"],
            extra=cfg.get("extra", {}),
        )

    def summary(self) -> dict:
        return {
            "n_iterations": int(self.n_iterations),
            "burn_in": int(self.burn_in),
            "beta": float(self.beta),
            "seed": int(self.seed),
            "acceptance_rate": self.acceptance_rate,
            **self.extra,
        }


def pcn_propose(z, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Preconditioned Crank-Nicolson proposal sqrt(1-beta^2) z + beta xi."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1]")
    z = np.asarray(z, dtype=float)
    return np.sqrt(1.0 - beta * beta) * z + beta * rng.standard_normal(z.size)


def gaussian_log_acceptance(g, b_new, b_cur, sigma: float) -> float:
    """Log acceptance probability for the i.i.d. Gaussian likelihood ratio."""
    g = np.asarray(g, dtype=float).ravel()
    b_new = np.asarray(b_new, dtype=float).ravel()
    b_cur = np.asarray(b_cur, dtype=float).ravel()
    if g.shape != b_new.shape or g.shape != b_cur.shape:
        raise ValueError("dimension mismatch")
    diff = np.sum((g - b_cur) ** 2) - np.sum((g - b_new) ** 2)
    return float(min(0.0, diff / (2.0 * sigma**2)))


def _dense_affine(net: GeneratorNet, binding: SOMBinding):
    """Effective (W, c) when the composed map latent -> measurement is affine."""
    if len(net.layers) != 1 or not isinstance(net.layers[0], Dense):
        return None
    if net.output_transform != 0:
        return None
    W = net.layers[0].weights.astype(float)
    c = net.layers[0].bias.astype(float)
    if binding.mode == "image-domain":
        return W, c
    op = binding.operator
    if isinstance(op, FourierSamplingOperator):
        cols = [apply_fourier_operator(W[:, j], op).data for j in range(W.shape[1])]
        return np.column_stack(cols), apply_fourier_operator(c, op).data
    return None


def run_latent_chain(task, net: GeneratorNet, binding: SOMBinding, g, cfg: ChainConfig) -> ChainRecord:
    """MCMC-GAN chain: pCN proposals in latent space, Gaussian acceptance.

    `task` supplies the signal measurement and noise model; `g` is the
    measurement under test (Measurement or flat array).
    """
    rng = np.random.default_rng(cfg.seed)
    g = np.asarray(getattr(g, "data", g), dtype=float).ravel()
    s = np.asarray(task.signal.data, dtype=float).ravel()
    sigma = task.noise.sigma
    if isinstance(cfg.init, str) and cfg.init == "prior":
        z = rng.standard_normal(net.input_dim)
    else:
        z = np.asarray(cfg.init, dtype=float).copy()
        if z.size != net.input_dim:
            raise ValueError("initial state length != latent dim")
    b = generated_background(net, binding, z)
    if b.size != g.size or s.size != g.size:
        raise ValueError("generator/measurement dimension mismatch")

    affine = None if cfg.thinning > 0 else _dense_affine(net, binding)
    inv_sigma2 = 1.0 / sigma**2

    n = cfg.n_iterations
    log_lambda = np.empty(n)
    accepted = np.zeros(n, dtype=np.uint8)
    states = [] if cfg.thinning > 0 else None
    beta = cfg.beta

    done = 0
    while done < n:
        tuning = cfg.tune_beta and done < cfg.burn_in
        m = min(_TUNE_BLOCK if tuning else _BLOCK, n - done)
        normals = rng.standard_normal((m, net.input_dim))
        log_unifs = np.log(rng.random(m))
        if affine is not None:
            W_eff, c_eff = affine
            _kernels.pcn_dense_chain(
                np.ascontiguousarray(W_eff), np.ascontiguousarray(c_eff), g, s,
                inv_sigma2, beta, z, b,
                normals, log_unifs, log_lambda[done : done + m], accepted[done : done + m],
            )
        else:
            _latent_block(
                net, binding, g, s, inv_sigma2, beta, z, b,
                normals, log_unifs, log_lambda[done : done + m], accepted[done : done + m],
                states, cfg.thinning, done,
            )
        if tuning:
            rate = accepted[done : done + m].mean()
            if rate < _TUNE_TARGET[0]:
                beta = max(beta / 1.4, 1e-4)
            elif rate > _TUNE_TARGET[1]:
                beta = min(beta * 1.4, 1.0)
        done += m

    return ChainRecord(
        log_lambda=log_lambda,
        accepted=accepted.astype(bool),
        burn_in=cfg.burn_in,
        final_state=z,
        seed=cfg.seed,
        beta=beta,
        extra={"sampler": "latent", "beta0": cfg.beta},
        states=np.asarray(states) if states is not None else None,
    )


def _latent_block(
    net, binding, g, s, inv_sigma2, beta, z, b,
    normals, log_unifs, out_loglam, out_accept, states, thinning, offset,
):
    keep = np.sqrt(1.0 - beta * beta)
    gs = g - 0.5 * s
    rnorm2 = float(np.sum((g - b) ** 2))
    for t in range(log_unifs.size):
        z_new = keep * z + beta * normals[t]
        b_new = generated_background(net, binding, z_new)
        rnorm2_new = float(np.sum((g - b_new) ** 2))
        log_alpha = 0.5 * inv_sigma2 * (rnorm2 - rnorm2_new)
        if log_unifs[t] < (log_alpha if log_alpha < 0.0 else 0.0):
            z[:] = z_new
            b[:] = b_new
            rnorm2 = rnorm2_new
            out_accept[t] = 1
        out_loglam[t] = inv_sigma2 * float(np.dot(gs - b, s))
        if states is not None and thinning > 0 and (offset + t) % thinning == 0:
            states.append(z.copy())


@dataclass(frozen=True)
class MoveMix:
    """Move-type probabilities for the lumpy-parameter proposal."""

    walk: float = 1.0
    birth: float = 0.0
    death: float = 0.0

    def __post_init__(self):
        total = self.walk + self.birth + self.death
        if not np.isclose(total, 1.0):
            raise ValueError("move probabilities must sum to 1")


WALK_ONLY = MoveMix()
BIRTH_DEATH = MoveMix(walk=0.8, birth=0.1, death=0.1)


def lumpy_propose(
    state: LumpyRealization,
    step_sigma: float,
    move_mix: MoveMix,
    rng: np.random.Generator,
    mean_lumps: float = 6.0,
):
    """Propose a new lump configuration.

    Returns (proposal, log_correction, move) where log_correction is the log
    of (prior ratio x reverse/forward proposal ratio) to be added to the
    data log-likelihood difference in the MH acceptance, and move is a
    ("walk"|"birth"|"death", index) tag.  A proposal with zero prior
    (center outside the field of view) carries -inf correction.  On an
    empty state, walk/death moves are resampled as births.
    """
    n = state.n_lumps
    u = rng.random()
    if u < move_mix.walk:
        move = "walk"
    elif u < move_mix.walk + move_mix.birth:
        move = "birth"
    else:
        move = "death"
    if n == 0 and move in ("walk", "death"):
        move = "birth" if move_mix.birth > 0 else "walk"
        if move == "walk":  # walk-only mix on an empty state: nothing to move
            return state, 0.0, ("none", -1)

    fov = state.fov
    if move == "walk":
        i = int(rng.integers(n))
        step = rng.normal(0.0, step_sigma, 2)
        new_center = state.centers[i] + step
        if not (0.0 <= new_center[0] <= fov[0] and 0.0 <= new_center[1] <= fov[1]):
            return state, -np.inf, ("walk", i)
        centers = state.centers.copy()
        centers[i] = new_center
        correction = 0.0  # symmetric move, uniform prior inside the FOV
    elif move == "birth":
        new_center = rng.uniform((0.0, 0.0), fov)
        centers = np.vstack([state.centers, new_center])
        with np.errstate(divide="ignore"):
            # log(0) = -inf is the right answer when the reverse move has
            # zero probability: the proposal can never be accepted
            correction = (
                np.log(mean_lumps) - np.log(n + 1) + np.log(move_mix.death) - np.log(move_mix.birth)
            )
        i = n
    else:  # death
        i = int(rng.integers(n))
        centers = np.delete(state.centers, i, axis=0)
        with np.errstate(divide="ignore"):
            correction = (
                np.log(n) - np.log(mean_lumps) + np.log(move_mix.birth) - np.log(move_mix.death)
            )
    proposal = LumpyRealization(
        centers=centers, amplitude=state.amplitude, width=state.width, fov=fov
    )
    return proposal, float(correction), (move, i)


def run_lumpy_chain(
    task,
    g,
    params: LumpyModelParams,
    cfg: ChainConfig,
    step_sigma: float = 1.0,
    move_mix: MoveMix = WALK_ONLY,
) -> ChainRecord:
    """MCMC-LB chain over lump parameters with Gaussian data likelihood.

    Walk-only fixed-count chains run on the compiled kernel; mixes with
    birth/death moves use the generic python path.
    """
    from .imaging import image_lumpy_analytic

    rng = np.random.default_rng(cfg.seed)
    sys = getattr(task, "prf_system", None) or GaussianPRFSystem(grid=params.fov)
    g = np.asarray(getattr(g, "data", g), dtype=float).ravel()
    s = np.asarray(task.signal.data, dtype=float).ravel()
    sigma = task.noise.sigma
    if g.size != sys.grid[0] * sys.grid[1] or s.size != g.size:
        raise ValueError("measurement/system dimension mismatch")

    if isinstance(cfg.init, LumpyRealization):
        state = cfg.init
    else:
        from .objects import sample_lumpy_realization

        state = sample_lumpy_realization(params, rng)
    b = image_lumpy_analytic(state, sys).data
    inv_sigma2 = 1.0 / sigma**2

    n = cfg.n_iterations
    log_lambda = np.empty(n)
    accepted = np.zeros(n, dtype=np.uint8)

    walk_only = move_mix.birth == 0.0 and move_mix.death == 0.0
    if walk_only and state.n_lumps > 0:
        centers = state.centers.copy()
        eff2 = params.width**2 + sys.width**2
        pref = params.amplitude * sys.height * params.width**2 / eff2
        xs = np.arange(sys.grid[0]) + 0.5
        ys = np.arange(sys.grid[1]) + 0.5
        done = 0
        while done < n:
            m = min(_BLOCK, n - done)
            lump_idx = rng.integers(0, state.n_lumps, m)
            steps = rng.normal(0.0, step_sigma, (m, 2))
            log_unifs = np.log(rng.random(m))
            _kernels.lumpy_walk_chain(
                centers, b, g, s, xs, ys, pref, 1.0 / (2.0 * eff2), inv_sigma2,
                float(params.fov[0]), float(params.fov[1]),
                lump_idx.astype(np.int64), steps, log_unifs,
                log_lambda[done : done + m], accepted[done : done + m],
            )
            done += m
        final_state = centers.ravel()
    else:
        gs = g - 0.5 * s
        rnorm2 = float(np.sum((g - b) ** 2))
        for t in range(n):
            proposal, correction, _move = lumpy_propose(
                state, step_sigma, move_mix, rng, mean_lumps=params.mean_lumps
            )
            if np.isfinite(correction) and proposal is not state:
                b_new = image_lumpy_analytic(proposal, sys).data
                rnorm2_new = float(np.sum((g - b_new) ** 2))
                log_alpha = 0.5 * inv_sigma2 * (rnorm2 - rnorm2_new) + correction
                if log_alpha > 0.0:
                    log_alpha = 0.0
                if np.log(rng.random()) < log_alpha:
                    state = proposal
                    b = b_new
                    rnorm2 = rnorm2_new
                    accepted[t] = 1
            log_lambda[t] = inv_sigma2 * float(np.dot(gs - b, s))
        final_state = state.centers.ravel()

    return ChainRecord(
        log_lambda=log_lambda,
        accepted=accepted.astype(bool),
        burn_in=cfg.burn_in,
        final_state=final_state,
        seed=cfg.seed,
        beta=cfg.beta,
        extra={"sampler": "lumpy", "step_sigma": step_sigma},
    )
