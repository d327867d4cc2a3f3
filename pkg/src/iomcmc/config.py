"""Experiment configuration: TOML (or JSON) files describing the task,
chain settings, and evaluation protocol."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from .chains import ChainConfig
from .imaging import GaussianPRFSystem, NoiseModel
from .objects import GaussianSignal, LumpyModelParams

_MODELS = ("lumpy", "generator")
_OPERATORS = ("prf", "fourier", "identity")
_OBSERVERS = ("mcmc-lb", "mcmc-gan", "ho")


class ConfigError(Exception):
    """Raised for malformed or inconsistent experiment configs."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "lumpy"
    operator: str = "prf"
    noise_sigma: float = 20.0
    lumpy: LumpyModelParams = field(default_factory=LumpyModelParams)
    signal: GaussianSignal = field(default_factory=GaussianSignal)
    prf_height: float = 35.0
    prf_width: float = 2.0
    grid: tuple = (64, 64)
    acceleration: float = 16.0
    generator_path: str = ""
    binding: str = "image-domain"
    iterations: int = 200_000
    burn_in: int = 10_000
    beta: float = 0.1
    n_chains: int = 5
    step_sigma: float = 1.0
    observers: tuple = ("mcmc-lb", "ho")
    n0: int = 200
    n1: int = 200
    n_ho_samples: int = 2000
    output_dir: str = "runs/out"
    seed: int = 0

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.operator not in _OPERATORS:
            raise ConfigError(f"unknown operator {self.operator!r}")
        for obs in self.observers:
            if obs not in _OBSERVERS:
                raise ConfigError(f"unknown observer {obs!r}")
        if "mcmc-gan" in self.observers and self.model != "generator" and not self.generator_path:
            raise ConfigError("mcmc-gan observer needs a generator_path")
        if self.model == "generator" and not self.generator_path:
            raise ConfigError("generator model needs a generator_path")
        if "mcmc-lb" in self.observers and self.model != "lumpy":
            raise ConfigError("mcmc-lb observer needs the lumpy model")
        if "mcmc-lb" in self.observers and self.operator != "prf":
            raise ConfigError("mcmc-lb observer needs the prf operator")
        if self.noise_sigma <= 0:
            raise ConfigError("noise_sigma must be positive")
        if self.n0 < 1 or self.n1 < 1:
            raise ConfigError("n0 and n1 must be positive")
        if self.n_chains < 1:
            raise ConfigError("n_chains must be positive")

    def prf_system(self) -> GaussianPRFSystem:
        return GaussianPRFSystem(height=self.prf_height, width=self.prf_width, grid=self.grid)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(sigma=self.noise_sigma)

    def chain_config(self, seed: int, init="prior") -> ChainConfig:
        return ChainConfig(
            n_iterations=self.iterations, burn_in=self.burn_in, beta=self.beta,
            seed=seed, init=init,
        )

    def echo(self) -> dict:
        """JSON-ready dict of every field, for manifests."""
        return {
            "model": self.model,
            "operator": self.operator,
            "noise_sigma": self.noise_sigma,
            "lumpy": {
                "mean_lumps": self.lumpy.mean_lumps,
                "amplitude": self.lumpy.amplitude,
                "width": self.lumpy.width,
                "fov": list(self.lumpy.fov),
                "fixed_count": self.lumpy.fixed_count,
            },
            "signal": {
                "amplitude": self.signal.amplitude,
                "width": self.signal.width,
                "center": list(self.signal.center),
            },
            "prf": {"height": self.prf_height, "width": self.prf_width},
            "grid": list(self.grid),
            "acceleration": self.acceleration,
            "generator_path": self.generator_path,
            "binding": self.binding,
            "chain": {
                "iterations": self.iterations,
                "burn_in": self.burn_in,
                "beta": self.beta,
                "chains": self.n_chains,
                "step_sigma": self.step_sigma,
            },
            "evaluation": {
                "n0": self.n0,
                "n1": self.n1,
                "n_ho_samples": self.n_ho_samples,
                "observers": list(self.observers),
            },
            "output_dir": self.output_dir,
            "seed": self.seed,
        }


def _from_dict(raw: dict) -> ExperimentConfig:
    try:
        task = raw.get("task", {})
        lumpy_raw = task.get("lumpy", {})
        lumpy = LumpyModelParams(
            mean_lumps=lumpy_raw.get("mean_lumps", 6.0),
            amplitude=lumpy_raw.get("amplitude", 1.0),
            width=lumpy_raw.get("width", 8.0),
            fov=tuple(lumpy_raw.get("fov", (64, 64))),
            fixed_count=lumpy_raw.get("fixed_count"),
        )
        sig_raw = task.get("signal", {})
        signal = GaussianSignal(
            amplitude=sig_raw.get("amplitude", 0.3),
            width=sig_raw.get("width", 2.5),
            center=tuple(sig_raw.get("center", (32.0, 32.0))),
        )
        prf = task.get("prf", {})
        chain = raw.get("chain", {})
        ev = raw.get("evaluation", {})
        return ExperimentConfig(
            model=task.get("model", "lumpy"),
            operator=task.get("operator", "prf"),
            noise_sigma=task.get("noise_sigma", 20.0),
            lumpy=lumpy,
            signal=signal,
            prf_height=prf.get("height", 35.0),
            prf_width=prf.get("width", 2.0),
            grid=tuple(task.get("grid", lumpy.fov)),
            acceleration=task.get("fourier", {}).get("acceleration", 16.0),
            generator_path=task.get("generator_path", ""),
            binding=task.get("binding", "image-domain"),
            iterations=chain.get("iterations", 200_000),
            burn_in=chain.get("burn_in", 10_000),
            beta=chain.get("beta", 0.1),
            n_chains=chain.get("chains", 5),
            step_sigma=chain.get("step_sigma", 1.0),
            observers=tuple(ev.get("observers", ("mcmc-lb", "ho"))),
            n0=ev.get("n0", 200),
            n1=ev.get("n1", 200),
            n_ho_samples=ev.get("n_ho_samples", 2000),
            output_dir=raw.get("output_dir", "runs/out"),
            seed=raw.get("seed", 0),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, AttributeError) as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> ExperimentConfig:
    """Load an ExperimentConfig from a .toml or .json file."""
    path = str(path)
    try:
        if path.endswith(".json"):
            with open(path) as f:
                raw = json.load(f)
        else:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    return _from_dict(raw)
