"""Command-line experiment harness.

Subcommands: gen-data, run-mcmc, diagnose, evaluate, spectrum, oracle-check.
Exit codes: 0 success, 2 config error, 3 incomplete inputs.
"""
from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile

import numpy as np

from .chains import ChainRecord, run_latent_chain, run_lumpy_chain
from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import diagnostic_report, save_report
from .evaluation import empirical_roc, radial_power_spectrum, spectra_to_csv
from .generator import SOMBinding, generated_background, load_generator, make_linear_generator
from .imaging import (
    LAYOUT_REAL,
    LAYOUT_STACKED,
    FourierSamplingOperator,
    Measurement,
    NoiseModel,
    add_noise,
    apply_fourier_operator,
    image_lumpy_analytic,
    image_signal_analytic,
    make_poisson_disc_mask,
)
from .objects import eval_signal_field, sample_lumpy_realization
from .observers import (
    DetectionTask,
    ObserverScoreSet,
    estimate_log_likelihood_ratio,
    ho_template_from_samples,
    ho_test_statistic,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3

SEED_SCHEME = (
    "numpy SeedSequence(master, spawn_key=(stream, ...)): "
    "data (0, hyp, case); chains (1, hyp, case, chain); ho backgrounds (2, i); mask (9,)"
)


class IncompleteInputs(Exception):
    pass


def _derive_rng(master, *key):
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=key))


def _derive_seed(master, *key):
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1)[0])


def _atomic_save(obj, path):
    """Write via the object's save() to a temp file, then rename into place."""
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        obj.save(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_call(write_fn, path):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fourier_op(cfg: ExperimentConfig) -> FourierSamplingOperator:
    # deterministically rebuilt from the master seed, so every subcommand
    # sees the same mask without persisting it
    mask = make_poisson_disc_mask(cfg.grid, cfg.acceleration, _derive_rng(cfg.seed, 9))
    return FourierSamplingOperator(dims=cfg.grid, mask=mask, acceleration=cfg.acceleration)


def _load_net(cfg: ExperimentConfig):
    if not cfg.generator_path:
        return None
    if not os.path.exists(cfg.generator_path):
        raise IncompleteInputs(f"generator file not found: {cfg.generator_path}")
    return load_generator(cfg.generator_path)


def _binding(cfg: ExperimentConfig) -> SOMBinding:
    op = _fourier_op(cfg) if cfg.operator == "fourier" else None
    return SOMBinding(mode=cfg.binding, operator=op)


def _signal_measurement(cfg: ExperimentConfig) -> Measurement:
    sysm = cfg.prf_system()
    if cfg.operator == "prf":
        return image_signal_analytic(cfg.signal, sysm)
    raster = eval_signal_field(cfg.signal, sysm.detector_coords())
    if cfg.operator == "fourier":
        return apply_fourier_operator(raster, _fourier_op(cfg))
    return Measurement(data=raster, layout=LAYOUT_REAL, dims=cfg.grid)


def _background_measurement(cfg: ExperimentConfig, rng, net) -> Measurement:
    if cfg.model == "generator":
        z = rng.standard_normal(net.input_dim)
        b = generated_background(net, _binding(cfg), z)
        dims = cfg.grid
        layout = LAYOUT_STACKED if cfg.operator == "fourier" else LAYOUT_REAL
        return Measurement(data=b, layout=layout, dims=dims)
    real = sample_lumpy_realization(cfg.lumpy, rng)
    sysm = cfg.prf_system()
    if cfg.operator == "prf":
        return image_lumpy_analytic(real, sysm)
    from .objects import eval_object_field

    raster = eval_object_field(real, sysm.detector_coords())
    if cfg.operator == "fourier":
        return apply_fourier_operator(raster, _fourier_op(cfg))
    return Measurement(data=raster, layout=LAYOUT_REAL, dims=cfg.grid)


def _data_path(out, hyp, case):
    return os.path.join(out, "data", f"h{hyp}_case{case:04d}.iomm")


def _chain_path(out, observer, hyp, case, chain):
    return os.path.join(out, "chains", observer, f"h{hyp}_case{case:04d}_c{chain}.ioch")


def _cases(cfg, args):
    """(hyp, case) pairs selected by --cases a..b (case index within each class)."""
    lo, hi = 0, max(cfg.n0, cfg.n1)
    if getattr(args, "cases", None):
        try:
            a, b = args.cases.split("..")
            lo, hi = int(a), int(b) + 1
        except ValueError:
            raise ConfigError(f"bad --cases range {args.cases!r}, expected a..b")
    out = []
    for hyp, n in ((0, cfg.n0), (1, cfg.n1)):
        for i in range(max(lo, 0), min(hi, n)):
            out.append((hyp, i))
    return out


def _write_manifest(out, cfg, entry):
    path = os.path.join(out, "manifest.json")
    manifest = {"seed_scheme": SEED_SCHEME, "config": cfg.echo(), "runs": []}
    if os.path.exists(path):
        with open(path) as f:
            manifest = json.load(f)
    entry["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest["runs"].append(entry)
    _atomic_call(lambda p: open(p, "w").write(json.dumps(manifest, indent=2)), path)


def cmd_gen_data(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir
    os.makedirs(os.path.join(out, "data"), exist_ok=True)
    net = _load_net(cfg) if cfg.model == "generator" else None
    s = _signal_measurement(cfg)
    noise = cfg.noise_model()
    written, skipped = [], 0
    for hyp, n in ((0, cfg.n0), (1, cfg.n1)):
        for i in range(n):
            path = _data_path(out, hyp, i)
            if os.path.exists(path) and not args.force:
                skipped += 1
                continue
            rng = _derive_rng(cfg.seed, 0, hyp, i)
            b = _background_measurement(cfg, rng, net)
            data = b.data + (s.data if hyp else 0.0)
            g = add_noise(Measurement(data=data, layout=b.layout, dims=b.dims), noise, rng)
            _atomic_save(g, path)
            written.append(os.path.relpath(path, out))
    _write_manifest(out, cfg, {"command": "gen-data", "written": len(written), "skipped": skipped})
    print(f"gen-data: wrote {len(written)} measurements, skipped {skipped} existing")
    return EXIT_OK


def _run_one_chain(cfg, observer, net, task, g, seed):
    if observer == "mcmc-lb":
        return run_lumpy_chain(task, g, cfg.lumpy, cfg.chain_config(seed), step_sigma=cfg.step_sigma)
    return run_latent_chain(task, net, _binding(cfg), g, cfg.chain_config(seed))


def cmd_run_mcmc(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir
    n_chains = args.chains or cfg.n_chains
    observers = [o for o in cfg.observers if o != "ho"]
    if not observers:
        print("run-mcmc: no MCMC observers configured")
        return EXIT_OK
    net = _load_net(cfg) if any(o == "mcmc-gan" for o in observers) or cfg.model == "generator" else None
    s = _signal_measurement(cfg)
    task = DetectionTask(signal=s, noise=cfg.noise_model(), prf_system=cfg.prf_system())
    done = skipped = 0
    for observer in observers:
        os.makedirs(os.path.join(out, "chains", observer), exist_ok=True)
        for hyp, case in _cases(cfg, args):
            data_path = _data_path(out, hyp, case)
            if not os.path.exists(data_path):
                raise IncompleteInputs(f"missing measurement {data_path}; run gen-data first")
            g = Measurement.load(data_path)
            for m in range(n_chains):
                path = _chain_path(out, observer, hyp, case, m)
                if os.path.exists(path) and not args.force:
                    skipped += 1
                    continue
                seed = _derive_seed(cfg.seed, 1, hyp, case, m)
                rec = _run_one_chain(cfg, observer, net, task, g, seed)
                _atomic_save(rec, path)
                done += 1
                print(
                    f"{observer} h{hyp} case {case} chain {m}: "
                    f"acceptance {rec.acceptance_rate:.3f}"
                )
    _write_manifest(out, cfg, {"command": "run-mcmc", "chains_run": done, "skipped": skipped})
    print(f"run-mcmc: ran {done} chains, skipped {skipped} existing")
    return EXIT_OK


def cmd_diagnose(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir
    observers = [o for o in cfg.observers if o != "ho"]
    os.makedirs(os.path.join(out, "reports"), exist_ok=True)
    n_chains = args.chains or cfg.n_chains
    if n_chains < 2:
        raise ConfigError("diagnose needs at least two chains per case")
    n_done = 0
    worst = 0.0
    for observer in observers:
        for hyp, case in _cases(cfg, args):
            traces = []
            for m in range(n_chains):
                path = _chain_path(out, observer, hyp, case, m)
                if not os.path.exists(path):
                    raise IncompleteInputs(f"missing chain {path}; run run-mcmc --chains {n_chains}")
                traces.append(ChainRecord.load(path).log_lambda)
            report = diagnostic_report(traces)
            worst = max(worst, report["final_psfr"])
            rpath = os.path.join(out, "reports", f"{observer}_h{hyp}_case{case:04d}.json")
            _atomic_call(lambda p, r=report: save_report(r, p), rpath)
            n_done += 1
    print(f"diagnose: {n_done} reports, worst final PSFR {worst:.4f}")
    return EXIT_OK


def _mcmc_scores(cfg, observer, out, n_chains):
    scores = {0: [], 1: []}
    missing = []
    for hyp, n in ((0, cfg.n0), (1, cfg.n1)):
        for case in range(n):
            traces = []
            for m in range(n_chains):
                path = _chain_path(out, observer, hyp, case, m)
                if not os.path.exists(path):
                    missing.append(f"h{hyp} case {case} chain {m}")
                    continue
                traces.append(ChainRecord.load(path))
            if missing:
                continue
            pooled = np.concatenate([r.post_burn_in() for r in traces])
            scores[hyp].append(estimate_log_likelihood_ratio(pooled))
    if missing:
        raise IncompleteInputs(
            f"{observer}: {len(missing)} chains missing, first few: " + "; ".join(missing[:5])
        )
    return ObserverScoreSet(scores[0], scores[1], observer=observer)


def _ho_scores(cfg, out, net):
    s = _signal_measurement(cfg)
    backgrounds = []
    for i in range(cfg.n_ho_samples):
        rng = _derive_rng(cfg.seed, 2, i)
        backgrounds.append(_background_measurement(cfg, rng, net).data)
    w = ho_template_from_samples(backgrounds, cfg.noise_sigma, s)
    scores = {0: [], 1: []}
    for hyp, n in ((0, cfg.n0), (1, cfg.n1)):
        for case in range(n):
            path = _data_path(out, hyp, case)
            if not os.path.exists(path):
                raise IncompleteInputs(f"missing measurement {path}; run gen-data first")
            scores[hyp].append(ho_test_statistic(w, Measurement.load(path)))
    return ObserverScoreSet(scores[0], scores[1], observer="ho")


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir
    n_chains = args.chains or cfg.n_chains
    os.makedirs(os.path.join(out, "results"), exist_ok=True)
    net = _load_net(cfg) if cfg.model == "generator" or "mcmc-gan" in cfg.observers else None
    summary = {"observers": []}
    print(f"{'observer':10s} {'AUC':>8s} {'SE':>8s}")
    for observer in cfg.observers:
        if observer == "ho":
            scores = _ho_scores(cfg, out, net)
        else:
            scores = _mcmc_scores(cfg, observer, out, n_chains)
        roc = empirical_roc(scores)
        _atomic_call(scores.to_csv, os.path.join(out, "results", f"scores_{observer}.csv"))
        _atomic_call(roc.to_csv, os.path.join(out, "results", f"roc_{observer}.csv"))
        summary["observers"].append({"name": observer, **roc.summary()})
        print(f"{observer:10s} {roc.auc:8.4f} {roc.auc_se:8.4f}")
    _atomic_call(
        lambda p: open(p, "w").write(json.dumps(summary, indent=2)),
        os.path.join(out, "results", "summary.json"),
    )
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir
    imgs = []
    for case in range(cfg.n0):
        path = _data_path(out, 0, case)
        if not os.path.exists(path):
            raise IncompleteInputs(f"missing measurement {path}; run gen-data first")
        m = Measurement.load(path)
        if m.layout != LAYOUT_REAL:
            raise ConfigError("spectrum needs real image-domain measurements")
        imgs.append(m.data.reshape(m.dims))
    spec = radial_power_spectrum(np.asarray(imgs))
    os.makedirs(os.path.join(out, "results"), exist_ok=True)
    path = os.path.join(out, "results", "spectrum.csv")
    _atomic_call(lambda p: spectra_to_csv(p, {"signal_absent": spec}), path)
    print(f"spectrum: {len(imgs)} images, {spec.size} radial bins -> {path}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    """Self-check of the latent sampler against a closed-form Gaussian case.

    For an affine generator b = Wz + c the marginal likelihood ratio has a
    closed form; the MCMC estimate must land within Monte Carlo error.
    """
    rng = np.random.default_rng(args.seed or 0)
    k, m, sigma = 4, 12, 1.0
    W = rng.normal(size=(m, k)) / np.sqrt(k)
    c = rng.normal(size=m)
    s = rng.normal(size=m) * 0.5
    net = make_linear_generator(W, c)
    W = net.layers[0].weights.astype(float)
    c = net.layers[0].bias.astype(float)
    g = c + W @ rng.standard_normal(k) + rng.normal(0.0, sigma, m)

    K = W @ W.T + sigma**2 * np.eye(m)
    def marginal_logpdf(x, mu):
        r = x - mu
        sign, logdet = np.linalg.slogdet(2.0 * np.pi * K)
        return -0.5 * (r @ np.linalg.solve(K, r) + logdet)
    truth = marginal_logpdf(g, c + s) - marginal_logpdf(g, c)

    from .chains import ChainConfig

    task = DetectionTask(
        signal=Measurement(data=s, layout=LAYOUT_REAL),
        noise=NoiseModel(sigma=sigma),
    )
    cfg = ChainConfig(n_iterations=60_000, burn_in=5_000, beta=0.4, seed=args.seed or 0)
    rec = run_latent_chain(task, net, SOMBinding(mode="image-domain"), g, cfg)
    est = estimate_log_likelihood_ratio(rec)
    err = abs(est - truth)
    ok = err < 0.15
    print(f"oracle-check: closed form {truth:+.4f}, mcmc {est:+.4f}, |err| {err:.4f} "
          f"-> {'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def _build_parser():
    ap = argparse.ArgumentParser(prog="iomcmc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="TOML or JSON experiment config")
            p.add_argument("--output-dir", default=None, help="override config output_dir")
        p.add_argument("--seed", type=int, default=None, help="override master seed")

    p = sub.add_parser("gen-data", help="simulate the measurement dataset")
    common(p)
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    p = sub.add_parser("run-mcmc", help="run chains for every configured MCMC observer")
    common(p)
    p.add_argument("--cases", default=None, help="case range a..b (inclusive)")
    p.add_argument("--chains", type=int, default=None, help="parallel chains per case")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("diagnose", help="PSFR convergence reports over parallel chains")
    common(p)
    p.add_argument("--cases", default=None)
    p.add_argument("--chains", type=int, default=None)

    p = sub.add_parser("evaluate", help="scores, ROC curves, and the AUC table")
    common(p)
    p.add_argument("--chains", type=int, default=None)

    p = sub.add_parser("spectrum", help="radial power spectrum of signal-absent data")
    common(p)

    p = sub.add_parser("oracle-check", help="sampler self-check against a closed form")
    common(p, needs_config=False)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            return cmd_oracle_check(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "seed": args.seed})
        if getattr(args, "output_dir", None):
            cfg = ExperimentConfig(**{**cfg.__dict__, "output_dir": args.output_dir})
        handler = {
            "gen-data": cmd_gen_data,
            "run-mcmc": cmd_run_mcmc,
            "diagnose": cmd_diagnose,
            "evaluate": cmd_evaluate,
            "spectrum": cmd_spectrum,
        }[args.command]
        return handler(cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IncompleteInputs as e:
        print(f"incomplete inputs: {e}", file=sys.stderr)
        return EXIT_INCOMPLETE


if __name__ == "__main__":
    sys.exit(main())
