"""Command-line entry point.

Exit codes: 0 when every requested artifact was produced and every check
passed, 1 when a check failed, 3 when a stage (or the config) failed.
Argument errors exit with argparse's code 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .bounds import write_certificate
from .config import (
    ExperimentConfig,
    asymptotics_defaults,
    load_config,
    robot_defaults,
    synthetic_defaults,
)
from .errors import StageError
from .experiments import (
    _manifest,
    _provenance_list,
    _Stages,
    _write_bound_grid,
    _write_json,
    bound_grid,
    fit_and_certify,
    load_dataset,
    resolve_kernel,
    run_asymptotics,
    run_robot,
    run_synthetic,
)
from .control import synthetic_drift
from .domain import Domain
from .kernels import SEARDKernel, kernel_constants
from .lipschitz import probabilistic_lipschitz

EXIT_OK, EXIT_CHECK_FAILED, EXIT_STAGE_FAILED = 0, 1, 3

REPRO = {
    "repro-5.1": "synthetic",
    "repro-synthetic": "synthetic",
    "repro-5.2": "robot",
    "repro-robot": "robot",
}


def _with_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    data = config.model_dump(by_alias=True)
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        data["output_dir"] = args.out
    return ExperimentConfig.model_validate(data)


def _config(args, default=None) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif default is not None:
        cfg = default()
    else:
        raise ValueError(f"'{args.command}' needs --config")
    return _with_overrides(cfg, args)


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fit(args):
    cfg = _config(args)
    stage = _Stages()
    with stage("data"):
        ds = load_dataset(cfg)
    with stage("hyperparameters"):
        kernel, prov = resolve_kernel(cfg, ds)
    out = _out(cfg)
    manifest = _manifest(cfg, _provenance_list({"kernel": prov["kernel"]}))
    payload = {"kernel": kernel.to_dict(), "noise_variance": ds.noise_variance, "n_train": ds.size}
    if "log_marginal_likelihood" in prov:
        payload["log_marginal_likelihood"] = prov["log_marginal_likelihood"]
    _write_json(out / "kernel.json", manifest, payload)
    print(json.dumps(payload["kernel"]))
    return {}


def cmd_certify(args):
    cfg = _config(args)
    *_, cert, prov, stage = fit_and_certify(cfg)
    out = _out(cfg)
    manifest = _manifest(cfg, _provenance_list(prov))
    write_certificate(out / "certificate.json", cert, manifest)
    truth = synthetic_drift if (cfg.experiment == "synthetic" and not cfg.data_csv) else None
    with stage("bound-grid"):
        grid = bound_grid(cert, truth, cfg.bound_grid_points)
    _write_bound_grid(out / "bound_grid.csv", *grid, manifest)
    print(f"beta={cert.beta:.6g} gamma={cert.gamma:.6g} f_lipschitz={cert.f_lipschitz:.6g}")
    if truth is None:
        return {}
    return {"bound_holds_on_grid": bool(np.all(grid[5] <= grid[4]))}


def cmd_lipschitz(args):
    cfg = _config(args)
    stage = _Stages()
    with stage("hyperparameters"):
        if cfg.kernel is None:
            raise ValueError("config has no kernel section")
        if cfg.kernel.fit:
            kernel, _ = resolve_kernel(cfg, load_dataset(cfg))
        else:
            kernel = SEARDKernel(cfg.kernel.signal_variance, np.array(cfg.kernel.lengthscales, float))
    with stage("lipschitz"):
        if cfg.domain is None:
            raise ValueError("config has no domain")
        domain = Domain(np.array(cfg.domain.lower, float), np.array(cfg.domain.upper, float))
        est = probabilistic_lipschitz(kernel, kernel_constants(kernel, domain), domain, cfg.delta_l)
    out = _out(cfg)
    _write_json(out / "lipschitz.json", _manifest(cfg, ["f_lipschitz: probabilistic sample-path bound"]),
                {"kernel": kernel.to_dict(), "lipschitz": est.to_dict()})
    print(f"L_f={est.value:.6g} (delta_l={cfg.delta_l})")
    return {}


def _report(result):
    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if result.out_dir is not None:
        print(f"wrote {len(result.files)} files to {result.out_dir}")
    return result.checks


def cmd_simulate(args):
    cfg = _config(args)
    runner = run_robot if cfg.experiment == "robot" else run_synthetic
    return _report(runner(cfg, cfg.output_dir, plots_enabled=not args.no_plots))


def cmd_asymptotics(args):
    cfg = _config(args, asymptotics_defaults)
    return _report(run_asymptotics(cfg, cfg.output_dir, plots_enabled=not args.no_plots))


def cmd_repro(args):
    kind = REPRO[args.command]
    cfg = _with_overrides(synthetic_defaults() if kind == "synthetic" else robot_defaults(), args)
    runner = run_synthetic if kind == "synthetic" else run_robot
    return _report(runner(cfg, cfg.output_dir, plots_enabled=not args.no_plots))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gpcert {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="YAML or JSON experiment config")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--no-plots", action="store_true", help="skip SVG output")

    for name, fn, help_ in [
        ("fit", cmd_fit, "fit kernel hyperparameters by marginal likelihood"),
        ("certify", cmd_certify, "compute the uniform error certificate"),
        ("lipschitz", cmd_lipschitz, "probabilistic Lipschitz constant of the prior"),
        ("simulate", cmd_simulate, "certify and simulate closed-loop tracking"),
        ("asymptotics", cmd_asymptotics, "bound versus data size"),
    ]:
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.set_defaults(func=fn)
    for name, kind in REPRO.items():
        sp = sub.add_parser(name, help=f"built-in {kind} experiment (seed and output overrides only)")
        common(sp, config=False)
        sp.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        checks = args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILED
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: stage 'config' failed: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILED
    failed = [k for k, ok in (checks or {}).items() if not ok]
    if failed:
        print(f"error: check failed: {failed[0]}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
