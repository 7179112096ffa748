"""Experiment runners: synthetic tracking, two-link arm, and bound asymptotics.

Each runner validates its config, runs named stages (failures surface as
:class:`StageError`), writes CSV/JSON/SVG artifacts that begin with a manifest
block, and returns the in-memory results together with pass/fail checks.
CSV and certificate files are deterministic for a fixed config; wall-clock
timings go to ``summary.json`` only.
"""
from __future__ import annotations

import contextlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plots
from .bounds import (
    AsymptoticTable,
    ErrorCertificate,
    asymptotic_harness,
    certify,
    certify_multi,
    write_certificate,
)
from .config import ExperimentConfig
from .control import (
    ControllerGains,
    GPModel,
    SimulationTrace,
    TwoLinkArm,
    containment,
    lyapunov_check,
    simulate,
    sinusoid,
    synthetic_drift,
    synthetic_plant,
    tracking_policy,
)
from .domain import Domain
from .errors import GPCertError, StageError
from .gp import Dataset, fit, optimize_hyperparameters, read_dataset_csv, write_dataset_csv
from .kernels import SEARDKernel, kernel_constants
from .lipschitz import probabilistic_lipschitz

log = logging.getLogger(__name__)

TRACE_SCHEMA = "gpcert.trace/v1"
BOUND_GRID_SCHEMA = "gpcert.bound-grid/v1"
ASYMPTOTICS_SCHEMA = "gpcert.asymptotics/v1"
ROBOT_LIPSCHITZ_SAMPLES = 2000
ROBOT_LIPSCHITZ_MARGIN = 1.1


@dataclass
class ExperimentResult:
    name: str
    out_dir: Path | None
    checks: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    posteriors: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    constants: list = field(default_factory=list)
    lipschitz: object = None
    trace: SimulationTrace | None = None
    table: AsymptoticTable | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failed_checks(self) -> list:
        return [k for k, v in self.checks.items() if not v]


class _Stages:
    """Names the running stage and records its wall-clock time."""

    def __init__(self):
        self.timings = {}

    @contextlib.contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        log.info("stage %s", name)
        try:
            yield
        except StageError:
            raise
        except (GPCertError, ValueError, ArithmeticError, OSError, np.linalg.LinAlgError) as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = time.perf_counter() - t0


# -- file helpers ----------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _manifest(config: ExperimentConfig, provenance, schema=None) -> dict:
    m = config.manifest(provenance)
    if schema:
        m["schema"] = schema
    m["constants"] = config.model_dump(mode="json", by_alias=True, exclude={"output_dir"})
    return m


def write_csv(path, header, rows, manifest):
    """CSV with a ``# manifest:`` comment line, a header row, and repr-formatted floats."""
    with open(path, "w", newline="") as fh:
        fh.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """Inverse of :func:`write_csv`: returns ``(manifest, header, array)``."""
    manifest = None
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    header = None
    for line in lines:
        if line.startswith("# manifest: "):
            manifest = json.loads(line[len("# manifest: ") :])
        elif line.startswith("#") or not line:
            continue
        elif header is None:
            header = line.split(",")
        else:
            body.append([float(v) for v in line.split(",")])
    return manifest, header, np.array(body, dtype=float).reshape(-1, len(header or []))


def trace_columns(n_state, n_dof):
    suffix = (lambda name, j: name) if n_dof == 1 else (lambda name, j: f"{name}_{j + 1}")
    cols = ["t"] + [f"x_{i + 1}" for i in range(n_state)] + [f"u_{j + 1}" for j in range(n_dof)]
    for name in ("err_norm", "r", "bound_radius"):
        cols += [suffix(name, j) for j in range(n_dof)]
    return cols


def write_trace_csv(path, trace: SimulationTrace, manifest):
    """Trace export: t, state..., control..., err_norm, r, bound_radius (per DoF)."""
    n_state, n_dof = trace.states.shape[1], trace.n_dof
    data = np.column_stack(
        [trace.times, trace.states, trace.controls, trace.error_norms(), trace.filtered_state, trace.bound_radius]
    )
    m = dict(manifest, schema=TRACE_SCHEMA)
    write_csv(path, trace_columns(n_state, n_dof), data, m)


def _write_json(path, manifest, payload):
    with open(path, "w") as fh:
        json.dump({"manifest": manifest, **payload}, fh, indent=2)
        fh.write("\n")


# -- shared stages ---------------------------------------------------------


def _domain(box) -> Domain:
    return Domain(np.array(box.lower, float), np.array(box.upper, float))


def training_inputs(config: ExperimentConfig) -> np.ndarray:
    g = config.training
    return _domain(g).grid(g.counts if len(g.counts) > 1 else g.counts[0])


def synthetic_dataset(config: ExperimentConfig) -> Dataset:
    """Noisy observations of the synthetic drift on the training grid."""
    X = training_inputs(config)
    rng = np.random.default_rng(config.seed)
    y = synthetic_drift(X) + math.sqrt(config.noise_variance) * rng.standard_normal(X.shape[0])
    return Dataset(X, y, config.noise_variance)


def robot_datasets(config: ExperimentConfig, arm: TwoLinkArm) -> list[Dataset]:
    """Per-joint observations of qdd - u under random excitation, plus Gaussian noise."""
    X = training_inputs(config)
    u_rng = np.random.default_rng([config.seed, 2])
    U = u_rng.standard_normal((X.shape[0], 2))
    qdd = np.array([arm.dynamics(x, u)[1::2] for x, u in zip(X, U)])
    rng = np.random.default_rng(config.seed)
    sn = math.sqrt(config.noise_variance)
    return [Dataset(X, qdd[:, j] - U[:, j] + sn * rng.standard_normal(X.shape[0]), config.noise_variance) for j in range(2)]


def resolve_kernel(config: ExperimentConfig, dataset: Dataset):
    """Configured kernel, or the marginal-likelihood optimum started from it."""
    kc = config.kernel
    if kc is None:
        raise ValueError("config has no kernel section")
    init = SEARDKernel(kc.signal_variance, np.array(kc.lengthscales, float))
    if init.dimension != dataset.dimension:
        raise ValueError(f"kernel has {init.dimension} lengthscales but data has dimension {dataset.dimension}")
    if not kc.fit:
        return init, {"kernel": "configured"}
    res = optimize_hyperparameters(dataset, init, seed=config.seed, n_starts=kc.n_starts)
    note = f"marginal-likelihood fit (L-BFGS-B, {kc.n_starts} starts, seed {config.seed})"
    if not res.improved:
        note += "; no start improved on the initial values"
    return res.kernel, {"kernel": note, "log_marginal_likelihood": res.log_marginal_likelihood}


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.data_csv:
        return read_dataset_csv(config.data_csv, config.noise_variance)
    if config.training is None:
        raise ValueError("config needs either data_csv or a training grid")
    if config.experiment == "robot":
        raise ValueError("robot data has one output per joint; use run_robot")
    return synthetic_dataset(config)


def _provenance_list(prov: dict) -> list:
    return [f"{k}: {v}" for k, v in prov.items()]


def _start_index(trace, transient_time):
    if transient_time is None:
        return None
    return int(np.searchsorted(trace.times, transient_time - 1e-12))


# -- single-output pipeline ------------------------------------------------


def fit_and_certify(config: ExperimentConfig, stage=None):
    """Data, hyperparameters, kernel constants, L_f and the certificate for a one-output model."""
    stage = stage or _Stages()
    prov = {}
    with stage("data"):
        dataset = load_dataset(config)
        if config.domain is None:
            raise ValueError("config has no domain")
        domain = _domain(config.domain)
    with stage("hyperparameters"):
        kernel, kprov = resolve_kernel(config, dataset)
        prov.update({k: v for k, v in kprov.items() if k == "kernel"})
    with stage("kernel-constants"):
        constants = kernel_constants(kernel, domain)
    with stage("lipschitz"):
        if config.f_lipschitz is not None:
            lip = None
            lf, lf_source = config.f_lipschitz, "configured"
        else:
            lip = probabilistic_lipschitz(kernel, constants, domain, config.delta_l)
            lf = lip.value
            lf_source = f"probabilistic sample-path bound (delta_l={config.delta_l})"
    with stage("certificate"):
        posterior = fit(dataset, kernel)
        cert = certify(posterior, constants, domain, config.tau, config.delta, lf, lf_source)
    prov.update(cert.provenance)
    return dataset, posterior, constants, lip, cert, prov, stage


def bound_grid(cert: ErrorCertificate, truth, points_per_dim: int):
    """Mean, std, eta and |f - mean| on a regular grid over the certificate's domain."""
    G = cert.domain.grid(points_per_dim)
    mu, var = cert.posterior.predict_many(G)
    sd = np.sqrt(var)
    eta = cert.sqrt_beta * sd + cert.gamma
    f = np.asarray(truth(G), float) if truth is not None else np.full(G.shape[0], np.nan)
    return G, f, mu, sd, eta, np.abs(f - mu)


def _write_bound_grid(path, G, f, mu, sd, eta, err, manifest):
    d = G.shape[1]
    header = [f"x_{i + 1}" for i in range(d)] + ["f", "mean", "std", "eta", "abs_error"]
    write_csv(path, header, np.column_stack([G, f, mu, sd, eta, err]), dict(manifest, schema=BOUND_GRID_SCHEMA))


def _prepare_out(out_dir):
    if out_dir is None:
        return None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_synthetic(config: ExperimentConfig, out_dir=None, *, plots_enabled=True) -> ExperimentResult:
    """Fit, certify and simulate the two-state synthetic tracking problem."""
    if config.experiment != "synthetic":
        raise ValueError("run_synthetic needs experiment: synthetic")
    if config.gains is None or config.reference is None or config.initial_state is None:
        raise ValueError("config needs gains, reference and initial_state")
    out = _prepare_out(out_dir)
    t_start = time.perf_counter()
    dataset, post, constants, lip, cert, prov, stage = fit_and_certify(config)
    gains = ControllerGains(config.gains.k_c, config.gains.lam)
    ref = sinusoid(config.reference.amplitude, config.reference.frequency, config.reference.phase, config.reference.offset)
    model = GPModel((post,))
    with stage("bound-grid"):
        grid = bound_grid(cert, synthetic_drift, config.bound_grid_points)
        bound_ratio = float(np.max(grid[5] / grid[4]))
    with stage("simulation"):
        trace = simulate(
            synthetic_plant(),
            tracking_policy(model, ref, gains),
            ref,
            (0.0, config.integrator.t_end),
            config.integrator.dt,
            config.initial_state,
            gains,
            [cert],
        )
    with stage("checks"):
        cont = containment(trace, start_index=_start_index(trace, config.transient_time))
        checked, violations = lyapunov_check(trace, [cert], lambda x: np.atleast_1d(synthetic_drift(x)), model, gains)
    checks = {
        "bound_holds_on_grid": bound_ratio <= 1.0,
        "tracking_contained": cont.contained,
        "lyapunov_decrease": violations == 0,
    }
    ratio = trace.error_norms()[:, 0] / trace.bound_radius[:, 0]
    summary = {
        "kernel": post.kernel.to_dict(),
        "f_lipschitz": cert.f_lipschitz,
        "beta": cert.beta,
        "gamma": cert.gamma,
        "max_error_to_eta_on_grid": bound_ratio,
        "containment": {
            "entry_time": cont.entry_time,
            "violations_after_entry": cont.violations_after_entry,
            "samples_after_entry": cont.samples_after_entry,
            "max_error_to_radius_after_entry": float(np.max(ratio[cont.entry_index :])) if cont.entry_index is not None else None,
        },
        "lyapunov": {"samples_checked": checked, "violations": violations},
    }
    result = ExperimentResult("synthetic", out, checks, summary, posteriors=[post], certificates=[cert],
                              constants=[constants], lipschitz=lip, trace=trace)
    if out is not None:
        with stage("output"):
            manifest = _manifest(config, _provenance_list(prov))
            _emit_common(result, config, manifest, [dataset])
            _write_bound_grid(out / "bound_grid.csv", *grid, manifest)
            result.files.append("bound_grid.csv")
            if plots_enabled:
                n = config.bound_grid_points
                d0, d1 = cert.domain.lower, cert.domain.upper
                plots.heatmap(
                    out / "bound_surface.svg",
                    grid[4].reshape(n, n),
                    ((d0[0], d1[0]), (d0[1], d1[1])),
                    title="certified bound eta(x) with closed-loop path",
                    xlabel="x_1",
                    ylabel="x_2",
                    overlay=(trace.states[:, 0], trace.states[:, 1]),
                    manifest=manifest,
                )
                _error_plot(out / "error_vs_bound.svg", trace, manifest)
                result.files += ["bound_surface.svg", "error_vs_bound.svg"]
    _finish(result, stage, t_start, config)
    return result


def _error_plot(path, trace, manifest, dof_names=None):
    series = []
    en = trace.error_norms()
    for j in range(trace.n_dof):
        name = dof_names[j] if dof_names else ""
        series.append({"x": trace.times, "y": en[:, j], "label": f"||e|| {name}".strip()})
        series.append({"x": trace.times, "y": trace.bound_radius[:, j], "label": f"radius {name}".strip(), "dashed": True})
    plots.line_plot(path, series, title="tracking error and certified radius", xlabel="t", ylabel="norm",
                    log_y=True, manifest=manifest)


def _emit_common(result, config, manifest, datasets):
    out = result.out_dir
    write_certificate(out / "certificate.json", result.certificates, manifest)
    write_trace_csv(out / "trace.csv", result.trace, manifest)
    result.files += ["certificate.json", "trace.csv"]
    for j, ds in enumerate(datasets):
        name = "training_data.csv" if len(datasets) == 1 else f"training_data_{j + 1}.csv"
        write_dataset_csv(ds, out / name, ["manifest: " + json.dumps(manifest, sort_keys=True)])
        result.files.append(name)
    if result.lipschitz is not None:
        _write_json(out / "lipschitz.json", manifest, {"lipschitz": result.lipschitz.to_dict()})
        result.files.append("lipschitz.json")


def _finish(result, stage, t_start, config):
    result.summary["checks"] = dict(result.checks)
    result.summary["timings_s"] = {k: round(v, 3) for k, v in stage.timings.items()}
    result.summary["wall_clock_s"] = round(time.perf_counter() - t_start, 3)
    if result.out_dir is not None:
        doc = {"manifest": _manifest(config, []), **result.summary}
        with open(result.out_dir / "summary.json", "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        result.files.append("summary.json")


# -- robot -----------------------------------------------------------------


def sampled_drift_lipschitz(arm: TwoLinkArm, domain: Domain, n_samples, seed, step=1e-6) -> np.ndarray:
    """Largest Jacobian row norm of the arm drift over random points (central differences)."""
    rng = np.random.default_rng([seed, 1])
    P = domain.sample(n_samples, rng)
    best = np.zeros(2)
    eye = np.eye(domain.dimension)
    for x in P:
        J = np.array([(arm.drift(x + step * e) - arm.drift(x - step * e)) / (2 * step) for e in eye]).T
        best = np.maximum(best, np.linalg.norm(J, axis=1))
    return best


def certify_and_simulate_robot(config: ExperimentConfig, stage=None):
    """One GP per joint acceleration, per-joint certificates with delta / 2, closed-loop trace."""
    stage = stage or _Stages()
    arm = TwoLinkArm(gravity=config.gravity)
    with stage("data"):
        if config.domain is None or config.training is None:
            raise ValueError("robot config needs domain and training grid")
        domain = _domain(config.domain)
        datasets = robot_datasets(config, arm)
    posteriors, consts, prov = [], [], {}
    with stage("hyperparameters"):
        kernels = []
        for ds in datasets:
            k, kprov = resolve_kernel(config, ds)
            kernels.append(k)
        prov["kernel"] = kprov["kernel"]
    with stage("kernel-constants"):
        consts = [kernel_constants(k, domain) for k in kernels]
    with stage("lipschitz"):
        if config.f_lipschitz is not None:
            lf = [config.f_lipschitz] * 2
            lf_source = "configured"
        else:
            lf = list(ROBOT_LIPSCHITZ_MARGIN * sampled_drift_lipschitz(arm, domain, ROBOT_LIPSCHITZ_SAMPLES, config.seed))
            lf_source = (
                f"known dynamics: max Jacobian row norm over {ROBOT_LIPSCHITZ_SAMPLES} sampled states "
                f"x {ROBOT_LIPSCHITZ_MARGIN}"
            )
    with stage("certificate"):
        posteriors = [fit(ds, k) for ds, k in zip(datasets, kernels)]
        certs = certify_multi(posteriors, consts, domain, config.tau, config.delta, lf, lf_source)
    prov.update(certs[0].provenance)
    prov["delta_split"] = f"union bound over 2 joints, {config.delta / 2} each"
    gains = ControllerGains(config.gains.k_c, config.gains.lam)
    rc = config.reference
    ref = sinusoid(rc.amplitude, rc.frequency, rc.phase, rc.offset)
    model = GPModel(tuple(posteriors))
    with stage("simulation"):
        trace = simulate(arm.plant(), tracking_policy(model, ref, gains), ref, (0.0, config.integrator.t_end),
                         config.integrator.dt, config.initial_state, gains, certs)
    return arm, datasets, posteriors, consts, certs, trace, prov, stage


def task_space_report(arm: TwoLinkArm, trace: SimulationTrace, start_index: int):
    """End-effector error against the forward-kinematics image of the joint-space ball."""
    q = trace.states[:, 0::2]
    qd = trace.references[:, 0::2]
    ee_err = np.linalg.norm(arm.forward_kinematics(q) - arm.forward_kinematics(qd), axis=1)
    radius = arm.task_space_radius(trace.bound_radius)
    after = slice(start_index, None)
    violations = int(np.count_nonzero(~(ee_err[after] <= radius[after])))
    return ee_err, radius, violations


def run_robot(config: ExperimentConfig, out_dir=None, *, plots_enabled=True) -> ExperimentResult:
    """Two-link arm: per-joint certificates, tracking simulation, joint and task-space containment."""
    if config.experiment != "robot":
        raise ValueError("run_robot needs experiment: robot")
    if config.gains is None or config.reference is None or config.initial_state is None:
        raise ValueError("config needs gains, reference and initial_state")
    out = _prepare_out(out_dir)
    t_start = time.perf_counter()
    arm, datasets, posts, consts, certs, trace, prov, stage = certify_and_simulate_robot(config)
    with stage("checks"):
        start = _start_index(trace, config.transient_time)
        conts = [containment(trace, dof=j, start_index=start) for j in range(2)]
        entered = [c.entry_index for c in conts if c.entry_index is not None]
        task_start = max(entered) if len(entered) == 2 else len(trace.times)
        if start is not None:
            task_start = start
        ee_err, ee_rad, task_viol = task_space_report(arm, trace, task_start)
    checks = {f"joint_{j + 1}_contained": c.contained for j, c in enumerate(conts)}
    checks["task_space_contained"] = task_start < len(trace.times) and task_viol == 0
    summary = {
        "kernels": [p.kernel.to_dict() for p in posts],
        "f_lipschitz": [c.f_lipschitz for c in certs],
        "delta_per_joint": [c.delta for c in certs],
        "beta": [c.beta for c in certs],
        "gamma": [c.gamma for c in certs],
        "containment": [
            {"entry_time": c.entry_time, "violations_after_entry": c.violations_after_entry,
             "samples_after_entry": c.samples_after_entry}
            for c in conts
        ],
        "task_space": {"start_time": float(trace.times[min(task_start, len(trace.times) - 1)]),
                       "violations": task_viol, "max_error": float(ee_err.max())},
    }
    result = ExperimentResult("robot", out, checks, summary, posteriors=posts, certificates=certs,
                              constants=consts, trace=trace)
    if out is not None:
        with stage("output"):
            manifest = _manifest(config, _provenance_list(prov))
            _emit_common(result, config, manifest, datasets)
            write_csv(out / "task_space.csv", ["t", "ee_error", "task_radius"],
                      np.column_stack([trace.times, ee_err, ee_rad]), dict(manifest, schema="gpcert.task-space/v1"))
            result.files.append("task_space.csv")
            if plots_enabled:
                _error_plot(out / "joint_errors.svg", trace, manifest, ["q1", "q2"])
                series = []
                for j in range(2):
                    series.append({"x": trace.times, "y": trace.states[:, 2 * j], "label": f"q{j + 1}"})
                    series.append({"x": trace.times, "y": trace.references[:, 2 * j], "label": f"q{j + 1} desired", "dashed": True})
                plots.line_plot(out / "joints.svg", series, title="joint angles", xlabel="t", ylabel="rad", manifest=manifest)
                plots.line_plot(
                    out / "task_space.svg",
                    [{"x": trace.times, "y": ee_err, "label": "end-effector error"},
                     {"x": trace.times, "y": ee_rad, "label": "certified radius", "dashed": True}],
                    title="task-space error and certified radius", xlabel="t", ylabel="distance", log_y=True,
                    manifest=manifest,
                )
                result.files += ["joint_errors.svg", "joints.svg", "task_space.svg"]
    _finish(result, stage, t_start, config)
    return result


# -- asymptotics -----------------------------------------------------------


TRUTHS = {
    "sin-product": lambda X: np.sin(2.0 * np.asarray(X)[..., 0]) * np.cos(3.0 * np.asarray(X)[..., 1]),
    "zero": lambda X: np.zeros(np.asarray(X).shape[0]),
}


def run_asymptotics(config: ExperimentConfig, out_dir=None, *, plots_enabled=True) -> ExperimentResult:
    """Bound and realized sup error along a growing data schedule."""
    a = config.asymptotics
    if a is None:
        raise ValueError("config has no asymptotics section")
    if not a.schedule:
        raise ValueError("schedule must be non-empty")
    stage = _Stages()
    t_start = time.perf_counter()
    domain = _domain(a.domain)
    kernel = SEARDKernel(a.signal_variance, np.array(a.lengthscales, float))
    with stage("harness"):
        table = asymptotic_harness(
            kernel, domain, TRUTHS[a.truth], a.schedule, config.delta, config.seed,
            noise_variance=a.noise_variance, f_bar=a.f_bar, f_lipschitz=a.f_lipschitz, tau0=a.tau0,
            eval_per_dim=a.eval_per_dim, eval_cap=a.eval_cap, dense_cap=a.dense_cap,
        )
    bound = table.column("bound")
    checks = {
        "bound_non_increasing": bool(np.all(np.diff(bound[1:]) <= 0)),
        "sup_error_below_bound": bool(np.all(table.column("sup_error") <= bound)),
    }
    summary = {"slope_log_bound_vs_loglog_n": table.slope_loglog, "eval_points": table.eval_points}
    out = _prepare_out(out_dir)
    result = ExperimentResult("asymptotics", out, checks, summary, table=table)
    if out is not None:
        with stage("output"):
            manifest = _manifest(config, [
                f"truth: {a.truth}", "tau(N): tau0 / N^2", "mean_lipschitz: data-independent growth bound"
                if a.noise_variance > 0 else "mean_lipschitz: L_k sqrt(N) ||alpha||",
            ], ASYMPTOTICS_SCHEMA)
            cols = ["n", "tau", "sup_error", "bound", "beta_n", "gamma_n", "max_sigma", "mean_lipschitz"]
            header = ["N", "tau", "sup_error", "bound", "beta_N", "gamma_N", "max_sigma", "mean_lipschitz"]
            rows = [[getattr(r, c) for c in cols] for r in table.rows]
            write_csv(out / "asymptotics.csv", header, rows, manifest)
            result.files.append("asymptotics.csv")
            if plots_enabled:
                n = table.column("n")
                plots.line_plot(
                    out / "asymptotics.svg",
                    [{"x": np.log10(n), "y": bound, "label": "bound"},
                     {"x": np.log10(n), "y": table.column("sup_error"), "label": "sup error"}],
                    title="uniform bound versus data size", xlabel="log10 N", ylabel="error", log_y=True,
                    manifest=manifest,
                )
                result.files.append("asymptotics.svg")
    _finish(result, stage, t_start, config)
    return result
