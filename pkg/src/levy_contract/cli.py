"""Experiment configuration, orchestration, and CSV/report emission.

Pipeline per experiment: certify -> bound -> simulate -> audit. Artifacts are
paths.csv, bounds.csv, audit.csv, and report.txt in the output directory;
every CSV row carries (experiment, seed, version) for replay. Exit status is
0 on success, 2 on configuration or certification failure, 3 on any hard
bound violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BoundParams,
    PSI_STRATEGIES,
    TIME_LAWS,
    PsiSpec,
    jump_cost_h,
    levy_bound,
    psi_k,
    shot_bound,
    shot_ltv_bound,
    white_bound,
)
from .contraction import (
    ContractionCertificate,
    check_basic_contraction,
    check_riccati_tv,
    fit_transition_envelope,
)
from .noise import MarkLaw, NoiseBounds, RandomStream, constant_mark
from .presets import PRESET_NAMES, PresetInstance, build_preset
from .simulate import IntegratorConfig, run_ensemble
from .systems import LtvSystemModel
from .verify import AuditReport, audit_bound

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "run_experiment",
           "sweep", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3

STRATEGY_CHOICES = ("quadrature", "mc") + PSI_STRATEGIES[2:]
CORRUPT_CHOICES = ("none", "alpha_x2", "eta_x4")
FORM_CHOICES = ("per_jump", "window_start")
SWEEP_PARAMS = ("lambda", "eta", "alpha", "condition_number")


class ConfigError(ValueError):
    """Carries every schema violation found, not just the first."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 12345
    out: str = "out"
    n_paths: int = 1000
    k_max: int = 3
    dt: float = 0.01
    horizon: float = 1.0
    eval_points: int = 10
    strategy: str = "quadrature"
    time_law: str = "uniform_order_statistics"
    form: str = "per_jump"
    mark: str = "constant"
    corrupt: str = "none"
    paths_dump: int = 10
    threads: int = 1
    gamma: float | None = None
    eta: float | None = None
    lam: float | None = None
    alpha: float | None = None
    condition_number: float | None = None

    def canonical(self) -> str:
        # the output directory is not semantic (replays into different
        # directories must produce identical rows) and unset optional
        # overrides are omitted so the text re-parses as-is
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "out" or value is None:
                continue
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines)

    def version(self) -> str:
        digest = hashlib.sha256(self.canonical().encode()).hexdigest()[:8]
        return f"{__version__}+{digest}"


_OPTIONAL_FLOATS = ("gamma", "eta", "lam", "alpha", "condition_number")

_SCHEMA: dict[str, tuple] = {
    "experiment": (str, PRESET_NAMES),
    "seed": (int, None),
    "out": (str, None),
    "n_paths": (int, (1, None)),
    "k_max": (int, (0, None)),
    "dt": (float, (0.0, None)),
    "horizon": (float, (0.0, None)),
    "eval_points": (int, (2, None)),
    "strategy": (str, STRATEGY_CHOICES),
    "time_law": (str, TIME_LAWS),
    "form": (str, FORM_CHOICES),
    "mark": (str, ("constant", "uniform_ball", "truncated_gaussian")),
    "corrupt": (str, CORRUPT_CHOICES),
    "paths_dump": (int, (0, None)),
    "threads": (int, (1, None)),
    "gamma": (float, (0.0, None)),
    "eta": (float, (0.0, None)),
    "lam": (float, (0.0, None)),
    "alpha": (float, (0.0, None)),
    "condition_number": (float, (0.0, None)),
}


def _coerce(key: str, raw: str, problems: list[str]):
    typ, constraint = _SCHEMA[key]
    try:
        value = typ(raw)
    except ValueError:
        problems.append(f"{key}: cannot parse {raw!r} as {typ.__name__}")
        return None
    if isinstance(constraint, tuple) and constraint and isinstance(constraint[0], str):
        if value not in constraint:
            problems.append(f"{key}: {value!r} not in allowed values "
                            f"{{{', '.join(constraint)}}}")
            return None
    elif isinstance(constraint, tuple) and len(constraint) == 2:
        lo, hi = constraint
        strict_low = typ is float and key in ("dt", "horizon", "lam", "alpha",
                                              "condition_number")
        if lo is not None and (value <= lo if strict_low else value < lo):
            problems.append(f"{key}: {value} must be {'>' if strict_low else '>='} {lo}")
            return None
        if hi is not None and value > hi:
            problems.append(f"{key}: {value} must be <= {hi}")
            return None
    return value


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse flat key = value lines; collect every problem before raising."""
    problems: list[str] = []
    values: dict = {}
    saw_experiment = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _SCHEMA:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key == "experiment":
            saw_experiment = True
        coerced = _coerce(key, raw, problems)
        if coerced is not None:
            values[key] = coerced
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _SCHEMA:
            problems.append(f"override: unknown key {key!r}")
            continue
        if key == "experiment":
            saw_experiment = True
        coerced = _coerce(key, str(val), problems)
        if coerced is not None:
            values[key] = coerced
    if "experiment" not in values and not saw_experiment:
        problems.append("experiment: required key is missing")
    if not problems and "experiment" not in values:
        problems.append("experiment: required key is missing")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list],
               provenance: tuple[str, int, str]) -> None:
    experiment, seed, version = provenance
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header + ["experiment", "seed", "version"])
        for row in rows:
            writer.writerow([_fmt(v) for v in row] + [experiment, str(seed), version])


def _scale_mark_law(law: MarkLaw, factor: float) -> MarkLaw:
    if law.kind == "constant":
        vec = tuple(factor * v for v in law.vector)
        return constant_mark(vec, factor * law.eta)
    return replace(law, eta=factor * law.eta,
                   sigma=law.sigma * factor if law.kind == "truncated_gaussian" else law.sigma)


def _scale_model_jumps(inst: PresetInstance, factor: float) -> None:
    model = inst.model
    noise = NoiseBounds(model.noise.gamma, model.noise.eta * factor, model.noise.lam)
    if isinstance(model, LtvSystemModel):
        signal = model.jump_signal
        scaled = lambda t: _scale_mark_law(signal(t), factor)  # noqa: E731
        inst.model = replace(model, jump_signal=scaled, noise=noise)
    else:
        law = model.jump_law
        scaled = lambda t, x: _scale_mark_law(law(t, x), factor)  # noqa: E731
        inst.model = replace(model, jump_law=scaled, noise=noise)


@dataclass
class PipelineResult:
    exit_status: int
    cert_summary: str
    audit: AuditReport | None
    bounds_rows: list[list]
    audit_rows: list[list]
    envelope: tuple[float, float] | None
    riccati: tuple[float, float, float] | None
    notes: list[str]
    cert_json: str = "{}"


def _certify_and_bound(cfg: ExperimentConfig, inst: PresetInstance,
                       bound_alpha: float, bound_eta: float,
                       time_grid: np.ndarray) -> PipelineResult:
    window = (0.0, cfg.horizon)
    strategy = "monte_carlo" if cfg.strategy == "mc" else cfg.strategy
    bound_strategy = strategy if strategy in ("quadrature", "monte_carlo") else "quadrature"
    notes: list[str] = []
    if bound_strategy != strategy:
        notes.append(f"audit bounds use quadrature; {strategy} applies to psi rows only")
    model = inst.model
    lam = model.noise.lam
    gamma = model.noise.gamma
    stream = RandomStream(cfg.seed, 1 << 20)

    envelope = None
    riccati = None
    if inst.is_ltv:
        t_samples = np.linspace(0.0, cfg.horizon, 41)
        report = check_riccati_tv(model, inst.p_matrix, bound_alpha, t_samples,
                                  tol=1e-7)
        cert_ok = report.passed
        taus = np.linspace(0.0, cfg.horizon, 9)
        pairs = [(a, b) for a in taus for b in taus if a <= b]
        env = fit_transition_envelope(model, pairs, "optimize")
        envelope = (env.kappa, env.beta)
        riccati = (bound_alpha, report.alpha1, report.alpha2)
        cert_summary = "riccati " + report.summary() + \
            f"; envelope kappa={env.kappa:.6g} beta={env.beta:.6g}"
    else:
        cert = inst.metric_cert
        cert = ContractionCertificate(cert.metric, bound_alpha, cert.m_lower,
                                      cert.m_upper, cert.m_prime,
                                      cert.m_double_prime, inst.basic_plan)
        report = check_basic_contraction(model, cert, inst.basic_plan, tol=1e-7)
        cert_ok = report.passed
        cert_summary = "basic contraction " + report.summary()

    bounds_rows: list[list] = []
    bound_by_k: dict[int, BoundParams] = {}
    single_bound: BoundParams | None = None
    s0 = 0.0

    def emit(bound: BoundParams, k, label_strategy: str) -> None:
        for t in time_grid:
            kappa = bound.kappa(s0, float(t))
            bounds_rows.append([bound.kind, k, s0, float(t), bound.beta, kappa,
                                bound.rhs(s0, float(t), 0.0), label_strategy,
                                bound.std_err])

    kind = inst.kind
    if cfg.corrupt == "alpha_x2":
        notes.append("negative control: certificate rate doubled for the bound")
    if cfg.corrupt == "eta_x4":
        notes.append("negative control: simulated jumps are 4x the bound's eta")

    if kind == "white":
        single_bound = white_bound(
            ContractionCertificate(inst.metric_cert.metric, bound_alpha,
                                   inst.metric_cert.m_lower, inst.metric_cert.m_upper,
                                   inst.metric_cert.m_prime,
                                   inst.metric_cert.m_double_prime),
            gamma, *window)
        emit(single_bound, "", bound_strategy)
    else:
        kappa_env, beta_env = (envelope if envelope is not None else (1.0, bound_alpha))
        alpha2 = riccati[2] if riccati is not None else inst.metric_cert.m_upper
        for k in range(cfg.k_max + 1):
            spec = PsiSpec(alpha2, bound_eta, kappa_env, beta_env, lam, 0.0, k,
                           window, cfg.time_law)
            if kind == "shot_ltv":
                bound = shot_ltv_bound(riccati, fit_env := _env_obj(kappa_env, beta_env),
                                       spec, bound_eta, *window,
                                       form=cfg.form, strategy=bound_strategy,
                                       stream=stream)
                emit(bound, k, f"{bound_strategy}+{cfg.form}")
                # the alternate error-ball form is reported side by side at
                # the window end only (it is a diagnostic, not the audit bound)
                other = "window_start" if cfg.form == "per_jump" else "per_jump"
                alt = shot_ltv_bound(riccati, fit_env, spec, bound_eta, *window,
                                     form=other, strategy=bound_strategy,
                                     stream=stream)
                t_end = float(window[1])
                bounds_rows.append([alt.kind, k, s0, t_end, alt.beta,
                                    alt.kappa(s0, t_end),
                                    alt.rhs(s0, t_end, 0.0),
                                    f"{bound_strategy}+{other}", alt.std_err])
            else:
                h = jump_cost_h(spec, bound_strategy, stream=stream)
                cert = ContractionCertificate(
                    inst.metric_cert.metric, bound_alpha, inst.metric_cert.m_lower,
                    inst.metric_cert.m_upper, inst.metric_cert.m_prime,
                    inst.metric_cert.m_double_prime)
                if kind == "shot":
                    bound = shot_bound(cert, h, k, *window)
                else:
                    bound = levy_bound(cert, h, gamma, k, *window)
                emit(bound, k, bound_strategy)
            bound_by_k[k] = bound
        # psi strategy-comparison rows (one per strategy and k)
        for k in range(1, cfg.k_max + 1):
            spec = PsiSpec(alpha2, bound_eta, kappa_env, beta_env, lam, 0.0, k,
                           window, cfg.time_law)
            for strat in PSI_STRATEGIES:
                val = psi_k(spec, strat, n_mc=20_000, stream=RandomStream(cfg.seed, (2 << 20) + k))
                bounds_rows.append(["psi", k, s0, cfg.horizon, beta_env, val.value,
                                    None, strat, val.std_err])

    status = EXIT_OK if cert_ok else EXIT_CONFIG
    result = PipelineResult(status, cert_summary, None, bounds_rows, [],
                            envelope, riccati, notes,
                            cert_json=json.dumps(report.as_dict(), sort_keys=True))
    result.bound_by_k = bound_by_k  # type: ignore[attr-defined]
    result.single_bound = single_bound  # type: ignore[attr-defined]
    return result


def _env_obj(kappa: float, beta: float):
    from .contraction import TransitionEnvelope
    return TransitionEnvelope(kappa, beta, 0.0)


def run_experiment(cfg: ExperimentConfig, quiet: bool = False) -> int:
    """Execute certify -> bound -> simulate -> audit and write all artifacts."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    provenance = (cfg.experiment, cfg.seed, cfg.version())

    try:
        inst = build_preset(cfg.experiment, cfg.gamma, cfg.eta, cfg.lam, cfg.alpha,
                            cfg.mark, cfg.condition_number)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    bound_alpha = inst.alpha
    bound_eta = inst.model.noise.eta
    if cfg.corrupt == "alpha_x2":
        bound_alpha = 2.0 * inst.alpha
    if cfg.corrupt == "eta_x4":
        _scale_model_jumps(inst, 4.0)  # bound keeps the original eta

    time_grid = np.linspace(0.0, cfg.horizon, cfg.eval_points + 1)[1:]
    pipe = _certify_and_bound(cfg, inst, bound_alpha, bound_eta, time_grid)
    cert_failed = pipe.exit_status == EXIT_CONFIG

    icfg = IntegratorConfig(cfg.dt, (0.0, cfg.horizon))
    audit = None
    if not cert_failed or cfg.corrupt != "none":
        if inst.kind == "white":
            audit = audit_bound(inst.model, pipe.single_bound, icfg, inst.init_law,
                                cfg.n_paths, time_grid, seed=cfg.seed,
                                threads=cfg.threads)
        else:
            audit = audit_bound(inst.model, pipe.bound_by_k, icfg, inst.init_law,
                                cfg.n_paths, time_grid,
                                k_range=range(cfg.k_max + 1), seed=cfg.seed,
                                threads=cfg.threads)

    audit_rows = []
    if audit is not None:
        for c in audit.cells:
            audit_rows.append([c.k, c.t, c.n_paths, c.mse, c.ci[0], c.ci[1],
                               c.bound_rhs, c.margin])

    # path dumps from a small dedicated unconditional ensemble
    path_rows = []
    if cfg.paths_dump > 0:
        dump = run_ensemble(inst.model, inst.init_law, icfg, cfg.paths_dump,
                            "unconditional", seed=cfg.seed + 777)
        for pid, (x, _) in enumerate(dump.pairs):
            jump_set = set(np.round(x.jumps.arrival_times, 12))
            for g, state in zip(x.grid, x.states):
                row = [pid, float(g)] + [float(v) for v in state]
                row.append(1 if round(float(g), 12) in jump_set else 0)
                path_rows.append(row)

    # per-stratum summary at the horizon end
    ensemble_rows = []
    if audit is not None:
        t_end = float(time_grid[-1])
        for c in audit.cells:
            if c.t == t_end:
                ensemble_rows.append([c.k, c.n_paths, c.mse, c.ci[0], c.ci[1]])

    state_cols = [f"state_{i}" for i in range(inst.model.dim)]
    _write_csv(outdir / "paths.csv", ["path_id", "time", *state_cols, "is_jump"],
               path_rows, provenance)
    _write_csv(outdir / "bounds.csv",
               ["kind", "k", "s", "t", "beta", "kappa", "rhs_total", "strategy",
                "std_err"], pipe.bounds_rows, provenance)
    _write_csv(outdir / "audit.csv",
               ["k", "t", "n", "mse", "ci_low", "ci_high", "bound_rhs", "margin"],
               audit_rows, provenance)
    _write_csv(outdir / "ensemble.csv",
               ["k", "count", "E_k_mse", "ci_low", "ci_high"],
               ensemble_rows, provenance)
    (outdir / "config.txt").write_text(cfg.canonical() + "\n")

    violations = audit.violations if audit is not None else []
    if cert_failed:
        status = EXIT_CONFIG
    elif violations:
        status = EXIT_VIOLATION
    else:
        status = EXIT_OK

    lines = [
        f"levy-contract experiment report: {cfg.experiment}",
        f"version: {cfg.version()}  seed: {cfg.seed}",
        "parameters: repository-defined reference values (see README)",
        "",
        f"certification: {pipe.cert_summary}",
        f"certification detail: {pipe.cert_json}",
    ]
    if pipe.riccati is not None:
        a, a1, a2 = pipe.riccati
        lines.append(f"riccati triple: alpha={a:.6g} alpha1={a1:.6g} alpha2={a2:.6g}")
    if pipe.envelope is not None:
        lines.append(f"transition envelope: kappa={pipe.envelope[0]:.6g} "
                     f"beta={pipe.envelope[1]:.6g}")
    for note in pipe.notes:
        lines.append(f"note: {note}")
    lines.append("")
    if audit is not None:
        lines.append(audit.summary())
    else:
        lines.append("audit skipped: certification failed")
    lines.append("")
    lines.append(f"exit status: {status}")
    report_text = "\n".join(lines) + "\n"
    (outdir / "report.txt").write_text(report_text)
    if not quiet:
        print(report_text, end="")
    return status


def sweep(cfg: ExperimentConfig, parameter: str, values: list[float],
          quiet: bool = False) -> int:
    """Re-run the pipeline per parameter value; one audit summary row each."""
    if parameter not in SWEEP_PARAMS:
        raise ConfigError([f"sweep parameter must be one of {SWEEP_PARAMS}, "
                           f"got {parameter!r}"])
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    worst = EXIT_OK
    k_ref = min(1, cfg.k_max)
    for value in values:
        field = {"lambda": "lam", "eta": "eta", "alpha": "alpha",
                 "condition_number": "condition_number"}[parameter]
        sub = replace(cfg, out=str(outdir / f"{parameter}_{value:g}"),
                      **{field: float(value)})
        status = run_experiment(sub, quiet=True)
        worst = max(worst, status)
        bounds_csv = Path(sub.out) / "bounds.csv"
        kappa_end = rhs_end = beta = None
        with bounds_csv.open() as fh:
            for row in csv.DictReader(fh):
                if row["kind"] == "psi":
                    continue
                if row["k"] in ("", str(k_ref)) and float(row["t"]) == cfg.horizon:
                    if row["strategy"].endswith("window_start"):
                        continue
                    beta = float(row["beta"])
                    kappa_end = float(row["kappa"])
                    rhs_end = float(row["rhs_total"])
        audit_csv = Path(sub.out) / "audit.csv"
        margins = []
        with audit_csv.open() as fh:
            for row in csv.DictReader(fh):
                if row["margin"]:
                    margins.append(float(row["margin"]))
        lam_eff = float(value) if parameter == "lambda" else (cfg.lam or 1.0)
        rows.append([parameter, float(value), k_ref, beta, kappa_end, rhs_end,
                     lam_eff * cfg.horizon,
                     min(margins) if margins else None, status])
    _write_csv(outdir / "sweep.csv",
               ["parameter", "value", "k", "beta", "kappa", "rhs_total",
                "expected_jumps", "min_margin", "exit_status"],
               rows, (cfg.experiment, cfg.seed, cfg.version()))
    if not quiet:
        print(f"sweep of {parameter} over {values}: worst exit status {worst}")
    return worst


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="levy-contract",
        description="Certify, bound, simulate, and audit jump-noise stability bounds.")
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--experiment", choices=PRESET_NAMES)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument("--paths", type=int, dest="n_paths",
                        help="number of sample paths per stratum")
    parser.add_argument("--strategy", choices=STRATEGY_CHOICES)
    parser.add_argument("--sweep", metavar="PARAM=v1,v2,...",
                        help=f"sweep one of {', '.join(SWEEP_PARAMS)}")
    args = parser.parse_args(argv)

    text = args.config.read_text() if args.config else ""
    overrides = {"experiment": args.experiment, "seed": args.seed, "out": args.out,
                 "n_paths": args.n_paths, "strategy": args.strategy}
    try:
        cfg = parse_config(text, overrides)
        if args.sweep:
            param, _, raw = args.sweep.partition("=")
            if not raw:
                raise ConfigError([f"--sweep needs PARAM=v1,v2,..., got {args.sweep!r}"])
            values = [float(v) for v in raw.split(",") if v]
            return sweep(cfg, param.strip(), values)
        return run_experiment(cfg)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
