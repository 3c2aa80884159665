"""Empirical verification: conditional MSE estimation and bound audits.

A bound "violation" means the empirical mean exceeds the theoretical
right-hand side by more than three standard errors; anything smaller is
indistinguishable from Monte Carlo noise (several bounds are exactly tight
on the built-in systems, so margins near zero are expected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundParams
from .contraction import ContractionCertificate
from .simulate import InitLaw, IntegratorConfig, PairedEnsemble, integrate, run_ensemble
from .systems import LevySystemModel, LtvSystemModel, nominal_of

__all__ = [
    "ConditionalMseEstimate",
    "AuditReport",
    "InsufficientStratumError",
    "estimate_conditional_mse",
    "audit_bound",
    "audit_ensemble",
    "check_incremental_decay",
]

STRATUM_FLOOR = 200
BOOTSTRAP_RESAMPLES = 1000
VIOLATION_SES = 3.0


class InsufficientStratumError(RuntimeError):
    """No (or too few) paths in the requested jump-count stratum."""


@dataclass(frozen=True)
class ConditionalMseEstimate:
    """Empirical E_k ||y(t) - x(t)||^2 with its CI and the matching bound."""

    k: int
    t: float
    n_paths: int
    mse: float
    ci: tuple[float, float]
    std_err: float
    bound_rhs: float = math.nan
    low_confidence: bool = False

    @property
    def margin(self) -> float:
        return self.bound_rhs - self.ci[1]

    @property
    def is_violation(self) -> bool:
        if math.isnan(self.bound_rhs):
            return False
        return (self.mse - self.bound_rhs) > VIOLATION_SES * self.std_err


def _bootstrap_ci(values: np.ndarray, level: float = 0.95) -> tuple[float, float]:
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence((0xB007, values.size))))
    idx = rng.integers(0, values.size, size=(BOOTSTRAP_RESAMPLES, values.size))
    means = values[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(lo), float(hi)


def _mean_ci(values: np.ndarray) -> tuple[float, tuple[float, float], float]:
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    if values.size < 1000:
        ci = _bootstrap_ci(values)
        ci = (min(ci[0], mean), max(ci[1], mean))
    else:
        ci = (mean - 1.96 * se, mean + 1.96 * se)
    return mean, ci, se


def estimate_conditional_mse(
    ensemble: PairedEnsemble,
    k: int,
    eval_times: np.ndarray,
    floor: int = STRATUM_FLOOR,
) -> list[ConditionalMseEstimate]:
    """Per eval time, the mean squared error over paths with exactly k jumps
    in the ensemble's window.

    Conditional-mode ensembles must already match k; unconditional ensembles
    are stratified post hoc. An empty stratum raises InsufficientStratumError
    rather than returning a silent zero.
    """
    eval_times = np.atleast_1d(np.asarray(eval_times, dtype=float))
    if ensemble.mode == "conditional":
        if ensemble.k != k:
            raise ValueError(f"ensemble is conditional on k={ensemble.k}, not k={k}")
        mask = np.ones(ensemble.count, dtype=bool)
    else:
        mask = ensemble.jump_counts() == k
    n = int(mask.sum())
    if n == 0:
        raise InsufficientStratumError(
            f"no paths with exactly {k} jumps in window {ensemble.window} "
            f"out of {ensemble.count}")
    sq = ensemble.squared_errors_at(eval_times)[mask]
    out = []
    for j, t in enumerate(eval_times):
        mean, ci, se = _mean_ci(sq[:, j])
        out.append(ConditionalMseEstimate(k, float(t), n, mean, ci, se,
                                          low_confidence=n < floor))
    return out


@dataclass
class AuditReport:
    """Per-(k, t) comparison grid with full replay provenance."""

    cells: list[ConditionalMseEstimate]
    model_name: str
    bound_kind: str
    strategy: str
    seed: int
    n_paths: int
    window: tuple[float, float]

    @property
    def violations(self) -> list[ConditionalMseEstimate]:
        return [c for c in self.cells if c.is_violation]

    @property
    def passed(self) -> bool:
        return not self.violations

    def worst_margin(self) -> float:
        return min((c.margin for c in self.cells), default=math.inf)

    def summary(self) -> str:
        lines = [
            f"audit of {self.bound_kind} bound on {self.model_name!r}: "
            f"{len(self.cells)} cells, {len(self.violations)} violations, "
            f"worst margin {self.worst_margin():.6g}",
            f"  n_paths={self.n_paths} per stratum, seed={self.seed}, "
            f"window={self.window}, strategy={self.strategy}",
        ]
        for c in self.violations:
            ses = (c.mse - c.bound_rhs) / c.std_err if c.std_err > 0 else math.inf
            lines.append(
                f"  VIOLATION k={c.k} t={c.t:.4g}: mse={c.mse:.6g} "
                f"exceeds rhs={c.bound_rhs:.6g} by {ses:.2f} SEs")
        return "\n".join(lines)


def _with_bound(cell: ConditionalMseEstimate, rhs: float) -> ConditionalMseEstimate:
    return ConditionalMseEstimate(cell.k, cell.t, cell.n_paths, cell.mse, cell.ci,
                                  cell.std_err, rhs, cell.low_confidence)


def audit_ensemble(
    ensemble: PairedEnsemble,
    bound: BoundParams,
    k: int,
    time_grid: np.ndarray,
) -> list[ConditionalMseEstimate]:
    """Attach bound right-hand sides to conditional estimates on one ensemble."""
    s = ensemble.window[0]
    init_msq = float(np.mean(ensemble.initial_errors() ** 2))
    cells = estimate_conditional_mse(ensemble, k, time_grid)
    return [_with_bound(c, bound.rhs(s, c.t, init_msq)) for c in cells]


def audit_bound(
    model: LevySystemModel | LtvSystemModel,
    bounds: "BoundParams | dict[int, BoundParams]",
    cfg: IntegratorConfig,
    init_law: InitLaw,
    n_paths: int,
    time_grid: np.ndarray,
    k_range: "range | list[int] | None" = None,
    seed: int = 0,
    threads: int | None = None,
) -> AuditReport:
    """Simulate conditional ensembles and compare each (k, t) cell to its bound.

    White-noise bounds audit the unconditional mean squared error
    (k_range is ignored); every other kind needs one BoundParams per k.
    """
    time_grid = np.atleast_1d(np.asarray(time_grid, dtype=float))
    single = isinstance(bounds, BoundParams)
    kind = bounds.kind if single else next(iter(bounds.values())).kind

    ltv = isinstance(model, LtvSystemModel)
    has_jumps = model.has_jumps
    if kind == "white":
        if has_jumps:
            raise ValueError("white bound audited against a model with jumps")
    elif kind in ("shot", "shot_ltv"):
        if not has_jumps or (not ltv and model.has_diffusion):
            raise ValueError(f"{kind} bound needs a jump-only model")
        if kind == "shot_ltv" and not ltv:
            raise ValueError("shot_ltv bound needs an LTV model")
    elif kind == "levy":
        if not has_jumps:
            raise ValueError("levy bound needs a model with jumps")
    else:
        raise ValueError(f"unknown bound kind: {kind!r}")

    cells: list[ConditionalMseEstimate] = []
    if kind == "white":
        ens = run_ensemble(model, init_law, cfg, n_paths, "unconditional",
                           seed=seed, threads=threads)
        init_msq = float(np.mean(ens.initial_errors() ** 2))
        bound = bounds if single else bounds[0]
        sq = ens.squared_errors_at(time_grid)
        s = ens.window[0]
        for j, t in enumerate(time_grid):
            mean, ci, se = _mean_ci(sq[:, j])
            cells.append(ConditionalMseEstimate(
                0, float(t), n_paths, mean, ci, se, bound.rhs(s, float(t), init_msq)))
    else:
        if k_range is None:
            raise ValueError(f"{kind} audit requires k_range")
        for k in k_range:
            bound = bounds if single else bounds[k]
            if bound.k is not None and bound.k != k:
                raise ValueError(f"bound for k={bound.k} used in stratum k={k}")
            ens = run_ensemble(model, init_law, cfg, n_paths, "conditional",
                               k=k, seed=seed + k, threads=threads)
            cells.extend(audit_ensemble(ens, bound, k, time_grid))

    strategy = bounds.strategy if single else next(iter(bounds.values())).strategy
    return AuditReport(cells, model.name, kind, strategy, seed, n_paths, cfg.horizon)


@dataclass(frozen=True)
class DecayReport:
    passed: bool
    worst_ratio: float
    worst_time: float
    envelope: tuple[float, float]  # (sqrt(m_upper/m_lower), alpha)

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"{status}: worst gap/envelope ratio {self.worst_ratio:.6g} "
                f"at t={self.worst_time:.4g}")


def check_incremental_decay(
    model: LevySystemModel | LtvSystemModel,
    cert: ContractionCertificate,
    ic_pairs: "list[tuple[np.ndarray, np.ndarray]]",
    cfg: IntegratorConfig,
    tol: float = 1e-2,
) -> DecayReport:
    """Verify ||x2(t) - x1(t)|| <= sqrt(m_upper/m_lower) ||x2,0 - x1,0||
    exp(-alpha (t - s)) (1 + tol) on simulated nominal pairs."""
    nominal = nominal_of(model.as_levy() if isinstance(model, LtvSystemModel) else model)
    kappa = math.sqrt(cert.m_upper / cert.m_lower)
    s = cfg.horizon[0]
    worst = -math.inf
    worst_t = s
    for x1_0, x2_0 in ic_pairs:
        p1 = integrate(nominal, np.asarray(x1_0, float), cfg, np.random.default_rng(0))
        p2 = integrate(nominal, np.asarray(x2_0, float), cfg, np.random.default_rng(0))
        gap0 = np.linalg.norm(np.asarray(x2_0, float) - np.asarray(x1_0, float))
        if gap0 == 0:
            continue
        gaps = np.linalg.norm(p2.states - p1.states, axis=1)
        envelope = kappa * gap0 * np.exp(-cert.alpha * (p1.grid - s))
        ratios = gaps / envelope
        i = int(np.argmax(ratios))
        if ratios[i] > worst:
            worst = float(ratios[i])
            worst_t = float(p1.grid[i])
    return DecayReport(worst <= 1.0 + tol, worst, worst_t, (kappa, cert.alpha))
