"""Contraction certificates: matrix-inequality checks, metric constants, envelopes.

All matrix inequalities are certified by sampling plus eigenvalue checks on a
user-configurable grid; nothing is verified symbolically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .systems import LevySystemModel, LtvSystemModel, transition_matrix

__all__ = [
    "SamplingPlan",
    "ContractionCertificate",
    "TransitionEnvelope",
    "CheckReport",
    "StructuralFailure",
    "check_basic_contraction",
    "check_riccati_tv",
    "estimate_metric_constants",
    "fit_transition_envelope",
]

JACOBIAN_STEP = 1e-5   # scaled by (1 + ||x||)
METRIC_STEP = 1e-4


class StructuralFailure(ValueError):
    """Metric not symmetric/positive definite at a sample; distinct from a condition failure."""


@dataclass(frozen=True)
class SamplingPlan:
    """Grid of (t, x) samples: t_range crossed with a box in state space."""

    t_range: tuple[float, float]
    x_box: tuple[tuple[float, float], ...]
    points_per_axis: int = 21

    def t_samples(self) -> np.ndarray:
        lo, hi = self.t_range
        if lo == hi:
            return np.array([lo])
        return np.linspace(lo, hi, self.points_per_axis)

    def x_samples(self) -> np.ndarray:
        axes = [np.linspace(lo, hi, self.points_per_axis) if lo != hi else np.array([lo])
                for lo, hi in self.x_box]
        return np.array([p for p in itertools.product(*axes)])


@dataclass(frozen=True)
class ContractionCertificate:
    """A metric with its rate and the constants every bound formula consumes.

    For state-independent metrics m_prime = m_double_prime = 0.
    """

    metric: Callable[[float, np.ndarray], np.ndarray]
    alpha: float
    m_lower: float
    m_upper: float
    m_prime: float = 0.0
    m_double_prime: float = 0.0
    checked_domain: SamplingPlan | None = None

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not (0 < self.m_lower <= self.m_upper):
            raise ValueError("need 0 < m_lower <= m_upper")

    @property
    def condition_number(self) -> float:
        return self.m_upper / self.m_lower

    @staticmethod
    def constant(matrix: np.ndarray, alpha: float) -> "ContractionCertificate":
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        eig = np.linalg.eigvalsh(m)
        return ContractionCertificate(lambda t, x: m, alpha=alpha,
                                      m_lower=float(eig[0]), m_upper=float(eig[-1]))


@dataclass(frozen=True)
class TransitionEnvelope:
    """Exponential envelope ||Phi(t,tau)|| <= kappa exp(-beta (t - tau))."""

    kappa: float
    beta: float
    margin: float
    fit_domain: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kappa <= 0 or self.beta <= 0:
            raise ValueError("kappa and beta must be > 0")

    def value(self, tau: float, t: float) -> float:
        return self.kappa * np.exp(-self.beta * (t - tau))


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    worst_slack: float
    worst_point: tuple
    tol: float
    alpha1: float | None = None
    alpha2: float | None = None
    n_samples: int = 0

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        extra = ""
        if self.alpha1 is not None:
            extra = f", alpha1={self.alpha1:.6g}, alpha2={self.alpha2:.6g}"
        return (f"{status}: worst slack {self.worst_slack:.6g} at {self.worst_point} "
                f"(tol={self.tol:.3g}, {self.n_samples} samples{extra})")

    def as_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "worst_slack": self.worst_slack,
            "worst_point": list(self.worst_point),
            "tol": self.tol,
            "n_samples": self.n_samples,
        }
        if self.alpha1 is not None:
            out["alpha1"] = self.alpha1
            out["alpha2"] = self.alpha2
        return out


def _require_symmetric_pd(m: np.ndarray, where: tuple) -> np.ndarray:
    if not np.allclose(m, m.T, atol=1e-9 * max(1.0, float(np.abs(m).max()))):
        raise StructuralFailure(f"metric not symmetric at {where}")
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    if eig[0] <= 0:
        raise StructuralFailure(f"metric not positive definite at {where} "
                                f"(min eigenvalue {eig[0]:.6g})")
    return 0.5 * (m + m.T)


def _jacobian(drift, t: float, x: np.ndarray) -> np.ndarray:
    n = x.size
    h = JACOBIAN_STEP * (1.0 + np.linalg.norm(x))
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (np.asarray(drift(t, x + e)) - np.asarray(drift(t, x - e))) / (2 * h)
    return jac


def _metric_time_derivative(metric, t, x, h=METRIC_STEP) -> np.ndarray:
    return (np.asarray(metric(t + h, x)) - np.asarray(metric(t - h, x))) / (2 * h)


def _metric_state_gradient(metric, t, x, h=METRIC_STEP) -> np.ndarray:
    """d M / d x_j stacked along the first axis, shape (n, n, n)."""
    n = x.size
    grads = np.empty((n,) + np.asarray(metric(t, x)).shape)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        grads[j] = (np.asarray(metric(t, x + e)) - np.asarray(metric(t, x - e))) / (2 * h)
    return grads


def check_basic_contraction(
    model: LevySystemModel | LtvSystemModel,
    cert: ContractionCertificate,
    samples: SamplingPlan,
    tol: float = 1e-8,
    total_derivative: bool = True,
) -> CheckReport:
    """Check F^T M + M F + Mdot + 2 alpha M <= tol*I over the sampling plan.

    Mdot is the total derivative along the flow (time partial plus state
    partials contracted with the drift); set total_derivative=False for the
    time-partial-only variant.
    """
    drift = model.drift
    worst = -np.inf
    worst_point: tuple = ()
    count = 0
    for t in samples.t_samples():
        for x in samples.x_samples():
            m = _require_symmetric_pd(np.asarray(cert.metric(t, x), dtype=float), (t, tuple(x)))
            f_jac = _jacobian(drift, t, x)
            mdot = _metric_time_derivative(cert.metric, t, x)
            if total_derivative:
                grads = _metric_state_gradient(cert.metric, t, x)
                fx = np.asarray(drift(t, x))
                mdot = mdot + np.tensordot(fx, grads, axes=(0, 0))
            g = f_jac.T @ m + m @ f_jac + mdot + 2.0 * cert.alpha * m
            slack = float(np.linalg.eigvalsh(0.5 * (g + g.T))[-1])
            count += 1
            if slack > worst:
                worst = slack
                worst_point = (float(t), tuple(float(v) for v in x))
    return CheckReport(worst <= tol, worst, worst_point, tol, n_samples=count)


def check_riccati_tv(
    model: LtvSystemModel,
    p_matrix: Callable[[float], np.ndarray],
    alpha: float,
    time_samples: np.ndarray,
    tol: float = 1e-8,
) -> CheckReport:
    """Check dP/dt + P A + A^T P + 2 alpha P <= tol*I on the time samples.

    Also reports alpha1 = min_t lambda_min P and alpha2 = max_t lambda_max P.
    """
    worst = -np.inf
    worst_point: tuple = ()
    a1, a2 = np.inf, -np.inf
    for t in np.asarray(time_samples, dtype=float):
        p = _require_symmetric_pd(np.asarray(p_matrix(t), dtype=float), (float(t),))
        eig = np.linalg.eigvalsh(p)
        a1 = min(a1, float(eig[0]))
        a2 = max(a2, float(eig[-1]))
        pdot = (np.asarray(p_matrix(t + METRIC_STEP)) -
                np.asarray(p_matrix(t - METRIC_STEP))) / (2 * METRIC_STEP)
        a = np.asarray(model.a_matrix(t), dtype=float)
        g = pdot + p @ a + a.T @ p + 2.0 * alpha * p
        slack = float(np.linalg.eigvalsh(0.5 * (g + g.T))[-1])
        if slack > worst:
            worst = slack
            worst_point = (float(t),)
    return CheckReport(worst <= tol, worst, worst_point, tol, alpha1=a1, alpha2=a2,
                       n_samples=len(time_samples))


def estimate_metric_constants(
    metric: Callable[[float, np.ndarray], np.ndarray],
    plan: SamplingPlan,
    h: float = METRIC_STEP,
) -> tuple[float, float, float, float]:
    """Estimate (m_lower, m_upper, m_prime, m_double_prime) on the grid.

    m_prime is the largest euclidean norm over entries (i, j) of the state
    gradient of M_ij; m_double_prime the largest spectral norm of the state
    Hessian of M_ij. Both are finite-difference estimates at resolution h.
    """
    m_lo, m_hi = np.inf, -np.inf
    mp, mpp = 0.0, 0.0
    for t in plan.t_samples():
        for x in plan.x_samples():
            m = np.asarray(metric(t, x), dtype=float)
            eig = np.linalg.eigvalsh(0.5 * (m + m.T))
            m_lo = min(m_lo, float(eig[0]))
            m_hi = max(m_hi, float(eig[-1]))
            n = x.size
            grads = _metric_state_gradient(metric, t, x, h)  # (n, n, n)
            # gradient vector of each entry: grads[:, i, j]
            mp = max(mp, float(np.max(np.linalg.norm(grads, axis=0))))
            hess = np.empty((n, n) + m.shape)
            for a in range(n):
                ea = np.zeros(n)
                ea[a] = h
                hess[a, a] = (np.asarray(metric(t, x + ea)) - 2 * m
                              + np.asarray(metric(t, x - ea))) / h**2
                for b in range(a + 1, n):
                    eb = np.zeros(n)
                    eb[b] = h
                    cross = (np.asarray(metric(t, x + ea + eb))
                             - np.asarray(metric(t, x + ea - eb))
                             - np.asarray(metric(t, x - ea + eb))
                             + np.asarray(metric(t, x - ea - eb))) / (4 * h**2)
                    hess[a, b] = cross
                    hess[b, a] = cross
            for i in range(m.shape[0]):
                for j in range(m.shape[1]):
                    mpp = max(mpp, float(np.linalg.norm(hess[:, :, i, j], 2)))
    # suppress finite-difference round-off for exactly state-independent metrics
    floor = 64.0 * np.finfo(float).eps * max(1.0, abs(m_hi)) / h
    if mp < floor:
        mp = 0.0
    if mpp < floor / h:
        mpp = 0.0
    return float(m_lo), float(m_hi), mp, mpp


def fit_transition_envelope(
    model: LtvSystemModel,
    tau_t_samples: "np.ndarray | list[tuple[float, float]]",
    strategy: str = "optimize",
    kappa: float | None = None,
    beta: float | None = None,
    beta_grid: np.ndarray | None = None,
    tol: float = 1e-8,
) -> TransitionEnvelope:
    """Fit or verify ||Phi(t, tau)|| <= kappa exp(-beta (t - tau)) on samples.

    strategy="given" verifies the supplied pair and fails on any violation;
    strategy="optimize" scans beta on a log grid, sets kappa(beta) to the
    smallest feasible value, and minimizes kappa * int_0^H exp(-beta r) dr,
    which is the combination that tightens the jump error ball downstream.
    """
    pairs = [(float(a), float(b)) for a, b in np.atleast_2d(np.asarray(tau_t_samples, float))]
    for tau, t in pairs:
        if tau > t:
            raise ValueError(f"need tau <= t in every sample, got ({tau}, {t})")
    norms = np.array([np.linalg.norm(transition_matrix(model, tau, t, tol), 2)
                      for tau, t in pairs])
    gaps = np.array([t - tau for tau, t in pairs])

    if strategy == "given":
        if kappa is None or beta is None:
            raise ValueError("strategy='given' requires kappa and beta")
        slack = kappa * np.exp(-beta * gaps) - norms
        margin = float(np.min(slack))
        if margin < -1e-9 * max(1.0, float(np.max(norms))):
            worst = pairs[int(np.argmin(slack))]
            raise ValueError(
                f"envelope kappa={kappa:.6g}, beta={beta:.6g} violated at "
                f"(tau, t)={worst}: ||Phi||={norms[int(np.argmin(slack))]:.6g}")
        return TransitionEnvelope(kappa, beta, max(margin, 0.0), tuple(pairs))

    if strategy != "optimize":
        raise ValueError(f"unknown strategy: {strategy!r}")
    horizon = float(np.max(gaps)) if np.max(gaps) > 0 else 1.0
    if beta_grid is None:
        beta_grid = np.geomspace(1e-2, 1e2, 241)
    best = None
    for b in beta_grid:
        kap = float(np.max(norms * np.exp(b * gaps)))
        kap = max(kap, 1e-12)
        score = kap * (1.0 - np.exp(-b * horizon)) / b
        if best is None or score < best[0]:
            best = (score, kap, float(b))
    _, kap, b = best
    margin = float(np.min(kap * np.exp(-b * gaps) - norms))
    return TransitionEnvelope(kap, b, max(margin, 0.0), tuple(pairs))
