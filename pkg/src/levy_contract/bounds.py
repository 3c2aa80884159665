"""Right-hand sides of the mean-square stability bounds.

Covers the jump-count probabilities, the white/shot/combined-noise rate and
error-ball parameters, the jump-interaction expectation psi_k under two
arrival-time laws, and the comparison-lemma utility.

Two arrival-time laws are supported throughout and reported side by side:

  uniform_order_statistics -- the conditional law of a Poisson process given
                              exactly k jumps in the window (k sorted uniforms)
  gamma_unconditional      -- the i-th arrival treated as Gamma(i, lam) with
                              independent interarrivals, ignoring the window
                              conditioning

The LTV jump error ball is evaluated in two forms. The default, per_jump,
discounts each jump's cost from its own arrival time
(sum_i E[exp(-rate (t - T_i)) cost_i]); this is the form that provably
dominates conditional mean-squared error and is used by all audits. The
window_start form discounts the k * alpha2 * eta^2 term from the window start
instead; it is retained for comparison only, since it can undercount
late-window jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .contraction import ContractionCertificate, TransitionEnvelope
from .noise import RandomStream

__all__ = [
    "BoundParams",
    "HFunction",
    "PsiSpec",
    "PsiValue",
    "NoiseDominatesError",
    "QuadratureError",
    "poisson_prob",
    "poisson_truncation",
    "white_bound",
    "shot_bound",
    "levy_bound",
    "psi_k",
    "jump_cost_kappa",
    "jump_cost_h",
    "shot_ltv_bound",
    "comparison_rhs",
    "PSI_STRATEGIES",
    "TIME_LAWS",
]

QUAD_ABS_TOL = 1e-9
QUAD_REL_TOL = 1e-7
PSI_STRATEGIES = ("quadrature", "monte_carlo", "loose_first_term",
                  "loose_max_nng", "loose_sum_exp")
TIME_LAWS = ("uniform_order_statistics", "gamma_unconditional")


class NoiseDominatesError(ValueError):
    """The white-noise correction wipes out the contraction rate (beta_w <= 0)."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def _quad(fn, a: float, b: float) -> float:
    if a >= b:
        return 0.0
    val, err = quad(fn, a, b, epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=200)
    if err > max(QUAD_ABS_TOL * 100, abs(val) * QUAD_REL_TOL * 100):
        raise QuadratureError(f"quadrature residual {err:.3g} for value {val:.6g}")
    return val


def poisson_prob(lam: float, s: float, t: float, k: int) -> float:
    """P(exactly k jumps in [s, t]) for a rate-lam Poisson process."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if t < s:
        raise ValueError("need s <= t")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    delta = t - s
    if delta == 0:
        return 1.0 if k == 0 else 0.0
    mean = lam * delta
    return math.exp(-mean + k * math.log(mean) - gammaln(k + 1))


def poisson_truncation(lam: float, delta: float) -> int:
    """Smallest documented K with sum_{k<=K} p_k within 1e-10 of 1."""
    mean = lam * delta
    return int(math.ceil(mean + 10.0 * math.sqrt(mean) + 10.0))


@dataclass(frozen=True)
class BoundParams:
    """One theorem's (rate, error-ball) pair plus everything rhs() needs.

    kappa_fn(s, t) evaluates the error-ball term on sub-windows of the
    window the bound was built for. kind is one of
    {white, shot, levy, shot_ltv}.
    """

    kind: str
    beta: float
    kappa_fn: Callable[[float, float], float]
    m_lower: float
    k: int | None = None
    strategy: str = ""
    std_err: float | None = None
    form: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.m_lower <= 0:
            raise ValueError("m_lower must be > 0")

    def kappa(self, s: float, t: float) -> float:
        val = self.kappa_fn(s, t)
        if val < -1e-9 and self.form != "window_start":
            raise ValueError(f"kappa({s}, {t}) = {val:.6g} is negative")
        return val

    def rhs(self, s: float, t: float, initial_msq: float = 0.0) -> float:
        """Full right-hand side of the mean-squared bound on [s, t]."""
        decay = initial_msq / self.m_lower * math.exp(-self.beta * (t - s))
        ball = self.kappa(s, t) / self.m_lower
        if self.kind == "white":
            ball /= self.beta
        return decay + ball


@dataclass(frozen=True)
class HFunction:
    """Nonnegative, continuously differentiable jump-cost bound h(t).

    dh may be analytic; when None it is taken by central differences.
    """

    h: Callable[[float], float]
    dh: Callable[[float], float] | None = None
    provenance: str = "user_supplied"

    def value(self, t: float) -> float:
        v = float(self.h(t))
        if v < -1e-12:
            raise ValueError(f"h({t}) = {v:.6g} must be nonnegative")
        return max(v, 0.0)

    def derivative(self, t: float, scale: float = 1.0) -> float:
        if self.dh is not None:
            return float(self.dh(t))
        step = 1e-6 * max(scale, 1.0)
        return (self.h(t + step) - self.h(t - step)) / (2 * step)


def white_bound(cert: ContractionCertificate, gamma: float, s: float, t: float) -> BoundParams:
    """Rate and error ball for the white-noise bound.

    beta_w = 2 alpha - gamma^2/m_lower (m' + m''/2);
    kappa_w(s, t) = gamma^2 (m' + m_upper)(1 - exp(-beta_w (t-s))).
    """
    correction = gamma**2 / cert.m_lower * (cert.m_prime + 0.5 * cert.m_double_prime)
    beta_w = 2.0 * cert.alpha - correction
    if beta_w <= 0:
        raise NoiseDominatesError(
            "noise dominates contraction: 2*alpha = "
            f"{2 * cert.alpha:.6g} <= white-noise correction {correction:.6g} "
            f"(margin {beta_w:.6g})")
    coeff = gamma**2 * (cert.m_prime + cert.m_upper)

    def kappa_fn(ss: float, tt: float) -> float:
        return coeff * (1.0 - math.exp(-beta_w * (tt - ss)))

    return BoundParams("white", beta_w, kappa_fn, cert.m_lower)


def _shot_error_ball(h: HFunction, k: int, s: float, t: float, rate: float) -> float:
    """k * int_s^t h'(tau) exp(-rate (t-tau)) dtau + k h(s) exp(-rate (t-s))."""
    if k == 0:
        return 0.0
    integral = _quad(lambda tau: h.derivative(tau, scale=t - s)
                     * math.exp(-rate * (t - tau)), s, t)
    return k * integral + k * h.value(s) * math.exp(-rate * (t - s))


def shot_bound(cert: ContractionCertificate, h: HFunction, k: int,
               s: float, t: float) -> BoundParams:
    """Jump-noise bound under an abstract jump-cost function h.

    beta_s = 2 alpha; the error ball integrates h' against the decay kernel
    and carries the h(s) term from the window start.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    beta_s = 2.0 * cert.alpha

    def kappa_fn(ss: float, tt: float) -> float:
        return _shot_error_ball(h, k, ss, tt, beta_s)

    return BoundParams("shot", beta_s, kappa_fn, cert.m_lower, k=k)


def levy_bound(cert: ContractionCertificate, h: HFunction, gamma: float,
               k: int, s: float, t: float) -> BoundParams:
    """Combined-noise bound: the jump ball at the white rate plus the white
    ball divided by its rate. beta is exactly the white-noise rate."""
    if k < 0:
        raise ValueError("k must be >= 0")
    white = white_bound(cert, gamma, s, t)
    beta_l = white.beta

    def kappa_fn(ss: float, tt: float) -> float:
        return (_shot_error_ball(h, k, ss, tt, beta_l)
                + white.kappa_fn(ss, tt) / beta_l)

    return BoundParams("levy", beta_l, kappa_fn, cert.m_lower, k=k)


@dataclass(frozen=True)
class PsiSpec:
    """Parameters of the jump-interaction expectation psi_k.

    d0 is the conditional first moment E_k ||y(s) - x(s)|| (never the second
    moment that enters the bound's initial-decay term).
    """

    alpha2: float
    eta: float
    kappa: float
    beta: float
    lam: float
    d0: float
    k: int
    window: tuple[float, float]
    time_law: str = "uniform_order_statistics"

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError("k must be >= 0")
        for name in ("alpha2", "eta", "kappa", "beta", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.lam == 0:
            raise ValueError("lam must be > 0")
        s, t = self.window
        if not (s < t):
            raise ValueError("window must satisfy s < t")
        if self.d0 < 0:
            raise ValueError("d0 must be >= 0")
        if self.time_law not in TIME_LAWS:
            raise ValueError(f"time_law must be one of {TIME_LAWS}")

    @property
    def c_initial(self) -> float:
        return 2.0 * self.alpha2 * self.eta * self.kappa * self.d0

    @property
    def c_pairwise(self) -> float:
        return 2.0 * self.alpha2 * self.kappa * self.eta**2


@dataclass(frozen=True)
class PsiValue:
    value: float
    strategy: str
    time_law: str
    std_err: float | None = None
    is_upper_bound: bool = False


def _beta_pdf(x: float, a: int, b: int) -> float:
    """Beta(a, b) density for integer shape parameters."""
    if x < 0.0 or x > 1.0:
        return 0.0
    coeff = math.factorial(a + b - 1) / (math.factorial(a - 1) * math.factorial(b - 1))
    return coeff * x ** (a - 1) * (1.0 - x) ** (b - 1)


def _gamma_pdf(v: float, r: int, lam: float) -> float:
    """Gamma(r, rate lam) density for integer shape r."""
    if v < 0.0:
        return 0.0
    return lam**r * v ** (r - 1) * math.exp(-lam * v) / math.factorial(r - 1)


def _order_stat_exp_moment(c: float, r: int, k: int, delta: float) -> float:
    """E[exp(-c * X)] for X = delta * Beta(r, k - r + 1) (the r-th of k
    uniform order statistics measured from the window start), by quadrature."""
    return _quad(lambda b: math.exp(-c * delta * b) * _beta_pdf(b, r, k - r + 1),
                 0.0, 1.0)


def _gamma_exp_moment(c: float, r: int, lam: float) -> float:
    """E[exp(-c * G)] for G ~ Gamma(r, rate lam), by quadrature."""
    upper = (r + 40.0 * math.sqrt(r) + 40.0) / lam
    return _quad(lambda u: math.exp(-c * u) * _gamma_pdf(u, r, lam), 0.0, upper)


def _sample_arrival_offsets(spec: PsiSpec, n: int,
                            rng: np.random.Generator) -> np.ndarray:
    """(n, k) matrix of arrival times measured from the window start."""
    s, t = spec.window
    if spec.time_law == "uniform_order_statistics":
        return np.sort(rng.uniform(0.0, t - s, size=(n, spec.k)), axis=1)
    gaps = rng.exponential(1.0 / spec.lam, size=(n, spec.k))
    return np.cumsum(gaps, axis=1)


def _psi_summand(spec: PsiSpec, offsets: np.ndarray) -> np.ndarray:
    """Sum over jumps of the interaction cost, per sample row."""
    first = spec.c_initial * np.sum(np.exp(-spec.beta * offsets), axis=1)
    total = first
    if spec.k >= 2:
        diff = offsets[:, :, None] - offsets[:, None, :]  # T_i - T_j at (i, j)
        lower = np.tril(np.exp(-spec.beta * diff), k=-1)
        total = total + spec.c_pairwise * np.sum(lower, axis=(1, 2))
    return total


def psi_k(spec: PsiSpec, strategy: str = "quadrature", n_mc: int = 100_000,
          stream: RandomStream | np.random.Generator | None = None) -> PsiValue:
    """Evaluate psi_k over the whole window under the chosen arrival-time law.

    quadrature and monte_carlo target the expectation itself; the loose_*
    strategies return upper relaxations (flagged as such, never reported as
    the expectation): the initial-separation term is relaxed to
    k * E[exp(-beta (T_1 - s))], and the pairwise term either to
    k(k-1)/2 times that same factor (product-of-maxima relaxation) or to a
    full-series sum per inner jump sum (geometric-sum relaxation).
    """
    if strategy not in PSI_STRATEGIES:
        raise ValueError(f"strategy must be one of {PSI_STRATEGIES}")
    if spec.k == 0:
        upper = strategy.startswith("loose")
        return PsiValue(0.0, strategy, spec.time_law, None, upper)
    s, t = spec.window
    delta = t - s
    k = spec.k
    uniform = spec.time_law == "uniform_order_statistics"

    if strategy == "monte_carlo":
        if n_mc < 1_000:
            raise ValueError("monte_carlo requires n_mc >= 1000")
        rng = (stream.generator() if isinstance(stream, RandomStream)
               else stream) or np.random.default_rng(0)
        vals = _psi_summand(spec, _sample_arrival_offsets(spec, n_mc, rng))
        return PsiValue(float(vals.mean()), strategy, spec.time_law,
                        float(vals.std(ddof=1) / math.sqrt(n_mc)))

    def first_moment(r: int) -> float:
        if uniform:
            return _order_stat_exp_moment(spec.beta, r, k, delta)
        return _gamma_exp_moment(spec.beta, r, spec.lam)

    if strategy == "quadrature":
        first = spec.c_initial * sum(first_moment(i) for i in range(1, k + 1))
        pairwise = spec.c_pairwise * sum((k - r) * first_moment(r)
                                         for r in range(1, k))
        return PsiValue(first + pairwise, strategy, spec.time_law)

    # loose_* : relaxed initial term shared by all three variants
    e1 = first_moment(1)
    first_loose = spec.c_initial * k * e1
    if strategy == "loose_first_term":
        pairwise = spec.c_pairwise * sum((k - r) * first_moment(r)
                                         for r in range(1, k))
        return PsiValue(first_loose + pairwise, strategy, spec.time_law,
                        is_upper_bound=True)
    if strategy == "loose_max_nng":
        pairwise = spec.c_pairwise * (k * (k - 1) / 2.0) * e1
        return PsiValue(first_loose + pairwise, strategy, spec.time_law,
                        is_upper_bound=True)
    # loose_sum_exp: bound each of the k-1 nonempty inner sums by the full series
    if uniform:
        inner = sum(first_moment(r) for r in range(1, k))
    else:
        rho = spec.lam / (spec.lam + spec.beta)
        inner = rho / (1.0 - rho)
    pairwise = spec.c_pairwise * (k - 1) * inner
    return PsiValue(first_loose + pairwise, strategy, spec.time_law,
                    is_upper_bound=True)


# ---------------------------------------------------------------------------
# Per-jump error ball for the LTV theorem
# ---------------------------------------------------------------------------

def _order_stat_pdf(spec: PsiSpec, i: int, v: float) -> float:
    """Density of T_i - s at v under the chosen law."""
    s, t = spec.window
    delta = t - s
    if spec.time_law == "uniform_order_statistics":
        if not (0.0 <= v <= delta):
            return 0.0
        return _beta_pdf(v / delta, i, spec.k - i + 1) / delta
    return _gamma_pdf(v, i, spec.lam)


def _pairwise_conditional_moment(spec: PsiSpec, i: int, v: float) -> float:
    """E[sum_{j<i} exp(-beta (T_i - T_j)) | T_i - s = v].

    Under both laws, given the i-th arrival at offset v the earlier arrivals
    are order statistics of i-1 uniforms on [0, v].
    """
    if i == 1 or v <= 0.0:
        return 0.0
    total = 0.0
    for j in range(1, i):
        total += _quad(lambda b, jj=j: math.exp(-spec.beta * v * (1.0 - b))
                       * _beta_pdf(b, jj, i - jj), 0.0, 1.0)
    return total


def _per_jump_terms_quadrature(spec: PsiSpec, t_eval: float, rate: float) -> float:
    """sum_i E[1{T_i <= t_eval} exp(-rate (t_eval - T_i)) cost_i] by quadrature.

    cost_i = alpha2 eta^2 + c_initial * exp(-beta (T_i - s))
             + c_pairwise * sum_{j<i} exp(-beta (T_i - T_j)).
    """
    s, _ = spec.window
    upper = t_eval - s
    if upper <= 0:
        return 0.0
    base = spec.alpha2 * spec.eta**2
    total = 0.0
    for i in range(1, spec.k + 1):
        def integrand(v: float, i: int = i) -> float:
            cost = (base + spec.c_initial * math.exp(-spec.beta * v)
                    + spec.c_pairwise * _pairwise_conditional_moment(spec, i, v))
            return math.exp(-rate * (upper - v)) * cost * _order_stat_pdf(spec, i, v)
        total += _quad(integrand, 0.0, upper)
    return total


def _per_jump_terms_mc(spec: PsiSpec, t_eval: float, rate: float, n: int,
                       rng: np.random.Generator) -> tuple[float, float]:
    s, _ = spec.window
    upper = t_eval - s
    offsets = _sample_arrival_offsets(spec, n, rng)
    live = offsets <= upper
    decay = np.exp(-rate * (upper - offsets)) * live
    base = spec.alpha2 * spec.eta**2
    cost = base + spec.c_initial * np.exp(-spec.beta * offsets)
    if spec.k >= 2:
        diff = offsets[:, :, None] - offsets[:, None, :]
        inner = np.sum(np.tril(np.exp(-spec.beta * diff), k=-1), axis=2)
        cost = cost + spec.c_pairwise * inner
    vals = np.sum(decay * cost, axis=1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


def jump_cost_kappa(spec: PsiSpec, t_eval: float, rate: float,
                    strategy: str = "quadrature", n_mc: int = 100_000,
                    stream: RandomStream | np.random.Generator | None = None,
                    ) -> tuple[float, float | None]:
    """Per-jump error ball at time t_eval inside the spec's window.

    Each jump's cost (the fixed alpha2 eta^2 part plus its interaction terms)
    is discounted from its own arrival time at the given outer rate.
    Returns (value, std_err or None).
    """
    s, t = spec.window
    if not (s <= t_eval <= t + 1e-12):
        raise ValueError(f"t_eval={t_eval} outside window [{s}, {t}]")
    if spec.k == 0:
        return 0.0, None
    if strategy == "monte_carlo":
        rng = (stream.generator() if isinstance(stream, RandomStream)
               else stream) or np.random.default_rng(0)
        return _per_jump_terms_mc(spec, t_eval, rate, n_mc, rng)
    if strategy != "quadrature":
        raise ValueError("jump_cost_kappa supports quadrature or monte_carlo")
    return _per_jump_terms_quadrature(spec, t_eval, rate), None


def jump_cost_h(spec: PsiSpec, strategy: str = "quadrature", n_mc: int = 100_000,
                stream: RandomStream | np.random.Generator | None = None) -> HFunction:
    """Accrued expected per-jump cost, packaged as an h-function.

    h(tau) is 1/k times the expected jump cost accumulated by tau (conditional
    on the spec's window), so k * h is the running total and h(s) = 0. Feeding
    this h to shot_bound reproduces the per-jump error ball exactly.
    """
    if spec.k == 0:
        zero = lambda tau: 0.0  # noqa: E731
        return HFunction(zero, zero, provenance="psi_k_ltv")
    k = spec.k

    if strategy == "monte_carlo":
        rng = (stream.generator() if isinstance(stream, RandomStream)
               else stream) or np.random.default_rng(0)
        offsets = _sample_arrival_offsets(spec, n_mc, rng)
        base = spec.alpha2 * spec.eta**2
        cost = base + spec.c_initial * np.exp(-spec.beta * offsets)
        if k >= 2:
            diff = offsets[:, :, None] - offsets[:, None, :]
            cost = cost + spec.c_pairwise * np.sum(
                np.tril(np.exp(-spec.beta * diff), k=-1), axis=2)
        s0 = spec.window[0]

        def h(tau: float) -> float:
            live = offsets <= (tau - s0)
            return float(np.mean(np.sum(cost * live, axis=1))) / k

        return HFunction(h, None, provenance="psi_k_ltv")

    def h(tau: float) -> float:
        return _per_jump_terms_quadrature(spec, tau, 0.0) / k

    base = spec.alpha2 * spec.eta**2

    def dh(tau: float) -> float:
        v = tau - spec.window[0]
        total = 0.0
        for i in range(1, k + 1):
            cost = (base + spec.c_initial * math.exp(-spec.beta * v)
                    + spec.c_pairwise * _pairwise_conditional_moment(spec, i, v))
            total += cost * _order_stat_pdf(spec, i, v)
        return total / k

    return HFunction(h, dh, provenance="psi_k_ltv")


def _psi_window_derivative(spec: PsiSpec, tau: float, strategy: str,
                           n_mc: int, stream) -> float:
    """d psi_k(s, tau) / d tau with the window end varied (window_start form).

    Under the gamma law psi_k does not depend on the window end, so the
    derivative is exactly zero; under the uniform law it is taken by central
    differences (common random numbers for the monte_carlo strategy).
    """
    s, _ = spec.window
    if spec.time_law == "gamma_unconditional":
        return 0.0
    if strategy == "monte_carlo":
        step = 1e-3 * (tau - s)
        rng = (stream.generator() if isinstance(stream, RandomStream)
               else stream) or np.random.default_rng(0)
        unit = np.sort(rng.uniform(0.0, 1.0, size=(n_mc, spec.k)), axis=1)
        lo = _psi_summand(spec, unit * (tau - step - s)).mean()
        hi = _psi_summand(spec, unit * (tau + step - s)).mean()
        return float((hi - lo) / (2 * step))
    step = max(1e-4 * (tau - s), 1e-8)

    def value(at: float) -> float:
        sub = PsiSpec(spec.alpha2, spec.eta, spec.kappa, spec.beta, spec.lam,
                      spec.d0, spec.k, (s, at), spec.time_law)
        return psi_k(sub, strategy).value

    return (value(tau + step) - value(tau - step)) / (2 * step)


def shot_ltv_bound(
    riccati: tuple[float, float, float],
    envelope: TransitionEnvelope,
    spec: PsiSpec,
    eta: float,
    s: float,
    t: float,
    form: str = "per_jump",
    strategy: str = "quadrature",
    n_mc: int = 100_000,
    stream: RandomStream | np.random.Generator | None = None,
) -> BoundParams:
    """LTV jump-noise bound from a Riccati triple (alpha, alpha1, alpha2).

    form="per_jump" (default) evaluates the error ball with every jump cost
    discounted from its own arrival time; form="window_start" reproduces the
    closed formula int (d psi/d tau) exp(-2 alpha (t - tau)) d tau
    + k alpha2 eta^2 exp(-2 alpha (t - s)), which discounts the fixed jump
    cost from the window start and is kept for side-by-side comparison.
    """
    alpha, alpha1, alpha2 = riccati
    if alpha <= 0 or alpha1 <= 0 or alpha2 <= 0:
        raise ValueError("riccati triple must be positive")
    if abs(eta - spec.eta) > 1e-12:
        raise ValueError(f"eta={eta} disagrees with spec.eta={spec.eta}")
    if abs(s - spec.window[0]) > 1e-12 or abs(t - spec.window[1]) > 1e-12:
        raise ValueError(f"window ({s}, {t}) disagrees with spec.window={spec.window}")
    if abs(alpha2 - spec.alpha2) > 1e-12:
        raise ValueError(f"alpha2={alpha2} disagrees with spec.alpha2={spec.alpha2}")
    if abs(envelope.kappa - spec.kappa) > 1e-12 or abs(envelope.beta - spec.beta) > 1e-12:
        raise ValueError("envelope (kappa, beta) disagrees with spec")
    if form not in ("per_jump", "window_start"):
        raise ValueError(f"unknown form: {form!r}")
    beta_s = 2.0 * alpha
    flags: list[str] = []
    std_err: float | None = None

    if form == "per_jump":
        def kappa_fn(ss: float, tt: float) -> float:
            if abs(ss - s) > 1e-12:
                raise ValueError("per-jump ball is tied to the spec's window start")
            val, _ = jump_cost_kappa(spec, tt, beta_s, strategy, n_mc, stream)
            return val

        if strategy == "monte_carlo" and spec.k > 0:
            _, std_err = jump_cost_kappa(spec, t, beta_s, strategy, n_mc, stream)
    else:
        def kappa_fn(ss: float, tt: float) -> float:
            if spec.k == 0:
                return 0.0
            taus = np.linspace(ss, tt, 33)[1:]
            derivs = np.array([_psi_window_derivative(spec, tau, strategy, n_mc, stream)
                               for tau in taus])
            noise_floor = 1e-6 * max(1.0, float(np.abs(derivs).max()))
            if np.any(derivs < -noise_floor):
                flags.append("negative_dpsi")
            weights = np.exp(-beta_s * (tt - taus))
            integral = float(np.trapezoid(derivs * weights, taus))
            total = integral + spec.k * alpha2 * eta**2 * math.exp(-beta_s * (tt - ss))
            if total < 0:
                flags.append("negative_kappa")
            return total

    params = BoundParams("shot_ltv", beta_s, kappa_fn, alpha1, k=spec.k,
                         strategy=strategy, std_err=std_err, form=form)
    if form == "window_start":
        params.kappa(s, t)  # evaluate once so negative-derivative flags fire
        if flags:
            object.__setattr__(params, "flags", tuple(sorted(set(flags))))
    return params


def comparison_rhs(y0: float, zeta: float, mu: float,
                   theta: Callable[[float], float], t: float,
                   dtheta: Callable[[float], float] | None = None) -> float:
    """Comparison-lemma right-hand side:
    int_0^t theta'(s) exp(-mu (t-s)) ds + (zeta + y0) exp(-mu t)."""
    if mu <= 0:
        raise ValueError("mu must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return zeta + y0

    def deriv(x: float) -> float:
        if dtheta is not None:
            return float(dtheta(x))
        step = 1e-6 * max(t, 1.0)
        return (theta(x + step) - theta(x - step)) / (2 * step)

    integral = _quad(lambda x: deriv(x) * math.exp(-mu * (t - x)), 0.0, t)
    return integral + (zeta + y0) * math.exp(-mu * t)
