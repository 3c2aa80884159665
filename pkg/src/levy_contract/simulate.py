"""Jump-adapted numerical integration and paired-ensemble generation.

The stochastic grid is the union of a uniform grid and the sampled jump
times, so jumps are applied exactly and discretization error comes only
from the drift/diffusion part. Deterministic (noise-free) models integrate
with RK4; everything else uses Euler-Maruyama.

Per-path draw order is fixed (initial condition, jump times, Brownian
increments, marks in time order), which makes ensembles reproducible from
(seed, stream_id) regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .noise import (
    JumpRecord,
    RandomStream,
    sample_brownian_increments,
    sample_conditional_times,
    sample_marks,
    sample_poisson_times,
)
from .systems import LevySystemModel, LtvSystemModel, SamplePath, nominal_of, transition_matrix

__all__ = [
    "IntegratorConfig",
    "InitLaw",
    "PairedEnsemble",
    "PathBlowUpError",
    "integrate",
    "integrate_ltv_exact",
    "run_ensemble",
    "worker_count",
]

THREADS_ENV = "LEVY_CONTRACT_THREADS"


class PathBlowUpError(RuntimeError):
    """State norm crossed the blow-up threshold; the system is likely misconfigured."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    horizon: tuple[float, float]
    scheme: str = "euler_maruyama"
    tol: float = 1e-6
    blowup: float = 1e8

    def __post_init__(self) -> None:
        s, t = self.horizon
        if not (s < t):
            raise ValueError(f"horizon [{s}, {t}] is degenerate")
        if not (0 < self.dt <= t - s):
            raise ValueError(f"need 0 < dt <= {t - s}, got dt={self.dt}")
        if self.scheme != "euler_maruyama":
            raise ValueError(f"unknown scheme: {self.scheme!r}")

    def base_grid(self) -> np.ndarray:
        s, t = self.horizon
        n = max(1, int(round((t - s) / self.dt)))
        return np.linspace(s, t, n + 1)


@dataclass(frozen=True)
class InitLaw:
    """Initial-condition law for (x0, y0) pairs.

    point                -- both start at `x0` (the default for bound audits,
                            which then isolates noise-induced error)
    matched_gaussian     -- x0 = y0 ~ N(mean, std^2 I)
    independent_gaussian -- x0, y0 drawn independently from N(mean, std^2 I)
    """

    kind: str = "point"
    x0: tuple[float, ...] = (0.0,)
    mean: tuple[float, ...] = (0.0,)
    std: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("point", "matched_gaussian", "independent_gaussian"):
            raise ValueError(f"unknown init law: {self.kind!r}")

    @property
    def matched(self) -> bool:
        return self.kind in ("point", "matched_gaussian")

    def draw(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "point":
            x0 = np.asarray(self.x0, dtype=float)
            return x0.copy(), x0.copy()
        mean = np.asarray(self.mean, dtype=float)
        x0 = mean + self.std * rng.standard_normal(mean.size)
        if self.kind == "matched_gaussian":
            return x0, x0.copy()
        y0 = mean + self.std * rng.standard_normal(mean.size)
        return x0, y0


def _adapted_grid(base: np.ndarray, jump_times: np.ndarray) -> np.ndarray:
    if jump_times.size == 0:
        return base
    return np.union1d(base, jump_times)


def _rk4_step(drift, t: float, x: np.ndarray, h: float) -> np.ndarray:
    k1 = drift(t, x)
    k2 = drift(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = drift(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = drift(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _drift_of(model) -> "callable":
    return model.drift if isinstance(model, (LevySystemModel, LtvSystemModel)) else model


def integrate(
    model: LevySystemModel | LtvSystemModel,
    x0: np.ndarray,
    cfg: IntegratorConfig,
    stream: RandomStream | np.random.Generator,
    jumps: JumpRecord | None = None,
) -> SamplePath:
    """Integrate one sample path over the jump-adapted grid.

    If `jumps` is given its times are used verbatim (marks drawn en route when
    absent); otherwise jump times are sampled unconditionally from `stream`.
    """
    ltv = isinstance(model, LtvSystemModel)
    levy = model.as_levy() if ltv else model
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (levy.dim,):
        raise ValueError(f"x0 must have shape ({levy.dim},), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    rng = stream.generator() if isinstance(stream, RandomStream) else stream
    record_stream = stream if isinstance(stream, RandomStream) else None

    s, t = cfg.horizon
    if jumps is None:
        if levy.has_jumps:
            jump_times = sample_poisson_times(rng, levy.noise.lam, (s, t))
        else:
            jump_times = np.empty(0)
        given_marks = None
    else:
        jump_times = np.asarray(jumps.arrival_times, dtype=float)
        if jump_times.size and (jump_times[0] <= s or jump_times[-1] > t):
            raise ValueError("jump times must lie strictly within the horizon")
        given_marks = jumps.marks

    # With no diffusion and no realized jumps the path is an ODE solution;
    # use RK4 so it matches the nominal trajectory exactly.
    if not levy.has_diffusion and jump_times.size == 0:
        grid = cfg.base_grid()
        states = np.empty((grid.size, levy.dim))
        states[0] = x0
        x = x0
        for i in range(grid.size - 1):
            x = _rk4_step(levy.drift, grid[i], x, grid[i + 1] - grid[i])
            states[i + 1] = x
        return SamplePath(grid, states, JumpRecord.empty(levy.dim), record_stream,
                          np.empty(0, dtype=int), np.empty((0, levy.dim)))

    grid = _adapted_grid(cfg.base_grid(), jump_times)
    jump_idx = np.searchsorted(grid, jump_times)
    is_jump = np.zeros(grid.size, dtype=bool)
    is_jump[jump_idx] = True

    d = levy.diffusion_dim
    if levy.has_diffusion:
        dw = sample_brownian_increments(rng, grid, d)
    else:
        dw = None

    eta = levy.noise.eta
    gamma = levy.noise.gamma
    states = np.empty((grid.size, levy.dim))
    left_states = np.empty((jump_times.size, levy.dim))
    marks = np.empty((jump_times.size, levy.dim))
    states[0] = x0
    x = x0.copy()
    n_seen = 0
    for i in range(grid.size - 1):
        ti, tn = grid[i], grid[i + 1]
        h = tn - ti
        x = x + levy.drift(ti, x) * h
        if dw is not None:
            sig = np.asarray(levy.diffusion(ti, states[i]))
            signorm = np.linalg.norm(sig, 2)
            if signorm > gamma * (1 + 1e-9):
                raise ValueError(
                    f"diffusion norm {signorm:.6g} exceeds declared gamma={gamma:.6g} "
                    f"at t={ti:.6g}")
            x = x + sig @ dw[i]
        if is_jump[i + 1]:
            left_states[n_seen] = x
            if given_marks is not None:
                mark = np.asarray(given_marks[n_seen], dtype=float)
            else:
                law = levy.jump_law(tn, x)
                mark = sample_marks(rng, 1, law, eta)[0]
            mark_norm = np.linalg.norm(mark)
            if mark_norm > eta * (1 + 1e-9):
                raise ValueError(
                    f"jump mark norm {mark_norm:.6g} exceeds eta={eta:.6g} at t={tn:.6g}")
            marks[n_seen] = mark
            x = x + mark
            n_seen += 1
        if np.linalg.norm(x) > cfg.blowup:
            raise PathBlowUpError(
                f"state norm exceeded {cfg.blowup:.3g} at t={tn:.6g} "
                f"(model {levy.name!r}); check contraction of the drift")
        states[i + 1] = x

    record = JumpRecord(jump_times, marks)
    return SamplePath(grid, states, record, record_stream, jump_idx, left_states)


def integrate_ltv_exact(
    model: LtvSystemModel,
    x0: np.ndarray,
    window: tuple[float, float],
    jumps: JumpRecord,
    grid: np.ndarray | None = None,
    tol: float = 1e-10,
) -> SamplePath:
    """Exact solution x(t) = Phi(t,s) x(s) + sum_i Phi(t,T_i) m_i on the grid.

    Serves as the oracle for the numerical integrator; `jumps` must carry marks.
    """
    s, t = window
    if jumps.marks is None and jumps.count > 0:
        raise ValueError("integrate_ltv_exact requires marks on the jump record")
    times = jumps.arrival_times
    if times.size and (times[0] <= s or times[-1] > t):
        raise ValueError("jump times must lie strictly within the window")
    if grid is None:
        grid = _adapted_grid(np.linspace(s, t, 101), times)
    grid = np.asarray(grid, dtype=float)

    x0 = np.asarray(x0, dtype=float)
    # One forward sweep: Phi(g, s) for every grid point, reusing increments.
    phis = np.empty((grid.size, model.dim, model.dim))
    phis[0] = transition_matrix(model, s, grid[0], tol) if grid[0] > s else np.eye(model.dim)
    for i in range(grid.size - 1):
        step = transition_matrix(model, grid[i], grid[i + 1], tol)
        phis[i + 1] = step @ phis[i]
    # Phi at the jump times themselves (for Phi(g, T_i) = Phi(g,s) Phi(T_i,s)^-1).
    states = np.empty((grid.size, model.dim))
    inv_phi_t = []
    for ti in times:
        inv_phi_t.append(np.linalg.inv(transition_matrix(model, s, ti, tol)))
    for g in range(grid.size):
        x = phis[g] @ x0
        for ji, ti in enumerate(times):
            if ti <= grid[g]:
                x = x + phis[g] @ (inv_phi_t[ji] @ jumps.marks[ji])
        states[g] = x

    jump_idx = np.searchsorted(grid, times)
    on_grid = jump_idx < grid.size
    left = np.empty((times.size, model.dim))
    for ji, ti in enumerate(times):
        before = states[jump_idx[ji]] - jumps.marks[ji] if on_grid[ji] else states[-1]
        left[ji] = before
    return SamplePath(grid, states, jumps, None, jump_idx, left)


@dataclass
class PairedEnsemble:
    """Matched (perturbed, nominal) trajectory pairs from one seeded run."""

    pairs: list[tuple[SamplePath, SamplePath]]
    init_law: InitLaw
    count: int
    window: tuple[float, float]
    mode: str
    k: int | None = None
    seed: int = 0

    def jump_counts(self, s: float | None = None, t: float | None = None) -> np.ndarray:
        s = self.window[0] if s is None else s
        t = self.window[1] if t is None else t
        return np.array([x.jumps.count_in(s, t) for x, _ in self.pairs], dtype=int)

    def squared_errors_at(self, times: np.ndarray) -> np.ndarray:
        """||y(t) - x(t)||^2 per pair, shape (count, len(times))."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty((len(self.pairs), times.size))
        for i, (x, y) in enumerate(self.pairs):
            diff = y.state_at(times) - x.state_at(times)
            out[i] = np.sum(diff * diff, axis=-1)
        return out

    def initial_errors(self) -> np.ndarray:
        return np.array([np.linalg.norm(y.states[0] - x.states[0])
                         for x, y in self.pairs])


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker count; the environment variable only ever caps it."""
    raw = os.environ.get(THREADS_ENV)
    cap = int(raw) if raw else None
    if requested is None:
        requested = 1
    if cap is not None:
        requested = min(requested, cap)
    return max(1, requested)


def _batch_drift(drift, t: float, xs: np.ndarray) -> np.ndarray:
    out = np.asarray(drift(t, xs))
    if out.shape == xs.shape:
        return out
    return np.stack([np.asarray(drift(t, x)) for x in xs])


def _run_white_batch(model: LevySystemModel, x0s: np.ndarray, cfg: IntegratorConfig,
                     rngs: list[np.random.Generator],
                     streams: list[RandomStream]) -> list[SamplePath]:
    """Vectorized Euler-Maruyama for diffusion-only models on the shared grid.

    Consumes each path's generator exactly as the per-path integrator would,
    so results are bit-identical to integrate() path by path.
    """
    grid = cfg.base_grid()
    m, n = x0s.shape
    d = model.diffusion_dim
    dws = np.empty((m, grid.size - 1, d))
    for i, rng in enumerate(rngs):
        dws[i] = sample_brownian_increments(rng, grid, d)
    states = np.empty((m, grid.size, n))
    states[:, 0] = x0s
    xs = x0s.copy()
    gamma = model.noise.gamma
    for i in range(grid.size - 1):
        ti = grid[i]
        h = grid[i + 1] - ti
        xs = xs + _batch_drift(model.drift, ti, xs) * h
        sig = np.asarray(model.diffusion(ti, states[:, i]))
        if sig.ndim == 2:  # state-independent (n, d) matrix shared by all paths
            if np.linalg.norm(sig, 2) > gamma * (1 + 1e-9):
                raise ValueError(f"diffusion norm exceeds gamma={gamma:.6g} at t={ti:.6g}")
            xs = xs + dws[:, i] @ sig.T
        else:
            xs = xs + np.einsum("pnd,pd->pn", sig, dws[:, i])
        states[:, i + 1] = xs
    if np.any(~np.isfinite(xs)) or np.max(np.linalg.norm(xs, axis=1)) > cfg.blowup:
        raise PathBlowUpError("white-noise batch exceeded the blow-up threshold")
    empty = JumpRecord.empty(n)
    return [SamplePath(grid, states[i], empty, streams[i],
                       np.empty(0, dtype=int), np.empty((0, n)))
            for i in range(m)]


def _run_ode_batch(drift, x0s: np.ndarray, grid: np.ndarray) -> np.ndarray:
    states = np.empty((x0s.shape[0], grid.size, x0s.shape[1]))
    states[:, 0] = x0s
    xs = x0s.copy()
    for i in range(grid.size - 1):
        h = grid[i + 1] - grid[i]
        ti = grid[i]
        k1 = _batch_drift(drift, ti, xs)
        k2 = _batch_drift(drift, ti + 0.5 * h, xs + 0.5 * h * k1)
        k3 = _batch_drift(drift, ti + 0.5 * h, xs + 0.5 * h * k2)
        k4 = _batch_drift(drift, ti + h, xs + h * k3)
        xs = xs + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[:, i + 1] = xs
    return states


def run_ensemble(
    model: LevySystemModel | LtvSystemModel,
    init_law: InitLaw,
    cfg: IntegratorConfig,
    count: int,
    mode: str = "unconditional",
    k: int | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> PairedEnsemble:
    """Generate `count` matched (perturbed, nominal) pairs.

    mode="conditional" places exactly k jumps in the horizon window via
    uniform order statistics; mode="unconditional" samples the Poisson law
    and records counts for post-hoc stratification.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if mode not in ("unconditional", "conditional"):
        raise ValueError(f"unknown mode: {mode!r}")
    if mode == "conditional" and (k is None or k < 0):
        raise ValueError("conditional mode requires k >= 0")

    ltv = isinstance(model, LtvSystemModel)
    levy = model.as_levy() if ltv else model
    window = cfg.horizon
    streams = [RandomStream(seed, i) for i in range(count)]

    # Initial conditions consume each path's stream first.
    x0s = np.empty((count, levy.dim))
    y0s = np.empty((count, levy.dim))
    rngs = [st.generator() for st in streams]
    for i, rng in enumerate(rngs):
        x0s[i], y0s[i] = init_law.draw(rng)

    nominal = nominal_of(levy)
    base_grid = cfg.base_grid()
    if init_law.kind == "point":
        ygrid_states = _run_ode_batch(nominal.drift, y0s[:1], base_grid)
        nominal_paths = [SamplePath(base_grid, ygrid_states[0], JumpRecord.empty(levy.dim))] * count
    else:
        ystates = _run_ode_batch(nominal.drift, y0s, base_grid)
        nominal_paths = [SamplePath(base_grid, ystates[i], JumpRecord.empty(levy.dim))
                         for i in range(count)]

    if not levy.has_jumps and levy.has_diffusion and mode == "unconditional":
        perturbed = _run_white_batch(levy, x0s, cfg, rngs, streams)
    else:
        def one(i: int) -> SamplePath:
            rng = rngs[i]
            if mode == "conditional" and levy.has_jumps:
                times = sample_conditional_times(rng, k, window)
                jumps = JumpRecord(times)
            elif mode == "conditional" and not levy.has_jumps:
                if k != 0:
                    raise ValueError("conditional k > 0 requires a jump law on the model")
                jumps = JumpRecord.empty(levy.dim)
            else:
                jumps = None
            return integrate(levy, x0s[i], cfg, rng, jumps=jumps)

        nworkers = worker_count(threads)
        if nworkers > 1:
            with ThreadPoolExecutor(max_workers=nworkers) as pool:
                perturbed = list(pool.map(one, range(count)))
        else:
            perturbed = [one(i) for i in range(count)]
        for i, p in enumerate(perturbed):
            object.__setattr__(p, "stream", streams[i])

    pairs = list(zip(perturbed, nominal_paths))
    return PairedEnsemble(pairs, init_law, count, window, mode,
                          k if mode == "conditional" else None, seed)
