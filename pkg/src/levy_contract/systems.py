"""System models: general jump-diffusion dynamics and the linear time-varying case.

One model type covers the combined-noise form dx = f dt + sigma dW + xi dN and,
with diffusion or jumps removed, its shot-only / white-only / nominal reductions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .noise import JumpRecord, MarkLaw, NoiseBounds, RandomStream

__all__ = [
    "LevySystemModel",
    "LtvSystemModel",
    "SamplePath",
    "nominal_of",
    "transition_matrix",
]

DriftFn = Callable[[float, np.ndarray], np.ndarray]
DiffusionFn = Callable[[float, np.ndarray], np.ndarray]
JumpLawFn = Callable[[float, np.ndarray], MarkLaw]
MatrixFn = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class LevySystemModel:
    """dx = drift dt + diffusion dW + (jump mark) dN, with declared noise bounds.

    diffusion=None means no white-noise term; jump_law=None means no jumps.
    drift maps (t, x) -> R^n and should accept batched x of shape (..., n)
    when used with vectorized ensembles.
    """

    dim: int
    drift: DriftFn
    noise: NoiseBounds
    diffusion: DiffusionFn | None = None
    jump_law: JumpLawFn | None = None
    diffusion_dim: int = 1
    name: str = "levy_system"

    @property
    def has_diffusion(self) -> bool:
        return self.diffusion is not None and self.noise.gamma > 0

    @property
    def has_jumps(self) -> bool:
        return self.jump_law is not None and self.noise.eta > 0

    @property
    def is_deterministic(self) -> bool:
        return not self.has_diffusion and not self.has_jumps


@dataclass(frozen=True)
class LtvSystemModel:
    """dx = A(t) x dt + xi(t) dN with state-independent jump marks.

    a_integral(tau, t), when supplied, must be the exact integral of A over
    [tau, t] for a matrix that commutes with it (e.g. diagonal or constant A);
    the transition matrix then comes from the matrix exponential.
    """

    dim: int
    a_matrix: MatrixFn
    noise: NoiseBounds
    jump_signal: Callable[[float], MarkLaw] | None = None
    a_integral: Callable[[float, float], np.ndarray] | None = None
    name: str = "ltv_system"

    @property
    def has_jumps(self) -> bool:
        return self.jump_signal is not None and self.noise.eta > 0

    def drift(self, t: float, x: np.ndarray) -> np.ndarray:
        a = self.a_matrix(t)
        return np.asarray(x) @ np.asarray(a).T

    def as_levy(self) -> LevySystemModel:
        jump_law = None
        if self.jump_signal is not None:
            signal = self.jump_signal
            jump_law = lambda t, x: signal(t)  # noqa: E731 - state independent
        return LevySystemModel(
            dim=self.dim,
            drift=self.drift,
            noise=self.noise,
            diffusion=None,
            jump_law=jump_law,
            name=self.name,
        )

    def continuity_probe(self, window: tuple[float, float], samples: int = 257,
                         tol: float = 1e2) -> bool:
        """Spot-check that A(t) has no obvious discontinuity on the window.

        Differences consecutive fine-grid samples, so any jump larger than
        tol * step * scale is caught wherever it sits.
        """
        s, t = window
        ts = np.linspace(s, t, samples)
        step = ts[1] - ts[0]
        prev = np.asarray(self.a_matrix(ts[0]))
        scale = max(1.0, float(np.linalg.norm(prev)))
        for ti in ts[1:]:
            cur = np.asarray(self.a_matrix(ti))
            if np.linalg.norm(cur - prev) > tol * step * scale:
                return False
            prev = cur
            scale = max(scale, float(np.linalg.norm(cur)))
        return True


@dataclass(frozen=True)
class SamplePath:
    """One realized trajectory on a jump-adapted grid.

    Every jump time appears exactly once in `grid`; `states` holds the
    post-jump value there and `left_states` the corresponding left limit.
    """

    grid: np.ndarray
    states: np.ndarray
    jumps: JumpRecord
    stream: RandomStream | None = None
    jump_indices: np.ndarray | None = None
    left_states: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def state_at(self, t: float | np.ndarray) -> np.ndarray:
        """Piecewise-linear lookup; exact at grid points (post-jump value)."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for j in range(self.dim):
            out[..., j] = np.interp(t, self.grid, self.states[:, j])
        return out

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def jump_count(self, s: float | None = None, t: float | None = None) -> int:
        if s is None and t is None:
            return self.jumps.count
        s = self.grid[0] if s is None else s
        t = self.grid[-1] if t is None else t
        return self.jumps.count_in(s, t)


def nominal_of(model):
    """Strip all noise terms; the result integrates as a plain ODE. Idempotent."""
    if isinstance(model, LtvSystemModel):
        return replace(
            model,
            jump_signal=None,
            noise=NoiseBounds(0.0, 0.0, model.noise.lam),
            name=model.name + "_nominal" if not model.name.endswith("_nominal") else model.name,
        )
    if isinstance(model, LevySystemModel):
        return replace(
            model,
            diffusion=None,
            jump_law=None,
            noise=NoiseBounds(0.0, 0.0, model.noise.lam),
            name=model.name + "_nominal" if not model.name.endswith("_nominal") else model.name,
        )
    raise TypeError(f"unsupported model type: {type(model).__name__}")


def _rk4_matrix_sweep(a_matrix: MatrixFn, tau: float, t: float, h: float) -> np.ndarray:
    """Integrate dPhi/dt = A(t) Phi from tau to t with fixed-step RK4."""
    n = np.asarray(a_matrix(tau)).shape[0]
    phi = np.eye(n)
    steps = max(1, int(np.ceil((t - tau) / h)))
    h = (t - tau) / steps
    current = tau
    for _ in range(steps):
        k1 = a_matrix(current) @ phi
        k2 = a_matrix(current + 0.5 * h) @ (phi + 0.5 * h * k1)
        k3 = a_matrix(current + 0.5 * h) @ (phi + 0.5 * h * k2)
        k4 = a_matrix(current + h) @ (phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        current += h
    return phi


def transition_matrix(
    model: LtvSystemModel,
    tau: float,
    t: float,
    tol: float = 1e-8,
) -> np.ndarray:
    """State-transition matrix Phi(t, tau) of dx = A(t) x dt.

    Uses the declared closed form exp(integral of A) when `a_integral` is
    supplied, otherwise fixed-step RK4 on the matrix ODE with
    h = min(tol^(1/4), (t - tau)/100).
    """
    if tau > t:
        raise ValueError(f"need tau <= t, got tau={tau} > t={t}")
    if tau == t:
        return np.eye(model.dim)
    if model.a_integral is not None:
        return expm(np.asarray(model.a_integral(tau, t), dtype=float))
    h = min(tol ** 0.25, (t - tau) / 100.0)
    return _rk4_matrix_sweep(model.a_matrix, tau, t, h)
