"""Reproducible random streams and samplers for jump and diffusion noise.

Every sample path owns one counter-based stream keyed by (seed, stream_id),
so ensembles can be generated in any order (or in parallel) and still
reproduce byte-identical draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RandomStream",
    "NoiseBounds",
    "MarkLaw",
    "JumpRecord",
    "constant_mark",
    "uniform_ball_mark",
    "truncated_gaussian_mark",
    "zero_mark",
    "sample_poisson_times",
    "sample_conditional_times",
    "sample_brownian_increments",
    "sample_marks",
]


@dataclass(frozen=True)
class RandomStream:
    """Counter-based RNG stream: (seed, stream_id) fully determines all draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.random.SeedSequence((int(self.seed), int(self.stream_id)))
        return np.random.Generator(np.random.Philox(key))

    def substream(self, offset: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id + offset)


def _as_generator(stream: "RandomStream | np.random.Generator") -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


@dataclass(frozen=True)
class NoiseBounds:
    """Norm bounds on the noise terms: diffusion <= gamma, jumps <= eta, rate lam."""

    gamma: float
    eta: float
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")


@dataclass(frozen=True)
class MarkLaw:
    """Distribution of a single jump mark, always truncated to norm <= eta.

    Kinds:
      constant            -- always returns `vector` (its norm must be <= eta)
      uniform_ball        -- uniform on the closed ball of radius eta
      truncated_gaussian  -- N(0, sigma^2 I) with norms clipped to eta
    """

    kind: str
    eta: float
    vector: tuple[float, ...] | None = None
    sigma: float = 1.0
    dim: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "uniform_ball", "truncated_gaussian"):
            raise ValueError(f"unknown mark law kind: {self.kind!r}")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.kind == "constant":
            if self.vector is None:
                raise ValueError("constant mark law requires a vector")
            norm = float(np.linalg.norm(self.vector))
            if norm > self.eta * (1 + 1e-12):
                raise ValueError(
                    f"constant mark norm {norm:.6g} exceeds eta={self.eta:.6g}; "
                    "unbounded mark laws are rejected"
                )
        if self.kind == "truncated_gaussian" and self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    @property
    def ndim(self) -> int:
        if self.kind == "constant":
            return len(self.vector)  # type: ignore[arg-type]
        return self.dim


def constant_mark(vector, eta: float | None = None) -> MarkLaw:
    vec = tuple(float(v) for v in np.atleast_1d(vector))
    if eta is None:
        eta = float(np.linalg.norm(vec))
    return MarkLaw("constant", eta=eta, vector=vec)


def uniform_ball_mark(eta: float, dim: int) -> MarkLaw:
    return MarkLaw("uniform_ball", eta=eta, dim=dim)


def truncated_gaussian_mark(sigma: float, eta: float, dim: int) -> MarkLaw:
    return MarkLaw("truncated_gaussian", eta=eta, sigma=sigma, dim=dim)


def zero_mark(dim: int) -> MarkLaw:
    return MarkLaw("constant", eta=0.0, vector=tuple(0.0 for _ in range(dim)))


@dataclass(frozen=True)
class JumpRecord:
    """Arrival times and marks of one compound-Poisson realization."""

    arrival_times: np.ndarray
    marks: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.arrival_times, dtype=float)
        object.__setattr__(self, "arrival_times", times)
        if times.ndim != 1:
            raise ValueError("arrival_times must be a 1-D array")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("arrival_times must be strictly increasing")
        if self.marks is not None:
            marks = np.atleast_2d(np.asarray(self.marks, dtype=float))
            if marks.shape[0] != times.size:
                raise ValueError(
                    f"{marks.shape[0]} marks for {times.size} arrival times"
                )
            object.__setattr__(self, "marks", marks)

    @property
    def count(self) -> int:
        return int(self.arrival_times.size)

    def count_in(self, s: float, t: float) -> int:
        times = self.arrival_times
        return int(np.count_nonzero((times > s) & (times <= t)))

    def max_mark_norm(self) -> float:
        if self.marks is None or self.count == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.marks, axis=1)))

    @staticmethod
    def empty(dim: int = 1) -> "JumpRecord":
        return JumpRecord(np.empty(0), np.empty((0, dim)))


def _check_window(s: float, t: float) -> None:
    if not (s < t):
        raise ValueError(f"window [{s}, {t}] is degenerate; need s < t")


def sample_poisson_times(
    stream: RandomStream | np.random.Generator,
    lam: float,
    window: tuple[float, float],
) -> np.ndarray:
    """Arrival times of a rate-lam Poisson process on (s, t].

    Built from cumulative exponential interarrivals, so the count is
    Poisson(lam * (t - s)) distributed.
    """
    s, t = window
    _check_window(s, t)
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    rng = _as_generator(stream)
    times = []
    current = s
    while True:
        current += rng.exponential(1.0 / lam)
        if current > t:
            break
        times.append(current)
    return np.asarray(times, dtype=float)


def sample_conditional_times(
    stream: RandomStream | np.random.Generator,
    k: int,
    window: tuple[float, float],
) -> np.ndarray:
    """Arrival times given exactly k jumps in the window.

    The conditional law of a homogeneous Poisson process given its count is
    the order statistics of k i.i.d. uniforms on [s, t].
    """
    s, t = window
    _check_window(s, t)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return np.empty(0)
    rng = _as_generator(stream)
    return np.sort(rng.uniform(s, t, size=k))


def sample_brownian_increments(
    stream: RandomStream | np.random.Generator,
    grid: np.ndarray,
    dim: int,
) -> np.ndarray:
    """Increments dW_i ~ N(0, (t_{i+1}-t_i) I_dim) over a strictly increasing grid.

    A zero-length step yields a zero increment.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-D array with at least two points")
    dt = np.diff(grid)
    if np.any(dt < 0):
        raise ValueError("grid must be non-decreasing")
    rng = _as_generator(stream)
    z = rng.standard_normal((dt.size, dim))
    return z * np.sqrt(dt)[:, None]


def sample_marks(
    stream: RandomStream | np.random.Generator,
    k: int,
    mark_law: MarkLaw,
    eta: float | None = None,
) -> np.ndarray:
    """Draw k jump marks; every returned norm is <= eta by construction."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    bound = mark_law.eta if eta is None else float(eta)
    if mark_law.eta > bound * (1 + 1e-12):
        raise ValueError(
            f"mark law allows norms up to {mark_law.eta:.6g} > eta={bound:.6g}"
        )
    dim = mark_law.ndim
    if k == 0:
        return np.empty((0, dim))
    rng = _as_generator(stream)
    if mark_law.kind == "constant":
        return np.tile(np.asarray(mark_law.vector, dtype=float), (k, 1))
    if mark_law.kind == "uniform_ball":
        # direction uniform on the sphere, radius ~ r^(1/dim) scaling
        z = rng.standard_normal((k, dim))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = mark_law.eta * rng.uniform(0.0, 1.0, size=(k, 1)) ** (1.0 / dim)
        return z / norms * radii
    # truncated_gaussian: clip any over-norm sample back onto the eta-ball
    z = mark_law.sigma * rng.standard_normal((k, dim))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    scale = np.where(norms > mark_law.eta, np.divide(
        mark_law.eta, norms, out=np.ones_like(norms), where=norms > 0), 1.0)
    return z * scale
