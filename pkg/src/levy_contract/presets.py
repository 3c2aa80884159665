"""Built-in example systems wired for the certify -> bound -> audit pipeline.

Parameter values here are repository-defined reference choices, not taken
from any external source; they are labeled as such in all outputs. Drifts
accept batched states (shape (..., n)) so ensembles can vectorize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .contraction import ContractionCertificate, SamplingPlan
from .noise import MarkLaw, NoiseBounds, constant_mark, truncated_gaussian_mark, uniform_ball_mark
from .simulate import InitLaw
from .systems import LevySystemModel, LtvSystemModel

__all__ = ["PresetInstance", "PRESET_NAMES", "build_preset"]


@dataclass
class PresetInstance:
    """Everything run_experiment needs to certify and audit one system."""

    name: str
    kind: str  # bound kind audited: white | shot | levy | shot_ltv
    model: LevySystemModel | LtvSystemModel
    alpha: float
    init_law: InitLaw
    metric_cert: ContractionCertificate | None = None
    p_matrix: Callable[[float], np.ndarray] | None = None
    basic_plan: SamplingPlan | None = None

    @property
    def is_ltv(self) -> bool:
        return isinstance(self.model, LtvSystemModel)


def _mark_law(kind: str, eta: float, dim: int, direction: np.ndarray | None = None) -> MarkLaw:
    if kind == "constant":
        if direction is None:
            vec = np.zeros(dim)
            vec[0] = eta
        else:
            d = np.asarray(direction, float)
            vec = eta * d / np.linalg.norm(d)
        return constant_mark(vec, eta)
    if kind == "uniform_ball":
        return uniform_ball_mark(eta, dim)
    if kind == "truncated_gaussian":
        return truncated_gaussian_mark(sigma=eta, eta=eta, dim=dim)
    raise ValueError(f"unknown mark kind: {kind!r}")


def _scalar_white(gamma: float, eta: float, lam: float, alpha: float,
                  mark: str) -> PresetInstance:
    a = alpha
    model = LevySystemModel(
        dim=1,
        drift=lambda t, x: -a * np.asarray(x),
        diffusion=lambda t, x: np.array([[gamma]]),
        noise=NoiseBounds(gamma, 0.0, lam),
        name="scalar_white",
    )
    cert = ContractionCertificate.constant(np.eye(1), alpha=a)
    plan = SamplingPlan((0.0, 1.0), ((-1.0, 1.0),), 11)
    return PresetInstance("scalar_white", "white", model, a, InitLaw("point", (0.0,)),
                          metric_cert=cert, basic_plan=plan)


def _scalar_shot(gamma: float, eta: float, lam: float, alpha: float,
                 mark: str) -> PresetInstance:
    a = alpha
    law = _mark_law(mark, eta, 1)
    model = LtvSystemModel(
        dim=1,
        a_matrix=lambda t: np.array([[-a]]),
        a_integral=lambda tau, t: np.array([[-a * (t - tau)]]),
        jump_signal=lambda t: law,
        noise=NoiseBounds(0.0, eta, lam),
        name="scalar_shot",
    )
    cert = ContractionCertificate.constant(np.eye(1), alpha=a)
    return PresetInstance("scalar_shot", "shot_ltv", model, a, InitLaw("point", (0.0,)),
                          metric_cert=cert,
                          p_matrix=lambda t: np.eye(1))


def _nonlinear_2d(gamma: float, eta: float, lam: float, alpha: float,
                  mark: str) -> PresetInstance:
    def drift(t, x):
        x = np.asarray(x)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([-x1 + x2**2, -x2 - x1 * x2], axis=-1)

    law = _mark_law(mark, eta, 2)
    model = LevySystemModel(
        dim=2,
        drift=drift,
        jump_law=lambda t, x: law,
        noise=NoiseBounds(0.0, eta, lam),
        name="nonlinear_2d",
    )
    cert = ContractionCertificate.constant(np.eye(2), alpha=alpha)
    # contraction certified on this box; small jumps keep paths inside
    plan = SamplingPlan((0.0, 1.0), ((-0.5, 0.5), (-0.5, 0.5)), 11)
    return PresetInstance("nonlinear_2d", "shot", model, alpha,
                          InitLaw("point", (0.1, 0.1)), metric_cert=cert,
                          basic_plan=plan)


def _tracking_1d(gamma: float, eta: float, lam: float, alpha: float,
                 mark: str) -> PresetInstance:
    a = alpha

    def drift(t, x):
        ref = 0.5 * math.sin(0.5 * t)
        return -a * (np.asarray(x) - ref)

    law = _mark_law(mark, eta, 1)
    model = LevySystemModel(
        dim=1,
        drift=drift,
        diffusion=lambda t, x: np.array([[gamma]]),
        jump_law=lambda t, x: law,
        noise=NoiseBounds(gamma, eta, lam),
        name="tracking_1d",
    )
    cert = ContractionCertificate.constant(np.eye(1), alpha=a)
    plan = SamplingPlan((0.0, 2 * math.pi), ((-1.0, 1.0),), 11)
    return PresetInstance("tracking_1d", "levy", model, a, InitLaw("point", (0.0,)),
                          metric_cert=cert, basic_plan=plan)


def _ltv_2d_diagonal(gamma: float, eta: float, lam: float, alpha: float,
                     mark: str) -> PresetInstance:
    def a_matrix(t):
        return np.array([[-1.0 - 0.5 * math.sin(t), 0.0], [0.0, -2.0]])

    def a_integral(tau, t):
        return np.array([[-(t - tau) + 0.5 * (math.cos(t) - math.cos(tau)), 0.0],
                         [0.0, -2.0 * (t - tau)]])

    law = _mark_law(mark, eta, 2)
    model = LtvSystemModel(
        dim=2,
        a_matrix=a_matrix,
        a_integral=a_integral,
        jump_signal=lambda t: law,
        noise=NoiseBounds(0.0, eta, lam),
        name="ltv_2d_diagonal",
    )
    return PresetInstance("ltv_2d_diagonal", "shot_ltv", model, alpha,
                          InitLaw("point", (0.2, 0.2)),
                          p_matrix=lambda t: np.eye(2))


def _ltv_2d_triangular(gamma: float, eta: float, lam: float, alpha: float,
                       mark: str) -> PresetInstance:
    def a_matrix(t):
        return np.array([[-1.0, 0.5 * math.sin(t)], [0.0, -2.0]])

    law = _mark_law(mark, eta, 2)
    model = LtvSystemModel(
        dim=2,
        a_matrix=a_matrix,
        jump_signal=lambda t: law,
        noise=NoiseBounds(0.0, eta, lam),
        name="ltv_2d_triangular",
    )
    return PresetInstance("ltv_2d_triangular", "shot_ltv", model, alpha,
                          InitLaw("point", (0.2, 0.2)),
                          p_matrix=lambda t: np.eye(2))


_BUILDERS = {
    "scalar_white": (_scalar_white, dict(gamma=1.0, eta=0.0, lam=1.0, alpha=1.0)),
    "scalar_shot": (_scalar_shot, dict(gamma=0.0, eta=1.0, lam=1.0, alpha=1.0)),
    "nonlinear_2d": (_nonlinear_2d, dict(gamma=0.0, eta=0.05, lam=1.0, alpha=0.35)),
    "tracking_1d": (_tracking_1d, dict(gamma=0.2, eta=0.3, lam=1.0, alpha=1.0)),
    "ltv_2d_diagonal": (_ltv_2d_diagonal, dict(gamma=0.0, eta=0.25, lam=1.0, alpha=0.5)),
    "ltv_2d_triangular": (_ltv_2d_triangular, dict(gamma=0.0, eta=0.25, lam=1.0, alpha=0.9)),
}

PRESET_NAMES = tuple(_BUILDERS) + ("custom",)


def build_preset(
    name: str,
    gamma: float | None = None,
    eta: float | None = None,
    lam: float | None = None,
    alpha: float | None = None,
    mark: str = "constant",
    condition_number: float | None = None,
) -> PresetInstance:
    """Instantiate a named preset, optionally overriding its noise parameters.

    condition_number c replaces the LTV metric with P = diag(1, c); the
    certified rate is unchanged for the built-in systems.
    """
    if name not in _BUILDERS:
        raise ValueError(
            f"unknown experiment {name!r}; allowed: {', '.join(PRESET_NAMES)}")
    builder, defaults = _BUILDERS[name]
    params = dict(defaults)
    for key, val in (("gamma", gamma), ("eta", eta), ("lam", lam), ("alpha", alpha)):
        if val is not None:
            params[key] = float(val)
    inst = builder(mark=mark, **params)
    if condition_number is not None:
        if not inst.is_ltv or inst.model.dim != 2:
            raise ValueError("condition_number applies only to the 2-D LTV presets")
        c = float(condition_number)
        if c <= 0:
            raise ValueError("condition_number must be > 0")
        inst.p_matrix = lambda t: np.diag([1.0, c])
    return inst
