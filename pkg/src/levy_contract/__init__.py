"""Simulation and empirical verification of mean-square stability bounds for
systems driven by white, shot, and combined jump noise."""

__version__ = "0.1.0"

from .bounds import (
    BoundParams,
    HFunction,
    PsiSpec,
    PsiValue,
    comparison_rhs,
    jump_cost_h,
    jump_cost_kappa,
    levy_bound,
    poisson_prob,
    poisson_truncation,
    psi_k,
    shot_bound,
    shot_ltv_bound,
    white_bound,
)
from .contraction import (
    CheckReport,
    ContractionCertificate,
    SamplingPlan,
    TransitionEnvelope,
    check_basic_contraction,
    check_riccati_tv,
    estimate_metric_constants,
    fit_transition_envelope,
)
from .noise import (
    JumpRecord,
    MarkLaw,
    NoiseBounds,
    RandomStream,
    constant_mark,
    sample_brownian_increments,
    sample_conditional_times,
    sample_marks,
    sample_poisson_times,
    truncated_gaussian_mark,
    uniform_ball_mark,
)
from .simulate import (
    InitLaw,
    IntegratorConfig,
    PairedEnsemble,
    integrate,
    integrate_ltv_exact,
    run_ensemble,
)
from .systems import (
    LevySystemModel,
    LtvSystemModel,
    SamplePath,
    nominal_of,
    transition_matrix,
)
from .verify import (
    AuditReport,
    ConditionalMseEstimate,
    audit_bound,
    check_incremental_decay,
    estimate_conditional_mse,
)
