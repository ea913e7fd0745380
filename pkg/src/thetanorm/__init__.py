"""Numerical projective-normality checks for polarized complex tori.

The library builds theta-function section bases on a torus
C^g / (tau Z^g + D Z^g), turns multiplication maps between section spaces
into evaluation matrices, certifies their numeric ranks, and assembles the
evidence into a normality verdict, including the descent to a principal
polarization and the per-block span checks on the quotient.
"""

from .errors import (
    ConsistencyError,
    DegenerateInputError,
    InconclusiveRankError,
    InvalidParameterError,
    PrecisionError,
    ThetanormError,
)
from .normality import (
    DivisorProbeResult,
    MultiplicationMapSpec,
    NormalityVerdict,
    SpanCheckResult,
    Tolerances,
    block_rho_ranks,
    divisor_subgroup_probe,
    full_check,
    kummer_span_check,
    quadric_dim,
    rho_rank,
    subgroup_span_check,
    subgroup_span_report,
)
from .precise import PreciseBlockReport, block_rho_ranks_mp, rho2_rank_mp
from .ranks import (
    EvaluationMatrix,
    RankReport,
    eval_matrix,
    numeric_rank,
    rank_report_json,
    require_conclusive,
    sample_points,
    span_rank,
)
from .theta import (
    SectionProduct,
    ThetaSection,
    TruncationPlan,
    basis_L_power,
    quasi_periodicity_residual,
    theta_eval,
    theta_values,
    translate_section,
    truncation_plan,
)
from .torus import (
    DescentData,
    KGroupElement,
    PolarizationType,
    RiemannMatrix,
    TorusPoint,
    complex_value,
    descent_data,
    h0_of_type,
    k_group_element,
    element_point,
    polarization_type,
    sample_tau,
    tau_from_json,
    tau_to_json,
    theorem_bound_holds,
    torus_point,
    weil_pairing,
    zero_point,
)

__version__ = "0.1.0"

__all__ = [
    "ThetanormError",
    "InvalidParameterError",
    "PrecisionError",
    "DegenerateInputError",
    "InconclusiveRankError",
    "ConsistencyError",
    "PolarizationType",
    "RiemannMatrix",
    "TorusPoint",
    "KGroupElement",
    "DescentData",
    "polarization_type",
    "h0_of_type",
    "theorem_bound_holds",
    "sample_tau",
    "torus_point",
    "zero_point",
    "complex_value",
    "k_group_element",
    "element_point",
    "weil_pairing",
    "descent_data",
    "tau_to_json",
    "tau_from_json",
    "ThetaSection",
    "SectionProduct",
    "TruncationPlan",
    "theta_eval",
    "theta_values",
    "basis_L_power",
    "translate_section",
    "truncation_plan",
    "quasi_periodicity_residual",
    "EvaluationMatrix",
    "RankReport",
    "eval_matrix",
    "numeric_rank",
    "require_conclusive",
    "span_rank",
    "rank_report_json",
    "sample_points",
    "Tolerances",
    "MultiplicationMapSpec",
    "NormalityVerdict",
    "SpanCheckResult",
    "DivisorProbeResult",
    "rho_rank",
    "quadric_dim",
    "PreciseBlockReport",
    "block_rho_ranks_mp",
    "rho2_rank_mp",
    "block_rho_ranks",
    "kummer_span_check",
    "subgroup_span_check",
    "subgroup_span_report",
    "divisor_subgroup_probe",
    "full_check",
    "__version__",
]
