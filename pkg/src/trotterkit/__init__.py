"""trotterkit: Suzuki-Trotter schemes, multi-operator splitting, and
zero-factorized Taylor/Chebyshev matrix exponentials."""

from .bench import (
    BenchmarkRecord,
    BenchPlan,
    emit_records,
    matched_cost_errors,
    run_benchmark,
    stability_probe,
)
from .errors import (
    CapacityError,
    ConsistencyError,
    ConvergenceError,
    DegenerateDrawError,
    DimensionError,
    GridUnusableError,
    NotFoundError,
    RangeError,
    StructuralError,
    TrotterkitError,
)
from .multistage import (
    MultiStageScheme,
    OperatorSplit,
    apply_multistage,
    apply_two_stage,
    evolve,
    multistage_order,
    reconstruct_two_stage,
    to_multistage,
)
from .polyexp import (
    FactorizedPolynomial,
    SeriesSpec,
    bessel,
    chebyshev_admissible_k,
    chebyshev_coefficients,
    chebyshev_zeros,
    eval_factorized,
    eval_summed,
    factorize,
    r_valid,
    suggest_gamma,
    taylor_cutoff,
    taylor_zeros,
)
from .schemes import (
    EfficiencyScore,
    ErrorCoefficients,
    TwoStageScheme,
    ValidationReport,
    efficiency,
    empirical_order,
    estimate_error_coefficients,
    get_scheme,
    load_catalog,
    validate_consistency,
)
from .spinmodel import (
    EvolutionError,
    XxzConfig,
    bond_coloring,
    build_xxz,
    exact_evolution,
    frobenius_error,
    make_expm_hook,
    xxz_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BenchPlan",
    "BenchmarkRecord",
    "CapacityError",
    "ConsistencyError",
    "ConvergenceError",
    "DegenerateDrawError",
    "DimensionError",
    "EfficiencyScore",
    "ErrorCoefficients",
    "EvolutionError",
    "FactorizedPolynomial",
    "GridUnusableError",
    "MultiStageScheme",
    "NotFoundError",
    "OperatorSplit",
    "RangeError",
    "SeriesSpec",
    "StructuralError",
    "TrotterkitError",
    "TwoStageScheme",
    "ValidationReport",
    "XxzConfig",
    "apply_multistage",
    "apply_two_stage",
    "bessel",
    "bond_coloring",
    "build_xxz",
    "chebyshev_admissible_k",
    "chebyshev_coefficients",
    "chebyshev_zeros",
    "efficiency",
    "emit_records",
    "empirical_order",
    "estimate_error_coefficients",
    "eval_factorized",
    "eval_summed",
    "evolve",
    "exact_evolution",
    "factorize",
    "frobenius_error",
    "get_scheme",
    "load_catalog",
    "make_expm_hook",
    "matched_cost_errors",
    "multistage_order",
    "r_valid",
    "reconstruct_two_stage",
    "run_benchmark",
    "stability_probe",
    "suggest_gamma",
    "taylor_cutoff",
    "taylor_zeros",
    "to_multistage",
    "validate_consistency",
    "xxz_spectrum",
]
