"""Optimal discrete Hardy-Rellich-Birman weights and their verification suite."""

from .exactmath import (
    Rational,
    stirling_first,
    stirling_second,
    binom_rational,
    pochhammer,
    x_coeff,
    r_coeff,
    hardy_even_coeff,
    r_conjecture_check,
)
from .mpreal import Real, DEFAULT_PRECISION
from .lattice import (
    DiffExpr,
    FinSuppSeq,
    LatticeSeq,
    PowerFunc,
    shift,
    grad,
    divg,
    lap,
    midop,
    divg_pow,
    neg_lap_pow,
    half_power,
    quad_form,
    pointwise_mul,
    leibniz_div_pow,
    discrete_mvt_bounds,
)
from .weights import (
    WeightSpec,
    ExpansionTable,
    ChainReport,
    g_param,
    rho_eval,
    rho_series,
    rho_expansion_table,
    monomial_lap_series,
    lower_bound_chain,
)
from .verify import (
    AssumptionViolation,
    IdentityReport,
    AssumptionReport,
    InequalityReport,
    CutoffSpec,
    random_test_vector,
    remainder,
    identity_check,
    weighted_hardy_check,
    assumptions_check,
    inequality_check,
    criticality_probe,
    optimality_probe,
    attainability_probe,
    alpha_admissible_range,
)
from .matrices import (
    BandMatrix,
    toeplitz_power,
    dirichlet_power,
    corner_defect,
    remainder_factor,
    factorization_check,
)

__version__ = "0.1.0"
