"""Influences, derivative identities, and threshold widths on [q]^n."""

from .evaluate import (
    ClosedFormEvaluator,
    Estimate,
    ExactEvaluator,
    MonteCarloEvaluator,
    QuantileMap,
    exact_probability,
    mc_probability,
    product_weights,
    quantile_encode,
    tribes_prob_zero,
    variance_of_indicator,
)
from .functions import (
    DEFAULT_CAP,
    CapExceededError,
    FunctionFileError,
    FunctionSpec,
    PermutationGroupSpec,
    TribesVariant,
    adjacent_transpositions,
    apply_permutation,
    build_tribes,
    constant_function,
    evaluate_batch,
    evaluate_point,
    from_table,
    full_cycle,
    indicator,
    is_a_monotone,
    is_monotone_full,
    is_symmetric,
    leq_a,
    materialize_table,
    parse_function_file,
    random_zero_monotone,
    write_function_file,
)
from .influence import (
    FibreView,
    InfluenceProfile,
    KellerDiagnostic,
    ent,
    fibre_view,
    h_nonconstant,
    h_paper,
    h_variance,
    influence_bkkkl,
    influence_h,
    influence_profile,
    influence_variance,
    keller_diagnostic,
    phi_k,
)
from .measures import (
    CrossSectionParametrization,
    LineParametrization,
    SimplexMeasure,
    central_measure,
    classify_region,
    mix_st,
    mix_t,
    sample_uniform,
    sample_uniform_batch,
    second_smallest_atom,
)
from .threshold import (
    DerivativeDiagnostic,
    RegionMeasureEstimate,
    ScalingRow,
    ThresholdReport,
    cross_section_scan,
    derivative_lower_bound_ratio,
    line_width,
    region_measure,
    rm_derivative_exact,
    sweep_scaling,
)
from .verification import SuiteResult, run_suites

__version__ = "0.1.0"
