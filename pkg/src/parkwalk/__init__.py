"""Probabilistic parking on a line: simulation, exact analytics and Catalan combinatorics."""

from .analytics import (
    Mode,
    ProbabilityValue,
    SeriesResult,
    bounded_path_count,
    catalan_convolution,
    exact_joint_law,
    expected_time_via_paths,
    open_expected_time_all,
    open_expected_time_all_half,
    open_expected_time_single,
    open_prob_all,
    open_prob_single,
    ruin_path_count,
    unbounded_expected_time,
    unbounded_prob_all,
    unbounded_prob_series,
    unbounded_prob_single,
    unbounded_variance,
    verify_open_time_solution,
)
from .catalan import (
    asymptotic_estimate,
    conditional_monotonicity_check,
    count_wipf_entry,
    expected_last_entry,
    expected_lucky,
    identity_checks,
    last_entry_distribution,
    lucky_count_distribution,
    lucky_set_probability,
)
from .core import (
    Classification,
    ClassicalResult,
    DomainError,
    PreferenceList,
    ValidationError,
    classical_park,
    classify,
    displacement,
    dyck_returns,
    dyck_to_wipf,
    is_identity_outcome,
    is_parking_function,
    mirror,
    wipf_to_dyck,
)
from .engine import (
    KERNEL,
    BatchStats,
    Boundary,
    ProtocolOutcome,
    Terminal,
    TrajectoryRecord,
    WalkParameters,
    batch_simulate,
    run_protocol,
    walk_one_car,
)
from .experiments import (
    CorrelationReport,
    HeatmapGrid,
    Verdict,
    chernoff_check,
    correlation_test,
    formula_cross_validation,
    heatmap,
)
from .samplers import Family, SamplerConfig, empirical_wipf_checks, sample

__version__ = "0.1.0"
