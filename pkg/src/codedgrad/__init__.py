"""Gradient coding over the reals, with straggler simulation and stability analysis."""

__version__ = "0.1.0"

from .codes import (
    ErasurePattern,
    LinearCode,
    code_from_json,
    code_to_json,
    condition_number,
    erasure_solve,
    make_gaussian_code,
    make_repetition_code,
    make_systematic_mds,
    make_vandermonde_code,
    min_distance,
)
from .errors import (
    CodedGradError,
    ConfigError,
    ConstructionError,
    InadmissibleKappaError,
    InvariantViolationError,
    ParameterError,
    UnrecoverableErasureError,
    UnrecoverableGroupError,
    UnsupportedSizeError,
)
from .ldpc import (
    LdpcCode,
    PeelingResult,
    TrialReport,
    bec_threshold,
    ldpc_from_json,
    ldpc_from_parity,
    ldpc_to_json,
    peel_decode,
    peeling_trial,
    sample_ldpc,
)
from .pipeline import (
    AchievedTriple,
    CodedChunk,
    DecodeCost,
    GradientBatch,
    PlacementPlan,
    achieved_triple,
    aggregate,
    cyclic_placement,
    decode_all,
    decode_group,
    devectorize,
    encode_worker,
    fractional_repetition_placement,
    group_gradient,
    lower_bound_load,
    matricize,
    plan_from_json,
    plan_to_json,
)
from .simulate import (
    BernoulliStragglers,
    CodedScheme,
    FixedSetStragglers,
    IgnoreStragglersScheme,
    NaiveScheme,
    ShiftedExponentialDelays,
    SimConfig,
    SimState,
    SyntheticDataset,
    TrainingTrace,
    load_dataset_csv,
    logistic_gradient,
    logistic_loss,
    make_synthetic_dataset,
    parse_simulation_config,
    run_iteration,
    run_training,
    straggler_sample,
    trace_to_csv,
    trace_to_json,
)
from .stability import (
    C,
    DEFAULT_THRESHOLD_GRID,
    GroupStabilityResult,
    StabilityReport,
    TailPoint,
    ThresholdRow,
    condition_tail_bound,
    empirical_condition_tail,
    empirical_group_stability,
    f_value,
    kappa_min,
    stability_table,
    straggler_threshold_kappa,
    table_to_csv,
    table_to_json,
    ye_abbe_report,
    ye_abbe_threshold,
)
