"""Communication-efficient distributed sparse feature selection.

Clients fit debiased L1-penalized regressions on local shards, upload only
selected coordinate indices, and the server majority-votes them into a
consensus support.  An optional federated-averaging stage refits
coefficients on the agreed columns.  Analytic evaluators reproduce the
false-positive / true-positive rate bounds and communication-cost model
behind the protocol.
"""

from .baselines import centralized_lasso_refit
from .bounds import (
    BoundCurve,
    Regime,
    bound_curve,
    fpr_upper,
    gauss_tail_two_sided,
    kl_bernoulli,
    markov_tail,
    mv_probability,
    pelekis_tail,
    post_consensus_expectations,
    sample_complexity,
    tpr_lower,
)
from .config import load_config, resolve_config
from .consensus import (
    CommLedger,
    ConsensusResult,
    Direction,
    Message,
    Phase,
    ProtocolConfig,
    ProtocolResult,
    comm_cost_model,
    fedavg_baseline_cost,
    index_bits,
    majority_vote,
    run_protocol,
    run_stage_one,
)
from .datagen import (
    Dataset,
    GroundTruth,
    Partition,
    generate_ground_truth,
    load_binary_design_csv,
    partition_rows,
    sample_dataset,
)
from .debias import DebiasedFit, build_m, debias, known_covariance_m, nodewise_regression
from .errors import (
    ClientRunError,
    ConfigError,
    DataFormatError,
    DegenerateColumnError,
    FedselectError,
    InsufficientDataError,
    ParameterError,
    ProtocolError,
    StepSizeError,
)
from .fedavg import FedAvgOptions, FedAvgState, client_update, expand_coefficients, run_fedavg
from .lasso import (
    CVResult,
    LassoFit,
    cross_validate_lambda,
    default_lambda_grid,
    estimate_sigma,
    fit_lasso,
    kkt_residual,
    kkt_scale,
    lambda_theory,
    lambda_tilde_theory,
    soft_threshold,
    to_objective_scale,
)
from .metrics import SelectionMetrics, score_regression, score_selection
from .selection import (
    FeatureSet,
    ThresholdInterval,
    default_top_k,
    r_max,
    sigma_max,
    threshold_features,
    threshold_interval,
    top_k_features,
)

__version__ = "0.1.0"
