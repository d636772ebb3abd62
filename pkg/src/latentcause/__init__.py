"""Causal effect estimation under an unobserved categorical confounder.

The confounder is never observed directly; its mixture structure is
recovered from conditionally independent proxies (or repeated treatments)
by spectral decomposition of low-order moments, and treatment effects are
then estimated by posterior-weighted regressions.
"""

from .benchmark import default_workers, run_benchmark, summarize
from .causal import (
    CausalEstimate,
    FeatureMap,
    OutcomeModel,
    TreatmentModel,
    custom_feature_map,
    estimate_ate,
    estimate_cate,
    fit_effects,
    fit_outcome,
    fit_treatment,
    fit_treatment_mean,
    fit_treatment_variance,
    outcome_feature_map,
    treatment_density,
    treatment_feature_map,
    update_posteriors,
)
from .dataio import (
    load_model,
    model_from_dict,
    model_to_dict,
    read_dataset,
    read_report,
    read_truth,
    save_model,
    scenario_from_dict,
    scenario_to_dict,
    truth_path,
    write_dataset,
    write_report,
    write_truth,
)
from .errors import (
    AlignmentAmbiguity,
    AllZeroLikelihood,
    DegenerateCluster,
    DegenerateSpectrum,
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    KTooLarge,
    LatentCauseError,
    NonConvergence,
    NotPSD,
    RankDeficiency,
    SingularSystem,
    UnfittedModel,
)
from .kernels import KernelSpec, gram, median_heuristic, power_rule_bandwidth
from .mixture import (
    MixtureEstimate,
    PosteriorMatrix,
    align_permutation,
    chol_psd,
    density,
    fit_discrete_multiview,
    fit_multiview,
    fit_symmetric_spectral,
    map_assign,
    posteriors,
    priors_from_lambdas,
    scree,
    scree_discrete,
    select_rank,
)
from .multitreatment import (
    MultiTreatmentModel,
    fit_multitreatment,
    mt_ate,
    mt_cate,
)
from .scenarios import (
    MultiProxyScenario,
    MultiTreatmentScenario,
    oracle_ate,
    oracle_discrete_posteriors,
    oracle_posteriors,
    simulate_multiproxy,
    simulate_multitreatment,
    three_cluster_gaussian,
    true_ate_multiproxy,
    true_ate_multitreatment,
    two_state_discrete,
)
from .tensor_spectral import (
    Moment2,
    SymTensor3,
    TensorEigenSet,
    Whitener,
    build_whitener,
    robust_power_method,
    symmetrize3,
    tensor_contract,
    top_k_eigh,
    whitened_third_moment,
)

__version__ = "0.1.0"
