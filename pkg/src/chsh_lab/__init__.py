"""chsh-lab: simulator, exact statistics engine, and verifier for
two-detector correlation (CHSH game) hypothesis tests, including
memory-dependent local adversaries."""

__version__ = "0.1.0"

from ._backend import backend_name, get_backend
from .harness import (
    BatchResult,
    ExperimentConfig,
    SchemaError,
    analyze_log_file,
    iter_log,
    read_log,
    run_batch,
    write_log,
)
from .stats import (
    QUANTUM_MEAN,
    AnalysisReport,
    KChshEstimate,
    MissingSettingPairError,
    NormalApproximations,
    TailProbability,
    TailQuery,
    analyze,
    azuma_hoeffding_bound,
    bernoulli_moments,
    binomial_upper_tail,
    c_statistic,
    c_value,
    chsh_pvalue,
    k_chsh_estimate,
    normal_approximations,
    observed_pvalue,
    power_beta,
    rejection_threshold,
)
from .trials import (
    LOCAL_SUCCESS_CAP,
    OUTCOMES,
    QUANTUM_CORRELATIONS,
    QUANTUM_SUCCESS_PROBABILITY,
    SETTINGS_1,
    SETTINGS_2,
    DeterministicStrategy,
    FiniteLocalModel,
    LocalComponent,
    MemoryLocalModel,
    MemoryPolicy,
    QuantumSampler,
    Strategy,
    TrialRecord,
    enumerate_deterministic_strategies,
    quantum_conditional_draw,
    simulate,
    strategy_from_json,
    strategy_to_json,
)
from .verify import (
    ChshBoundReport,
    ConditionalBoundReport,
    CountDistribution,
    DominanceVerdict,
    LambdaIndependenceReport,
    SettingsDistribution,
    conditional_bound_check,
    exact_count_distribution,
    lambda_dependent_settings_fixture,
    lambda_independence_check,
    quantum_constant_policy,
    random_local_model,
    random_memory_local_model,
    random_memory_policy,
    total_dependence_policy,
    verify_chsh_over_local_models,
    verify_dominance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
