"""Thompson-sampling contextual bandits over exact and approximate posteriors,
with synthetic and dataset environments and a benchmark harness."""

from .core import (
    Agent,
    ContractViolation,
    Environment,
    ExperimentReport,
    HistoryBuffer,
    Observation,
    RegretTrace,
    UniformAgent,
    cumulative_regret,
    normalize_report,
    regret_curve,
    run_experiment,
    run_trial,
    simple_regret,
    standard_error,
)
from .envs import (
    ConstantFeatureEnv,
    DatasetBandit,
    DatasetSpec,
    LinearConfig,
    SampledLinearBandit,
    WheelBandit,
    WheelConfig,
    dataset_load,
    jester_env,
    mushroom_env,
    shuffle_for_trial,
)
from .linear import (
    FixedNoiseLinearPosterior,
    LinearGreedyAgent,
    LinearThompsonAgent,
    NIGLinearPosterior,
    PerActionLinearModel,
)
from .mlp import MLP, RMSProp, TrainingSchedule, mlp_forward, mlp_init
from .neural import (
    BootstrapAgent,
    DropoutAgent,
    NeuralGreedyAgent,
    NeuralLinearAgent,
    ParameterNoiseAgent,
)
from .presets import PRESETS, get_preset, list_presets
from .samplers import (
    BayesByBackpropAgent,
    ConstSGDAgent,
    FisherEMA,
    SGFSAgent,
    VariationalNet,
    bbb_loss_and_grads,
    const_sgd_step,
    sgfs_step,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "BayesByBackpropAgent",
    "BootstrapAgent",
    "ConstSGDAgent",
    "ContractViolation",
    "ConstantFeatureEnv",
    "DatasetBandit",
    "DatasetSpec",
    "DropoutAgent",
    "Environment",
    "ExperimentReport",
    "FisherEMA",
    "FixedNoiseLinearPosterior",
    "HistoryBuffer",
    "LinearConfig",
    "LinearGreedyAgent",
    "LinearThompsonAgent",
    "MLP",
    "NIGLinearPosterior",
    "NeuralGreedyAgent",
    "NeuralLinearAgent",
    "Observation",
    "PRESETS",
    "ParameterNoiseAgent",
    "PerActionLinearModel",
    "RMSProp",
    "RegretTrace",
    "SGFSAgent",
    "SampledLinearBandit",
    "TrainingSchedule",
    "UniformAgent",
    "VariationalNet",
    "WheelBandit",
    "WheelConfig",
    "bbb_loss_and_grads",
    "const_sgd_step",
    "cumulative_regret",
    "dataset_load",
    "get_preset",
    "jester_env",
    "list_presets",
    "mlp_forward",
    "mlp_init",
    "mushroom_env",
    "normalize_report",
    "regret_curve",
    "run_experiment",
    "run_trial",
    "sgfs_step",
    "shuffle_for_trial",
    "simple_regret",
    "standard_error",
    "uniform_agent",
]

from .core import uniform_agent  # noqa: E402  (re-export)
