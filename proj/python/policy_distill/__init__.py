"""Distillation of expert policies into interpretable softmax-linear ones."""

from ._core import (  # noqa: F401
    BoundReport,
    BoundSweepRow,
    ConfigError,
    ConventionMismatchError,
    DatasetRow,
    DistillConfig,
    Env,
    EvalReport,
    Exploration,
    ExpertTrainConfig,
    ExtraTreesConfig,
    FqiModel,
    GradResult,
    GridEncoding,
    Gridworld,
    GridworldConfig,
    LobConfig,
    MountainCarConfig,
    PendulumConfig,
    PerformanceDifference,
    PolicyTable,
    QModel,
    SoftmaxLinearPolicy,
    Standardizer,
    TabularMDP,
    TabularQModel,
    TracePoint,
    TrainingTrace,
    TrainResult,
    TrajectoryDataset,
    ValueBundle,
    ValueIterationResult,
    WeightCheck,
    WeightReport,
    advantage_from_row,
    bound_check,
    bound_sweep,
    cli_main,
    collect_trajectories,
    derive_seed,
    disadvantage,
    discounted_state_distribution,
    evaluate_expert,
    evaluate_policy,
    expected_return,
    explain_train,
    fit_standardizer,
    grad_advantage,
    grad_bc,
    imbalance_rule_agreement,
    lob_action_position,
    mountain_car_action_force,
    pendulum_action_force,
    performance_difference,
    policy_distance_inf,
    qmodel_from_json,
    solve_values,
    train_fqi_expert,
    value_iteration,
    weight_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
