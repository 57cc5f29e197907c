"""Python access to the flowmm core: market simulation, experts, metrics,
flow-policy checkpoints and the command-line pipeline."""

from ._core import (
    ConfigError,
    DomainError,
    EnvConfig,
    ExpertConfig,
    FlowmmError,
    FlowPolicyParams,
    FormatError,
    MarketParams,
    PreconditionError,
    as_quotes,
    cumulative_return,
    dataset_info,
    episode_seed,
    fbm_covariance,
    fbm_increments,
    glft_drift_quotes,
    glft_quotes,
    init_flow_params,
    max_drawdown,
    run_cli,
    run_expert_episode,
    sharpe_ratio,
    simulate_hawkes,
    simulate_midprice,
    window_features,
)

__all__ = [name for name in dir() if not name.startswith("_")]
