"""Python access to the fcml simulation and analysis core."""

from ._core import (
    ConverterParams,
    DivergenceError,
    InfeasibleError,
    RankReport,
    ValidationError,
    alpha_stability_limit,
    balanced_voltages,
    beta_max,
    carrier_value,
    dead_duty_set,
    default_config_json,
    feedback_update,
    feedforward_update,
    full_rank_feasibility,
    n_dis,
    pole_voltage,
    run_scenario,
    select_ms,
    stacked_rank,
    switch_states,
    switch_stress,
    switching_sequence,
    system_matrix,
    system_matrix_eigenvalues,
)

__all__ = [
    "ConverterParams",
    "DivergenceError",
    "InfeasibleError",
    "RankReport",
    "ValidationError",
    "alpha_stability_limit",
    "balanced_voltages",
    "beta_max",
    "carrier_value",
    "dead_duty_set",
    "default_config_json",
    "feedback_update",
    "feedforward_update",
    "full_rank_feasibility",
    "n_dis",
    "pole_voltage",
    "run_scenario",
    "select_ms",
    "stacked_rank",
    "switch_states",
    "switch_stress",
    "switching_sequence",
    "system_matrix",
    "system_matrix_eigenvalues",
]
