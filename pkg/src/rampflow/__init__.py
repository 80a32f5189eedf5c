"""Macroscopic freeway simulation with multi-agent RL ramp metering and DSLs."""

from .coordination import (
    CoordinationGraph,
    Message,
    PayoffTables,
    brute_force_oracle,
    compute_message,
    global_payoff,
    max_plus,
    node_value,
    select_action,
)
from .errors import ConfigurationError
from .fundamental import FundamentalDiagram, fd_flow
from .learning import (
    AgentState,
    MeterBins,
    QTable,
    RewardSpec,
    adaptive_objective,
    discretize_state,
    dsl_objective,
    epsilon_greedy,
    global_reward,
    joint_payoff,
    learning_rate,
    local_reward,
    td_update,
)
from .metrics import MetricsAccumulator
from .network import (
    Cell,
    Network,
    OnRamp,
    apply_speed_limit,
    region_measure,
    step,
)
from .scenarios import (
    DemandProfile,
    build_dsl_network,
    build_three_ramp_network,
    demand_at,
    dsl_scenario,
    load_scenario,
    three_ramp_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "Cell",
    "ConfigurationError",
    "CoordinationGraph",
    "DemandProfile",
    "FundamentalDiagram",
    "Message",
    "MeterBins",
    "MetricsAccumulator",
    "Network",
    "OnRamp",
    "PayoffTables",
    "QTable",
    "RewardSpec",
    "adaptive_objective",
    "apply_speed_limit",
    "brute_force_oracle",
    "build_dsl_network",
    "build_three_ramp_network",
    "compute_message",
    "demand_at",
    "discretize_state",
    "dsl_objective",
    "dsl_scenario",
    "epsilon_greedy",
    "fd_flow",
    "global_payoff",
    "global_reward",
    "joint_payoff",
    "learning_rate",
    "local_reward",
    "max_plus",
    "node_value",
    "region_measure",
    "select_action",
    "step",
    "td_update",
    "three_ramp_scenario",
]
