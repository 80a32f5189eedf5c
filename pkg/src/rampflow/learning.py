"""Tabular Q-learning machinery and the metering/speed-limit reward family.

Rewards are non-positive by construction: meter agents are scored on how far
their freeway section sits from the critical density, optionally blended
with the normalised ramp queue; speed-limit agents on the section density
alone.  Team rewards combine per-agent rewards through a harmonic mean so
one badly congested section dominates the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGN_EPS = 1e-9


@dataclass
class RewardSpec:
    """Parameters of the queue-aware metering objective.

    Densities and q_max must share units with the measurements fed in
    (aggregate or per-lane, as the scenario defines them).  alpha_ctrl
    biases between freeway and ramp terms.
    """

    rho_cr: float
    rho_max: float
    q_max: float
    alpha_ctrl: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.rho_cr < self.rho_max:
            raise ValueError(
                f"need 0 < rho_cr < rho_max, got {self.rho_cr}, {self.rho_max}"
            )
        if self.q_max <= 0.0:
            raise ValueError(f"q_max must be positive, got {self.q_max}")
        if not 0.0 <= self.alpha_ctrl <= 1.0:
            raise ValueError(f"alpha_ctrl outside [0, 1]: {self.alpha_ctrl}")


@dataclass
class AdaptiveObjective:
    """Decomposition of the queue-aware objective (lower is better)."""

    value: float
    freeway_term: float  # normalised distance from critical density, in [0, 2]
    ramp_term: float  # normalised queue length, in [0, 1]
    freeway_weight: float
    ramp_weight: float


def learning_rate(visits: int) -> float:
    """Decaying step size 1 / (1 + visit count)."""
    if visits < 0:
        raise ValueError(f"visit count must be >= 0, got {visits}")
    return 1.0 / (1.0 + visits)


def local_reward(rho: float, rho_cr: float) -> float:
    """Negative distance of the section density from the critical density."""
    return -abs(rho - rho_cr)


def global_reward(rewards) -> float:
    """Harmonic-mean team reward over same-signed per-agent rewards.

    For the usual all-non-positive inputs this is minus the harmonic mean of
    the magnitudes, so the worst section dominates.  Any reward within
    SIGN_EPS of zero short-circuits to 0; mixed signs are rejected.
    """
    rewards = list(rewards)
    if not rewards:
        raise ValueError("need at least one reward")
    if any(abs(r) < SIGN_EPS for r in rewards):
        return 0.0
    if all(r < 0.0 for r in rewards):
        sign = -1.0
    elif all(r > 0.0 for r in rewards):
        sign = 1.0
    else:
        raise ValueError(f"mixed-sign rewards: {rewards}")
    inv = 0.0
    for r in rewards:
        inv += 1.0 / abs(r)
    return sign * len(rewards) / inv


class _DegenerateCounter:
    """Counts joint payoffs whose denominator collapsed to ~zero."""

    def __init__(self) -> None:
        self.count = 0

    def bump(self) -> None:
        self.count += 1

    def reset(self) -> None:
        self.count = 0


degenerate_joint_payoffs = _DegenerateCounter()


def joint_payoff(f_i: float, f_j: float) -> float:
    """Harmonic pairing 2 f_i f_j / (f_i + f_j) of two agent payoffs.

    Equal inputs map to themselves.  Degenerate pairs, where the harmonic
    form stops meaning anything, return 0 and bump a counter instead of
    blowing up: a near-zero denominator (the pole of the formula) and
    sign-disagreeing inputs (value estimates that cannot be balanced).
    """
    mixed = (f_i > SIGN_EPS and f_j < -SIGN_EPS) or (
        f_i < -SIGN_EPS and f_j > SIGN_EPS
    )
    denom = f_i + f_j
    if mixed or abs(denom) < SIGN_EPS:
        degenerate_joint_payoffs.bump()
        return 0.0
    return 2.0 * f_i * f_j / denom


def adaptive_objective(rho: float, queue: float, spec: RewardSpec) -> AdaptiveObjective:
    """Queue-aware metering objective; the agent reward is its negation.

    Both terms are normalised and weighted by the current state, so a busy
    freeway shifts attention to the density term and a filling ramp to the
    queue term.
    """
    if not 0.0 <= rho <= spec.rho_max:
        raise ValueError(f"density {rho} outside [0, {spec.rho_max}]")
    if not 0.0 <= queue <= spec.q_max:
        raise ValueError(f"queue {queue} outside [0, {spec.q_max}]")
    o_h = 2.0 * abs(rho - spec.rho_cr) / spec.rho_max
    o_r = queue / spec.q_max
    w_h = rho * spec.alpha_ctrl / spec.rho_max
    w_r = queue * (1.0 - spec.alpha_ctrl) / spec.q_max
    return AdaptiveObjective(
        value=w_h * o_h + w_r * o_r,
        freeway_term=o_h,
        ramp_term=o_r,
        freeway_weight=w_h,
        ramp_weight=w_r,
    )


def dsl_objective(rho: float, spec: RewardSpec) -> float:
    """Speed-limit agent objective: normalised distance from critical density."""
    if not 0.0 <= rho <= spec.rho_max:
        raise ValueError(f"density {rho} outside [0, {spec.rho_max}]")
    return 2.0 * abs(rho - spec.rho_cr) / spec.rho_max


@dataclass(frozen=True)
class AgentState:
    """Discretised meter-agent observation."""

    n_bin: int
    dn_bin: int
    ts_prev: int  # previous signal as an action index: 0 = green, 1 = red


@dataclass(frozen=True)
class MeterBins:
    """Equal-width binning for a meter agent's observations."""

    n_bins: int = 10
    n_max: float = 1.0  # vehicle count mapped onto the top bin
    dn_bins: int = 5
    dn_max: float = 1.0  # interval ramp inflow mapped onto the top bin

    @property
    def n_states(self) -> int:
        return self.n_bins * self.dn_bins * 2


def discretize(value: float, top: float, n_bins: int) -> int:
    """Equal-width bin index, clamped to [0, n_bins - 1]; boundaries round up."""
    if value < 0.0:
        raise ValueError(f"value must be >= 0, got {value}")
    idx = int(value / (top / n_bins))
    return min(idx, n_bins - 1)


def discretize_state(
    n_veh: float, dn_veh: float, ts_prev: int, bins: MeterBins
) -> AgentState:
    """Bin a meter agent's raw observation."""
    return AgentState(
        n_bin=discretize(n_veh, bins.n_max, bins.n_bins),
        dn_bin=discretize(dn_veh, bins.dn_max, bins.dn_bins),
        ts_prev=1 if ts_prev else 0,
    )


def state_index(state: AgentState, bins: MeterBins) -> int:
    """Flatten a meter-agent state into a table index."""
    return (state.n_bin * bins.dn_bins + state.dn_bin) * 2 + state.ts_prev


@dataclass
class QTable:
    """Sparse action-value table with per-pair visit counts.

    Unvisited pairs read as zero.  States and actions are integer indices;
    the owner defines the encoding.
    """

    n_actions: int
    values: dict[tuple[int, int], float] = field(default_factory=dict)
    visits: dict[tuple[int, int], int] = field(default_factory=dict)

    def value(self, state: int, action: int) -> float:
        return self.values.get((state, action), 0.0)

    def visit_count(self, state: int, action: int) -> int:
        return self.visits.get((state, action), 0)

    def action_values(self, state: int) -> np.ndarray:
        return np.array(
            [self.value(state, a) for a in range(self.n_actions)]
        )

    def best_action(self, state: int) -> int:
        """Greedy action, lowest index on ties."""
        return int(np.argmax(self.action_values(state)))

    def max_value(self, state: int) -> float:
        return max(self.value(state, a) for a in range(self.n_actions))

    def save(self, path) -> None:
        """Write one 'state action value visits' line per visited pair."""
        with open(path, "w") as fh:
            fh.write("# state action value visits\n")
            fh.write(f"# n_actions {self.n_actions}\n")
            for (s, a) in sorted(self.values):
                fh.write(f"{s} {a} {self.values[(s, a)]!r} {self.visits.get((s, a), 0)}\n")

    @classmethod
    def load(cls, path) -> "QTable":
        n_actions = None
        values: dict[tuple[int, int], float] = {}
        visits: dict[tuple[int, int], int] = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split()
                    if len(parts) == 2 and parts[0] == "n_actions":
                        n_actions = int(parts[1])
                    continue
                s, a, v, b = line.split()
                values[(int(s), int(a))] = float(v)
                visits[(int(s), int(a))] = int(b)
        if n_actions is None:
            raise ValueError(f"{path} has no n_actions header")
        return cls(n_actions=n_actions, values=values, visits=visits)


def td_update(
    q: QTable, state: int, action: int, reward: float, max_next: float, gamma: float
) -> None:
    """One temporal-difference step toward reward + gamma * max_next.

    The step size comes from the pair's visit count (1, 1/2, 1/3, ...);
    max_next is supplied by the caller since the three controller designs
    estimate it differently.
    """
    key = (state, action)
    alpha = learning_rate(q.visits.get(key, 0))
    old = q.values.get(key, 0.0)
    q.values[key] = old + alpha * (reward + gamma * max_next - old)
    q.visits[key] = q.visits.get(key, 0) + 1


def epsilon_greedy(
    q: QTable, state: int, epsilon: float, rng: np.random.Generator
) -> int:
    """Greedy action with probability 1 - epsilon, else uniform random."""
    if q.n_actions < 1:
        raise ValueError("empty action set")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon outside [0, 1]: {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(q.n_actions))
    return q.best_action(state)
