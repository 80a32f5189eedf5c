"""The three multi-agent control architectures over tabular Q-learning.

All controllers share one interface: ``act`` maps a list of per-agent state
indices to a list of actions, ``update`` applies one temporal-difference
step.  They differ in how much the agents share:

* independent - each agent learns from its own reward and picks its own
  action, no communication;
* max-plus coordinated - per-agent tables, but the joint action and the
  bootstrap value come from max-plus over a coordination graph whose edge
  payoffs harmonically pair the agents' Q-values, and all agents share the
  harmonic team reward;
* centralized - a single table over the joint state and joint action space.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .coordination import (
    CoordinationGraph,
    MaxPlusResult,
    PayoffTables,
    global_payoff,
    max_plus,
)
from .errors import ConfigurationError
from .learning import QTable, global_reward, joint_payoff, learning_rate, td_update

JOINT_SIZE_LIMIT = 10**8


def encode_mixed_radix(values, sizes) -> int:
    idx = 0
    for v, s in zip(values, sizes):
        idx = idx * s + v
    return idx


def decode_mixed_radix(index: int, sizes) -> list[int]:
    out = [0] * len(sizes)
    for i in range(len(sizes) - 1, -1, -1):
        out[i] = index % sizes[i]
        index //= sizes[i]
    return out


class IndependentController:
    """One Q-table per agent; local rewards, local greedy actions."""

    kind = "independent"

    def __init__(self, action_counts, state_counts, gamma: float = 0.9):
        self.action_counts = list(action_counts)
        self.state_counts = list(state_counts)
        self.gamma = gamma
        self.tables = [QTable(n_actions=a) for a in self.action_counts]

    @property
    def n_agents(self) -> int:
        return len(self.action_counts)

    def act(self, states, epsilon: float, rng: np.random.Generator) -> list[int]:
        actions = []
        for q, s in zip(self.tables, states):
            if rng.random() < epsilon:
                actions.append(int(rng.integers(q.n_actions)))
            else:
                actions.append(q.best_action(s))
        return actions

    def update(self, states, actions, rewards, next_states) -> None:
        for q, s, a, r, s2 in zip(self.tables, states, actions, rewards, next_states):
            td_update(q, s, a, r, q.max_value(s2), self.gamma)

    def save(self, out_dir: str) -> None:
        for i, q in enumerate(self.tables):
            q.save(os.path.join(out_dir, f"qtable_{self.kind}_{i}.txt"))

    def load(self, out_dir: str) -> None:
        self.tables = [
            QTable.load(os.path.join(out_dir, f"qtable_{self.kind}_{i}.txt"))
            for i in range(self.n_agents)
        ]


class MaxPlusController(IndependentController):
    """Per-agent tables coordinated through max-plus message passing.

    Local payoffs are the agents' current Q-value slices, edge payoffs their
    harmonic pairing.  Exploration is joint: with probability epsilon one
    uniformly random joint action replaces the max-plus choice.  Updates
    share a single TD error built from the harmonic team reward and the
    max-plus estimate of the best next joint value.
    """

    kind = "maxplus"

    def __init__(
        self,
        action_counts,
        state_counts,
        edges,
        gamma: float = 0.9,
        max_iters: int = 100,
        convergence_eps: float = 1e-6,
    ):
        super().__init__(action_counts, state_counts, gamma)
        self.graph = CoordinationGraph(
            n_actions=tuple(self.action_counts), edges=tuple(edges)
        )
        self.max_iters = max_iters
        self.convergence_eps = convergence_eps

    def payoffs_for(self, states) -> PayoffTables:
        local = [
            q.action_values(s) for q, s in zip(self.tables, states)
        ]
        joint = {}
        for i, j in self.graph.edges:
            m = np.empty((self.action_counts[i], self.action_counts[j]))
            for ai in range(self.action_counts[i]):
                for aj in range(self.action_counts[j]):
                    m[ai, aj] = joint_payoff(local[i][ai], local[j][aj])
            joint[(i, j)] = m
        return PayoffTables(local=local, joint=joint)

    def plan(self, states) -> tuple[MaxPlusResult, PayoffTables]:
        payoffs = self.payoffs_for(states)
        result = max_plus(
            self.graph, payoffs, self.max_iters, self.convergence_eps
        )
        return result, payoffs

    def act(self, states, epsilon: float, rng: np.random.Generator) -> list[int]:
        if rng.random() < epsilon:
            flat = int(rng.integers(math.prod(self.action_counts)))
            return decode_mixed_radix(flat, self.action_counts)
        result, _ = self.plan(states)
        return list(result.assignment)

    def update(self, states, actions, rewards, next_states) -> None:
        team_reward = global_reward(rewards)
        payoffs_now = self.payoffs_for(states)
        value_taken = global_payoff(tuple(actions), self.graph, payoffs_now)
        next_best, _ = self.plan(next_states)
        delta = team_reward + self.gamma * next_best.payoff - value_taken
        for q, s, a in zip(self.tables, states, actions):
            key = (s, a)
            alpha = learning_rate(q.visits.get(key, 0))
            q.values[key] = q.values.get(key, 0.0) + alpha * delta
            q.visits[key] = q.visits.get(key, 0) + 1


class CentralizedController:
    """A single Q-table over the joint state and joint action space."""

    kind = "centralized"

    def __init__(self, action_counts, state_counts, gamma: float = 0.9):
        self.action_counts = list(action_counts)
        self.state_counts = list(state_counts)
        self.gamma = gamma
        pairs = math.prod(self.state_counts) * math.prod(self.action_counts)
        if pairs > JOINT_SIZE_LIMIT:
            raise ConfigurationError(
                f"joint table would hold {pairs} state-action pairs "
                f"(limit {JOINT_SIZE_LIMIT}); use a distributed design"
            )
        self.table = QTable(n_actions=math.prod(self.action_counts))

    @property
    def n_agents(self) -> int:
        return len(self.action_counts)

    def joint_state(self, states) -> int:
        return encode_mixed_radix(states, self.state_counts)

    def act(self, states, epsilon: float, rng: np.random.Generator) -> list[int]:
        s = self.joint_state(states)
        if rng.random() < epsilon:
            flat = int(rng.integers(self.table.n_actions))
        else:
            flat = self.table.best_action(s)
        return decode_mixed_radix(flat, self.action_counts)

    def update(self, states, actions, rewards, next_states) -> None:
        team_reward = global_reward(rewards)
        s = self.joint_state(states)
        s2 = self.joint_state(next_states)
        a = encode_mixed_radix(actions, self.action_counts)
        td_update(self.table, s, a, team_reward, self.table.max_value(s2), self.gamma)

    def save(self, out_dir: str) -> None:
        self.table.save(os.path.join(out_dir, f"qtable_{self.kind}_0.txt"))

    def load(self, out_dir: str) -> None:
        self.table = QTable.load(
            os.path.join(out_dir, f"qtable_{self.kind}_0.txt")
        )
