"""Coordination graphs and max-plus payoff propagation.

A joint action over n agents is scored as the sum of per-agent payoffs
f_i(a_i) and pairwise payoffs f_ij(a_i, a_j) on the graph edges.  Max-plus
approximates the maximising joint action by passing messages along the
edges; it is exact on trees and runs as an anytime method on cyclic graphs,
always returning the best candidate evaluated so far.  A brute-force
maximiser is provided as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import max_plus_core

ORACLE_SIZE_LIMIT = 10**6


@dataclass(frozen=True)
class CoordinationGraph:
    """Agents with finite action sets and undirected dependency edges."""

    n_actions: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        n = len(self.n_actions)
        if n == 0:
            raise ValueError("graph needs at least one agent")
        if any(a < 1 for a in self.n_actions):
            raise ValueError("every agent needs at least one action")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-edge at agent {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add(key)

    @property
    def n_agents(self) -> int:
        return len(self.n_actions)

    def neighbours(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out

    def is_tree(self) -> bool:
        """True when the graph has no cycle (forests count)."""
        parent = list(range(self.n_agents))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in self.edges:
            ri, rj = find(i), find(j)
            if ri == rj:
                return False
            parent[ri] = rj
        return True


@dataclass
class PayoffTables:
    """Per-agent payoff vectors and per-edge payoff matrices.

    local[i] has length n_actions[i]; joint[(i, j)] is stored once per
    unordered edge under the key used in the graph's edge list and read
    transposed in the opposite direction.
    """

    local: list[np.ndarray]
    joint: dict[tuple[int, int], np.ndarray]

    def edge_payoff(self, i: int, j: int) -> np.ndarray:
        """Payoff matrix indexed [a_i, a_j] regardless of storage order."""
        if (i, j) in self.joint:
            return self.joint[(i, j)]
        return self.joint[(j, i)].T


@dataclass
class Message:
    """Table an agent sends a neighbour: value per receiver action."""

    source: int
    target: int
    table: np.ndarray


@dataclass
class MaxPlusResult:
    assignment: tuple[int, ...]
    payoff: float
    iterations: int
    converged: bool


def compute_message(
    i: int,
    j: int,
    graph: CoordinationGraph,
    payoffs: PayoffTables,
    inbox: dict[int, np.ndarray] | None = None,
) -> Message:
    """Message from agent i to neighbour j.

    For each action of j, the best payoff i can contribute: its local payoff
    plus the edge payoff plus everything the rest of i's neighbourhood has
    reported (inbox maps neighbour -> table; absent neighbours count as
    zero).
    """
    neigh = graph.neighbours(i)
    if j not in neigh:
        raise ValueError(f"({i}, {j}) is not an edge")
    inbox = inbox or {}
    f_ij = payoffs.edge_payoff(i, j)
    base = payoffs.local[i].astype(np.float64).copy()
    for k in neigh:
        if k == j:
            continue
        if k in inbox:
            base += inbox[k]
    table = np.empty(graph.n_actions[j])
    for aj in range(graph.n_actions[j]):
        table[aj] = np.max(base + f_ij[:, aj])
    return Message(source=i, target=j, table=table)


def node_value(
    i: int,
    graph: CoordinationGraph,
    payoffs: PayoffTables,
    inbox: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Per-action value of agent i: local payoff plus incoming messages."""
    inbox = inbox or {}
    g = payoffs.local[i].astype(np.float64).copy()
    for k in graph.neighbours(i):
        if k in inbox:
            g += inbox[k]
    return g


def select_action(values: np.ndarray) -> int:
    """Index of the maximal entry, lowest index on ties."""
    if len(values) == 0:
        raise ValueError("empty value table")
    return int(np.argmax(values))


def global_payoff(assignment, graph: CoordinationGraph, payoffs: PayoffTables) -> float:
    """Total payoff of a complete joint action.

    Summed in a fixed order (agents, then edges) so repeated evaluation is
    bit-identical.
    """
    if len(assignment) != graph.n_agents:
        raise ValueError(
            f"assignment covers {len(assignment)} of {graph.n_agents} agents"
        )
    total = 0.0
    for i in range(graph.n_agents):
        total += float(payoffs.local[i][assignment[i]])
    for i, j in graph.edges:
        total += float(payoffs.edge_payoff(i, j)[assignment[i], assignment[j]])
    return total


def _pack(graph: CoordinationGraph, payoffs: PayoffTables):
    n = graph.n_agents
    max_a = max(graph.n_actions)
    n_actions = np.array(graph.n_actions, dtype=np.int64)
    f_local = np.zeros((n, max_a))
    for i in range(n):
        f_local[i, : graph.n_actions[i]] = payoffs.local[i]
    n_edges = len(graph.edges)
    edge_ends = np.zeros((max(n_edges, 1), 2), dtype=np.int64)
    f_edge = np.zeros((max(n_edges, 1), max_a, max_a))
    for e, (i, j) in enumerate(graph.edges):
        edge_ends[e, 0] = i
        edge_ends[e, 1] = j
        m = payoffs.edge_payoff(i, j)
        f_edge[e, : graph.n_actions[i], : graph.n_actions[j]] = m
    return n_actions, f_local, edge_ends[:n_edges], f_edge[:n_edges]


def max_plus(
    graph: CoordinationGraph,
    payoffs: PayoffTables,
    max_iters: int = 100,
    convergence_eps: float = 1e-6,
) -> MaxPlusResult:
    """Anytime max-plus: best joint action found over synchronous rounds.

    Every round updates all directed messages from the previous round, then
    extracts a candidate joint action and keeps the best one seen (so the
    reported payoff never decreases with more iterations).  Message tables
    are mean-normalised on cyclic graphs, which leaves the selected actions
    unchanged but keeps the values bounded.  Stops early once no message
    moves by more than convergence_eps.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    n_actions, f_local, edge_ends, f_edge = _pack(graph, payoffs)
    normalize = not graph.is_tree()
    assign, payoff, iterations, converged = max_plus_core(
        n_actions,
        f_local,
        edge_ends,
        f_edge,
        max_iters,
        convergence_eps,
        normalize,
    )
    assignment = tuple(int(a) for a in assign)
    # Re-evaluate through global_payoff so the reported value is on the same
    # float path as any external comparison.
    return MaxPlusResult(
        assignment=assignment,
        payoff=global_payoff(assignment, graph, payoffs),
        iterations=int(iterations),
        converged=bool(converged),
    )


def brute_force_oracle(
    graph: CoordinationGraph, payoffs: PayoffTables
) -> tuple[tuple[int, ...], float]:
    """Exhaustive maximisation of the global payoff.

    Ties resolve to the lexicographically smallest assignment.  Refuses
    joint action spaces above ORACLE_SIZE_LIMIT.
    """
    size = 1
    for a in graph.n_actions:
        size *= a
        if size > ORACLE_SIZE_LIMIT:
            raise ValueError(
                f"joint action space exceeds {ORACLE_SIZE_LIMIT}"
            )
    shape = tuple(graph.n_actions)
    total = np.zeros(shape)
    for i in range(graph.n_agents):
        view = [1] * graph.n_agents
        view[i] = graph.n_actions[i]
        total = total + np.asarray(payoffs.local[i]).reshape(view)
    for i, j in graph.edges:
        lo, hi = (i, j) if i < j else (j, i)
        mat = payoffs.edge_payoff(lo, hi)
        view = [1] * graph.n_agents
        view[lo] = graph.n_actions[lo]
        view[hi] = graph.n_actions[hi]
        total = total + mat.reshape(view)
    best_flat = int(np.argmax(total))
    assignment = tuple(int(x) for x in np.unravel_index(best_flat, shape))
    return assignment, global_payoff(assignment, graph, payoffs)
