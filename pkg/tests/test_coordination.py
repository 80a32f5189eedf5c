import itertools

import numpy as np
import pytest

from rampflow import (
    CoordinationGraph,
    PayoffTables,
    brute_force_oracle,
    compute_message,
    global_payoff,
    max_plus,
    node_value,
    select_action,
)


def two_agent_example():
    graph = CoordinationGraph(n_actions=(2, 2), edges=((0, 1),))
    payoffs = PayoffTables(
        local=[np.zeros(2), np.zeros(2)],
        joint={(0, 1): np.array([[1.0, 0.0], [0.0, 2.0]])},
    )
    return graph, payoffs


def random_graph(rng, tree: bool):
    n = int(rng.integers(2, 9)) if tree else int(rng.integers(3, 9))
    actions = tuple(int(rng.integers(2, 5)) for _ in range(n))
    if tree:
        edges = tuple(
            (int(rng.integers(0, i)), i) for i in range(1, n)
        )
    else:
        edges = {(i, (i + 1) % n) if i + 1 < n else (0, i) for i in range(n)}
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        edges.add((i, j))
        edges = tuple(sorted(edges))
    local = [rng.uniform(-10.0, 10.0, size=a) for a in actions]
    joint = {
        (i, j): rng.uniform(-10.0, 10.0, size=(actions[i], actions[j]))
        for i, j in edges
    }
    return CoordinationGraph(n_actions=actions, edges=edges), PayoffTables(
        local=local, joint=joint
    )


def enumerate_best(graph, payoffs):
    """Independent pure-Python exhaustive maximiser (test-side oracle)."""
    best_a, best_v = None, -np.inf
    for assignment in itertools.product(*(range(a) for a in graph.n_actions)):
        v = global_payoff(assignment, graph, payoffs)
        if v > best_v:
            best_a, best_v = assignment, v
    return best_a, best_v


def test_message_all_zero_payoffs_is_zero():
    graph, _ = two_agent_example()
    payoffs = PayoffTables(
        local=[np.zeros(2), np.zeros(2)], joint={(0, 1): np.zeros((2, 2))}
    )
    msg = compute_message(0, 1, graph, payoffs)
    assert np.array_equal(msg.table, np.zeros(2))


def test_message_two_agent_example():
    graph, payoffs = two_agent_example()
    msg = compute_message(0, 1, graph, payoffs)
    assert msg.source == 0 and msg.target == 1
    assert np.array_equal(msg.table, np.array([1.0, 2.0]))


def test_message_shifts_by_constant_added_to_local_payoff():
    graph, payoffs = two_agent_example()
    base = compute_message(0, 1, graph, payoffs).table
    shifted_payoffs = PayoffTables(
        local=[payoffs.local[0] + 3.25, payoffs.local[1]],
        joint=payoffs.joint,
    )
    shifted = compute_message(0, 1, graph, shifted_payoffs).table
    assert np.allclose(shifted, base + 3.25)


def test_message_uses_inbox_except_reverse_direction():
    graph = CoordinationGraph(n_actions=(2, 2, 2), edges=((0, 1), (1, 2)))
    payoffs = PayoffTables(
        local=[np.zeros(2), np.array([1.0, 0.0]), np.zeros(2)],
        joint={(0, 1): np.zeros((2, 2)), (1, 2): np.array([[0.0, 1.0], [2.0, 0.0]])},
    )
    inbox = {0: np.array([0.0, 5.0])}
    msg = compute_message(1, 2, graph, payoffs, inbox)
    # a_2 = 0: max(1+0+0, 0+2+5) = 7 ; a_2 = 1: max(1+1+0, 0+0+5) = 5
    assert np.array_equal(msg.table, np.array([7.0, 5.0]))


def test_message_rejects_non_edge():
    graph = CoordinationGraph(n_actions=(2, 2, 2), edges=((0, 1),))
    payoffs = PayoffTables(
        local=[np.zeros(2)] * 3, joint={(0, 1): np.zeros((2, 2))}
    )
    with pytest.raises(ValueError):
        compute_message(0, 2, graph, payoffs)


def test_node_value_isolated_agent_is_local_payoff():
    graph = CoordinationGraph(n_actions=(3,), edges=())
    payoffs = PayoffTables(local=[np.array([1.0, -2.0, 0.5])], joint={})
    assert np.array_equal(node_value(0, graph, payoffs), payoffs.local[0])


def test_node_value_zero_local_passes_message_through():
    graph = CoordinationGraph(n_actions=(2, 2), edges=((0, 1),))
    payoffs = PayoffTables(
        local=[np.zeros(2), np.zeros(2)], joint={(0, 1): np.zeros((2, 2))}
    )
    m = np.array([4.0, -1.0])
    assert np.array_equal(node_value(1, graph, payoffs, {0: m}), m)


def test_node_value_sums_messages_elementwise():
    graph = CoordinationGraph(n_actions=(2, 2, 2), edges=((0, 1), (1, 2)))
    payoffs = PayoffTables(
        local=[np.zeros(2), np.array([1.0, 0.0]), np.zeros(2)],
        joint={(0, 1): np.zeros((2, 2)), (1, 2): np.zeros((2, 2))},
    )
    inbox = {0: np.array([0.0, 3.0]), 2: np.array([2.0, 0.0])}
    assert np.array_equal(node_value(1, graph, payoffs, inbox), np.array([3.0, 3.0]))


def test_select_action_examples():
    assert select_action(np.array([0.0, 5.0, 1.0])) == 1
    assert select_action(np.array([2.0, 2.0])) == 0
    assert select_action(np.array([3.0, 3.0])) == 0
    with pytest.raises(ValueError):
        select_action(np.array([]))


def test_global_payoff_examples():
    graph, payoffs = two_agent_example()
    assert global_payoff((0, 0), graph, payoffs) == 1.0
    assert global_payoff((1, 1), graph, payoffs) == 2.0
    zero = PayoffTables(
        local=[np.zeros(2), np.zeros(2)], joint={(0, 1): np.zeros((2, 2))}
    )
    for a in itertools.product(range(2), repeat=2):
        assert global_payoff(a, graph, zero) == 0.0
    single = CoordinationGraph(n_actions=(1,), edges=())
    assert global_payoff((0,), single, PayoffTables(local=[np.array([4.0])], joint={})) == 4.0
    with pytest.raises(ValueError):
        global_payoff((0,), graph, payoffs)


def test_max_plus_two_agent_example_matches_oracle():
    graph, payoffs = two_agent_example()
    res = max_plus(graph, payoffs)
    assert res.assignment == (1, 1)
    assert res.payoff == 2.0
    assert res.converged
    assert brute_force_oracle(graph, payoffs) == ((1, 1), 2.0)


def test_max_plus_single_node_is_argmax():
    graph = CoordinationGraph(n_actions=(4,), edges=())
    payoffs = PayoffTables(local=[np.array([0.5, -1.0, 3.0, 3.0])], joint={})
    res = max_plus(graph, payoffs)
    assert res.assignment == (2,)
    assert res.payoff == 3.0
    assert res.converged and res.iterations == 1


def test_max_plus_zero_payoff_cycle_converges_immediately():
    graph = CoordinationGraph(n_actions=(2, 2, 2), edges=((0, 1), (1, 2), (0, 2)))
    payoffs = PayoffTables(
        local=[np.zeros(2)] * 3,
        joint={e: np.zeros((2, 2)) for e in graph.edges},
    )
    res = max_plus(graph, payoffs)
    assert res.payoff == 0.0
    assert res.converged
    assert res.iterations == 1


def test_max_plus_exact_on_random_trees():
    rng = np.random.default_rng(42)
    for _ in range(200):
        graph, payoffs = random_graph(rng, tree=True)
        res = max_plus(graph, payoffs)
        _, best = brute_force_oracle(graph, payoffs)
        assert res.payoff == best
        assert res.converged


def test_max_plus_anytime_payoff_nondecreasing_in_iteration_budget():
    rng = np.random.default_rng(11)
    for _ in range(30):
        graph, payoffs = random_graph(rng, tree=False)
        payoffs_at = [
            max_plus(graph, payoffs, max_iters=k).payoff for k in range(1, 12)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(payoffs_at, payoffs_at[1:]))


def test_max_plus_never_beats_brute_force_on_cycles():
    rng = np.random.default_rng(5)
    for _ in range(100):
        graph, payoffs = random_graph(rng, tree=False)
        res = max_plus(graph, payoffs)
        _, best = brute_force_oracle(graph, payoffs)
        assert res.payoff <= best + 1e-12


def test_constant_shift_changes_payoff_not_assignment():
    rng = np.random.default_rng(9)
    for _ in range(50):
        graph, payoffs = random_graph(rng, tree=bool(rng.integers(0, 2)))
        c = 7.5
        shifted = PayoffTables(
            local=[f + c for f in payoffs.local],
            joint={k: v + c for k, v in payoffs.joint.items()},
        )
        base = max_plus(graph, payoffs)
        moved = max_plus(graph, shifted)
        assert moved.assignment == base.assignment
        total_constant = c * (graph.n_agents + len(graph.edges))
        assert moved.payoff == pytest.approx(base.payoff + total_constant, abs=1e-9)


def test_messages_stay_bounded_over_many_iterations_on_cycles():
    # Mean-normalised message iteration must not blow up on a cyclic graph.
    rng = np.random.default_rng(3)
    graph, payoffs = random_graph(rng, tree=False)
    res = max_plus(graph, payoffs, max_iters=10_000, convergence_eps=0.0)
    assert np.isfinite(res.payoff)
    assert res.iterations == 10_000

    # Same claim at the public-op level: normalised synchronous rounds keep
    # every message finite and bounded.
    inboxes = {
        i: {j: np.zeros(graph.n_actions[i]) for j in graph.neighbours(i)}
        for i in range(graph.n_agents)
    }
    bound = 0.0
    for _ in range(300):
        new_inboxes = {i: {} for i in range(graph.n_agents)}
        for i, j in graph.edges:
            for src, tgt in ((i, j), (j, i)):
                msg = compute_message(src, tgt, graph, payoffs, inboxes[src])
                table = msg.table - msg.table.mean()
                new_inboxes[tgt][src] = table
                bound = max(bound, float(np.max(np.abs(table))))
        inboxes = new_inboxes
    assert bound < 1e3


def test_brute_force_matches_pure_python_enumeration():
    rng = np.random.default_rng(21)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        actions = tuple(int(rng.integers(1, 4)) for _ in range(n))
        edges = tuple(
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.5
        )
        payoffs = PayoffTables(
            local=[rng.uniform(-10, 10, size=a) for a in actions],
            joint={
                (i, j): rng.uniform(-10, 10, size=(actions[i], actions[j]))
                for i, j in edges
            },
        )
        graph = CoordinationGraph(n_actions=actions, edges=edges)
        got = brute_force_oracle(graph, payoffs)
        want = enumerate_best(graph, payoffs)
        assert got[0] == want[0]
        assert got[1] == want[1]


def test_brute_force_ties_break_lexicographically():
    graph = CoordinationGraph(n_actions=(2, 2), edges=())
    payoffs = PayoffTables(local=[np.zeros(2), np.zeros(2)], joint={})
    assignment, payoff = brute_force_oracle(graph, payoffs)
    assert assignment == (0, 0)
    assert payoff == 0.0


def test_brute_force_refuses_huge_spaces():
    graph = CoordinationGraph(n_actions=(10,) * 7, edges=())
    payoffs = PayoffTables(local=[np.zeros(10)] * 7, joint={})
    with pytest.raises(ValueError):
        brute_force_oracle(graph, payoffs)


def test_max_plus_is_deterministic():
    rng = np.random.default_rng(17)
    graph, payoffs = random_graph(rng, tree=False)
    a = max_plus(graph, payoffs)
    b = max_plus(graph, payoffs)
    assert a == b


def test_graph_validation():
    with pytest.raises(ValueError):
        CoordinationGraph(n_actions=(), edges=())
    with pytest.raises(ValueError):
        CoordinationGraph(n_actions=(2, 2), edges=((0, 0),))
    with pytest.raises(ValueError):
        CoordinationGraph(n_actions=(2, 2), edges=((0, 2),))
    with pytest.raises(ValueError):
        CoordinationGraph(n_actions=(2, 2), edges=((0, 1), (1, 0)))
    with pytest.raises(ValueError):
        max_plus(*two_agent_example(), max_iters=0)


def test_neighbours_are_symmetric():
    graph = CoordinationGraph(n_actions=(2, 2, 2), edges=((0, 1), (1, 2)))
    for i in range(3):
        for j in graph.neighbours(i):
            assert i in graph.neighbours(j)


def test_tree_detection():
    assert CoordinationGraph(n_actions=(2, 2, 2), edges=((0, 1), (1, 2))).is_tree()
    assert not CoordinationGraph(
        n_actions=(2, 2, 2), edges=((0, 1), (1, 2), (0, 2))
    ).is_tree()
