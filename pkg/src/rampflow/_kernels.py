"""Hot numeric kernels, JIT-compiled with numba when available.

Set ``RAMPFLOW_NUMBA=0`` to force the pure-Python fallback (useful for
debugging and for the benchmark in ``benchmarks/bench_kernels.py``).  Both
paths run the same function body, written as explicit scalar loops so the
results are bit-identical either way.
"""

import os

import numpy as np


def numba_requested() -> bool:
    """True unless the RAMPFLOW_NUMBA env var disables acceleration."""
    return os.environ.get("RAMPFLOW_NUMBA", "1").strip().lower() not in (
        "0",
        "false",
        "off",
    )


def ctm_step_impl(
    density,  # (n,) veh/km/lane, updated in place
    length,  # (n,) km
    lanes,  # (n,) float
    speed_cap,  # (n,) km/h, <= v_ff
    v_ff,  # km/h
    wave,  # km/h, congested wave speed
    rho_jam,  # veh/km/lane
    cap_drop,  # fraction of capacity lost once a cell exceeds critical density
    merge_priority,  # mainline share of a saturated merge, in (0, 1)
    ramp_cell,  # (r,) int64
    ramp_queue,  # (r,) veh, updated in place
    ramp_overflow,  # (r,) veh waiting behind a full ramp, updated in place
    ramp_qmax,  # (r,) veh
    ramp_capacity,  # (r,) veh/h
    meter_green,  # (r,) bool
    ramp_demand,  # (r,) veh/h
    origin_demand,  # veh/h
    origin_queue,  # veh
    dt,  # h
):
    """Advance the cell-transmission state by one time step.

    Transfers between cells are computed in vehicle units from the state at
    the start of the step.  While a merge has spare supply both streams pass
    freely; once saturated the mainline keeps a merge_priority share and a
    green ramp takes the rest, so a busy ramp throttles the upstream cell
    into congestion.  Arrivals beyond a ramp's q_max spill into an unbounded
    overflow buffer (blocked surface traffic): they cannot discharge until
    space frees on the ramp, but they are never dropped.

    Returns (origin_queue, inflow_veh, outflow_veh, spill_veh,
    boundary_veh, ramp_veh) where boundary_veh[i] is the vehicle count
    crossing the upstream boundary of cell i (index n = network outflow)
    and spill_veh counts vehicles newly diverted into overflow buffers.
    """
    n = density.shape[0]
    n_ramps = ramp_cell.shape[0]

    def median3(a, b, c):
        if a > b:
            a, b = b, a
        if b > c:
            b = c
        if a > b:
            b = a
        return b

    send = np.empty(n)
    recv = np.empty(n)
    congested_prev = False
    for i in range(n):
        v = speed_cap[i]
        if v > v_ff:
            v = v_ff
        crit = wave * rho_jam / (v + wave)
        qcap = v * crit
        congested = density[i] > crit
        if congested:
            s = (1.0 - cap_drop) * qcap
        else:
            s = v * density[i]
        # Queue discharge drop: a cell at the head of (or inside) a jam
        # accepts less than capacity until the queue clears.
        rcap = qcap
        if congested or congested_prev:
            rcap = (1.0 - cap_drop) * qcap
        r = wave * (rho_jam - density[i])
        if r > rcap:
            r = rcap
        if r < 0.0:
            r = 0.0
        send[i] = s * lanes[i]
        recv[i] = r * lanes[i]
        congested_prev = congested

    ramp_at = np.full(n, -1, dtype=np.int64)
    for k in range(n_ramps):
        ramp_at[ramp_cell[k]] = k

    # Vehicle transfers across cell boundaries; boundary_veh[0] is fed by the
    # origin queue, boundary_veh[n] exits into the unrestricted sink.
    boundary_veh = np.empty(n + 1)
    ramp_veh = np.zeros(n_ramps)
    origin_avail = origin_queue + origin_demand * dt
    for i in range(n):
        up = origin_avail if i == 0 else send[i - 1] * dt
        cap = recv[i] * dt
        k = ramp_at[i]
        d_r = 0.0
        if k >= 0:
            # Queue override: a full ramp forces the meter green so a red
            # signal can delay ramp traffic but never deny it.
            go = meter_green[k] or ramp_queue[k] >= ramp_qmax[k] - 1e-9
            if go:
                d_r = ramp_queue[k] + ramp_demand[k] * dt
                rcap = ramp_capacity[k] * dt
                if rcap < d_r:
                    d_r = rcap
        if up + d_r <= cap:
            boundary_veh[i] = up
            if k >= 0:
                ramp_veh[k] = d_r
        else:
            q_main = median3(up, cap - d_r, merge_priority * cap)
            if q_main < 0.0:
                q_main = 0.0
            q_ramp = median3(d_r, cap - up, (1.0 - merge_priority) * cap)
            if q_ramp < 0.0:
                q_ramp = 0.0
            boundary_veh[i] = q_main
            if k >= 0:
                ramp_veh[k] = q_ramp
    boundary_veh[n] = send[n - 1] * dt
    origin_queue = origin_avail - boundary_veh[0]
    if origin_queue < 0.0:
        origin_queue = 0.0

    spill_veh = 0.0
    for k in range(n_ramps):
        avail = ramp_queue[k] + ramp_demand[k] * dt
        waiting = avail - ramp_veh[k] + ramp_overflow[k]
        if waiting < 0.0:
            waiting = 0.0
        if waiting > ramp_qmax[k]:
            over = waiting - ramp_qmax[k]
            q = ramp_qmax[k]
        else:
            over = 0.0
            q = waiting
        diverted = over - ramp_overflow[k]
        if diverted > 0.0:
            spill_veh += diverted
        ramp_queue[k] = q
        ramp_overflow[k] = over

    for i in range(n):
        density[i] += (boundary_veh[i] - boundary_veh[i + 1]) / (
            length[i] * lanes[i]
        )
    for k in range(n_ramps):
        m = ramp_cell[k]
        density[m] += ramp_veh[k] / (length[m] * lanes[m])

    inflow_veh = origin_demand * dt
    for k in range(n_ramps):
        inflow_veh += ramp_demand[k] * dt
    outflow_veh = boundary_veh[n]

    return origin_queue, inflow_veh, outflow_veh, spill_veh, boundary_veh, ramp_veh


def max_plus_core_impl(
    n_actions,  # (n,) int64, actions per agent
    f_local,  # (n, A) local payoffs, padded
    edge_ends,  # (e, 2) int64, unordered edges (i, j)
    f_edge,  # (e, A, A) pairwise payoffs indexed [a_i, a_j]
    max_iters,
    eps,
    normalize,  # subtract each message table's mean (keeps cyclic graphs bounded)
):
    """Synchronous max-plus message passing with anytime action tracking.

    Each round recomputes every directed message from the previous round's
    messages, then extracts a candidate joint action from the node values and
    keeps the best candidate seen so far.  Ties take the lowest action index.

    Returns (best_assignment, best_payoff, iterations, converged).
    """
    n = n_actions.shape[0]
    n_edges = edge_ends.shape[0]
    n_dir = 2 * n_edges
    max_a = f_local.shape[1]

    # CSR of directed edges incoming to each node; directed edge d < n_edges
    # runs i -> j, d >= n_edges runs j -> i of edge d - n_edges.
    in_count = np.zeros(n + 1, dtype=np.int64)
    for d in range(n_dir):
        e = d if d < n_edges else d - n_edges
        tgt = edge_ends[e, 1] if d < n_edges else edge_ends[e, 0]
        in_count[tgt + 1] += 1
    in_ptr = np.empty(n + 1, dtype=np.int64)
    in_ptr[0] = 0
    for i in range(n):
        in_ptr[i + 1] = in_ptr[i] + in_count[i + 1]
    fill = in_ptr[:-1].copy()
    in_idx = np.empty(n_dir, dtype=np.int64)
    for d in range(n_dir):
        e = d if d < n_edges else d - n_edges
        tgt = edge_ends[e, 1] if d < n_edges else edge_ends[e, 0]
        in_idx[fill[tgt]] = d
        fill[tgt] += 1

    msg = np.zeros((n_dir, max_a))
    msg_new = np.zeros((n_dir, max_a))
    values = np.empty(max_a)
    assign = np.zeros(n, dtype=np.int64)
    best_assign = np.zeros(n, dtype=np.int64)
    best_payoff = -np.inf
    converged = False
    iterations = 0

    for it in range(max_iters):
        iterations = it + 1
        delta = 0.0
        for d in range(n_dir):
            e = d if d < n_edges else d - n_edges
            if d < n_edges:
                src = edge_ends[e, 0]
                tgt = edge_ends[e, 1]
            else:
                src = edge_ends[e, 1]
                tgt = edge_ends[e, 0]
            rev = d + n_edges if d < n_edges else d - n_edges
            for aj in range(n_actions[tgt]):
                best = -np.inf
                for ai in range(n_actions[src]):
                    if d < n_edges:
                        val = f_local[src, ai] + f_edge[e, ai, aj]
                    else:
                        val = f_local[src, ai] + f_edge[e, aj, ai]
                    for p in range(in_ptr[src], in_ptr[src + 1]):
                        dd = in_idx[p]
                        if dd != rev:
                            val += msg[dd, ai]
                    if val > best:
                        best = val
                msg_new[d, aj] = best
            if normalize:
                mean = 0.0
                for aj in range(n_actions[tgt]):
                    mean += msg_new[d, aj]
                mean /= n_actions[tgt]
                for aj in range(n_actions[tgt]):
                    msg_new[d, aj] -= mean
            for aj in range(n_actions[tgt]):
                change = msg_new[d, aj] - msg[d, aj]
                if change < 0.0:
                    change = -change
                if change > delta:
                    delta = change
        for d in range(n_dir):
            for a in range(max_a):
                msg[d, a] = msg_new[d, a]

        # Candidate joint action from the node values g_i = f_i + incoming.
        for i in range(n):
            for a in range(n_actions[i]):
                g = f_local[i, a]
                for p in range(in_ptr[i], in_ptr[i + 1]):
                    g += msg[in_idx[p], a]
                values[a] = g
            best_a = 0
            for a in range(1, n_actions[i]):
                if values[a] > values[best_a]:
                    best_a = a
            assign[i] = best_a
        payoff = 0.0
        for i in range(n):
            payoff += f_local[i, assign[i]]
        for e in range(n_edges):
            payoff += f_edge[e, assign[edge_ends[e, 0]], assign[edge_ends[e, 1]]]
        if payoff > best_payoff:
            best_payoff = payoff
            for i in range(n):
                best_assign[i] = assign[i]

        if delta < eps:
            converged = True
            break

    return best_assign, best_payoff, iterations, converged


NUMBA_ACTIVE = False
if numba_requested():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        ctm_step = njit(cache=True)(ctm_step_impl)
        max_plus_core = njit(cache=True)(max_plus_core_impl)
        NUMBA_ACTIVE = True
if not NUMBA_ACTIVE:
    ctm_step = ctm_step_impl
    max_plus_core = max_plus_core_impl
