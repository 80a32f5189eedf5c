"""Episode loop and the train / evaluate / compare / sweep drivers.

An episode walks the scenario horizon one control interval at a time:
observe discretised agent states, pick meter signals and speed levels, run
the intervening simulation steps, then reward the agents on the end-of-
interval measurements.  Everything is seeded; identical seeds give
byte-identical output files.
"""

from __future__ import annotations

import copy
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .controllers import (
    CentralizedController,
    IndependentController,
    MaxPlusController,
)
from .coordination import brute_force_oracle
from .errors import ConfigurationError
from .learning import (
    adaptive_objective,
    discretize,
    discretize_state,
    dsl_objective,
    local_reward,
    state_index,
)
from .metrics import MetricsAccumulator, region_travel_time, write_csv
from .network import apply_speed_limit, measure_range, step
from .scenarios import MeterAgentSpec, ScenarioConfig, demand_at


@dataclass
class EpisodeResult:
    metrics: MetricsAccumulator
    cum_reward: float  # summed mean per-agent reward over the horizon
    trace: list = field(default_factory=list)
    region_time: dict = field(default_factory=dict)  # tag -> mean traverse h
    oracle_mismatches: int = 0
    oracle_checks: int = 0

    @property
    def tts(self) -> float:
        return self.metrics.tts


def make_controller(cfg: ScenarioConfig, name: str):
    """Instantiate the architecture registered under this controller name."""
    agents = cfg.agents_for(name)
    architecture = cfg.controllers[name]
    if architecture == "none":
        return None
    actions = [a.n_actions for a in agents]
    states = [a.n_states for a in agents]
    if architecture == "independent":
        return IndependentController(actions, states, cfg.gamma)
    if architecture == "maxplus":
        return MaxPlusController(actions, states, cfg.edges, cfg.gamma)
    if architecture == "centralized":
        return CentralizedController(actions, states, cfg.gamma)
    raise ConfigurationError(f"unknown architecture {architecture!r}")


def _observe(cfg, net, agents, interval_ramp_veh, prev_actions):
    states = []
    for spec, prev in zip(agents, prev_actions):
        if isinstance(spec, MeterAgentSpec):
            n_veh, _ = measure_range(net, *spec.region)
            dn = interval_ramp_veh[spec.ramp]
            states.append(
                state_index(discretize_state(n_veh, dn, prev, spec.bins), spec.bins)
            )
        else:
            _, rho_lane = measure_range(net, *spec.region)
            rho_bin = discretize(rho_lane, net.fd.rho_jam, spec.density_bins)
            states.append(rho_bin * spec.n_actions + prev)
    return states


def _rewards(cfg, net, agents):
    rewards = []
    for spec in agents:
        _, rho_lane = measure_range(net, *spec.region)
        if isinstance(spec, MeterAgentSpec):
            if cfg.reward_kind == "critical_density":
                rewards.append(
                    local_reward(rho_lane * cfg.density_scale, cfg.reward_spec.rho_cr)
                )
            else:
                queue = float(net.ramp_queue[spec.ramp])
                obj = adaptive_objective(
                    rho_lane * cfg.density_scale, queue, cfg.reward_spec
                )
                rewards.append(-obj.value)
        else:
            rewards.append(
                -dsl_objective(rho_lane * cfg.density_scale, cfg.reward_spec)
            )
    return rewards


def _apply_actions(net, agents, actions):
    for spec, action in zip(agents, actions):
        if isinstance(spec, MeterAgentSpec):
            net.meter_green[spec.ramp] = action == 0
        else:
            apply_speed_limit(net, range(*spec.gantry), spec.levels[action])


def _default_actions(agents):
    """Uncontrolled behaviour: meters green, no speed limit (index 0)."""
    return [0 for _ in agents]


def run_episode(
    cfg: ScenarioConfig,
    controller,
    agents,
    epsilon: float,
    rng: np.random.Generator,
    learn: bool = True,
    collect_trace: bool = False,
    oracle: bool = False,
) -> EpisodeResult:
    """One pass over the scenario horizon.

    With controller=None the network runs uncontrolled (meters green, no
    caps); agents may still be supplied so that rewards and traces are
    comparable across controllers.
    """
    net = cfg.build_network()
    metrics = MetricsAccumulator()
    result = EpisodeResult(metrics=metrics, cum_reward=0.0)
    regions = sorted({t for t in net.region_tags if t is not None})
    region_spans = {
        tag: (net.region_tags.index(tag), len(net.region_tags) - net.region_tags[::-1].index(tag))
        for tag in regions
    }
    region_time_sum = {tag: 0.0 for tag in regions}

    n_sub = cfg.steps_per_interval
    interval_ramp_veh = np.zeros(net.n_ramps)
    prev_actions = _default_actions(agents)
    states = _observe(cfg, net, agents, interval_ramp_veh, prev_actions)

    for k in range(cfg.n_intervals):
        if controller is None:
            actions = _default_actions(agents)
        else:
            if oracle and isinstance(controller, MaxPlusController):
                planned, payoffs = controller.plan(states)
                _, best = brute_force_oracle(controller.graph, payoffs)
                result.oracle_checks += 1
                if abs(planned.payoff - best) > 1e-9:
                    result.oracle_mismatches += 1
            actions = controller.act(states, epsilon, rng)
        _apply_actions(net, agents, actions)

        interval_ramp_veh[:] = 0.0
        for sub in range(n_sub):
            t = (k * n_sub + sub) * cfg.dt
            origin = demand_at(cfg.mainline_demand, t)
            ramp = [demand_at(p, t) for p in cfg.ramp_demands]
            flows = step(net, origin, ramp, cfg.dt)
            metrics.accumulate(net, flows, cfg.dt)
            interval_ramp_veh += flows.ramp_veh

        next_states = _observe(cfg, net, agents, interval_ramp_veh, actions)
        rewards = _rewards(cfg, net, agents)
        if learn and controller is not None:
            controller.update(states, actions, rewards, next_states)
        if rewards:
            result.cum_reward += sum(rewards) / len(rewards)
        for tag in regions:
            region_time_sum[tag] += region_travel_time(net, *region_spans[tag])

        if collect_trace:
            row = [round((k + 1) * cfg.control_interval * 3600.0, 6)]
            for tag in regions:
                _, rho_lane = measure_range(net, *region_spans[tag])
                row.append(rho_lane * cfg.density_scale)
            row.extend(float(q) for q in net.ramp_queue)
            row.extend(actions)
            row.append(sum(rewards) / len(rewards) if rewards else 0.0)
            result.trace.append(row)

        states = next_states
        prev_actions = actions

    result.region_time = {
        tag: region_time_sum[tag] / cfg.n_intervals for tag in regions
    }
    return result


def trace_header(cfg: ScenarioConfig, agents) -> list[str]:
    net = cfg.build_network()
    regions = sorted({t for t in net.region_tags if t is not None})
    header = ["time_s"]
    header += [f"density_{tag}" for tag in regions]
    header += [f"queue_{k}" for k in range(net.n_ramps)]
    header += [f"action_{a.name}" for a in agents]
    header += ["mean_reward"]
    return header


SUMMARY_HEADER = [
    "controller",
    "seed",
    "tts_veh_h",
    "total_travel_time_h",
    "average_speed_kmh",
    "spill_veh",
    "injected_veh",
]


def summary_row(name: str, seed: int, res: EpisodeResult) -> list:
    m = res.metrics
    return [
        name,
        seed,
        m.tts,
        m.total_travel_time,
        m.average_speed,
        m.spill,
        m.injected,
    ]


def train(
    cfg: ScenarioConfig,
    controller_name: str,
    episodes: int,
    seed: int,
    out_dir: str | None = None,
    snapshot_every: int = 0,
    eval_every: int = 10,
    oracle: bool = False,
):
    """Train a controller; returns (controller, learning-curve rows).

    Every eval_every episodes the current greedy policy gets a scoring
    rollout (no exploration, no updates); the controller keeps the tables
    of the best greedy rollout seen, so late-training oscillation cannot
    throw away a good policy.  Curve rows are (episode, cumulative mean
    reward, TTS).  Snapshots and learning_curve.csv land in out_dir.
    """
    if episodes < 1:
        raise ConfigurationError(f"episodes must be >= 1, got {episodes}")
    agents = cfg.agents_for(controller_name)
    controller = make_controller(cfg, controller_name)
    rng = np.random.default_rng(seed)
    curve = []
    mismatches = 0
    best_tts = np.inf
    best_tables = None
    for ep in range(episodes):
        eps = cfg.epsilon.at(ep) if controller is not None else 0.0
        res = run_episode(
            cfg, controller, agents, eps, rng, learn=True, oracle=oracle
        )
        mismatches += res.oracle_mismatches
        curve.append([ep, res.cum_reward, res.tts])
        if (
            controller is not None
            and eval_every
            and ((ep + 1) % eval_every == 0 or ep == episodes - 1)
        ):
            score = run_episode(
                cfg,
                controller,
                agents,
                epsilon=0.0,
                rng=np.random.default_rng(seed),
                learn=False,
            )
            if score.tts < best_tts:
                best_tts = score.tts
                best_tables = copy.deepcopy(_tables_of(controller))
        if (
            out_dir
            and controller is not None
            and snapshot_every
            and (ep + 1) % snapshot_every == 0
        ):
            controller.save(out_dir)
    if controller is not None and best_tables is not None:
        _restore_tables(controller, best_tables)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, "learning_curve.csv"),
            ["episode", "cum_reward", "tts_veh_h"],
            curve,
        )
        if controller is not None:
            controller.save(out_dir)
    return controller, curve, mismatches


def _tables_of(controller):
    if isinstance(controller, CentralizedController):
        return controller.table
    return controller.tables


def _restore_tables(controller, tables) -> None:
    if isinstance(controller, CentralizedController):
        controller.table = tables
    else:
        controller.tables = tables


def evaluate(
    cfg: ScenarioConfig,
    controller_name: str,
    controller,
    seed: int,
    out_dir: str | None = None,
    oracle: bool = False,
) -> EpisodeResult:
    """Greedy (epsilon = 0) rollout of a trained controller."""
    agents = cfg.agents_for(controller_name)
    rng = np.random.default_rng(seed)
    res = run_episode(
        cfg,
        controller,
        agents,
        epsilon=0.0,
        rng=rng,
        learn=False,
        collect_trace=True,
        oracle=oracle,
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, f"trace_{controller_name}.csv"),
            trace_header(cfg, agents),
            res.trace,
        )
        write_csv(
            os.path.join(out_dir, "summary.csv"),
            SUMMARY_HEADER,
            [summary_row(controller_name, seed, res)],
        )
    return res


def train_and_evaluate(cfg, controller_name, episodes, seed, oracle=False):
    controller, _, _ = train(cfg, controller_name, episodes, seed)
    return evaluate(cfg, controller_name, controller, seed, oracle=oracle)


def compare(
    cfg: ScenarioConfig,
    controller_names,
    episodes: int,
    base_seed: int,
    n_seeds: int,
    out_dir: str,
    oracle: bool = False,
) -> list[list]:
    """Train and evaluate each controller over n_seeds seeds.

    Writes comparison.csv (one row per controller: seed-mean metrics and
    percentage TTS improvement over the first controller), per_seed.csv and
    one evaluation trace per controller (first seed).  Returns the
    comparison rows.
    """
    if len(controller_names) < 2:
        raise ConfigurationError("compare needs at least two controllers")
    for name in controller_names:
        cfg.agents_for(name)  # validates name against the scenario
    os.makedirs(out_dir, exist_ok=True)
    seeds = [base_seed + i for i in range(n_seeds)]
    per_seed: list[list] = []
    mean_tts: dict[str, float] = {}
    mean_ttt: dict[str, float] = {}
    mean_speed: dict[str, float] = {}
    for name in controller_names:
        results = []
        for s in seeds:
            res = train_and_evaluate(cfg, name, episodes, s, oracle=oracle)
            results.append(res)
            per_seed.append(summary_row(name, s, res))
        agents = cfg.agents_for(name)
        write_csv(
            os.path.join(out_dir, f"trace_{name}.csv"),
            trace_header(cfg, agents),
            results[0].trace,
        )
        mean_tts[name] = sum(r.tts for r in results) / n_seeds
        mean_ttt[name] = (
            sum(r.metrics.total_travel_time for r in results) / n_seeds
        )
        mean_speed[name] = (
            sum(r.metrics.average_speed for r in results) / n_seeds
        )
    base = controller_names[0]
    rows = []
    for name in controller_names:
        improvement = (
            100.0 * (mean_tts[base] - mean_tts[name]) / mean_tts[base]
            if mean_tts[base] > 0.0
            else 0.0
        )
        rows.append(
            [
                name,
                mean_tts[name],
                mean_ttt[name],
                mean_speed[name],
                improvement,
            ]
        )
    write_csv(
        os.path.join(out_dir, "comparison.csv"),
        [
            "controller",
            "tts_veh_h",
            "total_travel_time_h",
            "average_speed_kmh",
            "tts_improvement_pct",
        ],
        rows,
    )
    write_csv(os.path.join(out_dir, "per_seed.csv"), SUMMARY_HEADER, per_seed)
    return rows


def sweep(
    cfg: ScenarioConfig,
    controller_name: str,
    episodes: int,
    base_seed: int,
    n_seeds: int,
    out_dir: str,
    jobs: int = 1,
) -> list[list]:
    """Independent train+evaluate runs over consecutive seeds.

    Runs may execute concurrently; rows are merged in seed order so the
    output is independent of scheduling.
    """
    cfg.agents_for(controller_name)
    os.makedirs(out_dir, exist_ok=True)
    seeds = [base_seed + i for i in range(n_seeds)]

    def one(s: int) -> EpisodeResult:
        return train_and_evaluate(cfg, controller_name, episodes, s)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    rows = [
        summary_row(controller_name, s, res) for s, res in zip(seeds, results)
    ]
    write_csv(os.path.join(out_dir, "sweep.csv"), SUMMARY_HEADER, rows)
    return rows
