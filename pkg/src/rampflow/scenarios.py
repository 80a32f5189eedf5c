"""Study networks, demand profiles and experiment configuration.

Two built-in scenarios:

* ``three_ramp`` - a 3-lane mainline with three metered single-lane ramps
  and one control agent per merge area (regions A1..A3); meter agents are
  scored on the distance of their region's aggregate density from the
  critical value.
* ``dsl`` - a 2-lane mainline (4 km section S1, 2 km section S2) with one
  metered ramp between them; the meter agent uses the queue-aware adaptive
  objective and an optional speed-limit agent caps the approach cells.

Scenario files are JSON documents that pick a network id and override the
defaults; see ``load_scenario``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError
from .fundamental import FundamentalDiagram
from .learning import MeterBins, RewardSpec
from .network import Cell, Network, OnRamp, validate_cfl


@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant arrival rate: (end time h, flow veh/h) pairs."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        ends = [t for t, _ in self.breakpoints]
        if not ends:
            raise ConfigurationError("demand profile needs breakpoints")
        if any(b <= a for a, b in zip(ends, ends[1:])):
            raise ConfigurationError(f"breakpoint times must increase: {ends}")
        if any(f < 0.0 for _, f in self.breakpoints):
            raise ConfigurationError("demand flows must be >= 0")

    @property
    def horizon(self) -> float:
        return self.breakpoints[-1][0]


def demand_at(profile: DemandProfile, t: float) -> float:
    """Arrival rate at time t (h): first interval whose end time exceeds t."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    for end, flow in profile.breakpoints:
        if end > t:
            return flow
    raise ValueError(f"t={t} beyond profile horizon {profile.horizon}")


@dataclass(frozen=True)
class MeterAgentSpec:
    """A ramp-metering agent: which ramp it drives and what it observes."""

    name: str
    ramp: int
    region: tuple[int, int]  # cell span [start, end) it is scored on
    bins: MeterBins

    @property
    def n_actions(self) -> int:
        return 2  # 0 = green, 1 = red (green first: ties fall back to no control)

    @property
    def n_states(self) -> int:
        return self.bins.n_states


@dataclass(frozen=True)
class SpeedAgentSpec:
    """A dynamic-speed-limit agent: gantry cells it caps, region it protects."""

    name: str
    gantry: tuple[int, int]  # cell span [start, end) whose speed it caps
    region: tuple[int, int]  # cell span it is scored on
    levels: tuple[float, ...]  # km/h, level 0 should be the free-flow speed
    density_bins: int = 10

    @property
    def n_actions(self) -> int:
        return len(self.levels)

    @property
    def n_states(self) -> int:
        return self.density_bins * len(self.levels)


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 0.3
    decay: float = 0.995
    floor: float = 0.02

    def at(self, episode: int) -> float:
        return max(self.floor, self.start * self.decay**episode)


@dataclass
class ScenarioConfig:
    """Everything an experiment run needs, seed aside."""

    name: str
    network_id: str
    horizon: float  # h
    dt: float  # h
    control_interval: float  # h
    mainline_demand: DemandProfile
    ramp_demands: tuple[DemandProfile, ...]
    reward_kind: str  # "critical_density" | "adaptive"
    reward_spec: RewardSpec
    density_scale: float  # per-lane mean density -> reward units
    meter_agents: tuple[MeterAgentSpec, ...]
    speed_agents: tuple[SpeedAgentSpec, ...]
    edges: tuple[tuple[int, int], ...]  # coordination graph over meter agents
    controllers: dict[str, str] = field(default_factory=dict)  # name -> architecture
    dsl_controllers: tuple[str, ...] = ()  # controller names that add speed agents
    gamma: float = 0.9
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    episodes: int = 300
    capacity_drop: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        n_sub = self.control_interval / self.dt
        if abs(n_sub - round(n_sub)) > 1e-9:
            raise ConfigurationError(
                f"control interval {self.control_interval} h is not a "
                f"multiple of dt {self.dt} h"
            )
        n_int = self.horizon / self.control_interval
        if abs(n_int - round(n_int)) > 1e-9:
            raise ConfigurationError(
                f"horizon {self.horizon} h is not a multiple of the control "
                f"interval {self.control_interval} h"
            )
        if self.reward_kind not in ("critical_density", "adaptive"):
            raise ConfigurationError(f"unknown reward kind {self.reward_kind!r}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma outside (0, 1): {self.gamma}")

    @property
    def steps_per_interval(self) -> int:
        return round(self.control_interval / self.dt)

    @property
    def n_intervals(self) -> int:
        return round(self.horizon / self.control_interval)

    def build_network(self) -> Network:
        net = build_network(self.network_id, capacity_drop=self.capacity_drop)
        validate_cfl(net, self.dt)
        for profile in (self.mainline_demand, *self.ramp_demands):
            if profile.horizon < self.horizon:
                raise ConfigurationError(
                    f"demand profile ends at {profile.horizon} h, before the "
                    f"{self.horizon} h horizon"
                )
        if len(self.ramp_demands) != net.n_ramps:
            raise ConfigurationError(
                f"{len(self.ramp_demands)} ramp demand profiles for "
                f"{net.n_ramps} ramps"
            )
        return net

    def agents_for(self, controller_name: str):
        """Agent specs a controller drives; empty for the no-control baseline."""
        if controller_name not in self.controllers:
            raise ConfigurationError(
                f"controller {controller_name!r} is not available on scenario "
                f"{self.name!r}; choose from {sorted(self.controllers)}"
            )
        if self.controllers[controller_name] == "none":
            return ()
        agents = list(self.meter_agents)
        if controller_name in self.dsl_controllers:
            agents.extend(self.speed_agents)
        return tuple(agents)


CELL_KM = 0.25


def build_three_ramp_network(capacity_drop: float = 0.25) -> Network:
    """3-lane mainline, three metered 1-lane ramps, regions A1..A3.

    Each region is five 250 m cells (two before the merge cell, the merge
    cell, two after), separated by a 1500 m uncontrolled stretch between A1
    and A2, with short pads at both ends.  The per-lane critical density is
    one third of the 62 veh/km aggregate target.
    """
    fd = FundamentalDiagram(v_ff=130.0, rho_cr=62.0 / 3.0, rho_jam=180.0)
    tags: list[str | None] = (
        [None] * 2 + ["A1"] * 5 + [None] * 6 + ["A2"] * 5 + ["A3"] * 5 + [None] * 2
    )
    cells = [Cell(length=CELL_KM, lanes=3, region_tag=t) for t in tags]
    # Long interchange ramps: ~150 veh of storage each, so meters can delay
    # a meaningful share of the peak before the queue override flushes them.
    ramps = [
        OnRamp(attach_cell=4, q_max=150.0, capacity=1800.0),
        OnRamp(attach_cell=15, q_max=150.0, capacity=1800.0),
        OnRamp(attach_cell=20, q_max=150.0, capacity=1800.0),
    ]
    return Network(cells, ramps, fd, capacity_drop=capacity_drop)


def build_dsl_network(capacity_drop: float = 0.1) -> Network:
    """2-lane mainline: 4 km section S1, one metered ramp, 2 km section S2.

    Free-flow speed 60 km/h, critical density 33.5 and jam density 180
    veh/km/lane (capacity just over 4000 veh/h across both lanes); every
    cell starts at 40 veh/km/lane.
    """
    fd = FundamentalDiagram(v_ff=60.0, rho_cr=33.5, rho_jam=180.0)
    tags = ["S1"] * 16 + ["S2"] * 8
    cells = [
        Cell(length=CELL_KM, lanes=2, density=40.0, region_tag=t) for t in tags
    ]
    ramps = [OnRamp(attach_cell=16, q_max=50.0, capacity=2000.0)]
    return Network(cells, ramps, fd, capacity_drop=capacity_drop)


_BUILDERS = {
    "three_ramp": build_three_ramp_network,
    "dsl": build_dsl_network,
}


def build_network(network_id: str, capacity_drop: float = 0.1) -> Network:
    if network_id not in _BUILDERS:
        raise ConfigurationError(
            f"unknown network {network_id!r}; choose from {sorted(_BUILDERS)}"
        )
    return _BUILDERS[network_id](capacity_drop=capacity_drop)


def _seconds_profile(rows) -> DemandProfile:
    return DemandProfile(
        breakpoints=tuple((end / 3600.0, float(flow)) for end, flow in rows)
    )


THREE_RAMP_MAINLINE = (
    (300, 4000),
    (600, 5500),
    (900, 7000),
    (1200, 6500),
    (1500, 6000),
    (1800, 5500),
    (2100, 4500),
)
THREE_RAMP_RAMP = ((2100, 1000),)

DSL_MAINLINE = (
    (1800, 2500),
    (3600, 3000),
    (5400, 3500),
    (7200, 3500),
    (9000, 3500),
    (10800, 3500),
    (12600, 2500),
    (14400, 1000),
)
DSL_RAMP = (
    (1800, 500),
    (3600, 1000),
    (5400, 1500),
    (7200, 500),
    (9000, 500),
    (10800, 500),
    (12600, 500),
    (14400, 500),
)


def three_ramp_scenario(**overrides) -> ScenarioConfig:
    """Peak-hour demand on the three-ramp network, one agent per merge."""
    # Top of the occupancy range maps to twice the region's critical count,
    # putting the bin edges where metering decisions actually happen; deeper
    # jams clamp into the top bin.
    n_crit = 62.0 * (5 * CELL_KM)  # veh in a region at the critical density
    dn_cap = 1800.0 * (30.0 / 3600.0)  # one interval of full ramp discharge
    # Fine-grained occupancy bins over twice the critical count: breakdown
    # onset moves the region mean by only a few vehicles, so the edges near
    # the critical bin have to be narrow for the meters to react in time.
    bins = MeterBins(n_bins=20, n_max=2.0 * n_crit, dn_bins=5, dn_max=dn_cap)
    meters = tuple(
        MeterAgentSpec(name=f"A{i + 1}", ramp=i, region=region, bins=bins)
        for i, region in enumerate(((2, 7), (13, 18), (18, 23)))
    )
    cfg = ScenarioConfig(
        name="three_ramp",
        network_id="three_ramp",
        horizon=2100.0 / 3600.0,
        dt=6.0 / 3600.0,
        control_interval=30.0 / 3600.0,
        mainline_demand=_seconds_profile(THREE_RAMP_MAINLINE),
        ramp_demands=tuple(_seconds_profile(THREE_RAMP_RAMP) for _ in range(3)),
        reward_kind="critical_density",
        reward_spec=RewardSpec(rho_cr=62.0, rho_max=540.0, q_max=50.0),
        density_scale=3.0,  # rewards use aggregate veh/km over the 3 lanes
        meter_agents=meters,
        speed_agents=(),
        edges=((0, 1), (1, 2)),
        controllers={
            "none": "none",
            "independent": "independent",
            "maxplus": "maxplus",
            "centralized": "centralized",
        },
        capacity_drop=0.25,
        episodes=300,
    )
    return replace(cfg, **overrides) if overrides else cfg


def dsl_scenario(**overrides) -> ScenarioConfig:
    """Four-hour demand on the merge network, queue-aware metering + DSL."""
    n_crit = 33.5 * (5 * CELL_KM) * 2  # veh in the merge region at critical
    dn_cap = 2000.0 * (30.0 / 3600.0)
    bins = MeterBins(n_bins=10, n_max=2.0 * n_crit, dn_bins=5, dn_max=dn_cap)
    meters = (
        MeterAgentSpec(name="ramp", ramp=0, region=(14, 19), bins=bins),
    )
    speed = (
        SpeedAgentSpec(
            name="gantry",
            gantry=(8, 12),  # 1 km of S1, 1 km upstream of the merge approach
            region=(14, 19),  # scored on the merge area it protects
            levels=(60.0, 50.0, 40.0, 30.0),
        ),
    )
    cfg = ScenarioConfig(
        name="dsl",
        network_id="dsl",
        horizon=4.0,
        dt=10.0 / 3600.0,
        control_interval=30.0 / 3600.0,
        mainline_demand=_seconds_profile(DSL_MAINLINE),
        ramp_demands=(_seconds_profile(DSL_RAMP),),
        reward_kind="adaptive",
        reward_spec=RewardSpec(rho_cr=33.5, rho_max=180.0, q_max=50.0, alpha_ctrl=0.5),
        density_scale=1.0,  # rewards use per-lane densities
        meter_agents=meters,
        speed_agents=speed,
        edges=(),
        controllers={
            "none": "none",
            "metering": "independent",
            "metering_dsl": "independent",
        },
        dsl_controllers=("metering_dsl",),
        episodes=150,
    )
    return replace(cfg, **overrides) if overrides else cfg


_SCENARIOS = {
    "three_ramp": three_ramp_scenario,
    "dsl": dsl_scenario,
}


def load_scenario(path_or_name: str) -> ScenarioConfig:
    """Built-in scenario by name, or a JSON scenario file.

    The file schema (all fields except "network" optional):

    {
      "network": "three_ramp" | "dsl",
      "horizon_s": 2100, "dt_s": 7.5, "control_interval_s": 30,
      "demand": {"mainline": [[end_s, veh_h], ...],
                 "ramps": [[[end_s, veh_h], ...], ...]},
      "gamma": 0.9,
      "epsilon": {"start": 0.3, "decay": 0.995, "floor": 0.02},
      "episodes": 300, "seed": 0, "capacity_drop": 0.1,
      "alpha_ctrl": 0.5
    }
    """
    if path_or_name in _SCENARIOS:
        return _SCENARIOS[path_or_name]()
    try:
        with open(path_or_name) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path_or_name!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON in {path_or_name!r}: {exc}")
    if not isinstance(raw, dict) or "network" not in raw:
        raise ConfigurationError(
            f"{path_or_name!r} must be a JSON object with a 'network' key"
        )
    network_id = raw["network"]
    if network_id not in _SCENARIOS:
        raise ConfigurationError(
            f"unknown network {network_id!r}; choose from {sorted(_SCENARIOS)}"
        )
    overrides: dict = {}
    if "horizon_s" in raw:
        overrides["horizon"] = float(raw["horizon_s"]) / 3600.0
    if "dt_s" in raw:
        overrides["dt"] = float(raw["dt_s"]) / 3600.0
    if "control_interval_s" in raw:
        overrides["control_interval"] = float(raw["control_interval_s"]) / 3600.0
    if "demand" in raw:
        demand = raw["demand"]
        if "mainline" in demand:
            overrides["mainline_demand"] = _seconds_profile(demand["mainline"])
        if "ramps" in demand:
            overrides["ramp_demands"] = tuple(
                _seconds_profile(rows) for rows in demand["ramps"]
            )
    for key in ("gamma", "episodes", "seed", "capacity_drop"):
        if key in raw:
            overrides[key] = raw[key]
    if "epsilon" in raw:
        eps = raw["epsilon"]
        overrides["epsilon"] = EpsilonSchedule(
            start=eps.get("start", 0.3),
            decay=eps.get("decay", 0.995),
            floor=eps.get("floor", 0.02),
        )
    try:
        cfg = _SCENARIOS[network_id](**overrides)
    except TypeError as exc:
        raise ConfigurationError(f"bad scenario override: {exc}")
    if "alpha_ctrl" in raw:
        cfg.reward_spec = replace(
            cfg.reward_spec, alpha_ctrl=float(raw["alpha_ctrl"])
        )
    return cfg
