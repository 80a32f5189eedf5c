"""Freeway network state and the deterministic cell-transmission update.

Densities live on cells (veh/km/lane), queued vehicles on ramps and at the
mainline origin.  ``step`` exchanges vehicles between neighbours under the
triangular fundamental diagram.  At a saturated merge the mainline keeps a
fixed priority share and a green ramp takes the rest, so heavy ramp inflow
throttles the upstream cell into congestion; congested cells discharge at a
reduced rate (capacity drop), which is what metering is there to prevent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import ctm_step
from .errors import ConfigurationError
from .fundamental import FundamentalDiagram


@dataclass
class Cell:
    """One mainline segment.

    length km, density veh/km/lane, speed_cap km/h (None means no limit,
    i.e. the diagram's free-flow speed applies).
    """

    length: float
    lanes: int
    density: float = 0.0
    speed_cap: float | None = None
    region_tag: str | None = None


@dataclass
class OnRamp:
    """Metered on-ramp merging into one mainline cell.

    queue/q_max in vehicles, capacity veh/h.  A red meter blocks all
    discharge.  Arrivals beyond q_max wait in the unbounded overflow buffer
    (blocked surface traffic): recorded as spill, never dropped.
    """

    attach_cell: int
    queue: float = 0.0
    q_max: float = 50.0
    capacity: float = 1800.0
    meter_green: bool = True
    overflow: float = 0.0


@dataclass
class StepResult:
    """Vehicle movements of a single step, all in vehicles (not rates).

    boundary_veh[i] crossed the upstream boundary of cell i; index n_cells
    is the network outflow.  spill_veh were dropped at full ramp queues.
    """

    inflow_veh: float
    outflow_veh: float
    spill_veh: float
    boundary_veh: np.ndarray
    ramp_veh: np.ndarray


class Network:
    """Mainline cells plus on-ramps, a demand origin and an open sink.

    State is held in flat numpy arrays; ``cells`` / ``ramps`` materialise
    dataclass views for inspection.  A Network is self-contained: copies are
    independent and a value can be handed to another thread.
    """

    def __init__(
        self,
        cells: list[Cell],
        ramps: list[OnRamp],
        fd: FundamentalDiagram,
        capacity_drop: float = 0.1,
        merge_priority: float = 0.8,
    ):
        if not cells:
            raise ConfigurationError("network needs at least one cell")
        if not 0.0 <= capacity_drop < 1.0:
            raise ConfigurationError(
                f"capacity_drop must be in [0, 1), got {capacity_drop}"
            )
        if not 0.0 < merge_priority < 1.0:
            raise ConfigurationError(
                f"merge_priority must be in (0, 1), got {merge_priority}"
            )
        attach = [r.attach_cell for r in ramps]
        if any(a < 0 or a >= len(cells) for a in attach):
            raise ConfigurationError(f"ramp attach cells {attach} out of range")
        if any(b <= a for a, b in zip(attach, attach[1:])):
            raise ConfigurationError(
                f"ramp attach cells must be strictly increasing, got {attach}"
            )
        for c in cells:
            if c.length <= 0.0 or c.lanes <= 0:
                raise ConfigurationError("cells need positive length and lanes")
            if not 0.0 <= c.density <= fd.rho_jam:
                raise ConfigurationError(
                    f"cell density {c.density} outside [0, {fd.rho_jam}]"
                )
            if c.speed_cap is not None and not 0.0 < c.speed_cap <= fd.v_ff:
                raise ConfigurationError(
                    f"speed cap {c.speed_cap} outside (0, {fd.v_ff}]"
                )
        for r in ramps:
            if not 0.0 <= r.queue <= r.q_max:
                raise ConfigurationError(
                    f"ramp queue {r.queue} outside [0, {r.q_max}]"
                )
            if r.overflow < 0.0:
                raise ConfigurationError("ramp overflow cannot be negative")

        self.fd = fd
        self.capacity_drop = float(capacity_drop)
        self.merge_priority = float(merge_priority)
        self.length = np.array([c.length for c in cells], dtype=np.float64)
        self.lanes = np.array([c.lanes for c in cells], dtype=np.float64)
        self.density = np.array([c.density for c in cells], dtype=np.float64)
        self.speed_cap = np.array(
            [fd.v_ff if c.speed_cap is None else c.speed_cap for c in cells],
            dtype=np.float64,
        )
        self.region_tags = [c.region_tag for c in cells]
        self.ramp_cell = np.array(attach, dtype=np.int64)
        self.ramp_queue = np.array([r.queue for r in ramps], dtype=np.float64)
        self.ramp_overflow = np.array(
            [r.overflow for r in ramps], dtype=np.float64
        )
        self.ramp_qmax = np.array([r.q_max for r in ramps], dtype=np.float64)
        self.ramp_capacity = np.array(
            [r.capacity for r in ramps], dtype=np.float64
        )
        self.meter_green = np.array(
            [r.meter_green for r in ramps], dtype=np.bool_
        )
        self.origin_queue = 0.0

    @property
    def n_cells(self) -> int:
        return self.density.shape[0]

    @property
    def n_ramps(self) -> int:
        return self.ramp_cell.shape[0]

    @property
    def cells(self) -> list[Cell]:
        return [
            Cell(
                length=float(self.length[i]),
                lanes=int(self.lanes[i]),
                density=float(self.density[i]),
                speed_cap=(
                    None
                    if self.speed_cap[i] == self.fd.v_ff
                    else float(self.speed_cap[i])
                ),
                region_tag=self.region_tags[i],
            )
            for i in range(self.n_cells)
        ]

    @property
    def ramps(self) -> list[OnRamp]:
        return [
            OnRamp(
                attach_cell=int(self.ramp_cell[k]),
                queue=float(self.ramp_queue[k]),
                q_max=float(self.ramp_qmax[k]),
                capacity=float(self.ramp_capacity[k]),
                meter_green=bool(self.meter_green[k]),
                overflow=float(self.ramp_overflow[k]),
            )
            for k in range(self.n_ramps)
        ]

    def copy(self) -> "Network":
        out = object.__new__(Network)
        out.fd = self.fd
        out.capacity_drop = self.capacity_drop
        out.merge_priority = self.merge_priority
        out.length = self.length.copy()
        out.lanes = self.lanes.copy()
        out.density = self.density.copy()
        out.speed_cap = self.speed_cap.copy()
        out.region_tags = list(self.region_tags)
        out.ramp_cell = self.ramp_cell.copy()
        out.ramp_queue = self.ramp_queue.copy()
        out.ramp_overflow = self.ramp_overflow.copy()
        out.ramp_qmax = self.ramp_qmax.copy()
        out.ramp_capacity = self.ramp_capacity.copy()
        out.meter_green = self.meter_green.copy()
        out.origin_queue = self.origin_queue
        return out

    def vehicles_in_cells(self) -> float:
        total = 0.0
        for i in range(self.n_cells):
            total += self.density[i] * self.length[i] * self.lanes[i]
        return total

    def total_vehicles(self) -> float:
        """Vehicles on the mainline plus all queues (incl. the origin)."""
        total = self.vehicles_in_cells()
        for k in range(self.n_ramps):
            total += self.ramp_queue[k] + self.ramp_overflow[k]
        return total + self.origin_queue

    def set_meters(self, green) -> None:
        greens = np.asarray(green, dtype=np.bool_)
        if greens.shape != self.meter_green.shape:
            raise ValueError(
                f"expected {self.n_ramps} meter signals, got {greens.shape}"
            )
        self.meter_green[:] = greens

    def region_cells(self, tag: str) -> list[int]:
        idx = [i for i, t in enumerate(self.region_tags) if t == tag]
        if not idx:
            raise KeyError(f"unknown region tag {tag!r}")
        return idx


def validate_cfl(net: Network, dt: float) -> None:
    """Reject time steps long enough for a wave to cross a whole cell."""
    fastest = max(net.fd.v_ff, net.fd.wave_speed)
    shortest = float(net.length.min())
    if dt * fastest > shortest:
        raise ConfigurationError(
            f"CFL violated: dt={dt} h at {fastest} km/h travels "
            f"{dt * fastest:.4f} km > shortest cell {shortest} km"
        )


def step(
    net: Network,
    origin_demand: float,
    ramp_demands,
    dt: float,
) -> StepResult:
    """Advance the network by one step of dt hours, in place.

    origin_demand and ramp_demands are arrival rates (veh/h) at the mainline
    origin and each ramp.  Meter signals and speed caps are part of the
    network state (``set_meters`` / ``apply_speed_limit``).
    """
    if origin_demand < 0.0:
        raise ValueError(f"origin demand must be >= 0, got {origin_demand}")
    demands = np.asarray(ramp_demands, dtype=np.float64)
    if demands.shape != (net.n_ramps,):
        raise ValueError(
            f"expected {net.n_ramps} ramp demands, got shape {demands.shape}"
        )
    if np.any(demands < 0.0):
        raise ValueError("ramp demands must be >= 0")

    origin_queue, inflow, outflow, spill, boundary, ramp_veh = ctm_step(
        net.density,
        net.length,
        net.lanes,
        net.speed_cap,
        net.fd.v_ff,
        net.fd.wave_speed,
        net.fd.rho_jam,
        net.capacity_drop,
        net.merge_priority,
        net.ramp_cell,
        net.ramp_queue,
        net.ramp_overflow,
        net.ramp_qmax,
        net.ramp_capacity,
        net.meter_green,
        demands,
        float(origin_demand),
        net.origin_queue,
        float(dt),
    )
    net.origin_queue = origin_queue
    return StepResult(
        inflow_veh=inflow,
        outflow_veh=outflow,
        spill_veh=spill,
        boundary_veh=boundary,
        ramp_veh=ramp_veh,
    )


def apply_speed_limit(net: Network, cell_range, limit: float) -> Network:
    """Cap the free-flow speed of a range of cells, in place.

    cell_range is any iterable of cell indices (e.g. ``range(3, 7)``).
    limit == v_ff removes the cap.
    """
    if not 0.0 < limit <= net.fd.v_ff:
        raise ValueError(
            f"speed limit {limit} outside (0, {net.fd.v_ff}]"
        )
    for i in cell_range:
        if i < 0 or i >= net.n_cells:
            raise ValueError(f"cell index {i} out of range")
        net.speed_cap[i] = limit
    return net


def region_measure(net: Network, region_tag: str) -> tuple[float, float]:
    """Vehicle count and mean per-lane density over one tagged region."""
    idx = net.region_cells(region_tag)
    n_veh = 0.0
    lane_km = 0.0
    for i in idx:
        n_veh += net.density[i] * net.length[i] * net.lanes[i]
        lane_km += net.length[i] * net.lanes[i]
    return n_veh, n_veh / lane_km


def measure_range(net: Network, start: int, end: int) -> tuple[float, float]:
    """Vehicle count and mean per-lane density over cells [start, end)."""
    n_veh = 0.0
    lane_km = 0.0
    for i in range(start, end):
        n_veh += net.density[i] * net.length[i] * net.lanes[i]
        lane_km += net.length[i] * net.lanes[i]
    return n_veh, n_veh / lane_km
