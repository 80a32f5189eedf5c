"""Run accounting: total time spent, distance travelled, traces, CSV output.

Total time spent (TTS) integrates every vehicle in the system, including
ramp queues and vehicles still waiting at the origin, so holding traffic
back is never free.  Average speed is distance travelled over time spent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .fundamental import FundamentalDiagram
from .network import Network, StepResult


@dataclass
class MetricsAccumulator:
    """Cumulative run totals; ``accumulate`` after every simulation step."""

    tts: float = 0.0  # veh·h, integral of the total vehicle count
    distance: float = 0.0  # veh·km crossed over cell boundaries
    spill: float = 0.0  # veh diverted into ramp overflow buffers
    arrived: float = 0.0  # veh that arrived at any source
    exited: float = 0.0  # veh discharged through the sink

    def accumulate(self, net: Network, flows: StepResult, dt: float) -> None:
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.tts += net.total_vehicles() * dt
        moved = 0.0
        for i in range(net.n_cells):
            moved += flows.boundary_veh[i + 1] * net.length[i]
        self.distance += moved
        self.spill += flows.spill_veh
        self.arrived += flows.inflow_veh
        self.exited += flows.outflow_veh

    @property
    def injected(self) -> float:
        """Vehicles taken into the system; nothing is dropped, so this
        equals arrivals (spill tracks diversions into overflow buffers)."""
        return self.arrived

    @property
    def total_travel_time(self) -> float:
        """Same integral as TTS, reported in hours of travel."""
        return self.tts

    @property
    def average_speed(self) -> float:
        """km/h over everything the run moved (0 for an empty run)."""
        return self.distance / self.tts if self.tts > 0.0 else 0.0


def speed_of_density(
    density: float, fd: FundamentalDiagram, speed_cap: float | None = None
) -> float:
    """Space-mean speed q/rho implied by the (possibly capped) diagram."""
    v = fd.v_ff if speed_cap is None else min(speed_cap, fd.v_ff)
    crit = fd.wave_speed * fd.rho_jam / (v + fd.wave_speed)
    if density <= crit:
        return v
    return fd.wave_speed * (fd.rho_jam - density) / density


def region_travel_time(net: Network, start: int, end: int) -> float:
    """Hours to traverse cells [start, end) at current space-mean speeds."""
    total = 0.0
    for i in range(start, end):
        v = speed_of_density(net.density[i], net.fd, net.speed_cap[i])
        total += net.length[i] / v
    return total


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
