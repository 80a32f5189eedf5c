"""Triangular flow-density relation for freeway cells."""

from dataclasses import dataclass


@dataclass(frozen=True)
class FundamentalDiagram:
    """Per-lane triangular fundamental diagram.

    v_ff: free-flow speed (km/h)
    rho_cr: critical density (veh/km/lane), where flow peaks
    rho_jam: jam density (veh/km/lane), where flow is zero
    """

    v_ff: float
    rho_cr: float
    rho_jam: float

    def __post_init__(self) -> None:
        if self.v_ff <= 0.0:
            raise ValueError(f"v_ff must be positive, got {self.v_ff}")
        if not 0.0 < self.rho_cr < self.rho_jam:
            raise ValueError(
                f"need 0 < rho_cr < rho_jam, got rho_cr={self.rho_cr}, "
                f"rho_jam={self.rho_jam}"
            )

    @property
    def wave_speed(self) -> float:
        """Congested wave speed w (km/h), slope of the congested branch."""
        return self.v_ff * self.rho_cr / (self.rho_jam - self.rho_cr)

    @property
    def capacity(self) -> float:
        """Maximum flow per lane (veh/h), attained at rho_cr."""
        return self.v_ff * self.rho_cr


def fd_flow(density: float, fd: FundamentalDiagram) -> float:
    """Equilibrium flow (veh/h/lane) at the given density.

    min(v_ff * rho, w * (rho_jam - rho)): linear up to the critical density,
    linear back down to zero at jam density.
    """
    if density < 0.0 or density > fd.rho_jam:
        raise ValueError(
            f"density {density} outside [0, {fd.rho_jam}]"
        )
    return min(fd.v_ff * density, fd.wave_speed * (fd.rho_jam - density))
