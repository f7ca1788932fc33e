"""Physical configuration and the shared numeric policy."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Central numeric policy.

    algebraic   exact 2x2 matrix identities (products, unitarity, round trips)
    spectral    eigenvalue/eigenphase comparisons and modal-vs-pointwise checks
    quadrature  grid norms, Gram matrices, projection round trips
    truncation_warn  modal truncation loss above which project() warns
    """

    algebraic: float = 1e-12
    spectral: float = 1e-10
    quadrature: float = 1e-8
    truncation_warn: float = 1e-6


TOL = Tolerances()


@dataclass(frozen=True)
class PhysicalConfig:
    """Trap and junction parameters.

    The trap is V(x) = m omega^2 x^2 / 2; the junction at x = 0 carries a
    fixed length scale l0 entering the connection condition
    (U - I) Psi(0) + i l0 (U + I) Psi'(0) = 0.
    """

    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    l0: float = 1.0

    def __post_init__(self) -> None:
        for name in ("mass", "omega", "hbar", "l0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def ell(self) -> float:
        """Oscillator length sqrt(hbar / (m omega))."""
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def tau(self) -> float:
        """Half period pi / omega, the natural gate duration."""
        return math.pi / self.omega


DEFAULT_CONFIG = PhysicalConfig()

#: default spatial grid (nodes over (0, 12 ell]) and modal truncation
DEFAULT_GRID_NODES = 2048
DEFAULT_XMAX_ELL = 12.0
DEFAULT_N_MODES = 200
#: default Crank-Nicolson substeps per half period
DEFAULT_CN_STEPS_PER_HALF_PERIOD = 2000
