"""Exception types shared across the package."""


class FockforgeError(Exception):
    """Base class for all package-specific errors."""


class CutoffTooSmall(FockforgeError):
    """Requested state does not fit in the truncated Fock space."""


class IndexOutOfRange(FockforgeError):
    """Fock index outside the truncated space."""


class NegativeDuration(FockforgeError):
    """Evolution time must be non-negative."""


class LeakageExceeded(FockforgeError):
    """Population in the guard band at the truncation edge exceeded tolerance."""

    def __init__(self, population: float, tolerance: float):
        self.population = population
        self.tolerance = tolerance
        super().__init__(
            f"guard-band population {population:.3e} exceeds tolerance {tolerance:.1e}"
        )


class ZeroProbability(FockforgeError):
    """Projective measurement outcome has (numerically) zero weight."""


class NoConvergence(FockforgeError):
    """Optimizer failed to produce a usable solution."""


class InfeasiblePartition(FockforgeError):
    """Total time cannot be split into the requested number of segments."""


class DepthMismatch(FockforgeError):
    """Operation requires pulse sequences of equal depth."""


class TraceDrift(FockforgeError):
    """Density-matrix trace drifted beyond tolerance during integration."""

    def __init__(self, trace: float):
        self.trace = trace
        super().__init__(f"|Tr rho - 1| = {abs(trace - 1.0):.3e} during integration")


class ConfigError(FockforgeError):
    """Invalid or incomplete run configuration."""
