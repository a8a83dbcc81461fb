"""Truncated qubit-oscillator Hilbert space: state containers and basic algebra.

Basis conventions (global contract, stated once here):
  * The qubit basis is ordered (g, e).
  * A joint state vector has length 2*(ncut+1) and is laid out as two
    contiguous Fock blocks: indices [0, ncut] hold the |g,n> amplitudes,
    indices [ncut+1, 2*ncut+1] hold the |e,n> amplitudes.
  * ``as_blocks`` views the same data as a (2, ncut+1) array with row 0 = g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import CutoffTooSmall, IndexOutOfRange

# Guard band at the truncation edge: population in the top GUARD_BAND Fock
# indices is monitored during sequence simulation; a run is invalid once it
# exceeds LEAKAGE_TOL.
GUARD_BAND = 5
LEAKAGE_TOL = 1e-6


@dataclass(frozen=True)
class FockCutoff:
    """Highest retained Fock index; the cavity space has dimension ncut+1."""

    ncut: int

    def __post_init__(self):
        if self.ncut < 1:
            raise ValueError(f"ncut must be >= 1, got {self.ncut}")

    @property
    def dim(self) -> int:
        return self.ncut + 1


@dataclass(frozen=True)
class LeakageMonitor:
    """Worst guard-band population observed over a run."""

    max_top_population: float
    guard: int = GUARD_BAND

    @property
    def ok(self) -> bool:
        return self.max_top_population <= LEAKAGE_TOL


@dataclass(frozen=True, eq=False)
class JointState:
    """Pure state of qubit (x) truncated cavity, stored as one complex vector."""

    amplitudes: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 * self.cutoff.dim,):
            raise ValueError(
                f"expected {2 * self.cutoff.dim} amplitudes, got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def as_blocks(self) -> np.ndarray:
        """(2, ncut+1) view: row 0 = |g,n> amplitudes, row 1 = |e,n>."""
        return self.amplitudes.reshape(2, self.cutoff.dim)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class CavityState:
    """Pure cavity state over Fock indices 0..ncut."""

    amplitudes: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.cutoff.dim,):
            raise ValueError(
                f"expected {self.cutoff.dim} amplitudes, got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def mean_photon_number(self) -> float:
        n = np.arange(self.cutoff.dim)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class CavityDensityMatrix:
    """Reduced cavity state; Hermitian, unit trace, positive (up to roundoff)."""

    elements: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        d = self.cutoff.dim
        if rho.shape != (d, d):
            raise ValueError(f"expected ({d}, {d}) matrix, got shape {rho.shape}")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "elements", rho)

    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.elements)[0])


def default_cutoff(n_target: int, alpha: complex = 0.0, beta_budget: float = 0.0) -> FockCutoff:
    """Cutoff sized for a target Fock index, a coherent seed and displacements.

    The base accommodates the sqrt(n)-wide tails of coherent and number-like
    states around max(n_target, |alpha|^2); each unit of total displacement
    amplitude can push population up by roughly 2*sqrt(ncut)+1 indices, so the
    budget term scales with that. The budget is quantized upward to whole
    units so that infinitesimal parameter changes cannot flip the dimension.
    """
    x = max(float(n_target), abs(alpha) ** 2)
    base = math.ceil(x + 8.0 * math.sqrt(x) + 12.0)
    # coherent_state requires |alpha|^2 <= ncut/2
    base = max(base, math.ceil(2.0 * abs(alpha) ** 2))
    units = math.ceil(max(beta_budget, 0.0) - 1e-12)
    extra = units * math.ceil(2.0 * math.sqrt(base) + 1.0)
    return FockCutoff(base + extra)


def coherent_state(alpha: complex, cutoff: FockCutoff) -> CavityState:
    """Coherent state |alpha>, renormalized over the truncated space.

    Raises CutoffTooSmall when |alpha|^2 > ncut/2, i.e. when the Poisson
    distribution's bulk would not fit comfortably below the truncation.
    """
    if abs(alpha) ** 2 > cutoff.ncut / 2.0:
        raise CutoffTooSmall(
            f"|alpha|^2 = {abs(alpha)**2:.3f} exceeds ncut/2 = {cutoff.ncut / 2.0}"
        )
    n = np.arange(cutoff.dim)
    if alpha == 0:
        amps = np.zeros(cutoff.dim, dtype=complex)
        amps[0] = 1.0
        return CavityState(amps, cutoff)
    # log-domain magnitudes: exp(-|a|^2/2) |a|^n / sqrt(n!)
    log_mag = -abs(alpha) ** 2 / 2.0 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    amps /= np.linalg.norm(amps)
    return CavityState(amps, cutoff)


def fock_state(n: int, cutoff: FockCutoff) -> CavityState:
    """Number state |n> in the truncated space."""
    if not 0 <= n <= cutoff.ncut:
        raise IndexOutOfRange(f"Fock index {n} outside [0, {cutoff.ncut}]")
    amps = np.zeros(cutoff.dim, dtype=complex)
    amps[n] = 1.0
    return CavityState(amps, cutoff)


def initial_joint_state(alpha: complex, cutoff: FockCutoff) -> JointState:
    """Product state |e> (x) |alpha>, the starting point of every sequence."""
    cav = coherent_state(alpha, cutoff)
    amps = np.zeros(2 * cutoff.dim, dtype=complex)
    amps[cutoff.dim:] = cav.amplitudes
    return JointState(amps, cutoff)


def partial_trace_qubit(state: JointState) -> CavityDensityMatrix:
    """Reduced cavity density matrix rho_nm = sum_q c_{q,n} c*_{q,m}."""
    blocks = state.as_blocks()
    rho = blocks.T @ blocks.conj()  # rho[n, m] = sum_q c_{q,n} c*_{q,m}
    return CavityDensityMatrix(rho, state.cutoff)


def number_distribution(rho: CavityDensityMatrix) -> np.ndarray:
    """Photon-number probabilities P_n = rho_nn (real part of the diagonal)."""
    return np.real(np.diag(rho.elements)).copy()


def guard_band_population(blocks: np.ndarray, guard: int = GUARD_BAND) -> float:
    """Total population in the top ``guard`` Fock indices of a (2, dim) state."""
    return float(np.sum(np.abs(blocks[:, -guard:]) ** 2))
