"""Exchange-coupling propagators, displacements, sequence application, Wigner values.

The qubit-cavity coupling Hamiltonian used throughout is

    H = -delta * n_hat + omega * (a sigma+ + a^dag sigma-),

which conserves the total excitation number. Its action therefore splits into
the invariant singlet |g,0>, 2x2 blocks spanned by {|e,n>, |g,n+1>}, and (in
the truncated space) the edge singlet |e,ncut>. Propagation is done block by
block in closed form, O(ncut) per pulse; a dense matrix-exponential oracle is
provided for validation only.

Displacements D(beta) = exp(beta a^dag - beta* a) are generated by an
anti-Hermitian tridiagonal operator. A diagonal phase similarity maps i times
the generator onto |beta| * T where T is the real symmetric tridiagonal matrix
with off-diagonal sqrt(n+1). One eigendecomposition of T per working dimension
(cached) then yields the exact exponential of the truncated generator for any
beta, both as a dense matrix and as a fast O(dim^2) state application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

from .errors import LeakageExceeded, NegativeDuration
from .hilbert import (
    GUARD_BAND,
    LEAKAGE_TOL,
    CavityDensityMatrix,
    FockCutoff,
    JointState,
    LeakageMonitor,
    guard_band_population,
)

# Relative magnitude below which density-matrix phase-map entries are zeroed.
PHASE_MASK_REL = 1e-4


@dataclass(frozen=True)
class JCParams:
    """Coupling strength omega (rad/time) and qubit-cavity detuning delta."""

    omega: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


@dataclass(frozen=True, eq=False)
class PulseSequence:
    """Alternating evolve/displace control sequence plus measurement angles.

    Layer k applies the coupling evolution for time taus[k] followed by a
    displacement by betas[k]. (phi0, phi1) parameterize the qubit state used
    for the final projective disentangling step. revival_index records which
    revival of the collapse-revival structure set the timing scale.
    """

    taus: np.ndarray
    betas: np.ndarray
    phi0: float
    phi1: float
    revival_index: int = 0

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float).copy()
        betas = np.asarray(self.betas, dtype=complex).copy()
        if taus.ndim != 1 or taus.size < 1:
            raise ValueError("taus must be a non-empty 1-d array")
        if betas.shape != taus.shape:
            raise ValueError("betas must have the same length as taus")
        if np.any(taus < 0) or not np.all(np.isfinite(taus)):
            raise ValueError("pulse durations must be finite and non-negative")
        if not np.all(np.isfinite(betas)):
            raise ValueError("displacements must be finite")
        if self.revival_index < 0:
            raise ValueError("revival_index must be >= 0")
        taus.flags.writeable = False
        betas.flags.writeable = False
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "betas", betas)

    @property
    def depth(self) -> int:
        return len(self.taus)

    @property
    def parameter_count(self) -> int:
        return 3 * self.depth + 2

    @property
    def total_time(self) -> float:
        return float(np.sum(self.taus))

    @property
    def displacement_budget(self) -> float:
        return float(np.sum(np.abs(self.betas)))


@dataclass(frozen=True, eq=False)
class DisplacementMatrix:
    """Truncated matrix of D(beta), cropped from an enlarged working space."""

    beta: complex
    matrix: np.ndarray
    cutoff: FockCutoff


@dataclass(frozen=True, eq=False)
class LayerDiagnostics:
    """Per-layer snapshots: number distributions and reduced-state maps."""

    index: int
    dist_after_jc: np.ndarray
    dist_after_disp: np.ndarray
    rho_magnitude: np.ndarray
    rho_phase: np.ndarray


def revival_time(n_target: int, revival_index: int, omega: float) -> float:
    """Timing scale (2l+1) pi sqrt(N) / omega of the collapse-revival structure."""
    if n_target < 1:
        raise ValueError(f"n_target must be >= 1, got {n_target}")
    if revival_index < 0:
        raise ValueError(f"revival_index must be >= 0, got {revival_index}")
    return (2 * revival_index + 1) * math.pi * math.sqrt(n_target) / omega


# ---------------------------------------------------------------------------
# coupling evolution
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _jc_tables(ncut: int, omega: float, delta: float):
    """Precomputed per-block quantities for the closed-form propagator."""
    n = np.arange(ncut, dtype=float)  # blocks {|e,n>, |g,n+1>}, n = 0..ncut-1
    g = omega * np.sqrt(n + 1.0)
    half_delta = delta / 2.0
    lam = np.sqrt(half_delta * half_delta + g * g)  # generalized Rabi frequency
    centre = -delta * (2.0 * n + 1.0) / 2.0  # mean block energy
    for arr in (n, g, lam, centre):
        arr.flags.writeable = False
    return g, half_delta, lam, centre


def _jc_apply(blocks: np.ndarray, tau: float, omega: float, delta: float, ncut: int) -> np.ndarray:
    """Apply exp(-i H tau) blockwise to a (2, ncut+1) amplitude array."""
    g, half_delta, lam, centre = _jc_tables(ncut, omega, delta)
    phase = np.exp(-1j * centre * tau)
    ct = np.cos(lam * tau)
    st = np.sin(lam * tau) / lam
    ce = blocks[1, :ncut]
    cg1 = blocks[0, 1:]
    out = np.empty_like(blocks)
    out[1, :ncut] = phase * ((ct - 1j * half_delta * st) * ce - 1j * g * st * cg1)
    out[0, 1:] = phase * (-1j * g * st * ce + (ct + 1j * half_delta * st) * cg1)
    out[0, 0] = blocks[0, 0]  # |g,0> is annihilated by H
    out[1, ncut] = np.exp(1j * delta * ncut * tau) * blocks[1, ncut]  # edge singlet
    return out


def jc_propagate(state: JointState, tau: float, params: JCParams) -> JointState:
    """Evolve a joint state for time tau under the coupling Hamiltonian."""
    if tau < 0:
        raise NegativeDuration(f"tau must be >= 0, got {tau}")
    blocks = _jc_apply(state.as_blocks(), tau, params.omega, params.delta, state.cutoff.ncut)
    return JointState(blocks.reshape(-1), state.cutoff)


def jc_propagator_oracle(tau: float, params: JCParams, cutoff: FockCutoff) -> np.ndarray:
    """Dense unitary exp(-i H tau) by scaling-and-squaring; test oracle only."""
    if tau < 0:
        raise NegativeDuration(f"tau must be >= 0, got {tau}")
    d = cutoff.dim
    a = np.zeros((d, d), dtype=complex)
    idx = np.arange(1, d)
    a[idx - 1, idx] = np.sqrt(idx)
    nhat = a.conj().T @ a
    eye2 = np.eye(2)
    sig_plus = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |e><g|, (g,e) order
    ham = (
        -params.delta * np.kron(eye2, nhat)
        + params.omega * (np.kron(sig_plus, a) + np.kron(sig_plus.conj().T, a.conj().T))
    )
    return expm(-1j * ham * tau)


# ---------------------------------------------------------------------------
# displacements
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _tridiag_eig(dim: int):
    """Eigendecomposition of the real tridiagonal T with off-diagonal sqrt(n+1)."""
    lam, vec = eigh_tridiagonal(np.zeros(dim), np.sqrt(np.arange(1.0, dim)))
    lam.flags.writeable = False
    vec.flags.writeable = False
    return lam, vec


def _working_dim(dim: int, beta: complex) -> int:
    """Enlarged dimension at which the displacement generator is exponentiated."""
    ncut = dim - 1
    return dim + 2 * math.ceil(abs(beta) * math.sqrt(ncut)) + 20


def _displacement_dense(beta: complex, dim: int) -> np.ndarray:
    """Exact exp of the truncated generator at the working dim, cropped to dim."""
    if beta == 0:
        return np.eye(dim, dtype=complex)
    dw = _working_dim(dim, beta)
    lam, vec = _tridiag_eig(dw)
    r = abs(beta)
    phases = np.exp(1j * np.arange(dw) * (math.pi / 2.0 + np.angle(beta)))
    core = (vec * np.exp(-1j * r * lam)) @ vec.T
    full = (phases[:, None] * core) * phases.conj()[None, :]
    return np.ascontiguousarray(full[:dim, :dim])


def _displacement_apply(blocks: np.ndarray, beta: complex, dim: int) -> np.ndarray:
    """Apply the cropped displacement to (..., dim) amplitudes without a dense build."""
    if beta == 0:
        return blocks.copy()
    dw = _working_dim(dim, beta)
    lam, vec = _tridiag_eig(dw)
    r = abs(beta)
    phases = np.exp(1j * np.arange(dw) * (math.pi / 2.0 + np.angle(beta)))
    padded = np.zeros(blocks.shape[:-1] + (dw,), dtype=complex)
    padded[..., :dim] = blocks
    t = (padded * phases.conj()) @ vec
    t *= np.exp(-1j * r * lam)
    t = t @ vec.T
    t *= phases
    return t[..., :dim]


def displacement_matrix(beta: complex, cutoff: FockCutoff) -> DisplacementMatrix:
    """Displacement operator on the truncated space.

    Built by exponentiating the truncated anti-Hermitian generator at an
    enlarged working cutoff and cropping, so the retained block agrees with
    the untruncated operator to well below 1e-9 away from the guard band.
    """
    return DisplacementMatrix(beta, _displacement_dense(beta, cutoff.dim), cutoff)


def displacement_safe_dim(beta: complex, cutoff: FockCutoff) -> int:
    """Largest sub-block dimension on which cropped-displacement products act unitarily.

    A displaced number state |n> has phase-space radius sqrt(n) + |beta|, so
    the crop at ncut distorts columns with (sqrt(n) + |beta|)^2 near ncut.
    Below the returned dimension, products like D(-beta) D(beta) match the
    identity to better than 1e-8.
    """
    safe = math.floor((math.sqrt(cutoff.ncut) - abs(beta)) ** 2) - 12
    return max(safe, 0)


# ---------------------------------------------------------------------------
# sequence application
# ---------------------------------------------------------------------------

def _masked_phase(rho: np.ndarray) -> np.ndarray:
    mag = np.abs(rho)
    phase = np.angle(rho)
    phase[mag < PHASE_MASK_REL * mag.max()] = 0.0
    return phase


def _propagate(
    blocks: np.ndarray,
    taus: np.ndarray,
    betas: np.ndarray,
    params: JCParams,
    ncut: int,
    collect: bool = False,
):
    """Run the layer loop on raw (2, ncut+1) amplitudes.

    Returns (blocks, max_guard_population, diagnostics-or-None). Leakage is
    tracked but not acted on here; callers decide whether to raise.
    """
    dim = ncut + 1
    max_guard = guard_band_population(blocks)
    diags = [] if collect else None
    for k in range(len(taus)):
        blocks = _jc_apply(blocks, float(taus[k]), params.omega, params.delta, ncut)
        max_guard = max(max_guard, guard_band_population(blocks))
        if collect:
            rho = blocks.T @ blocks.conj()
            dist_jc = np.real(np.diag(rho)).copy()
            mag = np.abs(rho)
            phase = _masked_phase(rho)
        blocks = _displacement_apply(blocks, complex(betas[k]), dim)
        max_guard = max(max_guard, guard_band_population(blocks))
        if collect:
            dist_disp = np.sum(np.abs(blocks) ** 2, axis=0)
            diags.append(
                LayerDiagnostics(
                    index=k + 1,
                    dist_after_jc=dist_jc,
                    dist_after_disp=dist_disp,
                    rho_magnitude=mag,
                    rho_phase=phase,
                )
            )
    return blocks, max_guard, diags


def apply_sequence(
    seq: PulseSequence,
    initial: JointState,
    params: JCParams,
    collect: bool = False,
    leakage_tol: float = LEAKAGE_TOL,
):
    """Apply all layers in order to the initial state.

    Returns (final JointState, diagnostics list or None, LeakageMonitor).
    Raises LeakageExceeded when the guard-band population of any intermediate
    state exceeds ``leakage_tol``.
    """
    blocks, max_guard, diags = _propagate(
        initial.as_blocks().copy(),
        seq.taus,
        seq.betas,
        params,
        initial.cutoff.ncut,
        collect=collect,
    )
    monitor = LeakageMonitor(max_top_population=max_guard, guard=GUARD_BAND)
    if max_guard > leakage_tol:
        raise LeakageExceeded(max_guard, leakage_tol)
    return JointState(blocks.reshape(-1), initial.cutoff), diags, monitor


# ---------------------------------------------------------------------------
# Wigner function
# ---------------------------------------------------------------------------

def wigner_value(rho: CavityDensityMatrix, alpha: complex) -> float:
    """Wigner function W(alpha) = (2/pi) Tr[rho D(2 alpha) Pi].

    The displaced-parity operator D(alpha) Pi D(alpha)^dag reduces to
    D(2 alpha) Pi, so a single displacement matrix per evaluation point
    suffices. Convention: W(0) = +2/pi for the vacuum.
    """
    dim = rho.cutoff.dim
    d2 = _displacement_dense(2.0 * complex(alpha), dim)
    parity = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    val = np.einsum("nm,mn,n->", rho.elements, d2, parity)
    return float(np.real(val)) * 2.0 / math.pi
