"""Systematic-error and open-system analyses for optimized sequences.

Covers re-simulation under qubit-cavity detuning with FWHM extraction,
Monte-Carlo averaging over Gaussian pulse-timing and displacement-amplitude
noise, and Lindblad master-equation evolution with cavity decay and qubit
emission integrated by fixed-step fourth-order Runge-Kutta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .control import QualityReport, qubit_state, quality
from .dynamics import JCParams, PulseSequence, _displacement_dense
from .errors import TraceDrift
from .hilbert import FockCutoff, coherent_state, default_cutoff
from .seeding import STREAM_NOISE, derive_rng

__all__ = [
    "DetuningScan",
    "NoiseModel",
    "LindbladConfig",
    "JointDensityMatrix",
    "detuning_scan",
    "fwhm_from_profile",
    "noise_monte_carlo",
    "lindblad_rhs",
    "evolve_lindblad",
    "lindblad_propagate_sequence",
]

DISSIPATOR_CONVENTIONS = ("standard", "paper_literal")

# Trace-drift abort threshold during integration (standard convention only).
TRACE_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class DetuningScan:
    """Post-selected fidelity versus detuning, with the half-max width.

    The FWHM level is anchored to the scanned window: level = F_min +
    (F_max - F_min)/2. ``fwhm`` is None when the profile does not cross that
    level on both sides of the peak inside the window.
    """

    deltas: np.ndarray
    fidelities: np.ndarray
    fwhm: float | None


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian control-noise widths and the Monte-Carlo sample count."""

    sigma_tau: float = 0.0
    sigma_beta: float = 0.0
    realizations: int = 1

    def __post_init__(self):
        if self.sigma_tau < 0 or self.sigma_beta < 0:
            raise ValueError("noise widths must be non-negative")
        if self.realizations < 1:
            raise ValueError("need at least one realization")


@dataclass(frozen=True)
class LindbladConfig:
    """Decay rates, integrator step and dissipator convention.

    ``standard`` uses D[o]rho = 2 o rho o+ - o+o rho - rho o+o (trace
    preserving with the kappa/2, gamma/2 prefactors). ``paper_literal`` keeps
    o o+ in the anticommutator terms; it is NOT trace preserving and exists
    for auditability only.
    """

    kappa: float = 0.0
    gamma: float = 0.0
    dt: float = 1e-3
    dissipator_convention: str = "standard"

    def __post_init__(self):
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("decay rates must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dissipator_convention not in DISSIPATOR_CONVENTIONS:
            raise ValueError(
                f"dissipator_convention must be one of {DISSIPATOR_CONVENTIONS}"
            )

    def check_stability(self, params: JCParams | None):
        rates = [self.kappa, self.gamma]
        if params is not None:
            rates.append(params.omega)
        if self.dt * max(rates) > 0.05 + 1e-12:
            raise ValueError(
                f"dt = {self.dt} too large: dt * max(kappa, gamma, omega) "
                f"= {self.dt * max(rates):.3g} exceeds 0.05"
            )


@dataclass(frozen=True, eq=False)
class JointDensityMatrix:
    """Density matrix on qubit (x) truncated cavity, (g, e) block layout."""

    elements: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        d = 2 * self.cutoff.dim
        if rho.shape != (d, d):
            raise ValueError(f"expected ({d}, {d}) matrix, got shape {rho.shape}")
        object.__setattr__(self, "elements", rho)

    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))


# ---------------------------------------------------------------------------
# detuning
# ---------------------------------------------------------------------------

def fwhm_from_profile(deltas: np.ndarray, fidelities: np.ndarray) -> float | None:
    """Width between the half-maximum crossings bracketing the peak.

    Crossings are located by linear interpolation between neighbouring grid
    points; returns None unless a crossing exists on each side of the peak.
    """
    deltas = np.asarray(deltas, dtype=float)
    fids = np.asarray(fidelities, dtype=float)
    if len(deltas) < 3:
        return None
    level = fids.min() + (fids.max() - fids.min()) / 2.0
    peak = int(np.argmax(fids))

    def cross(i_lo, i_hi):
        f_lo, f_hi = fids[i_lo], fids[i_hi]
        if f_hi == f_lo:
            return deltas[i_lo]
        w = (level - f_lo) / (f_hi - f_lo)
        return deltas[i_lo] + w * (deltas[i_hi] - deltas[i_lo])

    left = None
    for i in range(peak, 0, -1):
        if fids[i - 1] <= level <= fids[i]:
            left = cross(i - 1, i)
            break
    right = None
    for i in range(peak, len(fids) - 1):
        if fids[i + 1] <= level <= fids[i]:
            right = cross(i + 1, i)
            break
    if left is None or right is None:
        return None
    return float(right - left)


def detuning_scan(
    seq: PulseSequence,
    n_target: int,
    params: JCParams,
    alpha: complex,
    deltas: np.ndarray,
) -> DetuningScan:
    """Re-simulate the fixed sequence at each detuning; controls unchanged."""
    deltas = np.asarray(deltas, dtype=float)
    fids = np.empty_like(deltas)
    for i, d in enumerate(deltas):
        rep = quality(seq, n_target, replace(params, delta=float(d)), alpha)
        fids[i] = rep.fidelity_postselected
    return DetuningScan(deltas=deltas, fidelities=fids, fwhm=fwhm_from_profile(deltas, fids))


# ---------------------------------------------------------------------------
# control noise
# ---------------------------------------------------------------------------

def noise_monte_carlo(
    seq: PulseSequence,
    n_target: int,
    params: JCParams,
    alpha: complex,
    model: NoiseModel,
    master_seed: int,
    tau_min: float = 0.0,
) -> tuple[float, float]:
    """Mean post-selected fidelity and its standard error under control noise.

    Per realization, each duration gets an independent N(0, sigma_tau^2)
    offset (clamped to tau_min from below) and each displacement an
    independent complex offset with N(0, sigma_beta^2) real and imaginary
    parts. Realization r draws from the stream (master_seed, noise, r), so
    the estimate is reproducible and order-independent.
    """
    p = seq.depth
    if model.sigma_tau == 0.0 and model.sigma_beta == 0.0:
        # every realization is bit-identical to the noiseless sequence
        return quality(seq, n_target, params, alpha).fidelity_postselected, 0.0
    fids = np.empty(model.realizations)
    for r in range(model.realizations):
        rng = derive_rng(master_seed, STREAM_NOISE, r)
        xi_tau = rng.normal(0.0, model.sigma_tau, size=p)
        xi_re = rng.normal(0.0, model.sigma_beta, size=p)
        xi_im = rng.normal(0.0, model.sigma_beta, size=p)
        noisy = PulseSequence(
            taus=np.maximum(seq.taus + xi_tau, tau_min),
            betas=seq.betas + xi_re + 1j * xi_im,
            phi0=seq.phi0,
            phi1=seq.phi1,
            revival_index=seq.revival_index,
        )
        fids[r] = quality(noisy, n_target, params, alpha).fidelity_postselected
    mean = float(np.mean(fids))
    if model.realizations == 1:
        return mean, 0.0
    stderr = float(np.std(fids, ddof=1) / math.sqrt(model.realizations))
    return mean, stderr


# ---------------------------------------------------------------------------
# Lindblad dynamics
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _joint_operators(ncut: int):
    """Dense annihilation and qubit-lowering operators on the joint space."""
    d = ncut + 1
    a = np.zeros((d, d), dtype=complex)
    idx = np.arange(1, d)
    a[idx - 1, idx] = np.sqrt(idx)
    eye2 = np.eye(2, dtype=complex)
    sig_minus = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
    a_joint = np.kron(eye2, a)
    sm_joint = np.kron(sig_minus, np.eye(d, dtype=complex))
    for arr in (a_joint, sm_joint):
        arr.flags.writeable = False
    return a_joint, sm_joint


@lru_cache(maxsize=16)
def _joint_hamiltonian(ncut: int, omega: float, delta: float):
    d = ncut + 1
    a_joint, sm_joint = _joint_operators(ncut)
    nhat = a_joint.conj().T @ a_joint
    ham = -delta * nhat + omega * (
        sm_joint.conj().T @ a_joint + a_joint.conj().T @ sm_joint
    )
    ham.flags.writeable = False
    return ham


@lru_cache(maxsize=16)
def _anticommutator_terms(ncut: int, convention: str):
    """Cached o+o (standard) or oo+ (paper_literal) for both jump operators."""
    a_joint, sm_joint = _joint_operators(ncut)
    if convention == "standard":
        anti_a = a_joint.conj().T @ a_joint
        anti_sm = sm_joint.conj().T @ sm_joint
    else:  # paper_literal keeps o o+ in the anticommutator terms
        anti_a = a_joint @ a_joint.conj().T
        anti_sm = sm_joint @ sm_joint.conj().T
    for arr in (anti_a, anti_sm):
        arr.flags.writeable = False
    return anti_a, anti_sm


def _dissipator(rho: np.ndarray, op: np.ndarray, anti: np.ndarray) -> np.ndarray:
    return 2.0 * (op @ rho @ op.conj().T) - anti @ rho - rho @ anti


def _rhs(rho: np.ndarray, ham: np.ndarray | None, config: LindbladConfig,
         a_joint: np.ndarray, sm_joint: np.ndarray,
         anti_a: np.ndarray, anti_sm: np.ndarray) -> np.ndarray:
    if ham is not None:
        out = -1j * (ham @ rho - rho @ ham)
    else:
        out = np.zeros_like(rho)
    if config.kappa > 0:
        out += (config.kappa / 2.0) * _dissipator(rho, a_joint, anti_a)
    if config.gamma > 0:
        out += (config.gamma / 2.0) * _dissipator(rho, sm_joint, anti_sm)
    return out


def lindblad_rhs(
    rho: JointDensityMatrix, params: JCParams | None, config: LindbladConfig
) -> JointDensityMatrix:
    """Right-hand side -i[H, rho] + (kappa/2) D[a] rho + (Gamma/2) D[sigma-] rho.

    ``params=None`` drops the Hamiltonian term (pure dissipation). The result
    is a matrix of the same shape, not a normalized state.
    """
    ncut = rho.cutoff.ncut
    a_joint, sm_joint = _joint_operators(ncut)
    anti_a, anti_sm = _anticommutator_terms(ncut, config.dissipator_convention)
    ham = (
        _joint_hamiltonian(ncut, params.omega, params.delta)
        if params is not None
        else None
    )
    return JointDensityMatrix(
        _rhs(rho.elements, ham, config, a_joint, sm_joint, anti_a, anti_sm), rho.cutoff
    )


def evolve_lindblad(
    rho: JointDensityMatrix,
    duration: float,
    params: JCParams | None,
    config: LindbladConfig,
) -> JointDensityMatrix:
    """Fixed-step RK4 integration of the master equation over ``duration``.

    The step divides the duration exactly (n = ceil(duration/dt)). Under the
    standard convention the trace is monitored every step and TraceDrift is
    raised if it strays beyond 1e-4.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    config.check_stability(params)
    ncut = rho.cutoff.ncut
    a_joint, sm_joint = _joint_operators(ncut)
    anti_a, anti_sm = _anticommutator_terms(ncut, config.dissipator_convention)
    ham = (
        _joint_hamiltonian(ncut, params.omega, params.delta)
        if params is not None
        else None
    )
    mat = rho.elements.copy()
    if duration == 0:
        return JointDensityMatrix(mat, rho.cutoff)
    steps = max(1, math.ceil(duration / config.dt))
    h = duration / steps
    check_trace = config.dissipator_convention == "standard"
    for _ in range(steps):
        k1 = _rhs(mat, ham, config, a_joint, sm_joint, anti_a, anti_sm)
        k2 = _rhs(mat + 0.5 * h * k1, ham, config, a_joint, sm_joint, anti_a, anti_sm)
        k3 = _rhs(mat + 0.5 * h * k2, ham, config, a_joint, sm_joint, anti_a, anti_sm)
        k4 = _rhs(mat + h * k3, ham, config, a_joint, sm_joint, anti_a, anti_sm)
        mat = mat + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if check_trace:
            tr = float(np.real(np.trace(mat)))
            if abs(tr - 1.0) > TRACE_TOL:
                raise TraceDrift(tr)
    return JointDensityMatrix(mat, rho.cutoff)


def lindblad_propagate_sequence(
    seq: PulseSequence,
    n_target: int,
    params: JCParams,
    alpha: complex,
    config: LindbladConfig,
    cutoff: FockCutoff | None = None,
) -> QualityReport:
    """Evolve |e, alpha><e, alpha| through the sequence with dissipation.

    Coupling segments are integrated with RK4; displacements are applied as
    exact unitaries D rho D+. Reports the same quality figures as the unitary
    path, with the loss generalized to 1 - <target| rho |target>.
    """
    if cutoff is None:
        cutoff = default_cutoff(n_target, alpha, seq.displacement_budget)
    dim = cutoff.dim
    cav = coherent_state(alpha, cutoff)
    psi = np.zeros(2 * dim, dtype=complex)
    psi[dim:] = cav.amplitudes
    rho = JointDensityMatrix(np.outer(psi, psi.conj()), cutoff)

    for k in range(seq.depth):
        rho = evolve_lindblad(rho, float(seq.taus[k]), params, config)
        beta = complex(seq.betas[k])
        if beta != 0:
            d_block = _displacement_dense(beta, dim)
            d_joint = np.kron(np.eye(2, dtype=complex), d_block)
            rho = JointDensityMatrix(d_joint @ rho.elements @ d_joint.conj().T, cutoff)

    mat = rho.elements
    q = qubit_state(seq.phi0, seq.phi1)
    # loss against the disentangled pure target |psi_q> (x) |N>
    target = np.zeros(2 * dim, dtype=complex)
    target[n_target] = q[0]
    target[dim + n_target] = q[1]
    loss_val = 1.0 - float(np.real(target.conj() @ mat @ target))

    # traced cavity state: sum over the two qubit blocks
    gg = mat[:dim, :dim]
    ee = mat[dim:, dim:]
    f_traced = float(np.real(gg[n_target, n_target] + ee[n_target, n_target]))

    # post-selection on |psi_q>: cavity matrix <psi_q| rho |psi_q>
    ge = mat[:dim, dim:]
    eg = mat[dim:, :dim]
    rho_ps = (
        abs(q[0]) ** 2 * gg
        + abs(q[1]) ** 2 * ee
        + q[0].conjugate() * q[1] * ge
        + q[1].conjugate() * q[0] * eg
    )
    prob = float(np.real(np.trace(rho_ps)))
    f_post = float(np.real(rho_ps[n_target, n_target])) / prob if prob > 1e-12 else 0.0

    clip = lambda x: float(min(max(x, 0.0), 1.0))
    return QualityReport(
        loss=clip(loss_val),
        fidelity_traced=clip(f_traced),
        fidelity_postselected=clip(f_post),
        success_probability=clip(prob),
    )
