"""Qubit projection, the optimization loss, and state-quality metrics.

The optimizer never builds density matrices: the loss is the pure-state
infidelity of the joint sequence output against the disentangled target
|psi_q(phi)> (x) |N>, which upper-bounds everything else we report. Traced
and post-selected fidelities are computed once per quality report.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import JCParams, PulseSequence, _propagate, apply_sequence
from .errors import LeakageExceeded, ZeroProbability
from .hilbert import (
    GUARD_BAND,
    LEAKAGE_TOL,
    CavityDensityMatrix,
    CavityState,
    FockCutoff,
    JointState,
    coherent_state,
    default_cutoff,
    partial_trace_qubit,
)

__all__ = [
    "ProjectionResult",
    "QualityReport",
    "qubit_state",
    "post_select",
    "loss",
    "fidelity",
    "quality",
]


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Post-selected cavity state and the probability of that outcome."""

    cavity: CavityState
    probability: float


@dataclass(frozen=True)
class QualityReport:
    """All state-quality figures for one sequence, from a single simulation."""

    loss: float
    fidelity_traced: float
    fidelity_postselected: float
    success_probability: float


def qubit_state(phi0: float, phi1: float) -> np.ndarray:
    """Normalized qubit vector cos(phi0/2)|g> + sin(phi0/2) e^{i phi1}|e>."""
    return np.array(
        [np.cos(phi0 / 2.0), np.sin(phi0 / 2.0) * np.exp(1j * phi1)], dtype=complex
    )


def post_select(state: JointState, phi0: float, phi1: float) -> ProjectionResult:
    """Project the qubit onto |psi_q(phi0, phi1)> and renormalize the cavity."""
    q = qubit_state(phi0, phi1)
    blocks = state.as_blocks()
    b = q[0].conjugate() * blocks[0] + q[1].conjugate() * blocks[1]
    prob = float(np.sum(np.abs(b) ** 2))
    if prob < 1e-12:
        raise ZeroProbability(f"projection weight {prob:.3e} below 1e-12")
    cavity = CavityState(b / np.sqrt(prob), state.cutoff)
    return ProjectionResult(cavity=cavity, probability=min(prob, 1.0))


def fidelity(rho: CavityDensityMatrix, n_target: int) -> float:
    """Overlap <N|rho|N> with the pure number-state target.

    For a pure target the general mixed-state fidelity reduces exactly to
    this diagonal element, so no matrix square roots are needed.
    """
    if not 0 <= n_target <= rho.cutoff.ncut:
        raise ValueError(f"target index {n_target} outside [0, {rho.cutoff.ncut}]")
    val = float(np.real(rho.elements[n_target, n_target]))
    return min(max(val, 0.0), 1.0)


@lru_cache(maxsize=16)
def _initial_blocks(alpha: complex, ncut: int) -> np.ndarray:
    """Cached (2, ncut+1) amplitudes of |e> (x) |alpha>."""
    cav = coherent_state(alpha, FockCutoff(ncut))
    blocks = np.zeros((2, ncut + 1), dtype=complex)
    blocks[1] = cav.amplitudes
    blocks.flags.writeable = False
    return blocks


def _loss_arrays(
    taus: np.ndarray,
    betas: np.ndarray,
    phi0: float,
    phi1: float,
    n_target: int,
    params: JCParams,
    alpha: complex,
    ncut: int | None = None,
) -> float:
    """Loss evaluation on raw parameter arrays; the optimizer hot path.

    Raises LeakageExceeded when the guard band fills up. The cutoff is
    derived from the sequence's own displacement budget unless given.
    """
    if ncut is None:
        ncut = default_cutoff(n_target, alpha, float(np.sum(np.abs(betas)))).ncut
    blocks = _initial_blocks(complex(alpha), ncut).copy()
    blocks, max_guard, _ = _propagate(blocks, taus, betas, params, ncut)
    if max_guard > LEAKAGE_TOL:
        raise LeakageExceeded(max_guard, LEAKAGE_TOL)
    q = qubit_state(phi0, phi1)
    overlap = q[0].conjugate() * blocks[0, n_target] + q[1].conjugate() * blocks[1, n_target]
    return float(min(max(1.0 - abs(overlap) ** 2, 0.0), 1.0))


def loss(
    seq: PulseSequence,
    n_target: int,
    params: JCParams,
    alpha: complex,
    cutoff: FockCutoff | None = None,
) -> float:
    """Proxy loss 1 - |<Psi(tau, beta)|psi_q (x) N>|^2 in [0, 1]."""
    ncut = cutoff.ncut if cutoff is not None else None
    if ncut is not None and n_target > ncut - GUARD_BAND:
        raise ValueError(
            f"target index {n_target} too close to cutoff {ncut} (guard {GUARD_BAND})"
        )
    return _loss_arrays(
        seq.taus, seq.betas, seq.phi0, seq.phi1, n_target, params, alpha, ncut
    )


def quality(
    seq: PulseSequence,
    n_target: int,
    params: JCParams,
    alpha: complex,
    cutoff: FockCutoff | None = None,
) -> QualityReport:
    """Run the sequence once; report loss plus traced/post-selected fidelities."""
    if cutoff is None:
        cutoff = default_cutoff(n_target, alpha, seq.displacement_budget)
    initial_blocks = _initial_blocks(complex(alpha), cutoff.ncut)
    initial = JointState(initial_blocks.reshape(-1), cutoff)
    final, _, _ = apply_sequence(seq, initial, params)

    q = qubit_state(seq.phi0, seq.phi1)
    blocks = final.as_blocks()
    overlap = (
        q[0].conjugate() * blocks[0, n_target] + q[1].conjugate() * blocks[1, n_target]
    )
    loss_val = float(min(max(1.0 - abs(overlap) ** 2, 0.0), 1.0))

    rho = partial_trace_qubit(final)
    f_traced = fidelity(rho, n_target)

    proj = post_select(final, seq.phi0, seq.phi1)
    f_post = float(min(abs(proj.cavity.amplitudes[n_target]) ** 2, 1.0))

    return QualityReport(
        loss=loss_val,
        fidelity_traced=f_traced,
        fidelity_postselected=f_post,
        success_probability=proj.probability,
    )
