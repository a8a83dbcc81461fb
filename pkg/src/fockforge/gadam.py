"""Hybrid genetic + Adam optimizer for multi-pulse control sequences.

The search runs in three stages:

1. A single-layer (depth 1) solution is found by a deterministic stratified
   scan over (tau, beta) near the revival timing scale, with the measurement
   angles set to their analytic optimum per scan point, followed by Adam
   polish of the best candidates. Its duration fixes the target total time.
2. A population seeded by randomly partitioning that total time evolves for G
   generations. Each generation every individual receives a short Adam
   pre-optimization (the improved parameters replace the individual), the
   top-E survive unchanged, and the rest are rebuilt by tournament selection,
   uniform crossover, Gaussian mutation and a soft total-time rescale.
3. The best individual gets a long Adam refinement with cosine-decayed
   learning rate.

Gradients are central finite differences over all 3p+2 real coordinates.
Every random draw comes from a stream derived from (master_seed, stage,
generation, index), so results are bit-identical regardless of evaluation
order or parallelism.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .control import _loss_arrays
from .dynamics import JCParams, PulseSequence, revival_time
from .errors import (
    DepthMismatch,
    InfeasiblePartition,
    LeakageExceeded,
    NoConvergence,
)
from .seeding import STREAM_OFFSPRING, STREAM_TRANSFER, derive_rng

__all__ = [
    "GAdamConfig",
    "Individual",
    "OptimizationTrace",
    "sequence_to_theta",
    "theta_to_sequence",
    "gradient",
    "adam_run",
    "tournament_select",
    "uniform_crossover",
    "gaussian_mutate",
    "rescale_total_time",
    "transfer_init",
    "optimize_single_layer",
    "optimize",
]

T_TAR_SOURCES = ("single_layer_optimum", "revival_estimate")

# Stratified single-layer scan: fractions of the revival time and a coarse
# complex displacement grid; the best few cells seed the Adam polish.
_SCAN_TAU_FRACTIONS = np.linspace(0.75, 1.25, 21)
_SCAN_BETA_AXIS = np.arange(-2.0, 2.0 + 1e-9, 0.25)
_SCAN_TOP_K = 6
_FINAL_LR_FLOOR = 1e-4


@dataclass(frozen=True)
class GAdamConfig:
    """All optimizer hyperparameters.

    Fields set to None are resolved at run time from the problem instance:
    mutation_sigma_tau -> 0.02 * T_tar / p, tau_min -> 0.01 / omega,
    beta_max -> 2 sqrt(N).
    """

    population_size: int = 32
    generations: int = 40
    elites: int = 4
    tournament_size: int = 3
    crossover_rate: float = 0.5
    mutation_sigma_tau: float | None = None
    mutation_sigma_beta: float = 0.1
    mutation_sigma_phi: float = 0.1
    epsilon_t: float = 0.05
    tau_min: float | None = None
    beta_max: float | None = None
    adam_pre_steps: int = 30
    adam_final_steps: int = 2000
    adam_lr: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    fd_step: float = 1e-5
    master_seed: int = 0
    t_tar_source: str = "single_layer_optimum"

    def __post_init__(self):
        if not 0 < self.elites < self.population_size:
            raise ValueError("need 0 < elites < population_size")
        if self.epsilon_t <= 0:
            raise ValueError("epsilon_t must be positive")
        if self.tau_min is not None and self.tau_min <= 0:
            raise ValueError("tau_min must be positive")
        if self.t_tar_source not in T_TAR_SOURCES:
            raise ValueError(f"t_tar_source must be one of {T_TAR_SOURCES}")

    def resolved(self, n_target: int, depth: int, omega: float, t_tar: float) -> "GAdamConfig":
        """Concrete copy with all None fields filled in for this problem."""
        return replace(
            self,
            mutation_sigma_tau=(
                self.mutation_sigma_tau
                if self.mutation_sigma_tau is not None
                else 0.02 * t_tar / depth
            ),
            tau_min=self.tau_min if self.tau_min is not None else 0.01 / omega,
            beta_max=self.beta_max if self.beta_max is not None else 2.0 * math.sqrt(n_target),
        )


@dataclass(frozen=True, eq=False)
class Individual:
    """Population member: a sequence, its loss, and its RNG stream id."""

    seq: PulseSequence
    loss: float
    rng_stream: tuple = ()

    @property
    def fitness(self) -> float:
        return 1.0 - self.loss


@dataclass(eq=False)
class OptimizationTrace:
    """Per-generation statistics and the refined result of one run."""

    best_fitness: list = field(default_factory=list)
    mean_fitness: list = field(default_factory=list)
    total_loss_evaluations: int = 0
    wall_time: float = 0.0
    final: Individual | None = None
    single_layer: Individual | None = None
    t_tar: float = 0.0
    rescale_violations: int = 0
    resolved_config: GAdamConfig | None = None


# ---------------------------------------------------------------------------
# parameter vector encoding
# ---------------------------------------------------------------------------

def sequence_to_theta(seq: PulseSequence) -> np.ndarray:
    """Flatten to [tau_1..tau_p, Re b_1, Im b_1, ..., Re b_p, Im b_p, phi0, phi1]."""
    p = seq.depth
    theta = np.empty(3 * p + 2)
    theta[:p] = seq.taus
    theta[p:3 * p:2] = seq.betas.real
    theta[p + 1:3 * p:2] = seq.betas.imag
    theta[-2] = seq.phi0
    theta[-1] = seq.phi1
    return theta


def theta_to_sequence(theta: np.ndarray, revival_index: int) -> PulseSequence:
    p = (len(theta) - 2) // 3
    return PulseSequence(
        taus=theta[:p],
        betas=theta[p:3 * p:2] + 1j * theta[p + 1:3 * p:2],
        phi0=float(theta[-2]),
        phi1=float(theta[-1]),
        revival_index=revival_index,
    )


def _project_theta(theta: np.ndarray, p: int, tau_min: float, beta_max: float) -> np.ndarray:
    """Clamp durations from below and displacement magnitudes from above."""
    out = theta.copy()
    np.maximum(out[:p], tau_min, out=out[:p])
    re = out[p:3 * p:2]
    im = out[p + 1:3 * p:2]
    mag = np.hypot(re, im)
    over = mag > beta_max
    if np.any(over):
        scale = beta_max / mag[over]
        re[over] *= scale
        im[over] *= scale
    return out


class _CountingObjective:
    """Loss as a function of theta, with leakage penalized and calls counted."""

    def __init__(
        self,
        depth: int,
        n_target: int,
        params: JCParams,
        alpha: complex,
        tau_floor: float = 0.0,
    ):
        self.depth = depth
        self.n_target = n_target
        self.params = params
        self.alpha = alpha
        self.tau_floor = tau_floor
        self.count = 0

    def __call__(self, theta: np.ndarray) -> float:
        self.count += 1
        p = self.depth
        taus = np.maximum(theta[:p], self.tau_floor)
        betas = theta[p:3 * p:2] + 1j * theta[p + 1:3 * p:2]
        try:
            return _loss_arrays(
                taus, betas, float(theta[-2]), float(theta[-1]),
                self.n_target, self.params, self.alpha,
            )
        except LeakageExceeded:
            return 1.0


# ---------------------------------------------------------------------------
# gradients and Adam
# ---------------------------------------------------------------------------

def _fd_gradient(
    objective: Callable[[np.ndarray], float], theta: np.ndarray, fd_step: float
) -> np.ndarray:
    """Central finite differences over every coordinate."""
    grad = np.empty_like(theta)
    for j in range(len(theta)):
        saved = theta[j]
        theta[j] = saved + fd_step
        f_plus = objective(theta)
        theta[j] = saved - fd_step
        f_minus = objective(theta)
        theta[j] = saved
        grad[j] = (f_plus - f_minus) / (2.0 * fd_step)
    return grad


def gradient(
    seq: PulseSequence,
    n_target: int,
    params: JCParams,
    alpha: complex,
    fd_step: float,
    tau_min: float = 0.0,
) -> np.ndarray:
    """Finite-difference gradient of the loss over all 3p+2 coordinates.

    Probe points have their durations clamped to tau_min before evaluation,
    so coordinates pinned at the bound report a zero derivative.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    obj = _CountingObjective(seq.depth, n_target, params, alpha, tau_floor=tau_min)
    return _fd_gradient(obj, sequence_to_theta(seq), fd_step)


def adam_run(
    ind: Individual,
    steps: int,
    config: GAdamConfig,
    objective: Callable[[np.ndarray], float],
    lr_decay: bool = False,
) -> Individual:
    """Adam with bound projection after each step; returns the best-seen iterate.

    With lr_decay the learning rate follows a cosine schedule from adam_lr
    down to 1e-4 over the run (used for the final refinement).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0:
        return ind
    p = ind.seq.depth
    tau_min = config.tau_min if config.tau_min is not None else 0.0
    beta_max = config.beta_max if config.beta_max is not None else math.inf
    theta = sequence_to_theta(ind.seq)
    best_loss = objective(theta)
    best_theta = theta.copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2 = config.adam_beta1, config.adam_beta2
    for t in range(1, steps + 1):
        g = _fd_gradient(objective, theta, config.fd_step)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        if lr_decay:
            lr = _FINAL_LR_FLOOR + 0.5 * (config.adam_lr - _FINAL_LR_FLOOR) * (
                1.0 + math.cos(math.pi * (t - 1) / steps)
            )
        else:
            lr = config.adam_lr
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        theta = _project_theta(theta, p, tau_min, beta_max)
        current = objective(theta)
        if current < best_loss:
            best_loss = current
            best_theta = theta.copy()
    return Individual(
        seq=theta_to_sequence(best_theta, ind.seq.revival_index),
        loss=best_loss,
        rng_stream=ind.rng_stream,
    )


# ---------------------------------------------------------------------------
# genetic operators
# ---------------------------------------------------------------------------

def tournament_select(pop: Sequence[Individual], k: int, rng: np.random.Generator) -> Individual:
    """Best of k distinct uniformly drawn members; ties go to the lowest index."""
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    if not pop:
        raise ValueError("population is empty")
    idx = rng.choice(len(pop), size=min(k, len(pop)), replace=False)
    best = min(idx, key=lambda i: (pop[i].loss, i))
    return pop[best]


def uniform_crossover(
    a: Individual, b: Individual, rate: float, rng: np.random.Generator
) -> Individual:
    """Child takes each control unit from parent b with probability ``rate``.

    Units are each duration, each displacement (real and imaginary parts move
    together), and each measurement angle. The child's loss is unset (NaN)
    until evaluated.
    """
    p = a.seq.depth
    if b.seq.depth != p:
        raise DepthMismatch(f"parent depths differ: {p} vs {b.seq.depth}")
    ta = sequence_to_theta(a.seq)
    tb = sequence_to_theta(b.seq)
    child = ta.copy()
    for unit in range(p):  # durations
        if rng.random() < rate:
            child[unit] = tb[unit]
    for unit in range(p):  # displacements, Re and Im together
        if rng.random() < rate:
            child[p + 2 * unit] = tb[p + 2 * unit]
            child[p + 2 * unit + 1] = tb[p + 2 * unit + 1]
    for unit in (3 * p, 3 * p + 1):  # angles
        if rng.random() < rate:
            child[unit] = tb[unit]
    return Individual(
        seq=theta_to_sequence(child, a.seq.revival_index),
        loss=math.nan,
        rng_stream=a.rng_stream,
    )


def gaussian_mutate(ind: Individual, config: GAdamConfig, rng: np.random.Generator) -> Individual:
    """Zero-mean Gaussian jitter per coordinate type, then bound projection."""
    p = ind.seq.depth
    sigma_tau = config.mutation_sigma_tau if config.mutation_sigma_tau is not None else 0.0
    tau_min = config.tau_min if config.tau_min is not None else 0.0
    beta_max = config.beta_max if config.beta_max is not None else math.inf
    theta = sequence_to_theta(ind.seq)
    theta[:p] += rng.normal(0.0, sigma_tau, size=p)
    theta[p:3 * p] += rng.normal(0.0, config.mutation_sigma_beta, size=2 * p)
    theta[-2:] += rng.normal(0.0, config.mutation_sigma_phi, size=2)
    theta = _project_theta(theta, p, tau_min, beta_max)
    return Individual(
        seq=theta_to_sequence(theta, ind.seq.revival_index),
        loss=math.nan,
        rng_stream=ind.rng_stream,
    )


def rescale_total_time(
    seq: PulseSequence, t_tar: float, epsilon_t: float, tau_min: float = 0.0
) -> PulseSequence:
    """Restore the target total time when the deviation exceeds the tolerance.

    A single proportional rescale of all durations, followed by one clamp to
    tau_min; the rescale is not iterated even if the clamp re-breaks the
    tolerance (callers may flag that case).
    """
    if t_tar <= 0:
        raise ValueError("t_tar must be positive")
    total = seq.total_time
    if abs(total - t_tar) / t_tar <= epsilon_t:
        return seq
    taus = np.maximum(seq.taus * (t_tar / total), tau_min)
    return PulseSequence(
        taus=taus,
        betas=seq.betas,
        phi0=seq.phi0,
        phi1=seq.phi1,
        revival_index=seq.revival_index,
    )


def transfer_init(
    single: Individual,
    p: int,
    config: GAdamConfig,
    rng: np.random.Generator,
    t_tar: float | None = None,
) -> list[Individual]:
    """Population seeded from the depth-1 optimum.

    Each candidate partitions the target total time into p random segments of
    at least tau_min (rejection sampling over sorted uniform cut points, with
    an equal-split fallback after 1000 rejections), keeps the single-layer
    displacement in the last slot and zero displacement elsewhere, and
    inherits the measurement angles. Losses are left unset.
    """
    if p < 1:
        raise ValueError("depth must be >= 1")
    if t_tar is None:
        t_tar = single.seq.total_time
    tau_min = config.tau_min if config.tau_min is not None else 0.0
    if p * tau_min > t_tar:
        raise InfeasiblePartition(
            f"{p} segments of at least {tau_min} exceed total time {t_tar}"
        )
    out = []
    for i in range(config.population_size):
        if p == 1:
            seq = replace(single.seq)
            out.append(Individual(seq=seq, loss=math.nan, rng_stream=(i,)))
            continue
        taus = None
        for _ in range(1000):
            cuts = np.sort(rng.uniform(0.0, t_tar, size=p - 1))
            cand = np.diff(np.concatenate(([0.0], cuts, [t_tar])))
            if cand.min() >= tau_min:
                taus = cand
                break
        if taus is None:
            taus = np.full(p, t_tar / p)
        betas = np.zeros(p, dtype=complex)
        betas[-1] = single.seq.betas[0]
        seq = PulseSequence(
            taus=taus,
            betas=betas,
            phi0=single.seq.phi0,
            phi1=single.seq.phi1,
            revival_index=single.seq.revival_index,
        )
        out.append(Individual(seq=seq, loss=math.nan, rng_stream=(i,)))
    return out


# ---------------------------------------------------------------------------
# single-layer stage
# ---------------------------------------------------------------------------

def optimize_single_layer(
    n_target: int,
    revival_index: int,
    params: JCParams,
    config: GAdamConfig,
    alpha: complex | None = None,
) -> Individual:
    """Depth-1 optimum from a stratified scan plus multi-start Adam polish.

    Scan points place the duration near the revival timing scale and the
    displacement on a coarse complex grid; the measurement angles are set
    analytically per point (the qubit vector aligned with the target-index
    amplitudes maximizes the overlap). The best cells are polished by Adam
    and the winner receives the full final refinement.
    """
    from .control import _initial_blocks  # local import to avoid cycle at module load
    from .dynamics import _displacement_apply, _jc_apply
    from .hilbert import default_cutoff

    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    if alpha is None:
        alpha = math.sqrt(n_target)
    t_rev = revival_time(n_target, revival_index, params.omega)
    cfg = config.resolved(n_target, 1, params.omega, t_rev)

    ncut = default_cutoff(n_target, alpha, beta_budget=float(np.max(np.abs(_SCAN_BETA_AXIS))) * 1.5).ncut
    dim = ncut + 1
    init = _initial_blocks(complex(alpha), ncut)

    scored = []
    betas_grid = [
        complex(br, bi) for br in _SCAN_BETA_AXIS for bi in _SCAN_BETA_AXIS
    ]
    for frac in _SCAN_TAU_FRACTIONS:
        tau = float(frac * t_rev)
        after_jc = _jc_apply(init.copy(), tau, params.omega, params.delta, ncut)
        for beta in betas_grid:
            blocks = (
                _displacement_apply(after_jc, beta, dim) if beta != 0 else after_jc
            )
            reach = abs(blocks[0, n_target]) ** 2 + abs(blocks[1, n_target]) ** 2
            scored.append((1.0 - reach, tau, beta, blocks[:, n_target].copy()))
    scored.sort(key=lambda item: item[0])

    objective = _CountingObjective(1, n_target, params, alpha, tau_floor=cfg.tau_min)
    polish_steps = max(150, 10 * cfg.adam_pre_steps)
    best: Individual | None = None
    for loss_lb, tau, beta, v in scored[:_SCAN_TOP_K]:
        phi0 = 2.0 * math.atan2(abs(v[1]), abs(v[0]))
        phi1 = float(np.angle(v[1]) - np.angle(v[0]))
        seq = PulseSequence(
            taus=np.array([tau]),
            betas=np.array([beta], dtype=complex),
            phi0=phi0,
            phi1=phi1,
            revival_index=revival_index,
        )
        cand = adam_run(
            Individual(seq=seq, loss=math.nan, rng_stream=()),
            polish_steps,
            cfg,
            objective,
        )
        if best is None or cand.loss < best.loss:
            best = cand
    best = adam_run(best, cfg.adam_final_steps, cfg, objective, lr_decay=True)
    if best.loss > 0.999:
        raise NoConvergence(
            f"single-layer loss {best.loss:.6f} indistinguishable from 1; "
            "check coupling, target index and cutoff"
        )
    return best


# ---------------------------------------------------------------------------
# full loop
# ---------------------------------------------------------------------------

def optimize(
    n_target: int,
    depth: int,
    revival_index: int,
    params: JCParams,
    config: GAdamConfig,
    alpha: complex | None = None,
    single: Individual | None = None,
) -> OptimizationTrace:
    """Transfer init, G generations of Adam + genetic search, final refinement.

    A precomputed single-layer solution can be injected through ``single``
    (used by sweeps so all depths for one target share the same timing
    scale); by default it is computed here.
    """
    t_start = time.perf_counter()
    if alpha is None:
        alpha = math.sqrt(n_target)
    if single is None:
        single = optimize_single_layer(n_target, revival_index, params, config, alpha)
    if config.t_tar_source == "revival_estimate":
        t_tar = revival_time(n_target, revival_index, params.omega)
    else:
        t_tar = single.seq.total_time
    cfg = config.resolved(n_target, depth, params.omega, t_tar)
    objective = _CountingObjective(
        depth, n_target, params, alpha, tau_floor=cfg.tau_min
    )

    trace = OptimizationTrace(single_layer=single, t_tar=t_tar, resolved_config=cfg)

    rng_transfer = derive_rng(cfg.master_seed, STREAM_TRANSFER)
    pop = transfer_init(single, depth, cfg, rng_transfer, t_tar=t_tar)
    pop = [
        Individual(ind.seq, objective(sequence_to_theta(ind.seq)), ind.rng_stream)
        for ind in pop
    ]
    pop.sort(key=lambda ind: ind.loss)
    trace.best_fitness.append(pop[0].fitness)
    trace.mean_fitness.append(float(np.mean([ind.fitness for ind in pop])))

    for gen in range(1, cfg.generations + 1):
        pop = [adam_run(ind, cfg.adam_pre_steps, cfg, objective) for ind in pop]
        order = sorted(range(len(pop)), key=lambda i: (pop[i].loss, i))
        pop = [pop[i] for i in order]
        trace.best_fitness.append(pop[0].fitness)
        trace.mean_fitness.append(float(np.mean([ind.fitness for ind in pop])))
        if gen == cfg.generations:
            break
        elites = pop[: cfg.elites]
        offspring = []
        for j in range(cfg.population_size - cfg.elites):
            rng = derive_rng(cfg.master_seed, STREAM_OFFSPRING, gen, j)
            parent_a = tournament_select(pop, cfg.tournament_size, rng)
            parent_b = tournament_select(pop, cfg.tournament_size, rng)
            child = uniform_crossover(parent_a, parent_b, cfg.crossover_rate, rng)
            child = gaussian_mutate(child, cfg, rng)
            seq = rescale_total_time(child.seq, t_tar, cfg.epsilon_t, cfg.tau_min)
            if abs(seq.total_time - t_tar) / t_tar > cfg.epsilon_t:
                trace.rescale_violations += 1
            offspring.append(
                Individual(seq=seq, loss=math.nan, rng_stream=(gen, j))
            )
        pop = elites + offspring

    best = pop[0]
    final = adam_run(best, cfg.adam_final_steps, cfg, objective, lr_decay=True)
    # re-evaluate without the leakage penalty so a leaking winner raises
    final_loss = _loss_arrays(
        final.seq.taus, final.seq.betas, final.seq.phi0, final.seq.phi1,
        n_target, params, alpha,
    )
    trace.final = Individual(final.seq, final_loss, final.rng_stream)
    trace.total_loss_evaluations = objective.count
    trace.wall_time = time.perf_counter() - t_start
    return trace
