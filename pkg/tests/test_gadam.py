"""Tests for the hybrid genetic/Adam optimizer building blocks."""

import math

import numpy as np
import pytest

from fockforge.control import loss
from fockforge.dynamics import JCParams, PulseSequence, revival_time
from fockforge.errors import DepthMismatch, InfeasiblePartition
from fockforge.gadam import (
    GAdamConfig,
    Individual,
    adam_run,
    gaussian_mutate,
    gradient,
    optimize,
    optimize_single_layer,
    rescale_total_time,
    sequence_to_theta,
    theta_to_sequence,
    tournament_select,
    transfer_init,
    uniform_crossover,
)

PARAMS = JCParams(omega=1.0, delta=0.0)


def random_sequence(rng, depth, tau_scale=3.0):
    return PulseSequence(
        taus=rng.uniform(0.3, tau_scale, size=depth),
        betas=rng.normal(0, 0.3, size=depth) + 1j * rng.normal(0, 0.3, size=depth),
        phi0=rng.uniform(0, math.pi),
        phi1=rng.uniform(0, 2 * math.pi),
        revival_index=1,
    )


class TestThetaEncoding:
    def test_roundtrip(self):
        rng = np.random.default_rng(0)
        seq = random_sequence(rng, 4)
        theta = sequence_to_theta(seq)
        assert len(theta) == seq.parameter_count == 14
        back = theta_to_sequence(theta, seq.revival_index)
        assert np.array_equal(back.taus, seq.taus)
        assert np.array_equal(back.betas, seq.betas)
        assert back.phi0 == seq.phi0 and back.phi1 == seq.phi1


class TestGradient:
    def test_zero_at_exact_optimum(self):
        # resonant half cycle from |e,0> prepares |g,1> exactly (loss 0)
        seq = PulseSequence(taus=[math.pi / 2], betas=[0.0], phi0=0.0, phi1=0.0)
        g = gradient(seq, 1, PARAMS, alpha=0.0, fd_step=1e-5)
        assert np.linalg.norm(g) <= 10 * 1e-5

    def test_matches_forward_difference(self):
        rng = np.random.default_rng(3)
        alpha = math.sqrt(4)
        h = 1e-5
        seq = random_sequence(rng, 2)
        g = gradient(seq, 4, PARAMS, alpha, fd_step=h)
        theta = sequence_to_theta(seq)
        for j in range(len(theta)):
            tp = theta.copy()
            tp[j] += h
            f_plus = loss(theta_to_sequence(tp, 1), 4, PARAMS, alpha)
            f0 = loss(seq, 4, PARAMS, alpha)
            forward = (f_plus - f0) / h
            assert abs(g[j] - forward) < 50 * h  # one-sided differences are O(h) off

    def test_directional_derivative(self):
        rng = np.random.default_rng(11)
        alpha = math.sqrt(4)
        h = 1e-5
        for depth in (2, 5):
            seq = random_sequence(rng, depth)
            g = gradient(seq, 4, PARAMS, alpha, fd_step=h)
            theta = sequence_to_theta(seq)
            u = rng.normal(size=len(theta))
            u /= np.linalg.norm(u)
            f_plus = loss(theta_to_sequence(theta + h * u, 1), 4, PARAMS, alpha)
            f_minus = loss(theta_to_sequence(theta - h * u, 1), 4, PARAMS, alpha)
            directional = (f_plus - f_minus) / (2 * h)
            assert abs(float(g @ u) - directional) < 1e-6


class TestAdamRun:
    def test_zero_steps_is_identity(self):
        rng = np.random.default_rng(1)
        seq = random_sequence(rng, 2)
        ind = Individual(seq=seq, loss=0.5)
        out = adam_run(ind, 0, GAdamConfig(), lambda theta: 0.5)
        assert out is ind

    def test_best_seen_contract(self):
        rng = np.random.default_rng(2)
        seq = random_sequence(rng, 2)
        ind = Individual(seq=seq, loss=math.nan)
        alpha = math.sqrt(4)

        def objective(theta):
            return loss(theta_to_sequence(theta, 1), 4, PARAMS, alpha)

        start_loss = objective(sequence_to_theta(seq))
        cfg = GAdamConfig(tau_min=0.01, beta_max=4.0)
        out = adam_run(ind, 15, cfg, objective)
        assert out.loss <= start_loss
        assert abs(out.loss - objective(sequence_to_theta(out.seq))) < 1e-15

    def test_quadratic_convergence(self):
        rng = np.random.default_rng(4)
        target = np.concatenate(
            [rng.uniform(0.5, 2.0, size=1), rng.normal(0, 1, size=2), rng.normal(0, 1, size=2)]
        )

        def objective(theta):
            return float(np.sum((theta - target) ** 2))

        seq = PulseSequence(taus=[1.0], betas=[0.0], phi0=0.0, phi1=0.0)
        cfg = GAdamConfig(adam_lr=0.05, tau_min=1e-6, beta_max=50.0)
        out = adam_run(Individual(seq=seq, loss=math.nan), 2000, cfg, objective)
        assert np.max(np.abs(sequence_to_theta(out.seq) - target)) < 1e-4


class TestTournament:
    def _population(self):
        seq = PulseSequence(taus=[1.0], betas=[0.0], phi0=0.0, phi1=0.0)
        losses = [0.9, 0.4, 0.7, 0.2, 0.5, 0.8]
        return [Individual(seq=seq, loss=l) for l in losses]

    def test_full_tournament_returns_global_best(self):
        pop = self._population()
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert tournament_select(pop, len(pop), rng).loss == 0.2

    def test_single_entry_is_uniform(self):
        pop = self._population()
        rng = np.random.default_rng(1)
        counts = np.zeros(len(pop))
        for _ in range(6000):
            winner = tournament_select(pop, 1, rng)
            counts[[ind.loss for ind in pop].index(winner.loss)] += 1
        assert np.all(counts > 800)  # each member drawn roughly 1000 times

    def test_selection_pressure_monotone_in_k(self):
        pop = self._population()
        means = []
        for k in (1, 2, 4, 6):
            rng = np.random.default_rng(42)
            fits = [tournament_select(pop, k, rng).fitness for _ in range(10000)]
            means.append(np.mean(fits))
        assert all(m2 >= m1 - 1e-12 for m1, m2 in zip(means, means[1:]))


class TestCrossover:
    def test_rate_zero_clones_first_parent(self):
        rng = np.random.default_rng(0)
        a = Individual(seq=random_sequence(rng, 3), loss=0.1)
        b = Individual(seq=random_sequence(rng, 3), loss=0.2)
        child = uniform_crossover(a, b, 0.0, np.random.default_rng(1))
        assert np.array_equal(sequence_to_theta(child.seq), sequence_to_theta(a.seq))

    def test_rate_one_clones_second_parent(self):
        rng = np.random.default_rng(0)
        a = Individual(seq=random_sequence(rng, 3), loss=0.1)
        b = Individual(seq=random_sequence(rng, 3), loss=0.2)
        child = uniform_crossover(a, b, 1.0, np.random.default_rng(1))
        assert np.array_equal(sequence_to_theta(child.seq), sequence_to_theta(b.seq))

    def test_every_unit_from_a_parent(self):
        rng = np.random.default_rng(5)
        a = Individual(seq=random_sequence(rng, 4), loss=0.1)
        b = Individual(seq=random_sequence(rng, 4), loss=0.2)
        child = uniform_crossover(a, b, 0.5, np.random.default_rng(2))
        p = 4
        ta, tb, tc = (sequence_to_theta(x.seq) for x in (a, b, child))
        for k in range(p):
            assert tc[k] in (ta[k], tb[k])
            beta_c = (tc[p + 2 * k], tc[p + 2 * k + 1])
            assert beta_c in [
                (ta[p + 2 * k], ta[p + 2 * k + 1]),
                (tb[p + 2 * k], tb[p + 2 * k + 1]),
            ]
        for j in (-2, -1):
            assert tc[j] in (ta[j], tb[j])

    def test_depth_mismatch(self):
        rng = np.random.default_rng(0)
        a = Individual(seq=random_sequence(rng, 2), loss=0.1)
        b = Individual(seq=random_sequence(rng, 3), loss=0.2)
        with pytest.raises(DepthMismatch):
            uniform_crossover(a, b, 0.5, np.random.default_rng(0))


class TestMutation:
    def test_zero_sigmas_change_nothing(self):
        rng = np.random.default_rng(0)
        ind = Individual(seq=random_sequence(rng, 3), loss=0.3)
        cfg = GAdamConfig(
            mutation_sigma_tau=0.0, mutation_sigma_beta=0.0, mutation_sigma_phi=0.0,
            tau_min=1e-6, beta_max=100.0,
        )
        out = gaussian_mutate(ind, cfg, np.random.default_rng(1))
        assert np.array_equal(sequence_to_theta(out.seq), sequence_to_theta(ind.seq))

    def test_durations_respect_floor(self):
        cfg = GAdamConfig(
            mutation_sigma_tau=1.0, mutation_sigma_beta=0.1, mutation_sigma_phi=0.1,
            tau_min=0.05, beta_max=100.0,
        )
        seq = PulseSequence(taus=[0.06, 0.06], betas=[0.0, 0.0], phi0=0.0, phi1=0.0)
        ind = Individual(seq=seq, loss=0.5)
        for trial in range(200):
            out = gaussian_mutate(ind, cfg, np.random.default_rng(trial))
            assert np.all(out.seq.taus >= 0.05)

    def test_perturbations_have_zero_mean(self):
        sigma = 0.05
        cfg = GAdamConfig(
            mutation_sigma_tau=sigma, mutation_sigma_beta=sigma, mutation_sigma_phi=sigma,
            tau_min=1e-9, beta_max=100.0,
        )
        seq = PulseSequence(taus=[5.0, 5.0], betas=[0.0, 0.0], phi0=0.0, phi1=0.0)
        ind = Individual(seq=seq, loss=0.5)
        base = sequence_to_theta(seq)
        rng = np.random.default_rng(123)
        deltas = np.array(
            [sequence_to_theta(gaussian_mutate(ind, cfg, rng).seq) - base for _ in range(10000)]
        )
        assert np.all(np.abs(deltas.mean(axis=0)) < 3 * sigma / 100)


class TestRescale:
    def test_rescales_large_deviation(self):
        seq = PulseSequence(taus=[1.0, 2.0, 3.0], betas=[0.0] * 3, phi0=0.0, phi1=0.0)
        out = rescale_total_time(seq, 12.0, 0.1)
        assert np.allclose(out.taus, [2.0, 4.0, 6.0], atol=1e-12)

    def test_keeps_small_deviation(self):
        seq = PulseSequence(taus=[1.0, 2.0, 3.0], betas=[0.0] * 3, phi0=0.0, phi1=0.0)
        out = rescale_total_time(seq, 6.3, 0.1)  # deviation ~4.8%
        assert out is seq

    def test_exact_total_unchanged(self):
        seq = PulseSequence(taus=[5.0], betas=[0.0], phi0=0.0, phi1=0.0)
        assert rescale_total_time(seq, 5.0, 0.01) is seq

    def test_floor_projection_may_rebreak_tolerance(self):
        # the rescale is a single pass: when the floor clamp afterwards
        # re-breaks the tolerance, the result is returned as-is (callers flag it)
        seq = PulseSequence(taus=[0.1, 0.1], betas=[0.0, 0.0], phi0=0.0, phi1=0.0)
        out = rescale_total_time(seq, 1.0, 0.05, tau_min=1.0)
        assert np.allclose(out.taus, [1.0, 1.0])
        assert abs(out.total_time - 1.0) / 1.0 > 0.05


class TestTransferInit:
    def _single(self, tau_total):
        seq = PulseSequence(
            taus=[tau_total], betas=[0.4 + 0.2j], phi0=1.0, phi1=0.3, revival_index=1
        )
        return Individual(seq=seq, loss=0.2)

    def test_depth_one_copies_single(self):
        cfg = GAdamConfig(population_size=8, tau_min=0.1)
        pop = transfer_init(self._single(10.0), 1, cfg, np.random.default_rng(0))
        assert len(pop) == 8
        for ind in pop:
            assert np.array_equal(ind.seq.taus, [10.0])
            assert np.array_equal(ind.seq.betas, [0.4 + 0.2j])

    def test_partition_properties(self):
        cfg = GAdamConfig(population_size=16, tau_min=0.1)
        pop = transfer_init(self._single(10.0), 4, cfg, np.random.default_rng(0))
        for ind in pop:
            assert ind.seq.total_time == pytest.approx(10.0, abs=1e-12)
            assert ind.seq.taus.min() >= 0.1
            assert np.all(ind.seq.betas[:-1] == 0.0)
            assert ind.seq.betas[-1] == 0.4 + 0.2j
            assert ind.seq.phi0 == 1.0 and ind.seq.phi1 == 0.3

    def test_infeasible_partition(self):
        cfg = GAdamConfig(population_size=4, elites=2, tau_min=0.1)
        with pytest.raises(InfeasiblePartition):
            transfer_init(self._single(10.0), 101, cfg, np.random.default_rng(0))


class TestSingleLayer:
    CFG = GAdamConfig(
        population_size=8, generations=2, elites=2,
        adam_pre_steps=10, adam_final_steps=300, master_seed=5,
    )

    def test_beats_do_nothing_baseline(self):
        best = optimize_single_layer(1, 0, PARAMS, self.CFG)
        assert best.loss < 1.0 - math.exp(-1.0)

    def test_beats_coarse_grid_oracle(self):
        # independent coarse grid over (tau, beta) with analytic angles
        best = optimize_single_layer(1, 0, PARAMS, self.CFG)
        t_rev = revival_time(1, 0, 1.0)
        oracle = 1.0
        for frac in np.linspace(0.8, 1.2, 9):
            for br in np.arange(-1.0, 1.01, 0.5):
                for bi in np.arange(-1.0, 1.01, 0.5):
                    seq = PulseSequence(
                        taus=[frac * t_rev], betas=[complex(br, bi)],
                        phi0=math.pi / 2, phi1=0.0,
                    )
                    rep_loss = 1.0  # best over angles computed analytically below
                    from fockforge.control import _loss_arrays  # noqa: PLC0415
                    from fockforge.hilbert import default_cutoff
                    from fockforge.control import _initial_blocks
                    from fockforge.dynamics import _propagate

                    ncut = default_cutoff(1, 1.0, abs(complex(br, bi))).ncut
                    blocks = _initial_blocks(complex(1.0), ncut).copy()
                    blocks, _, _ = _propagate(
                        blocks, seq.taus, seq.betas, PARAMS, ncut
                    )
                    reach = abs(blocks[0, 1]) ** 2 + abs(blocks[1, 1]) ** 2
                    oracle = min(oracle, 1.0 - reach)
        assert best.loss <= oracle + 1e-9

    def test_deterministic(self):
        a = optimize_single_layer(2, 0, PARAMS, self.CFG)
        b = optimize_single_layer(2, 0, PARAMS, self.CFG)
        assert a.loss == b.loss
        assert np.array_equal(a.seq.taus, b.seq.taus)
        assert np.array_equal(a.seq.betas, b.seq.betas)


class TestOptimize:
    CFG = GAdamConfig(
        population_size=6, generations=3, elites=2, adam_pre_steps=5,
        adam_final_steps=40, master_seed=11,
    )

    def test_monotone_and_bounded(self):
        trace = optimize(3, 2, 1, PARAMS, self.CFG)
        fits = trace.best_fitness
        assert len(fits) == self.CFG.generations + 1
        assert all(b >= a - 1e-15 for a, b in zip(fits, fits[1:]))
        cfg = trace.resolved_config
        assert np.all(trace.final.seq.taus >= cfg.tau_min)
        assert np.all(np.abs(trace.final.seq.betas) <= cfg.beta_max + 1e-12)
        assert trace.final.fitness == 1.0 - trace.final.loss
        assert trace.total_loss_evaluations > 0

    def test_bit_identical_reruns(self):
        t1 = optimize(3, 2, 1, PARAMS, self.CFG)
        t2 = optimize(3, 2, 1, PARAMS, self.CFG)
        assert t1.final.loss == t2.final.loss
        assert np.array_equal(t1.final.seq.taus, t2.final.seq.taus)
        assert np.array_equal(t1.final.seq.betas, t2.final.seq.betas)
        assert t1.best_fitness == t2.best_fitness

    def test_degenerate_loop(self):
        cfg = GAdamConfig(
            population_size=4, generations=0, elites=2, adam_pre_steps=5,
            adam_final_steps=30, master_seed=3,
        )
        trace = optimize(3, 2, 1, PARAMS, cfg)
        assert len(trace.best_fitness) == 1  # init row only
        assert trace.final.loss <= 1.0 - trace.best_fitness[0] + 1e-15
