"""Batch front-end: JSON run configs in, JSON reports plus CSV series out.

Usage:
    fockforge <mode> --config <path> [--out <dir>] [--workers <k>]

Modes: optimize, simulate, detuning, noise, lindblad, wigner, sweep.
Exit codes: 0 success, 2 configuration/validation error, 3 simulation error
(leakage, trace drift, non-convergence).

All randomness flows from the config's master_seed; no wall-clock or OS
entropy enters any numeric path. Numeric output files carry full float
precision (17 significant digits) so they round-trip exactly. Files are
written atomically (write to a temp name, then rename).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .control import quality
from .dynamics import (
    JCParams,
    PulseSequence,
    apply_sequence,
    wigner_value,
)
from .errors import (
    ConfigError,
    FockforgeError,
    LeakageExceeded,
    NoConvergence,
    TraceDrift,
)
from .gadam import GAdamConfig, optimize, optimize_single_layer
from .hilbert import (
    GUARD_BAND,
    LEAKAGE_TOL,
    CavityDensityMatrix,
    FockCutoff,
    coherent_state,
    default_cutoff,
    fock_state,
    initial_joint_state,
)
from .robustness import (
    LindbladConfig,
    NoiseModel,
    detuning_scan,
    lindblad_propagate_sequence,
    noise_monte_carlo,
)
from .seeding import STREAM_SWEEP_CELL, derive_seed

MODES = ("optimize", "simulate", "detuning", "noise", "lindblad", "wigner", "sweep")

_FLOAT_FMT = "{:.17g}"


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json(path: str, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path: str, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, (float, np.floating)):
                cells.append(_FLOAT_FMT.format(float(value)))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _require(block: dict, key: str, context: str):
    if key not in block:
        path = f"{context}.{key}" if context else key
        raise ConfigError(f"missing required field '{path}'")
    return block[key]


def _as_complex(value, context: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"field '{context}' must be a number or [re, im] pair")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def parse_physical(cfg: dict, need_depth: bool = False):
    block = _require(cfg, "physical", "")
    n_target = int(_require(block, "target_n", "physical"))
    if n_target < 1:
        raise ConfigError("field 'physical.target_n' must be >= 1")
    omega = float(block.get("omega", 1.0))
    delta = float(block.get("delta", 0.0))
    params = JCParams(omega=omega, delta=delta)
    revival_index = int(block.get("revival_index", 0))
    alpha_raw = block.get("alpha")
    alpha = (
        complex(math.sqrt(n_target))
        if alpha_raw is None
        else _as_complex(alpha_raw, "physical.alpha")
    )
    depth = block.get("depth")
    if need_depth:
        if depth is None:
            raise ConfigError("missing required field 'physical.depth'")
        depth = int(depth)
        if depth < 1:
            raise ConfigError("field 'physical.depth' must be >= 1")
    return n_target, depth, revival_index, params, alpha


def parse_optimizer(cfg: dict, master_seed: int) -> GAdamConfig:
    block = dict(cfg.get("optimizer", {}))
    block["master_seed"] = master_seed
    valid = set(GAdamConfig.__dataclass_fields__)
    unknown = set(block) - valid
    if unknown:
        raise ConfigError(f"unknown optimizer field(s): {sorted(unknown)}")
    try:
        return GAdamConfig(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid optimizer block: {exc}")


def sequence_to_dict(seq: PulseSequence) -> dict:
    # angles live unwrapped during optimization (gradient continuity) and are
    # wrapped mod 2pi only here; the wrap changes the state by at most a
    # global sign, so every reported quantity is unaffected
    return {
        "taus": [float(t) for t in seq.taus],
        "betas_re": [float(b.real) for b in seq.betas],
        "betas_im": [float(b.imag) for b in seq.betas],
        "phi0": float(seq.phi0) % (2.0 * math.pi),
        "phi1": float(seq.phi1) % (2.0 * math.pi),
        "revival_index": int(seq.revival_index),
    }


def sequence_from_dict(block: dict, context: str = "sequence") -> PulseSequence:
    taus = np.asarray(_require(block, "taus", context), dtype=float)
    betas = np.asarray(_require(block, "betas_re", context), dtype=float) + 1j * np.asarray(
        _require(block, "betas_im", context), dtype=float
    )
    return PulseSequence(
        taus=taus,
        betas=betas,
        phi0=float(_require(block, "phi0", context)),
        phi1=float(_require(block, "phi1", context)),
        revival_index=int(block.get("revival_index", 0)),
    )


def parse_sequence(cfg: dict, base_dir: str):
    """Sequence from an inline block or a stored report; returns (seq, stored)."""
    block = _require(cfg, "sequence", "")
    if "report" in block:
        path = block["report"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            with open(path) as fh:
                report = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"sequence report not found: {path}")
        if "sequence" not in report:
            raise ConfigError(f"report {path} carries no 'sequence' block")
        return sequence_from_dict(report["sequence"]), report.get("quality")
    return sequence_from_dict(block), None


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

def _quality_dict(rep) -> dict:
    return {
        "loss": rep.loss,
        "fidelity_traced": rep.fidelity_traced,
        "fidelity_postselected": rep.fidelity_postselected,
        "success_probability": rep.success_probability,
    }


def _base_report(cfg: dict) -> dict:
    return {
        "code_version": __version__,
        "master_seed": cfg.get("master_seed"),
        "config": cfg,
        # fixed numerical conventions, recorded so results stay auditable
        "conventions": {
            "qubit_ordering": "(g, e) blocks",
            "wigner": "W(alpha) = (2/pi) Tr[rho D(2 alpha) Pi], vacuum origin +2/pi",
            "guard_band": GUARD_BAND,
            "leakage_tol": LEAKAGE_TOL,
        },
    }


def _write_layer_diagnostics(out_dir: str, diags):
    rows = []
    for diag in diags:
        for n, (pj, pd) in enumerate(zip(diag.dist_after_jc, diag.dist_after_disp)):
            rows.append((diag.index, n, pj, pd))
    write_csv(
        os.path.join(out_dir, "number_distributions.csv"),
        ["layer", "n", "p_after_jc", "p_after_disp"],
        rows,
    )
    for diag in diags:
        mag_rows = []
        phase_rows = []
        dim = diag.rho_magnitude.shape[0]
        for n in range(dim):
            for m in range(dim):
                mag_rows.append((n, m, diag.rho_magnitude[n, m]))
                phase_rows.append((n, m, diag.rho_phase[n, m]))
        write_csv(
            os.path.join(out_dir, f"layer_{diag.index}_rho_magnitude.csv"),
            ["n", "m", "magnitude"],
            mag_rows,
        )
        write_csv(
            os.path.join(out_dir, f"layer_{diag.index}_rho_phase.csv"),
            ["n", "m", "phase"],
            phase_rows,
        )


# ---------------------------------------------------------------------------
# mode handlers
# ---------------------------------------------------------------------------

def _mode_optimize(cfg: dict, out_dir: str, base_dir: str = "") -> int:
    t0 = time.perf_counter()
    master_seed = int(_require(cfg, "master_seed", ""))
    n_target, depth, revival_index, params, alpha = parse_physical(cfg, need_depth=True)
    opt_cfg = parse_optimizer(cfg, master_seed)

    trace = optimize(n_target, depth, revival_index, params, opt_cfg, alpha=alpha)
    seq = trace.final.seq
    rep = quality(seq, n_target, params, alpha)

    cutoff = default_cutoff(n_target, alpha, seq.displacement_budget)
    final_state, diags, monitor = apply_sequence(
        seq, initial_joint_state(alpha, cutoff), params, collect=True
    )
    _write_layer_diagnostics(out_dir, diags)

    report = _base_report(cfg)
    report.update(
        {
            "sequence": sequence_to_dict(seq),
            "quality": _quality_dict(rep),
            "cutoff": cutoff.ncut,
            "leakage": {
                "max_top_population": monitor.max_top_population,
                "guard": monitor.guard,
            },
            "optimization": {
                "t_tar": trace.t_tar,
                "best_fitness": trace.best_fitness,
                "mean_fitness": trace.mean_fitness,
                "total_loss_evaluations": trace.total_loss_evaluations,
                "rescale_violations": trace.rescale_violations,
                "single_layer": {
                    "sequence": sequence_to_dict(trace.single_layer.seq),
                    "loss": trace.single_layer.loss,
                },
                "resolved_config": asdict(trace.resolved_config),
            },
            "wall_time": time.perf_counter() - t0,
        }
    )
    write_json(os.path.join(out_dir, "run_report.json"), report)
    write_csv(
        os.path.join(out_dir, "fitness_trace.csv"),
        ["generation", "best_fitness", "mean_fitness"],
        list(zip(range(len(trace.best_fitness)), trace.best_fitness, trace.mean_fitness)),
    )
    return 0


def _mode_simulate(cfg: dict, out_dir: str, base_dir: str = "") -> int:
    t0 = time.perf_counter()
    n_target, _, _, params, alpha = parse_physical(cfg)
    seq, stored_quality = parse_sequence(cfg, base_dir)
    rep = quality(seq, n_target, params, alpha)

    report = _base_report(cfg)
    report.update(
        {
            "sequence": sequence_to_dict(seq),
            "quality": _quality_dict(rep),
            "wall_time": time.perf_counter() - t0,
        }
    )
    if stored_quality is not None:
        report["stored_quality"] = stored_quality
        report["replay_deviation"] = abs(
            stored_quality["fidelity_postselected"] - rep.fidelity_postselected
        )
    write_json(os.path.join(out_dir, "run_report.json"), report)
    return 0


def _mode_detuning(cfg: dict, out_dir: str, base_dir: str = "") -> int:
    t0 = time.perf_counter()
    n_target, _, _, params, alpha = parse_physical(cfg)
    seq, _ = parse_sequence(cfg, base_dir)
    block = _require(cfg, "detuning", "")
    deltas = np.asarray(_require(block, "deltas", "detuning"), dtype=float)
    if deltas.ndim != 1 or len(deltas) < 2:
        raise ConfigError("field 'detuning.deltas' must list at least two values")
    if np.any(np.diff(deltas) <= 0):
        raise ConfigError("field 'detuning.deltas' must be strictly increasing")

    scan = detuning_scan(seq, n_target, params, alpha, deltas)
    write_csv(
        os.path.join(out_dir, "detuning_scan.csv"),
        ["delta", "fidelity_postselected"],
        list(zip(scan.deltas, scan.fidelities)),
    )
    report = _base_report(cfg)
    report.update(
        {
            "sequence": sequence_to_dict(seq),
            "fwhm": scan.fwhm,
            "fwhm_definition": "width at F_min + (F_max - F_min)/2 of the scanned window",
            "wall_time": time.perf_counter() - t0,
        }
    )
    write_json(os.path.join(out_dir, "run_report.json"), report)
    return 0


def _mode_noise(cfg: dict, out_dir: str, base_dir: str = "") -> int:
    t0 = time.perf_counter()
    master_seed = int(_require(cfg, "master_seed", ""))
    n_target, _, _, params, alpha = parse_physical(cfg)
    seq, _ = parse_sequence(cfg, base_dir)
    block = _require(cfg, "noise", "")
    realizations = int(_require(block, "realizations", "noise"))
    sig_taus = block.get("sigma_tau_grid", [float(block.get("sigma_tau", 0.0))])
    sig_betas = block.get("sigma_beta_grid", [float(block.get("sigma_beta", 0.0))])

    rows = []
    for st in sig_taus:
        for sb in sig_betas:
            model = NoiseModel(
                sigma_tau=float(st), sigma_beta=float(sb), realizations=realizations
            )
            mean, err = noise_monte_carlo(seq, n_target, params, alpha, model, master_seed)
            rows.append((st, sb, mean, err))
    write_csv(
        os.path.join(out_dir, "noise_grid.csv"),
        ["sigma_tau", "sigma_beta", "mean_fidelity", "stderr"],
        rows,
    )
    report = _base_report(cfg)
    report.update(
        {
            "sequence": sequence_to_dict(seq),
            "realizations": realizations,
            "wall_time": time.perf_counter() - t0,
        }
    )
    write_json(os.path.join(out_dir, "run_report.json"), report)
    return 0


def _mode_lindblad(cfg: dict, out_dir: str, base_dir: str = "") -> int:
    t0 = time.perf_counter()
    n_target, _, _, params, alpha = parse_physical(cfg)
    seq, _ = parse_sequence(cfg, base_dir)
    block = _require(cfg, "lindblad", "")
    lconfig = LindbladConfig(
        kappa=float(_require(block, "kappa", "lindblad")),
        gamma=float(_require(block, "gamma", "lindblad")),
        dt=float(_require(block, "dt", "lindblad")),
        dissipator_convention=block.get("dissipator_convention", "standard"),
    )
    dissipative = lindblad_propagate_sequence(seq, n_target, params, alpha, lconfig)
    unitary = quality(seq, n_target, params, alpha)

    report = _base_report(cfg)
    report.update(
        {
            "sequence": sequence_to_dict(seq),
            "quality_dissipative": _quality_dict(dissipative),
            "quality_unitary": _quality_dict(unitary),
            "wall_time": time.perf_counter() - t0,
        }
    )
    write_json(os.path.join(out_dir, "run_report.json"), report)
    return 0


def _wigner_state(cfg: dict) -> CavityDensityMatrix:
    block = _require(cfg, "wigner", "")
    state = _require(block, "state", "wigner")
    kind = _require(state, "type", "wigner.state")
    if kind == "fock":
        n = int(_require(state, "n", "wigner.state"))
        cutoff = FockCutoff(int(state.get("ncut", default_cutoff(max(n, 1)).ncut)))
        vec = fock_state(n, cutoff).amplitudes
    elif kind == "coherent":
        alpha = _as_complex(_require(state, "alpha", "wigner.state"), "wigner.state.alpha")
        cutoff = FockCutoff(
            int(state.get("ncut", default_cutoff(math.ceil(abs(alpha) ** 2) + 1, alpha).ncut))
        )
        vec = coherent_state(alpha, cutoff).amplitudes
    else:
        raise ConfigError(
            f"unsupported wigner.state.type '{kind}' (expected 'fock' or 'coherent')"
        )
    return CavityDensityMatrix(np.outer(vec, vec.conj()), cutoff)


def _mode_wigner(cfg: dict, out_dir: str, base_dir: str = "") -> int:
    t0 = time.perf_counter()
    rho = _wigner_state(cfg)
    grid = _require(cfg["wigner"], "grid", "wigner")
    lo = float(_require(grid, "min", "wigner.grid"))
    hi = float(_require(grid, "max", "wigner.grid"))
    step = float(_require(grid, "step", "wigner.grid"))
    if not (hi > lo and step > 0):
        raise ConfigError("wigner.grid needs max > min and step > 0")
    axis = np.arange(lo, hi + step / 2.0, step)
    rows = []
    for x in axis:
        for p in axis:
            rows.append((x, p, wigner_value(rho, complex(x, p))))
    write_csv(os.path.join(out_dir, "wigner_grid.csv"), ["x", "p", "w"], rows)
    report = _base_report(cfg)
    report["wall_time"] = time.perf_counter() - t0
    write_json(os.path.join(out_dir, "run_report.json"), report)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _revival_for(block: dict, n_target: int) -> int:
    spec = block.get("revival_indices", 0)
    if isinstance(spec, dict):
        key = str(n_target)
        if key not in spec:
            raise ConfigError(f"sweep.revival_indices has no entry for N={n_target}")
        return int(spec[key])
    return int(spec)


def _sweep_cell(args):
    """One (N, p) optimization; exceptions come back as a record, not a crash."""
    (n_target, depth, revival_index, params, alpha, opt_cfg_dict, cell_seed, single_dict) = args
    try:
        opt_cfg = GAdamConfig(**{**opt_cfg_dict, "master_seed": cell_seed})
        single = None
        if single_dict is not None:
            from .gadam import Individual

            single = Individual(
                seq=sequence_from_dict(single_dict["sequence"]),
                loss=single_dict["loss"],
            )
        trace = optimize(
            n_target, depth, revival_index, params, opt_cfg, alpha=alpha, single=single
        )
        seq = trace.final.seq
        rep = quality(seq, n_target, params, alpha)
        return {
            "target_n": n_target,
            "depth": depth,
            "revival_index": revival_index,
            "cell_seed": cell_seed,
            "sequence": sequence_to_dict(seq),
            "quality": _quality_dict(rep),
            "total_time": seq.total_time,
            "loss_evaluations": trace.total_loss_evaluations,
            "best_fitness": trace.best_fitness,
        }
    except FockforgeError as exc:
        return {
            "target_n": n_target,
            "depth": depth,
            "revival_index": revival_index,
            "cell_seed": cell_seed,
            "error": f"{type(exc).__name__}: {exc}",
        }


def run_sweep(cfg: dict, out_dir: str, workers: int = 1) -> dict:
    """Optimize every (N, depth) cell; returns the sweep report dict."""
    t0 = time.perf_counter()
    master_seed = int(_require(cfg, "master_seed", ""))
    block = _require(cfg, "sweep", "")
    target_ns = [int(n) for n in _require(block, "target_ns", "sweep")]
    depths = [int(p) for p in _require(block, "depths", "sweep")]
    if not target_ns or not depths:
        raise ConfigError("sweep.target_ns and sweep.depths must be non-empty")

    phys = cfg.get("physical", {})
    params = JCParams(omega=float(phys.get("omega", 1.0)), delta=float(phys.get("delta", 0.0)))
    opt_cfg = parse_optimizer(cfg, master_seed)
    opt_cfg_dict = asdict(opt_cfg)

    # stage 1: one single-layer solution per target (deterministic; shared
    # across depths so every depth works against the same timing scale)
    singles = {}
    for n_target in target_ns:
        alpha = (
            complex(math.sqrt(n_target))
            if phys.get("alpha") is None
            else _as_complex(phys["alpha"], "physical.alpha")
        )
        revival_index = _revival_for(block, n_target)
        single = optimize_single_layer(n_target, revival_index, params, opt_cfg, alpha)
        singles[n_target] = {
            "sequence": sequence_to_dict(single.seq),
            "loss": single.loss,
        }

    # stage 2: all cells, deterministic per-cell seeds
    jobs = []
    for i, n_target in enumerate(target_ns):
        alpha = (
            complex(math.sqrt(n_target))
            if phys.get("alpha") is None
            else _as_complex(phys["alpha"], "physical.alpha")
        )
        revival_index = _revival_for(block, n_target)
        for j, depth in enumerate(depths):
            cell_seed = derive_seed(master_seed, STREAM_SWEEP_CELL, i, j)
            jobs.append(
                (n_target, depth, revival_index, params, alpha,
                 opt_cfg_dict, cell_seed, singles[n_target])
            )

    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(job) for job in jobs]

    rows = []
    best_by_n = {}
    for res in results:
        if "error" in res:
            rows.append(
                (res["target_n"], res["depth"], res["revival_index"],
                 "nan", "nan", "nan", "nan", res["error"])
            )
            continue
        q = res["quality"]
        rows.append(
            (res["target_n"], res["depth"], res["revival_index"],
             q["fidelity_traced"], q["fidelity_postselected"],
             q["success_probability"], res["total_time"], "")
        )
        key = res["target_n"]
        if (
            key not in best_by_n
            or q["fidelity_postselected"]
            > best_by_n[key]["quality"]["fidelity_postselected"]
        ):
            best_by_n[key] = res

    write_csv(
        os.path.join(out_dir, "sweep_table.csv"),
        ["target_n", "depth", "revival_index", "fidelity_traced",
         "fidelity_postselected", "success_probability", "total_time", "error"],
        rows,
    )
    write_csv(
        os.path.join(out_dir, "sweep_best.csv"),
        ["target_n", "best_depth", "fidelity_traced", "fidelity_postselected",
         "success_probability", "total_time"],
        [
            (n, best_by_n[n]["depth"],
             best_by_n[n]["quality"]["fidelity_traced"],
             best_by_n[n]["quality"]["fidelity_postselected"],
             best_by_n[n]["quality"]["success_probability"],
             best_by_n[n]["total_time"])
            for n in sorted(best_by_n)
        ],
    )
    report = _base_report(cfg)
    report.update(
        {
            "single_layer": singles,
            "cells": results,
            "wall_time": time.perf_counter() - t0,
        }
    )
    write_json(os.path.join(out_dir, "sweep_report.json"), report)
    return report


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_HANDLERS = {
    "optimize": _mode_optimize,
    "simulate": _mode_simulate,
    "detuning": _mode_detuning,
    "noise": _mode_noise,
    "lindblad": _mode_lindblad,
    "wigner": _mode_wigner,
}


def _dispatch(mode: str, config_path: str, out_dir: str | None, workers: int) -> int:
    try:
        cfg = load_config(config_path)
        base_dir = os.path.dirname(os.path.abspath(config_path))
        cfg_mode = cfg.get("mode")
        if cfg_mode is not None and cfg_mode != mode:
            raise ConfigError(
                f"config field 'mode' is '{cfg_mode}' but the command line says '{mode}'"
            )
        cfg["mode"] = mode
        target = out_dir or cfg.get("io", {}).get("out_dir") or "."
        os.makedirs(target, exist_ok=True)
        if mode == "sweep":
            run_sweep(cfg, target, workers=workers)
            return 0
        return _HANDLERS[mode](cfg, target, base_dir)
    except ConfigError as exc:
        print(f"fockforge: configuration error: {exc}", file=sys.stderr)
        return 2
    except (LeakageExceeded, TraceDrift, NoConvergence) as exc:
        print(f"fockforge: simulation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def run(config_path: str, out_dir: str | None = None, workers: int = 1) -> int:
    """Execute a single-mode config; returns the process exit code."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"fockforge: configuration error: {exc}", file=sys.stderr)
        return 2
    mode = cfg.get("mode")
    if mode not in MODES:
        print(
            f"fockforge: configuration error: field 'mode' must be one of {MODES}",
            file=sys.stderr,
        )
        return 2
    return _dispatch(mode, config_path, out_dir, workers)


def sweep(config_path: str, out_dir: str | None = None, workers: int = 1) -> int:
    return _dispatch("sweep", config_path, out_dir, workers)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fockforge",
        description="Synthesize and analyze number-state preparation sequences.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=None, help="output directory (overrides io.out_dir)")
    parser.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    args = parser.parse_args(argv)
    return _dispatch(args.mode, args.config, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
