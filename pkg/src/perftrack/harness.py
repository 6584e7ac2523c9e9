"""Fleet-charging case study: scenario construction, Monte Carlo execution over
replications, envelope evaluation, and reproducible persistence.

Determinism contract: one root SeedSequence is split into a price child plus one
child per replication, each replication further splits into (x0, greedy, lazy)
streams, and aggregation is fixed-order, so results are bitwise identical for a
given seed regardless of worker count.
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from .algorithms import (AlgorithmConfig, RunRecord, contraction_factor, run_opgd,
                         run_ospgd, solve_stable_point, stable_point_budget_kkt)
from .bounds import (BoundInputs, markov_envelope, opgd_envelope,
                     ospgd_expectation_envelope, ospgd_hp_envelope)
from .config import ScenarioConfig, sequence_from_spec
from .distmap import GaussianLocationMap
from .problem import (ContractionReport, ProblemInstance, RegularityConstants,
                      SeparableQuadraticLoss, derive_constants, validate_contraction)
from .projection import BudgetHalfspace
from .subweibull import MIN_FIT_SAMPLES, fit_subweibull

STOCHASTIC_MODES = ("greedy", "lazy")
CSV_HEADER = ("t,mean_err_exact,mean_err_greedy,mean_err_lazy,"
              "env_opgd,env_exp,env_hp,env_markov,phi")
PRICE_HEADER = "price_usd_per_kwh"

# Synthetic prices live well inside this band; envelopes stay contractive there.
PRICE_BAND = (0.01, 0.09)


def synth_price_series(horizon: int, seed) -> np.ndarray:
    """Smooth daily-shaped price curve with seeded wiggle, confined to the
    [0.01, 0.09] $/kWh band by construction."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    t = np.arange(horizon, dtype=float)
    phase = 2.0 * np.pi * t / max(horizon, 2)
    base = 0.05 + 0.02 * np.sin(phase + 0.6) + 0.01 * np.sin(3.0 * phase + 2.2)
    return base + rng.uniform(-0.008, 0.008, size=horizon)


def load_price_series(path, horizon: int) -> np.ndarray:
    """Read one price per line (optional 'price_usd_per_kwh' header); errors
    name the offending 1-based row."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rows = [(i + 1, line.strip()) for i, line in enumerate(lines) if line.strip()]
    if rows and rows[0][1] == PRICE_HEADER:
        rows = rows[1:]
    prices = []
    for rownum, text in rows:
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"{path}: row {rownum}: not a number: {text!r}") from None
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"{path}: row {rownum}: price must be finite and >= 0")
        prices.append(value)
    if len(prices) < horizon:
        raise ValueError(
            f"{path}: found {len(prices)} prices, need at least {horizon}")
    return np.array(prices[:horizon])


def sample_sphere(radius: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the sphere of the given radius (not the ball)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        v = rng.standard_normal(dim)
        nrm = float(np.linalg.norm(v))
        if nrm > 0:
            return v * (radius / nrm)


def build_problem(config: ScenarioConfig, mu: np.ndarray) -> ProblemInstance:
    """Assemble the fleet-charging instance for a price series mu."""
    T, d = config.horizon, config.stations
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (T,):
        raise ValueError(f"mu must have shape ({T},)")
    gamma_t = sequence_from_spec(config.gamma, T)
    cap_t = sequence_from_spec(config.capacity, T)
    losses = tuple(SeparableQuadraticLoss(gamma=np.full(d, gamma_t[t]),
                                          kappa=np.full(d, config.kappa))
                   for t in range(T))
    constraints = tuple(BudgetHalfspace(capacity=float(cap_t[t]), dim=d)
                        for t in range(T))
    maps = tuple(GaussianLocationMap(mu_scale=float(mu[t]), sigma=config.sigma, dim=d)
                 for t in range(T))
    if config.constants_mode == "derived":
        constants = derive_constants(losses, maps)
    else:
        # Reported constants for this family; the instance warns on the mismatch.
        constants = RegularityConstants(alpha=np.full(T, 2.0), beta=np.full(T, 2.0),
                                        eps=mu.copy())
    return ProblemInstance(losses=losses, constraints=constraints, maps=maps,
                           constants=constants)


def stable_point_sequence(config: ScenarioConfig, mu: np.ndarray) -> np.ndarray:
    """Closed-form (KKT) stable points, one row per step."""
    T, d = config.horizon, config.stations
    gamma_t = sequence_from_spec(config.gamma, T)
    cap_t = sequence_from_spec(config.capacity, T)
    out = np.empty((T, d))
    for t in range(T):
        out[t] = stable_point_budget_kkt(np.full(d, gamma_t[t]), config.kappa,
                                         float(mu[t]), float(cap_t[t]))
    return out


def _run_replication(instance: ProblemInstance, stable_points: np.ndarray,
                     etas: np.ndarray, batch_sizes: np.ndarray, radius: float,
                     keep_iterates: bool, rep_seq: np.random.SeedSequence) -> dict:
    seq_x0, seq_greedy, seq_lazy = rep_seq.spawn(3)
    x0 = sample_sphere(radius, instance.dim, np.random.default_rng(seq_x0))
    records = {
        "exact": run_opgd(instance, x0, etas, stable_points),
        "greedy": run_ospgd(instance, x0,
                            AlgorithmConfig(etas, mode="greedy",
                                            batch_sizes=np.ones(len(etas), dtype=int)),
                            np.random.default_rng(seq_greedy), stable_points),
        "lazy": run_ospgd(instance, x0,
                          AlgorithmConfig(etas, mode="lazy", batch_sizes=batch_sizes),
                          np.random.default_rng(seq_lazy), stable_points),
    }
    out = {"e0": records["exact"].tracking_error[0]}
    for mode, rec in records.items():
        out[f"err_{mode}"] = rec.tracking_error
        if rec.xi_samples is not None:
            out[f"xi_{mode}"] = rec.xi_samples
        if keep_iterates:
            out[f"iterates_{mode}"] = rec.iterates
    return out


@dataclass
class ExperimentResult:
    """Aggregated Monte Carlo output plus every certified tracking envelope."""

    config: ScenarioConfig
    mu: np.ndarray
    stable_points: np.ndarray
    phi: np.ndarray                       # (T-1,) stable-point drift
    lambdas: np.ndarray                   # (T,) per-step contraction factors
    contraction: ContractionReport
    e0: np.ndarray                        # (M,)
    errors: dict                          # mode -> (M, T)
    mean_errors: dict                     # mode -> (T,)
    xi: dict                              # stochastic mode -> (M, T-1)
    xi_mean: dict                         # stochastic mode -> (T-1,)
    xi_nu: dict                           # stochastic mode -> (T-1,) or None
    envelopes: dict                       # name -> (T-1,) certified envelope or None
    config_hash: str
    wall_time_s: float
    iterates: Optional[dict] = None       # mode -> (M, T, d) when kept

    @property
    def horizon(self) -> int:
        return self.mu.size


def _experiment_envelopes(config: ScenarioConfig, lambdas: np.ndarray,
                          phi: np.ndarray, e0_mean: float, etas: np.ndarray,
                          xi_mean: dict, xi_nu: dict) -> dict:
    lam_steps = lambdas[:-1] if lambdas.size > 1 else lambdas[:0]
    envelopes: dict = {}
    if lam_steps.size == 0:
        envelopes["opgd"] = np.empty(0)
        for mode in STOCHASTIC_MODES:
            for kind in ("exp", "hp", "markov"):
                envelopes[f"{kind}_{mode}"] = np.empty(0)
        return envelopes
    base = dict(lambdas=lam_steps, phis=phi, e0=e0_mean, etas=etas[:-1])
    envelopes["opgd"] = opgd_envelope(BoundInputs(lambdas=lam_steps, phis=phi, e0=e0_mean))
    for mode in STOCHASTIC_MODES:
        inputs = BoundInputs(**base, xi_means=xi_mean[mode], delta=config.delta,
                             theta=config.theta, nus=xi_nu[mode])
        envelopes[f"exp_{mode}"] = ospgd_expectation_envelope(inputs)
        envelopes[f"markov_{mode}"] = markov_envelope(inputs)
        envelopes[f"hp_{mode}"] = (ospgd_hp_envelope(inputs)
                                   if xi_nu[mode] is not None else None)
    return envelopes


def run_experiment(config: ScenarioConfig) -> ExperimentResult:
    """Execute the full scenario: build the instance, cross-check stable points,
    run all replications in all three modes, and evaluate every envelope."""
    t_start = time.perf_counter()
    T, d, M = config.horizon, config.stations, config.replications
    root = np.random.SeedSequence(config.seed)
    price_seq, *rep_seqs = root.spawn(M + 1)
    if config.price_source == "synthetic":
        mu = synth_price_series(T, price_seq)
    else:
        mu = load_price_series(config.price_path, T)
    instance = build_problem(config, mu)
    contraction = validate_contraction(instance.constants)
    stable = stable_point_sequence(config, mu)
    if config.check_stable_points:
        # The check validates the dynamics, so it always runs with the
        # family-derived constants; stated ones can make the solver's default
        # step size diverge.  Only steps meeting the existence condition are
        # checkable.
        if config.constants_mode == "derived":
            check_inst = instance
        else:
            check_inst = ProblemInstance(
                losses=instance.losses, constraints=instance.constraints,
                maps=instance.maps,
                constants=derive_constants(instance.losses, instance.maps))
        check_ok = validate_contraction(check_inst.constants).ok
        for t in range(T):
            if not check_ok[t]:
                continue
            fixed = solve_stable_point(check_inst, t)
            if float(np.linalg.norm(fixed - stable[t])) > 1e-6:
                raise RuntimeError(
                    f"stable-point cross-check failed at step {t}: "
                    f"KKT and fixed-point solutions disagree")
    phi = np.linalg.norm(np.diff(stable, axis=0), axis=1)
    lambdas = np.array([contraction_factor(instance.constants.alpha[t],
                                           instance.constants.beta[t],
                                           instance.constants.eps[t],
                                           config.eta).lam
                        for t in range(T)])
    etas = np.full(T, config.eta)
    batch_sizes = np.full(T, config.batch_size, dtype=int)

    worker = partial(_run_replication, instance, stable, etas, batch_sizes,
                     config.x0_radius, config.keep_iterates)
    if config.workers == 1:
        rep_outputs = [worker(seq) for seq in rep_seqs]
    else:
        chunk = max(1, M // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rep_outputs = list(pool.map(worker, rep_seqs, chunksize=chunk))

    e0 = np.array([r["e0"] for r in rep_outputs])
    errors = {m: np.stack([r[f"err_{m}"] for r in rep_outputs])
              for m in ("exact", "greedy", "lazy")}
    mean_errors = {m: arr.mean(axis=0) for m, arr in errors.items()}
    xi = {m: np.stack([r[f"xi_{m}"] for r in rep_outputs]) for m in STOCHASTIC_MODES}
    xi_mean = {m: arr.mean(axis=0) for m, arr in xi.items()}
    # Per-step tail fits need enough replications; otherwise hp has no inputs.
    if M >= MIN_FIT_SAMPLES:
        xi_nu = {m: np.array([fit_subweibull(arr[:, t], config.theta)
                              for t in range(T - 1)])
                 for m, arr in xi.items()}
    else:
        xi_nu = {m: None for m in STOCHASTIC_MODES}
    envelopes = _experiment_envelopes(config, lambdas, phi, float(e0.mean()),
                                      etas, xi_mean, xi_nu)
    iterates = None
    if config.keep_iterates:
        iterates = {m: np.stack([r[f"iterates_{m}"] for r in rep_outputs])
                    for m in ("exact", "greedy", "lazy")}
    config_hash = hashlib.sha256(
        json.dumps(config.to_dict(), sort_keys=True).encode()).hexdigest()
    return ExperimentResult(
        config=config, mu=mu, stable_points=stable, phi=phi, lambdas=lambdas,
        contraction=contraction, e0=e0, errors=errors, mean_errors=mean_errors,
        xi=xi, xi_mean=xi_mean, xi_nu=xi_nu, envelopes=envelopes,
        config_hash=config_hash, wall_time_s=time.perf_counter() - t_start,
        iterates=iterates)


def _fmt(value: float) -> str:
    return "%.17g" % value


def _csv_env_column(result: ExperimentResult, name: str, t: int) -> float:
    # Row 0 carries the measured mean initial error; later rows the certified bound.
    if t == 0:
        return float(result.e0.mean())
    env = result.envelopes[name]
    if env is None:
        return float("nan")
    return float(env[t - 1])


def write_result_csv(result: ExperimentResult, path) -> None:
    """The per-step summary table; floats at 17 significant digits so parsing
    reproduces the in-memory values exactly."""
    T = result.horizon
    lines = [CSV_HEADER]
    for t in range(T):
        phi_t = float(result.phi[t]) if t < T - 1 else 0.0
        cells = [str(t),
                 _fmt(result.mean_errors["exact"][t]),
                 _fmt(result.mean_errors["greedy"][t]),
                 _fmt(result.mean_errors["lazy"][t]),
                 _fmt(_csv_env_column(result, "opgd", t)),
                 _fmt(_csv_env_column(result, "exp_greedy", t)),
                 _fmt(_csv_env_column(result, "hp_greedy", t)),
                 _fmt(_csv_env_column(result, "markov_greedy", t)),
                 _fmt(phi_t)]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _steady_state(mean_err: np.ndarray) -> float:
    # Mean over the last quarter of the horizon.
    start = (3 * mean_err.size) // 4
    return float(mean_err[start:].mean())


def write_metadata_json(result: ExperimentResult, path) -> None:
    """Config echo, seed, contraction report, gradient-error statistics for both
    stochastic modes, and the soft steady-state ordering diagnostic."""
    steady = {m: _steady_state(result.mean_errors[m]) for m in result.mean_errors}
    meta = {
        "config": result.config.to_dict(),
        "seed": result.config.seed,
        "config_hash": result.config_hash,
        "wall_time_s": result.wall_time_s,
        "contraction": {
            "ratios": result.contraction.ratios.tolist(),
            "ok": result.contraction.ok.tolist(),
            "all_ok": result.contraction.all_ok,
            "lambdas": result.lambdas.tolist(),
        },
        "xi_stats": {
            m: {"mean": result.xi_mean[m].tolist(),
                "nu": None if result.xi_nu[m] is None else result.xi_nu[m].tolist()}
            for m in STOCHASTIC_MODES
        },
        "steady_state_mean_error": steady,
        "steady_state_ordering_ok": bool(
            steady["exact"] <= steady["lazy"] <= steady["greedy"]),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
