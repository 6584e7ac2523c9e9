"""Fleet-charging experiment harness: inputs, execution, persistence."""
import json
import warnings

import numpy as np
import pytest

from perftrack.config import ScenarioConfig
from perftrack.harness import (
    CSV_HEADER,
    PRICE_HEADER,
    build_problem,
    load_price_series,
    run_experiment,
    sample_sphere,
    stable_point_sequence,
    synth_price_series,
    write_metadata_json,
    write_result_csv,
)
from perftrack.harness import _steady_state
from perftrack.algorithms import solve_stable_point
from perftrack.projection import contains


# --- price inputs ---


def test_synth_prices_band_and_determinism():
    a = synth_price_series(100, 0)
    b = synth_price_series(100, 0)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (100,)
    assert np.all(a >= 0.01) and np.all(a <= 0.09)
    assert not np.array_equal(a, synth_price_series(100, 1))
    assert synth_price_series(1, 0).shape == (1,)
    with pytest.raises(ValueError):
        synth_price_series(0, 0)


def test_load_prices_happy_path(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text(f"{PRICE_HEADER}\n0.05\n\n0.06\n0.07\n")
    out = load_price_series(path, 2)  # blank rows skipped, extras truncated
    np.testing.assert_array_equal(out, [0.05, 0.06])
    headerless = tmp_path / "raw.csv"
    headerless.write_text("0.01\n0.02\n")
    np.testing.assert_array_equal(load_price_series(headerless, 2), [0.01, 0.02])


def test_load_prices_errors_name_rows(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("0.05\nabc\n0.07\n")
    with pytest.raises(ValueError, match="row 2"):
        load_price_series(path, 3)
    path.write_text("0.05\n-0.1\n")
    with pytest.raises(ValueError, match="row 2"):
        load_price_series(path, 2)
    path.write_text("0.05\n")
    with pytest.raises(ValueError, match="need at least"):
        load_price_series(path, 2)


def test_sample_sphere_properties():
    rng = np.random.default_rng(0)
    for d in (1, 2, 10):
        v = sample_sphere(3.0, d, rng)
        assert v.shape == (d,)
        assert np.linalg.norm(v) == pytest.approx(3.0, abs=1e-12)
    signs = {np.sign(sample_sphere(1.0, 1, rng)[0]) for _ in range(64)}
    assert signs == {-1.0, 1.0}
    with pytest.raises(ValueError):
        sample_sphere(0.0, 2, rng)
    with pytest.raises(ValueError):
        sample_sphere(1.0, 0, rng)


# --- problem assembly ---


def test_build_problem_shapes(tiny_config):
    cfg = tiny_config()
    mu = synth_price_series(cfg.horizon, 0)
    inst = build_problem(cfg, mu)
    assert inst.horizon == cfg.horizon
    assert inst.dim == cfg.stations
    assert inst.constants.alpha[0] == pytest.approx(2.0 * cfg.kappa)
    np.testing.assert_allclose(inst.constants.eps, mu)
    with pytest.raises(ValueError, match="mu must have shape"):
        build_problem(cfg, mu[:-1])


def test_build_problem_stated_constants_warn(tiny_config):
    cfg = tiny_config(constants_mode="stated")
    mu = synth_price_series(cfg.horizon, 0)
    with pytest.warns(UserWarning, match="differ"):
        inst = build_problem(cfg, mu)
    np.testing.assert_array_equal(inst.constants.alpha, np.full(cfg.horizon, 2.0))
    np.testing.assert_array_equal(inst.constants.beta, np.full(cfg.horizon, 2.0))


def test_stable_points_satisfy_budget_and_fixed_point(tiny_config):
    cfg = tiny_config(horizon=4)
    mu = synth_price_series(cfg.horizon, 3)
    stable = stable_point_sequence(cfg, mu)
    caps = np.full(cfg.horizon, 10.0)
    assert np.all(stable.sum(axis=1) <= caps + 1e-9)
    inst = build_problem(cfg, mu)
    for t in range(cfg.horizon):
        np.testing.assert_allclose(solve_stable_point(inst, t), stable[t], atol=1e-7)


# --- experiment execution ---


def test_run_experiment_shapes_and_consistency(tiny_config):
    cfg = tiny_config(replications=3, horizon=9)
    result = run_experiment(cfg)
    T, M = cfg.horizon, cfg.replications
    assert result.horizon == T
    assert result.mu.shape == (T,)
    assert result.stable_points.shape == (T, cfg.stations)
    assert result.phi.shape == (T - 1,)
    assert result.lambdas.shape == (T,)
    assert result.e0.shape == (M,)
    for mode in ("exact", "greedy", "lazy"):
        assert result.errors[mode].shape == (M, T)
        assert result.mean_errors[mode].shape == (T,)
    for mode in ("greedy", "lazy"):
        assert result.xi[mode].shape == (M, T - 1)
        assert result.xi_nu[mode] is None  # too few replications to fit tails
    np.testing.assert_array_equal(result.errors["exact"][:, 0], result.e0)
    np.testing.assert_array_equal(result.errors["greedy"][:, 0], result.e0)
    assert result.envelopes["hp_greedy"] is None
    assert result.envelopes["opgd"].shape == (T - 1,)
    assert result.contraction.all_ok
    assert len(result.config_hash) == 64
    assert result.iterates is None


def test_run_experiment_reproducible_and_worker_invariant(tiny_config):
    base = tiny_config(replications=4, horizon=8, seed=99)
    a = run_experiment(base)
    b = run_experiment(base)
    c = run_experiment(tiny_config(replications=4, horizon=8, seed=99, workers=2))
    for mode in ("exact", "greedy", "lazy"):
        np.testing.assert_array_equal(a.errors[mode], b.errors[mode])
        np.testing.assert_array_equal(a.errors[mode], c.errors[mode])
    assert a.config_hash == b.config_hash
    assert a.config_hash != c.config_hash  # workers is part of the config echo


def test_run_experiment_seed_changes_draws(tiny_config):
    a = run_experiment(tiny_config(seed=1))
    b = run_experiment(tiny_config(seed=2))
    assert not np.array_equal(a.e0, b.e0)


def test_iterates_stay_feasible_after_first_step(tiny_config):
    cfg = tiny_config(replications=2, horizon=6, keep_iterates=True, x0_radius=20.0)
    result = run_experiment(cfg)
    assert set(result.iterates) == {"exact", "greedy", "lazy"}
    inst = build_problem(cfg, result.mu)
    for mode, paths in result.iterates.items():
        assert paths.shape == (2, 6, cfg.stations)
        for m in range(2):
            for t in range(1, 6):
                assert contains(inst.constraints[t], paths[m, t], tol=1e-9)


def test_static_scenario_decays_to_stable_point(tmp_path):
    prices = tmp_path / "prices.csv"
    prices.write_text("0.0\n" * 30)
    cfg = ScenarioConfig(stations=3, horizon=30, replications=2, seed=5,
                         gamma=0.8, capacity=5.0, price_source="file",
                         price_path=str(prices), batch_size=4)
    result = run_experiment(cfg)
    assert np.all(result.phi <= 1e-12)  # static stable points
    e = result.mean_errors["exact"]
    assert e[-1] <= 1e-8 * e[0]
    lam = result.lambdas[0]
    assert np.all(e[1:] <= lam * e[:-1] + 1e-12)


def test_vanishing_noise_collapses_modes_to_exact(tiny_config):
    cfg = tiny_config(sigma=1e-9, replications=2, horizon=10)
    result = run_experiment(cfg)
    for mode in ("greedy", "lazy"):
        np.testing.assert_allclose(result.errors[mode], result.errors["exact"],
                                   atol=1e-6)


def test_exact_mode_dominates_on_average(ev_session_result):
    steady = {m: _steady_state(ev_session_result.mean_errors[m])
              for m in ("exact", "greedy", "lazy")}
    assert steady["exact"] <= steady["lazy"] <= steady["greedy"]


def test_session_run_fits_tails_and_hp_envelopes(ev_session_result):
    result = ev_session_result
    T = result.horizon
    for mode in ("greedy", "lazy"):
        assert result.xi_nu[mode].shape == (T - 1,)
        assert np.all(result.xi_nu[mode] > 0)
        assert result.envelopes[f"hp_{mode}"].shape == (T - 1,)
        # proxy scale dominates the sample mean by construction of the fit
        assert np.all(result.xi_nu[mode] >= result.xi_mean[mode] - 1e-12)


def test_steady_state_window():
    assert _steady_state(np.array([9.0, 9.0, 9.0, 4.0])) == 4.0
    assert _steady_state(np.array([2.0])) == 2.0


# --- persistence ---


def test_result_csv_round_trip(tiny_config, tmp_path):
    cfg = tiny_config(replications=3, horizon=7)
    result = run_experiment(cfg)
    path = tmp_path / "result.csv"
    write_result_csv(result, path)
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + cfg.horizon
    table = np.genfromtxt(path, delimiter=",", skip_header=1)
    assert table.shape == (cfg.horizon, 9)
    np.testing.assert_array_equal(table[:, 0], np.arange(cfg.horizon))
    # 17 significant digits reproduce the in-memory doubles exactly
    np.testing.assert_array_equal(table[:, 1], result.mean_errors["exact"])
    np.testing.assert_array_equal(table[:, 2], result.mean_errors["greedy"])
    np.testing.assert_array_equal(table[:, 3], result.mean_errors["lazy"])
    # row 0 envelope columns carry the measured mean initial error
    e0_mean = float(result.e0.mean())
    np.testing.assert_array_equal(table[0, 4:8], np.full(4, e0_mean))
    np.testing.assert_array_equal(table[1:, 4], result.envelopes["opgd"])
    np.testing.assert_array_equal(table[1:, 5], result.envelopes["exp_greedy"])
    assert np.all(np.isnan(table[1:, 6]))  # hp column absent below the fit threshold
    np.testing.assert_array_equal(table[1:, 7], result.envelopes["markov_greedy"])
    np.testing.assert_array_equal(table[:-1, 8], result.phi)
    assert table[-1, 8] == 0.0


def test_metadata_json_contents(tiny_config, tmp_path):
    cfg = tiny_config(replications=2, horizon=5, seed=13)
    result = run_experiment(cfg)
    path = tmp_path / "metadata.json"
    write_metadata_json(result, path)
    meta = json.loads(path.read_text())
    assert meta["seed"] == 13
    assert meta["config"] == cfg.to_dict()
    assert meta["config_hash"] == result.config_hash
    assert len(meta["contraction"]["lambdas"]) == cfg.horizon
    assert meta["contraction"]["all_ok"] is True
    assert set(meta["xi_stats"]) == {"greedy", "lazy"}
    assert meta["xi_stats"]["greedy"]["nu"] is None
    assert len(meta["xi_stats"]["greedy"]["mean"]) == cfg.horizon - 1
    assert set(meta["steady_state_mean_error"]) == {"exact", "greedy", "lazy"}
    assert isinstance(meta["steady_state_ordering_ok"], bool)
    assert meta["wall_time_s"] > 0


def test_horizon_one_run(tmp_path):
    prices = tmp_path / "p.csv"
    prices.write_text("0.05\n")
    cfg = ScenarioConfig(stations=2, horizon=1, replications=2, seed=0,
                         gamma=0.5, price_source="file", price_path=str(prices))
    result = run_experiment(cfg)
    assert result.phi.shape == (0,)
    assert result.envelopes["opgd"].shape == (0,)
    csv_path = tmp_path / "out.csv"
    write_result_csv(result, csv_path)
    assert len(csv_path.read_text().splitlines()) == 2


def _quiet_stated_run(cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return run_experiment(cfg)


def test_stated_constants_mode_changes_envelopes(tiny_config):
    derived = run_experiment(tiny_config(horizon=8))
    stated = _quiet_stated_run(tiny_config(horizon=8, constants_mode="stated"))
    # same trajectories (the dynamics ignore the constants)...
    np.testing.assert_array_equal(derived.errors["exact"], stated.errors["exact"])
    # ...but different certified contraction factors
    assert not np.array_equal(derived.lambdas, stated.lambdas)
