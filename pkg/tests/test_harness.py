import json

import numpy as np
import pytest

from multisnap import (
    ClumpsSpec,
    ExperimentConfig,
    PhaseAxes,
    SupportSet,
    SweepAxis,
    config_from_json,
    fit_loglog_slope,
    phase_grid,
    phase_grid_to_csv,
    run_trial,
    sweep,
    sweep_to_csv,
)


def small_clumps(alpha=0.2, M=40):
    return ClumpsSpec(
        num_clumps=2, clump_sizes=(2, 2), alpha=alpha, beta=10.0, M=M,
        anchors=(0.2, 0.7),
    )


def small_config(**overrides):
    base = dict(
        geometry=small_clumps(),
        L=200,
        nu=0.05,
        estimator="both",
        trials=8,
        root_seed=7,
        grid_size=2560,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestFitLoglogSlope:
    def test_quadratic(self):
        pts = [(x, x**2) for x in (1.0, 2.0, 5.0, 10.0)]
        slope, intercept, residual = fit_loglog_slope(pts)
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert residual == pytest.approx(0.0, abs=1e-12)

    def test_constant(self):
        slope, _, _ = fit_loglog_slope([(1.0, 3.0), (10.0, 3.0), (100.0, 3.0)])
        assert slope == pytest.approx(0.0, abs=1e-12)

    def test_inverse_sqrt(self):
        pts = [(x, 3.0 / np.sqrt(x)) for x in (1.0, 10.0, 100.0)]
        slope, intercept, _ = fit_loglog_slope(pts)
        assert slope == pytest.approx(-0.5, abs=1e-12)
        assert intercept == pytest.approx(np.log10(3.0), abs=1e-12)

    def test_rejects_nonpositive_and_short(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([(1.0, 1.0), (2.0, 2.0)])
        with pytest.raises(ValueError):
            fit_loglog_slope([(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)])


class TestRunTrial:
    def test_noiseless_trial_is_exact(self):
        config = small_config(nu=0.0)
        result = run_trial(config, 0)
        assert result.nsc_sup <= 1e-9
        assert result.md <= 1e-9
        assert not result.censored

    def test_deterministic(self):
        config = small_config()
        a = run_trial(config, 3)
        b = run_trial(config, 3)
        assert a == b

    def test_trials_differ(self):
        config = small_config()
        assert run_trial(config, 0) != run_trial(config, 1)

    def test_estimator_selection(self):
        music_only = run_trial(small_config(estimator="music"), 0)
        assert music_only.md is None and music_only.nsc_sup is not None
        esprit_only = run_trial(small_config(estimator="esprit"), 0)
        assert esprit_only.nsc_sup is None and esprit_only.md is not None

    def test_noise_condition_reported(self):
        quiet = run_trial(small_config(nu=0.001), 0)
        assert quiet.noise_level_ok
        loud = run_trial(small_config(nu=50.0), 0)
        assert not loud.noise_level_ok


class TestSweep:
    def test_noise_sweep_slope_near_one(self):
        config = small_config(
            trials=12,
            sweep=SweepAxis(param="nu", values=(0.003, 0.01, 0.03, 0.1)),
        )
        results = {r.metric: r for r in sweep(config)}
        assert set(results) == {"nsc_sup", "md"}
        for res in results.values():
            assert 0.75 <= res.slope <= 1.25
            assert all(row.n == 12 for row in res.rows)

    def test_snapshot_sweep_slope(self):
        config = small_config(
            trials=12,
            sweep=SweepAxis(param="L", values=(50.0, 200.0, 800.0, 3200.0)),
        )
        results = {r.metric: r for r in sweep(config)}
        for res in results.values():
            assert -0.7 <= res.slope <= -0.3

    def test_srf_sweep_changes_geometry(self):
        config = small_config(
            trials=6,
            sweep=SweepAxis(param="srf", values=(2.0, 3.0, 5.0), x="sigma_s"),
        )
        results = sweep(config)
        xs = [row.x for row in results[0].rows]
        # sigma_s shrinks as the factor grows, so the fit coordinates decrease
        assert xs[0] > xs[1] > xs[2]

    def test_parallel_matches_serial(self):
        config = small_config(
            trials=6,
            sweep=SweepAxis(param="nu", values=(0.01, 0.03, 0.1)),
        )
        serial = sweep(config, threads=1)
        parallel = sweep(config, threads=2)
        assert serial == parallel

    def test_trial_order_invariance(self):
        config = small_config(trials=5)
        singles = [run_trial(config, i) for i in range(5)]
        means = np.mean([r.md for r in singles])
        swept = sweep(small_config(trials=5, sweep=SweepAxis("nu", (0.05, 0.06, 0.07))))
        md_rows = [r for r in swept if r.metric == "md"][0].rows
        assert md_rows[0].mean == pytest.approx(means)

    def test_csv_schema(self, tmp_path):
        config = small_config(trials=4, sweep=SweepAxis("nu", (0.01, 0.03, 0.1)))
        results = sweep(config)
        path = tmp_path / "sweep.csv"
        sweep_to_csv(results, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "metric,value,x,mean,std,n"
        assert len(lines) == 1 + 2 * 3

    def test_needs_three_values(self):
        with pytest.raises(ValueError):
            sweep(small_config(sweep=SweepAxis("nu", (0.01, 0.1))))

    def test_srf_sweep_requires_clumps(self):
        config = ExperimentConfig(
            geometry=SupportSet([0.2, 0.6]), M=16, L=50, nu=0.05, trials=3,
            sweep=SweepAxis("srf", (2.0, 3.0, 4.0)),
        )
        with pytest.raises(ValueError):
            sweep(config)


class TestPhaseGrid:
    def test_noise_snapshot_grid(self):
        config = small_config(
            trials=6,
            phase=PhaseAxes(
                axis1=SweepAxis("L", tuple(np.logspace(1.5, 3.5, 4))),
                axis2=SweepAxis("nu", tuple(np.logspace(-1.5, 1.0, 6))),
            ),
        )
        grid = phase_grid(config)
        assert grid.cells.shape == (4, 6)
        assert np.isfinite(grid.cells).all()
        # louder noise always hurts within a column
        assert np.all(np.diff(grid.cells, axis=1) > -0.5)
        found = [c for c in grid.crossings if c is not None]
        assert len(found) >= 3
        assert grid.transition_slope == pytest.approx(0.5, abs=0.35)

    def test_csv_outputs(self, tmp_path):
        config = small_config(
            trials=4,
            phase=PhaseAxes(
                axis1=SweepAxis("L", (50.0, 100.0, 200.0, 400.0)),
                axis2=SweepAxis("nu", (0.001, 0.01, 0.1, 1.0)),
            ),
        )
        grid = phase_grid(config)
        cells_path = tmp_path / "cells.csv"
        crossings_path = tmp_path / "crossings.csv"
        phase_grid_to_csv(grid, cells_path, crossings_path)
        cells = cells_path.read_text().strip().splitlines()
        assert cells[0] == "L,nu,cell"
        assert len(cells) == 1 + 16
        crossings = crossings_path.read_text().strip().splitlines()
        assert crossings[0] == "L,nu_crossing"

    def test_requires_four_values(self):
        config = small_config(
            phase=PhaseAxes(
                axis1=SweepAxis("L", (50.0, 100.0, 200.0)),
                axis2=SweepAxis("nu", (0.01, 0.03, 0.1, 0.3)),
            ),
        )
        with pytest.raises(ValueError):
            phase_grid(config)

    def test_rejects_same_parameter(self):
        with pytest.raises(ValueError):
            PhaseAxes(
                axis1=SweepAxis("nu", (0.01, 0.03, 0.1, 0.3)),
                axis2=SweepAxis("nu", (0.01, 0.03, 0.1, 0.3)),
            )


class TestConfigJson:
    def test_clumps_roundtrip(self):
        doc = {
            "geometry": {
                "num_clumps": 2, "clump_sizes": [2, 2], "alpha": 0.2,
                "beta": 10.0, "anchors": [0.2, 0.7], "M": 40,
            },
            "L": 200,
            "nu": 0.05,
            "trials": 8,
            "root_seed": 7,
            "sweep": {"param": "nu", "values": [0.01, 0.03, 0.1]},
        }
        config = config_from_json(json.dumps(doc))
        assert config.M == 40
        assert config.sweep.param == "nu"
        assert config.resolved_trials == 8

    def test_points_geometry_needs_m(self):
        with pytest.raises(ValueError):
            config_from_json({"geometry": {"points": [0.1, 0.5]}, "L": 10, "nu": 0.0})

    def test_points_geometry(self):
        config = config_from_json(
            {"geometry": {"points": [0.1, 0.5]}, "M": 16, "L": 10, "nu": 0.0}
        )
        assert isinstance(config.geometry, SupportSet)
        assert config.resolved_trials == 100

    def test_trials_default_scales_with_clump_size(self):
        doc = {
            "geometry": {
                "num_clumps": 2, "clump_sizes": [3, 3], "alpha": 0.2,
                "beta": 10.0, "anchors": [0.2, 0.7], "M": 40,
            },
            "L": 100,
            "nu": 0.01,
        }
        assert config_from_json(doc).resolved_trials == 2500

    def test_m_conflict_rejected(self):
        doc = {
            "geometry": {
                "num_clumps": 1, "clump_sizes": [2], "alpha": 0.2,
                "beta": 1.0, "anchors": [0.3], "M": 40,
            },
            "M": 64,
            "L": 100,
            "nu": 0.01,
        }
        with pytest.raises(ValueError):
            config_from_json(doc)

    def test_phase_axes_parsed(self):
        doc = {
            "geometry": {"points": [0.2, 0.6]}, "M": 16, "L": 100, "nu": 0.05,
            "phase": {
                "axis1": {"param": "L", "values": [10, 20, 40, 80]},
                "axis2": {"param": "nu", "values": [0.01, 0.03, 0.1, 0.3]},
                "threshold": -2.0,
            },
        }
        config = config_from_json(doc)
        assert config.phase.threshold == -2.0
        assert config.phase.axis1.param == "L"
