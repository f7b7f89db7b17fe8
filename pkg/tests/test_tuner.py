import math
from dataclasses import replace

import pytest

from tsplab.bench import instance_seed
from tsplab.geometry import brute_force_optimal, generate_instances
from tsplab.heatmap import softdist
from tsplab.mcts import MctsParams, mcts_solve
from tsplab.tuner import (
    GridSpec,
    TuneResult,
    default_grid,
    default_tau,
    evaluate_tau,
    grid_search_tau,
)


class TestDefaultTau:
    def test_anchor_sizes_are_exact(self):
        assert default_tau(500) == 0.0066
        assert default_tau(1000) == 0.0051
        assert default_tau(10000) == 0.0018

    def test_decreasing_in_instance_size(self):
        sizes = [100, 500, 1000, 10000, 20000]
        taus = [default_tau(n) for n in sizes]
        assert all(b < a for a, b in zip(taus, taus[1:]))

    def test_log_log_interpolation_between_anchors(self):
        n = 707
        frac = (math.log(n) - math.log(500)) / (math.log(1000) - math.log(500))
        expected = math.exp(
            math.log(0.0066) + frac * (math.log(0.0051) - math.log(0.0066))
        )
        assert math.isclose(default_tau(n), expected, rel_tol=1e-12)

    def test_extrapolates_below_smallest_anchor(self):
        n = 100
        frac = (math.log(n) - math.log(500)) / (math.log(1000) - math.log(500))
        expected = math.exp(
            math.log(0.0066) + frac * (math.log(0.0051) - math.log(0.0066))
        )
        assert math.isclose(default_tau(n), expected, rel_tol=1e-12)
        assert 0.0115 < default_tau(100) < 0.0125

    def test_extrapolates_above_largest_anchor(self):
        n = 20000
        frac = (math.log(n) - math.log(1000)) / (math.log(10000) - math.log(1000))
        expected = math.exp(
            math.log(0.0051) + frac * (math.log(0.0018) - math.log(0.0051))
        )
        assert math.isclose(default_tau(n), expected, rel_tol=1e-12)

    def test_rejects_tiny_n(self):
        with pytest.raises(ValueError):
            default_tau(1)
        assert default_tau(2) > 0.0


class TestGridSpec:
    def test_default_grid_contents(self):
        grid = default_grid()
        assert grid.coarse == tuple(round(0.0010 * i, 4) for i in range(1, 11))
        assert grid.refine_radius == 0.0010
        assert grid.refine_step == 0.0001

    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError):
            GridSpec(coarse=(), refine_radius=0.001, refine_step=0.0001)
        with pytest.raises(ValueError):
            GridSpec(coarse=(0.0, 0.01), refine_radius=0.001, refine_step=0.0001)
        with pytest.raises(ValueError):
            GridSpec(coarse=(0.01, 0.01), refine_radius=0.001, refine_step=0.0001)
        with pytest.raises(ValueError):
            GridSpec(coarse=(0.02, 0.01), refine_radius=0.001, refine_step=0.0001)
        with pytest.raises(ValueError):
            GridSpec(coarse=(0.01,), refine_radius=0.001, refine_step=0.001)
        with pytest.raises(ValueError):
            GridSpec(coarse=(0.01,), refine_radius=0.001, refine_step=0.0)

    def test_step_must_be_below_radius(self):
        grid = GridSpec(coarse=(0.01,), refine_radius=0.001, refine_step=0.0009)
        assert grid.refine_step < grid.refine_radius


def _stub_evaluator(table, default=99.0):
    def stub(instances, tau, params, workers=1):
        return table.get(round(tau, 10), default)

    return stub


class TestGridSearchStubbed:
    def test_coarse_winner_survives_flat_refinement(self, monkeypatch):
        table = {0.0010: 52.47558, 0.0070: 16.78133, 0.0100: 16.79291}
        monkeypatch.setattr("tsplab.tuner.evaluate_tau", _stub_evaluator(table))
        grid = GridSpec(coarse=(0.0010, 0.0070, 0.0100), refine_radius=0.0002, refine_step=0.0001)
        result = grid_search_tau([], MctsParams(time_budget=1.0), grid=grid)
        assert result.best_tau == 0.0070
        taus = [t for t, _ in result.table]
        assert taus == sorted(taus)
        assert len(taus) == len(set(taus)) == 7  # 3 coarse + 4 new refine points

    def test_refinement_can_beat_the_coarse_winner(self, monkeypatch):
        table = {
            0.0010: 52.47558,
            0.0070: 16.78133,
            0.0100: 16.79291,
            0.0066: 16.78020,
        }
        monkeypatch.setattr("tsplab.tuner.evaluate_tau", _stub_evaluator(table))
        grid = GridSpec(coarse=(0.0010, 0.0070, 0.0100), refine_radius=0.0010, refine_step=0.0001)
        result = grid_search_tau([], MctsParams(time_budget=1.0), grid=grid)
        assert result.best_tau == 0.0066
        assert dict(result.table)[0.0066] == 16.78020

    def test_ties_break_toward_smaller_tau(self, monkeypatch):
        monkeypatch.setattr(
            "tsplab.tuner.evaluate_tau", _stub_evaluator({0.002: 5.0, 0.004: 5.0}, default=9.0)
        )
        grid = GridSpec(coarse=(0.002, 0.004), refine_radius=0.0002, refine_step=0.0001)
        result = grid_search_tau([], MctsParams(time_budget=1.0), grid=grid)
        assert result.best_tau == 0.002

    def test_best_is_the_table_argmin(self, monkeypatch):
        table = {0.001: 8.0, 0.003: 7.5, 0.005: 7.9}
        monkeypatch.setattr("tsplab.tuner.evaluate_tau", _stub_evaluator(table, default=7.7))
        grid = GridSpec(coarse=(0.001, 0.003, 0.005), refine_radius=0.0004, refine_step=0.0002)
        result = grid_search_tau([], MctsParams(time_budget=1.0), grid=grid)
        values = dict(result.table)
        assert values[result.best_tau] == min(values.values())

    def test_refine_points_stay_positive(self, monkeypatch):
        seen = []

        def stub(instances, tau, params, workers=1):
            seen.append(tau)
            return 1.0 if tau > 0.0015 else 0.5

        monkeypatch.setattr("tsplab.tuner.evaluate_tau", stub)
        grid = GridSpec(coarse=(0.0001, 0.01), refine_radius=0.0005, refine_step=0.0002)
        grid_search_tau([], MctsParams(time_budget=1.0), grid=grid)
        assert all(t > 0.0 for t in seen)


class TestEvaluateTau:
    def test_single_instance_matches_direct_solve(self):
        inst = generate_instances(9, 1, seed=20)[0]
        params = MctsParams(time_budget=10.0, seed=3, max_actions=120)
        solo = mcts_solve(
            inst, softdist(inst, 0.02), replace(params, seed=instance_seed(3, inst))
        )
        assert evaluate_tau([inst], 0.02, params) == solo.best_length

    def test_invariant_to_instance_order(self):
        instances = generate_instances(8, 3, seed=21)
        params = MctsParams(time_budget=10.0, seed=0, max_actions=100)
        assert evaluate_tau(instances, 0.03, params) == evaluate_tau(
            instances[::-1], 0.03, params
        )

    def test_invariant_to_worker_count(self):
        instances = generate_instances(8, 3, seed=22)
        params = MctsParams(time_budget=10.0, seed=0, max_actions=100)
        assert evaluate_tau(instances, 0.03, params, workers=1) == evaluate_tau(
            instances, 0.03, params, workers=3
        )

    def test_rejects_empty_batch(self):
        with pytest.raises(ValueError):
            evaluate_tau([], 0.01, MctsParams(time_budget=1.0))

    def test_reaches_small_optima(self):
        instances = generate_instances(6, 2, seed=23)
        optima = [brute_force_optimal(inst)[1] for inst in instances]
        value = evaluate_tau(instances, 0.05, MctsParams(time_budget=0.5, seed=0))
        assert abs(value - sum(optima) / 2.0) < 1e-9


class TestGridSearchIntegration:
    def test_small_run_is_deterministic_and_consistent(self):
        instances = generate_instances(8, 2, seed=24)
        params = MctsParams(time_budget=10.0, seed=1, max_actions=150)
        grid = GridSpec(coarse=(0.01, 0.03), refine_radius=0.005, refine_step=0.0025)
        a = grid_search_tau(instances, params, grid=grid)
        b = grid_search_tau(instances, params, grid=grid)
        assert isinstance(a, TuneResult)
        assert a == b
        values = dict(a.table)
        assert a.best_tau in values
        assert values[a.best_tau] == min(values.values())
        assert all(math.isfinite(v) and v > 0.0 for v in values.values())
