"""Unit tests for experiment plans and batch runners."""
import json
import math

import pytest

from engine import SolverSettings
from experiments import (COLUMNS, Batch, ExperimentPlan, ExperimentRunner, PlanError, aggregate, load_plan,
                         run_experiment, save_plan, task_seed, worker_count, write_outputs)
from generators import GeneratorKind
from measures import cost_table


def small_plan(batch, **overrides):
    values = dict(generators=(GeneratorKind.ERDOS_RENYI,), node_sizes=(12,), repetitions=2,
                  p_start=0.5, p_stop=1.0, p_step=0.5, seed=3, deterministic=True)
    values.update(overrides)
    return ExperimentPlan(batch=batch, **values)


class TestExperimentPlan:
    """Tests for plan defaults, validation and persistence."""

    def test_p_values(self):
        """Test the inclusive probability grid."""
        assert ExperimentPlan(Batch.COMPARE_METHODS).p_values()[:3] == [0.0, 0.05, 0.1]
        assert len(ExperimentPlan(Batch.COMPARE_METHODS).p_values()) == 21
        assert small_plan(Batch.COMPARE_METHODS).p_values() == [0.5, 1.0]

    def test_scale_defaults(self):
        """Test desk and full scale defaults."""
        desk = ExperimentPlan.default_for(Batch.COMPARE_METHODS)
        full = ExperimentPlan.default_for(Batch.COMPARE_METHODS, full_scale=True)
        assert desk.node_sizes == (64, 128, 256)
        assert desk.repetitions == 8
        assert full.node_sizes == (64, 128, 256, 512, 1024)
        assert full.repetitions == 32
        assert ExperimentPlan.default_for(Batch.SHIFT_IMPACT).shifts == (1, 3)

    def test_overrides_skip_none(self):
        """Test that None overrides keep the defaults."""
        plan = ExperimentPlan.default_for(Batch.CONVERGENCE, seed=9, repetitions=None)
        assert plan.seed == 9
        assert plan.repetitions == 8

    def test_invalid(self):
        """Test plan validation."""
        with pytest.raises(PlanError):
            small_plan(Batch.COMPARE_METHODS, p_step=0.0)
        with pytest.raises(PlanError):
            small_plan(Batch.COMPARE_METHODS, repetitions=0)
        with pytest.raises(ValueError):
            small_plan('no-such-batch')

    def test_save_and_load(self, tmp_path):
        """Test that a saved plan loads back equal."""
        plan = small_plan(Batch.CONFIG_IMPACT, configs=("A0 A1 A0T A1T",), shifts=(0, 2),
                          settings=SolverSettings(tau0=0.25))
        path = tmp_path / "plan.json"
        save_plan(plan, str(path))
        assert load_plan(str(path)) == plan

    def test_load_errors(self, tmp_path):
        """Test missing, malformed and unknown-field plans."""
        with pytest.raises(FileNotFoundError):
            load_plan(str(tmp_path / "absent.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(PlanError):
            load_plan(str(bad))
        unknown = tmp_path / "unknown.json"
        unknown.write_text(json.dumps({'batch': 'convergence', 'colour': 'red'}))
        with pytest.raises(PlanError):
            load_plan(str(unknown))


class TestWorkPool:
    """Tests for seeding and pool sizing."""

    def test_task_seeds(self):
        """Test that task seeds are reproducible and distinct."""
        assert task_seed(1, 0, 64, 3, 0) == task_seed(1, 0, 64, 3, 0)
        assert task_seed(1, 0, 64, 3, 0) != task_seed(1, 0, 64, 3, 1)
        assert task_seed(1, 0, 64, 3, 0) != task_seed(2, 0, 64, 3, 0)

    def test_worker_count_env(self, monkeypatch, caplog):
        """Test MULTIRANK_THREADS and its fallback."""
        monkeypatch.setenv('MULTIRANK_THREADS', '3')
        assert worker_count() == 3
        monkeypatch.setenv('MULTIRANK_THREADS', 'many')
        assert worker_count() >= 1
        assert "ignoring invalid" in caplog.text

    def test_results_independent_of_workers(self):
        """Test that the pool size does not change the rows."""
        plan = small_plan(Batch.COMPARE_METHODS)
        one = ExperimentRunner(plan, workers=1).run().rows
        four = ExperimentRunner(plan, workers=4).run().rows
        assert one.equals(four)


class TestBatches:
    """Tests for each batch's rows."""

    def test_compare_methods(self):
        """Test one row per method pair and task."""
        result = run_experiment(small_plan(Batch.COMPARE_METHODS))
        rows = result.rows
        assert list(rows.columns) == COLUMNS[Batch.COMPARE_METHODS]
        assert len(rows) == 1 * 1 * 2 * 2 * 3
        assert set(rows['method']) == {'pagerank-like', 'hits-like', 'versatile-like'}
        assert set(rows.loc[rows['method'] == 'hits-like', 'config']) == {"A0 A1T A1 A0T"}
        ok = rows[rows['status'] == 'ok']
        assert not ok.empty
        assert ok['tau_w'].between(-1.0, 1.0).all()
        assert rows['multijaccard'].between(0.0, 1.0).all()

    def test_identical_layers_match_hits(self):
        """Test that hits-like agrees with per-layer HITS when both layers are the full base graph."""
        plan = small_plan(Batch.COMPARE_METHODS, generators=(GeneratorKind.ERDOS_RENYI, GeneratorKind.SBM),
                          node_sizes=(32,), repetitions=4, p_start=1.0, p_stop=1.0)
        rows = run_experiment(plan).rows
        hits = rows[rows['reference'] == 'hits']
        assert len(hits) == 8
        assert (hits['status'] == 'ok').all()
        assert ((hits['tau_w'] - 1.0).abs() <= 1e-9).all()

    def test_empty_layers_recorded_not_raised(self):
        """Test that p = 0 failures land in the status column."""
        rows = run_experiment(small_plan(Batch.COMPARE_METHODS, p_start=0.0, p_stop=0.0)).rows
        hits = rows[rows['reference'] == 'hits']
        assert hits['status'].str.startswith('failed').all()
        assert hits['tau_w'].isna().all()

    def test_config_impact_covers_all_shifts(self):
        """Test six four-atom classes times four shifts per task."""
        plan = small_plan(Batch.CONFIG_IMPACT, p_start=1.0, repetitions=1)
        runner = ExperimentRunner(plan)
        assert len(runner.impact_configurations()) == 24
        rows = runner.run().rows
        assert len(rows) == 24
        assert set(rows['config']) == {
            "A0 A0T A1 A1T", "A0 A0T A1T A1", "A0 A1 A0T A1T",
            "A0 A1 A1T A0T", "A0 A1T A0T A1", "A0 A1T A1 A0T",
        }
        hits_like = rows[(rows['config'] == "A0 A1T A1 A0T") & (rows['shift'] == 3)]
        assert hits_like['member'].tolist() == ["A0T A0 A1T A1"]

    def test_shift_impact_defaults(self):
        """Test the shift batch restricts to its default shifts."""
        plan = ExperimentPlan.default_for(Batch.SHIFT_IMPACT, generators=(GeneratorKind.SBM,),
                                          node_sizes=(12,), repetitions=1, p_start=1.0, deterministic=True)
        rows = run_experiment(plan).rows
        assert len(rows) == 12
        assert set(rows['shift']) == {1, 3}

    def test_config_length_checked(self):
        """Test that a configuration of the wrong length is a plan error."""
        runner = ExperimentRunner(small_plan(Batch.CONFIG_IMPACT, configs=("A0 A1",)))
        with pytest.raises(PlanError):
            runner.impact_configurations()

    def test_convergence(self):
        """Test convergence rows follow the solver's halvings."""
        rows = run_experiment(small_plan(Batch.CONVERGENCE, repetitions=1, layer_prob=0.8)).rows
        assert list(rows.columns) == COLUMNS[Batch.CONVERGENCE]
        assert rows['halving'].tolist() == list(range(len(rows)))
        assert (rows['tau'].diff().dropna() < 0).all()
        assert rows['l1_error'].iloc[-1] < rows['l1_error'].iloc[0]

    def test_layer_count(self):
        """Test one row per layer count."""
        rows = run_experiment(small_plan(Batch.LAYER_COUNT, repetitions=1, max_layers=4, layer_prob=0.8)).rows
        assert rows['layers'].tolist() == [2, 3, 4]
        assert (rows['total_iterations'] > 0).all()

    def test_cost_table_batch(self):
        """Test the cost-table batch reproduces the table."""
        plan = ExperimentPlan.default_for(Batch.COST_TABLE, deterministic=True)
        assert run_experiment(plan).rows.equals(cost_table())


class TestOutputs:
    """Tests for CSV and JSON summary files."""

    def test_deterministic_csv(self, tmp_path):
        """Test that two deterministic runs write identical bytes."""
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        run_experiment(small_plan(Batch.COMPARE_METHODS, output=str(first)))
        run_experiment(small_plan(Batch.COMPARE_METHODS, output=str(second)))
        assert first.read_bytes() == second.read_bytes()
        summary = json.loads((tmp_path / "a.summary.json").read_text())
        assert summary['generated'] is None
        assert summary['plan']['batch'] == 'compare-methods'
        assert summary['rows'] == 12

    def test_timestamp_header(self, tmp_path):
        """Test that non-deterministic runs start with a generated line."""
        path = tmp_path / "rows.csv"
        result = run_experiment(small_plan(Batch.LAYER_COUNT, repetitions=1, max_layers=2, deterministic=False))
        csv_path, json_path = write_outputs(result, str(path))
        assert open(csv_path).readline().startswith("# generated ")
        assert json.loads(open(json_path).read())['generated'] is not None

    def test_aggregates(self):
        """Test grouped means with confidence bounds."""
        result = run_experiment(small_plan(Batch.COMPARE_METHODS, repetitions=3))
        records = result.summary['aggregates']
        assert records
        for record in records:
            assert {'generator', 'n', 'p', 'reference', 'method', 'count', 'mean_tau_w'} <= set(record)
            if record['count'] >= 2:
                assert record['ci_lo'] <= record['mean_tau_w'] <= record['ci_hi']

    def test_aggregate_single_sample(self):
        """Test that one sample yields no interval."""
        import pandas as pd
        frame = pd.DataFrame({'g': ['x'], 'v': [0.5]})
        record = aggregate(frame, ['g'], 'v')[0]
        assert record['count'] == 1
        assert record['ci_lo'] is None
        assert math.isclose(record['mean_v'], 0.5)


@pytest.mark.slow
class TestTrends:
    """Statistical checks on larger sweeps."""

    def test_agreement_grows_with_overlap(self):
        """Test mean tau_w rises with mean MultiJaccard for every method pair."""
        from scipy.stats import spearmanr
        plan = small_plan(Batch.COMPARE_METHODS, generators=(GeneratorKind.ERDOS_RENYI, GeneratorKind.SBM),
                          node_sizes=(128,), repetitions=8, p_start=0.0, p_stop=1.0, p_step=0.05)
        rows = run_experiment(plan).rows
        ok = rows[rows['status'] == 'ok']
        for (generator, method), group in ok.groupby(['generator', 'method']):
            curve = group.groupby('p')[['multijaccard', 'tau_w']].mean()
            rho = spearmanr(curve['multijaccard'], curve['tau_w'])[0]
            assert rho > 0.8, f"{generator}/{method}: rho={rho:.3f}"
