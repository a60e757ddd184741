"""Unit tests for the ancillary-latent DAG baseline and the benchmark."""
import json

import numpy as np
import pytest


def test_import_baseline_dag():
    """Test that the baseline module can be imported."""
    try:
        from admg.baseline_dag import to_ancillary_dag, run_dag_gibbs, benchmark_compare
        assert to_ancillary_dag is not None
        assert run_dag_gibbs is not None
        assert benchmark_compare is not None
    except ImportError as e:
        pytest.fail(f"Failed to import admg.baseline_dag: {e}")


def test_import_psutil():
    """Test that psutil is available."""
    try:
        import psutil
        assert psutil is not None
    except ImportError as e:
        pytest.fail(f"Failed to import psutil: {e}")


def _recovery(d, seed=0):
    from admg.rng import make_stream
    from admg.synthetic import recovery_model, simulate
    graph, theta = recovery_model()
    return graph, simulate(graph, theta, d, make_stream(seed))


class TestAncillaryDag:
    """Tests for the bi-directed to ancillary-latent rewrite."""

    def test_structure(self):
        """One latent per bi-directed edge, pinned into the smaller child."""
        from admg.baseline_dag import to_ancillary_dag
        from admg.synthetic import recovery_model
        graph, _ = recovery_model()
        ancillary = to_ancillary_dag(graph)
        assert ancillary.dag.q == graph.q + len(graph.bidirected_edges)
        assert ancillary.ancillary_nodes == ("X_Y1_Y3", "X_Y4_Y5")
        assert ancillary.dag.bidirected_edges == frozenset()
        assert set(ancillary.ancillary_nodes) <= ancillary.dag.latent
        assert ancillary.fixed == {("X_Y1_Y3", "Y1"): 1.0, ("X_Y4_Y5", "Y4"): 1.0}
        assert ancillary.dag.parents("Y3") == ("X_Y1_Y3",)

    def test_name_collision(self):
        """A taken ancillary name gets an underscore appended."""
        from admg.baseline_dag import to_ancillary_dag
        from admg.graph import Admg
        graph = Admg.from_edges(["A", "B", "X_A_B"], bidirected=[("A", "B")])
        assert to_ancillary_dag(graph).ancillary_nodes == ("X_A_B_",)

    def test_admg_theta(self):
        """V = diag(v) + v_X l l^T and the observed covariance is preserved."""
        from admg.bartlett import Theta, implied_covariance
        from admg.baseline_dag import admg_theta, to_ancillary_dag
        from admg.graph import Admg
        graph = Admg.from_edges(["A", "B"], bidirected=[("A", "B")])
        ancillary = to_ancillary_dag(graph)
        B = np.zeros((3, 3))
        B[0, 2], B[1, 2] = 1.0, 0.5
        dag_theta = Theta(B=B, V=np.diag([0.7, 0.9, 0.4]))
        theta = admg_theta(ancillary, dag_theta)
        expected = np.diag([0.7, 0.9]) + 0.4 * np.outer([1.0, 0.5], [1.0, 0.5])
        np.testing.assert_allclose(theta.V, expected)
        np.testing.assert_allclose(implied_covariance(theta),
                                   implied_covariance(dag_theta)[:2, :2])

    def test_reachability(self):
        """A strong bi-directed triangle cannot be reached; a chain can."""
        from admg.baseline_dag import ancillary_reachable
        triangle = np.full((3, 3), 0.7) + 0.3 * np.eye(3)
        assert np.linalg.eigvalsh(triangle).min() > 0
        assert not ancillary_reachable(triangle)
        chain = np.array([[1.0, 0.7, 0.0], [0.7, 1.0, 0.7], [0.0, 0.7, 1.0]])
        assert ancillary_reachable(chain)


class TestDagPriors:
    """Tests for priors carried over to the DAG."""

    def test_shapes_and_scales(self):
        """Variance priors are IG(delta/2, u/2); ancillaries use sqrt(u_aa u_bb)."""
        from admg.baseline_dag import DagPriors, to_ancillary_dag
        from admg.gibbs import ModelPriors
        from admg.synthetic import recovery_model
        graph, _ = recovery_model()
        priors = ModelPriors.default(graph, delta=4.0, u_scale=2.0)
        dag_priors = DagPriors.from_admg(to_ancillary_dag(graph), priors)
        np.testing.assert_allclose(dag_priors.shape, np.full(7, 2.0))
        np.testing.assert_allclose(dag_priors.scale, np.full(7, 1.0))
        assert ("X_Y1_Y3", "Y1") in dag_priors.model.b.fixed

    def test_rejects_foreign_prior(self):
        """Priors must be defined on the source graph."""
        from admg.baseline_dag import DagPriors, to_ancillary_dag
        from admg.gibbs import ModelPriors
        from admg.synthetic import bow_model, recovery_model
        from core.errors import ValidationError
        graph, _ = recovery_model()
        other, _ = bow_model()
        with pytest.raises(ValidationError):
            DagPriors.from_admg(to_ancillary_dag(graph), ModelPriors.default(other))


class TestRunDagGibbs:
    """Tests for the DAG sampler."""

    def test_shapes(self):
        """Trace columns are free DAG coefficients then one variance per DAG node."""
        from admg.baseline_dag import DagConfig, run_dag_gibbs, to_ancillary_dag
        from admg.bartlett import check_membership
        from admg.gibbs import ModelPriors
        graph, data = _recovery(100)
        ancillary = to_ancillary_dag(graph)
        result = run_dag_gibbs(ancillary, ModelPriors.default(graph), data,
                               DagConfig(iterations=20, burn_in=5, thin=3, seed=1))
        assert result.trace.shape == (5, 12)
        assert result.parameter_names[-1] == "v[X_Y4_Y5]"
        assert result.sweep_seconds.shape == (20,)
        assert len(result.admg_samples) == 5
        for theta in result.admg_samples.thetas:
            assert theta.V.shape == (5, 5)
            check_membership(theta.V, graph)

    def test_same_seed_same_trace(self):
        """The DAG chain is a function of (seed, chain)."""
        from admg.baseline_dag import DagConfig, run_dag_gibbs, to_ancillary_dag
        from admg.gibbs import ModelPriors
        graph, data = _recovery(60)
        ancillary = to_ancillary_dag(graph)
        config = DagConfig(iterations=10, burn_in=2, thin=1, seed=2)
        a = run_dag_gibbs(ancillary, ModelPriors.default(graph), data, config)
        b = run_dag_gibbs(ancillary, ModelPriors.default(graph), data, config)
        assert np.array_equal(a.trace, b.trace)

    def test_pins_hold(self):
        """Pinned ancillary loadings stay at 1."""
        from admg.baseline_dag import DagConfig, run_dag_gibbs, to_ancillary_dag
        from admg.gibbs import ModelPriors
        graph, data = _recovery(60)
        ancillary = to_ancillary_dag(graph)
        dag = ancillary.dag
        result = run_dag_gibbs(ancillary, ModelPriors.default(graph), data,
                               DagConfig(iterations=6, burn_in=0, thin=1, seed=3))
        for theta in result.samples.thetas:
            assert theta.B[dag.index("Y1"), dag.index("X_Y1_Y3")] == 1.0

    def test_config_validation(self):
        """Thinning must be positive."""
        from admg.baseline_dag import DagConfig
        from core.errors import ValidationError
        with pytest.raises(ValidationError):
            DagConfig(thin=0).validate()


class TestBenchmark:
    """Tests for the paired comparison."""

    @pytest.fixture
    def report(self):
        """Two seeds, a handful of sweeps."""
        from admg.baseline_dag import benchmark_compare
        graph, data = _recovery(120)
        return benchmark_compare(graph, data, iterations=10, seeds=[0, 1], thin=1, m=5)

    def test_trials(self, report):
        """One trial per engine and seed, each with a finite predictive."""
        assert len(report.trials) == 4
        assert {t.engine for t in report.trials} == {"admg-mcmc", "dag-mcmc"}
        assert all(np.isfinite(t.predictive_loglik) for t in report.trials)
        assert report.wall_time_ratio > 0

    def test_json_round_trip(self, report):
        """The JSON form restores the same report."""
        from admg.baseline_dag import BenchmarkReport
        text = json.dumps(report.to_dict())
        restored = BenchmarkReport.from_dict(json.loads(text))
        assert restored.to_dict() == report.to_dict()

    def test_render_table(self, report):
        """The table names both engines and the test verdict."""
        table = report.render_table()
        assert "admg-mcmc" in table
        assert "dag-mcmc" in table
        assert "paired t-test" in table

    def test_single_seed_has_no_test(self):
        """A paired t-test needs two seeds."""
        from admg.baseline_dag import benchmark_compare
        graph, data = _recovery(80)
        report = benchmark_compare(graph, data, iterations=5, seeds=[3], thin=1, m=5)
        assert report.p_value is None
        assert not report.significant
        assert "not available" in report.render_table()

    def test_order_reaches_admg_sampler(self):
        """The order strategy is forwarded to the ADMG chain."""
        from unittest.mock import patch
        from admg.baseline_dag import benchmark_compare
        from admg.gibbs import run_gibbs
        graph, data = _recovery(60)
        with patch("admg.baseline_dag.run_gibbs", wraps=run_gibbs) as chain:
            benchmark_compare(graph, data, iterations=3, seeds=[1], thin=1, m=3, order="given")
        assert chain.call_args.args[3].order == "given"

    def test_needs_seeds(self):
        """An empty seed list is rejected."""
        from admg.baseline_dag import benchmark_compare
        from core.errors import ValidationError
        graph, data = _recovery(20)
        with pytest.raises(ValidationError):
            benchmark_compare(graph, data, iterations=5, seeds=[])
