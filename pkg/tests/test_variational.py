"""Unit tests for mean-field variational inference."""
import numpy as np
import pytest


def test_import_variational():
    """Test that the variational module can be imported."""
    try:
        from admg.variational import run_vb, VPool, vb_posterior_draws
        assert run_vb is not None
        assert VPool is not None
        assert vb_posterior_draws is not None
    except ImportError as e:
        pytest.fail(f"Failed to import admg.variational: {e}")


def _complete(q):
    from admg.graph import Admg
    nodes = [f"Y{k}" for k in range(1, q + 1)]
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
    return Admg.from_edges(nodes, bidirected=pairs)


def _pool(params, m, seed):
    from admg.giw import build_proposal_plan, draw_noise
    from admg.graph import SamplingOrder
    from admg.variational import VPool
    order = SamplingOrder.declaration(params.graph)
    plan = build_proposal_plan(params, order)
    rng = np.random.default_rng(seed)
    return VPool.build(params, order, [draw_noise(plan, rng) for _ in range(m)])


class TestVPool:
    """Tests for the frozen V-draw pool."""

    def test_reweight_at_anchor(self):
        """At its own anchor the pool keeps the proposal weights."""
        from admg.giw import GiwParams
        from admg.synthetic import hub_graph
        graph = hub_graph(4)
        params = GiwParams(delta=5.0, U=np.eye(4), graph=graph)
        pool = _pool(params, 50, 0)
        np.testing.assert_allclose(pool.reweight(params), pool.log_weights)
        assert pool.m == 50
        assert 1.0 <= pool.anchor_ess <= 50.0

    def test_complete_graph_expectations(self):
        """On a complete graph the pool estimate of log I_G is the closed form."""
        from admg.giw import GiwParams, log_iw_norm_const
        U = np.array([[2.0, 0.3], [0.3, 1.0]])
        params = GiwParams(delta=4.0, U=U, graph=_complete(2))
        moments = _pool(params, 20, 1).expectations(params)
        assert moments.log_norm_const == pytest.approx(log_iw_norm_const(4.0, U))
        assert moments.ess == pytest.approx(20.0)

    def test_reweight_needs_same_delta(self):
        """Reweighting across degrees of freedom is refused."""
        from admg.giw import GiwParams
        from core.errors import ValidationError
        graph = _complete(2)
        pool = _pool(GiwParams(delta=4.0, U=np.eye(2), graph=graph), 5, 2)
        with pytest.raises(ValidationError):
            pool.reweight(GiwParams(delta=6.0, U=np.eye(2), graph=graph))

    def test_expected_precision_complete_graph(self):
        """<V^-1> under an inverse-Wishart is nu U^-1 with nu = delta + q - 1."""
        from admg.giw import GiwParams
        from admg.variational import expected_precision
        U = np.array([[1.5, 0.4, 0.0], [0.4, 1.0, 0.2], [0.0, 0.2, 0.8]])
        params = GiwParams(delta=4.0, U=U, graph=_complete(3))
        estimate = expected_precision(params, 4000, np.random.default_rng(3))
        np.testing.assert_allclose(estimate, 6.0 * np.linalg.inv(U), rtol=0.05, atol=0.25)


class TestRunVb:
    """Tests for coordinate ascent."""

    @pytest.fixture
    def data(self):
        """Recovery-model graph and 500 simulated rows."""
        from admg.rng import make_stream
        from admg.synthetic import recovery_model, simulate
        graph, theta = recovery_model()
        return graph, simulate(graph, theta, 500, make_stream(5))

    def test_bound_is_monotone_between_resets(self, data):
        """The bound never falls on a fixed pool anchor."""
        from admg.gibbs import ModelPriors
        from admg.variational import VbConfig, run_vb
        graph, dataset = data
        config = VbConfig(max_sweeps=30, m=100, seed=1)
        state = run_vb(graph, ModelPriors.default(graph), dataset, config)
        history = state.bound_history
        assert len(history) >= 2
        for k in range(1, len(history)):
            if k in state.anchor_resets:
                continue
            assert history[k] >= history[k - 1] - 10 * config.tolerance

    def test_coefficients_near_truth(self, data):
        """q(B) centres near the generating coefficients."""
        from admg.gibbs import ModelPriors
        from admg.variational import VbConfig, run_vb
        graph, dataset = data
        state = run_vb(graph, ModelPriors.default(graph), dataset, VbConfig(m=100, seed=2))
        np.testing.assert_allclose(state.qB.mean, [0.8, -0.6, 0.5], atol=0.15)
        assert np.all(np.linalg.eigvalsh(state.qB.covariance) > 0)

    def test_zero_sweeps_returns_initial_factors(self, data):
        """max_sweeps=0 stops before any pool is built."""
        from admg.gibbs import ModelPriors
        from admg.variational import VbConfig, run_vb
        graph, dataset = data
        state = run_vb(graph, ModelPriors.default(graph), dataset, VbConfig(max_sweeps=0))
        assert state.bound_history == []
        assert state.pool is None
        assert state.qV.delta == pytest.approx(3.0 + 500)

    def test_same_seed_same_bound(self, data):
        """A run is a function of its seed."""
        from admg.gibbs import ModelPriors
        from admg.variational import VbConfig, run_vb
        graph, dataset = data
        config = VbConfig(max_sweeps=5, m=40, seed=4)
        a = run_vb(graph, ModelPriors.default(graph), dataset, config)
        b = run_vb(graph, ModelPriors.default(graph), dataset, config)
        assert a.bound_history == b.bound_history

    def test_latent_model_runs(self):
        """Latent factors get one mean per row and a shared covariance."""
        from admg.gibbs import ModelPriors
        from admg.rng import make_stream
        from admg.synthetic import industrialization_model, simulate
        from admg.variational import VbConfig, run_vb
        graph, theta = industrialization_model()
        dataset = simulate(graph, theta, 75, make_stream(6)).centered()
        state = run_vb(graph, ModelPriors.default(graph), dataset,
                       VbConfig(max_sweeps=10, m=50, seed=6))
        assert state.qX.means.shape == (75, 3)
        assert state.qX.covariance.shape == (3, 3)
        assert np.isfinite(state.bound_history).all()

    def test_config_validation(self):
        """Bad settings are rejected."""
        from admg.variational import VbConfig
        from core.errors import ValidationError
        for config in (VbConfig(tolerance=0.0), VbConfig(m=0), VbConfig(ess_floor=1.0),
                       VbConfig(max_sweeps=-1), VbConfig(order="random")):
            with pytest.raises(ValidationError):
                config.validate()


class TestVbDraws:
    """Tests for draws and predictions from the fitted factors."""

    @pytest.fixture
    def fitted(self):
        """A short VB run on the recovery model."""
        from admg.gibbs import ModelPriors
        from admg.rng import make_stream
        from admg.synthetic import recovery_model, simulate
        from admg.variational import VbConfig, run_vb
        graph, theta = recovery_model()
        dataset = simulate(graph, theta, 200, make_stream(7))
        priors = ModelPriors.default(graph)
        state = run_vb(graph, priors, dataset, VbConfig(max_sweeps=8, m=40, seed=7))
        return graph, priors, state, simulate(graph, theta, 50, make_stream(8))

    def test_posterior_draws(self, fitted):
        """Draws come back in the model with the state's offset attached."""
        from admg.bartlett import check_membership
        from admg.variational import vb_posterior_draws
        graph, priors, state, _ = fitted
        state.offset = np.full(graph.q, 0.5)
        samples = vb_posterior_draws(state, graph, priors, 12, np.random.default_rng(0))
        assert len(samples) == 12
        assert samples.offset is state.offset
        for theta in samples.thetas:
            check_membership(theta.V, graph)

    def test_predictive_is_finite(self, fitted):
        """The plug-in predictive log-likelihood is a finite number."""
        from admg.variational import vb_predictive_loglik
        graph, priors, state, test = fitted
        value = vb_predictive_loglik(state, graph, priors, test, 30, np.random.default_rng(1))
        assert np.isfinite(value)

    def test_point_theta(self, fitted):
        """The point estimate uses q(B)'s mean and a member V."""
        from admg.bartlett import check_membership
        from admg.data import Dataset
        from admg.gibbs import GibbsProblem
        from admg.variational import point_theta
        graph, priors, state, _ = fitted
        problem = GibbsProblem.build(graph, priors, Dataset.empty(graph.observed))
        theta = point_theta(state, problem)
        check_membership(theta.V, graph)
        np.testing.assert_allclose(problem.layout.pack(theta), state.qB.mean)

    def test_point_theta_needs_pool(self):
        """Without a pool there is no point estimate."""
        from admg.data import Dataset
        from admg.gibbs import GibbsProblem, ModelPriors
        from admg.synthetic import recovery_model
        from admg.variational import VbConfig, point_theta, run_vb
        from core.errors import ValidationError
        graph, _ = recovery_model()
        priors = ModelPriors.default(graph)
        state = run_vb(graph, priors, Dataset.empty(graph.observed), VbConfig(max_sweeps=0))
        problem = GibbsProblem.build(graph, priors, Dataset.empty(graph.observed))
        with pytest.raises(ValidationError):
            point_theta(state, problem)


def _central_difference(f, x, step=1e-4):
    grad = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = step
        grad[k] = (f(x + e) - f(x - e)) / (2 * step)
    return grad


class TestBoundStationarity:
    """Each coordinate update lands on a stationary point of the bound."""

    def _fitted(self, graph, dataset, seed):
        from admg.gibbs import GibbsProblem, ModelPriors
        from admg.graph import choose_order
        from admg.variational import VbConfig, run_vb
        priors = ModelPriors.default(graph)
        state = run_vb(graph, priors, dataset, VbConfig(max_sweeps=3, m=60, seed=seed))
        problem = GibbsProblem.build(graph, priors, dataset, choose_order(graph, "greedy"))
        return state, problem

    def test_bound_gradient_vanishes_after_qB_update(self):
        """Finite-difference gradient in the q(B) mean is below 1e-4."""
        from dataclasses import replace
        from admg.rng import make_stream
        from admg.synthetic import recovery_model, simulate
        from admg.variational import GaussianFactor, compute_bound, update_qB
        graph, theta = recovery_model()
        state, problem = self._fitted(graph, simulate(graph, theta, 300, make_stream(21)), 21)
        precision = state.pool.expectations(state.qV).precision
        state.qB = update_qB(state, problem, precision)
        cov = state.qB.covariance

        def bound(mean):
            moved = replace(state, qB=GaussianFactor(mean=mean, covariance=cov))
            return compute_bound(moved, problem, state.pool)

        grad = _central_difference(bound, state.qB.mean)
        assert np.max(np.abs(grad)) < 1e-4

    def test_bound_gradient_vanishes_after_qX_update(self):
        """Finite-difference gradient in a few q(X) means is below 1e-4."""
        from dataclasses import replace
        from admg.rng import make_stream
        from admg.synthetic import industrialization_model, simulate
        from admg.variational import LatentFactor, compute_bound, update_qX
        graph, theta = industrialization_model()
        dataset = simulate(graph, theta, 75, make_stream(22)).centered()
        state, problem = self._fitted(graph, dataset, 22)
        precision = state.pool.expectations(state.qV).precision
        state.qX = update_qX(state, problem, precision)
        cells = [(0, 0), (10, 1), (40, 2), (74, 0)]

        def bound(values):
            means = state.qX.means.copy()
            for (row, col), value in zip(cells, values):
                means[row, col] = value
            moved = replace(state, qX=LatentFactor(means=means, covariance=state.qX.covariance))
            return compute_bound(moved, problem, state.pool)

        start = np.array([state.qX.means[row, col] for row, col in cells])
        grad = _central_difference(bound, start)
        assert np.max(np.abs(grad)) < 1e-4


class TestAgainstGibbs:
    """VB and Gibbs agree on held-out data for a well-specified model."""

    @pytest.mark.slow
    def test_predictive_logliks_indistinguishable(self):
        """Paired t-test over ten folds does not reject at 0.05."""
        from scipy.stats import ttest_rel
        from admg.data import kfold_splits
        from admg.gibbs import GibbsConfig, ModelPriors, predictive_loglik, run_gibbs
        from admg.rng import make_stream
        from admg.synthetic import recovery_model, simulate
        from admg.variational import VbConfig, run_vb, vb_predictive_loglik
        graph, theta = recovery_model()
        dataset = simulate(graph, theta, 1000, make_stream(30))
        priors = ModelPriors.default(graph)
        gibbs, vb = [], []
        for k, (train, test) in enumerate(kfold_splits(dataset, 10, make_stream(30, 1))):
            chain = run_gibbs(graph, priors, train,
                              GibbsConfig(iterations=600, burn_in=200, thin=2, m=20, seed=k))
            gibbs.append(predictive_loglik(chain.samples, test))
            state = run_vb(graph, priors, train, VbConfig(m=100, seed=k))
            vb.append(vb_predictive_loglik(state, graph, priors, test, 200, make_stream(k, 2)))
        assert np.isfinite(gibbs).all() and np.isfinite(vb).all()
        assert ttest_rel(gibbs, vb).pvalue > 0.05
