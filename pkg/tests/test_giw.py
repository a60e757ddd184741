"""Unit tests for the G-IW sampler, normalizing constants and marginal likelihoods."""
import numpy as np
import pytest
from scipy.special import gammaln
from scipy.stats import invwishart


def test_import_giw():
    """Test that the giw module can be imported."""
    try:
        from admg.giw import GiwParams, sample_proposals, estimate_norm_const
        assert GiwParams is not None
        assert sample_proposals is not None
        assert estimate_norm_const is not None
    except ImportError as e:
        pytest.fail(f"Failed to import admg.giw: {e}")


def test_import_scipy():
    """Test that scipy is available."""
    try:
        import scipy
        assert scipy is not None
    except ImportError as e:
        pytest.fail(f"Failed to import scipy: {e}")


def _complete(q):
    from admg.graph import Admg
    nodes = [f"Y{k}" for k in range(1, q + 1)]
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
    return Admg.from_edges(nodes, bidirected=pairs)


def _empty(q):
    from admg.graph import Admg
    return Admg.from_edges([f"Y{k}" for k in range(1, q + 1)])


def _params(graph, delta=4.0, scale=1.0):
    from admg.giw import GiwParams
    return GiwParams(delta=delta, U=scale * np.eye(graph.q), graph=graph)


class TestGiwParams:
    """Tests for parameter validation and the conjugate update."""

    def test_rejects_bad_delta(self):
        """delta must be positive."""
        from admg.giw import GiwParams
        from core.errors import ValidationError
        with pytest.raises(ValidationError):
            GiwParams(delta=0.0, U=np.eye(2), graph=_empty(2))

    def test_rejects_indefinite_scale(self):
        """U must be positive definite."""
        from admg.giw import GiwParams
        from core.errors import ValidationError
        with pytest.raises(ValidationError):
            GiwParams(delta=3.0, U=np.array([[1.0, 2.0], [2.0, 1.0]]), graph=_complete(2))

    def test_posterior_params(self):
        """The posterior adds d to delta and D to U."""
        from admg.giw import posterior_params
        prior = _params(_complete(2))
        D = np.array([[2.0, 0.5], [0.5, 3.0]])
        post = posterior_params(prior, D, 7)
        assert post.delta == pytest.approx(11.0)
        np.testing.assert_allclose(post.U, np.eye(2) + D)


class TestProposals:
    """Tests for the Bartlett proposal and its weights."""

    def test_complete_graph_weights_are_one(self):
        """On a complete graph the proposal is the target: log g = 0."""
        from admg.giw import sample_proposals
        graph = _complete(4)
        draws = sample_proposals(_params(graph), None, 50, np.random.default_rng(0))
        assert max(abs(d.log_weight) for d in draws) < 1e-9

    def test_draws_are_members(self):
        """Every proposal lies in M+(G) with exact zeros off the support."""
        from admg.bartlett import check_membership
        from admg.giw import sample_proposals
        from admg.synthetic import hub_graph
        graph = hub_graph(5)
        for draw in sample_proposals(_params(graph), None, 20, np.random.default_rng(1)):
            check_membership(draw.sigma, graph)
            assert np.all(draw.sigma[~graph.bidirected_mask()] == 0.0)

    def test_empty_graph_draws_are_diagonal(self):
        """With no bi-directed edges every draw is diagonal."""
        from admg.giw import sample_proposals
        draws = sample_proposals(_params(_empty(3)), None, 10, np.random.default_rng(2))
        for draw in draws:
            assert np.count_nonzero(draw.sigma - np.diag(np.diag(draw.sigma))) == 0

    def test_precision_matches_inverse(self):
        """The factored precision equals the inverse of sigma."""
        from admg.giw import sample_proposal
        from admg.synthetic import hub_graph
        draw = sample_proposal(_params(hub_graph(4)), None, np.random.default_rng(3))
        np.testing.assert_allclose(draw.precision(), np.linalg.inv(draw.sigma), atol=1e-10)

    def test_same_seed_same_draws(self):
        """Draws are a function of the seed."""
        from admg.giw import sample_proposals
        from admg.synthetic import hub_graph
        params = _params(hub_graph(4))
        a = sample_proposals(params, None, 5, np.random.default_rng(9))
        b = sample_proposals(params, None, 5, np.random.default_rng(9))
        for x, y in zip(a, b):
            assert np.array_equal(x.sigma, y.sigma)
            assert x.log_weight == y.log_weight

    def test_weighted_ess(self):
        """Equal weights give ESS m; one dominant weight gives ESS near 1."""
        from admg.giw import weighted_ess
        assert weighted_ess(np.zeros(10)) == pytest.approx(10.0)
        assert weighted_ess(np.array([0.0, -50.0, -50.0])) == pytest.approx(1.0, abs=1e-6)

    def test_resample_exact(self):
        """Resampling returns one of the proposals with the batch ESS."""
        from admg.bartlett import check_membership
        from admg.giw import resample_exact
        from admg.synthetic import hub_graph
        graph = hub_graph(4)
        picked = resample_exact(_params(graph), 30, np.random.default_rng(4))
        check_membership(picked.sigma, graph)
        assert 1.0 <= picked.ess <= 30.0

    def test_resample_rejects_zero_m(self):
        """m must be at least one."""
        from admg.giw import resample_exact
        from core.errors import ValidationError
        with pytest.raises(ValidationError):
            resample_exact(_params(_complete(2)), 0, np.random.default_rng(0))

    def test_make_sampler(self):
        """Both V-step modes are available by name."""
        from admg.giw import make_sampler
        from core.errors import ValidationError
        assert make_sampler("faithful", 10).draws_per_step == 1
        assert make_sampler("sir", 10).draws_per_step == 10
        with pytest.raises(ValidationError):
            make_sampler("exact", 10)

    def test_failed_factorization_is_numerical(self):
        """A Cholesky failure while planning proposals is a numerical error."""
        from unittest.mock import patch
        from scipy.linalg import LinAlgError
        from admg.giw import build_proposal_plan
        from admg.graph import SamplingOrder
        from admg.synthetic import hub_graph
        from core.errors import NumericalError
        params = _params(hub_graph(3))
        order = SamplingOrder.declaration(params.graph)
        with patch("admg.giw.cho_factor", side_effect=LinAlgError("not positive definite")):
            with pytest.raises(NumericalError):
                build_proposal_plan(params, order)


class TestNormalizingConstants:
    """Tests for log I_G and marginal likelihoods."""

    def test_iw_constant_matches_scipy(self):
        """Unnormalized density minus log I_IW is the inverse-Wishart log density."""
        from admg.giw import GiwParams, giw_log_density_unnorm, log_iw_norm_const
        graph = _complete(3)
        U = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, 0.2], [0.1, 0.2, 1.0]])
        params = GiwParams(delta=5.0, U=U, graph=graph)
        sigma = np.array([[1.0, 0.2, 0.0], [0.2, 0.8, 0.1], [0.0, 0.1, 1.2]])
        ours = giw_log_density_unnorm(sigma, params) - log_iw_norm_const(5.0, U)
        expected = invwishart.logpdf(sigma, df=5.0 + 3 - 1, scale=U)
        assert ours == pytest.approx(expected, abs=1e-8)

    def test_complete_graph_is_exact(self):
        """A complete graph needs no Monte Carlo."""
        from admg.giw import estimate_norm_const, log_iw_norm_const
        params = _params(_complete(3))
        estimate = estimate_norm_const(params, 10, np.random.default_rng(0))
        assert estimate.log_value == pytest.approx(log_iw_norm_const(params.delta, params.U))
        assert estimate.std_error == 0.0

    def test_empty_graph_matches_closed_form(self):
        """On an empty graph I_G is a product of inverse-gamma integrals."""
        from admg.giw import estimate_norm_const
        q, delta = 3, 6.0
        params = _params(_empty(q), delta=delta)
        a = 0.5 * (delta + 2 * q - 2)
        exact = q * (gammaln(a) - a * np.log(0.5))
        estimate = estimate_norm_const(params, 20000, np.random.default_rng(5))
        assert estimate.log_value == pytest.approx(exact, abs=5 * estimate.std_error + 1e-3)

    def test_empty_graph_weighted_mean(self):
        """Weighted proposals reproduce E[sigma_ii] = u / (delta + 2q - 4)."""
        from admg.giw import sample_proposals
        q, delta = 3, 6.0
        draws = sample_proposals(_params(_empty(q), delta=delta), None, 20000,
                                 np.random.default_rng(6))
        log_w = np.array([d.log_weight for d in draws])
        w = np.exp(log_w - log_w.max())
        w /= w.sum()
        means = np.einsum("s,sii->i", w, np.stack([d.sigma for d in draws]))
        np.testing.assert_allclose(means, 1.0 / (delta + 2 * q - 4), rtol=0.05)

    def test_marginal_likelihood_complete_graph(self):
        """On a complete graph the marginal likelihood is the IW closed form."""
        from admg.giw import log_iw_norm_const, log_marginal_likelihood
        rng = np.random.default_rng(7)
        y = rng.normal(size=(25, 3))
        D = y.T @ y
        params = _params(_complete(3))
        result = log_marginal_likelihood(params, D, 25, 10, rng)
        expected = (
            -0.5 * 25 * 3 * np.log(2 * np.pi)
            + log_iw_norm_const(params.delta + 25, params.U + D)
            - log_iw_norm_const(params.delta, params.U)
        )
        assert result.log_value == pytest.approx(expected, abs=1e-9)
        assert result.std_error == 0.0

    def test_marginal_likelihood_no_data(self):
        """With no observations the marginal likelihood is 1."""
        from admg.giw import log_marginal_likelihood
        params = _params(_complete(2))
        result = log_marginal_likelihood(params, np.zeros((2, 2)), 0, 10, np.random.default_rng(0))
        assert result.log_value == 0.0

    def test_marginal_likelihood_prefers_true_graph(self):
        """Strongly correlated data favour the edge over independence."""
        from admg.giw import log_marginal_likelihood
        rng = np.random.default_rng(8)
        cov = np.array([[1.0, 0.8], [0.8, 1.0]])
        y = rng.multivariate_normal(np.zeros(2), cov, size=200)
        D = y.T @ y
        with_edge = log_marginal_likelihood(_params(_complete(2)), D, 200, 2000, rng)
        without = log_marginal_likelihood(_params(_empty(2)), D, 200, 2000, rng)
        assert with_edge.log_value > without.log_value + 10

    def test_marginal_likelihood_single_node(self):
        """With one node the G-IW prior is inverse gamma and the marginal is closed form."""
        from admg.giw import GiwParams, log_marginal_likelihood
        rng = np.random.default_rng(10)
        y = rng.normal(scale=1.3, size=40)
        delta, u, d, D = 3.0, 2.0, y.size, float(y @ y)
        params = GiwParams(delta=delta, U=np.array([[u]]), graph=_empty(1))
        a, b = 0.5 * delta, 0.5 * u
        expected = (
            -0.5 * d * np.log(2 * np.pi)
            + gammaln(a + 0.5 * d) - gammaln(a)
            + a * np.log(b) - (a + 0.5 * d) * np.log(b + 0.5 * D)
        )
        result = log_marginal_likelihood(params, np.array([[D]]), d, 10, rng)
        assert result.log_value == pytest.approx(expected, rel=0.01)

    def test_estimate_is_order_invariant(self):
        """Hub-first and hub-last orders estimate the same log I_G."""
        from admg.giw import GiwParams, estimate_norm_const
        from admg.graph import SamplingOrder
        from admg.synthetic import hub_graph
        graph = hub_graph(4)
        U = np.array([
            [2.0, 0.3, 0.2, 0.1],
            [0.3, 1.5, 0.0, 0.0],
            [0.2, 0.0, 1.2, 0.0],
            [0.1, 0.0, 0.0, 1.0],
        ])
        params = GiwParams(delta=5.0, U=U, graph=graph)
        hub_last = SamplingOrder(("Y1", "Y2", "Y3", "H"))
        first = estimate_norm_const(params, 20000, np.random.default_rng(11),
                                    SamplingOrder.declaration(graph))
        last = estimate_norm_const(params, 20000, np.random.default_rng(12), hub_last)
        tolerance = 3 * np.hypot(first.std_error, last.std_error)
        assert abs(first.log_value - last.log_value) < tolerance

    def test_one_edge_graph_matches_quadrature(self):
        """A <-> B with C isolated: I_G splits into a 2 x 2 IW integral and a 1-d integral."""
        from scipy.integrate import quad
        from admg.giw import GiwParams, estimate_norm_const, log_iw_norm_const
        from admg.graph import Admg
        # C sits between A and B so B has a spouse and a non-spouse predecessor
        graph = Admg.from_edges(["A", "C", "B"], bidirected=[("A", "B")])
        U = np.array([[1.5, 0.2, 0.3], [0.2, 1.0, 0.1], [0.3, 0.1, 1.2]])
        delta = 4.0
        exponent = 0.5 * (delta + 2 * graph.q)
        u_cc = U[1, 1]
        # substituting t = 1 / c keeps the integrand finite near zero
        isolated, _ = quad(lambda t: t ** (exponent - 2) * np.exp(-0.5 * u_cc * t), 0.0, np.inf)
        block = U[np.ix_([0, 2], [0, 2])]
        exact = log_iw_norm_const(delta + 2, block) + np.log(isolated)

        estimate = estimate_norm_const(GiwParams(delta=delta, U=U, graph=graph), 20000,
                                       np.random.default_rng(13))
        assert estimate.std_error > 0
        assert estimate.log_value == pytest.approx(exact, abs=3 * estimate.std_error)


class TestWeightCorrection:
    """Tests for importance-weight correction on an incomplete graph."""

    @pytest.fixture
    def draws(self):
        """Proposals for the empty 2-node graph with delta=2, U=diag(2, 2)."""
        from admg.giw import GiwParams, sample_proposals
        params = GiwParams(delta=2.0, U=np.diag([2.0, 2.0]), graph=_empty(2))
        samples = sample_proposals(params, None, 20000, np.random.default_rng(14))
        log_w = np.array([s.log_weight for s in samples])
        w = np.exp(log_w - log_w.max())
        diagonals = np.array([np.diag(s.sigma) for s in samples])
        return w / w.sum(), diagonals

    def test_weighted_mean_is_one(self, draws):
        """E[sigma_ii] = u_ii / delta = 1 under the InvGamma(2, 1) marginals."""
        w, diagonals = draws
        for k in range(2):
            x = diagonals[:, k]
            mean = float(w @ x)
            std_error = float(np.sqrt(np.sum(w ** 2 * (x - mean) ** 2)))
            assert abs(mean - 1.0) < 3 * std_error

    def test_weighted_cdf_matches_marginal(self, draws):
        """The weighted empirical CDF follows InvGamma(2, scale 1)."""
        from scipy.stats import invgamma
        w, diagonals = draws
        for k in range(2):
            for point in (0.5, 1.0, 2.0):
                weighted = float(w @ (diagonals[:, k] <= point))
                assert weighted == pytest.approx(invgamma.cdf(point, a=2.0, scale=1.0), abs=0.02)

    def test_unweighted_draws_differ(self, draws):
        """The first diagonal of an unweighted proposal is InvGamma(1, 1), median 1/ln 2."""
        _, diagonals = draws
        assert np.median(diagonals[:, 0]) == pytest.approx(1.0 / np.log(2.0), rel=0.05)

    @pytest.mark.slow
    def test_resampled_median(self):
        """SIR draws with m=64 have the InvGamma(2, 1) median."""
        from scipy.stats import invgamma
        from admg.giw import GiwParams, resample_exact
        params = GiwParams(delta=2.0, U=np.diag([2.0, 2.0]), graph=_empty(2))
        rng = np.random.default_rng(15)
        picked = np.array([np.diag(resample_exact(params, 64, rng).sigma) for _ in range(2000)])
        target = invgamma.median(a=2.0, scale=1.0)
        np.testing.assert_allclose(np.median(picked, axis=0), target, atol=0.05)


class TestStructureScoring:
    """Tests for choosing a covariance graph by marginal likelihood."""

    @pytest.mark.slow
    def test_true_graph_wins(self):
        """A bi-directed chain beats its sub- and super-graphs in most replicates."""
        from admg.giw import GiwParams, log_marginal_likelihood
        from admg.graph import Admg
        nodes = ["Y1", "Y2", "Y3", "Y4"]
        chain = [("Y1", "Y2"), ("Y2", "Y3"), ("Y3", "Y4")]
        candidates = [
            Admg.from_edges(nodes, bidirected=chain),
            _empty(4),
            _complete(4),
            Admg.from_edges(nodes, bidirected=[chain[0], chain[2]]),
            Admg.from_edges(nodes, bidirected=chain[1:]),
        ]
        cov = np.eye(4) + 0.4 * (np.eye(4, k=1) + np.eye(4, k=-1))
        hits = 0
        for rep in range(50):
            rng = np.random.default_rng(100 + rep)
            y = rng.multivariate_normal(np.zeros(4), cov, size=500)
            D = y.T @ y
            scores = [
                log_marginal_likelihood(GiwParams(delta=4.0, U=np.eye(4), graph=g), D, 500,
                                        200, rng).log_value
                for g in candidates
            ]
            hits += int(np.argmax(scores) == 0)
        assert hits >= 45
