"""Unit tests for synthetic models and simulation."""
import numpy as np
import pytest


def test_import_synthetic():
    """Test that the synthetic module can be imported."""
    try:
        from admg.synthetic import random_admg, random_theta, simulate
        assert random_admg is not None
        assert random_theta is not None
        assert simulate is not None
    except ImportError as e:
        pytest.fail(f"Failed to import admg.synthetic: {e}")


class TestFixedModels:
    """Tests for the named models."""

    def test_industrialization_model(self):
        """Eleven indicators, three latents declared last, six error pairs."""
        from admg.synthetic import industrialization_model
        graph, theta = industrialization_model()
        assert graph.q == 14
        assert graph.latent_nodes == ("X1", "X2", "X3")
        assert len(graph.observed) == 11
        assert len(graph.bidirected_edges) == 6
        assert theta.B[graph.index("X3"), graph.index("X2")] == pytest.approx(0.8)
        theta.check(graph)

    def test_recovery_model(self):
        """Five observed nodes, no latents."""
        from admg.synthetic import recovery_model
        graph, theta = recovery_model()
        assert graph.nodes == ("Y1", "Y2", "Y3", "Y4", "Y5")
        assert not graph.latent
        assert theta.V[graph.index("Y4"), graph.index("Y5")] == pytest.approx(-0.3)

    def test_hub_graph(self):
        """The hub is declared first and joined to every leaf."""
        from admg.synthetic import hub_graph
        from core.errors import ValidationError
        graph = hub_graph(4)
        assert graph.nodes[0] == "H"
        assert graph.spouses("H") == ("Y1", "Y2", "Y3")
        with pytest.raises(ValidationError):
            hub_graph(1)


class TestRandomModels:
    """Tests for seeded random graphs and parameters."""

    def test_random_admg_is_acyclic_without_bows(self):
        """Directed edges point forward; no pair carries both edge types."""
        from admg.rng import make_stream
        from admg.synthetic import random_admg
        graph = random_admg(8, make_stream(0), edge_probability=0.6)
        for parent, child in graph.directed_edges:
            assert graph.index(parent) < graph.index(child)
        assert not graph.directed_edges & graph.bidirected_edges

    def test_random_admg_is_seeded(self):
        """The same stream gives the same graph."""
        from admg.rng import make_stream
        from admg.synthetic import random_admg
        assert random_admg(6, make_stream(4)) == random_admg(6, make_stream(4))

    def test_random_theta_is_member(self):
        """V is in M+(G) and B respects the directed support."""
        from admg.rng import make_stream
        from admg.synthetic import random_admg, random_theta
        graph = random_admg(7, make_stream(1), edge_probability=0.7, allow_bows=True)
        theta = random_theta(graph, make_stream(2))
        theta.check(graph)
        magnitudes = np.abs(theta.B[graph.directed_mask()])
        assert np.all((magnitudes >= 0.3) & (magnitudes <= 0.9))

    def test_random_theta_pins_latent_scale(self):
        """A latent's first loading is exactly one."""
        from admg.graph import Admg
        from admg.rng import make_stream
        from admg.synthetic import random_theta
        graph = Admg.from_edges(["Y1", "Y2", "X"], directed=[("X", "Y1"), ("X", "Y2")],
                                latent=["X"])
        theta = random_theta(graph, make_stream(3))
        assert theta.B[graph.index("Y1"), graph.index("X")] == 1.0


class TestSimulate:
    """Tests for data simulation."""

    def test_shape_and_columns(self):
        """Latent columns are dropped."""
        from admg.rng import make_stream
        from admg.synthetic import industrialization_model, simulate
        graph, theta = industrialization_model()
        data = simulate(graph, theta, 75, make_stream(0))
        assert data.values.shape == (75, 11)
        assert data.columns == graph.observed

    def test_covariance_matches_model(self):
        """With many rows the sample covariance approaches Sigma(Theta)."""
        from admg.bartlett import implied_covariance
        from admg.rng import make_stream
        from admg.synthetic import bow_model, simulate
        graph, theta = bow_model()
        data = simulate(graph, theta, 50000, make_stream(1))
        np.testing.assert_allclose(np.cov(data.values, rowvar=False),
                                   implied_covariance(theta), atol=0.05)

    def test_rejects_negative_rows(self):
        """Row counts must be nonnegative."""
        from admg.rng import make_stream
        from admg.synthetic import recovery_model, simulate
        from core.errors import ValidationError
        graph, theta = recovery_model()
        with pytest.raises(ValidationError):
            simulate(graph, theta, -1, make_stream(0))
