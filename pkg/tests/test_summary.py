"""Unit tests for trace summaries and timing."""
import numpy as np
import pytest


def test_import_summary():
    """Test that the summary module can be imported."""
    try:
        from admg.summary import effective_sample_size, summarize_trace, Stopwatch
        assert effective_sample_size is not None
        assert summarize_trace is not None
        assert Stopwatch is not None
    except ImportError as e:
        pytest.fail(f"Failed to import admg.summary: {e}")


def _ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    values = np.empty(n)
    values[0] = noise[0]
    for t in range(1, n):
        values[t] = phi * values[t - 1] + noise[t]
    return values


class TestAutocorrelation:
    """Tests for autocorrelation time and ESS."""

    def test_independent_draws(self):
        """Independent draws have an ESS close to their count."""
        from admg.summary import effective_sample_size
        values = np.random.default_rng(0).standard_normal(4000)
        assert 0.6 * 4000 < effective_sample_size(values) < 1.5 * 4000

    def test_ar1_time(self):
        """An AR(1) chain with phi=0.9 has tau near (1+phi)/(1-phi) = 19."""
        from admg.summary import integrated_autocorrelation_time
        tau = integrated_autocorrelation_time(_ar1(0.9, 20000, 1))
        assert 12.0 < tau < 30.0

    def test_constant_chain(self):
        """A stuck chain has no effective samples."""
        from admg.summary import effective_sample_size
        assert effective_sample_size(np.ones(50)) == 0.0

    def test_short_chain(self):
        """Fewer than four draws are treated as independent."""
        from admg.summary import integrated_autocorrelation_time
        assert integrated_autocorrelation_time(np.array([1.0, 2.0, 3.0])) == 1.0


class TestSummaries:
    """Tests for per-parameter tables."""

    def test_running_means(self):
        """Row k is the mean of the first k+1 rows."""
        from admg.summary import running_means
        trace = np.array([[1.0, 0.0], [3.0, 2.0], [5.0, 4.0]])
        np.testing.assert_allclose(running_means(trace), [[1, 0], [2, 1], [3, 2]])

    def test_summarize_trace(self):
        """One row per parameter with the sample mean and std."""
        from admg.summary import summarize_trace
        trace = np.column_stack([np.arange(10.0), np.full(10, 2.0)])
        table = summarize_trace(["a", "b"], trace)
        assert list(table.columns) == ["parameter", "mean", "std", "lower", "upper", "ess"]
        assert list(table["parameter"]) == ["a", "b"]
        assert table["mean"].tolist() == pytest.approx([4.5, 2.0])
        assert table.loc[0, "std"] == pytest.approx(np.std(np.arange(10.0), ddof=1))
        assert table.loc[0, "lower"] < table.loc[0, "upper"]

    def test_empty_trace(self):
        """An empty trace gives NaN summaries and zero ESS."""
        from admg.summary import summarize_trace
        table = summarize_trace(["a"], np.zeros((0, 1)))
        assert np.isnan(table.loc[0, "mean"])
        assert table.loc[0, "ess"] == 0.0


class TestStopwatch:
    """Tests for run timing."""

    def test_records_nonnegative_times(self):
        """Wall and CPU seconds are set on exit."""
        from admg.summary import Stopwatch
        with Stopwatch() as watch:
            sum(range(10000))
        assert watch.seconds >= 0.0
        assert watch.cpu_seconds >= 0.0
