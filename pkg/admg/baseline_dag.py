"""
Ancillary-latent DAG baseline.

Every bi-directed edge a <-> b becomes a latent X_a_b with edges X_a_b -> a
and X_a_b -> b. The DAG is then sampled with a standard Gaussian-DAG Gibbs
sampler: latents one at a time from their Markov blankets, each node's free
coefficients from a Gaussian, each node's error variance from an inverse
gamma. The benchmark runs it against the ADMG sampler on the same splits.

Contains:
- AncillaryDag, to_ancillary_dag, admg_theta, ancillary_reachable
- DagConfig, run_dag_gibbs
- BenchmarkReport, benchmark_compare
"""

import logging
import platform
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import psutil
from scipy.stats import invgamma, ttest_rel

from admg.bartlett import Theta
from admg.data import Dataset, train_test_split
from admg.gibbs import (
    BPrior,
    ChainState,
    GibbsConfig,
    GibbsProblem,
    ModelPriors,
    PosteriorSamples,
    initial_state,
    predictive_loglik,
    run_gibbs,
    sample_B_given_V,
)
from admg.giw import GiwParams
from admg.graph import Admg
from admg.rng import make_stream
from admg.summary import Stopwatch, running_means
from core.constants import (
    DEFAULT_BURN_IN,
    DEFAULT_ITERATIONS,
    DEFAULT_SIR_M,
    DEFAULT_TEST_FRACTION,
    DEFAULT_THIN,
    FIXED_LOADING,
    SIGNIFICANCE_LEVEL,
    STREAM_SPLIT,
    ZERO_TOLERANCE,
)
from core.errors import ValidationError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str]

# =============================================================================
# ANCILLARY REPRESENTATION
# =============================================================================

@dataclass(frozen=True, eq=False)
class AncillaryDag:
    """
    DAG with one ancillary latent per bi-directed edge of ``source``.

    Attributes:
        source: The ADMG this was built from
        dag: Original nodes followed by the ancillary latents, no bi-directed edges
        ancillary: Ancillary latent -> the bi-directed pair it replaces
        fixed: Ancillary edges with a pinned coefficient (into the
            lexicographically smaller child)
    """

    source: Admg
    dag: Admg
    ancillary: Dict[str, Edge]
    fixed: Dict[Edge, float]

    @property
    def ancillary_nodes(self) -> Tuple[str, ...]:
        return tuple(self.ancillary)


def _ancillary_name(a: str, b: str, taken: set) -> str:
    name = f"X_{a}_{b}"
    while name in taken:
        name += "_"
    return name


def to_ancillary_dag(graph: Admg) -> AncillaryDag:
    """Replace every a <-> b by X_a_b -> a, X_a_b -> b."""
    taken = set(graph.nodes)
    nodes = list(graph.nodes)
    directed = set(graph.directed_edges)
    ancillary: Dict[str, Edge] = {}
    fixed: Dict[Edge, float] = {}
    for a, b in graph.sorted_bidirected_edges():
        name = _ancillary_name(a, b, taken)
        taken.add(name)
        nodes.append(name)
        directed.update({(name, a), (name, b)})
        ancillary[name] = (a, b)
        fixed[(name, min(a, b))] = FIXED_LOADING
    dag = Admg.from_edges(
        nodes, directed=sorted(directed), latent=set(graph.latent) | set(ancillary)
    )
    return AncillaryDag(source=graph, dag=dag, ancillary=ancillary, fixed=fixed)


def admg_theta(ancillary_dag: AncillaryDag, theta: Theta) -> Theta:
    """
    The ADMG parameters a DAG draw implies: B restricted to the original
    nodes and V = diag(v) + sum over ancillaries of v_X l_X l_X^T.
    """
    source, dag = ancillary_dag.source, ancillary_dag.dag
    keep = np.array([dag.index(n) for n in source.nodes], dtype=int)
    V = np.diag(np.diag(theta.V)[keep])
    for name, (a, b) in ancillary_dag.ancillary.items():
        x = dag.index(name)
        loading = np.zeros(source.q)
        loading[source.index(a)] = theta.B[dag.index(a), x]
        loading[source.index(b)] = theta.B[dag.index(b), x]
        V += theta.V[x, x] * np.outer(loading, loading)
    return Theta(B=theta.B[np.ix_(keep, keep)], V=V, mean=theta.mean[keep])


def ancillary_reachable(sigma: np.ndarray, tolerance: float = ZERO_TOLERANCE) -> bool:
    """
    Whether a covariance can be written as diag(v) plus one rank-one block
    per bi-directed pair with every variance nonnegative.

    That holds exactly when the comparison matrix (|diagonal|, -|off-diagonal|)
    is positive semidefinite. Bi-directed trees always pass; dense cycles of
    strong correlations can fail while sigma itself is positive definite.
    """
    sigma = np.asarray(sigma, dtype=float)
    comparison = -np.abs(sigma)
    np.fill_diagonal(comparison, np.abs(np.diag(sigma)))
    return bool(np.linalg.eigvalsh(comparison).min() >= -tolerance)


# =============================================================================
# PRIORS
# =============================================================================

@dataclass(frozen=True, eq=False)
class DagPriors:
    """
    Priors on the ancillary DAG.

    Node variances are IG(delta/2, u/2), the diagonal marginal of the
    complete-graph G-IW prior. An ancillary latent uses u = sqrt(u_aa u_bb)
    of the pair it replaces.

    Attributes:
        model: Coefficient prior (with the ancillary pins) on the DAG
        shape / scale: Inverse-gamma parameters per DAG node
    """

    model: ModelPriors
    shape: np.ndarray
    scale: np.ndarray

    @classmethod
    def from_admg(cls, ancillary_dag: AncillaryDag, priors: ModelPriors) -> "DagPriors":
        source, dag = ancillary_dag.source, ancillary_dag.dag
        if priors.graph != source:
            raise ValidationError("prior is defined on a different graph")
        u = np.diag(priors.giw.U)
        scales = list(u)
        for a, b in ancillary_dag.ancillary.values():
            scales.append(float(np.sqrt(u[source.index(a)] * u[source.index(b)])))
        scales = np.array(scales, dtype=float)

        b = priors.b
        dag_b = BPrior(
            means=dict(b.means),
            variances=dict(b.variances),
            fixed={**b.fixed, **ancillary_dag.fixed},
            default_mean=b.default_mean,
            default_variance=b.default_variance,
            intercept_variance=b.intercept_variance,
        )
        delta = priors.giw.delta
        model = ModelPriors(
            giw=GiwParams(delta=delta, U=np.diag(scales), graph=dag),
            b=dag_b,
            intercepts=priors.intercepts,
        )
        return cls(model=model, shape=np.full(dag.q, 0.5 * delta), scale=0.5 * scales)


# =============================================================================
# SAMPLER
# =============================================================================

@dataclass(frozen=True)
class DagConfig:
    iterations: int = DEFAULT_ITERATIONS
    burn_in: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    seed: int = 0
    chain: int = 0

    def validate(self) -> None:
        if self.iterations < 0 or self.burn_in < 0:
            raise ValidationError("iterations and burn-in must be >= 0")
        if self.thin < 1:
            raise ValidationError(f"thinning must be >= 1, got {self.thin}")


def sample_dag_latents(
    state: ChainState, problem: GibbsProblem, children: Sequence[np.ndarray]
) -> np.ndarray:
    """
    Single-site draws of every latent column given its Markov blanket.

    For latent h with children C:
        precision = 1/v_h + sum_c b_ch^2 / v_c
        mean * precision = (c_h + B_h. z) / v_h + sum_c b_ch r_c / v_c
    where r_c is child c's residual with h's own contribution added back.
    """
    theta = state.theta
    z = problem.complete(state.latents)
    v = np.diag(theta.V)
    for h, kids in zip(problem.latent_idx, children):
        own = theta.mean[h] + z @ theta.B[h]
        b = theta.B[kids, h]
        resid = z[:, kids] - theta.mean[kids] - z @ theta.B[kids].T + np.outer(z[:, h], b)
        precision = 1.0 / v[h] + float(np.sum(b**2 / v[kids]))
        mean = (own / v[h] + resid @ (b / v[kids])) / precision
        z[:, h] = mean + state.rng.standard_normal(problem.d) / np.sqrt(precision)
    return z[:, problem.latent_idx]


def sample_dag_variances(state: ChainState, problem: GibbsProblem, priors: DagPriors) -> np.ndarray:
    """v_i | rest ~ IG(a_i + d/2, b_i + RSS_i/2), one independent draw per node."""
    scatter = problem.augmented_scatter(state.latents)
    a = problem.layout.residual_matrix(state.theta)
    rss = np.einsum("ij,jk,ik->i", a, scatter, a)
    return invgamma.rvs(
        priors.shape + 0.5 * problem.d,
        scale=priors.scale + 0.5 * rss,
        random_state=state.rng,
    )


@dataclass
class DagGibbsResult:
    """
    Attributes:
        samples: Draws on the DAG (observed marginals match the ADMG's)
        admg_samples: The same draws mapped back onto the source ADMG
        sweep_seconds: Wall time of every sweep
        factorizations_per_iteration: Coefficient-block Cholesky factorizations per sweep
    """

    samples: PosteriorSamples
    admg_samples: PosteriorSamples
    parameter_names: Tuple[str, ...]
    trace: np.ndarray
    sweep_seconds: np.ndarray
    factorizations_per_iteration: int
    seconds: float = 0.0
    cpu_seconds: float = 0.0
    iterations: int = 0

    @property
    def running_means(self) -> np.ndarray:
        return running_means(self.trace)

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=list(self.parameter_names))

    @property
    def seconds_per_iteration(self) -> float:
        return self.seconds / self.iterations if self.iterations else 0.0


def run_dag_gibbs(
    ancillary_dag: AncillaryDag,
    priors: ModelPriors,
    dataset: Dataset,
    config: DagConfig,
    rng: Optional[np.random.Generator] = None,
) -> DagGibbsResult:
    """Latents -> variances -> coefficients per sweep; priors are given on the source ADMG."""
    config.validate()
    dag = ancillary_dag.dag
    dag_priors = DagPriors.from_admg(ancillary_dag, priors)
    problem = GibbsProblem.build(dag, dag_priors.model, dataset)
    rng = rng if rng is not None else make_stream(config.seed, config.chain)
    state = initial_state(problem, rng)
    children = [
        np.array([dag.index(c) for c in dag.children(dag.nodes[h])], dtype=int)
        for h in problem.latent_idx
    ]
    factorizations = sum(1 for block in problem.layout.blocks if block.size)

    names = problem.layout.names + tuple(f"v[{n}]" for n in dag.nodes)
    kept: List[Theta] = []
    rows: List[np.ndarray] = []
    sweep_seconds = np.zeros(config.iterations)
    with Stopwatch() as watch:
        for it in range(config.iterations):
            with Stopwatch() as sweep:
                state.latents = sample_dag_latents(state, problem, children)
                V = np.diag(sample_dag_variances(state, problem, dag_priors))
                state.theta = Theta(B=state.theta.B, V=V, mean=state.theta.mean)
                B, mean = sample_B_given_V(state, problem)
                state.theta = Theta(B=B, V=V, mean=mean)
                state.iteration += 1
            sweep_seconds[it] = sweep.seconds
            if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
                kept.append(state.theta)
                rows.append(np.concatenate([problem.layout.pack(state.theta), np.diag(V)]))

    logger.info(
        "DAG chain %d: %d sweeps, %d kept, %.2fs", config.chain, config.iterations, len(kept),
        watch.seconds,
    )
    return DagGibbsResult(
        samples=PosteriorSamples(graph=dag, thetas=tuple(kept)),
        admg_samples=PosteriorSamples(
            graph=ancillary_dag.source,
            thetas=tuple(admg_theta(ancillary_dag, t) for t in kept),
        ),
        parameter_names=names,
        trace=np.vstack(rows) if rows else np.zeros((0, len(names))),
        sweep_seconds=sweep_seconds,
        factorizations_per_iteration=factorizations,
        seconds=watch.seconds,
        cpu_seconds=watch.cpu_seconds,
        iterations=config.iterations,
    )


# =============================================================================
# BENCHMARK
# =============================================================================

ADMG_ENGINE = "admg-mcmc"
DAG_ENGINE = "dag-mcmc"


@dataclass(frozen=True)
class TrialResult:
    seed: int
    engine: str
    seconds: float
    cpu_seconds: float
    seconds_per_iteration: float
    factorizations_per_iteration: int
    predictive_loglik: float


@dataclass(frozen=True)
class BenchmarkReport:
    """
    Paired timing and predictive comparison of the two samplers.

    Attributes:
        iterations: Sweeps per run
        trials: One record per (seed, engine)
        t_statistic / p_value: Paired t-test of ADMG vs DAG predictive
            log-likelihoods; None with fewer than two seeds or a degenerate difference
        level: Significance level the verdict uses
    """

    iterations: int
    trials: Tuple[TrialResult, ...]
    t_statistic: Optional[float]
    p_value: Optional[float]
    level: float = SIGNIFICANCE_LEVEL
    host: Dict[str, str] = field(default_factory=dict)

    def _values(self, engine: str, attr: str) -> np.ndarray:
        return np.array([getattr(t, attr) for t in self.trials if t.engine == engine], dtype=float)

    def mean_std(self, engine: str, attr: str) -> Tuple[float, float]:
        values = self._values(engine, attr)
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        return float(values.mean()), std

    @property
    def wall_time_ratio(self) -> float:
        """Mean ADMG wall time over mean DAG wall time."""
        admg, _ = self.mean_std(ADMG_ENGINE, "seconds")
        dag, _ = self.mean_std(DAG_ENGINE, "seconds")
        return admg / dag if dag > 0 else float("inf")

    @property
    def significant(self) -> bool:
        return self.p_value is not None and self.p_value < self.level

    def to_dict(self) -> Dict:
        return {
            "iterations": self.iterations,
            "trials": [asdict(t) for t in self.trials],
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
            "level": self.level,
            "host": dict(self.host),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BenchmarkReport":
        return cls(
            iterations=int(data["iterations"]),
            trials=tuple(TrialResult(**t) for t in data["trials"]),
            t_statistic=data["t_statistic"],
            p_value=data["p_value"],
            level=float(data["level"]),
            host=dict(data.get("host", {})),
        )

    def render_table(self) -> str:
        lines = [
            f"{'engine':<10} {'wall s (sd)':>20} {'s/iter':>12} {'factor/iter':>12} "
            f"{'pred LL (sd)':>24}",
        ]
        for engine in (ADMG_ENGINE, DAG_ENGINE):
            wall, wall_sd = self.mean_std(engine, "seconds")
            per_iter, _ = self.mean_std(engine, "seconds_per_iteration")
            factor, _ = self.mean_std(engine, "factorizations_per_iteration")
            loglik, loglik_sd = self.mean_std(engine, "predictive_loglik")
            lines.append(
                f"{engine:<10} {wall:>11.3f} ({wall_sd:>6.3f}) {per_iter:>12.3e} "
                f"{factor:>12.0f} {loglik:>13.4f} ({loglik_sd:>8.4f})"
            )
        seeds = len({t.seed for t in self.trials})
        lines.append(f"iterations {self.iterations}, seeds {seeds}")
        lines.append(f"wall-time ratio admg/dag: {self.wall_time_ratio:.3f}")
        if self.p_value is None:
            lines.append("paired t-test: not available")
        else:
            verdict = "significant" if self.significant else "not significant"
            lines.append(
                f"paired t-test: t = {self.t_statistic:.4f}, p = {self.p_value:.4f} "
                f"({verdict} at {self.level})"
            )
        return "\n".join(lines) + "\n"


def _finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None


def benchmark_compare(
    graph: Admg,
    dataset: Dataset,
    iterations: int,
    seeds: Sequence[int],
    priors: Optional[ModelPriors] = None,
    burn_in: Optional[int] = None,
    thin: int = DEFAULT_THIN,
    mode: str = "sir",
    m: int = DEFAULT_SIR_M,
    order: str = "greedy",
    test_fraction: float = DEFAULT_TEST_FRACTION,
) -> BenchmarkReport:
    """
    Run both samplers for ``iterations`` sweeps on one train/test split per seed.

    Training data are centred with their own means and the test rows with the
    same means. ``burn_in`` defaults to a fifth of the run.
    """
    if not seeds:
        raise ValidationError("benchmark needs at least one seed")
    if priors is None:
        priors = ModelPriors.default(graph)
    burn_in = iterations // 5 if burn_in is None else burn_in
    dataset = dataset.bind(graph)
    ancillary_dag = to_ancillary_dag(graph)

    trials: List[TrialResult] = []
    for seed in seeds:
        train, test = train_test_split(dataset, test_fraction, make_stream(seed, STREAM_SPLIT))
        offset = train.column_means()
        train = train.centered(offset)

        admg = run_gibbs(
            graph, priors, train,
            GibbsConfig(
                iterations=iterations, burn_in=burn_in, thin=thin,
                mode=mode, m=m, order=order, seed=seed,
            ),
        )
        dag = run_dag_gibbs(
            ancillary_dag, priors, train,
            DagConfig(iterations=iterations, burn_in=burn_in, thin=thin, seed=seed),
        )
        for engine, result, samples in (
            (ADMG_ENGINE, admg, admg.samples),
            (DAG_ENGINE, dag, dag.admg_samples),
        ):
            trials.append(TrialResult(
                seed=int(seed),
                engine=engine,
                seconds=result.seconds,
                cpu_seconds=result.cpu_seconds,
                seconds_per_iteration=result.seconds_per_iteration,
                factorizations_per_iteration=result.factorizations_per_iteration,
                predictive_loglik=predictive_loglik(replace(samples, offset=offset), test),
            ))
        logger.info("Benchmark seed %d done", seed)

    t_stat: Optional[float] = None
    p_value: Optional[float] = None
    if len(seeds) > 1:
        admg_ll = [t.predictive_loglik for t in trials if t.engine == ADMG_ENGINE]
        dag_ll = [t.predictive_loglik for t in trials if t.engine == DAG_ENGINE]
        test_result = ttest_rel(admg_ll, dag_ll)
        t_stat = _finite_or_none(test_result.statistic)
        p_value = _finite_or_none(test_result.pvalue)
    return BenchmarkReport(
        iterations=iterations,
        trials=tuple(trials),
        t_statistic=t_stat,
        p_value=p_value,
        host={
            "platform": platform.platform(),
            "cpu_count": str(psutil.cpu_count(logical=True)),
        },
    )


__all__ = [
    "AncillaryDag",
    "BenchmarkReport",
    "DagConfig",
    "DagGibbsResult",
    "DagPriors",
    "TrialResult",
    "admg_theta",
    "ancillary_reachable",
    "benchmark_compare",
    "run_dag_gibbs",
    "sample_dag_latents",
    "sample_dag_variances",
    "to_ancillary_dag",
]
