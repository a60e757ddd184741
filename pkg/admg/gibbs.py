"""
Gibbs sampler for Gaussian ADMG models with latent variables.

One sweep imputes the latents given Theta, draws V from its G-IW full
conditional, then draws the free coefficients of B (and intercepts) from
their Gaussian full conditional, one joint draw per district.

Coefficients enter the B-step through an augmented (q+1)-column layout:
column q is a constant pseudo-node, so intercept c_i is the coefficient
of the edge "1 -> i".
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from admg.bartlett import Theta, implied_covariance
from admg.data import Dataset
from admg.giw import CovarianceSampler, GiwParams, make_sampler
from admg.graph import Admg, SamplingOrder, choose_order, districts, plan_order
from admg.rng import make_stream
from admg.summary import Stopwatch, running_means
from core.constants import (
    DEFAULT_B_MEAN,
    DEFAULT_B_VARIANCE,
    DEFAULT_BURN_IN,
    DEFAULT_DELTA,
    DEFAULT_INTERCEPT_VARIANCE,
    DEFAULT_ITERATIONS,
    DEFAULT_SIR_M,
    DEFAULT_THIN,
    FIXED_LOADING,
    JITTER_MAX_TRIES,
    JITTER_START,
    ORDER_STRATEGIES,
    VSTEP_MODES,
)
from core.errors import GraphError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str]


# =============================================================================
# PRIORS
# =============================================================================

@dataclass(frozen=True, eq=False)
class BPrior:
    """
    Independent Gaussian priors on directed-edge coefficients, keyed by (parent, child).

    Attributes:
        means / variances: Per-edge overrides of the defaults
        fixed: Edges whose coefficient is pinned to a value and never sampled
        default_mean / default_variance: Used for edges without an override
        intercept_variance: Prior variance of intercepts (mean 0)
    """

    means: Mapping[Edge, float] = field(default_factory=dict)
    variances: Mapping[Edge, float] = field(default_factory=dict)
    fixed: Mapping[Edge, float] = field(default_factory=dict)
    default_mean: float = DEFAULT_B_MEAN
    default_variance: float = DEFAULT_B_VARIANCE
    intercept_variance: float = DEFAULT_INTERCEPT_VARIANCE

    def __post_init__(self):
        bad = [e for e, v in self.variances.items() if not v > 0]
        if bad or not self.default_variance > 0 or not self.intercept_variance > 0:
            raise ValidationError(f"prior variances must be positive (edges {bad})")

    def mean(self, edge: Edge) -> float:
        return float(self.means.get(edge, self.default_mean))

    def variance(self, edge: Edge) -> float:
        return float(self.variances.get(edge, self.default_variance))


def latent_scale_edges(graph: Admg) -> Dict[Edge, float]:
    """Pin each latent's first outgoing edge (declaration order) to FIXED_LOADING."""
    fixed = {}
    for node in graph.latent_nodes:
        children = graph.children(node)
        if children:
            fixed[(node, children[0])] = FIXED_LOADING
    return fixed


@dataclass(frozen=True, eq=False)
class ModelPriors:
    """G-IW prior on V, Gaussian prior on B, and whether intercepts are modelled."""

    giw: GiwParams
    b: BPrior = field(default_factory=BPrior)
    intercepts: bool = False

    @property
    def graph(self) -> Admg:
        return self.giw.graph

    @classmethod
    def default(
        cls,
        graph: Admg,
        delta: float = DEFAULT_DELTA,
        u_scale: float = 1.0,
        b_mean: float = DEFAULT_B_MEAN,
        b_variance: float = DEFAULT_B_VARIANCE,
        intercepts: bool = False,
        fix_latent_scale: bool = True,
    ) -> "ModelPriors":
        fixed = latent_scale_edges(graph) if fix_latent_scale else {}
        return cls(
            giw=GiwParams(delta=delta, U=u_scale * np.eye(graph.q), graph=graph),
            b=BPrior(fixed=fixed, default_mean=b_mean, default_variance=b_variance),
            intercepts=intercepts,
        )


# =============================================================================
# COEFFICIENT LAYOUT
# =============================================================================

@dataclass(frozen=True, eq=False)
class CoefficientLayout:
    """
    The free coefficients stacked into one vector beta, grouped by the
    district of their child node.

    Attributes:
        children: Graph index of each coefficient's child
        parents: Graph index of its parent, q for the constant pseudo-node
        names: Trace names, b[child<-parent] and c[child]
        prior_mean / prior_precision: Independent Gaussian prior
        fixed_B: Pinned coefficients (zero elsewhere)
        blocks: Coefficient indices per district, contiguous
    """

    graph: Admg
    children: np.ndarray
    parents: np.ndarray
    names: Tuple[str, ...]
    prior_mean: np.ndarray
    prior_precision: np.ndarray
    fixed_B: np.ndarray
    blocks: Tuple[np.ndarray, ...]

    @classmethod
    def build(cls, graph: Admg, prior: BPrior, intercepts: bool) -> "CoefficientLayout":
        q = graph.q
        for parent, child in prior.fixed:
            if (parent, child) not in graph.directed_edges:
                raise GraphError(f"fixed coefficient on missing edge {parent} -> {child}")
        district_of = {n: k for k, block in enumerate(districts(graph)) for n in block}
        fixed_B = np.zeros((q, q))
        entries = []
        for child in graph.nodes:
            ci = graph.index(child)
            for parent in graph.parents(child):
                pi = graph.index(parent)
                edge = (parent, child)
                if edge in prior.fixed:
                    fixed_B[ci, pi] = prior.fixed[edge]
                    continue
                entries.append((district_of[child], ci, pi, f"b[{child}<-{parent}]",
                                prior.mean(edge), prior.variance(edge)))
            if intercepts and child not in graph.latent:
                entries.append((district_of[child], ci, q, f"c[{child}]",
                                0.0, prior.intercept_variance))
        entries.sort(key=lambda e: (e[0], e[1], e[2]))

        groups: Dict[int, List[int]] = {}
        for k, entry in enumerate(entries):
            groups.setdefault(entry[0], []).append(k)
        return cls(
            graph=graph,
            children=np.array([e[1] for e in entries], dtype=int),
            parents=np.array([e[2] for e in entries], dtype=int),
            names=tuple(e[3] for e in entries),
            prior_mean=np.array([e[4] for e in entries], dtype=float),
            prior_precision=np.array([1.0 / e[5] for e in entries], dtype=float),
            fixed_B=fixed_B,
            blocks=tuple(np.array(ks, dtype=int) for _, ks in sorted(groups.items())),
        )

    @property
    def size(self) -> int:
        return len(self.names)

    def unpack(self, beta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(B, intercepts) from a coefficient vector."""
        q = self.graph.q
        B = self.fixed_B.copy()
        mean = np.zeros(q)
        slope = self.parents < q
        B[self.children[slope], self.parents[slope]] = beta[slope]
        mean[self.children[~slope]] = beta[~slope]
        return B, mean

    def pack(self, theta: Theta) -> np.ndarray:
        q = self.graph.q
        slope = self.parents < q
        beta = np.empty(self.size)
        beta[slope] = theta.B[self.children[slope], self.parents[slope]]
        beta[~slope] = theta.mean[self.children[~slope]]
        return beta

    def base_matrix(self) -> np.ndarray:
        """[I - B_fixed, 0]: the residual map with every free coefficient at zero."""
        q = self.graph.q
        return np.hstack([np.eye(q) - self.fixed_B, np.zeros((q, 1))])

    def residual_matrix(self, theta: Theta) -> np.ndarray:
        """[I - B, -mean], so residuals are A z with z = (y, 1)."""
        return np.hstack([np.eye(self.graph.q) - theta.B, -theta.mean[:, None]])


def coefficient_system(
    layout: CoefficientLayout, precision: np.ndarray, scatter: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Natural parameters (Q, h) of the Gaussian conditional of beta.

    With residuals e_t = A0 z_t - X_t beta ~ N(0, V) and P = V^-1:
        Q[k, l] = P[i_k, i_l] D[j_k, j_l] + prior precision
        h[k]    = (P A0 D)[i_k, j_k] + prior precision * prior mean
    where D = sum_t z_t z_t^T is the augmented scatter. Q has zero blocks
    between districts whenever P is block-diagonal across them.
    """
    i, j = layout.children, layout.parents
    Q = precision[np.ix_(i, i)] * scatter[np.ix_(j, j)]
    Q[np.diag_indices_from(Q)] += layout.prior_precision
    h = (precision @ layout.base_matrix() @ scatter)[i, j]
    h = h + layout.prior_precision * layout.prior_mean
    return Q, h


# =============================================================================
# SAMPLER STATE
# =============================================================================

@dataclass(frozen=True)
class GibbsConfig:
    iterations: int = DEFAULT_ITERATIONS
    burn_in: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    mode: str = "sir"
    m: int = DEFAULT_SIR_M
    order: str = "greedy"
    given_order: Optional[Tuple[str, ...]] = None
    seed: int = 0
    chain: int = 0

    def validate(self) -> None:
        if self.iterations < 0 or self.burn_in < 0:
            raise ValidationError("iterations and burn-in must be >= 0")
        if self.thin < 1:
            raise ValidationError(f"thinning must be >= 1, got {self.thin}")
        if self.m < 1:
            raise ValidationError(f"m must be >= 1, got {self.m}")
        if self.mode not in VSTEP_MODES:
            raise ValidationError(f"mode must be one of {VSTEP_MODES}, got '{self.mode}'")
        if self.order not in ORDER_STRATEGIES:
            raise ValidationError(f"order must be one of {ORDER_STRATEGIES}, got '{self.order}'")


@dataclass(frozen=True, eq=False)
class GibbsProblem:
    """Immutable inputs shared by every sweep (and by every chain)."""

    graph: Admg
    priors: ModelPriors
    layout: CoefficientLayout
    data: Dataset
    observed_idx: np.ndarray
    latent_idx: np.ndarray
    district_idx: Tuple[np.ndarray, ...]
    order: SamplingOrder

    @classmethod
    def build(
        cls,
        graph: Admg,
        priors: ModelPriors,
        dataset: Dataset,
        order: Optional[SamplingOrder] = None,
    ) -> "GibbsProblem":
        if priors.graph != graph:
            raise ValidationError("prior is defined on a different graph")
        return cls(
            graph=graph,
            priors=priors,
            layout=CoefficientLayout.build(graph, priors.b, priors.intercepts),
            data=dataset.bind(graph),
            observed_idx=np.array([graph.index(n) for n in graph.observed], dtype=int),
            latent_idx=np.array([graph.index(n) for n in graph.latent_nodes], dtype=int),
            district_idx=tuple(
                np.array([graph.index(n) for n in block], dtype=int) for block in districts(graph)
            ),
            order=order or SamplingOrder.declaration(graph),
        )

    @property
    def d(self) -> int:
        return self.data.d

    def complete(self, latents: np.ndarray) -> np.ndarray:
        """d x q matrix with observed and imputed columns in graph order."""
        z = np.empty((self.d, self.graph.q))
        z[:, self.observed_idx] = self.data.values
        z[:, self.latent_idx] = latents
        return z

    def augmented_scatter(self, latents: np.ndarray) -> np.ndarray:
        z = np.hstack([self.complete(latents), np.ones((self.d, 1))])
        return z.T @ z

    def block_precision(self, V: np.ndarray) -> np.ndarray:
        """V^-1 assembled district by district, exact zeros between districts."""
        precision = np.zeros_like(V)
        for block in self.district_idx:
            factor = cho_factor(V[np.ix_(block, block)], lower=True)
            precision[np.ix_(block, block)] = cho_solve(factor, np.eye(block.size))
        return 0.5 * (precision + precision.T)


@dataclass
class ChainState:
    """Mutable state of one chain."""

    theta: Theta
    latents: np.ndarray
    iteration: int
    rng: np.random.Generator


def initial_state(problem: GibbsProblem, rng: np.random.Generator) -> ChainState:
    """
    B at its prior mean; V at the prior mode U/(delta+2q) with non-edges
    zeroed and diagonal loading until Cholesky succeeds; latents at zero.
    """
    giw = problem.priors.giw
    q = problem.graph.q
    B, mean = problem.layout.unpack(problem.layout.prior_mean)
    V = giw.U / (giw.delta + 2 * q) * problem.graph.bidirected_mask()
    jitter = JITTER_START * float(np.mean(np.diag(V)))
    for _ in range(JITTER_MAX_TRIES):
        try:
            cholesky(V, lower=True)
            break
        except LinAlgError:
            V = V + jitter * np.eye(q)
            jitter *= 10.0
    else:
        raise NumericalError("could not load the initial V onto the positive-definite cone")
    return ChainState(
        theta=Theta(B=B, V=V, mean=mean),
        latents=np.zeros((problem.d, problem.latent_idx.size)),
        iteration=0,
        rng=rng,
    )


# =============================================================================
# FULL CONDITIONALS
# =============================================================================

def sample_latents(state: ChainState, problem: GibbsProblem) -> np.ndarray:
    """Draw X | Y under N(E[Y], Sigma(Theta)) split into latent and observed blocks."""
    h, o = problem.latent_idx, problem.observed_idx
    if not h.size:
        return state.latents
    sigma = implied_covariance(state.theta)
    mu = state.theta.implied_mean()
    try:
        factor = cho_factor(sigma[np.ix_(o, o)], lower=True)
    except LinAlgError:
        raise NumericalError("observed block of Sigma(Theta) is singular") from None
    gain = cho_solve(factor, sigma[np.ix_(o, h)]).T
    cov = sigma[np.ix_(h, h)] - gain @ sigma[np.ix_(o, h)]
    try:
        chol = cholesky(0.5 * (cov + cov.T), lower=True)
    except LinAlgError:
        raise NumericalError("latent conditional covariance is not positive definite") from None
    means = mu[h] + (problem.data.values - mu[o]) @ gain.T
    noise = state.rng.standard_normal((problem.d, h.size))
    return means + noise @ chol.T


def v_conditional(state: ChainState, problem: GibbsProblem) -> GiwParams:
    """G-IW(delta + d, U + A D A^T) with A = [I - B, -mean]."""
    scatter = problem.augmented_scatter(state.latents)
    a = problem.layout.residual_matrix(state.theta)
    residual = a @ scatter @ a.T
    giw = problem.priors.giw
    return GiwParams(
        delta=giw.delta + problem.d,
        U=giw.U + 0.5 * (residual + residual.T),
        graph=problem.graph,
    )


def sample_V_given_B(
    state: ChainState, problem: GibbsProblem, sampler: CovarianceSampler
) -> np.ndarray:
    params = v_conditional(state, problem)
    return sampler.draw(params, problem.order, state.rng).sigma


def sample_B_given_V(state: ChainState, problem: GibbsProblem) -> Tuple[np.ndarray, np.ndarray]:
    """
    Joint Gaussian draw of the free coefficients, one block per district.

    Returns:
        (B, intercepts)
    """
    layout = problem.layout
    if not layout.size:
        return layout.unpack(np.zeros(0))
    precision = problem.block_precision(state.theta.V)
    Q, h = coefficient_system(layout, precision, problem.augmented_scatter(state.latents))
    beta = np.empty(layout.size)
    for block in layout.blocks:
        try:
            chol = cholesky(Q[np.ix_(block, block)], lower=True)
        except LinAlgError:
            raise NumericalError(
                "coefficient conditional precision is not positive definite"
            ) from None
        mean = cho_solve((chol, True), h[block])
        z = state.rng.standard_normal(block.size)
        beta[block] = mean + solve_triangular(chol, z, trans="T", lower=True)
    return layout.unpack(beta)


# =============================================================================
# DRIVER
# =============================================================================

def v_parameter_names(graph: Admg) -> Tuple[str, ...]:
    names = [f"v[{n}]" for n in graph.nodes]
    names += [f"v[{a}<->{b}]" for a, b in graph.sorted_bidirected_edges()]
    return tuple(names)


def flatten_theta(theta: Theta, layout: CoefficientLayout) -> np.ndarray:
    """Free parameters in trace column order: coefficients, V diagonal, V edges."""
    graph = layout.graph
    pairs = graph.sorted_bidirected_edges()
    off = [theta.V[graph.index(a), graph.index(b)] for a, b in pairs]
    return np.concatenate([layout.pack(theta), np.diag(theta.V), np.array(off, dtype=float)])


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """
    Retained Theta draws.

    Attributes:
        graph: Graph the draws live on
        thetas: The draws
        offset: Column means subtracted from the training data, re-applied to test data
    """

    graph: Admg
    thetas: Tuple[Theta, ...]
    offset: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.thetas)


@dataclass
class GibbsResult:
    samples: PosteriorSamples
    parameter_names: Tuple[str, ...]
    trace: np.ndarray
    order: SamplingOrder
    v_step_inversions: int
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


def run_gibbs(
    graph: Admg,
    priors: ModelPriors,
    dataset: Dataset,
    config: GibbsConfig,
    rng: Optional[np.random.Generator] = None,
) -> GibbsResult:
    """
    Run one chain: latents -> V -> B per sweep, keeping every ``thin``-th
    sweep after ``burn_in``.
    """
    config.validate()
    order = choose_order(graph, config.order, config.given_order)
    problem = GibbsProblem.build(graph, priors, dataset, order)
    rng = rng if rng is not None else make_stream(config.seed, config.chain)
    sampler = make_sampler(config.mode, config.m)
    state = initial_state(problem, rng)

    v_inversions = len(plan_order(graph, order).inversion_positions) * sampler.draws_per_step
    factorizations = (
        v_inversions
        + len(problem.district_idx)
        + sum(1 for b in problem.layout.blocks if b.size)
        + (1 if problem.latent_idx.size else 0)
    )

    names = problem.layout.names + v_parameter_names(graph)
    kept: List[Theta] = []
    rows: List[np.ndarray] = []
    with Stopwatch() as watch:
        for it in range(config.iterations):
            state.latents = sample_latents(state, problem)
            V = sample_V_given_B(state, problem, sampler)
            state.theta = Theta(B=state.theta.B, V=V, mean=state.theta.mean)
            B, mean = sample_B_given_V(state, problem)
            state.theta = Theta(B=B, V=V, mean=mean)
            state.iteration += 1
            if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
                kept.append(state.theta)
                rows.append(flatten_theta(state.theta, problem.layout))

    logger.info(
        "Gibbs chain %d: %d sweeps, %d kept, %.2fs", config.chain, config.iterations, len(kept),
        watch.seconds,
    )
    trace = np.vstack(rows) if rows else np.zeros((0, len(names)))
    return GibbsResult(
        samples=PosteriorSamples(graph=graph, thetas=tuple(kept)),
        parameter_names=names,
        trace=trace,
        order=order,
        v_step_inversions=v_inversions,
        factorizations_per_iteration=factorizations,
        seconds=watch.seconds,
        cpu_seconds=watch.cpu_seconds,
        iterations=config.iterations,
    )


def _run_chain(args: Tuple[Admg, ModelPriors, Dataset, GibbsConfig]) -> GibbsResult:
    return run_gibbs(*args)


def run_chains(
    graph: Admg,
    priors: ModelPriors,
    dataset: Dataset,
    config: GibbsConfig,
    n_chains: int,
    workers: int = 1,
) -> List[GibbsResult]:
    """
    Independent chains on streams (seed, chain). Serial when ``workers`` is 1;
    otherwise a process pool, with results in chain order either way.
    """
    if n_chains < 1:
        raise ValidationError(f"chain count must be >= 1, got {n_chains}")
    jobs = [(graph, priors, dataset, replace(config, chain=k)) for k in range(n_chains)]
    if workers <= 1:
        return [_run_chain(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chain, jobs))


def observed_marginal(theta: Theta, observed_idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the observed block, latents integrated out."""
    sigma = implied_covariance(theta)
    mu = theta.implied_mean()
    return mu[observed_idx], sigma[np.ix_(observed_idx, observed_idx)]


def predictive_loglik(samples: PosteriorSamples, test: Dataset) -> float:
    """
    Average over test rows of log (1/S) sum_s N(y; mu_s, Sigma_s), with the
    latents marginalized out of each draw.
    """
    if not len(samples):
        raise ValidationError("predictive log-likelihood needs at least one posterior sample")
    graph = samples.graph
    test = test.bind(graph)
    if test.d == 0:
        raise ValidationError("test data has no rows")
    y = test.values if samples.offset is None else test.values - samples.offset
    observed_idx = np.array([graph.index(n) for n in graph.observed], dtype=int)
    logp = np.empty((len(samples), test.d))
    for s, theta in enumerate(samples.thetas):
        mu, cov = observed_marginal(theta, observed_idx)
        logp[s] = np.atleast_1d(multivariate_normal.logpdf(y, mean=mu, cov=cov))
    return float(np.mean(logsumexp(logp, axis=0) - np.log(len(samples))))

