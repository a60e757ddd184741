"""
Mean-field variational inference q(V) q(B) q(X) for Gaussian ADMG models.

q(V) stays in the G-IW family, q(B) is a joint Gaussian over the free
coefficients, and q(X) gives every observation a Gaussian over its latents
with a shared covariance. Expectations under q(V) come from a frozen pool
of Bartlett proposal draws: the standard variates are drawn once per run,
transformed at an anchor q(V), and reweighted to the current q(V) by
exp(-tr(Sigma^-1 (U' - U_anchor)) / 2). The pool estimate of log I_G is then
convex in U' with gradient -<V^-1>/2, which makes every coordinate update
an exact ascent step on the estimated bound.
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky
from scipy.special import logsumexp

from admg.bartlett import Theta
from admg.data import Dataset
from admg.gibbs import (
    GibbsProblem,
    ModelPriors,
    PosteriorSamples,
    coefficient_system,
    predictive_loglik,
)
from admg.giw import (
    GiwParams,
    ProposalNoise,
    build_proposal_plan,
    draw_noise,
    estimate_norm_const,
    log_iw_norm_const,
    sample_proposals,
    transform,
    weighted_ess,
)
from admg.graph import Admg, SamplingOrder, choose_order
from admg.rng import make_stream
from core.constants import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_POOL_M,
    DEFAULT_VB_TOLERANCE,
    DEFAULT_WARMUP_SWEEPS,
    DIVERGENCE_FACTOR,
    ORDER_STRATEGIES,
    POOL_ESS_FLOOR,
)
from core.errors import NumericalError, ValidationError, VariationalDivergenceError

logger = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class GaussianFactor:
    mean: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True, eq=False)
class LatentFactor:
    """Per-row latent means (d x h) and the covariance they share (h x h)."""

    means: np.ndarray
    covariance: np.ndarray


# =============================================================================
# FROZEN V-DRAW POOL
# =============================================================================

class VExpectations(NamedTuple):
    precision: np.ndarray
    logdet: float
    log_norm_const: float
    ess: float


@dataclass(frozen=True, eq=False)
class VPool:
    """
    Proposal draws transformed once at ``anchor``.

    Attributes:
        anchor: The G-IW parameters the draws were transformed at
        noises: The frozen standard variates
        log_iw: log I_IW at the anchor
        log_weights: log g of every draw at the anchor
        sigmas / precisions / logdets: Per-draw Sigma, Sigma^-1, log|Sigma|
    """

    anchor: GiwParams
    noises: Tuple[ProposalNoise, ...]
    log_iw: float
    log_weights: np.ndarray
    sigmas: np.ndarray
    precisions: np.ndarray
    logdets: np.ndarray

    @classmethod
    def build(
        cls, anchor: GiwParams, order: SamplingOrder, noises: Sequence[ProposalNoise]
    ) -> "VPool":
        plan = build_proposal_plan(anchor, order)
        draws = [transform(plan, noise) for noise in noises]
        return cls(
            anchor=anchor,
            noises=tuple(noises),
            log_iw=log_iw_norm_const(anchor.delta, anchor.U),
            log_weights=np.array([s.log_weight for s in draws]),
            sigmas=np.stack([s.sigma for s in draws]),
            precisions=np.stack([s.precision() for s in draws]),
            logdets=np.array([s.logdet for s in draws]),
        )

    @property
    def m(self) -> int:
        return self.log_weights.size

    @property
    def anchor_ess(self) -> float:
        return weighted_ess(self.log_weights)

    def reweight(self, params: GiwParams) -> np.ndarray:
        """Unnormalized log weights of the pool draws under ``params``."""
        if params.delta != self.anchor.delta:
            raise ValidationError("pool reweighting needs the anchor's degrees of freedom")
        shift = params.U - self.anchor.U
        return self.log_weights - 0.5 * np.einsum("sij,ij->s", self.precisions, shift)

    def expectations(self, params: GiwParams) -> VExpectations:
        log_w = self.reweight(params)
        total = logsumexp(log_w)
        w = np.exp(log_w - total)
        precision = np.einsum("s,sij->ij", w, self.precisions)
        return VExpectations(
            precision=0.5 * (precision + precision.T),
            logdet=float(w @ self.logdets),
            log_norm_const=self.log_iw + float(total - np.log(self.m)),
            ess=weighted_ess(log_w),
        )

    def resample(self, params: GiwParams, rng: np.random.Generator) -> np.ndarray:
        log_w = self.reweight(params)
        probs = np.exp(log_w - logsumexp(log_w))
        return self.sigmas[int(rng.choice(self.m, p=probs))]


def expected_precision(
    qV: GiwParams, m: int, rng: np.random.Generator, order: Optional[SamplingOrder] = None
) -> np.ndarray:
    """
    Weighted Monte Carlo estimate of <V^-1> from ``m`` fresh proposals, each
    contributing (I - R)^T diag(1/gamma) (I - R).
    """
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    draws = sample_proposals(qV, order, m, rng)
    log_w = np.array([s.log_weight for s in draws])
    w = np.exp(log_w - logsumexp(log_w))
    estimate = sum(wi * s.precision() for wi, s in zip(w, draws))
    return 0.5 * (estimate + estimate.T)


# =============================================================================
# STATE AND MOMENTS
# =============================================================================

@dataclass
class VariationalState:
    """
    Current factors plus run bookkeeping.

    Attributes:
        qV / qB / qX: The factors
        bound_history: One bound value per recorded sweep
        pool: Frozen V-draw pool the bound is evaluated with
        prior_log_norm_const: log I_G(delta, U) of the prior, estimated once
        anchor_resets: Sweeps at which the pool was re-anchored
        offset: Column means removed from the training data
    """

    qV: GiwParams
    qB: GaussianFactor
    qX: LatentFactor
    bound_history: List[float] = field(default_factory=list)
    pool: Optional[VPool] = None
    prior_log_norm_const: float = 0.0
    anchor_resets: List[int] = field(default_factory=list)
    offset: Optional[np.ndarray] = None


def expected_scatter(problem: GibbsProblem, qX: LatentFactor) -> np.ndarray:
    """<sum_t z_t z_t^T> over q(X) for z = (y, x, 1)."""
    scatter = problem.augmented_scatter(qX.means)
    h = problem.latent_idx
    if h.size:
        scatter[np.ix_(h, h)] += problem.d * qX.covariance
    return scatter


def _indicator(rows: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, rows.size))
    out[rows, np.arange(rows.size)] = 1.0
    return out


def mean_theta(problem: GibbsProblem, qB: GaussianFactor, V: np.ndarray) -> Theta:
    B, mean = problem.layout.unpack(qB.mean)
    return Theta(B=B, V=V, mean=mean)


def expected_residual_scatter(
    problem: GibbsProblem, qB: GaussianFactor, scatter: np.ndarray
) -> np.ndarray:
    """
    T = <A D A^T> under q(B) q(X)
      = A_mean D A_mean^T + sum_kl S_kl D[j_k, j_l] e_{i_k} e_{i_l}^T.
    """
    layout = problem.layout
    q = problem.graph.q
    B, mean = layout.unpack(qB.mean)
    a = np.hstack([np.eye(q) - B, -mean[:, None]])
    T = a @ scatter @ a.T
    if layout.size:
        j = layout.parents
        weighted = qB.covariance * scatter[np.ix_(j, j)]
        e = _indicator(layout.children, q)
        T = T + e @ weighted @ e.T
    return 0.5 * (T + T.T)


def expected_residual_gram(
    problem: GibbsProblem, qB: GaussianFactor, precision: np.ndarray
) -> np.ndarray:
    """
    M = <A^T Lambda A> under q(B), a (q+1) x (q+1) matrix
      = A_mean^T Lambda A_mean + sum_kl S_kl Lambda[i_k, i_l] e_{j_k} e_{j_l}^T.
    """
    layout = problem.layout
    q = problem.graph.q
    B, mean = layout.unpack(qB.mean)
    a = np.hstack([np.eye(q) - B, -mean[:, None]])
    M = a.T @ precision @ a
    if layout.size:
        i = layout.children
        weighted = qB.covariance * precision[np.ix_(i, i)]
        e = _indicator(layout.parents, q + 1)
        M = M + e @ weighted @ e.T
    return 0.5 * (M + M.T)


def _gaussian_from_natural(Q: np.ndarray, h: np.ndarray, what: str) -> GaussianFactor:
    try:
        factor = cho_factor(Q, lower=True)
    except LinAlgError:
        raise NumericalError(f"{what} natural precision is not positive definite") from None
    covariance = cho_solve(factor, np.eye(Q.shape[0]))
    return GaussianFactor(mean=cho_solve(factor, h), covariance=0.5 * (covariance + covariance.T))


# =============================================================================
# COORDINATE UPDATES
# =============================================================================

def update_qV(state: VariationalState, problem: GibbsProblem) -> GiwParams:
    """q(V) = G-IW(delta + d, U + <(I - B) D (I - B)^T>)."""
    giw = problem.priors.giw
    T = expected_residual_scatter(problem, state.qB, expected_scatter(problem, state.qX))
    return GiwParams(delta=giw.delta + problem.d, U=giw.U + T, graph=problem.graph)


def update_qB(state: VariationalState, problem: GibbsProblem, precision: np.ndarray) -> GaussianFactor:
    """Gaussian over the free coefficients with V^-1 replaced by <V^-1>."""
    layout = problem.layout
    if not layout.size:
        return GaussianFactor(mean=np.zeros(0), covariance=np.zeros((0, 0)))
    Q, h = coefficient_system(layout, precision, expected_scatter(problem, state.qX))
    return _gaussian_from_natural(Q, h, "q(B)")


def update_qX(state: VariationalState, problem: GibbsProblem, precision: np.ndarray) -> LatentFactor:
    """
    Latent block of exp <ln p(y, x | B, V)>: precision M_hh and per-row
    mean -M_hh^-1 M_hr z_r, where r are the observed and constant columns.
    """
    h = problem.latent_idx
    if not h.size:
        return state.qX
    q = problem.graph.q
    M = expected_residual_gram(problem, state.qB, precision)
    rest = np.concatenate([problem.observed_idx, [q]])
    factor = _gaussian_from_natural(M[np.ix_(h, h)], np.zeros(h.size), "q(X)")
    z_rest = np.hstack([problem.data.values, np.ones((problem.d, 1))])
    means = -(z_rest @ M[np.ix_(rest, h)]) @ factor.covariance
    return LatentFactor(means=means, covariance=factor.covariance)


def _gaussian_entropy(covariance: np.ndarray) -> float:
    k = covariance.shape[0]
    if not k:
        return 0.0
    try:
        chol = cholesky(covariance, lower=True)
    except LinAlgError:
        raise NumericalError("factor covariance is not positive definite") from None
    return 0.5 * k * (1.0 + _LOG_2PI) + float(np.sum(np.log(np.diag(chol))))


def compute_bound(
    state: VariationalState,
    problem: GibbsProblem,
    pool: Optional[VPool] = None,
    m: int = DEFAULT_POOL_M,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    <ln p(Y, X | V, B)> + <ln p(V) - ln q(V)> + <ln p(B) - ln q(B)> - <ln q(X)>.

    q(V) expectations come from ``pool`` (a fresh pool of ``m`` draws from
    ``rng`` when none is given).
    """
    if pool is None:
        if rng is None:
            raise ValidationError("compute_bound needs a pool or an rng")
        plan = build_proposal_plan(state.qV, problem.order)
        pool = VPool.build(state.qV, problem.order, [draw_noise(plan, rng) for _ in range(m)])
    q = problem.graph.q
    d = problem.d
    giw = problem.priors.giw
    qV = state.qV
    moments = pool.expectations(qV)
    lam, logdet = moments.precision, moments.logdet

    T = expected_residual_scatter(problem, state.qB, expected_scatter(problem, state.qX))
    likelihood = -0.5 * d * q * _LOG_2PI - 0.5 * d * logdet - 0.5 * float(np.sum(lam * T))

    log_p_v = (
        -state.prior_log_norm_const
        - 0.5 * (giw.delta + 2 * q) * logdet
        - 0.5 * float(np.sum(lam * giw.U))
    )
    log_q_v = (
        -moments.log_norm_const
        - 0.5 * (qV.delta + 2 * q) * logdet
        - 0.5 * float(np.sum(lam * qV.U))
    )

    layout = problem.layout
    b_term = 0.0
    if layout.size:
        prec = layout.prior_precision
        sq = (state.qB.mean - layout.prior_mean) ** 2 + np.diag(state.qB.covariance)
        b_term = float(np.sum(0.5 * np.log(prec) - 0.5 * _LOG_2PI - 0.5 * prec * sq))
        b_term += _gaussian_entropy(state.qB.covariance)

    x_term = d * _gaussian_entropy(state.qX.covariance) if problem.latent_idx.size else 0.0
    return likelihood + log_p_v - log_q_v + b_term + x_term


# =============================================================================
# DRIVER
# =============================================================================

@dataclass(frozen=True)
class VbConfig:
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    tolerance: float = DEFAULT_VB_TOLERANCE
    m: int = DEFAULT_POOL_M
    seed: int = 0
    order: str = "greedy"
    warmup_sweeps: int = DEFAULT_WARMUP_SWEEPS
    ess_floor: float = POOL_ESS_FLOOR

    def validate(self) -> None:
        if self.max_sweeps < 0 or self.warmup_sweeps < 0:
            raise ValidationError("sweep counts must be >= 0")
        if not self.tolerance > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.m < 1:
            raise ValidationError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.ess_floor < 1.0:
            raise ValidationError(f"ESS floor must lie in [0, 1), got {self.ess_floor}")
        if self.order not in ORDER_STRATEGIES:
            raise ValidationError(f"order must be one of {ORDER_STRATEGIES}, got '{self.order}'")


def initial_factors(problem: GibbsProblem) -> VariationalState:
    """q(B) a near point mass at the prior mean, q(X) standard normal, q(V) updated from them."""
    layout = problem.layout
    qB = GaussianFactor(mean=layout.prior_mean.copy(), covariance=1e-8 * np.eye(layout.size))
    h = problem.latent_idx.size
    qX = LatentFactor(means=np.zeros((problem.d, h)), covariance=np.eye(h))
    giw = problem.priors.giw
    state = VariationalState(qV=giw, qB=qB, qX=qX)
    state.qV = update_qV(state, problem)
    return state


def _sweep(state: VariationalState, problem: GibbsProblem, pool: VPool) -> None:
    precision = pool.expectations(state.qV).precision
    state.qX = update_qX(state, problem, precision)
    state.qB = update_qB(state, problem, precision)
    state.qV = update_qV(state, problem)


def run_vb(
    graph: Admg,
    priors: ModelPriors,
    dataset: Dataset,
    config: VbConfig,
) -> VariationalState:
    """
    Coordinate ascent until the bound moves less than ``tolerance`` or
    ``max_sweeps`` sweeps are recorded.

    Raises:
        VariationalDivergenceError: the bound fell by more than
            DIVERGENCE_FACTOR x tolerance between sweeps on the same pool anchor
    """
    config.validate()
    order = choose_order(graph, config.order)
    problem = GibbsProblem.build(graph, priors, dataset, order)
    rng = make_stream(config.seed)
    state = initial_factors(problem)
    if config.max_sweeps == 0:
        return state

    state.prior_log_norm_const = estimate_norm_const(priors.giw, config.m, rng, order).log_value
    plan = build_proposal_plan(state.qV, order)
    noises = [draw_noise(plan, rng) for _ in range(config.m)]

    for _ in range(config.warmup_sweeps):
        _sweep(state, problem, VPool.build(state.qV, order, noises))

    pool = VPool.build(state.qV, order, noises)
    for sweep in range(config.max_sweeps):
        _sweep(state, problem, pool)
        reanchored = False
        if pool.expectations(state.qV).ess < config.ess_floor * pool.anchor_ess:
            logger.warning("Re-anchoring the V-draw pool at sweep %d (ESS collapsed)", sweep)
            pool = VPool.build(state.qV, order, noises)
            state.anchor_resets.append(sweep)
            reanchored = True
        bound = compute_bound(state, problem, pool)
        previous = state.bound_history[-1] if state.bound_history else None
        state.bound_history.append(bound)
        state.pool = pool
        if previous is None or reanchored:
            continue
        change = bound - previous
        if change < -DIVERGENCE_FACTOR * config.tolerance:
            raise VariationalDivergenceError(
                f"bound fell from {previous:.6f} to {bound:.6f} at sweep {sweep}"
            )
        if abs(change) < config.tolerance:
            break

    logger.info(
        "VB finished after %d sweeps, bound %.4f", len(state.bound_history), state.bound_history[-1]
    )
    return state


def vb_posterior_draws(
    state: VariationalState,
    graph: Admg,
    priors: ModelPriors,
    m: int,
    rng: np.random.Generator,
) -> PosteriorSamples:
    """Theta draws with coefficients from q(B) and V resampled from the pool under q(V)."""
    problem = GibbsProblem.build(graph, priors, Dataset.empty(graph.observed))
    pool = state.pool
    if pool is None:
        plan = build_proposal_plan(state.qV, problem.order)
        pool = VPool.build(state.qV, problem.order, [draw_noise(plan, rng) for _ in range(m)])
    layout = problem.layout
    thetas = []
    for _ in range(m):
        if layout.size:
            beta = rng.multivariate_normal(state.qB.mean, state.qB.covariance, method="eigh")
        else:
            beta = np.zeros(0)
        B, mean = layout.unpack(beta)
        thetas.append(Theta(B=B, V=pool.resample(state.qV, rng), mean=mean))
    return PosteriorSamples(graph=graph, thetas=tuple(thetas), offset=state.offset)


def vb_predictive_loglik(
    state: VariationalState,
    graph: Admg,
    priors: ModelPriors,
    test: Dataset,
    m: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo plug-in predictive: average over Theta drawn from q(B) q(V)."""
    return predictive_loglik(vb_posterior_draws(state, graph, priors, m, rng), test)


def point_theta(state: VariationalState, problem: GibbsProblem) -> Theta:
    """Theta at the q(B) mean and the pool estimate of the q(V) mean."""
    if state.pool is None:
        raise ValidationError("point estimate needs a fitted run (no V-draw pool yet)")
    log_w = state.pool.reweight(state.qV)
    w = np.exp(log_w - logsumexp(log_w))
    V = np.einsum("s,sij->ij", w, state.pool.sigmas)
    return mean_theta(problem, state.qB, 0.5 * (V + V.T))


__all__ = [
    "GaussianFactor",
    "LatentFactor",
    "VPool",
    "VariationalState",
    "VbConfig",
    "compute_bound",
    "expected_precision",
    "point_theta",
    "run_vb",
    "update_qB",
    "update_qV",
    "update_qX",
    "vb_posterior_draws",
    "vb_predictive_loglik",
]
