"""
G-Inverse-Wishart distribution on M+(G).

The unnormalized density is |Sigma|^-(delta+2q)/2 exp(-tr(Sigma^-1 U)/2)
restricted to M+(G); on a complete graph it is the inverse Wishart with
nu = delta + q - 1 degrees of freedom.

Draws go through a Bartlett proposal: gamma_i is inverse gamma, the spouse
coefficients are the spouse marginal of the inverse-Wishart regression, and
the remaining coefficients are completed. Inverse-gamma variates are
parameterized by shape/rate on the reciprocal, density ~ x^(-a-1) e^(-b/x).
Each proposal carries a log importance weight log g; E[g] = I_G / I_IW.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular
from scipy.special import logsumexp, multigammaln

from admg.bartlett import (
    BartlettFactors,
    assemble,
    check_membership,
)
from admg.graph import Admg, OrderPlan, SamplingOrder, plan_order
from core.constants import MIN_EFFECTIVE_SAMPLE_SIZE, SYMMETRY_TOLERANCE
from core.errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class GiwParams:
    """
    Parameters of a G-IW distribution.

    Attributes:
        delta: Degrees of freedom, > 0
        U: Symmetric positive-definite q x q scale
        graph: Graph whose bi-directed part fixes the zero pattern
    """

    delta: float
    U: np.ndarray
    graph: Admg

    def __post_init__(self):
        u = np.array(self.U, dtype=float)
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise ValidationError(f"delta must be positive, got {self.delta}")
        if u.shape != (self.graph.q, self.graph.q):
            raise ValidationError(f"U has shape {u.shape}, graph has {self.graph.q} nodes")
        scale = max(1.0, float(np.max(np.abs(u))))
        if np.max(np.abs(u - u.T)) > SYMMETRY_TOLERANCE * scale:
            raise ValidationError("U is not symmetric")
        try:
            cholesky(u, lower=True)
        except LinAlgError:
            raise ValidationError("U is not positive definite") from None
        u = 0.5 * (u + u.T)
        u.setflags(write=False)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "U", u)

    @property
    def q(self) -> int:
        return self.graph.q


def posterior_params(prior: GiwParams, D: np.ndarray, d: int) -> GiwParams:
    """Conjugate update G-IW(delta + d, U + D)."""
    D = np.asarray(D, dtype=float)
    if d < 0:
        raise ValidationError(f"sample count must be >= 0, got {d}")
    if D.shape != prior.U.shape:
        raise ValidationError(f"statistic has shape {D.shape}, expected {prior.U.shape}")
    return GiwParams(delta=prior.delta + d, U=prior.U + D, graph=prior.graph)


def log_iw_norm_const(delta: float, U: np.ndarray) -> float:
    """
    log of the integral of |S|^-(delta+2q)/2 exp(-tr(S^-1 U)/2) over all
    positive-definite S, i.e. the inverse-Wishart normalizer with
    nu = delta + q - 1.
    """
    q = U.shape[0]
    nu = delta + q - 1
    _, logdet = np.linalg.slogdet(U)
    return 0.5 * nu * q * np.log(2.0) + multigammaln(0.5 * nu, q) - 0.5 * nu * logdet


def weighted_ess(log_weights: np.ndarray) -> float:
    """(sum w)^2 / sum w^2, computed in log space."""
    log_weights = np.asarray(log_weights, dtype=float)
    return float(np.exp(2.0 * logsumexp(log_weights) - logsumexp(2.0 * log_weights)))


# =============================================================================
# PROPOSAL
# =============================================================================

@dataclass(frozen=True, eq=False)
class ProposalPlan:
    """Everything a proposal draw needs that depends only on (params, order)."""

    params: GiwParams
    order: OrderPlan
    shapes: np.ndarray
    rates: np.ndarray
    means: Tuple[np.ndarray, ...]
    spouse_factors: Tuple[Optional[np.ndarray], ...]
    gains: Tuple[Optional[np.ndarray], ...]
    conditional_factors: Tuple[Optional[np.ndarray], ...]

    @property
    def q(self) -> int:
        return self.params.q


def build_proposal_plan(params: GiwParams, order: SamplingOrder) -> ProposalPlan:
    """
    Precompute the inverse-Wishart Bartlett conditionals along ``order``.

    For position i with predecessor block P: rate = u_ii.P / 2, regression
    mean M = U_P^-1 U_P,i and, with K = U_P^-1, the Cholesky factor of
    K_sp,sp (spouse marginal) plus the gain and Cholesky factor of the
    non-spouse block given the spouses (used by the weight).
    """
    plan = plan_order(params.graph, order)
    q = plan.q
    u = params.U[np.ix_(plan.perm, plan.perm)]
    shapes = 0.5 * (params.delta + np.arange(q))
    rates = np.empty(q)
    rates[0] = 0.5 * u[0, 0]
    means = [np.zeros(0)]
    spouse_factors: list = [None]
    gains: list = [None]
    conditional_factors: list = [None]

    for i in range(1, q):
        try:
            factor = cho_factor(u[:i, :i], lower=True)
        except LinAlgError:
            raise NumericalError(
                f"leading {i} x {i} block of U is numerically singular"
            ) from None
        mean = cho_solve(factor, u[:i, i])
        rates[i] = 0.5 * (u[i, i] - u[:i, i] @ mean)
        k = cho_solve(factor, np.eye(i))
        k = 0.5 * (k + k.T)
        sp, nsp = plan.spouses[i], plan.non_spouses[i]

        try:
            spouse_chol = cholesky(k[np.ix_(sp, sp)], lower=True) if sp.size else None
            gain = None
            cond_chol = None
            if nsp.size:
                cond = k[np.ix_(nsp, nsp)]
                if sp.size:
                    gain = cho_solve((spouse_chol, True), k[np.ix_(sp, nsp)]).T
                    cond = cond - gain @ k[np.ix_(sp, nsp)]
                cond_chol = cholesky(0.5 * (cond + cond.T), lower=True)
        except LinAlgError:
            raise NumericalError(
                f"proposal precision at position {i} is not positive definite"
            ) from None

        means.append(mean)
        spouse_factors.append(spouse_chol)
        gains.append(gain)
        conditional_factors.append(cond_chol)

    return ProposalPlan(
        params=params,
        order=plan,
        shapes=shapes,
        rates=rates,
        means=tuple(means),
        spouse_factors=tuple(spouse_factors),
        gains=tuple(gains),
        conditional_factors=tuple(conditional_factors),
    )


@dataclass(frozen=True, eq=False)
class ProposalNoise:
    """
    Standard variates behind one proposal draw.

    Attributes:
        gammas: Standard gamma variates with shape (delta + i) / 2
        normals: Standard normal vectors, one of length |sp<(i)| per position
    """

    gammas: np.ndarray
    normals: Tuple[np.ndarray, ...]


def draw_noise(plan: ProposalPlan, rng: np.random.Generator) -> ProposalNoise:
    """Consume the rng in a fixed order: per position one gamma, then normals."""
    gammas = np.empty(plan.q)
    normals = []
    for i in range(plan.q):
        gammas[i] = rng.standard_gamma(plan.shapes[i])
        normals.append(rng.standard_normal(plan.order.spouses[i].size))
    return ProposalNoise(gammas=gammas, normals=tuple(normals))


def _gaussian_logpdf(residual: np.ndarray, scale: float, chol: np.ndarray) -> float:
    """log N(residual; 0, scale * chol chol^T)."""
    z = solve_triangular(chol, residual, lower=True)
    k = residual.size
    return -0.5 * (
        k * (_LOG_2PI + np.log(scale))
        + 2.0 * float(np.sum(np.log(np.diag(chol))))
        + float(z @ z) / scale
    )


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """
    One proposal draw.

    Attributes:
        sigma: The matrix, in graph node order
        phi: Its Bartlett factors
        log_weight: log g, the importance weight against the G-IW target
        rows: Completed coefficient rows in position space (strictly lower)
    """

    sigma: np.ndarray
    phi: BartlettFactors
    log_weight: float
    rows: np.ndarray = field(repr=False)

    @property
    def logdet(self) -> float:
        """log |Sigma| = sum log gamma_i."""
        return float(np.sum(self.phi.log_gammas))

    def precision(self) -> np.ndarray:
        """Sigma^-1 = (I - R)^T diag(1/gamma) (I - R), with no inversion of Sigma."""
        q = self.rows.shape[0]
        a = np.eye(q) - self.rows
        ordered = a.T @ (a / self.phi.gammas[:, None])
        perm = self.phi.plan.perm
        out = np.empty_like(ordered)
        out[np.ix_(perm, perm)] = ordered
        return 0.5 * (out + out.T)


def transform(plan: ProposalPlan, noise: ProposalNoise) -> WeightedSample:
    """Deterministically map standard variates to a weighted proposal draw."""
    order = plan.order
    q = plan.q
    gammas = plan.rates / noise.gammas
    coeffs = [np.zeros(0)]
    for i in range(1, q):
        sp = order.spouses[i]
        if sp.size:
            mean = plan.means[i][sp]
            coeffs.append(mean + np.sqrt(gammas[i]) * (plan.spouse_factors[i] @ noise.normals[i]))
        else:
            coeffs.append(np.zeros(0))

    phi = BartlettFactors(
        gammas=gammas,
        coeffs=tuple(coeffs),
        order=order.order,
        graph=plan.params.graph,
    )
    parts = assemble(phi, with_jacobian=True)

    log_f = 0.0
    for i in range(1, q):
        sp, nsp = order.spouses[i], order.non_spouses[i]
        if not nsp.size:
            continue
        mean = plan.means[i][nsp]
        if sp.size:
            mean = mean + plan.gains[i] @ (coeffs[i] - plan.means[i][sp])
        residual = parts.rows[i, nsp] - mean
        log_f += _gaussian_logpdf(residual, gammas[i], plan.conditional_factors[i])

    full_counts = (q - 1) - np.arange(q)
    log_gammas = np.log(gammas)
    log_weight = (
        float(parts.jacobian_counts @ log_gammas)
        - float(full_counts @ log_gammas)
        + parts.schur_logdet
        + log_f
    )
    return WeightedSample(sigma=parts.sigma, phi=phi, log_weight=log_weight, rows=parts.rows)


def _default_order(params: GiwParams, order: Optional[SamplingOrder]) -> SamplingOrder:
    return order if order is not None else SamplingOrder.declaration(params.graph)


def sample_proposal(
    params: GiwParams, order: Optional[SamplingOrder], rng: np.random.Generator
) -> WeightedSample:
    """One Bartlett proposal draw with its log importance weight."""
    plan = build_proposal_plan(params, _default_order(params, order))
    return transform(plan, draw_noise(plan, rng))


def sample_proposals(
    params: GiwParams, order: Optional[SamplingOrder], m: int, rng: np.random.Generator
) -> Tuple[WeightedSample, ...]:
    """``m`` proposal draws sharing one precomputed plan."""
    plan = build_proposal_plan(params, _default_order(params, order))
    return tuple(transform(plan, draw_noise(plan, rng)) for _ in range(m))


# =============================================================================
# RESAMPLING
# =============================================================================

class ResampledDraw(NamedTuple):
    sigma: np.ndarray
    sample: WeightedSample
    ess: float


def _pick(samples: Sequence[WeightedSample], rng: np.random.Generator) -> ResampledDraw:
    log_w = np.array([s.log_weight for s in samples])
    ess = weighted_ess(log_w)
    if len(samples) > 1 and ess < MIN_EFFECTIVE_SAMPLE_SIZE:
        logger.warning("Degenerate importance weights: ESS %.2f over %d draws", ess, len(samples))
    probs = np.exp(log_w - logsumexp(log_w))
    chosen = samples[int(rng.choice(len(samples), p=probs))]
    return ResampledDraw(sigma=chosen.sigma, sample=chosen, ess=ess)


def resample_exact(
    params: GiwParams,
    m: int,
    rng: np.random.Generator,
    order: Optional[SamplingOrder] = None,
) -> ResampledDraw:
    """
    Sampling-importance-resampling: draw ``m`` proposals and keep one with
    probability proportional to its weight.
    """
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    return _pick(sample_proposals(params, order, m, rng), rng)


class CovarianceSampler(Protocol):
    """Draws V for a Gibbs V-step."""

    mode: str

    def draw(
        self, params: GiwParams, order: SamplingOrder, rng: np.random.Generator
    ) -> WeightedSample:
        ...


class FaithfulSampler:
    """Unweighted proposal draws, taken as if they were exact."""

    mode = "faithful"
    draws_per_step = 1

    def draw(
        self, params: GiwParams, order: SamplingOrder, rng: np.random.Generator
    ) -> WeightedSample:
        return sample_proposal(params, order, rng)


class SirSampler:
    """Weight-corrected draws by sampling-importance-resampling over m proposals."""

    mode = "sir"

    def __init__(self, m: int):
        if m < 1:
            raise ValidationError(f"m must be >= 1, got {m}")
        self.m = m
        self.draws_per_step = m

    def draw(
        self, params: GiwParams, order: SamplingOrder, rng: np.random.Generator
    ) -> WeightedSample:
        return _pick(sample_proposals(params, order, self.m, rng), rng).sample


def make_sampler(mode: str, m: int) -> CovarianceSampler:
    if mode == "faithful":
        return FaithfulSampler()
    if mode == "sir":
        return SirSampler(m)
    raise ValidationError(f"unknown V-step mode '{mode}'")


# =============================================================================
# NORMALIZING CONSTANT AND MARGINAL LIKELIHOOD
# =============================================================================

class NormConstEstimate(NamedTuple):
    log_value: float
    std_error: float
    ess: float


class MarginalLikelihood(NamedTuple):
    log_value: float
    std_error: float


def estimate_from_log_weights(log_iw: float, log_weights: np.ndarray) -> NormConstEstimate:
    """
    log I_G = log I_IW + log mean g, with a delta-method standard error on
    the log scale: sd(g) / (sqrt(m) mean(g)).
    """
    log_weights = np.asarray(log_weights, dtype=float)
    m = log_weights.size
    log_mean = float(logsumexp(log_weights) - np.log(m))
    weights = np.exp(log_weights - log_weights.max())
    if m > 1:
        std_error = float(np.std(weights, ddof=1) / (np.sqrt(m) * np.mean(weights)))
    else:
        std_error = 0.0
    return NormConstEstimate(
        log_value=log_iw + log_mean, std_error=std_error, ess=weighted_ess(log_weights)
    )


def estimate_norm_const(
    params: GiwParams,
    m: int,
    rng: np.random.Generator,
    order: Optional[SamplingOrder] = None,
) -> NormConstEstimate:
    """Monte Carlo estimate of log I_G(delta, U)."""
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    log_iw = log_iw_norm_const(params.delta, params.U)
    q = params.q
    if len(params.graph.bidirected_edges) == q * (q - 1) // 2:
        # complete graph: every weight is exactly 1
        return NormConstEstimate(log_value=log_iw, std_error=0.0, ess=float(m))
    samples = sample_proposals(params, order, m, rng)
    estimate = estimate_from_log_weights(log_iw, np.array([s.log_weight for s in samples]))
    logger.debug("log I_G estimate %.6f (se %.2e, ESS %.1f)", *estimate)
    return estimate


def log_marginal_likelihood(
    prior: GiwParams,
    D: np.ndarray,
    d: int,
    m: int,
    rng: np.random.Generator,
    order: Optional[SamplingOrder] = None,
) -> MarginalLikelihood:
    """
    log p(data | G) for zero-mean Gaussian data with a G-IW prior on Sigma:
    -(dq/2) log 2pi + log I_G(delta + d, U + D) - log I_G(delta, U).
    """
    if d == 0 and not np.any(D):
        return MarginalLikelihood(log_value=0.0, std_error=0.0)
    posterior = posterior_params(prior, D, d)
    post = estimate_norm_const(posterior, m, rng, order)
    pri = estimate_norm_const(prior, m, rng, order)
    return MarginalLikelihood(
        log_value=-0.5 * d * prior.q * _LOG_2PI + post.log_value - pri.log_value,
        std_error=float(np.hypot(post.std_error, pri.std_error)),
    )


def giw_log_density_unnorm(sigma: np.ndarray, params: GiwParams) -> float:
    """-((delta + 2q)/2) log|Sigma| - tr(Sigma^-1 U)/2 on M+(G)."""
    check_membership(sigma, params.graph)
    factor = cho_factor(sigma, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    trace = float(np.trace(cho_solve(factor, params.U)))
    return -0.5 * (params.delta + 2 * params.q) * logdet - 0.5 * trace
