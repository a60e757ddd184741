"""
Bartlett decomposition of covariance matrices in M+(G).

A covariance matrix is rebuilt position by position along a sampling order:
node i regresses on its predecessors with residual variance gamma_i. Only
the coefficients on its spouses are free; the ones on non-spouses are
completed so that every non-adjacent pair gets an exact zero.

Contains:
- Theta: structural parameters {B, V, mean}
- implied_covariance, check_membership
- BartlettFactors with decompose / compose
- jacobian_logdet (exact) and jacobian_logdet_product (closed form)
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve, solve_triangular

from admg.graph import Admg, OrderPlan, SamplingOrder, plan_order
from core.constants import SYMMETRY_TOLERANCE, ZERO_TOLERANCE
from core.errors import GraphError, MembershipError, NumericalError


@dataclass(frozen=True, eq=False)
class Theta:
    """
    Structural parameters of a Gaussian ADMG model.

    Attributes:
        B: q x q coefficients, B[i, j] for the edge j -> i
        V: q x q error covariance in M+(G)
        mean: q structural intercepts (zero by default)
    """

    B: np.ndarray
    V: np.ndarray
    mean: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mean is None:
            object.__setattr__(self, "mean", np.zeros(self.B.shape[0]))

    @property
    def q(self) -> int:
        return self.B.shape[0]

    def implied_mean(self) -> np.ndarray:
        """E[Y] = (I - B)^-1 mean."""
        return solve(np.eye(self.q) - self.B, self.mean)

    def check(self, graph: Admg) -> None:
        """Raise if B or V leaves the support the graph allows."""
        if self.B.shape != (graph.q, graph.q):
            raise GraphError(f"B has shape {self.B.shape}, graph has {graph.q} nodes")
        off_support = ~graph.directed_mask() & (np.abs(self.B) > 0)
        if off_support.any():
            i, j = np.argwhere(off_support)[0]
            raise GraphError(
                f"B has a coefficient on missing edge {graph.nodes[j]} -> {graph.nodes[i]}"
            )
        check_membership(self.V, graph)


def implied_covariance(theta: Theta) -> np.ndarray:
    """Sigma(Theta) = (I - B)^-1 V (I - B)^-T."""
    a = np.eye(theta.q) - theta.B
    try:
        left = solve(a, theta.V)
        sigma = solve(a, left.T)
    except LinAlgError:
        raise NumericalError("I - B is singular") from None
    if not np.all(np.isfinite(sigma)):
        raise NumericalError("Sigma(Theta) has non-finite entries")
    return 0.5 * (sigma + sigma.T)


def check_membership(sigma: np.ndarray, graph: Admg) -> None:
    """
    Check that ``sigma`` lies in M+(G).

    Raises:
        MembershipError: wrong shape, asymmetric, a nonzero entry at a
            non-adjacent pair, or not positive definite
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (graph.q, graph.q):
        raise MembershipError(f"matrix has shape {sigma.shape}, graph has {graph.q} nodes")
    if not np.all(np.isfinite(sigma)):
        raise MembershipError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOLERANCE * scale:
        raise MembershipError("matrix is not symmetric")
    outside = ~graph.bidirected_mask() & (np.abs(sigma) > ZERO_TOLERANCE)
    if outside.any():
        i, j = np.argwhere(outside)[0]
        raise MembershipError(
            f"nonzero entry {sigma[i, j]:.3g} at non-adjacent pair "
            f"({graph.nodes[i]}, {graph.nodes[j]})"
        )
    try:
        cholesky(sigma, lower=True)
    except LinAlgError:
        raise MembershipError("matrix is not positive definite") from None


@dataclass(frozen=True, eq=False)
class BartlettFactors:
    """
    Free parameters of a matrix in M+(G) under a sampling order.

    Attributes:
        gammas: Residual variances, one per position
        coeffs: Per position, the free coefficients on sp<(i) (empty at position 0)
        order: Sampling order
        graph: Graph the factors belong to
    """

    gammas: np.ndarray
    coeffs: Tuple[np.ndarray, ...]
    order: SamplingOrder
    graph: Admg
    plan: OrderPlan = field(init=False, repr=False)

    def __post_init__(self):
        plan = plan_order(self.graph, self.order)
        object.__setattr__(self, "plan", plan)
        if len(self.gammas) != plan.q or np.any(np.asarray(self.gammas) <= 0):
            raise MembershipError("gammas must be q positive values")
        for i, c in enumerate(self.coeffs):
            if len(c) != plan.spouses[i].size:
                raise MembershipError(
                    f"position {i} needs {plan.spouses[i].size} coefficients, got {len(c)}"
                )

    @property
    def log_gammas(self) -> np.ndarray:
        return np.log(self.gammas)


class Assembly(NamedTuple):
    """Output of assemble(): the matrix plus by-products the samplers reuse."""

    sigma: np.ndarray
    ordered: np.ndarray
    rows: np.ndarray
    jacobian_counts: np.ndarray
    schur_logdet: float


def _logdet(matrix: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(cholesky(matrix, lower=True)))))


def _to_graph_order(ordered: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(ordered)
    out[np.ix_(perm, perm)] = ordered
    return out


def assemble(phi: BartlettFactors, with_jacobian: bool = False) -> Assembly:
    """
    Rebuild Sigma from its factors.

    At each position the non-spouse coefficients are completed as
    B_nsp = -B_sp S_sp,nsp S_nsp,nsp^-1, which zeroes the covariance with
    every non-spouse predecessor. With ``with_jacobian`` the exact Jacobian
    of Phi^E -> Sigma^E is tracked as integer powers of the gammas (positions
    whose predecessors are all spouses) plus Schur-complement log-determinants
    (positions with both spouses and non-spouses).
    """
    plan = phi.plan
    q = plan.q
    gammas = np.asarray(phi.gammas, dtype=float)
    ordered = np.zeros((q, q))
    rows = np.zeros((q, q))
    counts = np.zeros(q, dtype=int)
    schur_logdet = 0.0

    ordered[0, 0] = gammas[0]
    for i in range(1, q):
        sp, nsp = plan.spouses[i], plan.non_spouses[i]
        if not sp.size:
            ordered[i, i] = gammas[i]
            continue
        previous = ordered[:i, :i]
        b = np.zeros(i)
        b[sp] = phi.coeffs[i]
        if nsp.size:
            try:
                factor = cho_factor(previous[np.ix_(nsp, nsp)], lower=True)
            except LinAlgError:
                raise NumericalError(
                    f"non-spouse block at position {i} is numerically singular"
                ) from None
            cross = previous[np.ix_(nsp, sp)]
            b[nsp] = -cho_solve(factor, cross @ b[sp])
            if with_jacobian:
                schur = previous[np.ix_(sp, sp)] - cross.T @ cho_solve(factor, cross)
                schur_logdet += _logdet(schur)
        else:
            counts[:i] += 1
        cov = b @ previous
        cov[nsp] = 0.0
        ordered[i, :i] = cov
        ordered[:i, i] = cov
        ordered[i, i] = gammas[i] + cov @ b
        rows[i, :i] = b

    return Assembly(
        sigma=_to_graph_order(ordered, plan.perm),
        ordered=ordered,
        rows=rows,
        jacobian_counts=counts,
        schur_logdet=schur_logdet,
    )


def compose(phi: BartlettFactors) -> np.ndarray:
    """Sigma in graph node order, with exact zeros at non-adjacent pairs."""
    return assemble(phi).sigma


def decompose(sigma: np.ndarray, order: SamplingOrder, graph: Admg) -> BartlettFactors:
    """
    Factor a matrix of M+(G) along ``order``.

    Uses one Cholesky factor L of the permuted matrix: gamma_i = L_ii^2 and
    the full coefficient row is L_P^-T l_i.

    Raises:
        MembershipError: sigma is not in M+(G)
    """
    check_membership(sigma, graph)
    plan = plan_order(graph, order)
    ordered = np.asarray(sigma, dtype=float)[np.ix_(plan.perm, plan.perm)]
    lower = cholesky(ordered, lower=True)
    gammas = np.diag(lower) ** 2
    coeffs = [np.zeros(0)]
    for i in range(1, plan.q):
        full = solve_triangular(lower[:i, :i], lower[i, :i], trans="T", lower=True)
        coeffs.append(full[plan.spouses[i]])
    return BartlettFactors(gammas=gammas, coeffs=tuple(coeffs), order=order, graph=graph)


def jacobian_logdet(phi: BartlettFactors) -> float:
    """
    log |d Sigma^E / d Phi^E|, exact.

    The Jacobian is block lower-triangular; the block for position i is the
    covariance of its spouses conditioned on its non-spouse predecessors.
    """
    parts = assemble(phi, with_jacobian=True)
    return float(parts.jacobian_counts @ phi.log_gammas + parts.schur_logdet)


def jacobian_logdet_product(phi: BartlettFactors) -> float:
    """
    Closed form sum_i #sp>(i) log gamma_i.

    Equal to jacobian_logdet whenever no position has both spouse and
    non-spouse predecessors correlated with each other (complete graphs,
    empty graphs, and orders where every spouse set is the full prefix).
    """
    return float(phi.plan.later_spouse_counts @ phi.log_gammas)


# =============================================================================
# FLAT LAYOUT (used for finite-difference checks and trace export)
# =============================================================================

def factors_to_vector(phi: BartlettFactors) -> np.ndarray:
    """Phi^E flattened as [gamma_0, b_1, gamma_1, b_2, gamma_2, ...]."""
    parts = [np.asarray(phi.gammas[:1], dtype=float)]
    for i in range(1, phi.plan.q):
        parts.append(np.asarray(phi.coeffs[i], dtype=float))
        parts.append(np.asarray(phi.gammas[i : i + 1], dtype=float))
    return np.concatenate(parts)


def factors_from_vector(vector: np.ndarray, order: SamplingOrder, graph: Admg) -> BartlettFactors:
    """Inverse of factors_to_vector."""
    plan = plan_order(graph, order)
    gammas = np.empty(plan.q)
    coeffs = [np.zeros(0)]
    gammas[0] = vector[0]
    cursor = 1
    for i in range(1, plan.q):
        k = plan.spouses[i].size
        coeffs.append(np.array(vector[cursor : cursor + k], dtype=float))
        gammas[i] = vector[cursor + k]
        cursor += k + 1
    return BartlettFactors(gammas=gammas, coeffs=tuple(coeffs), order=order, graph=graph)


def free_entries(sigma: np.ndarray, order: SamplingOrder, graph: Admg) -> np.ndarray:
    """Sigma^E in the layout of factors_to_vector: [s_00, s_1,sp, s_11, ...]."""
    plan = plan_order(graph, order)
    ordered = np.asarray(sigma, dtype=float)[np.ix_(plan.perm, plan.perm)]
    parts = [ordered[:1, 0]]
    for i in range(1, plan.q):
        parts.append(ordered[i, plan.spouses[i]])
        parts.append(ordered[i : i + 1, i])
    return np.concatenate(parts)
