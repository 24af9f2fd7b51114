"""Aggregative game family: weighted aggregator, quadratic payoffs, pseudo-gradient.

The concrete family implemented here is the demand-response game with N
players choosing scalar consumption levels x_i >= 0: player i pays

    J_i(x_i, sigma) = l_i (x_i - h_i)^2 + (q N sigma + p0) x_i,

where sigma = sum_j beta_j x_j is the weighted aggregate of all strategies.
The per-player weights beta are the quantity the inverse learner recovers.
The pseudo-gradient stacks each player's partial derivative with respect to
its own strategy; because sigma is linear in beta, the pseudo-gradient is
affine in beta, F(x; beta) = a(x) + B(x) beta, which is what makes the
learning problem a linear program.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Shapes of strategies, weights, or coefficients do not agree."""


class UnsupportedFamilyError(ValueError):
    """Operation is only defined for the scalar-strategy quadratic family."""


@dataclass(frozen=True)
class QuadraticPayoffParams:
    """Coefficients of the quadratic demand-response payoffs.

    l: positive curvature per player; h: nominal demand per player;
    q: nonnegative price slope; p0: base price.
    """

    l: np.ndarray
    h: np.ndarray
    q: float
    p0: float

    def __post_init__(self):
        object.__setattr__(self, "l", np.asarray(self.l, dtype=float))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if self.l.ndim != 1 or self.h.ndim != 1:
            raise DimensionError("l and h must be 1-d arrays")
        if self.l.shape != self.h.shape:
            raise DimensionError("l and h must have equal length")
        if not np.all(self.l > 0):
            raise ValueError("curvatures l must be strictly positive")
        if self.q < 0:
            raise ValueError("price slope q must be nonnegative")

    @property
    def players(self) -> int:
        return self.l.shape[0]


@dataclass(frozen=True)
class GameConfig:
    """A parametric aggregative game instance.

    budget b is the right-hand side of the shared resource constraint
    sum_i alpha_i^T x_i <= b; it must be positive so the constraint set has
    an interior for bounded positive alpha. beta_true is optional and only
    present for synthetic runs where the data-generating weights are known.
    """

    players: int
    dim: int
    budget: float
    payoff: QuadraticPayoffParams
    beta_true: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.players < 1:
            raise ValueError("players must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.budget > 0:
            raise ValueError("budget must be strictly positive")
        if self.payoff.players != self.players:
            raise DimensionError(
                f"payoff coefficients have length {self.payoff.players}, expected {self.players}"
            )
        if self.beta_true is not None:
            bt = np.asarray(self.beta_true, dtype=float)
            if bt.shape != (self.players,):
                raise DimensionError("beta_true must have one weight per player")
            object.__setattr__(self, "beta_true", bt)


@dataclass(frozen=True)
class AffineGradient:
    """Decomposition F(x; beta) = a + B beta of the pseudo-gradient at a fixed x.

    a has shape (N, n); B has shape (N, n, N) and maps a length-N weight
    vector to an (N, n) gradient contribution.
    """

    a: np.ndarray
    B: np.ndarray

    def apply(self, beta: np.ndarray) -> np.ndarray:
        beta = np.asarray(beta, dtype=float)
        return self.a + self.B @ beta


def _as_profile(x: np.ndarray, players: int, dim: int) -> np.ndarray:
    """Coerce x to an (N, n) strategy profile and validate the shape."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(players, -1) if dim == 1 else x.reshape(players, dim)
    if x.shape != (players, dim):
        raise DimensionError(f"strategy profile has shape {x.shape}, expected ({players}, {dim})")
    return x


def aggregate(x: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Weighted aggregate sigma(x) = sum_i beta_i x_i, a length-n vector."""
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if beta.ndim != 1 or x.shape[0] != beta.shape[0]:
        raise DimensionError("beta must have one weight per strategy row")
    return beta @ x


def payoff_value(i: int, x: np.ndarray, params: QuadraticPayoffParams, beta: np.ndarray) -> float:
    """Cost of player i (1-based) at profile x under the quadratic family."""
    N = params.players
    x = _as_profile(x, N, 1) if np.asarray(x).size == N else np.asarray(x, dtype=float)
    if x.shape != (N, 1):
        raise UnsupportedFamilyError("quadratic payoffs are defined for scalar strategies (n=1)")
    if not 1 <= i <= N:
        raise IndexError(f"player index {i} out of range 1..{N}")
    xi = float(x[i - 1, 0])
    sigma = float(aggregate(x, beta)[0])
    price = params.q * N * sigma + params.p0
    return float(params.l[i - 1] * (xi - params.h[i - 1]) ** 2 + price * xi)


def pseudo_gradient(x: np.ndarray, beta: np.ndarray, params: QuadraticPayoffParams) -> np.ndarray:
    """Stacked own-strategy gradients F(x; beta), shape (N, 1).

    For the quadratic family,
    F_i = 2 l_i (x_i - h_i) + 2 q N beta_i x_i + q N sum_{j != i} beta_j x_j + p0.
    """
    N = params.players
    x = _as_profile(x, N, 1)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (N,):
        raise DimensionError("beta must have one weight per player")
    xv = x[:, 0]
    qN = params.q * N
    f = 2.0 * params.l * (xv - params.h) + qN * (beta @ xv) + qN * beta * xv + params.p0
    return f[:, None]


def affine_decomposition(x: np.ndarray, params: QuadraticPayoffParams) -> AffineGradient:
    """Split the pseudo-gradient at x into its beta-free and beta-linear parts.

    a_i = 2 l_i (x_i - h_i) + p0 and B[i, 0, j] = q N x_j for j != i,
    2 q N x_i for j = i, so that pseudo_gradient(x, beta) == a + B beta.
    """
    N = params.players
    x = _as_profile(x, N, 1)
    xv = x[:, 0]
    qN = params.q * N
    a = (2.0 * params.l * (xv - params.h) + params.p0)[:, None]
    B = np.tile(qN * xv, (N, 1))
    B[np.diag_indices(N)] = 2.0 * qN * xv
    return AffineGradient(a=a, B=B[:, None, :])


def gradient_jacobian(params: QuadraticPayoffParams, beta: np.ndarray) -> np.ndarray:
    """Constant Jacobian of x -> pseudo_gradient(x, beta) for the quadratic family.

    Diagonal entries 2 l_i + 2 q N beta_i, off-diagonal (i, j) = q N beta_j.
    """
    N = params.players
    beta = np.asarray(beta, dtype=float)
    qN = params.q * N
    jac = np.tile(qN * beta, (N, 1))
    jac[np.diag_indices(N)] += 2.0 * params.l + qN * beta
    return jac


def monotonicity_certificate(
    params: QuadraticPayoffParams,
    beta: np.ndarray,
    x_domain_bound: float | None = None,
) -> tuple[float, float]:
    """Strong-monotonicity modulus and Lipschitz constant of the pseudo-gradient.

    Returns (mu, L): mu is the smallest eigenvalue of the symmetric part of
    the constant Jacobian and L its spectral norm. mu may be <= 0 for
    adversarial weights; callers deciding solver step sizes must check.
    The quadratic family has a constant Jacobian, so x_domain_bound is
    accepted for interface uniformity but unused.
    """
    del x_domain_bound
    jac = gradient_jacobian(params, beta)
    sym = 0.5 * (jac + jac.T)
    mu = float(np.linalg.eigvalsh(sym)[0])
    lip = float(np.linalg.norm(jac, 2))
    return mu, lip
