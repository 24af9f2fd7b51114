"""Variational equilibrium solver for the deterministic game at a fixed alpha.

Solves the coupled fixed-point system

    x* = proj_{>=0}(x* - (F(x*; beta) + lambda* alpha))
    lambda* = proj_{>=0}(lambda* + (alpha . x* - b))

by a projected extragradient iteration on the primal-dual pair (x, lambda).
The plain projected primal-dual (forward-backward) update with step mu/L^2
oscillates and diverges on this system when the constraint coefficients are
large relative to mu, because the dual coupling is skew; the extragradient
correction step damps that rotation and converges linearly for the affine
quadratic family whenever the pseudo-gradient is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameConfig, monotonicity_certificate, pseudo_gradient


class MonotonicityError(RuntimeError):
    """The pseudo-gradient is not certifiably strongly monotone."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and step sizes for the equilibrium solvers.

    When step_primal/step_dual are None, steps are derived from the
    monotonicity certificate: tau = rho = 0.9 / (L + ||alpha||), a safe
    bound on the Lipschitz constant of the full primal-dual operator.
    """

    tol: float = 1e-10
    max_iters: int = 10**6
    step_primal: float | None = None
    step_dual: float | None = None
    allow_nonmonotone: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        for s in (self.step_primal, self.step_dual):
            if s is not None and not s > 0:
                raise ValueError("step sizes must be positive")


@dataclass(frozen=True)
class VgneResult:
    """Converged (or best-effort) equilibrium of the fixed-alpha game."""

    x_star: np.ndarray
    lambda_star: float
    residual: float
    iterations: int
    converged: bool


def _alpha_vector(config: GameConfig, alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    a = a.reshape(config.players) if a.size == config.players else a
    if a.shape != (config.players,):
        raise ValueError(f"alpha must have shape ({config.players},) for scalar strategies")
    if not np.all(np.isfinite(a)):
        raise ValueError("alpha must be finite")
    return a


def kkt_residual(config: GameConfig, alpha, x, lam: float, beta: np.ndarray | None = None) -> float:
    """Max-norm of the two unit-step fixed-point defects at (x, lambda).

    Zero exactly at a variational equilibrium; used both as the solver
    stopping rule and as a standalone diagnostic.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    a = _alpha_vector(config, alpha)
    xv = np.asarray(x, dtype=float).reshape(config.players)
    if beta is None:
        beta = config.beta_true
    if beta is None:
        raise ValueError("weights are required: pass beta or set config.beta_true")
    f = pseudo_gradient(xv[:, None], beta, config.payoff)[:, 0]
    defect_x = np.abs(xv - np.maximum(0.0, xv - (f + lam * a))).max()
    defect_l = abs(lam - max(0.0, lam + (a @ xv - config.budget)))
    return float(max(defect_x, defect_l))


def solve_vgne_batch(
    config: GameConfig,
    alphas: np.ndarray,
    opts: SolverOptions | None = None,
    beta: np.ndarray | None = None,
) -> list[VgneResult]:
    """Solve one equilibrium per row of alphas, shape (B, N).

    All instances iterate in lockstep with converged columns frozen, so each
    result is bitwise identical to a standalone solve_vgne call with the
    same options.
    """
    opts = opts or SolverOptions()
    if beta is None:
        beta = config.beta_true
    if beta is None:
        raise ValueError("weights are required: pass beta or set config.beta_true")
    beta = np.asarray(beta, dtype=float)
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    B, N = alphas.shape
    if N != config.players:
        raise ValueError(f"alphas must have {config.players} columns")
    if not np.all(np.isfinite(alphas)):
        raise ValueError("alpha must be finite")

    params = config.payoff
    mu, lip = monotonicity_certificate(params, beta)
    if mu <= 0 and not opts.allow_nonmonotone:
        raise MonotonicityError(
            f"pseudo-gradient not strongly monotone (mu={mu:.3e}); "
            "pass allow_nonmonotone=True to override"
        )
    alpha_norms = np.linalg.norm(alphas, axis=1)
    if opts.step_primal is not None:
        tau = np.full(B, opts.step_primal)
    else:
        tau = 0.9 / (lip + alpha_norms)
    rho = np.full(B, opts.step_dual) if opts.step_dual is not None else tau.copy()

    b = config.budget
    qN = params.q * N
    l2 = 2.0 * params.l
    h = params.h
    p0 = params.p0

    def grad(x):
        # batched pseudo-gradient, x shape (B, N)
        sigma = x @ beta
        return l2 * (x - h) + qN * sigma[:, None] + qN * beta * x + p0

    x = np.zeros((B, N))
    lam = np.zeros(B)
    active = np.ones(B, dtype=bool)
    iters = np.zeros(B, dtype=int)
    converged = np.zeros(B, dtype=bool)
    residual = np.full(B, np.inf)
    best_x = x.copy()
    best_lam = lam.copy()
    best_res = np.full(B, np.inf)

    tol = opts.tol
    for k in range(1, opts.max_iters + 1):
        fx = grad(x) + lam[:, None] * alphas
        gx = np.einsum("bi,bi->b", alphas, x) - b

        # unit-step residual and complementarity, from the same operator values
        defect_x = np.abs(x - np.maximum(0.0, x - fx)).max(axis=1)
        defect_l = np.abs(lam - np.maximum(0.0, lam + gx))
        res = np.maximum(defect_x, defect_l)
        improved = active & (res < best_res)
        best_res[improved] = res[improved]
        best_x[improved] = x[improved]
        best_lam[improved] = lam[improved]
        done = active & (res <= tol) & (np.abs(lam * gx) <= 10.0 * tol)
        residual[done] = res[done]
        iters[done] = k - 1
        converged[done] = True
        active &= ~done
        if not active.any():
            break

        xm = np.maximum(0.0, x - tau[:, None] * fx)
        lm = np.maximum(0.0, lam + rho * gx)
        fm = grad(xm) + lm[:, None] * alphas
        gm = np.einsum("bi,bi->b", alphas, xm) - b
        x_new = np.maximum(0.0, x - tau[:, None] * fm)
        lam_new = np.maximum(0.0, lam + rho * gm)
        x = np.where(active[:, None], x_new, x)
        lam = np.where(active, lam_new, lam)

    still = active
    residual[still] = best_res[still]
    iters[still] = opts.max_iters
    x[still] = best_x[still]
    lam[still] = best_lam[still]

    return [
        VgneResult(
            x_star=x[i].copy()[:, None],
            lambda_star=float(lam[i]),
            residual=float(residual[i]),
            iterations=int(iters[i]),
            converged=bool(converged[i]),
        )
        for i in range(B)
    ]


def solve_vgne(
    config: GameConfig,
    alpha,
    opts: SolverOptions | None = None,
    beta: np.ndarray | None = None,
) -> VgneResult:
    """Equilibrium of the fixed-alpha game; see the module docstring.

    Refuses instances whose monotonicity certificate is nonpositive unless
    opts.allow_nonmonotone is set. On hitting max_iters the best iterate is
    returned with converged=False.
    """
    a = _alpha_vector(config, alpha)
    return solve_vgne_batch(config, a[None, :], opts, beta=beta)[0]


def vi_gap(
    config: GameConfig,
    alpha,
    x_star,
    probes,
    beta: np.ndarray | None = None,
    feas_tol: float = 1e-9,
) -> float:
    """Smallest directional value F(x*)^T (x - x*) over the probe points.

    Every probe must lie in the constraint set {x >= 0, alpha . x <= b};
    a converged equilibrium cannot produce a materially negative value.
    """
    a = _alpha_vector(config, alpha)
    xv = np.asarray(x_star, dtype=float).reshape(config.players)
    if not np.all(np.isfinite(xv)):
        raise ValueError("x_star must be finite")
    if beta is None:
        beta = config.beta_true
    f = pseudo_gradient(xv[:, None], beta, config.payoff)[:, 0]
    pts = np.atleast_2d(np.asarray(probes, dtype=float))
    if pts.shape[1] != config.players:
        raise ValueError("probes must have one column per player")
    if (pts < -feas_tol).any():
        raise ValueError("probe with negative component is infeasible")
    loads = pts @ a
    if (loads > config.budget + feas_tol).any():
        raise ValueError("probe violates the budget constraint")
    return float(((pts - xv) @ f).min())
