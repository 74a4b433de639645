"""Classical sparse-recovery baselines: l1 minimization and hard thresholding.

Basis pursuit treats only the linear part of each measurement, which is the
standard compressed-sensing baseline these quadratic systems are compared
against.  Iterative hard thresholding attacks the quadratic objective
directly with a gradient step and a fixed sparsity projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qbp.model import DimensionMismatchError, QuadraticSystem, evaluate
from qbp.admm import soft_threshold

__all__ = [
    "InfeasibleLinearSystemError",
    "LinearizedProblem",
    "linearize",
    "basis_pursuit",
    "hard_threshold",
    "IHTConfig",
    "iht_objective",
    "iht_gradient",
    "iterative_hard_thresholding",
]


class InfeasibleLinearSystemError(ValueError):
    """The linearized equality constraints admit no solution."""


@dataclass(frozen=True)
class LinearizedProblem:
    """Equality-constrained l1 problem min ||x||_1 s.t. A x = y."""

    A: np.ndarray
    y: np.ndarray


def linearize(system: QuadraticSystem) -> LinearizedProblem:
    """Keep only the terms linear in x: row i is b_i^H + c_i^T, offset a_i.

    Folding the two linear terms into one matrix is exact whenever c is zero
    or the signal is real; a complex signal with nonzero c also has an
    anti-linear contribution that a single matrix cannot carry.
    """
    a, b, c, _ = system._abcq
    A = b.conj() + c
    return LinearizedProblem(A=A, y=system.y - a)


def basis_pursuit(problem: LinearizedProblem, tol: float = 1e-6,
                  max_iters: int = 10000, rho: float = 1.0,
                  full_output: bool = False):
    """Minimum-l1 solution of A x = y via ADMM on the vector splitting.

    The returned vector is an exact projection onto the constraint set, so
    its equality residual is at the level of the pseudoinverse.  Raises
    :class:`InfeasibleLinearSystemError` when no solution exists.
    """
    A = np.asarray(problem.A, dtype=complex)
    y = np.asarray(problem.y, dtype=complex)
    pinv = np.linalg.pinv(A)
    x0 = pinv @ y
    gap = np.linalg.norm(A @ x0 - y)
    if gap > tol * max(1.0, np.linalg.norm(y)):
        raise InfeasibleLinearSystemError(
            f"linearized constraints are inconsistent: least-squares gap {gap:.3e}"
        )
    nvar = A.shape[1]
    x = np.zeros(nvar, dtype=complex)
    z = np.zeros(nvar, dtype=complex)
    u = np.zeros(nvar, dtype=complex)
    iterations = max_iters
    for it in range(1, max_iters + 1):
        x = z - u
        x = x - pinv @ (A @ x - y)
        z_prev = z
        z = soft_threshold(x + u, 1.0 / rho)
        u = u + x - z
        r_norm = np.linalg.norm(x - z)
        s_norm = rho * np.linalg.norm(z - z_prev)
        eps_pri = np.sqrt(nvar) * 1e-8 + 1e-6 * max(
            np.linalg.norm(x), np.linalg.norm(z)
        )
        eps_dual = np.sqrt(nvar) * 1e-8 + 1e-6 * rho * np.linalg.norm(u)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            iterations = it
            break
        if r_norm > 10.0 * s_norm:
            rho *= 2.0
            u /= 2.0
        elif s_norm > 10.0 * r_norm:
            rho /= 2.0
            u *= 2.0
    if full_output:
        return x, iterations
    return x


def hard_threshold(x, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries; ties go to the lowest index."""
    x = np.asarray(x)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k >= x.size:
        return x.copy()
    order = np.argsort(-np.abs(x), kind="stable")
    out = np.zeros_like(x)
    keep = order[:k]
    out[keep] = x[keep]
    return out


@dataclass(frozen=True)
class IHTConfig:
    k: int
    step0: float = 1.0
    shrink: float = 0.5
    max_iters: int = 1000
    stall_tol: float = 1e-10
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if self.step0 <= 0:
            raise ValueError("step0 must be positive")


def iht_objective(system: QuadraticSystem, x) -> float:
    """Half the squared residual of the quadratic measurements at x."""
    diff = evaluate(system, x) - system.y
    return 0.5 * float(np.vdot(diff, diff).real)


def iht_gradient(system: QuadraticSystem, x) -> np.ndarray:
    """Gradient of the residual objective with respect to the complex x.

    Computed as twice the conjugate-coordinate derivative, so the real and
    imaginary parts are the partial derivatives in Re x and Im x.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (system.n,):
        raise DimensionMismatchError(
            f"x has shape {x.shape}, system dimension is {system.n}"
        )
    _, b, c, q = system._abcq
    r = evaluate(system, x) - system.y
    lin = c + np.einsum("nij,j->ni", q, x)
    lin_conj = b + np.einsum("nji,j->ni", q.conj(), x)
    return r.conj() @ lin + r @ lin_conj


def iterative_hard_thresholding(system: QuadraticSystem, config: IHTConfig,
                                x0=None, full_output: bool = False):
    """Projected gradient descent onto the k-sparse set with backtracking.

    Each iteration restarts the line search from ``step0`` and halves the
    step until the objective strictly decreases; the run stops when no step
    down to 1e-20 helps or the relative decrease stalls.  The best iterate
    seen is returned, so a k-sparse zero-residual starting point comes back
    unchanged.  ``x0`` (argument, falling back to ``config.x0``) sets the
    starting point; default is the zero vector.
    """
    if x0 is None:
        x0 = config.x0
    if x0 is None:
        x = np.zeros(system.n, dtype=complex)
    else:
        x = np.asarray(x0, dtype=complex).copy()
        if x.shape != (system.n,):
            raise DimensionMismatchError(
                f"x0 has shape {x.shape}, system dimension is {system.n}"
            )
    g = iht_objective(system, x)
    best_x, best_g = x, g
    iterations = 0
    for it in range(1, config.max_iters + 1):
        iterations = it
        grad = iht_gradient(system, x)
        eta = config.step0
        cand = None
        while eta >= 1e-20:
            trial = hard_threshold(x - eta * grad, config.k)
            g_trial = iht_objective(system, trial)
            if g_trial < g:
                cand = (trial, g_trial)
                break
            eta *= config.shrink
        if cand is None:
            break
        x, g_new = cand
        rel = (g - g_new) / max(g, 1e-300)
        g = g_new
        if g < best_g:
            best_x, best_g = x, g
        if rel < config.stall_tol:
            break
    if full_output:
        return best_x, iterations, best_g
    return best_x
