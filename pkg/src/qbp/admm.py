"""Consensus ADMM for the lifted trace-plus-l1 semidefinite programs.

The equality-constrained program

    min Tr(X) + lam * ||X||_1   s.t.  Tr(Phi_i X) = y_i,  X[0,0] = 1,  X >= 0

is split over two primal copies: X1 carries the affine constraints (plus the
trace term), X2 carries the positive-semidefinite cone, and the consensus
variable Z carries the l1 shrinkage.  The denoising variant replaces the
exact affine projection with a penalized least-squares step and sweeps the
penalty weight until the residual budget is met.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from qbp.model import (
    QuadraticSystem,
    constraint_system,
    hermitianize,
    measure_lifted,
    real_measurement_matrix,
    realvec,
    unrealvec,
)

__all__ = [
    "InfeasibleProjectionError",
    "SolverConfig",
    "SolverResult",
    "AffineProjector",
    "project_affine",
    "project_psd",
    "soft_threshold",
    "update_z",
    "update_rho",
    "data_residual",
    "solve",
    "solve_denoising",
]


logger = logging.getLogger(__name__)


class InfeasibleProjectionError(ValueError):
    """The affine constraint set is empty (inconsistent measurements)."""


@dataclass(frozen=True)
class SolverConfig:
    rho0: float = 1.0
    eps_abs: float = 1e-3
    eps_rel: float = 1e-3
    max_iters: int = 10000
    mu: float = 10.0
    tau_incr: float = 2.0
    tau_decr: float = 2.0
    rho_min: float = 1e-8
    rho_max: float = 1e8
    rescale_duals: bool = False
    check_iterates: bool = False
    betas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.mu <= 0 or self.tau_incr <= 1 or self.tau_decr <= 1:
            raise ValueError("rho adaptation needs mu > 0 and tau factors > 1")


@dataclass(frozen=True)
class SolverResult:
    """Final consensus iterate plus per-iteration telemetry.

    ``residuals`` has one row per iteration with columns (primal norm, dual
    norm, rho); ``objective`` tracks Tr(Z) + lam * ||Z||_1.  For denoising
    runs ``beta`` is the accepted penalty weight and ``data_residual`` the
    sum of squared measurement residuals at the returned iterate.
    """

    Z: np.ndarray
    iterations: int
    termination: str
    residuals: np.ndarray
    objective: np.ndarray
    lam: float
    rho_final: float
    beta: float | None = None
    data_residual: float | None = None

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


class AffineProjector:
    """Frobenius projection onto {X Hermitian: Tr(Phi_i X) = y_i, X[0,0] = 1}.

    The pseudoinverse of the real constraint matrix is computed once; each
    call is two matrix-vector products in realvec coordinates.
    """

    def __init__(self, system: QuadraticSystem):
        A, b = constraint_system(system)
        self._A = A
        self._b = b
        self._pinv = np.linalg.pinv(A)
        # least-squares residual > 0 means no Hermitian matrix satisfies
        # the constraints at all
        gap = np.linalg.norm(A @ (self._pinv @ b) - b)
        if gap > 1e-6 * np.linalg.norm(b):
            raise InfeasibleProjectionError(
                f"constraints are inconsistent: least-squares gap {gap:.3e}"
            )

    def __call__(self, M, rho: float | None = None) -> np.ndarray:
        v = realvec(M)
        v = v - self._pinv @ (self._A @ v - self._b)
        return unrealvec(v)


def project_affine(system: QuadraticSystem) -> AffineProjector:
    """Build the affine projector for a system, validating feasibility."""
    return AffineProjector(system)


class _PenalizedStep:
    """Prox of (beta/2) * sum of squared residuals with X[0,0] pinned to 1.

    Solved through one thin SVD of the constraint matrix (minus its corner
    column), reused across iterations and rho changes.
    """

    def __init__(self, system: QuadraticSystem, beta: float):
        B, y = real_measurement_matrix(system)
        g = y - B[:, 0]
        B1 = B[:, 1:]
        _, s, Vt = np.linalg.svd(B1, full_matrices=False)
        self._Vt = Vt
        self._s2 = s * s
        self._bg = beta * (B1.T @ g)
        self._beta = beta

    def __call__(self, M, rho: float) -> np.ndarray:
        v = realvec(M)
        rhs = self._bg + rho * v[1:]
        coeff = 1.0 / (self._beta * self._s2 + rho) - 1.0 / rho
        w = rhs / rho + self._Vt.T @ (coeff * (self._Vt @ rhs))
        out = np.empty(v.size)
        out[0] = 1.0
        out[1:] = w
        return unrealvec(out)


def project_psd(M) -> np.ndarray:
    """Nearest positive-semidefinite matrix in Frobenius norm."""
    H = hermitianize(M)
    w, V = np.linalg.eigh(H)
    if w[0] >= 0.0:
        return H
    w = np.maximum(w, 0.0)
    return hermitianize((V * w) @ V.conj().T)


def soft_threshold(x, q: float):
    """Complex soft threshold: 0 where |x| <= q, else shrink |x| by q."""
    x = np.asarray(x)
    mag = np.abs(x)
    scale = np.where(mag > q, (mag - q) / np.where(mag > 0, mag, 1.0), 0.0)
    out = x * scale
    return out.item() if out.ndim == 0 else out


def update_z(X1, X2, Y1, Y2, rho: float, lam: float) -> np.ndarray:
    """Consensus update: shrink the dual-corrected primal average."""
    V = 0.5 * (X1 + X2) + 0.5 * (Y1 + Y2) / rho
    return hermitianize(soft_threshold(V, 0.5 * lam / rho))


def update_rho(rho: float, r_norm: float, s_norm: float, config: SolverConfig) -> float:
    """Rebalance the penalty; skipped when it would leave [rho_min, rho_max]."""
    if r_norm > config.mu * s_norm:
        new = rho * config.tau_incr
    elif s_norm > config.mu * r_norm:
        new = rho / config.tau_decr
    else:
        return rho
    if new < config.rho_min or new > config.rho_max:
        return rho
    return new


def data_residual(system: QuadraticSystem, X) -> float:
    """Sum of squared measurement residuals |y_i - Tr(Phi_i X)|^2."""
    diff = system.y - measure_lifted(system, X)
    return float(np.vdot(diff, diff).real)


def _check_iterates(system, X1, X2, exact_affine):
    for name, M in (("X1", X1), ("X2", X2)):
        dev = np.max(np.abs(M - M.conj().T))
        if dev > 1e-10:
            raise ValueError(f"{name} lost Hermitian symmetry: {dev:.3e}")
    w = np.linalg.eigvalsh(hermitianize(X2))
    if w[0] < -1e-8:
        raise ValueError(f"X2 left the PSD cone: min eigenvalue {w[0]:.3e}")
    if exact_affine:
        viol = np.max(np.abs(measure_lifted(system, X1) - system.y))
        scale = 1.0 + float(np.max(np.abs(system.y)))
        if viol > 1e-6 * scale or abs(X1[0, 0] - 1.0) > 1e-6:
            raise ValueError(f"X1 violates the affine constraints: {viol:.3e}")


def _admm(system: QuadraticSystem, lam: float, config: SolverConfig, x1_step):
    m = system.n + 1
    eye = np.eye(m)
    X1 = eye.astype(complex)
    X2 = eye.astype(complex)
    Z = eye.astype(complex)
    Y1 = np.zeros((m, m), dtype=complex)
    Y2 = np.zeros((m, m), dtype=complex)
    rho = config.rho0
    dim = float(system.n)
    exact_affine = isinstance(x1_step, AffineProjector)

    res_trace = []
    obj_trace = []
    termination = "max_iters"
    iterations = config.max_iters
    chatty = logger.isEnabledFor(logging.DEBUG)
    for it in range(1, config.max_iters + 1):
        Z_prev = Z
        X1 = x1_step(Z - (eye + Y1) / rho, rho)
        X2 = project_psd(Z - Y2 / rho)
        Z = update_z(X1, X2, Y1, Y2, rho, lam)
        Y1 = Y1 + rho * (X1 - Z)
        Y2 = Y2 + rho * (X2 - Z)

        d1 = np.linalg.norm(X1 - Z)
        d2 = np.linalg.norm(X2 - Z)
        r_norm = np.sqrt(d1 * d1 + d2 * d2)
        s_norm = rho * np.sqrt(2.0) * np.linalg.norm(Z - Z_prev)
        xbar_norm = 0.5 * np.linalg.norm(X1 + X2)
        ybar_norm = 0.5 * np.linalg.norm(Y1 + Y2)
        eps_pri = dim * config.eps_abs + config.eps_rel * max(xbar_norm, np.linalg.norm(Z))
        eps_dual = dim * config.eps_abs + config.eps_rel * ybar_norm

        res_trace.append((r_norm, s_norm, rho))
        obj_trace.append(float(np.trace(Z).real + lam * np.abs(Z).sum()))
        if config.check_iterates:
            _check_iterates(system, X1, X2, exact_affine)
        if chatty and it % 100 == 0:
            logger.debug(
                "iter %d: r=%.3e s=%.3e rho=%.3e obj=%.6f",
                it, r_norm, s_norm, rho, obj_trace[-1],
            )

        if r_norm <= eps_pri and s_norm <= eps_dual:
            termination = "converged"
            iterations = it
            break

        new_rho = update_rho(rho, r_norm, s_norm, config)
        if new_rho != rho and config.rescale_duals:
            Y1 *= new_rho / rho
            Y2 *= new_rho / rho
        rho = new_rho

    logger.debug("terminated (%s) after %d iterations", termination, iterations)
    return Z, iterations, termination, np.array(res_trace), np.array(obj_trace), rho


def solve(system: QuadraticSystem, lam: float = 1.0,
          config: SolverConfig | None = None) -> SolverResult:
    """Solve the equality-constrained lifted program.

    Raises :class:`InfeasibleProjectionError` when the measurement
    constraints admit no Hermitian matrix at all.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    config = config or SolverConfig()
    step = AffineProjector(system)
    Z, iterations, termination, res, obj, rho = _admm(system, lam, config, step)
    return SolverResult(
        Z=Z,
        iterations=iterations,
        termination=termination,
        residuals=res,
        objective=obj,
        lam=lam,
        rho_final=rho,
        data_residual=data_residual(system, Z),
    )


def solve_denoising(system: QuadraticSystem, lam: float, epsilon: float,
                    config: SolverConfig | None = None) -> SolverResult:
    """Solve the residual-budget variant.

    The measurement equalities are relaxed to a penalized least-squares term
    with weight beta; beta is swept upward until the returned iterate keeps
    the sum of squared residuals within ``epsilon``.  If no beta in the sweep
    achieves the budget, the closest iterate is returned with termination
    ``"constraint_unattained"``.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    config = config or SolverConfig()
    betas = config.betas if config.betas is not None else tuple(np.logspace(-2, 8, 11))
    best = None
    for beta in betas:
        step = _PenalizedStep(system, float(beta))
        Z, iterations, termination, res, obj, rho = _admm(system, lam, config, step)
        result = SolverResult(
            Z=Z,
            iterations=iterations,
            termination=termination,
            residuals=res,
            objective=obj,
            lam=lam,
            rho_final=rho,
            beta=float(beta),
            data_residual=data_residual(system, Z),
        )
        if result.data_residual <= epsilon:
            return result
        if best is None or result.data_residual < best.data_residual:
            best = result
    return replace(best, termination="constraint_unattained")
