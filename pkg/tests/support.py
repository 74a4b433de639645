"""Shared instance builders for the test suite."""

import numpy as np

from qbp.model import (
    QuadraticMeasurement,
    QuadraticSystem,
    evaluate,
    lift,
    measure_lifted,
)


def cgauss(rng, shape=None):
    """Circular complex Gaussian draws with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_hermitian(m, rng):
    A = cgauss(rng, (m, m))
    H = 0.5 * (A + A.conj().T)
    np.fill_diagonal(H, H.diagonal().real)
    return H


def random_measurement(n, rng, real=False):
    """Generic dense measurement with an arbitrary right-hand side."""
    if real:
        return QuadraticMeasurement(
            rng.standard_normal(),
            rng.standard_normal(n),
            rng.standard_normal(n),
            rng.standard_normal((n, n)),
            rng.standard_normal(),
        )
    return QuadraticMeasurement(
        cgauss(rng), cgauss(rng, n), cgauss(rng, n), cgauss(rng, (n, n)), cgauss(rng)
    )


def random_system(n, N, rng, real=False):
    """Generic system; the right-hand sides need not be attainable."""
    return QuadraticSystem([random_measurement(n, rng, real) for _ in range(N)])


def consistent_system(n, N, rng, real=False):
    """Generic system measured at a planted point, so the lifted set is nonempty."""
    x = rng.standard_normal(n) if real else cgauss(rng, n)
    base = [random_measurement(n, rng, real) for _ in range(N)]
    y = evaluate(QuadraticSystem(base), x)
    meas = [
        QuadraticMeasurement(m.a, m.b, m.c, m.Q, v) for m, v in zip(base, y)
    ]
    return QuadraticSystem(meas), x


def measurement_from_phi(phi, y=0.0):
    """Measurement whose lifted coefficient matrix is exactly ``phi``."""
    return QuadraticMeasurement(
        phi[0, 0], phi[0, 1:].conj(), phi[1:, 0], phi[1:, 1:], y
    )


def system_from_phis(phis, x):
    """System with the given coefficient matrices, measured at lift(x)."""
    probe = QuadraticSystem([measurement_from_phi(p, 0.0) for p in phis])
    y = measure_lifted(probe, lift(x))
    return QuadraticSystem(
        [measurement_from_phi(p, v) for p, v in zip(phis, y)]
    )


def unitary_sensing_system(x, kind="dft", rng=None):
    """Measurements whose matricized rows form a unitary basis.

    The (n+1)^2 coefficient matrices are the reshaped rows of a unitary
    matrix, so they pin the lifted matrix completely and the vectorized
    operator has exactly orthonormal columns.
    """
    x = np.asarray(x, dtype=complex)
    m = x.size + 1
    M = m * m
    if kind == "dft":
        p = np.arange(M)
        U = np.exp(-2j * np.pi * np.outer(p, p) / M) / np.sqrt(M)
    elif kind == "haar":
        Q, _ = np.linalg.qr(cgauss(rng, (M, M)))
        U = Q.conj().T
    else:
        raise ValueError(f"unknown sensing kind {kind!r}")
    phis = [U[r].reshape(m, m).T for r in range(M)]
    return system_from_phis(phis, x)
