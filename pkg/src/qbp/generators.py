"""Random and deterministic instance families for experiments.

Every generator returns ``(system, x_true)`` with the measurement values
computed from ``x_true`` through the same evaluation path the library uses,
so generated instances are exactly consistent.  All randomness flows through
one ``numpy`` generator seeded by the caller; a fixed seed reproduces the
instance bit for bit.
"""

from __future__ import annotations

import numpy as np

from qbp.model import QuadraticMeasurement, QuadraticSystem, evaluate, hermitianize

__all__ = [
    "general_quadratic",
    "pure_phase",
    "fourier_basis",
    "fourier_sparse_image",
    "phantom_image",
    "truncate_fourier",
    "phantom_instance",
]


def _sparse_support(n: int, k: int, rng) -> np.ndarray:
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    return np.sort(rng.choice(n, size=k, replace=False))


def _finalize(parts, x) -> QuadraticSystem:
    # evaluate through the library path so system.y is exactly what
    # evaluate(system, x_true) returns
    probe = QuadraticSystem(
        [QuadraticMeasurement(a, b, c, Q, 0.0) for a, b, c, Q in parts]
    )
    y = evaluate(probe, x)
    return QuadraticSystem(
        [QuadraticMeasurement(a, b, c, Q, yi) for (a, b, c, Q), yi in zip(parts, y)]
    )


def _circular_normal(rng, shape=None):
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def general_quadratic(n: int, N: int, k: int, signal: str = "binary",
                      seed: int = 0):
    """Dense unitarily invariant Gaussian quadratics at a k-sparse signal.

    Each measurement draws a scalar offset, a linear term, and a full (not
    Hermitian) quadratic matrix with i.i.d. circular complex normal entries.
    The signal support is uniform; ``signal`` picks unit or real Gaussian
    values.
    """
    rng = np.random.default_rng(seed)
    support = _sparse_support(n, k, rng)
    x = np.zeros(n, dtype=complex)
    if signal == "binary":
        x[support] = 1.0
    elif signal == "gaussian":
        x[support] = rng.standard_normal(k)
    else:
        raise ValueError(f"unknown signal kind {signal!r}")
    parts = []
    for _ in range(N):
        a = _circular_normal(rng)
        b = _circular_normal(rng, n)
        Q = _circular_normal(rng, (n, n))
        parts.append((a, b, np.zeros(n), Q))
    return _finalize(parts, x), x


def _magnitude_parts(sensing: np.ndarray):
    # |<a_i, x>|^2 = x^H (a_i a_i^H) x with a_i the conjugate of row i;
    # the outer product is symmetrized because fused multiplies leave it
    # Hermitian only up to rounding
    n = sensing.shape[1]
    parts = []
    for row in sensing:
        a_i = row.conj()
        Q = hermitianize(np.outer(a_i, a_i.conj()))
        parts.append((0.0, np.zeros(n), np.zeros(n), Q))
    return parts


def _realify(system: QuadraticSystem) -> QuadraticSystem:
    # magnitude measurements are real by construction; drop the imaginary
    # rounding dust so the induced constraints keep their real structure
    return QuadraticSystem(
        [
            QuadraticMeasurement(m.a, m.b, m.c, m.Q, m.y.real)
            for m in system.measurements
        ]
    )


def pure_phase(n: int, N: int, k: int, signal: str = "gaussian", seed: int = 0):
    """Magnitude-only measurements y_i = |<a_i, x>|^2 with Gaussian a_i."""
    rng = np.random.default_rng(seed)
    support = _sparse_support(n, k, rng)
    x = np.zeros(n, dtype=complex)
    if signal == "binary":
        x[support] = 1.0
    elif signal == "gaussian":
        x[support] = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    else:
        raise ValueError(f"unknown signal kind {signal!r}")
    sensing = (rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))) / np.sqrt(2.0)
    system = _finalize(_magnitude_parts(sensing.conj()), x)
    return _realify(system), x


def fourier_basis(side: int) -> np.ndarray:
    """Inverse 2-D DFT as a matrix on row-major vectorized coefficients.

    ``fourier_basis(s) @ coeffs.ravel()`` equals ``np.fft.ifft2(coeffs).ravel()``
    for an (s, s) coefficient array.
    """
    if side < 1:
        raise ValueError("side must be positive")
    grid = np.arange(side)
    W1 = np.exp(2j * np.pi * np.outer(grid, grid) / side) / side
    return np.kron(W1, W1)


def fourier_sparse_image(side: int, k: int, N: int, seed: int = 0):
    """Magnitude measurements of an image with k active Fourier coefficients.

    The unknown is the coefficient vector; each sensing row is a complex
    Gaussian combination of the inverse-DFT rows, so the measurements probe
    the image the coefficients synthesize.
    """
    rng = np.random.default_rng(seed)
    n = side * side
    support = _sparse_support(n, k, rng)
    x = np.zeros(n, dtype=complex)
    x[support] = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    R = (rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))) / np.sqrt(2.0)
    M = R @ fourier_basis(side)
    system = _finalize(_magnitude_parts(M), x)
    return _realify(system), x


_ELLIPSES = (
    # center x, center y, semi-axis x, semi-axis y, value
    (0.0, 0.0, 0.92, 0.85, 1.0),
    (0.0, -0.05, 0.62, 0.55, 0.4),
    (0.22, 0.12, 0.26, 0.2, 0.85),
    (-0.24, 0.08, 0.18, 0.26, 0.1),
)


def phantom_image(side: int) -> np.ndarray:
    """Deterministic piecewise-constant test image of nested ellipses."""
    if side < 2:
        raise ValueError("side must be at least 2")
    grid = (np.arange(side) - (side - 1) / 2.0) / (side / 2.0)
    v, u = np.meshgrid(grid, grid, indexing="ij")
    img = np.zeros((side, side))
    for cx, cy, rx, ry, val in _ELLIPSES:
        mask = ((u - cx) / rx) ** 2 + ((v - cy) / ry) ** 2 <= 1.0
        img[mask] = val
    return img


def truncate_fourier(image: np.ndarray, k: int) -> np.ndarray:
    """Best k-term DFT approximation that keeps conjugate symmetry.

    Coefficients are grouped with their reflection (q -> -q mod side); groups
    are taken in decreasing energy while they fit the remaining budget, so a
    real image stays real after truncation.  Returns the vectorized k-sparse
    coefficient array.
    """
    image = np.asarray(image, dtype=float)
    side = image.shape[0]
    if image.shape != (side, side):
        raise ValueError("image must be square")
    if not 1 <= k <= side * side:
        raise ValueError(f"k must be in [1, {side * side}]")
    C = np.fft.fft2(image)
    groups = []
    seen = set()
    for p in range(side):
        for q in range(side):
            if (p, q) in seen:
                continue
            pc, qc = (-p) % side, (-q) % side
            if (pc, qc) == (p, q):
                members = ((p, q),)
            else:
                members = ((p, q), (pc, qc))
            seen.update(members)
            energy = sum(abs(C[i, j]) ** 2 for i, j in members)
            groups.append((energy, members))
    groups.sort(key=lambda g: -g[0])
    out = np.zeros((side, side), dtype=complex)
    budget = k
    for energy, members in groups:
        if len(members) <= budget and energy > 0.0:
            for i, j in members:
                out[i, j] = C[i, j]
            budget -= len(members)
        if budget == 0:
            break
    return out.ravel()


def phantom_instance(side: int, k: int, N: int, seed: int = 0):
    """Magnitude measurements of the truncated phantom's Fourier coefficients."""
    x = truncate_fourier(phantom_image(side), k)
    rng = np.random.default_rng(seed)
    n = side * side
    R = (rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))) / np.sqrt(2.0)
    M = R @ fourier_basis(side)
    system = _finalize(_magnitude_parts(M), x)
    return _realify(system), x
