"""Signal extraction, success judging, and recoverability diagnostics."""

import numpy as np
import pytest

from qbp.admm import SolverConfig, solve
from qbp.generators import general_quadratic, pure_phase
from qbp.model import (
    DimensionMismatchError,
    QuadraticMeasurement,
    QuadraticSystem,
    lift,
    vec_measurement_matrix,
)
from qbp.recovery import (
    CoherenceCertificate,
    DegenerateMatrixError,
    RipEstimate,
    align_phase,
    build_report,
    certify_coherence,
    extract_phase_signal,
    extract_signal,
    judge_success,
    mutual_coherence,
    sample_rip,
)

from support import (
    measurement_from_phi,
    random_hermitian,
    system_from_phis,
    unitary_sensing_system,
)


def test_extract_signal_exact_lift():
    x = np.array([2.0, 0.0, -1.0], dtype=complex)
    x_hat, rank_ratio = extract_signal(lift(x))
    assert np.allclose(x_hat, x, atol=1e-12)
    assert rank_ratio < 1e-12


def test_extract_signal_perturbed_lift():
    rng = np.random.default_rng(0)
    x = np.array([1.0 + 1j, 0.0, 0.5], dtype=complex)
    H = random_hermitian(4, rng)
    H /= np.linalg.norm(H)
    x_hat, rank_ratio = extract_signal(lift(x) + 1e-6 * H)
    assert np.linalg.norm(x_hat - x) < 1e-4
    assert rank_ratio < 1e-5


def test_extract_signal_flags_high_rank():
    _, rank_ratio = extract_signal(np.eye(3, dtype=complex))
    assert np.isclose(rank_ratio, 1.0)


def test_extract_signal_degenerate_inputs():
    with pytest.raises(DegenerateMatrixError):
        extract_signal(np.zeros((3, 3)))
    # dominant component with no corner weight has nothing to normalize
    Z = np.zeros((3, 3), dtype=complex)
    Z[1, 1] = 5.0
    with pytest.raises(DegenerateMatrixError):
        extract_signal(Z)


def test_extract_phase_signal_block_diagonal():
    rng = np.random.default_rng(1)
    x = np.array([0.0, 1.0 - 2j, 0.0, 0.5], dtype=complex)
    Z = np.zeros((5, 5), dtype=complex)
    Z[0, 0] = 1.0
    Z[1:, 1:] = np.outer(x, x.conj())
    x_hat, rank_ratio = extract_phase_signal(Z)
    assert rank_ratio < 1e-12
    # defined up to a global phase only
    t = np.vdot(x_hat, x)
    assert np.allclose(x_hat * (t / abs(t)), x, atol=1e-10)


def test_extract_phase_signal_degenerate_inputs():
    with pytest.raises(DegenerateMatrixError):
        extract_phase_signal(np.array([[1.0]]))
    Z = np.diag([1.0, -1.0, -2.0]).astype(complex)
    with pytest.raises(DegenerateMatrixError):
        extract_phase_signal(Z)


def test_judge_success_exact_and_phase_flip():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    ok, err = judge_success(x, x)
    assert ok and err < 1e-12
    ok, err = judge_success(-x, x, phase_invariant=True)
    assert ok and err < 1e-7
    ok, err = judge_success(-x, x, phase_invariant=False)
    assert not ok and np.isclose(err, 2.0)


def test_judge_success_known_error():
    x = np.zeros(4, dtype=complex)
    x[2] = 1.0
    x_hat = x.copy()
    x_hat[0] += 0.1
    ok, err = judge_success(x_hat, x, tol=0.05)
    assert not ok
    assert np.isclose(err, 0.1)


def test_judge_success_zero_truth():
    ok, err = judge_success(np.zeros(3), np.zeros(3))
    assert ok and err == 0.0
    ok, err = judge_success(np.ones(3), np.zeros(3))
    assert not ok and err == np.inf


def test_judge_success_phase_symmetry():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    x_hat = x + 0.01 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
    _, base = judge_success(x_hat, x)
    for theta in (0.3, 1.7, -2.2):
        _, rotated = judge_success(np.exp(1j * theta) * x_hat, x)
        assert np.isclose(rotated, base, rtol=1e-10)


def test_judge_success_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        judge_success(np.zeros(3), np.zeros(4))


def test_align_phase():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    rotated = np.exp(1.3j) * x
    assert np.allclose(align_phase(rotated, x), x, atol=1e-12)
    orthogonal = np.zeros(5, dtype=complex)
    assert np.array_equal(align_phase(orthogonal, x), orthogonal)


def test_mutual_coherence_examples():
    mu, skipped = mutual_coherence(np.eye(4))
    assert mu == 0.0 and skipped == 0
    mu, skipped = mutual_coherence(np.array([[1.0, 1.0], [2.0, 2.0]]))
    assert np.isclose(mu, 1.0)
    mu, skipped = mutual_coherence(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert np.isclose(mu, 1.0 / np.sqrt(2.0))


def test_mutual_coherence_skips_zero_columns():
    B = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    mu, skipped = mutual_coherence(B)
    assert skipped == 1
    assert np.isclose(mu, 1.0 / np.sqrt(2.0))
    with pytest.raises(ValueError):
        mutual_coherence(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_certificate_fires_on_unitary_sensing():
    x = np.array([0.0, 2.0, 0.0], dtype=complex)
    system = unitary_sensing_system(x, "dft")
    result = solve(system, 0.5, SolverConfig(eps_abs=1e-7, eps_rel=1e-7,
                                             max_iters=20000))
    cert = certify_coherence(system, result.Z)
    assert isinstance(cert, CoherenceCertificate)
    assert cert.mu < 1e-10
    assert cert.skipped_columns == 0
    assert cert.cardinality == 4  # (k + 1)^2 with k = 1
    assert cert.certified
    x_hat, _ = extract_signal(result.Z)
    ok, err = judge_success(x_hat, x, tol=1e-6)
    assert ok, f"certified instance must recover the plant, error {err:.2e}"


def test_certificate_refuses_coherent_sensing():
    # one measurement whose coefficient matrix is all ones: every matricized
    # column is identical, so mu = 1 and the sparsity bound is 1
    phi = np.ones((2, 2), dtype=complex)
    system = system_from_phis([phi], np.array([2.0], dtype=complex))
    cert = certify_coherence(system, lift(np.array([2.0])))
    assert np.isclose(cert.mu, 1.0)
    assert np.isclose(cert.bound, 1.0)
    assert not cert.certified


def test_certificate_refuses_high_rank():
    x = np.array([1.0, 0.0], dtype=complex)
    system = unitary_sensing_system(x, "dft")
    cert = certify_coherence(system, np.eye(3, dtype=complex))
    assert cert.rank_ratio > 0.9
    assert not cert.certified


def test_certificate_counts_unseen_entries():
    # a diagonal-only sensing set never observes off-diagonal entries; the
    # skipped columns must void the certificate even for a perfect rank-one Z
    m = 3
    phis = [np.zeros((m, m), dtype=complex) for _ in range(m)]
    for i in range(m):
        phis[i][i, i] = 1.0
    x = np.array([1.0, 0.0], dtype=complex)
    system = system_from_phis(phis, x)
    cert = certify_coherence(system, lift(x))
    assert cert.skipped_columns == m * m - m
    assert not cert.certified


def test_certificate_cardinality_uses_zero_tolerance():
    x = np.array([0.0, 3.0], dtype=complex)
    system = unitary_sensing_system(x, "dft")
    Z = lift(x)
    Z[0, 1] += 1e-12  # numerically invisible dust
    Z[1, 0] += 1e-12
    cert = certify_coherence(system, Z)
    assert cert.cardinality == 4
    explicit = certify_coherence(system, Z, zero_tol=1e-15)
    assert explicit.cardinality == 6


def test_sample_rip_isometric_basis():
    # coefficient matrices forming an orthonormal Hermitian basis make the
    # lifted map an exact isometry in the Frobenius norm
    m = 3
    phis = [np.zeros((m, m), dtype=complex) for _ in range(m)]
    for i in range(m):
        phis[i][i, i] = 1.0
    for i in range(m):
        for j in range(i + 1, m):
            re = np.zeros((m, m), dtype=complex)
            re[i, j] = re[j, i] = 1.0 / np.sqrt(2.0)
            im = np.zeros((m, m), dtype=complex)
            im[i, j] = 1j / np.sqrt(2.0)
            im[j, i] = -1j / np.sqrt(2.0)
            phis.extend([re, im])
    system = system_from_phis(phis, np.zeros(m - 1, dtype=complex))
    est = sample_rip(system, k=3, samples=50, seed=0)
    assert isinstance(est, RipEstimate)
    assert est.epsilon < 1e-10
    assert est.k == 3 and est.samples == 50

    doubled = system_from_phis([2.0 * p for p in phis], np.zeros(m - 1, dtype=complex))
    est2 = sample_rip(doubled, k=3, samples=50, seed=0)
    assert np.isclose(est2.epsilon, 3.0, atol=1e-10)


def test_sample_rip_seed_determinism():
    system, _ = pure_phase(4, 10, 2, "gaussian", seed=7)
    a = sample_rip(system, k=4, samples=30, seed=11)
    b = sample_rip(system, k=4, samples=30, seed=11)
    assert a == b
    c = sample_rip(system, k=4, samples=30, seed=12)
    assert c.epsilon != a.epsilon


def test_sample_rip_validates_arguments():
    system, _ = pure_phase(3, 6, 1, "gaussian", seed=0)
    with pytest.raises(ValueError):
        sample_rip(system, k=0)
    with pytest.raises(ValueError):
        sample_rip(system, k=17)
    with pytest.raises(ValueError):
        sample_rip(system, k=2, samples=0)


def test_build_report_phase_invariant_path():
    system, x = pure_phase(6, 24, 2, "gaussian", seed=1)
    result = solve(system, 5.0, SolverConfig(eps_abs=1e-6, eps_rel=1e-6,
                                             max_iters=30000))
    report = build_report(system, result, x, tol=1e-3, phase_invariant=True)
    assert report.success
    assert report.error < 1e-3
    assert report.sparsity == 2
    assert report.rank_ratio < 1e-3
    assert report.feasibility_residual < 1e-3
    assert report.termination == "converged"
    assert report.lam == 5.0
    assert report.iterations == result.iterations


def test_build_report_corner_path():
    # linear terms couple the corner to the signal, so extraction reads the
    # corner-normalized rank-one factor and no phase freedom remains
    system, x = general_quadratic(6, 30, 2, "binary", seed=3)
    result = solve(system, 10.0, SolverConfig(eps_abs=1e-6, eps_rel=1e-6,
                                              max_iters=30000))
    report = build_report(system, result, x, tol=1e-3, phase_invariant=False)
    assert report.success
    assert np.allclose(report.x_hat, x, atol=1e-3)


def test_build_report_without_truth():
    system, _ = pure_phase(5, 20, 1, "gaussian", seed=2)
    result = solve(system, 2.0, SolverConfig(eps_abs=1e-5, eps_rel=1e-5,
                                             max_iters=20000))
    report = build_report(system, result)
    assert report.success is None
    assert report.error is None
    assert report.x_hat.shape == (5,)
