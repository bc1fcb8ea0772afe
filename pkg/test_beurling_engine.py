"""
hardy_factor - Beurling engine tests
Wandering subspaces, inner extraction and its certificates
"""

import logging

import numpy as np
import pytest

from core.config import DEFAULT_TOLERANCES
from core.errors import ContainmentError, NotDoublyCommutingError, ShapeMismatchError
from hardy_core import DegreeWindow, HardyElement, OperatorSymbol
from subspace_lab import SubspaceBasis, doubly_commuting_test, orthonormalize, submodule_span
from beurling_engine import (
    InnerCertificate,
    beurling_factor,
    canonical_columns,
    extract_inner,
    innerness_certificate,
    joint_wandering,
    random_inner_symbol,
    span_of_symbol,
    unitary_alignment,
    verify_wandering_decomposition,
    wandering_space,
)

logger = logging.getLogger(__name__)

MONOMIAL_THETA = OperatorSymbol.from_terms(2, 3, 2, {
    (1, 0): [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    (0, 2): [[0.0, 0.0], [0.0, 0.6], [0.0, 0.8]],
})


@pytest.fixture(scope="module")
def z1_z2_span():
    window = DegreeWindow(2, 4)
    return submodule_span([HardyElement.monomial(window, (1, 0)),
                           HardyElement.monomial(window, (0, 1))], window)


@pytest.fixture(scope="module")
def monomial_span():
    return span_of_symbol(MONOMIAL_THETA, DegreeWindow(2, 5))


def _random_unitary(rng, size):
    q, r = np.linalg.qr(rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def test_canonical_columns_undo_unitary_mixing():
    rng = np.random.default_rng(4)
    eye = np.eye(4, dtype=np.complex128)
    mixed = eye[:, [0, 2]] @ _random_unitary(rng, 2)
    basis = canonical_columns(mixed)
    assert np.allclose(basis, eye[:, [0, 2]], atol=1e-12)


def test_wandering_space_of_shifted_constants():
    """S = z_1 H²(D) has S ⊖ z_1 S = span{z_1}."""
    window = DegreeWindow(1, 4)
    S = submodule_span([HardyElement.monomial(window, (1,))], window)
    W = wandering_space(S, 1)
    assert W.dim == 1
    assert abs(abs(W.columns[1, 0]) - 1.0) < 1e-12


def test_extract_inner_recovers_monomial_symbol(monomial_span):
    logger.info("🧪 TEST: extraction of a monomial inner symbol")
    theta, certificate = extract_inner(monomial_span)
    assert theta.shape == (3, 2)
    assert theta.max_coefficient_deviation(MONOMIAL_THETA) < 1e-12
    assert certificate.passed
    assert certificate.sample_count == 64


def test_extract_inner_reuses_commutator_report(monomial_span, z1_z2_span):
    report = doubly_commuting_test(monomial_span)
    theta, certificate = extract_inner(monomial_span, commutator=report)
    assert theta.max_coefficient_deviation(MONOMIAL_THETA) < 1e-12
    assert certificate.passed

    failing = doubly_commuting_test(z1_z2_span)
    with pytest.raises(NotDoublyCommutingError) as excinfo:
        extract_inner(z1_z2_span, commutator=failing)
    assert excinfo.value.report is failing


def test_beurling_factor_certificates(monomial_span):
    factorization = beurling_factor(monomial_span)
    assert all(check.passed for check in factorization.checks())
    assert factorization.wandering.cross_check_distance <= 1e-8
    assert factorization.invariance_residual <= 1e-8
    payload = factorization.to_dict()
    assert payload["innerCertificate"]["pass"] is True
    assert payload["wandering"]["jointDim"] == 2


@pytest.mark.parametrize("trial", range(25))
def test_random_inner_round_trip(trial):
    """span(Θ) is doubly commuting and extraction returns an inner Θ' with the same range."""
    rng = np.random.default_rng(1000 + trial)
    n = int(rng.integers(1, 4))
    rows = int(rng.integers(1, 5))
    cols = int(rng.integers(1, rows + 1))
    theta = random_inner_symbol(rng, n, rows, cols, max_degree=2)
    S = span_of_symbol(theta, DegreeWindow(n, 6))

    report = doubly_commuting_test(S, 1e-8)
    assert report.verdict, f"trial {trial}: max pair norm {report.max_pair_norm:.3e}"

    factorization = beurling_factor(S)
    assert factorization.theta.cols == cols
    assert factorization.inner_certificate.passed
    assert factorization.range_distance <= 1e-8
    assert factorization.decomposition.gram_deviation <= 1e-10
    assert factorization.decomposition.span_residual <= 1e-8
    _, residual = unitary_alignment(factorization.theta, theta)
    assert residual <= 1e-8, f"trial {trial}: Θ' is not Θ·U (residual {residual:.3e})"


def test_non_doubly_commuting_extraction_fails(z1_z2_span):
    with pytest.raises(NotDoublyCommutingError) as excinfo:
        extract_inner(z1_z2_span)
    assert excinfo.value.stage == "doubly-commuting"
    assert excinfo.value.report.witness_pair == (1, 2)


def test_wandering_family_of_z1_z2_is_not_orthonormal(z1_z2_span):
    logger.info("🧪 TEST: wandering decomposition fails for {z1, z2}")
    data = joint_wandering(z1_z2_span)
    assert data.joint.dim == 2
    assert data.cross_check_distance is None
    certificate = verify_wandering_decomposition(z1_z2_span, data.joint)
    assert certificate.gram_deviation >= 0.5
    assert not certificate.passed


def test_wandering_space_outside_submodule_is_rejected():
    window = DegreeWindow(1, 3)
    S = submodule_span([HardyElement.monomial(window, (1,))], window)
    constants = orthonormalize([HardyElement.monomial(window, (0,))])
    with pytest.raises(ContainmentError):
        verify_wandering_decomposition(S, constants)


def test_zero_submodule_has_no_inner_factor():
    with pytest.raises(ShapeMismatchError):
        extract_inner(SubspaceBasis.zero(DegreeWindow(2, 3), 1))


def test_innerness_certificate_detects_contraction():
    certificate = innerness_certificate(MONOMIAL_THETA * 0.5, guard_degree=2, grid=4)
    assert not certificate.passed
    assert certificate.gram_deviation == pytest.approx(0.75)
    assert certificate.sample_count == 16
    restored = InnerCertificate.from_dict(certificate.to_dict())
    assert restored.passed == certificate.passed


def test_unitary_alignment_recovers_rotation():
    rng = np.random.default_rng(9)
    U = _random_unitary(rng, 2)
    fitted, residual = unitary_alignment(MONOMIAL_THETA.right_multiply(U), MONOMIAL_THETA)
    assert residual < 1e-12
    assert np.allclose(fitted, U, atol=1e-12)

    _, residual = unitary_alignment(MONOMIAL_THETA * 2.0, MONOMIAL_THETA)
    assert residual >= 1.0


def test_random_inner_symbol_is_inner():
    rng = np.random.default_rng(0)
    theta = random_inner_symbol(rng, 2, 4, 3)
    assert innerness_certificate(theta, 2, tolerance=DEFAULT_TOLERANCES.inner).passed
    with pytest.raises(ShapeMismatchError):
        random_inner_symbol(rng, 2, 2, 3)
