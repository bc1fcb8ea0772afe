"""
hardy_factor - Subspace lab tests
Construction, compressed shifts, the doubly-commuting and reducing tests,
and the defect identity
"""

import logging

import numpy as np
import pytest

from core.errors import NotSubmoduleError, ShapeMismatchError, WindowError
from hardy_core import DegreeWindow, HardyElement, shift_columns
from subspace_lab import (
    CommutatorReport,
    SubspaceBasis,
    compress_shift,
    constants_projection,
    defect_projection,
    doubly_commuting_test,
    intersect,
    orthonormalize,
    project,
    projection_distance,
    reducing_test,
    submodule_span,
)

logger = logging.getLogger(__name__)


@pytest.fixture(scope="module")
def z1_z2_span():
    window = DegreeWindow(2, 4)
    generators = [HardyElement.monomial(window, (1, 0)), HardyElement.monomial(window, (0, 1))]
    return submodule_span(generators, window)


def test_orthonormalize_and_span():
    logger.info("🧪 TEST: subspace construction")
    window = DegreeWindow(1, 3)
    assert orthonormalize([], window=window, dim_e=1).dim == 0
    with pytest.raises(ShapeMismatchError):
        orthonormalize([])

    z = HardyElement.monomial(window, (1,))
    S = submodule_span([z], window)
    assert S.dim == 3
    assert S.orthonormality_error() < 1e-12

    duplicate = orthonormalize([z, 2.0 * z, z + HardyElement.monomial(window, (2,))])
    assert duplicate.dim == 2

    too_big = HardyElement.monomial(DegreeWindow(1, 4), (4,))
    with pytest.raises(WindowError):
        submodule_span([too_big], window)


def test_projection_and_distance():
    window = DegreeWindow(1, 2)
    S = submodule_span([HardyElement.monomial(window, (1,))], window)
    f = HardyElement.from_coefficients(window, 1, {(0,): [1.0], (2,): [3.0]})
    projected = project(S, f)
    assert abs(projected.coefficient((0,))[0]) < 1e-12
    assert projected.coefficient((2,))[0] == pytest.approx(3.0)
    assert projection_distance(S, S) < 1e-12
    assert projection_distance(S, SubspaceBasis.full(window, 1)) == 1.0


def test_intersect():
    window = DegreeWindow(1, 0)
    eye = np.eye(3, dtype=np.complex128)
    a = SubspaceBasis(window, 3, eye[:, [0, 1]])
    b = SubspaceBasis(window, 3, eye[:, [1, 2]])
    both = intersect([a, b])
    assert both.dim == 1
    assert abs(abs(both.columns[1, 0]) - 1.0) < 1e-12
    assert intersect([a, SubspaceBasis.zero(window, 3)]).dim == 0


def test_basis_dict_round_trip(z1_z2_span):
    restored = SubspaceBasis.from_dict(z1_z2_span.to_dict())
    assert restored.dim == z1_z2_span.dim
    assert projection_distance(restored, z1_z2_span) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("dim_e", [1, 2])
def test_defect_identity(n, d, dim_e):
    """The alternating sum of shift products is the projection onto constants."""
    window = DegreeWindow(n, d)
    deviation = np.max(np.abs(defect_projection(window, dim_e) - constants_projection(window, dim_e)))
    assert deviation <= 1e-12


def test_compress_shift_rejects_non_invariant_subspace():
    window = DegreeWindow(1, 2)
    constants = orthonormalize([HardyElement.monomial(window, (0,))])
    with pytest.raises(NotSubmoduleError) as excinfo:
        compress_shift(constants, 1)
    assert excinfo.value.report["direction"] == 1
    assert excinfo.value.stage == "submodule"


def test_full_space_doubly_commutes():
    logger.info("🧪 TEST: H² itself is doubly commuting")
    S = SubspaceBasis.full(DegreeWindow(3, 2), 1)
    report = doubly_commuting_test(S)
    assert len(report.pair_norms) == 3
    assert report.verdict
    assert report.max_pair_norm <= 1e-12
    assert report.witness is None


def test_shifted_space_doubly_commutes():
    window = DegreeWindow(2, 4)
    S = submodule_span([HardyElement.monomial(window, (1, 0))], window)
    assert doubly_commuting_test(S).verdict


def test_z1_z2_is_not_doubly_commuting(z1_z2_span):
    """The maximal ideal of D² fails with norm 1; the witness is z_2."""
    logger.info("🧪 TEST: {z1, z2} commutator witness")
    report = doubly_commuting_test(z1_z2_span, tolerance=1e-8)
    assert not report.verdict
    assert report.max_pair_norm >= 1 - 1e-10
    assert report.witness_pair == (1, 2)
    assert abs(abs(report.witness.coefficient((0, 1))[0]) - 1.0) < 1e-8
    assert report.witness.norm() == pytest.approx(1.0)


def test_commutator_report_ordering_and_dict():
    report = CommutatorReport({(1, 2): 0.0, (1, 3): 0.5, (2, 3): 0.9}, 3, 1e-8)
    assert report.ordered_pairs() == [(2, 3), (1, 3), (1, 2)]
    names = [check.name for check in report.checks()]
    assert names[0] == "commutator R_2R_3* - R_3*R_2"
    assert [check.passed for check in report.checks()] == [False, False, True]

    restored = CommutatorReport.from_dict(report.to_dict())
    assert restored.pair_norms == report.pair_norms
    assert restored.verdict == report.verdict


def test_reducing_test():
    logger.info("🧪 TEST: reducing submodules")
    full = reducing_test(SubspaceBasis.full(DegreeWindow(2, 2), 2))
    assert full.reducing
    assert full.e_star_dim == 2

    window = DegreeWindow(2, 3)
    second = HardyElement.monomial(window, (0, 0), j=1, dim_e=2)
    partial = reducing_test(submodule_span([second], window))
    assert partial.reducing
    assert partial.e_star_dim == 1

    window = DegreeWindow(1, 3)
    shifted = reducing_test(submodule_span([HardyElement.monomial(window, (1,))], window))
    assert not shifted.reducing
    assert shifted.operator == "adjoint"
    assert shifted.direction == 1


def _random_unitary(rng, size):
    q, r = np.linalg.qr(rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def test_intersect_is_commutative_and_idempotent():
    window = DegreeWindow(2, 3)
    a = submodule_span([HardyElement.monomial(window, (1, 0))], window)
    b = submodule_span([HardyElement.monomial(window, (0, 1))], window)
    ab, ba = intersect([a, b]), intersect([b, a])
    assert ab.dim == ba.dim == 9
    assert projection_distance(ab, ba) <= 1e-8
    assert projection_distance(intersect([a, a]), a) <= 1e-8
    assert projection_distance(intersect([ab, a]), ab) <= 1e-8


def test_compressed_shift_is_isometric_on_guard(z1_z2_span):
    guard = z1_z2_span.guard_coordinates()
    for i in (1, 2):
        image = compress_shift(z1_z2_span, i) @ guard
        assert np.max(np.abs(image.conj().T @ image - np.eye(guard.shape[1]))) <= 1e-10


@pytest.mark.parametrize("seed", [0, 1])
def test_commutator_verdict_ignores_basis_choice(z1_z2_span, seed):
    """Pair norms do not depend on which orthonormal basis spans S."""
    rng = np.random.default_rng(seed)
    window = DegreeWindow(2, 4)
    shifted = submodule_span([HardyElement.monomial(window, (1, 0))], window)
    for S in (z1_z2_span, shifted):
        mixed = SubspaceBasis(S.window, S.dim_e, S.columns @ _random_unitary(rng, S.dim))
        original, remixed = doubly_commuting_test(S), doubly_commuting_test(mixed)
        assert remixed.verdict == original.verdict
        assert abs(remixed.max_pair_norm - original.max_pair_norm) <= 1e-8


def _generators(window, spec):
    return [HardyElement.from_coefficients(window, 1, {k: [1.0] for k in terms}) for terms in spec]


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("spec", [
    [[(1, 0)]],
    [[(1, 0)], [(0, 1)]],
    [[(1, 0), (0, 1)]],
    [[(1, 1)]],
    [[(0, 0), (1, 0)]],
])
def test_commutator_matches_dense_computation(d, spec):
    """Pair norm equals ‖(A_1 A_2* − A_2* A_1) V‖ with A_i = P_S M_{z_i} P_S built from raw matrices."""
    window = DegreeWindow(2, d)
    S = submodule_span(_generators(window, spec), window)
    report = doubly_commuting_test(S)

    eye = np.eye(S.ambient_dim, dtype=np.complex128)
    P = S.columns @ S.columns.conj().T
    A = {i: P @ shift_columns(eye, window, 1, i) @ P for i in (1, 2)}
    dense = (A[1] @ A[2].conj().T - A[2].conj().T @ A[1]) @ S.guard_vectors()
    expected = float(np.linalg.norm(dense, 2)) if dense.size else 0.0
    assert abs(report.pair_norms[(1, 2)] - expected) <= 1e-12
