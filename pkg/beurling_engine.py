"""
hardy_factor - Beurling Engine
==============================

Wandering subspaces of a submodule S, the orthogonal decomposition
S = ⊕_k z^k 𝒲, and the constructive extraction of an inner Θ with
ran M_Θ = S for doubly commuting S.

Θ is read off the joint wandering space 𝒲 = ⋂_i (S ⊖ z_i S): column j of Θ
is the j-th canonical basis vector of 𝒲 as an E-valued polynomial.
Canonical basis: vectors ordered by leading graded-lex position, leading
coefficient real positive.
"""

import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import scipy.linalg

from core.config import DEFAULT_TOLERANCES, Tolerances, get_settings
from core.errors import ContainmentError, NonBeurlingError, NotDoublyCommutingError, ShapeMismatchError
from core.verdicts import Check
from hardy_core import (
    DegreeWindow,
    OperatorSymbol,
    assemble_mult_matrix,
    columns_to_tensor,
    evaluate_on_points,
    isometry_deviation,
    shift_columns,
    torus_grid,
)
from subspace_lab import (
    CommutatorReport,
    SubspaceBasis,
    compress_shift,
    doubly_commuting_test,
    intersect,
    multiples_matrix,
    orthonormal_columns,
    projection_distance,
    submodule_span,
)

logger = logging.getLogger("hardy_factor")

# Leading rows below this norm are treated as numerically absent.
LEADING_ROW_TOL = 1e-8


# ============================================================================
# Records
# ============================================================================

@dataclass
class WanderingData:
    per_variable: List[SubspaceBasis]
    joint: SubspaceBasis
    cross_check_distance: Optional[float] = None
    containment_residual: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "perVariableDims": [w.dim for w in self.per_variable],
            "jointDim": self.joint.dim,
            "joint": self.joint.to_dict(),
            "crossCheckDistance": self.cross_check_distance,
            "containmentResidual": float(self.containment_residual),
        }


@dataclass
class InnerCertificate:
    """Coefficient-Gram and torus-sampled isometry defects of Θ."""

    gram_deviation: float
    torus_deviation_max: float
    sample_count: int
    guard_degree: int
    tolerance: float = DEFAULT_TOLERANCES.inner

    @property
    def passed(self) -> bool:
        return self.gram_deviation <= self.tolerance and self.torus_deviation_max <= self.tolerance

    def checks(self) -> List[Check]:
        return [
            Check("gram deviation", self.gram_deviation, self.tolerance, "<=", "extract-inner"),
            Check("torus deviation", self.torus_deviation_max, self.tolerance, "<=", "extract-inner"),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gramDeviation": float(self.gram_deviation),
            "torusDeviationMax": float(self.torus_deviation_max),
            "sampleCount": int(self.sample_count),
            "guardDegree": int(self.guard_degree),
            "pass": self.passed,
            "tolerance": float(self.tolerance),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "InnerCertificate":
        return cls(
            gram_deviation=float(data["gramDeviation"]),
            torus_deviation_max=float(data["torusDeviationMax"]),
            sample_count=int(data["sampleCount"]),
            guard_degree=int(data["guardDegree"]),
            tolerance=float(data.get("tolerance", DEFAULT_TOLERANCES.inner)),
        )


@dataclass
class WanderingCertificate:
    """Orthonormality and completeness of {z^k w_j} on the guard window."""

    gram_deviation: float
    span_residual: float
    family_size: int
    guard_degree: int
    gram_tolerance: float = DEFAULT_TOLERANCES.inner
    span_tolerance: float = DEFAULT_TOLERANCES.projection

    @property
    def passed(self) -> bool:
        return self.gram_deviation <= self.gram_tolerance and self.span_residual <= self.span_tolerance

    def checks(self) -> List[Check]:
        return [
            Check("wandering family gram deviation", self.gram_deviation,
                  self.gram_tolerance, "<=", "wandering"),
            Check("wandering family span residual", self.span_residual,
                  self.span_tolerance, "<=", "wandering"),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gramDeviation": float(self.gram_deviation),
            "spanResidual": float(self.span_residual),
            "familySize": int(self.family_size),
            "guardDegree": int(self.guard_degree),
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WanderingCertificate":
        return cls(float(data["gramDeviation"]), float(data["spanResidual"]),
                   int(data["familySize"]), int(data["guardDegree"]))


@dataclass
class BeurlingFactorization:
    """Everything extract-inner produces for one submodule."""

    theta: OperatorSymbol
    inner_certificate: InnerCertificate
    commutator: CommutatorReport
    wandering: WanderingData
    decomposition: WanderingCertificate
    range_distance: float
    invariance_residual: float
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    def checks(self) -> List[Check]:
        checks = self.commutator.checks()
        checks += self.inner_certificate.checks()
        checks.append(Check("range distance ran M_theta vs S", self.range_distance,
                            self.tolerances.projection, "<=", "extract-inner"))
        checks += self.decomposition.checks()
        checks.append(Check("wandering invariance residual", self.invariance_residual,
                            self.tolerances.commutator, "<=", "wandering"))
        return checks

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": self.theta.to_dict(),
            "innerCertificate": self.inner_certificate.to_dict(),
            "commutator": self.commutator.to_dict(),
            "wandering": self.wandering.to_dict(),
            "decomposition": self.decomposition.to_dict(),
            "rangeDistance": float(self.range_distance),
            "invarianceResidual": float(self.invariance_residual),
        }


# ============================================================================
# Wandering subspaces
# ============================================================================

def canonical_columns(columns: np.ndarray, chop: float = DEFAULT_TOLERANCES.chop) -> np.ndarray:
    """Canonical orthonormal basis of span(columns).

    Repeatedly takes the first basis position where the remaining span is
    nonzero, keeps the normalized projection of that basis vector, and
    continues in the orthogonal complement of that position.
    """
    remaining = np.asarray(columns, dtype=np.complex128)
    picked = []
    while remaining.shape[1]:
        norms = np.linalg.norm(remaining, axis=1)
        live = np.nonzero(norms > LEADING_ROW_TOL)[0]
        if live.size == 0:
            break
        row = remaining[live[0]]
        picked.append(remaining @ (row.conj() / norms[live[0]]))
        remaining = remaining @ scipy.linalg.null_space(row[None, :])
    if not picked:
        return np.zeros((remaining.shape[0], 0), dtype=np.complex128)
    basis = np.stack(picked, axis=1)
    basis[np.abs(basis) <= chop] = 0.0
    return basis


def _complement_projector(S: SubspaceBasis, i: int) -> np.ndarray:
    r = compress_shift(S, i)
    return np.eye(S.dim, dtype=np.complex128) - r @ r.conj().T


def wandering_space(S: SubspaceBasis, i: int,
                    rank_tol: float = DEFAULT_TOLERANCES.rank) -> SubspaceBasis:
    """𝒲_i = S ⊖ z_i S, from I − R_i R_i* applied to S's guard-window vectors."""
    block = S.columns @ (_complement_projector(S, i) @ S.guard_coordinates())
    return SubspaceBasis(S.window, S.dim_e, orthonormal_columns(block, rank_tol))


def joint_wandering(S: SubspaceBasis, report: Optional[CommutatorReport] = None,
                    tolerances: Tolerances = DEFAULT_TOLERANCES) -> WanderingData:
    """All 𝒲_i and their intersection, in canonical basis.

    When ``report`` certifies S as doubly commuting the intersection is
    compared with the range of Π_i (I − R_i R_i*).
    """
    per_variable = [wandering_space(S, i, tolerances.rank) for i in range(1, S.n + 1)]
    joint = intersect(per_variable, tolerances.rank)
    joint = SubspaceBasis(S.window, S.dim_e, canonical_columns(joint.columns, tolerances.chop))
    containment = S.residual(joint.columns) if joint.dim else 0.0

    cross_check = None
    if report is not None and report.verdict:
        product = S.guard_coordinates()
        for i in range(1, S.n + 1):
            product = _complement_projector(S, i) @ product
        ranged = SubspaceBasis(S.window, S.dim_e,
                               orthonormal_columns(S.columns @ product, tolerances.rank))
        cross_check = projection_distance(ranged, joint)
        if cross_check > tolerances.projection:
            logger.warning(f"⚠️  joint wandering space disagrees with the projection product "
                           f"(distance {cross_check:.3e})")
    logger.info(f"🌊 wandering dims {[w.dim for w in per_variable]}, joint {joint.dim}")
    return WanderingData(per_variable, joint, cross_check, containment)


def _wandering_family(W: SubspaceBasis, bound: int) -> np.ndarray:
    blocks = [multiples_matrix(w, W.window, bound) for w in W.elements()]
    if not blocks:
        return np.zeros((W.ambient_dim, 0), dtype=np.complex128)
    return np.hstack(blocks)


def verify_wandering_decomposition(S: SubspaceBasis, W: SubspaceBasis,
                                   tolerances: Tolerances = DEFAULT_TOLERANCES) -> WanderingCertificate:
    """Certify S = ⊕_k z^k W on the guard window."""
    if W.window != S.window or W.dim_e != S.dim_e:
        raise ShapeMismatchError("wandering space and submodule live in different ambient spaces")
    residual = S.residual(W.columns) if W.dim else 0.0
    if residual > tolerances.orthonormality:
        raise ContainmentError(f"wandering space is not contained in S (residual {residual:.3e})",
                               report={"residual": residual})

    guard_degree = S.window.d - 1
    family = _wandering_family(W, guard_degree)
    if family.shape[1]:
        gram = family.conj().T @ family
        gram_deviation = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    else:
        gram_deviation = 0.0

    targets = S.guard_vectors()
    if targets.shape[1]:
        span = orthonormal_columns(family, tolerances.rank)
        off = targets - span @ (span.conj().T @ targets)
        span_residual = float(np.max(np.linalg.norm(off, axis=0)))
    else:
        span_residual = 0.0

    certificate = WanderingCertificate(gram_deviation, span_residual, family.shape[1], guard_degree,
                                       tolerances.inner, tolerances.projection)
    status = "✅" if certificate.passed else "❌"
    logger.info(f"{status} wandering decomposition: gram {gram_deviation:.2e}, "
                f"span residual {span_residual:.2e} ({family.shape[1]} shifted vectors)")
    return certificate


def wandering_invariance_residual(S: SubspaceBasis, data: WanderingData) -> float:
    """max over i ≠ j of the distance of R_i 𝒲_j and R_i* 𝒲_j from 𝒲_j."""
    worst = 0.0
    n = S.n
    for i, j in permutations(range(1, n + 1), 2):
        W = data.per_variable[j - 1]
        if W.dim == 0:
            continue
        backward = S.columns @ (compress_shift(S, i).conj().T @ (S.columns.conj().T @ W.columns))
        worst = max(worst, W.residual(backward))
        low = W.columns @ W.degree_coordinates(S.window.d - 2)
        if low.shape[1]:
            forward = shift_columns(low, S.window, S.dim_e, i)
            worst = max(worst, W.residual(S.project_vectors(forward)))
    return worst


# ============================================================================
# Inner functions
# ============================================================================

def innerness_certificate(theta: OperatorSymbol, guard_degree: int,
                          grid: Optional[int] = None,
                          tolerance: float = DEFAULT_TOLERANCES.inner) -> InnerCertificate:
    """Gram defect of {z^k θ_j : k ≤ guard_degree} and the sampled torus defect."""
    grid = grid or get_settings().torus_grid
    guard_degree = max(int(guard_degree), 0)
    samples = torus_grid(theta.n, grid)
    if theta.cols == 0:
        return InnerCertificate(0.0, 0.0, samples.shape[0], guard_degree, tolerance)
    matrix = assemble_mult_matrix(theta, DegreeWindow(theta.n, guard_degree))
    gram = matrix.conj().T @ matrix
    gram_deviation = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    torus_deviation = isometry_deviation(evaluate_on_points(theta, samples))
    certificate = InnerCertificate(gram_deviation, torus_deviation, samples.shape[0],
                                   guard_degree, tolerance)
    status = "✅ inner" if certificate.passed else "❌ not inner"
    logger.info(f"🔬 {status}: gram {gram_deviation:.2e}, torus {torus_deviation:.2e} "
                f"({samples.shape[0]} samples, guard degree {guard_degree})")
    return certificate


def theta_from_columns(columns: np.ndarray, window: DegreeWindow, dim_e: int,
                       chop: float = DEFAULT_TOLERANCES.chop) -> OperatorSymbol:
    tensor = columns_to_tensor(columns, window, dim_e)
    return OperatorSymbol(window, dim_e, tensor.shape[-1], tensor).trimmed(chop)


def inner_guard_degree(window: DegreeWindow, theta: OperatorSymbol) -> int:
    return max(window.d - 1 - theta.max_degree, 0)


def guard_range_distance(S: SubspaceBasis, theta: OperatorSymbol,
                         tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Projection distance between S and Θ·H² restricted to the guard window."""
    if theta.cols == 0:
        return 0.0 if S.guard_coordinates().shape[1] == 0 else 1.0
    span = submodule_span(theta.columns(), S.window, tolerances.rank)
    left = SubspaceBasis(S.window, S.dim_e, S.guard_vectors())
    right = SubspaceBasis(S.window, S.dim_e, span.guard_vectors())
    return projection_distance(left, right)


def _extract(S: SubspaceBasis, tolerances: Tolerances, grid: Optional[int],
             report: Optional[CommutatorReport] = None):
    if S.dim == 0:
        raise ShapeMismatchError("inner extraction needs a nonzero submodule")
    if report is None:
        report = doubly_commuting_test(S, tolerances.commutator)
    if not report.verdict:
        raise NotDoublyCommutingError(
            f"submodule is not doubly commuting (max pair norm {report.max_pair_norm:.3e} "
            f"> {report.tolerance:.1e}); no inner Θ with ran M_Θ = S", report=report)
    data = joint_wandering(S, report, tolerances)
    if data.joint.dim > S.dim_e:
        raise NonBeurlingError(
            f"joint wandering space has dimension {data.joint.dim} > dimE = {S.dim_e}",
            report=data)
    theta = theta_from_columns(data.joint.columns, S.window, S.dim_e, tolerances.chop)
    certificate = innerness_certificate(theta, inner_guard_degree(S.window, theta), grid,
                                        tolerances.inner)
    return theta, certificate, report, data


def extract_inner(S: SubspaceBasis, tolerances: Tolerances = DEFAULT_TOLERANCES,
                  grid: Optional[int] = None,
                  commutator: Optional[CommutatorReport] = None) -> Tuple[OperatorSymbol, InnerCertificate]:
    """Inner Θ (dimE × dim 𝒲) with ran M_Θ = S, plus its innerness certificate.

    A ``commutator`` report already computed for S is reused instead of re-testing.
    """
    theta, certificate, _, _ = _extract(S, tolerances, grid, commutator)
    logger.info(f"✅ extracted Θ: {theta.rows}×{theta.cols}, degree {theta.degree()}")
    return theta, certificate


def beurling_factor(S: SubspaceBasis, tolerances: Tolerances = DEFAULT_TOLERANCES,
                    grid: Optional[int] = None) -> BeurlingFactorization:
    """extract_inner plus range, decomposition and wandering-invariance certificates."""
    theta, certificate, report, data = _extract(S, tolerances, grid)
    distance = guard_range_distance(S, theta, tolerances)
    decomposition = verify_wandering_decomposition(S, data.joint, tolerances)
    invariance = wandering_invariance_residual(S, data)
    logger.info(f"📊 Beurling factor: Θ {theta.rows}×{theta.cols}, range distance {distance:.2e}, "
                f"invariance residual {invariance:.2e}")
    return BeurlingFactorization(theta, certificate, report, data, decomposition,
                                 distance, invariance, tolerances)


def unitary_alignment(theta: OperatorSymbol, reference: OperatorSymbol) -> Tuple[np.ndarray, float]:
    """Constant U with Θ ≈ reference·U, fitted on stacked coefficients.

    The returned residual is the larger of the coefficient misfit and the
    unitarity defect ‖U*U − I‖_max.
    """
    if theta.shape != reference.shape:
        raise ShapeMismatchError(f"cannot align {theta.shape} with {reference.shape}")
    window = DegreeWindow(theta.n, max(theta.window.d, reference.window.d))
    target = theta.embed(window).tensor.reshape(-1, theta.cols)
    source = reference.embed(window).tensor.reshape(-1, reference.cols)
    u, *_ = scipy.linalg.lstsq(source, target)
    misfit = float(np.max(np.abs(source @ u - target), initial=0.0))
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1])), initial=0.0))
    return u, max(misfit, defect)


# ============================================================================
# Random inner symbols
# ============================================================================

def random_inner_symbol(rng: np.random.Generator, n: int, rows: int, cols: int,
                        max_degree: int = 2) -> OperatorSymbol:
    """V·diag(z^{k_j}) with V a random constant isometry and k_j random exponents."""
    if cols > rows:
        raise ShapeMismatchError(f"an inner symbol needs cols ≤ rows, got {rows}×{cols}")
    gaussian = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(gaussian)
    phases = np.diag(r) / np.abs(np.diag(r))
    isometry = q * phases[None, :]
    exponents = rng.integers(0, max_degree + 1, size=(cols, n))
    terms: Dict[Tuple[int, ...], np.ndarray] = {}
    for j in range(cols):
        k = tuple(int(x) for x in exponents[j])
        block = terms.setdefault(k, np.zeros((rows, cols), dtype=np.complex128))
        block[:, j] = isometry[:, j]
    return OperatorSymbol.from_terms(n, rows, cols, terms)


def span_of_symbol(theta: OperatorSymbol, window: DegreeWindow,
                   tolerances: Tolerances = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """Θ·H² inside the window."""
    return submodule_span(theta.columns(), window, tolerances.rank)
