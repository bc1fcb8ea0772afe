"""
hardy_factor - Subspace Lab
===========================

Orthonormal subspaces of coefficient space and the operator tests built on
them:

- orthonormalize / submodule_span / project / intersect
- compress_shift: R_i = P_S M_{z_i}|_S with an invariance check
- doubly_commuting_test: norms of R_i R_j* − R_j* R_i on the guard window
- reducing_test: M_{z_i} and M*_{z_i} invariance, E_* = E ∩ S
- defect_projection: alternating sum of shift products (projection onto constants)

Guard window: operator identities are only asserted on vectors whose
per-variable degree is ≤ d−1, where M_{z_i} never leaves the window.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from core.config import DEFAULT_TOLERANCES
from core.errors import NotSubmoduleError, ShapeMismatchError, WindowError
from core.verdicts import Check
from hardy_core import (
    DegreeWindow,
    HardyElement,
    _check_variable,
    element_from_dict,
    shift_adjoint_columns,
    shift_columns,
)

logger = logging.getLogger("hardy_factor")


# ============================================================================
# Dense helpers
# ============================================================================

def _svd(matrix: np.ndarray, full_matrices: bool = False):
    try:
        return scipy.linalg.svd(matrix, full_matrices=full_matrices, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.warning("⚠️  gesdd did not converge, retrying with gesvd")
        return scipy.linalg.svd(matrix, full_matrices=full_matrices, lapack_driver="gesvd")


def orthonormal_columns(matrix: np.ndarray, rank_tol: float = DEFAULT_TOLERANCES.rank) -> np.ndarray:
    """Orthonormal basis of the column span, singular values ≤ rank_tol·σ_max dropped."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape[1] == 0 or matrix.shape[0] == 0:
        return np.zeros((matrix.shape[0], 0), dtype=np.complex128)
    u, s, _ = _svd(matrix)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((matrix.shape[0], 0), dtype=np.complex128)
    return u[:, s > rank_tol * s[0]]


def null_columns(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of {c : matrix·c ≈ 0}, singular values ≤ tol counted as zero."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    width = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(width, dtype=np.complex128)
    if width == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    _, s, vh = _svd(matrix, full_matrices=True)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def spectral_norm(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(matrix)[0])


def top_singular_pair(matrix: np.ndarray) -> Tuple[float, Optional[np.ndarray]]:
    """Largest singular value and its right singular vector.

    Taken from the top eigenpair of A*A; only that eigenpair is computed.
    """
    if matrix.size == 0:
        return 0.0, None
    gram = matrix.conj().T @ matrix
    last = gram.shape[0] - 1
    values, vectors = scipy.linalg.eigh(gram, subset_by_index=[last, last])
    return float(np.sqrt(max(values[0], 0.0))), vectors[:, 0]


def _max_column_norm(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(matrix, axis=0)))


# ============================================================================
# SubspaceBasis
# ============================================================================

@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Closed subspace of the window's coefficient space, as orthonormal columns."""

    window: DegreeWindow
    dim_e: int
    columns: np.ndarray
    _memo: Dict[Any, Any] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        data = np.array(self.columns, dtype=np.complex128)
        ambient = self.window.size * self.dim_e
        if data.ndim == 1:
            data = data.reshape(ambient, -1) if data.size else np.zeros((ambient, 0), dtype=np.complex128)
        if data.shape[0] != ambient:
            raise ShapeMismatchError(f"basis has {data.shape[0]} rows, ambient dimension is {ambient}")
        if data.shape[1] > ambient:
            raise ShapeMismatchError(f"{data.shape[1]} columns exceed ambient dimension {ambient}")
        data.setflags(write=False)
        object.__setattr__(self, "columns", data)

    @classmethod
    def zero(cls, window: DegreeWindow, dim_e: int) -> "SubspaceBasis":
        return cls(window, dim_e, np.zeros((window.size * dim_e, 0), dtype=np.complex128))

    @classmethod
    def full(cls, window: DegreeWindow, dim_e: int) -> "SubspaceBasis":
        return cls(window, dim_e, np.eye(window.size * dim_e, dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.window.n

    @property
    def ambient_dim(self) -> int:
        return self.window.size * self.dim_e

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def orthonormality_error(self) -> float:
        if self.dim == 0:
            return 0.0
        gram = self.columns.conj().T @ self.columns
        return float(np.max(np.abs(gram - np.eye(self.dim))))

    def project_vectors(self, vectors: np.ndarray) -> np.ndarray:
        return self.columns @ (self.columns.conj().T @ vectors)

    def residual(self, vectors: np.ndarray) -> float:
        """Largest distance from a column of ``vectors`` to the subspace."""
        vectors = np.asarray(vectors, dtype=np.complex128).reshape(self.ambient_dim, -1)
        return _max_column_norm(vectors - self.project_vectors(vectors))

    def elements(self) -> List[HardyElement]:
        return [HardyElement.from_vector(self.window, self.dim_e, self.columns[:, j])
                for j in range(self.dim)]

    def degree_coordinates(self, max_degree: int) -> np.ndarray:
        """Coordinates (dim × g, orthonormal) of the vectors of S supported in degrees ≤ max_degree."""
        key = ("degree", int(max_degree))
        if key not in self._memo:
            if max_degree >= self.window.d:
                coords = np.eye(self.dim, dtype=np.complex128)
            elif max_degree < 0 or self.dim == 0:
                coords = np.zeros((self.dim, 0), dtype=np.complex128)
            else:
                outside = np.any(self.window.index_array > max_degree, axis=1)
                rows = np.repeat(outside, self.dim_e)
                coords = null_columns(self.columns[rows], DEFAULT_TOLERANCES.orthonormality)
            self._memo[key] = coords
        return self._memo[key]

    def guard_coordinates(self) -> np.ndarray:
        return self.degree_coordinates(self.window.d - 1)

    def guard_vectors(self) -> np.ndarray:
        """Orthonormal basis (ambient coordinates) of S ∩ guard window."""
        return self.columns @ self.guard_coordinates()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window.to_dict(),
            "dimE": self.dim_e,
            "columns": [element.to_dict() for element in self.elements()],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SubspaceBasis":
        window = DegreeWindow.from_dict(data["window"])
        dim_e = int(data["dimE"])
        vectors = [element_from_dict(item, window).vector() for item in data.get("columns", [])]
        matrix = (np.stack(vectors, axis=1) if vectors
                  else np.zeros((window.size * dim_e, 0), dtype=np.complex128))
        basis = cls(window, dim_e, matrix)
        error = basis.orthonormality_error()
        if error > DEFAULT_TOLERANCES.orthonormality:
            raise ShapeMismatchError(f"serialized basis is not orthonormal (Gram error {error:.2e})")
        return basis


def _same_ambient(bases: Sequence[SubspaceBasis]) -> None:
    first = bases[0]
    for basis in bases[1:]:
        if basis.window != first.window or basis.dim_e != first.dim_e:
            raise ShapeMismatchError("subspaces live in different ambient spaces")


def projection_distance(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """‖P_a − P_b‖ (spectral norm)."""
    _same_ambient([a, b])
    if a.dim != b.dim:
        return 1.0
    if a.dim == 0:
        return 0.0
    forward = a.columns - b.columns @ (b.columns.conj().T @ a.columns)
    return min(1.0, spectral_norm(forward))


# ============================================================================
# Construction
# ============================================================================

def _element_block(elements: Sequence[HardyElement], window: Optional[DegreeWindow],
                   dim_e: Optional[int]) -> Tuple[DegreeWindow, int, np.ndarray]:
    if not elements:
        if window is None or dim_e is None:
            raise ShapeMismatchError("an empty generator list needs an explicit window and dimE")
        return window, dim_e, np.zeros((window.size * dim_e, 0), dtype=np.complex128)
    window = window or elements[0].window
    dim_e = elements[0].dim_e
    vectors = []
    for element in elements:
        if element.dim_e != dim_e or element.n != window.n:
            raise ShapeMismatchError("generators do not share dimE and variable count")
        vectors.append(element.embed(window).vector())
    return window, dim_e, np.stack(vectors, axis=1)


def orthonormalize(generators: Sequence[HardyElement], rank_tol: float = DEFAULT_TOLERANCES.rank,
                   window: Optional[DegreeWindow] = None,
                   dim_e: Optional[int] = None) -> SubspaceBasis:
    """Orthonormal basis of span(generators); an empty list gives the zero subspace."""
    window, dim_e, block = _element_block(list(generators), window, dim_e)
    return SubspaceBasis(window, dim_e, orthonormal_columns(block, rank_tol))


def multiples_matrix(generator: HardyElement, window: DegreeWindow, bound: int) -> np.ndarray:
    """Columns z^k·g for every k with k + deg(g) ≤ bound in each variable."""
    degree = generator.degree()
    ambient = window.size * generator.dim_e
    if degree is None:
        return np.zeros((ambient, 0), dtype=np.complex128)
    room = np.asarray([bound - x for x in degree], dtype=np.intp)
    if np.any(room < 0):
        return np.zeros((ambient, 0), dtype=np.complex128)
    multipliers = np.indices(tuple(room + 1)).reshape(window.n, -1).T
    matrix = np.zeros((ambient, multipliers.shape[0]), dtype=np.complex128)
    column_index = np.arange(multipliers.shape[0])[:, None]
    offsets = np.arange(generator.dim_e)
    for s, vector in generator.coefficients().items():
        positions = window.positions_of(multipliers + np.asarray(s, dtype=np.intp))
        row_index = positions[:, None] * generator.dim_e + offsets
        matrix[row_index, column_index] += vector[None, :]
    return matrix


def submodule_span(generators: Sequence[HardyElement], window: DegreeWindow,
                   rank_tol: float = DEFAULT_TOLERANCES.rank) -> SubspaceBasis:
    """Span of {z^k g : g a generator, z^k g inside the window}, orthonormalized."""
    generators = list(generators)
    if not generators:
        raise ShapeMismatchError("submodule_span needs at least one generator")
    dim_e = generators[0].dim_e
    blocks = []
    for g in generators:
        if g.n != window.n or g.dim_e != dim_e:
            raise ShapeMismatchError("generators do not share dimE and variable count")
        degree = g.degree()
        if degree is not None and max(degree) > window.d:
            raise WindowError(f"generator of degree {degree} exceeds window d={window.d}")
        blocks.append(multiples_matrix(g.embed(window) if degree is not None else g.truncate(window.d),
                                       window, window.d))
    basis = SubspaceBasis(window, dim_e, orthonormal_columns(np.hstack(blocks), rank_tol))
    logger.info(f"📐 submodule span: {len(generators)} generator(s), dim {basis.dim} "
                f"of {basis.ambient_dim} (n={window.n}, d={window.d})")
    return basis


def project(S: SubspaceBasis, f: HardyElement) -> HardyElement:
    """P_S f."""
    if f.window != S.window or f.dim_e != S.dim_e:
        raise ShapeMismatchError("element and subspace live in different ambient spaces")
    return HardyElement.from_vector(S.window, S.dim_e, S.project_vectors(f.vector()))


def intersect(bases: Sequence[SubspaceBasis], rank_tol: float = DEFAULT_TOLERANCES.rank) -> SubspaceBasis:
    """Intersection via the averaged projection: eigenvalue-1 directions of Σ P_i / m."""
    bases = list(bases)
    if not bases:
        raise ShapeMismatchError("intersect needs at least one subspace")
    _same_ambient(bases)
    first = bases[0]
    if any(b.dim == 0 for b in bases):
        return SubspaceBasis.zero(first.window, first.dim_e)
    stacked = np.hstack([b.columns for b in bases]) / np.sqrt(len(bases))
    u, s, _ = _svd(stacked)
    keep = np.abs(s ** 2 - 1.0) <= rank_tol
    return SubspaceBasis(first.window, first.dim_e, u[:, keep])


# ============================================================================
# Compressed shifts and the doubly-commuting test
# ============================================================================

def compress_shift(S: SubspaceBasis, i: int,
                   invariance_tol: float = DEFAULT_TOLERANCES.invariance) -> np.ndarray:
    """Matrix of P_S M_{z_i}|_S in S's column basis.

    Raises NotSubmoduleError when a guard-window vector of S is moved out of S.
    """
    _check_variable(i, S.n)
    key = ("shift", int(i))
    if key in S._memo:
        return S._memo[key]
    shifted = shift_columns(S.columns, S.window, S.dim_e, i)
    compressed = S.columns.conj().T @ shifted
    guard = S.guard_coordinates()
    if guard.shape[1]:
        moved = shifted @ guard
        residual = _max_column_norm(moved - S.columns @ (compressed @ guard))
        if residual > invariance_tol:
            logger.warning(f"❌ not z_{i}-invariant at window d={S.window.d}: residual {residual:.2e}")
            raise NotSubmoduleError(
                f"subspace is not invariant under z_{i} on the guard window "
                f"(residual {residual:.3e} > {invariance_tol:.1e}); not a submodule at this window",
                report={"direction": int(i), "residual": residual, "tolerance": invariance_tol})
    S._memo[key] = compressed
    return compressed


@dataclass
class CommutatorReport:
    """Norms of R_i R_j* − R_j* R_i restricted to the guard window."""

    pair_norms: Dict[Tuple[int, int], float]
    guard_degree: int
    tolerance: float
    witness_pair: Optional[Tuple[int, int]] = None
    witness: Optional[HardyElement] = None

    @property
    def verdict(self) -> bool:
        return all(norm <= self.tolerance for norm in self.pair_norms.values())

    @property
    def max_pair_norm(self) -> float:
        return max(self.pair_norms.values(), default=0.0)

    def ordered_pairs(self) -> List[Tuple[int, int]]:
        """Offending pairs first (largest norm first), then passing pairs in order."""
        failing = sorted((p for p, v in self.pair_norms.items() if v > self.tolerance),
                         key=lambda p: (-self.pair_norms[p], p))
        passing = sorted(p for p, v in self.pair_norms.items() if v <= self.tolerance)
        return failing + passing

    def checks(self) -> List[Check]:
        return [Check(f"commutator R_{i}R_{j}* - R_{j}*R_{i}", self.pair_norms[(i, j)],
                      self.tolerance, "<=", "doubly-commuting")
                for i, j in self.ordered_pairs()]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pairNorms": [{"pair": [i, j], "norm": float(self.pair_norms[(i, j)])}
                          for i, j in sorted(self.pair_norms)],
            "guardDegree": self.guard_degree,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "maxPairNorm": float(self.max_pair_norm),
            "witnessPair": list(self.witness_pair) if self.witness_pair else None,
            "witness": self.witness.to_dict() if self.witness is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CommutatorReport":
        norms = {tuple(item["pair"]): float(item["norm"]) for item in data["pairNorms"]}
        pair = tuple(data["witnessPair"]) if data.get("witnessPair") else None
        witness = element_from_dict(data["witness"]) if data.get("witness") else None
        return cls(norms, int(data["guardDegree"]), float(data["tolerance"]), pair, witness)


def doubly_commuting_test(S: SubspaceBasis,
                          tolerance: float = DEFAULT_TOLERANCES.commutator) -> CommutatorReport:
    """Certify R_i R_j* = R_j* R_i on the guard window for every pair i < j."""
    n = S.n
    compressed = [compress_shift(S, i) for i in range(1, n + 1)]
    guard = S.guard_coordinates()
    pair_norms: Dict[Tuple[int, int], float] = {}
    best: Tuple[float, Optional[Tuple[int, int]], Optional[np.ndarray]] = (-1.0, None, None)
    for i, j in combinations(range(1, n + 1), 2):
        r_i, r_j = compressed[i - 1], compressed[j - 1]
        defect = r_i @ (r_j.conj().T @ guard) - r_j.conj().T @ (r_i @ guard)
        norm, direction = top_singular_pair(defect)
        pair_norms[(i, j)] = norm
        if norm > best[0] and direction is not None:
            best = (norm, (i, j), direction)
    report = CommutatorReport(pair_norms, S.window.d - 1, tolerance)
    if best[1] is not None and best[0] > tolerance:
        report.witness_pair = best[1]
        report.witness = HardyElement.from_vector(S.window, S.dim_e, S.columns @ (guard @ best[2]))
    status = "✅ doubly commuting" if report.verdict else "❌ not doubly commuting"
    logger.info(f"🔬 {status}: max pair norm {report.max_pair_norm:.3e} "
                f"(guard degree {report.guard_degree}, dim S = {S.dim})")
    return report


# ============================================================================
# Reducing submodules
# ============================================================================

@dataclass
class ReducingReport:
    reducing: bool
    window: DegreeWindow
    e_star: Optional[np.ndarray] = None
    direction: Optional[int] = None
    operator: Optional[str] = None
    residual: float = 0.0
    witness: Optional[HardyElement] = None

    @property
    def e_star_dim(self) -> int:
        return 0 if self.e_star is None else self.e_star.shape[1]

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "reducing": self.reducing,
            "residual": float(self.residual),
            "direction": self.direction,
            "operator": self.operator,
            "witness": self.witness.to_dict() if self.witness is not None else None,
        }
        if self.e_star is not None:
            payload["eStar"] = [[[float(x.real), float(x.imag)] for x in column]
                                for column in self.e_star.T]
        return payload


def _worst_direction(S: SubspaceBasis, images: np.ndarray, sources: np.ndarray):
    """Residual norm off S of ``images`` and the source vector attaining it."""
    off = images - S.project_vectors(images)
    norm, direction = top_singular_pair(off)
    if direction is None:
        return 0.0, None
    return norm, HardyElement.from_vector(S.window, S.dim_e, sources @ direction)


def reducing_test(S: SubspaceBasis, tolerance: float = DEFAULT_TOLERANCES.invariance) -> ReducingReport:
    """Test M_{z_i} and M*_{z_i} invariance; a reducing S equals H²_{E_*} with E_* = E ∩ S."""
    guard_vectors = S.guard_vectors()
    for i in range(1, S.n + 1):
        if guard_vectors.shape[1]:
            forward = shift_columns(guard_vectors, S.window, S.dim_e, i)
            norm, witness = _worst_direction(S, forward, guard_vectors)
            if norm > tolerance:
                logger.info(f"🔬 not reducing: z_{i} moves a guard vector out (residual {norm:.3e})")
                return ReducingReport(False, S.window, direction=i, operator="shift",
                                      residual=norm, witness=witness)
        if S.dim:
            backward = shift_adjoint_columns(S.columns, S.window, S.dim_e, i)
            norm, witness = _worst_direction(S, backward, S.columns)
            if norm > tolerance:
                logger.info(f"🔬 not reducing: M*_z{i} moves a vector out (residual {norm:.3e})")
                return ReducingReport(False, S.window, direction=i, operator="adjoint",
                                      residual=norm, witness=witness)

    constants = S.columns @ S.degree_coordinates(0)
    e_star = constants[:S.dim_e, :]
    if e_star.shape[1]:
        generators = [HardyElement.from_coefficients(S.window, S.dim_e, {(0,) * S.n: e_star[:, j]})
                      for j in range(e_star.shape[1])]
        expected = submodule_span(generators, S.window)
    else:
        expected = SubspaceBasis.zero(S.window, S.dim_e)
    distance = projection_distance(expected, S)
    if distance > DEFAULT_TOLERANCES.projection:
        logger.info(f"🔬 invariant both ways but S ≠ H²_(E*) on the window (distance {distance:.3e})")
        return ReducingReport(False, S.window, e_star=e_star, residual=distance)
    logger.info(f"✅ reducing submodule, dim E* = {e_star.shape[1]}")
    return ReducingReport(True, S.window, e_star=e_star, residual=distance)


# ============================================================================
# Defect operator
# ============================================================================

def defect_projection(window: DegreeWindow, dim_e: int) -> np.ndarray:
    """Σ_A (−1)^|A| M_A M_A* over subsets A of the variables, adjoints applied first."""
    if window.d < 1:
        raise WindowError("defect_projection needs d ≥ 1")
    size = window.size * dim_e
    identity = np.eye(size, dtype=np.complex128)
    total = np.zeros((size, size), dtype=np.complex128)
    for count in range(window.n + 1):
        for subset in combinations(range(1, window.n + 1), count):
            block = identity
            for i in subset:
                block = shift_adjoint_columns(block, window, dim_e, i)
            for i in subset:
                block = shift_columns(block, window, dim_e, i)
            total += (-1) ** count * block
    return total


def constants_projection(window: DegreeWindow, dim_e: int) -> np.ndarray:
    """Orthogonal projection onto the constant elements (first dim_e basis vectors)."""
    size = window.size * dim_e
    matrix = np.zeros((size, size), dtype=np.complex128)
    matrix[np.arange(dim_e), np.arange(dim_e)] = 1.0
    return matrix
