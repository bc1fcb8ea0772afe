"""
hardy_factor - Completion Solver
================================

Weak completion of a left-invertible column f with analytic left inverse g:
S := ker M_g is a submodule; when it is doubly commuting it equals Θ·H² for
an inner Θ, and

    F = [f | Θ],    Ω = [g ; Γ],    Γ = Θ*(I − fg)

satisfy FΩ = ΩF = I.

Truncated algebra: the problem window d is the computation window; symbol
identities are evaluated after truncation to per-variable degree
m = d − GUARD_MARGIN.

Pipeline stages (each failure raises the matching CompletionStageError):

    left-inverse → kernel → doubly-commuting → extract-inner →
    rank-nullity → assemble-F → gamma-solve → residuals
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from core.config import DEFAULT_TOLERANCES, GUARD_MARGIN, Tolerances, get_settings
from core.errors import (
    AssemblyError,
    CommutingStageError,
    ExtractionStageError,
    GammaSolveError,
    HardyFactorError,
    KernelStageError,
    LeftInverseError,
    NonBeurlingError,
    NotDoublyCommutingError,
    NotSubmoduleError,
    RankNullityError,
    ResidualError,
    ShapeMismatchError,
    WindowError,
)
from core.verdicts import Check, all_passed
from hardy_core import (
    DegreeWindow,
    OperatorSymbol,
    assemble_mult_matrix,
    columns_to_tensor,
    concat_columns,
    concat_rows,
    evaluate_on_points,
    identity_deviation,
    symbol_from_dict,
    symbol_product,
    tensor_to_vector,
    torus_grid,
)
from subspace_lab import (
    CommutatorReport,
    SubspaceBasis,
    doubly_commuting_test,
    null_columns,
)
from beurling_engine import (
    InnerCertificate,
    extract_inner,
    guard_range_distance,
    inner_guard_degree,
    innerness_certificate,
)

logger = logging.getLogger("hardy_factor")


# ============================================================================
# Problem
# ============================================================================

@dataclass(frozen=True)
class CompletionProblem:
    """f: E → E_c and its left inverse g, on a computation window."""

    f: OperatorSymbol
    g: OperatorSymbol
    window: DegreeWindow
    tolerances: Tolerances = DEFAULT_TOLERANCES
    seed: int = 0
    torus_grid: Optional[int] = None
    rank_samples: Optional[int] = None

    def __post_init__(self):
        f, g = self.f, self.g
        if f.n != g.n or f.n != self.window.n:
            raise ShapeMismatchError(
                f"variable counts differ: f n={f.n}, g n={g.n}, window n={self.window.n}")
        if g.rows != f.cols or g.cols != f.rows:
            raise ShapeMismatchError(f"g {g.shape} is not shaped as a left inverse of f {f.shape}")
        if f.cols > f.rows:
            raise ShapeMismatchError(f"dim E = {f.cols} exceeds dim E_c = {f.rows}")
        needed = self.input_degree + GUARD_MARGIN
        if self.window.d < needed:
            raise WindowError(
                f"window d={self.window.d} too small: inputs have degree {self.input_degree}, "
                f"need d ≥ {needed}")

    @property
    def n(self) -> int:
        return self.window.n

    @property
    def dim_e(self) -> int:
        return self.f.cols

    @property
    def dim_ec(self) -> int:
        return self.f.rows

    @property
    def input_degree(self) -> int:
        return max(self.f.max_degree, self.g.max_degree)

    @property
    def identity_degree(self) -> int:
        """Truncation degree m at which symbol identities are evaluated."""
        return self.window.d - GUARD_MARGIN

    def with_degree(self, d: int) -> "CompletionProblem":
        return replace(self, window=DegreeWindow(self.n, d))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "dimE": self.dim_e,
            "dimEc": self.dim_ec,
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
            "window": {"d": self.window.d},
            "tolerances": self.tolerances.model_dump(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CompletionProblem":
        n = int(data["n"])
        tolerances = Tolerances(**data.get("tolerances", {}))
        return cls(
            f=symbol_from_dict(data["f"]),
            g=symbol_from_dict(data["g"]),
            window=DegreeWindow(n, int(data["window"]["d"])),
            tolerances=tolerances,
            seed=int(data.get("seed", 0)),
            torus_grid=data.get("torusGrid"),
            rank_samples=data.get("rankSamples"),
        )


# ============================================================================
# Records
# ============================================================================

@dataclass
class RankReport:
    rank: int
    witness_point: Optional[np.ndarray]
    singular_values: np.ndarray
    sample_count: int
    seed: int
    rows: int = 0
    cols: int = 0

    def __post_init__(self):
        if not 0 <= self.rank <= min(self.rows, self.cols):
            raise ShapeMismatchError(f"rank {self.rank} outside 0..{min(self.rows, self.cols)}")

    def to_dict(self) -> Dict[str, Any]:
        point = None
        if self.witness_point is not None:
            point = [[float(z.real), float(z.imag)] for z in self.witness_point]
        return {
            "rank": int(self.rank),
            "witnessPoint": point,
            "singularValues": [float(s) for s in self.singular_values],
            "sampleCount": int(self.sample_count),
            "seed": int(self.seed),
        }


@dataclass
class MinorCertificate:
    """An r×r minor nonsingular at the witness and σ_{r+1}/σ_1 small at every sample."""

    rank: int
    row_indices: List[int]
    col_indices: List[int]
    minor_determinant: float
    determinant_floor: float
    max_tail_ratio: float
    tolerance: float

    def checks(self) -> List[Check]:
        return [
            Check("rank minor |det| at witness", self.minor_determinant,
                  self.determinant_floor, ">=", "rank"),
            Check("sigma_(r+1)/sigma_1 over samples", self.max_tail_ratio,
                  self.tolerance, "<=", "rank"),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rank": self.rank,
            "rowIndices": self.row_indices,
            "colIndices": self.col_indices,
            "minorDeterminant": float(self.minor_determinant),
            "determinantFloor": float(self.determinant_floor),
            "maxTailRatio": float(self.max_tail_ratio),
            "tolerance": float(self.tolerance),
        }


@dataclass
class DimensionCheck:
    dim_ea: int
    rank_g: int
    dim_ec: int

    @property
    def satisfied(self) -> bool:
        return self.dim_ea + self.rank_g == self.dim_ec

    def checks(self) -> List[Check]:
        return [Check("dimEa + rank g == dimEc", self.dim_ea + self.rank_g,
                      self.dim_ec, "==", "rank-nullity")]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dimEa": self.dim_ea,
            "rankG": self.rank_g,
            "dimEc": self.dim_ec,
            "satisfied": self.satisfied,
        }


@dataclass
class CompletionResult:
    theta: OperatorSymbol
    F: OperatorSymbol
    omega: OperatorSymbol
    gamma: OperatorSymbol
    inner_certificate: InnerCertificate
    residuals: Dict[str, float]
    dim_check: DimensionCheck
    rank_report: RankReport
    commutator: CommutatorReport
    kernel_dim: int
    kernel_range_distance: float
    identity_degree: int
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    @property
    def succeeded(self) -> bool:
        return all_passed(self.checks())

    def checks(self) -> List[Check]:
        tol = self.tolerances
        checks = [
            Check("gf - I coefficient deviation", self.residuals["leftInverse"],
                  tol.residual, "<=", "left-inverse"),
            Check("gf - I torus deviation", self.residuals["leftInverseTorus"],
                  tol.residual, "<=", "left-inverse"),
        ]
        checks += self.commutator.checks()
        checks += self.inner_certificate.checks()
        checks += self.dim_check.checks()
        checks.append(Check("gamma least-squares residual", self.residuals["gammaSolve"],
                            tol.residual, "<=", "gamma-solve"))
        checks.append(Check("ker M_g vs ran M_theta distance", self.kernel_range_distance,
                            tol.projection, "<=", "residuals"))
        for key, label in (("FOmega", "F Omega - I"), ("OmegaF", "Omega F - I")):
            checks.append(Check(f"{label} coefficient deviation", self.residuals[key],
                                tol.residual, "<=", "residuals"))
            checks.append(Check(f"{label} torus deviation", self.residuals[key + "Torus"],
                                tol.residual, "<=", "residuals"))
        return checks

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": self.theta.to_dict(),
            "F": self.F.to_dict(),
            "Omega": self.omega.to_dict(),
            "Gamma": self.gamma.to_dict(),
            "innerCert": self.inner_certificate.to_dict(),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "dimCheck": self.dim_check.to_dict(),
            "rank": self.rank_report.to_dict(),
            "commutator": self.commutator.to_dict(),
            "kernelDim": self.kernel_dim,
            "kernelRangeDistance": float(self.kernel_range_distance),
            "identityDegree": self.identity_degree,
        }


@dataclass
class VerificationReport:
    residuals: Dict[str, float]
    identity_degree: int
    inner_columns: Optional[int] = None
    inner_certificate: Optional[InnerCertificate] = None
    kernel_range_distance: Optional[float] = None
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    def checks(self) -> List[Check]:
        tol = self.tolerances
        checks = []
        for key, label in (("FOmega", "F Omega - I"), ("OmegaF", "Omega F - I")):
            checks.append(Check(f"{label} coefficient deviation", self.residuals[key],
                                tol.residual, "<=", "residuals"))
            checks.append(Check(f"{label} torus deviation", self.residuals[key + "Torus"],
                                tol.residual, "<=", "residuals"))
        if self.inner_certificate is not None:
            checks += self.inner_certificate.checks()
        if self.kernel_range_distance is not None:
            checks.append(Check("ker M_g vs ran M_theta distance", self.kernel_range_distance,
                                tol.projection, "<=", "residuals"))
        return checks

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "identityDegree": self.identity_degree,
            "innerColumns": self.inner_columns,
            "innerCert": self.inner_certificate.to_dict() if self.inner_certificate else None,
            "kernelRangeDistance": (None if self.kernel_range_distance is None
                                    else float(self.kernel_range_distance)),
        }


# ============================================================================
# Kernel and local rank
# ============================================================================

def mult_kernel(g: OperatorSymbol, window: DegreeWindow,
                tolerance: float = DEFAULT_TOLERANCES.kernel) -> SubspaceBasis:
    """Orthonormal basis of ker M_g over the window (full product window, no truncation).

    Coordinates whose columns of M_g vanish are kernel directions outright;
    the rest come from the SVD of the triangular QR factor of the remaining
    columns.
    """
    if g.n != window.n:
        raise ShapeMismatchError(f"window n={window.n} does not match symbol n={g.n}")
    matrix = assemble_mult_matrix(g, window)
    size = matrix.shape[1]
    live_cols = np.any(matrix != 0, axis=0)
    dead = np.nonzero(~live_cols)[0]
    live = np.nonzero(live_cols)[0]

    block = matrix[:, live]
    block = block[np.any(block != 0, axis=1)]
    if block.shape[1] == 0:
        null = np.zeros((0, 0), dtype=np.complex128)
    else:
        if block.shape[0] > block.shape[1]:
            block = scipy.linalg.qr(block, mode="r")[0][: block.shape[1]]
        singular = scipy.linalg.svdvals(block)
        cutoff = tolerance * (singular[0] if singular.size else 0.0)
        null = null_columns(block, cutoff)

    columns = np.zeros((size, dead.size + null.shape[1]), dtype=np.complex128)
    columns[dead, np.arange(dead.size)] = 1.0
    if null.shape[1]:
        columns[live, dead.size:] = null
    basis = SubspaceBasis(window, g.cols, columns)
    logger.info(f"🧮 ker M_g: dim {basis.dim} of {basis.ambient_dim} "
                f"({dead.size} free coordinates, {null.shape[1]} from SVD)")
    return basis


def _sample_points(n: int, samples: int, seed: int) -> np.ndarray:
    """Uniform points in the polydisc of radius 0.9, deterministic from seed."""
    rng = np.random.default_rng(seed)
    radii = 0.9 * np.sqrt(rng.random((samples, n)))
    angles = 2.0 * np.pi * rng.random((samples, n))
    return radii * np.exp(1j * angles)


def _sample_ranks(singular: np.ndarray, tolerance: float) -> np.ndarray:
    if singular.shape[1] == 0:
        return np.zeros(singular.shape[0], dtype=int)
    top = singular[:, :1]
    return np.sum((singular > tolerance * top) & (top > 0), axis=1)


def local_rank(g: OperatorSymbol, samples: Optional[int] = None, seed: int = 0,
               tolerance: float = DEFAULT_TOLERANCES.local_rank) -> RankReport:
    """max over random points ζ of rank g(ζ), with the first point attaining it."""
    samples = samples or get_settings().rank_samples
    if samples < 1:
        raise ShapeMismatchError(f"local_rank needs ≥ 1 sample, got {samples}")
    points = _sample_points(g.n, samples, seed)
    if g.rows == 0 or g.cols == 0:
        return RankReport(0, points[0], np.zeros(0), samples, seed, g.rows, g.cols)
    values = evaluate_on_points(g, points)
    singular = np.linalg.svd(values, compute_uv=False)
    ranks = _sample_ranks(singular, tolerance)
    witness = int(np.argmax(ranks))
    report = RankReport(int(ranks[witness]), points[witness], singular[witness],
                        samples, seed, g.rows, g.cols)
    logger.info(f"📊 local rank {report.rank} over {samples} samples (seed {seed})")
    return report


def minor_certificate(g: OperatorSymbol, report: RankReport,
                      tolerance: float = DEFAULT_TOLERANCES.local_rank) -> MinorCertificate:
    """Both sides of the local-rank claim.

    Rank attained: column-pivoted QR picks r columns of g(ζ_w), row-pivoted QR
    on those picks r rows; the minor must be numerically nonsingular.
    Rank not exceeded: σ_{r+1}/σ_1 ≤ tolerance at every sample.
    """
    r = report.rank
    points = _sample_points(g.n, report.sample_count, report.seed)
    values = evaluate_on_points(g, points) if g.rows and g.cols else np.zeros((len(points), 0, 0))
    singular = (np.linalg.svd(values, compute_uv=False) if values.size
                else np.zeros((len(points), 0)))
    if singular.shape[1] > r:
        top = np.where(singular[:, 0] > 0, singular[:, 0], 1.0)
        tail_ratio = float(np.max(singular[:, r] / top))
    else:
        tail_ratio = 0.0

    if r == 0:
        return MinorCertificate(0, [], [], 1.0, 0.0, tail_ratio, tolerance)
    at_witness = evaluate_on_points(g, report.witness_point[None, :])[0]
    _, _, col_pivots = scipy.linalg.qr(at_witness, mode="economic", pivoting=True)
    cols = sorted(int(c) for c in col_pivots[:r])
    _, _, row_pivots = scipy.linalg.qr(at_witness[:, cols].T, mode="economic", pivoting=True)
    rows = sorted(int(c) for c in row_pivots[:r])
    determinant = float(abs(np.linalg.det(at_witness[np.ix_(rows, cols)])))
    floor = tolerance * float(report.singular_values[0]) ** r
    return MinorCertificate(r, rows, cols, determinant, floor, tail_ratio, tolerance)


def check_rank_nullity(g: OperatorSymbol, kernel: SubspaceBasis, theta: OperatorSymbol,
                       rank: Optional[RankReport] = None, samples: Optional[int] = None,
                       seed: int = 0) -> DimensionCheck:
    """dim E_a + rank g = dim E_c with dim E_a = Θ.cols."""
    if kernel.dim_e != g.cols or theta.rows != g.cols:
        raise ShapeMismatchError("kernel basis, Θ and g disagree on dim E_c")
    rank = rank or local_rank(g, samples, seed)
    check = DimensionCheck(theta.cols, rank.rank, g.cols)
    if not check.satisfied:
        raise RankNullityError(
            f"dim E_a + rank g = {theta.cols} + {rank.rank} ≠ dim E_c = {g.cols}: "
            f"window too small or kernel not Beurling", report=check)
    logger.info(f"✅ rank-nullity: {check.dim_ea} + {check.rank_g} = {check.dim_ec}")
    return check


# ============================================================================
# Γ and residuals
# ============================================================================

def _identity(n: int, size: int) -> OperatorSymbol:
    return OperatorSymbol.identity(n, size)


def solve_gamma(theta: OperatorSymbol, f: OperatorSymbol, g: OperatorSymbol,
                window: DegreeWindow) -> Tuple[OperatorSymbol, float]:
    """Least-squares Γ with Θ·Γ = I − fg in the truncated algebra of degree window.d.

    Column e of Γ solves M_Θ γ_e = (I − fg)e; the residual is the largest
    column residual.
    """
    m = window.d
    dim_ec = f.rows
    rhs_symbol = (_identity(f.n, dim_ec) - symbol_product(f, g, degree=m)).truncate(m)
    rhs = tensor_to_vector(rhs_symbol.tensor, window)
    if theta.cols == 0:
        gamma = OperatorSymbol.zeros(window, 0, dim_ec)
        residual = float(np.max(np.linalg.norm(rhs, axis=0), initial=0.0))
        return gamma, residual
    matrix = assemble_mult_matrix(theta, window, out_degree=m)
    solution, *_ = scipy.linalg.lstsq(matrix, rhs)
    residual = float(np.max(np.linalg.norm(matrix @ solution - rhs, axis=0), initial=0.0))
    gamma = OperatorSymbol(window, theta.cols, dim_ec,
                           columns_to_tensor(solution, window, theta.cols))
    logger.info(f"🧮 Γ solve: {matrix.shape[0]}×{matrix.shape[1]} system, residual {residual:.2e}")
    return gamma, residual


def _product_deviation(left: OperatorSymbol, right: OperatorSymbol, degree: int,
                       samples: np.ndarray) -> Tuple[float, float]:
    """Coefficient and torus deviation of (left·right truncated) − I."""
    product = symbol_product(left, right, degree=degree)
    identity = _identity(left.n, product.rows)
    coefficient = product.max_coefficient_deviation(identity)
    torus = identity_deviation(evaluate_on_points(product, samples))
    return coefficient, torus


# ============================================================================
# Pipeline
# ============================================================================

def complete(problem: CompletionProblem) -> CompletionResult:
    """Run the weak-completion pipeline; raise the stage's error on failure."""
    tol = problem.tolerances
    n, m = problem.n, problem.identity_degree
    f, g, window = problem.f, problem.g, problem.window
    samples = torus_grid(n, problem.torus_grid or get_settings().torus_grid)
    logger.info(f"🚀 completion: n={n}, dim E={problem.dim_e}, dim E_c={problem.dim_ec}, "
                f"window d={window.d}, identity degree {m}")

    # 1. left inverse
    left, left_torus = _product_deviation(g, f, m, samples)
    if left > tol.residual or left_torus > tol.residual:
        raise LeftInverseError(
            f"gf ≠ I: coefficient deviation {left:.3e}, torus deviation {left_torus:.3e}",
            report={"leftInverse": left, "leftInverseTorus": left_torus})

    # 2. kernel
    try:
        kernel = mult_kernel(g, window, tol.kernel)
    except HardyFactorError as exc:
        raise KernelStageError(exc.message, report=exc.report) from exc

    # 3. doubly commuting
    try:
        commutator = doubly_commuting_test(kernel, tol.commutator)
    except NotSubmoduleError as exc:
        raise CommutingStageError(exc.message, report=exc.report) from exc
    if not commutator.verdict:
        raise CommutingStageError(
            f"ker M_g is not doubly commuting (max pair norm {commutator.max_pair_norm:.3e})",
            report=commutator)

    # 4. inner extraction; E_a is identified with E_c ⊖ E by the identity unitary
    if kernel.dim == 0:
        theta = OperatorSymbol.zeros(DegreeWindow(n, 0), problem.dim_ec, 0)
        inner_cert = innerness_certificate(theta, 0, problem.torus_grid, tol.inner)
    else:
        try:
            theta, inner_cert = extract_inner(kernel, tol, problem.torus_grid, commutator)
        except (NotDoublyCommutingError, NonBeurlingError) as exc:
            raise ExtractionStageError(exc.message, report=exc.report) from exc
        if not inner_cert.passed:
            raise ExtractionStageError("extracted Θ failed its innerness certificate",
                                       report=inner_cert)

    # 5. rank-nullity
    rank = local_rank(g, problem.rank_samples, problem.seed, tol.local_rank)
    dim_check = check_rank_nullity(g, kernel, theta, rank)

    # 6. F = [f | Θ]
    F = concat_columns(f, theta)
    if F.rows != F.cols:
        raise AssemblyError(f"F is {F.rows}×{F.cols}, not square", report=dim_check)

    # 7. Γ and Ω = [g ; Γ]
    gamma, gamma_residual = solve_gamma(theta, f, g, DegreeWindow(n, m))
    if gamma_residual > tol.residual:
        raise GammaSolveError(
            f"Γ residual {gamma_residual:.3e} > {tol.residual:.1e}: "
            f"window too small or hypothesis violated",
            report={"gammaSolve": gamma_residual, "identityDegree": m})
    omega = concat_rows(g, gamma)

    # 8. residuals
    f_omega, f_omega_torus = _product_deviation(F, omega, m, samples)
    omega_f, omega_f_torus = _product_deviation(omega, F, m, samples)
    distance = guard_range_distance(kernel, theta, tol)
    residuals = {
        "leftInverse": left,
        "leftInverseTorus": left_torus,
        "gammaSolve": gamma_residual,
        "FOmega": f_omega,
        "FOmegaTorus": f_omega_torus,
        "OmegaF": omega_f,
        "OmegaFTorus": omega_f_torus,
    }
    result = CompletionResult(theta, F, omega, gamma, inner_cert, residuals, dim_check, rank,
                              commutator, kernel.dim, distance, m, tol)
    if not result.succeeded:
        failing = [c.name for c in result.checks() if not c.passed]
        raise ResidualError(f"completion residuals above tolerance: {', '.join(failing)}",
                            report=result)
    logger.info(f"✅ completion: FΩ {f_omega:.2e}, ΩF {omega_f:.2e}, "
                f"torus {max(f_omega_torus, omega_f_torus):.2e}")
    return result


def verify_completion(F: OperatorSymbol, omega: OperatorSymbol, window: DegreeWindow,
                      grid: Optional[int] = None, inner_columns: Optional[int] = None,
                      tolerances: Tolerances = DEFAULT_TOLERANCES) -> VerificationReport:
    """Residuals of FΩ − I and ΩF − I for an externally supplied completion.

    With ``inner_columns`` = k, the last k columns of F are certified inner and
    ker M_g (g = first dim E_c − k rows of Ω) is compared with their range.
    """
    if F.rows != F.cols or omega.shape != F.shape or F.n != omega.n:
        raise ShapeMismatchError(f"F {F.shape} and Ω {omega.shape} must be square of equal size")
    m = window.d - GUARD_MARGIN
    if m < 0:
        raise WindowError(f"window d={window.d} leaves no identity degree")
    samples = torus_grid(F.n, grid or get_settings().torus_grid)
    f_omega, f_omega_torus = _product_deviation(F, omega, m, samples)
    omega_f, omega_f_torus = _product_deviation(omega, F, m, samples)
    residuals = {
        "FOmega": f_omega,
        "FOmegaTorus": f_omega_torus,
        "OmegaF": omega_f,
        "OmegaFTorus": omega_f_torus,
    }
    report = VerificationReport(residuals, m, inner_columns, tolerances=tolerances)
    if inner_columns:
        if not 0 < inner_columns <= F.cols:
            raise ShapeMismatchError(f"innerColumns={inner_columns} outside 1..{F.cols}")
        dim_e = F.cols - inner_columns
        theta = F.select_columns(dim_e)
        report.inner_certificate = innerness_certificate(
            theta, inner_guard_degree(window, theta), grid, tolerances.inner)
        g = omega.select_rows(0, dim_e)
        kernel = mult_kernel(g, window, tolerances.kernel)
        report.kernel_range_distance = guard_range_distance(kernel, theta, tolerances)
    logger.info(f"🔬 verify: FΩ {f_omega:.2e}/{f_omega_torus:.2e}, "
                f"ΩF {omega_f:.2e}/{omega_f_torus:.2e}")
    return report


def residual_sweep(problem: CompletionProblem, degrees: Sequence[int]) -> List[Dict[str, Any]]:
    """Re-run complete at each computation window; one row per degree."""
    rows = []
    for d in degrees:
        row: Dict[str, Any] = {"degree": int(d), "status": "pass", "stage": None,
                               "gammaSolve": None, "FOmega": None, "OmegaF": None}
        try:
            result = complete(problem.with_degree(d))
            row.update({k: result.residuals[k] for k in ("gammaSolve", "FOmega", "OmegaF")})
        except HardyFactorError as exc:
            row.update({"status": "stage-failure", "stage": exc.stage})
            partial = exc.report
            if isinstance(partial, CompletionResult):
                row.update({k: partial.residuals[k] for k in ("gammaSolve", "FOmega", "OmegaF")})
            elif isinstance(partial, dict) and "gammaSolve" in partial:
                row["gammaSolve"] = partial["gammaSolve"]
        logger.info(f"📊 sweep d={d}: {row['status']}" + (f" at {row['stage']}" if row["stage"] else ""))
        rows.append(row)
    return rows
