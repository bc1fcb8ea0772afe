"""
hardy_factor - Hardy Space Core
===============================

Coefficient-tensor model of the vector-valued Hardy space H²_E(D^n) at a
fixed per-variable degree cap.

Responsibilities:
- multi-index windows and their graded-lexicographic basis order
- HardyElement / OperatorSymbol value types and their JSON form
- shifts M_{z_i} and adjoints, exact polynomial products
- block-Toeplitz assembly of multiplication operators
- point evaluation, torus grids and sampled isometry defects

Basis order: multi-indices sorted by total degree, then lexicographically;
inside one multi-index, coordinate j of E. For n=2, d=1 the scalar basis is
[1, z_2, z_1, z_1 z_2].
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.config import get_settings
from core.errors import DomainError, ShapeMismatchError, VariableIndexError, WindowError

# Optional acceleration for torus-sample batches
try:
    import numba
    from numba import njit, prange
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

logger = logging.getLogger("hardy_factor")

MultiIndex = Tuple[int, ...]

TORUS_MODULUS_TOL = 1e-14


# ============================================================================
# Degree windows
# ============================================================================

@lru_cache(maxsize=None)
def _layout(n: int, d: int):
    """Graded-lex layout of the window: (indices, order, rank, positions).

    order[p] is the C-order ravel index of graded position p; rank is its
    inverse permutation.
    """
    shape = (d + 1,) * n
    grid = np.indices(shape).reshape(n, -1).T
    keys = tuple(grid[:, axis] for axis in reversed(range(n))) + (grid.sum(axis=1),)
    order = np.lexsort(keys).astype(np.intp)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size, dtype=np.intp)
    indices = tuple(tuple(int(x) for x in grid[r]) for r in order)
    positions = {k: p for p, k in enumerate(indices)}
    index_array = np.asarray(indices, dtype=np.intp).reshape(len(indices), n)
    for array in (order, rank, index_array):
        array.setflags(write=False)
    return indices, order, rank, positions, index_array


@dataclass(frozen=True)
class DegreeWindow:
    """All multi-indices k with every k_i ≤ d, over n variables."""

    n: int
    d: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise WindowError(f"variable count must be ≥ 1, got {self.n}")
        if int(self.d) < 0:
            raise WindowError(f"degree must be ≥ 0, got {self.d}")

    @property
    def size(self) -> int:
        return (self.d + 1) ** self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.d + 1,) * self.n

    @property
    def indices(self) -> Tuple[MultiIndex, ...]:
        return _layout(self.n, self.d)[0]

    @property
    def index_array(self) -> np.ndarray:
        """(size, n) array of multi-indices in basis order."""
        return _layout(self.n, self.d)[4]

    def contains(self, k: Sequence[int]) -> bool:
        return len(k) == self.n and all(0 <= int(x) <= self.d for x in k)

    def position(self, k: Sequence[int]) -> int:
        key = tuple(int(x) for x in k)
        try:
            return _layout(self.n, self.d)[3][key]
        except KeyError:
            raise WindowError(f"multi-index {key} outside window n={self.n}, d={self.d}")

    def positions_of(self, multi_indices: np.ndarray) -> np.ndarray:
        """Vectorized basis positions for an (m, n) array of multi-indices."""
        multi_indices = np.asarray(multi_indices, dtype=np.intp).reshape(-1, self.n)
        ravel = np.ravel_multi_index(multi_indices.T, self.shape)
        return _layout(self.n, self.d)[2][ravel]

    def grow(self, by: int = 1) -> "DegreeWindow":
        return DegreeWindow(self.n, self.d + by)

    def guard(self) -> "DegreeWindow":
        """Sub-window of degrees ≤ d−1 where shifts stay inside the window."""
        if self.d < 1:
            raise WindowError("a degree-0 window has no guard window")
        return DegreeWindow(self.n, self.d - 1)

    def to_dict(self) -> Dict[str, int]:
        return {"n": self.n, "d": self.d}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DegreeWindow":
        return cls(n=int(data["n"]), d=int(data["d"]))


def _check_variable(i: int, n: int) -> int:
    """Validate a 1-based variable index and return the tensor axis."""
    if not isinstance(i, (int, np.integer)) or not 1 <= int(i) <= n:
        raise VariableIndexError(f"variable index {i} outside 1..{n}")
    return int(i) - 1


def tensor_to_vector(tensor: np.ndarray, window: DegreeWindow) -> np.ndarray:
    """Flatten a coefficient tensor into basis order (multi-index, then coordinate)."""
    trailing = tensor.shape[window.n:]
    flat = tensor.reshape((window.size,) + trailing)[_layout(window.n, window.d)[1]]
    return flat.reshape(-1) if len(trailing) <= 1 else flat.reshape(window.size * trailing[0], -1)


def columns_to_tensor(columns: np.ndarray, window: DegreeWindow, dim_e: int) -> np.ndarray:
    """Inverse of tensor_to_vector for an (N, r) block of coefficient vectors.

    Returns an array of shape window.shape + (dim_e, r).
    """
    columns = np.asarray(columns, dtype=np.complex128)
    if columns.ndim == 1:
        columns = columns[:, None]
    if columns.shape[0] != window.size * dim_e:
        raise ShapeMismatchError(
            f"expected {window.size * dim_e} coefficients, got {columns.shape[0]}")
    blocks = np.zeros((window.size, dim_e, columns.shape[1]), dtype=np.complex128)
    blocks[_layout(window.n, window.d)[1]] = columns.reshape(window.size, dim_e, -1)
    return blocks.reshape(window.shape + (dim_e, columns.shape[1]))


def _nonzero_indices(tensor: np.ndarray, n: int) -> List[MultiIndex]:
    mask = np.any(tensor.reshape(tensor.shape[:n] + (-1,)) != 0, axis=-1)
    return [tuple(int(x) for x in k) for k in np.argwhere(mask)]


def _degree_of(tensor: np.ndarray, n: int) -> Optional[MultiIndex]:
    """Per-variable maximal exponent among nonzero coefficients, None if zero."""
    nonzero = _nonzero_indices(tensor, n)
    if not nonzero:
        return None
    return tuple(int(x) for x in np.max(np.asarray(nonzero), axis=0))


def _reframe(tensor: np.ndarray, window: DegreeWindow, target: DegreeWindow) -> np.ndarray:
    """Copy the overlapping box of a coefficient tensor into a new window."""
    trailing = tensor.shape[window.n:]
    out = np.zeros(target.shape + trailing, dtype=np.complex128)
    box = tuple(slice(0, min(window.d, target.d) + 1) for _ in range(window.n))
    out[box] = tensor[box]
    return out


# ============================================================================
# HardyElement
# ============================================================================

@dataclass(frozen=True, eq=False)
class HardyElement:
    """Truncated Taylor-coefficient tensor of an E-valued function.

    tensor has shape window.shape + (dim_e,).
    """

    window: DegreeWindow
    dim_e: int
    tensor: np.ndarray

    def __post_init__(self):
        data = np.array(self.tensor, dtype=np.complex128)
        expected = self.window.shape + (int(self.dim_e),)
        if self.dim_e < 1 or data.shape != expected:
            raise ShapeMismatchError(f"element tensor shape {data.shape}, expected {expected}")
        data.setflags(write=False)
        object.__setattr__(self, "tensor", data)

    # ---- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, window: DegreeWindow, dim_e: int = 1) -> "HardyElement":
        return cls(window, dim_e, np.zeros(window.shape + (dim_e,), dtype=np.complex128))

    @classmethod
    def monomial(cls, window: DegreeWindow, k: Sequence[int], j: int = 0,
                 dim_e: int = 1, value: complex = 1.0) -> "HardyElement":
        """value · z^k e_j."""
        if not window.contains(k):
            raise WindowError(f"monomial {tuple(k)} outside window d={window.d}")
        if not 0 <= j < dim_e:
            raise ShapeMismatchError(f"coordinate {j} outside 0..{dim_e - 1}")
        tensor = np.zeros(window.shape + (dim_e,), dtype=np.complex128)
        tensor[tuple(k) + (j,)] = value
        return cls(window, dim_e, tensor)

    @classmethod
    def from_coefficients(cls, window: DegreeWindow, dim_e: int,
                          coefficients: Mapping[MultiIndex, Sequence[complex]]) -> "HardyElement":
        tensor = np.zeros(window.shape + (dim_e,), dtype=np.complex128)
        for k, vector in coefficients.items():
            if not window.contains(k):
                raise WindowError(f"coefficient index {tuple(k)} outside window d={window.d}")
            tensor[tuple(k)] = np.asarray(vector, dtype=np.complex128).reshape(dim_e)
        return cls(window, dim_e, tensor)

    @classmethod
    def from_vector(cls, window: DegreeWindow, dim_e: int, vector: np.ndarray) -> "HardyElement":
        return cls(window, dim_e, columns_to_tensor(vector, window, dim_e)[..., 0])

    # ---- views ------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.window.n

    def vector(self) -> np.ndarray:
        """Coefficients in basis order."""
        return tensor_to_vector(self.tensor, self.window)

    def coefficient(self, k: Sequence[int]) -> np.ndarray:
        if not self.window.contains(k):
            return np.zeros(self.dim_e, dtype=np.complex128)
        return self.tensor[tuple(k)].copy()

    def coefficients(self) -> Dict[MultiIndex, np.ndarray]:
        return {k: self.tensor[k].copy() for k in _nonzero_indices(self.tensor, self.n)}

    def degree(self) -> Optional[MultiIndex]:
        return _degree_of(self.tensor, self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor.ravel()))

    def embed(self, window: DegreeWindow) -> "HardyElement":
        """Same function in a window at least as large as its support."""
        degree = self.degree()
        if window.n != self.n:
            raise ShapeMismatchError(f"cannot move an n={self.n} element to n={window.n}")
        if degree is not None and max(degree) > window.d:
            raise WindowError(f"element of degree {degree} does not fit window d={window.d}")
        return HardyElement(window, self.dim_e, _reframe(self.tensor, self.window, window))

    def truncate(self, d: int) -> "HardyElement":
        """Drop every coefficient with some exponent above d."""
        target = DegreeWindow(self.n, d)
        return HardyElement(target, self.dim_e, _reframe(self.tensor, self.window, target))

    def as_symbol(self) -> "OperatorSymbol":
        return OperatorSymbol(self.window, self.dim_e, 1, self.tensor[..., None])

    # ---- arithmetic -------------------------------------------------------

    def _aligned(self, other: "HardyElement") -> None:
        if not isinstance(other, HardyElement):
            raise ShapeMismatchError("operand is not a HardyElement")
        if other.window != self.window or other.dim_e != self.dim_e:
            raise ShapeMismatchError(
                f"window/dimE mismatch: ({self.window}, {self.dim_e}) vs ({other.window}, {other.dim_e})")

    def __add__(self, other: "HardyElement") -> "HardyElement":
        self._aligned(other)
        return HardyElement(self.window, self.dim_e, self.tensor + other.tensor)

    def __sub__(self, other: "HardyElement") -> "HardyElement":
        self._aligned(other)
        return HardyElement(self.window, self.dim_e, self.tensor - other.tensor)

    def __neg__(self) -> "HardyElement":
        return HardyElement(self.window, self.dim_e, -self.tensor)

    def __mul__(self, scalar: complex) -> "HardyElement":
        return HardyElement(self.window, self.dim_e, self.tensor * complex(scalar))

    __rmul__ = __mul__

    def allclose(self, other: "HardyElement", atol: float = 1e-12) -> bool:
        """Coefficient-wise comparison after moving both to a common window."""
        if other.n != self.n or other.dim_e != self.dim_e:
            return False
        common = DegreeWindow(self.n, max(self.window.d, other.window.d))
        a = _reframe(self.tensor, self.window, common)
        b = _reframe(other.tensor, other.window, common)
        return bool(np.allclose(a, b, rtol=0.0, atol=atol))

    def to_dict(self) -> Dict:
        return symbol_to_dict(self.as_symbol())

    @classmethod
    def from_dict(cls, data: Mapping, window: Optional[DegreeWindow] = None) -> "HardyElement":
        symbol = symbol_from_dict(data, window)
        if symbol.cols != 1:
            raise ShapeMismatchError(f"an element has cols=1, got {symbol.cols}")
        return HardyElement(symbol.window, symbol.rows, symbol.tensor[..., 0])


# ============================================================================
# OperatorSymbol
# ============================================================================

@dataclass(frozen=True, eq=False)
class OperatorSymbol:
    """Matrix-valued polynomial Σ Φ_k z^k, Φ_k of shape rows × cols.

    tensor has shape window.shape + (rows, cols).
    """

    window: DegreeWindow
    rows: int
    cols: int
    tensor: np.ndarray

    def __post_init__(self):
        data = np.array(self.tensor, dtype=np.complex128)
        expected = self.window.shape + (int(self.rows), int(self.cols))
        if self.rows < 0 or self.cols < 0 or data.shape != expected:
            raise ShapeMismatchError(f"symbol tensor shape {data.shape}, expected {expected}")
        data.setflags(write=False)
        object.__setattr__(self, "tensor", data)

    # ---- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, window: DegreeWindow, rows: int, cols: int) -> "OperatorSymbol":
        return cls(window, rows, cols, np.zeros(window.shape + (rows, cols), dtype=np.complex128))

    @classmethod
    def constant(cls, matrix, n: int) -> "OperatorSymbol":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
        window = DegreeWindow(n, 0)
        return cls(window, matrix.shape[0], matrix.shape[1], matrix.reshape(window.shape + matrix.shape))

    @classmethod
    def identity(cls, n: int, size: int) -> "OperatorSymbol":
        return cls.constant(np.eye(size), n)

    @classmethod
    def from_terms(cls, n: int, rows: int, cols: int,
                   terms: Mapping[MultiIndex, object],
                   window: Optional[DegreeWindow] = None) -> "OperatorSymbol":
        """Symbol from {k: matrix}; the window defaults to the smallest one holding all terms."""
        if window is None:
            d = max((max(k) for k in terms), default=0)
            window = DegreeWindow(n, d)
        tensor = np.zeros(window.shape + (rows, cols), dtype=np.complex128)
        for k, matrix in terms.items():
            if len(k) != n:
                raise ShapeMismatchError(f"multi-index {tuple(k)} has length {len(k)}, expected {n}")
            if not window.contains(k):
                raise WindowError(f"term {tuple(k)} outside window d={window.d}")
            value = np.asarray(matrix, dtype=np.complex128)
            if value.shape != (rows, cols):
                raise ShapeMismatchError(f"term {tuple(k)} has shape {value.shape}, expected {(rows, cols)}")
            tensor[tuple(k)] += value
        return cls(window, rows, cols, tensor)

    # ---- views ------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.window.n

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    def coefficient(self, k: Sequence[int]) -> np.ndarray:
        if not self.window.contains(k):
            return np.zeros((self.rows, self.cols), dtype=np.complex128)
        return self.tensor[tuple(k)].copy()

    def terms(self) -> Dict[MultiIndex, np.ndarray]:
        """Nonzero coefficients keyed by multi-index."""
        if self.rows == 0 or self.cols == 0:
            return {}
        return {k: self.tensor[k] for k in _nonzero_indices(self.tensor, self.n)}

    def degree(self) -> Optional[MultiIndex]:
        if self.rows == 0 or self.cols == 0:
            return None
        return _degree_of(self.tensor, self.n)

    @property
    def max_degree(self) -> int:
        degree = self.degree()
        return 0 if degree is None else max(degree)

    def column(self, j: int) -> HardyElement:
        return HardyElement(self.window, self.rows, self.tensor[..., j])

    def columns(self) -> List[HardyElement]:
        return [self.column(j) for j in range(self.cols)]

    def select_columns(self, start: int, stop: Optional[int] = None) -> "OperatorSymbol":
        block = self.tensor[..., start:stop]
        return OperatorSymbol(self.window, self.rows, block.shape[-1], block)

    def select_rows(self, start: int, stop: Optional[int] = None) -> "OperatorSymbol":
        block = self.tensor[..., start:stop, :]
        return OperatorSymbol(self.window, block.shape[-2], self.cols, block)

    def embed(self, window: DegreeWindow) -> "OperatorSymbol":
        if window.n != self.n:
            raise ShapeMismatchError(f"cannot move an n={self.n} symbol to n={window.n}")
        if self.max_degree > window.d:
            raise WindowError(f"symbol of degree {self.degree()} does not fit window d={window.d}")
        return OperatorSymbol(window, self.rows, self.cols, _reframe(self.tensor, self.window, window))

    def truncate(self, d: int) -> "OperatorSymbol":
        target = DegreeWindow(self.n, d)
        return OperatorSymbol(target, self.rows, self.cols, _reframe(self.tensor, self.window, target))

    def trimmed(self, tol: float = 0.0) -> "OperatorSymbol":
        """Zero coefficients with modulus ≤ tol and shrink to the smallest window."""
        data = np.array(self.tensor)
        if tol > 0:
            data[np.abs(data) <= tol] = 0.0
        chopped = OperatorSymbol(self.window, self.rows, self.cols, data)
        return chopped.truncate(chopped.max_degree)

    # ---- arithmetic -------------------------------------------------------

    def _aligned(self, other: "OperatorSymbol") -> Tuple[np.ndarray, np.ndarray, DegreeWindow]:
        if other.n != self.n or other.shape != self.shape:
            raise ShapeMismatchError(f"symbol mismatch: {self.shape} vs {other.shape}")
        common = DegreeWindow(self.n, max(self.window.d, other.window.d))
        return (_reframe(self.tensor, self.window, common),
                _reframe(other.tensor, other.window, common), common)

    def __add__(self, other: "OperatorSymbol") -> "OperatorSymbol":
        a, b, common = self._aligned(other)
        return OperatorSymbol(common, self.rows, self.cols, a + b)

    def __sub__(self, other: "OperatorSymbol") -> "OperatorSymbol":
        a, b, common = self._aligned(other)
        return OperatorSymbol(common, self.rows, self.cols, a - b)

    def __mul__(self, scalar: complex) -> "OperatorSymbol":
        return OperatorSymbol(self.window, self.rows, self.cols, self.tensor * complex(scalar))

    __rmul__ = __mul__

    def right_multiply(self, matrix) -> "OperatorSymbol":
        """Φ·U for a constant matrix U."""
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape[0] != self.cols:
            raise ShapeMismatchError(f"cannot right-multiply {self.shape} by {matrix.shape}")
        return OperatorSymbol(self.window, self.rows, matrix.shape[1], self.tensor @ matrix)

    def max_coefficient_deviation(self, other: "OperatorSymbol") -> float:
        a, b, _ = self._aligned(other)
        return float(np.max(np.abs(a - b), initial=0.0))

    def to_dict(self) -> Dict:
        return symbol_to_dict(self)

    @classmethod
    def from_dict(cls, data: Mapping, window: Optional[DegreeWindow] = None) -> "OperatorSymbol":
        return symbol_from_dict(data, window)


# ============================================================================
# JSON codec
# ============================================================================

def _encode_complex(value: complex) -> List[float]:
    return [float(np.real(value)), float(np.imag(value))]


def _decode_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if len(value) != 2:
        raise ShapeMismatchError(f"complex entries are [re, im] pairs, got {value!r}")
    return complex(float(value[0]), float(value[1]))


def symbol_to_dict(symbol: OperatorSymbol) -> Dict:
    """Serialize as {n, rows, cols, terms: [{k, matrix}]}, terms in basis order."""
    terms = []
    for k in symbol.window.indices:
        block = symbol.tensor[k]
        if not np.any(block != 0):
            continue
        terms.append({
            "k": list(k),
            "matrix": [[_encode_complex(x) for x in row] for row in block],
        })
    return {"n": symbol.n, "rows": symbol.rows, "cols": symbol.cols, "terms": terms}


def symbol_from_dict(data: Mapping, window: Optional[DegreeWindow] = None) -> OperatorSymbol:
    n, rows, cols = int(data["n"]), int(data["rows"]), int(data["cols"])
    terms: Dict[MultiIndex, np.ndarray] = {}
    for term in data.get("terms", []):
        k = tuple(int(x) for x in term["k"])
        if len(k) != n or min(k, default=0) < 0:
            raise ShapeMismatchError(f"invalid multi-index {k} for n={n}")
        if rows == 0 or cols == 0:
            continue
        try:
            matrix = np.array([[_decode_complex(x) for x in row] for row in term["matrix"]],
                              dtype=np.complex128)
        except (TypeError, ValueError) as exc:
            raise ShapeMismatchError(f"term {k}: unreadable matrix ({exc})")
        if matrix.shape != (rows, cols):
            raise ShapeMismatchError(f"term {k} has shape {matrix.shape}, expected {(rows, cols)}")
        terms[k] = terms.get(k, 0) + matrix
    return OperatorSymbol.from_terms(n, rows, cols, terms, window)


def element_to_dict(element: HardyElement) -> Dict:
    return element.to_dict()


def element_from_dict(data: Mapping, window: Optional[DegreeWindow] = None) -> HardyElement:
    return HardyElement.from_dict(data, window)


# ============================================================================
# Basis, inner product, shifts
# ============================================================================

def monomial_basis(window: DegreeWindow, dim_e: int) -> List[HardyElement]:
    """Orthonormal basis z^k e_j in basis order."""
    if dim_e < 1:
        raise ShapeMismatchError(f"dimE must be ≥ 1, got {dim_e}")
    return [HardyElement.monomial(window, k, j, dim_e)
            for k in window.indices for j in range(dim_e)]


def inner_product(f: HardyElement, g: HardyElement) -> complex:
    """⟨f, g⟩ = Σ_k ⟨a_k, b_k⟩, linear in f."""
    f._aligned(g)
    return complex(np.vdot(g.tensor.ravel(), f.tensor.ravel()))


def shift(i: int, f: HardyElement) -> HardyElement:
    """M_{z_i} f; the output window is one degree larger."""
    axis = _check_variable(i, f.n)
    window = f.window.grow(1)
    out = np.zeros(window.shape + (f.dim_e,), dtype=np.complex128)
    target = tuple(slice(1, None) if a == axis else slice(0, f.window.d + 1) for a in range(f.n))
    out[target] = f.tensor
    return HardyElement(window, f.dim_e, out)


def shift_adjoint(i: int, f: HardyElement) -> HardyElement:
    """M*_{z_i} f in the same window (top coefficient in variable i drops out)."""
    axis = _check_variable(i, f.n)
    out = np.zeros_like(f.tensor)
    source = tuple(slice(1, None) if a == axis else slice(None) for a in range(f.n))
    target = tuple(slice(0, -1) if a == axis else slice(None) for a in range(f.n))
    out[target] = f.tensor[source]
    return HardyElement(f.window, f.dim_e, out)


@lru_cache(maxsize=None)
def _shift_map(n: int, d: int, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """Basis positions (src, dst) with z_i · z^src = z^dst inside the window."""
    window = DegreeWindow(n, d)
    index_array = window.index_array
    src = np.nonzero(index_array[:, axis] < d)[0]
    moved = index_array[src].copy()
    moved[:, axis] += 1
    dst = window.positions_of(moved)
    src.setflags(write=False)
    dst.setflags(write=False)
    return src, dst


def shift_columns(columns: np.ndarray, window: DegreeWindow, dim_e: int, i: int) -> np.ndarray:
    """Window-truncated M_{z_i} applied to coefficient vectors (N,) or (N, r)."""
    src, dst = _shift_map(window.n, window.d, _check_variable(i, window.n))
    blocks = np.asarray(columns).reshape((window.size, dim_e) + np.shape(columns)[1:])
    out = np.zeros_like(blocks, dtype=np.complex128)
    out[dst] = blocks[src]
    return out.reshape(np.shape(columns))


def shift_adjoint_columns(columns: np.ndarray, window: DegreeWindow, dim_e: int, i: int) -> np.ndarray:
    """M*_{z_i} applied to coefficient vectors (exact inside the window)."""
    src, dst = _shift_map(window.n, window.d, _check_variable(i, window.n))
    blocks = np.asarray(columns).reshape((window.size, dim_e) + np.shape(columns)[1:])
    out = np.zeros_like(blocks, dtype=np.complex128)
    out[src] = blocks[dst]
    return out.reshape(np.shape(columns))


# ============================================================================
# Products and multiplication operators
# ============================================================================

def apply_symbol(phi: OperatorSymbol, h: HardyElement) -> HardyElement:
    """Exact product Φh in the window of degree d_Φ + d_h."""
    if phi.n != h.n or phi.cols != h.dim_e:
        raise ShapeMismatchError(
            f"cannot apply a {phi.shape} symbol (n={phi.n}) to dimE={h.dim_e} (n={h.n})")
    window = DegreeWindow(phi.n, phi.window.d + h.window.d)
    out = np.zeros(window.shape + (phi.rows,), dtype=np.complex128)
    span = h.window.d + 1
    for k, coeff in phi.terms().items():
        target = tuple(slice(x, x + span) for x in k)
        out[target] += np.einsum("rc,...c->...r", coeff, h.tensor)
    return HardyElement(window, phi.rows, out)


def symbol_product(phi: OperatorSymbol, psi: OperatorSymbol,
                   degree: Optional[int] = None) -> OperatorSymbol:
    """ΦΨ, exact; truncated to per-variable degree ``degree`` when given."""
    if phi.n != psi.n or phi.cols != psi.rows:
        raise ShapeMismatchError(f"cannot multiply {phi.shape} by {psi.shape}")
    window = DegreeWindow(phi.n, phi.window.d + psi.window.d)
    out = np.zeros(window.shape + (phi.rows, psi.cols), dtype=np.complex128)
    span = psi.window.d + 1
    for k, coeff in phi.terms().items():
        if degree is not None and max(k) > degree:
            continue
        target = tuple(slice(x, x + span) for x in k)
        out[target] += np.einsum("rc,...cs->...rs", coeff, psi.tensor)
    product = OperatorSymbol(window, phi.rows, psi.cols, out)
    return product if degree is None else product.truncate(degree)


def assemble_mult_matrix(phi: OperatorSymbol, in_window: DegreeWindow,
                         out_degree: Optional[int] = None) -> np.ndarray:
    """Matrix of h ↦ Φh between monomial bases.

    Columns follow monomial_basis(in_window, Φ.cols); rows follow
    monomial_basis of degree in_window.d + Φ.window.d with Φ.rows coordinates,
    or of degree ``out_degree`` (rows above it dropped) when given.
    """
    if in_window.n != phi.n:
        raise ShapeMismatchError(f"window n={in_window.n} does not match symbol n={phi.n}")
    limit = in_window.d + phi.window.d if out_degree is None else int(out_degree)
    target = DegreeWindow(phi.n, limit)
    rows, cols = phi.rows, phi.cols
    matrix = np.zeros((target.size * rows, in_window.size * cols), dtype=np.complex128)
    in_indices = in_window.index_array
    in_positions = np.arange(in_window.size)
    row_offsets = np.arange(rows)
    col_offsets = np.arange(cols)
    for k, coeff in phi.terms().items():
        moved = in_indices + np.asarray(k, dtype=np.intp)
        keep = np.all(moved <= limit, axis=1)
        if not np.any(keep):
            continue
        out_positions = target.positions_of(moved[keep])
        row_index = (out_positions[:, None] * rows + row_offsets)[:, :, None]
        col_index = (in_positions[keep][:, None] * cols + col_offsets)[:, None, :]
        matrix[row_index, col_index] += coeff
    return matrix


def concat_columns(left: OperatorSymbol, right: OperatorSymbol) -> OperatorSymbol:
    """[left | right]."""
    if left.n != right.n or left.rows != right.rows:
        raise ShapeMismatchError(f"cannot place {left.shape} beside {right.shape}")
    window = DegreeWindow(left.n, max(left.window.d, right.window.d))
    tensor = np.concatenate([_reframe(left.tensor, left.window, window),
                             _reframe(right.tensor, right.window, window)], axis=-1)
    return OperatorSymbol(window, left.rows, left.cols + right.cols, tensor)


def concat_rows(top: OperatorSymbol, bottom: OperatorSymbol) -> OperatorSymbol:
    """[top ; bottom]."""
    if top.n != bottom.n or top.cols != bottom.cols:
        raise ShapeMismatchError(f"cannot stack {top.shape} over {bottom.shape}")
    window = DegreeWindow(top.n, max(top.window.d, bottom.window.d))
    tensor = np.concatenate([_reframe(top.tensor, top.window, window),
                             _reframe(bottom.tensor, bottom.window, window)], axis=-2)
    return OperatorSymbol(window, top.rows + bottom.rows, top.cols, tensor)


# ============================================================================
# Point evaluation
# ============================================================================

def evaluate_on_points(phi: OperatorSymbol, points) -> np.ndarray:
    """Φ(z) for a batch of points; returns shape (P, rows, cols)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.complex128))
    if points.shape[1] != phi.n:
        raise ShapeMismatchError(f"points have {points.shape[1]} coordinates, expected {phi.n}")
    count = points.shape[0]
    d = phi.window.d
    powers = np.ones((count, phi.n, d + 1), dtype=np.complex128)
    for e in range(1, d + 1):
        powers[:, :, e] = powers[:, :, e - 1] * points
    monomials = np.ones((count, 1), dtype=np.complex128)
    for axis in range(phi.n):
        monomials = (monomials[:, :, None] * powers[:, axis, None, :]).reshape(count, -1)
    coefficients = phi.tensor.reshape(phi.window.size, phi.rows * phi.cols)
    return (monomials @ coefficients).reshape(count, phi.rows, phi.cols)


def evaluate_symbol(phi: OperatorSymbol, z) -> np.ndarray:
    """Σ_k Φ_k z^k at one point."""
    return evaluate_on_points(phi, np.asarray(z, dtype=np.complex128).reshape(1, -1))[0]


def evaluate_element(h: HardyElement, z) -> np.ndarray:
    return evaluate_symbol(h.as_symbol(), z)[:, 0]


def cauchy_kernel_element(w, eta, window: DegreeWindow) -> HardyElement:
    """S(·, w)η truncated to the window: coefficient w̄^k η at k."""
    w = np.asarray(w, dtype=np.complex128).reshape(-1)
    if w.size != window.n:
        raise ShapeMismatchError(f"point has {w.size} coordinates, expected {window.n}")
    if np.any(np.abs(w) >= 1.0):
        raise DomainError(f"point {w.tolist()} is outside the open polydisc")
    eta = np.asarray(eta, dtype=np.complex128).reshape(-1)
    tensor = np.ones((), dtype=np.complex128)
    for axis in range(window.n):
        powers = np.ones(window.d + 1, dtype=np.complex128)
        for e in range(1, window.d + 1):
            powers[e] = powers[e - 1] * np.conj(w[axis])
        tensor = np.multiply.outer(tensor, powers)
    return HardyElement(window, eta.size, np.multiply.outer(tensor, eta))


def exp_monomial_symbol(c: complex, i: int, d: int, n: int) -> OperatorSymbol:
    """Degree-d truncation of e^{c z_i} as a 1×1 symbol over n variables."""
    axis = _check_variable(i, n)
    if d < 0:
        raise WindowError(f"degree must be ≥ 0, got {d}")
    window = DegreeWindow(n, d)
    tensor = np.zeros(window.shape + (1, 1), dtype=np.complex128)
    for k in range(d + 1):
        index = tuple(k if a == axis else 0 for a in range(n))
        tensor[index] = complex(c) ** k / factorial(k)
    return OperatorSymbol(window, 1, 1, tensor)


# ============================================================================
# Torus sampling
# ============================================================================

def torus_grid(n: int, points_per_axis: int = 8) -> np.ndarray:
    """Product grid of roots of unity offset by half a step; shape (G^n, n)."""
    if points_per_axis < 1:
        raise WindowError(f"torus grid needs ≥ 1 point per axis, got {points_per_axis}")
    angles = 2.0 * np.pi * (np.arange(points_per_axis) + 0.5) / points_per_axis
    roots = np.exp(1j * angles)
    mesh = np.meshgrid(*([roots] * n), indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    if np.max(np.abs(np.abs(grid) - 1.0)) > TORUS_MODULUS_TOL:
        raise DomainError("torus grid left the unit torus")
    return grid


if NUMBA_AVAILABLE:
    @njit(parallel=True, cache=False)
    def _gram_defects_parallel(values):
        count, rows, cols = values.shape
        out = np.empty((count, cols, cols), dtype=np.complex128)
        for p in prange(count):
            for a in range(cols):
                for b in range(cols):
                    acc = 0j
                    for r in range(rows):
                        acc += values[p, r, a].conjugate() * values[p, r, b]
                    if a == b:
                        acc -= 1.0
                    out[p, a, b] = acc
        return out


def _gram_defects(values: np.ndarray) -> np.ndarray:
    """Per-sample Φ(ζ)*Φ(ζ) − I."""
    threads = get_settings().threads
    if NUMBA_AVAILABLE and threads != 0:
        try:
            if threads:
                numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
            return _gram_defects_parallel(np.ascontiguousarray(values, dtype=np.complex128))
        except Exception as exc:
            logger.warning(f"⚠️  numba torus kernel unavailable ({exc}), using numpy path")
    eye = np.eye(values.shape[2], dtype=np.complex128)
    return np.conj(np.swapaxes(values, 1, 2)) @ values - eye


def _max_spectral_norm(batch: np.ndarray) -> float:
    if batch.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(batch, ord=2, axis=(1, 2))))


def isometry_deviation(values: np.ndarray) -> float:
    """max over samples of ‖Φ(ζ)*Φ(ζ) − I‖."""
    if values.shape[0] == 0 or values.shape[2] == 0:
        return 0.0
    return _max_spectral_norm(_gram_defects(values))


def identity_deviation(values: np.ndarray) -> float:
    """max over samples of ‖Φ(ζ) − I‖ for square values."""
    if values.shape[0] == 0 or values.shape[1] == 0:
        return 0.0
    return _max_spectral_norm(values - np.eye(values.shape[1], dtype=np.complex128))
