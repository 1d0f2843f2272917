"""One-dimensional Chebyshev / ultraspherical machinery.

Conventions follow the Olver-Townsend ultraspherical method. ``C^(l)_n`` are
the standard Gegenbauer polynomials with ``C^(l)_n(1) = binom(n + 2l - 1, n)``,
and Chebyshev polynomials ``T_n`` form their own family (index 0).

Recurrences used throughout::

    T_{n+1}     = 2x T_n - T_{n-1}
    C^(l)_{n+1} = (2(n+l) x C^(l)_n - (n+2l-1) C^(l)_{n-1}) / (n+1)

    d/dx T_n     = n C^(1)_{n-1}
    d/dx C^(l)_n = 2l C^(l+1)_{n-1}

    T_0 = C^(1)_0,   T_n = (C^(1)_n - C^(1)_{n-2}) / 2                 (n >= 1)
    C^(l)_n = l / (n + l) * (C^(l+1)_n - C^(l+1)_{n-2})

so differentiation is a single superdiagonal and conversion has bands at
offsets 0 and +2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "BasisId",
    "BandedOperator",
    "Grid1D",
    "GridKind",
    "Side",
    "affine_scale",
    "chebyshev_grid",
    "conversion_chain",
    "conversion_operator",
    "convert",
    "derivative_to_test",
    "diff_operator",
    "endpoint_functional",
    "eval_basis",
    "integral_functional",
    "inverse_transform",
    "transform",
    "vandermonde",
]


class Side(enum.Enum):
    LOW = -1
    HIGH = 1

    @property
    def sign(self) -> int:
        return self.value


@dataclass(frozen=True)
class BasisId:
    """Chebyshev (``alpha == 0``) or ultraspherical ``C^(alpha)`` basis."""

    alpha: int = 0

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise ValueError(f"basis index must be a nonnegative integer, got {self.alpha}")

    @classmethod
    def chebyshev(cls) -> BasisId:
        return cls(0)

    @classmethod
    def ultraspherical(cls, alpha: int) -> BasisId:
        if alpha < 1:
            raise ValueError("ultraspherical index must be >= 1")
        return cls(alpha)

    @property
    def family(self) -> str:
        return "chebyshev" if self.alpha == 0 else "ultraspherical"

    def raised(self, k: int = 1) -> BasisId:
        return BasisId(self.alpha + k)

    def __str__(self):
        return "T" if self.alpha == 0 else f"C({self.alpha})"


def _as_basis(basis) -> BasisId:
    if isinstance(basis, BasisId):
        return basis
    return BasisId(int(basis))


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """Rectangular operator stored as diagonals.

    ``bands[k][i]`` is the entry at ``(i, i + k)`` for ``i`` running over the
    rows that diagonal ``k`` actually touches.
    """

    rows: int
    cols: int
    bands: dict = field(default_factory=dict)
    source: BasisId = BasisId(0)
    target: BasisId = BasisId(0)

    def __post_init__(self):
        for k, v in self.bands.items():
            if len(v) != self._diag_length(k):
                raise ValueError(f"band {k} has length {len(v)}, expected {self._diag_length(k)}")

    def _diag_length(self, k: int) -> int:
        return max(0, min(self.rows, self.cols - k) - max(0, -k))

    @property
    def shape(self):
        return (self.rows, self.cols)

    def to_sparse(self) -> sp.csr_matrix:
        if not self.bands:
            return sp.csr_matrix(self.shape)
        offsets = sorted(self.bands)
        mat = sp.csr_matrix(self.shape)
        for k in offsets:
            data = np.asarray(self.bands[k], dtype=float)
            if data.size:
                mat = mat + sp.diags(data, k, shape=self.shape, format="csr")
        return mat

    def todense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for k, v in self.bands.items():
            i0 = max(0, -k)
            i = np.arange(i0, i0 + len(v))
            out[i, i + k] = v
        return out

    def apply(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != self.cols:
            raise ValueError(f"expected {self.cols} coefficients, got {coeffs.shape[0]}")
        out = np.zeros((self.rows,) + coeffs.shape[1:])
        for k, v in self.bands.items():
            i0 = max(0, -k)
            n = len(v)
            v = np.asarray(v).reshape((n,) + (1,) * (coeffs.ndim - 1))
            out[i0:i0 + n] += v * coeffs[i0 + k:i0 + k + n]
        return out

    def __matmul__(self, other):
        if isinstance(other, BandedOperator):
            if self.cols != other.rows:
                raise ValueError("operator shapes do not compose")
            return BandedOperator.from_matrix(
                self.to_sparse() @ other.to_sparse(), other.source, self.target
            )
        return self.apply(other)

    @classmethod
    def from_matrix(cls, mat, source: BasisId = BasisId(0), target: BasisId = BasisId(0)):
        mat = sp.coo_matrix(mat)
        bands = {}
        rows, cols = mat.shape
        for k in np.unique(mat.col - mat.row):
            k = int(k)
            i0 = max(0, -k)
            n = max(0, min(rows, cols - k) - i0)
            diag = np.zeros(n)
            sel = (mat.col - mat.row) == k
            np.add.at(diag, mat.row[sel] - i0, mat.data[sel])
            bands[k] = diag
        return cls(rows, cols, bands, source, target)


def eval_basis(basis, n: int, x):
    """Value of the degree-``n`` member of ``basis`` at ``x`` (array-friendly)."""
    return vandermonde(basis, n + 1, x)[..., n]


def vandermonde(basis, N: int, x, derivative: int = 0) -> np.ndarray:
    """Matrix ``V[..., n] = d^k/dx^k phi_n(x)`` for ``n < N``.

    Derivatives are evaluated through ``d^k T_n = n 2^(k-1) (k-1)! C^(k)_{n-k}``
    and ``d^k C^(l)_n = 2^k (l)_k C^(l+k)_{n-k}``; no differentiation matrices
    are involved, which keeps this usable as an independent check.
    """
    basis = _as_basis(basis)
    x = np.asarray(x, dtype=float)
    k = int(derivative)
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    out = np.zeros(x.shape + (N,))
    if N == 0:
        return out
    if k == 0:
        return _raw_vandermonde(basis.alpha, N, x)
    if N <= k:
        return out
    inner = _raw_vandermonde(basis.alpha + k, N - k, x)
    n = np.arange(k, N)
    if basis.alpha == 0:
        factor = n * 2.0 ** (k - 1) * factorial(k - 1)
    else:
        lam = basis.alpha
        factor = np.full(n.shape, 2.0 ** k * np.prod([lam + j for j in range(k)], dtype=float))
    out[..., k:] = inner * factor
    return out


def _raw_vandermonde(alpha: int, N: int, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape + (N,))
    out[..., 0] = 1.0
    if N == 1:
        return out
    if alpha == 0:
        out[..., 1] = x
        for n in range(1, N - 1):
            out[..., n + 1] = 2 * x * out[..., n] - out[..., n - 1]
    else:
        lam = alpha
        out[..., 1] = 2 * lam * x
        for n in range(1, N - 1):
            out[..., n + 1] = (2 * (n + lam) * x * out[..., n]
                               - (n + 2 * lam - 1) * out[..., n - 1]) / (n + 1)
    return out


def diff_operator(source, N: int) -> BandedOperator:
    """Derivative map from ``source`` coefficients to ``source + 1`` coefficients."""
    source = _as_basis(source)
    if N < 1:
        raise ValueError("N must be >= 1")
    if source.alpha == 0:
        diag = np.arange(1, N, dtype=float)
    else:
        diag = np.full(N - 1, 2.0 * source.alpha)
    return BandedOperator(N, N, {1: diag}, source, source.raised())


def conversion_operator(source, N: int) -> BandedOperator:
    """Re-expand ``source`` coefficients in the ``source + 1`` basis."""
    source = _as_basis(source)
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(N, dtype=float)
    if source.alpha == 0:
        main = np.full(N, 0.5)
        main[0] = 1.0
        upper = np.full(max(N - 2, 0), -0.5)
    else:
        lam = source.alpha
        main = lam / (n + lam)
        upper = -lam / (n[2:] + lam)
    return BandedOperator(N, N, {0: main, 2: upper}, source, source.raised())


def _identity(basis: BasisId, N: int) -> BandedOperator:
    return BandedOperator(N, N, {0: np.ones(N)}, basis, basis)


def conversion_chain(source, target, N: int) -> BandedOperator:
    """Composite conversion ``C^(source) -> C^(target)`` (``source <= target``)."""
    source, target = _as_basis(source), _as_basis(target)
    if target.alpha < source.alpha:
        raise ValueError("conversion only raises the basis index")
    op = _identity(source, N)
    for a in range(source.alpha, target.alpha):
        op = conversion_operator(a, N) @ op
    return op


def derivative_to_test(order: int, test, N: int) -> BandedOperator:
    """``d^order/dx^order`` from Chebyshev coefficients into the ``test`` basis."""
    test = _as_basis(test)
    if order > test.alpha:
        raise ValueError(f"test basis C({test.alpha}) cannot hold a derivative of order {order}")
    op = _identity(BasisId(0), N)
    for a in range(order):
        op = diff_operator(a, N) @ op
    return conversion_chain(order, test, N) @ op


def convert(coeffs, source, target) -> np.ndarray:
    """Change basis of coefficient vectors (leading axis), in either direction."""
    source, target = _as_basis(source), _as_basis(target)
    coeffs = np.asarray(coeffs, dtype=float)
    N = coeffs.shape[0]
    if source.alpha <= target.alpha:
        return conversion_chain(source, target, N).apply(coeffs)
    chain = conversion_chain(target, source, N).todense()
    return scipy.linalg.solve_triangular(chain, coeffs, lower=False)


def _ultraspherical_at_one(alpha: int, n: np.ndarray) -> np.ndarray:
    if alpha == 0:
        return np.ones(n.shape)
    return np.array([float(comb(int(m) + 2 * alpha - 1, int(m))) for m in n])


def endpoint_functional(basis, derivative_order: int, side, N: int) -> np.ndarray:
    """Row ``r`` with ``r @ c`` equal to the k-th derivative at -1 or +1."""
    basis = _as_basis(basis)
    side = Side(side) if not isinstance(side, Side) else side
    k = int(derivative_order)
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    row = np.zeros(N)
    if k >= N:
        return row
    n = np.arange(k, N)
    m = n - k
    if k == 0:
        vals = _ultraspherical_at_one(basis.alpha, n)
    elif basis.alpha == 0:
        vals = np.array([int(v) * 2 ** (k - 1) * factorial(k - 1) for v in n], dtype=float)
        vals = vals * _ultraspherical_at_one(k, m)
    else:
        lam = basis.alpha
        poch = 1
        for j in range(k):
            poch *= lam + j
        vals = 2.0 ** k * poch * _ultraspherical_at_one(lam + k, m)
    if side is Side.LOW:
        vals = vals * (-1.0) ** m
    row[k:] = vals
    return row


def integral_functional(N: int, domain=(-1.0, 1.0)) -> np.ndarray:
    """Row integrating a Chebyshev series over ``domain``."""
    a, b = domain
    row = np.zeros(N)
    n = np.arange(0, N, 2)
    row[n] = 2.0 / (1.0 - n.astype(float) ** 2)
    return row * (b - a) / 2.0


def affine_scale(domain, derivative_order: int) -> float:
    """Chain-rule factor ``(2 / (b - a))**k`` for the map to ``[-1, 1]``."""
    a, b = float(domain[0]), float(domain[1])
    if not b > a:
        raise ValueError(f"degenerate domain [{a}, {b}]")
    return (2.0 / (b - a)) ** derivative_order


class GridKind(enum.Enum):
    TYPE_I = "I"
    TYPE_II = "II"


@dataclass(frozen=True, eq=False)
class Grid1D:
    kind: GridKind
    size: int
    nodes: np.ndarray


def chebyshev_grid(N: int, kind: GridKind = GridKind.TYPE_II) -> Grid1D:
    """Increasing Chebyshev nodes: roots (type I) or extrema (type II)."""
    kind = GridKind(kind)
    if kind is GridKind.TYPE_II:
        if N < 2:
            raise ValueError("type-II grid needs at least 2 points")
        nodes = -np.cos(np.pi * np.arange(N) / (N - 1))
        nodes[0], nodes[-1] = -1.0, 1.0
    else:
        if N < 1:
            raise ValueError("type-I grid needs at least 1 point")
        nodes = -np.cos(np.pi * (np.arange(N) + 0.5) / N)
    return Grid1D(kind, N, nodes)


def transform(values, axis: int = 0, grid: Grid1D | None = None) -> np.ndarray:
    """Type-II grid samples to Chebyshev coefficients (DCT-I)."""
    values = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    N = values.shape[0]
    if grid is not None:
        if grid.kind is not GridKind.TYPE_II:
            raise ValueError("transform expects samples on a type-II grid")
        if grid.size != N:
            raise ValueError(f"grid has {grid.size} nodes but {N} samples were given")
    if N < 2:
        raise ValueError("transform needs at least 2 samples")
    c = scipy.fft.dct(values[::-1], type=1, axis=0) / (N - 1)
    c[0] /= 2
    c[-1] /= 2
    return np.moveaxis(c, 0, axis)


def inverse_transform(coeffs, axis: int = 0) -> np.ndarray:
    """Chebyshev coefficients to samples on the increasing type-II grid."""
    coeffs = np.moveaxis(np.asarray(coeffs, dtype=float), axis, 0)
    N = coeffs.shape[0]
    if N < 2:
        raise ValueError("transform needs at least 2 coefficients")
    c = coeffs / 2
    c[0] = coeffs[0]
    c[-1] = coeffs[-1]
    v = scipy.fft.dct(c, type=1, axis=0)[::-1]
    return np.moveaxis(v, 0, axis)


def transform_nd(values) -> np.ndarray:
    out = np.asarray(values, dtype=float)
    for ax in range(out.ndim):
        out = transform(out, axis=ax)
    return out


def inverse_transform_nd(coeffs) -> np.ndarray:
    out = np.asarray(coeffs, dtype=float)
    for ax in range(out.ndim):
        out = inverse_transform(out, axis=ax)
    return out
