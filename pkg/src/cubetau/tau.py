"""Tau columns, interface conditions and the 1D generalized tau solve.

Tau terms live in the quotient ``Pi_N^d / Pi_{N-b}^d``. Its canonical index
set holds every multi-index with at least one entry ``>= N - b``; the number
of such "high" axes is the level of the index. A high entry ``n_j`` stands for
the tau polynomial ``P_k`` with ``k = N_j - n_j``, a low entry for the basis
element of degree ``n_j``. Columns are ordered by (level, set of high axes,
high choices, low multi-index in C order), which fixes every matrix built
here bit for bit.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .basis import (
    BasisId,
    affine_scale,
    convert,
    derivative_to_test,
    transform,
)
from .errors import SingularSystemError, TauSpanError
from .operators import BoundaryOperator, commutes, functional_row

__all__ = [
    "CornerScheme",
    "InterfaceCondition",
    "OperatorPolynomial1D",
    "QuotientIndexSet",
    "TauFamily",
    "TauSpec",
    "boundary_tau_columns",
    "boundary_tau_subsystem",
    "counting_identity",
    "interface_conditions",
    "interior_tau_columns",
    "quotient_columns",
    "rectangular_collocation_family",
    "solve_tau_1d",
]


class FamilyKind(enum.Enum):
    ULTRASPHERICAL = "ultraspherical"
    CHEBYSHEV = "chebyshev"
    ENDPOINT_LAGRANGE = "endpoint_lagrange"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class TauFamily:
    """A recipe for the ``b`` one-dimensional tau polynomials at size ``N``.

    Custom families hold Chebyshev coefficient vectors, one per polynomial.
    """

    kind: FamilyKind
    alpha: int = 0
    vectors: tuple = ()

    @classmethod
    def ultraspherical(cls, alpha: int) -> TauFamily:
        if alpha == 0:
            return cls.chebyshev()
        return cls(FamilyKind.ULTRASPHERICAL, int(alpha))

    @classmethod
    def chebyshev(cls) -> TauFamily:
        return cls(FamilyKind.CHEBYSHEV, 0)

    @classmethod
    def endpoint_lagrange(cls) -> TauFamily:
        return cls(FamilyKind.ENDPOINT_LAGRANGE)

    @classmethod
    def custom(cls, vectors) -> TauFamily:
        return cls(FamilyKind.CUSTOM, vectors=tuple(np.asarray(v, dtype=float) for v in vectors))

    def __repr__(self):
        if self.kind is FamilyKind.ULTRASPHERICAL:
            return f"TauFamily.ultraspherical({self.alpha})"
        return f"TauFamily.{self.kind.value}()"

    def polynomials(self, N: int, b: int, basis=0) -> np.ndarray:
        """Array ``(b, N)``: row ``k-1`` holds ``P_k`` in ``basis`` coefficients."""
        basis = BasisId(int(getattr(basis, "alpha", basis)))
        if self.kind in (FamilyKind.ULTRASPHERICAL, FamilyKind.CHEBYSHEV):
            native = np.zeros((N, b))
            native[N - 1 - np.arange(b), np.arange(b)] = 1.0
            return convert(native, self.alpha, basis).T
        if self.kind is FamilyKind.ENDPOINT_LAGRANGE:
            left = (b + 1) // 2
            nodes = list(range(left)) + list(range(N - (b - left), N))
            samples = np.zeros((N, b))
            samples[nodes, np.arange(b)] = 1.0
            return convert(transform(samples, axis=0), 0, basis).T
        vecs = np.array(self.vectors, dtype=float)
        if vecs.shape != (b, N):
            raise TauSpanError(f"custom family has shape {vecs.shape}, expected {(b, N)}")
        return convert(vecs.T, 0, basis).T

    def check_span(self, N: int, b: int) -> None:
        """Raise unless the family spans ``Pi_N / Pi_{N-b}``."""
        top = self.polynomials(N, b, 0)[:, N - b:]
        s = np.linalg.svd(top, compute_uv=False)
        if s.size < b or s[-1] <= 1e-12 * max(s[0], 1.0):
            raise TauSpanError(f"{self!r} does not span the degree {N - b}..{N - 1} quotient at N={N}")


def rectangular_collocation_family(N: int, b: int) -> TauFamily:
    """Tau polynomials ``T_{N-b} T_k`` (``k < b``), all vanishing on the
    ``(N-b)``-point type-I grid.

    With these taus the tau-modified interior equation is equivalent to
    collocation at the roots of ``T_{N-b}``.
    """
    vecs = []
    for k in range(b):
        v = np.zeros(N)
        v[N - b + k] += 0.5
        v[abs(N - b - k)] += 0.5
        vecs.append(v)
    return TauFamily.custom(vecs)


class SchemeKind(enum.Enum):
    DIHEDRAL = "dihedral"
    CLOCKWISE = "clockwise"
    EASTWEST = "eastwest"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class CornerScheme:
    """Weights ``alpha_{ee'}`` closing the corner conditions.

    The corner row for BCs ``e`` and ``e'`` is
    ``(a_ee' + a_e'e) beta_e beta_e' u = a_ee' beta_e g_e' + a_e'e beta_e' g_e``.
    Custom weights map ordered pairs of BC indices ``(e, e')`` to ``a_ee'``.
    """

    kind: SchemeKind = SchemeKind.DIHEDRAL
    alphas: Mapping = field(default_factory=dict)

    @classmethod
    def parse(cls, name: str) -> CornerScheme:
        return cls(SchemeKind(name.lower().replace("-", "").replace("_", "")))

    def pair_weights(self, i: int, op_i: BoundaryOperator, j: int, op_j: BoundaryOperator):
        """``(a_ij, a_ji)`` for a corner of BCs ``i`` (x-like) and ``j`` (y-like)."""
        if self.kind is SchemeKind.DIHEDRAL:
            return 1.0, 1.0
        if self.kind is SchemeKind.CUSTOM:
            return float(self.alphas.get((i, j), 0.0)), float(self.alphas.get((j, i), 0.0))
        lo, hi = sorted([(op_i.axis, i, op_i), (op_j.axis, j, op_j)], key=lambda t: t[0])
        if self.kind is SchemeKind.EASTWEST:
            use_y = True
        else:
            use_y = lo[2].side is not hi[2].side
        # a_{x,y} weights the y data, a_{y,x} the x data
        a_xy, a_yx = (1.0, 0.0) if use_y else (0.0, 1.0)
        if lo[1] == i:
            return a_xy, a_yx
        return a_yx, a_xy


@dataclass(frozen=True, eq=False)
class TauSpec:
    interior: TauFamily
    boundary: TauFamily = TauFamily.chebyshev()
    corner_scheme: CornerScheme = CornerScheme()
    naive: bool = False

    @classmethod
    def standard(cls, b: int, scheme: CornerScheme | None = None) -> TauSpec:
        """Ultraspherical interior taus ``C^(b)_{N-k}``, Chebyshev boundary taus."""
        return cls(TauFamily.ultraspherical(b), TauFamily.chebyshev(), scheme or CornerScheme())

    def validate(self, N: int, b: int) -> None:
        self.interior.check_span(N, b)
        self.boundary.check_span(N, b)


@dataclass(frozen=True)
class QuotientIndexSet:
    shape: tuple
    b: int

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if any(n <= self.b for n in self.shape):
            raise ValueError(f"every axis needs more than b={self.b} modes, got {self.shape}")

    @property
    def d(self) -> int:
        return len(self.shape)

    def blocks(self):
        """Yield ``(level, high_axes, ks)`` in canonical order."""
        for level in range(1, self.d + 1):
            for high in itertools.combinations(range(self.d), level):
                for ks in itertools.product(range(1, self.b + 1), repeat=level):
                    yield level, high, ks

    def block_members(self, high, ks) -> np.ndarray:
        low_axes = [j for j in range(self.d) if j not in high]
        low_shape = [self.shape[j] - self.b for j in low_axes]
        count = int(np.prod(low_shape)) if low_axes else 1
        out = np.empty((count, self.d), dtype=int)
        for j, k in zip(high, ks):
            out[:, j] = self.shape[j] - k
        if low_axes:
            grid = np.indices(low_shape).reshape(len(low_axes), -1).T
            out[:, low_axes] = grid
        return out

    def members(self) -> np.ndarray:
        if self.d == 0:
            return np.empty((0, 0), dtype=int)
        return np.concatenate([self.block_members(h, ks) for _, h, ks in self.blocks()])

    def level_counts(self) -> dict:
        N = self.shape
        counts = {}
        for level in range(1, self.d + 1):
            total = 0
            for high in itertools.combinations(range(self.d), level):
                low = [N[j] - self.b for j in range(self.d) if j not in high]
                total += self.b ** level * int(np.prod(low))
            counts[level] = total
        return counts

    @property
    def cardinality(self) -> int:
        return int(np.prod(self.shape)) - int(np.prod([n - self.b for n in self.shape]))


def quotient_columns(shape, b: int, family: TauFamily, basis=0):
    """Sparse tau columns spanning the quotient over ``shape``.

    Returns ``(matrix, members)``: the matrix has ``prod(shape)`` rows in
    ``basis`` coefficients and one column per quotient multi-index.
    """
    qset = QuotientIndexSet(tuple(shape), b)
    d = qset.d
    if d == 0:
        return sp.csc_matrix((1, 0)), np.empty((0, 0), dtype=int)
    polys = {n: family.polynomials(n, b, basis) for n in set(qset.shape)}
    eyes = {n: sp.identity(n, format="csr")[:, : n - b] for n in set(qset.shape)}
    blocks = []
    members = []
    for _, high, ks in qset.blocks():
        kmap = dict(zip(high, ks))
        factors = []
        for j in range(d):
            n = qset.shape[j]
            if j in kmap:
                factors.append(sp.csr_matrix(polys[n][kmap[j] - 1][:, None]))
            else:
                factors.append(eyes[n])
        block = factors[0]
        for f in factors[1:]:
            block = sp.kron(block, f, format="csr")
        blocks.append(block)
        members.append(qset.block_members(high, ks))
    mat = sp.hstack(blocks, format="csc")
    mat.eliminate_zeros()
    return mat, np.concatenate(members)


def interior_tau_columns(shape, b: int, spec: TauSpec, basis=None):
    """Interior tau columns in the test basis (``C^(b)`` unless given)."""
    basis = b if basis is None else basis
    return quotient_columns(shape, b, spec.interior, basis)


def boundary_tau_columns(face_shape, b: int, spec: TauSpec):
    """Tau columns for one boundary condition, in face Chebyshev coefficients.

    In naive mode (2D only) each condition gets the single column ``Q_1``.
    """
    face_shape = tuple(face_shape)
    if spec.naive:
        if len(face_shape) != 1:
            raise ValueError("naive tau mode is only defined for 2D problems")
        n = face_shape[0]
        q1 = spec.boundary.polynomials(n, b, 0)[0]
        return sp.csc_matrix(q1[:, None]), np.array([[n - 1]])
    return quotient_columns(face_shape, b, spec.boundary, 0)


@dataclass(frozen=True)
class InterfaceCondition:
    """One interface block: ``lhs_weight * beta_J u + tau = sum_j w_j beta_{J-j} g_j``.

    ``members`` are BC indices, one per axis in increasing axis order, and
    ``data_weights`` pair with them.
    """

    members: tuple
    lhs_weight: float
    data_weights: tuple

    @property
    def level(self) -> int:
        return len(self.members)


def interface_conditions(bcs: Sequence[BoundaryOperator], d: int, scheme: CornerScheme,
                         naive: bool = False) -> list:
    """Every combination of one BC on each of ``k >= 2`` distinct axes."""
    if naive:
        return []
    per_axis = [[i for i, op in enumerate(bcs) if op.axis == j] for j in range(d)]
    if scheme.kind is not SchemeKind.DIHEDRAL and d != 2:
        raise ValueError(f"the {scheme.kind.value} corner scheme is only defined in 2D")
    out = []
    for level in range(2, d + 1):
        for axes in itertools.combinations(range(d), level):
            for members in itertools.product(*(per_axis[j] for j in axes)):
                ops = [bcs[i] for i in members]
                for a, b_ in itertools.combinations(ops, 2):
                    if not commutes(a, b_) or a.axis == b_.axis:
                        raise ValueError(f"boundary operators {a} and {b_} cannot be paired")
                if level == 2:
                    i, j = members
                    a_ij, a_ji = scheme.pair_weights(i, bcs[i], j, bcs[j])
                    lhs = a_ij + a_ji
                    if lhs == 0.0:
                        raise ValueError(f"corner weights for BCs {i}, {j} sum to zero")
                    # data of member i is weighted by a_ji, data of j by a_ij
                    out.append(InterfaceCondition(members, lhs, (a_ji, a_ij)))
                else:
                    out.append(InterfaceCondition(members, float(level), (1.0,) * level))
    return out


def boundary_tau_subsystem(bcs: Sequence[BoundaryOperator], N: int, b: int, spec: TauSpec,
                           domain=None) -> np.ndarray:
    """Square matrix of the 2D boundary-tau unknowns.

    For each corner pair the jump relation ``beta_e tau_e' - beta_e' tau_e``
    and the scheme constraint ``a_ee' beta_e tau_e' + a_e'e beta_e' tau_e``
    each give one row; the corner conditions are solvable iff this matrix is
    nonsingular.
    """
    domain = domain or [(-1.0, 1.0)] * 2
    Q = spec.boundary.polynomials(N, b, 0)
    rows = []
    for cond in interface_conditions(bcs, 2, spec.corner_scheme):
        i, j = cond.members
        # tau_j lives on the face of BC j, whose tangential axis is BC i's axis
        bi_tj = functional_row(bcs[i], N, domain[bcs[i].axis]) @ Q.T
        bj_ti = functional_row(bcs[j], N, domain[bcs[j].axis]) @ Q.T
        a_ji, a_ij = cond.data_weights
        for wi, wj in ((-1.0, 1.0), (a_ji, a_ij)):
            r = np.zeros(len(bcs) * b)
            r[i * b:(i + 1) * b] += wi * bj_ti
            r[j * b:(j + 1) * b] += wj * bi_tj
            rows.append(r)
    return np.array(rows)


def counting_identity(d: int, N: int, b: int):
    """Per-level constraint counts ``C(d,k) b^k (N-b)^(d-k)`` and whether they sum to ``N^d``."""
    if N <= b:
        raise ValueError("counting identity needs N > b")
    table = {k: comb(d, k) * b ** k * (N - b) ** (d - k) for k in range(d + 1)}
    return sum(table.values()) == N ** d, table


@dataclass(frozen=True)
class OperatorPolynomial1D:
    """``L(d) = sum_k coeffs[k] d^k`` of exact order ``len(coeffs) - 1``."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c or c[-1] == 0.0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def monomial_degree(self) -> int:
        """Largest ``a`` with ``d^a`` dividing ``L``."""
        return next(k for k, c in enumerate(self.coeffs) if c != 0.0)

    @property
    def reduced(self) -> OperatorPolynomial1D:
        """``L`` with the monomial factor removed."""
        return OperatorPolynomial1D(self.coeffs[self.monomial_degree:])

    def matrix(self, N: int, domain=(-1.0, 1.0)) -> np.ndarray:
        """Dense map from Chebyshev coefficients to ``C^(order)`` coefficients."""
        b = self.order
        out = np.zeros((N, N))
        for k, c in enumerate(self.coeffs):
            if c:
                out += c * affine_scale(domain, k) * derivative_to_test(k, b, N).todense()
        return out


def solve_tau_1d(L: OperatorPolynomial1D, bcs, f, spec: TauSpec | None = None, N: int | None = None,
                 domain=(-1.0, 1.0)):
    """Solve ``L(d) u + sum_k tau_k P_k = f`` with ``b`` boundary conditions.

    ``bcs`` is a sequence of ``(BoundaryOperator, g)`` pairs and ``f`` holds
    Chebyshev coefficients. Returns ``(u, taus)``.
    """
    b = L.order
    f = np.asarray(f, dtype=float)
    N = len(f) if N is None else N
    if len(f) > N:
        raise ValueError("forcing has more coefficients than N")
    f = np.pad(f, (0, N - len(f)))
    if len(bcs) != b:
        raise ValueError(f"order-{b} problem needs {b} boundary conditions, got {len(bcs)}")
    spec = spec or TauSpec.standard(b)
    spec.interior.check_span(N, b)

    A = np.zeros((N + b, N + b))
    A[:N, :N] = L.matrix(N, domain)
    A[:N, N:] = spec.interior.polynomials(N, b, b).T
    rhs = np.zeros(N + b)
    rhs[:N] = convert(f, 0, b)
    for r, (op, g) in enumerate(bcs):
        A[N + r, :N] = functional_row(op, N, domain)
        rhs[N + r] = g
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > s[0] * 1e-12))
    if rank < N + b:
        raise SingularSystemError(f"1D tau system has rank {rank} < {N + b}", rank=rank, size=N + b)
    x = np.linalg.solve(A, rhs)
    return x[:N], x[N:]
