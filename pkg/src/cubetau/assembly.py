"""Bordered tau systems for Poisson and biharmonic problems on boxes.

Unknowns are ordered as: Chebyshev coefficients of ``u`` (C order), interior
taus, then one group of taus per boundary condition and per interface
condition. Rows are ordered as: interior equation, boundary conditions,
interface conditions, and the optional gauge row last.
"""

from __future__ import annotations

import enum
import io
import itertools
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .basis import (
    GridKind,
    affine_scale,
    chebyshev_grid,
    convert,
    derivative_to_test,
    integral_functional,
    transform_nd,
    vandermonde,
)
from .errors import SingularSystemError
from .operators import BoundaryOperator, FaceData, commutes, cross_apply, functional_row
from .tau import (
    TauSpec,
    boundary_tau_columns,
    boundary_tau_subsystem,
    interface_conditions,
    interior_tau_columns,
    quotient_columns,
)

__all__ = [
    "AssembledSystem",
    "Equation",
    "ProblemSpec",
    "add_gauge",
    "assemble",
    "assemble_rhs",
    "evaluate",
    "project_face_data",
    "project_function",
]

# Chebyshev coefficients of u or f, one axis per dimension.
CoeffTensor = np.ndarray


class Equation(enum.Enum):
    POISSON = "poisson"
    BIHARMONIC = "biharmonic"

    @property
    def order(self) -> int:
        return 2 if self is Equation.POISSON else 4

    def terms(self, d: int) -> list:
        """``(coefficient, per-axis derivative orders)`` of the operator."""
        unit = [tuple(2 if a == j else 0 for a in range(d)) for j in range(d)]
        if self is Equation.POISSON:
            return [(1.0, u) for u in unit]
        out = [(1.0, tuple(2 * o for o in u)) for u in unit]
        for i, j in itertools.combinations(range(d), 2):
            out.append((2.0, tuple(a + b for a, b in zip(unit[i], unit[j]))))
        return out


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """An order-``b`` problem on a box with ``b`` boundary conditions per axis."""

    d: int
    N: int | tuple
    equation: Equation
    bcs: tuple
    tau: TauSpec | None = None
    domain: tuple | None = None
    gauge: bool = False

    def __post_init__(self):
        object.__setattr__(self, "equation", Equation(self.equation))
        bcs = tuple(bc if isinstance(bc, FaceData) else FaceData(bc) for bc in self.bcs)
        object.__setattr__(self, "bcs", bcs)
        if self.tau is None:
            object.__setattr__(self, "tau", TauSpec.standard(self.b))
        dom = self.domain or ((-1.0, 1.0),) * self.d
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in dom))

    @property
    def b(self) -> int:
        return self.equation.order

    @property
    def shape(self) -> tuple:
        if isinstance(self.N, (int, np.integer)):
            return (int(self.N),) * self.d
        return tuple(int(n) for n in self.N)

    @property
    def operators(self) -> tuple:
        return tuple(bc.operator for bc in self.bcs)

    def face_axes(self, i: int) -> tuple:
        j = self.bcs[i].operator.axis
        return tuple(a for a in range(self.d) if a != j)

    def face_shape(self, i: int) -> tuple:
        return tuple(self.shape[a] for a in self.face_axes(i))

    def with_bcs(self, bcs) -> ProblemSpec:
        return replace(self, bcs=tuple(bcs))

    def validate(self) -> None:
        if not 1 <= self.d <= 3:
            raise ValueError(f"dimension {self.d} outside the supported range 1..3")
        if len(self.shape) != self.d or len(self.domain) != self.d:
            raise ValueError("size and domain must be given for every axis")
        b = self.b
        if any(n <= b for n in self.shape):
            raise ValueError(f"need more than {b} modes per axis, got {self.shape}")
        ops = self.operators
        for j in range(self.d):
            n_axis = sum(op.axis == j for op in ops)
            if n_axis != b:
                raise ValueError(f"axis {j} has {n_axis} boundary conditions, expected {b}")
        for op in ops:
            if op.axis >= self.d:
                raise ValueError(f"boundary operator on axis {op.axis} in a {self.d}D problem")
            if op.order >= b:
                raise ValueError(f"boundary operator of order {op.order} for an order-{b} equation")
        for a, c in itertools.combinations(ops, 2):
            if a.axis != c.axis and not commutes(a, c):
                raise ValueError(f"boundary operators {a} and {c} do not commute")
        for n in set(self.shape):
            self.tau.validate(n, b)
        if self.tau.naive and (self.d != 2 or b != 2):
            raise ValueError("naive tau mode is only defined for 2D Poisson")

    def pure_neumann(self) -> bool:
        return self.equation is Equation.POISSON and all(op.is_neumann() for op in self.operators)


@dataclass(eq=False)
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    row_map: list
    col_map: list
    row_blocks: dict
    col_blocks: dict
    spec: ProblemSpec
    test: str = "ultraspherical"
    gauged: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_solution(self) -> int:
        return int(np.prod(self.spec.shape))

    @property
    def structurally_singular(self) -> bool:
        return self.spec.tau.naive or (self.spec.pure_neumann() and not self.gauged)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def tau_columns(self) -> np.ndarray:
        return np.arange(self.n_solution, self.matrix.shape[1])

    def split(self, x):
        """``(u, taus)`` from a solution vector; ``taus`` maps labels to values."""
        x = np.asarray(x)
        u = x[: self.n_solution].reshape(self.spec.shape)
        taus = {self.col_map[k]: float(x[k]) for k in range(self.n_solution, len(x))}
        return u, taus

    def level_table(self) -> dict:
        """Rows minus tau columns per constraint level."""
        rows = {}
        for label in self.row_map:
            lev = _row_level(label)
            if lev is not None:
                rows[lev] = rows.get(lev, 0) + 1
        for label in self.col_map[self.n_solution:]:
            lev = _col_level(label)
            if lev is not None:
                rows[lev] = rows.get(lev, 0) - 1
        return dict(sorted(rows.items()))

    def to_coordinate_text(self) -> str:
        buf = io.BytesIO()
        scipy.io.mmwrite(buf, self.matrix.tocoo(), precision=17)
        return buf.getvalue().decode()


def _row_level(label):
    kind = label[0]
    if kind == "interior":
        return 0
    if kind == "bc":
        return 1
    if kind == "iface":
        return len(label[1])
    return None


def _col_level(label):
    group = label[1]
    if group == "interior":
        return 0
    if isinstance(group, tuple) and group[0] == "bc":
        return 1
    if isinstance(group, tuple) and group[0] == "iface":
        return len(group[1])
    return None


def _kron_all(factors):
    out = sp.csr_matrix(factors[0])
    for f in factors[1:]:
        out = sp.kron(out, sp.csr_matrix(f), format="csr")
    return out


def _multi_indices(shape) -> list:
    return [tuple(int(i) for i in idx) for idx in np.ndindex(*shape)] if shape else [()]


def collocation_grid(spec: ProblemSpec) -> list:
    """Per-axis interior collocation points: the ``(N-b)``-point type-I grid."""
    return [chebyshev_grid(n - spec.b, GridKind.TYPE_I).nodes for n in spec.shape]


def _interior_operator(spec: ProblemSpec, test: str) -> sp.csr_matrix:
    shape, b = spec.shape, spec.b
    mat = None
    pts = collocation_grid(spec) if test == "collocation" else None
    for coef, orders in spec.equation.terms(spec.d):
        factors = []
        for j, k in enumerate(orders):
            scale = affine_scale(spec.domain[j], k)
            if test == "ultraspherical":
                factors.append(scale * derivative_to_test(k, b, shape[j]).to_sparse())
            else:
                factors.append(sp.csr_matrix(scale * vandermonde(0, shape[j], pts[j], k)))
        term = coef * _kron_all(factors)
        mat = term if mat is None else mat + term
    return mat.tocsr()


def _mass_operator(spec: ProblemSpec, test: str) -> sp.csr_matrix:
    if test == "ultraspherical":
        return _kron_all([derivative_to_test(0, spec.b, n).to_sparse() for n in spec.shape])
    pts = collocation_grid(spec)
    return _kron_all([vandermonde(0, n, p) for n, p in zip(spec.shape, pts)])


def _restriction(spec: ProblemSpec, ops: Sequence[BoundaryOperator]) -> sp.csr_matrix:
    rows = {op.axis: functional_row(op, spec.shape[op.axis], spec.domain[op.axis]) for op in ops}
    factors = [rows[j][None, :] if j in rows else sp.identity(n, format="csr")
               for j, n in enumerate(spec.shape)]
    return _kron_all(factors)


def _check_corner_solvability(spec: ProblemSpec) -> None:
    if spec.d != 2 or spec.tau.naive or len(set(spec.shape)) != 1:
        return
    sub = boundary_tau_subsystem(spec.operators, spec.shape[0], spec.b, spec.tau, spec.domain)
    s = np.linalg.svd(sub, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    if rank < sub.shape[1]:
        raise SingularSystemError(
            f"corner scheme leaves the boundary-tau subsystem singular (rank {rank} < {sub.shape[1]})",
            rank=rank, size=sub.shape[1], structural=True)


def assemble(spec: ProblemSpec, f: CoeffTensor | None = None, test: str = "ultraspherical",
             g=None) -> AssembledSystem:
    """Build the square tau-bordered system for ``spec``.

    ``test`` selects the interior projection: ``"ultraspherical"`` projects
    onto ``C^(b)`` coefficients; ``"collocation"`` enforces the equation at
    the ``(N-b)``-per-axis type-I grid, which requires interior tau
    polynomials vanishing there (their columns are then identically zero
    and are left out).
    """
    if test not in ("ultraspherical", "collocation"):
        raise ValueError(f"unknown test space {test!r}")
    spec.validate()
    _check_corner_solvability(spec)
    shape, b, d = spec.shape, spec.b, spec.d
    n_u = int(np.prod(shape))

    interior_u = _interior_operator(spec, test)
    if test == "ultraspherical":
        tau_int, tau_members = interior_tau_columns(shape, b, spec.tau)
        interior_rows = [("interior", m) for m in _multi_indices(shape)]
    else:
        pts = collocation_grid(spec)
        tau_eval = _kron_all([vandermonde(0, n, p) @ convert(np.eye(n), b, 0)
                              for n, p in zip(shape, pts)])
        cols, _ = interior_tau_columns(shape, b, spec.tau)
        leak = abs(tau_eval @ cols).max() if cols.shape[1] else 0.0
        if leak > 1e-10 * max(1.0, abs(cols).max()):
            raise ValueError("interior tau polynomials do not vanish on the collocation grid")
        tau_int = sp.csc_matrix((interior_u.shape[0], 0))
        tau_members = np.empty((0, d), dtype=int)
        interior_rows = [("interior", m) for m in _multi_indices([n - b for n in shape])]

    row_groups = [(interior_u, [tau_int])]
    col_map = [("u", m) for m in _multi_indices(shape)]
    col_map += [("tau", "interior", tuple(int(v) for v in m)) for m in tau_members]
    row_map = list(interior_rows)
    tau_blocks = []

    ops = spec.operators
    n_tau_bc = 0
    for i, op in enumerate(ops):
        rows = _restriction(spec, [op])
        taus, members = boundary_tau_columns(spec.face_shape(i), b, spec.tau)
        n_tau_bc += taus.shape[1]
        tau_blocks.append((len(row_groups), taus))
        row_groups.append((rows, []))
        row_map += [("bc", i, m) for m in _multi_indices(spec.face_shape(i))]
        col_map += [("tau", ("bc", i), tuple(int(v) for v in m)) for m in members]

    conditions = interface_conditions(ops, d, spec.tau.corner_scheme, spec.tau.naive)
    for cond in conditions:
        members_ops = [ops[i] for i in cond.members]
        rows = cond.lhs_weight * _restriction(spec, members_ops)
        axes = {op.axis for op in members_ops}
        rest = tuple(shape[a] for a in range(d) if a not in axes)
        key = ("iface", cond.members)
        if rest:
            taus, members = quotient_columns(rest, b, spec.tau.boundary, 0)
            tau_blocks.append((len(row_groups), taus))
            col_map += [("tau", key, tuple(int(v) for v in m)) for m in members]
        row_groups.append((rows, []))
        row_map += [("iface", cond.members, m) for m in _multi_indices(rest)]

    n_rows = sum(rg[0].shape[0] for rg in row_groups)
    n_cols = n_u + tau_int.shape[1] + sum(t.shape[1] for _, t in tau_blocks)
    grid = [[None] * (2 + len(tau_blocks)) for _ in row_groups]
    for r, (u_part, _) in enumerate(row_groups):
        grid[r][0] = u_part
    grid[0][1] = tau_int if tau_int.shape[1] else None
    for c, (r, taus) in enumerate(tau_blocks):
        grid[r][2 + c] = taus if taus.shape[1] else None
    # bmat needs every block column to have a known width
    widths = [n_u, tau_int.shape[1]] + [t.shape[1] for _, t in tau_blocks]
    heights = [rg[0].shape[0] for rg in row_groups]
    for c, w in enumerate(widths):
        if all(grid[r][c] is None for r in range(len(row_groups))):
            grid[0][c] = sp.csr_matrix((heights[0], w))
    keep = [c for c, w in enumerate(widths) if w > 0]
    grid = [[row[c] for c in keep] for row in grid]
    matrix = sp.bmat(grid, format="csr")
    if matrix.shape != (n_rows, n_cols):
        raise AssertionError("block assembly produced an inconsistent shape")

    n_int = interior_u.shape[0]
    n_bc = sum(int(np.prod(spec.face_shape(i))) for i in range(len(ops)))
    row_blocks = {
        "interior": slice(0, n_int),
        "bc": slice(n_int, n_int + n_bc),
        "interface": slice(n_int + n_bc, n_rows),
    }
    t0 = n_u + tau_int.shape[1]
    col_blocks = {
        "u": slice(0, n_u),
        "tau_interior": slice(n_u, t0),
        "tau_bc": slice(t0, t0 + n_tau_bc),
        "tau_interface": slice(t0 + n_tau_bc, n_cols),
    }
    system = AssembledSystem(matrix, np.zeros(n_rows), row_map, col_map, row_blocks, col_blocks,
                             spec, test, meta={"conditions": conditions})
    if spec.gauge:
        system = add_gauge(system)
    system.rhs = assemble_rhs(system, f, g)
    return system


def assemble_rhs(system: AssembledSystem | ProblemSpec, f: CoeffTensor | None = None, g=None,
                 test: str | None = None) -> np.ndarray:
    """Right-hand side from forcing coefficients and boundary data.

    ``g`` overrides the data stored in the ProblemSpec; it is a sequence aligned with
    the boundary conditions whose entries are face coefficient tensors,
    :class:`FaceData`, or ``None`` for homogeneous data.
    """
    if isinstance(system, ProblemSpec):
        system = assemble(system, test=test or "ultraspherical")
    spec = system.spec
    shape, b = spec.shape, spec.b
    g = _face_data(spec, g)
    parts = []

    if f is None:
        f = np.zeros(shape)
    f = np.asarray(f, dtype=float)
    if f.shape != shape:
        raise ValueError(f"forcing has shape {f.shape}, expected {shape}")
    if system.test == "ultraspherical":
        fp = f
        for ax in range(spec.d):
            fp = np.moveaxis(convert(np.moveaxis(fp, ax, 0), 0, b), 0, ax)
        parts.append(fp.ravel())
    else:
        ev = _kron_all([vandermonde(0, n, p) for n, p in zip(shape, collocation_grid(spec))])
        parts.append(ev @ f.ravel())

    for i in range(len(spec.bcs)):
        parts.append(g[i].ravel())

    ops = spec.operators
    for cond in system.meta["conditions"]:
        total = 0.0
        for m, w in zip(cond.members, cond.data_weights):
            if w == 0.0:
                continue
            others = [ops[k] for k in cond.members if k != m]
            total = total + w * cross_apply(others, g[m], spec.domain, axes=spec.face_axes(m))
        rest = [shape[a] for a in range(spec.d) if a not in {ops[k].axis for k in cond.members}]
        parts.append(np.broadcast_to(np.asarray(total, dtype=float), rest).ravel())

    if system.gauged:
        parts.append(np.zeros(1))
    rhs = np.concatenate(parts)
    if rhs.shape[0] != system.size:
        raise AssertionError("rhs length does not match the system")
    return rhs


def _face_data(spec: ProblemSpec, g) -> list:
    if g is None:
        g = [bc.rhs for bc in spec.bcs]
    if len(g) != len(spec.bcs):
        raise ValueError(f"expected data for {len(spec.bcs)} boundary conditions, got {len(g)}")
    out = []
    for i, gi in enumerate(g):
        if isinstance(gi, FaceData):
            gi = gi.rhs
        fshape = spec.face_shape(i)
        if gi is None:
            out.append(np.zeros(fshape))
            continue
        gi = np.asarray(gi, dtype=float)
        if gi.shape != fshape:
            raise ValueError(f"data for boundary condition {i} has shape {gi.shape}, expected {fshape}")
        out.append(gi)
    return out


def add_gauge(system: AssembledSystem) -> AssembledSystem:
    """Border the system with ``integral(u) = 0`` and a constant interior tau."""
    spec = system.spec
    if system.gauged:
        return system
    if not spec.pure_neumann():
        warnings.warn("gauge requested for a problem that is not pure Neumann", stacklevel=2)
    n_rows, n_cols = system.matrix.shape
    n_u = system.n_solution
    integral = _kron_all([integral_functional(n, dom)[None, :] for n, dom in zip(spec.shape, spec.domain)])
    row = sp.hstack([integral, sp.csr_matrix((1, n_cols - n_u + 1))], format="csr")
    col = np.zeros(n_rows)
    interior = system.row_blocks["interior"]
    if system.test == "ultraspherical":
        col[interior.start] = 1.0
    else:
        col[interior] = 1.0
    matrix = sp.vstack([sp.hstack([system.matrix, sp.csr_matrix(col[:, None])]), row], format="csr")
    row_blocks = dict(system.row_blocks, gauge=slice(n_rows, n_rows + 1))
    col_blocks = dict(system.col_blocks, tau_gauge=slice(n_cols, n_cols + 1))
    rhs = np.concatenate([system.rhs, [0.0]])
    return AssembledSystem(matrix, rhs, system.row_map + [("gauge",)],
                           system.col_map + [("tau", "gauge", ())], row_blocks, col_blocks,
                           spec, system.test, True, dict(system.meta))


def project_function(func: Callable, shape, domain) -> CoeffTensor:
    """Chebyshev coefficients of ``func`` by interpolation on the type-II grid.

    ``func`` receives one coordinate array per axis (physical coordinates).
    """
    axes = []
    for n, (a, b) in zip(shape, domain):
        t = chebyshev_grid(n).nodes
        axes.append(a + (b - a) * (t + 1) / 2)
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.broadcast_to(np.asarray(func(*mesh), dtype=float), tuple(shape))
    return transform_nd(vals)


def project_face_data(func: Callable, spec: ProblemSpec, i: int) -> CoeffTensor:
    """Face coefficients of boundary data ``g_i``.

    ``func`` receives physical coordinates for every axis; the normal
    coordinate is pinned to the face.
    """
    op = spec.bcs[i].operator
    fa = spec.face_axes(i)
    a, b = spec.domain[op.axis]
    pinned = a if op.side.sign < 0 else b
    if not fa:
        return np.asarray(float(func(pinned)))

    def on_face(*tangential):
        full = list(tangential)
        full.insert(op.axis, np.full_like(tangential[0], pinned))
        return func(*full)

    return project_function(on_face, spec.face_shape(i), [spec.domain[k] for k in fa])


def evaluate(u: CoeffTensor, points, domain=None) -> np.ndarray:
    """Evaluate a Chebyshev tensor on the tensor grid ``points`` (one array per axis)."""
    u = np.asarray(u, dtype=float)
    domain = domain or [(-1.0, 1.0)] * u.ndim
    out = u
    for ax, (x, (a, b)) in enumerate(zip(points, domain)):
        t = (2 * np.asarray(x, dtype=float) - (a + b)) / (b - a)
        V = vandermonde(0, u.shape[ax], t)
        out = np.moveaxis(np.tensordot(V, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
    return out
