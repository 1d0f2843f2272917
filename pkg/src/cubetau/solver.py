"""Direct solves, the block-triangular Schur path and generalized eigenvalues."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledSystem, _mass_operator
from .errors import ResidualCheckError, SingularSystemError

__all__ = [
    "SchurReport",
    "SolveResult",
    "Spectrum",
    "equilibrate",
    "mass_matrix",
    "schur_partition",
    "solve",
    "solve_dense",
    "solve_eig",
    "solve_reduced",
    "reducible",
    "solve_schur_2d",
    "solve_sparse",
]

log = logging.getLogger(__name__)

DENSE_LIMIT = 3000
REDUCED_DENSE_LIMIT = 18000
RESIDUAL_TOL = 1e-9
INFINITE_CUTOFF = 1e12


@dataclass
class SolveResult:
    u: np.ndarray
    taus: dict
    residual_norm: float
    condition_estimate: float
    x: np.ndarray = field(repr=False, default=None)
    method: str = "dense"
    schur: "SchurReport | None" = field(repr=False, default=None)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    finite_count: int
    infinite_count: int = 0


def _residual(system: AssembledSystem, x: np.ndarray, rhs: np.ndarray) -> tuple:
    """Residual from the stored matrix, independent of any factorization."""
    A = system.matrix
    r = float(np.max(np.abs(A @ x - rhs))) if rhs.size else 0.0
    a_norm = float(abs(A).sum(axis=1).max())
    scale = a_norm * float(np.max(np.abs(x))) if x.size else 0.0
    return r, scale


def _finish(system, x, rhs, cond, method) -> SolveResult:
    r, scale = _residual(system, x, rhs)
    if r > RESIDUAL_TOL * scale and r > 0.0:
        raise ResidualCheckError(f"residual {r:.3e} exceeds {RESIDUAL_TOL:g} x {scale:.3e}")
    u, taus = system.split(x)
    return SolveResult(u, taus, r, cond, x, method)


def _singular(system: AssembledSystem, detail: str) -> SingularSystemError:
    if system.structurally_singular:
        why = "naive corner taus" if system.spec.tau.naive else "pure Neumann data without a gauge"
        return SingularSystemError(f"system is structurally singular ({why}); {detail}",
                                   size=system.size, structural=True)
    return SingularSystemError(f"system is numerically singular; {detail}", size=system.size)


def _sparse_scalings(A: sp.spmatrix) -> tuple:
    r = np.asarray(abs(A).max(axis=1).todense()).ravel()
    r = 1.0 / np.where(r > 0.0, r, 1.0)
    c = np.asarray(abs(sp.diags(r) @ A).max(axis=0).todense()).ravel()
    c = 1.0 / np.where(c > 0.0, c, 1.0)
    return r, c


def solve_dense(system: AssembledSystem, rhs=None) -> SolveResult:
    """LU with partial pivoting on the densified, equilibrated matrix.

    Boundary rows carrying high normal derivatives are orders of magnitude
    larger than interior rows, so rows and columns are scaled to unit max
    norm first; pivot and condition checks apply to the scaled matrix.
    """
    rhs = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    A = system.dense()
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"system is not square: {A.shape}")
    r, c = equilibrate(A)
    As = A * r[:, None] * c
    anorm = np.abs(As).sum(axis=0).max()
    with warnings.catch_warnings():
        # singularity is judged from the pivots and rcond below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(As, check_finite=False)
    pivots = np.abs(np.diag(lu))
    rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
    if pivots.min() <= 1e-14 * max(pivots.max(), 1.0) or rcond < 1e-14:
        raise _singular(system, f"reciprocal condition {rcond:.2e}")
    x = c * scipy.linalg.lu_solve((lu, piv), r * rhs, check_finite=False)
    return _finish(system, x, rhs, 1.0 / rcond, "dense")


def _onenorm_cond(A: sp.spmatrix, lu) -> float:
    n = A.shape[0]
    inv = spla.LinearOperator((n, n), matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"),
                              dtype=float)
    return float(abs(A).sum(axis=0).max() * spla.onenormest(inv))


def solve_sparse(system: AssembledSystem, rhs=None) -> SolveResult:
    """SuperLU factorization of the equilibrated sparse matrix; used for large systems."""
    rhs = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    A = system.matrix.tocsr()
    r, c = _sparse_scalings(A)
    As = (sp.diags(r) @ A @ sp.diags(c)).tocsc()
    try:
        lu = spla.splu(As)
    except RuntimeError as exc:
        raise _singular(system, str(exc)) from exc
    x = c * lu.solve(r * rhs)
    cond = _onenorm_cond(As, lu)
    if not np.isfinite(cond) or cond > 1e14:
        raise _singular(system, f"condition estimate {cond:.2e}")
    return _finish(system, x, rhs, cond, "sparse")


def _tau_free_rows(system: AssembledSystem) -> tuple:
    A = system.matrix.tocsc()
    touched = np.zeros(A.shape[0], dtype=bool)
    touched[np.unique(A[:, system.n_solution:].tocoo().row)] = True
    return np.flatnonzero(~touched), np.flatnonzero(touched)


def reducible(system: AssembledSystem) -> bool:
    """Whether the rows free of tau columns determine ``u`` by themselves."""
    free, _ = _tau_free_rows(system)
    return len(free) == system.n_solution


def solve_reduced(system: AssembledSystem, rhs=None, dense: bool | None = None) -> SolveResult:
    """Solve the tau-free rows for ``u``, then the remaining rows for the taus.

    With the standard tau families every tau column is a unit vector in the
    test or face basis, so exactly ``n_u`` rows avoid them and form a square
    system in ``u`` alone. The inner factorization is dense by default in 3D
    (sparse LU fills in badly there) and sparse otherwise.
    """
    rhs = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    free, touched = _tau_free_rows(system)
    n_u = system.n_solution
    if len(free) != n_u:
        raise ValueError(f"{len(free)} tau-free rows for {n_u} solution unknowns")
    if dense is None:
        dense = system.spec.d >= 3 and n_u <= REDUCED_DENSE_LIMIT
    A = system.matrix.tocsr()
    Au = A[free][:, :n_u]
    r, c = _sparse_scalings(Au)
    As = sp.diags(r) @ Au @ sp.diags(c)
    if dense:
        anorm = float(abs(As).sum(axis=0).max())
        M = As.toarray(order="F")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, overwrite_a=True, check_finite=False)
        del M
        rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
        if rcond < 1e-14:
            raise _singular(system, f"reduced block reciprocal condition {rcond:.2e}")
        u = c * scipy.linalg.lu_solve((lu, piv), r * rhs[free], check_finite=False)
        cond = 1.0 / rcond
        del lu
    else:
        try:
            lu = spla.splu(As.tocsc())
        except RuntimeError as exc:
            raise _singular(system, f"reduced block: {exc}") from exc
        u = c * lu.solve(r * rhs[free])
        cond = _onenorm_cond(As.tocsc(), lu)
        if not np.isfinite(cond) or cond > 1e14:
            raise _singular(system, f"reduced block condition estimate {cond:.2e}")
    x = np.zeros(A.shape[1])
    x[:n_u] = u
    if A.shape[1] > n_u:
        A_tau = A[touched][:, n_u:].tocsc()
        x[n_u:] = spla.splu(A_tau).solve(rhs[touched] - A[touched][:, :n_u] @ u)
    return _finish(system, x, rhs, cond, "reduced")


def solve(system: AssembledSystem, rhs=None, method: str = "auto") -> SolveResult:
    """Dispatch on ``method``: auto, dense, sparse, reduced or schur.

    ``auto`` uses dense LU on small systems; large ones go through the
    Schur path in 2D and the tau-free reduction in 3D, falling back to
    sparse LU of the whole bordered matrix.
    """
    if method == "auto":
        if system.size <= DENSE_LIMIT:
            method = "dense"
        elif system.spec.d == 2 and reducible(system):
            method = "schur"
        else:
            method = "reduced" if reducible(system) else "sparse"
    if method == "reduced":
        return solve_reduced(system, rhs)
    if method == "dense":
        return solve_dense(system, rhs)
    if method == "sparse":
        return solve_sparse(system, rhs)
    if method == "schur":
        return solve_schur_2d(system, rhs)
    raise ValueError(f"unknown solve method {method!r}")


@dataclass
class SchurReport:
    """Index sets of the block-triangular permutation.

    Rows: tau-free interior rows, the other tau-free rows (boundary,
    interface, gauge), rows touching a tau. Columns: solution modes paired
    with the tau-free interior rows (every index ``>= b``), remaining
    solution modes, taus.
    """

    rows_interior_low: np.ndarray
    rows_boundary_low: np.ndarray
    rows_high: np.ndarray
    cols_mid: np.ndarray
    cols_low: np.ndarray
    cols_tau: np.ndarray

    @property
    def schur_block(self) -> int:
        return len(self.cols_mid)

    @property
    def low_block(self) -> int:
        return len(self.cols_low)

    @property
    def row_permutation(self) -> np.ndarray:
        return np.concatenate([self.rows_interior_low, self.rows_boundary_low, self.rows_high])

    @property
    def col_permutation(self) -> np.ndarray:
        return np.concatenate([self.cols_mid, self.cols_low, self.cols_tau])


def schur_partition(system: AssembledSystem) -> SchurReport:
    """Split rows by whether they touch a tau column and pair interior rows with modes.

    Interior test coefficient ``m`` is paired with trial mode ``m + b``,
    the mode the highest derivative maps onto it. Raises ``ValueError``
    when the tau columns do not leave a square tau-free system.
    """
    n_u = system.n_solution
    b = system.spec.b
    free, touched = _tau_free_rows(system)
    if len(free) != n_u:
        raise ValueError(
            f"tau columns touch {len(touched)} rows; block triangular form needs exactly "
            f"{system.size - n_u}")
    interior = system.row_blocks["interior"]
    is_interior = (free >= interior.start) & (free < interior.stop)
    rows_int = free[is_interior]
    col_index = {label[1]: i for i, label in enumerate(system.col_map[:n_u])}
    try:
        mid = np.array([col_index[tuple(k + b for k in system.row_map[r][1])] for r in rows_int],
                       dtype=int)
    except KeyError as exc:
        raise ValueError(f"interior row has no paired mode: {exc}") from None
    low = np.setdiff1d(np.arange(n_u), mid)
    return SchurReport(rows_int, free[~is_interior], touched, mid, low, np.arange(n_u, system.size))


def solve_schur_2d(system: AssembledSystem, rhs=None) -> SolveResult:
    """Solve for ``u`` from the tau-free rows, then recover the taus.

    The principal block (tau-free interior rows against their paired modes)
    is sparse and factored once; the remaining low modes solve a small dense
    Schur complement.
    """
    if system.spec.d != 2:
        raise ValueError("the Schur path is implemented for 2D systems")
    rhs = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    rep = schur_partition(system)
    A = system.matrix.tocsr()
    A_int = A[rep.rows_interior_low]
    A_bnd = A[rep.rows_boundary_low]
    A11 = A_int[:, rep.cols_mid].tocsc()
    A12 = A_int[:, rep.cols_low].toarray()
    A21 = A_bnd[:, rep.cols_mid].toarray()
    A22 = A_bnd[:, rep.cols_low].toarray()
    r1, r2 = rhs[rep.rows_interior_low], rhs[rep.rows_boundary_low]
    try:
        lu11 = spla.splu(A11)
    except RuntimeError as exc:
        raise _singular(system, f"principal block: {exc}") from exc
    Y = lu11.solve(A12)
    y = lu11.solve(r1)
    S = A22 - A21 @ Y
    rs = 1.0 / np.maximum(np.abs(S).max(axis=1), np.finfo(float).tiny)
    try:
        u_low = scipy.linalg.solve(S * rs[:, None], rs * (r2 - A21 @ y), check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise _singular(system, f"Schur complement: {exc}") from exc
    u_mid = y - Y @ u_low

    x = np.zeros(A.shape[1])
    x[rep.cols_mid] = u_mid
    x[rep.cols_low] = u_low
    if len(rep.cols_tau):
        A_high = A[rep.rows_high]
        A_tau = A_high[:, rep.cols_tau].tocsc()
        x[rep.cols_tau] = spla.splu(A_tau).solve(rhs[rep.rows_high] - A_high[:, : system.n_solution]
                                                 @ x[: system.n_solution])
    cond = _onenorm_cond(A11, lu11)
    result = _finish(system, x, rhs, cond, "schur")
    result.schur = rep
    return result


def mass_matrix(system: AssembledSystem) -> sp.csr_matrix:
    """Identity map of ``u`` into the test space on interior rows, zero elsewhere."""
    M = _mass_operator(system.spec, system.test)
    n_rows, n_cols = system.matrix.shape
    interior = system.row_blocks["interior"]
    out = sp.lil_matrix((n_rows, n_cols))
    out[interior.start:interior.stop, : system.n_solution] = M
    return out.tocsr()


def equilibrate(A: np.ndarray) -> tuple:
    """Row then column max-norm scalings ``(r, c)`` of a dense matrix."""
    r = np.abs(A).max(axis=1)
    r = 1.0 / np.where(r > 0.0, r, 1.0)
    c = np.abs(A * r[:, None]).max(axis=0)
    c = 1.0 / np.where(c > 0.0, c, 1.0)
    return r, c


def solve_eig(system: AssembledSystem, mass=None, cutoff: float = INFINITE_CUTOFF,
              balance: bool = True) -> Spectrum:
    """Finite eigenvalues of ``A x = sigma B x``, sorted by magnitude.

    With ``balance`` the pencil is scaled as ``(R A C, R B C)``; the
    eigenvalues are unchanged but the raw bordered matrix spans many decades
    (boundary rows with high derivatives, low-index tau columns) and QZ on it
    loses most of the accuracy of the small eigenvalues.
    """
    B = mass_matrix(system) if mass is None else mass
    A = system.dense()
    B = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    if balance:
        r, c = equilibrate(A)
        A = A * r[:, None] * c
        B = B * r[:, None] * c
    try:
        w = scipy.linalg.eig(A, B, right=False)
    except scipy.linalg.LinAlgError as exc:
        raise ArithmeticError(f"generalized eigensolver failed: {exc}") from exc
    finite = np.isfinite(w) & (np.abs(w) <= cutoff)
    vals = w[finite]
    vals = vals[np.argsort(np.abs(vals), kind="stable")]
    return Spectrum(vals, int(finite.sum()), int((~finite).sum()))
