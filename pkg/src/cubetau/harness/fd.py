"""Second-order finite differences for 2D Dirichlet Poisson, as an independent oracle."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..operators import BoundaryOperator

__all__ = ["fd_oracle_poisson_2d"]


def _as_callable(v) -> Callable:
    if callable(v):
        return v
    c = float(v)
    return lambda x, y: np.full(np.broadcast(x, y).shape, c)


def fd_oracle_poisson_2d(forcing, g=0.0, M: int = 201,
                         domain=((-1.0, 1.0), (-1.0, 1.0)),
                         operators: Sequence[BoundaryOperator] | None = None):
    """Solve ``Lap u = f`` with ``u = g`` on the boundary, 5-point stencil on an M x M grid.

    ``forcing`` and ``g`` are callables of ``(x, y)`` or constants. Passing
    ``operators`` lets callers assert the problem is Dirichlet; anything else
    is outside the oracle's scope. Returns ``(x, y, U)`` with ``U[i, j]`` at
    ``(x[i], y[j])``.
    """
    if operators is not None and not all(op.is_dirichlet() for op in operators):
        raise ValueError("the finite-difference oracle only handles Dirichlet conditions")
    if M < 51 or M % 2 == 0:
        raise ValueError(f"grid size must be odd and at least 51, got {M}")
    f, g = _as_callable(forcing), _as_callable(g)
    (ax, bx), (ay, by) = domain
    x = np.linspace(ax, bx, M)
    y = np.linspace(ay, by, M)
    hx, hy = x[1] - x[0], y[1] - y[0]
    X, Y = np.meshgrid(x, y, indexing="ij")
    U = np.zeros((M, M))
    edge = np.zeros((M, M), dtype=bool)
    edge[[0, -1], :] = True
    edge[:, [0, -1]] = True
    U[edge] = np.broadcast_to(g(X, Y), (M, M))[edge]

    n = M - 2
    second = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n))
    eye = sp.identity(n)
    L = (sp.kron(second, eye) / hx ** 2 + sp.kron(eye, second) / hy ** 2).tocsc()
    rhs = np.broadcast_to(f(X, Y), (M, M))[1:-1, 1:-1].copy()
    rhs[0, :] -= U[0, 1:-1] / hx ** 2
    rhs[-1, :] -= U[-1, 1:-1] / hx ** 2
    rhs[:, 0] -= U[1:-1, 0] / hy ** 2
    rhs[:, -1] -= U[1:-1, -1] / hy ** 2
    U[1:-1, 1:-1] = spla.spsolve(L, rhs.ravel()).reshape(n, n)
    return x, y, U
