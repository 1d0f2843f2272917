"""Boundary operators ``beta = I_side p(d_n)`` and their cross-application.

The normal derivative is outward: ``d_n = -d_x`` on the low face of an axis
and ``+d_x`` on the high face.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import Side, affine_scale, endpoint_functional

__all__ = [
    "BoundaryOperator",
    "FaceData",
    "commutes",
    "cross_apply",
    "dirichlet",
    "functional_row",
    "neumann",
    "robin",
]


@dataclass(frozen=True)
class BoundaryOperator:
    """Restriction to one face composed with a polynomial in the normal derivative.

    ``normal_poly[k]`` multiplies ``d_n**k``.
    """

    axis: int
    side: Side
    normal_poly: tuple = (1.0,)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        poly = tuple(float(c) for c in self.normal_poly)
        if not poly or not any(poly):
            raise ValueError("normal polynomial must have a nonzero coefficient")
        while len(poly) > 1 and poly[-1] == 0.0:
            poly = poly[:-1]
        object.__setattr__(self, "normal_poly", poly)
        if self.axis < 0:
            raise ValueError("axis must be nonnegative")

    @property
    def order(self) -> int:
        return len(self.normal_poly) - 1

    @classmethod
    def from_axis_derivative(cls, axis: int, side, coeffs, label: str = "") -> BoundaryOperator:
        """Build from a polynomial in ``d/dx_axis`` instead of ``d_n``."""
        s = Side(side).sign
        poly = tuple(c * s ** k for k, c in enumerate(coeffs))
        return cls(axis, side, poly, label)

    def axis_poly(self) -> tuple:
        s = self.side.sign
        return tuple(c * s ** k for k, c in enumerate(self.normal_poly))

    def is_dirichlet(self) -> bool:
        return self.order == 0

    def is_neumann(self) -> bool:
        return self.order == 1 and self.normal_poly[0] == 0.0


def dirichlet(axis: int, side, label: str = "") -> BoundaryOperator:
    return BoundaryOperator(axis, side, (1.0,), label or "dirichlet")


def neumann(axis: int, side, label: str = "") -> BoundaryOperator:
    return BoundaryOperator(axis, side, (0.0, 1.0), label or "neumann")


def robin(axis: int, side, a: float = 1.0, b: float = 1.0, label: str = "") -> BoundaryOperator:
    return BoundaryOperator(axis, side, (a, b), label or "robin")


@dataclass(frozen=True, eq=False)
class FaceData:
    """A boundary condition together with its data on the face.

    ``rhs`` holds Chebyshev coefficients over the tangential axes (in
    increasing axis order); ``None`` means homogeneous data.
    """

    operator: BoundaryOperator
    rhs: np.ndarray | None = None


def commutes(b1: BoundaryOperator, b2: BoundaryOperator) -> bool:
    """Whether two operators may be paired at a shared face intersection.

    Constant-coefficient normal-derivative operators on distinct axes always
    commute. Operators on the same axis never share an intersection, so they
    only qualify when they are literally the same operator.
    """
    if b1.axis != b2.axis:
        return True
    return b1 == b2


def functional_row(op: BoundaryOperator, N: int, domain=(-1.0, 1.0)) -> np.ndarray:
    """Row ``r`` with ``r @ c == (p(d_n) u)`` on the face for 1D coefficients ``c``."""
    row = np.zeros(N)
    s = op.side.sign
    for k, c in enumerate(op.normal_poly):
        if c == 0.0:
            continue
        row += c * s ** k * affine_scale(domain, k) * endpoint_functional(0, k, op.side, N)
    return row


def _contract(data: np.ndarray, row: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(data, row, axes=([axis], [0]))[..., None], -1, axis)


def cross_apply(ops: Sequence[BoundaryOperator], data, domain=None, axes=None) -> np.ndarray:
    """Contract ``data`` with each operator's functional row along its axis.

    ``axes`` names the global axis carried by each dimension of ``data``
    (default ``0..ndim-1``); ``domain`` lists ``[a, b]`` per global axis. The
    contracted dimensions are removed from the result.
    """
    data = np.asarray(data, dtype=float)
    if axes is None:
        axes = list(range(data.ndim))
    axes = list(axes)
    if len(axes) != data.ndim:
        raise ValueError("axes must label every dimension of data")
    targets = [op.axis for op in ops]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate axes in cross application: {targets}")
    local = []
    for op in ops:
        if op.axis not in axes:
            raise ValueError(f"data has no axis {op.axis}")
        ax = axes.index(op.axis)
        dom = (-1.0, 1.0) if domain is None else domain[op.axis]
        data = _contract(data, functional_row(op, data.shape[ax], dom), ax)
        local.append(ax)
    if local:
        data = data.reshape([n for i, n in enumerate(data.shape) if i not in local])
    return data
