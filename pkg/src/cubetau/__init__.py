"""Generalized tau method with corner and edge conditions on boxes."""

from .assembly import (
    AssembledSystem,
    Equation,
    ProblemSpec,
    add_gauge,
    assemble,
    assemble_rhs,
    evaluate,
    project_face_data,
    project_function,
)
from .basis import BasisId, Side
from .errors import ResidualCheckError, SingularSystemError, TauSpanError
from .operators import BoundaryOperator, FaceData, dirichlet, neumann, robin
from .solver import SolveResult, Spectrum, solve, solve_eig
from .tau import CornerScheme, TauFamily, TauSpec

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem",
    "BasisId",
    "BoundaryOperator",
    "CornerScheme",
    "Equation",
    "FaceData",
    "ProblemSpec",
    "ResidualCheckError",
    "Side",
    "SingularSystemError",
    "SolveResult",
    "Spectrum",
    "TauFamily",
    "TauSpanError",
    "TauSpec",
    "add_gauge",
    "assemble",
    "assemble_rhs",
    "dirichlet",
    "evaluate",
    "neumann",
    "project_face_data",
    "project_function",
    "robin",
    "solve",
    "solve_eig",
]
