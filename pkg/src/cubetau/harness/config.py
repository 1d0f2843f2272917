"""Experiment configuration files.

A config is an INI file::

    [experiment]
    name = poisson2d-robin
    equation = poisson          ; or biharmonic
    d = 2
    n = 32 64 128
    domain = -1 1               ; one pair for all axes, or one pair per axis
    forcing = -100*x*sin(20*pi*x^2*y)*cos(4*pi*(x+y))
    reference = self 160        ; or: manufactured <expr> / eig <formula-id>
    gauge = no

    [tau]
    alpha = 2                   ; interior taus C^(alpha)_{N-k}, default b
    scheme = dihedral
    naive = no

    [bc.x.low]                  ; one section per condition; b per axis
    poly = 1 1                  ; coefficients of p, constant term first
    frame = normal              ; polynomial in d_n (outward) or in d/dx_axis
    g = 0

    [output]
    csv = convergence.csv
    svg = convergence.svg
    snapshot = solution.npz

Fourth-order problems need two sections per face, named ``[bc.x.low.1]``
and ``[bc.x.low.2]``.
"""

from __future__ import annotations

import configparser
import enum
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from ..assembly import Equation, FaceData, ProblemSpec, project_face_data
from ..basis import Side
from ..operators import BoundaryOperator
from ..tau import CornerScheme, TauFamily, TauSpec
from .expr import Expression, ExpressionError

__all__ = [
    "BCEntry",
    "ConfigError",
    "EIGEN_FORMULAS",
    "ExperimentConfig",
    "ReferenceKind",
    "ReferenceMode",
    "bundled_configs",
    "load_config",
    "parse_config",
]

AXES = ("x", "y", "z")
SECTION = re.compile(r"^bc\.([xyz])\.(low|high)(?:\.(\d+))?$")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ReferenceKind(enum.Enum):
    SELF = "self"
    MANUFACTURED = "manufactured"
    EIG = "eig"


def _plate_simply_supported(m, n, length):
    return (3.141592653589793 / length) ** 4 * (m * m + n * n) ** 2


def _laplace_dirichlet(m, n, length):
    return -((3.141592653589793 / length) ** 2) * (m * m + n * n)


# exact eigenvalues on [a, a+L]^2 indexed by (m, n) >= 1
EIGEN_FORMULAS = {
    "biharmonic-simply-supported": (Equation.BIHARMONIC, _plate_simply_supported),
    "laplace-dirichlet": (Equation.POISSON, _laplace_dirichlet),
}


@dataclass(frozen=True)
class ReferenceMode:
    kind: ReferenceKind
    n_ref: int | None = None
    solution: Expression | None = None
    formula: str | None = None

    @classmethod
    def parse(cls, text: str) -> ReferenceMode:
        head, _, rest = text.strip().partition(" ")
        rest = rest.strip()
        try:
            kind = ReferenceKind(head.lower())
        except ValueError:
            raise ConfigError(f"unknown reference mode {head!r}") from None
        if kind is ReferenceKind.SELF:
            try:
                return cls(kind, n_ref=int(rest))
            except ValueError:
                raise ConfigError(f"self reference needs an integer N_ref, got {rest!r}") from None
        if kind is ReferenceKind.MANUFACTURED:
            return cls(kind, solution=Expression(rest))
        if rest not in EIGEN_FORMULAS:
            raise ConfigError(f"unknown eigenvalue formula {rest!r}; known: {sorted(EIGEN_FORMULAS)}")
        return cls(kind, formula=rest)

    def exact_eigenvalues(self, length: float, count: int):
        _, formula = EIGEN_FORMULAS[self.formula]
        m_max = int(count ** 0.5) + 4
        vals = sorted((formula(m, n, length) for m in range(1, m_max + 1)
                       for n in range(1, m_max + 1)), key=abs)
        return vals[:count]


@dataclass(frozen=True)
class BCEntry:
    axis: int
    side: Side
    poly: tuple
    frame: str
    g: Expression

    def operator(self) -> BoundaryOperator:
        if self.frame == "axis":
            return BoundaryOperator.from_axis_derivative(self.axis, self.side, self.poly)
        return BoundaryOperator(self.axis, self.side, self.poly)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    equation: Equation
    d: int
    n_list: tuple
    domain: tuple
    bcs: tuple
    forcing: Expression
    reference: ReferenceMode
    alpha: int | None = None
    scheme: str = "dihedral"
    naive: bool = False
    gauge: bool = False
    eig_count: int = 10
    outputs: dict = field(default_factory=dict)
    source: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 1 <= self.d <= 3:
            raise ConfigError(f"d = {self.d} outside 1..3")
        if not self.n_list:
            raise ConfigError("empty N list")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError(f"N list must be strictly increasing: {self.n_list}")
        ref = self.reference
        if ref.kind is ReferenceKind.SELF and ref.n_ref <= max(self.n_list):
            raise ConfigError(f"N_ref = {ref.n_ref} must exceed max N = {max(self.n_list)}")
        if ref.kind is ReferenceKind.MANUFACTURED and ref.solution.dimension > self.d:
            raise ConfigError("manufactured solution uses more coordinates than the problem has")
        if ref.kind is ReferenceKind.EIG:
            eq, _ = EIGEN_FORMULAS[ref.formula]
            if eq is not self.equation or self.d != 2:
                raise ConfigError(f"formula {ref.formula!r} does not describe this 2D problem")
            lengths = {b - a for a, b in self.domain}
            if len(lengths) != 1:
                raise ConfigError("eigenvalue formulas need a square domain")
        if self.forcing.dimension > self.d:
            raise ConfigError("forcing uses more coordinates than the problem has")
        b = self.equation.order
        for j in range(self.d):
            count = sum(bc.axis == j for bc in self.bcs)
            if count != b:
                raise ConfigError(f"axis {AXES[j]} has {count} boundary conditions, expected {b}")
        if self.alpha is not None and self.alpha < 0:
            raise ConfigError("alpha must be nonnegative")
        try:
            CornerScheme.parse(self.scheme)
        except ValueError:
            raise ConfigError(f"unknown corner scheme {self.scheme!r}") from None

    @property
    def b(self) -> int:
        return self.equation.order

    def with_overrides(self, n=None, scheme=None, alpha=None, naive=None) -> ExperimentConfig:
        changes = {}
        if n is not None:
            changes["n_list"] = (int(n),)
            ref = self.reference
            if ref.kind is ReferenceKind.SELF and ref.n_ref <= n:
                raise ConfigError(f"--n {n} is not below N_ref = {ref.n_ref}")
        if scheme is not None:
            changes["scheme"] = scheme
        if alpha is not None:
            changes["alpha"] = int(alpha)
        if naive is not None:
            changes["naive"] = bool(naive)
        return replace(self, **changes)

    def tau_spec(self) -> TauSpec:
        alpha = self.b if self.alpha is None else self.alpha
        return TauSpec(TauFamily.ultraspherical(alpha), TauFamily.chebyshev(),
                       CornerScheme.parse(self.scheme), self.naive)

    def problem(self, N: int) -> ProblemSpec:
        """The discrete problem at resolution ``N`` with projected boundary data."""
        ops = [bc.operator() for bc in self.bcs]
        spec = ProblemSpec(self.d, N, self.equation, ops, self.tau_spec(), self.domain, self.gauge)
        data = []
        for i, bc in enumerate(self.bcs):
            rhs = None if bc.g.is_zero() else project_face_data(bc.g, spec, i)
            data.append(FaceData(ops[i], rhs))
        return spec.with_bcs(data)


def _floats(text: str, what: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{what}: expected numbers, got {text!r}") from None


def _expression(text: str, what: str) -> Expression:
    try:
        return Expression(text)
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if not cp.has_section("experiment"):
        raise ConfigError(f"{source}: missing [experiment] section")
    ex = cp["experiment"]
    try:
        d = ex.getint("d")
        equation = Equation(ex.get("equation", "poisson").strip().lower())
        gauge = ex.getboolean("gauge", fallback=False)
        eig_count = ex.getint("eig_count", fallback=10)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if d is None:
        raise ConfigError(f"{source}: [experiment] needs d")
    try:
        n_list = tuple(int(t) for t in ex.get("n", "").replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{source}: n must be a list of integers") from None

    dom = _floats(ex.get("domain", "-1 1"), "domain")
    if len(dom) == 2:
        dom = dom * d
    if len(dom) != 2 * d:
        raise ConfigError(f"domain needs 2 or {2 * d} numbers")
    domain = tuple((dom[2 * k], dom[2 * k + 1]) for k in range(d))
    if any(b <= a for a, b in domain):
        raise ConfigError(f"degenerate domain {domain}")

    forcing = _expression(ex.get("forcing", "0"), "forcing")
    if "reference" not in ex:
        raise ConfigError(f"{source}: [experiment] needs a reference mode")
    try:
        reference = ReferenceMode.parse(ex["reference"])
    except ExpressionError as exc:
        raise ConfigError(f"reference: {exc}") from exc

    alpha, scheme, naive = None, "dihedral", False
    if cp.has_section("tau"):
        tau = cp["tau"]
        try:
            alpha = tau.getint("alpha", fallback=None)
            naive = tau.getboolean("naive", fallback=False)
        except ValueError as exc:
            raise ConfigError(f"[tau]: {exc}") from exc
        scheme = tau.get("scheme", "dihedral").strip()

    entries = []
    for name in cp.sections():
        if not name.startswith("bc"):
            continue
        m = SECTION.match(name)
        if not m:
            raise ConfigError(f"bad boundary section name [{name}]")
        axis = AXES.index(m.group(1))
        if axis >= d:
            raise ConfigError(f"[{name}] refers to an axis beyond d = {d}")
        sec = cp[name]
        frame = sec.get("frame", "normal").strip().lower()
        if frame not in ("normal", "axis"):
            raise ConfigError(f"[{name}] frame must be 'normal' or 'axis'")
        poly = _floats(sec.get("poly", "1"), f"[{name}] poly")
        if not any(poly):
            raise ConfigError(f"[{name}] poly is identically zero")
        side = Side.LOW if m.group(2) == "low" else Side.HIGH
        order = int(m.group(3) or 1)
        entry = BCEntry(axis, side, tuple(poly), frame, _expression(sec.get("g", "0"), f"[{name}] g"))
        entries.append(((axis, side.value, order), entry))
    entries.sort(key=lambda e: e[0])
    keys = [k for k, _ in entries]
    if len(set(keys)) != len(keys):
        raise ConfigError("duplicate boundary sections")

    outputs = dict(cp["output"]) if cp.has_section("output") else {}
    outputs.setdefault("csv", "convergence.csv")
    outputs.setdefault("svg", "convergence.svg")
    outputs.setdefault("snapshot", "solution.npz")
    outputs.setdefault("spectrum", "spectrum.csv")
    outputs.setdefault("matrix", "matrix.mtx")

    try:
        return ExperimentConfig(ex.get("name", Path(source).stem), equation, d, n_list, domain,
                                tuple(e for _, e in entries), forcing, reference, alpha, scheme,
                                naive, gauge, eig_count, outputs, source)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def bundled_configs() -> list:
    root = resources.files("cubetau.harness") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_config(name_or_path) -> ExperimentConfig:
    """Read a config from a path, or by bundled name such as ``poisson2d-dirichlet``."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_config(path.read_text(), str(path))
    res = resources.files("cubetau.harness") / "configs" / f"{name_or_path}.ini"
    if res.is_file():
        return parse_config(res.read_text(), f"{name_or_path}.ini")
    raise ConfigError(f"no config file or bundled config named {str(name_or_path)!r}; "
                      f"bundled: {', '.join(bundled_configs())}")
