"""Invariant suite run by ``cubetau check``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..assembly import Equation, ProblemSpec, assemble, assemble_rhs
from ..basis import Side
from ..operators import dirichlet
from ..solver import solve_dense, solve_schur_2d
from ..tau import (
    QuotientIndexSet,
    TauFamily,
    TauSpec,
    counting_identity,
    rectangular_collocation_family,
)

__all__ = [
    "CheckResult",
    "check_counting",
    "check_naive_singularity",
    "check_solver_agreement",
    "check_tau_equivalence",
    "dirichlet_square",
    "run_checks",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def dirichlet_square(N: int, tau: TauSpec | None = None, equation=Equation.POISSON) -> ProblemSpec:
    bcs = [dirichlet(j, s) for j in range(2) for s in (Side.LOW, Side.HIGH)]
    return ProblemSpec(2, N, equation, bcs, tau)


def _quotient_levels(d: int, N: int, b: int) -> dict:
    """Enumerate the tau index set directly and tally it by level."""
    q = QuotientIndexSet((N,) * d, b)
    members = q.members()
    high = members >= N - b
    mask = np.zeros((N,) * d, dtype=bool)
    mask[tuple(members.T)] = True
    expected = np.zeros((N,) * d, dtype=bool)
    for j in range(d):
        sl = [slice(None)] * d
        sl[j] = slice(N - b, N)
        expected[tuple(sl)] = True
    if len(members) != expected.sum() or not np.array_equal(mask, expected):
        return {}
    levels, counts = np.unique(high.sum(axis=1), return_counts=True)
    return dict(zip(levels.tolist(), counts.tolist()))


def check_counting(dims=(1, 2, 3), orders=(2, 4), sizes=range(8, 33)) -> CheckResult:
    t0 = time.perf_counter()
    bad = []
    cases = 0
    for d in dims:
        for b in orders:
            for N in sizes:
                cases += 1
                ok, table = counting_identity(d, N, b)
                enumerated = _quotient_levels(d, N, b)
                enumerated[0] = (N - b) ** d
                if not ok or enumerated != table or sum(table.values()) != N ** d:
                    bad.append((d, b, N))
    dt = time.perf_counter() - t0
    detail = f"{cases} cases, {len(bad)} mismatches, {dt:.3f}s"
    if bad:
        detail += f", first {bad[0]}"
    return CheckResult("counting identities", not bad and dt < 1.0, detail)


def _sv_ratio(spec: ProblemSpec) -> float:
    s = scipy.linalg.svdvals(assemble(spec).dense())
    return float(s[-1] / s[0])


def check_naive_singularity(N: int = 12) -> CheckResult:
    naive = _sv_ratio(dirichlet_square(N, TauSpec(TauFamily.ultraspherical(2), naive=True)))
    good = _sv_ratio(dirichlet_square(N))
    ok = naive < 1e-10 and good > 1e-6
    return CheckResult("naive corner taus are singular", ok,
                       f"N={N}: naive sigma_min/sigma_max={naive:.2e}, dihedral={good:.2e}")


def check_tau_equivalence(N: int = 16, trials: int = 20, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    spec = dirichlet_square(N, TauSpec(rectangular_collocation_family(N, 2)))
    ultra = assemble(spec)
    coll = assemble(spec, test="collocation")
    worst = 0.0
    for _ in range(trials):
        f = rng.standard_normal((N, N)) / (1.0 + np.add.outer(np.arange(N), np.arange(N))) ** 2
        g = [rng.standard_normal(N) / (1.0 + np.arange(N)) ** 2 for _ in spec.bcs]
        u1 = solve_dense(ultra, assemble_rhs(ultra, f, g)).u
        u2 = solve_dense(coll, assemble_rhs(coll, f, g)).u
        worst = max(worst, float(np.abs(u1 - u2).max() / np.abs(u1).max()))
    return CheckResult("tau equivalence (ultraspherical vs collocation test)", worst < 1e-8,
                       f"N={N}, {trials} random right-hand sides, max relative difference {worst:.2e}")


def check_solver_agreement(sizes=(8, 16, 32), trials: int = 20, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    blocks = []
    for N in sizes:
        system = assemble(dirichlet_square(N))
        for _ in range(trials):
            rhs = rng.standard_normal(system.size)
            a = solve_dense(system, rhs)
            s = solve_schur_2d(system, rhs)
            worst = max(worst, float(np.abs(a.x - s.x).max() / np.abs(a.x).max()))
        blocks.append(s.schur.schur_block == (N - 2) ** 2)
    ok = worst < 1e-10 and all(blocks)
    return CheckResult("Schur path agrees with dense LU", ok,
                       f"N in {tuple(sizes)}, {trials} right-hand sides each, max relative "
                       f"difference {worst:.2e}, Schur blocks (N-2)^2: {all(blocks)}")


def run_checks(seed: int = 0) -> list:
    return [
        check_counting(),
        check_naive_singularity(),
        check_tau_equivalence(seed=seed),
        check_solver_agreement(seed=seed),
    ]
