"""Convergence sweeps and spectra driven by an :class:`ExperimentConfig`."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from ..assembly import assemble, evaluate, project_function
from ..solver import Spectrum, equilibrate, solve, solve_eig
from .config import AXES, ExperimentConfig, ReferenceKind
from .report import ConvergenceReport, ConvergenceRow

__all__ = [
    "EigenResult",
    "ExperimentResult",
    "PLOT_POINTS",
    "SolverFailure",
    "plot_grid",
    "run_eig",
    "run_experiment",
    "solve_config",
]

log = logging.getLogger(__name__)

PLOT_POINTS = 101


class SolverFailure(ArithmeticError):
    """A solve inside a sweep failed; ``N`` names the resolution."""

    def __init__(self, N: int, cause: Exception):
        super().__init__(f"N = {N}: {cause}")
        self.N = N
        self.cause = cause


def plot_grid(config: ExperimentConfig) -> list:
    return [np.linspace(a, b, PLOT_POINTS) for a, b in config.domain]


def solve_config(config: ExperimentConfig, N: int, method: str = "auto"):
    """Assemble and solve at one resolution; returns ``(system, result, seconds)``."""
    t0 = time.perf_counter()
    try:
        spec = config.problem(N)
        f = project_function(config.forcing, spec.shape, spec.domain)
        system = assemble(spec, f=f)
        result = solve(system, method=method)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise SolverFailure(N, exc) from exc
    return system, result, time.perf_counter() - t0


@dataclass
class ExperimentResult:
    report: ConvergenceReport
    grid: list
    snapshots: dict = field(default_factory=dict)
    spectra: dict = field(default_factory=dict)

    def save_snapshots(self, path) -> Path:
        path = Path(path)
        arrays = {AXES[k]: g for k, g in enumerate(self.grid)}
        arrays.update({f"u_N{N}": v for N, v in self.snapshots.items()})
        np.savez_compressed(path, **arrays)
        return path


@dataclass
class EigenResult:
    N: int
    spectrum: Spectrum
    exact: np.ndarray
    seconds: float
    condition_estimate: float

    @property
    def rel_errors(self) -> np.ndarray:
        k = min(len(self.exact), len(self.spectrum.eigenvalues))
        return np.abs(self.spectrum.eigenvalues[:k] - self.exact[:k]) / np.abs(self.exact[:k])

    def spectrum_csv(self) -> str:
        lines = ["index,real,imag,exact,rel_error"]
        errs = self.rel_errors
        for i, w in enumerate(self.spectrum.eigenvalues):
            exact = "{:.17g}".format(self.exact[i]) if i < len(errs) else ""
            err = "{:.17g}".format(errs[i]) if i < len(errs) else ""
            lines.append(f"{i},{w.real:.17g},{w.imag:.17g},{exact},{err}")
        return "\n".join(lines) + "\n"


def run_eig(config: ExperimentConfig, N: int, count: int | None = None) -> EigenResult:
    """Finite spectrum at resolution ``N`` against the configured exact formula."""
    if config.reference.kind is not ReferenceKind.EIG:
        raise ValueError("config does not have an eigenvalue reference")
    count = count or max(config.eig_count, 1)
    t0 = time.perf_counter()
    try:
        system = assemble(config.problem(N))
        spectrum = solve_eig(system)
    except ArithmeticError as exc:
        raise SolverFailure(N, exc) from exc
    seconds = time.perf_counter() - t0
    A = system.dense()
    r, c = equilibrate(A)
    As = A * r[:, None] * c
    lu = scipy.linalg.lu_factor(As, check_finite=False)
    rcond, _ = scipy.linalg.lapack.dgecon(lu[0], np.abs(As).sum(axis=0).max(), norm="1")
    a, b = config.domain[0]
    n_exact = max(count, min(len(spectrum.eigenvalues), 4 * count))
    exact = np.array(config.reference.exact_eigenvalues(b - a, n_exact))
    return EigenResult(N, spectrum, exact, seconds, 1.0 / rcond if rcond > 0 else np.inf)


def _reference_values(config: ExperimentConfig, grid: list):
    ref = config.reference
    if ref.kind is ReferenceKind.MANUFACTURED:
        return ref.solution(*np.meshgrid(*grid, indexing="ij")), None
    system, result, _ = solve_config(config, ref.n_ref)
    log.info("reference N=%d solved (%s)", ref.n_ref, result.method)
    return evaluate(result.u, grid, config.domain), result


def run_experiment(config: ExperimentConfig, out_dir=None, snapshots: str = "last",
                   plot: bool = True) -> ExperimentResult:
    """Sweep the configured N list and compare against the reference.

    Errors are taken on a ``101``-per-axis uniform grid: ``error_inf`` is
    the max deviation and ``error_2`` the root mean square. In eigenvalue
    mode they are the max and RMS relative errors of the lowest
    ``eig_count`` finite eigenvalues. Outputs are written when ``out_dir``
    is given.
    """
    grid = plot_grid(config)
    report = ConvergenceReport(config.name)
    result = ExperimentResult(report, grid)
    if config.reference.kind is ReferenceKind.EIG:
        for N in config.n_list:
            eig = run_eig(config, N)
            errs = eig.rel_errors[: config.eig_count]
            report.rows.append(ConvergenceRow(N, float(errs.max()), float(np.sqrt(np.mean(errs ** 2))),
                                              eig.seconds, eig.condition_estimate))
            result.spectra[N] = eig
    else:
        ref_vals, _ = _reference_values(config, grid)
        for N in config.n_list:
            _, sol, seconds = solve_config(config, N)
            vals = evaluate(sol.u, grid, config.domain)
            diff = vals - ref_vals
            report.rows.append(ConvergenceRow(N, float(np.max(np.abs(diff))),
                                              float(np.sqrt(np.mean(diff ** 2))), seconds,
                                              float(sol.condition_estimate)))
            log.info("%s N=%d error_inf=%.3e (%.2fs)", config.name, N, report.rows[-1].error_inf,
                     seconds)
            if snapshots == "all" or (snapshots == "last" and N == config.n_list[-1]):
                result.snapshots[N] = vals
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.write_csv(out / config.outputs["csv"])
        if plot:
            report.write_svg(out / config.outputs["svg"])
        if result.snapshots:
            result.save_snapshots(out / config.outputs["snapshot"])
        for N, eig in result.spectra.items():
            if N == config.n_list[-1]:
                (out / config.outputs["spectrum"]).write_text(eig.spectrum_csv())
    return result
