"""Acceptance gate: one test and one PASS/FAIL line per criterion.

Tolerances are the stated ones; nothing here is loosened to make a
criterion pass.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from cubetau import (
    CornerScheme,
    FaceData,
    ProblemSpec,
    Side,
    TauSpec,
    assemble,
    dirichlet,
    evaluate,
    project_face_data,
    project_function,
)
from cubetau.basis import integral_functional
from cubetau.harness import fd_oracle_poisson_2d, load_config, run_eig, run_experiment, solve_config
from cubetau.harness.checks import (
    check_counting,
    check_naive_singularity,
    check_tau_equivalence,
)
from cubetau.solver import solve_dense, solve_schur_2d

PI4 = np.pi ** 4


def _exact_plate(count):
    vals = sorted(PI4 * (m * m + n * n) ** 2 for m in range(1, 40) for n in range(1, 40))
    return np.array(vals[:count])


@pytest.fixture(scope="module")
def poisson_runs():
    """Self-convergence runs at N = 64, 128 against N_ref = 160 for all three conditions."""
    out = {}
    for name in ("poisson2d-dirichlet", "poisson2d-neumann", "poisson2d-robin"):
        cfg = load_config(name)
        cfg = replace(cfg, n_list=(64, 128))
        t0 = time.perf_counter()
        result = run_experiment(cfg)
        out[name] = (cfg, result, time.perf_counter() - t0)
    return out


def test_criterion_01_counting(criterion):
    r = check_counting(dims=(1, 2, 3), orders=(2, 4), sizes=range(8, 33))
    criterion(1, r.passed, f"N^d = sum C(d,k) b^k (N-b)^(d-k) and level sizes: {r.detail}")


def test_criterion_02_dirichlet_self_convergence(criterion, poisson_runs):
    cfg, result, seconds = poisson_runs["poisson2d-dirichlet"]
    rows = {r.N: r for r in result.report.rows}
    e64, e128 = rows[64].error_inf, rows[128].error_inf
    slowest = max(r.solve_seconds for r in result.report.rows)
    drop = np.log10(e64 / max(e128, 1e-300))
    ok = e128 < 1e-8 and drop >= 4 and slowest < 60
    criterion(2, ok, f"Dirichlet error_inf N=64 {e64:.2e}, N=128 {e128:.2e} (< 1e-8), "
                     f"drop {drop:.1f} orders (>= 4), slowest solve {slowest:.1f}s (< 60s)")


def test_criterion_03_neumann_robin(criterion, poisson_runs):
    def maps(name):
        cfg = poisson_runs[name][0]
        s = assemble(cfg.problem(32))
        strip = lambda labels: [lab for lab in labels if lab[0] != "gauge" and lab[1:2] != ("gauge",)]
        return strip(s.row_map), strip(s.col_map), s

    rd, cd, _ = maps("poisson2d-dirichlet")
    rn, cn, sn = maps("poisson2d-neumann")
    rr, cr, _ = maps("poisson2d-robin")
    same = rd == rn == rr and cd == cn == cr
    gauge_only = sn.size == len(rd) + 1

    e_n = poisson_runs["poisson2d-neumann"][1].report.error(128)
    e_r = poisson_runs["poisson2d-robin"][1].report.error(128)
    cfg_n = poisson_runs["poisson2d-neumann"][0]
    _, sol, _ = solve_config(cfg_n, 128)
    w = integral_functional(128)
    mean = abs(w @ sol.u @ w) / 4.0
    ok = same and gauge_only and e_n < 1e-7 and e_r < 1e-7 and mean < 1e-10
    criterion(3, ok, f"row/col maps identical {same} (gauge is the only extra: {gauge_only}); "
                     f"error_inf N=128 Neumann {e_n:.2e}, Robin {e_r:.2e} (< 1e-7); "
                     f"Neumann mean {mean:.1e} (< 1e-10)")


def test_criterion_04_biharmonic_3d(criterion):
    cfg = load_config("biharmonic3d")
    t0 = time.perf_counter()
    _, sol, _ = solve_config(cfg, 24)
    seconds = time.perf_counter() - t0
    g = np.linspace(0.0, 1.0, 41)
    mesh = np.meshgrid(g, g, g, indexing="ij")
    err = float(np.max(np.abs(evaluate(sol.u, [g, g, g], cfg.domain) - cfg.reference.solution(*mesh))))
    ok = err < 1e-8 and seconds < 600
    criterion(4, ok, f"3D biharmonic N=24 max error {err:.2e} (< 1e-8), {seconds:.1f}s (< 600s), "
                     f"solver {sol.method}")


def test_criterion_05_eigenvalues(criterion):
    cfg = load_config("biharmonic2d-eig")
    ex40 = _exact_plate(40)

    e4 = run_eig(cfg.with_overrides(alpha=4), 32, count=40)
    w4 = e4.spectrum.eigenvalues
    rel4 = np.abs(w4[:10] - ex40[:10]) / ex40[:10]
    degenerate = bool(np.all(np.abs(w4[1:3] - 25 * PI4) / (25 * PI4) < 1e-6))

    e0 = run_eig(cfg.with_overrides(alpha=0), 32, count=40)
    w0 = e0.spectrum.eigenvalues
    rel0 = np.abs(w0[:40] - ex40) / ex40
    exact_all = _exact_plate(len(w0))
    rel0_all = np.abs(w0 - exact_all) / exact_all
    first_bad = int(np.argmax(rel0_all > 0.1)) if np.any(rel0_all > 0.1) else -1

    ok4 = rel4.max() < 1e-6 and degenerate and e4.spectrum.finite_count <= 32 ** 2
    ok0 = rel0.max() > 0.1
    criterion(5, ok4 and ok0,
              f"alpha=4: lowest 10 max rel error {rel4.max():.2e} (< 1e-6), 25 pi^4 pair {degenerate}, "
              f"{e4.spectrum.finite_count} finite; alpha=0: lowest 40 max rel error {rel0.max():.2e} "
              f"(needs > 0.1), first >10% deviation at index {first_bad}, "
              f"max |sigma| {np.abs(w0).max():.1e} vs {np.abs(w4).max():.1e} at alpha=4")


def test_criterion_06_naive_singular(criterion):
    r = check_naive_singularity(12)
    criterion(6, r.passed, r.detail + " (naive < 1e-10, dihedral > 1e-6)")


def test_criterion_07_tau_equivalence(criterion):
    r = check_tau_equivalence(N=16, trials=20, seed=0)
    criterion(7, r.passed, r.detail + " (< 1e-8)")


def _square_problem(N, data, scheme):
    ops = [dirichlet(j, s) for j in range(2) for s in (Side.LOW, Side.HIGH)]
    spec = ProblemSpec(2, N, "poisson", ops, TauSpec.standard(2, CornerScheme.parse(scheme)))
    faces = [FaceData(op, project_face_data(data[i], spec, i)) for i, op in enumerate(ops)]
    return spec.with_bcs(faces)


def test_criterion_08_corner_schemes(criterion):
    N = 24
    exact = lambda x, y: np.exp(x) * np.cos(y) + x * y ** 2
    smooth = [exact] * 4
    f = project_function(lambda x, y: np.exp(x) * np.cos(y) - np.exp(x) * np.cos(y) + 2 * x,
                         (N, N), [(-1, 1), (-1, 1)])
    sols = {}
    for scheme in ("dihedral", "clockwise", "eastwest"):
        sols[scheme] = solve_dense(assemble(_square_problem(N, smooth, scheme), f=f)).u
    spread = max(np.abs(sols[a] - sols["dihedral"]).max() for a in sols)

    zero = lambda x, y: 0.0 * x
    one = lambda x, y: 1.0 + 0.0 * x
    # bc order: x low (W), x high (E), y low (S), y high (N)
    jump = [zero, zero, zero, one]
    u = solve_dense(assemble(_square_problem(N, jump, "dihedral"))).u
    nw = float(evaluate(u, [[-1.0], [1.0]])[0, 0])
    ne = float(evaluate(u, [[1.0], [1.0]])[0, 0])
    ok = spread < 1e-10 and abs(nw - 0.5) < 1e-10
    criterion(8, ok, f"continuous data: scheme spread {spread:.2e} (< 1e-10); "
                     f"g_N=1, g_W=0: u(NW)={nw:.12f}, u(NE)={ne:.12f} (0.5 to 1e-10)")


def test_criterion_09_fd_oracle(criterion):
    cfg = load_config("poisson2d-dirichlet")
    x, y, U = fd_oracle_poisson_2d(cfg.forcing, 0.0, 201, cfg.domain,
                                   operators=[bc.operator() for bc in cfg.bcs])
    _, s64, _ = solve_config(cfg, 64)
    _, s128, _ = solve_config(cfg, 128)
    d64 = float(np.max(np.abs(evaluate(s64.u, [x, y]) - U)))
    d128 = float(np.max(np.abs(evaluate(s128.u, [x, y]) - U)))
    spectral64 = float(np.max(np.abs(evaluate(s64.u, [x, y]) - evaluate(s128.u, [x, y]))))
    criterion(9, d64 < 5e-3,
              f"spectral N=64 vs FD M=201 max difference {d64:.2e} (< 5e-3); "
              f"N=64 vs N=128 spectral {spectral64:.2e}; N=128 vs FD {d128:.2e}")


def test_criterion_10_schur(criterion):
    rng = np.random.default_rng(10)
    worst, blocks = 0.0, []
    for N in (8, 16, 32):
        system = assemble(_square_problem(N, [lambda x, y: 0.0 * x] * 4, "dihedral"))
        for _ in range(20):
            rhs = rng.standard_normal(system.size)
            a = solve_dense(system, rhs)
            s = solve_schur_2d(system, rhs)
            worst = max(worst, float(np.abs(a.x - s.x).max() / np.abs(a.x).max()))
        blocks.append((N, s.schur.schur_block, (N - 2) ** 2))
    ok = worst < 1e-10 and all(b == e for _, b, e in blocks)
    criterion(10, ok, f"Schur vs dense max relative difference {worst:.2e} (< 1e-10); "
                      f"Schur blocks {[(n, b) for n, b, _ in blocks]} = (N-2)^2")
