import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cubetau.basis import Side
from cubetau.harness import (
    ConfigError,
    ConvergenceReport,
    ConvergenceRow,
    Expression,
    ExpressionError,
    bundled_configs,
    expression_eval,
    fd_oracle_poisson_2d,
    load_config,
    parse_config,
    run_eig,
    run_experiment,
)
from cubetau.harness import cli
from cubetau.harness.checks import CheckResult
from cubetau.harness.config import ReferenceKind
from cubetau.operators import dirichlet, neumann

MANUFACTURED = """
[experiment]
name = small
equation = poisson
d = 2
n = 8 12 16
domain = 0 1
forcing = -2*pi^2*sin(pi*x)*sin(pi*y)
reference = manufactured sin(pi*x)*sin(pi*y)

[bc.x.low]
[bc.x.high]
[bc.y.low]
[bc.y.high]

[output]
csv = small.csv
svg = small.svg
snapshot = small.npz
"""

SELF = MANUFACTURED.replace("reference = manufactured sin(pi*x)*sin(pi*y)", "reference = self 24") \
    .replace("forcing = -2*pi^2*sin(pi*x)*sin(pi*y)", "forcing = exp(x)*cos(3*y)")


def test_expression_examples():
    assert expression_eval("sin(2*pi*x)", [0.25]) == pytest.approx(1.0)
    forcing = "-100*x*sin(20*pi*x^2*y)*cos(4*pi*(x+y))"
    want = -100 * 0.1 * math.sin(0.04 * math.pi) * math.cos(1.2 * math.pi)
    assert expression_eval(forcing, [0.1, 0.2]) == pytest.approx(want, rel=1e-14)
    rhs = "-(2*pi)^4*sin(2*pi*x)*cos(2*pi*y)*(9*cos(2*pi*z)-4)"
    assert expression_eval(rhs, [0.25, 0.0, 0.25]) == pytest.approx(4 * (2 * math.pi) ** 4)
    assert expression_eval("2^3^2", []) == 512.0
    assert expression_eval("-x**2", [3.0]) == -9.0


def test_expression_vectorized():
    e = Expression("x*y + 1")
    assert e.variables == {"x", "y"} and e.dimension == 2
    out = e(np.array([1.0, 2.0]), np.array([[1.0], [3.0]]))
    assert out.shape == (2, 2)
    assert np.array_equal(out, [[2.0, 3.0], [4.0, 7.0]])
    assert Expression("3")(np.zeros((2, 3))).shape == (2, 3)
    assert Expression(" 0 ").is_zero() and not Expression("0*x + 1").is_zero()


@pytest.mark.parametrize("text,column", [
    ("sin(x) + $", 10),
    ("foo(x)", 1),
    ("x + w", 5),
    ("x ^ y ^ (", 9),
    ("sin(x, y)", 1),
    ("'a'", 1),
    ("x < 1", 1),
])
def test_expression_errors(text, column):
    with pytest.raises(ExpressionError) as exc:
        Expression(text)
    assert exc.value.position == column - 1
    assert f"column {column}" in str(exc.value)


def test_expression_domain_errors():
    with pytest.raises(ExpressionError):
        Expression("1/x")(0.0)
    with pytest.raises(ExpressionError):
        Expression("exp(x)")(1e4)
    with pytest.raises(ExpressionError):
        Expression("x + z")(1.0, 2.0)
    with pytest.raises(ExpressionError):
        Expression("   ")


def test_bundled_configs():
    names = bundled_configs()
    assert names == ["biharmonic2d-eig", "biharmonic3d", "poisson2d-dirichlet",
                     "poisson2d-neumann", "poisson2d-robin"]
    for name in names:
        cfg = load_config(name)
        assert cfg.name == name
        ops = [bc.operator() for bc in cfg.bcs]
        assert len(ops) == cfg.d * cfg.b
    robin = load_config("poisson2d-robin")
    assert all(op.normal_poly == (1.0, 1.0) for op in (bc.operator() for bc in robin.bcs))
    assert robin.reference.n_ref == 160 > max(robin.n_list)
    assert load_config("poisson2d-neumann").gauge
    eig = load_config("biharmonic2d-eig")
    assert eig.reference.kind is ReferenceKind.EIG
    assert eig.reference.exact_eigenvalues(1.0, 3) == pytest.approx([4 * np.pi ** 4, 25 * np.pi ** 4,
                                                                     25 * np.pi ** 4])
    with pytest.raises(ConfigError):
        load_config("no-such-config")


def test_axis_frame_in_config():
    cfg = load_config("biharmonic3d")
    ops = [bc.operator() for bc in cfg.bcs]
    # third axis derivative on the low y face is minus the third normal derivative
    y_low = [op for op in ops if op.axis == 1 and op.side is Side.LOW]
    assert (0.0, 0.0, 0.0, -1.0) in [op.normal_poly for op in y_low]


@pytest.mark.parametrize("edit", [
    lambda t: t.replace("n = 8 12 16", "n = 8 16 12"),
    lambda t: t.replace("n = 8 12 16", "n = 8 x"),
    lambda t: t.replace("domain = 0 1", "domain = 1 1"),
    lambda t: t.replace("domain = 0 1", "domain = 0 1 2"),
    lambda t: t.replace("[bc.y.high]", ""),
    lambda t: t.replace("[bc.y.high]", "[bc.z.high]"),
    lambda t: t.replace("[bc.y.high]", "[bc.y.top]"),
    lambda t: t.replace("[bc.y.high]", "[bc.y.high]\nframe = sideways"),
    lambda t: t.replace("[bc.y.high]", "[bc.y.high]\npoly = 0 0"),
    lambda t: t.replace("[bc.y.high]", "[bc.y.high]\ng = sin(x"),
    lambda t: t.replace("reference = manufactured sin(pi*x)*sin(pi*y)", "reference = guess"),
    lambda t: t.replace("reference = manufactured sin(pi*x)*sin(pi*y)", "reference = self 16"),
    lambda t: t.replace("reference = manufactured sin(pi*x)*sin(pi*y)", "reference = self many"),
    lambda t: t.replace("reference = manufactured sin(pi*x)*sin(pi*y)", "reference = manufactured z"),
    lambda t: t.replace("reference = manufactured sin(pi*x)*sin(pi*y)", "reference = eig laplace-dirichlet2"),
    lambda t: t.replace("reference = manufactured sin(pi*x)*sin(pi*y)", ""),
    lambda t: t.replace("equation = poisson", "equation = wave"),
    lambda t: t.replace("[experiment]", "[experimnt]"),
    lambda t: t + "\n[tau]\nscheme = spiral\n",
    lambda t: t + "\n[tau]\nalpha = many\n",
    lambda t: t + "\n[bc.x.low]\n",
])
def test_config_errors(edit):
    with pytest.raises(ConfigError):
        parse_config(edit(MANUFACTURED))


def test_overrides():
    cfg = parse_config(SELF)
    assert cfg.with_overrides(n=20).n_list == (20,)
    with pytest.raises(ConfigError):
        cfg.with_overrides(n=24)
    over = cfg.with_overrides(scheme="clockwise", alpha=0, naive=True)
    spec = over.tau_spec()
    assert spec.naive and spec.corner_scheme.kind.value == "clockwise"


def test_run_experiment_manufactured(tmp_path):
    cfg = parse_config(MANUFACTURED)
    result = run_experiment(cfg, out_dir=tmp_path, snapshots="all")
    errs = [r.error_inf for r in result.report.rows]
    assert [r.N for r in result.report.rows] == [8, 12, 16]
    assert errs[-1] < 1e-9 and errs[0] > errs[1] > errs[-1]
    assert all(r.error_2 <= r.error_inf for r in result.report.rows)
    snap = np.load(tmp_path / "small.npz")
    assert snap["u_N16"].shape == (101, 101)
    text = (tmp_path / "small.csv").read_text()
    assert text.splitlines()[0] == "N,error_inf,error_2,solve_seconds,condition_estimate"
    ET.fromstring((tmp_path / "small.svg").read_text())


def test_csv_deterministic():
    cfg = parse_config(SELF)
    a = run_experiment(cfg).report
    b = run_experiment(cfg).report

    def strip(report):
        return [(r.N, r.error_inf, r.error_2, r.condition_estimate) for r in report.rows]

    assert strip(a) == strip(b)
    cols = lambda rep: [",".join(line.split(",")[:3]) for line in rep.to_csv().splitlines()]
    assert cols(a) == cols(b)


def test_csv_round_trip():
    rep = ConvergenceReport("t", [ConvergenceRow(8, 0.1, 0.01, 1.5, 10.0),
                                  ConvergenceRow(16, 1e-17 / 3, 0.0, 2.0, 1e300)])
    back = ConvergenceReport.from_csv(rep.to_csv(), "t")
    assert back.rows == rep.rows
    assert back.error(16) == rep.rows[1].error_inf
    with pytest.raises(KeyError):
        back.error(32)
    with pytest.raises(ValueError):
        ConvergenceRow(8, -1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ConvergenceReport.from_csv("a,b\n1,2\n")


def test_svg_handles_zero_errors(tmp_path):
    rep = ConvergenceReport("zero & one", [ConvergenceRow(8, 0.0, 0.0, 0.0, 1.0),
                                           ConvergenceRow(16, 1e-3, 1e-4, 0.0, 1.0)])
    root = ET.fromstring(rep.write_svg(tmp_path / "x.svg").read_text())
    assert root.tag.endswith("svg")


def test_eig_mode():
    cfg = load_config("biharmonic2d-eig")
    eig = run_eig(cfg, 16, count=3)
    assert eig.rel_errors[:3].max() < 1e-6
    assert len(eig.rel_errors) >= 3
    assert eig.spectrum_csv().startswith("index,")


def test_fd_oracle_examples():
    exact = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    x, y, U = fd_oracle_poisson_2d(lambda x, y: -2 * np.pi ** 2 * exact(x, y), 0.0, 201)
    X, Y = np.meshgrid(x, y, indexing="ij")
    assert np.abs(U - exact(X, Y)).max() < 5e-4
    _, _, U = fd_oracle_poisson_2d(0.0, 1.0, 51)
    assert np.abs(U - 1.0).max() < 1e-12


def test_fd_oracle_errors():
    with pytest.raises(ValueError):
        fd_oracle_poisson_2d(0.0, 0.0, 50)
    with pytest.raises(ValueError):
        fd_oracle_poisson_2d(0.0, 0.0, 49)
    ops = [dirichlet(0, Side.LOW), neumann(0, Side.HIGH), dirichlet(1, Side.LOW), dirichlet(1, Side.HIGH)]
    with pytest.raises(ValueError):
        fd_oracle_poisson_2d(0.0, 0.0, 51, operators=ops)


def test_cli_solve_and_dump(tmp_path, capsys):
    path = tmp_path / "small.ini"
    path.write_text(MANUFACTURED)
    assert cli.main(["solve", str(path), "--n", "12", "--out", str(tmp_path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "method=dense" in out and "max error vs manufactured solution" in out
    assert (tmp_path / "small.npz").exists()
    assert cli.main(["dump-matrix", str(path), "--n", "8", "--out", str(tmp_path)]) == cli.EXIT_OK
    mtx = (tmp_path / "matrix.mtx").read_text()
    assert mtx.startswith("%%MatrixMarket")
    assert len(np.loadtxt(tmp_path / "matrix.rhs")) == 100


def test_cli_converge_and_eig(tmp_path, capsys):
    path = tmp_path / "small.ini"
    path.write_text(MANUFACTURED)
    assert cli.main(["converge", str(path), "--out", str(tmp_path), "--snapshots", "none"]) == 0
    assert (tmp_path / "small.csv").exists() and (tmp_path / "small.svg").exists()
    assert not (tmp_path / "small.npz").exists()
    assert cli.main(["eig", "biharmonic2d-eig", "--n", "16", "--count", "3", "--out", str(tmp_path)]) == 0
    assert "rel" in capsys.readouterr().out
    assert (tmp_path / "biharmonic2d-eig-spectrum.csv").exists()


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["solve", "no-such-config"]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.ini"
    bad.write_text(MANUFACTURED.replace("sin(pi*x)*sin(pi*y)", "sin(pi*x))"))
    assert cli.main(["solve", str(bad)]) == cli.EXIT_CONFIG
    # eig on a config without an eigenvalue reference
    assert cli.main(["eig", "poisson2d-dirichlet", "--n", "8"]) == cli.EXIT_CONFIG
    # naive corner taus leave the system singular
    assert cli.main(["solve", "poisson2d-dirichlet", "--n", "12", "--naive",
                     "--out", str(tmp_path)]) == cli.EXIT_SOLVER
    monkeypatch.setattr(cli, "run_checks", lambda seed=0: [CheckResult("x", False, "forced")])
    assert cli.main(["check"]) == cli.EXIT_CHECK
    monkeypatch.setattr(cli, "run_checks", lambda seed=0: [CheckResult("x", True, "ok")])
    assert cli.main(["check", "--seed", "3"]) == cli.EXIT_OK


def test_cli_check_real(capsys):
    assert cli.main(["check"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4
