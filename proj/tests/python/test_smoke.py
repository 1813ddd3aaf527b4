import os
import pathlib

import numpy as np
import pytest

import tumoropt

CONFIG_DIR = pathlib.Path(
    os.environ.get("TUMOROPT_CONFIG_DIR", pathlib.Path(__file__).resolve().parents[2] / "configs")
)


def load(name, *overrides):
    path = CONFIG_DIR / name
    return tumoropt.Problem(path.read_text(), str(path.parent), list(overrides))


def test_grid_and_laplacian():
    g = tumoropt.Grid.line(4, 4.0)
    assert (g.nx, g.ny, g.dim) == (4, 1, 1)
    lap = tumoropt.neumann_laplacian(g, np.array([[1.0, 2.0, 4.0, 8.0]]))
    np.testing.assert_array_equal(lap, [[1.0, 1.0, 2.0, -4.0]])


def test_equilibrium_simulation():
    p = load("equilibrium.cfg")
    out = p.simulate()
    assert out["phi"].shape == (p.n_steps + 1, 1, p.grid.nx)
    np.testing.assert_allclose(out["phi"][-1], out["phi"][0], atol=1e-10)
    assert max(abs(r) for r in out["mass_residual"]) < 1e-10


def test_gradient_matches_central_difference():
    p = load("gradcheck.cfg")
    u = np.full((p.n_steps, 1, p.grid.nx), 0.1)
    rng = np.random.default_rng(3)
    h = rng.uniform(-1.0, 1.0, u.shape)
    _, g = p.cost_and_gradient(u)
    eps = 1e-4
    fd = (p.cost(u + eps * h) - p.cost(u - eps * h)) / (2 * eps)
    inner = p.tau * p.grid.cell_volume * np.sum(g * h)
    assert abs(fd - inner) <= 1e-6 * abs(inner)


def test_dot_product_identity():
    rep = tumoropt.dot_product_test(load("gradcheck.cfg"), seed=2)
    assert max(rep.values()) <= 1e-10


def test_optimize_reaches_kkt_point():
    res = load("optimize.cfg").optimize()
    assert res["termination"] == "tolerance_met"
    assert res["kkt_violations"] == 0
    assert res["projection_gap"] <= 1e-5
    costs = np.array(res["cost_history"])
    assert np.all(np.diff(costs) <= 0.0)
    assert res["control"].min() >= -1.0 and res["control"].max() <= 1.0


def test_hypotheses_and_config_errors():
    rep = load("hypotheses.cfg").check_hypotheses()
    assert rep["passed"]
    assert rep["alpha"][2] == pytest.approx(1.0)
    with pytest.raises(tumoropt.ConfigError, match="H1"):
        tumoropt.check_config("model.beta_q = -1\n")
    canonical = tumoropt.check_config("time.tau = 0.001\ntime.t_final = 0.1\n")
    assert tumoropt.check_config(canonical) == canonical


def test_run_subcommand(tmp_path):
    code, out, err = tumoropt.run_subcommand(
        "grad-check", str(CONFIG_DIR / "gradcheck.cfg"), [f"io.outdir={tmp_path}"]
    )
    assert code == 0, err
    assert "status=pass" in out
