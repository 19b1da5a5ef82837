import numpy as np
import pytest

import relaxbsde as rb


def test_registry():
    assert {"P-LIN", "P-QUAD", "P-BANG"} <= set(rb.list_problems())


def test_paths_are_deterministic():
    a = rb.generate_paths(7, 16, 8)
    b = rb.generate_paths(7, 16, 8)
    assert a.shape == (16, 8)
    assert np.array_equal(a, b)


def test_p_lin_z0():
    out = rb.solve("P-LIN", seed=7, paths=1 << 14, steps=64, basis_degree=1)
    assert abs(out["z"][0, 0] - np.exp(-1.0)) <= 0.02
    assert out["y"].shape == (65, 1 << 14)


def test_p_quad_adjoint_and_gap():
    out = rb.solve("P-QUAD", control="constant:0", paths=4096)
    assert np.all(out["p"] == 1.0)
    assert abs(out["gap"]["total_gap"] - 0.5) <= 0.03


def test_strict_and_dirac_controls_agree():
    idx = [j % 5 for j in range(16)]
    weights = np.zeros((16, 5))
    weights[np.arange(16), idx] = 1.0
    a = rb.solve("P-QUAD", control=idx, steps=16, paths=1024)
    b = rb.solve("P-QUAD", control=weights, steps=16, paths=1024)
    assert np.array_equal(a["y"], b["y"])
    assert np.array_equal(a["p"], b["p"])


def test_optimize_p_quad():
    res = rb.optimize("P-QUAD", init="constant:0", paths=8192)
    assert res["converged"]
    assert -0.53 <= res["cost"]["mean"] <= -0.47
    assert np.all(res["schedule"][:, 2] == 1.0)


def test_chatter_and_verify():
    rows = rb.chatter("P-BANG", refinements=[1, 2], paths=512, steps=16)
    assert abs(rows[0]["abs_gap"] - 1.0) <= 0.05
    assert rows[1]["abs_gap"] <= 0.05
    assert not rb.verify("P-QUAD", control="constant:0", paths=4096)["passed"]
    assert rb.verify("P-QUAD", control="constant:1", paths=4096)["passed"]


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        rb.solve("P-NOPE")
    with pytest.raises(ValueError):
        rb.solve("P-QUAD", control=np.ones((3, 3)))


def test_cli_entry():
    code, out, _ = rb.run_cli(["list-problems"])
    assert code == 0
    assert "P-BANG" in out
