import math
import os

import numpy as np
import pytest

import ltce


def small_panel(**extra):
    options = {"style": "binarymix", "n": 300, "p": 5, "gamma": 0.15, "seed": 4, "tau_x_draws": 20}
    options.update(extra)
    return ltce.simulate(options)


def test_simulate_shapes_and_monotone_missingness():
    s = small_panel()
    n, stages = s["outcomes"].shape
    assert (n, stages) == (300, 3)
    assert s["x"].shape == (300, 5)
    assert set(np.unique(s["a"])) <= {0, 1}
    observed = s["observed"].astype(bool)
    assert np.array_equal(observed, ~np.isnan(s["outcomes"]))
    assert np.all(observed[:, 1:] <= observed[:, :-1])
    assert s["tau"] == pytest.approx(np.mean(s["potential_y"][:, 1] - s["potential_y"][:, 0]))


def test_every_method_runs():
    s = small_panel()
    options = {"outcome.kind": "linear", "baseline.kind": "linear", "balance.max_epochs": 5}
    for method in ltce.methods():
        r = ltce.estimate(method, s["x"], s["a"], s["outcomes"], seed=1, options=options)
        assert r["method"] == method
        assert r["cate_hat"].shape == (300,)
        assert math.isfinite(r["tau_hat"])
        assert r["tau_hat"] == pytest.approx(r["cate_hat"].mean())


def test_estimates_are_deterministic():
    s = small_panel()
    options = {"balance.max_epochs": 10}
    a = ltce.estimate("balancenet", s["x"], s["a"], s["outcomes"], seed=3, options=options)
    b = ltce.estimate("balancenet", s["x"], s["a"], s["outcomes"], seed=3, options=options)
    assert np.array_equal(a["cate_hat"], b["cate_hat"])


def test_metrics():
    assert ltce.eps_cate(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(math.sqrt(12.5))
    assert ltce.eps_ate(np.array([3.0, -3.0]), np.zeros(2)) == 0.0
    t = ltce.paired_t_test([2, 4, 6, 8], [1, 2, 3, 4])
    assert t["df"] == 3
    assert t["p"] == pytest.approx(0.030466291662170977)


def test_errors_map_to_python_exceptions():
    s = small_panel()
    with pytest.raises(ValueError):
        ltce.estimate("forest", s["x"], s["a"], s["outcomes"])
    with pytest.raises(ValueError):
        ltce.simulate({"gama": 0.1})
    broken = s["outcomes"].copy()
    broken[0, :] = [np.nan, 1.0, 1.0]
    with pytest.raises(ValueError):
        ltce.estimate("naive-or", s["x"], s["a"], broken)


def test_run_writes_results(tmp_path):
    config = os.path.join(os.environ.get("LTCE_CONFIG_DIR", "configs"), "smoke.conf")
    count = ltce.run(config, str(tmp_path), ["trials=1", "n=200", "methods=naive-or,seqri",
                                             "baseline.kind=linear"])
    assert count == 2
    lines = (tmp_path / "results.jsonl").read_text().splitlines()
    assert len(lines) == 2
