import json

import numpy as np
import pytest

from deformed_iid.artifacts import ArtifactError, config_hash, emit_plot_data, read_csv, write_csv
from deformed_iid.cli import EXIT_COMPUTE, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, parse_complex, parse_eta_grid, run


def _summary(out):
    return json.loads((out / "summary.json").read_text())


def test_edge_scan_A0(tmp_path):
    out = tmp_path / "o"
    assert run(["edge-scan", "--model", "zero", "--N", "512", "--ray", "1+0i", "--out", str(out)]) == EXIT_OK
    ep = json.loads((out / "edge.json").read_text())
    assert ep["cls"] == "sharp" and np.allclose(ep["gamma0"], [1, 0])
    s = _summary(out)
    assert s["passed"] and s["config"]["N"] == 512 and "numpy" in s["versions"] and s["wall_time_s"] >= 0


def test_cluster_count_rerun_identical(tmp_path):
    args = ["cluster-count", "--model", "twocluster", "--N", "60", "--trials", "3", "--seed", "7", "--h", "0.05"]
    assert run(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert run(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == EXIT_OK
    a = (tmp_path / "a" / "counts.csv").read_bytes()
    assert a == (tmp_path / "b" / "counts.csv").read_bytes()
    head, names, data = read_csv(tmp_path / "a" / "counts.csv")
    assert head.startswith("# config_hash=") and "seed=7" in head
    assert np.all(data[:, 1:3] == 30)


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "zero", "N": 32, "z": "0.3", "eta0": 0.5}))
    out = tmp_path / "o"
    assert run(["flow-check", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert _summary(out)["config"]["eta0"] == 0.5
    assert run(["flow-check", "--config", str(cfg), "--out", str(out),
                "--tol-overrides", '{"rel_dev": 1e-30}']) == EXIT_FAIL


def test_bad_configs(tmp_path):
    out = str(tmp_path / "o")
    assert run(["edge-scan", "--tol-overrides", '{"nope": 1}', "--out", out]) == EXIT_CONFIG
    assert run(["edge-scan", "--model", "nosuchmodel", "--out", out]) == EXIT_CONFIG
    assert run(["local-law", "--eta-grid", "1:-2:3", "--out", out]) == EXIT_CONFIG
    assert run(["mc-eigen", "--trials", "0", "--out", out]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text('{"unknown_key": 1}')
    assert run(["edge-scan", "--config", str(bad), "--out", out]) == EXIT_CONFIG
    assert run(["no-such-command"]) == EXIT_CONFIG


def test_compute_failure(tmp_path):
    assert run(["edge-scan", "--origin", "5", "--out", str(tmp_path)]) == EXIT_COMPUTE


def test_brown_grid_contour_A0(tmp_path):
    assert run(["brown-grid", "--h", "0.05", "--out", str(tmp_path)]) == EXIT_OK
    _, names, data = read_csv(tmp_path / "contour.csv")
    z = data[:, 1] + 1j * data[:, 2]
    assert names == ["line", "re_z", "im_z"]
    assert np.max(np.abs(np.abs(z) - 1)) <= 2 * 0.05


def test_mc_eigen_layers(tmp_path):
    assert run(["mc-eigen", "--N", "40", "--trials", "2", "--h", "0.05", "--out", str(tmp_path)]) == EXIT_OK
    for f in ("scatter.csv", "contour.csv", "spec_eps_band.csv"):
        assert (tmp_path / f).exists()
    _, _, sc = read_csv(tmp_path / "scatter.csv")
    assert sc.shape == (80, 2)


def test_zigzag_and_path(tmp_path):
    assert run(["zigzag-plan", "--N", "4096", "--eps", "0.2", "--z", "1", "--out", str(tmp_path / "z")]) == EXIT_OK
    assert run(["path-build", "--model", "twocluster", "--N", "200", "--out", str(tmp_path / "p")]) == EXIT_OK


def test_emit_plot_data_rejects_empty(tmp_path):
    with pytest.raises(ArtifactError):
        emit_plot_data(tmp_path, "h", 0, scatter=np.array([]))
    assert not (tmp_path / "scatter.csv").exists()


def test_write_csv_complex_columns(tmp_path):
    p = write_csv(tmp_path / "x.csv", ["k", "z"], [np.arange(2), np.array([1 + 2j, 3 - 1j])], "abc", 3)
    head, names, data = read_csv(p)
    assert names == ["k", "re_z", "im_z"] and head == "# config_hash=abc, seed=3"
    assert np.array_equal(data[:, 1:], [[1, 2], [3, -1]])


def test_parsers():
    assert parse_complex("1+0i") == 1
    assert parse_complex("-0.5i") == -0.5j
    assert np.allclose(parse_eta_grid("1e-3:1:4"), [1e-3, 1e-2, 1e-1, 1])
    assert np.allclose(parse_eta_grid("0.1,0.2"), [0.1, 0.2])
    g = parse_eta_grid("auto", 512)
    assert g.size == 13 and np.isclose(g[0], 512 ** -0.9) and np.isclose(g[-1], 512 ** -0.1)
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
