import json

import numpy as np
import pytest

from pointbarrier.cli import main, run


def _read(path):
    return path.read_text()


def test_classify_step(tmp_path):
    out = tmp_path / "c"
    assert run(["classify", "--profile", "step", "--out", str(out)]) == 0
    doc = json.loads(_read(out / "classify.json"))
    assert doc["class"] == "delta_prime_like"
    assert doc["c"] == 1.0
    assert doc["m0"] == 0.0
    assert doc["m1"] == -1.0
    manifest = json.loads(_read(out / "manifest.json"))
    assert manifest["command"] == "classify"
    assert manifest["outputs"] == ["classify.json"]
    assert manifest["tool"]["name"] == "pointbarrier"


def test_resonance_scan_csv(tmp_path, kappa_roots):
    out = tmp_path / "r"
    assert run(["resonances", "--profile", "step", "--window", "0", "60",
                "--out", str(out)]) == 0
    lines = _read(out / "resonances.csv").strip().splitlines()
    assert lines[0] == "alpha,theta,residual"
    alphas = [float(line.split(",")[0]) for line in lines[1:]]
    k1, k2 = kappa_roots
    assert np.allclose(alphas, [0.0, k1 * k1, k2 * k2], atol=1e-6)


def test_resonance_eigenfunction_export(tmp_path):
    out = tmp_path / "rf"
    assert run(["resonances", "--profile", "step", "--window", "14", "17",
                "--eigenfunctions", "--out", str(out)]) == 0
    lines = _read(out / "resonance_eigenfunction_000.csv").strip().splitlines()
    assert lines[0] == "xi,w"
    first = [float(c) for c in lines[1].split(",")]
    assert first[0] == -1.0 and first[1] == 1.0  # w(-1) = 1 normalization


def test_byte_identical_reruns(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["resonances", "--profile", "step", "--window", "-20", "20", "--scan-step", "0.2"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert _read(out1 / "resonances.csv") == _read(out2 / "resonances.csv")


def test_manifest_rerun_round_trip(tmp_path):
    out1 = tmp_path / "a"
    out3 = tmp_path / "c"
    assert run(["scatter", "--profile", "step", "--alpha", "4.0",
                "--eps-ladder", "0.1,0.01", "--ks", "0.5,1.0", "--out", str(out1)]) == 0
    assert run(["rerun", str(out1 / "manifest.json"), "--out", str(out3)]) == 0
    assert _read(out1 / "scatter.csv") == _read(out3 / "scatter.csv")


def test_scatter_single_and_sweep(tmp_path, alpha1, theta1):
    out = tmp_path / "s"
    assert run(["scatter", "--profile", "step", "--alpha", "15.418", "--eps", "1e-3",
                "--k", "1", "--out", str(out)]) == 0
    lines = _read(out / "scatter.csv").strip().splitlines()
    assert lines[0] == "alpha,eps,k,re_r,im_r,re_t,im_t,t2"
    t2 = float(lines[1].split(",")[-1])
    limit = 4 * theta1**2 / (1 + theta1**2) ** 2
    assert abs(t2 - limit) <= 1e-2


def test_spectrum_limit_csv(tmp_path):
    out = tmp_path / "sp"
    assert run(["spectrum", "--profile", "step", "--mode", "limit",
                "--potential", "harmonic", "--radius", "7", "--bc", "theta:1.0",
                "--levels", "3", "--eigenfunctions", "--out", str(out)]) == 0
    lines = _read(out / "spectrum.csv").strip().splitlines()
    lams = [float(line.split(",")[1]) for line in lines[1:]]
    assert np.allclose(lams, [1.0, 3.0, 5.0], atol=1e-6)
    efun = _read(out / "eigenfunction_000.csv").strip().splitlines()
    assert efun[0] == "x,v"
    assert len(efun) > 1000
    manifest = json.loads(_read(out / "manifest.json"))
    assert "eigenfunction_002.csv" in manifest["outputs"]


def test_spectrum_perturbed(tmp_path):
    out = tmp_path / "pp"
    assert run(["spectrum", "--profile", "step", "--mode", "perturbed",
                "--potential", "tilted_harmonic", "--radius", "8",
                "--alpha", "0", "--eps", "0.1", "--levels", "2", "--out", str(out)]) == 0
    lines = _read(out / "spectrum.csv").strip().splitlines()
    assert len(lines) == 3


def test_interval_study(tmp_path, alpha1):
    out = tmp_path / "iv"
    assert run(["interval", "--profile", "step", "--a", "-1", "--b", "2",
                "--alpha", f"{alpha1!r}", "--eps", "1e-3", "--count", "4",
                "--out", str(out)]) == 0
    doc = json.loads(_read(out / "interval.json"))
    assert doc["resonant"] is True
    lines = _read(out / "interval.csv").strip().splitlines()
    rel_diffs = [float(line.split(",")[-1]) for line in lines[1:]]
    assert max(rel_diffs) <= 1e-3


def test_theta_refinement(tmp_path, alpha1, theta1):
    out = tmp_path / "th"
    assert run(["theta", "--profile", "step", "--alpha", "15.4", "--out", str(out)]) == 0
    doc = json.loads(_read(out / "theta.json"))
    assert doc["alpha"] == pytest.approx(alpha1, abs=1e-7)
    assert doc["refined_from"] == 15.4
    assert doc["theta"] == pytest.approx(theta1, rel=1e-8)


def test_rerun_preserves_negated_flags(tmp_path, alpha1):
    out1 = tmp_path / "nr"
    out2 = tmp_path / "nr2"
    assert run(["theta", "--profile", "step", "--alpha", f"{alpha1!r}",
                "--no-refine", "--out", str(out1)]) == 0
    assert run(["rerun", str(out1 / "manifest.json"), "--out", str(out2)]) == 0
    assert _read(out1 / "theta.json") == _read(out2 / "theta.json")
    assert json.loads(_read(out2 / "theta.json"))["refined_from"] is None


def test_dive_cli(tmp_path):
    out = tmp_path / "dv"
    assert run(["dive", "--profile", "step", "--alpha", "1.0",
                "--eps-ladder", "0.1,0.05,0.02", "--out", str(out)]) == 0
    doc = json.loads(_read(out / "dive.json"))
    assert doc["mu_oracle"] < 0
    assert doc["final_relative_error"] < 0.02


def test_hypothesis_cli(tmp_path):
    out = tmp_path / "hy"
    assert run(["hypothesis", "--profiles", "step", "--window", "-40", "40",
                "--scan-step", "0.2", "--out", str(out)]) == 0
    doc = json.loads(_read(out / "hypothesis.json"))
    assert doc["trends"]["step"]["all_satisfied"] is True
    assert doc["even_check"]["max_abs_theta_deviation_from_1"] <= 1e-8
    lines = _read(out / "hypothesis.csv").strip().splitlines()
    assert lines[0] == "profile,alpha,theta,abs_theta,side,satisfies"
    assert any(line.startswith("even_quadratic") for line in lines[1:])


def test_converge_cli(tmp_path):
    out = tmp_path / "cv"
    assert run(["converge", "--profile", "step", "--potential", "tilted_harmonic",
                "--radius", "8", "--alpha", "0", "--eps-ladder", "0.2,0.1,0.05,0.025",
                "--levels", "1", "--samples-per-unit", "201", "--out", str(out)]) == 0
    doc = json.loads(_read(out / "converge.json"))
    assert doc["verdicts"]["all_exact"] is True
    lines = _read(out / "converge.csv").strip().splitlines()
    assert len(lines) == 5  # header + 4 ladder entries for one level


def test_exit_codes(tmp_path):
    # config error
    assert main(["spectrum", "--profile", "step", "--mode", "limit",
                 "--potential", "mystery", "--radius", "7",
                 "--out", str(tmp_path / "x1")]) == 2
    # precondition violation: diving study at zero coupling
    assert main(["dive", "--profile", "step", "--alpha", "0",
                 "--eps-ladder", "0.1,0.05", "--out", str(tmp_path / "x2")]) == 4
    # numerical failure: box too small for the requested levels
    assert main(["spectrum", "--profile", "step", "--mode", "limit",
                 "--potential", "harmonic", "--radius", "2", "--bc", "theta:1.0",
                 "--levels", "3", "--out", str(tmp_path / "x3")]) == 3


def test_custom_profile_from_json(tmp_path):
    doc = {
        "label": "house",
        "segments": [
            {"interval": [-1.0, 0.0], "coeffs": [0.0, -8.0, -8.0]},
            {"interval": [0.0, 0.5], "coeffs": [0.0, -32.0, 64.0]},
            {"interval": [0.5, 1.0], "coeffs": [0.0]},
        ],
    }
    path = tmp_path / "house.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "ch"
    assert run(["classify", "--profile", str(path), "--out", str(out)]) == 0
    got = json.loads(_read(out / "classify.json"))
    assert got["label"] == "house"
    assert got["class"] == "delta_prime_like"
