import json
import subprocess
import sys

import numpy as np
import pytest

from crspectra.cli import main
from crspectra.errors import JobValidationError
from crspectra.reporting import canonical_json, normalize_job, run_job, run_job_data

SPHERE_JOB = {
    "dimension_n": 1,
    "defining_function": "abs2(z1)+abs2(z2)-1",
    "params": {},
    "quadrature": {"type": "hopf_product", "resolution": 12, "seed": 3},
    "tasks": [
        {"kind": "invariants", "num_points": 6},
        {"kind": "spectrum", "degree": 2, "check_monotonicity": False},
    ],
}


def test_canonical_json_formatting():
    payload = {"b": 1.0, "a": [0.1, 2, True, None], "c": {"x": 1e-17}}
    text = canonical_json(payload)
    assert text == '{"a":[0.10000000000000001,2,true,null],"b":1.0,"c":{"x":1.0000000000000001e-17}}'
    assert canonical_json(payload) == text  # stable


def test_canonical_json_rejects_non_finite():
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


def test_normalize_job_validates():
    with pytest.raises(JobValidationError):
        normalize_job({"dimension_n": 3, "defining_function": "z1", "tasks": []})
    with pytest.raises(JobValidationError):
        normalize_job({**SPHERE_JOB, "tasks": [{"kind": "nope"}]})
    with pytest.raises(JobValidationError):
        normalize_job({**SPHERE_JOB, "extra_key": 1})


def test_run_job_sphere(tmp_path):
    report, code = run_job_data(SPHERE_JOB, base_dir=tmp_path)
    assert code == 0
    inv, spec = report["results"]
    assert inv["status"] == "ok"
    assert np.allclose(inv["result"]["r"], 1.0)
    assert np.allclose(inv["result"]["J"], 1.0)
    assert np.allclose(inv["result"]["R_Theta"], 2.0)
    assert spec["result"]["lambda1"] == pytest.approx(1.0, abs=1e-8)


def test_report_determinism_bytes(tmp_path):
    r1, _ = run_job_data(SPHERE_JOB, base_dir=tmp_path)
    r2, _ = run_job_data(SPHERE_JOB, base_dir=tmp_path)
    assert canonical_json(r1) == canonical_json(r2)


def test_job_points_and_csv(tmp_path):
    job = {
        **SPHERE_JOB,
        "tasks": [
            {
                "kind": "curvature",
                "points": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]],
                "csv": "table.csv",
            }
        ],
    }
    report, code = run_job_data(job, base_dir=tmp_path)
    assert code == 0
    lines = (tmp_path / "table.csv").read_text().strip().splitlines()
    assert lines[0] == "point_re_1,point_im_1,point_re_2,point_im_2,r,J,detH,R_theta,D,R_Theta"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert float(first[4]) == pytest.approx(1.0)  # r at (1, 0)


def test_task_error_recorded_without_abort(tmp_path):
    job = {
        **SPHERE_JOB,
        "tasks": [
            {"kind": "bound_lower", "num_points": 4},  # n = 1 without flag
            {"kind": "invariants", "num_points": 4},
        ],
    }
    report, code = run_job_data(job, base_dir=tmp_path)
    assert code == 2
    assert report["results"][0]["status"] == "error"
    assert report["results"][0]["error"] == "NotApplicable"
    assert report["results"][1]["status"] == "ok"


def test_invalid_expression_exit_code(tmp_path):
    job = {**SPHERE_JOB, "defining_function": "abs2(z3)"}
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    code = main(["run", str(path)])
    assert code == 2


def test_numerical_failure_exit_code(tmp_path):
    job = {**SPHERE_JOB, "defining_function": "-(abs2(z1)+abs2(z2)-1)",
           "tasks": [{"kind": "invariants", "points": [[[1.0, 0.0], [0.0, 0.0]]]}]}
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    code = main(["run", str(path)])
    assert code == 3


def test_run_job_writes_output(tmp_path):
    job = {**SPHERE_JOB, "output": "report.json"}
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    report, code = run_job(path)
    assert code == 0
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["tool"]["name"] == "crspectra"
    assert saved["job"]["dimension_n"] == 1


def test_cli_one_shot_invariants(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main([
        "invariants", "--rho", "abs2(z1)+abs2(z2)-1", "--n", "1",
        "--num-points", "4", "--resolution", "8", "--output", str(out),
    ])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["results"][0]["status"] == "ok"


def test_cli_bounds_upper(capsys):
    code = main([
        "bounds", "upper", "--rho", "abs2(z1)+abs2(z2)-1", "--n", "1",
        "--resolution", "12", "--f", "z1", "--f", "z2",
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "value = 1" in text


def test_cli_spectrum_flag_overrides(capsys):
    code = main([
        "spectrum", "--rho", "(abs2(z1)+abs2(z2))^2-1", "--n", "1",
        "--degree", "2", "--resolution", "16",
    ])
    assert code == 0
    assert "lambda1 = 0.5" in capsys.readouterr().out


def test_cli_param_binding(capsys):
    code = main([
        "curvature", "--rho",
        "-im(z2) + abs2(z1) + kappa*abs2(z1)^2", "--n", "1",
        "--param", "kappa=1.0",
        "--points", "[[[0.0, 0.0], [0.0, 0.0]]]",
    ])
    assert code == 0
    assert "R_Theta" in capsys.readouterr().out


def test_cli_entry_point_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "crspectra.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "crspectra" in proc.stdout


def test_normal_form_curvature_job_value(tmp_path):
    job = {
        "dimension_n": 1,
        "defining_function": "-im(z2) + abs2(z1) + kappa*abs2(z1)^2 + gamma*(z1*conj(z1)^3 + z1^3*conj(z1))",
        "params": {"kappa": 1.0, "gamma": 0.3},
        "quadrature": {"type": "hopf_product", "resolution": 8},
        "tasks": [{"kind": "curvature", "points": [[[0.0, 0.0], [0.0, 0.0]]]}],
    }
    report, code = run_job_data(job, base_dir=tmp_path)
    assert code == 0
    value = report["results"][0]["result"]["R_Theta"][0]
    assert value == pytest.approx(2.0 ** (4.0 / 3.0), abs=1e-8)


def test_lower_bound_single_point_serializes(tmp_path):
    job = {
        **SPHERE_JOB,
        "tasks": [{"kind": "bound_lower", "num_points": 1, "paneitz_positive": True}],
    }
    report, code = run_job_data(job, base_dir=tmp_path)
    assert code == 0
    canonical_json(report)  # must not contain non-finite values


def test_thread_count_does_not_change_report(tmp_path, monkeypatch):
    job = {
        **SPHERE_JOB,
        "quadrature": {"type": "hopf_product", "resolution": 16, "seed": 3},
        "tasks": [{"kind": "spectrum", "degree": 2, "check_monotonicity": False}],
    }
    monkeypatch.setenv("CR_SPECTRA_THREADS", "1")
    r1, _ = run_job_data(job, base_dir=tmp_path)
    monkeypatch.setenv("CR_SPECTRA_THREADS", "4")
    r2, _ = run_job_data(job, base_dir=tmp_path)
    assert canonical_json(r1) == canonical_json(r2)
