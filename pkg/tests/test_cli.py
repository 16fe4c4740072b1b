import csv
import json
from dataclasses import replace

import numpy as np
import pytest
from click.testing import CliRunner

from parafreq.backgrounds import gaussian_soliton
from parafreq.cli import ExperimentConfig, build_config, emit_trace, main, run
from parafreq.errors import ConfigError, IoError
from parafreq.evolve import caloric_polynomial
from parafreq.frequency import trace


def _invoke(tmp_path, *args):
    res = CliRunner().invoke(main, ["run", "--out-dir", str(tmp_path), *args])
    return res


def test_monotonicity_caloric(tmp_path):
    res = _invoke(tmp_path, "--experiment", "monotonicity", "--background", "gaussian",
                  "--degree", "3", "--window", "-2:-1", "--samples", "64")
    assert res.exit_code == 0, res.output
    with open(tmp_path / "monotonicity_trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "tau", "I", "D", "kappa", "Ecorr", "U", "U_fd_prime"]
    assert len(rows) == 65
    U = np.array([float(r[6]) for r in rows[1:]])
    np.testing.assert_allclose(U, -1.5, atol=1e-9)
    report = json.loads((tmp_path / "monotonicity_report.json").read_text())
    assert set(report) >= {"experiment", "config", "checks", "version"}
    for c in report["checks"]:
        assert {"name", "passed", "lhs", "rhs", "margin", "tolerance"} <= set(c)


def test_ou_spectrum(tmp_path):
    res = _invoke(tmp_path, "--experiment", "ou-spectrum", "--tau", "1", "--n-max", "6")
    assert res.exit_code == 0
    report = json.loads((tmp_path / "ou-spectrum_report.json").read_text())
    np.testing.assert_allclose(report["results"]["eigenvalues"], -np.arange(7) / 2, atol=1e-12)


def test_corrupt_flag(tmp_path):
    res = _invoke(tmp_path, "--experiment", "monotonicity", "--background", "circle", "--corrupt")
    assert res.exit_code == 1
    report = json.loads((tmp_path / "monotonicity_report.json").read_text())
    assert any(c.get("error") == "MonotonicityViolation" for c in report["checks"])


def test_determinism(tmp_path):
    args = ["--experiment", "monotonicity", "--background", "sphere", "--samples", "16", "--seed", "3"]
    _invoke(tmp_path / "a", *args)
    _invoke(tmp_path / "b", *args)
    _invoke(tmp_path / "c", *args, "--parallel")
    a = (tmp_path / "a" / "monotonicity_trace.csv").read_bytes()
    assert a == (tmp_path / "b" / "monotonicity_trace.csv").read_bytes()
    assert a == (tmp_path / "c" / "monotonicity_trace.csv").read_bytes()
    ra = (tmp_path / "a" / "monotonicity_report.json").read_text()
    assert ra.replace(str(tmp_path / "a"), "") == (tmp_path / "b" / "monotonicity_report.json").read_text().replace(
        str(tmp_path / "b"), ""
    )


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "equality-case", "degree": [3], "samples": 12}))
    res = _invoke(tmp_path, "--config", str(cfg), "--samples", "10")
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "equality-case_report.json").read_text())
    assert report["config"]["samples"] == 10
    assert report["config"]["degree"] == [3]


@pytest.mark.parametrize(
    "values,field",
    [
        ({"samples": 4}, "samples"),
        ({"window": "-1:-2"}, "window"),
        ({"background": "torus"}, "background"),
        ({"degree": "1,2"}, "degree"),
        ({"samples": "many"}, "samples"),
        ({"bogus": 1}, "bogus"),
    ],
)
def test_config_errors_name_the_field(values, field):
    with pytest.raises(ConfigError, match=field):
        build_config({}, values).validate()


def test_bad_config_exit_code(tmp_path):
    res = _invoke(tmp_path, "--samples", "3")
    assert res.exit_code == 2
    assert "samples" in res.output


def test_emit_trace_examples(tmp_path):
    bg = gaussian_soliton(1)
    tr = trace(caloric_polynomial(bg, (0,), (-2.0, -1.0)), 8, order=12)
    emit_trace(tr, tmp_path / "k0.csv")
    rows = list(csv.DictReader(open(tmp_path / "k0.csv")))
    assert all(abs(float(r["I"]) - 1.0) < 1e-14 and float(r["D"]) == 0.0 and float(r["U"]) == 0.0 for r in rows)
    tr = trace(caloric_polynomial(bg, (2,), (-2.0, -1.0)), 9, order=12)
    emit_trace(tr, tmp_path / "k2.csv")
    rows = list(csv.DictReader(open(tmp_path / "k2.csv")))
    last = rows[-1]
    assert float(last["tau"]) == 1.0
    assert float(last["I"]) == pytest.approx(8.0, rel=1e-13)
    # shortest round-trip formatting
    assert all(repr(float(v)) == v for r in rows for v in r.values())


def test_emit_empty_trace_refused(tmp_path):
    tr = trace(caloric_polynomial(gaussian_soliton(1), (1,), (-2.0, -1.0)), 8, order=12)
    empty = replace(tr, times=np.array([]))
    with pytest.raises(IoError):
        emit_trace(empty, tmp_path / "empty.csv")
    assert not (tmp_path / "empty.csv").exists()


def test_checker_error_lands_in_report(tmp_path):
    cfg = ExperimentConfig(experiment="backwards-uniqueness", background="sphere", eps=1e-9,
                           window=(0.9989, 0.999), truncation=16, samples=8, out_dir=str(tmp_path))
    code, report = run(cfg)
    assert code == 1
    assert report["checks"][0]["error"] == "KernelNotPositive"


def test_all_experiments(tmp_path):
    res = _invoke(tmp_path, "--experiment", "all", "--samples", "17")
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "all_report.json").read_text())
    assert {c["experiment"] for c in report["checks"]} == {
        "monotonicity", "equality-case", "backwards-uniqueness", "hessian-identity",
        "perturbed-bounds", "corollary-bound", "ou-spectrum",
    }
