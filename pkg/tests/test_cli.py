import csv
import io
import json
import math

import pytest

from besselmorrey.bounds import BoundReport
from besselmorrey.cli import main
from besselmorrey.config import ExperimentConfig, resolve_theorem
from besselmorrey.errors import ConfigError
from besselmorrey.report import CSV_HEADER, emit_report, fmt_float, reports_from_json


def _report():
    m = {"test_function": "g", "lhs": 1.0 / 3.0, "rhs": math.inf, "ratio": 0.0, "verdict": "pass", "note": ""}
    params = {"n": 1, "alpha": 0.5, "gamma": 0.0, "p1": 1.0, "p2": None, "q1": None, "q2": math.inf,
              "s": 1.5, "t": 2.0, "phi": "power(q=1.5,c=1)"}
    return BoundReport("generalized-morrey", params, 1.0 / 3.0, math.inf, 0.0, "pass", [m], {"all": True},
                       {"spread": math.nan})


def test_fmt_float():
    assert fmt_float(1.0 / 3.0) == "0.333333333333"
    assert (fmt_float(math.inf), fmt_float(-math.inf), fmt_float(math.nan), fmt_float(0.0)) == ("inf", "-inf", "nan", "0")


def test_emit_report_deterministic_and_round_trip():
    a, b = emit_report(_report()), emit_report(_report())
    assert a == b
    back = reports_from_json(a)[0]
    assert back.rhs == math.inf and back.params["q2"] == math.inf and math.isnan(back.extra["spread"])
    assert back.lhs == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_emit_report_csv():
    rows = list(csv.reader(io.StringIO(emit_report([_report(), _report()], "csv").decode())))
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 3
    assert rows[1][CSV_HEADER.index("rhs")] == "inf" and rows[1][CSV_HEADER.index("p2")] == ""
    with pytest.raises(ValueError):
        emit_report(_report(), "xml")


def test_config_round_trip():
    text = """
command: verify
theorem: "2.3"
kernel: {alpha: 0.5, gamma: 0.0, dim: 1}
exponents: {p1: 1, s: 1.5, t: 2}
phi: {kind: power, q: 1.5}
fields:
  - {family: ball, radius: 2.0}
refine: 2
"""
    cfg = ExperimentConfig.from_yaml(text)
    assert cfg.theorem == "generalized-morrey" and cfg.refine == 2
    assert ExperimentConfig.from_yaml(cfg.to_yaml()) == cfg
    with pytest.raises(ConfigError, match="unknown keys in config"):
        ExperimentConfig.from_yaml(text + "colour: red\n")
    with pytest.raises(ConfigError, match="unknown keys in kernel"):
        ExperimentConfig.from_dict({"command": "kernel-norm", "kernel": {"alpha": 1, "beta": 2}})
    with pytest.raises(ConfigError, match="family"):
        ExperimentConfig.from_dict({"command": "apply", "fields": [{"family": "cube"}]})


def test_resolve_theorem():
    assert resolve_theorem("3.1") == "two-sided"
    with pytest.raises(ConfigError):
        resolve_theorem("4.7")


def test_with_defaults_keeps_explicit_keys():
    cfg = ExperimentConfig(command="verify", theorem="two-sided", exponents={"s": 1.6}).with_defaults()
    assert cfg.exponents == {"p1": 1.0, "s": 1.6, "t": 2.0}
    assert cfg.kernel["alpha"] == 0.5


def _write(tmp_path, text):
    p = tmp_path / "cfg.yaml"
    p.write_text(text)
    return str(p)


def test_exit_2_names_relation(tmp_path, capsys):
    cfg = _write(tmp_path, "command: verify\ntheorem: generalized-morrey\nexponents: {p1: 3, s: 1.5, t: 2}\n")
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "1/p2 = 1/p1 - 1/s'" in capsys.readouterr().err


def test_exit_2_unknown_key(tmp_path, capsys):
    cfg = _write(tmp_path, "command: kernel-norm\nkernel: {alpha: 0.5, dim: 1, gama: 1}\n")
    assert main(["--config", cfg]) == 2
    assert "gama" in capsys.readouterr().err


def test_exit_2_divergent_norm(tmp_path):
    cfg = _write(tmp_path, "command: kernel-norm\nkernel: {alpha: 0.5, gamma: 1, dim: 1}\nexponents: {t: 2}\n")
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_kernel_norm_command(tmp_path):
    cfg = _write(tmp_path, "command: kernel-norm\nkernel: {alpha: 0.5, gamma: 1, dim: 1}\nexponents: {t: 1}\n")
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())["reports"][0]
    assert rep["lhs"] == pytest.approx(2 * math.pi, rel=1e-8)
    assert (out / "table.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_apply_command_writes_profile(tmp_path):
    cfg = _write(tmp_path, """command: apply
kernel: {alpha: 0.5, gamma: 0, dim: 1}
fields: [{family: ball, radius: 1.0, name: unit}]
grid: {half_width: 4.0, n_points: 129}
""")
    out = tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())["reports"][0]
    assert rep["lhs"] == pytest.approx(2 ** 1.5, rel=1e-6)  # 2 sqrt(2) at |x| = 1
    labels = {row.split(",")[0] for row in (out / "profile.csv").read_text().splitlines()[1:]}
    assert labels == {"unit radial", "unit grid"}


def test_young_verify(tmp_path):
    assert main(["verify", "--theorem", "young", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "table.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 6


@pytest.mark.slow
def test_sweep_rows(tmp_path):
    assert main(["sweep", "--alphas", "0.5,0.25,0.125", "--out", str(tmp_path), "--jobs", "3"]) == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "table.csv").read_text())))
    assert [r["alpha"] for r in rows] == ["0.5", "0.25", "0.125"]
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["reports"][0]["extra"]["loglog_slope"] == pytest.approx(-1.1875, abs=1e-9)
