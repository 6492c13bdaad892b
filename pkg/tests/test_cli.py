import csv
import json

import pytest
from hypothesis import given, settings, strategies as st

from shubin_trace.cli import main, run
from shubin_trace.config import ConfigError, RunConfig, harmonic_oscillator_config
from shubin_trace.symbols import CutoffSpec
from shubin_trace.trace import QuadratureSpec


@pytest.fixture
def ho_config(tmp_path):
    path = tmp_path / "ho.json"
    path.write_text(harmonic_oscillator_config().to_json())
    return path


def edit(path, **changes):
    d = json.loads(path.read_text())
    for k, v in changes.items():
        d[k] = v
    path.write_text(json.dumps(d))
    return path


def test_oscillator_run_passes(ho_config, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(ho_config), "--out", str(out)]) == 0
    res = json.loads((out / "results.json").read_text())
    assert res["oracle"]["verdict"] == "PASS"
    assert res["expansion"]["power_coeffs"]["0"]["value"][0] == pytest.approx(0.5)
    rows = list(csv.reader((out / "coefficients.csv").open()))
    assert rows[1][:2] == ["c", "0"] and float(rows[1][4]) == pytest.approx(0.5)
    assert {r[6] for r in rows[1:]} <= {"exact", "quadrature", "fitted"}
    samples = list(csv.reader((out / "samples.csv").open()))
    assert len(samples) == 17


def test_non_elliptic_exits_1(ho_config, tmp_path, capsys):
    d = json.loads(ho_config.read_text())
    d["oracle"]["enabled"] = False
    d["p0"] = [["1", "0", [2, 0], "0"], ["1", "0", [0, 2], "0"]]
    ho_config.write_text(json.dumps(d))
    assert main(["--config", str(ho_config), "--out", str(tmp_path)]) == 1
    assert "witness" in capsys.readouterr().err


def test_order_precondition_exits_2(ho_config, tmp_path, capsys):
    edit(ho_config, N=1)
    assert main(["--config", str(ho_config), "--out", str(tmp_path)]) == 2
    assert "-2n" in capsys.readouterr().err


def test_bad_inputs_exit_2(tmp_path, ho_config):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["--config", str(p)]) == 2
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
    assert main(["--config", str(edit(ho_config, bogus=1))]) == 2
    assert main(["--emit", "xml", "--config", str(ho_config)]) == 2


def test_oracle_on_other_operator_is_validation_error(ho_config):
    d = json.loads(ho_config.read_text())
    d["p0"][0][0] = "-2"
    with pytest.raises(ConfigError):
        RunConfig.from_dict(d)


def test_emit_selection(ho_config, tmp_path):
    assert main(["--config", str(ho_config), "--out", str(tmp_path / "j"), "--emit", "json"]) == 0
    assert sorted(p.name for p in (tmp_path / "j").iterdir()) == ["results.json"]
    assert main(["--config", str(ho_config), "--out", str(tmp_path / "c"), "--emit", "csv"]) == 0
    assert sorted(p.name for p in (tmp_path / "c").iterdir()) == ["coefficients.csv", "samples.csv"]


def test_byte_identical_reruns(ho_config, tmp_path):
    for k in (1, 2):
        assert main(["--config", str(ho_config), "--out", str(tmp_path / str(k)), "--seed", "7"]) == 0
    for name in ("results.json", "coefficients.csv", "samples.csv"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_seed_controls_monte_carlo():
    cfg = harmonic_oscillator_config(J=6, L=6)
    a = run(cfg, seed=1).diagnostics["monte_carlo"]
    b = run(cfg, seed=2).diagnostics["monte_carlo"]
    assert a["seed"] == 1 and b["seed"] == 2
    assert all(r["within_4_sigma"] for r in a["checks"] + b["checks"])


def test_result_carries_diagnostics():
    res = run(harmonic_oscillator_config(J=6, L=6))
    d = res.to_dict()
    assert "timing" not in d and res.timing["total"] > 0
    assert d["diagnostics"]["fit"]["condition"] > 0
    assert any("sign" in note for note in d["diagnostics"]["discrepancy_notes"])


@settings(max_examples=25)
@given(
    st.integers(1, 2),
    st.integers(3, 6),
    st.integers(7, 12),
    st.integers(1, 9),
    st.sampled_from([None, CutoffSpec(0.5, 1.0), CutoffSpec(1.0, 2.0, "sharp")]),
    st.booleans(),
    st.lists(st.floats(1e-12, 1e-2), min_size=1, max_size=4),
)
def test_config_round_trip(n, N, J, L, cutoff, extended, tols):
    spec = QuadratureSpec.extended() if extended else QuadratureSpec(sphere_order=32)
    cfg = harmonic_oscillator_config(n=n, N=N, J=J, L=L, cutoff=cutoff, quadrature=spec)
    cfg.oracle_tolerances = tuple(tols)
    again = RunConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()
    assert again.p0 == cfg.p0 and again.cutoff == cfg.cutoff and again.quadrature == cfg.quadrature


def test_oracle_rows_need_enough_components(ho_config):
    d = json.loads(ho_config.read_text())
    d["J"] = 4
    with pytest.raises(ConfigError):
        RunConfig.from_dict(d)


def test_mu_grid_shorthand(ho_config):
    d = json.loads(ho_config.read_text())
    d["quadrature"]["mu_grid"] = {"min": 10, "max": 320, "count": 16}
    cfg = RunConfig.from_dict(d)
    assert cfg.quadrature.mu_grid == QuadratureSpec().mu_grid


def test_general_operator_with_q(tmp_path):
    d = harmonic_oscillator_config(J=6, L=6).to_dict()
    d["J"] = 4
    d["oracle"]["enabled"] = False
    d["p0"].append(["-1", "0", [1, 0], "0"])
    d["q"] = {"order": "1", "terms": [["1", "0", [1, 0], "0"], ["0", "1", [0, 0], "0"]]}
    d["N"] = 3
    p = tmp_path / "g.json"
    p.write_text(json.dumps(d))
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == 0
    res = json.loads((tmp_path / "o" / "results.json").read_text())
    assert res["oracle"] is None
