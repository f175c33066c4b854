import csv
import io
import json

import numpy as np
import pytest

from gavflow.chart import Chart
from gavflow.cli import build_parser, main, resolve_settings
from gavflow.derivation import derive_tables
from gavflow.exact import from_json
from gavflow.field import GavrilovField

DYNAMICS_FLAGS = ["--delta", "0.3", "--epsilon", repr(2e-3 / 3)]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    return json.loads(out)


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


# ---------------------------------------------------------------- derivation


def test_derive_writes_canonical_tables(capsys, tmp_path):
    path = tmp_path / "tables.json"
    code, out, _ = run(capsys, "derive", "--order", "5", "--out", str(path))
    assert code == 0 and out == ""
    doc = json.loads(path.read_text())
    assert doc["order"] == 5
    assert from_json(doc["alpha"]) == derive_tables(5).alpha
    assert from_json(doc["R"]) == derive_tables(5).R


def test_verify_expansions_exit_codes(capsys):
    code, out, _ = run(capsys, "verify-expansions", "--order", "3")
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(capsys, "verify-expansions")
    # the reference degree-6 coefficients disagree with the derived ones
    assert code == 1 and "FAIL" in out and out.rstrip().splitlines()[-1].startswith("summary:")


def test_verify_expansions_tampered_profile(capsys):
    code, out, _ = run(capsys, "verify-expansions", "--order", "7", "--psi", "1,-3/4,9/128,-20/1024")
    assert code == 1 and "alpha_06" in out


@pytest.mark.parametrize("psi", ["0,1", "1,x"])
def test_verify_expansions_bad_profile(capsys, psi):
    code, _, err = run(capsys, "verify-expansions", "--psi", psi)
    assert code == 2 and "--psi" in err


# ---------------------------------------------------------------- field


def test_field_eval_round_trips(capsys):
    doc = run_json(capsys, "field", "eval", "--x", "1.03", "--y", "0.01", "--z", "0.02")
    fld = GavrilovField()
    x = np.array([1.03, 0.01, 0.02])
    assert doc["U"] == fld.velocity_cut(x).tolist()
    assert doc["P"] == float(fld.pressure(x)) and doc["mode"] == "cut"
    raw = run_json(capsys, "field", "eval", "--x", "1.03", "--y", "0.01", "--z", "0.02", "--raw")
    assert raw["U"] == fld.velocity_raw(x).tolist()


def test_field_eval_outside_tube_is_domain_error(capsys):
    code, _, err = run(capsys, "field", "eval", "--x", "2", "--y", "0", "--z", "0", "--raw")
    assert code == 3 and err.startswith("gavflow field:")


def test_field_residual_and_rescale(capsys):
    doc = run_json(capsys, "field", "residual", "--samples", "50", "--seed", "3")
    assert doc["seed"] == 3 and doc["div"]["max"] <= 1e-12
    doc = run_json(capsys, "field", "rescale", "--lambda", "2", "--mu", "0.5", "--check")
    assert doc["pass"] is True and doc["group_law"] <= 1e-8


# ---------------------------------------------------------------- chart and frequencies


def test_chart_summary(capsys):
    doc = run_json(capsys, "chart", "--c", "2e-3")
    assert doc["Fc2pi"] == Chart().action_chart(2e-3).Fc2pi
    assert doc["T_c"] > 0 and doc["unit_chi"] is False
    # below the cut-off support the particles rest
    assert run_json(capsys, "chart", "--c", "1e-5")["T_c"] is None


def test_chart_needs_level(capsys):
    assert run(capsys, "chart")[0] == 2


def test_chart_map_unmap(capsys):
    fwd = run_json(capsys, "chart", "map", "--sigma", "1", "--beta", "2", "--I", "4e-4")
    x, y, z = (repr(v) for v in fwd["xyz"])
    back = run_json(capsys, "chart", "unmap", "--x", x, "--y", y, "--z", z)
    assert back["sigma"] == pytest.approx(1, abs=1e-10) and back["beta"] == pytest.approx(2, abs=1e-10)
    assert back["I"] == pytest.approx(4e-4, rel=1e-10)


def test_freq(capsys):
    doc = run_json(capsys, "freq")
    assert doc["omega1"] == pytest.approx(1.0, rel=1e-6)
    unit = run_json(capsys, "freq", "--I", "1e-3", "--unit-chi")
    assert unit["ratio"] == Chart(unit_chi=True).frequencies(1e-3).ratio
    assert run(capsys, "freq", "--I", "1")[0] == 3


# ---------------------------------------------------------------- trajectories


def test_trace_csv(capsys, tmp_path):
    path = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "trace", "--t-end", "1", "--samples", "5", "--out", str(path))
    assert code == 0
    text = path.read_text()
    header, rows = read_csv(text)
    assert header == ["t", "x", "y", "z", "P"] and len(rows) == 5
    first = text.splitlines()[1].split(",")
    assert all(float("%.17g" % float(v)) == float(v) for v in first)
    assert max(abs(r[4] - rows[0][4]) for r in rows) <= 1e-12


def test_trace_needs_full_start(capsys):
    assert run(capsys, "trace", "--t-end", "1", "--x0", "1.05")[0] == 2


def test_poincare_and_conjugacy(capsys):
    code, out, _ = run(capsys, "poincare", *DYNAMICS_FLAGS, "--I", "1e-3", "--returns", "3")
    header, rows = read_csv(out)
    assert code == 0 and header == ["k", "t", "x", "y", "z", "phi", "winding"]
    assert [r[0] for r in rows] == [1, 2, 3]
    assert all(abs(r[4]) <= 1e-12 for r in rows)
    doc = run_json(capsys, "conjugacy", *DYNAMICS_FLAGS, "--I", "1e-3", "--periods", "1", "--samples", "11")
    assert doc["max_deviation"] <= 1e-6 and doc["samples"] == 11


def test_scan_ratio_default_grid(capsys):
    code, out, err = run(capsys, "scan-ratio")
    header, rows = read_csv(out)
    summary = json.loads(err)
    assert code == 0 and len(rows) == 50 and summary["monotone"] is True
    assert header == ["I", "omega1", "omega2", "ratio", "ratio_over_sqrtI"]
    assert summary["max_excess_over_I2"] <= 10
    assert summary["intercept"] == pytest.approx(1.0, abs=1e-3)


def test_scan_ratio_edges(capsys):
    code, out, err = run(capsys, "scan-ratio", "--I-min", "1e-3", "--count", "1")
    assert code == 0 and json.loads(err)["monotone"] is True and len(read_csv(out)[1]) == 1
    assert run(capsys, "scan-ratio", "--I-min", "2e-3", "--I-max", "1e-3")[0] == 2


# ---------------------------------------------------------------- report and configuration


def test_report_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    codes = [run(capsys, "report", "--skip-dynamics", "--seed", "42", "--out", str(p))[0] for p in (a, b)]
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["dynamics"]["pass"] == "skipped" and doc["seed"] == 42
    # the expansion section fails on the reference constants; the report is still written
    assert doc["expansions"]["pass"] is False and codes == [1, 1]
    assert all(doc[k]["pass"] is True for k in ("field_identities", "rescaling", "chart", "monotonicity"))


def test_config_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tube\ndelta = 0.25\ncutoff-sign = -1\nseed = 9\n")
    parser = build_parser()
    settings = resolve_settings(parser.parse_args(["freq", "--config", str(cfg), "--delta", "0.3"]))
    assert settings["delta"] == 0.3 and settings["cutoff_sign"] == -1 and settings["seed"] == 9
    monkeypatch.setenv("GAVFLOW_CONFIG", str(cfg))
    settings = resolve_settings(parser.parse_args(["freq"]))
    assert settings["delta"] == 0.25 and settings["rtol"] == 1e-10


@pytest.mark.parametrize("text", ["colour = blue\n", "delta = wide\n", "delta 0.3\n"])
def test_bad_config_file(capsys, tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(capsys, "freq", "--config", str(cfg))
    assert code == 2 and "bad.cfg:1" in err


def test_missing_config_file(capsys, tmp_path):
    assert run(capsys, "freq", "--config", str(tmp_path / "none.cfg"))[0] == 2


def test_unknown_flag_and_invalid_config(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["freq", "--colour", "blue"])
    assert exc.value.code == 2
    assert run(capsys, "freq", "--delta", "0.9")[0] == 2


def test_help_documents_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["trace", "--help"])
    out = capsys.readouterr().out
    assert "default 1e-10" in out and "flags > config file > defaults" in out
