import io
import json
import re

import pytest

from apollonian import cli
from apollonian.errors import NoConvergence


def run(args):
    buf = io.StringIO()
    code, rep = cli.run(args, stream=buf)
    return code, buf.getvalue(), rep


def test_pack_svg_matches_json(tmp_path):
    svg = tmp_path / "p.svg"
    code, _, _ = run(["pack", "--preset", "symmetric-unit", "--min-radius", "1e-3", "--format", "svg", "--out", str(svg)])
    assert code == 0
    code, text, rep = run(["pack", "--preset", "symmetric-unit", "--min-radius", "1e-3"])
    assert code == 0
    body = svg.read_text()
    n_svg = len(re.findall(r"<circle ", body))
    assert rep["count"] == len(json.loads(text)["circles"]) == n_svg > 1000
    assert 'fill="none"' in body and "fill=\"black\"" not in body


def test_ford_line_clipped():
    code, text, _ = run(["pack", "--preset", "ford", "--min-radius", "0.05", "--format", "svg"])
    assert code == 0
    m = re.search(r'<line x1="([-\d.e]+)" y1="([-\d.e]+)" x2="([-\d.e]+)" y2="([-\d.e]+)"', text)
    assert m
    vb = [float(x) for x in re.search(r'viewBox="([^"]+)"', text).group(1).split()]
    x1, x2 = float(m.group(1)), float(m.group(3))
    assert vb[0] - 1e-9 <= min(x1, x2) and max(x1, x2) <= vb[0] + vb[2] + 1e-9


def test_pack_deterministic():
    a = run(["pack", "--preset", "fig1", "--min-radius", "0.05", "--seed", "4"])[1]
    b = run(["pack", "--preset", "fig1", "--min-radius", "0.05", "--seed", "4"])[1]
    assert a == b


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "ford", "min_radius": 0.1}))
    _, _, rep = run(["pack", "--config", str(cfg)])
    _, _, rep2 = run(["pack", "--config", str(cfg), "--min-radius", "0.05"])
    assert rep["system"]["name"] == "ford" and rep["min_radius"] == 0.1
    assert rep2["min_radius"] == 0.05 and rep2["count"] > rep["count"]


def test_triple_flag():
    code, _, rep = run(["pack", "--triple", "1,1,1", "--min-radius", "0.05"])
    assert code == 0 and rep["count"] > 0


def test_exit_codes(tmp_path, monkeypatch):
    assert run(["dim", "--depth", "0"])[0] == 2
    assert run(["pack", "--triple", "1,2"])[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"frobnicate": 1}))
    code, text, err = run(["pack", "--config", str(bad)])
    assert code == 2 and err["error"]["type"] == "ConfigError"
    code, _, err = run(["pack", "--min-radius", "1e-4", "--cap", "100"])
    assert code == 3 and err["error"]["type"] == "BudgetExceeded"

    def boom(cfg):
        raise NoConvergence("no settle")

    monkeypatch.setitem(cli.COMMANDS, "dim", boom)
    code, text, err = run(["dim"])
    assert code == 4 and json.loads(text)["error"]["message"] == "no settle"
    cli.validate_report("error", err)


def test_cf_refusal_is_config_error():
    code, _, err = run(["cf", "--digits", "1,2"])
    assert code == 2 and err["error"]["type"] == "ConditionViolated"


def test_lueroth_lattice_payload():
    code, _, rep = run(["lueroth"])
    assert code == 0 and rep["outcome"] == "lattice-refusal" and rep["amplitude"] > 0


def test_renewal_csv():
    code, text, _ = run(["renewal", "--format", "csv", "--t-max", "30"])
    assert code == 0 and text.startswith("t,normalized,limit")


def test_constant_report():
    code, _, rep = run(["constant", "--degree", "8"])
    assert code == 0 and rep["c_A_lower"] >= 0.055 and rep["rho0_bound"] <= 4.19225


def test_dim_report():
    code, _, rep = run(["dim", "--degree", "8", "--tol", "1e-5"])
    assert code == 0
    lo, hi = rep["D_bracket"]
    assert lo <= 1.30568 <= hi


def test_svg_only_for_pack():
    assert run(["dim", "--format", "svg"])[0] == 2
