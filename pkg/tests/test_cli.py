import csv
import io
import json
import math
from pathlib import Path

import pytest

from pdcqkd.cli import main, run
from pdcqkd.config import RunConfig, parse_config_text
from pdcqkd.errors import ValidationError
from pdcqkd.report import fmt, load_report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

CURVE_A = """\
# reference link, heralding efficiency 0.5
eta_A = 0.5
d_A = 1e-6
alpha = 0.21
eta_B = 0.045
p_d = 8.5e-7
e_d = 0.033
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text(CURVE_A)
    return path


def _kv(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["quantity", "value"]
    return dict(rows[1:])


def test_rate_report(cfg_file):
    code, text, _ = run(["rate", str(cfg_file), "--length-km", "50"])
    assert code == 0
    kv = _kv(text)
    assert float(kv["R_final"]) > 0
    assert kv["selected"] == "both"
    assert float(kv["R_final"]) == pytest.approx(9.0437e-05, rel=1e-3)
    for key in ("Q_t", "E_t", "Q_nt", "E_nt", "r", "x_star_t", "xi_at_min", "t.ec_cost", "both.single_gain"):
        assert key in kv


def test_missing_required_key(cfg_file, capsys):
    code = main(["rate", str(cfg_file)])
    assert code == 1
    assert "length_km" in capsys.readouterr().err


def test_missing_channel_key(capsys):
    assert main(["rate", "--length-km", "10", "--set", "eta_A=0.5", "--set", "d_A=0"]) == 1
    assert "alpha" in capsys.readouterr().err


def test_precision(cfg_file):
    _, text, _ = run(["rate", str(cfg_file), "--length-km", "50", "--set", "precision=3"])
    value = _kv(text)["Q_t"]
    mantissa, exponent = value.split("e")
    assert len(mantissa.replace(".", "").lstrip("-")) == 3
    assert fmt(0.000123456, 3) == "1.23e-04"
    assert fmt(123456.0) == "1.23456e+05"


def test_unknown_key_location(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(CURVE_A + "colour = blue\n")
    assert main(["rate", str(path), "--length-km", "5"]) == 1
    err = capsys.readouterr().err
    assert "bad.cfg:8" in err and "colour" in err


def test_bad_value_and_duplicate():
    with pytest.raises(ValidationError, match=":2: invalid value for 'mu'"):
        parse_config_text("alpha = 0.2\nmu = lots\n")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_config_text("alpha = 0.2\nalpha = 0.3\n")


def test_distance_ellipsis():
    values = parse_config_text("distances = 0,10,...,50")
    assert values["distances"] == [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
    with pytest.raises(ValidationError):
        parse_config_text("distances = 0,...,50")


def test_sweep_header_only(cfg_file, tmp_path):
    out = tmp_path / "empty.csv"
    code, _, _ = run(["sweep", str(cfg_file), "--set", "distances=", "--out", str(out)])
    assert code == 0
    assert out.read_text() == "l_km,mu,Q_t,E_t,Q_nt,E_nt,r,R_t,R_both,R_final,x_star\n"


def test_sweep_rerun_byte_identical(cfg_file, tmp_path):
    outs = []
    for name in ("one.csv", "two.csv"):
        out = tmp_path / name
        assert run(["sweep", str(cfg_file), "--set", "distances=0,60,...,180", "--out", str(out)])[0] == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0].decode())))
    assert len(rows) == 4
    assert rows[-1]["R_final"] == "0.00000e+00"


def test_json_round_trip(cfg_file):
    code, text, _ = run(["sweep", str(cfg_file), "--set", "distances=10,100", "--format", "json"])
    assert code == 0
    command, cfg, results, meta = load_report(text)
    assert command == "sweep"
    expected = RunConfig.build(parse_config_text(CURVE_A), {"distances": "10,100", "format": "json"})
    assert cfg == expected
    assert [r.l_km for r in results["rows"]] == [10.0, 100.0]
    assert meta["mu_rel_tol"] == 1e-4
    # the rows carry the full double values
    doc = json.loads(text)
    assert results["rows"][0].R_final == doc["results"]["rows"][0]["R_final"]


def test_rate_json_round_trip(cfg_file):
    _, text, _ = run(["rate", str(cfg_file), "--length-km", "30", "--format", "json"])
    command, cfg, results, _ = load_report(text)
    assert command == "rate" and cfg["length_km"] == 30.0
    assert results["R_final"] > 0


def test_montecarlo_seed_echo_and_exit(cfg_file):
    code, text, _ = run(["montecarlo", str(cfg_file), "--length-km", "20", "--mu", "0.19",
                         "--seed", "4242", "--set", "pulses=1000000"])
    assert code == 0
    head = _kv(text.split("\n\n")[0])
    assert head["seed"] == "4242"
    assert head["pass"] == "true"


def test_montecarlo_threshold_exit_code(cfg_file):
    code, _, _ = run(["montecarlo", str(cfg_file), "--length-km", "20", "--mu", "0.19",
                      "--set", "pulses=1000000", "--set", "z_threshold=1e-9"])
    assert code == 3


def test_attack_reports_reference_odds(cfg_file):
    code, text, _ = run(["attack", str(cfg_file), "--length-km", "20", "--mu", "0.19",
                         "--set", "pulses=300000", "--set", "attack.block_fraction=1"])
    assert code == 0
    head = _kv(text.split("\n\n")[0])
    assert float(head["r1"]) < float(head["r_honest"]) < float(head["r_observed_analytic"])
    assert float(head["r2"]) == pytest.approx(3.0, rel=1e-5)
    assert "pns(" in head["attack"]


def test_numerical_failure_exit_code(capsys):
    args = ["rate", "--length-km", "0", "--mu", "0.3", "--set", "eta_A=0", "--set", "d_A=0",
            "--set", "alpha=0.2", "--set", "eta_B=0", "--set", "p_d=0", "--set", "e_d=0"]
    assert main(args) == 2
    assert "Q_t" in capsys.readouterr().err


def test_cutoff_command(cfg_file):
    code, text, _ = run(["cutoff", str(cfg_file), "--set", "protocol=ideal_single_photon"])
    assert code == 0
    assert float(_kv(text)["cutoff_km"]) == pytest.approx(171.52, abs=0.1)


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.cfg")):
        RunConfig.build(parse_config_text(path.read_text(), str(path)))


def test_stdout_output(cfg_file, capsys):
    assert main(["rate", str(cfg_file), "--length-km", "10"]) == 0
    assert capsys.readouterr().out.startswith("quantity,value\n")
    assert math.isfinite(float(_kv(run(["rate", str(cfg_file), "--length-km", "10"])[1])["mu"]))
