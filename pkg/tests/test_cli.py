import math

import pytest

from twoway_qkd import acceptance, analysis, files
from twoway_qkd.adversary import PNS, Impersonation
from twoway_qkd.analysis import CurvePoint, critical_info, critical_mu
from twoway_qkd.cli import main
from twoway_qkd.config import ConfigError, parse_config, parse_lines
from twoway_qkd.polarization import PhotonMode
from twoway_qkd.protocol import SessionConfig, run_session


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_config_fills_defaults(tmp_path):
    run = parse_config(write(tmp_path / "c.cfg", "mu = 6\n"))
    s = run.session
    assert (s.mean_photons, s.n_angles, s.amode_prob, s.bob_tap_transmission) == (6.0, 3, 0.1, 0.7)
    assert s.photon_mode is PhotonMode.COHERENT
    assert run.sweep.t_values == (0.7, 0.9)


def test_config_comments_and_attack(tmp_path):
    text = "# demo\nattack = pns  # splitter\neta = 0.3\nphoton_mode = ideal\nt = 0.9\n\n"
    run = parse_config(write(tmp_path / "c.cfg", text))
    assert run.attack == PNS(0.3)
    assert run.session.photon_mode is PhotonMode.IDEAL_SINGLE_PHOTON
    assert run.sweep.t_values == (0.9,)


def test_out_of_range_key_is_named(tmp_path):
    with pytest.raises(ConfigError, match="eta"):
        parse_config(write(tmp_path / "c.cfg", "eta = 1.5\n"))


def test_override_beats_file(tmp_path):
    run = parse_config(write(tmp_path / "c.cfg", "N = 3\n"), {"N": "5"})
    assert run.session.n_angles == 5


@pytest.mark.parametrize("text", ["mu 6\n", "= 3\n", "mu =\n", "bogus = 1\n", "N = two\n"])
def test_malformed_config(tmp_path, text):
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path / "c.cfg", text))


def test_parse_lines_reports_line_number():
    with pytest.raises(ConfigError, match=":2:"):
        parse_lines("mu = 1\noops\n", "x.cfg")


def test_missing_config_file_is_usage_error(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err


def test_bad_set_is_usage_error(tmp_path):
    assert main(["simulate", "--set", "eta=2", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--set", "noequals", "--out", str(tmp_path)]) == 2
    assert main(["frobnicate"]) == 2


def test_simulate_honest(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--set", "photon_mode=ideal", "--seed", "7", "--out", str(out)])
    assert code == 0
    summary = files.read_summary(out / "summary.txt")
    assert summary["verdict"] == "Accepted"
    assert float(summary["qber"]) == 0.0
    assert summary["config.seed"] == "7"
    assert "verdict = Accepted" in capsys.readouterr().out
    records = files.read_transcript(out / "transcript.jsonl")
    assert len(records) == int(summary["rounds"])


def test_simulate_impersonation_detected(tmp_path):
    out = tmp_path / "imp"
    args = ["simulate", "--attack", "impersonation", "--quiet", "--out", str(out)]
    args += ["--set", "N=2", "--set", "c=0", "--set", "photon_mode=ideal", "--set", "target_key_bits=4000"]
    assert main(args) == 1
    summary = files.read_summary(out / "summary.txt")
    assert summary["verdict"] == "HashMismatch"
    q, n = float(summary["qber"]), int(summary["sifted_bits"])
    assert abs(q - 0.1875) <= 4 * math.sqrt(0.1875 * 0.8125 / n)


def test_simulate_trojan_unchecked(tmp_path):
    out = tmp_path / "tro"
    args = ["simulate", "--attack", "trojan", "--quiet", "--out", str(out)]
    args += ["--set", "c=0", "--set", "photon_mode=ideal", "--set", "target_key_bits=4000"]
    assert main(args) == 0
    summary = files.read_summary(out / "summary.txt")
    agree, n = float(summary["eve.eve_agreement_with_bob"]), int(summary["sifted_bits"])
    assert abs(agree - 0.7) <= 4 * math.sqrt(0.21 / n)


def test_analyze_writes_curves(tmp_path):
    out = tmp_path / "an"
    assert main(["analyze", "--set", "t=0.7", "--set", "mu_step=0.5", "--quiet", "--out", str(out)]) == 0
    points = files.read_curves(out / "curves_t0.7.csv")
    etas = sorted({p.eta for p in points})
    assert len(etas) == 9
    for eta in etas:
        curve = [p for p in points if p.eta == eta]
        assert all(b.i_e >= a.i_e - 1e-8 for a, b in zip(curve, curve[1:]))
    rows = files.read_annotations(out / "annotations_t0.7.csv")
    assert len(rows) == 9
    for row in rows:
        assert row["mu_star"] == pytest.approx(critical_mu(row["eta"], 0.7), rel=1e-8)
        assert abs(row["i_e_star"] - critical_info()) <= 5e-4
    assert not (out / "curves_t0.9.csv").exists()


def test_analyze_default_tap_values(tmp_path):
    out = tmp_path / "an"
    assert main(["analyze", "--set", "mu_step=1", "--set", "etas=0.5", "--quiet", "--out", str(out)]) == 0
    assert (out / "curves_t0.7.csv").exists() and (out / "curves_t0.9.csv").exists()
    rows = files.read_annotations(out / "annotations_t0.9.csv")
    assert rows[0]["mu_star"] == pytest.approx(1 / (0.25 * 0.9), rel=1e-8)


def test_report(tmp_path, capsys):
    out = tmp_path / "rep"
    main(["simulate", "--quiet", "--set", "target_key_bits=32", "--out", str(out)])
    main(["analyze", "--quiet", "--set", "t=0.7", "--set", "mu_step=1", "--out", str(out)])
    assert main(["report", "--out", str(out)]) == 0
    text = (out / "report.txt").read_text()
    assert "[session]" in text and "[curves_t0.7.csv]" in text
    assert "monotone=NO" not in text
    assert capsys.readouterr().out.endswith(text)


def test_report_on_missing_dir_is_io_error(tmp_path):
    assert main(["report", "--out", str(tmp_path / "nope")]) == 3


def test_out_path_is_a_file(tmp_path):
    blocker = write(tmp_path / "blocker", "x")
    assert main(["simulate", "--quiet", "--set", "target_key_bits=8", "--out", str(blocker)]) == 3


def test_transcript_round_trip(tmp_path):
    tr = run_session(SessionConfig(target_key_bits=32, seed=2), Impersonation())
    files.write_transcript(tmp_path / "t.jsonl", tr)
    assert files.read_transcript(tmp_path / "t.jsonl") == tr.rounds
    first = (tmp_path / "t.jsonl").read_text().splitlines()[0]
    assert first.startswith('{"index":0,"mode":')


def test_curves_round_trip(tmp_path):
    points = analysis.sweep_curve([0.0, 5.0, 10.0], [0.3, 0.5], 0.7)
    files.write_curves(tmp_path / "c.csv", points)
    back = files.read_curves(tmp_path / "c.csv")
    assert [(p.mu, p.eta, p.is_critical) for p in back] == [
        (pytest.approx(p.mu, rel=1e-8), p.eta, p.is_critical) for p in points
    ]
    assert all(abs(a.i_e - b.i_e) <= 1e-8 for a, b in zip(back, points))
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "mu,eta,t,i_e,is_critical"


def test_curves_reject_wrong_header(tmp_path):
    with pytest.raises(ValueError):
        files.read_curves(write(tmp_path / "c.csv", "a,b\n1,2\n"))


def test_annotation_round_trip(tmp_path):
    files.write_annotations(tmp_path / "a.csv", [(0.5, 0.7, 5.71428571, 0.69)])
    assert files.read_annotations(tmp_path / "a.csv") == [
        {"eta": 0.5, "t": 0.7, "mu_star": 5.71428571, "i_e_star": 0.69}
    ]


def test_curve_point_defaults():
    assert CurvePoint(1.0, 0.5, 0.7, 0.6).is_critical is False


def test_selfcheck_catches_broken_fidelity(monkeypatch):
    ok = acceptance.run_criterion(4)
    assert ok.passed
    analysis.fidelity_bound.cache_clear()
    monkeypatch.setattr(analysis, "fidelity_bound", lambda n: 0.5 + 0.25 * (n > 0))
    broken = acceptance.run_criterion(4)
    assert not broken.passed
    assert "FAIL" in broken.line()
