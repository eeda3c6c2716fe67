"""On-disk formats: round transcripts, summaries, and I_E curve tables.

Transcript (``transcript.jsonl``): one JSON object per round, keys in this
order::

    index, mode, theta, s, theta_star, alpha_a_idx, alpha_b_idx, key_bit,
    outcome_alice, outcome_bob_tap, matched, sifted, integrity_ok,
    anomaly_flags

Angles are radians in [0, pi), ``theta_star`` is null on T-mode rounds,
outcomes are ``[clicks_d0, clicks_d1]`` pairs.

Summary (``summary.txt``): flat ``key = value`` lines, nested blocks
flattened with dots (``eve.attack``, ``anomalies.alice_empty``).

Curves (``curves_t{t}.csv``): header ``mu,eta,t,i_e,is_critical`` and
numbers written with 9 significant digits.  Annotations
(``annotations_t{t}.csv``): header ``eta,t,mu_star,i_e_star``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

from .analysis import CurvePoint
from .polarization import Angle, MeasurementOutcome
from .protocol import Mode, RoundRecord, Transcript

TRANSCRIPT_FIELDS = (
    "index",
    "mode",
    "theta",
    "s",
    "theta_star",
    "alpha_a_idx",
    "alpha_b_idx",
    "key_bit",
    "outcome_alice",
    "outcome_bob_tap",
    "matched",
    "sifted",
    "integrity_ok",
    "anomaly_flags",
)
CURVE_HEADER = ("mu", "eta", "t", "i_e", "is_critical")
ANNOTATION_HEADER = ("eta", "t", "mu_star", "i_e_star")


def fmt(x: float) -> str:
    return f"{x:.9g}"


def t_label(t: float) -> str:
    return fmt(t)


def record_to_dict(r: RoundRecord) -> dict:
    return {
        "index": r.index,
        "mode": r.mode.value,
        "theta": r.theta.value,
        "s": r.s,
        "theta_star": None if r.theta_star is None else r.theta_star.value,
        "alpha_a_idx": r.alpha_a_idx,
        "alpha_b_idx": r.alpha_b_idx,
        "key_bit": r.key_bit,
        "outcome_alice": [r.outcome_alice.clicks_d0, r.outcome_alice.clicks_d1],
        "outcome_bob_tap": [r.outcome_bob_tap.clicks_d0, r.outcome_bob_tap.clicks_d1],
        "matched": r.matched,
        "sifted": r.sifted,
        "integrity_ok": r.integrity_ok,
        "anomaly_flags": list(r.anomaly_flags),
    }


def record_from_dict(d: dict) -> RoundRecord:
    missing = [k for k in TRANSCRIPT_FIELDS if k not in d]
    if missing:
        raise ValueError(f"transcript record lacks fields {missing}")
    return RoundRecord(
        index=int(d["index"]),
        mode=Mode(d["mode"]),
        theta=Angle(d["theta"]),
        s=int(d["s"]),
        theta_star=None if d["theta_star"] is None else Angle(d["theta_star"]),
        alpha_a_idx=int(d["alpha_a_idx"]),
        alpha_b_idx=int(d["alpha_b_idx"]),
        key_bit=int(d["key_bit"]),
        outcome_alice=MeasurementOutcome(*d["outcome_alice"]),
        outcome_bob_tap=MeasurementOutcome(*d["outcome_bob_tap"]),
        matched=bool(d["matched"]),
        sifted=bool(d["sifted"]),
        integrity_ok=d["integrity_ok"],
        anomaly_flags=tuple(d["anomaly_flags"]),
    )


def write_transcript(path: Path | str, transcript: Transcript) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in transcript.rounds:
            fh.write(json.dumps(record_to_dict(r), separators=(",", ":")))
            fh.write("\n")


def read_transcript(path: Path | str) -> list[RoundRecord]:
    with open(path, encoding="utf-8") as fh:
        return [record_from_dict(json.loads(line)) for line in fh if line.strip()]


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flatten(value, name + "."))
        else:
            out.append((name, value))
    return out


def _fmt_value(v: object) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def format_summary(summary: dict) -> str:
    return "".join(f"{k} = {_fmt_value(v)}\n" for k, v in _flatten(summary))


def write_summary(path: Path | str, summary: dict) -> None:
    Path(path).write_text(format_summary(summary), encoding="utf-8")


def read_summary(path: Path | str) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_curves(path: Path | str, points: Iterable[CurvePoint]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for p in points:
            w.writerow([fmt(p.mu), fmt(p.eta), fmt(p.t), fmt(p.i_e), int(p.is_critical)])


def read_curves(path: Path | str) -> list[CurvePoint]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CURVE_HEADER:
            raise ValueError(f"{path}: header {header} is not {list(CURVE_HEADER)}")
        return [
            CurvePoint(float(mu), float(eta), float(t), float(i_e), None, bool(int(crit)))
            for mu, eta, t, i_e, crit in reader
        ]


def write_annotations(path: Path | str, rows: Iterable[tuple[float, float, float, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANNOTATION_HEADER)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_annotations(path: Path | str) -> list[dict[str, float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ANNOTATION_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]
