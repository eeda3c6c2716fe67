"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment; blank lines are
ignored.  Overrides (``--set KEY=VALUE``) are applied after the file.

Session keys (defaults in brackets): ``N`` [3], ``c`` [0.1], ``mu`` [6],
``t`` [0.7], ``t_link`` [1], ``eta_det`` [1], ``f_rep`` [1e6],
``target_key_bits`` [256], ``max_rounds`` [none], ``seed`` [0],
``photon_mode`` [coherent | ideal], ``attack`` [honest | pns |
impersonation | trojan], ``eta`` [0.5, PNS beam splitter],
``ancilla_photons`` [1].

Sweep keys: ``t_values`` [0.7,0.9; just ``t`` when only ``t`` is given],
``etas`` [0.1,...,0.9], ``mu_max`` [20], ``mu_step`` [0.1],
``tol`` [1e-10].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .adversary import AttackModel, attack_from_name
from .analysis import DEFAULT_ETAS, DEFAULT_TOL
from .polarization import PhotonMode
from .protocol import SessionConfig


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key or line."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _bounded(lo: float, hi: float, lo_open: bool = False, hi_open: bool = False):
    def check(v: float) -> bool:
        above = v > lo if lo_open else v >= lo
        below = v < hi if hi_open else v <= hi
        return above and below

    left = "(" if lo_open else "["
    right = ")" if hi_open else "]"
    return check, f"in {left}{lo:g}, {hi:g}{right}"


def _positive_int(v: int):
    return v >= 1


_INF = float("inf")

# key -> (parse, check, rule text)
_KEYS: dict[str, tuple[Callable[[str], object], Callable[[object], bool], str]] = {
    "N": (int, lambda v: v >= 2, ">= 2"),
    "c": (float, *_bounded(0.0, 1.0)),
    "mu": (float, lambda v: 0.0 <= v < _INF, ">= 0"),
    "t": (float, *_bounded(0.0, 1.0, lo_open=True)),
    "t_link": (float, *_bounded(0.0, 1.0, lo_open=True)),
    "eta_det": (float, *_bounded(0.0, 1.0, lo_open=True)),
    "f_rep": (float, lambda v: v > 0.0, "> 0"),
    "target_key_bits": (int, _positive_int, ">= 1"),
    "max_rounds": (lambda s: None if s.lower() == "none" else int(s), lambda v: v is None or v >= 1, ">= 1 or none"),
    "seed": (int, lambda v: 0 <= v < 2**64, "a 64-bit unsigned integer"),
    "photon_mode": (lambda s: PhotonMode(s.lower()), lambda v: True, "coherent or ideal"),
    "attack": (str.lower, lambda v: v in ("honest", "pns", "impersonation", "trojan"), "honest, pns, impersonation or trojan"),
    "eta": (float, *_bounded(0.0, 1.0, lo_open=True, hi_open=True)),
    "ancilla_photons": (int, _positive_int, ">= 1"),
    "t_values": (_floats, lambda v: bool(v) and all(0.0 < x <= 1.0 for x in v), "a comma list of values in (0, 1]"),
    "etas": (_floats, lambda v: bool(v) and all(0.0 < x < 1.0 for x in v), "a comma list of values in (0, 1)"),
    "mu_max": (float, lambda v: v > 0.0, "> 0"),
    "mu_step": (float, lambda v: v > 0.0, "> 0"),
    "tol": (float, lambda v: v > 0.0, "> 0"),
}

DEFAULTS: dict[str, str] = {
    "N": "3",
    "c": "0.1",
    "mu": "6",
    "t": "0.7",
    "t_link": "1",
    "eta_det": "1",
    "f_rep": "1e6",
    "target_key_bits": "256",
    "max_rounds": "none",
    "seed": "0",
    "photon_mode": "coherent",
    "attack": "honest",
    "eta": "0.5",
    "ancilla_photons": "1",
    "t_values": "0.7,0.9",
    "etas": ",".join(f"{e:g}" for e in DEFAULT_ETAS),
    "mu_max": "20",
    "mu_step": "0.1",
    "tol": f"{DEFAULT_TOL:g}",
}


@dataclass(frozen=True)
class SweepSpec:
    t_values: tuple[float, ...]
    etas: tuple[float, ...]
    mu_max: float
    mu_step: float
    tol: float

    def mu_grid(self) -> np.ndarray:
        n = int(round(self.mu_max / self.mu_step))
        return np.round(np.arange(n + 1) * self.mu_step, 10)


@dataclass(frozen=True)
class RunConfig:
    session: SessionConfig
    attack: AttackModel
    sweep: SweepSpec
    values: Mapping[str, object] = field(default_factory=dict)


def parse_lines(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        out[key] = value
    return out


def parse_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like KEY=VALUE")
    key, value = (part.strip() for part in item.split("=", 1))
    return key, value


def _convert(key: str, raw: str) -> object:
    if key not in _KEYS:
        raise ConfigError(f"unknown key {key!r}")
    parse, check, rule = _KEYS[key]
    try:
        value = parse(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} (expected {rule})") from None
    if not check(value):
        raise ConfigError(f"{key}={raw} out of range: must be {rule}")
    return value


def build_config(raw: Mapping[str, str]) -> RunConfig:
    merged = dict(DEFAULTS)
    merged.update(raw)
    if "t" in raw and "t_values" not in raw:
        merged["t_values"] = raw["t"]
    v = {key: _convert(key, text) for key, text in merged.items()}
    session = SessionConfig(
        n_angles=v["N"],
        amode_prob=v["c"],
        mean_photons=v["mu"],
        bob_tap_transmission=v["t"],
        channel_transmission=v["t_link"],
        detector_efficiency=v["eta_det"],
        pulse_rate=v["f_rep"],
        target_key_bits=v["target_key_bits"],
        seed=v["seed"],
        photon_mode=v["photon_mode"],
        max_rounds=v["max_rounds"],
    )
    attack = attack_from_name(v["attack"], eta=v["eta"], ancilla_photons=v["ancilla_photons"])
    sweep = SweepSpec(v["t_values"], v["etas"], v["mu_max"], v["mu_step"], v["tol"])
    return RunConfig(session, attack, sweep, v)


def parse_config(path: Path | str | None, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """Read ``path`` (may be None for all defaults), apply ``overrides``, validate."""
    raw: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"config file {str(p)!r} not found") from None
        raw.update(parse_lines(text, str(p)))
    raw.update(overrides or {})
    return build_config(raw)
