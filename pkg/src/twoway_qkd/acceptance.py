"""Exit criteria for the package, runnable from ``twoway-qkd selfcheck``.

Each criterion is a function returning :class:`CriterionResult`.  Seeds
and tolerances are fixed here so that every run gives the same verdicts.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from decimal import Decimal, getcontext
from pathlib import Path
from typing import Callable

import numpy as np

from . import adversary, analysis, files, protocol
from .adversary import Honest, Impersonation, PNS, TrojanHorse
from .polarization import PhotonMode
from .protocol import Mode, SessionConfig, Verdict, run_session, session_seed

PUBLISHED_I_STAR = 0.6900
BASE_SEED = 20261017


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def decimal_critical_info(n_terms: int = 26, digits: int = 40) -> Decimal:
    """Partial sum of ``e^-1/n! * I(n)`` for n < n_terms in decimal arithmetic.

    Exact integer binomials, decimal square roots; shares no code with
    :mod:`twoway_qkd.analysis`.
    """
    getcontext().prec = digits
    e_inv = Decimal(-1).exp()
    total = Decimal(0)
    fact = 1
    for n in range(n_terms):
        if n:
            fact *= n
        acc = sum(
            (Decimal(math.comb(n, l) * math.comb(n, l + 1)).sqrt() for l in range(n)),
            Decimal(0),
        )
        fid = Decimal(1) / 2 + acc / Decimal(2) ** (n + 1)
        total += e_inv / fact * fid
    return total


def _timed(number: int, name: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0)


def criterion_critical_info() -> tuple[bool, str]:
    t0 = time.perf_counter()
    value = analysis.critical_info()
    runtime = time.perf_counter() - t0
    oracle = float(decimal_critical_info())
    ok = abs(value - PUBLISHED_I_STAR) <= 5e-4 and abs(value - oracle) <= 1e-6 and runtime < 1.0
    return ok, (
        f"I_E*={value:.8f} |I_E*-0.6900|={abs(value - PUBLISHED_I_STAR):.1e}<=5e-4, "
        f"oracle={oracle:.8f} |diff|={abs(value - oracle):.1e}<=1e-6, runtime={runtime:.3f}s<1s"
    )


def criterion_advantage() -> tuple[bool, str]:
    adv = 1.0 - analysis.critical_info()
    return 0.305 <= adv <= 0.315, f"1-I_E*={adv:.5f} in [0.305, 0.315]"


def criterion_critical_amplitude() -> tuple[bool, str]:
    mu = analysis.critical_mu(0.5, 0.7)
    ok_mu = abs(mu - 5.7142857) <= 1e-6
    i_star = analysis.critical_info()
    rng = np.random.default_rng(BASE_SEED)
    worst = 0.0
    for _ in range(20):
        eta = float(rng.uniform(0.05, 0.95))
        t = float(rng.uniform(0.05, 1.0))
        res = analysis.eve_info(analysis.ChannelParams(analysis.critical_mu(eta, t), eta, t))
        worst = max(worst, abs(res.i_e - i_star))
    etas = np.linspace(0.2, 0.8, 61)
    mus = [analysis.critical_mu(float(e), 0.7) for e in etas]
    ok_range = all(5.0 <= m <= 15.0 for m in mus)
    ok = ok_mu and worst <= 1e-6 and ok_range
    return ok, (
        f"mu*(0.5,0.7)={mu:.7f}; max|I_E(mu*)-I_E*| over 20 pairs={worst:.1e}<=1e-6; "
        f"mu* over eta in [0.2,0.8], t=0.7 spans [{min(mus):.3f}, {max(mus):.3f}] within [5, 15]"
    )


def criterion_fidelity_series() -> tuple[bool, str]:
    fb = analysis.fidelity_bound
    values = [fb(n) for n in range(1001)]
    ok0 = values[0] == 0.5
    ok1 = values[1] == 0.75
    ok2 = abs(values[2] - (0.5 + math.sqrt(2) / 4)) <= 1e-12
    increasing = all(b > a for a, b in zip(values, values[1:]))
    below_one = all(v < 1.0 for v in values)
    ok = ok0 and ok1 and ok2 and increasing and below_one
    return ok, (
        f"I(0)={values[0]!r} I(1)={values[1]!r} I(2)={values[2]:.15f} "
        f"increasing={increasing} max={max(values):.6f}<1"
    )


def criterion_honest_protocol() -> tuple[bool, str]:
    t0 = time.perf_counter()
    bad = []
    checked = 0
    worst_z = 0.0
    for i, (n, c) in enumerate((n, c) for n in (2, 3, 5) for c in (0.0, 0.1, 0.5)):
        cfg = SessionConfig(
            n_angles=n,
            amode_prob=c,
            photon_mode=PhotonMode.IDEAL_SINGLE_PHOTON,
            target_key_bits=10**9,
            max_rounds=10_000,
            seed=session_seed(BASE_SEED, i),
        )
        tr = run_session(cfg, Honest())
        p = (1.0 - c) / n
        sigma = math.sqrt(p * (1.0 - p) / tr.n_rounds)
        z = abs(tr.sift_rate - p) / sigma
        worst_z = max(worst_z, z)
        amode = [r for r in tr.rounds if r.mode is Mode.A and r.matched and r.s == 0]
        checked += len(amode)
        eq5 = all(r.integrity_ok is True for r in amode)
        if tr.qber != 0.0 or tr.verdict is not Verdict.ACCEPTED or not eq5 or z > 3.0:
            bad.append(f"(N={n},c={c})")
    runtime = time.perf_counter() - t0
    ok = not bad and runtime < 10.0
    return ok, (
        f"9 configs x 1e4 rounds, failures={bad or 'none'}, {checked} matched s=0 A-mode "
        f"records all satisfy O_b=k^(2theta*/pi), worst sift-rate z={worst_z:.2f}<=3, runtime={runtime:.1f}s<10s"
    )


def criterion_impersonation() -> tuple[bool, str]:
    oracle = adversary.impersonation_qber(2)
    cfg = SessionConfig(
        n_angles=2,
        amode_prob=0.0,
        photon_mode=PhotonMode.IDEAL_SINGLE_PHOTON,
        target_key_bits=20_000,
        seed=BASE_SEED,
    )
    tr = run_session(cfg, Impersonation())
    qber_ok = tr.n_sifted >= 10_000 and abs(tr.qber - 0.1875) <= 0.01 and abs(oracle - 0.1875) <= 1e-12
    n_sessions = 200
    detected = 0
    for i in range(n_sessions):
        short = SessionConfig(
            n_angles=2,
            amode_prob=0.0,
            photon_mode=PhotonMode.IDEAL_SINGLE_PHOTON,
            target_key_bits=256,
            seed=session_seed(BASE_SEED + 1, i),
        )
        detected += run_session(short, Impersonation()).verdict is Verdict.HASH_MISMATCH
    empirical = detected / n_sessions
    analytic = 1.0 - adversary.hash_pass_probability(tr.qber, 256)
    ok = qber_ok and empirical >= 0.999 and analytic >= 0.999
    return ok, (
        f"QBER={tr.qber:.4f} over {tr.n_sifted} bits vs oracle {oracle:.4f} (+-0.01); "
        f"256-bit hash mismatch in {detected}/{n_sessions} sessions, "
        f"1-(1-QBER)^256={analytic:.6f}>=0.999"
    )


def criterion_trojan() -> tuple[bool, str]:
    t = 0.7
    cfg = SessionConfig(
        n_angles=3,
        amode_prob=0.0,
        bob_tap_transmission=t,
        photon_mode=PhotonMode.IDEAL_SINGLE_PHOTON,
        target_key_bits=10_000,
        seed=BASE_SEED,
    )
    tr = run_session(cfg, TrojanHorse())
    agreement = tr.eve_summary["eve_agreement_with_bob"]
    ok_read = tr.verdict is Verdict.ACCEPTED and abs(agreement - t) <= 0.02

    c, n_angles = 0.1, 3
    p = adversary.trojan_violation_probability(c, n_angles, t)
    p_enum = adversary.trojan_violation_probability_enumerated(c, n_angles, t)
    expected = 1.0 / p
    lengths = []
    for i in range(200):
        scfg = SessionConfig(
            n_angles=n_angles,
            amode_prob=c,
            bob_tap_transmission=t,
            photon_mode=PhotonMode.IDEAL_SINGLE_PHOTON,
            target_key_bits=10**9,
            seed=session_seed(BASE_SEED + 2, i),
        )
        st = run_session(scfg, TrojanHorse())
        if st.verdict is Verdict.AUTH_FAILURE:
            lengths.append(st.n_rounds)
    mean_rounds = float(np.mean(lengths)) if lengths else float("inf")
    rel = abs(mean_rounds - expected) / expected
    ok = ok_read and len(lengths) == 200 and rel <= 0.10 and abs(p - p_enum) <= 1e-15
    return ok, (
        f"c=0: Eve agreement {agreement:.4f} vs t={t} (+-0.02), verdict {tr.verdict.value}; "
        f"c=0.1: {len(lengths)}/200 sessions AuthFailure, mean rounds {mean_rounds:.1f} vs 1/p={expected:.1f} "
        f"(rel {rel:.3f}<=0.10)"
    )


def criterion_pns() -> tuple[bool, str]:
    worst = 0.0
    for j, (mu, eta, t) in enumerate(((6.0, 0.5, 0.7), (10.0, 0.2, 0.9), (2.5, 0.8, 0.5))):
        cfg = SessionConfig(
            mean_photons=mu,
            bob_tap_transmission=t,
            channel_transmission=0.3,
            target_key_bits=10**9,
            max_rounds=500,
            seed=session_seed(BASE_SEED, j),
        )
        attack = PNS(eta)
        eve = attack.make_eve()
        session = protocol.Session(cfg, eve)
        for index in range(cfg.max_rounds):
            protocol.play_round(index, session)
        for direction, pulse in eve.state.reflected_pulses:
            want = (1 - eta) * mu if direction is adversary.Direction.ALICE_TO_BOB else (1 - eta) * eta * t * mu
            worst = max(worst, abs(pulse.mean_photons - want) / want)
    ordered = True
    for mu in np.linspace(0.5, 20.0, 10):
        for eta in np.linspace(0.05, 0.95, 10):
            for t in (0.5, 0.7, 0.9):
                r = analysis.eve_info(analysis.ChannelParams(float(mu), float(eta), t))
                ordered &= r.i_ba <= r.i_ab and r.i_e == r.i_ba
    ok = worst <= 1e-12 and ordered
    return ok, f"max rel. deviation of stored means={worst:.1e}; I_BA<=I_AB on 10x10x3 grid: {ordered}"


def criterion_curves() -> tuple[bool, str]:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        t0 = time.perf_counter()
        code = main(["analyze", "--out", str(out), "--set", "t_values=0.7,0.9", "--quiet"])
        runtime = time.perf_counter() - t0
        problems = []
        n_curves = 0
        for t in (0.7, 0.9):
            label = files.t_label(t)
            points = files.read_curves(out / f"curves_t{label}.csv")
            notes = files.read_annotations(out / f"annotations_t{label}.csv")
            for eta in sorted({p.eta for p in points}):
                n_curves += 1
                curve = [p for p in points if p.eta == eta]
                if curve[0].mu != 0.0 or curve[0].i_e != 0.5:
                    problems.append(f"t={t} eta={eta} start")
                if any(b.i_e < a.i_e for a, b in zip(curve, curve[1:])):
                    problems.append(f"t={t} eta={eta} not monotone")
                crit = [p for p in curve if p.is_critical]
                if len(crit) != 1 or abs(crit[0].i_e - PUBLISHED_I_STAR) > 5e-4:
                    problems.append(f"t={t} eta={eta} crossing")
            for row in notes:
                if abs(row["i_e_star"] - PUBLISHED_I_STAR) > 5e-4:
                    problems.append(f"t={t} eta={row['eta']} annotation")
    ok = code == 0 and not problems and runtime < 5.0 and n_curves == 18
    return ok, (
        f"{n_curves} curves for t in {{0.7, 0.9}}, issues={problems or 'none'}, runtime={runtime:.2f}s<5s"
    )


def criterion_determinism() -> tuple[bool, str]:
    from .cli import main

    runs = {
        "simulate": ["simulate", "--seed", "7", "--set", "target_key_bits=64", "--quiet"],
        "simulate-trojan": ["simulate", "--attack", "trojan", "--set", "target_key_bits=64", "--quiet"],
        "analyze": ["analyze", "--set", "mu_max=8", "--quiet"],
    }
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in runs.items():
            outputs = []
            for rep in range(2):
                out = Path(tmp) / f"{name}-{rep}"
                main([*argv, "--out", str(out)])
                main(["report", "--out", str(out), "--quiet"])
                outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            if outputs[0] != outputs[1]:
                mismatched.append(name)
    return not mismatched, f"byte-identical outputs across repeated runs: mismatches={mismatched or 'none'}"


CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, str]]]] = [
    (1, "critical information bound", criterion_critical_info),
    (2, "advantage over Eve", criterion_advantage),
    (3, "critical amplitude", criterion_critical_amplitude),
    (4, "fidelity series", criterion_fidelity_series),
    (5, "honest protocol correctness", criterion_honest_protocol),
    (6, "impersonation detection", criterion_impersonation),
    (7, "Trojan-horse behaviour", criterion_trojan),
    (8, "PNS accounting", criterion_pns),
    (9, "I_E(mu) curves", criterion_curves),
    (10, "determinism", criterion_determinism),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            return _timed(num, name, fn)
    raise KeyError(number)


def run_all() -> list[CriterionResult]:
    return [_timed(num, name, fn) for num, name, fn in CRITERIA]
