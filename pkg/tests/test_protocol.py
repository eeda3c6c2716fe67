import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoway_qkd.adversary import Honest
from twoway_qkd.polarization import (
    PI,
    Angle,
    CoherentPulse,
    MeasurementOutcome,
    PhotonMode,
    ScreeningSet,
)
from twoway_qkd.protocol import (
    Mode,
    RoundRecord,
    SessionConfig,
    Verdict,
    alice_compensate_measure,
    alice_prepare,
    amode_verify,
    bob_encode,
    draw_round_inputs,
    hash_key,
    run_session,
    session_seed,
    tmode_sift,
)

IDEAL = PhotonMode.IDEAL_SINGLE_PHOTON


def make_record(**kw) -> RoundRecord:
    base = dict(
        index=0,
        mode=Mode.A,
        theta=Angle(0.0),
        s=0,
        theta_star=Angle(0.0),
        alpha_a_idx=1,
        alpha_b_idx=2,
        key_bit=0,
        outcome_alice=MeasurementOutcome(0, 0),
        outcome_bob_tap=MeasurementOutcome(0, 0),
        matched=True,
    )
    base.update(kw)
    return RoundRecord(**base)


def test_prepare_applies_alpha_only_for_s0():
    cfg = SessionConfig(n_angles=2)
    p0 = alice_prepare(Angle(0.2 * PI), 1, 0, cfg)
    p1 = alice_prepare(Angle(0.2 * PI), 1, 1, cfg)
    assert p0.polarization.distance(0.2 * PI + PI / 3) < 1e-15
    assert p1.polarization.distance(0.2 * PI) < 1e-15
    assert alice_prepare(Angle(0.0), 2, 1, cfg).polarization.value == 0.0
    assert p0.mean_photons == cfg.mean_photons


@pytest.mark.parametrize("c, expected", [(1.0, {Mode.A}), (0.0, {Mode.T})])
def test_mode_extremes(c, expected):
    rng = np.random.default_rng(0)
    cfg = SessionConfig(amode_prob=c)
    assert {draw_round_inputs(cfg, rng).mode for _ in range(2000)} == expected


def test_amode_fraction_and_auth_angles():
    rng = np.random.default_rng(1)
    cfg = SessionConfig(amode_prob=0.1, n_angles=5)
    draws = [draw_round_inputs(cfg, rng) for _ in range(10**5)]
    frac = sum(d.mode is Mode.A for d in draws) / len(draws)
    assert abs(frac - 0.1) <= 0.005
    assert {d.theta.value for d in draws if d.mode is Mode.A} == {0.0, PI / 2}
    assert {d.alpha_a_idx for d in draws} == {1, 2, 3, 4, 5}
    assert {d.alpha_b_idx for d in draws} == {1, 2, 3, 4, 5}


def test_bob_encode_rotation_examples():
    rng = np.random.default_rng(2)
    cfg = SessionConfig(n_angles=2, bob_tap_transmission=1.0)
    theta = 0.37
    # alpha_b = 2pi/3 cancels pi/3 already present
    out = bob_encode(CoherentPulse(Angle(theta + PI / 3), 1.0), 0, 2, cfg, rng)
    assert out.onward.polarization.distance(theta + PI / 4) < 1e-12
    cfg3 = SessionConfig(n_angles=3, bob_tap_transmission=1.0)
    out = bob_encode(CoherentPulse(Angle(0.0), 1.0), 1, 2, cfg3, rng)
    assert out.onward.polarization.distance(PI / 4) < 1e-12


def test_no_tap_when_fully_transmitting():
    rng = np.random.default_rng(3)
    for mode in PhotonMode:
        cfg = SessionConfig(bob_tap_transmission=1.0, photon_mode=mode, mean_photons=20.0)
        for _ in range(200):
            out = bob_encode(CoherentPulse(Angle(0.1), 20.0), 0, 1, cfg, rng)
            assert out.tap_outcome == MeasurementOutcome(0, 0)
            assert out.onward.mean_photons == 20.0


def test_tap_takes_one_minus_t():
    rng = np.random.default_rng(4)
    cfg = SessionConfig(bob_tap_transmission=0.7)
    out = bob_encode(CoherentPulse(Angle(0.1), 6.0), 0, 1, cfg, rng)
    assert out.onward.mean_photons == pytest.approx(4.2)


@given(
    st.floats(0, PI),
    st.integers(0, 1),
    st.integers(0, 1),
    st.integers(2, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))),
)
def test_matched_ideal_round_returns_key(theta, s, k, n_a):
    n, a = n_a
    cfg = SessionConfig(n_angles=n, photon_mode=IDEAL, bob_tap_transmission=0.5)
    rng = np.random.default_rng(0)
    b = ScreeningSet(n).partner(a)
    pulse = alice_prepare(Angle(theta), a, s, cfg)
    back = bob_encode(pulse, k, b, cfg, rng).onward
    assert alice_compensate_measure(back, Angle(theta), s, a, cfg, rng).bit == k


@given(st.floats(-10, 10), st.integers(0, 1), st.integers(1, 7))
def test_random_polarization_cancels(theta, s, a):
    # prepare + compensate rotations leave exactly alpha_a behind
    alpha = ScreeningSet(7)[a].value
    total = (alpha if s == 0 else 0.0) + (-theta + (alpha if s == 1 else 0.0)) + theta
    assert Angle(total).distance(alpha) < 1e-9


def test_vacuum_returns_empty():
    rng = np.random.default_rng(5)
    cfg = SessionConfig()
    out = alice_compensate_measure(CoherentPulse(Angle(0.3), 0.0), Angle(0.3), 0, 1, cfg, rng)
    assert out == MeasurementOutcome(0, 0)


def test_mismatched_pair_gives_quarter_agreement():
    # N=2, alpha_a = alpha_b = pi/3: residual pi/3 from the matched angle
    rng = np.random.default_rng(6)
    cfg = SessionConfig(n_angles=2, photon_mode=IDEAL, bob_tap_transmission=1.0)
    trials, agree = 40_000, 0
    for i in range(trials):
        k = i & 1
        theta = Angle(rng.uniform(0, PI))
        pulse = alice_prepare(theta, 1, 0, cfg)
        back = bob_encode(pulse, k, 1, cfg, rng).onward
        agree += alice_compensate_measure(back, theta, 0, 1, cfg, rng).bit == k
    p = math.cos(PI / 3) ** 2
    assert abs(agree / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials)


@pytest.mark.parametrize(
    "theta_star, k, tap_bit, expected",
    [(0.0, 1, 1, True), (PI / 2, 1, 0, True), (PI / 2, 1, 1, False), (0.0, 0, 0, True), (0.0, 0, 1, False)],
)
def test_amode_verify_relation(theta_star, k, tap_bit, expected):
    tap = MeasurementOutcome(1, 0) if tap_bit == 0 else MeasurementOutcome(0, 1)
    rec = make_record(theta_star=Angle(theta_star), theta=Angle(theta_star), key_bit=k, outcome_bob_tap=tap)
    assert amode_verify(rec) is expected


def test_amode_verify_skips_uncheckable_rounds():
    tap = MeasurementOutcome(0, 1)
    assert amode_verify(make_record(s=1, outcome_bob_tap=tap)) is None
    assert amode_verify(make_record(matched=False, outcome_bob_tap=tap)) is None
    assert amode_verify(make_record(outcome_bob_tap=MeasurementOutcome(0, 0))) is None
    assert amode_verify(make_record(mode=Mode.T, theta_star=None, outcome_bob_tap=tap)) is None
    assert amode_verify(make_record(outcome_bob_tap=MeasurementOutcome(2, 1))) is False


def test_tmode_sift_cases():
    t_rec = dict(mode=Mode.T, theta_star=None)
    assert tmode_sift(make_record(outcome_alice=MeasurementOutcome(0, 1), **t_rec)) == 1
    assert tmode_sift(make_record(matched=False, outcome_alice=MeasurementOutcome(0, 1), **t_rec)) is None
    assert tmode_sift(make_record(outcome_alice=MeasurementOutcome(0, 0), **t_rec)) is None
    assert tmode_sift(make_record(outcome_alice=MeasurementOutcome(1, 1), **t_rec)) is None


def test_hash_key():
    zeros = "0" * 256
    assert hash_key(zeros) == hash_key(zeros)
    assert hash_key(zeros) != hash_key("1" + "0" * 255)
    assert hash_key([0, 1, 1]) == hash_key("011")
    assert 0 <= hash_key("1") < 2**64
    with pytest.raises(ValueError):
        hash_key("")


@pytest.mark.parametrize("n, c", [(2, 0.1), (3, 0.5), (5, 0.0)])
def test_honest_ideal_session(n, c):
    cfg = SessionConfig(n_angles=n, amode_prob=c, photon_mode=IDEAL, target_key_bits=256, seed=3)
    tr = run_session(cfg)
    assert tr.verdict is Verdict.ACCEPTED
    assert tr.alice_key_bits == tr.bob_key_bits
    assert tr.n_sifted == 256
    assert tr.qber == 0.0
    assert tr.hash_alice == tr.hash_bob
    checked = [r for r in tr.rounds if r.mode is Mode.A and r.matched and r.s == 0]
    assert all(r.integrity_ok for r in checked)
    for r in tr.rounds:
        assert r.matched == (r.alpha_a_idx + r.alpha_b_idx == n + 1)
        if r.sifted:
            assert r.matched and r.mode is Mode.T and r.outcome_alice.is_bit


def test_honest_coherent_sift_fraction():
    mu, c, n, t, t_link, eta_det = 6.0, 0.1, 3, 0.7, 0.8, 0.5
    cfg = SessionConfig(
        n_angles=n,
        amode_prob=c,
        mean_photons=mu,
        bob_tap_transmission=t,
        channel_transmission=t_link,
        detector_efficiency=eta_det,
        target_key_bits=10**9,
        max_rounds=10**5,
        seed=8,
    )
    tr = run_session(cfg)
    p_nonempty = 1.0 - math.exp(-mu * t_link * t * t_link * eta_det)
    assert abs(tr.sift_rate - (1 - c) / n * p_nonempty) <= 0.01
    assert tr.qber == 0.0
    assert tr.verdict is Verdict.ACCEPTED


def test_round_limit_still_compares_hashes():
    cfg = SessionConfig(photon_mode=IDEAL, target_key_bits=10**6, max_rounds=50, seed=1)
    tr = run_session(cfg)
    assert tr.n_rounds == 50
    assert tr.verdict is Verdict.ACCEPTED


def test_vacuum_session_aborts():
    tr = run_session(SessionConfig(mean_photons=0.0, max_rounds=200))
    assert tr.verdict is Verdict.ABORTED
    assert tr.hash_alice is None
    assert tr.anomaly_counts()["alice_empty"] == 200


def test_transcript_replay():
    cfg = SessionConfig(target_key_bits=64, seed=123)
    a, b = run_session(cfg), run_session(cfg)
    assert a.rounds == b.rounds
    assert a.summary() == b.summary()
    assert run_session(SessionConfig(target_key_bits=64, seed=124)).rounds != a.rounds


def test_honest_attack_is_the_default_path():
    cfg = SessionConfig(target_key_bits=64, seed=5, channel_transmission=0.6)
    assert run_session(cfg).rounds == run_session(cfg, Honest()).rounds


def test_session_seed_xor():
    assert session_seed(0b1010, 0b0110) == 0b1100
    assert session_seed(2**64 - 1, 0) == 2**64 - 1


@pytest.mark.parametrize(
    "field, value",
    [("n_angles", 1), ("amode_prob", 1.5), ("bob_tap_transmission", 0.0), ("mean_photons", -1.0), ("target_key_bits", 0)],
)
def test_config_validation(field, value):
    with pytest.raises(ValueError, match=field):
        SessionConfig(**{field: value})


def test_photon_mode_accepts_names():
    assert SessionConfig(photon_mode="ideal").photon_mode is IDEAL
    with pytest.raises(ValueError, match="photon_mode"):
        SessionConfig(photon_mode="quantum")
