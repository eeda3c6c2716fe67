"""Alice/Bob state machine for the two-way randomly-polarized protocol.

One round:

1. Alice draws theta (theta* in {0, pi/2} with probability c, otherwise
   uniform), a screening index a, a screening factor s, and sends
   ``|theta + delta_{0s} alpha_a>``.
2. Bob draws k and b, rotates by ``(-1)^k pi/4 + alpha_b``, diverts a
   fraction 1 - t of the light to his own PBS (outcome O_b) and returns
   the rest.
3. Alice rotates by ``-theta + delta_{1s} alpha_a`` and measures (O_a).
4. Both announce their screening indices.  A-mode rounds are checked at
   Bob's tap, T-mode rounds with a + b = N + 1 and a clean bit at Alice
   give one key bit each.

The session ends when the target key length is reached, when an A-mode
check fails, or after ``max_rounds``; then the key hashes are compared.
"""

from __future__ import annotations

import enum
import functools
import hashlib
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import adversary
from .adversary import AttackModel, Eve, Honest
from .polarization import (
    PI,
    Angle,
    CoherentPulse,
    MeasurementOutcome,
    OutcomeKind,
    PhotonBatch,
    PhotonMode,
    ScreeningSet,
    Wavelength,
    attenuate,
    beamsplit,
    measure_pbs,
    rotate,
    rotate_batch,
    sample_photons,
    tap,
)

AUTH_ANGLES = (Angle(0.0), Angle(PI / 2))


class Mode(enum.Enum):
    A = "A"
    T = "T"


class Verdict(enum.Enum):
    ACCEPTED = "Accepted"
    HASH_MISMATCH = "HashMismatch"
    AUTH_FAILURE = "AuthFailure"
    ABORTED = "Aborted"


@dataclass(frozen=True)
class SessionConfig:
    """Protocol and optics parameters for one session.

    ``max_rounds`` bounds the run; when it is hit before ``target_key_bits``
    the hashes are still compared on whatever key was sifted.  ``None``
    means ``1000 * target_key_bits + 10_000``.
    """

    n_angles: int = 3
    amode_prob: float = 0.1
    mean_photons: float = 6.0
    bob_tap_transmission: float = 0.7
    channel_transmission: float = 1.0
    detector_efficiency: float = 1.0
    pulse_rate: float = 1e6
    target_key_bits: int = 256
    seed: int = 0
    photon_mode: PhotonMode = PhotonMode.COHERENT
    max_rounds: int | None = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "photon_mode", PhotonMode(self.photon_mode))
        except ValueError:
            raise ValueError(f"photon_mode={self.photon_mode!r} must be 'coherent' or 'ideal'") from None
        checks = [
            ("n_angles", self.n_angles >= 2, ">= 2"),
            ("amode_prob", 0.0 <= self.amode_prob <= 1.0, "in [0, 1]"),
            ("mean_photons", self.mean_photons >= 0.0, ">= 0"),
            ("bob_tap_transmission", 0.0 < self.bob_tap_transmission <= 1.0, "in (0, 1]"),
            ("channel_transmission", 0.0 < self.channel_transmission <= 1.0, "in (0, 1]"),
            ("detector_efficiency", 0.0 < self.detector_efficiency <= 1.0, "in (0, 1]"),
            ("pulse_rate", self.pulse_rate > 0.0, "> 0"),
            ("target_key_bits", self.target_key_bits >= 1, ">= 1"),
            ("seed", 0 <= self.seed < 2**64, "a 64-bit unsigned integer"),
            ("max_rounds", self.max_rounds is None or self.max_rounds >= 1, ">= 1"),
        ]
        for name, ok, rule in checks:
            if not ok:
                raise ValueError(f"{name}={getattr(self, name)!r} must be {rule}")

    @property
    def round_limit(self) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        return 1000 * self.target_key_bits + 10_000

    @functools.cached_property
    def ideal(self) -> bool:
        return self.photon_mode is PhotonMode.IDEAL_SINGLE_PHOTON


class RoundInputs(NamedTuple):
    theta: Angle
    mode: Mode
    s: int
    alpha_a_idx: int
    k: int
    alpha_b_idx: int


@dataclass(frozen=True)
class RoundRecord:
    index: int
    mode: Mode
    theta: Angle
    s: int
    theta_star: Angle | None
    alpha_a_idx: int
    alpha_b_idx: int
    key_bit: int
    outcome_alice: MeasurementOutcome
    outcome_bob_tap: MeasurementOutcome
    matched: bool
    sifted: bool = False
    integrity_ok: bool | None = None
    anomaly_flags: tuple[str, ...] = ()


class Session:
    """Everything an interposer may look at while a session runs."""

    def __init__(self, config: SessionConfig, eve: Eve, rng: np.random.Generator | None = None):
        self.config = config
        self.eve = eve
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.screening = ScreeningSet(config.n_angles)
        self.photon_mode = config.photon_mode

    def channel(self, pulse: CoherentPulse) -> CoherentPulse:
        """One lossy fiber traversal (lossless in ideal mode)."""
        if self.config.ideal or self.config.channel_transmission == 1.0:
            return pulse
        return attenuate(pulse, self.config.channel_transmission)


@dataclass
class Transcript:
    config: SessionConfig
    attack: str
    rounds: list[RoundRecord]
    alice_key_bits: str
    bob_key_bits: str
    hash_alice: int | None
    hash_bob: int | None
    verdict: Verdict
    eve_summary: dict = field(default_factory=dict)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def n_sifted(self) -> int:
        return len(self.alice_key_bits)

    @property
    def qber(self) -> float:
        if not self.alice_key_bits:
            return 0.0
        errors = sum(a != b for a, b in zip(self.alice_key_bits, self.bob_key_bits))
        return errors / len(self.alice_key_bits)

    @property
    def sift_rate(self) -> float:
        return self.n_sifted / self.n_rounds if self.rounds else 0.0

    def anomaly_counts(self) -> dict[str, int]:
        counts = Counter(flag for r in self.rounds for flag in r.anomaly_flags)
        return dict(sorted(counts.items()))

    def summary(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "attack": self.attack,
            "rounds": self.n_rounds,
            "sifted_bits": self.n_sifted,
            "qber": self.qber,
            "sift_rate": self.sift_rate,
            "hash_alice": None if self.hash_alice is None else f"{self.hash_alice:016x}",
            "hash_bob": None if self.hash_bob is None else f"{self.hash_bob:016x}",
            "anomalies": self.anomaly_counts(),
            "eve": dict(self.eve_summary),
        }


def _uniform_index(u: float, n: int) -> int:
    return min(int(u * n), n - 1) + 1


def draw_round_inputs(cfg: SessionConfig, rng: np.random.Generator) -> RoundInputs:
    """Draw (theta, mode, s, alpha_a index, k, alpha_b index) for one round."""
    u = rng.random(6)
    if u[0] < cfg.amode_prob:
        mode = Mode.A
        theta = AUTH_ANGLES[0] if u[1] < 0.5 else AUTH_ANGLES[1]
    else:
        mode = Mode.T
        theta = Angle(float(u[1]) * PI)
    return RoundInputs(
        theta=theta,
        mode=mode,
        s=int(u[2] >= 0.5),
        alpha_a_idx=_uniform_index(float(u[3]), cfg.n_angles),
        k=int(u[4] >= 0.5),
        alpha_b_idx=_uniform_index(float(u[5]), cfg.n_angles),
    )


def alice_prepare(theta: Angle, alpha_a_idx: int, s: int, cfg: SessionConfig) -> CoherentPulse:
    alpha_a = ScreeningSet(cfg.n_angles)[alpha_a_idx]
    pol = theta + alpha_a if s == 0 else theta
    return CoherentPulse(pol, cfg.mean_photons, Wavelength.PROTOCOL)


class BobOutput(NamedTuple):
    onward: CoherentPulse
    onward_ancilla: PhotonBatch | None
    tap_outcome: MeasurementOutcome


def bob_encode(
    pulse: CoherentPulse,
    k: int,
    alpha_b_idx: int,
    cfg: SessionConfig,
    rng: np.random.Generator,
    ancilla: PhotonBatch | None = None,
) -> BobOutput:
    """Encode k with ``U((-1)^k pi/4 + alpha_b)`` and tap a fraction 1 - t.

    Bob taps every round because he cannot know the mode in advance.  A
    Foreign ancilla riding with the pulse gets the same rotation and the same
    per-photon tap; its tapped photons add clicks to Bob's detectors.
    """
    phi = adversary.encoding_angle(k, ScreeningSet(cfg.n_angles)[alpha_b_idx])
    rotated = rotate(pulse, phi)
    t = cfg.bob_tap_transmission
    tap_outcome = MeasurementOutcome(0, 0)
    if t < 1.0:
        if cfg.ideal:
            onward = rotated
            tapped = sample_photons(rotated, rng, cfg.photon_mode)
        else:
            onward, reflected = beamsplit(rotated, t)
            tapped = sample_photons(reflected, rng, cfg.photon_mode)
        tap_outcome = measure_pbs(tapped, rng)
    else:
        onward = rotated
    onward_ancilla = None
    if ancilla is not None:
        turned = rotate_batch(ancilla, phi)
        into_detector, onward_ancilla = tap(turned, 1.0 - t, rng)
        tap_outcome = tap_outcome + measure_pbs(into_detector, rng)
    return BobOutput(onward, onward_ancilla, tap_outcome)


def alice_compensate_measure(
    pulse: CoherentPulse,
    theta: Angle,
    s: int,
    alpha_a_idx: int,
    cfg: SessionConfig,
    rng: np.random.Generator,
) -> MeasurementOutcome:
    if pulse.wavelength is not Wavelength.PROTOCOL:
        # Alice's filter rejects light at the wrong wavelength
        return MeasurementOutcome(0, 0)
    alpha_a = ScreeningSet(cfg.n_angles)[alpha_a_idx]
    undo = -float(theta) + (float(alpha_a) if s == 1 else 0.0)
    arrived = rotate(pulse, undo)
    if not cfg.ideal and cfg.detector_efficiency < 1.0:
        arrived = attenuate(arrived, cfg.detector_efficiency)
    return measure_pbs(sample_photons(arrived, rng, cfg.photon_mode), rng)


def expected_tap_bit(k: int, theta_star: Angle) -> int:
    """Integrity relation ``O_b = k xor 2 theta*/pi``."""
    return k ^ int(round(2.0 * float(theta_star) / PI))


def amode_verify(record: RoundRecord) -> bool | None:
    """Check Bob's tap record on a matched s = 0 A-mode round.

    Returns ``None`` when the round is not checkable (other mode, unmatched
    angles, s = 1, or an empty tap).  A double click fails the check: an
    honest matched round puts every tapped photon on one detector.
    """
    return _integrity(
        record.mode, record.matched, record.s, record.key_bit, record.theta_star, record.outcome_bob_tap
    )


def _integrity(
    mode: Mode, matched: bool, s: int, k: int, theta_star: Angle | None, tap_out: MeasurementOutcome
) -> bool | None:
    if mode is not Mode.A or not matched or s != 0:
        return None
    tap_kind = tap_out.kind
    if tap_kind is OutcomeKind.EMPTY:
        return None
    if tap_kind is OutcomeKind.AMBIGUOUS:
        return False
    return tap_out.bit == expected_tap_bit(k, theta_star)


def tmode_sift(record: RoundRecord) -> int | None:
    if record.mode is not Mode.T or not record.matched:
        return None
    return record.outcome_alice.bit


def hash_key(bits: str | Sequence[int]) -> int:
    """64-bit BLAKE2b digest of a bit string (one byte per bit)."""
    if len(bits) == 0:
        raise ValueError("cannot hash an empty key")
    payload = bytes(int(b) for b in bits)
    if any(b > 1 for b in payload):
        raise ValueError("key must contain only 0/1 bits")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def _flags(o_a: MeasurementOutcome, tap_out: MeasurementOutcome, integrity: bool | None):
    flags = []
    kind_a = o_a.kind
    if kind_a is OutcomeKind.EMPTY:
        flags.append("alice_empty")
    elif kind_a is OutcomeKind.AMBIGUOUS:
        flags.append("alice_ambiguous")
    if tap_out.kind is OutcomeKind.AMBIGUOUS:
        flags.append("tap_ambiguous")
    if integrity is False:
        flags.append("integrity_violation")
    return tuple(flags)


def play_round(index: int, session: Session) -> RoundRecord:
    cfg, rng, eve = session.config, session.rng, session.eve
    inp = draw_round_inputs(cfg, rng)
    pulse = alice_prepare(inp.theta, inp.alpha_a_idx, inp.s, cfg)
    at_bob, ancilla = eve.to_bob(pulse, session)
    bob = bob_encode(at_bob, inp.k, inp.alpha_b_idx, cfg, rng, ancilla)
    back = eve.to_alice(bob.onward, bob.onward_ancilla, session)
    o_a = alice_compensate_measure(back, inp.theta, inp.s, inp.alpha_a_idx, cfg, rng)
    matched = session.screening.matches(inp.alpha_a_idx, inp.alpha_b_idx)
    if inp.mode is Mode.A:
        theta_star = inp.theta
        integrity = _integrity(Mode.A, matched, inp.s, inp.k, theta_star, bob.tap_outcome)
        sifted = False
    else:
        theta_star = None
        integrity = None
        sifted = matched and o_a.is_bit
    record = RoundRecord(
        index=index,
        mode=inp.mode,
        theta=inp.theta,
        s=inp.s,
        theta_star=theta_star,
        alpha_a_idx=inp.alpha_a_idx,
        alpha_b_idx=inp.alpha_b_idx,
        key_bit=inp.k,
        outcome_alice=o_a,
        outcome_bob_tap=bob.tap_outcome,
        matched=matched,
        sifted=sifted,
        integrity_ok=integrity,
        anomaly_flags=_flags(o_a, bob.tap_outcome, integrity),
    )
    eve.after_round(record, session)
    return record



def run_session(
    cfg: SessionConfig,
    attack: AttackModel | None = None,
    rng: np.random.Generator | None = None,
) -> Transcript:
    """Run rounds until the key is long enough, a check fails, or the round limit."""
    attack = attack if attack is not None else Honest()
    eve = attack.make_eve()
    session = Session(cfg, eve, rng)
    records: list[RoundRecord] = []
    alice_bits: list[str] = []
    bob_bits: list[str] = []
    verdict = None
    for index in range(cfg.round_limit):
        record = play_round(index, session)
        records.append(record)
        if record.integrity_ok is False:
            verdict = Verdict.AUTH_FAILURE
            break
        if record.sifted:
            alice_bits.append(str(record.outcome_alice.bit))
            bob_bits.append(str(record.key_bit))
            if len(alice_bits) >= cfg.target_key_bits:
                break
    key_a, key_b = "".join(alice_bits), "".join(bob_bits)
    h_a = h_b = None
    if verdict is None:
        if not key_a:
            verdict = Verdict.ABORTED
        else:
            h_a, h_b = hash_key(key_a), hash_key(key_b)
            verdict = Verdict.ACCEPTED if h_a == h_b else Verdict.HASH_MISMATCH
    return Transcript(
        config=cfg,
        attack=eve.name,
        rounds=records,
        alice_key_bits=key_a,
        bob_key_bits=key_b,
        hash_alice=h_a,
        hash_bob=h_b,
        verdict=verdict,
        eve_summary=adversary.summarize(eve, records),
    )


def session_seed(base_seed: int, index: int) -> int:
    """Seed of the ``index``-th session in a batch: ``base_seed xor index``."""
    return (base_seed ^ index) & (2**64 - 1)


def config_dict(cfg: SessionConfig) -> dict:
    d = asdict(cfg)
    d["photon_mode"] = cfg.photon_mode.value
    return d
