"""Eavesdropper models and their channel-interposition hooks.

Every attack is a small frozen description (``Honest``, ``PNS``,
``Impersonation``, ``TrojanHorse``) that builds a stateful :class:`Eve`
for one session.  The protocol engine calls three hooks per round:

* ``to_bob(pulse, session)``: the Alice -> Bob traversal; may return an
  ancilla batch that rides along through Bob's optics.
* ``to_alice(pulse, ancilla, session)``: the Bob -> Alice traversal.
* ``after_round(record, session)``: runs after the public announcement of
  the screening angles.

The module also carries the closed-form probabilities the simulations are
checked against.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .polarization import (
    PI,
    Angle,
    CoherentPulse,
    MeasurementOutcome,
    PhotonBatch,
    PhotonMode,
    ScreeningSet,
    Wavelength,
    beamsplit,
    malus_d0_probability,
    measure_pbs,
    rotate,
    rotate_batch,
    sample_photons,
)

if TYPE_CHECKING:
    from .protocol import RoundRecord, Session


class Direction(enum.Enum):
    ALICE_TO_BOB = "alice_to_bob"
    BOB_TO_ALICE = "bob_to_alice"


def encoding_angle(k: int, alpha_b: Angle | float) -> float:
    """Bob's rotation ``(-1)^k pi/4 + alpha_b``."""
    return (PI / 4 if k == 0 else -PI / 4) + float(alpha_b)


@dataclass
class EveState:
    """What Eve holds.  Per-round fields are cleared at each round start."""

    stored_pulse_E1: CoherentPulse | None = None
    fake_params: tuple[float, int, int] | None = None  # (theta', s', alpha_a' index)
    guess_alpha_b_idx: int | None = None
    decoded_bit_k_prime: int | None = None
    stored_ancilla_E2: PhotonBatch | None = None
    reflected_pulses: list[tuple[Direction, CoherentPulse]] = field(default_factory=list)
    # round index -> bit Eve ended up with for that round
    decoded: dict[int, int] = field(default_factory=dict)

    def new_round(self) -> None:
        self.stored_pulse_E1 = None
        self.fake_params = None
        self.guess_alpha_b_idx = None
        self.decoded_bit_k_prime = None
        self.stored_ancilla_E2 = None


def _commit_bit(outcome: MeasurementOutcome, rng: np.random.Generator) -> int:
    # Eve must commit: majority of clicks, uniform on ties and empty pulses
    if outcome.clicks_d0 > outcome.clicks_d1:
        return 0
    if outcome.clicks_d1 > outcome.clicks_d0:
        return 1
    return int(rng.random() < 0.5)


# --- photon-number splitting -------------------------------------------------


def pns_intercept(
    pulse: CoherentPulse, eta: float, direction: Direction, state: EveState
) -> CoherentPulse:
    """Beam-split ``pulse`` over a lossless line and keep the reflected arm."""
    transmitted, reflected = beamsplit(pulse, eta)
    state.reflected_pulses.append((direction, reflected))
    return transmitted


# --- impersonation -----------------------------------------------------------


def impersonate_forward(
    pulse: CoherentPulse,
    state: EveState,
    screening: ScreeningSet,
    mean_photons: float,
    rng: np.random.Generator,
) -> CoherentPulse:
    """Store Alice's pulse as E1 and emit a fake ``|theta' + delta_{0s'} alpha_a'>``."""
    state.stored_pulse_E1 = pulse
    u = rng.random(3)
    theta_p = float(u[0]) * PI
    s_p = int(u[1] >= 0.5)
    idx = min(int(u[2] * screening.n_angles), screening.n_angles - 1) + 1
    state.fake_params = (theta_p, s_p, idx)
    pol = Angle(theta_p + (float(screening[idx]) if s_p == 0 else 0.0))
    return CoherentPulse(pol, mean_photons, Wavelength.PROTOCOL)


def impersonate_decode(
    returning: CoherentPulse,
    state: EveState,
    screening: ScreeningSet,
    rng: np.random.Generator,
    mode: PhotonMode = PhotonMode.COHERENT,
) -> int:
    """Undo the fake preparation, guess alpha_b, and read k'."""
    if state.fake_params is None:
        raise RuntimeError("impersonate_decode called before impersonate_forward")
    theta_p, s_p, idx = state.fake_params
    undo = -theta_p - (float(screening[idx]) if s_p == 0 else 0.0)
    guess = min(int(rng.random() * screening.n_angles), screening.n_angles - 1) + 1
    state.guess_alpha_b_idx = guess
    probe = rotate(returning, undo - float(screening[guess]))
    outcome = measure_pbs(sample_photons(probe, rng, mode), rng)
    k_prime = _commit_bit(outcome, rng)
    state.decoded_bit_k_prime = k_prime
    return k_prime


def impersonate_reencode(state: EveState, screening: ScreeningSet) -> CoherentPulse:
    """Apply ``(-1)^k' pi/4 + alpha_b'`` to the stored original and release it."""
    if state.stored_pulse_E1 is None or state.decoded_bit_k_prime is None:
        raise RuntimeError("impersonate_reencode called before decode")
    phi = encoding_angle(state.decoded_bit_k_prime, screening[state.guess_alpha_b_idx])
    return rotate(state.stored_pulse_E1, phi)


# --- Trojan horse ------------------------------------------------------------


def trojan_attach(
    pulse: CoherentPulse, state: EveState, ancilla_photons: int = 1
) -> tuple[CoherentPulse, PhotonBatch]:
    """Ride a Foreign-wavelength ancilla at polarization 0 alongside ``pulse``."""
    ancilla = PhotonBatch(ancilla_photons, Angle(0.0), Wavelength.FOREIGN)
    return pulse, ancilla


def trojan_extract(
    state: EveState,
    alpha_b_idx: int,
    screening: ScreeningSet,
    rng: np.random.Generator,
) -> int | None:
    """Read k from the stored ancilla once alpha_b is public.

    Returns ``None`` when Bob's tap swallowed the whole ancilla.
    """
    e2 = state.stored_ancilla_E2
    if e2 is None or e2.count == 0:
        return None
    probe = rotate_batch(e2, -float(screening[alpha_b_idx]))
    return _commit_bit(measure_pbs(probe, rng), rng)


# --- attack descriptions and their interposers -------------------------------


class Eve:
    """Transparent interposer; subclasses override the hooks they need."""

    name = "honest"

    def __init__(self) -> None:
        self.state = EveState()

    def to_bob(
        self, pulse: CoherentPulse, session: Session
    ) -> tuple[CoherentPulse, PhotonBatch | None]:
        return session.channel(pulse), None

    def to_alice(
        self, pulse: CoherentPulse, ancilla: PhotonBatch | None, session: Session
    ) -> CoherentPulse:
        return session.channel(pulse)

    def after_round(self, record: RoundRecord, session: Session) -> None:
        pass


class _PNSEve(Eve):
    name = "pns"

    def __init__(self, eta: float) -> None:
        super().__init__()
        self.eta = eta

    def to_bob(self, pulse, session):
        return pns_intercept(pulse, self.eta, Direction.ALICE_TO_BOB, self.state), None

    def to_alice(self, pulse, ancilla, session):
        return pns_intercept(pulse, self.eta, Direction.BOB_TO_ALICE, self.state)


class _ImpersonationEve(Eve):
    name = "impersonation"

    def to_bob(self, pulse, session):
        self.state.new_round()
        cfg = session.config
        fake = impersonate_forward(pulse, self.state, session.screening, cfg.mean_photons, session.rng)
        return session.channel(fake), None

    def to_alice(self, pulse, ancilla, session):
        returning = session.channel(pulse)
        impersonate_decode(returning, self.state, session.screening, session.rng, session.photon_mode)
        return impersonate_reencode(self.state, session.screening)

    def after_round(self, record, session):
        self.state.decoded[record.index] = self.state.decoded_bit_k_prime


class _TrojanEve(Eve):
    name = "trojan"

    def __init__(self, ancilla_photons: int) -> None:
        super().__init__()
        self.ancilla_photons = ancilla_photons

    def to_bob(self, pulse, session):
        self.state.new_round()
        legit, ancilla = trojan_attach(pulse, self.state, self.ancilla_photons)
        return session.channel(legit), ancilla

    def to_alice(self, pulse, ancilla, session):
        # perfect separation of the Foreign light is granted to Eve
        self.state.stored_ancilla_E2 = ancilla
        return session.channel(pulse)

    def after_round(self, record, session):
        bit = trojan_extract(self.state, record.alpha_b_idx, session.screening, session.rng)
        if bit is not None:
            self.state.decoded[record.index] = bit


@dataclass(frozen=True)
class Honest:
    name = "honest"

    def make_eve(self) -> Eve:
        return Eve()


@dataclass(frozen=True)
class PNS:
    eta: float = 0.5
    name = "pns"

    def __post_init__(self) -> None:
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"PNS eta={self.eta} must lie strictly inside (0, 1)")

    def make_eve(self) -> Eve:
        return _PNSEve(self.eta)


@dataclass(frozen=True)
class Impersonation:
    name = "impersonation"

    def make_eve(self) -> Eve:
        return _ImpersonationEve()


@dataclass(frozen=True)
class TrojanHorse:
    ancilla_photons: int = 1
    name = "trojan"

    def __post_init__(self) -> None:
        if self.ancilla_photons < 1:
            raise ValueError(f"ancilla_photons={self.ancilla_photons} must be >= 1")

    def make_eve(self) -> Eve:
        return _TrojanEve(self.ancilla_photons)


AttackModel = Honest | PNS | Impersonation | TrojanHorse


def attack_from_name(name: str, eta: float = 0.5, ancilla_photons: int = 1) -> AttackModel:
    key = name.strip().lower()
    if key in ("honest", "none"):
        return Honest()
    if key == "pns":
        return PNS(eta)
    if key == "impersonation":
        return Impersonation()
    if key in ("trojan", "trojanhorse", "trojan_horse"):
        return TrojanHorse(ancilla_photons)
    raise ValueError(f"unknown attack {name!r}")


# --- closed forms ------------------------------------------------------------


def impersonation_branches(n_angles: int) -> list[tuple[float, float]]:
    """Enumerate Eve's screening-angle guesses for one sifted single-photon round.

    Returns ``(probability, error_probability)`` per (alpha_b, guess) pair.
    With residual offset d = guess - alpha_b, Eve's read agrees with k with
    ``cos^2 d`` and Alice's read agrees with k' with ``cos^2 d``, so an error
    needs exactly one of the two flips.
    """
    screening = ScreeningSet(n_angles)
    out = []
    w = 1.0 / (n_angles * n_angles)
    for b, g in itertools.product(range(1, n_angles + 1), repeat=2):
        d = float(screening[g]) - float(screening[b])
        keep = malus_d0_probability(d, 0.0)
        flip = 1.0 - keep
        out.append((w, keep * flip + flip * keep))
    return out


def impersonation_qber(n_angles: int) -> float:
    """Sifted QBER Alice-Bob under impersonation, ideal single-photon mode."""
    return sum(p * e for p, e in impersonation_branches(n_angles))


def impersonation_eve_agreement(n_angles: int) -> float:
    """Probability that Eve's k' equals Bob's k on a round, ideal mode."""
    screening = ScreeningSet(n_angles)
    total = 0.0
    for b, g in itertools.product(range(1, n_angles + 1), repeat=2):
        total += malus_d0_probability(float(screening[g]) - float(screening[b]), 0.0)
    return total / (n_angles * n_angles)


def hash_pass_probability(qber: float, key_bits: int) -> float:
    """Chance that independent per-bit errors at rate ``qber`` leave the key intact."""
    return (1.0 - qber) ** key_bits


def trojan_violation_probability(amode_prob: float, n_angles: int, t: float) -> float:
    """Per-round probability that a single-photon Trojan ancilla trips the A-mode check.

    The ancilla is only seen by the check on A-mode rounds (``c``) whose
    screening angles match (``1/N``) with s = 0 (``1/2``) and in which Bob's
    tap catches it (``1 - t``).  Its click then lands on the wrong detector
    with probability ``sin^2 alpha_b`` for theta* = 0 and ``cos^2 alpha_b``
    for theta* = pi/2, i.e. 1/2 on average whatever alpha_b is.  A wrong
    click yields either a wrong bit (no legitimate photon in the tap) or a
    double click (legitimate photon present); both count as a violation.
    """
    return amode_prob * (1.0 / n_angles) * 0.5 * (1.0 - t) * 0.5


def trojan_violation_probability_enumerated(amode_prob: float, n_angles: int, t: float) -> float:
    """Same quantity by explicit enumeration over (theta*, k, alpha_b, s, match)."""
    screening = ScreeningSet(n_angles)
    total = 0.0
    cases = 0
    for theta_star, k, b in itertools.product((0.0, PI / 2), (0, 1), range(1, n_angles + 1)):
        expected = k ^ int(round(2 * theta_star / PI))
        p0 = malus_d0_probability(encoding_angle(k, screening[b]), PI / 4)
        p_wrong = p0 if expected == 1 else 1.0 - p0
        total += p_wrong
        cases += 1
    mean_wrong = total / cases
    return amode_prob * (1.0 / n_angles) * 0.5 * (1.0 - t) * mean_wrong


def summarize(eve: Eve, records: list[RoundRecord]) -> dict[str, float | int | str]:
    """Attack statistics appended to the transcript summary."""
    state = eve.state
    summary: dict[str, float | int | str] = {"attack": eve.name}
    if eve.name in ("impersonation", "trojan"):
        sifted = [r for r in records if r.sifted]
        read = sum(1 for r in sifted if state.decoded.get(r.index) == r.key_bit)
        summary["eve_bits_decoded"] = len(state.decoded)
        summary["eve_sifted_bits_decoded"] = sum(1 for r in sifted if r.index in state.decoded)
        summary["eve_agreement_with_bob"] = read / len(sifted) if sifted else 0.0
    if eve.name == "pns":
        ab = [p.mean_photons for d, p in state.reflected_pulses if d is Direction.ALICE_TO_BOB]
        ba = [p.mean_photons for d, p in state.reflected_pulses if d is Direction.BOB_TO_ALICE]
        summary["eve_stored_mean_ab"] = float(np.mean(ab)) if ab else 0.0
        summary["eve_stored_mean_ba"] = float(np.mean(ba)) if ba else 0.0
    summary["eve_exposed_rounds"] = sum(1 for r in records if r.integrity_ok is False)
    return summary
