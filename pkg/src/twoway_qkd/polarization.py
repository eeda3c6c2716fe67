"""Polarization states on the equator of the Poincare sphere.

Linear polarizations are angles modulo pi.  A coherent pulse is carried
through the optical path as a mean photon number plus an angle; photon
numbers are only realized (Poisson sampled) where a detector needs them,
which is exact for coherent light because Poisson thinning stays Poisson.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

PI = math.pi

#: Basis of every polarizing beam splitter in the protocol; D0 fires for pi/4.
MEASUREMENT_BASIS_VALUE = PI / 4


def _reduce(x: float) -> float:
    r = math.fmod(x, PI)
    if r < 0.0:
        r += PI
    # fmod of a tiny negative number can land exactly on pi after the shift
    if r >= PI:
        r = 0.0
    return r


@dataclass(frozen=True)
class Angle:
    """Polarization angle in radians, always reduced to [0, pi)."""

    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", _reduce(float(self.value)))

    def __add__(self, other: Angle | float) -> Angle:
        return Angle(self.value + float(other))

    __radd__ = __add__

    def __sub__(self, other: Angle | float) -> Angle:
        return Angle(self.value - float(other))

    def __rsub__(self, other: float) -> Angle:
        return Angle(float(other) - self.value)

    def __neg__(self) -> Angle:
        return Angle(-self.value)

    def __float__(self) -> float:
        return self.value

    def distance(self, other: Angle | float) -> float:
        """Shortest separation on the mod-pi circle."""
        d = _reduce(self.value - float(other))
        return min(d, PI - d)


MEASUREMENT_BASIS = Angle(MEASUREMENT_BASIS_VALUE)


@functools.lru_cache(maxsize=4096)
def screening_angle(i: int, n_angles: int) -> Angle:
    """Return the i-th screening angle ``i * pi / (n_angles + 1)``, 1-based."""
    if n_angles < 2:
        raise ValueError(f"n_angles={n_angles} must be >= 2")
    if not 1 <= i <= n_angles:
        raise ValueError(f"screening index {i} outside 1..{n_angles}")
    return Angle(i * PI / (n_angles + 1))


@dataclass(frozen=True)
class ScreeningSet:
    """The public set of N screening angles announced at session start."""

    n_angles: int

    def __post_init__(self) -> None:
        if self.n_angles < 2:
            raise ValueError(f"n_angles={self.n_angles} must be >= 2")

    @property
    def angles(self) -> tuple[Angle, ...]:
        return tuple(screening_angle(i, self.n_angles) for i in range(1, self.n_angles + 1))

    def __getitem__(self, i: int) -> Angle:
        return screening_angle(i, self.n_angles)

    def __len__(self) -> int:
        return self.n_angles

    def matches(self, idx_a: int, idx_b: int) -> bool:
        # alpha_a + alpha_b == pi  <=>  idx_a + idx_b == N + 1; no float comparison
        return idx_a + idx_b == self.n_angles + 1

    def partner(self, idx: int) -> int:
        return self.n_angles + 1 - idx


class Wavelength(enum.Enum):
    PROTOCOL = "protocol"
    FOREIGN = "foreign"


class PhotonMode(enum.Enum):
    """How pulses are realized at detectors.

    ``COHERENT`` samples Poisson photon numbers and applies every loss.
    ``IDEAL_SINGLE_PHOTON`` forces one photon per non-vacuum pulse with no
    channel, tap or detector loss; Bob's tap then acts as a non-demolition
    monitor that reads one photon without removing it.
    """

    COHERENT = "coherent"
    IDEAL_SINGLE_PHOTON = "ideal"


@dataclass(frozen=True)
class CoherentPulse:
    polarization: Angle
    mean_photons: float
    wavelength: Wavelength = Wavelength.PROTOCOL

    def __post_init__(self) -> None:
        if not self.mean_photons >= 0.0:
            raise ValueError(f"mean_photons={self.mean_photons} must be >= 0")

    @property
    def is_vacuum(self) -> bool:
        return self.mean_photons == 0.0


@dataclass(frozen=True)
class PhotonBatch:
    count: int
    polarization: Angle
    wavelength: Wavelength = Wavelength.PROTOCOL

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError(f"count={self.count} must be >= 0")


class OutcomeKind(enum.Enum):
    BIT = "bit"
    EMPTY = "empty"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class MeasurementOutcome:
    """Click record of a two-detector PBS readout.

    Exactly one firing detector gives a bit (D0 -> 0, D1 -> 1); no clicks
    is ``EMPTY``; clicks on both is ``AMBIGUOUS``.
    """

    clicks_d0: int
    clicks_d1: int

    @property
    def kind(self) -> OutcomeKind:
        if self.clicks_d0 and self.clicks_d1:
            return OutcomeKind.AMBIGUOUS
        if self.clicks_d0 or self.clicks_d1:
            return OutcomeKind.BIT
        return OutcomeKind.EMPTY

    @property
    def bit(self) -> int | None:
        if self.kind is not OutcomeKind.BIT:
            return None
        return 0 if self.clicks_d0 else 1

    @property
    def is_bit(self) -> bool:
        return self.kind is OutcomeKind.BIT

    def __add__(self, other: MeasurementOutcome) -> MeasurementOutcome:
        return MeasurementOutcome(self.clicks_d0 + other.clicks_d0, self.clicks_d1 + other.clicks_d1)

    def label(self) -> str:
        kind = self.kind
        if kind is OutcomeKind.BIT:
            return str(self.bit)
        return "E" if kind is OutcomeKind.EMPTY else "A"


EMPTY_OUTCOME = MeasurementOutcome(0, 0)


def rotate(pulse: CoherentPulse, phi: float) -> CoherentPulse:
    return CoherentPulse(pulse.polarization + phi, pulse.mean_photons, pulse.wavelength)


def rotate_batch(batch: PhotonBatch, phi: float) -> PhotonBatch:
    return PhotonBatch(batch.count, batch.polarization + phi, batch.wavelength)


def beamsplit(pulse: CoherentPulse, eta: float) -> tuple[CoherentPulse, CoherentPulse]:
    """Split a coherent pulse; returns (transmitted, reflected).

    The transmitted arm carries ``eta * mu`` and the reflected arm the rest,
    so the two means always add back to the input.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta={eta} must lie in [0, 1]")
    transmitted = pulse.mean_photons * eta
    reflected = pulse.mean_photons - transmitted
    return (
        CoherentPulse(pulse.polarization, transmitted, pulse.wavelength),
        CoherentPulse(pulse.polarization, max(reflected, 0.0), pulse.wavelength),
    )


def attenuate(pulse: CoherentPulse, transmission: float) -> CoherentPulse:
    """Lossy element: keep only the transmitted arm of a beam split."""
    return beamsplit(pulse, transmission)[0]


def sample_photons(
    pulse: CoherentPulse,
    rng: np.random.Generator,
    mode: PhotonMode = PhotonMode.COHERENT,
) -> PhotonBatch:
    """Realize a photon number for ``pulse``.

    Coherent mode draws from ``Poisson(mean_photons)`` with the generator's
    own sampler; ideal mode returns exactly one photon for any non-vacuum
    pulse without touching ``rng``.
    """
    if pulse.mean_photons == 0.0:
        n = 0
    elif mode is PhotonMode.IDEAL_SINGLE_PHOTON:
        n = 1
    else:
        n = int(rng.poisson(pulse.mean_photons))
    return PhotonBatch(n, pulse.polarization, pulse.wavelength)


def malus_d0_probability(polarization: Angle | float, basis: Angle | float) -> float:
    c = math.cos(float(polarization) - float(basis))
    return min(1.0, max(0.0, c * c))


def measure_pbs(
    batch: PhotonBatch,
    rng: np.random.Generator,
    basis: Angle = MEASUREMENT_BASIS,
) -> MeasurementOutcome:
    """Send every photon through a PBS at ``basis``.

    Each photon independently reaches D0 with probability
    ``cos^2(polarization - basis)`` and D1 otherwise.
    """
    if batch.count == 0:
        return EMPTY_OUTCOME
    p0 = malus_d0_probability(batch.polarization, basis)
    if p0 == 1.0:
        d0 = batch.count
    elif p0 == 0.0:
        d0 = 0
    else:
        d0 = int(rng.binomial(batch.count, p0))
    return MeasurementOutcome(d0, batch.count - d0)


def tap(
    batch: PhotonBatch, fraction: float, rng: np.random.Generator
) -> tuple[PhotonBatch, PhotonBatch]:
    """Divert each photon with probability ``fraction``.

    Returns ``(into_detector, onward)``; the two counts sum to the input.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction={fraction} must lie in [0, 1]")
    if batch.count == 0 or fraction == 0.0:
        diverted = 0
    elif fraction == 1.0:
        diverted = batch.count
    else:
        diverted = int(rng.binomial(batch.count, fraction))
    return (
        PhotonBatch(diverted, batch.polarization, batch.wavelength),
        PhotonBatch(batch.count - diverted, batch.polarization, batch.wavelength),
    )
