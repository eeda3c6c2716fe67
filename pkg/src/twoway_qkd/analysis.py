"""Photon-number-splitting information bounds and raw key rate.

Eve's best estimate of an equatorial polarization from ``n`` copies has
mean fidelity

    I(n) = 1/2 + 2^-(n+1) * sum_{l=0}^{n-1} sqrt(C(n, l) C(n, l+1))

and with a Poisson number of copies (mean ``lam``) her expected fidelity is
``sum_n Pois(n; lam) I(n)``.  On the forward leg she holds a coherent pulse
of mean ``(1 - eta) mu``; on the return leg, after Bob keeps ``1 - t``, a
pulse of mean ``(1 - eta) eta t mu``.  Her bound is the smaller of the two.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Below this photon number the binomial products are summed exactly.
_EXACT_LIMIT = 60

DEFAULT_TOL = 1e-10
DEFAULT_ETAS = tuple(round(0.1 * i, 1) for i in range(1, 10))


@functools.lru_cache(maxsize=None)
def fidelity_bound(n: int) -> float:
    """Optimal mean estimation fidelity I(n) from ``n`` photons."""
    n = int(n)
    if n < 0:
        raise ValueError(f"photon number n={n} must be >= 0")
    if n == 0:
        return 0.5
    if n <= _EXACT_LIMIT:
        acc = math.fsum(
            math.sqrt(math.comb(n, l) * math.comb(n, l + 1)) for l in range(n)
        )
        return 0.5 + acc / 2.0 ** (n + 1)
    l = np.arange(n, dtype=float)
    log_c0 = math.lgamma(n + 1) - _lgamma(l + 1) - _lgamma(n - l + 1)
    log_c1 = math.lgamma(n + 1) - _lgamma(l + 2) - _lgamma(n - l)
    terms = np.exp(0.5 * (log_c0 + log_c1) - (n + 1) * math.log(2.0))
    return 0.5 + math.fsum(terms)


_lgamma = np.vectorize(math.lgamma, otypes=[float])


def poisson_tail_bound(lam: float, n_max: int) -> float:
    """Chernoff bound on ``P(N > n_max)`` for ``N ~ Poisson(lam)``."""
    x = n_max + 1
    if lam == 0.0:
        return 0.0
    if x <= lam:
        return 1.0
    return math.exp(-lam + x * (1.0 + math.log(lam / x)))


def truncation_point(lam: float, tol: float) -> tuple[int, float]:
    """Smallest ``n_max`` whose Chernoff tail is below ``tol``, capped.

    Returns ``(n_max, tail_bound)``.  The cap is
    ``ceil(lam + 20 sqrt(lam) + 50)``.
    """
    if tol <= 0.0:
        raise ValueError(f"tol={tol} must be > 0")
    if lam == 0.0:
        return 0, 0.0
    cap = math.ceil(lam + 20.0 * math.sqrt(lam) + 50.0)
    n = max(0, math.floor(lam))
    while n < cap:
        bound = poisson_tail_bound(lam, n)
        if bound < tol:
            return n, bound
        n += 1
    return cap, poisson_tail_bound(lam, cap)


def _weighted_sum(lam: float, n_max: int) -> float:
    if lam == 0.0:
        return fidelity_bound(0)
    log_lam = math.log(lam)
    return math.fsum(
        math.exp(-lam + n * log_lam - math.lgamma(n + 1)) * fidelity_bound(n)
        for n in range(n_max + 1)
    )


@dataclass(frozen=True)
class SeriesValue:
    value: float
    n_truncation: int
    truncation_error_bound: float


def poisson_weighted_series(lam: float, tol: float = DEFAULT_TOL) -> SeriesValue:
    if lam < 0.0:
        raise ValueError(f"mean photon number {lam} must be >= 0")
    n_max, tail = truncation_point(lam, tol)
    return SeriesValue(_weighted_sum(lam, n_max), n_max, tail)


def poisson_weighted_info(lam: float, tol: float = DEFAULT_TOL) -> float:
    """Expected estimation fidelity with ``Poisson(lam)`` copies.

    The series is cut where the Poisson tail drops below ``tol``; since
    ``I(n) < 1`` the dropped part is smaller than that tail.
    """
    return poisson_weighted_series(lam, tol).value


@dataclass(frozen=True)
class ChannelParams:
    mu: float
    eta: float
    t: float

    def __post_init__(self) -> None:
        if self.mu < 0.0:
            raise ValueError(f"mu={self.mu} must be >= 0")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta={self.eta} must lie in (0, 1)")
        if not 0.0 < self.t <= 1.0:
            raise ValueError(f"t={self.t} must lie in (0, 1]")

    @property
    def forward_mean(self) -> float:
        """Mean photon number Eve keeps on the Alice -> Bob leg."""
        return (1.0 - self.eta) * self.mu

    @property
    def return_mean(self) -> float:
        """Mean photon number Eve keeps on the Bob -> Alice leg."""
        return (1.0 - self.eta) * self.eta * self.t * self.mu


@dataclass(frozen=True)
class InfoBoundResult:
    i_ab: float
    i_ba: float
    i_e: float
    n_truncation: int
    truncation_error_bound: float


def eve_info(params: ChannelParams, tol: float = DEFAULT_TOL) -> InfoBoundResult:
    ab = poisson_weighted_series(params.forward_mean, tol)
    ba = poisson_weighted_series(params.return_mean, tol)
    return InfoBoundResult(
        i_ab=ab.value,
        i_ba=ba.value,
        i_e=min(ab.value, ba.value),
        n_truncation=max(ab.n_truncation, ba.n_truncation),
        truncation_error_bound=max(ab.truncation_error_bound, ba.truncation_error_bound),
    )


def critical_mu(eta: float, t: float) -> float:
    """Initial mean photon number that returns one photon on average to Alice."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta={eta} must lie strictly inside (0, 1)")
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t={t} must lie in (0, 1]")
    return 1.0 / ((1.0 - eta) * eta * t)


def critical_info(tol: float = 1e-8) -> float:
    """Eve's bound at the critical amplitude, i.e. at unit return mean."""
    return poisson_weighted_info(1.0, tol)


@dataclass(frozen=True)
class RateParams:
    q: float
    f_rep: float
    t_link: float
    eta_det: float

    def __post_init__(self) -> None:
        for name in ("q", "t_link", "eta_det"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name}={v} must lie in (0, 1]")
        if self.f_rep <= 0.0:
            raise ValueError(f"f_rep={self.f_rep} must be > 0")

    @classmethod
    def for_protocol(cls, amode_prob: float, n_angles: int, f_rep: float, t_link: float, eta_det: float) -> RateParams:
        return cls((1.0 - amode_prob) / n_angles, f_rep, t_link, eta_det)


def raw_key_rate(rate: RateParams, mu: float) -> float:
    """Raw key rate ``q * mu * f_rep * t_link * eta_det`` in bits per second."""
    if mu < 0.0:
        raise ValueError(f"mu={mu} must be >= 0")
    return rate.q * mu * rate.f_rep * rate.t_link * rate.eta_det


@dataclass(frozen=True)
class CurvePoint:
    mu: float
    eta: float
    t: float
    i_e: float
    mu_star: float | None = None
    is_critical: bool = False


def sweep_curve(
    mu_range: Sequence[float] | np.ndarray,
    eta_list: Iterable[float] = DEFAULT_ETAS,
    t: float = 0.7,
    tol: float = DEFAULT_TOL,
) -> list[CurvePoint]:
    """I_E versus mu for each eta at fixed Bob tap transmission ``t``.

    Each eta gets its own curve, ordered by eta then mu.  The critical point
    ``mu*`` is inserted into a curve when it falls inside the mu range and
    flagged with ``is_critical``.
    """
    mus = [float(m) for m in mu_range]
    if not mus:
        raise ValueError("mu_range must not be empty")
    if any(b <= a for a, b in zip(mus, mus[1:])):
        raise ValueError("mu_range must be strictly ascending")
    points: list[CurvePoint] = []
    for eta in eta_list:
        eta = float(eta)
        mu_star = critical_mu(eta, t)
        grid = [(m, False) for m in mus]
        if mus[0] <= mu_star <= mus[-1]:
            grid = [(m, False) for m in mus if m != mu_star] + [(mu_star, True)]
            grid.sort(key=lambda p: p[0])
        for mu, crit in grid:
            res = eve_info(ChannelParams(mu, eta, t), tol)
            points.append(CurvePoint(mu, eta, t, res.i_e, mu_star, crit))
    return points


def default_mu_grid(mu_max: float = 20.0, step: float = 0.1) -> np.ndarray:
    n = int(round(mu_max / step))
    return np.round(np.arange(n + 1) * step, 10)
