"""Two-way QKD with randomly polarized coherent pulses: simulator and bounds.

Modules: ``polarization`` (angles, pulses, detectors), ``protocol`` (rounds
and sessions), ``adversary`` (PNS, impersonation, Trojan horse),
``analysis`` (Eve's information bound, critical amplitude, key rate),
``files``/``config``/``cli`` (I/O and command line).
"""

from .adversary import PNS, Honest, Impersonation, TrojanHorse, attack_from_name
from .analysis import (
    ChannelParams,
    RateParams,
    critical_info,
    critical_mu,
    eve_info,
    fidelity_bound,
    poisson_weighted_info,
    raw_key_rate,
    sweep_curve,
)
from .polarization import Angle, CoherentPulse, PhotonMode, ScreeningSet
from .protocol import Mode, SessionConfig, Transcript, Verdict, run_session

__version__ = "0.1.0"

__all__ = [
    "Angle",
    "ChannelParams",
    "CoherentPulse",
    "Honest",
    "Impersonation",
    "Mode",
    "PNS",
    "PhotonMode",
    "RateParams",
    "ScreeningSet",
    "SessionConfig",
    "Transcript",
    "TrojanHorse",
    "Verdict",
    "attack_from_name",
    "critical_info",
    "critical_mu",
    "eve_info",
    "fidelity_bound",
    "poisson_weighted_info",
    "raw_key_rate",
    "run_session",
    "sweep_curve",
]
