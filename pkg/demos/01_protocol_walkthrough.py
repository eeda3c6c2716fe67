"""
One round, then one session
===========================

Follow a single pulse through Alice's preparation, Bob's encoding and
Alice's compensated measurement, then run a full honest session.
"""

#%%
import numpy as np

from twoway_qkd.polarization import Angle, PhotonMode, ScreeningSet
from twoway_qkd.protocol import (
    SessionConfig,
    alice_compensate_measure,
    alice_prepare,
    bob_encode,
    run_session,
)

cfg = SessionConfig(n_angles=3, photon_mode=PhotonMode.IDEAL_SINGLE_PHOTON)
screening = ScreeningSet(cfg.n_angles)
print("screening angles (rad):", [round(a.value, 4) for a in screening.angles])

#%%
# Alice hides the pulse behind a random theta; alpha_a rides along when s = 0.
rng = np.random.default_rng(1)
theta, a, s, k = Angle(rng.uniform(0, np.pi)), 1, 0, 1
b = screening.partner(a)
pulse = alice_prepare(theta, a, s, cfg)
print(f"theta={theta.value:.4f}  alpha_a={screening[a].value:.4f}  sent at {pulse.polarization.value:.4f}")

#%%
# Bob adds alpha_b + k pi/2 without knowing theta.  With a matched pair the
# screening angles sum to pi and drop out.
back = bob_encode(pulse, k, b, cfg, rng).onward
outcome = alice_compensate_measure(back, theta, s, a, cfg, rng)
print(f"Bob encoded k={k} with alpha_b index {b}; Alice reads {outcome.label()}")

#%%
# A full session with coherent pulses and a lossy link.
cfg = SessionConfig(channel_transmission=0.8, detector_efficiency=0.6, seed=2026)
tr = run_session(cfg)
for key, value in tr.summary().items():
    print(f"{key:>11}: {value}")
