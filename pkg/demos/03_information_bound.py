"""
Eve's information bound and the critical amplitude
==================================================

Tabulate I_E(mu) for a few beam-splitter ratios, locate mu*, and convert
the chosen amplitude to a raw key rate.
"""

#%%
import numpy as np

from twoway_qkd.analysis import (
    RateParams,
    critical_info,
    critical_mu,
    fidelity_bound,
    raw_key_rate,
    sweep_curve,
)

print("I(n) for n = 0..5:", np.round([fidelity_bound(n) for n in range(6)], 6))
print(f"I_E at unit return mean: {critical_info():.6f}")

#%%
# Eve keeps (1-eta) mu going out and (1-eta) eta t mu coming back; the
# return leg is always the weaker one, and mu* sets its mean to 1.
t = 0.7
points = sweep_curve(np.arange(0.0, 20.5, 2.5), eta_list=(0.2, 0.5, 0.8), t=t)
for eta in (0.2, 0.5, 0.8):
    row = [p for p in points if p.eta == eta]
    text = "  ".join(f"{p.mu:5.2f}:{p.i_e:.3f}" + ("*" if p.is_critical else " ") for p in row)
    print(f"eta={eta}: {text}")

#%%
etas = np.linspace(0.05, 0.95, 19)
mus = np.array([critical_mu(e, t) for e in etas])
print(f"mu* is smallest at eta={etas[mus.argmin()]:.2f}: {mus.min():.3f}")

#%%
# Raw key rate at mu* for a 1 MHz source over a 0.5 transmission link.
rate = RateParams.for_protocol(amode_prob=0.1, n_angles=3, f_rep=1e6, t_link=0.5, eta_det=0.1)
mu_star = critical_mu(0.5, t)
print(f"mu*={mu_star:.3f} -> raw key rate {raw_key_rate(rate, mu_star):.0f} bit/s")
