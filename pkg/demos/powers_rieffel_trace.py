"""Powers-Rieffel projections: idempotency, trace and Fredholm index.

Run with ``python3 demos/powers_rieffel_trace.py``.
"""

import numpy as np

from nctorus.cocycles import TAU, fredholm_index_oracle, k0_pairing
from nctorus.projections import BumpProfile, defect_curve, powers_rieffel, verify_projection

# %% The profile: g rises, plateaus, falls; f lives on the rising edge only
theta = 1 / 3
t, g, f = BumpProfile(theta).sample()
print("max |g(t) + g(t + theta) - 1| on the rising edge:",
      np.abs(g[t < theta] + np.interp(t[t < theta] + theta, t, g) - 1)[t[t < theta] < BumpProfile(theta).eps].max())

# %% Truncating the Fourier series costs idempotency; the defect falls with M
for M, d in defect_curve(theta, (8, 16, 32, 64)).items():
    print(f"M={M:3d}  ||p*p - p|| = {d:.2e}")

# %% The trace of p is theta, for several values
for th in (0.25, theta, 0.7):
    p = powers_rieffel(th)
    print(f"theta={th:.4f}", verify_projection(p, th, 1e-6)["pass"], "tau(p) =", k0_pairing(TAU, p, th).value.real)

# %% The index of P F+ P does not see theta
for th in (0.25, 0.7):
    rep = fredholm_index_oracle(powers_rieffel(th), th, N=16)
    print(f"theta={th}: index {rep.index}, reliable={rep.reliable}")
