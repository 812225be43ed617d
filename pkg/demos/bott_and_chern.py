"""The Bott projection and the Chern cocycle on the truncated spectral triple."""

from nctorus.cocycles import TAU, chern_normalization, combined_pairing, double_contraction, k0_pairing
from nctorus.projections import bott_projection, verify_projection

# %% A rank-one projection over the commutative torus from the two-band model
p = bott_projection(8)
print(verify_projection(p, 0.0, 1e-3))

# %% Its index pairing with the doubly contracted trace is the Chern number
r = k0_pairing(double_contraction(TAU), p, 0.0, tol=1e-3)
print("contracted trace pairing:", r.normalized, "nearest integer", r.nearest_integer)

# %% The operator-side Chern cocycle, calibrated once on this class
print("calibration constant at N=32:", chern_normalization(32))

# %% The trace plus theta times the contracted trace gives rank + theta * c1 = 1 - theta
for th in (0.25, 0.7):
    r = combined_pairing(p, th, tol=1e-3)
    print(f"theta={th}: combined pairing {r.normalized.real:+.6f}, expected {1 - th:+.6f}")
