"""The worst-case MSE an adversary can force at each acceptance rate.

For one honest node with uniform noise on [-1, 1] we sample the spike curve
h(q), take its concave envelope and print c_eta(alpha) for a few thresholds.
Run from the repository root: ``python3 gallery/01_tradeoff_curves.py``.
"""

import numpy as np

from gamecoding import KernelContext, c_curve, spike_mse_curve

etas = [2.0, 2.5, 4.0, 6.75, 8.0]
alpha = np.array([0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0])

# %% c_eta(alpha) grows with the threshold: a looser test lets bigger errors through
curves = {eta: c_curve(KernelContext(1, 1.0, eta)) for eta in etas}
print("alpha   " + "".join(f"eta={e:<8g}" for e in etas))
for a in alpha:
    print(f"{a:<8.2f}" + "".join(f"{curves[e].c(a):<12.4f}" for e in etas))

# %% small thresholds need a chord: h is convex near full acceptance
for eta in etas:
    segs = curves[eta].samples.segments
    text = ", ".join(f"[{lo:.4f}, {hi:.4f}]" for lo, hi in segs) or "none"
    print(f"eta={eta:g}: chord segments {text}; c(0+) = {curves[eta].c_limit:.4f}")

# %% on the chord the envelope sits strictly above a single spike pair
ctx = KernelContext(1, 1.0, 2.0)
q = np.linspace(0.8, 1.0, 5)
print(np.column_stack([q, spike_mse_curve(ctx, q), curves[2.0].envelope(q)]))

# %% more honest nodes shrink the chord start towards the middle
for ell in (1, 2, 3, 5, 10):
    segs = c_curve(KernelContext(ell, 1.0, 2.0)).samples.segments
    print(f"ell={ell:2d}: chord from q={segs[0][0]:.4f} to {segs[0][1]:g}")
