"""Choosing the acceptance threshold against a rational adversary.

Three utility pairs on the grid eta in {2, 2.25, ..., 8}. The first has an
interior optimum, the second is flat in eta and the third collapses to the
no-acceptance corner.
"""

import numpy as np

from gamecoding import UtilityPair, stackelberg_solve

grid = 2 + 0.25 * np.arange(25)
pairs = {
    "cooperative": UtilityPair("-MSE + 25*PA", "log(MSE) + 0.75*log(PA)"),
    "flat": UtilityPair("PA/sqrt(MSE)", "log(MSE) + 0.25*log(PA)"),
    "misaligned": UtilityPair("-MSE + PA", "log(MSE) + 0.25*log(PA + 0.3)"),
}

# %%
solutions = {name: stackelberg_solve(grid, pair) for name, pair in pairs.items()}
for name, sol in solutions.items():
    p = sol.point
    print(f"{name:12s} eta*={p.eta_star:<5g} PA={p.alpha:.4f} MSE={p.mse:.4f} "
          f"boundary={p.boundary} tied thresholds={len(sol.eta_ties)}")

# %% the cooperative pair: the leader trades a looser test for more accepted work
print(" eta   alpha   MSE      U_DC")
for r in solutions["cooperative"].per_eta[::4]:
    print(f"{r.eta:5.2f} {r.alpha:.4f} {r.mse:8.4f} {r.dc_utility:8.4f}")

# %% the flat pair: PA/sqrt(MSE) is the same at every threshold, so the
# smallest one wins the tie. The record at 3.75 is one of many optima.
u = np.array([r.dc_utility for r in solutions["flat"].per_eta])
print("U_DC range across eta:", u.min(), u.max())
rec = next(r for r in solutions["flat"].per_eta if r.eta == 3.75)
print(f"eta=3.75: PA={rec.alpha:.4f} MSE={rec.mse:.4f} U_DC={rec.dc_utility:.6f}")

# %% the adversary's best response rescales with eta: PA / (eta + 2) is constant
print([round(r.alpha / (r.eta + 2), 6) for r in solutions["flat"].per_eta[::6]])
