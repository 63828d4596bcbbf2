"""Learning the threshold when the adversary's utility is hidden.

The leader only sees accept/reject bits. With a loose accuracy target the
sample budget from the confidence bound is small and both learners succeed;
with the target set by the tiny gap between the two best thresholds the
budget is out of reach and the estimates are too noisy to separate them.
"""

import numpy as np

from gamecoding import LearnerConfig, LearningInstance, UtilityPair, evaluate_learner
from gamecoding.learn import CurveFamily, analytic_utilities, estimate_lip_alpha

pair = UtilityPair("-MSE + 25*PA", "log(MSE) + 0.75*log(PA)")
lip = estimate_lip_alpha(CurveFamily(), pair.q_dc, np.linspace(2, 8, 25))
print(f"estimated slope bound of U_DC in alpha: {lip:.3f}")

# %% loose target: the bound asks for about 8e4 rounds per candidate
loose = LearnerConfig(2, 8, delta=0.1, lam=1.0, big_l=1.0, lip_alpha=lip, n_override=24)
print(f"lambda=1: k from the bound = {loose.k}")
for algo in ("algorithm3", "algorithm4"):
    ev = evaluate_learner(LearningInstance(pair, loose), repetitions=10, algorithm=algo)
    print(f"  {algo}: failures {ev.failures}/10 (allowed {ev.allowed_failures})")

# %% tight target: half the gap between the two best thresholds
u = analytic_utilities(LearningInstance(pair, loose))
top = sorted(u.values(), reverse=True)
lam = (top[0] - top[1]) / 2
tight = LearnerConfig(2, 8, delta=0.1, lam=lam, big_l=1.0, lip_alpha=lip, n_override=24, k_override=4000)
print(f"lambda={lam:.2e}: bound asks for k = {tight.k_bound:.2e}, we use 4000")
ev = evaluate_learner(LearningInstance(pair, tight), repetitions=20, utilities=u, algorithm="algorithm4")
print(f"  algorithm4: failures {ev.failures}/20, early eliminations per run {ev.early_eliminations}")
