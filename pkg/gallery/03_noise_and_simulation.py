"""From the equilibrium point to an actual noise distribution, and a
Monte-Carlo check that the distribution does what the formulas say."""

from gamecoding import (
    GameConfig,
    KernelContext,
    analytic_check,
    c_curve,
    check_round_trip,
    monte_carlo,
    optimal_noise,
    sybil_compare,
)

# %% a single symmetric pair reaches a contact point of the envelope
curve = c_curve(KernelContext(1, 1.0, 6.75))
noise = optimal_noise(curve, 0.80688)
print("atoms:", noise.pairs(), "round-trip errors:", check_round_trip(curve, 0.80688, noise))

# %% on a chord the adversary mixes two pairs
chord = c_curve(KernelContext(1, 1.0, 2.0))
mix = optimal_noise(chord, 0.95)
print("chord", chord.samples.segments, "atoms:", mix.pairs())

# %% simulate a million rounds; the global value u never matters
cfg = GameConfig(ell=1, delta=1.0, m_half=1000.0, eta=6.75)
stats = monte_carlo(cfg, noise, adversary_count=1, rounds=1_000_000, seed=0)
report = analytic_check(curve.ctx, noise, stats)
print(f"PA {stats.pa_hat:.5f} (predicted {report.predicted_pa:.5f}, z={report.pa_z:+.2f})")
print(f"MSE {stats.mse_hat:.4f} (predicted {report.predicted_mse:.4f}, z={report.mse_z:+.2f})")

# %% colluding copies of the adversary change nothing
for clones, st in sybil_compare(cfg, noise, [1, 2, 5, 10], 200_000, seed=1):
    print(f"{clones:2d} clones: PA={st.pa_hat:.5f} MSE={st.mse_hat:.5f}")
