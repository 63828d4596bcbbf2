import numpy as np
import pytest

from gamecoding import (
    GameConfig,
    KernelContext,
    OpaqueSampler,
    SymmetricAtoms,
    analytic_check,
    c_curve,
    monte_carlo,
    optimal_noise,
    play_round,
    simulate_rounds,
    sybil_compare,
)
from gamecoding.sim import _play_rows

ONE = GameConfig(1, 1.0, 1000.0, 2.0)
PAIR2 = SymmetricAtoms((2.0,), (0.5,))


class FixedRows:
    """Stand-in generator that returns preset uniforms."""

    def __init__(self, row):
        self.row = np.asarray(row, dtype=float)

    def random(self, shape):
        return np.broadcast_to(self.row, shape).copy()


def test_round_within_honest_bounds():
    cfg = GameConfig(2, 1.0, 1000.0, 2.0)
    # honest noises 2u - 1 = -0.3 and +0.4, adversary at offset 0
    out = play_round(cfg, SymmetricAtoms((0.0,), (0.5,)), 1, FixedRows([0.5, 0.35, 0.7, 0.2, 0.9]))
    assert out.accepted
    assert out.spread == pytest.approx(0.7, abs=1e-12)


@pytest.mark.parametrize("n", [-0.9, -0.2, 0.0, 0.3, 0.99])
def test_round_spike_at_two(n):
    out = play_round(ONE, PAIR2, 1, FixedRows([0.5, (n + 1) / 2, 0.1, 0.9]))
    assert out.accepted == (n >= 0)
    if out.accepted:
        assert out.estimate_error == pytest.approx((2 + n) / 2, abs=1e-12)
    else:
        assert out.estimate_error is None


def test_round_clones_identical():
    row = [0.3, 0.6, 0.2, 0.8]
    assert play_round(ONE, PAIR2, 5, FixedRows(row)) == play_round(ONE, PAIR2, 1, FixedRows(row))


def test_round_rejects_zero_adversaries():
    with pytest.raises(ValueError):
        play_round(ONE, PAIR2, 0, FixedRows([0.5] * 4))


def test_monte_carlo_spike_at_two():
    st = monte_carlo(ONE, PAIR2, 1, 1_000_000, seed=11)
    assert st.pa_hat == pytest.approx(0.5, abs=0.002)
    assert st.mse_hat == pytest.approx(19 / 12, abs=0.01)
    rep = analytic_check(KernelContext(1, 1.0, 2.0), PAIR2, st)
    assert rep.predicted_pa == 0.5 and rep.predicted_mse == pytest.approx(19 / 12, rel=1e-15)
    assert rep.passed


def test_monte_carlo_edge_always_accepted():
    cfg = GameConfig(3, 1.0, 1000.0, 4.0)
    st = monte_carlo(cfg, SymmetricAtoms((3.0,), (0.5,)), 1, 50_000, seed=2)
    assert st.pa_hat == 1.0


def test_monte_carlo_example1_noise():
    c = c_curve(KernelContext(1, 1.0, 6.75))
    noise = optimal_noise(c, 0.80688387068184098)
    st = monte_carlo(GameConfig(1, 1.0, 1000.0, 6.75), noise, 1, 1_000_000, seed=3)
    assert st.pa_hat == pytest.approx(0.807, abs=0.002)
    assert st.mse_hat == pytest.approx(10.07, abs=0.05)


def test_chord_noise_check_passes():
    c = c_curve(KernelContext(1, 1.0, 2.0))
    noise = optimal_noise(c, 0.95)
    st = monte_carlo(ONE, noise, 1, 1_000_000, seed=4)
    rep = analytic_check(c.ctx, noise, st)
    assert rep.predicted_pa == pytest.approx(0.95, rel=1e-12)
    assert rep.predicted_mse == pytest.approx(float(c.c(0.95)), rel=1e-12)
    assert rep.passed


def test_check_flags_absent_mse():
    atoms = SymmetricAtoms((3.0,), (0.5,))
    st = monte_carlo(ONE, atoms, 1, 20_000, seed=5)
    rep = analytic_check(KernelContext(1, 1.0, 2.0), atoms, st)
    assert rep.predicted_pa == 0.0 and rep.mse_absent
    assert st.accepted_count == 0 and st.mse_hat is None


def test_sybil_identical():
    noise = optimal_noise(c_curve(KernelContext(1, 1.0, 6.75)), 0.807)
    cfg = GameConfig(1, 1.0, 1000.0, 6.75)
    runs = sybil_compare(cfg, noise, [1, 2, 5, 10], 100_000, seed=6)
    assert [c for c, _ in runs] == [1, 2, 5, 10]
    assert all(st == runs[0][1] for _, st in runs)
    assert sybil_compare(cfg, noise, [1], 100_000, 6)[0][1] == monte_carlo(cfg, noise, 1, 100_000, 6)


def test_sybil_per_round_bitwise():
    noise = SymmetricAtoms((1.5, 2.5), (0.2, 0.3))
    a1, e1, _ = simulate_rounds(ONE, noise, 1, 30_000, seed=8)
    a100, e100, _ = simulate_rounds(ONE, noise, 100, 30_000, seed=8)
    assert np.array_equal(a1, a100)
    assert np.array_equal(e1, e100, equal_nan=True)


def test_independent_of_m():
    noise = SymmetricAtoms((0.5, 2.5), (0.25, 0.25))
    small = simulate_rounds(GameConfig(2, 1.0, 1e3, 3.0), noise, 1, 20_000, seed=9)
    large = simulate_rounds(GameConfig(2, 1.0, 1e6, 3.0), noise, 1, 20_000, seed=9)
    assert np.array_equal(small[0], large[0])
    assert np.array_equal(small[1], large[1], equal_nan=True)


def test_translation_and_sign_equivariance():
    cfg = GameConfig(3, 1.0, 1000.0, 3.0)
    noise = SymmetricAtoms((1.0, 2.0), (0.25, 0.25))
    rows = np.random.default_rng(0).random((5000, 6))
    _, acc, err, spread = _play_rows(cfg, noise, 1, rows)
    shifted = rows.copy()
    shifted[:, 0] = np.random.default_rng(1).random(5000)
    _, acc_s, err_s, _ = _play_rows(cfg, noise, 1, shifted)
    assert np.array_equal(acc, acc_s) and np.array_equal(err, err_s)
    mirrored = 1 - rows
    mirrored[:, 4] = rows[:, 4]  # same atom, opposite sign and honest noise
    _, acc_m, err_m, spread_m = _play_rows(cfg, noise, 1, mirrored)
    assert np.array_equal(acc, acc_m)
    assert np.allclose(err_m, -err, rtol=0, atol=1e-12)
    assert np.allclose(spread_m, spread, rtol=0, atol=1e-12)


def test_workers_bit_identical():
    noise = SymmetricAtoms((1.2,), (0.5,))
    serial = monte_carlo(ONE, noise, 1, 50_000, seed=10)
    assert monte_carlo(ONE, noise, 1, 50_000, seed=10, workers=4) == serial
    assert monte_carlo(ONE, noise, 1, 50_000, seed=11) != serial


def test_opaque_sampler_runs():
    st = monte_carlo(ONE, OpaqueSampler("uniform", {"loc": -3.0, "scale": 6.0}), 1, 50_000, seed=12)
    assert 0 < st.pa_hat < 1 and st.mse_hat > 0


def test_random_atoms_match_closed_form():
    rng = np.random.default_rng(13)
    for trial in range(5):
        ell = int(rng.integers(1, 4))
        eta = float(rng.uniform(2, 8))
        ctx = KernelContext(ell, 1.0, eta)
        lo, hi = ctx.z_range
        m = int(rng.integers(1, 5))
        z = np.sort(rng.uniform(lo, hi, m))
        w = rng.dirichlet(np.ones(m)) / 2
        atoms = SymmetricAtoms(tuple(z), tuple(w[:-1]) + (0.5 - w[:-1].sum(),))
        st = monte_carlo(GameConfig(ell, 1.0, 1000.0, eta), atoms, 1, 200_000, seed=trial)
        assert analytic_check(ctx, atoms, st).passed
