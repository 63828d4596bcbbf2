import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamecoding import (
    KernelContext,
    KernelDomainError,
    acceptance_kernel,
    build_envelope,
    c_curve,
    concave_envelope,
    error_kernel,
    honest_min_density,
    inverse_kernel,
    spike_mse_curve,
)

from conftest import ETA_GRID
from oracles import density, h_direct, quad_kernels, upper_hull

CTX2 = KernelContext(1, 1.0, 2.0)


def test_density_examples():
    assert honest_min_density(KernelContext(1, 1.0, 2.0), 0.0) == 0.5
    assert honest_min_density(KernelContext(2, 1.0, 2.0), 1.0) == 0.0
    assert honest_min_density(KernelContext(2, 1.0, 2.0), -1.0) == 1.0


@pytest.mark.parametrize("ell", range(1, 11))
def test_density_integrates_to_one(ell):
    from scipy import integrate

    ctx = KernelContext(ell, 1.0, 2.0)
    total, _ = integrate.quad(lambda x: honest_min_density(ctx, x), -1, 1, epsabs=0, epsrel=1e-13)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_acceptance_examples():
    assert acceptance_kernel(CTX2, 1.0) == 1.0
    assert acceptance_kernel(CTX2, 3.0) == 0.0
    assert acceptance_kernel(CTX2, 2.0) == 0.5


def test_error_examples():
    assert error_kernel(CTX2, 3.0) == 0.0
    assert error_kernel(CTX2, 2.0) == pytest.approx(19 / 6, rel=1e-15)
    assert error_kernel(CTX2, 1.0) == pytest.approx(4 / 3, rel=1e-15)


def test_inverse_examples():
    assert inverse_kernel(CTX2, 1.0) == 1.0
    assert inverse_kernel(CTX2, 0.0) == 3.0
    assert inverse_kernel(CTX2, 0.5) == 2.0


def test_spike_examples():
    assert spike_mse_curve(CTX2, 0.0) == 0.0
    assert spike_mse_curve(CTX2, 0.5) == pytest.approx(19 / 6, rel=1e-15)
    assert spike_mse_curve(CTX2, 1.0) == pytest.approx(4 / 3, rel=1e-15)


def test_domain_errors():
    with pytest.raises(KernelDomainError):
        acceptance_kernel(CTX2, 0.5)
    with pytest.raises(KernelDomainError):
        inverse_kernel(CTX2, 1.5)
    with pytest.raises(KernelDomainError):
        honest_min_density(CTX2, 1.1)
    with pytest.raises(ValueError):
        KernelContext(1, 1.0, 1.9)


@pytest.mark.parametrize("ell", [1, 2, 3, 5])
@pytest.mark.parametrize("eta", ETA_GRID[::4])
def test_kernels_match_quadrature(ell, eta):
    ctx = KernelContext(ell, 1.0, eta)
    lo, hi = ctx.z_range
    for z in np.linspace(lo, hi, 9)[:-1]:
        k, nu = quad_kernels(ell, 1.0, eta, z)
        assert acceptance_kernel(ctx, z) == pytest.approx(k, rel=1e-9)
        assert error_kernel(ctx, z) == pytest.approx(nu, rel=1e-9)


def test_h_matches_direct_composition():
    for ell, eta in [(1, 2.0), (2, 3.5), (3, 6.0)]:
        ctx = KernelContext(ell, 1.0, eta)
        for q in [0.05, 0.3, 0.7, 0.99]:
            assert spike_mse_curve(ctx, q) == pytest.approx(h_direct(ell, 1.0, eta, q), rel=1e-9)


@pytest.mark.parametrize("ell", [1, 2, 3, 5, 10])
def test_acceptance_strictly_decreasing(ell):
    ctx = KernelContext(ell, 1.0, 3.0)
    lo, hi = ctx.z_range
    k = acceptance_kernel(ctx, np.linspace(lo, hi, 2001))
    assert np.all(np.diff(k) < 0)
    assert acceptance_kernel(ctx, lo) == 1.0 and acceptance_kernel(ctx, hi) == 0.0


def test_inverse_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        ell = int(rng.choice([1, 2, 3, 5]))
        ctx = KernelContext(ell, float(rng.uniform(0.1, 3)), float(rng.uniform(2, 8)))
        lo, hi = ctx.z_range
        z = rng.uniform(lo, hi)
        back = inverse_kernel(ctx, acceptance_kernel(ctx, z))
        assert abs(back - z) <= 1e-10 * max(1.0, abs(z))


def test_bisect_inverse_agrees():
    ctx = KernelContext(3, 1.0, 4.0)
    q = np.linspace(0, 1, 33)
    assert np.allclose(inverse_kernel(ctx, q, "bisect"), inverse_kernel(ctx, q), rtol=0, atol=1e-10)


def test_envelope_of_concave_function_is_itself():
    q = np.linspace(0, 1, 501)
    s = concave_envelope(q, np.sqrt(q))
    assert s.contact_flags.all() and not s.segments
    assert np.array_equal(s.h_star_values, s.h_values)


def test_envelope_input_checks():
    with pytest.raises(ValueError):
        concave_envelope([0, 1], [0, 1])
    with pytest.raises(ValueError):
        concave_envelope([0, 0.5, 0.4], [0, 1, 2])
    with pytest.raises(ValueError):
        concave_envelope([0, 0.5, 1], [0, np.nan, 2])


def test_eta2_endpoints_and_single_chord():
    s = build_envelope(CTX2)
    assert s.h_star_values[0] == 0.0
    assert s.h_star_values[-1] == pytest.approx(4 / 3, rel=1e-15)
    assert len(s.segments) == 1 and s.segments[0][1] == 1.0


def test_eta2_chord_start_is_tangent_point():
    # h(q) = 16q - 24q^2 + 28/3 q^3; tangent from (1, 4/3) touches at 11/14
    q1 = 11 / 14
    h = lambda q: 16 * q - 24 * q**2 + 28 / 3 * q**3
    dh = 16 - 48 * q1 + 28 * q1**2
    assert dh * (1 - q1) == pytest.approx(h(1) - h(q1), rel=1e-12)
    seg = build_envelope(CTX2).segments[0]
    assert seg[0] == pytest.approx(q1, abs=2e-6)


@pytest.mark.parametrize("ell,eta", [(1, 2.0), (1, 2.5), (2, 2.0), (3, 4.0), (5, 2.0)])
def test_envelope_matches_qhull_oracle(ell, eta):
    ctx = KernelContext(ell, 1.0, eta)
    q = np.linspace(0, 1, 100_001)
    oracle, _ = upper_hull(q, spike_mse_curve(ctx, q))
    curve = c_curve(ctx)
    got = curve.envelope(q)
    assert np.max(np.abs(got - oracle)) <= 1e-8 * np.max(oracle)
    coarse = build_envelope(ctx, points=100_001, refine=False)
    assert len(coarse.segments) == len(curve.samples.segments)
    for (a, b), (c, d) in zip(coarse.segments, curve.samples.segments):
        assert abs(a - c) <= 2e-5 and abs(b - d) <= 2e-5


@pytest.mark.parametrize("eta", ETA_GRID)
def test_envelope_properties(eta):
    s = build_envelope(KernelContext(1, 1.0, eta))
    q, h, hs = s.q_grid, s.h_values, s.h_star_values
    scale = max(1.0, h.max())
    assert np.all(hs >= h - 1e-12 * scale)
    slopes = np.diff(hs) / np.diff(q)
    assert np.all(np.diff(slopes) <= 1e-7 * scale)
    assert np.array_equal(hs[s.contact_flags], h[s.contact_flags])
    assert hs[0] == h[0] and hs[-1] == h[-1]
    for lo, hi in s.segments:
        i, j = np.searchsorted(q, [lo, hi])
        assert s.contact_flags[i] and s.contact_flags[j]
        inside = slice(i, j + 1)
        line = hs[i] + (hs[j] - hs[i]) * (q[inside] - q[i]) / (q[j] - q[i])
        assert np.allclose(hs[inside], line, rtol=0, atol=1e-12 * scale)


def test_c_examples():
    assert c_curve(CTX2, [1.0]).c_values[0] == pytest.approx(1 / 3, rel=1e-14)
    assert c_curve(KernelContext(1, 1.0, 6.75)).c(0.807) == pytest.approx(10.07, abs=0.01)
    assert c_curve(KernelContext(1, 1.0, 3.75)).c(0.214) == pytest.approx(6.52, abs=0.01)


@pytest.mark.parametrize("eta", [2.0, 4.0, 8.0])
def test_c_limit(eta):
    curve = c_curve(KernelContext(1, 1.0, eta))
    assert curve.c_limit == pytest.approx((eta + 2) ** 2 / 4, rel=1e-14)
    assert curve.c(1e-7) == pytest.approx(curve.c_limit, rel=1e-5)
    assert curve.c(0.0) == curve.c_limit


def test_curve_family_ordering():
    alpha = np.linspace(0, 1, 513)[1:]
    table = np.array([c_curve(KernelContext(1, 1.0, e), alpha).c_values for e in ETA_GRID])
    assert np.all(np.diff(table, axis=0) >= -1e-12 * table[1:])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10), st.floats(2, 8), st.sampled_from([1, 2, 3]))
def test_c_scales_with_delta_squared(s, eta, ell):
    alpha = np.linspace(0.05, 1, 20)
    base = c_curve(KernelContext(ell, 1.0, eta), alpha, points=1025).c_values
    scaled = c_curve(KernelContext(ell, s, eta), alpha, points=1025).c_values
    assert np.allclose(scaled, s**2 * base, rtol=1e-9)


def test_density_oracle_shape():
    assert density(2, 1.0, -1.0) == 1.0
