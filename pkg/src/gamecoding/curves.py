"""Worst-case MSE/acceptance trade-off for uniform honest noise.

With ``ell`` honest nodes and a single adversarial spike at ``+z``, the
acceptance region is ``min(n) >= z - eta*delta``, where ``min(n)`` has density
``w(x) = ell (delta - x)^(ell-1) / (2 delta)^ell``. Writing
``T = (eta+1)*delta - z`` and ``A = delta + z`` the two kernels integrate in
closed form::

    k(z)  = (T / (2 delta))^ell
    nu(z) = k(z) * (A^2 - 2 ell A T / (ell+1) + ell T^2 / (ell+2))

``h(q) = nu(k^-1(q))`` is the error mass of a symmetric spike pair accepted
with probability ``q``; its concave envelope ``h*`` gives
``c_eta(alpha) = h*(alpha) / (4 alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import SymmetricAtoms

DEFAULT_POINTS = 4097
REFINE_RESOLUTION = 1e-6
_REFINE_POINTS = 65


class KernelDomainError(ValueError):
    pass


@dataclass(frozen=True)
class KernelContext:
    ell: int
    delta: float
    eta: float

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"ell must be a positive integer, got {self.ell!r}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not self.eta >= 2:
            raise ValueError(f"eta must be >= 2, got {self.eta!r}")

    @property
    def z_range(self):
        return (self.eta - 1) * self.delta, (self.eta + 1) * self.delta


def _as_scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _check(values, lo, hi, what):
    values = np.asarray(values, dtype=float)
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if np.any(~np.isfinite(values)) or np.any(values < lo - slack) or np.any(values > hi + slack):
        raise KernelDomainError(f"{what} outside [{lo!r}, {hi!r}]: {values!r}")
    return np.clip(values, lo, hi)


def honest_min_density(ctx: KernelContext, x):
    """Density of the smallest of ``ell`` uniform honest noises."""
    xs = _check(x, -ctx.delta, ctx.delta, "x")
    d = 2 * ctx.delta
    out = ctx.ell * (ctx.delta - xs) ** (ctx.ell - 1) / d**ctx.ell
    return _as_scalar_or_array(out, x)


def acceptance_kernel(ctx: KernelContext, z):
    lo, hi = ctx.z_range
    zs = _check(z, lo, hi, "z")
    out = ((hi - zs) / (2 * ctx.delta)) ** ctx.ell
    return _as_scalar_or_array(out, z)


def _nu(ctx, zs):
    ell = ctx.ell
    t = (ctx.eta + 1) * ctx.delta - zs
    a = ctx.delta + zs
    k = (t / (2 * ctx.delta)) ** ell
    return k * (a * a - 2 * ell * a * t / (ell + 1) + ell * t * t / (ell + 2))


def error_kernel(ctx: KernelContext, z):
    lo, hi = ctx.z_range
    zs = _check(z, lo, hi, "z")
    return _as_scalar_or_array(_nu(ctx, zs), z)


def inverse_kernel(ctx: KernelContext, q, method="closed"):
    """Offset ``z`` with ``acceptance_kernel(z) == q``.

    ``method="bisect"`` solves the monotone equation numerically instead of
    using the closed form; it serves as a cross-check.
    """
    qs = _check(q, 0.0, 1.0, "q")
    lo, hi = ctx.z_range
    if method == "closed":
        out = hi - 2 * ctx.delta * qs ** (1.0 / ctx.ell)
        return _as_scalar_or_array(np.clip(out, lo, hi), q)
    if method != "bisect":
        raise ValueError(f"unknown method {method!r}")

    def solve(target):
        if target >= 1.0:
            return lo
        if target <= 0.0:
            return hi
        return optimize.bisect(
            lambda z: acceptance_kernel(ctx, z) - target, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200
        )

    out = np.vectorize(solve, otypes=[float])(qs)
    return _as_scalar_or_array(out, q)


def spike_mse_curve(ctx: KernelContext, q):
    """``h(q) = nu(k^-1(q))``, vanishing at ``q = 0``."""
    qs = _check(q, 0.0, 1.0, "q")
    lo, hi = ctx.z_range
    z = np.clip(hi - 2 * ctx.delta * qs ** (1.0 / ctx.ell), lo, hi)
    out = _nu(ctx, z)
    return _as_scalar_or_array(np.where(qs == 0, 0.0, out), q)


@dataclass(frozen=True)
class CurveSamples:
    q_grid: np.ndarray
    h_values: np.ndarray
    h_star_values: np.ndarray
    contact_flags: np.ndarray
    # (q_lo, q_hi) stretches where the envelope is a chord strictly above h
    segments: tuple


def _upper_hull(q, h):
    hull = []
    for i in range(len(q)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it is on or below the line a -> i
            if (h[b] - h[a]) * (q[i] - q[a]) <= (h[i] - h[a]) * (q[b] - q[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def concave_envelope(q_grid, h_values, rtol=1e-12) -> CurveSamples:
    """Upper concave hull of the sampled points ``(q_grid, h_values)``.

    Hull edges that skip samples lying more than ``rtol * max(1, max|h|)``
    below them become chord segments; edges that only skip numerically
    collinear samples count as contact.
    """
    q = np.asarray(q_grid, dtype=float)
    h = np.asarray(h_values, dtype=float)
    if q.ndim != 1 or q.shape != h.shape:
        raise ValueError("q_grid and h_values must be 1-d arrays of equal length")
    if q.size < 3:
        raise ValueError("need at least 3 samples")
    if np.any(np.diff(q) <= 0):
        raise ValueError("q_grid must be strictly increasing")
    if not np.all(np.isfinite(h)):
        raise ValueError("h_values must be finite")

    hull = _upper_hull(q, h)
    h_star = np.interp(q, q[hull], h[hull])
    tol = rtol * max(1.0, float(np.max(np.abs(h))))
    contact = np.ones(q.size, dtype=bool)
    segments = []
    for a, b in zip(hull, hull[1:]):
        if b == a + 1:
            continue
        if np.max(h_star[a + 1 : b] - h[a + 1 : b]) > tol:
            contact[a + 1 : b] = False
            segments.append((float(q[a]), float(q[b])))
        else:
            h_star[a + 1 : b] = h[a + 1 : b]
    h_star[contact] = h[contact]
    return CurveSamples(q, h, h_star, contact, tuple(segments))


def build_envelope(ctx: KernelContext, points=DEFAULT_POINTS, refine=True, resolution=REFINE_RESOLUTION):
    """Sample ``h`` on a uniform grid and take its envelope, then densify the
    grid around chord endpoints until they are located to ``resolution``."""
    q = np.linspace(0.0, 1.0, points)
    samples = concave_envelope(q, spike_mse_curve(ctx, q))
    while refine:
        extra = []
        for seg in samples.segments:
            for end in seg:
                i = int(np.searchsorted(q, end))
                if i in (0, q.size - 1):
                    continue
                lo, hi = q[i - 1], q[i + 1]
                if max(q[i] - lo, hi - q[i]) > resolution:
                    extra.append(np.linspace(lo, hi, _REFINE_POINTS))
        if not extra:
            break
        q = np.unique(np.concatenate([q, *extra]))
        samples = concave_envelope(q, spike_mse_curve(ctx, q))
    return samples


@dataclass(frozen=True)
class TradeoffCurve:
    ctx: KernelContext
    alpha_grid: np.ndarray
    c_values: np.ndarray
    samples: CurveSamples
    # lim_{alpha -> 0+} c(alpha): right-derivative of h* at 0, over 4
    c_limit: float

    @property
    def eta(self):
        return self.ctx.eta

    @property
    def ell(self):
        return self.ctx.ell

    def segment_containing(self, q):
        """Chord ``(q_lo, q_hi)`` with ``q_lo < q < q_hi``, or ``None``."""
        for lo, hi in self.samples.segments:
            if lo < q < hi:
                return lo, hi
        return None

    def envelope(self, q):
        """``h*`` at arbitrary ``q``: exact ``h`` on contact stretches, the
        chord inside segments."""
        qs = np.asarray(q, dtype=float)
        out = np.asarray(spike_mse_curve(self.ctx, qs), dtype=float)
        for lo, hi in self.samples.segments:
            inside = (qs > lo) & (qs < hi)
            if np.any(inside):
                h_lo, h_hi = spike_mse_curve(self.ctx, np.array([lo, hi]))
                out = np.where(inside, h_lo + (h_hi - h_lo) * (qs - lo) / (hi - lo), out)
        return _as_scalar_or_array(out, q)

    def c(self, alpha):
        """Worst-case conditional MSE at acceptance probability ``alpha``;
        ``alpha == 0`` returns the stored limit."""
        a = np.asarray(alpha, dtype=float)
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError(f"alpha outside [0, 1]: {alpha!r}")
        safe = np.where(a > 0, a, 1.0)
        out = np.where(a > 0, np.asarray(self.envelope(safe)) / (4 * safe), self.c_limit)
        return _as_scalar_or_array(out, alpha)


def c_curve(ctx: KernelContext, alpha_grid=None, points=DEFAULT_POINTS, refine=True) -> TradeoffCurve:
    samples = build_envelope(ctx, points=points, refine=refine)
    if alpha_grid is None:
        alpha_grid = np.linspace(0.0, 1.0, points)[1:]
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if alpha_grid.ndim != 1 or alpha_grid.size == 0:
        raise ValueError("alpha_grid must be a non-empty 1-d array")
    if np.any(alpha_grid <= 0) or np.any(alpha_grid > 1):
        raise ValueError("alpha_grid must lie in (0, 1]")

    segs = samples.segments
    if segs and segs[0][0] == 0.0:
        slope = float(spike_mse_curve(ctx, segs[0][1])) / segs[0][1]
    else:
        # h(q) = A^2 q + o(q) as q -> 0 with A = (eta+2) delta
        slope = ((ctx.eta + 2) * ctx.delta) ** 2
    curve = TradeoffCurve(ctx, alpha_grid, np.empty(0), samples, slope / 4)
    c_values = np.asarray(curve.c(alpha_grid), dtype=float)
    return TradeoffCurve(ctx, alpha_grid, c_values, samples, slope / 4)


def mixture_pa_mse(ctx: KernelContext, atoms: SymmetricAtoms):
    """Acceptance probability and conditional MSE of a symmetric atomic
    strategy whose offsets lie in the kernel domain. MSE is ``None`` when
    the strategy is never accepted."""
    z = np.asarray(atoms.offsets)
    w = 2 * np.asarray(atoms.weights)
    pa = math.fsum(w * np.asarray(acceptance_kernel(ctx, z)))
    err = math.fsum(w * np.asarray(error_kernel(ctx, z)))
    if pa <= 0:
        return 0.0, None
    return pa, err / (4 * pa)
