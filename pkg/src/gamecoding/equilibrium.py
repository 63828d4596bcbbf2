"""Stackelberg solver: adversary best response on the trade-off curve, the
leader's pessimistic choice of threshold, and the adversary's optimal noise."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .curves import DEFAULT_POINTS, KernelContext, TradeoffCurve, c_curve, inverse_kernel, mixture_pa_mse
from .model import EquilibriumPoint, SymmetricAtoms, UtilityPair
from .utility import Expr, UtilityDomainError, eval_grid, eval_utility

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
ALPHA_RESOLUTION = 1e-7
TIE_TOL = 1e-9
ETA_TIE_TOL = 1e-6


class EquilibriumError(RuntimeError):
    pass


def golden_max(f, a, b, tol=ALPHA_RESOLUTION):
    """Golden-section search for the maximiser of ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` for the best interior probe; the caller handles
    the endpoints.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


@dataclass(frozen=True)
class BestResponseSet:
    eta: float
    alphas: tuple
    ad_utility: float
    # True when the supremum is the alpha -> 0 limit (then alphas == (0.0,))
    boundary: bool = False


def _ad_value(curve, q_ad, alpha):
    try:
        return eval_utility(q_ad, float(curve.c(alpha)), alpha)
    except UtilityDomainError:
        return -math.inf


def adversary_best_response(curve: TradeoffCurve, q_ad: Expr, tie_tol=TIE_TOL) -> BestResponseSet:
    """Maximise ``q_ad(c(alpha), alpha)`` over ``0 < alpha <= 1``.

    Every local maximum on ``curve.alpha_grid`` is refined by golden-section
    search inside its bracketing grid interval; all optima within
    ``tie_tol * |best|`` of the best are returned. The ``alpha -> 0`` limit
    competes as well, using the stored limit of the curve.
    """
    if not tie_tol > 0:
        raise ValueError("tie_tol must be positive")
    grid = curve.alpha_grid
    values, ok = eval_grid(q_ad, curve.c_values, grid)
    if not np.all(ok):
        log.debug("eta=%g: q_ad undefined at %d of %d grid points", curve.eta, np.sum(~ok), grid.size)
    if not np.any(ok):
        raise EquilibriumError(f"q_ad cannot be evaluated anywhere on the curve at eta={curve.eta}")
    f = np.where(ok, values, -np.inf)

    padded = np.concatenate([[-np.inf], f, [-np.inf]])
    local = np.nonzero(ok & (f >= padded[:-2]) & (f >= padded[2:]))[0]

    def obj(a):
        return _ad_value(curve, q_ad, a)

    try:
        at_zero = eval_utility(q_ad, curve.c_limit, 0.0)
    except UtilityDomainError:
        at_zero = -math.inf

    # one candidate per bracketed local maximum
    candidates = []
    for i in local:
        options = [(float(f[i]), float(grid[i]))]
        lo = grid[i - 1] if i > 0 else 0.0
        hi = grid[i + 1] if i + 1 < grid.size else grid[i]
        if hi - lo > ALPHA_RESOLUTION:
            x, fx = golden_max(obj, lo, hi)
            options.append((fx, float(x)))
        if i == 0:
            options.append((at_zero, 0.0))
        candidates.append(max(options))
    if at_zero > -math.inf and (not local.size or local[0] != 0):
        candidates.append((at_zero, 0.0))

    best = max(v for v, _ in candidates)
    slack = tie_tol * abs(best) if best != 0 else tie_tol
    alphas = tuple(sorted(a for v, a in candidates if v >= best - slack))
    return BestResponseSet(curve.eta, alphas, best, alphas[0] == 0.0)


def _dc_value(curve, q_dc, alpha):
    try:
        return eval_utility(q_dc, float(curve.c(alpha)), alpha)
    except UtilityDomainError:
        return -math.inf


@dataclass(frozen=True)
class EtaRecord:
    eta: float
    best_response: BestResponseSet
    dc_utility: float  # min over the best-response set
    alpha: float  # best response attaining that minimum
    mse: float


@dataclass(frozen=True)
class StackelbergSolution:
    point: EquilibriumPoint
    per_eta: tuple
    eta_grid: tuple
    # grid values whose worst-case DC utility ties the optimum
    eta_ties: tuple


def solve_eta(eta, pair: UtilityPair, ell, delta, points=DEFAULT_POINTS, tie_tol=TIE_TOL):
    curve = c_curve(KernelContext(ell, delta, eta), points=points)
    br = adversary_best_response(curve, pair.q_ad, tie_tol)
    dc = [(_dc_value(curve, pair.q_dc, a), a) for a in br.alphas]
    u, a = min(dc)
    return curve, EtaRecord(float(eta), br, u, a, float(curve.c(a)))


def stackelberg_solve(
    eta_grid, pair: UtilityPair, ell=1, delta=1.0, points=DEFAULT_POINTS, tie_tol=TIE_TOL, eta_tie_tol=ETA_TIE_TOL
) -> StackelbergSolution:
    """Pessimistic Stackelberg threshold over a grid of ``eta`` values.

    For each ``eta`` the adversary's best-response set is computed and the
    leader scores it by the worst DC utility inside it. The best score wins;
    scores within ``eta_tie_tol * max(1, |best|)`` of it tie, and the
    smallest tied ``eta`` is chosen.
    """
    etas = [float(e) for e in eta_grid]
    if not etas:
        raise ValueError("eta_grid is empty")
    if any(not e >= 2 for e in etas):
        raise ValueError("every eta must be >= 2")

    curves = {}
    records = []
    for eta in etas:
        try:
            curve, rec = solve_eta(eta, pair, ell, delta, points, tie_tol)
        except EquilibriumError as exc:
            log.warning("eta=%g skipped: %s", eta, exc)
            continue
        curves[eta] = curve
        records.append(rec)
    if not records:
        raise EquilibriumError("no eta in the grid admits a best response")

    best = max(r.dc_utility for r in records)
    if not math.isfinite(best):
        raise EquilibriumError("DC utility is undefined at every best response")
    slack = eta_tie_tol * max(1.0, abs(best))
    ties = tuple(r.eta for r in records if r.dc_utility >= best - slack)
    win = next(r for r in records if r.eta == min(ties))
    curve = curves[win.eta]
    noise = optimal_noise(curve, win.alpha) if win.alpha > 0 else _limit_noise(curve)
    point = EquilibriumPoint(
        eta_star=win.eta,
        alpha=win.alpha,
        mse=win.mse,
        dc_utility=win.dc_utility,
        ad_utility=win.best_response.ad_utility,
        noise=noise,
        boundary=win.alpha == 0.0,
    )
    return StackelbergSolution(point, tuple(records), tuple(etas), ties)


def _limit_noise(curve):
    # PA -> 0: a single pair at the far edge of the kernel domain
    return SymmetricAtoms((curve.ctx.z_range[1],), (0.5,))


def optimal_noise(curve: TradeoffCurve, alpha: float) -> SymmetricAtoms:
    """Adversary noise attaining ``(alpha, c(alpha))`` on ``curve``.

    On a contact stretch this is one symmetric pair at ``k^-1(alpha)``;
    inside a chord ``[q1, q2]`` it mixes the pairs at ``k^-1(q1)`` and
    ``k^-1(q2)`` with weights set by where ``alpha`` sits on the chord.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    ctx = curve.ctx
    seg = curve.segment_containing(alpha)
    if seg is None:
        return SymmetricAtoms((float(inverse_kernel(ctx, alpha)),), (0.5,))
    q1, q2 = seg
    z1 = float(inverse_kernel(ctx, q1))
    z2 = float(inverse_kernel(ctx, q2))
    b1 = (q2 - alpha) / (2 * (q2 - q1))
    b2 = (alpha - q1) / (2 * (q2 - q1))
    return SymmetricAtoms.from_pairs([(z1, b1), (z2, b2)])


@dataclass(frozen=True)
class ProbeRow:
    ell: int
    alpha: float
    mse: float
    dc_utility: float


@dataclass(frozen=True)
class ProbeTable:
    eta_star: float
    rows: tuple
    # "increasing", "decreasing", "constant" or "mixed" in ell
    direction: str

    @property
    def monotone(self):
        return self.direction != "mixed"


def properness_probe(pair: UtilityPair, eta_star, ell_values, delta=1.0, points=DEFAULT_POINTS) -> ProbeTable:
    """Keep ``eta_star`` fixed and let the adversary re-optimise for each
    honest count in ``ell_values``; report the DC utility per count."""
    ells = [int(e) for e in ell_values]
    if not ells or any(e < 1 for e in ells) or any(b <= a for a, b in zip(ells, ells[1:])):
        raise ValueError("ell_values must be strictly increasing positive integers")
    rows = []
    for ell in ells:
        _, rec = solve_eta(eta_star, pair, ell, delta, points)
        rows.append(ProbeRow(ell, rec.alpha, rec.mse, rec.dc_utility))
    diffs = np.diff([r.dc_utility for r in rows])
    scale = 1e-9 * max(1.0, max(abs(r.dc_utility) for r in rows))
    if np.all(np.abs(diffs) <= scale):
        direction = "constant"
    elif np.all(diffs >= -scale):
        direction = "increasing"
    elif np.all(diffs <= scale):
        direction = "decreasing"
    else:
        direction = "mixed"
    return ProbeTable(float(eta_star), tuple(rows), direction)


def check_round_trip(curve: TradeoffCurve, alpha, noise: SymmetricAtoms):
    """Relative errors of the mixture's (PA, MSE) against ``(alpha, c(alpha))``."""
    pa, mse = mixture_pa_mse(curve.ctx, noise)
    target = float(curve.c(alpha))
    return abs(pa - alpha) / alpha, abs(mse - target) / target


__all__ = [
    "BestResponseSet",
    "EtaRecord",
    "StackelbergSolution",
    "ProbeRow",
    "ProbeTable",
    "EquilibriumError",
    "adversary_best_response",
    "stackelberg_solve",
    "solve_eta",
    "optimal_noise",
    "properness_probe",
    "check_round_trip",
    "golden_max",
]
