"""Core domain types shared by the analytic and simulation modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .utility import Expr, UtilityDomainError, eval_grid, parse_utility, to_string

MAX_ATOMS = 8
# Delta << M regime
MAX_DELTA_RATIO = 0.01


@dataclass(frozen=True)
class GameConfig:
    """One instance of the repetition game: ``ell`` honest nodes with noise
    uniform on ``[-delta, delta]``, ``u`` uniform on ``[-m_half, m_half]``,
    and acceptance when the report range is at most ``eta * delta``."""

    ell: int
    delta: float
    m_half: float
    eta: float

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"ell must be a positive integer, got {self.ell!r}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not self.m_half > 0:
            raise ValueError(f"m_half must be positive, got {self.m_half!r}")
        if not self.eta >= 2:
            raise ValueError(f"eta must be >= 2, got {self.eta!r}")
        if self.delta / self.m_half > MAX_DELTA_RATIO:
            raise ValueError(
                f"delta / m_half = {self.delta / self.m_half:g} exceeds {MAX_DELTA_RATIO}"
            )


@dataclass(frozen=True)
class UtilityPair:
    q_dc: Expr
    q_ad: Expr
    pa_floor: float = 1e-3

    def __post_init__(self):
        if isinstance(self.q_dc, str):
            object.__setattr__(self, "q_dc", parse_utility(self.q_dc))
        if isinstance(self.q_ad, str):
            object.__setattr__(self, "q_ad", parse_utility(self.q_ad))
        if not 0 < self.pa_floor < 1:
            raise ValueError(f"pa_floor must lie in (0, 1), got {self.pa_floor!r}")


@dataclass(frozen=True)
class SymmetricAtoms:
    """Symmetric atomic noise: mass ``w`` at both ``+z`` and ``-z`` for each
    ``(z, w)`` in ``zip(offsets, weights)``; the weights sum to one half."""

    offsets: tuple
    weights: tuple
    max_atoms: int = MAX_ATOMS

    def __post_init__(self):
        offsets = tuple(float(z) for z in self.offsets)
        weights = tuple(float(b) for b in self.weights)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", weights)
        if len(offsets) != len(weights) or not offsets:
            raise ValueError("offsets and weights must be non-empty and of equal length")
        if len(offsets) > self.max_atoms:
            raise ValueError(f"{len(offsets)} atoms exceeds the maximum of {self.max_atoms}")
        if any(not math.isfinite(z) or z < 0 for z in offsets):
            raise ValueError(f"offsets must be finite and non-negative: {offsets}")
        if any(hi <= lo for lo, hi in zip(offsets, offsets[1:])):
            raise ValueError(f"offsets must be strictly increasing: {offsets}")
        if any(not b > 0 for b in weights):
            raise ValueError(f"weights must be positive: {weights}")
        if abs(2 * math.fsum(weights) - 1) > 1e-12:
            raise ValueError(f"2 * sum(weights) must equal 1, got {2 * math.fsum(weights)!r}")

    @classmethod
    def from_pairs(cls, pairs, max_atoms=MAX_ATOMS):
        pairs = sorted((float(z), float(b)) for z, b in pairs)
        return cls(tuple(z for z, _ in pairs), tuple(b for _, b in pairs), max_atoms)

    def pairs(self):
        return list(zip(self.offsets, self.weights))

    def sample(self, u_atom, u_sign):
        """Map two uniforms in [0, 1) to signed offsets."""
        cum = np.cumsum(2 * np.asarray(self.weights))
        idx = np.minimum(np.searchsorted(cum, u_atom, side="right"), len(cum) - 1)
        z = np.asarray(self.offsets)[idx]
        return np.where(u_sign < 0.5, -z, z)


@dataclass(frozen=True)
class OpaqueSampler:
    """Adversarial offsets drawn from a ``scipy.stats`` distribution by
    inverse CDF, e.g. ``OpaqueSampler("uniform", {"loc": -3, "scale": 6})``.
    Only the simulator accepts these."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        dist = getattr(stats, self.name, None)
        if not isinstance(dist, stats.rv_continuous):
            raise ValueError(f"unknown continuous distribution {self.name!r}")

    def __hash__(self):
        return hash((self.name, tuple(sorted(self.params.items()))))

    def sample(self, u_atom, u_sign):
        return getattr(stats, self.name)(**self.params).ppf(u_atom)


AdversaryStrategy = SymmetricAtoms | OpaqueSampler


@dataclass(frozen=True)
class EquilibriumPoint:
    eta_star: float
    alpha: float
    mse: float
    dc_utility: float
    ad_utility: float
    noise: SymmetricAtoms
    # alpha -> 0 limit (PA = 0); ad_utility is then the supremum, not an attained value
    boundary: bool = False


@dataclass(frozen=True)
class Violation:
    which: str  # "q_dc" or "q_ad"
    axis: str  # "MSE" or "PA"
    point: tuple  # (mse, pa) of the lower grid point
    neighbour: tuple
    values: tuple


@dataclass(frozen=True)
class MonotonicityReport:
    violations: tuple
    pa_floor: float
    mse_range: tuple
    shape: tuple
    errors: tuple = ()

    @property
    def passed(self):
        return not self.violations and not self.errors


def default_grid(pa_floor=1e-3, mse_min=1e-2, mse_max=100.0, points=128):
    return np.geomspace(mse_min, mse_max, points), np.linspace(pa_floor, 1.0, points)


def validate_monotonicity(pair: UtilityPair, grid=None) -> MonotonicityReport:
    """Screen ``pair`` for the required monotonicity on a rectangular grid.

    ``q_ad`` must be strictly increasing in both arguments; ``q_dc`` must be
    non-increasing in MSE and non-decreasing in PA. Every adjacent grid pair
    that breaks a rule is listed; grid points where a utility cannot be
    evaluated are listed in ``errors``.
    """
    mse, pa = default_grid(pair.pa_floor) if grid is None else grid
    mse = np.asarray(mse, dtype=float)
    pa = np.asarray(pa, dtype=float)
    if mse.size < 64 or pa.size < 64:
        raise ValueError("grid needs at least 64 points along each axis")
    if np.any(np.diff(mse) <= 0) or np.any(np.diff(pa) <= 0):
        raise ValueError("grid axes must be strictly increasing")
    mm, pp = np.meshgrid(mse, pa, indexing="ij")

    violations = []
    errors = []
    rules = (
        ("q_ad", pair.q_ad, 1, 1, True),
        ("q_dc", pair.q_dc, -1, 1, False),
    )
    for which, expr, sign_mse, sign_pa, strict in rules:
        values, ok = eval_grid(expr, mm, pp)
        for i, j in zip(*np.nonzero(~ok)):
            errors.append((which, (mse[i], pa[j]), to_string(expr)))
        for axis, sign, d in (("MSE", sign_mse, 0), ("PA", sign_pa, 1)):
            step = sign * np.diff(values, axis=d)
            bad = step <= 0 if strict else step < 0
            bad &= ~np.isnan(step)
            for i, j in zip(*np.nonzero(bad)):
                i2, j2 = (i + 1, j) if d == 0 else (i, j + 1)
                violations.append(
                    Violation(
                        which,
                        axis,
                        (float(mse[i]), float(pa[j])),
                        (float(mse[i2]), float(pa[j2])),
                        (float(values[i, j]), float(values[i2, j2])),
                    )
                )
    return MonotonicityReport(
        tuple(violations),
        float(pa[0]),
        (float(mse[0]), float(mse[-1])),
        (mse.size, pa.size),
        tuple(errors),
    )


__all__ = [
    "GameConfig",
    "UtilityPair",
    "SymmetricAtoms",
    "OpaqueSampler",
    "AdversaryStrategy",
    "EquilibriumPoint",
    "MonotonicityReport",
    "Violation",
    "validate_monotonicity",
    "default_grid",
    "UtilityDomainError",
]
