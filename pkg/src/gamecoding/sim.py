"""Monte-Carlo play of the repetition game.

Each round consumes one row of ``ell + 3`` uniforms from a counter-based
(Philox) stream: ``[u, n_1 .. n_ell, atom, sign]``. Rounds are grouped in
fixed blocks of ``BLOCK`` rows and block ``b`` of seed ``s`` always comes from
``substream(s, b)``, so results do not depend on how blocks are scheduled.

Reports are handled relative to ``u`` (``y - u`` is the node's noise). The
range test and the midrange estimator are translation-equivariant, so this
is the exact outcome of the game, and it keeps small noises from being
absorbed into a large ``u`` by rounding.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curves import KernelContext, mixture_pa_mse
from .model import AdversaryStrategy, GameConfig, SymmetricAtoms

BLOCK = 4096


def substream(seed, *index) -> np.random.Generator:
    """Independent Philox generator keyed by ``(seed, *index)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, index)])))


@dataclass(frozen=True)
class RoundOutcome:
    accepted: bool
    estimate_error: float | None  # u_hat - u, only when accepted
    spread: float


@dataclass(frozen=True)
class EmpiricalStats:
    rounds: int
    accepted_count: int
    pa_hat: float
    mse_hat: float | None
    pa_stderr: float
    mse_stderr: float | None
    seed: int


def _play_rows(config: GameConfig, strategy: AdversaryStrategy, adversary_count, rows):
    ell = config.ell
    u = config.m_half * (2 * rows[:, 0] - 1)
    honest = config.delta * (2 * rows[:, 1 : 1 + ell] - 1)
    offset = strategy.sample(rows[:, ell + 1], rows[:, ell + 2])
    noise = np.concatenate([honest, np.repeat(offset[:, None], adversary_count, axis=1)], axis=1)
    hi = noise.max(axis=1)
    lo = noise.min(axis=1)
    spread = hi - lo
    accepted = spread <= config.eta * config.delta
    error = (hi + lo) / 2
    return u, accepted, error, spread


def play_round(config: GameConfig, strategy: AdversaryStrategy, adversary_count: int, rng) -> RoundOutcome:
    """One round: all ``adversary_count`` adversarial nodes report the same
    offset drawn from ``strategy``."""
    if adversary_count < 1:
        raise ValueError("adversary_count must be >= 1")
    rows = rng.random((1, config.ell + 3))
    _, accepted, error, spread = _play_rows(config, strategy, adversary_count, rows)
    ok = bool(accepted[0])
    return RoundOutcome(ok, float(error[0]) if ok else None, float(spread[0]))


def _block_rows(config, seed, b, rounds):
    n = min(BLOCK, rounds - b * BLOCK)
    return substream(seed, b).random((n, config.ell + 3))


def simulate_rounds(config, strategy, adversary_count, rounds, seed):
    """Per-round ``(accepted, error, spread)`` arrays; ``error`` is NaN on
    rejected rounds."""
    if adversary_count < 1 or rounds < 1:
        raise ValueError("adversary_count and rounds must be >= 1")
    acc, err, spr = [], [], []
    for b in range(math.ceil(rounds / BLOCK)):
        _, a, e, s = _play_rows(config, strategy, adversary_count, _block_rows(config, seed, b, rounds))
        acc.append(a)
        err.append(np.where(a, e, np.nan))
        spr.append(s)
    return np.concatenate(acc), np.concatenate(err), np.concatenate(spr)


def _block_sums(config, strategy, adversary_count, seed, b, rounds):
    _, a, e, _ = _play_rows(config, strategy, adversary_count, _block_rows(config, seed, b, rounds))
    sq = e[a] ** 2
    return a.size, int(a.sum()), float(sq.sum()), float((sq * sq).sum())


def monte_carlo(
    config: GameConfig, strategy: AdversaryStrategy, adversary_count: int, rounds: int, seed: int, workers: int = 1
) -> EmpiricalStats:
    """Estimate PA and the conditional MSE over ``rounds`` independent rounds.

    Output is bit-identical for a given seed whatever ``workers`` is.
    """
    if adversary_count < 1 or rounds < 1:
        raise ValueError("adversary_count and rounds must be >= 1")
    blocks = range(math.ceil(rounds / BLOCK))

    def run(b):
        return _block_sums(config, strategy, adversary_count, seed, b, rounds)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]

    n = sum(p[0] for p in parts)
    acc = sum(p[1] for p in parts)
    s2 = math.fsum(p[2] for p in parts)
    s4 = math.fsum(p[3] for p in parts)
    pa = acc / n
    pa_se = math.sqrt(pa * (1 - pa) / n)
    if acc == 0:
        return EmpiricalStats(n, 0, 0.0, None, pa_se, None, seed)
    mse = s2 / acc
    var = (s4 - acc * mse * mse) / (acc - 1) if acc > 1 else 0.0
    return EmpiricalStats(n, acc, pa, mse, pa_se, math.sqrt(max(var, 0.0) / acc), seed)


def sybil_compare(config, strategy, clone_counts, rounds, seed):
    """Same seed for every clone count, so all runs share their draws."""
    counts = [int(c) for c in clone_counts]
    if not counts:
        raise ValueError("clone_counts is empty")
    return [(c, monte_carlo(config, strategy, c, rounds, seed)) for c in counts]


@dataclass(frozen=True)
class CheckReport:
    predicted_pa: float
    predicted_mse: float | None
    pa_z: float
    mse_z: float | None
    passed: bool
    threshold: float = 4.0

    @property
    def mse_absent(self):
        return self.predicted_mse is None


def _z(observed, predicted, se):
    if se > 0:
        return (observed - predicted) / se
    return 0.0 if math.isclose(observed, predicted, rel_tol=1e-12, abs_tol=1e-15) else math.inf


def analytic_check(ctx: KernelContext, strategy: SymmetricAtoms, stats: EmpiricalStats, threshold=4.0) -> CheckReport:
    """Compare simulated (PA, MSE) with the closed-form mixture prediction."""
    pa, mse = mixture_pa_mse(ctx, strategy)
    pa_z = _z(stats.pa_hat, pa, stats.pa_stderr)
    if mse is None:
        return CheckReport(pa, None, pa_z, None, stats.accepted_count == 0, threshold)
    if stats.mse_hat is None:
        return CheckReport(pa, mse, pa_z, None, False, threshold)
    mse_z = _z(stats.mse_hat, mse, stats.mse_stderr)
    return CheckReport(pa, mse, pa_z, mse_z, abs(pa_z) <= threshold and abs(mse_z) <= threshold, threshold)
