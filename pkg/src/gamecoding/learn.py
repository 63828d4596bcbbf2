"""Learning the threshold when the adversary's utility is hidden.

The data collector sees only accept/reject bits. Because every equilibrium
outcome lies on the public curve ``MSE = c_eta(PA)``, an acceptance-rate
estimate is enough to score a candidate threshold with its own utility.

``lip_alpha`` is the Lipschitz constant of ``alpha -> q_dc(c_eta(alpha), alpha)``;
it is unrelated to the honest-node count ``ell``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .curves import DEFAULT_POINTS, KernelContext, c_curve
from .equilibrium import adversary_best_response, optimal_noise, solve_eta
from .model import GameConfig, SymmetricAtoms, UtilityPair
from .sim import _play_rows, substream
from .utility import Expr, eval_grid

CHUNK = 2048


class CurveFamily:
    """Lazily built ``c_eta`` curves for fixed ``(ell, delta)``."""

    def __init__(self, ell=1, delta=1.0, points=DEFAULT_POINTS):
        self.ell = ell
        self.delta = delta
        self.points = points
        self._cache = {}

    def __call__(self, eta):
        eta = float(eta)
        if eta not in self._cache:
            self._cache[eta] = c_curve(KernelContext(self.ell, self.delta, eta), points=self.points)
        return self._cache[eta]


class MyopicOracle:
    """Simulated adversary that best-responds to each committed threshold.

    Only the accept bit of each round leaves the oracle. Best responses are
    cached per ``eta``; when the best response set has several points the
    smallest acceptance probability is played.
    """

    def __init__(self, pair: UtilityPair, ell=1, delta=1.0, curves: CurveFamily | None = None, m_half=None):
        self.pair = pair
        self.ell = ell
        self.delta = delta
        self.m_half = 1e3 * delta if m_half is None else m_half
        self.curves = CurveFamily(ell, delta) if curves is None else curves
        self._cache = {}

    def _response(self, eta):
        eta = float(eta)
        if eta not in self._cache:
            curve = self.curves(eta)
            br = adversary_best_response(curve, self.pair.q_ad)
            alpha = br.alphas[0]
            if alpha > 0:
                noise = optimal_noise(curve, alpha)
            else:
                noise = SymmetricAtoms((curve.ctx.z_range[1],), (0.5,))
            self._cache[eta] = (alpha, noise)
        return self._cache[eta]

    def true_alpha(self, eta):
        return self._response(eta)[0]

    def observe(self, eta, rng, size=1):
        """Commit to ``eta`` for ``size`` rounds; returns the accept bits."""
        if not eta >= 2:
            raise ValueError(f"eta must be >= 2, got {eta!r}")
        _, noise = self._response(eta)
        config = GameConfig(self.ell, self.delta, self.m_half, float(eta))
        rows = rng.random((size, self.ell + 3))
        _, accepted, _, _ = _play_rows(config, noise, 1, rows)
        return accepted


@dataclass(frozen=True)
class LearnerConfig:
    a: float
    b: float
    delta: float
    lam: float
    big_l: float
    lip_alpha: float
    d: float = 0.25
    n_override: int | None = None
    k_override: int | None = None

    def __post_init__(self):
        if not self.a >= 2:
            raise ValueError(f"a must be >= 2, got {self.a!r}")
        if not self.b > self.a:
            raise ValueError(f"b must exceed a, got a={self.a!r} b={self.b!r}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        for name in ("lam", "big_l", "lip_alpha", "d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.n_override is not None and self.n_override < 0:
            raise ValueError("n_override must be >= 0")
        if self.k_override is not None and self.k_override < 1:
            raise ValueError("k_override must be >= 1")

    @property
    def n_bound(self):
        return (self.b - self.a) * max(2 * self.big_l / self.lam, 1 / self.d)

    @property
    def n(self):
        if self.n_override is not None:
            return self.n_override
        return math.floor(self.n_bound) + 1

    @property
    def k_bound(self):
        return 8 * self.lip_alpha**2 / self.lam**2 * math.log(2 * (self.n + 1) / self.delta)

    @property
    def k(self):
        if self.k_override is not None:
            return self.k_override
        return math.floor(self.k_bound) + 1

    def candidates(self):
        n = self.n
        if n == 0:
            return np.array([float(self.a)])
        return self.a + (self.b - self.a) * np.arange(n + 1) / n

    def radius(self, r):
        """Elimination radius after ``r`` rounds."""
        return 2 * self.lip_alpha * math.sqrt(math.log(4 * (self.n + 1) / self.delta) / (2 * r))


@dataclass(frozen=True)
class CandidateLog:
    eta: float
    commits: int
    accepts: int
    alpha_hat: float
    u_hat: float
    eliminated_at_round: int | None = None


@dataclass(frozen=True)
class TrialLog:
    algorithm: str
    candidates: tuple
    final_choice: float
    n: int
    k: int
    n_bound: float
    k_bound: float
    d: float
    lip_alpha: float
    seed: int
    # (round, candidate, alpha_hat, u_hat, eliminated) rows, algorithm4 only
    trace: tuple = field(default=(), repr=False)

    @property
    def eliminated(self):
        return [c for c in self.candidates if c.eliminated_at_round is not None]


def utility_estimate(curve, q_dc: Expr, alpha_hat):
    """``q_dc(c(alpha_hat), alpha_hat)``; ``alpha_hat = 0`` uses the curve's
    limit MSE, and undefined values score ``-inf``."""
    a = np.asarray(alpha_hat, dtype=float)
    values, ok = eval_grid(q_dc, np.asarray(curve.c(a)), a)
    out = np.where(ok, values, -np.inf)
    return float(out) if np.ndim(alpha_hat) == 0 else out


def estimate_lip_alpha(curves, q_dc: Expr, etas):
    """Largest finite-difference slope of ``alpha -> q_dc(c(alpha), alpha)``
    over the curves' alpha grids."""
    slope = 0.0
    for eta in etas:
        curve = curves(eta)
        values, ok = eval_grid(q_dc, curve.c_values, curve.alpha_grid)
        both = ok[1:] & ok[:-1]
        if np.any(both):
            s = np.abs(np.diff(values))[both] / np.diff(curve.alpha_grid)[both]
            slope = max(slope, float(s.max()))
    return slope


def _base_log(name, cfg, etas, logs, choice, seed, trace=()):
    return TrialLog(
        name, tuple(logs), float(choice), cfg.n, cfg.k, cfg.n_bound, cfg.k_bound, cfg.d, cfg.lip_alpha, seed, tuple(trace)
    )


def algorithm3(cfg: LearnerConfig, q_dc: Expr, curves, oracle, seed=0):
    """Commit to every grid candidate ``k`` times, then pick the best
    estimated utility (smallest ``eta`` on ties)."""
    etas = cfg.candidates()
    k = cfg.k
    logs = []
    for i, eta in enumerate(etas):
        accepts = int(oracle.observe(eta, substream(seed, i), k).sum())
        alpha_hat = accepts / k
        logs.append(CandidateLog(float(eta), k, accepts, alpha_hat, utility_estimate(curves(eta), q_dc, alpha_hat)))
    best = int(np.argmax([c.u_hat for c in logs]))
    return float(etas[best]), _base_log("algorithm3", cfg, etas, logs, etas[best], seed)


def algorithm4(cfg: LearnerConfig, q_dc: Expr, curves, oracle, seed=0, trace=False):
    """Round-based version of :func:`algorithm3` that permanently drops any
    candidate whose estimate trails the leader by more than the confidence
    radius of the current round."""
    etas = cfg.candidates()
    k = cfg.k
    n_cand = etas.size
    streams = [substream(seed, i) for i in range(n_cand)]
    accepts = np.zeros(n_cand, dtype=np.int64)
    u_hat = np.full(n_cand, -np.inf)
    alive = np.ones(n_cand, dtype=bool)
    elim_round = [None] * n_cand
    commits = np.zeros(n_cand, dtype=np.int64)
    rows = []

    for r0 in range(0, k, CHUNK):
        m = min(CHUNK, k - r0)
        rounds = np.arange(r0 + 1, r0 + m + 1)
        radii = np.array([cfg.radius(int(r)) for r in rounds])
        live = np.nonzero(alive)[0]
        cum = np.zeros((n_cand, m), dtype=np.int64)
        u_tab = np.full((n_cand, m), -np.inf)
        for i in live:
            bits = oracle.observe(etas[i], streams[i], m)
            cum[i] = accepts[i] + np.cumsum(bits)
            u_tab[i] = utility_estimate(curves(etas[i]), q_dc, cum[i] / rounds)
        # jump from one elimination event to the next inside the chunk
        j0 = 0
        while j0 < m:
            live = np.nonzero(alive)[0]
            sub = u_tab[live, j0:]
            gaps = sub.max(axis=0) - sub > radii[j0:]
            hit = np.nonzero(gaps.any(axis=0))[0]
            j1 = j0 + int(hit[0]) if hit.size else m - 1
            drop = live[gaps[:, j1 - j0]] if hit.size else live[:0]
            if trace:
                for j in range(j0, j1 + 1):
                    r = int(rounds[j])
                    rows.extend(
                        (r, int(i), cum[i, j] / r, float(u_tab[i, j]), bool(j == j1 and i in drop)) for i in live
                    )
            commits[live] = rounds[j1]
            accepts[live] = cum[live, j1]
            u_hat[live] = u_tab[live, j1]
            alive[drop] = False
            for i in drop:
                elim_round[i] = int(rounds[j1])
            j0 = j1 + 1

    live = np.nonzero(alive)[0]
    best = int(live[np.argmax(u_hat[live])])
    logs = [
        CandidateLog(float(etas[i]), int(commits[i]), int(accepts[i]), accepts[i] / commits[i], float(u_hat[i]), elim_round[i])
        for i in range(n_cand)
    ]
    return float(etas[best]), _base_log("algorithm4", cfg, etas, logs, etas[best], seed, rows)


@dataclass(frozen=True)
class LearningInstance:
    pair: UtilityPair
    cfg: LearnerConfig
    ell: int = 1
    delta: float = 1.0
    points: int = DEFAULT_POINTS


@dataclass(frozen=True)
class LearnerEvaluation:
    algorithm: str
    repetitions: int
    failures: int
    failure_rate: float
    ci95: tuple  # Clopper-Pearson interval for the failure probability
    allowed_failures: int  # 95% quantile of Binomial(repetitions, delta)
    u_star: float
    utilities: dict  # eta -> analytic DC utility on the candidate grid
    choices: tuple
    eliminations: tuple  # number of candidates eliminated per run (algorithm4)
    early_eliminations: tuple  # eliminated before the final round, per run

    @property
    def passed(self):
        return self.failures <= self.allowed_failures


def analytic_utilities(instance: LearningInstance, curves=None):
    """DC utility at the adversary's true best response, per grid candidate."""
    out = {}
    for eta in instance.cfg.candidates():
        _, rec = solve_eta(float(eta), instance.pair, instance.ell, instance.delta, instance.points)
        out[float(eta)] = rec.dc_utility
    return out


def evaluate_learner(instance: LearningInstance, repetitions=50, seeds=None, algorithm="algorithm3", utilities=None):
    """Empirical failure rate of a learner against the accuracy target ``lam``."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    seeds = list(range(repetitions)) if seeds is None else list(seeds)
    if len(seeds) != repetitions:
        raise ValueError("need one seed per repetition")
    learner = {"algorithm3": algorithm3, "algorithm4": algorithm4}[algorithm]
    cfg = instance.cfg
    utilities = analytic_utilities(instance) if utilities is None else utilities
    u_star = max(utilities.values())
    curves = CurveFamily(instance.ell, instance.delta, instance.points)
    oracle = MyopicOracle(instance.pair, instance.ell, instance.delta, curves)

    failures = 0
    choices, elims, early = [], [], []
    for seed in seeds:
        eta_hat, log = learner(cfg, instance.pair.q_dc, curves, oracle, seed)
        choices.append(eta_hat)
        failures += u_star - utilities[eta_hat] > cfg.lam
        rounds = [c.eliminated_at_round for c in log.eliminated]
        elims.append(len(rounds))
        early.append(sum(r < cfg.k for r in rounds))
    ci = stats.binomtest(failures, repetitions).proportion_ci(0.95, method="exact")
    allowed = int(stats.binom.ppf(0.95, repetitions, cfg.delta))
    return LearnerEvaluation(
        algorithm,
        repetitions,
        failures,
        failures / repetitions,
        (ci.low, ci.high),
        allowed,
        u_star,
        utilities,
        tuple(choices),
        tuple(elims),
        tuple(early),
    )
