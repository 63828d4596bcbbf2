"""Command-line front end: ``gamecoding <command> --config run.json``.

Commands: curve, equilibrium, noise, simulate, sybil, learn, validate-utility.
Exit status is 0 on success, 1 when a computation fails and 2 when the
configuration is invalid. Outputs are written only after every result has
been computed; numbers are printed with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curves, equilibrium, learn, model, sim
from .utility import UtilitySyntaxError, parse_utility, to_string

COMMANDS = ("curve", "equilibrium", "noise", "simulate", "sybil", "learn", "validate-utility")


class ConfigError(ValueError):
    def __init__(self, fieldname, message):
        super().__init__(f"{fieldname}: {message}")
        self.field = fieldname


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def dump_json(obj, indent=0):
    """JSON text with fixed 17-significant-digit floats (non-finite floats
    become strings)."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dump_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else json.dumps(fmt(obj))
    return json.dumps(str(obj))


def to_csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


@dataclass
class RunConfig:
    ell: int = 1
    big_delta: float = 1.0
    m_half: float = 1000.0
    eta_grid: list = field(default_factory=lambda: [2 + 0.25 * i for i in range(25)])
    alpha_grid: list | None = None
    points: int = curves.DEFAULT_POINTS
    q_dc: object = None
    q_ad: object = None
    pa_floor: float = 1e-3
    eta: float | None = None
    alpha: float | None = None
    strategy: object = "equilibrium"
    rounds: int = 1_000_000
    clones: list = field(default_factory=lambda: [1, 2, 5, 10])
    adversary_count: int = 1
    seed: int = 0
    learner: dict = field(default_factory=dict)
    ell_values: list | None = None
    out: str = "out"
    format: str = "both"

    @property
    def pair(self):
        return model.UtilityPair(self.q_dc, self.q_ad, self.pa_floor)


def _grid(value, name):
    if isinstance(value, dict):
        try:
            start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(name, "range needs numeric start, stop and step") from None
        if step <= 0 or stop < start:
            raise ConfigError(name, "range needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return [start + step * i for i in range(count)]
    if isinstance(value, str):
        if ":" in value:
            parts = value.split(":")
            if len(parts) != 3:
                raise ConfigError(name, "expected start:stop:step")
            return _grid(dict(zip(("start", "stop", "step"), parts)), name)
        value = [v for v in value.split(",") if v.strip()]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(name, f"not a list of numbers: {value!r}") from None


def _number(raw, name, kind=float, lo=None, hi=None, lo_open=False):
    try:
        v = kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {kind.__name__}, got {raw!r}") from None
    if kind is int and float(raw) != v:
        raise ConfigError(name, f"expected an integer, got {raw!r}")
    if kind is float and not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(name, f"must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and v > hi:
        raise ConfigError(name, f"must be <= {hi}, got {v!r}")
    return v


def _utility(raw, name):
    if raw is None:
        return None
    try:
        return parse_utility(str(raw))
    except UtilitySyntaxError as exc:
        raise ConfigError(name, str(exc)) from None


def _strategy(raw):
    if raw == "equilibrium":
        return raw
    if not isinstance(raw, dict):
        raise ConfigError("strategy", "expected 'equilibrium', {'atoms': ...} or {'sampler': ...}")
    try:
        if "atoms" in raw:
            return model.SymmetricAtoms.from_pairs(raw["atoms"])
        if "sampler" in raw:
            return model.OpaqueSampler(raw["sampler"], dict(raw.get("params", {})))
    except (TypeError, ValueError) as exc:
        raise ConfigError("strategy", str(exc)) from None
    raise ConfigError("strategy", "expected 'atoms' or 'sampler'")


LEARNER_KEYS = {"a", "b", "delta", "lambda", "big_l", "lip_alpha", "d", "n_override", "k_override", "algorithm", "repetitions"}
KEYS = {
    "ell", "Delta", "m_half", "eta_grid", "alpha_grid", "points", "q_dc", "q_ad", "pa_floor", "eta", "alpha",
    "strategy", "rounds", "clones", "adversary_count", "seed", "learner", "ell_values", "out", "format",
}


def load_config(raw: dict) -> RunConfig:
    """Validate a raw config mapping; raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    unknown = set(raw) - KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    cfg = RunConfig()
    cfg.ell = _number(raw.get("ell", cfg.ell), "ell", int, lo=1)
    cfg.big_delta = _number(raw.get("Delta", cfg.big_delta), "Delta", lo=0, lo_open=True)
    cfg.m_half = _number(raw.get("m_half", cfg.m_half), "m_half", lo=0, lo_open=True)
    if cfg.big_delta / cfg.m_half > model.MAX_DELTA_RATIO:
        raise ConfigError("m_half", f"Delta / m_half must be <= {model.MAX_DELTA_RATIO}")
    cfg.eta_grid = _grid(raw.get("eta_grid", cfg.eta_grid), "eta_grid")
    if not cfg.eta_grid:
        raise ConfigError("eta_grid", "must not be empty")
    if any(e < 2 for e in cfg.eta_grid):
        raise ConfigError("eta_grid", "every eta must be >= 2")
    cfg.points = _number(raw.get("points", cfg.points), "points", int, lo=3)
    if raw.get("alpha_grid") is not None:
        cfg.alpha_grid = _grid(raw["alpha_grid"], "alpha_grid")
        if not cfg.alpha_grid or any(not 0 < a <= 1 for a in cfg.alpha_grid):
            raise ConfigError("alpha_grid", "must be non-empty and inside (0, 1]")
        if any(b <= a for a, b in zip(cfg.alpha_grid, cfg.alpha_grid[1:])):
            raise ConfigError("alpha_grid", "must be strictly increasing")
    cfg.q_dc = _utility(raw.get("q_dc"), "q_dc")
    cfg.q_ad = _utility(raw.get("q_ad"), "q_ad")
    cfg.pa_floor = _number(raw.get("pa_floor", cfg.pa_floor), "pa_floor", lo=0, hi=1, lo_open=True)
    if raw.get("eta") is not None:
        cfg.eta = _number(raw["eta"], "eta", lo=2)
    if raw.get("alpha") is not None:
        cfg.alpha = _number(raw["alpha"], "alpha", lo=0, hi=1, lo_open=True)
    cfg.strategy = _strategy(raw.get("strategy", cfg.strategy))
    cfg.rounds = _number(raw.get("rounds", cfg.rounds), "rounds", int, lo=1)
    clones = raw.get("clones", cfg.clones)
    if isinstance(clones, str):
        clones = [c for c in clones.split(",") if c.strip()]
    if not isinstance(clones, (list, tuple)) or not clones:
        raise ConfigError("clones", "must be a non-empty list")
    cfg.clones = [_number(c, "clones", int, lo=1) for c in clones]
    cfg.adversary_count = _number(raw.get("adversary_count", 1), "adversary_count", int, lo=1)
    cfg.seed = _number(raw.get("seed", 0), "seed", int, lo=0, hi=2**64 - 1)
    if raw.get("ell_values") is not None:
        cfg.ell_values = [_number(v, "ell_values", int, lo=1) for v in raw["ell_values"]]
    cfg.out = str(raw.get("out", cfg.out))
    cfg.format = raw.get("format", cfg.format)
    if cfg.format not in ("csv", "json", "both"):
        raise ConfigError("format", "must be csv, json or both")

    lrn = raw.get("learner", {}) or {}
    if not isinstance(lrn, dict):
        raise ConfigError("learner", "must be an object")
    unknown = set(lrn) - LEARNER_KEYS
    if unknown:
        raise ConfigError("learner." + sorted(unknown)[0], "unknown field")
    cfg.learner = dict(lrn)
    return cfg


def _need_pair(cfg, need_dc=True):
    if cfg.q_ad is None:
        raise ConfigError("q_ad", "required")
    if need_dc and cfg.q_dc is None:
        raise ConfigError("q_dc", "required")


def _learner_config(cfg: RunConfig, lip_alpha):
    lrn = cfg.learner
    try:
        return learn.LearnerConfig(
            a=float(lrn.get("a", min(cfg.eta_grid))),
            b=float(lrn.get("b", max(cfg.eta_grid))),
            delta=float(lrn.get("delta", 0.1)),
            lam=float(lrn["lambda"]),
            big_l=float(lrn.get("big_l", 1.0)),
            lip_alpha=float(lip_alpha),
            d=float(lrn.get("d", 0.25)),
            n_override=None if lrn.get("n_override") is None else int(lrn["n_override"]),
            k_override=None if lrn.get("k_override") is None else int(lrn["k_override"]),
        )
    except KeyError:
        raise ConfigError("learner.lambda", "required") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("learner", str(exc)) from None


def _validate_command(command, cfg: RunConfig):
    """Checks that need no computation, run before anything is solved."""
    if command in ("equilibrium", "learn"):
        _need_pair(cfg)
    if command == "validate-utility":
        _need_pair(cfg)
    if command == "noise":
        if cfg.eta is None or cfg.alpha is None:
            _need_pair(cfg)
    if command in ("simulate", "sybil"):
        if cfg.strategy == "equilibrium":
            _need_pair(cfg)
        elif cfg.eta is None:
            raise ConfigError("eta", "required with an explicit strategy")
        model.GameConfig(cfg.ell, cfg.big_delta, cfg.m_half, cfg.eta or 2.0)
    if command == "learn":
        algo = cfg.learner.get("algorithm", "algorithm4")
        if algo not in ("algorithm3", "algorithm4"):
            raise ConfigError("learner.algorithm", "must be algorithm3 or algorithm4")
        reps = cfg.learner.get("repetitions", 1)
        _number(reps, "learner.repetitions", int, lo=1)
        lip = cfg.learner.get("lip_alpha")
        _learner_config(cfg, 1.0 if lip is None else lip)


# -- commands ---------------------------------------------------------------


def _curve_rows(curve):
    a = curve.alpha_grid
    h = np.asarray(curves.spike_mse_curve(curve.ctx, a))
    hs = np.asarray(curve.envelope(a))
    contact = np.array([curve.segment_containing(x) is None for x in a])
    return a, h, hs, np.asarray(curve.c_values), contact


def cmd_curve(cfg: RunConfig):
    outputs = {}
    tables = []
    for eta in cfg.eta_grid:
        curve = curves.c_curve(curves.KernelContext(cfg.ell, cfg.big_delta, eta), cfg.alpha_grid, points=cfg.points)
        a, h, hs, c, contact = _curve_rows(curve)
        outputs[f"curve_eta_{fmt(eta)}.csv"] = to_csv(("alpha", "h", "h_star", "c", "contact"), zip(a, h, hs, c, contact))
        tables.append(
            {
                "eta": eta,
                "ell": cfg.ell,
                "Delta": cfg.big_delta,
                "c_limit": curve.c_limit,
                "segments": [list(s) for s in curve.samples.segments],
                "alpha": a,
                "h": h,
                "h_star": hs,
                "c": c,
                "contact": contact.tolist(),
            }
        )
    outputs["curves.json"] = dump_json({"curves": tables}) + "\n"
    return outputs


def _atoms(noise):
    return [[z, b] for z, b in noise.pairs()]


def _solution_json(sol, cfg):
    p = sol.point
    return {
        "ell": cfg.ell,
        "Delta": cfg.big_delta,
        "q_dc": to_string(cfg.q_dc),
        "q_ad": to_string(cfg.q_ad),
        "eta_star": p.eta_star,
        "alpha": p.alpha,
        "mse": p.mse,
        "dc_utility": p.dc_utility,
        "ad_utility": p.ad_utility,
        "boundary": p.boundary,
        "noise": _atoms(p.noise),
        "eta_ties": list(sol.eta_ties),
        "per_eta": [
            {
                "eta": r.eta,
                "best_responses": list(r.best_response.alphas),
                "ad_utility": r.best_response.ad_utility,
                "boundary": r.best_response.boundary,
                "alpha": r.alpha,
                "mse": r.mse,
                "dc_utility": r.dc_utility,
            }
            for r in sol.per_eta
        ],
    }


def _solve(cfg):
    return equilibrium.stackelberg_solve(cfg.eta_grid, cfg.pair, cfg.ell, cfg.big_delta, cfg.points)


def cmd_equilibrium(cfg: RunConfig):
    sol = _solve(cfg)
    p = sol.point
    summary = to_csv(
        ("eta_star", "alpha", "mse", "dc_utility", "ad_utility", "boundary", "tied_etas"),
        [(p.eta_star, p.alpha, p.mse, p.dc_utility, p.ad_utility, p.boundary, len(sol.eta_ties))],
    )
    table = to_csv(
        ("eta", "alpha", "mse", "dc_utility", "ad_utility", "best_responses", "boundary", "eta_star"),
        [
            (r.eta, r.alpha, r.mse, r.dc_utility, r.best_response.ad_utility, len(r.best_response.alphas),
             r.best_response.boundary, r.eta == p.eta_star)
            for r in sol.per_eta
        ],
    )
    return {
        "equilibrium.json": dump_json(_solution_json(sol, cfg)) + "\n",
        "equilibrium_summary.csv": summary,
        "equilibrium_table.csv": table,
    }


def cmd_noise(cfg: RunConfig):
    if cfg.eta is not None and cfg.alpha is not None:
        eta, alpha, boundary = cfg.eta, cfg.alpha, False
    else:
        p = _solve(cfg).point
        eta, alpha, boundary = p.eta_star, p.alpha, p.boundary
    curve = curves.c_curve(curves.KernelContext(cfg.ell, cfg.big_delta, eta), points=cfg.points)
    if boundary:
        noise = equilibrium._limit_noise(curve)
    else:
        noise = equilibrium.optimal_noise(curve, alpha)
    pa, mse = curves.mixture_pa_mse(curve.ctx, noise)
    target = float(curve.c(alpha))
    doc = {
        "eta": eta,
        "alpha": alpha,
        "boundary": boundary,
        "atoms": _atoms(noise),
        "predicted_pa": pa,
        "predicted_mse": mse,
        "c_alpha": target,
        "pa_rel_error": abs(pa - alpha) / alpha if alpha > 0 else abs(pa),
        "mse_rel_error": None if mse is None else abs(mse - target) / target,
    }
    rows = [(z, b) for z, b in noise.pairs()]
    return {"noise.json": dump_json(doc) + "\n", "noise.csv": to_csv(("offset", "weight"), rows)}


def _sim_setup(cfg):
    if cfg.strategy == "equilibrium":
        p = _solve(cfg).point
        eta = cfg.eta if cfg.eta is not None else p.eta_star
        strategy = p.noise
        if cfg.eta is not None and cfg.eta != p.eta_star:
            curve = curves.c_curve(curves.KernelContext(cfg.ell, cfg.big_delta, eta), points=cfg.points)
            br = equilibrium.adversary_best_response(curve, cfg.q_ad)
            a = br.alphas[0]
            strategy = equilibrium.optimal_noise(curve, a) if a > 0 else equilibrium._limit_noise(curve)
    else:
        eta, strategy = cfg.eta, cfg.strategy
    return model.GameConfig(cfg.ell, cfg.big_delta, cfg.m_half, eta), strategy


STATS_COLUMNS = ("rounds", "accepted_count", "pa_hat", "mse_hat", "pa_stderr", "mse_stderr", "seed")


def _stats_row(st):
    return (st.rounds, st.accepted_count, st.pa_hat, st.mse_hat, st.pa_stderr, st.mse_stderr, st.seed)


def _in_domain(game, strategy):
    if not isinstance(strategy, model.SymmetricAtoms):
        return False
    lo, hi = curves.KernelContext(game.ell, game.delta, game.eta).z_range
    return all(lo <= z <= hi for z in strategy.offsets)


def cmd_simulate(cfg: RunConfig):
    game, strategy = _sim_setup(cfg)
    st = sim.monte_carlo(game, strategy, cfg.adversary_count, cfg.rounds, cfg.seed)
    doc = {"eta": game.eta, "ell": game.ell, "Delta": game.delta, "m_half": game.m_half,
           "adversary_count": cfg.adversary_count, "stats": dict(zip(STATS_COLUMNS, _stats_row(st)))}
    header = ("eta",) + STATS_COLUMNS
    row = (game.eta,) + _stats_row(st)
    if _in_domain(game, strategy):
        rep = sim.analytic_check(curves.KernelContext(game.ell, game.delta, game.eta), strategy, st)
        doc["check"] = {"predicted_pa": rep.predicted_pa, "predicted_mse": rep.predicted_mse,
                        "pa_z": rep.pa_z, "mse_z": rep.mse_z, "passed": rep.passed}
        header += ("predicted_pa", "predicted_mse", "pa_z", "mse_z", "check_passed")
        row += (rep.predicted_pa, rep.predicted_mse, rep.pa_z, rep.mse_z, rep.passed)
    if isinstance(strategy, model.SymmetricAtoms):
        doc["atoms"] = _atoms(strategy)
    return {"simulate.json": dump_json(doc) + "\n", "simulate.csv": to_csv(header, [row])}


def cmd_sybil(cfg: RunConfig):
    game, strategy = _sim_setup(cfg)
    results = sim.sybil_compare(game, strategy, cfg.clones, cfg.rounds, cfg.seed)
    rows = [(c,) + _stats_row(st) for c, st in results]
    identical = all(st == results[0][1] for _, st in results)
    doc = {"eta": game.eta, "identical": identical,
           "runs": [dict(zip(("clones",) + STATS_COLUMNS, r)) for r in rows]}
    return {"sybil.json": dump_json(doc) + "\n", "sybil.csv": to_csv(("clones",) + STATS_COLUMNS, rows)}


def _log_json(log):
    return {
        "algorithm": log.algorithm,
        "final_choice": log.final_choice,
        "n": log.n,
        "k": log.k,
        "n_bound": log.n_bound,
        "k_bound": log.k_bound,
        "d": log.d,
        "lip_alpha": log.lip_alpha,
        "seed": log.seed,
        "candidates": [
            {"eta": c.eta, "commits": c.commits, "accepts": c.accepts, "alpha_hat": c.alpha_hat,
             "u_hat": c.u_hat, "eliminated_at_round": c.eliminated_at_round}
            for c in log.candidates
        ],
    }


def cmd_learn(cfg: RunConfig):
    family = learn.CurveFamily(cfg.ell, cfg.big_delta, cfg.points)
    lip = cfg.learner.get("lip_alpha")
    probe = _learner_config(cfg, 1.0)
    lip_estimated = lip is None
    if lip_estimated:
        lip = learn.estimate_lip_alpha(family, cfg.q_dc, probe.candidates())
    lcfg = _learner_config(cfg, lip)
    algo = cfg.learner.get("algorithm", "algorithm4")
    reps = int(cfg.learner.get("repetitions", 1))
    oracle = learn.MyopicOracle(cfg.pair, cfg.ell, cfg.big_delta, family)
    fn = learn.algorithm3 if algo == "algorithm3" else learn.algorithm4
    kwargs = {"trace": True} if algo == "algorithm4" else {}
    _, log = fn(lcfg, cfg.q_dc, family, oracle, cfg.seed, **kwargs)

    doc = _log_json(log)
    doc["lip_alpha_estimated"] = lip_estimated
    doc["d_note"] = "grid-spacing parameter d is user configuration (default 0.25)"
    if algo == "algorithm4":
        rows = log.trace
    else:
        rows = [(log.k, i, c.alpha_hat, c.u_hat, False) for i, c in enumerate(log.candidates)]
    outputs = {"learn_rounds.csv": to_csv(("round", "candidate", "alpha_hat", "u_hat", "eliminated"), rows)}
    if reps > 1:
        inst = learn.LearningInstance(cfg.pair, lcfg, cfg.ell, cfg.big_delta, cfg.points)
        ev = learn.evaluate_learner(inst, reps, [cfg.seed + i for i in range(reps)], algo)
        doc["evaluation"] = {
            "repetitions": ev.repetitions, "failures": ev.failures, "failure_rate": ev.failure_rate,
            "ci95": list(ev.ci95), "allowed_failures": ev.allowed_failures, "passed": ev.passed,
            "u_star": ev.u_star, "choices": list(ev.choices),
        }
    outputs["learn.json"] = dump_json(doc) + "\n"
    return outputs


def cmd_validate_utility(cfg: RunConfig):
    rep = model.validate_monotonicity(cfg.pair)
    doc = {
        "passed": rep.passed,
        "pa_floor": rep.pa_floor,
        "mse_range": list(rep.mse_range),
        "grid_shape": list(rep.shape),
        "violations": [
            {"utility": v.which, "axis": v.axis, "point": list(v.point), "neighbour": list(v.neighbour),
             "values": list(v.values)}
            for v in rep.violations
        ],
        "errors": [{"utility": w, "point": list(p), "expr": e} for w, p, e in rep.errors],
    }
    rows = [(v.which, v.axis, *v.point, *v.neighbour, *v.values) for v in rep.violations]
    csv = to_csv(("utility", "axis", "mse", "pa", "mse_next", "pa_next", "value", "value_next"), rows)
    return {"validation.json": dump_json(doc) + "\n", "validation.csv": csv}, rep.passed


HANDLERS = {
    "curve": cmd_curve,
    "equilibrium": cmd_equilibrium,
    "noise": cmd_noise,
    "simulate": cmd_simulate,
    "sybil": cmd_sybil,
    "learn": cmd_learn,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="gamecoding", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"))
    parser.add_argument("--eta-grid", help="comma list or start:stop:step")
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--clones", help="comma-separated clone counts")
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--delta", type=float, help="learner confidence parameter")
    parser.add_argument("--k-override", type=int)
    parser.add_argument("--n-override", type=int)
    return parser


def _merge(raw, args):
    raw = dict(raw)
    for key, value in (("seed", args.seed), ("out", args.out), ("format", args.format),
                       ("eta_grid", args.eta_grid), ("rounds", args.rounds), ("clones", args.clones)):
        if value is not None:
            raw[key] = value
    lrn = dict(raw.get("learner") or {})
    for key, value in (("lambda", args.lam), ("delta", args.delta), ("k_override", args.k_override),
                       ("n_override", args.n_override)):
        if value is not None:
            lrn[key] = value
    if lrn:
        raw["learner"] = lrn
    return raw


def _select(outputs, fmt_choice):
    if fmt_choice == "both":
        return outputs
    return {k: v for k, v in outputs.items() if k.endswith("." + fmt_choice)}


def write_outputs(outputs, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    for name, text in outputs.items():
        tmp = out / f".{name}.tmp"
        tmp.write_text(text)
        staged.append((tmp, out / name))
    for tmp, final in staged:
        os.replace(tmp, final)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError("--config", str(exc)) from None
        cfg = load_config(_merge(raw, args))
        _validate_command(args.command, cfg)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "validate-utility":
            outputs, ok = cmd_validate_utility(cfg)
        else:
            outputs, ok = HANDLERS[args.command](cfg), True
    except Exception as exc:  # any failure in the numerical layer
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_outputs(_select(outputs, cfg.format), cfg.out)
    for name in sorted(_select(outputs, cfg.format)):
        print(Path(cfg.out) / name)
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
