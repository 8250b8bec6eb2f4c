"""Experiment orchestration: problem construction from a config tree, the
round loop, trace serialization, grid search over step sizes, optional bound
evaluation, and seed-level significance testing.

Everything here is deterministic given (config, seeds): traces are
byte-identical across repeat invocations and worker counts.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import presets as presets_mod
from .analysis import RunTrace, corollary1_bound, regret, students_t_test, thm1_bound
from .errors import ConfigError, InsufficientSeeds, UnknownPreset, InvalidOverride, WagmfError
from .feasible import FeasibleSet, diameter_inf
from .problems import (
    Dataset,
    LossOracle,
    MinibatchOracle,
    Quadratic,
    ReddiOnline,
    ReddiStochastic,
    RoundRng,
    SoftmaxObjective,
    gaussian_blobs,
    load_dataset,
)

TRACE_HEADER = "t,loss,avg_regret,x_norm,g_norm,alpha_t"
_MAX_TRACE_ROWS = 100_000
_SIDECAR_MAX_DIM = 16
_ALPHA_SIG = 0.05


@dataclass
class ProblemSetup:
    name: str
    oracle: LossOracle
    feasible: FeasibleSet
    x0: np.ndarray | None  # None: draw uniformly from the box per run seed
    x_star: np.ndarray | None


def build_problem(cfg: dict) -> ProblemSetup:
    """Construct a problem instance from its config subtree.

    Instances are fully determined by the subtree (any randomness comes from
    ``instance_seed``/``data`` seeds inside it), so every worker rebuilds the
    same problem.
    """
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("problem config must be a table with a 'kind' entry")
    kind = cfg["kind"]
    known = {"reddi_stochastic", "reddi_online", "quadratic", "softmax"}
    if kind not in known:
        raise ConfigError(f"unknown problem kind {kind!r}; known: {sorted(known)}")

    if kind in ("reddi_stochastic", "reddi_online"):
        oracle = ReddiStochastic() if kind == "reddi_stochastic" else ReddiOnline()
        fset = _parse_feasible(cfg, default=FeasibleSet.box([-1.0], [1.0]))
        x0 = np.asarray(cfg.get("x0", [0.0]), dtype=np.float64)
    elif kind == "quadratic":
        if "a_diag" in cfg or "x_star" in cfg:
            try:
                oracle = Quadratic(cfg["a_diag"], cfg["x_star"])
            except (KeyError, WagmfError, ValueError) as e:
                raise ConfigError(f"bad quadratic problem: {e}") from None
        else:
            dim = int(cfg.get("dim", 5))
            inst = int(cfg.get("instance_seed", 0))
            gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([inst, 4])))
            a = 0.5 + 1.5 * gen.random(dim)
            x_star = -0.5 + gen.random(dim)
            oracle = Quadratic(a, x_star)
        d = oracle.dim
        fset = _parse_feasible(
            cfg, default=FeasibleSet.box(np.full(d, -1.0), np.full(d, 1.0))
        )
        x0 = np.asarray(cfg["x0"], dtype=np.float64) if "x0" in cfg else None
    else:  # softmax
        data = _parse_dataset(cfg.get("data"))
        reg = float(cfg.get("reg", 0.0))
        batch = cfg.get("batch_size")
        objective = SoftmaxObjective(data, reg)
        oracle = MinibatchOracle(objective, int(batch)) if batch else objective
        fset = _parse_feasible(cfg, default=FeasibleSet.unconstrained())
        x0 = np.asarray(cfg.get("x0", np.zeros(oracle.dim)), dtype=np.float64)

    if x0 is not None and x0.shape != (oracle.dim,):
        raise ConfigError(f"x0 has shape {x0.shape}, problem dimension is {oracle.dim}")
    if x0 is None and not fset.is_box:
        raise ConfigError("per-seed random x0 needs a bounded feasible box")
    return ProblemSetup(
        name=cfg.get("name", kind),
        oracle=oracle,
        feasible=fset,
        x0=x0,
        x_star=oracle.known_optimum,
    )


def _parse_feasible(cfg: dict, default: FeasibleSet) -> FeasibleSet:
    spec = cfg.get("feasible")
    if spec is None:
        return default
    if spec == "unconstrained":
        return FeasibleSet.unconstrained()
    try:
        return FeasibleSet.box(spec["lo"], spec["hi"])
    except (KeyError, TypeError, WagmfError, ValueError) as e:
        raise ConfigError(f"bad feasible set: {e}") from None


def _parse_dataset(spec) -> Dataset:
    if not isinstance(spec, dict):
        raise ConfigError("softmax problem needs a 'data' table")
    if "blobs" in spec:
        b = spec["blobs"]
        try:
            return gaussian_blobs(
                int(b["n"]),
                int(b["d"]),
                int(b["k"]),
                int(b.get("seed", 0)),
                spread=float(b.get("spread", 1.0)),
                center_scale=float(b.get("center_scale", 1.0)),
            )
        except (KeyError, ValueError, WagmfError) as e:
            raise ConfigError(f"bad blobs spec: {e}") from None
    if "path" in spec:
        try:
            return load_dataset(spec["path"], spec.get("format", "csv"))
        except (OSError, WagmfError) as e:
            raise ConfigError(f"cannot load dataset: {e}") from None
    raise ConfigError("dataset spec needs either 'blobs' or 'path'")


def initial_point(setup: ProblemSetup, seed: int) -> np.ndarray:
    if setup.x0 is not None:
        return np.array(setup.x0, copy=True)
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 3])))
    lo, hi = setup.feasible.lo, setup.feasible.hi
    return lo + gen.random(lo.shape[0]) * (hi - lo)


def run_rounds(setup: ProblemSetup, preset, T: int, seed: int = 0):
    """Run one (problem, preset, seed) experiment for T rounds.

    Returns (trace, x_after): the full in-memory trace plus the point held
    after the final update (the trace's x column stops at x_T, the iterate
    the last loss was charged at).
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    oracle = setup.oracle
    rng = RoundRng(seed)
    state = presets_mod.init_state(preset, initial_point(setup, seed))
    d = state.x.shape[0]
    xs = np.empty((T, d))
    gs = np.empty((T, d))
    Vs = np.empty((T, d))
    losses = np.empty(T)
    alphas = np.empty(T)
    fset = setup.feasible
    cfg = preset.config
    step_fn = presets_mod.STEP_FN[cfg.engine]
    evaluate = oracle.evaluate
    for t in range(1, T + 1):
        i = t - 1
        loss, g = evaluate(t, state.x, rng)
        xs[i] = state.x
        gs[i] = g
        losses[i] = loss
        step_fn(state, g, cfg, fset)
        Vs[i] = state.last_V
        alphas[i] = state.last_alpha
    trace = RunTrace(
        np.arange(1, T + 1),
        xs,
        gs,
        losses,
        alphas,
        Vs,
        preset=preset.name,
        problem=setup.name,
        seed=seed,
    )
    return trace, state.x.copy()


# ---------------------------------------------------------------------------
# trace serialization


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def trace_row_indices(T: int) -> np.ndarray:
    """Row subsample for serialization: every ceil(T / 100000)-th round plus
    the final one."""
    stride = max(1, math.ceil(T / _MAX_TRACE_ROWS))
    idx = np.arange(0, T, stride)
    if idx[-1] != T - 1:
        idx = np.append(idx, T - 1)
    return idx


def write_trace_csv(trace: RunTrace, path, avg_regret: np.ndarray | None = None) -> None:
    idx = trace_row_indices(trace.T)
    x_norm = np.sqrt((trace.x[idx] ** 2).sum(axis=1))
    g_norm = np.sqrt((trace.g[idx] ** 2).sum(axis=1))
    avg = avg_regret[idx] if avg_regret is not None else np.full(idx.size, math.nan)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(TRACE_HEADER + "\n")
        for row, i in enumerate(idx):
            f.write(
                f"{trace.t[i]},{_fmt(trace.loss[i])},{_fmt(avg[row])},"
                f"{_fmt(x_norm[row])},{_fmt(g_norm[row])},{_fmt(trace.alpha[i])}\n"
            )


def write_trace_jsonl(trace: RunTrace, path) -> None:
    idx = trace_row_indices(trace.T)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for i in idx:
            f.write(
                json.dumps(
                    {"t": int(trace.t[i]), "x": trace.x[i].tolist(), "g": trace.g[i].tolist()}
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# experiment config


@dataclass
class ExperimentConfig:
    problem: dict
    optimizers: list[dict]  # each {"name": str, "alphas": [float, ...]}
    T: int
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str | None = None
    bound_eval: bool = False
    significance: bool = False
    overrides: dict = field(default_factory=dict)
    checkpoints: list[int] = field(default_factory=list)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config tree; every problem is reported as ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    for key in ("problem", "optimizers", "T"):
        if key not in raw:
            raise ConfigError(f"config is missing {key!r}")
    unknown = set(raw) - {
        "problem",
        "optimizers",
        "T",
        "seeds",
        "out",
        "bound_eval",
        "significance",
        "overrides",
        "checkpoints",
    }
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    try:
        T = int(raw["T"])
    except (TypeError, ValueError):
        raise ConfigError(f"T must be an integer, got {raw['T']!r}") from None
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")

    opts = raw["optimizers"]
    if not isinstance(opts, list) or not opts:
        raise ConfigError("config needs a non-empty optimizer list")
    optimizers = []
    for entry in opts:
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"bad optimizer entry {entry!r}")
        alphas = entry.get("alphas", [0.1])
        if not isinstance(alphas, list) or not alphas:
            raise ConfigError(f"optimizer {entry['name']!r} needs a non-empty alpha grid")
        alphas = [float(a) for a in alphas]
        if any(a <= 0.0 for a in alphas):
            raise ConfigError(f"optimizer {entry['name']!r} has a non-positive alpha")
        optimizers.append({"name": entry["name"], "alphas": alphas})

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds must be a non-empty list")
    try:
        seeds = [int(s) for s in seeds]
    except (TypeError, ValueError):
        raise ConfigError(f"seeds must be integers, got {raw.get('seeds')!r}") from None
    if any(s < 0 for s in seeds) or len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct and >= 0")

    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError("overrides must be a table")

    checkpoints = raw.get("checkpoints", [])
    try:
        checkpoints = sorted(int(c) for c in checkpoints)
    except (TypeError, ValueError):
        raise ConfigError(f"checkpoints must be integers, got {raw.get('checkpoints')!r}") from None
    if any(c < 1 or c > T for c in checkpoints):
        raise ConfigError("checkpoints must lie in [1, T]")

    cfg = ExperimentConfig(
        problem=raw["problem"],
        optimizers=optimizers,
        T=T,
        seeds=seeds,
        out=raw.get("out"),
        bound_eval=bool(raw.get("bound_eval", False)),
        significance=bool(raw.get("significance", False)),
        overrides=overrides,
        checkpoints=checkpoints,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> ProblemSetup:
    """Config-time checks that need the constructed problem/presets."""
    setup = build_problem(cfg.problem)
    for entry in cfg.optimizers:
        try:
            presets_mod.make_preset(entry["name"], entry["alphas"][0], cfg.overrides)
        except (UnknownPreset, InvalidOverride, ValueError) as e:
            raise ConfigError(f"optimizer {entry['name']!r}: {e}") from None
    if cfg.bound_eval and not setup.feasible.is_box:
        raise ConfigError("bound_eval needs a bounded feasible set")
    if cfg.significance and len(cfg.seeds) < 2:
        raise ConfigError("significance testing needs at least two seeds")
    return setup


# ---------------------------------------------------------------------------
# execution


def _safe_name(name: str) -> str:
    return name.replace("(", "_").replace(")", "").replace(",", "_")


def _execute_job(payload: dict) -> dict:
    """Run one (optimizer, alpha, seed) cell; used directly and via the pool."""
    setup = build_problem(payload["problem"])
    preset = presets_mod.make_preset(
        payload["name"], payload["alpha"], payload["overrides"]
    )
    T = payload["T"]
    seed = payload["seed"]
    trace, x_after = run_rounds(setup, preset, T, seed)

    result = {
        "optimizer": payload["name"],
        "alpha": payload["alpha"],
        "seed": seed,
        "final_loss": float(trace.loss[-1]),
        "final_x_norm": float(np.sqrt((trace.x[-1] ** 2).sum())),
    }
    if trace.dim <= _SIDECAR_MAX_DIM:
        result["final_x"] = trace.x[-1].tolist()

    avg_series = None
    if setup.x_star is not None:
        series = regret(trace, setup.oracle, setup.x_star)
        avg_series = series.average
        result["final_avg_regret"] = float(avg_series[-1])
        if payload["checkpoints"]:
            result["avg_regret_at"] = {
                str(c): float(avg_series[c - 1]) for c in payload["checkpoints"]
            }
        selection = result["final_avg_regret"]
    elif isinstance(setup.oracle, MinibatchOracle):
        result["final_full_loss"] = float(setup.oracle.full_loss(x_after))
        selection = result["final_full_loss"]
    else:
        selection = result["final_loss"]
    result["selection_metric"] = float(selection)

    if payload["bound_eval"]:
        result["bounds"] = _evaluate_bounds(trace, setup, preset)

    out = payload["out"]
    if out:
        stem = (
            f"{_safe_name(setup.name)}__{_safe_name(payload['name'])}"
            f"__a{payload['alpha']:g}__s{seed}"
        )
        csv_path = Path(out) / f"{stem}.csv"
        write_trace_csv(trace, csv_path, avg_series)
        result["trace_csv"] = str(csv_path)
        if trace.dim <= _SIDECAR_MAX_DIM:
            jsonl_path = Path(out) / f"{stem}.jsonl"
            write_trace_jsonl(trace, jsonl_path)
            result["trace_jsonl"] = str(jsonl_path)
    return result


def _evaluate_bounds(trace: RunTrace, setup: ProblemSetup, preset) -> dict:
    """Bound evaluation for the sum/stable engines (the family the analysis
    covers); the closed-form bound additionally needs linear weights, the
    fourth root, and strict momentum decay."""
    cfg = preset.config
    if cfg.engine not in ("wagmf_sum", "wagmf_stable"):
        return {"skipped": f"engine {cfg.engine} is outside the analyzed family"}
    d_inf = diameter_inf(setup.feasible)
    beta1 = cfg.momentum.beta1
    lam = cfg.momentum.lam
    report = thm1_bound(trace, d_inf, beta1, lam)
    out = {
        "thm1": {
            "term1": report.term1,
            "term2": report.term2,
            "term3": report.term3,
            "total": report.total,
        }
    }
    if cfg.weight.kind == "linear" and cfg.p2 == 4 and lam < 1.0:
        g_inf = float(np.abs(trace.g).max())
        cor = corollary1_bound(
            trace.g, d_inf, g_inf, cfg.step.base_alpha, beta1, lam
        )
        out["corollary1"] = {
            "term1": cor.term1,
            "term2": cor.term2,
            "term3": cor.term3,
            "total": cor.total,
            "g_inf": g_inf,
        }
    return out


def _worker_count() -> int:
    raw = os.environ.get("WAGMF_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"WAGMF_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"WAGMF_THREADS must be >= 1, got {n}")
    return n


def run(config: ExperimentConfig) -> dict:
    """Execute the full experiment grid and return the summary tree.

    When ``config.out`` is set, per-run traces and ``summary.json`` are
    written there.  Output is identical for any worker count.
    """
    validate_config(config)
    if config.out:
        Path(config.out).mkdir(parents=True, exist_ok=True)

    payloads = []
    for entry in config.optimizers:
        for a in entry["alphas"]:
            for s in config.seeds:
                payloads.append(
                    {
                        "problem": config.problem,
                        "name": entry["name"],
                        "alpha": a,
                        "seed": s,
                        "T": config.T,
                        "overrides": config.overrides,
                        "bound_eval": config.bound_eval,
                        "checkpoints": config.checkpoints,
                        "out": config.out,
                    }
                )

    workers = _worker_count()
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_job, payloads))
    else:
        results = [_execute_job(p) for p in payloads]

    best = select_best(results)
    summary = {
        "problem": config.problem.get("kind"),
        "T": config.T,
        "seeds": config.seeds,
        "runs": results,
        "best": best,
    }
    if config.significance:
        summary["significance"] = significance(results, best)
    if config.out:
        with open(Path(config.out) / "summary.json", "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    return summary


def select_best(results: list[dict]) -> dict:
    """Per-optimizer best alpha by mean selection metric across seeds; ties
    break toward the smaller alpha."""
    cells: dict[tuple[str, float], list[float]] = {}
    for r in results:
        cells.setdefault((r["optimizer"], r["alpha"]), []).append(r["selection_metric"])
    best: dict[str, dict] = {}
    scores: dict[str, dict[float, float]] = {}
    for (name, a), vals in cells.items():
        scores.setdefault(name, {})[a] = float(np.mean(vals))
    for name, table in scores.items():
        a_best = min(sorted(table), key=lambda a: (table[a], a))
        best[name] = {
            "alpha": a_best,
            "metric": table[a_best],
            "grid": {f"{a:g}": table[a] for a in sorted(table)},
        }
    return best


def significance(results: list[dict], best: dict) -> dict:
    """Pairwise two-sample t-tests on per-seed selection metrics at each
    optimizer's best alpha; pairs with p < 0.05 are flagged."""
    per_opt: dict[str, list[float]] = {}
    for r in results:
        name = r["optimizer"]
        if name in best and r["alpha"] == best[name]["alpha"]:
            per_opt.setdefault(name, []).append(r["selection_metric"])
    for name, vals in per_opt.items():
        if len(vals) < 2:
            raise InsufficientSeeds(
                f"optimizer {name!r} has {len(vals)} seed(s); need >= 2"
            )
    table = {}
    for a in sorted(per_opt):
        for b in sorted(per_opt):
            if a >= b:
                continue
            t, p = students_t_test(per_opt[a], per_opt[b])
            table[f"{a} vs {b}"] = {
                "t": t,
                "p": p,
                "significant": bool(p < _ALPHA_SIG),
            }
    return table


def grid_search(config: ExperimentConfig) -> dict:
    """Run the sweep without side outputs and report per-cell scores plus the
    selected alpha per optimizer."""
    cfg = ExperimentConfig(
        problem=config.problem,
        optimizers=config.optimizers,
        T=config.T,
        seeds=config.seeds,
        out=None,
        bound_eval=False,
        significance=False,
        overrides=config.overrides,
        checkpoints=config.checkpoints,
    )
    summary = run(cfg)
    return summary["best"]
