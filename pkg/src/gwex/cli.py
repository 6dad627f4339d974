"""Command-line front end: ``gwex <command> --config <path> [--out <dir>] [--workers <n>]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import oracle as O
from .dynamics import (EnvironmentView, TaggedTrajectory, environment_view, neighbourhood_batch,
                       replica_seeds, simulate_exact, simulate_windowed)
from .errors import BadPMF, GwexError, SchemaError, Subcritical, TooFewBlocks, ZeroKey
from .estimators import (detect_regenerations, estimate_speed_batch_means,
                         estimate_speed_endpoint, estimate_speed_regen, martingale_residual,
                         stationarity_test)
from .measures import sample
from .offspring import new_offspring, speed_constant, speed_variable
from .tree import encode

log = logging.getLogger("gwex")

COMMANDS = ("speed", "validate", "oracle", "stationarity")
ENV_SEED = "GWEX_MASTER_SEED"
ENV_WORKERS = "GWEX_WORKERS"
U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    pmf: dict
    rho: float | None = None
    alpha: float | None = None
    law: str = "P"
    engine: str = "exact"
    window_radius: int = 8
    T: float = 100.0
    replicas: int = 100
    master_seed: int = 0
    ball_radius: int = 1
    out_dir: str = "gwex-out"
    write_trajectories: bool = False
    ci_level: float = 0.95
    batches: int = 20
    bootstrap: int = 2000
    regen_buffer_fraction: float = 0.1
    distance: str = "horodistance"
    stationarity_time: float = 5.0
    min_bin: int = 5
    oracle: dict = field(default_factory=lambda: {
        "n_min": 2, "n_max": 5, "rhos": [0.2, 0.5, 0.8], "alphas": [0.3, 1.0, 3.0],
        "tolerance": 1e-12, "engine_replicas": 0, "engine_time": 0.5, "engine_n_max": 4})
    max_nodes: int = 2_000_000
    max_steps: int = 200_000_000
    workers: int = 1

    @property
    def param(self) -> float:
        return self.rho if self.model == "variable" else self.alpha

    @property
    def offspring(self):
        return new_offspring(self.pmf)


_FIELDS = {
    "model": str, "pmf": dict, "rho": float, "alpha": float, "law": str, "engine": str,
    "window_radius": int, "T": float, "replicas": int, "master_seed": int,
    "ball_radius": int, "out_dir": str, "write_trajectories": bool, "ci_level": float,
    "batches": int, "bootstrap": int, "regen_buffer_fraction": float, "distance": str,
    "stationarity_time": float, "min_bin": int, "oracle": dict, "max_nodes": int,
    "max_steps": int, "workers": int,
}


def _typed(path, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(path, "expected a number")
        value = float(value)
        if not math.isfinite(value):
            raise SchemaError(path, "expected a finite number")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(path, "expected an integer")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise SchemaError(path, "expected true or false")
        return value
    if not isinstance(value, kind):
        raise SchemaError(path, f"expected {kind.__name__}")
    return value


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"invalid JSON: {e.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected an object")
    for key in doc:
        if key not in _FIELDS:
            raise SchemaError(f"$.{key}", "unknown field")
    for key in ("model", "pmf", "T", "replicas", "master_seed"):
        if key not in doc:
            raise SchemaError(f"$.{key}", "required field missing")
    vals = {k: _typed(f"$.{k}", v, _FIELDS[k]) for k, v in doc.items()}

    if vals["model"] not in ("variable", "constant"):
        raise SchemaError("$.model", "must be 'variable' or 'constant'")
    if "rho" in vals and "alpha" in vals:
        raise SchemaError("$.alpha", "give exactly one of rho and alpha")
    if vals["model"] == "variable" and "rho" not in vals:
        raise SchemaError("$.rho", "variable model needs rho")
    if vals["model"] == "constant" and "alpha" not in vals:
        raise SchemaError("$.alpha", "constant model needs alpha")
    if "rho" in vals and not 0 <= vals["rho"] < 1:
        raise SchemaError("$.rho", "must lie in [0, 1)")
    if "alpha" in vals and not vals["alpha"] >= 0:
        raise SchemaError("$.alpha", "must be non-negative")

    pmf = {}
    for k, p in vals["pmf"].items():
        try:
            key = int(k)
        except ValueError:
            raise SchemaError(f"$.pmf.{k}", "keys must be integer strings") from None
        pmf[key] = _typed(f"$.pmf.{k}", p, float)
    try:
        new_offspring(pmf)
    except ZeroKey as e:
        raise SchemaError("$.pmf.0", f"ZeroKey: {e}") from None
    except (Subcritical, BadPMF) as e:
        raise SchemaError("$.pmf", f"{type(e).__name__}: {e}") from None
    vals["pmf"] = pmf

    if vals.get("law", "P") not in ("P", "Q"):
        raise SchemaError("$.law", "must be 'P' or 'Q'")
    if vals.get("law") == "Q" and vals["model"] == "constant" and vals["alpha"] == 0:
        raise SchemaError("$.alpha", "the tilted constant-speed law needs alpha > 0")
    if vals.get("engine", "exact") not in ("exact", "windowed"):
        raise SchemaError("$.engine", "must be 'exact' or 'windowed'")
    if vals.get("window_radius", 8) < 2:
        raise SchemaError("$.window_radius", "must be at least 2")
    if not 0 < vals["T"] <= 1e6:
        raise SchemaError("$.T", "must lie in (0, 1e6]")
    if vals["replicas"] < 1:
        raise SchemaError("$.replicas", "must be at least 1")
    if not 0 <= vals["master_seed"] <= U64_MAX:
        raise SchemaError("$.master_seed", "must be a 64-bit unsigned integer")
    if vals.get("ball_radius", 1) < 0:
        raise SchemaError("$.ball_radius", "must be non-negative")
    if not 0 < vals.get("ci_level", 0.95) < 1:
        raise SchemaError("$.ci_level", "must lie in (0, 1)")
    if vals.get("batches", 20) < 2:
        raise SchemaError("$.batches", "must be at least 2")
    if vals.get("distance", "horodistance") not in ("graph", "horodistance"):
        raise SchemaError("$.distance", "must be 'graph' or 'horodistance'")
    if vals.get("workers", 1) < 1:
        raise SchemaError("$.workers", "must be at least 1")
    if "oracle" in vals:
        merged = dict(ExperimentConfig.__dataclass_fields__["oracle"].default_factory())
        for k, v in vals["oracle"].items():
            if k not in merged:
                raise SchemaError(f"$.oracle.{k}", "unknown field")
            merged[k] = v
        vals["oracle"] = merged
    return ExperimentConfig(**vals)


def apply_env(cfg: ExperimentConfig, environ=None) -> ExperimentConfig:
    environ = os.environ if environ is None else environ
    changes = {}
    if environ.get(ENV_SEED):
        try:
            seed = int(environ[ENV_SEED])
        except ValueError:
            raise SchemaError(ENV_SEED, "must be an integer") from None
        if not 0 <= seed <= U64_MAX:
            raise SchemaError(ENV_SEED, "must be a 64-bit unsigned integer")
        changes["master_seed"] = seed
    if environ.get(ENV_WORKERS):
        try:
            w = int(environ[ENV_WORKERS])
        except ValueError:
            raise SchemaError(ENV_WORKERS, "must be an integer") from None
        if w < 1:
            raise SchemaError(ENV_WORKERS, "must be at least 1")
        changes["workers"] = w
    return replace(cfg, **changes) if changes else cfg


def theoretical_speed(cfg: ExperimentConfig) -> float:
    d = cfg.offspring
    if cfg.model == "variable":
        return speed_variable(d, cfg.rho)
    return speed_constant(d, cfg.alpha)


# ----------------------------------------------------------- replicas

def _simulate(cfg: ExperimentConfig, i: int, keep_engine: bool = False):
    s_seed, d_seed = replica_seeds(cfg.master_seed, i)
    smp = sample(cfg.offspring, cfg.model, cfg.law, cfg.param, s_seed)
    if cfg.engine == "exact":
        tr = simulate_exact(smp, cfg.model, cfg.T, d_seed, max_nodes=cfg.max_nodes,
                            max_steps=cfg.max_steps)
    else:
        tr = simulate_windowed(smp, cfg.model, cfg.T, cfg.window_radius, d_seed,
                               max_nodes=cfg.max_nodes, max_steps=cfg.max_steps)
    if not keep_engine:
        tr._engine = None
    return smp, tr


def _trajectory_job(args):
    cfg, lo, hi = args
    return [_simulate(cfg, i)[1] for i in range(lo, hi)]


def _martingale_job(args):
    cfg, lo, hi = args
    out = []
    for i in range(lo, hi):
        smp, tr = _simulate(cfg, i, keep_engine=True)
        env = environment_view(tr, smp, cfg.ball_radius)
        _, m = martingale_residual(tr, env)
        out.append(float(m[-1]))
    return out


def _map_chunks(job, cfg, n, workers):
    """Run job over replica ranges, concatenating results in replica order."""
    if workers <= 1 or n < 2:
        return job((cfg, 0, n))
    step = max(1, math.ceil(n / (4 * workers)))
    chunks = [(cfg, lo, min(n, lo + step)) for lo in range(0, n, step)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(job, chunks))
    return [x for part in parts for x in part]


def run_replicas(cfg: ExperimentConfig, workers: int | None = None) -> list:
    return _map_chunks(_trajectory_job, cfg, cfg.replicas, workers or cfg.workers)


# ----------------------------------------------------------- commands

def _check(name, passed, **detail):
    return {"check": name, "passed": bool(passed), **detail}


def _cmd_speed(cfg, workers):
    trajs = run_replicas(cfg, workers)
    target = theoretical_speed(cfg)
    records, checks = [], []
    for dist in ("graph", "horodistance"):
        if cfg.replicas >= 2:
            records.append(estimate_speed_endpoint(trajs, dist, cfg.ci_level))
        records.append(estimate_speed_batch_means(trajs, dist, cfg.batches, cfg.ci_level))
    regen = [detect_regenerations(t, int(math.ceil(cfg.regen_buffer_fraction * t.n_jumps)))
             for t in trajs]
    try:
        records.append(estimate_speed_regen(trajs, regen, cfg.bootstrap, cfg.ci_level,
                                            seed=cfg.master_seed))
    except TooFewBlocks as e:
        log.warning("regeneration estimate skipped: %s", e)
    primary = [r for r in records if r.method == "endpoint" and r.distance == cfg.distance]
    if not primary:
        primary = [r for r in records if r.method == "batch-means" and r.distance == cfg.distance]
    checks.append(_check("theory_in_ci", primary[0].contains(target), target=target,
                         method=primary[0].method, distance=cfg.distance,
                         lower=primary[0].lower, upper=primary[0].upper))
    rows = [dict(r.as_dict(), theory=target, contains_theory=r.contains(target)) for r in records]
    return rows, checks, trajs


def _cmd_validate(cfg, workers):
    checks, rows = [], []
    target = theoretical_speed(cfg)
    mT = np.array(_map_chunks(_martingale_job, cfg, cfg.replicas, workers))
    se = float(mT.std(ddof=1) / np.sqrt(mT.size)) if mT.size > 1 else float("inf")
    checks.append(_check("martingale_mean", abs(float(mT.mean())) <= 3 * se,
                         mean=float(mT.mean()), se=se))
    trajs = run_replicas(cfg, workers)
    regen = [detect_regenerations(t, int(math.ceil(cfg.regen_buffer_fraction * t.n_jumps)))
             for t in trajs]
    blocks = sum(r.n_blocks for r in regen)
    checks.append(_check("regenerations_present", blocks >= 10, blocks=blocks))
    exact_cfg = replace(cfg, engine="exact")
    win_cfg = replace(cfg, engine="windowed")
    ex = trajs if cfg.engine == "exact" else run_replicas(exact_cfg, workers)
    wi = trajs if cfg.engine == "windowed" else run_replicas(win_cfg, workers)
    if len(ex) >= 2:
        e1 = estimate_speed_endpoint(ex, cfg.distance, cfg.ci_level)
        e2 = estimate_speed_endpoint(wi, cfg.distance, cfg.ci_level)
        checks.append(_check("cross_engine_overlap", e1.overlaps(e2), exact=e1.point,
                             windowed=e2.point, radius=cfg.window_radius))
        rows += [dict(e1.as_dict(), engine="exact", theory=target),
                 dict(e2.as_dict(), engine=f"windowed:{cfg.window_radius}", theory=target)]
    return rows, checks, trajs


def _cmd_oracle(cfg, workers):
    oc = cfg.oracle
    rows, checks = [], []
    worst = 0.0
    for ft in O.tree_corpus(oc["n_min"], oc["n_max"]):
        gv = O.build_generator(ft, "variable")
        gc = O.build_generator(ft, "constant")
        for rho in oc["rhos"]:
            v = O.check_detailed_balance(gv, O.product_measure(O.bernoulli_marginals(ft, rho)))
            rows.append({"n": ft.n, "edges": str(ft.edges), "root": ft.root, "model": "variable",
                         "param": rho, "violation": v})
            worst = max(worst, v)
        for a in oc["alphas"]:
            v = O.check_detailed_balance(gc, O.product_measure(O.degree_marginals(ft, a)))
            rows.append({"n": ft.n, "edges": str(ft.edges), "root": ft.root, "model": "constant",
                         "param": a, "violation": v})
            worst = max(worst, v)
    checks.append(_check("detailed_balance", worst <= oc["tolerance"], worst=worst))
    if oc["engine_replicas"] > 0:
        from .dynamics import finite_batch
        from .tree import LazyTree
        tv_worst = 0.0
        t = oc["engine_time"]
        for ft in O.tree_corpus(2, oc["engine_n_max"]):
            lt = LazyTree.frozen(ft.children(), root=ft.root)
            for model, marg, param in (("variable", O.bernoulli_marginals(ft, 0.5), 0.5),
                                       ("constant", O.degree_marginals(ft, 1.0), 1.0)):
                p = O.transient_distribution(O.build_generator(ft, model),
                                             O.product_measure(marg, ft.root), t)
                hc, _ = finite_batch(lt, model, param, t, cfg.master_seed, oc["engine_replicas"])
                tv_worst = max(tv_worst, 0.5 * float(np.abs(hc / hc.sum() - p).sum()))
        checks.append(_check("engine_vs_uniformization", tv_worst <= 0.01, worst_tv=tv_worst))
    return rows, checks, []


def star_code(degree: int, occupied: int) -> bytes:
    """Radius-one colored ball code of an occupied root with the given neighbourhood."""
    leaves = [encode(1, [])] * occupied + [encode(0, [])] * (degree - occupied)
    return encode(1, leaves)


def stationarity_pvalue(cfg: ExperimentConfig) -> float:
    """Codes at time 0 from replicas [0, N) against codes at time t from [N, 2N)."""
    if cfg.ball_radius != 1:
        raise SchemaError("$.ball_radius", "the batch stationarity test uses radius 1")
    n = cfg.replicas
    out = neighbourhood_batch(cfg.offspring, cfg.model, cfg.law, cfg.param,
                              cfg.stationarity_time, cfg.master_seed, 2 * n,
                              max_nodes=cfg.max_nodes, max_steps=cfg.max_steps)
    c0 = [star_code(int(r[0]), int(r[1])) for r in out[:n]]
    c1 = [star_code(int(r[2]), int(r[3])) for r in out[n:]]
    return stationarity_test(c0, c1, cfg.min_bin)


def _cmd_stationarity(cfg, workers):
    p = stationarity_pvalue(cfg)
    return ([{"p_value": p, "time": cfg.stationarity_time, "replicas": cfg.replicas}],
            [_check("stationarity", p > 0.01, p_value=p)], [])


_DISPATCH = {"speed": _cmd_speed, "validate": _cmd_validate, "oracle": _cmd_oracle,
             "stationarity": _cmd_stationarity}


def _config_echo(cfg):
    d = asdict(cfg)
    d["pmf"] = {str(k): v for k, v in sorted(cfg.pmf.items())}
    return d


def _csv_text(rows):
    if not rows:
        return ""
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run(command: str, cfg: ExperimentConfig, out_dir=None, workers: int | None = None) -> int:
    """Run one command and write the reports; returns the exit status."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.workers
    failures = []
    try:
        rows, checks, trajs = _DISPATCH[command](cfg, workers)
    except GwexError as e:
        rows, checks, trajs = [], [], []
        failures.append({"check": "run", "passed": False, "error": type(e).__name__,
                         "message": str(e)})
    failures += [c for c in checks if not c["passed"]]
    result = {"command": command, "version": __version__, "config": _config_echo(cfg),
              "records": rows, "checks": checks, "passed": not failures}
    (out / "results.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    (out / "results.csv").write_text(_csv_text(rows))
    (out / "failures.json").write_text(json.dumps(failures, indent=2, sort_keys=True) + "\n")
    if cfg.write_trajectories and trajs:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica", "time", "node_depth", "graph_distance", "horodistance"])
        for i, tr in enumerate(trajs):
            for rep, t, depth, g, h in tr.rows(i):
                w.writerow([rep, repr(t), depth, g, h])
        (out / "trajectories.csv").write_text(buf.getvalue())
    return 0 if not failures else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gwex", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="path to a JSON experiment config")
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    ap.add_argument("--workers", type=int, default=None, help="concurrent replica workers")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_env(parse_config(Path(args.config).read_text()))
    except SchemaError as e:
        out = Path(args.out or "gwex-out")
        out.mkdir(parents=True, exist_ok=True)
        report = [{"check": "config", "passed": False, "error": "SchemaError", "path": e.path,
                   "message": str(e)}]
        (out / "failures.json").write_text(json.dumps(report, indent=2) + "\n")
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.workers is not None:
        if args.workers < 1:
            ap.error("--workers must be at least 1")
        cfg = replace(cfg, workers=args.workers)
    status = run(args.command, cfg, args.out)
    print(("ok" if status == 0 else "FAILED") + f": see {args.out or cfg.out_dir}/results.json")
    return status


if __name__ == "__main__":
    sys.exit(main())
