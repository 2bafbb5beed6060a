"""
Config-driven experiment runner.

    rotsets --config run.json --out results/ [--threads K] [--seed S] [--check]

The config is one JSON object; ``experiment`` selects the pipeline
(mz-estimate, per-words, pseudo-rotset, essential-map, paper-examples).
See README.md for the schema.  Criterion failures are written to
report.json and only change the exit status under ``--check``.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import geom
from . import report as rep
from . import shift
from .cocycle import Cocycle
from .essential import classify_points, displacement_probe
from .pseudo import (Policy, PseudoPlan, PseudoSystem, UnreachableError, coverage_bound,
                     default_policies, policy_from_spec, pseudo_rotset)
from .rotation import (RotSetEstimate, SamplingPlan, default_plan, estimate_mz,
                       per_word_rotation_set, periodic_union)
from .torusmap import SpecError, double_shear, from_spec, invert, mz_square, paper_f0, paper_f1

EXPERIMENTS = ("mz-estimate", "per-words", "pseudo-rotset", "essential-map", "paper-examples")


class ConfigError(Exception):
    pass


# config parsing

def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def _get(d, key, kind, path, default=None, required=False):
    if key not in d:
        if required:
            raise SpecError(f"missing field '{key}'", path)
        return default
    val = d[key]
    ok = isinstance(val, kind) and not (isinstance(val, bool) and kind is not bool)
    if kind in (int, float) and isinstance(val, bool):
        ok = False
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        ok = True
    if not ok:
        raise SpecError(f"field '{key}' has the wrong type", f"{path}.{key}" if path else key)
    return val


def parse_cocycle(cfg, path="cocycle"):
    spec = cfg.get("cocycle")
    if not isinstance(spec, dict):
        raise SpecError("missing or malformed cocycle", path)
    maps = spec.get("maps")
    if not isinstance(maps, list) or not maps:
        raise SpecError("field 'maps' must be a nonempty list", f"{path}.maps")
    built = [from_spec(m, f"{path}.maps[{i}]") for i, m in enumerate(maps)]
    try:
        return Cocycle(built)
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), path) from exc


def parse_plan(cfg, alphabet, seed, path="plan"):
    spec = cfg.get("plan", {})
    if not isinstance(spec, dict):
        raise SpecError("plan must be an object", path)
    grid = _get(spec, "base_grid", int, path, 32)
    n_max = _get(spec, "n_max", int, path, 200)
    rounds = _get(spec, "refine_rounds", int, path, 4)
    if "words" not in spec:
        plan = default_plan(alphabet, n_max=n_max, base_grid=grid, refine_rounds=rounds, seed=seed)
        if "n_list" in spec:
            plan = SamplingPlan(grid, plan.words, _get(spec, "n_list", list, path), rounds, seed)
        return plan
    words = _get(spec, "words", list, path)
    built = [shift.from_spec(w, f"{path}.words[{i}]") for i, w in enumerate(words)]
    for i, w in enumerate(built):
        if w.alphabet_size > alphabet:
            raise SpecError("word uses symbols outside the cocycle alphabet", f"{path}.words[{i}]")
    n_list = _get(spec, "n_list", list, path, [n_max // 2, n_max])
    try:
        return SamplingPlan(grid, built, n_list, rounds, seed)
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), path) from exc


def validate(cfg):
    kind = cfg.get("experiment")
    if kind not in EXPERIMENTS:
        raise SpecError(f"unknown experiment {kind!r} (expected one of {', '.join(EXPERIMENTS)})", "experiment")
    _get(cfg, "seed", int, "", 0)
    _get(cfg, "threads", int, "", 1)
    return kind


# output helpers

def _write_estimate(out_dir, name, est, extra=None):
    os.makedirs(out_dir, exist_ok=True)
    rows = rep.write_points_csv(os.path.join(out_dir, f"{name}points.csv"), est)
    summary = est.summary()
    summary["csv_rows"] = rows
    if extra:
        summary.update(extra)
    rep.write_json(os.path.join(out_dir, f"{name}summary.json"), rep.clean(summary))
    rep.emit_plot(est, os.path.join(out_dir, f"{name}plot.svg"))
    return summary


def _criterion(cid, description, passed, **measured):
    return {"id": cid, "description": description, "passed": bool(passed), "measured": rep.clean(measured)}


# pipelines

def run_mz(cfg, out, seed, threads):
    c = parse_cocycle(cfg)
    plan = parse_plan(cfg, len(c), seed)
    est = estimate_mz(c, plan, threads=threads)
    extra = {"n_list": plan.n_list, "words": len(plan.words), "base_grid": plan.base_grid}
    cmp_spec = cfg.get("compare_periodic")
    if isinstance(cmp_spec, dict):
        union, _ = periodic_union(c, _get(cmp_spec, "max_period", int, "compare_periodic", 4),
                                  _get(cmp_spec, "K", int, "compare_periodic", 1000),
                                  _get(cmp_spec, "grid", int, "compare_periodic", 16))
        extra["periodic_union_hausdorff"] = geom.hausdorff(union.cloud, est.cloud)
        extra["periodic_union_points"] = len(union.cloud)
    summary = _write_estimate(out, "", est, extra)
    return [], {"summary": summary}


def run_per_words(cfg, out, seed, threads):
    c = parse_cocycle(cfg)
    spec = cfg.get("per_words", {})
    if not isinstance(spec, dict):
        raise SpecError("per_words must be an object", "per_words")
    K = _get(spec, "K", int, "per_words", 10_000)
    grid = _get(spec, "grid", int, "per_words", 16)
    if "words" in spec:
        words = [shift.from_spec(w, f"per_words.words[{i}]") for i, w in enumerate(_get(spec, "words", list, "per_words"))]
        for i, w in enumerate(words):
            if not isinstance(w, shift.PeriodicWord):
                raise SpecError("per-word rotation sets need periodic words", f"per_words.words[{i}]")
        ests = [per_word_rotation_set(c, w, K, grid) for w in words]
        cloud = np.vstack([e.cloud for e in ests])
        meta = np.vstack([np.column_stack([e.meta[:, 0], np.full(len(e.cloud), float(i)), e.meta[:, 2:]])
                          for i, e in enumerate(ests)])
        est = RotSetEstimate.from_cloud(cloud, (K,), None, meta)
        per = [{"word": list(w.symbols_), "hull": e.hull.tolist(), "hausdorff_to_half_n": e.hausdorff_to_half_n}
               for w, e in zip(words, ests)]
    else:
        max_period = _get(spec, "max_period", int, "per_words", 4)
        est, words = periodic_union(c, max_period, K, grid)
        per = [{"word": list(w.symbols_)} for w in words]
    summary = _write_estimate(out, "", est, {"words": per, "K": K, "grid": grid})
    return [], {"summary": summary}


def parse_pseudo(cfg, seed, path="pseudo"):
    spec = cfg.get("pseudo")
    if not isinstance(spec, dict):
        raise SpecError("missing or malformed pseudo section", path)
    g = from_spec(spec.get("map"), f"{path}.map")
    eps = _get(spec, "eps", float, path, required=True)
    grid = _get(spec, "grid", int, path, 128)
    try:
        sys_ = PseudoSystem(g, float(eps), grid)
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), path) from exc
    if "policies" in spec:
        pols = [policy_from_spec(p, f"{path}.policies[{i}]") for i, p in enumerate(_get(spec, "policies", list, path))]
        pols = [Policy(p.kind, p.direction, p.scale, p.seed + seed) if p.kind == "random" else p for p in pols]
    else:
        pols = default_policies()
    n_max = _get(spec, "n_max", int, path, 128)
    n_list = _get(spec, "n_list", list, path, [n_max // 4, n_max // 2, n_max])
    splices = [tuple(s) for s in _get(spec, "splices", list, path, [[a, 4] for a in range(5)])]
    try:
        plan = PseudoPlan(_get(spec, "base_grid", int, path, 8), pols, n_list, splices)
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), path) from exc
    return sys_, plan


def run_pseudo(cfg, out, seed, threads):
    sys_, plan = parse_pseudo(cfg, seed)
    est = pseudo_rotset(sys_, plan, k_cap=_get(cfg["pseudo"], "k_cap", int, "pseudo", 500))
    summary = _write_estimate(out, "", est, {"eps": sys_.eps, "grid": sys_.grid})
    return [], {"summary": summary}


def run_essential(cfg, out, seed, threads):
    c = parse_cocycle(cfg)
    spec = cfg.get("essential", {})
    if not isinstance(spec, dict):
        raise SpecError("essential must be an object", "essential")
    N = _get(spec, "resolution", int, "essential", 128)
    radius = _get(spec, "ball_radius", float, "essential", 4.0 / N)
    cap = _get(spec, "cap", int, "essential", 500)
    try:
        cmap = classify_points(c, N, float(radius), cap)
    except ValueError as exc:
        raise SpecError(str(exc), "essential") from exc
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "classification.pgm"), "w") as fh:
        fh.write(cmap.to_pgm())
    summary = cmap.summary()
    probe = spec.get("probe")
    if isinstance(probe, dict):
        words = [shift.from_spec(w, f"essential.probe.words[{i}]")
                 for i, w in enumerate(_get(probe, "words", list, "essential.probe", [{"type": "periodic", "symbols": [0]}]))]
        summary["displacement_probe"] = displacement_probe(
            c, words, _get(probe, "base_grid", int, "essential.probe", 8),
            _get(probe, "n_max", int, "essential.probe", 1000))
    rep.write_json(os.path.join(out, "classification.json"), rep.clean(summary))
    return [], {"summary": summary}


def run_paper_examples(cfg, out, seed, threads):
    """E1 discontinuity, E2 non-convex rotation set, E3 pseudo-orbit convexity."""
    criteria = []
    results = {}
    # E1: per-word sets of 0^{k-1} 1 on the paper cocycle
    c = Cocycle([paper_f0(), paper_f1()])
    e1 = {}
    worst = 0.0
    for k in range(1, 9):
        w = shift.PeriodicWord((0,) * (k - 1) + (1,))
        est = per_word_rotation_set(c, w, 10_000, 16)
        d = geom.hausdorff(est.cloud, [[0.0, np.sqrt(2.0) / k]])
        worst = max(worst, d)
        e1[f"k={k}"] = d
    est0 = per_word_rotation_set(c, shift.PeriodicWord((0,)), 10_000, 16)
    seg = np.column_stack([np.linspace(-1, 1, 201), np.zeros(201)])
    d0 = geom.hausdorff(est0.cloud, seg)
    _write_estimate(os.path.join(out, "E1"), "", est0, {"hausdorff_to_segment": d0})
    criteria.append(_criterion("E1", "per-word sets of 0^(k-1)1 near (0, sqrt2/k); word 0 near [-1,1]x{0}",
                               worst <= 0.05 and d0 <= 0.05, worst_k_distance=worst, word0_distance=d0))
    results["E1"] = e1
    # E2: non-convex MZ set of {mz, mz^-1}
    c2 = Cocycle([mz_square(), invert(mz_square())])
    est2 = estimate_mz(c2, default_plan(2, seed=seed), threads=threads)
    box = geom.sample_box((0, 0), (1, 1), 0.02)
    target = np.vstack([box, -box])
    h2 = geom.hausdorff(est2.cloud, target)
    _write_estimate(os.path.join(out, "E2"), "", est2, {"hausdorff_to_target": h2})
    criteria.append(_criterion("E2", "MZ estimate of {mz, mz^-1} near [0,1]^2 U [-1,0]^2, non-convex, connected",
                               h2 <= 0.15 and est2.convexity_defect >= 0.15 and est2.is_connected,
                               hausdorff=h2, convexity_defect=est2.convexity_defect,
                               is_connected=est2.is_connected))
    # E3: pseudo-orbits of the conservative double shear
    sys_ = PseudoSystem(double_shear(0.3), 0.05, 128)
    rng = np.random.default_rng(seed)
    n0 = [coverage_bound(sys_, p, 2000) for p in rng.random((10, 2))]
    est3 = pseudo_rotset(sys_)
    _write_estimate(os.path.join(out, "E3"), "", est3, {"coverage_bounds": n0})
    covered = all(v is not None for v in n0)
    criteria.append(_criterion("E3", "double-shear pseudo-orbits: finite N0, convex pseudo rotation set",
                               covered and est3.convexity_defect <= 0.05,
                               coverage_bounds=n0, convexity_defect=est3.convexity_defect))
    return criteria, results


PIPELINES = {
    "mz-estimate": run_mz,
    "per-words": run_per_words,
    "pseudo-rotset": run_pseudo,
    "essential-map": run_essential,
    "paper-examples": run_paper_examples,
}


def run_experiment(cfg, out, seed=None, threads=None):
    """Execute one config; returns the report dict (also written to report.json)."""
    kind = validate(cfg)
    seed = cfg.get("seed", 0) if seed is None else seed
    threads = cfg.get("threads", 1) if threads is None else threads
    t0 = time.perf_counter()
    os.makedirs(out, exist_ok=True)
    criteria, results = PIPELINES[kind](cfg, out, seed, threads)
    report = {
        "experiment": kind,
        "config": cfg,
        "config_hash": rep.config_hash(cfg),
        "seed": seed,
        "threads": threads,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "criteria": criteria,
        "results": results,
    }
    rep.write_json(os.path.join(out, "report.json"), rep.clean(report))
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="rotsets", description="Rotation-set experiments on the torus.")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", help="output directory (overrides the config's 'out')")
    p.add_argument("--threads", type=int, help="worker threads (overrides config)")
    p.add_argument("--seed", type=int, help="seed (overrides config)")
    p.add_argument("--check", action="store_true", help="exit nonzero when a criterion fails")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.get("out")
        if not isinstance(out, str) or not out:
            raise ConfigError("no output directory: pass --out or set 'out' in the config")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        report = run_experiment(cfg, out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnreachableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 4
    failed = [c["id"] for c in report["criteria"] if not c["passed"]]
    for c in report["criteria"]:
        print(f"{c['id']}: {'pass' if c['passed'] else 'FAIL'}  {json.dumps(c['measured'], sort_keys=True)}")
    print(f"wrote {os.path.join(out, 'report.json')}")
    if args.check and failed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
