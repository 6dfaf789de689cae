"""Command-line entry point: ``rrcguard <subcommand> [options]``.

Failures exit with status 2 and print one JSON line to stderr:
``{"error": "<ExceptionType>", "message": "..."}``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .attacks import AdversarialBatch, AttackConfig, AttackKind, perturb
from .errors import RejectedInputError, RrcGuardError
from .explain import BackgroundSet, Explainer, Method, write_explanations_csv
from .guard import GuardConfig, GuardMode, ShapProfile, check, fit_profile, mitigate, write_verdicts_csv
from .ids import IdsModel
from .sim import Label, read_rows_csv, write_rows_csv


def _config(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else harness.ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=Path(args.out))
    return cfg


def _out_dir(cfg) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def _emit_table(header, rows, path: Path, fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n")
    else:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    return path


def _load_matrix(path, ids: IdsModel) -> np.ndarray:
    """Scaled feature rows from a window dataset CSV or an adversarial CSV."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    if header and header[0] == "orig_f1":
        with open(path, newline="") as fh:
            recs = list(csv.DictReader(fh))
        return np.array([[float(r[f"pert_f{j}"]) for j in range(1, 6)] for r in recs])
    rows = read_rows_csv(path)
    if not rows:
        raise RejectedInputError(f"{path} has no rows")
    return ids.scale(np.array([r.vector() for r in rows]))


def _report(paths):
    for p in paths:
        print(p)


# subcommands -----------------------------------------------------------------


def cmd_simulate(args):
    cfg = _config(args)
    out = _out_dir(cfg)
    train, normal, storm = harness.simulate_splits(cfg)
    paths = []
    for name, rows in (("train", train), ("holdout_normal", normal), ("holdout_storm", storm)):
        p = out / f"{name}.csv"
        write_rows_csv(rows, p)
        paths.append(p)
    _report(paths)


def cmd_ids_train(args):
    cfg = _config(args)
    rows = read_rows_csv(args.data) if args.data else harness.simulate_splits(cfg)[0]
    rows = [r for r in rows if r.label is Label.NORMAL]
    ids = harness.train_benchmark_ids(cfg, rows)
    p = _out_dir(cfg) / "ids.json"
    ids.save(p)
    _report([p])


def cmd_ids_score(args):
    cfg = _config(args)
    ids = IdsModel.load(args.model)
    X = _load_matrix(args.data, ids)
    d = ids.score_scaled(X)
    verdicts = ids.predict_scaled(X)
    rows = [[i, repr(float(s)), v.value] for i, (s, v) in enumerate(zip(d, verdicts))]
    _report([_emit_table(["index", "score_d", "verdict"], rows, _out_dir(cfg) / "scores.csv", args.format)])


def cmd_attack(args):
    cfg = _config(args)
    ids = IdsModel.load(args.model)
    rows = [r for r in read_rows_csv(args.data) if r.label is Label.ATTACK]
    if not rows:
        raise RejectedInputError("no Attack rows in the input dataset")
    acfg = AttackConfig(
        AttackKind(args.method), args.epsilon, steps=args.steps, step_alpha=args.alpha,
        seed=harness.component_seed(cfg.master_seed, "attack", args.method, repr(args.epsilon)),
    )
    Xs = ids.scale(np.array([r.vector() for r in rows]))
    batch = AdversarialBatch(rows, perturb(ids, Xs, acfg), acfg, Xs)
    p = _out_dir(cfg) / "adversarial.csv"
    batch.write_csv(p)
    _report([p])


def _background(cfg, ids, path) -> BackgroundSet:
    rows = [r for r in read_rows_csv(path) if r.label is Label.NORMAL]
    return harness.benchmark_background(cfg, ids.scale(np.array([r.vector() for r in rows])))


def cmd_explain(args):
    cfg = _config(args)
    ids = IdsModel.load(args.model)
    method = Method(args.method) if args.method else cfg.explainer_choice
    if method is None:
        raise RejectedInputError("no explainer selected")
    ex = Explainer(method, _background(cfg, ids, args.background),
                   seed=harness.component_seed(cfg.master_seed, "explainer", method.value))
    exps = ex.explain_many(ids.score_scaled, _load_matrix(args.data, ids))
    out = _out_dir(cfg)
    if args.format == "json":
        p = out / "explanations.json"
        p.write_text(json.dumps([
            {"method": e.method.value, "target_score": e.target_score, "base_value": e.base_value,
             "attributions": e.attributions.tolist()} for e in exps
        ], indent=1) + "\n")
    else:
        p = out / "explanations.csv"
        write_explanations_csv(exps, p)
    _report([p])


def _guard_cfg(cfg, args) -> GuardConfig:
    g = cfg.guard
    if getattr(args, "lam", None) is not None:
        g = replace(g, lam=args.lam)
    if getattr(args, "mode", None):
        g = replace(g, mode=GuardMode(args.mode))
    return g


def cmd_guard_fit(args):
    cfg = _config(args)
    ids = IdsModel.load(args.model)
    method = Method(args.method) if args.method else cfg.explainer_choice
    if method is None:
        raise RejectedInputError("no explainer selected")
    rows = [r for r in read_rows_csv(args.data) if r.label is Label.NORMAL]
    X = ids.scale(np.array([r.vector() for r in rows]))
    ex = Explainer(method, harness.benchmark_background(cfg, X),
                   seed=harness.component_seed(cfg.master_seed, "explainer", method.value))
    profile = fit_profile(X, ids, ex, _guard_cfg(cfg, args))
    p = _out_dir(cfg) / "profile.json"
    profile.save(p)
    _report([p])


def cmd_guard_check(args):
    cfg = _config(args)
    ids = IdsModel.load(args.model)
    profile = ShapProfile.load(args.profile)
    gcfg = _guard_cfg(cfg, args)
    X = _load_matrix(args.data, ids)
    ex = profile.explainer()
    verdicts = [check(profile, e, gcfg) for e in ex.explain_many(ids.score_scaled, X)]
    ids_v = ids.predict_scaled(X)
    out = _out_dir(cfg)
    write_verdicts_csv(verdicts, out / "guard_verdicts.csv")
    rows = [[i, iv.value, gv.decision.value, mitigate(iv, gv).value]
            for i, (iv, gv) in enumerate(zip(ids_v, verdicts))]
    p = _emit_table(["index", "ids_verdict", "guard_verdict", "final_label"], rows, out / "final_labels.csv", args.format)
    _report([out / "guard_verdicts.csv", p])


def _scenario_outputs(cfg, which, fmt):
    bench = harness.build_benchmark(cfg)
    out = _out_dir(cfg)
    paths, reports = [], []
    if "1" in which:
        r = harness.run_scenario_degradation(cfg, bench)
        paths += harness.write_degradation(r, out)
        reports += r
    if "2" in which:
        r = harness.run_scenario_detection(cfg, bench)
        paths += harness.write_detection(r, out)
        reports += r
    if "3" in which:
        r = harness.run_scenario_mitigation(cfg, bench)
        paths += harness.write_mitigation(r, out)
        reports += r
    if fmt == "json":
        paths.append(_emit_table(harness.METRICS_HEADER, [x.row() for x in reports],
                                 out / f"scenario{''.join(which)}_metrics.json", "json"))
    return paths, reports


def _make_scenario(which):
    def run(args):
        paths, _ = _scenario_outputs(_config(args), which, args.format)
        _report(paths)

    return run


def cmd_report(args):
    cfg = _config(args)
    paths, reports = _scenario_outputs(cfg, ("1", "2", "3"), args.format)
    table = harness.summary_table(reports)
    p = cfg.output_dir / "report.txt"
    p.write_text(table + "\n")
    print(table)
    _report(paths + [p])


def cmd_config(args):
    sys.stdout.write(harness.dump_config(_config(args)))


# parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (INI sections)")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    ap = argparse.ArgumentParser(prog="rrcguard", description="RRC storm IDS, evasion attacks and attribution guard")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate the benchmark splits to CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", parents=[common], help="train the IDS (alias of `ids train`)")
    p.add_argument("--data", help="Normal windows CSV (default: simulate)")
    p.set_defaults(func=cmd_ids_train)
    ids_p = sub.add_parser("ids", help="IDS model commands")
    ids_sub = ids_p.add_subparsers(dest="ids_command", required=True)
    p = ids_sub.add_parser("train", parents=[common], help="train the IDS")
    p.add_argument("--data", help="Normal windows CSV (default: simulate)")
    p.set_defaults(func=cmd_ids_train)
    p = ids_sub.add_parser("score", parents=[common], help="score windows with a trained IDS")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_ids_score)

    p = sub.add_parser("attack", parents=[common], help="perturb Attack windows")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=[k.value for k in AttackKind], default="BIM")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_attack)

    methods = [m.value for m in Method]
    p = sub.add_parser("explain", parents=[common], help="attribute anomaly scores")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--background", required=True, help="Normal training windows CSV")
    p.add_argument("--method", choices=methods)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("guard-fit", parents=[common], help="fit the attribution profile")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="Normal training windows CSV")
    p.add_argument("--method", choices=methods)
    p.add_argument("--mode", choices=[m.value for m in GuardMode])
    p.add_argument("--lam", type=float)
    p.set_defaults(func=cmd_guard_fit)

    p = sub.add_parser("guard-check", parents=[common], help="check inputs against a profile")
    p.add_argument("--model", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=[m.value for m in GuardMode])
    p.add_argument("--lam", type=float)
    p.set_defaults(func=cmd_guard_check)

    for n in ("1", "2", "3"):
        p = sub.add_parser(f"scenario{n}", parents=[common], help=f"run scenario {n}")
        p.set_defaults(func=_make_scenario((n,)))
    p = sub.add_parser("report", parents=[common], help="run all scenarios and print a summary")
    p.set_defaults(func=cmd_report)
    p = sub.add_parser("config", parents=[common], help="print the effective config")
    p.set_defaults(func=cmd_config)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (RrcGuardError, ValueError, OSError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
