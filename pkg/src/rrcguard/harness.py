"""Scenario runner: benchmark construction, metrics, CSV/SVG artifacts.

Seed split: every component seed is ``derive_seed(master_seed, *tags)``
with a fixed tag path per component (see :func:`component_seed`), so
scenarios that need the same data regenerate it identically while
unrelated streams never coincide.
"""
from __future__ import annotations

import configparser
import csv
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .attacks import AttackConfig, AttackKind, perturb
from .errors import RejectedInputError
from .explain import BackgroundSet, Explainer, Method
from .guard import GuardConfig, GuardMode, ShapProfile, check, fit_profile, mitigate
from .ids import IdsModel, Verdict, train_ids
from .rng import derive_seed
from .sim import Label, SimConfig, WindowFeatures, extract_features, simulate

DEFAULT_EPSILONS = (0.0, 0.02, 0.05, 0.1, 0.15, 0.2)
DEFAULT_METHODS = (AttackKind.FGSM, AttackKind.BIM, AttackKind.PGD, AttackKind.GAUSSIAN)
COMPARED_EXPLAINERS = (Method.SHAP_EXACT, Method.LIME, Method.PERMUTATION)
METRICS_HEADER = [
    "scenario", "method", "epsilon", "tp", "fp", "tn", "fn",
    "accuracy", "precision", "recall", "f1", "mean_score",
]


def default_sim() -> SimConfig:
    return SimConfig(benign_ue_count=100, benign_request_rate_hz=0.4)


def default_grid(epsilons=DEFAULT_EPSILONS, methods=DEFAULT_METHODS, steps: int = 20) -> tuple[AttackConfig, ...]:
    return tuple(AttackConfig(k, e, steps=steps) for k in methods for e in epsilons)


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=default_sim)
    train: nn.TrainConfig = field(default_factory=nn.TrainConfig)
    attack_grid: tuple[AttackConfig, ...] = field(default_factory=default_grid)
    guard: GuardConfig = field(default_factory=GuardConfig)
    explainer_choice: Method | None = Method.SHAP_EXACT
    output_dir: Path = Path("out")
    master_seed: int = 0
    n_train: int = 400
    n_holdout_normal: int = 200
    n_holdout_storm: int = 200
    warmup_s: float = 3.0
    benchmark_attack: AttackConfig = AttackConfig(AttackKind.BIM, 0.1, steps=20)
    background_size: int = 100
    ids_z: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "attack_grid", tuple(self.attack_grid))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not self.attack_grid:
            raise RejectedInputError("attack_grid must not be empty")
        if not 0 <= self.master_seed < 2**64:
            raise RejectedInputError("master_seed must be an unsigned 64-bit integer")
        if min(self.n_train, self.n_holdout_normal, self.n_holdout_storm) < 1:
            raise RejectedInputError("benchmark split sizes must be positive")


def component_seed(master_seed: int, *tags) -> int:
    return derive_seed(master_seed, *tags)


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    scenario: str = ""
    method: str = ""
    epsilon: float = 0.0
    mean_score: float | None = None

    def row(self) -> list[str]:
        ms = "" if self.mean_score is None else repr(self.mean_score)
        return [
            self.scenario, self.method, repr(float(self.epsilon)),
            str(self.tp), str(self.fp), str(self.tn), str(self.fn),
            repr(self.accuracy), repr(self.precision), repr(self.recall), repr(self.f1), ms,
        ]


def compute_metrics(predictions: Sequence, truth: Sequence, positive_class, **tags) -> MetricsReport:
    if len(predictions) != len(truth):
        raise RejectedInputError(f"{len(predictions)} predictions but {len(truth)} truth labels")
    if not predictions:
        raise RejectedInputError("no predictions to score")
    tp = fp = tn = fn = 0
    for p, t in zip(predictions, truth):
        if p == positive_class:
            if t == positive_class:
                tp += 1
            else:
                fp += 1
        elif t == positive_class:
            fn += 1
        else:
            tn += 1
    acc = (tp + tn) / (tp + tn + fp + fn)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return MetricsReport(tp, fp, tn, fn, acc, prec, rec, f1, **tags)


# benchmark -------------------------------------------------------------------


def _windows(cfg: SimConfig, n: int, warmup_s: float) -> list[WindowFeatures]:
    skip = int(round(warmup_s * 1000)) // cfg.window_ms
    run = replace(cfg, duration_s=(n + skip) * cfg.window_s)
    rows = extract_features(simulate(run), run)[skip:]
    return [replace(r, window_start_s=round(r.window_start_s - skip * cfg.window_s, 9)) for r in rows]


@dataclass
class Benchmark:
    train_rows: list[WindowFeatures]
    normal_rows: list[WindowFeatures]
    storm_rows: list[WindowFeatures]
    ids: IdsModel
    X_train: np.ndarray  # scaled
    X_normal: np.ndarray
    X_storm: np.ndarray
    background: BackgroundSet

    @property
    def truth(self) -> list[Verdict]:
        return [Verdict.NORMAL] * len(self.X_normal) + [Verdict.ATTACK] * len(self.X_storm)


def simulate_splits(cfg: ExperimentConfig) -> tuple[list[WindowFeatures], ...]:
    """Training normal, held-out normal and held-out storm windows."""
    s = cfg.master_seed
    normal = replace(cfg.sim, attacker_present=False)
    storm = replace(cfg.sim, attacker_present=True)
    train_rows = _windows(replace(normal, seed=component_seed(s, "sim", "train")), cfg.n_train, cfg.warmup_s)
    normal_rows = _windows(
        replace(normal, seed=component_seed(s, "sim", "holdout-normal")), cfg.n_holdout_normal, cfg.warmup_s
    )
    storm_rows = _windows(
        replace(storm, seed=component_seed(s, "sim", "holdout-storm")), cfg.n_holdout_storm, cfg.warmup_s
    )
    return (
        [r for r in train_rows if r.label is Label.NORMAL],
        [r for r in normal_rows if r.label is Label.NORMAL],
        [r for r in storm_rows if r.label is Label.ATTACK],
    )


def train_benchmark_ids(cfg: ExperimentConfig, train_rows) -> IdsModel:
    return train_ids(train_rows, replace(cfg.train, seed=component_seed(cfg.master_seed, "train")), z=cfg.ids_z)


def build_benchmark(cfg: ExperimentConfig) -> Benchmark:
    """Simulate the three splits, train the IDS, and draw the background set."""
    train_rows, normal_rows, storm_rows = simulate_splits(cfg)
    ids = train_benchmark_ids(cfg, train_rows)
    scale = lambda rows: ids.scale(np.array([r.vector() for r in rows]))
    X_train = scale(train_rows)
    bg = benchmark_background(cfg, X_train)
    return Benchmark(train_rows, normal_rows, storm_rows, ids, X_train, scale(normal_rows), scale(storm_rows), bg)


def benchmark_background(cfg: ExperimentConfig, X_train) -> BackgroundSet:
    return BackgroundSet.sample(X_train, cfg.background_size, component_seed(cfg.master_seed, "background"))


def make_explainer(method: Method, bench: Benchmark, cfg: ExperimentConfig) -> Explainer:
    return Explainer(method, bench.background, seed=component_seed(cfg.master_seed, "explainer", method.value))


def _attack_cfg(a: AttackConfig, master_seed: int) -> AttackConfig:
    return replace(a, seed=component_seed(master_seed, "attack", a.kind.value, repr(a.epsilon)))


def attacked_storms(bench: Benchmark, cfg: ExperimentConfig, attack: AttackConfig | None = None) -> np.ndarray:
    return perturb(bench.ids, bench.X_storm, _attack_cfg(attack or cfg.benchmark_attack, cfg.master_seed))


def guard_verdicts(profile: ShapProfile, explainer: Explainer, ids: IdsModel, X, gcfg: GuardConfig):
    return [check(profile, e, gcfg) for e in explainer.explain_many(ids.score_scaled, X)]


# scenarios -------------------------------------------------------------------


def run_scenario_degradation(cfg: ExperimentConfig, bench: Benchmark | None = None) -> list[MetricsReport]:
    """IDS accuracy on the mixed holdout for NoAttack and every grid entry."""
    bench = bench or build_benchmark(cfg)
    ids = bench.ids
    normal_pred = ids.predict_scaled(bench.X_normal)
    clean_scores = ids.score_scaled(bench.X_storm)
    baseline = compute_metrics(
        normal_pred + ids.predict_scaled(bench.X_storm), bench.truth, Verdict.ATTACK,
        scenario="degradation", method=AttackKind.NO_ATTACK.value, epsilon=0.0,
        mean_score=float(clean_scores.mean()),
    )
    reports = []
    for eps in sorted({a.epsilon for a in cfg.attack_grid}):
        reports.append(replace(baseline, epsilon=float(eps)))
    for a in cfg.attack_grid:
        if a.kind is AttackKind.NO_ATTACK:
            continue
        Xp = attacked_storms(bench, cfg, a)
        scores = ids.score_scaled(Xp)
        reports.append(
            compute_metrics(
                normal_pred + ids.predict_scaled(Xp), bench.truth, Verdict.ATTACK,
                scenario="degradation", method=a.kind.value, epsilon=float(a.epsilon),
                mean_score=float(scores.mean()),
            )
        )
    return reports


def run_scenario_detection(cfg: ExperimentConfig, bench: Benchmark | None = None,
                           methods: Sequence[Method] = COMPARED_EXPLAINERS) -> list[MetricsReport]:
    """Guard detection of manipulated inputs; positive class = manipulated."""
    bench = bench or build_benchmark(cfg)
    Xp = attacked_storms(bench, cfg)
    X_eval = np.vstack([bench.X_normal, Xp])
    truth = [Verdict.NORMAL] * len(bench.X_normal) + [Verdict.ATTACK] * len(Xp)
    eps = float(cfg.benchmark_attack.epsilon)
    reports = []
    for method in methods:
        ex = make_explainer(method, bench, cfg)
        profile = fit_profile(bench.X_train, bench.ids, ex, cfg.guard)
        pred = [v.decision for v in guard_verdicts(profile, ex, bench.ids, X_eval, cfg.guard)]
        reports.append(compute_metrics(pred, truth, Verdict.ATTACK, scenario="detection",
                                       method=method.value, epsilon=eps))
    # no guard: nothing is ever flagged as manipulated
    reports.append(compute_metrics([Verdict.NORMAL] * len(truth), truth, Verdict.ATTACK,
                                   scenario="detection", method="AE-" + cfg.benchmark_attack.kind.value,
                                   epsilon=eps))
    return reports


@dataclass
class MitigationOutcome:
    reports: list[MetricsReport]
    clean_flip_rate: dict[str, float]  # share of clean-holdout labels changed by mitigation
    downgrades: int  # IDS Attack verdicts turned Normal (always 0)


def run_mitigation(cfg: ExperimentConfig, bench: Benchmark | None = None,
                   methods: Sequence[Method] = COMPARED_EXPLAINERS) -> MitigationOutcome:
    bench = bench or build_benchmark(cfg)
    ids = bench.ids
    Xp = attacked_storms(bench, cfg)
    X_att = np.vstack([bench.X_normal, Xp])
    X_clean = np.vstack([bench.X_normal, bench.X_storm])
    truth = bench.truth
    eps = float(cfg.benchmark_attack.epsilon)
    ids_att = ids.predict_scaled(X_att)
    ids_clean = ids.predict_scaled(X_clean)
    reports = [compute_metrics(ids_att, truth, Verdict.ATTACK, scenario="mitigation",
                               method="Unmitigated", epsilon=eps)]
    flips, downgrades = {}, 0
    for method in methods:
        ex = make_explainer(method, bench, cfg)
        profile = fit_profile(bench.X_train, ids, ex, cfg.guard)
        final = [mitigate(i, g) for i, g in zip(ids_att, guard_verdicts(profile, ex, ids, X_att, cfg.guard))]
        downgrades += sum(i is Verdict.ATTACK and f is Verdict.NORMAL for i, f in zip(ids_att, final))
        reports.append(compute_metrics(final, truth, Verdict.ATTACK, scenario="mitigation",
                                       method=method.value, epsilon=eps))
        clean_final = [mitigate(i, g) for i, g in
                       zip(ids_clean, guard_verdicts(profile, ex, ids, X_clean, cfg.guard))]
        flips[method.value] = sum(a is not b for a, b in zip(ids_clean, clean_final)) / len(ids_clean)
    return MitigationOutcome(reports, flips, downgrades)


def run_scenario_mitigation(cfg: ExperimentConfig, bench: Benchmark | None = None,
                            methods: Sequence[Method] = COMPARED_EXPLAINERS) -> list[MetricsReport]:
    return run_mitigation(cfg, bench, methods).reports


# artifacts -------------------------------------------------------------------


def metrics_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def read_metrics_csv(path) -> list[MetricsReport]:
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(MetricsReport(
                int(rec["tp"]), int(rec["fp"]), int(rec["tn"]), int(rec["fn"]),
                float(rec["accuracy"]), float(rec["precision"]), float(rec["recall"]), float(rec["f1"]),
                rec["scenario"], rec["method"], float(rec["epsilon"]),
                float(rec["mean_score"]) if rec["mean_score"] else None,
            ))
    return out


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _svg_frame(title: str, w: int, h: int) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
    ]


def line_chart_svg(series: dict[str, list[tuple[float, float]]], title: str, xlabel: str, ylabel: str) -> str:
    W, H, L, R, T, B = 560, 360, 60, 130, 35, 45
    xs = [x for pts in series.values() for x, _ in pts] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    x1 = x1 if x1 > x0 else x0 + 1.0
    px = lambda x: L + (x - x0) / (x1 - x0) * (W - L - R)
    py = lambda y: T + (1.0 - y) * (H - T - B)
    out = _svg_frame(title, W, H)
    out.append(f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>')
    out.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>')
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{L - 6}" y="{py(t) + 4:.1f}" text-anchor="end" font-size="10">{t:.2f}</text>')
    for x in sorted(set(xs)):
        out.append(f'<text x="{px(x):.1f}" y="{H - B + 14}" text-anchor="middle" font-size="10">{x:g}</text>')
    out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{H - 8}" text-anchor="middle" font-size="12">{xlabel}</text>')
    out.append(f'<text x="14" y="{(T + H - B) / 2:.1f}" font-size="12" '
               f'transform="rotate(-90 14 {(T + H - B) / 2:.1f})" text-anchor="middle">{ylabel}</text>')
    for i, (name, pts) in enumerate(series.items()):
        c = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="2" points="{path}"/>')
        ly = T + 16 * i + 10
        out.append(f'<line x1="{W - R + 10}" y1="{ly}" x2="{W - R + 30}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{W - R + 35}" y="{ly + 4}" font-size="11">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart_svg(bars: list[tuple[str, float]], title: str, ylabel: str) -> str:
    W, H, L, T, B = 520, 340, 60, 35, 50
    out = _svg_frame(title, W, H)
    n = max(len(bars), 1)
    slot = (W - L - 20) / n
    py = lambda y: T + (1.0 - y) * (H - T - B)
    out.append(f'<line x1="{L}" y1="{H - B}" x2="{W - 20}" y2="{H - B}" stroke="black"/>')
    out.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>')
    for t in (0.0, 0.5, 1.0):
        out.append(f'<text x="{L - 6}" y="{py(t) + 4:.1f}" text-anchor="end" font-size="10">{t:.1f}</text>')
    out.append(f'<text x="14" y="{(T + H - B) / 2:.1f}" font-size="12" '
               f'transform="rotate(-90 14 {(T + H - B) / 2:.1f})" text-anchor="middle">{ylabel}</text>')
    for i, (name, v) in enumerate(bars):
        x = L + i * slot + slot * 0.15
        out.append(f'<rect x="{x:.2f}" y="{py(v):.2f}" width="{slot * 0.7:.2f}" '
                   f'height="{(H - B) - py(v):.2f}" fill="{_COLORS[i % len(_COLORS)]}"/>')
        cx = x + slot * 0.35
        out.append(f'<text x="{cx:.2f}" y="{py(v) - 4:.2f}" text-anchor="middle" font-size="10">{v:.3f}</text>')
        out.append(f'<text x="{cx:.2f}" y="{H - B + 14}" text-anchor="middle" font-size="10">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_degradation(reports: Sequence[MetricsReport], out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    series: dict[str, list[tuple[float, float]]] = {}
    for r in reports:
        series.setdefault(r.method, []).append((r.epsilon, r.accuracy))
    svg = line_chart_svg(series, "IDS accuracy under evasion attacks", "epsilon", "accuracy")
    return [_write(out_dir / "scenario1_accuracy.csv", metrics_csv(reports)),
            _write(out_dir / "scenario1_accuracy.svg", svg)]


def write_detection(reports: Sequence[MetricsReport], out_dir) -> list[Path]:
    return [_write(Path(out_dir) / "scenario2_detection.csv", metrics_csv(reports))]


def write_mitigation(reports: Sequence[MetricsReport], out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    svg = bar_chart_svg([(r.method, r.accuracy) for r in reports], "Final-label accuracy with mitigation", "accuracy")
    return [_write(out_dir / "scenario3_mitigation.csv", metrics_csv(reports)),
            _write(out_dir / "scenario3_mitigation.svg", svg)]


def summary_table(reports: Sequence[MetricsReport]) -> str:
    lines = [f"{'scenario':<12} {'method':<14} {'eps':>5} {'acc':>7} {'prec':>7} {'rec':>7} {'f1':>7}"]
    for r in reports:
        lines.append(f"{r.scenario:<12} {r.method:<14} {r.epsilon:>5.2f} {r.accuracy:>7.4f} "
                     f"{r.precision:>7.4f} {r.recall:>7.4f} {r.f1:>7.4f}")
    return "\n".join(lines)


# config files ----------------------------------------------------------------


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an INI-style document: sections ``[experiment] [sim] [train] [attack] [guard]``.

    Keys mirror the dataclass fields. ``[attack]`` takes ``methods`` and
    ``epsilons`` (comma lists), ``steps``, and ``benchmark_method`` /
    ``benchmark_epsilon`` for the scenario 2 and 3 attack.
    """
    base = base or ExperimentConfig()
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise RejectedInputError(f"config parse error: {exc}") from exc
    known = {"experiment", "sim", "train", "attack", "guard"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise RejectedInputError(f"unknown config sections: {sorted(unknown)}")

    def typed(obj, section):
        if not cp.has_section(section):
            return {}
        defaults = {f.name: getattr(obj, f.name) for f in fields(obj)}
        out = {}
        for k, v in cp.items(section):
            if k not in defaults:
                raise RejectedInputError(f"unknown key {section}.{k}")
            d = defaults[k]
            if isinstance(d, bool):
                out[k] = cp.getboolean(section, k)
            elif d is None:
                out[k] = None if v == "None" else float(v)
            else:
                out[k] = type(d)(v)
        return out

    try:
        sim = replace(base.sim, **typed(base.sim, "sim"))
        train = replace(base.train, **typed(base.train, "train"))
        guard_kw = {}
        if cp.has_section("guard"):
            for k, v in cp.items("guard"):
                if k == "mode":
                    guard_kw["mode"] = GuardMode(v)
                elif k in ("lam", "lambda"):
                    guard_kw["lam"] = float(v)
                elif k in ("sigma_floor", "kde_density_quantile"):
                    guard_kw[k] = float(v)
                else:
                    raise RejectedInputError(f"unknown key guard.{k}")
        guard = replace(base.guard, **guard_kw)
        exp_kw = {}
        if cp.has_section("experiment"):
            for k, v in cp.items("experiment"):
                if k == "explainer_choice":
                    exp_kw[k] = None if v == "None" else Method(v)
                elif k == "output_dir":
                    exp_kw[k] = Path(v)
                elif k in ("master_seed", "n_train", "n_holdout_normal", "n_holdout_storm", "background_size"):
                    exp_kw[k] = int(v)
                elif k in ("warmup_s", "ids_z"):
                    exp_kw[k] = float(v)
                else:
                    raise RejectedInputError(f"unknown key experiment.{k}")
        grid, bench_attack = base.attack_grid, base.benchmark_attack
        if cp.has_section("attack"):
            a = dict(cp.items("attack"))
            extra = set(a) - {"methods", "epsilons", "steps", "benchmark_method", "benchmark_epsilon"}
            if extra:
                raise RejectedInputError(f"unknown keys in [attack]: {sorted(extra)}")
            methods = [AttackKind(m) for m in _csv_list(a["methods"])] if "methods" in a else list(DEFAULT_METHODS)
            epsilons = [float(e) for e in _csv_list(a["epsilons"])] if "epsilons" in a else list(DEFAULT_EPSILONS)
            steps = int(a.get("steps", 20))
            grid = default_grid(epsilons, methods, steps)
            bench_attack = AttackConfig(
                AttackKind(a.get("benchmark_method", bench_attack.kind.value)),
                float(a.get("benchmark_epsilon", bench_attack.epsilon)),
                steps=steps,
            )
        return replace(base, sim=sim, train=train, guard=guard, attack_grid=grid,
                       benchmark_attack=bench_attack, **exp_kw)
    except (ValueError, TypeError) as exc:
        raise RejectedInputError(f"invalid config value: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` for the fields it understands."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["experiment"] = {
        "master_seed": str(cfg.master_seed),
        "output_dir": str(cfg.output_dir),
        "explainer_choice": "None" if cfg.explainer_choice is None else cfg.explainer_choice.value,
        "n_train": str(cfg.n_train),
        "n_holdout_normal": str(cfg.n_holdout_normal),
        "n_holdout_storm": str(cfg.n_holdout_storm),
        "warmup_s": repr(cfg.warmup_s),
        "background_size": str(cfg.background_size),
        "ids_z": repr(cfg.ids_z),
    }
    cp["sim"] = {k: str(v) for k, v in asdict(cfg.sim).items()}
    cp["train"] = {k: str(v) for k, v in asdict(cfg.train).items()}
    kinds = list(dict.fromkeys(a.kind.value for a in cfg.attack_grid))
    eps = list(dict.fromkeys(repr(a.epsilon) for a in cfg.attack_grid))
    cp["attack"] = {
        "methods": ",".join(kinds),
        "epsilons": ",".join(eps),
        "steps": str(cfg.attack_grid[0].steps),
        "benchmark_method": cfg.benchmark_attack.kind.value,
        "benchmark_epsilon": repr(cfg.benchmark_attack.epsilon),
    }
    cp["guard"] = {
        "lam": repr(cfg.guard.lam),
        "sigma_floor": repr(cfg.guard.sigma_floor),
        "mode": cfg.guard.mode.value,
        "kde_density_quantile": repr(cfg.guard.kde_density_quantile),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
