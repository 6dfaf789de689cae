from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rrcguard.attacks import AttackConfig, AttackKind, GRADIENT_KINDS
from rrcguard.errors import RejectedInputError
from rrcguard.explain import Method
from rrcguard.guard import GuardMode
from rrcguard.harness import (
    ExperimentConfig, compute_metrics, dump_config, metrics_csv, parse_config, read_metrics_csv,
    run_mitigation, run_scenario_degradation, run_scenario_detection, write_degradation, write_mitigation,
)
from rrcguard.ids import Verdict

A, N = Verdict.ATTACK, Verdict.NORMAL


def test_metrics_hand_confusion():
    pred = [A] * 3 + [A] + [N] * 4 + [N] * 2
    truth = [A] * 3 + [N] + [N] * 4 + [A] * 2
    r = compute_metrics(pred, truth, A)
    assert (r.tp, r.fp, r.tn, r.fn) == (3, 1, 4, 2)
    assert r.accuracy == pytest.approx(0.7)
    assert r.precision == pytest.approx(0.75)
    assert r.recall == pytest.approx(0.6)
    assert r.f1 == pytest.approx(2 / 3)


def test_metrics_degenerate_cases():
    r = compute_metrics([A, N], [A, N], A)
    assert r.accuracy == r.precision == r.recall == r.f1 == 1.0
    r = compute_metrics([N, N], [A, N], A)
    assert r.precision == 0.0 and r.f1 == 0.0
    with pytest.raises(RejectedInputError):
        compute_metrics([A], [A, N], A)
    with pytest.raises(RejectedInputError):
        compute_metrics([], [], A)


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
def test_metrics_invariants(pairs):
    pred = [A if p else N for p, _ in pairs]
    truth = [A if t else N for _, t in pairs]
    r = compute_metrics(pred, truth, A)
    n = r.tp + r.fp + r.tn + r.fn
    assert n == len(pairs)
    assert r.accuracy == (r.tp + r.tn) / n
    assert r.precision == (r.tp / (r.tp + r.fp) if r.tp + r.fp else 0.0)
    assert r.recall == (r.tp / (r.tp + r.fn) if r.tp + r.fn else 0.0)
    pr = r.precision + r.recall
    assert r.f1 == (2 * r.precision * r.recall / pr if pr else 0.0)
    assert all(0 <= v <= 1 for v in (r.accuracy, r.precision, r.recall, r.f1))


def test_config_validation():
    with pytest.raises(RejectedInputError):
        ExperimentConfig(attack_grid=())
    with pytest.raises(RejectedInputError):
        ExperimentConfig(master_seed=-1)


def test_config_round_trip():
    text = """
[experiment]
master_seed = 9
explainer_choice = Lime
[sim]
benign_ue_count = 50
attacker_present = false
[train]
epochs = 20
init_scale = None
[attack]
methods = FGSM,PGD
epsilons = 0,0.1
benchmark_epsilon = 0.05
[guard]
lambda = 3
mode = KdeDensity
"""
    cfg = parse_config(text)
    assert cfg.master_seed == 9 and cfg.explainer_choice is Method.LIME
    assert cfg.sim.benign_ue_count == 50 and cfg.train.epochs == 20 and cfg.train.init_scale is None
    assert [(a.kind, a.epsilon) for a in cfg.attack_grid] == [
        (AttackKind.FGSM, 0.0), (AttackKind.FGSM, 0.1), (AttackKind.PGD, 0.0), (AttackKind.PGD, 0.1)]
    assert cfg.benchmark_attack.epsilon == 0.05
    assert cfg.guard.lam == 3.0 and cfg.guard.mode is GuardMode.KDE_DENSITY
    again = parse_config(dump_config(cfg))
    assert again == cfg
    with pytest.raises(RejectedInputError):
        parse_config("[sim]\nbogus = 1\n")
    with pytest.raises(RejectedInputError):
        parse_config("[nope]\n")
    with pytest.raises(RejectedInputError):
        parse_config("[train]\nepochs = many\n")


def test_degradation_shape(bench, default_cfg):
    reports = run_scenario_degradation(default_cfg, bench)
    base = [r for r in reports if r.method == "NoAttack"]
    assert len({r.accuracy for r in base}) == 1  # flat line
    for kind in GRADIENT_KINDS:
        series = sorted((r for r in reports if r.method == kind.value), key=lambda r: r.epsilon)
        assert series[0].epsilon == 0 and series[0].accuracy == base[0].accuracy
        scores = [r.mean_score for r in series]
        assert all(b <= a + 1e-6 for a, b in zip(scores, scores[1:]))
        acc = [r.accuracy for r in series]
        rises = [b - a for a, b in zip(acc, acc[1:]) if b > a]
        assert len(rises) <= 1 and all(x <= 0.01 for x in rises)


def test_detection_contracts(bench, default_cfg):
    reports = {r.method: r for r in run_scenario_detection(default_cfg, bench)}
    ae = reports["AE-BIM"]
    assert ae.tp == ae.fp == 0 and ae.precision == ae.recall == ae.f1 == 0.0
    assert reports["ShapExact"].f1 >= 0.80 and reports["ShapExact"].f1 > ae.f1


def test_mitigation_contracts(bench, default_cfg):
    out = run_mitigation(default_cfg, bench)
    assert out.downgrades == 0
    assert all(v <= 0.10 for v in out.clean_flip_rate.values())


def test_artifacts_written(bench, default_cfg, tmp_path):
    reports = run_scenario_degradation(replace(default_cfg, attack_grid=(AttackConfig(AttackKind.FGSM, 0.1),)), bench)
    paths = write_degradation(reports, tmp_path)
    assert read_metrics_csv(paths[0]) == reports
    assert paths[1].read_text().startswith("<svg")
    svg = write_mitigation(reports, tmp_path)[1].read_text()
    assert svg.count("<rect") == len(reports) + 1
    assert metrics_csv(reports).splitlines()[0].startswith("scenario,method,epsilon,tp")
