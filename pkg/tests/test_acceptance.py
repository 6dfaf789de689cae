"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed together in
the terminal summary (see conftest.py).
"""
import time
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from rrcguard import nn
from rrcguard.attacks import AttackConfig, AttackKind, GRADIENT_KINDS, LINF_SLACK, bim, fgsm, perturb
from rrcguard.cli import main
from rrcguard.explain import BackgroundSet, Explanation, Method, shap_exact, shap_kernel
from rrcguard.guard import GuardConfig, ShapProfile, check
from rrcguard.harness import (
    ExperimentConfig, build_benchmark, run_mitigation, run_scenario_degradation, run_scenario_detection,
)
from rrcguard.ids import Verdict
from rrcguard.rng import RngStream
from rrcguard.sim import EventKind, Label, SimConfig, extract_features, simulate

from conftest import ACCEPTANCE_LINES


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def timed_bench():
    t0 = time.perf_counter()
    cfg = ExperimentConfig()
    b = build_benchmark(cfg)
    return cfg, b, time.perf_counter() - t0


def test_criterion_01_gradient_oracle():
    t0 = time.perf_counter()
    worst, cases, k = 0.0, 0, 0
    while cases < 50:
        m = nn.build_autoencoder(seed=k)
        x = RngStream(10_000 + k).uniform(5)
        k += 1
        if nn.distance_batch(m, x)[0] <= 1e-3:
            continue
        g = nn.input_gradient(m, x)
        fd = nn.finite_diff_gradient(lambda v: float(nn.distance_batch(m, v)[0]), x, h=1e-5)
        rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-12)
        worst = max(worst, float(rel.max()))
        cases += 1
    dt = time.perf_counter() - t0
    ok = worst < 1e-4 and dt < 10
    assert record(1, ok, f"max rel err {worst:.2e} (< 1e-4) over {cases} pairs, {dt:.2f}s (< 10s)")


def test_criterion_02_shapley_exactness():
    t0 = time.perf_counter()
    worst_kernel, worst_eff = 0.0, 0.0
    for k in range(100):
        m = nn.build_autoencoder(seed=500 + k)
        rng = RngStream(900 + k)
        f = lambda X: nn.distance_batch(m, X)
        x, bg = rng.uniform(5), BackgroundSet(rng.uniform((20, 5)))
        e = shap_exact(f, x, bg)
        worst_eff = max(worst_eff, abs(e.base_value + e.attributions.sum() - float(f(x)[0])))
        if k < 20:
            kern = shap_kernel(f, x, bg, enumerate_all=True)
            worst_kernel = max(worst_kernel, float(np.max(np.abs(kern.attributions - e.attributions))))
    dt = time.perf_counter() - t0
    ok = worst_kernel <= 1e-8 and worst_eff <= 1e-6 and dt < 30
    assert record(2, ok, f"kernel-vs-exact {worst_kernel:.1e} (<= 1e-8, 20 cases), "
                         f"efficiency {worst_eff:.1e} (<= 1e-6, 100 cases), {dt:.2f}s (< 30s)")


def test_criterion_03_attack_contracts(timed_bench):
    _, b, _ = timed_bench
    ids = b.ids
    rng = RngStream(33)
    X = rng.uniform((1000, 5))
    eps_each = rng.uniform(1000, 0.0, 0.5)
    identity = all(
        np.array_equal(perturb(ids, X[:50], AttackConfig(kind, 0.0)), X[:50])
        for kind in (AttackKind.FGSM, AttackKind.BIM, AttackKind.PGD, AttackKind.GAUSSIAN)
    )
    budget_ok, domain_ok = True, True
    for kind in (AttackKind.FGSM, AttackKind.BIM, AttackKind.PGD, AttackKind.GAUSSIAN):
        for eps in np.unique(np.round(eps_each, 1)):
            sel = np.round(eps_each, 1) == eps
            out = perturb(ids, X[sel], AttackConfig(kind, float(eps), steps=10, seed=7))
            domain_ok &= bool(np.all((out >= 0) & (out <= 1)))
            if kind in GRADIENT_KINDS:
                budget_ok &= bool(np.all(np.abs(out - X[sel]) <= eps + LINF_SLACK))
    collapse = all(np.array_equal(bim(ids, X, e, e, 1), fgsm(ids, X, e)) for e in (0.02, 0.1, 0.2))
    ok = identity and budget_ok and domain_ok and collapse
    assert record(3, ok, f"eps=0 identity {identity}, L-inf budget {budget_ok}, domain {domain_ok}, "
                         f"BIM(1 step)==FGSM bitwise {collapse} (1000 inputs)")


def test_criterion_04_baseline_quality(timed_bench):
    cfg, b, build_s = timed_bench
    t0 = time.perf_counter()
    base = [r for r in run_scenario_degradation(replace(cfg, attack_grid=(AttackConfig(),)), b)
            if r.method == "NoAttack"][0]
    dt = build_s + time.perf_counter() - t0
    ok = base.accuracy >= 0.95 and dt < 120
    assert record(4, ok, f"unattacked accuracy {base.accuracy:.4f} (>= 0.95) on 200+200, {dt:.1f}s (< 120s)")


def test_criterion_05_degradation(timed_bench):
    cfg, b, _ = timed_bench
    reports = run_scenario_degradation(cfg, b)
    base = next(r for r in reports if r.method == "NoAttack").accuracy
    fgsm_rows = sorted((r for r in reports if r.method == "FGSM"), key=lambda r: r.epsilon)
    drop = base - fgsm_rows[-1].accuracy
    mono = {}
    for kind in GRADIENT_KINDS:
        s = [r.mean_score for r in sorted((r for r in reports if r.method == kind.value), key=lambda r: r.epsilon)]
        tol = 0.0 if kind is AttackKind.FGSM else 1e-6
        mono[kind.value] = all(y <= x + tol for x, y in zip(s, s[1:]))
    ok = drop >= 0.25 and all(mono.values())
    assert record(5, ok, f"FGSM eps={fgsm_rows[-1].epsilon} accuracy drop {drop:.4f} (>= 0.25); "
                         f"mean score non-increasing {mono}")


def test_criterion_06_guard_detection(timed_bench):
    cfg, b, _ = timed_bench
    reports = {r.method: r for r in run_scenario_detection(cfg, b, methods=(Method.SHAP_EXACT,))}
    shap, ae = reports["ShapExact"], reports["AE-BIM"]
    ok = shap.f1 >= 0.80 and shap.recall >= 0.90 and ae.precision == 0 and ae.recall == 0
    assert record(6, ok, f"SHAP guard F1 {shap.f1:.4f} (>= 0.80), recall {shap.recall:.4f} (>= 0.90); "
                         f"AE-only precision {ae.precision:.1f} recall {ae.recall:.1f} (= 0)")


def test_criterion_07_mitigation(timed_bench):
    cfg, b, _ = timed_bench
    out = run_mitigation(cfg, b, methods=(Method.SHAP_EXACT,))
    acc = {r.method: r.accuracy for r in out.reports}
    gain = acc["ShapExact"] - acc["Unmitigated"]
    flips = out.clean_flip_rate["ShapExact"]
    ok = gain >= 0.10 and out.downgrades == 0 and flips <= 0.10
    assert record(7, ok, f"mitigated {acc['ShapExact']:.4f} vs unmitigated {acc['Unmitigated']:.4f}: "
                         f"gain {gain:+.4f} (>= +0.10); downgrades {out.downgrades} (= 0); "
                         f"clean flips {flips:.4f} (<= 0.10)")


def test_criterion_08_guard_rule_faithfulness():
    rng = RngStream(8)
    mismatches, mono_bad = 0, 0
    for _ in range(10_000):
        mu = rng.uniform(5, -1, 1)
        sigma = rng.uniform(5, 0.0, 0.5)
        S = mu + rng.normal(5) * sigma * 2.5
        lam = float(rng.uniform(None, 0.5, 3.5))
        p = ShapProfile(mu, sigma, 30, Method.SHAP_EXACT)
        e = Explanation(S, 0.0, Method.SHAP_EXACT, 0.0)
        sd = np.maximum(sigma, 1e-6)
        expect = any(S[j] < mu[j] - lam * sd[j] or S[j] > mu[j] + lam * sd[j] for j in range(5))
        mismatches += (check(p, e, GuardConfig(lam=lam)).decision is Verdict.ATTACK) != expect
        v1, v2, v3 = (check(p, e, GuardConfig(lam=l)).violating_features for l in (1.0, 2.0, 3.0))
        mono_bad += not (v1 >= v2 >= v3)
    ok = mismatches == 0 and mono_bad == 0
    assert record(8, ok, f"{mismatches} mismatches vs reference inequality, {mono_bad} lambda-monotonicity "
                         f"violations over 10000 pairs")


def test_criterion_09_determinism(tmp_path):
    t0 = time.perf_counter()
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        for cmd in ("scenario1", "scenario2", "scenario3"):
            assert main([cmd, "--out", str(out), "--seed", "0"]) == 0
        digests.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    dt = (time.perf_counter() - t0) / 2
    same = digests[0] == digests[1] and len(digests[0]) == 3
    ok = same and dt < 300
    assert record(9, ok, f"byte-identical CSVs across re-runs {same} ({len(digests[0])} files); "
                         f"three-scenario suite {dt:.1f}s (< 300s)")


def test_criterion_10_simulator_physics():
    cfg = SimConfig(benign_ue_count=100, benign_request_rate_hz=0.4, attacker_present=True,
                    attack_start_s=20.0, duration_s=40.0)
    trace = simulate(cfg)
    level, peak, pending, causal = 0, 0, Counter(), True
    for e in trace:
        if e.kind is EventKind.RESOURCE_RESERVED:
            level += 1
        elif e.kind is EventKind.RESOURCE_RELEASED:
            level -= 1
        peak = max(peak, level)
        if e.kind is EventKind.SETUP:
            pending[e.ue_id] += 1
        elif e.kind is EventKind.SETUP_COMPLETE:
            causal &= pending[e.ue_id] > 0  # every Msg5 answers an earlier Msg4
            pending[e.ue_id] -= 1
    rows = extract_features(trace, cfg)
    r1 = {lab: np.mean([r.f4_r1_ratio for r in rows if r.label is lab]) for lab in (Label.NORMAL, Label.ATTACK)}
    ok = len(trace) >= 10_000 and peak <= 16 and causal and r1[Label.ATTACK] < r1[Label.NORMAL]
    assert record(10, ok, f"{len(trace)} events, peak reserved {peak} (<= 16), Msg5-after-Msg4 {causal}, "
                          f"mean R1 attack {r1[Label.ATTACK]:.3f} < normal {r1[Label.NORMAL]:.3f}")
