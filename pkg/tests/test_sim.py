from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rrcguard.errors import CalibrationError, RejectedInputError
from rrcguard.sim import (
    EventKind, Label, LabeledDataset, RrcEvent, Scaler, SimConfig, extract_features,
    generate_dataset, read_rows_csv, simulate, write_rows_csv,
)

NORMAL = SimConfig(benign_ue_count=100, benign_request_rate_hz=0.4, duration_s=20)


def reserved_profile(trace):
    """Number of simultaneously reserved resources after each event."""
    level, out = 0, []
    for e in trace:
        if e.kind is EventKind.RESOURCE_RESERVED:
            level += 1
        elif e.kind is EventKind.RESOURCE_RELEASED:
            level -= 1
        out.append(level)
    return out


def test_empty_system_has_no_messages():
    trace = simulate(SimConfig())
    assert not [e for e in trace if e.kind in (EventKind.CONN_REQUEST, EventKind.SETUP, EventKind.SETUP_COMPLETE)]


def test_pool_exhausts_within_a_second_of_onset():
    cfg = SimConfig(attacker_present=True, attack_start_s=2.0, duration_s=5)
    blocked = [e.time_s for e in simulate(cfg) if e.kind is EventKind.BLOCKED]
    assert blocked and 2.0 <= blocked[0] < 3.0
    # 16 resources at 132 req/s are gone after 16 requests
    assert blocked[0] == pytest.approx(2.0 + 16 / 132, abs=1e-9)


def test_determinism():
    cfg = replace(NORMAL, attacker_present=True, seed=4)
    assert simulate(cfg) == simulate(cfg)
    assert simulate(cfg) != simulate(replace(cfg, seed=5))


def test_malicious_ue_never_completes():
    trace = simulate(replace(NORMAL, attacker_present=True))
    assert not [e for e in trace if e.malicious and e.kind is EventKind.SETUP_COMPLETE]


@settings(max_examples=15, deadline=None)
@given(
    st.integers(1, 200), st.floats(0.05, 2.0), st.booleans(), st.integers(1, 24), st.integers(0, 10**6)
)
def test_causality_and_pool_bound(ues, rate, attacker, n_res, seed):
    cfg = SimConfig(benign_ue_count=ues, benign_request_rate_hz=rate, attacker_present=attacker,
                    n_resources=n_res, seed=seed, duration_s=5)
    trace = simulate(cfg)
    assert all(a.time_s <= b.time_s for a, b in zip(trace, trace[1:]))
    levels = reserved_profile(trace)
    assert max(levels, default=0) <= n_res and min(levels, default=0) >= 0
    seen_setup = {}
    for e in trace:
        if e.kind is EventKind.SETUP:
            seen_setup[e.ue_id] = seen_setup.get(e.ue_id, 0) + 1
        if e.kind is EventKind.SETUP_COMPLETE:
            assert seen_setup.get(e.ue_id, 0) > 0


def test_blocking_iff_overloaded():
    light = SimConfig(benign_ue_count=10, benign_request_rate_hz=0.1, duration_s=30)  # 1 req/s
    assert not [e for e in simulate(light) if e.kind is EventKind.BLOCKED]
    # no Msg5 from the attacker: 132 req/s far above 16 / 2.7 s
    heavy = SimConfig(attacker_present=True, duration_s=5)
    assert [e for e in simulate(heavy) if e.kind is EventKind.BLOCKED]


def test_idle_window_convention():
    rows = extract_features([], SimConfig(duration_s=1))
    assert len(rows) == 10
    for r in rows:
        assert r.vector().tolist() == [0, 0, 0, 1.0, 0] and r.label is Label.NORMAL


def test_occupancy_carries_over_into_idle_window():
    cfg = SimConfig(duration_s=0.3, benign_ue_count=1)
    trace = [RrcEvent(0.05, EventKind.CONN_REQUEST, 0), RrcEvent(0.05, EventKind.RESOURCE_RESERVED, 0),
             RrcEvent(0.05, EventKind.SETUP, 0), RrcEvent(0.25, EventKind.RESOURCE_RELEASED, 0)]
    rows = extract_features(trace, cfg)
    assert rows[1].f4_r1_ratio == 1.0 and rows[1].f1_conn_request_rate == 0
    assert rows[1].f5_resource_occupancy == pytest.approx(1 / 16)
    assert rows[0].f5_resource_occupancy == pytest.approx(0.5 / 16)
    assert rows[2].f5_resource_occupancy == pytest.approx(0.5 / 16)


def test_ratio_by_definition():
    cfg = SimConfig(duration_s=0.1, benign_ue_count=10)
    trace = []
    for ue in range(10):
        t = 0.001 * ue
        trace += [RrcEvent(t, EventKind.CONN_REQUEST, ue), RrcEvent(t, EventKind.RESOURCE_RESERVED, ue),
                  RrcEvent(t, EventKind.SETUP, ue)]
    for ue in range(4):
        trace.append(RrcEvent(0.06 + 0.001 * ue, EventKind.SETUP_COMPLETE, ue))
    trace.sort(key=lambda e: e.time_s)
    (row,) = extract_features(trace, cfg)
    assert (row.f2_msg4_count, row.f3_msg5_count, row.f4_r1_ratio) == (10, 4, 0.4)
    assert row.f1_conn_request_rate == pytest.approx(100.0)


def test_unordered_trace_rejected():
    with pytest.raises(RejectedInputError):
        extract_features([RrcEvent(0.5, EventKind.SETUP, 0), RrcEvent(0.1, EventKind.SETUP, 0)], SimConfig())


def test_r1_ordering_and_separability():
    n = 200
    sims = {
        Label.NORMAL: NORMAL,
        Label.HIGH_LOAD: replace(NORMAL, benign_request_rate_hz=1.2),
        Label.ATTACK: replace(NORMAL, attacker_present=True),
    }
    means = {}
    for label, cfg in sims.items():
        run = replace(cfg, duration_s=(n + 30) * 0.1)
        rows = [r for r in extract_features(simulate(run), run)[30:]]
        assert {r.label for r in rows} == {label}
        means[label] = np.mean([r.vector() for r in rows], axis=0)
    assert means[Label.ATTACK][3] < means[Label.HIGH_LOAD][3] < means[Label.NORMAL][3]
    assert means[Label.ATTACK][0] > NORMAL.overload_threshold_hz > means[Label.NORMAL][0]


def test_highload_label():
    cfg = replace(NORMAL, benign_request_rate_hz=1.0, duration_s=1)
    assert {r.label for r in extract_features(simulate(cfg), cfg)} == {Label.HIGH_LOAD}


def test_generate_dataset_examples(tmp_path):
    ds = generate_dataset([NORMAL], 100)
    assert len(ds) == 100 and set(ds.labels()) == {Label.NORMAL}
    assert np.all(ds.scaler_stats.min <= ds.scaler_stats.max)
    mixed = generate_dataset([NORMAL, replace(NORMAL, attacker_present=True)], 100, seed=3)
    f1 = {lab: np.mean([r.f1_conn_request_rate for r in mixed.subset(lab)]) for lab in (Label.NORMAL, Label.ATTACK)}
    assert f1[Label.ATTACK] > f1[Label.NORMAL]
    again = generate_dataset([NORMAL, replace(NORMAL, attacker_present=True)], 100, seed=3)
    assert mixed.rows == again.rows
    with pytest.raises(CalibrationError):
        generate_dataset([replace(NORMAL, attacker_present=True)], 10)
    p = mixed.write_csv(tmp_path / "d.csv")
    back = LabeledDataset.read_csv(p)
    assert back.rows == mixed.rows
    assert np.array_equal(back.scaler_stats.min, mixed.scaler_stats.min)


def test_rows_csv_round_trip(tmp_path):
    rows = extract_features(simulate(NORMAL), NORMAL)
    write_rows_csv(rows, tmp_path / "r.csv")
    assert read_rows_csv(tmp_path / "r.csv") == rows


@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), min_size=1, max_size=20))
def test_scaler_maps_into_unit_box(rows):
    X = np.array(rows)
    s = Scaler.fit(X)
    Y = s.transform(np.vstack([X, X * 2 + 5]))
    assert np.all((Y >= 0) & (Y <= 1))
    assert np.all(Y[:, s.constant] == 0.5)
