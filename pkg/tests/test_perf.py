import json
from pathlib import Path

import pytest

from talu import perf
from talu.perf import PerfConfigError, config_from_dict, equi_area_report, load_config, load_constants

GOLDEN = Path(__file__).parent / "golden" / "perf_default.json"
C = load_constants()


def default_dict():
    return json.loads(json.dumps({
        "subject": {"arch": "talu_v", "unit": "TALU", "lanes": 128, "format": "p8e2"},
        "baseline": {"arch": "umac_v", "unit": "UMAC", "units": 6, "bitwidth": 8},
        "kernel": {"rows": 3, "cols": 3, "inner": 3},
        "assumptions": {"mac_mode": "pipelined", "decode_amortized": True},
        "equi_area_tolerance": 0.10, "equi_area_override": False,
    }))


def test_shipped_default_is_the_documented_one():
    assert load_config() == config_from_dict(default_dict())


def test_talu_rates():
    cfg = load_config()
    r = perf.talu_v_rates(cfg.subject, cfg.kernel, cfg.assumptions, C)
    assert r.components["mac_latency_cycles"] == 42
    assert r.power_w * 1e3 == pytest.approx(231.68, rel=1e-12)
    with pytest.raises(PerfConfigError):
        bad = default_dict()
        bad["subject"]["lanes"] = 0
        equi_area_report(config_from_dict(bad))


def test_umac_rates():
    cfg = load_config()
    r = perf.umac_v_rates(cfg.baseline, cfg.kernel, C)
    assert r.components["macs_per_s"] == pytest.approx(1.6008e10, rel=1e-12)
    model = perf.umac_rate_model(cfg.baseline, C)
    assert (model.rate(32), model.rate(16), model.rate(8), model.pipeline_depth) == (1, 2, 4, 6)
    bad = default_dict()
    bad["baseline"]["units"] = 0
    with pytest.raises(PerfConfigError):
        equi_area_report(config_from_dict(bad))


def test_default_report_matches_golden_exactly():
    report = equi_area_report(load_config())
    assert perf.report_json(report) == GOLDEN.read_text()
    assert report.energy_efficiency_ratio > 1
    assert report.targets == {"throughput_ratio": 0.93, "energy_efficiency_ratio": 1.98}


def test_golden_matches_hand_arithmetic():
    golden = json.loads(GOLDEN.read_text())
    talu_kps = 128 * 2e9 / max(27 * 19, 18 * 23)
    umac_kps = 6 * 4 * 667e6 / 27
    assert golden["throughput_ratio"] == pytest.approx(talu_kps / umac_kps, rel=1e-12)
    assert golden["energy_efficiency_ratio"] == pytest.approx(
        (talu_kps / (128 * 1.81e-3)) / (umac_kps / (6 * 99e-3)), rel=1e-12)


def test_report_is_deterministic():
    a = perf.report_json(equi_area_report(load_config()))
    b = perf.report_json(equi_area_report(config_from_dict(default_dict())))
    assert a == b


@pytest.mark.parametrize("arch", ["subject", "baseline"])
def test_self_comparison_is_one(arch):
    d = default_dict()
    other = "baseline" if arch == "subject" else "subject"
    d[other] = d[arch]
    r = equi_area_report(config_from_dict(d))
    assert r.throughput_ratio == 1.0 and r.energy_efficiency_ratio == 1.0 and r.area_ratio == 1.0


def test_area_mismatch_needs_override():
    d = default_dict()
    d["baseline"]["units"] = 20
    with pytest.raises(PerfConfigError):
        equi_area_report(config_from_dict(d))
    d["equi_area_override"] = True
    assert not equi_area_report(config_from_dict(d)).equi_area_ok


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["subject"].update(arch="gpu"),
    lambda d: d["subject"].update(colour="red"),
    lambda d: d["assumptions"].update(mac_mode="fused"),
    lambda d: d["assumptions"].update(decode_amortized="yes"),
    lambda d: d.update(equi_area_tolerance=-1),
    lambda d: d.update(equi_area_override="no"),
    lambda d: d["kernel"].update(rows=0),
    lambda d: d.pop("baseline"),
    lambda d: d["baseline"].update(bitwidth=12),
])
def test_schema_violations(mutate):
    d = default_dict()
    mutate(d)
    with pytest.raises(PerfConfigError):
        equi_area_report(config_from_dict(d))


def test_every_assumption_set_keeps_the_published_direction():
    reports = perf.assumption_sweep(load_config())
    assert len(reports) == 2 * len(perf.MAC_MODES)
    for r in reports:
        assert r.energy_efficiency_ratio > 1
        assert 0 < r.throughput_ratio < 1.5


def test_decode_cost_lowers_throughput():
    d = default_dict()
    amortized = equi_area_report(config_from_dict(d)).throughput_ratio
    d["assumptions"]["decode_amortized"] = False
    assert equi_area_report(config_from_dict(d)).throughput_ratio < amortized


def test_ratio_annotations_within_one_percent():
    table = perf.comparison_table()
    rows = {r["metric"]: r for r in table["ratios"]}
    for metric, printed in (("area", 19.8), ("power", 54.6), ("power_density", 2.76), ("pdp", 3.47)):
        assert rows[metric]["printed"] == printed
        assert abs(rows[metric]["computed"] / printed - 1) < 0.01
    assert rows["area"]["computed"] == pytest.approx(19.8, abs=0.1)
    assert rows["power"]["computed"] == pytest.approx(54.6, abs=0.2)
    assert C.unit("TALU").power_density == pytest.approx(696.15, abs=0.01)


def test_unit_metrics_must_be_positive():
    with pytest.raises(PerfConfigError):
        perf.UnitMetrics("x", 1e9, 0.0, 1.0, {}, {})


def test_text_report_shows_targets_and_deviation():
    text = perf.report_text(equi_area_report(load_config()))
    assert "0.93" in text and "1.98" in text and "dev %" in text
