import copy
import json
import math
from pathlib import Path

import numpy as np
import pytest

import prcwa.harness as harness
from prcwa import (ConvergenceRecord, fit_slope, load_config, parse_config,
                   read_records_csv, run_sweep, serialize_config,
                   write_records_csv)
from prcwa.harness import ConfigError, HarnessError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "demos" / "configs"

MINIMAL = {
    "problem": {"type": "homogeneous", "period_nm": 500.0,
                "domain_height_nm": 300.0, "eps": [1.0, 0.0]},
    "incident": {"wavelength_nm": 600.0, "theta_deg": 0.0},
    "sweep": {"M": [1], "h_nm": [75.0]},
    "reference": {"policy": "self", "M_ref": 2, "h_ref_nm": 50.0},
}


def lamellar_doc():
    return json.loads((CONFIG_DIR / "lamellar.json").read_text())


class TestConfig:
    def test_round_trip(self):
        cfg = parse_config(copy.deepcopy(MINIMAL))
        again = parse_config(serialize_config(cfg))
        assert again == cfg

    def test_round_trip_all_shipped_configs(self):
        for path in sorted(CONFIG_DIR.glob("*.json")):
            cfg = load_config(path)
            assert parse_config(serialize_config(cfg)) == cfg

    def test_unknown_key_reports_path(self):
        doc = copy.deepcopy(MINIMAL)
        doc["sweep"]["foo"] = 1
        with pytest.raises(ConfigError, match=r"sweep\.foo"):
            parse_config(doc)

    def test_unknown_problem_key_reports_path(self):
        doc = copy.deepcopy(MINIMAL)
        doc["problem"]["wavelength"] = 500
        with pytest.raises(ConfigError, match=r"problem\.wavelength"):
            parse_config(doc)

    def test_missing_section(self):
        doc = copy.deepcopy(MINIMAL)
        del doc["incident"]
        with pytest.raises(ConfigError, match="incident"):
            parse_config(doc)

    def test_complex_values_must_be_pairs(self):
        doc = copy.deepcopy(MINIMAL)
        doc["problem"]["eps"] = 1.0
        with pytest.raises(ConfigError, match="two-element"):
            parse_config(doc)

    def test_unsorted_h_list_normalized(self):
        doc = copy.deepcopy(MINIMAL)
        doc["sweep"] = {"M": [3, 1, 2], "h_nm": [10.0, 75.0, 30.0]}
        doc["reference"] = {"policy": "self", "M_ref": 4, "h_ref_nm": 5.0}
        cfg = parse_config(doc)
        assert cfg.h_list == (75.0, 30.0, 10.0)  # coarse to fine
        assert cfg.m_list == (1, 2, 3)

    def test_reference_invariants(self):
        doc = copy.deepcopy(MINIMAL)
        doc["reference"] = {"policy": "self", "M_ref": 0, "h_ref_nm": 50.0}
        with pytest.raises(ConfigError, match="M_ref"):
            parse_config(doc)
        doc["reference"] = {"policy": "self", "M_ref": 2, "h_ref_nm": 100.0}
        with pytest.raises(ConfigError, match="h_ref"):
            parse_config(doc)

    def test_angle_in_degrees(self):
        doc = copy.deepcopy(MINIMAL)
        doc["incident"]["theta_deg"] = 30.0
        cfg = parse_config(doc)
        assert cfg.problem.incident.theta == pytest.approx(math.pi / 6)


class TestRunSweep:
    def test_lamellar_vs_dense_oracle(self):
        doc = lamellar_doc()
        doc["sweep"] = {"M": [3], "h_nm": [50.0]}
        records = run_sweep(parse_config(doc))
        assert len(records) == 1
        assert records[0].rel_l2_error <= 1e-8

    def test_homogeneous_exactness(self):
        cfg = load_config(CONFIG_DIR / "homogeneous.json")
        records = run_sweep(cfg)
        assert len(records) == 4
        assert all(rec.rel_l2_error <= 1e-10 for rec in records)

    def test_configured_point_order(self):
        cfg = load_config(CONFIG_DIR / "homogeneous.json")
        records = run_sweep(cfg)
        assert [(r.h, r.M) for r in records] == [
            (150.0, 0), (150.0, 2), (75.0, 0), (75.0, 2)]

    def test_planar_reference_policy(self):
        cfg = load_config(CONFIG_DIR / "quarter_wave.json")
        records = run_sweep(cfg)
        assert all(rec.rel_l2_error <= 1e-10 for rec in records)

    def test_failure_recorded_as_nan(self, monkeypatch):
        cfg = load_config(CONFIG_DIR / "homogeneous.json")
        real = harness.solve_grating
        def flaky(problem, M, mesh, *args, **kwargs):
            if M == 2:
                raise RuntimeError("synthetic failure")
            return real(problem, M, mesh, *args, **kwargs)
        monkeypatch.setattr(harness, "solve_grating", flaky)
        messages = []
        records = run_sweep(cfg, log=messages.append)
        assert len(records) == 4
        assert math.isnan(records[1].rel_l2_error)
        assert math.isfinite(records[0].rel_l2_error)
        assert any("failed" in m for m in messages)

    def test_determinism_and_thread_independence(self, tmp_path):
        cfg = load_config(CONFIG_DIR / "lamellar.json")
        rec1 = run_sweep(cfg, threads=1)
        rec2 = run_sweep(cfg, threads=1)
        rec4 = run_sweep(cfg, threads=4)
        errs = lambda rs: [r.rel_l2_error for r in rs]
        assert errs(rec1) == errs(rec2) == errs(rec4)
        # identical CSV bytes modulo the wall-time column
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_records_csv(rec1, p1)
        write_records_csv(rec2, p2)
        strip = lambda p: ["," .join(line.split(",")[:3]) for line in p.read_text().splitlines()]
        assert strip(p1) == strip(p2)


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        records = [ConvergenceRecord(50.0, 8, 0.5, 0.1),
                   ConvergenceRecord(25.0, 8, 1e-17, 0.2)]
        path = tmp_path / "r.csv"
        write_records_csv(records, path)
        again = read_records_csv(path)
        assert again == records

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(HarnessError):
            read_records_csv(path)


def power_law_records(coeff=1e-2, power=1.0, hs=(50.0, 25.0, 10.0, 5.0, 2.0, 1.0)):
    return [ConvergenceRecord(h, 8, coeff * h**power, 0.0) for h in hs]


class TestFitSlope:
    def test_exact_power_law(self):
        fit = fit_slope(power_law_records(), axis="h")
        assert fit.slope == pytest.approx(1.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.points_used == 6

    def test_m_axis(self):
        records = [ConvergenceRecord(1.0, m, 0.3 * m**-1.25, 0.0)
                   for m in (2, 4, 8, 16, 32)]
        fit = fit_slope(records, axis="M")
        assert fit.slope == pytest.approx(-1.25, abs=1e-12)

    def test_plateau_filter(self):
        clean = power_law_records(hs=(50.0, 25.0, 10.0, 5.0, 2.0))
        plateau = clean + [ConvergenceRecord(1.0, 8, 0.0150, 0.0),
                           ConvergenceRecord(0.5, 8, 0.0149, 0.0),
                           ConvergenceRecord(0.25, 8, 0.0151, 0.0)]
        fit_clean = fit_slope(clean, axis="h")
        fit_filtered = fit_slope(plateau, axis="h")
        assert fit_filtered.points_used == 5
        assert abs(fit_filtered.slope - fit_clean.slope) <= 0.05 * abs(fit_clean.slope)
        unfiltered = fit_slope(plateau, axis="h", plateau_filter=False)
        assert unfiltered.points_used == 8
        assert abs(unfiltered.slope - fit_clean.slope) > 0.05 * abs(fit_clean.slope)

    def test_clean_data_untouched_by_filter(self):
        fit = fit_slope(power_law_records(), axis="h", plateau_filter=True)
        assert fit.points_used == 6

    def test_requires_three_points(self):
        with pytest.raises(HarnessError):
            fit_slope(power_law_records(hs=(50.0, 25.0)), axis="h")

    def test_nan_points_skipped(self):
        records = power_law_records() + [ConvergenceRecord(0.5, 8, math.nan, 0.0)]
        fit = fit_slope(records, axis="h")
        assert fit.points_used == 6
