import json

import pytest

from swap_purify import experiment as ex
import swap_purify.protocol as pr

BASE = """
seed = 3
epsilon = [1e-2, 1e-3]
replicas = {replicas}

[[point]]
kind = "depolarized"
d = [2, 3]
delta = 0.5
"""


def spec_for(replicas=0, extra=""):
    return ex.parse_spec(BASE.format(replicas=replicas) + extra)


class TestParse:
    def test_grid_expansion(self):
        spec = ex.parse_spec("""
[[point]]
kind = "depolarized"
d = [2, 4, 8]
delta = [0.1, 0.5]

[[point]]
kind = "spectrum"
values = [[0.6, 0.4], [0.5, 0.3, 0.2]]
""")
        assert len(spec.points) == 8
        assert [p.point_id for p in spec.points] == list(range(8))
        assert spec.points[-1].params == {"values": [0.5, 0.3, 0.2]}

    def test_single_vector_not_expanded(self):
        spec = ex.parse_spec('[[point]]\nkind = "spectrum"\nvalues = [0.6, 0.3, 0.1]\n')
        assert len(spec.points) == 1

    def test_overrides(self):
        spec = ex.parse_spec(BASE.format(replicas=5), {"seed": 9, "epsilon": [0.05], "replicas": None})
        assert spec.seed == 9 and spec.epsilons == (0.05,) and spec.replicas == 5

    @pytest.mark.parametrize("text", [
        "epsilon = [2.0]", "replicas = -1", 'mode = "fast"', "seed = -4",
        '[[point]]\nkind = "weird"', '[[point]]\nkind = "depolarized"\nd = 2', "not toml [",
        '[output]\nformat = "xml"',
    ])
    def test_rejects(self, text):
        with pytest.raises(ex.ConfigError):
            ex.parse_spec(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ex.ConfigError):
            ex.load_spec(tmp_path / "nope.toml")


class TestRun:
    def test_bounds_only_without_replicas(self):
        rs = ex.run_experiment(spec_for(0))
        assert len(rs.rows) == 4
        for r in rs.rows:
            assert r["mc_mean"] is None
            assert r["levels_upper_bound"] is not None and r["levels_sound"]
            assert r["expected_samples"] == pytest.approx(
                pr.expected_samples_closed_form(ex.build_spectrum(spec_for().points[r["point_id"]]), r["levels_used"]))

    def test_monte_carlo_columns(self):
        rs = ex.run_experiment(spec_for(20_000))
        r = rs.rows[0]
        assert r["mc_replicas"] == 20_000
        assert abs(r["mc_z"]) < 4

    def test_oracle_mode(self):
        spec = spec_for(30)
        spec.mode = pr.ORACLE
        spec.epsilons = (0.1,)
        rs = ex.run_experiment(spec)
        assert all(r["mc_mean"] is not None for r in rs.rows)

    def test_skipped_points(self):
        spec = ex.parse_spec("""
epsilon = [0.01]
[[point]]
kind = "spectrum"
values = [[0.4, 0.4, 0.2], [0.7, 0.2]]
""")
        rs = ex.run_experiment(spec)
        assert [r["status"] for r in rs.rows] == ["skipped", "skipped"]
        assert [r["reason"] for r in rs.rows] == ["degenerate_principal", "invalid_spectrum"]

    def test_epsilon_already_met(self):
        spec = ex.parse_spec('epsilon = [0.1]\n[[point]]\nkind = "spectrum"\nvalues = [0.95, 0.05]\n')
        row = ex.run_experiment(spec).rows[0]
        assert row["levels_used"] == 0 and row["reason"] == "epsilon_already_met"

    def test_gap_sweep_tightness(self):
        spec = ex.parse_spec("""
epsilon = [0.01]
[[point]]
kind = "gap_sweep"
gap = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
""")
        rows = ex.run_experiment(spec).rows
        assert len(rows) == 9
        for r, gap in zip(rows, [0.1 * k for k in range(1, 10)]):
            assert r["gap"] == pytest.approx(gap)
            assert r["lambda1"] == pytest.approx(0.5 + gap / 2)
            assert r["tightness_ratio"] >= 1

    def test_general_noisy_point(self):
        spec = ex.parse_spec('[[point]]\nkind = "general_noisy"\neta = [0.2, 0.4]\ntail = [0.7, 0.3]\n')
        rows = ex.run_experiment(spec).rows
        assert [r["lambda1"] for r in rows] == pytest.approx([0.8, 0.6])

    def test_copy_budget(self):
        spec = spec_for(1000)
        spec.copy_budget = 10
        assert ex.run_experiment(spec).rows[0]["reason"] == "mc_budget_exceeded"

    def test_soundness_line(self):
        rs = ex.run_experiment(spec_for(0))
        assert rs.soundness_line() == "soundness PASS: levels_used <= levels_upper_bound on 4/4 rows"


class TestEmit:
    def test_csv_round_trip(self, tmp_path):
        rs = ex.run_experiment(spec_for(0))
        paths = ex.emit_results(rs, tmp_path, "csv", deterministic=True)
        rows = ex.read_csv_table(paths[0])
        assert len(rows) == 4
        assert float(rows[0]["lambda1"]) == rs.rows[0]["lambda1"]
        header = paths[0].read_text().splitlines()[0]
        assert header.startswith("#") and "columns: point_id" in header and "generated" not in header

    def test_timestamp_without_deterministic(self, tmp_path):
        paths = ex.emit_results(ex.run_experiment(spec_for(0)), tmp_path, "csv")
        assert "generated=" in paths[0].read_text().splitlines()[0]

    def test_jsonl(self, tmp_path):
        rs = ex.run_experiment(spec_for(0))
        paths = ex.emit_results(rs, tmp_path, "jsonl", deterministic=True)
        lines = paths[0].read_text().splitlines()
        assert json.loads(lines[0])["meta"]["columns"] == list(ex.COLUMNS)
        assert len(lines) == 5
        assert json.loads(lines[1])["levels_used"] == rs.rows[0]["levels_used"]

    def test_empty_result_set(self, tmp_path):
        rs = ex.run_experiment(ex.parse_spec("seed = 1"))
        paths = ex.emit_results(rs, tmp_path, "csv", deterministic=True)
        assert len(paths[0].read_text().splitlines()) == 2

    def test_trajectory_table(self, tmp_path):
        rs = ex.run_experiment(spec_for(0))
        _, traj = ex.emit_results(rs, tmp_path, "csv", deterministic=True)
        rows = ex.read_csv_table(traj)
        assert list(rows[0]) == list(ex.TRAJECTORY_COLUMNS)
        deepest = max(r["levels_used"] for r in rs.rows if r["point_id"] == 0)
        assert sum(r["point_id"] == "0" for r in rows) == deepest + 1

    def test_row_count_scales(self, tmp_path):
        spec = ex.parse_spec("""
epsilon = [0.01, 0.001]
[[point]]
kind = "gap_sweep"
gap = [%s]
""" % ", ".join(str(0.05 + 0.009 * k) for k in range(100)))
        paths = ex.emit_results(ex.run_experiment(spec), tmp_path, "csv", deterministic=True)
        assert len(ex.read_csv_table(paths[0])) == 200

    def test_bit_stable(self, tmp_path):
        a = ex.emit_results(ex.run_experiment(spec_for(100)), tmp_path / "a", deterministic=True)
        b = ex.emit_results(ex.run_experiment(spec_for(100)), tmp_path / "b", deterministic=True)
        assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]
