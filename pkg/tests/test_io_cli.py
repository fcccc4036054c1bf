import csv
import json

import numpy as np
import pytest

from fppe import cli
from fppe.errors import ConfigError
from fppe.evolution import TrajectoryRecord
from fppe.io import (
    TRAJECTORY_COLUMNS,
    ExperimentConfig,
    dump_document,
    emit_trajectory,
    parse_config,
    realize_initial_data,
    sanitize,
)


class TestParseConfig:
    def test_empty_gives_defaults(self):
        assert parse_config("{}") == ExperimentConfig()
        assert parse_config("") == ExperimentConfig()

    def test_s_out_of_range(self):
        with pytest.raises(ConfigError, match="1/2"):
            parse_config('{"domain": {"s": 0.6}}')

    def test_syntax_error_has_position(self):
        with pytest.raises(ConfigError, match="line 2, column"):
            parse_config('{"domain":\n  {"s": }}')

    @pytest.mark.parametrize("text", [
        '{"domian": {}}',
        '{"domain": {"n_modes": 2.5}}',
        '{"domain": {"p": "3"}}',
        '{"evolution": {"scheme": "rk4"}}',
        '{"initial_data": {"modes": [[0, 1.0]]}}',
        '{"initial_data": {"modes": [[1, 1.0]], "ground_state_scaled": 1.0}}',
        '{"initial_data": {"ground_state_scaled": -1}}',
        '{"output": {"formats": ["xml"]}}',
        '{"seed": -3}',
        '[1, 2]',
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_modes(self):
        cfg = parse_config('{"domain": {"n_modes": 8}, "initial_data": {"modes": [[1, 0.5], [3, -0.25]]}}')
        a = realize_initial_data(cfg).coeffs
        assert a.tolist() == [0.5, 0, -0.25, 0, 0, 0, 0, 0]

    def test_ground_state_scaled(self, phi0):
        cfg = parse_config('{"initial_data": {"ground_state_scaled": 1.5}}')
        assert np.array_equal(realize_initial_data(cfg, phi0).coeffs, 1.5 * phi0.coeffs)
        with pytest.raises(ValueError):
            realize_initial_data(cfg)

    def test_seed_propagates_to_solver(self):
        cfg = parse_config('{"seed": 7}')
        assert cfg.seed == 7 and cfg.solver.seed == 7
        assert cfg.with_seed(9).solver.seed == 9


class TestEmission:
    def test_empty_record_is_header_only(self, tmp_path):
        path = emit_trajectory(TrajectoryRecord(), tmp_path / "t.csv")
        assert path.read_text() == ",".join(TRAJECTORY_COLUMNS) + "\n"

    def test_byte_identical_reemission(self, runs, tmp_path):
        _, rec = runs.get(0.5, dt=1e-3)
        for fmt in ("csv", "jsonl"):
            a = emit_trajectory(rec, tmp_path / f"a.{fmt}", fmt).read_bytes()
            b = emit_trajectory(rec, tmp_path / f"b.{fmt}", fmt).read_bytes()
            assert a == b and b"\r" not in a

    def test_jsonl_rows_match_snapshots(self, runs, tmp_path):
        _, rec = runs.get(0.5, dt=1e-3)
        lines = emit_trajectory(rec, tmp_path / "t.jsonl", "jsonl").read_text().splitlines()
        assert len(lines) == len(rec.snapshots)
        row = json.loads(lines[-1])
        assert row["t"] == rec.snapshots[-1].t and row["J"] == rec.snapshots[-1].J

    def test_csv_round_trips_floats(self, runs, tmp_path):
        _, rec = runs.get(0.5, dt=1e-3)
        with open(emit_trajectory(rec, tmp_path / "t.csv")) as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["J"]) for r in rows] == rec.column("J").tolist()

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_trajectory(TrajectoryRecord(), tmp_path / "t.x", "xml")

    def test_sanitize(self):
        doc = sanitize({"a": None, "b": float("nan"), "c": float("inf"), "d": np.float64(1.5),
                        "e": np.arange(2), "f": (np.bool_(True),)})
        assert doc == {"a": "absent", "b": "absent", "c": "unbounded", "d": 1.5, "e": [0, 1], "f": [True]}
        assert dump_document({"b": 1, "a": 2}).index('"a"') < dump_document({"b": 1, "a": 2}).index('"b"')


def write_config(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


class TestCLI:
    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["nope", "--config", "x"])
        assert exc.value.code == cli.EXIT_USAGE

    def test_missing_and_bad_config(self, tmp_path):
        assert cli.main(["constants", "--config", str(tmp_path / "none.json")]) == cli.EXIT_CONFIG
        bad = write_config(tmp_path, {"domain": {"s": 0.6}})
        assert cli.main(["constants", "--config", str(bad)]) == cli.EXIT_CONFIG

    def test_seed_precedence(self, monkeypatch):
        cfg = parse_config('{"seed": 3}')
        monkeypatch.delenv("FPPE_SEED", raising=False)
        assert cli.resolve_seed(None, cfg) == 3
        monkeypatch.setenv("FPPE_SEED", "5")
        assert cli.resolve_seed(None, cfg) == 5
        assert cli.resolve_seed(8, cfg) == 8
        monkeypatch.setenv("FPPE_SEED", "x")
        with pytest.raises(ConfigError):
            cli.resolve_seed(None, cfg)

    def test_classify_blowup(self, tmp_path):
        cfg = write_config(tmp_path, {"initial_data": {"ground_state_scaled": 1.5}})
        out = tmp_path / "out"
        assert cli.main(["classify", "--config", str(cfg), "--out", str(out)]) == 0
        rep = json.loads((out / "classification.json").read_text())["classification"]
        assert rep["regime"] == "BlowUp"
        assert isinstance(rep["T_upper"], float) and rep["T_lower"] <= rep["T_upper"]

    def test_simulate_decay(self, tmp_path):
        cfg = write_config(tmp_path, {"initial_data": {"ground_state_scaled": 0.5},
                                      "evolution": {"t_end": 1.0},
                                      "output": {"formats": ["csv", "jsonl"]}})
        out = tmp_path / "out"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        with open(out / "trajectory.csv") as fh:
            J = [float(r["J"]) for r in csv.DictReader(fh)]
        assert np.all(np.diff(J) <= 1e-12)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["outcome"]["kind"] == "ReachedTEnd"
        assert summary["bounds"]["T_upper"] == "absent"
        assert (out / "trajectory.jsonl").exists() and (out / "timing.json").exists()

    def test_ground_state_deterministic(self, tmp_path):
        cfg = write_config(tmp_path, {"domain": {"n_modes": 16}})
        outs = [tmp_path / "a", tmp_path / "b"]
        for o in outs:
            assert cli.main(["ground-state", "--config", str(cfg), "--out", str(o)]) == 0
        a, b = ((o / "ground_state.json").read_bytes() for o in outs)
        assert a == b

    def test_step_failure_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, {
            "initial_data": {"ground_state_scaled": 1.5},
            "evolution": {"dt_init": 0.01, "dt_min": 0.01, "dt_max": 0.01, "t_end": 20.0}})
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_NUMERICAL

    def test_verify_defaults_exit_zero(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {})
        code = cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")])
        doc = json.loads((tmp_path / "v" / "verify.json").read_text())
        failing = [p["name"] for p in doc["properties"] if p["status"] != "pass"]
        assert code == 0, f"failing properties: {failing}"
