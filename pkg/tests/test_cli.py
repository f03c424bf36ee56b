import io
import json

import pytest

from smoothstats.cli import (
    EXIT_CAPACITY,
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    BaselineStore,
    ExperimentConfig,
    run,
)


def _run(argv):
    out = io.StringIO()
    code = run(argv, stream=out)
    return code, out.getvalue()


def test_count_json_output():
    code, out = _run(["count", "--x", "100000", "--y", "100"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    row = doc["rows"][0]
    assert row["psi_sieve"] == row["psi_recurrence"]
    assert row["algorithms_agree"] is True
    assert row["upsilon"] <= row["psi_sieve"]


def test_json_output_is_deterministic():
    _, a = _run(["saddle", "--x", "1000000", "--y", "1000"])
    _, b = _run(["saddle", "--x", "1000000", "--y", "1000"])
    assert a == b


def test_float_serialization_roundtrips():
    _, out = _run(["saddle", "--x", "1000000", "--y", "1000"])
    doc = json.loads(out)
    alpha = doc["rows"][0]["alpha"]
    assert float(f"{alpha:.17g}") == alpha


def test_csv_format():
    code, out = _run(["count", "--x", "10000", "--y", "100", "--format", "csv"])
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("x,y,psi_sieve")
    assert len(lines) == 2


def test_usage_error_exit_code():
    code, _ = _run(["count", "--x", "10", "--y", "100"])
    assert code == EXIT_USAGE
    code, _ = _run(["count"])  # empty grid
    assert code == EXIT_USAGE


def test_capacity_exit_code():
    code, _ = _run(["count", "--x", str(10**14), "--y", str(10**8)])
    assert code == EXIT_CAPACITY


def test_grid_flags():
    code, out = _run(
        ["saddle", "--x-grid", "10000", "100000", "--y-grid", "100", "316"]
    )
    assert code == EXIT_OK
    assert len(json.loads(out)["rows"]) == 4


def test_fixed_u_grid():
    code, out = _run(["count", "--y-grid", "50", "100", "--fixed-u", "2"])
    assert code == EXIT_OK
    rows = json.loads(out)["rows"]
    assert [(r["x"], r["y"]) for r in rows] == [(2500, 50), (10000, 100)]


def test_lemmas_pass_at_reference_point():
    code, out = _run(["lemmas", "--x", "1000000", "--y", "1000"])
    assert code == EXIT_OK
    rows = json.loads(out)["rows"]
    assert all(r["status"] in ("PASS", "N/A") for r in rows)


def test_lemmas_detect_corrupted_alpha():
    # the canary: a wrong saddle point must trip the prime-sum checks
    code, out = _run(
        ["lemmas", "--x", "1000000", "--y", "1000", "--alpha-override", "0.5"]
    )
    assert code == EXIT_CHECK_FAILED
    rows = json.loads(out)["rows"]
    assert any(r["status"] == "FAIL" for r in rows)


def test_model_command_with_samples():
    code, out = _run(
        ["model", "--x", "100000", "--y", "316", "--moments", "4",
         "--samples", "2000", "--seed", "9"]
    )
    assert code == EXIT_OK
    row = json.loads(out)["rows"][0]
    assert row["mode"] == "exact"
    assert row["n_samples"] == 2000
    assert abs(row["sample_raw_moments"][1] - row["mean"]) < 0.2


def test_ek_command_writes_cdf_csv(tmp_path):
    code, out = _run(
        ["ek", "--x", "100000", "--y", "316", "--moments", "4",
         "--out-dir", str(tmp_path)]
    )
    assert code == EXIT_OK
    row = json.loads(out)["rows"][0]
    path = row["smooth"]["cdf_csv"]
    lines = open(path).read().splitlines()
    assert lines[0] == "z,F_emp,Phi"
    assert len(lines) == 162  # header + 161 grid points


def test_sums_command():
    code, out = _run(["sums", "--x", "1000000", "--y", "1000"])
    assert code == EXIT_OK
    rows = json.loads(out)["rows"]
    points = {r["point"] for r in rows}
    assert {"t=2", "t=Y", "t=y"} <= points
    by_t = sorted(rows, key=lambda r: r["t"])
    ms = [r["M_t"] for r in by_t]
    assert all(a <= b for a, b in zip(ms, ms[1:]))  # M is nondecreasing in t


def test_baseline_store_detects_drift(tmp_path):
    store = BaselineStore(str(tmp_path))
    assert store.check_or_record("saddle", "abcd", {"v": 1.5})
    assert store.check_or_record("saddle", "abcd", {"v": 1.5})
    assert not store.check_or_record("saddle", "abcd", {"v": 1.6})


def test_baseline_store_cli_integration(tmp_path):
    argv = ["saddle", "--x", "10000", "--y", "100", "--cache-dir", str(tmp_path)]
    code, out = _run(argv)
    assert code == EXIT_OK
    code, out = _run(argv)
    assert code == EXIT_OK
    assert json.loads(out)["baseline_match"] is True


def test_config_hash_ignores_cache_dir():
    a = ExperimentConfig(x=100, y=10, cache_dir="/tmp/a").hash()
    b = ExperimentConfig(x=100, y=10, cache_dir="/tmp/b").hash()
    c = ExperimentConfig(x=101, y=10).hash()
    assert a == b
    assert a != c


def test_env_override_seed(monkeypatch):
    monkeypatch.setenv("SMOOTHSTATS_SEED", "42")
    from smoothstats.cli import build_parser

    args = build_parser().parse_args(["model", "--x", "100", "--y", "10"])
    assert args.seed == 42
