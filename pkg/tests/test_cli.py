import hashlib
import json
import math

import pytest

from noflip.cli import main
from noflip.report import FIELDS, rows_from_csv, rows_from_json, rows_to_csv, rows_to_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    return json.loads(out)


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


# --- verify commands ------------------------------------------------------


def test_verify_signalling_reference_point(capsys):
    row = run_json(capsys, "verify-signalling", "--theta", "1.5707963", "--a", "0.7071068", "--c", "0.7071068")
    assert row["deviation"] > 0.5
    assert row["feasible"] is False and row["great_circle"] is False
    assert row["checks_passed"] is True
    assert list(row)[: len(FIELDS)] == list(FIELDS)


def test_verify_signalling_witness_on_great_circle(capsys):
    row = run_json(capsys, "verify-signalling", "--theta", "pi", "--a", "0.7071068", "--c", "0.7071068", "--machine", "witness")
    assert row["deviation"] <= 1e-9
    assert row["feasible"] is True


def test_verify_signalling_seven_digit_pi_is_near_boundary(capsys):
    # 3.1415927 misses pi by ~4.6e-8; the deviation is of that order, not zero
    row = run_json(capsys, "verify-signalling", "--theta", "3.1415927", "--machine", "witness")
    assert row["deviation"] <= 1e-7


def test_verify_signalling_b_zero(capsys):
    row = run_json(capsys, "verify-signalling", "--b", "0", "--machine", "witness")
    assert row["feasible"] is True
    assert row["triple_a"] == 1.0
    assert row["deviation"] <= 1e-12


def test_verify_entanglement_reference_point(capsys):
    row = run_json(capsys, "verify-entanglement")
    assert row["lambda_i"] == pytest.approx(0.75, abs=1e-12)
    assert row["lambda_f"] == pytest.approx(0.625, abs=1e-12)
    assert row["gain"] == pytest.approx(0.1431, abs=1e-4)
    assert [row[f"appendix_t{i}"] for i in range(1, 7)] == pytest.approx([0, 0, 0, 1, 1, 1], abs=1e-12)


def test_verify_entanglement_witness_has_no_gain(capsys):
    row = run_json(capsys, "verify-entanglement", "--theta", "pi", "--a", "0.6", "--machine", "witness")
    assert abs(row["gain"]) <= 1e-8


def test_verify_entanglement_identity_gram_terms(capsys):
    row = run_json(capsys, "verify-entanglement", "--a", "0.6", "--c", "0.8", "--theta", "1.0", "--machine", "identity-gram")
    a2, c2 = 0.36, 0.64
    p = abs(0.6 * 0.8 + 0.8 * 0.6 * complex(math.cos(1.0), math.sin(1.0))) ** 2
    expected = [a2 * a2, c2 * c2, 2 * a2 * c2, 4 * a2 * p, 4 * c2 * p, 4 * p * p]
    assert [row[f"appendix_t{i}"] for i in range(1, 7)] == pytest.approx(expected, abs=1e-12)


def test_verify_product_reference_point_csv(capsys):
    code, out, _ = run(capsys, "verify-product", "--format", "csv")
    assert code == 0
    (row,) = rows_from_csv(out)
    assert row["n_value"] == pytest.approx(3.0, abs=1e-12)
    assert row["n_closed_form"] == pytest.approx(3.0, abs=1e-12)


def test_machine_file_and_phase_override(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"mu": 0.0, "nu": 0.0, "gram": [[[1, 0]] * 3] * 3}))
    row = run_json(capsys, "verify-signalling", "--machine", f"file:{path}", "--mu", "pi/2")
    assert row["mu"] == pytest.approx(math.pi / 2)


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-signalling", "--a", "1.5"],
        ["verify-signalling", "--a", "0.6", "--b", "0.6"],
        ["verify-signalling", "--theta", "pi/"],
        ["verify-signalling", "--machine", "bogus"],
        ["verify-signalling", "--machine", "file:/nonexistent/m.json"],
        ["verify-entanglement", "--bogus-flag"],
        ["check-great-circle", "--s0", "1", "0", "1", "0", "--s1", "1", "0", "0", "0", "--s2", "0", "0", "1", "0"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


# --- check-great-circle and feasibility -----------------------------------

R = str(1 / math.sqrt(2))


def test_check_great_circle_examples(capsys):
    out = run_json(capsys, "check-great-circle", "--s0", "1", "0", "0", "0", "--s1", R, "0", R, "0", "--s2", R, "0", "-" + R, "0")
    assert out["great_circle"] is True and abs(out["det"]) <= 1e-12
    out = run_json(capsys, "check-great-circle", "--s0", "1", "0", "0", "0", "--s1", R, "0", R, "0", "--s2", R, "0", "0", R)
    assert out["great_circle"] is False and out["det"] == pytest.approx(1, abs=1e-6)
    assert out["canonical"]["theta"] == pytest.approx(math.pi / 2, abs=1e-6)
    out = run_json(capsys, "check-great-circle", "--s0", "1", "0", "0", "0", "--s1", "1", "0", "0", "0", "--s2", R, "0", R, "0")
    assert out["great_circle"] is True
    assert out["degenerate_pairs"] == [[0, 1]] and "degenerate" in out["note"]


def test_feasibility_command(capsys):
    out = run_json(capsys, "feasibility")
    assert out["feasible"] is False and out["violated"] == ["entry12", "entry21"]
    out = run_json(capsys, "feasibility", "--d", "0")
    assert out["feasible"] is True and out["witness"] is not None


# --- sweep ----------------------------------------------------------------


def test_sweep_random_rows_are_monotone(capsys, tmp_path):
    cfg = write_config(tmp_path, {"seed": 5, "samples": 100, "machine": "random", "triples": "random"})
    out = tmp_path / "rows.csv"
    code, _, _ = run(capsys, "sweep", cfg, "--out", str(out))
    assert code == 0
    rows = rows_from_csv(out.read_text())
    assert len(rows) == 100
    assert all(r["lambda_f"] <= r["lambda_i"] + 1e-12 for r in rows)
    manifest = json.loads((tmp_path / "rows.csv.manifest.json").read_text())
    assert manifest["rows"] == 100 and manifest["seed"] == 5
    assert manifest["config_hash"] == hashlib.sha256(open(cfg, "rb").read()).hexdigest()


def test_sweep_is_byte_identical(capsys, tmp_path):
    cfg = write_config(tmp_path, {"seed": 123, "samples": 1, "machine": "random"})
    digests = []
    for name in ("one.csv", "two.csv"):
        assert run(capsys, "sweep", cfg, "--out", str(tmp_path / name))[0] == 0
        digests.append(hashlib.sha256((tmp_path / name).read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_sweep_workers_do_not_change_output(capsys, tmp_path):
    cfg = write_config(tmp_path, {"seed": 9, "samples": 6, "machine": "random"})
    run(capsys, "sweep", cfg, "--out", str(tmp_path / "serial.csv"))
    run(capsys, "sweep", cfg, "--out", str(tmp_path / "pool.csv"), "--workers", "2")
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "pool.csv").read_bytes()


def test_sweep_optimize_grid(capsys, tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "seed": 1,
            "samples": 5,
            "machine": "optimize",
            "triples": {"grid": {"theta": [0, "pi/4", "pi/2", "3pi/4", "pi"]}},
            "search": {"restarts": 8, "max_evals": 1500},
            "output": {"format": "json"},
        },
    )
    code, out, _ = run(capsys, "sweep", cfg)
    assert code == 0
    rows = rows_from_json(out)
    dev = [r["deviation"] for r in rows]
    assert dev[0] <= 1e-6 and dev[4] <= 1e-6
    assert min(dev[1:4]) > 1e-3


@pytest.mark.parametrize(
    "cfg",
    [
        {"seed": 1, "samples": 1, "colour": "red"},
        {"seed": 1, "samples": 0},
        {"seed": -1, "samples": 1},
        {"samples": 1},
        {"seed": 1, "samples": 1, "machine": "magic"},
        {"seed": 1, "samples": 1, "tolerances": {"great_circle": 0}},
        {"seed": 1, "samples": 1, "tolerances": {"nonsense": 1e-9}},
        {"seed": 1, "samples": 1, "triples": {"grid": {"b": [0.5]}}},
        {"seed": 1, "samples": 1, "output": {"format": "xml"}},
        {"seed": 1, "samples": 1, "search": {"restarts": 0}},
    ],
)
def test_sweep_config_errors_exit_two(capsys, tmp_path, cfg):
    assert run(capsys, "sweep", write_config(tmp_path, cfg))[0] == 2


def test_sweep_io_errors_exit_three(capsys, tmp_path):
    assert run(capsys, "sweep", str(tmp_path / "missing.json"))[0] == 3
    cfg = write_config(tmp_path, {"seed": 1, "samples": 1})
    assert run(capsys, "sweep", cfg, "--out", str(tmp_path / "no" / "dir.csv"))[0] == 3


def test_csv_json_round_trip(capsys, tmp_path):
    cfg = write_config(tmp_path, {"seed": 77, "samples": 20, "machine": "random"})
    run(capsys, "sweep", cfg, "--out", str(tmp_path / "r.csv"))
    csv_text = (tmp_path / "r.csv").read_text()
    rows = rows_from_csv(csv_text)
    json_text = rows_to_json(rows)
    assert rows_to_csv(rows_from_json(json_text)) == csv_text
    assert rows_to_json(rows_from_json(json_text)) == json_text
