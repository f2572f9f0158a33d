"""End-to-end checks of the command-line interface, driven through main()."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from uavwsn import (
    EnergyParams,
    brute_force_solve,
    load,
    load_checkpoint,
    solve_nearest_neighbor,
)
from uavwsn.cli import RESULT_COLUMNS, CliError, main, parse_solver_spec


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_solver_spec():
    assert parse_solver_spec("greedy") == ("greedy", {})
    assert parse_solver_spec("sampling") == ("sampling", {"m": 128})
    assert parse_solver_spec("sampling:64") == ("sampling", {"m": 64})
    assert parse_solver_spec("active:32,5,0.8") == (
        "active", {"q": 32, "steps": 5, "zeta": 0.8})
    assert parse_solver_spec("brute") == ("brute", {})
    for bad in ("warp", "sampling:x", "ga:3", "active:a"):
        with pytest.raises(CliError):
            parse_solver_spec(bad)


def test_gen_writes_deterministic_files(tmp_path):
    args = ["--k", "2,3", "--n", "2", "--count", "2", "--seed", "5"]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(["gen", "--out", str(d1)] + args) == 0
    assert main(["gen", "--out", str(d2)] + args) == 0
    names = sorted(p.name for p in d1.iterdir())
    assert names == ["inst_k2_s5.json", "inst_k2_s6.json",
                     "inst_k3_s5.json", "inst_k3_s6.json"]
    for name in names:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    inst = load(d1 / "inst_k3_s6.json")
    assert inst.k == 3 and inst.cluster_sizes() == (2, 2, 2) and inst.seed == 6


def test_gen_rejects_bad_spec(tmp_path, capsys):
    assert main(["gen", "--out", str(tmp_path / "x"), "--k", "0"]) == 2
    assert "error:" in capsys.readouterr().err


def train_config(tmp_path, **extra):
    doc = {"train": {"batch_size": 2, "k_train": 2, "n_train": 2, **extra}}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_train_writes_checkpoint_and_trace(tmp_path):
    ckpt = tmp_path / "model.json"
    trace = tmp_path / "trace.csv"
    rc = main(["train", "--out", str(ckpt), "--config", train_config(tmp_path),
               "--steps", "3", "--seed", "1", "--hidden-dim", "8",
               "--trace", str(trace)])
    assert rc == 0
    policy, critic, meta = load_checkpoint(ckpt)
    assert meta == {"seed": 1, "step": 3, "hidden_dim": 8}
    rows = read_rows(trace)
    assert [r["step"] for r in rows] == ["0", "1", "2"]
    assert list(rows[0]) == ["step", "mean_energy_j", "critic_loss", "lr"]
    for r in rows:
        assert np.isfinite(float(r["mean_energy_j"]))
        assert float(r["lr"]) == 1e-4


def test_train_resume_continues_counter(tmp_path):
    cfg = train_config(tmp_path)
    first = tmp_path / "m1.json"
    second = tmp_path / "m2.json"
    trace = tmp_path / "t2.csv"
    assert main(["train", "--out", str(first), "--config", cfg,
                 "--steps", "3", "--seed", "2", "--hidden-dim", "8"]) == 0
    assert main(["train", "--out", str(second), "--config", cfg,
                 "--steps", "2", "--resume", str(first),
                 "--trace", str(trace)]) == 0
    _, _, meta = load_checkpoint(second)
    assert meta["step"] == 5 and meta["seed"] == 2
    assert [r["step"] for r in read_rows(trace)] == ["3", "4"]


def test_solve_brute_matches_library_call(tmp_path):
    inst_dir = tmp_path / "inst"
    assert main(["gen", "--out", str(inst_dir), "--k", "3", "--n", "2",
                 "--seed", "7"]) == 0
    inst_path = inst_dir / "inst_k3_s7.json"
    out = tmp_path / "sol.json"
    assert main(["solve", "--instance", str(inst_path), "--solver", "brute",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    direct = brute_force_solve(EnergyParams(), load(inst_path))
    assert doc["solution"]["solver"] == "brute"
    assert doc["solution"]["tour"] == list(direct.tour.order)
    assert doc["solution"]["energy_j"] == direct.energy_j
    assert doc["wall_time_s"] > 0


def test_solve_prints_json_without_out(tmp_path, capsys):
    inst_dir = tmp_path / "inst"
    main(["gen", "--out", str(inst_dir), "--k", "2", "--n", "2", "--seed", "1"])
    capsys.readouterr()
    rc = main(["solve", "--instance", str(inst_dir / "inst_k2_s1.json"),
               "--solver", "nn"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["solution"]["solver"] == "nn"


def test_solve_omega_override_changes_objective(tmp_path):
    inst_dir = tmp_path / "inst"
    main(["gen", "--out", str(inst_dir), "--k", "3", "--n", "2", "--seed", "9"])
    inst_path = inst_dir / "inst_k3_s9.json"
    out = tmp_path / "sol.json"
    assert main(["solve", "--instance", str(inst_path), "--solver", "brute",
                 "--omega", "1.0", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["energy_params"]["omega"] == 1.0
    direct = brute_force_solve(EnergyParams(omega=1.0), load(inst_path))
    assert doc["solution"]["energy_j"] == direct.energy_j


def test_solve_neural_requires_checkpoint(tmp_path, capsys):
    inst_dir = tmp_path / "inst"
    main(["gen", "--out", str(inst_dir), "--k", "2", "--n", "2", "--seed", "1"])
    rc = main(["solve", "--instance", str(inst_dir / "inst_k2_s1.json"),
               "--solver", "greedy"])
    assert rc == 2
    assert "checkpoint" in capsys.readouterr().err


def test_solve_neural_with_checkpoint(tmp_path):
    ckpt = tmp_path / "model.json"
    main(["train", "--out", str(ckpt), "--config", train_config(tmp_path),
          "--steps", "1", "--seed", "3", "--hidden-dim", "8"])
    inst_dir = tmp_path / "inst"
    main(["gen", "--out", str(inst_dir), "--k", "3", "--n", "2", "--seed", "4"])
    out = tmp_path / "sol.json"
    rc = main(["solve", "--instance", str(inst_dir / "inst_k3_s4.json"),
               "--solver", "sampling:8", "--checkpoint", str(ckpt),
               "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["solution"]["solver"] == "sampling"
    assert sorted(doc["solution"]["tour"]) == [0, 1, 2, 3]


def bench_config(tmp_path, **overrides):
    doc = {
        "instances": {"k": [3], "n": 2, "count": 2, "seed": 0},
        "solvers": ["brute", "nn", "random"],
        "reference": "brute",
    }
    doc.update(overrides)
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(doc))
    return str(path)


def strip_times(rows):
    return [{k: v for k, v in row.items() if k != "wall_time_s"} for row in rows]


def test_bench_writes_grid_and_verify_accepts_it(tmp_path, capsys):
    out = tmp_path / "run" / "results.csv"
    assert main(["bench", "--config", bench_config(tmp_path),
                 "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 6
    assert list(rows[0]) == RESULT_COLUMNS
    keys = [(r["instance_id"], r["solver"]) for r in rows]
    assert keys == sorted(keys)
    assert {r["solver"] for r in rows} == {"brute", "nn", "random"}
    for r in rows:
        assert float(r["energy_j"]) > 0
        assert r["k"] == "3"
    sols = (out.parent / "results.csv.solutions.jsonl").read_text().splitlines()
    assert len(sols) == 6
    meta = json.loads((out.parent / "results.csv.meta.json").read_text())
    assert meta["reference"] == "brute"
    assert EnergyParams.from_dict(meta["energy_params"]) == EnergyParams()
    capsys.readouterr()

    assert main(["verify", "--results", str(out)]) == 0
    assert "ok, 6 row(s)" in capsys.readouterr().out

    # brute is the reference, so nothing in its column may beat it
    by_inst = {}
    for r in rows:
        by_inst.setdefault(r["instance_id"], {})[r["solver"]] = float(r["energy_j"])
    for cells in by_inst.values():
        assert cells["nn"] >= cells["brute"] * (1 - 1e-12)
        assert cells["random"] >= cells["brute"] * (1 - 1e-12)


def test_bench_is_reproducible_and_parallel_matches(tmp_path):
    cfg = bench_config(tmp_path)
    outs = [tmp_path / name / "r.csv" for name in ("one", "two", "par")]
    assert main(["bench", "--config", cfg, "--out", str(outs[0])]) == 0
    assert main(["bench", "--config", cfg, "--out", str(outs[1])]) == 0
    assert main(["bench", "--config", cfg, "--out", str(outs[2]),
                 "--workers", "2"]) == 0
    serial = strip_times(read_rows(outs[0]))
    assert serial == strip_times(read_rows(outs[1]))
    assert serial == strip_times(read_rows(outs[2]))


def test_bench_accepts_explicit_instance_paths(tmp_path):
    inst_dir = tmp_path / "inst"
    main(["gen", "--out", str(inst_dir), "--k", "2", "--n", "2", "--count", "2",
          "--seed", "3"])
    paths = sorted(str(p) for p in inst_dir.iterdir())
    cfg = bench_config(tmp_path, instances=paths, solvers=["nn"])
    out = tmp_path / "run" / "r.csv"
    assert main(["bench", "--config", cfg, "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["instance_id"] for r in rows] == ["inst_k2_s3", "inst_k2_s4"]
    direct = solve_nearest_neighbor(EnergyParams(), load(paths[0]))
    assert float(rows[0]["energy_j"]) == direct.energy_j


def test_bench_neural_needs_checkpoint(tmp_path, capsys):
    cfg = bench_config(tmp_path, solvers=["greedy"])
    rc = main(["bench", "--config", cfg, "--out", str(tmp_path / "r.csv")])
    assert rc == 2
    assert "checkpoint" in capsys.readouterr().err


def test_bench_rejects_unknown_solver(tmp_path, capsys):
    cfg = bench_config(tmp_path, solvers=["brute", "warp"])
    rc = main(["bench", "--config", cfg, "--out", str(tmp_path / "r.csv")])
    assert rc == 2
    assert "warp" in capsys.readouterr().err


def test_verify_flags_tampered_results(tmp_path, capsys):
    out = tmp_path / "run" / "results.csv"
    main(["bench", "--config", bench_config(tmp_path), "--out", str(out)])
    capsys.readouterr()
    rows = read_rows(out)
    rows[2]["energy_j"] = repr(float(rows[2]["energy_j"]) * 1.001)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    assert main(["verify", "--results", str(out)]) == 1
    err = capsys.readouterr().err
    assert "FAIL" in err and "energy_j" in err


def test_verify_needs_sidecars(tmp_path, capsys):
    lone = tmp_path / "results.csv"
    lone.write_text(",".join(RESULT_COLUMNS) + "\n")
    assert main(["verify", "--results", str(lone)]) == 2
    assert "sidecar" in capsys.readouterr().err


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "uavwsn.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("gen", "train", "solve", "bench", "verify"):
        assert sub in proc.stdout
