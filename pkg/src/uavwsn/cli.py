"""Command-line front end.

Subcommands:
    gen     write random instance files
    train   fit the pointer policy and critic, write a checkpoint
    solve   run one solver on one instance
    bench   run a grid of solvers over instances, write a results CSV
    verify  re-check a results CSV against its recorded solutions

bench writes two sidecars next to the CSV: <out>.solutions.jsonl with the
exact (tour, CH) picks per row, and <out>.meta.json with the energy
parameters, so verify can re-derive every number from scratch.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, instances, network, routing, training
from .energy import EnergyParams, evaluate_solution
from .instances import Instance, Tour
from .solution import Solution

RESULT_COLUMNS = ["instance_id", "k", "solver", "energy_j", "e_ground_j",
                  "e_uav_j", "tour_length_m", "wall_time_s", "seed"]
NEURAL_SOLVERS = ("greedy", "sampling", "active")
VERIFY_REL_TOL = 1e-9


class CliError(Exception):
    """User-facing command error; message is printed and exit code is 2."""


def _load_json(path: str | Path, what: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise CliError(f"{what} file {path} must hold a JSON object")
    return doc


def _energy_params(config: dict, omega: float | None) -> EnergyParams:
    doc = dict(config.get("energy", {}))
    if omega is not None:
        doc["omega"] = omega
    try:
        return EnergyParams.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad energy parameters: {exc}")


def parse_solver_spec(spec: str) -> tuple[str, dict]:
    """'sampling:128' -> ('sampling', {'m': 128}); bare names get defaults."""
    name, _, arg_str = spec.partition(":")
    name = name.strip()
    args = [a for a in arg_str.split(",") if a.strip()] if arg_str else []
    try:
        if name == "greedy" or name in ("nn", "random", "brute", "ga"):
            if args:
                raise CliError(f"solver '{name}' takes no arguments")
            return name, {}
        if name == "sampling":
            return name, {"m": int(args[0]) if args else 128}
        if name == "active":
            out = {}
            if len(args) >= 1:
                out["q"] = int(args[0])
            if len(args) >= 2:
                out["steps"] = int(args[1])
            if len(args) >= 3:
                out["zeta"] = float(args[2])
            return name, out
    except ValueError as exc:
        raise CliError(f"bad solver spec {spec!r}: {exc}")
    raise CliError(f"unknown solver {spec!r} (expected greedy, sampling[:M], "
                   f"active[:Q,STEPS[,ZETA]], nn, ga, random, or brute)")


def _run_solver(name: str, opts: dict, params: EnergyParams, instance: Instance,
                checkpoint: tuple | None, config: dict, rng) -> Solution:
    if name in NEURAL_SOLVERS:
        if checkpoint is None:
            raise CliError(f"solver '{name}' needs --checkpoint")
        policy, critic, _ = checkpoint
        if name == "greedy":
            return training.infer_greedy(policy, params, instance)
        if name == "sampling":
            return training.infer_sampling(policy, params, instance,
                                           m=opts["m"], rng=rng)
        doc = dict(config.get("active", {}))
        doc.update(opts)
        active_cfg = training.ActiveSearchConfig(**doc)
        return training.infer_active(policy, params, instance, active_cfg,
                                     critic=critic, rng=rng)
    if name == "nn":
        return baselines.solve_nearest_neighbor(params, instance)
    if name == "random":
        return baselines.solve_random(params, instance, rng=rng)
    if name == "ga":
        ga_cfg = baselines.GaConfig(**config.get("ga", {}))
        return baselines.solve_genetic(params, instance, ga_cfg, rng=rng)
    if name == "brute":
        return routing.brute_force_solve(params, instance)
    raise CliError(f"unknown solver '{name}'")


# ---------------------------------------------------------------- gen

def _cmd_gen(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ks = [int(x) for x in args.k.split(",") if x.strip()]
    written = []
    for k in ks:
        for offset in range(args.count):
            seed = args.seed + offset
            try:
                inst = instances.generate(k, args.n, area_m=args.area_m,
                                          std_m=args.std_m, seed=seed)
            except ValueError as exc:
                raise CliError(f"bad instance spec: {exc}")
            path = out_dir / f"inst_k{k}_s{seed}.json"
            instances.save(inst, path)
            written.append(path)
    for path in written:
        print(path)
    return 0


# ---------------------------------------------------------------- train

def _write_trace(path: Path, trace) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_energy_j", "critic_loss", "lr"])
        for row in trace:
            writer.writerow([row.step, repr(row.mean_energy_j),
                             repr(row.critic_loss), repr(row.lr)])


def _cmd_train(args) -> int:
    config = _load_json(args.config, "config") if args.config else {}
    params = _energy_params(config, args.omega)
    train_doc = dict(config.get("train", {}))
    if args.steps is not None:
        train_doc["steps"] = args.steps
    if args.seed is not None:
        train_doc["seed"] = args.seed
    try:
        train_cfg = training.TrainConfig(**train_doc)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad train config: {exc}")

    start_step = 0
    if args.resume:
        policy, critic, meta = network.load_checkpoint(args.resume)
        start_step = meta["step"]
        seed = meta["seed"]
    else:
        hidden = args.hidden_dim or int(config.get("hidden_dim", 32))
        seed = train_cfg.seed
        policy, critic = network.init_params(seed=seed, hidden_dim=hidden)

    out_path = Path(args.out)

    def every_n(step, pol, cri, row):
        if args.checkpoint_every and (step + 1) % args.checkpoint_every == 0:
            network.save_checkpoint(out_path, pol, cri, seed=seed, step=step + 1)

    result = training.train(params, train_cfg, policy, critic,
                            start_step=start_step, on_step=every_n)
    final_step = start_step + train_cfg.steps
    network.save_checkpoint(out_path, result.policy, result.critic,
                            seed=seed, step=final_step)
    if args.trace:
        _write_trace(Path(args.trace), result.trace)
    if result.trace:
        last = result.trace[-1]
        print(f"trained {train_cfg.steps} steps (through step {final_step}), "
              f"final mean energy {last.mean_energy_j:.3f} J")
    print(out_path)
    return 0


# ---------------------------------------------------------------- solve

def _cmd_solve(args) -> int:
    config = _load_json(args.config, "config") if args.config else {}
    params = _energy_params(config, args.omega)
    inst = instances.load(args.instance)
    name, opts = parse_solver_spec(args.solver)
    checkpoint = network.load_checkpoint(args.checkpoint) if args.checkpoint else None
    rng = np.random.default_rng(args.seed)
    started = time.perf_counter()
    sol = _run_solver(name, opts, params, inst, checkpoint, config, rng)
    elapsed = time.perf_counter() - started
    doc = {
        "instance": str(args.instance),
        "energy_params": params.to_dict(),
        "solution": sol.to_dict(),
        "wall_time_s": elapsed,
    }
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(args.out)
    else:
        print(text)
    return 0


# ---------------------------------------------------------------- bench

def _bench_instances(config: dict, out_dir: Path) -> list[tuple[str, Path]]:
    """Resolve the instance list: explicit paths, or a generation spec."""
    spec = config.get("instances")
    if isinstance(spec, list):
        out = []
        for p in spec:
            path = Path(p)
            if not path.exists():
                raise CliError(f"instance file not found: {path}")
            out.append((path.stem, path))
        return out
    if isinstance(spec, dict):
        ks = spec.get("k", [4])
        ks = [ks] if isinstance(ks, int) else list(ks)
        n = int(spec.get("n", 5))
        count = int(spec.get("count", 5))
        seed0 = int(spec.get("seed", 0))
        area = float(spec.get("area_m", 2000.0))
        std = float(spec.get("std_m", 30.0))
        inst_dir = out_dir / "instances"
        inst_dir.mkdir(parents=True, exist_ok=True)
        out = []
        for k in ks:
            for offset in range(count):
                seed = seed0 + offset
                inst = instances.generate(k, n, area_m=area, std_m=std, seed=seed)
                path = inst_dir / f"inst_k{k}_s{seed}.json"
                instances.save(inst, path)
                out.append((path.stem, path))
        return out
    raise CliError("bench config needs 'instances': a list of paths or a "
                   "generation spec object")


_WORKER_CHECKPOINTS: dict = {}


def _bench_task(task: dict) -> dict:
    """Run one (instance, solver) cell; returns a CSV row dict."""
    params = EnergyParams.from_dict(task["params"])
    inst = instances.load(task["instance_path"])
    name, opts = parse_solver_spec(task["solver"])
    checkpoint = None
    if task["checkpoint_path"]:
        key = task["checkpoint_path"]
        checkpoint = _WORKER_CHECKPOINTS.get(key)
        if checkpoint is None:
            checkpoint = _WORKER_CHECKPOINTS[key] = network.load_checkpoint(key)
    rng = np.random.default_rng((task["base_seed"], task["inst_index"],
                                 task["solver_index"]))
    row = {"instance_id": task["instance_id"], "k": inst.k,
           "solver": task["solver"],
           "seed": "" if inst.seed is None else inst.seed}
    started = time.perf_counter()
    try:
        sol = _run_solver(name, opts, params, inst, checkpoint,
                          task["config"], rng)
    except Exception as exc:  # failed cell: keep the row, flag on stderr
        print(f"warning: solver {task['solver']} failed on "
              f"{task['instance_id']}: {exc}", file=sys.stderr)
        row.update(energy_j="", e_ground_j="", e_uav_j="", tour_length_m="",
                   wall_time_s="", solution=None)
        return row
    elapsed = time.perf_counter() - started
    b = sol.breakdown
    row.update(energy_j=repr(b.total_j), e_ground_j=repr(b.ground_j),
               e_uav_j=repr(b.uav_j), tour_length_m=repr(b.tour_length_m),
               wall_time_s=repr(elapsed),
               solution={"instance_id": task["instance_id"],
                         "instance_path": task["rel_instance_path"],
                         "solver": task["solver"],
                         "tour": list(sol.tour.order),
                         "ch_choices": list(sol.ch_choices),
                         "energy_j": b.total_j})
    return row


def _summary_table(rows: list[dict], reference: str) -> str:
    """Per-k mean energy and mean per-instance ratio against the reference."""
    ref_energy = {}
    for row in rows:
        if row["solver"] == reference and row["energy_j"] != "":
            ref_energy[row["instance_id"]] = float(row["energy_j"])
    by_key: dict[tuple, list] = {}
    for row in rows:
        if row["energy_j"] == "":
            continue
        by_key.setdefault((row["k"], row["solver"]), []).append(row)
    lines = [f"{'k':>4} {'solver':<16} {'mean energy J':>14} "
             f"{'ratio vs ' + reference:>18}"]
    for (k, solver) in sorted(by_key, key=lambda t: (t[0], str(t[1]))):
        cells = by_key[(k, solver)]
        mean_e = np.mean([float(r["energy_j"]) for r in cells])
        ratios = [float(r["energy_j"]) / ref_energy[r["instance_id"]]
                  for r in cells if r["instance_id"] in ref_energy]
        ratio = f"{np.mean(ratios):.4f}" if ratios else "n/a"
        lines.append(f"{k:>4} {solver:<16} {mean_e:>14.3f} {ratio:>18}")
    return "\n".join(lines)


def _cmd_bench(args) -> int:
    config = _load_json(args.config, "config")
    params = _energy_params(config, args.omega)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    inst_list = _bench_instances(config, out_path.parent)
    solver_specs = config.get("solvers")
    if not solver_specs or not isinstance(solver_specs, list):
        raise CliError("bench config needs a nonempty 'solvers' list")
    for spec in solver_specs:
        parse_solver_spec(spec)  # fail fast on typos
    checkpoint_path = args.checkpoint or config.get("checkpoint")
    if any(parse_solver_spec(s)[0] in NEURAL_SOLVERS for s in solver_specs) \
            and not checkpoint_path:
        raise CliError("neural solvers in the grid need --checkpoint "
                       "(or 'checkpoint' in the config)")
    reference = config.get("reference", solver_specs[0])

    tasks = []
    for inst_index, (inst_id, inst_path) in enumerate(inst_list):
        for solver_index, spec in enumerate(solver_specs):
            rel = str(Path(inst_path).resolve().relative_to(
                out_path.parent.resolve())) \
                if Path(inst_path).resolve().is_relative_to(
                    out_path.parent.resolve()) else str(Path(inst_path).resolve())
            tasks.append({
                "instance_id": inst_id,
                "instance_path": str(inst_path),
                "rel_instance_path": rel,
                "inst_index": inst_index,
                "solver": spec,
                "solver_index": solver_index,
                "params": params.to_dict(),
                "checkpoint_path": str(checkpoint_path) if checkpoint_path else "",
                "base_seed": args.seed,
                "config": {"ga": config.get("ga", {}),
                           "active": config.get("active", {})},
            })
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_bench_task, tasks))
    else:
        rows = [_bench_task(t) for t in tasks]
    rows.sort(key=lambda r: (str(r["instance_id"]), str(r["solver"])))

    with out_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS,
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    with (out_path.parent / (out_path.name + ".solutions.jsonl")).open("w") as fh:
        for row in rows:
            if row.get("solution"):
                fh.write(json.dumps(row["solution"]) + "\n")
    meta = {"energy_params": params.to_dict(), "base_seed": args.seed,
            "solvers": solver_specs, "reference": reference}
    (out_path.parent / (out_path.name + ".meta.json")).write_text(
        json.dumps(meta, indent=1) + "\n")

    print(_summary_table(rows, reference))
    print(out_path)
    return 0


# ---------------------------------------------------------------- verify

def _cmd_verify(args) -> int:
    results = Path(args.results)
    if not results.exists():
        raise CliError(f"results file not found: {results}")
    meta_path = results.parent / (results.name + ".meta.json")
    sols_path = results.parent / (results.name + ".solutions.jsonl")
    if not meta_path.exists() or not sols_path.exists():
        raise CliError(f"missing sidecars for {results} "
                       f"(need {meta_path.name} and {sols_path.name})")
    meta = _load_json(meta_path, "meta")
    params = EnergyParams.from_dict(meta["energy_params"])
    solutions = {}
    for line in sols_path.read_text().splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        solutions[(doc["instance_id"], doc["solver"])] = doc

    problems = []
    checked = 0
    with results.open() as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise CliError(f"unexpected results header: {reader.fieldnames}")
        for row in reader:
            key = (row["instance_id"], row["solver"])
            if row["energy_j"] == "":
                continue  # recorded failure, nothing to re-check
            doc = solutions.get(key)
            if doc is None:
                problems.append(f"{key}: no recorded solution")
                continue
            inst_path = Path(doc["instance_path"])
            if not inst_path.is_absolute():
                inst_path = results.parent / inst_path
            inst = instances.load(inst_path)
            try:
                tour = Tour(tuple(doc["tour"]))
                bd = evaluate_solution(params, inst, tour, doc["ch_choices"])
            except ValueError as exc:
                problems.append(f"{key}: invalid solution ({exc})")
                continue
            recomputed = {"energy_j": bd.total_j, "e_ground_j": bd.ground_j,
                          "e_uav_j": bd.uav_j, "tour_length_m": bd.tour_length_m}
            for col, want in recomputed.items():
                got = float(row[col])
                scale = max(abs(want), 1e-30)
                if abs(got - want) / scale > VERIFY_REL_TOL:
                    problems.append(
                        f"{key}: {col} mismatch (csv {got!r}, recomputed {want!r})")
            checked += 1
    if problems:
        for p in problems:
            print(f"FAIL {p}", file=sys.stderr)
        print(f"verify: {len(problems)} problem(s) in {checked} checked row(s)")
        return 1
    print(f"verify: ok, {checked} row(s) re-derived within {VERIFY_REL_TOL:g}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavwsn",
        description="Energy-minimizing UAV collection tours over clustered "
                    "sensor fields")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write random instance files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", default="4", help="cluster counts, comma separated")
    p.add_argument("--n", type=int, default=5, help="nodes per cluster")
    p.add_argument("--count", type=int, default=1, help="instances per k")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--area-m", type=float, default=2000.0)
    p.add_argument("--std-m", type=float, default=30.0)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train policy and critic")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--config", help="JSON config with train/energy sections")
    p.add_argument("--steps", type=int, help="override config steps")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--hidden-dim", type=int, help="hidden size for fresh weights")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--trace", help="write per-step CSV trace here")
    p.add_argument("--checkpoint-every", type=int, default=0,
                   help="also write the checkpoint every N steps")
    p.add_argument("--omega", type=float, help="override energy omega")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", required=True,
                   help="greedy | sampling[:M] | active[:Q,STEPS[,ZETA]] | "
                        "nn | ga | random | brute")
    p.add_argument("--checkpoint", help="checkpoint for neural solvers")
    p.add_argument("--config", help="JSON config (energy/ga/active sections)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--omega", type=float, help="override energy omega")
    p.add_argument("--out", help="write the solution JSON here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run solvers over instances, write CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", help="checkpoint for neural solvers")
    p.add_argument("--omega", type=float, help="override energy omega")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="re-check a results CSV")
    p.add_argument("--results", required=True)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (instances.InstanceFormatError,
            network.CheckpointFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
