"""Experiment harness: seeded runs, artifacts, checkpointing, resume.

Subcommands: ``run <config>``, ``resume <dir>``, ``validate <config>``,
``enumerate --pool P --q Q``, ``version``.  Artifacts per run directory:

* ``config.yaml``    verbatim copy of the input configuration
* ``result.json``    final summary (snake_case keys, schema_version 1)
* ``history.csv``    per-iteration records: iter, seq, reward, best_so_far,
                     cum_fevals (RFC 4180)
* ``meta.json``      resume bookkeeping: config hash, iteration, eval count
* ``tree.jsonl``     MCTS checkpoint, one node record per line
* ``landscape.csv``  landscape mode: seq, ratio, function_evals, seed, wall_ms

Every number in result.json and history.csv is determined by (config, seed).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shutil
import sys
import time

import numpy as np

from . import __version__, baselines, mcts, npg
from .config import ConfigError, RunConfig, config_hash, load_config
from .models import build, sequence_count
from .parallel import WorkerPool, resolve_workers
from .reward import GateSequence, RewardEvaluator, energy_ratio
from .rng import root

RESULT_SCHEMA_VERSION = 1


class IncompatibleCheckpoint(RuntimeError):
    """Checkpoint was written under a different configuration."""


def _write_json(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _seq_text(seq) -> str:
    return seq.as_text() if isinstance(seq, GateSequence) else "-".join(map(str, seq))


class RunDir:
    """Artifact paths and incremental writers for one run directory."""

    def __init__(self, path: str):
        self.path = path
        os.makedirs(path, exist_ok=True)
        self.history_path = os.path.join(path, "history.csv")
        self.meta_path = os.path.join(path, "meta.json")
        self.tree_path = os.path.join(path, "tree.jsonl")
        self.result_path = os.path.join(path, "result.json")
        self.landscape_path = os.path.join(path, "landscape.csv")
        self.config_path = os.path.join(path, "config.yaml")

    def append_history(self, row: list) -> None:
        new = not os.path.exists(self.history_path)
        with open(self.history_path, "a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(["iter", "seq", "reward", "best_so_far", "cum_fevals"])
            writer.writerow(row)

    def read_history(self) -> list[dict]:
        if not os.path.exists(self.history_path):
            return []
        with open(self.history_path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))

    def write_meta(self, payload: dict) -> None:
        _write_json(self.meta_path, payload)

    def read_meta(self) -> dict:
        with open(self.meta_path, encoding="utf-8") as fh:
            return json.load(fh)

    def write_tree(self, root_node) -> None:
        tmp = self.tree_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for rec in mcts.tree_to_records(root_node):
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        os.replace(tmp, self.tree_path)

    def read_tree(self):
        with open(self.tree_path, encoding="utf-8") as fh:
            return mcts.tree_from_records([json.loads(line) for line in fh if line.strip()])

    def append_landscape(self, row: list) -> None:
        new = not os.path.exists(self.landscape_path)
        with open(self.landscape_path, "a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(["seq", "ratio", "function_evals", "seed", "wall_ms"])
            writer.writerow(row)

    def read_landscape_indices(self, sequences: list[GateSequence]) -> frozenset[int]:
        """Indices of sequences already recorded (for resume)."""
        if not os.path.exists(self.landscape_path):
            return frozenset()
        recorded: dict[str, int] = {}
        with open(self.landscape_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                recorded[row["seq"]] = recorded.get(row["seq"], 0) + 1
        done = set()
        for i, seq in enumerate(sequences):
            text = seq.as_text()
            if recorded.get(text, 0) > 0:
                recorded[text] -= 1
                done.add(i)
        return frozenset(done)


def _result_payload(cfg: RunConfig, model, extra: dict) -> dict:
    payload = {
        "schema_version": RESULT_SCHEMA_VERSION,
        "code_version": __version__,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "q": cfg.q,
        "ground_energy": model.ground_energy,
        "num_spins": model.num_spins,
        "dim": model.dim,
        "total_duration": model.total_duration,
        "pool_labels": list(model.pool_labels),
        "config": cfg.raw,
    }
    payload.update(extra)
    return payload


def _make_pool(cfg: RunConfig, workers: int):
    if workers <= 1:
        return None
    return WorkerPool(cfg.model, cfg.noise, workers)


def _run_mcts(cfg: RunConfig, rundir: RunDir, workers: int, max_iterations: int | None) -> int:
    model = build(cfg.model)
    evaluator = RewardEvaluator(model, cfg.noise)
    stream = root(cfg.seed, "mcts")
    chash = config_hash(cfg)

    start_iteration = 0
    tree_root = None
    prior = []
    best_so_far = -np.inf
    transform = None
    if os.path.exists(rundir.meta_path):
        meta = rundir.read_meta()
        if meta.get("config_hash") != chash:
            raise IncompatibleCheckpoint("config hash does not match the checkpoint")
        start_iteration = int(meta["iteration"])
        evaluator.count = int(meta["eval_count"])
        best_so_far = float(meta["best_reward_so_far"])
        tree_root = rundir.read_tree()
        if cfg.mcts.reward_transform == "minmax_running":
            transform = mcts._MinMaxRunning(meta["transform_low"], meta["transform_high"])
        for row in rundir.read_history():
            prior.append(
                mcts.IterationRecord(
                    sequence=GateSequence.from_text(row["seq"]),
                    reward=float(row["reward"]),
                    path_length=0,
                )
            )
    elif cfg.mcts.reward_transform == "minmax_running":
        transform = mcts._MinMaxRunning()

    if tree_root is None:
        tree_root = mcts.TreeNode(state_seq=())

    state = {"best": best_so_far}

    def on_iteration(t: int, record: mcts.IterationRecord) -> None:
        state["best"] = max(state["best"], record.reward)
        rundir.append_history([t, record.sequence.as_text(), repr(record.reward), repr(state["best"]), evaluator.count])
        rundir.write_tree(tree_root)
        meta = {
            "config_hash": chash,
            "iteration": t + 1,
            "eval_count": evaluator.count,
            "best_reward_so_far": state["best"],
            "mode": "mcts",
        }
        if transform is not None:
            meta["transform_low"] = transform.low
            meta["transform_high"] = transform.high
        rundir.write_meta(meta)

    pool = _make_pool(cfg, workers)
    try:
        report = mcts.full_run(
            evaluator,
            cfg.q,
            cfg.npg,
            cfg.mcts,
            stream,
            budget=cfg.budget,
            root=tree_root,
            start_iteration=start_iteration,
            transform=transform,
            on_iteration=on_iteration,
            worker_pool=pool,
            max_iterations=max_iterations,
            prior_history=prior,
        )
    finally:
        if pool is not None:
            pool.shutdown()

    if report is None:
        print(f"paused after max-iterations; resume with: mctsqaoa resume {rundir.path}")
        return 0

    _write_json(
        rundir.result_path,
        _result_payload(
            cfg,
            model,
            {
                "best_sequence": report.best_sequence.as_text(),
                "best_ratio": report.best_ratio,
                "greedy_sequence": report.greedy_sequence.as_text(),
                "greedy_ratio": report.greedy_ratio,
                "function_eval_count": report.function_eval_count,
                "iterations_completed": len(report.history),
            },
        ),
    )
    return 0


def _run_random_search(cfg: RunConfig, rundir: RunDir, workers: int, max_iterations: int | None) -> int:
    model = build(cfg.model)
    evaluator = RewardEvaluator(model, cfg.noise)
    stream = root(cfg.seed, "random-search")
    chash = config_hash(cfg)

    start_iteration = 0
    prior_best = None
    best_reward = -np.inf
    if os.path.exists(rundir.meta_path):
        meta = rundir.read_meta()
        if meta.get("config_hash") != chash:
            raise IncompatibleCheckpoint("config hash does not match the checkpoint")
        start_iteration = int(meta["iteration"])
        evaluator.count = int(meta["eval_count"])
        best_reward = float(meta["best_reward_so_far"])
        if meta.get("best_sequence") is not None:
            prior_best = (float(meta["best_ratio"]), GateSequence.from_text(meta["best_sequence"]))

    state = {
        "best_reward": best_reward,
        "best_ratio": prior_best[0] if prior_best else None,
        "best_sequence": prior_best[1].as_text() if prior_best else None,
    }

    def on_record(t: int, record: baselines.SearchRecord) -> None:
        state["best_reward"] = max(state["best_reward"], record.reward)
        if state["best_ratio"] is None or record.ratio >= record.best_ratio:
            state["best_ratio"] = record.best_ratio
            state["best_sequence"] = record.sequence.as_text()
        else:
            state["best_ratio"] = record.best_ratio
        rundir.append_history([t, record.sequence.as_text(), repr(record.reward), repr(state["best_reward"]), record.cumulative_evals])
        rundir.write_meta(
            {
                "config_hash": chash,
                "iteration": t + 1,
                "eval_count": evaluator.count,
                "best_reward_so_far": state["best_reward"],
                "best_ratio": state["best_ratio"],
                "best_sequence": state["best_sequence"],
                "mode": "random-search",
            }
        )

    report = baselines.random_search(
        evaluator,
        cfg.q,
        cfg.npg,
        cfg.budget,
        stream,
        start_iteration=start_iteration,
        prior_best=prior_best,
        on_record=on_record,
        max_iterations=max_iterations,
    )
    if report is None:
        print(f"paused after max-iterations; resume with: mctsqaoa resume {rundir.path}")
        return 0

    _write_json(
        rundir.result_path,
        _result_payload(
            cfg,
            model,
            {
                "best_sequence": report.best_sequence.as_text(),
                "best_ratio": report.best_ratio,
                "function_eval_count": report.function_eval_count,
                "iterations_completed": start_iteration + len(report.history),
            },
        ),
    )
    return 0


def _run_landscape(cfg: RunConfig, rundir: RunDir, workers: int) -> int:
    model = build(cfg.model)
    evaluator = RewardEvaluator(model, cfg.noise)
    stream = root(cfg.seed, "landscape")
    chash = config_hash(cfg)

    if cfg.landscape_sequences == "all":
        sequences = list(baselines.enumerate_sequences(model.pool_size, cfg.q))
    else:
        sample_rng = stream.child("sample").generator()
        sequences = baselines.sample_sequences(model.pool_size, cfg.q, int(cfg.landscape_sequences), sample_rng)

    if os.path.exists(rundir.meta_path):
        meta = rundir.read_meta()
        if meta.get("config_hash") != chash:
            raise IncompatibleCheckpoint("config hash does not match the checkpoint")
    skip = rundir.read_landscape_indices(sequences)
    rundir.write_meta({"config_hash": chash, "mode": "landscape", "total_sequences": len(sequences)})

    t0 = time.perf_counter()

    def on_record(rec: baselines.LandscapeRecord) -> None:
        wall_ms = int((time.perf_counter() - t0) * 1000)
        rundir.append_landscape([rec.sequence.as_text(), repr(rec.ratio), rec.function_evals, cfg.seed, wall_ms])

    pool = _make_pool(cfg, workers)
    try:
        records = baselines.profile_landscape(
            evaluator,
            cfg.npg,
            sequences,
            stream,
            skip_indices=skip,
            on_record=on_record,
            worker_pool=pool,
        )
    finally:
        if pool is not None:
            pool.shutdown()

    ratios = [r.ratio for r in records]
    _write_json(
        rundir.result_path,
        _result_payload(
            cfg,
            model,
            {
                "sequences_solved": len(records) + len(skip),
                "best_ratio": max(ratios) if ratios else None,
                "function_eval_count": evaluator.count,
            },
        ),
    )
    return 0


def _run_single_sequence(cfg: RunConfig, rundir: RunDir, workers: int) -> int:
    model = build(cfg.model)
    evaluator = RewardEvaluator(model, cfg.noise)
    stream = root(cfg.seed, "single")
    seq = cfg.single_sequence
    pool = _make_pool(cfg, workers)
    try:
        result = npg.best_of_inits(evaluator, seq, cfg.npg, stream, pool=pool)
    finally:
        if pool is not None:
            pool.shutdown()
    durations = npg.durations_from_draws(result.params.mu, model.total_duration)
    ratio = evaluator.exact_ratio(seq, durations)
    _write_json(
        rundir.result_path,
        _result_payload(
            cfg,
            model,
            {
                "best_sequence": seq.as_text(),
                "best_ratio": ratio,
                "estimated_reward": result.estimated_reward,
                "durations": [float(v) for v in durations.values],
                "function_eval_count": evaluator.count,
            },
        ),
    )
    return 0


def _dispatch(cfg: RunConfig, rundir: RunDir, workers: int, max_iterations: int | None) -> int:
    if cfg.mode == "mcts":
        return _run_mcts(cfg, rundir, workers, max_iterations)
    if cfg.mode == "random-search":
        return _run_random_search(cfg, rundir, workers, max_iterations)
    if cfg.mode == "landscape":
        return _run_landscape(cfg, rundir, workers)
    return _run_single_sequence(cfg, rundir, workers)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rundir = RunDir(cfg.output_dir)
    if os.path.abspath(args.config) != os.path.abspath(rundir.config_path):
        shutil.copyfile(args.config, rundir.config_path)
    workers = resolve_workers(args.workers)
    try:
        return _dispatch(cfg, rundir, workers, args.max_iterations)
    except IncompatibleCheckpoint as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - partial artifacts stay on disk
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


def cmd_resume(args) -> int:
    config_path = os.path.join(args.dir, "config.yaml")
    if not os.path.exists(config_path):
        print(f"no config.yaml in {args.dir}", file=sys.stderr)
        return 2
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rundir = RunDir(args.dir)
    workers = resolve_workers(args.workers)
    try:
        return _dispatch(cfg, rundir, workers, args.max_iterations)
    except IncompatibleCheckpoint as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"ok: mode={cfg.mode} seed={cfg.seed} hash={config_hash(cfg)[:12]}")
    return 0


def cmd_enumerate(args) -> int:
    if args.count_only:
        print(sequence_count(args.pool, args.q))
        return 0
    for seq in baselines.enumerate_sequences(args.pool, args.q):
        print(seq.as_text())
    return 0


def cmd_version(_args) -> int:
    print(__version__)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mctsqaoa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a run configuration")
    p_run.add_argument("config")
    p_run.add_argument("--workers", type=int, default=None, help="worker processes (default: MCTSQAOA_WORKERS or 1)")
    p_run.add_argument("--max-iterations", type=int, default=None, help="pause after this many new iterations")
    p_run.set_defaults(func=cmd_run)

    p_res = sub.add_parser("resume", help="continue an interrupted run directory")
    p_res.add_argument("dir")
    p_res.add_argument("--workers", type=int, default=None)
    p_res.add_argument("--max-iterations", type=int, default=None)
    p_res.set_defaults(func=cmd_resume)

    p_val = sub.add_parser("validate", help="check a configuration file")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_enum = sub.add_parser("enumerate", help="list legal gate sequences")
    p_enum.add_argument("--pool", type=int, required=True)
    p_enum.add_argument("--q", type=int, required=True)
    p_enum.add_argument("--count-only", action="store_true")
    p_enum.set_defaults(func=cmd_enumerate)

    p_ver = sub.add_parser("version", help="print the package version")
    p_ver.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
