"""Run configuration: YAML schema, validation, and hashing.

One file describes one experiment.  Validation errors carry the dotted field
path (e.g. ``npg.batch_size``) so the CLI can point at the offending entry.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import yaml

from .mcts import MctsConfig
from .models import ModelSpec
from .npg import NpgConfig
from .reward import GateSequence, NoiseModel

MODES = ("mcts", "random-search", "landscape", "single-sequence")


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    seed: int
    output_dir: str
    q: int
    model: ModelSpec
    noise: NoiseModel
    npg: NpgConfig
    mcts: MctsConfig
    budget: int | None = None
    landscape_sequences: int | str | None = None
    single_sequence: GateSequence | None = None
    raw: dict = field(default_factory=dict, compare=False)


def _get(data: dict, path: str, default=None, required=False):
    node: Any = data
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(path, "required field is missing")
            return default
        node = node[part]
    return node


def _expect(value, types, path: str):
    if not isinstance(value, types) or isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        names = (
            "/".join(t.__name__ for t in types) if isinstance(types, tuple) else types.__name__
        )
        raise ConfigError(path, f"expected {names}, got {type(value).__name__} ({value!r})")
    return value


def parse_config(data: dict) -> RunConfig:
    """Validate a parsed YAML mapping into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")

    mode = _expect(_get(data, "mode", required=True), str, "mode")
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}")
    seed = _expect(_get(data, "seed", required=True), int, "seed")
    if seed < 0:
        raise ConfigError("seed", "must be nonnegative")
    output_dir = _expect(_get(data, "output_dir", required=True), str, "output_dir")
    q = _expect(_get(data, "q", required=True), int, "q")
    if q < 1:
        raise ConfigError("q", "must be >= 1")

    kind = _expect(_get(data, "model.kind", required=True), str, "model.kind")
    total_duration = float(_expect(_get(data, "model.total_duration", required=True), (int, float), "model.total_duration"))
    if kind == "ising2d":
        rows = _expect(_get(data, "model.rows", required=True), int, "model.rows")
        cols = _expect(_get(data, "model.cols", required=True), int, "model.cols")
        num_spins: int | tuple[int, int] = (rows, cols)
    else:
        num_spins = _expect(_get(data, "model.num_spins", required=True), int, "model.num_spins")
    couplings = _get(data, "model.couplings")
    if couplings is not None and not isinstance(couplings, dict):
        raise ConfigError("model.couplings", "must be a mapping of coupling name to value")
    include_identity = bool(_get(data, "model.include_identity", default=False))
    subset = _get(data, "model.pool_subset")
    if subset is not None:
        if not isinstance(subset, list) or not all(isinstance(s, str) for s in subset):
            raise ConfigError("model.pool_subset", "must be a list of pool labels")
        subset = tuple(subset)
    try:
        model = ModelSpec(
            kind=kind,
            num_spins=num_spins,
            total_duration=total_duration,
            couplings=couplings,
            include_identity=include_identity,
            pool_subset=subset,
        )
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from exc

    noise_kind = _get(data, "noise.kind", default="none")
    try:
        noise = NoiseModel(
            kind=noise_kind,
            gamma=float(_get(data, "noise.gamma", default=0.0)),
            delta=float(_get(data, "noise.delta", default=0.0)),
        )
    except ValueError as exc:
        raise ConfigError("noise", str(exc)) from exc

    npg_fields = dict(_get(data, "npg", default={}) or {})
    if "learning_rate" in npg_fields and isinstance(npg_fields["learning_rate"], list):
        npg_fields["learning_rate"] = tuple(float(v) for v in npg_fields["learning_rate"])
    try:
        npg = NpgConfig(**npg_fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError("npg", str(exc)) from exc

    mcts_fields = dict(_get(data, "mcts", default={}) or {})
    try:
        mcts = MctsConfig(**mcts_fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError("mcts", str(exc)) from exc

    budget = _get(data, "budget")
    if budget is not None:
        budget = _expect(budget, int, "budget")
        if budget < 1:
            raise ConfigError("budget", "must be positive")

    landscape_sequences = None
    if mode == "landscape":
        landscape_sequences = _get(data, "landscape.sequences", required=True)
        if landscape_sequences != "all":
            landscape_sequences = _expect(landscape_sequences, int, "landscape.sequences")
            if landscape_sequences < 1:
                raise ConfigError("landscape.sequences", "must be positive or 'all'")

    single_sequence = None
    if mode == "single-sequence":
        indices = _get(data, "sequence", required=True)
        if not isinstance(indices, list) or not all(isinstance(i, int) for i in indices):
            raise ConfigError("sequence", "must be a list of gate indices")
        if len(indices) != q:
            raise ConfigError("sequence", f"length {len(indices)} != q = {q}")
        try:
            single_sequence = GateSequence(tuple(indices))
        except ValueError as exc:
            raise ConfigError("sequence", str(exc)) from exc

    if mode == "random-search" and budget is None:
        raise ConfigError("budget", "random-search mode requires a budget")

    return RunConfig(
        mode=mode,
        seed=seed,
        output_dir=output_dir,
        q=q,
        model=model,
        noise=noise,
        npg=npg,
        mcts=mcts,
        budget=budget,
        landscape_sequences=landscape_sequences,
        single_sequence=single_sequence,
        raw=data,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError("<yaml>", f"parse error{where}: {exc}") from exc
    return parse_config(data)


def config_hash(cfg: RunConfig) -> str:
    """Stable digest of everything that determines the run (except output_dir)."""
    payload = {k: v for k, v in cfg.raw.items() if k != "output_dir"}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
