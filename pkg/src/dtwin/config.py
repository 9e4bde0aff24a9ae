"""Run configuration: a YAML document validated and resolved before any computation."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .asset import DegradationSpec, RepairSpec
from .ddn import TransitionModel, validate_cpt
from .planner import Catastrophic, HealthRule, RewardSpec
from .statespace import ConfigurationError, StateSpace, build_state_space
from .transitions import build_table

# sections whose content determines the offline artifacts
OFFLINE_SECTIONS = ("state_space", "actions", "rewards", "structure", "offline", "classifier")

ONLINE_MODES = ("channel", "pipeline")


def _require(mapping: dict, key: str, where: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigurationError(f"missing '{key}' in {where}")
    return mapping[key]


def _number(value, where: str, positive: bool = False) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where} must be a number, got {value!r}") from None
    if not np.isfinite(x) or (positive and x <= 0):
        raise ConfigurationError(f"{where} must be a {'positive ' if positive else ''}finite number")
    return x


def _pair(value, where: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigurationError(f"{where} must be a [low, high] pair")
    lo, hi = (_number(v, where) for v in value)
    if hi < lo:
        raise ConfigurationError(f"{where} is reversed")
    return lo, hi


@dataclass
class ActionSpec:
    name: str
    model: TransitionModel
    process: DegradationSpec | RepairSpec
    control_reward: float


def _process(spec: dict, where: str) -> DegradationSpec | RepairSpec:
    kind = _require(spec, "kind", where)
    try:
        if kind == "degradation":
            return DegradationSpec(
                inception_prob=_number(_require(spec, "inception_prob", where), f"{where}.inception_prob"),
                inception_range=_pair(spec.get("inception_range", [0.30, 0.35]), f"{where}.inception_range"),
                growth_mean=_number(spec.get("growth_mean", 0.015), f"{where}.growth_mean"),
                growth_std=_number(spec.get("growth_std", 0.01), f"{where}.growth_std"),
            )
        if kind == "repair":
            return RepairSpec(
                decrement_mean=_number(spec.get("decrement_mean", 0.0), f"{where}.decrement_mean"),
                decrement_std=_number(spec.get("decrement_std", 0.0), f"{where}.decrement_std"),
                full_reset=bool(spec.get("full_reset", False)),
                recovery_threshold=_number(spec.get("recovery_threshold", 0.30), f"{where}.recovery_threshold"),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{where}: {exc}") from None
    raise ConfigurationError(f"{where}: unknown process kind {kind!r}")


def _reward_spec(spec: dict, actions: list[ActionSpec]) -> RewardSpec:
    rules = []
    for i, r in enumerate(_require(spec, "health_rules", "rewards")):
        where = f"rewards.health_rules[{i}]"
        rules.append(
            HealthRule(
                regions=tuple(int(j) for j in _require(r, "regions", where)),
                rate=_number(_require(r, "rate", where), f"{where}.rate"),
                coeff=_number(r.get("coeff", -1.0), f"{where}.coeff"),
                offset=_number(r.get("offset", 0.0), f"{where}.offset"),
            )
        )
    cat = spec.get("catastrophic")
    if cat is not None:
        cat = Catastrophic(
            threshold=_number(_require(cat, "threshold", "rewards.catastrophic"), "catastrophic threshold"),
            value=_number(_require(cat, "value", "rewards.catastrophic"), "catastrophic value"),
            rule=str(cat.get("rule", "overlap")),
        )
        if cat.rule not in ("overlap", "representative"):
            raise ConfigurationError(f"unknown catastrophic rule {cat.rule!r}")
    return RewardSpec(
        control_rewards={u: a.control_reward for u, a in enumerate(actions)},
        health_rules=rules,
        alpha=_number(_require(spec, "alpha", "rewards"), "rewards.alpha"),
        undamaged_health=_number(spec.get("undamaged_health", 0.0), "rewards.undamaged_health"),
        catastrophic=cat,
        representative=str(spec.get("representative", "midpoint")),
    )


@dataclass
class RunConfig:
    raw: dict
    name: str
    seed: int
    output_dir: Path
    space: StateSpace
    actions: list[ActionSpec]
    rewards: RewardSpec
    gamma: float
    vi_tol: float
    structure: dict
    snr: float
    pod_tolerance: float
    n_snapshots: int
    n_training: int
    n_test_per_cell: int
    stratified: bool
    classifier: dict
    mode: str
    n_obs: int
    steps: int
    horizon: int

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def action_names(self) -> list[str]:
        return [a.name for a in self.actions]

    @property
    def models(self) -> list[TransitionModel]:
        return [a.model for a in self.actions]

    @property
    def processes(self) -> dict:
        return {u: a.process for u, a in enumerate(self.actions)}

    def digest(self) -> str:
        """Hash of everything the offline artifacts depend on apart from the seed."""
        payload = {k: self.raw.get(k) for k in OFFLINE_SECTIONS}
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        raw = copy.deepcopy(self.raw)
        raw["seed"] = int(seed)
        return replace(parse_config(raw), output_dir=self.output_dir)


def parse_config(raw: Any, base_dir: Path | None = None) -> RunConfig:
    """Validate a configuration mapping and resolve every discrete object it names."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a mapping")
    name = str(_require(raw, "name", "configuration"))
    seed = _require(raw, "seed", "configuration")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigurationError("seed must be a nonnegative integer")

    ss = _require(raw, "state_space", "configuration")
    space = build_state_space(int(_require(ss, "n_regions", "state_space")), _require(ss, "interval_edges", "state_space"))

    acts = _require(raw, "actions", "configuration")
    if not isinstance(acts, list) or not acts:
        raise ConfigurationError("actions must be a nonempty list")
    actions = []
    for u, a in enumerate(acts):
        where = f"actions[{u}]"
        aname = str(_require(a, "name", where))
        if "control_reward" not in a:
            raise ConfigurationError(f"no control reward for action {aname!r}")
        table = build_table(space, _require(a, "transition", where))
        bad = validate_cpt(table)
        if bad is not None:
            raise ConfigurationError(f"{where} transition row {bad.row}: {bad.reason}")
        actions.append(
            ActionSpec(
                aname,
                TransitionModel(u, table),
                _process(_require(a, "ground_truth", where), f"{where}.ground_truth"),
                _number(a["control_reward"], f"{where}.control_reward"),
            )
        )
    names = [a.name for a in actions]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"duplicate action names {names}")

    rw = _require(raw, "rewards", "configuration")
    rewards = _reward_spec(rw, actions)
    covered = {j for r in rewards.health_rules for j in r.regions}
    missing = sorted(set(range(1, space.n_regions + 1)) - covered)
    if missing:
        raise ConfigurationError(f"no health rule covers regions {missing}")
    gamma = _number(_require(rw, "gamma", "rewards"), "rewards.gamma")
    if not 0 <= gamma < 1:
        raise ConfigurationError("rewards.gamma must lie in [0, 1)")

    structure = dict(_require(raw, "structure", "configuration"))
    if structure.get("kind") not in ("l_frame", "portal_frame"):
        raise ConfigurationError(f"unknown structure kind {structure.get('kind')!r}")
    off = raw.get("offline", {}) or {}
    clf = dict(raw.get("classifier", {}) or {})
    clf.setdefault("n_bands", 16)
    clf.setdefault("metric", "euclidean")
    if clf["metric"] not in ("euclidean", "whitened"):
        raise ConfigurationError(f"unknown classifier metric {clf['metric']!r}")
    onl = raw.get("online", {}) or {}
    mode = str(onl.get("mode", "channel"))
    if mode not in ONLINE_MODES:
        raise ConfigurationError(f"online.mode must be one of {ONLINE_MODES}")

    n_obs = int(onl.get("n_obs", 1))
    if n_obs < 1:
        raise ConfigurationError("online.n_obs must be at least 1")
    ints = {
        "n_snapshots": int(off.get("n_snapshots", 400)),
        "n_training": int(off.get("n_training", 2000)),
        "n_test_per_cell": int(off.get("n_test_per_cell", 20)),
        "steps": int(onl.get("steps", 50)),
    }
    for k, v in ints.items():
        if v < 1:
            raise ConfigurationError(f"{k} must be at least 1")
    horizon = int((raw.get("predict", {}) or {}).get("horizon", 20))
    if horizon < 0:
        raise ConfigurationError("predict.horizon must be nonnegative")

    out = Path(raw.get("output_dir", f"runs/{name}"))
    if not out.is_absolute() and base_dir is not None:
        out = Path(base_dir) / out
    return RunConfig(
        raw=raw,
        name=name,
        seed=seed,
        output_dir=out,
        space=space,
        actions=actions,
        rewards=rewards,
        gamma=gamma,
        vi_tol=_number(rw.get("tol", 1e-9), "rewards.tol", positive=True),
        structure=structure,
        snr=_number(off.get("snr", 100.0), "offline.snr", positive=True),
        pod_tolerance=_number(off.get("pod_tolerance", 1e-3), "offline.pod_tolerance"),
        n_snapshots=ints["n_snapshots"],
        n_training=ints["n_training"],
        n_test_per_cell=ints["n_test_per_cell"],
        stratified=bool(off.get("stratified", True)),
        classifier=clf,
        mode=mode,
        n_obs=n_obs,
        steps=ints["steps"],
        horizon=horizon,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    return parse_config(raw, Path.cwd())
