"""Offline artifact generation, the online assimilation loop and closed-loop prediction."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import io
from .asset import UNDAMAGED, GroundTruth, discretize, sample_operational_params, step_ground_truth
from .assimilation import (
    SurrogateClassifier,
    accuracy,
    build_training_dataset,
    compute_confusion,
    confusion_to_cpt,
    diagonal_dominance,
    draw_labels,
    sample_estimate,
    train_classifier,
)
from .config import RunConfig, parse_config
from .ddn import ConfusionCPT, DegenerateEvidenceError, StepRecord, assimilate_step, predict_closed_loop
from .planner import build_reward_table, control_belief, select_action, value_iteration
from .statespace import ConfigurationError, check_belief, point_mass
from .structure.rom import galerkin_reduce, pod_basis
from .structure.signals import add_noise
from .structure.simulator import StructuralCase, build_case

log = logging.getLogger(__name__)

# independent random streams derived from the master seed
SNAPSHOT_STREAM, TRAIN_STREAM, TEST_STREAM = 1, 10, 20
TRUTH_STREAM, OBS_STREAM = 30, 31


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


class _stage:
    def __init__(self, name: str, timings: dict):
        self.name, self.timings = name, timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        log.info("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def reward_table(cfg: RunConfig) -> np.ndarray:
    return build_reward_table(cfg.space, cfg.rewards, cfg.n_actions)


def solve_policy(cfg: RunConfig):
    R = reward_table(cfg)
    V, policy = value_iteration(R, cfg.models, cfg.gamma, tol=cfg.vi_tol)
    return R, V, policy


# --------------------------------------------------------------------------- offline


@dataclass
class OfflineSummary:
    bundle: Path
    basis_size: int
    accuracy: float
    diagonal_dominance: float
    counts: np.ndarray
    policy: np.ndarray
    timings: dict


def _label_rows(ds, space):
    states = ds.states(space)
    for i, (op, y, d, s) in enumerate(zip(ds.params, ds.regions, ds.deltas, states)):
        yield [i, *op.tolist(), int(y), float(d), int(s), ""]


def _write_dataset_manifest(path, ds, space, n_op):
    header = ["index", *[f"param_{i}" for i in range(n_op)], "region", "delta", "state", "file"]
    io.write_rows(path, header, _label_rows(ds, space))


def _save_classifier(bundle: Path, clf: SurrogateClassifier) -> list[str]:
    files = ["classifier_scaling.csv", "classifier_centroids.csv"]
    io.write_matrix(bundle / files[0], np.vstack([clf.mean, clf.std]), "feature")
    io.write_matrix(bundle / files[1], clf.centroids, "feature")
    if clf.transform is not None:
        files.append("classifier_transform.csv")
        io.write_matrix(bundle / files[-1], clf.transform, "axis")
    return files


def run_offline(cfg: RunConfig, out: Path | None = None) -> OfflineSummary:
    """Structural model, snapshots, reduced basis, surrogate, confusion CPT and policy."""
    bundle = Path(out) if out is not None else cfg.output_dir
    bundle.mkdir(parents=True, exist_ok=True)
    space, seed = cfg.space, cfg.seed
    timings: dict = {}

    with _stage("model", timings):
        case = build_case(cfg.structure)
    n_op = len(case.op_ranges)

    with _stage("snapshots", timings):
        rng = np.random.default_rng([seed, SNAPSHOT_STREAM])
        op, y, d = draw_labels(space, case.op_ranges, cfg.n_snapshots, rng, stratified=False)
        S = case.snapshot_matrix(np.column_stack([op, y, d]))

    with _stage("pod", timings):
        basis = pod_basis(S, cfg.pod_tolerance)
        rom = galerkin_reduce(case.model, basis)
        del S
    log.info("reduced basis size %d", basis.size)

    with _stage("dataset", timings):
        train = build_training_dataset(
            lambda o, r, dl: case.rom_recording(rom, o, r, dl),
            space, case.op_ranges, cfg.n_training, cfg.snr, seed, cfg.stratified, TRAIN_STREAM,
        )

    c = cfg.classifier
    with _stage("training", timings):
        clf = train_classifier(
            train, space,
            n_bands=int(c["n_bands"]),
            metric=c["metric"],
            relative=bool(c.get("relative", False)),
            whitening_floor=float(c.get("whitening_floor", 1e-4)),
            rank=None if c.get("rank") is None else int(c["rank"]),
        )

    with _stage("testing", timings):
        test = build_training_dataset(
            lambda o, r, dl: case.fom_recording(o, r, dl),
            space, case.op_ranges, cfg.n_test_per_cell * space.n_states, cfg.snr, seed, True, TEST_STREAM,
        )
        counts = compute_confusion(clf, test.recordings, test.states(space))
        cpt, channel = confusion_to_cpt(counts)

    with _stage("planning", timings):
        R, V, policy = solve_policy(cfg)

    with _stage("persist", timings):
        digest = space.digest()
        files = []

        def put(name, writer, *args):
            writer(bundle / name, *args)
            files.append(name)

        (bundle / "config.yaml").write_text(yaml.safe_dump(cfg.raw, sort_keys=True))
        files.append("config.yaml")
        put("basis.csv", io.write_matrix, basis.W, "mode")
        put("singular_values.csv", io.write_vector_table, ["index", "sigma"],
            [np.arange(len(basis.singular_values)), basis.singular_values])
        put("dataset_manifest.csv", _write_dataset_manifest, train, space, n_op)
        put("test_manifest.csv", _write_dataset_manifest, test, space, n_op)
        put("confusion_counts.csv", io.write_matrix, counts, "pred")
        put("cpt.csv", io.write_matrix, cpt.table, "state")
        put("channel.csv", io.write_matrix, channel, "estimate")
        files += _save_classifier(bundle, clf)
        put("rewards.csv", io.write_vector_table, ["state", *cfg.action_names],
            [np.arange(space.n_states), *R.T])
        put("policy.csv", io.write_vector_table, ["state", "action"], [np.arange(space.n_states), policy])
        put("value.csv", io.write_vector_table, ["state", "value"], [np.arange(space.n_states), V])
        side = {"state_space": digest, "seed": seed, "n_train": len(train), "n_test": len(test)}
        for name in ("confusion_counts", "cpt", "channel"):
            put(f"{name}.meta.json", io.write_json, side)
        meta = {
            "name": cfg.name,
            "seed": seed,
            "state_space": digest,
            "config": cfg.digest(),
            "n_states": space.n_states,
            "actions": cfg.action_names,
            "basis_size": basis.size,
            "retained_energy": basis.retained_energy,
            "accuracy": accuracy(counts),
            "diagonal_dominance": diagonal_dominance(counts),
            "classifier": {k: c[k] for k in sorted(c)},
        }
        io.write_manifest(bundle, meta, files)

    return OfflineSummary(bundle, basis.size, accuracy(counts), diagonal_dominance(counts), counts, policy, timings)


# --------------------------------------------------------------------------- bundle


@dataclass
class Bundle:
    path: Path
    meta: dict
    config: dict
    cpt: ConfusionCPT
    channel: np.ndarray
    policy: np.ndarray
    values: np.ndarray
    classifier: SurrogateClassifier | None

    @property
    def n_states(self) -> int:
        return len(self.policy)


def _column(path: Path, col: int, cast=float) -> np.ndarray:
    _, rows = io.read_rows(path)
    return np.array([cast(r[col]) for r in rows])


def load_bundle(path: Path) -> Bundle:
    path = Path(path)
    meta = io.check_bundle(path)
    raw = yaml.safe_load((path / "config.yaml").read_text())
    clf = None
    if (path / "classifier_centroids.csv").is_file():
        sc = io.read_matrix(path / "classifier_scaling.csv")
        tr = path / "classifier_transform.csv"
        c = meta.get("classifier", {})
        clf = SurrogateClassifier(
            sc[0], sc[1], io.read_matrix(path / "classifier_centroids.csv"),
            io.read_matrix(tr) if tr.is_file() else None,
            int(c.get("n_bands", 16)), bool(c.get("relative", False)),
        )
    return Bundle(
        path, meta, raw,
        ConfusionCPT(io.read_matrix(path / "cpt.csv")),
        io.read_matrix(path / "channel.csv"),
        _column(path / "policy.csv", 1, int),
        _column(path / "value.csv", 1),
        clf,
    )


def check_compatible(cfg: RunConfig, bundle: Bundle):
    if bundle.meta.get("state_space") != cfg.space.digest():
        raise ConfigurationError("bundle was built for a different state space")
    if bundle.meta.get("config") != cfg.digest():
        raise ConfigurationError("bundle was built from a different configuration")


# --------------------------------------------------------------------------- online


def history_header(n_states: int) -> list[str]:
    return [
        "t", "true_region", "true_delta", "true_state", "estimates", "map_state",
        "action_suggested", "action_enacted", "reward", *[f"p_{i}" for i in range(n_states)],
    ]


@dataclass
class OnlineRun:
    path: Path
    records: list[StepRecord]
    truth: list[GroundTruth]
    suggested: list[int]


def run_online(
    cfg: RunConfig,
    bundle: Bundle,
    n_steps: int | None = None,
    mode: str | None = None,
    out: Path | None = None,
) -> OnlineRun:
    """Simulate the asset, assimilate its observations and act on the suggested control."""
    check_compatible(cfg, bundle)
    space = cfg.space
    n_steps = cfg.steps if n_steps is None else n_steps
    mode = cfg.mode if mode is None else mode
    if mode not in ("channel", "pipeline"):
        raise ConfigurationError(f"unknown online mode {mode!r}")
    models = cfg.models
    policy = bundle.policy
    R = reward_table(cfg)
    rng_truth = np.random.default_rng([cfg.seed, TRUTH_STREAM])
    rng_obs = np.random.default_rng([cfg.seed, OBS_STREAM])

    observe = None
    if mode == "pipeline":
        if bundle.classifier is None:
            raise ConfigurationError("pipeline mode needs a classifier in the bundle")
        case: StructuralCase = build_case(cfg.structure)
        clf = bundle.classifier

        def observe(gt: GroundTruth) -> int:
            op = sample_operational_params(case.op_ranges, rng_obs)
            rec = add_noise(case.fom_recording(op, gt.region, gt.delta), cfg.snr, rng_obs)
            return int(clf.predict(rec)[0])
    else:

        def observe(gt: GroundTruth) -> int:
            return sample_estimate(bundle.channel, discretize(gt, space), rng_obs)

    belief = point_mass(space, 0)
    gt = UNDAMAGED
    enacted = 0
    records, truth, suggested, rows = [], [], [], []
    for t in range(1, n_steps + 1):
        gt = step_ground_truth(gt, cfg.processes[enacted], rng_truth, space.n_regions, space.delta_max)
        true_state = discretize(gt, space)
        estimates = [observe(gt) for _ in range(cfg.n_obs)]
        try:
            belief = assimilate_step(belief, enacted, estimates, models, bundle.cpt)
        except DegenerateEvidenceError as exc:
            raise DegenerateEvidenceError(f"step {t}: {exc}") from exc
        action = select_action(control_belief(belief, policy, cfg.n_actions))
        reward = float(R[true_state, action])
        rec = StepRecord(t=t, action=action, estimates=estimates, posterior=belief, reward=reward)
        records.append(rec)
        truth.append(gt)
        suggested.append(action)
        rows.append([
            t, gt.region, gt.delta, true_state, "|".join(str(e) for e in estimates), rec.map_state,
            action, action, reward, *belief.tolist(),
        ])
        enacted = action

    out_dir = Path(out) if out is not None else bundle.path
    path = io.write_rows(out_dir / "history.csv", history_header(space.n_states), rows)
    return OnlineRun(path, records, truth, suggested)


def read_history(path: Path) -> dict:
    header, rows = io.read_rows(path)
    n = sum(h.startswith("p_") for h in header)
    i0 = header.index("p_0")
    return {
        "t": np.array([int(r[0]) for r in rows]),
        "true_state": np.array([int(r[3]) for r in rows]),
        "estimates": [[int(e) for e in r[4].split("|")] for r in rows],
        "map_state": np.array([int(r[5]) for r in rows]),
        "action_suggested": np.array([int(r[6]) for r in rows]),
        "action_enacted": np.array([int(r[7]) for r in rows]),
        "reward": np.array([float(r[8]) for r in rows]),
        "posterior": np.array([[float(v) for v in r[i0 : i0 + n]] for r in rows]),
    }


# --------------------------------------------------------------------------- predict


def run_predict(cfg: RunConfig, bundle: Bundle, start, horizon: int | None = None, out: Path | None = None) -> Path:
    """Unroll the closed loop from ``start`` and write beliefs and control distributions."""
    horizon = cfg.horizon if horizon is None else horizon
    start = np.asarray(start, dtype=float)
    if start.shape != (bundle.n_states,):
        raise ValueError(f"start belief has {start.size} entries, expected {bundle.n_states}")
    check_belief(start, bundle.n_states)
    beliefs, controls = predict_closed_loop(start, bundle.policy, cfg.models, horizon)
    header = ["t", *[f"p_{i}" for i in range(bundle.n_states)], *[f"q_action{u}" for u in range(cfg.n_actions)]]
    rows = ([h, *b.tolist(), *q.tolist()] for h, (b, q) in enumerate(zip(beliefs, controls)))
    out_dir = Path(out) if out is not None else bundle.path
    return io.write_rows(out_dir / "prediction.csv", header, rows)


def bundle_config(bundle: Bundle) -> RunConfig:
    return parse_config(bundle.config)


# --------------------------------------------------------------------------- export


def export_long(src: Path, out: Path) -> list[Path]:
    """Tidy ``(t, variable, index, value)`` tables for history and prediction CSVs."""
    src, out = Path(src), Path(out)
    written = []
    hist = src / "history.csv"
    if hist.is_file():
        h = read_history(hist)
        rows = []
        for k, t in enumerate(h["t"]):
            for name in ("true_state", "map_state", "action_suggested", "action_enacted", "reward"):
                rows.append([t, name, "", h[name][k]])
            for i, p in enumerate(h["posterior"][k]):
                rows.append([t, "belief", i, p])
        written.append(io.write_rows(out / "history_long.csv", ["t", "variable", "index", "value"], rows))
    pred = src / "prediction.csv"
    if pred.is_file():
        header, data = io.read_rows(pred)
        rows = []
        for r in data:
            for name, v in zip(header[1:], r[1:]):
                kind, idx = ("belief", name[2:]) if name.startswith("p_") else ("control", name[len("q_action"):])
                rows.append([int(r[0]), kind, idx, float(v)])
        written.append(io.write_rows(out / "prediction_long.csv", ["t", "variable", "index", "value"], rows))
    if not written:
        raise ConfigurationError(f"no history.csv or prediction.csv in {src}")
    return written
