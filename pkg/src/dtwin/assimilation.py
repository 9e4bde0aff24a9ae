"""Labelled datasets, a nearest-centroid damage classifier and its confusion-based channel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .asset import GroundTruth, discretize
from .ddn import ConfusionCPT
from .statespace import StateSpace
from .structure.signals import Recording, add_noise, latin_hypercube

LOG_FLOOR = 1e-30


class SimulationError(RuntimeError):
    """A structural solve failed; the message names the sample index."""


class EmptyCellError(ValueError):
    def __init__(self, cells: Sequence[int], what: str = "training set"):
        self.cells = list(cells)
        super().__init__(f"{what} has no items for states {self.cells}")


@dataclass
class TrainingDataset:
    """Noisy recordings with their damage labels and operational parameters."""

    recordings: list[Recording]
    regions: np.ndarray
    deltas: np.ndarray
    params: np.ndarray  # (I, n_op)

    def __len__(self) -> int:
        return len(self.recordings)

    @property
    def items(self):
        return list(zip(self.recordings, self.regions.tolist(), self.deltas.tolist()))

    def states(self, space: StateSpace) -> np.ndarray:
        return np.array(
            [discretize(GroundTruth(int(y), float(d)), space) for y, d in zip(self.regions, self.deltas)],
            dtype=int,
        )

    def manifest(self) -> list[dict]:
        rows = []
        for i, (op, y, d) in enumerate(zip(self.params, self.regions, self.deltas)):
            rows.append({"index": i, "params": [float(v) for v in op], "region": int(y), "delta": float(d)})
        return rows


def draw_labels(space: StateSpace, op_ranges, n: int, rng: np.random.Generator, stratified: bool = True):
    """Latin-hypercube draws of ``(operational params, region, delta)``.

    With ``stratified`` the digital-state cells are dealt out evenly (shuffled)
    and the hypercube only places parameters and the level inside each cell.
    Otherwise region and level are hypercube dimensions as well.
    """
    n_op = len(op_ranges)
    if stratified:
        u = latin_hypercube(list(op_ranges) + [(0.0, 1.0)], n, rng)
        cells = rng.permutation(np.resize(np.arange(space.n_states), n))
        regions = np.zeros(n, dtype=int)
        deltas = np.zeros(n)
        bounds = space.interval_bounds
        for i, s in enumerate(cells):
            if s == 0:
                continue
            j, k = space.cell(int(s))
            lo, hi = bounds[k - 1]
            regions[i] = j
            deltas[i] = lo + u[i, n_op] * (hi - lo)
        return u[:, :n_op], regions, deltas
    ranges = list(op_ranges) + [(0.0, space.n_regions + 1.0), (space.delta_min, space.delta_max)]
    u = latin_hypercube(ranges, n, rng)
    regions = np.minimum(np.floor(u[:, n_op]).astype(int), space.n_regions)
    deltas = np.where(regions == 0, 0.0, u[:, n_op + 1])
    return u[:, :n_op], regions, deltas


def simulate_items(
    simulate: Callable[[np.ndarray, int, float], Recording],
    params: np.ndarray,
    regions: np.ndarray,
    deltas: np.ndarray,
    snr: float,
    seed: int,
    stream: int = 0,
) -> list[Recording]:
    """Run ``simulate`` per item and corrupt it with noise from a per-item seed."""
    out = []
    for i, (op, y, d) in enumerate(zip(params, regions, deltas)):
        try:
            rec = simulate(op, int(y), float(d))
        except Exception as exc:  # solver failures carry the sample index upward
            raise SimulationError(f"sample {i}: {exc}") from exc
        rng = np.random.default_rng([seed, stream, i])
        out.append(add_noise(rec, snr, rng) if np.isfinite(snr) else rec)
    return out


def build_training_dataset(
    simulate: Callable[[np.ndarray, int, float], Recording],
    space: StateSpace,
    op_ranges,
    n_samples: int,
    snr: float,
    seed: int,
    stratified: bool = True,
    stream: int = 0,
) -> TrainingDataset:
    """``simulate(op, region, delta)`` is normally a reduced-order solve."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng([seed, stream])
    params, regions, deltas = draw_labels(space, op_ranges, n_samples, rng, stratified)
    recs = simulate_items(simulate, params, regions, deltas, snr, seed, stream + 1)
    return TrainingDataset(recs, regions, deltas, params)


def band_energies(samples, n_bands: int) -> np.ndarray:
    """Mean spectral energy per band and channel, shape ``(N_u, n_bands)``.

    The zero-frequency bin is dropped and the remaining bins are split into
    ``n_bands`` contiguous groups of (nearly) equal size.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2 * n_bands:
        raise ValueError(f"{x.shape[0]} samples cannot fill {n_bands} bands")
    power = np.abs(np.fft.rfft(x, axis=0)[1:]) ** 2
    groups = np.array_split(np.arange(power.shape[0]), n_bands)
    return np.stack([power[g].mean(axis=0) for g in groups], axis=1)


def extract_features(rec: Recording | np.ndarray, n_bands: int = 16) -> np.ndarray:
    """Log band energies, channel-major, flattened to ``N_u * n_bands`` values."""
    samples = rec.samples if isinstance(rec, Recording) else rec
    return np.log(np.maximum(band_energies(samples, n_bands), LOG_FLOOR)).ravel()


def _relative(features: np.ndarray, n_bands: int) -> np.ndarray:
    # subtract, band by band, the mean log energy over channels
    f = features.reshape(features.shape[:-1] + (-1, n_bands))
    return (f - f.mean(axis=-2, keepdims=True)).reshape(features.shape)


@dataclass(frozen=True)
class SurrogateClassifier:
    """Nearest centroid in standardized (optionally whitened) feature space.

    ``transform`` maps standardized features to the space where Euclidean
    distance is taken; it is the identity for the plain metric.
    """

    mean: np.ndarray
    std: np.ndarray
    centroids: np.ndarray  # (N_d, F), standardized
    transform: np.ndarray | None
    n_bands: int
    relative: bool = False

    @property
    def n_states(self) -> int:
        return self.centroids.shape[0]

    def features(self, recs) -> np.ndarray:
        if isinstance(recs, Recording):
            recs = [recs]
        F = np.stack([extract_features(r, self.n_bands) for r in recs])
        return _relative(F, self.n_bands) if self.relative else F

    def _embed(self, F: np.ndarray) -> np.ndarray:
        Z = (F - self.mean) / self.std
        return Z if self.transform is None else Z @ self.transform

    def predict_features(self, F) -> np.ndarray:
        Z = self._embed(np.atleast_2d(F))
        C = self._embed_centroids()
        d2 = ((Z[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)  # first minimum: lower state index wins ties

    def _embed_centroids(self) -> np.ndarray:
        return self.centroids if self.transform is None else self.centroids @ self.transform

    def predict(self, recs) -> np.ndarray:
        return self.predict_features(self.features(recs))


def _whitening(residuals: np.ndarray, dof: int, floor: float) -> np.ndarray:
    cov = residuals.T @ residuals / max(dof, 1)
    w, V = np.linalg.eigh(cov)
    w = np.maximum(w, floor * w.max())
    return V / np.sqrt(w)


def train_classifier(
    dataset: TrainingDataset,
    space: StateSpace,
    n_bands: int = 16,
    metric: str = "euclidean",
    relative: bool = False,
    whitening_floor: float = 1e-4,
    rank: int | None = None,
) -> SurrogateClassifier:
    """Centroid per digital-state cell of standardized log band energies.

    ``metric="whitened"`` additionally measures distance after whitening by the
    pooled within-cell covariance, eigenvalues floored at ``whitening_floor``
    times the largest. ``rank`` then keeps only the leading directions along
    which the whitened centroids spread the most.
    """
    if metric not in ("euclidean", "whitened"):
        raise ValueError(f"unknown metric {metric!r}")
    labels = dataset.states(space)
    empty = sorted(set(range(space.n_states)) - set(labels.tolist()))
    if empty:
        raise EmptyCellError(empty)
    F = np.stack([extract_features(r, n_bands) for r in dataset.recordings])
    if relative:
        F = _relative(F, n_bands)
    mean = F.mean(axis=0)
    std = F.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Z = (F - mean) / std
    counts = np.bincount(labels, minlength=space.n_states)
    sums = np.zeros((space.n_states, Z.shape[1]))
    np.add.at(sums, labels, Z)
    centroids = sums / counts[:, None]
    transform = None
    if metric == "whitened":
        transform = _whitening(Z - centroids[labels], len(Z) - space.n_states, whitening_floor)
        if rank is not None:
            Cw = centroids @ transform
            Cw = Cw - Cw.mean(axis=0)
            _, V = np.linalg.eigh(Cw.T @ Cw)
            transform = transform @ V[:, ::-1][:, :rank]
    elif rank is not None:
        raise ValueError("rank reduction needs the whitened metric")
    return SurrogateClassifier(mean, std, centroids, transform, n_bands, relative)


def classify(classifier: SurrogateClassifier, rec: Recording) -> int:
    return int(classifier.predict(rec)[0])


def compute_confusion(classifier: SurrogateClassifier, recordings, true_states, n_states: int | None = None):
    """Raw counts ``[true, predicted]`` over a labelled test set."""
    n_states = classifier.n_states if n_states is None else n_states
    true_states = np.asarray(true_states, dtype=int)
    missing = sorted(set(range(n_states)) - set(true_states.tolist()))
    if missing:
        raise EmptyCellError(missing, "test set")
    pred = classifier.predict(list(recordings))
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    np.add.at(counts, (true_states, pred), 1)
    return counts


def confusion_to_cpt(counts, smoothing: float = 1.0) -> tuple[ConfusionCPT, np.ndarray]:
    """Laplace-smoothed belief over truth given an estimate, and estimate given truth.

    Returns the CPT indexed ``[estimate, true]`` and the channel table indexed
    ``[true, estimate]``.
    """
    C = np.asarray(counts, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("confusion counts must be square")
    if np.any(C < 0):
        raise ValueError("confusion counts must be nonnegative")
    S = C + smoothing
    cpt = S.T / S.T.sum(axis=1, keepdims=True)
    channel = S / S.sum(axis=1, keepdims=True)
    return ConfusionCPT(cpt), channel


def sample_estimate(channel, true_state: int, rng: np.random.Generator) -> int:
    row = np.asarray(channel)[true_state]
    return int(rng.choice(row.shape[0], p=row))


def accuracy(counts) -> float:
    C = np.asarray(counts)
    return float(np.trace(C) / C.sum())


def diagonal_dominance(counts) -> float:
    """Fraction of true states whose most frequent prediction is themselves."""
    C = np.asarray(counts)
    return float(np.mean([C[i, i] == C[i].max() for i in range(C.shape[0])]))
