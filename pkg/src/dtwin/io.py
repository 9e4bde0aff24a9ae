"""Plain-text artifacts: canonical CSV matrices, sidecar metadata and bundle manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .statespace import ConfigurationError

MANIFEST = "manifest.json"


def fmt(x) -> str:
    """17 significant digits, so every double round-trips exactly."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigurationError(f"{path} is empty")
    return rows[0], rows[1:]


def write_matrix(path: Path, A, prefix: str = "col") -> Path:
    A = np.atleast_2d(np.asarray(A))
    header = [f"{prefix}_{i}" for i in range(A.shape[1])]
    return write_rows(path, header, A.tolist())


def read_matrix(path: Path) -> np.ndarray:
    _, rows = read_rows(path)
    return np.array([[float(v) for v in r] for r in rows])


def write_vector_table(path: Path, names: Sequence[str], columns: Sequence) -> Path:
    return write_rows(path, names, zip(*columns))


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None


def write_manifest(bundle: Path, meta: dict, files: Sequence[str]) -> Path:
    bundle = Path(bundle)
    payload = dict(meta)
    payload["files"] = {name: file_digest(bundle / name) for name in sorted(files)}
    return write_json(bundle / MANIFEST, payload)


def check_bundle(bundle: Path) -> dict:
    """Load the manifest and confirm every listed file is present and unmodified."""
    bundle = Path(bundle)
    if not (bundle / MANIFEST).is_file():
        raise ConfigurationError(f"{bundle} has no {MANIFEST}")
    meta = read_json(bundle / MANIFEST)
    for name, digest in meta.get("files", {}).items():
        path = bundle / name
        if not path.is_file():
            raise ConfigurationError(f"bundle file {name} is missing")
        if file_digest(path) != digest:
            raise ConfigurationError(f"bundle file {name} does not match the manifest")
        sidecar = path.with_suffix(".meta.json")
        if sidecar.is_file():
            side = read_json(sidecar)
            if side.get("state_space") not in (None, meta.get("state_space")):
                raise ConfigurationError(f"{name} was produced for another state space")
    return meta
