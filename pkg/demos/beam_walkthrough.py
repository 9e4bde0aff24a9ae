"""Offline build, a short online episode and a forecast for the two-action beam.

Usage: python demos/beam_walkthrough.py [output_dir]
Takes about half a minute on one core.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from dtwin.config import load_config
from dtwin.io import read_rows
from dtwin.pipeline import load_bundle, run_offline, run_online, run_predict

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "beam2.yaml"


def main(out):
    cfg = load_config(CONFIG)
    summary = run_offline(cfg, out)
    print(f"reduced basis: {summary.basis_size} modes")
    print(f"surrogate accuracy on full-order test set: {summary.accuracy:.3f}")
    print("stage timings: " + ", ".join(f"{k} {v:.1f}s" for k, v in summary.timings.items()))

    bundle = load_bundle(out)
    run = run_online(cfg, bundle, 30)
    sp, names = cfg.space, cfg.action_names
    print("\n  t  truth        MAP          p(MAP)  action")
    for rec, gt in zip(run.records, run.truth):
        truth = "undamaged" if gt.region == 0 else f"y{gt.region} d={gt.delta:.2f}"
        j, k = sp.cell(rec.map_state)
        est = "undamaged" if j == 0 else f"y{j} k={k}"
        print(f"{rec.t:3d}  {truth:<12} {est:<12} {rec.posterior[rec.map_state]:6.2f}  {names[rec.action]}")

    start = run.records[-1].posterior
    path = run_predict(cfg, bundle, start, 10)
    header, rows = read_rows(path)
    q = np.array([[float(v) for v in r[-cfg.n_actions:]] for r in rows])
    print("\nforecast of the control distribution from the last belief:")
    for h, row in enumerate(q):
        print(f"  +{h:<2d} " + "  ".join(f"{n}={p:.2f}" for n, p in zip(names, row)))


if __name__ == "__main__":
    if len(sys.argv) > 1:
        main(Path(sys.argv[1]))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            main(Path(tmp))
