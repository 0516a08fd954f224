#!/usr/bin/env python3
"""Regenerate the shipped sample dataset and demo network parameters.

These assets exist so `wbopt validate` and the service have something to run
against out of the box; they are small on purpose. Deterministic given the
seeds below. Run from the repo root after an editable install:

    python scripts/make_bundled_assets.py
"""

import json
import pathlib

import numpy as np

from wbopt.dataset import generate_dataset, read_dataset
from wbopt.model import load_humanoid
from wbopt.net import TrainConfig, dataset_arrays, forward, save_params, train

DATA = pathlib.Path(__file__).resolve().parent.parent / "src" / "wbopt" / "data"
N_SAMPLES = 200
SEED = 2024


def main() -> None:
    model = load_humanoid()
    ds_path = DATA / "sample_dataset.jsonl"
    report = generate_dataset(model, n=N_SAMPLES, seed=SEED, out=str(ds_path))
    print(f"wrote {ds_path} (rejected {report.rejected})")

    samples = read_dataset(str(ds_path))
    params, train_report = train(samples, TrainConfig(
        epochs=400, seed=SEED, hidden=64, batch_size=32, lr=3e-3,
        weight_decay=0.1, input_noise=0.05))
    params_path = DATA / "sample_params.json"
    save_params(params, str(params_path))

    X, Y = dataset_arrays(samples)
    pred = forward(params, X)
    mse_rad = float(np.mean((pred - Y) ** 2))
    max_abs = float(np.max(np.abs(pred - Y)))
    meta = {"n_samples": N_SAMPLES, "seed": SEED,
            "best_val_normalized": train_report.best_val,
            "train_mse_rad2": mse_rad, "train_max_abs_rad": max_abs}
    (DATA / "sample_params.meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {params_path}; val {train_report.best_val:.2e}, "
          f"max abs training error {max_abs:.3f} rad")


if __name__ == "__main__":
    main()
