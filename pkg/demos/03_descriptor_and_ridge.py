"""Histogram descriptors and a Ridge model on a small synthetic dataset.

Labels are energies per atom from a Lennard-Jones stand-in potential; the
full-size version of this experiment lives in tests/test_acceptance.py.
"""
import time

import numpy as np

from phdesc import GridSpec, compute_diagram, histogram
from phdesc.datagen import dataset_configs, generate
from phdesc.descriptor import fit_standardization, standardize
from phdesc.model import fit_ridge, predict_many, r2_score, rmse, train_test_split

t0 = time.perf_counter()
structures = [generate(c) for c in dataset_configs(220, n_atoms=64, seed=0)]
print(f"generated {len(structures)} structures in {time.perf_counter() - t0:.1f} s")

spec = GridSpec()  # 128 x 128 bins on [0, 8] for birth and death
hists = [histogram(compute_diagram(s, 3.5), spec) for s in structures]
y = np.array([s.label for s in structures])
print("pairs per structure:", np.mean([h.in_window for h in hists]))

train, test = train_test_split(len(y), 0.8, seed=0)
stats = fit_standardization([hists[i] for i in train])  # fit on training data only
model = fit_ridge([standardize(hists[i], stats) for i in train], y[train], 200.0, stats)

pred = predict_many(model, [hists[i] for i in test])  # standardized internally
baseline = rmse(np.full(len(test), y[train].mean()), y[test])
print(f"test RMSE {1000 * rmse(pred, y[test]):.1f} meV/atom, mean predictor {1000 * baseline:.1f}")
print(f"test R2 {r2_score(pred, y[test]):.3f}")
