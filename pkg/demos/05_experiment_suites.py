"""The three experiment suites, at desk scale.

Sweeps sample size, label noise, and the condition number of W, writing
per-trial CSV rows plus per-grid-point summaries (and an SVG for each
suite) under demos/output/.  Scaled-down grids keep the script to about
a minute; raise the dims and trial counts toward d = k = 10, trials = 5
to reproduce the reported numbers.
"""

from pathlib import Path

import numpy as np

from momnet import (ExperimentConfig, LearnOptions, default_mixture,
                    run_experiment, summarize)

OUT = Path(__file__).parent / "output"
ROBUST = LearnOptions(use_als=True, refine=True)


def show(config, rows):
    print(f"-- {config.experiment} --")
    for s in summarize(config, rows):
        print(f"  grid={s[4]:<8g} trials_ok={s[5]}  W_err={s[6]:.4f}  "
              f"A_err={s[7]:.4f}  mse={s[8]:.4f}")


config = ExperimentConfig(
    experiment="sample_efficiency", d=6, k=6,
    grid=(2_000, 8_000, 32_000), trials=3, seed=0, test_n=5_000)
show(config, run_experiment(config, out_dir=OUT, plot=True))

config = ExperimentConfig(
    experiment="noise", d=6, k=6, grid=(0.0, 0.1, 0.3), trials=3,
    n=10_000, options=ROBUST, seed=1, test_n=5_000)
rows = run_experiment(config, out_dir=OUT, plot=True)
show(config, rows)
print("  (mse tracks sigma^2: irreducible label noise)")

config = ExperimentConfig(
    experiment="conditioning", d=6, k=6, grid=(1.0, 3.0, 10.0), trials=3,
    n=20_000, distribution=default_mixture(6, mean_scale=1 / np.sqrt(6)),
    conditioned="W", options=ROBUST, seed=2, test_n=5_000)
show(config, run_experiment(config, out_dir=OUT, plot=True))

print(f"\nCSV rows, summaries, and SVG plots written to {OUT}")
