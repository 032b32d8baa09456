"""End-to-end walkthrough on one short simulated day.

Simulates a 2,000-second day with the default skewed schedule, windows
it, trains a small CNN+LSTM for a handful of epochs, and prints the
evaluation report. Runs in well under a minute on a laptop CPU.

    python3 demos/day_in_the_life.py
"""

import numpy as np

from flocklearn.evaluation import evaluate, render_report
from flocklearn.network import initialize_model
from flocklearn.pipeline import class_distribution, compute_features, \
    compute_feature_stats, make_windows, LABEL_TOKENS
from flocklearn.rng import Rng
from flocklearn.sim import make_skewed_dataset
from flocklearn.training import TrainConfig, train

LOOKBACK = 30


def main():
    train_ds, test_ds = make_skewed_dataset(2000, 2000, seed=2024)
    print("train split:")
    for cls, (count, pct) in enumerate(class_distribution(train_ds.labels)):
        print(f"  {LABEL_TOKENS[cls]:<11} {count:>5}  {pct:5.2f}%")

    train_frames = compute_features(train_ds)
    test_frames = compute_features(test_ds)
    tw = make_windows(train_frames, train_ds.labels, LOOKBACK, "both")
    sw = make_windows(test_frames, test_ds.labels, LOOKBACK, "both")
    stats = compute_feature_stats(train_frames, "both")
    print(f"\n{len(tw)} training windows of shape "
          f"{tw.X.shape[1]}x{tw.X.shape[2]}")

    model = initialize_model("cnn_lstm", tw.X.shape[2], 3, LOOKBACK, "both",
                             Rng(1), feature_stats=stats)
    cfg = TrainConfig(epochs=5, seed=99)

    def progress(entry):
        print(f"epoch {entry.epoch}  loss {entry.loss:.4f}  "
              f"train acc {entry.accuracy:.4f}")

    model, _ = train(model, tw.X, tw.y, cfg, log_fn=progress)

    print()
    print(render_report(evaluate(model, sw)), end="")


if __name__ == "__main__":
    main()
