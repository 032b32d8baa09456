"""Label a position stream as it arrives, one row per second.

Trains a small model on a simulated day, then replays the test day
through the streaming predictor the way a live GPS feed would arrive.
The first lookback-1 rows warm the buffer up; every row after that gets
a label and class probabilities, and matches what batch evaluation of
the same day would say, bit for bit.

    python3 demos/live_labels.py
"""

from flocklearn.pipeline import LABEL_TOKENS, compute_features, \
    compute_feature_stats, make_windows
from flocklearn.network import initialize_model
from flocklearn.rng import Rng
from flocklearn.sim import make_skewed_dataset
from flocklearn.stream import StreamPredictor
from flocklearn.training import TrainConfig, train

LOOKBACK = 30
SHOW = 8


def main():
    train_ds, test_ds = make_skewed_dataset(3000, 600, seed=5)
    frames = compute_features(train_ds)
    tw = make_windows(frames, train_ds.labels, LOOKBACK, "both")
    stats = compute_feature_stats(frames, "both")
    model = initialize_model("cnn_lstm", tw.X.shape[2], 3, LOOKBACK, "both",
                             Rng(2), feature_stats=stats)
    print("training ...")
    model, _ = train(model, tw.X, tw.y, TrainConfig(epochs=4, seed=11))

    predictor = StreamPredictor(model)
    n_warm = 0
    shown = 0
    correct = 0
    total = 0
    for i, ts in enumerate(test_ds.timestamps):
        kind, payload = predictor.feed(int(ts), test_ds.positions[i])
        if kind == "warmup":
            n_warm += 1
            continue
        label, probs = payload
        total += 1
        correct += int(label == int(test_ds.labels[i]))
        if shown < SHOW or i == len(test_ds.timestamps) - 1:
            p = ", ".join(f"{v:.3f}" for v in probs)
            truth = LABEL_TOKENS[int(test_ds.labels[i])]
            print(f"t={int(ts):>4}  predicted {LABEL_TOKENS[label]:<11} "
                  f"[{p}]  truth {truth}")
            shown += 1
        elif shown == SHOW:
            print("...")
            shown += 1

    print(f"\n{n_warm} warmup rows, then {total} live predictions, "
          f"{100.0 * correct / total:.1f}% correct")


if __name__ == "__main__":
    main()
