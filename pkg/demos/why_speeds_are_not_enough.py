"""The headline effect, scaled down to run in a couple of minutes.

Herding is about 1% of the data and its pace band sits inside the
ordinary activity band, so a model that only sees per-animal speeds has
nothing to hang the class on. Give the same model each animal's distance
to the flock centroid and the tight marching column becomes visible.

This trains one CNN+LSTM per feature set on a small skewed dataset and
prints the herd-movement recall side by side.

    python3 demos/why_speeds_are_not_enough.py
"""

from flocklearn.evaluation import evaluate
from flocklearn.network import initialize_model
from flocklearn.pipeline import ActivityLabel, compute_features, \
    compute_feature_stats, make_windows
from flocklearn.rng import Rng
from flocklearn.sim import make_skewed_dataset
from flocklearn.training import TrainConfig, train

HERD = int(ActivityLabel.HERD_MOVEMENT)
LOOKBACK = 30


def main():
    train_ds, test_ds = make_skewed_dataset(6000, 6000, seed=77)
    herd_pct = 100.0 * float((test_ds.labels == HERD).mean())
    print(f"herd movement is {herd_pct:.2f}% of the test split\n")

    train_frames = compute_features(train_ds)
    test_frames = compute_features(test_ds)

    rows = []
    for feature_set in ("velocities", "both"):
        tw = make_windows(train_frames, train_ds.labels, LOOKBACK,
                          feature_set)
        sw = make_windows(test_frames, test_ds.labels, LOOKBACK,
                          feature_set)
        stats = compute_feature_stats(train_frames, feature_set)
        model = initialize_model("cnn_lstm", tw.X.shape[2], 3, LOOKBACK,
                                 feature_set, Rng(7), feature_stats=stats)
        print(f"training on {feature_set} ...")
        model, _ = train(model, tw.X, tw.y, TrainConfig(epochs=8, seed=123))
        rep = evaluate(model, sw)
        rows.append((feature_set, rep.accuracy,
                     float(rep.per_class_recall[HERD])))

    print(f"\n{'features':<12} {'accuracy':>8} {'herd recall':>12}")
    for feature_set, acc, recall in rows:
        print(f"{feature_set:<12} {acc:>8.3f} {recall:>12.3f}")


if __name__ == "__main__":
    main()
