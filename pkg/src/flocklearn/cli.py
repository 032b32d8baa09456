"""Operator commands: simulate, preprocess, train, evaluate,
predict-stream, export-session, ingest-labels.

Option values resolve as: command-line flag > config file > built-in
default.  The config file is plain `key = value` lines (# comments
allowed); keys must belong to the chosen command, unknown keys are
rejected up front.  Every command validates its paths before doing any
work, and all outputs go through write-temp-then-rename, so a failed run
never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import io
import os
import sys

import numpy as np

from . import checkpoint as ckpt
from . import session as sess
from .errors import ConfigError, FlockError, ValidationError
from .evaluation import evaluate, mean_epoch_accuracy, render_report
from .fileio import atomic_write_text
from .network import initialize_model
from .pipeline import (LABEL_TOKENS, N_CLASSES, align_flock,
                       class_distribution, compute_feature_stats,
                       compute_features, fill_gaps, load_labels,
                       load_trajectories, load_window_cache, make_windows,
                       save_labels, save_trajectories, save_window_cache,
                       TOKEN_LABELS)
from .rng import Rng
from .sim import (SimConfig, TRAIN_SHARES, build_schedule, make_skewed_dataset,
                  simulate)
from .stream import (StreamPredictor, format_prediction, format_warmup,
                     parse_stream_line)
from .training import TrainConfig, train


# ---------------------------------------------------------------------------
# option schema + config file plumbing


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


# per-command option tables: name -> (converter, default, help)
_OPTIONS = {
    "simulate": {
        "out_dir": (str, None, "directory for trajectories.csv + labels.csv"),
        "duration": (int, 20_000, "simulated seconds"),
        "n_animals": (int, 36, "flock size"),
        "arena_width": (float, 300.0, "arena width in meters"),
        "arena_height": (float, 300.0, "arena height in meters"),
        "noise_std": (float, 0.02, "positional jitter std in meters"),
        "schedule": (str, None,
                     "comma list of duration:activity blocks, e.g. "
                     "'700:not_active,160:herd,1140:active'; default is a "
                     "skewed day built from the seed"),
    },
    "preprocess": {
        "trajectories": (str, None, "trajectory CSV path"),
        "labels": (str, None, "label CSV path"),
        "out": (str, None, "output window cache (.npz)"),
        "lookback": (int, 30, "window length m"),
        "feature_set": (str, "both", "velocities | centroid | both"),
        "max_gap": (int, 60, "largest gap (s) bridged by interpolation"),
        "split_tag": (str, "", "free-form tag stored in the cache"),
    },
    "train": {
        "data": (str, None, "training window cache"),
        "out": (str, None, "checkpoint output path"),
        "kind": (str, "cnn_lstm", "lstm | cnn_lstm"),
        "epochs": (int, 50, "training epochs"),
        "learning_rate": (float, 0.001, "Adam step size"),
        "batch_size": (int, 10, "minibatch size"),
        "hidden_dim": (int, 30, "LSTM units"),
        "n_filters": (int, 32, "CNN filters (cnn_lstm only)"),
        "kernel_len": (int, 2, "CNN kernel length (cnn_lstm only)"),
        "dropout": (float, 0.2, "dropout rate on the final LSTM output"),
        "use_peepholes": (_bool, True, "enable peephole connections"),
        "eval_data": (str, None, "optional cache scored every epoch"),
        "log": (str, None, "optional per-epoch CSV log path"),
        "quiet": (_bool, False, "suppress per-epoch progress lines"),
    },
    "evaluate": {
        "checkpoint": (str, None, "model checkpoint path"),
        "data": (str, None, "window cache to score"),
        "out": (str, None, "report path (stdout if omitted)"),
    },
    "predict-stream": {
        "checkpoint": (str, None, "model checkpoint path"),
    },
    "export-session": {
        "trajectories": (str, None, "trajectory CSV path"),
        "labels": (str, None, "optional label CSV to embed"),
        "out": (str, None, "session JSON output path"),
        "frame_cap": (int, sess.DEFAULT_FRAME_CAP,
                      "refuse sessions longer than this many frames"),
        "arena_width": (float, None, "override arena width"),
        "arena_height": (float, None, "override arena height"),
    },
    "ingest-labels": {
        "labels_json": (str, None, "labels JSON exported by the UI"),
        "out": (str, None, "label CSV output path"),
    },
}

_REQUIRED = {
    "simulate": ("out_dir",),
    "preprocess": ("trajectories", "labels", "out"),
    "train": ("data", "out"),
    "evaluate": ("checkpoint", "data"),
    "predict-stream": ("checkpoint",),
    "export-session": ("trajectories", "out"),
    "ingest-labels": ("labels_json", "out"),
}


def read_config_file(path: str) -> dict:
    """key = value lines; values stay strings until typed by the schema."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.strip()
    return out


def resolve_options(command: str, cli_values: dict, config_path
                    ) -> dict:
    """Merge flag > config > default for one command's option table."""
    schema = _OPTIONS[command]
    resolved = {name: default for name, (_, default, _) in schema.items()}
    if config_path is not None:
        raw = read_config_file(config_path)
        unknown = set(raw) - set(schema) - {"seed"}
        if unknown:
            raise ConfigError(
                f"config keys not understood by '{command}': "
                f"{', '.join(sorted(unknown))} (valid: "
                f"{', '.join(sorted(schema))})")
        for key, text in raw.items():
            if key == "seed":
                continue
            conv = schema[key][0]
            try:
                resolved[key] = conv(text)
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    for key, value in cli_values.items():
        if value is not None:
            resolved[key] = value
    missing = [k for k in _REQUIRED[command] if resolved[k] is None]
    if missing:
        raise ConfigError(
            f"'{command}' needs {', '.join('--' + m.replace('_', '-') for m in missing)} "
            f"(flag or config key)")
    return resolved


def _resolve_seed(args, config_path) -> int:
    if args.seed is not None:
        return args.seed
    if config_path is not None:
        raw = read_config_file(config_path)
        if "seed" in raw:
            try:
                return int(raw["seed"], 0)
            except ValueError as exc:
                raise ConfigError(f"config key 'seed': {exc}") from exc
    return 0


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _require_out_dir(path: str, what: str) -> str:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ConfigError(
            f"directory for {what} does not exist: {parent}")
    return path


# ---------------------------------------------------------------------------
# commands


def _print_distribution(labels, out=None) -> None:
    out = out if out is not None else sys.stdout
    dist = class_distribution(labels)
    total = sum(c for c, _ in dist)
    print(f"class distribution over {total} timesteps:", file=out)
    for cls in range(N_CLASSES):
        count, pct = dist[cls]
        print(f"  {LABEL_TOKENS[cls]:<11} {count:>8}  {pct:6.2f}%", file=out)


def cmd_simulate(opts: dict, seed: int) -> int:
    out_dir = opts["out_dir"]
    if not os.path.isdir(out_dir):
        raise ConfigError(f"output directory does not exist: {out_dir}")
    arena = (opts["arena_width"], opts["arena_height"])
    if opts["schedule"] is not None:
        schedule = []
        for block in opts["schedule"].split(","):
            dur_txt, _, token = block.strip().partition(":")
            try:
                dur = int(dur_txt)
            except ValueError as exc:
                raise ConfigError(
                    f"bad schedule block {block!r}: {exc}") from exc
            if token not in TOKEN_LABELS:
                raise ConfigError(
                    f"bad schedule block {block!r}: unknown activity "
                    f"{token!r}")
            schedule.append((dur, TOKEN_LABELS[token]))
        duration = sum(d for d, _ in schedule)
        if opts["duration"] != duration and opts["duration"] != 20_000:
            raise ConfigError(
                f"schedule blocks sum to {duration} s but duration is "
                f"{opts['duration']} s")
    else:
        duration = opts["duration"]
        schedule = build_schedule(duration, TRAIN_SHARES, Rng(seed).spawn(0))
    cfg = SimConfig(duration=duration, seed=Rng(seed).spawn(1).seed,
                    regime_schedule=schedule, n_animals=opts["n_animals"],
                    arena=arena, noise_std=opts["noise_std"])
    trajs, intervals = simulate(cfg)
    traj_path = os.path.join(out_dir, "trajectories.csv")
    label_path = os.path.join(out_dir, "labels.csv")
    save_trajectories(trajs, traj_path)
    save_labels(intervals, label_path)
    ds = align_flock(trajs, intervals)
    _print_distribution(ds.labels)
    print(f"wrote {traj_path} and {label_path}")
    return 0


def cmd_preprocess(opts: dict) -> int:
    _require_file(opts["trajectories"], "trajectory CSV")
    _require_file(opts["labels"], "label CSV")
    _require_out_dir(opts["out"], "window cache")
    if opts["feature_set"] not in ("velocities", "centroid", "both"):
        raise ConfigError(
            f"feature_set must be velocities, centroid or both, got "
            f"{opts['feature_set']!r}")
    trajs = [fill_gaps(tr, opts["max_gap"])
             for tr in load_trajectories(opts["trajectories"])]
    intervals = load_labels(opts["labels"])
    ds = align_flock(trajs, intervals, split_tag=opts["split_tag"])
    frames = compute_features(ds)
    ws = make_windows(frames, ds.labels, opts["lookback"],
                      opts["feature_set"], timestamps=ds.timestamps)
    stats = compute_feature_stats(frames, opts["feature_set"])
    save_window_cache(ws, opts["out"], split_tag=opts["split_tag"],
                      extra_meta={
                          "feature_mean": [float(v) for v in stats.mean],
                          "feature_std": [float(v) for v in stats.std]})
    _print_distribution(ds.labels)
    print(f"wrote {len(ws)} windows of shape "
          f"{ws.X.shape[1]}x{ws.X.shape[2]} to {opts['out']}")
    return 0


def _load_cache_with_stats(path: str):
    from .network import FeatureStats

    ws, meta = load_window_cache(path)
    if "feature_mean" not in meta or "feature_std" not in meta:
        raise ConfigError(
            f"{path} lacks feature statistics; rebuild it with the "
            f"preprocess command")
    stats = FeatureStats(mean=np.array(meta["feature_mean"], dtype=float),
                         std=np.array(meta["feature_std"], dtype=float))
    return ws, meta, stats


def cmd_train(opts: dict, seed: int) -> int:
    _require_file(opts["data"], "window cache")
    _require_out_dir(opts["out"], "checkpoint")
    if opts["log"] is not None:
        _require_out_dir(opts["log"], "epoch log")
    ws, _, stats = _load_cache_with_stats(opts["data"])
    eval_ws = None
    if opts["eval_data"] is not None:
        _require_file(opts["eval_data"], "evaluation cache")
        eval_ws, _, _ = _load_cache_with_stats(opts["eval_data"])
        if eval_ws.X.shape[2] != ws.X.shape[2]:
            raise ValidationError(
                f"evaluation cache feature dim {eval_ws.X.shape[2]} does "
                f"not match training dim {ws.X.shape[2]}")

    cfg = TrainConfig(learning_rate=opts["learning_rate"],
                      lookback=ws.m, hidden_dim=opts["hidden_dim"],
                      batch_size=opts["batch_size"], epochs=opts["epochs"],
                      dropout_rate=opts["dropout"], seed=seed)
    cfg.validate()
    model = initialize_model(
        opts["kind"], ws.X.shape[2], N_CLASSES, ws.m, ws.feature_set,
        Rng(seed).spawn(17), hidden_dim=opts["hidden_dim"],
        n_filters=opts["n_filters"], kernel_len=opts["kernel_len"],
        use_peepholes=opts["use_peepholes"], feature_stats=stats)

    def progress(entry):
        if not opts["quiet"]:
            msg = (f"epoch {entry.epoch:>3}  loss {entry.loss:.4f}  "
                   f"train acc {entry.accuracy:.4f}")
            if entry.eval_accuracy is not None:
                msg += f"  eval acc {entry.eval_accuracy:.4f}"
            print(msg, flush=True)

    model, history = train(
        model, ws.X, ws.y, cfg,
        eval_windows=None if eval_ws is None else eval_ws.X,
        eval_labels=None if eval_ws is None else eval_ws.y,
        log_fn=progress)

    ckpt.save_checkpoint(model, opts["out"])
    if opts["log"] is not None:
        buf = io.StringIO()
        buf.write("epoch,loss,accuracy,eval_accuracy\n")
        for entry in history:
            tail = ("" if entry.eval_accuracy is None
                    else repr(entry.eval_accuracy))
            buf.write(f"{entry.epoch},{entry.loss!r},{entry.accuracy!r},"
                      f"{tail}\n")
        atomic_write_text(opts["log"], buf.getvalue())
    if eval_ws is not None and history and history[0].eval_accuracy is not None:
        mean, std = mean_epoch_accuracy(
            [h.eval_accuracy for h in history])
        print(f"eval accuracy over {len(history)} epochs: "
              f"{100 * mean:.2f} +- {100 * std:.2f}")
    print(f"wrote checkpoint {opts['out']}")
    return 0


def cmd_evaluate(opts: dict) -> int:
    _require_file(opts["checkpoint"], "checkpoint")
    _require_file(opts["data"], "window cache")
    if opts["out"] is not None:
        _require_out_dir(opts["out"], "report")
    model = ckpt.load_checkpoint(opts["checkpoint"])
    ws, meta = load_window_cache(opts["data"])
    if ws.X.shape[2] != model.input_dim:
        raise ValidationError(
            f"checkpoint expects {model.input_dim} features "
            f"({model.feature_set}) but cache {opts['data']} provides "
            f"{ws.X.shape[2]} (n_animals={meta.get('n_animals')}, "
            f"feature_set={meta.get('feature_set')})")
    if ws.m != model.lookback:
        raise ValidationError(
            f"checkpoint lookback {model.lookback} != cache window length "
            f"{ws.m}")
    report = render_report(evaluate(model, ws))
    if opts["out"] is None:
        sys.stdout.write(report)
    else:
        atomic_write_text(opts["out"], report)
        print(f"wrote report {opts['out']}")
    return 0


def cmd_predict_stream(opts: dict, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    _require_file(opts["checkpoint"], "checkpoint")
    model = ckpt.load_checkpoint(opts["checkpoint"])
    predictor = StreamPredictor(model)
    for lineno, line in enumerate(stdin, start=1):
        if not line.strip():
            continue
        try:
            ts, pos = parse_stream_line(line, predictor.n_animals)
            kind, payload = predictor.feed(ts, pos)
        except FlockError as exc:
            print(f"warning: line {lineno}: {exc}", file=stderr, flush=True)
            continue
        if kind == "warmup":
            print(format_warmup(ts), file=stdout, flush=True)
        else:
            label, probs = payload
            print(format_prediction(ts, label, probs), file=stdout,
                  flush=True)
    return 0


def cmd_export_session(opts: dict) -> int:
    _require_file(opts["trajectories"], "trajectory CSV")
    _require_out_dir(opts["out"], "session file")
    trajs = load_trajectories(opts["trajectories"])
    intervals = []
    if opts["labels"] is not None:
        _require_file(opts["labels"], "label CSV")
        intervals = load_labels(opts["labels"])
    arena = None
    if opts["arena_width"] is not None and opts["arena_height"] is not None:
        arena = (opts["arena_width"], opts["arena_height"])
    doc = sess.build_session(trajs, intervals, arena=arena,
                             frame_cap=opts["frame_cap"])
    sess.save_session(opts["out"], doc)
    print(f"wrote session with {len(doc['timestamps'])} frames, "
          f"{len(doc['animal_ids'])} animals, {len(doc['labels'])} labels "
          f"to {opts['out']}")
    return 0


def cmd_ingest_labels(opts: dict) -> int:
    _require_file(opts["labels_json"], "labels JSON")
    _require_out_dir(opts["out"], "label CSV")
    intervals = sess.load_labels_json(opts["labels_json"])
    save_labels(intervals, opts["out"])
    print(f"wrote {len(intervals)} label intervals to {opts['out']}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flocklearn",
        description="learn and predict collective flock activity from "
                    "per-animal trajectories")
    parser.add_argument("--config", metavar="PATH",
                        help="key = value config file for the chosen command")
    parser.add_argument("--seed", type=lambda s: int(s, 0), metavar="U64",
                        help="seed for anything stochastic (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _OPTIONS.items():
        p = sub.add_parser(command)
        for name, (conv, _, help_text) in schema.items():
            flag = "--" + name.replace("_", "-")
            if conv is _bool:
                p.add_argument(flag, type=_bool, metavar="BOOL",
                               help=help_text)
            else:
                p.add_argument(flag, type=conv, help=help_text)
    return parser


_HANDLERS = {
    "simulate": lambda opts, seed: cmd_simulate(opts, seed),
    "preprocess": lambda opts, seed: cmd_preprocess(opts),
    "train": lambda opts, seed: cmd_train(opts, seed),
    "evaluate": lambda opts, seed: cmd_evaluate(opts),
    "predict-stream": lambda opts, seed: cmd_predict_stream(opts),
    "export-session": lambda opts, seed: cmd_export_session(opts),
    "ingest-labels": lambda opts, seed: cmd_ingest_labels(opts),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cli_values = {name: getattr(args, name)
                      for name in _OPTIONS[args.command]}
        opts = resolve_options(args.command, cli_values, args.config)
        seed = _resolve_seed(args, args.config)
        return _HANDLERS[args.command](opts, seed)
    except FlockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
