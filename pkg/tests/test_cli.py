"""Command line surface: option resolution, each subcommand, error paths.

Everything runs in-process through main(argv) so exit codes and stderr
text are asserted directly.  A small simulated day is built once per
module and shared; individual tests derive caches and checkpoints from
it instead of re-simulating.
"""

import io
import json
import os

import numpy as np
import pytest

from flocklearn.checkpoint import load_checkpoint
from flocklearn.cli import (cmd_predict_stream, main, read_config_file,
                            resolve_options)
from flocklearn.errors import ConfigError
from flocklearn.evaluation import parse_report
from flocklearn.pipeline import load_labels, load_trajectories
from flocklearn.session import common_timeline, load_session

SCHEDULE = "70:not_active,50:active"


@pytest.fixture(scope="module")
def day(tmp_path_factory):
    """Simulated day plus a preprocessed cache and a trained checkpoint."""
    root = tmp_path_factory.mktemp("day")
    assert main(["--seed", "7", "simulate", "--out-dir", str(root),
                 "--n-animals", "5", "--schedule", SCHEDULE]) == 0
    traj = root / "trajectories.csv"
    labels = root / "labels.csv"
    cache = root / "both.npz"
    assert main(["preprocess", "--trajectories", str(traj), "--labels",
                 str(labels), "--out", str(cache), "--lookback", "8"]) == 0
    model = root / "model.json"
    assert main(["--seed", "3", "train", "--data", str(cache), "--out",
                 str(model), "--kind", "lstm", "--epochs", "2",
                 "--hidden-dim", "4", "--quiet", "true"]) == 0
    return {"root": root, "traj": traj, "labels": labels, "cache": cache,
            "model": model}


class TestConfigFile:
    def test_parse_comments_and_blanks(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# day one\nduration = 300\n\nn-animals = 9  # small\n")
        assert read_config_file(str(p)) == {"duration": "300",
                                            "n_animals": "9"}

    def test_duplicate_key(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("duration = 1\nduration = 2\n")
        with pytest.raises(ConfigError) as err:
            read_config_file(str(p))
        assert ":2:" in str(err.value)

    def test_missing_equals(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("duration 300\n")
        with pytest.raises(ConfigError):
            read_config_file(str(p))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(str(tmp_path / "none.cfg"))

    def test_precedence_flag_over_config_over_default(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("duration = 300\nnoise_std = 0.5\n")
        opts = resolve_options(
            "simulate",
            {"out_dir": "x", "duration": 200, "n_animals": None,
             "arena_width": None, "arena_height": None, "noise_std": None,
             "schedule": None},
            str(p))
        assert opts["duration"] == 200        # flag wins
        assert opts["noise_std"] == 0.5       # config beats default
        assert opts["n_animals"] == 36        # default survives

    def test_unknown_key_names_valid_ones(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("window = 30\n")
        with pytest.raises(ConfigError) as err:
            resolve_options("simulate", {"out_dir": "x", "duration": None,
                                         "n_animals": None,
                                         "arena_width": None,
                                         "arena_height": None,
                                         "noise_std": None,
                                         "schedule": None}, str(p))
        msg = str(err.value)
        assert "window" in msg and "duration" in msg

    def test_bad_value_type(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("duration = soon\n")
        with pytest.raises(ConfigError):
            resolve_options("simulate", {"out_dir": "x", "duration": None,
                                         "n_animals": None,
                                         "arena_width": None,
                                         "arena_height": None,
                                         "noise_std": None,
                                         "schedule": None}, str(p))

    def test_seed_key_allowed_everywhere(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("seed = 0x2A\nduration = 40\nn_animals = 3\n"
                     "schedule = 40:active\n")
        assert main(["--config", str(p), "simulate",
                     "--out-dir", str(tmp_path)]) == 0
        ref = tmp_path / "ref"
        ref.mkdir()
        assert main(["--seed", "42", "simulate", "--out-dir", str(ref),
                     "--duration", "40", "--n-animals", "3",
                     "--schedule", "40:active"]) == 0
        assert (tmp_path / "trajectories.csv").read_bytes() == \
            (ref / "trajectories.csv").read_bytes()

    def test_missing_required_names_flags(self, capsys):
        assert main(["preprocess"]) == 2
        err = capsys.readouterr().err
        assert "--trajectories" in err and "--labels" in err and "--out" in err


class TestSimulate:
    def test_outputs_and_distribution(self, day, tmp_path, capsys):
        assert main(["simulate", "--out-dir", str(tmp_path),
                     "--n-animals", "3", "--schedule", "30:herd"]) == 0
        out = capsys.readouterr().out
        assert "herd" in out and "100.00%" in out
        trajs = load_trajectories(tmp_path / "trajectories.csv")
        assert len(trajs) == 3 and trajs[0].times.size == 30
        ivs = load_labels(tmp_path / "labels.csv")
        assert len(ivs) == 1 and (ivs[0].t_start, ivs[0].t_end) == (0, 30)

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        for d in (a, b):
            assert main(["--seed", "11", "simulate", "--out-dir", str(d),
                         "--duration", "200", "--n-animals", "4"]) == 0
        assert (a / "trajectories.csv").read_bytes() == \
            (b / "trajectories.csv").read_bytes()
        assert (a / "labels.csv").read_bytes() == (b / "labels.csv").read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        main(["--seed", "1", "simulate", "--out-dir", str(a),
              "--duration", "200", "--n-animals", "4"])
        main(["--seed", "2", "simulate", "--out-dir", str(b),
              "--duration", "200", "--n-animals", "4"])
        assert (a / "trajectories.csv").read_bytes() != \
            (b / "trajectories.csv").read_bytes()

    def test_bad_schedule_token(self, tmp_path, capsys):
        assert main(["simulate", "--out-dir", str(tmp_path),
                     "--schedule", "30:grazing"]) == 2
        assert "grazing" in capsys.readouterr().err

    def test_bad_schedule_duration(self, tmp_path, capsys):
        assert main(["simulate", "--out-dir", str(tmp_path),
                     "--schedule", "soon:active"]) == 2
        assert "soon:active" in capsys.readouterr().err

    def test_duration_schedule_conflict(self, tmp_path, capsys):
        assert main(["simulate", "--out-dir", str(tmp_path),
                     "--duration", "99", "--schedule", "30:active"]) == 2
        err = capsys.readouterr().err
        assert "30" in err and "99" in err

    def test_missing_out_dir(self, tmp_path, capsys):
        assert main(["simulate", "--out-dir",
                     str(tmp_path / "absent")]) == 2
        assert "does not exist" in capsys.readouterr().err


class TestPreprocess:
    def test_cache_carries_feature_stats(self, day):
        from flocklearn.pipeline import load_window_cache
        ws, meta = load_window_cache(day["cache"])
        assert ws.m == 8 and ws.feature_set == "both"
        assert len(meta["feature_mean"]) == ws.X.shape[2]
        assert len(meta["feature_std"]) == ws.X.shape[2]

    def test_window_count(self, day):
        from flocklearn.pipeline import load_window_cache
        ws, _ = load_window_cache(day["cache"])
        assert len(ws) == 120 - 8 + 1

    def test_bad_feature_set(self, day, tmp_path, capsys):
        assert main(["preprocess", "--trajectories", str(day["traj"]),
                     "--labels", str(day["labels"]),
                     "--out", str(tmp_path / "c.npz"),
                     "--feature-set", "speeds"]) == 2
        assert "speeds" in capsys.readouterr().err

    def test_missing_input(self, tmp_path, capsys):
        assert main(["preprocess", "--trajectories",
                     str(tmp_path / "no.csv"), "--labels",
                     str(tmp_path / "no2.csv"),
                     "--out", str(tmp_path / "c.npz")]) == 2
        assert "not found" in capsys.readouterr().err


class TestTrain:
    def test_checkpoint_loads_and_log_written(self, day, tmp_path):
        model = tmp_path / "m.json"
        log = tmp_path / "log.csv"
        assert main(["--seed", "5", "train", "--data", str(day["cache"]),
                     "--out", str(model), "--kind", "lstm", "--epochs", "2",
                     "--hidden-dim", "4", "--quiet", "true",
                     "--log", str(log)]) == 0
        m = load_checkpoint(model)
        assert m.kind == "lstm" and m.lookback == 8
        lines = log.read_text().splitlines()
        assert lines[0] == "epoch,loss,accuracy,eval_accuracy"
        assert len(lines) == 3

    def test_eval_data_reports_mean(self, day, tmp_path, capsys):
        model = tmp_path / "m.json"
        assert main(["--seed", "5", "train", "--data", str(day["cache"]),
                     "--out", str(model), "--kind", "lstm", "--epochs", "2",
                     "--hidden-dim", "4", "--quiet", "true",
                     "--eval-data", str(day["cache"])]) == 0
        assert "eval accuracy over 2 epochs" in capsys.readouterr().out

    def test_cache_without_stats_rejected(self, day, tmp_path, capsys):
        from flocklearn.pipeline import load_window_cache, save_window_cache
        ws, _ = load_window_cache(day["cache"])
        bare = tmp_path / "bare.npz"
        save_window_cache(ws, bare)
        assert main(["train", "--data", str(bare),
                     "--out", str(tmp_path / "m.json"), "--epochs", "1",
                     "--quiet", "true"]) == 2
        assert "preprocess" in capsys.readouterr().err

    def test_out_dir_checked_before_training(self, day, tmp_path, capsys):
        assert main(["train", "--data", str(day["cache"]),
                     "--out", str(tmp_path / "absent" / "m.json"),
                     "--epochs", "1"]) == 2
        assert "does not exist" in capsys.readouterr().err


class TestEvaluate:
    def test_report_to_stdout_parses(self, day, capsys):
        assert main(["evaluate", "--checkpoint", str(day["model"]),
                     "--data", str(day["cache"])]) == 0
        report = parse_report(capsys.readouterr().out)
        assert report.n_samples == 113

    def test_report_to_file(self, day, tmp_path):
        out = tmp_path / "report.txt"
        assert main(["evaluate", "--checkpoint", str(day["model"]),
                     "--data", str(day["cache"]), "--out", str(out)]) == 0
        parse_report(out.read_text())

    def test_feature_dim_mismatch_names_both_dims(self, day, tmp_path,
                                                  capsys):
        vel = tmp_path / "vel.npz"
        assert main(["preprocess", "--trajectories", str(day["traj"]),
                     "--labels", str(day["labels"]), "--out", str(vel),
                     "--lookback", "8",
                     "--feature-set", "velocities"]) == 0
        capsys.readouterr()
        assert main(["evaluate", "--checkpoint", str(day["model"]),
                     "--data", str(vel)]) == 2
        err = capsys.readouterr().err
        assert "10" in err and "5" in err and "velocities" in err

    def test_lookback_mismatch(self, day, tmp_path, capsys):
        other = tmp_path / "m9.npz"
        assert main(["preprocess", "--trajectories", str(day["traj"]),
                     "--labels", str(day["labels"]), "--out", str(other),
                     "--lookback", "9"]) == 0
        capsys.readouterr()
        assert main(["evaluate", "--checkpoint", str(day["model"]),
                     "--data", str(other)]) == 2
        err = capsys.readouterr().err
        assert "8" in err and "9" in err


class TestPredictStream:
    def feed_lines(self, day, lines):
        out, err = io.StringIO(), io.StringIO()
        rc = cmd_predict_stream({"checkpoint": str(day["model"])},
                                stdin=io.StringIO("".join(lines)),
                                stdout=out, stderr=err)
        return rc, out.getvalue().splitlines(), err.getvalue().splitlines()

    def stream_lines(self, day, n):
        trajs = load_trajectories(day["traj"])
        _, times, pos = common_timeline(trajs)
        return [",".join([str(int(times[i]))]
                         + [repr(float(v)) for v in pos[i].ravel()]) + "\n"
                for i in range(n)]

    def test_warmups_then_predictions(self, day):
        rc, out, err = self.feed_lines(day, self.stream_lines(day, 12))
        assert rc == 0 and err == []
        assert [l.endswith(",warmup") for l in out[:7]] == [True] * 7
        for line in out[7:]:
            fields = line.split(",")
            assert len(fields) == 5
            assert fields[1] in ("not_active", "active", "herd")
            assert abs(sum(float(p) for p in fields[2:]) - 1.0) < 1e-9

    def test_malformed_line_warns_and_continues(self, day):
        lines = self.stream_lines(day, 10)
        lines[4] = "4,broken\n"
        rc, out, err = self.feed_lines(day, lines)
        assert rc == 0
        assert len(err) == 1 and "line 5" in err[0]
        assert len(out) == 9

    def test_blank_lines_skipped(self, day):
        lines = self.stream_lines(day, 3)
        lines.insert(1, "\n")
        rc, out, err = self.feed_lines(day, lines)
        assert rc == 0 and err == [] and len(out) == 3


class TestSessionCommands:
    def test_export_then_ingest_round_trips(self, day, tmp_path, capsys):
        session = tmp_path / "session.json"
        assert main(["export-session", "--trajectories", str(day["traj"]),
                     "--labels", str(day["labels"]),
                     "--out", str(session)]) == 0
        assert "120 frames" in capsys.readouterr().out
        trajs, intervals = load_session(session)
        assert len(trajs) == 5 and len(intervals) == 2

        labels_json = tmp_path / "labels.json"
        doc = json.loads(session.read_text())
        labels_json.write_text(json.dumps(
            {"format": "flock-labels", "version": 1, "labels": doc["labels"]}))
        out_csv = tmp_path / "labels_back.csv"
        assert main(["ingest-labels", "--labels-json", str(labels_json),
                     "--out", str(out_csv)]) == 0
        assert out_csv.read_bytes() == day["labels"].read_bytes()

    def test_frame_cap_leaves_no_partial_file(self, day, tmp_path, capsys):
        out = tmp_path / "session.json"
        assert main(["export-session", "--trajectories", str(day["traj"]),
                     "--out", str(out), "--frame-cap", "50"]) == 2
        assert "split" in capsys.readouterr().err
        assert not out.exists()

    def test_ingest_rejects_overlap(self, day, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(
            {"format": "flock-labels", "version": 1,
             "labels": [
                 {"t_start": 0, "t_end": 10, "activity": "active"},
                 {"t_start": 5, "t_end": 15, "activity": "herd"}]}))
        assert main(["ingest-labels", "--labels-json", str(bad),
                     "--out", str(tmp_path / "o.csv")]) == 2
        assert "overlap" in capsys.readouterr().err

    def test_arena_override(self, day, tmp_path):
        out = tmp_path / "s.json"
        assert main(["export-session", "--trajectories", str(day["traj"]),
                     "--out", str(out), "--arena-width", "500",
                     "--arena-height", "400"]) == 0
        doc = json.loads(out.read_text())
        assert doc["arena"] == {"width": 500.0, "height": 400.0}
