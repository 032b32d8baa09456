"""Session/label JSON exchange schemas."""

import json

import numpy as np
import pytest

from flocklearn.errors import ContractError, ParseError, ValidationError
from flocklearn.pipeline import ActivityLabel, LabelInterval, Trajectory
from flocklearn.rng import Rng
from flocklearn.session import (build_session, common_timeline, labels_json,
                                load_labels_json, load_session,
                                parse_labels_document, parse_session_document,
                                save_labels_json, save_session, session_json)


def traj(aid, t0, t1, seed=0):
    times = np.arange(t0, t1, dtype=np.int64)
    rng = Rng(seed)
    xy = rng.uniform_array(times.size * 2, 0, 100).reshape(-1, 2)
    return Trajectory(animal_id=aid, times=times, xy=xy,
                      imputed=np.zeros(times.size, dtype=bool))


def intervals():
    return [LabelInterval(0, 10, ActivityLabel.NOT_ACTIVE),
            LabelInterval(10, 18, ActivityLabel.HERD_MOVEMENT)]


class TestCommonTimeline:
    def test_intersection(self):
        ids, times, pos = common_timeline([traj("b", 0, 20), traj("a", 5, 25)])
        assert ids == ["a", "b"]
        assert times.tolist() == list(range(5, 20))
        assert pos.shape == (15, 2, 2)

    def test_positions_follow_sorted_ids(self):
        a, b = traj("a", 0, 4, seed=1), traj("b", 0, 4, seed=2)
        ids, _, pos = common_timeline([b, a])
        assert np.array_equal(pos[:, 0], a.xy)
        assert np.array_equal(pos[:, 1], b.xy)

    def test_no_overlap_rejected(self):
        with pytest.raises(ValidationError):
            common_timeline([traj("a", 0, 5), traj("b", 10, 15)])

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            common_timeline([])


class TestBuildSession:
    def test_document_shape(self):
        doc = build_session([traj("a", 0, 18), traj("b", 0, 18)], intervals())
        assert doc["format"] == "flock-session" and doc["version"] == 1
        assert len(doc["timestamps"]) == 18
        assert len(doc["frames"]) == 18
        assert len(doc["frames"][0]) == 2
        assert doc["labels"][0]["activity"] == "not_active"

    def test_frame_count_equals_aligned_count(self):
        doc = build_session([traj("a", 0, 30), traj("b", 12, 40)])
        assert len(doc["frames"]) == len(doc["timestamps"]) == 18

    def test_arena_padding_covers_data(self):
        trajs = [traj("a", 0, 10)]
        doc = build_session(trajs)
        assert doc["arena"]["width"] >= trajs[0].xy[:, 0].max()
        assert doc["arena"]["height"] >= trajs[0].xy[:, 1].max()

    def test_explicit_arena_kept(self):
        doc = build_session([traj("a", 0, 5)], arena=(321.0, 123.0))
        assert doc["arena"] == {"width": 321.0, "height": 123.0}

    def test_frame_cap_enforced(self):
        with pytest.raises(ValidationError) as err:
            build_session([traj("a", 0, 100)], frame_cap=50)
        assert "split" in str(err.value)

    def test_overlapping_labels_rejected(self):
        bad = [LabelInterval(0, 10, 1), LabelInterval(5, 12, 0)]
        with pytest.raises(ValidationError):
            build_session([traj("a", 0, 12)], bad)

    def test_labels_sorted_by_start(self):
        ivs = [LabelInterval(10, 18, 2), LabelInterval(0, 10, 1)]
        doc = build_session([traj("a", 0, 18)], ivs)
        starts = [r["t_start"] for r in doc["labels"]]
        assert starts == sorted(starts)

    def test_json_bytes_stable(self):
        doc = build_session([traj("a", 0, 8)], intervals()[:1])
        assert session_json(doc) == session_json(json.loads(session_json(doc)))


class TestSessionRoundTrip:
    def test_file_round_trip(self, tmp_path):
        trajs = [traj("a", 0, 18, seed=5), traj("b", 0, 18, seed=6)]
        path = tmp_path / "s.json"
        save_session(path, build_session(trajs, intervals()))
        back_trajs, back_ivs = load_session(path)
        assert [t.animal_id for t in back_trajs] == ["a", "b"]
        for orig, back in zip(trajs, back_trajs):
            assert np.array_equal(orig.xy, back.xy)
            assert np.array_equal(orig.times, back.times)
        assert [(iv.t_start, iv.t_end, iv.label) for iv in back_ivs] == \
            [(0, 10, ActivityLabel.NOT_ACTIVE),
             (10, 18, ActivityLabel.HERD_MOVEMENT)]

    def test_truncated_json(self, tmp_path):
        path = tmp_path / "s.json"
        text = session_json(build_session([traj("a", 0, 5)]))
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ParseError):
            load_session(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_session(tmp_path / "nope.json")

    def test_wrong_format_tag(self):
        doc = build_session([traj("a", 0, 5)])
        doc["format"] = "something-else"
        with pytest.raises(ParseError):
            parse_session_document(doc)

    def test_wrong_version(self):
        doc = build_session([traj("a", 0, 5)])
        doc["version"] = 99
        with pytest.raises(ParseError) as err:
            parse_session_document(doc)
        assert "version" in str(err.value)

    def test_inconsistent_frames_shape(self):
        doc = build_session([traj("a", 0, 5)])
        doc["frames"] = doc["frames"][:-1]
        with pytest.raises(ParseError):
            parse_session_document(doc)


class TestLabelsJson:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "l.json"
        save_labels_json(path, intervals())
        back = load_labels_json(path)
        assert [(iv.t_start, iv.t_end, iv.label) for iv in back] == \
            [(0, 10, ActivityLabel.NOT_ACTIVE),
             (10, 18, ActivityLabel.HERD_MOVEMENT)]

    def test_empty_set_valid(self):
        doc = json.loads(labels_json([]))
        assert doc["labels"] == []
        assert parse_labels_document(doc) == []

    def test_sorted_output(self):
        ivs = [LabelInterval(50, 60, 1), LabelInterval(0, 10, 2)]
        doc = json.loads(labels_json(ivs))
        assert [r["t_start"] for r in doc["labels"]] == [0, 50]

    def test_unknown_activity(self):
        doc = {"format": "flock-labels", "version": 1,
               "labels": [{"t_start": 0, "t_end": 5, "activity": "resting"}]}
        with pytest.raises(ParseError) as err:
            parse_labels_document(doc)
        assert "resting" in str(err.value)

    def test_empty_interval_rejected(self):
        doc = {"format": "flock-labels", "version": 1,
               "labels": [{"t_start": 5, "t_end": 5, "activity": "herd"}]}
        with pytest.raises(ValidationError):
            parse_labels_document(doc)

    def test_overlap_rejected_with_offenders(self):
        doc = {"format": "flock-labels", "version": 1,
               "labels": [{"t_start": 0, "t_end": 10, "activity": "herd"},
                          {"t_start": 5, "t_end": 15, "activity": "active"}]}
        with pytest.raises(ValidationError) as err:
            parse_labels_document(doc)
        assert "[0, 10)" in str(err.value) and "[5, 15)" in str(err.value)

    def test_touching_ok(self):
        doc = {"format": "flock-labels", "version": 1,
               "labels": [{"t_start": 0, "t_end": 10, "activity": "herd"},
                          {"t_start": 10, "t_end": 15, "activity": "active"}]}
        assert len(parse_labels_document(doc)) == 2

    def test_missing_field(self):
        doc = {"format": "flock-labels", "version": 1,
               "labels": [{"t_start": 0, "activity": "herd"}]}
        with pytest.raises(ParseError):
            parse_labels_document(doc)

    def test_wrong_format_tag(self):
        with pytest.raises(ParseError):
            parse_labels_document({"format": "flock-session", "version": 1,
                                   "labels": []})
