import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import pytest

from twinfuse.configs import zero_noise_config
from twinfuse.errors import RunDirectoryError
from twinfuse.fusion import BoundingBox, BoxSource, DepthImage
from twinfuse.runio import (DEPTH_MAGIC, RunReader, box_from_dict,
                            box_to_dict, frame_from_dict, frame_to_dict,
                            read_depth, write_depth, write_run)
from twinfuse.scenesim import ScenarioConfig, simulate


def digest_tree(root):
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(path.relative_to(root).as_posix().encode())
            h.update(path.read_bytes())
    return h.hexdigest()


GOLDEN_DPT = Path(__file__).resolve().parent / "data" / "golden.dpt"
GOLDEN_DPT_SHA256 = \
    "dab47b8711482aa94c654f684bceb83c646e2e11a0e5fdb499b155cfeebfd454"
GOLDEN_DPT_VALUES = np.array([
    [1.5, 2.25, 3.125, np.inf],
    [10.0, 20.5, 30.75, 40.875],
    [np.inf, 0.625, 7.5, 99.0],
])


class TestDepthFile:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        ranges = rng.uniform(0.5, 200.0, size=(48, 64)).astype(np.float32)
        ranges[10, 20] = np.inf
        ranges[0, 0] = np.inf
        img = DepthImage(ranges.astype(float))
        path = tmp_path / "f.dpt"
        write_depth(img, path)
        back = read_depth(path)
        np.testing.assert_array_equal(back.ranges, img.ranges)
        assert back.ranges.dtype == np.float64

    def test_file_layout(self, tmp_path):
        img = DepthImage(np.array([[1.5, 2.5], [3.5, np.inf]]))
        path = tmp_path / "f.dpt"
        write_depth(img, path)
        raw = path.read_bytes()
        assert raw[:4] == DEPTH_MAGIC == b"DPT1"
        width, height = struct.unpack("<II", raw[4:12])
        assert (width, height) == (2, 2)
        values = struct.unpack("<4f", raw[12:])
        assert values[:3] == (1.5, 2.5, 3.5)
        assert np.isposinf(values[3])

    def test_write_is_deterministic(self, tmp_path, rng):
        img = DepthImage(rng.uniform(1, 9, size=(8, 8)))
        a, b = tmp_path / "a.dpt", tmp_path / "b.dpt"
        write_depth(img, a)
        write_depth(img, b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "f.dpt"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(RunDirectoryError):
            read_depth(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "f.dpt"
        path.write_bytes(b"DPT1\x02\x00")
        with pytest.raises(RunDirectoryError):
            read_depth(path)

    def test_payload_length_mismatch(self, tmp_path):
        path = tmp_path / "f.dpt"
        payload = struct.pack("<4sII", b"DPT1", 3, 3) + b"\x00" * 8
        path.write_bytes(payload)
        with pytest.raises(RunDirectoryError):
            read_depth(path)

    def test_non_positive_values_rejected(self, tmp_path):
        path = tmp_path / "f.dpt"
        payload = struct.pack("<4sII", b"DPT1", 2, 1) + struct.pack("<2f", -1.0, 5.0)
        path.write_bytes(payload)
        with pytest.raises(RunDirectoryError):
            read_depth(path)

    def test_golden_file_digest_and_contents(self, tmp_path):
        # frozen byte layout: 4-byte magic, two u32 LE dims, f32 LE row-major
        raw = GOLDEN_DPT.read_bytes()
        assert hashlib.sha256(raw).hexdigest() == GOLDEN_DPT_SHA256
        img = read_depth(GOLDEN_DPT)
        np.testing.assert_array_equal(img.ranges, GOLDEN_DPT_VALUES)
        rewritten = tmp_path / "golden.dpt"
        write_depth(img, rewritten)
        assert rewritten.read_bytes() == raw


class TestDictForms:
    def test_box_round_trip(self):
        b = BoundingBox(1.5, 2.5, 10.0, 20.0, class_id=2, score=0.75,
                        source=BoxSource.DETECTOR)
        assert box_from_dict(box_to_dict(b)) == b

    def test_box_without_score(self):
        b = BoundingBox(0.0, 0.0, 4.0, 4.0, source=BoxSource.GROUND_TRUTH)
        d = box_to_dict(b)
        assert "score" not in d
        assert box_from_dict(d) == b

    def test_frame_round_trip(self):
        frame = next(simulate(zero_noise_config()))
        back = frame_from_dict(frame_to_dict(frame), depth=frame.depth)
        assert frame_to_dict(back) == frame_to_dict(frame)
        np.testing.assert_array_equal(back.ego_pose.rotation,
                                      frame.ego_pose.rotation)
        np.testing.assert_array_equal(back.depth.ranges, frame.depth.ranges)

    def test_frame_dict_is_json_safe(self):
        frame = next(simulate(zero_noise_config()))
        text = json.dumps(frame_to_dict(frame), sort_keys=True)
        assert "Infinity" not in text and "NaN" not in text


class TestWriteRun:
    def _small_config(self):
        return ScenarioConfig(n_vehicles=3, overlap_injection=1,
                              duration=0.5, seed=4)

    def test_layout_and_count(self, tmp_path):
        cfg = self._small_config()
        count = write_run(cfg, simulate(cfg), tmp_path / "run")
        assert count == cfg.n_frames == 5
        root = tmp_path / "run"
        assert (root / "scenario.json").is_file()
        names = sorted(p.name for p in (root / "frames").iterdir())
        assert names == ["000000.dpt", "000000.json", "000001.dpt",
                         "000001.json", "000002.dpt", "000002.json",
                         "000003.dpt", "000003.json", "000004.dpt",
                         "000004.json"]

    def test_scenario_json_round_trips_config(self, tmp_path):
        cfg = self._small_config()
        write_run(cfg, simulate(cfg), tmp_path / "run")
        stored = json.loads((tmp_path / "run" / "scenario.json")
                            .read_text(encoding="utf-8"))
        assert ScenarioConfig.from_dict(stored) == cfg

    def test_regeneration_is_byte_identical(self, tmp_path):
        cfg = self._small_config()
        write_run(cfg, simulate(cfg), tmp_path / "a")
        write_run(cfg, simulate(cfg), tmp_path / "b")
        assert digest_tree(tmp_path / "a") == digest_tree(tmp_path / "b")

    def test_depthless_frame_rejected(self, tmp_path):
        import dataclasses
        cfg = self._small_config()
        frames = (dataclasses.replace(f, depth=None) for f in simulate(cfg))
        with pytest.raises(ValueError):
            write_run(cfg, frames, tmp_path / "run")


class TestRunReader:
    @pytest.fixture()
    def run_dir(self, tmp_path):
        cfg = ScenarioConfig(n_vehicles=3, overlap_injection=1, duration=0.5,
                             seed=4)
        write_run(cfg, simulate(cfg), tmp_path / "run")
        return tmp_path / "run"

    def test_frames_round_trip(self, run_dir):
        cfg = ScenarioConfig.from_dict(json.loads(
            (run_dir / "scenario.json").read_text(encoding="utf-8")))
        reader = RunReader(run_dir)
        assert reader.n_frames == 5
        for original, loaded in zip(simulate(cfg), reader.frames()):
            assert frame_to_dict(original) == frame_to_dict(loaded)
            np.testing.assert_allclose(loaded.depth.ranges,
                                       original.depth.ranges, rtol=1e-7)

    def test_depth_survives_float32_exactly_when_representable(self, run_dir):
        reader = RunReader(run_dir)
        frame = reader.frame(0)
        assert frame.depth is not None
        finite = frame.depth.ranges[np.isfinite(frame.depth.ranges)]
        # stored as float32: every loaded value must be float32-representable
        np.testing.assert_array_equal(finite,
                                      finite.astype(np.float32).astype(float))

    def test_without_depth_tolerates_missing_rasters(self, run_dir):
        for p in run_dir.glob("frames/*.dpt"):
            p.unlink()
        reader = RunReader(run_dir)
        frames = list(reader.frames(with_depth=False))
        assert len(frames) == 5
        assert all(f.depth is None for f in frames)

    def test_missing_raster_is_named_when_required(self, run_dir):
        (run_dir / "frames" / "000002.dpt").unlink()
        reader = RunReader(run_dir)
        reader.frame(1)  # intact neighbours still load
        with pytest.raises(RunDirectoryError) as info:
            reader.frame(2)
        assert "000002.dpt" in str(info.value)

    def test_missing_scenario_json(self, run_dir):
        (run_dir / "scenario.json").unlink()
        with pytest.raises(RunDirectoryError):
            RunReader(run_dir)

    def test_corrupt_scenario_json(self, run_dir):
        (run_dir / "scenario.json").write_text("{oops", encoding="utf-8")
        with pytest.raises(RunDirectoryError):
            RunReader(run_dir)

    def test_non_dense_frames_rejected(self, run_dir):
        (run_dir / "frames" / "000001.json").unlink()
        with pytest.raises(RunDirectoryError):
            RunReader(run_dir)

    def test_empty_run_rejected(self, run_dir):
        for p in (run_dir / "frames").iterdir():
            p.unlink()
        with pytest.raises(RunDirectoryError):
            RunReader(run_dir)

    def test_index_out_of_range(self, run_dir):
        reader = RunReader(run_dir)
        with pytest.raises(IndexError):
            reader.frame(99)

    def test_corrupt_frame_json(self, run_dir):
        (run_dir / "frames" / "000000.json").write_text("[]", encoding="utf-8")
        reader = RunReader(run_dir)
        with pytest.raises(RunDirectoryError):
            reader.frame(0)
