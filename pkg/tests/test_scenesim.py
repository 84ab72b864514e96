import math

import numpy as np
import pytest

from twinfuse.errors import ConfigInvalid
from twinfuse.fusion import NO_RETURN, BoundingBox, BoxSource
from twinfuse.geometry import CameraIntrinsics, CameraPose, WorldPoint
from twinfuse.metrics import iou
from twinfuse.scenesim import (CameraMount, DriverType, Frame, LaneChange,
                               ScenarioConfig, VehiclePlacement, VehicleState,
                               camera_pose_for, generate_scenario, lane_center,
                               perturb_detections, project_cuboid,
                               render_depth, simulate, twin_snapshot)


def vehicle(x, y, z=0.75, heading=0.0, speed=10.0, vid=0,
            dims=(4.6, 1.9, 1.5)):
    return VehicleState(id=vid, position=WorldPoint(x, y, z), heading=heading,
                        speed=speed, dims=dims)


class TestScenarioConfig:
    def test_defaults_validate(self):
        ScenarioConfig()

    @pytest.mark.parametrize("field,value", [
        ("lanes", 0),
        ("n_vehicles", 0),
        ("frame_rate", 0.0),
        ("duration", -1.0),
        ("drop_prob", 1.5),
        ("merge_prob", -0.1),
        ("gnss_sigma", -1.0),
        ("twin_latency", -0.5),
        ("overlap_injection", -1),
        ("seed", -3),
    ])
    def test_invalid_field_is_named(self, field, value):
        with pytest.raises(ConfigInvalid) as info:
            ScenarioConfig(**{field: value})
        assert info.value.field == field

    def test_ego_index_must_be_in_range(self):
        with pytest.raises(ConfigInvalid) as info:
            ScenarioConfig(n_vehicles=2, ego_index=2)
        assert info.value.field == "ego_index"

    def test_overlap_pairs_need_vehicles(self):
        with pytest.raises(ConfigInvalid) as info:
            ScenarioConfig(n_vehicles=2, overlap_injection=1)
        assert info.value.field == "n_vehicles"

    def test_explicit_placement_count_must_match(self):
        with pytest.raises(ConfigInvalid) as info:
            ScenarioConfig(n_vehicles=3, vehicles=(
                VehiclePlacement(lane=0, offset=0.0, speed=10.0),))
        assert info.value.field == "vehicles"

    def test_lane_change_referencing_missing_vehicle(self):
        with pytest.raises(ConfigInvalid) as info:
            ScenarioConfig(lane_changes=(
                LaneChange(vehicle=99, start=0.0, duration=1.0, target_lane=0),))
        assert info.value.field == "lane_changes"

    def test_dict_round_trip(self):
        cfg = ScenarioConfig(
            lanes=4, n_vehicles=3, overlap_injection=1, gnss_sigma=0.25,
            lane_changes=(LaneChange(vehicle=1, start=2.0, duration=1.5,
                                     target_lane=2),))
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg

    def test_dict_round_trip_with_placements(self):
        cfg = ScenarioConfig(
            n_vehicles=2, vehicles=(
                VehiclePlacement(lane=0, offset=0.0, speed=20.0),
                VehiclePlacement(lane=1, offset=15.0, speed=22.0,
                                 driver_type="aggressive"),
            ))
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg

    def test_frame_count_rounds(self):
        assert ScenarioConfig(duration=3.0, frame_rate=10.0).n_frames == 30


class TestKinematics:
    def test_lane_center(self):
        assert lane_center(0, 3.5) == 0.0
        assert lane_center(2, 3.5) == 7.0

    def test_constant_speed_advances_one_meter_per_frame(self):
        cfg = ScenarioConfig(
            n_vehicles=1, duration=2.0, frame_rate=10.0,
            vehicles=(VehiclePlacement(lane=0, offset=0.0, speed=10.0),))
        tl = generate_scenario(cfg)
        xs = [tl.states_at(i)[0].position.x for i in range(tl.n_frames)]
        steps = np.diff(xs)
        np.testing.assert_allclose(steps, 1.0, rtol=0, atol=1e-9)

    def test_lane_change_ramp(self):
        cfg = ScenarioConfig(
            lanes=2, n_vehicles=1, duration=10.0, lane_width=3.5,
            vehicles=(VehiclePlacement(lane=0, offset=0.0, speed=10.0),),
            lane_changes=(LaneChange(vehicle=0, start=2.0, duration=4.0,
                                     target_lane=1),))
        track = generate_scenario(cfg).tracks[0]
        assert track.state_at(1.0).position.y == 0.0
        mid = track.state_at(4.0)  # ramp midpoint crosses the boundary
        assert mid.position.y == pytest.approx(1.75, abs=1e-12)
        assert mid.heading > 0.0
        done = track.state_at(7.0)
        assert done.position.y == pytest.approx(3.5, abs=1e-12)
        assert done.heading == 0.0

    def test_speed_is_velocity_magnitude_mid_ramp(self):
        cfg = ScenarioConfig(
            lanes=2, n_vehicles=1, duration=10.0,
            vehicles=(VehiclePlacement(lane=0, offset=0.0, speed=10.0),),
            lane_changes=(LaneChange(vehicle=0, start=2.0, duration=4.0,
                                     target_lane=1),))
        track = generate_scenario(cfg).tracks[0]
        mid = track.state_at(4.0)
        vy = 3.5 * math.pi / 8.0  # peak lateral rate of the sinusoid
        assert mid.speed == pytest.approx(math.hypot(10.0, vy), abs=1e-9)

    def test_overlapping_maneuvers_rejected(self):
        cfg_kwargs = dict(
            lanes=3, n_vehicles=1, duration=10.0,
            vehicles=(VehiclePlacement(lane=0, offset=0.0, speed=10.0),),
            lane_changes=(
                LaneChange(vehicle=0, start=2.0, duration=4.0, target_lane=1),
                LaneChange(vehicle=0, start=3.0, duration=4.0, target_lane=2),
            ))
        with pytest.raises(ConfigInvalid):
            generate_scenario(ScenarioConfig(**cfg_kwargs))

    def test_procedural_layout_is_deterministic(self):
        cfg = ScenarioConfig(overlap_injection=2, n_vehicles=6, seed=11)
        a = generate_scenario(cfg)
        b = generate_scenario(cfg)
        assert a == b


class TestProjectCuboid:
    def test_worked_example(self, px1000_intrinsics, identity_pose):
        v = vehicle(0.0, 0.0, z=20.0, dims=(2.0, 2.0, 2.0))
        got = project_cuboid(v, identity_pose, px1000_intrinsics)
        edge = 1000.0 / 19.0
        assert got.x_min == pytest.approx(320.0 - edge, abs=1e-9)
        assert got.y_min == pytest.approx(320.0 - edge, abs=1e-9)
        assert got.x_max == pytest.approx(320.0 + edge, abs=1e-9)
        assert got.y_max == pytest.approx(320.0 + edge, abs=1e-9)
        assert got.source is BoxSource.GROUND_TRUTH

    def test_centered_on_principal_axis(self, px1000_intrinsics, identity_pose):
        got = project_cuboid(vehicle(0.0, 0.0, z=30.0), identity_pose,
                             px1000_intrinsics)
        assert (got.x_min + got.x_max) / 2 == pytest.approx(320.0, abs=1e-9)

    def test_behind_camera_is_invisible(self, px1000_intrinsics, identity_pose):
        assert project_cuboid(vehicle(0.0, 0.0, z=-20.0), identity_pose,
                              px1000_intrinsics) is None

    def test_straddling_near_plane_is_invisible(self, px1000_intrinsics,
                                                identity_pose):
        assert project_cuboid(vehicle(0.0, 0.0, z=0.2, dims=(2.0, 2.0, 2.0)),
                              identity_pose, px1000_intrinsics) is None

    def test_off_image_is_invisible(self, px1000_intrinsics, identity_pose):
        v = vehicle(100.0, 0.0, z=10.0)  # far right of the frustum
        assert project_cuboid(v, identity_pose, px1000_intrinsics) is None

    def test_heading_changes_footprint(self, px1000_intrinsics, identity_pose):
        broadside = vehicle(0.0, 0.0, z=30.0, dims=(4.6, 1.9, 1.5))
        endon = vehicle(0.0, 0.0, z=30.0, heading=math.pi / 2,
                        dims=(4.6, 1.9, 1.5))
        # identity pose maps world x to image x: turning the long axis away
        # from x narrows the footprint and swings it into image y
        a = project_cuboid(broadside, identity_pose, px1000_intrinsics)
        b = project_cuboid(endon, identity_pose, px1000_intrinsics)
        assert b.width < a.width
        assert b.height > a.height


class TestRenderDepth:
    def test_empty_scene_is_all_sentinel(self, px1000_intrinsics,
                                         identity_pose):
        img = render_depth([], identity_pose, px1000_intrinsics)
        assert np.all(np.isposinf(img.ranges))

    def test_single_vehicle_constant_fill(self, px1000_intrinsics,
                                          identity_pose):
        v = vehicle(0.0, 0.0, z=15.0)
        img = render_depth([v], identity_pose, px1000_intrinsics)
        filled = img.ranges[np.isfinite(img.ranges)]
        assert filled.size > 0
        assert np.all(filled == 15.0)

    def test_painter_keeps_nearer_vehicle(self, px1000_intrinsics,
                                          identity_pose):
        near = vehicle(0.0, 0.0, z=10.0)
        far = vehicle(8.0, 0.0, z=30.0)  # overlaps near but pokes out right
        img = render_depth([far, near], identity_pose, px1000_intrinsics)
        box_near = project_cuboid(near, identity_pose, px1000_intrinsics)
        cx, cy = box_near.center
        assert img.ranges[int(cy), int(cx)] == 10.0
        far_range = math.hypot(8.0, 0.0, 30.0)
        finite = np.unique(img.ranges[np.isfinite(img.ranges)])
        np.testing.assert_array_equal(finite, [10.0, far_range])

    def test_every_pixel_matches_nearest_cover(self, px1000_intrinsics,
                                               identity_pose):
        # brute-force painter correctness on a small raster
        intr = CameraIntrinsics(f=0.01, dx=1e-4, dy=1e-4, u0=32.0, v0=32.0,
                                width=64, height=64)
        vehicles = [vehicle(0.0, 0.0, z=12.0), vehicle(1.0, 0.5, z=20.0),
                    vehicle(-2.0, -0.5, z=35.0)]
        img = render_depth(vehicles, identity_pose, intr)
        boxes = {i: project_cuboid(v, identity_pose, intr)
                 for i, v in enumerate(vehicles)}
        ranges = {i: math.hypot(v.position.x, v.position.y, v.position.z)
                  for i, v in enumerate(vehicles)}
        for r in range(64):
            for c in range(64):
                covering = [i for i, b in boxes.items()
                            if b is not None
                            and math.floor(b.x_min) <= c < math.ceil(b.x_max)
                            and math.floor(b.y_min) <= r < math.ceil(b.y_max)]
                want = min((ranges[i] for i in covering), default=NO_RETURN)
                assert img.ranges[r, c] == want


class TestPerturbDetections:
    GT = [BoundingBox(10.0, 10.0, 50.0, 50.0, class_id=1),
          BoundingBox(100.0, 80.0, 180.0, 160.0, class_id=1)]

    def test_zero_noise_is_identity(self):
        got = perturb_detections(self.GT, drop_prob=0.0, box_jitter_sigma=0.0,
                                 merge_prob=0.0, seed=3, image_width=640,
                                 image_height=480)
        assert [(b.x_min, b.y_min, b.x_max, b.y_max) for b in got] == \
            [(b.x_min, b.y_min, b.x_max, b.y_max) for b in self.GT]
        assert all(b.source is BoxSource.DETECTOR for b in got)

    def test_drop_everything(self):
        got = perturb_detections(self.GT, drop_prob=1.0, box_jitter_sigma=0.0,
                                 merge_prob=0.0, seed=3, image_width=640,
                                 image_height=480)
        assert got == []

    def test_merge_replaces_pair_with_union(self):
        overlapping = [BoundingBox(0.0, 0.0, 10.0, 10.0),
                       BoundingBox(5.0, 5.0, 15.0, 15.0)]
        got = perturb_detections(overlapping, drop_prob=0.0,
                                 box_jitter_sigma=0.0, merge_prob=1.0, seed=0,
                                 image_width=640, image_height=480)
        assert len(got) == 1
        u = got[0]
        assert (u.x_min, u.y_min, u.x_max, u.y_max) == (0.0, 0.0, 15.0, 15.0)

    def test_disjoint_boxes_never_merge(self):
        got = perturb_detections(self.GT, drop_prob=0.0, box_jitter_sigma=0.0,
                                 merge_prob=1.0, seed=0, image_width=640,
                                 image_height=480)
        assert len(got) == 2

    def test_jitter_keeps_boxes_valid_and_inside(self, rng):
        gt = [BoundingBox(0.5, 0.5, 30.0, 20.0),
              BoundingBox(600.0, 440.0, 639.0, 479.0)]
        for seed in range(20):
            got = perturb_detections(gt, drop_prob=0.0, box_jitter_sigma=8.0,
                                     merge_prob=0.0, seed=seed,
                                     image_width=640, image_height=480)
            for b in got:
                assert 0.0 <= b.x_min < b.x_max <= 640.0
                assert 0.0 <= b.y_min < b.y_max <= 480.0

    def test_same_seed_same_output(self):
        kw = dict(drop_prob=0.3, box_jitter_sigma=4.0, merge_prob=0.5,
                  image_width=640, image_height=480)
        a = perturb_detections(self.GT, seed=[1, 2], **kw)
        b = perturb_detections(self.GT, seed=[1, 2], **kw)
        assert a == b


class TestTwinSnapshot:
    def _tracks(self, speed=10.0):
        cfg = ScenarioConfig(
            n_vehicles=1, duration=5.0,
            vehicles=(VehiclePlacement(lane=0, offset=0.0, speed=speed),))
        return generate_scenario(cfg).tracks

    def test_no_latency_no_noise_equals_truth(self):
        tracks = self._tracks()
        records = twin_snapshot(tracks, 2.0, twin_latency=0.0, gnss_sigma=0.0,
                                seed=0)
        truth = tracks[0].state_at(2.0)
        assert records[0].position == truth.position
        assert records[0].report_time == 2.0
        assert records[0].speed == truth.speed

    def test_latency_lags_along_heading(self):
        records = twin_snapshot(self._tracks(speed=10.0), 2.0,
                                twin_latency=0.1, gnss_sigma=0.0, seed=0)
        truth_now = self._tracks(speed=10.0)[0].state_at(2.0)
        assert truth_now.position.x - records[0].position.x == \
            pytest.approx(1.0, abs=1e-9)
        assert records[0].report_time == pytest.approx(1.9)

    def test_latency_never_samples_before_start(self):
        records = twin_snapshot(self._tracks(), 0.0, twin_latency=0.5,
                                gnss_sigma=0.0, seed=0)
        assert records[0].position.x == 0.0  # truth at t=0, not t=-0.5
        assert records[0].report_time == -0.5

    def test_noise_statistics(self):
        tracks = self._tracks()
        errors = []
        for i in range(10_000):
            rec = twin_snapshot(tracks, 1.0, twin_latency=0.0,
                                gnss_sigma=0.5, seed=[77, i])[0]
            truth = tracks[0].state_at(1.0)
            errors.append(rec.position.x - truth.position.x)
        errors = np.asarray(errors)
        assert abs(errors.mean()) < 0.02
        assert abs(errors.std() - 0.5) < 0.02


class TestCameraPoseFor:
    def test_mount_offsets_apply_in_vehicle_frame(self):
        ego = vehicle(5.0, 2.0, z=0.75, heading=0.0)
        pose = camera_pose_for(ego, CameraMount(forward=1.2, left=0.3, up=0.85))
        assert pose.origin == WorldPoint(6.2, 2.3, 1.6)

    def test_axes_follow_heading(self):
        ego = vehicle(0.0, 0.0, heading=math.pi / 2)  # facing world +Y
        pose = camera_pose_for(ego, CameraMount(forward=0.0, left=0.0, up=0.0))
        np.testing.assert_allclose(pose.rotation[:, 2], [0.0, 1.0, 0.0],
                                   atol=1e-12)  # camera Z looks along +Y
        np.testing.assert_allclose(pose.rotation[:, 1], [0.0, 0.0, -1.0],
                                   atol=1e-12)  # camera Y points down


class TestFrames:
    def test_ego_only_scene_is_empty(self):
        cfg = ScenarioConfig(n_vehicles=1, duration=1.0)
        for frame in simulate(cfg):
            assert frame.gt_boxes == {}
            assert frame.detections == ()
            assert frame.twin == ()

    def test_overlap_injection_produces_overlap(self):
        cfg = ScenarioConfig(overlap_injection=1, n_vehicles=3, duration=20.0,
                             seed=5)
        found = False
        for frame in simulate(cfg):
            boxes = list(frame.gt_boxes.values())
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    a, b = boxes[i], boxes[j]
                    shares_column = (min(a.x_max, b.x_max)
                                     > max(a.x_min, b.x_min))
                    if iou(a, b) > 0 and shares_column:
                        found = True
        assert found

    def test_gt_boxes_stay_inside_image(self):
        cfg = ScenarioConfig(overlap_injection=2, n_vehicles=6, duration=10.0,
                             seed=2)
        for frame in simulate(cfg):
            for b in frame.gt_boxes.values():
                assert 0.0 <= b.x_min < b.x_max <= frame.intrinsics.width
                assert 0.0 <= b.y_min < b.y_max <= frame.intrinsics.height

    def test_identical_config_identical_frames(self):
        from twinfuse.runio import frame_to_dict
        cfg = ScenarioConfig(overlap_injection=1, n_vehicles=4, duration=2.0,
                             gnss_sigma=0.3, box_jitter_sigma=2.0,
                             drop_prob=0.1, merge_prob=0.2, seed=99)
        for a, b in zip(simulate(cfg), simulate(cfg)):
            assert frame_to_dict(a) == frame_to_dict(b)
            np.testing.assert_array_equal(a.depth.ranges, b.depth.ranges)

    def test_frame_rejects_stray_gt_ids(self):
        cfg = ScenarioConfig(n_vehicles=1, duration=1.0)
        frame = next(simulate(cfg))
        with pytest.raises(ValueError):
            Frame(index=0, timestamp=0.0, ego_pose=frame.ego_pose,
                  intrinsics=frame.intrinsics, vehicles=frame.vehicles,
                  gt_boxes={42: BoundingBox(0.0, 0.0, 1.0, 1.0)})

    def test_frame_rejects_mismatched_depth(self):
        from twinfuse.fusion import DepthImage
        cfg = ScenarioConfig(n_vehicles=1, duration=1.0)
        frame = next(simulate(cfg))
        with pytest.raises(ValueError):
            Frame(index=0, timestamp=0.0, ego_pose=frame.ego_pose,
                  intrinsics=frame.intrinsics, vehicles=frame.vehicles,
                  depth=DepthImage.filled(8, 8, 5.0))

    def test_zero_noise_anchor_lands_in_gt_box(self):
        from twinfuse.configs import zero_noise_config
        from twinfuse.geometry import project_anchor
        cfg = zero_noise_config()
        for frame in simulate(cfg):
            for rec in frame.twin:
                gt = frame.gt_boxes.get(rec.vehicle_id)
                if gt is None:
                    continue
                px = project_anchor(rec.position, frame.ego_pose,
                                    frame.intrinsics)
                assert gt.contains(px)


def test_driver_type_values():
    assert {d.value for d in DriverType} == \
        {"aggressive", "normal", "conservative"}
