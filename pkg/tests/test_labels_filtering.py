import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivescope.config import SimConfig
from drivescope.data.episode import EpisodeRecord, Frame
from drivescope.data.filtering import filter_dataset
from drivescope.data.labels import label_waypoints
from drivescope.sim.geometry import SE2
from drivescope.sim.infractions import InfractionEvent, InfractionKind
from drivescope.sim.world import AgentState, WorldState


def episode_from_poses(poses, speeds=None, events=()):
    frames = []
    for i, (x, y, yaw) in enumerate(poses):
        s = 5.0 if speeds is None else speeds[i]
        ego = AgentState(id="ego", x=x, y=y, yaw=yaw, speed=s,
                         length=4.5, width=2.0, role="EGO")
        frames.append(Frame(tick=i * 10, world=WorldState(
            sim_time=i * 0.5, tick=i * 10, ego=ego), prompt=None))
    return EpisodeRecord(scenario_ref="s", route_ref="r", frames=frames,
                         infractions=list(events))


def test_stationary_labels_are_zero():
    ep = episode_from_poses([(3.0, 4.0, 0.7)] * 12, speeds=[0.0] * 12)
    wp = label_waypoints(ep, 0, 8)
    assert np.allclose(wp, 0.0)


def test_constant_speed_straight():
    poses = [(2.0 * i, 0.0, 0.0) for i in range(20)]  # 4 m/s at 0.5 s ticks
    ep = episode_from_poses(poses)
    wp = label_waypoints(ep, 0, 8)
    expected = np.stack([2.0 * np.arange(1, 9), np.zeros(8)], axis=1)
    assert np.allclose(wp, expected, atol=1e-12)


def test_episode_end_repeats_last_pose():
    poses = [(i * 1.0, 0.0, 0.0) for i in range(5)]
    ep = episode_from_poses(poses)
    wp = label_waypoints(ep, 2, 8)
    assert np.allclose(wp[2:], wp[2], atol=1e-12)


def test_out_of_range_raises():
    ep = episode_from_poses([(0, 0, 0)] * 3)
    with pytest.raises(IndexError):
        label_waypoints(ep, 5, 4)


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50),
                          st.floats(-3, 3)), min_size=3, max_size=15),
       st.integers(0, 2))
@settings(max_examples=40, deadline=None)
def test_labels_match_independent_se2_oracle(poses, t_index):
    ep = episode_from_poses(poses)
    horizon = 6
    wp = label_waypoints(ep, t_index, horizon)
    base = SE2(*poses[t_index])
    for k in range(horizon):
        j = min(t_index + 1 + k, len(poses) - 1)
        world = np.array(poses[j][:2])
        # oracle: rotate/translate by hand
        dx = world - np.array(poses[t_index][:2])
        c, s = math.cos(poses[t_index][2]), math.sin(poses[t_index][2])
        expected = np.array([c * dx[0] + s * dx[1], -s * dx[0] + c * dx[1]])
        assert np.allclose(wp[k], expected, atol=1e-9)
        # and labels round-trip to world coordinates
        assert np.allclose(base.apply(wp[k][None])[0], world, atol=1e-9)


def make_corpus():
    clean = episode_from_poses([(i * 2.0, 0.0, 0.0) for i in range(10)])
    stopped_tail = episode_from_poses(
        [(i * 2.0, 0.0, 0.0) for i in range(8)] + [(16.0, 0.0, 0.0)] * 12,
        speeds=[5.0] * 8 + [0.0] * 12)
    with_infraction = episode_from_poses(
        [(i * 2.0, 0.0, 0.0) for i in range(9)],
        events=[InfractionEvent(InfractionKind.COLLISION_VEHICLE, 3, (0, 0))])
    return clean, stopped_tail, with_infraction


def test_clean_episode_unchanged():
    clean, _, _ = make_corpus()
    kept, report = filter_dataset([clean])
    assert len(kept) == 1 and len(kept[0].frames) == 10
    assert report.truncated_frames == 0 and report.dropped_routes == 0


def test_stopped_tail_truncated():
    _, tail, _ = make_corpus()
    kept, report = filter_dataset([tail])
    assert report.truncated_frames == 12
    assert len(kept[0].frames) == 8


def test_infraction_episode_dropped():
    clean, tail, bad = make_corpus()
    kept, report = filter_dataset([clean, tail, bad])
    assert report.dropped_routes == 1
    assert report.kept_routes == 2
    assert all(not ep.infractions for ep in kept)


def test_filtration_idempotent():
    corpus = list(make_corpus())
    once, r1 = filter_dataset(corpus)
    twice, r2 = filter_dataset(once)
    assert [len(e.frames) for e in once] == [len(e.frames) for e in twice]
    assert r2.truncated_frames == 0 and r2.dropped_routes == 0


@given(st.lists(st.tuples(st.integers(1, 12), st.integers(0, 6),
                          st.booleans()), min_size=0, max_size=8))
@settings(max_examples=40, deadline=None)
def test_filtration_bookkeeping_matches_ground_truth(spec):
    episodes = []
    expected_drop = 0
    expected_trunc = 0
    for moving, stopped, bad in spec:
        poses = [(i * 1.0, 0.0, 0.0) for i in range(moving + stopped)]
        speeds = [5.0] * moving + [0.0] * stopped
        events = [InfractionEvent(InfractionKind.RED_LIGHT, 0, (0, 0))] if bad else []
        episodes.append(episode_from_poses(poses, speeds=speeds, events=events))
        if bad:
            expected_drop += 1
        else:
            expected_trunc += stopped
    kept, report = filter_dataset(episodes)
    assert report.dropped_routes == expected_drop
    assert report.truncated_frames == expected_trunc
    assert report.kept_routes == len(episodes) - expected_drop
    assert report.kept_frames == sum(len(e.frames) for e in kept)
