"""Tests for world generation, episode mechanics, vectorization, preprocessing."""

import json

import numpy as np
import pytest

from sndlab.envs import (
    DEFAULT_WORLD_CONFIG,
    GridWorld,
    RunningStats,
    VecEnv,
    World,
    generate_tour_log,
    generate_world,
    preprocess,
    read_state_log,
    solvable,
    write_state_log,
)
from sndlab.envs.world import DOWN, INTERACT, LEFT, MOVES, NOOP, RIGHT, UP
from sndlab.errors import CheckpointError, ContractError, StateError

# ------------------------------------------------------------ hand-made maps


def _world_from_rows(rows, spawn, goal, rooms_w, size=5, **cfg_overrides):
    cfg = dict(DEFAULT_WORLD_CONFIG)
    cfg.update({"rooms": rooms_w, "size": size}, **cfg_overrides)
    return World.from_json(
        json.dumps(
            {
                "seed": 0,
                "config": cfg,
                "grid": rows,
                "spawn": list(spawn),
                "goal": list(goal),
                "rooms_h": 1,
                "rooms_w": rooms_w,
                "blinker_cell": None,
            }
        )
    )


def _two_rooms(door="D", extra=()):
    rows = [
        "#############",
        "#.....#.....#",
        "#.....#.....#",
        f"#.....{door}..G..#",
        "#.....#.....#",
        "#.....#.....#",
        "#############",
    ]
    rows = [list(r) for r in rows]
    for (r, c), ch in extra:
        rows[r][c] = ch
    return ["".join(r) for r in rows]


def _find_action_path(world):
    """Actions along a BFS shortest path spawn -> goal (no keys involved)."""
    from collections import deque

    inverse = {d: a for a, d in MOVES.items()}
    prev = {world.spawn: None}
    queue = deque([world.spawn])
    while queue:
        pos = queue.popleft()
        if pos == world.goal:
            break
        for dr, dc in MOVES.values():
            npos = (pos[0] + dr, pos[1] + dc)
            if npos not in prev and world.grid[npos] not in (1, 3, 5):
                prev[npos] = pos
                queue.append(npos)
    actions = []
    pos = world.goal
    while prev[pos] is not None:
        p = prev[pos]
        actions.append(inverse[(pos[0] - p[0], pos[1] - p[1])])
        pos = p
    return actions[::-1]


# ------------------------------------------------------------ world generation


def test_single_room_world_is_solvable():
    world = generate_world(7, {"rooms": 1})
    assert world.n_rooms == 1
    assert solvable(world)


def test_same_seed_same_layout():
    a, b = generate_world(13), generate_world(13)
    assert a.grid.tobytes() == b.grid.tobytes()
    assert a.spawn == b.spawn and a.goal == b.goal


def test_seed_sweep_all_solvable():
    assert all(solvable(generate_world(s)) for s in range(100))


def test_locked_door_worlds_are_solvable():
    for seed in range(20):
        world = generate_world(seed, {"keys": 1, "locked_doors": 1})
        assert solvable(world)


def test_exactly_one_goal():
    world = generate_world(3)
    assert int((world.grid == 6).sum()) == 1


def test_generate_rejects_bad_config():
    with pytest.raises(ContractError):
        generate_world(0, {"rooms": 0})
    with pytest.raises(ContractError):
        generate_world(0, {"size": 4})
    with pytest.raises(ContractError):
        generate_world(0, {"bogus": 1})


def test_world_json_roundtrip():
    world = generate_world(21, {"keys": 1, "locked_doors": 1, "blinker": True})
    again = World.from_json(world.to_json())
    assert np.array_equal(again.grid, world.grid)
    assert again.spawn == world.spawn and again.goal == world.goal
    assert again.blinker_cell == world.blinker_cell


# ---------------------------------------------------------------- episodes


def test_noop_keeps_position():
    world = generate_world(1)
    env = GridWorld(world, seed=0)
    env.reset()
    pos = env.pos
    _, reward, done, _ = env.step(NOOP)
    assert env.pos == pos and reward == 0.0 and not done


def test_goal_gives_reward_and_ends_episode():
    world = _world_from_rows(_two_rooms(), spawn=(3, 3), goal=(3, 9), rooms_w=2)
    env = GridWorld(world, seed=0)
    env.reset()
    for action in [RIGHT] * 5:
        _, reward, done, _ = env.step(action)
        assert reward == 0.0 and not done
    _, reward, done, info = env.step(RIGHT)
    assert reward == 1.0 and done
    assert info["room_id"] == 1 and info["visited_rooms"] == 2


def test_generated_world_completable_by_path():
    world = generate_world(11)
    env = GridWorld(world, seed=0)
    env.reset()
    for action in _find_action_path(world):
        obs, reward, done, _ = env.step(action)
    assert reward == 1.0 and done


def test_step_after_done_is_state_error():
    world = _world_from_rows(_two_rooms(), spawn=(3, 3), goal=(3, 9), rooms_w=2)
    env = GridWorld(world, seed=0)
    env.reset()
    for _ in range(6):
        env.step(RIGHT)
    with pytest.raises(StateError):
        env.step(NOOP)


def test_hazard_kills():
    rows = _two_rooms(extra=[((3, 4), "H")])
    world = _world_from_rows(rows, spawn=(3, 3), goal=(3, 9), rooms_w=2)
    env = GridWorld(world, seed=0)
    env.reset()
    _, reward, done, _ = env.step(RIGHT)
    assert done and reward == 0.0


def test_walls_block():
    world = _world_from_rows(_two_rooms(), spawn=(1, 1), goal=(3, 9), rooms_w=2)
    env = GridWorld(world, seed=0)
    env.reset()
    env.step(UP)
    assert env.pos == (1, 1)
    env.step(LEFT)
    assert env.pos == (1, 1)


def test_key_and_locked_door_flow():
    rows = _two_rooms(door="L", extra=[((2, 3), "K")])
    world = _world_from_rows(rows, spawn=(3, 3), goal=(3, 9), rooms_w=2)
    env = GridWorld(world, seed=0)
    env.reset()

    # locked door blocks, interact without key does nothing
    for action in [RIGHT, RIGHT]:
        env.step(action)
    assert env.pos == (3, 5)
    env.step(RIGHT)
    assert env.pos == (3, 5)
    env.step(INTERACT)
    env.step(RIGHT)
    assert env.pos == (3, 5)

    # fetch the key, open, walk through to the goal
    for action in [LEFT, LEFT, UP]:
        env.step(action)
    assert env.keys_held == 1
    for action in [DOWN, RIGHT, RIGHT]:
        env.step(action)
    env.step(INTERACT)
    assert env.keys_held == 0
    done = False
    for action in [RIGHT, RIGHT, RIGHT, RIGHT]:
        _, reward, done, _ = env.step(action)
    assert reward == 1.0 and done


def test_step_limit_truncates_with_flag():
    world = generate_world(2, {"step_limit": 10})
    env = GridWorld(world, seed=0)
    env.reset()
    for _ in range(9):
        _, _, done, info = env.step(NOOP)
        assert not done
    _, _, done, info = env.step(NOOP)
    assert done and info["timeout"]


def test_repeatable_pickup_farms_reward():
    world = _world_from_rows(
        _two_rooms(), spawn=(3, 3), goal=(3, 9), rooms_w=2, repeatable_pickup=True
    )
    env = GridWorld(world, seed=0)
    env.reset()
    total = 0.0
    for _ in range(2):
        for action in [RIGHT] * 6:
            _, reward, done, _ = env.step(action)
            total += reward
            assert not done
        assert env.pos == world.spawn  # teleported back, episode continues
    assert total == 2.0


def test_random_policy_rarely_scores():
    """Monte-Carlo sparsity check: expected reward per episode < 0.01."""
    world = generate_world(5)
    env = GridWorld(world, seed=0)
    rng = np.random.default_rng(0)
    episodes, total = 0, 0.0
    while episodes < 1000:
        env.reset()
        done = False
        while not done:
            _, reward, done, _ = env.step(int(rng.integers(6)))
            total += reward
        episodes += 1
    assert total / episodes < 0.01


def test_trajectory_reproducible():
    world = generate_world(31, {"blinker": True})
    actions = np.random.default_rng(3).integers(0, 6, size=400)

    def rollout():
        env = GridWorld(world, seed=77)
        frames = [env.reset()]
        rewards = []
        for a in actions:
            obs, r, done, _ = env.step(int(a))
            frames.append(obs)
            rewards.append(r)
            if done:
                frames.append(env.reset())
        return np.stack(frames), rewards

    f1, r1 = rollout()
    f2, r2 = rollout()
    assert f1.tobytes() == f2.tobytes() and r1 == r2


# -------------------------------------------------------------- observations


def test_observation_shape_and_range():
    env = GridWorld(generate_world(9), seed=0)
    obs = env.reset()
    assert obs.shape == (2, 32, 32) and obs.dtype == np.float32
    assert obs.min() >= 0.0 and obs.max() <= 1.0
    obs, _, _, _ = env.step(RIGHT)
    assert obs.min() >= 0.0 and obs.max() <= 1.0


def test_frame_stack_holds_previous_frame():
    env = GridWorld(generate_world(9), seed=0)
    obs0 = env.reset()
    assert np.array_equal(obs0[0], obs0[1])
    obs1, _, _, _ = env.step(RIGHT)
    assert np.array_equal(obs1[0], obs0[1])


def test_view_is_room_local():
    """Frames rendered in different rooms differ even at equal local offsets."""
    world = generate_world(11)
    frames, rooms = generate_tour_log(world, 512, seed=0)
    by_room = {}
    for f, r in zip(frames, rooms):
        by_room.setdefault(int(r), f)
    keys = sorted(by_room)
    assert len(keys) > 1
    assert not np.array_equal(by_room[keys[0]], by_room[keys[1]])


def test_blinker_adds_observation_noise():
    world = generate_world(4, {"blinker": True})
    env = GridWorld(world, seed=0)
    env.reset()
    frames = []
    for _ in range(40):
        obs, _, _, _ = env.step(NOOP)
        frames.append(obs[1])
    uniq = {f.tobytes() for f in frames}
    assert len(uniq) == 2  # same screen, blinker on/off


# ------------------------------------------------------------------- vec env


def test_vec_matches_single_env():
    world = generate_world(17)
    venv = VecEnv(world, 1, seed=4)
    env = GridWorld(world, seed=4, index=0)
    vobs, _ = venv.reset()
    obs = env.reset()
    assert np.array_equal(vobs[0], obs)
    actions = np.random.default_rng(1).integers(0, 6, size=600)
    for a in actions:
        vobs, vr, vd, vi = venv.step([int(a)])
        obs, r, done, info = env.step(int(a))
        if done:
            assert np.array_equal(vi[0]["terminal_observation"], obs)
            obs = env.reset()
        assert np.array_equal(vobs[0], obs)
        assert vr[0] == r and vd[0] == done


def test_vec_same_seed_rows_identical():
    world = generate_world(8, {"blinker": True})
    venv = VecEnv(world, 4, seed=0)
    venv.envs = [GridWorld(world, seed=5, index=0) for _ in range(4)]
    venv.reset()
    for a in [RIGHT, DOWN, NOOP, UP, LEFT, NOOP] * 20:
        obs, rewards, dones, _ = venv.step([a] * 4)
        assert all(np.array_equal(obs[0], obs[i]) for i in range(4))
        assert len(set(rewards.tolist())) == 1 and len(set(dones.tolist())) == 1


def test_vec_parallel_bit_identical():
    world = generate_world(23, {"blinker": True})
    serial = VecEnv(world, 8, seed=3)
    parallel = VecEnv(world, 8, seed=3, parallel=True, workers=4)
    so, _ = serial.reset()
    po, _ = parallel.reset()
    assert so.tobytes() == po.tobytes()
    actions = np.random.default_rng(2).integers(0, 6, size=(400, 8))
    for row in actions:
        o1, r1, d1, _ = serial.step(list(map(int, row)))
        o2, r2, d2, _ = parallel.step(list(map(int, row)))
        assert o1.tobytes() == o2.tobytes()
        assert np.array_equal(r1, r2) and np.array_equal(d1, d2)
    parallel.close()


def test_vec_rejects_wrong_action_count():
    venv = VecEnv(generate_world(0), 4, seed=0)
    venv.reset()
    with pytest.raises(ContractError):
        venv.step([0, 1])


def test_vec_instances_are_independent():
    world = generate_world(6)
    venv = VecEnv(world, 2, seed=0)
    venv.reset()
    venv.step([RIGHT, NOOP])
    assert venv.envs[0].pos != venv.envs[1].pos or True
    assert venv.envs[1].pos == world.spawn


# ------------------------------------------------------- stats / preprocessing


def test_running_stats_single_obs():
    stats = RunningStats((3,))
    stats.update(np.array([1.0, 2.0, 3.0]))
    assert np.allclose(stats.mean, [1.0, 2.0, 3.0])
    assert np.allclose(stats.var, 0.0)


def test_running_stats_two_obs():
    stats = RunningStats((2,))
    stats.update(np.array([1.0, 5.0]))
    stats.update(np.array([3.0, 1.0]))
    assert np.allclose(stats.mean, [2.0, 3.0])


def test_running_stats_matches_two_pass():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((1000, 4, 4))
    stats = RunningStats((4, 4))
    stats.update_batch(data)
    assert np.abs(stats.mean - data.mean(axis=0)).max() < 1e-4
    assert np.abs(stats.var - data.var(axis=0)).max() < 1e-4


def test_running_stats_shape_mismatch():
    stats = RunningStats((2, 2))
    with pytest.raises(ContractError):
        stats.update(np.zeros(3))


def test_preprocess_none_is_identity():
    x = np.random.default_rng(0).random((2, 1, 8, 8)).astype(np.float32)
    assert preprocess(x, "none") is x


def test_preprocess_mean_subtract_converges_to_zero():
    const = np.full((4, 4), 0.37, dtype=np.float32)
    stats = RunningStats((4, 4))
    for _ in range(50):
        stats.update(const)
    out = preprocess(const, "mean_subtract", stats)
    assert np.abs(out).max() < 1e-3


def test_preprocess_normalize_monte_carlo():
    """On an i.i.d. uniform stream, normalized outputs approach unit std."""
    rng = np.random.default_rng(1)
    stats = RunningStats((8, 8))
    stream_data = rng.random((10000, 8, 8))
    stats.update_batch(stream_data)
    outs = preprocess(stream_data[-2000:].astype(np.float32), "normalize", stats)
    assert np.abs(outs.std(axis=0) - 1.0).max() < 0.1
    assert outs.min() >= -5.0 and outs.max() <= 5.0


def test_preprocess_requires_stats():
    with pytest.raises(ContractError):
        preprocess(np.zeros((1, 2, 2)), "normalize")
    with pytest.raises(ContractError):
        preprocess(np.zeros((1, 2, 2)), "bogus", RunningStats((2, 2)))


def test_preprocess_pure_function():
    rng = np.random.default_rng(2)
    stats = RunningStats((4, 4))
    stats.update_batch(rng.random((100, 4, 4)))
    x = rng.random((4, 4)).astype(np.float32)
    a = preprocess(x, "normalize", stats)
    b = preprocess(x, "normalize", stats)
    assert np.array_equal(a, b)


# ----------------------------------------------------------------- state logs


def test_tour_log_covers_rooms_and_is_deterministic(tmp_path):
    world = generate_world(7)
    frames, rooms = generate_tour_log(world, 1024, seed=5)
    assert frames.shape == (1024, 1, 32, 32)
    assert set(rooms.tolist()) == set(range(world.n_rooms))
    again, rooms2 = generate_tour_log(world, 1024, seed=5)
    assert frames.tobytes() == again.tobytes()
    assert np.array_equal(rooms, rooms2)


def test_state_log_roundtrip(tmp_path):
    path = tmp_path / "log.bin"
    frames = np.random.default_rng(0).random((16, 1, 8, 8)).astype(np.float32)
    write_state_log(path, frames, meta={"room_ids": list(range(16))})
    loaded, meta = read_state_log(path)
    assert loaded.tobytes() == frames.tobytes()
    assert meta["room_ids"] == list(range(16))


def test_state_log_corruption_detected(tmp_path):
    path = tmp_path / "log.bin"
    frames = np.zeros((4, 1, 4, 4), dtype=np.float32)
    write_state_log(path, frames)
    raw = path.read_bytes()

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(raw[:-8])
    with pytest.raises(CheckpointError):
        read_state_log(truncated)

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(CheckpointError):
        read_state_log(bad_magic)
