"""State-log files and the scripted room tour that produces structured logs.

A state log is a flat binary file: magic line, length-prefixed JSON header,
then the frames as little-endian float32. The tour generator walks a world
room by room (dwelling inside each with a confined random walk) and records
the intrinsic-motivation view at every step, giving a log whose temporal
order mirrors spatial progress; novelty probes rely on that structure.
"""

import json
from collections import deque

import numpy as np

from ..errors import CheckpointError, ContractError
from ..seeding import stream
from .gridworld import GridWorld
from .world import GOAL, HAZARD, LOCKED_DOOR, MOVES, WALL

MAGIC = b"SNDLOG1\n"


def write_state_log(path, frames, meta=None):
    frames = np.ascontiguousarray(frames, dtype="<f4")
    if frames.ndim != 4:
        raise ContractError(f"frames must be (N, C, H, W), got {frames.shape}")
    header = {
        "count": frames.shape[0],
        "shape": list(frames.shape[1:]),
        "dtype": "<f4",
        "meta": meta or {},
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        fh.write(frames.tobytes())


def read_state_log(path):
    """Returns (frames, meta); raises CheckpointError on any corruption."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a state log (bad magic)")
    off = len(MAGIC)
    if len(raw) < off + 4:
        raise CheckpointError(f"{path} is truncated (no header length)")
    hlen = int.from_bytes(raw[off : off + 4], "little")
    off += 4
    if len(raw) < off + hlen:
        raise CheckpointError(f"{path} is truncated (incomplete header)")
    header = json.loads(raw[off : off + hlen].decode("utf-8"))
    off += hlen
    shape = (header["count"], *header["shape"])
    expected = 4 * int(np.prod(shape))
    if len(raw) != off + expected:
        raise CheckpointError(
            f"{path} payload is {len(raw) - off} bytes, expected {expected}"
        )
    frames = np.frombuffer(raw[off:], dtype="<f4").reshape(shape).copy()
    return frames, header["meta"]


def _walkable(grid, pos):
    return grid[pos] not in (WALL, LOCKED_DOOR, HAZARD, GOAL)


def _shortest_path(grid, start, targets):
    """BFS path from start to the nearest of targets over walkable cells."""
    targets = set(targets)
    prev = {start: None}
    queue = deque([start])
    while queue:
        pos = queue.popleft()
        if pos in targets:
            path = []
            while pos != start:
                path.append(pos)
                pos = prev[pos]
            return path[::-1]
        for dr, dc in MOVES.values():
            npos = (pos[0] + dr, pos[1] + dc)
            if npos not in prev and _walkable(grid, npos):
                prev[npos] = pos
                queue.append(npos)
    return None


def generate_tour_log(world, n_states, seed=0):
    """Scripted tour visiting every reachable room, recording IM frames.

    Returns (frames, room_ids): frames of shape (n_states, 1, 32, 32) and the
    ground-truth room id per frame. The walker moves room to room in
    breadth-first order over the door graph, then dwells inside each room
    with a random walk, so temporally close frames are spatially close.
    """
    if n_states < 1:
        raise ContractError(f"n_states must be >= 1, got {n_states}")
    rng = stream(seed, "statelog")
    env = GridWorld(world, rng=stream(seed, "statelog", 1))
    env.reset()
    grid = world.grid

    # rooms in BFS order over the door graph, restricted to reachable ones
    adj = world.door_graph()
    start_room = world.room_of(world.spawn)
    order = [start_room]
    seen = {start_room}
    qi = 0
    while qi < len(order):
        for nb in sorted(adj[order[qi]]):
            if nb not in seen:
                seen.add(nb)
                order.append(nb)
        qi += 1

    def center(room):
        cells = [c for c in world.interior_cells(room) if _walkable(grid, c)]
        if not cells:
            return None
        mid = np.mean(cells, axis=0)
        return min(cells, key=lambda c: (c[0] - mid[0]) ** 2 + (c[1] - mid[1]) ** 2)

    order = [r for r in order if center(r) is not None]
    # centre-to-centre hop lengths, used to budget per-room dwell time so the
    # tour still reaches the last room within n_states frames
    hops = []
    for a, b in zip(order, order[1:]):
        path = _shortest_path(grid, center(a), [center(b)])
        hops.append(len(path) if path else 0)

    frames = []
    rooms = []

    def record():
        if world.blinker_cell is not None:
            env.blink_on = bool(rng.random() < 0.5)
        frames.append(env.render_frame()[None])
        rooms.append(world.room_of(env.pos))

    def random_step(room):
        moves = []
        for dr, dc in MOVES.values():
            npos = (env.pos[0] + dr, env.pos[1] + dc)
            if _walkable(grid, npos) and world.room_of(npos) == room:
                moves.append(npos)
        if moves:
            env.pos = moves[int(rng.integers(len(moves)))]
        record()

    record()
    for i, room in enumerate(order):
        if len(frames) >= n_states:
            break
        if world.room_of(env.pos) != room:
            targets = [c for c in world.interior_cells(room) if _walkable(grid, c)]
            path = _shortest_path(grid, env.pos, targets)
            if path is None:
                continue
            for pos in path:
                env.pos = pos
                record()
                if len(frames) >= n_states:
                    break
        here = world.room_of(env.pos)
        budget = n_states - len(frames) - sum(hops[i:])
        dwell = max(1, budget // (len(order) - i))
        for _ in range(dwell):
            if len(frames) >= n_states:
                break
            random_step(here)
    while len(frames) < n_states:
        random_step(world.room_of(env.pos))

    frames = np.stack(frames[:n_states]).astype(np.float32)
    return frames, np.array(rooms[: n_states], dtype=np.int64)
