"""Single gridworld instance: episode state, stepping, pixel rendering.

Observations are room-local: the agent sees only the room it stands in
(walls, doors, and contents) as a grayscale image, so entering an unvisited
room produces a genuinely new screen. The policy observation stacks the
previous and current frame; intrinsic-motivation modules consume just the
current frame (the last channel).
"""

import numpy as np

from ..errors import ContractError, StateError
from ..seeding import stream
from .world import (
    BLINKER,
    DOOR,
    FLOOR,
    GOAL,
    HAZARD,
    INTERACT,
    KEY,
    LOCKED_DOOR,
    MOVES,
    WALL,
)

OBS_HW = 32
FRAME_STACK = 2

# gray levels per cell code, agent drawn on top
GRAY = {
    FLOOR: 0.0,
    WALL: 0.35,
    DOOR: 0.5,
    LOCKED_DOOR: 0.45,
    KEY: 0.7,
    HAZARD: 0.2,
    GOAL: 0.85,
    BLINKER: 0.0,
}
AGENT_GRAY = 1.0
BLINKER_ON_GRAY = 0.95


class GridWorld:
    """One playable instance of a World.

    The layout is immutable and shared; all episode state (agent position,
    collected keys, opened doors, frame history) lives here. The instance
    RNG drives only in-episode noise (the blinker cell), so a trajectory is
    a pure function of (world, instance seed, action sequence).
    """

    n_actions = 6

    def __init__(self, world, rng=None, seed=0, index=0):
        self.world = world
        self.rng = rng if rng is not None else stream(seed, "env", index)
        size = world.size
        self._scale = max(1, OBS_HW // (size + 2))
        self._view = self._scale * (size + 2)
        if self._view > OBS_HW:
            raise ContractError(f"room size {size} does not fit a {OBS_HW} px view")
        self._offset = (OBS_HW - self._view) // 2
        self._room_base = [
            world.room_block(r).astype(np.int8).copy() for r in range(world.n_rooms)
        ]
        self._done = True
        self.episodes = 0

    @property
    def obs_shape(self):
        return (FRAME_STACK, OBS_HW, OBS_HW)

    def reset(self):
        self.pos = self.world.spawn
        self.steps = 0
        self.keys_held = 0
        self.collected = set()
        self.opened = set()
        self.visited = {self.world.room_of(self.pos)}
        self.blink_on = False
        self._done = False
        self.episodes += 1
        frame = self.render_frame()
        self._prev = frame
        return self._stack(frame)

    def _stack(self, frame):
        obs = np.stack([self._prev, frame])
        self._prev = frame
        return obs

    def _cell(self, pos):
        """Effective cell code after pickups and door openings."""
        code = self.world.grid[pos]
        if code == KEY and pos in self.collected:
            return FLOOR
        if code == LOCKED_DOOR and pos in self.opened:
            return DOOR
        return code

    def step(self, action):
        if self._done:
            raise StateError("step on a finished episode; call reset")
        if not 0 <= action < self.n_actions:
            raise ContractError(f"action must be in [0, 6), got {action}")
        world = self.world
        reward = 0.0
        done = False
        timeout = False

        if action in MOVES:
            dr, dc = MOVES[action]
            npos = (self.pos[0] + dr, self.pos[1] + dc)
            cell = self._cell(npos)
            if cell not in (WALL, LOCKED_DOOR):
                self.pos = npos
                if cell == KEY:
                    self.collected.add(npos)
                    self.keys_held += 1
                elif cell == HAZARD:
                    done = True
                elif cell == GOAL:
                    reward = 1.0
                    self.visited.add(world.room_of(npos))
                    if world.config["repeatable_pickup"]:
                        self.pos = world.spawn
                    else:
                        done = True
        elif action == INTERACT:
            for dr, dc in MOVES.values():
                npos = (self.pos[0] + dr, self.pos[1] + dc)
                if self._cell(npos) == LOCKED_DOOR and self.keys_held > 0:
                    self.opened.add(npos)
                    self.keys_held -= 1
                    break

        self.steps += 1
        if self.steps >= world.config["step_limit"] and not done:
            done = True
            timeout = True
        if world.blinker_cell is not None:
            self.blink_on = bool(self.rng.random() < 0.5)

        room = world.room_of(self.pos)
        self.visited.add(room)
        self._done = done
        frame = self.render_frame()
        info = {
            "room_id": room,
            "visited_rooms": len(self.visited),
            "timeout": timeout,
        }
        return self._stack(frame), reward, done, info

    def render_frame(self):
        """Current room as a (32, 32) float32 image in [0, 1]."""
        world = self.world
        room = world.room_of(self.pos)
        block = self._room_base[room].copy()
        ri, rj = divmod(room, world.rooms_w)
        s = world.size + 1
        origin = (ri * s, rj * s)

        def local(pos):
            return (pos[0] - origin[0], pos[1] - origin[1])

        def inside(lp):
            return 0 <= lp[0] <= s and 0 <= lp[1] <= s

        for pos in self.collected:
            lp = local(pos)
            if inside(lp):
                block[lp] = FLOOR
        for pos in self.opened:
            lp = local(pos)
            if inside(lp):
                block[lp] = DOOR

        img = np.empty(block.shape, dtype=np.float32)
        for code, gray in GRAY.items():
            img[block == code] = gray
        if world.blinker_cell is not None:
            lp = local(world.blinker_cell)
            if inside(lp) and block[lp] == BLINKER:
                img[lp] = BLINKER_ON_GRAY if self.blink_on else GRAY[FLOOR]
        img[local(self.pos)] = AGENT_GRAY

        canvas = np.full((OBS_HW, OBS_HW), GRAY[WALL], dtype=np.float32)
        scaled = np.kron(img, np.ones((self._scale, self._scale), dtype=np.float32))
        o = self._offset
        canvas[o : o + self._view, o : o + self._view] = scaled
        return canvas
