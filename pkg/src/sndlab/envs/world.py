"""Procedural multi-room world generation.

A world is a static grid of rooms connected by doors carved into shared
walls. The goal sits in the room farthest (by door-graph distance) from the
spawn room, so reaching it requires traversing most of the world; this is
what makes the extrinsic reward sparse. Layouts are pure functions of the
seed and config, and every generated world is checked for solvability before
being returned.
"""

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, GenerationError
from ..seeding import stream

# cell codes in the grid
FLOOR = 0
WALL = 1
DOOR = 2
LOCKED_DOOR = 3
KEY = 4
HAZARD = 5
GOAL = 6
BLINKER = 7

_CELL_CHARS = ".#DLKHGB"

# actions
UP, DOWN, LEFT, RIGHT, INTERACT, NOOP = range(6)
ACTIONS = ("up", "down", "left", "right", "interact", "noop")
MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

DEFAULT_WORLD_CONFIG = {
    "rooms": 9,
    "size": 9,
    "hazard_density": 0.0,
    "step_limit": 256,
    "extra_door_prob": 0.0,
    "keys": 0,
    "locked_doors": 0,
    "blinker": False,
    "repeatable_pickup": False,
}


@dataclass
class World:
    """Immutable layout shared by all env instances of a run."""

    seed: int
    config: dict
    grid: np.ndarray
    spawn: tuple
    goal: tuple
    rooms_h: int
    rooms_w: int
    blinker_cell: tuple = None
    _room_cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self):
        return self.config["size"]

    @property
    def n_rooms(self):
        return self.rooms_h * self.rooms_w

    def room_of(self, pos):
        """Room index for a cell; door cells belong to the top/left room."""
        r, c = pos
        s = self.size + 1
        ri = min((r - 1) // s, self.rooms_h - 1)
        rj = min((c - 1) // s, self.rooms_w - 1)
        return ri * self.rooms_w + rj

    def room_block(self, room):
        """Grid slice of a room including its surrounding walls and doors."""
        ri, rj = divmod(room, self.rooms_w)
        s = self.size + 1
        return self.grid[ri * s : ri * s + s + 1, rj * s : rj * s + s + 1]

    def interior_cells(self, room):
        ri, rj = divmod(room, self.rooms_w)
        s = self.size + 1
        return [
            (r, c)
            for r in range(ri * s + 1, ri * s + 1 + self.size)
            for c in range(rj * s + 1, rj * s + 1 + self.size)
        ]

    def door_graph(self):
        """Adjacency sets between rooms induced by door cells."""
        adj = {r: set() for r in range(self.n_rooms)}
        s = self.size + 1
        for (r, c), code in np.ndenumerate(self.grid):
            if code not in (DOOR, LOCKED_DOOR):
                continue
            if r % s == 0:  # horizontal wall: connects room above and below
                a = self.room_of((r - 1, c))
                b = self.room_of((r + 1, c))
            else:
                a = self.room_of((r, c - 1))
                b = self.room_of((r, c + 1))
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def to_json(self):
        rows = ["".join(_CELL_CHARS[v] for v in row) for row in self.grid]
        return json.dumps(
            {
                "seed": self.seed,
                "config": self.config,
                "grid": rows,
                "spawn": list(self.spawn),
                "goal": list(self.goal),
                "rooms_h": self.rooms_h,
                "rooms_w": self.rooms_w,
                "blinker_cell": list(self.blinker_cell) if self.blinker_cell else None,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        grid = np.array(
            [[_CELL_CHARS.index(ch) for ch in row] for row in d["grid"]],
            dtype=np.int8,
        )
        return cls(
            seed=d["seed"],
            config=d["config"],
            grid=grid,
            spawn=tuple(d["spawn"]),
            goal=tuple(d["goal"]),
            rooms_h=d["rooms_h"],
            rooms_w=d["rooms_w"],
            blinker_cell=tuple(d["blinker_cell"]) if d["blinker_cell"] else None,
        )


def _room_layout(n_rooms):
    rh = int(np.sqrt(n_rooms))
    while n_rooms % rh:
        rh -= 1
    return rh, n_rooms // rh


def solvable(world):
    """BFS from spawn to goal over walkable cells, tracking keys and doors.

    Keys are collected by walking over them and any key opens any locked
    door, so the search state is (cell, collected keys, opened doors).
    """
    grid = world.grid
    start = (world.spawn, frozenset(), frozenset())
    seen = {start}
    queue = deque([start])
    while queue:
        (pos, col, opened) = queue.popleft()
        if pos == world.goal:
            return True
        for dr, dc in MOVES.values():
            npos = (pos[0] + dr, pos[1] + dc)
            cell = grid[npos]
            if cell in (WALL, HAZARD):
                continue
            if cell == LOCKED_DOOR and npos not in opened:
                # interact from here if a key is in hand
                if len(col) - len(opened) > 0:
                    nstate = (pos, col, opened | {npos})
                    if nstate not in seen:
                        seen.add(nstate)
                        queue.append(nstate)
                continue
            ncol = col | {npos} if cell == KEY else col
            nstate = (npos, ncol, opened)
            if nstate not in seen:
                seen.add(nstate)
                queue.append(nstate)
    return False


def _generate_attempt(rng, config):
    n_rooms = config["rooms"]
    size = config["size"]
    rh, rw = _room_layout(n_rooms)
    s = size + 1
    gh, gw = rh * s + 1, rw * s + 1
    grid = np.full((gh, gw), FLOOR, dtype=np.int8)

    # walls on every room boundary line
    for i in range(rh + 1):
        grid[i * s, :] = WALL
    for j in range(rw + 1):
        grid[:, j * s] = WALL

    # door per spanning-tree edge over the room lattice, extras by config
    edges = []
    for ri in range(rh):
        for rj in range(rw):
            if rj + 1 < rw:
                edges.append(((ri, rj), (ri, rj + 1)))
            if ri + 1 < rh:
                edges.append(((ri, rj), (ri + 1, rj)))
    order = rng.permutation(len(edges))
    parent = {(ri, rj): (ri, rj) for ri in range(rh) for rj in range(rw)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    doors = []
    for idx in order:
        a, b = edges[idx]
        ra, rb = find(a), find(b)
        extra = rng.random() < config["extra_door_prob"]
        if ra == rb and not extra:
            continue
        parent[ra] = rb
        off = int(rng.integers(1, size + 1))
        if a[0] == b[0]:  # vertical wall between horizontal neighbours
            cell = (a[0] * s + off, max(a[1], b[1]) * s)
        else:
            cell = (max(a[0], b[0]) * s, a[1] * s + off)
        grid[cell] = DOOR
        doors.append(cell)

    world = World(
        seed=0,
        config=config,
        grid=grid,
        spawn=(0, 0),
        goal=(0, 0),
        rooms_h=rh,
        rooms_w=rw,
    )

    spawn = (1 + size // 2, 1 + size // 2)  # centre of room 0
    world.spawn = spawn

    # goal goes to a farthest room by door-graph distance
    adj = world.door_graph()
    dist = {0: 0}
    queue = deque([0])
    while queue:
        r = queue.popleft()
        for nb in adj[r]:
            if nb not in dist:
                dist[nb] = dist[r] + 1
                queue.append(nb)
    if len(dist) < world.n_rooms:
        return None
    far = max(dist.values())
    goal_room = int(rng.choice(sorted(r for r, d in dist.items() if d == far)))
    cells = [c for c in world.interior_cells(goal_room) if c != spawn]
    world.goal = cells[int(rng.integers(len(cells)))]
    grid[world.goal] = GOAL

    # lock a subset of doors and scatter as many keys plus any surplus
    n_locked = min(config["locked_doors"], len(doors))
    if n_locked:
        for idx in rng.choice(len(doors), size=n_locked, replace=False):
            grid[doors[idx]] = LOCKED_DOOR
    for _ in range(max(config["keys"], n_locked)):
        free = [
            c
            for room in range(world.n_rooms)
            for c in world.interior_cells(room)
            if grid[c] == FLOOR and c != spawn
        ]
        grid[free[int(rng.integers(len(free)))]] = KEY

    if config["hazard_density"] > 0:
        for room in range(world.n_rooms):
            for cell in world.interior_cells(room):
                if grid[cell] == FLOOR and cell != spawn:
                    if rng.random() < config["hazard_density"]:
                        grid[cell] = HAZARD

    if config["blinker"]:
        free = [c for c in world.interior_cells(0) if grid[c] == FLOOR and c != spawn]
        world.blinker_cell = free[int(rng.integers(len(free)))]
        grid[world.blinker_cell] = BLINKER

    return world


def generate_world(seed, config=None):
    """Solvable World for the seed; retries generation up to 100 times."""
    cfg = dict(DEFAULT_WORLD_CONFIG)
    if config:
        unknown = set(config) - set(cfg)
        if unknown:
            raise ContractError(f"unknown world config keys: {sorted(unknown)}")
        cfg.update(config)
    if cfg["rooms"] < 1:
        raise ContractError(f"rooms must be >= 1, got {cfg['rooms']}")
    if not 5 <= cfg["size"] <= 30:
        raise ContractError(f"size must be in [5, 30], got {cfg['size']}")
    rng = stream(seed, "world")
    for _ in range(100):
        world = _generate_attempt(rng, cfg)
        if world is not None and solvable(world):
            world.seed = seed
            return world
    raise GenerationError(
        f"no solvable world in 100 attempts for seed {seed} and config {cfg}"
    )
