"""Scripted policies: stay, random, and a privileged greedy cook.

The greedy cook exists to exercise the dynamics and to certify that
layouts are playable, not to be a fair agent: it reads the full world
state. Learned policies plug in through the same Policy surface using
the masked observation instead.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .env import Action, EnvState, HeldItem
from .levels import ORIENTATION_DELTAS, Level, Orientation, Tile

MASKED = "masked"
PRIVILEGED = "privileged"

_MOVE_FOR_DIR = {
    Orientation.UP: Action.UP,
    Orientation.DOWN: Action.DOWN,
    Orientation.LEFT: Action.LEFT,
    Orientation.RIGHT: Action.RIGHT,
}
_MOVE_ACTIONS = (Action.LEFT, Action.RIGHT, Action.UP, Action.DOWN)


class Policy:
    """Interface: act maps (view, agent index, memory) to (action, memory).

    `observability` declares whether act receives the agent's masked
    observation stack or the full EnvState.
    """

    observability = MASKED

    def reset_memory(self, episode_seed: int | None = None):
        return None

    def act(self, view, agent: int, memory):
        raise NotImplementedError


class StayPolicy(Policy):
    observability = MASKED

    def act(self, view, agent, memory):
        return Action.STAY, memory


class RandomPolicy(Policy):
    """Uniform over all six actions from a seeded stream."""

    observability = MASKED

    def __init__(self, seed: int):
        self.seed = int(seed)

    def reset_memory(self, episode_seed: int | None = None):
        key = [self.seed] if episode_seed is None else [self.seed, episode_seed]
        return np.random.default_rng(np.random.SeedSequence(key))

    def act(self, view, agent, memory):
        return Action(int(memory.integers(6))), memory


def bfs_path(
    grid: np.ndarray,
    start: tuple[int, int],
    target: tuple[int, int],
    blocked: frozenset[tuple[int, int]] = frozenset(),
) -> list[tuple[int, int]] | None:
    """Shortest floor path from start to any floor cell adjacent to target.

    Expansion follows the up, down, left, right neighbour order, which
    fixes the path chosen among equals. Returns the cell list including
    the start, or None when the target is unreachable.
    """
    h, w = grid.shape
    goals = set()
    tr, tc = target
    for dr, dc in ORIENTATION_DELTAS:
        r, c = tr + dr, tc + dc
        if 0 <= r < h and 0 <= c < w and grid[r, c] == Tile.FLOOR and (r, c) not in blocked:
            goals.add((r, c))
    if not goals:
        return None
    if start in goals:
        return [start]
    parents: dict[tuple[int, int], tuple[int, int]] = {start: start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for dr, dc in ORIENTATION_DELTAS:
            nxt = (cur[0] + dr, cur[1] + dc)
            if nxt in parents or nxt in blocked:
                continue
            if grid[nxt[0], nxt[1]] != Tile.FLOOR:
                continue
            parents[nxt] = cur
            if nxt in goals:
                path = [nxt]
                while path[-1] != start:
                    path.append(parents[path[-1]])
                path.reverse()
                return path
            queue.append(nxt)
    return None


def bfs_path_to_cell(
    grid: np.ndarray,
    start: tuple[int, int],
    cell: tuple[int, int],
    blocked: frozenset[tuple[int, int]] = frozenset(),
) -> list[tuple[int, int]] | None:
    """Shortest floor path ending exactly on `cell` (same tie-break rules)."""
    if start == cell:
        return [start]
    if grid[cell[0], cell[1]] != Tile.FLOOR or cell in blocked:
        return None
    parents: dict[tuple[int, int], tuple[int, int]] = {start: start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for dr, dc in ORIENTATION_DELTAS:
            nxt = (cur[0] + dr, cur[1] + dc)
            if nxt in parents or nxt in blocked:
                continue
            if grid[nxt[0], nxt[1]] != Tile.FLOOR:
                continue
            parents[nxt] = cur
            if nxt == cell:
                path = [nxt]
                while path[-1] != start:
                    path.append(parents[path[-1]])
                path.reverse()
                return path
            queue.append(nxt)
    return None


def _direction_to(src: tuple[int, int], dst: tuple[int, int]) -> Orientation:
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    return Orientation(ORIENTATION_DELTAS.index((dr, dc)))


@dataclass
class NavMemory:
    rng: np.random.Generator
    last_joint: tuple | None = None
    repeat_streak: int = 0


class Navigator:
    """Shared movement logic: approach a station cell, face it, and break
    stand-offs with one random sidestep after eight repeated positions."""

    def __init__(self, stuck_limit: int = 8):
        self.stuck_limit = stuck_limit

    def act(
        self,
        state: EnvState,
        agent: int,
        target: tuple[int, int] | None,
        interact: bool,
        mem: NavMemory,
    ) -> Action:
        pos = (int(state.agent_pos[agent, 0]), int(state.agent_pos[agent, 1]))
        other = (int(state.agent_pos[1 - agent, 0]), int(state.agent_pos[1 - agent, 1]))
        joint = (pos, other)
        if mem.last_joint == joint:
            mem.repeat_streak += 1
        else:
            mem.repeat_streak = 0
        mem.last_joint = joint
        action = self._plan(state, agent, pos, target, interact)
        if action != Action.INTERACT and mem.repeat_streak >= self.stuck_limit:
            action = _MOVE_ACTIONS[int(mem.rng.integers(4))]
            mem.repeat_streak = 0
        return action

    def _plan(self, state, agent, pos, target, interact) -> Action:
        if target is None:
            return Action.STAY
        grid = state.level.grid
        tr, tc = target
        if abs(pos[0] - tr) + abs(pos[1] - tc) == 1:
            want = _direction_to(pos, target)
            if Orientation(int(state.agent_dir[agent])) != want:
                return _MOVE_FOR_DIR[want]  # bump-turn against the station
            return Action.INTERACT if interact else Action.STAY
        other = (int(state.agent_pos[1 - agent, 0]), int(state.agent_pos[1 - agent, 1]))
        path = bfs_path(grid, pos, target)
        if path is not None and other in path[1:]:
            path = bfs_path(grid, pos, target, blocked=frozenset((other,)))
        if path is None or len(path) < 2:
            return Action.STAY
        return _MOVE_FOR_DIR[_direction_to(pos, path[1])]


def floor_distances(
    grid: np.ndarray,
    start: tuple[int, int],
    blocked: frozenset[tuple[int, int]] = frozenset(),
) -> dict[tuple[int, int], int]:
    """BFS distance over floor cells from start (start included, dist 0)."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for dr, dc in ORIENTATION_DELTAS:
            nxt = (cur[0] + dr, cur[1] + dc)
            if (
                nxt not in dist
                and nxt not in blocked
                and grid[nxt[0], nxt[1]] == Tile.FLOOR
            ):
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def _nearest_by_dists(cells, dists):
    best = None
    best_d = None
    for cell in sorted(cells):
        d = None
        for dr, dc in ORIENTATION_DELTAS:
            adj = (cell[0] + dr, cell[1] + dc)
            if adj in dists and (d is None or dists[adj] < d):
                d = dists[adj]
        if d is not None and (best_d is None or d < best_d):
            best, best_d = cell, d
    return best


def nearest_station(
    state: EnvState, agent: int, cells: list[tuple[int, int]]
) -> tuple[int, int] | None:
    """Closest station cell by walking distance to any adjacent floor cell,
    ties broken in row-major cell order.

    Distances route around the partner's current cell so two cooks spread
    over equivalent stations; when that walls everything off, the partner
    is assumed to move eventually and is ignored instead.
    """
    if not cells:
        return None
    grid = state.level.grid
    pos = (int(state.agent_pos[agent, 0]), int(state.agent_pos[agent, 1]))
    other = (int(state.agent_pos[1 - agent, 0]), int(state.agent_pos[1 - agent, 1]))
    best = _nearest_by_dists(cells, floor_distances(grid, pos, frozenset((other,))))
    if best is None:
        best = _nearest_by_dists(cells, floor_distances(grid, pos))
    return best


class GreedyPolicy(Policy):
    """State-machine cook: fill the nearest pot, fetch a plate while the
    soup cooks, collect, and deliver to the nearest goal."""

    observability = PRIVILEGED

    def __init__(self):
        self.nav = Navigator()

    def reset_memory(self, episode_seed: int | None = None):
        key = [0x6B1C] if episode_seed is None else [0x6B1C, episode_seed]
        return NavMemory(rng=np.random.default_rng(np.random.SeedSequence(key)))

    def act(self, view: EnvState, agent: int, memory: NavMemory):
        target, interact = self._intent(view, agent)
        return self.nav.act(view, agent, target, interact, memory), memory

    def _intent(self, state: EnvState, agent: int):
        level = state.level
        held = HeldItem(int(state.held[agent]))
        pots = level.station_cells(Tile.POT)
        fillable = [p for p in pots if int(state.pot_onions[p]) < 3]
        ready = [
            p
            for p in pots
            if int(state.pot_onions[p]) == 3 and int(state.pot_timer[p]) == 0
        ]
        cooking = [p for p in pots if int(state.pot_timer[p]) > 0]

        if held == HeldItem.SOUP:
            return nearest_station(state, agent, level.station_cells(Tile.GOAL)), True
        if held == HeldItem.ONION:
            if fillable:
                return nearest_station(state, agent, fillable), True
            # Every pot is busy: wait back at the pile rather than camping
            # the pot lane the collector needs.
            return nearest_station(state, agent, level.station_cells(Tile.ONION_PILE)), False
        if held == HeldItem.PLATE:
            if ready:
                return nearest_station(state, agent, ready), True
            if cooking:
                return nearest_station(state, agent, cooking), False
            return nearest_station(state, agent, level.station_cells(Tile.PLATE_PILE)), False
        if ready or cooking:
            return nearest_station(state, agent, level.station_cells(Tile.PLATE_PILE)), True
        if fillable:
            return nearest_station(state, agent, level.station_cells(Tile.ONION_PILE)), True
        return None, False


class ParkPolicy(Policy):
    """Walk to a fixed floor cell and hold it.

    Used by the certificate replayer to move the helper out of a solo
    cook's way; shares the sidestep rule while still travelling."""

    observability = PRIVILEGED

    def __init__(self, cell: tuple[int, int]):
        self.cell = cell

    def reset_memory(self, episode_seed: int | None = None):
        key = [0x9A2B] if episode_seed is None else [0x9A2B, episode_seed]
        return NavMemory(rng=np.random.default_rng(np.random.SeedSequence(key)))

    def act(self, view: EnvState, agent: int, mem: NavMemory):
        pos = (int(view.agent_pos[agent, 0]), int(view.agent_pos[agent, 1]))
        if pos == self.cell:
            return Action.STAY, mem
        other = (int(view.agent_pos[1 - agent, 0]), int(view.agent_pos[1 - agent, 1]))
        joint = (pos, other)
        if mem.last_joint == joint:
            mem.repeat_streak += 1
        else:
            mem.repeat_streak = 0
        mem.last_joint = joint
        grid = view.level.grid
        path = bfs_path_to_cell(grid, pos, self.cell)
        if path is not None and other in path[1:]:
            path = bfs_path_to_cell(grid, pos, self.cell, blocked=frozenset((other,)))
        if path is None or len(path) < 2:
            action = Action.STAY
        else:
            action = _MOVE_FOR_DIR[_direction_to(pos, path[1])]
        if mem.repeat_streak >= 8:
            action = _MOVE_ACTIONS[int(mem.rng.integers(4))]
            mem.repeat_streak = 0
        return action, mem


_POLICY_SPEC_HELP = 'policy names: "stay", "random:<seed>", "greedy"'


def make_policy(spec: str) -> Policy:
    """Build a policy from its CLI name."""
    if spec == "stay":
        return StayPolicy()
    if spec == "greedy":
        return GreedyPolicy()
    if spec.startswith("random:"):
        try:
            return RandomPolicy(int(spec.split(":", 1)[1]))
        except ValueError:
            raise ValueError(f"bad random seed in {spec!r}; {_POLICY_SPEC_HELP}")
    raise ValueError(f"unknown policy {spec!r}; {_POLICY_SPEC_HELP}")
