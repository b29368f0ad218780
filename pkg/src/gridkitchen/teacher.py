"""Sequential level-design environment for teacher-driven curricula.

A designer builds one layout by addressing canvas cells: the first action
fixes the wall budget, then walls, the two agents, and two placements of
each station kind go down in a fixed order. Placements colliding with a
different element relocate to a random free cell; a same-type collision
is skipped, which is how single-station layouts arise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .levels import (
    DEFAULT_CANVAS,
    MAX_WALLS,
    Level,
    LevelError,
    Orientation,
    Tile,
    ValidationReport,
    Violation,
    validate,
    wall_tile_count,
)


class ElementKind(enum.IntEnum):
    WALL_BUDGET = 0
    WALL = 1
    AGENT1 = 2
    AGENT2 = 3
    GOAL = 4
    ONION_PILE = 5
    POT = 6
    PLATE_PILE = 7
    DONE = 8


_STATION_PHASES = (
    ElementKind.GOAL,
    ElementKind.GOAL,
    ElementKind.ONION_PILE,
    ElementKind.ONION_PILE,
    ElementKind.POT,
    ElementKind.POT,
    ElementKind.PLATE_PILE,
    ElementKind.PLATE_PILE,
)

_KIND_TO_TILE = {
    ElementKind.GOAL: Tile.GOAL,
    ElementKind.ONION_PILE: Tile.ONION_PILE,
    ElementKind.POT: Tile.POT,
    ElementKind.PLATE_PILE: Tile.PLATE_PILE,
}


@dataclass(frozen=True)
class TeacherConfig:
    canvas_h: int = DEFAULT_CANVAS[0]
    canvas_w: int = DEFAULT_CANVAS[1]
    max_walls: int = MAX_WALLS
    noise_dim: int = 50

    def __post_init__(self):
        interior = (self.canvas_h - 2) * (self.canvas_w - 2)
        # Worst case placements: budget walls, two agents, eight stations,
        # and one spare cell so relocation always succeeds.
        if interior < self.max_walls + 11:
            raise ValueError(
                f"canvas {self.canvas_h}x{self.canvas_w} too small for "
                f"max_walls={self.max_walls}"
            )

    @property
    def num_actions(self) -> int:
        return self.canvas_h * self.canvas_w


@dataclass(frozen=True)
class TeacherState:
    config: TeacherConfig
    grid: np.ndarray  # canvas (h, w) int8 Tile codes, read-only
    agents: tuple[tuple[int, int], ...]  # cells placed so far
    budget: int  # 0 until the first action fixes it
    t: int
    noise: np.ndarray  # (noise_dim,) float64, constant per episode
    reloc_seed: int
    reloc_draws: int

    @property
    def phase(self) -> ElementKind:
        if self.t == 0:
            return ElementKind.WALL_BUDGET
        if self.t <= self.budget:
            return ElementKind.WALL
        i = self.t - self.budget - 1
        if i == 0:
            return ElementKind.AGENT1
        if i == 1:
            return ElementKind.AGENT2
        i -= 2
        if i < len(_STATION_PHASES):
            return _STATION_PHASES[i]
        return ElementKind.DONE

    @property
    def episode_length(self) -> int:
        # Only defined once the budget is fixed.
        return 1 + self.budget + 2 + len(_STATION_PHASES)


@dataclass(frozen=True)
class TeacherObservation:
    masks: np.ndarray  # (7, h, w) bool: six tile layers plus placed agents
    next_element: int  # ElementKind of the upcoming placement
    remaining_budget: int
    time: int
    noise: np.ndarray


def teacher_reset(rng: np.random.Generator, config: TeacherConfig = TeacherConfig()) -> TeacherState:
    """Empty bordered canvas, budget not yet set, episode noise drawn."""
    grid = np.full((config.canvas_h, config.canvas_w), Tile.WALL, dtype=np.int8)
    grid[1:-1, 1:-1] = Tile.FLOOR
    grid.setflags(write=False)
    noise = rng.random(config.noise_dim)
    noise.setflags(write=False)
    return TeacherState(
        config=config,
        grid=grid,
        agents=(),
        budget=0,
        t=0,
        noise=noise,
        reloc_seed=int(rng.integers(np.iinfo(np.int64).max)),
        reloc_draws=0,
    )


def _free_cells(state: TeacherState) -> list[tuple[int, int]]:
    taken = set(state.agents)
    rows, cols = np.nonzero(state.grid == Tile.FLOOR)
    return [
        (int(r), int(c)) for r, c in zip(rows, cols) if (int(r), int(c)) not in taken
    ]


def _relocate(state: TeacherState) -> tuple[tuple[int, int], int]:
    """Pick a uniformly random free cell; returns (cell, new draw count).

    Each draw comes from its own keyed substream so transitions stay pure.
    """
    free = _free_cells(state)
    if not free:
        raise RuntimeError("no free cell left for relocation")
    key = np.random.SeedSequence([state.reloc_seed, state.reloc_draws])
    pick = int(np.random.default_rng(key).integers(len(free)))
    return free[pick], state.reloc_draws + 1


class DesignDone(RuntimeError):
    pass


def teacher_step(state: TeacherState, action: int) -> tuple[TeacherState, bool]:
    """Apply one design action (a cell index in [0, h*w)).

    Returns the next state and whether the design episode just finished.
    """
    phase = state.phase
    if phase == ElementKind.DONE:
        raise DesignDone("design episode already complete")
    cfg = state.config
    if not 0 <= action < cfg.num_actions:
        raise ValueError(f"action {action} outside [0, {cfg.num_actions})")
    r, c = divmod(int(action), cfg.canvas_w)

    grid = state.grid
    agents = state.agents
    budget = state.budget
    draws = state.reloc_draws

    if phase == ElementKind.WALL_BUDGET:
        budget = 1 + int(action) % cfg.max_walls
    elif phase == ElementKind.WALL:
        # Walls striking anything already solid are simply skipped, which
        # keeps the budget an upper bound rather than an exact count.
        if grid[r, c] == Tile.FLOOR and (r, c) not in agents:
            new = grid.copy()
            new[r, c] = Tile.WALL
            new.setflags(write=False)
            grid = new
    elif phase in (ElementKind.AGENT1, ElementKind.AGENT2):
        # The two agents are distinct elements: colliding with anything,
        # including the other agent, relocates rather than skips.
        if grid[r, c] != Tile.FLOOR or (r, c) in agents:
            (r, c), draws = _relocate(state)
        agents = agents + ((r, c),)
    else:
        tile = _KIND_TO_TILE[phase]
        if grid[r, c] == tile:
            pass  # same type: second placement is dropped
        else:
            if grid[r, c] != Tile.FLOOR or (r, c) in agents:
                (r, c), draws = _relocate(state)
            new = grid.copy()
            new[r, c] = tile
            new.setflags(write=False)
            grid = new

    nxt = replace(
        state, grid=grid, agents=agents, budget=budget, t=state.t + 1, reloc_draws=draws
    )
    return nxt, nxt.phase == ElementKind.DONE


def observe_teacher(state: TeacherState) -> TeacherObservation:
    h, w = state.grid.shape
    masks = np.zeros((7, h, w), dtype=bool)
    for tile in Tile:
        masks[int(tile)] = state.grid == tile
    for r, c in state.agents:
        masks[6, r, c] = True
    walls_placed = max(0, min(state.t - 1, state.budget)) if state.budget else 0
    return TeacherObservation(
        masks=masks,
        next_element=int(state.phase),
        remaining_budget=state.budget - walls_placed if state.budget else 0,
        time=state.t,
        noise=state.noise,
    )


def finalize(state: TeacherState) -> Level:
    """Turn a completed design episode into a level."""
    if state.phase != ElementKind.DONE:
        raise DesignDone(f"design still in phase {state.phase.name}")
    starts = tuple((r, c, Orientation.UP) for r, c in state.agents)
    level = Level(state.config.canvas_h, state.config.canvas_w, state.grid.copy(), starts)
    report = validate(level, state.config.max_walls)
    if not report.valid:  # unreachable by construction; fail loudly if not
        raise LevelError(report)
    return level


def random_teacher_episode(
    rng: np.random.Generator, config: TeacherConfig = TeacherConfig()
) -> tuple[Level, list[int]]:
    """Roll a uniformly random designer; returns the level and its script."""
    state = teacher_reset(rng, config)
    script: list[int] = []
    done = False
    while not done:
        action = int(rng.integers(config.num_actions))
        script.append(action)
        state, done = teacher_step(state, action)
    return finalize(state), script


def script_for_level(level: Level, config: TeacherConfig = TeacherConfig()) -> list[int]:
    """Action script that rebuilds the given level exactly.

    Works for any level on the configured canvas whose agents face up and
    whose interior wall tiles fit the budget; no placement in the script
    ever collides, so replay is independent of the relocation stream.
    """
    if (level.height, level.width) != (config.canvas_h, config.canvas_w):
        raise LevelError(
            ValidationReport(
                (Violation("canvas", "level does not match the design canvas"),)
            )
        )
    if any(d != Orientation.UP for _, _, d in level.agent_starts):
        raise LevelError(
            ValidationReport(
                (Violation("orientation", "scripted designs place agents facing up"),)
            )
        )
    walls = sorted(
        (int(r), int(c))
        for r, c in np.argwhere(np.asarray(level.grid) == Tile.WALL)
        if 0 < r < level.height - 1 and 0 < c < level.width - 1
    )
    if len(walls) > config.max_walls:
        raise LevelError(
            ValidationReport(
                (Violation("wall-budget", f"{len(walls)} walls exceed the budget"),)
            )
        )
    w = config.canvas_w

    def cell_action(cell: tuple[int, int]) -> int:
        return cell[0] * w + cell[1]

    budget = max(1, len(walls))
    script = [budget - 1]
    if walls:
        script += [cell_action(cell) for cell in walls]
    else:
        script.append(0)  # hits the border and is skipped
    script += [cell_action((r, c)) for r, c, _ in level.agent_starts]
    for kind in (Tile.GOAL, Tile.ONION_PILE, Tile.POT, Tile.PLATE_PILE):
        cells = sorted(level.station_cells(kind))
        if len(cells) == 1:
            cells = cells * 2  # the duplicate is dropped, leaving one
        script += [cell_action(cell) for cell in cells]
    return script


def replay_script(
    script: list[int], config: TeacherConfig = TeacherConfig(), seed: int = 0
) -> Level:
    """Run a script through the design environment and finalize it."""
    state = teacher_reset(np.random.default_rng(seed), config)
    done = False
    for action in script:
        if done:
            raise DesignDone("script longer than the design episode")
        state, done = teacher_step(state, action)
    return finalize(state)
