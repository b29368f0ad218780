"""Domain-randomised level sampling.

Layouts are drawn on a bordered canvas: a uniformly random number of
interior walls, one or two stations of each kind on wall-adjacent or
wall cells, and two agent starts. Solvability is intentionally not
checked; identifying useful layouts is the curriculum's job.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .levels import DEFAULT_CANVAS, MAX_WALLS, Level, Orientation, Tile, validate

STATION_ORDER = (Tile.GOAL, Tile.ONION_PILE, Tile.POT, Tile.PLATE_PILE)


@dataclass(frozen=True)
class GeneratorConfig:
    canvas_h: int = DEFAULT_CANVAS[0]
    canvas_w: int = DEFAULT_CANVAS[1]
    wall_range: tuple[int, int] = (0, MAX_WALLS)
    station_range: tuple[int, int] = (1, 2)
    max_walls: int = MAX_WALLS
    retry_limit: int = 100

    def __post_init__(self):
        lo, hi = self.wall_range
        if not 0 <= lo <= hi <= self.max_walls:
            raise ValueError(f"wall_range {self.wall_range} outside [0, {self.max_walls}]")
        lo, hi = self.station_range
        if not 1 <= lo <= hi <= 2:
            raise ValueError(f"station_range {self.station_range} outside [1, 2]")
        # Walls must at least fit; tighter squeezes surface as
        # GenerationError after bounded retries.
        if self.canvas_h < 4 or self.canvas_w < 4:
            raise ValueError(f"canvas {self.canvas_h}x{self.canvas_w} too small")
        interior = (self.canvas_h - 2) * (self.canvas_w - 2)
        if interior < self.wall_range[1]:
            raise ValueError(
                f"wall range {self.wall_range} cannot fit a "
                f"{self.canvas_h}x{self.canvas_w} canvas"
            )


class GenerationError(RuntimeError):
    """Placement was exhausted repeatedly; the canvas is too constrained."""


def _try_sample(rng: np.random.Generator, config: GeneratorConfig) -> Level | None:
    h, w = config.canvas_h, config.canvas_w
    grid = np.full((h, w), Tile.WALL, dtype=np.int8)
    grid[1:-1, 1:-1] = Tile.FLOOR

    interior = [(r, c) for r in range(1, h - 1) for c in range(1, w - 1)]
    n_walls = int(rng.integers(config.wall_range[0], config.wall_range[1] + 1))
    for i in rng.choice(len(interior), size=n_walls, replace=False):
        grid[interior[i]] = Tile.WALL

    # Stations sit on interior wall cells or claim a floor cell that
    # touches a wall, mirroring how hand-made kitchens hug their counters.
    for tile in STATION_ORDER:
        count = int(rng.integers(config.station_range[0], config.station_range[1] + 1))
        for _ in range(count):
            candidates = _station_candidates(grid)
            if len(candidates) == 0:
                return None
            r, c = candidates[int(rng.integers(len(candidates)))]
            grid[r, c] = tile

    floors = np.argwhere(grid == Tile.FLOOR)
    if len(floors) < 2:
        return None
    picks = rng.choice(len(floors), size=2, replace=False)
    starts = tuple(
        (int(floors[i][0]), int(floors[i][1]), Orientation.UP) for i in picks
    )
    level = Level(h, w, grid, starts)
    return level if validate(level, config.max_walls).valid else None


def _station_candidates(grid: np.ndarray) -> np.ndarray:
    wallish = grid == Tile.WALL
    near_wall = np.zeros_like(wallish)
    near_wall[1:, :] |= wallish[:-1, :]
    near_wall[:-1, :] |= wallish[1:, :]
    near_wall[:, 1:] |= wallish[:, :-1]
    near_wall[:, :-1] |= wallish[:, 1:]
    ok = wallish | ((grid == Tile.FLOOR) & near_wall)
    ok[0, :] = ok[-1, :] = False
    ok[:, 0] = ok[:, -1] = False
    return np.argwhere(ok)


def sample_level(rng: np.random.Generator, config: GeneratorConfig = GeneratorConfig()) -> Level:
    """Draw one random layout; always returns a valid level."""
    for _ in range(config.retry_limit):
        level = _try_sample(rng, config)
        if level is not None:
            return level
    raise GenerationError(
        f"no valid layout after {config.retry_limit} attempts on "
        f"{config.canvas_h}x{config.canvas_w}"
    )


def sample_batch(
    rng: np.random.Generator, config: GeneratorConfig = GeneratorConfig(), k: int = 1
) -> list[Level]:
    """k independent draws from per-slot substreams, so slot i's level does
    not depend on how many other slots were drawn."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [sample_level(slot_rng, config) for slot_rng in rng.spawn(k)]
