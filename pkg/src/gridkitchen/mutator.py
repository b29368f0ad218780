"""Edit-based level mutation.

Five primitive operations: toggling one wall cell and relocating one
goal, pot, plate pile or onion pile. Agent starts are never touched, the
wall budget is never exceeded, and the output always validates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .levels import (
    MAX_WALLS,
    Level,
    Tile,
    interior_wall_count,
    validate,
)

_RESAMPLE_BOUND = 20


@dataclass(frozen=True)
class ToggleWall:
    cell: tuple[int, int]


@dataclass(frozen=True)
class MoveStation:
    tile: Tile
    source: tuple[int, int]
    target: tuple[int, int]


MutationOp = ToggleWall | MoveStation

_MOVABLE = (Tile.GOAL, Tile.POT, Tile.PLATE_PILE, Tile.ONION_PILE)


def op_to_record(op: MutationOp) -> dict:
    """JSON form of one op, for reproducibility logs."""
    if isinstance(op, ToggleWall):
        return {"op": "toggle_wall", "cell": list(op.cell)}
    return {
        "op": f"move_{op.tile.name.lower()}",
        "from": list(op.source),
        "to": list(op.target),
    }


def apply_op(level: Level, op: MutationOp, max_walls: int = MAX_WALLS) -> Level | None:
    """Apply a single edit, or return None when it is inapplicable.

    ToggleWall flips floor/wall on a non-border, non-station, non-start
    cell, refusing to exceed the wall budget. MoveStation relocates one
    station instance onto a plain wall (border included) or a free floor
    cell; its old cell reverts to wall on the border and floor inside.
    """
    grid = level.grid
    agent_cells = {(r, c) for r, c, _ in level.agent_starts}

    if isinstance(op, ToggleWall):
        r, c = op.cell
        if not (1 <= r < level.height - 1 and 1 <= c < level.width - 1):
            return None
        if (r, c) in agent_cells:
            return None
        tile = Tile(int(grid[r, c]))
        if tile == Tile.FLOOR:
            new = grid.copy()
            new[r, c] = Tile.WALL
            out = Level(level.height, level.width, new, level.agent_starts)
            if interior_wall_count(out) > max_walls:
                return None
            return out
        if tile == Tile.WALL:
            new = grid.copy()
            new[r, c] = Tile.FLOOR
            return Level(level.height, level.width, new, level.agent_starts)
        return None

    sr, sc = op.source
    tr, tc = op.target
    if (sr, sc) == (tr, tc):
        return None
    if grid[sr, sc] != op.tile:
        return None
    if (tr, tc) in agent_cells or grid[tr, tc] not in (Tile.WALL, Tile.FLOOR):
        return None
    new = grid.copy()
    on_border = sr in (0, level.height - 1) or sc in (0, level.width - 1)
    new[sr, sc] = Tile.WALL if on_border else Tile.FLOOR
    new[tr, tc] = op.tile
    return Level(level.height, level.width, new, level.agent_starts)


def _sample_op(level: Level, rng: np.random.Generator) -> MutationOp:
    kind = int(rng.integers(5))
    if kind == 0:
        r = int(rng.integers(1, level.height - 1))
        c = int(rng.integers(1, level.width - 1))
        return ToggleWall((r, c))
    tile = _MOVABLE[kind - 1]
    cells = level.station_cells(tile)
    source = cells[int(rng.integers(len(cells)))] if cells else (0, 0)
    tr = int(rng.integers(level.height))
    tc = int(rng.integers(level.width))
    return MoveStation(tile, source, (tr, tc))


def mutate_trace(
    level: Level,
    n: int,
    rng: np.random.Generator,
    max_walls: int = MAX_WALLS,
) -> tuple[Level, list[MutationOp], int]:
    """Apply n sampled edits; returns (level, applied ops, skipped count).

    Inapplicable draws are resampled up to a bound per edit so the
    effective strength stays near n; a fully stuck edit is skipped.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    applied: list[MutationOp] = []
    skipped = 0
    current = level
    for _ in range(n):
        for _ in range(_RESAMPLE_BOUND):
            op = _sample_op(current, rng)
            nxt = apply_op(current, op, max_walls)
            if nxt is not None:
                current = nxt
                applied.append(op)
                break
        else:
            skipped += 1
    report = validate(current, max_walls)
    if not report.valid:  # unreachable by construction; fail loudly if not
        from .levels import LevelError

        raise LevelError(report)
    return current, applied, skipped


def mutate(
    level: Level, n: int, rng: np.random.Generator, max_walls: int = MAX_WALLS
) -> Level:
    """Apply n random edits and return the edited level."""
    out, _, _ = mutate_trace(level, n, rng, max_walls)
    return out
