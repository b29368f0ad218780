"""Kitchen layout model: tiles, ASCII/JSON formats, validation, padding, hashing.

A level is a rectangular tile grid plus exactly two agent start poses. The
outermost ring of cells is always impassable, station tiles (onion pile,
plate pile, pot, goal) are impassable like walls, and every layout carries
between one and two stations of each kind.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

MAX_WALLS = 15
DEFAULT_CANVAS = (6, 9)


class Tile(enum.IntEnum):
    FLOOR = 0
    WALL = 1
    ONION_PILE = 2
    PLATE_PILE = 3
    POT = 4
    GOAL = 5


STATION_TILES = (Tile.ONION_PILE, Tile.PLATE_PILE, Tile.POT, Tile.GOAL)


class Orientation(enum.IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


# (drow, dcol) indexed by Orientation value.
ORIENTATION_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

AGENT_CHAR = "A"
_TILE_TO_CHAR = {
    Tile.FLOOR: " ",
    Tile.WALL: "W",
    Tile.ONION_PILE: "O",
    Tile.PLATE_PILE: "B",
    Tile.POT: "P",
    Tile.GOAL: "G",
}
_CHAR_TO_TILE = {c: t for t, c in _TILE_TO_CHAR.items()}

_ORIENTATION_NAMES = {o: o.name.lower() for o in Orientation}
_NAMES_TO_ORIENTATION = {n: o for o, n in _ORIENTATION_NAMES.items()}


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    cell: tuple[int, int] | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"{v.rule}: {v.message}" for v in self.violations)


class LevelError(ValueError):
    """Raised for malformed level text or an invalid layout.

    Carries a ValidationReport describing every detected problem.
    """

    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


def _error(rule: str, message: str, cell=None) -> LevelError:
    return LevelError(ValidationReport((Violation(rule, message, cell),)))


@dataclass(frozen=True, eq=False)
class Level:
    """A fully specified layout: tile grid plus two agent start poses.

    The grid is stored as a read-only int8 array of Tile codes; agent
    starts are (row, col, Orientation) triples on distinct floor cells.
    """

    height: int
    width: int
    grid: np.ndarray
    agent_starts: tuple[tuple[int, int, Orientation], ...]

    def __post_init__(self):
        grid = np.ascontiguousarray(self.grid, dtype=np.int8)
        grid = grid.reshape(self.height, self.width)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        starts = tuple(
            (int(r), int(c), Orientation(d)) for (r, c, d) in self.agent_starts
        )
        object.__setattr__(self, "agent_starts", starts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Level):
            return NotImplemented
        return (
            self.height == other.height
            and self.width == other.width
            and bool(np.array_equal(self.grid, other.grid))
            and self.agent_starts == other.agent_starts
        )

    def __hash__(self) -> int:
        return level_digest(self)

    def tile_count(self, tile: Tile) -> int:
        return int(np.count_nonzero(self.grid == tile))

    def station_cells(self, tile: Tile) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.grid == tile)
        return [(int(r), int(c)) for r, c in zip(rows, cols)]


def parse_ascii(text: str) -> Level:
    """Parse a level from its ASCII form.

    Alphabet: W wall, space floor, O onion pile, B plate pile, P pot,
    G goal, A agent start (a floor cell; agents are numbered in row-major
    order and face up). The text must be rectangular and contain exactly
    two agents, and the resulting layout must validate.
    """
    rows = text.split("\n")
    if rows and rows[-1] == "":
        rows = rows[:-1]
    if not rows:
        raise _error("empty", "no rows")
    width = len(rows[0])
    agents = []
    grid = np.zeros((len(rows), width), dtype=np.int8)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise _error("ragged", f"row {r} has length {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch == AGENT_CHAR:
                agents.append((r, c, Orientation.UP))
                grid[r, c] = Tile.FLOOR
            elif ch in _CHAR_TO_TILE:
                grid[r, c] = _CHAR_TO_TILE[ch]
            else:
                raise _error("symbol", f"unknown symbol {ch!r}", (r, c))
    if len(agents) != 2:
        raise _error("agent-count", f"expected 2 agents, found {len(agents)}")
    level = Level(len(rows), width, grid, tuple(agents))
    report = validate(level)
    if not report.valid:
        raise LevelError(report)
    return level


def render_ascii(level: Level) -> str:
    """Render the canonical ASCII form (inverse of parse_ascii; orientation
    is not encoded, so only levels whose agents face up round-trip exactly)."""
    chars = [
        [_TILE_TO_CHAR[Tile(t)] for t in row] for row in level.grid.tolist()
    ]
    for r, c, _ in level.agent_starts:
        chars[r][c] = AGENT_CHAR
    return "\n".join("".join(row) for row in chars)


def interior_wall_count(level: Level) -> int:
    """Number of effective interior walls: plain wall cells off the border
    that touch at least one floor cell.

    Buried filler walls (e.g. produced by padding) do not shape the playable
    space and are not charged against the wall budget.
    """
    g = level.grid
    wall = g == Tile.WALL
    floor = g == Tile.FLOOR
    near_floor = np.zeros_like(floor)
    near_floor[1:, :] |= floor[:-1, :]
    near_floor[:-1, :] |= floor[1:, :]
    near_floor[:, 1:] |= floor[:, :-1]
    near_floor[:, :-1] |= floor[:, 1:]
    interior = np.zeros_like(wall)
    interior[1:-1, 1:-1] = True
    return int(np.count_nonzero(wall & interior & near_floor))


def wall_tile_count(level: Level) -> int:
    """Raw count of plain wall tiles strictly inside the border."""
    interior = level.grid[1:-1, 1:-1]
    return int(np.count_nonzero(interior == Tile.WALL))


_STATION_RULES = (
    (Tile.ONION_PILE, "onion-pile-count"),
    (Tile.PLATE_PILE, "plate-pile-count"),
    (Tile.POT, "pot-count"),
    (Tile.GOAL, "goal-count"),
)


def validate(level: Level, max_walls: int = MAX_WALLS) -> ValidationReport:
    """Check every layout invariant and report all violations."""
    v: list[Violation] = []
    g = level.grid
    h, w = level.height, level.width
    if h < 3 or w < 3:
        v.append(Violation("size", f"grid {h}x{w} too small for a border"))
        return ValidationReport(tuple(v))

    border = np.ones((h, w), dtype=bool)
    border[1:-1, 1:-1] = False
    bad = (g == Tile.FLOOR) & border
    for r, c in zip(*np.nonzero(bad)):
        v.append(Violation("border-floor", "border cell is walkable", (int(r), int(c))))

    for tile, rule in _STATION_RULES:
        n = level.tile_count(tile)
        if not 1 <= n <= 2:
            v.append(Violation(rule, f"found {n}, expected 1 or 2"))

    walls = interior_wall_count(level)
    if walls > max_walls:
        v.append(Violation("wall-budget", f"{walls} interior walls > {max_walls}"))

    if len(level.agent_starts) != 2:
        v.append(Violation("agent-count", f"{len(level.agent_starts)} starts, expected 2"))
    else:
        cells = []
        for i, (r, c, _) in enumerate(level.agent_starts):
            if not (0 <= r < h and 0 <= c < w) or g[r, c] != Tile.FLOOR:
                v.append(Violation("agent-floor", f"agent {i} not on a floor cell", (r, c)))
            cells.append((r, c))
        if len(cells) == 2 and cells[0] == cells[1]:
            v.append(Violation("agent-overlap", "agents share a cell", cells[0]))

    return ValidationReport(tuple(v))


def pad(level: Level, target_h: int, target_w: int) -> Level:
    """Grow the canvas to target_h x target_w, anchoring the original grid
    at the top-left and filling new cells with walls."""
    if target_h < level.height or target_w < level.width:
        raise _error(
            "pad-target",
            f"target {target_h}x{target_w} smaller than level "
            f"{level.height}x{level.width}",
        )
    if target_h == level.height and target_w == level.width:
        return level
    grid = np.full((target_h, target_w), Tile.WALL, dtype=np.int8)
    grid[: level.height, : level.width] = level.grid
    return Level(target_h, target_w, grid, level.agent_starts)


def level_digest(level: Level) -> int:
    """Stable 64-bit content hash of (dims, grid, agent starts).

    Identical logical levels hash identically on every platform and run.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(b"lvl1")
    h.update(level.height.to_bytes(2, "big"))
    h.update(level.width.to_bytes(2, "big"))
    h.update(level.grid.tobytes())
    for r, c, d in level.agent_starts:
        h.update(r.to_bytes(2, "big"))
        h.update(c.to_bytes(2, "big"))
        h.update(int(d).to_bytes(1, "big"))
    return int.from_bytes(h.digest(), "big")


def digest_hex(level_or_digest) -> str:
    """Digest formatted as 16 hex digits."""
    d = level_or_digest if isinstance(level_or_digest, int) else level_digest(level_or_digest)
    return f"{d:016x}"


# --- file formats ----------------------------------------------------------


def level_to_record(level: Level) -> dict:
    """JSON record form: grid rows joined by newlines, agents listed with
    their orientation (the ASCII form always reads back as facing up)."""
    chars = [[_TILE_TO_CHAR[Tile(t)] for t in row] for row in level.grid.tolist()]
    return {
        "height": level.height,
        "width": level.width,
        "grid": "\n".join("".join(row) for row in chars),
        "agents": [[r, c, _ORIENTATION_NAMES[d]] for r, c, d in level.agent_starts],
    }


def level_from_record(record: dict) -> Level:
    rows = record["grid"].split("\n")
    grid = np.zeros((record["height"], record["width"]), dtype=np.int8)
    if len(rows) != record["height"]:
        raise _error("record", "grid rows do not match height")
    for r, row in enumerate(rows):
        if len(row) != record["width"]:
            raise _error("ragged", f"row {r} has length {len(row)}")
        for c, ch in enumerate(row):
            if ch not in _CHAR_TO_TILE:
                raise _error("symbol", f"unknown symbol {ch!r}", (r, c))
            grid[r, c] = _CHAR_TO_TILE[ch]
    agents = []
    for r, c, d in record["agents"]:
        if d not in _NAMES_TO_ORIENTATION:
            raise _error("orientation", f"unknown orientation {d!r}")
        agents.append((int(r), int(c), _NAMES_TO_ORIENTATION[d]))
    if len(agents) != 2:
        raise _error("agent-count", f"expected 2 agents, found {len(agents)}")
    level = Level(record["height"], record["width"], grid, tuple(agents))
    report = validate(level)
    if not report.valid:
        raise LevelError(report)
    return level


def load_levels(text: str) -> list[Level]:
    """Load levels from file content: either one ASCII grid or JSON lines."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return [
            level_from_record(json.loads(line))
            for line in text.splitlines()
            if line.strip()
        ]
    return [parse_ascii(text)]


def dump_levels(levels: list[Level], fmt: str = "jsonl") -> str:
    if fmt == "jsonl":
        return "\n".join(json.dumps(level_to_record(l), sort_keys=True) for l in levels) + "\n"
    if fmt == "ascii":
        return "\n\n".join(render_ascii(l) for l in levels) + "\n"
    raise ValueError(f"unknown level format {fmt!r}")


# --- built-in evaluation suites --------------------------------------------

BUILTIN_LEVEL_NAMES = (
    "cramped_room",
    "asymmetric_advantages",
    "coordination_ring",
    "forced_coordination",
    "counter_circuit",
)


def load_builtin(name: str) -> Level:
    """Load one bundled evaluation layout at its native size."""
    if name not in BUILTIN_LEVEL_NAMES:
        raise KeyError(f"unknown builtin level {name!r}")
    text = resources.files("gridkitchen.assets").joinpath(f"{name}.txt").read_text()
    return parse_ascii(text)


def builtin_eval_suite(canvas: tuple[int, int] = DEFAULT_CANVAS) -> list[Level]:
    """The five classic evaluation kitchens, padded to the shared canvas."""
    return [pad(load_builtin(n), *canvas) for n in BUILTIN_LEVEL_NAMES]


_SYMMETRY_SIZES = ((6, 6), (6, 8), (6, 9))
_SYMMETRY_SIDES = ("top", "bottom", "left", "right")


def _ring_level(h: int, w: int, side: str, mirrored: bool) -> Level:
    """One circular kitchen: a ring corridor around a counter island with
    the four stations embedded in the border along the given side."""
    if h < 6 or w < 6:
        raise _error("suite-size", f"ring kitchen needs at least 6x6, got {h}x{w}")
    grid = np.full((h, w), Tile.WALL, dtype=np.int8)
    grid[1:-1, 1:-1] = Tile.FLOOR
    grid[2 : h - 2, 2 : w - 2] = Tile.WALL  # island

    block = [Tile.ONION_PILE, Tile.PLATE_PILE, Tile.POT, Tile.GOAL]
    if mirrored:
        block.reverse()
    if side in ("top", "bottom"):
        r = 0 if side == "top" else h - 1
        c0 = (w - 4) // 2
        for i, tile in enumerate(block):
            grid[r, c0 + i] = tile
    else:
        c = 0 if side == "left" else w - 1
        r0 = (h - 4) // 2
        for i, tile in enumerate(block):
            grid[r0 + i, c] = tile
    starts = ((1, 1, Orientation.UP), (h - 2, w - 2, Orientation.UP))
    return Level(h, w, grid, starts)


def symmetry_suite(
    count: int = 24, sizes: tuple[tuple[int, int], ...] = _SYMMETRY_SIZES
) -> list[Level]:
    """Ring kitchens with the station block rotated to each side and
    mirrored, over the given sizes. Every level is valid and solvable."""
    combos = [
        (h, w, side, mirrored)
        for (h, w) in sizes
        for side in _SYMMETRY_SIDES
        for mirrored in (False, True)
    ]
    if count > len(combos):
        raise _error(
            "suite-count", f"only {len(combos)} placements available, asked for {count}"
        )
    return [_ring_level(*combo) for combo in combos[:count]]
