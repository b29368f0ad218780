import numpy as np
import pytest

from gridkitchen.levels import (
    BUILTIN_LEVEL_NAMES,
    DEFAULT_CANVAS,
    Level,
    LevelError,
    Orientation,
    Tile,
    builtin_eval_suite,
    digest_hex,
    dump_levels,
    interior_wall_count,
    level_digest,
    level_from_record,
    level_to_record,
    load_builtin,
    load_levels,
    pad,
    parse_ascii,
    render_ascii,
    symmetry_suite,
    validate,
)

EXAMPLE = "WWPWW\nWA AW\nWO BW\nWWGWW"


def test_parse_example_counts_and_agents():
    lvl = parse_ascii(EXAMPLE)
    assert (lvl.height, lvl.width) == (4, 5)
    assert lvl.tile_count(Tile.POT) == 1
    assert lvl.tile_count(Tile.ONION_PILE) == 1
    assert lvl.tile_count(Tile.PLATE_PILE) == 1
    assert lvl.tile_count(Tile.GOAL) == 1
    assert lvl.agent_starts == (
        (1, 1, Orientation.UP),
        (1, 3, Orientation.UP),
    )


def test_parse_render_round_trip():
    for text in [EXAMPLE, render_ascii(load_builtin("cramped_room"))]:
        assert render_ascii(parse_ascii(text)) == text


def test_render_deterministic():
    a = parse_ascii(EXAMPLE)
    b = parse_ascii(EXAMPLE)
    assert render_ascii(a) == render_ascii(b)


def test_parse_rejects_single_agent():
    with pytest.raises(LevelError) as exc:
        parse_ascii("WWPWW\nWA  W\nWO BW\nWWGWW")
    assert any(v.rule == "agent-count" for v in exc.value.report.violations)


def test_parse_rejects_ragged_rows():
    with pytest.raises(LevelError) as exc:
        parse_ascii("WWPWW\nWA AW\nWO BW\nWWGW")
    assert any(v.rule == "ragged" for v in exc.value.report.violations)


def test_parse_rejects_unknown_symbol():
    with pytest.raises(LevelError) as exc:
        parse_ascii(EXAMPLE.replace("B", "?"))
    assert any(v.rule == "symbol" for v in exc.value.report.violations)


def test_validate_example_level():
    assert validate(parse_ascii(EXAMPLE)).valid


def test_validate_flags_missing_pot():
    lvl = parse_ascii(EXAMPLE)
    grid = lvl.grid.copy()
    grid[0, 2] = Tile.WALL
    report = validate(Level(4, 5, grid, lvl.agent_starts))
    assert not report.valid
    assert any(v.rule == "pot-count" for v in report.violations)


def test_validate_flags_wall_budget():
    # 8x8 room, 16 interior walls on a checkerboard so each touches floor.
    grid = np.full((8, 8), Tile.WALL, dtype=np.int8)
    grid[1:-1, 1:-1] = Tile.FLOOR
    cells = [(r, c) for r in range(1, 7) for c in range(1, 7) if (r + c) % 2 == 0]
    for r, c in cells[:16]:
        grid[r, c] = Tile.WALL
    grid[0, 1] = Tile.ONION_PILE
    grid[0, 2] = Tile.PLATE_PILE
    grid[0, 3] = Tile.POT
    grid[0, 4] = Tile.GOAL
    lvl = Level(8, 8, grid, ((5, 6, Orientation.UP), (6, 5, Orientation.UP)))
    assert interior_wall_count(lvl) == 16
    report = validate(lvl, max_walls=15)
    assert any(v.rule == "wall-budget" for v in report.violations)


def test_validate_reports_all_violations():
    # Missing pot AND missing goal must both be listed.
    grid = np.full((4, 5), Tile.WALL, dtype=np.int8)
    grid[1:-1, 1:-1] = Tile.FLOOR
    grid[2, 0] = Tile.ONION_PILE
    grid[2, 4] = Tile.PLATE_PILE
    lvl = Level(4, 5, grid, ((1, 1, Orientation.UP), (1, 3, Orientation.UP)))
    rules = {v.rule for v in validate(lvl).violations}
    assert {"pot-count", "goal-count"} <= rules


# --- pad --------------------------------------------------------------------


def test_pad_cell_arithmetic():
    lvl = parse_ascii(EXAMPLE)
    padded = pad(lvl, 6, 9)
    assert (padded.height, padded.width) == (6, 9)
    # Oracle: every added cell is a wall, so the wall count grows by
    # exactly the area difference: 6*9 - 4*5 = 34.
    added = 6 * 9 - 4 * 5
    assert added == 34
    assert padded.tile_count(Tile.WALL) == lvl.tile_count(Tile.WALL) + added
    # Playable content is byte-identical in the top-left block.
    assert np.array_equal(padded.grid[:4, :5], lvl.grid)
    assert padded.agent_starts == lvl.agent_starts


def test_pad_to_own_size_is_identity():
    lvl = parse_ascii(EXAMPLE)
    assert pad(lvl, 4, 5) == lvl


def test_pad_idempotent():
    lvl = parse_ascii(EXAMPLE)
    once = pad(lvl, 6, 9)
    assert pad(once, 6, 9) == once


def test_pad_rejects_shrinking():
    with pytest.raises(LevelError):
        pad(parse_ascii(EXAMPLE), 3, 5)


def test_padded_level_still_validates():
    assert validate(pad(parse_ascii(EXAMPLE), 6, 9)).valid


def test_render_after_pad_dimensions():
    rows = render_ascii(pad(parse_ascii(EXAMPLE), 6, 9)).split("\n")
    assert len(rows) == 6
    assert all(len(r) == 9 for r in rows)


# --- digest -----------------------------------------------------------------


def test_digest_stable_across_round_trip():
    lvl = parse_ascii(EXAMPLE)
    assert level_digest(lvl) == level_digest(parse_ascii(render_ascii(lvl)))


def test_digest_hex_format():
    d = digest_hex(parse_ascii(EXAMPLE))
    assert len(d) == 16
    int(d, 16)


def test_digest_sensitive_to_single_toggle():
    rng = np.random.default_rng(7)
    base = pad(parse_ascii(EXAMPLE), 6, 9)
    base_digest = level_digest(base)
    floors = np.argwhere(base.grid == Tile.FLOOR)
    agent_cells = {(r, c) for r, c, _ in base.agent_starts}
    for _ in range(200):
        r, c = floors[rng.integers(len(floors))]
        if (int(r), int(c)) in agent_cells:
            continue
        grid = base.grid.copy()
        grid[r, c] = Tile.WALL
        toggled = Level(6, 9, grid, base.agent_starts)
        assert level_digest(toggled) != base_digest


def test_digest_distinguishes_dimensions():
    lvl = parse_ascii(EXAMPLE)
    assert level_digest(lvl) != level_digest(pad(lvl, 6, 9))


# --- file formats -----------------------------------------------------------


def test_record_round_trip_preserves_orientation():
    lvl = parse_ascii(EXAMPLE)
    turned = Level(
        lvl.height,
        lvl.width,
        lvl.grid,
        ((1, 1, Orientation.LEFT), (1, 3, Orientation.DOWN)),
    )
    again = level_from_record(level_to_record(turned))
    assert again == turned


def test_load_levels_both_formats(tmp_path):
    lvl = parse_ascii(EXAMPLE)
    assert load_levels(render_ascii(lvl)) == [lvl]
    jsonl = dump_levels([lvl, pad(lvl, 6, 9)])
    assert load_levels(jsonl) == [lvl, pad(lvl, 6, 9)]


# --- suites -----------------------------------------------------------------


def test_builtin_suite_shape():
    suite = builtin_eval_suite()
    assert len(suite) == 5
    for lvl in suite:
        assert (lvl.height, lvl.width) == DEFAULT_CANVAS
        assert validate(lvl).valid, validate(lvl)


def test_builtin_names_align():
    assert len(BUILTIN_LEVEL_NAMES) == 5
    for name in BUILTIN_LEVEL_NAMES:
        assert validate(load_builtin(name)).valid


def test_symmetry_suite_default():
    suite = symmetry_suite()
    assert len(suite) == 24
    digests = {level_digest(l) for l in suite}
    assert len(digests) == 24
    for lvl in suite:
        assert validate(lvl).valid, validate(lvl)


def test_symmetry_suite_contains_mirror_pairs():
    # Consecutive entries are the unmirrored/mirrored variants of one
    # placement: same dimensions, station cells mapped onto each other.
    suite = symmetry_suite()
    for a, b in zip(suite[0::2], suite[1::2]):
        assert (a.height, a.width) == (b.height, b.width)
        a_cells = {
            t: a.station_cells(t)
            for t in (Tile.ONION_PILE, Tile.PLATE_PILE, Tile.POT, Tile.GOAL)
        }
        b_cells = {
            t: b.station_cells(t)
            for t in (Tile.ONION_PILE, Tile.PLATE_PILE, Tile.POT, Tile.GOAL)
        }
        a_all = sorted(sum(a_cells.values(), []))
        b_all = sorted(sum(b_cells.values(), []))
        assert a_all == b_all
        assert a_cells != b_cells


def test_symmetry_suite_rejects_oversized_count():
    with pytest.raises(LevelError):
        symmetry_suite(count=25)
