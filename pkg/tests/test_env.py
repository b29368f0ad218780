import numpy as np
import pytest

from gridkitchen.env import (
    DEFAULT_CONFIG,
    Action,
    EnvConfig,
    EpisodeDone,
    Event,
    HeldItem,
    apply_interact,
    centralized_observation,
    observe,
    reset,
    resolve_movement,
    step,
    trajectory_record,
)
from gridkitchen.levels import Orientation, Tile, pad, parse_ascii

EXAMPLE = "WWPWW\nWA AW\nWO BW\nWWGWW"


@pytest.fixture
def level():
    return parse_ascii(EXAMPLE)


def drive(state, moves, config=DEFAULT_CONFIG):
    """Apply a list of joint actions, returning (state, outcomes)."""
    outcomes = []
    for joint in moves:
        out = step(state, joint, config)
        outcomes.append(out)
        state = out.next_state
    return state, outcomes


S = Action.STAY


def test_reset_is_deterministic(level):
    assert reset(level, 1) == reset(level, 1)


def test_reset_places_agents(level):
    s = reset(level, 1)
    assert s.agent_pos.tolist() == [[1, 1], [1, 3]]
    assert all(HeldItem(h) == HeldItem.NOTHING for h in s.held)
    assert s.t == 0 and s.deliveries == 0


def test_reset_seed_only_changes_rng_state(level):
    a, b = reset(level, 1), reset(level, 2)
    assert a != b
    assert a.rng_state != b.rng_state
    b.rng_state = a.rng_state
    assert a == b


def test_resolve_movement_rules(level):
    pos = ((1, 1), (1, 3))
    # Both keep their own cell.
    assert resolve_movement(pos, pos, level) == pos
    # Same target cancels both.
    assert resolve_movement(pos, ((1, 2), (1, 2)), level) == pos
    # Swap cancels both (adjacent variant).
    adj = ((1, 1), (1, 2))
    assert resolve_movement(adj, ((1, 2), (1, 1)), level) == adj
    # Wall proposals are cancelled individually.
    assert resolve_movement(pos, ((0, 1), (1, 2)), level) == ((1, 1), (1, 2))


def test_move_into_bounced_agents_cell_is_cancelled(level):
    # Agent 0 bounces off a wall and stays; agent 1 aiming at agent 0's
    # cell must be cancelled too (same effective target).
    s = reset(level, 1)
    s.agent_pos[1] = (1, 2)
    out = step(s, (Action.UP, Action.LEFT))
    assert out.next_state.agent_pos.tolist() == [[1, 1], [1, 2]]


def test_stay_stay_changes_nothing(level):
    s = reset(level, 1)
    out = step(s, (S, S))
    n = out.next_state
    assert out.reward == 0 and out.shaped_reward == (0, 0)
    assert np.array_equal(n.agent_pos, s.agent_pos)
    assert np.array_equal(n.agent_dir, s.agent_dir)
    assert np.array_equal(n.held, s.held)
    assert n.t == 1


def test_step_is_pure(level):
    s = reset(level, 1)
    before = s.copy()
    step(s, (Action.DOWN, Action.LEFT))
    assert s == before
    a = step(s, (Action.DOWN, Action.LEFT))
    b = step(s, (Action.DOWN, Action.LEFT))
    assert a.next_state == b.next_state and a.reward == b.reward


def test_bump_turn_updates_orientation_without_moving(level):
    s = reset(level, 1)
    out = step(s, (Action.DOWN, S))  # (2,1) is an onion pile: impassable
    n = out.next_state
    assert n.agent_pos.tolist()[0] == [1, 1]
    assert Orientation(int(n.agent_dir[0])) == Orientation.DOWN


def test_onion_pickup_from_pile_is_unshaped(level):
    s = reset(level, 1)
    s, _ = drive(s, [(Action.DOWN, S)])
    out = step(s, (Action.INTERACT, S))
    assert HeldItem(int(out.next_state.held[0])) == HeldItem.ONION
    assert out.shaped_reward == (0, 0)
    assert out.events == ()


def test_plate_pickup_from_pile_is_shaped(level):
    s = reset(level, 1)
    s, _ = drive(s, [(S, Action.DOWN)])  # agent 1 faces the plate pile
    out = step(s, (S, Action.INTERACT))
    assert HeldItem(int(out.next_state.held[1])) == HeldItem.PLATE
    assert out.shaped_reward == (0, DEFAULT_CONFIG.shaped_plate_pickup)
    assert out.events == ((1, Event.PLATE_PICKUP),)


def test_counter_place_and_take(level):
    s = reset(level, 1)
    # Agent 0 grabs an onion, then stashes it on the wall at (1,0).
    s, _ = drive(
        s, [(Action.DOWN, S), (Action.INTERACT, S), (Action.LEFT, S)]
    )
    out = step(s, (Action.INTERACT, S))
    n = out.next_state
    assert HeldItem(int(n.held[0])) == HeldItem.NOTHING
    assert n.counter_items == {(1, 0): HeldItem.ONION}
    # And takes it back.
    out2 = step(n, (Action.INTERACT, S))
    assert HeldItem(int(out2.next_state.held[0])) == HeldItem.ONION
    assert out2.next_state.counter_items == {}


def _fill_pot(level, n_onions):
    """Drive agent 0 to put n_onions into the pot at (0,2)."""
    s = reset(level, 1)
    moves = []
    for _ in range(n_onions):
        moves += [
            (Action.LEFT, S),
            (Action.DOWN, S),
            (Action.INTERACT, S),
            (Action.RIGHT, S),
            (Action.UP, S),
            (Action.INTERACT, S),
        ]
    return drive(s, moves)


def test_third_onion_starts_cooking(level):
    s, outcomes = _fill_pot(level, 3)
    potted = [o for o in outcomes if any(e == Event.ONION_POTTED for _, e in o.events)]
    assert len(potted) == 3
    assert int(s.pot_onions[0, 2]) == 3
    # The timer is set to cook_time by the interaction and ticks once in
    # the same step.
    assert int(s.pot_timer[0, 2]) == DEFAULT_CONFIG.cook_time - 1
    assert potted[-1].shaped_reward[0] == DEFAULT_CONFIG.shaped_onion_potted


def test_apply_interact_third_onion_sets_full_timer(level):
    s = reset(level, 1)
    s.pot_onions[0, 2] = 2
    s.agent_pos[0] = (1, 2)
    s.agent_dir[0] = Orientation.UP
    s.held[0] = HeldItem.ONION
    after, events = apply_interact(s, 0)
    assert int(after.pot_onions[0, 2]) == 3
    assert int(after.pot_timer[0, 2]) == DEFAULT_CONFIG.cook_time
    assert events == (Event.ONION_POTTED,)


def test_apply_interact_undefined_pairs_are_noops(level):
    s = reset(level, 1)
    # Facing floor with empty hands.
    s.agent_dir[0] = Orientation.RIGHT
    after, events = apply_interact(s, 0)
    assert after == s and events == ()
    # Plate against a pot that is not ready.
    s2 = reset(level, 1)
    s2.agent_pos[0] = (1, 2)
    s2.agent_dir[0] = Orientation.UP
    s2.held[0] = HeldItem.PLATE
    after2, events2 = apply_interact(s2, 0)
    assert HeldItem(int(after2.held[0])) == HeldItem.PLATE
    assert events2 == ()


def test_full_cook_and_delivery(level):
    s, _ = _fill_pot(level, 3)
    # Wait out the cook timer (one tick already elapsed).
    s, _ = drive(s, [(S, S)] * (DEFAULT_CONFIG.cook_time - 1))
    assert int(s.pot_onions[0, 2]) == 3 and int(s.pot_timer[0, 2]) == 0
    # Agent 0 steps aside; agent 1 fetches a plate and collects the soup.
    s, outs = drive(
        s,
        [
            (Action.LEFT, Action.DOWN),
            (S, Action.INTERACT),  # plate (+3 shaped)
            (S, Action.LEFT),
            (S, Action.UP),
            (S, Action.INTERACT),  # soup pickup (+5 shaped)
        ],
    )
    assert HeldItem(int(s.held[1])) == HeldItem.SOUP
    assert int(s.pot_onions[0, 2]) == 0
    assert outs[-1].shaped_reward == (0, DEFAULT_CONFIG.shaped_soup_pickup)
    assert outs[-1].events == ((1, Event.SOUP_PICKUP),)
    # Deliver at the goal (3,2): stand at (2,2) facing down.
    s, outs = drive(s, [(S, Action.DOWN), (S, Action.DOWN), (S, Action.INTERACT)])
    assert outs[-1].reward == DEFAULT_CONFIG.delivery_reward == 20
    assert outs[-1].events == ((1, Event.DELIVERY),)
    assert s.deliveries == 1
    assert HeldItem(int(s.held[1])) == HeldItem.NOTHING


def test_done_exactly_at_horizon(level):
    cfg = EnvConfig(horizon=5)
    s = reset(level, 1, cfg)
    for i in range(5):
        out = step(s, (S, S), cfg)
        assert out.done == (i == 4)
        s = out.next_state
    with pytest.raises(EpisodeDone):
        step(s, (S, S), cfg)


def test_held_items_only_change_via_interact(level):
    rng = np.random.default_rng(3)
    s = reset(level, 9)
    for _ in range(200):
        joint = tuple(Action(int(a)) for a in rng.integers(0, 6, 2))
        out = step(s, joint)
        for i in range(2):
            if joint[i] != Action.INTERACT:
                assert out.next_state.held[i] == s.held[i]
        s = out.next_state


# --- observations -----------------------------------------------------------


def test_observation_shape_on_padded_canvas(level):
    s = reset(pad(level, 6, 9), 1)
    obs = observe(s, 0)
    assert obs.shape == (26, 6, 9)
    assert obs.dtype == np.bool_


def test_observation_position_channels(level):
    s = reset(level, 1)
    a, b = observe(s, 0), observe(s, 1)
    assert a[0].sum() == 1 and a[1].sum() == 1
    assert np.array_equal(a[0], b[1])
    assert np.array_equal(a[1], b[0])
    assert a[0, 1, 1] and a[1, 1, 3]


def test_observation_orientation_one_hot(level):
    s = reset(level, 1)
    s, _ = drive(s, [(Action.LEFT, Action.DOWN)])
    obs = observe(s, 0)
    # Agent 0 faces left: channel 2+LEFT at its cell.
    assert obs[2 + int(Orientation.LEFT)].sum() == 1
    assert obs[6 + int(Orientation.DOWN)].sum() == 1
    for d in Orientation:
        if d != Orientation.LEFT:
            assert obs[2 + int(d)].sum() == 0


def test_observation_static_channels_match_level(level):
    s = reset(level, 1)
    obs = observe(s, 0)
    g = level.grid
    assert np.array_equal(obs[10], g == Tile.WALL)
    assert np.array_equal(obs[11], g == Tile.ONION_PILE)
    assert np.array_equal(obs[12], g == Tile.PLATE_PILE)
    assert np.array_equal(obs[13], g == Tile.POT)
    assert np.array_equal(obs[14], g == Tile.GOAL)


def test_observation_pot_and_item_channels(level):
    s, _ = _fill_pot(level, 3)
    obs = observe(s, 0)
    assert obs[17, 0, 2] and obs[18, 0, 2] and not obs[19, 0, 2]
    s, _ = drive(s, [(S, S)] * (DEFAULT_CONFIG.cook_time - 1))
    obs = observe(s, 0)
    assert obs[19, 0, 2] and not obs[18, 0, 2]


def test_observation_held_channels(level):
    s = reset(level, 1)
    s, _ = drive(s, [(Action.DOWN, S), (Action.INTERACT, S)])
    obs = observe(s, 0)
    assert obs[23, s.agent_pos[0, 0], s.agent_pos[0, 1]]
    assert obs[24].sum() == 0 and obs[25].sum() == 0


def test_centralized_observation(level):
    s = reset(level, 1)
    a, b = observe(s, 0), observe(s, 1)
    c = centralized_observation(a, b)
    assert c.shape[0] == 52
    assert np.array_equal(c[:26], a)
    assert np.array_equal(c[26:], b)
    flipped = centralized_observation(b, a)
    assert np.array_equal(flipped[:26], b)
    with pytest.raises(ValueError):
        centralized_observation(a, observe(reset(pad(level, 6, 9), 1), 0))


def test_trajectory_record_fields(level):
    s = reset(level, 1)
    out = step(s, (Action.DOWN, S))
    rec = trajectory_record(s.t, (Action.DOWN, S), out)
    assert set(rec) == {"t", "actions", "reward", "shaped", "events", "agent_pos"}
    assert rec["actions"] == ["down", "stay"]
    assert rec["agent_pos"] == out.next_state.agent_pos.tolist()
