"""Two-cook kitchen dynamics: movement, interactions, cooking, delivery.

The step function here is the readable scalar reference. Batched rollouts
run the same transition through the vectorised backends in `stepper`,
which are tested bit-for-bit against this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .levels import (
    ORIENTATION_DELTAS,
    Level,
    Orientation,
    Tile,
    validate,
)


class Action(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3
    INTERACT = 4
    STAY = 5


# Orientation adopted by each movement action.
ACTION_ORIENTATION = {
    Action.LEFT: Orientation.LEFT,
    Action.RIGHT: Orientation.RIGHT,
    Action.UP: Orientation.UP,
    Action.DOWN: Orientation.DOWN,
}


class HeldItem(enum.IntEnum):
    NOTHING = 0
    ONION = 1
    PLATE = 2
    SOUP = 3


class Event(enum.IntFlag):
    """Step events, also used as the bitmask layout of the batched kernels."""

    DELIVERY = 1
    ONION_POTTED = 2
    PLATE_PICKUP = 4
    SOUP_PICKUP = 8


EVENT_NAMES = {
    Event.DELIVERY: "delivery",
    Event.ONION_POTTED: "onion_potted",
    Event.PLATE_PICKUP: "plate_pickup",
    Event.SOUP_PICKUP: "soup_pickup",
}

NUM_OBS_CHANNELS = 26


# A pot holds at most three onions; the PotState invariants assume it.
POT_CAPACITY = 3


@dataclass(frozen=True)
class EnvConfig:
    """Cooking and reward constants plus the episode horizon."""

    cook_time: int = 20
    delivery_reward: int = 20
    shaped_onion_potted: int = 3
    shaped_plate_pickup: int = 3
    shaped_soup_pickup: int = 5
    horizon: int = 400


DEFAULT_CONFIG = EnvConfig()


@dataclass(frozen=True)
class PotState:
    onions: int
    timer: int

    @property
    def ready(self) -> bool:
        return self.onions == 3 and self.timer == 0


@dataclass(eq=False)
class EnvState:
    """Complete world state. Treated as immutable: step returns a new state."""

    level: Level
    agent_pos: np.ndarray  # (2, 2) int16, row/col
    agent_dir: np.ndarray  # (2,) int8, Orientation codes
    held: np.ndarray  # (2,) int8, HeldItem codes
    counter_item: np.ndarray  # (h, w) int8, HeldItem codes on plain walls
    pot_onions: np.ndarray  # (h, w) int8
    pot_timer: np.ndarray  # (h, w) int16
    t: int
    deliveries: int
    rng_state: int

    @property
    def pots(self) -> dict[tuple[int, int], PotState]:
        return {
            (r, c): PotState(int(self.pot_onions[r, c]), int(self.pot_timer[r, c]))
            for r, c in self.level.station_cells(Tile.POT)
        }

    @property
    def counter_items(self) -> dict[tuple[int, int], HeldItem]:
        rows, cols = np.nonzero(self.counter_item)
        return {
            (int(r), int(c)): HeldItem(int(self.counter_item[r, c]))
            for r, c in zip(rows, cols)
        }

    def copy(self) -> "EnvState":
        return EnvState(
            level=self.level,
            agent_pos=self.agent_pos.copy(),
            agent_dir=self.agent_dir.copy(),
            held=self.held.copy(),
            counter_item=self.counter_item.copy(),
            pot_onions=self.pot_onions.copy(),
            pot_timer=self.pot_timer.copy(),
            t=self.t,
            deliveries=self.deliveries,
            rng_state=self.rng_state,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnvState):
            return NotImplemented
        return (
            self.level == other.level
            and np.array_equal(self.agent_pos, other.agent_pos)
            and np.array_equal(self.agent_dir, other.agent_dir)
            and np.array_equal(self.held, other.held)
            and np.array_equal(self.counter_item, other.counter_item)
            and np.array_equal(self.pot_onions, other.pot_onions)
            and np.array_equal(self.pot_timer, other.pot_timer)
            and self.t == other.t
            and self.deliveries == other.deliveries
            and self.rng_state == other.rng_state
        )


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: int
    shaped_reward: tuple[int, int]
    done: bool
    events: tuple[tuple[int, Event], ...]  # (agent index, event), agent 0 first


class EpisodeDone(RuntimeError):
    pass


def reset(level: Level, seed: int, config: EnvConfig = DEFAULT_CONFIG) -> EnvState:
    """Fresh episode state: agents at their starts, pots and counters empty.

    The dynamics themselves are deterministic; the seed is recorded so that
    trajectories are addressable by (level, seed).
    """
    report = validate(level)
    if not report.valid:
        from .levels import LevelError

        raise LevelError(report)
    h, w = level.height, level.width
    pos = np.array([[r, c] for r, c, _ in level.agent_starts], dtype=np.int16)
    dirs = np.array([int(d) for _, _, d in level.agent_starts], dtype=np.int8)
    return EnvState(
        level=level,
        agent_pos=pos,
        agent_dir=dirs,
        held=np.zeros(2, dtype=np.int8),
        counter_item=np.zeros((h, w), dtype=np.int8),
        pot_onions=np.zeros((h, w), dtype=np.int8),
        pot_timer=np.zeros((h, w), dtype=np.int16),
        t=0,
        deliveries=0,
        rng_state=int(seed),
    )


def resolve_movement(
    positions: tuple[tuple[int, int], tuple[int, int]],
    proposals: tuple[tuple[int, int], tuple[int, int]],
    level: Level,
) -> tuple[tuple[int, int], tuple[int, int]]:
    """Resolve the two simultaneous move proposals.

    A proposal into an impassable cell is cancelled, both agents aiming at
    the same cell cancel each other, and a position swap is cancelled. The
    rules are symmetric, so the outcome is independent of agent order.
    """
    eff = []
    for pos, prop in zip(positions, proposals):
        r, c = prop
        if level.grid[r, c] != Tile.FLOOR:
            eff.append(pos)
        else:
            eff.append(prop)
    if eff[0] == eff[1]:
        return positions
    if eff[0] == positions[1] and eff[1] == positions[0]:
        return positions
    return (eff[0], eff[1])


def _interact_one(
    state: EnvState, agent: int, config: EnvConfig
) -> tuple[int, int, Event]:
    """Apply one agent's interaction in place on a copied state.

    Returns (reward, shaped reward, events) for that agent.
    """
    r, c = int(state.agent_pos[agent, 0]), int(state.agent_pos[agent, 1])
    dr, dc = ORIENTATION_DELTAS[int(state.agent_dir[agent])]
    fr, fc = r + dr, c + dc
    tile = Tile(int(state.level.grid[fr, fc]))
    held = HeldItem(int(state.held[agent]))
    reward = 0
    shaped = 0
    events = Event(0)

    if held == HeldItem.NOTHING:
        if tile == Tile.ONION_PILE:
            state.held[agent] = HeldItem.ONION
        elif tile == Tile.PLATE_PILE:
            state.held[agent] = HeldItem.PLATE
            shaped += config.shaped_plate_pickup
            events |= Event.PLATE_PICKUP
        elif tile == Tile.WALL and state.counter_item[fr, fc] != 0:
            state.held[agent] = state.counter_item[fr, fc]
            state.counter_item[fr, fc] = 0
    else:
        if tile == Tile.WALL and state.counter_item[fr, fc] == 0:
            state.counter_item[fr, fc] = held
            state.held[agent] = HeldItem.NOTHING
        elif tile == Tile.POT and held == HeldItem.ONION:
            onions = int(state.pot_onions[fr, fc])
            if onions < POT_CAPACITY:
                state.pot_onions[fr, fc] = onions + 1
                if onions + 1 == POT_CAPACITY:
                    state.pot_timer[fr, fc] = config.cook_time
                state.held[agent] = HeldItem.NOTHING
                shaped += config.shaped_onion_potted
                events |= Event.ONION_POTTED
        elif tile == Tile.POT and held == HeldItem.PLATE:
            if (
                state.pot_onions[fr, fc] == POT_CAPACITY
                and state.pot_timer[fr, fc] == 0
            ):
                state.held[agent] = HeldItem.SOUP
                state.pot_onions[fr, fc] = 0
                shaped += config.shaped_soup_pickup
                events |= Event.SOUP_PICKUP
        elif tile == Tile.GOAL and held == HeldItem.SOUP:
            state.held[agent] = HeldItem.NOTHING
            state.deliveries += 1
            reward += config.delivery_reward
            events |= Event.DELIVERY
    return reward, shaped, events


def apply_interact(
    state: EnvState, agent: int, config: EnvConfig = DEFAULT_CONFIG
) -> tuple[EnvState, tuple[Event, ...]]:
    """Apply one agent's interaction with the faced cell.

    Undefined (item, tile) pairs are no-ops. Returns the updated state and
    the events it produced; movement and pot cooking are untouched.
    """
    out = state.copy()
    _, _, events = _interact_one(out, agent, config)
    return out, tuple(e for e in Event if e & events)


def step(
    state: EnvState,
    joint_action: tuple[Action, Action],
    config: EnvConfig = DEFAULT_CONFIG,
) -> StepOutcome:
    """Advance one tick: orient/move both agents, apply interactions in
    agent order, tick cooking pots, then advance time.

    Pure: identical (state, joint_action) pairs produce identical outcomes.
    """
    if state.t >= config.horizon:
        raise EpisodeDone(f"episode already finished at t={state.t}")
    out = state.copy()

    positions = (
        (int(out.agent_pos[0, 0]), int(out.agent_pos[0, 1])),
        (int(out.agent_pos[1, 0]), int(out.agent_pos[1, 1])),
    )
    proposals = []
    for i, action in enumerate(joint_action):
        action = Action(action)
        if action in ACTION_ORIENTATION:
            d = ACTION_ORIENTATION[action]
            out.agent_dir[i] = d
            dr, dc = ORIENTATION_DELTAS[d]
            proposals.append((positions[i][0] + dr, positions[i][1] + dc))
        else:
            proposals.append(positions[i])
    new_pos = resolve_movement(positions, (proposals[0], proposals[1]), out.level)
    out.agent_pos[0] = new_pos[0]
    out.agent_pos[1] = new_pos[1]

    reward = 0
    shaped = [0, 0]
    events: list[tuple[int, Event]] = []
    for i, action in enumerate(joint_action):
        if Action(action) == Action.INTERACT:
            rew, shp, evs = _interact_one(out, i, config)
            reward += rew
            shaped[i] += shp
            for e in Event:
                if e & evs:
                    events.append((i, e))

    cooking = out.pot_timer > 0
    out.pot_timer[cooking] -= 1

    out.t += 1
    done = out.t >= config.horizon
    return StepOutcome(
        next_state=out,
        reward=reward,
        shaped_reward=(shaped[0], shaped[1]),
        done=done,
        events=tuple(events),
    )


# --- observations -----------------------------------------------------------

# Channel layout, fixed for this artifact (ego view first):
#  0 self position            1 other position
#  2-5 self orientation one-hot (up, down, left, right)
#  6-9 other orientation one-hot
#  10 wall   11 onion pile   12 plate pile   13 pot   14 goal
#  15-17 pots holding exactly 1 / 2 / 3 onions
#  18 pot cooking (timer > 0)   19 pot ready
#  20 loose onion   21 loose plate   22 loose soup
#  23 held onion    24 held plate    25 held soup  (mask at holder's cell)


def observe(state: EnvState, agent: int) -> np.ndarray:
    """Egocentric stack of 26 boolean h x w masks for one agent."""
    h, w = state.level.height, state.level.width
    obs = np.zeros((NUM_OBS_CHANNELS, h, w), dtype=bool)
    me, other = agent, 1 - agent
    g = state.level.grid

    obs[0, state.agent_pos[me, 0], state.agent_pos[me, 1]] = True
    obs[1, state.agent_pos[other, 0], state.agent_pos[other, 1]] = True
    obs[2 + int(state.agent_dir[me]), state.agent_pos[me, 0], state.agent_pos[me, 1]] = True
    obs[6 + int(state.agent_dir[other]), state.agent_pos[other, 0], state.agent_pos[other, 1]] = True

    obs[10] = g == Tile.WALL
    obs[11] = g == Tile.ONION_PILE
    obs[12] = g == Tile.PLATE_PILE
    obs[13] = g == Tile.POT
    obs[14] = g == Tile.GOAL

    obs[15] = state.pot_onions == 1
    obs[16] = state.pot_onions == 2
    obs[17] = state.pot_onions == 3
    obs[18] = state.pot_timer > 0
    obs[19] = (state.pot_onions == 3) & (state.pot_timer == 0)

    obs[20] = state.counter_item == HeldItem.ONION
    obs[21] = state.counter_item == HeldItem.PLATE
    obs[22] = state.counter_item == HeldItem.SOUP

    for i in range(2):
        item = int(state.held[i])
        if item:
            obs[22 + item, state.agent_pos[i, 0], state.agent_pos[i, 1]] = True
    return obs


def centralized_observation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Critic view: the two agents' channel stacks concatenated, 52 channels."""
    if a.shape != b.shape:
        raise ValueError(f"observation shapes differ: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=0)


def trajectory_record(
    t: int,
    joint_action: tuple[Action, Action],
    outcome: StepOutcome,
) -> dict:
    """One JSONL trajectory row. Field names are part of the file format."""
    return {
        "t": t,
        "actions": [Action(a).name.lower() for a in joint_action],
        "reward": outcome.reward,
        "shaped": list(outcome.shaped_reward),
        "events": [
            {"agent": i, "type": EVENT_NAMES[e]} for i, e in outcome.events
        ],
        "agent_pos": outcome.next_state.agent_pos.tolist(),
    }
