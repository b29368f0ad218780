"""Vectorised numpy fallback for the batched step kernel.

Mirrors the scalar reference in `env` and the compiled kernel in
`_stepper_cy` exactly; all three are cross-checked by the backend tests.
All arithmetic is integer, so results are bit-identical everywhere.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_FLOOR, _WALL, _ONION_PILE, _PLATE_PILE, _POT, _GOAL = range(6)
_NOTHING, _ONION, _PLATE, _SOUP = range(4)
_INTERACT = 4

# Orientation adopted by movement actions 0..3 (left, right, up, down).
_ACTION_TO_DIR = np.array([2, 3, 0, 1], dtype=np.int8)
_DROW = np.array([-1, 1, 0, 0], dtype=np.int16)
_DCOL = np.array([0, 0, -1, 1], dtype=np.int16)

_EV_DELIVERY = 1
_EV_ONION_POTTED = 2
_EV_PLATE_PICKUP = 4
_EV_SOUP_PICKUP = 8


def step_batch(
    grid,
    pos,
    dirs,
    held,
    counter,
    pot_onions,
    pot_timer,
    t,
    deliveries,
    actions,
    reward,
    shaped,
    events,
    done,
    cook_time,
    delivery_reward,
    rew_onion_potted,
    rew_plate_pickup,
    rew_soup_pickup,
    horizon,
):
    """Advance every slot one tick in place; outputs written to the last
    four arrays. See `stepper.BatchSim` for the array layout."""
    B = grid.shape[0]
    bi = np.arange(B)
    reward[:] = 0
    shaped[:] = 0
    events[:] = 0

    # Movement: orient, propose, cancel blocked/conflicting proposals.
    is_move = actions < 4
    new_dirs = np.where(is_move, _ACTION_TO_DIR[np.minimum(actions, 3)], dirs)
    prop_r = pos[:, :, 0] + np.where(is_move, _DROW[new_dirs], 0)
    prop_c = pos[:, :, 1] + np.where(is_move, _DCOL[new_dirs], 0)
    blocked = grid[bi[:, None], prop_r, prop_c] != _FLOOR
    prop_r = np.where(blocked, pos[:, :, 0], prop_r)
    prop_c = np.where(blocked, pos[:, :, 1], prop_c)
    same = (prop_r[:, 0] == prop_r[:, 1]) & (prop_c[:, 0] == prop_c[:, 1])
    swap = (
        (prop_r[:, 0] == pos[:, 1, 0])
        & (prop_c[:, 0] == pos[:, 1, 1])
        & (prop_r[:, 1] == pos[:, 0, 0])
        & (prop_c[:, 1] == pos[:, 0, 1])
    )
    cancel = same | swap
    prop_r = np.where(cancel[:, None], pos[:, :, 0], prop_r)
    prop_c = np.where(cancel[:, None], pos[:, :, 1], prop_c)
    pos[:, :, 0] = prop_r
    pos[:, :, 1] = prop_c
    dirs[:] = new_dirs

    # Interactions, agent 0 before agent 1 so its effects are visible.
    for i in (0, 1):
        active = actions[:, i] == _INTERACT
        if not active.any():
            continue
        fr = pos[:, i, 0] + _DROW[dirs[:, i]]
        fc = pos[:, i, 1] + _DCOL[dirs[:, i]]
        tile = grid[bi, fr, fc]
        cnt = counter[bi, fr, fc]
        po = pot_onions[bi, fr, fc]
        pt = pot_timer[bi, fr, fc]
        h = held[:, i]
        empty = h == _NOTHING
        ready = (tile == _POT) & (po == 3) & (pt == 0)

        m_onion = active & empty & (tile == _ONION_PILE)
        m_plate = active & empty & (tile == _PLATE_PILE)
        m_take = active & empty & (tile == _WALL) & (cnt != 0)
        m_put = active & ~empty & (tile == _WALL) & (cnt == 0)
        m_pot = active & (h == _ONION) & (tile == _POT) & (po < 3)
        m_soup = active & (h == _PLATE) & ready
        m_serve = active & (h == _SOUP) & (tile == _GOAL)

        held[m_onion, i] = _ONION
        held[m_plate, i] = _PLATE
        held[m_take, i] = cnt[m_take]
        counter[bi[m_take], fr[m_take], fc[m_take]] = 0
        counter[bi[m_put], fr[m_put], fc[m_put]] = h[m_put]
        held[m_put, i] = _NOTHING
        pot_onions[bi[m_pot], fr[m_pot], fc[m_pot]] = po[m_pot] + 1
        m_start = m_pot & (po == 2)
        pot_timer[bi[m_start], fr[m_start], fc[m_start]] = cook_time
        held[m_pot, i] = _NOTHING
        held[m_soup, i] = _SOUP
        pot_onions[bi[m_soup], fr[m_soup], fc[m_soup]] = 0
        held[m_serve, i] = _NOTHING
        deliveries += m_serve
        reward += m_serve * delivery_reward

        shaped[:, i] += (
            m_plate * rew_plate_pickup
            + m_pot * rew_onion_potted
            + m_soup * rew_soup_pickup
        )
        events[:, i] |= (
            m_serve * _EV_DELIVERY
            + m_pot * _EV_ONION_POTTED
            + m_plate * _EV_PLATE_PICKUP
            + m_soup * _EV_SOUP_PICKUP
        ).astype(np.uint8)

    cooking = pot_timer > 0
    pot_timer[cooking] -= 1

    t += 1
    done[:] = t >= horizon
