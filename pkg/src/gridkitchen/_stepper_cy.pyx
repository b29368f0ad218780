# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched step kernel: per-slot C loops over the packed state.

Semantics are identical to `_stepper_np.step_batch`; the backend tests
assert bit-for-bit agreement with it and the scalar reference.
"""

import numpy as np

NAME = "compiled"

cdef int _FLOOR = 0
cdef int _WALL = 1
cdef int _ONION_PILE = 2
cdef int _PLATE_PILE = 3
cdef int _POT = 4
cdef int _GOAL = 5

cdef int _NOTHING = 0
cdef int _ONION = 1
cdef int _PLATE = 2
cdef int _SOUP = 3
cdef int _INTERACT = 4

cdef int[4] _AD_DIR = [2, 3, 0, 1]
cdef int[4] _DROW = [-1, 1, 0, 0]
cdef int[4] _DCOL = [0, 0, -1, 1]

cdef int _EV_DELIVERY = 1
cdef int _EV_ONION_POTTED = 2
cdef int _EV_PLATE_PICKUP = 4
cdef int _EV_SOUP_PICKUP = 8


def step_batch(
    signed char[:, :, ::1] grid,
    short[:, :, ::1] pos,
    signed char[:, ::1] dirs,
    signed char[:, ::1] held,
    signed char[:, :, ::1] counter,
    signed char[:, :, ::1] pot_onions,
    short[:, :, ::1] pot_timer,
    int[::1] t,
    int[::1] deliveries,
    signed char[:, ::1] actions,
    int[::1] reward,
    int[:, ::1] shaped,
    unsigned char[:, ::1] events,
    unsigned char[::1] done,
    int cook_time,
    int delivery_reward,
    int rew_onion_potted,
    int rew_plate_pickup,
    int rew_soup_pickup,
    int horizon,
):
    cdef Py_ssize_t B = grid.shape[0]
    cdef Py_ssize_t H = grid.shape[1]
    cdef Py_ssize_t W = grid.shape[2]
    cdef Py_ssize_t b, r, c
    cdef int i, a, d
    cdef int pr0, pc0, pr1, pc1, r0, c0, r1, c1
    cdef int fr, fc, tile, h, po
    cdef int ev, shp

    for b in range(B):
        reward[b] = 0
        shaped[b, 0] = 0
        shaped[b, 1] = 0
        events[b, 0] = 0
        events[b, 1] = 0

        # Movement.
        r0 = pos[b, 0, 0]
        c0 = pos[b, 0, 1]
        r1 = pos[b, 1, 0]
        c1 = pos[b, 1, 1]
        a = actions[b, 0]
        if a < 4:
            d = _AD_DIR[a]
            dirs[b, 0] = <signed char> d
            pr0 = r0 + _DROW[d]
            pc0 = c0 + _DCOL[d]
        else:
            pr0 = r0
            pc0 = c0
        a = actions[b, 1]
        if a < 4:
            d = _AD_DIR[a]
            dirs[b, 1] = <signed char> d
            pr1 = r1 + _DROW[d]
            pc1 = c1 + _DCOL[d]
        else:
            pr1 = r1
            pc1 = c1
        if grid[b, pr0, pc0] != _FLOOR:
            pr0 = r0
            pc0 = c0
        if grid[b, pr1, pc1] != _FLOOR:
            pr1 = r1
            pc1 = c1
        if (pr0 == pr1 and pc0 == pc1) or (
            pr0 == r1 and pc0 == c1 and pr1 == r0 and pc1 == c0
        ):
            pr0 = r0
            pc0 = c0
            pr1 = r1
            pc1 = c1
        pos[b, 0, 0] = <short> pr0
        pos[b, 0, 1] = <short> pc0
        pos[b, 1, 0] = <short> pr1
        pos[b, 1, 1] = <short> pc1

        # Interactions, agent 0 first.
        for i in range(2):
            if actions[b, i] != _INTERACT:
                continue
            d = dirs[b, i]
            fr = pos[b, i, 0] + _DROW[d]
            fc = pos[b, i, 1] + _DCOL[d]
            tile = grid[b, fr, fc]
            h = held[b, i]
            ev = 0
            shp = 0
            if h == _NOTHING:
                if tile == _ONION_PILE:
                    held[b, i] = <signed char> _ONION
                elif tile == _PLATE_PILE:
                    held[b, i] = <signed char> _PLATE
                    shp += rew_plate_pickup
                    ev |= _EV_PLATE_PICKUP
                elif tile == _WALL and counter[b, fr, fc] != 0:
                    held[b, i] = counter[b, fr, fc]
                    counter[b, fr, fc] = 0
            else:
                if tile == _WALL and counter[b, fr, fc] == 0:
                    counter[b, fr, fc] = <signed char> h
                    held[b, i] = <signed char> _NOTHING
                elif tile == _POT and h == _ONION:
                    po = pot_onions[b, fr, fc]
                    if po < 3:
                        pot_onions[b, fr, fc] = <signed char> (po + 1)
                        if po + 1 == 3:
                            pot_timer[b, fr, fc] = <short> cook_time
                        held[b, i] = <signed char> _NOTHING
                        shp += rew_onion_potted
                        ev |= _EV_ONION_POTTED
                elif tile == _POT and h == _PLATE:
                    if pot_onions[b, fr, fc] == 3 and pot_timer[b, fr, fc] == 0:
                        held[b, i] = <signed char> _SOUP
                        pot_onions[b, fr, fc] = 0
                        shp += rew_soup_pickup
                        ev |= _EV_SOUP_PICKUP
                elif tile == _GOAL and h == _SOUP:
                    held[b, i] = <signed char> _NOTHING
                    deliveries[b] += 1
                    reward[b] += delivery_reward
                    ev |= _EV_DELIVERY
            shaped[b, i] += shp
            events[b, i] |= <unsigned char> ev

        # Cooking pots tick down.
        for r in range(H):
            for c in range(W):
                if pot_timer[b, r, c] > 0:
                    pot_timer[b, r, c] -= 1

        t[b] += 1
        done[b] = 1 if t[b] >= horizon else 0
