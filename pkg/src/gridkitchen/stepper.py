"""Backend selection and the packed batch simulator.

The hot loop lives in a compiled extension (`_stepper_cy`) with a
vectorised numpy fallback (`_stepper_np`); whichever is available is
picked at import time. Set GRIDKITCHEN_BACKEND=python|compiled to force
one explicitly.
"""

from __future__ import annotations

import os

import numpy as np

from . import _stepper_np
from .env import DEFAULT_CONFIG, EnvConfig, EnvState, reset
from .levels import Level, pad

try:
    from . import _stepper_cy
except ImportError:  # extension not built; numpy fallback still works
    _stepper_cy = None

_BACKENDS = {"python": _stepper_np}
if _stepper_cy is not None:
    _BACKENDS["compiled"] = _stepper_cy


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str | None = None):
    """Resolve a kernel module by name; None picks the environment override
    or the fastest available."""
    if name is None:
        name = os.environ.get("GRIDKITCHEN_BACKEND", "auto")
    if name == "auto":
        name = "compiled" if "compiled" in _BACKENDS else "python"
    if name not in _BACKENDS:
        raise ValueError(
            f"backend {name!r} not available (have {available_backends()})"
        )
    return _BACKENDS[name]


def default_backend_name() -> str:
    return get_backend().NAME


class BatchSim:
    """Lock-step simulator for B independent episodes.

    Levels are padded to a common canvas so the whole batch lives in a few
    contiguous arrays; a slot's full state can be viewed as an EnvState at
    any time. Stepping mutates only this object's own buffers.
    """

    def __init__(
        self,
        levels: list[Level],
        seeds: list[int],
        config: EnvConfig = DEFAULT_CONFIG,
        backend: str | None = None,
    ):
        if not levels:
            raise ValueError("need at least one level")
        if len(seeds) != len(levels):
            raise ValueError("one seed per slot required")
        self.config = config
        self.kernel = get_backend(backend)
        h = max(l.height for l in levels)
        w = max(l.width for l in levels)
        self.levels = [pad(l, h, w) for l in levels]
        self.seeds = list(seeds)
        B = len(levels)
        self.shape = (B, h, w)

        self.grid = np.stack([l.grid for l in self.levels]).astype(np.int8)
        self.grid = np.ascontiguousarray(self.grid)
        self.pos = np.zeros((B, 2, 2), dtype=np.int16)
        self.dirs = np.zeros((B, 2), dtype=np.int8)
        self.held = np.zeros((B, 2), dtype=np.int8)
        self.counter = np.zeros((B, h, w), dtype=np.int8)
        self.pot_onions = np.zeros((B, h, w), dtype=np.int8)
        self.pot_timer = np.zeros((B, h, w), dtype=np.int16)
        self.t = np.zeros(B, dtype=np.int32)
        self.deliveries = np.zeros(B, dtype=np.int32)

        self._reward = np.zeros(B, dtype=np.int32)
        self._shaped = np.zeros((B, 2), dtype=np.int32)
        self._events = np.zeros((B, 2), dtype=np.uint8)
        self._done = np.zeros(B, dtype=np.uint8)
        self.reset_all()

    @property
    def num_slots(self) -> int:
        return self.shape[0]

    def reset_all(self) -> None:
        self.reset_slots(np.ones(self.num_slots, dtype=bool))

    def reset_slots(self, mask: np.ndarray) -> None:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return
        for b in idx:
            starts = self.levels[b].agent_starts
            for i, (r, c, d) in enumerate(starts):
                self.pos[b, i, 0] = r
                self.pos[b, i, 1] = c
                self.dirs[b, i] = int(d)
        self.held[idx] = 0
        self.counter[idx] = 0
        self.pot_onions[idx] = 0
        self.pot_timer[idx] = 0
        self.t[idx] = 0
        self.deliveries[idx] = 0

    def step(self, actions: np.ndarray):
        """Advance every slot with the given (B, 2) action codes.

        Returns (reward, shaped, events, done) views valid until the next
        call. Slots already at the horizon must be reset first.
        """
        if self.t.max(initial=0) >= self.config.horizon:
            raise RuntimeError("stepping a finished slot; reset it first")
        acts = np.ascontiguousarray(actions, dtype=np.int8)
        c = self.config
        self.kernel.step_batch(
            self.grid,
            self.pos,
            self.dirs,
            self.held,
            self.counter,
            self.pot_onions,
            self.pot_timer,
            self.t,
            self.deliveries,
            acts,
            self._reward,
            self._shaped,
            self._events,
            self._done,
            c.cook_time,
            c.delivery_reward,
            c.shaped_onion_potted,
            c.shaped_plate_pickup,
            c.shaped_soup_pickup,
            c.horizon,
        )
        return self._reward, self._shaped, self._events, self._done

    def state_view(self, slot: int) -> EnvState:
        """Copy of one slot's state as a regular EnvState."""
        return EnvState(
            level=self.levels[slot],
            agent_pos=self.pos[slot].copy(),
            agent_dir=self.dirs[slot].copy(),
            held=self.held[slot].copy(),
            counter_item=self.counter[slot].copy(),
            pot_onions=self.pot_onions[slot].copy(),
            pot_timer=self.pot_timer[slot].copy(),
            t=int(self.t[slot]),
            deliveries=int(self.deliveries[slot]),
            rng_state=self.seeds[slot],
        )

    def load_state(self, slot: int, state: EnvState) -> None:
        """Overwrite one slot from an EnvState on the same canvas."""
        if state.level != self.levels[slot]:
            raise ValueError("state level does not match the slot's level")
        self.pos[slot] = state.agent_pos
        self.dirs[slot] = state.agent_dir
        self.held[slot] = state.held
        self.counter[slot] = state.counter_item
        self.pot_onions[slot] = state.pot_onions
        self.pot_timer[slot] = state.pot_timer
        self.t[slot] = state.t
        self.deliveries[slot] = state.deliveries
        self.seeds[slot] = state.rng_state
