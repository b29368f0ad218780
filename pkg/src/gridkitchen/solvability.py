"""Region-based solvability analysis and certificate-driven relay play.

A kitchen is workable when onions, a plate and the finished soup can all
reach the right places, walking where floors connect and handing items
over shared counters where they do not. The check reasons about the
floor regions that contain agents; its positive answers come with a
certificate naming the pot, the regions and the handover counters, which
the relay policy can act out.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .env import EnvState, HeldItem
from .levels import ORIENTATION_DELTAS, Level, Tile
from .policies import PRIVILEGED, NavMemory, Navigator, Policy, nearest_station


def floor_regions(level: Level) -> np.ndarray:
    """Label 4-connected floor regions; -1 marks impassable cells."""
    g = level.grid
    labels = np.full(g.shape, -1, dtype=np.int32)
    next_label = 0
    for r in range(g.shape[0]):
        for c in range(g.shape[1]):
            if g[r, c] != Tile.FLOOR or labels[r, c] != -1:
                continue
            queue = deque([(r, c)])
            labels[r, c] = next_label
            while queue:
                cr, cc = queue.popleft()
                for dr, dc in ORIENTATION_DELTAS:
                    nr, nc = cr + dr, cc + dc
                    if g[nr, nc] == Tile.FLOOR and labels[nr, nc] == -1:
                        labels[nr, nc] = next_label
                        queue.append((nr, nc))
            next_label += 1
    return labels


@dataclass(frozen=True)
class Hop:
    """One handover: an item crosses `counter` from region src to dst."""

    src: int
    counter: tuple[int, int]
    dst: int


@dataclass(frozen=True)
class Certificate:
    pot: tuple[int, int]
    agent_regions: tuple[int, int]
    load_region: int
    serve_region: int
    onion_route: tuple[Hop, ...]
    plate_route: tuple[Hop, ...]
    goal_route: tuple[Hop, ...]

    @property
    def handover_counters(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            hop.counter
            for route in (self.onion_route, self.plate_route, self.goal_route)
            for hop in route
        )

    def to_record(self) -> dict:
        def hops(route):
            return [[h.src, list(h.counter), h.dst] for h in route]

        return {
            "pot": list(self.pot),
            "agent_regions": list(self.agent_regions),
            "load_region": self.load_region,
            "serve_region": self.serve_region,
            "onion_route": hops(self.onion_route),
            "plate_route": hops(self.plate_route),
            "goal_route": hops(self.goal_route),
        }


@dataclass(frozen=True)
class SolvabilityResult:
    solvable: bool
    certificate: Certificate | None


def _regions_touching(labels: np.ndarray, cell: tuple[int, int]) -> set[int]:
    h, w = labels.shape
    out = set()
    for dr, dc in ORIENTATION_DELTAS:
        r, c = cell[0] + dr, cell[1] + dc
        if 0 <= r < h and 0 <= c < w and labels[r, c] >= 0:
            out.add(int(labels[r, c]))
    return out


def _access_map(level: Level, labels: np.ndarray, tile: Tile, keep: set[int]) -> set[int]:
    """Agent regions with direct working access to some station of `tile`."""
    out = set()
    for cell in level.station_cells(tile):
        out |= _regions_touching(labels, cell) & keep
    return out


def _transfer_edges(
    level: Level, labels: np.ndarray, keep: set[int]
) -> dict[tuple[int, int], list[tuple[int, int]]]:
    """Counter cells linking pairs of agent regions, keyed by region pair."""
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
    g = level.grid
    for r, c in np.argwhere(np.asarray(g) == Tile.WALL):
        touching = sorted(_regions_touching(labels, (int(r), int(c))) & keep)
        for i in range(len(touching)):
            for j in range(i + 1, len(touching)):
                edges.setdefault((touching[i], touching[j]), []).append((int(r), int(c)))
    for cells in edges.values():
        cells.sort()
    return edges


def _route_chain(
    edges: dict[tuple[int, int], list[tuple[int, int]]],
    sources: set[int],
    targets: set[int],
) -> list[int] | None:
    """Shortest region chain from any source to any target ([] = direct)."""
    if not sources or not targets:
        return None
    hit = sorted(sources & targets)
    if hit:
        return [hit[0]]
    neighbours: dict[int, list[int]] = {}
    for (a, b) in edges:
        neighbours.setdefault(a, []).append(b)
        neighbours.setdefault(b, []).append(a)
    parents: dict[int, int] = {s: s for s in sorted(sources)}
    queue = deque(sorted(sources))
    goal = None
    while queue and goal is None:
        cur = queue.popleft()
        for nxt in sorted(neighbours.get(cur, ())):
            if nxt in parents:
                continue
            parents[nxt] = cur
            if nxt in targets:
                goal = nxt
                break
            queue.append(nxt)
    if goal is None:
        return None
    chain = [goal]
    while parents[chain[-1]] != chain[-1]:
        chain.append(parents[chain[-1]])
    chain.reverse()
    return chain


def _assign_counters(
    chains: list[list[int]],
    edges: dict[tuple[int, int], list[tuple[int, int]]],
) -> list[tuple[Hop, ...]]:
    """Turn region chains into hop lists, spreading parallel flows over
    distinct counter cells where a pair of regions shares several."""
    claimed: dict[tuple[int, int], set[tuple[int, int]]] = {}
    routes = []
    for chain in chains:
        hops = []
        for a, b in zip(chain, chain[1:]):
            pair = (min(a, b), max(a, b))
            cells = edges[pair]
            taken = claimed.setdefault(pair, set())
            free = [c for c in cells if c not in taken]
            cell = free[0] if free else cells[len(taken) % len(cells)]
            taken.add(cell)
            hops.append(Hop(a, cell, b))
        routes.append(tuple(hops))
    return routes


def solvability_check(level: Level) -> SolvabilityResult:
    """Decide whether a cooperating pair could cook and deliver one soup.

    Sound but not complete: a certificate can be acted out under the real
    dynamics, while a negative answer only means no region/handover plan
    exists for the agents' reachable space (timing is ignored).
    """
    labels = floor_regions(level)
    agent_regions = tuple(
        int(labels[r, c]) for r, c, _ in level.agent_starts
    )
    keep = set(agent_regions)
    edges = _transfer_edges(level, labels, keep)
    onion_regions = _access_map(level, labels, Tile.ONION_PILE, keep)
    plate_regions = _access_map(level, labels, Tile.PLATE_PILE, keep)
    goal_regions = _access_map(level, labels, Tile.GOAL, keep)

    for pot in sorted(level.station_cells(Tile.POT)):
        pot_regions = sorted(_regions_touching(labels, pot) & keep)
        for load in pot_regions:
            onion_chain = _route_chain(edges, onion_regions, {load})
            if onion_chain is None:
                continue
            for serve in pot_regions:
                plate_chain = _route_chain(edges, plate_regions, {serve})
                if plate_chain is None:
                    continue
                goal_chain = _route_chain(edges, {serve}, goal_regions)
                if goal_chain is None:
                    continue
                onion_route, plate_route, goal_route = _assign_counters(
                    [onion_chain, plate_chain, goal_chain], edges
                )
                return SolvabilityResult(
                    True,
                    Certificate(
                        pot=pot,
                        agent_regions=agent_regions,
                        load_region=load,
                        serve_region=serve,
                        onion_route=onion_route,
                        plate_route=plate_route,
                        goal_route=goal_route,
                    ),
                )
    return SolvabilityResult(False, None)


class RelayPolicy(Policy):
    """Acts out a solvability certificate: loads the pot, serves, and moves
    items over the certificate's handover counters when regions differ."""

    observability = PRIVILEGED

    def __init__(self, certificate: Certificate):
        self.cert = certificate
        self.nav = Navigator()
        self._label_cache = None
        self._label_level = None

    def reset_memory(self, episode_seed: int | None = None):
        key = [0x7E1A] if episode_seed is None else [0x7E1A, episode_seed]
        return NavMemory(rng=np.random.default_rng(np.random.SeedSequence(key)))

    def act(self, view: EnvState, agent: int, memory: NavMemory):
        target, interact = self._intent(view, agent)
        return self.nav.act(view, agent, target, interact, memory), memory

    # Route helpers: the certificate's hop counters seen from one region.

    def _outbound(self, route, region):
        for hop in route:
            if hop.src == region:
                return hop.counter
        return None

    def _inbound(self, route, region):
        for hop in route:
            if hop.dst == region:
                return hop.counter
        return None

    def _touched(self, state, region, tile):
        labels = self._labels(state)
        return [
            cell
            for cell in state.level.station_cells(tile)
            if region in _regions_touching(labels, cell)
        ]

    def _labels(self, state):
        if self._label_level is not state.level:
            self._label_cache = floor_regions(state.level)
            self._label_level = state.level
        return self._label_cache

    def _intent(self, state: EnvState, agent: int):
        cert = self.cert
        region = cert.agent_regions[agent]
        held = HeldItem(int(state.held[agent]))
        pot = cert.pot
        onions = int(state.pot_onions[pot])
        timer = int(state.pot_timer[pot])
        ready = onions == 3 and timer == 0
        cooking = timer > 0
        fillable = onions < 3

        out_onion = self._outbound(cert.onion_route, region)
        in_onion = self._inbound(cert.onion_route, region)
        out_plate = self._outbound(cert.plate_route, region)
        in_plate = self._inbound(cert.plate_route, region)
        out_soup = self._outbound(cert.goal_route, region)
        in_soup = self._inbound(cert.goal_route, region)

        def counter_item(cell):
            return HeldItem(int(state.counter_item[cell])) if cell else None

        soup_waiting = in_soup is not None and counter_item(in_soup) == HeldItem.SOUP

        if held == HeldItem.SOUP:
            # A region with direct goal access never has an outbound soup
            # hop, so these cases are disjoint.
            goals = self._touched(state, region, Tile.GOAL)
            if goals:
                return nearest_station(state, agent, goals), True
            if out_soup:
                return out_soup, counter_item(out_soup) == HeldItem.NOTHING
            return None, False

        if held != HeldItem.NOTHING and soup_waiting:
            # The finished soup outranks whatever is in hand: stash the
            # item on a spare counter so the soup can be walked in.
            stash = self._spare_counter(state, agent, region)
            if stash is not None:
                return stash, True

        if held == HeldItem.PLATE:
            if region == cert.serve_region:
                return pot, ready
            if out_plate:
                return out_plate, counter_item(out_plate) == HeldItem.NOTHING
            return None, False

        if held == HeldItem.ONION:
            if region == cert.load_region:
                if fillable:
                    return pot, True
                # Pot is busy: wait back at the onion source, off the
                # pot lane the server needs.
                piles = self._touched(state, region, Tile.ONION_PILE)
                if piles:
                    return nearest_station(state, agent, piles), False
                return in_onion, False
            if out_onion:
                return out_onion, counter_item(out_onion) == HeldItem.NOTHING
            return None, False

        # Empty hands, in priority order: serve the pot, walk a finished
        # soup in, load onions, feed the handover counters, then idle
        # somewhere useful.
        if region == cert.serve_region and (ready or cooking):
            if in_plate and counter_item(in_plate) == HeldItem.PLATE:
                return in_plate, True
            piles = self._touched(state, region, Tile.PLATE_PILE)
            if piles:
                return nearest_station(state, agent, piles), True
        if soup_waiting:
            return in_soup, True
        if region == cert.load_region and fillable:
            if in_onion and counter_item(in_onion) == HeldItem.ONION:
                return in_onion, True
            piles = self._touched(state, region, Tile.ONION_PILE)
            if piles:
                return nearest_station(state, agent, piles), True
        # Feeder jobs stock by need so a counter shared between flows is
        # never jammed with a surplus item.
        partner_held = HeldItem(int(state.held[1 - agent]))
        feeds = []
        if out_onion and counter_item(out_onion) == HeldItem.NOTHING:
            in_transit = int(partner_held == HeldItem.ONION)
            if fillable and onions + in_transit < 3:
                feeds.append(Tile.ONION_PILE)
        if out_plate and counter_item(out_plate) == HeldItem.NOTHING:
            if (ready or cooking) and partner_held not in (
                HeldItem.PLATE,
                HeldItem.SOUP,
            ):
                feeds.append(Tile.PLATE_PILE)
        if ready or cooking:
            feeds.reverse()
        for tile in feeds:
            piles = self._touched(state, region, tile)
            if piles:
                return nearest_station(state, agent, piles), True
        # Idle waits, off the pot lane.
        if region == cert.serve_region and (ready or cooking) and in_plate:
            return in_plate, False
        if in_soup is not None and (ready or cooking):
            return in_soup, False
        if region == cert.load_region and fillable and in_onion:
            return in_onion, False
        if region == cert.load_region:
            piles = self._touched(state, region, Tile.ONION_PILE)
            if piles:
                return nearest_station(state, agent, piles), False
            return in_onion, False
        if region == cert.serve_region:
            piles = self._touched(state, region, Tile.PLATE_PILE)
            if piles:
                return nearest_station(state, agent, piles), False
            return in_plate, False
        return None, False

    def _spare_counter(self, state: EnvState, agent: int, region: int):
        """Nearest empty plain counter in my region that no flow uses."""
        labels = self._labels(state)
        grid = state.level.grid
        reserved = set(self.cert.handover_counters)
        cells = []
        for r, c in np.argwhere(np.asarray(grid) == Tile.WALL):
            cell = (int(r), int(c))
            if cell in reserved or state.counter_item[cell] != 0:
                continue
            if region in _regions_touching(labels, cell):
                cells.append(cell)
        return nearest_station(state, agent, cells) if cells else None
