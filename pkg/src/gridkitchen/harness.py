"""Rollout and evaluation machinery.

Episodes run on a padded canvas so a whole batch shares one array layout.
Batched execution is bit-identical to running each slot sequentially
with its split seed; the tests pin that equivalence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .env import (
    DEFAULT_CONFIG,
    Action,
    EnvConfig,
    observe,
    reset,
    step,
    trajectory_record,
)
from .generator import GeneratorConfig, sample_batch
from .levels import DEFAULT_CANVAS, Level, Tile, level_digest, pad
from .policies import (
    PRIVILEGED,
    GreedyPolicy,
    ParkPolicy,
    Policy,
    StayPolicy,
    floor_distances,
)
from .solvability import Certificate, RelayPolicy, solvability_check
from .stepper import BatchSim, available_backends, get_backend


@dataclass(frozen=True)
class HarnessConfig:
    env: EnvConfig = DEFAULT_CONFIG
    n_envs: int = 32
    seed: int = 0
    canvas: tuple[int, int] = DEFAULT_CANVAS
    shaping_initial: float = 1.0
    shaping_anneal_steps: int | None = None
    gamma: float = 0.999  # consumed by downstream learners and the scorer
    solved_min_deliveries: int = 2

    @property
    def horizon(self) -> int:
        return self.env.horizon

    def __post_init__(self):
        if self.env.horizon <= 0:
            raise ValueError("horizon must be positive")


DEFAULT_HARNESS = HarnessConfig()


@dataclass
class EpisodeStats:
    digest: int
    seed: int
    shared_return: int
    shaped_returns: tuple[int, int]
    deliveries: int
    solved: bool
    visit_counts: np.ndarray
    rewards: list[int] = field(default_factory=list, repr=False)


def split_seed(seed: int, *parts: int) -> int:
    """Deterministic, platform-stable child seed for an addressed subtask."""
    ss = np.random.SeedSequence([int(seed), *[int(p) for p in parts]])
    return int(ss.generate_state(1, np.uint64)[0])


def _canvas_for(levels: list[Level], config: HarnessConfig) -> tuple[int, int]:
    return (
        max(config.canvas[0], max(l.height for l in levels)),
        max(config.canvas[1], max(l.width for l in levels)),
    )


def _policy_view(policy: Policy, state, agent: int):
    return state if policy.observability == PRIVILEGED else observe(state, agent)


def rollout(
    level: Level,
    policy_a: Policy,
    policy_b: Policy,
    config: HarnessConfig = DEFAULT_HARNESS,
    seed: int = 0,
    trace: list[dict] | None = None,
) -> EpisodeStats:
    """One full episode on the padded canvas; optionally records the
    per-step trajectory into `trace`."""
    digest = level_digest(level)
    h, w = _canvas_for([level], config)
    state = reset(pad(level, h, w), seed, config.env)
    mems = [
        policy_a.reset_memory(split_seed(seed, 1)),
        policy_b.reset_memory(split_seed(seed, 2)),
    ]
    policies = (policy_a, policy_b)
    visits = np.zeros((h, w), dtype=np.int64)
    shared = 0
    shaped = [0, 0]
    deliveries = 0
    rewards = []
    for t in range(config.env.horizon):
        joint = []
        for i, pol in enumerate(policies):
            action, mems[i] = pol.act(_policy_view(pol, state, i), i, mems[i])
            joint.append(Action(action))
        out = step(state, (joint[0], joint[1]), config.env)
        if trace is not None:
            trace.append(trajectory_record(state.t, (joint[0], joint[1]), out))
        state = out.next_state
        shared += out.reward
        shaped[0] += out.shaped_reward[0]
        shaped[1] += out.shaped_reward[1]
        rewards.append(out.reward)
        for i in range(2):
            visits[state.agent_pos[i, 0], state.agent_pos[i, 1]] += 1
    deliveries = state.deliveries
    return EpisodeStats(
        digest=digest,
        seed=seed,
        shared_return=shared,
        shaped_returns=(shaped[0], shaped[1]),
        deliveries=int(deliveries),
        solved=int(deliveries) >= config.solved_min_deliveries,
        visit_counts=visits,
        rewards=rewards,
    )


def rollout_batch(
    levels: list[Level],
    policy_a: Policy,
    policy_b: Policy,
    config: HarnessConfig = DEFAULT_HARNESS,
    backend: str | None = None,
) -> list[EpisodeStats]:
    """Slot-parallel episodes over the batched kernel.

    Slot i reproduces rollout(levels[i], ..., seed=split_seed(config.seed, i))
    bit for bit.
    """
    if not levels:
        raise ValueError("need at least one level")
    if not isinstance(policy_a, Policy) or not isinstance(policy_b, Policy):
        raise TypeError("policy_a and policy_b must be Policy instances")
    B = len(levels)
    digests = [level_digest(l) for l in levels]
    seeds = [split_seed(config.seed, i) for i in range(B)]
    h, w = _canvas_for(levels, config)
    sim = BatchSim(
        [pad(l, h, w) for l in levels], seeds, config.env, backend=backend
    )
    policies = (policy_a, policy_b)
    mems = [
        [pol.reset_memory(split_seed(seeds[b], i + 1)) for b in range(B)]
        for i, pol in enumerate(policies)
    ]
    visits = np.zeros((B, h, w), dtype=np.int64)
    shared = np.zeros(B, dtype=np.int64)
    shaped = np.zeros((B, 2), dtype=np.int64)
    rewards = [[] for _ in range(B)]
    actions = np.zeros((B, 2), dtype=np.int8)
    for t in range(config.env.horizon):
        for b in range(B):
            state = sim.state_view(b)
            for i, pol in enumerate(policies):
                action, mems[i][b] = pol.act(_policy_view(pol, state, i), i, mems[i][b])
                actions[b, i] = int(action)
        rew, shp, _, _ = sim.step(actions)
        shared += rew
        shaped += shp
        bi = np.arange(B)
        for i in range(2):
            visits[bi, sim.pos[:, i, 0], sim.pos[:, i, 1]] += 1
        for b in range(B):
            rewards[b].append(int(rew[b]))
    return [
        EpisodeStats(
            digest=digests[b],
            seed=seeds[b],
            shared_return=int(shared[b]),
            shaped_returns=(int(shaped[b, 0]), int(shaped[b, 1])),
            deliveries=int(sim.deliveries[b]),
            solved=int(sim.deliveries[b]) >= config.solved_min_deliveries,
            visit_counts=visits[b],
            rewards=rewards[b],
        )
        for b in range(B)
    ]


def metrics(stats: list[EpisodeStats]) -> dict:
    """Mean shared return and the fraction of episodes that were solved."""
    if not stats:
        raise ValueError("no episodes")
    return {
        "mean_return": float(np.mean([s.shared_return for s in stats])),
        "solved_rate": float(np.mean([s.solved for s in stats])),
    }


def metrics_report(
    stats: list[EpisodeStats], names: dict[int, str] | None = None
) -> dict:
    """Full evaluation record: aggregate metrics plus a per-level breakdown
    and the across-level return spread."""
    by_level: dict[int, list[EpisodeStats]] = {}
    for s in stats:
        by_level.setdefault(s.digest, []).append(s)
    per_level = []
    for digest in sorted(by_level):
        level_stats = by_level[digest]
        entry = {
            "digest": f"{digest:016x}",
            "n_episodes": len(level_stats),
            **metrics(level_stats),
        }
        if names and digest in names:
            entry["name"] = names[digest]
        per_level.append(entry)
    level_means = [e["mean_return"] for e in per_level]
    report = {
        **metrics(stats),
        "n_episodes": len(stats),
        "return_std_across_levels": float(np.std(level_means)),
        "per_level": per_level,
    }
    return report


def crossplay_matrix(
    policies: list[tuple[str, Policy]],
    levels: list[Level],
    episodes_per_cell: int = 1,
    config: HarnessConfig = DEFAULT_HARNESS,
) -> dict:
    """Pairwise evaluation: cell (i, j) plays policy i as the first agent
    and policy j as the second, averaged over levels and episodes."""
    if not policies or not levels:
        raise ValueError("need at least one policy and one level")
    matrix = []
    for i, (_, pa) in enumerate(policies):
        row = []
        for j, (_, pb) in enumerate(policies):
            stats = [
                rollout(level, pa, pb, config, seed=split_seed(config.seed, i, j, l, e))
                for l, level in enumerate(levels)
                for e in range(episodes_per_cell)
            ]
            row.append(metrics(stats))
        matrix.append(row)
    return {"policies": [name for name, _ in policies], "matrix": matrix}


def shaping_coefficient(step_index: int, config: HarnessConfig = DEFAULT_HARNESS) -> float:
    """Linear decay multiplier for shaped rewards at a training step."""
    if step_index < 0:
        raise ValueError("step must be non-negative")
    anneal = config.shaping_anneal_steps
    if anneal is None:
        return config.shaping_initial
    if anneal <= 0:
        return 0.0
    return config.shaping_initial * max(0.0, 1.0 - step_index / anneal)


def visit_heatmap(stats: list[EpisodeStats]) -> np.ndarray:
    """Elementwise sum of the episodes' visit counters."""
    if not stats:
        raise ValueError("no episodes")
    shapes = {s.visit_counts.shape for s in stats}
    if len(shapes) != 1:
        raise ValueError(f"mixed canvas shapes: {sorted(shapes)}")
    return np.sum([s.visit_counts for s in stats], axis=0)


def heatmap_csv(grid: np.ndarray) -> str:
    return "\n".join(",".join(str(int(v)) for v in row) for row in grid) + "\n"


BENCH_ENV_COUNTS = (1, 32, 256, 1024, 4096, 16384)


def throughput_bench(
    env_counts: tuple[int, ...] = BENCH_ENV_COUNTS,
    steps: int = 1000,
    seed: int = 0,
    backends: tuple[str, ...] | None = None,
    config: HarnessConfig = DEFAULT_HARNESS,
) -> list[dict]:
    """Aggregate environment steps per second under random actions.

    One row per kernel backend so the compiled and fallback paths can be
    compared directly. Episodes auto-reset at the horizon; action
    sampling is included in the measured time, matching how a training
    loop would drive the simulator.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if backends is None:
        backends = available_backends()
    level_pool = sample_batch(
        np.random.default_rng(split_seed(seed, 0)),
        GeneratorConfig(canvas_h=config.canvas[0], canvas_w=config.canvas[1]),
        min(256, max(env_counts)),
    )
    rows = []
    for backend in backends:
        sps = {}
        for n in env_counts:
            levels = [level_pool[i % len(level_pool)] for i in range(n)]
            seeds = [split_seed(seed, 2, n, i) for i in range(n)]
            sim = BatchSim(levels, seeds, config.env, backend=backend)
            rng = np.random.default_rng(split_seed(seed, 1, n))
            t0 = time.perf_counter()
            for _ in range(steps):
                actions = rng.integers(0, 6, size=(n, 2), dtype=np.int8)
                _, _, _, done = sim.step(actions)
                if done.all():
                    sim.reset_all()
            elapsed = time.perf_counter() - t0
            sps[n] = n * steps / elapsed
        rows.append({"name": f"gridkitchen[{backend}]", "sps": sps})
    return rows


def bench_csv(rows: list[dict]) -> str:
    counts = sorted({n for row in rows for n in row["sps"]})
    lines = ["env," + ",".join(str(n) for n in counts)]
    for row in rows:
        lines.append(
            row["name"] + "," + ",".join(f"{row['sps'][n]:.1f}" for n in counts)
        )
    return "\n".join(lines) + "\n"


# --- certificate replay ------------------------------------------------------


def _station_access_ok(level: Level, component: set[tuple[int, int]]) -> bool:
    for tile in (Tile.POT, Tile.ONION_PILE, Tile.PLATE_PILE, Tile.GOAL):
        cells = level.station_cells(tile)
        if not any(
            (r + dr, c + dc) in component
            for r, c in cells
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
        ):
            return False
    return True


def parking_cell(level: Level, chef_start: tuple[int, int]) -> tuple[int, int] | None:
    """A floor cell a helper can occupy without cutting the solo cook's
    circuit: farthest from any pot such that its removal keeps the cook
    connected to a pot, both piles and a goal."""
    grid = level.grid
    pot_access = [
        (r + dr, c + dc)
        for r, c in level.station_cells(Tile.POT)
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
        if grid[r + dr, c + dc] == Tile.FLOOR
    ]
    dist: dict[tuple[int, int], int] = {}
    for cell in pot_access:
        for k, v in floor_distances(grid, cell).items():
            if k not in dist or v < dist[k]:
                dist[k] = v
    candidates = sorted(dist, key=lambda c: (-dist[c], c))
    for cand in candidates:
        if cand == chef_start:
            continue
        component: set[tuple[int, int]] = set()
        seen = {cand}
        stack = [chef_start]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            component.add(cur)
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nxt = (cur[0] + dr, cur[1] + dc)
                if grid[nxt[0], nxt[1]] == Tile.FLOOR and nxt not in seen:
                    stack.append(nxt)
        if _station_access_ok(level, component):
            return cand
    return None


def replay_certificate(
    level: Level,
    certificate: Certificate,
    config: HarnessConfig = DEFAULT_HARNESS,
    seed: int = 0,
) -> tuple[EpisodeStats, str]:
    """Demonstrate a solvability certificate under the real dynamics.

    Tries the plain greedy pair, each solo-cook split (against a stay
    partner and against a helper parked off the cook's circuit), and the
    certificate's relay plan, returning the first attempt that delivers.
    """
    greedy = GreedyPolicy()
    stay = StayPolicy()
    relay = RelayPolicy(certificate)
    starts = [(r, c) for r, c, _ in level.agent_starts]
    strategies: list[tuple[str, Policy, Policy]] = [
        ("greedy+greedy", greedy, greedy),
        ("greedy+stay", greedy, stay),
        ("stay+greedy", stay, greedy),
        ("relay", relay, relay),
    ]
    park_for_b = parking_cell(level, starts[0])
    if park_for_b is not None:
        strategies.append(("greedy+park", greedy, ParkPolicy(park_for_b)))
    park_for_a = parking_cell(level, starts[1])
    if park_for_a is not None:
        strategies.append(("park+greedy", ParkPolicy(park_for_a), greedy))
    last = None
    for k, (name, pa, pb) in enumerate(strategies):
        stats = rollout(level, pa, pb, config, seed=split_seed(seed, k))
        last = (stats, name)
        if stats.deliveries >= 1:
            return stats, name
    return last
