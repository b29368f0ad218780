"""Dual-curriculum engine: scored replay buffer and level scoring.

The buffer keeps one entry per distinct level, samples by a mix of score
rank and staleness, and only grows past its floor once scores justify
evicting the weakest entry. Scores come from regret estimates: the
running-max return gap for replay methods and the best-vs-rest return
difference for teacher-driven ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .harness import HarnessConfig, Policy, rollout, split_seed
from .levels import Level, level_digest, parse_ascii, render_ascii
from .mutator import mutate


@dataclass(frozen=True)
class AccelConfig:
    n_mutations: int = 20
    subsample: int = 4


@dataclass(frozen=True)
class PlrConfig:
    capacity: int = 4000
    replay_prob: float = 0.5
    staleness_coef: float = 0.3
    temperature: float = 0.1
    rank_prioritization: bool = True
    min_fill_ratio: float = 0.5
    force_unique: bool = True
    robust: bool = True
    accel: AccelConfig | None = None
    clamp_negative_regret: bool = False

    def __post_init__(self):
        for name in ("replay_prob", "staleness_coef", "min_fill_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {v}")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")

    @classmethod
    def accel_preset(cls) -> "PlrConfig":
        return cls(replay_prob=0.8, accel=AccelConfig())


@dataclass
class EpisodeSummary:
    """What the scorer needs to know about one evaluation episode."""

    digest: int
    agent_returns: tuple[float, ...]
    shared_return: float
    value_estimates: list[float]
    max_known_return: float


def maxmc_score(ep: EpisodeSummary, clamp_negative: bool = False) -> float:
    """Running-max regret estimate: the mean gap between the best return
    ever seen on this level and each per-step value estimate. Signed
    unless clamping is requested."""
    if not ep.value_estimates:
        raise ValueError("value estimates are empty")
    gaps = [ep.max_known_return - v for v in ep.value_estimates]
    if clamp_negative:
        gaps = [max(0.0, g) for g in gaps]
    return float(np.mean(gaps))


def relative_regret(student_returns: list[float]) -> float:
    """Best student's return minus the mean of the remaining students';
    the classic two-student case reduces to best minus other."""
    if len(student_returns) < 2:
        raise ValueError("need at least two student returns")
    best = max(student_returns)
    rest = sorted(student_returns, reverse=True)[1:]
    return float(best - np.mean(rest))


@dataclass
class LevelBufferEntry:
    level: Level
    digest: int
    score: float
    last_sampled_episode: int
    insert_episode: int


class LevelBuffer:
    """Capacity-bounded score buffer with one slot per distinct level."""

    def __init__(self, config: PlrConfig):
        self.config = config
        self.entries: list[LevelBufferEntry] = []
        self._by_digest: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def fill_ratio(self) -> float:
        if self.config.capacity == 0:
            return 0.0
        return len(self.entries) / self.config.capacity

    def __contains__(self, digest: int) -> bool:
        return digest in self._by_digest


@dataclass(frozen=True)
class Decision:
    source: str  # "replay" or "generate"
    entry: LevelBufferEntry | None
    update_policy: bool


def insert_or_update(
    buffer: LevelBuffer, level: Level, score: float, episode_counter: int
) -> LevelBuffer:
    """Insert a scored level, updating in place when its digest is already
    present; a full buffer only admits scores beating the current minimum,
    evicting it (oldest first on ties)."""
    if not np.isfinite(score):
        raise ValueError(f"score must be finite, got {score}")
    digest = level_digest(level)
    idx = buffer._by_digest.get(digest)
    if idx is not None:
        buffer.entries[idx].score = float(score)
        return buffer
    entry = LevelBufferEntry(
        level=level,
        digest=digest,
        score=float(score),
        last_sampled_episode=episode_counter,
        insert_episode=episode_counter,
    )
    if len(buffer.entries) < buffer.config.capacity:
        buffer._by_digest[digest] = len(buffer.entries)
        buffer.entries.append(entry)
        return buffer
    if buffer.config.capacity == 0:
        return buffer
    scores = np.array([e.score for e in buffer.entries])
    low = scores.min()
    if score <= low:
        return buffer
    lows = np.flatnonzero(scores == low)
    victim = min(lows, key=lambda i: (buffer.entries[i].insert_episode, i))
    old = buffer.entries[victim]
    del buffer._by_digest[old.digest]
    buffer.entries[victim] = entry
    buffer._by_digest[digest] = int(victim)
    return buffer


def sampling_distribution(
    buffer: LevelBuffer, config: PlrConfig, episode_counter: int
) -> np.ndarray:
    """Replay distribution: rank-power score weights mixed with staleness.

    Score weights are (1/rank)^(1/temperature) over descending scores
    (ties rank the older entry first); staleness weights are proportional
    to the episodes since an entry was last sampled.
    """
    n = len(buffer.entries)
    if n == 0:
        raise ValueError("buffer is empty")
    scores = np.array([e.score for e in buffer.entries], dtype=np.float64)
    ages = np.array([e.insert_episode for e in buffer.entries], dtype=np.int64)
    order = np.lexsort((ages, np.arange(n), -scores))
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.arange(1, n + 1)
    if config.rank_prioritization:
        w = (1.0 / ranks) ** (1.0 / config.temperature)
    else:
        shifted = scores - scores.min()
        w = np.exp(shifted / config.temperature)
    w = w / w.sum()
    stale = np.array(
        [episode_counter - e.last_sampled_episode for e in buffer.entries],
        dtype=np.float64,
    )
    if stale.sum() <= 0:
        u = np.full(n, 1.0 / n)
    else:
        u = stale / stale.sum()
    return (1.0 - config.staleness_coef) * w + config.staleness_coef * u


def sample_from_buffer(
    buffer: LevelBuffer,
    config: PlrConfig,
    episode_counter: int,
    rng: np.random.Generator,
) -> LevelBufferEntry:
    """Draw one entry from the replay distribution and mark it sampled."""
    probs = sampling_distribution(buffer, config, episode_counter)
    idx = int(rng.choice(len(buffer.entries), p=probs))
    entry = buffer.entries[idx]
    entry.last_sampled_episode = episode_counter
    return entry


def decide_source(
    buffer: LevelBuffer,
    config: PlrConfig,
    rng: np.random.Generator,
    episode_counter: int = 0,
) -> Decision:
    """Replay-or-generate gate.

    Below the fill floor the curriculum always generates; afterwards it
    replays with the configured probability. Under the robust contract
    fresh levels are scored but never trained on.
    """
    filled = buffer.config.capacity > 0 and buffer.fill_ratio >= config.min_fill_ratio
    if filled and float(rng.random()) < config.replay_prob:
        entry = sample_from_buffer(buffer, config, episode_counter, rng)
        return Decision(source="replay", entry=entry, update_policy=True)
    return Decision(source="generate", entry=None, update_policy=not config.robust)


def accel_edit_cycle(
    buffer: LevelBuffer,
    config: PlrConfig,
    rng: np.random.Generator,
    evaluator,
    episode_counter: int = 0,
    replay_batch: list[LevelBufferEntry] | None = None,
) -> LevelBuffer:
    """Edit step: mutate the best of the replay batch and score the children.

    The highest-scoring `subsample` entries of the batch are each mutated,
    evaluated with the provided evaluator (level -> EpisodeSummary) and
    inserted. Children count as generated levels: in robust mode they are
    scored but not trained on.
    """
    if len(buffer) == 0:
        raise ValueError("buffer is empty")
    accel = config.accel or AccelConfig()
    if replay_batch is None:
        replay_batch = [
            sample_from_buffer(buffer, config, episode_counter, rng)
            for _ in range(accel.subsample)
        ]
    chosen = sorted(replay_batch, key=lambda e: (-e.score, e.insert_episode))
    chosen = chosen[: accel.subsample]
    for entry in chosen:
        child = mutate(entry.level, accel.n_mutations, rng)
        summary = evaluator(child)
        score = maxmc_score(summary, config.clamp_negative_regret)
        insert_or_update(buffer, child, score, episode_counter)
    return buffer


# --- persistence -------------------------------------------------------------


def buffer_to_jsonl(buffer: LevelBuffer) -> str:
    """Checkpoint: one JSON record per entry, scores kept to 17 significant
    digits so reloads are bit-exact."""
    lines = []
    for e in buffer.entries:
        lines.append(
            json.dumps(
                {
                    "digest": f"{e.digest:016x}",
                    "level": render_ascii(e.level),
                    "score": f"{e.score:.17g}",
                    "last_sampled_episode": e.last_sampled_episode,
                    "insert_episode": e.insert_episode,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def buffer_from_jsonl(text: str, config: PlrConfig) -> LevelBuffer:
    buffer = LevelBuffer(config)
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        level = parse_ascii(rec["level"])
        digest = level_digest(level)
        if f"{digest:016x}" != rec["digest"]:
            raise ValueError(f"digest mismatch for checkpointed level {rec['digest']}")
        entry = LevelBufferEntry(
            level=level,
            digest=digest,
            score=float(rec["score"]),
            last_sampled_episode=int(rec["last_sampled_episode"]),
            insert_episode=int(rec["insert_episode"]),
        )
        buffer._by_digest[digest] = len(buffer.entries)
        buffer.entries.append(entry)
    return buffer


# --- scripted evaluation -----------------------------------------------------


class ScriptedEvaluator:
    """Evaluate levels with a scripted policy pair.

    Produces EpisodeSummary records whose per-step value estimates are the
    discounted return-to-go of the rollout, a Monte-Carlo stand-in for a
    learned critic, and tracks the running best return per level digest.
    """

    def __init__(
        self,
        policy_a: Policy,
        policy_b: Policy,
        config: HarnessConfig = HarnessConfig(),
        seed: int = 0,
    ):
        self.policy_a = policy_a
        self.policy_b = policy_b
        self.config = config
        self.seed = seed
        self.max_returns: dict[int, float] = {}
        self.episodes = 0

    def __call__(self, level: Level) -> EpisodeSummary:
        self.episodes += 1
        stats = rollout(
            level,
            self.policy_a,
            self.policy_b,
            self.config,
            seed=split_seed(self.seed, self.episodes),
        )
        gamma = self.config.gamma
        values = []
        tail = 0.0
        for r in reversed(stats.rewards):
            tail = r + gamma * tail
            values.append(tail)
        values.reverse()
        shared = float(stats.shared_return)
        best = max(self.max_returns.get(stats.digest, shared), shared)
        self.max_returns[stats.digest] = best
        return EpisodeSummary(
            digest=stats.digest,
            agent_returns=(shared, shared),
            shared_return=shared,
            value_estimates=values,
            max_known_return=best,
        )
