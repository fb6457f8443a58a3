"""Time-varying reward processes and local observation.

The controller never sees the full reward field: at each step it observes
rewards only inside a neighborhood of the current state, and plans against
that frozen snapshot.  Processes are seeded and draw a fixed amount of
randomness per tick regardless of what the controller does, so two runs
with the same seed see the same exogenous reward stream even if they visit
(and consume) different states.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from io import StringIO
from typing import Iterable

import numpy as np

from .controller import RewardSnapshot
from .system import TransitionSystem


class RewardProcess:
    """Interface: a nonnegative reward per (state, time), advanced tick by
    tick, with deterministic replay under a fixed seed."""

    def full_reward(self, q: str, k: int) -> float:
        raise NotImplementedError

    def advance(self, k: int) -> None:
        """Move the process to tick ``k``; must be called in order."""
        raise NotImplementedError

    def consume(self, q: str) -> None:
        """Zero the reward at ``q`` (a visit collected it).  Optional."""


class OutOfOrderTickError(RuntimeError):
    """advance() was called with a tick other than current + 1."""


@dataclass(frozen=True)
class Neighborhood:
    """Which states are observable from a given current state.

    policy 'metric': Euclidean distance over state coordinates <= radius;
    policy 'hops': graph distance (number of transitions) <= radius;
    policy 'all': everything.  The current state is always a member.
    """

    ts: TransitionSystem
    policy: str
    radius: float | None = None

    def __post_init__(self):
        if self.policy not in ("metric", "hops", "all"):
            raise ValueError(f"unknown neighborhood policy '{self.policy}'")
        if self.policy in ("metric", "hops"):
            if self.radius is None or self.radius < 0:
                raise ValueError(f"policy '{self.policy}' needs a nonnegative radius")
        if self.policy == "metric" and self.ts.coords is None:
            raise ValueError("metric neighborhood needs state coordinates")

    def members(self, center: str, k: int = 0) -> frozenset:
        if self.policy == "all":
            return frozenset(self.ts.states)
        if self.policy == "metric":
            cx, cy = self.ts.coords[center]
            return frozenset(
                q
                for q in self.ts.states
                if math.hypot(self.ts.coords[q][0] - cx, self.ts.coords[q][1] - cy)
                <= self.radius
            )
        # hops: breadth-first ring up to the radius
        seen = {center}
        ring = [center]
        for _ in range(int(self.radius)):
            nxt = []
            for q in ring:
                for q2, _w in self.ts.successors(q):
                    if q2 not in seen:
                        seen.add(q2)
                        nxt.append(q2)
            ring = nxt
        return frozenset(seen)

    def contains(self, q: str, center: str, k: int = 0) -> bool:
        return q in self.members(center, k)


def observe(rp: RewardProcess, nb: Neighborhood, qk: str, k: int) -> RewardSnapshot:
    """Snapshot of the rewards visible from ``qk`` at time ``k``; states
    outside the neighborhood read exactly zero."""
    values = {q: rp.full_reward(q, k) for q in nb.members(qk, k)}
    return RewardSnapshot(values)


class CaseStudyRewards(RewardProcess):
    """Decaying, randomly respawning rewards.

    Every state starts with a value drawn uniformly from [low, high].
    Each tick, positive values are multiplied by the decay factor, and
    zero-valued states respawn with the given probability to a fresh
    uniform draw.  The per-tick random draws are made for every state
    whether used or not, so the exogenous stream depends only on the seed.
    """

    def __init__(
        self,
        states: Iterable[str],
        seed: int,
        decay: float = 0.9,
        respawn_prob: float = 0.05,
        low: float = 10.0,
        high: float = 25.0,
    ):
        if not (0 < decay <= 1):
            raise ValueError(f"decay must be in (0, 1], got {decay}")
        if not (0 <= respawn_prob <= 1):
            raise ValueError(f"respawn probability must be in [0, 1], got {respawn_prob}")
        if not (0 <= low <= high):
            raise ValueError(f"need 0 <= low <= high, got [{low}, {high}]")
        self.states = tuple(sorted(states))
        self._pos = {q: i for i, q in enumerate(self.states)}
        self.seed = seed
        self.decay = decay
        self.respawn_prob = respawn_prob
        self.low = low
        self.high = high
        self._rng = np.random.default_rng(seed)
        self._hash = hashlib.sha256()
        self._k = 0
        self._values = self._draw_values()

    def _draw_values(self) -> np.ndarray:
        vals = self._rng.uniform(self.low, self.high, len(self.states))
        self._hash.update(vals.tobytes())
        return vals

    def full_reward(self, q: str, k: int) -> float:
        if k != self._k:
            raise ValueError(f"process is at tick {self._k}, asked for {k}")
        return float(self._values[self._pos[q]])

    def advance(self, k: int) -> None:
        if k != self._k + 1:
            raise OutOfOrderTickError(f"expected tick {self._k + 1}, got {k}")
        spawn_roll = self._rng.random(len(self.states))
        self._hash.update(spawn_roll.tobytes())
        fresh = self._draw_values()
        positive = self._values > 0
        self._values = np.where(
            positive,
            self._values * self.decay,
            np.where(spawn_roll < self.respawn_prob, fresh, 0.0),
        )
        self._k = k

    def consume(self, q: str) -> None:
        self._values[self._pos[q]] = 0.0

    def stream_fingerprint(self) -> str:
        """Digest of every random draw made so far; equal seeds and equal
        tick counts give equal fingerprints regardless of consumption."""
        return self._hash.hexdigest()


class ScriptedRewards(RewardProcess):
    """Table-driven process for exact-value tests.

    Entries (k, state, value) assign the state's reward at tick k; a value
    persists until the next assignment for that state.  Consumption zeroes
    the current value; a later assignment overrides it again.
    """

    def __init__(self, entries: Iterable[tuple[int, str, float]]):
        table: dict[int, dict[str, float]] = {}
        for k, q, v in entries:
            if v < 0:
                raise ValueError(f"negative scripted reward {v} at (k={k}, {q})")
            table.setdefault(int(k), {})[q] = float(v)
        self._table = table
        self._k = 0
        self._values: dict[str, float] = {}
        self._apply(0)

    def _apply(self, k: int) -> None:
        for q, v in self._table.get(k, {}).items():
            self._values[q] = v

    def full_reward(self, q: str, k: int) -> float:
        if k != self._k:
            raise ValueError(f"process is at tick {self._k}, asked for {k}")
        return self._values.get(q, 0.0)

    def advance(self, k: int) -> None:
        if k != self._k + 1:
            raise OutOfOrderTickError(f"expected tick {self._k + 1}, got {k}")
        self._k = k
        self._apply(k)

    def consume(self, q: str) -> None:
        self._values[q] = 0.0


def load_scripted_rewards(path) -> ScriptedRewards:
    """Read a `k,state,value` CSV (header optional)."""
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip() == "k":  # header
                continue
            k, q, v = row[0].strip(), row[1].strip(), row[2].strip()
            entries.append((int(k), q, float(v)))
    return ScriptedRewards(entries)


def scripted_rewards_csv(entries: Iterable[tuple[int, str, float]]) -> str:
    out = StringIO()
    writer = csv.writer(out)
    writer.writerow(["k", "state", "value"])
    for k, q, v in entries:
        writer.writerow([k, q, v])
    return out.getvalue()
