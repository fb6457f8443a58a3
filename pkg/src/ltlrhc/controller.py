"""Horizon-constrained reward maximizers.

Each solve picks, among all horizon-N product trajectories from the anchor
state(s), one that maximizes the sum of observed rewards over the visited
system states, subject to an energy constraint at one trajectory index.
The constraint is what makes the closed loop eventually drive the energy
to zero and hence satisfy the temporal specification.

Two interchangeable backends are provided: a plain depth-first enumeration
(the oracle; exponential in N) and a per-stage dynamic program over
(step, product state) that is linear in N times the number of product
transitions.  Ties between reward-optimal trajectories are always broken
toward the lexicographically smallest sequence of state ids (anchor first
when several anchors compete), so both backends return identical results
and closed-loop runs replay deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .product import EnergyMap, ProductAutomaton, ProductState


class InfeasibleError(RuntimeError):
    """A receding-horizon solve found no admissible trajectory.

    Under the documented preconditions this cannot happen; seeing it means
    the caller fed an anchor with infinite energy or an inconsistent
    previous trajectory.
    """


class AnchorMismatchError(ValueError):
    """The anchor is not the first state of the previous predicted
    trajectory, violating the receding equality."""


@dataclass(frozen=True)
class PredictedTrajectory:
    """Horizon-N trajectory p_1 .. p_N together with its anchor p_k."""

    anchor: ProductState
    states: tuple[ProductState, ...]

    @property
    def horizon(self) -> int:
        return len(self.states)


class RewardSnapshot:
    """Frozen observed rewards at one planning instant, zero outside the
    observation neighborhood by construction."""

    def __init__(self, values: Mapping[str, float] | None = None):
        items = {}
        for q, v in (values or {}).items():
            fv = float(v)
            if fv < 0:
                raise ValueError(f"negative reward {fv} at state '{q}'")
            if fv > 0:
                items[q] = fv
        self._values = items

    def get(self, q: str) -> float:
        return self._values.get(q, 0.0)

    def support(self) -> frozenset:
        return frozenset(self._values)

    def items(self):
        return self._values.items()

    def __eq__(self, other):
        return isinstance(other, RewardSnapshot) and self._values == other._values

    def __repr__(self):
        return f"RewardSnapshot({self._values!r})"


EMPTY_SNAPSHOT = RewardSnapshot()


def predicted_reward(traj: PredictedTrajectory, r: RewardSnapshot) -> float:
    """Sum of snapshot rewards over the projected visited states; repeated
    visits count every time."""
    return sum(r.get(q) for q, _ in traj.states)


# ---------------------------------------------------------------------------
# Terminal constraints
# ---------------------------------------------------------------------------

class TerminalConstraint:
    """Admissibility filter applied at one (or more) trajectory indices."""

    def stage_filters(self, n: int, v: np.ndarray) -> dict[int, np.ndarray]:
        raise NotImplementedError

    def admits(self, stage: int, energy: float, n: int) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteTerminal(TerminalConstraint):
    """v(p_N) < infinity."""

    def stage_filters(self, n, v):
        return {n: np.isfinite(v)}

    def admits(self, stage, energy, n):
        return stage != n or math.isfinite(energy)


@dataclass(frozen=True)
class InitFinite(FiniteTerminal):
    """Same filter as FiniteTerminal; used by the time-zero controller."""


@dataclass(frozen=True)
class Decrease(TerminalConstraint):
    """v(p_N) < bound, with a finite positive bound."""

    bound: float

    def __post_init__(self):
        if not (0 < self.bound < math.inf):
            raise ValueError(f"Decrease bound must be finite and positive, got {self.bound}")

    def stage_filters(self, n, v):
        return {n: v < self.bound}

    def admits(self, stage, energy, n):
        return stage != n or energy < self.bound

@dataclass(frozen=True)
class ZeroAtIndex(TerminalConstraint):
    """v(p_index) = 0 for a 1-based trajectory index."""

    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"ZeroAtIndex index must be >= 1, got {self.index}")

    def stage_filters(self, n, v):
        if self.index > n:
            raise ValueError(f"ZeroAtIndex index {self.index} exceeds horizon {n}")
        return {self.index: v == 0.0}

    def admits(self, stage, energy, n):
        return stage != self.index or energy == 0.0


@dataclass(frozen=True)
class _Conjunction(TerminalConstraint):
    """Internal combinator; used by the block-executing baseline."""

    parts: tuple[TerminalConstraint, ...]

    def stage_filters(self, n, v):
        merged: dict[int, np.ndarray] = {}
        for part in self.parts:
            for stage, mask in part.stage_filters(n, v).items():
                merged[stage] = merged[stage] & mask if stage in merged else mask
        return merged

    def admits(self, stage, energy, n):
        return all(part.admits(stage, energy, n) for part in self.parts)


# ---------------------------------------------------------------------------
# Horizon solvers
# ---------------------------------------------------------------------------

def _reward_vector(p: ProductAutomaton, r: RewardSnapshot) -> np.ndarray:
    return np.fromiter((r.get(q) for q, _ in p.states), dtype=np.float64, count=p.size)


def _segment_max(cand: np.ndarray, row_ptr: np.ndarray, n: int) -> np.ndarray:
    """Per-source maximum over edge candidates; -inf for edgeless sources."""
    out = np.full(n, -np.inf)
    starts = row_ptr[:-1]
    nonempty = starts < row_ptr[1:]
    if cand.size and nonempty.any():
        out[nonempty] = np.maximum.reduceat(cand, starts[nonempty])
    return out


def _solve_dp(
    p: ProductAutomaton,
    e: EnergyMap,
    starts: Sequence[tuple[ProductState, float]],
    r: RewardSnapshot,
    n: int,
    c: TerminalConstraint,
) -> PredictedTrajectory | None:
    v = e.array()
    filters = c.stage_filters(n, v)
    reward = _reward_vector(p, r)
    src, dst, row_ptr = p.edge_arrays()
    size = p.size

    # suffix[i][s] = best reward of stages i+1..N starting from s at stage i
    suffix = [None] * (n + 1)
    last = np.zeros(size)
    if n in filters:
        last = np.where(filters[n], last, -np.inf)
    suffix[n] = last
    for i in range(n - 1, -1, -1):
        cand = reward[dst] + suffix[i + 1][dst]
        cur = _segment_max(cand, row_ptr, size)
        if i in filters and i > 0:
            cur = np.where(filters[i], cur, -np.inf)
        suffix[i] = cur

    best_anchor = None
    best_value = -np.inf
    for state, entry in sorted(starts):
        idx = p.index_of(state)
        val = suffix[0][idx] + entry
        if val > best_value:
            best_value, best_anchor = val, state
    if best_anchor is None or best_value == -np.inf:
        return None

    # forward reconstruction; successors come in id order, so picking the
    # first optimal one yields the lexicographically smallest trajectory
    states: list[ProductState] = []
    cur_idx = p.index_of(best_anchor)
    for i in range(1, n + 1):
        target = suffix[i - 1][cur_idx]
        lo, hi = row_ptr[cur_idx], row_ptr[cur_idx + 1]
        chosen = -1
        for k in range(lo, hi):
            d = dst[k]
            if reward[d] + suffix[i][d] == target:
                chosen = d
                break
        if chosen < 0:  # numerically impossible: target was a max over these
            return None
        states.append(p.states[chosen])
        cur_idx = chosen
    return PredictedTrajectory(anchor=best_anchor, states=tuple(states))


def _solve_dfs(
    p: ProductAutomaton,
    e: EnergyMap,
    starts: Sequence[tuple[ProductState, float]],
    r: RewardSnapshot,
    n: int,
    c: TerminalConstraint,
) -> PredictedTrajectory | None:
    """Exhaustive enumeration of all horizon-N trajectories; the oracle."""
    best: tuple[float, tuple, PredictedTrajectory] | None = None

    def consider(value: float, anchor: ProductState, path: list[ProductState]):
        nonlocal best
        key = (anchor, *path)
        if best is None or value > best[0] or (value == best[0] and key < best[1]):
            best = (value, key, PredictedTrajectory(anchor, tuple(path)))

    def walk(state: ProductState, stage: int, value: float,
             anchor: ProductState, entry: float, path: list[ProductState]):
        if stage == n:
            consider(value + entry, anchor, path)
            return
        for nxt, _w in p.successors(state):
            if not c.admits(stage + 1, e.value(nxt), n):
                continue
            path.append(nxt)
            walk(nxt, stage + 1, value + r.get(nxt[0]), anchor, entry, path)
            path.pop()

    for state, entry in sorted(starts):
        walk(state, 0, 0.0, state, entry, [])
    return best[2] if best else None


def solve_horizon(
    p: ProductAutomaton,
    e: EnergyMap,
    starts: Iterable[tuple[ProductState, float]],
    r: RewardSnapshot,
    n: int,
    c: TerminalConstraint,
    solver: str = "dp",
) -> PredictedTrajectory | None:
    """Best constrained horizon-N trajectory over all anchors, or None when
    no trajectory satisfies the constraint."""
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    start_list = list(starts)
    if not start_list:
        return None
    for state, _ in start_list:
        try:
            p.index_of(state)
        except KeyError:
            raise ValueError(f"anchor {state} is not a product state") from None
    if solver == "dp":
        return _solve_dp(p, e, start_list, r, n, c)
    if solver == "dfs":
        return _solve_dfs(p, e, start_list, r, n, c)
    raise ValueError(f"unknown solver '{solver}'")


# ---------------------------------------------------------------------------
# Receding-horizon controllers
# ---------------------------------------------------------------------------

def rh_init(
    p: ProductAutomaton,
    e: EnergyMap,
    r0: RewardSnapshot,
    n: int,
    solver: str = "dp",
) -> PredictedTrajectory | None:
    """Time-zero controller: optimize over every finite-energy initial state.

    Returns None when no initial state has finite energy, i.e. no run from
    the system's initial state can satisfy the specification.
    """
    anchors = [(s, 0.0) for s in sorted(p.initial) if math.isfinite(e.value(s))]
    if not anchors:
        return None
    traj = solve_horizon(p, e, anchors, r0, n, InitFinite(), solver)
    if traj is None:
        raise InfeasibleError("initial solve infeasible despite a finite-energy initial state")
    return traj


def first_zero_index(prev: PredictedTrajectory, e: EnergyMap) -> int | None:
    """1-based index of the first zero-energy state of a trajectory."""
    for i, s in enumerate(prev.states, start=1):
        if e.value(s) == 0.0:
            return i
    return None


def classify_case(
    pk: ProductState, prev: PredictedTrajectory, e: EnergyMap
) -> int:
    """Which receding-horizon case applies at the current state.

    3: the current state already has zero energy; 2: it does not, but the
    previous prediction passes through a zero-energy state; 1: neither.
    """
    if pk != prev.states[0]:
        raise AnchorMismatchError(
            f"anchor {pk} is not the first state {prev.states[0]} of the previous trajectory"
        )
    if e.value(pk) == 0.0:
        return 3
    if first_zero_index(prev, e) is not None:
        return 2
    return 1


def rh_step(
    p: ProductAutomaton,
    e: EnergyMap,
    pk: ProductState,
    prev: PredictedTrajectory,
    rk: RewardSnapshot,
    n: int,
    solver: str = "dp",
) -> PredictedTrajectory:
    """One receding-horizon solve after the first step.

    Case 1 forces the terminal energy below the previous prediction's
    terminal energy; case 2 forces a zero-energy state one index earlier
    than in the previous prediction; case 3 only keeps the terminal energy
    finite.  Feasibility is guaranteed under the preconditions, so an
    infeasible solve raises InfeasibleError.
    """
    if not math.isfinite(e.value(pk)):
        raise ValueError(f"anchor {pk} has infinite energy")
    case = classify_case(pk, prev, e)
    if case == 1:
        constraint: TerminalConstraint = Decrease(e.value(prev.states[-1]))
    elif case == 2:
        i0 = first_zero_index(prev, e)
        assert i0 is not None and i0 >= 2  # i0 == 1 would put us in case 3
        constraint = ZeroAtIndex(i0 - 1)
    else:
        constraint = FiniteTerminal()
    traj = solve_horizon(p, e, [(pk, 0.0)], rk, n, constraint, solver)
    if traj is None:
        raise InfeasibleError(f"case {case} solve infeasible at anchor {pk}")
    return traj


def baseline_step(
    p: ProductAutomaton,
    e: EnergyMap,
    at: ProductState | Iterable[ProductState],
    rk: RewardSnapshot,
    n: int,
    solver: str = "dp",
) -> PredictedTrajectory | None:
    """Planner of the block-executing baseline: it re-solves only every N
    steps and then plays the whole prediction out.

    At the initial solve (``at`` is the set of initial states) it behaves
    like the time-zero controller.  At later solves the anchor is the last
    executed state; since the whole block is executed, the admissible set
    is "terminal energy decreases" or "a zero-energy state is visited while
    the terminal energy stays finite", which keeps every executed state at
    finite energy and preserves the eventual-decrease argument blockwise.
    """
    if isinstance(at, tuple) and len(at) == 2 and isinstance(at[0], str):
        pk: ProductState = at
        if not math.isfinite(e.value(pk)):
            raise ValueError(f"anchor {pk} has infinite energy")
        if e.value(pk) == 0.0:
            candidates = [FiniteTerminal()]
        else:
            candidates = [Decrease(e.value(pk))]
            candidates += [
                _Conjunction((ZeroAtIndex(i), FiniteTerminal())) for i in range(1, n + 1)
            ]
        best: PredictedTrajectory | None = None
        best_key = None
        for c in candidates:
            traj = solve_horizon(p, e, [(pk, 0.0)], rk, n, c, solver)
            if traj is None:
                continue
            key = (-predicted_reward(traj, rk), (traj.anchor, *traj.states))
            if best_key is None or key < best_key:
                best, best_key = traj, key
        if best is None:
            raise InfeasibleError(f"baseline solve infeasible at anchor {pk}")
        return best
    anchors = [(s, 0.0) for s in sorted(at) if math.isfinite(e.value(s))]
    if not anchors:
        return None
    traj = solve_horizon(p, e, anchors, rk, n, InitFinite(), solver)
    if traj is None:
        raise InfeasibleError("baseline initial solve infeasible")
    return traj
