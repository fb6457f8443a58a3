"""Seeded instance generators and independent brute-force oracles.

The oracles deliberately use different algorithms than the library
(subset enumeration and Floyd-Warshall instead of fixpoint peeling and
Dijkstra) so agreement is meaningful.  Generated weights and rewards are
dyadic rationals, so float sums are exact regardless of summation order
and solver results can be compared with == .
"""

from __future__ import annotations

import itertools
import random

from ltlrhc.controller import RewardSnapshot
from ltlrhc.formulas import (
    And,
    Atom,
    Eventually,
    Always,
    FALSE,
    Formula,
    Implies,
    LassoWord,
    Next,
    Not,
    Or,
    Release,
    TRUE,
    Until,
)
from ltlrhc.product import ProductAutomaton
from ltlrhc.system import TransitionSystem, make_system

INF = float("inf")


def dyadic(rng: random.Random, lo_quarters: int = 1, hi_quarters: int = 16) -> float:
    """Multiples of 0.25; sums of these are exact in binary floating point."""
    return rng.randint(lo_quarters, hi_quarters) / 4.0


def rand_dts(
    rng: random.Random,
    max_states: int = 15,
    pi: tuple[str, ...] = ("a", "b", "u"),
    label_prob: float = 0.3,
    extra_edge_prob: float = 0.15,
) -> TransitionSystem:
    n = rng.randint(2, max_states)
    states = [f"q{i:02d}" for i in range(n)]
    edges = set()
    for s in states:  # non-blocking by construction
        edges.add((s, rng.choice(states)))
    for s in states:
        for t in states:
            if rng.random() < extra_edge_prob:
                edges.add((s, t))
    transitions = [(s, t, dyadic(rng)) for s, t in sorted(edges)]
    obs = {
        s: frozenset(p for p in pi if rng.random() < label_prob) for s in states
    }
    return make_system(states, states[0], transitions, pi, obs)


def rand_product(
    rng: random.Random,
    max_states: int = 12,
    edge_prob: float = 0.25,
    accept_prob: float = 0.3,
) -> ProductAutomaton:
    """Random product-shaped graph; may contain blocking states and empty
    accepting sets, unlike real products of non-blocking systems."""
    n = rng.randint(2, max_states)
    states = tuple((f"q{i:02d}", "s0") for i in range(n))
    transitions = []
    for src in states:
        for dst in states:
            if rng.random() < edge_prob:
                transitions.append((src, dst, dyadic(rng)))
    accepting = frozenset(s for s in states if rng.random() < accept_prob)
    initial = frozenset({states[0]})
    return ProductAutomaton(states, initial, accepting, tuple(transitions))


def rand_lasso(
    rng: random.Random,
    pi: tuple[str, ...],
    max_prefix: int = 6,
    max_cycle: int = 6,
    prop_prob: float = 0.4,
) -> LassoWord:
    def letter():
        return frozenset(p for p in pi if rng.random() < prop_prob)

    prefix = tuple(letter() for _ in range(rng.randint(0, max_prefix)))
    cycle = tuple(letter() for _ in range(rng.randint(1, max_cycle)))
    return LassoWord(prefix, cycle)


def rand_formula(rng: random.Random, pi: tuple[str, ...], depth: int = 3) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        return rng.choice([Atom(rng.choice(pi)), TRUE, FALSE])
    kind = rng.randrange(9)
    sub = lambda: rand_formula(rng, pi, depth - 1)  # noqa: E731
    if kind == 0:
        return Not(sub())
    if kind == 1:
        return Next(sub())
    if kind == 2:
        return Eventually(sub())
    if kind == 3:
        return Always(sub())
    if kind == 4:
        return And(sub(), sub())
    if kind == 5:
        return Or(sub(), sub())
    if kind == 6:
        return Implies(sub(), sub())
    if kind == 7:
        return Until(sub(), sub())
    return Release(sub(), sub())


def rand_snapshot(rng: random.Random, p: ProductAutomaton, prob: float = 0.5) -> RewardSnapshot:
    values = {}
    for q in sorted({q for q, _ in p.states}):
        if rng.random() < prob:
            values[q] = dyadic(rng, 0, 32)
    return RewardSnapshot(values)


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------

def brute_reach_nonempty(p: ProductAutomaton) -> dict:
    """reach[a][b] = a path with >= 1 edge exists from a to b (Warshall
    transitive closure without the reflexive seed)."""
    states = list(p.states)
    reach = {a: {b: False for b in states} for a in states}
    for src, dst, _w in p.transitions:
        reach[src][dst] = True
    for mid in states:
        for a in states:
            if reach[a][mid]:
                row_a, row_m = reach[a], reach[mid]
                for b in states:
                    if row_m[b]:
                        row_a[b] = True
    return reach


def brute_fstar(p: ProductAutomaton) -> frozenset:
    """Union of all self-reachable subsets of the accepting states, found by
    explicit subset enumeration (exponential; tests keep products small)."""
    acc = sorted(p.accepting)
    reach = brute_reach_nonempty(p)
    # the union of self-reachable sets is self-reachable, so the largest
    # size that admits any valid subset admits exactly one: the maximum
    for size in range(len(acc), 0, -1):
        found: set = set()
        for subset in itertools.combinations(acc, size):
            sset = set(subset)
            if all(any(reach[a][b] for b in sset) for a in sset):
                found |= sset
        if found:
            return frozenset(found)
    return frozenset()


def brute_energy(p: ProductAutomaton) -> dict:
    """All-pairs Floyd-Warshall distances, then min over the brute-force
    self-reachable accepting set."""
    states = list(p.states)
    dist = {a: {b: (0.0 if a == b else INF) for b in states} for a in states}
    for src, dst, w in p.transitions:
        if w < dist[src][dst]:
            dist[src][dst] = w
    for mid in states:
        for a in states:
            d_am = dist[a][mid]
            if d_am < INF:
                row_a, row_m = dist[a], dist[mid]
                for b in states:
                    alt = d_am + row_m[b]
                    if alt < row_a[b]:
                        row_a[b] = alt
    fstar = brute_fstar(p)
    return {a: min((dist[a][f] for f in fstar), default=INF) for a in states}
