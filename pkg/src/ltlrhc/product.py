"""Weighted product of a transition system with a Buchi automaton, and the
energy function driving the receding-horizon constraints.

The product is built over the full state set Q x S_B (not just the part
reachable from the initial states), so its size is exactly |Q| * |S_B|.
The energy of a product state is the weighted shortest-path distance to the
largest self-reachable subset of the accepting states; it is 0 exactly on
that subset and infinite where acceptance is impossible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .buchi import BuchiAutomaton
from .formulas import eval_prop
from .graphs import dijkstra_to_targets, reachable_from
from .system import TransitionSystem, validate

ProductState = tuple[str, str]  # (system state, automaton state)


class AlphabetMismatchError(ValueError):
    """System observations and automaton alphabet disagree."""


@dataclass(frozen=True)
class ProductAutomaton:
    states: tuple[ProductState, ...]
    initial: frozenset
    accepting: frozenset
    transitions: tuple[tuple[ProductState, ProductState, float], ...]
    _index: dict = field(default_factory=dict, compare=False, repr=False)
    _succ: dict = field(default_factory=dict, compare=False, repr=False)
    _pred: dict = field(default_factory=dict, compare=False, repr=False)
    _arrays: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        index = {s: i for i, s in enumerate(self.states)}
        succ: dict[ProductState, list[tuple[ProductState, float]]] = {
            s: [] for s in self.states
        }
        pred: dict[ProductState, list[tuple[ProductState, float]]] = {
            s: [] for s in self.states
        }
        for src, dst, w in self.transitions:
            succ[src].append((dst, w))
            pred[dst].append((src, w))
        for s in self.states:
            succ[s].sort()
            pred[s].sort()
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_succ", succ)
        object.__setattr__(self, "_pred", pred)
        # edge arrays sorted by source index, for the vectorized DP solver
        n = len(self.states)
        edges = sorted(
            (index[src], index[dst], w) for src, dst, w in self.transitions
        )
        src_arr = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
        dst_arr = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
        row_ptr = np.searchsorted(src_arr, np.arange(n + 1))
        object.__setattr__(
            self, "_arrays", {"src": src_arr, "dst": dst_arr, "row_ptr": row_ptr}
        )

    @property
    def size(self) -> int:
        return len(self.states)

    def index_of(self, state: ProductState) -> int:
        return self._index[state]

    def successors(self, state: ProductState) -> list[tuple[ProductState, float]]:
        return self._succ[state]

    def predecessors(self, state: ProductState) -> list[tuple[ProductState, float]]:
        return self._pred[state]

    def has_edge(self, src: ProductState, dst: ProductState) -> bool:
        return any(d == dst for d, _ in self._succ[src])

    def edge_arrays(self):
        """(src, dst, row_ptr) integer arrays, edges sorted by source index."""
        a = self._arrays
        return a["src"], a["dst"], a["row_ptr"]


def build_product(ts: TransitionSystem, b: BuchiAutomaton) -> ProductAutomaton:
    """Full synchronized product: a product transition exists iff the system
    moves along one of its edges while the automaton reads the source
    state's observation set; weights carry over from the system."""
    report = validate(ts)
    if report:
        raise ValueError("invalid transition system: " + "; ".join(report))
    if ts.pi != b.ap:
        raise AlphabetMismatchError(
            f"system observations {sorted(ts.pi)} != automaton alphabet {sorted(b.ap)}"
        )
    states = tuple(
        (q, s) for q in sorted(ts.states) for s in sorted(b.states)
    )
    # automaton moves depend only on the source label; cache per label
    moves_by_label: dict[frozenset, dict[str, list[str]]] = {}
    for q in ts.states:
        label = ts.label(q)
        if label not in moves_by_label:
            moves_by_label[label] = {
                s: [t.dst for t in b.outgoing(s) if eval_prop(t.guard, label)]
                for s in b.states
            }
    transitions = []
    for q in sorted(ts.states):
        moves = moves_by_label[ts.label(q)]
        for q2, w in ts.successors(q):
            for s in sorted(b.states):
                for s2 in moves[s]:
                    transitions.append(((q, s), (q2, s2), w))
    return ProductAutomaton(
        states=states,
        initial=frozenset((ts.initial, s) for s in b.initial),
        accepting=frozenset((q, s) for q in ts.states for s in b.accepting),
        transitions=tuple(transitions),
    )


def project(traj: Sequence[ProductState]) -> list[str]:
    """Drop the automaton component of each state."""
    return [q for q, _ in traj]


def largest_self_reachable(p: ProductAutomaton) -> frozenset:
    """Largest subset A of the accepting states such that every member can
    reach a member of A by a path with at least one edge.

    Fixpoint: start from all accepting states and peel off states that can
    no longer make a nonempty return; the union of self-reachable sets is
    self-reachable, so the limit is the unique maximum.
    """
    current = set(p.accepting)
    while True:
        # states with a >=1-edge path into `current`
        can_reach = reachable_from(
            current, lambda s: (src for src, _ in p.predecessors(s))
        )
        survivors = {
            a
            for a in current
            if any(dst in can_reach for dst, _ in p.successors(a))
        }
        if survivors == current:
            return frozenset(current)
        current = survivors


@dataclass(frozen=True)
class EnergyMap:
    fstar: frozenset
    v: dict  # product state -> float (math.inf when acceptance is impossible)
    _array: np.ndarray = field(compare=False, repr=False, default=None)

    def value(self, state: ProductState) -> float:
        return self.v[state]

    def array(self) -> np.ndarray:
        """Energy per product state, aligned with the product's state order."""
        return self._array

    @property
    def distinct_finite_values(self) -> int:
        return len({x for x in self.v.values() if x < float("inf")})


def compute_energy(p: ProductAutomaton) -> EnergyMap:
    """Multi-source shortest path to the largest self-reachable accepting set,
    computed on the reversed graph; members of the set sit at exactly 0."""
    fstar = largest_self_reachable(p)
    dist = dijkstra_to_targets(p.states, lambda s: p.predecessors(s), fstar)
    arr = np.array([dist[s] for s in p.states], dtype=np.float64)
    return EnergyMap(fstar=fstar, v=dist, _array=arr)


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def energy_csv(p: ProductAutomaton, e: EnergyMap) -> str:
    """Per-state energy as CSV; infinity is written as the literal `inf`."""
    lines = ["state_q,state_s,v"]
    for q, s in p.states:
        lines.append(f"{q},{s},{e.v[(q, s)]}")
    return "\n".join(lines) + "\n"


def product_dot(p: ProductAutomaton, e: EnergyMap | None = None) -> str:
    """Graphviz rendering of the product with energy annotations."""
    def nid(s: ProductState) -> str:
        return f"\"{s[0]}|{s[1]}\""

    lines = ["digraph product {", "  rankdir=LR;"]
    for s in p.states:
        label = f"{s[0]},{s[1]}"
        if e is not None:
            label += f"\\nV={e.v[s]:g}"
        shape = "doublecircle" if s in p.accepting else "circle"
        lines.append(f"  {nid(s)} [label=\"{label}\", shape={shape}];")
    for s in sorted(p.initial):
        lines.append(f"  \"__init_{s[0]}|{s[1]}\" [shape=point];")
        lines.append(f"  \"__init_{s[0]}|{s[1]}\" -> {nid(s)};")
    for src, dst, w in p.transitions:
        lines.append(f"  {nid(src)} -> {nid(dst)} [label=\"{w:g}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"
