"""Nondeterministic Buchi automata with symbolic transition guards.

Guards are propositional formulas over the observation set, so the alphabet
2^Pi never has to be enumerated.  Acceptance of a lasso word is decided
exactly on the finite run graph (automaton state x word position).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .formulas import (
    Formula,
    LassoWord,
    eval_prop,
    format_formula,
    parse_ltl,
)
from .graphs import strongly_connected_components


class BuchiFormatError(ValueError):
    """Malformed buchi-v1 document or inconsistent automaton fields."""


@dataclass(frozen=True)
class BuchiTransition:
    src: str
    guard: Formula
    dst: str


@dataclass(frozen=True)
class BuchiAutomaton:
    states: tuple[str, ...]
    initial: frozenset[str]
    accepting: frozenset[str]
    ap: frozenset[str]
    transitions: tuple[BuchiTransition, ...]
    _outgoing: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        seen = set(self.states)
        if len(seen) != len(self.states):
            raise BuchiFormatError("duplicate state ids")
        for s in self.initial | self.accepting:
            if s not in seen:
                raise BuchiFormatError(f"state '{s}' not in the state set")
        for t in self.transitions:
            if t.src not in seen or t.dst not in seen:
                raise BuchiFormatError(f"transition endpoint not a state: {t.src}->{t.dst}")
            if not t.guard.is_propositional():
                raise BuchiFormatError(f"guard is not propositional: {t.guard}")
            if not t.guard.atoms() <= self.ap:
                raise BuchiFormatError(f"guard uses propositions outside ap: {t.guard}")
        out: dict[str, list[BuchiTransition]] = {s: [] for s in self.states}
        for t in self.transitions:
            out[t.src].append(t)
        object.__setattr__(self, "_outgoing", out)

    def outgoing(self, state: str) -> list[BuchiTransition]:
        return self._outgoing[state]

    def successors(self, state: str, obs: Iterable[str]) -> list[str]:
        o = frozenset(obs)
        return [t.dst for t in self._outgoing[state] if eval_prop(t.guard, o)]


def make_buchi(
    states: Iterable[str],
    initial: Iterable[str],
    accepting: Iterable[str],
    ap: Iterable[str],
    transitions: Iterable[tuple[str, Formula | str, str]],
) -> BuchiAutomaton:
    """Convenience constructor; guard strings are parsed over ``ap``."""
    ap_set = frozenset(ap)
    trans = []
    for src, guard, dst in transitions:
        g = parse_ltl(guard, ap_set) if isinstance(guard, str) else guard
        trans.append(BuchiTransition(src, g, dst))
    return BuchiAutomaton(
        states=tuple(states),
        initial=frozenset(initial),
        accepting=frozenset(accepting),
        ap=ap_set,
        transitions=tuple(trans),
    )


def accepts_lasso(b: BuchiAutomaton, w: LassoWord) -> bool:
    """True iff some run over prefix . cycle^omega visits an accepting state
    infinitely often.

    Builds the finite run graph over (state, position) and looks for a
    reachable cyclic SCC containing an accepting node in the periodic part.
    """
    m = w.positions
    start = w.period_start

    # evaluate every guard once per distinct letter
    letters = [w.letter(j) for j in range(m)]
    enabled: list[list[BuchiTransition]] = []
    cache: dict[frozenset, list[BuchiTransition]] = {}
    for obs in letters:
        hit = cache.get(obs)
        if hit is None:
            hit = [t for t in b.transitions if eval_prop(t.guard, obs)]
            cache[obs] = hit
        enabled.append(hit)
    by_src: list[dict[str, list[str]]] = []
    for j in range(m):
        d: dict[str, list[str]] = {}
        for t in enabled[j]:
            d.setdefault(t.src, []).append(t.dst)
        by_src.append(d)

    def succ_pos(j: int) -> int:
        return j + 1 if j + 1 < m else start

    # forward reachability from the initial nodes
    stack = [(s, 0) for s in sorted(b.initial)]
    reachable = set(stack)
    adj: dict[tuple[str, int], list[tuple[str, int]]] = {}
    while stack:
        s, j = stack.pop()
        nxt = [(d, succ_pos(j)) for d in by_src[j].get(s, ())]
        adj[(s, j)] = nxt
        for node in nxt:
            if node not in reachable:
                reachable.add(node)
                stack.append(node)

    accepting_nodes = {
        (s, j) for (s, j) in reachable if s in b.accepting and j >= start
    }
    if not accepting_nodes:
        return False
    for comp in strongly_connected_components(sorted(reachable), lambda n: adj.get(n, ())):
        cyclic = len(comp) > 1 or comp[0] in adj.get(comp[0], ())
        if cyclic and any(n in accepting_nodes for n in comp):
            return True
    return False


# ---------------------------------------------------------------------------
# buchi-v1 JSON format
# ---------------------------------------------------------------------------

def buchi_to_json(b: BuchiAutomaton) -> str:
    """Canonical buchi-v1 serialization (stable ordering, stable guard text)."""
    doc = {
        "format": "buchi-v1",
        "states": sorted(b.states),
        "initial": sorted(b.initial),
        "accepting": sorted(b.accepting),
        "ap": sorted(b.ap),
        "transitions": [
            {"from": t.src, "to": t.dst, "guard": format_formula(t.guard)}
            for t in sorted(b.transitions, key=lambda t: (t.src, t.dst, format_formula(t.guard)))
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def buchi_from_json(text: str) -> BuchiAutomaton:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise BuchiFormatError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != "buchi-v1":
        raise BuchiFormatError("missing or unsupported format tag (want 'buchi-v1')")
    try:
        ap = frozenset(doc["ap"])
        states = tuple(doc["states"])
        initial = frozenset(doc["initial"])
        accepting = frozenset(doc["accepting"])
        transitions = tuple(
            BuchiTransition(t["from"], parse_ltl(t["guard"], ap), t["to"])
            for t in doc["transitions"]
        )
    except KeyError as e:
        raise BuchiFormatError(f"missing field: {e}") from e
    return BuchiAutomaton(states, initial, accepting, ap, transitions)


def save_buchi(b: BuchiAutomaton, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buchi_to_json(b))


def load_buchi(path) -> BuchiAutomaton:
    with open(path, encoding="utf-8") as fh:
        return buchi_from_json(fh.read())
