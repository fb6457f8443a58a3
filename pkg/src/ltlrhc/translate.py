"""LTL to Buchi automaton translation.

Classic tableau construction: the negation-normal-form formula is expanded
into nodes carrying current obligations (``now``) and next-step obligations
(``nxt``); nodes become states of a generalized Buchi automaton with one
acceptance set per until subformula, which is then degeneralized with the
usual counter construction.  Guards attach to the source node: they are the
conjunction of the literals the node asserts about the current letter.

No minimization is attempted beyond dropping unreachable states; language
correctness is established against the lasso-word evaluator, not against
any particular tool's state counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .buchi import BuchiAutomaton, BuchiTransition
from .formulas import (
    TRUE,
    And,
    Atom,
    FalseConst,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueConst,
    Until,
    format_formula,
    to_nnf,
)


def _fkey(f: Formula) -> str:
    return format_formula(f)


@dataclass
class _Node:
    incoming: list[int]                       # node ids; -1 marks "initial"
    new: list[Formula] = field(default_factory=list)
    now: list[Formula] = field(default_factory=list)
    nxt: list[Formula] = field(default_factory=list)


def _add(lst: list[Formula], f: Formula) -> None:
    if f not in lst:
        lst.append(f)


class _Tableau:
    def __init__(self) -> None:
        self.done: list[_Node] = []
        self.pending: list[_Node] = []

    def build(self, root: Formula) -> None:
        self.pending.append(_Node([-1], [root]))
        while self.pending:
            self._expand(self.pending.pop(0))

    def _expand(self, node: _Node) -> None:
        """Process obligations; split recursion depth is bounded by the
        formula size, successor nodes go through the pending queue."""
        while node.new:
            f = node.new.pop(0)
            if f in node.now:
                continue
            if isinstance(f, FalseConst):
                return  # contradictory node, drop
            if isinstance(f, TrueConst):
                node.now.append(f)
                continue
            if isinstance(f, (Atom, Not)):
                neg = f.child if isinstance(f, Not) else Not(f)
                if neg in node.now:
                    return  # p and !p together, drop
                node.now.append(f)
                continue
            if isinstance(f, And):
                node.now.append(f)
                _add(node.new, f.left)
                _add(node.new, f.right)
                continue
            if isinstance(f, Next):
                node.now.append(f)
                _add(node.nxt, f.child)
                continue
            if isinstance(f, (Or, Until, Release)):
                left = _Node(list(node.incoming), list(node.new), list(node.now), list(node.nxt))
                right = _Node(list(node.incoming), list(node.new), list(node.now), list(node.nxt))
                left.now.append(f)
                right.now.append(f)
                if isinstance(f, Or):
                    _add(left.new, f.left)
                    _add(right.new, f.right)
                elif isinstance(f, Until):
                    # a U b  =  b | (a & X(a U b))
                    _add(left.new, f.left)
                    _add(left.nxt, f)
                    _add(right.new, f.right)
                else:
                    # a R b  =  b & (a | X(a R b))
                    _add(left.new, f.right)
                    _add(left.nxt, f)
                    _add(right.new, f.left)
                    _add(right.new, f.right)
                self._expand(left)
                self._expand(right)
                return
            raise TypeError(f"formula not in negation normal form: {f}")

        # node finalized: merge with an equivalent node or append
        now_set = frozenset(node.now)
        nxt_set = frozenset(node.nxt)
        for other in self.done:
            if frozenset(other.now) == now_set and frozenset(other.nxt) == nxt_set:
                for i in node.incoming:
                    if i not in other.incoming:
                        other.incoming.append(i)
                return
        self.done.append(node)
        self.pending.append(_Node([len(self.done) - 1], list(node.nxt)))


def _guard_of(node: _Node) -> Formula:
    """Conjunction of the literals the node asserts, in canonical order."""
    lits = [f for f in node.now if isinstance(f, Atom)]
    lits += [f for f in node.now if isinstance(f, Not)]
    lits.sort(key=_fkey)
    if not lits:
        return TRUE
    g = lits[0]
    for lit in lits[1:]:
        g = And(g, lit)
    return g


def _until_subformulas(f: Formula) -> list[Formula]:
    seen: list[Formula] = []

    def walk(g: Formula) -> None:
        if isinstance(g, Until) and g not in seen:
            seen.append(g)
        if isinstance(g, (Not, Next)):
            walk(g.child)
        elif isinstance(g, (And, Or, Implies, Until, Release)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return sorted(seen, key=_fkey)


def translate(f: Formula, ap: Iterable[str] | None = None) -> BuchiAutomaton:
    """Buchi automaton accepting exactly the words satisfying ``f``.

    ``ap`` fixes the automaton's observation set; defaults to the atoms of
    the formula.
    """
    ap_set = frozenset(ap) if ap is not None else f.atoms()
    nnf = to_nnf(f)
    if not nnf.atoms() <= ap_set:
        raise ValueError("formula uses propositions outside the declared set")

    tableau = _Tableau()
    tableau.build(nnf)
    done = tableau.done

    untils = _until_subformulas(nnf)
    # acceptance set per until: nodes that do not owe it, or already satisfy it
    gba_accept: list[set[int]] = [
        {
            i
            for i, nd in enumerate(done)
            if u not in nd.now or u.right in nd.now  # type: ignore[union-attr]
        }
        for u in untils
    ]
    if not gba_accept:
        gba_accept = [set(range(len(done)))]
    n_sets = len(gba_accept)

    gba_initial = [i for i, nd in enumerate(done) if -1 in nd.incoming]
    gba_succ: dict[int, list[int]] = {i: [] for i in range(len(done))}
    for tgt, nd in enumerate(done):
        for src in nd.incoming:
            if src >= 0:
                gba_succ[src].append(tgt)

    # counter-based degeneralization: advance past set i after leaving a
    # node that belongs to F_i; accepting = (node in F_0, counter 0)
    def step(counter: int, src: int) -> int:
        return (counter + 1) % n_sets if src in gba_accept[counter] else counter

    start_nodes = [(i, 0) for i in gba_initial]
    states: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    for s in start_nodes:
        if s not in index:
            index[s] = len(states)
            states.append(s)
    edges: list[tuple[tuple[int, int], tuple[int, int]]] = []
    pos = 0
    while pos < len(states):
        cur = states[pos]
        pos += 1
        node_id, counter = cur
        nc = step(counter, node_id)
        for tgt in gba_succ[node_id]:
            dst = (tgt, nc)
            if dst not in index:
                index[dst] = len(states)
                states.append(dst)
            edges.append((cur, dst))

    names = {s: f"t{i}" for i, s in enumerate(states)}
    accepting = {names[s] for s in states if s[1] == 0 and s[0] in gba_accept[0]}
    transitions = tuple(
        BuchiTransition(names[a], _guard_of(done[a[0]]), names[b]) for a, b in edges
    )
    return BuchiAutomaton(
        states=tuple(names[s] for s in states),
        initial=frozenset(names[s] for s in start_nodes),
        accepting=frozenset(accepting),
        ap=ap_set,
        transitions=transitions,
    )
