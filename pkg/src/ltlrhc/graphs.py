"""Small graph algorithms shared across modules.

All functions take adjacency as a callable node -> iterable of neighbors,
so callers can pass views of whatever structure they hold.
"""

from __future__ import annotations

from heapq import heappop, heappush
from typing import Callable, Hashable, Iterable, Sequence


def reachable_from(sources: Iterable, succ: Callable) -> set:
    """All nodes reachable from ``sources`` (including the sources)."""
    seen = set(sources)
    stack = list(seen)
    while stack:
        n = stack.pop()
        for m in succ(n):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def strongly_connected_components(
    nodes: Sequence[Hashable], succ: Callable
) -> list[list[Hashable]]:
    """Tarjan's algorithm, iterative to survive deep graphs."""
    index: dict = {}
    lowlink: dict = {}
    on_stack: set = set()
    stack: list = []
    components: list[list] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for m in it:
                if m not in index:
                    index[m] = lowlink[m] = counter
                    counter += 1
                    stack.append(m)
                    on_stack.add(m)
                    work.append((m, iter(succ(m))))
                    advanced = True
                    break
                if m in on_stack:
                    lowlink[node] = min(lowlink[node], index[m])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    m = stack.pop()
                    on_stack.discard(m)
                    comp.append(m)
                    if m == node:
                        break
                components.append(comp)
    return components


def dijkstra_to_targets(
    nodes: Iterable,
    rev_weighted_succ: Callable,
    targets: Iterable,
) -> dict:
    """Weighted shortest-path distance from every node TO the target set.

    ``rev_weighted_succ(n)`` must yield (predecessor, weight) pairs, i.e. the
    reversed graph.  Targets get distance 0; unreachable nodes get inf.
    """
    dist = {n: float("inf") for n in nodes}
    heap = []
    for t in targets:
        dist[t] = 0.0
        heappush(heap, (0.0, t))
    while heap:
        d, n = heappop(heap)
        if d > dist[n]:
            continue
        for m, w in rev_weighted_succ(n):
            nd = d + w
            if nd < dist[m]:
                dist[m] = nd
                heappush(heap, (nd, m))
    return dist
