"""Weighted deterministic transition systems.

A system is a finite graph with strictly positive transition weights, an
initial state, and an observation map labeling each state with a subset of
the observation set.  Systems must be non-blocking (every state has an
outgoing transition); `validate` reports violations instead of raising so
callers can show them all at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class DtsFormatError(ValueError):
    """Malformed dts-v1 document."""


@dataclass(frozen=True)
class TransitionSystem:
    states: tuple[str, ...]
    initial: str
    transitions: tuple[tuple[str, str, float], ...]
    pi: frozenset[str]
    obs: dict  # state -> frozenset of observations
    coords: dict | None = None  # state -> (x, y), optional
    _succ: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        succ: dict[str, list[tuple[str, float]]] = {s: [] for s in self.states}
        for src, dst, w in self.transitions:
            if src in succ:
                succ[src].append((dst, w))
        for s in succ:
            succ[s].sort()
        object.__setattr__(self, "_succ", succ)

    def successors(self, state: str) -> list[tuple[str, float]]:
        """Outgoing (target, weight) pairs, sorted by target id."""
        return self._succ[state]

    def label(self, state: str) -> frozenset:
        return self.obs.get(state, frozenset())


def validate(ts: TransitionSystem) -> list[str]:
    """Invariant check; returns one message per violation, empty if valid."""
    report = []
    states = set(ts.states)
    if len(states) != len(ts.states):
        report.append("duplicate state ids")
    if ts.initial not in states:
        report.append(f"initial state '{ts.initial}' not in the state set")
    outgoing = {s: 0 for s in ts.states}
    for src, dst, w in ts.transitions:
        if src not in states:
            report.append(f"transition source '{src}' not in the state set")
            continue
        if dst not in states:
            report.append(f"transition target '{dst}' not in the state set")
        if not (w > 0):
            report.append(f"non-positive weight {w} on transition {src}->{dst}")
        outgoing[src] += 1
    for s in ts.states:
        if outgoing.get(s, 0) == 0:
            report.append(f"blocking state '{s}' (no outgoing transition)")
    for s, label in ts.obs.items():
        if s not in states:
            report.append(f"observation map mentions unknown state '{s}'")
        extra = set(label) - set(ts.pi)
        if extra:
            report.append(f"state '{s}' labeled with observations outside Pi: {sorted(extra)}")
    return report


def make_system(
    states: Iterable[str],
    initial: str,
    transitions: Iterable[tuple[str, str, float]],
    pi: Iterable[str],
    obs: Mapping[str, Iterable[str]],
    coords: Mapping[str, tuple[float, float]] | None = None,
    check: bool = True,
) -> TransitionSystem:
    ts = TransitionSystem(
        states=tuple(states),
        initial=initial,
        transitions=tuple((s, d, float(w)) for s, d, w in transitions),
        pi=frozenset(pi),
        obs={s: frozenset(v) for s, v in obs.items()},
        coords=dict(coords) if coords is not None else None,
    )
    if check:
        report = validate(ts)
        if report:
            raise ValueError("invalid transition system: " + "; ".join(report))
    return ts


def grid_state(row: int, col: int) -> str:
    return f"r{row}c{col}"


def grid_dts(
    rows: int,
    cols: int,
    cell: float,
    edge_cutoff: float,
    labels: Mapping[str, Iterable[str]],
    q0: str,
    pi: Iterable[str] | None = None,
) -> TransitionSystem:
    """Rectangular lattice system: vertices at cell-size spacing, a transition
    wherever the Euclidean distance is positive and below the cutoff, weights
    equal to that distance."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if cell <= 0 or edge_cutoff <= 0:
        raise ValueError("cell and edge_cutoff must be positive")
    if edge_cutoff <= cell:
        raise ValueError("edge_cutoff <= cell would make every state blocking")
    states = [grid_state(r, c) for r in range(rows) for c in range(cols)]
    state_set = set(states)
    for s in labels:
        if s not in state_set:
            raise ValueError(f"label assignment mentions unknown state '{s}'")
    if q0 not in state_set:
        raise ValueError(f"initial state '{q0}' is not a grid state")
    coords = {
        grid_state(r, c): (c * cell, r * cell) for r in range(rows) for c in range(cols)
    }
    # neighbor offsets within the cutoff, precomputed once
    span = int(edge_cutoff / cell) + 1
    offsets = []
    for dr in range(-span, span + 1):
        for dc in range(-span, span + 1):
            d = math.hypot(dr * cell, dc * cell)
            if 0 < d < edge_cutoff:
                offsets.append((dr, dc, d))
    transitions = []
    for r in range(rows):
        for c in range(cols):
            for dr, dc, d in offsets:
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < rows and 0 <= c2 < cols:
                    transitions.append((grid_state(r, c), grid_state(r2, c2), d))
    if pi is None:
        pi = sorted({p for v in labels.values() for p in v})
    ts = make_system(states, q0, transitions, pi, labels, coords, check=False)
    report = validate(ts)
    if report:
        raise ValueError("grid parameters produce an invalid system: " + "; ".join(report))
    return ts


# ---------------------------------------------------------------------------
# dts-v1 JSON format
# ---------------------------------------------------------------------------

def system_to_json(ts: TransitionSystem) -> str:
    states = []
    for s in sorted(ts.states):
        entry: dict = {"id": s, "obs": sorted(ts.label(s))}
        if ts.coords is not None and s in ts.coords:
            entry["x"], entry["y"] = ts.coords[s]
        states.append(entry)
    doc = {
        "format": "dts-v1",
        "states": states,
        "initial": ts.initial,
        "transitions": [
            {"from": src, "to": dst, "weight": w}
            for src, dst, w in sorted(ts.transitions)
        ],
        "ap": sorted(ts.pi),
    }
    return json.dumps(doc, indent=2) + "\n"


def system_from_json(text: str) -> TransitionSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DtsFormatError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != "dts-v1":
        raise DtsFormatError("missing or unsupported format tag (want 'dts-v1')")
    try:
        states = [s["id"] for s in doc["states"]]
        obs = {s["id"]: frozenset(s.get("obs", [])) for s in doc["states"]}
        coords = {
            s["id"]: (float(s["x"]), float(s["y"]))
            for s in doc["states"]
            if "x" in s and "y" in s
        }
        ts = TransitionSystem(
            states=tuple(states),
            initial=doc["initial"],
            transitions=tuple(
                (t["from"], t["to"], float(t["weight"])) for t in doc["transitions"]
            ),
            pi=frozenset(doc["ap"]),
            obs=obs,
            coords=coords or None,
        )
    except KeyError as e:
        raise DtsFormatError(f"missing field: {e}") from e
    report = validate(ts)
    if report:
        raise DtsFormatError("invalid transition system: " + "; ".join(report))
    return ts


def save_system(ts: TransitionSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(system_to_json(ts))


def load_system(path) -> TransitionSystem:
    with open(path, encoding="utf-8") as fh:
        return system_from_json(fh.read())
