"""Closed-loop execution, trace recording, runtime monitors, comparison.

The run loop follows the overall control scheme: translate the formula (or
take a prebuilt automaton), build the product and its energy function, then
alternate observe / solve / apply-first-transition.  If no initial product
state has finite energy the specification is unsatisfiable from the initial
state and the run stops with a verdict instead of a trace.

Monitors check finite-prefix consequences of the correctness guarantees:
no forbidden observation is ever visited, ordering rules hold, and the gap
between zero-energy visits never exceeds D + N, where D is the number of
distinct finite energy values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .buchi import BuchiAutomaton
from .controller import (
    PredictedTrajectory,
    RewardSnapshot,
    baseline_step,
    classify_case,
    predicted_reward,
    rh_init,
    rh_step,
)
from .environment import CaseStudyRewards, Neighborhood, RewardProcess, observe
from .formulas import Formula
from .product import EnergyMap, ProductAutomaton, ProductState, build_product, compute_energy
from .system import TransitionSystem
from .translate import translate


@dataclass(frozen=True)
class Unsatisfiable:
    """No run from the initial state can satisfy the specification."""

    message: str = "no initial product state has finite energy"


@dataclass(frozen=True)
class StepRecord:
    k: int
    state: ProductState
    v: float
    case: str
    next_state: ProductState
    predicted: tuple[ProductState, ...] | None
    snapshot: RewardSnapshot
    reward_collected: float
    process_reward_next: float
    cum_reward: float


@dataclass
class Trace:
    controller: str
    horizon: int
    seed: int | None
    records: list[StepRecord]
    final_state: ProductState | None
    d_value: int
    config: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.records)

    def states(self) -> list[ProductState]:
        """All visited product states, final one included."""
        out = [r.state for r in self.records]
        if self.final_state is not None:
            out.append(self.final_state)
        return out

    def v_series(self) -> list[float]:
        out = [r.v for r in self.records]
        if self.final_state is not None:
            out.append(self.config.get("final_v", math.nan))
        return out

    @property
    def cum_reward(self) -> float:
        return self.records[-1].cum_reward if self.records else 0.0

    def zero_energy_steps(self) -> list[int]:
        return [i for i, v in enumerate(self.v_series()) if v == 0.0]


def _build_offline(
    ts: TransitionSystem, spec: Formula | BuchiAutomaton
) -> tuple[BuchiAutomaton, ProductAutomaton, EnergyMap]:
    b = spec if isinstance(spec, BuchiAutomaton) else translate(spec, ts.pi)
    p = build_product(ts, b)
    return b, p, compute_energy(p)


def run(
    ts: TransitionSystem,
    spec: Formula | BuchiAutomaton,
    rp: RewardProcess,
    nb: Neighborhood,
    n: int,
    steps: int,
    seed: int | None = None,
    controller: str = "rh",
    consume_rewards: bool = True,
    solver: str = "dp",
    config: Mapping | None = None,
) -> Trace | Unsatisfiable:
    """Offline build plus ``steps`` closed-loop transitions.

    Returns an Unsatisfiable verdict when no initial product state has
    finite energy; otherwise a Trace with one record per applied transition.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    _b, p, e = _build_offline(ts, spec)
    return run_on_product(
        p, e, ts, rp, nb, n, steps, seed, controller, consume_rewards, solver, config
    )


def run_on_product(
    p: ProductAutomaton,
    e: EnergyMap,
    ts: TransitionSystem,
    rp: RewardProcess,
    nb: Neighborhood,
    n: int,
    steps: int,
    seed: int | None = None,
    controller: str = "rh",
    consume_rewards: bool = True,
    solver: str = "dp",
    config: Mapping | None = None,
) -> Trace | Unsatisfiable:
    """Online loop against a prebuilt product and energy map."""
    if controller not in ("rh", "baseline"):
        raise ValueError(f"unknown controller '{controller}'")
    if not any(math.isfinite(e.value(s)) for s in p.initial):
        return Unsatisfiable()

    records: list[StepRecord] = []
    cum = 0.0
    prev: PredictedTrajectory | None = None
    current: ProductState | None = None
    block: list[ProductState] = []  # baseline: remainder of the committed block

    for k in range(steps):
        qk = ts.initial if current is None else current[0]
        snapshot = observe(rp, nb, qk, k)
        if controller == "rh":
            if prev is None:
                traj = rh_init(p, e, snapshot, n, solver)
                assert traj is not None  # initial feasibility was checked above
                case = "init"
            else:
                case = str(classify_case(current, prev, e))
                traj = rh_step(p, e, current, prev, snapshot, n, solver)
            anchor = traj.anchor
            nxt = traj.states[0]
            predicted = traj.states
            prev = traj
        else:
            if not block:
                at: ProductState | Iterable[ProductState] = (
                    p.initial if current is None else current
                )
                traj = baseline_step(p, e, at, snapshot, n, solver)
                assert traj is not None
                block = list(traj.states)
                case = "init" if current is None else "block"
                predicted = traj.states
                anchor = traj.anchor
            else:
                case = "-"
                predicted = None
                anchor = current
            nxt = block.pop(0)

        collected = snapshot.get(nxt[0])
        if consume_rewards and collected > 0:
            rp.consume(nxt[0])
        cum += collected
        rp.advance(k + 1)
        records.append(
            StepRecord(
                k=k,
                state=anchor if current is None else current,
                v=e.value(anchor if current is None else current),
                case=case,
                next_state=nxt,
                predicted=predicted,
                snapshot=snapshot,
                reward_collected=collected,
                process_reward_next=rp.full_reward(nxt[0], k + 1),
                cum_reward=cum,
            )
        )
        current = nxt

    cfg = dict(config or {})
    cfg["final_v"] = e.value(current)
    return Trace(
        controller=controller,
        horizon=n,
        seed=seed,
        records=records,
        final_state=current,
        d_value=e.distinct_finite_values,
        config=cfg,
    )


# ---------------------------------------------------------------------------
# Monitors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonitorResult:
    name: str
    passed: bool
    first_violation: int | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "first_violation": self.first_violation,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class MonitorConfig:
    """What the monitors check.

    ``sequencing`` rules are (trigger, blocker, release) label triples:
    once a trigger-labeled state is visited, no blocker-labeled state may
    be visited again before a release-labeled one.
    """

    forbidden: frozenset = frozenset({"unsafe"})
    sequencing: tuple = (("base", "base", "survey"), ("survey", "survey", "recharge"))
    recurrence_bound: int | None = None  # defaults to D + N from the trace


def safety_monitor(trace: Trace, ts: TransitionSystem, forbidden: Iterable[str]) -> MonitorResult:
    bad = frozenset(forbidden)
    for i, state in enumerate(trace.states()):
        if ts.label(state[0]) & bad:
            return MonitorResult(
                "safety", False, i, f"state {state[0]} carries {sorted(ts.label(state[0]) & bad)}"
            )
    return MonitorResult("safety", True)


def sequencing_monitor(
    trace: Trace, ts: TransitionSystem, rules: Iterable[tuple[str, str, str]]
) -> MonitorResult:
    labels = [ts.label(s[0]) for s in trace.states()]
    for trigger, blocker, release in rules:
        armed_at: int | None = None
        for i, lab in enumerate(labels):
            if armed_at is not None and i > armed_at:
                if release in lab:
                    armed_at = None
                elif blocker in lab:
                    return MonitorResult(
                        "sequencing",
                        False,
                        i,
                        f"'{blocker}' at step {i} before '{release}' (triggered at {armed_at})",
                    )
            if armed_at is None and trigger in lab:
                armed_at = i
    return MonitorResult("sequencing", True)


def recurrence_monitor(trace: Trace, bound: int | None = None) -> MonitorResult:
    """Zero-energy visits must occur at least every ``bound`` steps (default
    D + N); the step count before the first visit counts as a gap too."""
    limit = bound if bound is not None else trace.d_value + trace.horizon
    series = trace.v_series()
    last_zero = -1  # treat the start as the reference point for the first gap
    # gap g means: zero at last_zero, next zero must come by last_zero + limit
    for i, v in enumerate(series):
        if v == 0.0:
            last_zero = i
            continue
        anchor = last_zero if last_zero >= 0 else 0
        if i - anchor > limit:
            return MonitorResult(
                "recurrence",
                False,
                i,
                f"no zero-energy visit in the {limit} steps before step {i}",
            )
    return MonitorResult("recurrence", True, detail=f"bound {limit}")


def check_monitors(
    trace: Trace, ts: TransitionSystem, config: MonitorConfig | None = None
) -> list[MonitorResult]:
    cfg = config or MonitorConfig()
    return [
        safety_monitor(trace, ts, cfg.forbidden),
        sequencing_monitor(trace, ts, cfg.sequencing),
        recurrence_monitor(trace, cfg.recurrence_bound),
    ]


# ---------------------------------------------------------------------------
# Controller comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    seed: int
    rh_reward: float
    baseline_reward: float
    rh_fingerprint: str | None
    baseline_fingerprint: str | None
    rh_v: tuple[float, ...]
    baseline_v: tuple[float, ...]


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def mean_rh(self) -> float:
        return sum(r.rh_reward for r in self.rows) / len(self.rows)

    @property
    def mean_baseline(self) -> float:
        return sum(r.baseline_reward for r in self.rows) / len(self.rows)

    def as_dict(self) -> dict:
        return {
            "seeds": [
                {
                    "seed": r.seed,
                    "rh_reward": r.rh_reward,
                    "baseline_reward": r.baseline_reward,
                    "rh_fingerprint": r.rh_fingerprint,
                    "baseline_fingerprint": r.baseline_fingerprint,
                }
                for r in self.rows
            ],
            "mean_rh": self.mean_rh,
            "mean_baseline": self.mean_baseline,
        }


def compare(
    ts: TransitionSystem,
    spec: Formula | BuchiAutomaton,
    rp_config: Mapping | Callable[[int], RewardProcess],
    nb: Neighborhood,
    n: int,
    steps: int,
    seeds: Sequence[int],
    consume_rewards: bool = True,
    solver: str = "dp",
) -> ComparisonReport:
    """Paired runs of the receding-horizon and block-executing controllers.

    Per seed, both controllers face the same exogenous reward stream (the
    process is rebuilt from the seed for each run, and processes draw the
    same randomness regardless of visits)."""
    if not seeds:
        raise ValueError("need at least one seed")
    _b, p, e = _build_offline(ts, spec)

    def make_rp(seed: int) -> RewardProcess:
        if callable(rp_config):
            return rp_config(seed)
        return CaseStudyRewards(ts.states, seed=seed, **dict(rp_config))

    rows = []
    for seed in seeds:
        traces = {}
        prints = {}
        for controller in ("rh", "baseline"):
            rp = make_rp(seed)
            t = run_on_product(
                p, e, ts, rp, nb, n, steps, seed, controller, consume_rewards, solver
            )
            assert isinstance(t, Trace), "satisfiability was established for the first run"
            traces[controller] = t
            prints[controller] = (
                rp.stream_fingerprint() if hasattr(rp, "stream_fingerprint") else None
            )
        rows.append(
            ComparisonRow(
                seed=seed,
                rh_reward=traces["rh"].cum_reward,
                baseline_reward=traces["baseline"].cum_reward,
                rh_fingerprint=prints["rh"],
                baseline_fingerprint=prints["baseline"],
                rh_v=tuple(traces["rh"].v_series()),
                baseline_v=tuple(traces["baseline"].v_series()),
            )
        )
    return ComparisonReport(tuple(rows))


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

TRACE_HEADER = "k,q,s,case,v,reward_collected,cum_reward"


def trace_csv(trace: Trace) -> str:
    lines = [TRACE_HEADER]
    for r in trace.records:
        lines.append(
            f"{r.k},{r.state[0]},{r.state[1]},{r.case},{r.v},"
            f"{r.reward_collected},{r.cum_reward}"
        )
    return "\n".join(lines) + "\n"


def trace_sidecar(trace: Trace, monitors: Sequence[MonitorResult] | None = None) -> str:
    doc = {
        "controller": trace.controller,
        "horizon": trace.horizon,
        "steps": trace.steps,
        "seed": trace.seed,
        "distinct_finite_energy_values": trace.d_value,
        "recurrence_bound": trace.d_value + trace.horizon,
        "final_state": list(trace.final_state),
        "config": {k: v for k, v in sorted(trace.config.items())},
        "monitors": [m.as_dict() for m in monitors] if monitors is not None else None,
        "records": [
            {
                "k": r.k,
                "state": list(r.state),
                "next_state": list(r.next_state),
                "predicted": [list(s) for s in r.predicted] if r.predicted else None,
                "snapshot": {q: val for q, val in sorted(r.snapshot.items())},
                "process_reward_next": r.process_reward_next,
            }
            for r in trace.records
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_trace(trace: Trace, basepath, monitors: Sequence[MonitorResult] | None = None) -> None:
    """Write `<basepath>.csv` and `<basepath>.json`."""
    with open(f"{basepath}.csv", "w", encoding="utf-8") as fh:
        fh.write(trace_csv(trace))
    with open(f"{basepath}.json", "w", encoding="utf-8") as fh:
        fh.write(trace_sidecar(trace, monitors))


def load_trace(basepath) -> Trace:
    """Rebuild a Trace from `<basepath>.csv` plus `<basepath>.json`."""
    with open(f"{basepath}.csv", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"unexpected trace CSV header in {basepath}.csv")
    with open(f"{basepath}.json", encoding="utf-8") as fh:
        doc = json.load(fh)
    records = []
    for line, extra in zip(lines[1:], doc["records"]):
        k, q, s, case, v, collected, cum = line.split(",")
        records.append(
            StepRecord(
                k=int(k),
                state=(q, s),
                v=float(v),
                case=case,
                next_state=tuple(extra["next_state"]),
                predicted=tuple(tuple(x) for x in extra["predicted"])
                if extra["predicted"]
                else None,
                snapshot=RewardSnapshot(extra["snapshot"]),
                reward_collected=float(collected),
                process_reward_next=float(extra["process_reward_next"]),
                cum_reward=float(cum),
            )
        )
    return Trace(
        controller=doc["controller"],
        horizon=doc["horizon"],
        seed=doc["seed"],
        records=records,
        final_state=tuple(doc["final_state"]),
        d_value=doc["distinct_finite_energy_values"],
        config=doc["config"],
    )
