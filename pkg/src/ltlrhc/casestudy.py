"""Grid surveillance case study.

A 10x10 lattice world (cell size 10, transitions between vertices closer
than 15, weights equal to Euclidean distance) where a robot must visit
`base`, then `survey`, then `recharge`, cyclically and forever, while never
entering `unsafe` cells, and collects decaying randomly respawning rewards
along the way.

The choice of which vertices carry which label is a fixture of this
package (any labeling with the right flavor works); it is not prescribed
by the problem statement.
"""

from __future__ import annotations

from importlib import resources

from .buchi import BuchiAutomaton, buchi_from_json, make_buchi
from .environment import CaseStudyRewards, Neighborhood
from .formulas import Formula, parse_ltl
from .system import TransitionSystem, grid_dts

PI = ("base", "survey", "recharge", "unsafe")

FORMULA_TEXT = (
    "G F base"
    " & G (base -> X (! base U survey))"
    " & G (survey -> X (! survey U recharge))"
    " & G ! unsafe"
)

GRID_ROWS = 10
GRID_COLS = 10
CELL_SIZE = 10.0
EDGE_CUTOFF = 15.0
OBSERVATION_RADIUS = 25.0
HORIZON = 4

# fixture labeling: one base near the start corner, survey across the grid,
# recharge on the far column, and a short unsafe wall in the middle
LABELS: dict[str, tuple[str, ...]] = {
    "r1c1": ("base",),
    "r8c8": ("survey",),
    "r1c8": ("recharge",),
    "r4c3": ("unsafe",),
    "r4c4": ("unsafe",),
    "r4c5": ("unsafe",),
    "r5c5": ("unsafe",),
    "r5c6": ("unsafe",),
}
INITIAL_STATE = "r0c0"


def surveillance_formula() -> Formula:
    return parse_ltl(FORMULA_TEXT, PI)


def case_study_system() -> TransitionSystem:
    return grid_dts(
        GRID_ROWS, GRID_COLS, CELL_SIZE, EDGE_CUTOFF, LABELS, INITIAL_STATE, PI
    )


def case_study_neighborhood(ts: TransitionSystem) -> Neighborhood:
    return Neighborhood(ts, "metric", OBSERVATION_RADIUS)


def case_study_rewards(ts: TransitionSystem, seed: int) -> CaseStudyRewards:
    return CaseStudyRewards(ts.states, seed=seed)


def reference_buchi_12() -> BuchiAutomaton:
    """Hand-built 12-state automaton for the surveillance formula.

    The core tracks three bits: a pending "no base until survey"
    obligation, a pending "no survey until recharge" obligation, and
    whether `base` was just read (the recurrence bit, which is also the
    acceptance mark).  Only six bit combinations are reachable; a step
    parity bit doubles them to twelve states so the automaton matches the
    size used in the reference configuration.  Every state and transition
    is exercised; language correctness is covered by the oracle tests.
    """
    cores = [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)]
    core_id = {c: i for i, c in enumerate(cores)}

    def step(core, letter):
        """Target core for a letter (set of observations), or None if the
        letter violates a pending obligation."""
        bp, sp, _acc = core
        base, survey, recharge = ("base" in letter, "survey" in letter, "recharge" in letter)
        if "unsafe" in letter:
            return None
        if bp and base and not survey:
            return None
        if sp and survey and not recharge:
            return None
        bp2 = 1 if base else (bp if not survey else 0)
        sp2 = 1 if survey else (sp if not recharge else 0)
        return (bp2, sp2, 1 if base else 0)

    def name(core, tick):
        return f"s{core_id[core]}{'ab'[tick]}"

    props = ("base", "survey", "recharge")
    transitions = []
    for core in cores:
        for tick in (0, 1):
            for bits in range(8):
                letter = {p for j, p in enumerate(props) if bits >> j & 1}
                target = step(core, letter)
                if target is None:
                    continue
                lits = [p if p in letter else f"!{p}" for p in props] + ["!unsafe"]
                transitions.append(
                    (name(core, tick), " & ".join(lits), name(target, 1 - tick))
                )
    states = [name(c, t) for c in cores for t in (0, 1)]
    accepting = [name(c, t) for c in cores if c[2] == 1 for t in (0, 1)]
    return make_buchi(states, [name((0, 0, 0), 0)], accepting, PI, transitions)


def load_reference_buchi_12() -> BuchiAutomaton:
    """The same automaton, loaded from the shipped buchi-v1 fixture file."""
    text = (
        resources.files("ltlrhc").joinpath("data/surveillance_buchi12.json").read_text()
    )
    return buchi_from_json(text)
