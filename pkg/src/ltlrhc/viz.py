"""Snapshot exports of closed-loop runs (DOT text and SVG figures).

Each snapshot shows the system at one step: states at their coordinates,
observed rewards drawn with size proportional to their value, the current
state highlighted, and the predicted trajectory traced out.
"""

from __future__ import annotations

from .harness import Trace
from .system import TransitionSystem


def snapshot_dot(ts: TransitionSystem, trace: Trace, k: int) -> str:
    """Graphviz snapshot of step ``k``."""
    if not 0 <= k < trace.steps:
        raise ValueError(f"step {k} outside trace (0..{trace.steps - 1})")
    rec = trace.records[k]
    predicted = [s[0] for s in rec.predicted] if rec.predicted else []
    lines = ["digraph snapshot {", f'  label="step {k}";']
    for q in ts.states:
        attrs = []
        if ts.coords and q in ts.coords:
            x, y = ts.coords[q]
            attrs.append(f'pos="{x},{y}!"')
        reward = rec.snapshot.get(q)
        size = 0.2 + 0.04 * reward
        attrs.append(f"width={size:.2f}")
        if q == rec.state[0]:
            attrs.append('color=red style=filled fillcolor=red')
        elif q in predicted:
            attrs.append('color=brown style=filled fillcolor=tan')
        elif reward > 0:
            attrs.append('color=green style=filled fillcolor=palegreen')
        label_obs = ",".join(sorted(ts.label(q)))
        attrs.append(f'label="{q}\\n{label_obs}"' if label_obs else f'label="{q}"')
        lines.append(f'  "{q}" [{" ".join(attrs)}];')
    seen = set()
    for src, dst, _w in ts.transitions:
        if (dst, src) not in seen:
            seen.add((src, dst))
            lines.append(f'  "{src}" -> "{dst}" [dir=none color=gray80];')
    if predicted:
        chain = [rec.state[0]] + predicted
        for a, b in zip(chain, chain[1:]):
            lines.append(f'  "{a}" -> "{b}" [color=brown penwidth=2];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def snapshot_svg(ts: TransitionSystem, trace: Trace, k: int, path) -> None:
    """Render step ``k`` to an SVG file; needs state coordinates."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if ts.coords is None:
        raise ValueError("SVG snapshots need state coordinates")
    if not 0 <= k < trace.steps:
        raise ValueError(f"step {k} outside trace (0..{trace.steps - 1})")
    rec = trace.records[k]

    fig, ax = plt.subplots(figsize=(6, 6))
    xs = [ts.coords[q][0] for q in ts.states]
    ys = [ts.coords[q][1] for q in ts.states]
    ax.scatter(xs, ys, s=12, color="lightgray", zorder=1)

    rewarded = [(q, rec.snapshot.get(q)) for q in ts.states if rec.snapshot.get(q) > 0]
    if rewarded:
        ax.scatter(
            [ts.coords[q][0] for q, _ in rewarded],
            [ts.coords[q][1] for q, _ in rewarded],
            s=[18 + 14 * val for _, val in rewarded],
            color="mediumseagreen",
            zorder=2,
            label="observed rewards",
        )
    for special, color in (("unsafe", "black"), ("base", "royalblue"),
                           ("survey", "darkorange"), ("recharge", "purple")):
        pts = [q for q in ts.states if special in ts.label(q)]
        if pts:
            ax.scatter(
                [ts.coords[q][0] for q in pts],
                [ts.coords[q][1] for q in pts],
                s=70,
                marker="s" if special == "unsafe" else "D",
                color=color,
                zorder=3,
                label=special,
            )
    if rec.predicted:
        chain = [rec.state[0]] + [s[0] for s in rec.predicted]
        ax.plot(
            [ts.coords[q][0] for q in chain],
            [ts.coords[q][1] for q in chain],
            color="saddlebrown",
            linewidth=2,
            marker="o",
            markersize=5,
            zorder=4,
            label="predicted",
        )
    cx, cy = ts.coords[rec.state[0]]
    ax.scatter([cx], [cy], s=120, color="red", zorder=5, label="current")
    ax.set_title(f"step {k}   V={rec.v:.2f}   case {rec.case}")
    ax.set_aspect("equal")
    ax.legend(loc="upper left", fontsize=7, framealpha=0.9)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def comparison_png(report, path) -> None:
    """Cumulative-reward and energy plots for the first compared seed."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    row = report.rows[0]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6))
    ax1.plot(row.rh_v, label="receding horizon")
    ax1.plot(row.baseline_v, label="baseline", linestyle="--")
    ax1.set_ylabel("V at current state")
    ax1.legend()
    means = ([r.rh_reward for r in report.rows], [r.baseline_reward for r in report.rows])
    ax2.plot(sorted(means[0]), label="receding horizon (per seed, sorted)")
    ax2.plot(sorted(means[1]), label="baseline (per seed, sorted)", linestyle="--")
    ax2.set_ylabel("cumulative reward")
    ax2.set_xlabel("seed rank")
    ax2.legend()
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
