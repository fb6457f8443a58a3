"""Command-line interface.

Subcommands: translate, gen-grid, product, energy, run, compare, monitors.
Exit codes: 0 success, 1 usage or input error, 2 unsatisfiable
specification.  Options may come from a TOML or JSON config file
(``--config``); explicit flags win over the file, which wins over built-in
defaults.  ``LTLRHC_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .buchi import BuchiAutomaton, load_buchi, save_buchi
from .casestudy import load_reference_buchi_12
from .environment import CaseStudyRewards, Neighborhood, load_scripted_rewards
from .formulas import parse_ltl
from .harness import (
    MonitorConfig,
    Trace,
    Unsatisfiable,
    check_monitors,
    compare,
    load_trace,
    run,
    save_trace,
)
from .product import build_product, compute_energy, energy_csv, product_dot
from .system import grid_dts, load_system, save_system
from .translate import translate
from .viz import comparison_png, snapshot_dot, snapshot_svg

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSAT = 2

RUN_DEFAULTS = {
    "horizon": 4,
    "steps": 100,
    "seed": 0,
    "neighborhood": "metric:25",
    "rewards": "case-study",
    "decay": 0.9,
    "respawn": 0.05,
    "low": 10.0,
    "high": 25.0,
    "controller": "rh",
    "consume": True,
    "solver": "dp",
}


def _read_formula_file(path: str):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_spec(args, pi):
    """Formula or automaton per the flags; exactly one must be given."""
    given = [x for x in (args.formula, args.formula_text, args.buchi) if x]
    if len(given) != 1:
        raise ValueError("give exactly one of --formula, --formula-text, --buchi")
    if args.buchi:
        if args.buchi == "reference-12":
            return load_reference_buchi_12()
        return load_buchi(args.buchi)
    text = _read_formula_file(args.formula) if args.formula else args.formula_text
    return parse_ltl(text, pi)


def _load_config_file(path: str) -> dict:
    raw = Path(path).read_bytes()
    if path.endswith(".json"):
        return json.loads(raw)
    try:
        import tomllib  # Python 3.11+
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(raw.decode("utf-8"))


def _effective_config(args) -> dict:
    cfg = dict(RUN_DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(RUN_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in RUN_DEFAULTS:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


def _outdir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get("LTLRHC_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _neighborhood(ts, spec: str) -> Neighborhood:
    if spec == "all":
        return Neighborhood(ts, "all")
    try:
        policy, radius = spec.split(":")
        if policy == "metric":
            return Neighborhood(ts, "metric", float(radius))
        if policy == "hops":
            return Neighborhood(ts, "hops", int(radius))
    except ValueError:
        pass
    raise ValueError(f"bad neighborhood '{spec}' (want metric:R, hops:N or all)")


def _reward_process(cfg, ts, seed):
    if cfg["rewards"] == "case-study":
        return CaseStudyRewards(
            ts.states,
            seed=seed,
            decay=cfg["decay"],
            respawn_prob=cfg["respawn"],
            low=cfg["low"],
            high=cfg["high"],
        )
    # anything else is a path to a scripted-rewards CSV
    return load_scripted_rewards(cfg["rewards"])


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_translate(args) -> int:
    ap = args.ap.split(",") if args.ap else None
    text = _read_formula_file(args.formula) if args.formula else args.formula_text
    if text is None:
        raise ValueError("give --formula FILE or --formula-text TEXT")
    f = parse_ltl(text, ap)
    b = translate(f, ap)
    save_buchi(b, args.out)
    print(f"wrote {args.out}: {len(b.states)} states, {len(b.transitions)} transitions")
    return EXIT_OK


def _cmd_gen_grid(args) -> int:
    with open(args.labels, encoding="utf-8") as fh:
        doc = json.load(fh)
    ts = grid_dts(
        args.rows,
        args.cols,
        args.cell,
        args.cutoff,
        doc.get("labels", {}),
        doc["initial"],
        doc.get("ap"),
    )
    save_system(ts, args.out)
    print(f"wrote {args.out}: {len(ts.states)} states, {len(ts.transitions)} transitions")
    return EXIT_OK


def _cmd_product(args) -> int:
    ts = load_system(args.system)
    spec = _load_spec(args, ts.pi)
    b = spec if isinstance(spec, BuchiAutomaton) else translate(spec, ts.pi)
    p = build_product(ts, b)
    summary = {
        "system_states": len(ts.states),
        "automaton_states": len(b.states),
        "product_states": p.size,
        "product_transitions": len(p.transitions),
        "initial": sorted(map(list, p.initial)),
        "accepting_count": len(p.accepting),
    }
    print(json.dumps(summary, indent=2))
    if args.dot:
        Path(args.dot).write_text(product_dot(p), encoding="utf-8")
        print(f"wrote {args.dot}")
    return EXIT_OK


def _cmd_energy(args) -> int:
    ts = load_system(args.system)
    spec = _load_spec(args, ts.pi)
    b = spec if isinstance(spec, BuchiAutomaton) else translate(spec, ts.pi)
    p = build_product(ts, b)
    e = compute_energy(p)
    Path(args.out_csv).write_text(energy_csv(p, e), encoding="utf-8")
    finite = [v for v in e.v.values() if v < float("inf")]
    print(
        f"wrote {args.out_csv}: {p.size} states, {len(e.fstar)} in F*, "
        f"{len(finite)} finite energies"
    )
    if args.dot:
        Path(args.dot).write_text(product_dot(p, e), encoding="utf-8")
        print(f"wrote {args.dot}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _effective_config(args)
    if args.print_config:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    ts = load_system(args.system)
    spec = _load_spec(args, ts.pi)
    nb = _neighborhood(ts, cfg["neighborhood"])
    rp = _reward_process(cfg, ts, cfg["seed"])
    result = run(
        ts,
        spec,
        rp,
        nb,
        n=cfg["horizon"],
        steps=cfg["steps"],
        seed=cfg["seed"],
        controller=cfg["controller"],
        consume_rewards=cfg["consume"],
        solver=cfg["solver"],
        config={k: v for k, v in cfg.items() if k != "consume"},
    )
    if isinstance(result, Unsatisfiable):
        print(f"unsatisfiable specification: {result.message}", file=sys.stderr)
        return EXIT_UNSAT
    outdir = _outdir(args)
    monitors = check_monitors(result, ts)
    base = outdir / "trace"
    save_trace(result, base, monitors)
    print(f"wrote {base}.csv and {base}.json")
    print(f"cumulative reward: {result.cum_reward}")
    for m in monitors:
        status = "pass" if m.passed else f"FAIL at step {m.first_violation} ({m.detail})"
        print(f"monitor {m.name}: {status}")
    if args.snapshots:
        k0, k1 = (int(x) for x in args.snapshots.split(":"))
        for k in range(k0, min(k1 + 1, result.steps)):
            snapshot_svg(ts, result, k, outdir / f"snapshot_{k:04d}.svg")
            (outdir / f"snapshot_{k:04d}.dot").write_text(
                snapshot_dot(ts, result, k), encoding="utf-8"
            )
        print(f"wrote snapshots {k0}..{min(k1, result.steps - 1)}")
    if not all(m.passed for m in monitors):
        return EXIT_ERROR
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _effective_config(args)
    if args.print_config:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    ts = load_system(args.system)
    spec = _load_spec(args, ts.pi)
    nb = _neighborhood(ts, cfg["neighborhood"])
    seeds = (
        list(range(int(args.seeds)))
        if args.seeds.isdigit()
        else [int(x) for x in args.seeds.split(",")]
    )
    rp_cfg = {
        "decay": cfg["decay"],
        "respawn_prob": cfg["respawn"],
        "low": cfg["low"],
        "high": cfg["high"],
    }
    report = compare(
        ts,
        spec,
        rp_cfg,
        nb,
        n=cfg["horizon"],
        steps=cfg["steps"],
        seeds=seeds,
        consume_rewards=cfg["consume"],
        solver=cfg["solver"],
    )
    outdir = _outdir(args)
    (outdir / "comparison.json").write_text(
        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {outdir / 'comparison.json'}")
    for row in report.rows:
        print(
            f"seed {row.seed}: rh={row.rh_reward:.3f} baseline={row.baseline_reward:.3f}"
        )
    print(f"mean rh={report.mean_rh:.3f} mean baseline={report.mean_baseline:.3f}")
    if args.plot:
        comparison_png(report, outdir / args.plot)
        print(f"wrote {outdir / args.plot}")
    return EXIT_OK


def _cmd_monitors(args) -> int:
    ts = load_system(args.system)
    trace = load_trace(args.trace)
    cfg = MonitorConfig(
        forbidden=frozenset(args.forbidden.split(",")) if args.forbidden else frozenset(),
    )
    results = check_monitors(trace, ts, cfg)
    ok = True
    for m in results:
        status = "pass" if m.passed else f"FAIL at step {m.first_violation} ({m.detail})"
        print(f"monitor {m.name}: {status}")
        ok = ok and m.passed
    return EXIT_OK if ok else EXIT_ERROR


def _add_spec_flags(sp) -> None:
    sp.add_argument("--formula", help="formula file (grammar text, # comments)")
    sp.add_argument("--formula-text", help="formula given inline")
    sp.add_argument(
        "--buchi",
        help="buchi-v1 JSON file, or 'reference-12' for the bundled surveillance automaton",
    )


def _add_run_flags(sp) -> None:
    sp.add_argument("--system", required=True, help="dts-v1 JSON file")
    _add_spec_flags(sp)
    sp.add_argument("--config", help="TOML or JSON config file")
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--neighborhood", help="metric:R | hops:N | all")
    sp.add_argument("--rewards", help="'case-study' or scripted rewards CSV path")
    sp.add_argument("--decay", type=float)
    sp.add_argument("--respawn", type=float)
    sp.add_argument("--low", type=float)
    sp.add_argument("--high", type=float)
    sp.add_argument("--solver", choices=["dp", "dfs"])
    sp.add_argument(
        "--no-consume", dest="consume", action="store_const", const=False, default=None,
        help="collected rewards stay in the environment",
    )
    sp.add_argument("--out", help="output directory (default $LTLRHC_OUT or .)")
    sp.add_argument("--print-config", action="store_true", help="dump the effective config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltlrhc",
        description="Receding-horizon reward collection under temporal-logic constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("translate", help="formula -> buchi-v1 JSON")
    sp.add_argument("--formula")
    sp.add_argument("--formula-text")
    sp.add_argument("--ap", help="comma-separated observation set")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_translate)

    sp = sub.add_parser("gen-grid", help="lattice system -> dts-v1 JSON")
    sp.add_argument("--rows", type=int, required=True)
    sp.add_argument("--cols", type=int, required=True)
    sp.add_argument("--cell", type=float, required=True)
    sp.add_argument("--cutoff", type=float, required=True)
    sp.add_argument("--labels", required=True, help="JSON: {initial, ap?, labels}")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_gen_grid)

    sp = sub.add_parser("product", help="build the product, print a summary")
    sp.add_argument("--system", required=True)
    _add_spec_flags(sp)
    sp.add_argument("--dot", help="write a DOT rendering")
    sp.set_defaults(fn=_cmd_product)

    sp = sub.add_parser("energy", help="per-state energy as CSV")
    sp.add_argument("--system", required=True)
    _add_spec_flags(sp)
    sp.add_argument("--out-csv", required=True)
    sp.add_argument("--dot", help="write a DOT rendering with V annotations")
    sp.set_defaults(fn=_cmd_energy)

    sp = sub.add_parser("run", help="closed-loop simulation")
    _add_run_flags(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--controller", choices=["rh", "baseline"])
    sp.add_argument("--snapshots", help="K0:K1 step range to render as SVG/DOT")
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("compare", help="paired receding-horizon vs baseline runs")
    _add_run_flags(sp)
    sp.add_argument("--seeds", required=True, help="count (e.g. 20) or list (e.g. 1,5,9)")
    sp.add_argument("--plot", help="write a comparison figure (file name under --out)")
    sp.set_defaults(fn=_cmd_compare)

    sp = sub.add_parser("monitors", help="re-check monitors on a saved trace")
    sp.add_argument("--trace", required=True, help="trace base path (without .csv/.json)")
    sp.add_argument("--system", required=True)
    sp.add_argument("--forbidden", default="unsafe", help="comma-separated labels")
    sp.set_defaults(fn=_cmd_monitors)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
