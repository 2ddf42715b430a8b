"""Command-line entry point: run suites, analyze records, render figures.

Subcommands:

* ``run``      — execute the configured layout suite (or a subset), writing
                 ``records.csv``, ``manifest.json``, and per-run loss traces.
* ``analyze``  — aggregate a records file into CSV tables (delta / sector /
                 ring / hist / ecdf / winrate), each labeled with its sign
                 convention.
* ``plot``     — render SVG figures from the analysis tables.

The default output directory comes from ``--out``, else the
``ARM_CODESIGN_OUT`` environment variable, else the config file. Exit code
is 0 only when every requested run and record succeeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, analysis
from .config import ConfigError, ExperimentConfig, config_hash, load_config, obstacle_from_dict
from .experiment import CONDITION_ORDER, EvalRecord, run_layout_suite
from .records import read_records, write_manifest, write_records

ANALYSES = ("delta", "sector", "ring", "hist", "ecdf", "winrate")
PLOT_KINDS = ("delta", "sector", "hist", "ecdf")
METRICS = ("final_error", "trajectory_error", "success")


def _write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    layout_names = args.layout or sorted(cfg.layouts)
    missing = [n for n in layout_names if n not in cfg.layouts]
    if missing:
        print(f"error: unknown layout(s) {missing}, config has {sorted(cfg.layouts)}", file=sys.stderr)
        return 2
    conditions = list(CONDITION_ORDER) if args.condition == "both" else [args.condition]
    protocol = args.protocol or cfg.protocol
    seeds = tuple(s + args.seed_offset for s in cfg.seeds)
    out_dir = Path(args.out or os.environ.get("ARM_CODESIGN_OUT") or cfg.output_dir)

    scenarios = {name: cfg.scenario(name) for name in layout_names}
    results = run_layout_suite(
        scenarios,
        cfg.ga,
        protocol,
        seeds,
        baseline=cfg.baseline,
        hidden_width=cfg.hidden_width,
        spacing=cfg.grid_spacing,
        tolerance=cfg.analysis.tolerance,
        explicit_targets={k: v for k, v in cfg.targets.items() if k in layout_names},
        conditions=conditions,
        workers=args.workers,
    )

    records: list[EvalRecord] = []
    layout_errors: dict[str, str] = {}
    for name in sorted(results):
        res = results[name]
        if res.error is not None:
            layout_errors[name] = res.error
        records.extend(res.records)

    write_records(records, out_dir)
    failures = [r for r in records if r.error is not None]
    manifest = {
        "config": cfg.raw,
        "config_hash": config_hash(cfg.raw),
        "protocol": protocol,
        "conditions": conditions,
        "seeds": list(seeds),
        "layouts": layout_names,
        "targets_per_layout": {
            name: [list(t) for t in results[name].targets] for name in sorted(results)
        },
        "record_count": len(records),
        "failed_records": len(failures),
        "layout_errors": layout_errors,
        "versions": {
            "arm_codesign": __version__,
            "python": platform.python_version(),
        },
    }
    write_manifest(manifest, out_dir)

    print(f"wrote {len(records)} records to {out_dir / 'records.csv'}")
    for name, err in layout_errors.items():
        print(f"layout {name}: ERROR {err}", file=sys.stderr)
    for r in failures:
        print(
            f"record {r.layout}/{r.condition}/{r.target}/seed={r.seed}: {r.error}",
            file=sys.stderr,
        )
    return 0 if not failures and not layout_errors else 1


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _split_conditions(
    records: Sequence[EvalRecord],
) -> tuple[list[EvalRecord], list[EvalRecord]]:
    co = [r for r in records if r.condition == "co_design"]
    ctrl = [r for r in records if r.condition == "control_only"]
    return co, ctrl


def _require_pairs(co: Sequence[EvalRecord], ctrl: Sequence[EvalRecord], layout: str) -> None:
    co_keys = {(r.target, r.seed) for r in co if r.error is None}
    ctrl_keys = {(r.target, r.seed) for r in ctrl if r.error is None}
    if not (co_keys & ctrl_keys):
        missing = sorted(co_keys ^ ctrl_keys)[:5]
        raise ValueError(
            f"layout {layout!r}: no paired (target, seed) records; "
            f"unmatched examples: {missing}"
        )


def _analysis_config(records_path: Path) -> analysis.AnalysisConfig:
    """Pull analysis knobs from the sibling manifest when one exists."""
    manifest_path = records_path.parent / "manifest.json"
    if manifest_path.exists():
        raw = json.loads(manifest_path.read_text()).get("config", {})
        a = raw.get("analysis", {})
        return analysis.AnalysisConfig(
            tolerance=a.get("tolerance", 0.05),
            histogram_edges=tuple(a.get("histogram_edges", (0.0, 0.03, 0.05, 0.10, 0.15, 0.20, 0.25))),
            n_sectors=a.get("n_sectors", 8),
            ring_edges=tuple(a.get("ring_edges", (0.0, 0.10, 0.20, 0.30))),
        )
    return analysis.AnalysisConfig()


def cmd_analyze(args: argparse.Namespace) -> int:
    records_path = Path(args.records)
    if not records_path.exists():
        print(f"error: no records file at {records_path}", file=sys.stderr)
        return 2
    records = read_records(records_path, load_traces=False)
    out_dir = Path(args.out or records_path.parent / "analysis")
    acfg = _analysis_config(records_path)
    metric = args.metric
    requested = ANALYSES if args.analysis == "all" else (args.analysis,)

    by_layout: dict[str, list[EvalRecord]] = {}
    for r in records:
        by_layout.setdefault(r.layout, []).append(r)

    try:
        for kind in requested:
            _run_analysis(kind, by_layout, metric, acfg, out_dir)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(requested)} tables to {out_dir}")
    return 0


def _run_analysis(
    kind: str,
    by_layout: dict[str, list[EvalRecord]],
    metric: str,
    acfg: analysis.AnalysisConfig,
    out_dir: Path,
) -> None:
    if kind == "delta":
        rows = []
        for layout in sorted(by_layout):
            co, ctrl = _split_conditions(by_layout[layout])
            _require_pairs(co, ctrl, layout)
            dmap = analysis.delta_map(co, ctrl, metric)
            for t in sorted(dmap.values):
                rows.append(
                    [layout, _fmt(t[0]), _fmt(t[1]), _fmt(dmap.values[t]),
                     dmap.seed_counts[t], dmap.convention]
                )
        _write_table(
            out_dir / f"delta_{metric}.csv",
            ["layout", "target_x", "target_y", "delta", "n_seed_pairs", "convention"],
            rows,
        )
    elif kind == "sector":
        rows = []
        for layout in sorted(by_layout):
            co, ctrl = _split_conditions(by_layout[layout])
            _require_pairs(co, ctrl, layout)
            st = analysis.sector_stats(co, ctrl, acfg.n_sectors)
            for s, (mean, count) in enumerate(zip(st.means, st.counts)):
                rows.append(
                    [layout, s, "" if mean is None else _fmt(mean), count, st.convention]
                )
        _write_table(
            out_dir / "sector_final_error.csv",
            ["layout", "sector", "mean_delta", "n_targets", "convention"],
            rows,
        )
    elif kind == "ring":
        rows = []
        for layout in sorted(by_layout):
            co, ctrl = _split_conditions(by_layout[layout])
            _require_pairs(co, ctrl, layout)
            rs = analysis.ring_stats(co, ctrl, acfg.ring_edges)
            for k, (mean, count) in enumerate(zip(rs.means, rs.counts)):
                rows.append(
                    [layout, _fmt(rs.edges[k]), _fmt(rs.edges[k + 1]),
                     "" if mean is None else _fmt(mean), count, rs.convention]
                )
        _write_table(
            out_dir / "ring_final_error.csv",
            ["layout", "ring_lo", "ring_hi", "mean_delta", "n_targets", "convention"],
            rows,
        )
    elif kind == "hist":
        if metric == "success":
            raise ValueError("histogram analysis needs an error metric, not 'success'")
        rows = []
        for layout in sorted(by_layout):
            for cond in CONDITION_ORDER:
                values = [
                    getattr(r, metric)
                    for r in by_layout[layout]
                    if r.condition == cond and r.error is None and getattr(r, metric) is not None
                ]
                if not values:
                    continue
                counts = analysis.histogram(values, acfg.histogram_edges)
                edges = list(acfg.histogram_edges) + [float("inf")]
                for i, count in enumerate(counts):
                    rows.append(
                        [layout, cond, _fmt(edges[i]), _fmt(edges[i + 1]), count]
                    )
        _write_table(
            out_dir / f"hist_{metric}.csv",
            ["layout", "condition", "bin_lo", "bin_hi", "count"],
            rows,
        )
    elif kind == "ecdf":
        if metric == "success":
            raise ValueError("ecdf analysis needs an error metric, not 'success'")
        rows = []
        for layout in sorted(by_layout):
            for cond in CONDITION_ORDER:
                values = [
                    getattr(r, metric)
                    for r in by_layout[layout]
                    if r.condition == cond and r.error is None and getattr(r, metric) is not None
                ]
                if not values:
                    continue
                for v, frac in analysis.ecdf(values):
                    rows.append([layout, cond, _fmt(v), _fmt(frac)])
        _write_table(
            out_dir / f"ecdf_{metric}.csv",
            ["layout", "condition", "value", "fraction"],
            rows,
        )
    elif kind == "winrate":
        rows = []
        for layout in sorted(by_layout):
            co, ctrl = _split_conditions(by_layout[layout])
            _require_pairs(co, ctrl, layout)
            wr = analysis.win_rate(co, ctrl, metric)
            rows.append(
                [layout, wr.wins_co, wr.wins_ctrl, wr.ties, wr.n_targets,
                 _fmt(wr.fraction_co), _fmt(wr.fraction_ctrl)]
            )
        _write_table(
            out_dir / f"winrate_{metric}.csv",
            ["layout", "wins_co", "wins_ctrl", "ties", "n_targets",
             "fraction_co", "fraction_ctrl"],
            rows,
        )
    else:
        raise ValueError(f"unknown analysis {kind!r}, expected one of {ANALYSES}")


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------


def _read_table(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_plot(args: argparse.Namespace) -> int:
    # Import here so `run`/`analyze` stay usable without a display stack.
    from . import plots

    run_dir = Path(args.run_dir)
    analysis_dir = Path(args.tables or run_dir / "analysis")
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        print(f"error: no manifest.json in {run_dir}", file=sys.stderr)
        return 2
    if not analysis_dir.exists():
        print(f"error: no analysis tables at {analysis_dir}; run `analyze` first", file=sys.stderr)
        return 2
    manifest = json.loads(manifest_path.read_text())
    raw = manifest.get("config", {})
    cfg_hash = manifest.get("config_hash", "")
    spacing = float(raw.get("grid_spacing", 0.05))
    obstacles_by_layout = {
        name: [obstacle_from_dict(o) for o in items]
        for name, items in raw.get("layouts", {}).items()
    }
    base = raw.get("baseline", {})
    reach = float(base.get("l1", 0.15)) + float(base.get("l2", 0.15))

    kinds = PLOT_KINDS if args.kind == "all" else (args.kind,)
    unknown = [k for k in kinds if k not in PLOT_KINDS]
    if unknown:
        print(f"error: unknown plot kind(s) {unknown}, valid kinds: {list(PLOT_KINDS)}", file=sys.stderr)
        return 2
    out_dir = Path(args.out or run_dir / "figures")
    written: list[Path] = []

    for kind in kinds:
        if kind == "delta":
            for table in sorted(analysis_dir.glob("delta_*.csv")):
                metric = table.stem.removeprefix("delta_")
                rows = _read_table(table)
                by_layout: dict[str, dict[tuple[float, float], float]] = {}
                conventions: dict[str, str] = {}
                for row in rows:
                    t = (float(row["target_x"]), float(row["target_y"]))
                    by_layout.setdefault(row["layout"], {})[t] = float(row["delta"])
                    conventions[row["layout"]] = row["convention"]
                for layout, values in sorted(by_layout.items()):
                    written.append(
                        plots.plot_delta_map(
                            values,
                            spacing,
                            obstacles_by_layout.get(layout, []),
                            cfg_hash,
                            out_dir / f"delta_{metric}_{layout}.svg",
                            title=f"Δ {metric} — layout {layout}",
                            convention=conventions[layout],
                            reach=reach,
                        )
                    )
        elif kind == "sector":
            table = analysis_dir / "sector_final_error.csv"
            if not table.exists():
                continue
            rows = _read_table(table)
            by_layout2: dict[str, list[dict[str, str]]] = {}
            for row in rows:
                by_layout2.setdefault(row["layout"], []).append(row)
            for layout, lrows in sorted(by_layout2.items()):
                lrows.sort(key=lambda r: int(r["sector"]))
                means = [float(r["mean_delta"]) if r["mean_delta"] else None for r in lrows]
                counts = [int(r["n_targets"]) for r in lrows]
                written.append(
                    plots.plot_sector_bars(
                        means,
                        counts,
                        cfg_hash,
                        out_dir / f"sector_final_error_{layout}.svg",
                        title=f"sector Δ final error — layout {layout}",
                        convention=lrows[0]["convention"],
                    )
                )
        elif kind == "hist":
            for table in sorted(analysis_dir.glob("hist_*.csv")):
                metric = table.stem.removeprefix("hist_")
                rows = _read_table(table)
                per_layout: dict[str, dict[str, list[tuple[float, int]]]] = {}
                for row in rows:
                    per_layout.setdefault(row["layout"], {}).setdefault(
                        row["condition"], []
                    ).append((float(row["bin_lo"]), int(row["count"])))
                for layout, conds in sorted(per_layout.items()):
                    edges = sorted({lo for bins in conds.values() for lo, _ in bins})
                    counts_by_cond = {
                        cond: [c for _, c in sorted(bins)] for cond, bins in conds.items()
                    }
                    written.append(
                        plots.plot_histogram(
                            counts_by_cond,
                            edges,
                            cfg_hash,
                            out_dir / f"hist_{metric}_{layout}.svg",
                            title=f"{metric} histogram — layout {layout}",
                            xlabel=f"{metric.replace('_', ' ')}",
                        )
                    )
        elif kind == "ecdf":
            for table in sorted(analysis_dir.glob("ecdf_*.csv")):
                metric = table.stem.removeprefix("ecdf_")
                rows = _read_table(table)
                steps_per_layout: dict[str, dict[str, list[tuple[float, float]]]] = {}
                for row in rows:
                    steps_per_layout.setdefault(row["layout"], {}).setdefault(
                        row["condition"], []
                    ).append((float(row["value"]), float(row["fraction"])))
                for layout, conds in sorted(steps_per_layout.items()):
                    written.append(
                        plots.plot_ecdf(
                            {c: sorted(s) for c, s in conds.items()},
                            cfg_hash,
                            out_dir / f"ecdf_{metric}_{layout}.svg",
                            title=f"{metric} ECDF — layout {layout}",
                            xlabel=f"{metric.replace('_', ' ')}",
                        )
                    )

    if not written:
        print("error: no matching analysis tables found to plot", file=sys.stderr)
        return 1
    print(f"wrote {len(written)} figure(s) to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arm-codesign",
        description="co-design vs control-only reaching workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment suite")
    p_run.add_argument("-c", "--config", required=True, help="path to a JSON config")
    p_run.add_argument(
        "--layout", action="append", help="restrict to a named layout (repeatable)"
    )
    p_run.add_argument(
        "--condition",
        choices=("co_design", "control_only", "both"),
        default="both",
    )
    p_run.add_argument(
        "--protocol", choices=("equal_width", "equal_params"), default=None,
        help="override the config's fairness protocol",
    )
    p_run.add_argument("--seed-offset", type=int, default=0)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("-o", "--out", default=None, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="aggregate records into CSV tables")
    p_an.add_argument("records", help="path to records.csv")
    p_an.add_argument(
        "--analysis", choices=ANALYSES + ("all",), default="all"
    )
    p_an.add_argument("--metric", choices=METRICS, default="final_error")
    p_an.add_argument("-o", "--out", default=None)
    p_an.set_defaults(func=cmd_analyze)

    p_plot = sub.add_parser("plot", help="render SVG figures from analysis tables")
    p_plot.add_argument("run_dir", help="run directory containing manifest.json")
    p_plot.add_argument("--tables", default=None, help="analysis tables directory")
    p_plot.add_argument("--kind", choices=PLOT_KINDS + ("all",), default="all")
    p_plot.add_argument("-o", "--out", default=None)
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
