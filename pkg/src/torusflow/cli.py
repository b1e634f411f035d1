"""Command-line sweep runner.

Writes, per run: a flat key=value manifest (config echo, version, timestamp,
output paths), an aggregate metrics table (csv or json), optional per-figure
series files, and an optional per-hop trace dump for small debug runs. All
data files are written atomically and are byte-stable for a given config;
only the manifest timestamp varies between identical runs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time

from . import __version__
from .analysis import AggregateMetrics, aggregate_sweep
from .forwarding import EngineConfig, Method, route_packet
from .montecarlo import ExperimentConfig, replicate_inputs, run_sweep
from .potential import compute_potential
from .topology import FailureMode, build_torus

REGIMES = {
    "low": (0.0001, 0.01),
    "medium": (0.001, 0.1),
    "high": (0.01, 1.0),
}

AGGREGATE_COLUMNS = (
    "method", "mode", "rows", "cols", "p", "n_replicates", "n_packets",
    "loss_rate", "improvement_pts", "max_hops_mean", "max_hops_max",
    "rf_packet_ratio", "rf_hops_ratio", "largest_cc_fraction_mean",
)

FIGURE_COLUMNS = {
    "fig4": ("p", "method", "loss_rate", "improvement_pts"),
    "fig5": ("p", "method", "max_hops_mean"),
    "fig6": ("p", "method", "rf_packet_ratio", "rf_hops_ratio"),
}


def log_spaced(lo: float, hi: float, points: int) -> list[float]:
    """Geometric grid from lo to hi inclusive."""
    if points == 1:
        return [lo]
    ratio = (hi / lo) ** (1.0 / (points - 1))
    values = [lo * ratio**i for i in range(points)]
    values[-1] = hi  # pin the endpoint against rounding drift
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="torusflow",
        description="Packet-loss percolation sweeps for reverse-flow "
        "forwarding on 2D torus networks.",
    )
    ap.add_argument("--rows", type=int, default=16)
    ap.add_argument("--cols", type=int, default=16)
    ap.add_argument("--mode", choices=["bond", "site"], default="bond")
    ap.add_argument(
        "--methods",
        default="NF,LFA,RF_CF,RF_LF",
        help="comma-separated subset of NF,LFA,RF_CF,RF_LF",
    )
    sweep = ap.add_mutually_exclusive_group()
    sweep.add_argument("--p", help="explicit comma-separated failure probabilities")
    sweep.add_argument(
        "--regime",
        choices=sorted(REGIMES),
        help="named log-spaced sweep range (default: medium)",
    )
    ap.add_argument("--points", type=int, default=20, help="sweep grid size")
    ap.add_argument("--replicates", type=int, default=1000)
    ap.add_argument("--packets-per-replicate", type=int, default=100)
    ap.add_argument("--sst", type=int, default=None,
                    help="reverse-hop switch threshold (default: 2 * diameter)")
    ap.add_argument("--ttl", type=int, default=None,
                    help="hop budget per packet (default: 16 * diameter)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    ap.add_argument("--figures", default="",
                    help="comma-separated subset of fig4,fig5,fig6")
    ap.add_argument("--dump-traces", action="store_true",
                    help="write one line per hop (small runs only)")
    ap.add_argument("--workers", type=int, default=1)
    return ap


def parse_args(argv=None):
    ap = build_parser()
    ns = ap.parse_args(argv)

    if ns.rows < 3:
        ap.error(f"--rows: torus needs at least 3 rows, got {ns.rows}")
    if ns.cols < 3:
        ap.error(f"--cols: torus needs at least 3 cols, got {ns.cols}")

    methods = []
    for token in ns.methods.split(","):
        name = token.strip().replace("-", "_").upper()
        if not name:
            continue
        try:
            methods.append(Method[name])
        except KeyError:
            ap.error(f"--methods: unknown method {token!r}")
    if not methods:
        ap.error("--methods: empty method list")

    if ns.p is not None:
        try:
            p_values = tuple(float(tok) for tok in ns.p.split(",") if tok.strip())
        except ValueError:
            ap.error(f"--p: could not parse {ns.p!r}")
        if not p_values:
            ap.error("--p: empty probability list")
    else:
        if ns.points < 1:
            ap.error(f"--points: need at least 1, got {ns.points}")
        lo, hi = REGIMES[ns.regime or "medium"]
        p_values = tuple(log_spaced(lo, hi, ns.points))
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            ap.error(f"--p: probability {p} outside [0, 1]")

    engine = None
    if ns.sst is not None or ns.ttl is not None:
        topo = build_torus(ns.rows, ns.cols)
        from .forwarding import default_engine_config

        dflt = default_engine_config(topo)
        try:
            engine = EngineConfig(
                sst=ns.sst if ns.sst is not None else dflt.sst,
                ttl=ns.ttl if ns.ttl is not None else dflt.ttl,
            )
        except ValueError as exc:
            ap.error(f"--sst/--ttl: {exc}")

    if ns.replicates < 1:
        ap.error(f"--replicates: need at least 1, got {ns.replicates}")
    if ns.packets_per_replicate < 1:
        ap.error(
            f"--packets-per-replicate: need at least 1, got {ns.packets_per_replicate}"
        )
    if ns.workers < 1:
        ap.error(f"--workers: need at least 1, got {ns.workers}")

    config = ExperimentConfig(
        rows=ns.rows,
        cols=ns.cols,
        mode=FailureMode(ns.mode),
        methods=tuple(methods),
        p_values=p_values,
        replicates=ns.replicates,
        packets_per_replicate=ns.packets_per_replicate,
        engine=engine,
        master_seed=ns.seed,
    )
    options = {
        "out_dir": ns.out_dir,
        "format": ns.format,
        "figures": tuple(t.strip() for t in ns.figures.split(",") if t.strip()),
        "dump_traces": ns.dump_traces,
        "workers": ns.workers,
    }
    for fig in options["figures"]:
        if fig not in FIGURE_COLUMNS:
            ap.error(f"--figures: unknown figure {fig!r}")
    return config, options


# ---------------------------------------------------------------------------
# rendering

def fmt_real(x) -> str:
    """Reals at six significant digits, empty for missing."""
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    s = format(float(x), "#.6g")
    return s.rstrip(".") if s.endswith(".") else s


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render_cell(name: str, value) -> str:
    if value is None:
        return ""
    if name in ("method",):
        return value.name
    if name in ("mode",):
        return value.value
    if name in ("rows", "cols", "n_replicates", "n_packets", "max_hops_max"):
        return str(value)
    return fmt_real(value)


def _metric_cells(m: AggregateMetrics, rows: int, cols: int) -> dict:
    return {
        "method": m.method,
        "mode": m.mode,
        "rows": rows,
        "cols": cols,
        "p": m.p,
        "n_replicates": m.n_replicates,
        "n_packets": m.n_packets,
        "loss_rate": m.loss_rate,
        "improvement_pts": m.improvement_pts,
        "max_hops_mean": m.max_hops_mean,
        "max_hops_max": m.max_hops_max,
        "rf_packet_ratio": m.rf_packet_ratio,
        "rf_hops_ratio": m.rf_hops_ratio,
        "largest_cc_fraction_mean": m.largest_cc_fraction_mean,
    }


def _emit_table(path: str, columns, cells_per_row, fmt: str):
    if fmt == "csv":
        lines = [",".join(columns)]
        for cells in cells_per_row:
            lines.append(",".join(_render_cell(c, cells[c]) for c in columns))
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        records = []
        for cells in cells_per_row:
            rec = {}
            for c in columns:
                v = cells[c]
                if isinstance(v, Method):
                    v = v.name
                elif isinstance(v, FailureMode):
                    v = v.value
                rec[c] = v
            records.append(rec)
        _atomic_write(path, json.dumps(records, indent=2) + "\n")


def emit_aggregate(metrics, config: ExperimentConfig, path: str, fmt: str = "csv"):
    rows = [_metric_cells(m, config.rows, config.cols) for m in metrics]
    _emit_table(path, AGGREGATE_COLUMNS, rows, fmt)


def emit_plot_data(metrics, config: ExperimentConfig, figure: str, path: str,
                   fmt: str = "csv"):
    if figure not in FIGURE_COLUMNS:
        raise ValueError(f"unknown figure {figure!r}")
    rows = [_metric_cells(m, config.rows, config.cols) for m in metrics]
    _emit_table(path, FIGURE_COLUMNS[figure], rows, fmt)


def emit_traces(config: ExperimentConfig, path: str):
    """One csv line per hop of every packet, replayable from the config."""
    engine = config.resolved_engine()
    topo = build_torus(config.rows, config.cols)
    lines = ["packet,method,hop,from,to,dir,kind,phi_from,phi_to"]
    for p_index, p in enumerate(config.p_values):
        for rep in range(config.replicates):
            scenario, pairs = replicate_inputs(config, p, p_index, rep)
            for k, (src, dst) in enumerate(pairs):
                phi = compute_potential(topo, dst)
                for method in config.methods:
                    outcome = route_packet(
                        scenario, method, src, dst, engine, record_trace=True
                    )
                    pid = f"p{p_index}.r{rep}.{k}"
                    for i, hop in enumerate(outcome.trace):
                        lines.append(
                            f"{pid},{method.name},{i},"
                            f"{hop.from_node[0]}:{hop.from_node[1]},"
                            f"{hop.to_node[0]}:{hop.to_node[1]},"
                            f"{hop.direction.name},{hop.kind.value},"
                            f"{phi.at(hop.from_node)},{phi.at(hop.to_node)}"
                        )
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# manifest

def write_manifest(path: str, config: ExperimentConfig, options, outputs):
    engine = config.resolved_engine()
    entries = [
        ("tool", "torusflow"),
        ("version", __version__),
        ("created_utc", time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())),
        ("rows", config.rows),
        ("cols", config.cols),
        ("mode", config.mode.value),
        ("methods", ",".join(m.name for m in config.methods)),
        ("p_values", ",".join(repr(p) for p in config.p_values)),
        ("replicates", config.replicates),
        ("packets_per_replicate", config.packets_per_replicate),
        ("sst", engine.sst),
        ("ttl", engine.ttl),
        ("master_seed", config.master_seed),
        ("format", options["format"]),
        ("workers", options["workers"]),
    ]
    for name, out_path in outputs:
        entries.append((name, out_path))
    _atomic_write(path, "\n".join(f"{k} = {v}" for k, v in entries) + "\n")


def read_manifest(path: str) -> dict:
    out = {}
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition(" = ")
            out[key] = value
    return out


def config_from_manifest(manifest: dict) -> ExperimentConfig:
    """Rebuild the exact ExperimentConfig a manifest echoes."""
    return ExperimentConfig(
        rows=int(manifest["rows"]),
        cols=int(manifest["cols"]),
        mode=FailureMode(manifest["mode"]),
        methods=tuple(Method[m] for m in manifest["methods"].split(",")),
        p_values=tuple(float(p) for p in manifest["p_values"].split(",")),
        replicates=int(manifest["replicates"]),
        packets_per_replicate=int(manifest["packets_per_replicate"]),
        engine=EngineConfig(sst=int(manifest["sst"]), ttl=int(manifest["ttl"])),
        master_seed=int(manifest["master_seed"]),
    )


# ---------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig, options) -> dict:
    out_dir = options["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    fmt = options["format"]
    ext = "csv" if fmt == "csv" else "json"

    results = run_sweep(config, workers=options["workers"])
    metrics = aggregate_sweep(results, config)

    outputs = []
    aggregate_path = os.path.join(out_dir, f"aggregate.{ext}")
    emit_aggregate(metrics, config, aggregate_path, fmt)
    outputs.append(("aggregate_path", aggregate_path))

    for fig in options["figures"]:
        fig_path = os.path.join(out_dir, f"{fig}.{ext}")
        emit_plot_data(metrics, config, fig, fig_path, fmt)
        outputs.append((f"{fig}_path", fig_path))

    if options["dump_traces"]:
        traces_path = os.path.join(out_dir, "traces.csv")
        emit_traces(config, traces_path)
        outputs.append(("traces_path", traces_path))

    manifest_path = os.path.join(out_dir, "manifest.txt")
    write_manifest(manifest_path, config, options, outputs)
    paths = {"manifest_path": manifest_path}
    paths.update(dict(outputs))
    return paths


def main(argv=None) -> int:
    config, options = parse_args(argv)
    paths = run_experiment(config, options)
    total = len(config.p_values) * config.replicates
    print(
        f"torusflow: {config.rows}x{config.cols} {config.mode.value} sweep, "
        f"{len(config.p_values)} p-values x {config.replicates} replicates "
        f"({total} scenarios), methods {','.join(m.name for m in config.methods)}",
        file=sys.stderr,
    )
    for name, path in sorted(paths.items()):
        print(f"  {name}: {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
