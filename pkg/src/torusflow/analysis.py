"""Aggregation of replicate results into per-(method, p) metrics.

Loss improvements are paired differences against NF over the same replicates
and the same packets, reported in absolute percentage points. Reverse-flow
ratios are taken over delivered packets only. Replicates that delivered
nothing contribute no max-hop sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .forwarding import Method
from .montecarlo import ExperimentConfig, ReplicateResult
from .topology import FailureMode


@dataclass(frozen=True)
class AggregateMetrics:
    method: Method
    mode: FailureMode
    p: float
    n_replicates: int
    n_packets: int
    loss_rate: float
    improvement_pts: float  # NaN when NF was not simulated
    max_hops_mean: float | None  # None when no replicate delivered anything
    max_hops_max: int | None
    rf_packet_ratio: float
    rf_hops_ratio: float
    largest_cc_fraction_mean: float


def aggregate(
    results: list[ReplicateResult],
    method: Method,
    mode: FailureMode,
    p: float,
) -> AggregateMetrics:
    """Collapse all replicates at one p into one row for one method."""
    rows = [r for r in results if r.p == p]
    if not rows:
        raise ValueError(f"no replicates at p={p}")
    n_packets = sum(r.n_packets for r in rows)
    delivered = sum(r.tallies[method].delivered for r in rows)
    lost = sum(r.tallies[method].lost for r in rows)
    loss_rate = lost / n_packets

    if Method.NF in rows[0].tallies:
        nf_lost = sum(r.tallies[Method.NF].lost for r in rows)
        improvement = (nf_lost / n_packets - loss_rate) * 100.0
    else:
        improvement = math.nan

    max_samples = [
        r.tallies[method].max_hops_delivered
        for r in rows
        if r.tallies[method].max_hops_delivered is not None
    ]
    max_hops_mean = sum(max_samples) / len(max_samples) if max_samples else None
    max_hops_max = max(max_samples) if max_samples else None

    with_reverse = sum(r.tallies[method].delivered_with_reverse for r in rows)
    hops_total = sum(r.tallies[method].total_hops_delivered for r in rows)
    rev_total = sum(r.tallies[method].reverse_hops_delivered for r in rows)
    rf_packet_ratio = with_reverse / delivered if delivered else 0.0
    rf_hops_ratio = rev_total / hops_total if hops_total else 0.0

    return AggregateMetrics(
        method=method,
        mode=mode,
        p=p,
        n_replicates=len(rows),
        n_packets=n_packets,
        loss_rate=loss_rate,
        improvement_pts=improvement,
        max_hops_mean=max_hops_mean,
        max_hops_max=max_hops_max,
        rf_packet_ratio=rf_packet_ratio,
        rf_hops_ratio=rf_hops_ratio,
        largest_cc_fraction_mean=sum(r.largest_cc_fraction for r in rows) / len(rows),
    )


def aggregate_sweep(
    results: list[ReplicateResult], config: ExperimentConfig
) -> list[AggregateMetrics]:
    """One row per (method, p), methods in declaration order of the Method
    enum, p ascending within each method."""
    by_p = {}
    for r in results:
        by_p.setdefault(r.p_index, []).append(r)
    p_order = sorted(by_p, key=lambda i: config.p_values[i])
    out = []
    for method in Method:
        if method not in config.methods:
            continue
        for p_index in p_order:
            out.append(
                aggregate(by_p[p_index], method, config.mode, config.p_values[p_index])
            )
    return out


@dataclass(frozen=True)
class CriticalPointEstimate:
    p: float
    value: float
    index: int


def estimate_peak(p_values, series) -> CriticalPointEstimate:
    """Position of the maximum of a metric series over p; ties go to the
    smaller p, entries of None are skipped."""
    if len(p_values) != len(series):
        raise ValueError("p_values and series must have equal length")
    if len(p_values) < 3:
        raise ValueError("need at least 3 points to call anything a peak")
    order = sorted(range(len(p_values)), key=lambda i: p_values[i])
    best = None
    for i in order:
        v = series[i]
        if v is None:
            continue
        if best is None or v > series[best]:
            best = i
    if best is None:
        raise ValueError("series has no values")
    return CriticalPointEstimate(p=p_values[best], value=series[best], index=best)
