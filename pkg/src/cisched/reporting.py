"""Per-cycle and campaign metrics: utilization, priority distribution, plot exports."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from cisched.domain import Outcome, TestAgent
from cisched.execution import AgentResult, TestPlan
from cisched.priority import PrioritizedTest
from cisched.scheduling import Schedule, quantize_seconds

FORMAT_VERSION = 1
HISTOGRAM_BINS = 20
# Campaign thresholds the utilization summary reports against.
UTILIZATION_FLOOR = 0.91
UTILIZATION_TARGET = 0.99


class EmptyCampaignError(Exception):
    """campaign_summary needs at least one report."""


@dataclass(frozen=True)
class CycleReport:
    """Metrics for one completed cycle.

    ``solver_wall_time_ms`` is measured, not derived, so it is kept on the
    object for operators but excluded from the persisted form; run timing
    lands in a sidecar file instead, keeping report files identical across
    reruns with the same seeds.
    """

    cycle: int
    per_agent_utilization: Mapping[str, float]
    overall_utilization: float
    scheduled_count: int
    executed_count: int
    fail_count: int
    priority_histogram: tuple[int, ...]
    dropped_tests: int
    actual_utilization: float
    budget_overruns: int
    solver_wall_time_ms: float = 0.0


@dataclass(frozen=True)
class CampaignSummary:
    """Aggregates over a run's cycle reports."""

    cycles: int
    min_utilization: float
    median_utilization: float
    max_utilization: float
    fraction_at_least_91: float
    fraction_at_least_99: float
    aggregate_priority_histogram: tuple[int, ...]
    total_failures: int


def utilization(
    schedule: Schedule,
    agents: Sequence[TestAgent],
    durations: Mapping[str, float],
) -> tuple[dict[str, float], float]:
    """Planned time filled per agent and overall, as fractions of budget.

    ``durations`` maps test id to planned duration in seconds. Integer
    microsecond sums keep the ratios identical across runs.
    """
    per_agent: dict[str, float] = {}
    used_total = 0
    budget_total = 0
    for agent in agents:
        budget_us = quantize_seconds(agent.budget)
        used_us = sum(
            quantize_seconds(durations[t]) for t in schedule.assignments.get(agent.id, ())
        )
        per_agent[agent.id] = used_us / budget_us if budget_us else 0.0
        used_total += used_us
        budget_total += budget_us
    overall = used_total / budget_total if budget_total else 0.0
    return per_agent, overall


def priority_histogram(
    prioritized: Sequence[PrioritizedTest], bins: int = HISTOGRAM_BINS
) -> tuple[int, ...]:
    """Counts over equal-width bins spanning [0, 1], last bin right-closed."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts = np.zeros(bins, dtype=np.int64)
    if prioritized:
        values = np.array([p.priority for p in prioritized], dtype=np.float64)
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("priorities must lie in [0, 1]")
        edges = np.linspace(0.0, 1.0, bins + 1)
        idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, bins - 1)
        np.add.at(counts, idx, 1)
    return tuple(int(c) for c in counts)


def make_cycle_report(
    cycle: int,
    schedule: Schedule,
    prioritized: Sequence[PrioritizedTest],
    agents: Sequence[TestAgent],
    results: Sequence[AgentResult],
    solver_wall_time_ms: float = 0.0,
) -> CycleReport:
    """Assemble the cycle's metrics from its schedule and execution results."""
    durations = {p.test.id: p.test.avg_duration for p in prioritized}
    per_agent, overall = utilization(schedule, agents, durations)

    actual_by_agent: dict[str, float] = {a.id: 0.0 for a in agents}
    executed = 0
    failed = 0
    for result in results:
        for record in result.records:
            executed += 1
            if record.outcome is Outcome.FAIL:
                failed += 1
            actual_by_agent[record.agent_id] = (
                actual_by_agent.get(record.agent_id, 0.0) + record.actual_duration
            )
    budget_total = sum(a.budget for a in agents)
    actual_total = sum(actual_by_agent.values())
    overruns = sum(1 for a in agents if actual_by_agent.get(a.id, 0.0) > a.budget)

    return CycleReport(
        cycle=cycle,
        per_agent_utilization=per_agent,
        overall_utilization=overall,
        scheduled_count=schedule.size,
        executed_count=executed,
        fail_count=failed,
        priority_histogram=priority_histogram(prioritized),
        dropped_tests=len(prioritized) - schedule.size,
        actual_utilization=actual_total / budget_total if budget_total else 0.0,
        budget_overruns=overruns,
        solver_wall_time_ms=solver_wall_time_ms,
    )


def campaign_summary(reports: Sequence[CycleReport]) -> CampaignSummary:
    """Utilization spread, threshold fractions, aggregate histogram, failures."""
    if not reports:
        raise EmptyCampaignError("campaign_summary requires at least one report")
    overall = [r.overall_utilization for r in reports]
    bins = len(reports[0].priority_histogram)
    aggregate = [0] * bins
    for r in reports:
        if len(r.priority_histogram) != bins:
            raise ValueError("reports disagree on histogram bin count")
        for i, c in enumerate(r.priority_histogram):
            aggregate[i] += c
    return CampaignSummary(
        cycles=len(reports),
        min_utilization=min(overall),
        median_utilization=statistics.median(overall),
        max_utilization=max(overall),
        fraction_at_least_91=sum(u >= UTILIZATION_FLOOR for u in overall) / len(overall),
        fraction_at_least_99=sum(u >= UTILIZATION_TARGET for u in overall) / len(overall),
        aggregate_priority_histogram=tuple(aggregate),
        total_failures=sum(r.fail_count for r in reports),
    )


def export_plot_data(
    reports: Sequence[CycleReport],
    plans: Sequence[TestPlan],
    out_dir: str | Path,
) -> list[Path]:
    """Write utilization, histogram, and timeline CSVs for plotting.

    The timeline lays each agent's tests end to end in plan order, so the
    per-agent intervals never overlap. Returns the written paths.
    """
    if not reports:
        raise EmptyCampaignError("export_plot_data requires at least one report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    agent_ids = sorted({a for r in reports for a in r.per_agent_utilization})

    util_path = out / "utilization.csv"
    with _open_for_write(util_path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle", "overall", "actual_overall", *agent_ids])
        for r in sorted(reports, key=lambda r: r.cycle):
            row = [r.cycle, r.overall_utilization, r.actual_utilization]
            row.extend(
                r.per_agent_utilization.get(a, "") for a in agent_ids
            )
            writer.writerow(row)

    summary = campaign_summary(reports)
    bins = len(summary.aggregate_priority_histogram)
    hist_path = out / "priority_histogram.csv"
    with _open_for_write(hist_path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_index", "bin_start", "bin_end", "count"])
        for i, count in enumerate(summary.aggregate_priority_histogram):
            writer.writerow([i, i / bins, (i + 1) / bins, count])

    timeline_path = out / "timeline.csv"
    with _open_for_write(timeline_path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle", "agent_id", "test_id", "start_offset", "duration"])
        for plan in sorted(plans, key=lambda p: (p.cycle, p.agent_id)):
            offset = 0.0
            for entry in plan.entries:
                writer.writerow(
                    [plan.cycle, plan.agent_id, entry.test_id, offset, entry.planned_duration]
                )
                offset += entry.planned_duration

    return [util_path, hist_path, timeline_path]


def _open_for_write(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def report_to_dict(report: CycleReport) -> dict:
    # solver_wall_time_ms deliberately absent: see CycleReport.
    return {
        "format_version": FORMAT_VERSION,
        "cycle": report.cycle,
        "per_agent_utilization": dict(report.per_agent_utilization),
        "overall_utilization": report.overall_utilization,
        "scheduled_count": report.scheduled_count,
        "executed_count": report.executed_count,
        "fail_count": report.fail_count,
        "priority_histogram": list(report.priority_histogram),
        "dropped_tests": report.dropped_tests,
        "actual_utilization": report.actual_utilization,
        "budget_overruns": report.budget_overruns,
    }


def report_from_dict(data: dict) -> CycleReport:
    expected = {
        "format_version",
        "cycle",
        "per_agent_utilization",
        "overall_utilization",
        "scheduled_count",
        "executed_count",
        "fail_count",
        "priority_histogram",
        "dropped_tests",
        "actual_utilization",
        "budget_overruns",
    }
    unknown = set(data) - expected
    if unknown:
        raise ValueError(f"unknown report fields: {sorted(unknown)}")
    missing = expected - set(data)
    if missing:
        raise ValueError(f"missing report fields: {sorted(missing)}")
    if data["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version: {data['format_version']!r}")
    return CycleReport(
        cycle=data["cycle"],
        per_agent_utilization=dict(data["per_agent_utilization"]),
        overall_utilization=data["overall_utilization"],
        scheduled_count=data["scheduled_count"],
        executed_count=data["executed_count"],
        fail_count=data["fail_count"],
        priority_histogram=tuple(data["priority_histogram"]),
        dropped_tests=data["dropped_tests"],
        actual_utilization=data["actual_utilization"],
        budget_overruns=data["budget_overruns"],
    )


def summary_to_dict(summary: CampaignSummary) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "cycles": summary.cycles,
        "min_utilization": summary.min_utilization,
        "median_utilization": summary.median_utilization,
        "max_utilization": summary.max_utilization,
        "fraction_at_least_91": summary.fraction_at_least_91,
        "fraction_at_least_99": summary.fraction_at_least_99,
        "aggregate_priority_histogram": list(summary.aggregate_priority_histogram),
        "total_failures": summary.total_failures,
    }


def save_report(report: CycleReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_report(path: str | Path) -> CycleReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
