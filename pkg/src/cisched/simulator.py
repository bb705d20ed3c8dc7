"""Closed-loop CI simulation: filter, prioritize, schedule, execute, collect, report."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from cisched.domain import (
    HistoryStore,
    TestAgent,
    TestCase,
    append_history,
    filter_eligible,
)
from cisched.execution import (
    AgentResult,
    OutcomeModel,
    TestPlan,
    collect_results,
    emit_test_plans,
    execute_plan,
    plan_path,
    result_path,
    save_plan,
    save_result,
)
from cisched.priority import PriorityWeights, prioritize_all
from cisched.reporting import CycleReport, make_cycle_report, save_report
from cisched.scheduling import Schedule, build_instance, schedule_greedy
from cisched.solver import SolveStats, solve_detailed

logger = logging.getLogger(__name__)


class SchedulerKind(str, Enum):
    GREEDY = "greedy"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one simulation run needs besides the repository itself."""

    cycles: int
    scheduler: SchedulerKind
    weights: PriorityWeights
    outcome_model: OutcomeModel
    solver_time_budget_ms: int = 2000
    out_dir: str | None = None
    pair_staleness_cap: int = 8
    diversity: bool = True
    backend: str = "auto"
    nodes_per_ms: int | None = None

    def __post_init__(self) -> None:
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        self.weights.validate()


@dataclass
class SimulationState:
    """Mutable loop state: the repository plus the history it accumulates."""

    tests: list[TestCase]
    agents: list[TestAgent]
    history: HistoryStore
    config: SimulationConfig


class CycleError(Exception):
    """A simulation cycle failed; carries the failing cycle index."""

    def __init__(self, cycle: int, cause: Exception) -> None:
        super().__init__(f"cycle {cycle} failed: {cause}")
        self.cycle = cycle


@dataclass(frozen=True)
class _CycleArtifacts:
    report: CycleReport
    plans: tuple[TestPlan, ...]
    results: tuple[AgentResult, ...]
    schedule: Schedule
    stats: SolveStats | None


def run_cycle(state: SimulationState) -> CycleReport:
    """Run one full cycle, advancing the history.

    Pipeline order is fixed: filter, prioritize, schedule, emit plans,
    execute, collect. An InfeasibleError from the scheduler propagates and
    leaves the history untouched, since collection is the only mutation and
    happens last.
    """
    return _run_cycle(state).report


def _run_cycle(state: SimulationState) -> _CycleArtifacts:
    cfg = state.config
    cycle = state.history.current_cycle
    logger.info("cycle %d: filtering repository", cycle)
    eligible, active_agents = filter_eligible(state.tests, state.agents)
    logger.info("cycle %d: prioritizing %d eligible tests", cycle, len(eligible))
    prioritized = prioritize_all(eligible, state.history, cfg.weights, cycle)
    logger.info(
        "cycle %d: scheduling %d tests on %d agents (%s)",
        cycle,
        len(prioritized),
        len(active_agents),
        cfg.scheduler.value,
    )
    instance = build_instance(
        prioritized,
        active_agents,
        state.history.pair_last_cycle(),
        cycle,
        solver_time_budget_ms=cfg.solver_time_budget_ms,
        staleness_cap=cfg.pair_staleness_cap,
        diversity=cfg.diversity,
    )
    stats: SolveStats | None = None
    if cfg.scheduler is SchedulerKind.GREEDY:
        t0 = time.perf_counter()
        schedule = schedule_greedy(instance)
        wall_ms = (time.perf_counter() - t0) * 1000.0
    else:
        schedule, stats = solve_detailed(
            instance, backend=cfg.backend, nodes_per_ms=cfg.nodes_per_ms
        )
        wall_ms = stats.wall_ms
    logger.info("cycle %d: emitting plans for %d tests", cycle, schedule.size)
    plans = emit_test_plans(schedule, prioritized, active_agents, cycle)
    logger.info("cycle %d: executing %d plans", cycle, len(plans))
    results = [execute_plan(plan, cfg.outcome_model) for plan in plans]
    collect_results(results, state.history)
    report = make_cycle_report(cycle, schedule, prioritized, active_agents, results, wall_ms)
    logger.info(
        "cycle %d: utilization %.4f, %d executed, %d failed",
        cycle,
        report.overall_utilization,
        report.executed_count,
        report.fail_count,
    )
    return _CycleArtifacts(report, tuple(plans), tuple(results), schedule, stats)


def run_simulation(
    config: SimulationConfig,
    tests: Sequence[TestCase],
    agents: Sequence[TestAgent],
    history: HistoryStore | None = None,
) -> list[CycleReport]:
    """Run config.cycles cycles, persisting artifacts as they are produced.

    With an out_dir set, each cycle writes its plans, results, and report
    under cycle_<n>/ and appends to history.jsonl before the next cycle
    starts, so partial runs are inspectable and a failed cycle leaves the
    persisted history exactly as it was. Solver timings go to a separate
    timings.jsonl: they vary run to run, while everything else is
    byte-stable for fixed seeds.
    """
    state = SimulationState(
        tests=list(tests),
        agents=list(agents),
        history=history if history is not None else HistoryStore(),
        config=config,
    )
    out = Path(config.out_dir) if config.out_dir else None
    history_path = None
    timings_path = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        history_path = out / "history.jsonl"
        timings_path = out / "timings.jsonl"
        history_path.write_text("", encoding="utf-8")
        timings_path.write_text("", encoding="utf-8")
        # Replay pre-existing history so the output log stands alone.
        by_cycle: dict[int, list] = {}
        for record in state.history.records:
            by_cycle.setdefault(record.cycle, []).append(record)
        for cycle in range(state.history.current_cycle):
            append_history(history_path, by_cycle.get(cycle, []), cycle)

    reports: list[CycleReport] = []
    for _ in range(config.cycles):
        cycle = state.history.current_cycle
        try:
            artifacts = _run_cycle(state)
        except Exception as exc:
            raise CycleError(cycle, exc) from exc
        reports.append(artifacts.report)
        if out is not None:
            for plan in artifacts.plans:
                save_plan(plan, plan_path(out, cycle, plan.agent_id))
            for result in artifacts.results:
                save_result(result, result_path(out, cycle, result.agent_id))
            save_report(artifacts.report, out / f"cycle_{cycle}" / "report.json")
            records = []
            for result in sorted(artifacts.results, key=lambda r: r.agent_id):
                records.extend(result.records)
            append_history(history_path, records, cycle)
            timing = {
                "cycle": cycle,
                "solver_wall_time_ms": artifacts.report.solver_wall_time_ms,
                "nodes": artifacts.stats.nodes if artifacts.stats else 0,
                "completed": artifacts.stats.completed if artifacts.stats else True,
                "backend": artifacts.stats.backend if artifacts.stats else None,
            }
            with open(timings_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(timing, sort_keys=True) + "\n")
    return reports
