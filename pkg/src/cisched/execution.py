"""Test plan emission, simulated agent execution, result collection.

Agents run in-process but speak only through the serialized plan and
result formats, so the controller/agent boundary stays honest. Outcomes
are drawn from per-entry random streams, which makes results independent
of the order agents execute in.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from cisched.domain import ExecutionRecord, HistoryStore, Outcome, TestAgent
from cisched.priority import PrioritizedTest
from cisched.scheduling import Schedule

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PlanEntry:
    test_id: str
    planned_duration: float
    priority: float


@dataclass(frozen=True)
class TestPlan:
    """One agent's ordered work list for one cycle."""

    agent_id: str
    cycle: int
    entries: tuple[PlanEntry, ...]


@dataclass(frozen=True)
class AgentResult:
    """What one agent reports back after running its plan."""

    agent_id: str
    cycle: int
    records: tuple[ExecutionRecord, ...]
    log_lines: tuple[str, ...]


@dataclass(frozen=True)
class OutcomeModel:
    """Stochastic stand-in for real test execution.

    Each test fails with its configured defect probability (or the default)
    and takes its planned duration scaled by a uniform jitter factor. The
    seed pins every draw.
    """

    defect_probabilities: Mapping[str, float]
    default_probability: float = 0.05
    duration_jitter: tuple[float, float] = (0.9, 1.1)
    seed: int = 0

    def __post_init__(self) -> None:
        for test_id, p in self.defect_probabilities.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"defect probability for {test_id!r} not in [0, 1]: {p}")
        if not 0.0 <= self.default_probability <= 1.0:
            raise ValueError(f"default probability not in [0, 1]: {self.default_probability}")
        lo, hi = self.duration_jitter
        if not 0 < lo <= hi:
            raise ValueError(f"jitter interval must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def probability_for(self, test_id: str) -> float:
        return self.defect_probabilities.get(test_id, self.default_probability)


def emit_test_plans(
    schedule: Schedule,
    prioritized: Sequence[PrioritizedTest],
    agents: Sequence[TestAgent],
    cycle: int,
) -> list[TestPlan]:
    """One plan per agent with work, in agent input order.

    Entries carry the planned duration and priority from the prioritized
    list and keep the schedule's descending-priority order; flattening the
    plans reproduces the schedule's assignments exactly.
    """
    by_id = {p.test.id: p for p in prioritized}
    plans = []
    for agent in agents:
        test_ids = schedule.assignments.get(agent.id, ())
        if not test_ids:
            continue
        entries = tuple(
            PlanEntry(
                test_id=t_id,
                planned_duration=by_id[t_id].test.avg_duration,
                priority=by_id[t_id].priority,
            )
            for t_id in test_ids
        )
        plans.append(TestPlan(agent_id=agent.id, cycle=cycle, entries=entries))
    return plans


def _entry_seed(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "big")


def execute_plan(plan: TestPlan, outcome_model: OutcomeModel) -> AgentResult:
    """Run one agent's plan against the outcome model.

    Every entry gets its own random stream keyed by (seed, agent, cycle,
    test): same inputs, same result, regardless of which other plans ran
    first. The outcome draw precedes the duration draw within a stream.
    """
    records = []
    log_lines = []
    for entry in plan.entries:
        ss = np.random.SeedSequence(
            (outcome_model.seed, _entry_seed(plan.agent_id), plan.cycle, _entry_seed(entry.test_id))
        )
        rng = np.random.Generator(np.random.PCG64(ss))
        failed = rng.random() < outcome_model.probability_for(entry.test_id)
        lo, hi = outcome_model.duration_jitter
        actual = entry.planned_duration * rng.uniform(lo, hi)
        outcome = Outcome.FAIL if failed else Outcome.PASS
        records.append(
            ExecutionRecord(
                test_id=entry.test_id,
                agent_id=plan.agent_id,
                cycle=plan.cycle,
                outcome=outcome,
                actual_duration=actual,
            )
        )
        log_lines.append(
            f"{entry.test_id}: {outcome.value} in {actual:.3f}s (planned {entry.planned_duration:.3f}s)"
        )
    return AgentResult(
        agent_id=plan.agent_id,
        cycle=plan.cycle,
        records=tuple(records),
        log_lines=tuple(log_lines),
    )


def collect_results(results: Sequence[AgentResult], history: HistoryStore) -> HistoryStore:
    """Merge all agents' results for the current cycle, then advance it.

    Single-writer barrier: call once per cycle after every agent finished.
    Results are merged in agent id order so the stored record order does
    not depend on execution order.
    """
    for result in results:
        if result.cycle != history.current_cycle:
            raise ValueError(
                f"result for agent {result.agent_id!r} belongs to cycle {result.cycle}, "
                f"current cycle is {history.current_cycle}"
            )
    for result in sorted(results, key=lambda r: r.agent_id):
        for record in result.records:
            history.add_record(record)
    history.advance_cycle()
    return history


def plan_path(out_dir: str | Path, cycle: int, agent_id: str) -> Path:
    return Path(out_dir) / f"cycle_{cycle}" / f"plan_{agent_id}.json"


def result_path(out_dir: str | Path, cycle: int, agent_id: str) -> Path:
    return Path(out_dir) / f"cycle_{cycle}" / f"result_{agent_id}.json"


def plan_to_dict(plan: TestPlan) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "agent_id": plan.agent_id,
        "cycle": plan.cycle,
        "entries": [
            {
                "test_id": e.test_id,
                "planned_duration": e.planned_duration,
                "priority": e.priority,
            }
            for e in plan.entries
        ],
    }


def plan_from_dict(data: dict) -> TestPlan:
    _check_fields(data, {"format_version", "agent_id", "cycle", "entries"}, "plan")
    _check_version(data)
    entries = []
    for raw in data["entries"]:
        _check_fields(raw, {"test_id", "planned_duration", "priority"}, "plan entry")
        entries.append(
            PlanEntry(
                test_id=raw["test_id"],
                planned_duration=raw["planned_duration"],
                priority=raw["priority"],
            )
        )
    return TestPlan(agent_id=data["agent_id"], cycle=data["cycle"], entries=tuple(entries))


def result_to_dict(result: AgentResult) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "agent_id": result.agent_id,
        "cycle": result.cycle,
        "records": [
            {
                "test_id": r.test_id,
                "agent_id": r.agent_id,
                "cycle": r.cycle,
                "outcome": r.outcome.value,
                "actual_duration": r.actual_duration,
            }
            for r in result.records
        ],
        "log_lines": list(result.log_lines),
    }


def result_from_dict(data: dict) -> AgentResult:
    _check_fields(data, {"format_version", "agent_id", "cycle", "records", "log_lines"}, "result")
    _check_version(data)
    records = []
    for raw in data["records"]:
        _check_fields(
            raw, {"test_id", "agent_id", "cycle", "outcome", "actual_duration"}, "result record"
        )
        records.append(
            ExecutionRecord(
                test_id=raw["test_id"],
                agent_id=raw["agent_id"],
                cycle=raw["cycle"],
                outcome=Outcome(raw["outcome"]),
                actual_duration=raw["actual_duration"],
            )
        )
    return AgentResult(
        agent_id=data["agent_id"],
        cycle=data["cycle"],
        records=tuple(records),
        log_lines=tuple(data["log_lines"]),
    )


def save_plan(plan: TestPlan, path: str | Path) -> None:
    _write_json(plan_to_dict(plan), path)


def load_plan(path: str | Path) -> TestPlan:
    return plan_from_dict(_read_json(path))


def save_result(result: AgentResult, path: str | Path) -> None:
    _write_json(result_to_dict(result), path)


def load_result(path: str | Path) -> AgentResult:
    return result_from_dict(_read_json(path))


def _write_json(data: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _check_fields(data: dict, expected: set[str], label: str) -> None:
    unknown = set(data) - expected
    if unknown:
        raise ValueError(f"unknown {label} fields: {sorted(unknown)}")
    missing = expected - set(data)
    if missing:
        raise ValueError(f"missing {label} fields: {sorted(missing)}")


def _check_version(data: dict) -> None:
    if data["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version: {data['format_version']!r}")
