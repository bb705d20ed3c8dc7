"""Core domain model: test cases, agents, execution history, eligibility filtering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence


class Outcome(str, Enum):
    """Result of one test execution."""

    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class TestCase:
    """A schedulable unit of test work.

    ``compatible_agents`` names the agents this test may run on; ``active``
    is false while the script is under maintenance. Invariants (positive
    duration, non-empty compatibility, priority in [0, 1]) are checked by
    :func:`validate_repository`, not at construction, so that invalid input
    files can be loaded and reported on.
    """

    id: str
    avg_duration: float
    static_priority: float
    compatible_agents: frozenset[str]
    obligatory: bool = False
    active: bool = True


@dataclass(frozen=True)
class TestAgent:
    """An execution resource with a per-cycle time budget in seconds."""

    id: str
    budget: float
    capabilities: frozenset[str] = frozenset()
    active: bool = True


@dataclass(frozen=True)
class ExecutionRecord:
    """Outcome of one test execution on one agent in one cycle."""

    test_id: str
    agent_id: str
    cycle: int
    outcome: Outcome
    actual_duration: float


class ViolationKind(str, Enum):
    DUPLICATE_ID = "duplicate_id"
    EMPTY_COMPATIBILITY = "empty_compatibility"
    NON_POSITIVE_DURATION = "non_positive_duration"
    NON_POSITIVE_BUDGET = "non_positive_budget"
    PRIORITY_OUT_OF_RANGE = "priority_out_of_range"


@dataclass(frozen=True)
class Violation:
    """One invariant violation found while validating a repository."""

    kind: ViolationKind
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds_for(self, subject: str) -> set[ViolationKind]:
        return {v.kind for v in self.violations if v.subject == subject}


def validate_repository(
    tests: Sequence[TestCase], agents: Sequence[TestAgent]
) -> ValidationResult:
    """Check all type invariants and id uniqueness, returning every violation found."""
    violations: list[Violation] = []

    seen_tests: set[str] = set()
    for t in tests:
        if t.id in seen_tests:
            violations.append(
                Violation(ViolationKind.DUPLICATE_ID, t.id, f"duplicate test id {t.id!r}")
            )
        seen_tests.add(t.id)
        if not t.avg_duration > 0:
            violations.append(
                Violation(
                    ViolationKind.NON_POSITIVE_DURATION,
                    t.id,
                    f"test {t.id!r} has avg_duration {t.avg_duration}, expected > 0",
                )
            )
        if not t.compatible_agents:
            violations.append(
                Violation(
                    ViolationKind.EMPTY_COMPATIBILITY,
                    t.id,
                    f"test {t.id!r} has no compatible agents",
                )
            )
        if not 0.0 <= t.static_priority <= 1.0:
            violations.append(
                Violation(
                    ViolationKind.PRIORITY_OUT_OF_RANGE,
                    t.id,
                    f"test {t.id!r} has static_priority {t.static_priority}, expected in [0, 1]",
                )
            )

    seen_agents: set[str] = set()
    for a in agents:
        if a.id in seen_agents:
            violations.append(
                Violation(ViolationKind.DUPLICATE_ID, a.id, f"duplicate agent id {a.id!r}")
            )
        seen_agents.add(a.id)
        if not a.budget > 0:
            violations.append(
                Violation(
                    ViolationKind.NON_POSITIVE_BUDGET,
                    a.id,
                    f"agent {a.id!r} has budget {a.budget}, expected > 0",
                )
            )

    return ValidationResult(tuple(violations))


def filter_eligible(
    tests: Sequence[TestCase], agents: Sequence[TestAgent]
) -> tuple[list[TestCase], list[TestAgent]]:
    """Drop inactive entries and tests with no active compatible agent.

    Input order is preserved on both sides; the operation is idempotent.
    """
    active_agents = [a for a in agents if a.active]
    active_ids = {a.id for a in active_agents}
    eligible_tests = [
        t for t in tests if t.active and t.compatible_agents & active_ids
    ]
    return eligible_tests, active_agents


class DuplicateRecordError(Exception):
    """A (test_id, cycle) pair was recorded twice."""

    def __init__(self, test_id: str, cycle: int) -> None:
        super().__init__(f"duplicate record for test {test_id!r} in cycle {cycle}")
        self.test_id = test_id
        self.cycle = cycle


class HistoryStore:
    """Append-only store of execution records, indexed for priority queries.

    Records are ordered by non-decreasing cycle and each test appears at
    most once per cycle. Mutation is single-writer; readers may share the
    store freely between mutations.
    """

    def __init__(self, records: Iterable[ExecutionRecord] = (), current_cycle: int = 0) -> None:
        self._records: list[ExecutionRecord] = []
        self._by_test: dict[str, list[ExecutionRecord]] = {}
        self._last_exec: dict[str, int] = {}
        self._pair_last: dict[tuple[str, str], int] = {}
        self._seen: set[tuple[str, int]] = set()
        self.current_cycle = 0
        for r in records:
            # Replaying past records: allow cycles below current_cycle.
            self._append(r)
        if current_cycle < (self._records[-1].cycle if self._records else 0):
            raise ValueError("current_cycle must be >= the newest record's cycle")
        self.current_cycle = max(current_cycle, self.current_cycle)

    def _append(self, record: ExecutionRecord) -> None:
        if record.cycle < 0:
            raise ValueError(f"record cycle must be >= 0, got {record.cycle}")
        if self._records and record.cycle < self._records[-1].cycle:
            raise ValueError("records must be appended in non-decreasing cycle order")
        key = (record.test_id, record.cycle)
        if key in self._seen:
            raise DuplicateRecordError(record.test_id, record.cycle)
        self._seen.add(key)
        self._records.append(record)
        self._by_test.setdefault(record.test_id, []).append(record)
        self._last_exec[record.test_id] = record.cycle
        self._pair_last[(record.test_id, record.agent_id)] = record.cycle

    def add_record(self, record: ExecutionRecord) -> None:
        self._append(record)

    def advance_cycle(self) -> None:
        self.current_cycle += 1

    @property
    def records(self) -> tuple[ExecutionRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def records_for(self, test_id: str) -> list[ExecutionRecord]:
        return list(self._by_test.get(test_id, ()))

    def last_execution(self, test_id: str) -> int | None:
        """Cycle of the most recent execution, or None if never executed."""
        return self._last_exec.get(test_id)

    def pair_last_cycle(self) -> dict[tuple[str, str], int]:
        """Last cycle each (test, agent) pair ran, for rotation scoring."""
        return dict(self._pair_last)


def repository_to_dict(tests: Sequence[TestCase], agents: Sequence[TestAgent]) -> dict:
    return {
        "tests": [
            {
                "id": t.id,
                "avg_duration": t.avg_duration,
                "static_priority": t.static_priority,
                "compatible_agents": sorted(t.compatible_agents),
                "obligatory": t.obligatory,
                "active": t.active,
            }
            for t in tests
        ],
        "agents": [
            {
                "id": a.id,
                "budget": a.budget,
                "capabilities": sorted(a.capabilities),
                "active": a.active,
            }
            for a in agents
        ],
    }


_TEST_FIELDS = {"id", "avg_duration", "static_priority", "compatible_agents", "obligatory", "active"}
_AGENT_FIELDS = {"id", "budget", "capabilities", "active"}


def repository_from_dict(doc: Mapping) -> tuple[list[TestCase], list[TestAgent]]:
    """Parse a repository document; unknown fields are rejected."""
    unknown_top = set(doc) - {"tests", "agents"}
    if unknown_top:
        raise ValueError(f"unknown repository keys: {sorted(unknown_top)}")
    tests = []
    for entry in doc.get("tests", []):
        unknown = set(entry) - _TEST_FIELDS
        if unknown:
            raise ValueError(f"unknown test fields: {sorted(unknown)}")
        tests.append(
            TestCase(
                id=str(entry["id"]),
                avg_duration=float(entry["avg_duration"]),
                static_priority=float(entry["static_priority"]),
                compatible_agents=frozenset(str(x) for x in entry["compatible_agents"]),
                obligatory=bool(entry.get("obligatory", False)),
                active=bool(entry.get("active", True)),
            )
        )
    agents = []
    for entry in doc.get("agents", []):
        unknown = set(entry) - _AGENT_FIELDS
        if unknown:
            raise ValueError(f"unknown agent fields: {sorted(unknown)}")
        agents.append(
            TestAgent(
                id=str(entry["id"]),
                budget=float(entry["budget"]),
                capabilities=frozenset(str(x) for x in entry.get("capabilities", [])),
                active=bool(entry.get("active", True)),
            )
        )
    return tests, agents


def load_repository(path: str | Path) -> tuple[list[TestCase], list[TestAgent]]:
    with open(path, encoding="utf-8") as fh:
        return repository_from_dict(json.load(fh))


def save_repository(tests: Sequence[TestCase], agents: Sequence[TestAgent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(repository_to_dict(tests, agents), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _record_to_line(record: ExecutionRecord) -> str:
    return json.dumps(
        {
            "type": "record",
            "test_id": record.test_id,
            "agent_id": record.agent_id,
            "cycle": record.cycle,
            "outcome": record.outcome.value,
            "actual_duration": record.actual_duration,
        },
        sort_keys=True,
    )


def _record_from_obj(obj: Mapping) -> ExecutionRecord:
    return ExecutionRecord(
        test_id=str(obj["test_id"]),
        agent_id=str(obj["agent_id"]),
        cycle=int(obj["cycle"]),
        outcome=Outcome(obj["outcome"]),
        actual_duration=float(obj["actual_duration"]),
    )


def append_history(path: str | Path, records: Sequence[ExecutionRecord], completed_cycle: int) -> None:
    """Append one completed cycle (its records plus a completion marker) to a history log."""
    with open(path, "a", encoding="utf-8") as fh:
        for r in records:
            fh.write(_record_to_line(r) + "\n")
        fh.write(json.dumps({"type": "cycle", "cycle": completed_cycle}, sort_keys=True) + "\n")


def load_history(path: str | Path) -> HistoryStore:
    """Rebuild a HistoryStore from a record log.

    Trailing records not followed by their cycle marker belong to an
    interrupted cycle and are discarded, so recovery after a crash is a
    simple truncation.
    """
    store = HistoryStore()
    pending: list[ExecutionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.get("type")
            if kind == "record":
                pending.append(_record_from_obj(obj))
            elif kind == "cycle":
                cycle = int(obj["cycle"])
                if cycle != store.current_cycle:
                    raise ValueError(
                        f"history cycle marker {cycle} does not match expected {store.current_cycle}"
                    )
                for r in pending:
                    if r.cycle != cycle:
                        raise ValueError(
                            f"record for cycle {r.cycle} inside cycle {cycle} block"
                        )
                    store.add_record(r)
                store.advance_cycle()
                pending = []
            else:
                raise ValueError(f"unknown history line type: {kind!r}")
    return store
