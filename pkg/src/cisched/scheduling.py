"""Scheduling types, exact objective arithmetic, and the greedy first-fill baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Mapping, Sequence

import numpy as np

from cisched.domain import TestAgent
from cisched.priority import PrioritizedTest

# Objective sums are compared exactly across greedy, branch-and-bound, and the
# exhaustive oracle. Using integer units (priority in 1e-9 steps, time in
# microseconds, pair staleness in 1/cap steps) makes those sums independent of
# accumulation order, so equal schedules compare equal bit-for-bit.
PRIORITY_UNIT = 10**9
TIME_UNIT = 10**6


def quantize_priority(priority: float) -> int:
    return int(round(priority * PRIORITY_UNIT))


def quantize_seconds(seconds: float) -> int:
    return int(round(seconds * TIME_UNIT))


class InfeasibleError(Exception):
    """Some obligatory tests cannot be placed on any compatible agent within budgets."""

    def __init__(self, test_ids: Sequence[str]) -> None:
        ids = tuple(sorted(test_ids))
        super().__init__(f"obligatory tests cannot be scheduled: {', '.join(ids)}")
        self.test_ids = ids


@dataclass(frozen=True, order=True)
class ObjectiveVector:
    """Schedule quality, compared lexicographically.

    Total assigned priority dominates, then assignment diversity (sum of
    pair staleness), then used time. All three fields derive from exact
    integer sums, so vectors produced by different algorithms for the same
    assignment compare equal.
    """

    total_priority: float
    diversity: float
    used_time: float

    @classmethod
    def from_units(cls, priority_units: int, staleness_units: int, time_us: int, staleness_cap: int) -> ObjectiveVector:
        return cls(
            total_priority=priority_units / PRIORITY_UNIT,
            diversity=staleness_units / staleness_cap,
            used_time=time_us / TIME_UNIT,
        )


def pair_staleness(
    test_id: str,
    agent_id: str,
    pair_last_cycle: Mapping[tuple[str, str], int],
    current_cycle: int,
    cap: int = 8,
) -> float:
    """Normalized cycles since the pair last ran together; 1.0 if it never did."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    return pair_staleness_units(test_id, agent_id, pair_last_cycle, current_cycle, cap) / cap


def pair_staleness_units(
    test_id: str,
    agent_id: str,
    pair_last_cycle: Mapping[tuple[str, str], int],
    current_cycle: int,
    cap: int,
) -> int:
    last = pair_last_cycle.get((test_id, agent_id))
    if last is None:
        return cap
    return min(max(current_cycle - last, 0), cap)


@dataclass(frozen=True)
class SchedulingInstance:
    """One cycle's scheduling input.

    ``prioritized`` must already be sorted by descending priority with test
    id as tie-break (the order :func:`cisched.priority.prioritize_all`
    produces). ``pair_last_cycle`` keys must refer to ids present in the
    instance; build instances through :func:`build_instance` to get the
    filtering for free.
    """

    prioritized: tuple[PrioritizedTest, ...]
    agents: tuple[TestAgent, ...]
    pair_last_cycle: Mapping[tuple[str, str], int]
    current_cycle: int
    solver_time_budget_ms: int = 2000
    staleness_cap: int = 8
    diversity: bool = True

    def __post_init__(self) -> None:
        if self.solver_time_budget_ms <= 0:
            raise ValueError("solver_time_budget_ms must be > 0")
        if self.staleness_cap < 1:
            raise ValueError("staleness_cap must be >= 1")
        test_ids = {p.test.id for p in self.prioritized}
        if len(test_ids) != len(self.prioritized):
            raise ValueError("duplicate test ids in prioritized list")
        agent_ids = {a.id for a in self.agents}
        if len(agent_ids) != len(self.agents):
            raise ValueError("duplicate agent ids")
        for t_id, a_id in self.pair_last_cycle:
            if t_id not in test_ids or a_id not in agent_ids:
                raise ValueError(f"pair_last_cycle key ({t_id!r}, {a_id!r}) refers to unknown ids")
        prev = None
        for p in self.prioritized:
            key = (-p.priority, p.test.id)
            if prev is not None and key < prev:
                raise ValueError("prioritized list is not sorted by descending priority")
            prev = key


def build_instance(
    prioritized: Sequence[PrioritizedTest],
    agents: Sequence[TestAgent],
    pair_last_cycle: Mapping[tuple[str, str], int],
    current_cycle: int,
    solver_time_budget_ms: int = 2000,
    staleness_cap: int = 8,
    diversity: bool = True,
) -> SchedulingInstance:
    """Assemble an instance, dropping pair history for ids not in this cycle."""
    test_ids = {p.test.id for p in prioritized}
    agent_ids = {a.id for a in agents}
    pairs = {
        k: v for k, v in pair_last_cycle.items() if k[0] in test_ids and k[1] in agent_ids
    }
    return SchedulingInstance(
        prioritized=tuple(prioritized),
        agents=tuple(agents),
        pair_last_cycle=pairs,
        current_cycle=current_cycle,
        solver_time_budget_ms=solver_time_budget_ms,
        staleness_cap=staleness_cap,
        diversity=diversity,
    )


@dataclass(frozen=True)
class Schedule:
    """Per-cycle assignment of tests to agents.

    ``assignments`` maps every instance agent to its test ids, ordered by
    descending priority. Each test appears at most once across all agents.
    """

    assignments: dict[str, tuple[str, ...]]
    objective: ObjectiveVector

    def assigned_pairs(self) -> list[tuple[str, str]]:
        return [(t, a) for a, tests in self.assignments.items() for t in tests]

    def assigned_tests(self) -> set[str]:
        return {t for tests in self.assignments.values() for t in tests}

    @property
    def size(self) -> int:
        return sum(len(tests) for tests in self.assignments.values())


class PackedInstance:
    """Integer-array form of a SchedulingInstance shared by all schedulers.

    Tests keep the prioritized order (index == search depth), agents keep
    the instance order (index == column). Ranks are positions in the sorted
    id order and drive the deterministic tie-break on assignment pairs.
    """

    def __init__(self, instance: SchedulingInstance) -> None:
        self.instance = instance
        tests = [p.test for p in instance.prioritized]
        agents = instance.agents
        n, m = len(tests), len(agents)
        self.n = n
        self.m = m
        self.test_ids = [t.id for t in tests]
        self.agent_ids = [a.id for a in agents]

        self.dur_us = np.array([quantize_seconds(t.avg_duration) for t in tests], dtype=np.int64)
        self.prio_u = np.array(
            [quantize_priority(p.priority) for p in instance.prioritized], dtype=np.int64
        )
        self.oblig = np.array([1 if t.obligatory else 0 for t in tests], dtype=np.int64)
        self.budget_us = np.array([quantize_seconds(a.budget) for a in agents], dtype=np.int64)

        agent_col = {a.id: j for j, a in enumerate(agents)}
        self.compat = np.zeros((n, m), dtype=np.uint8)
        for i, t in enumerate(tests):
            for a_id in t.compatible_agents:
                j = agent_col.get(a_id)
                if j is not None:
                    self.compat[i, j] = 1

        cap = instance.staleness_cap
        self.stale_u = np.zeros((n, m), dtype=np.int64)
        if instance.diversity:
            for i, t in enumerate(tests):
                for j, a in enumerate(agents):
                    if self.compat[i, j]:
                        self.stale_u[i, j] = pair_staleness_units(
                            t.id, a.id, instance.pair_last_cycle, instance.current_cycle, cap
                        )

        # Ranks in sorted-id order; integer pair comparisons then mirror the
        # lexicographic order on (test_id, agent_id) string pairs.
        test_rank = {t_id: r for r, t_id in enumerate(sorted(self.test_ids))}
        self.rank_to_idx = np.empty(n, dtype=np.int64)
        for i, t_id in enumerate(self.test_ids):
            self.rank_to_idx[test_rank[t_id]] = i
        agent_rank = {a_id: r for r, a_id in enumerate(sorted(self.agent_ids))}
        self.agent_rank = np.array([agent_rank[a.id] for a in agents], dtype=np.int64)

        # Children per test: compatible agents ordered stalest-first so the
        # search meets diverse assignments early; skip is implicit last.
        self.child_agents = np.full((n, max(m, 1)), -1, dtype=np.int64)
        self.child_counts = np.zeros(n, dtype=np.int64)
        for i in range(n):
            cols = [j for j in range(m) if self.compat[i, j]]
            cols.sort(key=lambda j: (-self.stale_u[i, j], self.agent_rank[j]))
            self.child_counts[i] = len(cols)
            for k, j in enumerate(cols):
                self.child_agents[i, k] = j

        # Exact density order for the fractional-relaxation bound: priority
        # per unit time, compared with bigint cross-multiplication so float
        # rounding can never reorder it.
        def denser(i: int, j: int) -> int:
            lhs = int(self.prio_u[i]) * int(self.dur_us[j])
            rhs = int(self.prio_u[j]) * int(self.dur_us[i])
            if lhs != rhs:
                return -1 if lhs > rhs else 1
            return -1 if i < j else 1

        self.dens_order = np.array(
            sorted(range(n), key=cmp_to_key(denser)), dtype=np.int64
        )

        max_stale = self.stale_u.max(axis=1) if m and n else np.zeros(n, dtype=np.int64)
        self.suffix_stale = np.zeros(n + 1, dtype=np.int64)
        self.suffix_dur = np.zeros(n + 1, dtype=np.int64)
        self.suffix_oblig_dur = np.zeros(n + 1, dtype=np.int64)
        for i in range(n - 1, -1, -1):
            self.suffix_stale[i] = self.suffix_stale[i + 1] + max_stale[i]
            self.suffix_dur[i] = self.suffix_dur[i + 1] + self.dur_us[i]
            self.suffix_oblig_dur[i] = self.suffix_oblig_dur[i + 1] + (
                self.dur_us[i] if self.oblig[i] else 0
            )

    def objective_units(self, assign: np.ndarray) -> tuple[int, int, int]:
        """Exact objective sums for an assignment array (test index -> column or -1)."""
        prio = stale = time = 0
        for i in range(self.n):
            j = assign[i]
            if j >= 0:
                prio += int(self.prio_u[i])
                stale += int(self.stale_u[i, j])
                time += int(self.dur_us[i])
        return prio, stale, time

    def assignment_to_schedule(self, assign: np.ndarray) -> Schedule:
        assignments: dict[str, list[str]] = {a_id: [] for a_id in self.agent_ids}
        for i in range(self.n):
            j = assign[i]
            if j >= 0:
                assignments[self.agent_ids[j]].append(self.test_ids[i])
        units = self.objective_units(assign)
        return Schedule(
            assignments={a_id: tuple(tests) for a_id, tests in assignments.items()},
            objective=ObjectiveVector.from_units(*units, self.instance.staleness_cap),
        )

    def pair_key(self, assign: np.ndarray) -> tuple[tuple[int, int], ...]:
        """Sorted (test_rank, agent_rank) pairs; the deterministic tie-break key."""
        pairs = []
        for r in range(self.n):
            i = self.rank_to_idx[r]
            j = assign[i]
            if j >= 0:
                pairs.append((r, int(self.agent_rank[j])))
        return tuple(pairs)


def check_schedule(schedule: Schedule, instance: SchedulingInstance) -> None:
    """Raise if a schedule violates budget, compatibility, or uniqueness invariants."""
    tests_by_id = {p.test.id: p.test for p in instance.prioritized}
    budgets = {a.id: quantize_seconds(a.budget) for a in instance.agents}
    seen: set[str] = set()
    for agent_id, test_ids in schedule.assignments.items():
        if agent_id not in budgets:
            raise ValueError(f"schedule references unknown agent {agent_id!r}")
        used = 0
        for t_id in test_ids:
            if t_id in seen:
                raise ValueError(f"test {t_id!r} assigned more than once")
            seen.add(t_id)
            test = tests_by_id.get(t_id)
            if test is None:
                raise ValueError(f"schedule references unknown test {t_id!r}")
            if agent_id not in test.compatible_agents:
                raise ValueError(f"test {t_id!r} is not compatible with agent {agent_id!r}")
            used += quantize_seconds(test.avg_duration)
        if used > budgets[agent_id]:
            raise ValueError(f"agent {agent_id!r} over budget: {used} > {budgets[agent_id]}")


def schedule_greedy(instance: SchedulingInstance) -> Schedule:
    """First-fill baseline: per agent, assign the highest-priority tests that still fit.

    Agents are visited in instance order; obligatory tests get no special
    treatment. This is the seed and the lexicographic lower bound for the
    optimizing solver.
    """
    packed = PackedInstance(instance)
    assign = greedy_assignment(packed)
    schedule = packed.assignment_to_schedule(assign)
    check_schedule(schedule, instance)
    return schedule


def pack_obligatory(packed: PackedInstance) -> np.ndarray | None:
    """Find any placement of all obligatory tests, or None if impossible.

    Exact depth-first search, most-constrained test first, roomiest agent
    first, pruning on pooled remaining capacity. Obligatory tests are few,
    so the exact search is affordable.
    """
    n, m = packed.n, packed.m
    assign = np.full(n, -1, dtype=np.int64)
    oblig_idx = [i for i in range(n) if packed.oblig[i]]
    if not oblig_idx:
        return assign
    order = sorted(
        oblig_idx,
        key=lambda i: (int(packed.compat[i].sum()), -int(packed.dur_us[i]), i),
    )
    dur = [int(d) for d in packed.dur_us]
    residual = [int(b) for b in packed.budget_us]
    suffix = [0] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + dur[order[k]]

    def place(k: int) -> bool:
        if k == len(order):
            return True
        if suffix[k] > sum(residual):
            return False
        i = order[k]
        cols = [j for j in range(m) if packed.compat[i, j] and dur[i] <= residual[j]]
        cols.sort(key=lambda j: (-residual[j], j))
        for j in cols:
            assign[i] = j
            residual[j] -= dur[i]
            if place(k + 1):
                return True
            residual[j] += dur[i]
            assign[i] = -1
        return False

    return assign if place(0) else None


def ensure_obligatory_coverage(packed: PackedInstance) -> np.ndarray:
    """Assignment placing every obligatory test, or InfeasibleError.

    Tests that fit no compatible agent even alone are reported by id; if
    each fits alone but no joint placement exists, all obligatory ids are
    reported, since the conflict has no single culprit.
    """
    oblig_ids = [packed.test_ids[i] for i in range(packed.n) if packed.oblig[i]]
    unplaceable = []
    for i in range(packed.n):
        if not packed.oblig[i]:
            continue
        fits = any(
            packed.compat[i, j] and packed.dur_us[i] <= packed.budget_us[j]
            for j in range(packed.m)
        )
        if not fits:
            unplaceable.append(packed.test_ids[i])
    if unplaceable:
        raise InfeasibleError(unplaceable)
    packing = pack_obligatory(packed)
    if packing is None:
        raise InfeasibleError(oblig_ids)
    return packing


def greedy_assignment(
    packed: PackedInstance,
    initial_assign: np.ndarray | None = None,
) -> np.ndarray:
    """First-fill on packed arrays, optionally completing a partial assignment."""
    n, m = packed.n, packed.m
    assign = np.full(n, -1, dtype=np.int64) if initial_assign is None else initial_assign.copy()
    residual = packed.budget_us.copy()
    for i in range(n):
        j = assign[i]
        if j >= 0:
            residual[j] -= packed.dur_us[i]
    for j in range(m):
        for i in range(n):
            if assign[i] < 0 and packed.compat[i, j] and packed.dur_us[i] <= residual[j]:
                assign[i] = j
                residual[j] -= packed.dur_us[i]
    return assign
