"""Anytime branch-and-bound solver for the cycle scheduling problem."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from cisched.kernels import DEFAULT_NODES_PER_MS, get_kernel, resolve_backend
from cisched.scheduling import (
    PackedInstance,
    Schedule,
    SchedulingInstance,
    check_schedule,
    ensure_obligatory_coverage,
    greedy_assignment,
)

# Nominal nodes per kernel call, expressed in milliseconds of calibrated
# throughput; small enough to keep the wall-clock check responsive.
CHUNK_MS = 10
# The wall-clock deadline is a safety net against a badly calibrated node
# budget, generous so ordinary runs are bounded by the node budget alone
# and stay deterministic.
WALL_SAFETY_FACTOR = 10


@dataclass(frozen=True)
class SolveStats:
    """How a solve went: effort spent and whether the search finished."""

    nodes: int
    completed: bool
    wall_ms: float
    backend: str
    node_budget: int


def schedule_optimal(instance: SchedulingInstance) -> Schedule:
    """Best schedule by (total priority, diversity, used time), maximized.

    Obligatory tests are always placed; InfeasibleError names the ones that
    cannot be. Within the configured effort budget the search is exhaustive,
    so ties are broken toward the smallest sorted (test id, agent id) pair
    list; past the budget the best schedule found so far is returned.
    """
    schedule, _ = solve_detailed(instance)
    return schedule


def solve_detailed(
    instance: SchedulingInstance,
    backend: str = "auto",
    nodes_per_ms: int | None = None,
    node_budget: int | None = None,
) -> tuple[Schedule, SolveStats]:
    """schedule_optimal plus solve statistics and backend control.

    The effort limit is a node budget: either explicit, or the instance's
    time budget times the backend's calibrated node throughput. Node budgets
    make reruns bit-identical; wall time only backstops miscalibration.
    """
    packed = PackedInstance(instance)
    resolved = resolve_backend(backend)
    if node_budget is None:
        per_ms = DEFAULT_NODES_PER_MS[resolved] if nodes_per_ms is None else nodes_per_ms
        if per_ms < 1:
            raise ValueError("nodes_per_ms must be >= 1")
        node_budget = instance.solver_time_budget_ms * per_ms
    if node_budget < 1:
        raise ValueError("node_budget must be >= 1")

    start = time.perf_counter()
    seed = greedy_assignment(packed)
    missing = any(
        packed.oblig[i] and seed[i] < 0 for i in range(packed.n)
    )
    if missing:
        # Greedy can starve obligatory tests; reseed from an exact placement
        # of just those, then fill the rest greedily.
        base = ensure_obligatory_coverage(packed)
        seed = greedy_assignment(packed, initial_assign=base)

    if packed.n == 0 or packed.m == 0:
        schedule = packed.assignment_to_schedule(seed)
        check_schedule(schedule, instance)
        wall_ms = (time.perf_counter() - start) * 1000.0
        return schedule, SolveStats(0, True, wall_ms, resolved, node_budget)

    n, m = packed.n, packed.m
    pos = np.zeros(n + 1, dtype=np.int64)
    assign = np.full(n, -1, dtype=np.int64)
    residual = packed.budget_us.copy()
    acc = np.zeros(3, dtype=np.int64)
    ctl = np.zeros(1, dtype=np.int64)
    inc_assign = seed.copy()
    inc_acc = np.array(packed.objective_units(seed), dtype=np.int64)

    kernel = get_kernel(resolved)
    per_ms_nominal = DEFAULT_NODES_PER_MS[resolved] if nodes_per_ms is None else nodes_per_ms
    chunk = max(int(per_ms_nominal) * CHUNK_MS, 1)
    deadline = start + instance.solver_time_budget_ms * WALL_SAFETY_FACTOR / 1000.0

    used = 0
    done = 0
    while used < node_budget:
        step = min(chunk, node_budget - used)
        done, nodes = kernel(
            n,
            m,
            packed.dur_us,
            packed.prio_u,
            packed.stale_u,
            packed.oblig,
            packed.child_agents,
            packed.child_counts,
            packed.dens_order,
            packed.suffix_stale,
            packed.suffix_dur,
            packed.suffix_oblig_dur,
            packed.rank_to_idx,
            packed.agent_rank,
            pos,
            assign,
            residual,
            acc,
            ctl,
            inc_assign,
            inc_acc,
            np.int64(step),
        )
        used += int(nodes)
        if done:
            break
        if time.perf_counter() > deadline:
            break

    schedule = packed.assignment_to_schedule(inc_assign)
    check_schedule(schedule, instance)
    for i in range(n):
        if packed.oblig[i] and inc_assign[i] < 0:
            raise RuntimeError("internal error: obligatory test left unassigned")
    wall_ms = (time.perf_counter() - start) * 1000.0
    return schedule, SolveStats(used, bool(done), wall_ms, resolved, node_budget)
