"""Branch-and-bound search kernel with numba and pure-Python backends.

The kernel is one function over int64 arrays. When numba is importable and
CISCHED_NO_NUMBA is unset, an njit-compiled copy is built; the plain
function stays available as the fallback. Both backends execute the same
bytecode-level logic over integers, so they visit nodes in the same order
and produce identical incumbents for a given node budget.
"""

from __future__ import annotations

import os

import numpy as np

# Node throughput used to convert a wall-clock budget into a deterministic
# node budget. Calibrated with benchmarks/bench_backends.py; the exact value
# only shifts how much of the tree an anytime run explores.
DEFAULT_NODES_PER_MS = {"numba": 14000, "python": 70}


def _search_chunk(
    n,
    m,
    dur,  # int64[n] duration units
    prio,  # int64[n] priority units
    stale,  # int64[n, m] pair staleness units
    oblig,  # int64[n] 1 if the test must be assigned
    child_agents,  # int64[n, >=1] agent columns per test, stalest first
    child_counts,  # int64[n]
    dens_order,  # int64[n] test indices by exact descending priority density
    suffix_stale,  # int64[n+1] sum of per-test max staleness over tests >= d
    suffix_dur,  # int64[n+1]
    suffix_oblig_dur,  # int64[n+1]
    rank_to_idx,  # int64[n] test index holding each sorted-id rank
    agent_rank,  # int64[m] rank of each agent column in sorted-id order
    pos,  # int64[n+1] next child index per depth (0 = fresh entry)
    assign,  # int64[n] current partial assignment, -1 = unassigned
    residual,  # int64[m] remaining budget per agent
    acc,  # int64[3] accumulated (priority, staleness, time)
    ctl,  # int64[1] current depth
    inc_assign,  # int64[n] incumbent assignment
    inc_acc,  # int64[3] incumbent objective
    node_budget,  # max nodes to expand in this call
):
    """Resume depth-first search for up to node_budget nodes.

    Returns (done, nodes_used). All traversal state lives in the argument
    arrays, so a call picks up exactly where the previous one stopped.
    """
    nodes = 0
    done = 0
    while nodes < node_budget:
        d = ctl[0]

        if d == n:
            # Leaf: full assignment. Replace the incumbent if strictly
            # better, or equal with a smaller sorted (test, agent) pair key.
            nodes += 1
            better = False
            if acc[0] != inc_acc[0]:
                better = acc[0] > inc_acc[0]
            elif acc[1] != inc_acc[1]:
                better = acc[1] > inc_acc[1]
            elif acc[2] != inc_acc[2]:
                better = acc[2] > inc_acc[2]
            else:
                # Lexicographic compare of sorted (test_rank, agent_rank)
                # pair lists; a strict prefix sorts before its extension.
                ra = 0
                rb = 0
                decided = False
                while not decided:
                    while ra < n and assign[rank_to_idx[ra]] < 0:
                        ra += 1
                    while rb < n and inc_assign[rank_to_idx[rb]] < 0:
                        rb += 1
                    if ra == n and rb == n:
                        decided = True
                    elif ra == n:
                        better = True
                        decided = True
                    elif rb == n:
                        decided = True
                    elif ra != rb:
                        better = ra < rb
                        decided = True
                    else:
                        ja = assign[rank_to_idx[ra]]
                        jb = inc_assign[rank_to_idx[rb]]
                        if agent_rank[ja] != agent_rank[jb]:
                            better = agent_rank[ja] < agent_rank[jb]
                            decided = True
                        else:
                            ra += 1
                            rb += 1
            if better:
                for i in range(n):
                    inc_assign[i] = assign[i]
                inc_acc[0] = acc[0]
                inc_acc[1] = acc[1]
                inc_acc[2] = acc[2]
            if n == 0:
                done = 1
                break
            # Backtrack from the leaf.
            d = n - 1
            ctl[0] = d
            c = pos[d] - 1
            if c < child_counts[d]:
                j = child_agents[d, c]
                residual[j] += dur[d]
                acc[0] -= prio[d]
                acc[1] -= stale[d, j]
                acc[2] -= dur[d]
                assign[d] = -1
            continue

        if pos[d] == 0:
            # Fresh node: bound the subtree against the incumbent. Each
            # bound component is independently optimistic, so componentwise
            # domination makes the lexicographic comparison safe; pruning
            # only on a strictly smaller bound keeps every potential
            # tie-break winner reachable.
            nodes += 1
            pool = 0
            for j in range(m):
                pool += residual[j]
            prune = False
            if suffix_oblig_dur[d] > pool:
                # Remaining obligatory tests cannot fit even when capacity
                # is pooled: no feasible leaf below this node.
                prune = True
            else:
                p_bound = acc[0]
                rem = pool
                for k in range(n):
                    i = dens_order[k]
                    if i < d:
                        continue
                    if dur[i] <= rem:
                        p_bound += prio[i]
                        rem -= dur[i]
                    else:
                        # Whole break item: at least the fractional
                        # relaxation, which bounds the 0/1 optimum.
                        p_bound += prio[i]
                        break
                d_bound = acc[1] + suffix_stale[d]
                t_extra = suffix_dur[d]
                if pool < t_extra:
                    t_extra = pool
                t_bound = acc[2] + t_extra
                if p_bound != inc_acc[0]:
                    prune = p_bound < inc_acc[0]
                elif d_bound != inc_acc[1]:
                    prune = d_bound < inc_acc[1]
                else:
                    prune = t_bound < inc_acc[2]
            if prune:
                if d == 0:
                    done = 1
                    break
                d -= 1
                ctl[0] = d
                c = pos[d] - 1
                if c < child_counts[d]:
                    j = child_agents[d, c]
                    residual[j] += dur[d]
                    acc[0] -= prio[d]
                    acc[1] -= stale[d, j]
                    acc[2] -= dur[d]
                    assign[d] = -1
                continue

        # Advance to the next viable child at this depth: compatible agents
        # with room, stalest first, then (for non-obligatory tests) skip.
        total = child_counts[d]
        if oblig[d] == 0:
            total += 1
        c = pos[d]
        advanced = False
        while c < total:
            if c < child_counts[d]:
                j = child_agents[d, c]
                if dur[d] <= residual[j]:
                    assign[d] = j
                    residual[j] -= dur[d]
                    acc[0] += prio[d]
                    acc[1] += stale[d, j]
                    acc[2] += dur[d]
                    pos[d] = c + 1
                    ctl[0] = d + 1
                    pos[d + 1] = 0
                    advanced = True
                    break
                c += 1
            else:
                pos[d] = c + 1
                ctl[0] = d + 1
                pos[d + 1] = 0
                advanced = True
                break
        if not advanced:
            if d == 0:
                done = 1
                break
            d -= 1
            ctl[0] = d
            c = pos[d] - 1
            if c < child_counts[d]:
                j = child_agents[d, c]
                residual[j] += dur[d]
                acc[0] -= prio[d]
                acc[1] -= stale[d, j]
                acc[2] -= dur[d]
                assign[d] = -1
    return done, nodes


NUMBA_DISABLED = bool(os.environ.get("CISCHED_NO_NUMBA"))
_numba_kernel = None
if not NUMBA_DISABLED:
    try:
        import numba

        _numba_kernel = numba.njit(cache=True)(_search_chunk)
    except ImportError:
        _numba_kernel = None

NUMBA_AVAILABLE = _numba_kernel is not None


def resolve_backend(backend: str = "auto") -> str:
    """Map a backend request to the concrete backend to run."""
    if backend == "auto":
        return "numba" if NUMBA_AVAILABLE else "python"
    if backend == "python":
        return "python"
    if backend == "numba":
        if not NUMBA_AVAILABLE:
            reason = "disabled by CISCHED_NO_NUMBA" if NUMBA_DISABLED else "numba is not importable"
            raise RuntimeError(f"numba backend unavailable: {reason}")
        return "numba"
    raise ValueError(f"unknown backend {backend!r}; expected auto, numba, or python")


def get_kernel(backend: str):
    resolved = resolve_backend(backend)
    if resolved == "numba":
        return _numba_kernel
    return _search_chunk


def warmup(backend: str = "auto") -> str:
    """Trigger JIT compilation on a tiny instance; returns the backend used."""
    resolved = resolve_backend(backend)
    kernel = get_kernel(resolved)
    n, m = 2, 1
    kernel(
        n,
        m,
        np.array([1, 1], dtype=np.int64),
        np.array([2, 1], dtype=np.int64),
        np.array([[1], [1]], dtype=np.int64),
        np.array([0, 0], dtype=np.int64),
        np.array([[0], [0]], dtype=np.int64),
        np.array([1, 1], dtype=np.int64),
        np.array([0, 1], dtype=np.int64),
        np.array([2, 1, 0], dtype=np.int64),
        np.array([2, 1, 0], dtype=np.int64),
        np.array([0, 0, 0], dtype=np.int64),
        np.array([0, 1], dtype=np.int64),
        np.array([0], dtype=np.int64),
        np.zeros(3, dtype=np.int64),
        np.full(2, -1, dtype=np.int64),
        np.array([2], dtype=np.int64),
        np.zeros(3, dtype=np.int64),
        np.zeros(1, dtype=np.int64),
        np.full(2, -1, dtype=np.int64),
        np.zeros(3, dtype=np.int64),
        np.int64(10_000),
    )
    return resolved
