"""Size-constrained maximum-weight independent set solvers.

Three routes to a schedule:

* :func:`exact_mwis` -- branch-and-bound over PZ slots, exact.
* :func:`greedy_mwis` -- repeatedly take the heaviest remaining vertex and drop
  its neighbours; fast, returns a maximal (not maximum) independent set.
* :func:`brute_force_oracle` -- enumerates every user-to-PZ assignment and
  filters with :func:`~mcsched.conflict.validate_schedule`. It never looks at
  the conflict graph, which makes it an independent check of the other two.

Ties between equal-weight sets are always broken towards the lexicographically
smallest sorted tuple of associations. Set weights are summed with
:func:`math.fsum`, so a set's weight does not depend on summation order.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from .conflict import Association, ConflictGraph, Regime, Schedule, validate_schedule
from .errors import InfeasibleError, UsageError
from .network import UtilityTensor


@dataclass(frozen=True)
class SolverStats:
    nodes: int = 0
    pruned: int = 0
    wall_ms: float = 0.0


@dataclass(frozen=True)
class MWISResult:
    schedule: Schedule
    weight: float
    stats: SolverStats
    deficit: int = 0
    """Slots left unfilled (greedy only)."""
    candidates: int | None = None
    """Number of feasible schedules enumerated (oracle only)."""
    ties: int | None = None
    """Number of feasible schedules attaining the optimum (oracle only)."""


def _better(total: float, key: tuple, best_total: float, best_key: tuple | None) -> bool:
    return total > best_total or (total == best_total and best_key is not None and key < best_key)


class _SlotSearch:
    """Depth-first branch-and-bound choosing at most one vertex per slot.

    ``groups`` holds the candidate vertex indices of each slot, heaviest first.
    Every group must be a clique (all graphs built here share the same-PZ rule),
    so an independent set takes at most one vertex from each.
    """

    def __init__(self, weights: tuple[float, ...], rows: tuple[int, ...], groups: list[list[int]]):
        self.w = weights
        self.rows = rows
        self.groups = groups
        self.best_total = -math.inf
        self.best_key: tuple[int, ...] | None = None
        self.nodes = 0
        self.pruned = 0

    def run(self, slots: list[int], need: int) -> tuple[int, ...] | None:
        self._seed(slots, need)
        self._dfs(slots, 0, [], 0.0, need)
        return self.best_key

    def _seed(self, slots: list[int], need: int) -> None:
        # greedy incumbent: makes the bound bite from the first branch
        cands = sorted((v for s in slots for v in self.groups[s]), key=lambda v: (-self.w[v], v))
        forbidden, chosen = 0, []
        for v in cands:
            if not forbidden >> v & 1:
                chosen.append(v)
                forbidden |= self.rows[v] | (1 << v)
                if len(chosen) == need:
                    break
        if len(chosen) == need:
            self._leaf(chosen)

    def _leaf(self, chosen: list[int]) -> None:
        total = math.fsum(self.w[v] for v in chosen)
        key = tuple(sorted(chosen))
        if self.best_key is None or _better(total, key, self.best_total, self.best_key):
            self.best_total, self.best_key = total, key

    def _dfs(self, slots: list[int], forbidden: int, chosen: list[int], partial: float, need: int) -> None:
        self.nodes += 1
        if need == 0:
            self._leaf(chosen)
            return
        w = self.w
        open_slots = []
        for s in slots:
            cands = [v for v in self.groups[s] if not forbidden >> v & 1]
            if cands:
                open_slots.append((s, cands))
            elif need == len(slots):
                self.pruned += 1
                return
        if len(open_slots) < need:
            self.pruned += 1
            return

        if need == len(open_slots):
            bound = partial + sum(w[c[0]] for _, c in open_slots)
            pick = min(range(len(open_slots)), key=lambda i: len(open_slots[i][1]))
            may_skip = False
        else:
            bound = partial + sum(sorted((w[c[0]] for _, c in open_slots), reverse=True)[:need])
            pick = 0
            may_skip = True
        if bound < self.best_total - 1e-9 * (1.0 + abs(self.best_total)):
            self.pruned += 1
            return

        slot, cands = open_slots[pick]
        rest = [s for i, (s, _) in enumerate(open_slots) if i != pick]
        for v in cands:
            chosen.append(v)
            self._dfs(rest, forbidden | self.rows[v], chosen, partial + w[v], need - 1)
            chosen.pop()
        if may_skip:
            self._dfs(rest, forbidden, chosen, partial, need)


def _slot_groups(g: ConflictGraph) -> list[list[int]]:
    by_slot: dict[tuple[int, int, int], list[int]] = {}
    for i, a in enumerate(g.vertices):
        by_slot.setdefault(a.slot, []).append(i)
    groups = []
    for slot in sorted(by_slot):
        members = by_slot[slot]
        mask = sum(1 << i for i in members)
        for i in members:
            if (mask & ~(1 << i)) & ~g.rows[i]:
                raise UsageError(f"vertices sharing PZ {slot} are not mutually adjacent")
        groups.append(sorted(members, key=lambda i: (-g.weights[i], i)))
    return groups


def _components(g: ConflictGraph, groups: list[list[int]]) -> list[list[int]]:
    """Partition slots into classes with no edge between different classes."""
    reach = []
    for members in groups:
        m = 0
        for i in members:
            m |= g.rows[i]
        reach.append(m)
    masks = [sum(1 << i for i in members) for members in groups]
    parent = list(range(len(groups)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in range(len(groups)):
        for t in range(s + 1, len(groups)):
            if reach[s] & masks[t]:
                parent[find(s)] = find(t)
    comps: dict[int, list[int]] = {}
    for s in range(len(groups)):
        comps.setdefault(find(s), []).append(s)
    return sorted(comps.values())


def exact_mwis(g: ConflictGraph, size: int | None = None) -> MWISResult:
    """Maximum-weight independent set of exactly ``size`` vertices.

    ``size`` defaults to the number of distinct PZ slots in ``g`` (Z_tot for a
    full graph, B*Z for a single cloud's local graph). When every slot must be
    filled, slot classes that share no edge are solved independently; the union
    of per-class optima (and of their lexicographic tie-breaks) is the global
    optimum.

    Raises :class:`InfeasibleError` if no independent set of that size exists.
    """
    start = time.perf_counter()
    if len(g) == 0:
        raise UsageError("graph has no vertices")
    groups = _slot_groups(g)
    if size is None:
        size = len(groups)
    if not 1 <= size <= len(g):
        raise UsageError(f"size must be in [1, {len(g)}], got {size}")
    if size > len(groups):
        raise InfeasibleError(f"independent sets have at most {len(groups)} vertices, {size} requested")

    if size == len(groups):
        parts = _components(g, groups)
        needs = [len(p) for p in parts]
    else:
        parts, needs = [list(range(len(groups)))], [size]

    chosen: list[int] = []
    nodes = pruned = 0
    for part, need in zip(parts, needs):
        search = _SlotSearch(g.weights, g.rows, groups)
        found = search.run(part, need)
        nodes += search.nodes
        pruned += search.pruned
        if found is None:
            raise InfeasibleError(f"no independent set of size {size} exists")
        chosen.extend(found)

    schedule = Schedule(frozenset(g.vertices[i] for i in chosen))
    stats = SolverStats(nodes, pruned, (time.perf_counter() - start) * 1e3)
    return MWISResult(schedule, g.total_weight(schedule.chosen), stats)


def greedy_mwis(g: ConflictGraph) -> MWISResult:
    """Heaviest-first maximal independent set (ties to the smallest association).

    The result may hold fewer vertices than there are slots; ``deficit``
    reports how many slots were left empty.
    """
    start = time.perf_counter()
    if len(g) == 0:
        raise UsageError("graph has no vertices")
    order = sorted(range(len(g)), key=lambda i: (-g.weights[i], i))
    alive = (1 << len(g)) - 1
    picked = []
    for v in order:
        if alive >> v & 1:
            picked.append(v)
            alive &= ~(g.rows[v] | (1 << v))
    schedule = Schedule(frozenset(g.vertices[i] for i in picked))
    stats = SolverStats(len(order), 0, (time.perf_counter() - start) * 1e3)
    return MWISResult(schedule, g.total_weight(schedule.chosen), stats,
                      deficit=len(g.slots()) - len(picked))


def brute_force_oracle(
    utilities: UtilityTensor,
    regime: Regime | str = Regime.HYBRID,
    max_cases: int = 10**7,
) -> MWISResult:
    """Best feasible schedule by enumerating one user per PZ slot.

    Every one of the U^(C*B*Z) assignments is checked with
    :func:`validate_schedule`; ``candidates`` counts the feasible ones and
    ``ties`` those reaching the optimum.
    """
    start = time.perf_counter()
    regime = Regime.parse(regime)
    dims = utilities.dims
    slots = [(c, b, z) for c in range(dims.clouds) for b in range(dims.bs_per_cloud)
             for z in range(dims.pzs_per_bs)]
    n_cases = dims.users ** len(slots)
    if n_cases > max_cases:
        raise UsageError(f"{n_cases} assignments exceed the enumeration bound {max_cases}")

    best_total, best_key = -math.inf, None
    feasible = ties = 0
    for users in itertools.product(range(dims.users), repeat=len(slots)):
        s = Schedule(frozenset(Association(c, u, b, z) for (c, b, z), u in zip(slots, users)))
        if not validate_schedule(s, dims, regime).feasible:
            continue
        feasible += 1
        total = s.total_utility(utilities)
        key = s.sorted()
        if total > best_total:
            best_total, best_key, ties = total, key, 1
        elif total == best_total:
            ties += 1
            if key < best_key:
                best_key = key
    if best_key is None:
        raise InfeasibleError(f"no feasible {regime.value} schedule for {dims}")
    stats = SolverStats(n_cases, n_cases - feasible, (time.perf_counter() - start) * 1e3)
    return MWISResult(Schedule(frozenset(best_key)), best_total, stats,
                      candidates=feasible, ties=ties)
