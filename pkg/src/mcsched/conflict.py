"""Conflict graphs over (cloud, user, BS, PZ) associations and schedule validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import UsageError
from .network import Dimensions, UtilityTensor


class Regime(str, Enum):
    """Coordination level, selecting the edge rules of the conflict graph."""

    HYBRID = "hybrid"
    SIGNAL = "signal"
    SCHEDULING = "scheduling"

    @classmethod
    def parse(cls, value: "str | Regime") -> "Regime":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UsageError(f"unknown regime {value!r}; choose from {[r.value for r in cls]}") from None


class Association(NamedTuple):
    """One candidate decision: user ``u`` on PZ ``z`` of BS ``b`` in cloud ``c``."""

    c: int
    u: int
    b: int
    z: int

    @property
    def slot(self) -> tuple[int, int, int]:
        """The (cloud, BS, PZ) resource this association occupies."""
        return (self.c, self.b, self.z)


def conflicts(a: Association, v: Association, regime: Regime) -> bool:
    """Edge rule between two distinct associations under ``regime``."""
    if a == v:
        return False
    if a.slot == v.slot:  # CC2
        return True
    if a.u != v.u:
        return False
    if regime is Regime.HYBRID:
        return a.c != v.c or a.z == v.z  # CC1, CC3
    if regime is Regime.SIGNAL:
        return a.z == v.z  # CC3
    return a.c != v.c or a.b != v.b  # CC1 + one BS per user


@dataclass(frozen=True)
class Schedule:
    """A set of associations (the 0-1 decision variable in set form)."""

    chosen: frozenset[Association] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "chosen", frozenset(Association(*map(int, a)) for a in self.chosen))

    @classmethod
    def of(cls, associations: Iterable[Sequence[int]]) -> "Schedule":
        return cls(frozenset(Association(*a) for a in associations))

    def __len__(self) -> int:
        return len(self.chosen)

    def __iter__(self) -> Iterator[Association]:
        return iter(sorted(self.chosen))

    def __contains__(self, item: object) -> bool:
        return item in self.chosen

    def sorted(self) -> tuple[Association, ...]:
        return tuple(sorted(self.chosen))

    def users(self) -> frozenset[int]:
        return frozenset(a.u for a in self.chosen)

    def restricted_to_cloud(self, c: int) -> "Schedule":
        return Schedule(frozenset(a for a in self.chosen if a.c == c))

    def union(self, other: "Schedule") -> "Schedule":
        return Schedule(self.chosen | other.chosen)

    def total_utility(self, utilities: UtilityTensor) -> float:
        return math.fsum(utilities.pi[a] for a in self.chosen)

    def to_json(self) -> list[list[int]]:
        return [list(a) for a in self.sorted()]


@dataclass(frozen=True)
class Violation:
    kind: str  # one of C1, C2-duplicate, C2-missing, C3, BS-exclusivity, size
    detail: str


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.feasible

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate_schedule(s: Schedule, dims: Dimensions, regime: Regime | str = Regime.HYBRID) -> Verdict:
    """Check ``s`` against the constraint set of ``regime`` plus the size Z_tot.

    Returns a verdict listing every violated constraint; never raises for an
    infeasible schedule.
    """
    regime = Regime.parse(regime)
    for a in s.chosen:
        dims.check_index(*a)

    violations: list[Violation] = []
    by_slot: dict[tuple[int, int, int], list[int]] = {}
    clouds_of: dict[int, set[int]] = {}
    bss_of: dict[int, set[tuple[int, int]]] = {}
    pz_count: dict[tuple[int, int], int] = {}
    for a in s.chosen:
        by_slot.setdefault(a.slot, []).append(a.u)
        clouds_of.setdefault(a.u, set()).add(a.c)
        bss_of.setdefault(a.u, set()).add((a.c, a.b))
        pz_count[a.u, a.z] = pz_count.get((a.u, a.z), 0) + 1

    if regime is not Regime.SIGNAL:
        for u in sorted(clouds_of):
            if len(clouds_of[u]) > 1:
                violations.append(Violation("C1", f"user {u} served by clouds {sorted(clouds_of[u])}"))
    for slot in sorted(by_slot):
        if len(by_slot[slot]) > 1:
            violations.append(Violation("C2-duplicate", f"PZ {slot} shared by users {sorted(by_slot[slot])}"))
    for c in range(dims.clouds):
        for b in range(dims.bs_per_cloud):
            for z in range(dims.pzs_per_bs):
                if (c, b, z) not in by_slot:
                    violations.append(Violation("C2-missing", f"PZ {(c, b, z)} unallocated"))
    if regime is Regime.SCHEDULING:
        for u in sorted(bss_of):
            if len(bss_of[u]) > 1:
                violations.append(Violation("BS-exclusivity", f"user {u} served by BSs {sorted(bss_of[u])}"))
    else:
        for (u, z), n in sorted(pz_count.items()):
            if n > 1:
                violations.append(Violation("C3", f"user {u} holds PZ index {z} on {n} BSs"))
    if len(s) != dims.total_pzs:
        violations.append(Violation("size", f"{len(s)} associations, expected {dims.total_pzs}"))
    return Verdict(not violations, tuple(violations))


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    """Weighted conflict graph with dense bit-row adjacency.

    ``rows[i]`` is an int whose bit ``j`` is set iff vertices ``i`` and ``j``
    conflict. Vertices are kept in lexicographic association order, so vertex
    indices order the same way as associations.
    """

    vertices: tuple[Association, ...]
    weights: tuple[float, ...]
    rows: tuple[int, ...]
    regime: Regime
    dims: Dimensions
    index: dict[Association, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {a: i for i, a in enumerate(self.vertices)})

    def __len__(self) -> int:
        return len(self.vertices)

    def weight(self, a: Association) -> float:
        return self.weights[self.index[a]]

    def adjacent(self, a: Association, v: Association) -> bool:
        return bool(self.rows[self.index[a]] >> self.index[v] & 1)

    def neighbors(self, a: Association) -> list[Association]:
        row = self.rows[self.index[a]]
        return [v for j, v in enumerate(self.vertices) if row >> j & 1]

    def edges(self) -> Iterator[tuple[Association, Association]]:
        for i, row in enumerate(self.rows):
            for j in range(i + 1, len(self.vertices)):
                if row >> j & 1:
                    yield self.vertices[i], self.vertices[j]

    def edge_count(self) -> int:
        return sum(row.bit_count() for row in self.rows) // 2

    def slots(self) -> list[tuple[int, int, int]]:
        return sorted({a.slot for a in self.vertices})

    def indices_of(self, associations: Iterable[Association]) -> list[int]:
        try:
            return [self.index[Association(*a)] for a in associations]
        except KeyError as exc:
            raise UsageError(f"association {tuple(exc.args[0])} is not a vertex of the graph") from None

    def total_weight(self, associations: Iterable[Association]) -> float:
        return math.fsum(self.weights[i] for i in self.indices_of(associations))

    def subgraph(self, keep: Iterable[Association]) -> "ConflictGraph":
        """Induced subgraph on ``keep`` (order and weights preserved)."""
        idx = sorted(set(self.indices_of(keep)))
        remap = {old: new for new, old in enumerate(idx)}
        rows = []
        for old in idx:
            row, new_row = self.rows[old], 0
            for o, n in remap.items():
                if row >> o & 1:
                    new_row |= 1 << n
            rows.append(new_row)
        return ConflictGraph(
            vertices=tuple(self.vertices[i] for i in idx),
            weights=tuple(self.weights[i] for i in idx),
            rows=tuple(rows),
            regime=self.regime,
            dims=self.dims,
        )

    def adjacency_matrix(self) -> np.ndarray:
        n = len(self.vertices)
        m = np.zeros((n, n), dtype=bool)
        for i, row in enumerate(self.rows):
            for j in range(n):
                m[i, j] = bool(row >> j & 1)
        return m

    def to_edge_list(self) -> str:
        """Plain-text export: a JSON header line, then one ``c u b z  c' u' b' z'`` edge per line."""
        d = self.dims
        header = {"C": d.clouds, "B": d.bs_per_cloud, "Z": d.pzs_per_bs, "U": d.users,
                  "regime": self.regime.value, "vertices": len(self.vertices)}
        lines = ["# " + json.dumps(header, sort_keys=True)]
        lines += [f"{a.c} {a.u} {a.b} {a.z}  {v.c} {v.u} {v.b} {v.z}" for a, v in self.edges()]
        return "\n".join(lines) + "\n"

    def write_edge_list(self, path: str | Path) -> None:
        Path(path).write_text(self.to_edge_list())


def read_edge_list(text: str) -> tuple[dict, set[tuple[Association, Association]]]:
    """Parse :meth:`ConflictGraph.to_edge_list` output into (header, edge set)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise UsageError("edge list is missing its header line")
    header = json.loads(lines[0][2:])
    edges = set()
    for line in lines[1:]:
        if not line.strip():
            continue
        nums = [int(x) for x in line.split()]
        if len(nums) != 8:
            raise UsageError(f"malformed edge line: {line!r}")
        edges.add((Association(*nums[:4]), Association(*nums[4:])))
    return header, edges


def _pack_rows(adj: np.ndarray) -> tuple[int, ...]:
    packed = np.packbits(adj, axis=1, bitorder="little")
    return tuple(int.from_bytes(r.tobytes(), "little") for r in packed)


def build_graph(
    utilities: UtilityTensor,
    regime: Regime | str = Regime.HYBRID,
    allowed_clouds: Iterable[int] | None = None,
    allowed_users: Iterable[int] | None = None,
) -> ConflictGraph:
    """Conflict graph over ``allowed_clouds x allowed_users x B x Z``.

    Vertex weights are the association utilities. Passing a single cloud and
    that cloud's permitted users yields the local graph an agent works on.
    """
    regime = Regime.parse(regime)
    dims = utilities.dims
    clouds = sorted(set(range(dims.clouds) if allowed_clouds is None else allowed_clouds))
    users = sorted(set(range(dims.users) if allowed_users is None else allowed_users))
    if not clouds or not users:
        raise UsageError("allowed cloud and user subsets must be non-empty")
    if clouds[0] < 0 or clouds[-1] >= dims.clouds:
        raise UsageError(f"cloud subset {clouds} out of range")
    if users[0] < 0 or users[-1] >= dims.users:
        raise UsageError(f"user subset {users} out of range")

    grid = np.array(
        [(c, u, b, z) for c in clouds for u in users
         for b in range(dims.bs_per_cloud) for z in range(dims.pzs_per_bs)],
        dtype=np.int64,
    )
    c, u, b, z = (grid[:, k] for k in range(4))
    same = lambda col: col[:, None] == col[None, :]  # noqa: E731
    same_c, same_u, same_b, same_z = same(c), same(u), same(b), same(z)
    adj = same_c & same_b & same_z  # CC2
    if regime is Regime.HYBRID:
        adj |= same_u & ~same_c  # CC1
        adj |= same_u & same_z  # CC3
    elif regime is Regime.SIGNAL:
        adj |= same_u & same_z
    else:
        adj |= same_u & ~(same_c & same_b)
    np.fill_diagonal(adj, False)

    vertices = tuple(Association(*map(int, row)) for row in grid)
    weights = tuple(float(utilities.pi[a]) for a in vertices)
    return ConflictGraph(vertices=vertices, weights=weights, rows=_pack_rows(adj),
                         regime=regime, dims=dims)


def is_independent(g: ConflictGraph, s: Schedule | Iterable[Association]) -> bool:
    """True iff no two associations of ``s`` are adjacent in ``g``."""
    chosen = s.chosen if isinstance(s, Schedule) else s
    idx = g.indices_of(chosen)
    mask = 0
    for i in idx:
        mask |= 1 << i
    return all(not (g.rows[i] & mask) for i in idx)
