"""Cloud agents resolving user conflicts over a synchronous broadcast bus.

Each cloud only sees its own utilities. It solves a local maximum-weight
independent set of size B*Z over the users it is still allowed to serve and
broadcasts the *identities* of the users it scheduled. Users claimed by two or
more clouds are then contested and handed to a single winner:

* :func:`run_optimal_distributed` -- each claimant reports its current local
  benefit and its best benefit without the user; the cloud maximising its own
  benefit plus the other claimants' fallback benefits wins. The rule is
  pairwise per contested user, so it matches the centralized optimum on many
  instances but not all of them.
* :func:`run_heuristic_distributed` -- the user goes to the claimant that draws
  the most benefit from that user alone; every other cloud drops the user and
  patches only the vacated PZs of its previous schedule.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .conflict import Association, ConflictGraph, Regime, Schedule, build_graph
from .errors import InfeasibleError, ProtocolError, UsageError
from .mwis import exact_mwis
from .network import UtilityTensor


@dataclass(frozen=True)
class ScheduledUsers:
    """Users a cloud scheduled this round. Carries no BS or PZ detail."""

    cloud: int
    users: frozenset[int]


@dataclass(frozen=True)
class BenefitAnnouncement:
    cloud: int
    user: int
    benefit: float
    benefit_without: float | None = None


Payload = Union[ScheduledUsers, BenefitAnnouncement]


@dataclass(frozen=True)
class ProtocolMessage:
    round: int
    payload: Payload

    @property
    def sender(self) -> int:
        return self.payload.cloud

    @property
    def variant(self) -> str:
        return type(self.payload).__name__

    def to_record(self) -> dict:
        p = self.payload
        if isinstance(p, ScheduledUsers):
            body = {"users": sorted(p.users)}
        else:
            body = {"user": p.user, "benefit": p.benefit, "benefit_without": p.benefit_without}
        return {"round": self.round, "sender": self.sender, "variant": self.variant, "payload": body}


@dataclass(frozen=True)
class ConflictSet:
    """Users claimed by at least two clouds, with the claimants of each."""

    users: tuple[int, ...] = ()
    claimants: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.users)


class Bus:
    """Lossless synchronous broadcast between a fixed set of clouds."""

    def __init__(self, clouds: Iterable[int]):
        self.clouds = tuple(sorted(set(clouds)))

    def step(self, messages: Sequence[ProtocolMessage]) -> tuple[dict[int, list[ProtocolMessage]], ConflictSet]:
        """Deliver one round of broadcasts and compute the conflict set.

        Every message reaches every cloud except its sender, ordered by sender id.
        """
        rounds = {m.round for m in messages}
        if len(rounds) > 1:
            raise ProtocolError(f"messages from several rounds in one step: {sorted(rounds)}")
        for m in messages:
            if m.sender not in self.clouds:
                raise ProtocolError(f"message from unknown cloud {m.sender}")
        ordered = sorted(messages, key=lambda m: m.sender)
        delivered = {c: [m for m in ordered if m.sender != c] for c in self.clouds}

        claims: dict[int, list[int]] = {}
        for m in ordered:
            if isinstance(m.payload, ScheduledUsers):
                for u in m.payload.users:
                    claims.setdefault(u, []).append(m.sender)
        contested = {u: tuple(sorted(set(cs))) for u, cs in claims.items() if len(set(cs)) > 1}
        return delivered, ConflictSet(tuple(sorted(contested)), contested)


def bus_step(messages: Sequence[ProtocolMessage], clouds: Iterable[int]):
    return Bus(clouds).step(messages)


class CloudAgent:
    """Local state of one cloud: allowed users, local graph and schedule."""

    def __init__(self, cloud: int, utilities: UtilityTensor):
        dims = utilities.dims
        if not 0 <= cloud < dims.clouds:
            raise UsageError(f"cloud {cloud} out of range")
        self.cloud = cloud
        self.utilities = utilities
        self.size = dims.bs_per_cloud * dims.pzs_per_bs
        self.allowed: set[int] = set(range(dims.users))
        self.local_graph: ConflictGraph | None = None
        self.schedule = Schedule()
        self.benefits: dict[int, tuple[float, float | None]] = {}

    def solve(self) -> tuple[Schedule, ConflictGraph]:
        """Best size-B*Z local schedule over the currently allowed users."""
        if not self.allowed:
            raise InfeasibleError(f"cloud {self.cloud} has no allowed users left")
        graph = build_graph(self.utilities, Regime.HYBRID, [self.cloud], self.allowed)
        return exact_mwis(graph, self.size).schedule, graph

    def initialize(self) -> None:
        self.schedule, self.local_graph = self.solve()

    @property
    def benefit(self) -> float:
        return self.schedule.total_utility(self.utilities)

    def user_benefit(self, u: int) -> float:
        return math.fsum(self.utilities.pi[a] for a in self.schedule.chosen if a.u == u)

    def scheduled_users(self) -> frozenset[int]:
        return frozenset(u for u in self.schedule.users() if u in self.allowed)

    def announce(self, round_: int) -> ProtocolMessage:
        return ProtocolMessage(round_, ScheduledUsers(self.cloud, self.scheduled_users()))

    def patch_without(self, u: int) -> bool:
        """Drop ``u``'s associations and refill only the vacated PZs.

        Returns False when the patch had no solution and a full local re-solve
        was used instead.
        """
        removed = [a for a in self.schedule.chosen if a.u == u]
        if not removed:
            return True
        kept = self.schedule.chosen - set(removed)
        graph = build_graph(self.utilities, Regime.HYBRID, [self.cloud], self.allowed) if self.allowed else None
        if graph is not None:
            kept_idx = graph.indices_of(kept)
            blocked = 0
            for i in kept_idx:
                blocked |= graph.rows[i] | (1 << i)
            compatible = [v for j, v in enumerate(graph.vertices) if not blocked >> j & 1]
            if compatible:
                try:
                    patch = exact_mwis(graph.subgraph(compatible), len(removed))
                except InfeasibleError:
                    pass
                else:
                    self.schedule = Schedule(frozenset(kept) | patch.schedule.chosen)
                    self.local_graph = graph
                    return True
        self.schedule, self.local_graph = self.solve()
        return False


@dataclass(frozen=True)
class DistributedResult:
    schedule: Schedule
    weight: float
    rounds: int
    messages: tuple[ProtocolMessage, ...]
    allowed_history: tuple[tuple[int, ...], ...]
    """|U_c| per cloud after the initial phase and after every resolution round."""
    fallbacks: int = 0
    wall_ms: float = 0.0

    def message_records(self) -> list[dict]:
        return [m.to_record() for m in self.messages]

    def write_message_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.message_records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _contest_order(users: Sequence[int], user_order: Sequence[int] | None) -> list[int]:
    if user_order is None:
        return sorted(users)
    rank = {u: i for i, u in enumerate(user_order)}
    return sorted(users, key=lambda u: (rank.get(u, len(rank)), u))


def _setup(utilities: UtilityTensor) -> list[CloudAgent]:
    dims = utilities.dims
    if not dims.is_schedulable():
        raise InfeasibleError(f"U={dims.users} < C*B={dims.clouds * dims.bs_per_cloud}: no complete schedule exists")
    agents = [CloudAgent(c, utilities) for c in range(dims.clouds)]
    for agent in agents:
        agent.initialize()
    return agents


def _finish(agents, utilities, rounds, log, history, fallbacks, start) -> DistributedResult:
    schedule = Schedule(frozenset().union(*(a.schedule.chosen for a in agents)))
    return DistributedResult(
        schedule=schedule,
        weight=schedule.total_utility(utilities),
        rounds=rounds,
        messages=tuple(log),
        allowed_history=tuple(history),
        fallbacks=fallbacks,
        wall_ms=(time.perf_counter() - start) * 1e3,
    )


def run_optimal_distributed(utilities: UtilityTensor, user_order: Sequence[int] | None = None) -> DistributedResult:
    """Optimal distributed protocol; ``user_order`` permutes contest processing."""
    start = time.perf_counter()
    agents = _setup(utilities)
    bus = Bus(range(len(agents)))
    log: list[ProtocolMessage] = []
    history = [tuple(len(a.allowed) for a in agents)]
    rounds = 0
    t = 0
    while True:
        t += 1
        announcements = [a.announce(t) for a in agents]
        log.extend(announcements)
        _, conflict = bus.step(announcements)
        if not conflict:
            break
        rounds += 1
        for u in _contest_order(conflict.users, user_order):
            claimants = conflict.claimants[u]
            fallback: dict[int, Schedule | None] = {}
            replies = []
            for c in claimants:
                agent = agents[c]
                with_u = agent.benefit
                agent.allowed.discard(u)
                try:
                    alt, _ = agent.solve()
                    without_u = alt.total_utility(utilities)
                except InfeasibleError:
                    alt, without_u = None, -math.inf
                fallback[c] = alt
                agent.benefits[u] = (with_u, without_u)
                replies.append(ProtocolMessage(t, BenefitAnnouncement(c, u, with_u, without_u)))
            log.extend(replies)
            bus.step(replies)

            def score(c: int) -> float:
                return math.fsum([agents[c].benefits[u][0]] + [agents[o].benefits[u][1] for o in claimants if o != c])

            winner = max(claimants, key=lambda c: (score(c), -c))
            agents[winner].allowed.add(u)
            for c in claimants:
                if c == winner:
                    continue
                if fallback[c] is None:
                    raise InfeasibleError(f"cloud {c} cannot fill its PZs without user {u}")
                agents[c].schedule = fallback[c]
        history.append(tuple(len(a.allowed) for a in agents))
    return _finish(agents, utilities, rounds, log, history, 0, start)


def run_heuristic_distributed(utilities: UtilityTensor, user_order: Sequence[int] | None = None) -> DistributedResult:
    """Low-complexity distributed protocol with per-user winner selection."""
    start = time.perf_counter()
    agents = _setup(utilities)
    bus = Bus(range(len(agents)))
    log: list[ProtocolMessage] = []
    history = [tuple(len(a.allowed) for a in agents)]
    rounds = fallbacks = 0
    t = 0
    while True:
        t += 1
        announcements = [a.announce(t) for a in agents]
        log.extend(announcements)
        _, conflict = bus.step(announcements)
        if not conflict:
            break
        rounds += 1
        for u in _contest_order(conflict.users, user_order):
            claimants = conflict.claimants[u]
            replies = []
            for c in claimants:
                own = agents[c].user_benefit(u)
                agents[c].benefits[u] = (own, None)
                replies.append(ProtocolMessage(t, BenefitAnnouncement(c, u, own)))
            log.extend(replies)
            bus.step(replies)
            winner = max(claimants, key=lambda c: (agents[c].benefits[u][0], -c))
            for agent in agents:
                if agent.cloud == winner:
                    continue
                agent.allowed.discard(u)
                if not agent.patch_without(u):
                    fallbacks += 1
        history.append(tuple(len(a.allowed) for a in agents))
    return _finish(agents, utilities, rounds, log, history, fallbacks, start)
