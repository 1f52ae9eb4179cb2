"""Dropping solvers and dynamic schedule generation.

When a disturbance inflates the short-period workload beyond what the idle
and disturbed-task slots of the static schedule can absorb, some periodic
traffic must yield.  This module provides the greedy packet-dropping
heuristic, the minimum-degradation transmission-dropping heuristic, an
exhaustive optimal oracle for desk-sized instances (the dropping problem is
NP-hard: set cover embeds into it, see ``from_set_cover``), and the candidate
sweep that turns a drop decision into the dynamic slot table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import (
    CandidateInfeasible,
    DisturbanceInfeasible,
    NetworkModel,
    SchedulingMode,
    TaskSpec,
    allocate_retry_vector,
    packet_pdr,
    packet_pdr_flexible,
    pdr_degradation,
)
from .rhythmic import (
    ActivePacketSets,
    DisturbanceEvent,
    RhythmicDemand,
    RhythmicWindow,
    build_active_sets,
    earliest_last_finish,
    end_point_candidates,
    end_point_upper_bound,
)
from .static_schedule import Schedule, SlotAssignment, hop_expansion

__all__ = [
    "TransmissionVector",
    "DemandVector",
    "DropDecision",
    "PeriodicPacketState",
    "DynamicPlan",
    "build_transmission_vectors",
    "build_demand_vector",
    "build_periodic_state",
    "greedy_drop_packets",
    "drop_transmissions",
    "optimal_drop_oracle",
    "from_set_cover",
    "generate_dynamic_schedule",
]

PacketKey = tuple[int, int]  # (task id, release slot)

ORACLE_PACKET_LIMIT = 20
ORACLE_SLOT_LIMIT = 22
ORACLE_COMBO_LIMIT = 2_000_000


@dataclass(frozen=True)
class TransmissionVector:
    """Per rhythmic packet, how many of this periodic packet's static slots
    could be handed over (slots falling inside that rhythmic packet's window)."""

    packet: PacketKey
    replaceable: tuple[int, ...]

    @property
    def total(self) -> int:
        return int(sum(self.replaceable))


@dataclass(frozen=True)
class DemandVector:
    """Slot needs of the rhythmic packets versus what the static schedule
    already offers them (idle slots plus the disturbed task's own slots)."""

    required: tuple[int, ...]
    available: tuple[int, ...]

    @property
    def residual(self) -> tuple[int, ...]:
        return tuple(max(0, r - a) for r, a in zip(self.required, self.available))

    @property
    def satisfied(self) -> bool:
        return all(x == 0 for x in self.residual)


@dataclass(frozen=True)
class DropDecision:
    """Outcome of a dropping solver.

    Packet-level decisions abandon whole periodic packets (each degrades by
    the full requirement).  Transmission-level decisions surrender individual
    slots; a packet left with fewer slots than hops can no longer be delivered
    and degrades fully as well.
    """

    level: str  # "packet" | "transmission"
    dropped_packets: tuple[PacketKey, ...] = ()
    dropped_slots: tuple[tuple[int, int, int], ...] = ()  # (task, release, slot)
    degradations: tuple[tuple[PacketKey, float], ...] = ()
    total_degradation: float = 0.0

    @property
    def packet_count(self) -> int:
        return len(self.dropped_packets)

    @property
    def slot_count(self) -> int:
        return len(self.dropped_slots)

    def cost(self) -> float:
        """Candidate-selection metric: drop count at packet level, total
        reliability degradation at transmission level."""
        return float(self.packet_count) if self.level == "packet" else self.total_degradation

    def freed_slots(self, static: Schedule) -> set[int]:
        if self.level == "packet":
            freed: set[int] = set()
            for task, release in self.dropped_packets:
                freed.update(int(s) for s in static.packet_slots(task, release))
            return freed
        return {slot for _, _, slot in self.dropped_slots}


@dataclass
class PeriodicPacketState:
    """Mutable per-packet view used by the transmission-dropping heuristic."""

    packet: PacketKey
    path_pdrs: tuple[float, ...]
    slots: list[int]
    hops: list[int]  # hop label per remaining slot; 0 under PBS
    window_of: dict[int, int]  # slot -> rhythmic window index, in-window slots only

    @property
    def hop_count(self) -> int:
        return len(self.path_pdrs)

    def delivery_pdr(self) -> float:
        if not self.slots or len(self.slots) < self.hop_count:
            return 0.0
        if any(h == 0 for h in self.hops):
            return packet_pdr_flexible(self.path_pdrs, len(self.slots))
        counts = [0] * self.hop_count
        for h in self.hops:
            counts[h - 1] += 1
        if any(c == 0 for c in counts):
            return 0.0
        return packet_pdr(self.path_pdrs, counts)

    def pdr_without(self, ordinal: int) -> float:
        slots = self.slots[:ordinal] + self.slots[ordinal + 1 :]
        hops = self.hops[:ordinal] + self.hops[ordinal + 1 :]
        probe = PeriodicPacketState(self.packet, self.path_pdrs, slots, hops, {})
        return probe.delivery_pdr()

    def remove(self, ordinal: int) -> int:
        slot = self.slots.pop(ordinal)
        self.hops.pop(ordinal)
        return slot


def resolved_demand(entry: RhythmicDemand, full_demand: int) -> int:
    return entry.fixed_demand if entry.fixed_demand is not None else full_demand


def build_transmission_vectors(
    sets: ActivePacketSets, static: Schedule
) -> list[TransmissionVector]:
    """Count, for every periodic packet, its slots inside each rhythmic window.

    One pass over the candidate window suffices: the rhythmic windows are
    disjoint and contained in it, so each slot feeds at most one count.
    """
    n = len(sets.rhythmic)
    starts = np.array([d.release for d in sets.rhythmic])
    ends = np.array([d.deadline for d in sets.rhythmic])
    counts: dict[PacketKey, list[int]] = {key: [0] * n for key in sets.periodic}
    lo, hi = sets.start, sets.candidate
    tasks_w = static.task_at[lo:hi]
    rel_w = static.release_at[lo:hi]
    slots = np.arange(lo, hi)
    widx = np.searchsorted(starts, slots, side="right") - 1
    in_window = (widx >= 0) & (slots < ends[np.clip(widx, 0, n - 1)])
    periodic_mask = (tasks_w >= 0) & (tasks_w != sets.task_id) & in_window
    for t, task_id, release, w in zip(
        slots[periodic_mask].tolist(),
        tasks_w[periodic_mask].tolist(),
        rel_w[periodic_mask].tolist(),
        widx[periodic_mask].tolist(),
    ):
        counts[(task_id, release)][w] += 1
    return [
        TransmissionVector(packet=key, replaceable=tuple(counts[key]))
        for key in sets.periodic
    ]


def build_demand_vector(
    sets: ActivePacketSets,
    static: Schedule,
    lossy: bool,
    required_pdr: float,
    path_pdrs: Sequence[float],
) -> DemandVector:
    """Per rhythmic packet: slots demanded (hop count on lossless networks,
    the reliability retry budget otherwise, or the boundary truncation) and
    slots already available in its window (idle plus the disturbed task's)."""
    full = sum(allocate_retry_vector(path_pdrs, required_pdr)) if lossy else len(path_pdrs)
    required = []
    available = []
    for entry in sets.rhythmic:
        required.append(resolved_demand(entry, full))
        lo, hi = entry.window
        window = static.task_at[lo:hi]
        available.append(int(((window == -1) | (window == sets.task_id)).sum()))
    return DemandVector(required=tuple(required), available=tuple(available))


def build_periodic_state(
    sets: ActivePacketSets,
    static: Schedule,
    tasks: Sequence[TaskSpec],
    network: NetworkModel,
) -> list[PeriodicPacketState]:
    by_id = {t.id: t for t in tasks}
    windows = [d.window for d in sets.rhythmic]
    state: list[PeriodicPacketState] = []
    for task_id, release in sets.periodic:
        task = by_id[task_id]
        slots = [int(s) for s in static.packet_slots(task_id, release, until=release + task.deadline)]
        hops = [int(static.hop_at[s]) for s in slots]
        window_of: dict[int, int] = {}
        for slot in slots:
            for i, (lo, hi) in enumerate(windows):
                if lo <= slot < hi:
                    window_of[slot] = i
                    break
        state.append(
            PeriodicPacketState(
                packet=(task_id, release),
                path_pdrs=tuple(network.path_pdrs(task.path)),
                slots=slots,
                hops=hops,
                window_of=window_of,
            )
        )
    return state


def greedy_drop_packets(
    demand: DemandVector, vectors: Sequence[TransmissionVector], required_pdr: float
) -> DropDecision:
    """Drop whole periodic packets until every rhythmic packet is covered.

    Each round removes the packet contributing the most replaceable slots
    (ties to the lowest release, then task id), subtracts its contribution
    from the residual demand, and re-clips the remaining vectors: entries for
    satisfied rhythmic packets go to zero and entries exceeding the residual
    are reduced to it, so later rounds rank packets by *useful* contribution.
    """
    residual = list(demand.residual)
    if all(v == 0 for v in residual):
        return DropDecision(level="packet")

    live: dict[PacketKey, list[int]] = {v.packet: list(v.replaceable) for v in vectors}
    dropped: list[PacketKey] = []
    while True:
        best_key = None
        best_sum = -1
        for key in live:
            s = sum(live[key])
            if s > best_sum or (s == best_sum and (key[1], key[0]) < (best_key[1], best_key[0])):
                best_key, best_sum = key, s
        if best_key is None or best_sum == 0:
            raise CandidateInfeasible("periodic packets cannot cover the rhythmic demand")
        contribution = live.pop(best_key)
        dropped.append(best_key)
        for i in range(len(residual)):
            residual[i] = max(0, residual[i] - contribution[i])
        if all(v == 0 for v in residual):
            break
        for eps in live.values():
            for i in range(len(residual)):
                if residual[i] == 0:
                    eps[i] = 0
                elif eps[i] > residual[i]:
                    eps[i] = residual[i]

    degradations = tuple((key, required_pdr) for key in sorted(dropped, key=lambda k: (k[1], k[0])))
    return DropDecision(
        level="packet",
        dropped_packets=tuple(dropped),
        degradations=degradations,
        total_degradation=required_pdr * len(dropped),
    )


def drop_transmissions(
    demand: DemandVector,
    state: Sequence[PeriodicPacketState],
    required_pdr: float,
    mode: SchedulingMode = SchedulingMode.TBS,
) -> DropDecision:
    """Surrender individual periodic slots, cheapest reliability loss first.

    Each round recomputes, for every still-assigned slot lying in the window
    of a rhythmic packet that still needs slots, the delivery-probability drop
    its removal would cause (for PBS the packet's flexible-slot probability;
    the slot taken is then its earliest in-window one).  The cheapest slot is
    dropped and the window's residual demand decremented.  Ties go to the
    lowest release, then task id, then slot.
    """
    residual = list(demand.residual)
    if all(v == 0 for v in residual):
        return DropDecision(level="transmission")

    packets = [
        PeriodicPacketState(p.packet, p.path_pdrs, list(p.slots), list(p.hops), dict(p.window_of))
        for p in state
    ]
    original_pdr = {p.packet: p.delivery_pdr() for p in packets}
    dropped: list[tuple[int, int, int]] = []
    touched: set[PacketKey] = set()

    while True:
        best = None  # (delta, release, task, slot, packet index, ordinal)
        for idx, packet in enumerate(packets):
            current = packet.delivery_pdr()
            if mode is SchedulingMode.PBS:
                # Packet-granular selection: removing any slot costs the same,
                # so rank packets and take the earliest needy-window slot.
                ordinal = next(
                    (
                        o
                        for o, slot in enumerate(packet.slots)
                        if packet.window_of.get(slot) is not None
                        and residual[packet.window_of[slot]] > 0
                    ),
                    None,
                )
                if ordinal is None:
                    continue
                delta = current - packet.pdr_without(ordinal)
                key = (delta, packet.packet[1], packet.packet[0], packet.slots[ordinal])
                if best is None or key < best[0]:
                    best = (key, idx, ordinal)
            else:
                per_hop: dict[int, float] = {}
                for ordinal, slot in enumerate(packet.slots):
                    w = packet.window_of.get(slot)
                    if w is None or residual[w] == 0:
                        continue
                    hop = packet.hops[ordinal]
                    if hop not in per_hop:
                        per_hop[hop] = current - packet.pdr_without(ordinal)
                    key = (per_hop[hop], packet.packet[1], packet.packet[0], slot)
                    if best is None or key < best[0]:
                        best = (key, idx, ordinal)
        if best is None:
            raise CandidateInfeasible("no periodic transmission can cover the remaining demand")
        _, idx, ordinal = best
        packet = packets[idx]
        slot = packet.slots[ordinal]
        window = packet.window_of[slot]
        packet.remove(ordinal)
        dropped.append((packet.packet[0], packet.packet[1], slot))
        touched.add(packet.packet)
        residual[window] -= 1
        if all(v == 0 for v in residual):
            break

    final_pdr = {p.packet: p.delivery_pdr() for p in packets}
    degradations = tuple(
        (key, pdr_degradation(required_pdr, final_pdr[key]))
        for key in sorted(touched, key=lambda k: (k[1], k[0]))
    )
    return DropDecision(
        level="transmission",
        dropped_slots=tuple(dropped),
        degradations=degradations,
        total_degradation=float(sum(d for _, d in degradations)),
    )


def optimal_drop_oracle(
    demand: DemandVector,
    vectors: Optional[Sequence[TransmissionVector]] = None,
    level: str = "packet",
    state: Optional[Sequence[PeriodicPacketState]] = None,
    required_pdr: float = 0.99,
    mode: SchedulingMode = SchedulingMode.TBS,
) -> DropDecision:
    """Exhaustive-enumeration optimum for desk-sized instances (test oracle).

    Packet level: smallest packet subset whose raw replaceable counts cover
    the residual demand.  Transmission level: over all ways of picking exactly
    the residual number of in-window slots per rhythmic packet, the selection
    with the smallest total reliability degradation.
    """
    residual = list(demand.residual)
    if all(v == 0 for v in residual):
        return DropDecision(level=level)

    if level == "packet":
        if vectors is None:
            raise ValueError("packet-level oracle needs transmission vectors")
        if len(vectors) > ORACLE_PACKET_LIMIT:
            raise ValueError(f"instance too large for the oracle (> {ORACLE_PACKET_LIMIT} packets)")
        ordered = sorted(vectors, key=lambda v: (v.packet[1], v.packet[0]))
        for size in range(1, len(ordered) + 1):
            for combo in itertools.combinations(ordered, size):
                if all(
                    sum(v.replaceable[i] for v in combo) >= residual[i]
                    for i in range(len(residual))
                ):
                    keys = tuple(v.packet for v in combo)
                    return DropDecision(
                        level="packet",
                        dropped_packets=keys,
                        degradations=tuple((k, required_pdr) for k in keys),
                        total_degradation=required_pdr * len(keys),
                    )
        raise CandidateInfeasible("no packet subset covers the demand")

    if state is None:
        raise ValueError("transmission-level oracle needs periodic packet state")
    candidates: list[list[tuple[int, int]]] = [[] for _ in residual]  # (packet idx, ordinal)
    total_slots = 0
    for idx, packet in enumerate(state):
        for ordinal, slot in enumerate(packet.slots):
            w = packet.window_of.get(slot)
            if w is not None and residual[w] > 0:
                candidates[w].append((idx, ordinal))
                total_slots += 1
    if total_slots > ORACLE_SLOT_LIMIT:
        raise ValueError(f"instance too large for the oracle (> {ORACLE_SLOT_LIMIT} slots)")

    combos = 1
    per_window: list[list[tuple[tuple[int, int], ...]]] = []
    for w, need in enumerate(residual):
        if need == 0:
            per_window.append([()])
            continue
        if len(candidates[w]) < need:
            raise CandidateInfeasible("a rhythmic packet's window lacks droppable slots")
        options = list(itertools.combinations(candidates[w], need))
        combos *= len(options)
        if combos > ORACLE_COMBO_LIMIT:
            raise ValueError("instance too large for the oracle (combination blow-up)")
        per_window.append(options)

    best_cost = None
    best_selection: Optional[tuple[tuple[int, int], ...]] = None
    for parts in itertools.product(*per_window):
        selection = tuple(itertools.chain.from_iterable(parts))
        removed: dict[int, list[int]] = {}
        for idx, ordinal in selection:
            removed.setdefault(idx, []).append(ordinal)
        cost = 0.0
        for idx, ordinals in removed.items():
            packet = state[idx]
            keep = [o for o in range(len(packet.slots)) if o not in set(ordinals)]
            probe = PeriodicPacketState(
                packet.packet,
                packet.path_pdrs,
                [packet.slots[o] for o in keep],
                [packet.hops[o] for o in keep],
                {},
            )
            cost += pdr_degradation(required_pdr, probe.delivery_pdr())
        if best_cost is None or cost < best_cost - 1e-15:
            best_cost = cost
            best_selection = selection

    assert best_selection is not None
    dropped = []
    touched: dict[int, list[int]] = {}
    for idx, ordinal in best_selection:
        touched.setdefault(idx, []).append(ordinal)
        packet = state[idx]
        dropped.append((packet.packet[0], packet.packet[1], packet.slots[ordinal]))
    degradations = []
    for idx, ordinals in sorted(touched.items(), key=lambda kv: (state[kv[0]].packet[1], state[kv[0]].packet[0])):
        packet = state[idx]
        keep = [o for o in range(len(packet.slots)) if o not in set(ordinals)]
        probe = PeriodicPacketState(
            packet.packet,
            packet.path_pdrs,
            [packet.slots[o] for o in keep],
            [packet.hops[o] for o in keep],
            {},
        )
        degradations.append((packet.packet, pdr_degradation(required_pdr, probe.delivery_pdr())))
    return DropDecision(
        level="transmission",
        dropped_slots=tuple(sorted(dropped, key=lambda d: d[2])),
        degradations=tuple(degradations),
        total_degradation=float(best_cost),
    )


def from_set_cover(
    universe: int, collection: Sequence[Sequence[int]]
) -> tuple[DemandVector, list[TransmissionVector]]:
    """Embed a set-cover instance into packet-level dropping.

    Element i becomes a rhythmic packet demanding one slot; subset j becomes a
    periodic packet whose vector has a 1 wherever it contains the element.
    The minimum drop count then equals the minimum cover size, which is what
    makes the dropping problem NP-hard.
    """
    if universe < 1:
        raise ValueError("universe must have at least one element")
    union: set[int] = set()
    vectors = []
    for j, subset in enumerate(collection):
        members = set(subset)
        if not members:
            raise ValueError(f"subset {j} is empty")
        if any(not (0 <= x < universe) for x in members):
            raise ValueError(f"subset {j} contains elements outside the universe")
        union |= members
        vectors.append(
            TransmissionVector(
                packet=(j + 1, 0),
                replaceable=tuple(1 if i in members else 0 for i in range(universe)),
            )
        )
    if union != set(range(universe)):
        raise ValueError("subsets do not cover the universe")
    demand = DemandVector(required=tuple([1] * universe), available=tuple([0] * universe))
    return demand, vectors


@dataclass
class DynamicPlan:
    """Chosen end point, drop decision and the dynamic slot overlay."""

    event: DisturbanceEvent
    window: RhythmicWindow
    sets: ActivePacketSets
    decision: DropDecision
    overlay: dict[int, SlotAssignment]
    assignments: dict[int, tuple[tuple[int, int], ...]]  # release -> ((slot, hop), ...)
    evaluations: tuple[tuple[int, Optional[float]], ...]
    lossy: bool
    retry_vector: tuple[int, ...]  # per-hop budget of each full-demand rhythmic packet

    @property
    def end_point(self) -> int:
        return self.window.end

    def as_schedule(self, static: Schedule) -> Schedule:
        """The dynamic schedule over [0, end point): the static table with
        rhythmic transmissions overlaid."""
        dyn = Schedule(
            static.mode,
            self.end_point,
            static.task_at[: self.end_point].copy(),
            static.release_at[: self.end_point].copy(),
            static.hop_at[: self.end_point].copy(),
        )
        for slot, entry in self.overlay.items():
            dyn.task_at[slot] = entry.task
            dyn.release_at[slot] = entry.release
            dyn.hop_at[slot] = entry.hop
        return dyn


def generate_dynamic_schedule(
    event: DisturbanceEvent,
    static: Schedule,
    tasks: Sequence[TaskSpec],
    network: NetworkModel,
    required_pdr: float,
    beta: int = 4,
    level: str = "packet",
    solver: str = "greedy",
) -> DynamicPlan:
    """Evaluate every end-point candidate, pick the cheapest feasible one and
    lay the rhythmic transmissions into the freed slots.

    Candidates are the disturbed task's release instants between the earliest
    finish of its last stepped packet and the latency bound.  Per candidate
    the demand vector is built and solved at the requested granularity
    (``level``) with the greedy heuristic or the exhaustive oracle; infeasible
    candidates are skipped.  The cheapest decision wins (drop count at packet
    level, total degradation at transmission level; ties to the earliest end
    point).  Rhythmic packets then claim the earliest usable slots in their
    windows, hop-ordered under TBS, where usable means idle, owned by the
    disturbed task, or freed by the decision.
    """
    if level not in ("packet", "transmission"):
        raise ValueError("level must be 'packet' or 'transmission'")
    if solver not in ("greedy", "oracle"):
        raise ValueError("solver must be 'greedy' or 'oracle'")
    by_id = {t.id: t for t in tasks}
    task = by_id[event.task_id]
    path_pdrs = network.path_pdrs(task.path)
    lossy = not network.lossless()
    retry_vector = (
        allocate_retry_vector(path_pdrs, required_pdr) if lossy else tuple([1] * task.hops)
    )
    full_demand = sum(retry_vector)

    f_last = earliest_last_finish(event, task.hops)
    upper = end_point_upper_bound(event, beta)
    candidates = end_point_candidates(event, f_last, beta)

    evaluations: list[tuple[int, Optional[float]]] = []
    best: Optional[tuple[float, int, ActivePacketSets, DemandVector, DropDecision]] = None
    for candidate in candidates:
        try:
            sets = build_active_sets(candidate, event, static, tasks, full_demand)
            demand = build_demand_vector(sets, static, lossy, required_pdr, path_pdrs)
            if demand.satisfied:
                decision = DropDecision(level=level)
            elif level == "packet":
                vectors = build_transmission_vectors(sets, static)
                if solver == "oracle":
                    decision = optimal_drop_oracle(
                        demand, vectors=vectors, level="packet", required_pdr=required_pdr
                    )
                else:
                    decision = greedy_drop_packets(demand, vectors, required_pdr)
            else:
                state = build_periodic_state(sets, static, tasks, network)
                if solver == "oracle":
                    decision = optimal_drop_oracle(
                        demand,
                        level="transmission",
                        state=state,
                        required_pdr=required_pdr,
                        mode=static.mode,
                    )
                else:
                    decision = drop_transmissions(demand, state, required_pdr, mode=static.mode)
        except CandidateInfeasible:
            evaluations.append((candidate, None))
            continue
        cost = decision.cost()
        evaluations.append((candidate, cost))
        if best is None or cost < best[0] - 1e-15:
            best = (cost, candidate, sets, demand, decision)

    if best is None:
        raise DisturbanceInfeasible(
            f"no feasible end point for the disturbance at slot {event.detect_slot}"
        )
    _, end_point, sets, demand, decision = best

    overlay: dict[int, SlotAssignment] = {}
    assignments: dict[int, tuple[tuple[int, int], ...]] = {}
    freed = decision.freed_slots(static)
    for entry in sets.rhythmic:
        need = resolved_demand(entry, full_demand)
        lo, hi = entry.window
        usable = [
            t
            for t in range(lo, hi)
            if static.task_at[t] == -1 or static.task_at[t] == event.task_id or t in freed
        ]
        if len(usable) < need:
            raise AssertionError("solver returned an uncoverable demand")  # post-solve invariant
        if static.mode is not SchedulingMode.TBS:
            labels = [0] * need
        elif entry.fixed_demand is not None:
            labels = list(entry.prefix_hops)  # truncated packet continues a static instance
        else:
            labels = hop_expansion(retry_vector)[:need]
        chosen = []
        for slot, hop in zip(usable[:need], labels):
            overlay[slot] = SlotAssignment(task=event.task_id, release=entry.release, hop=hop)
            chosen.append((slot, hop))
        assignments[entry.release] = tuple(chosen)

    # The last stepped-state packet must finish inside the window it was
    # granted; its final assigned slot realizes that finish time.
    last_stepped = event.enter_slot + sum(event.periods[:-1])
    if last_stepped in assignments and assignments[last_stepped]:
        realized_finish = max(s for s, _ in assignments[last_stepped]) + 1
        if not (realized_finish <= end_point <= upper):
            raise AssertionError("chosen end point violates the completion constraint")

    window = RhythmicWindow(
        start=event.enter_slot,
        end=end_point,
        end_upper_bound=upper,
        candidates=tuple(candidates),
    )
    return DynamicPlan(
        event=event,
        window=window,
        sets=sets,
        decision=decision,
        overlay=overlay,
        assignments=assignments,
        evaluations=tuple(evaluations),
        lossy=lossy,
        retry_vector=retry_vector,
    )
