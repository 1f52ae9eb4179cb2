"""Disturbance-mode machinery: recipient node sets, the shortened release
sequence of a disturbed task, end-point candidate selection, and construction
of the active packet sets a candidate implies.

A disturbance detected at one release makes the task enter a stepped
short-period state one nominal period later.  Only the nodes on that task's
route learn about it; the dynamic schedule they all derive covers
[enter_slot, end_point) and must hand the network back to the static schedule
with the task's releases realigned to the nominal grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    CandidateInfeasible,
    DisturbanceInfeasible,
    RhythmicSpec,
    TaskSpec,
)
from .static_schedule import Schedule

__all__ = [
    "DisturbanceEvent",
    "RhythmicWindow",
    "RhythmicDemand",
    "ActivePacketSets",
    "IdleSlotWitness",
    "disturbance_recipients",
    "actual_releases",
    "end_point_upper_bound",
    "end_point_candidates",
    "earliest_last_finish",
    "build_active_sets",
    "find_idle_slot",
]


@dataclass(frozen=True)
class DisturbanceEvent:
    """A detected disturbance and the timing frame it opens.

    detect_slot is the release at which the sensor sees the disturbance;
    enter_slot (one nominal period later) starts the short-period state, which
    runs for the sum of the stepped periods and ends at exit_slot.
    """

    task_id: int
    instance: int  # index of the detecting release
    detect_slot: int
    enter_slot: int
    exit_slot: int
    periods: tuple[int, ...]
    deadlines: tuple[int, ...]
    nominal_period: int
    nominal_deadline: int
    phase: int

    def __post_init__(self) -> None:
        if self.enter_slot != self.detect_slot + self.nominal_period:
            raise ValueError("the rhythmic state must start one nominal period after detection")
        if self.exit_slot - self.enter_slot != sum(self.periods):
            raise ValueError("exit slot must equal enter slot plus the stepped periods")

    @classmethod
    def from_task(cls, task: TaskSpec, instance: int,
                  spec: Optional[RhythmicSpec] = None) -> "DisturbanceEvent":
        spec = spec or task.rhythmic
        if spec is None:
            raise ValueError(f"task {task.id} has no rhythmic specification")
        detect = task.release(instance)
        return cls(
            task_id=task.id,
            instance=instance,
            detect_slot=detect,
            enter_slot=detect + task.period,
            exit_slot=detect + task.period + spec.total,
            periods=spec.periods,
            deadlines=spec.deadlines,
            nominal_period=task.period,
            nominal_deadline=task.deadline,
            phase=task.phase,
        )

    def grid_release_after(self, t: int) -> int:
        """First nominal-grid release strictly after slot t."""
        p = self.nominal_period
        return self.phase + ((t - self.phase) // p + 1) * p


@dataclass(frozen=True)
class RhythmicWindow:
    """The dynamic-schedule window finally chosen for a disturbance."""

    start: int  # enter_slot
    end: int  # chosen end point
    end_upper_bound: int
    candidates: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (self.start < self.end <= self.end_upper_bound):
            raise ValueError("window must satisfy start < end <= upper bound")


@dataclass(frozen=True)
class RhythmicDemand:
    """One packet the dynamic schedule must serve.

    fixed_demand is None for packets needing their full per-mode slot budget;
    the end-point boundary packet may instead carry a truncated demand plus
    the static-schedule tail slots that complete it after the window closes.
    """

    seq: int
    release: int
    deadline: int
    fixed_demand: Optional[int] = None
    tail_slots: tuple[int, ...] = ()
    prefix_hops: tuple[int, ...] = ()  # hop labels of the truncated in-window trials

    @property
    def window(self) -> tuple[int, int]:
        return self.release, self.deadline


@dataclass(frozen=True)
class ActivePacketSets:
    """Packets touched by one end-point candidate.

    ``rhythmic`` holds the disturbed task's packets to place dynamically, with
    pairwise-disjoint service windows inside [start, candidate).  ``periodic``
    lists every other packet owning at least one static slot in that range.
    ``resume_release`` is the first release of the disturbed task served by
    the static schedule again; nominal instances released in
    [start, resume_release) are superseded by the dynamic packets.
    """

    candidate: int
    start: int
    task_id: int  # the disturbed task
    rhythmic: tuple[RhythmicDemand, ...]
    periodic: tuple[tuple[int, int], ...]  # (task, release) keys
    resume_release: int
    boundary_case: int  # 0 = no boundary adjustment, 1 or 2 = adjustment case


@dataclass(frozen=True)
class IdleSlotWitness:
    ok: bool
    node: str
    received_by: int  # t1: slot by which the node holds the disturbance info
    busy_from: int  # t2: the node's first involvement in the next instance
    idle_slot: Optional[int] = None


def disturbance_recipients(task: TaskSpec) -> tuple[str, ...]:
    """Nodes that must learn about a disturbance: exactly the task's route."""
    return task.path


def actual_releases(event: DisturbanceEvent, until: int) -> list[int]:
    """Release slots of the disturbed task in [enter_slot, until].

    The stepped periods run first; the release at exit_slot returns the task
    to its nominal period, and the release after that snaps backward onto the
    nominal grid (the unique grid point within one nominal period), from
    which the sequence stays grid-aligned.
    """
    releases = []
    r = event.enter_slot
    for p in event.periods:
        if r > until:
            return releases
        releases.append(r)
        r += p
    # r == exit_slot: first nominal-state release.
    if r <= until:
        releases.append(r)
    g = event.grid_release_after(event.exit_slot)
    while g <= until:
        releases.append(g)
        g += event.nominal_period
    return releases


def end_point_upper_bound(event: DisturbanceEvent, beta: int) -> int:
    """Latest admissible end point: beta-1 nominal periods past the state exit."""
    if beta < 1:
        raise ValueError("beta must be >= 1")
    return event.exit_slot + (beta - 1) * event.nominal_period


def earliest_last_finish(event: DisturbanceEvent, min_demand: int) -> int:
    """Optimistic completion of the last stepped-state packet (release + its
    hop count); the final window selection re-validates the realized finish."""
    last_release = event.enter_slot + sum(event.periods[:-1])
    return last_release + min_demand


def end_point_candidates(
    event: DisturbanceEvent, f_last: int, beta: int, nominal_period: Optional[int] = None
) -> list[int]:
    """All actual releases of the disturbed task within [f_last, upper bound].

    Restricting candidates to release instants is lossless for the dropping
    objective; an empty result means the disturbance cannot be handled within
    the allowed latency.
    """
    period = nominal_period if nominal_period is not None else event.nominal_period
    if period != event.nominal_period:
        raise ValueError("nominal period disagrees with the disturbance event")
    upper = end_point_upper_bound(event, beta)
    candidates = [r for r in actual_releases(event, upper) if f_last <= r <= upper]
    if not candidates:
        raise DisturbanceInfeasible(
            f"no release of task {event.task_id} lies in [{f_last}, {upper}]"
        )
    return candidates


def _release_step_deadline(event: DisturbanceEvent, seq: int, release: int) -> int:
    """Pattern deadline of the seq-th in-window release (stepped then nominal)."""
    if seq < len(event.deadlines):
        return release + event.deadlines[seq]
    return release + event.nominal_deadline


def build_active_sets(
    candidate: int,
    event: DisturbanceEvent,
    static: Schedule,
    tasks: Sequence[TaskSpec],
    full_demand: int,
) -> ActivePacketSets:
    """Construct the packet sets one end-point candidate implies.

    Every release of the disturbed task in [enter, candidate) becomes a
    dynamic packet.  Service windows are clipped at the successor release so
    they stay pairwise disjoint.  The last packet is the boundary packet
    whenever its nominal deadline crosses the candidate (or the candidate sits
    off the nominal grid): its successor release snaps backward to the grid
    point r_p, and

    * case 1 (candidate < r_p): its deadline becomes the candidate.  If the
      first slot the static schedule gives the task at/after the candidate
      still belongs to the grid instance preceding r_p — say its k-th assigned
      slot — the packet finishes in that instance's remaining static slots and
      only k-1 slots are demanded dynamically; otherwise the full demand is.
    * case 2 (candidate >= r_p): the grid instance released at r_p is served
      statically, so the boundary deadline becomes min(candidate, first slot
      of that instance) and the full demand applies.

    Raises CandidateInfeasible when any window is shorter than its demand.
    """
    start = event.enter_slot
    if candidate <= start:
        raise CandidateInfeasible("end point must lie after the window start")
    releases = [r for r in actual_releases(event, candidate - 1) if r < candidate]
    if not releases:
        raise CandidateInfeasible("no packet released inside the window")

    demands: list[RhythmicDemand] = []
    p0 = event.nominal_period
    on_grid = (candidate - event.phase) % p0 == 0
    boundary_case = 0
    resume_release = candidate

    last_release = releases[-1]
    nominal_deadline_of_last = last_release + event.nominal_deadline
    needs_boundary = nominal_deadline_of_last > candidate or not on_grid

    for seq, release in enumerate(releases):
        deadline = _release_step_deadline(event, seq, release)
        if seq + 1 < len(releases):
            deadline = min(deadline, releases[seq + 1])  # keep windows disjoint
        fixed: Optional[int] = None
        tail: tuple[int, ...] = ()
        prefix: tuple[int, ...] = ()
        if seq == len(releases) - 1:
            if needs_boundary:
                r_p = event.grid_release_after(last_release)
                resume_release = r_p
                if candidate < r_p:
                    boundary_case = 1
                    deadline = candidate
                    task0 = static.task_slots(event.task_id)
                    after = task0[task0 >= candidate]
                    if after.size == 0:
                        raise CandidateInfeasible("static schedule has no task slot after the end point")
                    t_k0 = int(after[0])
                    if t_k0 < r_p:
                        # k-th slot of the grid instance preceding r_p; the
                        # packet takes over that instance's static tail and
                        # therefore follows its per-slot hop labels.
                        prev_release = r_p - p0
                        prev_slots = [
                            int(s)
                            for s in static.packet_slots(
                                event.task_id, prev_release, until=prev_release + event.nominal_deadline
                            )
                        ]
                        k0 = prev_slots.index(t_k0) + 1
                        fixed = k0 - 1
                        tail = tuple(prev_slots[k0 - 1:])
                        prefix = tuple(int(static.hop_at[s]) for s in prev_slots[: k0 - 1])
                else:
                    boundary_case = 2
                    inst_slots = static.packet_slots(
                        event.task_id, r_p, until=r_p + event.nominal_deadline
                    )
                    first_static = int(inst_slots[0]) if inst_slots.size else candidate
                    deadline = min(candidate, first_static)
            else:
                deadline = min(deadline, candidate)
        if deadline <= release:
            raise CandidateInfeasible(
                f"packet released at {release} has an empty service window for end point {candidate}"
            )
        demand = fixed if fixed is not None else full_demand
        if demand > deadline - release:
            raise CandidateInfeasible(
                f"packet released at {release} needs {demand} slots in a "
                f"{deadline - release}-slot window"
            )
        demands.append(RhythmicDemand(seq=seq, release=release, deadline=deadline,
                                      fixed_demand=fixed, tail_slots=tail, prefix_hops=prefix))

    # Periodic packets owning at least one static slot inside the window.
    window_tasks = static.task_at[start:candidate]
    window_releases = static.release_at[start:candidate]
    periodic: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for task_id, release in zip(window_tasks.tolist(), window_releases.tolist()):
        if task_id < 0 or task_id == event.task_id:
            continue
        key = (task_id, release)
        if key not in seen:
            seen.add(key)
            periodic.append(key)
    periodic.sort(key=lambda k: (k[1], k[0]))

    return ActivePacketSets(
        candidate=candidate,
        start=start,
        task_id=event.task_id,
        rhythmic=tuple(demands),
        periodic=tuple(periodic),
        resume_release=resume_release,
        boundary_case=boundary_case,
    )


def find_idle_slot(
    schedule: Schedule,
    event: DisturbanceEvent,
    node: str,
    tasks: Sequence[TaskSpec],
) -> IdleSlotWitness:
    """Witness that ``node`` has a schedule-computation slot.

    Between receiving the disturbance notification (piggybacked on the
    detecting packet; the sensor itself knows at the detection slot) and its
    first involvement in the next instance of the disturbed task, a
    schedulable static schedule always leaves the node one slot in which it
    neither sends nor receives.  Returns ok=False only on inputs that violate
    that premise.
    """
    by_id = {t.id: t for t in tasks}
    task = by_id[event.task_id]
    if node not in task.path:
        raise ValueError(f"node {node!r} is not on the disturbed task's route")

    def involves(t: int) -> bool:
        task_id = int(schedule.task_at[t])
        if task_id < 0:
            return False
        entry_task = by_id[task_id]
        hop = int(schedule.hop_at[t])
        if hop > 0:
            sender, receiver = entry_task.hop_link(hop)
            return node in (sender, receiver)
        return node in entry_task.path  # PBS: the node may act in any of its slots

    # t1: worst-case arrival of the detecting packet at the node.
    if node == task.path[0]:
        t1 = event.detect_slot
    else:
        hop_in = task.path.index(node)  # 1-based hop delivering to this node
        slots = [
            int(s)
            for s in schedule.packet_slots(
                event.task_id, event.detect_slot, until=event.detect_slot + event.nominal_deadline
            )
            if int(schedule.hop_at[s]) in (0, hop_in)  # PBS slots carry hop 0
        ]
        if not slots:
            raise ValueError("detecting packet has no slots delivering to the node")
        t1 = max(slots)

    # t2: the node's first involvement in the disturbed task at/after the
    # rhythmic state entry (the next instance's static position).
    t2 = None
    for t in schedule.task_slots(event.task_id):
        if t >= event.enter_slot and involves(int(t)):
            t2 = int(t)
            break
    if t2 is None:
        t2 = schedule.horizon

    for t in range(t1 + 1, t2):
        if not involves(t):
            return IdleSlotWitness(ok=True, node=node, received_by=t1, busy_from=t2, idle_slot=t)
    return IdleSlotWitness(ok=False, node=node, received_by=t1, busy_from=t2)
