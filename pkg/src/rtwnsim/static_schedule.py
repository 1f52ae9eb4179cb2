"""Static schedule synthesis: earliest-deadline-first slot assignment with
per-hop retransmission budgets, exactly as each node would compute it locally.

The whole network shares one channel, so at most one transmission is
scheduled per slot; that single-assignment representation also satisfies
half-duplex trivially.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    NetworkModel,
    ScheduleInfeasible,
    SchedulingMode,
    TaskSpec,
    allocate_retry_vector,
    packet_pdr,
    packet_pdr_flexible,
)

__all__ = [
    "Schedule",
    "SlotAssignment",
    "StaticScheduleResult",
    "ScheduleVerdict",
    "allocate_retry_vector",
    "plan_retry_vectors",
    "hop_expansion",
    "build_static_schedule",
    "verify_schedulable",
]

# Building a schedule over the full hyperperiod is only sensible while the
# lcm stays desk-sized; callers must pass an explicit horizon beyond this.
HYPERPERIOD_CAP = 500_000


@dataclass(frozen=True)
class SlotAssignment:
    task: int
    release: int  # release slot of the owning packet (unique packet key)
    hop: int  # 1-based hop under TBS; 0 under PBS


class Schedule:
    """Per-slot transmission table over [0, horizon).

    Stored as parallel numpy arrays (-1 task id marks an idle slot).  Packets
    are keyed by (task, release) so dynamically re-released packets never
    collide with nominal instance numbering.
    """

    def __init__(self, mode: SchedulingMode, horizon: int,
                 task_at: np.ndarray, release_at: np.ndarray, hop_at: np.ndarray):
        if not (len(task_at) == len(release_at) == len(hop_at) == horizon):
            raise ValueError("schedule arrays must match the horizon")
        self.mode = mode
        self.horizon = horizon
        self.task_at = task_at
        self.release_at = release_at
        self.hop_at = hop_at

    @classmethod
    def empty(cls, mode: SchedulingMode, horizon: int) -> "Schedule":
        return cls(
            mode,
            horizon,
            np.full(horizon, -1, dtype=np.int32),
            np.full(horizon, -1, dtype=np.int64),
            np.zeros(horizon, dtype=np.int16),
        )

    def entry(self, t: int) -> Optional[SlotAssignment]:
        if not (0 <= t < self.horizon):
            return None
        task = int(self.task_at[t])
        if task < 0:
            return None
        return SlotAssignment(task=task, release=int(self.release_at[t]), hop=int(self.hop_at[t]))

    def packet_slots(self, task: int, release: int, until: Optional[int] = None) -> np.ndarray:
        """Slots assigned to one packet; ``until`` bounds the scan (a packet's
        slots always lie in [release, deadline))."""
        lo = max(0, int(release))
        hi = self.horizon if until is None else min(self.horizon, int(until))
        if lo >= hi:
            return np.empty(0, dtype=np.int64)
        mask = (self.task_at[lo:hi] == task) & (self.release_at[lo:hi] == release)
        return np.nonzero(mask)[0] + lo

    def task_slots(self, task: int) -> np.ndarray:
        return np.nonzero(self.task_at == task)[0]

    def idle_slots(self) -> np.ndarray:
        return np.nonzero(self.task_at == -1)[0]

    def copy(self) -> "Schedule":
        return Schedule(self.mode, self.horizon,
                        self.task_at.copy(), self.release_at.copy(), self.hop_at.copy())

    def dump_lines(self) -> list[str]:
        """Per-slot text trace of every assigned slot."""
        lines = []
        for t in np.nonzero(self.task_at >= 0)[0]:
            lines.append(
                f"slot={int(t)} kind=sched task={int(self.task_at[t])} "
                f"release={int(self.release_at[t])} hop={int(self.hop_at[t])}"
            )
        return lines


@dataclass(frozen=True)
class ScheduleVerdict:
    ok: bool
    violations: tuple[str, ...] = ()

    @property
    def first_violation(self) -> Optional[str]:
        return self.violations[0] if self.violations else None


@dataclass
class StaticScheduleResult:
    schedule: Schedule
    retry_vectors: dict[int, tuple[int, ...]]  # task id -> per-hop trial budget
    feasible: bool
    hyperperiod: int
    first_failure: Optional[tuple[int, int]] = None  # (task, release) of first missed packet

    @property
    def budgets(self) -> dict[int, int]:
        return {tid: sum(rv) for tid, rv in self.retry_vectors.items()}


def plan_retry_vectors(
    tasks: Sequence[TaskSpec], network: NetworkModel, required_pdr: float
) -> dict[int, tuple[int, ...]]:
    """Per-task trial budgets: the reliability minimum, padded round-robin up
    to an explicitly configured slot budget."""
    vectors: dict[int, tuple[int, ...]] = {}
    for task in tasks:
        rv = list(allocate_retry_vector(network.path_pdrs(task.path), required_pdr))
        if task.slot_budget is not None:
            minimum = sum(rv)
            if task.slot_budget < minimum:
                raise ScheduleInfeasible(
                    f"task {task.id}: slot budget {task.slot_budget} below reliability minimum {minimum}"
                )
            for i in range(task.slot_budget - minimum):
                rv[i % task.hops] += 1
        vectors[task.id] = tuple(rv)
    return vectors


def hop_expansion(retry_vector: Sequence[int]) -> list[int]:
    """Ordinal -> 1-based hop label: hop 1 repeated R[0] times, then hop 2, ..."""
    return [h for h, r in enumerate(retry_vector, start=1) for _ in range(r)]


def _hyperperiod(tasks: Sequence[TaskSpec]) -> int:
    hp = 1
    for task in tasks:
        hp = math.lcm(hp, task.period)
    return hp


def build_static_schedule(
    tasks: Sequence[TaskSpec],
    network: NetworkModel,
    mode: SchedulingMode,
    required_pdr: float,
    horizon: Optional[int] = None,
) -> StaticScheduleResult:
    """EDF slot assignment over [0, horizon) (default: one hyperperiod).

    Ready packets are served earliest-deadline-first with ties broken by task
    id then release; a packet's w slots are taken in order, labelled hop by
    hop under TBS.  EDF is optimal on a single channel, so feasible=False
    means no schedule exists; the first failing packet is reported.  Packets
    whose deadline falls beyond the horizon are scheduled best-effort but do
    not count against feasibility.
    """
    if not tasks:
        raise ValueError("need at least one task")
    for task in tasks:
        task.validate_against(network)
    if len({t.id for t in tasks}) != len(tasks):
        raise ValueError("duplicate task ids")

    retry_vectors = plan_retry_vectors(tasks, network, required_pdr)
    hyperperiod = _hyperperiod(tasks)
    if horizon is None:
        top = max(t.phase for t in tasks) + hyperperiod
        if top > HYPERPERIOD_CAP:
            raise ValueError(
                f"hyperperiod {hyperperiod} too large to build implicitly; pass an explicit horizon"
            )
        horizon = top

    # (release, deadline, task, demand) for every instance released in window
    jobs: list[list[int]] = []  # [release, deadline, task, remaining]
    for task in tasks:
        demand = sum(retry_vectors[task.id])
        k = 0
        while task.release(k) < horizon:
            jobs.append([task.release(k), task.nominal_deadline(k), task.id, demand])
            k += 1
    jobs.sort(key=lambda j: (j[0], j[1], j[2]))

    sched = Schedule.empty(mode, horizon)
    slots_of: dict[tuple[int, int], list[int]] = {}
    missed: list[tuple[int, int, int]] = []  # (deadline, task, release)

    heap: list[tuple[int, int, int, int]] = []  # (deadline, task, release, job index)
    i = 0
    t = 0
    n = len(jobs)
    while t < horizon:
        while i < n and jobs[i][0] <= t:
            heapq.heappush(heap, (jobs[i][1], jobs[i][2], jobs[i][0], i))
            i += 1
        if not heap:
            if i >= n:
                break
            t = min(jobs[i][0], horizon)
            continue
        deadline, task_id, release, idx = heapq.heappop(heap)
        remaining = jobs[idx][3]
        if deadline <= t:
            missed.append((deadline, task_id, release))
            continue
        limit = horizon
        if i < n:
            limit = min(limit, jobs[i][0])
        run = min(remaining, deadline - t, limit - t)
        sched.task_at[t : t + run] = task_id
        sched.release_at[t : t + run] = release
        slots_of.setdefault((task_id, release), []).extend(range(t, t + run))
        jobs[idx][3] = remaining - run
        t += run
        if jobs[idx][3] > 0:
            heapq.heappush(heap, (deadline, task_id, release, idx))
    for deadline, task_id, release, idx in heap:
        if jobs[idx][3] > 0:
            missed.append((deadline, task_id, release))
    while i < n:  # never became ready before the horizon ended
        if jobs[i][1] <= horizon:
            missed.append((jobs[i][1], jobs[i][2], jobs[i][0]))
        i += 1

    if mode is SchedulingMode.TBS:
        for (task_id, release), slots in slots_of.items():
            labels = hop_expansion(retry_vectors[task_id])
            for slot, hop in zip(slots, labels):
                sched.hop_at[slot] = hop

    missed_in_window = sorted((d, tid, rel) for d, tid, rel in missed if d <= horizon)
    feasible = not missed_in_window
    first_failure = None
    if missed_in_window:
        _, tid, rel = missed_in_window[0]
        first_failure = (tid, rel)
    return StaticScheduleResult(
        schedule=sched,
        retry_vectors=retry_vectors,
        feasible=feasible,
        hyperperiod=hyperperiod,
        first_failure=first_failure,
    )


def verify_schedulable(
    result: StaticScheduleResult,
    tasks: Sequence[TaskSpec],
    network: NetworkModel,
    required_pdr: float,
) -> ScheduleVerdict:
    """Independent check of a built schedule, recomputed from the slot arrays:
    per-packet slot counts, window containment, hop ordering and end-to-end
    reliability of every packet whose deadline lies inside the horizon."""
    sched = result.schedule
    by_task = {t.id: t for t in tasks}
    violations: list[str] = []

    per_packet: dict[tuple[int, int], list[int]] = {}
    for t in np.nonzero(sched.task_at >= 0)[0]:
        key = (int(sched.task_at[t]), int(sched.release_at[t]))
        per_packet.setdefault(key, []).append(int(t))

    for task in tasks:
        rv = result.retry_vectors[task.id]
        k = 0
        while task.release(k) < sched.horizon:
            release, deadline = task.release(k), task.nominal_deadline(k)
            k += 1
            if deadline > sched.horizon:
                continue
            slots = per_packet.get((task.id, release), [])
            if any(not (release <= s < deadline) for s in slots):
                violations.append(f"task {task.id} release {release}: slot outside [release, deadline)")
            if len(slots) != sum(rv):
                violations.append(
                    f"task {task.id} release {release}: {len(slots)} slots assigned, budget {sum(rv)}"
                )
            if sched.mode is SchedulingMode.TBS:
                hops = [int(sched.hop_at[s]) for s in sorted(slots)]
                if any(b < a for a, b in zip(hops, hops[1:])):
                    violations.append(f"task {task.id} release {release}: hop ordering violated")
                counts = {h: hops.count(h) for h in set(hops)}
                if len(slots) == sum(rv) and counts != {h + 1: r for h, r in enumerate(rv) if r}:
                    violations.append(f"task {task.id} release {release}: per-hop counts != retry vector")
                achieved = packet_pdr(network.path_pdrs(task.path), rv)
            else:
                achieved = packet_pdr_flexible(network.path_pdrs(task.path), sum(rv))
            if achieved < required_pdr - 1e-12:
                violations.append(
                    f"task {task.id}: achieved pdr {achieved:.6f} below requirement {required_pdr}"
                )
                break
    return ScheduleVerdict(ok=not violations, violations=tuple(violations))
