"""Deterministic slot-driven network simulator.

One run executes the static schedule (and, for the distributed frameworks,
the dynamic overlay the disturbed route's nodes derive) over lossy links with
per-slot contention resolved by the priority MAC.  Every random draw is a
pure function of (seed, link, slot), so a run is byte-reproducible and the
post-window suffix of a disturbed run can be compared draw-for-draw against
an undisturbed run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .model import (
    DisturbanceInfeasible,
    NetworkModel,
    ReliabilityTarget,
    RhythmicSpec,
    ScheduleInfeasible,
    SchedulingMode,
    TaskSpec,
)
from .rhythmic import DisturbanceEvent, disturbance_recipients, end_point_upper_bound
from .static_schedule import (
    Schedule,
    StaticScheduleResult,
    build_static_schedule,
)
from . import mac as mac_model
from .dropping import DropDecision, DynamicPlan, generate_dynamic_schedule

__all__ = [
    "Framework",
    "DisturbanceSpec",
    "BaselineParams",
    "MacParams",
    "SimConfig",
    "SimTrace",
    "TaskStats",
    "Metrics",
    "run",
    "baseline_drt",
    "success_ratio",
    "degradation_rate",
    "periodic_packets_in_window",
    "default_horizon",
]

_HYPERPERIOD_SOFT_CAP = 10_000


class Framework(str, Enum):
    FDPAS_PACKET = "FDPAS_PACKET"
    FDPAS_TRANSMISSION = "FDPAS_TRANSMISSION"
    BASELINE_BROADCAST = "BASELINE_BROADCAST"


@dataclass(frozen=True)
class DisturbanceSpec:
    task: int
    instance: int
    rhythmic: Optional[RhythmicSpec] = None  # falls back to the task's own spec


@dataclass(frozen=True)
class BaselineParams:
    """Timing model of a centralized responder: the detection packet reaches
    the controller, the next instance of a periodic broadcast task floods the
    new schedule ``depth`` hops deep, and handling starts at the disturbed
    task's next release after the flood completes."""

    broadcast_period: Optional[int] = None  # default: twice the disturbed task's period
    depth: Optional[int] = None  # default: network broadcast depth
    offset: int = 0  # release offset of the broadcast task


@dataclass(frozen=True)
class MacParams:
    timing: mac_model.SlotTiming = mac_model.SlotTiming()
    rhythmic_priority: int = 0
    periodic_priority: int = 1
    per_table: tuple[tuple[int, float], ...] = ()  # overrides the preemption-error lookup


@dataclass(frozen=True)
class SimConfig:
    network: NetworkModel
    tasks: tuple[TaskSpec, ...]
    mode: SchedulingMode = SchedulingMode.TBS
    required_pdr: float = 0.99
    seed: int = 0
    horizon: Optional[int] = None
    disturbance: Optional[DisturbanceSpec] = None
    alpha: Optional[int] = None  # max allowed response latency in slots; default one period
    beta: int = 4
    solver: str = "greedy"
    framework: Framework = Framework.FDPAS_PACKET
    mac: MacParams = MacParams()
    baseline: BaselineParams = BaselineParams()

    def __post_init__(self) -> None:
        ReliabilityTarget(self.required_pdr)
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if self.disturbance is not None:
            period = self._disturbed_task().period
            if self.alpha is not None and self.alpha < period:
                raise ValueError("alpha must be at least one nominal period")

    def _disturbed_task(self) -> TaskSpec:
        assert self.disturbance is not None
        for t in self.tasks:
            if t.id == self.disturbance.task:
                return t
        raise ValueError(f"disturbance names unknown task {self.disturbance.task}")

    def alpha_slots(self) -> Optional[int]:
        if self.disturbance is None:
            return None
        return self.alpha if self.alpha is not None else self._disturbed_task().period

    def event(self) -> Optional[DisturbanceEvent]:
        if self.disturbance is None:
            return None
        task = self._disturbed_task()
        return DisturbanceEvent.from_task(task, self.disturbance.instance, self.disturbance.rhythmic)


def default_horizon(config: SimConfig) -> int:
    """Two hyperperiods of slack past the latest possible end point, falling
    back to a bounded window when the hyperperiod is astronomically large."""
    hyper = 1
    for t in config.tasks:
        hyper = math.lcm(hyper, t.period)
    max_period = max(t.period for t in config.tasks)
    slack = 2 * hyper if hyper <= _HYPERPERIOD_SOFT_CAP else 4 * max_period
    event = config.event()
    start = end_point_upper_bound(event, config.beta) if event else max(t.phase for t in config.tasks)
    return start + slack


@dataclass
class TraceEvent:
    slot: int
    kind: str
    fields: tuple[tuple[str, object], ...]

    def line(self) -> str:
        parts = [f"slot={self.slot}", f"kind={self.kind}"]
        parts += [f"{k}={v}" for k, v in self.fields]
        return " ".join(parts)


@dataclass
class SimTrace:
    events: list[TraceEvent] = field(default_factory=list)
    # (task, release) -> ordered per-transmission log and terminal record
    packet_log: dict[tuple[int, int], list[tuple[int, int, str]]] = field(default_factory=dict)
    terminals: dict[tuple[int, int], tuple[str, int]] = field(default_factory=dict)

    def add(self, slot: int, kind: str, **fields: object) -> None:
        self.events.append(TraceEvent(slot, kind, tuple(fields.items())))

    def lines(self) -> list[str]:
        return [e.line() for e in self.events]

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def packets_from(self, slot: int) -> dict[tuple[int, int], tuple]:
        """Per-packet outcome records for packets released at/after ``slot``
        (the post-window comparison set for resumption checks)."""
        out = {}
        for key, log in self.packet_log.items():
            if key[1] >= slot:
                out[key] = (tuple(log), self.terminals.get(key))
        return out


@dataclass
class TaskStats:
    released: int = 0
    delivered: int = 0
    missed: int = 0
    dropped: int = 0

    @property
    def delivery_ratio(self) -> float:
        return self.delivered / self.released if self.released else 1.0


@dataclass
class Metrics:
    framework: Framework
    success: bool
    drt_slots: int
    dhl_slots: int
    degradation_rate: float
    total_degradation: float
    dropped_packets: int
    dropped_transmissions: int
    endpoint: Optional[int]
    periodic_in_window: int
    per_task: dict[int, TaskStats]
    feasible_dynamic: bool


class _Packet:
    __slots__ = ("task", "release", "deadline", "expiry", "hops", "path",
                 "progress", "terminal", "finish", "decided_drop")

    def __init__(self, task: TaskSpec, release: int, deadline: int, expiry: int):
        self.task = task.id
        self.release = release
        self.deadline = deadline  # nominal deadline used for miss accounting
        self.expiry = expiry  # last slot bound the packet may still transmit in
        self.hops = task.hops
        self.path = task.path
        self.progress = 0  # completed hops
        self.terminal: Optional[str] = None
        self.finish: Optional[int] = None
        self.decided_drop = False


def periodic_packets_in_window(
    static: Schedule, tasks: Sequence[TaskSpec], rhythmic_task: int, start: int, end: int
) -> list[tuple[int, int]]:
    """Periodic packets counted by the degradation-rate denominator: released
    inside [start, end) or owning at least one static slot there."""
    keys: set[tuple[int, int]] = set()
    window_tasks = static.task_at[start:end].tolist()
    window_rel = static.release_at[start:end].tolist()
    for tid, rel in zip(window_tasks, window_rel):
        if tid >= 0 and tid != rhythmic_task:
            keys.add((tid, rel))
    for task in tasks:
        if task.id == rhythmic_task:
            continue
        k = max(0, (start - task.phase) // task.period)
        while task.release(k) < end:
            if task.release(k) >= start:
                keys.add((task.id, task.release(k)))
            k += 1
    return sorted(keys, key=lambda x: (x[1], x[0]))


def degradation_rate(decision: Optional[DropDecision], periodic_count: int) -> float:
    """Total reliability degradation averaged over the periodic packets active
    in the window; zero by convention when no periodic packet is active."""
    if decision is None or periodic_count == 0:
        return 0.0
    return decision.total_degradation / periodic_count


def baseline_drt(config: SimConfig, static: Optional[StaticScheduleResult] = None) -> int:
    """Response latency of the centralized baseline, in slots.

    Sum of: detection packet reaching the controller under the static
    schedule (worst case, its last slot on the inbound hop), waiting for the
    next broadcast-task instance, ``depth`` flood slots, and alignment to the
    disturbed task's next release.  Always at least one nominal period.
    """
    if config.disturbance is None:
        raise ValueError("baseline latency needs a disturbance")
    task = config._disturbed_task()
    event = config.event()
    assert event is not None
    if static is None:
        horizon = config.horizon or default_horizon(config)
        static = build_static_schedule(
            config.tasks, config.network, config.mode, config.required_pdr, horizon=horizon
        )
    sched = static.schedule
    slots = sched.packet_slots(
        task.id, event.detect_slot, until=event.detect_slot + task.deadline
    )
    if slots.size == 0:
        raise ScheduleInfeasible("detection packet has no static slots inside the horizon")
    ctrl_hop = task.path.index(config.network.controller)
    if sched.mode is SchedulingMode.TBS:
        inbound = [int(s) for s in slots if int(sched.hop_at[s]) == ctrl_hop]
    else:
        inbound = [int(s) for s in slots]
    arrival = max(inbound) + 1

    period_b = config.baseline.broadcast_period or 2 * task.period
    depth = config.baseline.depth if config.baseline.depth is not None else config.network.broadcast_depth()
    offset = config.baseline.offset
    k = max(0, math.ceil((arrival - offset) / period_b))
    flood_done = offset + k * period_b + depth

    k0 = math.ceil((flood_done - task.phase) / task.period)
    start = task.phase + k0 * task.period
    return start - event.detect_slot


def success_ratio(records: Sequence, alpha: Optional[int] = None) -> float:
    """Fraction of runs that met the latency bound with a feasible dynamic
    schedule.  ``records`` may be Metrics or anything with .drt_slots /
    .feasible_dynamic; alpha overrides the per-record bound when given."""
    if not records:
        raise ValueError("need at least one run")
    ok = 0
    for r in records:
        drt = r.drt_slots
        feasible = getattr(r, "feasible_dynamic", True)
        bound = alpha if alpha is not None else getattr(r, "alpha_slots", None)
        if bound is None:
            raise ValueError("no latency bound available for a record")
        if feasible and drt <= bound:
            ok += 1
    return ok / len(records)


def _link_draws(network: NetworkModel, seed: int, horizon: int, stream: int) -> dict[tuple[str, str], np.ndarray]:
    """One uniform draw per (link, slot), independent of consumption order."""
    draws = {}
    for idx, link in enumerate(sorted(network.links, key=lambda l: (l.src, l.dst))):
        rng = np.random.default_rng(np.random.SeedSequence([seed, stream, idx]))
        draws[(link.src, link.dst)] = rng.random(horizon)
    return draws


def run(config: SimConfig) -> tuple[SimTrace, Metrics]:
    """Execute one scenario and return its trace and metrics.

    Nodes on the disturbed route follow the dynamic overlay inside the chosen
    window; everyone else follows the static schedule throughout.  Conflicting
    transmissions contend through the priority MAC (window transmissions of
    the disturbed task at the high priority), deferred senders do not consume
    their trial, and a winning transmission is received only if its receiver's
    own operative schedule expects it.
    """
    for task in config.tasks:
        task.validate_against(config.network)
    horizon = config.horizon if config.horizon is not None else default_horizon(config)
    static_result = build_static_schedule(
        config.tasks, config.network, config.mode, config.required_pdr, horizon=horizon
    )
    if not static_result.feasible:
        raise ScheduleInfeasible(
            f"static schedule infeasible, first failure {static_result.first_failure}"
        )
    sched = static_result.schedule
    by_id = {t.id: t for t in config.tasks}
    trace = SimTrace()

    event = config.event()
    plan: Optional[DynamicPlan] = None
    feasible_dynamic = True
    drt = 0
    dhl = 0
    endpoint: Optional[int] = None
    vrhy: frozenset[str] = frozenset()
    if event is not None and config.framework in (Framework.FDPAS_PACKET, Framework.FDPAS_TRANSMISSION):
        level = "packet" if config.framework is Framework.FDPAS_PACKET else "transmission"
        vrhy = frozenset(disturbance_recipients(by_id[event.task_id]))
        try:
            plan = generate_dynamic_schedule(
                event,
                sched,
                config.tasks,
                config.network,
                config.required_pdr,
                beta=config.beta,
                level=level,
                solver=config.solver,
            )
            endpoint = plan.end_point
            drt = event.enter_slot - event.detect_slot  # one nominal period
            dhl = plan.end_point - event.enter_slot
        except DisturbanceInfeasible:
            feasible_dynamic = False
            plan = None
    elif event is not None and config.framework is Framework.BASELINE_BROADCAST:
        drt = baseline_drt(config, static_result)

    overlay = plan.overlay if plan is not None else {}
    window_start = event.enter_slot if (plan is not None and event is not None) else None
    window_end = plan.end_point if plan is not None else None

    # Packet table.  The disturbed task's nominal instances inside
    # [window start, resume release) are superseded by the dynamic packets.
    packets: dict[tuple[int, int], _Packet] = {}
    alias: Optional[tuple[tuple[int, int], int, tuple[int, int]]] = None  # (static key, from slot, packet key)
    for task in config.tasks:
        skip_lo = skip_hi = None
        if plan is not None and event is not None and task.id == event.task_id:
            skip_lo, skip_hi = event.enter_slot, plan.sets.resume_release
        k = 0
        while task.nominal_deadline(k) <= horizon:
            release = task.release(k)
            k += 1
            if skip_lo is not None and skip_lo <= release < skip_hi:
                continue
            packets[(task.id, release)] = _Packet(
                task, release, task.nominal_deadline(k - 1), task.nominal_deadline(k - 1)
            )
    if plan is not None and event is not None:
        task = by_id[event.task_id]
        for entry in plan.sets.rhythmic:
            expiry = entry.deadline
            if entry.tail_slots:
                prev_release = plan.sets.resume_release - event.nominal_period
                expiry = prev_release + event.nominal_deadline
                alias = ((event.task_id, prev_release), plan.end_point, (event.task_id, entry.release))
            if expiry <= horizon:
                packets[(event.task_id, entry.release)] = _Packet(task, entry.release, expiry, expiry)

    decided_drops: set[tuple[int, int]] = set()
    if plan is not None and plan.decision.level == "packet":
        decided_drops = set(plan.decision.dropped_packets)
        for key in decided_drops:
            if key in packets:
                packets[key].decided_drop = True

    draws = _link_draws(config.network, config.seed, horizon, stream=0)
    tick = config.mac.timing.priority_tick_us
    per_draws = _link_draws(config.network, config.seed, horizon, stream=1) if tick < 60 else None

    task_at = sched.task_at.tolist()
    release_at = sched.release_at.tolist()
    hop_at = sched.hop_at.tolist()
    releases_by_slot: dict[int, list[tuple[int, int]]] = {}
    for key, pkt in packets.items():
        releases_by_slot.setdefault(pkt.release, []).append(key)

    stats = {t.id: TaskStats() for t in config.tasks}

    def finalize(pkt: _Packet, slot: int) -> None:
        if pkt.terminal is not None:
            return
        if pkt.decided_drop:
            pkt.terminal = "dropped"
            stats[pkt.task].dropped += 1
        else:
            pkt.terminal = "missed"
            stats[pkt.task].missed += 1
        trace.add(slot, "state", task=pkt.task, release=pkt.release, event=pkt.terminal)
        trace.terminals[(pkt.task, pkt.release)] = (pkt.terminal, -1)

    def sched_entry(t: int) -> Optional[tuple[int, int, int]]:
        tid = task_at[t]
        if tid < 0:
            return None
        return (tid, release_at[t], hop_at[t])

    def packet_for(tid: int, rel: int, t: int) -> Optional[_Packet]:
        if alias is not None and (tid, rel) == alias[0] and t >= alias[1]:
            return packets.get(alias[2])
        return packets.get((tid, rel))

    def tx_for(entry: tuple[int, int, int], t: int, source: str) -> Optional[tuple]:
        tid, rel, hop = entry
        pkt = packet_for(tid, rel, t)
        if pkt is None or pkt.terminal is not None or t >= pkt.expiry:
            return None
        task = by_id[tid]
        if config.mode is SchedulingMode.TBS and hop > 0:
            if pkt.progress != hop - 1:
                return None
            sender, receiver = task.hop_link(hop)
            use_hop = hop
        else:  # PBS: the current holder forwards
            if pkt.progress >= pkt.hops:
                return None
            sender, receiver = task.path[pkt.progress], task.path[pkt.progress + 1]
            use_hop = pkt.progress + 1
        return (sender, receiver, pkt, use_hop, source)

    expiry_order = sorted(packets.values(), key=lambda p: (p.expiry, p.task, p.release))
    expiry_idx = 0

    for t in range(horizon):
        while expiry_idx < len(expiry_order) and expiry_order[expiry_idx].expiry <= t:
            finalize(expiry_order[expiry_idx], expiry_order[expiry_idx].expiry)
            expiry_idx += 1
        for key in releases_by_slot.get(t, ()):
            pkt = packets[key]
            stats[pkt.task].released += 1
            trace.add(t, "state", task=key[0], release=key[1], event="released")

        in_window = window_start is not None and window_start <= t < window_end
        dyn_entry = overlay.get(t) if in_window else None
        stat_entry = sched_entry(t)
        if stat_entry is not None:
            trace.add(t, "sched", src="static", task=stat_entry[0],
                      release=stat_entry[1], hop=stat_entry[2])
        if dyn_entry is not None:
            trace.add(t, "sched", src="dynamic", task=dyn_entry.task,
                      release=dyn_entry.release, hop=dyn_entry.hop)

        candidates: list[tuple] = []
        if dyn_entry is not None:
            tx = tx_for((dyn_entry.task, dyn_entry.release, dyn_entry.hop), t, "dynamic")
            if tx is not None:
                candidates.append(tx)
        if stat_entry is not None:
            tx = tx_for(stat_entry, t, "static")
            if tx is not None:
                sender_node = tx[0]
                # A route node inside the window follows the overlay; its
                # static entry executes only where the overlay kept the slot.
                if not (in_window and sender_node in vrhy and t in overlay):
                    candidates.append(tx)

        if not candidates:
            continue

        contenders = []
        for sender, receiver, pkt, hop, source in candidates:
            prio = (
                config.mac.rhythmic_priority
                if source == "dynamic"
                else config.mac.periodic_priority
            )
            contenders.append(
                mac_model.ContendingTx(
                    sender=sender, receiver=receiver, priority=prio,
                    payload=(pkt.task, pkt.release, hop),
                )
            )
            trace.add(t, "tx", sender=sender, receiver=receiver, task=pkt.task,
                      release=pkt.release, hop=hop, prio=prio)

        link_success = []
        for sender, receiver, pkt, hop, source in candidates:
            u = draws[(sender, receiver)][t]
            ok = bool(u < config.network.link_pdr(sender, receiver))
            link_success.append(ok)
        outcomes = mac_model.arbitrate_slot(contenders, config.mac.timing, link_success)

        if len(candidates) > 1 and per_draws is not None:
            prios = sorted(c.priority for c in contenders)
            distance = prios[1] - prios[0]
            if distance >= 1:
                per = mac_model.preemption_error_rate(
                    tick, distance, table=dict(config.mac.per_table) or None
                )
                for i, outcome in enumerate(outcomes):
                    if outcome is mac_model.TxOutcome.WON_DELIVERED:
                        sender, receiver = candidates[i][0], candidates[i][1]
                        if per_draws[(sender, receiver)][t] < per:
                            outcomes[i] = mac_model.TxOutcome.WON_LOST

        for (sender, receiver, pkt, hop, source), outcome in zip(candidates, outcomes):
            result = outcome.value
            if outcome is mac_model.TxOutcome.WON_DELIVERED:
                # Delivery additionally needs the receiver to be listening per
                # its own operative schedule.
                if in_window and receiver in vrhy:
                    op = overlay.get(t)
                    op_entry = (op.task, op.release, op.hop) if op is not None else stat_entry
                else:
                    op_entry = stat_entry
                expected = (
                    op_entry is not None
                    and packet_for(op_entry[0], op_entry[1], t) is pkt
                )
                if expected:
                    pkt.progress += 1
                    result = "delivered"
                    if pkt.progress == pkt.hops:
                        pkt.terminal = "delivered"
                        pkt.finish = t + 1
                        stats[pkt.task].delivered += 1
                        trace.terminals[(pkt.task, pkt.release)] = ("delivered", t + 1)
                        trace.add(t, "state", task=pkt.task, release=pkt.release, event="delivered")
                else:
                    result = "no_listener"
            elif outcome is mac_model.TxOutcome.DEFERRED:
                result = "deferred"
            elif outcome is mac_model.TxOutcome.COLLIDED:
                result = "collided"
            else:
                result = "lost"
            trace.add(t, "outcome", sender=sender, task=pkt.task, release=pkt.release,
                      hop=hop, result=result)
            trace.packet_log.setdefault((pkt.task, pkt.release), []).append((t, hop, result))

    while expiry_idx < len(expiry_order):
        finalize(expiry_order[expiry_idx], min(expiry_order[expiry_idx].expiry, horizon))
        expiry_idx += 1

    alpha = config.alpha_slots()
    if event is None:
        success = True
    else:
        success = feasible_dynamic and drt <= (alpha or 0)

    periodic_count = 0
    dr = 0.0
    decision = plan.decision if plan is not None else None
    if plan is not None and event is not None:
        keys = periodic_packets_in_window(
            sched, config.tasks, event.task_id, event.enter_slot, plan.end_point
        )
        periodic_count = len(keys)
        dr = degradation_rate(decision, periodic_count)

    metrics = Metrics(
        framework=config.framework,
        success=success,
        drt_slots=drt,
        dhl_slots=dhl,
        degradation_rate=dr,
        total_degradation=decision.total_degradation if decision else 0.0,
        dropped_packets=decision.packet_count if decision else 0,
        dropped_transmissions=decision.slot_count if decision else 0,
        endpoint=endpoint,
        periodic_in_window=periodic_count,
        per_task={tid: stats[tid] for tid in sorted(stats)},
        feasible_dynamic=feasible_dynamic,
    )
    return trace, metrics
