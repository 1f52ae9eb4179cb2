"""Slot-level model of the multi-priority MAC.

Priority is encoded implicitly: a transmission's start-of-frame offset grows
by one tick per priority level, and every sender performs clear-channel
assessment first, so whoever starts earliest (numerically lowest level) owns
the slot and later senders defer.  Two senders at the same level start
simultaneously, cannot hear each other, and collide.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "SlotTiming",
    "ContendingTx",
    "TxOutcome",
    "adjusted_tx_offset",
    "priority_levels",
    "arbitrate_slot",
    "preemption_error_rate",
    "contention_latency_experiment",
]


@dataclass(frozen=True)
class SlotTiming:
    """Slot timing constants (microseconds); tick is the per-level offset step."""

    slot_duration_us: int = 10_000
    ext_slot_duration_us: int = 10_800
    tx_offset_us: int = 2_120
    tx_ack_delay_us: int = 1_000
    long_gt_us: int = 2_200
    ext_long_gt_us: int = 3_000
    short_gt_us: int = 1_000
    priority_tick_us: int = 60

    def __post_init__(self) -> None:
        if self.priority_tick_us <= 0:
            raise ValueError("priority tick must be positive")
        if self.ext_slot_duration_us < self.slot_duration_us:
            raise ValueError("extended slot cannot be shorter than the base slot")
        worst = self.tx_offset_us + (priority_levels(self) - 1) * self.priority_tick_us
        if worst >= self.ext_slot_duration_us:
            raise ValueError("adjusted offsets must fit inside the extended slot")


class TxOutcome(str, Enum):
    WON_DELIVERED = "won_delivered"
    WON_LOST = "won_lost"
    DEFERRED = "deferred"
    COLLIDED = "collided"


@dataclass(frozen=True)
class ContendingTx:
    sender: str
    receiver: str
    priority: int  # 0 = highest
    payload: tuple[int, int, int] = (0, 0, 0)  # (task, release, hop)

    def __post_init__(self) -> None:
        if self.priority < 0:
            raise ValueError("priority levels are non-negative")


def priority_levels(timing: SlotTiming) -> int:
    """Levels the slot extension supports: floor(extension / tick) + 1."""
    extension = timing.ext_slot_duration_us - timing.slot_duration_us
    return extension // timing.priority_tick_us + 1


def adjusted_tx_offset(timing: SlotTiming, priority: int) -> int:
    """Start-of-frame offset of a transmission at the given priority level."""
    if not (0 <= priority < priority_levels(timing)):
        raise ValueError(
            f"priority {priority} outside supported range 0..{priority_levels(timing) - 1}"
        )
    return timing.tx_offset_us + priority * timing.priority_tick_us


def arbitrate_slot(
    contenders: Sequence[ContendingTx],
    timing: SlotTiming,
    link_success: Sequence[bool],
) -> list[TxOutcome]:
    """Resolve one slot's contention.

    A unique highest-priority sender transmits; its delivery follows its link
    draw.  Strictly lower-priority senders hear the earlier start-of-frame
    during CCA and defer without transmitting.  A tie at the top level means
    the tied senders transmit simultaneously and all collide.
    """
    if len(link_success) != len(contenders):
        raise ValueError("need one link draw per contender")
    if not contenders:
        return []
    for c in contenders:
        if c.priority >= priority_levels(timing):
            raise ValueError(f"priority {c.priority} exceeds the slot's level capacity")
    top = min(c.priority for c in contenders)
    winners = [i for i, c in enumerate(contenders) if c.priority == top]
    outcomes: list[TxOutcome] = []
    for i, c in enumerate(contenders):
        if c.priority != top:
            outcomes.append(TxOutcome.DEFERRED)
        elif len(winners) > 1:
            outcomes.append(TxOutcome.COLLIDED)
        else:
            outcomes.append(TxOutcome.WON_DELIVERED if link_success[i] else TxOutcome.WON_LOST)
    return outcomes


# Preemption error rates read off hardware measurements: below 60 us the
# loser's CCA window starts missing the winner's start-of-frame.  Keyed by the
# priority distance between the top two contenders; user-overridable.
DEFAULT_PER_TABLE: dict[int, float] = {1: 0.10, 2: 0.05}


def preemption_error_rate(
    tick_us: int, priority_distance: int, table: Optional[Mapping[int, float]] = None
) -> float:
    """Probability that the high-priority winner is corrupted by a contender.

    Zero for ticks of 60 us and above; at smaller ticks the rate falls as the
    priority distance grows.
    """
    if not (30 <= tick_us <= 400):
        raise ValueError("tick must lie in the supported 30..400 us range")
    if priority_distance < 1:
        raise ValueError("priority distance must be >= 1")
    if tick_us >= 60:
        return 0.0
    rates = dict(DEFAULT_PER_TABLE)
    if table:
        rates.update(table)
    return rates.get(priority_distance, rates[max(rates)])


@dataclass(frozen=True)
class SenderStats:
    sent: int
    delivered: int
    dropped: int
    drop_rate: float
    mean_latency_frames: float


def contention_latency_experiment(
    seed: int,
    frames: int = 20_000,
    timing: Optional[SlotTiming] = None,
    arrival_prob: float = 0.6,
    max_retries: int = 5,
    priorities: Sequence[int] = (0, 1, 2),
) -> dict[int, SenderStats]:
    """Three senders sharing one slot per frame, retrying on deferral.

    Every frame each sender may generate a packet; all pending packets contend
    in the shared slot.  A deferred packet retries in the next frame; after
    ``max_retries`` failed attempts it is dropped.  Returns per-priority drop
    rate and mean delivery latency in frames: the top priority never loses a
    contention, so its drop rate is exactly zero, and mean latency grows as
    priority falls.
    """
    timing = timing or SlotTiming()
    rng = np.random.default_rng(seed)
    pending: dict[int, Optional[list[int]]] = {p: None for p in priorities}  # [born, attempts]
    stats = {p: [0, 0, 0, 0] for p in priorities}  # sent, delivered, dropped, latency sum

    for frame in range(frames):
        for p in priorities:
            if pending[p] is None and rng.random() < arrival_prob:
                pending[p] = [frame, 0]
                stats[p][0] += 1
        contenders = [
            ContendingTx(sender=f"N{p}", receiver="C", priority=p)
            for p in priorities
            if pending[p] is not None
        ]
        if not contenders:
            continue
        outcomes = arbitrate_slot(contenders, timing, [True] * len(contenders))
        for c, outcome in zip(contenders, outcomes):
            p = c.priority
            packet = pending[p]
            assert packet is not None
            if outcome is TxOutcome.WON_DELIVERED:
                stats[p][1] += 1
                stats[p][3] += frame - packet[0] + 1
                pending[p] = None
            else:
                packet[1] += 1
                if packet[1] > max_retries:
                    stats[p][2] += 1
                    pending[p] = None

    result = {}
    for p in priorities:
        sent, delivered, dropped, latency = stats[p]
        result[p] = SenderStats(
            sent=sent,
            delivered=delivered,
            dropped=dropped,
            drop_rate=dropped / sent if sent else 0.0,
            mean_latency_frames=latency / delivered if delivered else float("inf"),
        )
    return result
