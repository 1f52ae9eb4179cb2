"""Disturbance windows, end-point candidates and active packet sets."""

import numpy as np
import pytest

from rtwnsim.model import (
    DisturbanceInfeasible,
    Link,
    NetworkModel,
    RhythmicSpec,
    SchedulingMode,
    TaskSpec,
    chain_network,
    generate_taskset,
    random_chain_network,
)
from rtwnsim.rhythmic import (
    DisturbanceEvent,
    actual_releases,
    build_active_sets,
    disturbance_recipients,
    end_point_candidates,
    end_point_upper_bound,
    find_idle_slot,
)
from rtwnsim.static_schedule import Schedule, build_static_schedule


def _event(period=10, phase=0, instance=1, periods=(8,), deadline=None):
    task = TaskSpec(
        id=0,
        path=("S1", "C", "A1"),
        period=period,
        deadline=deadline or period,
        rhythmic=RhythmicSpec(tuple(periods), tuple(periods)),
        phase=phase,
    )
    return task, DisturbanceEvent.from_task(task, instance)


# ------------------------------------------------------------ recipient set

def test_recipients_minimal_path():
    task = TaskSpec(id=0, path=("V2", "Vc", "V5"), period=9, deadline=9)
    assert disturbance_recipients(task) == ("V2", "Vc", "V5")


def test_recipients_testbed_route():
    task = TaskSpec(id=0, path=("V0", "V1", "Vc", "V3", "V4"), period=15, deadline=15)
    assert set(disturbance_recipients(task)) == {"V0", "V1", "Vc", "V3", "V4"}
    assert "Vc" in disturbance_recipients(task)


# ----------------------------------------------------------- release timing

def test_event_timing_fields():
    _, event = _event(period=10, instance=3, periods=(4, 6))
    assert event.detect_slot == 30
    assert event.enter_slot == 40
    assert event.exit_slot == 50


def test_actual_releases_snap_to_grid():
    # Off-grid state exit: the release after it snaps backward onto the grid.
    _, event = _event(period=15, instance=2, periods=(12, 12))
    assert event.enter_slot == 45 and event.exit_slot == 69
    assert actual_releases(event, 120) == [45, 57, 69, 75, 90, 105, 120]


def test_actual_releases_grid_aligned_exit():
    _, event = _event(period=15, instance=2, periods=(15, 15))
    # Exit lands on the grid; the sequence continues naturally.
    assert actual_releases(event, 120) == [45, 60, 75, 90, 105, 120]


# ------------------------------------------------------ end point candidates

def test_candidates_are_filtered_releases():
    _, event = _event(period=10, instance=9, periods=(10, 10, 10))
    # releases: 100, 110, 120, 130 (exit), 140, ...
    assert end_point_candidates(event, f_last=105, beta=1) == [110, 120, 130]
    assert end_point_candidates(event, f_last=110, beta=1)[0] == 110  # closed lower bound


def test_candidates_sorted_unique_and_bounded():
    for seed in range(20):
        periods = tuple(int(p) for p in np.random.default_rng(seed).integers(5, 15, 3))
        periods = tuple(sorted(periods))
        task = TaskSpec(id=0, path=("S1", "C", "A1"), period=20, deadline=20,
                        rhythmic=RhythmicSpec(periods, periods))
        event = DisturbanceEvent.from_task(task, 2)
        f_last = event.enter_slot + sum(periods[:-1]) + task.hops
        upper = end_point_upper_bound(event, 4)
        cands = end_point_candidates(event, f_last, 4)
        assert cands == sorted(set(cands))
        assert all(f_last <= c <= upper for c in cands)


def test_candidates_singleton_at_boundary():
    _, event = _event(period=10, instance=9, periods=(10, 10, 10))
    upper = end_point_upper_bound(event, 1)
    assert end_point_candidates(event, f_last=upper, beta=1) == [upper]


def test_candidates_empty_is_an_error():
    _, event = _event(period=10, instance=9, periods=(10, 10, 10))
    with pytest.raises(DisturbanceInfeasible):
        end_point_candidates(event, f_last=end_point_upper_bound(event, 1) + 1, beta=1)


def test_candidates_testbed_enumeration():
    # Stepped releases 61..109, state exit 121 (on the phase-1 grid), then
    # grid releases; upper bound 121 + 3*15 = 166.
    task = TaskSpec(
        id=0, path=("V0", "V1", "Vc", "V3", "V4"), period=15, deadline=15,
        rhythmic=RhythmicSpec((12,) * 5, (12,) * 5), phase=1,
    )
    event = DisturbanceEvent.from_task(task, 3)
    assert event.enter_slot == 61 and event.exit_slot == 121
    assert end_point_upper_bound(event, 4) == 166
    f_last = 109 + task.hops
    assert end_point_candidates(event, f_last, beta=4) == [121, 136, 151, 166]


# --------------------------------------------------------- active packet sets

def _schedule_for(tasks, net, horizon, required=0.99):
    return build_static_schedule(tasks, net, SchedulingMode.TBS, required, horizon=horizon)


def test_active_sets_no_boundary_at_aligned_release():
    net = chain_network(1, 1, pdr=1.0)
    task, event = _event(period=10, instance=1, periods=(10,))
    result = _schedule_for((task,), net, 80)
    # exit = 30 on grid; candidate 40 follows the on-grid release at 30 whose
    # nominal deadline is exactly 40: whole packets only, no adjustment.
    sets = build_active_sets(40, event, result.schedule, (task,), full_demand=2)
    assert sets.boundary_case == 0
    assert sets.resume_release == 40
    assert [d.release for d in sets.rhythmic] == [20, 30]
    assert all(d.fixed_demand is None for d in sets.rhythmic)


def test_active_sets_windows_disjoint_and_periodic_membership():
    for seed in range(25):
        net = random_chain_network(seed, 3, 3)
        tasks = generate_taskset(seed, 0.6, net, hop_range=(2, 5), max_period=40)
        if not tasks:
            continue
        task = tasks[0]
        spec = RhythmicSpec((max(3, task.period // 2),) * 3, (max(3, task.period // 2),) * 3)
        event = DisturbanceEvent.from_task(task, 1, spec)
        horizon = end_point_upper_bound(event, 4) + 2 * max(t.period for t in tasks)
        result = _schedule_for(tasks, net, horizon)
        if not result.feasible:
            continue
        for cand in end_point_candidates(event, event.exit_slot - spec.periods[-1] + task.hops, 4):
            try:
                sets = build_active_sets(cand, event, result.schedule, tasks, task.hops)
            except Exception:
                continue
            windows = [d.window for d in sets.rhythmic]
            for (a1, b1), (a2, b2) in zip(windows, windows[1:]):
                assert b1 <= a2, "windows must be pairwise disjoint"
            for lo, hi in windows:
                assert event.enter_slot <= lo < hi <= cand
            arr = result.schedule
            for tid, rel in sets.periodic:
                slots = arr.packet_slots(tid, rel)
                assert ((slots >= sets.start) & (slots < cand)).any()


def test_active_sets_case2_deadline_clipped_to_static_takeover():
    # State exit at 115 (off grid); at candidate 115 the packet released at
    # 101 is the boundary: the grid instance at 105 resumes statically and the
    # boundary deadline clips to that instance's first slot.
    net = chain_network(1, 1, pdr=1.0)
    task = TaskSpec(
        id=0, path=("S1", "C", "A1"), period=15, deadline=15,
        rhythmic=RhythmicSpec((14,) * 5, (14,) * 5), phase=0,
    )
    event = DisturbanceEvent.from_task(task, 2)
    assert event.enter_slot == 45 and event.exit_slot == 115
    result = _schedule_for((task,), net, 180)
    sets = build_active_sets(115, event, result.schedule, (task,), full_demand=2)
    assert sets.boundary_case == 2
    assert sets.resume_release == 105
    t1 = int(result.schedule.packet_slots(0, 105)[0])
    assert t1 < 115
    boundary = sets.rhythmic[-1]
    assert boundary.release == 101
    assert boundary.deadline == min(115, t1)
    assert boundary.fixed_demand is None


def test_active_sets_case1_truncates_demand():
    # Hand-built schedule: the disturbed task's grid instance at 20 owns slots
    # 25, 27, 28; candidate 28 sits before the realigned release at 30 and the
    # first task slot at/after it is that instance's third slot, so the
    # boundary packet needs only two dynamic slots and takes over slot 28.
    task, event = _event(period=10, instance=1, periods=(8,))
    assert event.enter_slot == 20 and event.exit_slot == 28
    sched = Schedule.empty(SchedulingMode.TBS, 60)
    for slot, hop in [(25, 1), (27, 1), (28, 2)]:
        sched.task_at[slot] = 0
        sched.release_at[slot] = 20
        sched.hop_at[slot] = hop
    for slot, hop in [(31, 1), (33, 1), (34, 2)]:
        sched.task_at[slot] = 0
        sched.release_at[slot] = 30
        sched.hop_at[slot] = hop
    sets = build_active_sets(28, event, sched, (task,), full_demand=3)
    assert sets.boundary_case == 1
    assert sets.resume_release == 30
    boundary = sets.rhythmic[-1]
    assert boundary.release == 20
    assert boundary.deadline == 28
    assert boundary.fixed_demand == 2
    assert boundary.tail_slots == (28,)
    assert boundary.prefix_hops == (1, 1)


def test_active_sets_case1_full_demand_when_takeover_impossible():
    # Same shape but the instance at 20 has no slots at/after the candidate:
    # the first task slot after the end point belongs to the realigned
    # instance, so the boundary packet carries its full demand.
    task, event = _event(period=10, instance=1, periods=(8,))
    sched = Schedule.empty(SchedulingMode.TBS, 60)
    for slot, hop in [(21, 1), (22, 1), (23, 2)]:
        sched.task_at[slot] = 0
        sched.release_at[slot] = 20
        sched.hop_at[slot] = hop
    for slot, hop in [(31, 1), (33, 1), (34, 2)]:
        sched.task_at[slot] = 0
        sched.release_at[slot] = 30
        sched.hop_at[slot] = hop
    sets = build_active_sets(28, event, sched, (task,), full_demand=3)
    assert sets.boundary_case == 1
    boundary = sets.rhythmic[-1]
    assert boundary.fixed_demand is None
    assert boundary.tail_slots == ()


# ------------------------------------------------------------ idle-slot check

def test_idle_slot_witness_on_feasible_instances():
    found = 0
    for seed in range(30):
        net = random_chain_network(seed, 3, 3)
        tasks = generate_taskset(seed, 0.6, net, hop_range=(2, 5), max_period=40)
        if not tasks:
            continue
        task = tasks[0]
        spec = RhythmicSpec((max(task.hops, task.period // 2),) * 2,
                            (max(task.hops, task.period // 2),) * 2)
        event = DisturbanceEvent.from_task(task, 1, spec)
        result = _schedule_for(tasks, net, event.exit_slot + 3 * max(t.period for t in tasks))
        if not result.feasible:
            continue
        for node in task.path:
            if node == net.controller:
                continue
            witness = find_idle_slot(result.schedule, event, node, tasks)
            assert witness.ok, f"seed {seed} node {node}"
            assert witness.received_by < witness.idle_slot < witness.busy_from
            found += 1
    assert found > 20


def test_idle_slot_sensor_knows_at_detection():
    net = chain_network(1, 1, pdr=1.0)
    task, event = _event(period=10, instance=1, periods=(8,))
    result = _schedule_for((task,), net, 80)
    witness = find_idle_slot(result.schedule, event, "S1", (task,))
    assert witness.received_by == event.detect_slot


def test_idle_slot_violation_on_dense_schedule():
    # Hand-packed schedule keeping the sensor busy every slot between the
    # detection and the next instance: the premise fails and is flagged.
    task = TaskSpec(id=0, path=("S1", "C", "A1"), period=4, deadline=4,
                    rhythmic=RhythmicSpec((4,), (4,)))
    filler = TaskSpec(id=1, path=("S1", "C", "A1"), period=4, deadline=4)
    event = DisturbanceEvent.from_task(task, 0)
    sched = Schedule.empty(SchedulingMode.TBS, 12)
    assignments = [
        (0, 0, 0, 1), (1, 0, 0, 1),  # detecting packet, sender S1
        (2, 1, 0, 1), (3, 1, 0, 1),  # filler keeps S1 transmitting
        (4, 0, 4, 1), (5, 0, 4, 2),  # next instance
    ]
    for slot, tid, rel, hop in assignments:
        sched.task_at[slot] = tid
        sched.release_at[slot] = rel
        sched.hop_at[slot] = hop
    witness = find_idle_slot(sched, event, "S1", (task, filler))
    assert not witness.ok
