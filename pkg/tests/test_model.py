"""Domain types and reliability math."""

import math
from fractions import Fraction

import numpy as np
import pytest

from rtwnsim.model import (
    InfeasibleError,
    Link,
    NetworkModel,
    PacketInstance,
    ReliabilityTarget,
    RhythmicSpec,
    TaskSpec,
    allocate_retry_vector,
    chain_network,
    generate_rhythmic_spec,
    generate_taskset,
    packet_pdr,
    packet_pdr_flexible,
    pdr_degradation,
    random_chain_network,
)
from rtwnsim.rhythmic import DisturbanceEvent


# ---------------------------------------------------------------- packet_pdr

def test_packet_pdr_perfect_links():
    assert packet_pdr([1.0, 1.0], [1, 1]) == 1.0


def test_packet_pdr_single_hop_retry():
    assert packet_pdr([0.9], [2]) == pytest.approx(0.99)


def test_packet_pdr_two_hop_mixed():
    # 1 - 0.1^2 = 0.99 and 1 - 0.2^3 = 0.992; product 0.98208
    assert packet_pdr([0.9, 0.8], [2, 3]) == pytest.approx(0.98208)


def test_packet_pdr_zero_trials_kills_delivery():
    assert packet_pdr([0.9, 0.9], [2, 0]) == 0.0


def test_packet_pdr_length_mismatch():
    with pytest.raises(ValueError):
        packet_pdr([0.9, 0.9], [1])


def test_packet_pdr_monotone_in_trials():
    rng = np.random.default_rng(42)
    for _ in range(200):
        hops = int(rng.integers(1, 5))
        pdrs = rng.uniform(0.5, 1.0, hops).tolist()
        trials = rng.integers(0, 6, hops).tolist()
        base = packet_pdr(pdrs, trials)
        for h in range(hops):
            bumped = list(trials)
            bumped[h] += 1
            assert packet_pdr(pdrs, bumped) >= base


def test_packet_pdr_all_perfect_with_positive_trials_is_one():
    rng = np.random.default_rng(3)
    for _ in range(50):
        hops = int(rng.integers(1, 6))
        trials = rng.integers(1, 5, hops).tolist()
        assert packet_pdr([1.0] * hops, trials) == 1.0


def test_packet_pdr_flexible_dominates_pinned_split():
    # Sharing a slot pool across hops can only help delivery.
    rng = np.random.default_rng(11)
    for _ in range(100):
        hops = int(rng.integers(1, 4))
        pdrs = rng.uniform(0.5, 0.99, hops).tolist()
        trials = rng.integers(1, 4, hops).tolist()
        assert packet_pdr_flexible(pdrs, int(sum(trials))) >= packet_pdr(pdrs, trials) - 1e-12


def test_packet_pdr_flexible_insufficient_slots():
    assert packet_pdr_flexible([0.9, 0.9], 1) == 0.0


# ----------------------------------------------------------- pdr_degradation

@pytest.mark.parametrize(
    "required, achieved, expected",
    [
        (0.99, 0.995, 0.0),  # clamped at zero
        (0.99, 0.0, 0.99),  # fully dropped packet loses the whole requirement
        (0.99, 0.9, 0.09),
    ],
)
def test_pdr_degradation(required, achieved, expected):
    assert pdr_degradation(required, achieved) == pytest.approx(expected)


def test_pdr_degradation_rejects_out_of_range():
    with pytest.raises(ValueError):
        pdr_degradation(1.5, 0.5)


# ------------------------------------------------------ allocate_retry_vector

def _brute_force_minimal_vector(pdrs, target, cap=6):
    """Exhaustive search over all trial vectors with per-hop counts <= cap."""
    import itertools

    best = None
    for combo in itertools.product(range(1, cap + 1), repeat=len(pdrs)):
        if packet_pdr(pdrs, combo) >= target:
            key = (sum(combo), combo)
            if best is None or key < best:
                best = key
    return best


def test_allocate_perfect_links():
    assert allocate_retry_vector([1.0, 1.0], 0.99) == (1, 1)


def test_allocate_single_lossy_hop():
    assert allocate_retry_vector([0.9], 0.99) == (2,)


def test_allocate_two_lossy_hops_matches_exhaustive_search():
    got = allocate_retry_vector([0.9, 0.9], 0.95)
    assert got == (2, 2)
    best = _brute_force_minimal_vector([0.9, 0.9], 0.95)
    assert best is not None and sum(got) == best[0]


def test_allocate_minimal_total_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(50):
        hops = int(rng.integers(1, 4))
        pdrs = rng.uniform(0.6, 0.99, hops).round(3).tolist()
        target = float(rng.uniform(0.8, 0.99))
        got = allocate_retry_vector(pdrs, target)
        assert packet_pdr(pdrs, got) >= target
        best = _brute_force_minimal_vector(pdrs, target, cap=8)
        assert best is not None and sum(got) == best[0]


def test_allocate_unreachable_target():
    with pytest.raises(InfeasibleError):
        allocate_retry_vector([0.9], 1.0)


# ---------------------------------------------------- generate_rhythmic_spec

def test_rhythmic_ramp_canonical():
    spec = generate_rhythmic_spec(100, 0.2, 4)
    assert spec.periods == (20, 40, 60, 80)
    assert spec.deadlines == spec.periods


def test_rhythmic_ramp_single_step():
    assert generate_rhythmic_spec(100, 0.2, 1).periods == (20,)


def test_rhythmic_ramp_matches_exact_arithmetic():
    # Independent re-evaluation of the floor formula in exact arithmetic.
    p0, gamma, steps = 15, 0.8, 5
    g = Fraction(str(gamma))
    expected = tuple(
        math.floor(p0 * (g + (k - 1) * (1 - g) / steps)) for k in range(1, steps + 1)
    )
    assert expected == (12, 12, 13, 13, 14)
    assert generate_rhythmic_spec(p0, gamma, steps).periods == expected


def test_rhythmic_ramp_awkward_decimal_ratio():
    # 0.29 * 100 rounds below 29.0 in binary floating point; the ramp must
    # still floor the mathematical value.
    assert generate_rhythmic_spec(100, 0.29, 1).periods == (29,)


def test_rhythmic_ramp_below_min_period():
    with pytest.raises(InfeasibleError):
        generate_rhythmic_spec(15, 0.2, 5, min_period=4)  # floor(15*0.2)=3 < 4


def test_rhythmic_state_length_is_period_sum():
    task = TaskSpec(
        id=0,
        path=("S1", "C", "A1"),
        period=20,
        deadline=20,
        rhythmic=generate_rhythmic_spec(20, 0.3, 4),
    )
    event = DisturbanceEvent.from_task(task, 2)
    assert event.exit_slot - event.enter_slot == sum(task.rhythmic.periods)


# ----------------------------------------------------------- type invariants

def test_link_rejects_bad_pdr():
    with pytest.raises(ValueError):
        Link("a", "b", 0.0)
    with pytest.raises(ValueError):
        Link("a", "b", 1.1)


def test_network_rejects_undeclared_endpoint():
    with pytest.raises(ValueError):
        NetworkModel(nodes=("a", "c"), controller="c", links=(Link("a", "b", 0.9),))


def test_network_requires_declared_controller():
    with pytest.raises(ValueError):
        NetworkModel(nodes=("a", "b"), controller="c", links=(Link("a", "b"),))


def test_task_requires_two_hops():
    with pytest.raises(ValueError):
        TaskSpec(id=0, path=("a", "b"), period=10, deadline=10)


def test_task_deadline_bounded_by_period():
    with pytest.raises(ValueError):
        TaskSpec(id=0, path=("a", "b", "c"), period=10, deadline=11)


def test_task_validate_against_network():
    net = chain_network(2, 2)
    task = TaskSpec(id=0, path=("S2", "S1", "C", "A1"), period=10, deadline=10)
    task.validate_against(net)
    bad = TaskSpec(id=1, path=("S1", "S2", "C"), period=10, deadline=10)
    with pytest.raises(ValueError):
        bad.validate_against(net)  # no S1->S2 link


def test_rhythmic_spec_monotonicity():
    with pytest.raises(ValueError):
        RhythmicSpec(periods=(5, 4), deadlines=(5, 4))


def test_reliability_target_open_interval():
    with pytest.raises(ValueError):
        ReliabilityTarget(1.0)
    assert ReliabilityTarget(0.99).required_pdr == 0.99


def test_packet_instance_invariants():
    with pytest.raises(ValueError):
        PacketInstance(task=0, index=0, release=5, deadline=5, retry_vector=(1,), achieved_pdr=1.0)
    with pytest.raises(ValueError):
        PacketInstance(task=0, index=0, release=0, deadline=3, retry_vector=(2, 2), achieved_pdr=1.0)


# ----------------------------------------------------------- taskset builder

def test_taskset_deterministic():
    net = random_chain_network(5)
    a = generate_taskset(123, 0.5, net)
    b = generate_taskset(123, 0.5, net)
    assert a == b


def test_taskset_zero_target_is_empty():
    net = chain_network()
    assert generate_taskset(1, 0.0, net) == []


def test_taskset_period_distribution_bounds():
    # Periods are uniform over {hops..500} with deadline == period; checked
    # over many seeds.
    net = random_chain_network(9)
    for seed in range(1000):
        for task in generate_taskset(seed, 0.2, net):
            assert task.hops <= task.period <= 500
            assert task.deadline == task.period
            assert 2 <= task.hops <= 16


def test_taskset_respects_utilization_budget():
    from rtwnsim.static_schedule import plan_retry_vectors

    net = random_chain_network(17)
    for seed in range(50):
        tasks = generate_taskset(seed, 0.6, net)
        vectors = plan_retry_vectors(tasks, net, 0.99)
        util = sum(sum(vectors[t.id]) / t.period for t in tasks)
        assert 0.6 <= util <= 1.0 + 1e-9


def test_taskset_network_too_small():
    net = NetworkModel(nodes=("a", "c"), controller="c", links=(Link("a", "c"),))
    with pytest.raises(InfeasibleError):
        generate_taskset(0, 0.5, net)  # only 1-hop routes exist
