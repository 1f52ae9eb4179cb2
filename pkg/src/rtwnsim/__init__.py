"""rtwnsim: slot-scheduled real-time wireless networks with distributed
disturbance handling.

Modules:
    model            domain types, end-to-end reliability math, generators
    static_schedule  EDF slot assignment with retransmission budgets
    rhythmic         disturbance windows, end-point candidates, active sets
    dropping         packet/transmission dropping solvers, dynamic schedules
    mac              priority-offset MAC arbitration model
    sim              deterministic slot-driven simulator and metrics
    experiments      seeded trial generation and sweep aggregation
    config           YAML scenario/experiment files
    cli              generate / simulate / sweep commands
"""

from .model import (
    CandidateInfeasible,
    DisturbanceInfeasible,
    InfeasibleError,
    Link,
    NetworkModel,
    PacketInstance,
    ReliabilityTarget,
    RhythmicSpec,
    ScheduleInfeasible,
    SchedulingMode,
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
from .static_schedule import (
    Schedule,
    ScheduleVerdict,
    SlotAssignment,
    StaticScheduleResult,
    build_static_schedule,
    verify_schedulable,
)
from .rhythmic import (
    ActivePacketSets,
    DisturbanceEvent,
    RhythmicDemand,
    RhythmicWindow,
    build_active_sets,
    disturbance_recipients,
    end_point_candidates,
    find_idle_slot,
)
from .dropping import (
    DemandVector,
    DropDecision,
    DynamicPlan,
    TransmissionVector,
    build_demand_vector,
    build_transmission_vectors,
    drop_transmissions,
    from_set_cover,
    generate_dynamic_schedule,
    greedy_drop_packets,
    optimal_drop_oracle,
)
from .mac import (
    ContendingTx,
    SlotTiming,
    TxOutcome,
    adjusted_tx_offset,
    arbitrate_slot,
    preemption_error_rate,
    priority_levels,
)
from .sim import (
    BaselineParams,
    DisturbanceSpec,
    Framework,
    MacParams,
    Metrics,
    SimConfig,
    SimTrace,
    baseline_drt,
    degradation_rate,
    run,
    success_ratio,
)

__version__ = "0.1.0"
