#!/usr/bin/env python3
"""Batch experiment sweeps.

Two small grids: the success ratio of distributed versus centralized handling
as the allowed response latency grows, and the mean reliability degradation
as the disturbance ramp lengthens.  The degradation-vs-ramp trend is emitted
for inspection; it is workload-dependent and not asserted anywhere.

Larger grids run from the command line, e.g.

    rtwnsim sweep --spec sweep.yaml --out-dir results --parallel 4
"""

from rtwnsim.experiments import ExperimentSpec, aggregate, run_sweep
from rtwnsim.sim import Framework

print("== success ratio vs latency bound (50 trials/point) ==")
spec = ExperimentSpec(
    utils=(0.5,),
    r_steps=(8,),
    alphas=(1, 2, 3, 4, 5, 6),
    trials=50,
    base_seed=11,
    frameworks=(Framework.FDPAS_PACKET, Framework.BASELINE_BROADCAST),
)
rows = aggregate(run_sweep(spec))
print(f"{'framework':22s} {'alpha':>5s} {'sr':>8s}")
for framework, util, r, alpha_mult, tick, n, sr, mean_dr in rows:
    print(f"{framework:22s} {alpha_mult:4d}x {sr:8.3f}")

print("\n== mean degradation vs ramp length (30 trials/point, inspection only) ==")
spec = ExperimentSpec(
    utils=(0.9,),
    r_steps=(4, 6, 8, 10, 12, 14, 16),
    alphas=(1,),
    trials=30,
    base_seed=23,
    frameworks=(Framework.FDPAS_PACKET, Framework.FDPAS_TRANSMISSION),
)
rows = aggregate(run_sweep(spec))
print(f"{'framework':22s} {'steps':>5s} {'mean dr':>9s}")
for framework, util, r, alpha_mult, tick, n, sr, mean_dr in rows:
    print(f"{framework:22s} {r:5d} {mean_dr:9.4f}")
