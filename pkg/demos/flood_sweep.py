"""
Connection-request flooding: a small parameter sweep
====================================================

How fast does a looping attacker drain the connection pool, and how much
does it hurt ordinary users when the eNB stays up?
"""

import numpy as np

from ltesig.floodsim import SimConfig, blocking_probability, metrics_csv, run_simulation

base = SimConfig(resource_pool_size=16, setup_complete_timeout_ms=1000,
                 legit_arrival_rate_per_s=5, legit_hold_time_ms=400,
                 crash_on_overflow=False, duration_ms=30_000, rng_seed=11)

# time to exhaustion grows linearly with the loop period
periods = np.array([2.0, 5.0, 10.0, 20.0, 50.0])
tte = []
for period in periods:
    r = run_simulation(base.replace(attacker_policy="release_loop", attacker_loop_period_ms=period))
    tte.append(r.time_to_exhaustion_ms)
print("loop period (ms):", periods)
print("exhausted at (ms):", tte)

# a throttled attacker below the exhaustion rate still raises blocking
for period in (50.0, 70.0, 100.0, 200.0):
    r = run_simulation(base.replace(attacker_policy="throttled", throttle_period_ms=period))
    print("throttle %5.0f ms  blocking %.3f" % (period, blocking_probability(r)))

quiet = run_simulation(base)
print("no attacker       blocking %.3f" % blocking_probability(quiet))

# deferring allocation until setup completes removes the attacker's leverage
defended = run_simulation(base.replace(attacker_policy="release_loop", attacker_loop_period_ms=2,
                                       mitigation="deferred_allocation"))
print("deferred, 2 ms loop: blocking %.3f, peak half-open %d"
      % (blocking_probability(defended), defended.peak_half_open))

print(metrics_csv([quiet, defended]))
