"""
Interest flooding: state exhaustion and the statistical limiters
================================================================

A zombie floods unsatisfiable interests (existing prefix + random suffix),
which no router can collapse and no cache can absorb. Each one squats in
every on-path PIT until it expires, so steady-state occupancy approaches
rate x lifetime. With the namespace quota and per-ingress throttling on,
the occupancy is capped and honest traffic keeps flowing.
"""

import numpy as np

from ndnshield.scenario import build_sim, load_scenario

BASE = {
    "name": "flood-demo", "duration_ms": 30000, "seed": 21,
    "defaults": {"pit_capacity": 600},
    "nodes": [
        {"id": "p", "role": "producer", "prefix": "/victim", "dynamic_prefix": "live"},
        {"id": "r1", "role": "router"}, {"id": "r2", "role": "router"},
        {"id": "h", "role": "consumer",
         "requests": {"unique_under": "/victim/live", "rate_per_s": 10,
                      "start_ms": 0, "stop_ms": 30000, "retries": 0}},
        {"id": "z", "role": "zombie"},
    ],
    "links": [
        {"endpoints": ["z", "r2"], "bandwidth_mbps": 100, "delay_ms": 1},
        {"endpoints": ["r2", "r1"], "bandwidth_mbps": 100, "delay_ms": 1},
        {"endpoints": ["h", "r1"], "bandwidth_mbps": 100, "delay_ms": 1},
        {"endpoints": ["r1", "p"], "bandwidth_mbps": 100, "delay_ms": 1},
    ],
    "fib": {"r2": [{"prefix": "/victim", "next_hops": ["r1"]}],
            "r1": [{"prefix": "/victim", "next_hops": ["p"]}]},
    "attacks": [{"kind": "flood-unsat-nonce", "zombies": ["z"], "target_prefix": "/victim",
                 "rate_per_s": 500, "start_ms": 0, "stop_ms": 30000}],
}

# --- Undefended, unbounded PIT: occupancy converges to rate x lifetime -------

doc = dict(BASE, defaults={"pit_capacity": 0})
sim = build_sim(load_scenario(doc), seed=21).run()
occupancy = np.mean([v for t, v in sim.collector.series("r1", "pit_size") if t >= 8000])
print(f"unbounded PIT, defenses off: steady occupancy {occupancy:.0f}"
      f"  (rate 500/s x lifetime 4 s = 2000)")

# --- Bounded PIT: the flood starves honest consumers -------------------------

sim = build_sim(load_scenario(BASE), seed=21).run()
print(f"bounded PIT (600), defenses off: honest satisfaction "
      f"{sim.node('h').gauges()['satisfaction_ratio']:.2f}")

# --- Defense on: quota bounds state, throttle spares the honest ingress ------

doc = dict(BASE, flooding_defense={"namespace_quotas": {"/victim": 500}})
sim = build_sim(load_scenario(doc), seed=21).run()
peak = sim.collector.max_over("r1", "pit_size")
ratio = sim.node("h").gauges()["satisfaction_ratio"]
rejected = sim.node("r1").stats["rej_namespace-quota"] + sim.node("r1").stats["rej_throttled"]
print(f"defense on: PIT peak {peak:.0f} <= quota 500, honest satisfaction {ratio:.2f}, "
      f"{rejected} attack interests rejected at r1")
