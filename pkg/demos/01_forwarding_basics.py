"""
Forwarding basics: names, signed packets, caching, interest collapsing
======================================================================

A walk through the data plane: hierarchical names, the two packet kinds,
what the matching predicate does, and the two router behaviors that make
the architecture resistant to naive volumetric attacks (in-network
caching and interest collapsing).
"""

from ndnshield import KeyPair, Rng, interest_matches, parse_name, sign_packet
from ndnshield.packets import Interest
from ndnshield.scenario import build_sim, load_scenario

# --- Names are ordered lists of opaque components ---------------------------

name = parse_name("/ndn/cnn/news/2012may20")
print("name:", name, "components:", [c.decode() for c in name.components])
print("is /ndn/cnn a prefix?", parse_name("/ndn/cnn").is_prefix_of(name))

# --- Every data packet is signed; its final name component is its own hash --

key = KeyPair.generate(Rng(seed=1, label="demo-producer"))
packet = sign_packet(parse_name("/ndn/cnn/news/2012may20"), b"breaking news", key)
print("\nwire name:", packet.name)
print("producer digest:", packet.publisher_key_digest.hex()[:16], "...")

plain = Interest(parse_name("/ndn/cnn"), nonce=1)
pinned = Interest(parse_name("/ndn/cnn"), nonce=2, publisher_key_digest=key.digest)
wrong = Interest(parse_name("/ndn/cnn"), nonce=3, publisher_key_digest=bytes(32))
print("\nmatches plain prefix interest:       ", interest_matches(packet, plain))
print("matches interest pinning our key:    ", interest_matches(packet, pinned))
print("matches interest pinning a wrong key:", interest_matches(packet, wrong))

# --- Collapsing: 20 consumers, one upstream interest -------------------------

doc = {
    "name": "collapse-demo", "duration_ms": 1500, "seed": 7,
    "nodes": (
        [{"id": "p", "role": "producer", "prefix": "/ndn/cnn", "static_names": ["front-page"]},
         {"id": "r", "role": "router"}]
        + [{"id": f"c{i:02d}", "role": "consumer",
            "requests": {"names": ["/ndn/cnn/front-page"], "at_ms": [10 * i], "retries": 0}}
           for i in range(20)]
    ),
    "links": ([{"endpoints": ["r", "p"], "bandwidth_mbps": 100, "delay_ms": 200}]
              + [{"endpoints": [f"c{i:02d}", "r"], "bandwidth_mbps": 100, "delay_ms": 1}
                 for i in range(20)]),
    "fib": {"r": [{"prefix": "/ndn/cnn", "next_hops": ["p"]}]},
}
sim = build_sim(load_scenario(doc), seed=7).run()
print("\n20 consumers asked for the same content within one lifetime:")
print("  producer saw", sim.node("p").stats["interests_received"], "interest(s)")
print("  router collapsed", sim.node("r").stats["interests_collapsed"], "of them")
print("  deliveries:", sum(sim.node(f"c{i:02d}").stats["received_valid"] for i in range(20)))
