"""Incremental network embedding on a two-tier data center.

Generate a deterministic substrate plus a batch of star-shaped requests,
embed them one at a time (each request lands completely or not at all), and
let the independent verifier recompute placement counts, residual arithmetic,
and link contiguity from the final graph.
"""

import time

from graphilp import (embed_incremental, generate_scenario, render_report,
                      verify_embedding)
from graphilp.vne_model import embedding_spec
from graphilp.vne import Range, ScenarioConfig

cfg = ScenarioConfig(
    racks=2, servers_per_rack=2, core_switches=1,
    vnr_count=6, vnr_servers=Range(2, 3),
    vnr_cpu=Range(2, 10), vnr_mem=Range(4, 64), vnr_storage=Range(10, 60),
    vnr_bw=Range(100, 400), seed=7)

substrate, requests = generate_scenario(cfg)
links = sum(1 for n in substrate.nodes.values() if n.type == "SubstrateLink")
print(f"substrate: {cfg.racks * cfg.servers_per_rack} servers, "
      f"{cfg.racks} rack switches, {cfg.core_switches} core switch(es), "
      f"{links} link nodes (hops and derived two-hop paths)")
print(f"{len(requests)} requests, stars of {cfg.vnr_servers.lo}-"
      f"{cfg.vnr_servers.hi} virtual servers\n")

spec = embedding_spec()
start = time.perf_counter()
report = embed_incremental(substrate, requests, spec)
elapsed = time.perf_counter() - start

violations = verify_embedding(report, substrate, report.final)
print(render_report(report, violations))
print(f"wall time {elapsed:.1f}s")

servers = {nid: node.attrs["resCpu"] for nid, node in report.final.nodes.items()
           if node.type == "SubstrateServer"}
print("\nresidual CPU per server:", servers)
assert not violations
