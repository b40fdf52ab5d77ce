#!/usr/bin/env python3
"""Model discovery against the offline fixture registry.

Searches the top object-detection models, assesses each README for
serveability, and filters by what the edge nodes can actually host.
"""

from pathlib import Path

from edgeprov.edgemgr import EdgeNode
from edgeprov.registry import FixtureRegistry, ModelCatalog

HERE = Path(__file__).resolve().parent
catalog = ModelCatalog(FixtureRegistry(HERE.parent / "fixtures" / "models"))

cards = catalog.search_models("object_detection", 10)
print(f"top {len(cards)} models for 'object_detection' by downloads:\n")
for card in cards:
    catalog.assess(card)
    verdict = "servable" if card.servable else f"rejected {card.servability_reasons}"
    print(f"  {card.model_id:35s} {card.downloads:>8d} dl  {card.size_mb:7.1f} MB  {verdict}")

nodes = [
    EdgeNode("edge-cell-1", "cell_site", cpu_cores=8, mem_mb=8192, gpu_units=0,
             attach_latency_ms={"cell-1": 2.0}, allocated_cpu=6),
    EdgeNode("edge-regional-1", "regional", cpu_cores=8, mem_mb=16384, gpu_units=1,
             attach_latency_ms={"cell-1": 8.0}),
]
kept = catalog.filter_and_rank(cards, profile=None, nodes=nodes)
print(f"\n{len(kept)} remain deployable on the available nodes:")
for i, card in enumerate(kept):
    print(f"  [{i}] {card.model_id}")
