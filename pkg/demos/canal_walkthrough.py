"""
Sewage lines proposed by six workers
====================================

Each worker suggests two new lines for a district crossed by three canals.
Lines must stay inside the district, join a canal, keep their distance from
the canals and from each other, and be no longer than L.  We look at what
the pre-processing stages remove, then at the two consensus lines.

Run with ``python demos/canal_walkthrough.py [out.svg]``.
"""
import sys

from crowdplan import aggregate_lines, validate_dataset
from crowdplan.fixtures import canal_scene
from crowdplan.svg import render_scene

batches, background, config = canal_scene()
print(f"D1={config.d1}  D2={config.d2}  L={config.max_length}  k*={config.k_star}")

# how dirty is the raw input?
report = validate_dataset(batches, background, config)
for name, n in report.counts.items():
    print(f"{name:>20}: {n}")
print(f"error rate {report.error_rate}% of {report.total_opinions} opinions\n")

consensus = aggregate_lines(batches, background, config)

# every removal and adjustment is logged with its stage
for entry in consensus.log:
    print(f"{entry.stage:>20}  {entry.opinion:<6} {entry.action:<9} {entry.detail}")

print()
for seg, prov, size in zip(consensus.representatives, consensus.provenance, consensus.cluster_sizes):
    print(f"{prov.opinion} by {prov.annotator}: ({seg.a.x}, {seg.a.y}) -> ({seg.b.x}, {seg.b.y}), "
          f"cluster of {size}")
print(f"effective D2 = {consensus.effective_D2}")

if len(sys.argv) > 1:
    removed = {e.opinion for e in consensus.log if e.action == "removed"}
    with open(sys.argv[1], "w") as fh:
        fh.write(render_scene(background, batches, consensus, removed=removed))
    print("wrote", sys.argv[1])
