"""
Sharing three new ATMs between six banks
========================================

Crowd workers each back one bank and propose sites for it.  The three new
machines are split in proportion to how many proposals each bank got, then
a bank that already has many machines near the centre gives its slot to
the next best bank that has few.  Finally the proposals are clustered per
bank and one real proposal per slot is kept.
"""
from crowdplan import aggregate_points, preferential_allocation
from crowdplan.fixtures import ATM_EXISTING, atm_scene
from crowdplan.points import existing_counts

counts = {"SBI": 51, "AXIS": 24, "ICICI": 21, "BOB": 6, "HDFC": 6, "IDBI": 3}
result = preferential_allocation(counts, ATM_EXISTING, 3)
print("proportional:", result.base)
print("swaps:       ", result.swaps)
print("final:       ", result.allocation)
for line in result.rationale:
    print("  ", line)

# the same thing end to end on the generated city
batches, background, config, total = atm_scene("ATM2")
print("\nexisting machines near the centre:", existing_counts(background))
consensus = aggregate_points(batches, background, config, total)
for p, prov in zip(consensus.representatives, consensus.provenance):
    print(f"{prov.tag:<6} at ({p.x:.1f}, {p.y:.1f})  proposed as {prov.opinion}")
