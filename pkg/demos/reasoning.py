"""Derive improvement facts between models syntactically, without touching data.

Run: python3 demos/reasoning.py
"""

from dlpkit.reasoner import closure, derive, parse_fact, parse_kb

kb = parse_kb("""
# learning m1 -> m2 improved on both survey batches
w(m1, spring, m2)
w(m1, autumn, m2)
# m2 -> m3 improved on the spring batch
w(m2, spring, m3)
""")

for query in ("w(m1, spring, m3)", "w(m1, (spring u autumn), m2)", "w(m1, autumn, m3)"):
    d = derive(kb, parse_fact(query))
    print(f"query {query}")
    print(f"  {d}".replace("\n", "\n  ") if d else "  not derivable")
    print()

facts = closure(kb, depth=1)
print(f"{len(kb)} stated facts close to {len(facts)} facts at depth 1:")
for f in sorted(facts, key=str):
    print(" ", f)
