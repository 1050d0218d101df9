"""Masked gate construction: truth tables, balance, and equivalence.

A masked AND computes (a.b) ^ z from blinded shares without any internal
net whose distribution depends on (a, b).  Masking a gate inside a netlist
wraps it in share XORs, the masked composite, and a final unmask XOR, so
the surrounding circuit is functionally unchanged.

Run:  python demos/03_masked_gates.py
"""

import itertools

from polaris.masking import TEMPLATES, mask_gate, trichina_and
from polaris.netlist import GateType, parse_bench, write_bench
from polaris.sim import equivalence_mismatches

print("masked AND value for every (a, b, x, y, z):")
print("  a b | x y z | masked  unmasked(=a.b)")
for a, b in itertools.product((0, 1), repeat=2):
    for x, y, z in itertools.product((0, 1), repeat=3):
        m = trichina_and(a, b, x, y, z)
        print(f"  {a} {b} | {x} {y} {z} |   {m}       {m ^ z}")
    print("  ----+-------+")
print()

print("per-node one-probability over uniform masks, by secret input pair:")
template = TEMPLATES[GateType.AND]
header = "  ".join(f"(a={a},b={b})" for a, b in itertools.product((0, 1), repeat=2))
print(f"  {'node':>4} | {header}")
for role in template.roles + ("out",):
    probs = []
    for a, b in itertools.product((0, 1), repeat=2):
        ones = sum(template.node_values(a, b, x, y, z)[role]
                   for x, y, z in itertools.product((0, 1), repeat=3))
        probs.append(ones / 8)
    row = "  ".join(f"{p:^9.3f}" for p in probs)
    note = "" if len(set(probs)) == 1 else "   <- depends on the secret"
    print(f"  {role:>4} | {row}{note}")
print("  (every internal row is constant; only the unmasked output varies)")
print()

design = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = AND(a, b)", name="and1")
masked = mask_gate(design, design.id_of("f"))
print(f"masking one AND: {design.n_gates} -> {masked.n_gates} gates, "
      f"{len(design.inputs)} -> {len(masked.inputs)} inputs")
mismatches = equivalence_mismatches(design, masked)  # exhaustive, 10 free bits
print(f"exhaustive functional equivalence: "
      f"{'ok' if not mismatches else mismatches}")
print()
print(write_bench(masked))
