"""Parse a netlist, inspect its structure, and simulate switching activity.

Run:  python demos/01_netlists_and_simulation.py
"""

import numpy as np

from polaris import benchmarks
from polaris.netlist import topo_order, validate, write_bench
from polaris.sim import PowerModel, evaluate, toggle_energy

# c17 is the classic tiny benchmark: 5 inputs, 2 outputs, 6 NAND gates.
c17 = benchmarks.load("c17")
print(f"{c17.name}: {c17.n_gates} gates, {len(c17.inputs)} inputs, "
      f"{len(c17.outputs)} outputs")
print("violations:", validate(c17))
print("evaluation order:", [c17.gates[i].name for i in topo_order(c17)])
print()

# single-vector evaluation: drive all inputs high
values, _ = evaluate(c17, [1, 1, 1, 1, 1])
for out in c17.outputs:
    print(f"output {c17.gates[out].name} = {values[out]} with all inputs high")
print()

# two-cycle toggle energy: a gate pays its type cost per output transition
pm = PowerModel(noise_sigma=0.0)
stimulus = np.array([[[0, 0, 0, 0, 0],
                      [1, 1, 1, 1, 1]]], dtype=np.uint8)  # one trace, 2 cycles
energy = toggle_energy(c17, stimulus, pm)[0]
print("per-gate switching energy for the all-zeros -> all-ones transition:")
for g in c17.gates:
    marker = " <- toggled" if energy[g.id] > 0 else ""
    print(f"  {g.name:>3} ({g.gtype.value:>5}): {energy[g.id]:.2f}{marker}")
print()
print("canonical round-trip:")
print(write_bench(c17))
