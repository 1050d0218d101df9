"""Power side-channel leakage assessment and model-guided masking for
gate-level netlists.

The toolkit covers the full loop: parse a `.bench` design, measure per-gate
leakage with a Welch t-test over simulated power traces, generate labeled
training data by random masked-gate insertion, train an interpretable
boosted-stump classifier, extract Shapley-based masking rules, and apply
model-guided Trichina masking to produce a hardened netlist plus leakage and
overhead reports.
"""

__version__ = "0.1.0"

from .netlist import Gate, GateType, Netlist, parse_bench, topo_order, validate, write_bench

__all__ = [
    "Gate",
    "GateType",
    "Netlist",
    "parse_bench",
    "write_bench",
    "validate",
    "topo_order",
    "__version__",
]
