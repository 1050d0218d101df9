"""Bundled toy `.bench` designs used by tests, demos, and the docs.

The ``leaky*`` designs carry deliberately secret-dependent NAND/AND cones
next to random-only OR/XOR decoy logic; ``heldout*`` are the same structural
family with unseen topologies for transfer experiments.
"""

from __future__ import annotations

from importlib import resources

from ..netlist import Netlist, parse_bench


def names() -> list[str]:
    """Names of all bundled designs."""
    out = []
    for entry in resources.files(__package__).iterdir():
        if entry.name.endswith(".bench"):
            out.append(entry.name[:-6])
    return sorted(out)


def source(name: str) -> str:
    """Raw `.bench` text of a bundled design."""
    return resources.files(__package__).joinpath(f"{name}.bench").read_text()


def load(name: str) -> Netlist:
    """Parse a bundled design."""
    return parse_bench(source(name), name=name)
