"""Circuit graph construction and BFS-locality structural feature vectors.

A gate's feature vector describes its local neighborhood: the gate itself at
position 0 followed by up to ``L - 1`` BFS neighbors over the undirected view
of the circuit.  Each position contributes a one-hot gate-type block (NONE
for unoccupied padding positions), followed by an L x L adjacency block whose
(p, q) bit means "the gate at position p drives the gate at position q".

BFS neighbor order is deterministic: when a gate is expanded, its unvisited
fanin neighbors are taken first (ascending id), then its unvisited fanout
neighbors (ascending id).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRangeError
from .netlist import GateType, Netlist

#: Position-0 padding symbol followed by the full gate vocabulary (T = 11).
TYPE_VOCAB: tuple[str, ...] = (
    "NONE", "INPUT", "AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF", "DFF",
)


@dataclass
class CircuitGraph:
    n: int
    gtype: tuple[GateType, ...]
    fanin: tuple[tuple[int, ...], ...]
    fanout: tuple[tuple[int, ...], ...]

    @property
    def n_edges(self) -> int:
        return sum(len(f) for f in self.fanin)


def graphify(netlist: Netlist) -> CircuitGraph:
    """Build the circuit graph; edge (u -> v) iff u is a fanin of v."""
    fanout: list[list[int]] = [[] for _ in netlist.gates]
    for g in netlist.gates:
        for f in g.fanin:
            fanout[f].append(g.id)
    return CircuitGraph(
        n=len(netlist.gates),
        gtype=tuple(g.gtype for g in netlist.gates),
        fanin=tuple(g.fanin for g in netlist.gates),
        fanout=tuple(tuple(sorted(fo)) for fo in fanout),
    )


@dataclass(frozen=True)
class FeatureSchema:
    """Vector layout for a given locality L over TYPE_VOCAB."""

    locality: int
    type_vocab: tuple[str, ...] = TYPE_VOCAB

    @property
    def n_types(self) -> int:
        return len(self.type_vocab)

    @property
    def feature_len(self) -> int:
        return self.locality * self.n_types + self.locality ** 2

    def to_dict(self) -> dict:
        return {"L": self.locality, "type_vocab": list(self.type_vocab)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(locality=int(d["L"]), type_vocab=tuple(d["type_vocab"]))


@dataclass
class FeatureVector:
    gate_id: int
    values: np.ndarray  # uint8, length schema.feature_len
    neighborhood: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.values)


def bfs_locality(g: CircuitGraph, root: int, locality: int) -> list[int]:
    """First ``locality`` gates of the deterministic BFS around ``root``.

    The list starts with the root; fanin neighbors of each expanded gate
    precede its fanout neighbors, ascending id within each sub-group.
    """
    if not (0 <= root < g.n):
        raise IndexOutOfRangeError(f"root {root} not in graph of size {g.n}")
    if locality < 1:
        raise ValueError("locality must be >= 1")
    visited = {root}
    order = [root]
    queue = [root]
    qi = 0
    while qi < len(queue) and len(order) < locality:
        u = queue[qi]
        qi += 1
        for v in list(sorted(g.fanin[u])) + list(g.fanout[u]):
            if v in visited:
                continue
            visited.add(v)
            order.append(v)
            queue.append(v)
            if len(order) == locality:
                break
    return order


def structural_features(g: CircuitGraph, locality: int, gate_id: int,
                        schema: FeatureSchema | None = None) -> FeatureVector:
    """Encode the BFS neighborhood of ``gate_id`` as a binary vector."""
    schema = schema or FeatureSchema(locality)
    if schema.locality != locality:
        raise ValueError("schema locality disagrees with L")
    hood = bfs_locality(g, gate_id, locality)
    T = schema.n_types
    L = schema.locality
    vec = np.zeros(schema.feature_len, dtype=np.uint8)
    type_index = {t: k for k, t in enumerate(schema.type_vocab)}
    for p in range(L):
        if p < len(hood):
            t = type_index[g.gtype[hood[p]].value]
        else:
            t = type_index["NONE"]
        vec[p * T + t] = 1
    base = L * T
    pos_of = {gid: p for p, gid in enumerate(hood)}
    for p, gid in enumerate(hood):
        for drv in g.fanout[gid]:
            q = pos_of.get(drv)
            if q is not None:
                vec[base + p * L + q] = 1
    return FeatureVector(gate_id=gate_id, values=vec, neighborhood=tuple(hood))


def feature_semantics(schema: FeatureSchema, index: int) -> str:
    """Human-readable meaning of a feature index ("G2 = NAND", "G1 drives G0")."""
    if not (0 <= index < schema.feature_len):
        raise IndexOutOfRangeError(
            f"index {index} not in [0, {schema.feature_len})")
    T = schema.n_types
    L = schema.locality
    if index < L * T:
        p, t = divmod(index, T)
        return f"G{p} = {schema.type_vocab[t]}"
    p, q = divmod(index - L * T, L)
    return f"G{p} drives G{q}"


def feature_index(schema: FeatureSchema, position: int, type_name: str) -> int:
    """Inverse of feature_semantics for type atoms."""
    return position * schema.n_types + schema.type_vocab.index(type_name)


def adjacency_index(schema: FeatureSchema, p: int, q: int) -> int:
    """Inverse of feature_semantics for drive atoms."""
    return schema.locality * schema.n_types + p * schema.locality + q
