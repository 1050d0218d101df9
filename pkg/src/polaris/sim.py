"""Cycle-accurate logic simulation and toggle-based power trace generation.

Power model: each gate contributes ``cost(gate type)`` units per output
transition, summed over the cycles of a trace, plus optional Gaussian noise
added once per trace per gate.  Only relative magnitudes matter for the
t-test downstream, so costs are unitless and roughly monotone in CMOS
transistor count.

Fixed-vs-random acquisition: a designated subset of primary inputs is the
"secret".  The fixed group holds those inputs at a fixed bit vector for every
trace; the random group draws them fresh per trace (held across the cycles
within a trace).  All other inputs, including masking inputs of hardened
designs, are drawn uniformly per cycle in both groups.

All randomness comes from counter-based streams keyed by
(seed, domain, group, trace, cycle, lane), so generation is deterministic,
order-independent, and safe to shard.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TYPE_CHECKING

import numpy as np

from . import rng
from .errors import NoSecretInputsError
from .netlist import GateType, Netlist, topo_order

if TYPE_CHECKING:  # avoid a circular import; accumulators live in tvla
    from .tvla import MomentAccumulator


class Group(enum.Enum):
    FIXED = 0
    RANDOM = 1


#: Relative per-toggle switching cost by gate type.
DEFAULT_COSTS: dict[GateType, float] = {
    GateType.INPUT: 0.0,
    GateType.NOT: 0.67,
    GateType.BUF: 0.67,
    GateType.NAND: 1.0,
    GateType.NOR: 1.0,
    GateType.AND: 1.33,
    GateType.OR: 1.33,
    GateType.XOR: 2.0,
    GateType.XNOR: 2.0,
    GateType.DFF: 4.0,
}

#: 5% of the mean non-INPUT gate cost; keeps no gate exactly zero-variance.
DEFAULT_NOISE_SIGMA = 0.05 * (
    sum(c for t, c in DEFAULT_COSTS.items() if t is not GateType.INPUT) / 9
)

_BATCH = 2048


@dataclass(frozen=True)
class PowerModel:
    costs: dict[GateType, float] = field(default_factory=lambda: dict(DEFAULT_COSTS))
    noise_sigma: float = DEFAULT_NOISE_SIGMA

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if any(not math.isfinite(c) or c < 0 for c in self.costs.values()):
            raise ValueError("costs must be finite and >= 0")

    def cost_vector(self, netlist: Netlist) -> np.ndarray:
        return np.array([self.costs[g.gtype] for g in netlist.gates])


@dataclass(frozen=True)
class StimulusSpec:
    secret_inputs: tuple[int, ...]
    fixed_value: tuple[int, ...]
    group: Group
    cycles_per_trace: int = 2
    seed: int = 0

    def __post_init__(self):
        if len(self.fixed_value) != len(self.secret_inputs):
            raise ValueError("fixed_value length must match secret_inputs")
        if self.cycles_per_trace < 2:
            raise ValueError("cycles_per_trace must be >= 2")


def default_secret_inputs(netlist: Netlist) -> tuple[int, ...]:
    """First quarter (rounded up) of the non-mask primary inputs."""
    plain = [i for i in netlist.inputs if not netlist.gates[i].name.startswith("_m")]
    if not plain:
        return ()
    return tuple(plain[: math.ceil(len(plain) / 4)])


def dff_ids(netlist: Netlist) -> tuple[int, ...]:
    return tuple(g.id for g in netlist.gates if g.gtype is GateType.DFF)


def evaluate(netlist: Netlist, pi_values, state=()) -> tuple[list[int], list[int]]:
    """Single-vector boolean evaluation; returns (all gate values, next state).

    DFF gates output the supplied state this cycle and capture their fanin
    value into the next state.
    """
    vals, nxt = evaluate_batch(
        netlist,
        np.asarray(pi_values, dtype=np.uint8).reshape(1, -1),
        np.asarray(state, dtype=np.uint8).reshape(1, -1),
    )
    return [int(v) for v in vals[0]], [int(s) for s in nxt[0]]


def evaluate_batch(netlist: Netlist, pi_matrix: np.ndarray,
                   state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate many input vectors at once.

    pi_matrix: (n_traces, n_inputs) uint8 in netlist.inputs order.
    state: (n_traces, n_dffs) uint8 in dff_ids order.
    """
    n_traces = pi_matrix.shape[0]
    if pi_matrix.shape[1] != len(netlist.inputs):
        raise ValueError("pi_matrix width must equal the input count")
    vals = np.empty((n_traces, len(netlist.gates)), dtype=np.uint8)
    in_col = {gid: k for k, gid in enumerate(netlist.inputs)}
    dff_col = {gid: k for k, gid in enumerate(dff_ids(netlist))}
    for gid in topo_order(netlist):
        g = netlist.gates[gid]
        t = g.gtype
        if t is GateType.INPUT:
            vals[:, gid] = pi_matrix[:, in_col[gid]]
        elif t is GateType.DFF:
            vals[:, gid] = state[:, dff_col[gid]]
        elif t is GateType.BUF:
            vals[:, gid] = vals[:, g.fanin[0]]
        elif t is GateType.NOT:
            vals[:, gid] = vals[:, g.fanin[0]] ^ 1
        elif t in (GateType.AND, GateType.NAND):
            acc = vals[:, g.fanin[0]].copy()
            for f in g.fanin[1:]:
                acc &= vals[:, f]
            vals[:, gid] = acc ^ 1 if t is GateType.NAND else acc
        elif t in (GateType.OR, GateType.NOR):
            acc = vals[:, g.fanin[0]].copy()
            for f in g.fanin[1:]:
                acc |= vals[:, f]
            vals[:, gid] = acc ^ 1 if t is GateType.NOR else acc
        else:  # XOR / XNOR: parity and its complement
            acc = vals[:, g.fanin[0]].copy()
            for f in g.fanin[1:]:
                acc ^= vals[:, f]
            vals[:, gid] = acc ^ 1 if t is GateType.XNOR else acc
    nxt = np.empty((n_traces, len(dff_col)), dtype=np.uint8)
    for gid, k in dff_col.items():
        nxt[:, k] = vals[:, netlist.gates[gid].fanin[0]]
    return vals, nxt


def toggle_energy(netlist: Netlist, stimulus: np.ndarray, pm: PowerModel,
                  state0: np.ndarray | None = None) -> np.ndarray:
    """Noise-free per-gate toggle energy for explicit stimulus.

    stimulus: (n_traces, cycles, n_inputs) uint8.  Returns (n_traces,
    n_gates) where each entry is (#output transitions) * cost(type).
    """
    n_traces, cycles, _ = stimulus.shape
    if cycles < 2:
        raise ValueError("need at least 2 cycles for a transition")
    state = (np.zeros((n_traces, len(dff_ids(netlist))), dtype=np.uint8)
             if state0 is None else state0.astype(np.uint8))
    toggles = np.zeros((n_traces, len(netlist.gates)), dtype=np.int64)
    prev = None
    for c in range(cycles):
        vals, state = evaluate_batch(netlist, stimulus[:, c, :], state)
        if prev is not None:
            toggles += prev != vals
        prev = vals
    return toggles * pm.cost_vector(netlist)


def _stimulus_batch(netlist: Netlist, spec: StimulusSpec,
                    trace_ids: np.ndarray) -> np.ndarray:
    """(batch, cycles, n_inputs) stimulus for the given absolute trace ids."""
    input_ids = np.array(netlist.inputs, dtype=np.int64)
    n_in = len(input_ids)
    cycles = spec.cycles_per_trace
    out = np.empty((len(trace_ids), cycles, n_in), dtype=np.uint8)
    for c in range(cycles):
        out[:, c, :] = rng.bits(spec.seed, rng.DOMAIN_INPUT, spec.group.value,
                                c, trace_ids[:, None], input_ids[None, :])
    if spec.secret_inputs:
        missing = [s for s in spec.secret_inputs if s not in set(netlist.inputs)]
        if missing:
            raise ValueError(f"secret ids {missing} are not primary inputs")
        cols = [int(np.where(input_ids == s)[0][0]) for s in spec.secret_inputs]
        if spec.group is Group.FIXED:
            fixed = np.array(spec.fixed_value, dtype=np.uint8)
            out[:, :, cols] = fixed[None, None, :]
        else:
            sec = rng.bits(spec.seed, rng.DOMAIN_SECRET, spec.group.value,
                           trace_ids[:, None],
                           np.array(spec.secret_inputs)[None, :])
            out[:, :, cols] = sec[:, None, :]
    return out


def gen_traces(netlist: Netlist, spec: StimulusSpec, pm: PowerModel,
               n_traces: int) -> Iterator[np.ndarray]:
    """Yield one per-gate energy sample vector per trace.

    Deterministic given (spec, pm, n_traces); traces are generated in
    fixed-size internal batches but yielded one at a time.
    """
    if n_traces < 1:
        raise ValueError("n_traces must be >= 1")
    if not spec.secret_inputs:
        raise NoSecretInputsError(
            "no secret inputs: fixed and random groups would be identical")
    for start in range(0, n_traces, _BATCH):
        for row in trace_batch(netlist, spec, pm, start,
                               min(_BATCH, n_traces - start)):
            yield row


def trace_batch(netlist: Netlist, spec: StimulusSpec, pm: PowerModel,
                start: int, count: int) -> np.ndarray:
    """(count, n_gates) energy samples for traces [start, start+count)."""
    trace_ids = np.arange(start, start + count, dtype=np.int64)
    stim = _stimulus_batch(netlist, spec, trace_ids)
    energy = toggle_energy(netlist, stim, pm)
    if pm.noise_sigma > 0:
        gate_ids = np.arange(len(netlist.gates), dtype=np.int64)
        noise = rng.normals(spec.seed, rng.DOMAIN_NOISE, spec.group.value,
                            trace_ids[:, None], gate_ids[None, :])
        energy = energy + pm.noise_sigma * noise
    return energy


def group_stats(traces: Iterable[np.ndarray],
                acc_per_gate: "MomentAccumulator") -> "MomentAccumulator":
    """Fold each trace sample once into the per-gate accumulators.

    The stream is never buffered; the accumulator is an array-valued moment
    accumulator with one lane per gate.
    """
    for row in traces:
        acc_per_gate = acc_per_gate.update(row)
    return acc_per_gate


# --- masked-design functional equivalence oracle ---

def equivalence_mismatches(original: Netlist, masked: Netlist,
                           n_vectors: int = 10_000, cycles: int = 2,
                           seed: int = 0,
                           exhaustive_limit: int = 12) -> list[tuple]:
    """Compare primary outputs of a design and its masked transform.

    Exhaustive over all (input x cycle, initial state) assignments when the
    free-bit count is at most ``exhaustive_limit``; otherwise ``n_vectors``
    random assignments.  Returns a list of (vector, cycle, output name)
    mismatches; empty means equivalent on everything driven.
    """
    orig_out = [original.gates[o].name for o in original.outputs]
    mask_out = [masked.gates[o].name for o in masked.outputs]
    if orig_out != mask_out:
        return [(-1, -1, "output lists differ")]
    n_in = len(masked.inputs)
    n_state = len(dff_ids(original))
    free_bits = n_in * cycles + n_state
    if free_bits <= exhaustive_limit:
        n_vec = 1 << free_bits
        codes = np.arange(n_vec, dtype=np.uint64)
        flat = np.zeros((n_vec, free_bits), dtype=np.uint8)
        for b in range(free_bits):
            flat[:, b] = (codes >> np.uint64(b)) & np.uint64(1)
    else:
        n_vec = n_vectors
        lanes = np.arange(free_bits, dtype=np.int64)
        flat = rng.bits(seed, 0x0E, np.arange(n_vec)[:, None], lanes[None, :])
    stim_masked = flat[:, : n_in * cycles].reshape(n_vec, cycles, n_in)
    state_m = flat[:, n_in * cycles:]
    # original sees the shared input columns (masked appends masks at the end)
    stim_orig = stim_masked[:, :, : len(original.inputs)]
    state_o = state_m.copy()

    out_ids_o = list(original.outputs)
    out_ids_m = list(masked.outputs)
    mismatches: list[tuple] = []
    so, sm = state_o, state_m
    for c in range(cycles):
        vo, so = evaluate_batch(original, stim_orig[:, c, :], so)
        vm, sm = evaluate_batch(masked, stim_masked[:, c, :], sm)
        diff = vo[:, out_ids_o] != vm[:, out_ids_m]
        if diff.any():
            for vec_i, out_i in zip(*np.nonzero(diff)):
                mismatches.append((int(vec_i), c, orig_out[out_i]))
                if len(mismatches) >= 20:
                    return mismatches
    return mismatches


# --- optional binary trace dump ---

_MAGIC = b"PTRC"
_DUMP_VERSION = 1


def write_traces(path, samples: np.ndarray) -> None:
    """Dump (n_traces, n_gates) samples: little-endian header + f64 rows."""
    samples = np.asarray(samples, dtype="<f8")
    n_traces, n_gates = samples.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _DUMP_VERSION, n_gates, n_traces))
        fh.write(samples.tobytes(order="C"))


def read_traces(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a trace dump (bad magic)")
        version, n_gates, n_traces = struct.unpack("<III", fh.read(12))
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported trace dump version {version}")
        data = np.frombuffer(fh.read(8 * n_gates * n_traces), dtype="<f8")
    return data.reshape(n_traces, n_gates).copy()
