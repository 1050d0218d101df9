"""Gate-level netlist data model with a `.bench` parser, writer, and validator.

The `.bench` grammar accepted here (ISCAS-85 style), line by line:

    # comment
    INPUT(<id>)
    OUTPUT(<id>)
    <id> = <OP>(<id>{, <id>})

where ``<id>`` matches ``[A-Za-z_][A-Za-z0-9_]*`` or ``[0-9]+[A-Za-z0-9_]*``
and ``<OP>`` is one of AND, NAND, OR, NOR, XOR, XNOR, NOT, BUF, BUFF, DFF.
Keywords are case-insensitive, identifiers are case-sensitive, ``BUFF`` is an
alias for BUF, and line endings may be LF or CRLF.

Gate ids are dense integers assigned in topological order of declaration
(declaration order is the tie-break among ready gates), treating INPUT and
DFF gates as sources.  All downstream modules speak ids; names appear only at
I/O boundaries.
"""

from __future__ import annotations

import enum
import heapq
import re
from dataclasses import dataclass, field

from .errors import (
    ArityMismatchError,
    BenchSyntaxError,
    CombinationalCycleError,
    CycleError,
    DuplicateDefinitionError,
    UndefinedSignalError,
)


class GateType(enum.Enum):
    INPUT = "INPUT"
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUF = "BUF"
    DFF = "DFF"

    def arity_ok(self, n: int) -> bool:
        if self is GateType.INPUT:
            return n == 0
        if self in (GateType.NOT, GateType.BUF, GateType.DFF):
            return n == 1
        return n >= 2


# Gate types that consume their fanins combinationally (everything but DFF,
# whose fanin is a next-state edge, and INPUT, which has none).
_COMBINATIONAL = frozenset(t for t in GateType if t not in (GateType.INPUT, GateType.DFF))

_OP_ALIASES = {"BUFF": "BUF"}

_IDENT = r"(?:[A-Za-z_][A-Za-z0-9_]*|[0-9]+[A-Za-z0-9_]*)"
_RE_DECL = re.compile(rf"^(INPUT|OUTPUT)\s*\(\s*({_IDENT})\s*\)$", re.IGNORECASE)
_RE_DEF = re.compile(rf"^({_IDENT})\s*=\s*([A-Za-z]+)\s*\(\s*([^()]*?)\s*\)$")
_RE_IDENT = re.compile(rf"^{_IDENT}$")


@dataclass(frozen=True)
class Gate:
    id: int
    name: str
    gtype: GateType
    fanin: tuple[int, ...]
    is_output: bool = False


@dataclass
class Netlist:
    """Immutable-by-convention design: gates indexed by dense id.

    ``origins`` maps gate ids introduced by masking transforms back to the
    id of the gate they replace; it is empty for freshly parsed designs.
    """

    name: str
    gates: tuple[Gate, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    origins: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self._name_to_id = None

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    def id_of(self, name: str) -> int:
        if self._name_to_id is None:
            self._name_to_id = {g.name: g.id for g in self.gates}
        return self._name_to_id[name]

    def fanout_map(self) -> list[list[int]]:
        """Per-id list of gate ids driven by that gate (transpose of fanin)."""
        fo: list[list[int]] = [[] for _ in self.gates]
        for g in self.gates:
            for f in g.fanin:
                fo[f].append(g.id)
        return fo


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse `.bench` text into a Netlist.

    Raises BenchSyntaxError (with line number), DuplicateDefinitionError,
    UndefinedSignalError, ArityMismatchError, or CombinationalCycleError.
    """
    inputs_decl: list[str] = []       # names in declaration order
    outputs_decl: list[str] = []
    defs: dict[str, tuple[GateType, tuple[str, ...]]] = {}
    decl_order: dict[str, int] = {}   # name -> position of its defining line
    decl_counter = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _RE_DECL.match(line)
        if m:
            kind, ident = m.group(1).upper(), m.group(2)
            if kind == "INPUT":
                if ident in decl_order:
                    raise DuplicateDefinitionError(
                        f"line {lineno}: '{ident}' already defined")
                inputs_decl.append(ident)
                defs[ident] = (GateType.INPUT, ())
                decl_order[ident] = decl_counter
                decl_counter += 1
            else:
                if ident not in outputs_decl:  # repeated OUTPUT is harmless
                    outputs_decl.append(ident)
            continue
        m = _RE_DEF.match(line)
        if m:
            ident, op_raw, args_raw = m.group(1), m.group(2).upper(), m.group(3)
            op_raw = _OP_ALIASES.get(op_raw, op_raw)
            try:
                gtype = GateType[op_raw]
            except KeyError:
                raise BenchSyntaxError(f"unknown operator '{m.group(2)}'", lineno) from None
            if gtype is GateType.INPUT:
                raise BenchSyntaxError("INPUT is not a gate operator", lineno)
            args = tuple(a.strip() for a in args_raw.split(",")) if args_raw.strip() else ()
            for a in args:
                if not _RE_IDENT.match(a):
                    raise BenchSyntaxError(f"bad identifier '{a}'", lineno)
            if ident in decl_order:
                raise DuplicateDefinitionError(f"line {lineno}: '{ident}' already defined")
            if not gtype.arity_ok(len(args)):
                raise ArityMismatchError(
                    f"line {lineno}: {gtype.value} takes "
                    f"{'1 input' if gtype in (GateType.NOT, GateType.BUF, GateType.DFF) else '>= 2 inputs'},"
                    f" got {len(args)}")
            defs[ident] = (gtype, args)
            decl_order[ident] = decl_counter
            decl_counter += 1
            continue
        raise BenchSyntaxError(f"cannot parse '{line}'", lineno)

    # Resolve references.
    for ident, (_, args) in defs.items():
        for a in args:
            if a not in defs:
                raise UndefinedSignalError(f"'{a}' (fanin of '{ident}') is never defined")
    for o in outputs_decl:
        if o not in defs:
            raise UndefinedSignalError(f"OUTPUT '{o}' is never defined")

    ids = _assign_ids(defs, decl_order)

    out_set = set(outputs_decl)
    gates = [None] * len(defs)
    for ident, (gtype, args) in defs.items():
        gid = ids[ident]
        gates[gid] = Gate(
            id=gid,
            name=ident,
            gtype=gtype,
            fanin=tuple(ids[a] for a in args),
            is_output=ident in out_set,
        )
    return Netlist(
        name=name,
        gates=tuple(gates),
        inputs=tuple(ids[i] for i in inputs_decl),
        outputs=tuple(ids[o] for o in outputs_decl),
    )


def _assign_ids(defs, decl_order) -> dict[str, int]:
    """Topological ids; ready gates drain in declaration order.

    INPUT and DFF gates are sources (DFF fanins are next-state edges, not
    ordering constraints), so cycles through a DFF are fine and purely
    combinational cycles are an error.
    """
    indeg = {ident: 0 for ident in defs}
    dependents: dict[str, list[str]] = {ident: [] for ident in defs}
    for ident, (gtype, args) in defs.items():
        if gtype in (GateType.INPUT, GateType.DFF):
            continue
        indeg[ident] = len(args)
        for a in args:
            dependents[a].append(ident)

    ready = [(decl_order[i], i) for i, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    ids: dict[str, int] = {}
    while ready:
        _, ident = heapq.heappop(ready)
        ids[ident] = len(ids)
        for dep in dependents[ident]:
            indeg[dep] -= 1
            if indeg[dep] == 0:
                heapq.heappush(ready, (decl_order[dep], dep))
    if len(ids) != len(defs):
        stuck = sorted(set(defs) - set(ids))
        raise CombinationalCycleError(
            f"combinational cycle through {', '.join(stuck[:8])}")
    return ids


def write_bench(n: Netlist) -> str:
    """Render a Netlist back to canonical `.bench` text.

    Deterministic: header comment, INPUT lines in input order, OUTPUT lines
    in output order, then gate definitions in ascending id order.
    """
    lines = [f"# {n.name}"]
    for i in n.inputs:
        lines.append(f"INPUT({n.gates[i].name})")
    for o in n.outputs:
        lines.append(f"OUTPUT({n.gates[o].name})")
    for g in n.gates:
        if g.gtype is GateType.INPUT:
            continue
        args = ", ".join(n.gates[f].name for f in g.fanin)
        lines.append(f"{g.name} = {g.gtype.value}({args})")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Violation:
    code: str
    gate_id: int  # -1 for netlist-level violations
    message: str


def validate(n: Netlist) -> list[Violation]:
    """Check all structural invariants; returns violations instead of raising."""
    v: list[Violation] = []
    names = {}
    for idx, g in enumerate(n.gates):
        if g.id != idx:
            v.append(Violation("ID_MISMATCH", g.id, f"gate at index {idx} has id {g.id}"))
        if g.name in names:
            v.append(Violation("DUPLICATE_DEFINITION", g.id,
                               f"name '{g.name}' also used by gate {names[g.name]}"))
        names[g.name] = g.id
        for f in g.fanin:
            if not (0 <= f < len(n.gates)):
                v.append(Violation("UNDEFINED_SIGNAL", g.id, f"fanin id {f} out of range"))
        if not g.gtype.arity_ok(len(g.fanin)):
            v.append(Violation("ARITY_MISMATCH", g.id,
                               f"{g.gtype.value} gate with {len(g.fanin)} fanins"))
    input_ids = {g.id for g in n.gates if g.gtype is GateType.INPUT}
    if set(n.inputs) != input_ids:
        v.append(Violation("INPUT_LIST", -1, "inputs list disagrees with INPUT gates"))
    for o in n.outputs:
        if not (0 <= o < len(n.gates)):
            v.append(Violation("UNDEFINED_SIGNAL", -1, f"output id {o} out of range"))
        elif not n.gates[o].is_output:
            v.append(Violation("OUTPUT_FLAG", o, "output gate not flagged is_output"))
    v.extend(_cycle_violations(n))
    return v


def _cycle_violations(n: Netlist) -> list[Violation]:
    indeg = [0] * len(n.gates)
    deps = [[] for _ in n.gates]
    for g in n.gates:
        if g.gtype in (GateType.INPUT, GateType.DFF):
            continue
        for f in g.fanin:
            if 0 <= f < len(n.gates):
                indeg[g.id] += 1
                deps[f].append(g.id)
    stack = [i for i, d in enumerate(indeg) if d == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for w in deps[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    if seen == len(n.gates):
        return []
    stuck = [i for i, d in enumerate(indeg) if d > 0]
    return [Violation("COMBINATIONAL_CYCLE", i, "gate lies on a combinational cycle")
            for i in stuck]


def topo_order(n: Netlist) -> list[int]:
    """Topological order over combinational edges, ascending-id tie-break.

    DFF outputs are sources: they may appear before the gate driving their
    next-state input.  Raises CycleError on a combinational cycle.
    """
    indeg = [0] * len(n.gates)
    deps = [[] for _ in n.gates]
    for g in n.gates:
        if g.gtype in (GateType.INPUT, GateType.DFF):
            continue
        indeg[g.id] = len(g.fanin)
        for f in g.fanin:
            deps[f].append(g.id)
    ready = [i for i, d in enumerate(indeg) if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for w in deps[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != len(n.gates):
        raise CycleError("combinational cycle prevents ordering")
    return order


def isomorphic(a: Netlist, b: Netlist) -> bool:
    """Name-preserving structural equality (ids may differ)."""
    if len(a.gates) != len(b.gates):
        return False
    try:
        for g in a.gates:
            h = b.gates[b.id_of(g.name)]
            if h.gtype is not g.gtype or h.is_output != g.is_output:
                return False
            if tuple(a.gates[f].name for f in g.fanin) != tuple(b.gates[f].name for f in h.fanin):
                return False
    except KeyError:
        return False
    a_in = tuple(a.gates[i].name for i in a.inputs)
    b_in = tuple(b.gates[i].name for i in b.inputs)
    a_out = tuple(a.gates[i].name for i in a.outputs)
    b_out = tuple(b.gates[i].name for i in b.outputs)
    return a_in == b_in and a_out == b_out
