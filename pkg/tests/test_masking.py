"""Masked gate construction and netlist transform tests."""

import itertools

import pytest

from polaris import sim
from polaris.errors import AlreadyMaskedError, UnmaskableTypeError
from polaris.masking import (
    MASKABLE_TYPES,
    TEMPLATES,
    is_maskable,
    mask_gate,
    maskable_ids,
    masked_gate_ids,
    modify,
    origin_map_names,
    overhead_estimate,
    trichina_and,
    trichina_or,
)
from polaris.netlist import GateType, parse_bench, validate, write_bench

ALL32 = list(itertools.product((0, 1), repeat=5))

PLAIN = {
    GateType.AND: lambda a, b: a & b,
    GateType.NAND: lambda a, b: 1 - (a & b),
    GateType.OR: lambda a, b: a | b,
    GateType.NOR: lambda a, b: 1 - (a | b),
    GateType.XOR: lambda a, b: a ^ b,
    GateType.XNOR: lambda a, b: 1 - (a ^ b),
}


def test_trichina_and_zero_masks_is_plain_and():
    assert trichina_and(1, 1, 0, 0, 0) == 1
    for a, b in itertools.product((0, 1), repeat=2):
        assert trichina_and(a, b, 0, 0, 0) == (a & b)


def test_trichina_and_hand_case_all_ones():
    # hand evaluation of the masked-AND formula at a=b=x=y=z=1
    assert trichina_and(1, 1, 1, 1, 1) == 0  # unmasked: 0 ^ 1 = 1 = a&b


def test_trichina_and_exhaustive():
    for a, b, x, y, z in ALL32:
        assert trichina_and(a, b, x, y, z) ^ z == (a & b)


def test_trichina_or_zero_masks_is_plain_or():
    for a, b in itertools.product((0, 1), repeat=2):
        assert trichina_or(a, b, 0, 0, 0) == (a | b)


def test_trichina_or_exhaustive():
    for a, b, x, y, z in ALL32:
        assert trichina_or(a, b, x, y, z) ^ z == (a | b)
    # a=0, b=0: unmasked result is 0 under any masks
    for x, y, z in itertools.product((0, 1), repeat=3):
        assert trichina_or(0, 0, x, y, z) ^ z == 0


def test_templates_compute_target_function():
    for gtype, template in TEMPLATES.items():
        for a, b, x, y, z in ALL32:
            env = template.node_values(a, b, x, y, z)
            assert env["out"] == PLAIN[gtype](a, b), (gtype, (a, b, x, y, z))


def test_templates_internal_nodes_balanced_or_constant():
    # For each internal net, the probability of 1 over uniform (x, y, z)
    # must not depend on (a, b): exactly 1/2 or the same constant for every
    # input pair.  The output net is the functionally required unmasked value
    # and is excluded.
    for gtype, template in TEMPLATES.items():
        per_node: dict[str, list[float]] = {r: [] for r in template.roles}
        for a, b in itertools.product((0, 1), repeat=2):
            counts = {r: 0 for r in template.roles}
            for x, y, z in itertools.product((0, 1), repeat=3):
                env = template.node_values(a, b, x, y, z)
                for r in template.roles:
                    counts[r] += env[r]
            for r in template.roles:
                per_node[r].append(counts[r] / 8.0)
        for r, probs in per_node.items():
            assert len(set(probs)) == 1, f"{gtype} node {r} leaks: {probs}"
            assert probs[0] in (0.0, 0.25, 0.5, 0.75, 1.0)


AND1 = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = AND(a, b)", name="and1")


def test_mask_gate_counts_for_and():
    m = mask_gate(AND1, AND1.id_of("f"))
    non_input = lambda n: sum(g.gtype is not GateType.INPUT for g in n.gates)
    assert non_input(m) - non_input(AND1) == 8
    assert len(m.inputs) - len(AND1.inputs) == 3
    assert validate(m) == []


def test_mask_gate_preserves_ids_and_names():
    fid = AND1.id_of("f")
    m = mask_gate(AND1, fid)
    for g in AND1.gates:
        assert m.gates[g.id].name == g.name
    assert m.gates[fid].gtype is GateType.XOR  # unmask gate reuses the id
    assert m.gates[fid].is_output
    assert m.outputs == AND1.outputs
    # every inserted gate is origin-annotated
    new_ids = set(range(AND1.n_gates, m.n_gates))
    assert set(m.origins) == new_ids
    assert set(m.origins.values()) == {fid}


def test_mask_input_names():
    m = mask_gate(AND1, AND1.id_of("f"))
    names = {g.name for g in m.gates}
    assert {"_mx0", "_my0", "_mz0"} <= names


def test_mask_name_collision_skips_index():
    n = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(_mx0)\nOUTPUT(f)\nf = AND(a, b)")
    m = mask_gate(n, n.id_of("f"))
    names = {g.name for g in m.gates}
    assert {"_mx1", "_my1", "_mz1"} <= names
    assert validate(m) == []


def test_mask_gate_exhaustive_equivalence_all_types():
    for op in ("AND", "NAND", "OR", "NOR", "XOR", "XNOR"):
        n = parse_bench(f"INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = {op}(a, b)",
                        name=op.lower())
        m = mask_gate(n, n.id_of("f"))
        # 5 inputs x 2 cycles = 10 free bits: exhaustive
        assert sim.equivalence_mismatches(n, m) == []


def test_mask_gate_unmaskable_type():
    n = parse_bench("INPUT(a)\nOUTPUT(f)\nf = NOT(a)")
    with pytest.raises(UnmaskableTypeError):
        mask_gate(n, n.id_of("f"))
    wide = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(f)\nf = AND(a, b, c)")
    with pytest.raises(UnmaskableTypeError):
        mask_gate(wide, wide.id_of("f"))


def test_mask_gate_already_masked():
    m = mask_gate(AND1, AND1.id_of("f"))
    with pytest.raises(AlreadyMaskedError):
        mask_gate(m, AND1.id_of("f"))
    assert masked_gate_ids(m) == {AND1.id_of("f")}
    assert not is_maskable(m, AND1.id_of("f"))


def test_modify_empty_is_unchanged():
    m = modify(AND1, [])
    assert write_bench(m) == write_bench(AND1)


def test_modify_two_gates_counts():
    n = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(g)\n"
        "f = AND(a, b)\ng = AND(f, c)", name="two_and")
    m = modify(n, [n.id_of("f"), n.id_of("g")])
    non_input = lambda x: sum(g.gtype is not GateType.INPUT for g in x.gates)
    assert non_input(m) - non_input(n) == 16
    assert len(m.inputs) - len(n.inputs) == 6
    assert sim.equivalence_mismatches(n, m, n_vectors=4000) == []


def test_modify_deterministic_bytes():
    n = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(g)\n"
        "f = OR(a, b)\ng = XOR(f, c)", name="mix")
    ids = [n.id_of("g"), n.id_of("f")]  # order must not matter
    m1 = modify(n, ids)
    m2 = modify(n, list(reversed(ids)))
    assert write_bench(m1) == write_bench(m2)
    assert origin_map_names(m1) == origin_map_names(m2)


def test_masked_netlist_reparses():
    from polaris import benchmarks
    from polaris.netlist import isomorphic, parse_bench as reparse

    c17 = benchmarks.load("c17")
    masked = modify(c17, maskable_ids(c17))
    text = write_bench(masked)
    back = reparse(text, name=masked.name)
    assert validate(back) == []
    assert isomorphic(masked, back)


def test_c17_full_mask_randomized_equivalence():
    from polaris import benchmarks

    c17 = benchmarks.load("c17")
    masked = modify(c17, maskable_ids(c17))
    assert sim.equivalence_mismatches(c17, masked, n_vectors=10_000) == []


def test_monotone_growth_per_type():
    sizes = {"AND": 8, "NAND": 8, "OR": 10, "NOR": 10, "XOR": 3, "XNOR": 3}
    for op, growth in sizes.items():
        n = parse_bench(f"INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = {op}(a, b)")
        m = mask_gate(n, n.id_of("f"))
        non_input = lambda x: sum(g.gtype is not GateType.INPUT for g in x.gates)
        assert non_input(m) - non_input(n) == growth
        assert len(m.inputs) - len(n.inputs) == 3


def test_overhead_identity():
    rep = overhead_estimate(AND1, AND1, vectors=200)
    assert rep.multipliers == (1.0, 1.0, 1.0)


def test_overhead_single_and_area_arithmetic():
    m = mask_gate(AND1, AND1.id_of("f"))
    rep = overhead_estimate(AND1, m, vectors=200)
    costs = sim.DEFAULT_COSTS
    orig_area = costs[GateType.AND]
    masked_area = (2 * costs[GateType.XOR]          # share XORs
                   + 4 * costs[GateType.AND]        # product terms
                   + 2 * costs[GateType.XOR]        # masked-AND tree
                   + costs[GateType.XOR])           # unmask
    assert rep.multipliers[0] == pytest.approx(masked_area / orig_area)
    assert rep.to_dict()["rendered"]["area"].endswith("x Original")


def test_maskable_pool_excludes_inverters_and_inputs():
    n = parse_bench(
        "INPUT(a)\nINPUT(b)\nOUTPUT(h)\nf = AND(a, b)\ng = NOT(f)\nh = OR(g, a)")
    pool = maskable_ids(n)
    assert n.id_of("f") in pool and n.id_of("h") in pool
    assert n.id_of("g") not in pool and n.id_of("a") not in pool
    assert all(n.gates[i].gtype in MASKABLE_TYPES for i in pool)
