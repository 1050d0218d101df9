"""Graph construction, BFS ordering, and feature encoding tests."""

import numpy as np
import pytest

from polaris import benchmarks
from polaris.errors import IndexOutOfRangeError
from polaris.graph import (
    TYPE_VOCAB,
    FeatureSchema,
    adjacency_index,
    bfs_locality,
    feature_index,
    feature_semantics,
    graphify,
    structural_features,
)
from polaris.netlist import Netlist, parse_bench

NAND1 = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = NAND(a, b)")


def test_graphify_counts():
    g = graphify(NAND1)
    assert g.n == 3
    assert g.n_edges == 2


def test_graphify_c17_counts():
    # 6 NAND gates x 2 fanins each = 12 edges (counted from the .bench file)
    g = graphify(benchmarks.load("c17"))
    assert g.n == 11
    assert g.n_edges == 12


def test_graphify_empty():
    g = graphify(Netlist(name="e", gates=(), inputs=(), outputs=()))
    assert g.n == 0
    assert g.n_edges == 0


def test_graphify_fanout_is_transpose():
    g = graphify(benchmarks.load("c17"))
    for v in range(g.n):
        for u in g.fanin[v]:
            assert v in g.fanout[u]
    for u in range(g.n):
        for v in g.fanout[u]:
            assert u in g.fanin[v]


def test_bfs_isolated_input():
    n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = NAND(b, b)")
    g = graphify(n)
    assert bfs_locality(g, n.id_of("a"), 7) == [n.id_of("a")]


def test_bfs_fanin_before_fanout():
    # root NAND with fanins ids {0, 1} and one fanout id 5
    text = (
        "INPUT(a)\nINPUT(b)\nINPUT(x)\nINPUT(y)\n"
        "OUTPUT(c)\n"
        "root = NAND(a, b)\n"
        "c = AND(root, x)\n"
    )
    n = parse_bench(text)
    g = graphify(n)
    r = n.id_of("root")
    ia, ib, ic = n.id_of("a"), n.id_of("b"), n.id_of("c")
    assert bfs_locality(g, r, 3) == [r, ia, ib]
    # hand-run of the ordering rule: root, fanins ascending, then fanout
    assert bfs_locality(g, r, 4) == [r, ia, ib, ic]


def test_bfs_no_duplicates_and_deterministic():
    n = benchmarks.load("c17")
    g = graphify(n)
    for root in range(g.n):
        a = bfs_locality(g, root, 7)
        b = bfs_locality(g, root, 7)
        assert a == b
        assert len(set(a)) == len(a)
        assert a[0] == root


def test_feature_len_arithmetic():
    # L=7, T=11 -> 7*11 + 49 = 126
    schema = FeatureSchema(7)
    assert schema.n_types == 11
    assert schema.feature_len == 126
    n = benchmarks.load("c17")
    g = graphify(n)
    for gid in range(g.n):
        assert len(structural_features(g, 7, gid)) == 126


def test_features_isolated_input():
    n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = NAND(b, b)")
    g = graphify(n)
    schema = FeatureSchema(7)
    fv = structural_features(g, 7, n.id_of("a"))
    assert fv.values[feature_index(schema, 0, "INPUT")] == 1
    for p in range(1, 7):
        assert fv.values[feature_index(schema, p, "NONE")] == 1
    assert fv.values[schema.locality * schema.n_types:].sum() == 0


def test_features_nand_hand_encoding():
    # positions [NAND, INPUT, INPUT]; adjacency (1->0) and (2->0) set
    g = graphify(NAND1)
    f_id = NAND1.id_of("f")
    schema = FeatureSchema(3)
    fv = structural_features(g, 3, f_id)
    assert fv.neighborhood == (f_id, NAND1.id_of("a"), NAND1.id_of("b"))
    expected = np.zeros(schema.feature_len, dtype=np.uint8)
    expected[feature_index(schema, 0, "NAND")] = 1
    expected[feature_index(schema, 1, "INPUT")] = 1
    expected[feature_index(schema, 2, "INPUT")] = 1
    expected[adjacency_index(schema, 1, 0)] = 1
    expected[adjacency_index(schema, 2, 0)] = 1
    assert np.array_equal(fv.values, expected)


def test_one_hot_block_sums_to_one():
    n = benchmarks.load("c17")
    g = graphify(n)
    schema = FeatureSchema(5)
    for gid in range(g.n):
        fv = structural_features(g, 5, gid)
        blocks = fv.values[: 5 * schema.n_types].reshape(5, schema.n_types)
        assert (blocks.sum(axis=1) == 1).all()


def test_adjacency_matches_graph_edges():
    n = benchmarks.load("c17")
    g = graphify(n)
    schema = FeatureSchema(6)
    for gid in range(g.n):
        fv = structural_features(g, 6, gid)
        hood = fv.neighborhood
        adj = fv.values[6 * schema.n_types:].reshape(6, 6)
        for p in range(6):
            for q in range(6):
                if p < len(hood) and q < len(hood):
                    edge = hood[q] in g.fanout[hood[p]]
                    assert bool(adj[p, q]) == edge
                else:
                    assert adj[p, q] == 0


def test_feature_semantics_layout():
    schema = FeatureSchema(7)
    assert feature_semantics(schema, 0) == "G0 = NONE"
    assert feature_semantics(schema, 7 * 11) == "G0 drives G0"
    # Table-style atom: position 4, NAND slot
    idx = feature_index(schema, 4, "NAND")
    assert feature_semantics(schema, idx) == "G4 = NAND"


def test_feature_semantics_bijection():
    schema = FeatureSchema(4)
    seen = set()
    for i in range(schema.feature_len):
        s = feature_semantics(schema, i)
        assert s not in seen
        seen.add(s)
    with pytest.raises(IndexOutOfRangeError):
        feature_semantics(schema, schema.feature_len)


def test_type_vocab_covers_all_gate_types():
    from polaris.netlist import GateType

    assert TYPE_VOCAB[0] == "NONE"
    assert set(TYPE_VOCAB[1:]) == {t.value for t in GateType}
