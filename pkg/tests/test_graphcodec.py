import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iqpgraph import rng as rngmod
from iqpgraph.graphcodec import (
    DatasetCapError, DatasetSpec, GraphBits, GraphError, bipartite_mask, decode, degree_sequence,
    density, edge_count, edge_index, encode, gen_bipartite, gen_er, generate, is_bipartite,
    spectral_bipartivity, spectral_bipartivity_batch, summarize, to_matrix,
)


def graph_from_edges(m, edges):
    a = np.zeros((m, m), dtype=np.uint8)
    for i, j in edges:
        a[i, j] = a[j, i] = 1
    return encode(a)


def complete(m):
    return graph_from_edges(m, itertools.combinations(range(m), 2))


def cycle(m):
    return graph_from_edges(m, [(i, (i + 1) % m) for i in range(m)])


def test_edge_index_examples():
    assert edge_index(0, 1, 4) == 0
    assert edge_index(2, 3, 4) == 5
    assert edge_index(1, 3, 4) == 4


@pytest.mark.parametrize("m", [2, 3, 5, 8])
def test_edge_index_matches_enumeration(m):
    pairs = list(itertools.combinations(range(m), 2))
    assert [edge_index(i, j, m) for i, j in pairs] == list(range(edge_count(m)))


@pytest.mark.parametrize("args", [(1, 1, 4), (2, 1, 4), (0, 4, 4), (-1, 2, 4)])
def test_edge_index_rejects_bad_pairs(args):
    with pytest.raises(GraphError):
        edge_index(*args)


def test_encode_small_cases():
    assert encode(np.zeros((4, 4))).to_string() == "000000"
    assert complete(4).to_string() == "111111"


def test_encode_rejects_bad_adjacency():
    a = np.zeros((4, 4), dtype=int)
    a[0, 1] = 1
    with pytest.raises(GraphError):
        encode(a)  # asymmetric
    a[1, 0] = 1
    a[2, 2] = 1
    with pytest.raises(GraphError):
        encode(a)  # self loop


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12).flatmap(lambda m: st.tuples(st.just(m), st.lists(st.integers(0, 1),
                                                                           min_size=m * (m - 1) // 2,
                                                                           max_size=m * (m - 1) // 2))))
def test_decode_encode_round_trip(case):
    m, bits = case
    g = GraphBits(m, bits)
    a = decode(g)
    assert np.array_equal(a, a.T) and not a.diagonal().any()
    assert encode(a) == g
    assert GraphBits.from_string(g.to_string(), m) == g


def test_density_examples():
    assert density(encode(np.zeros((5, 5)))) == 0.0
    assert density(complete(4)) == 1.0
    g = graph_from_edges(8, list(itertools.combinations(range(8), 2))[:10])
    assert density(g) == pytest.approx(10 / 28)


def test_degree_sequence_examples():
    assert degree_sequence(encode(np.zeros((5, 5)))).tolist() == [0] * 5
    assert degree_sequence(complete(4)).tolist() == [3, 3, 3, 3]
    assert degree_sequence(graph_from_edges(3, [(0, 1), (1, 2)])).tolist() == [1, 2, 1]


def test_bipartite_examples():
    assert is_bipartite(encode(np.zeros((4, 4))))
    assert not is_bipartite(complete(3))
    assert is_bipartite(cycle(6))
    assert not is_bipartite(cycle(7))


def test_bipartite_mask_agrees_with_networkx():
    gen = np.random.default_rng(3)
    for m in (2, 5, 7, 9):
        mat = (gen.random((400, edge_count(m))) < gen.uniform(0.05, 0.6)).astype(np.uint8)
        fast = bipartite_mask(mat, m)
        for row, flag in zip(mat, fast):
            g = GraphBits(m, row)
            ref = nx.is_bipartite(nx.from_numpy_array(decode(g)))
            assert flag == ref == is_bipartite(g)


def test_spectral_bipartivity_examples():
    assert spectral_bipartivity(encode(np.zeros((6, 6)))) == pytest.approx(1.0, abs=1e-12)
    assert spectral_bipartivity(complete(2)) == pytest.approx(1.0, abs=1e-12)
    k3 = (np.cosh(2) + 2 * np.cosh(1)) / (np.exp(2) + 2 * np.exp(-1))
    assert spectral_bipartivity(complete(3)) == pytest.approx(k3, abs=1e-12)
    assert k3 == pytest.approx(0.8429, abs=1e-4)


def test_spectral_bipartivity_batch_matches_eigvalsh():
    gen = np.random.default_rng(4)
    m = 7
    mat = (gen.random((50, edge_count(m))) < 0.4).astype(np.uint8)
    lam = np.linalg.eigvalsh(np.stack([decode(GraphBits(m, r)).astype(float) for r in mat]))
    ref = np.cosh(lam).sum(1) / np.exp(lam).sum(1)
    assert np.allclose(spectral_bipartivity_batch(mat, m), ref, atol=1e-12)


def test_er_density_sparse_row():
    spec = DatasetSpec.default("ER", 8, "sparse", seed=0)
    graphs = gen_er(spec, rngmod.stream(0, rngmod.OP_DATASET))
    assert len(graphs) == 200 and len(set(graphs)) == 200
    assert abs(to_matrix(graphs).mean() - 0.2207) <= 0.03


def test_er_density_law_of_large_numbers():
    spec = DatasetSpec("ER", 8, "medium", 0.5, 10_000, 1)
    graphs = gen_er(spec, rngmod.stream(1, rngmod.OP_DATASET))
    assert abs(to_matrix(graphs).mean() - 0.5) <= 0.01


def test_er_zero_probability_collapses_to_one_graph():
    graphs = gen_er(DatasetSpec("ER", 8, "sparse", 0.0, 200, 0), np.random.default_rng(0))
    assert len(graphs) == 1 and density(graphs[0]) == 0.0


def test_uniqueness_cap_raises():
    # only 2 distinct graphs on two nodes
    with pytest.raises(DatasetCapError):
        gen_er(DatasetSpec("ER", 2, "sparse", 0.5, 3, 0), np.random.default_rng(0))


def test_bipartite_generator_by_construction():
    spec = DatasetSpec.default("BP", 8, "dense", seed=2)
    graphs = gen_bipartite(spec, rngmod.stream(2, rngmod.OP_DATASET))
    mat = to_matrix(graphs)
    assert bipartite_mask(mat, 8).all()
    assert np.allclose(spectral_bipartivity_batch(mat, 8), 1.0, atol=1e-9)
    assert abs(mat.mean() - 0.3110) <= 0.03


def test_bipartite_two_nodes_full_probability():
    graphs = gen_bipartite(DatasetSpec("BP", 2, "dense", 1.0, 5, 0), np.random.default_rng(0))
    assert graphs == [GraphBits(2, [1])]


def test_generation_is_deterministic():
    spec = DatasetSpec.default("BP", 6, "medium", seed=9)
    a = generate(spec, rngmod.stream(9, rngmod.OP_DATASET))
    b = generate(spec, rngmod.stream(9, rngmod.OP_DATASET))
    assert a == b


def test_dataset_spec_validation_and_round_trip():
    spec = DatasetSpec.default("ER", 10, "dense", seed=3)
    assert DatasetSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        DatasetSpec("XX", 8, "sparse", 0.2, 10, 0)
    with pytest.raises(ValueError):
        DatasetSpec("ER", 8, "sparse", 1.5, 10, 0)


def test_summarize_bp_sparse():
    spec = DatasetSpec.default("BP", 8, "sparse", seed=0)
    s = summarize(generate(spec, rngmod.stream(0, rngmod.OP_DATASET)))
    assert s["bipartite_pct"] == 100.0
    assert s["mean_beta"] == pytest.approx(1.0, abs=1e-9)
    assert s["count"] <= 133
    assert abs(s["mean_density"] - 0.2256) <= 0.03
