import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import (
    brute_betweenness, corpus, naive_clustering, naive_effective_size, naive_reach,
    snapshot, to_dict_graph,
)
from rdcore.centrality import (
    betweenness_norm, compute_centralities, degree, local_clustering, local_efficiency,
    local_reach, write_centralities,
)
from rdcore.graph import from_pair_weights

TRIANGLE = {(0, 1): 1, (1, 2): 1, (0, 2): 1}
PATH3 = {(0, 1): 1, (1, 2): 1}
STAR5 = {(0, i): 1 for i in range(1, 6)}
K4 = {(a, b): 1 for a in range(4) for b in range(a + 1, 4)}
# square 0-1-2-3 with diagonal 0-2
SQUARE_DIAG = {(0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): 1, (0, 2): 1}

graphs = st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.just(n),
    st.dictionaries(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] < p[1]),
        st.integers(1, 5), max_size=40,
    ),
))


def test_degree_examples():
    assert degree(snapshot(TRIANGLE, 3)).tolist() == [2, 2, 2]
    assert degree(snapshot({(0, 1): 5}, 2)).tolist() == [1, 1]
    assert degree(snapshot(STAR5, 6))[0] == 5


def test_betweenness_examples():
    assert betweenness_norm(snapshot(PATH3, 3)).tolist() == [0.0, 1.0, 0.0]
    assert betweenness_norm(snapshot(K4, 4)).tolist() == [0.0] * 4
    assert betweenness_norm(snapshot({(0, 1): 1}, 2)).tolist() == [0.0, 0.0]
    assert betweenness_norm(snapshot(STAR5, 6))[0] == 1.0


def test_clustering_examples():
    assert local_clustering(snapshot(TRIANGLE, 3)).tolist() == [1.0, 1.0, 1.0]
    assert local_clustering(snapshot(STAR5, 6))[0] == 0.0
    cl = local_clustering(snapshot(SQUARE_DIAG, 4))
    # degree-3 nodes 0 and 2 see two linked neighbor pairs out of three
    assert cl.tolist() == pytest.approx([2 / 3, 1.0, 2 / 3, 1.0], abs=1e-15)


def test_reach_examples():
    assert local_reach(snapshot({(0, 1): 1}, 2)).tolist() == [1.0, 1.0]
    assert local_reach(snapshot(PATH3, 3)).tolist() == [1.5, 2.0, 1.5]
    assert local_reach(snapshot({(0, 1): 1, (2, 3): 1}, 4)).tolist() == [1.0] * 4


def test_efficiency_examples():
    assert local_efficiency(snapshot(STAR5, 6))[0] == 5.0
    assert local_efficiency(snapshot(TRIANGLE, 3)).tolist() == pytest.approx([1.0] * 3, abs=1e-15)
    assert local_efficiency(snapshot({(0, 1): 4}, 2)).tolist() == [1.0, 1.0]
    # node 0 of a weighted triangle: 2 - (w02 + w01) / (w01 + w02) = 1 regardless of weights
    assert local_efficiency(snapshot({(0, 1): 3, (1, 2): 1, (0, 2): 1}, 3))[0] == pytest.approx(1.0)
    assert local_efficiency(from_pair_weights({(0, 1): 1}, nodes=[0, 1, 2]))[2] == 0.0


def test_efficiency_normalized_flag():
    eff = local_efficiency(snapshot(SQUARE_DIAG, 4), normalized=True)
    raw = local_efficiency(snapshot(SQUARE_DIAG, 4))
    np.testing.assert_allclose(eff, raw / np.array([3, 2, 3, 2]))


def test_efficiency_hand_value():
    # node 0 of the square-with-diagonal: neighbors 1, 2, 3 with unit weights;
    # 1~2 and 2~3, so redundancies are 1/3, 2/3, 1/3 and the effective size is 3 - 4/3
    assert local_efficiency(snapshot(SQUARE_DIAG, 4))[0] == pytest.approx(5 / 3, abs=1e-15)


def test_betweenness_matches_brute_force_corpus():
    for n, pairs in corpus(seed=11, count=150):
        got = betweenness_norm(snapshot(pairs, n))
        np.testing.assert_allclose(got, brute_betweenness(to_dict_graph(pairs, n)), atol=1e-9)


@given(graphs)
@settings(max_examples=200)
def test_local_measures_match_oracles(graph):
    n, pairs = graph
    g = snapshot(pairs, n)
    d = to_dict_graph(pairs, n)
    np.testing.assert_allclose(local_clustering(g), naive_clustering(d), atol=1e-12)
    np.testing.assert_allclose(local_reach(g), naive_reach(d), atol=1e-12)
    np.testing.assert_allclose(local_efficiency(g), naive_effective_size(d), atol=1e-12)


@given(graphs)
def test_ranges(graph):
    n, pairs = graph
    g = snapshot(pairs, n)
    cv = compute_centralities(g)
    d = cv.degree
    assert np.array_equal(d, np.diff(g.indptr))
    assert np.all((cv.betweenness_norm >= -1e-15) & (cv.betweenness_norm <= 1 + 1e-12))
    assert np.all((cv.local_clustering >= 0) & (cv.local_clustering <= 1 + 1e-12))
    assert np.all((cv.local_reach >= 0) & (cv.local_reach <= max(n - 1, 0) + 1e-12))
    assert np.all(cv.local_efficiency <= d + 1e-12)
    no_links = cv.local_clustering == 0
    np.testing.assert_allclose(cv.local_efficiency[no_links], d[no_links], atol=1e-12)
    assert np.all(cv.local_efficiency[~no_links] < d[~no_links])


@given(graphs, st.randoms(use_true_random=False))
@settings(max_examples=100)
def test_relabel_equivariance(graph, rnd):
    n, pairs = graph
    perm = list(range(n))
    rnd.shuffle(perm)
    g = snapshot(pairs, n)
    h = g.relabel(perm)
    a, b = compute_centralities(g), compute_centralities(h)
    pos = {int(f): k for k, f in enumerate(h.node_ids)}
    order = [pos[p] for p in perm]
    for col in a.COLUMNS:
        np.testing.assert_allclose(getattr(b, col)[order], getattr(a, col), atol=1e-12)


def test_matches_networkx():
    for n, pairs in corpus(seed=5, count=40, n_range=(5, 25), max_weight=4):
        g = snapshot(pairs, n)
        G = nx.Graph()
        G.add_nodes_from(range(n))
        G.add_weighted_edges_from((a, b, w) for (a, b), w in pairs.items())
        bc = nx.betweenness_centrality(G, normalized=True)
        np.testing.assert_allclose(betweenness_norm(g), [bc[i] for i in range(n)], atol=1e-12)
        cl = nx.clustering(G)
        np.testing.assert_allclose(local_clustering(g), [cl[i] for i in range(n)], atol=1e-12)
        hc = nx.harmonic_centrality(G)
        np.testing.assert_allclose(local_reach(g), [hc[i] for i in range(n)], atol=1e-12)
        # networkx weights redundancy by tie strength; the binary reading agrees at unit weights
        es = nx.effective_size(G)
        ref = [0.0 if G.degree(i) == 0 else es[i] for i in range(n)]
        unit = snapshot({p: 1 for p in pairs}, n)
        np.testing.assert_allclose(local_efficiency(unit), ref, atol=1e-12)


def test_weighted_paths_variant():
    G = nx.gnm_random_graph(30, 70, seed=1)
    rng = np.random.default_rng(1)
    pairs = {(min(a, b), max(a, b)): int(rng.integers(1, 5)) for a, b in G.edges()}
    for (a, b), w in pairs.items():
        G[a][b]["cost"] = 1.0 / w
    ref = nx.betweenness_centrality(G, weight="cost", normalized=True)
    got = betweenness_norm(snapshot(pairs, 30), weighted_paths=True)
    np.testing.assert_allclose(got, [ref[i] for i in range(30)], atol=1e-12)


def test_write_centralities(tmp_path):
    cv = compute_centralities(from_pair_weights({(7, 9): 1, (9, 11): 1}))
    write_centralities(tmp_path / "c.csv", [(2001, cv)])
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "firm,year,degree,betweenness_norm,local_clustering,local_reach,local_efficiency"
    assert lines[2] == "9,2001,2,1.0,0.0,2.0,2.0"
