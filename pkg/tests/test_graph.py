from collections import Counter
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import assert_snapshot_valid
from rdcore.graph import (
    UnknownFirmError, add_alliance, cumulative_series, cumulative_snapshot, empty_snapshot,
    from_pair_weights, window_ends, window_snapshot, write_edge_list, write_node_attributes,
)
from rdcore.ingest import AllianceEvent


def ev(aid, year, *firms):
    return AllianceEvent(aid, year, frozenset(firms))


def total_weight(g):
    return sum(g.pair_weights().values())


events_strategy = st.lists(
    st.tuples(
        st.integers(1990, 1999),
        st.sets(st.integers(0, 9), min_size=2, max_size=5),
    ),
    max_size=25,
).map(lambda rows: [AllianceEvent(i, y, frozenset(p)) for i, (y, p) in enumerate(rows)])


def test_pair_of_strangers():
    g = add_alliance(empty_snapshot(2000), ev(1, 1999, 3, 8))
    assert g.pair_weights() == {(3, 8): 1}
    assert g.n_nodes == 2


def test_consortium_clique():
    g = add_alliance(empty_snapshot(2000), ev(1, 1999, 1, 2, 3, 4))
    assert g.n_edges == 6
    assert set(g.pair_weights().values()) == {1}
    g = add_alliance(g, ev(2, 1999, 1, 2, 3, 4))
    assert g.n_edges == 6
    assert set(g.pair_weights().values()) == {2}


def test_repeat_alliance_increments_weight():
    g = add_alliance(empty_snapshot(2000), ev(1, 1998, 1, 2))
    g = add_alliance(g, ev(2, 1999, 2, 1))
    assert g.pair_weights() == {(1, 2): 2}
    assert g.degrees().tolist() == [1, 1]
    assert g.strengths().tolist() == [2, 2]


def test_add_alliance_errors():
    with pytest.raises(ValueError, match="after snapshot year"):
        add_alliance(empty_snapshot(1995), ev(1, 1996, 1, 2))
    with pytest.raises(UnknownFirmError, match="firm 7"):
        add_alliance(empty_snapshot(2000), ev(1, 1996, 1, 7), registry={1, 2})


def test_cumulative_before_first_event_is_empty():
    events = [ev(1, 1995, 1, 2)]
    g = cumulative_snapshot(events, 1990)
    assert g.n_nodes == 0 and g.n_edges == 0


@given(events_strategy)
def test_total_weight_counting_identity(events):
    g = cumulative_snapshot(events, 2000)
    assert total_weight(g) == sum(comb(len(e.participants), 2) for e in events)
    assert_snapshot_valid(g)


@given(events_strategy)
def test_cumulative_monotone(events):
    prev = None
    for _, g in cumulative_series(events, range(1989, 2001)):
        if prev is not None:
            assert set(prev.node_ids.tolist()) <= set(g.node_ids.tolist())
            cur = g.pair_weights()
            for pair, w in prev.pair_weights().items():
                assert cur.get(pair, 0) >= w
        prev = g


@given(events_strategy, st.randoms(use_true_random=False))
@settings(max_examples=50)
def test_order_independence(events, rnd):
    shuffled = list(events)
    rnd.shuffle(shuffled)
    g = empty_snapshot(2000)
    for e in shuffled:
        g = add_alliance(g, e)
    ref = cumulative_snapshot(events, 2000)
    assert g.pair_weights() == ref.pair_weights()
    assert g.node_ids.tolist() == ref.node_ids.tolist()


@given(events_strategy)
def test_cumulative_series_matches_snapshots(events):
    for t, g in cumulative_series(events, [1992, 1995, 1999]):
        assert g.pair_weights() == cumulative_snapshot(events, t).pair_weights()


def test_window_half_open():
    events = [ev(1, 1994, 1, 2), ev(2, 1995, 2, 3), ev(3, 1997, 3, 4)]
    g = window_snapshot(events, 1997, 3)
    assert g.window == (1994, 1997)
    assert g.pair_weights() == {(2, 3): 1, (3, 4): 1}
    assert 1 not in g                    # firm absent from the window


@given(events_strategy, st.integers(1990, 1999))
def test_width_one_is_single_year(events, year):
    g = window_snapshot(events, year, 1)
    expected = Counter()
    for e in events:
        if e.year == year:
            expected.update(tuple(sorted(p)) for p in combinations(e.participants, 2))
    assert g.pair_weights() == dict(expected)


@given(events_strategy, st.integers(1, 4))
def test_disjoint_windows_partition_cumulative(events, width):
    union = Counter()
    for end in range(1999, 1985, -width):
        union.update(window_snapshot(events, end, width).pair_weights())
    assert dict(union) == cumulative_snapshot(events, 1999).pair_weights()


@given(events_strategy)
def test_degree_at_most_strength(events):
    g = cumulative_snapshot(events, 2000)
    d, s = g.degrees(), g.strengths()
    assert np.all(d <= s)
    repeated = any(w > 1 for w in g.pair_weights().values())
    assert (d.sum() == s.sum()) == (not repeated)


def test_window_width_validated():
    with pytest.raises(ValueError):
        window_snapshot([], 2000, 0)
    assert window_ends(1990, 1995, 2) == [1990, 1992, 1994]


def test_from_pair_weights_rejects_bad_input():
    with pytest.raises(ValueError):
        from_pair_weights({(1, 1): 1})
    with pytest.raises(ValueError):
        from_pair_weights({(1, 2): 0})


def test_isolated_nodes_kept():
    g = from_pair_weights({(0, 1): 2}, nodes=[0, 1, 5])
    assert g.n_nodes == 3
    assert g.degrees().tolist() == [1, 1, 0]
    assert g.strengths().tolist() == [2, 2, 0]


def test_exports(tmp_path):
    g = from_pair_weights({(10, 20): 2, (20, 30): 1})
    write_edge_list(g, tmp_path / "e.csv")
    write_node_attributes(g, tmp_path / "n.csv")
    assert (tmp_path / "e.csv").read_text() == "firm_a,firm_b,weight\n10,20,2\n20,30,1\n"
    assert (tmp_path / "n.csv").read_text() == "firm,degree,strength\n10,1,2\n20,2,3\n30,1,1\n"


def test_snapshot_immutable():
    g = from_pair_weights({(0, 1): 1})
    with pytest.raises(ValueError):
        g.weights[0] = 5
