import networkx as nx
import numpy as np
import pytest

from hodgeloops.loops import (DegenerateColumnError, LoopResult, NoLoopError, certify_nontrivial,
                              induce_digraph, path_integral, quantile_threshold, shortest_homologous_loops,
                              shortest_loops_maxedge)

from conftest import cycle_union


def cycle_graph(n):
    E = np.array(sorted((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)))
    # circulation 0 -> 1 -> ... -> n-1 -> 0
    z = np.array([1.0 if b == a + 1 else -1.0 for a, b in E])
    return E, z


def enumerate_min_cycle(g):
    G = nx.DiGraph()
    for (a, b), w in zip(g.arcs.tolist(), g.weights):
        G.add_edge(a, b, w=w)
    best = np.inf
    for cyc in nx.simple_cycles(G):
        best = min(best, sum(G[a][b]["w"] for a, b in zip(cyc, cyc[1:] + cyc[:1])))
    return best


def test_quantile_conventions():
    z = np.arange(1.0, 11.0)
    assert quantile_threshold(z, 1) == 1.0
    assert quantile_threshold(z, 2) == 5.5
    g = induce_digraph(z, np.column_stack([np.arange(10), np.arange(1, 11)]), np.ones(10), beta=2)
    assert len(g.arcs) == 5
    with pytest.raises(ValueError):
        quantile_threshold(z, 0)


def test_c4_all_positive():
    E = np.array([[0, 1], [1, 2], [2, 3], [3, 4]])
    g = induce_digraph(np.ones(4), E, np.ones(4), beta=1)
    assert g.arcs.tolist() == E.tolist()


def test_negative_entries_flip_and_zero_drops():
    E = np.array([[0, 1], [1, 2], [0, 2]])
    g = induce_digraph([1.0, 0.0, -2.0], E, [1.0, 1.0, 1.0], tau=0.0)
    assert g.arcs.tolist() == [[0, 1], [2, 0]]
    with pytest.raises(DegenerateColumnError):
        induce_digraph(np.zeros(3), E, np.ones(3))
    with pytest.raises(ValueError):
        induce_digraph(np.ones(3), E, [1.0, 0.0, 1.0])


@pytest.mark.parametrize("n", range(3, 9))
def test_cycle_graph_full_loop(n):
    E, z = cycle_graph(n)
    for finder in (shortest_homologous_loops, shortest_loops_maxedge):
        (lp,) = finder(z[:, None], n, E, np.ones(n))
        assert lp.length == n
        assert sorted(lp.cycle[:-1]) == list(range(n))
        assert lp.cycle[0] == lp.cycle[-1]
        assert lp.path_integral == pytest.approx(n)


def test_two_triangles_block_loops():
    cx = cycle_union(3, 3)
    Z = np.zeros((6, 2))
    Z[:3, 0] = [1, -1, 1]
    Z[3:, 1] = [1, -1, 1]
    loops = shortest_homologous_loops(Z, 6, cx.edges, np.ones(6))
    assert sorted(loops[0].cycle[:-1]) == [0, 1, 2]
    assert sorted(loops[1].cycle[:-1]) == [3, 4, 5]
    assert [lp.length for lp in loops] == [3.0, 3.0]


def test_path_graph_has_no_loop():
    E = np.array([[0, 1]])
    with pytest.raises(NoLoopError) as info:
        shortest_homologous_loops(np.ones((1, 1)), 2, E, np.ones(1))
    assert info.value.class_index == 0
    with pytest.raises(NoLoopError):
        shortest_loops_maxedge(np.ones((1, 1)), 2, E, np.ones(1))


def test_relaxation_halves_threshold():
    # the square 0-1-2-3 only closes once tau drops below its weak arc 3 -> 0;
    # the triangle 4-5-6 is acyclic in column 0 and a circulation in column 1
    E = np.array([[0, 1], [1, 2], [2, 3], [0, 3], [4, 5], [4, 6], [5, 6]])
    Z = np.array([[1, 1, 1, -0.2, 2, 2, 2], [0, 0, 0, 0, 1, -1, 1]], dtype=float).T
    loops = shortest_homologous_loops(Z, 7, E, np.ones(7))
    assert quantile_threshold(Z[:, 0], 2) == 1.0
    assert loops[0].cycle == [0, 1, 2, 3, 0]
    assert loops[0].relaxations == 3 and loops[0].tau == 0.125
    assert loops[1].cycle == [4, 5, 6, 4] and loops[1].relaxations == 0
    with pytest.raises(NoLoopError):
        shortest_homologous_loops(Z, 7, E, np.ones(7), max_relaxations=2)


def test_path_integral_values():
    E, z = cycle_graph(3)
    z = z / np.sqrt(3)
    assert path_integral([0, 1, 2, 0], z, E) == pytest.approx(np.sqrt(3))
    assert path_integral([0, 1, 0], z, E) == 0.0


def test_certify_warns_on_trivial_loop():
    E, z = cycle_graph(4)
    lp = LoopResult(0, [0, 1, 0], 2.0, 0.0, 0.0, 0)
    with pytest.warns(RuntimeWarning):
        certify_nontrivial(lp, z)


def test_loop_json():
    lp = LoopResult(1, [0, 1, 2, 0], 3.0, 1.5, 0.25, 0)
    assert lp.to_json_dict() == {"class": 1, "cycle": [0, 1, 2, 0], "length": 3.0,
                                 "path_integral": 1.5, "tau": 0.25, "relaxations": 0}


@pytest.mark.parametrize("seed", range(15))
def test_length_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    iu = np.triu_indices(n, 1)
    E = np.column_stack(iu)[rng.random(len(iu[0])) < 0.6]
    if len(E) == 0:
        return
    z = rng.standard_normal(len(E))
    d = rng.uniform(0.1, 2.0, len(E))
    try:
        (lp,) = shortest_homologous_loops(z[:, None], n, E, d)
    except NoLoopError:
        return
    g = induce_digraph(z, E, d, tau=lp.tau)
    assert lp.length == pytest.approx(enumerate_min_cycle(g), rel=1e-12)


def test_torus_maxedge_is_homologous(torus_run):
    cx = torus_run.complex
    Z = torus_run.ica.Z
    ex = torus_run.loops
    mx = shortest_loops_maxedge(Z, cx.n0, cx.edges, torus_run.graph.edge_dist)
    for a, b in zip(ex, mx):
        assert np.sign(a.path_integral) == np.sign(b.path_integral)
        assert b.length >= a.length - 1e-12
