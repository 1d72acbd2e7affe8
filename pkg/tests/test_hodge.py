import numpy as np
import pytest
import scipy.sparse as sp

from hodgeloops.boundary import boundary_maps, incidence_matrix
from hodgeloops.complexes import Complex2
from hodgeloops.hodge import (IsolatedCellError, assemble, hodge_from_complex, propagate_weights,
                              spectral_norm_upper)

from conftest import cycle_union, random_cubical, random_simplicial

TRIANGLE = Complex2("simplicial", 3, [[0, 1], [0, 2], [1, 2]], [[0, 1, 2]])


def test_cycle_vertex_weights():
    B1 = incidence_matrix(3, [[0, 1], [0, 2], [1, 2]])
    assert propagate_weights(B1, np.ones(3)).values.tolist() == [2, 2, 2]


def test_triangle_weights_propagate():
    sys_ = hodge_from_complex(TRIANGLE)
    assert sys_.w_k.values.tolist() == [1, 1, 1]
    assert sys_.w_km1.values.tolist() == [2, 2, 2]


@pytest.mark.parametrize("seed", range(10))
def test_propagation_matches_dense(seed):
    rng = np.random.default_rng(seed)
    cx = random_simplicial(rng, int(rng.integers(4, 31)), p_tri=1.0)
    w2 = rng.uniform(0.1, 3.0, cx.n2)
    B1, B2 = boundary_maps(cx)
    got = propagate_weights(B2, w2).values
    want = np.abs(B2.toarray()) @ w2
    covered = want > 0
    assert np.allclose(got[covered], want[covered], rtol=1e-14)
    if cx.n2 and not covered.all():
        assert np.all(got[~covered] == want[covered].min())


def test_floor_policies():
    B2 = sp.csc_matrix(np.array([[1], [1], [0]]))
    assert propagate_weights(B2, [2.0], floor=1e-3).values.tolist() == [2, 2, 1e-3]
    with pytest.raises(IsolatedCellError):
        propagate_weights(B2, [2.0], strict=True)
    with pytest.raises(ValueError):
        propagate_weights(B2, [0.0])


def test_c3_laplacian_spectrum():
    sys_ = hodge_from_complex(cycle_union(3))
    vals = np.linalg.eigvalsh(sys_.L.toarray())
    assert np.allclose(vals, [0, 1.5, 1.5], atol=1e-14)
    assert sys_.L_up.nnz == 0


def test_filled_triangle_has_no_harmonic():
    vals = np.linalg.eigvalsh(hodge_from_complex(TRIANGLE).L.toarray())
    assert vals.min() > 0.1


@pytest.mark.parametrize("seed", range(8))
def test_graph_laplacian_is_normalized(seed):
    rng = np.random.default_rng(seed)
    cx = random_simplicial(rng, 20, p_edge=0.4)
    B1 = incidence_matrix(cx.n0, cx.edges)
    w1 = rng.uniform(0.2, 2.0, cx.n1)
    sys_ = assemble(None, B1, w1, k=0)
    W = np.zeros((cx.n0, cx.n0))
    W[cx.edges[:, 0], cx.edges[:, 1]] = w1
    W += W.T
    deg = W.sum(axis=1)
    keep = deg > 0
    D = np.diag(1 / np.sqrt(deg[keep]))
    oracle = np.eye(keep.sum()) - D @ W[np.ix_(keep, keep)] @ D
    assert np.allclose(sys_.L.toarray()[np.ix_(keep, keep)], oracle, atol=1e-13)


def test_caps_table():
    assert spectral_norm_upper("simplicial", 1) == 3
    assert spectral_norm_upper("cubical", 1) == 4
    assert spectral_norm_upper("simplicial", 0) == 2
    with pytest.raises(ValueError):
        spectral_norm_upper("simplicial")


@pytest.mark.parametrize("seed", range(10))
def test_laplacian_symmetric_psd(seed):
    rng = np.random.default_rng(seed)
    cx = random_simplicial(rng, 15) if seed % 2 else random_cubical(rng)
    sys_ = hodge_from_complex(cx, rng.uniform(0.1, 2.0, cx.n2))
    L = sys_.L.toarray()
    assert np.array_equal(L, L.T)
    assert np.linalg.eigvalsh(L).min() > -1e-12
    assert np.allclose(L, (sys_.L_down + sys_.L_up).toarray(), atol=1e-15)


def test_weight_count_mismatch():
    B1, B2 = boundary_maps(TRIANGLE)
    with pytest.raises(ValueError):
        assemble(B1, B2, [1.0, 2.0])
