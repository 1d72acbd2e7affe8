import numpy as np
import pytest

from hodgeloops.synth import BETTI1, MANIFOLDS, genus2_level, punctplane, synth_manifold


def test_torus_noise_free_on_surface():
    sm = synth_manifold("torus", n=400, noise=0.0)
    X = sm.points
    assert X.shape == (400, 13)
    assert not np.any(X[:, 3:])
    r = np.hypot(X[:, 0], X[:, 1])
    assert np.allclose((r - 1) ** 2 + (X[:, 2] - 1) ** 2, 0.25)
    assert sm.beta1 == 2


def test_torus_grid_angles():
    sm = synth_manifold("torus", n=400)
    assert len(np.unique(np.round(sm.angles[:, 0], 12))) == 20


def test_genus2_on_surface_and_labels():
    sm = synth_manifold("genus2", n=300, genus2_grid=300)
    X = sm.points
    assert np.allclose(genus2_level(X[:, 0], X[:, 1]) ** 2 + X[:, 2] ** 2, 0.01, atol=1e-12)
    assert set(np.unique(sm.labels)) == {0, 1}
    assert np.array_equal(sm.labels, (X[:, 0] > 0).astype(int))


def test_three_torus_shape():
    sm = synth_manifold("three_torus", n=150, dense_factor=5)
    assert sm.points.shape == (150, 4)
    assert sm.beta1 == 3


def test_tori_concat_parts():
    sm = synth_manifold("tori_concat", n=402, noise=0.0)
    assert np.bincount(sm.labels).tolist() == [101, 101, 100, 100]
    assert sm.beta1 == 8


def test_punctplane_holes_are_empty():
    X, labels = punctplane(2000, np.random.default_rng(0))
    for ox in (0.0, 1.2):
        inside = (np.abs(X[:, 0] - ox - 0.5) < 1 / 6) & (np.abs(X[:, 1] - 0.5) < 1 / 6)
        assert not inside.any()
    assert np.array_equal(labels, (X[:, 0] > 1.1).astype(int))
    # the slit around x = 1.1 stays point-free, up to the lattice jitter
    assert not np.any(np.abs(X[:, 0] - 1.1) < 0.095 / 2 - 0.003 - 1e-12)


def test_deterministic_and_noise():
    a = synth_manifold("punctplane", n=500, seed=3, noise=0.01)
    b = synth_manifold("punctplane", n=500, seed=3, noise=0.01)
    assert np.array_equal(a.points, b.points)


@pytest.mark.parametrize("kwargs", [{"name": "sphere"}, {"name": "torus", "n": 10},
                                    {"name": "torus", "noise": -1.0}])
def test_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        synth_manifold(**kwargs)


def test_catalogue_consistent():
    assert set(MANIFOLDS) == set(BETTI1)
