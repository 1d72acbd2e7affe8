import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from hodgeloops import (boundary_maps, cknn_graph, clique_complex, hodge_from_complex, homology_basis,
                        ica_no_prewhite, shortest_homologous_loops, triangle_weights)
from hodgeloops.complexes import Complex2, grid_complex, triangles_of

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def random_simplicial(rng, n0: int, p_edge: float = 0.5, p_tri: float = 0.6) -> Complex2:
    iu = np.triu_indices(n0, 1)
    keep = rng.random(len(iu[0])) < p_edge
    E = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    T = triangles_of(n0, E)
    T = T[rng.random(len(T)) < p_tri]
    return Complex2("simplicial", n0, E, T)


def random_cubical(rng, max_pixels: int = 15, max_side: int = 5, density: float = 0.75) -> Complex2:
    H, W = rng.integers(2, max_side + 1, size=2)
    mask = rng.random((H, W)) < density
    on = np.flatnonzero(mask)
    if len(on) > max_pixels:
        mask.flat[rng.choice(on, len(on) - max_pixels, replace=False)] = False
    if mask.sum() < 2:
        mask.flat[:2] = True
    return grid_complex(mask)


def rank_oracle_betti(cx: Complex2) -> int:
    B1, B2 = boundary_maps(cx)
    r1 = np.linalg.matrix_rank(B1.toarray()) if cx.n1 else 0
    r2 = np.linalg.matrix_rank(B2.toarray()) if cx.n2 else 0
    return cx.n1 - r1 - r2


def cycle_union(*lengths: int) -> Complex2:
    """Disjoint cycles with no 2-cells, vertices numbered consecutively."""
    E, base = [], 0
    for m in lengths:
        for i in range(m):
            a, b = base + i, base + (i + 1) % m
            E.append((min(a, b), max(a, b)))
        base += m
    E = np.array(sorted(E))
    return Complex2("simplicial", base, E, np.empty((0, 3), np.int64))


def max_principal_angle(Y, Z) -> float:
    return float(np.max(subspace_angles(Y, Z)))


class PipelineRun:
    """One point cloud taken through complex, basis, unmixing and loops, with timings."""

    def __init__(self, points, delta: float, k: int = 30, loops: bool = True):
        t0 = time.perf_counter()
        self.points = points
        self.graph = cknn_graph(points, k=k, delta=delta)
        self.complex = clique_complex(self.graph)
        self.w2 = triangle_weights(points, self.complex, k=k, delta=delta, rho=self.graph.rho_k)
        self.system = hodge_from_complex(self.complex, self.w2)
        self.basis = homology_basis(self.system.L)
        self.ica = ica_no_prewhite(self.basis.matrix) if self.basis.beta else None
        self.loops = None
        if loops and self.basis.beta:
            self.loops = shortest_homologous_loops(self.ica.Z, self.complex.n0, self.complex.edges,
                                                   self.graph.edge_dist)
        self.seconds = time.perf_counter() - t0


@pytest.fixture(scope="session")
def torus_run():
    from hodgeloops.synth import synth_manifold

    t0 = time.perf_counter()
    sm = synth_manifold("torus", n=1156, noise=0.01, seed=0)
    run = PipelineRun(sm.points, delta=1.0)
    run.manifold = sm
    run.seconds = time.perf_counter() - t0
    return run


@pytest.fixture(scope="session")
def genus2_run():
    from hodgeloops.synth import synth_manifold

    t0 = time.perf_counter()
    sm = synth_manifold("genus2", n=1500, seed=0)
    run = PipelineRun(sm.points, delta=0.8, loops=False)
    run.manifold = sm
    run.seconds = time.perf_counter() - t0
    return run
