import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from hodgeloops.boundary import boundary_maps
from hodgeloops.complexes import Complex2, grid_complex, pixel_coordinates
from hodgeloops.hodge import hodge_from_complex
from hodgeloops.nullspace import homology_basis
from hodgeloops.perturb import (Epsilons, PartitionError, compute_epsilons, diff_laplacians,
                                ellipsoid_envelope_check, evaluate_gluing, flat_torus_complex,
                                hypothesis_caps, partition_by_labels, periodic_grid_complex,
                                restrict_gluing, subspace_error, theorem_bound)

from conftest import cycle_union

# two triangles bridged by a third one spanning both parts
SIX = Complex2("simplicial", 6,
               [[0, 1], [0, 2], [1, 2], [2, 3], [2, 4], [3, 4], [3, 5], [4, 5]],
               [[0, 1, 2], [2, 3, 4], [3, 4, 5]])
SIX_LABELS = np.array([0, 0, 0, 1, 1, 1])
SIX_W2 = np.array([1.0, 0.5, 2.0])


def test_identical_complexes_have_zero_eps():
    cx = SIX
    inst = restrict_gluing(cx, np.zeros(6, int), SIX_W2)
    eps = compute_epsilons(inst.glued_sys, inst.disjoint_sys, inst.partition)
    assert eps == Epsilons(0.0, 0.0, 0.0, 0.0)
    assert diff_laplacians(inst.glued_sys, inst.disjoint_sys, inst.partition) == (0.0, 0.0)


def test_six_vertex_partition_sizes():
    inst = restrict_gluing(SIX, SIX_LABELS, SIX_W2)
    assert inst.partition[1].sizes == (6, 2, 0)
    assert inst.partition[2].sizes == (2, 1, 0)
    assert inst.partition[0].sizes == (6, 0, 0)


def test_six_vertex_eps_hand_values():
    inst = restrict_gluing(SIX, SIX_LABELS, SIX_W2)
    eps = compute_epsilons(inst.glued_sys, inst.disjoint_sys, inst.partition)
    assert eps.eps_k == pytest.approx(0.25)
    assert eps.epsp_k == pytest.approx(0.25)
    assert eps.eps_km1 == pytest.approx(0.5)
    assert eps.epsp_km1 == pytest.approx(0.5)


def test_six_vertex_eps_dense_oracle():
    B1, B2 = (B.toarray() for B in boundary_maps(SIX))
    w1 = np.abs(B2) @ SIX_W2
    w0 = np.abs(B1) @ w1
    n1 = [0, 1, 2, 5, 6, 7]
    n2 = [0, 2]
    wt1 = np.abs(B2[np.ix_(n1, n2)]) @ SIX_W2[n2]
    wt0 = np.abs(B1[:, n1]) @ wt1
    wh1 = np.abs(B2[np.ix_(n1, n2)]) @ SIX_W2[n2]
    wh0 = np.abs(B1[:, n1]) @ wh1
    want_k = max(np.max(w1[n1] / wt1 - 1), np.max(wh1 / wt1 - 1))
    want_km1 = max(np.max(w0 / wt0 - 1), np.max(wh0 / wt0 - 1))
    inst = restrict_gluing(SIX, SIX_LABELS, SIX_W2)
    eps = compute_epsilons(inst.glued_sys, inst.disjoint_sys, inst.partition)
    assert eps.eps_k == pytest.approx(want_k, rel=1e-14)
    assert eps.eps_km1 == pytest.approx(want_km1, rel=1e-14)


def test_reference_weights_need_cofaces():
    glued = cycle_union(3, 3)
    glued = Complex2("simplicial", 6, np.vstack([glued.edges, [[2, 3]]]), [])
    inst = restrict_gluing(glued, SIX_LABELS)
    with pytest.raises(PartitionError):
        compute_epsilons(inst.glued_sys, inst.disjoint_sys, inst.partition)


def test_partition_requires_shared_vertices():
    with pytest.raises(PartitionError):
        partition_by_labels(SIX, cycle_union(3), SIX_LABELS)


def dense_l1(cx):
    B1, B2 = (B.toarray().astype(float) for B in boundary_maps(cx))
    w1 = np.ones(cx.n1)  # no 2-cells: every edge floored to 1
    w0 = np.abs(B1) @ w1
    A1 = np.diag(w0 ** -0.5) @ B1 @ np.diag(w1 ** 0.5)
    return A1.T @ A1


def test_bridged_triangles_diff_norms():
    disjoint = cycle_union(3, 3)  # edges 01 02 12 34 35 45
    glued = Complex2("simplicial", 6, np.vstack([disjoint.edges[:3], [[2, 3]], disjoint.edges[3:]]), [])
    inst = restrict_gluing(glued, SIX_LABELS)
    dd, du = diff_laplacians(inst.glued_sys, inst.disjoint_sys, inst.partition)
    L, Lh = dense_l1(glued), dense_l1(disjoint)
    order = [0, 1, 2, 4, 5, 6, 3]  # N in glued order, then the created bridge
    Lb = L[np.ix_(order, order)]
    Lhb = np.zeros((7, 7))
    Lhb[:6, :6] = Lh
    Lhb[6, 6] = L[3, 3]
    assert dd == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(Lb - Lhb))), rel=1e-12)
    assert du == 0.0


def test_subspace_error_exact_rotation():
    rng = np.random.default_rng(0)
    Yh, _ = np.linalg.qr(rng.standard_normal((20, 3)))
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    lhs, O = subspace_error(Yh @ Q, Yh)
    assert lhs < 1e-24
    assert np.allclose(O, Q)


def test_subspace_error_zeroed_row():
    rng = np.random.default_rng(1)
    Y, _ = np.linalg.qr(rng.standard_normal((20, 3)))
    Y2 = Y.copy()
    Y2[4] = 0
    Y2 /= np.linalg.norm(Y2, axis=0)
    assert subspace_error(Y, Y2)[0] <= 2 * 3


def test_subspace_error_matches_search():
    rng = np.random.default_rng(2)
    Y, Yh = rng.standard_normal((2, 20, 3))
    lhs, _ = subspace_error(Y, Yh)

    def cost(v, flip):
        O = Rotation.from_rotvec(v).as_matrix() @ np.diag([1, 1, flip])
        return np.linalg.norm(Y - Yh @ O) ** 2

    best = min(minimize(cost, rng.uniform(-np.pi, np.pi, 3), args=(f,), method="Nelder-Mead",
                        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000}).fun
               for f in (1, -1) for _ in range(20))
    assert lhs <= best + 1e-9
    assert best - lhs < 1e-3


def test_subspace_error_row_selection():
    Y = np.arange(12.0).reshape(6, 2)
    lhs, _ = subspace_error(Y, Y[::-1], rows=[0, 1], rows_hat=[5, 4])
    assert lhs == pytest.approx(0.0, abs=1e-20)
    with pytest.raises(ValueError):
        subspace_error(Y, Y[:, :1])


def test_bound_arithmetic():
    assert theorem_bound(0.0, 0.0, 2, [0.5])["rhs"] == 0.0
    dd, du = np.sqrt(0.004), np.sqrt(0.006)
    assert theorem_bound(dd, du, 2, [0.7, 0.5])["rhs"] == pytest.approx(0.32)
    with pytest.raises(ValueError):
        theorem_bound(dd, du, 2, [0.0])


def test_up_cap_value():
    _, up = hypothesis_caps(Epsilons(0.04, 0.0, 0.04, 0.0), 3.0, 2.0)
    assert up == pytest.approx(1.32 ** 2 * 9)
    down, _ = hypothesis_caps(Epsilons(0.0, 0.0, 0.0, 0.0), 3.0, 2.0)
    assert down == 0.0


def test_caps_flag():
    eps = Epsilons(0.04, 0.04, 0.04, 0.04)
    b = theorem_bound(0.1, 0.1, 1, [1.0], eps)
    assert b["caps_met"] and b["lambda_k"] == 3 and b["lambda_km1"] == 2
    assert not theorem_bound(10.0, 0.1, 1, [1.0], eps)["caps_met"]


def test_flat_torus_lattice_shape():
    cx, disp = flat_torus_complex(12)
    cx.check_closure()
    assert (cx.n0, cx.n1, cx.n2) == (144, 4 * 144, 4 * 144)
    assert set(map(tuple, np.abs(disp).astype(int).tolist())) == {(0, 1), (1, 0), (1, 1)}
    with pytest.raises(ValueError):
        flat_torus_complex(4)
    with pytest.raises(ValueError):
        flat_torus_complex(10, radius=1.0)


def test_periodic_grid_betti():
    cx = periodic_grid_complex(6)
    cx.check_closure()
    assert homology_basis(hodge_from_complex(cx).L).beta == 2


def test_envelope_isotropic_and_degenerate():
    cx, _ = flat_torus_complex(20)
    fit = ellipsoid_envelope_check(homology_basis(hodge_from_complex(cx).L).matrix)
    assert fit.residual <= 0.15
    assert fit.semi_axes[1] / fit.semi_axes[0] < 1.1
    assert ellipsoid_envelope_check(np.ones((5, 1))).skipped


def test_envelope_recovers_ellipse():
    rng = np.random.default_rng(0)
    t = rng.uniform(0, 2 * np.pi, 3000)
    r = np.sqrt(rng.uniform(0, 1, 3000))
    P = np.column_stack([2 * r * np.cos(t), r * np.sin(t)]) @ Rotation.from_euler("z", 0.4).as_matrix()[:2, :2]
    fit = ellipsoid_envelope_check(P)
    assert fit.residual < 0.02
    assert np.allclose(fit.semi_axes, [1, 2], rtol=0.03)
    fit3 = ellipsoid_envelope_check(rng.standard_normal((4000, 3)) * [1, 2, 3], n_bins=60)
    assert np.isfinite(fit3.residual)


def test_two_annuli_report():
    mask = np.ones((7, 15), bool)
    mask[3, 3] = mask[3, 11] = False
    cx = grid_complex(mask)
    labels = (pixel_coordinates(mask)[:, 1] > 7).astype(int)
    rep = evaluate_gluing(restrict_gluing(cx, labels))
    assert rep.beta == 2 and rep.beta_parts == [1, 1]
    assert rep.sizes["level1"] == [173, 7, 0]
    assert (rep.lambda_k, rep.lambda_km1) == (4.0, 2.0)
    assert rep.caps_met and rep.bound_holds
    assert 0 < rep.lhs <= rep.rhs
    assert set(rep.to_json_dict()) >= {"eps_k", "eps_km1", "lhs", "rhs", "caps_met"}
