"""Connected sums as localized perturbations of a block-diagonal Hodge Laplacian.

A *gluing instance* pairs the complex built from the whole point cloud (the
glued complex) with the disjoint union of complexes built from each prime
part separately. Cells present in both and supported on a single part are
non-intersecting (``N``); the rest are created (``C``, glued only) or
destroyed (``D``, disjoint only). This module measures the weight
perturbation on ``N``, the block differences of the two Laplacians, and both
sides of the subspace perturbation bound.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .complexes import Complex2, clique_complex, cknn_graph, triangle_weights, triangles_of, DEFAULT_KNN
from .hodge import HodgeSystem, hodge_from_complex, spectral_norm_upper
from .nullspace import ZERO_TOL, GAP_FACTOR, estimate_betti, homology_basis, smallest_eigenpairs

log = logging.getLogger(__name__)


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class LevelPartition:
    """Index sets of one cell dimension.

    ``n_glued[i]`` and ``n_disjoint[i]`` are the same non-intersecting cell in
    the two complexes' orderings.
    """

    n_glued: np.ndarray
    n_disjoint: np.ndarray
    created: np.ndarray  # glued indices
    destroyed: np.ndarray  # disjoint indices

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.n_glued), len(self.created), len(self.destroyed)


@dataclass(frozen=True)
class SimplexPartition:
    levels: dict[int, LevelPartition]

    def __getitem__(self, level: int) -> LevelPartition:
        return self.levels[level]


@dataclass(frozen=True)
class Epsilons:
    eps_k: float
    eps_km1: float
    epsp_k: float
    epsp_km1: float


@dataclass
class PerturbReport:
    eps_k: float
    eps_km1: float
    epsp_k: float
    epsp_km1: float
    eigengaps: list[float]
    lambda_k: float
    lambda_km1: float
    diff_down_norm: float
    diff_up_norm: float
    lhs: float
    rhs: float
    cap_down: float
    cap_up: float
    caps_met: bool
    bound_holds: bool
    beta: int
    beta_parts: list[int]
    sizes: dict[str, list[int]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GluingInstance:
    glued: Complex2
    disjoint: Complex2
    glued_sys: HodgeSystem
    disjoint_sys: HodgeSystem
    partition: SimplexPartition
    labels: np.ndarray


def _keys(cells: np.ndarray) -> dict[tuple[int, ...], int]:
    return {tuple(c): i for i, c in enumerate(np.asarray(cells).tolist())}


def _level_partition(glued_cells, disjoint_cells, labels) -> LevelPartition:
    gk, dk = _keys(glued_cells), _keys(disjoint_cells)
    n_g, n_d, created = [], [], []
    for key, i in gk.items():
        j = dk.get(key)
        if j is not None and len({int(labels[v]) for v in key}) == 1:
            n_g.append(i)
            n_d.append(j)
        else:
            created.append(i)
    shared = set(n_d)
    destroyed = [j for j in dk.values() if j not in shared]
    order = np.argsort(n_g, kind="stable")
    as_int = lambda a: np.asarray(a, dtype=np.int64)
    return LevelPartition(as_int(n_g)[order], as_int(n_d)[order], np.sort(as_int(created)),
                          np.sort(as_int(destroyed)))


def partition_by_labels(glued: Complex2, disjoint: Complex2, labels) -> SimplexPartition:
    """Non-intersecting / created / destroyed cells from per-vertex part labels."""
    labels = np.asarray(labels)
    if glued.n_vertices != disjoint.n_vertices or len(labels) != glued.n_vertices:
        raise PartitionError("both complexes and the labels must share one vertex set")
    verts = np.arange(glued.n_vertices)
    return SimplexPartition({
        0: LevelPartition(verts, verts, verts[:0], verts[:0]),
        1: _level_partition(glued.edges, disjoint.edges, labels),
        2: _level_partition(glued.cells2, disjoint.cells2, labels),
    })


def disjoint_complex(points, labels, k: int = DEFAULT_KNN, delta: float = 1.0
                     ) -> tuple[Complex2, np.ndarray]:
    """Union of the CkNN clique complexes of each part, on global vertex ids.

    Returns the complex and its triangle weights, each part using its own
    k-NN radii.
    """
    X = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    edges, tris, weights = [], [], []
    for lab in np.unique(labels):
        idx = np.nonzero(labels == lab)[0]
        g = cknn_graph(X[idx], k=k, delta=delta)
        cx = clique_complex(g)
        w = triangle_weights(X[idx], cx, k=k, delta=delta, rho=g.rho_k)
        edges.append(idx[cx.edges])
        tris.append(idx[cx.cells2])
        weights.append(w)
    E = np.vstack(edges)
    T = np.vstack(tris)
    w = np.concatenate(weights)
    E = E[np.lexsort((E[:, 1], E[:, 0]))]
    order = np.lexsort((T[:, 2], T[:, 1], T[:, 0]))
    return Complex2("simplicial", len(X), E, T[order]), w[order]


def build_gluing(points, labels, k: int = DEFAULT_KNN, delta: float = 1.0,
                 disjoint: str = "restrict") -> GluingInstance:
    """Glued complex on the whole cloud against a disjoint per-part complex.

    ``disjoint="restrict"`` drops the glued cells that span two parts (same
    kernel, so shared triangles keep their weights); ``"resample"`` rebuilds
    each part from scratch with its own k-NN radii.
    """
    X = np.asarray(points, dtype=float)
    g = cknn_graph(X, k=k, delta=delta)
    glued = clique_complex(g)
    w_glued = triangle_weights(X, glued, k=k, delta=delta, rho=g.rho_k)
    if disjoint == "restrict":
        return restrict_gluing(glued, labels, w_glued)
    if disjoint != "resample":
        raise ValueError(f"unknown disjoint construction {disjoint!r}")
    disjoint, w_disj = disjoint_complex(X, labels, k=k, delta=delta)
    part = partition_by_labels(glued, disjoint, labels)
    return GluingInstance(glued, disjoint, hodge_from_complex(glued, w_glued),
                          hodge_from_complex(disjoint, w_disj), part, np.asarray(labels))


def restrict_gluing(glued: Complex2, labels, w2=None) -> GluingInstance:
    """Gluing instance whose disjoint side drops every cell spanning two parts.

    Useful for hand-built complexes: the destroyed sets are empty and the
    disjoint weights equal the glued ones on shared triangles.
    """
    labels = np.asarray(labels)
    w2 = np.ones(glued.n2) if w2 is None else np.asarray(w2, dtype=float)
    same_e = labels[glued.edges[:, 0]] == labels[glued.edges[:, 1]]
    cl = labels[glued.cells2]
    same_t = np.all(cl == cl[:, :1], axis=1)
    disjoint = Complex2(glued.kind, glued.n_vertices, glued.edges[same_e], glued.cells2[same_t])
    part = partition_by_labels(glued, disjoint, labels)
    return GluingInstance(glued, disjoint, hodge_from_complex(glued, w2),
                          hodge_from_complex(disjoint, w2[same_t]), part, labels)


def compute_epsilons(glued: HodgeSystem, disjoint: HodgeSystem, part: SimplexPartition) -> Epsilons:
    """Maximum relative weight changes on non-intersecting cells.

    The reference weights use only non-intersecting cofaces of the glued
    complex: ``w~_k = |B_{k+1}[N_k, N_{k+1}]| w_{k+1}`` and
    ``w~_{k-1} = |B_k[:, N_k]| w~_k``. ``eps`` bounds how far the glued and
    disjoint weights sit above the reference; ``eps'`` bounds the net change
    between them in both ratio directions.
    """
    k = glued.k
    Pk, Pk1, Pkm1 = part[k], part[k + 1], part[k - 1]
    if glued.B_k1 is None or glued.B_k is None:
        raise PartitionError("boundary matrices are required to form reference weights")
    absB1 = abs(sp.csr_matrix(glued.B_k1, dtype=float))
    w_next = glued.w_k1.values[Pk1.n_glued]
    wt_k = np.asarray(absB1[Pk.n_glued][:, Pk1.n_glued] @ w_next).ravel()
    absB = abs(sp.csr_matrix(glued.B_k, dtype=float))
    wt_km1 = np.asarray(absB[:, Pk.n_glued] @ wt_k).ravel()[Pkm1.n_glued]
    if np.any(wt_k <= 0) or np.any(wt_km1 <= 0):
        bad = int(np.sum(wt_k <= 0) + np.sum(wt_km1 <= 0))
        raise PartitionError(f"{bad} non-intersecting cells have no non-intersecting coface")

    def eps(w, w_hat, w_ref):
        return max(0.0, float(np.max(np.maximum(w / w_ref - 1, w_hat / w_ref - 1))))

    def eps_net(w, w_hat):
        return float(np.max(np.maximum(np.abs(w / w_hat - 1), np.abs(w_hat / w - 1))))

    w_k, wh_k = glued.w_k.values[Pk.n_glued], disjoint.w_k.values[Pk.n_disjoint]
    w_km1, wh_km1 = glued.w_km1.values[Pkm1.n_glued], disjoint.w_km1.values[Pkm1.n_disjoint]
    return Epsilons(eps(w_k, wh_k, wt_k), eps(w_km1, wh_km1, wt_km1),
                    eps_net(w_k, wh_k), eps_net(w_km1, wh_km1))


def subspace_error(Y, Y_hat, rows=None, rows_hat=None) -> tuple[float, np.ndarray]:
    """``min_O |Y[rows] - Y_hat[rows_hat] O|_F^2`` over orthogonal ``O``.

    ``rows`` may be a boolean mask or an index array; ``rows_hat`` defaults to
    ``rows``.
    """
    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.shape[1] != Y_hat.shape[1]:
        raise ValueError(f"column counts differ: {Y.shape[1]} vs {Y_hat.shape[1]}")
    if rows is not None:
        Y = Y[rows]
        Y_hat = Y_hat[rows if rows_hat is None else rows_hat]
    if Y.shape != Y_hat.shape:
        raise ValueError("row selections have different sizes")
    U, _, Vt = np.linalg.svd(Y_hat.T @ Y)
    O = U @ Vt
    return float(np.linalg.norm(Y - Y_hat @ O) ** 2), O


def hypothesis_caps(eps: Epsilons, lambda_k: float, lambda_km1: float) -> tuple[float, float]:
    """Upper limits on the squared down/up difference norms under which the bound applies."""
    sp_k, sp_km1 = np.sqrt(eps.epsp_k), np.sqrt(eps.epsp_km1)
    down = (2 * sp_k + eps.epsp_k + (1 + sp_k) ** 2 * sp_km1 + 4 * np.sqrt(eps.eps_km1)) ** 2 * lambda_km1 ** 2
    up = (2 * sp_k + eps.epsp_k + 2 * eps.eps_k + 4 * np.sqrt(eps.eps_k)) ** 2 * lambda_k ** 2
    return float(down), float(up)


def theorem_bound(diff_down_norm: float, diff_up_norm: float, beta_k: int, eigengaps,
                  eps: Epsilons | None = None, kind: str = "simplicial", k: int = 1) -> dict:
    """Right-hand side ``8 beta (|DiffDown|^2 + |DiffUp|^2) / min delta``, plus the caps.

    Returns a dict with ``rhs`` and, when ``eps`` is given, ``cap_down``,
    ``cap_up`` and ``caps_met`` (whether the measured squared norms respect them).
    """
    gaps = np.asarray(eigengaps, dtype=float)
    if gaps.size == 0 or np.any(gaps <= 0):
        raise ValueError("eigengaps must be positive; the bound is undefined otherwise")
    rhs = 8.0 * beta_k * (diff_down_norm ** 2 + diff_up_norm ** 2) / float(gaps.min())
    out = {"rhs": float(rhs)}
    if eps is not None:
        lam_k = spectral_norm_upper(kind, k)
        lam_km1 = spectral_norm_upper(kind, k - 1)
        cap_down, cap_up = hypothesis_caps(eps, lam_k, lam_km1)
        out.update(cap_down=cap_down, cap_up=cap_up, lambda_k=lam_k, lambda_km1=lam_km1,
                   caps_met=bool(diff_down_norm ** 2 <= cap_down and diff_up_norm ** 2 <= cap_up))
    return out


def _embed(n_union: int, rows_from, rows_to, n_from: int) -> sp.csr_matrix:
    """Selection matrix ``P`` (``n_union x n_from``) sending ``rows_from`` to ``rows_to``."""
    return sp.csr_matrix((np.ones(len(rows_from)), (rows_to, rows_from)), shape=(n_union, n_from))


def _block_pair(M, M_hat, P: LevelPartition) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Union-indexed ``(L, L_hat)`` in the N, C, D block layout.

    ``L`` keeps the glued operator on ``N u C`` and borrows ``L_hat[D, D]``;
    ``L_hat`` keeps the disjoint operator on ``N u D`` and borrows ``L[C, C]``.
    Cross blocks between ``C`` and ``D`` are zero in both, so the difference
    vanishes on the ``C`` and ``D`` diagonal blocks.
    """
    nN, nC, nD = P.sizes
    n = nN + nC + nD
    idx_N, idx_C, idx_D = np.arange(nN), nN + np.arange(nC), nN + nC + np.arange(nD)
    Pg = _embed(n, np.concatenate([P.n_glued, P.created]), np.concatenate([idx_N, idx_C]), M.shape[0])
    Pd = _embed(n, np.concatenate([P.n_disjoint, P.destroyed]), np.concatenate([idx_N, idx_D]),
                M_hat.shape[0])
    PC = _embed(n, P.created, idx_C, M.shape[0])
    PD = _embed(n, P.destroyed, idx_D, M_hat.shape[0])
    L = Pg @ M @ Pg.T + PD @ M_hat @ PD.T
    L_hat = Pd @ M_hat @ Pd.T + PC @ M @ PC.T
    return sp.csr_matrix(L), sp.csr_matrix(L_hat)


def _spectral_norm(M, tol: float = 1e-8) -> float:
    M = sp.csr_matrix(M)
    M.eliminate_zeros()
    if M.nnz == 0:
        return 0.0
    if M.shape[0] <= 400:
        return float(np.max(np.abs(np.linalg.eigvalsh(M.toarray()))))
    v0 = np.random.default_rng(0).standard_normal(M.shape[0])
    val = sla.eigsh(M, k=1, which="LM", tol=tol, v0=v0, return_eigenvectors=False)
    return float(abs(val[0]))


def diff_laplacians(glued: HodgeSystem, disjoint: HodgeSystem, part: SimplexPartition,
                    return_matrices: bool = False):
    """Spectral norms of the down and up block differences ``L - L_hat``."""
    P = part[glued.k]
    if len(P.n_glued) != len(P.n_disjoint):
        raise IndexError("non-intersecting index sets are misaligned")
    if len(P.n_glued) + len(P.created) != glued.n or len(P.n_disjoint) + len(P.destroyed) != disjoint.n:
        raise IndexError("partition does not cover both complexes")
    Ld, Lhd = _block_pair(glued.L_down, disjoint.L_down, P)
    Lu, Lhu = _block_pair(glued.L_up, disjoint.L_up, P)
    dd, du = _spectral_norm(Ld - Lhd), _spectral_norm(Lu - Lhu)
    if return_matrices:
        return dd, du, (Ld - Lhd, Lu - Lhu)
    return dd, du


def part_eigengaps(disjoint: HodgeSystem, part: SimplexPartition, labels, cells: np.ndarray,
                   zero_tol: float = ZERO_TOL, gap_factor: float = GAP_FACTOR,
                   seed: int = 0) -> tuple[list[float], list[int]]:
    """Smallest nonzero eigenvalue and Betti number of each part's diagonal block."""
    labels = np.asarray(labels)
    owner = labels[np.asarray(cells)[:, 0]]
    gaps, betas = [], []
    L = sp.csr_matrix(disjoint.L)
    for lab in np.unique(labels):
        idx = np.nonzero(owner == lab)[0]
        if len(idx) == 0:
            continue
        block = L[idx][:, idx]
        m = min(len(idx), 10)
        while True:
            vals, _ = smallest_eigenpairs(block, m, seed=seed)
            beta = estimate_betti(vals, zero_tol, gap_factor) if m < len(idx) else int(np.sum(vals <= zero_tol))
            if beta < m or m == len(idx):
                break
            m = min(len(idx), 2 * m)
        if beta >= len(vals):
            raise ValueError(f"part {lab}: no nonzero eigenvalue, eigengap undefined")
        gaps.append(float(vals[beta]))
        betas.append(beta)
    return gaps, betas


def evaluate_gluing(inst: GluingInstance, zero_tol: float = ZERO_TOL, gap_factor: float = GAP_FACTOR,
                    seed: int = 0) -> PerturbReport:
    """Both sides of the subspace bound for one gluing instance."""
    gs, ds, part = inst.glued_sys, inst.disjoint_sys, inst.partition
    eps = compute_epsilons(gs, ds, part)
    gaps, beta_parts = part_eigengaps(ds, part, inst.labels, inst.disjoint.edges, zero_tol, gap_factor, seed)
    Y = homology_basis(gs.L, zero_tol, gap_factor, seed=seed).matrix
    Y_hat = homology_basis(ds.L, zero_tol, gap_factor, seed=seed).matrix
    beta = Y.shape[1]
    if beta != Y_hat.shape[1]:
        log.warning("gluing changed the Betti number: %d vs %d", beta, Y_hat.shape[1])
        lhs = float("nan")
    else:
        lhs, _ = subspace_error(Y, Y_hat, part[gs.k].n_glued, part[gs.k].n_disjoint)
    dd, du = diff_laplacians(gs, ds, part)
    b = theorem_bound(dd, du, beta, gaps, eps, gs.kind, gs.k)
    holds = bool(np.isfinite(lhs) and lhs <= b["rhs"])
    sizes = {f"level{l}": list(part[l].sizes) for l in sorted(part.levels)}
    return PerturbReport(eps.eps_k, eps.eps_km1, eps.epsp_k, eps.epsp_km1, gaps, b["lambda_k"],
                         b["lambda_km1"], dd, du, lhs, b["rhs"], b["cap_down"], b["cap_up"],
                         b["caps_met"], holds, beta, beta_parts, sizes)


def flat_torus_complex(side: int, radius: float = 1.5) -> tuple[Complex2, np.ndarray]:
    """Clique complex of a periodic ``side x side`` unit lattice at connection ``radius``.

    Returns the complex and the lattice displacement of every edge
    (from its first to its second vertex, wrapped to the short way round).
    """
    if radius < np.sqrt(2) - 1e-12:
        raise ValueError("radius below sqrt(2) leaves the lattice squares unfilled")
    r = int(np.floor(radius))
    if side <= 4 * r:
        raise ValueError("side too small for this radius; cliques would wrap around")
    offsets = [(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1)
               if (a, b) > (0, 0) and a * a + b * b <= radius * radius + 1e-12]
    i, j = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    i, j = i.ravel(), j.ravel()
    vid = i * side + j
    E, disp = [], []
    for a, b in offsets:
        other = ((i + a) % side) * side + (j + b) % side
        E.append(np.stack([vid, other], axis=1))
        disp.append(np.tile([a, b], (len(vid), 1)))
    E = np.vstack(E)
    disp = np.vstack(disp).astype(float)
    flip = E[:, 0] > E[:, 1]
    E[flip] = E[flip][:, ::-1]
    disp[flip] *= -1
    order = np.lexsort((E[:, 1], E[:, 0]))
    E, disp = E[order], disp[order]
    cx = Complex2("simplicial", side * side, E, triangles_of(side * side, E))
    return cx, disp


def periodic_grid_complex(side: int) -> Complex2:
    """Cubical complex of a ``side x side`` grid with both directions wrapped."""
    if side < 3:
        raise ValueError("side must be at least 3")
    i, j = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v = lambda a, b: (a % side) * side + b % side
    E = np.vstack([np.stack([v(i, j), v(i, j + 1)], axis=1), np.stack([v(i, j), v(i + 1, j)], axis=1)])
    E = np.sort(E, axis=1)
    E = E[np.lexsort((E[:, 1], E[:, 0]))]
    R = np.stack([v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)], axis=1)
    return Complex2("cubical", side * side, E, R)


@dataclass(frozen=True)
class EnvelopeFit:
    residual: float  # relative, over occupied bins
    semi_axes: np.ndarray  # ascending
    n_bins: int
    skipped: bool = False


def ellipsoid_envelope_check(embedding, n_bins: int = 36, symmetric: bool = True,
                             seed: int = 0) -> EnvelopeFit:
    """Fit a centred ellipsoid to the outer envelope of an embedding.

    Points are binned by direction (polar angle for ``m = 2``, nearest of
    ``n_bins`` random unit directions otherwise); the farthest point of each
    bin is kept and ``x^T Q x = 1`` is fit by least squares. The residual is
    the relative 2-norm misfit between observed and fitted radii. With
    ``symmetric`` each row also contributes its negation, since edge
    orientation is a convention.
    """
    E = np.asarray(embedding, dtype=float)
    m = E.shape[1]
    if m < 2:
        return EnvelopeFit(float("nan"), np.zeros(m), 0, skipped=True)
    if symmetric:
        E = np.vstack([E, -E])
    r = np.linalg.norm(E, axis=1)
    E, r = E[r > 0], r[r > 0]
    U = E / r[:, None]
    if m == 2:
        ang = np.arctan2(U[:, 1], U[:, 0])
        b = np.floor((ang + np.pi) / (2 * np.pi) * n_bins).astype(int) % n_bins
    else:
        D = np.random.default_rng(seed).standard_normal((n_bins, m))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        b = np.argmax(U @ D.T, axis=1)
    best = {}
    for idx in np.argsort(r):
        best[int(b[idx])] = idx  # ascending order leaves the farthest
    sel = np.array(sorted(best.values()))
    P, R = E[sel], r[sel]
    iu = np.triu_indices(m)
    # x^T Q x with off-diagonal terms counted twice
    feats = np.stack([P[:, a] * P[:, c] * (1 if a == c else 2) for a, c in zip(*iu)], axis=1)
    q, *_ = np.linalg.lstsq(feats, np.ones(len(P)), rcond=None)
    Q = np.zeros((m, m))
    Q[iu] = q
    Q = Q + Q.T - np.diag(np.diag(Q))
    evals = np.linalg.eigvalsh(Q)
    if np.any(evals <= 0):
        return EnvelopeFit(float("inf"), np.full(m, np.nan), len(sel))
    Us = P / R[:, None]
    fitted = 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", Us, Q, Us))
    resid = float(np.linalg.norm(fitted - R) / np.linalg.norm(R))
    return EnvelopeFit(resid, np.sort(1.0 / np.sqrt(evals)), len(sel))
