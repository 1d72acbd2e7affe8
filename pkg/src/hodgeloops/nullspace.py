"""Harmonic basis extraction: smallest eigenpairs of L_k and Betti-number estimation."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

log = logging.getLogger(__name__)

ZERO_TOL = 1e-8
GAP_FACTOR = 100.0
MAX_ITER = 5000
DENSE_LIMIT = 600
MAX_BETA = 200


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = None if residuals is None else np.asarray(residuals)


class BettiAmbiguity(RuntimeError):
    """No clean spectral gap separates the zero eigenvalues from the rest."""

    def __init__(self, message: str, candidates: list[int]):
        super().__init__(message)
        self.candidates = candidates


@dataclass(frozen=True)
class HomologyBasis:
    matrix: np.ndarray  # (n_k, beta), orthonormal columns
    eigenvalues: np.ndarray  # the beta smallest
    residuals: np.ndarray  # |L y| per column
    spectrum: np.ndarray  # every eigenvalue computed, ascending

    @property
    def beta(self) -> int:
        return self.matrix.shape[1]

    @property
    def gap_ratio(self) -> float:
        b = self.beta
        if b >= len(self.spectrum):
            return float("nan")
        lo = max(self.spectrum[b - 1], ZERO_TOL) if b else ZERO_TOL
        return float(self.spectrum[b] / lo)


def _norm_bound(L) -> float:
    # Gershgorin row-sum bound on the spectral norm
    return float(np.max(np.asarray(abs(L).sum(axis=1)).ravel())) if L.shape[0] else 0.0


def _lanczos_top(op, n: int, k: int, tol: float, max_iter: int, v0) -> tuple[np.ndarray, np.ndarray]:
    ncv = min(n, max(2 * k + 1, k + 40))
    try:
        return sla.eigsh(op, k=k, which="LA", tol=tol, maxiter=max_iter, ncv=ncv, v0=v0)
    except sla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge in {max_iter} restarts",
                               residuals=np.asarray(exc.eigenvalues)) from exc


def _deflated_lanczos(L, m: int, c: float, tol: float, max_iter: int, seed: int,
                      max_passes: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Lanczos on ``c I - L``, repeated on the complement of the vectors found so far.

    A single Krylov sequence sees only one copy of a repeated eigenvalue
    (further copies appear only through round-off), so Betti numbers above one
    can be undercounted. Each extra pass deflates the current vectors; the
    loop ends once a pass finds nothing below the current ``m``-th value.
    """
    n = L.shape[0]
    rng = np.random.default_rng(seed)
    op = sla.LinearOperator((n, n), matvec=lambda x: c * x - L @ x, dtype=float)
    mu, V = _lanczos_top(op, n, m, tol, max_iter, rng.standard_normal(n))
    vals = c - mu
    for _ in range(max_passes):
        Q, _ = np.linalg.qr(V)
        if Q.shape[1] >= n - 1:
            break

        def deflated(x, Q=Q):
            x = x - Q @ (Q.T @ x)
            y = c * x - L @ x
            return y - Q @ (Q.T @ y)

        k = min(m, n - Q.shape[1] - 1)
        dop = sla.LinearOperator((n, n), matvec=deflated, dtype=float)
        v0 = rng.standard_normal(n)
        mu2, V2 = _lanczos_top(dop, n, k, tol, max_iter, v0 - Q @ (Q.T @ v0))
        new = c - mu2
        cutoff = np.sort(vals)[m - 1]
        hit = new < cutoff - tol * c
        if not np.any(hit):
            break
        log.info("deflation pass found %d further eigenpairs", int(hit.sum()))
        vals = np.concatenate([vals, new[hit]])
        V = np.hstack([V, V2[:, hit]])
        keep = np.argsort(vals, kind="stable")[:m]
        vals, V = vals[keep], V[:, keep]
    return vals, V


def smallest_eigenpairs(L, m: int, tol: float = 1e-10, max_iter: int = MAX_ITER,
                        seed: int = 0, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """The ``m`` smallest eigenpairs of a symmetric PSD matrix, ascending.

    ``method="lanczos"`` runs implicitly restarted Lanczos on the flipped
    operator ``c I - L`` (``c`` a Gershgorin bound), so no factorization of
    ``L`` is needed; deflation passes recover repeated eigenvalues.
    ``"lobpcg"`` iterates a block of ``m + 5`` vectors on ``L`` directly.
    ``"dense"`` uses a full symmetric eigendecomposition; ``"auto"`` picks it
    for small ``L`` or when ``m`` is a third of ``n`` or more. Every returned pair satisfies
    ``|L v - lambda v| <= tol * c``.
    """
    n = L.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"requested {m} eigenpairs of a {n}x{n} matrix")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT or 3 * m >= n else "lanczos"
    if method in ("lanczos", "lobpcg") and m >= n - 1:
        method = "dense"  # ARPACK needs k < n - 1; LOBPCG would go dense anyway
    L = sp.csr_matrix(L, dtype=float)
    c = max(_norm_bound(L), 1e-300)
    if method == "dense":
        vals, vecs = np.linalg.eigh(L.toarray())
        vals, vecs = vals[:m], vecs[:, :m]
    elif method == "lanczos":
        vals, vecs = _deflated_lanczos(L, m, c, tol, max_iter, seed)
    elif method == "lobpcg":
        rng = np.random.default_rng(seed)
        X0 = rng.standard_normal((n, min(n, m + 5)))
        vals, vecs = sla.lobpcg(L, X0, largest=False, tol=tol * c, maxiter=max_iter)
        vals, vecs = vals[:m], vecs[:, :m]
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(vals, kind="stable")
    vals, vecs = np.asarray(vals)[order], np.asarray(vecs)[:, order]
    # re-orthonormalize and Rayleigh-Ritz once to clean up
    Q, _ = np.linalg.qr(vecs)
    H = Q.T @ (L @ Q)
    evals, U = np.linalg.eigh((H + H.T) / 2)
    vecs = Q @ U
    vals = evals
    res = np.linalg.norm(L @ vecs - vecs * vals, axis=0)
    if np.any(res > tol * c * 10) and method != "dense":
        raise ConvergenceError(f"eigenpair residuals up to {res.max():.3e} exceed {tol * c:.3e}",
                               residuals=res)
    return vals, vecs


def estimate_betti(values, zero_tol: float = ZERO_TOL, gap_factor: float = GAP_FACTOR) -> int:
    """Count the (numerically) zero eigenvalues, insisting on a clean gap.

    ``beta`` is the number of values ``<= zero_tol``; the next value must be
    at least ``gap_factor * zero_tol``, otherwise ``BettiAmbiguity`` lists the
    candidate counts.
    """
    v = np.clip(np.asarray(values, dtype=float), 0.0, None)
    if np.any(np.diff(v) < -1e-12 * max(1.0, float(v.max(initial=0.0)))):
        raise ValueError("eigenvalues must be ascending")
    beta = int(np.sum(v <= zero_tol))
    if beta == len(v):
        raise BettiAmbiguity(f"all {len(v)} computed eigenvalues are zero; compute more",
                             candidates=[beta, beta + 1])
    ratio = v[beta] / max(v[beta - 1] if beta else 0.0, zero_tol)
    if ratio < gap_factor:
        upper = int(np.sum(v <= gap_factor * zero_tol))
        raise BettiAmbiguity(f"eigengap ratio {ratio:.3g} below {gap_factor:g} after {beta} zero values",
                             candidates=list(range(beta, upper + 1)))
    return beta


def homology_basis(L, zero_tol: float = ZERO_TOL, gap_factor: float = GAP_FACTOR,
                   seed: int = 0, first_pass: int = 10, method: str = "auto",
                   max_iter: int = MAX_ITER, max_beta: int = MAX_BETA) -> HomologyBasis:
    """Null-space basis of ``L`` with its Betti number read off the spectrum.

    A first pass computes ``first_pass`` eigenvalues; if the zero block might
    be larger, ``beta + 5`` are recomputed. Past ``max_beta`` candidates the
    search stops with ``BettiAmbiguity``.
    """
    n = L.shape[0]
    if n == 0:
        return HomologyBasis(np.zeros((0, 0)), np.zeros(0), np.zeros(0), np.zeros(0))
    m = min(first_pass, n)
    while True:
        vals, vecs = smallest_eigenpairs(L, m, seed=seed, method=method, max_iter=max_iter)
        if m == n:
            beta = int(np.sum(np.clip(vals, 0, None) <= zero_tol))
            if beta < n:
                beta = estimate_betti(vals, zero_tol, gap_factor)
            break
        try:
            beta = estimate_betti(vals, zero_tol, gap_factor)
        except BettiAmbiguity as exc:
            if max(exc.candidates) + 1 >= m and m < n:
                if m > max_beta:
                    raise BettiAmbiguity(f"{exc}; gave up above {max_beta} candidates",
                                         exc.candidates) from None
                m = min(n, max(max(exc.candidates) + 6, 2 * m))
                continue
            raise
        if beta + 5 > m and m < n:
            if m > max_beta:
                raise BettiAmbiguity(f"more than {max_beta} zero eigenvalues", [beta, beta + 1])
            m = min(n, beta + 6)
            continue
        break
    Y = vecs[:, :beta]
    res = np.linalg.norm(L @ Y, axis=0) if beta else np.zeros(0)
    log.info("beta=%d, smallest eigenvalues %s", beta, np.array2string(vals[: beta + 2], precision=3))
    return HomologyBasis(Y, vals[:beta], res, vals)
