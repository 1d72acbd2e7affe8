"""Infomax ICA on a harmonic basis, without centering or whitening.

Rows of ``Y`` are treated as ``beta``-dimensional samples. Every update is a
right-multiplication of ``Y`` by a ``beta x beta`` matrix, so each column of
``Z = Y @ unmix`` stays an exact linear combination of harmonic cochains.
Centering is skipped because subtracting row means adds a constant cochain,
which is neither divergence- nor curl-free. Whitening is skipped because an
orthonormal ``Y`` is already white up to the ``sqrt(n)`` scale used below.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UnmixingResult:
    Z: np.ndarray  # (n_k, beta), unit-norm columns
    unmix: np.ndarray  # Z = Y @ unmix
    iterations: int
    converged: bool
    last_update: float
    condition: float


def _normalize(Y: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Rescale and sign-fix the columns of ``M`` so that ``Y @ M`` has unit columns
    whose largest-magnitude entry is positive."""
    Z = Y @ M
    norms = np.linalg.norm(Z, axis=0)
    norms[norms == 0] = 1.0
    M = M / norms
    Z = Z / norms
    idx = np.argmax(np.abs(Z), axis=0)
    signs = np.sign(Z[idx, np.arange(Z.shape[1])])
    signs[signs == 0] = 1.0
    return M * signs


def ica_no_prewhite(Y, lr: float = 0.01, max_iter: int = 10000, conv_tol: float = 1e-7,
                    seed: int = 0, init: str = "identity", anneal: float = 0.9) -> UnmixingResult:
    """Natural-gradient Infomax with the logistic score, full batch.

    With ``X = sqrt(n) * Y`` and ``U = X @ M`` the update is

        M <- M + lr * M (I + U^T (1 - 2 sigmoid(U)) / n),

    the transpose of the Bell-Sejnowski rule for row samples. The learning
    rate is multiplied by ``anneal`` when the iteration oscillates (successive
    updates more than 60 degrees apart), and the iteration restarts from the
    initial matrix with a smaller rate if it diverges. ``seed`` only matters
    for ``init="random"``.
    """
    Y = np.asarray(getattr(Y, "matrix", Y), dtype=float)
    n, beta = Y.shape
    if beta < 1:
        raise ValueError("ICA needs at least one basis column")
    if beta == 1:
        M = _normalize(Y, np.ones((1, 1)))
        return UnmixingResult(Y @ M, M, 0, True, 0.0, 1.0)
    scale = np.sqrt(n)
    X = Y * scale
    I = np.eye(beta)
    if init == "identity":
        M0 = I.copy()
    elif init == "random":
        M0, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((beta, beta)))
    else:
        raise ValueError(f"unknown init {init!r}")

    rate = lr
    while True:
        M = M0.copy()
        prev = None
        step_norm = np.inf
        converged = False
        blew_up = False
        it = 0
        for it in range(1, max_iter + 1):
            U = X @ M
            G = I + U.T @ (1.0 - 2.0 * expit(U)) / n
            dM = rate * (M @ G)
            M = M + dM
            step_norm = float(np.linalg.norm(dM))
            if not np.isfinite(step_norm) or step_norm > 1e6:
                blew_up = True
                break
            if step_norm < conv_tol:
                converged = True
                break
            if prev is not None and np.vdot(dM, prev) < 0.5 * step_norm * np.linalg.norm(prev):
                rate = max(rate * anneal, lr * 1e-2)
            prev = dM
        if not blew_up:
            break
        lr *= 0.5
        rate = lr
        log.warning("Infomax diverged; restarting with lr=%g", lr)
        if lr < 1e-8:
            raise RuntimeError("Infomax diverged at every learning rate")

    M = _normalize(Y, M * scale)
    cond = float(np.linalg.cond(M))
    if cond > 1e8:
        warnings.warn(f"unmixing matrix is nearly singular (condition {cond:.3g})", RuntimeWarning)
    if not converged:
        log.warning("Infomax stopped after %d iterations with update norm %.3g", it, step_norm)
    return UnmixingResult(Y @ M, M, it, converged, step_norm, cond)
