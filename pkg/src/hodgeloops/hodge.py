"""Consistent cell weights and the normalized weighted Hodge k-Laplacian.

With diagonal weights ``W_l`` the normalized boundaries are
``A_l = W_{l-1}^{-1/2} B_l W_l^{1/2}`` and

    L_k = A_k^T A_k + A_{k+1} A_{k+1}^T        (down + up).

Lower-dimensional weights follow the coface-sum rule ``w_l = |B_{l+1}| w_{l+1}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class IsolatedCellError(ValueError):
    """Raised in strict mode when a cell has no coface to take weight from."""


@dataclass(frozen=True)
class WeightVector:
    level: int
    values: np.ndarray
    n_floored: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ValueError(f"level-{self.level} weights must be finite and strictly positive")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def propagate_weights(B_next, w_next, floor: float | str = "min", strict: bool = False,
                      level: int | None = None) -> WeightVector:
    """Coface sums ``|B_next| @ w_next``, with coface-free cells floored.

    ``floor="min"`` gives a coface-free cell the smallest positive weight of
    its level (1.0 if the level has none); a float sets an absolute floor.
    Either way the result stays strictly positive so ``W^{-1/2}`` exists.
    """
    w_next = np.asarray(getattr(w_next, "values", w_next), dtype=float)
    B = sp.csc_matrix(B_next)
    if B.shape[1] != len(w_next):
        raise ValueError(f"boundary has {B.shape[1]} columns but {len(w_next)} weights were given")
    if np.any(w_next <= 0):
        raise ValueError("weights must be strictly positive")
    w = np.asarray(abs(B).astype(float) @ w_next).reshape(-1)
    empty = w <= 0
    n_empty = int(empty.sum())
    if n_empty:
        if strict:
            raise IsolatedCellError(f"{n_empty} cells have no coface")
        if isinstance(floor, str):
            if floor != "min":
                raise ValueError(f"unknown floor policy {floor!r}")
            fill = float(w[~empty].min()) if n_empty < len(w) else 1.0
        else:
            fill = float(floor)
        w[empty] = fill
    lvl = level if level is not None else -1
    return WeightVector(lvl, w, n_empty)


@dataclass(frozen=True)
class HodgeSystem:
    k: int
    kind: str
    A_k: sp.csr_matrix | None
    A_k1: sp.csr_matrix
    L: sp.csr_matrix
    L_down: sp.csr_matrix
    L_up: sp.csr_matrix
    w_km1: WeightVector | None
    w_k: WeightVector
    w_k1: WeightVector
    B_k: sp.csc_matrix | None = None
    B_k1: sp.csc_matrix | None = None

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def spectral_norm_upper(self) -> float:
        return spectral_norm_upper(self)


def normalized_boundary(B, w_lo: np.ndarray, w_hi: np.ndarray) -> sp.csr_matrix:
    """``W_lo^{-1/2} B W_hi^{1/2}``."""
    B = sp.csr_matrix(B, dtype=float)
    return sp.csr_matrix(sp.diags(1.0 / np.sqrt(w_lo)) @ B @ sp.diags(np.sqrt(w_hi)))


def _sym(M) -> sp.csr_matrix:
    M = sp.csr_matrix(M)
    M = (M + M.T) * 0.5
    M.sum_duplicates()
    M.eliminate_zeros()
    return sp.csr_matrix(M)


def assemble(B_k, B_k1, w_k1=None, kind: str = "simplicial", k: int = 1,
             floor: float | str = "min", strict: bool = False) -> HodgeSystem:
    """Assemble the weighted Hodge ``k``-Laplacian from ``B_k`` and ``B_{k+1}``.

    ``B_k`` may be ``None`` for ``k = 0`` (graph Laplacian). ``w_k1`` defaults
    to all ones. Lower weights are propagated from ``w_k1``.
    """
    B_k1 = sp.csc_matrix(B_k1)
    n_k, n_k1 = B_k1.shape
    if w_k1 is None:
        w_k1 = np.ones(n_k1)
    w_top = WeightVector(k + 1, getattr(w_k1, "values", w_k1))
    if len(w_top) != n_k1:
        raise ValueError(f"B_(k+1) has {n_k1} columns but {len(w_top)} weights were given")
    w_k = propagate_weights(B_k1, w_top, floor=floor, strict=strict, level=k)
    A_k1 = normalized_boundary(B_k1, w_k.values, w_top.values)
    L_up = _sym(A_k1 @ A_k1.T)
    if B_k is None:
        A_k, w_km1 = None, None
        L_down = sp.csr_matrix((n_k, n_k))
    else:
        B_k = sp.csc_matrix(B_k)
        if B_k.shape[1] != n_k:
            raise ValueError(f"B_k has {B_k.shape[1]} columns, B_(k+1) has {n_k} rows")
        w_km1 = propagate_weights(B_k, w_k, floor=floor, strict=strict, level=k - 1)
        A_k = normalized_boundary(B_k, w_km1.values, w_k.values)
        L_down = _sym(A_k.T @ A_k)
    L = _sym(L_down + L_up)
    if w_k.n_floored:
        log.info("floored %d coface-free level-%d cells", w_k.n_floored, k)
    return HodgeSystem(k, kind, A_k, A_k1, L, L_down, L_up, w_km1, w_k, w_top, B_k, B_k1)


def hodge_from_complex(complex, w2=None, floor: float | str = "min") -> HodgeSystem:
    """``L_1`` of a 2-complex with 2-cell weights ``w2`` (default 1)."""
    from .boundary import boundary_maps

    B1, B2 = boundary_maps(complex, 1)
    return assemble(B1, B2, w2, kind=complex.kind, k=1, floor=floor)


def spectral_norm_upper(sys_or_kind, k: int | None = None) -> float:
    """Spectral-norm cap: ``k + 2`` for simplicial, ``2k + 2`` for cubical complexes."""
    if isinstance(sys_or_kind, HodgeSystem):
        kind, k = sys_or_kind.kind, sys_or_kind.k
    else:
        kind = sys_or_kind
    if k is None:
        raise ValueError("k is required when passing a kind")
    if kind == "simplicial":
        return float(k + 2)
    if kind == "cubical":
        return float(2 * k + 2)
    raise ValueError(f"unknown complex kind {kind!r}")
