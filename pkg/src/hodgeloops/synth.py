"""Synthetic manifolds with known first Betti numbers and prime-part labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexes import furthest_point_sample

MANIFOLDS = ("torus", "three_torus", "genus2", "punctplane", "tori_concat")

BETTI1 = {"torus": 2, "three_torus": 3, "genus2": 4, "punctplane": 2, "tori_concat": 8}


@dataclass(frozen=True)
class SyntheticManifold:
    name: str
    points: np.ndarray  # (n, D)
    beta1: int
    labels: np.ndarray  # prime-part index per point
    angles: np.ndarray | None = None  # intrinsic angles where the parameterization has them


def torus_points(theta1, theta2, shift: float = 0.0) -> np.ndarray:
    r = 1.0 + 0.5 * np.cos(theta1)
    return np.stack([r * np.cos(theta2) - shift, r * np.sin(theta2), 1.0 + 0.5 * np.sin(theta1)], axis=1)


def _torus_angles(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    side = int(round(np.sqrt(n)))
    if side * side == n:
        t = 2 * np.pi * np.arange(side) / side
        t1, t2 = np.meshgrid(t, t, indexing="ij")
        return t1.ravel(), t2.ravel()
    return rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n)


def _add_noise(X: np.ndarray, noise: float, noise_dims: int, rng) -> np.ndarray:
    if noise_dims:
        X = np.hstack([X, np.zeros((len(X), noise_dims))])
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    return X


def three_torus_points(t1, t2, t3) -> np.ndarray:
    r = 4.0 + (2.0 + np.cos(t1)) * np.cos(t2)
    return np.stack([r * np.cos(t3), r * np.sin(t3), (2.0 + np.cos(t1)) * np.sin(t2), np.sin(t1)], axis=1)


def genus2_level(x1, x2) -> np.ndarray:
    return (x1 ** 2 + x2 ** 2) ** 2 - 0.75 * x1 ** 2 + 0.75 * x2 ** 2


def genus2_grid_points(grid: int = 1000, extent: float = 1.0) -> np.ndarray:
    """Both sheets ``x3 = +-sqrt(0.01 - f(x1, x2)^2)`` over a square grid."""
    g = np.linspace(-extent, extent, grid)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    rhs = 0.01 - genus2_level(x1, x2) ** 2
    ok = rhs >= 0
    x1, x2, x3 = x1[ok], x2[ok], np.sqrt(rhs[ok])
    top = np.stack([x1, x2, x3], axis=1)
    bottom = np.stack([x1, x2, -x3], axis=1)
    return np.vstack([top, bottom[x3 > 0]])


def punctured_square(n: int, rng, origin=(0.0, 0.0), hole: float = 1.0 / 3.0) -> np.ndarray:
    """Uniform points in a unit square minus a centered square hole of side ``hole``."""
    out = np.empty((0, 2))
    lo, hi = 0.5 - hole / 2, 0.5 + hole / 2
    while len(out) < n:
        P = rng.uniform(0, 1, (2 * n, 2))
        inside = np.all((P > lo) & (P < hi), axis=1)
        out = np.vstack([out, P[~inside]])
    return out[:n] + np.asarray(origin)


def punctplane(n: int, rng, gap: float = 0.2, bridge_width: float = 0.3, spacing: float = 0.03,
               slit: float = 0.095, jitter: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Two punctured unit squares side by side, joined through a slit bridge.

    The bridge fills the gap between the squares over a band of height
    ``bridge_width`` centred on ``y = 0.5`` with a jittered lattice of the
    given ``spacing``, except for a point-free slit of width ``slit`` in the
    middle. Edges and triangles across the slit are long relative to the
    local k-NN radius, so the two halves are only weakly coupled. Each point
    is labelled by the nearer square; ``n`` counts the square points only.
    """
    n_a = n // 2
    A = punctured_square(n_a, rng, (0.0, 0.0))
    B = punctured_square(n - n_a, rng, (1.0 + gap, 0.0))
    # columns start at the slit edges and step outward to the squares
    cols = np.arange(slit / 2, gap / 2, spacing)
    rows = np.arange(0.5 - bridge_width / 2 + spacing / 2, 0.5 + bridge_width / 2, spacing)
    mid = 1.0 + gap / 2
    bx, by = np.meshgrid(np.concatenate([mid - cols, mid + cols]), rows, indexing="ij")
    bridge = np.column_stack([bx.ravel(), by.ravel()])
    bridge += jitter * spacing * rng.uniform(-1, 1, bridge.shape)
    X = np.vstack([A, B, bridge])
    labels = (X[:, 0] > 1.0 + gap / 2).astype(np.int64)
    return X, labels


def synth_manifold(name: str, n: int = 1156, noise: float = 0.0, seed: int = 0,
                   noise_dims: int | None = None, dense_factor: int = 50,
                   genus2_grid: int = 1000) -> SyntheticManifold:
    """Sample one of the shipped manifolds.

    ``noise`` is the standard deviation of isotropic Gaussian noise on every
    output coordinate. ``noise_dims`` extra all-zero coordinates are appended
    first (default 10 for the torus families, 0 otherwise).
    """
    if name not in MANIFOLDS:
        raise ValueError(f"unknown manifold {name!r}; choose from {MANIFOLDS}")
    if n < 100:
        raise ValueError("n must be at least 100")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    if noise_dims is None:
        noise_dims = 10 if name in ("torus", "tori_concat") else 0
    angles = None
    if name == "torus":
        t1, t2 = _torus_angles(n, rng)
        X, labels, angles = torus_points(t1, t2), np.zeros(n, np.int64), np.stack([t1, t2], axis=1)
    elif name == "tori_concat":
        per = [n // 4 + (i < n % 4) for i in range(4)]
        parts, labs, angs = [], [], []
        for i, (a, m) in enumerate(zip((-3.0, 0.0, 3.0, 6.0), per)):
            t1, t2 = _torus_angles(m, rng)
            parts.append(torus_points(t1, t2, a))
            labs.append(np.full(m, i))
            angs.append(np.stack([t1, t2], axis=1))
        X, labels, angles = np.vstack(parts), np.concatenate(labs), np.vstack(angs)
    elif name == "three_torus":
        m = max(n * dense_factor, n)
        t = rng.uniform(0, 2 * np.pi, (m, 3))
        dense = three_torus_points(t[:, 0], t[:, 1], t[:, 2])
        idx = furthest_point_sample(dense, n, seed=seed)
        X, labels, angles = dense[idx], np.zeros(n, np.int64), t[idx]
    elif name == "genus2":
        dense = genus2_grid_points(genus2_grid)
        idx = furthest_point_sample(dense, n, seed=seed)
        X = dense[idx]
        labels = (X[:, 0] > 0).astype(np.int64)
    else:
        X, labels = punctplane(n, rng)
    X = _add_noise(X, noise, noise_dims, rng)
    return SyntheticManifold(name, X, BETTI1[name], labels, angles)
