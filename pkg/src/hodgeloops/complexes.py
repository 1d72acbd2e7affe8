"""Building 2-complexes from point clouds and grayscale images.

Point clouds go through a CkNN neighborhood graph and its clique
(Vietoris-Rips) complex; images go through thresholding, morphological
closing and the pixel grid cubical complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

Kind = Literal["simplicial", "cubical"]

DEFAULT_KNN = 30


def as_point_cloud(points) -> np.ndarray:
    """Validate and return an ``(n, D)`` float array."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"point cloud must be a non-empty (n, D) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("point cloud contains non-finite coordinates")
    return X


@dataclass(frozen=True)
class NeighborhoodGraph:
    n_vertices: int
    edges: np.ndarray  # (n1, 2) int, i < j, lexicographically sorted
    edge_dist: np.ndarray  # (n1,)
    rho_k: np.ndarray  # (n,)

    def adjacency_sets(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for i, j in self.edges:
            adj[i].add(int(j))
            adj[j].add(int(i))
        return adj


@dataclass
class Complex2:
    """Vertices, canonically oriented edges and 2-cells of a simplicial or cubical complex.

    Edges are stored as ``[x, y]`` with ``x < y``. Triangles are ascending
    vertex triples; rectangles are ``[top-left, top-right, bottom-right,
    bottom-left]`` in grid order.
    """

    kind: Kind
    n_vertices: int
    edges: np.ndarray
    cells2: np.ndarray
    _edge_index: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("simplicial", "cubical"):
            raise ValueError(f"unknown complex kind {self.kind!r}")
        width = 3 if self.kind == "simplicial" else 4
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.cells2 = np.asarray(self.cells2, dtype=np.int64).reshape(-1, width)

    @property
    def n0(self) -> int:
        return self.n_vertices

    @property
    def n1(self) -> int:
        return len(self.edges)

    @property
    def n2(self) -> int:
        return len(self.cells2)

    @property
    def edge_index(self) -> dict[tuple[int, int], int]:
        if self._edge_index is None:
            self._edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
        return self._edge_index

    def cell_edges(self, cell) -> list[tuple[int, int]]:
        """Boundary edges of a 2-cell as directed pairs in the cell's own orientation."""
        if self.kind == "simplicial":
            x, y, z = cell
            return [(x, y), (y, z), (x, z)]
        x, y, z, w = cell
        return [(x, y), (y, z), (z, w), (x, w)]

    def check_closure(self) -> None:
        """Raise ``ValueError`` if some face of some cell is missing."""
        if self.n1 and (self.edges.min() < 0 or self.edges.max() >= self.n_vertices):
            raise ValueError("edge endpoint outside the vertex range")
        if np.any(self.edges[:, 0] >= self.edges[:, 1]):
            raise ValueError("edges must be stored with the lower vertex first")
        if len(self.edge_index) != self.n1:
            raise ValueError("duplicate edges")
        if len({tuple(c) for c in self.cells2.tolist()}) != self.n2:
            raise ValueError("duplicate 2-cells")
        index = self.edge_index
        for cell in self.cells2.tolist():
            for a, b in self.cell_edges(cell):
                if (min(a, b), max(a, b)) not in index:
                    raise ValueError(f"face [{a}, {b}] of cell {cell} is missing")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": int(self.n_vertices),
            "edges": self.edges.tolist(),
            "cells2": self.cells2.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Complex2":
        cx = cls(d["kind"], int(d["vertices"]), d["edges"], d["cells2"])
        cx.check_closure()
        return cx


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    intensity: np.ndarray  # (height, width)
    max_val: float = 255.0

    def __post_init__(self):
        arr = np.asarray(self.intensity, dtype=float)
        if arr.size != self.width * self.height:
            raise ValueError("intensity size does not match width * height")
        if self.max_val <= 0:
            raise ValueError("max_val must be positive")
        object.__setattr__(self, "intensity", arr.reshape(self.height, self.width))


def furthest_point_sample(points, n: int, seed: int = 0, start: int | None = None) -> np.ndarray:
    """Greedy max-min subsample of ``n`` point indices, in selection order.

    The first index is drawn uniformly with ``np.random.default_rng(seed)``
    unless ``start`` is given. Ties go to the lowest index.
    """
    X = as_point_cloud(points)
    N = len(X)
    if not 1 <= n <= N:
        raise ValueError(f"cannot sample {n} points from a cloud of {N}")
    if start is None:
        start = int(np.random.default_rng(seed).integers(N))
    cols = np.ascontiguousarray(X.T)  # per-coordinate rows are much faster to sweep

    def sqdist(j: int) -> np.ndarray:
        d = (cols[0] - cols[0, j]) ** 2
        for c in cols[1:]:
            d += (c - c[j]) ** 2
        return d

    selected = np.empty(n, dtype=np.int64)
    selected[0] = start
    mind = sqdist(start)
    for i in range(1, n):
        nxt = int(np.argmax(mind))
        selected[i] = nxt
        np.minimum(mind, sqdist(nxt), out=mind)
    return selected


def knn_radius(points, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest neighbour, the point itself excluded."""
    X = as_point_cloud(points)
    if not 1 <= k < len(X):
        raise ValueError(f"k={k} must satisfy 1 <= k < n={len(X)}")
    dist, _ = cKDTree(X).query(X, k=k + 1)
    # column 0 is the point itself (distance 0); duplicates would also sit at 0
    return np.asarray(dist[:, k], dtype=float)


def cknn_graph(points, k: int = DEFAULT_KNN, delta: float = 1.0) -> NeighborhoodGraph:
    """Continuous k-nearest-neighbour graph.

    Vertices ``i`` and ``j`` are joined when
    ``|x_i - x_j| <= delta * sqrt(rho_k(x_i) * rho_k(x_j))``.
    """
    X = as_point_cloud(points)
    if delta <= 0:
        raise ValueError("delta must be positive")
    rho = knn_radius(X, k)
    if np.any(rho <= 0):
        raise ValueError("coincident points: some k-NN distance is zero")
    tree = cKDTree(X)
    span = float(np.linalg.norm(X.max(axis=0) - X.min(axis=0)))
    r = min(delta * float(rho.max()), span * (1 + 1e-9) + 1e-12)
    pairs = tree.query_pairs(r, output_type="ndarray")
    if len(pairs) == 0:
        return NeighborhoodGraph(len(X), np.empty((0, 2), np.int64), np.empty(0), rho)
    pairs = np.sort(pairs, axis=1)
    d = np.linalg.norm(X[pairs[:, 0]] - X[pairs[:, 1]], axis=1)
    keep = d <= delta * np.sqrt(rho[pairs[:, 0]] * rho[pairs[:, 1]])
    if np.any(d[keep] == 0):
        raise ValueError("coincident points produce a zero-length edge")
    pairs, d = pairs[keep], d[keep]
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return NeighborhoodGraph(len(X), pairs[order].astype(np.int64), d[order], rho)


def graph_from_edges(n_vertices: int, edges, edge_dist=None) -> NeighborhoodGraph:
    """Wrap an explicit undirected edge list (deduplicated, oriented low -> high)."""
    E = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if np.any(E[:, 0] == E[:, 1]):
        raise ValueError("self-loops are not allowed")
    E = np.sort(E, axis=1)
    d = np.ones(len(E)) if edge_dist is None else np.asarray(edge_dist, dtype=float).reshape(-1)
    uniq, idx = np.unique(E, axis=0, return_index=True)
    return NeighborhoodGraph(int(n_vertices), uniq.reshape(-1, 2), d[idx], np.zeros(int(n_vertices)))


def triangles_of(n_vertices: int, edges: np.ndarray) -> np.ndarray:
    """All 3-cliques as ascending triples, lexicographically sorted."""
    nbrs: list[set[int]] = [set() for _ in range(n_vertices)]
    for i, j in np.asarray(edges).tolist():
        nbrs[i].add(j)
        nbrs[j].add(i)
    higher = [{v for v in s if v > u} for u, s in enumerate(nbrs)]
    tris = []
    for i, j in np.asarray(edges).tolist():
        lo, hi = (i, j) if i < j else (j, i)
        for k in sorted(higher[lo] & higher[hi]):
            tris.append((lo, hi, k))
    if not tris:
        return np.empty((0, 3), dtype=np.int64)
    T = np.array(tris, dtype=np.int64)
    return T[np.lexsort((T[:, 2], T[:, 1], T[:, 0]))]


def clique_complex(graph: NeighborhoodGraph) -> Complex2:
    """Clique 2-complex: every 3-clique of the graph becomes a triangle."""
    cx = Complex2("simplicial", graph.n_vertices, graph.edges, triangles_of(graph.n_vertices, graph.edges))
    return cx


def triangle_weights(points, complex: Complex2, k: int = DEFAULT_KNN, delta: float = 1.0,
                     rho: np.ndarray | None = None) -> np.ndarray:
    """Product-of-Gaussians triangle kernel with bandwidth ``delta**(2/3) / 3``.

    Each of the three edges contributes ``exp(-|x_a - x_b|^2 / (eps * rho_a * rho_b))``.
    """
    if complex.kind != "simplicial":
        raise ValueError("triangle weights are defined for simplicial complexes only")
    X = as_point_cloud(points)
    if rho is None:
        rho = knn_radius(X, k)
    eps = delta ** (2.0 / 3.0) / 3.0
    T = complex.cells2
    if len(T) == 0:
        return np.empty(0)
    logw = np.zeros(len(T))
    for a, b in ((0, 1), (1, 2), (0, 2)):
        ia, ib = T[:, a], T[:, b]
        sq = np.sum((X[ia] - X[ib]) ** 2, axis=1)
        logw -= sq / (eps * rho[ia] * rho[ib])
    return np.exp(logw)


def threshold_mask(img: GrayImage, threshold: float, closing_radius: int = 0,
                   invert: bool = False) -> np.ndarray:
    """Binary foreground after thresholding and square-element morphological closing."""
    if closing_radius < 0:
        raise ValueError("closing_radius must be >= 0")
    mask = img.intensity <= threshold if invert else img.intensity >= threshold
    if closing_radius > 0:
        r = int(closing_radius)
        # pad so erosion does not eat foreground touching the image border
        padded = np.pad(mask, r, mode="constant", constant_values=False)
        structure = np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
        closed = ndimage.binary_closing(padded, structure=structure, border_value=0)
        mask = closed[r:-r, r:-r] | mask
    return mask


def grid_complex(mask: np.ndarray) -> Complex2:
    """Cubical complex of the foreground pixels of a boolean mask.

    Vertices are foreground pixels in row-major order; edges join 4-neighbours;
    a unit square becomes a rectangle when all four corners are foreground.
    """
    mask = np.asarray(mask, dtype=bool)
    H, W = mask.shape
    vid = -np.ones((H, W), dtype=np.int64)
    vid[mask] = np.arange(int(mask.sum()))
    edges = []
    horiz = mask[:, :-1] & mask[:, 1:]
    r, c = np.nonzero(horiz)
    edges.append(np.stack([vid[r, c], vid[r, c + 1]], axis=1))
    vert = mask[:-1, :] & mask[1:, :]
    r, c = np.nonzero(vert)
    edges.append(np.stack([vid[r, c], vid[r + 1, c]], axis=1))
    E = np.concatenate(edges) if edges else np.empty((0, 2), np.int64)
    E = E[np.lexsort((E[:, 1], E[:, 0]))]
    sq = mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, 1:] & mask[1:, :-1]
    r, c = np.nonzero(sq)
    R = np.stack([vid[r, c], vid[r, c + 1], vid[r + 1, c + 1], vid[r + 1, c]], axis=1)
    return Complex2("cubical", int(mask.sum()), E, R.reshape(-1, 4))


def cubical_complex(img: GrayImage, threshold: float, closing_radius: int = 0,
                    invert: bool = False) -> Complex2:
    """Threshold ``img`` (foreground = intensity >= threshold) and build its cubical complex.

    An empty foreground yields a complex with no vertices; its Betti numbers
    are undefined downstream.
    """
    return grid_complex(threshold_mask(img, threshold, closing_radius, invert))


def pixel_coordinates(mask: np.ndarray) -> np.ndarray:
    """``(row, col)`` of each foreground pixel in vertex order."""
    r, c = np.nonzero(np.asarray(mask, dtype=bool))
    return np.stack([r, c], axis=1).astype(float)


def read_point_cloud_csv(path, header: bool = False) -> np.ndarray:
    X = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return as_point_cloud(X)


def read_pgm(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) PGM file."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a P2/P5 PGM file")
    # header: magic, width, height, maxval, with '#' comments allowed
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    width, height, maxval = tokens
    if magic == b"P2":
        body = data[pos:].decode("ascii")
        lines = [ln.split("#", 1)[0] for ln in body.splitlines()]
        vals = np.array(" ".join(lines).split(), dtype=float)
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        vals = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos).astype(float)
    if vals.size != width * height:
        raise ValueError(f"{path}: expected {width * height} pixels, found {vals.size}")
    return GrayImage(width, height, vals, float(maxval))


def write_pgm(path, img: GrayImage) -> None:
    """Write a P2 PGM (used by tests and example scripts)."""
    vals = np.rint(img.intensity).astype(int)
    lines = [f"P2\n{img.width} {img.height}\n{int(img.max_val)}"]
    lines += [" ".join(map(str, row)) for row in vals]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
