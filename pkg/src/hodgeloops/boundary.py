"""Signed sparse boundary matrices.

Sign conventions, for canonically stored faces:

* edge ``[x, y]``: ``+1`` on ``x``, ``-1`` on ``y``;
* triangle ``[x, y, z]``: ``+1`` on ``[x, y]`` and ``[y, z]``, ``-1`` on ``[x, z]``;
* rectangle ``[x, y, z, w]``: ``+1`` on ``[x, y]``, ``[y, z]``, ``[z, w]``, ``-1`` on ``[x, w]``.

When a cell induces a face direction opposite to the stored one the sign flips.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .complexes import Complex2


class ClosureError(ValueError):
    """A cell refers to a face that is not in the complex."""


def _csc(rows, cols, vals, shape) -> sp.csc_matrix:
    B = sp.coo_matrix((np.asarray(vals, dtype=np.int64),
                       (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
                      shape=shape).tocsc()
    B.sort_indices()
    return B


def incidence_matrix(n_vertices: int, edges) -> sp.csc_matrix:
    """Vertex-edge incidence ``B1`` (``n0 x n1``)."""
    E = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    n1 = len(E)
    if n1 and (E.min() < 0 or E.max() >= n_vertices):
        raise ClosureError("edge endpoint outside the vertex range")
    cols = np.repeat(np.arange(n1), 2)
    rows = E.reshape(-1)
    vals = np.tile([1, -1], n1)
    return _csc(rows, cols, vals, (n_vertices, n1))


def _cell_faces(kind: str, cell: Sequence[int]) -> list[tuple[int, int, int]]:
    if kind == "simplicial":
        x, y, z = cell
        return [(x, y, 1), (y, z, 1), (x, z, -1)]
    x, y, z, w = cell
    return [(x, y, 1), (y, z, 1), (z, w, 1), (x, w, -1)]


def cell_boundary_matrix(complex: Complex2) -> sp.csc_matrix:
    """Edge-to-2-cell boundary ``B2`` (``n1 x n2``)."""
    index = complex.edge_index
    rows, cols, vals = [], [], []
    for j, cell in enumerate(complex.cells2.tolist()):
        for a, b, s in _cell_faces(complex.kind, cell):
            key = (a, b) if a < b else (b, a)
            try:
                rows.append(index[key])
            except KeyError:
                raise ClosureError(f"face [{a}, {b}] of 2-cell {cell} is missing") from None
            cols.append(j)
            vals.append(s if a < b else -s)
    return _csc(rows, cols, vals, (complex.n1, complex.n2))


def boundary_maps(complex: Complex2, k: int = 1) -> tuple[sp.csc_matrix, sp.csc_matrix]:
    """``(B_k, B_{k+1})`` for a 2-complex; only ``k = 1`` is materialized."""
    if k != 1:
        raise ValueError(f"a 2-complex only provides (B1, B2); got k={k}")
    return incidence_matrix(complex.n_vertices, complex.edges), cell_boundary_matrix(complex)


def simplex_faces(simplex: Sequence[int]) -> Iterable[tuple[tuple[int, ...], int]]:
    """Faces of an ascending simplex with alternating signs ``(-1)**i``."""
    s = tuple(simplex)
    for i in range(len(s)):
        yield s[:i] + s[i + 1:], (-1) ** i


def boundary_matrix(faces: Sequence[Sequence[int]], cells: Sequence[Sequence[int]],
                    face_fn: Callable[[Sequence[int]], Iterable[tuple[tuple[int, ...], int]]] = simplex_faces,
                    ) -> sp.csc_matrix:
    """Generic ``B_l`` from explicit (l-1)-cell and l-cell lists.

    ``face_fn(cell)`` yields ``(face, sign)`` pairs; faces are looked up by
    tuple in ``faces``. Use this to assemble higher-order Laplacians when the
    caller supplies the cells.
    """
    index = {tuple(f): i for i, f in enumerate(faces)}
    rows, cols, vals = [], [], []
    for j, cell in enumerate(cells):
        for face, sign in face_fn(cell):
            try:
                rows.append(index[tuple(face)])
            except KeyError:
                raise ClosureError(f"face {tuple(face)} of cell {tuple(cell)} is missing") from None
            cols.append(j)
            vals.append(sign)
    return _csc(rows, cols, vals, (len(faces), len(cells)))


def write_matrix_market(path, M, integer: bool = True, comment: str = "") -> None:
    """Matrix Market coordinate output (1-based), integer or 17-digit real values."""
    C = sp.coo_matrix(M)
    order = np.lexsort((C.row, C.col))
    field = "integer" if integer else "real"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
        if comment:
            fh.write(f"% {comment}\n")
        fh.write(f"{C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i in order:
            v = C.data[i]
            fh.write(f"{C.row[i] + 1} {C.col[i] + 1} {int(v) if integer else format(float(v), '.17g')}\n")


def read_matrix_market(path) -> sp.csc_matrix:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket matrix coordinate"):
            raise ValueError(f"{path}: not a coordinate Matrix Market file")
        integer = "integer" in header
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        m, n, nnz = map(int, line.split())
        body = np.loadtxt(fh, ndmin=2) if nnz else np.empty((0, 3))
    vals = body[:, 2].astype(np.int64) if integer else body[:, 2]
    M = sp.coo_matrix((vals, (body[:, 0].astype(int) - 1, body[:, 1].astype(int) - 1)), shape=(m, n))
    return M.tocsc()
