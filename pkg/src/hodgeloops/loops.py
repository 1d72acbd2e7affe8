"""Shortest homologous loops from per-class harmonic edge cochains.

Each column ``z_i`` orients every edge along the sign of its value, keeping
only the edges whose ``|z_i|`` reaches the ``1 - 1/beta`` quantile. Any
directed cycle in that digraph has a positive path integral of ``z_i``, so it
cannot be null-homologous. The shortest such cycle (by edge length) is the
loop reported for class ``i``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

log = logging.getLogger(__name__)


class DegenerateColumnError(ValueError):
    pass


class NoLoopError(RuntimeError):
    def __init__(self, message: str, class_index: int | None = None):
        super().__init__(message)
        self.class_index = class_index


@dataclass(frozen=True)
class InducedDigraph:
    n_vertices: int
    arcs: np.ndarray  # (m, 2) directed (source, target)
    weights: np.ndarray  # edge distances
    edge_ids: np.ndarray  # index of the underlying undirected edge
    tau: float
    source_column: int = 0

    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.weights, (self.arcs[:, 0], self.arcs[:, 1])),
                             shape=(self.n_vertices, self.n_vertices))


@dataclass
class LoopResult:
    class_index: int
    cycle: list[int]  # closed: first == last
    length: float
    path_integral: float
    tau: float = 0.0
    relaxations: int = 0
    edge_ids: list[int] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "class": self.class_index,
            "cycle": [int(v) for v in self.cycle],
            "length": float(self.length),
            "path_integral": float(self.path_integral),
            "tau": float(self.tau),
            "relaxations": int(self.relaxations),
        }


def quantile_threshold(z, beta: int) -> float:
    """Linear-interpolation quantile of ``|z|`` at level ``1 - 1/beta``."""
    if beta < 1:
        raise ValueError("beta must be >= 1")
    return float(np.quantile(np.abs(np.asarray(z, dtype=float)), 1.0 - 1.0 / beta))


def induce_digraph(z, edges, d, beta: int = 1, tau: float | None = None,
                   source_column: int = 0) -> InducedDigraph:
    """Orient edges by the sign of ``z`` and drop arcs with ``|z| < tau``.

    ``tau`` defaults to the ``1 - 1/beta`` quantile of ``|z|`` over all edges.
    Edges with ``z == 0`` get no arc in either direction.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    E = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    d = np.asarray(d, dtype=float).reshape(-1)
    if len(z) != len(E) or len(d) != len(E):
        raise ValueError("z, edges and d must have one entry per edge")
    if np.any(d <= 0):
        raise ValueError("edge distances must be positive")
    if not np.any(z != 0):
        raise DegenerateColumnError(f"column {source_column} is identically zero")
    if tau is None:
        tau = quantile_threshold(z, beta)
    keep = (z != 0) & (np.abs(z) >= tau)
    ids = np.nonzero(keep)[0]
    arcs = E[ids].copy()
    neg = z[ids] < 0
    arcs[neg] = arcs[neg][:, ::-1]
    n = int(E.max()) + 1 if len(E) else 0
    return InducedDigraph(n, arcs, d[ids], ids, float(tau), source_column)


def _with_n(g: InducedDigraph, n_vertices: int) -> InducedDigraph:
    return InducedDigraph(max(n_vertices, g.n_vertices), g.arcs, g.weights, g.edge_ids, g.tau,
                          g.source_column)


def _walk(pred_row: np.ndarray, source: int, target: int) -> list[int]:
    path = [target]
    while path[-1] != source:
        p = int(pred_row[path[-1]])
        if p < 0:
            return []
        path.append(p)
    return path[::-1]


def path_integral(cycle, z, edges) -> float:
    """Signed sum of ``z`` along consecutive vertex pairs of ``cycle``."""
    index = {(int(a), int(b)): i for i, (a, b) in enumerate(np.asarray(edges).tolist())}
    z = np.asarray(z, dtype=float)
    total = 0.0
    for a, b in zip(cycle[:-1], cycle[1:]):
        if a < b:
            total += z[index[(a, b)]]
        else:
            total -= z[index[(b, a)]]
    return float(total)


def _shortest_cycle(g: InducedDigraph) -> tuple[float, list[int], list[int]] | None:
    """Minimum over arcs ``(t, s0)`` of ``d(t, s0) + dist(s0 -> t)``.

    Ties are broken by the vertex sequence of the closed cycle.
    """
    if len(g.arcs) == 0:
        return None
    G = g.csr()
    sources = np.unique(g.arcs[:, 1])
    dist, pred = dijkstra(G, directed=True, indices=sources, return_predecessors=True)
    row = {int(s): r for r, s in enumerate(sources)}
    t, s0 = g.arcs[:, 0], g.arcs[:, 1]
    rows = np.array([row[int(s)] for s in s0])
    total = dist[rows, t] + g.weights
    finite = np.isfinite(total)
    if not np.any(finite):
        return None
    best_len = float(total[finite].min())
    best = None
    for a in np.nonzero(finite & (total == best_len))[0]:
        path = _walk(pred[rows[a]], int(s0[a]), int(t[a]))
        cycle = [int(t[a])] + path
        if best is None or cycle < best[1]:
            best = (best_len, cycle, [int(g.edge_ids[a])])
    return best


def _finish(i: int, cycle: list[int], length: float, z, edges, tau: float, relax: int) -> LoopResult:
    res = LoopResult(i, cycle, length, path_integral(cycle, z, edges), tau, relax)
    certify_nontrivial(res, z)
    return res


def shortest_homologous_loops(Z, n_vertices: int, edges, d, max_relaxations: int = 3,
                              tau_scale: float = 1.0) -> list[LoopResult]:
    """One shortest loop per column of ``Z``.

    For every arc ``(t, s0)`` of the thresholded digraph, the shortest
    ``s0 -> t`` path plus the closing arc is a candidate; the shortest
    candidate wins. If no candidate exists the threshold is halved, at most
    ``max_relaxations`` times, before ``NoLoopError`` is raised.
    """
    Z = np.asarray(getattr(Z, "Z", Z), dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    beta = Z.shape[1]
    out = []
    for i in range(beta):
        z = Z[:, i]
        tau = quantile_threshold(z, beta) * tau_scale
        for relax in range(max_relaxations + 1):
            g = _with_n(induce_digraph(z, edges, d, beta, tau=tau, source_column=i), n_vertices)
            found = _shortest_cycle(g)
            if found is not None:
                break
            log.info("class %d: no loop at tau=%.3g, halving", i, tau)
            tau *= 0.5
        else:
            raise NoLoopError(f"class {i}: no directed cycle after {max_relaxations} relaxations", i)
        length, cycle, _ = found
        out.append(_finish(i, cycle, length, z, edges, g.tau, relax))
    return out


def shortest_loops_maxedge(Z, n_vertices: int, edges, d) -> list[LoopResult]:
    """Unthresholded variant: one shortest-path query per class, seeded at the
    arc with the largest ``|z_i|``."""
    Z = np.asarray(getattr(Z, "Z", Z), dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    out = []
    for i in range(Z.shape[1]):
        z = Z[:, i]
        g = _with_n(induce_digraph(z, edges, d, tau=0.0, source_column=i), n_vertices)
        a = int(np.argmax(np.abs(z[g.edge_ids])))
        t, s0 = int(g.arcs[a, 0]), int(g.arcs[a, 1])
        dist, pred = dijkstra(g.csr(), directed=True, indices=[s0], return_predecessors=True)
        if not np.isfinite(dist[0, t]):
            raise NoLoopError(f"class {i}: no path closes the seed arc ({t}, {s0})", i)
        cycle = [t] + _walk(pred[0], s0, t)
        out.append(_finish(i, cycle, float(dist[0, t] + g.weights[a]), z, edges, 0.0, 0))
    return out


def certify_nontrivial(loop: LoopResult, z, edges=None) -> float:
    """Signed path integral of ``z`` along the loop; warns when it is numerically zero."""
    value = loop.path_integral if edges is None else path_integral(loop.cycle, z, edges)
    z = np.asarray(z, dtype=float)
    n_arcs = max(len(loop.cycle) - 1, 1)
    if abs(value) <= 1e-8 * float(np.max(np.abs(z))) * n_arcs:
        warnings.warn(f"loop for class {loop.class_index} has a vanishing path integral "
                      f"({value:.3g}); it may not represent the class", RuntimeWarning)
    return value
