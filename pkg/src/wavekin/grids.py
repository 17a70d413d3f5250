"""Uniform tensor grids and the structured triangulation of the (k_r, r) plane.

Every run uses four kinds of one-dimensional grids (momentum parallel and
perpendicular, the radial grid of the electron density, and the wave-side
grids) plus one shared two-dimensional triangle mesh per run on which the
wave dispersion relation is interpolated.  The mesh splits every rectangle
of a (k_r) x (r) tensor grid along the lower-left to upper-right diagonal,
so cell (i, j) owns triangles 2*(i*n_r + j) (lower) and 2*(i*n_r + j) + 1
(upper).  All ids are deterministic functions of the grid parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError


def _check_finite(name: str, value: float) -> None:
    if not np.isfinite(value):
        raise ConfigurationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class RectGrid1D:
    """A uniform partition of the interval (lo, hi) into n cells.

    Attributes
    ----------
    lo, hi : float
        Interval bounds, lo < hi.
    n : int
        Number of cells, at least 1.
    edges : ndarray, shape (n + 1,)
        Cell edges including both interval bounds.
    centers : ndarray, shape (n,)
        Cell midpoints.
    widths : ndarray, shape (n,)
        Cell widths, computed as differences of the edge array so that
        (edges[i + 1] - edges[i]) / widths[i] is exactly 1.0.
    """

    lo: float
    hi: float
    n: int
    edges: np.ndarray = field(repr=False)
    centers: np.ndarray = field(repr=False)
    widths: np.ndarray = field(repr=False)

    def index_of(self, x: np.ndarray) -> np.ndarray:
        """Cell index for each coordinate, clipped to [0, n - 1]."""
        raw = np.floor((np.asarray(x) - self.lo) / (self.hi - self.lo) * self.n)
        return np.clip(raw.astype(np.int64), 0, self.n - 1)


def build_rect_grid(lo: float, hi: float, n: int) -> RectGrid1D:
    """Construct a uniform grid; raises ConfigurationError on bad input."""
    _check_finite("lo", lo)
    _check_finite("hi", hi)
    if not lo < hi:
        raise ConfigurationError(f"grid bounds must satisfy lo < hi, got ({lo}, {hi})")
    if int(n) != n or n < 1:
        raise ConfigurationError(f"grid cell count must be a positive integer, got {n!r}")
    n = int(n)
    edges = np.linspace(lo, hi, n + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    for a in (edges, centers, widths):
        a.setflags(write=False)
    return RectGrid1D(float(lo), float(hi), n, edges, centers, widths)


@dataclass(frozen=True)
class TriMesh:
    """Triangulation of the rectangle (kr.lo, kr.hi) x (r.lo, r.hi).

    Vertices are the tensor grid nodes, id i_kr * (n_r + 1) + i_r.  Each
    rectangle is split along its lower-left to upper-right diagonal; the
    lower triangle is (LL, LR, UR), the upper one (LL, UR, UL), both
    counter-clockwise.  Two triangles are neighbours when they share at
    least one vertex.
    """

    kr: RectGrid1D
    r: RectGrid1D
    vertices: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @cached_property
    def centroids(self) -> np.ndarray:
        c = self.vertices[self.triangles].mean(axis=1)
        c.setflags(write=False)
        return c

    @cached_property
    def neighbor_lists(self) -> tuple[np.ndarray, ...]:
        """For each triangle, the sorted ids of all vertex-sharing triangles."""
        incident: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for t, verts in enumerate(self.triangles):
            for v in verts:
                incident[v].append(t)
        out = []
        for t, verts in enumerate(self.triangles):
            seen = set()
            for v in verts:
                seen.update(incident[v])
            seen.discard(t)
            out.append(np.array(sorted(seen), dtype=np.int64))
        return tuple(out)

    def shared_vertices(self, t_a: int, t_b: int) -> np.ndarray:
        """Vertex ids common to both triangles (possibly empty)."""
        common = np.intersect1d(self.triangles[t_a], self.triangles[t_b])
        return common

    @cached_property
    def neighbor_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All unordered neighbour pairs (a < b) and their shared vertices.

        Returns
        -------
        pairs : ndarray, shape (m, 2)
        shared : ndarray, shape (m, 2)
            Shared vertex ids per pair, padded with -1 when only one vertex
            is shared.  Conforming meshes from build_tri_mesh share at most
            an edge, so two slots suffice.
        """
        pairs = []
        shared = []
        for a, nbrs in enumerate(self.neighbor_lists):
            for b in nbrs:
                if b <= a:
                    continue
                common = np.intersect1d(self.triangles[a], self.triangles[b])
                pairs.append((a, b))
                if len(common) == 1:
                    shared.append((common[0], -1))
                else:
                    shared.append((common[0], common[1]))
        pairs_arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        shared_arr = np.array(shared, dtype=np.int64).reshape(-1, 2)
        pairs_arr.setflags(write=False)
        shared_arr.setflags(write=False)
        return pairs_arr, shared_arr

    def vertex_values(self, tri_ids: np.ndarray | None = None) -> np.ndarray:
        """Index helper: triangle -> its three vertex ids."""
        if tri_ids is None:
            return self.triangles
        return self.triangles[np.asarray(tri_ids, dtype=np.int64)]

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Triangle id containing each (k_r, r) point (boundary points are
        assigned to an adjacent triangle; points are clipped to the rectangle).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        i = self.kr.index_of(pts[:, 0])
        j = self.r.index_of(pts[:, 1])
        fx = (pts[:, 0] - self.kr.edges[i]) / self.kr.widths[i]
        fy = (pts[:, 1] - self.r.edges[j]) / self.r.widths[j]
        lower = fy <= fx
        tri = 2 * (i * self.r.n + j) + np.where(lower, 0, 1)
        return tri

    @cached_property
    def kr_boundary_vertex_mask(self) -> np.ndarray:
        """True for vertices lying on k_r = kr.lo or k_r = kr.hi."""
        x = self.vertices[:, 0]
        mask = (x == self.kr.lo) | (x == self.kr.hi)
        mask.setflags(write=False)
        return mask

    def gradients(self, node_values: np.ndarray) -> np.ndarray:
        """Per-triangle constant gradient of the linear interpolant.

        Parameters
        ----------
        node_values : ndarray, shape (n_vertices,)

        Returns
        -------
        ndarray, shape (n_triangles, 2)
        """
        p = self.vertices[self.triangles]
        h = np.asarray(node_values)[self.triangles]
        x1, y1 = p[:, 0, 0], p[:, 0, 1]
        x2, y2 = p[:, 1, 0], p[:, 1, 1]
        x3, y3 = p[:, 2, 0], p[:, 2, 1]
        det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        gx = ((h[:, 1] - h[:, 0]) * (y3 - y1) - (h[:, 2] - h[:, 0]) * (y2 - y1)) / det
        gy = ((h[:, 2] - h[:, 0]) * (x2 - x1) - (h[:, 1] - h[:, 0]) * (x3 - x1)) / det
        return np.stack([gx, gy], axis=1)


def build_tri_mesh(kr: RectGrid1D, r: RectGrid1D) -> TriMesh:
    """Triangulate the tensor rectangle of two 1D grids.

    The construction is deterministic: identical inputs produce identical
    vertex and triangle arrays, and the triangle areas tile the rectangle
    exactly (each pair of triangles halves its cell).
    """
    n_kr, n_r = kr.n, r.n
    xv, yv = np.meshgrid(kr.edges, r.edges, indexing="ij")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])

    def vid(i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return i * (n_r + 1) + j

    ii, jj = np.meshgrid(np.arange(n_kr), np.arange(n_r), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    ll = vid(ii, jj)
    lr = vid(ii + 1, jj)
    ur = vid(ii + 1, jj + 1)
    ul = vid(ii, jj + 1)
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n_kr * n_r, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    p = vertices[triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 2, 0] - p[:, 0, 0]
    ) * (p[:, 1, 1] - p[:, 0, 1])
    areas = 0.5 * cross
    if np.any(areas <= 0):
        raise ConfigurationError("degenerate triangulation: non-positive triangle area")
    for a in (vertices, triangles, areas):
        a.setflags(write=False)
    return TriMesh(kr=kr, r=r, vertices=vertices, triangles=triangles, areas=areas)
