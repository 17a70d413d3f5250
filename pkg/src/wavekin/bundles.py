"""Trajectory bundles: connected components of level bands of the
interpolated Hamiltonian, with exact per-triangle area proportions.

A bundle collects the triangles whose value range meets one open frequency
band (lo, hi), grouped into connected components.  Two triangles belong to
the same component when their shared closure (an edge or a single vertex)
carries a Hamiltonian value inside the band, so trajectories can pass from
one to the other without leaving the band.  The fraction of each triangle's
area actually inside the band has a closed form because the interpolant is
linear: the area above a level cuts similar triangles, giving a piecewise
quadratic in the level split at the middle node value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .dispersion import MeshHamiltonian, Stratification
from .errors import ConfigurationError
from .grids import TriMesh


def fraction_above(tri_values: np.ndarray, level: float) -> np.ndarray:
    """Fraction of each triangle's area where the linear interpolant
    exceeds ``level``.

    Parameters
    ----------
    tri_values : ndarray, shape (n, 3)
        Node values per triangle, any order.
    level : float

    Returns
    -------
    ndarray, shape (n,), values in [0, 1].
    """
    v = np.sort(np.atleast_2d(tri_values), axis=1)
    v1, v2, v3 = v[:, 0], v[:, 1], v[:, 2]
    a = float(level)
    with np.errstate(divide="ignore", invalid="ignore"):
        below_mid = 1.0 - (a - v1) ** 2 / ((v2 - v1) * (v3 - v1))
        above_mid = (v3 - a) ** 2 / ((v3 - v2) * (v3 - v1))
    out = np.select(
        [a <= v1, a < v2, a < v3],
        [np.ones_like(v1), below_mid, above_mid],
        default=0.0,
    )
    return np.clip(out, 0.0, 1.0)


def band_proportions(tri_values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Fraction of each triangle's area inside the open band (lo, hi)."""
    if not hi > lo:
        raise ConfigurationError(f"band bounds must satisfy lo < hi, got ({lo}, {hi})")
    r = fraction_above(tri_values, lo) - fraction_above(tri_values, hi)
    return np.clip(r, 0.0, 1.0)


def connection_matrix(hamiltonian: MeshHamiltonian, lo: float, hi: float):
    """Boolean adjacency of triangles through the band (lo, hi).

    Entry (i, j) for neighbouring triangles is set when the value range on
    their shared closure meets the open band; the diagonal is set for every
    triangle whose own value range meets the band.  Returned as a CSR
    matrix over all triangles of the mesh.
    """
    mesh = hamiltonian.mesh
    tri_vals = hamiltonian.tri_values()
    tri_min = tri_vals.min(axis=1)
    tri_max = tri_vals.max(axis=1)
    active = (tri_max > lo) & (tri_min < hi)

    pairs, shared = mesh.neighbor_pairs
    svals = hamiltonian.node_values[np.where(shared >= 0, shared, 0)]
    pad = shared < 0
    smin = np.where(pad, np.inf, svals).min(axis=1)
    smax = np.where(pad, -np.inf, svals).max(axis=1)
    connected = (smax > lo) & (smin < hi)

    rows = np.concatenate([np.flatnonzero(active), pairs[connected, 0], pairs[connected, 1]])
    cols = np.concatenate([np.flatnonzero(active), pairs[connected, 1], pairs[connected, 0]])
    data = np.ones(len(rows), dtype=bool)
    n = mesh.n_triangles
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def connected_components(
    hamiltonian: MeshHamiltonian, lo: float, hi: float
) -> list[np.ndarray]:
    """Connected components of the band (lo, hi), each a sorted array of
    triangle ids, ordered by ascending minimum triangle id."""
    adj = connection_matrix(hamiltonian, lo, hi)
    active = np.flatnonzero(adj.diagonal())
    if len(active) == 0:
        return []
    sub = adj[active][:, active]
    n_comp, labels = _cc(sub, directed=False)
    comps = []
    for c in range(n_comp):
        comps.append(active[labels == c])
    comps.sort(key=lambda ids: int(ids[0]))
    return comps


@dataclass(frozen=True)
class TrajectoryBundle:
    """One connected component of one frequency band in one (q_phi, k_z) cell.

    measure is the in-band area of the cover in the (k_r, r) plane times the
    (q_phi, k_z) cell area; proportions holds each cover triangle's in-band
    area fraction.
    """

    id: int
    phz_cell: int
    interval_index: int
    lo: float
    hi: float
    cover: np.ndarray = field(repr=False)
    proportions: np.ndarray = field(repr=False)
    measure: float = 0.0
    touches_kr_boundary: bool = False

    @property
    def cover_size(self) -> int:
        return len(self.cover)


def _touches_kr_boundary(
    mesh: TriMesh, hamiltonian: MeshHamiltonian, cover: np.ndarray, lo: float, hi: float
) -> bool:
    bmask = mesh.kr_boundary_vertex_mask
    x = mesh.vertices[:, 0]
    for t in cover:
        verts = mesh.triangles[t]
        on_b = verts[bmask[verts]]
        if len(on_b) == 0:
            continue
        for side in (mesh.kr.lo, mesh.kr.hi):
            vs = on_b[x[on_b] == side]
            if len(vs) == 0:
                continue
            vals = hamiltonian.node_values[vs]
            if len(vs) == 1:
                if lo < vals[0] < hi:
                    return True
            elif vals.max() > lo and vals.min() < hi:
                return True
    return False


def build_bundles(
    hamiltonian: MeshHamiltonian,
    stratification: Stratification,
    phz_area: float,
    id_start: int = 0,
    drop_boundary: bool = True,
) -> list[TrajectoryBundle]:
    """Decompose every stratification band into trajectory bundles.

    Bundles whose cover reaches the k_r boundary with in-band values are
    flagged; with drop_boundary they are removed from the returned list
    (trajectories crossing the k_r cut-off leave the computational domain,
    so no transport average exists for them).  Ids are assigned in
    deterministic order: ascending band, then ascending component rank.
    """
    mesh = hamiltonian.mesh
    tri_vals = hamiltonian.tri_values()
    out: list[TrajectoryBundle] = []
    next_id = id_start
    for k in range(stratification.n_intervals):
        lo, hi = stratification.interval(k)
        for cover in connected_components(hamiltonian, lo, hi):
            props = band_proportions(tri_vals[cover], lo, hi)
            keep = props > 0.0
            cover, props = cover[keep], props[keep]
            if len(cover) == 0:
                continue
            measure = float(np.sum(props * hamiltonian.mesh.areas[cover]) * phz_area)
            touches = _touches_kr_boundary(mesh, hamiltonian, cover, lo, hi)
            if touches and drop_boundary:
                continue
            out.append(
                TrajectoryBundle(
                    id=next_id,
                    phz_cell=hamiltonian.phz_cell,
                    interval_index=k,
                    lo=lo,
                    hi=hi,
                    cover=cover,
                    proportions=props,
                    measure=measure,
                    touches_kr_boundary=touches,
                )
            )
            next_id += 1
    return out


def renumber(bundles: Sequence[TrajectoryBundle], id_start: int = 0) -> list[TrajectoryBundle]:
    """Reassign sequential ids preserving order."""
    return [replace(b, id=id_start + i) for i, b in enumerate(bundles)]


def project_onto_bundles(
    g: Callable[..., np.ndarray],
    bundles: Sequence[TrajectoryBundle],
    mesh: TriMesh,
    phz_centers: np.ndarray,
) -> np.ndarray:
    """Sup-projection of a phase-space function onto bundle indicators.

    The supremum over a bundle is approximated by the maximum of g over the
    three vertices and the centroid of every cover triangle, evaluated at
    the bundle's (q_phi, k_z) cell center; for functions piecewise linear
    on the same mesh the sampling is exact.

    Parameters
    ----------
    g : callable
        g(k_r, q_phi, k_z, r), vectorized.
    phz_centers : ndarray, shape (n_phz_cells, 2)
        Cell-center (q_phi, k_z) per flat cell index.
    """
    out = np.empty(len(bundles))
    cent = mesh.centroids
    for i, b in enumerate(bundles):
        q_phi, k_z = phz_centers[b.phz_cell]
        verts = np.unique(mesh.triangles[b.cover])
        pts = np.vstack([mesh.vertices[verts], cent[b.cover]])
        vals = g(pts[:, 0], q_phi, k_z, pts[:, 1])
        out[i] = np.max(vals)
    return out


def bundle_sup_hamiltonian(
    hamiltonian: MeshHamiltonian, bundles: Sequence[TrajectoryBundle]
) -> np.ndarray:
    """Sup-projection of the interpolated Hamiltonian itself: the maximum
    node value over each bundle's cover (centroid values of a linear field
    never exceed its vertex values)."""
    out = np.empty(len(bundles))
    for i, b in enumerate(bundles):
        verts = np.unique(hamiltonian.mesh.triangles[b.cover])
        out[i] = hamiltonian.node_values[verts].max()
    return out
