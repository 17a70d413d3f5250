"""Conserved totals and independent cross-check oracles.

The oracles intentionally avoid the production algorithms: component
structure is re-derived by flood fill on a sampled grid, areas by Monte
Carlo, and bundle invariance by exact tracing of the piecewise-linear
Hamiltonian flow.  They ship in the library (not only in the test suite)
so the command line audit can replay them on any configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .bundles import TrajectoryBundle, band_proportions
from .dispersion import MeshHamiltonian, Stratification
from .errors import DegenerateFieldError
from .grids import TriMesh
from .interaction import InteractionOperator
from .ldg import MomentumTables

RELATIVE_ERROR_FLOOR = 1e-300


@dataclass(frozen=True)
class ConservedWeights:
    """Precomputed discrete integration weights for the three invariants.

    cell_volume combines the momentum volume (including 2 pi p_perp) with
    the cylindrical radial volume 2 pi r dr; pz and energy are the
    corner-collocated fields entering the momentum and energy sums; the
    bundle side uses each bundle's Gram measure with its projected axial
    wave number and frequency.
    """

    cell_volume: np.ndarray = field(repr=False)
    pz: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)
    bundle_measure: np.ndarray = field(repr=False)
    bundle_kz: np.ndarray = field(repr=False)
    bundle_omega: np.ndarray = field(repr=False)


def conserved_weights(op: InteractionOperator) -> ConservedWeights:
    t = op.tables
    vol = op.x_volume[:, None, None] * t.volume[None, :, :]
    return ConservedWeights(
        cell_volume=vol,
        pz=t.pz_corners,
        energy=t.energy_corners,
        bundle_measure=op.measures,
        bundle_kz=op.kappa,
        bundle_omega=op.omega_sup,
    )


@dataclass(frozen=True)
class Totals:
    mass: float
    momentum_z: float
    energy: float


def totals(f: np.ndarray, n: np.ndarray, w: ConservedWeights) -> Totals:
    fm = f * w.cell_volume
    return Totals(
        mass=float(np.sum(fm)),
        momentum_z=float(np.sum(fm * w.pz) + np.sum(n * w.bundle_measure * w.bundle_kz)),
        energy=float(np.sum(fm * w.energy) + np.sum(n * w.bundle_measure * w.bundle_omega)),
    )


def relative_error(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), RELATIVE_ERROR_FLOOR)


def l2_norm(f: np.ndarray, w: ConservedWeights) -> float:
    return float(np.sqrt(np.sum(f * f * w.cell_volume)))


def omega_weighted_l1(n: np.ndarray, w: ConservedWeights) -> float:
    return float(np.sum(np.abs(n) * w.bundle_measure * w.bundle_omega))


# ---------------------------------------------------------------------------
# Component oracle: flood fill on a sampled grid.


def flood_fill_components(
    hamiltonian: MeshHamiltonian, lo: float, hi: float, n_samples: int = 400
):
    """Label the band (lo, hi) on an n x n sample of the mesh rectangle
    using 8-neighbour flood fill.

    Returns (points, labels) where labels is the n x n integer label array
    (0 outside the band) and points the sample coordinate arrays.
    """
    mesh = hamiltonian.mesh
    xs = np.linspace(mesh.kr.lo, mesh.kr.hi, 2 * n_samples + 1)[1::2]
    ys = np.linspace(mesh.r.lo, mesh.r.hi, 2 * n_samples + 1)[1::2]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    vals = hamiltonian.eval(np.column_stack([gx.ravel(), gy.ravel()])).reshape(gx.shape)
    mask = (vals > lo) & (vals < hi)
    labels, _ = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return (gx, gy), labels


def components_agree(
    hamiltonian: MeshHamiltonian,
    lo: float,
    hi: float,
    covers: Sequence[np.ndarray],
    n_samples: int = 400,
) -> bool:
    """Check that flood-fill labels and cover membership define the same
    partition of the sampled in-band points (same count, same grouping)."""
    (gx, gy), labels = flood_fill_components(hamiltonian, lo, hi, n_samples)
    in_band = labels > 0
    if not np.any(in_band):
        return len(covers) == 0
    tri_owner = np.full(hamiltonian.mesh.n_triangles, -1, dtype=np.int64)
    for k, cover in enumerate(covers):
        tri_owner[cover] = k
    pts = np.column_stack([gx[in_band], gy[in_band]])
    tri = hamiltonian.mesh.locate(pts)
    owner = tri_owner[tri]
    if np.any(owner < 0):
        return False
    lab = labels[in_band]
    n_labels = lab.max()
    if n_labels != len(covers):
        return False
    pairing = {}
    for l, o in zip(lab, owner):
        if pairing.setdefault(int(l), int(o)) != o:
            return False
    return len(set(pairing.values())) == len(pairing)


# ---------------------------------------------------------------------------
# Area oracle: Monte Carlo.


def monte_carlo_band_area(
    hamiltonian: MeshHamiltonian,
    lo: float,
    hi: float,
    region: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo estimate (value, standard error) of the band area inside
    a region given as a triangle (3 points) or an axis-aligned rectangle
    ((2, 2) array of lower-left / upper-right corners)."""
    region = np.asarray(region, dtype=float)
    if region.shape == (3, 2):
        u = rng.random(n_samples)
        v = rng.random(n_samples)
        flip = u + v > 1.0
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        pts = (
            region[0]
            + u[:, None] * (region[1] - region[0])
            + v[:, None] * (region[2] - region[0])
        )
        e1 = region[1] - region[0]
        e2 = region[2] - region[0]
        area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    elif region.shape == (2, 2):
        pts = region[0] + rng.random((n_samples, 2)) * (region[1] - region[0])
        area = float(np.prod(region[1] - region[0]))
    else:
        raise DegenerateFieldError("region must be a triangle or rectangle")
    vals = hamiltonian.eval(pts)
    hit = (vals > lo) & (vals < hi)
    p = float(np.mean(hit))
    stderr = area * float(np.sqrt(max(p * (1.0 - p), 0.0) / n_samples))
    return area * p, stderr


# ---------------------------------------------------------------------------
# Flow oracle: exact tracing of the piecewise-linear Hamiltonian flow.


def trace_level_flow(
    hamiltonian: MeshHamiltonian,
    start: np.ndarray,
    max_segments: int = 1000,
) -> np.ndarray:
    """Follow the Hamiltonian flow (dk_r/dt = -dH/dr, dr/dt = dH/dk_r) from
    a point, triangle by triangle.

    Inside each triangle the interpolant's gradient is constant, so the
    trajectory is a straight segment along the rotated gradient and the
    Hamiltonian value is exactly conserved; the trace advances to the exit
    edge, nudges across, and continues until the domain boundary, a
    critical triangle (zero gradient), or the segment budget.

    Returns the polyline vertices, starting with ``start``.
    """
    mesh = hamiltonian.mesh
    grads = hamiltonian.gradients()
    pos = np.asarray(start, dtype=float).copy()
    pts = [pos.copy()]
    scale = min(mesh.kr.widths.min(), mesh.r.widths.min())
    nudge = 1e-12 * scale
    lo_x, hi_x = mesh.kr.lo, mesh.kr.hi
    lo_y, hi_y = mesh.r.lo, mesh.r.hi

    for _ in range(max_segments):
        if not (lo_x <= pos[0] <= hi_x and lo_y <= pos[1] <= hi_y):
            break
        t_id = int(mesh.locate(pos[None, :])[0])
        g = grads[t_id]
        direction = np.array([-g[1], g[0]])
        speed = np.hypot(direction[0], direction[1])
        if speed == 0.0:
            break
        direction /= speed
        verts = mesh.vertices[mesh.triangles[t_id]]
        s_exit = np.inf
        for e in range(3):
            a, b = verts[e], verts[(e + 1) % 3]
            ex, ey = b[0] - a[0], b[1] - a[1]
            det = ex * direction[1] - ey * direction[0]
            if det == 0.0:
                continue
            rx, ry = a[0] - pos[0], a[1] - pos[1]
            s = (ex * ry - ey * rx) / det
            u = (direction[0] * ry - direction[1] * rx) / det
            if s > nudge and -1e-9 <= u <= 1.0 + 1e-9 and s < s_exit:
                s_exit = s
        if not np.isfinite(s_exit):
            break
        pos = pos + (s_exit + nudge) * direction
        pts.append(pos.copy())
    return np.array(pts)


# ---------------------------------------------------------------------------
# Structural audits.


def min_eigenvalue_ratio(dfield) -> float:
    """Smallest eigenvalue of the 2x2 diffusion tensors relative to their
    trace; a symmetric positive semi-definite field stays above about
    -1e-14 (rounding only)."""
    d11, d12, d22 = dfield
    tr = d11 + d22
    disc = np.sqrt((d11 - d22) ** 2 + 4.0 * d12**2)
    min_eig = 0.5 * (tr - disc)
    scale = np.where(tr > 0.0, tr, 1.0)
    return float((min_eig / scale).min()) if min_eig.size else 0.0


def measure_partition_audit(
    hamiltonian: MeshHamiltonian,
    stratification: Stratification,
    bundles: Sequence[TrajectoryBundle],
    phz_area: float,
) -> dict:
    """Retained + boundary-excluded bundle measures + the out-of-range
    remainder must add up to the full rectangle measure."""
    mesh = hamiltonian.mesh
    tri_vals = hamiltonian.tri_values()
    lo = float(stratification.levels[0])
    hi = float(stratification.levels[-1])
    in_range = band_proportions(tri_vals, lo, hi)
    complement = float(np.sum((1.0 - in_range) * mesh.areas) * phz_area)
    retained = sum(b.measure for b in bundles if not b.touches_kr_boundary)
    excluded = sum(b.measure for b in bundles if b.touches_kr_boundary)
    total = (mesh.kr.hi - mesh.kr.lo) * (mesh.r.hi - mesh.r.lo) * phz_area
    got = retained + excluded + complement
    return {
        "retained": retained,
        "excluded": excluded,
        "complement": complement,
        "total": total,
        "relative_defect": relative_error(got, total),
    }


def last_column_mass_fraction(f: np.ndarray, w: ConservedWeights) -> float:
    """Mass fraction in the last parallel-momentum column, the only place
    the discrete momentum exchange identity has a boundary remainder."""
    fm = f * w.cell_volume
    total = float(np.sum(fm))
    if total == 0.0:
        return 0.0
    return float(np.sum(fm[:, -1, :])) / total
