"""Assembly of the electron-plasmon interaction tensor.

The interaction couples every momentum cell to every bundle through
rank-one blocks w * (beta x beta), where beta is the directional
coefficient of the wave-induced momentum diffusion and w is a quadrature
weight carrying the mollified resonance kernel.  Because beta depends on
the bundle only through its two projected wave numbers (kappa, omega), all
per-step contractions reduce to three sparse matrix-vector products with a
single weight matrix whose rows index (radial cell, momentum cell) pairs
and whose columns index bundles; the cell-local factors split off as six
precomputed tables.  The same matrix drives the electron diffusion field
(forward product) and the bundle growth rates (transpose product), which
is what makes the discrete mass/momentum/energy exchange identities exact
independent of the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _accel
from .bundles import TrajectoryBundle
from .dispersion import DispersionModel, eval_dispersion
from .errors import ConfigurationError
from .grids import RectGrid1D, TriMesh
from .ldg import (
    MomentumTables,
    discrete_grad_par,
    discrete_grad_perp,
    grad_par_adjoint,
    grad_perp_adjoint,
)

# Kernel values this far below the largest assembled weight are dropped;
# together with the resonance window below it keeps only entries that are
# representable above underflow.
DROP_RELATIVE = 1e-300
# Half-width of the resonance window in units of the mollifier width; a
# Gaussian at this distance is below DROP_RELATIVE of its peak.
RESONANCE_WINDOW = 38.5


@dataclass(frozen=True)
class KernelSpec:
    """Mollified wave-particle resonance kernel parameters.

    eps is the width of the unit-mass Gaussian mollifier, harmonic the
    cyclotron harmonic number (1 = anomalous Doppler branch), coupling an
    optional nonnegative factor U(p_par, p_perp, k_r, q_phi, k_z, r)
    multiplying the kernel (None means 1).
    """

    eps: float = 0.1
    harmonic: int = 1
    coupling: Callable[..., np.ndarray] | None = None

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ConfigurationError(f"mollifier width must be positive, got {self.eps!r}")


def _gauss(args: np.ndarray, eps: float) -> np.ndarray:
    out = np.empty_like(np.asarray(args, dtype=float))
    _accel.gaussian_kernel(np.ascontiguousarray(args, dtype=float).ravel(), eps, out.ravel())
    return out


def mollified_kernel(
    tables: MomentumTables,
    cell: tuple[int, int],
    k_r: float,
    q_phi: float,
    k_z: float,
    r: float,
    spec: KernelSpec,
    model: DispersionModel,
) -> float:
    """Kernel value for one momentum cell and one wave-space point:
    omega^-2 * U * mollifier(omega - k_z v_par - l omega_ce / gamma)."""
    i, j = cell
    omega = float(eval_dispersion(model, k_r, q_phi, k_z, r))
    arg = (
        omega
        - k_z * tables.v_par[i, j]
        - spec.harmonic * float(model.omega_ce(r)) * tables.inv_gamma[i, j]
    )
    u = 1.0
    if spec.coupling is not None:
        u = float(
            spec.coupling(
                tables.grid_par.centers[i], tables.grid_perp.centers[j],
                k_r, q_phi, k_z, r,
            )
        )
    return u * omega**-2 * float(_gauss(np.array([arg]), spec.eps)[0])


def _poly_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clip_half(poly: np.ndarray, y: float, keep_below: bool) -> np.ndarray:
    """Sutherland-Hodgman clip against a horizontal line."""
    if len(poly) == 0:
        return poly
    out = []
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        a_in = (a[1] <= y) if keep_below else (a[1] >= y)
        b_in = (b[1] <= y) if keep_below else (b[1] >= y)
        if a_in:
            out.append(a)
        if a_in != b_in:
            t = (y - a[1]) / (b[1] - a[1])
            out.append(a + t * (b - a))
    return np.array(out) if out else np.empty((0, 2))


def triangle_slab_overlaps(
    mesh: TriMesh, r_grid: RectGrid1D
) -> list[list[tuple[int, float]]]:
    """Exact area fraction of every triangle inside every radial cell of the
    electron grid, by polygon clipping.  Fractions per triangle sum to 1,
    so the radial partition of unity is preserved exactly."""
    out: list[list[tuple[int, float]]] = []
    edges = r_grid.edges
    for t in range(mesh.n_triangles):
        poly = mesh.vertices[mesh.triangles[t]]
        total = mesh.areas[t]
        ymin, ymax = poly[:, 1].min(), poly[:, 1].max()
        j_lo = int(np.clip(np.searchsorted(edges, ymin, side="right") - 1, 0, r_grid.n - 1))
        j_hi = int(np.clip(np.searchsorted(edges, ymax, side="left") - 1, 0, r_grid.n - 1))
        entries = []
        for j in range(j_lo, j_hi + 1):
            clipped = _clip_half(poly, edges[j], keep_below=False)
            clipped = _clip_half(clipped, edges[j + 1], keep_below=True)
            if len(clipped) >= 3:
                frac = _poly_area(clipped) / total
                if frac > 0.0:
                    entries.append((j, frac))
        s = sum(f for _, f in entries)
        if abs(s - 1.0) > 1e-9:
            raise ConfigurationError(
                f"triangle {t} radial overlap fractions sum to {s}, expected 1"
            )
        out.append(entries)
    return out


@dataclass(frozen=True)
class InteractionOperator:
    """Assembled interaction tensor in factored sparse form.

    The weight matrix has rows (radial cell xi, momentum cell ij) flattened
    as xi * n_p + ij and one column per bundle; entry (row, q) is the
    quadrature weight of bundle q's cover restricted to radial cell xi,
    evaluated with the resonance kernel at momentum cell ij.  kappa and
    omega_sup are each bundle's projected axial wave number and frequency,
    measures the bundle Gram diagonal.
    """

    tables: MomentumTables
    r_grid: RectGrid1D
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    omega_sup: np.ndarray = field(repr=False)
    measures: np.ndarray = field(repr=False)

    @property
    def n_bundles(self) -> int:
        return len(self.kappa)

    @property
    def n_p(self) -> int:
        s = self.tables.shape
        return s[0] * s[1]

    @property
    def field_shape(self) -> tuple[int, int, int]:
        return (self.r_grid.n,) + self.tables.shape

    def __post_init__(self):
        t = self.tables
        n_p = t.shape[0] * t.shape[1]
        x = t.perp_slope.ravel()
        y = t.radius_factor.ravel()
        z = t.par_slope.ravel()
        e1 = t.grad_par_energy.ravel()
        e2 = t.grad_perp_energy.ravel()
        factors = {
            "_xx": x * x, "_xy": x * y, "_xz": x * z,
            "_yy": y * y, "_yz": y * z, "_zz": z * z,
            "_x_tab": x, "_y_tab": y, "_z_tab": z,
            "_u_field": x * e1 - z * e2,
            "_v_field": y * e2,
            "_wp": t.volume.ravel(),
        }
        for name, arr in factors.items():
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        x_vol = 2.0 * np.pi * self.r_grid.centers * self.r_grid.widths
        x_vol.setflags(write=False)
        object.__setattr__(self, "x_volume", x_vol)
        object.__setattr__(self, "_n_rows", self.r_grid.n * n_p)

    def diffusion_field(
        self, n_coeffs: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Effective diffusion tensor field on (radial, momentum) cells for
        given bundle coefficients, normalized by the radial cell volume.

        Returns (d11, d12, d22), each with shape field_shape.
        """
        c_base = n_coeffs * self.omega_sup
        c1 = np.ascontiguousarray(c_base * self.kappa**2)
        c2 = np.ascontiguousarray(c_base * self.omega_sup * self.kappa)
        c3 = np.ascontiguousarray(c_base * self.omega_sup**2)
        n_rows = self._n_rows
        out11 = np.zeros(n_rows)
        out12 = np.zeros(n_rows)
        out22 = np.zeros(n_rows)
        if len(self.data):
            _accel.diffusion_fields(
                self.indptr, self.indices, self.data, c1, c2, c3,
                self._xx, self._xy, self._xz, self._yy, self._yz, self._zz,
                self.n_p, out11, out12, out22,
            )
        shape = self.field_shape
        norm = self.x_volume[:, None]
        d11 = (out11.reshape(self.r_grid.n, -1) / norm).reshape(shape)
        d12 = (out12.reshape(self.r_grid.n, -1) / norm).reshape(shape)
        d22 = (out22.reshape(self.r_grid.n, -1) / norm).reshape(shape)
        return d11, d12, d22

    def apply_diffusion(self, f: np.ndarray, dfield) -> np.ndarray:
        """Momentum diffusion right-hand side df/dt for the electron field,
        one radial slab at a time (vectorized over slabs)."""
        d11, d12, d22 = dfield
        t = self.tables
        g1 = discrete_grad_par(f, t.grid_par)
        g2 = discrete_grad_perp(f, t.grid_perp)
        f1 = t.volume * (d11 * g1 + d12 * g2)
        f2 = t.volume * (d12 * g1 + d22 * g2)
        div = grad_par_adjoint(f1, t.grid_par) + grad_perp_adjoint(f2, t.grid_perp)
        return -div / t.volume

    def reaction_rates(self, f: np.ndarray) -> np.ndarray:
        """Per-bundle relative growth rate (1/G) sum a_n E_m B_qmn."""
        n_b = self.n_bundles
        if n_b == 0:
            return np.zeros(0)
        t = self.tables
        g1 = discrete_grad_par(f, t.grid_par).reshape(self.r_grid.n, -1)
        g2 = discrete_grad_perp(f, t.grid_perp).reshape(self.r_grid.n, -1)
        p = self._xx_free(g1, g2)
        q = self._v_free(g2)
        f1 = np.ascontiguousarray((self._wp * self._u_field * p).ravel())
        f2 = np.ascontiguousarray((self._wp * (self._u_field * q + self._v_field * p)).ravel())
        f3 = np.ascontiguousarray((self._wp * self._v_field * q).ravel())
        r1 = np.zeros(n_b)
        r2 = np.zeros(n_b)
        r3 = np.zeros(n_b)
        if len(self.data):
            _accel.bundle_rates(self.indptr, self.indices, self.data, f1, f2, f3, r1, r2, r3)
        total = self.kappa**2 * r1 + self.kappa * self.omega_sup * r2 + self.omega_sup**2 * r3
        return total / self.measures

    def _xx_free(self, g1, g2):
        return self._x_tab * g1 - self._z_tab * g2

    def _v_free(self, g2):
        return self._y_tab * g2

    def stats(self) -> dict:
        n_rows = self._n_rows
        dense = n_rows * max(self.n_bundles, 1)
        return {
            "bundles": self.n_bundles,
            "rows": n_rows,
            "nonzeros": int(len(self.data)),
            "fill": len(self.data) / dense if dense else 0.0,
            "bytes": int(self.data.nbytes + self.indices.nbytes + self.indptr.nbytes),
        }


def assemble_interaction(
    bundles: Sequence[TrajectoryBundle],
    mesh: TriMesh,
    r_grid: RectGrid1D,
    phz_centers: np.ndarray,
    phz_area: float,
    tables: MomentumTables,
    spec: KernelSpec,
    model: DispersionModel,
    omega_sup: np.ndarray,
) -> InteractionOperator:
    """Quadrature assembly of the interaction weight matrix.

    Per cover triangle the wave-space integral is approximated at the
    centroid (kernel and frequency evaluated there, at the bundle's
    (q_phi, k_z) cell center) with weight

        proportion * triangle_area * phz_cell_area * 2 pi r_cell_center
                   * radial overlap fraction,

    the overlap fractions coming from exact polygon clipping against the
    electron radial grid.  Entries smaller than DROP_RELATIVE times the
    largest assembled entry are dropped.
    """
    if len(omega_sup) != len(bundles):
        raise ConfigurationError("omega_sup must align with the bundle list")
    if np.any(np.asarray([b.measure for b in bundles]) <= 0.0):
        raise ConfigurationError("bundle with non-positive measure passed to assembly")

    n_par, n_perp = tables.shape
    n_p = n_par * n_perp
    overlaps = triangle_slab_overlaps(mesh, r_grid)
    cent = mesh.centroids
    v_par = tables.v_par.ravel()
    inv_gamma = tables.inv_gamma.ravel()
    p_par_c = np.broadcast_to(tables.grid_par.centers[:, None], tables.shape).ravel()
    p_perp_c = np.broadcast_to(tables.grid_perp.centers[None, :], tables.shape).ravel()

    by_cell: dict[int, list[int]] = {}
    for i, b in enumerate(bundles):
        by_cell.setdefault(b.phz_cell, []).append(i)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    window = RESONANCE_WINDOW * spec.eps

    for cell_id, b_ids in sorted(by_cell.items()):
        q_phi, k_z = phz_centers[cell_id]
        needed = np.unique(np.concatenate([bundles[i].cover for i in b_ids]))
        omega_c = eval_dispersion(model, cent[needed, 0], q_phi, k_z, cent[needed, 1])
        oce = spec.harmonic * np.asarray(model.omega_ce(cent[needed, 1]), dtype=float)
        shift_lo = k_z * v_par.min() + oce[:, None] * inv_gamma.min()
        shift_hi = k_z * v_par.max() + oce[:, None] * inv_gamma.max()
        lo = np.minimum(shift_lo, shift_hi).ravel()
        hi = np.maximum(shift_lo, shift_hi).ravel()
        resonant = (omega_c - lo >= -window) & (omega_c - hi <= window)

        kernels: dict[int, np.ndarray] = {}
        for t_local, t_id in enumerate(needed):
            if not resonant[t_local]:
                continue
            arg = omega_c[t_local] - k_z * v_par - oce[t_local] * inv_gamma
            k_vals = _gauss(arg, spec.eps) * omega_c[t_local] ** -2
            if spec.coupling is not None:
                u = np.asarray(
                    spec.coupling(
                        p_par_c, p_perp_c,
                        cent[t_id, 0], q_phi, k_z, cent[t_id, 1],
                    ),
                    dtype=float,
                )
                if np.any(u < 0):
                    raise ConfigurationError("coupling factor must be nonnegative")
                k_vals = k_vals * u
            if np.any(k_vals != 0.0):
                kernels[int(t_id)] = k_vals

        for i in b_ids:
            b = bundles[i]
            slab_acc: dict[int, np.ndarray] = {}
            for t_id, prop in zip(b.cover, b.proportions):
                k_vals = kernels.get(int(t_id))
                if k_vals is None:
                    continue
                base = prop * mesh.areas[t_id] * phz_area
                for xi, frac in overlaps[t_id]:
                    w = base * frac * 2.0 * np.pi * r_grid.centers[xi]
                    if xi in slab_acc:
                        slab_acc[xi] = slab_acc[xi] + w * k_vals
                    else:
                        slab_acc[xi] = w * k_vals
            for xi in sorted(slab_acc):
                vec = slab_acc[xi]
                nz = np.flatnonzero(vec)
                if len(nz) == 0:
                    continue
                rows.append(xi * n_p + nz)
                cols.append(np.full(len(nz), i, dtype=np.int64))
                vals.append(vec[nz])

    n_rows = r_grid.n * n_p
    n_b = len(bundles)
    if rows:
        r_all = np.concatenate(rows)
        c_all = np.concatenate(cols)
        v_all = np.concatenate(vals)
        keep = v_all >= DROP_RELATIVE * v_all.max()
        r_all, c_all, v_all = r_all[keep], c_all[keep], v_all[keep]
        order = np.lexsort((c_all, r_all))
        r_all, c_all, v_all = r_all[order], c_all[order], v_all[order]
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, r_all + 1, 1)
        indptr = np.cumsum(indptr)
        indices = np.ascontiguousarray(c_all)
        data = np.ascontiguousarray(v_all)
    else:
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)

    kappa = np.array([phz_centers[b.phz_cell][1] for b in bundles], dtype=float)
    measures = np.array([b.measure for b in bundles], dtype=float)
    for a in (indptr, indices, data, kappa, measures):
        a.setflags(write=False)
    omega_sup = np.ascontiguousarray(omega_sup, dtype=float)
    omega_sup.setflags(write=False)
    return InteractionOperator(
        tables=tables,
        r_grid=r_grid,
        indptr=indptr,
        indices=indices,
        data=data,
        kappa=kappa,
        omega_sup=omega_sup,
        measures=measures,
    )
