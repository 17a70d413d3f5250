"""Wave dispersion models and their piecewise-linear interpolation.

The wave frequency omega(k_r, q_phi, k_z, r) acts as the Hamiltonian of the
plasmon transport problem.  Per (q_phi, k_z) cell the frequency is sampled
at the cell center and interpolated linearly on the shared (k_r, r)
triangle mesh; the resulting node-value field is everything downstream
code (stratification, bundle construction, flow tracing) consumes.

Nondimensional units throughout: m_e = c = 1, frequencies in units of the
reference frequency, lengths in units of the cylinder radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DegenerateFieldError, DomainError
from .grids import TriMesh

# Interior stratification levels are pushed off node values by this
# fraction of the value range, doubling until clear.
NUDGE_FRACTION = 1e-9
MAX_NUDGE_DOUBLINGS = 64


@dataclass(frozen=True)
class DispersionModel:
    """A positive wave frequency branch plus the radial profiles it uses.

    Parameters
    ----------
    omega_pe : callable
        Plasma frequency profile omega_pe(r), vectorized over numpy arrays.
    omega_ce : callable
        Cyclotron frequency profile omega_ce(r) (uniform axial field in the
        default setup, so typically constant).
    branch : callable or None
        branch(k_r, k_phi, k_z, r, omega_pe_sq) -> omega.  None selects the
        unmagnetized electromagnetic branch
        omega = sqrt(omega_pe(r)^2 + k_r^2 + k_phi^2 + k_z^2).
    """

    omega_pe: Callable[[np.ndarray], np.ndarray]
    omega_ce: Callable[[np.ndarray], np.ndarray]
    branch: Callable[..., np.ndarray] | None = None

    def omega(self, k_r, q_phi, k_z, r):
        return eval_dispersion(self, k_r, q_phi, k_z, r)


def parabolic_density_model(
    omega_pe0: float = 1.0, omega_ce0: float = 5.0
) -> DispersionModel:
    """Default model: parabolic density profile n_e(r) = n_0 (1 - r^2) inside
    the unit cylinder with a uniform axial magnetic field."""

    def omega_pe(r):
        return omega_pe0 * np.sqrt(np.clip(1.0 - np.square(r), 0.0, None))

    def omega_ce(r):
        return omega_ce0 * np.ones_like(np.asarray(r, dtype=float))

    return DispersionModel(omega_pe=omega_pe, omega_ce=omega_ce)


def eval_dispersion(model: DispersionModel, k_r, q_phi, k_z, r):
    """Evaluate the model's frequency branch at (k_r, q_phi, k_z, r).

    The azimuthal wavenumber is k_phi = q_phi / r, which is undefined on the
    axis; r <= 0 raises DomainError.  Vectorized over numpy arrays.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("dispersion evaluation requires r > 0 (k_phi = q_phi / r)")
    k_r = np.asarray(k_r, dtype=float)
    q_phi = np.asarray(q_phi, dtype=float)
    k_z = np.asarray(k_z, dtype=float)
    k_phi = q_phi / r
    pe_sq = np.square(model.omega_pe(r))
    if model.branch is not None:
        omega = np.asarray(model.branch(k_r, k_phi, k_z, r, pe_sq), dtype=float)
    else:
        omega = np.sqrt(pe_sq + np.square(k_r) + np.square(k_phi) + np.square(k_z))
    if np.any(~np.isfinite(omega)):
        raise DomainError("dispersion branch produced a non-finite frequency")
    return omega


@dataclass(frozen=True)
class MeshHamiltonian:
    """Linear interpolant of a frequency branch on the shared triangle mesh,
    for one fixed (q_phi, k_z) cell.

    Attributes
    ----------
    mesh : TriMesh
    phz_cell : int
        Flat index of the (q_phi, k_z) cell this interpolant belongs to.
    q_phi, k_z : float
        The cell-center wave numbers the samples were taken at.
    node_values : ndarray, shape (n_vertices,)
    """

    mesh: TriMesh
    phz_cell: int
    q_phi: float
    k_z: float
    node_values: np.ndarray = field(repr=False)

    @property
    def min_value(self) -> float:
        return float(self.node_values.min())

    @property
    def max_value(self) -> float:
        return float(self.node_values.max())

    def tri_values(self, tri_ids=None) -> np.ndarray:
        """Node values per triangle, shape (n, 3)."""
        return self.node_values[self.mesh.vertex_values(tri_ids)]

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the interpolant at (k_r, r) points via barycentric
        coordinates in the containing triangle."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri = self.mesh.locate(pts)
        verts = self.mesh.vertices[self.mesh.triangles[tri]]
        vals = self.node_values[self.mesh.triangles[tri]]
        x1, y1 = verts[:, 0, 0], verts[:, 0, 1]
        x2, y2 = verts[:, 1, 0], verts[:, 1, 1]
        x3, y3 = verts[:, 2, 0], verts[:, 2, 1]
        det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        l2 = ((pts[:, 0] - x1) * (y3 - y1) - (x3 - x1) * (pts[:, 1] - y1)) / det
        l3 = ((x2 - x1) * (pts[:, 1] - y1) - (pts[:, 0] - x1) * (y2 - y1)) / det
        l1 = 1.0 - l2 - l3
        return l1 * vals[:, 0] + l2 * vals[:, 1] + l3 * vals[:, 2]

    def gradients(self) -> np.ndarray:
        """Constant per-triangle gradient field of the interpolant."""
        return self.mesh.gradients(self.node_values)


def interpolate_hamiltonian(
    model: DispersionModel, mesh: TriMesh, q_phi: float, k_z: float, phz_cell: int = 0
) -> MeshHamiltonian:
    """Sample the model at every mesh vertex for a fixed (q_phi, k_z).

    Vertices on the axis row (r = 0) cannot be evaluated because the
    azimuthal wavenumber q_phi / r diverges there; their node values are
    filled by linear extrapolation in r from the two adjacent vertex rows.
    The extrapolation reproduces fields affine in r exactly and keeps the
    interpolant finite for branches that blow up on the axis.
    """
    verts = mesh.vertices
    values = np.empty(mesh.n_vertices)
    on_axis = verts[:, 1] <= 0.0
    regular = ~on_axis
    values[regular] = eval_dispersion(
        model, verts[regular, 0], q_phi, k_z, verts[regular, 1]
    )
    if np.any(on_axis):
        if mesh.r.n < 2:
            raise DomainError(
                "cannot extrapolate axis node values on a mesh with fewer "
                "than two radial cell rows"
            )
        n_rv = mesh.r.n + 1
        grid_vals = values.reshape(mesh.kr.n + 1, n_rv)
        r1, r2 = mesh.r.edges[1], mesh.r.edges[2]
        w = r2 / (r2 - r1)
        grid_vals[:, 0] = w * grid_vals[:, 1] + (1.0 - w) * grid_vals[:, 2]
        values = grid_vals.ravel()
    values.setflags(write=False)
    return MeshHamiltonian(
        mesh=mesh, phz_cell=int(phz_cell), q_phi=float(q_phi), k_z=float(k_z),
        node_values=values,
    )


@dataclass(frozen=True)
class Stratification:
    """Monotone interval levels spanning a Hamiltonian's node-value range.

    levels has n_intervals + 1 entries; interval i is the open band
    (levels[i], levels[i + 1]).  Interior levels never coincide with a node
    value (they are nudged upward until clear); the two extreme levels are
    the global node minimum and maximum themselves.
    """

    levels: np.ndarray
    interior_clear: bool

    @property
    def n_intervals(self) -> int:
        return len(self.levels) - 1

    def interval(self, i: int) -> tuple[float, float]:
        return float(self.levels[i]), float(self.levels[i + 1])


def stratify(hamiltonian: MeshHamiltonian, n_intervals: int) -> Stratification:
    """Split the node-value range into n_intervals uniform bands.

    Raises
    ------
    ConfigurationError
        If n_intervals < 1.
    DegenerateFieldError
        If the Hamiltonian is constant (empty value range).
    """
    if int(n_intervals) != n_intervals or n_intervals < 1:
        raise ConfigurationError(
            f"number of stratification intervals must be a positive integer, "
            f"got {n_intervals!r}"
        )
    n_intervals = int(n_intervals)
    lo, hi = hamiltonian.min_value, hamiltonian.max_value
    if not hi > lo:
        raise DegenerateFieldError(
            "constant Hamiltonian: node-value range is empty, cannot stratify"
        )
    levels = np.linspace(lo, hi, n_intervals + 1)
    node_vals = np.unique(hamiltonian.node_values)
    span = hi - lo
    for i in range(1, n_intervals):
        nudge = NUDGE_FRACTION * span
        doublings = 0
        while _collides(levels[i], node_vals):
            if doublings >= MAX_NUDGE_DOUBLINGS:
                raise DegenerateFieldError(
                    f"could not clear level {i} off the node values after "
                    f"{MAX_NUDGE_DOUBLINGS} nudge doublings"
                )
            levels[i] = levels[i] + nudge
            nudge *= 2.0
            doublings += 1
        if not levels[i] < levels[i + 1]:
            raise DegenerateFieldError(
                f"nudged level {i} crossed the next level; value range too tight"
            )
    levels.setflags(write=False)
    interior_clear = not any(_collides(v, node_vals) for v in levels[1:-1])
    return Stratification(levels=levels, interior_clear=interior_clear)


def _collides(level: float, sorted_node_values: np.ndarray) -> bool:
    idx = np.searchsorted(sorted_node_values, level)
    return idx < len(sorted_node_values) and sorted_node_values[idx] == level
