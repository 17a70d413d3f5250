"""Lowest-order local-DG operators on the (p_par, p_perp) momentum grid.

At piecewise-constant order the alternating-flux gradient pair collapses to
one-sided differences with a copied ghost value along the outflow edge, so
the discrete gradient of any field vanishes identically on the last cell
column (parallel direction) and last row (perpendicular direction).  The
perpendicular difference carries the cylindrical face-to-center radius
ratio so that the divergence adjoint reproduces the 2*pi*p_perp measure.

Fields are arrays of shape (n_par, n_perp); axis 0 is the parallel
direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import RectGrid1D


def discrete_grad_par(g: np.ndarray, grid_par: RectGrid1D) -> np.ndarray:
    """Forward difference along the parallel axis; zero on the last column
    (the ghost cell copies the boundary value).  The momentum axes are the
    two trailing dimensions, so fields batched over radial cells work too.
    """
    out = np.zeros_like(g, dtype=float)
    out[..., :-1, :] = (g[..., 1:, :] - g[..., :-1, :]) / grid_par.widths[:-1, None]
    return out


def discrete_grad_perp(g: np.ndarray, grid_perp: RectGrid1D) -> np.ndarray:
    """Forward difference along the perpendicular axis, scaled by the ratio
    of the cell's upper-face p_perp to its center p_perp; zero on the last
    row."""
    out = np.zeros_like(g, dtype=float)
    ratio = grid_perp.edges[1:-1] / grid_perp.centers[:-1]
    out[..., :, :-1] = (
        ratio * (g[..., :, 1:] - g[..., :, :-1]) / grid_perp.widths[:-1]
    )
    return out


def grad_par_adjoint(h: np.ndarray, grid_par: RectGrid1D) -> np.ndarray:
    """Transpose of discrete_grad_par as a matrix acting on flat fields."""
    out = np.zeros_like(h, dtype=float)
    out[..., :-1, :] -= h[..., :-1, :] / grid_par.widths[:-1, None]
    out[..., 1:, :] += h[..., :-1, :] / grid_par.widths[:-1, None]
    return out


def grad_perp_adjoint(h: np.ndarray, grid_perp: RectGrid1D) -> np.ndarray:
    """Transpose of discrete_grad_perp as a matrix acting on flat fields."""
    out = np.zeros_like(h, dtype=float)
    ratio = grid_perp.edges[1:-1] / grid_perp.centers[:-1]
    w = ratio / grid_perp.widths[:-1]
    out[..., :, :-1] -= h[..., :, :-1] * w
    out[..., :, 1:] += h[..., :, :-1] * w
    return out


def project_px(
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid_par: RectGrid1D,
    grid_perp: RectGrid1D,
) -> np.ndarray:
    """Collocate a momentum-space function at lower-left cell corners."""
    ppar = grid_par.edges[:-1]
    pperp = grid_perp.edges[:-1]
    return fun(ppar[:, None], pperp[None, :])


def relativistic_energy(p_par, p_perp):
    """E(p) = sqrt(1 + p^2) in m_e = c = 1 units."""
    return np.sqrt(1.0 + np.square(p_par) + np.square(p_perp))


def apply_Lh(
    g: np.ndarray,
    beta1: np.ndarray,
    beta2: np.ndarray,
    grid_par: RectGrid1D,
    grid_perp: RectGrid1D,
    cell: tuple[int, int] | None = None,
):
    """Directional derivative beta . grad_h g.

    With cell=None the full field is returned; otherwise the scalar value
    at one (i, j) cell.
    """
    out = beta1 * discrete_grad_par(g, grid_par) + beta2 * discrete_grad_perp(
        g, grid_perp
    )
    if cell is None:
        return out
    return float(out[cell])


@dataclass(frozen=True)
class MomentumTables:
    """Per-cell fields every interaction assembly and rate evaluation needs.

    The directional-derivative coefficient for a bundle with projected wave
    numbers (kappa, omega) is

        beta1 = kappa * perp_slope      (parallel component)
        beta2 = omega * radius_factor - kappa * par_slope

    where perp_slope = (grad_perp E) * |p|/p_perp, par_slope = (grad_par E)
    * |p|/p_perp and radius_factor = |p|/p_perp, all at cell centers except
    the energy gradients, which difference the corner-collocated energy.
    """

    grid_par: RectGrid1D
    grid_perp: RectGrid1D
    energy_corners: np.ndarray = field(repr=False)
    pz_corners: np.ndarray = field(repr=False)
    grad_par_energy: np.ndarray = field(repr=False)
    grad_perp_energy: np.ndarray = field(repr=False)
    radius_factor: np.ndarray = field(repr=False)
    par_slope: np.ndarray = field(repr=False)
    perp_slope: np.ndarray = field(repr=False)
    volume: np.ndarray = field(repr=False)
    v_par: np.ndarray = field(repr=False)
    inv_gamma: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.energy_corners.shape

    def beta(self, kappa: float, omega: float) -> tuple[np.ndarray, np.ndarray]:
        """Directional coefficient fields for one bundle."""
        beta1 = kappa * self.perp_slope
        beta2 = omega * self.radius_factor - kappa * self.par_slope
        return beta1, beta2


def build_momentum_tables(grid_par: RectGrid1D, grid_perp: RectGrid1D) -> MomentumTables:
    energy = project_px(relativistic_energy, grid_par, grid_perp)
    pz = project_px(lambda a, b: a + 0.0 * b, grid_par, grid_perp)
    ge_par = discrete_grad_par(energy, grid_par)
    ge_perp = discrete_grad_perp(energy, grid_perp)
    pc = grid_par.centers[:, None]
    qc = grid_perp.centers[None, :]
    p_mag = np.sqrt(pc**2 + qc**2)
    radius_factor = p_mag / qc
    gamma_c = relativistic_energy(pc, qc)
    volume = (
        grid_par.widths[:, None]
        * grid_perp.widths[None, :]
        * (2.0 * np.pi)
        * grid_perp.centers[None, :]
    )
    tables = MomentumTables(
        grid_par=grid_par,
        grid_perp=grid_perp,
        energy_corners=energy,
        pz_corners=pz,
        grad_par_energy=ge_par,
        grad_perp_energy=ge_perp,
        radius_factor=radius_factor,
        par_slope=ge_par * radius_factor,
        perp_slope=ge_perp * radius_factor,
        volume=volume,
        v_par=(pc / gamma_c) * np.ones_like(radius_factor),
        inv_gamma=(1.0 / gamma_c) * np.ones_like(radius_factor),
    )
    for a in (
        tables.energy_corners,
        tables.pz_corners,
        tables.grad_par_energy,
        tables.grad_perp_energy,
        tables.radius_factor,
        tables.par_slope,
        tables.perp_slope,
        tables.volume,
        tables.v_par,
        tables.inv_gamma,
    ):
        a.setflags(write=False)
    return tables
