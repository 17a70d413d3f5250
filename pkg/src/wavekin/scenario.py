"""Turn a configuration into the assembled discrete system.

The build order is deterministic: grids and the shared triangle mesh
first, then per (q_phi, k_z) cell the interpolated Hamiltonian, its
stratification and its bundles (ids assigned in cell-major order), finally
the interaction operator and the conserved-total weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundles import TrajectoryBundle, build_bundles, bundle_sup_hamiltonian, renumber
from .config import RunConfig
from .diagnostics import ConservedWeights, conserved_weights
from .dispersion import (
    DispersionModel,
    MeshHamiltonian,
    Stratification,
    interpolate_hamiltonian,
    parabolic_density_model,
    stratify,
)
from .grids import RectGrid1D, TriMesh, build_rect_grid, build_tri_mesh
from .interaction import InteractionOperator, KernelSpec, assemble_interaction
from .ldg import MomentumTables, build_momentum_tables
from .solver import SystemState


@dataclass(frozen=True)
class Scenario:
    config: RunConfig
    model: DispersionModel
    grid_p_par: RectGrid1D
    grid_p_perp: RectGrid1D
    grid_r: RectGrid1D
    grid_q_phi: RectGrid1D
    grid_k_z: RectGrid1D
    mesh: TriMesh
    tables: MomentumTables
    phz_centers: np.ndarray = field(repr=False)
    phz_area: float = 0.0
    hamiltonians: tuple[MeshHamiltonian, ...] = field(repr=False, default=())
    stratifications: tuple[Stratification, ...] = field(repr=False, default=())
    bundles: tuple[TrajectoryBundle, ...] = field(repr=False, default=())
    excluded_bundles: tuple[TrajectoryBundle, ...] = field(repr=False, default=())
    operator: InteractionOperator | None = None
    weights: ConservedWeights | None = None

    @property
    def n_phz_cells(self) -> int:
        return self.grid_q_phi.n * self.grid_k_z.n

    def phz_cell_index(self, iq: int, ik: int) -> int:
        return iq * self.grid_k_z.n + ik


def build_scenario(
    config: RunConfig,
    model: DispersionModel | None = None,
    kernel: KernelSpec | None = None,
) -> Scenario:
    model = model or parabolic_density_model(config.omega_pe0, config.omega_ce0)
    kernel = kernel or KernelSpec(eps=config.kernel_eps, harmonic=config.kernel_harmonic)

    grid_p_par = build_rect_grid(config.p_par_min, config.p_par_max, config.n_p_par)
    grid_p_perp = build_rect_grid(0.0, config.p_perp_max, config.n_p_perp)
    grid_r = build_rect_grid(0.0, config.r_max, config.n_r)
    grid_q_phi = build_rect_grid(0.0, config.q_phi_max, config.n_q_phi)
    grid_k_z = build_rect_grid(0.0, config.k_z_max, config.n_k_z)
    mesh = build_tri_mesh(
        build_rect_grid(-config.k_r_max, config.k_r_max, config.n_tri_kr),
        build_rect_grid(0.0, config.r_max, config.n_tri_r),
    )
    tables = build_momentum_tables(grid_p_par, grid_p_perp)

    n_cells = grid_q_phi.n * grid_k_z.n
    phz_centers = np.empty((n_cells, 2))
    phz_area = float(grid_q_phi.widths[0] * grid_k_z.widths[0])

    hams: list[MeshHamiltonian] = []
    strats: list[Stratification] = []
    retained: list[TrajectoryBundle] = []
    excluded: list[TrajectoryBundle] = []
    omega_sup: list[np.ndarray] = []
    for iq in range(grid_q_phi.n):
        for ik in range(grid_k_z.n):
            cell = iq * grid_k_z.n + ik
            phz_centers[cell] = (grid_q_phi.centers[iq], grid_k_z.centers[ik])
            ham = interpolate_hamiltonian(
                model, mesh, grid_q_phi.centers[iq], grid_k_z.centers[ik], phz_cell=cell
            )
            strat = stratify(ham, config.n_strata)
            cell_bundles = build_bundles(
                ham, strat, phz_area, drop_boundary=False
            )
            keep = [b for b in cell_bundles if not b.touches_kr_boundary]
            drop = [b for b in cell_bundles if b.touches_kr_boundary]
            omega_sup.append(bundle_sup_hamiltonian(ham, keep))
            retained.extend(keep)
            excluded.extend(drop)
            hams.append(ham)
            strats.append(strat)

    retained = renumber(retained)
    excluded = renumber(excluded, id_start=len(retained))
    sup = np.concatenate(omega_sup) if omega_sup else np.zeros(0)

    operator = assemble_interaction(
        retained, mesh, grid_r, phz_centers, phz_area, tables, kernel, model, sup
    )
    weights = conserved_weights(operator)
    phz_centers.setflags(write=False)
    return Scenario(
        config=config,
        model=model,
        grid_p_par=grid_p_par,
        grid_p_perp=grid_p_perp,
        grid_r=grid_r,
        grid_q_phi=grid_q_phi,
        grid_k_z=grid_k_z,
        mesh=mesh,
        tables=tables,
        phz_centers=phz_centers,
        phz_area=phz_area,
        hamiltonians=tuple(hams),
        stratifications=tuple(strats),
        bundles=tuple(retained),
        excluded_bundles=tuple(excluded),
        operator=operator,
        weights=weights,
    )


def initial_state(scenario: Scenario) -> SystemState:
    """Reference initial data: a drifting Gaussian electron beam (no radial
    dependence) and a uniform bundle field."""
    cfg = scenario.config
    pc = scenario.grid_p_par.centers[:, None]
    qc = scenario.grid_p_perp.centers[None, :]
    beam = (
        cfg.f_amplitude
        / np.sqrt(np.pi)
        * np.exp(-((pc - cfg.f_center_p_par) ** 2) - qc**2)
    )
    f = np.broadcast_to(beam, (scenario.grid_r.n,) + beam.shape).copy()
    n = np.full(len(scenario.bundles), cfg.n_amplitude)
    return SystemState(t=0.0, step=0, f=f, n=n)
