"""First-order time integration of the coupled electron/bundle system.

Four schemes share one step interface: fully_explicit, semi_implicit_f
(electron diffusion implicit, bundle update explicit using the new
electron field), semi_implicit_N (bundle update implicit, electron update
explicit using the new bundle field) and fully_implicit (the two
semi-implicit maps alternated to a fixed point).  Every scheme contracts
the same interaction tensor in both equations at matched time levels, so
the discrete exchange identities for mass, axial momentum and energy hold
for any step size; the step bounds below only protect positivity of the
bundle field and explicit diffusion stability.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NumericalError
from .interaction import InteractionOperator
from .ldg import MomentumTables

SCHEMES = ("fully_explicit", "semi_implicit_f", "semi_implicit_N", "fully_implicit")

CFL_SAFETY = 0.45
IMPLICIT_RTOL = 1e-12
# Implicit electron updates are stable at any dt, but the slab systems
# (M + dt A) become too ill-conditioned for a 1e-12 Krylov solve when dt
# runs orders of magnitude past the explicit limit.  The adaptive driver
# therefore caps implicit steps at this multiple of the explicit bound.
IMPLICIT_DT_GUARD = 100.0
FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITERS = 50
# An implicit bundle update divides by (1 - dt * rate); keep the smallest
# denominator above this margin when growth rates are positive.
GROWTH_DENOMINATOR_MARGIN = 0.1


@dataclass(frozen=True)
class SystemState:
    """Electron cell averages f (radial, p_par, p_perp) and bundle
    coefficients n at time t."""

    t: float
    step: int
    f: np.ndarray
    n: np.ndarray

    def copy_with(self, **kw) -> "SystemState":
        return replace(self, **kw)


def dt_cfl(
    dfield: tuple[np.ndarray, np.ndarray, np.ndarray], tables: MomentumTables
) -> float:
    """Explicit diffusion step bound
    0.45 * min over cells of dp1^2 dp2^2 / (2 (D11 dp2^2 + 2|D12| dp1 dp2 + D22 dp1^2)).
    Infinite when the diffusion field vanishes."""
    d11, d12, d22 = dfield
    dp1 = tables.grid_par.widths[:, None]
    dp2 = tables.grid_perp.widths[None, :]
    denom = 2.0 * (d11 * dp2**2 + 2.0 * np.abs(d12) * dp1 * dp2 + d22 * dp1**2)
    num = dp1**2 * dp2**2
    with np.errstate(divide="ignore"):
        ratios = np.where(denom > 0.0, num / np.where(denom > 0.0, denom, 1.0), np.inf)
    return CFL_SAFETY * float(ratios.min())


def dt_positivity(rates: np.ndarray, delta: float) -> float:
    """Largest explicit step keeping every bundle coefficient above delta
    times its current value: (1 - delta) / max(-rates)."""
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"positivity margin delta must be in (0, 1), got {delta}")
    if len(rates) == 0:
        return np.inf
    worst = float(np.max(-rates))
    if worst <= 0.0:
        return np.inf
    return (1.0 - delta) / worst


def dt_growth_denominator(rates: np.ndarray) -> float:
    """Step bound keeping implicit bundle denominators 1 - dt * rate above
    GROWTH_DENOMINATOR_MARGIN for growing bundles."""
    if len(rates) == 0:
        return np.inf
    fastest = float(np.max(rates))
    if fastest <= 0.0:
        return np.inf
    return (1.0 - GROWTH_DENOMINATOR_MARGIN) / fastest


class _SliceSolver:
    """CG solve of (diag(w) + dt * Grad^T diag(w) D Grad) a = w * a_old per
    radial slab, preconditioned by the system diagonal."""

    def __init__(self, op: InteractionOperator):
        t = op.tables
        n_par, n_perp = t.shape
        n_p = n_par * n_perp
        idx = np.arange(n_p).reshape(n_par, n_perp)

        def face_matrix(rows, cols, vals):
            if not vals:
                return sp.csr_matrix((n_p, n_p))
            return sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(n_p, n_p),
            ).tocsr()

        rows, cols, vals = [], [], []
        inv_w = 1.0 / t.grid_par.widths
        for i in range(n_par - 1):
            rows.append(idx[i, :])
            cols.append(idx[i, :])
            vals.append(np.full(n_perp, -inv_w[i]))
            rows.append(idx[i, :])
            cols.append(idx[i + 1, :])
            vals.append(np.full(n_perp, inv_w[i]))
        self.g_par = face_matrix(rows, cols, vals)

        rows, cols, vals = [], [], []
        ratio = t.grid_perp.edges[1:-1] / t.grid_perp.centers[:-1]
        wq = ratio / t.grid_perp.widths[:-1]
        for j in range(n_perp - 1):
            rows.append(idx[:, j])
            cols.append(idx[:, j])
            vals.append(np.full(n_par, -wq[j]))
            rows.append(idx[:, j])
            cols.append(idx[:, j + 1])
            vals.append(np.full(n_par, wq[j]))
        self.g_perp = face_matrix(rows, cols, vals)
        self.wp = t.volume.ravel()
        self.n_p = n_p

    def solve(self, f_slab: np.ndarray, dfield_slab, dt: float) -> np.ndarray:
        d11, d12, d22 = (d.ravel() for d in dfield_slab)
        if not np.any(d11) and not np.any(d12) and not np.any(d22):
            return f_slab.copy()
        gp, gq, w = self.g_par, self.g_perp, self.wp
        a = (
            gp.T @ sp.diags(w * d11) @ gp
            + gp.T @ sp.diags(w * d12) @ gq
            + gq.T @ sp.diags(w * d12) @ gp
            + gq.T @ sp.diags(w * d22) @ gq
        )
        system = sp.diags(w) + dt * a
        b = w * f_slab.ravel()
        diag = system.diagonal()
        precond = sp.diags(1.0 / diag)
        sol, info = _cg(
            system, b, x0=f_slab.ravel().copy(), rtol=IMPLICIT_RTOL, M=precond,
            maxiter=4 * self.n_p + 200,
        )
        if info != 0:
            raise NumericalError(f"implicit electron solve did not converge (info={info})")
        return sol.reshape(f_slab.shape)


def _cg(system, b, x0, rtol, M, maxiter=None):
    try:
        return spla.cg(system, b, x0=x0, rtol=rtol, atol=0.0, M=M, maxiter=maxiter)
    except TypeError:  # scipy < 1.12 spelling
        return spla.cg(system, b, x0=x0, tol=rtol, atol=0.0, M=M, maxiter=maxiter)


def _implicit_f(op, solver, f, dfield, dt):
    out = np.empty_like(f)
    for xi in range(f.shape[0]):
        out[xi] = solver.solve(f[xi], tuple(d[xi] for d in dfield), dt)
    return out


def implicit_diffusion_update(
    op: InteractionOperator,
    f: np.ndarray,
    dfield,
    dt: float,
) -> np.ndarray:
    """Backward-Euler electron diffusion update alone, without the bundle
    update: solve (M + dt A[dfield]) f_new = M f per radial slab.

    For a positive semidefinite diffusion field the update is contractive
    in the volume-weighted L2 norm at any step size, which makes it useful
    for stability studies and operator-splitting diagnostics.
    """
    if not (np.isfinite(dt) and dt > 0.0):
        raise ConfigurationError(f"step size must be positive and finite, got {dt}")
    return _implicit_f(op, _SliceSolver(op), f, dfield, dt)


def _check_bundle_field(n: np.ndarray) -> None:
    if np.any(~np.isfinite(n)) or np.any(n < 0.0):
        raise NumericalError("bundle field lost positivity or finiteness")


def step(
    state: SystemState,
    op: InteractionOperator,
    scheme: str,
    dt: float,
    dfield=None,
    rates=None,
    slice_solver: _SliceSolver | None = None,
) -> SystemState:
    """Advance one step of the chosen scheme.

    dfield and rates allow reuse of quantities the caller already computed
    for step-size control; they must correspond to state.n and state.f
    respectively.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}; choose one of {SCHEMES}")
    if not (np.isfinite(dt) and dt > 0.0):
        raise ConfigurationError(f"step size must be positive and finite, got {dt}")
    f, n = state.f, state.n

    if scheme == "fully_explicit":
        if dfield is None:
            dfield = op.diffusion_field(n)
        if rates is None:
            rates = op.reaction_rates(f)
        f_new = f + dt * op.apply_diffusion(f, dfield)
        n_new = n * (1.0 + dt * rates)

    elif scheme == "semi_implicit_f":
        if dfield is None:
            dfield = op.diffusion_field(n)
        solver = slice_solver or _SliceSolver(op)
        f_new = _implicit_f(op, solver, f, dfield, dt)
        n_new = n * (1.0 + dt * op.reaction_rates(f_new))

    elif scheme == "semi_implicit_N":
        if rates is None:
            rates = op.reaction_rates(f)
        denom = 1.0 - dt * rates
        if np.any(denom <= 0.0):
            raise NumericalError("implicit bundle update denominator crossed zero")
        n_new = n / denom
        f_new = f + dt * op.apply_diffusion(f, op.diffusion_field(n_new))

    else:  # fully_implicit
        solver = slice_solver or _SliceSolver(op)
        f_k, n_k = f, n
        converged = False
        for _ in range(FIXED_POINT_MAX_ITERS):
            f_next = _implicit_f(op, solver, f, op.diffusion_field(n_k), dt)
            denom = 1.0 - dt * op.reaction_rates(f_next)
            if np.any(denom <= 0.0):
                raise NumericalError("implicit bundle update denominator crossed zero")
            n_next = n / denom
            df = _rel_change(f_next, f_k)
            dn = _rel_change(n_next, n_k)
            f_k, n_k = f_next, n_next
            if max(df, dn) < FIXED_POINT_TOL:
                converged = True
                break
        if not converged:
            raise NumericalError(
                f"fixed point iteration did not reach {FIXED_POINT_TOL} "
                f"in {FIXED_POINT_MAX_ITERS} iterations"
            )
        f_new, n_new = f_k, n_k

    _check_bundle_field(n_new)
    if np.any(~np.isfinite(f_new)):
        raise NumericalError("electron field lost finiteness")
    return SystemState(t=state.t + dt, step=state.step + 1, f=f_new, n=n_new)


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    if new.size == 0:
        return 0.0
    scale = float(np.max(np.abs(new))) or 1.0
    return float(np.max(np.abs(new - old))) / scale


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    dt: float
    active_bound: str


def advance(
    state: SystemState,
    op: InteractionOperator,
    scheme: str,
    t_max: float,
    delta: float = 0.1,
    safety: float = 0.9,
    max_steps: int = 0,
    on_step: Callable[[SystemState, StepRecord], None] | None = None,
) -> SystemState:
    """Run the adaptive step loop until t_max (or max_steps when positive).

    Each step takes safety times the smallest applicable bound: the
    explicit diffusion bound for schemes with explicit electron updates,
    the positivity bound for schemes with explicit bundle updates, and the
    growth-denominator bound for implicit bundle updates.  Schemes with an
    implicit electron solve are additionally capped at IMPLICIT_DT_GUARD
    times the explicit diffusion bound so the slab solves stay well
    conditioned.  The final step is clipped to land on t_max exactly.
    """
    if not 0.0 < safety <= 1.0:
        raise ConfigurationError(f"safety factor must be in (0, 1], got {safety}")
    if not t_max > state.t:
        raise ConfigurationError("t_max must exceed the current time")
    slice_solver = (
        _SliceSolver(op) if scheme in ("semi_implicit_f", "fully_implicit") else None
    )
    explicit_f = scheme in ("fully_explicit", "semi_implicit_N")
    explicit_n = scheme in ("fully_explicit", "semi_implicit_f")

    while True:
        if max_steps and state.step >= max_steps:
            return state
        remaining = t_max - state.t
        if remaining <= 0.0:
            return state
        dfield = op.diffusion_field(state.n)
        rates = op.reaction_rates(state.f)
        bounds = {}
        if explicit_f:
            bounds["cfl"] = dt_cfl(dfield, op.tables)
        else:
            bounds["cfl_guard"] = IMPLICIT_DT_GUARD * dt_cfl(dfield, op.tables)
        if explicit_n:
            bounds["positivity"] = dt_positivity(rates, delta)
        else:
            bounds["denominator"] = dt_growth_denominator(rates)
        if bounds:
            name = min(bounds, key=bounds.get)
            dt = safety * bounds[name]
        else:
            name, dt = "final", np.inf
        if not np.isfinite(dt):
            if not np.isfinite(remaining):
                raise NumericalError(
                    "no finite step bound and no finite horizon; refusing to step"
                )
            dt, name = remaining, "final"
        if dt >= remaining:
            dt, name = remaining, "final"
        state = step(
            state, op, scheme, dt,
            dfield=dfield if explicit_f else None,
            rates=rates if scheme in ("fully_explicit", "semi_implicit_N") else None,
            slice_solver=slice_solver,
        )
        if on_step is not None:
            on_step(state, StepRecord(step=state.step, t=state.t, dt=dt, active_bound=name))
