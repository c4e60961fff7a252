"""Desk-scale 2D flow oracle: steady incompressible flow over an obstacle mask.

Stand-in for a full CFD pipeline with the same tensor interface: given the
boolean obstacle mask of one probe-plane slice it returns a normalized
wind-factor field.  Scheme: pseudo-time projection (pressure correction) on a
staggered MAC grid, semi-Lagrangian advection, implicit (backward Euler)
diffusion, exact pressure solve.  The sparse operators depend only on the
mask, so all three systems are LU-factorized once per solve.

The solver works in nondimensional grid units: unit cell spacing, unit inlet
speed.  ``SolverConfig.viscosity`` is the effective kinematic viscosity in
those units (1 cell^2 per time unit corresponds to 1 m^2/s at 1 m pitch).
Because the momentum equation is solved for velocity/inlet_speed directly,
the returned factors are exactly invariant to ``inlet_speed``; the inlet
speed only matters downstream when factors are converted back to m/s.

Boundary conditions: uniform inflow on the -x edge, zero-gradient outflow
with p = 0 on the +x edge, free-slip lateral walls, no-slip (zero face
velocity) on obstacle cells.  Open regions with no path to the outflow edge
are treated as still air (factor 0).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import label
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu


class AllSolidError(ValueError):
    """Mask admits no open path from the inflow edge to the outflow edge."""


class NonConvergence(UserWarning):
    """Residual still above tolerance at max_iters; field returned anyway."""


@dataclass(frozen=True)
class SolverConfig:
    inlet_speed: float = 5.0
    residual_tol: float = 1e-5
    max_iters: int = 5000
    viscosity: float = 1.0
    relaxation: float = 1.0

    def __post_init__(self) -> None:
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.inlet_speed > 0:
            raise ValueError("inlet_speed must be > 0")
        if not self.viscosity > 0:
            raise ValueError("viscosity must be > 0")
        if not 0 < self.relaxation <= 1:
            raise ValueError("relaxation must be in (0, 1]")


@dataclass
class SolveStats:
    iterations: int
    final_residual: float
    converged: bool
    residual_history: np.ndarray
    u: np.ndarray  # (H, W+1) face velocities, x component
    v: np.ndarray  # (H+1, W) face velocities, y component


@dataclass(frozen=True)
class WindField:
    """Normalized wind-factor magnitudes on the slice grid."""

    factors: np.ndarray  # (H, W) float32, >= 0, zero where invalid
    valid_mask: np.ndarray  # (H, W) bool, False inside solids
    direction: str = ""
    slice_height: float = 0.0
    scene_id: str = ""
    stats: SolveStats | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        f = np.asarray(self.factors, dtype=np.float32)
        m = np.asarray(self.valid_mask, dtype=bool)
        if f.shape != m.shape or f.ndim != 2:
            raise ValueError(f"factors/valid_mask shape mismatch: {f.shape} vs {m.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("wind factors must be finite")
        if np.any(f[~m] != 0):
            raise ValueError("factors must be 0 where invalid")
        if np.any(f < 0):
            raise ValueError("factors must be >= 0")
        f.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "factors", f)
        object.__setattr__(self, "valid_mask", m)


def divergence_residual(u: np.ndarray, v: np.ndarray, open_mask: np.ndarray | None = None) -> float:
    """Max |div u| over open cells for staggered face velocities (unit spacing)."""
    div = (u[:, 1:] - u[:, :-1]) + (v[1:, :] - v[:-1, :])
    if open_mask is not None:
        if not np.any(open_mask):
            return 0.0
        div = div[open_mask]
    return float(np.max(np.abs(div))) if div.size else 0.0


def _connectivity(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(active, through) cell masks; raises AllSolidError without a through path."""
    open_cells = ~mask
    labels, n = label(open_cells)
    if n == 0:
        raise AllSolidError("obstacle mask has no open cells")
    inlet_labels = set(np.unique(labels[:, 0])) - {0}
    outlet_labels = set(np.unique(labels[:, -1])) - {0}
    through = inlet_labels & outlet_labels
    if not through:
        raise AllSolidError("no open path connects the inflow edge to the outflow edge")
    # cells that participate in the pressure solve: anything draining to the outlet
    active = np.isin(labels, sorted(outlet_labels))
    through_mask = np.isin(labels, sorted(through))
    return active, through_mask


def _pressure_lu(active: np.ndarray, ufluid: np.ndarray, vfluid: np.ndarray, uout: np.ndarray):
    H, W = active.shape
    idx = -np.ones((H, W), dtype=np.int64)
    cells = np.argwhere(active)
    idx[active] = np.arange(len(cells))

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for n, (i, j) in enumerate(cells):
        diag = 0.0
        for (ni, nj, face_ok) in (
            (i, j + 1, j + 1 < W and ufluid[i, j + 1]),
            (i, j - 1, j > 0 and ufluid[i, j]),
            (i + 1, j, i + 1 < H and vfluid[i + 1, j]),
            (i - 1, j, i > 0 and vfluid[i, j]),
        ):
            if face_ok:
                rows.append(n)
                cols.append(idx[ni, nj])
                vals.append(1.0)
                diag -= 1.0
        if j == W - 1 and uout[i]:
            diag -= 2.0  # Dirichlet p = 0 at the outflow face (ghost = -p)
        rows.append(n)
        cols.append(n)
        vals.append(diag)
    A = csc_matrix((vals, (rows, cols)), shape=(len(cells), len(cells)))
    return splu(A), idx


def _diffusion_lu(unknown: np.ndarray, neumann_pads: tuple[bool, bool, bool, bool],
                  inlet_faces: np.ndarray | None, neumann_faces: np.ndarray | None,
                  nudt: float):
    """LU of (I + nu*dt*L) for one velocity component on its face grid.

    ``unknown`` marks faces solved implicitly.  Neighbors outside the grid
    are Neumann (zero-gradient) on the sides flagged in ``neumann_pads``
    (N, S, W, E order) and Dirichlet 0 otherwise.  In-grid non-unknown
    neighbors are Dirichlet 0, except ``inlet_faces`` (known value 1, moved
    to the returned fixed RHS) and ``neumann_faces`` (faces that copy the
    adjacent unknown, e.g. the outflow column).
    """
    Hf, Wf = unknown.shape
    idx = -np.ones((Hf, Wf), dtype=np.int64)
    faces = np.argwhere(unknown)
    idx[unknown] = np.arange(len(faces))
    neumann_n, neumann_s, neumann_w, neumann_e = neumann_pads

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs_fixed = np.zeros(len(faces))
    for n, (i, j) in enumerate(faces):
        diag = 1.0 + 4.0 * nudt
        for (ni, nj, edge_neumann) in (
            (i - 1, j, neumann_n),
            (i + 1, j, neumann_s),
            (i, j - 1, neumann_w),
            (i, j + 1, neumann_e),
        ):
            if not (0 <= ni < Hf and 0 <= nj < Wf):
                if edge_neumann:
                    diag -= nudt  # ghost equals center
                continue
            if unknown[ni, nj]:
                rows.append(n)
                cols.append(idx[ni, nj])
                vals.append(-nudt)
            elif inlet_faces is not None and inlet_faces[ni, nj]:
                rhs_fixed[n] += nudt  # Dirichlet neighbor with known value 1
            elif neumann_faces is not None and neumann_faces[ni, nj]:
                diag -= nudt  # neighbor copies this unknown
            # else: Dirichlet 0 neighbor, nothing to add
        rows.append(n)
        cols.append(n)
        vals.append(diag)
    A = csc_matrix((vals, (rows, cols)), shape=(len(faces), len(faces)))
    return splu(A), rhs_fixed


def _bilinear(a: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Clamped bilinear gather on a 2D grid at fractional (row, col) positions."""
    H, W = a.shape
    r = np.clip(rows, 0.0, H - 1.0)
    c = np.clip(cols, 0.0, W - 1.0)
    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(c).astype(np.int64)
    r1 = np.minimum(r0 + 1, H - 1)
    c1 = np.minimum(c0 + 1, W - 1)
    fr = r - r0
    fc = c - c0
    return (
        a[r0, c0] * (1.0 - fr) * (1.0 - fc)
        + a[r0, c1] * (1.0 - fr) * fc
        + a[r1, c0] * fr * (1.0 - fc)
        + a[r1, c1] * fr * fc
    )


def solve(mask: np.ndarray, cfg: SolverConfig = SolverConfig(), *, direction: str = "",
          slice_height: float = 0.0, scene_id: str = "") -> WindField:
    """March a projection scheme to steady state over ``mask``.

    Returns factors = |velocity| / inlet_speed at cell centers.  Convergence
    is the max-norm of the per-step velocity update dropping below
    ``cfg.residual_tol``; hitting ``max_iters`` first issues a
    ``NonConvergence`` warning and flags the result, which is still returned.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2D, got shape {mask.shape}")
    H, W = mask.shape
    active, through = _connectivity(mask)

    # face classification
    uin = active[:, 0] & through[:, 0]  # inflow faces drive only through-flow cells
    uout = active[:, -1]
    ufluid = np.zeros((H, W + 1), dtype=bool)  # interior faces free to evolve
    ufluid[:, 1:W] = active[:, :-1] & active[:, 1:]
    vfluid = np.zeros((H + 1, W), dtype=bool)
    vfluid[1:H, :] = active[:-1, :] & active[1:, :]

    nu = cfg.viscosity
    dt = cfg.relaxation * 0.25

    plu, _ = _pressure_lu(active, ufluid, vfluid, uout)
    uin_faces = np.zeros((H, W + 1), dtype=bool)
    uin_faces[uin, 0] = True
    uout_faces = np.zeros((H, W + 1), dtype=bool)
    uout_faces[uout, W] = True
    # u: free-slip N/S walls, zero-gradient at the outflow column
    ulu, urhs_fixed = _diffusion_lu(ufluid, (True, True, False, True), uin_faces, uout_faces, nu * dt)
    # v: Dirichlet 0 beyond inlet (uniform inflow), zero-gradient at outflow
    vlu, vrhs_fixed = _diffusion_lu(vfluid, (False, False, False, True), None, None, nu * dt)

    u = np.zeros((H, W + 1))
    v = np.zeros((H + 1, W))
    u[:, 1:W][ufluid[:, 1:W]] = 1.0
    u[uin, 0] = 1.0
    u[uout, W] = 1.0

    # face index coordinate tables for the semi-Lagrangian backtrace
    u_rows, u_cols = np.mgrid[0:H, 0:W + 1].astype(np.float64)
    v_rows, v_cols = np.mgrid[0:H + 1, 0:W].astype(np.float64)

    residuals = np.empty(cfg.max_iters)
    iterations = 0
    converged = False
    for it in range(cfg.max_iters):
        u0, v0 = u, v

        # --- semi-Lagrangian advection (unconditionally stable) -------------
        v_at_u = np.zeros_like(u)
        v_at_u[:, 1:W] = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, :-1] + v[1:, 1:])
        u_at_v = np.zeros_like(v)
        u_at_v[1:H, :] = 0.25 * (u[:-1, :-1] + u[:-1, 1:] + u[1:, :-1] + u[1:, 1:])
        # u faces sit at world (x=j, y=i+0.5) == u-grid index (row=i, col=j)
        ustar = _bilinear(u, u_rows - dt * v_at_u, u_cols - dt * u)
        # v faces sit at world (x=j+0.5, y=i) == v-grid index (row=i, col=j)
        vstar = _bilinear(v, v_rows - dt * v, v_cols - dt * u_at_v)

        # --- implicit diffusion ---------------------------------------------
        un = np.zeros_like(u)
        un[ufluid] = ulu.solve(ustar[ufluid] + urhs_fixed)
        vn = np.zeros_like(v)
        vn[vfluid] = vlu.solve(vstar[vfluid] + vrhs_fixed)
        un[uin, 0] = 1.0
        un[uout, W] = un[uout, W - 1]  # zero-gradient outflow before projection

        # --- projection ------------------------------------------------------
        div = (un[:, 1:] - un[:, :-1]) + (vn[1:, :] - vn[:-1, :])
        p = plu.solve(div[active] / dt)
        pg = np.zeros((H, W))
        pg[active] = p
        gpx = pg[:, 1:] - pg[:, :-1]
        un[:, 1:W][ufluid[:, 1:W]] -= dt * gpx[ufluid[:, 1:W]]
        gpy = pg[1:, :] - pg[:-1, :]
        vn[1:H, :][vfluid[1:H, :]] -= dt * gpy[vfluid[1:H, :]]
        un[uout, W] += 2.0 * dt * pg[uout, W - 1]

        u, v = un, vn
        res = max(
            float(np.max(np.abs(u - u0))) if u.size else 0.0,
            float(np.max(np.abs(v - v0))) if v.size else 0.0,
        )
        residuals[it] = res
        iterations = it + 1
        if res < cfg.residual_tol:
            converged = True
            break

    if not converged:
        warnings.warn(
            f"flow solve stopped at max_iters={cfg.max_iters} with residual "
            f"{residuals[iterations - 1]:.3e} > tol {cfg.residual_tol:.1e}",
            NonConvergence,
        )

    speed = np.hypot(0.5 * (u[:, :-1] + u[:, 1:]), 0.5 * (v[:-1, :] + v[1:, :]))
    factors = np.where(~mask, speed, 0.0).astype(np.float32)
    stats = SolveStats(
        iterations=iterations,
        final_residual=float(residuals[iterations - 1]),
        converged=converged,
        residual_history=residuals[:iterations].copy(),
        u=u,
        v=v,
    )
    return WindField(
        factors=factors,
        valid_mask=~mask,
        direction=direction,
        slice_height=slice_height,
        scene_id=scene_id,
        stats=stats,
    )
