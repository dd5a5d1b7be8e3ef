"""Gradient-flow relaxation of the coupled tensor/magnetization energy.

The discrete energy is edge-based,

    F_h = sum_edges 1/2|q_b - q_a|^2 + eps/2 |M_b - M_a|^2
        + h^2 sum_inside f_eps(q, M)/eps^2,

whose exact gradient per node is h^2 * R_Q (and eps h^2 * R_M) with the
masked 5-point Laplacian, so forward Euler on

    dq/dt = -R_Q,   dM/dt = -R_M

dissipates F_h exactly up to the O(dt^2) Euler error.  Tensor values on the
boundary band are Dirichlet data in both modes; M evolves on the band only
in mixed mode (mirror-ghost Neumann).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import potential
from .errors import ConfigError, FrameUndefinedError, InvalidInputError, NumericError
from .grid import BoundaryData, DomainGrid, laplacian, poisson_solve

SQRT2 = np.sqrt(2.0)


@dataclass
class SolverConfig:
    """Time-stepping policy and stopping rules for relax()."""
    dt_policy: str = "adaptive"      # "adaptive" (safety * bound) or "fixed"
    dt: float | None = None          # required when dt_policy == "fixed"
    safety: float = 0.2              # c_stab in dt <= c_stab * min(h^2, eps^2)
    tol_residual: float = 1e-5       # relative to the initial residual
    abs_floor: float = 1e-8          # absolute residual floor for the stop test
    max_steps: int = 200_000
    seed: int = 0
    history_every: int = 50

    def resolve_dt(self, h: float, eps: float) -> float:
        bound = self.safety * min(h * h, eps * eps)
        if self.dt_policy == "fixed":
            if self.dt is None:
                raise ConfigError("fixed dt policy needs dt")
            if self.dt > 0.2 * min(h * h, eps * eps) * (1 + 1e-12):
                raise ConfigError("fixed dt violates the stability bound "
                                  "dt <= 0.2*min(h^2, eps^2)")
            return float(self.dt)
        if self.dt_policy != "adaptive":
            raise ConfigError(f"unknown dt policy {self.dt_policy!r}")
        return bound


@dataclass
class SolveState:
    """Fields plus convergence bookkeeping for one relaxation run."""
    q: np.ndarray
    M: np.ndarray
    step: int
    F_eps: float
    residual: float
    history: np.ndarray            # rows (step, F_eps, residual)
    grid: DomainGrid
    bc: BoundaryData
    params: potential.CouplingParams
    constants: potential.PotentialConstants
    dt: float
    converged: bool = False
    flags: list = field(default_factory=list)


def _p_embed(M: np.ndarray) -> np.ndarray:
    """Embedded traceless part of M (x) M."""
    p1 = (M[..., 0] ** 2 - M[..., 1] ** 2) / SQRT2
    p2 = 2.0 * M[..., 0] * M[..., 1] / SQRT2
    return np.stack([p1, p2], axis=-1)


def el_residual(q: np.ndarray, M: np.ndarray, params: potential.CouplingParams,
                grid: DomainGrid, bc: BoundaryData):
    """Euler-Lagrange residuals (R_Q, R_M, combined L2 norm).

    R_Q = -lap q + (|q|^2 - 1) q / eps^2 - (beta/eps) p(M)
    R_M = -lap M + (|M|^2 - 1) M / eps^2 - (2 beta/eps^2) QM

    R_Q lives on interior nodes (tensor data is Dirichlet); R_M on all inside
    nodes in mixed mode, interior only in dirichlet_both mode.
    """
    beta, eps = params.beta, params.eps
    rq = -laplacian(q, grid, bc="dirichlet")
    rho2 = (q[..., 0] ** 2 + q[..., 1] ** 2)[..., None]
    rq += (grid.interior[..., None]
           * ((rho2 - 1.0) * q / eps ** 2 - (beta / eps) * _p_embed(M)))
    m_bc = "neumann" if bc.mode == "mixed" else "dirichlet"
    rm = -laplacian(M, grid, bc=m_bc)
    m_mask = grid.inside if bc.mode == "mixed" else grid.interior
    m2 = (M[..., 0] ** 2 + M[..., 1] ** 2)[..., None]
    rm += (m_mask[..., None]
           * ((m2 - 1.0) * M / eps ** 2
              - (2.0 * beta / eps ** 2) * potential.q_matvec(q, M)))
    norm = float(np.sqrt(grid.h ** 2 * (np.sum(rq ** 2) + np.sum(rm ** 2))))
    return rq, rm, norm


def discrete_energy(q: np.ndarray, M: np.ndarray, params: potential.CouplingParams,
                    grid: DomainGrid,
                    constants: potential.PotentialConstants | None = None) -> float:
    """The edge-based discrete energy the flow dissipates (scalar only)."""
    if constants is None:
        constants = potential.compute_constants(params)
    eps = params.eps
    dqx = np.sum((q[1:, :] - q[:-1, :]) ** 2, axis=-1)
    dqy = np.sum((q[:, 1:] - q[:, :-1]) ** 2, axis=-1)
    dmx = np.sum((M[1:, :] - M[:-1, :]) ** 2, axis=-1)
    dmy = np.sum((M[:, 1:] - M[:, :-1]) ** 2, axis=-1)
    grad_q = 0.5 * (np.sum(dqx * grid.edge_x) + np.sum(dqy * grid.edge_y))
    grad_m = 0.5 * eps * (np.sum(dmx * grid.edge_x) + np.sum(dmy * grid.edge_y))
    f = potential.f_eps(q, M, params, constants, check=False)
    pot = grid.h ** 2 * np.sum(f * grid.inside) / eps ** 2
    return float(grad_q + grad_m + pot)


def energy(q: np.ndarray, M: np.ndarray, params: potential.CouplingParams,
           grid: DomainGrid,
           constants: potential.PotentialConstants | None = None,
           region: np.ndarray | None = None) -> dict:
    """Energy report: total, components, vector-energy E_eps, frame energy AC.

    region selects the nodes for the frame (Allen-Cahn) part; default is the
    full clearing region {|Q| >= 1/2}.  The AC part is refused when the
    region contains a node with |Q| < 1/2.
    """
    from . import qtensor

    if constants is None:
        constants = potential.compute_constants(params)
    beta, eps = params.beta, params.eps
    h2 = grid.h ** 2
    dqx = np.sum((q[1:, :] - q[:-1, :]) ** 2, axis=-1)
    dqy = np.sum((q[:, 1:] - q[:, :-1]) ** 2, axis=-1)
    dmx = np.sum((M[1:, :] - M[:-1, :]) ** 2, axis=-1)
    dmy = np.sum((M[:, 1:] - M[:, :-1]) ** 2, axis=-1)
    grad_q = 0.5 * (np.sum(dqx * grid.edge_x) + np.sum(dqy * grid.edge_y))
    grad_m = 0.5 * eps * (np.sum(dmx * grid.edge_x) + np.sum(dmy * grid.edge_y))
    f = potential.f_eps(q, M, params, constants, check=False)
    pot = h2 * np.sum(f * grid.inside) / eps ** 2
    total = float(grad_q + grad_m + pot)

    rho = np.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2)
    # vector energy E_eps = int eps/2 |grad M|^2 + V/eps, V masked where Q degenerate
    v = np.zeros(grid.shape)
    nz = rho > 1e-9
    if np.any(nz & grid.inside):
        v[nz] = potential.V(q[nz], M[nz], beta)
    e_eps = float(grad_m + h2 * np.sum(v * grid.inside) / eps)

    if region is None:
        region = grid.inside & (rho >= 0.5)
    else:
        region = region & grid.inside
        if np.any(rho[region] < 0.5):
            raise InvalidInputError("frame-energy region touches |Q| < 1/2")
    ac = None
    frac = float(np.count_nonzero(region)) / max(1, np.count_nonzero(grid.inside))
    if np.any(region):
        # a consistent director frame may not exist around half-degree
        # defects (non-orientable line field); the frame energy is then
        # reported as None rather than failing the whole energy report
        try:
            u = qtensor.u_coords(M, q, region)
        except FrameUndefinedError:
            u = None
        if u is not None:
            rex = region[:-1, :] & region[1:, :]
            rey = region[:, :-1] & region[:, 1:]
            dux = np.sum((u[1:, :] - u[:-1, :]) ** 2, axis=-1)
            duy = np.sum((u[:, 1:] - u[:, :-1]) ** 2, axis=-1)
            ac_grad = 0.5 * eps * (np.sum(dux * rex) + np.sum(duy * rey))
            hpot = potential.h_potential(u, beta)
            ac = float(ac_grad + h2 * np.sum(hpot * region) / eps)

    # pure tensor part: gradient plus the modulus potential g_eps
    g = potential.g_eps(q, params, constants)
    q_part = float(grad_q + h2 * np.sum(g * grid.inside))
    remainder = None if ac is None else total - q_part - ac
    return {
        "F_eps": total,
        "grad_Q": float(grad_q),
        "grad_M": float(grad_m),
        "potential": float(pot),
        "E_eps": e_eps,
        "AC": ac,
        "Q_part": q_part,
        "remainder": remainder,
        "region_fraction": frac,
    }


# ---------------------------------------------------------------------------
# initialization


def _apply_bc(q: np.ndarray, M: np.ndarray, grid: DomainGrid, bc: BoundaryData):
    grid.scatter_boundary(bc.q, q)
    if bc.M is not None:
        grid.scatter_boundary(bc.M, M)


def _init_random(grid: DomainGrid, bc: BoundaryData, beta: float, seed: int):
    rng = np.random.default_rng(seed)
    q = poisson_solve(grid, bc.q)
    lam = np.sqrt(SQRT2 * beta + 1.0)
    theta = grid.boundary_theta
    m_bd = bc.M if bc.M is not None else \
        lam * np.stack([np.cos(bc.d * theta), np.sin(bc.d * theta)], axis=1)
    M = poisson_solve(grid, m_bd)
    q += 0.1 * rng.standard_normal(q.shape) * grid.interior[..., None]
    m_mask = grid.inside if bc.mode == "mixed" else grid.interior
    M += 0.1 * rng.standard_normal(M.shape) * m_mask[..., None]
    return q, M


def _init_seeded(grid: DomainGrid, bc: BoundaryData, params, positions, degrees=None,
                 cuts="pair"):
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    p = positions.shape[0]
    if degrees is None:
        sgn = 1.0 if bc.d >= 0 else -1.0
        degrees = np.full(p, 0.5 * sgn)
    degrees = np.asarray(degrees, dtype=float)
    if cuts not in ("pair", "boundary"):
        raise ConfigError(f"unknown seeded cuts {cuts!r}")
    X, Y = grid.X, grid.Y
    phi = np.zeros(grid.shape)
    rho = np.ones(grid.shape)
    for a, dj in zip(positions, degrees):
        wx, wy = X - a[0], Y - a[1]
        if cuts == "boundary":
            # rotate the arctan2 branch so each cut ray points radially
            # outward from the defect; M's sign flip then seeds a wall leg
            # running toward the near boundary instead of a chord between
            # the defects
            alpha = np.arctan2(a[1], a[0]) if np.hypot(a[0], a[1]) > 1e-12 else 0.0
            ca, sa = np.cos(alpha), np.sin(alpha)
            lx, ly = ca * wx + sa * wy, -sa * wx + ca * wy
            phi += dj * (np.arctan2(-ly, -lx) + alpha)
        else:
            phi += dj * np.arctan2(wy, wx)
        rho *= np.tanh(np.hypot(wx, wy) / params.eps)
    # constant offset: circular mean of the boundary mismatch in embedded angle
    bi, bj = grid.boundary_ij
    target = np.arctan2(bc.q[:, 1], bc.q[:, 0])
    delta = target - 2.0 * phi[bi, bj]
    c = 0.5 * np.arctan2(np.mean(np.sin(delta)), np.mean(np.cos(delta)))
    phi += c
    q = rho[..., None] * np.stack([np.cos(2 * phi), np.sin(2 * phi)], axis=-1)
    lam = np.sqrt(SQRT2 * params.beta * rho + 1.0)
    # M follows the director branch; arctan2 branch cuts supply the sign jump
    M = lam[..., None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    q *= grid.inside[..., None]
    M *= grid.inside[..., None]
    return q, M


def initialize(grid: DomainGrid, bc: BoundaryData, params: potential.CouplingParams,
               config: SolverConfig, init) -> tuple[np.ndarray, np.ndarray]:
    """Build (q, M) start fields from an init descriptor dict."""
    if init is None:
        init = {"kind": "random"}
    kind = init.get("kind", "random")
    if kind == "random":
        q, M = _init_random(grid, bc, params.beta, int(init.get("seed", config.seed)))
    elif kind == "seeded_defects":
        q, M = _init_seeded(grid, bc, params, init["positions"], init.get("degrees"),
                            init.get("cuts", "pair"))
    elif kind == "fields":
        q = np.array(init["q"], dtype=float)
        M = np.array(init["M"], dtype=float)
        if q.shape != grid.shape + (2,) or M.shape != grid.shape + (2,):
            raise InvalidInputError("warm-start fields do not match the grid")
    else:
        raise ConfigError(f"unknown init kind {kind!r}")
    scale = float(init.get("scale", 1.0))
    if scale != 1.0:
        # amplitude overshoot start: |Q| above the equilibrium value tests
        # that relaxation pulls the modulus back under the maximum principle
        q *= scale
    _apply_bc(q, M, grid, bc)
    q *= grid.inside[..., None]
    M *= grid.inside[..., None]
    return q, M


# ---------------------------------------------------------------------------
# stepping


def step(state: SolveState, config: SolverConfig) -> SolveState:
    """One forward-Euler update (returns the mutated state)."""
    rq, rm, res = el_residual(state.q, state.M, state.params, state.grid, state.bc)
    state.q -= state.dt * rq
    state.M -= state.dt * rm
    state.step += 1
    state.residual = res
    state.F_eps = discrete_energy(state.q, state.M, state.params, state.grid,
                                  state.constants)
    return state


def relax(grid: DomainGrid, bc: BoundaryData, params: potential.CouplingParams,
          config: SolverConfig | None = None, init=None) -> SolveState:
    """Drive (q, M) to a critical point; returns the converged state."""
    if config is None:
        config = SolverConfig()
    constants = potential.compute_constants(params)
    if params.eps < 2.0 * grid.h:
        flags = [f"eps={params.eps} < 2h={2 * grid.h}: vortex cores underresolved"]
    else:
        flags = []
    q, M = initialize(grid, bc, params, config, init)
    dt = config.resolve_dt(grid.h, params.eps)
    dt_floor = dt * 2.0 ** -20

    hist = []
    F = discrete_energy(q, M, params, grid, constants)
    res0 = None
    bad_streak = 0
    converged = False
    k = 0
    while k < config.max_steps:
        rq, rm, res = el_residual(q, M, params, grid, bc)
        if res0 is None:
            res0 = res
        if k % config.history_every == 0:
            hist.append((k, F, res))
        if res <= max(config.tol_residual * res0, config.abs_floor):
            converged = True
            break
        q -= dt * rq
        M -= dt * rm
        k += 1
        F_new = discrete_energy(q, M, params, grid, constants)
        if not np.isfinite(F_new):
            raise NumericError("energy diverged (non-finite)")
        if F_new > F + 1e-8 * max(abs(F), 1.0):
            bad_streak += 1
            if bad_streak >= 10:
                dt *= 0.5
                bad_streak = 0
                if dt < dt_floor:
                    raise NumericError("time step collapsed below floor: divergence")
        else:
            bad_streak = 0
        F = F_new
    _, _, res = el_residual(q, M, params, grid, bc)
    hist.append((k, F, res))
    return SolveState(q=q, M=M, step=k, F_eps=F, residual=res,
                      history=np.array(hist), grid=grid, bc=bc, params=params,
                      constants=constants, dt=dt, converged=converged, flags=flags)
