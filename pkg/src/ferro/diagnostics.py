"""Singular-structure diagnostics for relaxed states.

Converged fields are turned into the objects the asymptotic theory speaks
about: point defects of the tensor field with half-integer degrees, the
magnetization jump set, energy measures (mu, nu, zeta) and their ball
masses, the Pohozaev ball identity, Jacobian concentration, and Hopf
differentials.

Conventions: defect cores are connected components of the clearing set
{|Q| < 1/2}; components closer than 4h are merged; degrees are measured on
circles of radius core_radius + 3h.  Jump edges are lattice edges where the
tensor agrees (Q(x).Q(y) > 0) but the director-relative magnetization
component flips sign (see _jump_edges for why the raw M(x).M(y) < 0 test
misses wide walls).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import potential, qtensor
from .errors import InvalidInputError
from .grid import DomainGrid, ball_integral, circle_integral, gradient
from .solver import SolveState

SQRT2 = np.sqrt(2.0)


@dataclass
class Defect:
    """One clearing-set component: location, topological charge, core data."""
    center: np.ndarray
    degree: float | None
    core_radius: float
    local_energy: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"center": [float(self.center[0]), float(self.center[1])],
                "degree": self.degree,
                "core_radius": float(self.core_radius),
                "local_energy": float(self.local_energy)
                if np.isfinite(self.local_energy) else None,
                "flags": list(self.flags)}


@dataclass
class JumpSet:
    """Polyline chains of magnetization sign flips."""
    chains: list                      # list of (n_i, 2) arrays
    total_length: float
    endpoints: list                   # per chain: (kind_start, kind_end)

    def to_dict(self) -> dict:
        return {"chains": [[[float(x), float(y)] for x, y in c] for c in self.chains],
                "total_length": float(self.total_length),
                "endpoints": [list(e) for e in self.endpoints]}


@dataclass
class MeasureProfile:
    """Ball masses of a measure on a radius ladder."""
    center: np.ndarray
    radii: np.ndarray
    values: np.ndarray                # measure(B_r), nondecreasing
    normalizer: str                   # "r", "2r", or "logeps"

    def normalized(self, eps: float | None = None) -> np.ndarray:
        if self.normalizer == "r":
            return self.values / self.radii
        if self.normalizer == "2r":
            return self.values / (2.0 * self.radii)
        if self.normalizer == "logeps":
            if eps is None:
                raise InvalidInputError("logeps normalizer needs eps")
            return self.values / abs(np.log(eps))
        raise InvalidInputError(f"unknown normalizer {self.normalizer!r}")


# ---------------------------------------------------------------------------
# energy densities


def energy_densities(q: np.ndarray, M: np.ndarray, params, grid: DomainGrid,
                     constants=None):
    """Pointwise densities (mu, nu, zeta); zero outside the inside region.

    mu = (1/|log eps|)(1/2|grad Q|^2 + eps/2|grad M|^2 + f/eps^2)
    nu = eps/2 |grad M|^2 + f/eps^2
    zeta = V/eps on {|Q| >= 1/2}, masked to zero elsewhere (the vector
    potential has no preferred well to measure against inside cores).
    """
    if constants is None:
        constants = potential.compute_constants(params)
    eps = params.eps
    qx, qy = gradient(q, grid)
    mx, my = gradient(M, grid)
    gq = 0.5 * np.sum(qx ** 2 + qy ** 2, axis=-1)
    gm = 0.5 * eps * np.sum(mx ** 2 + my ** 2, axis=-1)
    f = potential.f_eps(q, M, params, constants, check=False) / eps ** 2
    ins = grid.inside
    nu = (gm + f) * ins
    mu = (gq + gm + f) * ins / abs(np.log(eps))
    rho = np.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2)
    clear = ins & (rho >= 0.5)
    zeta = np.zeros(grid.shape)
    if np.any(clear):
        zeta[clear] = potential.V(q[clear], M[clear], params.beta) / eps
    return mu, nu, zeta


# ---------------------------------------------------------------------------
# defects


def _component_stats(rho, grid, labels, lab):
    ii, jj = np.nonzero(labels == lab)
    k = np.argmin(rho[ii, jj])
    center = np.array([grid.x[ii[k]], grid.y[jj[k]]])
    pts = np.stack([grid.x[ii], grid.y[jj]], axis=1)
    rr = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
    core_radius = float(np.max(rr)) + 0.5 * grid.h
    touches = bool(np.any(grid.band[ii, jj]))
    return center, core_radius, touches, list(zip(ii, jj))


def detect_defects(q: np.ndarray, grid: DomainGrid, eps: float,
                   mu: np.ndarray | None = None) -> list:
    """Locate and classify the components of the clearing set {|Q| < 1/2}.

    Components closer than 4h merge into one defect.  The degree loop runs at
    core_radius + 3h (with two fallback radii); loops that cannot be closed
    inside {|Q| >= 1/2} leave the defect flagged 'unresolved'.  Clean
    degree-0 components are dropped (not topological).  Pass mu to record the
    6*eps-ball energy of each defect.
    """
    rho = np.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2)
    mask = grid.inside & (rho < 0.5)
    if not np.any(mask):
        return []
    labels, nlab = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    comps = [_component_stats(rho, grid, labels, lab) for lab in range(1, nlab + 1)]

    # merge components with nearby centers
    merged = []
    used = [False] * len(comps)
    for i in range(len(comps)):
        if used[i]:
            continue
        group = [i]
        used[i] = True
        changed = True
        while changed:
            changed = False
            for j in range(len(comps)):
                if used[j]:
                    continue
                if any(np.hypot(*(comps[g][0] - comps[j][0])) < 4 * grid.h
                       for g in group):
                    group.append(j)
                    used[j] = True
                    changed = True
        merged.append(group)

    defects = []
    for group in merged:
        nodes = [n for g in group for n in comps[g][3]]
        ii = np.array([n[0] for n in nodes])
        jj = np.array([n[1] for n in nodes])
        k = np.argmin(rho[ii, jj])
        center = np.array([grid.x[ii[k]], grid.y[jj[k]]])
        rr = np.hypot(grid.x[ii] - center[0], grid.y[jj] - center[1])
        core_radius = float(np.max(rr)) + 0.5 * grid.h
        touches = any(comps[g][2] for g in group)
        flags = []
        if touches:
            flags.append("touches-boundary")
        degree = None
        for bump in (3, 4, 5):
            r_loop = core_radius + bump * grid.h
            try:
                loop_pts = qtensor.circle_loop(center, r_loop,
                                               n_samples=max(96, int(24 * r_loop / grid.h)))
                vals = grid.interp(q, loop_pts)
                degree = qtensor.loop_degree(
                    qtensor.LoopSample(points=loop_pts, q=vals))
                break
            except Exception:
                degree = None
        if degree is None:
            flags.append("unresolved")
        local = np.nan
        if mu is not None:
            try:
                local = ball_integral(mu, grid, center, 6.0 * eps)
            except InvalidInputError:
                flags.append("energy-ball-exits-domain")
        if degree == 0.0 and not flags:
            continue
        defects.append(Defect(center=center, degree=degree,
                              core_radius=core_radius, local_energy=local,
                              flags=flags))
    defects.sort(key=lambda d: (d.center[0], d.center[1]))
    return defects


# ---------------------------------------------------------------------------
# jump set


def _jump_edges(M, q, grid):
    """Edges where the sign of M relative to the director flips.

    The director component u1 = M.n is compared across each edge after
    aligning the two (sign-ambiguous) director choices, so the test is

        (M.n)(x) * (M.n)(y) * sign(n(x).n(y)) < 0,

    which is invariant under n -> -n at either node and needs no global
    orientation (none exists around half-degree defects).  Walls are of
    Neel type in general: M keeps a nonzero transverse component through
    the wall core, so a raw M(x).M(y) < 0 test misses them whenever that
    component dominates the captured flip across a single edge.  Frames
    are compared only where Q(x).Q(y) > 0.  A node sitting exactly on the
    wall (u1 = 0) fires both of its crossing edges.
    """
    # director from the half-angle branch; arctan2(0, 0) = 0 at degenerate
    # or exterior nodes is harmless since those edges fail the Q.Q > 0 gate
    phi = 0.5 * np.arctan2(q[..., 1], q[..., 0])
    n = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    u1 = np.sum(M * n, axis=-1)

    def edge_mask(sl_a, sl_b, edge_inside):
        qq = np.sum(q[sl_a] * q[sl_b], axis=-1)
        align = np.sum(n[sl_a] * n[sl_b], axis=-1)
        prod = u1[sl_a] * u1[sl_b] * np.sign(align)
        zero_cross = ((u1[sl_a] == 0) ^ (u1[sl_b] == 0))
        return edge_inside & (qq > 0) & ((prod < 0) | (zero_cross & (prod == 0)))

    jx = edge_mask(np.s_[1:, :], np.s_[:-1, :], grid.edge_x)
    jy = edge_mask(np.s_[:, 1:], np.s_[:, :-1], grid.edge_y)
    return jx, jy


def jump_set(M: np.ndarray, q: np.ndarray, grid: DomainGrid,
             defects=(), eps: float = 0.0) -> JumpSet:
    """Trace the magnetization jump lines as polyline chains.

    Jump-edge midpoints become graph nodes; midpoints within 1.05*h connect.
    Endpoints are classified 'defect' (within 3*eps of a detected defect
    center), 'boundary' (within h of the domain boundary), or 'open'.
    """
    jx, jy = _jump_edges(M, q, grid)
    mids = []
    xi, xj = np.nonzero(jx)
    for i, j in zip(xi, xj):
        mids.append((grid.x[i] + 0.5 * grid.h, grid.y[j]))
    yi, yj = np.nonzero(jy)
    for i, j in zip(yi, yj):
        mids.append((grid.x[i], grid.y[j] + 0.5 * grid.h))
    if not mids:
        return JumpSet(chains=[], total_length=0.0, endpoints=[])
    pts = np.array(mids)
    n = pts.shape[0]
    # adjacency among midpoints (neighboring cells share midpoints within ~h)
    reach = 1.05 * grid.h
    adj = [[] for _ in range(n)]
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    sorted_pts = pts[order]
    for a in range(n):
        pa = sorted_pts[a]
        b = a + 1
        while b < n and sorted_pts[b, 0] - pa[0] <= reach:
            if abs(sorted_pts[b, 1] - pa[1]) <= reach:
                if np.hypot(*(sorted_pts[b] - pa)) <= reach:
                    adj[order[a]].append(order[b])
                    adj[order[b]].append(order[a])
            b += 1

    visited = np.zeros(n, dtype=bool)
    chains = []
    # walk each connected component from an endpoint (or anywhere on cycles)
    comp_of = -np.ones(n, dtype=int)
    ncomp = 0
    for s in range(n):
        if comp_of[s] >= 0:
            continue
        stack = [s]
        comp_of[s] = ncomp
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if comp_of[v] < 0:
                    comp_of[v] = ncomp
                    stack.append(v)
        ncomp += 1
    for c in range(ncomp):
        members = np.nonzero(comp_of == c)[0]
        ends = [m for m in members if len(adj[m]) <= 1]
        while True:
            start = None
            for m in ends:
                if not visited[m]:
                    start = m
                    break
            if start is None:
                for m in members:
                    if not visited[m]:
                        start = m
                        break
            if start is None:
                break
            path = [start]
            visited[start] = True
            cur = start
            prev_dir = None
            while True:
                cands = [v for v in adj[cur] if not visited[v]]
                if not cands:
                    break
                if prev_dir is not None and len(cands) > 1:
                    # prefer the straightest continuation
                    cands.sort(key=lambda v: -np.dot(
                        pts[v] - pts[cur], prev_dir))
                nxt = cands[0]
                prev_dir = pts[nxt] - pts[cur]
                prev_dir = prev_dir / max(np.hypot(*prev_dir), 1e-30)
                visited[nxt] = True
                path.append(nxt)
                cur = nxt
            if len(path) >= 2:
                chains.append(pts[path])

    total = sum(float(np.sum(np.hypot(*(c[1:] - c[:-1]).T))) for c in chains)
    endpoints = []
    centers = [d.center for d in defects]
    for c in chains:
        kinds = []
        for e in (c[0], c[-1]):
            kind = "open"
            if centers and eps > 0:
                dmin = min(np.hypot(*(e - a)) for a in centers)
                if dmin <= 3.0 * eps:
                    kind = "defect"
            if kind == "open" and abs(grid.domain.signed_distance(e)) <= grid.h:
                kind = "boundary"
            kinds.append(kind)
        endpoints.append(tuple(kinds))
    return JumpSet(chains=chains, total_length=total, endpoints=endpoints)


# ---------------------------------------------------------------------------
# integral identities and measures


def pohozaev_residual(state: SolveState, params, x0, R: float,
                      relative: bool = True) -> float:
    """Ball-identity mismatch for critical points.

    (2/eps^2) int_B f + (R/2) oint (|dQ/dnu|^2 + eps|dM/dnu|^2)
        = (R/2) oint (|dQ/dtau|^2 + eps|dM/dtau|^2 + (2/eps^2) f).

    Returns |LHS - RHS| / |RHS| by default (set relative=False for the
    absolute mismatch).  Exact only for solutions; finite-h quadrature makes
    it first-order small on converged states.
    """
    grid = state.grid
    eps = params.eps
    f = potential.f_eps(state.q, state.M, params, state.constants, check=False)
    f = f * grid.inside
    fint = ball_integral(f, grid, x0, R)
    qx, qy = gradient(state.q, grid)
    mx, my = gradient(state.M, grid)
    n = max(128, 8 * int(np.ceil(2 * np.pi * R / grid.h)))
    th = 2 * np.pi * np.arange(n) / n
    nu = np.stack([np.cos(th), np.sin(th)], axis=1)
    pts = np.asarray(x0, dtype=float) + R * nu
    qx_s, qy_s = grid.interp(qx, pts), grid.interp(qy, pts)
    mx_s, my_s = grid.interp(mx, pts), grid.interp(my, pts)
    f_s = grid.interp(f, pts)

    def _dir2(gx, gy, d):
        return np.sum((gx * d[:, 0:1] + gy * d[:, 1:2]) ** 2, axis=-1)

    tau = np.stack([-nu[:, 1], nu[:, 0]], axis=1)
    ds = 2 * np.pi * R / n
    lhs = 2.0 / eps ** 2 * fint + 0.5 * R * ds * np.sum(
        _dir2(qx_s, qy_s, nu) + eps * _dir2(mx_s, my_s, nu))
    rhs = 0.5 * R * ds * np.sum(
        _dir2(qx_s, qy_s, tau) + eps * _dir2(mx_s, my_s, tau)
        + (2.0 / eps ** 2) * f_s)
    if relative:
        return float(abs(lhs - rhs) / (abs(rhs) + 1e-300))
    return float(abs(lhs - rhs))


def zeta_profile(state: SolveState, params, x0, r_max: float,
                 n_radii: int = 24, r_min: float | None = None) -> MeasureProfile:
    """Ball masses of zeta on a radius ladder, normalized later by r."""
    grid = state.grid
    _, _, zeta = energy_densities(state.q, state.M, params, grid, state.constants)
    if r_min is None:
        r_min = 2.0 * grid.h
    radii = np.linspace(r_min, r_max, n_radii)
    vals = np.array([ball_integral(zeta, grid, x0, r) for r in radii])
    return MeasureProfile(center=np.asarray(x0, dtype=float), radii=radii,
                          values=vals, normalizer="r")


def mu_profile(state: SolveState, params, x0, r_max: float,
               n_radii: int = 16) -> MeasureProfile:
    grid = state.grid
    mu, _, _ = energy_densities(state.q, state.M, params, grid, state.constants)
    radii = np.linspace(2 * grid.h, r_max, n_radii)
    vals = np.array([ball_integral(mu, grid, x0, r) for r in radii])
    return MeasureProfile(center=np.asarray(x0, dtype=float), radii=radii,
                          values=vals, normalizer="logeps")


def jacobian_field(q: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """Distributional Jacobian density 1/2 curl(j) = 1/2 (d1 q x d2 q)."""
    qx, qy = gradient(q, grid)
    return 0.5 * (qx[..., 0] * qy[..., 1] - qx[..., 1] * qy[..., 0]) * grid.inside


def prejacobian_field(q: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """j(Q) = 1/2 Q x grad Q; equals rho^2 grad(phi) in polar form."""
    qx, qy = gradient(q, grid)
    j1 = 0.5 * (q[..., 0] * qx[..., 1] - q[..., 1] * qx[..., 0])
    j2 = 0.5 * (q[..., 0] * qy[..., 1] - q[..., 1] * qy[..., 0])
    return np.stack([j1, j2], axis=-1) * grid.inside[..., None]


def jacobian_concentration(q: np.ndarray, grid: DomainGrid, defects,
                           test: np.ndarray):
    """(int test * J(Q), pi * sum_j d_j test(a_j)) for a compactly supported test."""
    near_bd = grid.inside & (grid.sd > -2.0 * grid.h)
    if np.any(np.abs(test[near_bd]) > 1e-12):
        raise InvalidInputError("test field must vanish within 2h of the boundary")
    J = jacobian_field(q, grid)
    lhs = float(np.sum(J * test) * grid.h ** 2)
    rhs = 0.0
    for d in defects:
        if d.degree is None:
            continue
        rhs += np.pi * d.degree * float(grid.interp(test, d.center))
    return lhs, rhs


def hopf_fields(state: SolveState, params, grid: DomainGrid):
    """Hopf differentials (omega_Q, eps * omega_M) as complex node fields."""
    qx, qy = gradient(state.q, grid)
    mx, my = gradient(state.M, grid)

    def _omega(gx, gy):
        return (np.sum(gx ** 2, axis=-1) - np.sum(gy ** 2, axis=-1)
                - 2j * np.sum(gx * gy, axis=-1))

    return _omega(qx, qy) * grid.inside, params.eps * _omega(mx, my) * grid.inside


def dbar_field(omega: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """Discrete d/d(zbar) = (d/dx + i d/dy)/2 of a complex field."""
    re_x, re_y = gradient(omega.real, grid)
    im_x, im_y = gradient(omega.imag, grid)
    return 0.5 * ((re_x + 1j * im_x) + 1j * (re_y + 1j * im_y))


def discrepancy(state: SolveState, params, x0, r: float) -> float:
    """int_B (f/eps^2 - eps/2 |grad M|^2); indefinite sign, reported as-is."""
    grid = state.grid
    eps = params.eps
    f = potential.f_eps(state.q, state.M, params, state.constants, check=False)
    mx, my = gradient(state.M, grid)
    dens = (f / eps ** 2 - 0.5 * eps * np.sum(mx ** 2 + my ** 2, axis=-1))
    return float(ball_integral(dens * grid.inside, grid, x0, r))


def nu_mass_vs_length(state: SolveState, params, grid: DomainGrid,
                      defects, jumpset: JumpSet):
    """(nu mass outside 6*eps defect balls, c_beta * jump length).

    A global-mass comparison: the exclusion radius and the length are
    deliberately not matched (the ratio of the two values approaches 1 only
    by extrapolation over an eps sweep).  For a pointwise line-tension
    estimate use line_tension.
    """
    _, nu, _ = energy_densities(state.q, state.M, params, grid, state.constants)
    eps = params.eps
    away = np.ones(grid.shape, dtype=bool)
    for d in defects:
        away &= np.hypot(grid.X - d.center[0], grid.Y - d.center[1]) > 6.0 * eps
    mass = float(np.sum(nu * away * grid.inside) * grid.h ** 2)
    return mass, potential.c_beta(params.beta) * jumpset.total_length


def line_tension(state: SolveState, params, grid: DomainGrid,
                 defects, jumpset: JumpSet,
                 r_core: float | None = None,
                 r_tube: float | None = None) -> dict:
    """Estimate the wall energy per unit length against c_beta.

    The nu mass is collected in a tube of radius r_tube (default 4*eps)
    around the jump chains, outside r_core balls (default 3*eps) at the
    defects, and divided by the chain length clipped to the same region.
    Localizing to the tube keeps diffuse far-field contributions (director
    rotation, bulk potential residue, both vanishing with eps) out of a
    per-length measurement.  The estimate is flagged unmeasurable when the
    clipped length is shorter than max(6*eps, 8*h): a wall sampled over
    fewer than a few core diameters has no meaningful average tension
    (defect-end and boundary-foot structures dominate short stubs).
    """
    eps = params.eps
    if r_core is None:
        r_core = 3.0 * eps
    if r_tube is None:
        r_tube = 4.0 * eps
    out = {"mass": 0.0, "length": 0.0, "density": None, "ratio": None,
           "r_core": float(r_core), "r_tube": float(r_tube),
           "measurable": False}
    if not jumpset.chains:
        return out
    centers = [d.center for d in defects]
    length = 0.0
    for c in jumpset.chains:
        for a, b in zip(c[:-1], c[1:]):
            m = 0.5 * (a + b)
            if all(np.hypot(m[0] - c0[0], m[1] - c0[1]) > r_core
                   for c0 in centers):
                length += float(np.hypot(b[0] - a[0], b[1] - a[1]))
    out["length"] = length
    if length < max(6.0 * eps, 8.0 * grid.h):
        return out
    _, nu, _ = energy_densities(state.q, state.M, params, grid, state.constants)
    pts = np.concatenate(list(jumpset.chains))
    tree = cKDTree(pts)
    nodes = np.stack([grid.X.ravel(), grid.Y.ravel()], axis=1)
    dist = tree.query(nodes)[0].reshape(grid.shape)
    sel = grid.inside & (dist <= r_tube)
    for c0 in centers:
        sel &= np.hypot(grid.X - c0[0], grid.Y - c0[1]) > r_core
    mass = float(np.sum(nu * sel) * grid.h ** 2)
    density = mass / length
    out.update(mass=mass, density=density, measurable=True,
               ratio=density / potential.c_beta(params.beta))
    return out
