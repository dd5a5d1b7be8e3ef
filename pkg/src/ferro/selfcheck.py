"""Fast invariant suite behind the selftest subcommand.

Each check re-derives its expectation independently of the implementation
path it probes (brute-force minimization, enumeration, synthetic fields with
analytic gradients), returning a record {name, value, tol, pass}.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import geometry, potential, qtensor
from .grid import Domain, build_grid, make_boundary_data, boundary_loop_degree

SQRT2 = np.sqrt(2.0)


def _record(name: str, value: float, tol: float) -> dict:
    return {"name": name, "value": float(value), "tol": float(tol),
            "pass": bool(value <= tol)}


def check_potential_identities(n: int = 10_000, seed: int = 7) -> list:
    rng = np.random.default_rng(seed)
    beta = 1.0
    eps = 0.1
    params = potential.CouplingParams(beta=beta, eps=eps)
    consts = potential.compute_constants(params)
    q = rng.uniform(-1.5, 1.5, (n, 2))
    q[np.hypot(q[:, 0], q[:, 1]) < 1e-6] += 0.5
    M = rng.uniform(-2.0, 2.0, (n, 2))
    res = potential.decompose_check(q, M, params, consts)
    out = [_record("identity_f_ell", res["f_ell"], 1e-9),
           _record("identity_fgh", res["fgh"], 1e-9)]
    v1 = potential.V(q, M, beta)
    v2 = potential.V_wells_form(q, M, beta)
    out.append(_record("identity_V_wells_form", np.max(np.abs(v1 - v2)), 1e-9))
    return out


def check_polar_gradient_identities(n: int = 10_000, seed: int = 11) -> list:
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.1, 2.0, n)
    phi = rng.uniform(-6.0, 6.0, n)
    drho = rng.uniform(-3.0, 3.0, (n, 2))
    dphi = rng.uniform(-3.0, 3.0, (n, 2))
    c, s = np.cos(2 * phi), np.sin(2 * phi)
    e = np.stack([c, s], axis=1)
    eperp = np.stack([-s, c], axis=1)
    q = rho[:, None] * e
    dq = [drho[:, k:k + 1] * e + 2 * rho[:, None] * dphi[:, k:k + 1] * eperp
          for k in (0, 1)]
    lhs = sum(np.sum(d ** 2, axis=1) for d in dq)
    rhs = np.sum(drho ** 2, axis=1) + 4 * rho ** 2 * np.sum(dphi ** 2, axis=1)
    rec1 = _record("identity_grad_polar", np.max(np.abs(lhs - rhs)), 1e-9)
    j = qtensor.prejacobian_pointwise(q, dq[0], dq[1])
    rho2 = np.sum(q ** 2, axis=1)
    grad_rho2 = np.sum(drho ** 2, axis=1)
    lhs2 = rho2 * lhs
    rhs2 = rho2 * grad_rho2 + 4 * np.sum(j ** 2, axis=1)
    rec2 = _record("identity_prejacobian_modulus",
                   np.max(np.abs(lhs2 - rhs2)), 1e-9)
    return [rec1, rec2]


def check_kappa_grid(beta: float = 1.0, eps: float = 0.1) -> dict:
    params = potential.CouplingParams(beta=beta, eps=eps)
    ke = potential.kappa_eps(params)
    rho = np.linspace(0.5, 2.0, 901)
    m = np.linspace(0.5, 2.5, 901)
    R, Mm = np.meshgrid(rho, m, indexing="ij")
    g = (0.25 * (1 - R ** 2) ** 2 + 0.25 * eps * (1 - Mm ** 2) ** 2
         - eps * beta * R * Mm ** 2 / SQRT2)
    i, j = np.unravel_index(np.argmin(g), g.shape)
    # quadratic refinement around the grid minimum in both axes
    from scipy.optimize import minimize

    def fn(z):
        return (0.25 * (1 - z[0] ** 2) ** 2 + 0.25 * eps * (1 - z[1] ** 2) ** 2
                - eps * beta * z[0] * z[1] ** 2 / SQRT2)

    res = minimize(fn, np.array([rho[i], m[j]]), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14})
    return _record("kappa_eps_vs_grid", abs(ke + res.fun), 1e-6)


def check_wells(n: int = 10, seed: int = 3) -> dict:
    rng = np.random.default_rng(seed)
    beta = 1.0
    worst = 0.0
    for _ in range(n):
        rho = rng.uniform(0.3, 2.0)
        ang = rng.uniform(0, 2 * np.pi)
        q = rho * np.array([np.cos(ang), np.sin(ang)])
        Mp, Mm = potential.wells(q, beta)
        ms = np.linspace(-2.5, 2.5, 301)
        M1, M2 = np.meshgrid(ms, ms, indexing="ij")
        Mgrid = np.stack([M1, M2], axis=-1)
        ell = potential.ell(q, Mgrid, beta)
        i, j = np.unravel_index(np.argmin(ell), ell.shape)
        from scipy.optimize import minimize
        res = minimize(lambda z: float(potential.ell(q, z, beta)),
                       np.array([ms[i], ms[j]]), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14})
        worst = max(worst, min(np.hypot(*(res.x - Mp)), np.hypot(*(res.x - Mm))))
    return _record("wells_vs_bruteforce", worst, 3e-3)


def check_s_star() -> dict:
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        for eps in (0.2, 0.1, 0.05):
            s = potential.s_star(beta, eps)
            roots = np.roots([1.0, 0.0, -(1.0 + beta ** 2 * eps),
                              -beta * eps / SQRT2])
            ref = float(np.max(roots[np.abs(roots.imag) < 1e-10].real))
            worst = max(worst, abs(s - ref))
    return _record("s_star_vs_cubic_roots", worst, 1e-10)


def _brute_connection(points, domain):
    """Exhaustive minimum over pairings and boundary singletons."""
    p = len(points)
    frame = domain.boundary_frame(points)
    feet = np.atleast_2d(frame["foot"])

    def cost(items):
        total = 0.0
        for it in items:
            if len(it) == 2:
                a, b = points[it[0]], points[it[1]]
            else:
                a, b = points[it[0]], feet[it[0]]
            if not geometry._segment_inside(domain, a, b):
                return np.inf
            total += np.hypot(*(b - a))
        return total

    best = np.inf
    idx = list(range(p))
    for r in range(0, p + 1, 2):
        for paired in itertools.combinations(idx, r):
            rest = [i for i in idx if i not in paired]
            for matching in _all_matchings(list(paired)):
                c = cost(matching + [(i,) for i in rest])
                best = min(best, c)
    return best


def _all_matchings(items):
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for k, other in enumerate(rest):
        for sub in _all_matchings(rest[:k] + rest[k + 1:]):
            out.append([(first, other)] + sub)
    return out


def check_connection_mini(n_cases: int = 20, seed: int = 5) -> dict:
    rng = np.random.default_rng(seed)
    domain = Domain.disk(radius=1.0)
    worst = 0.0
    for _ in range(n_cases):
        while True:
            pts = rng.uniform(-0.8, 0.8, (4, 2))
            if np.all(domain.signed_distance(pts) < -0.05):
                d = min(np.hypot(*(pts[i] - pts[k]))
                        for i in range(4) for k in range(i + 1, 4))
                if d > 1e-3:
                    break
        conn = geometry.minimal_connection(
            geometry.ConnectionProblem(points=pts, domain=domain))
        ref = _brute_connection(pts, domain)
        worst = max(worst, abs(conn.total_length - ref))
    return _record("minimal_connection_vs_enumeration", worst, 1e-12)


def check_boundary_winding() -> dict:
    domain = Domain.disk(radius=1.0)
    grid = build_grid(domain, 0.05)
    worst = 0.0
    for d in (0, 1, 2):
        bc = make_boundary_data(grid, 1.0, d, "mixed")
        got = boundary_loop_degree(grid, bc.q)
        worst = max(worst, abs(got - d))
    return _record("boundary_datum_winding", worst, 1e-12)


def check_half_vortex_degree() -> dict:
    def q_field(pts):
        th = np.arctan2(pts[:, 1], pts[:, 0])
        r = np.hypot(pts[:, 0], pts[:, 1])
        rho = np.tanh(r / 0.1)
        return rho[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)

    loop_pts = qtensor.circle_loop(np.zeros(2), 0.5, 256)
    loop = qtensor.LoopSample(points=loop_pts, q=q_field(loop_pts))
    deg = qtensor.loop_degree(loop)
    return _record("half_vortex_loop_degree", abs(deg - 0.5), 1e-12)


def run_all() -> list:
    checks = []
    checks.extend(check_potential_identities())
    checks.extend(check_polar_gradient_identities())
    checks.append(check_kappa_grid())
    checks.append(check_wells())
    checks.append(check_s_star())
    checks.append(check_connection_mini())
    checks.append(check_boundary_winding())
    checks.append(check_half_vortex_degree())
    return checks
