"""Defect detection, jump lines, energy measures on states."""

import numpy as np
import pytest

from ferro import diagnostics, potential, solver
from ferro.grid import Domain, build_grid, make_boundary_data

SQRT2 = np.sqrt(2.0)
DISK = {"shape": "disk", "R": 1.0}


@pytest.fixture(scope="module")
def cheap_state():
    """Converged coarse pair state, shared by the state-based tests."""
    grid = build_grid(Domain.from_config(DISK), 0.04)
    bc = make_boundary_data(grid, 1.0, 1, "mixed")
    params = potential.CouplingParams(beta=1.0, eps=0.12)
    cfg = solver.SolverConfig(max_steps=120000, tol_residual=1e-5)
    state = solver.relax(grid, bc, params, cfg,
                         {"kind": "seeded_defects",
                          "positions": [[-0.55, 0.0], [0.55, 0.0]]})
    assert state.converged
    return state


def synthetic_state(grid, q, M, beta=1.0, eps=0.05):
    params = potential.CouplingParams(beta=beta, eps=eps)
    consts = potential.compute_constants(params)
    bc = make_boundary_data(grid, beta, 0, "mixed")
    return solver.SolveState(
        q=q, M=M, step=0, F_eps=0.0, residual=1.0,
        history=np.zeros((1, 3)), grid=grid, bc=bc, params=params,
        constants=consts, dt=0.0, converged=False)


def vortex_pair_field(grid, centers, degrees, eps):
    """Modulus-matched tensor field with prescribed winding at each center."""
    phi = np.zeros(grid.shape)
    rho = np.ones(grid.shape)
    for (cx, cy), d in zip(centers, degrees):
        wx, wy = grid.X - cx, grid.Y - cy
        phi += d * np.arctan2(wy, wx)
        r = np.hypot(wx, wy)
        rho *= np.tanh(r / max(eps, 1e-9))
    return np.stack([rho * np.cos(2 * phi), rho * np.sin(2 * phi)], axis=-1)


# ---------------------------------------------------------------------------
# defect detection


def test_detects_synthetic_half_defect_pair():
    grid = build_grid(Domain.from_config(DISK), 0.02)
    eps = 0.05
    centers = [(-0.4, 0.1), (0.45, -0.2)]
    q = vortex_pair_field(grid, centers, [0.5, 0.5], eps)
    defects = diagnostics.detect_defects(q, grid, eps)
    assert len(defects) == 2
    found = sorted((d.center[0], d.center[1]) for d in defects)
    want = sorted(centers)
    for f, w in zip(found, want):
        assert np.hypot(f[0] - w[0], f[1] - w[1]) < 2 * grid.h
    assert all(d.degree == pytest.approx(0.5, abs=1e-9) for d in defects)


def test_detects_opposite_degrees():
    grid = build_grid(Domain.from_config(DISK), 0.02)
    q = vortex_pair_field(grid, [(-0.3, 0.0), (0.3, 0.0)], [0.5, -0.5], 0.05)
    defects = diagnostics.detect_defects(q, grid, 0.05)
    assert sorted(d.degree for d in defects) == [pytest.approx(-0.5),
                                                 pytest.approx(0.5)]


def test_no_defects_on_smooth_field():
    grid = build_grid(Domain.from_config(DISK), 0.02)
    phi = 0.3 * grid.X - 0.1 * grid.Y
    q = np.stack([np.cos(2 * phi), np.sin(2 * phi)], axis=-1)
    assert diagnostics.detect_defects(q, grid, 0.05) == []


def test_defect_detection_on_converged_state(cheap_state):
    st = cheap_state
    defects = diagnostics.detect_defects(st.q, st.grid, st.params.eps)
    assert len(defects) == 2
    assert all(abs(d.degree) == pytest.approx(0.5) for d in defects)
    # seeded symmetrically; relaxation keeps the pair on a diameter
    c = np.array([d.center for d in defects])
    assert np.linalg.norm(c[0] + c[1]) < 0.12


def test_jacobian_concentrates_at_defects():
    grid = build_grid(Domain.from_config(DISK), 0.02)
    eps = 0.05
    centers = [(-0.4, 0.0), (0.4, 0.0)]
    q = vortex_pair_field(grid, centers, [0.5, 0.5], eps)
    defects = diagnostics.detect_defects(q, grid, eps)
    test = np.clip(1.0 - np.hypot(grid.X, grid.Y), 0.0, None) ** 2
    test[grid.sd > -2.5 * grid.h] = 0.0
    lhs, rhs = diagnostics.jacobian_concentration(q, grid, defects, test)
    assert lhs == pytest.approx(rhs, rel=0.1)


# ---------------------------------------------------------------------------
# jump lines


def wall_state(profile, h=0.01, eps=0.04, beta=1.0):
    """Uniform vertical director with an M-wall crossing x = 0."""
    grid = build_grid(Domain.from_config(DISK), h)
    lam = np.sqrt(1.0 + SQRT2 * beta)
    # q at angle 2*phi with phi = pi/2: director n = (0, 1)
    q = np.stack([-np.ones(grid.shape), np.zeros(grid.shape)], axis=-1)
    M = profile(grid, lam, eps)
    return synthetic_state(grid, q, M, beta=beta, eps=eps), grid


# the wall is offset so its zero line avoids lattice nodes; an exact node
# zero makes the detector trace both sides of the zero column (length 2x)
WALL_X0 = 0.003137


def ising_profile(grid, lam, eps):
    f = lam * np.tanh(lam * (grid.X - WALL_X0) / (SQRT2 * eps))
    return np.stack([np.zeros(grid.shape), f], axis=-1)


def rotating_profile(grid, lam, eps):
    th = (np.pi / 2.0) * (1.0 + np.tanh((grid.X - WALL_X0) / eps))
    return lam * np.stack([np.sin(th), np.cos(th)], axis=-1)


def test_jump_set_finds_flip_wall():
    state, grid = wall_state(ising_profile)
    js = diagnostics.jump_set(state.M, state.q, grid, (), state.params.eps)
    assert js.chains
    pts = np.concatenate(js.chains)
    assert np.max(np.abs(pts[:, 0])) < 4 * grid.h
    assert js.total_length == pytest.approx(2.0, abs=0.15)
    assert all(kind == "boundary" for chain_ends in js.endpoints
               for kind in chain_ends)


def test_jump_set_catches_rotating_wall():
    """A wall where M rotates (|M| never small) must still register:
    the magnetization crosses the director line even though M.M > 0."""
    state, grid = wall_state(rotating_profile)
    js = diagnostics.jump_set(state.M, state.q, grid, (), state.params.eps)
    assert js.chains
    pts = np.concatenate(js.chains)
    assert np.max(np.abs(pts[:, 0])) < 4 * grid.h


def test_no_jump_on_uniform_well_state():
    grid = build_grid(Domain.from_config(DISK), 0.02)
    lam = np.sqrt(1.0 + SQRT2)
    q = np.stack([np.ones(grid.shape), np.zeros(grid.shape)], axis=-1)
    M = np.zeros(grid.shape + (2,))
    M[..., 0] = lam
    state = synthetic_state(grid, q, M)
    js = diagnostics.jump_set(state.M, state.q, grid, (), 0.05)
    assert not js.chains
    assert js.total_length == 0.0


def test_jump_chain_connects_defects_on_converged_state(cheap_state):
    st = cheap_state
    defects = diagnostics.detect_defects(st.q, st.grid, st.params.eps)
    js = diagnostics.jump_set(st.M, st.q, st.grid, defects, st.params.eps)
    assert len(js.chains) == 1
    assert sorted(js.endpoints[0]) == ["defect", "defect"]
    gap = np.linalg.norm(np.array([d.center for d in defects])[0]
                         - np.array([d.center for d in defects])[1])
    assert js.total_length == pytest.approx(gap, rel=0.25)


# ---------------------------------------------------------------------------
# energy measures


def test_densities_integrate_to_energy_parts(cheap_state):
    st = cheap_state
    mu, nu, zeta = diagnostics.energy_densities(
        st.q, st.M, st.params, st.grid, st.constants)
    h2 = st.grid.h ** 2
    parts = solver.energy(st.q, st.M, st.params, st.grid, st.constants)
    # node-centered density vs edge-based energy: quadratures differ at
    # O(h^2) with singular cores, so only a loose match is exact here
    assert np.sum(mu) * h2 * abs(np.log(st.params.eps)) == pytest.approx(
        parts["F_eps"], rel=5e-3)
    assert np.all(nu >= -1e-12)
    assert np.all(zeta >= -1e-12)
    # zeta only differs from the vector energy by the core mask
    assert np.sum(zeta) * h2 <= parts["E_eps"] + 1e-6


def test_line_tension_on_synthetic_wall():
    """The tube estimator reads off c_beta on an exact 1D wall profile."""
    state, grid = wall_state(ising_profile, h=0.01, eps=0.04)
    js = diagnostics.jump_set(state.M, state.q, grid, (), state.params.eps)
    out = diagnostics.line_tension(state, state.params, grid, [], js)
    assert out["measurable"]
    assert out["ratio"] == pytest.approx(1.0, abs=0.08)


def test_line_tension_unmeasurable_for_short_stub():
    """Core clipping can leave too little wall to average over."""
    state, grid = wall_state(ising_profile, h=0.02, eps=0.2)
    js = diagnostics.jump_set(state.M, state.q, grid, (), state.params.eps)
    fake = diagnostics.Defect(center=np.array([WALL_X0, 0.0]), degree=0.5,
                              core_radius=0.2, local_energy=0.0, flags=[])
    out = diagnostics.line_tension(state, state.params, grid, [fake], js)
    assert not out["measurable"]
    assert out["ratio"] is None


def test_nu_mass_ratio_fields(cheap_state):
    st = cheap_state
    defects = diagnostics.detect_defects(st.q, st.grid, st.params.eps)
    js = diagnostics.jump_set(st.M, st.q, st.grid, defects, st.params.eps)
    out = diagnostics.nu_mass_vs_length(st, st.params, st.grid, defects, js)
    mass, scaled_len = out[0], out[1]
    assert mass > 0 and scaled_len > 0
    c_beta = potential.c_beta(st.params.beta)
    assert scaled_len == pytest.approx(c_beta * js.total_length, rel=1e-9)


def test_pohozaev_residual_small_on_critical_point(cheap_state):
    st = cheap_state
    res = diagnostics.pohozaev_residual(st, st.params, (0.0, 0.0), 0.35)
    assert res < 0.1
    # a non-critical field violates the balance by an O(1) amount
    bad = synthetic_state(st.grid, st.q[::-1].copy(), st.M.copy())
    res_bad = diagnostics.pohozaev_residual(bad, st.params, (0.0, 0.0), 0.35)
    assert res_bad > res * 5


def test_zeta_profile_shape(cheap_state):
    st = cheap_state
    prof = diagnostics.zeta_profile(st, st.params, (0.0, 0.0), 0.4)
    assert prof.normalizer == "r"
    assert len(prof.radii) == len(prof.values)
    assert np.all(np.diff(prof.radii) > 0)
    assert np.all(prof.values >= 0)


def test_hopf_and_dbar_fields(cheap_state):
    st = cheap_state
    om_q, om_m = diagnostics.hopf_fields(st, st.params, st.grid)
    assert om_q.shape == st.grid.shape and np.iscomplexobj(om_q)
    db = diagnostics.dbar_field(om_q, st.grid)
    assert db.shape == st.grid.shape
    assert np.all(np.isfinite(db[st.grid.inside & (st.grid.sd < -0.1)]))


def test_discrepancy_reports_signed_mass(cheap_state):
    st = cheap_state
    val = diagnostics.discrepancy(st, st.params, (0.0, 0.0), 0.3)
    assert np.isfinite(val)
