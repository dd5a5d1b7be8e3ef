"""Potential layer: constants, exact splittings, wells, and 1D oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from ferro import potential
from ferro.errors import InvalidInputError

SQRT2 = np.sqrt(2.0)


def random_fields(rng, n, qmax=2.5, mmax=2.5):
    q = rng.uniform(-qmax, qmax, size=(n, 2))
    M = rng.uniform(-mmax, mmax, size=(n, 2))
    return q, M


# ---------------------------------------------------------------------------
# closed-form constants and their independent oracles


def test_kappa_star_closed_form():
    for beta in (0.3, 0.5, 1.0, 2.0, 5.0):
        expect = beta * (SQRT2 * beta + 1.0) / (2.0 * SQRT2)
        assert potential.kappa_star(beta) == pytest.approx(expect, abs=1e-14)


def test_c_beta_closed_form_values():
    assert potential.c_beta(1.0) == pytest.approx(3.5366, abs=5e-4)
    assert potential.c_beta(2.0) == pytest.approx(
        (2.0 * SQRT2 / 3.0) * (2.0 * SQRT2 + 1.0) ** 1.5, abs=1e-12)
    assert potential.c_beta(0.0) == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-12)


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.0])
def test_c_beta_equals_heteroclinic_action(beta):
    """c_beta is the 1D action of the M-flip across a wall at fixed Q.

    With the tensor held at modulus 1 and director m, the two wells are
    +/- lambda m_perp and the minimal path runs straight through M = 0;
    the action integral of sqrt(2 V) along it must equal c_beta exactly.
    """
    lam = np.sqrt(1.0 + SQRT2 * beta)
    q = np.array([1.0, 0.0])
    mp, _ = potential.wells(q, beta)
    u = mp / np.linalg.norm(mp)       # unit vector through both wells

    def speed(f):
        v = potential.V(q, f * u, beta)
        return np.sqrt(max(2.0 * float(v), 0.0))

    action, err = integrate.quad(speed, -lam, lam, limit=200)
    assert err < 1e-9
    assert action == pytest.approx(potential.c_beta(beta), rel=1e-8)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_s_star_is_root_of_cubic(beta):
    for eps in (0.2, 0.1, 0.05, 0.01):
        s = potential.s_star(beta, eps)
        roots = np.roots([1.0, 0.0, -(1.0 + beta ** 2 * eps),
                          -(beta / SQRT2) * eps])
        real = np.real(roots[np.abs(np.imag(roots)) < 1e-12])
        assert s == pytest.approx(np.max(real), abs=1e-12)
        assert s > 1.0


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_s_star_expansion_constant_stable(beta):
    """s_* = 1 + eps*kappa_* + O(eps^2) with a stable quadratic constant."""
    ks = potential.kappa_star(beta)
    ladder = np.array([0.08, 0.04, 0.02, 0.01])
    C = np.array([abs(potential.s_star(beta, e) - 1.0 - e * ks) / e ** 2
                  for e in ladder])
    assert np.all(C < 10.0 * max(1.0, beta ** 4))
    assert C.max() - C.min() < 0.35 * C.max()


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_kappa_eps_matches_grid_oracle(beta):
    """kappa_eps equals a brute-force maximization in reduced coordinates.

    The coupling is extremal with M parallel to an eigenvector of Q, so
    kappa_eps = max over (rho, t) of eps*beta*rho*t/sqrt(2)
    - (1-rho^2)^2/4 - eps*(1-t)^2/4 with t = |M|^2.
    """
    eps = 0.05
    params = potential.CouplingParams(beta=beta, eps=eps)
    rho = np.linspace(0.0, 3.0, 1201)[:, None]
    t = np.linspace(0.0, 9.0, 1801)[None, :]
    val = (eps * beta * rho * t / SQRT2
           - 0.25 * (1.0 - rho ** 2) ** 2
           - 0.25 * eps * (1.0 - t) ** 2)
    i, j = np.unravel_index(np.argmax(val), val.shape)

    def neg(x):
        r, tt = x
        return -(eps * beta * r * tt / SQRT2
                 - 0.25 * (1.0 - r ** 2) ** 2
                 - 0.25 * eps * (1.0 - tt) ** 2)

    res = optimize.minimize(neg, [float(rho[i, 0]), float(t[0, j])],
                            method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14})
    assert potential.kappa_eps(params) == pytest.approx(-res.fun, abs=1e-6)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_kappa_eps_asymptotics(beta):
    """|kappa_eps - (beta^2+sqrt2*beta)/2*eps - kappa_*^2 eps^2| = o(eps^2).

    The remainder is a genuine O(eps^3) term whose coefficient grows with
    beta (about 0.016, 0.26, and 5.1 at beta = 0.5, 1, 2), so the scaled
    remainder must halve along a halving eps ladder.
    """
    ks = potential.kappa_star(beta)
    lead = 0.5 * (beta ** 2 + SQRT2 * beta)
    rems = []
    for eps in (0.1, 0.05, 0.025, 0.0125):
        ke = potential.kappa_eps(potential.CouplingParams(beta=beta, eps=eps))
        rems.append(abs(ke - lead * eps - ks ** 2 * eps ** 2) / eps ** 2)
    assert all(a > b for a, b in zip(rems, rems[1:]))
    # cubic-order remainder: successive ratios sit near 1/2
    ratios = [b / a for a, b in zip(rems, rems[1:])]
    assert all(0.35 < r < 0.65 for r in ratios)
    assert rems[-1] < 0.08 * max(1.0, beta ** 3)


def test_constants_bundle_consistent():
    params = potential.CouplingParams(beta=1.0, eps=0.05)
    c = potential.compute_constants(params)
    assert c.kappa_star == pytest.approx(potential.kappa_star(1.0), abs=1e-14)
    assert c.c_beta == pytest.approx(potential.c_beta(1.0), abs=1e-14)
    assert c.s_star == pytest.approx(potential.s_star(1.0, 0.05), abs=1e-12)
    assert c.lambda_pot ** 2 == pytest.approx(1.0 + SQRT2 * 1.0 * c.s_pot,
                                              rel=1e-10)


def test_coupling_params_validation():
    with pytest.raises(InvalidInputError):
        potential.CouplingParams(beta=-1.0, eps=0.05)
    with pytest.raises(InvalidInputError):
        potential.CouplingParams(beta=1.0, eps=0.0)


# ---------------------------------------------------------------------------
# exact algebraic splittings


def test_f_eps_nonnegative_and_zero_at_wells():
    rng = np.random.default_rng(7)
    params = potential.CouplingParams(beta=1.0, eps=0.08)
    consts = potential.compute_constants(params)
    q, M = random_fields(rng, 5000)
    f = potential.f_eps(q, M, params, consts)
    assert f.min() > -1e-11
    # joint minimum: |q| at the reduced minimizer, M at the matching well
    s = potential.minimize_reduced(1.0, 0.08)[0]
    qw = np.array([s, 0.0])
    Mw = potential.wells(qw, 1.0)[0]
    f0 = potential.f_eps(qw, Mw, params, consts)
    assert abs(float(f0)) < 1e-10


def test_splitting_residuals_bulk():
    rng = np.random.default_rng(11)
    for beta, eps in [(0.5, 0.05), (1.0, 0.08), (2.0, 0.15), (1.0, 0.02)]:
        params = potential.CouplingParams(beta=beta, eps=eps)
        consts = potential.compute_constants(params)
        q, M = random_fields(rng, 10000)
        q = q[np.hypot(q[:, 0], q[:, 1]) > 1e-6]
        res = potential.decompose_check(q, M, params, consts)
        assert res["f_ell"] < 1e-9
        assert res["fgh"] < 1e-9


@given(q1=st.floats(-2.5, 2.5), q2=st.floats(-2.5, 2.5),
       m1=st.floats(-2.5, 2.5), m2=st.floats(-2.5, 2.5),
       beta=st.floats(0.2, 3.0), eps=st.floats(0.02, 0.3))
@settings(max_examples=300)
def test_splitting_residuals_pointwise(q1, q2, m1, m2, beta, eps):
    q = np.array([q1, q2])
    if np.hypot(q1, q2) < 1e-6:
        q = np.array([1e-3, 0.0])
    params = potential.CouplingParams(beta=beta, eps=eps)
    consts = potential.compute_constants(params)
    res = potential.decompose_check(q, np.array([m1, m2]), params, consts)
    assert res["f_ell"] < 1e-9
    assert res["fgh"] < 1e-9


def test_well_product_identity():
    """(1/4)|M-M+|^2 |M-M-|^2 - (M.m)^2-weighted forms of V agree."""
    rng = np.random.default_rng(13)
    q, M = random_fields(rng, 10000)
    keep = np.hypot(q[:, 0], q[:, 1]) > 1e-6
    q, M = q[keep], M[keep]
    for beta in (0.5, 1.0, 2.0):
        v1 = potential.V(q, M, beta)
        v2 = potential.V_wells_form(q, M, beta)
        assert np.max(np.abs(v1 - v2)) < 1e-9
        assert v1.min() > -1e-11


def test_ell_min_consistent_with_wells():
    rng = np.random.default_rng(17)
    for beta in (0.5, 1.0, 2.0):
        q = rng.uniform(-2, 2, size=(200, 2))
        q = q[np.hypot(q[:, 0], q[:, 1]) > 0.05]
        mp, mm = potential.wells(q, beta)
        lp = potential.ell(q, mp, beta)
        lm = potential.ell(q, mm, beta)
        lmin = potential.ell_min(q, beta)
        assert np.max(np.abs(lp - lmin)) < 1e-10
        assert np.max(np.abs(lm - lmin)) < 1e-10
        # V is ell above its minimum, so it vanishes exactly at both wells
        assert np.max(potential.V(q, mp, beta)) < 1e-10


def test_wells_against_grid_search():
    """ell(Q, .) has exactly two minima, at the closed-form wells."""
    rng = np.random.default_rng(23)
    beta = 1.0
    count = 0
    while count < 100:
        theta = rng.uniform(0, 2 * np.pi)
        rho = rng.uniform(0.3, 2.0)
        q = np.array([rho * np.cos(theta), rho * np.sin(theta)])
        mp, mm = potential.wells(q, beta)
        span = np.linspace(-2.6, 2.6, 105)
        mx, my = np.meshgrid(span, span, indexing="ij")
        Mg = np.stack([mx, my], axis=-1)
        vals = potential.ell(q, Mg, beta)
        # strict interior local minima over the full 8-neighborhood
        # (a 4-neighbor test mislabels saddles with diagonal descent)
        c = vals[1:-1, 1:-1]
        mins = np.ones(c.shape, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == dj == 0:
                    continue
                mins &= c < vals[1 + di:vals.shape[0] - 1 + di,
                                 1 + dj:vals.shape[1] - 1 + dj]
        pts = Mg[1:-1, 1:-1][mins]
        assert len(pts) == 2
        polished = []
        for p in pts:
            res = optimize.minimize(
                lambda M: float(potential.ell(q, M, beta)), p,
                method="Nelder-Mead",
                options={"xatol": 1e-9, "fatol": 1e-13})
            polished.append(res.x)
        polished = np.array(polished)
        wells = np.array([mp, mm])
        d = np.linalg.norm(polished[:, None, :] - wells[None, :, :], axis=-1)
        # each polished minimum matches a distinct closed-form well
        assert d.min(axis=1).max() < 3e-3
        assert set(np.argmin(d, axis=1)) == {0, 1}
        count += 1


def test_project_well_properties():
    """Projection is defined within distance 1 of the well set only."""
    rng = np.random.default_rng(29)
    beta = 1.0
    q = rng.uniform(-2, 2, size=(500, 2))
    q = q[np.hypot(q[:, 0], q[:, 1]) > 0.05]
    mp, mm = potential.wells(q, beta)
    pick = rng.random(len(q)) < 0.5
    base = np.where(pick[:, None], mp, mm)
    d = rng.normal(size=base.shape)
    d *= (rng.uniform(0.0, 0.95, size=(len(q), 1))
          / np.linalg.norm(d, axis=-1, keepdims=True))
    M = base + d
    P = potential.project_well(q, M, beta)
    # lands on the well set, idempotent, and picks the nearby well
    assert np.max(potential.V(q, P, beta)) < 1e-9
    assert np.max(np.abs(potential.project_well(q, P, beta) - P)) < 1e-9
    assert np.max(np.abs(P - base)) < 1e-9
    from ferro.errors import NoProjectionError
    with pytest.raises(NoProjectionError):
        potential.project_well(np.array([1.0, 0.0]), np.array([50.0, 50.0]),
                               beta)


def test_h_potential_wells_and_quadratic_growth():
    for beta in (0.5, 1.0, 2.0):
        uw = potential.u_wells(beta)
        assert np.max(np.abs(potential.h_potential(uw, beta))) < 1e-12
        rng = np.random.default_rng(31)
        for w in uw:
            d = rng.normal(size=(50, 2))
            d /= np.linalg.norm(d, axis=-1, keepdims=True)
            for t in (1e-3, 1e-2):
                h = potential.h_potential(w + t * d, beta)
                assert np.all(h > 0)
                assert np.all(h < 50.0 * max(1.0, beta) * t ** 2)


def test_g_eps_nonnegative_min_at_modulus_well():
    params = potential.CouplingParams(beta=1.0, eps=0.05)
    consts = potential.compute_constants(params)
    rho = np.linspace(0.05, 2.5, 3000)
    q = np.stack([rho, np.zeros_like(rho)], axis=-1)
    g = potential.g_eps(q, params, consts)
    assert g.min() > -1e-10
    assert abs(rho[np.argmin(g)] - consts.s_pot) < 2e-3


def test_minimize_reduced_matches_constants():
    for beta in (0.5, 1.0, 2.0):
        for eps in (0.1, 0.05):
            s, m, _ = potential.minimize_reduced(beta, eps)
            c = potential.compute_constants(
                potential.CouplingParams(beta=beta, eps=eps))
            assert s == pytest.approx(c.s_pot, abs=1e-9)
            assert m ** 2 == pytest.approx(1.0 + SQRT2 * beta * c.s_pot,
                                           rel=1e-9)
            # the reduced minimizer and the max-principle root coincide
            assert s == pytest.approx(potential.s_star(beta, eps), abs=1e-8)
