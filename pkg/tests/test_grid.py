"""Domains, lattices, stencils, and boundary data."""

import numpy as np
import pytest

from ferro import potential
from ferro.grid import (Domain, build_grid, make_boundary_data,
                        boundary_loop_degree, laplacian, gradient,
                        ball_integral, circle_integral, poisson_solve)
from ferro.errors import ConfigError, InvalidInputError

DISK = {"shape": "disk", "R": 1.0}


def test_domain_configs():
    disk = Domain.from_config(DISK)
    assert disk.area == pytest.approx(np.pi)
    assert disk.perimeter == pytest.approx(2 * np.pi)
    rect = Domain.from_config({"shape": "rectangle",
                               "corners": [[0, 0], [2, 1]]})
    assert rect.area == pytest.approx(2.0)
    poly = Domain.from_config({"shape": "polygon",
                               "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]})
    assert poly.area == pytest.approx(1.0)
    assert poly.perimeter == pytest.approx(4.0)


def test_domain_config_rejects_garbage():
    with pytest.raises(ConfigError):
        Domain.from_config({"shape": "blob"})
    with pytest.raises(ConfigError):
        Domain.from_config({"shape": "disk"})
    with pytest.raises(ConfigError):
        Domain.from_config({"shape": "disk", "R": -1.0})


def test_signed_distance_disk():
    disk = Domain.from_config(DISK)
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [2.0, 0.0]])
    sd = disk.signed_distance(pts)
    assert np.allclose(sd, [-1.0, -0.5, 0.0, 1.0], atol=1e-12)


def test_grid_area_converges():
    disk = Domain.from_config(DISK)
    errs = []
    for h in (0.1, 0.05, 0.025):
        g = build_grid(disk, h)
        errs.append(abs(g.inside.sum() * h ** 2 - np.pi))
    # node counting carries an O(h) perimeter strip bias
    assert errs[-1] < errs[0]
    assert errs[-1] < 4.0 * 0.025


def test_boundary_normals_point_outward():
    g = build_grid(Domain.from_config(DISK), 0.04)
    feet = g.boundary_foot
    nu = g.boundary_nu
    assert np.allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-12)
    radial = feet / np.linalg.norm(feet, axis=1, keepdims=True)
    assert np.max(np.linalg.norm(nu - radial, axis=1)) < 1e-6


def test_boundary_data_modes_and_degree():
    g = build_grid(Domain.from_config(DISK), 0.04)
    for d in (-2, -1, 0, 1, 2):
        bc = make_boundary_data(g, 1.0, d, "mixed")
        assert bc.M is None
        assert np.allclose(np.hypot(bc.q[:, 0], bc.q[:, 1]), 1.0, atol=1e-12)
        assert boundary_loop_degree(g, bc.q) == pytest.approx(d, abs=1e-9)
    bc = make_boundary_data(g, 1.0, 1, "dirichlet_both")
    assert bc.M is not None
    lam2 = np.sqrt(2.0) * 1.0 + 1.0
    assert np.allclose(np.sum(bc.M ** 2, axis=1), lam2, atol=1e-10)


def test_boundary_data_sits_in_potential_wells():
    """The pinned pair must carry O(eps^2) potential energy density."""
    g = build_grid(Domain.from_config(DISK), 0.04)
    bc = make_boundary_data(g, 1.0, 1, "dirichlet_both")
    for eps in (0.1, 0.05):
        params = potential.CouplingParams(beta=1.0, eps=eps)
        consts = potential.compute_constants(params)
        f = potential.f_eps(bc.q, bc.M, params, consts)
        assert np.max(f) < 2.0 * eps ** 2


def test_boundary_mode_rejected():
    g = build_grid(Domain.from_config(DISK), 0.05)
    with pytest.raises(ConfigError):
        make_boundary_data(g, 1.0, 1, "dirichlet")
    with pytest.raises(InvalidInputError):
        make_boundary_data(g, 1.0, 0.5, "mixed")


def test_laplacian_and_gradient_convergence():
    disk = Domain.from_config(DISK)
    errs_lap, errs_grad = [], []
    for h in (0.04, 0.02):
        g = build_grid(disk, h)
        u = np.sin(g.X) * np.cosh(g.Y)
        lap = laplacian(u, g)
        gx, gy = gradient(u, g)
        # sin*cosh is harmonic; compare away from the boundary band
        core = g.inside & (g.sd < -4 * h)
        errs_lap.append(np.max(np.abs(lap[core])))
        ex = np.cos(g.X) * np.cosh(g.Y)
        errs_grad.append(np.max(np.abs(gx - ex)[core]))
    assert errs_lap[1] < 0.35 * errs_lap[0]
    assert errs_grad[1] < 0.6 * errs_grad[0]
    assert errs_lap[1] < 2e-3


def test_poisson_solve_matches_harmonic_extension():
    disk = Domain.from_config(DISK)
    errs = []
    for h in (0.08, 0.04, 0.02):
        g = build_grid(disk, h)
        exact = g.X ** 2 - g.Y ** 2
        vals = (g.boundary_foot[:, 0] ** 2 - g.boundary_foot[:, 1] ** 2)
        u = poisson_solve(g, vals)
        errs.append(np.max(np.abs(u - exact)[g.inside]))
    # boundary values live on band nodes up to h from the true boundary,
    # so the sup error is first order in h
    assert errs[2] < errs[0]
    assert errs[2] < 2.0 * 0.02


def test_poisson_solve_with_source():
    g = build_grid(Domain.from_config(DISK), 0.02)
    # -Lap(u) = 4 with u = 1 - x^2 - y^2 on the boundary foot values
    exact = 1.0 - g.X ** 2 - g.Y ** 2
    vals = 1.0 - np.sum(g.boundary_foot ** 2, axis=1)
    u = poisson_solve(g, vals, rhs=np.full(g.shape, 4.0))
    assert np.max(np.abs(u - exact)[g.inside]) < 2.0 * 0.02


def test_ball_and_circle_integrals():
    g = build_grid(Domain.from_config(DISK), 0.02)
    ones = np.ones(g.shape)
    assert ball_integral(ones, g, (0.1, -0.2), 0.4) == pytest.approx(
        np.pi * 0.4 ** 2, rel=0.05)
    assert circle_integral(ones, g, (0.1, -0.2), 0.4) == pytest.approx(
        2 * np.pi * 0.4, rel=0.02)
    # linear weight integrates to the centroid value times the measure
    lin = 2.0 + g.X
    assert ball_integral(lin, g, (0.1, -0.2), 0.4) == pytest.approx(
        2.1 * np.pi * 0.16, rel=0.05)


def test_interp_reproduces_linear_fields():
    g = build_grid(Domain.from_config(DISK), 0.05)
    u = 0.3 + 1.7 * g.X - 0.4 * g.Y
    rng = np.random.default_rng(2)
    pts = rng.uniform(-0.5, 0.5, size=(50, 2))
    vals = g.interp(u, pts)
    assert np.allclose(vals, 0.3 + 1.7 * pts[:, 0] - 0.4 * pts[:, 1],
                       atol=1e-12)


def test_gather_scatter_boundary_round_trip():
    g = build_grid(Domain.from_config(DISK), 0.05)
    bc = make_boundary_data(g, 1.0, 1, "mixed")
    field = g.zero_field(2)
    g.scatter_boundary(bc.q, field)
    back = g.gather_boundary(field)
    assert np.allclose(back, bc.q, atol=1e-14)
