"""Tensor embedding, polar fields, winding numbers, and director frames."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ferro import qtensor
from ferro.errors import (DegreeUndefinedError, FrameUndefinedError,
                          InvalidInputError)

SQRT2 = np.sqrt(2.0)


def polar_field_samples(rng, n):
    """Random polar data (rho, phi) with exact chain-rule gradients."""
    rho = rng.uniform(0.2, 2.0, n)
    phi = rng.uniform(-4, 4, n)
    drho = rng.normal(size=(n, 2))
    dphi = rng.normal(size=(n, 2))
    c, s = np.cos(2 * phi), np.sin(2 * phi)
    q = np.stack([rho * c, rho * s], axis=-1)
    dq = (drho[:, :, None] * np.stack([c, s], axis=-1)[:, None, :]
          + 2.0 * (rho[:, None] * dphi)[:, :, None]
          * np.stack([-s, c], axis=-1)[:, None, :])
    return rho, phi, drho, dphi, q, dq[:, 0, :], dq[:, 1, :]


# ---------------------------------------------------------------------------
# embedding


def test_embedding_is_isometry():
    rng = np.random.default_rng(3)
    q = rng.normal(size=(400, 2))
    T = qtensor.tensor_from_q(q)
    assert np.allclose(np.trace(T, axis1=-2, axis2=-1), 0.0, atol=1e-14)
    assert np.allclose(T, np.swapaxes(T, -1, -2), atol=1e-14)
    frob2 = np.sum(T ** 2, axis=(-2, -1))
    assert np.allclose(frob2, np.sum(q ** 2, axis=-1), atol=1e-12)
    assert np.allclose(qtensor.q_from_tensor(T), q, atol=1e-13)


def test_polar_decompose_director():
    q = np.array([[1.0, 0.0], [0.0, 1.0], [-2.0, 0.0]])
    rho, n = qtensor.polar_decompose(q)
    assert np.allclose(rho, [1.0, 1.0, 2.0])
    # q at angle 2*phi maps to director at angle phi
    assert np.allclose(n[0], [1.0, 0.0], atol=1e-12)
    assert np.allclose(n[1], [np.cos(np.pi / 4), np.sin(np.pi / 4)],
                       atol=1e-12)
    assert np.allclose(n[2], [0.0, 1.0], atol=1e-12)
    # the director tensor reproduces q
    q_back = qtensor.director_tensor(rho, n)
    assert np.allclose(q_back, q, atol=1e-12)


@given(st.floats(0.05, 3.0), st.floats(-3.2, 3.2))
@settings(max_examples=200)
def test_polar_round_trip(rho, phi):
    q = np.array([rho * np.cos(2 * phi), rho * np.sin(2 * phi)])
    r, n = qtensor.polar_decompose(q)
    assert r == pytest.approx(rho, rel=1e-12)
    # director defined up to sign
    target = np.array([np.cos(phi), np.sin(phi)])
    assert min(np.linalg.norm(n - target),
               np.linalg.norm(n + target)) < 1e-9


# ---------------------------------------------------------------------------
# polar gradient identities (exact algebra, no discretization)


def test_gradient_splits_into_modulus_and_twist():
    """|grad q|^2 = |grad rho|^2 + 4 rho^2 |grad phi|^2 for polar fields."""
    rng = np.random.default_rng(5)
    rho, phi, drho, dphi, q, dq1, dq2 = polar_field_samples(rng, 10000)
    lhs = np.sum(dq1 ** 2, axis=-1) + np.sum(dq2 ** 2, axis=-1)
    rhs = np.sum(drho ** 2, axis=-1) + 4 * rho ** 2 * np.sum(dphi ** 2,
                                                             axis=-1)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_prejacobian_equals_twist_current():
    """j = rho^2 grad(phi) for polar fields, built from exact gradients."""
    rng = np.random.default_rng(9)
    rho, phi, drho, dphi, q, dq1, dq2 = polar_field_samples(rng, 10000)
    j = qtensor.prejacobian_pointwise(q, dq1, dq2)
    rhs = rho[:, None] ** 2 * dphi
    assert np.max(np.abs(j - rhs)) < 1e-9


def test_jacobian_is_half_curl_of_prejacobian():
    """For quadratic test fields both discrete quantities agree to O(h^2)."""
    h = 1e-3
    x = np.arange(-0.05, 0.05, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    rho = 1.0 + 0.3 * X + 0.2 * Y + 0.1 * X * Y
    phi = 0.5 * X - 0.4 * Y + 0.25 * X ** 2
    q = np.stack([rho * np.cos(2 * phi), rho * np.sin(2 * phi)], axis=-1)
    dq1 = np.gradient(q, h, axis=0)
    dq2 = np.gradient(q, h, axis=1)
    jac = qtensor.jacobian_pointwise(dq1, dq2)
    j = qtensor.prejacobian_pointwise(q, dq1, dq2)
    curl = (np.gradient(j[..., 1], h, axis=0)
            - np.gradient(j[..., 0], h, axis=1))
    interior = (slice(2, -2), slice(2, -2))
    assert np.max(np.abs(jac - 0.5 * curl)[interior]) < 1e-4


def test_circulation_of_prejacobian_counts_degree():
    """Line integral of j around a unit-modulus defect is 2*pi*deg."""
    n_s = 4096
    t = np.linspace(0, 2 * np.pi, n_s, endpoint=False)
    pts = np.stack([0.4 * np.cos(t), 0.4 * np.sin(t)], axis=-1)
    for deg in (-0.5, 0.5, 1.0, 1.5):
        phi = deg * np.arctan2(pts[:, 1], pts[:, 0])
        q = np.stack([np.cos(2 * phi), np.sin(2 * phi)], axis=-1)
        # tangential derivative along the loop (spectral accuracy not needed)
        dq_dt = (np.roll(q, -1, axis=0) - np.roll(q, 1, axis=0)) \
            / (2 * 2 * np.pi / n_s)
        # j . dl accumulated over the loop; dl = (dx, dy) per sample
        jt = 0.5 * qtensor.cross(q, dq_dt) * (2 * np.pi / n_s)
        assert np.sum(jt) == pytest.approx(2 * np.pi * deg, rel=1e-4)


# ---------------------------------------------------------------------------
# loop degrees


def test_loop_degree_on_synthetic_windings():
    for deg in (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5):
        pts = qtensor.circle_loop((0.2, -0.1), 0.5, n_samples=720)
        phi = deg * np.arctan2(pts[:, 1] + 0.1, pts[:, 0] - 0.2)
        rho = 1.0 + 0.1 * np.cos(3 * phi)
        q = np.stack([rho * np.cos(2 * phi), rho * np.sin(2 * phi)], axis=-1)
        loop = qtensor.LoopSample(points=pts, q=q)
        assert qtensor.loop_degree(loop) == pytest.approx(deg, abs=1e-12)


def test_loop_degree_requires_clearing():
    pts = qtensor.circle_loop((0.0, 0.0), 0.5, n_samples=256)
    q = np.full((256, 2), 0.1)
    with pytest.raises(DegreeUndefinedError):
        qtensor.loop_degree(qtensor.LoopSample(points=pts, q=q))


def test_loop_sample_validation():
    with pytest.raises(InvalidInputError):
        qtensor.LoopSample(points=np.zeros((3, 2)), q=np.zeros((3, 2)))
    with pytest.raises(InvalidInputError):
        qtensor.LoopSample(points=np.zeros((8, 2)), q=np.zeros((7, 2)))


def test_degree_is_additive_over_defects():
    pts = qtensor.circle_loop((0.0, 0.0), 0.8, n_samples=2048)
    phi = (0.5 * np.arctan2(pts[:, 1], pts[:, 0] - 0.3)
           + 0.5 * np.arctan2(pts[:, 1], pts[:, 0] + 0.3))
    q = np.stack([np.cos(2 * phi), np.sin(2 * phi)], axis=-1)
    loop = qtensor.LoopSample(points=pts, q=q)
    assert qtensor.loop_degree(loop) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# director frames


def grid_winding(deg, n=101, r_in=0.3, r_out=0.9):
    x = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    r = np.hypot(X, Y)
    phi = deg * np.arctan2(Y, X)
    q = np.stack([np.cos(2 * phi), np.sin(2 * phi)], axis=-1)
    return q, (r > r_in) & (r < r_out)


def test_frame_exists_for_integer_winding():
    q, region = grid_winding(1.0)
    n, m = qtensor.u_frame(q, region)
    # orthonormal frame, m = n rotated by +pi/2
    nn = np.einsum("...k,...k->...", n, n)
    assert np.allclose(nn[region], 1.0, atol=1e-12)
    assert np.allclose(np.einsum("...k,...k->...", n, m)[region], 0.0,
                       atol=1e-12)
    assert np.allclose(qtensor.cross(n, m)[region], 1.0, atol=1e-12)


def test_frame_refused_for_half_winding():
    q, region = grid_winding(0.5)
    with pytest.raises(FrameUndefinedError):
        qtensor.u_frame(q, region)


def test_frame_refused_below_clearing():
    q, region = grid_winding(1.0)
    q *= 0.2
    with pytest.raises(FrameUndefinedError):
        qtensor.u_frame(q, region)


def test_u_coords_norm_preserving():
    q, region = grid_winding(1.0)
    rng = np.random.default_rng(21)
    M = rng.normal(size=q.shape)
    u = qtensor.u_coords(M, q, region)
    assert np.allclose(np.linalg.norm(u[region], axis=-1),
                       np.linalg.norm(M[region], axis=-1), atol=1e-12)
    assert np.all(u[~region] == 0.0)
