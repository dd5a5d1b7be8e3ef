"""Algebra and calculus of traceless symmetric 2x2 tensor fields.

A tensor Q = [[Q11, Q12], [Q12, -Q11]] is stored as the embedded vector
q = sqrt(2)*(Q11, Q12), which is an isometry for the Frobenius norm.  All
field-level arrays carry the embedded components in the last axis.

Conventions fixed here and used everywhere else:

* polar form: q = rho*(cos 2phi, sin 2phi) with rho = |q| and director
  n = (cos phi, sin phi), defined up to sign (phi up to a multiple of pi);
* cross product: cross(a, b) = a1*b2 - a2*b1 on embedded vectors, which in
  tensor components is 2*(Q11*P12 - Q12*P11);
* pre-Jacobian: j = (1/2) q x grad(q) = rho^2 * grad(phi);
* Jacobian density: (1/2) curl j.  Around an isolated zero of degree d the
  Jacobian carries mass pi*d, and the circulation of j/|q|^2 around it is
  2*pi*d, i.e. pi per unit of integer winding of the embedded vector q
  (q winds twice per unit of degree).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTensorError,
    DegreeUndefinedError,
    FrameUndefinedError,
    InvalidInputError,
    ResolutionError,
)

# Below this Frobenius norm a tensor is treated as degenerate (no director).
DEGENERATE_FLOOR = 1e-12

# |Q| >= CLEARING threshold is where degrees/frames are well defined.
CLEARING = 0.5

# A half-integer result must land within this distance of a multiple of 1/2.
DEGREE_SNAP_TOL = 0.1


def q_from_tensor(T: np.ndarray) -> np.ndarray:
    """Embed traceless symmetric matrices (..., 2, 2) as vectors (..., 2)."""
    T = np.asarray(T, dtype=float)
    if T.shape[-2:] != (2, 2):
        raise InvalidInputError("expected (..., 2, 2) matrices")
    if not (np.allclose(T[..., 0, 1], T[..., 1, 0], atol=1e-12)
            and np.allclose(T[..., 0, 0], -T[..., 1, 1], atol=1e-12)):
        raise InvalidInputError("matrix is not traceless symmetric")
    return np.sqrt(2.0) * np.stack([T[..., 0, 0], T[..., 0, 1]], axis=-1)


def tensor_from_q(q: np.ndarray) -> np.ndarray:
    """Inverse of q_from_tensor: vectors (..., 2) to matrices (..., 2, 2)."""
    q = np.asarray(q, dtype=float)
    a = q[..., 0] / np.sqrt(2.0)
    b = q[..., 1] / np.sqrt(2.0)
    out = np.empty(q.shape[:-1] + (2, 2))
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = b
    out[..., 1, 1] = -a
    return out


def norm(q: np.ndarray) -> np.ndarray:
    """Frobenius norm of the tensor = Euclidean norm of the embedding."""
    q = np.asarray(q, dtype=float)
    return np.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2)


def polar_decompose(q: np.ndarray, floor: float = DEGENERATE_FLOOR):
    """Split q into (rho, n): modulus and a unit director with q = rho*(n (x) n part).

    The director is the eigenvector of the positive eigenvalue, normalized to
    the half-angle branch atan2(q2, q1)/2 in (-pi/2, pi/2]; it is only defined
    up to sign, and callers needing a continuous choice should use u_frame.
    """
    q = np.asarray(q, dtype=float)
    rho = norm(q)
    if np.any(rho < floor):
        raise DegenerateTensorError("|Q| below degeneracy floor; no director")
    phi = 0.5 * np.arctan2(q[..., 1], q[..., 0])
    n = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return rho, n


def director_tensor(rho: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Build q = rho*(cos 2phi, sin 2phi) from modulus rho and unit director n."""
    rho = np.asarray(rho, dtype=float)
    n = np.asarray(n, dtype=float)
    nn = n[..., 0] ** 2 + n[..., 1] ** 2
    if not np.allclose(nn, 1.0, atol=1e-12):
        raise InvalidInputError("director must be a unit vector")
    # cos 2phi = n1^2 - n2^2, sin 2phi = 2 n1 n2
    return np.stack([rho * (n[..., 0] ** 2 - n[..., 1] ** 2),
                     rho * (2.0 * n[..., 0] * n[..., 1])], axis=-1)


def cross(qa: np.ndarray, qb: np.ndarray) -> np.ndarray:
    """Antisymmetric product a1*b2 - a2*b1 (= 2*(Q11*P12 - Q12*P11))."""
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    return qa[..., 0] * qb[..., 1] - qa[..., 1] * qb[..., 0]


def prejacobian_pointwise(q: np.ndarray, dq1: np.ndarray, dq2: np.ndarray) -> np.ndarray:
    """Pre-Jacobian j = (1/2)(q x d1q, q x d2q) from supplied gradients.

    With gradients of a smooth field this equals rho^2*grad(phi) exactly.
    """
    j1 = 0.5 * cross(q, dq1)
    j2 = 0.5 * cross(q, dq2)
    return np.stack([j1, j2], axis=-1)


def jacobian_pointwise(dq1: np.ndarray, dq2: np.ndarray) -> np.ndarray:
    """Jacobian density (1/2) curl j = (1/2)(d1q x d2q) from supplied gradients."""
    return 0.5 * cross(dq1, dq2)


@dataclass(frozen=True)
class LoopSample:
    """Closed anticlockwise loop of field samples; the wrap edge is implicit.

    points: (N, 2) sample positions, q: (N, 2) embedded values at them.
    """
    points: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        qv = np.asarray(self.q, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or qv.shape != pts.shape:
            raise InvalidInputError("LoopSample needs matching (N, 2) arrays")
        if len(pts) < 4:
            raise InvalidInputError("loop too short")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "q", qv)


def circle_loop(center, radius: float, n_samples: int = 256) -> np.ndarray:
    """Anticlockwise circle sample positions (no repeated endpoint)."""
    t = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    cx, cy = center
    return np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], axis=-1)


def loop_degree(loop: LoopSample, clearing: float = CLEARING) -> float:
    """Half-integer degree of the tensor field along a closed loop.

    Accumulates the minimal angle increments of the embedded vector q, which
    winds twice per unit of degree, and halves the total winding.  Requires
    |Q| >= clearing on every sample and a sampling fine enough that no single
    increment reaches pi/2.
    """
    qv = loop.q
    rho = norm(qv)
    if np.any(rho < clearing):
        raise DegreeUndefinedError(
            f"|Q| dips to {rho.min():.3g} < {clearing} on the loop")
    ang = np.arctan2(qv[:, 1], qv[:, 0])
    d = np.diff(np.append(ang, ang[0]))
    # minimal increments: fold into (-pi, pi]
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    if np.any(np.abs(d) > 0.5 * np.pi):
        raise ResolutionError("angle step >= pi/2 between samples; refine the loop")
    winding = d.sum() / (2.0 * np.pi)   # integer winding of q
    deg = 0.5 * winding
    snapped = round(2.0 * deg) / 2.0
    if abs(deg - snapped) > DEGREE_SNAP_TOL:
        raise ResolutionError(
            f"accumulated degree {deg:.4f} not within {DEGREE_SNAP_TOL} of a half-integer")
    return snapped


def u_frame(q2d: np.ndarray, region: np.ndarray, clearing: float = CLEARING):
    """Continuous eigenframe (n, m) on a simply connected masked region.

    q2d: (ny, nx, 2) embedded field; region: (ny, nx) bool mask with
    |Q| >= clearing everywhere on it.  The director sign is propagated
    breadth-first from a seed node so that n(x).n(y) > 0 across every
    traversed lattice edge; m = n rotated by +pi/2.
    Returns (n, m) as (ny, nx, 2) arrays, zero outside the region.
    """
    region = np.asarray(region, dtype=bool)
    if not region.any():
        raise InvalidInputError("empty region")
    rho = norm(q2d)
    if np.any(rho[region] < clearing):
        raise FrameUndefinedError("region contains |Q| below the clearing threshold")

    phi = 0.5 * np.arctan2(q2d[..., 1], q2d[..., 0])
    n = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    n[~region] = 0.0

    ny, nx = region.shape
    seen = np.zeros_like(region)
    # one BFS per connected component (a simply connected region has one)
    for iy, ix in np.argwhere(region):
        if seen[iy, ix]:
            continue
        seen[iy, ix] = True
        queue = deque([(iy, ix)])
        while queue:
            cy, cx = queue.popleft()
            ncur = n[cy, cx]
            for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                yy, xx = cy + dy, cx + dx
                if 0 <= yy < ny and 0 <= xx < nx and region[yy, xx] and not seen[yy, xx]:
                    if ncur @ n[yy, xx] < 0.0:
                        n[yy, xx] = -n[yy, xx]
                    seen[yy, xx] = True
                    queue.append((yy, xx))
    # sign propagation along a BFS tree always succeeds; orientability is
    # a property of the non-tree edges, so check every internal edge
    ex = region[:-1, :] & region[1:, :]
    ey = region[:, :-1] & region[:, 1:]
    dot_x = np.einsum("...k,...k->...", n[:-1, :], n[1:, :])
    dot_y = np.einsum("...k,...k->...", n[:, :-1], n[:, 1:])
    if np.any(dot_x[ex] < 0.0) or np.any(dot_y[ey] < 0.0):
        raise FrameUndefinedError(
            "no single-valued director frame on this region "
            "(sign seam; region likely encircles a half-degree defect)")
    m = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    return n, m


def u_coords(M2d: np.ndarray, q2d: np.ndarray, region: np.ndarray,
             clearing: float = CLEARING) -> np.ndarray:
    """Frame coordinates u = (M.n, M.m) of the magnetization on a region.

    |u| = |M| nodewise (the frame is orthonormal).  Zero outside the region.
    """
    n, m = u_frame(q2d, region, clearing=clearing)
    u1 = np.einsum("...k,...k->...", M2d, n)
    u2 = np.einsum("...k,...k->...", M2d, m)
    u = np.stack([u1, u2], axis=-1)
    u[~np.asarray(region, dtype=bool)] = 0.0
    return u
