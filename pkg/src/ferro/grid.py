"""Masked finite-difference lattices on bounded, simply connected planar domains.

A Domain supplies a signed distance (negative inside) and an anticlockwise
arclength parametrization of its boundary.  A DomainGrid classifies the nodes
of a uniform lattice into interior, boundary band, and exterior:

    interior   sd < -h/2
    boundary   |sd| <= h/2
    exterior   sd > h/2

Since the signed distance has Lipschitz constant 1, every lattice neighbor of
an interior node satisfies sd < h/2, so interior nodes always have four
neighbors inside the band.  Boundary-band nodes sit within h/2 of the true
boundary; curved boundaries are therefore handled by first-order snapping.

Stencils are the classical 5-point ones, masked at the band: Dirichlet
conditions hold values on band nodes fixed, homogeneous Neumann conditions
drop edges that leave the inside region (mirror ghosts).
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import qtensor
from .errors import ConfigError, InvalidInputError, NumericError, ResolutionError

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2

SQRT2 = np.sqrt(2.0)


def _as_points(pts):
    p = np.asarray(pts, dtype=float)
    single = p.ndim == 1
    return np.atleast_2d(p), single


class Domain:
    """Bounded simply connected domain: disk, rectangle, or simple polygon.

    Rectangles are handled through the polygon code path (their signed
    distance is exact either way); disks get closed forms.
    """

    def __init__(self, shape: str, *, center=None, radius=None, vertices=None):
        self.shape = shape
        if shape == "disk":
            self.center = np.asarray(center, dtype=float)
            self.radius = float(radius)
            if self.radius <= 0:
                raise ConfigError("disk radius must be positive")
            self.vertices = None
        elif shape in ("rectangle", "polygon"):
            v = np.asarray(vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ConfigError("polygon needs at least 3 vertices of shape (m, 2)")
            area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
            if abs(area2) < 1e-12:
                raise ConfigError("degenerate polygon")
            if area2 < 0:
                v = v[::-1].copy()
            self.vertices = v
            self.center = v.mean(axis=0)
            self.radius = None
        else:
            raise ConfigError(f"unknown domain shape {shape!r}")
        self._edge_cache = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0) -> "Domain":
        return cls("disk", center=center, radius=radius)

    @classmethod
    def rectangle(cls, corner_lo, corner_hi) -> "Domain":
        (x0, y0), (x1, y1) = corner_lo, corner_hi
        if not (x1 > x0 and y1 > y0):
            raise ConfigError("rectangle corners must be (lower-left, upper-right)")
        verts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        return cls("rectangle", vertices=verts)

    @classmethod
    def polygon(cls, vertices) -> "Domain":
        return cls("polygon", vertices=vertices)

    @classmethod
    def from_config(cls, cfg: dict) -> "Domain":
        if not isinstance(cfg, dict) or "shape" not in cfg:
            raise ConfigError("domain config needs a 'shape' key")
        shape = cfg["shape"]
        known = {"disk": {"shape", "R", "center"},
                 "rectangle": {"shape", "corners"},
                 "polygon": {"shape", "vertices"}}
        if shape not in known:
            raise ConfigError(f"unknown domain shape {shape!r}")
        extra = set(cfg) - known[shape]
        if extra:
            raise ConfigError(f"unknown domain keys {sorted(extra)}")
        required = {"disk": "R", "rectangle": "corners", "polygon": "vertices"}
        if required[shape] not in cfg:
            raise ConfigError(f"{shape} domain needs {required[shape]!r}")
        if shape == "disk":
            if not np.isscalar(cfg["R"]) or cfg["R"] <= 0:
                raise ConfigError("disk radius R must be a positive number")
            return cls.disk(center=cfg.get("center", (0.0, 0.0)), radius=cfg["R"])
        if shape == "rectangle":
            lo, hi = cfg["corners"]
            return cls.rectangle(lo, hi)
        return cls.polygon(cfg["vertices"])

    def describe(self) -> dict:
        if self.shape == "disk":
            return {"shape": "disk", "R": self.radius, "center": list(self.center)}
        if self.shape == "rectangle":
            v = self.vertices
            return {"shape": "rectangle", "corners": [list(v[0]), list(v[2])]}
        return {"shape": "polygon", "vertices": [list(p) for p in self.vertices]}

    # -- geometry -----------------------------------------------------------

    @property
    def bbox(self):
        if self.shape == "disk":
            cx, cy = self.center
            R = self.radius
            return cx - R, cx + R, cy - R, cy + R
        v = self.vertices
        return v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()

    @property
    def feature_size(self) -> float:
        """Length scale the grid spacing is checked against."""
        if self.shape == "disk":
            return self.radius
        x0, x1, y0, y1 = self.bbox
        return 0.5 * min(x1 - x0, y1 - y0)

    @property
    def perimeter(self) -> float:
        if self.shape == "disk":
            return 2.0 * np.pi * self.radius
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))

    @property
    def area(self) -> float:
        if self.shape == "disk":
            return np.pi * self.radius ** 2
        v = self.vertices
        return 0.5 * abs(float(np.sum(v[:, 0] * np.roll(v[:, 1], -1)
                                      - np.roll(v[:, 0], -1) * v[:, 1])))

    def _edges(self):
        if self._edge_cache is None:
            a = self.vertices
            b = np.roll(a, -1, axis=0)
            e = b - a
            lengths = np.hypot(e[:, 0], e[:, 1])
            cum = np.concatenate([[0.0], np.cumsum(lengths)])
            self._edge_cache = (a, b, e, lengths, cum)
        return self._edge_cache

    def signed_distance(self, pts) -> np.ndarray:
        """Signed distance to the boundary, negative inside."""
        P, single = _as_points(pts)
        if self.shape == "disk":
            r = np.hypot(P[:, 0] - self.center[0], P[:, 1] - self.center[1])
            sd = r - self.radius
        else:
            a, b, e, lengths, _ = self._edges()
            d2 = np.full(P.shape[0], np.inf)
            inside = np.zeros(P.shape[0], dtype=bool)
            for k in range(a.shape[0]):
                w = P - a[k]
                ee = lengths[k] ** 2
                t = np.clip((w @ e[k]) / ee, 0.0, 1.0)
                proj = a[k] + t[:, None] * e[k]
                d2 = np.minimum(d2, np.sum((P - proj) ** 2, axis=1))
                crosses = (a[k, 1] > P[:, 1]) != (b[k, 1] > P[:, 1])
                if np.any(crosses):
                    xint = a[k, 0] + (P[:, 1] - a[k, 1]) * e[k, 0] / e[k, 1]
                    inside ^= crosses & (P[:, 0] < xint)
            sd = np.where(inside, -np.sqrt(d2), np.sqrt(d2))
        return sd[0] if single else sd

    def boundary_frame(self, pts) -> dict:
        """Nearest boundary point of each query, with frame data.

        Returns arrays: foot (closest boundary point), nu (outward normal),
        tau (anticlockwise tangent), s (arclength of foot), theta (boundary
        angle parameter about the center), corner (True where the foot is a
        polygon vertex, so the normal is ambiguous).
        """
        P, single = _as_points(pts)
        n = P.shape[0]
        if self.shape == "disk":
            v = P - self.center
            r = np.hypot(v[:, 0], v[:, 1])
            v = np.where(r[:, None] > 1e-15, v, np.array([1.0, 0.0]))
            r = np.maximum(r, 1e-15)
            nu = v / r[:, None]
            foot = self.center + self.radius * nu
            theta = np.arctan2(nu[:, 1], nu[:, 0])
            s = self.radius * np.mod(theta, 2.0 * np.pi)
            tau = np.stack([-nu[:, 1], nu[:, 0]], axis=1)
            corner = np.zeros(n, dtype=bool)
        else:
            a, b, e, lengths, cum = self._edges()
            best = np.full(n, np.inf)
            foot = np.zeros((n, 2))
            nu = np.zeros((n, 2))
            tau = np.zeros((n, 2))
            s = np.zeros(n)
            t_best = np.zeros(n)
            for k in range(a.shape[0]):
                w = P - a[k]
                t = np.clip((w @ e[k]) / lengths[k] ** 2, 0.0, 1.0)
                proj = a[k] + t[:, None] * e[k]
                d2 = np.sum((P - proj) ** 2, axis=1)
                better = d2 < best
                best = np.where(better, d2, best)
                foot[better] = proj[better]
                td = e[k] / lengths[k]
                nu[better] = (td[1], -td[0])
                tau[better] = td
                s[better] = cum[k] + t[better] * lengths[k]
                t_best[better] = t[better]
            corner = (t_best < 1e-9) | (t_best > 1.0 - 1e-9)
            rel = foot - self.center
            theta = np.arctan2(rel[:, 1], rel[:, 0])
        out = {"foot": foot, "nu": nu, "tau": tau, "s": s,
               "theta": theta, "corner": corner}
        if single:
            out = {k: v[0] for k, v in out.items()}
        return out

    def boundary_samples(self, n: int) -> dict:
        """Arclength-uniform anticlockwise boundary samples with frames."""
        if self.shape == "disk":
            th = 2.0 * np.pi * np.arange(n) / n
            nu = np.stack([np.cos(th), np.sin(th)], axis=1)
            pts = self.center + self.radius * nu
            return {"points": pts, "nu": nu,
                    "tau": np.stack([-nu[:, 1], nu[:, 0]], axis=1),
                    "s": self.radius * th, "theta": th}
        a, b, e, lengths, cum = self._edges()
        s = self.perimeter * np.arange(n) / n
        k = np.searchsorted(cum, s, side="right") - 1
        k = np.clip(k, 0, a.shape[0] - 1)
        t = (s - cum[k]) / lengths[k]
        pts = a[k] + t[:, None] * e[k]
        td = e[k] / lengths[k][:, None]
        nu = np.stack([td[:, 1], -td[:, 0]], axis=1)
        rel = pts - self.center
        return {"points": pts, "nu": nu, "tau": td, "s": s,
                "theta": np.arctan2(rel[:, 1], rel[:, 0])}


class DomainGrid:
    """Uniform lattice over a Domain's bounding box with band classification.

    Boundary-band node data (outward normal, tangent, arclength, boundary
    angle) is stored sorted by arclength, so the band doubles as an ordered
    discrete boundary loop.
    """

    def __init__(self, domain: Domain, h: float):
        if h <= 0:
            raise InvalidInputError("h must be positive")
        if h > domain.feature_size:
            raise ResolutionError(
                f"h={h} too large for domain feature size {domain.feature_size}")
        self.domain = domain
        self.h = float(h)
        xmin, xmax, ymin, ymax = domain.bbox
        pad = 2
        nx = int(np.ceil((xmax - xmin) / h - 1e-9)) + 1 + 2 * pad
        ny = int(np.ceil((ymax - ymin) / h - 1e-9)) + 1 + 2 * pad
        self.x = xmin - pad * h + h * np.arange(nx)
        self.y = ymin - pad * h + h * np.arange(ny)
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")
        pts = np.stack([self.X.ravel(), self.Y.ravel()], axis=1)
        sd = domain.signed_distance(pts).reshape(nx, ny)
        self.sd = sd
        self.cls = np.full((nx, ny), EXTERIOR, dtype=np.int8)
        self.cls[np.abs(sd) <= 0.5 * h] = BOUNDARY
        self.cls[sd < -0.5 * h] = INTERIOR
        self.interior = self.cls == INTERIOR
        self.band = self.cls == BOUNDARY
        self.inside = self.interior | self.band
        if not np.any(self.interior):
            raise ResolutionError("no interior nodes; h too large")
        self._check_neighbors()
        self._build_boundary_tables()
        # lattice edges with both endpoints inside (used by energies and jump sets)
        self.edge_x = self.inside[:-1, :] & self.inside[1:, :]
        self.edge_y = self.inside[:, :-1] & self.inside[:, 1:]

    def _check_neighbors(self):
        ok = np.ones_like(self.interior)
        ins = self.inside
        ok[1:, :] &= ~self.interior[1:, :] | ins[:-1, :]
        ok[:-1, :] &= ~self.interior[:-1, :] | ins[1:, :]
        ok[:, 1:] &= ~self.interior[:, 1:] | ins[:, :-1]
        ok[:, :-1] &= ~self.interior[:, :-1] | ins[:, 1:]
        if not np.all(ok):
            raise NumericError("grid classification broke the neighbor invariant")

    def _build_boundary_tables(self):
        bi, bj = np.nonzero(self.band)
        pts = np.stack([self.x[bi], self.y[bj]], axis=1)
        frame = self.domain.boundary_frame(pts)
        order = np.argsort(frame["s"], kind="stable")
        self.boundary_ij = (bi[order], bj[order])
        self.boundary_points = pts[order]
        self.boundary_foot = frame["foot"][order]
        self.boundary_nu = frame["nu"][order]
        self.boundary_tau = frame["tau"][order]
        self.boundary_s = frame["s"][order]
        self.boundary_theta = frame["theta"][order]
        self.boundary_corner = frame["corner"][order]

    # -- bookkeeping ---------------------------------------------------------

    @property
    def shape(self):
        return self.X.shape

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.interior))

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.band))

    def counts(self) -> dict:
        return {"interior": self.n_interior, "boundary": self.n_boundary,
                "exterior": int(np.count_nonzero(self.cls == EXTERIOR))}

    def points(self) -> np.ndarray:
        return np.stack([self.X, self.Y], axis=-1)

    def zero_field(self, ncomp: int | None = None) -> np.ndarray:
        if ncomp is None:
            return np.zeros(self.shape)
        return np.zeros(self.shape + (ncomp,))

    def scatter_boundary(self, values: np.ndarray, field: np.ndarray) -> None:
        """Write per-boundary-node values (arclength order) into a full field."""
        bi, bj = self.boundary_ij
        field[bi, bj] = values

    def gather_boundary(self, field: np.ndarray) -> np.ndarray:
        bi, bj = self.boundary_ij
        return field[bi, bj]

    # -- interpolation and quadrature ----------------------------------------

    def interp(self, field: np.ndarray, pts) -> np.ndarray:
        """Bilinear interpolation; every supporting node must be inside."""
        P, single = _as_points(pts)
        fx = (P[:, 0] - self.x[0]) / self.h
        fy = (P[:, 1] - self.y[0]) / self.h
        ix = np.floor(fx).astype(int)
        iy = np.floor(fy).astype(int)
        nx, ny = self.shape
        if np.any(ix < 0) or np.any(ix > nx - 2) or np.any(iy < 0) or np.any(iy > ny - 2):
            raise InvalidInputError("interpolation point outside the lattice")
        ok = (self.inside[ix, iy] & self.inside[ix + 1, iy]
              & self.inside[ix, iy + 1] & self.inside[ix + 1, iy + 1])
        if not np.all(ok):
            raise InvalidInputError("interpolation cell leaves the domain")
        tx = (fx - ix)[:, None] if field.ndim == 3 else fx - ix
        ty = (fy - iy)[:, None] if field.ndim == 3 else fy - iy
        val = (field[ix, iy] * (1 - tx) * (1 - ty)
               + field[ix + 1, iy] * tx * (1 - ty)
               + field[ix, iy + 1] * (1 - tx) * ty
               + field[ix + 1, iy + 1] * tx * ty)
        return val[0] if single else val


def build_grid(domain: Domain, h: float) -> DomainGrid:
    """Classify the lattice over the domain's padded bounding box."""
    return DomainGrid(domain, h)


# ---------------------------------------------------------------------------
# boundary data


class BoundaryData:
    """Boundary values for (Q, M) along the band, in arclength order.

    mode 'dirichlet_both' pins Q and M (well-compatible pair); mode 'mixed'
    pins Q only and leaves M free (natural conditions).  The director datum
    is n_bd(s) = (cos(d*theta(s)), sin(d*theta(s))) so the tensor winds with
    loop degree d (embedded winding 2d).
    """

    def __init__(self, grid: DomainGrid, beta: float, d: int, mode: str):
        if mode not in ("dirichlet_both", "mixed"):
            raise ConfigError(f"unknown boundary mode {mode!r}")
        if int(d) != d:
            raise InvalidInputError("boundary degree parameter d must be an integer")
        self.mode = mode
        self.d = int(d)
        self.beta = float(beta)
        theta = grid.boundary_theta
        ang = self.d * theta
        n_bd = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        self.q = np.stack([n_bd[:, 0] ** 2 - n_bd[:, 1] ** 2,
                           2.0 * n_bd[:, 0] * n_bd[:, 1]], axis=1)
        if mode == "dirichlet_both":
            lam = np.sqrt(SQRT2 * beta + 1.0)
            self.M = lam * n_bd
        else:
            self.M = None
        self._validate(grid)

    def _validate(self, grid):
        norms = np.hypot(self.q[:, 0], self.q[:, 1])
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise NumericError("boundary tensor datum not unit-norm")
        if self.M is not None:
            lam2 = SQRT2 * self.beta + 1.0
            m2 = np.sum(self.M ** 2, axis=1)
            if np.max(np.abs(m2 - lam2)) > 1e-10:
                raise NumericError("boundary magnetization off the well modulus")
            # tensor datum must be the well tensor built from M itself
            q_from_m = np.stack([self.M[:, 0] ** 2 - self.M[:, 1] ** 2,
                                 2.0 * self.M[:, 0] * self.M[:, 1]], axis=1) / lam2
            if np.max(np.abs(q_from_m - self.q)) > 1e-10:
                raise NumericError("boundary pair (Q, M) incompatible")


def make_boundary_data(grid: DomainGrid, beta: float, d: int, mode: str) -> BoundaryData:
    return BoundaryData(grid, beta, d, mode)


# ---------------------------------------------------------------------------
# stencils


def _expand(mask: np.ndarray, field: np.ndarray) -> np.ndarray:
    return mask[..., None] if field.ndim == 3 else mask


def laplacian(field: np.ndarray, grid: DomainGrid, bc: str = "neumann") -> np.ndarray:
    """Masked 5-point Laplacian.

    bc='neumann': evaluated at every inside node; lattice edges leaving the
    inside region are dropped (mirror-ghost reflection).
    bc='dirichlet': evaluated at interior nodes only (band values are data).
    """
    if bc not in ("neumann", "dirichlet"):
        raise InvalidInputError(f"unknown bc {bc!r}")
    ins = grid.inside
    out = np.zeros_like(field)
    h2 = grid.h ** 2
    for axis, shift in (((0, 1)), ((0, -1)), ((1, 1)), ((1, -1))):
        src = np.roll(field, -shift, axis=axis)
        nb_ins = np.roll(ins, -shift, axis=axis)
        # roll wraps around: the wrapped layer is exterior-padded, so nb_ins
        # is False there and the term drops out
        valid = _expand(ins & nb_ins, field)
        out += np.where(valid, src - field, 0.0)
    out /= h2
    eval_mask = grid.interior if bc == "dirichlet" else grid.inside
    return np.where(_expand(eval_mask, field), out, 0.0)


def gradient(field: np.ndarray, grid: DomainGrid) -> tuple[np.ndarray, np.ndarray]:
    """(d/dx, d/dy): central where both neighbors are inside, one-sided else.

    Defined on inside nodes, zero outside.  Components keep the field's shape.
    """
    ins = grid.inside
    h = grid.h
    grads = []
    for axis in (0, 1):
        fp = np.roll(field, -1, axis=axis)
        fm = np.roll(field, 1, axis=axis)
        ip = np.roll(ins, -1, axis=axis)
        im = np.roll(ins, 1, axis=axis)
        central = ins & ip & im
        fwd = ins & ip & ~im
        bwd = ins & im & ~ip
        g = np.zeros_like(field)
        g += np.where(_expand(central, field), (fp - fm) / (2 * h), 0.0)
        g += np.where(_expand(fwd, field), (fp - field) / h, 0.0)
        g += np.where(_expand(bwd, field), (field - fm) / h, 0.0)
        grads.append(g)
    return grads[0], grads[1]


# ---------------------------------------------------------------------------
# quadrature


def ball_integral(field: np.ndarray, grid: DomainGrid, x0, r: float) -> float:
    """Integral of a node field over B(x0, r) via cell-area clipping."""
    x0 = np.asarray(x0, dtype=float)
    if grid.domain.signed_distance(x0) + r > -grid.h:
        raise InvalidInputError("ball exits the domain (or is unresolvable)")
    h = grid.h
    dist = np.hypot(grid.X - x0[0], grid.Y - x0[1])
    w = np.zeros(grid.shape)
    w[dist <= r - h] = 1.0
    straddle = (dist > r - h) & (dist < r + h)
    if np.any(straddle):
        si, sj = np.nonzero(straddle)
        # 4x4 subsamples per straddling cell
        off = (np.arange(4) + 0.5) / 4.0 - 0.5
        ox, oy = np.meshgrid(off, off, indexing="ij")
        sx = grid.x[si][:, None] + h * ox.ravel()[None, :]
        sy = grid.y[sj][:, None] + h * oy.ravel()[None, :]
        frac = np.mean(np.hypot(sx - x0[0], sy - x0[1]) <= r, axis=1)
        w[si, sj] = frac
    if field.ndim == 3:
        return np.sum(field * w[..., None], axis=(0, 1)) * h ** 2
    return float(np.sum(field * w) * h ** 2)


def circle_integral(field: np.ndarray, grid: DomainGrid, x0, r: float,
                    n: int | None = None) -> float:
    """Line integral over the circle of radius r (trapezoid on bilinear samples)."""
    x0 = np.asarray(x0, dtype=float)
    if n is None:
        n = max(64, 8 * int(np.ceil(2.0 * np.pi * r / grid.h)))
    th = 2.0 * np.pi * np.arange(n) / n
    pts = x0 + r * np.stack([np.cos(th), np.sin(th)], axis=1)
    vals = grid.interp(field, pts)
    return np.sum(vals, axis=0) * (2.0 * np.pi * r / n)


# ---------------------------------------------------------------------------
# Poisson solve (Dirichlet data on the band)


def _poisson_operator(grid: DomainGrid):
    """Factorized 5-point operator on interior nodes (cached per grid)."""
    cached = getattr(grid, "_poisson_cache", None)
    if cached is not None:
        return cached
    nx, ny = grid.shape
    idx = -np.ones((nx, ny), dtype=int)
    ii, jj = np.nonzero(grid.interior)
    K = ii.size
    idx[ii, jj] = np.arange(K)
    rows, cols, data = [np.arange(K)], [np.arange(K)], [np.full(K, 4.0)]
    bnd_rows, bnd_is, bnd_js = [], [], []
    for shift_axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        ni = ii + (shift if shift_axis == 0 else 0)
        nj = jj + (shift if shift_axis == 1 else 0)
        nb_idx = idx[ni, nj]
        is_int = nb_idx >= 0
        rows.append(np.arange(K)[is_int])
        cols.append(nb_idx[is_int])
        data.append(np.full(np.count_nonzero(is_int), -1.0))
        is_bnd = ~is_int
        bnd_rows.append(np.arange(K)[is_bnd])
        bnd_is.append(ni[is_bnd])
        bnd_js.append(nj[is_bnd])
    A = sparse.csc_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(K, K))
    lu = splu(A)
    cache = {"lu": lu, "ii": ii, "jj": jj,
             "bnd_rows": np.concatenate(bnd_rows),
             "bnd_is": np.concatenate(bnd_is),
             "bnd_js": np.concatenate(bnd_js)}
    grid._poisson_cache = cache
    return cache


def poisson_solve(grid: DomainGrid, boundary_values: np.ndarray,
                  rhs: np.ndarray | None = None) -> np.ndarray:
    """Solve -lap u = rhs on interior nodes, u = data on the band.

    boundary_values is per-boundary-node in arclength order, scalar or with
    trailing components.  Uses a cached sparse LU of the interior operator.
    """
    op = _poisson_operator(grid)
    ii, jj = op["ii"], op["jj"]
    K = ii.size

    bvals = np.asarray(boundary_values, dtype=float)
    ncomp = 1 if bvals.ndim == 1 else bvals.shape[1]
    full = grid.zero_field(None if bvals.ndim == 1 else ncomp)
    grid.scatter_boundary(bvals, full)

    b = np.zeros((K, ncomp))
    np.add.at(b, op["bnd_rows"],
              full[op["bnd_is"], op["bnd_js"]].reshape(-1, ncomp))
    if rhs is not None:
        r = np.asarray(rhs, dtype=float)[ii, jj].reshape(K, ncomp)
        b += grid.h ** 2 * r

    sol = op["lu"].solve(b)
    if bvals.ndim == 1:
        full[ii, jj] = sol[:, 0]
    else:
        full[ii, jj] = sol
    return full


def boundary_loop_degree(grid: DomainGrid, q_band: np.ndarray) -> float:
    """Loop degree of an arclength-ordered tensor datum along the band."""
    loop = qtensor.LoopSample(points=grid.boundary_points, q=q_band)
    return qtensor.loop_degree(loop, clearing=0.45)
