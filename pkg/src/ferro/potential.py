"""Scalar potentials and derived constants of the coupled tensor/vector model.

The model potential, per unit of the squared small parameter, is

    f_eps(Q, M) = 1/4 (1-|Q|^2)^2 + eps/4 (1-|M|^2)^2 - eps*beta*(QM.M) + kappa_eps

with kappa_eps the additive normalization that makes inf f_eps = 0.  This
module owns f_eps and every reduced object derived from it: the fixed-Q
vector potential ell and its two wells, the shifted Allen-Cahn potential V,
the frame potential h, the modulus potential g_eps, and the constants
kappa_star, kappa_eps, chi_eps, s_star, c_beta.

Everything is vectorized: tensor arguments are embedded vectors (..., 2),
magnetizations are (..., 2) arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qtensor
from .errors import DegenerateTensorError, InvalidInputError, NoProjectionError, NumericError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class CouplingParams:
    """Model couplings: interaction strength beta and core scale eps."""
    beta: float
    eps: float

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise InvalidInputError("beta must be positive")
        if not (self.eps > 0.0):
            raise InvalidInputError("eps must be positive")


@dataclass(frozen=True)
class PotentialConstants:
    """Normalization and asymptotic constants attached to one CouplingParams.

    s_pot and lambda_pot are the minimizing modulus pair (|Q|, |M|) of the
    reduced two-variable potential; kappa_eps = -(its minimum value).
    """
    kappa_star: float
    kappa_eps: float
    chi_eps: float
    s_star: float
    c_beta: float
    s_pot: float
    lambda_pot: float


def kappa_star(beta: float) -> float:
    """Leading modulus-shift constant beta*(sqrt(2)*beta + 1)/(2*sqrt(2))."""
    return beta * (SQRT2 * beta + 1.0) / (2.0 * SQRT2)


def c_beta(beta: float) -> float:
    """Jump-line tension constant (2*sqrt(2)/3)*(sqrt(2)*beta + 1)^(3/2)."""
    return (2.0 * SQRT2 / 3.0) * (SQRT2 * beta + 1.0) ** 1.5


def _reduced_potential(rho, m, beta: float, eps: float):
    """f_eps minus kappa_eps on aligned states, as a function of moduli only.

    QM.M <= rho*|M|^2/sqrt(2) with equality iff M is parallel to the director,
    so the infimum of f_eps is attained on aligned states and the 4-variable
    minimization collapses to g(rho, m) below.
    """
    return (0.25 * (1.0 - rho ** 2) ** 2
            + 0.25 * eps * (1.0 - m ** 2) ** 2
            - eps * beta * rho * m ** 2 / SQRT2)


def _reduced_grad_hess(rho, m, beta, eps):
    g_r = rho ** 3 - rho - eps * beta * m ** 2 / SQRT2
    g_m = eps * (m ** 3 - m - SQRT2 * beta * rho * m)
    h_rr = 3.0 * rho ** 2 - 1.0
    h_rm = -SQRT2 * eps * beta * m
    h_mm = eps * (3.0 * m ** 2 - 1.0 - SQRT2 * beta * rho)
    return np.array([g_r, g_m]), np.array([[h_rr, h_rm], [h_rm, h_mm]])


def minimize_reduced(beta: float, eps: float):
    """Minimizer (rho*, m*) of the reduced potential and its value.

    Damped Newton from (1, sqrt(sqrt(2)*beta + 1)); falls back to a coarse
    grid plus golden-section refinement if Newton leaves the trust region.
    """
    x = np.array([1.0, np.sqrt(SQRT2 * beta + 1.0)])
    for _ in range(60):
        g, H = _reduced_grad_hess(x[0], x[1], beta, eps)
        if np.linalg.norm(g) < 1e-14:
            break
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)) or np.linalg.norm(step) > 1.0:
            x = _grid_golden(beta, eps)
            break
        x = x - step
        if not (0.0 < x[0] < 5.0 and 0.0 < x[1] < 5.0):
            x = _grid_golden(beta, eps)
            break
    else:
        x = _grid_golden(beta, eps)
    val = float(_reduced_potential(x[0], x[1], beta, eps))
    return float(x[0]), float(x[1]), val


def _grid_golden(beta: float, eps: float):
    rho = np.linspace(0.2, 3.0, 281)
    m = np.linspace(0.2, 3.0, 281)
    R, M = np.meshgrid(rho, m, indexing="ij")
    G = _reduced_potential(R, M, beta, eps)
    i, j = np.unravel_index(np.argmin(G), G.shape)
    x = np.array([rho[i], m[j]])
    # coordinate-wise golden-section refinement
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(4):
        for axis in (0, 1):
            a, b = x[axis] - 0.02, x[axis] + 0.02
            c, d = b - gr * (b - a), a + gr * (b - a)
            for _ in range(60):
                xc, xd = x.copy(), x.copy()
                xc[axis], xd[axis] = c, d
                if _reduced_potential(xc[0], xc[1], beta, eps) < \
                   _reduced_potential(xd[0], xd[1], beta, eps):
                    b, d = d, c
                    c = b - gr * (b - a)
                else:
                    a, c = c, d
                    d = a + gr * (b - a)
            x[axis] = 0.5 * (a + b)
    if not np.all(np.isfinite(x)):
        raise NumericError("reduced-potential minimization failed")
    return x


def kappa_eps(params: CouplingParams) -> float:
    """Normalization making inf f_eps = 0 (minus the reduced minimum)."""
    _, _, val = minimize_reduced(params.beta, params.eps)
    return -val


def s_star(beta: float, eps: float) -> float:
    """Largest root of X^3 - (1 + beta^2 eps) X - (beta/sqrt(2)) eps; > 1."""
    a = 1.0 + beta ** 2 * eps
    b = beta * eps / SQRT2
    x = 1.5
    for _ in range(100):
        p = x ** 3 - a * x - b
        dp = 3.0 * x ** 2 - a
        step = p / dp
        x -= step
        if abs(step) < 1e-15:
            break
    else:
        roots = np.roots([1.0, 0.0, -a, -b])
        x = float(np.max(roots[np.abs(roots.imag) < 1e-12].real))
    if not x > 1.0:
        raise NumericError(f"largest cubic root {x} not > 1; eps too large?")
    return float(x)


def compute_constants(params: CouplingParams) -> PotentialConstants:
    beta, eps = params.beta, params.eps
    ks = kappa_star(beta)
    s_pot, lambda_pot, val = minimize_reduced(beta, eps)
    ke = -val
    chi = ke / eps ** 2 - (beta ** 2 + SQRT2 * beta) / (2.0 * eps)
    return PotentialConstants(
        kappa_star=ks,
        kappa_eps=ke,
        chi_eps=chi,
        s_star=s_star(beta, eps),
        c_beta=c_beta(beta),
        s_pot=s_pot,
        lambda_pot=lambda_pot,
    )


# ---------------------------------------------------------------------------
# pointwise potentials


def qmm(q: np.ndarray, M: np.ndarray) -> np.ndarray:
    """The coupling invariant QM.M in embedded coordinates.

    Equals q . p(M) with p(M) = (M1^2 - M2^2, 2 M1 M2)/sqrt(2), the embedding
    of the traceless part of M (x) M.
    """
    q = np.asarray(q, dtype=float)
    M = np.asarray(M, dtype=float)
    p1 = (M[..., 0] ** 2 - M[..., 1] ** 2) / SQRT2
    p2 = 2.0 * M[..., 0] * M[..., 1] / SQRT2
    return q[..., 0] * p1 + q[..., 1] * p2


def q_matvec(q: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Matrix-vector product QM in embedded coordinates."""
    q = np.asarray(q, dtype=float)
    M = np.asarray(M, dtype=float)
    out1 = (q[..., 0] * M[..., 0] + q[..., 1] * M[..., 1]) / SQRT2
    out2 = (q[..., 1] * M[..., 0] - q[..., 0] * M[..., 1]) / SQRT2
    return np.stack([out1, out2], axis=-1)


def f_eps(q: np.ndarray, M: np.ndarray, params: CouplingParams,
          constants: PotentialConstants, check: bool = True) -> np.ndarray:
    """Full model potential; nonnegative once kappa_eps is fresh."""
    beta, eps = params.beta, params.eps
    rho2 = q[..., 0] ** 2 + q[..., 1] ** 2
    m2 = M[..., 0] ** 2 + M[..., 1] ** 2
    val = (0.25 * (1.0 - rho2) ** 2
           + 0.25 * eps * (1.0 - m2) ** 2
           - eps * beta * qmm(q, M)
           + constants.kappa_eps)
    if check and np.any(val < -1e-10):
        raise NumericError("f_eps negative beyond slack: stale kappa_eps")
    return val


def ell(q: np.ndarray, M: np.ndarray, beta: float) -> np.ndarray:
    """Fixed-tensor vector potential 1/4(|M|^2-1)^2 - beta*QM.M + (beta^2+sqrt(2)beta)/2."""
    m2 = M[..., 0] ** 2 + M[..., 1] ** 2
    return (0.25 * (m2 - 1.0) ** 2 - beta * qmm(q, M)
            + 0.5 * (beta ** 2 + SQRT2 * beta))


def ell_min(q: np.ndarray, beta: float) -> np.ndarray:
    """Minimum of ell(Q, .): (beta/2)(1-rho)(sqrt(2)+beta+beta*rho)."""
    rho = qtensor.norm(q)
    if np.any(rho < qtensor.DEGENERATE_FLOOR):
        raise DegenerateTensorError("ell_min needs |Q| > 0")
    return 0.5 * beta * (1.0 - rho) * (SQRT2 + beta + beta * rho)


def wells(q: np.ndarray, beta: float):
    """The two minimizers M_pm = +/- sqrt(sqrt(2)*beta*rho + 1) * n of ell(Q, .)."""
    rho, n = qtensor.polar_decompose(q)
    amp = np.sqrt(SQRT2 * beta * rho + 1.0)
    Mp = amp[..., None] * n
    return Mp, -Mp


def V(q: np.ndarray, M: np.ndarray, beta: float) -> np.ndarray:
    """Shifted vector potential ell - min ell >= 0."""
    return ell(q, M, beta) - ell_min(q, beta)


def V_wells_form(q: np.ndarray, M: np.ndarray, beta: float) -> np.ndarray:
    """V rewritten through the wells: 1/4|M-M+|^2|M-M-|^2 - (M.m)^2.

    Here m is the unit eigenvector orthogonal to the director.  With
    lam^2 = 1 + sqrt(2)*beta*rho the product expands as

        |M-M+|^2|M-M-|^2 = (|M|^2 - lam^2)^2 + 4*lam^2*(M.m)^2,

    so this equals 1/4*(|M|^2-lam^2)^2 + sqrt(2)*beta*rho*(M.m)^2, which is
    the direct expansion of ell - ell_min in the eigenframe.  Nonnegative
    since lam >= 1.  Used as an independent cross-check of V.
    """
    rho, n = qtensor.polar_decompose(q)
    Mp, Mm = wells(q, beta)
    dp = np.sum((M - Mp) ** 2, axis=-1)
    dm = np.sum((M - Mm) ** 2, axis=-1)
    m_perp = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    mm = np.sum(M * m_perp, axis=-1)
    return 0.25 * dp * dm - mm ** 2


def grad_M_ell(q: np.ndarray, M: np.ndarray, beta: float) -> np.ndarray:
    """Gradient of ell (= of V) in M: (|M|^2-1)M - 2*beta*QM."""
    m2 = np.sum(M ** 2, axis=-1, keepdims=True)
    return (m2 - 1.0) * M - 2.0 * beta * q_matvec(q, M)


def project_well(q: np.ndarray, M: np.ndarray, beta: float) -> np.ndarray:
    """The unique well within distance 1 of M (well separation exceeds 2)."""
    Mp, Mm = wells(q, beta)
    dp = np.sqrt(np.sum((M - Mp) ** 2, axis=-1))
    dm = np.sqrt(np.sum((M - Mm) ** 2, axis=-1))
    if np.any(np.minimum(dp, dm) > 1.0):
        raise NoProjectionError("M farther than 1 from both wells")
    return np.where((dp <= dm)[..., None], Mp, Mm)


def h_potential(u: np.ndarray, beta: float) -> np.ndarray:
    """Frame-coordinate double-well 1/4(|u|^2-1)^2 - (beta/sqrt2)(u1^2-u2^2) + (beta^2+sqrt2*beta)/2."""
    u = np.asarray(u, dtype=float)
    u2 = u[..., 0] ** 2 + u[..., 1] ** 2
    return (0.25 * (u2 - 1.0) ** 2
            - (beta / SQRT2) * (u[..., 0] ** 2 - u[..., 1] ** 2)
            + 0.5 * (beta ** 2 + SQRT2 * beta))


def u_wells(beta: float) -> np.ndarray:
    """Zeros of h: (+/- sqrt(sqrt(2)*beta + 1), 0)."""
    amp = np.sqrt(SQRT2 * beta + 1.0)
    return np.array([[amp, 0.0], [-amp, 0.0]])


def g_eps(q: np.ndarray, params: CouplingParams,
          constants: PotentialConstants) -> np.ndarray:
    """Modulus potential (1/4eps^2)(|Q|^2-1)^2 - (2 kappa_*/eps)(|Q|-1) + kappa_*^2."""
    eps = params.eps
    ks = constants.kappa_star
    rho = qtensor.norm(q)
    return (0.25 / eps ** 2) * (rho ** 2 - 1.0) ** 2 - (2.0 * ks / eps) * (rho - 1.0) + ks ** 2


def u_coords_pointwise(q: np.ndarray, M: np.ndarray):
    """Frame coordinates (M.n, M.m) at isolated points (sign of n arbitrary)."""
    rho, n = qtensor.polar_decompose(q)
    m_perp = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    u1 = np.sum(M * n, axis=-1)
    u2 = np.sum(M * m_perp, axis=-1)
    return np.stack([u1, u2], axis=-1)


def decompose_check(q: np.ndarray, M: np.ndarray, params: CouplingParams,
                    constants: PotentialConstants) -> dict:
    """Residuals of the two exact splittings of f_eps/eps^2.

    Returns {'f_ell': ..., 'fgh': ...} with the second entry None when the
    tensor is degenerate (frame coordinates unavailable).
    """
    beta, eps = params.beta, params.eps
    lhs = f_eps(q, M, params, constants, check=False) / eps ** 2
    rho2 = q[..., 0] ** 2 + q[..., 1] ** 2
    split1 = (0.25 / eps ** 2) * (rho2 - 1.0) ** 2 + ell(q, M, beta) / eps \
        + constants.chi_eps
    out = {"f_ell": np.max(np.abs(lhs - split1))}
    rho = np.sqrt(rho2)
    if np.all(rho > qtensor.DEGENERATE_FLOOR):
        u = u_coords_pointwise(q, M)
        ks = constants.kappa_star
        split2 = (g_eps(q, params, constants)
                  + h_potential(u, beta) / eps
                  + ((rho - 1.0) / eps) * (2.0 * ks - (beta / SQRT2) * (u[..., 0] ** 2 - u[..., 1] ** 2))
                  + constants.kappa_eps / eps ** 2
                  - (beta ** 2 + SQRT2 * beta) / (2.0 * eps)
                  - ks ** 2)
        out["fgh"] = np.max(np.abs(lhs - split2))
    else:
        out["fgh"] = None
    return out
