"""Closed-form and quadrature-based connectivity predictions.

Implements the homogeneous mean-degree formula and its hard-disk limit,
the minimum-degree probability integral, the leading-order full-connec-
tivity (isolated node) term, and the corner-dominated isolated-pair
probability with its large-eta asymptotic form.

Conventions: node density rho is nodes per unit volume; when compared
against a simulation of n nodes in volume V, rho = (n - 1) / V.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.special import erf, gamma, gammainc

from .channel import ConnectionModel, Disk, Rayleigh, disk_limit
from .geometry import Domain


def solid_angle(d: int) -> float:
    """Surface of the unit sphere in d dimensions: 2 pi^(d/2) / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


@dataclass(frozen=True)
class AnalyticParams:
    density: float
    model: ConnectionModel
    domain: Domain
    k: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.density) and self.density > 0):
            raise ValueError(f"density must be positive, got {self.density}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "adaptive"  # or "tensor-grid"
    rel_tol: float = 1e-8
    max_evals: int = 500_000

    def __post_init__(self):
        if self.method not in ("adaptive", "tensor-grid"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if not (0 < self.rel_tol <= 1e-2):
            raise ValueError("rel_tol must lie in (0, 1e-2]")
        if self.max_evals < 100:
            raise ValueError("max_evals too small to converge anything")


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the best estimate."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (best estimate {estimate!r})")
        self.estimate = estimate


def _warn_if_boundary_dominated(model: ConnectionModel, domain: Domain) -> None:
    # heuristic validity flag for the boundary-free formulas
    r0 = disk_limit(model).r0
    if r0 > domain.side / 5.0:
        warnings.warn(
            f"connection range r0={r0:.3g} exceeds side/5={domain.side / 5.0:.3g}; "
            "boundary effects are significant and the homogeneous approximation "
            "is unreliable",
            stacklevel=3,
        )


def mean_degree_soft(params: AnalyticParams) -> float:
    """Boundary-free mean degree rho * Omega * Gamma(d/eta) / (eta * beta^(d/eta))."""
    model = params.model
    if not isinstance(model, Rayleigh):
        raise ValueError("mean_degree_soft needs the Rayleigh model; use mean_degree_disk")
    _warn_if_boundary_dominated(model, params.domain)
    d = params.domain.dimension
    return (
        params.density
        * solid_angle(d)
        * gamma(d / model.eta)
        / (model.eta * model.beta ** (d / model.eta))
    )


def mean_degree_disk(params: AnalyticParams) -> float:
    """Hard-disk limit rho * Omega * r0^d / d."""
    model = disk_limit(params.model)
    _warn_if_boundary_dominated(model, params.domain)
    d = params.domain.dimension
    return params.density * solid_angle(d) * model.r0 ** d / d


def argmin_mean_degree(d: int, beta: float, eta_tol: float = 1e-4) -> tuple[float, float]:
    """Minimiser of eta -> mean_degree_soft over (d/5, 50), at unit density.

    Returns (eta_star, mu_min).  Raises if the bracket does not contain an
    interior minimum.
    """
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    lo, hi = d / 5.0, 50.0

    def mu(eta: float) -> float:
        return solid_angle(d) * gamma(d / eta) / (eta * beta ** (d / eta))

    res = optimize.minimize_scalar(mu, bounds=(lo, hi), method="bounded", options={"xatol": eta_tol})
    eta_star = float(res.x)
    if eta_star - lo < 10 * eta_tol or hi - eta_star < 10 * eta_tol:
        raise RuntimeError(
            f"no interior minimum in ({lo}, {hi}) for beta={beta}: minimiser at {eta_star}"
        )
    return eta_star, float(res.fun)


# --------------------------------------------------------------------------
# connectivity mass M_H(r_i) = integral of H(|r_i - r_j|) over the domain
# --------------------------------------------------------------------------

def _sqrt_area_antiderivative(t: float, r: float) -> float:
    # antiderivative of sqrt(r^2 - t^2)
    t = min(max(t, -r), r)
    return 0.5 * (t * math.sqrt(max(r * r - t * t, 0.0)) + r * r * math.asin(min(max(t / r, -1.0), 1.0)))


def _segment(t0: float, t1: float, r: float) -> float:
    return _sqrt_area_antiderivative(t1, r) - _sqrt_area_antiderivative(t0, r)


def _quadrant_disk_area(x: float, y: float, r: float) -> float:
    """Area of the disk of radius r at the origin inside {X <= x, Y <= y}."""
    if x <= -r or y <= -r:
        return 0.0
    x = min(x, r)
    if y >= r:
        return 2.0 * _segment(-r, x, r)
    t_star = math.sqrt(max(r * r - y * y, 0.0))
    area = 0.0
    upper1 = min(x, -t_star)
    if y > 0.0 and upper1 > -r:
        area += 2.0 * _segment(-r, upper1, r)
    upper2 = min(x, t_star)
    if upper2 > -t_star:
        area += y * (upper2 + t_star) + _segment(-t_star, upper2, r)
    if y > 0.0 and x > t_star:
        area += 2.0 * _segment(t_star, x, r)
    return area


def disk_rectangle_area(center, radius: float, side: float) -> float:
    """Exact area of disk(center, radius) intersected with [0, side]^2."""
    cx, cy = float(center[0]), float(center[1])
    x0, x1 = -cx, side - cx
    y0, y1 = -cy, side - cy
    return (
        _quadrant_disk_area(x1, y1, radius)
        - _quadrant_disk_area(x0, y1, radius)
        - _quadrant_disk_area(x1, y0, radius)
        + _quadrant_disk_area(x0, y0, radius)
    )


def _erf_line_mass(p: float, side: float, beta: float) -> float:
    # integral over [0, side] of exp(-beta (t - p)^2) dt
    s = math.sqrt(beta)
    return 0.5 * math.sqrt(math.pi / beta) * (erf(s * (side - p)) + erf(s * p))


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _radial_mass(model: Rayleigh, d: int, R: np.ndarray) -> np.ndarray:
    """integral_0^R r^(d-1) exp(-beta r^eta) dr, vectorised over R."""
    a = d / model.eta
    scale = model.beta ** (-a) / model.eta * gamma(a)
    return scale * gammainc(a, model.beta * np.maximum(R, 0.0) ** model.eta)


def _ray_exit_2d(px: float, py: float, side: float, theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    big = np.inf
    with np.errstate(divide="ignore"):
        rx = np.where(c > 0, (side - px) / np.where(c > 0, c, 1.0), np.where(c < 0, px / np.where(c < 0, -c, 1.0), big))
        ry = np.where(s > 0, (side - py) / np.where(s > 0, s, 1.0), np.where(s < 0, py / np.where(s < 0, -s, 1.0), big))
    return np.minimum(rx, ry)


def _mh_polar_2d(point, domain: Domain, model: Rayleigh, quad: QuadratureSpec) -> float:
    """Angular integral of the closed radial mass, split at corner directions."""
    px, py = float(point[0]), float(point[1])
    L = domain.side
    corners = [(0.0, 0.0), (L, 0.0), (L, L), (0.0, L)]
    angles = sorted(math.atan2(cy - py, cx - px) for cx, cy in corners)
    angles.append(angles[0] + 2.0 * math.pi)

    if quad.method == "adaptive":
        # per-arc tolerance tightened so the four-arc sum meets rel_tol
        total = 0.0
        evals = 0
        for lo, hi in zip(angles[:-1], angles[1:]):
            if hi - lo < 1e-14:
                continue
            val, err, info = integrate.quad(
                lambda t: float(_radial_mass(model, 2, _ray_exit_2d(px, py, L, np.asarray([t])))[0]),
                lo,
                hi,
                epsabs=0.0,
                epsrel=quad.rel_tol / 20.0,
                limit=200,
                full_output=1,
            )[:3]
            total += val
            evals += info["neval"]
            if evals > quad.max_evals:
                raise QuadratureError("corner-arc quadrature exceeded max_evals", total)
        return total

    # composite Gauss-Legendre with dyadic refinement toward the arc ends,
    # where the ray length spikes for points close to a wall or corner
    x, w = _gl_nodes(48)
    fractions = (0.0, 1.0 / 64.0, 1.0 / 8.0, 0.5, 7.0 / 8.0, 63.0 / 64.0, 1.0)
    bounds = []
    for a, b in zip(angles[:-1], angles[1:]):
        cuts = [a + (b - a) * f for f in fractions]
        bounds += list(zip(cuts[:-1], cuts[1:]))
    lo = np.asarray([b[0] for b in bounds])
    hi = np.asarray([b[1] for b in bounds])
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    theta = mid[:, None] + half[:, None] * x[None, :]
    R = _ray_exit_2d(px, py, L, theta.ravel()).reshape(theta.shape)
    vals = _radial_mass(model, 2, R)
    return float(np.sum(half[:, None] * w[None, :] * vals))


def _ray_exit_box(p: np.ndarray, side: float, u: np.ndarray) -> np.ndarray:
    """Exit distance of rays u (m, d) from interior point p to the box wall."""
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = (side - p[None, :]) / u
        neg = -p[None, :] / u
        t = np.where(u > 0, pos, np.where(u < 0, neg, np.inf))
    return t.min(axis=1)


def _mh_spherical_3d(point, domain: Domain, model: Rayleigh) -> float:
    # tensor rule over directions; accuracy limited by face/edge kinks (~1e-6)
    p = np.asarray(point, dtype=float)
    L = domain.side
    xc, wc = _gl_nodes(96)   # cos(theta) in [-1, 1]
    xp, wp = _gl_nodes(96)   # phi in [0, 2 pi)
    phi = math.pi * (xp + 1.0)
    wphi = math.pi * wp
    cosTH, PHI = np.meshgrid(xc, phi, indexing="ij")
    sinTH = np.sqrt(1.0 - cosTH ** 2)
    u = np.stack(
        [sinTH * np.cos(PHI), sinTH * np.sin(PHI), cosTH], axis=-1
    ).reshape(-1, 3)
    R = _ray_exit_box(p, L, u)
    vals = _radial_mass(model, 3, R).reshape(cosTH.shape)
    return float(np.einsum("i,j,ij->", wc, wphi, vals))


def _disk_box_volume(point, side: float, r0: float) -> float:
    # slice integral of exact circle-rectangle areas along z
    p = np.asarray(point, dtype=float)
    z0, z1 = max(0.0, p[2] - r0), min(side, p[2] + r0)
    if z1 <= z0:
        return 0.0
    x, w = _gl_nodes(64)
    z = 0.5 * (z1 + z0) + 0.5 * (z1 - z0) * x
    areas = [
        disk_rectangle_area(p[:2], math.sqrt(max(r0 * r0 - (zz - p[2]) ** 2, 0.0)), side)
        for zz in z
    ]
    return 0.5 * (z1 - z0) * float(np.dot(w, areas))


def m_h(
    point,
    domain: Domain,
    model: ConnectionModel,
    quad: QuadratureSpec = QuadratureSpec(),
    use_closed_forms: bool = True,
) -> float:
    """Connectivity mass of a point: integral of H over the domain.

    Closed forms are used where they exist (disk-rectangle intersection in
    2-D; separable error-function product for eta = 2); everything else is
    quadrature of the exact radial antiderivative over boundary directions.
    Pass use_closed_forms=False to force the quadrature path (oracle checks).
    """
    p = np.asarray(point, dtype=float)
    if p.shape != (domain.dimension,):
        raise ValueError("point dimension does not match domain")
    if not domain.contains(p):
        raise ValueError("point must lie inside the domain")
    L = domain.side
    if isinstance(model, Disk):
        if domain.dimension == 2:
            return disk_rectangle_area(p, model.r0, L)
        return _disk_box_volume(p, L, model.r0)
    if use_closed_forms and model.eta == 2.0:
        masses = [_erf_line_mass(float(c), L, model.beta) for c in p]
        return float(np.prod(masses))
    if domain.dimension == 2:
        return _mh_polar_2d(p, domain, model, quad)
    return _mh_spherical_3d(p, domain, model)


# --------------------------------------------------------------------------
# domain integrals of functions of M_H (minimum degree / full connectivity)
# --------------------------------------------------------------------------

def _axis_panels(r0: float, half: float) -> list[tuple[float, float]]:
    cuts = sorted({0.0, min(r0, half), min(2.0 * r0, half), half})
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b - a > 1e-12]


@lru_cache(maxsize=16)
def _mass_grid(model: ConnectionModel, domain: Domain, nodes_per_panel: int = 24):
    """Quadrature nodes, weights and M_H values over one quarter (d=2) or
    octant (d=3) of the box; the integrand is reflection symmetric.

    Panels split at r0 and 2 r0 from the wall to resolve the boundary layer.
    """
    L = domain.side
    half = L / 2.0
    r0 = disk_limit(model).r0
    d = domain.dimension
    if d == 3 and isinstance(model, Rayleigh) and model.eta != 2.0:
        raise NotImplementedError(
            "domain integrals in 3-D are supported for the disk model and eta=2 only"
        )
    n_gl = nodes_per_panel if d == 2 else max(10, nodes_per_panel // 2)
    x, w = _gl_nodes(n_gl)
    axis_nodes, axis_weights = [], []
    for a, b in _axis_panels(r0, half):
        axis_nodes.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        axis_weights.append(0.5 * (b - a) * w)
    t = np.concatenate(axis_nodes)
    wt = np.concatenate(axis_weights)

    if d == 2:
        X, Y = np.meshgrid(t, t, indexing="ij")
        W = np.outer(wt, wt).ravel()
        pts = np.column_stack([X.ravel(), Y.ravel()])
    else:
        X, Y, Z = np.meshgrid(t, t, t, indexing="ij")
        W = np.einsum("i,j,k->ijk", wt, wt, wt).ravel()
        pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    if isinstance(model, Disk):
        if d == 2:
            M = np.array([disk_rectangle_area(p, model.r0, L) for p in pts])
        else:
            M = np.array([_disk_box_volume(p, L, model.r0) for p in pts])
    elif model.eta == 2.0:
        line = np.stack([_erf_line_mass_vec(pts[:, k], L, model.beta) for k in range(d)])
        M = np.prod(line, axis=0)
    else:
        M = _mh_polar_2d_many(pts, domain, model)
    return pts, W, M


def _erf_line_mass_vec(p: np.ndarray, side: float, beta: float) -> np.ndarray:
    s = math.sqrt(beta)
    return 0.5 * math.sqrt(math.pi / beta) * (erf(s * (side - p)) + erf(s * p))


def _mh_polar_2d_many(pts: np.ndarray, domain: Domain, model: Rayleigh) -> np.ndarray:
    """Vectorised corner-split angular quadrature over many points."""
    L = domain.side
    corners = np.array([(0.0, 0.0), (L, 0.0), (L, L), (0.0, L)])
    rel = corners[None, :, :] - pts[:, None, :]
    ang = np.sort(np.arctan2(rel[:, :, 1], rel[:, :, 0]), axis=1)
    ang = np.concatenate([ang, ang[:, :1] + 2.0 * math.pi], axis=1)
    x, w = _gl_nodes(32)
    lo, hi = ang[:, :-1], ang[:, 1:]
    half = 0.5 * (hi - lo)
    theta = (0.5 * (hi + lo))[:, :, None] + half[:, :, None] * x[None, None, :]
    c, s = np.cos(theta), np.sin(theta)
    px = pts[:, 0][:, None, None]
    py = pts[:, 1][:, None, None]
    with np.errstate(divide="ignore"):
        rx = np.where(c > 0, (L - px) / np.where(c > 0, c, 1.0), np.where(c < 0, px / np.where(c < 0, -c, 1.0), np.inf))
        ry = np.where(s > 0, (L - py) / np.where(s > 0, s, 1.0), np.where(s < 0, py / np.where(s < 0, -s, 1.0), np.inf))
    R = np.minimum(rx, ry)
    vals = _radial_mass(model, 2, R)
    return np.einsum("pak,k->p", half[:, :, None] * vals, w)


def _poisson_tail_integral(params: AnalyticParams, quad: QuadratureSpec, k: int) -> float:
    """(1/V) integral over the domain of e^(-rho M) sum_{m<k} (rho M)^m / m!."""
    pts, W, M = _mass_grid(params.model, params.domain)
    rho = params.density
    rm = rho * M
    acc = np.zeros_like(M)
    term = np.ones_like(M)
    for m in range(k):
        if m > 0:
            term = term * rm / m
        acc += term
    vals = acc * np.exp(-rm)
    folds = 2 ** params.domain.dimension
    return float(folds * np.sum(W * vals) / params.domain.volume)


def p_md_analytic(params: AnalyticParams, n: int, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Probability that every one of n nodes has degree >= k.

    Evaluates [1 - sum_{m<k} (rho^m/m!) (1/V) int M^m e^(-rho M)]^n with the
    outer integral on a boundary-layer-aware tensor grid.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    inner = _poisson_tail_integral(params, quad, params.k)
    base = 1.0 - inner
    if base <= 0.0:
        return 0.0
    return float(min(1.0, base ** n))


def p_fc_isolated_node(params: AnalyticParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Leading-order full-connectivity probability 1 - rho * int e^(-rho M).

    Valid at high density; the unclamped value can drop below zero outside
    that regime, which is reported as a warning.
    """
    inner = _poisson_tail_integral(params, quad, 1)
    raw = 1.0 - params.density * params.domain.volume * inner
    if raw < 0.0:
        warnings.warn(
            f"isolated-node expansion outside its validity regime (raw={raw:.3g}); clamping to 0",
            stacklevel=2,
        )
    return float(min(1.0, max(0.0, raw)))


# --------------------------------------------------------------------------
# corner expansion and isolated-pair probability
# --------------------------------------------------------------------------

def corner_coefficients(model: Rayleigh) -> tuple[float, float]:
    """(A, B) of the linearised corner exponent K(ri, rj) = A + B * (...).

    A is the quarter-plane mass of H_i + H_j - H_i H_j with both nodes at
    the corner; B is the common slope of its linear growth in each node's
    distance from the corner.
    """
    if not isinstance(model, Rayleigh):
        raise ValueError("corner expansion is defined for the Rayleigh model")
    eta, beta = model.eta, model.beta
    a = (math.pi / 2.0) * (1.0 - 2.0 ** (-(eta + 2.0) / eta)) * gamma((eta + 2.0) / eta)
    b = (1.0 - 2.0 ** (-(eta + 1.0) / eta)) * gamma((eta + 1.0) / eta)
    return beta ** (-2.0 / eta) * a, beta ** (-1.0 / eta) * b


def corner_exponent_khat(ri_polar, rj_polar, model: Rayleigh) -> float:
    """Linearised corner exponent at polar positions (r, theta) of both nodes.

    Valid for both nodes near the same right-angle corner (r << r0); the
    O(ri * rj) cross terms are dropped.
    """
    A, B = corner_coefficients(model)
    ri, thi = ri_polar
    rj, thj = rj_polar
    return A + B * (ri * (math.cos(thi) + math.sin(thi)) + rj * (math.cos(thj) + math.sin(thj)))


def pi1_closed_form(params: AnalyticParams) -> float:
    """Corner-dominated isolated-pair probability for the Rayleigh model.

    Sums the four identical right-angle corners of the square:
    2 exp(-rho A) / (rho^2 B^4) with (A, B) the corner coefficients.  The
    value exceeds one at small density where the expansion diverges; it is
    returned unclamped.
    """
    model = params.model
    if not isinstance(model, Rayleigh):
        raise ValueError("closed-form isolated-pair needs the Rayleigh model; use pi1_asymptotic")
    if params.domain.dimension != 2:
        raise ValueError("isolated-pair corner analysis is defined for the square domain")
    A, B = corner_coefficients(model)
    rho = params.density
    return 2.0 * math.exp(-rho * A) / (rho ** 2 * B ** 4)


def pi1_asymptotic(params: AnalyticParams) -> float:
    """Leading isolated-pair term 32 exp(-rho pi r0^2 / 4) / (r0^4 rho^2).

    Exact large-eta limit of the closed form; for the Disk model the
    correction f is identically zero.
    """
    if params.domain.dimension != 2:
        raise ValueError("isolated-pair corner analysis is defined for the square domain")
    r0 = disk_limit(params.model).r0
    rho = params.density
    return 32.0 * math.exp(-rho * math.pi * r0 ** 2 / 4.0) / (r0 ** 4 * rho ** 2)


def pi1_log_correction(params: AnalyticParams) -> float:
    """f = log(closed form) - log(leading term); 0 for Disk, else <= 0.

    Always negative for finite eta and decays to zero like 1/eta.
    """
    if isinstance(params.model, Disk):
        return 0.0
    f = math.log(pi1_closed_form(params)) - math.log(pi1_asymptotic(params))
    if f > 1e-12:
        raise AssertionError(f"isolated-pair log correction must be <= 0, got {f}")
    return f


def p_isolated_node_square(params: AnalyticParams) -> float:
    """Isolated-node probability in a square: 4 exp(-rho pi r0^2/4) / (r0^2 rho)."""
    if params.domain.dimension != 2:
        raise ValueError("defined for the square domain")
    r0 = disk_limit(params.model).r0
    rho = params.density
    return 4.0 * math.exp(-rho * math.pi * r0 ** 2 / 4.0) / (r0 ** 2 * rho)
