"""Brown-measure geometry of ``A + x`` with ``x`` circular.

``f_A(z) = <|A - z|^{-2}>``; the support is the closure of ``{f_A > 1}``.
The density is ``-(1/2pi)`` times the Laplacian of the log potential from
:mod:`deformed_iid.mde`.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .ensembles import Deformation
from .mde import log_potential_closed, solve_v_zero

EDGE_TOL = 1e-10
C1_DEFAULT = 100.0
I3_THRESHOLD = 0.01


class BrownError(ValueError):
    pass


# ---------------------------------------------------------------------------
# f_A and derivatives


def _op(A) -> Deformation:
    return A if isinstance(A, Deformation) else Deformation(A)


def _check_regular(mom, z):
    bad = ~np.isfinite(mom["inv_norm"]) | (mom["inv_norm"] > 1e12)
    if np.any(bad):
        zb = np.asarray(z)[bad] if np.ndim(z) else z
        raise BrownError(f"z within 1e-12 of Spec(A): {zb}")


def moments(A, z):
    op = _op(A)
    with np.errstate(divide="ignore", invalid="ignore"):
        mom = op.moments(np.asarray(z, dtype=complex))
    _check_regular(mom, z)
    return mom


def f_A(A, z):
    """``<|A - z|^{-2}>``."""
    out = moments(A, z)["f"]
    return float(out) if np.ndim(out) == 0 else out


def grad_f(A, z):
    """Gradient of ``f_A`` as a complex number ``f_x + i f_y`` (equals ``2 conj(I3)``)."""
    out = 2.0 * np.conj(moments(A, z)["I3"])
    return complex(out) if np.ndim(out) == 0 else out


def hessian_f(A, z) -> np.ndarray:
    """Real 2x2 Hessian of ``f_A`` in the (Re z, Im z) coordinates."""
    mom = moments(A, z)
    d2, dd = mom["d2"], mom["dd"]
    fxx = 2 * np.real(d2) + 2 * dd
    fyy = -2 * np.real(d2) + 2 * dd
    fxy = -2 * np.imag(d2)
    H = np.stack([np.stack([fxx, fxy], -1), np.stack([fxy, fyy], -1)], -2)
    return H


def theta(A, z0) -> complex:
    """``1 - <((A - z0)(A - z0)^T)^{-1}>`` for real ``A``."""
    op = _op(A)
    if not op.is_real:
        raise BrownError("theta is defined for real deformations only")
    mom = moments(op, z0)
    th = 1.0 - mom["tt"]
    if np.any(np.real(th) < -1e-10):
        raise BrownError(f"Re theta negative ({np.min(np.real(th)):.3e}); check input")
    return complex(th) if np.ndim(th) == 0 else th


# ---------------------------------------------------------------------------
# density


def _stencil_potential(op, pts):
    s, w = op.svals(pts)
    if np.any(np.min(s, axis=-1) <= 1e-12):
        raise BrownError("density stencil hits Spec(A)")
    return log_potential_closed(s, w, solve_v_zero(s, w))


def density(A, z, h: float = 1e-3, return_clamp: bool = False):
    """5-point finite-difference ``-(1/2pi) Laplacian`` of the log potential.

    Negative values (finite-difference noise outside the support) are clamped
    to zero; with ``return_clamp`` the clamped magnitude is returned as well.
    """
    op = _op(A)
    z = np.asarray(z, dtype=complex)
    offs = np.array([0, h, -h, 1j * h, -1j * h])
    L = _stencil_potential(op, z[..., None] + offs)
    lap = (L[..., 1] + L[..., 2] + L[..., 3] + L[..., 4] - 4 * L[..., 0]) / (h * h)
    rho = -lap / (2 * np.pi)
    clamp = np.where(rho < 0, -rho, 0.0)
    rho = np.maximum(rho, 0.0)
    if z.ndim == 0:
        rho, clamp = float(rho), float(clamp)
    return (rho, clamp) if return_clamp else rho


# ---------------------------------------------------------------------------
# edges


@dataclass(frozen=True)
class EdgePoint:
    z0: complex
    f: float
    grad_f: complex
    I3: complex
    I4: float
    gamma0: complex
    cls: str
    sigma_f: float
    inv_norm: float
    hessian: np.ndarray = dc_field(repr=False, default=None)

    def to_json(self) -> dict:
        c = lambda x: [float(np.real(x)), float(np.imag(x))]
        return {"z0": c(self.z0), "f": self.f, "grad_f": c(self.grad_f), "I3": c(self.I3),
                "I4": self.I4, "gamma0": c(self.gamma0), "cls": self.cls,
                "sigma_f": self.sigma_f, "inv_norm": self.inv_norm}


def classify_edge(ep_or_values, C1: float = C1_DEFAULT, i3_threshold: float = I3_THRESHOLD,
                  det_threshold: float = 1e-6) -> str:
    """``sharp`` / ``quadratic`` / ``irregular`` from the regularity inequalities."""
    ep = ep_or_values
    if ep.inv_norm >= C1:
        return "irregular"
    if (1 + abs(ep.z0)) ** 3 * abs(ep.I3) > i3_threshold:
        return "sharp"
    H = ep.hessian
    if H is not None and abs(np.linalg.det(H)) > det_threshold:
        return "quadratic"
    return "irregular"


def edge_point(A, z0: complex, N: int | None = None, C1: float = C1_DEFAULT,
               i3_threshold: float = I3_THRESHOLD, sigma_kw: dict | None = None) -> EdgePoint:
    """Fill edge data at a given boundary point."""
    op = _op(A)
    mom = moments(op, z0)
    I3, I4 = complex(mom["I3"]), float(mom["I4"])
    H = hessian_f(op, z0)
    provisional = EdgePoint(complex(z0), float(mom["f"]), complex(2 * np.conj(I3)), I3, I4,
                            complex(-I3 / np.sqrt(I4)), "", np.nan, float(mom["inv_norm"]), H)
    cls = classify_edge(provisional, C1, i3_threshold)
    sf = np.nan
    if N is not None:
        sf = sigma_f(op, z0, N, **(sigma_kw or {}))
    return EdgePoint(provisional.z0, provisional.f, provisional.grad_f, I3, I4, provisional.gamma0,
                     cls, sf, provisional.inv_norm, H)


def refine_edge(A, z, tol: float = EDGE_TOL, max_iter: int = 50) -> complex:
    """Newton along the gradient until ``|f - 1| <= tol``."""
    op = _op(A)
    z = complex(z)
    for _ in range(max_iter):
        mom = moments(op, z)
        r = float(mom["f"]) - 1.0
        if abs(r) <= tol:
            return z
        g = 2.0 * np.conj(complex(mom["I3"]))
        if abs(g) < 1e-14:
            break
        z = z - r * g / abs(g) ** 2
    mom = moments(op, z)
    if abs(float(mom["f"]) - 1.0) > tol:
        raise BrownError(f"edge Newton stagnated at z={z} with |f-1|={abs(float(mom['f']) - 1):.2e}")
    return z


def find_edge(A, direction: complex | None = None, origin: complex = 0.0, seed: complex | None = None,
              N: int | None = None, t_max: float | None = None, C1: float = C1_DEFAULT,
              sigma_kw: dict | None = None) -> EdgePoint:
    """First crossing of ``f_A = 1`` along ``origin + t*direction`` (or Newton from ``seed``)."""
    op = _op(A)
    if seed is not None:
        z0 = refine_edge(op, seed)
        return edge_point(op, z0, N, C1, sigma_kw=sigma_kw)
    if direction is None or direction == 0:
        raise BrownError("need a ray direction or a seed point")
    d = complex(direction) / abs(direction)
    origin = complex(origin)
    if t_max is None:
        t_max = 2.0 * (op.norm + abs(origin) + 2.0)
    ts = np.linspace(0.0, t_max, 4001)[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        fv = op.moments(origin + ts * d)["f"]
    fv = np.where(np.isfinite(fv), fv, 1e300)
    g = fv - 1.0
    idx = np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    if idx.size == 0:
        raise BrownError("no sign change of f_A - 1 along the ray")
    i = idx[0]

    def fun(t):
        return float(op.moments(np.asarray(origin + t * d))["f"]) - 1.0

    t0 = brentq(fun, ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    z0 = origin + t0 * d
    if abs(fun(t0)) > EDGE_TOL:
        z0 = refine_edge(op, z0)
    return edge_point(op, z0, N, C1, sigma_kw=sigma_kw)


def quadratic_form_Q(A, z0: complex, check: bool = True) -> np.ndarray:
    """Symmetric 2x2 matrix ``Q`` with ``Q[u] = u^T Q u`` at a critical edge."""
    op = _op(A)
    if check:
        cls = edge_point(op, z0).cls
        if cls != "quadratic":
            raise BrownError(f"quadratic form requested at a {cls} edge")
    mom = moments(op, z0)
    H = hessian_f(op, z0)
    I4, dd = float(mom["I4"]), float(mom["dd"])
    return dd / (2 * np.pi * I4) * H + (H.T @ H) / (4 * np.pi * I4)


def quadratic_edge_diag(bracket=(0.5, 2.0)):
    """``A = diag(a, -a)`` with ``a`` tuned so that ``z0 = 0`` is a critical edge.

    ``I3(0)`` vanishes by symmetry for every ``a``; ``a`` is fixed by ``f_A(0) = 1``.
    Returns ``(A, z0)``.
    """
    def g(a):
        return f_A(np.diag([a, -a]), 0.0) - 1.0

    a = brentq(g, *bracket, xtol=1e-15)
    return np.diag([a, -a]).astype(complex), 0.0j


# ---------------------------------------------------------------------------
# fluctuation scale


def sigma_f_closed(A, z, N: int) -> float:
    """``N^{-1/2} / (N^{-1/4} + |grad f_A(z)|)``."""
    g = abs(grad_f(A, z))
    return float(N ** -0.5 / (N ** -0.25 + g))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _ray_breaks(op, z, sigma, thetas, n_probe=65):
    """Support-boundary crossings along each ray (split points for the radial rule)."""
    r = np.linspace(0.0, sigma, n_probe)
    pts = z + r[None, :] * np.exp(1j * thetas)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = op.moments(pts)["f"]
    f = np.where(np.isfinite(f), f, 1e300) - 1.0
    out = []
    for j, th in enumerate(thetas):
        br = [0.0]
        sc = np.flatnonzero(np.sign(f[j, :-1]) != np.sign(f[j, 1:]))
        d = np.exp(1j * th)
        for i in sc:
            try:
                t = brentq(lambda t: float(op.moments(np.asarray(z + t * d))["f"]) - 1.0,
                           r[i], r[i + 1], xtol=1e-14)
            except ValueError:
                t = 0.5 * (r[i] + r[i + 1])
            br.append(t)
        br.append(sigma)
        out.append(np.array(br))
    return out


def disk_mass(A, z: complex, sigma: float, n_angles: int = 32, h: float | None = None,
              n_sub: int = 2) -> float:
    """Brown mass of the disk ``D(z, sigma)`` by polar quadrature of :func:`density`."""
    op = _op(A)
    if h is None:
        h = float(np.clip(sigma / 50.0, 1e-5, 1e-3))
    thetas = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    breaks = _ray_breaks(op, z, sigma, thetas)
    nodes, wts = [], []
    for th, br in zip(thetas, breaks):
        # refine each crossing-delimited piece into n_sub Gauss panels
        edges = np.concatenate([np.linspace(a, b, n_sub + 1)[:-1] for a, b in zip(br[:-1], br[1:])]
                               + [[br[-1]]])
        a, b = edges[:-1, None], edges[1:, None]
        r = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X
        wr = 0.5 * (b - a) * _GL_W * r
        nodes.append((z + r * np.exp(1j * th)).ravel())
        wts.append(wr.ravel())
    nodes = np.concatenate(nodes)
    wts = np.concatenate(wts)
    rho = density(op, nodes, h=h)
    return float(np.sum(rho * wts) * (2 * np.pi / n_angles))


def sigma_f(A, z: complex, N: int, n_angles: int = 32, rtol: float = 1e-6, h: float | None = None) -> float:
    """Radius of the disk around ``z`` carrying Brown mass ``1/N``."""
    op = _op(A)
    target = 1.0 / N
    guess = sigma_f_closed(op, z, N)
    lo = hi = guess
    m_hi = disk_mass(op, z, hi, n_angles, h)
    k = 0
    while m_hi < target:
        lo, hi = hi, hi * 2.0
        m_hi = disk_mass(op, z, hi, n_angles, h)
        k += 1
        if k > 60:
            raise BrownError("density field unavailable near z (zero mass in large disks)")
    m_lo = disk_mass(op, z, lo, n_angles, h) if lo < hi else m_hi
    while m_lo > target:
        hi, lo = lo, lo / 2.0
        m_lo = disk_mass(op, z, lo, n_angles, h)
    if m_lo == target:
        return lo
    g = lambda ls: disk_mass(op, z, np.exp(ls), n_angles, h) - target
    ls = brentq(g, np.log(lo), np.log(hi), xtol=rtol)
    return float(np.exp(ls))


def eta_f(A, z, N: int):
    """Hermitian fluctuation scale ``|f_A(z) - 1|^{1/6} / N^{2/3}``."""
    return np.abs(f_A(A, z) - 1.0) ** (1 / 6) / N ** (2 / 3)


# ---------------------------------------------------------------------------
# grids, contours, Spec_eps


def default_bounds(A, pad: float = 1.5):
    op = _op(A)
    ev = op.eigenvalues()
    if op.is_diagonal:
        lo = complex(ev.real.min() - pad, ev.imag.min() - pad)
        hi = complex(ev.real.max() + pad, ev.imag.max() + pad)
    else:
        R = op.norm + pad
        lo, hi = complex(-R, -R), complex(R, R)
    return lo, hi


def _grid(bounds, h):
    """Lattice from ``(lo, hi)`` complex corners or ``(xmin, xmax, ymin, ymax)``."""
    if len(bounds) == 4:
        lo, hi = complex(bounds[0], bounds[2]), complex(bounds[1], bounds[3])
    else:
        lo, hi = bounds
    xs = np.arange(lo.real, hi.real + 0.5 * h, h)
    ys = np.arange(lo.imag, hi.imag + 0.5 * h, h)
    return xs, ys, xs[None, :] + 1j * ys[:, None]


def _safe_f(op, Z):
    with np.errstate(divide="ignore", invalid="ignore"):
        f = op.moments(Z)["f"]
    return np.where(np.isfinite(f), f, 1e300)


def extract_contours(A, bounds=None, h: float = 0.02, refine: bool = True, f_grid=None, grid=None):
    """Closed polylines of ``f_A = 1`` by marching squares plus Newton refinement."""
    from skimage.measure import find_contours

    op = _op(A)
    if grid is None:
        bounds = bounds or default_bounds(op)
        xs, ys, Z = _grid(bounds, h)
    else:
        xs, ys, Z = grid
    f = _safe_f(op, Z) if f_grid is None else f_grid
    # log scale keeps marching squares well conditioned near the poles of f
    lines = find_contours(np.log(f), 0.0)
    out = []
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    for ln in lines:
        zc = xs[0] + ln[:, 1] * hx + 1j * (ys[0] + ln[:, 0] * hy)
        if refine:
            zc = _refine_many(op, zc)
        out.append(zc)
    return out


def _refine_many(op, zc, tol=EDGE_TOL, max_iter=30):
    zc = zc.copy()
    for _ in range(max_iter):
        mom = op.moments(zc)
        r = mom["f"] - 1.0
        g = 2.0 * np.conj(mom["I3"])
        ok = np.abs(r) <= tol
        if np.all(ok | (np.abs(g) < 1e-8)):
            break
        step = np.where(ok | (np.abs(g) < 1e-8), 0.0, r * g / np.maximum(np.abs(g) ** 2, 1e-300))
        # damp large steps (critical points, poor initial guesses)
        big = np.abs(step) > 0.05
        step = np.where(big, 0.05 * step / np.maximum(np.abs(step), 1e-300), step)
        zc = zc - step
    return zc


@dataclass
class BrownField:
    xs: np.ndarray
    ys: np.ndarray
    grid: np.ndarray
    h: float
    f_vals: np.ndarray
    density_vals: np.ndarray
    potential_vals: np.ndarray
    support_mask: np.ndarray
    contour: list

    @property
    def total_mass(self) -> float:
        return float(self.density_vals.sum() * self.h * self.h)

    def rows(self):
        """(re_z, im_z, f, density, in_support) rows for CSV export."""
        Z = self.grid.ravel()
        return np.column_stack([Z.real, Z.imag, self.f_vals.ravel(), self.density_vals.ravel(),
                                self.support_mask.ravel().astype(float)])


def brown_field(A, bounds=None, h: float = 0.02, fd_h: float = 1e-3) -> BrownField:
    op = _op(A)
    bounds = bounds or default_bounds(op)
    xs, ys, Z = _grid(bounds, h)
    f = _safe_f(op, Z)
    # nudge grid nodes that land exactly on an atom of a diagonal A
    s, w = op.svals(Z)
    on_atom = np.min(s, axis=-1) < 1e-9 + 2 * fd_h
    Zd = np.where(on_atom, Z + (3 * fd_h) * (1 + 1j), Z)
    rho = density(op, Zd, h=fd_h)
    s, w = op.svals(Zd)
    pot = log_potential_closed(s, w)
    contour = extract_contours(op, grid=(xs, ys, Z), f_grid=f)
    return BrownField(xs, ys, Z, h, f, rho, pot, f > 1.0, contour)


def points_in_polygon(points, poly) -> np.ndarray:
    """Crossing-number test; ``poly`` is a closed or open complex polyline."""
    p = np.asarray(points, dtype=complex).ravel()
    v = np.asarray(poly, dtype=complex)
    if v[0] == v[-1]:
        v = v[:-1]
    a, b = v, np.roll(v, -1)
    px, py = p.real[:, None], p.imag[:, None]
    ax, ay, bx, by = a.real[None], a.imag[None], b.real[None], b.imag[None]
    cond = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (py - ay) * (bx - ax) / (by - ay)
    cross = cond & (px < xint)
    return (np.count_nonzero(cross, axis=1) % 2 == 1).reshape(np.shape(points))


def _polygon_area(v):
    x, y = v.real, v.imag
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass
class SpecEps:
    """Support of the Brown measure fattened by ``N^eps * sigma_f`` disks along its boundary."""

    A: Deformation
    N: int
    eps: float
    contours: list
    sigma: list
    labels: np.ndarray  # cluster label per contour polyline
    snap: float = 1e-9
    _areas: np.ndarray = dc_field(default=None, repr=False)

    @property
    def radius(self):
        return [self.N ** self.eps * s for s in self.sigma]

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def _areas_(self):
        if self._areas is None:
            self._areas = np.array([_polygon_area(c) for c in self.contours])
        return self._areas

    def normalized_distance(self, points):
        """``min_c |p - c| / (N^eps sigma_f(c))`` per contour polyline; shape (n_pts, n_lines)."""
        p = np.asarray(points, dtype=complex).ravel()
        out = np.empty((p.size, len(self.contours)))
        for j, (c, r) in enumerate(zip(self.contours, self.radius)):
            # chunk to bound memory
            best = np.full(p.size, np.inf)
            for k in range(0, c.size, 512):
                d = np.abs(p[:, None] - c[None, k:k + 512]) / r[None, k:k + 512]
                best = np.minimum(best, d.min(axis=1))
            out[:, j] = best
        return out

    def in_support(self, points):
        p = np.asarray(points, dtype=complex)
        return _safe_f(self.A, p) > 1.0

    def contains(self, points):
        p = np.asarray(points, dtype=complex)
        inside = self.in_support(p).ravel()
        if len(self.contours):
            near = self.normalized_distance(p).min(axis=1) < 1.0
            inside = inside | near
        return inside.reshape(p.shape)

    def assign(self, points):
        """Cluster label per point (-1 outside Spec_eps) and an ambiguity flag."""
        p = np.asarray(points, dtype=complex).ravel()
        lab = np.full(p.size, -1)
        amb = np.zeros(p.size, dtype=bool)
        if not len(self.contours):
            return lab, amb
        supp = self.in_support(p)
        nd = self.normalized_distance(p)
        areas = self._areas_()
        inside = np.column_stack([points_in_polygon(p, c) for c in self.contours])
        for i in range(p.size):
            if supp[i]:
                cand = np.flatnonzero(inside[i])
                if cand.size:
                    lab[i] = self.labels[cand[np.argmin(areas[cand])]]
                    continue
            j = int(np.argmin(nd[i]))
            if nd[i, j] < 1.0:
                lab[i] = self.labels[j]
            amb[i] = abs(nd[i, j] - 1.0) <= self.snap
        return lab, amb

    def expected_counts(self) -> np.ndarray:
        """``|Spec(A) ∩ C|`` for each cluster ``C``."""
        op = self.A
        if op.is_diagonal:
            pts = op.atoms
            mult = np.rint(op.weights * op.N).astype(int)
        else:
            pts = op.eigenvalues()
            mult = np.ones(pts.size, dtype=int)
        lab, _ = self.assign(pts)
        out = np.zeros(self.n_clusters, dtype=int)
        for l, m in zip(lab, mult):
            if l >= 0:
                out[l] += m
        return out

    def fc_exponent(self, test_points) -> float:
        """Fitted ``c`` in ``min (1 - f_A) >= N^{-1/2 + c*eps}`` over test points outside Spec_eps."""
        p = np.asarray(test_points, dtype=complex).ravel()
        out = p[~self.contains(p)]
        if out.size == 0:
            return np.inf
        margin = np.min(1.0 - _safe_f(self.A, out))
        if margin <= 0:
            return -np.inf
        return float((np.log(margin) / np.log(self.N) + 0.5) / self.eps)


def _periodic_interp(c, idx, vals):
    """Interpolate samples taken at vertex indices ``idx`` along a closed polyline by arc length."""
    seg = np.abs(np.diff(c))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    xa = arc[idx]
    closed = np.abs(c[0] - c[-1]) < 1e-12
    if closed:
        xa = np.concatenate([xa, xa[:1] + total])
        vals = np.concatenate([vals, vals[:1]])
        return np.interp(arc, xa, vals, period=None)
    return np.interp(arc, xa, vals)


def spec_eps(A, N: int, eps: float, bounds=None, h: float = 0.02, max_sigma_points: int = 48,
             sigma_kw: dict | None = None) -> SpecEps:
    """Build Spec_eps from the refined support contour and sampled ``sigma_f``."""
    op = _op(A)
    contours = extract_contours(op, bounds, h)
    contours = [c for c in contours if c.size >= 4]
    if not contours:
        raise BrownError("empty support contour")
    sig = []
    for c in contours:
        n = c.size - 1 if np.abs(c[0] - c[-1]) < 1e-12 else c.size
        k = min(n, max_sigma_points)
        idx = np.unique(np.linspace(0, n - 1, k).round().astype(int))
        vals = np.array([sigma_f(op, c[i], N, **(sigma_kw or {})) for i in idx])
        sig.append(_periodic_interp(c, idx, vals))
    radius = [N ** eps * s for s in sig]
    labels = _merge_clusters(contours, radius)
    return SpecEps(op, N, eps, contours, sig, labels)


def _merge_clusters(contours, radius):
    n = len(contours)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            ci, cj = contours[i], contours[j]
            d = np.abs(ci[:, None] - cj[None, :])
            overlap = np.any(d < radius[i][:, None] + radius[j][None, :])
            nested = points_in_polygon(cj[:1], ci)[0] or points_in_polygon(ci[:1], cj)[0]
            if overlap or nested:
                parent[find(i)] = find(j)
    roots = sorted({find(i) for i in range(n)})
    remap = {r: k for k, r in enumerate(roots)}
    return np.array([remap[find(i)] for i in range(n)])
