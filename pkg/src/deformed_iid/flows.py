"""Deformation paths, the characteristic eta-flow and the zig-zag scale schedule."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .brown import BrownError, moments
from .ensembles import Deformation
from .mde import im_trace, solve_v, solve_v_zero

DEFAULT_DELTA = 0.005
DEFAULT_C_FRAK = 0.05
N_SAMPLES = 512


class PathError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scaling parameters


@dataclass(frozen=True)
class ScalingParams:
    I3: complex
    I4: float
    c: float
    gamma: complex
    eta1: float
    eta: float
    Psi: float
    delta: float

    @property
    def delta_admissible(self) -> bool:
        return 0 < self.delta < 0.01


def scaling_params(calA, N: int | None = None, delta: float = DEFAULT_DELTA,
                   eta1: float | None = None) -> ScalingParams:
    """``I3, I4, c = I4^{-1/4}, gamma = -I4^{-1/2} I3`` and ``eta = eta1 / c``.

    ``eta1`` defaults to ``N^{-3/4-delta}``; ``Psi = 1/(N eta1)``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    op = calA if isinstance(calA, Deformation) else Deformation(calA)
    mom = moments(op, 0.0)
    I3, I4 = complex(mom["I3"]), float(mom["I4"])
    if N is None:
        N = op.N
    if eta1 is None:
        eta1 = N ** (-0.75 - delta)
    c = I4 ** -0.25
    return ScalingParams(I3, I4, c, -I3 / np.sqrt(I4), eta1, eta1 / c, 1.0 / (N * eta1), delta)


# ---------------------------------------------------------------------------
# paths


@dataclass
class PathSpec:
    """Samples of ``calA_t = <|A - zhat_t|^{-2}>^{1/2} (A - zhat_t)``.

    The matrices themselves are rebuilt on demand from ``zhat`` and ``scale``;
    at ``t = 1`` the path ends at ``-z1`` (``zhat`` is infinite there).
    """

    A: Deformation
    z0: complex
    z1: complex
    regime: str
    t: np.ndarray
    zhat: np.ndarray
    scale: np.ndarray
    norm_f: np.ndarray  # <|calA_t|^{-2}>
    I3: np.ndarray
    I4: np.ndarray
    c: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    op_norm: np.ndarray
    inv_norm: np.ndarray
    dA_dt: np.ndarray
    check_report: dict = dc_field(default_factory=dict)

    def matrix(self, i: int) -> np.ndarray:
        """Dense ``calA_t`` at sample ``i``."""
        N = self.A.N
        if not np.isfinite(self.zhat[i]):
            return -self.z1 * np.eye(N, dtype=complex)
        if self.A.is_diagonal:
            raise PathError("diagonal deformations are stored by atoms; use .atoms(i)")
        return self.scale[i] * (self.A.matrix - self.zhat[i] * np.eye(N))

    def atoms(self, i: int) -> np.ndarray:
        if not np.isfinite(self.zhat[i]):
            return np.full_like(self.A.atoms, -self.z1)
        return self.scale[i] * (self.A.atoms - self.zhat[i])

    def rows(self):
        """CSV rows (t, re/im zhat, I4, c, re/im gamma, eta, re/im theta, norms)."""
        zh = np.where(np.isfinite(self.zhat), self.zhat, np.nan)
        return np.column_stack([self.t, zh.real, zh.imag, self.I4, self.c, self.gamma.real,
                                self.gamma.imag, self.eta, self.theta.real, self.theta.imag,
                                self.op_norm, self.inv_norm, self.dA_dt])

    columns = ("t", "re_zhat", "im_zhat", "I4", "c", "re_gamma", "im_gamma", "eta",
               "re_theta", "im_theta", "norm", "inv_norm", "dA_dt")


def _time_grid(n: int, extra=()):
    t = np.linspace(0.0, 1.0, n)
    # refine near t = 1 where zhat blows up
    ref = 1.0 - (t[1] - t[0]) * 2.0 ** -np.arange(1, 11)
    return np.unique(np.concatenate([t, ref, np.asarray(extra, dtype=float)]))


def _evaluate(op: Deformation, zhat: np.ndarray, z1: complex, N: int, eta1: float):
    """Per-sample path quantities; infinite zhat means the endpoint ``-z1``."""
    fin = np.isfinite(zhat)
    zf = zhat[fin]
    mom = moments(op, zf)
    s = np.sqrt(mom["f"])  # scale = <|A - zhat|^{-2}>^{1/2}
    n = zhat.size
    out = {k: np.empty(n, dtype=complex if k in ("I3", "theta") else float)
           for k in ("scale", "norm_f", "I3", "I4", "theta", "op_norm", "inv_norm")}
    out["scale"][fin] = s
    out["norm_f"][fin] = mom["f"] / s ** 2
    out["I3"][fin] = mom["I3"] / s ** 3
    out["I4"][fin] = mom["I4"] / s ** 4
    out["inv_norm"][fin] = mom["inv_norm"] / s
    out["theta"][fin] = 1.0 - mom["tt"] / s ** 2 if op.is_real else np.nan
    if op.is_diagonal:
        out["op_norm"][fin] = s * np.max(np.abs(op.atoms - zf[:, None]), axis=1)
    else:
        eye = np.eye(op.N)
        out["op_norm"][fin] = [si * np.linalg.norm(op.matrix - zz * eye, 2) for si, zz in zip(s, zf)]
    # endpoint -z1 Id
    inf = ~fin
    out["scale"][inf] = 0.0
    out["norm_f"][inf] = 1.0
    out["I3"][inf] = -np.conj(z1)
    out["I4"][inf] = 1.0
    out["inv_norm"][inf] = 1.0
    out["op_norm"][inf] = 1.0
    out["theta"][inf] = (1.0 - 1.0 / z1 ** 2) if op.is_real else np.nan
    out["c"] = out["I4"] ** -0.25
    out["gamma"] = -out["I3"] / np.sqrt(out["I4"])
    out["eta"] = eta1 / out["c"]
    return out


def _path_derivative(op: Deformation, t, zhat, scale, z1):
    """Finite-difference ``||d calA_t / dt||`` between consecutive samples."""
    n = t.size
    d = np.zeros(n)
    mats = []
    for i in range(n):
        if op.is_diagonal:
            mats.append(np.full_like(op.atoms, -z1) if not np.isfinite(zhat[i])
                        else scale[i] * (op.atoms - zhat[i]))
        else:
            mats.append(-z1 * np.eye(op.N) if not np.isfinite(zhat[i])
                        else scale[i] * (op.matrix - zhat[i] * np.eye(op.N)))
    for i in range(n - 1):
        diff = mats[i + 1] - mats[i]
        nrm = np.max(np.abs(diff)) if op.is_diagonal else np.linalg.norm(diff, 2)
        d[i] = nrm / (t[i + 1] - t[i])
    d[-1] = d[-2]
    return d


def _abdd_report(q, dA, N, C5, regime):
    logN = np.log(N)
    absI3 = np.abs(q["I3"])
    fit = {
        "max_norm": float(np.max(q["op_norm"])),
        "max_inv_norm": float(np.max(q["inv_norm"])),
        "min_abs_I3": float(np.min(absI3)),
        "max_abs_I3": float(np.max(absI3)),
        "max_I4": float(np.max(q["I4"])),
        "min_I4": float(np.min(q["I4"])),
        "max_dA_dt": float(np.max(dA)),
        "max_norm_f_dev": float(np.max(np.abs(q["norm_f"] - 1.0))),
    }
    C5_fit = max(fit["max_norm"], fit["max_inv_norm"], 1.0 / fit["min_abs_I3"], fit["max_abs_I3"],
                 fit["max_I4"] ** 0.25, fit["max_dA_dt"] / logN)
    fit.update({
        "C5": C5, "C5_fit": float(C5_fit), "regime": regime,
        "norm_f_ok": fit["max_norm_f_dev"] <= 1e-10,
        "I4_ok": bool(fit["min_I4"] >= 1 - 1e-10 and fit["max_I4"] <= C5 ** 4),
        "bounds_ok": bool(C5_fit <= C5),
    })
    return fit




def _segment_ok(op, z0, target, C1, n=200):
    s = np.linspace(0.0, 1.0, n)[1:]
    pts = z0 + s * (target - z0)
    try:
        mom = moments(op, pts)
    except BrownError:
        return False, np.inf
    if np.any(mom["f"] >= 1.0) or np.any(mom["inv_norm"] >= C1):
        return False, np.inf
    score = float(np.max(mom["inv_norm"]) + 1.0 / max(np.min(np.abs(mom["I3"])), 1e-300))
    return True, score


def escape_direction(A, z0: complex, C_dd: float | None = None, C1: float = 100.0, n_angles: int = 16,
                     half_plane: int = 0) -> complex:
    """Unit ``z1`` so that the segment from ``z0`` to ``C'' z1`` stays outside the support.

    Candidates start at the outward normal ``-grad f`` and rotate in steps of
    ``2 pi / n_angles`` (alternating sides). ``half_plane=+1/-1`` restricts to
    ``Im z1 >= 0`` / ``<= 0``.
    """
    op = A if isinstance(A, Deformation) else Deformation(A)
    C_dd = C_dd or 2.0 * (1.0 + op.norm)
    g = 2 * np.conj(complex(moments(op, z0)["I3"]))
    base = np.angle(-g) if abs(g) > 0 else np.angle(z0) if z0 != 0 else 0.0
    order = [0]
    for k in range(1, n_angles // 2 + 1):
        order += [k, -k]
    for k in order[:n_angles]:
        z1 = np.exp(1j * (base + 2 * np.pi * k / n_angles))
        if half_plane and np.sign(z1.imag) * half_plane < 0 and abs(z1.imag) > 1e-12:
            continue
        ok, _ = _segment_ok(op, z0, C_dd * z1, C1)
        if ok:
            return complex(z1)
    raise PathError(f"no straight escape from z0={z0} avoids the support; supply waypoints")


def _segment_dist(a, b, pts):
    """Distance from each of ``pts`` to the segment ``[a, b]``."""
    d = b - a
    if d == 0:
        return np.abs(pts - a)
    u = np.clip(np.real((pts - a) * np.conj(d)) / abs(d) ** 2, 0.0, 1.0)
    return np.abs(pts - (a + u * d))


def _polyline(pts, s):
    """Point at fraction ``s`` (arc length) of a complex polyline."""
    pts = np.asarray(pts, dtype=complex)
    seg = np.abs(np.diff(pts))
    arc = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
    return np.interp(s, arc, pts.real) + 1j * np.interp(s, arc, pts.imag)


def complex_path(A, z0: complex, waypoints=None, z1: complex | None = None, N: int | None = None,
                 n_samples: int = N_SAMPLES, C5: float = 1e3, delta: float = DEFAULT_DELTA,
                 C_dd: float | None = None) -> PathSpec:
    """Radial-escape path: segment ``z0 -> C'' z1`` on [0, 1/2], then the ray ``C'' z1 / (2(1-t))``."""
    op = A if isinstance(A, Deformation) else Deformation(A)
    z0 = complex(z0)
    N = N or op.N
    C_dd = C_dd or 2.0 * (1.0 + op.norm)
    if z1 is None:
        z1 = escape_direction(op, z0, C_dd) if waypoints is None else None
    if waypoints is not None:
        wp = [complex(w) for w in waypoints]
        if z1 is None:
            z1 = wp[-1] / abs(wp[-1])
        verts = [z0] + wp + [C_dd * z1]
    else:
        verts = [z0, C_dd * z1]
    z1 = complex(z1) / abs(z1)
    ev = op.eigenvalues()
    for a, b in zip(verts[:-1], verts[1:]):
        if np.min(_segment_dist(a, b, ev)) <= 1e-12 * (1 + op.norm):
            raise PathError(f"path segment {a} -> {b} crosses Spec(A)")
    t = _time_grid(n_samples, extra=[0.5])
    zhat = np.empty(t.size, dtype=complex)
    first = t <= 0.5
    zhat[first] = _polyline(verts, 2 * t[first])
    second = ~first
    with np.errstate(divide="ignore", invalid="ignore"):
        zhat[second] = C_dd * z1 / (2 * (1 - t[second]))
    zhat[t == 1.0] = np.inf
    try:
        q = _evaluate(op, zhat, z1, N, N ** (-0.75 - delta))
    except BrownError as exc:
        raise PathError(f"path crosses Spec(A): {exc}") from exc
    dA = _path_derivative(op, t, zhat, q["scale"], z1)
    rep = _abdd_report(q, dA, N, C5, "complex")
    rep["outside_support"] = bool(np.all(_f_on(op, zhat[1:]) < 1.0 + 1e-10))
    return _spec(op, z0, z1, "complex", t, zhat, q, dA, rep)


def _f_on(op, zhat):
    fin = np.isfinite(zhat)
    out = np.zeros(zhat.size)
    out[fin] = moments(op, zhat[fin])["f"]
    return out


def _spec(op, z0, z1, regime, t, zhat, q, dA, rep):
    return PathSpec(op, z0, z1, regime, t, zhat, q["scale"], q["norm_f"], q["I3"], q["I4"], q["c"],
                    q["gamma"], q["eta"], q["theta"], q["op_norm"], q["inv_norm"], dA, rep)


def _h_real(op, x):
    """``<|A-x|^{-4}>^{-1/2} <(A-x)^{-2}(A-x)^{-T}>`` for real ``x``."""
    mom = moments(op, np.asarray(x, dtype=float).astype(complex))
    return np.real(mom["I3"]) / np.sqrt(mom["I4"])


def real_path(A, z0: complex, N: int, c_frak: float = DEFAULT_C_FRAK, n_samples: int = N_SAMPLES,
              tau: float | None = None, C5: float = 1e3, delta: float = DEFAULT_DELTA,
              variant: str = "invariant") -> PathSpec:
    """Path for real ``A`` in regime A1 (lifted by ``i tau``) or A2 (real-axis escape).

    In regime A2 the imaginary part follows ``Im zhat = h(x0)/h(x) Im z0`` with
    ``h(x) = <|A-x|^{-4}>^{-1/2} <(A-x)^{-2}(A-x)^{-T}>``, which keeps
    ``I4^{-1/2} theta`` constant to first order.  ``variant="literal"``
    uses the ratio ``f(x)/f(x0)`` with ``f = h / <|A-x|^{-2}>`` instead.
    """
    op = A if isinstance(A, Deformation) else Deformation(A)
    if not op.is_real:
        raise PathError("real_path requires a real deformation")
    z0 = complex(z0)
    y0 = z0.imag
    thr = N ** (-0.5 + c_frak)
    eta1 = N ** (-0.75 - delta)
    if abs(y0) >= thr:
        spec = _real_path_a1(op, z0, N, n_samples, tau, C5, eta1)
    else:
        spec = _real_path_a2(op, z0, N, n_samples, C5, eta1, variant, c_frak)
    spec.check_report["threshold"] = thr
    spec.check_report["c_frak"] = c_frak
    return spec


def _real_path_a1(op, z0, N, n, tau, C5, eta1):
    y0 = z0.imag
    sgn = 1.0 if y0 > 0 else -1.0
    C_dd = 2.0 * (1.0 + op.norm)
    z1 = escape_direction(op, z0, C_dd, half_plane=int(sgn))
    seg = lambda s: z0 + s * (C_dd * z1 - z0)
    if tau is None:
        ss = np.linspace(0, 1, 400)
        ev = op.eigenvalues()
        dist = np.min(np.abs(seg(ss)[:, None] - ev[None, :]))
        tau = 0.1 * dist
    tau = sgn * abs(tau)
    t = _time_grid(n, extra=[1 / 3, 2 / 3])
    zhat = np.empty(t.size, dtype=complex)
    p1 = t <= 1 / 3
    p2 = (t > 1 / 3) & (t <= 2 / 3)
    p3 = t > 2 / 3
    zhat[p1] = z0.real + 1j * (tau + y0) * (y0 / (tau + y0)) ** (1 - 3 * t[p1])
    zhat[p2] = seg(3 * t[p2] - 1) + 1j * tau
    with np.errstate(divide="ignore"):
        zhat[p3] = seg(1.0) / (3 * (1 - t[p3])) + 1j * tau
    zhat[t == 1.0] = np.inf
    q = _evaluate(op, zhat, z1, N, eta1)
    dA = _path_derivative(op, t, zhat, q["scale"], z1)
    rep = _abdd_report(q, dA, N, C5, "realA1")
    th = q["theta"]
    dth = _fd(t, th)
    lg = np.log(N)
    min_th = float(np.min(np.abs(th)))
    max_rel = float(np.max(np.abs(dth / th ** 2)))
    c1 = np.log(min_th) / lg + 0.5
    c2 = 0.5 - np.log(max_rel) / lg
    rep.update({"tau": float(abs(tau)), "min_abs_theta": min_th, "max_dtheta_over_theta2": max_rel,
                "c1_fit": float(c1), "c2_fit": float(c2), "regime_ok": bool(c1 > 0 and c2 > 0),
                "outside_support": bool(np.all(_f_on(op, zhat[1:]) < 1.0 + 1e-10))})
    return _spec(op, z0, z1, "realA1", t, zhat, q, dA, rep)


def _fd(t, y):
    return np.gradient(y, t, edge_order=2)


def _real_path_a2(op, z0, N, n, C5, eta1, variant, c_frak):
    x0, y0 = z0.real, z0.imag
    # escape along the real axis on the side where f_A < 1
    probe = np.array([x0 + 1e-3, x0 - 1e-3])
    fp = _f_on(op, probe.astype(complex))
    direction = 1.0 if fp[0] <= fp[1] else -1.0
    xs = x0 + direction * np.geomspace(1e-6, 4 * (1 + op.norm), 400)
    if np.any(_f_on(op, xs.astype(complex)) >= 1.0):
        raise PathError("no unbounded real escape from z0 outside the support")
    t = _time_grid(n)
    with np.errstate(divide="ignore"):
        x = x0 + direction * t / (1 - t)
    fin = np.isfinite(x)
    h0 = _h_real(op, x0)
    ratio = np.empty(t.size)
    if variant == "invariant":
        ratio[fin] = h0 / _h_real(op, x[fin])
        lim = -h0 * direction  # h(x) ~ -1/x
    elif variant == "literal":
        fx = lambda xx: _h_real(op, xx) / moments(op, np.asarray(xx, dtype=complex))["f"]
        ratio[fin] = fx(x[fin]) / fx(x0)
        lim = -1.0 / fx(x0) * direction
    else:
        raise ValueError(f"unknown variant {variant!r}")
    zhat = np.full(t.size, np.inf, dtype=complex)
    zhat[fin] = x[fin] + 1j * ratio[fin] * y0
    z1 = direction * (1.0 + 1j * lim * y0 * direction)
    # the endpoint -z1' is the limit of -zhat/|zhat|
    z1 = z1 / abs(z1)
    q = _evaluate(op, zhat, z1, N, eta1)
    dA = _path_derivative(op, t, zhat, q["scale"], z1)
    rep = _abdd_report(q, dA, N, C5, "realA2")
    th = q["theta"]
    inv = th / np.sqrt(q["I4"])
    dinv = _fd(t, inv)
    im_parts = np.where(fin, -q["scale"] * zhat.imag, -z1.imag)
    dim = np.abs(_fd(t, im_parts))
    lg = np.log(N)
    max_th = float(np.max(np.abs(th)))
    max_dinv = float(np.max(np.abs(dinv)))
    max_dim = float(np.max(dim))
    c1 = np.log(max_th) / lg + 0.5  # smallest c1 with |theta| <= N^{-1/2+c1}
    c2 = min(-np.log(max_dinv) / lg - 0.5 if max_dinv > 0 else np.inf,
             -np.log(max_dim) / lg if max_dim > 0 else np.inf)
    gamma0 = float(np.real(q["gamma"][0]))
    rep.update({"variant": variant, "direction": direction,
                "max_abs_theta": max_th, "max_d_I4theta": max_dinv, "max_d_ImA": max_dim,
                "c1_fit": float(c1), "c2_fit": float(c2),
                # theta tracks Im z0 < N^{-1/2+c}; allow c1 up to 2c for the O(1) prefactor
                "regime_ok": bool(c1 <= 2 * c_frak and c2 > 0),
                "im_z1_prime": float(abs(z1.imag)), "gamma0_im_z0": abs(gamma0 * y0),
                "endpoint_dev": float(abs(abs(z1.imag) - abs(gamma0 * y0)))})
    return _spec(op, z0, z1, "realA2", t, zhat, q, dA, rep)


# ---------------------------------------------------------------------------
# characteristic flow


@dataclass
class CharTrajectory:
    t: np.ndarray
    eta: np.ndarray
    m: np.ndarray  # Im<M_t>(i eta_t)
    T_star: float
    hit_zero: bool
    steps: np.ndarray
    v0: float
    m0: float

    @property
    def rho(self):
        return self.m / np.pi

    @property
    def v(self):
        return self.eta + self.m

    def rows(self):
        return np.column_stack([self.t, self.eta, self.m, self.rho])

    columns = ("t", "eta", "im_M", "rho")


def _flow_rhs(s, w, t, eta):
    st = s * np.exp(-t / 2)
    v = float(solve_v(st, eta, w))
    m = float(im_trace(st, w, v))
    return -eta / 2 - m, m


def characteristic_flow(A, z: complex, eta0: float, T_max: float = np.inf, tol: float = 1e-10,
                        h0: float = 1e-2, h_min: float = 1e-8, max_steps: int = 200_000) -> CharTrajectory:
    """RK4 with step halving for ``d eta/dt = -eta/2 - Im<M_{e^{-t/2}(A-z)}(i eta)>``.

    Stops at ``T_max`` or where ``eta`` reaches zero (``T*``, located by
    linear extrapolation from the last accepted state).
    """
    if not eta0 > 0:
        raise ValueError("eta0 must be positive")
    op = A if isinstance(A, Deformation) else Deformation(A)
    s, w = op.svals(np.asarray(z, dtype=complex))
    v0 = float(solve_v(s, eta0, w))
    m0 = float(im_trace(s, w, v0))
    ts, es, ms, hs = [0.0], [eta0], [m0], []
    t, eta, h = 0.0, eta0, h0
    T_star, hit = np.inf, False

    def rk4(t, y, h):
        k1, _ = _flow_rhs(s, w, t, y)
        y2 = y + 0.5 * h * k1
        if y2 <= 0:
            return None
        k2, _ = _flow_rhs(s, w, t + 0.5 * h, y2)
        y3 = y + 0.5 * h * k2
        if y3 <= 0:
            return None
        k3, _ = _flow_rhs(s, w, t + 0.5 * h, y3)
        y4 = y + h * k3
        if y4 <= 0:
            return None
        k4, _ = _flow_rhs(s, w, t + h, y4)
        out = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        return out if out > 0 else None

    for _ in range(max_steps):
        if t >= T_max:
            break
        h = min(h, T_max - t)
        full = rk4(t, eta, h)
        half = rk4(t, eta, h / 2)
        two = rk4(t + h / 2, half, h / 2) if half is not None else None
        if full is None or two is None or abs(two - full) > tol * two:
            if h / 2 < h_min:
                # at the floor: extrapolate linearly to eta = 0
                rate, _ = _flow_rhs(s, w, t, eta)
                T_star = t - eta / rate
                hit = True
                break
            h /= 2
            continue
        t += h
        eta = two + (two - full) / 15.0
        _, m = _flow_rhs(s, w, t, eta)
        ts.append(t)
        es.append(eta)
        ms.append(m)
        hs.append(h)
        if abs(two - full) < tol * two / 32:
            h *= 2
    else:
        raise RuntimeError("characteristic flow exceeded the step budget")
    return CharTrajectory(np.array(ts), np.array(es), np.array(ms), float(T_star), hit, np.array(hs),
                          v0, m0)


def characteristic_closed_form(A, z: complex, eta0: float, t):
    """``v_t = e^{-t/2} v0``, ``m_t = e^{t/2} m0`` and ``T* = log(v0/m0)``."""
    op = A if isinstance(A, Deformation) else Deformation(A)
    s, w = op.svals(np.asarray(z, dtype=complex))
    v0 = float(solve_v(s, eta0, w))
    m0 = float(im_trace(s, w, v0))
    t = np.asarray(t, dtype=float)
    v = np.exp(-t / 2) * v0
    m = np.exp(t / 2) * m0
    return v - m, m, float(np.log(v0 / m0))


# ---------------------------------------------------------------------------
# zig-zag schedule


@dataclass
class ZigZagSchedule:
    eps: float
    eps0: float
    N: int
    T: float
    eta_in: float
    eta_fin: float
    s_in: float
    s_fin: float
    scales: np.ndarray
    times: np.ndarray
    etas: np.ndarray
    domains: list
    K: int
    reconstruction: np.ndarray  # s(eta_{t_k}, e^{(T-t_k)/2}) / s_k
    eta_ratio_min: float

    @property
    def eta_ratio_bound(self) -> float:
        return self.N ** (-self.eps0 / 100) * np.exp(-self.T)

    def rows(self):
        return np.column_stack([np.arange(self.K + 1), self.scales, self.times, self.etas,
                                self.reconstruction])

    columns = ("k", "s_k", "t_k", "eta_tk", "reconstruction")


def _im_m(s, w, eta, r=1.0):
    sr = s * r
    v = solve_v(sr, eta, w)
    return im_trace(sr, w, v)


def frak_s(s, w, eta, r=1.0):
    """``eta / Im<M_{r calA}(i eta)>``."""
    return eta / _im_m(s, w, eta, r)


def zigzag_schedule(A, z: complex, N: int, eps: float, eps0: float, rtol: float = 1e-13) -> ZigZagSchedule:
    op = A if isinstance(A, Deformation) else Deformation(A)
    s, w = op.svals(np.asarray(z, dtype=complex))
    if np.min(s) <= 0:
        raise ValueError("A - z is singular")
    T = N ** -eps0
    target = N ** eps

    def fin_eq(le):
        eta = np.exp(le)
        return np.log(N * eta * _im_m(s, w, eta) / np.pi) - np.log(target)

    lo, hi = np.log(1e-300 ** 0.05), np.log(1e6)
    while fin_eq(lo) > 0:
        lo -= 10
    eta_fin = float(np.exp(brentq(fin_eq, lo, hi, xtol=1e-15, rtol=1e-15)))
    s_fin = float(frak_s(s, w, eta_fin))

    # shooting: eta_in so that the characteristic from (e^{T/2} calA, eta_in) lands at eta_fin
    eT = np.exp(T / 2)

    def land(le):
        eta = np.exp(le)
        v0 = float(solve_v(s * eT, eta, w))
        m0 = float(im_trace(s * eT, w, v0))
        return (np.exp(-T / 2) * v0 - np.exp(T / 2) * m0) - eta_fin

    a = np.log(eta_fin)
    b = a + 1.0
    k = 0
    while land(b) < 0:
        b += 2.0
        k += 1
        if k > 200:
            raise RuntimeError("shooting failed to bracket eta_in")
    if land(a) > 0:
        raise RuntimeError("shooting failed to bracket eta_in")
    eta_in = float(np.exp(brentq(land, a, b, xtol=1e-16, rtol=rtol)))
    v0 = float(solve_v(s * eT, eta_in, w))
    m0 = float(im_trace(s * eT, w, v0))
    s_in = eta_in / m0

    Kmax = int(np.floor(100 / eps0))
    scales = [s_in]
    kk = 0
    while scales[-1] > s_fin:
        kk += 1
        scales.append(max(s_in * N ** (-kk * eps0 / 100), s_fin))
        if kk > Kmax:
            raise RuntimeError(f"schedule needs more than 100/eps0 = {Kmax} steps")
    scales = np.array(scales)
    K = len(scales) - 1

    def eta_t(t):
        return np.exp(-t / 2) * v0 - np.exp(t / 2) * m0

    def s_at(t):
        return float(frak_s(s, w, eta_t(t), np.exp((T - t) / 2)))

    times = np.empty(K + 1)
    times[0] = 0.0
    for k in range(1, K + 1):
        if k == K:
            times[k] = T
            continue
        g = lambda t, sk=scales[k]: s_at(t) / sk - 1.0
        times[k] = brentq(g, times[k - 1], T, xtol=1e-15 * max(T, 1e-300), rtol=1e-15)
    etas = eta_t(times)
    recon = np.array([s_at(tk) for tk in times]) / scales
    ratios = etas[1:] / etas[:-1] if K else np.array([1.0])
    domains = [(float(e), (1.0, float(np.exp((T - tk) / 2)))) for e, tk in zip(etas, times)]
    return ZigZagSchedule(eps, eps0, N, T, eta_in, eta_fin, s_in, s_fin, scales, times, etas, domains, K,
                          recon, float(np.min(ratios)))


def t_k_closed_form(sched: ZigZagSchedule, A, z):
    """``t_k = log(v0 / (m0 (1 + s_k)))`` from the exact propagator."""
    op = A if isinstance(A, Deformation) else Deformation(A)
    s, w = op.svals(np.asarray(z, dtype=complex))
    eT = np.exp(sched.T / 2)
    v0 = float(solve_v(s * eT, sched.eta_in, w))
    m0 = float(im_trace(s * eT, w, v0))
    return np.log(v0 / (m0 * (1 + sched.scales)))


__all__ = [
    "PathError", "ScalingParams", "scaling_params", "PathSpec", "escape_direction", "complex_path",
    "real_path", "CharTrajectory", "characteristic_flow", "characteristic_closed_form", "ZigZagSchedule",
    "zigzag_schedule", "frak_s", "t_k_closed_form", "solve_v_zero",
]
