"""Matrix Dyson equation for the Hermitization of ``A - z`` on the imaginary axis.

On ``w = i*eta`` the 2N x 2N equation collapses to one scalar equation for
``v = eta + Im<M>``::

    v - eta = sum_i w_i * v / (s_i^2 + v^2)

where ``s_i`` are the singular values of ``A - z`` (weights ``w_i`` sum to one).
The full matrix is then ``M = (H_{A-z} - i v)^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import Deformation

RESIDUAL_TOL = 1e-12
MAX_ITER = 10_000
_EPS = np.finfo(float).eps


class MdeConvergenceError(RuntimeError):
    def __init__(self, msg, residual=np.nan):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class MdeSolution:
    z: complex
    eta: float
    v: float
    rho: float
    residual: float
    svals: np.ndarray
    weights: np.ndarray
    iterations: int = 0

    @property
    def m(self) -> float:
        """``Im<M>`` (equals ``v - eta``)."""
        return self.v - self.eta


@dataclass(frozen=True)
class MdeMatrix:
    M: np.ndarray
    owner: MdeSolution

    @property
    def trace_avg(self) -> complex:
        return complex(np.trace(self.M) / self.M.shape[0])


# ---------------------------------------------------------------------------
# scalar solver


def _phi_psi(s2, w, v):
    d = 1.0 / (s2 + (v * v)[..., None])
    return d @ w, (d * d) @ w


def mde_residual(s, w, eta, v):
    """``v - eta - sum w v/(s^2+v^2)`` (vectorised)."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    phi = (1.0 / (s ** 2 + (v * v)[..., None])) @ w
    return v - eta - v * phi


def im_trace(s, w, v):
    """``Im<M> = v <1/(s^2+v^2)>``; avoids the cancellation in ``v - eta`` at large eta."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    return v * ((1.0 / (s ** 2 + (v * v)[..., None])) @ w)


def _as_weights(s, weights):
    n = s.shape[-1]
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {w.shape}")
    return w / w.sum()


def solve_v(s, eta, weights=None, tol=RESIDUAL_TOL, max_iter=MAX_ITER, return_info=False):
    """Vectorised solution ``v`` of the scalar MDE.

    ``s`` has shape ``(..., n)``; ``eta`` broadcasts against ``s.shape[:-1]``.
    Safeguarded Newton on ``g(v) = v(1 - phi(v)) - eta`` inside the bracket
    ``[eta, (eta + sqrt(eta^2 + 4))/2]`` where the root is unique.
    """
    s = np.asarray(s, dtype=float)
    w = _as_weights(s, weights)
    eta = np.asarray(eta, dtype=float)
    bshape = np.broadcast_shapes(s.shape[:-1], eta.shape)
    s = np.broadcast_to(s, bshape + s.shape[-1:])
    eta = np.broadcast_to(eta, bshape).copy()
    if np.any(~(eta > 0)):
        raise ValueError("eta must be positive (use solve_v_zero for the eta -> 0+ limit)")
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise ValueError("singular values must be finite and nonnegative")
    shape = eta.shape
    s2 = (s ** 2).reshape(-1, s.shape[-1])
    eta = eta.reshape(-1)
    lo = eta.copy()
    hi = 0.5 * (eta + np.sqrt(eta * eta + 4.0))
    smin = np.min(s2, axis=-1) ** 0.5
    with np.errstate(divide="ignore"):
        v = eta + np.minimum(1.0, 1.0 / smin)
    v = np.clip(v, lo, hi)
    v = np.where((v <= lo) | (v >= hi), 0.5 * (lo + hi), v)
    done = np.zeros(v.shape, dtype=bool)
    it = np.zeros(v.shape, dtype=int)
    for k in range(max_iter):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        va, ea, sa = v[act], eta[act], s2[act]
        phi, psi = _phi_psi(sa, w, va)
        g = va * (1.0 - phi) - ea
        dg = 1.0 - phi + 2.0 * va * va * psi
        # shrink the bracket using the sign of g
        neg = g < 0
        lo_a = np.where(neg, va, lo[act])
        hi_a = np.where(neg, hi[act], va)
        with np.errstate(divide="ignore", invalid="ignore"):
            vn = va - g / dg
        bad = ~np.isfinite(vn) | (vn <= lo_a) | (vn >= hi_a) | (dg <= 0)
        vn = np.where(bad, 0.5 * (lo_a + hi_a), vn)
        step = np.abs(vn - va)
        conv = (g == 0) | (step <= 4 * _EPS * va) | (hi_a - lo_a <= 4 * _EPS * va)
        v[act] = np.where(g == 0, va, vn)
        lo[act], hi[act] = lo_a, hi_a
        it[act] = k + 1
        done[act] = conv
    res = np.abs(mde_residual(np.sqrt(s2), w, eta, v))
    bad = (~done) | (res > tol * (1.0 + v))
    if np.any(bad):
        raise MdeConvergenceError(
            f"scalar MDE did not converge in {max_iter} iterations; "
            f"worst residual {np.max(res[bad]):.3e}", float(np.max(res[bad])))
    v = v.reshape(shape)
    if return_info:
        return v, res.reshape(shape), it.reshape(shape)
    return v


def solve_v_zero(s, weights=None, max_iter=MAX_ITER):
    """The ``eta -> 0+`` limit of ``v``.

    ``v = 0`` when ``<1/s^2> <= 1``; otherwise ``v`` is the positive root of
    ``<1/(s^2 + v^2)> = 1`` (which lies in ``(0, 1]``).
    """
    s = np.asarray(s, dtype=float)
    w = _as_weights(s, weights)
    shape = s.shape[:-1]
    s2 = (s ** 2).reshape(-1, s.shape[-1])
    with np.errstate(divide="ignore"):
        f = (1.0 / s2) @ w
    v = np.zeros(s2.shape[0])
    inside = f > 1.0
    idx = np.flatnonzero(inside)
    if idx.size:
        lo = np.zeros(idx.size)
        hi = np.ones(idx.size)
        x = np.full(idx.size, 0.5)
        done = np.zeros(idx.size, dtype=bool)
        for _ in range(max_iter):
            act = np.flatnonzero(~done)
            if act.size == 0:
                break
            xa = x[act]
            phi, psi = _phi_psi(s2[idx[act]], w, xa)
            p = 1.0 - phi
            dp = 2.0 * xa * psi
            neg = p < 0
            lo_a = np.where(neg, xa, lo[act])
            hi_a = np.where(neg, hi[act], xa)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = xa - p / dp
            bad = ~np.isfinite(xn) | (xn <= lo_a) | (xn >= hi_a)
            xn = np.where(bad, 0.5 * (lo_a + hi_a), xn)
            conv = (p == 0) | (np.abs(xn - xa) <= 4 * _EPS * xa) | (hi_a - lo_a <= 4 * _EPS * xa)
            x[act] = np.where(p == 0, xa, xn)
            lo[act], hi[act] = lo_a, hi_a
            done[act] = conv
        if not np.all(done):
            raise MdeConvergenceError("eta -> 0+ limit did not converge")
        v[idx] = x
    return v.reshape(shape)


def solve_scalar(svals, eta: float, weights=None, z: complex = np.nan) -> MdeSolution:
    """Solve the scalar MDE for one set of singular values."""
    s = np.asarray(svals, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("svals must be a non-empty 1-D list")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    w = _as_weights(s, weights)
    order = np.argsort(s)
    s, w = s[order], w[order]
    v, res, it = solve_v(s, eta, w, return_info=True)
    v = float(v)
    return MdeSolution(complex(z), float(eta), v, (v - eta) / np.pi, float(res), s, w, int(it))


def solve_at(A, z: complex, eta: float) -> MdeSolution:
    """Scalar MDE for ``A - z``."""
    op = Deformation(A)
    s, w = op.svals(np.asarray(z))
    return solve_scalar(s, eta, w, z)


# ---------------------------------------------------------------------------
# full matrix


def m_matrix(A, z: complex, eta: float) -> MdeMatrix:
    """Full ``M = (H_{A-z} - i v)^{-1}`` rebuilt from the SVD of ``A - z``."""
    op = Deformation(A)
    N = op.N
    if op.is_diagonal and op.matrix is None:
        B = np.diag(_expand_diag(A) - z)
    else:
        B = op.matrix - z * np.eye(N)
    U, sig, Vh = np.linalg.svd(B)
    sol = solve_scalar(sig, eta, z=z)
    v = sol.v
    den = sig ** 2 + v ** 2
    V = Vh.conj().T
    M = np.empty((2 * N, 2 * N), dtype=complex)
    M[:N, :N] = (U * (1j * v / den)) @ U.conj().T
    M[:N, N:] = (U * (sig / den)) @ Vh
    M[N:, :N] = (V * (sig / den)) @ U.conj().T
    M[N:, N:] = (V * (1j * v / den)) @ Vh
    return MdeMatrix(M, sol)


def _expand_diag(A) -> np.ndarray:
    from .ensembles import DeformedModel

    if isinstance(A, DeformedModel):
        return A.diag if A.is_diagonal else np.diag(A.A)
    A = np.asarray(A, dtype=complex)
    return np.diag(A) if A.ndim == 2 else A


# ---------------------------------------------------------------------------
# log potential


def log_potential_closed(s, w, v0=None) -> np.ndarray:
    """Closed form of ``int_0^inf [Im<M>(i eta) - eta/(1+eta^2)] d eta``.

    With ``v0`` the ``eta -> 0+`` solution this equals
    ``-1/2 <log(s^2 + v0^2)> + v0^2/2``.
    """
    s = np.asarray(s, dtype=float)
    if v0 is None:
        v0 = solve_v_zero(s, w)
    v0 = np.asarray(v0, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.log(s ** 2 + (v0 ** 2)[..., None]) @ w
    return -0.5 * lg + 0.5 * v0 ** 2


def _gauss(n):
    x, wt = np.polynomial.legendre.leggauss(n)
    return x, wt


def log_potential_quad(s, w, tol=1e-10, eta_lo=1e-14, H=1e6, panels_per_decade=2,
                       max_refine=6):
    """Adaptive Gauss-Legendre quadrature in ``log(eta)`` plus an analytic tail.

    Returns ``(value, error_estimate)``.  The integrand ``m(eta) - eta/(1+eta^2)``
    is integrated over ``[eta_lo, H]``; the piece below ``eta_lo`` is bounded by
    ``eta_lo * max m`` and the tail above ``H`` uses ``m - eta/(1+eta^2) ~ -<s^2>/eta^3``.
    """
    s = np.asarray(s, dtype=float)
    w = _as_weights(s, w)
    split = max(float(np.max(s)), 1.0)
    x16, w16 = _gauss(16)
    x8, w8 = _gauss(8)

    def integrand(eta):
        v = solve_v(s, eta, w)
        return im_trace(s, w, v) - eta / (1.0 + eta * eta)

    def panel_sum(edges):
        a, b = edges[:-1, None], edges[1:, None]
        out = []
        for xg, wg in ((x16, w16), (x8, w8)):
            u = 0.5 * (a + b) + 0.5 * (b - a) * xg
            eta = np.exp(u)
            vals = integrand(eta) * eta
            out.append((0.5 * (b - a) * wg * vals).sum(axis=1))
        return out

    def edges_for(lo, hi, per_dec):
        n = max(1, int(np.ceil(per_dec * (np.log10(hi) - np.log10(lo)))))
        return np.linspace(np.log(lo), np.log(hi), n + 1)

    # a small sample to bound the integrand below eta_lo
    m_lo = float(im_trace(s, w, solve_v(s, eta_lo, w)))
    per_dec = panels_per_decade
    for _ in range(max_refine):
        e1 = edges_for(eta_lo, split, per_dec)
        e2 = edges_for(split, H, per_dec) if H > split else np.array([np.log(H)])
        edges = np.concatenate([e1, e2[1:]])
        hi_acc, lo_acc = panel_sum(edges)
        err = float(np.sum(np.abs(hi_acc - lo_acc)))
        if err <= tol:
            break
        per_dec *= 2
    val = float(np.sum(hi_acc))
    head = eta_lo * m_lo
    tail = -float(s ** 2 @ w) / (2.0 * H * H)
    val += head + tail
    err += eta_lo * m_lo + abs(tail) * 1e-2
    if err > tol:
        raise MdeConvergenceError(f"log-potential quadrature error {err:.2e} above tolerance {tol:.1e}",
                                  err)
    return val, err


def log_potential(A, z, method: str = "closed", tol: float = 1e-10, full_output: bool = False):
    """Inner eta-integral of the Brown-measure log potential at ``z``.

    ``method="closed"`` uses the exact antiderivative, ``"quad"`` integrates the
    MDE solution numerically; the two agree to the quadrature tolerance.
    """
    op = Deformation(A)
    z = np.asarray(z, dtype=complex)
    s, w = op.svals(z)
    if method == "closed":
        val = log_potential_closed(s, w)
        err = np.zeros_like(val)
    elif method == "quad":
        flat = s.reshape(-1, s.shape[-1])
        pairs = [log_potential_quad(row, w, tol=tol) for row in flat]
        val = np.array([p[0] for p in pairs]).reshape(z.shape)
        err = np.array([p[1] for p in pairs]).reshape(z.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    if z.ndim == 0:
        val, err = float(val), float(err)
    return (val, err) if full_output else val


# ---------------------------------------------------------------------------
# edge asymptotics


def cubic_residual(A, z0: complex, w: complex, eta: float, I3=None, I4=None) -> float:
    """``I4 v^3 - 2 Re[w I3] v - eta`` with ``v`` solved at ``z0 + w``.

    ``eta = 0`` uses the ``eta -> 0+`` limit of ``v``.
    """
    op = Deformation(A)
    if I3 is None or I4 is None:
        mom = op.moments(np.asarray(z0))
        I3, I4 = complex(mom["I3"]), float(mom["I4"])
    s, wt = op.svals(np.asarray(z0 + w))
    v = float(solve_v_zero(s, wt)) if eta == 0 else float(solve_v(s, eta, wt))
    return float(I4 * v ** 3 - 2.0 * np.real(w * I3) * v - eta)

