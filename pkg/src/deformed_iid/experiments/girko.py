"""Girko's Hermitization identity, the regularised functionals L0 / N0 and the least singular value tail."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from ..brown import EdgePoint
from ..ensembles import DeformedModel, sample_iid, singular_values
from ..mde import im_trace, solve_v
from .harness import mean_se, run_trials, wilson_interval

ETA_LO, ETA_HI = 1e-8, 1e8


# ---------------------------------------------------------------------------
# test functions with analytic Laplacians


def _phi(q):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        inside = q < 1
        p = np.where(inside, np.exp(-1.0 / np.where(inside, 1 - q, 1.0)), 0.0)
        d1 = np.where(inside, -p / np.where(inside, (1 - q) ** 2, 1.0), 0.0)
        d2 = np.where(inside, p / np.where(inside, (1 - q) ** 4, 1.0)
                      - 2 * p / np.where(inside, (1 - q) ** 3, 1.0), 0.0)
    return p, d1, d2


@dataclass(frozen=True)
class Bump:
    """``exp(-1/(1 - |z - c|^2/R^2))`` inside the disk, zero outside."""

    center: complex = 0.0
    R: float = 0.5
    amp: float = 1.0

    def __call__(self, z):
        q = np.abs(np.asarray(z) - self.center) ** 2 / self.R ** 2
        return self.amp * _phi(q)[0]

    def laplacian(self, z):
        q = np.abs(np.asarray(z) - self.center) ** 2 / self.R ** 2
        _, d1, d2 = _phi(q)
        return self.amp * 4.0 / self.R ** 2 * (q * d2 + d1)

    def support(self):
        return ("disk", self.center, 0.0, self.R)


@dataclass(frozen=True)
class AnnulusBump:
    """Radial bump ``phi(((|z - c| - r0)/width)^2)`` supported in an annulus."""

    center: complex = 0.0
    r0: float = 2.5
    width: float = 0.5
    amp: float = 1.0

    def __call__(self, z):
        u = (np.abs(np.asarray(z) - self.center) - self.r0) / self.width
        return self.amp * _phi(u * u)[0]

    def laplacian(self, z):
        r = np.abs(np.asarray(z) - self.center)
        u = (r - self.r0) / self.width
        _, d1, d2 = _phi(u * u)
        g1 = d1 * 2 * u / self.width
        g2 = (4 * u * u * d2 + 2 * d1) / self.width ** 2
        return self.amp * (g2 + g1 / np.maximum(r, 1e-300))

    def support(self):
        return ("annulus", self.center, self.r0 - self.width, self.r0 + self.width)


@dataclass(frozen=True)
class SumF:
    """Linear combination of test functions."""

    parts: tuple
    coeffs: tuple

    def __call__(self, z):
        return sum(c * f(z) for f, c in zip(self.parts, self.coeffs))

    def laplacian(self, z):
        return sum(c * f.laplacian(z) for f, c in zip(self.parts, self.coeffs))

    def support(self):
        sups = [f.support() for f in self.parts]
        c = sups[0][1]
        if any(s[1] != c for s in sups):
            raise ValueError("combined supports need a common center")
        return ("annulus", c, min(s[2] for s in sups), max(s[3] for s in sups))


def _polar_nodes(support, n_r: int, n_theta: int, panels: int):
    _, c, r_in, r_out = support
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    edges = np.linspace(r_in, r_out, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (a + b) + 0.5 * (b - a) * xg).ravel()
    wr = (0.5 * (b - a) * wg).ravel() * r
    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    z = c + r[:, None] * np.exp(1j * th)[None, :]
    w = wr[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None, :]
    return z.ravel(), w.ravel()


@dataclass
class GirkoResult:
    direct: float  # (1/N) sum F(lambda_i)
    hermitized: float
    residual: float
    lap_l1: float
    n_nodes: int

    @property
    def passed(self) -> bool:
        return self.residual <= 1e-3 * self.lap_l1


def girko_identity_test(B, F, n_r: int = 12, n_theta: int = 192, panels: int = 24,
                        eta_lo: float = ETA_LO, eta_hi: float = ETA_HI, chunk: int = 512) -> GirkoResult:
    """Compare ``(1/N) sum F(lambda_i)`` with the Hermitization formula on one matrix ``B``.

    ``-(1/(4 pi N)) int Delta F(z) sum_i log((s_i^2 + b^2)/(s_i^2 + a^2)) d^2 z`` with
    ``s_i`` the singular values of ``B - z`` and cutoffs ``a, b``.
    """
    B = np.asarray(B, dtype=complex)
    N = B.shape[0]
    lam = np.linalg.eigvals(B)
    direct = float(np.real(np.sum(F(lam)))) / N
    z, w = _polar_nodes(F.support(), n_r, n_theta, panels)
    lap = F.laplacian(z)
    keep = lap != 0
    z, w, lap = z[keep], w[keep], lap[keep]
    eye = np.eye(N)
    acc = 0.0
    for k in range(0, z.size, chunk):
        zz = z[k:k + chunk]
        s = np.linalg.svd(B[None] - zz[:, None, None] * eye[None], compute_uv=False)
        s2 = s ** 2
        val = np.sum(np.log1p((eta_hi ** 2 - eta_lo ** 2) / (s2 + eta_lo ** 2)), axis=1)
        acc += float(np.sum(lap[k:k + chunk] * w[k:k + chunk] * val))
    herm = -acc / (4 * np.pi * N)
    lap_l1 = float(np.sum(np.abs(lap) * w))
    return GirkoResult(direct, herm, abs(direct - herm), lap_l1, int(z.size))


# ---------------------------------------------------------------------------
# L0 and N0


def _eta_scales(edge: EdgePoint, N: int, delta: float):
    eta1 = N ** (-0.75 - delta)
    c0 = edge.I4 ** -0.25
    return eta1, c0, eta1 / c0


def shifted_point(edge: EdgePoint, N: int, w: complex) -> complex:
    """``z0 + gamma0^{-1} N^{-1/2} w``."""
    return edge.z0 + w / (edge.gamma0 * np.sqrt(N))


def l0_direct(s, sA, eta0: float) -> float:
    """``sum log(s^2 + eta0^2) - N [<log(sA^2 + v^2)> - (v - eta0)^2]`` with ``v`` the MDE solution."""
    N = s.size
    v = float(solve_v(np.sort(sA), eta0))
    det = N * (np.mean(np.log(sA ** 2 + v * v)) - (v - eta0) ** 2)
    return float(np.sum(np.log(s ** 2 + eta0 ** 2)) - det)


def l0_integral(s, sA, eta0: float, H: float = 1e8, panels_per_decade: int = 4, n_nodes: int = 16):
    """``-2N int_{eta0}^inf Im<G - M>(i eta) d eta`` by Gauss panels in ``log eta``.

    Returns ``(value, error_estimate)``; the integrand beyond ``H`` is below double precision.
    """
    N = s.size
    sA = np.sort(sA)
    w = np.full(N, 1.0 / N)

    def integrand(eta):
        g = (eta[:, None] / (s[None, :] ** 2 + eta[:, None] ** 2)).mean(axis=1)
        v = solve_v(sA[None, :].repeat(eta.size, 0), eta)
        m = im_trace(sA, w, v)
        return g - m

    out = []
    n_dec = np.log10(H) - np.log10(eta0)
    nb = max(1, int(np.ceil(panels_per_decade * n_dec)))
    edges = np.linspace(np.log(eta0), np.log(H), nb + 1)
    a, b = edges[:-1, None], edges[1:, None]
    for n in (n_nodes, n_nodes // 2):
        xg, wg = np.polynomial.legendre.leggauss(n)
        u = (0.5 * (a + b) + 0.5 * (b - a) * xg).ravel()
        eta = np.exp(u)
        vals = integrand(eta) * eta
        out.append(float(np.sum(vals * (0.5 * (b - a) * wg).ravel())))
    return -2 * N * out[0], 2 * N * abs(out[0] - out[1])


def n0_from_svals(s, eta0: float, c0: float) -> float:
    return float(np.mean(eta0 / (s ** 2 + eta0 ** 2)) / c0)


def n0_resolvent(Bz, eta0: float, c0: float) -> float:
    """``(1/c0) Im<G(i eta0)>`` from an explicit 2N x 2N inverse."""
    N = Bz.shape[0]
    H = np.zeros((2 * N, 2 * N), dtype=complex)
    H[:N, N:] = Bz
    H[N:, :N] = Bz.conj().T
    G = np.linalg.inv(H - 1j * eta0 * np.eye(2 * N))
    return float(np.imag(np.trace(G)) / (2 * N) / c0)


@dataclass
class GirkoObservables:
    w: complex
    z: complex
    eta0: float
    c0: float
    L0: np.ndarray
    L0_integral: np.ndarray
    L0_quad_err: np.ndarray
    N0: np.ndarray
    N0_resolvent: np.ndarray

    @property
    def l0_route_dev(self) -> float:
        return float(np.max(np.abs(self.L0 - self.L0_integral)))

    @property
    def n0_identity_dev(self) -> float:
        return float(np.max(np.abs(self.N0 - self.N0_resolvent)))

    def rows(self):
        return np.column_stack([np.arange(self.L0.size), self.L0, self.L0_integral, self.N0, self.N0_resolvent])


def _girko_obs_trial(seed, idx, model, z, sA, eta0, c0, routes):
    X = sample_iid(model, seed)
    Bz = X.deformed - z * np.eye(model.N)
    s = singular_values(Bz)
    out = {"L0": l0_direct(s, sA, eta0), "N0": n0_from_svals(s, eta0, c0)}
    if routes:
        val, err = l0_integral(s, sA, eta0)
        out.update({"L0i": val, "L0e": err, "N0r": n0_resolvent(Bz, eta0, c0)})
    else:
        out.update({"L0i": np.nan, "L0e": np.nan, "N0r": np.nan})
    return out


def girko_observables(model: DeformedModel, edge: EdgePoint, w: complex, trials: int, base_seed: int,
                      delta: float = 0.005, cross_check: bool = True, workers: int = 1) -> GirkoObservables:
    N = model.N
    _, c0, eta0 = _eta_scales(edge, N, delta)
    z = shifted_point(edge, N, w)
    sA = singular_values(model.A - z * np.eye(N))
    task = partial(_girko_obs_trial, model=model, z=z, sA=sA, eta0=eta0, c0=c0, routes=cross_check)
    reps = run_trials(task, trials, base_seed, workers, model.label, "girko_observables")
    P = lambda k: np.array([r.payload[k] for r in reps], dtype=float)
    return GirkoObservables(complex(w), complex(z), eta0, c0, P("L0"), P("L0i"), P("L0e"), P("N0"), P("N0r"))


@dataclass
class TailResult:
    eta0: float
    c0: float
    p_hat: float
    ci: tuple
    se: float
    bound: float
    bound_se: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.p_hat <= self.bound + 3 * np.hypot(self.se, self.bound_se)


def _tail_trial(seed, idx, model, z, eta0s, c0):
    X = sample_iid(model, seed)
    s = singular_values(X.deformed - z * np.eye(model.N))
    return {"lam1": float(s[0]), "N0": [n0_from_svals(s, e, c0) for e in eta0s]}


def smallest_singular_tail(model: DeformedModel, edge: EdgePoint, w: complex, trials: int, base_seed: int,
                           delta: float = 0.005, eta_factors=(1.0,), workers: int = 1) -> list[TailResult]:
    """Empirical ``P[lambda_1 <= eta0]`` against ``2 c0 N eta0 E[N0]`` (one entry per eta factor)."""
    N = model.N
    _, c0, eta0 = _eta_scales(edge, N, delta)
    z = shifted_point(edge, N, w)
    eta0s = [eta0 * f for f in eta_factors]
    task = partial(_tail_trial, model=model, z=z, eta0s=eta0s, c0=c0)
    reps = run_trials(task, trials, base_seed, workers, model.label, "sstail")
    lam1 = np.array([r.payload["lam1"] for r in reps])
    n0 = np.array([r.payload["N0"] for r in reps])
    out = []
    for j, e in enumerate(eta0s):
        k = int(np.count_nonzero(lam1 <= e))
        p = k / trials
        se = np.sqrt(max(p * (1 - p), 0.0) / trials)
        m, mse = mean_se(n0[:, j])
        scale = 2 * c0 * N * e
        out.append(TailResult(e, c0, p, wilson_interval(k, trials), float(se), float(scale * m),
                              float(scale * mse), trials))
    return out
