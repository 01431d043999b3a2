"""Averaged and isotropic local-law errors for the Hermitization resolvent on ``i eta``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from ..ensembles import DeformedModel, sample_iid
from ..mde import solve_v
from .harness import run_trials


@dataclass
class LocalLawResult:
    etas: np.ndarray
    rho: np.ndarray  # Im<M>/pi
    avg_mean: np.ndarray  # (n_B, n_eta)
    avg_q95: np.ndarray
    iso_mean: np.ndarray  # (n_pairs, n_eta)
    iso_q95: np.ndarray
    slope: float  # log-log slope of avg_mean[0] vs eta
    B_names: list
    N: int
    trials: int

    @property
    def iso_ratio(self):
        """95th percentile isotropic error over ``sqrt(rho/(N eta))``."""
        return self.iso_q95 / np.sqrt(self.rho / (self.N * self.etas))

    def rows(self):
        cols = [self.etas, self.rho]
        cols += list(self.avg_mean) + list(self.avg_q95) + list(self.iso_mean) + list(self.iso_q95)
        return np.column_stack(cols)


def default_B(N: int):
    """Identity and a traceless alternating diagonal on C^{2N}."""
    alt = np.where(np.arange(2 * N) % 2 == 0, 1.0, -1.0)
    return {"identity": np.ones(2 * N), "alternating": alt}


def default_pairs(N: int, seed: int = 12345):
    e1 = np.zeros(2 * N, dtype=complex)
    e1[0] = 1.0
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(2 * N) + 1j * rng.standard_normal(2 * N)
    y = rng.standard_normal(2 * N) + 1j * rng.standard_normal(2 * N)
    return {"e1,e1": (e1, e1), "random": (u / np.linalg.norm(u), y / np.linalg.norm(y))}


def _resolvent_parts(U, s, Vh, par, diag_B, pairs):
    """Diagonal-weighted traces and isotropic entries of ``(H - i par)^{-1}`` from an SVD.

    ``par`` is ``eta`` for G and ``v`` for M.  Returns (traces (n_B, n_eta), iso (n_pairs, n_eta)).
    """
    N = s.size
    par = np.asarray(par, dtype=float)
    den = s[None, :] ** 2 + par[:, None] ** 2  # (n_eta, N)
    D1 = 1j * par[:, None] / den
    D2 = s[None, :] / den
    V = Vh.conj().T
    wU = np.abs(U) ** 2  # (N, N): |U_kj|^2
    wV = np.abs(V) ** 2
    tr = []
    for b in diag_B:
        b1, b2 = b[:N], b[N:]
        # <B G> = (1/2N) [sum_k b1_k (G11)_kk + b2_k (G22)_kk]
        t = (D1 @ (wU.T @ b1) + D1 @ (wV.T @ b2)) / (2 * N)
        tr.append(t)
    iso = []
    for u, y in pairs:
        a = U.conj().T @ u[:N]
        bb = V.conj().T @ u[N:]
        c = U.conj().T @ y[:N]
        d = V.conj().T @ y[N:]
        p1 = np.conj(a) * c + np.conj(bb) * d
        p2 = np.conj(a) * d + np.conj(bb) * c
        iso.append(D1 @ p1 + D2 @ p2)
    return np.array(tr), np.array(iso)


def _ll_trial(seed, idx, model, z, etas, det, B, pairs):
    X = sample_iid(model, seed)
    Bz = X.deformed - z * np.eye(model.N)
    U, s, Vh = np.linalg.svd(Bz)
    trG, isoG = _resolvent_parts(U, s, Vh, etas, B, pairs)
    trM, isoM = det
    return {"avg": np.abs(trG - trM), "iso": np.abs(isoG - isoM)}


def local_law_trial(model: DeformedModel, z: complex, etas, trials: int, base_seed: int,
                    B_list: dict | None = None, pairs: dict | None = None, workers: int = 1) -> LocalLawResult:
    """Monte Carlo errors ``|<B(G - M)>|`` and ``|<u, (G - M) y>|`` on an eta grid."""
    etas = np.asarray(etas, dtype=float)
    if np.any(etas <= 0):
        raise ValueError("eta grid must be positive")
    N = model.N
    B_list = B_list or default_B(N)
    pairs = pairs or default_pairs(N)
    A = model.A - z * np.eye(N)
    U, s, Vh = np.linalg.svd(A)
    v = solve_v(np.sort(s)[None, :].repeat(etas.size, 0), etas)
    det = _resolvent_parts(U, s, Vh, v, list(B_list.values()), list(pairs.values()))
    rho = (v - etas) / np.pi
    task = partial(_ll_trial, model=model, z=complex(z), etas=etas, det=det, B=list(B_list.values()),
                   pairs=list(pairs.values()))
    reps = run_trials(task, trials, base_seed, workers, model.label, "local_law")
    avg = np.array([r.payload["avg"] for r in reps])  # (trials, n_B, n_eta)
    iso = np.array([r.payload["iso"] for r in reps])
    avg_mean = avg.mean(axis=0)
    slope = float(np.polyfit(np.log(etas), np.log(avg_mean[0]), 1)[0])
    return LocalLawResult(etas, rho, avg_mean, np.quantile(avg, 0.95, axis=0), iso.mean(axis=0),
                          np.quantile(iso, 0.95, axis=0), slope, list(B_list), N, trials)
