"""Complex Ginibre edge kernel.

``K(w1, w2) = (1/2pi) erfc((conj(w2) + w1)/sqrt 2) exp(-|w1|^2/2 - |w2|^2/2 + w1 conj(w2))``
so that ``p1(w) = (1/2pi) erfc(sqrt(2) Re w)``: ``1/pi`` deep in the bulk (``Re w -> -inf``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


@dataclass(frozen=True)
class KernelEval:
    k: int
    points: tuple
    value: float


def ginibre_kernel(w1, w2):
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    arg = (np.conj(w2) + w1) / np.sqrt(2.0)
    ex = -0.5 * np.abs(w1) ** 2 - 0.5 * np.abs(w2) ** 2 + w1 * np.conj(w2)
    return erfc(arg) * np.exp(ex) / (2 * np.pi)


def p1(w):
    """One-point function (real by construction)."""
    return erfc(np.sqrt(2.0) * np.real(w)) / (2 * np.pi)


def p_gin_k(points) -> float:
    """``det[K(w_i, w_j)]``; for distinct points this is the k-point density."""
    w = np.asarray(points, dtype=complex).ravel()
    Km = ginibre_kernel(w[:, None], w[None, :])
    val = np.linalg.det(Km)
    return float(np.real(val))


def kernel_eval(points) -> KernelEval:
    w = tuple(complex(x) for x in np.asarray(points).ravel())
    return KernelEval(len(w), w, p_gin_k(w))


def p1_bin_profile(edges, n_nodes: int = 16) -> np.ndarray:
    """Bin averages of ``p1`` over Re-bins (``p1`` does not depend on Im w)."""
    x, wt = np.polynomial.legendre.leggauss(n_nodes)
    a, b = np.asarray(edges[:-1])[:, None], np.asarray(edges[1:])[:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    return (p1(nodes) * wt).sum(axis=1) / 2.0


def p2_bin_profile(edges, im_range=(-3.0, 3.0), n_re: int = 6, n_im: int = 10) -> np.ndarray:
    """Averages of ``p2`` over pairs of Im-integrated Re-bins (distinct points)."""
    xr, wr = np.polynomial.legendre.leggauss(n_re)
    xi, wi = np.polynomial.legendre.leggauss(n_im)
    ylo, yhi = im_range
    ys = 0.5 * (ylo + yhi) + 0.5 * (yhi - ylo) * xi
    nb = len(edges) - 1
    pts, wts = [], []
    for j in range(nb):
        a, b = edges[j], edges[j + 1]
        xs = 0.5 * (a + b) + 0.5 * (b - a) * xr
        P = (xs[:, None] + 1j * ys[None, :]).ravel()
        W = (wr[:, None] * wi[None, :]).ravel() / 4.0
        pts.append(P)
        wts.append(W)
    out = np.empty((nb, nb))
    for i in range(nb):
        for j in range(nb):
            u, v = pts[i][:, None], pts[j][None, :]
            k11 = p1(u)
            k22 = p1(v)
            k12 = ginibre_kernel(u, v)
            val = k11 * k22 - np.abs(k12) ** 2
            out[i, j] = float(np.sum(val * wts[i][:, None] * wts[j][None, :]))
    return out
