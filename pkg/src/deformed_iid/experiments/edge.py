"""Edge eigenvalue statistics in the rescaled plane ``w = sqrt(N) gamma0 (lambda - z0)``."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import partial

import numpy as np
from scipy.stats import chi2_contingency

from ..brown import EdgePoint
from ..ensembles import DeformedModel, eigenvalues, sample_iid
from .harness import mean_se, run_trials
from .kernel import p1_bin_profile, p2_bin_profile

WINDOW = (-4.0, 2.0, -3.0, 3.0)
BIN = 0.25
P2_BIN = 1.0


class EdgeStatError(RuntimeError):
    pass


@dataclass
class EdgeStatSample:
    points: np.ndarray
    seed: int
    field: str


@dataclass
class EdgeStatResult:
    window: tuple
    re_edges: np.ndarray
    p1: np.ndarray  # Im-integrated Re-bin estimates
    p1_se: np.ndarray
    p1_2d: np.ndarray  # square bins
    p2_edges: np.ndarray
    p2: np.ndarray
    p2_se: np.ndarray
    counts: np.ndarray  # pooled Re-bin counts
    trials: int
    empty_fraction: float
    samples: list = dc_field(default_factory=list, repr=False)
    comparison: dict = dc_field(default_factory=dict)

    def rows(self):
        mid = 0.5 * (self.re_edges[1:] + self.re_edges[:-1])
        cols = [mid, self.p1, self.p1_se, self.counts]
        if "reference" in self.comparison:
            cols.append(np.asarray(self.comparison["reference"]))
        return np.column_stack(cols)


def rescale(lam, z0: complex, gamma0: complex, N: int):
    return np.sqrt(N) * gamma0 * (np.asarray(lam) - z0)


def _edge_trial(seed, idx, model, z0, gamma0, window, re_edges, im_edges, p2_edges, keep):
    X = sample_iid(model, seed)
    lam = eigenvalues(X.deformed)
    w = rescale(lam, z0, gamma0, model.N)
    x0, x1, y0, y1 = window
    inw = (w.real >= x0) & (w.real < x1) & (w.imag >= y0) & (w.imag < y1)
    w = w[inw]
    c1 = np.histogram(w.real, re_edges)[0]
    c2d = np.histogram2d(w.imag, w.real, [im_edges, re_edges])[0]
    n = np.histogram(w.real, p2_edges)[0].astype(float)
    pair = np.outer(n, n) - np.diag(n)
    out = {"c1": c1, "c2d": c2d, "pair": pair}
    if keep:
        out["w"] = np.column_stack([w.real, w.imag])
    return out


def collect_edge_counts(model: DeformedModel, z0: complex, gamma0: complex, trials: int, base_seed: int,
                        window=WINDOW, bin_size: float = BIN, p2_bin: float = P2_BIN, workers: int = 1,
                        keep_points: bool = False) -> EdgeStatResult:
    x0, x1, y0, y1 = window
    re_edges = np.arange(x0, x1 + 1e-9, bin_size)
    im_edges = np.arange(y0, y1 + 1e-9, bin_size)
    p2_edges = np.arange(x0, x1 + 1e-9, p2_bin)
    task = partial(_edge_trial, model=model, z0=complex(z0), gamma0=complex(gamma0), window=window,
                   re_edges=re_edges, im_edges=im_edges, p2_edges=p2_edges, keep=keep_points)
    reps = run_trials(task, trials, base_seed, workers, model.label, "edge_points")
    c1 = np.array([r.payload["c1"] for r in reps], dtype=float)
    height = y1 - y0
    dens = c1 / (bin_size * height)
    m, se = mean_se(dens)
    c2d = np.mean([r.payload["c2d"] for r in reps], axis=0) / bin_size ** 2
    pairs = np.array([r.payload["pair"] for r in reps]) / (p2_bin * height) ** 2
    p2, p2se = mean_se(pairs)
    empty = float(np.mean(c1.sum(axis=1) == 0))
    samples = []
    if keep_points:
        samples = [EdgeStatSample(r.payload["w"][:, 0] + 1j * r.payload["w"][:, 1], r.seed, model.field)
                   for r in reps]
    res = EdgeStatResult(tuple(window), re_edges, m, se, c2d, p2_edges, p2, p2se, c1.sum(axis=0).astype(int),
                         trials, empty, samples)
    if empty > 0.5:
        raise EdgeStatError(f"window empty in {100 * empty:.0f}% of trials; check the edge point")
    return res


def edge_statistics(model: DeformedModel, edge: EdgePoint, trials: int, base_seed: int, window=WINDOW,
                    bin_size: float = BIN, workers: int = 1, tol: float = 0.03, k_se: float = 3.0,
                    bulk_cut: float = -3.0, bulk_rel: float = 0.05, keep_points: bool = False,
                    compare_p2: bool = True) -> EdgeStatResult:
    """Binned ``p1`` (and coarse ``p2``) near a sharp edge, compared with the Ginibre kernel (complex field)."""
    if edge.cls != "sharp":
        raise EdgeStatError(f"edge point is {edge.cls}, need sharp")
    res = collect_edge_counts(model, edge.z0, edge.gamma0, trials, base_seed, window, bin_size,
                              workers=workers, keep_points=keep_points)
    if model.field == "complex":
        ref = p1_bin_profile(res.re_edges)
        dev = np.abs(res.p1 - ref)
        allowed = np.maximum(tol, k_se * res.p1_se)
        mids = 0.5 * (res.re_edges[1:] + res.re_edges[:-1])
        bulk = res.re_edges[1:] <= bulk_cut + 1e-12
        bulk_dev = np.abs(res.p1[bulk] * np.pi - 1.0)
        cmp = {
            "reference": ref.tolist(),
            "sup_dev": float(dev.max()),
            "worst_bin": float(mids[np.argmax(dev)]),
            "pass_profile": bool(np.all(dev <= allowed)),
            "bulk_max_rel_dev": float(bulk_dev.max()) if bulk.any() else np.nan,
            "pass_bulk": bool(np.all(bulk_dev <= bulk_rel + k_se * np.pi * res.p1_se[bulk])),
        }
        if compare_p2:
            ref2 = p2_bin_profile(res.p2_edges)
            d2 = np.abs(res.p2 - ref2)
            cmp["p2_reference"] = ref2.tolist()
            cmp["p2_sup_dev"] = float(d2.max())
            cmp["p2_pass"] = bool(np.all(d2 <= np.maximum(tol, k_se * res.p2_se)))
        cmp["pass"] = cmp["pass_profile"] and cmp["pass_bulk"]
        res.comparison = cmp
    return res


def matched_z1(z0: complex, gamma0: complex) -> complex:
    """Unit ``z1`` with ``Im z1 = (|gamma0| ∧ 1/|Im z0|) Im z0`` (upper/lower half as ``z0``)."""
    y0 = complex(z0).imag
    if y0 == 0:
        return 1.0 + 0.0j
    y1 = min(abs(gamma0), 1.0 / abs(y0)) * y0
    y1 = float(np.clip(y1, -1.0, 1.0))
    return complex(np.sqrt(1 - y1 * y1), y1)


def two_sample_chi2(c_a, c_b, min_expected: float = 5.0):
    """Two-sample binned chi-square on pooled counts; bins with expected count below ``min_expected`` dropped."""
    table = np.vstack([np.asarray(c_a, float), np.asarray(c_b, float)])
    tot = table.sum(axis=0)
    exp = np.outer(table.sum(axis=1), tot) / tot.sum()
    keep = np.all(exp >= min_expected, axis=0)
    if keep.sum() < 2:
        raise EdgeStatError("fewer than two usable bins for the chi-square test")
    chi2, p, dof, _ = chi2_contingency(table[:, keep], correction=False)
    return float(chi2), float(p), int(dof)


def real_edge_comparison(model: DeformedModel, edge: EdgePoint, trials: int, base_seed: int,
                         window=WINDOW, bin_size: float = BIN, workers: int = 1, alpha: float = 0.01,
                         ginibre_seed: int | None = None) -> dict:
    """Real deformed model vs real Ginibre at the matched ``z1`` (Monte Carlo on both sides)."""
    if model.field != "real":
        raise EdgeStatError("real comparison needs field='real'")
    if edge.cls != "sharp":
        raise EdgeStatError(f"edge point is {edge.cls}, need sharp")
    z1 = matched_z1(edge.z0, edge.gamma0)
    gin = DeformedModel.from_diagonal(np.zeros(model.N), field="real", dist="gaussian", label="real-ginibre")
    # A = 0 at z1 on the unit circle: gamma = conj(z1)
    a = collect_edge_counts(model, edge.z0, edge.gamma0, trials, base_seed, window, bin_size, workers=workers)
    gseed = base_seed + 1 if ginibre_seed is None else ginibre_seed
    b = collect_edge_counts(gin, z1, np.conj(z1), trials, gseed, window, bin_size, workers=workers)
    chi2, p, dof = two_sample_chi2(a.counts, b.counts)
    return {"z0": edge.z0, "z1": z1, "gamma0": edge.gamma0, "chi2": chi2, "dof": dof, "p_value": p,
            "pass": p >= alpha, "deformed": a, "ginibre": b,
            "max_abs_diff": float(np.max(np.abs(a.p1 - b.p1))),
            "max_se": float(np.max(np.hypot(a.p1_se, b.p1_se)))}
