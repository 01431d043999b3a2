"""No-outlier and cluster-count Monte Carlo checks against Spec_eps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from ..brown import SpecEps
from ..ensembles import DeformedModel, eigenvalues, sample_iid
from .harness import run_trials


@dataclass
class NoOutlierResult:
    violations: np.ndarray  # per trial, excluding expected exceptions
    max_normalized: np.ndarray  # per trial: max over eigenvalues outside the support of dist / (N^eps sigma_f)
    max_excursion: np.ndarray  # per trial: max signed distance to the support contour
    exception_dist: np.ndarray  # per trial and exception: distance of the nearest eigenvalue
    trials: int
    gap_counts: np.ndarray | None = None  # per trial, eigenvalues flagged by the ``gap`` predicate

    @property
    def total_violations(self) -> int:
        return int(self.violations.sum())

    def rows(self):
        cols = [np.arange(self.trials), self.violations, self.max_normalized, self.max_excursion]
        if self.exception_dist.size:
            cols += list(self.exception_dist.T)
        return np.column_stack(cols)


def _signed_excursion(spec: SpecEps, lam):
    """Distance to the nearest contour vertex, positive outside the support."""
    allc = np.concatenate(spec.contours)
    d = np.min(np.abs(lam[:, None] - allc[None, :]), axis=1)
    return np.where(spec.in_support(lam), -d, d)


def _no_outlier_trial(seed, idx, model, spec, exceptions, exc_radius, gap=None):
    X = sample_iid(model, seed)
    lam = eigenvalues(X.deformed)
    exc = np.zeros(lam.size, dtype=bool)
    exc_dist = []
    for p in exceptions:
        d = np.abs(lam - p)
        exc_dist.append(float(d.min()))
        exc |= d <= exc_radius
    inside = spec.contains(lam)
    nd = spec.normalized_distance(lam).min(axis=1)
    outside_supp = ~spec.in_support(lam) & ~exc
    return {
        "violations": int(np.count_nonzero(~inside & ~exc)),
        "max_norm": float(nd[outside_supp].max()) if outside_supp.any() else 0.0,
        "max_exc": float(_signed_excursion(spec, lam[~exc]).max()),
        "exc_dist": exc_dist,
        "gap": int(np.count_nonzero(gap(lam))) if gap is not None else 0,
    }


def no_outlier_trial(model: DeformedModel, spec: SpecEps, trials: int, base_seed: int,
                     expected_exceptions=(), exception_radius: float | None = None,
                     workers: int = 1, gap=None) -> NoOutlierResult:
    """Count eigenvalues of ``A + X`` outside Spec_eps.

    ``expected_exceptions`` lists planted outlier locations that the theorem's
    assumptions exclude; eigenvalues within ``exception_radius`` (default
    ``N^{-1/2+eps}``) of them are reported separately. ``gap`` is an optional
    picklable predicate on eigenvalue arrays (e.g. a region between clusters)
    whose hits are counted per trial.
    """
    N = model.N
    r = exception_radius if exception_radius is not None else N ** (-0.5 + spec.eps)
    task = partial(_no_outlier_trial, model=model, spec=spec, exceptions=[complex(p) for p in expected_exceptions],
                   exc_radius=r, gap=gap)
    reps = run_trials(task, trials, base_seed, workers, model.label, "no_outlier")
    return NoOutlierResult(
        np.array([x.payload["violations"] for x in reps]),
        np.array([x.payload["max_norm"] for x in reps]),
        np.array([x.payload["max_exc"] for x in reps]),
        np.array([x.payload["exc_dist"] for x in reps]).reshape(trials, -1),
        trials,
        np.array([x.payload["gap"] for x in reps]) if gap is not None else None,
    )


@dataclass
class ClusterCountResult:
    counts: np.ndarray  # (trials, n_clusters)
    expected: np.ndarray
    outside: np.ndarray  # per trial: eigenvalues in no cluster
    ambiguous: np.ndarray  # per trial flag

    @property
    def match(self) -> np.ndarray:
        return np.all(self.counts == self.expected[None, :], axis=1) & (self.outside == 0)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.match))

    def rows(self):
        return np.column_stack([np.arange(len(self.counts)), self.counts, self.outside, self.ambiguous])


def _cluster_trial(seed, idx, model, spec):
    X = sample_iid(model, seed)
    lam = eigenvalues(X.deformed)
    lab, amb = spec.assign(lam)
    counts = np.bincount(lab[lab >= 0], minlength=spec.n_clusters)
    return {"counts": counts, "outside": int(np.count_nonzero(lab < 0)), "ambiguous": bool(amb.any())}


def cluster_count_trial(model: DeformedModel, spec: SpecEps, trials: int, base_seed: int,
                        workers: int = 1) -> ClusterCountResult:
    """Eigenvalue counts per Spec_eps cluster, compared with the counts for ``A`` itself."""
    if spec.A.N != model.N:
        raise ValueError("Spec_eps was built for a different N")
    expected = spec.expected_counts()
    task = partial(_cluster_trial, model=model, spec=spec)
    reps = run_trials(task, trials, base_seed, workers, model.label, "cluster_count")
    return ClusterCountResult(np.array([r.payload["counts"] for r in reps]), expected,
                              np.array([r.payload["outside"] for r in reps]),
                              np.array([r.payload["ambiguous"] for r in reps]))
