import numpy as np
import pytest

from deformed_iid import brown
from deformed_iid.ensembles import build_deformation, hermitize, sample_iid, trial_seed
from deformed_iid.experiments import (AnnulusBump, Bump, EdgeStatError, SumF, TrialReport, cluster_count_trial,
                                      collect_edge_counts, edge_statistics, girko_identity_test, girko_observables,
                                      l0_direct, l0_integral, local_law_trial, matched_z1, mean_se,
                                      no_outlier_trial, run_trials, smallest_singular_tail, two_sample_chi2,
                                      wilson_interval)
from deformed_iid.experiments.local_law import _resolvent_parts, default_B, default_pairs
from deformed_iid.mde import solve_v


def _task(seed, idx):
    return {"x": float(np.random.default_rng(seed).standard_normal()), "idx": idx}


def test_harness_worker_independent():
    a = run_trials(_task, 12, 5, workers=1)
    b = run_trials(_task, 12, 5, workers=3)
    assert [r.payload for r in a] == [r.payload for r in b]
    assert [r.seed for r in a] == [trial_seed(5, i) for i in range(12)]
    with pytest.raises(ValueError):
        run_trials(_task, 0, 5)


def test_trial_report_finite():
    with pytest.raises(ValueError):
        TrialReport(0, 1, "m", "o", {"x": np.nan}, 0.0)


def test_stats_helpers():
    m, se = mean_se(np.array([1.0, 2.0, 3.0, 4.0]))
    assert m == 2.5 and np.isclose(se, np.std([1, 2, 3, 4], ddof=1) / 2)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_isotropic_entries_against_explicit_inverse(rng):
    N = 6
    B = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    U, s, Vh = np.linalg.svd(B)
    etas = np.array([0.05, 0.7])
    Bs = [rng.standard_normal(2 * N)]
    pairs = [(rng.standard_normal(2 * N) + 1j * rng.standard_normal(2 * N),
              rng.standard_normal(2 * N) + 1j * rng.standard_normal(2 * N))]
    tr, iso = _resolvent_parts(U, s, Vh, etas, Bs, pairs)
    H = hermitize(B).matrix
    for k, eta in enumerate(etas):
        G = np.linalg.inv(H - 1j * eta * np.eye(2 * N))
        assert np.isclose(tr[0, k], np.trace(np.diag(Bs[0]) @ G) / (2 * N))
        u, y = pairs[0]
        assert np.isclose(iso[0, k], np.conj(u) @ G @ y)


def test_local_law_small():
    m = build_deformation({"kind": "zero", "N": 128})
    etas = np.logspace(-2, 0, 6)
    r = local_law_trial(m, 1.0, etas, 8, 1)
    assert r.avg_mean.shape == (2, 6) and r.iso_q95.shape == (2, 6)
    assert r.slope < 0
    assert np.all(np.isfinite(r.iso_ratio))
    with pytest.raises(ValueError):
        local_law_trial(m, 1.0, [0.0, 1.0], 2, 1)


def test_default_B_traceless():
    assert default_B(5)["alternating"].sum() == 0
    u, y = default_pairs(5)["random"]
    assert np.isclose(np.linalg.norm(u), 1)


@pytest.fixture(scope="module")
def spec_two():
    m = build_deformation({"kind": "twocluster", "N": 100})
    return m, brown.spec_eps(m, 100, 0.25, h=0.04, max_sigma_points=12)


def test_cluster_counts_two(spec_two):
    m, sp = spec_two
    r = cluster_count_trial(m, sp, 4, 3)
    assert sp.n_clusters == 2
    assert list(r.expected) == [50, 50]
    assert r.passed


def test_cluster_count_requires_matching_N(spec_two):
    _, sp = spec_two
    with pytest.raises(ValueError):
        cluster_count_trial(build_deformation({"kind": "twocluster", "N": 50}), sp, 1, 0)


def test_single_cluster_counts_N():
    m = build_deformation({"kind": "zero", "N": 64})
    sp = brown.spec_eps(m, 64, 0.25, h=0.05, max_sigma_points=8)
    r = cluster_count_trial(m, sp, 3, 0)
    assert np.all(r.counts[:, 0] == 64)


def test_no_outlier_planted_exception():
    m = build_deformation({"kind": "planted", "N": 101, "outlier": 2.5 + 3j})
    sp = brown.spec_eps(m, 101, 0.25, h=0.04, max_sigma_points=12)
    r = no_outlier_trial(m, sp, 2, 1, expected_exceptions=[2.5 + 3j])
    assert np.all(r.exception_dist <= 101 ** (-0.5 + 0.25))


def test_edge_counts_and_empty_window():
    m = build_deformation({"kind": "zero", "N": 64})
    r = collect_edge_counts(m, 1.0, 1.0, 5, 0)
    assert r.p1.shape == (24,) and np.all(r.p1_se >= 0)
    with pytest.raises(EdgeStatError):
        collect_edge_counts(m, 10.0, 1.0, 5, 0)


def test_edge_statistics_requires_sharp():
    A, z0 = brown.quadratic_edge_diag()
    ep = brown.edge_point(A, z0)
    with pytest.raises(EdgeStatError):
        edge_statistics(build_deformation({"kind": "zero", "N": 16}), ep, 2, 0)


def test_matched_z1():
    assert matched_z1(0.7, 0.98) == 1.0
    z1 = matched_z1(0.7 + 0.3j, 0.9)
    assert np.isclose(abs(z1), 1) and np.isclose(z1.imag, 0.27)
    z1 = matched_z1(0.7 + 0.3j, 5.0)
    assert np.isclose(z1.imag, 1.0)


def test_two_sample_chi2_same_distribution(rng):
    p = np.array([0.1, 0.2, 0.3, 0.4])
    a, b = rng.multinomial(4000, p), rng.multinomial(4000, p)
    chi2, pv, dof = two_sample_chi2(a, b)
    assert dof == 3 and 0 <= pv <= 1
    _, pv2, _ = two_sample_chi2(a, rng.multinomial(4000, [0.4, 0.3, 0.2, 0.1]))
    assert pv2 < 1e-6


def test_bump_laplacians_against_finite_differences():
    h = 1e-4
    for F in (Bump(0.1 + 0.2j, 0.5), AnnulusBump(0.0, 2.0, 0.4)):
        for z in (0.2 + 0.25j, 0.05 + 0.1j, 2.1 + 0.3j, -1.8j):
            fd = (F(z + h) + F(z - h) + F(z + 1j * h) + F(z - 1j * h) - 4 * F(z)) / h ** 2
            assert abs(fd - F.laplacian(z)) <= 1e-4 * (1 + abs(fd))


def test_girko_identity_and_linearity():
    m = build_deformation({"kind": "zero", "N": 32})
    X = sample_iid(m, trial_seed(3, 0)).deformed
    F1, F2 = Bump(0.0, 0.5), Bump(0.0, 0.8, amp=0.5)
    r1 = girko_identity_test(X, F1, n_theta=96, panels=12)
    r2 = girko_identity_test(X, F2, n_theta=96, panels=12)
    r12 = girko_identity_test(X, SumF((F1, F2), (1.0, 2.0)), n_theta=96, panels=12)
    assert r1.passed and r2.passed and r12.passed
    assert abs(r12.hermitized - (r1.hermitized + 2 * r2.hermitized)) <= 1e-3 * r12.lap_l1


def test_girko_harmonic_region():
    # annulus far outside the spectrum: both sides vanish
    m = build_deformation({"kind": "zero", "N": 32})
    X = sample_iid(m, trial_seed(4, 0)).deformed
    r = girko_identity_test(X, AnnulusBump(0.0, 3.0, 0.5), n_theta=96, panels=12)
    assert r.direct == 0.0 and r.passed


def test_l0_routes_and_n0_identity():
    m = build_deformation({"kind": "twocluster", "N": 64})
    ep = brown.find_edge(m, direction=1.0)
    obs = girko_observables(m, ep, 0.3 - 0.2j, 3, 11)
    assert obs.l0_route_dev <= 1e-6 * 64
    assert obs.n0_identity_dev <= 1e-12
    assert np.all(obs.N0 > 0)


def test_l0_deterministic_part_vanishes_at_large_eta():
    # with X = 0 the random and deterministic parts only differ through v - eta
    s = np.linspace(0.5, 2.0, 16)
    val, err = l0_integral(s, s, 1e3)
    assert abs(val - l0_direct(s, s, 1e3)) <= 1e-8 + err


def test_sstail_outside_and_monotone():
    m = build_deformation({"kind": "zero", "N": 64})
    ep = brown.find_edge(m, direction=1.0)
    far = smallest_singular_tail(m, ep, 25.0, 20, 1)
    assert far[0].p_hat == 0.0
    res = smallest_singular_tail(m, ep, 0.0, 60, 2, eta_factors=(1.0, 0.25))
    assert res[1].p_hat <= res[0].p_hat
    assert res[0].passed


def _strip(lam, lo, hi):
    return (lam.real > lo) & (lam.real < hi)


def test_no_outlier_gap_counts(spec_two):
    m, sp = spec_two
    from functools import partial
    r = no_outlier_trial(m, sp, 3, 2, gap=partial(_strip, lo=1.5, hi=3.5))
    assert r.gap_counts.shape == (3,) and np.all(r.gap_counts == 0)
    # a strip over the left cluster holds exactly its 50 eigenvalues
    r = no_outlier_trial(m, sp, 2, 2, gap=partial(_strip, lo=-2.0, hi=2.5))
    assert np.all(r.gap_counts == 50)
    assert no_outlier_trial(m, sp, 1, 2).gap_counts is None
