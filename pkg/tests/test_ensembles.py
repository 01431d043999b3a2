import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deformed_iid.ensembles import (DeformedModel, Deformation, EnsembleError, build_deformation, eigenvalues,
                                    hermitize, ou_transition, sample_iid, singular_values, trial_seed)


def test_same_seed_same_matrix():
    m = build_deformation({"kind": "zero", "N": 2})
    a, b = sample_iid(m, 42), sample_iid(m, 42)
    assert np.array_equal(a.entries, b.entries)


def test_complex_gaussian_mean_within_clt_bound():
    N = 512
    X = sample_iid(build_deformation({"kind": "zero", "N": N}), 3).entries
    assert abs(X.mean()) <= 4 / np.sqrt(N) / N * np.sqrt(N)  # sd of the mean is 1/N


def test_rademacher_entries():
    N = 512
    X = sample_iid(build_deformation({"kind": "zero", "N": N, "field": "real", "dist": "rademacher"}), 1).entries
    assert np.allclose(np.abs(X), 1 / np.sqrt(N))
    assert np.all(X.imag == 0)


@pytest.mark.parametrize("field", ["real", "complex"])
@pytest.mark.parametrize("dist", ["gaussian", "rademacher", "uniform"])
def test_moment_calibration(field, dist):
    N = 400  # 1.6e5 entries
    X = sample_iid(build_deformation({"kind": "zero", "N": N, "field": field, "dist": dist}), 11).entries.ravel()
    n = X.size
    # mean: sd of each component of the sample mean is 1/sqrt(N n) at most
    assert abs(X.mean()) <= 5 * np.sqrt(1 / N / n)
    a2 = np.abs(X) ** 2
    assert abs(a2.mean() - 1 / N) <= 5 * a2.std() / np.sqrt(n) + 1e-15
    if field == "complex":
        x2 = X ** 2
        assert abs(x2.mean()) <= 5 * x2.std() / np.sqrt(n)
    else:
        assert np.all(X.imag == 0)


def test_unknown_dist_rejected():
    with pytest.raises(EnsembleError):
        DeformedModel.from_diagonal(np.zeros(3), dist="cauchy")


def test_real_field_requires_real_A():
    with pytest.raises(EnsembleError):
        DeformedModel.from_diagonal(np.array([1j, 0]), field="real")


def test_non_square_rejected():
    with pytest.raises(EnsembleError):
        DeformedModel.from_matrix(np.zeros((2, 3)))
    with pytest.raises(EnsembleError):
        hermitize(np.zeros((2, 3)))


def test_ou_zero_time_is_identity():
    m = build_deformation({"kind": "zero", "N": 16})
    X0 = sample_iid(m, 5)
    assert np.array_equal(ou_transition(X0, 0.0, 9).entries, X0.entries)
    with pytest.raises(EnsembleError):
        ou_transition(X0, -1.0, 9)


def test_ou_long_time_decorrelates():
    N = 256
    m = build_deformation({"kind": "zero", "N": N})
    X0 = sample_iid(m, 5)
    Xt = ou_transition(X0, 50.0, 6)
    corr = np.abs(np.vdot(X0.entries, Xt.entries)) / (np.linalg.norm(X0.entries) * np.linalg.norm(Xt.entries))
    assert corr < 4 / N


def test_ou_frobenius_isometry():
    N, t, T = 128, 1.0, 100
    m = build_deformation({"kind": "zero", "N": N})
    d = []
    for k in range(T):
        X0 = sample_iid(m, trial_seed(1, k))
        Xt = ou_transition(X0, t, trial_seed(2, k))
        d.append(np.linalg.norm(Xt.entries - np.exp(-t / 2) * X0.entries) ** 2)
    d = np.array(d)
    expect = N * (1 - np.exp(-t))
    assert abs(d.mean() - expect) <= 5 * d.std(ddof=1) / np.sqrt(T)


def test_ou_preserves_variance():
    N = 300
    m = build_deformation({"kind": "zero", "N": N})
    Xt = ou_transition(sample_iid(m, 1), 0.7, 2).entries.ravel()
    a2 = np.abs(Xt) ** 2
    assert abs(a2.mean() - 1 / N) <= 5 * a2.std() / np.sqrt(a2.size)


def test_hermitize_small_cases():
    assert np.array_equal(hermitize(np.zeros((1, 1)), 0).matrix, np.zeros((2, 2)))
    ev = np.linalg.eigvalsh(hermitize(np.zeros((1, 1)), 1).matrix)
    assert np.allclose(ev, [-1, 1])


def test_hermitize_spectrum_is_pm_singular_values(rng):
    B = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    H = hermitize(B, 0.3 - 0.2j).matrix
    assert np.allclose(H, H.conj().T)
    s = singular_values(B - (0.3 - 0.2j) * np.eye(12))
    ev = np.linalg.eigvalsh(H)
    assert np.max(np.abs(np.sort(ev) - np.sort(np.concatenate([s, -s])))) <= 1e-8


def test_eigenvalue_examples(rng):
    assert np.allclose(np.sort_complex(eigenvalues(np.diag([1, 2, 3j]))), np.sort_complex([1, 2, 3j]))
    assert np.allclose(eigenvalues(np.array([[0, 1], [0, 0]])), 0)
    B = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    lam = eigenvalues(B, check_residual=True)
    assert abs(lam.sum() - np.trace(B)) <= 1e-8 * np.linalg.norm(B, 2)
    with pytest.raises(EnsembleError):
        eigenvalues(np.array([[np.nan]]))


def test_singular_value_examples(rng):
    assert np.allclose(singular_values(np.eye(3)), 1)
    assert np.allclose(singular_values(np.diag([2.0, 0.0])), [0, 2])
    B = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    gram = np.sqrt(np.clip(np.linalg.eigvalsh(B.conj().T @ B), 0, None))
    assert np.allclose(singular_values(B), gram, atol=1e-10)


def test_build_examples():
    z = build_deformation({"kind": "zero", "N": 8})
    assert np.all(z.A == 0) and z.N == 8
    tc = build_deformation({"kind": "twocluster", "N": 200})
    assert np.count_nonzero(tc.diag == 0) == 100 and np.count_nonzero(tc.diag == 5) == 100
    j = build_deformation({"kind": "jordan", "N": 4, "lam": 0})
    assert not j.is_diagonal and np.isclose(j.norm, 1.0)
    assert np.allclose(np.linalg.matrix_power(j.A, 4), 0)


def test_inverse_bound_request():
    m = build_deformation({"kind": "twocluster", "N": 10, "z0": 1.0})
    assert np.isclose(m.inv_norm, 1.0)
    with pytest.raises(EnsembleError):
        build_deformation({"kind": "twocluster", "N": 10, "z0": 5.0})


def test_json_roundtrip():
    m = build_deformation({"kind": "jordan", "N": 3, "lam": 0.5})
    back = DeformedModel.from_json(json.loads(json.dumps(m.to_json())))
    assert np.array_equal(back.A, m.A)


def test_deformation_moments_match_direct(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    z = 3.0 + 1.0j
    mom = Deformation(A).moments(np.asarray(z))
    R = np.linalg.inv(A - z * np.eye(6))
    avg = lambda X: np.trace(X) / 6
    assert np.isclose(mom["f"], avg(R @ R.conj().T).real)
    assert np.isclose(mom["I4"], avg(R @ R.conj().T @ R @ R.conj().T).real)
    assert np.isclose(mom["I3"], avg(R @ R @ R.conj().T))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(0, 10 ** 6))
def test_trial_seed_deterministic(base, idx):
    assert trial_seed(base, idx) == trial_seed(base, idx)
    assert trial_seed(base, idx) != trial_seed(base, idx + 1)
