import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import bisect
from deformed_iid.mde import (MdeConvergenceError, cubic_residual, log_potential, m_matrix, mde_residual, solve_at,
                              solve_scalar, solve_v, solve_v_zero)


def bisect_v(s, eta):
    g = lambda v: v - eta - np.mean(v / (s ** 2 + v ** 2))
    return bisect(g, eta, eta + 1.0 + eta, tol=1e-14)


def test_proportional_to_identity_inside():
    sol = solve_scalar(np.full(10, 0.6), 1e-9)
    assert abs(sol.v - 0.8) <= 1e-6
    assert abs(sol.rho - 0.8 / np.pi) <= 1e-6
    assert sol.rho == (sol.v - sol.eta) / np.pi


def test_edge_scaling_exponent():
    etas = np.logspace(-9, -3, 25)
    v = np.array([solve_scalar(np.ones(4), e).v for e in etas])
    slope = np.polyfit(np.log(etas), np.log(v), 1)[0]
    assert abs(slope - 1 / 3) <= 0.02


def test_outside_against_bisection():
    s = np.full(5, 2.0)
    v = solve_scalar(s, 1e-6).v
    assert abs(v - bisect_v(s, 1e-6)) <= 1e-12
    # small-eta limit: v/eta -> 1/(1 - f) with f = 1/4
    assert abs(v / 1e-6 - 4 / 3) <= 0.1 * 4 / 3


def test_random_instances_against_bisection(rng):
    for _ in range(100):
        N = rng.integers(1, 129)
        s = np.abs(rng.standard_normal(N)) * rng.uniform(0.1, 3)
        eta = 10 ** rng.uniform(-8, 1)
        sol = solve_scalar(s, eta)
        assert sol.residual <= 1e-12 * (1 + sol.v)
        assert abs(sol.v - bisect_v(s, eta)) <= 1e-12
        assert sol.v >= eta


def test_bad_eta():
    with pytest.raises(ValueError):
        solve_scalar(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        solve_scalar(np.ones(3), -1.0)


def test_vectorised_matches_scalar(rng):
    s = np.sort(np.abs(rng.standard_normal((4, 30))), axis=1)
    eta = np.array([1e-6, 1e-3, 0.1, 3.0])
    v = solve_v(s, eta)
    for k in range(4):
        assert np.isclose(v[k], solve_scalar(s[k], eta[k]).v, rtol=0, atol=1e-14)


def test_zero_limit():
    assert solve_v_zero(np.full(3, 2.0)) == 0.0
    assert np.isclose(solve_v_zero(np.full(3, 0.6)), 0.8)
    s = np.array([0.3, 0.9, 1.7])
    v0 = solve_v_zero(s)
    assert np.isclose(solve_v(s, 1e-13), v0, atol=1e-10)


def test_m_matrix_identity_case():
    mm = m_matrix(np.zeros((4, 4)), 0.6, 1e-9)
    N = 4
    M = mm.M
    assert np.allclose(np.diag(M)[:N], 0.8j, atol=1e-8)
    assert np.allclose(np.diag(M)[N:], 0.8j, atol=1e-8)
    assert abs(mm.trace_avg.real) <= 1e-12


def test_m_matrix_invariants(rng):
    for _ in range(10):
        N = 8
        A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        z = complex(*rng.standard_normal(2))
        eta = 10 ** rng.uniform(-4, 0)
        mm = m_matrix(A, z, eta)
        M = mm.M
        assert abs(mm.trace_avg.real) <= 1e-12
        assert abs(mm.trace_avg.imag - (mm.owner.v - eta)) <= 1e-10
        assert np.linalg.norm(M, 2) <= np.linalg.norm(np.linalg.inv(A - z * np.eye(N)), 2) * (1 + 1e-12)
        ImM = (M - M.conj().T) / 2j
        assert np.linalg.eigvalsh(ImM).min() > 0
        # M solves -1/M = -H + i eta + <M> on the imaginary axis
        H = np.block([[np.zeros((N, N)), A - z * np.eye(N)], [(A - z * np.eye(N)).conj().T, np.zeros((N, N))]])
        lhs = -np.linalg.inv(M)
        rhs = -H + (1j * eta + mm.trace_avg) * np.eye(2 * N)
        assert np.allclose(lhs, rhs, atol=1e-8 * np.abs(rhs).max())


def test_log_potential_values():
    assert abs(log_potential(np.zeros(1), 10.0) - (-np.log(10))) <= 2e-3
    assert abs(log_potential(np.zeros(1), 0.0) - 0.5) <= 2e-3
    r = np.linspace(1.1, 4, 12)
    vals = log_potential(np.zeros(1), r.astype(complex))
    assert np.all(np.diff(vals) < 0)


def test_log_potential_routes_agree(rng):
    A = np.diag(rng.standard_normal(6) + 1j * rng.standard_normal(6))
    for z in (0.1 + 0.2j, 2.5 - 1j, 0.8j):
        closed = log_potential(A, z)
        quad, err = log_potential(A, z, method="quad", full_output=True)
        assert abs(closed - quad) <= max(1e-8, 10 * err)


def test_log_potential_against_disk_quadrature():
    # -int log|z - w| d mu(w) over the uniform unit disk, by 2-D Gauss quadrature
    xr, wr = np.polynomial.legendre.leggauss(200)
    r = 0.5 * (xr + 1)
    wr = 0.5 * wr
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    for z in (0.3, 0.7j, 1.8):
        pts = r[:, None] * np.exp(1j * th)[None, :]
        integrand = -np.log(np.abs(z - pts)) * r[:, None] / np.pi
        ref = np.sum(integrand * wr[:, None]) * 2 * np.pi / th.size
        assert abs(log_potential(np.zeros(1), z) - ref) <= 2e-3


def test_cubic_residual_examples():
    assert abs(cubic_residual(np.zeros(1), 1.0, 0.0, 1e-6)) <= 5 * (1e-6 ** (1 / 3)) ** 5
    assert cubic_residual(np.zeros(1), 1.0, 0.0, 0.0) == 0.0
    for w in (-1e-2, -1e-3, -1e-4):
        assert abs(cubic_residual(np.zeros(1), 1.0, w, 0.0)) <= 5 * (abs(w) ** 0.5) ** 5


def test_solve_at_matches_svals(two_cluster):
    sol = solve_at(np.diag(two_cluster), 0.3 + 0.1j, 1e-3)
    s = np.abs(two_cluster - (0.3 + 0.1j))
    assert abs(sol.v - bisect_v(s, 1e-3)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(1, 40), elements=st.floats(0.0, 10.0)),
       st.floats(1e-10, 1e2))
def test_property_fixed_point(s, eta):
    sol = solve_scalar(s, eta)
    assert sol.v >= eta
    assert abs(mde_residual(sol.svals, sol.weights, eta, sol.v)) <= 1e-12 * (1 + sol.v)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.integers(1, 20), elements=st.floats(0.01, 5.0)))
def test_property_eta_rho_monotone(s):
    etas = np.logspace(-8, 2, 30)
    v = solve_v(np.broadcast_to(np.sort(s), (30, s.size)), etas)
    er = etas * (v - etas)
    assert np.all(np.diff(er) >= -1e-12 * np.abs(er[1:]))
