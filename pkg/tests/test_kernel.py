import mpmath
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc, gammaincc

from deformed_iid.experiments.kernel import ginibre_kernel, kernel_eval, p1, p1_bin_profile, p2_bin_profile, p_gin_k

cplx = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_k00():
    assert np.isclose(ginibre_kernel(0, 0), 1 / (2 * np.pi), rtol=0, atol=1e-15)
    assert abs(ginibre_kernel(0, 0) - 0.159155) < 1e-6


def test_complex_erfc_against_mpmath(rng):
    mpmath.mp.dps = 40
    z = (rng.uniform(-1, 1, 400) + 1j * rng.uniform(-1, 1, 400)) * 7.0
    z = z[np.abs(z) <= 10]
    ref = np.array([complex(mpmath.erfc(mpmath.mpc(x.real, x.imag))) for x in z])
    rel = np.abs(erfc(z) - ref) / np.maximum(np.abs(ref), 1e-300)
    assert rel.max() <= 1e-12


def test_p1_diagonal_and_limits():
    w = np.array([-10.0, -0.3 + 1j, 0.0, 0.4 - 2j, 5.0])
    assert np.allclose(p1(w), np.real(ginibre_kernel(w, w)), atol=1e-15)
    assert np.isclose(p1(-10.0), 1 / np.pi)
    assert p1(10.0) < 1e-40


def test_p1_matches_finite_N_ginibre():
    # exact complex Ginibre density: (N/pi) Q(N, N|z|^2); rescaled at z = 1 + w/sqrt(N)
    N = 10 ** 6
    for x in np.linspace(-3, 2, 11):
        z = 1 + x / np.sqrt(N)
        exact = gammaincc(N, N * abs(z) ** 2) / np.pi
        assert abs(exact - p1(x)) <= 5 / np.sqrt(N)


def test_literal_kernel_profile_differs():
    # the profile with erf(-2 sqrt2 x) is steeper than the Ginibre limit
    N = 10 ** 6
    x = 0.3
    exact = gammaincc(N, N * abs(1 + x / np.sqrt(N)) ** 2) / np.pi
    literal = erfc(2 * np.sqrt(2) * x) / (2 * np.pi)
    assert abs(exact - literal) > 0.02


def test_p2_repulsion():
    assert p_gin_k([0.3 + 0.1j, 0.3 + 0.1j]) <= 1e-15
    ke = kernel_eval([0.1, -0.5j])
    assert ke.k == 2 and ke.value > 0


def test_bin_profile():
    edges = np.arange(-4, 2.0001, 0.25)
    prof = p1_bin_profile(edges)
    xs = np.linspace(-4, 2, 600001)
    brute = [p1(xs[(xs >= a) & (xs <= b)]).mean() for a, b in zip(edges[:-1], edges[1:])]
    assert np.allclose(prof, brute, atol=1e-6)


def test_p2_profile_bounded_by_product():
    edges = np.arange(-4, 2.0001, 1.0)
    p2 = p2_bin_profile(edges)
    p1b = p1_bin_profile(edges)
    assert np.all(p2 <= np.outer(p1b, p1b) + 1e-12)
    assert np.allclose(p2, p2.T)


@settings(max_examples=60, deadline=None)
@given(cplx, cplx)
def test_property_hermitian_and_negative_association(w1, w2):
    k12, k21 = ginibre_kernel(w1, w2), ginibre_kernel(w2, w1)
    assert abs(k12 - np.conj(k21)) <= 1e-12 * (1 + abs(k12))
    assert p_gin_k([w1, w2]) <= p1(w1) * p1(w2) + 1e-14


@settings(max_examples=60, deadline=None)
@given(cplx)
def test_property_p1_range(w):
    v = p1(w)
    assert 0 <= v <= 1 / np.pi + 1e-15
