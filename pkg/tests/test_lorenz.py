import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ddalab import lorenz as lz
from ddalab.analysis import adaptive_simpson
from ddalab.integrators import StepperConfig, integrate

P = lz.LorenzParams()
vec = arrays(np.float64, 3, elements=st.floats(-10 / math.sqrt(3), 10 / math.sqrt(3)))


def classic_rhs(p, u):
    """The textbook Lorenz equations in the shifted variable ``Z = z - r - sigma``."""
    X, Y, Z = u
    z = Z + p.r + p.sigma
    return np.array([p.sigma * (Y - X), p.r * X - Y - X * z, X * Y - p.b * z])


def test_rhs_at_origin():
    np.testing.assert_allclose(lz.rhs(P, np.zeros(3)), [0, 0, -P.b * (P.r + P.sigma)])
    assert lz.rhs(P, np.zeros(3))[2] == pytest.approx(-101.333333333333)


def test_rhs_at_ones():
    np.testing.assert_allclose(lz.rhs(P, np.ones(3)), [0.0, -12.0, 1 - P.b - P.b * (P.r + P.sigma)], atol=1e-12)


def test_rhs_forms_agree(rng):
    for _ in range(200):
        u = rng.normal(scale=20, size=3)
        a = lz.rhs(P, u)
        b = lz.rhs_components(P, u)
        c = classic_rhs(P, u)
        scale = np.linalg.norm(c)
        assert np.linalg.norm(a - c) <= 1e-14 * scale
        assert np.linalg.norm(b - c) <= 1e-14 * scale


def test_bilinear_at_ones():
    np.testing.assert_array_equal(lz.bilinear_B(np.ones(3), np.ones(3)), [0, 1, -1])


@settings(max_examples=200, deadline=None)
@given(u=vec, v=vec)
def test_bilinear_symmetric_and_bounded(u, v):
    np.testing.assert_allclose(lz.bilinear_B(u, v), lz.bilinear_B(v, u), atol=1e-13)
    assert np.linalg.norm(lz.bilinear_B(u, v)) <= 0.5 * np.linalg.norm(u) * np.linalg.norm(v) + 1e-12


@settings(max_examples=200, deadline=None)
@given(u=vec)
def test_bilinear_orthogonal(u):
    assert abs(lz.bilinear_B(u, u) @ u) <= 1e-13


@settings(max_examples=100, deadline=None)
@given(u=arrays(np.float64, 3, elements=st.floats(-1e3, 1e3)))
def test_A_coercive(u):
    A = lz.linear_operator(P)
    assert (A @ u) @ u >= u @ u * (1 - 1e-12)


def test_attractor_bound():
    assert lz.attractor_bound_K(P) == pytest.approx(92416 / 60, rel=1e-15)
    assert lz.attractor_bound_K(lz.LorenzParams(10.0, 2.0, 28.0)) == pytest.approx(1444.0)


def test_params_reject_b_le_1():
    with pytest.raises(ValueError, match=r"4\(b-1\)|4 \(b - 1\)|b - 1|b-1"):
        lz.LorenzParams(10.0, 1.0, 28.0)


def test_growth_rate():
    assert lz.growth_rate_beta(P) == pytest.approx(2 * (math.sqrt(92416 / 60) - 1), rel=1e-12)
    assert lz._beta_from_K(1.0) == 0.0
    with pytest.raises(ValueError):
        lz._beta_from_K(0.5)


def test_contraction_M_basics():
    assert lz.contraction_M(P, 0.0) == 1.0
    ts = lz.t_star(P)
    assert ts == pytest.approx(0.000129, rel=0.05)
    assert lz.contraction_M(P, 0.5 * ts) < 1
    assert lz.contraction_M(P, 1.5 * ts) > 1


@pytest.mark.parametrize("tau", [1e-5, 1e-4, 1e-3])
def test_contraction_M_matches_quadrature(tau):
    K = lz.attractor_bound_K(P)
    beta = lz.growth_rate_beta(P)
    s = P.sigma
    integrand = lambda x: math.exp((beta + 1) * x) - math.exp(-(s - 1) * x)  # noqa: E731
    quad = math.exp(-tau) * (1 + s * K / (beta + s) * adaptive_simpson(integrand, 0.0, tau, 1e-13))
    assert lz.contraction_M(P, tau) == pytest.approx(quad, rel=1e-10)


def test_contraction_M_sigma_one_is_continuous():
    a = lz.contraction_M(lz.LorenzParams(1.0, 8 / 3, 28.0), 1e-3)
    b = lz.contraction_M(lz.LorenzParams(1.0 + 1e-7, 8 / 3, 28.0), 1e-3)
    assert a == pytest.approx(b, rel=1e-6)


def test_proj_X_algebra(rng):
    P_ = lz.proj_X()
    np.testing.assert_array_equal(P_.apply_P(np.array([1.0, 2.0, 3.0])), [1, 0, 0])
    np.testing.assert_array_equal(P_.apply_Q(np.array([1.0, 2.0, 3.0])), [0, 2, 3])
    for _ in range(50):
        u, v = rng.normal(size=3), rng.normal(size=3)
        np.testing.assert_array_equal(P_.apply_P(P_.apply_P(u)), P_.apply_P(u))
        np.testing.assert_array_equal(P_.apply_P(P_.apply_Q(u)), 0)
        assert abs(P_.apply_P(u) @ P_.apply_Q(v)) <= 1e-13


def test_boundedness_constants_direct():
    K = 92416 / 60
    f2 = (P.b * (P.r + P.sigma)) ** 2
    g = math.exp(-1.0)
    M1, M4 = lz.boundedness_constants(P, None, 1.0)
    assert M1 == pytest.approx(K * g + f2 * (1 - g) + K + f2, rel=1e-14)
    assert M4 >= math.sqrt(K) + math.sqrt(2 * K)


def test_spinup_stays_in_absorbing_ball():
    K = lz.attractor_bound_K(P)
    y = lz.spin_up(P, t_spinup=100.0)
    cfg = StepperConfig("RK4", 1e-3)
    worst = 0.0
    for k in range(2000):
        y = integrate(lz.LorenzSystem(P), y, 0.1 * k, 0.1 * (k + 1), cfg)
        worst = max(worst, float(y @ y))
    assert worst <= K


def test_attractor_sampled_with_fine_step():
    K = lz.attractor_bound_K(P)
    y = lz.spin_up(P, seed=3)
    cfg = StepperConfig("RK4", 1e-4)
    for k in range(100):
        y = integrate(lz.LorenzSystem(P), y, 0.1 * k, 0.1 * (k + 1), cfg)
        assert y @ y <= K


def test_growth_and_observed_part_along_windows():
    """|delta(t)|^2 <= |delta_n|^2 e^(beta s) and
    |P delta(t)|^2 <= sigma |delta_n|^2 (e^(beta s) - e^(-sigma s)) / (beta + sigma)."""
    sys_ = lz.LorenzSystem(P)
    obs = lz.proj_X()
    beta = lz.growth_rate_beta(P)
    cfg = StepperConfig("RK4", 1e-3)
    U = lz.spin_up(P, seed=1)
    u = obs.apply_P(U)
    h, sub = 0.2, 0.01
    t = 0.0
    for _ in range(100):
        d0 = float(np.sum((U - u) ** 2))
        for j in range(1, 21):
            U = integrate(sys_, U, t + (j - 1) * sub, t + j * sub, cfg)
            u = integrate(sys_, u, t + (j - 1) * sub, t + j * sub, cfg)
            s = j * sub
            d = U - u
            assert d @ d <= d0 * math.exp(beta * s) * (1 + 1e-6)
            bound_P = P.sigma * d0 * (math.exp(beta * s) - math.exp(-P.sigma * s)) / (beta + P.sigma)
            assert d[0] ** 2 <= bound_P * (1 + 1e-6)
        t += h
        u = obs.insert(u, U)


def test_lorenz_bounds_report():
    b = lz.lorenz_bounds(P)
    names = [r[0] for r in b.as_rows()]
    assert {"K", "beta", "t_star", "R", "M1", "M4"} <= set(names)
    assert lz.contraction_M(P, b.t_star) <= 1 + 1e-12
