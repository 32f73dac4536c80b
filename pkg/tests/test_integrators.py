import math

import numpy as np
import pytest

from ddalab import lorenz as lz
from ddalab.integrators import BlowUpError, Scheme, StepperConfig, integrate, step_sizes


class Decay:
    def rhs(self, y):
        return -y


class Bernoulli:
    """``du/dt = -u + u^2`` split as linear ``-u`` plus ``u^2``."""

    linear = np.array(-1.0)

    def nonlinear(self, y):
        return y * y

    def rhs(self, y):
        return -y + y * y


def bernoulli_exact(u0, t):
    return 1.0 / (1.0 + (1.0 / u0 - 1.0) * math.exp(t))


class Explosive:
    def rhs(self, y):
        return y * y


def test_zero_length_is_identity():
    y = np.array([1.0, 2.0, 3.0])
    out = integrate(lz.LorenzSystem(), y, 2.0, 2.0, StepperConfig("RK4", 1e-3))
    assert np.array_equal(out, y)


def test_decay_matches_exponential():
    y = integrate(Decay(), np.array(1.0), 0.0, 1.0, StepperConfig("RK4", 1e-3))
    assert abs(float(y) - math.exp(-1)) < 1e-10


@pytest.mark.parametrize("scheme, system, exact", [
    ("RK4", Decay(), lambda: math.exp(-1)),
    ("IFRK4", Bernoulli(), lambda: bernoulli_exact(0.5, 1.0)),
])
def test_fourth_order_convergence(scheme, system, exact):
    errors = []
    for dt in (0.1, 0.05, 0.025):
        y = integrate(system, np.array(0.5 if scheme == "IFRK4" else 1.0), 0.0, 1.0,
                      StepperConfig(scheme, dt))
        errors.append(abs(float(y) - exact()))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    assert all(13 < r < 19 for r in ratios), ratios


def test_deterministic():
    cfg = StepperConfig("RK4", 1e-3)
    y0 = np.array([1.0, -2.0, 20.0])
    a = integrate(lz.LorenzSystem(), y0, 0.0, 3.0, cfg)
    b = integrate(lz.LorenzSystem(), y0, 0.0, 3.0, cfg)
    assert np.array_equal(a, b)


def test_semigroup_within_local_error():
    cfg = StepperConfig("RK4", 1e-3)
    sys_ = lz.LorenzSystem()
    y0 = lz.spin_up(t_spinup=5.0)
    whole = integrate(sys_, y0, 0.0, 0.5, cfg)
    split = integrate(sys_, integrate(sys_, y0, 0.0, 0.2, cfg), 0.2, 0.5, cfg)
    # local error estimate: one dt step against two dt/2 steps
    one = integrate(sys_, y0, 0.0, 1e-3, cfg)
    two = integrate(sys_, y0, 0.0, 1e-3, StepperConfig("RK4", 5e-4))
    local = np.linalg.norm(one - two)
    assert np.linalg.norm(whole - split) <= 10 * local + 1e-12


def test_numba_kernel_matches_generic_path():
    class Generic:
        def rhs(self, y):
            return lz.rhs_components(lz.LorenzParams(), y)

    y0 = np.array([[1.0, 2.0, 3.0], [-4.0, 5.0, -6.0]])
    cfg = StepperConfig("RK4", 1e-3)
    fast = integrate(lz.LorenzSystem(), y0, 0.0, 0.7305, cfg)
    slow = integrate(Generic(), y0, 0.0, 0.7305, cfg)
    np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-12)


def test_step_sizes_land_on_t1():
    assert step_sizes(0.0, 0.1, 1e-3) == (100, pytest.approx(1e-3))
    n, last = step_sizes(0.0, 0.00125, 1e-3)
    assert n == 2 and last == pytest.approx(0.00025)
    assert step_sizes(1.0, 1.0, 0.1) == (0, 0.0)
    with pytest.raises(ValueError):
        step_sizes(1.0, 0.5, 0.1)


def test_partial_final_step_is_exact_for_decay():
    y = integrate(Decay(), np.array(1.0), 0.0, 0.10037, StepperConfig("RK4", 1e-3))
    assert abs(float(y) - math.exp(-0.10037)) < 1e-12


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_blowup_reports_time():
    with pytest.raises(BlowUpError) as info:
        integrate(Explosive(), np.array(1.0), 0.0, 2.0, StepperConfig("RK4", 1e-2))
    assert 0.9 < info.value.t <= 2.0


def test_lorenz_blowup_reports_time():
    with pytest.raises(BlowUpError) as info:
        integrate(lz.LorenzSystem(), np.array([1.0, 1.0, 1.0]), 0.0, 50.0, StepperConfig("RK4", 0.5))
    assert 0 < info.value.t <= 50.0


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig("RK4", 0.0)
    with pytest.raises(ValueError):
        StepperConfig("Euler", 1e-3)
    assert StepperConfig("IFRK4", 0.1).scheme is Scheme.IFRK4
