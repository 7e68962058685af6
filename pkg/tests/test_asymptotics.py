import math

import numpy as np
import pytest
from scipy.special import erf

from kellyext.asymptotics import (
    DiffusionEvaluator,
    WkbEvaluator,
    alpha0,
    alpha0_log,
    log_f0_log,
    scaled_profile,
)
from kellyext.gamble import EXAMPLE_GAMBLE, diffusion_params


@pytest.fixture(scope="module")
def wkb():
    return WkbEvaluator.for_gamble(EXAMPLE_GAMBLE)


@pytest.fixture(scope="module")
def diff():
    return DiffusionEvaluator.for_gamble(EXAMPLE_GAMBLE)


# -- alpha0 ---------------------------------------------------------------------


def test_alpha0_limits_and_value():
    assert alpha0(1e-300) == pytest.approx(1.0, abs=1e-15)
    assert alpha0(1e-8) == pytest.approx(1.0 - 0.5e-8, rel=1e-12)
    assert alpha0(1e300) < 2e-3
    assert alpha0_log(1e5) == pytest.approx(1e-5, rel=1e-3)
    assert alpha0(math.e - 1) == pytest.approx((math.e - 1) / math.e, rel=1e-14)
    with pytest.raises(ValueError):
        alpha0(0.0)


def test_alpha0_decreasing():
    q = np.linspace(-50, 50, 2001)
    # flat at 1.0 in double precision far to the left
    assert np.all(np.diff(alpha0_log(q)) <= 0)
    assert np.all(np.diff(alpha0_log(q[q > -30])) < 0)


def test_log_f0_log():
    for q in (-700.0, -40.0, -1.0, 0.0, 3.0, 800.0):
        ref = math.log(math.log1p(math.exp(q))) if -30 < q < 700 else (q if q < 0 else math.log(q))
        assert log_f0_log(q) == pytest.approx(ref, rel=1e-12)


# -- WKB ------------------------------------------------------------------------


def test_wkb_n0_is_terminal(wkb):
    for x in (1e-6, 0.3, 50.0):
        assert wkb(x, 0) == math.log1p(x)


def test_wkb_small_x_limit(wkb):
    n = 200
    x = math.exp(-3 * n * wkb.v1)
    assert wkb(x, n) == pytest.approx(1.025**n * x, rel=1e-2)


def test_wkb_large_x_limit(wkb):
    # the approach is slow (corrections go like 1/ln x), so go far out
    n = 200
    x = math.exp(20.0)
    assert wkb(x, n) == pytest.approx(math.log(x) + n * wkb.v0, rel=1e-2)


def test_wkb_shooting_residual(wkb):
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = float(rng.uniform(10, 1000))
        q = float(rng.uniform(-1.2 * n * wkb.v1, 2))
        r = wkb.value(math.exp(q), n)
        if 1e-9 < r.alpha < 1 - 1e-9:
            assert abs(r.alpha - alpha0(r.x0)) < 1e-10


def test_wkb_residual_monotone(wkb):
    al = np.linspace(0, 1, 501)
    for n in (10, 300, 1000):
        for q in (-50.0, -5.0, 0.0, 3.0):
            res = np.array([wkb.residual(a, q, n) for a in al])
            assert np.all(np.diff(res) > 0)


def test_wkb_alpha_nonincreasing_in_x(wkb):
    n = 500
    qs = np.linspace(-40, 5, 200)
    al = [wkb.value(math.exp(q), n).alpha for q in qs]
    assert all(0.0 <= a <= 1.0 for a in al)
    assert np.all(np.diff(al) <= 1e-12)


def test_wkb_forms_agree(wkb):
    for n in (50, 500, 1000):
        for s in (-0.055, -0.03, -0.01, -0.005, 0.001):
            x = math.exp(s * n)
            a = wkb.value(x, n).log_value
            b = wkb.log_value_maxv(x, n)
            assert b == pytest.approx(a, rel=1e-6, abs=1e-9)


def test_step_approximation_endpoints(wkb):
    n = 300
    assert wkb.step_approximation(math.exp(-n * wkb.v0), n) == pytest.approx(1.0, rel=1e-9)
    ref = math.exp(-n * (wkb.v1 - math.log(1.025)))
    assert wkb.step_approximation(math.exp(-n * wkb.v1), n) == pytest.approx(ref, rel=1e-7)
    with pytest.raises(ValueError):
        wkb.step_approximation(math.exp(-n * wkb.v1 * 1.2), n)
    with pytest.raises(ValueError):
        wkb.step_approximation(1.0, n)


def test_step_approximation_offset_bounded(wkb):
    # at fixed v the gap between the two WKB forms must not grow with n
    for v in (0.015, 0.03, 0.045):
        gaps = []
        for n in (500, 1000):
            x = math.exp(-v * n)
            gaps.append(wkb.value(x, n).log_value - math.log(wkb.step_approximation(x, n)))
        assert abs(gaps[1] - gaps[0]) < 0.5


def test_characteristics_start_on_alpha0(wkb):
    rows = wkb.characteristics([0.25, 0.5, 0.75], 100, 5)
    for al, n, q in rows:
        if n == 0:
            assert alpha0_log(q) == pytest.approx(al, abs=1e-12)
    # lines of constant alpha move left with slope kappa'
    (a0, _, q0), (_, n1, q1) = rows[0], rows[1]
    assert (q0 - q1) / n1 == pytest.approx(float(wkb.spectrum.kappa_prime_at(a0)), rel=1e-12)


# -- diffusion ------------------------------------------------------------------


def test_profile_closed_form():
    t = np.linspace(-5, 5, 101)
    ref = t * (1 + erf(t)) / 2 + np.exp(-t * t) / (2 * math.sqrt(math.pi))
    np.testing.assert_allclose(scaled_profile(t), ref, rtol=1e-12, atol=1e-15)


def test_profile_tails():
    assert scaled_profile(0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-15)
    assert scaled_profile(30.0) == pytest.approx(30.0, rel=1e-15)
    assert scaled_profile(-30.0) >= 0.0
    # asymptotically exp(-t^2) / (4 sqrt(pi) t^2)
    t = -20.0
    assert scaled_profile(t) == pytest.approx(math.exp(-t * t) / (4 * math.sqrt(math.pi) * t * t), rel=1e-2)


def test_diffusion_values(diff):
    n = 1000
    dp = diffusion_params(EXAMPLE_GAMBLE)
    x = math.exp(-dp.v0 * n)
    assert diff(x, n) == pytest.approx(math.sqrt(dp.D * n / math.pi), rel=1e-13)
    x = math.exp(60.0)
    assert diff(x, n) == pytest.approx(60.0 + dp.v0 * n, rel=1e-12)
    with pytest.raises(ValueError):
        diff(1.0, 0)


def test_diffusion_kernel_quadrature(diff):
    n = 1000
    w = diff.width(n)
    z = np.linspace(0.0, 12 * w + 50, 400_001)
    g0 = z
    for y in np.linspace(-diff.v0 * n - 2 * w, -diff.v0 * n + 2 * w, 9):
        quad = np.trapezoid(diff.kernel(n, y, z) * g0, z)
        assert quad == pytest.approx(float(diff(math.exp(y), n)), abs=1e-8)
