import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kellyext.gamble import (
    EXAMPLE_GAMBLE,
    Gamble,
    RateSpectrum,
    Verdict,
    attractiveness_threshold,
    classify,
    diffusion_params,
    drift_and_diffusion,
    entropy_rate_s,
    expected_utility,
    failure_rate_h,
    growth_rate_r,
    isoelastic_utility,
    kappa,
    kappa_prime,
    mean_gain,
    optimal_fraction,
    utility_slope,
)

V0 = 0.5 * math.log(1.1) + 0.5 * math.log(11 / 12)
V1 = (0.5 * 1.3 * math.log(1.3) + 0.5 * 0.75 * math.log(0.75)) / 1.025


def golden_scan(fun, lo=0.0, hi=1.0, num=200_001):
    lam = np.linspace(lo, hi, num)
    vals = np.array([fun(x) for x in lam]) if num < 5000 else fun(lam)
    return lam[np.argmax(vals)]


# -- Gamble ---------------------------------------------------------------------


def test_gamble_validation():
    with pytest.raises(ValueError):
        Gamble([1.2, 0.8], [0.5, 0.6])
    with pytest.raises(ValueError):
        Gamble([1.2, -0.1], [0.5, 0.5])
    with pytest.raises(ValueError):
        Gamble([1.2], [0.5, 0.5])
    with pytest.raises(ValueError):
        Gamble([1.2, 0.8], [0.0, 1.0])


def test_gamble_json_round_trip():
    g = Gamble([2.0, 1.0, 0.5], [0.2, 0.3, 0.5])
    assert Gamble.from_json(g.to_json()) == g
    assert g.digest() == Gamble.from_dict(g.to_dict()).digest()
    assert g.digest() != EXAMPLE_GAMBLE.digest()


@pytest.mark.parametrize(
    "gains,probs,expected",
    [([1.3, 0.75], [0.5, 0.5], 1.025), ([1.0], [1.0], 1.0), ([1000, 0.1], [0.1, 0.9], 100.09)],
)
def test_mean_gain(gains, probs, expected):
    assert mean_gain(Gamble(gains, probs)) == pytest.approx(expected, rel=1e-14)


# -- utilities ------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [-2.0, -0.5, 0.0, 0.3, 1.0])
def test_utility_at_one_is_zero(alpha):
    assert isoelastic_utility(1.0, alpha) == 0.0


def test_utility_values():
    assert isoelastic_utility(math.e, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert isoelastic_utility(4.0, 0.5) == pytest.approx(2.0, rel=1e-15)


def test_utility_continuous_at_zero():
    x = 3.7
    assert isoelastic_utility(x, 1e-9) == pytest.approx(math.log(x), rel=1e-8)


def test_utility_domain():
    with pytest.raises(ValueError):
        isoelastic_utility(0.0, 0.5)
    with pytest.raises(ValueError):
        isoelastic_utility(2.0, 1.5)


@settings(max_examples=200, deadline=None)
@given(
    x=st.floats(1e-3, 1e3),
    alpha=st.floats(-3.0, 1.0),
)
def test_utility_increasing_and_concave(x, alpha):
    h = 1e-4 * x
    u = [isoelastic_utility(x + d, alpha) for d in (-h, 0.0, h)]
    assert u[2] > u[1] > u[0]
    assert u[0] + u[2] - 2 * u[1] <= 1e-9 * max(1.0, abs(u[1]))


# -- classification and optimal fraction ----------------------------------------


def test_classify_examples():
    c = classify(EXAMPLE_GAMBLE, 0.0)
    assert c.verdict is Verdict.INTERMEDIATE
    assert c.lambda_star == pytest.approx(1 / 3, abs=1e-8)
    c = classify(EXAMPLE_GAMBLE, 0.67)
    assert c.verdict is Verdict.ATTRACTIVE and c.lambda_star == 1.0
    assert classify(Gamble([1000, 0.1], [0.1, 0.9]), 0.5).verdict is Verdict.ATTRACTIVE
    for al in (-1.0, 0.0, 0.5, 1.0):
        c = classify(Gamble([0.9, 1.0], [0.5, 0.5]), al)
        assert c.verdict is Verdict.UNFAVORABLE and c.lambda_star == 0.0


def test_degenerate_gamble_is_unfavorable():
    c = classify(Gamble([1.0, 1.0], [0.5, 0.5]), 0.0)
    assert c.verdict is Verdict.UNFAVORABLE and c.lambda_star == 0.0


def test_kelly_fraction_closed_form():
    # 0.3 (1 - 0.25 lam) = 0.25 (1 + 0.3 lam)  =>  lam = 0.05 / 0.15
    assert optimal_fraction(EXAMPLE_GAMBLE, 0.0) == pytest.approx(0.05 / 0.15, abs=1e-8)


def test_linear_utility_bets_everything():
    assert optimal_fraction(EXAMPLE_GAMBLE, 1.0) == 1.0


def test_fraction_against_dense_scan():
    lam = np.linspace(0, 1, 200_001)
    u = np.array([expected_utility(EXAMPLE_GAMBLE, 0.3, x) for x in lam[::100]])
    coarse = lam[::100][np.argmax(u)]
    fine = np.linspace(coarse - 1e-3, coarse + 1e-3, 20_001)
    u = [expected_utility(EXAMPLE_GAMBLE, 0.3, x) for x in fine]
    ref = fine[int(np.argmax(u))]
    got = optimal_fraction(EXAMPLE_GAMBLE, 0.3)
    assert 1 / 3 < got < 1
    assert got == pytest.approx(ref, abs=2e-7)


def test_fraction_monotone_in_alpha():
    al = np.linspace(0, 1, 101)
    lam = [optimal_fraction(EXAMPLE_GAMBLE, a) for a in al]
    assert np.all(np.diff(lam) >= -1e-12)


gambles = st.integers(2, 4).flatmap(
    lambda m: st.tuples(
        st.lists(st.floats(0.2, 3.0), min_size=m, max_size=m),
        st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m),
    )
).map(lambda t: Gamble(t[0], np.array(t[1]) / sum(t[1])) if abs(sum(np.array(t[1]) / sum(t[1])) - 1) < 1e-12 else Gamble(t[0][:1], [1.0]))


@settings(max_examples=100, deadline=None)
@given(g=gambles, alpha=st.floats(-2.0, 1.0), l1=st.floats(0, 1), l2=st.floats(0, 1))
def test_expected_utility_concave_in_fraction(g, alpha, l1, l2):
    mid = expected_utility(g, alpha, 0.5 * (l1 + l2))
    chord = 0.5 * (expected_utility(g, alpha, l1) + expected_utility(g, alpha, l2))
    assert mid >= chord - 1e-10 * max(1.0, abs(chord))


@settings(max_examples=100, deadline=None)
@given(g=gambles, alpha=st.floats(-2.0, 1.0))
def test_classify_consistent_with_slope(g, alpha):
    c = classify(g, alpha)
    if c.lambda_star == 0.0:
        assert utility_slope(g, alpha, 0.0) <= 1e-12
    elif c.lambda_star == 1.0:
        assert utility_slope(g, alpha, 1.0) >= -1e-12
    else:
        scale = float(np.max(np.abs(g.a - 1.0))) * 10
        assert abs(utility_slope(g, alpha, c.lambda_star)) < 1e-9 * scale


# -- attractiveness threshold ---------------------------------------------------


def test_threshold_matches_closed_form():
    al1 = attractiveness_threshold(EXAMPLE_GAMBLE)
    assert al1 == pytest.approx(1 + math.log(5 / 6) / math.log(26 / 15), abs=1e-6)
    assert al1 == pytest.approx(0.6685, abs=1e-3)


def test_threshold_edge_cases():
    # 1 - sum p/a >= 0: attractive already for the logarithm
    assert attractiveness_threshold(Gamble([3.0, 0.9], [0.5, 0.5])) == 0.0
    assert attractiveness_threshold(Gamble([0.9, 1.0], [0.5, 0.5])) == math.inf


# -- growth rates ---------------------------------------------------------------


def test_growth_rate_examples():
    assert growth_rate_r(EXAMPLE_GAMBLE, 0.0, 0.7) == 0.0
    assert growth_rate_r(EXAMPLE_GAMBLE, 1.0, 1.0) == pytest.approx(math.log(1.025), rel=1e-14)
    ref = math.log(0.5 * math.sqrt(1.15) + 0.5 * math.sqrt(0.875))
    assert growth_rate_r(EXAMPLE_GAMBLE, 0.5, 0.5) == pytest.approx(ref, rel=1e-13)


def test_growth_rate_domain():
    with pytest.raises(ValueError):
        growth_rate_r(Gamble([3.0, 0.0 + 1e-9], [0.5, 0.5]), 0.5, 1.0 + 1e-6)


def test_kappa_endpoints():
    k0, l0 = kappa(EXAMPLE_GAMBLE, 0.0)
    assert k0 == 0.0
    assert kappa_prime(EXAMPLE_GAMBLE, 0.0) == pytest.approx(V0, rel=1e-9)
    k1, l1 = kappa(EXAMPLE_GAMBLE, 1.0)
    assert k1 == pytest.approx(math.log(1.025), rel=1e-14) and l1 == 1.0
    assert kappa_prime(EXAMPLE_GAMBLE, 1.0) == pytest.approx(V1, rel=1e-12)
    assert V0 == pytest.approx(0.0041494, abs=1e-7)
    assert V1 == pytest.approx(0.06113, abs=1e-5)


def test_kappa_is_max_over_fraction():
    for al in (0.2, 0.5, 0.8):
        lam = np.linspace(0, 1, 20001)
        best = max(growth_rate_r(EXAMPLE_GAMBLE, al, x) for x in lam[::20])
        assert kappa(EXAMPLE_GAMBLE, al)[0] >= best - 1e-12


def _random_favorable(rng):
    m = int(rng.integers(2, 5))
    a = rng.uniform(0.3, 2.5, m)
    a[0] = max(a[0], 1.2)
    p = rng.dirichlet(np.ones(m))
    g = Gamble(a, p / p.sum())
    return g if g.is_favorable else None


def test_kappa_convex_random_gambles():
    rng = np.random.default_rng(3)
    done = 0
    while done < 8:
        g = _random_favorable(rng)
        if g is None:
            continue
        al = np.linspace(0, 1, 101)
        k = np.array([kappa(g, a)[0] for a in al])
        kp = np.array([kappa_prime(g, a) for a in al])
        assert np.all(np.diff(k, 2) >= -1e-9)
        assert np.all(np.diff(kp) >= -1e-9)
        done += 1


# -- entropy and failure rates --------------------------------------------------


def test_entropy_zero_at_mean():
    lam = 1 / 3
    v = float(np.sum(EXAMPLE_GAMBLE.p * np.log(EXAMPLE_GAMBLE.effective_gains(lam))))
    assert entropy_rate_s(EXAMPLE_GAMBLE, v, lam) == pytest.approx(0.0, abs=1e-14)


def test_entropy_infinite_outside_range():
    assert entropy_rate_s(EXAMPLE_GAMBLE, math.log(1.1) + 1e-6, 1 / 3) == math.inf
    assert entropy_rate_s(EXAMPLE_GAMBLE, math.log(11 / 12) - 1e-6, 1 / 3) == math.inf


def test_entropy_two_outcome_linear_system():
    lam = 1 / 3
    l1, l2 = math.log(1.1), math.log(11 / 12)
    v = 0.5 * (l1 + 0.5 * (l1 + l2))
    q1 = (v - l2) / (l1 - l2)
    q2 = 1 - q1
    kl = q1 * math.log(q1 / 0.5) + q2 * math.log(q2 / 0.5)
    assert entropy_rate_s(EXAMPLE_GAMBLE, v, lam) == pytest.approx(kl, rel=1e-12)


def test_entropy_dual_agrees_with_primal():
    # A three-outcome gamble where one outcome duplicates another matches
    # the two-outcome primal closed form.
    g3 = Gamble([1.3, 0.75, 0.75], [0.5, 0.25, 0.25])
    for lam in (0.2, 0.6):
        for v in (0.0, 0.02, -0.01):
            assert entropy_rate_s(g3, v, lam) == pytest.approx(entropy_rate_s(EXAMPLE_GAMBLE, v, lam), rel=1e-7, abs=1e-12)


def test_failure_rate_endpoints():
    h0, a0 = failure_rate_h(EXAMPLE_GAMBLE, V0)
    assert h0 == pytest.approx(0.0, abs=1e-12) and a0 == pytest.approx(0.0, abs=1e-9)
    h1, a1 = failure_rate_h(EXAMPLE_GAMBLE, V1)
    assert h1 == pytest.approx(V1 - math.log(1.025), rel=1e-9)
    with pytest.raises(ValueError):
        failure_rate_h(EXAMPLE_GAMBLE, V1 + 1e-3)


def test_failure_rate_is_min_entropy():
    lam = np.linspace(0, 1, 4001)
    for v in np.linspace(V0, V1, 9)[1:-1]:
        s = min(entropy_rate_s(EXAMPLE_GAMBLE, v, x) for x in lam)
        assert failure_rate_h(EXAMPLE_GAMBLE, v)[0] == pytest.approx(s, abs=1e-6)


def test_legendre_involution():
    sp = RateSpectrum.build(EXAMPLE_GAMBLE)
    vs = np.linspace(sp.v0, sp.v1, 4001)
    hv = np.asarray(sp.h(vs))
    for al in (0.1, 0.4, 0.7, 0.9):
        assert np.max(al * vs - hv) == pytest.approx(kappa(EXAMPLE_GAMBLE, al)[0], abs=1e-7)


def test_spectrum_matches_direct():
    sp = RateSpectrum.build(EXAMPLE_GAMBLE)
    assert sp.kappa[0] == 0.0
    assert np.all(np.diff(sp.kappa_prime) > 0)
    for v in (0.01, 0.03, 0.05):
        assert sp.h(v) == pytest.approx(failure_rate_h(EXAMPLE_GAMBLE, v)[0], rel=1e-7)


# -- diffusion parameters -------------------------------------------------------


def test_diffusion_params_example():
    dp = diffusion_params(EXAMPLE_GAMBLE)
    l1, l2 = math.log(1.1), math.log(11 / 12)
    assert dp.v0 == pytest.approx(V0, rel=1e-12)
    assert dp.D == pytest.approx(0.5 * (0.5 * l1**2 + 0.5 * l2**2 - V0**2), rel=1e-9)
    assert dp.D == pytest.approx(0.0041551, abs=1e-7)


def test_diffusion_single_outcome():
    assert diffusion_params(Gamble([1.2], [1.0])).D == 0.0


def test_fraction_slope_at_kelly():
    g = EXAMPLE_GAMBLE
    lk = 1 / 3
    e = 1e-4
    dlam = (optimal_fraction(g, e) - optimal_fraction(g, -e)) / (2 * e)

    def v0(lam):
        return drift_and_diffusion(g, lam)[0]

    def D(lam):
        return drift_and_diffusion(g, lam)[1]

    Dp = (D(lk + e) - D(lk - e)) / (2 * e)
    v0pp = (v0(lk + e) - 2 * v0(lk) + v0(lk - e)) / e**2
    assert dlam == pytest.approx(-Dp / v0pp, rel=1e-3)
