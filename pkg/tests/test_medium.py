import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcvlab.medium import Medium, big_omega, gsym, msym, omega, sample

DEEP = Medium(gravity=1.0, kappa=1.0, gamma=0.0)


def test_gsym_infinite_depth_is_abs():
    assert gsym(DEEP, 3) == 3.0
    assert gsym(DEEP, -7) == 7.0


def test_gsym_even_finite_depth():
    med = Medium(depth=0.7)
    assert gsym(med, 2) == pytest.approx(gsym(med, -2), abs=0)


def test_gsym_tanh_saturation():
    # h = 50 is already indistinguishable from the |xi| branch at xi = 2
    med = Medium(depth=50.0)
    assert abs(gsym(med, 2) - 2.0) < 1e-12


def test_gsym_rejects_mode_zero():
    with pytest.raises(ValueError):
        gsym(DEEP, 0)
    with pytest.raises(ValueError):
        omega(DEEP, np.array([1, 0, 2]))


def test_omega_hand_values():
    # g = kappa = 1, gamma = 0, deep water, j = 1: sqrt(1*(1+1)) = sqrt(2)
    assert omega(DEEP, 1) == pytest.approx(math.sqrt(2), abs=1e-15)
    # gamma = 2, j = 2: sqrt(2*(1+4) + 1) = sqrt(11)
    med = Medium(gamma=2.0)
    assert omega(med, 2) == pytest.approx(math.sqrt(11), abs=1e-14)


def test_omega_even():
    med = Medium(gravity=2.3, kappa=0.4, gamma=1.7, depth=1.9)
    for j in (1, 2, 5, 11):
        assert omega(med, j) == pytest.approx(omega(med, -j), rel=1e-15)


def test_big_omega_reduces_to_omega_without_vorticity():
    for j in (1, -4, 9):
        assert big_omega(DEEP, j) == omega(DEEP, j)


def test_big_omega_skew_deep_water():
    # In infinite depth the j/-j gap is exactly gamma * sign(j)
    med = Medium(gamma=2.0)
    assert big_omega(med, 5) - big_omega(med, -5) == pytest.approx(2.0, abs=1e-14)


def test_big_omega_finite_depth_hand_value():
    med = Medium(gamma=1.0, depth=1.0)
    expect = omega(med, 3) - 0.5 * math.tanh(3.0)
    assert big_omega(med, -3) == pytest.approx(expect, rel=1e-15)


def test_msym_hand_value():
    assert msym(DEEP, 1) == pytest.approx(0.5 ** 0.25, abs=1e-15)


@pytest.mark.parametrize(
    "med",
    [
        Medium(),
        Medium(gamma=1.0),
        Medium(gravity=3.0, kappa=0.1, gamma=2.5),
        Medium(gravity=0.5, kappa=2.0, gamma=1.0, depth=0.8),
        Medium(gravity=1.0, kappa=1.0, gamma=0.0, depth=3.0),
    ],
)
def test_msym_two_sided_identities(med):
    for j in range(-8, 9):
        if j == 0:
            continue
        M = msym(med, j)
        G = gsym(med, j)
        mid = med.gravity + med.kappa * j**2 + 0.25 * med.gamma**2 * G / j**2
        w = omega(med, j)
        assert abs(M * mid * M - w) < 1e-12 * max(1.0, w)
        assert abs(G / (M * M) - w) < 1e-12 * max(1.0, w)


def test_eight_wave_cancellation_deep_water():
    # The two-sided shift Omega(n) - Omega(-n) equals gamma for every mode,
    # so the signed four-mode combination cancels identically.  Grouping the
    # difference per mode keeps the float residual under 1e-14; a flat
    # left-to-right sum would lose a couple of ulps of the largest frequency.
    for gam in (0.0, 1.0, 2.0):
        med = Medium(gamma=gam)
        rng = np.random.default_rng(7)
        for _ in range(50):
            n1, n2, n3, n4 = rng.integers(1, 21, size=4)
            dif = [big_omega(med, n) - big_omega(med, -n) for n in (n1, n2, n3, n4)]
            resid = (dif[0] + dif[1]) - (dif[2] + dif[3])
            assert abs(resid) < 1e-14


def test_eight_wave_generic_vorticity():
    med = Medium(gamma=1.3)
    rng = np.random.default_rng(11)
    for _ in range(50):
        n1, n2, n3, n4 = rng.integers(1, 40, size=4)
        dif = [big_omega(med, n) - big_omega(med, -n) for n in (n1, n2, n3, n4)]
        resid = (dif[0] + dif[1]) - (dif[2] + dif[3])
        assert abs(resid) < 1e-13


def test_vorticity_shift_odd():
    med = Medium(gamma=0.9, depth=2.0)
    for j in (1, 3, 8):
        shift_p = big_omega(med, j) - omega(med, j)
        shift_m = big_omega(med, -j) - omega(med, -j)
        assert shift_p == pytest.approx(-shift_m, rel=1e-14)


def test_capillary_asymptotics():
    med = Medium(gravity=9.8, kappa=0.3, gamma=1.0)
    for j in (100, 250, 1000):
        ratio = omega(med, j) / (math.sqrt(med.kappa) * j**1.5)
        assert abs(ratio - 1.0) < 0.01


@settings(max_examples=60, deadline=None)
@given(
    j=st.integers(min_value=1, max_value=200),
    g=st.floats(0.1, 10.0),
    k=st.floats(0.1, 10.0),
    gam=st.floats(-3.0, 3.0),
)
def test_omega_nonnegative_and_even_property(j, g, k, gam):
    med = Medium(gravity=g, kappa=k, gamma=gam)
    w = omega(med, j)
    assert w >= 0
    assert omega(med, -j) == pytest.approx(w, rel=1e-13)


def test_sample_record_consistency():
    med = Medium(gamma=1.1, depth=1.4)
    s = sample(med, -4)
    assert s.mode == -4
    assert s.omega >= 0 and s.gsym >= 0 and s.msym > 0
    assert s.Omega - s.omega == pytest.approx(
        0.5 * med.gamma * s.gsym / s.mode, rel=1e-13
    )


def test_medium_validation():
    with pytest.raises(ValueError):
        Medium(gravity=0.0)
    with pytest.raises(ValueError):
        Medium(kappa=-1.0)
    with pytest.raises(ValueError):
        Medium(depth=0.0)
