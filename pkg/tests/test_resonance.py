import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcvlab.medium import Medium, big_omega, omega
from gcvlab.resonance import (
    Certificate,
    MultiIndex,
    badset_measure,
    cert_f,
    cert_f_finite,
    cert_rho,
    cert_rho_finite,
    cert_t,
    cert_x,
    certificate_csv,
    divisor_data,
    enumerate_indices,
    is_sap,
    mset,
    nset,
    scan,
    small_divisor,
    tau_exponent_deep,
    vorticity_charge,
)


def brute_indices(maxdeg, box):
    """Exponent-vector enumeration, written independently of the library.

    Walks all assignments of a total budget over the 2*(2*box) exponent
    slots by recursive splitting, which shares no code path with the
    letter-combination generator under test.
    """
    modes = [j for j in range(-box, box + 1) if j != 0]
    slots = [(j, s) for j in modes for s in (0, 1)]

    def assign(pos, budget):
        if pos == len(slots):
            yield ()
            return
        for take in range(budget + 1):
            for rest in assign(pos + 1, budget - take):
                yield (take,) + rest

    seen = set()
    for total in range(maxdeg + 1):
        for vec in assign(0, total):
            if sum(vec) != total:
                continue
            exps = {}
            for (j, s), e in zip(slots, vec):
                if e:
                    a, b = exps.get(j, (0, 0))
                    exps[j] = (a + e, b) if s == 0 else (a, b + e)
            idx = MultiIndex(exps)
            if idx not in seen:
                seen.add(idx)
                yield idx


def sap_by_definition(idx, box):
    for n in range(1, box + 1):
        if idx.alpha(n) + idx.alpha(-n) != idx.beta(n) + idx.beta(-n):
            return False
    return True


# --- MultiIndex basics ---


def test_from_monomial_hand_count():
    idx = MultiIndex.from_monomial([(1, 1), (-1, -1)])
    assert idx.alpha(1) == 1 and idx.beta(1) == 0
    assert idx.alpha(-1) == 0 and idx.beta(-1) == 1
    assert idx.momentum == 2
    assert idx.length == 2


def test_empty_index():
    idx = MultiIndex.from_monomial([])
    assert idx.length == 0
    assert idx.momentum == 0
    assert is_sap(idx)


def test_order_insensitive():
    letters = [(3, 1), (-2, -1), (3, -1), (1, 1)]
    a = MultiIndex.from_monomial(letters)
    b = MultiIndex.from_monomial(list(reversed(letters)))
    assert a == b and hash(a) == hash(b)


def test_mode_zero_rejected():
    with pytest.raises(ValueError):
        MultiIndex.from_monomial([(0, 1)])
    with pytest.raises(ValueError):
        MultiIndex({0: (1, 0)})


def test_encode_decode_round_trip():
    idx = MultiIndex({2: (1, 0), -5: (0, 3), 1: (2, 2)})
    assert MultiIndex.decode(idx.encode()) == idx
    assert MultiIndex.decode(MultiIndex().encode()) == MultiIndex()


def test_merge_and_letters():
    a = MultiIndex.from_monomial([(1, 1), (2, -1)])
    b = MultiIndex.from_monomial([(1, -1), (2, -1)])
    m = a.merge(b)
    assert m.length == 4
    assert sorted(m.to_letters()) == sorted(a.to_letters() + b.to_letters())


def test_conj_and_reflect():
    idx = MultiIndex({3: (2, 0), -1: (0, 1)})
    assert idx.conj() == MultiIndex({3: (0, 2), -1: (1, 0)})
    assert idx.reflect() == MultiIndex({-3: (2, 0), 1: (0, 1)})
    assert idx.conj().momentum == -idx.momentum


# --- SAP classification ---


def test_eight_wave_index_is_sap():
    n1, n2, n3, n4 = 2, 5, 7, 9
    letters = [(n1, 1), (-n1, -1), (n2, 1), (-n2, -1),
               (-n3, 1), (n3, -1), (-n4, 1), (n4, -1)]
    assert is_sap(MultiIndex.from_monomial(letters))


def test_action_monomial_is_sap():
    for j in (1, -4, 7):
        assert is_sap(MultiIndex({j: (1, 1)}))


def test_odd_length_never_sap():
    assert not is_sap(MultiIndex({1: (1, 0)}))
    assert not is_sap(MultiIndex({1: (2, 1), -2: (0, 0)}))
    for idx in brute_indices(3, 2):
        if idx.length % 2 == 1:
            assert not is_sap(idx)


def test_sap_matches_definition_exhaustively():
    # maxdeg 4, box 4 is the full acceptance range; checked here once so
    # regressions surface in the unit suite too.
    count = 0
    for idx in brute_indices(4, 4):
        assert is_sap(idx) == sap_by_definition(idx, 4)
        count += 1
    assert count > 1000


def test_sap_implies_balanced_halves():
    for idx in brute_indices(4, 3):
        if is_sap(idx):
            assert idx.length % 2 == 0
            assert idx.alpha_length == idx.beta_length


def test_sap_degree4_momentum_zero_is_action_product():
    for idx in brute_indices(4, 4):
        if idx.length == 4 and idx.momentum == 0 and is_sap(idx):
            assert all(a == b for _, a, b in idx.entries)


def test_nset_empty_iff_sap():
    for idx in brute_indices(4, 4):
        assert (len(nset(idx)) == 0) == is_sap(idx)
        assert len(nset(idx)) <= idx.length


# --- divisors ---


def test_single_letter_divisor_is_frequency():
    med = Medium(gravity=1.0, kappa=0.7, gamma=0.8, depth=1.5)
    for j in (3, -3, 10):
        idx = MultiIndex({j: (1, 0)})
        assert small_divisor(med, idx) == pytest.approx(big_omega(med, j), rel=1e-14)
        idx_bar = MultiIndex({j: (0, 1)})
        assert small_divisor(med, idx_bar) == pytest.approx(-big_omega(med, j), rel=1e-14)


def test_three_wave_hand_value():
    med = Medium(gravity=1.0, kappa=1.0, gamma=0.0)
    idx = MultiIndex({1: (1, 0), 2: (1, 0), 3: (0, 1)})
    assert idx.momentum == 0
    expect = math.sqrt(2) + math.sqrt(10) - math.sqrt(30)
    assert small_divisor(med, idx) == pytest.approx(expect, abs=1e-14)


def test_alpha_equals_beta_divisor_zero():
    med = Medium(gamma=1.2, kappa=0.9)
    idx = MultiIndex({1: (2, 2), -4: (1, 1)})
    assert small_divisor(med, idx) == 0.0


def test_eight_wave_divisor_exact_zero():
    med = Medium(gamma=1.0)
    letters = [(3, 1), (-3, -1), (11, 1), (-11, -1),
               (-6, 1), (6, -1), (-2, 1), (2, -1)]
    idx = MultiIndex.from_monomial(letters)
    assert is_sap(idx)
    assert small_divisor(med, idx) == 0.0


def test_divisor_additive_under_merge():
    med = Medium(gamma=0.7, kappa=1.3)
    a = MultiIndex({1: (1, 0), 2: (0, 1)})
    b = MultiIndex({5: (0, 2), -7: (1, 0)})
    merged = a.merge(b)
    assert small_divisor(med, merged) == pytest.approx(
        small_divisor(med, a) + small_divisor(med, b), rel=1e-13
    )


def test_appending_sap_block_preserves_divisor():
    med = Medium(gamma=1.0)
    base = MultiIndex({1: (1, 0), 2: (1, 0), 3: (0, 1)})
    block = MultiIndex.from_monomial(
        [(1, 1), (-1, -1), (4, 1), (-4, -1), (-2, 1), (2, -1), (-3, 1), (3, -1)]
    )
    assert small_divisor(med, base.merge(block)) == small_divisor(med, base)


def test_divisor_data_reconstructs():
    med = Medium(gamma=0.6, kappa=1.1)
    idx = MultiIndex({1: (2, 0), -1: (0, 1), 4: (0, 2), -6: (1, 1)})
    nvec, cvec, mvec, dvec = divisor_data(idx)
    rebuilt = sum(c * omega(med, n) for n, c in zip(nvec, cvec))
    rebuilt += 0.5 * med.gamma * sum(dvec)
    assert rebuilt == pytest.approx(small_divisor(med, idx), rel=1e-13)
    assert vorticity_charge(idx) == sum(dvec)


# --- enumeration ---


def test_enumerate_smallest_cases():
    only_empty = list(enumerate_indices(0, 1))
    assert only_empty == [MultiIndex()]

    deg1 = list(enumerate_indices(1, 1))
    assert len(deg1) == 5
    nonempty = [i for i in deg1 if i.length == 1]
    assert set(nonempty) == {
        MultiIndex({1: (1, 0)}),
        MultiIndex({1: (0, 1)}),
        MultiIndex({-1: (1, 0)}),
        MultiIndex({-1: (0, 1)}),
    }


def test_enumerate_momentum_zero_degree2():
    got = [i for i in enumerate_indices(2, 1, momentum_zero=True) if i.length]
    expect = {
        MultiIndex({1: (1, 1)}),
        MultiIndex({-1: (1, 1)}),
        MultiIndex({1: (1, 0), -1: (1, 0)}),
        MultiIndex({1: (0, 1), -1: (0, 1)}),
    }
    assert set(got) == expect
    assert len(got) == len(expect)


def test_enumerate_matches_brutal_generator():
    for maxdeg, box in ((2, 2), (3, 3)):
        ours = list(enumerate_indices(maxdeg, box))
        theirs = set(brute_indices(maxdeg, box))
        assert len(ours) == len(set(ours)), "duplicates emitted"
        assert set(ours) == theirs


def test_enumerate_deterministic_order():
    a = [i.encode() for i in enumerate_indices(3, 2)]
    b = [i.encode() for i in enumerate_indices(3, 2)]
    assert a == b


def test_enumerate_momentum_filter():
    for idx in enumerate_indices(3, 3, momentum_zero=True):
        assert idx.momentum == 0


# --- scans ---


def test_scan_no_vorticity_degree2_positive():
    med = Medium(gravity=1.0, kappa=1.0, gamma=0.0)
    certs = scan(med, [0.5, 1.0, 2.0], maxdeg=2, box=10, tau=3.0)
    for c in certs:
        assert c.nu > 0
        assert not c.resonant


def test_scan_tiny_box_hand_value():
    med = Medium(gravity=1.0, kappa=1.0, gamma=0.0)
    (cert,) = scan(med, [1.0], maxdeg=2, box=1, tau=4.0)
    # The only momentum-zero non-SAP candidates are the two-letter pair on
    # mode 1 and its conjugate, both with divisor magnitude 2*omega_1.
    assert cert.nu == pytest.approx(2 * omega(med, 1), rel=1e-13)
    assert abs(cert.worst.divisor) == pytest.approx(2 * omega(med, 1), rel=1e-13)


def test_scan_flags_bracketed_three_wave_resonance():
    from scipy.optimize import brentq

    med = Medium(gravity=1.0, gamma=1.0)
    idx = MultiIndex({1: (2, 0), 2: (0, 1)})
    assert idx.momentum == 0 and not is_sap(idx)

    def divisor_at(kap):
        return small_divisor(Medium(gravity=1.0, gamma=1.0, kappa=kap), idx)

    assert divisor_at(1.0) * divisor_at(2.0) < 0
    root = brentq(divisor_at, 1.0, 2.0, xtol=1e-15)
    (cert,) = scan(med, [root], maxdeg=3, box=2, tau=6.0)
    assert cert.resonant
    assert abs(cert.worst.divisor) < 1e-10
    assert cert.worst.index == idx


def test_certificate_csv_shape():
    med = Medium(gamma=0.0)
    certs = scan(med, [1.0, 1.5], maxdeg=2, box=2, tau=2.0)
    text = certificate_csv(certs)
    lines = text.strip().split("\n")
    assert lines[0] == "kappa,nu,tau,worst_index,worst_divisor"
    assert len(lines) == 3
    kap, nu, tau, enc, div = lines[1].split(",")
    assert float(kap) == 1.0
    assert MultiIndex.decode(enc) == certs[0].worst.index


# --- certificate functions ---


def test_cert_f_zero_coefficients():
    med = Medium(gamma=1.0)
    x = cert_x((2, 5))
    assert cert_f((0, 0, 0), x, 1.3, med) == 0.0


def test_cert_f_single_mode_matches_frequency():
    med = Medium(gravity=1.0, gamma=0.8)
    for n in (1, 4, 9):
        x = cert_x((n,))
        got = cert_f((0, 1), x, 1.7, med)
        scaled = omega(Medium(gravity=1.0, gamma=0.8, kappa=1.7), n) * x[0] ** 3
        assert got == pytest.approx(scaled, rel=1e-12)


def test_cert_f_scales_small_divisor():
    med = Medium(gravity=1.0, gamma=1.0)
    idx = MultiIndex({1: (2, 0), 2: (0, 1)})
    nvec, cvec, mvec, dvec = divisor_data(idx)
    x = cert_x(nvec)
    c = (vorticity_charge(idx),) + cvec
    for kap in (1.0, 1.4, 2.0):
        f = cert_f(c, x, kap, med)
        d = small_divisor(Medium(gravity=1.0, gamma=1.0, kappa=kap), idx)
        assert f == pytest.approx(d * x[0] ** 3, rel=1e-12)


def test_cert_f_rejects_negative_radicand():
    med = Medium(gamma=0.0)
    x = cert_x((3,))
    with pytest.raises(ValueError):
        cert_f((0, 1), x, -50.0, med)


def test_cert_rho_zeros_and_sign():
    assert cert_rho((0.5, 0.3, 0.3)) == 0.0
    assert cert_rho((0.5, 0.3, -0.3)) == 0.0
    base = cert_rho((0.2, 0.4, 0.6))
    assert cert_rho((-0.2, 0.4, 0.6)) == -base


def test_cert_rho_two_mode_hand_bounds():
    x = cert_x((1, 2))
    tau1 = tau_exponent_deep(2)
    assert tau1 == 5
    val = abs(cert_rho(x))
    assert val == pytest.approx(math.sqrt(2) * (1 / 3) ** 5, rel=1e-12)
    assert (1 / 3) ** tau1 <= val <= (1 / 3)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=3, unique=True)
)
def test_cert_rho_two_sided_bound(nvec):
    if sum(nvec) > 50:
        return
    nvec = sorted(nvec)
    x = cert_x(nvec)
    s = sum(nvec)
    val = abs(cert_rho(x))
    tau1 = tau_exponent_deep(len(nvec))
    assert s ** (-tau1) <= val * (1 + 1e-12)
    assert val <= 1.0 / s + 1e-15


def test_cert_finite_depth_matches_divisor():
    med = Medium(gravity=1.0, gamma=0.9, depth=1.2)
    idx = MultiIndex({1: (2, 0), 2: (1, 0), 4: (0, 1)})
    assert idx.momentum == 0
    nvec, cvec, mvec, dvec = divisor_data(idx)
    x = cert_x(nvec, mvec)
    t = cert_t(med, nvec, mvec)
    for kap in (0.8, 1.5):
        f = cert_f_finite(cvec, dvec, x, t, kap, med)
        d = small_divisor(
            Medium(gravity=1.0, gamma=0.9, depth=1.2, kappa=kap), idx
        )
        assert f == pytest.approx(d * x[0] ** 3, rel=1e-12)


def test_cert_rho_finite_nonzero_at_distinct_modes():
    med = Medium(gravity=1.0, gamma=0.5, depth=2.0)
    nvec = (1, 3)
    x = cert_x(nvec)
    t = cert_t(med, nvec)
    assert cert_rho_finite(x, t, med) != 0.0
    # hand expansion for a single pair factor
    g, q = med.gravity, 0.25 * med.gamma**2
    x0, x1, x2 = x
    t1, t2 = t
    pair = (g * x1**2 * x0**4 + q * t1**2 * x0**6) * x2**6 - (
        g * x2**2 * x0**4 + q * t2**2 * x0**6
    ) * x1**6
    assert cert_rho_finite(x, t, med) == pytest.approx(
        x0 * x1 * t1 * x2 * t2 * pair, rel=1e-13
    )


def test_badset_measure_monotone_and_vanishing():
    med = Medium(gravity=1.0, gamma=1.0)
    fam = [((1, 2, -1), (1, 2)), ((0, 1, 1, -1), (1, 2, 3))]
    vals = [
        badset_measure(med, (1.0, 2.0), a, 2, fam, grid=801)
        for a in (1e-1, 1e-2, 1e-3, 1e-4)
    ]
    assert all(v >= 0 for v in vals)
    assert all(vals[i] >= vals[i + 1] for i in range(len(vals) - 1))
    assert badset_measure(med, (1.0, 2.0), 1e-9, 2, fam, grid=801) == 0.0
