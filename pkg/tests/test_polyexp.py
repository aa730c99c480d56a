"""Bessel oracle, cutoff rules, polynomial zeros, and factorized evaluation."""

import cmath
import json
import math
import os

import mpmath as mp
import numpy as np
import pytest
import scipy.special
from hypothesis import given, strategies as st

from trotterkit.errors import RangeError, StructuralError
from trotterkit.polyexp import (
    SeriesSpec,
    bessel,
    chebyshev_admissible_k,
    chebyshev_coefficients,
    chebyshev_zeros,
    eval_factorized,
    eval_summed,
    factorize,
    gamma_for,
    order_factors,
    r_valid,
    suggest_gamma,
    taylor_cutoff,
    taylor_zeros,
)
from trotterkit.spinmodel import XxzConfig, build_xxz

# k values reserved for the cache behaviour tests: nothing else in the
# suite may request them, or the in-process memo would mask the file I/O.
CACHE_ONLY_K = (2, 3, 4)


def mp_exp_poly(k, z, dps=80):
    """Reference value of the degree-k Taylor truncation, in mp arithmetic."""
    with mp.workdps(dps):
        zz = mp.mpc(z)
        acc = mp.mpf(1)
        term = mp.mpf(1)
        for i in range(1, k + 1):
            term = term * zz / i
            acc += term
        return acc


# ---------------------------------------------------------------------------
# Bessel functions


def test_bessel_known_values():
    assert bessel("I", 0, 0.0) == 1.0
    assert bessel("J", 0, 0.0) == 1.0
    assert bessel("I", 1, 1.0) == pytest.approx(0.565159103992485, rel=1e-12)
    assert abs(bessel("J", 0, 2.404825557695773)) < 1e-10  # first J0 zero


@pytest.mark.parametrize("kind", ["I", "J"])
def test_bessel_against_mpmath_grid(kind):
    ref = mp.besseli if kind == "I" else mp.besselj
    for order, x in [
        (0, 0.3),
        (1, 1.0),
        (5, 2.0),
        (12, 12.0),
        (40, 25.0),
        (0, 100.0),
        (146, 100.0),
        (300, 100.0),
        (0, 500.0),
        (250, 500.0),
        (1200, 500.0),
    ]:
        got = bessel(kind, order, x)
        with mp.workdps(40):
            want = float(ref(order, x))
        if want == 0.0:
            assert got == 0.0
        else:
            assert got == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("kind", ["I", "J"])
def test_bessel_against_scipy_grid(kind):
    # scipy's iv/jv drift to ~1e-10 themselves at large order/argument, so
    # this is a loose independence check next to the tight mpmath one.
    fn = scipy.special.iv if kind == "I" else scipy.special.jv
    for order, x in [(0, 1.0), (3, 7.5), (20, 30.0), (80, 90.0), (146, 100.0)]:
        want = float(fn(order, x))
        assert bessel(kind, order, x) == pytest.approx(want, rel=5e-10)


def test_bessel_range_errors():
    with pytest.raises(RangeError):
        bessel("I", 0, -1.0)
    with pytest.raises(RangeError):
        bessel("J", 0, 500.5)
    with pytest.raises(RangeError):
        bessel("I", 601, 200.0)  # order > 2x + 200
    with pytest.raises(RangeError):
        bessel("J", -1, 1.0)


@given(
    st.sampled_from(["I", "J"]),
    st.integers(min_value=0, max_value=60),
    st.floats(min_value=0.01, max_value=120.0, allow_nan=False),
)
def test_property_bessel_matches_mpmath(kind, order, x):
    got = bessel(kind, order, x)
    ref = mp.besseli if kind == "I" else mp.besselj
    with mp.workdps(40):
        want = float(ref(order, x))
    assert got == pytest.approx(want, rel=1e-13, abs=1e-300)


# ---------------------------------------------------------------------------
# cutoff rules


def test_taylor_cutoff_pinned_values():
    assert taylor_cutoff(1.0, 1.0, 1e-16) == 18
    assert taylor_cutoff(0.0, 1.0, 1e-12) == 1
    assert taylor_cutoff(10.0, 1.0, 2.2e-16) == 50
    assert taylor_cutoff(100.0, 1.0, 1e-14) == 294


def test_taylor_cutoff_range_errors():
    with pytest.raises(RangeError):
        taylor_cutoff(-1.0, 1.0, 1e-12)
    with pytest.raises(RangeError):
        taylor_cutoff(1.0, 0.0, 1e-12)
    with pytest.raises(RangeError):
        taylor_cutoff(1.0, 1.0, 2.0)


@given(
    st.floats(min_value=0.01, max_value=50.0, allow_nan=False),
    st.floats(min_value=1e-18, max_value=1e-3, allow_nan=False),
)
def test_property_cutoff_matches_brute_force(lh, eps):
    k = taylor_cutoff(lh, 1.0, eps)
    with mp.workdps(50):
        mlh, meps = mp.mpf(lh), mp.mpf(eps)
        assert mlh**k / mp.factorial(k + 1) < meps
        if k > 1:
            assert mlh ** (k - 1) / mp.factorial(k) >= meps


def test_chebyshev_admissible_pinned_values():
    assert chebyshev_admissible_k(100.0, "imaginary", 1e-14) == 146
    # the real axis needs more terms: I_n(x) decays later than J_n(x)
    assert chebyshev_admissible_k(100.0, "real", 1e-14) > 146


def test_admissible_tail_is_suppressed():
    for gh, axis, eps in [(20.0, "imaginary", 1e-12), (35.0, "real", 1e-10)]:
        k = chebyshev_admissible_k(gh, axis, eps)
        kind = "J" if axis == "imaginary" else "I"
        assert 2.0 * abs(bessel(kind, k + 1, gh)) < eps
        assert 2.0 * abs(bessel(kind, k, gh)) >= eps


def test_taylor_to_chebyshev_k_ratio():
    # matched reach Gamma*h = 100 at epsilon = 1e-14
    ratio = taylor_cutoff(100.0, 1.0, 1e-14) / chebyshev_admissible_k(100.0, "imaginary", 1e-14)
    assert 2.0 <= ratio <= 2.8


def test_suggest_gamma():
    diag = np.diag([3.0, -1.0, 0.5]).astype(complex)
    assert suggest_gamma(diag) == pytest.approx(1.01 * 3.0, rel=1e-15)
    assert suggest_gamma(None, eigvals=[-4.0, 2.0]) == pytest.approx(1.01 * 4.0, rel=1e-15)


# ---------------------------------------------------------------------------
# spec validation


def test_series_spec_validation():
    with pytest.raises(StructuralError):
        SeriesSpec("pade", 10)
    with pytest.raises(StructuralError):
        SeriesSpec("taylor", 0)
    with pytest.raises(StructuralError):
        SeriesSpec("chebyshev", 10)  # missing gamma_scale
    with pytest.raises(StructuralError):
        SeriesSpec("chebyshev", 10, gamma_scale=-1.0, axis="real")
    with pytest.raises(StructuralError):
        SeriesSpec("chebyshev", 10, gamma_scale=1.0, axis="diagonal")
    spec = SeriesSpec("chebyshev", 10, gamma_scale=4.0, axis="real", h=0.5)
    assert spec.gamma_h == 2.0


def test_chebyshev_helpers_reject_taylor_spec():
    t = SeriesSpec("taylor", 5)
    with pytest.raises(StructuralError):
        chebyshev_coefficients(t)
    with pytest.raises(StructuralError):
        chebyshev_zeros(t)


def test_chebyshev_coefficients_range_gate():
    spec = SeriesSpec("chebyshev", 10, gamma_scale=501.0, axis="real", h=1.0)
    with pytest.raises(RangeError):
        chebyshev_coefficients(spec)


# ---------------------------------------------------------------------------
# zeros


def test_taylor_k1_zero_is_minus_one():
    (z,) = taylor_zeros(1)
    assert abs(z + 1.0) < 1e-14


def test_taylor_zeros_range_errors():
    with pytest.raises(RangeError):
        taylor_zeros(0)
    with pytest.raises(RangeError):
        taylor_zeros(401)


@pytest.mark.parametrize("k", [25, 52])
def test_taylor_zeros_conjugate_closed(k, zeros_cache):
    zs = taylor_zeros(k, cache_dir=zeros_cache)
    assert len(zs) == k
    as_pairs = sorted((z.real, z.imag) for z in zs)
    conjugated = sorted((z.real, -z.imag) for z in zs)
    assert as_pairs == conjugated  # exact, not approximate
    n_real = sum(1 for z in zs if z.imag == 0.0)
    assert n_real == (1 if k % 2 else 0)


@pytest.mark.parametrize("k", [25, 52])
def test_taylor_zeros_are_accurate(k, zeros_cache):
    # Newton correction at each double-rounded zero is at rounding level.
    zs = taylor_zeros(k, cache_dir=zeros_cache)
    with mp.workdps(60):
        coeffs = [mp.mpf(1) / mp.factorial(i) for i in range(k + 1)]
        for z in zs:
            zz = mp.mpc(z)
            p = coeffs[-1]
            dp = mp.mpf(0)
            for c in reversed(coeffs[:-1]):
                dp = dp * zz + p
                p = p * zz + c
            assert abs(p / dp) < 1e-13 * max(1.0, abs(z))


def test_szego_curve_convergence(zeros_cache):
    # Scaled zeros approach |w e^{1 - w}| = 1; the two zeros nearest w = 1
    # converge slowest and are excluded, as the remainder term there decays
    # only like k^{-1/2}.
    devs = []
    for k in (25, 50, 100, 200):
        zs = taylor_zeros(k, cache_dir=zeros_cache)
        ws = sorted((z / k for z in zs), key=lambda w: abs(w - 1.0))[2:]
        devs.append(max(abs(abs(w * cmath.exp(1.0 - w)) - 1.0) for w in ws))
    assert devs == sorted(devs, reverse=True)
    assert devs[-1] < 0.05


def test_zero_modulus_floor(zeros_cache):
    # min |z| / k decreases toward W(1/e) = 0.27846... (the Szego curve's
    # crossing of the negative real axis), so that is the honest floor.
    floor = 0.27846
    for k in (25, 50, 100, 200):
        zs = taylor_zeros(k, cache_dir=zeros_cache)
        assert min(abs(z) for z in zs) > floor * k


def test_gamma_for_inverts_zeros(zeros_cache):
    zs = taylor_zeros(25, cache_dir=zeros_cache)
    gs = gamma_for(zs, 25)
    for z, g in zip(zs, gs):
        assert g == pytest.approx(-25.0 / z, rel=1e-15)


# ---------------------------------------------------------------------------
# zero cache files


def test_cache_file_is_read_back(tmp_path):
    # Pre-seed a well-formed (deliberately off-true) entry for k=2 and check
    # the loader trusts the file over recomputation.
    seeded = [[-1.5, 0.8], [-1.5, -0.8]]
    (tmp_path / "taylor_2.json").write_text(json.dumps([[str(a), str(b)] for a, b in seeded]))
    zs = taylor_zeros(2, cache_dir=str(tmp_path))
    assert sorted((z.real, z.imag) for z in zs) == sorted((a, b) for a, b in seeded)


def test_corrupt_cache_file_recomputed(tmp_path):
    path = tmp_path / "taylor_3.json"
    path.write_text("{ not json !")
    zs = taylor_zeros(3, cache_dir=str(tmp_path))
    # 1 + z + z^2/2 + z^3/6 has one real root and a conjugate pair
    assert len(zs) == 3
    assert sum(1 for z in zs if z.imag == 0.0) == 1
    data = json.loads(path.read_text())  # rewritten with a valid payload
    assert len(data) == 3
    assert all(isinstance(re, str) and isinstance(im, str) for re, im in data)
    reloaded = [complex(float(re), float(im)) for re, im in data]
    assert sorted((z.real, z.imag) for z in reloaded) == sorted((z.real, z.imag) for z in zs)


def test_wrong_length_cache_file_recomputed(tmp_path):
    (tmp_path / "taylor_4.json").write_text(json.dumps([["-1.0", "0.0"], ["-2.0", "0.0"]]))
    zs = taylor_zeros(4, cache_dir=str(tmp_path))
    assert len(zs) == 4
    with mp.workdps(40):
        for z in zs:
            val = mp_exp_poly(4, z, dps=40)
            assert abs(val) < 1e-12


def test_chebyshev_cache_filename(tmp_path):
    spec = SeriesSpec("chebyshev", 2, gamma_scale=1.25, axis="imaginary", h=1.0)
    zs = chebyshev_zeros(spec, cache_dir=str(tmp_path))
    assert len(zs) == 2
    assert (tmp_path / "chebyshev_2_1.250000_imaginary.json").exists()


# ---------------------------------------------------------------------------
# factorization structure


def test_factorize_taylor_scale_is_one(zeros_cache):
    fact = factorize(SeriesSpec("taylor", 25), cache_dir=zeros_cache)
    assert fact.overall_scale == 1.0
    assert len(fact.zeros) == 25
    assert len(fact.gammas) == 25
    assert sum(g.n_factors for g in fact.groups) == 25


def test_factorize_chebyshev_scale_matches_p0(zeros_cache):
    # The product form is scale * prod(1 - z/z_i); at z = 0 that is scale,
    # so scale must equal P(0) = mu_0 + sum_i mu_i T_i(0).
    spec = SeriesSpec("chebyshev", 1, gamma_scale=2.0, axis="imaginary", h=1.0)
    fact = factorize(spec, cache_dir=zeros_cache)
    assert fact.overall_scale == pytest.approx(bessel("J", 0, 2.0), rel=1e-13)
    # and for an admissible k it approximates exp(0) = 1
    gh = 20.0
    k = chebyshev_admissible_k(gh, "imaginary", 1e-12)
    spec2 = SeriesSpec("chebyshev", k, gamma_scale=gh, axis="imaginary", h=1.0)
    fact2 = factorize(spec2, cache_dir=zeros_cache)
    assert abs(fact2.overall_scale - 1.0) < 1e-9


def test_chebyshev_k1_zero_matches_coefficients(zeros_cache):
    spec = SeriesSpec("chebyshev", 1, gamma_scale=2.0, axis="imaginary", h=1.0)
    fact = factorize(spec, cache_dir=zeros_cache)
    mu = chebyshev_coefficients(spec)
    assert fact.zeros[0] == pytest.approx(-mu[0] / mu[1] * (1j * 2.0), rel=1e-13)


def test_r_valid_formula(zeros_cache):
    fact = factorize(SeriesSpec("taylor", 52), cache_dir=zeros_cache)
    expect = (1e-13 * math.exp(math.lgamma(54))) ** (1.0 / 53.0)
    assert r_valid(fact) == pytest.approx(expect, rel=1e-12)
    assert 11.0 < r_valid(fact) < 12.5
    assert r_valid(fact) < min(abs(z) for z in fact.zeros)


def test_order_factors_golden():
    groups = order_factors([4.0 + 0j, 3.0 + 0j, 2.0 + 0j, 1.0 + 0j])
    assert [g.kind for g in groups] == ["lin", "lin", "lin", "lin"]
    assert [g.sum_re for g in groups] == [3.0, 2.0, 4.0, 1.0]
    assert [g.index for g in groups] == [1, 2, 0, 3]


def test_order_factors_groups_conjugate_pairs():
    groups = order_factors([2.0 + 1.0j, 2.0 - 1.0j, 5.0 + 0j])
    kinds = sorted(g.kind for g in groups)
    assert kinds == ["lin", "quad"]
    quad = next(g for g in groups if g.kind == "quad")
    assert quad.gammas == (2.0 + 1.0j, 2.0 - 1.0j)
    assert quad.coeffs == pytest.approx((4.0, 5.0), rel=1e-15)  # (2 Re g, |g|^2)
    assert quad.sum_re == 4.0


@given(st.lists(st.floats(min_value=-8.0, max_value=8.0, allow_nan=False), min_size=1, max_size=12))
def test_property_order_factors_partitions_input(reals):
    gammas = [complex(r, 0.0) for r in reals]
    groups = order_factors(gammas)
    flat = [g for grp in groups for g in grp.gammas]
    assert sorted((g.real, g.imag) for g in flat) == sorted((g.real, g.imag) for g in gammas)


# ---------------------------------------------------------------------------
# evaluation


def test_eval_small_k_scalar_exactness(zeros_cache):
    spec = SeriesSpec("taylor", 5)
    z = 1.7
    want = math.fsum(z**i / math.factorial(i) for i in range(6))
    h_op = np.array([[z]], dtype=complex)
    target = np.eye(1, dtype=complex)
    got_sum = eval_summed(h_op, target, spec)[0, 0]
    got_prod = eval_factorized(h_op, target, factorize(spec, cache_dir=zeros_cache))[0, 0]
    assert got_sum == pytest.approx(want, rel=1e-14)
    assert got_prod == pytest.approx(want, rel=1e-13)


def test_eval_matrix_diagonal_case(zeros_cache):
    spec = SeriesSpec("taylor", 12)
    fact = factorize(spec, cache_dir=zeros_cache)
    zs = np.array([0.3, -1.2, 2.5])
    h_op = np.diag(zs).astype(complex)
    got = eval_factorized(h_op, np.eye(3, dtype=complex), fact)
    for i, z in enumerate(zs):
        want = complex(mp_exp_poly(12, z, dps=40))
        assert got[i, i] == pytest.approx(want, rel=1e-13)
    off = got - np.diag(np.diag(got))
    assert np.linalg.norm(off) < 1e-14


def test_chebyshev_t2_recurrence_path():
    # mu_0 T_0 + mu_1 T_1(x) + mu_2 T_2(x) at x = 0.5: T_2(0.5) = -0.5.
    spec = SeriesSpec("chebyshev", 2, gamma_scale=1.0, axis="real", h=1.0)
    mu = chebyshev_coefficients(spec)
    got = eval_summed(np.array([[0.5]], dtype=complex), np.eye(1, dtype=complex), spec)[0, 0]
    want = mu[0] + mu[1] * 0.5 + mu[2] * (-0.5)
    assert got == pytest.approx(want, rel=1e-14)


def test_chebyshev_eval_matches_exp_on_imaginary_axis(zeros_cache):
    gh = 20.0
    k = chebyshev_admissible_k(gh, "imaginary", 1e-12)
    spec = SeriesSpec("chebyshev", k, gamma_scale=gh, axis="imaginary", h=1.0)
    fact = factorize(spec, cache_dir=zeros_cache)
    for y in np.linspace(-gh, gh, 21):
        h_op = np.array([[1j * y]], dtype=complex)
        got_prod = eval_factorized(h_op, np.eye(1, dtype=complex), fact)[0, 0]
        got_sum = eval_summed(h_op, np.eye(1, dtype=complex), spec)[0, 0]
        want = cmath.exp(1j * y)
        assert abs(got_prod - want) < 1e-11
        assert abs(got_sum - want) < 1e-11


def test_summed_instability_versus_factorized(zeros_cache):
    # Catastrophic cancellation in plain summation for k > 17: at k = 52 the
    # worst of it sits near z = -15 (terms reach e^15 while the true value
    # is ~e^-15); the factorized product stays at rounding level there.
    k, z = 52, -15.0
    spec = SeriesSpec("taylor", k)
    fact = factorize(spec, cache_dir=zeros_cache)
    h_op = np.array([[z]], dtype=complex)
    got_sum = eval_summed(h_op, np.eye(1, dtype=complex), spec)[0, 0]
    got_prod = eval_factorized(h_op, np.eye(1, dtype=complex), fact)[0, 0]
    with mp.workdps(80):
        want = mp_exp_poly(k, z)
        err_sum = float(abs(got_sum - want) / abs(want))
        err_prod = float(abs(got_prod - want) / abs(want))
    assert err_sum > 1e-6
    assert err_prod < 1e-12


def test_factorized_non_unitarity_bound(zeros_cache):
    # One full-dimension real-time step: k from the cutoff rule at 1e-12.
    split = build_xxz(XxzConfig(L=8))
    lam = float(np.max(np.abs(np.linalg.eigvalsh(split.total))))
    h = 0.25
    k = taylor_cutoff(lam, h, 1e-12)
    fact = factorize(SeriesSpec("taylor", k, h=h), cache_dir=zeros_cache)
    u = eval_factorized(-1j * split.total, np.eye(split.dim, dtype=complex), fact)
    assert np.linalg.norm(u.conj().T @ u - np.eye(split.dim)) < 1e-10


@given(
    k=st.sampled_from([5, 12, 17]),
    radius=st.floats(min_value=0.0, max_value=1.0),
    angle=st.floats(min_value=0.0, max_value=2.0 * math.pi),
)
def test_property_sum_and_product_agree_inside_validity(zeros_cache, k, radius, angle):
    # For k <= 17 plain summation is still stable, so both evaluations must
    # agree to rounding for |z| <= k/e.
    z = (k / math.e) * math.sqrt(radius) * cmath.exp(1j * angle)
    spec = SeriesSpec("taylor", k)
    fact = factorize(spec, cache_dir=zeros_cache)
    h_op = np.array([[z]], dtype=complex)
    got_sum = eval_summed(h_op, np.eye(1, dtype=complex), spec)[0, 0]
    got_prod = eval_factorized(h_op, np.eye(1, dtype=complex), fact)[0, 0]
    assert abs(got_sum - got_prod) <= 1e-12 * max(abs(got_sum), 1.0)


@given(
    radius=st.floats(min_value=0.0, max_value=1.0),
    angle=st.floats(min_value=0.0, max_value=2.0 * math.pi),
)
def test_property_pair_modes_agree(zeros_cache, radius, angle):
    z = 4.0 * math.sqrt(radius) * cmath.exp(1j * angle)
    fact = factorize(SeriesSpec("taylor", 12), cache_dir=zeros_cache)
    h_op = np.array([[z]], dtype=complex)
    target = np.eye(1, dtype=complex)
    quad = eval_factorized(h_op, target, fact, pair_mode="quadratic")[0, 0]
    lin = eval_factorized(h_op, target, fact, pair_mode="linear")[0, 0]
    assert abs(quad - lin) <= 1e-13 * max(abs(quad), 1.0)


def test_eval_factorized_rejects_bad_pair_mode(zeros_cache):
    fact = factorize(SeriesSpec("taylor", 5), cache_dir=zeros_cache)
    with pytest.raises(StructuralError):
        eval_factorized(np.eye(1, dtype=complex), np.eye(1, dtype=complex), fact, pair_mode="cubic")
