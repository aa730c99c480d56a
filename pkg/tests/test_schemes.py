"""Catalog validation, error-coefficient estimation, and efficiency scores."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from trotterkit.errors import (
    DegenerateDrawError,
    GridUnusableError,
    NotFoundError,
    StructuralError,
)
from trotterkit.schemes import (
    TwoStageScheme,
    efficiency,
    empirical_order,
    estimate_error_coefficients,
    fit_loglog_slope,
    get_scheme,
    load_catalog,
    random_hermitian,
    validate_consistency,
)

# Cheap estimator settings: bit-identical leading coefficients to the
# defaults on every scheme checked below, at a fraction of the runtime.
FAST = dict(draws=2, dim=6)


def coeffs(scheme, max_order=3):
    return estimate_error_coefficients(scheme, max_order, **FAST)


# ---------------------------------------------------------------------------
# construction and validation


def test_strang_validates_exactly():
    rep = validate_consistency(get_scheme("strang"))
    assert rep.ok
    assert rep.a_residual == 0.0
    assert rep.b_residual == 0.0
    assert rep.symmetric_claimed and rep.symmetry_ok
    assert rep.symmetry_residual == 0.0


def test_broken_sum_reports_residual():
    s = TwoStageScheme(name="broken", order_n=1, a=(0.5, 0.5), b=(0.9,), symmetric=False)
    rep = validate_consistency(s)
    assert not rep.ok
    assert rep.b_residual == pytest.approx(0.1, rel=1e-12)
    assert rep.a_residual == 0.0


def test_symmetry_claim_checked():
    # Sums are fine (ok covers only those); the palindrome claim is not.
    s = TwoStageScheme(name="lying", order_n=2, a=(0.3, 0.4, 0.3), b=(0.7, 0.3), symmetric=True)
    rep = validate_consistency(s)
    assert rep.ok
    assert rep.symmetric_claimed and not rep.symmetry_ok
    assert rep.symmetry_residual >= 0.4 - 1e-15


@pytest.mark.parametrize(
    "a, b",
    [
        ((0.5, 0.5), (1.0, 0.0)),  # len(a) must be len(b) + 1
        ((1.0,), ()),  # b may not be empty
        ((), ()),
    ],
)
def test_malformed_lengths_rejected(a, b):
    with pytest.raises(StructuralError):
        TwoStageScheme(name="bad", order_n=1, a=a, b=b, symmetric=False)


def test_catalog_loads_and_validates():
    cat = load_catalog()
    assert len(cat) == 6
    for name, scheme in cat.items():
        assert scheme.name == name
        assert validate_consistency(scheme).ok


def test_get_scheme_unknown_name():
    with pytest.raises(NotFoundError):
        get_scheme("bogus-name")


def test_reversed_swaps_coefficients():
    s = TwoStageScheme(name="asym", order_n=1, a=(0.2, 0.8, 0.0), b=(0.6, 0.4), symmetric=False)
    r = s.reversed()
    assert r.a == tuple(reversed(s.a))
    assert r.b == tuple(reversed(s.b))


# ---------------------------------------------------------------------------
# error-coefficient estimation


def test_strang_leading_coefficients_analytic():
    # Symmetric BCH for e^{Ah/2} e^{Bh} e^{Ah/2}: alpha = -1/24, beta = -1/12.
    c = coeffs(get_scheme("strang"))
    assert abs(c.nu_minus_1) < 1e-10
    assert abs(c.sigma_minus_1) < 1e-10
    assert c.alpha.real == pytest.approx(-1 / 24, rel=1e-10)
    assert c.beta.real == pytest.approx(-1 / 12, rel=1e-10)
    assert abs(c.alpha.imag) < 1e-12 and abs(c.beta.imag) < 1e-12
    assert c.spread < 1e-12
    assert c.gamma == ()


def test_lie_leading_coefficients_analytic():
    # Plain BCH for e^{Ah} e^{Bh}: alpha = +1/12, beta = -1/12.
    lie = TwoStageScheme(name="lie", order_n=1, a=(1.0, 0.0), b=(1.0,), symmetric=False)
    c = coeffs(lie)
    assert c.alpha.real == pytest.approx(1 / 12, rel=1e-9)
    assert c.beta.real == pytest.approx(-1 / 12, rel=1e-9)


@pytest.mark.parametrize("name", ["forest-ruth", "suzuki4", "blanes-moan4", "triple-jump-complex"])
def test_order4_annihilates_third_order(name):
    c = coeffs(get_scheme(name))
    assert abs(c.alpha) < 1e-8
    assert abs(c.beta) < 1e-8


def test_duplicated_strang_quarters_the_coefficients():
    # Two half-length Strang steps written as one q=2 scheme: the h^3
    # error per unit step drops by 4, exactly offsetting q^2 in the score.
    dup = TwoStageScheme(
        name="dup-strang", order_n=2, a=(0.25, 0.5, 0.25), b=(0.5, 0.5), symmetric=True
    )
    c_s = coeffs(get_scheme("strang"))
    c_d = coeffs(dup)
    assert c_d.alpha == pytest.approx(c_s.alpha / 4, rel=1e-9)
    assert c_d.beta == pytest.approx(c_s.beta / 4, rel=1e-9)
    e_s = efficiency(get_scheme("strang"), coeffs=c_s)
    e_d = efficiency(dup, coeffs=c_d)
    assert e_d.eff == pytest.approx(e_s.eff, rel=1e-9)


def test_reversal_preserves_coefficient_magnitudes():
    s = TwoStageScheme(name="asym", order_n=1, a=(0.2, 0.8, 0.0), b=(0.6, 0.4), symmetric=False)
    cf = coeffs(s)
    cr = coeffs(s.reversed())
    assert abs(cr.alpha) == pytest.approx(abs(cf.alpha), rel=1e-9)
    assert abs(cr.beta) == pytest.approx(abs(cf.beta), rel=1e-9)


def test_max_order_five_fills_gamma():
    c = estimate_error_coefficients(get_scheme("blanes-moan4"), 5, **FAST)
    assert len(c.gamma) == 6
    assert max(abs(g) for g in c.gamma) > 1e-6


def test_max_order_must_be_three_or_five():
    with pytest.raises(StructuralError):
        estimate_error_coefficients(get_scheme("strang"), 4)


def test_commuting_explicit_operators_degenerate():
    a = np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex)
    with pytest.raises(DegenerateDrawError):
        estimate_error_coefficients(get_scheme("strang"), 3, operators=[(a, 2.0 * a)])


def test_seed_independence_of_estimates():
    base = estimate_error_coefficients(get_scheme("strang"), 3, **FAST)
    for seed in (7, 99, 2024):
        c = estimate_error_coefficients(get_scheme("strang"), 3, seed=seed, **FAST)
        assert abs(c.alpha - base.alpha) <= 1e-6 * abs(base.alpha)
        assert abs(c.beta - base.beta) <= 1e-6 * abs(base.beta)


# ---------------------------------------------------------------------------
# efficiency scores


def test_strang_efficiency_value():
    # Eff_2 = 1/(q^2 sqrt(alpha^2 + beta^2)) = 24/sqrt(5) for Strang.
    e = efficiency(get_scheme("strang"), coeffs=coeffs(get_scheme("strang")))
    assert e.order_n == 2 and e.q == 1
    assert e.eff == pytest.approx(24 / math.sqrt(5), rel=1e-10)


def test_order4_efficiency_hierarchy():
    scores = {}
    for name in ("forest-ruth", "suzuki4", "blanes-moan4"):
        s = get_scheme(name)
        scores[name] = efficiency(s, coeffs=estimate_error_coefficients(s, 5, **FAST)).eff
    assert scores["forest-ruth"] < scores["suzuki4"] < scores["blanes-moan4"]


def test_underclaimed_order_warns_and_scores_inf():
    bm = get_scheme("blanes-moan4")
    under = TwoStageScheme(name="bm-as-2", order_n=2, a=bm.a, b=bm.b, symmetric=True)
    c = coeffs(under)
    with pytest.warns(UserWarning, match="order underclaimed"):
        e = efficiency(under, coeffs=c)
    assert e.eff == math.inf


def test_efficiency_rejects_unsupported_orders():
    lie = TwoStageScheme(name="lie", order_n=1, a=(1.0, 0.0), b=(1.0,), symmetric=False)
    with pytest.raises(StructuralError):
        efficiency(lie, coeffs=coeffs(lie))


def test_order4_efficiency_needs_fifth_order_coeffs():
    bm = get_scheme("blanes-moan4")
    with pytest.raises(StructuralError):
        efficiency(bm, coeffs=coeffs(bm))  # max_order=3: gamma missing


# ---------------------------------------------------------------------------
# slope fitting and empirical order


def test_fit_loglog_slope_exact_power_law():
    h = np.array([0.5, 0.25, 0.125, 0.0625])
    errs = 0.3 * h**2.5
    assert fit_loglog_slope(h, errs) == pytest.approx(2.5, abs=1e-12)


def test_fit_loglog_slope_drops_plateau_points():
    h = np.array([0.5, 0.25, 0.125, 0.0625, 0.03125])
    errs = np.concatenate([0.3 * h[:4] ** 2, [1e-15]])
    assert fit_loglog_slope(h, errs) == pytest.approx(2.0, abs=1e-10)


def test_fit_loglog_slope_needs_three_points():
    with pytest.raises(GridUnusableError):
        fit_loglog_slope([0.5, 0.25], [1e-2, 1e-3])
    with pytest.raises(GridUnusableError):
        fit_loglog_slope([0.5, 0.25, 0.125], [1e-14, 1e-15, 1e-16])


def test_empirical_orders_of_catalog_entries():
    assert empirical_order(get_scheme("strang")) == pytest.approx(2.0, abs=0.2)
    assert empirical_order(get_scheme("blanes-moan4")) == pytest.approx(4.0, abs=0.3)


def test_inconsistent_scheme_has_no_order():
    s = TwoStageScheme(name="broken", order_n=2, a=(0.5, 0.5, 0.0), b=(0.45, 0.45), symmetric=False)
    assert empirical_order(s) < 0.5


# ---------------------------------------------------------------------------
# randomized properties


@st.composite
def consistent_schemes(draw):
    q = draw(st.integers(min_value=1, max_value=3))
    coeff = st.floats(min_value=-1.2, max_value=1.2, allow_nan=False, allow_infinity=False)
    head_a = [draw(coeff) for _ in range(q)]
    head_b = [draw(coeff) for _ in range(q - 1)]
    a = tuple(head_a) + (1.0 - math.fsum(head_a),)
    b = tuple(head_b) + (1.0 - math.fsum(head_b),)
    return TwoStageScheme(name="rand", order_n=1, a=a, b=b, symmetric=False)


@given(consistent_schemes())
def test_property_closed_sums_validate(scheme):
    assert validate_consistency(scheme).ok


@given(consistent_schemes(), st.integers(0, 10), st.floats(1e-6, 1e-2))
def test_property_single_coefficient_corruption_detected(scheme, where, delta):
    a, b = list(scheme.a), list(scheme.b)
    if where % 2 == 0:
        a[where % len(a)] += delta
    else:
        b[where % len(b)] += delta
    bad = TwoStageScheme(name="rand", order_n=1, a=tuple(a), b=tuple(b), symmetric=False)
    assert not validate_consistency(bad).ok


@given(
    st.integers(min_value=2, max_value=3),
    st.floats(min_value=0.05, max_value=0.45, allow_nan=False),
    st.floats(min_value=0.05, max_value=0.45, allow_nan=False),
)
def test_property_symmetric_schemes_have_even_order(q, x, y):
    # Palindromic consistent families; symmetry suppresses every odd order,
    # so the fitted slope sits at 2 (or higher even order), never at 1.
    if q == 2:
        scheme = TwoStageScheme(
            name="pal", order_n=2, a=(x, 1 - 2 * x, x), b=(0.5, 0.5), symmetric=True
        )
    else:
        scheme = TwoStageScheme(
            name="pal",
            order_n=2,
            a=(x, 0.5 - x, 0.5 - x, x),
            b=(y, 1 - 2 * y, y),
            symmetric=True,
        )
    assert validate_consistency(scheme).ok
    assert empirical_order(scheme, dim=6) > 1.7


@given(
    st.floats(min_value=0.5, max_value=6.0, allow_nan=False),
    st.floats(min_value=-4.0, max_value=2.0, allow_nan=False),
)
def test_property_slope_fit_recovers_power_laws(p, log_c):
    h = np.array([0.5, 0.25, 0.125, 0.0625, 0.03125])
    errs = 10.0**log_c * h**p
    assume(float(errs.min()) > 1e-11)  # keep clear of the plateau cut
    assert fit_loglog_slope(h, errs) == pytest.approx(p, rel=1e-9)


@given(st.integers(min_value=2, max_value=64))
def test_property_random_hermitian_is_hermitian(dim):
    rng = np.random.default_rng(dim)
    m = random_hermitian(rng, dim)
    assert m.shape == (dim, dim)
    assert np.array_equal(m, m.conj().T)
