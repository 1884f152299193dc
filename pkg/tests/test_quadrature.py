import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ouriesz.quadrature import (
    DEFAULT_SPEC,
    S_MAX,
    QuadratureSpec,
    QuadratureWarning,
    composite_gauss_legendre,
    gauss_legendre,
    one_minus_r2,
    r_of_s,
    rho_integrate,
    rho_nodes,
    s_breaks,
)


def test_closed_forms():
    assert abs(rho_integrate(lambda r: r).value - math.sqrt(math.pi)) <= 1e-10
    assert abs(rho_integrate(lambda r: r**3).value - math.sqrt(math.pi / 3)) <= 1e-10


@given(st.floats(0.25, 12.0))
def test_power_moments(k):
    # int_0^1 r^k drho(r) = sqrt(pi / k)
    v = rho_integrate(lambda r: r**k)
    assert v.converged
    assert v.value == pytest.approx(math.sqrt(math.pi / k), rel=1e-10)


def test_s_variable_form_agrees():
    a = rho_integrate(lambda r: r * (1 - r * r) ** 0.5)
    b = rho_integrate(lambda s: r_of_s(s) * np.sqrt(one_minus_r2(s)), in_s=True)
    assert a.value == pytest.approx(b.value, rel=1e-12)


def test_fixed_rule_matches_adaptive():
    s, w, s0 = rho_nodes(DEFAULT_SPEC)
    assert s0 == 0.0
    assert float(np.dot(w, r_of_s(s) ** 2)) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)


def test_rho_nodes_are_cached_and_read_only():
    s1, w1, _ = rho_nodes(DEFAULT_SPEC, 1e-3)
    s2, w2, _ = rho_nodes(DEFAULT_SPEC, 1.1e-3)
    assert s1 is s2
    with pytest.raises(ValueError):
        s1[0] = 1.0


def test_pruning_start_is_a_break_below_s_lo():
    s, w, s0 = rho_nodes(DEFAULT_SPEC, 0.01)
    assert 0 < s0 <= 0.01
    assert s.min() > s0


def test_breaks_are_increasing_and_capped():
    b = s_breaks(2, 0.0, 0.125)
    assert b[0] == 0.0 and b[-1] == pytest.approx(S_MAX)
    assert np.all(np.diff(b) > 0)
    inner = b[(b > 0.2) & (b <= 3.0)]
    assert np.max(np.diff(inner)) <= 0.125 + 1e-12


def test_large_scale_adds_uniform_panels():
    n_plain = rho_nodes(DEFAULT_SPEC)[0].size
    n_big = rho_nodes(DEFAULT_SPEC, 0.0, 64.0)[0].size
    assert n_big > n_plain


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(6)
    for k in range(12):
        assert float(np.dot(w, x**k)) == pytest.approx((1 - (-1) ** (k + 1)) / (k + 1), abs=1e-14)
    p, q = composite_gauss_legendre([0.0, 0.5, 2.0], 5)
    assert float(np.dot(q, p**3)) == pytest.approx(4.0, rel=1e-14)


def test_spec_validation_and_refinement():
    with pytest.raises(ValueError):
        QuadratureSpec(atol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(substitution="tanh-sinh")
    with pytest.raises(ValueError):
        QuadratureSpec(nodes=1)
    r = DEFAULT_SPEC.refined()
    assert (r.nodes, r.outer_nodes, r.max_subdivisions) == (24, 32, 800)
    assert r.panels_per_octave == DEFAULT_SPEC.panels_per_octave


def test_nonconvergence_is_reported():
    spec = QuadratureSpec(rtol=1e-15, atol=1e-300, max_subdivisions=1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        v = rho_integrate(lambda r: np.sin(200 * r) * r, spec)
    assert not v.converged
    assert any(issubclass(c.category, QuadratureWarning) for c in caught)


def test_non_finite_integrand_raises():
    with pytest.raises(FloatingPointError):
        rho_integrate(lambda r: np.full_like(r, np.nan))
