import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ouriesz.hermite import (
    HermiteExpansion,
    apply_multiplication,
    apply_ou,
    apply_partial,
    apply_partial_star,
    l2_norm,
    random_expansion,
)
from ouriesz.spectral import (
    Family,
    RieszKind,
    apply_m_of_l,
    apply_multiplier,
    apply_riesz,
    duality_residual,
    riesz_multiplier,
)

from test_hermite import dyadic_expansions


def test_multiplier_values():
    assert riesz_multiplier(0) == 0.0
    assert riesz_multiplier(4) == 0.5
    assert riesz_multiplier(2) == pytest.approx(2**-0.5)


@pytest.mark.parametrize("alpha", [(0,), (1,), (3, 1), (2, 2, 1)])
def test_m_of_l_on_basis(alpha):
    h = HermiteExpansion.basis(alpha)
    n = sum(alpha)
    want = HermiteExpansion.zero(len(alpha)) if n == 0 else h * (1 / math.sqrt(n))
    assert apply_m_of_l(h) == want


@given(dyadic_expansions(2))
def test_m_of_l_squared_inverts_l_off_constants(f):
    g = apply_ou(apply_m_of_l(apply_m_of_l(f)))
    f0 = f - HermiteExpansion(2, {a: c for a, c in f.items() if sum(a) == 0})
    assert max((abs(c) for _, c in (g - f0).items()), default=0.0) <= 1e-12 * (1 + max((abs(c) for _, c in f.items()), default=0))


def test_non_finite_multiplier_is_rejected():
    with pytest.raises((ValueError, FloatingPointError)):
        apply_multiplier(lambda j: 1 / j if j else math.inf, HermiteExpansion.basis((0,)))


@given(dyadic_expansions(2), st.integers(1, 2))
def test_composition_orders(f, i):
    m = lambda g: apply_m_of_l(g)
    assert apply_riesz(RieszKind(Family.R, i), f) == apply_partial(i, m(f))
    assert apply_riesz(RieszKind(Family.S, i), f) == m(apply_partial(i, f))
    assert apply_riesz(RieszKind(Family.RSTAR, i), f) == m(apply_partial_star(i, f))
    assert apply_riesz(RieszKind(Family.SSTAR, i), f) == apply_partial_star(i, m(f))
    assert apply_riesz(RieszKind(Family.M, i), f) == apply_multiplication(i, m(f))
    assert apply_riesz(RieszKind(Family.MSTAR, i), f) == m(apply_multiplication(i, f))


def test_adjoint_is_an_involution():
    for fam in Family:
        assert fam.adjoint.adjoint is fam
        assert fam.adjoint is not fam
    assert str(RieszKind("Sstar", 2).adjoint) == str(RieszKind(Family.S, 2))


def test_coordinate_beyond_dimension():
    with pytest.raises(ValueError):
        apply_riesz(RieszKind(Family.R, 3), HermiteExpansion.basis((1, 1)))
    with pytest.raises(ValueError):
        RieszKind(Family.R, 0)


@pytest.mark.parametrize("fam", [Family.R, Family.S, Family.M])
@pytest.mark.parametrize("d", [1, 2])
def test_duality_residual_random_pairs(fam, d):
    rng = np.random.default_rng(7)
    for _ in range(25):
        f = random_expansion(rng, d, 6)
        g = random_expansion(rng, d, 6)
        assert duality_residual(RieszKind(fam, 1), f, g) <= 1e-10


@given(dyadic_expansions(2), dyadic_expansions(2), st.sampled_from(list(Family)))
def test_duality_property(f, g, fam):
    scale = 1 + l2_norm(f) * l2_norm(g)
    assert duality_residual(RieszKind(fam, 1), f, g) <= 1e-13 * scale


def test_corrupted_multiplier_keeps_adjointness_but_not_kernel():
    bad = lambda j: 1.0 if j == 0 else 1 / math.sqrt(j)
    rng = np.random.default_rng(0)
    f, g = random_expansion(rng, 1, 5), random_expansion(rng, 1, 5)
    assert duality_residual(RieszKind(Family.R, 1), f, g, bad) <= 1e-10
    assert apply_m_of_l(HermiteExpansion.basis((0,)), bad) != HermiteExpansion.zero(1)
