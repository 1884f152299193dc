import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ouriesz.hermite import HermiteExpansion, eval_expansion
from ouriesz.kernels import (
    NEAR_DIAGONAL,
    SingularInputError,
    apply_to_atom_damped,
    apply_via_kernel,
    grad_kernel,
    hormander_bmo,
    hormander_h1,
    kernel_batch,
    kernel_m,
    kernel_r,
    kernel_s_star,
    kernel_s_star_forms,
    phi_psi,
    schwartz_kernel_m,
)
from ouriesz.quadrature import DEFAULT_SPEC
from ouriesz.spaces import AdmissibleRegion, make_interval_halves_atom

coords = st.floats(-2.0, 2.0)


def pair(d):
    return st.tuples(st.lists(coords, min_size=d, max_size=d), st.lists(coords, min_size=d, max_size=d)).filter(
        lambda p: np.linalg.norm(np.subtract(p[0], p[1])) > 0.2
    )


def test_phi_psi():
    p = phi_psi(0.6, [1.0, 0.0], [0.0, 2.0])
    np.testing.assert_allclose(p.phi, np.array([-1.0, 1.2]) / 0.8)
    np.testing.assert_allclose(p.psi, np.array([0.6, -2.0]) / 0.8)
    with pytest.raises(ValueError):
        phi_psi(1.0, [0.0], [1.0])


@pytest.mark.filterwarnings("ignore::ouriesz.quadrature.QuadratureWarning")
def test_diagonal_is_refused():
    with pytest.raises(SingularInputError):
        kernel_m([0.5, 0.5], [0.5, 0.5])
    with pytest.raises(SingularInputError):
        kernel_r(1, [0.5], [0.5 + 0.1 * NEAR_DIAGONAL])
    with pytest.raises(SingularInputError):
        kernel_batch("Sstar", [[0.0]], [[0.0]])
    # M(L) has an integrable singularity: close pairs are allowed
    assert math.isfinite(kernel_m([0.5], [0.5 + 1e-7]).value)


def test_unknown_kind_and_bad_coordinate():
    with pytest.raises(ValueError):
        kernel_batch("Q", [[0.0]], [[1.0]])
    with pytest.raises(ValueError):
        kernel_r(2, [0.0], [1.0])


@given(pair(2))
def test_m_kernel_is_symmetric(p):
    x, y = p
    assert kernel_m(x, y).value == pytest.approx(kernel_m(y, x).value, rel=1e-9, abs=1e-12)


@given(pair(2))
def test_s_star_equals_2x_km_minus_r(p):
    # d*_i M(L) = 2 x_i M(L) - d_i M(L)
    x, y = np.array(p[0]), np.array(p[1])
    lhs = kernel_s_star(1, x, y).value
    rhs = 2 * x[0] * kernel_m(x, y).value - kernel_r(1, x, y).value
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


@given(pair(1))
def test_r_kernel_is_x_derivative_of_m_kernel(p):
    x, y = np.array(p[0]), np.array(p[1])
    h = 1e-5
    fd = (kernel_m(x + h, y).value - kernel_m(x - h, y).value) / (2 * h)
    assert kernel_r(1, x, y).value == pytest.approx(fd, rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("kind", ["M", "R", "Sstar"])
def test_batch_matches_adaptive(kind):
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 2))
    y = rng.standard_normal((8, 2)) + 0.5
    fn = {"M": lambda a, b: kernel_m(a, b), "R": lambda a, b: kernel_r(1, a, b),
          "Sstar": lambda a, b: kernel_s_star(1, a, b)}[kind]
    batch = kernel_batch(kind, x, y, 1)
    ref = [fn(a, b).value for a, b in zip(x, y)]
    np.testing.assert_allclose(batch, ref, rtol=1e-9, atol=1e-12)


def test_batch_weights():
    x = np.array([[2.0, 0.5]])
    y = np.array([[1.0, -0.5]])
    k = kernel_batch("R", x, y, 1)
    kx = kernel_batch("R", x, y, 1, weight="x")
    ky = kernel_batch("R", x, y, 1, weight="y")
    assert kx[0] == pytest.approx(math.exp(-x[0] @ x[0]) * k[0], rel=1e-10)
    assert ky[0] == pytest.approx(math.exp(-y[0] @ y[0]) * k[0], rel=1e-10)


def test_batch_gradients_match_adaptive():
    x = np.array([0.3, -1.0])
    y = np.array([1.2, 0.4])
    for kind in ("M", "R", "Sstar"):
        for which in ("x", "y"):
            g = kernel_batch(kind, x[None], y[None], 1, which=which)[0]
            ref = [v.value for v in grad_kernel(kind, 1, which, x, y)]
            np.testing.assert_allclose(g, ref, rtol=1e-9, atol=1e-12)
    with pytest.raises(ValueError):
        grad_kernel("R", 1, "z", x, y)


def test_dual_forms_agree():
    rng = np.random.default_rng(5)
    for _ in range(5):
        x, y = rng.standard_normal(2), rng.standard_normal(2)
        a, b = kernel_s_star_forms(1, x, y)
        c = kernel_s_star(1, x, y)
        assert a.value == pytest.approx(b.value, rel=1e-8)
        assert c.value == pytest.approx(b.value, rel=1e-8)


def test_schwartz_kernel_scaling():
    x, y = np.array([0.2]), np.array([-0.7])
    assert schwartz_kernel_m(x, y).value == pytest.approx(
        math.exp(-0.49) / math.sqrt(math.pi) * kernel_m(x, y).value, rel=1e-12
    )


@pytest.mark.parametrize("n", [1, 2, 3])
def test_m_of_l_via_kernel(n):
    h = HermiteExpansion.basis((n,))
    box = [(np.array([-12.0]), np.array([12.0]))]
    for x in (-1.1, 0.35, 1.7):
        got = apply_via_kernel("M", 1, lambda p: eval_expansion(h, p), np.array([x]), box)
        assert got == pytest.approx(float(eval_expansion(h, np.array([x]))) / math.sqrt(n), rel=1e-4)


def test_apply_via_kernel_refuses_points_in_support():
    box = [(np.array([0.0]), np.array([1.0]))]
    with pytest.raises(SingularInputError):
        apply_via_kernel("R", 1, lambda p: np.ones(p.shape[:-1]), np.array([0.5]), box)


def test_apply_via_kernel_matches_damped_atom():
    atom = make_interval_halves_atom(2.0)
    x = np.array([[0.5], [3.4]])
    damped = apply_to_atom_damped("R", 1, atom, x)
    direct = [apply_via_kernel("R", 1, atom, xx, atom.pieces) for xx in x]
    np.testing.assert_allclose(damped, np.exp(-x[:, 0] ** 2) * direct, rtol=1e-9)
    with pytest.raises(SingularInputError):
        apply_to_atom_damped("R", 1, atom, np.array([[2.5]]))


@pytest.mark.parametrize("fn,kind", [(hormander_h1, "R"), (hormander_bmo, "Sstar")])
def test_hormander_d1_stable_under_refinement(fn, kind):
    ball = AdmissibleRegion.maximal_ball((4.0,))
    a = fn(kind, 1, ball)
    b = fn(kind, 1, ball, DEFAULT_SPEC.refined())
    assert a > 0
    assert a == pytest.approx(b, rel=1e-3)


def test_hormander_needs_a_ball():
    cube = AdmissibleRegion("cube", (2.0,), 0.5)
    with pytest.raises(ValueError):
        hormander_h1("R", 1, cube)
