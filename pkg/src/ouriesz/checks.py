"""Check suites behind the command-line runner.

Each suite returns a list of :class:`Case` records (name, value, tolerance,
pass).  Derivative identities are checked against numpy's Hermite-series
routines, which know nothing about this package's coefficient shifts.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from numpy.polynomial import hermite as nph

from .hermite import (
    HermiteExpansion,
    apply_ou,
    apply_partial,
    apply_partial_star,
    eval_expansion,
    hermite_1d,
    l2_norm,
    multi_indices,
    random_expansion,
)
from .kernels import apply_via_kernel, grad_kernel, kernel_r, kernel_s_star, kernel_s_star_forms
from .quadrature import DEFAULT_SPEC, QuadratureSpec, QuadratureWarning, rho_integrate
from .spectral import Family, RieszKind, SpectralMultiplier, apply_m_of_l, apply_riesz, duality_residual, riesz_multiplier


@dataclass(frozen=True)
class Case:
    name: str
    value: Any
    tolerance: Any
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": _jsonable(self.value), "tolerance": _jsonable(self.tolerance), "pass": self.passed}


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _le(name: str, value: float, tol: float) -> Case:
    return Case(name, float(value), tol, bool(math.isfinite(value) and value <= tol))


def _max_coeff_diff(f: HermiteExpansion, g: HermiteExpansion) -> float:
    return max((abs(c) for _, c in (f - g).items()), default=0.0)


# ---------------------------------------------------------------- spectral

def _oracle_1d(n: int, op: str) -> dict[int, float]:
    """Hermite coefficients of d H_n (op "d") or d* H_n = 2 t H_n - d H_n (op "dstar")."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    der = nph.hermder(c) if n > 0 else np.zeros(1)
    if op == "d":
        out = der
    else:
        out = nph.hermsub(2.0 * nph.hermmulx(c), der)
    return {k: float(v) for k, v in enumerate(out) if v != 0}


def _oracle(alpha: tuple, i: int, op: str) -> HermiteExpansion:
    d = len(alpha)
    coeffs = {}
    for k, v in _oracle_1d(alpha[i - 1], op).items():
        beta = list(alpha)
        beta[i - 1] = k
        coeffs[tuple(beta)] = v
    return HermiteExpansion(d, coeffs)


def spectral_suite(
    dims: Sequence[int] = (1, 2, 3),
    seed: int = 0,
    multiplier: SpectralMultiplier = riesz_multiplier,
    max_degree: int = 10,
    pairs: int = 100,
    identities: bool = True,
    adjoints: bool = True,
) -> list[Case]:
    rng = np.random.default_rng(seed)
    cases = []
    for d in dims:
        if identities:
            cases.extend(_identity_cases(d, rng, multiplier, max_degree))
        if adjoints and d <= 2:
            for fam in (Family.R, Family.S, Family.M):
                worst = 0.0
                for _ in range(pairs):
                    f = random_expansion(rng, d, 6)
                    g = random_expansion(rng, d, 6)
                    worst = max(worst, duality_residual(RieszKind(fam, 1), f, g, multiplier))
                cases.append(_le(f"d{d}/adjoint_{fam.value}_{fam.adjoint.value}", worst, 1e-10))
    return cases


def _identity_cases(d: int, rng: np.random.Generator, multiplier: SpectralMultiplier, max_degree: int) -> list[Case]:
    cases = []
    basis = multi_indices(d, max_degree)
    worst_d = worst_ds = 0.0
    for alpha in basis:
        h = HermiteExpansion.basis(alpha)
        for i in range(1, d + 1):
            worst_d = max(worst_d, _max_coeff_diff(apply_partial(i, h), _oracle(alpha, i, "d")))
            worst_ds = max(worst_ds, _max_coeff_diff(apply_partial_star(i, h), _oracle(alpha, i, "dstar")))
    cases.append(_le(f"d{d}/partial_hermite", worst_d, 0.0))
    cases.append(_le(f"d{d}/partial_star_hermite", worst_ds, 0.0))

    worst_l = worst_m = 0.0
    for _ in range(20):
        f = random_expansion(rng, d, max_degree, dyadic=True)
        lhs = HermiteExpansion.zero(d)
        for i in range(1, d + 1):
            lhs = lhs + apply_partial_star(i, apply_partial(i, f))
        worst_l = max(worst_l, _max_coeff_diff(lhs, 2 * apply_ou(f)))
        for i in range(1, d + 1):
            m_i = apply_riesz(RieszKind(Family.M, i), f, multiplier)
            half = 0.5 * (apply_riesz(RieszKind(Family.R, i), f, multiplier)
                          + apply_riesz(RieszKind(Family.SSTAR, i), f, multiplier))
            worst_m = max(worst_m, _max_coeff_diff(m_i, half) / max(1.0, l2_norm(m_i)))
    cases.append(_le(f"d{d}/sum_dstar_d_equals_2L", worst_l, 0.0))
    cases.append(_le(f"d{d}/M_equals_half_R_plus_Sstar", worst_m, 1e-12))

    h0 = HermiteExpansion.basis((0,) * d)
    cases.append(_le(f"d{d}/M(L)H0_vanishes", l2_norm(apply_m_of_l(h0, multiplier)), 0.0))
    return cases


# ---------------------------------------------------------------- kernels

def _random_pairs(rng: np.random.Generator, d: int, count: int, min_sep: float = 0.3):
    out = []
    while len(out) < count:
        x = rng.standard_normal(d)
        y = rng.standard_normal(d)
        if np.linalg.norm(x - y) > min_sep:
            out.append((x, y))
    return out


def m_of_l_kernel_errors(d: int, seed: int = 0, spec: QuadratureSpec = DEFAULT_SPEC, points: int = 5) -> list[float]:
    """Relative errors of the kernel-side M(L) against ``n^{-1/2} H_n`` for n = 1..4."""
    rng = np.random.default_rng(seed)
    box = [(np.full(d, -12.0), np.full(d, 12.0))]
    errs = []
    for n in range(1, 5):
        alpha = (n,) + (0,) * (d - 1)
        h = HermiteExpansion.basis(alpha)
        f = lambda p, h=h: eval_expansion(h, p)
        for x in rng.uniform(-1.5, 1.5, (points, d)):
            got = apply_via_kernel("M", 1, f, x, box, spec)
            want = eval_expansion(h, x) / math.sqrt(n)
            errs.append(abs(got - want) / abs(want))
    return errs


def gradient_fd_errors(d: int, seed: int = 0, spec: QuadratureSpec = DEFAULT_SPEC, pairs: int = 10) -> list[float]:
    """Relative gap between grad_kernel and central differences, R_1 and S*_1, both variables."""
    rng = np.random.default_rng(seed)
    errs = []
    for kind, fn in (("R", kernel_r), ("Sstar", kernel_s_star)):
        for x, y in _random_pairs(rng, d, pairs):
            for which in ("x", "y"):
                grad = np.array([v.value for v in grad_kernel(kind, 1, which, x, y, spec)])
                fd = np.empty(d)
                for j in range(d):
                    h = 1e-4 * (1.0 + abs((x if which == "x" else y)[j]))
                    e = np.zeros(d)
                    e[j] = h
                    if which == "x":
                        fd[j] = (fn(1, x + e, y, spec).value - fn(1, x - e, y, spec).value) / (2 * h)
                    else:
                        fd[j] = (fn(1, x, y + e, spec).value - fn(1, x, y - e, spec).value) / (2 * h)
                errs.append(float(np.linalg.norm(grad - fd) / np.linalg.norm(grad)))
    return errs


def dual_form_errors(seed: int = 0, spec: QuadratureSpec = DEFAULT_SPEC, pairs: int = 20, d: int = 2) -> list[float]:
    rng = np.random.default_rng(seed)
    errs = []
    for x, y in _random_pairs(rng, d, pairs):
        a, b = kernel_s_star_forms(1, x, y, spec)
        errs.append(abs(a.value - b.value) / abs(b.value))
    return errs


def closed_form_errors(spec: QuadratureSpec = DEFAULT_SPEC) -> dict[str, float]:
    return {
        "rho_integral_r": abs(rho_integrate(lambda r: r, spec).value - math.sqrt(math.pi)),
        "rho_integral_r3": abs(rho_integrate(lambda r: r**3, spec).value - math.sqrt(math.pi / 3)),
    }


def kernel_suite(dims: Sequence[int] = (1, 2), seed: int = 0, spec: QuadratureSpec = DEFAULT_SPEC) -> list[Case]:
    cases = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        for name, err in closed_form_errors(spec).items():
            cases.append(_le(name, err, 1e-10))
        for d in dims:
            cases.append(_le(f"d{d}/m_of_l_kernel_vs_spectral", max(m_of_l_kernel_errors(d, seed, spec)), 1e-3))
            cases.append(_le(f"d{d}/gradient_vs_finite_difference", max(gradient_fd_errors(d, seed, spec)), 1e-4))
            cases.append(_le(f"d{d}/s_star_dual_forms", max(dual_form_errors(seed, spec, d=d)), 1e-8))
    if caught:
        cases.append(Case("diagnostics/quadrature_nonconvergence_warnings", len(caught), None, True))
    return cases


# ---------------------------------------------------------------- oracle for the 1-d Hermite values

def hermite_value_errors(max_degree: int = 10, points=np.linspace(-3, 3, 13)) -> float:
    """Largest relative gap between ``hermite_1d`` and numpy's ``hermval``."""
    worst = 0.0
    for n in range(max_degree + 1):
        c = np.zeros(n + 1)
        c[n] = 1.0
        want = nph.hermval(points, c)
        got = hermite_1d(n, points)
        worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want)))))
    return worst
