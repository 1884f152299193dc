"""Hermite polynomials on R^d and the first-order operators acting on them.

Polynomials use the physicists' normalisation, orthogonal with respect to the
Gaussian measure ``pi^{-d/2} exp(-|x|^2) dx``::

    <H_a, H_b> = delta_ab * prod_i 2^{a_i} a_i!

Expansions are immutable maps from multi-indices to float coefficients.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from types import MappingProxyType
from typing import Callable

import numpy as np

MultiIndex = tuple[int, ...]


def hermite_1d(n: int, t):
    """Evaluate H_n at ``t`` (scalar or array) by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    t = np.asarray(t, dtype=float)
    h_prev = np.ones_like(t)
    if n == 0:
        return h_prev[()] if h_prev.ndim == 0 else h_prev
    h = 2.0 * t
    for k in range(1, n):
        h_prev, h = h, 2.0 * t * h - 2.0 * k * h_prev
    return h[()] if h.ndim == 0 else h


def norm_squared(alpha: MultiIndex) -> int:
    """Exact ``||H_alpha||^2`` in L^2(gamma)."""
    out = 1
    for a in alpha:
        out *= (1 << a) * math.factorial(a)
    return out


def gaussian_density(x) -> float:
    """Density of the normalised Gaussian measure at the point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[-1]
    return math.pi ** (-d / 2) * np.exp(-np.sum(x * x, axis=-1))[()]


class HermiteExpansion:
    """Finite linear combination ``sum_alpha c_alpha H_alpha`` in ``dim`` variables.

    Zero coefficients are pruned, so two expansions compare equal exactly
    when they have identical nonzero coefficients.
    """

    __slots__ = ("_dim", "_coeffs")

    def __init__(self, dim: int, coefficients: Mapping[MultiIndex, float] | Iterable = ()):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        items = coefficients.items() if isinstance(coefficients, Mapping) else coefficients
        coeffs: dict[MultiIndex, float] = {}
        for alpha, c in items:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim:
                raise ValueError(f"multi-index {alpha} does not have length {dim}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"multi-index {alpha} has a negative entry")
            if not math.isfinite(c):
                raise ValueError(f"coefficient of {alpha} is not finite")
            coeffs[alpha] = coeffs.get(alpha, 0.0) + c
        self._dim = dim
        self._coeffs = {a: coeffs[a] for a in sorted(coeffs) if coeffs[a] != 0}

    @classmethod
    def basis(cls, alpha: Iterable[int], coef: float = 1.0) -> HermiteExpansion:
        alpha = tuple(alpha)
        return cls(len(alpha), {alpha: coef})

    @classmethod
    def zero(cls, dim: int) -> HermiteExpansion:
        return cls(dim)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def coefficients(self) -> Mapping[MultiIndex, float]:
        return MappingProxyType(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def degree(self) -> int:
        """Largest total degree present (-1 for the zero expansion)."""
        return max((sum(a) for a in self._coeffs), default=-1)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermiteExpansion):
            return NotImplemented
        return self._dim == other._dim and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self._dim, tuple(self._coeffs.items())))

    def __repr__(self) -> str:
        terms = " + ".join(f"{c!r}*H{a}" for a, c in self._coeffs.items()) or "0"
        return f"HermiteExpansion(d={self._dim}: {terms})"

    def _check(self, other: HermiteExpansion) -> None:
        if self._dim != other._dim:
            raise ValueError(f"dimension mismatch: {self._dim} != {other._dim}")

    def __add__(self, other: HermiteExpansion) -> HermiteExpansion:
        self._check(other)
        out = dict(self._coeffs)
        for a, c in other._coeffs.items():
            out[a] = out.get(a, 0.0) + c
        return HermiteExpansion(self._dim, out)

    def __neg__(self) -> HermiteExpansion:
        return HermiteExpansion(self._dim, {a: -c for a, c in self._coeffs.items()})

    def __sub__(self, other: HermiteExpansion) -> HermiteExpansion:
        return self + (-other)

    def __mul__(self, scalar: float) -> HermiteExpansion:
        return HermiteExpansion(self._dim, {a: scalar * c for a, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __call__(self, x):
        return eval_expansion(self, x)


def _check_coordinate(i: int, f: HermiteExpansion) -> None:
    if not 1 <= i <= f.dim:
        raise ValueError(f"coordinate {i} out of range 1..{f.dim}")


def eval_expansion(f: HermiteExpansion, x):
    """Evaluate ``f`` at a point, or at each row of an ``(..., d)`` array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != f.dim:
        raise ValueError(f"point has dimension {x.shape[-1]}, expansion has {f.dim}")
    out = np.zeros(x.shape[:-1])
    if not f:
        return out[()]
    top = max(max(a) for a in f.coefficients)
    # table[i][n] = H_n(x_i)
    table = []
    for i in range(f.dim):
        t = x[..., i]
        rows = [np.ones_like(t), 2.0 * t]
        for k in range(1, top):
            rows.append(2.0 * t * rows[k] - 2.0 * k * rows[k - 1])
        table.append(rows)
    for alpha, c in f.items():
        term = np.full(x.shape[:-1], c)
        for i, a in enumerate(alpha):
            term = term * table[i][a]
        out = out + term
    return out[()]


def inner_product_gamma(f: HermiteExpansion, g: HermiteExpansion) -> float:
    f._check(g)
    small, big = (f, g) if len(f) <= len(g) else (g, f)
    total = 0.0
    for alpha, c in small.items():
        d = big.coefficients.get(alpha)
        if d is not None:
            total += c * d * float(norm_squared(alpha))
    return total


def l2_norm(f: HermiteExpansion) -> float:
    return math.sqrt(inner_product_gamma(f, f))


def _shift(f: HermiteExpansion, i: int, step: int, factor: Callable[[int], float]) -> dict:
    out: dict[MultiIndex, float] = {}
    k = i - 1
    for alpha, c in f.items():
        a = alpha[k]
        if a + step < 0:
            continue
        w = factor(a)
        if w == 0:
            continue
        beta = alpha[:k] + (a + step,) + alpha[k + 1:]
        out[beta] = out.get(beta, 0.0) + w * c
    return out


def apply_partial(i: int, f: HermiteExpansion) -> HermiteExpansion:
    """d/dx_i, using ``dH_n = 2n H_{n-1}``."""
    _check_coordinate(i, f)
    return HermiteExpansion(f.dim, _shift(f, i, -1, lambda n: float(2 * n)))


def apply_partial_star(i: int, f: HermiteExpansion) -> HermiteExpansion:
    """Gaussian adjoint of d/dx_i, i.e. ``2 x_i - d/dx_i``; raises each degree by one."""
    _check_coordinate(i, f)
    return HermiteExpansion(f.dim, _shift(f, i, +1, lambda n: 1.0))


def apply_multiplication(i: int, f: HermiteExpansion) -> HermiteExpansion:
    """Multiplication by x_i: ``x H_n = H_{n+1}/2 + n H_{n-1}``."""
    _check_coordinate(i, f)
    up = _shift(f, i, +1, lambda n: 0.5)
    down = _shift(f, i, -1, lambda n: float(n))
    for beta, c in down.items():
        up[beta] = up.get(beta, 0.0) + c
    return HermiteExpansion(f.dim, up)


def apply_ou(f: HermiteExpansion) -> HermiteExpansion:
    """The Ornstein-Uhlenbeck operator; H_alpha is an eigenfunction with eigenvalue |alpha|."""
    return HermiteExpansion(f.dim, {a: float(sum(a)) * c for a, c in f.items()})


def project_degree(f: HermiteExpansion, j: int) -> HermiteExpansion:
    return HermiteExpansion(f.dim, {a: c for a, c in f.items() if sum(a) == j})


def multi_indices(dim: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices of length ``dim`` with total degree <= ``max_degree``."""
    if dim == 1:
        return [(n,) for n in range(max_degree + 1)]
    out = []
    for first in range(max_degree + 1):
        for rest in multi_indices(dim - 1, max_degree - first):
            out.append((first,) + rest)
    return sorted(out, key=lambda a: (sum(a), a))


def random_expansion(
    rng: np.random.Generator,
    dim: int,
    max_degree: int,
    *,
    density: float = 0.5,
    normalized: bool = True,
    dyadic: bool = False,
) -> HermiteExpansion:
    """Random expansion with support among degrees <= ``max_degree``.

    ``normalized`` scales each coefficient by ``||H_alpha||^{-1}`` so the
    L^2(gamma) norm stays O(1) at high degree.  ``dyadic`` draws coefficients
    from ``k / 64`` with small integers ``k`` so integer-factor products stay
    exactly representable.
    """
    coeffs = {}
    for alpha in multi_indices(dim, max_degree):
        if rng.random() >= density:
            continue
        if dyadic:
            c = float(rng.integers(-512, 513)) / 64.0
        else:
            c = float(rng.standard_normal())
            if normalized:
                c /= math.sqrt(norm_squared(alpha))
        coeffs[alpha] = c
    return HermiteExpansion(dim, coeffs)
