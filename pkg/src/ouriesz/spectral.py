"""Spectral multipliers of the OU operator and the first-order Riesz transforms.

All operators act exactly on :class:`~ouriesz.hermite.HermiteExpansion`
values.  The families are::

    R_i  = d_i M(L)        S_i  = M(L) d_i
    R*_i = M(L) d*_i       S*_i = d*_i M(L)
    M_i  = x_i M(L)        M*_i = M(L) x_i

with ``M(0) = 0`` and ``M(j) = j^{-1/2}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .hermite import (
    HermiteExpansion,
    apply_multiplication,
    apply_partial,
    apply_partial_star,
    inner_product_gamma,
)

SpectralMultiplier = Callable[[int], float]


def riesz_multiplier(j: int) -> float:
    return 0.0 if j == 0 else 1.0 / math.sqrt(j)


class Family(str, Enum):
    R = "R"
    S = "S"
    RSTAR = "Rstar"
    SSTAR = "Sstar"
    M = "M"
    MSTAR = "Mstar"

    @property
    def adjoint(self) -> Family:
        return _ADJOINT[self]


_ADJOINT = {
    Family.R: Family.RSTAR,
    Family.RSTAR: Family.R,
    Family.S: Family.SSTAR,
    Family.SSTAR: Family.S,
    Family.M: Family.MSTAR,
    Family.MSTAR: Family.M,
}


@dataclass(frozen=True)
class RieszKind:
    family: Family
    coordinate: int = 1

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.coordinate < 1:
            raise ValueError(f"coordinate must be >= 1, got {self.coordinate}")

    @property
    def adjoint(self) -> RieszKind:
        return RieszKind(self.family.adjoint, self.coordinate)

    def __str__(self) -> str:
        return f"{self.family.value}{self.coordinate}"


def apply_multiplier(m: SpectralMultiplier, f: HermiteExpansion) -> HermiteExpansion:
    """m(L) f: scale each degree-j term by m(j)."""
    cache: dict[int, float] = {}
    out = {}
    for alpha, c in f.items():
        j = sum(alpha)
        if j not in cache:
            value = float(m(j))
            if not math.isfinite(value):
                raise ValueError(f"multiplier is not finite at j={j}")
            cache[j] = value
        out[alpha] = cache[j] * c
    return HermiteExpansion(f.dim, out)


def apply_m_of_l(f: HermiteExpansion, multiplier: SpectralMultiplier = riesz_multiplier) -> HermiteExpansion:
    return apply_multiplier(multiplier, f)


def apply_riesz(
    kind: RieszKind, f: HermiteExpansion, multiplier: SpectralMultiplier = riesz_multiplier
) -> HermiteExpansion:
    i = kind.coordinate
    if i > f.dim:
        raise ValueError(f"coordinate {i} out of range 1..{f.dim}")
    m = lambda g: apply_multiplier(multiplier, g)  # noqa: E731
    fam = kind.family
    if fam is Family.R:
        return apply_partial(i, m(f))
    if fam is Family.S:
        return m(apply_partial(i, f))
    if fam is Family.RSTAR:
        return m(apply_partial_star(i, f))
    if fam is Family.SSTAR:
        return apply_partial_star(i, m(f))
    if fam is Family.M:
        return apply_multiplication(i, m(f))
    return m(apply_multiplication(i, f))


def duality_residual(
    kind: RieszKind,
    f: HermiteExpansion,
    g: HermiteExpansion,
    multiplier: SpectralMultiplier = riesz_multiplier,
) -> float:
    """``|<T f, g> - <f, T* g>|`` for the adjoint pair (T, T*) named by ``kind``."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} != {g.dim}")
    lhs = inner_product_gamma(apply_riesz(kind, f, multiplier), g)
    rhs = inner_product_gamma(f, apply_riesz(kind.adjoint, g, multiplier))
    return abs(lhs - rhs)
