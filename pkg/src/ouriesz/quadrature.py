"""Quadrature against the measure ``drho(r) = dr / (r sqrt(-log r))`` on (0, 1).

The substitution ``s = sqrt(-log r)`` turns ``drho`` into ``2 ds`` on
``(0, inf)``.  ``r -> 1`` maps to ``s -> 0`` where the kernels concentrate,
so panels are graded geometrically toward ``s = 0``; ``r -> 0`` is the
Gaussian tail ``r = exp(-s^2)``, cut where ``exp(-s^2) < 1e-300``.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

S_MAX = math.sqrt(300.0 * math.log(10.0))
_S_FLOOR_OCTAVES = 40
_TAIL_BREAKS = (1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.5, 8.0, 11.0, 15.0, 20.0, S_MAX)


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and node budgets shared by the kernel and outer quadratures.

    ``nodes`` and ``panels_per_octave`` fix the composite rule used for
    batched kernel evaluation; ``atol``/``rtol``/``max_subdivisions`` drive
    the adaptive scalar integrator.  ``outer_nodes`` scales the tensor grids
    of the spatial integrals.
    """

    atol: float = 1e-13
    rtol: float = 1e-11
    max_subdivisions: int = 400
    substitution: str = "sqrt-log"
    nodes: int = 12
    panels_per_octave: int = 2
    outer_nodes: int = 16

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.substitution != "sqrt-log":
            raise ValueError(f"unknown substitution {self.substitution!r}")
        if self.nodes < 2 or self.panels_per_octave < 1 or self.outer_nodes < 2:
            raise ValueError("node counts too small")

    def refined(self, factor: int = 2) -> QuadratureSpec:
        """Same spec with every node budget multiplied by ``factor``."""
        return QuadratureSpec(
            atol=self.atol,
            rtol=self.rtol,
            max_subdivisions=self.max_subdivisions * factor,
            nodes=self.nodes * factor,
            panels_per_octave=self.panels_per_octave,
            outer_nodes=self.outer_nodes * factor,
        )


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class KernelValue:
    value: float
    error: float
    converged: bool = True

    def __float__(self) -> float:
        return self.value


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(breaks, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre with ``n`` nodes on each interval between consecutive breaks."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(n)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def s_breaks(panels_per_octave: int = 2, s_lo: float = 0.0, h_max: float = 0.0) -> np.ndarray:
    """Panel breakpoints on ``[0, S_MAX]``; panels entirely below ``s_lo`` are dropped.

    ``h_max > 0`` additionally caps the panel width on ``s <= 3``.
    """
    k = np.arange(_S_FLOOR_OCTAVES * panels_per_octave, 0, -1)
    geo = 2.0 ** (-k / panels_per_octave)
    breaks = np.concatenate(([0.0], geo, _TAIL_BREAKS))
    if h_max > 0:
        extra = np.arange(h_max, 3.0, h_max)
        breaks = np.unique(np.concatenate((breaks, extra)))
    if s_lo > 0:
        keep = np.searchsorted(breaks, s_lo, side="right") - 1
        breaks = breaks[max(keep, 0):]
    return breaks


@lru_cache(maxsize=64)
def _rho_nodes_cached(nodes: int, panels_per_octave: int, s_lo: float, h_max: float):
    breaks = s_breaks(panels_per_octave, s_lo, h_max)
    s, w = composite_gauss_legendre(breaks, nodes)
    w = 2.0 * w
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w, float(breaks[0])


def rho_nodes(
    spec: QuadratureSpec = DEFAULT_SPEC, s_lo: float = 0.0, scale: float = 0.0
) -> tuple[np.ndarray, np.ndarray, float]:
    """Fixed composite rule in ``s``; weights already include the factor 2 of ``drho = 2 ds``.

    ``s_lo`` prunes panels where every integrand in a batch is known to be
    negligible (kernels decay like ``exp(-|x-y|^2 / (2 s^2))`` there).
    Returns ``(s, w, s_start)`` where ``s_start <= s_lo`` is the left end of
    the first retained panel.

    ``scale`` is the largest coordinate size in the batch.  For large points
    the r-integrand peaks with s-width about ``1 / (sqrt(2) scale)``, so the
    panel width is capped at ``4 / scale`` once ``scale > 8``.
    """
    if s_lo > 0:
        # quantise so the cache stays small
        s_lo = 2.0 ** math.floor(math.log2(s_lo))
    h_max = 0.0
    if scale > 8.0:
        h_max = 2.0 ** math.floor(math.log2(4.0 / scale))
    return _rho_nodes_cached(spec.nodes, spec.panels_per_octave, float(s_lo), h_max)


def r_of_s(s):
    return np.exp(-np.square(s))


def one_minus_r2(s):
    """``1 - r^2 = -expm1(-2 s^2)`` without cancellation near ``s = 0``."""
    return -np.expm1(-2.0 * np.square(s))


def rho_integrate(g: Callable, spec: QuadratureSpec = DEFAULT_SPEC, *, in_s: bool = False) -> KernelValue:
    """Adaptive ``int_0^1 g(r) drho(r)``.

    ``g`` must accept a numpy array.  With ``in_s=True`` it is called with
    the substituted variable ``s`` instead of ``r`` (useful when the
    integrand needs ``1 - r^2`` to full relative precision).  Each panel is
    integrated with ``n`` and ``2n`` Gauss-Legendre nodes; their difference
    is the panel error estimate, and the worst panel is bisected until the
    total estimate meets the tolerance.
    """
    n = spec.nodes
    xn, wn = gauss_legendre(n)
    x2, w2 = gauss_legendre(2 * n)

    def panel(a: float, b: float) -> tuple[float, float]:
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        s = np.concatenate((mid + half * xn, mid + half * x2))
        vals = np.asarray(g(s if in_s else r_of_s(s)), dtype=float)
        if vals.shape != s.shape:
            vals = np.broadcast_to(vals, s.shape)
        coarse = 2.0 * half * float(np.dot(wn, vals[:n]))
        fine = 2.0 * half * float(np.dot(w2, vals[n:]))
        return fine, abs(fine - coarse)

    breaks = s_breaks(spec.panels_per_octave)
    heap = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        v, e = panel(float(a), float(b))
        heap.append((-e, float(a), float(b), v))
    heapq.heapify(heap)

    def totals():
        vals = sorted(item[3] for item in heap)
        errs = sorted(-item[0] for item in heap)
        return math.fsum(vals), math.fsum(errs)

    value, error = totals()
    splits = 0
    while error > max(spec.atol, spec.rtol * abs(value)):
        if splits >= spec.max_subdivisions:
            warnings.warn(
                f"rho_integrate did not converge: value={value!r}, error estimate={error!r}",
                QuadratureWarning,
                stacklevel=2,
            )
            return KernelValue(value, error, converged=False)
        _, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        for lo, hi in ((a, m), (m, b)):
            v, e = panel(lo, hi)
            heapq.heappush(heap, (-e, lo, hi, v))
        splits += 1
        value, error = totals()
    if not math.isfinite(value):
        raise FloatingPointError("rho_integrate produced a non-finite value")
    return KernelValue(value, error)
