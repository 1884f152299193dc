"""Endpoint experiments: counterexample functionals, boundedness scans and growth verdicts.

The d >= 2 counterexamples live on the cube Q with centre (xi, 0, ..., 0)
and side 2/xi, its halves Q+ / Q- (sign of the second coordinate) and the
evaluation region

    A_Q = { x1 in (xi - 1, xi - 4/xi), x2 in [eta/2, eta], |x_k| <= eta (k >= 3) },
    eta = eta(xi, x1) = sqrt((xi - x1) / xi).

Absolute constants are dropped throughout: the functionals are meant to be
compared along a ladder of xi values, not read as operator norms.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hermite import random_expansion
from .kernels import (
    apply_to_atom_damped,
    hormander_bmo,
    hormander_h1,
    kernel_batch,
    _ball_samples,
    _exterior_nodes,
)
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    composite_gauss_legendre,
    gauss_legendre,
    s_breaks,
)
from .spaces import (
    AdmissibleRegion,
    gaussian_weights,
    log_gamma_box,
    log_gamma_measure,
    make_halves_atom,
    make_interval_halves_atom,
    tensor_nodes,
)
from .spectral import Family, RieszKind, duality_residual

class QuadratureNonConvergence(RuntimeError):
    """A functional changed by more than its tolerance under node doubling."""


class DegenerateLadderError(ValueError):
    """Fewer than three ladder points, or a ladder that is not increasing."""


class MissingVerdictError(KeyError):
    """A verdict needed to fill the table by duality has not been computed."""


# ---------------------------------------------------------------- geometry

@dataclass(frozen=True)
class CounterexampleGeometry:
    xi: float
    dim: int = 2

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("the counterexample needs d >= 2")
        if not self.xi >= 2:
            raise ValueError(f"xi must be >= 2, got {self.xi}")
        object.__setattr__(self, "xi", float(self.xi))

    @property
    def center(self) -> np.ndarray:
        c = np.zeros(self.dim)
        c[0] = self.xi
        return c

    @property
    def cube(self) -> AdmissibleRegion:
        return AdmissibleRegion("cube", tuple(self.center), 1.0 / self.xi)

    def half(self, sign: int) -> tuple[np.ndarray, np.ndarray]:
        """Bounds of Q+ (sign = +1) or Q- (sign = -1)."""
        lo, hi = self.cube.bounds()
        if sign > 0:
            lo[1] = 0.0
        else:
            hi[1] = 0.0
        return lo, hi

    @property
    def x1_range(self) -> tuple[float, float]:
        return self.xi - 1.0, self.xi - 4.0 / self.xi

    def eta(self, x1):
        return np.sqrt((self.xi - np.asarray(x1, dtype=float)) / self.xi)

    def interval(self, x1) -> tuple[np.ndarray, np.ndarray]:
        """``I(x1) = {r in (0, 1): |r - x1/xi| < eta / (2 xi)}`` as (lo, hi)."""
        x1 = np.asarray(x1, dtype=float)
        half = self.eta(x1) / (2.0 * self.xi)
        lo = np.clip(x1 / self.xi - half, 0.0, 1.0)
        hi = np.clip(x1 / self.xi + half, 0.0, 1.0)
        return lo, np.maximum(hi, lo)

    @staticmethod
    def tau(r, x2, y2):
        r = np.asarray(r, dtype=float)
        return 4.0 * r * x2 * y2 / ((1.0 - r) * (1.0 + r))

    def in_a_q(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        x1 = p[..., 0]
        lo, hi = self.x1_range
        ok = (x1 > lo) & (x1 < hi)
        eta = self.eta(np.clip(x1, None, self.xi))
        ok &= (p[..., 1] >= eta / 2) & (p[..., 1] <= eta)
        if self.dim > 2:
            ok &= np.all(np.abs(p[..., 2:]) <= eta[..., None], axis=-1)
        return ok

    def a_q_nodes(self, n: int, panels_per_unit: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
        """Lebesgue nodes on A_Q.

        ``u = xi - x1`` runs over (4/xi, 1) on panels uniform in log u (the
        integrands behave like 1/u); the cross-section in (x2, ..., xd) is
        re-fitted to eta(x1) at every x1 node.
        """
        lo_u, hi_u = 4.0 / self.xi, 1.0
        span = math.log(hi_u / lo_u)
        panels = max(1, int(math.ceil(span * panels_per_unit)))
        t, wt = composite_gauss_legendre(np.linspace(math.log(lo_u), math.log(hi_u), panels + 1), n)
        u = np.exp(t)
        wu = wt * u
        x1 = self.xi - u
        eta = self.eta(x1)
        g, wg = gauss_legendre(n)
        cols = [x1[:, None] * np.ones((1, n))]
        # x2 in [eta/2, eta]
        cols.append(0.75 * eta[:, None] + 0.25 * eta[:, None] * g[None, :])
        w = wu[:, None] * (0.25 * eta[:, None]) * wg[None, :]
        pts = np.stack(cols, axis=-1).reshape(-1, 2)
        w = w.reshape(-1)
        eta_rep = np.repeat(eta, n)
        for _ in range(2, self.dim):
            m = pts.shape[0]
            extra = (eta_rep[:, None] * g[None, :]).reshape(-1, 1)
            pts = np.concatenate([np.repeat(pts, n, axis=0), extra], axis=1)
            w = (w[:, None] * eta_rep[:, None] * wg[None, :]).reshape(-1)
            eta_rep = np.repeat(eta_rep, n)
            assert pts.shape[0] == m * n
        return pts, w

    def half_gamma_nodes(self, sign: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes on Q+ / Q- with weights ``dgamma / gamma(Q)`` (they sum to gamma(Q+-)/gamma(Q))."""
        lo, hi = self.half(sign)
        pts, w = tensor_nodes(lo, hi, n)
        frac = math.exp(log_gamma_box(lo, hi) - log_gamma_measure(self.cube))
        return pts, gaussian_weights(pts, w) * frac

    def sample(self, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Uniform samples ``x in A_Q``, ``y in Q+``, ``r in I(x1)``."""
        d = self.dim
        lo, hi = self.x1_range
        eta_max = float(self.eta(lo))
        x1 = np.empty(0)
        # x1 has density proportional to the cross-section eta^(d-1)
        while x1.size < count:
            cand = rng.uniform(lo, hi, 2 * count)
            acc = rng.uniform(0, 1, cand.size) < (self.eta(cand) / eta_max) ** (d - 1)
            x1 = np.concatenate([x1, cand[acc]])
        x1 = x1[:count]
        eta = self.eta(x1)
        x = np.empty((count, d))
        x[:, 0] = x1
        x[:, 1] = rng.uniform(eta / 2, eta)
        for k in range(2, d):
            x[:, k] = rng.uniform(-eta, eta)
        qlo, qhi = self.half(+1)
        y = rng.uniform(qlo, qhi, (count, d))
        ilo, ihi = self.interval(x1)
        r = rng.uniform(ilo, ihi)
        return x, y, r


# ---------------------------------------------------------------- counterexample functionals

def _nodes_for(spec: QuadratureSpec) -> tuple[int, int]:
    """(spatial nodes per dimension, r nodes) used by the counterexample functionals."""
    return max(4, spec.outer_nodes // 2), spec.nodes


def r1_lower_bound_integrand(geom: CounterexampleGeometry, x, y, r) -> np.ndarray:
    """``(y1 - r x1) (1 - r^2)^{-(d+3)/2} exp(-|phi|^2) (1 - exp(-tau))``, broadcasting."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    a = (1.0 - r) * (1.0 + r)
    phi2 = np.sum((r[..., None] * y - x) ** 2, axis=-1) / a
    tau = geom.tau(r, x[..., 1], y[..., 1])
    return (y[..., 0] - r * x[..., 0]) * a ** (-(geom.dim + 3) / 2) * np.exp(-phi2) * -np.expm1(-tau)


def _r1_inner(geom: CounterexampleGeometry, x: np.ndarray, ys: np.ndarray, wy: np.ndarray,
              nr: int, check_sign: bool) -> np.ndarray:
    """``int_{Q+} int_{I(x1)} (...) dr dgamma(y) / gamma(Q)`` at each row of x; empty I(x1) gives 0."""
    g, wg = gauss_legendre(nr)
    lo, hi = geom.interval(x[:, 0])
    half = 0.5 * (hi - lo)
    live = half > 0
    out = np.zeros(x.shape[0])
    if not np.any(live):
        return out
    x, lo, half = x[live], lo[live], half[live]
    r = (lo + half)[:, None] + half[:, None] * g[None, :]  # (cx, nr)
    wr = half[:, None] * wg[None, :]
    vals = r1_lower_bound_integrand(geom, x[:, None, None, :], ys[None, :, None, :], r[:, None, :])
    if check_sign and np.any(vals < 0):
        raise AssertionError("negative integrand in the R1 lower bound")
    out[live] = np.einsum("cyr,cr,y->c", vals, wr, wy)
    return out


def _r1_lower_bound_once(geom: CounterexampleGeometry, n: int, nr: int, check_sign: bool) -> float:
    xs, wx = geom.a_q_nodes(n)
    ys, wy = geom.half_gamma_nodes(+1, n)
    total = []
    chunk = max(1, 2_000_000 // (ys.shape[0] * nr))
    for start in range(0, xs.shape[0], chunk):
        inner = _r1_inner(geom, xs[start:start + chunk], ys, wy, nr, check_sign)
        total.append(wx[start:start + chunk] * inner)
    return math.fsum(np.concatenate(total))


def _self_convergent(fn: Callable[[QuadratureSpec], float], spec: QuadratureSpec, rtol: float) -> float:
    coarse = fn(spec)
    fine = fn(spec.refined())
    if not (math.isfinite(fine) and abs(fine - coarse) <= rtol * abs(fine) + 1e-300):
        raise QuadratureNonConvergence(
            f"value moved from {coarse!r} to {fine!r} under node doubling (rtol {rtol})"
        )
    return fine


def lower_bound_functional_r1(
    geom: CounterexampleGeometry, spec: QuadratureSpec = DEFAULT_SPEC, rtol: float = 1e-4
) -> float:
    """``gamma(Q)^{-1} int_{A_Q} int_{Q+} int_{I(x1)} (...) dr dgamma(y) dx``.

    This is the lower bound for ``||R_1 a||_1``, a the halves atom of Q, that
    grows like log xi in d >= 2.  Evaluated with tensor Gauss-Legendre
    rules and accepted only if node doubling moves it by at most ``rtol``.
    """
    if geom.xi < 8:
        raise ValueError("the R1 lower bound needs xi >= 8")

    def once(sp: QuadratureSpec) -> float:
        n, nr = _nodes_for(sp)
        return _r1_lower_bound_once(geom, n, nr, check_sign=True)

    return _self_convergent(once, spec, rtol)


def reflected_s_star_integrand(geom: CounterexampleGeometry, x, y, r) -> np.ndarray:
    """Integrand of ``S*_1 f(x) - S*_1 f(x~)`` against ``dlambda(y) drho(r)``.

    ``2 pi^{-(d+1)/2} (x1 - r y1) (1 - r^2)^{-(d+2)/2} exp(-|psi|^2) (1 - exp(-tau(r, x2, y2)))``
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    d = geom.dim
    a = (1.0 - r) * (1.0 + r)
    psi2 = np.sum((r[..., None] * x - y) ** 2, axis=-1) / a
    tau = geom.tau(r, x[..., 1], y[..., 1])
    pre = 2.0 * math.pi ** (-(d + 1) / 2)
    return pre * (x[..., 0] - r * y[..., 0]) * a ** (-(d + 2) / 2) * np.exp(-psi2) * -np.expm1(-tau)


_PSI_CUT = 40.0  # exp(-40) ~ 4e-18


def _r_window(x1, y1):
    """r-range where ``(r x1 - y1)^2 <= 40 (1 - r^2)``; outside it exp(-|psi|^2) < exp(-40)."""
    den = x1 * x1 + _PSI_CUT
    disc = np.sqrt(_PSI_CUT * np.maximum(x1 * x1 - y1 * y1 + _PSI_CUT, 0.0))
    lo = np.clip((x1 * y1 - disc) / den, 1e-300, 1.0)
    hi = np.clip((x1 * y1 + disc) / den, 1e-300, 1.0)
    return lo, hi


def _s_star_difference(geom: CounterexampleGeometry, x: np.ndarray, ys: np.ndarray, wy: np.ndarray,
                       nr: int, check_sign: bool) -> np.ndarray:
    """``S*_1 f(x) - S*_1 f(x~)`` for f = 1_{A_Q}, at each row of x."""
    g, wg = gauss_legendre(nr)
    out = np.empty(x.shape[0])
    for k in range(x.shape[0]):
        lo, hi = _r_window(x[k, 0], ys[:, 0])
        # integrate in s = sqrt(-log r), drho = 2 ds
        s_lo, s_hi = np.sqrt(-np.log(hi)), np.sqrt(-np.log(lo))
        half = 0.5 * (s_hi - s_lo)
        s = (0.5 * (s_lo + s_hi))[:, None] + half[:, None] * g[None, :]
        ws = 2.0 * half[:, None] * wg[None, :]
        r = np.exp(-s * s)
        vals = reflected_s_star_integrand(geom, x[k][None, None, :], ys[:, None, :], r)
        if check_sign and np.any(vals < 0):
            raise AssertionError("negative integrand in the S* reflection difference")
        out[k] = float(np.dot(wy, np.sum(vals * ws, axis=1)))
    return out


def bmo_divergence_s_star(
    geom: CounterexampleGeometry, spec: QuadratureSpec = DEFAULT_SPEC, rtol: float = 1e-4
) -> float:
    """``gamma(Q)^{-1} int_{Q+} (S*_1 f(x) - S*_1 f(x~)) dgamma(x)`` with f = 1_{A_Q}.

    ``x~`` flips the sign of the second coordinate.  The difference is
    written as one positive integral (the reflection only changes
    ``|psi|^2`` by tau), so nothing cancels numerically.  For each pair the
    r-integral is restricted to the window where ``exp(-|psi|^2)`` exceeds
    ``exp(-40)`` and done by Gauss-Legendre in ``s = sqrt(-log r)``.
    """
    if geom.xi < 8:
        raise ValueError("the S* divergence functional needs xi >= 8")

    def once(sp: QuadratureSpec) -> float:
        n, nr = _nodes_for(sp)
        ys, wy = geom.a_q_nodes(n)
        xs, wx = geom.half_gamma_nodes(+1, n)
        diff = _s_star_difference(geom, xs, ys, wy, 2 * nr, check_sign=True)
        return math.fsum(wx * diff)

    return _self_convergent(once, spec, rtol)


def s_star_reflection_difference(geom: CounterexampleGeometry, x, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``S*_1 f(x) - S*_1 f(x~)`` (f = 1_{A_Q}) at the rows of x, for cross-checks."""
    n, nr = _nodes_for(spec)
    ys, wy = geom.a_q_nodes(n)
    return _s_star_difference(geom, np.atleast_2d(np.asarray(x, float)), ys, wy, 2 * nr, check_sign=False)


# ---------------------------------------------------------------- L1 norms of R a off the support

def l1_norm_riesz_on_atom(
    target: CounterexampleGeometry | float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    kind: str = "R",
    i: int = 1,
    atom=None,
) -> float:
    """``int_E |T a| dgamma`` over a region E kept away from twice the support of a.

    For a geometry (d >= 2), a is the halves atom of Q and E = A_Q.  For a
    number xi (d = 1), a is the interval halves atom on
    ``I = [xi - 1/xi, xi + 1/xi]`` and E is the complement of 2I, cut off
    where the Gaussian factors make the integrand negligible.  ``atom``
    overrides the default atom (same support).
    """
    if isinstance(target, CounterexampleGeometry):
        d = target.dim
        a = atom if atom is not None else make_halves_atom(target.xi, d)
        n, _ = _nodes_for(spec)
        xs, wx = target.a_q_nodes(n)
    else:
        d = 1
        xi = float(target)
        a = atom if atom is not None else make_interval_halves_atom(xi)
        xs, wx = _exterior_nodes(AdmissibleRegion.maximal_ball((xi,)), spec)
    vals = apply_to_atom_damped(kind, i, a, xs, spec)
    return math.pi ** (-d / 2) * math.fsum(wx * np.abs(vals))


# ---------------------------------------------------------------- pointwise inequalities

@dataclass(frozen=True)
class PointwiseReport:
    xi: float
    dim: int
    samples: int
    seed: int
    ranges: dict
    flags: dict

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


def verify_pointwise_bounds(geom: CounterexampleGeometry, samples: int = 10_000, seed: int = 0) -> PointwiseReport:
    """Sample x in A_Q, y in Q+, r in I(x1) and record the comparison ratios.

    ``one_minus_r2``: (1 - r^2) / eta^2; ``y1_minus_rx1``: (y1 - r x1) / (xi - x1);
    ``exp_phi``: exp(-|phi|^2); ``tau_ratio``: (1 - exp(-tau)) / (y2 / eta);
    ``tau``: tau itself.  Flags record the inequalities that hold with
    explicit constants (ratio >= 1/2, tau < 1) and that every ratio is
    positive and finite.  ``tau < 1`` is only true up to a constant: with
    ``t = xi eta >= 2`` and r at the top of I(x1) one gets
    ``tau <= 4 r / ((t - 1/2)(1 + r)) < 4/3``, and the supremum 4/3 is
    approached at the corner x1 -> xi - 4/xi, x2 = eta, y2 = 1/xi.  Both
    flags are reported.
    """
    rng = np.random.default_rng(seed)
    x, y, r = geom.sample(samples, rng)
    eta = geom.eta(x[:, 0])
    a = (1.0 - r) * (1.0 + r)
    phi2 = np.sum((r[:, None] * y - x) ** 2, axis=1) / a
    tau = geom.tau(r, x[:, 1], y[:, 1])
    ratios = {
        "one_minus_r2": a / eta**2,
        "y1_minus_rx1": (y[:, 0] - r * x[:, 0]) / (geom.xi - x[:, 0]),
        "exp_phi": np.exp(-phi2),
        "tau_ratio": -np.expm1(-tau) / (y[:, 1] / eta),
        "tau": tau,
    }
    ranges = {k: (float(v.min()), float(v.max())) for k, v in ratios.items()}
    flags = {
        "y1_minus_rx1_at_least_half": bool(np.all(ratios["y1_minus_rx1"] >= 0.5)),
        "tau_below_one": bool(np.all(tau < 1.0)),
        "tau_below_four_thirds": bool(np.all(tau < 4.0 / 3.0)),
        "positive_and_finite": bool(all(np.all(np.isfinite(v)) and np.all(v > 0) for v in ratios.values())),
    }
    return PointwiseReport(geom.xi, geom.dim, samples, seed, ranges, flags)


# ---------------------------------------------------------------- S* on H1: the Hormander integral and its majorant

GRADIENT_CONSTANT = 4.0 * math.exp(-0.75)  # max over t >= 0 of (1 + 2t) exp(-t/2)


@dataclass(frozen=True)
class SStarH1Bound:
    functional: float
    majorant: float
    majorant_below_r0: float
    majorant_above_r0: float
    r0: float


def _majorant_inner(x: np.ndarray, y: np.ndarray, spec: QuadratureSpec, s0: float) -> tuple[np.ndarray, np.ndarray]:
    """``int r exp(-|phi|^2/2) (1-r^2)^{-(d+2)/2} drho`` split at s0, for each row of x."""
    d = x.shape[1]
    big = float(max(np.abs(x).max(), np.abs(y).max())) * math.sqrt(d)
    h_max = 2.0 ** math.floor(math.log2(4.0 / big)) if big > 8.0 else 0.0
    breaks = np.unique(np.concatenate((s_breaks(spec.panels_per_octave, 0.0, h_max), [s0])))
    s, w = composite_gauss_legendre(breaks, spec.nodes)
    w = 2.0 * w
    below = s >= s0  # r <= r0
    r = np.exp(-s * s)
    a = -np.expm1(-2.0 * s * s)
    lo = np.empty(x.shape[0])
    hi = np.empty(x.shape[0])
    chunk = max(1, 4_000_000 // s.size)
    for start in range(0, x.shape[0], chunk):
        xc = x[start:start + chunk]
        diff = r[None, :, None] * y[None, None, :] - xc[:, None, :]
        phi2 = np.sum(diff * diff, axis=-1) / a[None, :]
        vals = r * a ** (-(d + 2) / 2) * np.exp(-0.5 * phi2) * w
        lo[start:start + chunk] = vals[:, below].sum(axis=1)
        hi[start:start + chunk] = vals[:, ~below].sum(axis=1)
    return lo, hi


def s_star_h1_functional(
    ball: AdmissibleRegion,
    spec: QuadratureSpec = DEFAULT_SPEC,
    i: int = 1,
    directions: int = 4,
    fraction: float = 0.9,
) -> SStarH1Bound:
    """Hormander integral for S*_i on H1 and its explicit majorant, over sampled y in B.

    The functional is ``r_B sup_y int_{(2B)^c} |grad_y int (phi_i e^{-|phi|^2}
    (1-r^2)^{-(d+1)/2} + x_i e^{-|x|^2}) drho| dx``.  Every gradient
    component is at most ``r (1 + 2|phi|^2) e^{-|phi|^2} (1-r^2)^{-(d+2)/2}``,
    which gives the majorant with constant ``4 e^{-3/4}``; the majorant's
    r-integral is reported split at ``r0 = 1 - r_B^2 / 4``.
    """
    samples = _ball_samples(ball, directions, fraction)
    ext, wts = _exterior_nodes(ball, spec)
    r0 = 1.0 - ball.radius**2 / 4.0
    s0 = math.sqrt(-math.log(r0))
    best_f, best_lo, best_hi = 0.0, 0.0, 0.0
    for y in samples:
        g = kernel_batch("Sstar", ext, y[None], i, which="y", weight="x", spec=spec)
        # e^{-|x|^2} grad_y k_S* = -(2/sqrt(pi)) grad_y (bracketed r-integral)
        best_f = max(best_f, 0.5 * math.sqrt(math.pi) * math.fsum(wts * np.linalg.norm(g, axis=1)))
        lo, hi = _majorant_inner(ext, y, spec, s0)
        m_lo = GRADIENT_CONSTANT * math.fsum(wts * lo)
        m_hi = GRADIENT_CONSTANT * math.fsum(wts * hi)
        if m_lo + m_hi > best_lo + best_hi:
            best_lo, best_hi = m_lo, m_hi
    rb = ball.radius
    return SStarH1Bound(rb * best_f, rb * (best_lo + best_hi), rb * best_lo, rb * best_hi, r0)


# ---------------------------------------------------------------- growth classification

H1 = "H1->L1"
BMO = "Linf->BMO"
BOUNDED = "bounded"
LOG_GROWTH = "log-growth"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GrowthSeries:
    xis: tuple
    values: tuple
    op: str = ""
    dim: int = 0
    direction: str = ""
    slope: float = field(init=False)
    intercept: float = field(init=False)
    r2: float = field(init=False)

    def __post_init__(self):
        xis = tuple(float(x) for x in self.xis)
        values = tuple(float(v) for v in self.values)
        if len(xis) != len(values):
            raise DegenerateLadderError("xi values and functional values differ in length")
        if len(xis) < 3:
            raise DegenerateLadderError(f"a ladder needs at least 3 points, got {len(xis)}")
        if any(x <= 0 for x in xis) or any(b <= a for a, b in zip(xis, xis[1:])):
            raise DegenerateLadderError("ladder xi values must be positive and strictly increasing")
        if not all(math.isfinite(v) for v in values):
            raise DegenerateLadderError("ladder values must be finite")
        object.__setattr__(self, "xis", xis)
        object.__setattr__(self, "values", values)
        t = np.log(xis)
        v = np.asarray(values)
        tc = t - t.mean()
        slope = float(tc @ (v - v.mean()) / (tc @ tc))
        intercept = float(v.mean() - slope * t.mean())
        ss_tot = float((v - v.mean()) @ (v - v.mean()))
        res = v - (intercept + slope * t)
        ss_res = float(res @ res)
        r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, float(v @ v)) else 1.0 - ss_res / ss_tot
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "intercept", intercept)
        object.__setattr__(self, "r2", r2)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self.values)

    @property
    def increasing(self) -> bool:
        return all(b > a for a, b in zip(self.values, self.values[1:]))


@dataclass(frozen=True)
class Verdict:
    op: str
    dim: int
    direction: str
    classification: str
    slope: float = float("nan")
    r2: float = float("nan")
    threshold: float = float("nan")
    source: str = "computed"

    @property
    def letter(self) -> str:
        return {BOUNDED: "B", LOG_GROWTH: "U"}.get(self.classification, "?")


def default_threshold(series: GrowthSeries) -> float:
    """``0.1 |mean| / log 2``: a 10% rise per doubling of xi."""
    return 0.1 * abs(series.mean) / math.log(2.0)


def classify_growth(series: GrowthSeries, slope_threshold: float | None = None) -> Verdict:
    """log-growth if the slope against log xi exceeds the threshold with r^2 > 0.9, else bounded."""
    thr = default_threshold(series) if slope_threshold is None else float(slope_threshold)
    grows = series.slope > thr and series.r2 > 0.9
    return Verdict(series.op, series.dim, series.direction, LOG_GROWTH if grows else BOUNDED,
                   series.slope, series.r2, thr)


def is_flat(series: GrowthSeries, fraction: float = 0.05) -> bool:
    """``|slope| <= fraction * |mean|``."""
    return abs(series.slope) <= fraction * abs(series.mean)


# ---------------------------------------------------------------- duality

TABLE_OPS = ("R", "S", "Rstar", "Sstar")
TABLE_DIRECTIONS = (H1, BMO)


@dataclass(frozen=True)
class VerdictTable:
    dim: int
    cells: dict
    residuals: dict

    def row(self, direction: str) -> list[Verdict]:
        return [self.cells[(op, direction)] for op in TABLE_OPS]

    def pattern(self) -> dict:
        return {direction: " ".join(v.letter for v in self.row(direction)) for direction in TABLE_DIRECTIONS}

    def text(self) -> str:
        width = max(len(d) for d in TABLE_DIRECTIONS)
        lines = [f"d = {self.dim}", " " * width + " | " + " ".join(f"{op:>5}" for op in TABLE_OPS)]
        for direction in TABLE_DIRECTIONS:
            lines.append(f"{direction:<{width}} | " + " ".join(f"{v.letter:>5}" for v in self.row(direction)))
        return "\n".join(lines)


def _other(direction: str) -> str:
    return BMO if direction == H1 else H1


def duality_transfer_table(
    d: int,
    verdicts: Sequence[Verdict],
    seed: int = 0,
    pairs: int = 10,
    max_degree: int = 6,
) -> VerdictTable:
    """Complete the 2 x 4 table: T bounded on H1 -> L1 iff T* bounded on L-infinity -> BMO.

    The adjoint pairing behind the transfer is checked spectrally on random
    expansions; the worst residual per pair (R/R*, S/S*) is attached.
    """
    cells = {}
    for v in verdicts:
        if v.dim != d:
            raise ValueError(f"verdict for d = {v.dim} passed to the d = {d} table")
        cells[(v.op, v.direction)] = v
    for v in list(cells.values()):
        adj = Family(v.op).adjoint.value
        key = (adj, _other(v.direction))
        if key not in cells:
            cells[key] = Verdict(adj, d, key[1], v.classification, v.slope, v.r2, v.threshold, source=f"duality:{v.op}")
    missing = [(op, direction) for op in TABLE_OPS for direction in TABLE_DIRECTIONS if (op, direction) not in cells]
    if missing:
        raise MissingVerdictError(f"cannot fill cells {missing} by duality; compute their adjoints first")
    rng = np.random.default_rng(seed)
    residuals = {}
    for fam in (Family.R, Family.S):
        worst = 0.0
        for _ in range(pairs):
            f = random_expansion(rng, d, max_degree)
            g = random_expansion(rng, d, max_degree)
            worst = max(worst, duality_residual(RieszKind(fam, 1), f, g))
        residuals[f"{fam.value}/{fam.adjoint.value}"] = worst
    return VerdictTable(d, cells, residuals)


# ---------------------------------------------------------------- ladders

DEFAULT_LADDER = (8.0, 16.0, 32.0, 64.0)


def ladder_functional(op: str, direction: str, d: int) -> Callable[[float, QuadratureSpec], float]:
    """The functional of xi used to probe ``op`` in ``direction`` in dimension d.

    Unboundedness probes (d >= 2) are the counterexample functionals;
    boundedness probes are Hormander integrals over maximal balls at
    (xi, 0, ..., 0), or the L1 scan of R_1 on interval atoms in d = 1.
    """
    def ball(xi):
        return AdmissibleRegion.maximal_ball((xi,) + (0.0,) * (d - 1))

    if (op, direction) == ("R", H1):
        if d == 1:
            return lambda xi, sp: l1_norm_riesz_on_atom(xi, sp)
        return lambda xi, sp: lower_bound_functional_r1(CounterexampleGeometry(xi, d), sp)
    if (op, direction) == ("Sstar", BMO):
        if d == 1:
            return lambda xi, sp: hormander_bmo("Sstar", 1, ball(xi), sp)
        return lambda xi, sp: bmo_divergence_s_star(CounterexampleGeometry(xi, d), sp)
    if (op, direction) == ("Sstar", H1):
        return lambda xi, sp: hormander_h1("Sstar", 1, ball(xi), sp)
    if (op, direction) == ("R", BMO):
        return lambda xi, sp: hormander_bmo("R", 1, ball(xi), sp)
    raise ValueError(f"no ladder functional for {op} on {direction}; use duality_transfer_table")


COMPUTED_CELLS = (("R", H1), ("Sstar", BMO), ("Sstar", H1), ("R", BMO))


def run_ladder(op: str, direction: str, d: int, xis: Sequence[float] = DEFAULT_LADDER,
               spec: QuadratureSpec = DEFAULT_SPEC) -> GrowthSeries:
    if len(xis) < 3:
        raise DegenerateLadderError(f"a ladder needs at least 3 points, got {len(xis)}")
    fn = ladder_functional(op, direction, d)
    return GrowthSeries(tuple(xis), tuple(fn(float(xi), spec) for xi in xis), op, d, direction)


@dataclass(frozen=True)
class TableRun:
    table: VerdictTable
    series: tuple
    errors: dict
    timings: dict

    @property
    def conclusive(self) -> bool:
        return not self.errors


def run_table(d: int, xis: Sequence[float] = DEFAULT_LADDER, spec: QuadratureSpec = DEFAULT_SPEC,
              slope_threshold: float | None = None, seed: int = 0) -> TableRun:
    """Ladders for R_1 and S*_1 in both directions, classified, then completed by duality.

    A ladder whose quadrature fails marks its cell (and its dual) inconclusive.
    """
    if d not in (1, 2):
        raise ValueError("the verdict table is implemented for d = 1, 2")
    if len(xis) < 3:
        raise DegenerateLadderError(f"a ladder needs at least 3 points, got {len(xis)}")
    verdicts, series, errors, timings = [], [], {}, {}
    for op, direction in COMPUTED_CELLS:
        t0 = time.perf_counter()
        try:
            s = run_ladder(op, direction, d, xis, spec)
        except (QuadratureNonConvergence, FloatingPointError) as exc:
            errors[(op, direction)] = str(exc)
            verdicts.append(Verdict(op, d, direction, INCONCLUSIVE))
        else:
            series.append(s)
            verdicts.append(classify_growth(s, slope_threshold))
        timings[(op, direction)] = time.perf_counter() - t0
    return TableRun(duality_transfer_table(d, verdicts, seed), tuple(series), errors, timings)
