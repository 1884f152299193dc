"""Admissible regions, Gaussian atoms, and computable one-sided H^1 / BMO bounds.

A ball is admissible when ``r <= min(1, 1/|c|)``; a cube is admissible
when its sidelength is at most ``2 min(1, 1/|c|)``.  Gaussian measures of
far-out regions underflow, so measures and atom amplitudes are carried in
log form wherever they may leave double range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfcx, logsumexp

from .quadrature import DEFAULT_SPEC, QuadratureSpec, composite_gauss_legendre, gauss_legendre


def admissible_radius(center) -> float:
    """Largest admissible radius (or cube half-side) at ``center``."""
    norm = float(np.linalg.norm(np.asarray(center, dtype=float)))
    return 1.0 if norm <= 1.0 else 1.0 / norm


@dataclass(frozen=True)
class AdmissibleRegion:
    """Euclidean ball (``radius``) or axis-parallel cube (half-side ``radius``)."""

    shape: str
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.shape not in ("ball", "cube"):
            raise ValueError(f"shape must be 'ball' or 'cube', got {self.shape!r}")
        if not self.center:
            raise ValueError("center must have at least one coordinate")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.radius > admissible_radius(self.center):
            raise ValueError(
                f"{self.shape} at {self.center} with radius {self.radius} is not admissible "
                f"(max {admissible_radius(self.center)})"
            )

    @classmethod
    def maximal_ball(cls, center) -> AdmissibleRegion:
        return cls("ball", tuple(center), admissible_radius(center))

    @classmethod
    def maximal_cube(cls, center) -> AdmissibleRegion:
        return cls("cube", tuple(center), admissible_radius(center))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def maximal(self) -> bool:
        return self.radius == admissible_radius(self.center)

    @property
    def sidelength(self) -> float:
        if self.shape != "cube":
            raise AttributeError("only cubes have a sidelength")
        return 2.0 * self.radius

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def contains(self, points, scale: float = 1.0) -> np.ndarray:
        """Membership of ``points`` (``(..., d)``) in the region dilated by ``scale``."""
        p = np.asarray(points, dtype=float) - np.asarray(self.center)
        if self.shape == "ball":
            return np.linalg.norm(p, axis=-1) <= scale * self.radius
        return np.max(np.abs(p), axis=-1) <= scale * self.radius


def _log_interval_measure(a: float, b: float) -> float:
    """log of ``pi^{-1/2} int_a^b exp(-t^2) dt``, accurate far into the tails."""
    if b < a:
        raise ValueError("empty interval")
    if a == b:
        return -math.inf
    if a < 0 < b or a == 0 or b == 0:
        return math.log(0.5 * (math.erf(b) - math.erf(a)))
    if b < 0:
        a, b = -b, -a
    tail = 0.0 if math.isinf(b) else float(erfcx(b)) * math.exp(a * a - b * b)
    return -a * a + math.log(float(erfcx(a)) - tail) - math.log(2.0)


def log_gamma_box(lo, hi) -> float:
    return sum(_log_interval_measure(float(a), float(b)) for a, b in zip(lo, hi))


def gamma_box(lo, hi) -> float:
    """Gaussian measure of the box ``prod [lo_i, hi_i]`` (infinite ends allowed)."""
    return math.exp(log_gamma_box(lo, hi))


def _log_gamma_ball(center: np.ndarray, radius: float, n: int) -> float:
    if center.size == 1:
        c = float(center[0])
        return _log_interval_measure(c - radius, c + radius)
    # slice along the first axis: x1 = c1 + R sin(theta) keeps the integrand smooth
    t, w = gauss_legendre(n)
    theta = 0.5 * math.pi * t
    x1 = center[0] + radius * np.sin(theta)
    logs = []
    for xk, th in zip(x1, theta):
        sub = radius * math.cos(th)
        inner = _log_gamma_ball(center[1:], sub, n) if sub > 0 else -math.inf
        logs.append(inner - xk * xk - 0.5 * math.log(math.pi))
    logs = np.array(logs)
    jac = np.log(0.5 * math.pi * radius * np.cos(theta) * w)
    return float(logsumexp(logs + jac))


def log_gamma_measure(region: AdmissibleRegion, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    if region.shape == "cube":
        lo, hi = region.bounds()
        return log_gamma_box(lo, hi)
    return _log_gamma_ball(np.asarray(region.center), region.radius, 2 * spec.outer_nodes)


def gamma_measure(region: AdmissibleRegion, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Gaussian measure: exact via erf for cubes, nested quadrature for balls."""
    return math.exp(log_gamma_measure(region, spec))


# ---------------------------------------------------------------- quadrature grids

def region_nodes(region: AdmissibleRegion, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lebesgue quadrature nodes ``(N, d)`` and weights for the region.

    Cubes use tensor Gauss-Legendre.  Balls use an interval in d=1, polar
    coordinates in d=2 (midpoint angles, so no node sits on the axes), and a
    masked tensor grid in higher dimension.
    """
    d = region.dim
    c = np.asarray(region.center)
    R = region.radius
    if region.shape == "cube" or d == 1:
        lo, hi = region.bounds()
        return tensor_nodes(lo, hi, n)
    if d == 2:
        rho, wr = composite_gauss_legendre([0.0, R], n)
        m = 4 * n
        theta = (np.arange(m) + 0.5) * (2 * math.pi / m)
        pts = c + np.stack(
            [np.outer(rho, np.cos(theta)).ravel(), np.outer(rho, np.sin(theta)).ravel()], axis=-1
        )
        wts = np.outer(wr * rho, np.full(m, 2 * math.pi / m)).ravel()
        return pts, wts
    lo, hi = region.bounds()
    pts, wts = tensor_nodes(lo, hi, 2 * n)
    inside = region.contains(pts)
    return pts[inside], wts[inside]


def tensor_nodes(lo, hi, n: int, panels: int = 1) -> tuple[np.ndarray, np.ndarray]:
    axes = [composite_gauss_legendre(np.linspace(a, b, panels + 1), n) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    wgrids = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, wts


def gaussian_weights(points: np.ndarray, lebesgue_weights: np.ndarray) -> np.ndarray:
    """Quadrature weights for the Gaussian measure, normalised to sum to one.

    Normalising by the same rule's total keeps the ratio ``dgamma / gamma(region)``
    finite even when ``gamma(region)`` underflows.
    """
    e = -np.sum(points * points, axis=-1)
    e = e - e.max()
    w = lebesgue_weights * np.exp(e)
    return w / w.sum()


# ---------------------------------------------------------------- atoms

@dataclass(frozen=True)
class GaussianAtom:
    """A Gaussian atom, stored as ``exp(log_amplitude) * profile(x)``.

    ``profile`` is bounded by one in absolute value.  ``pieces`` are boxes
    (lo, hi) covering the support on each of which the profile is smooth;
    quadrature is done piecewise so indicator atoms are integrated exactly.
    The exceptional atom is the constant 1 (``support`` is None).
    """

    support: AdmissibleRegion | None
    profile: Callable[[np.ndarray], np.ndarray]
    log_amplitude: float = 0.0
    pieces: tuple = field(default=())

    @classmethod
    def exceptional(cls, dim: int) -> GaussianAtom:
        return cls(None, lambda p: np.ones(np.shape(p)[:-1]), 0.0, ((np.full(dim, -np.inf), np.full(dim, np.inf)),))

    @property
    def is_exceptional(self) -> bool:
        return self.support is None

    @property
    def sup_norm(self) -> float:
        return math.exp(self.log_amplitude)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        vals = self.profile(pts) * math.exp(self.log_amplitude)
        if self.support is not None:
            vals = np.where(self.support.contains(pts), vals, 0.0)
        return vals

    def normalized_mean(self, n: int = 16) -> float:
        """``gamma(S)^{-1} int a dgamma / ||a||_inf`` over the support S, by piecewise quadrature."""
        if self.is_exceptional:
            return 1.0
        pts, wts = [], []
        for lo, hi in self.pieces:
            p, w = tensor_nodes(lo, hi, n)
            pts.append(p)
            wts.append(w)
        pts = np.concatenate(pts)
        gw = gaussian_weights(pts, np.concatenate(wts))
        return float(np.dot(gw, self.profile(pts)))

    def validate(self, spec: QuadratureSpec = DEFAULT_SPEC) -> None:
        if self.is_exceptional:
            return
        log_g = log_gamma_measure(self.support, spec)
        if self.log_amplitude > -log_g * (1 + 1e-12) + 1e-12:
            raise ValueError("atom violates the sup bound ||a|| <= gamma(B)^{-1}")
        if abs(self.normalized_mean(spec.outer_nodes)) > 1e-10:
            raise ValueError("atom does not have Gaussian mean zero")


def make_halves_atom(xi: float, d: int) -> GaussianAtom:
    """``gamma(Q)^{-1} (1_{Q+} - 1_{Q-})`` on the cube Q with centre (xi, 0, ..., 0) and side 2/xi.

    Q+ and Q- are the halves where the second coordinate is positive and negative.
    """
    if d < 2:
        raise ValueError("the halves atom needs a second coordinate (d >= 2)")
    if xi < 2:
        raise ValueError(f"xi must be >= 2 for the cube to be admissible, got {xi}")
    center = (float(xi),) + (0.0,) * (d - 1)
    cube = AdmissibleRegion("cube", center, 1.0 / xi)
    lo, hi = cube.bounds()
    lo_plus, hi_minus = lo.copy(), hi.copy()
    lo_plus[1] = 0.0
    hi_minus[1] = 0.0
    return GaussianAtom(
        support=cube,
        profile=lambda p: np.sign(np.asarray(p)[..., 1]),
        log_amplitude=-log_gamma_measure(cube),
        pieces=((lo_plus, hi), (lo, hi_minus)),
    )


def make_interval_halves_atom(xi: float) -> GaussianAtom:
    """One-dimensional analogue: ``gamma(I)^{-1} (1_{x > xi} - 1_{x < xi})`` on I = [xi - 1/xi, xi + 1/xi]."""
    if xi < 1:
        raise ValueError(f"xi must be >= 1, got {xi}")
    cube = AdmissibleRegion("cube", (float(xi),), 1.0 / xi)
    lo, hi = cube.bounds()
    mid = np.array([float(xi)])
    # the two halves carry unequal Gaussian mass; rescale the lower half to restore mean zero
    log_plus = log_gamma_box(mid, hi)
    log_minus = log_gamma_box(lo, mid)
    ratio = math.exp(log_plus - log_minus)  # < 1 for xi > 0
    return GaussianAtom(
        support=cube,
        profile=lambda p: np.where(np.asarray(p)[..., 0] > xi, 1.0, -ratio),
        log_amplitude=-log_gamma_measure(cube),
        pieces=((mid, hi), (lo, mid)),
    )


@dataclass(frozen=True)
class AtomCombination:
    terms: tuple[tuple[float, GaussianAtom], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), a) for c, a in self.terms))


def h1_norm_upper(f: AtomCombination, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``sum |lambda_j|``: an upper bound for the H^1(gamma) norm of the combination."""
    for _, atom in f.terms:
        atom.validate(spec)
    return math.fsum(abs(c) for c, _ in f.terms)


# ---------------------------------------------------------------- BMO

def mean_oscillation(f: Callable, region: AdmissibleRegion, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``gamma(B)^{-1} int_B |f - f_B| dgamma``."""
    pts, wts = region_nodes(region, spec.outer_nodes)
    gw = gaussian_weights(pts, wts)
    vals = np.asarray(f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("function is not finite on the region")
    mean = float(np.dot(gw, vals))
    return float(np.dot(gw, np.abs(vals - mean)))


def bmo_seminorm_lower(
    f: Callable, regions: Sequence[AdmissibleRegion], spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Max of the mean oscillation over a finite family: a lower bound for ``||f||_*``."""
    return max((mean_oscillation(f, region, spec) for region in regions), default=0.0)


def sample_admissible_balls(
    strategy: str,
    count: int,
    seed: int = 0,
    dim: int = 2,
    xis: Sequence[float] | None = None,
) -> list[AdmissibleRegion]:
    """Finite families of admissible balls.

    ``maximal-along-axis`` puts maximal balls at ``(xi, 0, ..., 0)`` for the
    given ``xis`` (default ``0, 1, 2, 4, ...``); ``random`` draws centres
    from a scaled normal and radii uniformly below the admissible bound.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if strategy == "maximal-along-axis":
        if xis is None:
            xis = [0.0] + [2.0 ** k for k in range(count - 1)]
        xis = list(xis)[:count]
        return [AdmissibleRegion.maximal_ball((float(x),) + (0.0,) * (dim - 1)) for x in xis]
    if strategy == "random":
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            c = 3.0 * rng.standard_normal(dim)
            rad = admissible_radius(c) * float(rng.uniform(0.05, 1.0))
            out.append(AdmissibleRegion("ball", tuple(c), rad))
        return out
    raise ValueError(f"unknown strategy {strategy!r}")
