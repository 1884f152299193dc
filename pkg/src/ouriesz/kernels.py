"""Integral kernels of M(L), R_i and S*_i with respect to the Gaussian measure.

With ``phi = (r y - x)/sqrt(1-r^2)``, ``psi = (r x - y)/sqrt(1-r^2)`` and
``drho(r) = dr / (r sqrt(-log r))``::

    k_M(x,y)   = pi^{-1/2} int [ (1-r^2)^{-d/2} e^{|y|^2 - |psi|^2} - 1 ] drho
    k_R(x,y)   = -2 pi^{-1/2} e^{|x|^2} int r psi_i e^{-|phi|^2} (1-r^2)^{-(d+1)/2} drho
    k_S*(x,y)  = -2 pi^{-1/2} e^{|x|^2} int [ phi_i e^{-|phi|^2} (1-r^2)^{-(d+1)/2} + x_i e^{-|x|^2} ] drho

Exponents are combined as ``E = |x|^2 - |phi|^2 = |y|^2 - |psi|^2`` before
exponentiating, and the bracketed differences go through ``expm1``.

The r-integrand reductions run in the compiled ``_kernels`` extension when
it is importable, otherwise in ``_kernels_py``.  Set ``OURIESZ_BACKEND=python``
to force the fallback.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels_py
from ._kernels_py import (
    DERIV_NONE,
    DERIV_X,
    DERIV_Y,
    KIND_M,
    KIND_R,
    KIND_SSTAR,
    WEIGHT_NONE,
    WEIGHT_X,
    WEIGHT_Y,
)
from .quadrature import (
    DEFAULT_SPEC,
    KernelValue,
    QuadratureSpec,
    composite_gauss_legendre,
    rho_integrate,
    rho_nodes,
)
from .spaces import AdmissibleRegion, tensor_nodes

if os.environ.get("OURIESZ_BACKEND", "").lower() == "python":
    _backend = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _backend = _kernels_py
        BACKEND = "python"


def get_backend(name: str | None = None):
    """The reduction module for ``name`` ("compiled", "python" or None for the active one)."""
    if name is None:
        return _backend
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


class SingularInputError(ValueError):
    """Kernel requested on (or numerically on) the diagonal x = y."""


NEAR_DIAGONAL = 1e-6

_KINDS = {"M": KIND_M, "R": KIND_R, "Sstar": KIND_SSTAR, "S*": KIND_SSTAR}
_WHICH = {None: DERIV_NONE, "x": DERIV_X, "y": DERIV_Y}
_WEIGHTS = {None: WEIGHT_NONE, "x": WEIGHT_X, "y": WEIGHT_Y}


def _kind_code(kind) -> int:
    key = getattr(kind, "value", kind)
    if key not in _KINDS:
        raise ValueError(f"no integral kernel for {kind!r}; expected one of M, R, Sstar")
    return _KINDS[key]


@dataclass(frozen=True)
class PhiPsi:
    r: float
    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    psi: np.ndarray


def phi_psi(r: float, x, y) -> PhiPsi:
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sq = math.sqrt((1.0 - r) * (1.0 + r))
    return PhiPsi(r, x, y, (r * y - x) / sq, (r * x - y) / sq)


def _points(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} != {y.shape[-1]}")
    return x, y


def _guard(code: int, x: np.ndarray, y: np.ndarray) -> None:
    dist = np.linalg.norm(x - y, axis=-1)
    if np.any(dist == 0.0):
        raise SingularInputError("kernel evaluated on the diagonal x = y")
    if code != KIND_M and np.any(dist < NEAR_DIAGONAL * (1.0 + np.linalg.norm(x, axis=-1))):
        raise SingularInputError(
            f"|x - y| below the near-diagonal guard {NEAR_DIAGONAL} (1 + |x|); principal values are not supported"
        )


def _check_coordinate(i: int, d: int) -> None:
    if not 1 <= i <= d:
        raise ValueError(f"coordinate {i} out of range 1..{d}")


# ---------------------------------------------------------------- batched evaluation

def _small_s_limit(code: int, deriv: int, weight: int, x: np.ndarray, y: np.ndarray, i: int) -> np.ndarray:
    """Limit of the integrand as s -> 0 (r -> 1) off the diagonal."""
    n, d = x.shape
    w = np.ones(n)
    if weight == WEIGHT_X:
        w = np.exp(-np.sum(x * x, axis=1))
    elif weight == WEIGHT_Y:
        w = np.exp(-np.sum(y * y, axis=1))
    inv = 1.0 / math.sqrt(math.pi)
    if code == KIND_M and deriv == DERIV_NONE:
        return -inv * w
    if code == KIND_SSTAR and deriv == DERIV_NONE:
        return -2.0 * inv * x[:, i] * w
    if code == KIND_SSTAR and deriv == DERIV_X:
        out = np.zeros((n, d))
        out[:, i] = -2.0 * inv * w
        return out
    return np.zeros(n) if deriv == DERIV_NONE else np.zeros((n, d))


def kernel_batch(
    kind,
    x,
    y,
    i: int = 1,
    *,
    which: str | None = None,
    weight: str | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
    backend: str | None = None,
) -> np.ndarray:
    """Kernel values (or gradients in ``which``) at paired points, fixed composite rule.

    ``x`` and ``y`` broadcast to ``(N, d)``.  ``weight="x"`` multiplies by
    ``exp(-|x|^2)`` (``"y"``: ``exp(-|y|^2)``) inside the integral, which
    keeps the result finite far from the origin.  s-panels on which every
    pair's integrand is below ``exp(-700)`` are skipped and replaced by the
    integrand's limit value.
    """
    code = _kind_code(kind)
    x, y = _points(x, y)
    x, y = np.broadcast_arrays(np.atleast_2d(x), np.atleast_2d(y))
    x = np.ascontiguousarray(x)
    y = np.ascontiguousarray(y)
    d = x.shape[1]
    if code != KIND_M:
        _check_coordinate(i, d)
    _guard(code, x, y)
    deriv = _WHICH[which]
    wcode = _WEIGHTS[weight]
    dist = np.linalg.norm(x - y, axis=1)
    delta = float(dist.min()) if dist.size else 1.0
    big = float(max(np.abs(x).max(initial=0.0), np.abs(y).max(initial=0.0))) * math.sqrt(d) + 1e-300
    s_lo = min(delta / 80.0, math.sqrt(delta / (2.0 * big)))
    s, w, s_start = rho_nodes(spec, s_lo, big)
    out = get_backend(backend).rho_reduce(code, deriv, wcode, x, y, i - 1, s, w)
    if s_start > 0:
        out = out + 2.0 * s_start * _small_s_limit(code, deriv, wcode, x, y, i - 1)
    return out


# ---------------------------------------------------------------- adaptive scalar evaluation

def _adaptive(code: int, deriv: int, x, y, i: int, spec: QuadratureSpec, component: int | None = None) -> KernelValue:
    x, y = _points(x, y)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("adaptive kernels take single points; use kernel_batch for arrays")
    if code != KIND_M:
        _check_coordinate(i, x.size)
    _guard(code, x[None], y[None])

    def g(s):
        vals = _kernels_py.integrand(code, deriv, WEIGHT_NONE, x[None], y[None], i - 1, s)[0]
        return vals if component is None else vals[:, component]

    return rho_integrate(g, spec, in_s=True)


def kernel_m(x, y, spec: QuadratureSpec = DEFAULT_SPEC) -> KernelValue:
    """``k_{M(L)}(x, y)``, the kernel of M(L) with respect to the Gaussian measure."""
    return _adaptive(KIND_M, DERIV_NONE, x, y, 1, spec)


def schwartz_kernel_m(x, y, spec: QuadratureSpec = DEFAULT_SPEC) -> KernelValue:
    """``K_{M(L)}(x, y) = pi^{-d/2} e^{-|y|^2} k_{M(L)}(x, y)`` (Lebesgue kernel)."""
    x, y = _points(x, y)
    k = kernel_m(x, y, spec)
    f = math.pi ** (-x.size / 2) * math.exp(-float(y @ y))
    return KernelValue(k.value * f, k.error * f, k.converged)


def kernel_r(i: int, x, y, spec: QuadratureSpec = DEFAULT_SPEC) -> KernelValue:
    return _adaptive(KIND_R, DERIV_NONE, x, y, i, spec)


def kernel_s_star(i: int, x, y, spec: QuadratureSpec = DEFAULT_SPEC) -> KernelValue:
    return _adaptive(KIND_SSTAR, DERIV_NONE, x, y, i, spec)


def kernel_s_star_forms(i: int, x, y, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[KernelValue, KernelValue]:
    """The two written forms of ``k_S*``: the ``e^{|y|^2}``/psi form and the ``e^{|x|^2}``/phi form.

    Both are integrated literally (no exponent fusion), so they are only
    usable where ``e^{|x|^2}`` and ``e^{|y|^2}`` are representable.
    """
    x, y = _points(x, y)
    _check_coordinate(i, x.size)
    _guard(KIND_SSTAR, x[None], y[None])
    d = x.size
    k = i - 1
    pre = -2.0 / math.sqrt(math.pi)

    def parts(s):
        r = np.exp(-s * s)[:, None]
        a = -np.expm1(-2.0 * s * s)[:, None]
        phi = (r * y - x) / np.sqrt(a)
        psi = (r * x - y) / np.sqrt(a)
        return r, a, phi, psi

    def form_y(s):
        r, a, phi, psi = parts(s)
        return phi[:, k] * np.exp(-np.sum(psi * psi, 1)) / a[:, 0] ** ((d + 1) / 2) + x[k] * math.exp(-y @ y)

    def form_x(s):
        r, a, phi, psi = parts(s)
        return phi[:, k] * np.exp(-np.sum(phi * phi, 1)) / a[:, 0] ** ((d + 1) / 2) + x[k] * math.exp(-x @ x)

    out = []
    for form, scale in ((form_y, math.exp(y @ y)), (form_x, math.exp(x @ x))):
        v = rho_integrate(form, spec, in_s=True)
        out.append(KernelValue(pre * scale * v.value, abs(pre) * scale * v.error, v.converged))
    return out[0], out[1]


def grad_kernel(kind, i: int, which: str, x, y, spec: QuadratureSpec = DEFAULT_SPEC) -> list[KernelValue]:
    """Gradient of the kernel in ``x`` or ``y``, differentiated under the r-integral."""
    if which not in ("x", "y"):
        raise ValueError(f"which must be 'x' or 'y', got {which!r}")
    code = _kind_code(kind)
    x, y = _points(x, y)
    return [_adaptive(code, _WHICH[which], x, y, i, spec, component=j) for j in range(x.size)]


# ---------------------------------------------------------------- operators via kernels

def apply_via_kernel(
    kind,
    i: int,
    f: Callable[[np.ndarray], np.ndarray],
    x,
    pieces: Sequence[tuple],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """``T f(x) = int k_T(x, y) f(y) dgamma(y)`` for f supported in the union of boxes ``pieces``.

    f must be smooth on each box (lo, hi).  For R and S* the point x must lie
    outside every box.  For M(L), whose kernel has an integrable diagonal
    singularity, the y- and r-integrals are exchanged and the y-integral is
    done by Gauss-Hermite quadrature centred at ``r x``::

        M(L) f(x) = pi^{-1/2} int drho(r) E_t[ f(r x + sqrt(1-r^2) t) - f(t) ]

    with ``t`` Gaussian-distributed; f is truncated to the boxes.
    """
    code = _kind_code(kind)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    boxes = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in pieces]

    def truncated(p):
        inside = np.zeros(p.shape[:-1], dtype=bool)
        for lo, hi in boxes:
            inside |= np.all((p >= lo) & (p <= hi), axis=-1)
        return np.where(inside, f(p), 0.0)

    if code == KIND_M:
        return _apply_m_mehler(truncated, x, spec)
    _check_coordinate(i, d)
    for lo, hi in boxes:
        if np.all((x >= lo) & (x <= hi)):
            raise SingularInputError("x lies inside the support; principal values are not supported")
    total = 0.0
    for lo, hi in boxes:
        pts, wts = tensor_nodes(lo, hi, spec.outer_nodes)
        vals = f(pts)
        keep = vals != 0
        if not np.any(keep):
            continue
        k = kernel_batch(kind, x[None], pts[keep], i, weight="y", spec=spec)
        total += math.pi ** (-d / 2) * float(np.dot(wts[keep] * vals[keep], k))
    return total


def apply_to_atom_damped(kind, i: int, atom, x, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``exp(-|x|^2) T a(x)`` at each row of ``x`` for an atom a, T = R_i or S*_i.

    Batched version of ``apply_via_kernel`` for atoms far from the origin,
    where ``||a||_inf = gamma(S)^{-1}`` and ``T a`` itself overflow.  Each
    piece P contributes ``exp(log_amplitude) gamma(P)`` times the average of
    ``profile * exp(-|x|^2) k_T(x, .)`` over P against gamma, all in
    log-scaled form.
    """
    from .spaces import gaussian_weights, log_gamma_box

    code = _kind_code(kind)
    if code == KIND_M:
        raise ValueError("use apply_via_kernel for M(L)")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_coordinate(i, x.shape[1])
    if atom.is_exceptional:
        raise ValueError("the exceptional atom has unbounded support")
    if np.any(atom.support.contains(x, 2.0)):
        raise SingularInputError("evaluation points meet twice the support of the atom")
    out = np.zeros(x.shape[0])
    for lo, hi in atom.pieces:
        p, w = tensor_nodes(lo, hi, spec.outer_nodes)
        prof = np.asarray(atom.profile(p), dtype=float)
        if not np.any(prof):
            continue
        gw = gaussian_weights(p, w) * prof
        scale = math.exp(atom.log_amplitude + log_gamma_box(lo, hi))
        xs = np.repeat(x, p.shape[0], axis=0)
        ys = np.tile(p, (x.shape[0], 1))
        k = kernel_batch(kind, xs, ys, i, weight="x", spec=spec).reshape(x.shape[0], p.shape[0])
        out += scale * (k @ gw)
    return out


def _apply_m_mehler(f, x: np.ndarray, spec: QuadratureSpec) -> float:
    d = x.size
    n_gh = max(2 * spec.outer_nodes, 40)
    t1, w1 = np.polynomial.hermite.hermgauss(n_gh)
    keep = w1 > 1e-300
    t1, w1 = t1[keep], w1[keep] / math.sqrt(math.pi)
    grids = np.meshgrid(*([t1] * d), indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=-1)
    wt = np.prod(np.stack(np.meshgrid(*([w1] * d), indexing="ij"), axis=-1).reshape(-1, d), axis=-1)
    s, ws, _ = rho_nodes(spec)
    base = float(np.dot(wt, f(t)))
    r = np.exp(-s * s)
    sq = np.sqrt(-np.expm1(-2.0 * s * s))
    vals = np.empty_like(s)
    for k in range(s.size):
        vals[k] = float(np.dot(wt, f(r[k] * x + sq[k] * t))) - base
    return float(np.dot(ws, vals)) / math.sqrt(math.pi)


# ---------------------------------------------------------------- Hormander functionals

def _ball_samples(ball: AdmissibleRegion, directions: int, fraction: float) -> np.ndarray:
    c = np.asarray(ball.center)
    d = ball.dim
    pts = [c]
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif d == 2:
        ang = 2 * math.pi * np.arange(directions) / directions
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        dirs = np.concatenate([np.eye(d), -np.eye(d)])
    pts.extend(c + fraction * ball.radius * dirs)
    return np.array(pts)


def _exterior_nodes(ball: AdmissibleRegion, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Lebesgue nodes on ``{|x - c| > 2 r_B}`` out to ``|x - c| <= |c| + 2 r_B + 7``.

    The integrands carry ``exp(-|r y - x|^2 / (1 - r^2))`` (or the psi
    analogue), so they live within distance ~1 of the segment joining the
    origin to the sampled point; beyond the cut-off they are below
    ``exp(-49)``.  Radial panels are geometric up to distance 1 and of unit
    width after; d = 1 uses the two half-lines, d = 2 polar angles.
    """
    c = np.asarray(ball.center)
    d = ball.dim
    inner = 2.0 * ball.radius
    outer = float(np.linalg.norm(c)) + inner + 7.0
    geo = [inner]
    while geo[-1] * math.sqrt(math.e) < min(1.0, outer):
        geo.append(geo[-1] * math.sqrt(math.e))
    uni = np.linspace(geo[-1], outer, max(1, int(math.ceil(outer - geo[-1]))) + 1)
    breaks = np.concatenate((geo[:-1], uni))
    rad, wr = composite_gauss_legendre(breaks, spec.outer_nodes)
    if d == 1:
        pts = np.concatenate([c + rad[:, None], c - rad[:, None]])
        wts = np.concatenate([wr, wr])
    elif d == 2:
        m = 6 * spec.outer_nodes
        ang = (np.arange(m) + 0.5) * (2 * math.pi / m)
        pts = c + np.stack(
            [np.outer(rad, np.cos(ang)).ravel(), np.outer(rad, np.sin(ang)).ravel()], axis=-1
        )
        wts = np.outer(wr * rad, np.full(m, 2 * math.pi / m)).ravel()
    else:
        raise ValueError("Hormander functionals are implemented for d = 1, 2")
    return pts, wts


def _hormander(kind, i: int, ball: AdmissibleRegion, which: str, spec: QuadratureSpec,
               directions: int, fraction: float) -> float:
    if ball.shape != "ball":
        raise ValueError("Hormander functionals are taken over balls")
    d = ball.dim
    samples = _ball_samples(ball, directions, fraction)
    ext, wts = _exterior_nodes(ball, spec)
    # differentiate in the sampled variable, integrate the other against gamma
    best = 0.0
    for p in samples:
        if which == "y":
            g = kernel_batch(kind, ext, p[None], i, which="y", weight="x", spec=spec)
        else:
            g = kernel_batch(kind, p[None], ext, i, which="x", weight="y", spec=spec)
        val = math.pi ** (-d / 2) * float(np.dot(wts, np.linalg.norm(g, axis=1)))
        best = max(best, val)
    return ball.radius * best


def hormander_h1(kind, i: int, ball: AdmissibleRegion, spec: QuadratureSpec = DEFAULT_SPEC,
                 directions: int = 4, fraction: float = 0.9) -> float:
    """``r_B sup_{y in B} int_{(2B)^c} |grad_y k(x, y)| dgamma(x)`` over sampled y."""
    return _hormander(kind, i, ball, "y", spec, directions, fraction)


def hormander_bmo(kind, i: int, ball: AdmissibleRegion, spec: QuadratureSpec = DEFAULT_SPEC,
                  directions: int = 4, fraction: float = 0.9) -> float:
    """``r_B sup_{x in B} int_{(2B)^c} |grad_x k(x, y)| dgamma(y)`` over sampled x."""
    return _hormander(kind, i, ball, "x", spec, directions, fraction)
