"""NumPy implementation of the kernel r-integrand reductions.

``rho_reduce`` evaluates, for each pair ``(x[n], y[n])``, the sum over the
supplied s-nodes of ``w[k] * integrand(s[k], x[n], y[n])`` for one of the
kernels k_M, k_R, k_S* (or a gradient of it), multiplied by an optional
Gaussian weight.  The compiled module ``_kernels`` exposes the same
function; this module is the reference and the fallback.

Integer codes (shared with the compiled module):

    kind:   0 = M(L), 1 = R_i, 2 = S*_i
    deriv:  0 = value, 1 = gradient in x, 2 = gradient in y
    weight: 0 = none, 1 = exp(-|x|^2), 2 = exp(-|y|^2)
"""
from __future__ import annotations

import math

import numpy as np

KIND_M, KIND_R, KIND_SSTAR = 0, 1, 2
DERIV_NONE, DERIV_X, DERIV_Y = 0, 1, 2
WEIGHT_NONE, WEIGHT_X, WEIGHT_Y = 0, 1, 2

_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_CHUNK = 1 << 21


def _bracket(z, shifted_exp, w_exp):
    """``exp(z) * w - w`` where ``shifted_exp = exp(z) * w`` and ``w_exp = w``."""
    small = np.abs(z) < 0.5
    return np.where(small, w_exp * np.expm1(np.where(small, z, 0.0)), shifted_exp - w_exp)


def integrand(kind, deriv, weight, x, y, i, s):
    """Un-reduced integrand times its constant prefactor: shape ``(N, S)`` or ``(N, S, d)``."""
    pre, vals = _integrand_chunk(kind, deriv, weight, np.atleast_2d(x), np.atleast_2d(y), i, np.asarray(s, float))
    return pre * vals


def _integrand_chunk(kind, deriv, weight, x, y, i, s):
    n, d = x.shape
    r = np.exp(-s * s)[None, :]                     # (1, S)
    a = -np.expm1(-2.0 * s * s)[None, :]            # 1 - r^2
    la = np.log(a)
    sq = np.sqrt(a)
    xx = np.einsum("nd,nd->n", x, x)[:, None]
    yy = np.einsum("nd,nd->n", y, y)[:, None]
    xy = np.einsum("nd,nd->n", x, y)[:, None]
    # E = |x|^2 - |phi|^2 = |y|^2 - |psi|^2, in the form that is O(r) as r -> 0
    e_val = r * (2.0 * xy - r * (xx + yy)) / a
    phi = (r[..., None] * y[:, None, :] - x[:, None, :]) / sq[..., None]   # (N, S, d)
    psi = (r[..., None] * x[:, None, :] - y[:, None, :]) / sq[..., None]
    if weight == WEIGHT_X:
        e_shift = -np.einsum("nsd,nsd->ns", phi, phi)
        w_exp = np.exp(-xx)
    elif weight == WEIGHT_Y:
        e_shift = -np.einsum("nsd,nsd->ns", psi, psi)
        w_exp = np.exp(-yy)
    else:
        e_shift = e_val
        w_exp = np.ones_like(xx)

    def ex(p):
        return np.exp(e_shift - p * la)

    k = i
    if kind == KIND_M:
        pre = _INV_SQRT_PI
        if deriv == DERIV_NONE:
            p = 0.5 * d
            integrand = _bracket(e_val - p * la, ex(p), w_exp)
        else:
            comp = phi if deriv == DERIV_Y else psi
            integrand = (-2.0 * r * ex(0.5 * (d + 1)))[..., None] * comp
    elif kind == KIND_R:
        pre = -2.0 * _INV_SQRT_PI
        if deriv == DERIV_NONE:
            integrand = r * psi[..., k] * ex(0.5 * (d + 1))
        else:
            base = (r * ex(0.5 * (d + 2)))[..., None]
            if deriv == DERIV_Y:
                g = -2.0 * r[..., None] * psi[..., k:k + 1] * phi
                g[..., k] -= 1.0
            else:
                g = -2.0 * r[..., None] * psi[..., k:k + 1] * psi
                g[..., k] += r[0]
            integrand = base * g
    elif kind == KIND_SSTAR:
        pre = -2.0 * _INV_SQRT_PI
        p = 0.5 * (d + 2)
        if deriv == DERIV_NONE:
            br = _bracket(e_val - p * la, ex(p), w_exp)
            integrand = r * y[:, None, k] * ex(p) - x[:, None, k] * br
        elif deriv == DERIV_Y:
            g = -2.0 * phi[..., k:k + 1] * phi
            g[..., k] += 1.0
            integrand = (r * ex(p))[..., None] * g
        else:
            integrand = (-2.0 * r * ex(p))[..., None] * phi[..., k:k + 1] * psi
            integrand[..., k] -= _bracket(e_val - p * la, ex(p), w_exp)
    else:
        raise ValueError(f"unknown kernel kind {kind}")
    return pre, integrand


def _reduce_chunk(kind, deriv, weight, x, y, i, s, w):
    pre, vals = _integrand_chunk(kind, deriv, weight, x, y, i, s)
    if vals.ndim == 2:
        return pre * (vals @ w)
    return pre * np.einsum("nsd,s->nd", vals, w)


def rho_reduce(kind, deriv, weight, x, y, i, s, w):
    """Weighted kernel values (or gradients) reduced over the s-rule ``(s, w)``.

    ``x`` and ``y`` are ``(N, d)`` arrays of paired points; ``i`` is the
    0-based coordinate of the Riesz transform (ignored for M(L)).  Returns
    shape ``(N,)`` for values and ``(N, d)`` for gradients.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    s = np.ascontiguousarray(s, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    n, d = x.shape
    per = max(1, _CHUNK // max(1, s.size * d))
    out = [
        _reduce_chunk(kind, deriv, weight, x[j:j + per], y[j:j + per], i, s, w)
        for j in range(0, n, per)
    ]
    if not out:
        return np.zeros((0,) if deriv == DERIV_NONE else (0, d))
    return np.concatenate(out, axis=0)
