"""
Batched tanh-sinh (double exponential) quadrature.

The integrand receives, besides the nodes, their exact distances to both
interval ends.  Endpoint singularities such as ``(1 - r)**alpha`` or a
logarithmic kernel singularity can then be evaluated without the
cancellation that ``1 - x`` suffers near ``x = 1``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["QuadratureError", "tanh_sinh", "integrate_segments"]


class QuadratureError(RuntimeError):
    """Requested tolerance not reached; ``achieved`` holds the error estimate."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


_UMAX = 6.0


def _nodes(level: int, odd_only: bool):
    h = 2.0**-level
    n = int(math.ceil(_UMAX / h))
    j = np.arange(0, n + 1)
    if odd_only:
        j = j[j % 2 == 1]
    u = j * h
    v = 0.5 * math.pi * np.sinh(u)
    # 1 - tanh(v), computed without cancellation
    e = np.exp(-2.0 * v)
    om = 2.0 * e / (1.0 + e)
    xi = 1.0 - om
    w = 0.5 * math.pi * np.cosh(u) * 4.0 * e / (1.0 + e) ** 2
    return u, xi, om, w, h


def _eval_level(f, a, b, level, odd_only):
    u, xi, om, w, h = _nodes(level, odd_only)
    half = 0.5 * (b - a)[:, None]
    length = (b - a)[:, None]
    # right half: x = a + half*(1+xi); distance to b is half*om
    dr_right = half * om
    dl_right = length - dr_right
    x_right = a[:, None] + dl_right
    # left half (mirror), u > 0 only
    dl_left = half * om
    dr_left = length - dl_left
    x_left = a[:, None] + dl_left
    fr = f(x_right, dl_right, dr_right)
    fl = f(x_left, dl_left, dr_left)
    wt = np.broadcast_to(w, fr.shape).copy()
    if not odd_only:
        # the u = 0 node is shared by both halves
        wt[:, 0] *= 0.5
    s = np.sum(wt * (fr + fl), axis=1)
    return s * half[:, 0], h


def tanh_sinh(f, a, b, tol=1e-12, rtol=1e-12, min_level=3, max_level=9, raise_on_fail=True):
    """Integrate ``f`` over ``[a, b]`` for a batch of intervals.

    Parameters
    ----------
    f : callable
        ``f(x, dist_a, dist_b)`` with arrays of shape ``(batch, nodes)``;
        must return an array of the same shape.
    a, b : array_like
        Interval ends, broadcast to a common 1-d batch shape.
    tol, rtol : float
        Absolute and relative targets on the level-to-level change.

    Returns
    -------
    value, error : ndarray
    """
    a, b = np.broadcast_arrays(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    s, h = _eval_level(f, a, b, min_level, odd_only=False)
    est = s * h
    err = np.full_like(est, np.inf)
    for level in range(min_level + 1, max_level + 1):
        s_new, h = _eval_level(f, a, b, level, odd_only=True)
        s = s + s_new
        new = s * h
        err = np.abs(new - est)
        est = new
        if np.all(err <= np.maximum(tol, rtol * np.abs(est))):
            return est, err
    if raise_on_fail:
        raise QuadratureError(
            f"tanh-sinh did not converge; achieved {np.max(err):.3g}", achieved=float(np.max(err))
        )
    return est, err


def integrate_segments(f, breaks, tol=1e-12, rtol=1e-12, **kw):
    """Sum of tanh-sinh integrals over consecutive breakpoints.

    ``breaks`` has shape ``(batch, m)`` with nondecreasing rows; segments of
    zero length contribute nothing.
    """
    breaks = np.atleast_2d(np.asarray(breaks, float))
    total = np.zeros(breaks.shape[0])
    error = np.zeros(breaks.shape[0])
    for j in range(breaks.shape[1] - 1):
        a, b = breaks[:, j], breaks[:, j + 1]
        live = b > a
        if not np.any(live):
            continue
        val, err = tanh_sinh(f_restrict(f, live), a[live], b[live], tol=tol, rtol=rtol, **kw)
        total[live] += val
        error[live] += err
    return total, error


def f_restrict(f, mask):
    """Wrap a batched integrand ``f(x, dl, dr, idx)`` onto a subset of rows."""
    idx = np.nonzero(mask)[0]

    def g(x, dl, dr):
        return f(x, dl, dr, idx)

    return g
