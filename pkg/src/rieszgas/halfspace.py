"""
Coulomb gas in ``R^(d+1)`` with quadratic confinement and a hard wall
``x_0 >= a``.

For ``a`` beyond the critical wall position the equilibrium measure lives on
the hyperplane ``{x_0 = a}`` and equals the ``(1 - |x/R|^2)^(1/2)`` law of
radius ``R``.  This module evaluates the threshold, the confined density,
the large-deviation rate constant, and the profile

    F(t, x) = (2/(d-1)) int dmu_W(y) / (t^2 + |x-y|^2)^((d-1)/2) + (a+t)^2 + |x|^2

whose global minimum at ``(0, 0)`` over ``t, x >= 0`` is the remaining
variational condition.  ``d = 1`` uses the logarithmic kernel, where
``2/(d-1) |.|^(1-d)`` is replaced by ``-2 log|.|``.

Radial coordinates ``x`` are nonnegative.  Complex square roots and powers
use the principal branch.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .quadrature import QuadratureError, integrate_segments
from .specfun import hyp2f1

__all__ = [
    "HalfspaceProblem",
    "ProfilePoint",
    "a_critical",
    "support_radius",
    "confined_density",
    "rate_constant",
    "regime",
    "F_profile",
    "G_profile",
    "G_closed_d3",
    "G_closed_d3_trig",
    "semicircle_log_potential",
    "vertical_margin_reduced",
    "vertical_check",
    "conjecture_scan",
    "ld_exponent",
    "default_t_grid",
    "default_x_grid",
]


def _log_mass_scale(d: int) -> float:
    """``log(sqrt(pi) Gamma((d+3)/2) / Gamma(d/2+1))``, equal to ``(d+1) log R``."""
    return 0.5 * math.log(math.pi) + math.lgamma(0.5 * (d + 3)) - math.lgamma(0.5 * d + 1)


def _check_dim(d, minimum=0):
    if int(d) != d or d < minimum:
        raise ValueError(f"dimension d must be an integer >= {minimum}, got {d}")
    return int(d)


@dataclass(frozen=True)
class HalfspaceProblem:
    """Wall at ``x_0 = a`` in ``R^(d+1)``; the Riesz exponent is ``d - 1``."""

    d: int
    a: float
    beta: float = 2.0

    def __post_init__(self):
        _check_dim(self.d)
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def s(self) -> int:
        return self.d - 1

    @property
    def R(self) -> float:
        return support_radius(self.d)

    @property
    def a_cri(self) -> float:
        return a_critical(self.d)

    def to_dict(self):
        return {"d": self.d, "a": float(self.a), "beta": float(self.beta)}

    @classmethod
    def from_dict(cls, obj):
        return cls(int(obj["d"]), float(obj["a"]), float(obj.get("beta", 2.0)))


@dataclass(frozen=True)
class ProfilePoint:
    t: float
    x: float
    value: float

    def __post_init__(self):
        if self.t < 0 or self.x < 0:
            raise ValueError("profile coordinates must be nonnegative")


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def support_radius(d: int) -> float:
    """Radius ``R`` of the measure confined to the wall."""
    d = _check_dim(d)
    return math.exp(_log_mass_scale(d) / (d + 1))


def a_critical(d: int) -> float:
    """Critical wall position ``(d+1) / R**d``."""
    d = _check_dim(d)
    return (d + 1) * math.exp(-d * _log_mass_scale(d) / (d + 1))


def confined_density(d: int, x_norm):
    """Density of the confined measure in ``R^d`` at ``|x| = x_norm``."""
    d = _check_dim(d, 1)
    R = support_radius(d)
    x = np.asarray(x_norm, dtype=float)
    pre = 2 * R / math.pi * math.exp(math.lgamma(0.5 * d + 1) - 0.5 * d * math.log(math.pi))
    u = np.clip(1.0 - (x / R) ** 2, 0.0, None)
    out = pre * np.sqrt(u) * (x <= R)
    return float(out) if out.ndim == 0 else out


def rate_constant(a: float, d: int) -> float:
    """Large-deviation constant ``C(a; d)``.

    ``d = 1`` is a removable singularity of the general expression; its
    limit is ``a**2 + log(2)/2``.
    """
    d = _check_dim(d)
    if d == 1:
        return a * a + 0.5 * math.log(2.0)
    R2 = support_radius(d) ** 2
    return a * a + (R2 * d * (d + 1) - (d + 1) ** 2) / ((d - 1) * (d + 3))


def regime(prob: HalfspaceProblem) -> str:
    """Which of the three wall regimes ``prob.a`` falls in."""
    if prob.a < -1:
        return "no_effective_wall"
    if prob.a < prob.a_cri:
        return "partially_effective_wall"
    return "fully_effective_wall"


# ---------------------------------------------------------------------------
# layer potential of the confined measure
# ---------------------------------------------------------------------------


def _on_axis_unit(d, t):
    """Normalised layer potential at ``x = 0`` (radius-one variables)."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, d / (d - 1.0))
    pos = t > 0
    if np.any(pos):
        tp = t[pos]
        z = -1.0 / tp**2
        f = hyp2f1(0.5 * (d - 1), 0.5 * d, 0.5 * (d + 3), z)
        out[pos] = 2.0 / (d - 1) * math.exp(-_log_mass_scale(d)) * tp ** (1 - d) * f
    return out


def _layer_kernel(d, t, x, r, gap):
    """Integrand of the reduced layer potential; ``gap = |x - r|`` exactly."""
    sig = 0.5 * (d - 1)
    far = t * t + (x + r) ** 2
    near = t * t + gap * gap
    with np.errstate(divide="ignore", invalid="ignore"):
        zc = near / far
        k = np.zeros_like(far)
        ok = (far > 0) & (zc > 0)
        if np.any(ok):
            k[ok] = far[ok] ** (-sig) * hyp2f1(sig, sig, 2 * sig, None, zc=zc[ok])
    w = np.sqrt(np.clip((1.0 - r) * (1.0 + r), 0.0, None)) * r ** (d - 1)
    return k * w


def _layer_breaks(t, x):
    pts = {0.0, 1.0}
    if 0 < x < 1:
        pts.add(x)
        # grade toward the near-singular point when the kernel is sharp
        for j in range(0, 4):
            h = max(t, 1e-3) * 4.0**j
            for p in (x - h, x + h):
                if 0 < p < 1:
                    pts.add(p)
    return sorted(pts)


def _layer_unit(d, t, x, tol):
    """``(4d/(d-1)) / pi * int_0^1 ... dr`` for one point, radius-one variables."""
    if x == 0:
        return float(_on_axis_unit(d, t))
    pts = _layer_breaks(t, x)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):

        def f(r, dl, dr, idx, a=a, b=b):
            if b == x:
                gap = dr
            elif a == x:
                gap = dl
            else:
                gap = np.abs(x - r)
            val = _layer_kernel(d, t, x, r, gap)
            # log-singular end nodes carry zero weight
            return np.where(np.isfinite(val), val, 0.0)

        try:
            seg, _ = integrate_segments(f, np.array([[a, b]]), tol=tol, rtol=tol, max_level=10)
        except QuadratureError as exc:
            raise QuadratureError(f"layer potential at t={t}, x={x}: {exc}", exc.achieved) from exc
        total += float(seg[0])
    return 4.0 * d / ((d - 1) * math.pi) * total


def G_profile(d: int, t: float, x: float, tol: float = 1e-11) -> float:
    """``G(x) = calG(x) + x**2`` at fixed ``t`` in radius-one variables.

    Evaluated by tanh-sinh quadrature of the angular-reduced kernel; ``x = 0``
    uses the on-axis hypergeometric closed form.
    """
    d = _check_dim(d, 2)
    if t < 0 or x < 0:
        raise ValueError("t and x must be nonnegative")
    return _layer_unit(d, float(t), float(x), tol) + x * x


def G_closed_d3(t: float, x: float) -> float:
    """Exact ``G`` for ``d = 3``: ``3t^2 + 3/2 + Re[(z^2-1)^(3/2)] / x``, ``z = x + it``."""
    t, x = float(t), float(x)
    if t < 0 or x < 0:
        raise ValueError("t and x must be nonnegative")
    # u = z^2 - 1 = A + iB with B >= 0; principal sqrt(u) = p + iq and
    # Re[u^(3/2)] = A p - B q, arranged so nothing cancels near x = 0
    A = (x - t) * (x + t) - 1.0
    B = 2.0 * x * t
    mod = math.hypot(A, B)
    if A < 0:
        q = math.sqrt(0.5 * (mod - A))
        # Re[u^(3/2)] / x = (B/x) (A/(2q) - q) with B/x = 2t
        return 3 * t * t + 1.5 + 2.0 * t * (0.5 * A / q - q)
    p = math.sqrt(0.5 * (mod + A))
    if p == 0.0:
        return 3 * t * t + 1.5
    return 3 * t * t + 1.5 + (A * p - B * B / (2.0 * p)) / x


def G_closed_d3_trig(t: float, x: float) -> float:
    """Same function as :func:`G_closed_d3` in its modulus/arctan form (``x > 0``)."""
    u = t * t - x * x + 1
    mod = (u * u + 4 * t * t * x * x) ** 0.75
    ang = math.atan2(u, 2 * t * x)
    return 3 * t * t + 1.5 - mod * math.sin(math.pi / 4 + 1.5 * ang) / x


def _semicircle_complex_potential(z):
    """``int log(z - y) dsc(y)`` for the semicircle on ``[-sqrt2, sqrt2]``, ``Im z >= 0``."""
    c = math.sqrt(2.0)
    w = np.sqrt(z - c) * np.sqrt(z + c)  # ~ z at infinity
    return 0.5 * z * z - 0.5 * z * w + np.log(z + w) - 0.5 - math.log(2.0)


def semicircle_log_potential(t, x, method: str = "closed", tol: float = 1e-12):
    """``2 int log(1/|t + i(x-y)|) sqrt(2-y^2)/pi dy``.

    ``method="closed"`` integrates the Stieltjes transform analytically,
    ``"quadrature"`` integrates the log kernel directly.
    """
    t, x = float(t), abs(float(x))
    if method == "closed":
        return float(-2.0 * _semicircle_complex_potential(complex(x, t)).real)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    c = math.sqrt(2.0)
    pts = sorted({-c, c} | ({x} if x < c else set()))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):

        def f(y, dl, dr, idx, a=a, b=b):
            gap = dr if b == x else dl if a == x else np.abs(x - y)
            # exact distances to +-sqrt2 keep the weight accurate at the ends
            lo = dl if a == -c else y + c
            hi = dr if b == c else c - y
            with np.errstate(divide="ignore"):
                val = -np.log(t * t + gap * gap) * np.sqrt(lo * hi) / math.pi
            return np.where(np.isfinite(val), val, 0.0)

        seg, _ = integrate_segments(f, np.array([[a, b]]), tol=tol, rtol=tol, max_level=10)
        total += float(seg[0])
    return total


def F_profile(prob: HalfspaceProblem, t: float, x: float, tol: float = 1e-10, method: str = "closed") -> float:
    """Potential plus confinement ``F(t, x)`` at distance ``t`` from the wall.

    ``d >= 2``: quadrature of the reduced kernel, on-axis closed form at
    ``x = 0``.  ``d = 1``: logarithmic kernel of the semicircle, either
    closed (``method="closed"``) or by direct quadrature.
    """
    d = prob.d
    if d == 0:
        raise ValueError("d = 0 has a Dirac equilibrium measure; profiles are not defined")
    if t < 0 or x < 0:
        raise ValueError("t and x must be nonnegative")
    t, x = float(t), float(x)
    conf = (prob.a + t) ** 2 + x * x
    if d == 1:
        return semicircle_log_potential(t, x, method=method, tol=min(tol, 1e-12)) + conf
    R = prob.R
    # the layer potential scales as R^2 * calG(t/R, x/R)
    inner = _layer_unit(d, t / R, x / R, tol / max(R * R, 1.0))
    return R * R * inner + conf


def _F00(prob: HalfspaceProblem) -> float:
    if prob.d == 1:
        return 1.0 + math.log(2.0) + prob.a**2
    return prob.a**2 + prob.d * prob.R**2 / (prob.d - 1)


# ---------------------------------------------------------------------------
# variational checks
# ---------------------------------------------------------------------------


def vertical_margin_reduced(prob: HalfspaceProblem, t):
    """``t f(t)`` with ``f(t) = (d+1)t + 2a - 2(d+1)/R^d 2F1(d/2, -1/2; 3/2; -t^2/R^2)``.

    Equals ``F(t, 0) - F(0, 0)`` through contiguous relations; used as the
    second route in :func:`vertical_check`.
    """
    d = _check_dim(prob.d, 1)
    R = prob.R
    t = np.asarray(t, dtype=float)
    f = (d + 1) * t + 2 * prob.a - 2 * (d + 1) / R**d * hyp2f1(0.5 * d, -0.5, 1.5, -((t / R) ** 2))
    return t * f


def vertical_check(prob: HalfspaceProblem, t_grid, tol: float = 1e-10) -> dict:
    """Margins ``F(t, 0) - F(0, 0)`` along the wall normal.

    Returns ``{"margins": [(t, margin), ...], "reduced": [...], "first_violation": t or None,
    "route_disagreement": max |direct - reduced|}``.
    """
    t_grid = [float(t) for t in t_grid]
    if any(t < 0 for t in t_grid):
        raise ValueError("t_grid must be nonnegative")
    F0 = _F00(prob)
    direct = [F_profile(prob, t, 0.0, tol=tol) - F0 for t in t_grid]
    reduced = [float(v) for v in np.atleast_1d(vertical_margin_reduced(prob, t_grid))]
    first = next((t for t, m in zip(t_grid, direct) if m < -tol), None)
    return {
        "margins": list(zip(t_grid, direct)),
        "reduced": list(zip(t_grid, reduced)),
        "first_violation": first,
        "route_disagreement": max((abs(u - v) for u, v in zip(direct, reduced)), default=0.0),
    }


def default_t_grid(n: int = 33) -> np.ndarray:
    return np.geomspace(1e-3, 10.0, n)


def default_x_grid(d: int, n: int = 61) -> np.ndarray:
    R = support_radius(d) if d >= 1 else 1.0
    return np.linspace(0.0, 3.0 * R, n)


@dataclass
class ScanReport:
    d: int
    a: float
    a_cri: float
    R: float
    C: float
    min_margin: float
    argmin: tuple
    t_grid: list = field(default_factory=list)
    x_grid: list = field(default_factory=list)
    margins: list = field(default_factory=list, repr=False)

    def to_dict(self, include_margins=False):
        out = asdict(self)
        out["argmin"] = list(self.argmin)
        out["grids"] = {"t": out.pop("t_grid"), "x": out.pop("x_grid")}
        if not include_margins:
            out.pop("margins")
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(**kw), sort_keys=True)

    @classmethod
    def from_dict(cls, obj):
        return cls(
            obj["d"], obj["a"], obj["a_cri"], obj["R"], obj["C"], obj["min_margin"],
            tuple(obj["argmin"]), list(obj["grids"]["t"]), list(obj["grids"]["x"]),
            obj.get("margins", []),
        )


def conjecture_scan(d: int, a: float, t_grid=None, x_grid=None, tol: float = 1e-10) -> ScanReport:
    """Minimum of ``F(t, x) - F(0, 0)`` over a grid of ``t, x >= 0``.

    A nonnegative minimum is numerical evidence for full confinement at this
    ``a``; it is not a proof.
    """
    prob = HalfspaceProblem(_check_dim(d, 1), float(a))
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    x_grid = default_x_grid(d) if x_grid is None else np.asarray(x_grid, dtype=float)
    F0 = _F00(prob)
    margins = np.array([[F_profile(prob, t, x, tol=tol) - F0 for x in x_grid] for t in t_grid])
    i, j = np.unravel_index(int(np.argmin(margins)), margins.shape)
    return ScanReport(
        d=prob.d,
        a=prob.a,
        a_cri=prob.a_cri,
        R=prob.R,
        C=rate_constant(prob.a, prob.d),
        min_margin=float(margins[i, j]),
        argmin=(float(t_grid[i]), float(x_grid[j])),
        t_grid=[float(v) for v in t_grid],
        x_grid=[float(v) for v in x_grid],
        margins=margins.tolist(),
    )


def ld_exponent(prob: HalfspaceProblem) -> dict:
    """Speed and rate of ``log P[x_0 >= a] ~ rate * N**exponent``."""
    C = rate_constant(prob.a, prob.d)
    return {
        "exponent": (prob.d + 3) / (prob.d + 1),
        "rate": -0.5 * prob.beta * C,
        "C": C,
    }
