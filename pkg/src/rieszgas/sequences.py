"""
Coefficient sequences and the radial densities they define.

A sequence ``a_0, a_1, ...`` describes the candidate density

    mu(x) = (d / c_d) * sum_k a_k |x|**(2k)       for |x| <= 1,

with radial density ``f(r) = d * sum_k a_k r**(2k+d-1)``.  Besides explicit
finite lists, two closed-form families are provided: power-type measures
``(1 - |x|^2)**alpha`` and the measures attached to pure power potentials
``|x|**(2p)``.  For these the general term is known, so infinite sums over
``k`` are completed with an asymptotic tail instead of being truncated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special as sc

from .quadrature import integrate_segments
from .specfun import (
    PoleError,
    balanced_sum,
    balanced_tail,
    gamma_ratio,
    hyp2f1,
    tail_start,
)

__all__ = [
    "RieszParams",
    "CoefficientSequence",
    "RadialDensity",
    "InvalidMeasureError",
    "CoulombEndpointError",
    "explicit_coeffs",
    "power_measure_coeffs",
    "power_potential_coeffs",
    "density_at",
    "radial_density",
    "radial_cdf_function",
    "density_power_potential_closed",
]

# distance from d-2 below which s is treated as the Coulomb endpoint
COULOMB_BAND = 1e-8
MAX_K = 2000
_COEFF_CUTOFF = 1e-12
_CHEB_NODES = 4096


class InvalidMeasureError(ValueError):
    """The sequence does not define a nonnegative normalized density."""


class CoulombEndpointError(ValueError):
    """The requested formula degenerates at s = d - 2."""


@dataclass(frozen=True)
class RieszParams:
    """Dimension ``d`` and Riesz exponent ``s``.

    ``s`` must lie in ``[d-2, d)``.  ``extended=True`` additionally admits
    ``s`` in ``[d-3, d-2)``, where some closed formulas are still defined
    but need not describe a valid equilibrium problem.
    """

    d: int
    s: float
    extended: bool = False
    c_d: float = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "s", float(self.s))
        lower = self.d - 3 if self.extended else self.d - 2
        if not (lower - COULOMB_BAND <= self.s < self.d):
            raise ValueError(f"s={self.s} outside the admissible range for d={self.d}")
        object.__setattr__(
            self, "c_d", 2.0 * math.pi ** (self.d / 2) / math.gamma(self.d / 2)
        )

    @property
    def t(self) -> float:
        """Half the gap ``(d - s)/2``."""
        return 0.5 * (self.d - self.s)

    @property
    def is_coulomb(self) -> bool:
        return abs(self.s - (self.d - 2)) <= COULOMB_BAND

    @property
    def density_scale(self) -> float:
        """``d / c_d = Gamma(d/2 + 1) / pi**(d/2)``."""
        return self.d / self.c_d

    def to_dict(self):
        return {"d": self.d, "s": self.s}


# ---------------------------------------------------------------------------
# general-term models of the closed-form families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _TermModel:
    """``a_k`` for all ``k`` plus its large-``k`` gamma-ratio shape."""

    generate: Callable[[int], np.ndarray]
    num: tuple
    den: tuple

    @property
    def decay(self) -> float:
        return float(sum(self.num) - sum(self.den))


def _power_measure_model(alpha: float, params: RieszParams) -> _TermModel:
    d = params.d
    norm = gamma_ratio([alpha + 1 + d / 2], [alpha + 1, d / 2 + 1])

    def generate(n):
        k = np.arange(n, dtype=float)
        out = np.empty(n + 1)
        out[0] = norm
        out[1:] = norm * np.cumprod((k - alpha) / (k + 1.0))
        return out

    return _TermModel(generate, (-alpha,), (1.0,))


def _power_potential_model(p: int, params: RieszParams) -> _TermModel:
    d, s, t = params.d, params.s, params.t
    pref = -math.sin(math.pi * t) / math.pi * gamma_ratio([1 + s / 2], [d / 2]) * (2 * p + s) / d
    g0 = math.gamma(t)

    def generate(n):
        k = np.arange(n, dtype=float)
        g = np.empty(n + 1)
        g[0] = g0
        g[1:] = g0 * np.cumprod((k + t) / (k + 1.0))
        kk = np.arange(n + 1, dtype=float)
        return pref * g / (kk + t - p)

    return _TermModel(generate, (t, t - p), (1.0, t - p + 1.0))


# ---------------------------------------------------------------------------
# sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """Truncated coefficient list with provenance and validity diagnostics.

    Attributes
    ----------
    coeffs : ndarray
        ``a_0 .. a_K``.
    params : RieszParams
    provenance : str
        ``explicit``, ``custom``, ``power_measure`` or ``power_potential``.
    family : dict
        Family parameters (``alpha`` or ``p``).
    tail_bound : float
        Bound on ``sum_{k>K} |a_k|``, the sup over ``[0, 1]`` of the
        discarded part of ``sum a_k x**(2k)``; ``inf`` when it diverges.
    nonnegative, normalization_error
        Admissibility diagnostics computed at construction.
    """

    coeffs: np.ndarray
    params: RieszParams
    provenance: str = "explicit"
    family: dict = field(default_factory=dict)
    tail_bound: float = 0.0
    nonnegative: bool = True
    normalization_error: float = 0.0
    _model: Optional[_TermModel] = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def truncation_K(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_finite(self) -> bool:
        return self._model is None

    @property
    def admissible(self) -> bool:
        return self.nonnegative and self.normalization_error <= 1e-9

    # -- coefficient access -------------------------------------------------

    def terms(self, n: int) -> np.ndarray:
        """Coefficients ``a_0 .. a_n`` (generated past ``K`` when known)."""
        if n <= self.truncation_K:
            return self.coeffs[: n + 1]
        if self._model is None:
            out = np.zeros(n + 1)
            out[: self.coeffs.size] = self.coeffs
            return out
        cached = self._cache.get("terms")
        if cached is None or cached.size < n + 1:
            cached = self._model.generate(max(n, 2 * self.truncation_K))
            self._cache["terms"] = cached
        return cached[: n + 1]

    # -- sums over k --------------------------------------------------------

    def moments(self, gammas):
        """``sum_k a_k / (2k + gamma)`` for each ``gamma``.

        Returns
        -------
        values, scales : ndarray
            Full sums, and the sums of absolute values of the summed head
            (a roundoff scale for each value).
        """
        g = np.atleast_1d(np.asarray(gammas, dtype=float))
        vals = np.empty_like(g)
        scales = np.empty_like(g)
        if self._model is None:
            k = np.arange(self.coeffs.size, dtype=float)
            den = 2 * k[None, :] + g[:, None]
            if np.any(np.abs(den) < 1e-12):
                raise PoleError("moment denominator 2k + gamma vanishes")
            terms = self.coeffs[None, :] / den
            vals[:] = terms.sum(axis=1)
            scales[:] = np.abs(terms).sum(axis=1)
            return vals, scales
        model = self._model
        for i, gi in enumerate(g):
            n = max(self.truncation_K, tail_start(list(model.num) + [gi / 2]))
            a = self.terms(n)
            k = np.arange(n + 1, dtype=float)
            den = 2 * k + gi
            if np.any(np.abs(den) < 1e-12):
                raise PoleError("moment denominator 2k + gamma vanishes")
            terms = a / den
            vals[i] = balanced_sum(
                terms, 0, list(model.num) + [gi / 2], list(model.den) + [gi / 2 + 1]
            )
            scales[i] = np.abs(terms).sum()
        return vals, scales

    def moment(self, gamma: float) -> float:
        return float(self.moments([gamma])[0][0])

    def power_sum(self, x):
        """``sum_k a_k x**(2k)`` for ``0 <= x <= 1`` (full sum when known)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        if self._model is None:
            out[:] = np.polynomial.polynomial.polyval(x * x, self.coeffs)
            return out
        at_one = x >= 1.0
        inner = ~at_one
        if np.any(inner):
            xi = x[inner]
            worst = float(np.max(xi))
            if worst > 0:
                n = int(min(2_000_000, max(self.truncation_K, math.ceil(-20.0 / math.log(worst)))))
            else:
                n = self.truncation_K
            out[inner] = np.polynomial.polynomial.polyval(xi * xi, self.terms(n))
        if np.any(at_one):
            out[at_one] = self._sum_at_one()
        return out

    def _sum_at_one(self) -> float:
        model = self._model
        if model.decay >= -1.0:
            return math.inf
        n = tail_start(list(model.num) + list(model.den))
        n = max(n, self.truncation_K)
        return balanced_sum(self.terms(n), 0, list(model.num), list(model.den))

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        return {
            "d": self.params.d,
            "s": self.params.s,
            "coeffs": [float(c) for c in self.coeffs],
            "provenance": self.provenance,
            "family": dict(self.family),
            "truncation_K": int(self.truncation_K),
            "tail_bound": float(self.tail_bound),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "CoefficientSequence":
        params = RieszParams(obj["d"], obj["s"], extended=obj["s"] < obj["d"] - 2)
        prov = obj.get("provenance", "explicit")
        fam = obj.get("family", {}) or {}
        K = int(obj.get("truncation_K", len(obj["coeffs"]) - 1))
        if prov == "power_measure":
            return power_measure_coeffs(fam["alpha"], params, K)
        if prov == "power_potential":
            return power_potential_coeffs(int(fam["p"]), params, K)
        return explicit_coeffs(obj["coeffs"], params, provenance=prov)


def _chebyshev_grid() -> np.ndarray:
    j = np.arange(_CHEB_NODES)
    x = 0.5 * (1.0 + np.cos(math.pi * (j + 0.5) / _CHEB_NODES))
    return np.sort(np.append(x, 1.0))


def _build(coeffs, params, provenance, family, model, closed=None) -> CoefficientSequence:
    coeffs = np.asarray(coeffs, dtype=float)
    # tail bound of the discarded coefficients
    if model is None:
        tail = 0.0
    elif model.decay >= -1.0:
        tail = math.inf
    else:
        K = coeffs.size - 1
        nxt = abs(float(model.generate(K + 1)[-1]))
        tail = abs(balanced_tail(list(model.num), list(model.den), K + 1, nxt))
    seq = CoefficientSequence(coeffs, params, provenance, family, tail, True, 0.0, model)
    # normalization over the full sequence
    norm_err = abs(seq.moment(params.d) - 1.0 / params.d)
    object.__setattr__(seq, "normalization_error", norm_err)
    # nonnegativity on a Chebyshev grid (closed form very near the edge)
    x = _chebyshev_grid()
    vals = np.empty_like(x)
    near = x > 0.999
    vals[~near] = seq.power_sum(x[~near])
    if closed is not None:
        with np.errstate(all="ignore"):
            vals[near] = closed(x[near])
    else:
        vals[near] = seq.power_sum(x[near])
    finite = np.isfinite(vals)
    scale = max(1.0, float(np.max(np.abs(vals[finite]))) if np.any(finite) else 1.0)
    bad = finite & (vals < -1e-12 * scale)
    bad |= np.isneginf(vals)
    object.__setattr__(seq, "nonnegative", not bool(np.any(bad)))
    return seq


def explicit_coeffs(coeffs, params: RieszParams, provenance: str = "explicit") -> CoefficientSequence:
    """A finite sequence given coefficient by coefficient."""
    if len(coeffs) == 0:
        raise ValueError("need at least one coefficient")
    return _build(coeffs, params, provenance, {}, None)


def _default_K(model: _TermModel) -> int:
    a = model.generate(MAX_K)
    small = np.nonzero(np.abs(a) < _COEFF_CUTOFF)[0]
    return int(small[0]) if small.size else MAX_K


def power_measure_coeffs(alpha: float, params: RieszParams, K: Optional[int] = None) -> CoefficientSequence:
    """Coefficients of the power-type measure proportional to ``(1-|x|^2)**alpha``.

    ``a_k = Gamma(alpha+1+d/2)/(Gamma(alpha+1) Gamma(d/2+1)) * (-alpha)_k / k!``.
    """
    alpha = float(alpha)
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    model = _power_measure_model(alpha, params)
    fam = {"alpha": alpha}
    closed = _power_measure_closed(alpha, params)
    if alpha.is_integer():
        # (1 - x^2)^alpha is a polynomial: exact finite sequence
        n = int(alpha) if K is None else min(int(alpha), K)
        return _build(model.generate(n)[: n + 1], params, "power_measure", fam, None, closed)
    if K is None:
        K = _default_K(model)
    return _build(model.generate(K), params, "power_measure", fam, model, closed)


def power_potential_coeffs(p: int, params: RieszParams, K: Optional[int] = None) -> CoefficientSequence:
    """Coefficients of the measure attached to the potential ``|x|**(2p)``."""
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    p = int(p)
    if params.is_coulomb:
        raise CoulombEndpointError("power-potential coefficients vanish at s = d-2")
    model = _power_potential_model(p, params)
    if K is None:
        K = _default_K(model)
    closed = lambda x: density_power_potential_closed(p, params, x) / params.density_scale
    return _build(model.generate(K), params, "power_potential", {"p": p}, model, closed)


def _power_measure_closed(alpha: float, params: RieszParams):
    norm = gamma_ratio([alpha + 1 + params.d / 2], [alpha + 1, params.d / 2 + 1])

    def f(x, om=None):
        x = np.asarray(x, dtype=float)
        om = 1.0 - x if om is None else om
        return norm * (om * (1.0 + x)) ** alpha

    return f


def density_power_potential_closed(p: int, params: RieszParams, r, om=None):
    """Closed-form density of the pure power potential ``|x|**(2p)``.

    ``om`` optionally gives ``1 - r`` to full precision.
    """
    if params.is_coulomb:
        raise CoulombEndpointError("closed density degenerates at s = d-2")
    d, s, t = params.d, params.s, params.t
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    om = 1.0 - r if om is None else np.atleast_1d(np.asarray(om, dtype=float))
    zc = om * (1.0 + r)
    pre = gamma_ratio([1 + s / 2], [1 - t, d / 2 + 1]) * (2 * p + s) / (2 * p - d + s)
    out = np.zeros_like(r)
    inside = r <= 1.0
    if t >= 1.0:
        # the density blows up at the edge; its sign follows the singular term
        edge = inside & (zc <= 0.0)
        if np.any(edge):
            lead = pre * gamma_ratio([t + 1 - p, t - 1], [t, t - p])
            out[edge] = math.copysign(math.inf, lead)
        inside &= ~edge
    else:
        # (1 - r^2)**(1 - t) factor: exact zero on the boundary
        inside &= zc > 0.0
    if np.any(inside):
        out[inside] = pre * hyp2f1(t, t - p, t + 1 - p, None, zc=zc[inside]) * params.density_scale
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# radial densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Density of a radially symmetric measure on the ball of radius ``support_radius``."""

    seq: CoefficientSequence
    params: RieszParams
    support_radius: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.support_radius <= 0:
            raise ValueError("support radius must be positive")

    @classmethod
    def of(cls, seq: CoefficientSequence) -> "RadialDensity":
        return cls(seq, seq.params)

    @property
    def edge_exponent(self) -> float:
        """Exponent ``e`` with ``mu ~ (1 - r^2)**e`` at the edge (0 if bounded)."""
        fam = self.seq.provenance
        if fam == "power_measure":
            return self.seq.family["alpha"]
        if fam == "power_potential":
            return 1.0 - self.params.t
        return 0.0

    def profile(self, r, om=None):
        """``mu(r)`` on the unit ball, closed form when the family is known.

        ``om`` optionally supplies ``1 - r`` exactly.
        """
        r = np.asarray(r, dtype=float)
        seq = self.seq
        if seq.provenance == "power_measure":
            f = _power_measure_closed(seq.family["alpha"], self.params)
            return f(r, om) * self.params.density_scale
        if seq.provenance == "power_potential":
            return density_power_potential_closed(seq.family["p"], self.params, r, om)
        return seq.power_sum(r) * self.params.density_scale

    def radial(self, r, om=None):
        """Radial density ``f(r) = c_d r**(d-1) mu(r)`` (unit support)."""
        r = np.asarray(r, dtype=float)
        return self.params.c_d * r ** (self.params.d - 1) * self.profile(r, om)

    def cdf(self, r):
        """Mass within radius ``r`` (unit support assumed)."""
        r = np.clip(np.atleast_1d(np.asarray(r, dtype=float)), 0.0, 1.0)
        d = self.params.d
        seq = self.seq
        if seq.provenance == "power_measure":
            return sc.betainc(d / 2, seq.family["alpha"] + 1.0, r * r)
        if seq.is_finite:
            k = np.arange(seq.coeffs.size)
            c = d * seq.coeffs / (2 * k + d)
            return r**d * np.polynomial.polynomial.polyval(r * r, c)
        return self._numeric_cdf(r)

    def _numeric_cdf(self, r):
        table = self._cache.get("cdf")
        if table is None:
            # tabulate on a grid graded towards both ends, then interpolate
            u = np.linspace(0.0, 1.0, 801)
            grid = 0.5 - 0.5 * np.cos(math.pi * u)
            breaks = np.stack([grid[:-1], grid[1:]], axis=1)

            def f(x, dl, dr, idx):
                om = (1.0 - breaks[idx, 1])[:, None] + dr
                return self.radial(x, om)

            pieces, _ = integrate_segments(f, breaks, tol=1e-14, rtol=1e-13)
            vals = np.concatenate([[0.0], np.cumsum(pieces)])
            table = (grid, vals)
            self._cache["cdf"] = table
        from scipy.interpolate import PchipInterpolator

        interp = self._cache.get("cdf_interp")
        if interp is None:
            interp = PchipInterpolator(*table)
            self._cache["cdf_interp"] = interp
        return np.clip(interp(r), 0.0, 1.0)


def density_at(rd: RadialDensity, r):
    """``mu(r) = (d/c_d) sum_k a_k r**(2k)`` inside the support, 0 beyond."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    R = rd.support_radius
    out = np.zeros_like(r)
    inside = r <= R
    if np.any(inside):
        out[inside] = rd.params.density_scale * rd.seq.power_sum(r[inside] / R) / R**rd.params.d
    return float(out[0]) if scalar else out


def radial_density(rd: RadialDensity, r):
    """``f(r) = d * sum_k a_k r**(2k+d-1)`` for ``0 <= r <= 1``."""
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise ValueError("radial density is defined on [0, 1]")
    d = rd.params.d
    return d * r ** (d - 1) * rd.seq.power_sum(r) if r.ndim else float(d * r ** (d - 1) * rd.seq.power_sum(r)[0])


def radial_cdf_function(rd: RadialDensity):
    """Callable ``r -> int_0^r f``."""
    return rd.cdf
