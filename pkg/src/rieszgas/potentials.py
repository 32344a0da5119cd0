"""
External potentials of radially symmetric Riesz gases.

The central construction maps a coefficient sequence ``a_k`` to the
potential

    V(r) = sum_{n>=1} Q_n M_n r**(2n),
    Q_n  = (2d/s) (s/2)_n ((s-d)/2+1)_n / ((d/2)_n n!),
    M_n  = sum_k a_k / (2n + s - 2k - d),

whose equilibrium measure (with a hard wall at ``|x| = 1``) is the density
of the sequence.  ``Q_n`` is written without the ``1/s`` so that ``s = 0``
needs no special case.  Every ``n``-series handled here has gamma-ratio
terms and is summed with :func:`gamma_power_series`, which completes the
tail near ``r = 1`` analytically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sequences import (
    CoefficientSequence,
    RieszParams,
    explicit_coeffs,
)
from .specfun import (
    DEFAULT_CONTROL,
    PoleError,
    SeriesControl,
    SpecialFunctionError,
    gamma_power_series,
    gamma_ratio,
    hyp2f1,
)

__all__ = [
    "DivergenceError",
    "PotentialSpec",
    "potential_from_coeffs",
    "potential_power_measure",
    "potential_coulomb",
    "soft_edge_coeffs",
    "pure_power_prefactor",
    "polynomial_power_measure_coeffs",
    "evaluate",
    "evaluate_derivative",
    "KINDS",
]

log = logging.getLogger(__name__)

KINDS = ("series", "power_measure_closed", "soft_edge_poly", "pure_power", "coulomb_series")
_INT_SNAP = 1e-12


class DivergenceError(SpecialFunctionError):
    """The potential series does not converge at the requested radius."""


# ---------------------------------------------------------------------------
# n-series components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Component:
    """``sum_{n >= n0} t_n x**n`` with gamma-ratio terms (``x = r**2``)."""

    n0: int
    t0: float
    num: tuple
    den: tuple

    @property
    def terminates(self) -> bool:
        return self.t0 == 0.0 or any(
            v <= 0 and float(v).is_integer() and -v >= self.n0 for v in self.num
        )

    def value(self, x):
        return gamma_power_series(self.n0, self.t0, self.num, self.den, x)

    def derivative(self):
        """Component of ``d/dx``: ``sum_m (m+1) t_{m+1} x**m``."""
        if self.n0 == 0:
            first = self.t0 * np.prod(self.num) / np.prod(self.den)
        else:
            first = self.n0 * self.t0
        return _Component(
            max(self.n0 - 1, 0),
            float(first),
            tuple(a + 1 for a in self.num) + (2.0,),
            tuple(b + 1 for b in self.den) + (1.0,),
        )


def _monomial(n: int, coef: float) -> _Component:
    """Single term ``coef * x**n`` (the ratio vanishes right after ``n``)."""
    return _Component(n, coef, (float(-n),), (1.0,))


def _sum_components(comps, r, deriv=False):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x = r * r
    out = np.zeros_like(r)
    beyond = x > 1.0
    for c in comps:
        if np.any(beyond) and not c.terminates:
            raise DivergenceError("potential series diverges for r > 1")
        if deriv:
            # dV/dr = 2 r dV/dx
            out += 2.0 * r * c.derivative().value(x)
        else:
            out += c.value(x)
    return out


def _q1(params: RieszParams) -> float:
    h = 0.5 * (params.s - params.d)
    return 2.0 * (h + 1.0)


def _qn(params: RieszParams, n: int) -> float:
    d, s = params.d, params.s
    h = 0.5 * (s - d)
    # (2d/s) (s/2)_n (h+1)_n / ((d/2)_n n!) with (s/2)_n / s = (s/2+1)_{n-1} / 2
    return d * gamma_ratio([s / 2 + n, h + 1 + n, d / 2], [s / 2 + 1, h + 1, d / 2 + n, n + 1.0])


def _series_components(seq: CoefficientSequence, params: RieszParams):
    d, s = params.d, params.s
    h = 0.5 * (s - d)
    prov = seq.provenance
    if prov == "power_measure":
        alpha = seq.family["alpha"]
        b = h - alpha
        if abs(b - round(b)) <= _INT_SNAP:
            b = float(round(b))
        m1 = -seq.moment(d - s - 2.0)
        return [_Component(1, _q1(params) * m1, (s / 2, b), (d / 2, 1.0))]
    if prov == "power_potential":
        p = seq.family["p"]
        mp = -seq.moment(d - s - 2.0 * p)
        return [_monomial(p, _qn(params, p) * mp)]
    if not seq.is_finite:
        raise ValueError("infinite sequences need a known family")
    comps = []
    for k, a in enumerate(seq.coeffs):
        if a == 0.0:
            continue
        den0 = 1.0 + h - k
        if abs(den0) < 1e-12:
            raise PoleError("inner denominator 2n + s - 2k - d vanishes")
        comps.append(
            _Component(1, _q1(params) * 0.5 * a / den0, (s / 2, h + 1, h - k), (d / 2, 1.0, h - k + 1))
        )
    return comps


def _coulomb_components(seq: CoefficientSequence, d: int):
    # V = (d/2) sum_n a_n x**(n+1) / ((n + d/2)(n + 1)); returned in powers of x
    if seq.provenance == "power_measure" and not seq.is_finite:
        alpha = seq.family["alpha"]
        a0 = float(seq.coeffs[0])
        return [_Component(1, a0, (-1.0 - alpha, d / 2 - 1.0), (d / 2, 1.0))]
    if not seq.is_finite:
        raise ValueError("Coulomb series supports finite or power-measure sequences")
    comps = []
    for n, a in enumerate(seq.coeffs):
        if a != 0.0:
            comps.append(_monomial(n + 1, 0.5 * d * a / ((n + d / 2) * (n + 1))))
    return comps


# ---------------------------------------------------------------------------
# public potentials
# ---------------------------------------------------------------------------


def potential_from_coeffs(
    seq: CoefficientSequence,
    params: Optional[RieszParams] = None,
    r=0.0,
    ctrl: SeriesControl = DEFAULT_CONTROL,
):
    """Potential whose hard-wall equilibrium measure is the density of ``seq``.

    For ``|s - (d-2)| <= 1e-8`` the Coulomb formula is used instead.  For
    ``r > 1`` only terminating (polynomial) series are accepted.
    """
    params = seq.params if params is None else params
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    if params.is_coulomb:
        log.info("s within 1e-8 of d-2: using the Coulomb potential")
        out = potential_coulomb(seq, params.d, r)
        return out
    if not seq.nonnegative:
        raise ValueError("sequence does not define a nonnegative density")
    out = _sum_components(_series_components(seq, params), r)
    return float(out[0]) if scalar else out


def potential_coulomb(seq: CoefficientSequence, d: int, r=0.0):
    """Coulomb-case potential ``(d/2) sum_n a_n r**(2n+2) / ((n+d/2)(n+1))``."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    out = _sum_components(_coulomb_components(seq, int(d)), r)
    return float(out[0]) if scalar else out


def _power_measure_prefactor(alpha: float, params: RieszParams) -> float:
    d, t = params.d, params.t
    return gamma_ratio([alpha + 1 + d / 2, t], [d / 2 + 1, alpha + 1 + t])


def polynomial_power_measure_coeffs(n: int, params: RieszParams) -> np.ndarray:
    """Coefficients of ``r**2, ..., r**(2n)`` in the polynomial potential with ``alpha = (s-d)/2 + n``."""
    d, s, t = params.d, params.s, params.t
    out = np.empty(n)
    for k in range(1, n + 1):
        out[k - 1] = (
            (-1) ** (k + 1)
            * gamma_ratio([s / 2 + n + 1, t, k + s / 2], [s / 2 + 1, k + d / 2])
            / (math.factorial(k) * math.factorial(n - k))
        )
    return out


def _polyval_even(b, r):
    """``sum_k b_k r**(2k)`` for ``k = 1..len(b)``."""
    x = r * r
    return x * np.polynomial.polynomial.polyval(x, b) if len(b) else np.zeros_like(r)


def _polyval_even_deriv(b, r):
    k = np.arange(1, len(b) + 1)
    x = r * r
    return 2.0 * r * np.polynomial.polynomial.polyval(x, b * k) if len(b) else np.zeros_like(r)


def potential_power_measure(alpha: float, params: RieszParams, r=0.0):
    """Closed-form potential of the power-type measure ``(1-|x|^2)**alpha``.

    Exact polynomial when ``alpha - (s-d)/2`` is a nonnegative integer.
    """
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    d, s = params.d, params.s
    h = 0.5 * (s - d)
    n = alpha - h
    if n > -_INT_SNAP and abs(n - round(n)) <= _INT_SNAP:
        out = _polyval_even(polynomial_power_measure_coeffs(int(round(n)), params), r)
        return float(out[0]) if scalar else out
    if np.any(r > 1):
        raise DivergenceError("non-polynomial power-measure potential is defined for r <= 1")
    pref = _power_measure_prefactor(alpha, params)
    if abs(s) >= 0.05:
        f = hyp2f1(s / 2, h - alpha, d / 2, None, zc=(1.0 - r) * (1.0 + r))
        out = -(d / s) * pref * (np.atleast_1d(f) - 1.0)
    else:
        # (2F1 - 1)/s as a series: no cancellation as s -> 0
        comp = _Component(1, 0.5 * (h - alpha) / (d / 2), (s / 2, h - alpha), (d / 2, 1.0))
        out = -d * pref * comp.value(r * r)
    return float(out[0]) if scalar else out


def soft_edge_coeffs(m: int, params: RieszParams) -> np.ndarray:
    """Coefficients ``b_1..b_{2m+1}`` of the soft-edge polynomial potential.

    Same as :func:`polynomial_power_measure_coeffs` with ``n = 2m+1``.
    """
    if int(m) != m or m < 0:
        raise ValueError("m must be a nonnegative integer")
    d, s, t = params.d, params.s, params.t
    m = int(m)
    n = 2 * m + 1
    out = np.empty(n)
    for k in range(1, n + 1):
        out[k - 1] = (
            (-1) ** (k + 1)
            * gamma_ratio([t, 2 * m + 2 + s / 2, s / 2 + k], [k + d / 2, s / 2 + 1])
            / (math.factorial(k) * math.factorial(n - k))
        )
    return out


def pure_power_prefactor(p: int, params: RieszParams) -> float:
    """``Gamma((d-s)/2) Gamma(s/2+p) / Gamma(d/2+p) * (2p+s)/(2p)``."""
    d, s, t = params.d, params.s, params.t
    return gamma_ratio([t, s / 2 + p], [d / 2 + p]) * (2 * p + s) / (2 * p)


# ---------------------------------------------------------------------------
# potential descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A radially symmetric external potential, optionally with a hard wall.

    Build with the class methods :meth:`series`, :meth:`power_measure`,
    :meth:`soft_edge`, :meth:`pure_power` and :meth:`coulomb`.
    """

    kind: str
    params: RieszParams
    hard_wall: bool = False
    seq: Optional[CoefficientSequence] = None
    alpha: Optional[float] = None
    m: Optional[int] = None
    p: Optional[int] = None
    coeffs: Optional[np.ndarray] = None
    prefactor: Optional[float] = None
    _poly: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "soft_edge_poly":
            ref = soft_edge_coeffs(self.m, self.params)
            if self.coeffs is None:
                object.__setattr__(self, "coeffs", ref)
            elif not np.allclose(self.coeffs, ref, rtol=1e-12, atol=0):
                raise ValueError("soft-edge coefficients inconsistent with (m, d, s)")
            object.__setattr__(self, "_poly", np.asarray(self.coeffs, dtype=float))
        elif self.kind == "pure_power":
            ref = pure_power_prefactor(self.p, self.params)
            if self.prefactor is None:
                object.__setattr__(self, "prefactor", ref)
            elif not math.isclose(self.prefactor, ref, rel_tol=1e-12):
                raise ValueError("pure-power prefactor inconsistent with (p, d, s)")
            poly = np.zeros(self.p)
            poly[-1] = self.prefactor
            object.__setattr__(self, "_poly", poly)
        elif self.kind == "power_measure_closed":
            if self.alpha is None or not self.alpha > -1:
                raise ValueError("power-measure potential needs alpha > -1")
        elif self.seq is None:
            raise ValueError(f"{self.kind} potential needs a coefficient sequence")

    # constructors
    @classmethod
    def series(cls, seq, hard_wall=False):
        return cls("series", seq.params, hard_wall, seq=seq)

    @classmethod
    def coulomb(cls, seq, hard_wall=False):
        return cls("coulomb_series", seq.params, hard_wall, seq=seq)

    @classmethod
    def power_measure(cls, alpha, params, hard_wall=False):
        return cls("power_measure_closed", params, hard_wall, alpha=float(alpha))

    @classmethod
    def soft_edge(cls, m, params, hard_wall=False):
        return cls("soft_edge_poly", params, hard_wall, m=int(m))

    @classmethod
    def pure_power(cls, p, params, hard_wall=False):
        return cls("pure_power", params, hard_wall, p=int(p))

    @property
    def is_polynomial(self) -> bool:
        return self._poly is not None

    @property
    def polynomial(self) -> Optional[np.ndarray]:
        """Coefficients of ``r**2, r**4, ...`` for polynomial kinds."""
        return None if self._poly is None else self._poly.copy()

    def to_dict(self):
        out = {"kind": self.kind, "d": self.params.d, "s": self.params.s, "hard_wall": bool(self.hard_wall)}
        if self.seq is not None:
            out["seq"] = self.seq.to_dict()
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.m is not None:
            out["m"] = self.m
            out["coeffs"] = [float(c) for c in self.coeffs]
        if self.p is not None:
            out["p"] = self.p
            out["prefactor"] = float(self.prefactor)
        return out

    @classmethod
    def from_dict(cls, obj):
        params = RieszParams(obj["d"], obj["s"], extended=obj["s"] < obj["d"] - 2)
        seq = CoefficientSequence.from_dict(obj["seq"]) if "seq" in obj else None
        coeffs = np.asarray(obj["coeffs"], dtype=float) if "coeffs" in obj else None
        return cls(
            obj["kind"],
            params,
            bool(obj.get("hard_wall", False)),
            seq=seq,
            alpha=obj.get("alpha"),
            m=obj.get("m"),
            p=obj.get("p"),
            coeffs=coeffs,
            prefactor=obj.get("prefactor"),
        )


def evaluate(spec: PotentialSpec, r):
    """``V(r)``; ``+inf`` outside the unit ball when the hard wall is on."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.full_like(r, np.inf)
    live = r <= 1.0 if spec.hard_wall else np.ones(r.shape, bool)
    rl = r[live]
    if rl.size:
        out[live] = _evaluate_live(spec, rl)
    return float(out[0]) if scalar else out


def _evaluate_live(spec, r):
    if spec.is_polynomial:
        return _polyval_even(spec._poly, r)
    if spec.kind == "power_measure_closed":
        return np.atleast_1d(potential_power_measure(spec.alpha, spec.params, r))
    if spec.kind == "coulomb_series":
        return np.atleast_1d(potential_coulomb(spec.seq, spec.params.d, r))
    return np.atleast_1d(potential_from_coeffs(spec.seq, spec.params, r))


def evaluate_derivative(spec: PotentialSpec, r):
    """``dV/dr``; zero outside the ball with a hard wall (the wall acts as a constraint)."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.zeros_like(r)
    live = r <= 1.0 if spec.hard_wall else np.ones(r.shape, bool)
    rl = r[live]
    if rl.size:
        if spec.is_polynomial:
            out[live] = _polyval_even_deriv(spec._poly, rl)
        else:
            out[live] = _sum_components(_spec_components(spec), rl, deriv=True)
    return float(out[0]) if scalar else out


def _spec_components(spec):
    params = spec.params
    if spec.kind == "coulomb_series" or (spec.kind == "series" and params.is_coulomb):
        return _coulomb_components(spec.seq, params.d)
    if spec.kind == "series":
        return _series_components(spec.seq, params)
    # closed power-measure potential as its Gauss series
    d, s = params.d, params.s
    h = 0.5 * (s - d)
    alpha = spec.alpha
    b = h - alpha
    if abs(b - round(b)) <= _INT_SNAP:
        b = float(round(b))
    t1 = -d * _power_measure_prefactor(alpha, params) * 0.5 * b / (d / 2)
    return [_Component(1, t1, (s / 2, b), (d / 2, 1.0))]


def as_explicit(coeffs, params: RieszParams) -> CoefficientSequence:
    """Convenience wrapper around :func:`explicit_coeffs`."""
    return explicit_coeffs(coeffs, params)
