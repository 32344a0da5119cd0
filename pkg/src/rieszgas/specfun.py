"""
Special functions used throughout the package.

Gamma-family helpers, the Gauss hypergeometric function 2F1 for real
arguments ``z <= 1``, unit-argument 3F2 and balanced hypergeometric sums.

Slowly convergent unit-argument series are summed directly up to a cutoff
``N`` and the remainder is obtained from the large-``n`` expansion of the
summand, which is a ratio of gamma functions.  The expansion is summed in
closed form with Hurwitz zeta functions, so tails decaying like
``n**(-1-sigma)`` with small ``sigma`` are handled to near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special as sc

__all__ = [
    "SeriesControl",
    "DEFAULT_CONTROL",
    "SpecialFunctionError",
    "PoleError",
    "NonConvergenceError",
    "BudgetExceededError",
    "log_gamma",
    "gamma_ratio",
    "digamma",
    "pochhammer",
    "hyp2f1",
    "hyp3f2_unit",
    "balanced_tail",
    "balanced_sum",
    "gamma_power_series",
    "riesz_identity_residual",
]


class SpecialFunctionError(ValueError):
    """Base class for errors raised by this module."""


class PoleError(SpecialFunctionError):
    """A gamma function or series denominator hit a pole."""


class NonConvergenceError(SpecialFunctionError):
    """The requested series does not converge."""


class BudgetExceededError(SpecialFunctionError):
    """The term budget ran out before the tolerance was met."""


@dataclass(frozen=True)
class SeriesControl:
    """Truncation budget and tolerances for infinite series."""

    max_terms: int = 10_000
    abs_tol: float = 1e-14
    rel_tol: float = 1e-12

    def __post_init__(self):
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValueError("max_terms must be a positive integer")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one tolerance must be positive")

    def tol(self, scale) -> np.ndarray:
        return np.maximum(self.abs_tol, self.rel_tol * np.abs(scale))


DEFAULT_CONTROL = SeriesControl()

# relative slack used when snapping numerically-zero quantities
_EPS = np.finfo(float).eps
# integer-excess band for the logarithmic 2F1 case
_LOG_CASE_BAND = 1e-8


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def log_gamma(x: float) -> tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign(Gamma(x)))``.

    Raises
    ------
    PoleError
        If ``x`` is a nonpositive integer.
    """
    x = float(x)
    if _is_nonpos_int(x):
        raise PoleError(f"Gamma has a pole at x={x}")
    val = math.lgamma(x)
    if x > 0:
        return val, 1
    return val, (1 if math.floor(x) % 2 == 0 else -1)


def gamma_ratio(num: Sequence[float], den: Sequence[float]) -> float:
    """prod Gamma(num) / prod Gamma(den), zero if a denominator is a pole."""
    for x in den:
        if _is_nonpos_int(x):
            return 0.0
    logv, sign = 0.0, 1
    for x in num:
        lv, sg = log_gamma(x)
        logv += lv
        sign *= sg
    for x in den:
        lv, sg = log_gamma(x)
        logv -= lv
        sign *= sg
    return sign * math.exp(logv)


def digamma(x):
    """Digamma function psi(x) = Gamma'(x)/Gamma(x)."""
    return sc.psi(x)


def pochhammer(x: float, n: int) -> float:
    """Rising factorial ``(x)_n`` as the finite product."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    out = 1.0
    for j in range(int(n)):
        out *= x + j
    return out


# ---------------------------------------------------------------------------
# Gauss hypergeometric function
# ---------------------------------------------------------------------------


def _series_2f1(a, b, c, z, ctrl: SeriesControl):
    """Direct Gauss series, vectorised over ``z`` with ``|z| < 1``."""
    term = np.ones_like(z)
    total = np.ones_like(z)
    az = np.abs(z)
    for n in range(ctrl.max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        term = term * ratio * z
        total = total + term
        q = np.maximum(np.abs(ratio) * az, az)
        if np.all(q < 1) and np.all(np.abs(term) * q / (1 - q) <= ctrl.tol(total)):
            return total
    raise BudgetExceededError("2F1 Gauss series exhausted the term budget")


def _poly_2f1(a, b, c, z, m: int):
    """Terminating series of degree ``m`` (exact finite sum)."""
    term = np.ones_like(z)
    total = np.ones_like(z)
    for n in range(m):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total = total + term
    return total


def _connection_2f1(a, b, c, zc, ctrl):
    """Expansion around ``z = 1`` for non-integer ``c-a-b``."""
    m = c - a - b
    out = np.zeros_like(zc)
    a1 = gamma_ratio([c, m], [c - a, c - b])
    if a1 != 0.0:
        out += a1 * _series_2f1(a, b, 1.0 - m, zc, ctrl)
    a2 = gamma_ratio([c, -m], [a, b])
    if a2 != 0.0:
        out += a2 * zc**m * _series_2f1(c - a, c - b, 1.0 + m, zc, ctrl)
    return out


def _log_case_2f1(a, b, mm: int, zc, ctrl):
    """Expansion around ``z = 1`` when ``c = a + b + mm`` with integer ``mm >= 0``.

    Logarithmic form with digamma terms; ``c`` is taken exactly as
    ``a + b + mm``.
    """
    c = a + b + mm
    out = np.zeros_like(zc)
    # finite part
    pre1 = gamma_ratio([c], [a + mm, b + mm])
    if pre1 != 0.0 and mm > 0:
        term = 1.0
        part = np.zeros_like(zc)
        for k in range(mm):
            part = part + term * math.factorial(mm - k - 1) * (-zc) ** k
            term *= (a + k) * (b + k) / (k + 1.0)
        out += pre1 * part
    shift_a = shift_b = False
    if mm == 0:
        # psi(a) = psi(a+1) - 1/a; the pole part combines with Gamma(a) into
        # Gamma(a+1), which stays finite when a is tiny
        shift_a = a != 0.0 and abs(a) < 0.5
        shift_b = b != 0.0 and abs(b) < 0.5
        if shift_a:
            out += gamma_ratio([c], [a + 1.0, b])
        if shift_b:
            out += gamma_ratio([c], [a, b + 1.0])
    pre2 = gamma_ratio([c], [a, b])
    if pre2 == 0.0:
        return out
    logz = np.log(zc)
    psi1 = float(sc.psi(1.0))
    psi2 = float(sc.psi(mm + 1.0))
    psi3 = float(sc.psi(a + 1.0 if shift_a else a + mm))
    psi4 = float(sc.psi(b + 1.0 if shift_b else b + mm))
    coef = 1.0 / math.factorial(mm)
    power = np.ones_like(zc)
    total = np.zeros_like(zc)
    for k in range(ctrl.max_terms):
        term = coef * power * (logz - psi1 - psi2 + psi3 + psi4)
        total = total + term
        if k > 2 and np.all(np.abs(term) <= ctrl.tol(total) * 1e-2):
            break
        coef *= (a + mm + k) * (b + mm + k) / ((k + 1.0) * (k + mm + 1.0))
        power = power * zc
        psi1 += 1.0 / (k + 1.0)
        psi2 += 1.0 / (k + mm + 1.0)
        if not (shift_a and k == 0):
            psi3 += 1.0 / (a + mm + k)
        if not (shift_b and k == 0):
            psi4 += 1.0 / (b + mm + k)
    else:
        raise BudgetExceededError("logarithmic 2F1 expansion exhausted the budget")
    out -= pre2 * (-zc) ** mm * total
    return out


def _near_one_2f1(a, b, c, zc, ctrl):
    m = c - a - b
    mr = round(m)
    if abs(m - mr) <= _LOG_CASE_BAND:
        if mr >= 0:
            return _log_case_2f1(a, b, int(mr), zc, ctrl)
        # Euler transform moves the excess to -m > 0
        return zc**m * _log_case_2f1(c - a, c - b, int(-mr), zc, ctrl)
    return _connection_2f1(a, b, c, zc, ctrl)


def _unit_interval_2f1(a, b, c, z, zc, ctrl):
    """2F1 for ``0 <= z < 1`` given both ``z`` and ``1 - z``."""
    out = np.empty_like(z)
    low = z <= 0.75
    if np.any(low):
        out[low] = _series_2f1(a, b, c, z[low], ctrl)
    if np.any(~low):
        out[~low] = _near_one_2f1(a, b, c, zc[~low], ctrl)
    return out


def _terminating_degree(a, b):
    degs = [int(-x) for x in (a, b) if _is_nonpos_int(x)]
    return min(degs) if degs else None


def hyp2f1(a, b, c, z, ctrl: SeriesControl = DEFAULT_CONTROL, *, zc=None):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real ``z <= 1``.

    Parameters
    ----------
    a, b, c : float
        Real parameters.
    z : float or array_like
        Argument(s), ``z <= 1`` unless the series terminates.
    ctrl : SeriesControl
        Term budget and tolerances.
    zc : float or array_like, optional
        ``1 - z`` supplied independently; keeps full relative precision
        when ``z`` is within rounding of 1.

    Notes
    -----
    Terminating series are summed exactly.  ``z = 1`` uses the Gauss sum,
    ``z < 0`` Pfaff's transformation, ``z`` close to 1 the connection
    formula, or its logarithmic limit when ``c - a - b`` is within
    ``1e-8`` of an integer.
    """
    a, b, c = float(a), float(b), float(c)
    if zc is None:
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=float)).copy()
        zc = 1.0 - z
    else:
        scalar = np.ndim(zc) == 0
        zc = np.atleast_1d(np.asarray(zc, dtype=float)).copy()
        z = 1.0 - zc

    m = _terminating_degree(a, b)
    if m is not None:
        if _is_nonpos_int(c) and -c < m:
            raise PoleError("c is a pole reached before the series terminates")
        out = _poly_2f1(a, b, c, z, m)
        return float(out[0]) if scalar else out
    if _is_nonpos_int(c):
        raise PoleError(f"2F1 parameter c={c} is a nonpositive integer")
    if np.any(zc < 0):
        raise SpecialFunctionError("2F1 requires z <= 1 for nonterminating series")

    out = np.empty_like(z)
    one = zc == 0
    if np.any(one):
        if c - a - b <= 0:
            raise NonConvergenceError("2F1 at z=1 diverges when c-a-b <= 0")
        out[one] = gamma_ratio([c, c - a - b], [c - a, c - b])
    neg = (z < 0) & ~one
    pos = ~neg & ~one
    if np.any(pos):
        out[pos] = _unit_interval_2f1(a, b, c, z[pos], zc[pos], ctrl)
    if np.any(neg):
        zn, zcn = z[neg], zc[neg]
        w = zn / (zn - 1.0)
        wc = 1.0 / zcn
        # prefer the Pfaff form that terminates, if there is one
        if _is_nonpos_int(c - a) and not _is_nonpos_int(c - b):
            aa, bb, expo = c - a, b, b
        else:
            aa, bb, expo = a, c - b, a
        mt = _terminating_degree(aa, bb)
        if mt is not None:
            inner = _poly_2f1(aa, bb, c, w, mt)
        else:
            inner = _unit_interval_2f1(aa, bb, c, w, wc, ctrl)
        out[neg] = zcn ** (-expo) * inner
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Balanced gamma-ratio series and their tails
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _bernoulli_numbers(n: int) -> np.ndarray:
    return np.asarray(sc.bernoulli(n), dtype=float)


def _bernoulli_poly(n: int, x: float) -> float:
    B = _bernoulli_numbers(n)
    return float(sum(math.comb(n, k) * B[k] * x ** (n - k) for k in range(n + 1)))


_TAIL_ORDER = 16


def _tail_coefficients(num, den, order=_TAIL_ORDER):
    """Coefficients ``c_j`` with ``t_n ~ C n**rho * sum_j c_j n**-j``."""
    g = np.zeros(order + 1)
    for k in range(1, order + 1):
        acc = sum(_bernoulli_poly(k + 1, x) for x in num)
        acc -= sum(_bernoulli_poly(k + 1, x) for x in den)
        g[k] = (-1) ** (k + 1) * acc / (k * (k + 1))
    # exponential of a power series
    c = np.zeros(order + 1)
    c[0] = 1.0
    for n in range(1, order + 1):
        c[n] = sum(k * g[k] * c[n - k] for k in range(1, n + 1)) / n
    return c


def tail_start(params: Sequence[float], minimum: int = 64) -> int:
    """Direct-summation cutoff that makes the tail expansion accurate."""
    big = max([abs(float(x)) for x in params] + [1.0])
    return int(max(minimum, math.ceil(10.0 * big) + 16))


def balanced_tail(num, den, n_start: int, t_start: float) -> float:
    """Sum ``sum_{n >= n_start} t_n`` of a balanced gamma-ratio term.

    The term is ``t_n = C prod Gamma(n + num) / prod Gamma(n + den)``
    (same number of gamma functions upstairs and downstairs), anchored by
    its value ``t_start`` at ``n = n_start``.
    """
    if len(num) != len(den):
        raise ValueError("balanced tails need equal numbers of parameters")
    if t_start == 0.0:
        return 0.0
    rho = float(sum(num) - sum(den))
    if rho >= -1.0:
        raise NonConvergenceError(f"series terms decay like n**{rho:.6g}")
    c = _tail_coefficients(tuple(num), tuple(den))
    j = np.arange(c.size)
    n0 = float(n_start)
    anchor = np.sum(c * n0 ** (rho - j))
    zetas = sc.zeta(j - rho, n0)
    return float(t_start / anchor * np.sum(c * zetas))


def balanced_sum(terms: np.ndarray, n0: int, num, den) -> float:
    """Sum a convergent series given its first terms and the term shape.

    ``terms[i]`` is the term of index ``n0 + i``; the last entry anchors
    the asymptotic tail and the preceding ones are summed directly.
    """
    terms = np.asarray(terms, dtype=float)
    n_last = n0 + terms.size - 1
    head = math.fsum(terms[:-1])
    return head + balanced_tail(num, den, n_last, float(terms[-1]))


def _ratio_terms(num, den, n0, n1, first):
    """Terms ``t_{n0}..t_{n1}`` of a gamma-ratio series from its first value."""
    n = np.arange(n0, n1, dtype=float)
    ratio = np.ones_like(n)
    for x in num:
        ratio = ratio * (n + x)
    for x in den:
        ratio = ratio / (n + x)
    out = np.empty(n1 - n0 + 1)
    out[0] = first
    out[1:] = first * np.cumprod(ratio)
    return out


def hyp3f2_unit(a1, a2, a3, b1, b2, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Generalized hypergeometric 3F2(a1, a2, a3; b1, b2; 1).

    Direct summation of the head with an asymptotic tail; exact finite sum
    when an upper parameter is a nonpositive integer.
    """
    ups = [float(a1), float(a2), float(a3)]
    lows = [float(b1), float(b2)]
    for b in lows:
        if _is_nonpos_int(b):
            raise PoleError(f"3F2 lower parameter {b} is a nonpositive integer")
    degs = [int(-x) for x in ups if _is_nonpos_int(x)]
    if degs:
        m = min(degs)
        total, term = 1.0, 1.0
        for n in range(m):
            term *= (ups[0] + n) * (ups[1] + n) * (ups[2] + n)
            term /= (lows[0] + n) * (lows[1] + n) * (n + 1.0)
            total += term
        return total
    excess = sum(lows) - sum(ups)
    if excess <= 0:
        raise NonConvergenceError("3F2 at unit argument needs b1+b2-a1-a2-a3 > 0")
    nmax = tail_start(ups + lows)
    if nmax > ctrl.max_terms:
        raise BudgetExceededError("3F2 head exceeds the term budget")
    terms = _ratio_terms(ups, lows + [1.0], 0, nmax, 1.0)
    return balanced_sum(terms, 0, ups, lows + [1.0])


def riesz_identity_residual(params, k: int, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Numerical value of a hypergeometric sum that vanishes identically.

    Evaluates
    ``sum_n T_n [1/(2n+2k+d) + 1/(2n-2k+s-d)]`` with
    ``T_n = Gamma(s/2+n) Gamma((s-d)/2+n+1) / (Gamma(d/2+n) n!)``
    for ``d - 2 < s < d``.  The exact value is zero, so the result measures
    the summation error.  The ``n = 0`` term is combined analytically, which
    also covers ``s = 0`` where ``Gamma(s/2)`` has a pole.
    """
    d, s = int(params.d), float(params.s)
    if not (d - 2 < s < d) or d < 1:
        raise ValueError("need d >= 1 and d-2 < s < d")
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    h = (s - d) / 2.0
    first = 2.0 * gamma_ratio([s / 2 + 1, h + 1], [d / 2]) / ((2 * k + d) * (s - d - 2 * k))
    base_num = [s / 2, h + 1]
    base_den = [d / 2, 1.0]
    t1 = gamma_ratio([s / 2 + 1, h + 2], [d / 2 + 1, 2.0])
    extra = [(k + d / 2, k + d / 2 + 1), (h - k, h - k + 1)]
    nmax = tail_start(base_num + base_den + [p for e in extra for p in e])
    if nmax > ctrl.max_terms:
        raise BudgetExceededError("identity head exceeds the term budget")
    T = _ratio_terms(base_num, base_den, 1, nmax, t1)
    n = np.arange(1, nmax + 1, dtype=float)
    total = first
    for lo, hi in extra:
        terms = 0.5 * T / (n + lo)
        total += balanced_sum(terms, 1, base_num + [lo], base_den + [hi])
    return total


# ---------------------------------------------------------------------------
# power series with gamma-ratio coefficients
# ---------------------------------------------------------------------------

_HEAD_CAP = 20_000
_DECAY_EXPONENT = 45.0  # x**N with N * log(1/x) >= this is negligible


def _terminating_index(num, n0):
    """First ``n >= n0`` with ``t_{n+1} = 0`` forced by a numerator parameter."""
    hits = [int(round(-x)) for x in num if _is_nonpos_int(x) and -x >= n0]
    return min(hits) if hits else None


def _em_damped_tail(mu, lam, n_start):
    """``sum_{n >= N} n**mu exp(-lam n)`` by Euler-Maclaurin (``0 < lam*N``, small lam)."""
    from .quadrature import tanh_sinh

    N = float(n_start)
    y = lam * N
    p = -mu

    # int_N^inf n**mu e^{-lam n} dn = N**(mu+1) int_0^1 exp(-y/tau) tau**(p-2) dtau
    def f(tau, dl, dr):
        with np.errstate(under="ignore", divide="ignore"):
            out = np.exp(-y / tau + (p - 2.0) * np.log(tau))
        return np.where(tau > 0, out, 0.0)

    integral = N ** (mu + 1) * float(tanh_sinh(f, 0.0, 1.0, tol=0.0, rtol=1e-13, raise_on_fail=False)[0][0])
    total = integral + 0.5 * N**mu * math.exp(-y)
    B = _bernoulli_numbers(16)
    for j in range(1, 8):
        q = 2 * j - 1
        deriv = 0.0
        fall = 1.0
        for i in range(q + 1):
            deriv += math.comb(q, i) * fall * N ** (mu - i) * (-lam) ** (q - i)
            fall *= mu - i
        total -= B[2 * j] / math.factorial(2 * j) * deriv * math.exp(-y)
    return total


def gamma_power_series(n0: int, t0: float, num, den, x, cap: int = _HEAD_CAP):
    """``sum_{n >= n0} t_n x**n`` for ``0 <= x <= 1`` and a gamma-ratio term.

    ``t_{n+1}/t_n = prod(n + num) / prod(n + den)`` with ``len(num) ==
    len(den)`` and ``t_{n0} = t0``.  Terminating series are summed exactly.
    At ``x = 1`` the series must converge; the tail then comes from the
    large-``n`` expansion.  For ``x < 1`` the series is summed directly until
    ``x**n`` is negligible, with an Euler-Maclaurin remainder when that would
    exceed ``cap`` terms.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    if t0 == 0.0 or x.size == 0:
        return out
    num = [float(v) for v in num]
    den = [float(v) for v in den]
    last = _terminating_index(num, n0)
    if last is not None:
        terms = _ratio_terms(num, den, n0, last, t0)
        powers = np.arange(n0, last + 1, dtype=float)
        return np.array([math.fsum(terms * xi**powers) for xi in x])
    rho = sum(num) - sum(den)
    n_tail = max(n0 + 1, tail_start(num + den))
    at_one = x >= 1.0
    if np.any(at_one):
        terms = _ratio_terms(num, den, n0, n_tail, t0)
        out[at_one] = balanced_sum(terms, n0, num, den)
    inner = ~at_one & (x > 0)
    if n0 == 0:
        out[x == 0] = t0
    if not np.any(inner):
        return out
    xi = x[inner]
    lam = -np.log(xi)
    need = np.ceil((_DECAY_EXPONENT + max(rho, 0.0) * 20.0) / lam)
    n_head = int(min(cap, max(n_tail, float(np.max(need)))))
    terms = _ratio_terms(num, den, n0, n0 + n_head, t0)
    n_idx = np.arange(n0, n0 + n_head + 1, dtype=float)
    vals = np.empty_like(xi)
    for i, (xv, lv, nv) in enumerate(zip(xi, lam, need)):
        m = int(min(nv, n_head))
        w = np.exp(-lv * n_idx[: m + 1])
        vals[i] = np.dot(terms[: m + 1], w)
        if nv > n_head:
            # remainder from the asymptotic shape of t_n
            c = _tail_coefficients(tuple(num), tuple(den))
            Nn = n0 + m + 1
            tN = terms[m] * np.prod([(n0 + m + a) for a in num]) / np.prod([(n0 + m + b) for b in den])
            anchor = np.sum(c * Nn ** (rho - np.arange(c.size)))
            amp = tN / anchor
            vals[i] += amp * sum(
                c[j] * _em_damped_tail(rho - j, lv, Nn) for j in range(c.size) if abs(c[j]) * Nn ** -j > 1e-17
            )
    out[inner] = vals
    return out
