"""
Euler-Lagrange checks for radially symmetric Riesz equilibrium problems.

The Riesz potential ``U(y) = int |x - y|**(-s) dmu(x)`` of a radial density
is computed by three independent routes:

* series in ``|y|**2`` (inside) or ``|y|**-2`` (outside) whose coefficients
  are moments of the coefficient sequence,
* one-dimensional quadrature of the angular-reduced kernel,
* Monte Carlo with importance sampling in ``R^d``.

``el_check`` then evaluates ``(2/s) U + V - c`` on both sides of the unit
sphere.  The bare integral ``U`` never carries the ``2/s`` factor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import (
    PotentialSpec,
    _Component,
    _series_components,
    evaluate,
    potential_coulomb,
)
from .quadrature import QuadratureError, integrate_segments
from .sequences import (
    CoefficientSequence,
    InvalidMeasureError,
    RadialDensity,
    RieszParams,
)
from .specfun import DEFAULT_CONTROL, SeriesControl, gamma_ratio, hyp2f1

__all__ = [
    "ELReport",
    "riesz_potential_series",
    "riesz_potential_quadrature",
    "riesz_potential_montecarlo",
    "robin_constant",
    "el_check",
    "energy",
    "energy_report",
    "energy_closed_form",
    "energy_montecarlo",
    "default_outside_grid",
]


def _require_nonzero_s(params: RieszParams):
    if params.s == 0.0:
        raise ValueError("s = 0 (logarithmic kernel) is not supported; use s -> 0 limits")


# ---------------------------------------------------------------------------
# series route
# ---------------------------------------------------------------------------


def _outside_components(seq: CoefficientSequence, params: RieszParams):
    """Components of ``r**s U(r)`` as a series in ``r**-2``."""
    d, s = params.d, params.s
    h = 0.5 * (s - d)
    prov = seq.provenance
    if prov == "power_measure":
        alpha = seq.family["alpha"]
        return [_Component(0, d * seq.moment(d), (s / 2, h + 1), (1.0, d / 2 + 1 + alpha))]
    if prov == "power_potential":
        p = seq.family["p"]
        return [_Component(0, d * seq.moment(d), (s / 2, h + 1, s / 2 + p), (1.0, 1 + s / 2, s / 2 + p + 1))]
    if not seq.is_finite:
        raise ValueError("infinite sequences need a known family")
    comps = []
    for k, a in enumerate(seq.coeffs):
        if a != 0.0:
            comps.append(_Component(0, d * a / (2 * k + d), (s / 2, h + 1, k + d / 2), (d / 2, 1.0, k + d / 2 + 1)))
    return comps


def riesz_potential_series(
    seq: CoefficientSequence, params: RieszParams = None, r=0.0, ctrl: SeriesControl = DEFAULT_CONTROL
):
    """``int |x-y|**(-s) dmu(x)`` at ``|y| = r`` from the moment series.

    Inside (``r < 1``) the even power series in ``r`` is used, outside
    (``r >= 1``) the series in ``1/r``.  Both converge at ``r = 1``.
    """
    params = seq.params if params is None else params
    _require_nonzero_s(params)
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    d, s = params.d, params.s
    out = np.empty_like(r)
    inside = r < 1.0
    if np.any(inside):
        ri = r[inside]
        base = d * seq.moment(d - s)
        if params.is_coulomb:
            v = potential_coulomb(seq, d, ri)
        else:
            v = sum(c.value(ri * ri) for c in _series_components(seq, params))
        # U = d * m(d-s) - (s/2) V
        out[inside] = base - 0.5 * s * np.asarray(v)
    if np.any(~inside):
        ro = r[~inside]
        w = 1.0 / (ro * ro)
        acc = np.zeros_like(ro)
        for c in _outside_components(seq, params):
            acc += c.value(w)
        out[~inside] = acc * ro ** (-s)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# quadrature route
# ---------------------------------------------------------------------------


def _kernel_fh(params, y, r_minus_y_abs, r):
    """Angular-reduced kernel ``(y+r)**-s 2F1(s/2, (d-1)/2; d-1; 4ry/(y+r)**2)``."""
    d, s = params.d, params.s
    tot = y + r
    with np.errstate(invalid="ignore", divide="ignore"):
        zc = np.where(tot > 0, (r_minus_y_abs / tot) ** 2, 1.0)
    shape = zc.shape
    zc = zc.ravel()
    val = np.zeros_like(zc)
    ok = zc > 0 if s >= d - 1 else np.ones(zc.shape, bool)
    if np.any(ok):
        val[ok] = hyp2f1(s / 2, (d - 1) / 2, d - 1, None, zc=zc[ok])
    with np.errstate(divide="ignore", over="ignore"):
        # r = y = 0 is a single node of zero weight
        return np.where(tot > 0, val.reshape(shape) * tot ** (-s), 0.0)


def _kernel_1d(params, y, r_minus_y_abs, r):
    s = params.s
    with np.errstate(divide="ignore"):
        near = np.where(r_minus_y_abs > 0, r_minus_y_abs ** (-s), 0.0)
        far = np.where(r + y > 0, (r + y) ** (-s), 0.0)
    return 0.5 * (near + far)


def _breaks_for(y: float) -> list:
    pts = [0.0, 1.0]
    if 0 < y < 1:
        pts.append(y)
    if 1 < y < 1.25:
        # grade towards the nearly singular edge
        gap = y - 1.0
        pts += [1.0 - gap * 4.0**j for j in range(0, 6) if gap * 4.0**j < 1.0]
    return sorted(set(pts))


def riesz_potential_quadrature(rd: RadialDensity, r=0.0, tol: float = 1e-10):
    """``int |x-y|**(-s) dmu(x)`` at ``|y| = r`` by reduced one-dimensional quadrature.

    ``d >= 2`` uses the Funk-Hecke reduction with a Gauss hypergeometric
    kernel; ``d = 1`` integrates ``|x-y|**-s`` directly.  The integration
    interval is split at the coincidence radius.

    Raises
    ------
    QuadratureError
        If ``tol`` (absolute or relative) is not reached.
    """
    params = rd.params
    _require_nonzero_s(params)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    kernel = _kernel_1d if params.d == 1 else _kernel_fh
    out = np.empty_like(r)
    for i, y in enumerate(map(float, r)):
        pts = _breaks_for(y)
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):

            def f(x, dl, dr, idx, a=a, b=b, y=y):
                # exact distances to the coincidence radius and to the edge
                if b == y:
                    gy = dr
                elif a == y:
                    gy = dl
                else:
                    gy = np.abs(x - y)
                om = (1.0 - b) + dr
                with np.errstate(invalid="ignore", over="ignore"):
                    val = kernel(params, y, gy, x) * rd.radial(x, om)
                # overflowing kernel values only occur at zero-weight end nodes
                return np.where(np.isfinite(val), val, 0.0)

            seg, _ = integrate_segments(f, np.array([[a, b]]), tol=tol, rtol=tol, max_level=10)
            total += float(seg[0])
        out[i] = total
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# Monte Carlo route
# ---------------------------------------------------------------------------

_MC_BLOCK = 4096


def _unit_vectors(rng, n, d):
    if d == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class _Proposal:
    """Mixture of a Beta-ball law and a ``|x-y|**-gamma`` law around ``y``."""

    d: int
    y: np.ndarray
    edge: float
    gamma: float
    weight_local: float
    rho_max: float = 2.0

    def sample(self, rng, n):
        d = self.d
        local = rng.random(n) < self.weight_local
        x = np.empty((n, d))
        nb = int(np.count_nonzero(~local))
        if nb:
            r2 = rng.beta(d / 2, self.edge + 1.0, size=nb)
            x[~local] = np.sqrt(r2)[:, None] * _unit_vectors(rng, nb, d)
        nl = n - nb
        if nl:
            rho = self.rho_max * rng.random(nl) ** (1.0 / (d - self.gamma))
            x[local] = self.y[None, :] + rho[:, None] * _unit_vectors(rng, nl, d)
        return x

    def density(self, x):
        d = self.d
        c_d = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
        rr = np.linalg.norm(x, axis=1)
        ball = np.zeros(x.shape[0])
        inside = rr < 1.0
        norm = gamma_ratio([d / 2 + self.edge + 1], [self.edge + 1]) / math.pi ** (d / 2)
        ball[inside] = norm * ((1 - rr[inside]) * (1 + rr[inside])) ** self.edge
        dist = np.linalg.norm(x - self.y[None, :], axis=1)
        loc = np.zeros_like(ball)
        near = (dist < self.rho_max) & (dist > 0)
        loc[near] = (d - self.gamma) / (c_d * self.rho_max ** (d - self.gamma)) * dist[near] ** (-self.gamma)
        return (1 - self.weight_local) * ball + self.weight_local * loc


def _block_rng(seed: int, block: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),)))


def _profile_at(rd: RadialDensity, x):
    rr = np.linalg.norm(x, axis=1)
    out = np.zeros(rr.shape)
    inside = rr < 1.0
    if np.any(inside):
        with np.errstate(all="ignore"):
            out[inside] = rd.profile(rr[inside])
    return out


def riesz_potential_montecarlo(rd: RadialDensity, point, n_samples: int, seed: int = 0):
    """Importance-sampled ``int |x-y|**(-s) dmu(x)`` and its standard error.

    Samples are drawn in blocks of fixed size, each from its own seeded
    stream, so the result depends only on ``(seed, n_samples)``.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    params = rd.params
    d, s = params.d, params.s
    y = np.atleast_1d(np.asarray(point, dtype=float))
    if y.size != d:
        raise ValueError(f"point must have {d} coordinates")
    edge = min(rd.edge_exponent, 0.0)
    singular = s > 0
    prop = _Proposal(d, y, edge, 0.5 * (s + d), 0.3 if singular else 0.0)
    vals = []
    for b in range(0, (n_samples + _MC_BLOCK - 1) // _MC_BLOCK):
        n = min(_MC_BLOCK, n_samples - b * _MC_BLOCK)
        rng = _block_rng(seed, b)
        x = prop.sample(rng, n)
        q = prop.density(x)
        mu = _profile_at(rd, x)
        dist = np.linalg.norm(x - y[None, :], axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(mu > 0, dist ** (-s) * mu / q, 0.0)
        vals.append(w)
    w = np.concatenate(vals)
    return float(np.mean(w)), float(np.std(w, ddof=1) / math.sqrt(w.size)) if w.size > 1 else math.inf


# ---------------------------------------------------------------------------
# Robin constant, EL report, energies
# ---------------------------------------------------------------------------


def robin_constant(seq: CoefficientSequence, params: RieszParams = None) -> float:
    """``c = (2d/s) sum_k a_k / (2k + d - s)``."""
    params = seq.params if params is None else params
    _require_nonzero_s(params)
    return 2.0 * params.d / params.s * seq.moment(params.d - params.s)


def default_outside_grid(n: int = 64, r_max: float = 8.0) -> np.ndarray:
    return np.geomspace(1.0, r_max, n)


@dataclass
class ELReport:
    """Residuals and margins of the Euler-Lagrange conditions."""

    robin_constant: float
    equality_residuals: list
    inequality_margins: list
    min_margin: float
    energy: float
    methods_used: set
    method_disagreement: float
    outside_checked: bool = True
    notes: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((abs(v) for _, v in self.equality_residuals), default=0.0)

    @property
    def violated(self) -> bool:
        """Definite violation of the inequality somewhere on the grid."""
        return self.outside_checked and self.min_margin < 0

    def to_dict(self):
        return {
            "robin_constant": self.robin_constant,
            "equality_residuals": [[float(r), float(v)] for r, v in self.equality_residuals],
            "inequality_margins": [[float(r), float(v)] for r, v in self.inequality_margins],
            # no outside scan leaves an infinite margin; JSON has no infinity
            "min_margin": self.min_margin if math.isfinite(self.min_margin) else None,
            "max_residual": self.max_residual,
            "energy": self.energy,
            "methods_used": sorted(self.methods_used),
            "method_disagreement": self.method_disagreement,
            "outside_checked": self.outside_checked,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "ELReport":
        mm = obj["min_margin"]
        return cls(
            robin_constant=obj["robin_constant"],
            equality_residuals=[tuple(p) for p in obj["equality_residuals"]],
            inequality_margins=[tuple(p) for p in obj["inequality_margins"]],
            min_margin=math.inf if mm is None else mm,
            energy=obj["energy"],
            methods_used=set(obj["methods_used"]),
            method_disagreement=obj["method_disagreement"],
            outside_checked=obj["outside_checked"],
            notes=list(obj["notes"]),
        )

    def passed(self, tol: float) -> bool:
        """Equality within ``tol`` inside and inequality down to ``-tol`` outside."""
        ok = self.max_residual <= tol
        return ok and (not self.outside_checked or self.min_margin >= -tol)

    def csv_rows(self):
        """``(kind, r, value)`` rows for plotting."""
        rows = [("residual", r, v) for r, v in self.equality_residuals]
        rows += [("margin", r, v) for r, v in self.inequality_margins]
        return rows


def el_check(
    rd: RadialDensity,
    spec: PotentialSpec,
    inside_grid=None,
    outside_grid=None,
    tol: float = 1e-8,
    refine: bool = True,
) -> ELReport:
    """Evaluate ``(2/s) U + V - c`` inside (residual) and outside (margin) the ball.

    Inside values of ``U`` come from quadrature and are compared with the
    series; outside values come from the series and are spot-checked by
    quadrature.  With a hard wall the outside scan is skipped.
    """
    params = rd.params
    if spec.params.d != params.d or abs(spec.params.s - params.s) > 0:
        raise ValueError("density and potential use different (d, s)")
    if not rd.seq.nonnegative:
        raise InvalidMeasureError("sequence does not define a nonnegative density")
    _require_nonzero_s(params)
    s = params.s
    seq = rd.seq
    c = robin_constant(seq, params)
    inside = np.asarray(np.linspace(0.1, 0.9, 9) if inside_grid is None else inside_grid, dtype=float)
    u_quad = np.atleast_1d(riesz_potential_quadrature(rd, inside, tol=min(tol, 1e-10)))
    u_ser = np.atleast_1d(riesz_potential_series(seq, params, inside))
    v_in = evaluate(spec, inside)
    residual = 2.0 / s * u_quad + v_in - c
    disagreement = float(np.max(np.abs(u_quad - u_ser))) if inside.size else 0.0
    notes = []
    margins = []
    min_margin = math.inf
    checked = not spec.hard_wall
    if checked:
        grid = np.asarray(default_outside_grid() if outside_grid is None else outside_grid, dtype=float)

        def margin_at(g):
            return 2.0 / s * np.atleast_1d(riesz_potential_series(seq, params, g)) + evaluate(spec, g) - c

        m = margin_at(grid)
        pairs = list(zip(grid, m))
        if refine and grid.size > 2:
            i = int(np.argmin(m))
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
            fine = np.linspace(lo, hi, 17)[1:-1]
            pairs += list(zip(fine, margin_at(fine)))
        pairs.sort()
        margins = [(float(r), float(v)) for r, v in pairs]
        min_margin = min(v for _, v in margins)
        # spot check of the outside series against quadrature
        probe = np.array([grid[0], grid[len(grid) // 2], grid[-1]])
        uq = np.atleast_1d(riesz_potential_quadrature(rd, probe, tol=min(tol, 1e-10)))
        us = np.atleast_1d(riesz_potential_series(seq, params, probe))
        disagreement = max(disagreement, float(np.max(np.abs(uq - us))))
    else:
        notes.append("hard wall: inequality trivially satisfied outside the ball")
    return ELReport(
        robin_constant=c,
        equality_residuals=[(float(r), float(v)) for r, v in zip(inside, residual)],
        inequality_margins=margins,
        min_margin=float(min_margin),
        energy=energy(rd, spec),
        methods_used={"series", "quadrature"},
        method_disagreement=disagreement,
        outside_checked=checked,
        notes=notes,
    )


def _integral_v_dmu(rd: RadialDensity, spec: PotentialSpec, tol=1e-12) -> float:
    def f(x, dl, dr, idx):
        om = dr
        return evaluate(spec, x.ravel()).reshape(x.shape) * rd.radial(x, om)

    val, _ = integrate_segments(f, np.array([[0.0, 1.0]]), tol=tol, rtol=tol, max_level=10)
    return float(val[0])


def energy(rd: RadialDensity, spec: PotentialSpec) -> float:
    """``I_V[mu] = c/2 + (1/2) int V dmu``."""
    c = robin_constant(rd.seq, rd.params)
    return 0.5 * c + 0.5 * _integral_v_dmu(rd, spec)


def energy_closed_form(rd: RadialDensity, spec: PotentialSpec):
    """Closed-form energy when ``(rd, spec)`` is a known pair, else ``None``."""
    params = rd.params
    d, s, t = params.d, params.s, params.t
    seq = rd.seq
    if spec.kind == "pure_power" and seq.provenance == "power_potential" and seq.family["p"] == spec.p:
        p = spec.p
        return gamma_ratio([t, s / 2], [d / 2]) * (2 * p + s) ** 2 / (2 * p * (4 * p + s))
    if spec.kind == "soft_edge_poly" and seq.provenance == "power_measure":
        m = spec.m
        if abs(seq.family["alpha"] - (0.5 * (s - d) + 2 * m + 1)) > 1e-12:
            return None
        n = 2 * m + 1
        acc = 0.0
        for k in range(1, n + 1):
            acc += (
                (-1) ** (k + 1)
                / (math.factorial(k) * math.factorial(n - k))
                * gamma_ratio([s / 2 + k, s / 2 + n + 1], [s / 2 + 1, s / 2 + k + n + 1])
            )
        pre = gamma_ratio([t, n + 1 + s / 2], [d / 2])
        return pre * (1.0 / (math.factorial(n) * s) + 0.5 * acc)
    return None


def energy_report(rd: RadialDensity, spec: PotentialSpec) -> dict:
    """Energy by the Robin-constant route, plus the closed form when available."""
    e = energy(rd, spec)
    closed = energy_closed_form(rd, spec)
    return {
        "energy": e,
        "closed_form": closed,
        "discrepancy": None if closed is None else abs(e - closed),
    }


def energy_montecarlo(rd: RadialDensity, spec: PotentialSpec, n_samples: int, seed: int = 0):
    """Energy functional from its double-integral definition by Monte Carlo.

    Independent pairs are drawn from a Beta-ball proposal; the pair term has
    finite variance when ``2s < d``.
    """
    if n_samples <= 1:
        raise ValueError("n_samples must exceed 1")
    params = rd.params
    d, s = params.d, params.s
    _require_nonzero_s(params)
    edge = min(rd.edge_exponent, 0.0)
    prop = _Proposal(d, np.zeros(d), edge, 0.0, 0.0)
    vals = []
    for b in range(0, (n_samples + _MC_BLOCK - 1) // _MC_BLOCK):
        n = min(_MC_BLOCK, n_samples - b * _MC_BLOCK)
        rng = _block_rng(seed, b)
        x = prop.sample(rng, n)
        y = prop.sample(rng, n)
        wx = _profile_at(rd, x) / prop.density(x)
        wy = _profile_at(rd, y) / prop.density(y)
        dist = np.linalg.norm(x - y, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            pair = np.where(dist > 0, dist ** (-s) / s, 0.0) * wx * wy
        vals.append(pair + 0.5 * _weighted_v(spec, x, wx) + 0.5 * _weighted_v(spec, y, wy))
    w = np.concatenate(vals)
    return float(np.mean(w)), float(np.std(w, ddof=1) / math.sqrt(w.size))


def _weighted_v(spec, x, w):
    out = np.zeros(x.shape[0])
    live = w > 0
    if np.any(live):
        out[live] = evaluate(spec, np.linalg.norm(x[live], axis=1)) * w[live]
    return out
