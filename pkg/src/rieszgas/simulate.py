"""
Small-N particle minimisation of the discrete Riesz Hamiltonian

    H(X) = sum_{i != j} g(x_i - x_j) + N sum_i V(x_i),
    g(x) = |x|**(-s) / s  (s != 0),  -log|x|  (s = 0),

and comparison of the resulting radial statistics with a predicted
equilibrium density.  The ordered double sum counts every pair twice, so
the empirical measure of a minimiser approaches the equilibrium measure of
``V`` as ``N`` grows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .potentials import PotentialSpec, evaluate, evaluate_derivative
from .sequences import RadialDensity, RieszParams

__all__ = [
    "CoincidentPointsError",
    "InfinitePotentialError",
    "ParticleConfiguration",
    "Schedule",
    "MinimizeResult",
    "hamiltonian",
    "gradient",
    "project",
    "projected_gradient",
    "minimize",
    "radial_cdf",
    "ks_distance",
    "sample_from_density",
    "random_start",
    "two_particle_log_oracle",
    "save_run",
]

MAX_N = 5_000


class CoincidentPointsError(ValueError):
    """Two particles share a position; the kernel is singular there."""


class InfinitePotentialError(ValueError):
    """A particle violates a hard constraint, so ``V = +inf``."""


@dataclass
class ParticleConfiguration:
    """``N`` particles in ``R^d`` under a radial potential.

    ``potential=None`` means ``V = 0``.  ``halfspace_a`` adds the constraint
    ``x_0 >= a`` on the first coordinate; the ball constraint comes from
    ``potential.hard_wall``.
    """

    positions: np.ndarray
    params: RieszParams
    potential: Optional[PotentialSpec] = None
    halfspace_a: Optional[float] = None
    energy_cache: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[1] != self.params.d:
            raise ValueError(f"positions must have shape (N, {self.params.d})")
        if x.shape[0] > MAX_N:
            raise ValueError(f"N={x.shape[0]} exceeds the cap of {MAX_N}")
        self.positions = x

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    @property
    def hard_wall(self) -> bool:
        return self.potential is not None and self.potential.hard_wall

    def with_positions(self, x) -> "ParticleConfiguration":
        return replace(self, positions=np.array(x, dtype=float), energy_cache=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{k}" for k in range(self.params.d)])
        for row in self.positions:
            w.writerow(["%.17g" % v for v in row])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "N": self.N,
            "d": self.params.d,
            "s": self.params.s,
            "potential": None if self.potential is None else self.potential.to_dict(),
            "halfspace_a": self.halfspace_a,
            "energy": self.energy_cache,
        }


@dataclass(frozen=True)
class Schedule:
    """Descent and optional annealing controls.

    ``anneal`` is ``{"beta_sequence": [...], "steps_per_beta": int, "seed": int}``.
    """

    max_iters: int = 5000
    step_init: float = 1e-3
    backtrack: float = 0.5
    grad_tol: float = 1e-8
    armijo: float = 1e-4
    anneal: Optional[dict] = None

    def __post_init__(self):
        if not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")


# ---------------------------------------------------------------------------
# energy and forces
# ---------------------------------------------------------------------------


def _pair_geometry(x):
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, np.inf)
    if np.any(dist == 0):
        raise CoincidentPointsError("two particles coincide")
    return diff, dist


def _check_feasible(cfg: ParticleConfiguration, x):
    if cfg.hard_wall and np.any(np.linalg.norm(x, axis=1) > 1.0):
        raise InfinitePotentialError("a particle lies outside the hard wall")
    if cfg.halfspace_a is not None and np.any(x[:, 0] < cfg.halfspace_a):
        raise InfinitePotentialError("a particle lies behind the half-space wall")


def _external(cfg: ParticleConfiguration, x) -> float:
    if cfg.potential is None:
        return 0.0
    return float(np.sum(evaluate(cfg.potential, np.linalg.norm(x, axis=1))))


def _hamiltonian_at(cfg: ParticleConfiguration, x) -> float:
    _check_feasible(cfg, x)
    _, dist = _pair_geometry(x)
    s = cfg.params.s
    iu = np.triu_indices(x.shape[0], 1)
    r = dist[iu]
    pair = -np.sum(np.log(r)) if s == 0 else np.sum(r ** (-s)) / s
    return 2.0 * float(pair) + x.shape[0] * _external(cfg, x)


def hamiltonian(cfg: ParticleConfiguration) -> float:
    """Exact ``H(X)``; the ordered pair sum is twice the unordered one."""
    return _hamiltonian_at(cfg, cfg.positions)


def _gradient_at(cfg: ParticleConfiguration, x) -> np.ndarray:
    diff, dist = _pair_geometry(x)
    s = cfg.params.s
    w = dist ** (-s - 2.0)
    g = -2.0 * np.einsum("ij,ijk->ik", w, diff)
    if cfg.potential is not None:
        r = np.linalg.norm(x, axis=1)
        dv = np.atleast_1d(evaluate_derivative(cfg.potential, np.minimum(r, 1.0) if cfg.hard_wall else r))
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[:, None] > 0, x / r[:, None], 0.0)
        g += x.shape[0] * dv[:, None] * unit
    return g


def gradient(cfg: ParticleConfiguration) -> np.ndarray:
    """``dH/dx_i``; the hard wall is handled by projection, not here."""
    return _gradient_at(cfg, cfg.positions)


def project(cfg: ParticleConfiguration, x) -> np.ndarray:
    """Euclidean projection onto the feasible set (ball and/or half-space)."""
    x = np.array(x, dtype=float)
    if cfg.hard_wall:
        r = np.linalg.norm(x, axis=1)
        out = r > 1.0
        x[out] /= r[out, None]
        # rounding can leave |x| one ulp above 1
        over = np.linalg.norm(x, axis=1) > 1.0
        x[over] *= 1.0 - 2.0 * np.finfo(float).eps
    if cfg.halfspace_a is not None:
        x[:, 0] = np.maximum(x[:, 0], cfg.halfspace_a)
    return x


def projected_gradient(cfg: ParticleConfiguration, x, g) -> np.ndarray:
    """Gradient with outward pushes against active constraints removed."""
    g = np.array(g, dtype=float)
    if cfg.hard_wall:
        r = np.linalg.norm(x, axis=1)
        on = r >= 1.0 - 1e-15
        if np.any(on):
            n = x[on] / r[on, None]
            gn = np.einsum("ij,ij->i", g[on], n)
            push = gn < 0
            g_on = g[on]
            g_on[push] -= gn[push, None] * n[push]
            g[on] = g_on
    if cfg.halfspace_a is not None:
        on = (x[:, 0] <= cfg.halfspace_a) & (g[:, 0] > 0)
        g[on, 0] = 0.0
    return g


# ---------------------------------------------------------------------------
# minimisation
# ---------------------------------------------------------------------------


@dataclass
class MinimizeResult:
    config: ParticleConfiguration
    energies: list
    grad_norm: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        meta = self.config.metadata()
        meta.update(
            grad_norm=self.grad_norm,
            iterations=self.iterations,
            converged=self.converged,
            energies=list(self.energies),
        )
        return meta


def _anneal(cfg: ParticleConfiguration, x, sched: Schedule):
    """Seeded projected Langevin sweeps at increasing inverse temperature."""
    spec = sched.anneal
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    steps = int(spec.get("steps_per_beta", 100))
    N = x.shape[0]
    eta = sched.step_init / N
    for beta in spec.get("beta_sequence", []):
        for _ in range(steps):
            g = _gradient_at(cfg, x)
            noise = rng.standard_normal(x.shape)
            trial = project(cfg, x - eta * g + math.sqrt(2 * eta / beta) * noise)
            try:
                _pair_geometry(trial)
            except CoincidentPointsError:
                continue
            x = trial
    return x


def minimize(cfg: ParticleConfiguration, sched: Schedule = Schedule()) -> MinimizeResult:
    """Projected gradient descent with Barzilai-Borwein trial steps.

    Every accepted step passes an Armijo test, so the recorded energies never
    increase.  Stops when the projected gradient norm drops below
    ``sched.grad_tol`` or after ``sched.max_iters`` iterations.
    """
    x = project(cfg, cfg.positions)
    if sched.anneal:
        x = _anneal(cfg, x, sched)
    H = _hamiltonian_at(cfg, x)
    g = _gradient_at(cfg, x)
    pg = projected_gradient(cfg, x, g)
    energies = [H]
    step = sched.step_init
    it = 0
    gnorm = float(np.linalg.norm(pg))
    while it < sched.max_iters and gnorm > sched.grad_tol:
        it += 1
        accepted = False
        for _ in range(60):
            trial = project(cfg, x - step * g)
            delta = trial - x
            try:
                H_new = _hamiltonian_at(cfg, trial)
            except CoincidentPointsError:
                H_new = math.inf
            if H_new <= H + sched.armijo * float(np.sum(g * delta)):
                accepted = True
                break
            step *= sched.backtrack
        if not accepted or not np.any(delta):
            break
        g_new = _gradient_at(cfg, trial)
        dg = g_new - g
        # BB1 step from the last displacement; fall back to growth if curvature is not positive
        curv = float(np.sum(delta * dg))
        step = float(np.sum(delta * delta)) / curv if curv > 0 else step * 2.0
        x, g, H = trial, g_new, H_new
        energies.append(H)
        pg = projected_gradient(cfg, x, g)
        gnorm = float(np.linalg.norm(pg))
    out = cfg.with_positions(x)
    out.energy_cache = H
    return MinimizeResult(out, energies, gnorm, it, gnorm <= sched.grad_tol)


def random_start(N: int, params: RieszParams, seed: int = 0, radius: float = 1.0) -> np.ndarray:
    """``N`` points uniform in the ball of the given radius, seeded."""
    rng = np.random.default_rng(seed)
    d = params.d
    v = rng.standard_normal((N, d))
    v /= np.linalg.norm(v, axis=1)[:, None]
    r = radius * rng.random(N) ** (1.0 / d)
    return v * r[:, None]


# ---------------------------------------------------------------------------
# comparison with equilibrium densities
# ---------------------------------------------------------------------------


def ks_distance(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic of ``samples`` against ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def radial_cdf(cfg: ParticleConfiguration, predicted: RadialDensity) -> dict:
    """KS distance between the empirical law of ``|x_i|`` and the predicted radial CDF."""
    r = np.sort(np.linalg.norm(cfg.positions, axis=1))
    R = predicted.support_radius

    def cdf(u):
        return predicted.cdf(np.asarray(u) / R)

    return {"ks_distance": ks_distance(r, cdf), "empirical": r.tolist()}


def sample_from_density(rd: RadialDensity, n: int, seed: int = 0) -> np.ndarray:
    """``n`` points drawn from ``rd`` by inverse-CDF radii and uniform directions."""
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    R = rd.support_radius
    # tabulate the CDF once, bracket each u between grid nodes, then bisect
    # all brackets together (the CDF is monotone)
    grid = np.linspace(0.0, 1.0, 4097)
    F = rd.cdf(grid)
    j = np.clip(np.searchsorted(F, u), 1, grid.size - 1)
    lo, hi = grid[j - 1].copy(), grid[j].copy()
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        below = rd.cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    radii = 0.5 * (lo + hi)
    d = rd.params.d
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return R * radii[:, None] * v


def two_particle_log_oracle(c: float) -> float:
    """Half-separation ``x*`` of the stationary pair ``{-x*, x*}`` for ``s = 0``, ``d = 1``.

    With ``V = c x**2`` and ``N = 2`` the stationarity condition is
    ``dH/dx_1 = -1/x + 4 c x = 0``; solved by bracketing root search.
    """
    return brentq(lambda x: -1.0 / x + 4.0 * c * x, 1e-12, 1e6, xtol=1e-15, rtol=1e-15)


def save_run(result: MinimizeResult, csv_path, json_path):
    with open(csv_path, "w") as fh:
        fh.write(result.config.to_csv())
    with open(json_path, "w") as fh:
        json.dump(result.to_dict(), fh, sort_keys=True, indent=2)
