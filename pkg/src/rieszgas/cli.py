"""
Command-line front end.

    rieszgas identity  --d 2 --s 1 --kmax 10
    rieszgas density   --family power-potential --d 2 --s 1 --p 3 --grid 200
    rieszgas potential --case soft-edge --d 3 --s 1.5 --m 1
    rieszgas verify    --case pure-power --d 2 --s 1 --p 2
    rieszgas energy    --case soft-edge --d 1 --s 0.5 --m 0
    rieszgas halfspace --d 1
    rieszgas simulate  --d 2 --s 1 --p 1 --N 100

Every flag may also be given in a JSON file passed with ``--config``; flags
on the command line win.  Exit status is 0 on success, 1 on any error (a
JSON error object goes to stderr) and 2 when ``verify`` finds a violated
Euler-Lagrange condition.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import el_verify, halfspace, potentials, sequences, simulate
from .specfun import riesz_identity_residual

__all__ = ["main", "build_parser", "run"]

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

COMMANDS = ("identity", "density", "potential", "verify", "energy", "halfspace", "simulate")

# hard defaults, applied after command-line flags and the config file
DEFAULTS = {
    "d": 2,
    "s": 1.0,
    "out": "-",
    "format": None,
    "seed": 0,
    "tol": None,
    "kmax": 10,
    "family": "power-measure",
    "case": "pure-power",
    "alpha": 0.0,
    "p": 1,
    "m": 0,
    "coeffs": None,
    "grid": 200,
    "rmax": 2.0,
    "hard_wall": False,
    "a": None,
    "beta": 2.0,
    "scan": False,
    "nt": 33,
    "nx": 61,
    "t_values": "0,0.3,0.7",
    "N": 100,
    "max_iters": 20000,
    "grad_tol": None,
    "anneal_betas": None,
    "steps_per_beta": 50,
}

# scalar reports default to JSON, tables to CSV
_DEFAULT_FORMAT = {
    "identity": "csv",
    "density": "csv",
    "potential": "csv",
    "verify": "json",
    "energy": "json",
    "halfspace": "json",
    "simulate": "json",
}


class CLIError(Exception):
    """Malformed command line or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def _global_flags(p):
    # defaults are None so that config-file values can fill the gaps
    p.add_argument("--d", type=int, default=None, help="dimension")
    p.add_argument("--s", type=float, default=None, help="Riesz exponent")
    p.add_argument("--out", default=None, help="output path, '-' for stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--config", default=None, help="JSON file with flag values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rieszgas", description="Riesz gas equilibrium measures and checks")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("identity", help="residuals of the vanishing hypergeometric sum")
    _global_flags(p)
    p.add_argument("--kmax", type=int, default=None)

    for name, helptext in (("density", "equilibrium density on a grid"),):
        p = sub.add_parser(name, help=helptext)
        _global_flags(p)
        p.add_argument("--family", choices=("power-measure", "power-potential", "explicit"), default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--p", type=int, default=None)
        p.add_argument("--coeffs", default=None, help="comma separated a_k")
        p.add_argument("--grid", type=int, default=None)

    for name, helptext in (
        ("potential", "external potential on a grid"),
        ("verify", "Euler-Lagrange check of a density/potential pair"),
        ("energy", "equilibrium energy"),
    ):
        p = sub.add_parser(name, help=helptext)
        _global_flags(p)
        p.add_argument("--case", choices=("soft-edge", "pure-power", "power-measure"), default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--p", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--hard-wall", dest="hard_wall", action="store_true", default=None)
        if name == "potential":
            p.add_argument("--grid", type=int, default=None)
            p.add_argument("--rmax", type=float, default=None)

    p = sub.add_parser("halfspace", help="Coulomb gas with a hard wall x_0 >= a")
    _global_flags(p)
    p.add_argument("--a", type=float, default=None, help="wall position (default: critical value)")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--scan", action="store_true", default=None)
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--t-values", dest="t_values", default=None, help="t values of CSV profile curves")
    p.add_argument("--grid", type=int, default=None)

    p = sub.add_parser("simulate", help="minimise the N-particle Hamiltonian")
    _global_flags(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--p", type=int, default=None, help="pure power degree of V")
    p.add_argument("--hard-wall", dest="hard_wall", action="store_true", default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--grad-tol", dest="grad_tol", type=float, default=None)
    p.add_argument("--anneal-betas", dest="anneal_betas", default=None, help="comma separated")
    p.add_argument("--steps-per-beta", dest="steps_per_beta", type=int, default=None)
    return parser


def _resolve(ns: argparse.Namespace) -> dict:
    """Merge command-line flags over the config file over hard defaults."""
    cfg = {}
    if ns.config:
        with open(ns.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise CLIError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = dict(DEFAULTS)
    out.update({k: v for k, v in cfg.items() if k in DEFAULTS})
    out.update({k: v for k, v in vars(ns).items() if v is not None and k not in ("config", "command")})
    out["command"] = ns.command
    if out["format"] is None:
        out["format"] = _DEFAULT_FORMAT[ns.command]
    return out


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


def _json_text(obj) -> str:
    return json.dumps(_json_safe(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _emit(cfg, text: str):
    if cfg["out"] in ("-", None):
        sys.stdout.write(text)
    else:
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _table_or_json(cfg, header, rows, extra=None):
    if cfg["format"] == "csv":
        return _csv_text(header, rows)
    obj = {"columns": list(header), "rows": [list(r) for r in rows]}
    if extra:
        obj.update(extra)
    return _json_text(obj)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _params(cfg) -> sequences.RieszParams:
    return sequences.RieszParams(int(cfg["d"]), float(cfg["s"]))


def _pair(cfg):
    """Density and potential for a named case."""
    params = _params(cfg)
    d, s = params.d, params.s
    hard = bool(cfg["hard_wall"])
    case = cfg["case"]
    if case == "soft-edge":
        m = int(cfg["m"])
        seq = sequences.power_measure_coeffs(0.5 * (s - d) + 2 * m + 1, params)
        spec = potentials.PotentialSpec.soft_edge(m, params, hard_wall=hard)
    elif case == "pure-power":
        seq = sequences.power_potential_coeffs(int(cfg["p"]), params)
        spec = potentials.PotentialSpec.pure_power(int(cfg["p"]), params, hard_wall=hard)
    elif case == "power-measure":
        alpha = float(cfg["alpha"])
        seq = sequences.power_measure_coeffs(alpha, params)
        spec = potentials.PotentialSpec.power_measure(alpha, params, hard_wall=hard)
    else:
        raise CLIError(f"unknown case {case!r}")
    return sequences.RadialDensity.of(seq), spec


def _cmd_identity(cfg):
    params = _params(cfg)
    rows = [(k, riesz_identity_residual(params, k)) for k in range(int(cfg["kmax"]) + 1)]
    return _table_or_json(cfg, ("k", "residual"), rows), EXIT_OK


def _density_seq(cfg):
    params = _params(cfg)
    fam = cfg["family"]
    if fam == "power-measure":
        return sequences.power_measure_coeffs(float(cfg["alpha"]), params)
    if fam == "power-potential":
        return sequences.power_potential_coeffs(int(cfg["p"]), params)
    if fam == "explicit":
        if not cfg["coeffs"]:
            raise CLIError("--family explicit needs --coeffs")
        raw = cfg["coeffs"]
        vals = [float(v) for v in (raw.split(",") if isinstance(raw, str) else raw)]
        return sequences.explicit_coeffs(vals, params)
    raise CLIError(f"unknown family {fam!r}")


def _cmd_density(cfg):
    seq = _density_seq(cfg)
    rd = sequences.RadialDensity.of(seq)
    n = int(cfg["grid"])
    r = np.linspace(0.0, 1.0, n + 1)[:-1]
    prof = np.atleast_1d(rd.profile(r))
    rad = np.atleast_1d(rd.radial(r))
    F = np.atleast_1d(rd.cdf(r))
    rows = list(zip(r, prof, rad, F))
    extra = {"sequence": seq.to_dict(), "nonnegative": bool(seq.nonnegative)}
    return _table_or_json(cfg, ("r", "density", "radial_density", "cdf"), rows, extra), EXIT_OK


def _cmd_potential(cfg):
    _, spec = _pair(cfg)
    n = int(cfg["grid"])
    r = np.linspace(0.0, float(cfg["rmax"]), n + 1)
    if not spec.hard_wall and not spec.is_polynomial:
        # non-polynomial series diverge beyond the unit sphere
        r = r[r <= 1.0]
    V = np.atleast_1d(potentials.evaluate(spec, r))
    with np.errstate(invalid="ignore"):
        dV = np.where(np.isfinite(V), np.atleast_1d(potentials.evaluate_derivative(spec, np.minimum(r, 1.0) if spec.hard_wall else r)), np.nan)
    rows = list(zip(r, V, dV))
    return _table_or_json(cfg, ("r", "V", "dV_dr"), rows, {"potential": spec.to_dict()}), EXIT_OK


def _cmd_verify(cfg):
    rd, spec = _pair(cfg)
    tol = 1e-6 if cfg["tol"] is None else float(cfg["tol"])
    rep = el_verify.el_check(rd, spec, tol=tol)
    status = "PASS" if rep.passed(tol) else "FAIL"
    text_obj = dict(rep.to_dict(), status=status, tol=tol, potential=spec.to_dict())
    if cfg["format"] == "csv":
        text = _csv_text(("kind", "r", "value"), rep.csv_rows())
    else:
        text = _json_text(text_obj)
    return text, EXIT_OK if status == "PASS" else EXIT_VIOLATION


def _cmd_energy(cfg):
    rd, spec = _pair(cfg)
    rep = el_verify.energy_report(rd, spec)
    rep.update(robin_constant=el_verify.robin_constant(rd.seq, rd.params), potential=spec.to_dict())
    if cfg["format"] == "csv":
        return _csv_text(("energy", "closed_form"), [(rep["energy"], rep["closed_form"])]), EXIT_OK
    return _json_text(rep), EXIT_OK


def _cmd_halfspace(cfg):
    d = int(cfg["d"])
    a = halfspace.a_critical(d) if cfg["a"] is None else float(cfg["a"])
    prob = halfspace.HalfspaceProblem(d, a, float(cfg["beta"]))
    tol = 1e-10 if cfg["tol"] is None else float(cfg["tol"])
    if cfg["format"] == "csv":
        if d < 2:
            raise CLIError("profile curves need d >= 2")
        tvals = [float(v) for v in str(cfg["t_values"]).split(",")]
        n = int(cfg["grid"])
        xs = np.linspace(0.0, 2.0, n + 1)
        base = [halfspace.G_profile(d, t, 0.0, tol=tol) for t in tvals]
        rows = [(x, *[halfspace.G_profile(d, t, x, tol=tol) - b for t, b in zip(tvals, base)]) for x in xs]
        header = ("x", *[f"G_minus_G0_t={t:g}" for t in tvals])
        return _csv_text(header, rows), EXIT_OK
    report = {
        "d": d,
        "a": a,
        "beta": prob.beta,
        "a_cri": prob.a_cri,
        "R": prob.R,
        "C": halfspace.rate_constant(a, d),
        "regime": halfspace.regime(prob),
        "large_deviation": halfspace.ld_exponent(prob),
        "min_margin": None,
        "argmin": None,
        "grids": None,
    }
    if cfg["scan"] and d >= 1:
        scan = halfspace.conjecture_scan(
            d, a, halfspace.default_t_grid(int(cfg["nt"])), halfspace.default_x_grid(d, int(cfg["nx"])), tol=tol
        )
        report.update(min_margin=scan.min_margin, argmin=list(scan.argmin), grids=scan.to_dict()["grids"])
    return _json_text(report), EXIT_OK


def _cmd_simulate(cfg):
    params = _params(cfg)
    N = int(cfg["N"])
    p = int(cfg["p"])
    spec = potentials.PotentialSpec.pure_power(p, params, hard_wall=bool(cfg["hard_wall"]))
    grad_tol = 1e-6 * N if cfg["grad_tol"] is None else float(cfg["grad_tol"])
    anneal = None
    if cfg["anneal_betas"]:
        raw = cfg["anneal_betas"]
        betas = [float(v) for v in (raw.split(",") if isinstance(raw, str) else raw)]
        anneal = {"beta_sequence": betas, "steps_per_beta": int(cfg["steps_per_beta"]), "seed": int(cfg["seed"])}
    sched = simulate.Schedule(max_iters=int(cfg["max_iters"]), grad_tol=grad_tol, anneal=anneal)
    start = simulate.random_start(N, params, seed=int(cfg["seed"]))
    res = simulate.minimize(simulate.ParticleConfiguration(start, params, spec), sched)
    if cfg["format"] == "csv":
        return res.config.to_csv(), EXIT_OK
    rd = sequences.RadialDensity.of(sequences.power_potential_coeffs(p, params))
    ks = simulate.radial_cdf(res.config, rd)["ks_distance"]
    out = res.to_dict()
    out.pop("energies")
    out.update(ks_distance=ks, seed=int(cfg["seed"]), n_energies=len(res.energies))
    return _json_text(out), EXIT_OK


_HANDLERS = {
    "identity": _cmd_identity,
    "density": _cmd_density,
    "potential": _cmd_potential,
    "verify": _cmd_verify,
    "energy": _cmd_energy,
    "halfspace": _cmd_halfspace,
    "simulate": _cmd_simulate,
}


def run(cfg: dict) -> int:
    """Execute a resolved configuration; returns the exit status."""
    text, status = _HANDLERS[cfg["command"]](cfg)
    _emit(cfg, text)
    return status


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = _resolve(ns)
        return run(cfg)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
