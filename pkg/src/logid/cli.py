"""Command-line front end: ``logid spectrum|moment|verify|simulate``.

Every run is first turned into a :class:`RunConfig`, either from flags or
from ``--config file.json``, and validated before any computation.  Output
is CSV (17 significant digits, rationals as ``p/q``) or JSON.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 unsupported combination, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from scipy.optimize import brentq

from . import binomsum, closedform, levy, quadrature, simulator
from .errors import AccuracyError, BudgetError, DomainError, RangeError
from .levy import LevySpectrum

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 1, 2, 3, 4

COMMANDS = ("spectrum", "moment", "verify", "simulate")
METHODS = ("closed", "quad", "binom", "sim")
SUITES = ("recurrence", "binom", "poisson-lowmoments", "closed-vs-quad", "prop51", "all")
QUANTITIES = ("mean-mass", "second-moment", "multiscaling", "log-cov-slope")

# allowed parameter keys and their types, per command
SCHEMA = {
    "spectrum": {"mu": float, "n_max": int},
    "moment": {"mu": float, "n": int, "m": int, "lam": int, "interval": list, "raw": bool,
               "morris": list, "epsilon": float, "grid_n": int, "paths": int},
    "verify": {"suite": str, "mu": float, "n_max": int},
    "simulate": {"mu": float, "epsilon": float, "grid_n": int, "paths": int, "quantity": str},
}
DEFAULTS = {
    "spectrum": {"mu": 0.2, "n_max": 10},
    "moment": {"mu": 0.2, "n": 2, "raw": False, "epsilon": 1e-2, "grid_n": 400, "paths": 4000},
    "verify": {"suite": "all", "mu": 0.2, "n_max": 4},
    "simulate": {"mu": 0.2, "epsilon": 1e-2, "grid_n": 400, "paths": 2000,
                 "quantity": "mean-mass"},
}


class Unsupported(Exception):
    """The requested method cannot handle this input."""


@dataclass
class RunConfig:
    command: str
    spectrum: LevySpectrum = field(default_factory=levy.gaussian)
    method: str = "closed"
    parameters: dict = field(default_factory=dict)
    output: str = "-"
    format: str = "csv"
    seed: int = 0
    threads: int = 1
    tol: float = 1e-7

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"field 'command' must be one of {COMMANDS}, got {self.command!r}")
        if self.method not in METHODS:
            raise DomainError(f"field 'method' must be one of {METHODS}, got {self.method!r}")
        if self.format not in ("csv", "json"):
            raise DomainError(f"field 'format' must be csv or json, got {self.format!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise DomainError("field 'seed' must be a nonnegative integer")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise DomainError("field 'threads' must be a positive integer")
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise DomainError("field 'tol' must be a positive number")
        schema = SCHEMA[self.command]
        params = dict(DEFAULTS[self.command])
        for key, value in self.parameters.items():
            if key not in schema:
                raise DomainError(f"unknown parameter 'parameters.{key}' for {self.command}")
            want = schema[key]
            ok = (isinstance(value, want) and not (want is not bool and isinstance(value, bool))
                  or (want is float and isinstance(value, int) and not isinstance(value, bool)))
            if not ok:
                raise DomainError(f"parameter 'parameters.{key}' must be {want.__name__}, got {value!r}")
            params[key] = float(value) if want is float else value
        self.parameters = params

    def to_dict(self) -> dict:
        return {"command": self.command, "spectrum": self.spectrum.to_dict(),
                "method": self.method, "parameters": self.parameters, "output": self.output,
                "format": self.format, "seed": self.seed, "threads": self.threads,
                "tol": self.tol}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        known = {"command", "spectrum", "method", "parameters", "output", "format", "seed",
                 "threads", "tol"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config field(s): {sorted(unknown)}")
        if "command" not in data:
            raise DomainError("config is missing field 'command'")
        kwargs = {k: v for k, v in data.items() if k != "spectrum"}
        if "spectrum" in data:
            kwargs["spectrum"] = LevySpectrum.from_dict(data["spectrum"])
        if not isinstance(kwargs.get("parameters", {}), dict):
            raise DomainError("field 'parameters' must be an object")
        return cls(**kwargs)


# -- formatting --------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        clean = [{k: (_fmt(v) if isinstance(v, Fraction) else v) for k, v in r.items()}
                 for r in rows]
        return json.dumps(clean, indent=2) + "\n"
    if not rows:
        return ""
    buf = io.StringIO()
    fields = list(rows[0])
    for r in rows[1:]:
        fields += [k for k in r if k not in fields]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


# -- commands ----------------------------------------------------------------------

def _critical_order(spec: LevySpectrum, mu: float, q_max: float = 1024.0) -> float:
    """Smallest ``q > 1`` with ``q - mu phi(-iq) = 1``; inf if none up to ``q_max``."""
    g = lambda q: levy.multiscaling(spec, mu, q) - 1.0
    lo, hi = 1.0 + 1e-9, 2.0
    while hi <= q_max:
        try:
            if g(hi) <= 0:
                return brentq(g, lo, hi, xtol=1e-13)
        except RangeError:
            return math.inf
        lo, hi = hi, 2 * hi
    return math.inf


def cmd_spectrum(cfg: RunConfig) -> tuple[list[dict], int]:
    spec = cfg.spectrum.require_nondegenerate()
    mu, n_max = cfg.parameters["mu"], cfg.parameters["n_max"]
    if n_max < 1:
        raise DomainError("parameter 'n_max' must be >= 1")
    rows = []
    for m in range(1, n_max + 1):
        rows.append({"quantity": "d", "index": m, "value": levy.d_coeff(spec, m)})
    for n in range(1, n_max + 1):
        rows.append({"quantity": "phi_im", "index": n, "value": levy.phi_im(spec, n)})
    rows.append({"quantity": "nondegeneracy_margin", "index": "", "value":
                 levy.nondegeneracy_margin(spec, mu)})
    rows.append({"quantity": "max_intermittency", "index": "", "value":
                 levy.max_intermittency(spec)})
    for q in range(2, n_max + 1):
        v = levy.moment_finiteness(spec, mu, q)
        rows.append({"quantity": "finiteness", "index": q, "value": v.verdict.value})
    rows.append({"quantity": "critical_order", "index": "", "value": _critical_order(spec, mu)})
    rows.append({"quantity": "log_cov_coefficient", "index": "", "value":
                 levy.log_cov_coefficient(spec)})
    return rows, EXIT_OK


def _classify(spec: LevySpectrum):
    """``("gaussian", None)``, ``("poisson", c)`` or ``(None, None)``."""
    if spec.sigma2 == 1.0 and not spec.atoms:
        return "gaussian", None
    if spec.sigma2 == 0 and len(spec.atoms) == 1 and spec.atoms[0][1] == 1.0:
        return "poisson", math.exp(spec.atoms[0][0])
    return None, None


def _interval(params) -> quadrature.IntervalPair:
    iv = params.get("interval", [0.0, 0.5, 0.5, 1.0])
    if len(iv) != 4:
        raise DomainError("parameter 'interval' must be [a1, b1, a2, b2]")
    return quadrature.IntervalPair(*(float(v) for v in iv))


def cmd_moment(cfg: RunConfig) -> tuple[list[dict], int]:
    p = cfg.parameters
    spec = cfg.spectrum
    n, m, mu = p["n"], p.get("m"), p["mu"]
    row = {"method": cfg.method, "n": n, "m": "" if m is None else m}
    if cfg.method == "binom":
        if "lam" not in p:
            raise Unsupported("method binom needs an integer 'lam'; use quad for real lambda")
        lam = p["lam"]
        if "morris" in p:
            a, b = p["morris"]
            value = binomsum.morris_sum(n, int(a), int(b), lam)
        elif m is not None:
            value = binomsum.joint_sum(n, m, lam)
        else:
            value = binomsum.selberg_sum(n, lam)
        row.update(lam=lam, value=value, error="0")
        return [row], EXIT_OK
    spec.require_nondegenerate()
    kind, c = _classify(spec)
    raw = p["raw"]
    if cfg.method == "closed":
        if m is None:
            if kind == "gaussian":
                value = closedform.lognormal_moment(mu, n)
            elif kind == "poisson":
                value = closedform.logpoisson_moment(c, mu, n)
            else:
                raise Unsupported("closed forms cover gaussian(1) and log-Poisson spectra; "
                                  "use --method quad")
        else:
            iv = _interval(p)
            if kind != "poisson" or (iv.a1, iv.b1, iv.a2, iv.b2) != (0, 0.5, 0.5, 1):
                raise Unsupported("closed joint moments cover log-Poisson on (0,1/2),(1/2,1); "
                                  "use --method quad")
            value = closedform.poisson_joint(c, mu, (n, m))
        if raw:
            value /= math.factorial(n) * (math.factorial(m) if m else 1)
        row.update(mu=mu, value=value, error=0.0)
        return [row], EXIT_OK
    if cfg.method == "quad":
        if m is None:
            params = quadrature.SelbergParams.from_spectrum(spec, n, -mu / 2)
            res = quadrature.selberg_general(params, tol=cfg.tol, rtol=cfg.tol,
                                             threads=cfg.threads, seed=cfg.seed)
            scale = 1.0 if raw else math.factorial(n)
        else:
            res = quadrature.joint_moment_quad(spec, mu, _interval(p), n, m, tol=cfg.tol,
                                               rtol=cfg.tol, threads=cfg.threads,
                                               seed=cfg.seed)
            scale = 1.0 / (math.factorial(n) * math.factorial(m)) if raw else 1.0
        res = res.scaled(scale)
        row.update(mu=mu, value=res.value, error=res.abs_error_estimate)
        return [row], EXIT_OK
    # sim
    if kind is None:
        raise Unsupported("simulation covers gaussian(1) and log-Poisson spectra; use quad")
    model = simulator.Model.gaussian() if kind == "gaussian" else simulator.Model.poisson(c)
    sc = simulator.SimConfig(p["epsilon"], p["grid_n"], p["paths"], cfg.seed, mu)
    if m is None:
        est = simulator.estimate_moment(sc, model, [(0.0, 1.0)], [n])
    else:
        iv = _interval(p)
        est = simulator.estimate_moment(sc, model, [(iv.a1, iv.b1), (iv.a2, iv.b2)], [n, m])
    row.update(mu=mu, value=est.mean, error=est.std_error)
    return [row], EXIT_OK


def _check(name, params, residual, tol):
    ok = residual == 0 if tol == 0 else abs(residual) <= tol
    return {"name": name, "parameters": params, "residual": residual, "tolerance": tol,
            "status": "PASS" if ok else "FAIL"}


def verify_rows(suite: str, mu: float, n_max: int) -> list[dict]:
    rows = []
    g, lp = levy.gaussian(), levy.log_poisson(2.0)
    lam = -mu / 2
    if suite in ("recurrence", "all"):
        for spec, label in ((g, "gaussian"), (lp, "log-poisson(2)")):
            for n in range(2, n_max + 1):
                try:
                    params = quadrature.SelbergParams.from_spectrum(spec, n, lam)
                    r = quadrature.recurrence_residual_single(params, spec)
                except DomainError:
                    continue
                rows.append(_check("single-recurrence", f"{label} n={n} lam={lam:g}", r, 1e-5))
        iv = quadrature.IntervalPair(0.0, 0.5, 0.5, 1.0)
        for n, m in ((1, 1), (1, 2), (2, 2)):
            r = quadrature.recurrence_residual_joint(g, mu, iv, n, m)
            rows.append(_check("joint-recurrence", f"gaussian n={n} m={m} mu={mu:g}", r, 1e-4))
    if suite in ("binom", "all"):
        for N in range(2, n_max + 1):
            for L in range(0, 3):
                r = binomsum.sum_relation_residual(N, L)
                rows.append(_check("sum-relation", f"N={N} lam={L}", r, 0))
                r = binomsum.selberg_sum(N, L) - closedform.selberg_product_exact(N, L)
                rows.append(_check("binom-vs-product", f"N={N} lam={L}", r, 0))
    if suite in ("poisson-lowmoments", "all"):
        for c in (2.0, 0.5):
            spec = levy.log_poisson(c)
            for n in range(2, min(n_max, 4) + 1):
                try:
                    closed = closedform.logpoisson_moment(c, mu, n)
                    params = quadrature.SelbergParams.from_spectrum(spec, n, lam)
                    quad = math.factorial(n) * quadrature.selberg_general(
                        params, tol=1e-14, rtol=1e-11).value
                except DomainError:
                    continue
                rows.append(_check("poisson-closed-vs-quad", f"c={c:g} n={n} mu={mu:g}",
                                   abs(closed / quad - 1), 1e-5))
    if suite in ("closed-vs-quad", "all"):
        for n in range(2, n_max + 1):
            for L in (-0.15, -0.05, 1.0):
                try:
                    exact = closedform.selberg_product(n, L).value
                    quad = math.factorial(n) * quadrature.selberg_general(
                        quadrature.SelbergParams(n, L), tol=1e-300, rtol=1e-10).value
                except DomainError:
                    continue
                rows.append(_check("selberg-closed-vs-quad", f"n={n} lam={L:g}",
                                   abs(quad / exact - 1), 5e-6))
    if suite in ("prop51", "all"):
        for L in (-0.1, 1.0):
            for (n, m), fn in (((1, 3), quadrature.s13_2d), ((2, 2), quadrature.s22_2d)):
                two = fn(L)
                direct = quadrature.s_nm_quad(n, m, L)
                bar = two.abs_error_estimate + direct.abs_error_estimate + 1e-12 * abs(two.value)
                rows.append(_check("two-dim-reduction", f"S_{n},{m} lam={L:g}",
                                   abs(two.value - direct.value), bar))
    return rows


def cmd_verify(cfg: RunConfig) -> tuple[list[dict], int]:
    p = cfg.parameters
    if p["suite"] not in SUITES:
        raise DomainError(f"parameter 'suite' must be one of {SUITES}")
    rows = verify_rows(p["suite"], p["mu"], p["n_max"])
    failed = any(r["status"] == "FAIL" for r in rows)
    return rows, EXIT_FAIL if failed else EXIT_OK


def cmd_simulate(cfg: RunConfig) -> tuple[list[dict], int]:
    p = cfg.parameters
    spec = cfg.spectrum.require_nondegenerate()
    kind, c = _classify(spec)
    if kind is None:
        raise Unsupported("simulation covers gaussian(1) and log-Poisson spectra")
    if p["quantity"] not in QUANTITIES:
        raise DomainError(f"parameter 'quantity' must be one of {QUANTITIES}")
    model = simulator.Model.gaussian() if kind == "gaussian" else simulator.Model.poisson(c)
    sc = simulator.SimConfig(p["epsilon"], p["grid_n"], p["paths"], cfg.seed, p["mu"])
    q = p["quantity"]
    if q == "mean-mass":
        est = simulator.estimate_moment(sc, model, [(0.0, 1.0)], [1])
    elif q == "second-moment":
        est = simulator.estimate_moment(sc, model, [(0.0, 1.0)], [2])
    elif q == "multiscaling":
        est = simulator.estimate_multiscaling(sc, model, 2.0)
    else:
        est, _ = simulator.log_covariance_slope(sc, model)
    row = {"model": model.label, "mu": sc.mu, "epsilon": sc.epsilon, "grid_n": sc.grid_n,
           "paths": sc.paths, "quantity": q, "value": est.mean, "std_error": est.std_error}
    return [row], EXIT_OK


HANDLERS = {"spectrum": cmd_spectrum, "moment": cmd_moment, "verify": cmd_verify,
            "simulate": cmd_simulate}


# -- argument parsing --------------------------------------------------------------

def _load_spectrum(text: str) -> LevySpectrum:
    path = Path(text)
    if not text.lstrip().startswith("{") and path.exists():
        text = path.read_text()
    return LevySpectrum.from_json(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (flags are ignored)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", default="-", help="output file, '-' for stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--tol", type=float, default=1e-7,
                        help="absolute and relative quadrature tolerance")
    common.add_argument("--dump-config", action="store_true",
                        help="print the validated configuration as JSON and exit")
    spec = argparse.ArgumentParser(add_help=False)
    grp = spec.add_mutually_exclusive_group()
    grp.add_argument("--spectrum", help="spectrum JSON text or file")
    grp.add_argument("--log-poisson", type=float, metavar="C", help="unit atom at log(C)")
    spec.add_argument("--mu", type=float)

    parser = argparse.ArgumentParser(prog="logid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("spectrum", parents=[common, spec], help="d(m), phi and finiteness table")
    p.add_argument("--n-max", type=int)

    p = sub.add_parser("moment", parents=[common, spec], help="single or joint moment")
    p.add_argument("--method", choices=METHODS, default="closed")
    p.add_argument("-n", "--n", type=int)
    p.add_argument("-m", "--m", type=int, help="second power for a joint moment")
    p.add_argument("--lam", type=int, help="integer lambda for --method binom")
    p.add_argument("--interval", type=float, nargs=4, metavar=("A1", "B1", "A2", "B2"))
    p.add_argument("--morris", type=int, nargs=2, metavar=("A", "B"))
    p.add_argument("--raw", action="store_true", help="report the ordered integral")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--paths", type=int)

    p = sub.add_parser("verify", parents=[common, spec], help="identity checks")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--n-max", type=int)

    p = sub.add_parser("simulate", parents=[common, spec], help="Monte Carlo estimates")
    p.add_argument("--quantity", choices=QUANTITIES)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--paths", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise DomainError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid config JSON (line {exc.lineno}): {exc.msg}") from exc
        return RunConfig.from_dict(data)
    if args.spectrum:
        spectrum = _load_spectrum(args.spectrum)
    elif args.log_poisson is not None:
        spectrum = levy.log_poisson(args.log_poisson)
    else:
        spectrum = levy.gaussian()
    keys = set(SCHEMA[args.command])
    params = {}
    for k in keys:
        v = getattr(args, k, None)
        if k == "raw" and v is False:
            continue
        if v is not None:
            params[k] = list(v) if isinstance(v, (list, tuple)) else v
    return RunConfig(command=args.command, spectrum=spectrum,
                     method=getattr(args, "method", None) or "closed", parameters=params,
                     output=args.output, format=args.format, seed=args.seed,
                     threads=args.threads, tol=args.tol)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    try:
        cfg = config_from_args(args)
        if args.dump_config:
            sys.stdout.write(json.dumps(cfg.to_dict(), indent=2) + "\n")
            return EXIT_OK
        rows, code = HANDLERS[cfg.command](cfg)
    except Unsupported as exc:
        print(f"logid: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (AccuracyError, RangeError, BudgetError, ArithmeticError) as exc:
        print(f"logid: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        print(f"logid: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(rows, cfg.format)
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        Path(cfg.output).write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
