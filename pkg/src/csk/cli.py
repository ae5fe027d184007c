"""Command-line front end: ``csk <command> [flags]``.

Every table is written as CSV with ``#`` comment lines echoing the resolved
configuration, or as JSON carrying the same fields.  Exit codes: 0 success,
1 a verify-all criterion failed, 2 bad flags or configuration, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import acceptance
from . import constraint_symbols as cs
from . import dynamics as dyn
from . import penalty as pen
from . import projectors as pj
from . import rkhs
from .coherent_states import PhasePoint
from .errors import CSKError, QuadratureFailure

__all__ = ["main", "build_parser"]

COMMANDS = ("kernel", "reduce", "symbol", "penalty", "dynamics", "project", "verify-all")

# keys a --config file may set; anything else is rejected
CONFIG_KEYS = {
    "delta", "gamma", "hbar", "A", "T", "c", "seed", "format", "out", "filter",
    "points", "pair", "gram", "kind", "t_final", "dt", "generators",
}

NUMERICAL = (QuadratureFailure, ArithmeticError)


class UsageError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("CSK_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"CSK_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise UsageError("CSK_THREADS must be at least 1")
    return n


def _map(fn, items):
    """Ordered map, fanned out over at most CSK_THREADS threads."""
    items = list(items)
    n = min(_threads(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


class Table:
    def __init__(self, columns, rows, notes=()):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.notes = list(notes)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def render(command: str, config: dict, tables: list, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "command": command,
            "config": config,
            "tables": [{"notes": t.notes, "columns": t.columns,
                        "rows": [[_jsonable(x) for x in r] for r in t.rows]} for t in tables],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# csk {command}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    for i, t in enumerate(tables):
        if i:
            buf.write("\n")
        for note in t.notes:
            buf.write(f"# {note}\n")
        w.writerow(t.columns)
        for r in t.rows:
            w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# argument parsing


def _positive(name):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {s!r}")
        if not (v > 0):
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {s!r}")
        return v
    return conv


def _delta(s):
    if s.strip().lower() in ("inf", "infinity"):
        return math.inf
    return _positive("delta")(s)


def _number(name):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {s!r}")
        if not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"{name} must be finite")
        return v
    return conv


def _seed(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {s!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csk", description="Coherent-state projection kernels, symbols, penalties and dynamics.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with a flat key -> value map of flag values")
    parser.add_argument("--delta", type=_delta, help="momentum band half-width (inf allowed)")
    parser.add_argument("--gamma", type=_number("gamma"), help="power-law exponent, > -1")
    parser.add_argument("--hbar", type=_positive("hbar"), help="Planck constant (default 1)")
    parser.add_argument("--A", dest="A", type=_positive("A"), help="penalty strength")
    parser.add_argument("--T", dest="T", type=_positive("T"), help="evolution time")
    parser.add_argument("--c", type=_number("c"), help="coupling constant of the p2 constraint / target velocity")
    parser.add_argument("--seed", type=_seed, help="seed for the PCG64 point generator")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    parser.add_argument("--out", help="output file (default stdout)")
    parser.add_argument("--filter", help="verify-all: run one criterion group only")
    parser.add_argument("--points", help="kernel: 'origin' or 'p,q;p,q;...'")
    parser.add_argument("--pair", help="kernel: 'p'',q'',p',q'' for one kernel value")
    parser.add_argument("--gram", help="kernel: 'randomN' for N seeded random points")
    parser.add_argument("--kind", help="penalty: quadratic|quartic; dynamics: example1|quadratic|circle|quartic|drift")
    parser.add_argument("--t-final", dest="t_final", type=_positive("t_final"), help="dynamics horizon")
    parser.add_argument("--dt", type=_positive("dt"), help="dynamics step")
    parser.add_argument("--generators", help="project: JSON file with a matrix constraint set")
    # negative control for verify-all: multiply the kernels of the RKHS check
    parser.add_argument("--inject-kernel-scale", dest="inject_kernel_scale", type=_positive("scale"),
                        default=None, help=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge --config file values under explicit flags; reject unknown keys."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}")
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(raw) - CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        parser = build_parser()
        argv = [args.command]
        for k, v in raw.items():
            if isinstance(v, (dict, list)):
                raise UsageError(f"config value for {k!r} must be a scalar")
            flag = "--t-final" if k == "t_final" else f"--{k}"
            argv += [flag, str(v)]
        try:
            parsed = parser.parse_args(argv)
        except SystemExit:
            raise UsageError("invalid value in config file")
        cfg.update({k: getattr(parsed, k) for k in raw})
    for k in CONFIG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg.setdefault("format", "csv")
    cfg.setdefault("hbar", 1.0)
    if args.inject_kernel_scale is not None:
        cfg["inject_kernel_scale"] = args.inject_kernel_scale
    return {k: cfg[k] for k in sorted(cfg)}


def _need(cfg, key, command):
    if cfg.get(key) is None:
        raise UsageError(f"{command} needs --{key.replace('_', '-')}")
    return cfg[key]


def _floats(text, n=None, what="values"):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}")
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {len(vals)}")
    return vals


def _json_cfg(cfg):
    return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in cfg.items()}


# --------------------------------------------------------------------------
# commands


def cmd_kernel(cfg):
    delta = _need(cfg, "delta", "kernel")
    hbar = cfg["hbar"]
    K = rkhs.banded_kernel(delta, hbar)
    tables = []
    if cfg.get("points"):
        spec = cfg["points"]
        if spec == "origin":
            pts = [PhasePoint(0.0, 0.0)]
        else:
            pts = [PhasePoint(*_floats(s, 2, "point")) for s in spec.split(";")]
        rows = [(float(p.p[0]), float(p.q[0]), K(p, p).real) for p in pts]
        tables.append(Table(["p", "q", "K_diag"], rows,
                            ["K_diag: diagonal kernel value <p,q|E|p,q> (dimensionless)"]))
    if cfg.get("pair"):
        pa, qa, pb, qb = _floats(cfg["pair"], 4, "pair")
        a, b = PhasePoint(pa, qa), PhasePoint(pb, qb)
        z = K(a, b)
        res = rkhs.check_reproducing(K, a, b)
        tables.append(Table(["p2", "q2", "p1", "q1", "re", "im", "abs", "reproducing_residual"],
                            [(pa, qa, pb, qb, z.real, z.imag, abs(z), res)],
                            ["re, im: kernel value K(p2,q2;p1,q1)",
                             "reproducing_residual: |K - int K K dmu| over half-width 8"]))
    if cfg.get("gram"):
        spec = cfg["gram"]
        if not spec.startswith("random"):
            raise UsageError("--gram expects 'randomN'")
        if cfg.get("seed") is None:
            raise UsageError("--gram needs --seed")
        try:
            n = int(spec[len("random"):])
        except ValueError:
            raise UsageError(f"bad --gram value {spec!r}")
        if n < 1:
            raise UsageError("--gram needs at least one point")
        pts = rkhs.random_points(n, 1, 2.0, cfg["seed"])
        G = rkhs.gram(K, pts, psd_tol=math.inf)
        rows = [(i, float(p.p[0]), float(p.q[0]), lam) for i, (p, lam) in enumerate(zip(pts, G.eigenvalues))]
        tables.append(Table(["index", "p", "q", "eigenvalue"], rows,
                            [f"min_eigenvalue: {G.min_eigenvalue!r}",
                             "eigenvalue: ascending Gram eigenvalues; p, q: the sample points"]))
    if not tables:
        tables.append(Table(["p", "q", "K_diag"], [(0.0, 0.0, K(PhasePoint(0.0), PhasePoint(0.0)).real)],
                            ["K_diag: diagonal kernel value at the origin"]))
    return tables


def cmd_reduce(cfg):
    delta = cfg.get("delta", 0.01)
    if not math.isfinite(delta):
        raise UsageError("reduce needs a finite --delta")
    hbar = cfg["hbar"]
    xs = np.linspace(-2, 2, 5)
    scale = lambda d: math.sqrt(math.pi) / (2 * d)
    fam = lambda d: rkhs.banded_kernel(d, hbar)
    ladder = tuple(delta * 2 ** k for k in (3, 2, 1, 0))
    lim = rkhs.reduce_scaled_limit(fam, scale, ladder)
    K = fam(delta)

    def row(pair):
        a, b = pair
        A, B = PhasePoint(a, 0.0), PhasePoint(b, 0.0)
        exact = math.exp(-0.5 * (a * a + b * b))
        s = (scale(delta) * K(A, B)).real
        r = lim(A, B).real
        return (a, b, s, r, exact, abs(s - exact), abs(r - exact))

    rows = _map(row, [(a, b) for a in xs for b in xs])
    return [Table(["p2", "p1", "scaled_kernel", "richardson_limit", "limit", "error_scaled", "error_richardson"],
                  rows, ["scaled_kernel: sqrt(pi)/(2 delta) K_delta(p2,0;p1,0)",
                         "limit: exp(-(p2^2 + p1^2)/2); Richardson over delta * (8, 4, 2, 1)"])]


def cmd_symbol(cfg):
    gamma = _need(cfg, "gamma", "symbol")
    hbar = cfg["hbar"]
    ps = [float(x) for x in np.sqrt(hbar) * np.array([1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0])]

    def row(p):
        approx = cs.phi_gamma_approx(p, gamma, hbar) if gamma != 0 else p
        return (gamma, hbar, p, cs.phi_gamma(p, gamma, hbar), approx)

    prof = cs.slope_constant(gamma, hbar)
    num = cs.numeric_slope(gamma, hbar)
    rows = [r + (prof.slope_at_zero, num) for r in _map(row, ps)]
    return [Table(["gamma", "hbar", "p", "phi_exact", "phi_approx", "slope_formula", "slope_numeric"], rows,
                  ["phi_exact: Gaussian-smeared symbol of P|P|^gamma (momentum units^(gamma+1))",
                   "phi_approx: interpolation k_o p (hbar + p^2 k_o^(-2/gamma))^(gamma/2)",
                   "slope_formula: hbar^(gamma/2) k_o; slope_numeric: 5-point difference at p = 0"])]


def cmd_penalty(cfg):
    kind = cfg.get("kind", "quadratic")
    if kind not in ("quadratic", "quartic"):
        raise UsageError("penalty --kind must be quadratic or quartic")
    A = cfg.get("A", 1e4 if kind == "quadratic" else 1e6)
    T = cfg.get("T", 1.0)
    wk = pen.WKind.P_SQUARED_HALF if kind == "quadratic" else pen.WKind.P_FOURTH_QUARTER
    conf = pen.PenaltyConfig(A, T, wk)
    seed = cfg.get("seed", 11)
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = [(PhasePoint(v[0], v[1]), PhasePoint(v[2], v[3])) for v in rng.uniform(-2, 2, (5, 4))]
    notes = ["re_scaled, im_scaled: scaled matrix element of exp(-i T A W)",
             "abs_error_vs_limit: distance to exp(-(p2^2 + p1^2)/2)"]
    k = 1.0
    if kind == "quartic":
        k, res = pen.measured_quartic_constant(T, use_contour=True)
        notes.append(f"quartic scaling k A^(1/4) with measured k = {k.real!r} {k.imag:+.17g}j "
                     f"(extrapolation residual {res:.2e})")
    rows = _map(lambda pr: pen.sweep_rows(conf, [pr], [A], k)[0], pairs)
    return [Table(["A", "T", "p2", "q2", "p1", "q1", "re_scaled", "im_scaled", "abs_error_vs_limit"], rows, notes)]


def cmd_dynamics(cfg):
    kind = cfg.get("kind", "example1")
    t_final = cfg.get("t_final", 5.0)
    dt = cfg.get("dt", 0.005 if kind == "circle" else 0.01)
    c = cfg.get("c", 1.0)
    if kind == "example1":
        gauges = [(lambda t: 1.0, lambda t: 1.0), (lambda t: 1.0 + 0.5 * math.sin(t), lambda t: math.cos(t))]
        rep = dyn.gauge_equivalence_check(c, gauges, t_final, dt)
        rows = [(i, g["max_abs_p_v1"], g["max_abs_p_v2"], g["max_abs_bracket_v2"],
                 g["endpoint_v1"][0], g["endpoint_v1"][1], g["endpoint_v2"][0], g["endpoint_v2"][1],
                 g["endpoint_mismatch"]) for i, g in enumerate(rep["gauges"])]
        return [Table(["gauge", "max_abs_p_v1", "max_abs_p_v2", "max_abs_bracket_v2", "q1_v1", "q2_v1",
                       "q1_v2", "q2_v2", "compensated_mismatch"], rows,
                      ["two formulations of the p1 = p2 = 0 constraints; bracket of the second pair",
                       f"equivalent: {str(rep['equivalent']).lower()}"])]
    if kind == "drift":
        d = dyn.drift_order_experiment(dt if "dt" in cfg else 0.1)
        return [Table(["dt", "drift", "drift_half", "ratio"],
                      [(d["dt"], d["drift"], d["drift_half"], d["ratio"])],
                      ["max constraint drift at dt and dt/2; fourth order gives ratio ~16"])]
    if kind in ("quadratic", "quartic") and "A" not in cfg:
        rep = dyn.a_independence_experiment(kind, (1e2, 1e3, 1e4), c, t_final=t_final, dt=dt,
                                            hbar=cfg["hbar"])
        rows = [(r["A"], r["p0"], r["q_final"], r["q_expected"], r["energy"], r["augmented_energy"])
                for r in rep["rows"]]
        return [Table(["A", "p0", "q_final", "q_expected", "energy", "augmented_energy"], rows,
                      ["energy: classical penalty energy; augmented_energy: with the hbar zero-point term"])]
    if kind not in ("quadratic", "circle", "quartic"):
        raise UsageError("dynamics --kind must be example1, quadratic, circle, quartic or drift")
    A = cfg.get("A", 50.0)
    if kind == "circle":
        start = PhasePoint(0.0, math.sqrt(1 + c / (2 * A)))
    elif kind == "quadratic":
        start = PhasePoint(c / A, 0.0)
    else:
        start = PhasePoint(math.copysign(abs(c / A) ** (1 / 3), c), 0.0)
    rec = dyn.integrate_penalty(kind, A, start, t_final, dt)
    notes = [f"{k}_drift: {v!r}" for k, v in sorted(rec.invariant_drift.items())]
    if kind == "circle":
        rate, res = dyn.fit_rotation(rec)
        notes += [f"rotation_rate: {rate!r}", f"rotation_fit_residual: {res!r}"]
    rows = [(t, p, q, d, e) for t, p, q, d, e in
            zip(rec.times, rec.p[:, 0], rec.q[:, 0], rec.constraint_drift, rec.energy)]
    return [Table(["t", "p1", "q1", "max_abs_constraint", "energy"], rows, notes)]


def cmd_project(cfg):
    if cfg.get("generators"):
        try:
            cset = pj.MatrixConstraintSet.from_json(cfg["generators"])
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot load generators: {exc}")
    else:
        cset = pj.MatrixConstraintSet([np.diag([0.0, 1.0, -1.0]).astype(complex)])
    E = pj.group_average_projector(cset)
    rows = [(i, j, E[i, j].real, E[i, j].imag) for i in range(E.shape[0]) for j in range(E.shape[1])]
    idem = float(np.max(np.abs(E @ E - E)))
    kill = max(float(np.max(np.abs(g @ E))) for g in cset.generators)
    gauge = max(pj.check_gauge_invariance(E, cset, [t] * len(cset)) for t in (0.7, 1.3, math.pi))
    return [Table(["row", "col", "re", "im"], rows,
                  [f"rank: {int(round(np.trace(E).real))}", f"idempotence_residual: {idem!r}",
                   f"max_Phi_E: {kill!r}", f"gauge_residual: {gauge!r}"])]


def cmd_verify_all(cfg):
    scale = cfg.get("inject_kernel_scale", 1.0)
    results = acceptance.run_criteria(cfg.get("filter"), kernel_scale=scale)
    return results


HANDLERS = {
    "kernel": cmd_kernel,
    "reduce": cmd_reduce,
    "symbol": cmd_symbol,
    "penalty": cmd_penalty,
    "dynamics": cmd_dynamics,
    "project": cmd_project,
}


def _write(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        _threads()
        if args.command == "verify-all":
            if cfg.get("filter") and cfg["filter"] not in acceptance.GROUPS:
                raise UsageError(f"unknown --filter {cfg['filter']!r}; choose from {', '.join(acceptance.GROUPS)}")
            t0 = time.perf_counter()
            results = cmd_verify_all(cfg)
            if cfg["format"] == "json":
                text = json.dumps({"command": "verify-all", "config": _json_cfg(cfg),
                                   "criteria": [_strip_timing(r.as_dict()) for r in results]},
                                  indent=2, sort_keys=True, default=_jsonable) + "\n"
            else:
                lines = [f"# csk verify-all", f"# config: {json.dumps(_json_cfg(cfg), sort_keys=True)}"]
                lines += [acceptance.format_line(r, timings=False) for r in results]
                text = "\n".join(lines) + "\n"
            _write(text, cfg.get("out"))
            print(f"verify-all finished in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
            return 0 if all(r.passed for r in results) else 1
        tables = HANDLERS[args.command](cfg)
        _write(render(args.command, _json_cfg(cfg), tables, cfg["format"]), cfg.get("out"))
        return 0
    except UsageError as exc:
        print(f"csk: error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL as exc:
        print(f"csk: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (CSKError, ValueError) as exc:
        print(f"csk: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _strip_timing(d):
    d = dict(d)
    d.pop("seconds", None)
    d["measured"] = {k: v for k, v in d["measured"].items() if not k.endswith("_s")}
    return d


if __name__ == "__main__":
    sys.exit(main())
