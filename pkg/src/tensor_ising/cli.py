"""Command-line interface.

Subcommands: threshold, landscape, efficiency, sweep, simulate,
pvalue-curve, ldp, histogram.  Every option may also come from a JSON
file given with ``--config``; flags on the command line win.

Exit codes: 0 success, 1 usage, 2 numeric precondition, 3 nonconvergence,
4 edge budget.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import bahadur
from . import curie_weiss as cw
from . import er_model as er
from . import experiments as ex
from . import landscape as ls
from .errors import BudgetExceeded, ConsistencyError, DomainError, NoInteriorMaximizer, NonConvergence, WindowUndefined

EXIT_USAGE, EXIT_PRECONDITION, EXIT_NONCONVERGENCE, EXIT_BUDGET = 1, 2, 3, 4

GLOBAL_DEFAULTS = {"seed": 0, "output": None, "format": None, "threads": 1, "precision": 6}

COMMAND_DEFAULTS = {
    "threshold": {"p": None},
    "landscape": {"p": None, "beta": None, "x": None},
    "efficiency": {"p": None, "beta0": None, "beta": None, "delta": 0.01, "dps": None},
    "sweep": {"p": "2", "beta0": None, "beta": None, "delta": "0.01"},
    "simulate": {"model": "CW", "p": None, "beta": None, "n": None, "count": 1, "alpha": 1.0,
                 "steps": 1_000_000, "init": "auto", "means_only": False},
    "pvalue-curve": {"model": "CW", "p": 2, "beta0": 0.7, "beta": 0.9, "delta": 0.01, "replicates": None,
                     "n_grid": "175:376:1", "statistic": "MPLE", "alpha": 0.5, "steps": 1_000_000,
                     "init": "auto", "er_statistic": "mple_er", "sidecar": None},
    "ldp": {"p": None, "beta": None, "interval": None, "n_list": "200,400,800,1600"},
    "histogram": {"model": "CW", "p": None, "beta": None, "n": None, "replicates": 10_000,
                  "statistic": "MPLE", "bins": 50, "alpha": 1.0, "steps": 100_000},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _num(v, prec=None):
    """Fixed significant digits for people; full round-trip digits when ``prec`` is None."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    if prec is None:
        return repr(v)
    return f"{v:#.{prec}g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isinf(f):
            return "+inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def parse_list(text, kind=float):
    """``"a,b,c"`` or ``"start:stop:step"`` (stop exclusive, as in range)."""
    if text is None:
        return []
    if isinstance(text, (int, float)):
        return [kind(text)]
    if isinstance(text, (list, tuple)):
        return [kind(v) for v in text]
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(v) for v in parts)
        if step <= 0:
            raise UsageError(f"range step must be positive, got {text!r}")
        count = int(math.floor((stop - start) / step - 1e-9)) + 1
        return [kind(round(start + i * step, 12)) for i in range(max(count, 0))]
    return [kind(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

class Output:
    def __init__(self, cfg, command):
        self.cfg = cfg
        self.command = command
        self.buf = io.StringIO()

    def provenance(self):
        meta = {"command": self.command, "config": _jsonable(self.cfg), "version": __version__}
        return "# provenance: " + json.dumps(meta, sort_keys=True)

    def csv(self, header, rows):
        self.buf.write(self.provenance() + "\n")
        self.buf.write(",".join(header) + "\n")
        for row in rows:
            self.buf.write(",".join(_num(v) for v in row) + "\n")

    def json(self, payload):
        payload = {"provenance": {"command": self.command, "config": _jsonable(self.cfg), "version": __version__},
                   **_jsonable(payload)}
        self.buf.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def text(self, line):
        self.buf.write(line + "\n")

    def emit(self, fmt, header, rows, payload, text_lines):
        if fmt == "csv":
            self.csv(header, rows)
        elif fmt == "json":
            self.json(payload)
        else:
            for line in text_lines:
                self.text(line)

    def flush(self):
        data = self.buf.getvalue()
        if self.cfg.get("output"):
            with open(self.cfg["output"], "w", newline="\n") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data)


def _require(cfg, *names):
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _int_p(cfg):
    p = int(cfg["p"])
    if p < 2:
        raise UsageError(f"--p must be an integer >= 2, got {p}")
    return p


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_threshold(cfg, out):
    _require(cfg, "p")
    p = _int_p(cfg)
    bs = ls.find_beta_star(p).beta_star
    prec = cfg["precision"]
    out.emit(cfg["format"], ["p", "beta_star"], [[p, bs]], {"p": p, "beta_star": bs}, [_num(bs, prec)])


def cmd_landscape(cfg, out):
    _require(cfg, "p", "beta")
    p, beta = _int_p(cfg), float(cfg["beta"])
    spec = ls.ModelSpec(p=p, beta=beta)
    prec = cfg["precision"]
    xs = parse_list(cfg.get("x"))
    if xs:
        rows = [[x, ls.eval_H(x, spec)] for x in xs]
        out.emit(cfg["format"], ["x", "H"], rows, {"p": p, "beta": beta, "values": rows},
                 [f"{_num(x, prec)} {_num(h, prec)}" for x, h in rows])
        return
    land = ls.find_m_star(spec)
    bs = ls.beta_star(p)
    fields = {"p": p, "beta": beta, "beta_star": bs, "m_star": land.m_star, "m_under": land.m_under,
              "h_at_m_star": land.h_at_m_star, "log1m_star": land.log1m_star}
    out.emit(cfg["format"], list(fields), [list(fields.values())], fields,
             [f"{k}: {_num(v, prec) if not isinstance(v, int) else v}" for k, v in fields.items()])


def cmd_efficiency(cfg, out):
    _require(cfg, "p", "beta0", "beta", "delta")
    p = _int_p(cfg)
    dps = None if cfg.get("dps") is None else int(cfg["dps"])
    rep = bahadur.optimal_sample_sizes(float(cfg["beta0"]), float(cfg["beta"]), p, float(cfg["delta"]), dps=dps)
    prec = cfg["precision"]
    lines = [f"{name}: {_num(v, prec) if name != 'p' else v}" for name, v in zip(bahadur.CSV_COLUMNS, rep.row())]
    if rep.low_precision:
        lines.append("warning: beta0 is within 1e-4 of the threshold; values are low precision")
    out.emit(cfg["format"], bahadur.CSV_COLUMNS, [rep.row()], rep.to_dict(), lines)


def sweep_rows(beta0s, betas, ps, deltas):
    rows = []
    for p in ps:
        bs = ls.beta_star(p)
        for delta in deltas:
            for b0 in beta0s:
                for b in betas:
                    if not (b > b0 > bs + ls.EPS_THRESHOLD and 0 < delta < 1):
                        continue
                    rows.append(bahadur.optimal_sample_sizes(b0, b, p, delta).row())
    return rows


def cmd_sweep(cfg, out):
    beta0s, betas = parse_list(cfg.get("beta0")), parse_list(cfg.get("beta"))
    ps, deltas = parse_list(cfg.get("p"), int), parse_list(cfg.get("delta"))
    if any(p < 2 for p in ps):
        raise UsageError("--p values must be >= 2")
    rows = sweep_rows(beta0s, betas, ps, deltas)
    fmt = cfg["format"] or "csv"
    out.emit(fmt, bahadur.CSV_COLUMNS, rows, {"columns": bahadur.CSV_COLUMNS, "rows": rows}, [])


def cmd_simulate(cfg, out):
    _require(cfg, "p", "beta", "n")
    p, beta, n, count = _int_p(cfg), float(cfg["beta"]), int(cfg["n"]), int(cfg["count"])
    if count < 1 or n < 1:
        raise DomainError("--n and --count must be >= 1")
    seed = int(cfg["seed"])
    rows = []
    if cfg["model"] == "CW":
        dist = cw.build_dist(ls.ModelSpec(p=p, beta=beta, n=n))
        for r, s in enumerate(cw.sample(dist, count, seed)):
            rows.append([r, s.mean, "".join("+" if v > 0 else "-" for v in s.spins)])
    elif cfg["model"] == "ER":
        graph = er.generate(n, p, float(cfg["alpha"]), [seed, n, 0])
        init = cfg["init"]
        if init == "auto":
            init = "random" if p == 2 else "plus"
        for r in range(count):
            inst = er.new_instance(graph, init=init, seed=[seed, n, 1, r])
            er.glauber_sweep(inst, beta, int(cfg["steps"]), [seed, n, 2, r])
            rows.append([r, inst.mean, "".join("+" if v > 0 else "-" for v in inst.spins)])
    else:
        raise UsageError(f"--model must be CW or ER, got {cfg['model']!r}")
    header = ["replicate", "mean", "spins"]
    if cfg.get("means_only"):
        header, rows = header[:2], [r[:2] for r in rows]
    fmt = cfg["format"] or "csv"
    out.emit(fmt, header, rows, {"columns": header, "rows": rows}, [])


def cmd_pvalue_curve(cfg, out):
    model = cfg["model"]
    reps = cfg.get("replicates")
    if reps is None:
        reps = 10_000 if model == "CW" else 1000
    config = ex.CurveConfig(
        model=model, p=_int_p(cfg), beta0=float(cfg["beta0"]), beta=float(cfg["beta"]),
        delta=float(cfg["delta"]), seed=int(cfg["seed"]), replicates=int(reps),
        n_grid=tuple(parse_list(cfg["n_grid"], int)), statistic=cfg["statistic"],
        alpha=float(cfg["alpha"]), glauber_steps=int(cfg["steps"]), init=cfg["init"],
        er_statistic=cfg["er_statistic"], threads=int(cfg["threads"]),
    )
    curve = ex.pvalue_curve(config)
    sidecar = curve.sidecar()
    fmt = cfg["format"] or "csv"
    out.emit(fmt, ex.CURVE_COLUMNS, curve.rows, {"rows": curve.rows, **{k: v for k, v in sidecar.items() if k != "runtime_seconds"}}, [])
    side_path = cfg.get("sidecar") or (cfg["output"] + ".json" if cfg.get("output") else None)
    if side_path:
        with open(side_path, "w") as fh:
            json.dump(_jsonable(sidecar), fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stderr.write(f"empirical_N={_num(curve.empirical_N)} theoretical_N={_num(curve.theoretical_N)}\n")


def cmd_ldp(cfg, out):
    _require(cfg, "p", "beta", "interval")
    interval = parse_list(cfg["interval"])
    if len(interval) != 2:
        raise UsageError("--interval must be a,b")
    rows = ex.ldp_convergence_table(float(cfg["beta"]), _int_p(cfg), tuple(interval), parse_list(cfg["n_list"], int))
    table = [[r.n, r.rate, r.limit, r.gap] for r in rows]
    prec = cfg["precision"]
    header = ["n", "rate", "limit", "gap"]
    out.emit(cfg["format"], header, table, {"columns": header, "rows": table},
             [" ".join(_num(v, prec) for v in row) for row in table])


def cmd_histogram(cfg, out):
    _require(cfg, "p", "beta", "n")
    h = ex.normality_histogram(cfg["model"], _int_p(cfg), float(cfg["beta"]), int(cfg["n"]), int(cfg["replicates"]),
                               cfg["statistic"], seed=int(cfg["seed"]), bins=int(cfg["bins"]),
                               alpha=float(cfg["alpha"]), glauber_steps=int(cfg["steps"]))
    header = ["bin_left", "bin_right", "count"]
    payload = {"bins": h.rows(), "overlay_mean": h.overlay_mean, "overlay_variance": h.overlay_variance,
               "sample_mean": h.sample_mean, "sample_variance": h.sample_variance,
               "standard_error": h.standard_error, "n_finite": h.n_finite, "n_diverged": h.n_diverged}
    prec = cfg["precision"]
    lines = [f"{k}: {_num(v, prec)}" for k, v in payload.items() if k != "bins"]
    fmt = cfg["format"] or "csv"
    out.emit(fmt, header, h.rows(), payload, lines)


COMMANDS = {
    "threshold": cmd_threshold,
    "landscape": cmd_landscape,
    "efficiency": cmd_efficiency,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "pvalue-curve": cmd_pvalue_curve,
    "ldp": cmd_ldp,
    "histogram": cmd_histogram,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int)
    g.add_argument("--output", "-o")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--threads", type=int)
    g.add_argument("--precision", type=int)
    g.add_argument("--config", help="JSON file of option values (flags override it)")

    parser = _Parser(prog="tensor-ising", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    a = add("threshold", "estimation threshold beta*(p)")
    a.add_argument("--p", type=int)

    a = add("landscape", "maximizers of H, or H at given points")
    a.add_argument("--p", type=int)
    a.add_argument("--beta", type=float)
    a.add_argument("--x", help="comma list of points in [-1, 1]")

    a = add("efficiency", "slopes, optimal sample sizes and relative efficiency")
    a.add_argument("--p", type=int)
    a.add_argument("--beta0", type=float)
    a.add_argument("--beta", type=float)
    a.add_argument("--delta", type=float)
    a.add_argument("--dps", type=int, help="extended-precision digits")

    a = add("sweep", "efficiency reports over a grid (lists or start:stop:step)")
    for name in ("p", "beta0", "beta", "delta"):
        a.add_argument("--" + name)

    a = add("simulate", "draw configurations")
    a.add_argument("--model", choices=["CW", "ER"])
    a.add_argument("--p", type=int)
    a.add_argument("--beta", type=float)
    a.add_argument("--n", type=int)
    a.add_argument("--count", type=int)
    a.add_argument("--alpha", type=float)
    a.add_argument("--steps", type=int)
    a.add_argument("--init", choices=["auto", "random", "plus"])
    a.add_argument("--means-only", dest="means_only", action="store_true", default=None)

    a = add("pvalue-curve", "average exact p-value against n")
    a.add_argument("--model", choices=["CW", "ER"])
    a.add_argument("--p", type=int)
    a.add_argument("--beta0", type=float)
    a.add_argument("--beta", type=float)
    a.add_argument("--delta", type=float)
    a.add_argument("--replicates", type=int)
    a.add_argument("--n-grid", dest="n_grid")
    a.add_argument("--statistic", choices=["MPLE", "MLE"])
    a.add_argument("--alpha", type=float)
    a.add_argument("--steps", type=int)
    a.add_argument("--init", choices=["auto", "random", "plus"])
    a.add_argument("--er-statistic", dest="er_statistic", choices=["mple_er", "eta"])
    a.add_argument("--sidecar", help="path of the JSON sidecar (default: OUTPUT.json)")

    a = add("ldp", "finite-n large-deviation rates against their limit")
    a.add_argument("--p", type=int)
    a.add_argument("--beta", type=float)
    a.add_argument("--interval", help="a,b")
    a.add_argument("--n-list", dest="n_list")

    a = add("histogram", "histogram of sqrt(n) (estimate - beta)")
    a.add_argument("--model", choices=["CW", "ER"])
    a.add_argument("--p", type=int)
    a.add_argument("--beta", type=float)
    a.add_argument("--n", type=int)
    a.add_argument("--replicates", type=int)
    a.add_argument("--statistic", choices=["MPLE", "MLE"])
    a.add_argument("--bins", type=int)
    a.add_argument("--alpha", type=float)
    a.add_argument("--steps", type=int)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Builtin defaults, then the JSON config file, then explicit flags."""
    cfg = {**GLOBAL_DEFAULTS, **COMMAND_DEFAULTS[args.command]}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in loaded.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            cfg[key] = val
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        cfg[key] = val
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        cfg = resolve(args)
        out = Output(cfg, args.command)
        COMMANDS[args.command](cfg, out)
        out.flush()
        return 0
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except (DomainError, NoInteriorMaximizer, WindowUndefined) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION
    except (NonConvergence, ConsistencyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NONCONVERGENCE
    except BudgetExceeded as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except (ValueError, TypeError) as exc:
        sys.stderr.write(f"error: invalid value: {exc}\n")
        return EXIT_USAGE
