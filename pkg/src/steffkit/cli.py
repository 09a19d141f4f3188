"""``steffkit`` command line.

Each subcommand assembles a JSON-compatible config from an optional
``--config`` file and command-line flags (flags win), validates it against a
schema that rejects unknown keys, and runs.  ``--dump-config`` prints the
resolved config instead; feeding that file back reproduces the run.

Exit codes: 0 success/converged, 1 configuration error, 2 iteration cap
reached, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import jsonschema

from . import __version__
from .basins import (BasinSpec, DIVERGED, Mode, NONE, P1_PALETTE, P2_PALETTE, DEFAULT_PALETTE,
                     render_memory, render_plain, write_csv, write_ppm)
from .efficiency import efficiency_table, optimal_steps, table_csv
from .errors import SteffkitError
from .numkernel import ENV_PRECISION, Field, PrecisionContext
from .problems import ALIASES, SystemDef, describe_builtins, get_problem, load_system
from .solver import METHOD_MEMORY, SolverConfig, Status, run
from .weights import check_conditions, parse_weight

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_ITER = 2
EXIT_FAILED = 3

PAPER_TOL = "1e-300"
PAPER_BITS = math.ceil(5000 * math.log2(10))

_SCALAR = {"type": ["string", "number"]}
_POINT = {"oneOf": [_SCALAR, {"type": "array", "items": _SCALAR, "minItems": 1}]}
_RANGE = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_PROBLEM = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "file": {"type": "string"},
        "field": {"enum": ["real", "complex"]},
    },
    "additionalProperties": False,
    "anyOf": [{"required": ["name"]}, {"required": ["file", "n"]}],
}
_METHOD_PROPS = {
    "problem": _PROBLEM,
    "method": {"enum": sorted(METHOD_MEMORY)},
    "beta": _SCALAR,
    "delta": _SCALAR,
    "weight": {"type": "string"},
    "allow_nonconforming_weight": {"type": "boolean"},
}
_RUN_PROPS = {
    **_METHOD_PROPS,
    "tol": _SCALAR,
    "max_iter": {"type": "integer", "minimum": 1},
    "precision_bits": {"type": ["integer", "null"], "minimum": 64},
    "x0": _POINT,
    "x_minus1": {"oneOf": [_POINT, {"type": "null"}]},
    "csv": {"type": ["string", "null"]},
}

SCHEMAS = {
    "solve": {
        "type": "object",
        "properties": {**_RUN_PROPS, "m": {"type": "integer", "minimum": 1}},
        "required": ["problem", "method", "m"],
        "additionalProperties": False,
    },
    "acoc-table": {
        "type": "object",
        "properties": {
            **{k: v for k, v in _RUN_PROPS.items() if k != "method"},
            "methods": {"type": "array", "items": {"enum": sorted(METHOD_MEMORY)}, "minItems": 1},
            "m_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        },
        "required": ["problem", "methods", "m_values"],
        "additionalProperties": False,
    },
    "basin": {
        "type": "object",
        "properties": {
            **_METHOD_PROPS,
            "m": {"type": "integer", "minimum": 1},
            "x_range": _RANGE,
            "y_range": _RANGE,
            "width": {"type": "integer", "minimum": 1},
            "height": {"type": "integer", "minimum": 1},
            "max_iter": {"type": ["integer", "null"], "minimum": 0},
            "conv_tol": {"type": "number", "exclusiveMinimum": 0},
            "div_threshold": {"type": "number", "exclusiveMinimum": 0},
            "workers": {"type": "integer", "minimum": 1},
            "ppm": {"type": ["string", "null"]},
            "csv": {"type": ["string", "null"]},
        },
        "required": ["problem", "method", "m"],
        "additionalProperties": False,
    },
    "efficiency": {
        "type": "object",
        "properties": {
            "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "m_max": {"type": "integer", "minimum": 1},
            "csv": {"type": ["string", "null"]},
        },
        "required": ["n_values", "m_max"],
        "additionalProperties": False,
    },
}

DEFAULTS = {
    "solve": {
        "problem": {"name": "sine_chain", "n": 15},
        "method": "SW",
        "beta": "0.1",
        "delta": "0.1",
        "weight": "paper-poly",
        "allow_nonconforming_weight": False,
        "tol": "1e-100",
        "max_iter": 100,
        "precision_bits": None,
        "x0": "1.3",
        "x_minus1": None,
        "csv": None,
    },
    "basin": {
        "method": "SW",
        "beta": "0.1",
        "delta": "0.1",
        "weight": "paper-poly",
        "allow_nonconforming_weight": False,
        "x_range": [-3.0, 3.0],
        "y_range": [-3.0, 3.0],
        "width": 400,
        "height": 400,
        "max_iter": None,
        "conv_tol": 1e-3,
        "div_threshold": 1e150,
        "workers": 1,
        "ppm": None,
        "csv": None,
    },
    "efficiency": {"m_max": 10, "csv": None},
}
DEFAULTS["acoc-table"] = {
    **{k: v for k, v in DEFAULTS["solve"].items() if k != "method"},
    "methods": ["SW", "SWD", "SWK"],
    "m_values": [1, 2, 3],
}


class UsageError(SteffkitError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which collides with the iteration-cap code.
    def error(self, message):
        raise UsageError(message)


# -- config assembly ----------------------------------------------------------

def _point_arg(text: str):
    parts = [p.strip() for p in text.split(",")]
    return parts[0] if len(parts) == 1 else parts


def _resolve(command: str, args) -> dict:
    config = json.loads(json.dumps(DEFAULTS.get(command, {})))
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        config.update(loaded)
    overrides = {}
    for key in ("m", "beta", "delta", "weight", "tol", "max_iter", "precision_bits", "method",
                "methods", "m_values", "width", "height", "conv_tol", "div_threshold", "workers",
                "ppm", "csv", "n_values", "m_max", "x_range", "y_range"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = list(value) if isinstance(value, tuple) else value
    if getattr(args, "basin_max_iter", None) is not None:
        overrides["max_iter"] = args.basin_max_iter
    if getattr(args, "x0", None) is not None:
        overrides["x0"] = _point_arg(args.x0)
    if getattr(args, "x_minus1", None) is not None:
        overrides["x_minus1"] = _point_arg(args.x_minus1)
    if getattr(args, "allow_nonconforming_weight", False):
        overrides["allow_nonconforming_weight"] = True
    problem = _problem_override(args)
    if problem is not None:
        overrides["problem"] = problem
    elif getattr(args, "n", None) is not None and isinstance(config.get("problem"), dict):
        overrides["problem"] = {**config["problem"], "n": args.n}
    config.update(overrides)
    if getattr(args, "paper_scale", False):
        config["tol"] = PAPER_TOL
        config["precision_bits"] = PAPER_BITS
    return config


def _problem_override(args):
    name = getattr(args, "problem", None)
    path = getattr(args, "problem_file", None)
    if name is None and path is None:
        return None
    out = {"file": path} if path else {"name": name}
    if getattr(args, "n", None) is not None:
        out["n"] = args.n
    if getattr(args, "field", None) is not None:
        out["field"] = args.field
    return out


def validate(command: str, config: dict) -> None:
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "config"
        raise UsageError(f"{where}: {exc.message}") from None


def build_problem(spec: dict) -> SystemDef:
    if "file" in spec:
        return load_system(spec["file"], spec["n"], Field(spec.get("field", "real")))
    params = {"n": spec["n"]} if "n" in spec else {}
    try:
        return get_problem(spec["name"], **params)
    except TypeError:
        raise UsageError(f"problem {spec['name']!r} does not take parameters {sorted(params)}") from None
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def build_solver_config(config: dict, F: SystemDef, method: str, m: int, *, bits=None,
                        run_fields: bool = True) -> SolverConfig:
    """``run_fields`` carries tol, max_iter and precision over; basins use none of them."""
    kwargs = dict(
        m=m,
        beta=config["beta"],
        delta=config["delta"],
        weight=parse_weight(config["weight"]),
        memory=METHOD_MEMORY[method],
        allow_nonconforming_weight=config["allow_nonconforming_weight"],
    )
    if run_fields:
        kwargs["tol"] = config["tol"]
        kwargs["max_iter"] = config["max_iter"]
        bits = config["precision_bits"] if bits is None else bits
    if bits is not None:
        kwargs["precision"] = PrecisionContext(bits, F.field)
    cfg = SolverConfig(**kwargs)
    if cfg.precision.field is not F.field:
        cfg = cfg.with_(precision=cfg.precision.with_field(F.field))
    return cfg


# -- reports ------------------------------------------------------------------

def _sci(v) -> str:
    if v is None:
        return "-"
    ctx = getattr(v, "context", None)
    if ctx is not None:
        return ctx.nstr(v, 6, min_fixed=1, max_fixed=0) if v != 0 else "0"
    return f"{v:.6g}"


def _acoc_text(v) -> str:
    if v is None:
        return "-"
    ctx = getattr(v, "context", None)
    return ctx.nstr(v, 6) if ctx is not None else f"{v:.6g}"


ROW_HEADER = ("method", "increment", "residual", "iterations", "acoc", "status")


def _row(name, trace):
    inc = trace.increments[-1] if trace.increments else None
    res = trace.residuals[-1] if trace.residuals else trace.initial_residual
    status = trace.status.value if trace.reason is None else f"{trace.status.value}: {trace.reason}"
    return [name, _sci(inc), _sci(res), str(trace.iterations), _acoc_text(trace.acoc), status]


def _print_table(rows, times, out):
    header = ["Method", "||x(k+1)-x(k)||", "||F(x(k+1))||", "Iter", "ACOC", "Time (s)"]
    cells = [r[:5] + [f"{t:.3f}"] for r, t in zip(rows, times)]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)), file=out)
    for c, r in zip(cells, rows):
        line = "  ".join(v.ljust(w) for v, w in zip(c, widths))
        if not r[5].startswith(Status.CONVERGED.value):
            line += "  [" + r[5] + "]"
        print(line, file=out)


def _write_rows_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROW_HEADER)
        writer.writerows(rows)


_EXIT_FOR_STATUS = {Status.CONVERGED: EXIT_OK, Status.MAX_ITERATIONS: EXIT_MAX_ITER, Status.FAILED: EXIT_FAILED}


# -- commands -----------------------------------------------------------------

def cmd_solve(config: dict, out=sys.stdout) -> int:
    F = build_problem(config["problem"])
    cfg = build_solver_config(config, F, config["method"], config["m"])
    trace = run(F, config["x0"], cfg, config.get("x_minus1"))
    row = _row(cfg.name, trace)
    print(f"{F.name}: {cfg.name}, {cfg.precision.significand_bits} bits, tol {config['tol']}", file=out)
    _print_table([row], [trace.elapsed], out)
    if config.get("csv"):
        _write_rows_csv(config["csv"], [row])
    return _EXIT_FOR_STATUS[trace.status]


def cmd_acoc_table(config: dict, out=sys.stdout) -> int:
    F = build_problem(config["problem"])
    rows, times = [], []
    for method in config["methods"]:
        for m in config["m_values"]:
            cfg = build_solver_config(config, F, method, m)
            trace = run(F, config["x0"], cfg, config.get("x_minus1"))
            rows.append(_row(cfg.name, trace))
            times.append(trace.elapsed)
    print(f"{F.name}: tol {config['tol']}", file=out)
    _print_table(rows, times, out)
    if config.get("csv"):
        _write_rows_csv(config["csv"], rows)
    return EXIT_OK


def _palette_for(F: SystemDef):
    return {"cubic_p1": P1_PALETTE, "quad_p2": P2_PALETTE}.get(F.name, DEFAULT_PALETTE)


def cmd_basin(config: dict, out=sys.stdout) -> int:
    F = build_problem(config["problem"])
    method = config["method"]
    memory = METHOD_MEMORY[method].value != "none"
    cfg = build_solver_config(config, F, method, config["m"], bits=64, run_fields=False)
    roots = F.known_roots(PrecisionContext(64, F.field))
    if not roots:
        raise UsageError(f"problem {F.name} has no known roots to classify against")
    spec = BasinSpec(
        x_range=tuple(config["x_range"]),
        y_range=tuple(config["y_range"]),
        width=config["width"],
        height=config["height"],
        max_iter=config["max_iter"],
        conv_tol=config["conv_tol"],
        div_threshold=config["div_threshold"],
        mode=Mode.MEMORY if memory else Mode.PLAIN,
        palette=_palette_for(F),
    )
    render = render_memory if memory else render_plain
    img = render(F, roots, spec, cfg, workers=config["workers"])
    if config.get("ppm"):
        write_ppm(img, config["ppm"])
    if config.get("csv"):
        write_csv(img, config["csv"])
    print(f"{F.name}: {cfg.name}, weight {cfg.weight.label}, {spec.width}x{spec.height}, "
          f"max_iter {spec.max_iter}", file=out)
    for key, share in img.shares().items():
        if key == NONE:
            label = "no convergence"
        elif key == DIVERGED:
            if not memory:
                continue
            label = "diverged"
        else:
            label = f"root {key} = {_root_text(img.roots[key])}"
        print(f"  {label:<40} {100 * share:7.3f}%", file=out)
    return EXIT_OK


def _root_text(r) -> str:
    vals = r.to_numpy()
    parts = [f"{complex(v).real:.6g}{complex(v).imag:+.6g}i" if complex(v).imag else f"{complex(v).real:.6g}"
             for v in vals]
    return "(" + ", ".join(parts) + ")" if len(parts) > 1 else parts[0]


def cmd_efficiency(config: dict, out=sys.stdout) -> int:
    rows = efficiency_table(config["n_values"], config["m_max"])
    text = table_csv(rows)
    if config.get("csv"):
        Path(config["csv"]).write_text(text, encoding="utf-8")
        for n in config["n_values"]:
            best = optimal_steps(n)
            star = "-" if best.m_star is None else f"{float(best.m_star):.6f}"
            print(f"n={n}: m*={star} best m={best.m_best} index={float(best.index_best):.12g}", file=out)
    else:
        out.write(text)
    return EXIT_OK


def cmd_check_weight(args, out=sys.stdout) -> int:
    spec = parse_weight(args.weight)
    report = check_conditions(spec)
    print(f"weight {spec.label}", file=out)
    for line in report.lines():
        print("  " + line, file=out)
    return EXIT_OK


def cmd_list_problems(args, out=sys.stdout) -> int:
    aliases = {v: k for k, v in ALIASES.items()}
    for name, params, summary in describe_builtins():
        label = name + (f" ({aliases[name]})" if name in aliases else "")
        print(f"{label:<22} {('params: ' + params) if params else '':<12} {summary}", file=out)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "acoc-table": cmd_acoc_table,
    "basin": cmd_basin,
    "efficiency": cmd_efficiency,
}


# -- argument parsing ---------------------------------------------------------

def _add_problem_args(p):
    p.add_argument("--problem", help="built-in problem name (see list-problems)")
    p.add_argument("--problem-file", help="text file with one expression per line")
    p.add_argument("--n", type=int, help="system dimension (sine_chain or a problem file)")
    p.add_argument("--field", choices=["real", "complex"], help="field for a problem file")


def _add_method_args(p, *, single=True):
    if single:
        p.add_argument("--method", choices=sorted(METHOD_MEMORY))
        p.add_argument("--m", type=int, help="number of steps")
    p.add_argument("--beta")
    p.add_argument("--delta")
    p.add_argument("--weight", help="paper-poly | reciprocal | poly:c0,c1,...")
    p.add_argument("--allow-nonconforming-weight", action="store_true")


def _add_run_args(p):
    p.add_argument("--tol")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--precision-bits", type=int, help=f"overrides {ENV_PRECISION} and the automatic choice")
    p.add_argument("--x0", help="scalar (repeated) or comma-separated components")
    p.add_argument("--x-minus1", help="memory seed x^(-1); default x0 + 0.1")
    p.add_argument("--paper-scale", action="store_true", help=f"tol {PAPER_TOL} at {PAPER_BITS} bits")


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--csv", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="steffkit", description="Derivative-free multi-step solvers for nonlinear systems.")
    parser.add_argument("--version", action="version", version=f"steffkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run one method from one starting point")
    _add_common(p)
    _add_problem_args(p)
    _add_method_args(p)
    _add_run_args(p)

    p = sub.add_parser("acoc-table", help="run a grid of methods and step counts")
    _add_common(p)
    _add_problem_args(p)
    p.add_argument("--methods", nargs="+", choices=sorted(METHOD_MEMORY))
    p.add_argument("--m-values", nargs="+", type=int)
    _add_method_args(p, single=False)
    _add_run_args(p)

    p = sub.add_parser("basin", help="render a dynamical plane to PPM/CSV")
    _add_common(p)
    _add_problem_args(p)
    _add_method_args(p)
    p.add_argument("--x-range", nargs=2, type=float, metavar=("MIN", "MAX"))
    p.add_argument("--y-range", nargs=2, type=float, metavar=("MIN", "MAX"))
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--max-iter", dest="basin_max_iter", type=int)
    p.add_argument("--conv-tol", type=float)
    p.add_argument("--div-threshold", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--ppm", help="PPM output path")

    p = sub.add_parser("efficiency", help="efficiency index table as CSV")
    _add_common(p)
    p.add_argument("--n", dest="n_values", nargs="+", type=int, help="system sizes")
    p.add_argument("--m-max", type=int)

    p = sub.add_parser("check-weight", help="estimate H(I), H1, H2 of a weight")
    p.add_argument("weight", help="paper-poly | reciprocal | poly:c0,c1,...")

    sub.add_parser("list-problems", help="list built-in problems")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"steffkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.command == "check-weight":
            return cmd_check_weight(args, sys.stdout)
        if args.command == "list-problems":
            return cmd_list_problems(args, sys.stdout)
        config = _resolve(args.command, args)
        validate(args.command, config)
        if args.dump_config:
            print(json.dumps(config, indent=2, sort_keys=True), file=sys.stdout)
            return EXIT_OK
        return COMMANDS[args.command](config, sys.stdout)
    except (SteffkitError, ValueError, OSError) as exc:
        print(f"steffkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

