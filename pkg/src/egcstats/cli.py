"""Command line interface: ``egcstats {compute,sweep,validate,bench}``.

Exit codes: 0 success, 1 usage error, 2 numerical failure (quadrature budget,
non-convergence, or a failed ``--check``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

from .analytic import (
    BeaulieuParams,
    Method,
    MethodDomainError,
    Scenario,
    SeriesConvergenceWarning,
    SystemConfig,
    stat_point,
    z_from_nsirth_db,
)
from .quadrature import QuadratureError, QuadratureSpec
from .simulator import SimParams, validate_against_analytic
from .specfun import SpecFunError

__all__ = ["main", "run", "CSV_FIELDS", "OUTPUT_DIR_ENV"]

CSV_FIELDS = ["nsirth_db", "z", "scenario", "m", "n", "method", "op", "lcr_norm", "afd_norm", "evals"]
OUTPUT_DIR_ENV = "EGCSTATS_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"values must be integers >= 1, got {text!r}")
    return vals


def _methods(text: str) -> list[Method]:
    try:
        vals = [Method(v.strip().lower()) for v in text.split(",") if v.strip()]
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise argparse.ArgumentTypeError(f"methods must be among {choices}, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("at least one method is required")
    return list(dict.fromkeys(vals))


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` (inclusive of ``stop``) or a single value."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise argparse.ArgumentTypeError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = nums
    if not step > 0 or not start < stop:
        raise argparse.ArgumentTypeError(f"range needs step > 0 and start < stop, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _add_system(p: argparse.ArgumentParser, multi: bool = False) -> None:
    kind = _int_list if multi else int
    p.add_argument("--m", type=kind, required=True, help="diversity branches M" + (" (list)" if multi else ""))
    p.add_argument("--n", type=kind, required=True, help="interferers N" + (" (list)" if multi else ""))
    p.add_argument("--scenario", choices=[s.value for s in Scenario],
                   help="interference combining; required for M >= 2")
    p.add_argument("--gamma-db", type=float, help="average SIR per interferer per branch, dB (default 0)")
    p.add_argument("--omega-s", type=float, help="desired per-branch average power")
    p.add_argument("--omega-i", type=float, help="interferer per-branch average power")
    p.add_argument("--f-m0", type=float, default=1.0, help="desired-signal max Doppler, Hz")
    p.add_argument("--f-mi", type=float, default=1.0, help="interference max Doppler, Hz")


def _add_numeric(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-period", type=float, default=80.0, help="series sampling period T")
    p.add_argument("--l-terms", type=int, default=200, help="series term count L")
    p.add_argument("--abs-tol", type=float, default=1e-9)
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--max-subdivisions", type=int, default=2000)


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", help=f"output file (relative paths go under ${OUTPUT_DIR_ENV} if set)")
    p.add_argument("--json", action="store_true", help="emit one JSON object per row instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="egcstats", description="EGC output SIR statistics under cochannel interference")
    parser.add_argument("--config", help="key=value file; command line flags override it")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("compute", help="statistics at one threshold")
    _add_system(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--z-db", type=float, help="SIR threshold z in dB")
    g.add_argument("--nsirth-db", type=float, help="normalized threshold gamma/z in dB")
    p.add_argument("--method", type=_methods, default=[Method.QUADRATURE],
                   help="comma-separated subset of density,quadrature,series,closed")
    _add_numeric(p)
    _add_output(p)

    p = sub.add_parser("sweep", help="CSV over an NSIRth grid")
    _add_system(p, multi=True)
    p.add_argument("--nsirth-db", type=parse_range, required=True, help="start:stop:step in dB, inclusive")
    p.add_argument("--method", type=_methods, default=[Method.QUADRATURE])
    p.add_argument("--check", type=float, metavar="TOL",
                   help="exit 2 if methods disagree by more than TOL in op or lcr_norm")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_numeric(p)
    _add_output(p)

    p = sub.add_parser("validate", help="Monte Carlo vs. analytic report")
    _add_system(p)
    p.add_argument("--nsirth-db", type=parse_range, default=parse_range("-5:15:5"))
    p.add_argument("--method", type=_methods, help="analytic reference (default closed for M <= 2, else quadrature)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--periods", type=float, default=5000.0, help="trace length in desired Doppler periods")
    p.add_argument("--samples-per-period", type=float, default=64.0)
    p.add_argument("--n-sinusoids", type=int, default=256)
    _add_output(p)

    p = sub.add_parser("bench", help="evaluation counts and wall time, quadrature vs. series")
    _add_system(p)
    p.add_argument("--nsirth-db", type=parse_range, default=parse_range("-10:30:5"))
    _add_numeric(p)
    _add_output(p)
    return parser


def read_config_file(path: str) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` arguments."""
    args = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes") and key in ("json",):
            args.append(flag)
        else:
            args.extend([flag, value])
    return args


_NEGATIVE = re.compile(r"^-\d|^-\.\d")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-10:30:0.5`` to their option so argparse keeps them as values."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--") and "=" not in a and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def _split_config(argv: list[str]) -> tuple[str | None, list[str]]:
    rest = []
    path = None
    it = iter(argv)
    for a in it:
        if a == "--config":
            path = next(it, None)
            if path is None:
                raise UsageError("--config needs a file")
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
        else:
            rest.append(a)
    return path, rest


def _config(args, m: int, n: int) -> SystemConfig:
    if args.scenario is None:
        if m >= 2:
            raise UsageError("--scenario is required for M >= 2 (incoherent or coherent)")
        scenario = Scenario.INCOHERENT
    else:
        scenario = Scenario(args.scenario)
    if args.omega_s is not None or args.omega_i is not None:
        if args.gamma_db is not None:
            raise UsageError("give either --gamma-db or --omega-s/--omega-i, not both")
        omega_s = 1.0 if args.omega_s is None else args.omega_s
        omega_i = 1.0 if args.omega_i is None else args.omega_i
    else:
        omega_s = 10.0 ** ((args.gamma_db or 0.0) / 10.0)
        omega_i = 1.0
    try:
        return SystemConfig(m, n, omega_s, omega_i, args.f_m0, args.f_mi, scenario)
    except ValueError as exc:
        raise UsageError(str(exc))


def _params(args, method: Method):
    try:
        if method is Method.SERIES:
            return BeaulieuParams(args.t_period, args.l_terms)
        return QuadratureSpec(args.abs_tol, args.rel_tol, args.max_subdivisions)
    except ValueError as exc:
        raise UsageError(str(exc))


def _row(pt, config: SystemConfig, nsirth_db: float) -> dict:
    return {
        "nsirth_db": nsirth_db, "z": pt.z, "scenario": config.scenario.value,
        "m": config.m_branches, "n": config.n_interferers, "method": pt.method.value,
        "op": pt.op, "lcr_norm": pt.lcr_norm, "afd_norm": pt.afd_norm,
        "evals": pt.diagnostics.get("evaluations", 0),
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def format_rows(rows: list[dict], as_json: bool, fields=CSV_FIELDS) -> str:
    if as_json:
        out = []
        for r in rows:
            obj = {k: (float(_fmt(r[k])) if isinstance(r[k], float) else r[k]) for k in fields}
            out.append(json.dumps(obj, allow_nan=True))
        return "".join(line + "\n" for line in out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in fields])
    return buf.getvalue()


def _emit(text: str, output: str | None, stdout) -> None:
    if output is None:
        stdout.write(text)
        return
    base = os.environ.get(OUTPUT_DIR_ENV)
    path = output if os.path.isabs(output) or not base else os.path.join(base, output)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _evaluate(task):
    config, nsirth_db, method, params = task
    z = z_from_nsirth_db(nsirth_db, config.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SeriesConvergenceWarning)
        pt = stat_point(z, config, method, params)
    return _row(pt, config, nsirth_db)


def _check_methods(config_m: int, methods: list[Method]) -> None:
    for method in methods:
        if method in (Method.CLOSED, Method.DENSITY) and config_m > 2:
            word = "closed form" if method is Method.CLOSED else "density integral"
            raise UsageError(f"{word} requires M ≤ 2 (got M={config_m})")


def cmd_compute(args, stdout, stderr) -> int:
    config = _config(args, args.m, args.n)
    _check_methods(config.m_branches, args.method)
    if args.z_db is not None:
        z = 10.0 ** (args.z_db / 10.0)
        nsirth = 10.0 * math.log10(config.gamma / z)
    else:
        nsirth = args.nsirth_db
    rows = [_evaluate((config, nsirth, m, _params(args, m))) for m in args.method]
    if args.json:
        _emit(format_rows(rows, True), args.output, stdout)
        return EXIT_OK
    lines = []
    for r in rows:
        lines.append(f"# {r['method']}: M={r['m']} N={r['n']} {r['scenario']} NSIRth={r['nsirth_db']:.4g} dB "
                     f"z={r['z']:.6g}  OP={r['op']:.10g}  LCR/f_m0={r['lcr_norm']:.10g}  "
                     f"f_m0*AFD={r['afd_norm']:.10g}  evals={r['evals']}\n")
    _emit("".join(lines) + format_rows(rows, False), args.output, stdout)
    return EXIT_OK


def cmd_sweep(args, stdout, stderr) -> int:
    tasks = []
    for m in args.m:
        _check_methods(m, args.method)
        for n in args.n:
            config = _config(args, m, n)
            for d in args.nsirth_db:
                for method in args.method:
                    tasks.append((config, d, method, _params(args, method)))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_evaluate, tasks))
    else:
        rows = [_evaluate(t) for t in tasks]
    order = {m: i for i, m in enumerate(args.method)}
    rows.sort(key=lambda r: (r["nsirth_db"], r["m"], r["n"], order[Method(r["method"])]))
    _emit(format_rows(rows, args.json), args.output, stdout)
    if args.check is not None and len(args.method) > 1:
        worst = 0.0
        groups: dict = {}
        for r in rows:
            groups.setdefault((r["nsirth_db"], r["m"], r["n"]), []).append(r)
        for g in groups.values():
            for key in ("op", "lcr_norm"):
                vals = [r[key] for r in g]
                worst = max(worst, max(vals) - min(vals))
        if not worst <= args.check:
            raise NumericalFailure(f"methods disagree by {worst:.3g} > --check {args.check:g}")
    return EXIT_OK


def cmd_validate(args, stdout, stderr) -> int:
    config = _config(args, args.m, args.n)
    if not config.f_m0 > 0 or not config.f_mi > 0:
        raise UsageError("validate needs positive Doppler shifts")
    method = args.method[0] if args.method else None
    if method is not None:
        _check_methods(config.m_branches, [method])
    try:
        sim = SimParams(args.samples_per_period * config.f_m0, args.periods / config.f_m0,
                        args.n_sinusoids, args.seed, args.trials)
        grid = [z_from_nsirth_db(d, config.gamma) for d in args.nsirth_db]
        report = validate_against_analytic(config, grid, sim, method)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.json:
        _emit(format_rows(report.rows(), True), args.output, stdout)
    else:
        _emit(report.to_csv(), args.output, stdout)
    for p in report.points:
        print(f"NSIRth={p.nsirth_db:.4g} dB: OP {p.op_sim:.5g}±{p.op_se:.2g} (ref {p.op_ref:.5g}) "
              f"LCR {p.lcr_sim:.5g}±{p.lcr_se:.2g} (ref {p.lcr_ref:.5g}) "
              f"pass op={p.op_pass} lcr={p.lcr_pass} afd={p.afd_pass}", file=stderr)
    return EXIT_OK


BENCH_FIELDS = ["nsirth_db", "method", "evals", "seconds", "op", "lcr_norm"]


def cmd_bench(args, stdout, stderr) -> int:
    config = _config(args, args.m, args.n)
    rows = []
    for d in args.nsirth_db:
        for method in (Method.QUADRATURE, Method.SERIES):
            t0 = time.perf_counter()
            r = _evaluate((config, d, method, _params(args, method)))
            rows.append({"nsirth_db": d, "method": method.value, "evals": r["evals"],
                         "seconds": time.perf_counter() - t0, "op": r["op"], "lcr_norm": r["lcr_norm"]})
    _emit(format_rows(rows, args.json, BENCH_FIELDS), args.output, stdout)
    return EXIT_OK


_COMMANDS = {"compute": cmd_compute, "sweep": cmd_sweep, "validate": cmd_validate, "bench": cmd_bench}


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg_path, rest = _split_config(argv)
        if cfg_path is not None and rest:
            # Subcommand first, then file options, then explicit flags (which win).
            rest = rest[:1] + read_config_file(cfg_path) + rest[1:]
        args = build_parser().parse_args(_join_negative_values(rest))
        if args.command is None:
            raise UsageError("a subcommand is required: compute, sweep, validate or bench")
        return _COMMANDS[args.command](args, stdout, stderr)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except MethodDomainError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"numerical failure in quadrature: {exc}", file=stderr)
        return EXIT_NUMERIC
    except SpecFunError as exc:
        print(f"numerical failure in specfun/charfun: {exc}", file=stderr)
        return EXIT_NUMERIC
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
