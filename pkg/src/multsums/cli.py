"""Command line entry point.

Exit codes: 0 when every verdict passes, 2 when some verdict fails, 1 on a
hard error (bad arguments, resource limits, I/O).
"""

from __future__ import annotations

import argparse
import contextlib
import io
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, _accel
from . import lseries, multfun, report, sieveweights
from .harness import (
    DEFAULT_T,
    CatalogError,
    ExperimentConfig,
    catalog,
    run_experiment,
    twisted_prime_sum_profile,
)
from .multfun import OrdinateMultiset
from .primes import CapacityError, build_factor_table
from .sums import DEFAULT_GRID, fmt17

EXIT_OK, EXIT_HARD, EXIT_FAILED = 0, 1, 2
DEFAULT_LIMIT = 10**7


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_HARD, f"{self.prog}: error: {message}\n")


def _int(s: str) -> int:
    """Integers, also written as ``1e7`` or ``10**7``."""
    s = s.strip()
    try:
        if "**" in s:
            b, e = s.split("**")
            return int(b) ** int(e)
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if not v.is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}")
    return int(v)


def _int_list(s: str) -> list[int]:
    return [_int(t) for t in s.split(",") if t.strip()]


def _gamma(s: str):
    s = s.strip()
    if s == "scanned":
        return "scanned"
    if s in ("", "none", "empty"):
        return []
    return [float(t) for t in s.split(",") if t.strip()]


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--limit", type=_int, default=d(DEFAULT_LIMIT), help="factor table limit")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads (results do not depend on it)")
    p.add_argument("--out", default=d(None), help="output file (stdout when omitted)")
    p.add_argument("--format", choices=report.FORMATS, default=d("json"))
    p.add_argument("--config", default=d(None), help="flat 'key = value' file overriding defaults")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="multsums", description="Multiplicative functions with small partial sums.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate L(s, f) or -L'/L(s, f)")
    p.add_argument("--function", default="moebius")
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--N", type=_int, default=None, help="truncation (default: --limit)")
    p.add_argument("--gamma", type=_gamma, default=[], help="ordinates for f_Gamma on the 1-line")
    p.add_argument("--log-deriv", type=_bool, nargs="?", const=True, default=False)

    p = sub.add_parser("lambda", help="Lambda_f on prime powers, optionally with a class check")
    p.add_argument("--function", default="moebius")
    p.add_argument("--p-max", type=_int, default=100)
    p.add_argument("--a-max", type=int, default=5)
    p.add_argument("--gamma", type=_gamma, default=[])
    p.add_argument("--D", type=int, default=None, help="also run the F(D) class check up to --class-x")
    p.add_argument("--class-x", type=_int, default=10**5)

    p = sub.add_parser("zeros", help="scan for zeros of L(s, f) on the 1-line")
    p.add_argument("--function", default="moebius")
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--grid-step", type=float, default=lseries.DEFAULT_GRID_STEP)
    p.add_argument("--X", type=_int, default=None, help="truncation (default: --limit)")
    p.add_argument("--threshold", type=float, default=lseries.DEFAULT_THRESHOLD)

    p = sub.add_parser("verify", help="run the discrepancy experiment for one function")
    p.add_argument("--function", default="legendre_chi:5")
    p.add_argument("--D", type=int, default=None, help="default: the function's declared D")
    p.add_argument("--A", type=float, default=3.0)
    p.add_argument("--x-grid", type=_int_list, default=None, help="comma separated (default: decades to --limit)")
    p.add_argument("--T", type=float, default=DEFAULT_T)
    p.add_argument("--gamma", type=_gamma, default="scanned", help="'scanned' or a comma separated list")
    p.add_argument("--remark-mode", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--grid-step", type=float, default=lseries.DEFAULT_GRID_STEP)
    p.add_argument("--threshold", type=float, default=lseries.DEFAULT_THRESHOLD)

    p = sub.add_parser("sieve-demo", help="build beta-sieve weights and check the sandwich")
    p.add_argument("--z", type=float, default=30.0)
    p.add_argument("--u", type=float, default=3.0)
    p.add_argument("--beta", type=int, default=sieveweights.DEFAULT_BETA)
    p.add_argument("--N", type=_int, default=10**6)
    p.add_argument("--r", type=int, default=1, help="log power in the moment comparison")
    p.add_argument("--weights", type=_bool, nargs="?", const=True, default=False,
                   help="emit the (d, lambda_plus, lambda_minus) table instead of the check")

    p = sub.add_parser("remark", help="demos: the tau_{-kappa} counterexample and twisted prime sums")
    p.add_argument("--which", choices=("counterexample", "twisted"), default="counterexample")
    p.add_argument("--kappa", type=float, default=math.sqrt(2))
    p.add_argument("--gammas", type=_gamma, default=[0.0, 0.5, 1.0, 2.0, 5.0])
    p.add_argument("--x-grid", type=_int_list, default=None)

    for sp in sub.choices.values():
        _add_globals(sp, suppress=True)
    return ap


# ---------------------------------------------------------------------------
# config file


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e.strerror or e}") from e
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{i}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _option_map(p: argparse.ArgumentParser) -> dict[str, str]:
    """dest -> long option string."""
    return {a.dest: a.option_strings[0] for a in p._actions
            if a.option_strings and a.option_strings[0].startswith("--")}


def _merge_config(ap: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Splice config values in after the subcommand, skipping keys given on the command line."""
    pre, _ = ap.parse_known_args(argv)
    if not getattr(pre, "config", None):
        return argv
    cfg = read_config(pre.config)
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction)).choices[pre.command]
    opts = _option_map(sub)
    given = {t.split("=", 1)[0] for t in argv if t.startswith("--")}
    extra = []
    for k, v in cfg.items():
        if k not in opts or k == "config":
            raise CliError(f"config key {k!r} is not an option of '{pre.command}'")
        if opts[k] not in given:
            extra += [f"{opts[k]}={v}"]
    i = argv.index(pre.command)
    return argv[: i + 1] + extra + argv[i + 1 :]


# ---------------------------------------------------------------------------
# commands


def _table(need: int, limit: int):
    if need > limit:
        raise CliError(f"requested range {need} exceeds --limit {limit}")
    return build_factor_table(max(2, need))


def _rows_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt17(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _flat(d: dict) -> str:
    return _rows_csv(["key", "value"], sorted(d.items()))


def cmd_eval(a, map_fn):
    spec = catalog(a.function)
    N = a.N or a.limit
    table = _table(N, a.limit)
    s = complex(a.sigma, a.t)
    if a.log_deriv:
        res = lseries.log_deriv(spec, s, N, table, OrdinateMultiset.of(a.gamma or []))
        what = "-L'/L"
    elif a.sigma > 1:
        res = lseries.evaluate_L(spec, s, N, table)
        what = "L"
    elif a.sigma == 1:
        res = lseries.evaluate_L_on_line(spec, OrdinateMultiset.of(a.gamma or []), a.t, N, table)
        what = "L"
    else:
        raise CliError("sigma < 1 is not supported")
    out = {"function": spec.name, "quantity": what, "sigma": a.sigma, "t": a.t, "re": res.value.real,
           "im": res.value.imag, "abs": abs(res.value), "truncation": res.truncation,
           "tail_bound": res.tail_bound, "heuristic": res.heuristic}
    return out, EXIT_OK


def cmd_lambda(a, map_fn):
    spec = catalog(a.function)
    gam = OrdinateMultiset.of(a.gamma or [])
    fg = multfun.convolve_specs(spec, multfun.tau_gamma_spec(gam)) if gam.m else spec
    need = max(a.p_max, a.class_x if a.D is not None else 2)
    table = _table(need, a.limit)
    lam = multfun.lambda_of(fg, a.p_max, a.a_max, table)
    rows = [{"p": p, "a": k, "re": v.real, "im": v.imag} for (p, k), v in lam.items()]
    out = {"function": fg.name, "lambda": rows}
    code = EXIT_OK
    if a.D is not None:
        rep = multfun.verify_class(spec, a.D, min(a.p_max, a.class_x), a.a_max, a.class_x, table)
        out["class"] = rep.to_dict()
        out["class"]["violations"] = rep.violations
        code = EXIT_OK if rep.passed else EXIT_FAILED
    return out, code


def cmd_zeros(a, map_fn):
    spec = catalog(a.function)
    X = a.X or a.limit
    table = _table(X, a.limit)
    rep = lseries.zero_scan(spec, a.T, a.grid_step, X, table, threshold=a.threshold, map_fn=map_fn)
    out = rep.to_dict()
    out["function"] = spec.name
    out["within_D"] = rep.within_D
    return out, EXIT_OK if rep.within_D else EXIT_FAILED


def _decades(limit: int, lo: int = 10**4) -> list[int]:
    return [x for x in DEFAULT_GRID if lo <= x <= limit] or [limit]


def cmd_verify(a, map_fn):
    spec = catalog(a.function)
    grid = a.x_grid or _decades(a.limit)
    D = a.D if a.D is not None else spec.declared_D
    cfg = ExperimentConfig(a.function, D, a.A, grid, T=a.T, gamma_mode=a.gamma, output_path=a.out or "",
                           format=a.format, remark_mode=a.remark_mode, grid_step=a.grid_step,
                           threshold=a.threshold)
    table = _table(max(grid), a.limit)
    rep = run_experiment(cfg, table, map_fn=map_fn)
    return rep, EXIT_OK if rep.passed else EXIT_FAILED


def cmd_sieve(a, map_fn):
    sysw = sieveweights.build_weights(a.z, a.u, beta=a.beta)
    if a.weights:
        return sysw.to_csv(), EXIT_OK
    table = _table(a.N, a.limit)
    sw = sieveweights.sandwich_check(sysw, a.N, table)
    lo, cnt, hi = sieveweights.sifted_count_bounds(sysw, a.N)
    moments = {}
    for sign, tag in ((1, "plus"), (-1, "minus")):
        m = sieveweights.moment_compare(sysw, multfun.ones(), a.r, sign)
        moments[tag] = {"sieved": m.sieved, "mobius": m.mobius, "scale": m.scale, "C_fit": m.C_fit}
    ok = sw.passed and lo <= cnt <= hi
    out = {"z": a.z, "u": a.u, "beta": a.beta, "level": sysw.level, "sandwich": sw.to_dict(),
           "count_bounds": {"lower": lo, "count": cnt, "upper": hi}, "moments": moments, "r": a.r}
    return out, EXIT_OK if ok else EXIT_FAILED


def cmd_remark(a, map_fn):
    grid = a.x_grid or _decades(a.limit)
    table = _table(max(grid), a.limit)
    if a.which == "counterexample":
        name = f"tau_minus_kappa:{a.kappa!r}"
        D = catalog(name).declared_D
        cfg = ExperimentConfig(name, D, float(D), grid, gamma_mode=[], output_path=a.out or "",
                               format=a.format, remark_mode=True)
        rep = run_experiment(cfg, table, map_fn=map_fn)
        return rep, EXIT_OK if rep.passed else EXIT_FAILED
    prof = twisted_prime_sum_profile(a.gammas if isinstance(a.gammas, list) else [], grid, table, map_fn)
    return prof, EXIT_OK if math.isfinite(prof.C) else EXIT_FAILED


COMMANDS = {"eval": cmd_eval, "lambda": cmd_lambda, "zeros": cmd_zeros, "verify": cmd_verify,
            "sieve-demo": cmd_sieve, "remark": cmd_remark}


def _render(result, fmt: str) -> str:
    if isinstance(result, str):
        return result
    if hasattr(result, "verdicts"):
        return report.render(result, fmt)
    if hasattr(result, "err_scale"):
        d = result.to_dict()
        if fmt == "csv":
            rows = [(g, x, e) for g, row in zip(result.gammas, result.err_scale) for x, e in zip(result.x_grid, row)]
            return _rows_csv(["gamma", "x", "err_scale"], rows)
        if fmt == "svg":
            series = {f"gamma={g:g}": ([float(x) for x in result.x_grid], row)
                      for g, row in zip(result.gammas, result.err_scale)}
            return report.svg_plot(series, "twisted prime sums: |error| log x / x")
        return report.dumps(d) + "\n"
    if fmt == "json":
        return report.dumps(result) + "\n"
    if fmt == "csv":
        if "lambda" in result:
            return _rows_csv(["p", "a", "re", "im"], [(r["p"], r["a"], r["re"], r["im"]) for r in result["lambda"]])
        if "ordinates" in result:
            return _rows_csv(["gamma", "multiplicity", "slope_fit", "status"],
                             [(c["gamma"], c["multiplicity"], c["slope_fit"], st)
                              for st in ("ordinates", "ambiguous") for c in result[st]])
        return _flat({k: v for k, v in result.items() if not isinstance(v, (dict, list))})
    raise CliError(f"format {fmt!r} is not available for this command")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        try:
            argv = _merge_config(ap, argv)
            a = ap.parse_args(argv)
        except SystemExit as e:  # --help, --version and usage errors
            return EXIT_HARD if e.code not in (0, None) else EXIT_OK
        _accel.set_threads(a.threads)
        with contextlib.ExitStack() as stack:
            map_fn = map
            if a.threads > 1:
                map_fn = stack.enter_context(ThreadPoolExecutor(max_workers=a.threads)).map
            result, code = COMMANDS[a.command](a, map_fn)
        text = _render(result, a.format)
        if a.out:
            report.write_text(text, a.out)
        else:
            sys.stdout.write(text)
        return code
    except (CliError, CatalogError, CapacityError, report.ReportError, ValueError,
            sieveweights.SupportCapError) as e:
        print(f"multsums: error: {e}", file=sys.stderr)
        return EXIT_HARD


if __name__ == "__main__":
    sys.exit(main())
