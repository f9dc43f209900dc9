"""Command-line front end.

Option precedence: command line, then a key=value config file (``--config``),
then built-in defaults.  The only environment variable read is
QUADMOMENT_CACHE, the default h/R cache path.

Exit codes: 0 all hard checks passed, 1 a check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

from . import __version__
from .density import (
    HypothesisError,
    correlation_from_parts,
    predicted_correlation,
    predicted_inner,
    predicted_mean,
    predicted_mean_dual,
)
from .experiments import (
    CostGuardError,
    correlation_run,
    inner_product_run,
    mean_square_run,
    verify_disc_twist,
)
from .localdata import LocalDataError, dual_stuple, parse_stuple
from .orbitcount import orbit as orb
from .orbitcount.majorant import majorant_series
from .quadfields import HRCache, fundamental_masks, hR, sieve_class_numbers_imag

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "s": None,
    "m": None,
    "X": None,
    "primes": 100000,
    "cache": None,
    "format": "text",
    "out": None,
    "manifest": None,
    "threads": 1,
    "memory_cap": 4096,
    "override": False,
    "conjectural": False,
    "tol": None,
    "p": None,
    "n": None,
    "classes": ",".join(orb.CLASSES),
    "delta": None,
    "d": None,
    "escape": orb.ESCAPE_SAMPLES,
}


class UsageError(ValueError):
    pass


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            k = k.strip().replace("-", "_")
            if k not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {k!r}")
            out[k] = v.strip()
    return out


def _int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(float(x)) for x in text]
    try:
        return [int(float(x)) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quadmoment", description="Mean values of h^2 R^2 over quadratic families.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value file; command-line options override it")
        sp.add_argument("--format", choices=["text", "csv", "json"], default=None)
        sp.add_argument("--out", help="write the main table here instead of stdout")
        sp.add_argument("--manifest", help="write a JSON run manifest here")
        sp.add_argument("--threads", type=int, default=None, help="worker count (computations are single threaded)")
        sp.add_argument("--memory-cap", dest="memory_cap", type=int, default=None, help="MiB")
        sp.add_argument("--cache", help="h/R cache file (default: $QUADMOMENT_CACHE)")
        return sp

    def stuple(sp, m=False):
        sp.add_argument("--s", help='local conditions, e.g. "inf=C;3=rm;7=sp"')
        if m:
            sp.add_argument("--m", type=int, help="discriminant of the auxiliary field")
        sp.add_argument("--primes", type=int, default=None, help="prime bound for Euler products")

    def runs(sp):
        sp.add_argument("--X", help="comma-separated cutoffs")
        sp.add_argument("--override", action="store_true", default=None, help="lift the cutoff cost guard")
        sp.add_argument("--tol", type=float, default=None, help="fail if |rel_err| at the largest X exceeds this")

    sp = common(sub.add_parser("predict-mean", help="predicted mean of h^2 R^2"))
    stuple(sp)
    sp.add_argument("--conjectural", action="store_true", default=None)
    sp = common(sub.add_parser("predict-cor", help="predicted correlation coefficient"))
    stuple(sp, m=True)
    sp = common(sub.add_parser("run-mean", help="empirical mean of h^2 R^2"))
    stuple(sp)
    runs(sp)
    sp.add_argument("--conjectural", action="store_true", default=None)
    for verb in ("run-cor", "run-inner"):
        sp = common(sub.add_parser(verb, help=f"empirical {verb[4:]} of a twisted pair family"))
        stuple(sp, m=True)
        runs(sp)
    sp = common(sub.add_parser("verify-local", help="orbit-volume oracle"))
    sp.add_argument("--p", help="comma-separated odd primes")
    sp.add_argument("--n", type=int, default=None, help="exponent (default per class)")
    sp.add_argument("--classes")
    sp.add_argument("--escape", type=int, default=None, help="random escape samples")
    sp = common(sub.add_parser("verify-stab", help="stabilizer congruence counts"))
    sp.add_argument("--p", type=int)
    sp.add_argument("--delta", type=int)
    sp = common(sub.add_parser("verify-twist", help="discriminant twist law"))
    stuple(sp, m=True)
    sp.add_argument("--X")
    sp = common(sub.add_parser("hr", help="class number and regulator"))
    sp.add_argument("--d", help="comma-separated fundamental discriminants")
    sp = common(sub.add_parser("sieve", help="imaginary class numbers by form counting"))
    sp.add_argument("--X")
    return ap


def resolve(ns: argparse.Namespace) -> dict:
    cfg = read_config(ns.config) if getattr(ns, "config", None) else {}
    opts = {}
    for k, default in DEFAULTS.items():
        v = getattr(ns, k, None)
        if v is None:
            v = cfg.get(k, default)
        opts[k] = v
    if opts["cache"] is None:
        opts["cache"] = os.environ.get("QUADMOMENT_CACHE")
    for k in ("primes", "threads", "memory_cap", "escape"):
        opts[k] = int(float(opts[k]))
    for k in ("override", "conjectural"):
        opts[k] = _bool(opts[k])
    if opts["n"] is not None:
        opts["n"] = int(opts["n"])
    if opts["tol"] is not None:
        opts["tol"] = float(opts["tol"])
    return opts


def _need(opts, *keys):
    missing = [k for k in keys if opts.get(k) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _s(opts):
    _need(opts, "s")
    return parse_stuple(opts["s"])


def _fmt(x) -> str:
    return repr(float(x))


class Output:
    def __init__(self, opts):
        self.opts = opts
        self.buf = io.StringIO()
        self.checks: list[dict] = []
        self.results: dict = {}

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "ok": bool(ok), "detail": detail})

    def write(self, text: str) -> None:
        self.buf.write(text)
        if not text.endswith("\n"):
            self.buf.write("\n")

    def table(self, header, rows) -> None:
        if self.opts["format"] == "json":
            self.results["rows"] = [dict(zip(header, r)) for r in rows]
            return
        if self.opts["format"] == "csv":
            w = csv.writer(self.buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            return
        for r in rows:
            self.write("  ".join(f"{h}={v}" for h, v in zip(header, r)))

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks)

    def flush(self) -> None:
        if self.opts["format"] == "json":
            text = json.dumps({"results": self.results, "checks": self.checks}, indent=2, sort_keys=True) + "\n"
        else:
            text = self.buf.getvalue()
            lines = "".join(
                f"{'PASS' if c['ok'] else 'FAIL'} {c['name']} {c['detail']}".rstrip() + "\n"
                for c in self.checks
            )
            # keep CSV output machine-readable
            if self.opts["format"] == "csv":
                sys.stderr.write(lines)
            else:
                text += lines
        if self.opts["out"]:
            Path(self.opts["out"]).write_text(text)
        else:
            sys.stdout.write(text)


# --- verbs -------------------------------------------------------------------


def cmd_predict_mean(opts, out: Output):
    s = _s(opts)
    est = predicted_mean(s, opts["primes"], conjectural=opts["conjectural"])
    out.results["prediction"] = est.to_dict()
    if opts["format"] == "csv":
        d = est.to_dict()
        out.table(list(d)[:-1], [[d[k] for k in list(d)[:-1]]])
    else:
        out.write(est.to_text())
    lo, hi = est.interval()
    out.write(f"interval=[{lo!r}, {hi!r}]")


def cmd_predict_cor(opts, out: Output):
    s = _s(opts)
    _need(opts, "m")
    m = int(opts["m"])
    B = opts["primes"]
    cor = predicted_correlation(m, s, B)
    parts = {
        "correlation": cor,
        "inner": predicted_inner(m, s, B),
        "mean": predicted_mean(s, B),
        "dual_mean": predicted_mean_dual(m, s, B),
    }
    ratio, tail = correlation_from_parts(m, s, B)
    out.write(f"dual_tuple={dual_stuple(s, m).format()}")
    rows = [[k, _fmt(v.value), f"{v.tail_bound_log:.3e}"] for k, v in parts.items()]
    out.table(["constant", "value", "tail_bound_log"], rows)
    out.results["predictions"] = {k: v.to_dict() for k, v in parts.items()}
    rel = abs(float(ratio) / cor.value - 1)
    out.write(f"inner/sqrt(mean*dual)={_fmt(ratio)}")
    out.check("parts-consistency", rel <= tail + cor.tail_bound_log, f"rel={rel:.3e}")


def _report_table(rep, out: Output):
    out.results["report"] = rep.to_dict()
    rows = [
        [X, c, _fmt(e), _fmt(rep.prediction.value), _fmt(r)]
        for X, c, e, r in zip(rep.cutoffs, rep.field_count, rep.empirical, rep.rel_err)
    ]
    out.table(["X", "count", "empirical", "prediction", "rel_err"], rows)
    for n in rep.notes:
        out.write(f"# {n}")
    out.check("rel_err-finite", all(math.isfinite(r) for r in rep.rel_err))
    out.check(
        "count-nondecreasing",
        all(b >= a for a, b in zip(rep.field_count, rep.field_count[1:])),
    )
    flags = rep.count_flags()
    if flags:
        out.write(f"# field count differs from the density heuristic by >20% at X={flags}")
    if opts_tol := out.opts["tol"]:
        out.check("rel_err-tolerance", abs(rep.rel_err[-1]) <= opts_tol, f"|rel_err|={abs(rep.rel_err[-1]):.3e}")


def _cache(opts):
    return HRCache(opts["cache"]) if opts["cache"] else None


def _save(cache):
    if cache is not None:
        cache.save()


def cmd_run_mean(opts, out: Output):
    s = _s(opts)
    _need(opts, "X")
    cache = _cache(opts)
    rep = mean_square_run(
        s, _int_list(opts["X"]), cache, opts["primes"], opts["override"], opts["conjectural"]
    )
    _save(cache)
    _report_table(rep, out)


def cmd_run_pair(opts, out: Output, fn):
    s = _s(opts)
    _need(opts, "m", "X")
    cache = _cache(opts)
    rep = fn(int(opts["m"]), s, _int_list(opts["X"]), cache, opts["primes"], opts["override"])
    _save(cache)
    _report_table(rep, out)
    if fn is correlation_run:
        out.check("cauchy-schwarz", all(0 < e <= 1 for e in rep.empirical))


def cmd_verify_local(opts, out: Output):
    _need(opts, "p")
    rows = []
    for p in _int_list(opts["p"]):
        for cls in str(opts["classes"]).split(","):
            cls = cls.strip()
            n = opts["n"] or orb.default_n(cls)
            mib = p ** (8 * n) / 8 / 2**20
            if mib > opts["memory_cap"]:
                raise UsageError(f"p={p} n={n} needs a {mib:.0f} MiB state bitmap, above --memory-cap {opts['memory_cap']}")
            try:
                rep = orb.epsilon_from_orbit(p, cls, n, escape_samples=opts["escape"])
            except orb.OrbitError as exc:
                rows.append([p, n, cls, "", "", "", "", "", "", f"FAIL: {exc}"])
                out.check(f"orbit {cls} p={p} n={n}", False, str(exc))
                continue
            rows.append(rep.csv_row())
            out.check(f"orbit {cls} p={p} n={n}", rep.ok, f"factor={rep.relation_factor}")
    out.table(orb.CSV_HEADER, rows)


def cmd_verify_stab(opts, out: Output):
    _need(opts, "p", "delta")
    p, delta = int(opts["p"]), int(opts["delta"])
    a1, a2, n = orb.stabilizer_params(p, delta)
    count = orb.stabilizer_congruence_count(p, n, a1, a2)
    expected = 2 * p**delta
    out.table(["p", "delta", "n", "a1", "a2", "count", "expected"], [[p, delta, n, a1, a2, count, expected]])
    out.write(f"count {count} vs expected {expected}")
    out.check(f"stabilizer p={p} delta={delta}", count == expected)


def cmd_verify_twist(opts, out: Output):
    s = _s(opts)
    _need(opts, "m", "X")
    X = max(_int_list(opts["X"]))
    rep = verify_disc_twist(int(opts["m"]), s, X)
    out.table(["m", "config", "X", "checked", "counterexamples"], [[rep.m, rep.config, X, rep.checked, len(rep.counterexamples)]])
    for d, ds in rep.counterexamples[:20]:
        out.write(f"# counterexample d={d} d*={ds}")
    out.check("twist-law", rep.ok, f"checked={rep.checked}")


def cmd_hr(opts, out: Output):
    _need(opts, "d")
    cache = _cache(opts)
    rows = []
    for d in _int_list(opts["d"]):
        rec = hR(d, cache)
        rows.append([rec.d, rec.h, f"{rec.R:.12g}"])
    _save(cache)
    out.table(["d", "h", "R"], rows)


def cmd_sieve(opts, out: Output):
    _need(opts, "X")
    X = max(_int_list(opts["X"]))
    if X > 10**7 and not opts["override"]:
        raise CostGuardError("sieve beyond 10^7 needs --override")
    h = sieve_class_numbers_imag(X)
    _, neg = fundamental_masks(X)
    cache = _cache(opts)
    if cache is not None:
        from .quadfields import FieldRecord

        for n in neg.nonzero()[0].tolist():
            cache.put(FieldRecord(-n, int(h[n]), 1.0))
        cache.save()
        out.write(f"cached {int(neg.sum())} imaginary fields with |d| <= {X}")
    else:
        out.table(["d", "h", "R"], [[-n, int(h[n]), "1"] for n in neg.nonzero()[0].tolist()])
    out.check("sieve-positive", bool((h[neg] >= 1).all()))


VERBS = {
    "predict-mean": cmd_predict_mean,
    "predict-cor": cmd_predict_cor,
    "run-mean": cmd_run_mean,
    "run-cor": lambda o, out: cmd_run_pair(o, out, correlation_run),
    "run-inner": lambda o, out: cmd_run_pair(o, out, inner_product_run),
    "verify-local": cmd_verify_local,
    "verify-stab": cmd_verify_stab,
    "verify-twist": cmd_verify_twist,
    "hr": cmd_hr,
    "sieve": cmd_sieve,
}


def _versions() -> dict:
    import mpmath
    import numba
    import numpy
    import sympy

    return {
        "quadmoment": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "numba": numba.__version__,
        "mpmath": mpmath.__version__,
        "sympy": sympy.__version__,
    }


def dispatch(verb: str, opts: dict) -> int:
    out = Output(opts)
    t0 = time.perf_counter()
    try:
        VERBS[verb](opts, out)
    except (UsageError, HypothesisError, CostGuardError, LocalDataError, ValueError) as exc:
        print(f"quadmoment {verb}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    elapsed = time.perf_counter() - t0
    out.flush()
    if opts["manifest"]:
        manifest = {
            "verb": verb,
            "inputs": {k: v for k, v in opts.items() if v is not None},
            "versions": _versions(),
            "seconds": round(elapsed, 3),
            "checks": out.checks,
            "ok": out.ok,
        }
        Path(opts["manifest"]).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return EXIT_OK if out.ok else EXIT_CHECK


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve(ns)
    except (UsageError, ValueError, OSError) as exc:
        print(f"quadmoment: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(ns.verb, opts)


if __name__ == "__main__":
    sys.exit(main())
