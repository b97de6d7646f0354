"""Command-line front end.

    twobridge tau 29/11
    twobridge obstruct "45,17 name=10_10" --format json
    twobridge batch table1.csv -o out.csv --cache ~/.cache/twobridge --jobs 4
    twobridge twist 21 55

Exit status: 0 success, 1 invalid input, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .grid import OracleGuardError
from .homology import compute
from .knot import InconsistencyError, InvalidKnotError, TwoBridgeKnot
from .lens_d import d_branched_cover_multiset
from .obstruct import ObstructionReport, TestResult, prime_factors, twist_D, twist_family_independent, verdict

CACHE_ENV = "CONCORDANCE_CACHE"
FORMATS = ("table", "csv", "json")


@dataclass(frozen=True)
class KnotSpec:
    p: int
    q: int
    name: Optional[str] = None

    def knot(self) -> TwoBridgeKnot:
        return TwoBridgeKnot(self.p, self.q, self.name)


_KNOT_RE = re.compile(r"^\s*(-?\d+)\s*[/,]\s*(-?\d+)\s*(?:name\s*=\s*(\S+))?\s*$")


def parse_knot(text: str) -> KnotSpec:
    """Accepts "p/q" or "p,q", optionally followed by "name=..."."""
    m = _KNOT_RE.match(text)
    if not m:
        raise InvalidKnotError(f"cannot parse knot {text!r}; expected 'p/q' or 'p,q' [name=...]")
    spec = KnotSpec(int(m.group(1)), int(m.group(2)), m.group(3))
    spec.knot()  # validate
    return spec


def fmt_q(x) -> str:
    """Exact rational as "a/b" in lowest terms."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- cache --------------------------------------------------------------------

def cache_dir(option: Optional[str]) -> Optional[Path]:
    env = os.environ.get(CACHE_ENV)
    chosen = env if env else option
    return Path(chosen) if chosen else None


def _cache_path(root: Path, knot: TwoBridgeKnot) -> Path:
    return root / f"{knot.p}_{knot.q}.json"


def _load_cached(root: Path, knot: TwoBridgeKnot):
    path = _cache_path(root, knot)
    try:
        rec = json.loads(path.read_text())
        tau = {int(s): Fraction(v) for s, v in rec["tau"].items()}
        d = {int(s): Fraction(v) for s, v in rec["d"].items()}
    except (OSError, ValueError, KeyError, TypeError, AttributeError):
        return None
    if (rec.get("p"), rec.get("q")) != (knot.p, knot.q):
        return None
    if set(tau) != set(range(knot.p)) or set(d) != set(range(knot.p)):
        return None
    if Counter(d.values()) != d_branched_cover_multiset(knot):
        return None
    return tau, d


def tables(knot: TwoBridgeKnot, oracle: bool = False, cache: Optional[Path] = None):
    """(tau, d) for a knot, through the cache when one is given."""
    if cache is not None and not oracle:
        hit = _load_cached(cache, knot)
        if hit is not None:
            return hit
    data = compute(knot, "oracle" if oracle else "rectangles")
    tau, d = data.table.tau, data.table.d
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)
        report = verdict(knot, tau, d)
        tmp = _cache_path(cache, knot).with_suffix(".tmp")
        tmp.write_text(dump_json(report_to_dict(report)))
        tmp.replace(_cache_path(cache, knot))
    return tau, d


# -- serialization --------------------------------------------------------------

def _test_dict(t: TestResult) -> dict:
    out = {"kind": t.kind, "p": t.p, "k": t.k, "value": fmt_q(t.value), "fired": t.fired}
    if t.of is not None:
        out["of"] = t.of
    return out


def report_to_dict(report: ObstructionReport) -> dict:
    k = report.knot
    return {
        "p": k.p,
        "q": k.q,
        "tau": {str(s): fmt_q(v) for s, v in sorted(report.tau.items())},
        "d": {str(s): fmt_q(v) for s, v in sorted(report.d.items())},
        "tests": [_test_dict(t) for t in report.tests],
        "verdict": report.verdict,
    }


ROW_BASE = ["name", "p", "q", "det", "verdict", "tests_fired"]


def report_row(report: ObstructionReport, name: str = "") -> dict:
    """One ReportRow: identifiers, verdict, fired tests and every T/D value."""
    k = report.knot
    row = {"name": name or (k.name or ""), "p": k.p, "q": k.q, "det": k.determinant,
           "verdict": report.verdict, "tests_fired": ";".join(report.tests_fired)}
    for t in report.tests:
        if t.kind in ("T", "D"):
            row[t.name] = fmt_q(t.value)
    return row


def _value_columns(rows) -> list:
    keys = {c for r in rows for c in r if c not in ROW_BASE and c != "error"}

    def order(c):
        kind, n = c.split("_")
        return int(n), kind != "T"

    return sorted(keys, key=order)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    cols = ROW_BASE + _value_columns(rows) + ["error"]
    w = csv.DictWriter(buf, fieldnames=cols, restval="", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _table_csv(name: str, values: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", name])
    for s, v in sorted(values.items()):
        w.writerow([s, fmt_q(v)])
    return buf.getvalue()


def _table_text(title: str, name: str, values: dict) -> str:
    lines = [title, f"{'label':>6}  {name}"]
    lines += [f"{s:>6}  {Fraction(v)}" for s, v in sorted(values.items())]
    return "\n".join(lines) + "\n"


def render_report(report: ObstructionReport, fmt: str) -> str:
    if fmt == "json":
        return dump_json(report_to_dict(report))
    if fmt == "csv":
        return rows_to_csv([report_row(report)])
    k = report.knot
    lines = [f"K({k.p},{k.q})" + (f" {k.name}" if k.name else "") + f"  det={k.determinant}",
             f"{'label':>6}  {'tau':>6}  d"]
    for s in sorted(report.tau):
        lines.append(f"{s:>6}  {str(report.tau[s]):>6}  {report.d[s]}")
    lines.append("tests:")
    for t in report.tests:
        mark = "fired" if t.fired else "-"
        lines.append(f"  {t.name:<16} {str(t.value):>10}  {mark}")
    lines.append(f"verdict: {report.verdict}")
    return "\n".join(lines) + "\n"


# -- single knot ------------------------------------------------------------------

def run_knot(spec: KnotSpec, command: str = "obstruct", fmt: str = "table",
             oracle: bool = False, cache: Optional[Path] = None):
    """Run one subcommand on one knot; returns (report or None, text)."""
    knot = spec.knot()
    if command == "hfk":
        data = compute(knot, "oracle" if oracle else "rectangles")
        classes = data.hfk
        if fmt == "json":
            body = {"p": knot.p, "q": knot.q,
                    "hfk": [{"label": s, "A": fmt_q(a), "M": fmt_q(m)} for s, a, m in classes]}
            return None, dump_json(body)
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["label", "A", "M"])
            w.writerows([s, fmt_q(a), fmt_q(m)] for s, a, m in classes)
            return None, buf.getvalue()
        lines = [f"HFK-hat of the lift of K({knot.p},{knot.q}), rank {len(classes)}",
                 f"{'label':>6}  {'A':>5}  M"]
        lines += [f"{s:>6}  {str(a):>5}  {m}" for s, a, m in classes]
        return None, "\n".join(lines) + "\n"
    tau, d = tables(knot, oracle, cache)
    report = verdict(knot, tau, d)
    if command in ("tau", "d"):
        values = tau if command == "tau" else d
        if fmt == "json":
            return report, dump_json({"p": knot.p, "q": knot.q,
                                      command: {str(s): fmt_q(v) for s, v in sorted(values.items())}})
        if fmt == "csv":
            return report, _table_csv(command, values)
        return report, _table_text(f"K({knot.p},{knot.q})", command, values)
    if command == "obstruct":
        return report, render_report(report, fmt)
    raise ValueError(f"unknown command {command!r}")


# -- batch -------------------------------------------------------------------------

def read_batch(path) -> list:
    """Rows of a headered name,p,q CSV as (name, p-text, q-text)."""
    text = Path(path).read_text()
    if not text.strip():
        return []
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:3]] != ["name", "p", "q"]:
        raise InvalidKnotError("batch input needs the header name,p,q")
    return [((r.get("name") or "").strip(), (r.get("p") or "").strip(), (r.get("q") or "").strip())
            for r in reader]


def _batch_one(args):
    name, p, q, oracle, cache = args
    try:
        spec = parse_knot(f"{p}/{q}")
        knot = TwoBridgeKnot(spec.p, spec.q, name or None)
        tau, d = tables(knot, oracle, Path(cache) if cache else None)
        report = verdict(knot, tau, d)
        return report_row(report, name), report_to_dict(report)
    except (InvalidKnotError, InconsistencyError, OracleGuardError, ValueError) as exc:
        row = {"name": name, "p": p, "q": q, "det": "", "verdict": "error", "tests_fired": "",
               "error": f"{type(exc).__name__}: {exc}"}
        return row, None


def run_batch(input_path, output_path=None, cache: Optional[Path] = None, jobs: int = 1,
              fmt: str = "csv", oracle: bool = False) -> dict:
    """Process a batch file; rows keep input order, failing rows are quarantined."""
    rows = read_batch(input_path)
    work = [(n, p, q, oracle, str(cache) if cache else None) for n, p, q in rows]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_one, work))
    else:
        results = [_batch_one(w) for w in work]
    if not rows:
        text = ""
    elif fmt == "json":
        text = dump_json([rep if rep is not None else row for row, rep in results])
    else:
        text = rows_to_csv([row for row, _ in results])
    if output_path:
        Path(output_path).write_text(text)
    else:
        sys.stdout.write(text)
    errors = sum(1 for row, _ in results if row["verdict"] == "error")
    return {"rows": len(results), "errors": errors,
            "infinite_order": sum(1 for row, _ in results if row["verdict"] == "infinite-order")}


# -- twist knots ------------------------------------------------------------------

def run_twist(ps, fmt: str = "table") -> str:
    independent = twist_family_independent(ps)
    entries = []
    for p in ps:
        entries.append({"p": p, "D": {str(q): fmt_q(twist_D(p, q)) for q in prime_factors(p)}})
    if fmt == "json":
        return dump_json({"family": list(ps), "independent": independent, "knots": entries})
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "q", "D_q"])
        for e in entries:
            for q, v in e["D"].items():
                w.writerow([e["p"], q, v])
        return buf.getvalue()
    lines = [f"K({e['p']},2): " + ", ".join(f"D_{q} = {Fraction(v)}" for q, v in e["D"].items())
             for e in entries]
    lines.append(f"linearly independent by separating primes: {'yes' if independent else 'no'}")
    return "\n".join(lines) + "\n"


# -- entry point --------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twobridge", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="table")
    common.add_argument("--oracle", action="store_true",
                        help="count domains with the exhaustive oracle (2pq <= 200)")
    common.add_argument("--cache", metavar="DIR", help=f"result cache (overridden by ${CACHE_ENV})")
    common.add_argument("--jobs", type=int, default=1, metavar="N")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, help_ in (("tau", "tau_s table"), ("d", "d_s table"), ("hfk", "knot Floer homology"),
                       ("obstruct", "all obstructions and the verdict")):
        sp = sub.add_parser(cmd, parents=[common], help=help_)
        sp.add_argument("knot", nargs="+", help="'p/q' or 'p,q', optionally 'name=...'")
    tw = sub.add_parser("twist", parents=[common], help="twist knots K(p,2)")
    tw.add_argument("ps", nargs="+", type=int)
    bt = sub.add_parser("batch", parents=[common], help="CSV batch with header name,p,q")
    bt.add_argument("input")
    bt.add_argument("-o", "--output")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.jobs < 1:
            raise InvalidKnotError("--jobs must be at least 1")
        cache = cache_dir(args.cache)
        if args.command == "twist":
            sys.stdout.write(run_twist(args.ps, args.format))
        elif args.command == "batch":
            fmt = "json" if args.format == "json" else "csv"
            try:
                run_batch(args.input, args.output, cache, args.jobs, fmt, args.oracle)
            except OSError as exc:
                raise InvalidKnotError(f"cannot read batch input: {exc}") from exc
        else:
            spec = parse_knot(" ".join(args.knot))
            _, text = run_knot(spec, args.command, args.format, args.oracle, cache)
            sys.stdout.write(text)
    except (InvalidKnotError, OracleGuardError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InconsistencyError as exc:
        print(f"internal invariant violated: {exc.check}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
