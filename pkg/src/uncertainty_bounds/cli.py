"""Command-line interface."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

from . import catalog, mesh
from .certify import BoundReport, Verdict, certify
from .extremal import SolverConfig
from .functional import FunctionalError, parse
from .oracle import fock_minimize, parametric_search
from .report import dumps, report_document
from .symplectic import SqueezeParams, bch_convert, bogoliubov_residual

log = logging.getLogger("uncertainty_bounds")

HBAR_ENV = "UNCERTAINTY_HBAR"
BOUND_RTOL = 1e-8


class UsageError(Exception):
    pass


def default_hbar() -> float:
    raw = os.environ.get(HBAR_ENV)
    if raw is None:
        return 1.0
    try:
        h = float(raw)
    except ValueError:
        raise UsageError(f"{HBAR_ENV}={raw!r} is not a number") from None
    if not h > 0:
        raise UsageError(f"{HBAR_ENV} must be positive")
    return h


def _param(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value in {text!r}") from None


def run_oracles(f, report: BoundReport, dim: int = 30, restarts: int = 20, seed: int = 42) -> None:
    ps = parametric_search(f, report.sheet or 0)
    fm = fock_minimize(f, dim=dim, restarts=restarts, seed=seed)
    report.oracle = {
        "parametric": {"value": ps.value, "sheet": ps.argmin["sheet"], "b": ps.argmin["b"], "gamma": ps.argmin["gamma"]},
        "fock": {
            "value": fm.value, "dim": dim, "restarts": restarts, "seed": seed, "converged": fm.converged,
            "moments": [fm.moments.x, fm.moments.y, fm.moments.w],
        },
    }
    for key in ("parametric", "fock"):
        v = report.oracle[key]["value"]
        report.oracle[key]["value"] = v if math.isfinite(v) else None
    if report.verdict is Verdict.BOUNDED:
        lowest = min(v for v in (ps.value, fm.value) if math.isfinite(v))
        if lowest < report.bound - 1e-6 * (1 + abs(report.bound)):
            report.notes.append(f"oracle found {lowest:.12g}, below the certified bound")


def _emit(doc: dict, path: str | None) -> None:
    text = dumps(doc)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _certify_cmd(args) -> int:
    hbar = args.hbar if args.hbar is not None else default_hbar()
    params = dict(args.param)
    f = parse(args.expr, params, hbar=hbar)
    cfg = SolverConfig(nmax=args.nmax, hbar=hbar)
    report = certify(f, cfg)
    if not args.no_oracle:
        run_oracles(f, report)
    _emit(report_document(report, args.expr, params, hbar, cfg), args.json)
    return 1 if report.verdict is Verdict.INCONCLUSIVE else 0


def _catalog_list(args) -> int:
    for name, e in catalog.ENTRIES.items():
        defaults = ", ".join(f"{k}={v:g}" for k, v in e.defaults.items())
        ex = e.expectation()
        bound = "" if ex.bound is None else f" -> {ex.bound:.10g}"
        print(f"{name:15s} {e.build(e.params())}  [{defaults}]  {ex.verdict.value}{bound}")
    return 0


def matches_expectation(report: BoundReport, ex: catalog.Expectation) -> bool:
    if report.verdict is not ex.verdict:
        return False
    if ex.verdict is Verdict.BOUNDED:
        return report.bound is not None and abs(report.bound - ex.bound) <= BOUND_RTOL * (1 + abs(ex.bound))
    return True


def _catalog_run(args) -> int:
    hbar = args.hbar if args.hbar is not None else default_hbar()
    entry = catalog.get(args.name)
    overrides = dict(args.param)
    params = entry.params(overrides)
    f = entry.functional(overrides, hbar)
    ex = entry.expectation(overrides, hbar)
    cfg = SolverConfig(nmax=args.nmax, hbar=hbar)
    report = certify(f, cfg)
    if not args.no_oracle:
        run_oracles(f, report)
    ok = matches_expectation(report, ex)
    expected = {"verdict": ex.verdict.value, "bound": ex.bound, "b": ex.b, "gamma": ex.gamma, "matches": ok}
    if ex.reason:
        expected["reason"] = ex.reason
    _emit(report_document(report, f.source, params, hbar, cfg, expected), args.json)
    return 0 if ok else 1


def _oracle_fock(args) -> int:
    hbar = args.hbar if args.hbar is not None else default_hbar()
    f = parse(args.expr, dict(args.param), hbar=hbar)
    r = fock_minimize(f, dim=args.dim, restarts=args.restarts, seed=args.seed)
    m = r.moments
    print(f"min {r.value!r}\nmoments x={m.x!r} y={m.y!r} w={m.w!r}\nconverged {r.converged}")
    return 0


def _oracle_sheet(args) -> int:
    hbar = args.hbar if args.hbar is not None else default_hbar()
    f = parse(args.expr, dict(args.param), hbar=hbar)
    r = parametric_search(f, args.n)
    m = r.moments
    print(f"min {r.value!r}\nb {r.argmin['b']!r} gamma {r.argmin['gamma']!r}\nmoments x={m.x!r} y={m.y!r} w={m.w!r}")
    return 0


def _mesh(args) -> int:
    hbar = args.hbar if args.hbar is not None else default_hbar()
    rows = mesh.emit_mesh(args.kind, args.out, nmax=args.nmax, hbar=hbar)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _bch(args) -> int:
    s = SqueezeParams(args.b, args.gamma)
    cs = bch_convert(s)
    print(f"r {cs.r!r}\ntheta {cs.theta!r}\nchi {cs.chi!r}\nresidual {bogoliubov_residual(s, cs):.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uncertainty-bounds", description="Certify lower bounds of functionals of (var p, var q, cov pq).")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, expr=True):
        if expr:
            p.add_argument("--expr", required=True, help="functional of x, y, w (and z = x + y + 2w)")
        p.add_argument("--param", action="append", type=_param, default=[], metavar="K=V")
        p.add_argument("--hbar", type=float, default=None)

    p = sub.add_parser("certify", help="certify a functional given as an expression")
    common(p)
    p.add_argument("--nmax", type=int, default=5)
    p.add_argument("--json", metavar="PATH")
    p.add_argument("--no-oracle", action="store_true")
    p.set_defaults(func=_certify_cmd)

    cat = sub.add_parser("catalog", help="built-in functionals")
    csub = cat.add_subparsers(dest="catalog_command", required=True)
    csub.add_parser("list").set_defaults(func=_catalog_list)
    p = csub.add_parser("run")
    p.add_argument("name")
    common(p, expr=False)
    p.add_argument("--nmax", type=int, default=5)
    p.add_argument("--json", metavar="PATH")
    p.add_argument("--no-oracle", action="store_true")
    p.set_defaults(func=_catalog_run)

    orc = sub.add_parser("oracle", help="brute-force minimisation")
    osub = orc.add_subparsers(dest="oracle_command", required=True)
    p = osub.add_parser("fock")
    common(p)
    p.add_argument("--dim", type=int, default=30)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_oracle_fock)
    p = osub.add_parser("sheet")
    common(p)
    p.add_argument("--n", type=int, default=0)
    p.set_defaults(func=_oracle_sheet)

    msh = sub.add_parser("mesh", help="CSV point sets")
    msub = msh.add_subparsers(dest="kind", required=True)
    for kind in mesh.HEADERS:
        p = msub.add_parser(kind)
        p.add_argument("--nmax", type=int, default=2)
        p.add_argument("--out", required=True)
        p.add_argument("--hbar", type=float, default=None)
        p.set_defaults(func=_mesh)

    p = sub.add_parser("bch", help="(b, gamma) -> (r, theta, chi)")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.set_defaults(func=_bch)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "nmax", 0) < 0:
            raise UsageError("--nmax must be non-negative")
        return args.func(args)
    except (UsageError, FunctionalError, catalog.CatalogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
