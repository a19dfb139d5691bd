"""Command-line entry point: ``aplab <subcommand> [options]``.

Every run prints one report. JSON reports have the shape
``{schema_version, tool, config, results}``; ``--format table`` prints a
headline followed by ``key: value`` lines and ``--format csv`` a header row
followed by records.
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
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__
from . import ap_distribution as apd
from . import expsum
from . import shifted_primes as sp
from . import sieve_core as sc
from ._exact import floor_power
from .errors import AplabError
from .exponent_lab import (
    ConstraintSystem,
    EpsRational,
    Substitution,
    builtin_system,
    catalog_names,
    chain_groups,
    constants,
    findings,
    implies,
    maximize,
    parse_constraints,
)

SCHEMA_VERSION = 1

# ---------------------------------------------------------------------------
# argument types


_POW = re.compile(r"^\s*(\d+)\s*(?:\*\*|\^)\s*(\d+)\s*$")


def integer(text: str) -> int:
    """``1000000``, ``1_000_000``, ``10**6``, ``10^6`` or an integral ``1e6``."""
    m = _POW.match(text)
    if m:
        return int(m[1]) ** int(m[2])
    try:
        return int(text.replace("_", ""))
    except ValueError:
        pass
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if f.denominator != 1:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(f)


def rational(text: str) -> Fraction:
    """Exact rational: ``7/20``, ``0.35`` or ``1e-2``."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (Fraction, EpsRational)):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# subcommand bodies; each returns (results, headline, csv_rows)

Result = tuple[dict, str, list[dict]]


def _config_from(args) -> sp.ShiftedPrimeConfig:
    return sp.ShiftedPrimeConfig(
        x=args.x, a=args.a, beta=args.beta, theta=args.theta, eps_desk=args.eps_desk, H=args.H
    )


def _ensemble(args) -> sp.Ensemble:
    return sp.build_ensemble(_config_from(args), cap=args.budget or sp.DEFAULT_ENSEMBLE_CAP)


def cmd_pi(args) -> Result:
    n = sc.prime_count(args.x, threads=args.threads)
    return {"x": args.x, "pi": n}, str(n), [{"x": args.x, "pi": n}]


def cmd_pi_ap(args) -> Result:
    n = sc.prime_count_ap(args.x, args.q, args.a)
    row = {"x": args.x, "q": args.q, "a": args.a, "count": n}
    return row, str(n), [row]


def cmd_factor(args) -> Result:
    rows = []
    for n in args.n:
        f = sc.factorize(n)
        ar = sc.arith(n)
        rows.append(
            {
                "n": n,
                "factors": " ".join(f"{p}^{e}" if e > 1 else str(p) for p, e in f.factors) or "1",
                "phi": ar.phi,
                "tau": ar.tau,
                "mu": ar.mu,
                "P_minus": ar.spf,
                "P_plus": ar.lpf,
            }
        )
    head = "; ".join(f"{r['n']} = {r['factors']}" for r in rows)
    return {"factorizations": rows}, head, rows


def cmd_smooth_shifted(args) -> Result:
    betas = args.beta or [Fraction(7, 20)]
    counts = sp.count_smooth_shifted_grid(
        args.x, args.a, betas, threads=args.threads, cache_dir=args.cache_dir
    )
    total = int(sc.primes_between(args.x + 1, 2 * args.x + 1).size)
    rows = [
        {"beta": str(b), "threshold": floor_power(args.x, b), "count": c, "share": c / total if total else 0.0}
        for b, c in zip(betas, counts)
    ]
    head = ", ".join(f"beta={r['beta']}: {r['count']}" for r in rows)
    return {"x": args.x, "a": args.a, "primes_in_range": total, "counts": rows}, head, rows


def cmd_ensemble(args) -> Result:
    ens = _ensemble(args)
    res = {"config": ens.config.as_dict(), **ens.summary()}
    head = f"|L| = {len(ens.L)}, |G| = {ens.size}"
    return res, head, [{"L": " ".join(map(str, ens.L)), "G_size": ens.size, "G_distinct": len(ens.G)}]


def cmd_gamma(args) -> Result:
    ens = _ensemble(args)
    if args.p:
        rows = [
            {"p": p, "gamma": sp.gamma_multiplicity(ens, p, not args.all, args.reading)} for p in args.p
        ]
        head = ", ".join(f"Gamma({r['p']}) = {r['gamma']}" for r in rows)
        return {"reading": args.reading, "smooth_only": not args.all, "values": rows}, head, rows
    sets = sp.n_sets(ens, args.reading)
    res = sets.as_dict()
    head = f"N = {sets.n_total}, N' = {sets.n_smooth}, N1 = {sets.n1}, N2 = {sets.n2}"
    return res, head, [{k: v for k, v in res.items()}]


def cmd_singular_series(args) -> Result:
    s = sp.singular_series(args.a, args.l, args.cutoff)
    res = {"a": args.a, "l": args.l, **s._asdict()}
    return res, f"{s.value:.10f}", [res]


def cmd_mertens(args) -> Result:
    r = sp.mertens_interval(args.x, args.theta, args.beta)
    res = {**r._asdict(), "deviation": r.sum - r.prediction}
    head = f"sum {r.sum:.6f}, finite-x prediction {r.prediction:.6f}, asymptotic {r.asymptotic:.6f}"
    return res, head, [res]


def cmd_n_count(args) -> Result:
    ens = _ensemble(args)
    res: dict = {"config": ens.config.as_dict()}
    if args.mode in ("brute", "both"):
        res["brute"] = sp.n_count(ens, "brute", budget=args.budget or sp.DEFAULT_BRUTE_BUDGET, threads=args.threads)
    if args.mode in ("formula", "both"):
        res["formula"] = sp.n_count(ens, "formula", cutoff=args.cutoff)
    if args.mode == "both":
        res["ratio"] = res["brute"] / res["formula"] if res["formula"] else None
        res["note"] = "equidistribution sanity check of the closed form; says nothing about its error term"
    head = ", ".join(f"{k} {res[k]}" for k in ("brute", "formula", "ratio") if k in res)
    return res, head, [{k: v for k, v in res.items() if k != "config"}]


def cmd_discrepancy(args) -> Result:
    residues = [args.a] if args.a is not None else [
        a for a in range(args.q) if math.gcd(a, args.q) == 1
    ]
    rows = [{"a": a, "discrepancy": apd.discrepancy(args.x, args.q, a)} for a in residues]
    res = {"x": args.x, "q": args.q, "values": rows}
    if args.a is None:
        res["sum"] = sum((r["discrepancy"] for r in rows), Fraction(0))
    head = str(rows[0]["discrepancy"]) if args.a is not None else f"sum over units: {res['sum']}"
    return res, head, rows


def cmd_s_weight(args) -> Result:
    if args.d is not None:
        v = apd.s_d_z(args.d, args.z, args.x, args.q, args.a)
        res = {"d": args.d, "z": args.z, "x": args.x, "q": args.q, "a": args.a, "S_d_z": v}
    else:
        if args.n is None:
            raise AplabError("s-weight needs --n, or --d with --x")
        v = apd.s_weight(args.n, args.q, args.a)
        res = {"n": args.n, "q": args.q, "a": args.a, "S": v}
    return res, str(v), [res]


def _factor_from_text(text: str) -> apd.CoefficientSeq:
    """``LO:HI`` (unit weights) or ``LO:HI:W``."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise AplabError(f"factor {text!r} should be LO:HI or LO:HI:WEIGHT")
    lo, hi = integer(parts[0]), integer(parts[1])
    w = Fraction(parts[2]) if len(parts) == 3 else Fraction(1)
    return apd.CoefficientSeq(lo, hi, {q: w for q in range(lo, hi + 1)})


def _factor_from_json(obj: dict) -> apd.CoefficientSeq:
    values = {int(k): Fraction(str(v)) for k, v in obj.get("values", {}).items()}
    if "weight" in obj:
        w = Fraction(str(obj["weight"]))
        values = {q: w for q in range(int(obj["lo"]), int(obj["hi"]) + 1)}
    return apd.CoefficientSeq(int(obj["lo"]), int(obj["hi"]), values, int(obj.get("bound_B0", 1)))


def cmd_multilinear(args) -> Result:
    budget = args.budget or apd.DEFAULT_TERM_BUDGET
    if args.section3:
        ens = _ensemble(args)
        rep = apd.n1_via_multilinear(ens, threads=args.threads)
        direct = sp.n1_triple_sum(ens)
        res = {
            "config": ens.config.as_dict(),
            "N1_multilinear": rep.value,
            "N1_direct": direct,
            "equal": rep.value == direct,
            **rep.as_dict(),
        }
        return res, f"N1 = {rep.value} (direct {direct})", [res]
    if args.spec:
        raw = json.loads(Path(args.spec).read_text())
        spec = apd.MultilinearSpec(
            x=int(raw["x"]),
            a=int(raw.get("a", 1)),
            factors=[_factor_from_json(f) for f in raw["factors"]],
            mode=raw.get("mode", "sharp_le"),
            main_term=bool(raw.get("main_term", True)),
            prime_range=raw.get("prime_range", "le"),
            budget=budget,
        )
    else:
        if args.x is None or not args.factor:
            raise AplabError("multilinear needs --spec, --section3, or --x with --factor")
        spec = apd.MultilinearSpec(
            x=args.x,
            a=args.a,
            factors=[_factor_from_text(f) for f in args.factor],
            mode=args.mode,
            main_term=not args.no_main_term,
            prime_range=args.prime_range,
            budget=budget,
        )
    rep = apd.multilinear_sum(spec, threads=args.threads)
    res = rep.as_dict()
    return res, f"{rep.value} (normalized {rep.normalized:.6g})", [res]


def cmd_kloosterman(args) -> Result:
    k = expsum.kloosterman(args.m, args.n, args.c)
    res = {
        "m": args.m,
        "n": args.n,
        "c": args.c,
        "value": k.value,
        "imag_residual": k.imag_residual,
        "weil_bound": expsum.weil_bound(args.m, args.n, args.c),
        "weil_ratio": expsum.weil_ratio(args.m, args.n, args.c),
    }
    return res, repr(k.value), [res]


def cmd_ramanujan(args) -> Result:
    v = expsum.ramanujan(args.m, args.c)
    res = {"m": args.m, "c": args.c, "value": v}
    return res, str(v), [res]


def cmd_weil_audit(args) -> Result:
    audit = expsum.weil_audit(args.c_max, args.mode, args.samples, args.seed, threads=args.threads)
    res = audit.as_dict()
    rows = [
        {"record": "witness", "m": audit.witness[0], "n": audit.witness[1], "c": audit.witness[2],
         "max_ratio": audit.max_ratio, "bin_lo": "", "bin_hi": "", "count": ""}
    ]
    for lo, hi, count in zip(audit.bin_edges, audit.bin_edges[1:], audit.histogram):
        rows.append({"record": "bin", "m": "", "n": "", "c": "", "max_ratio": "",
                     "bin_lo": lo, "bin_hi": hi, "count": count})
    head = f"max ratio {audit.max_ratio!r} at (m, n, c) = {audit.witness} over {audit.tested} sums"
    return res, head, rows


def _load_system(spec: str) -> ConstraintSystem:
    if spec in catalog_names():
        return builtin_system(spec)
    path = Path(spec)
    if not path.exists():
        raise AplabError(f"{spec!r} is neither a catalog system nor a file")
    return ConstraintSystem.from_text(path.stem, path.read_text())


def _parse_point(text: str) -> dict[str, EpsRational]:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, value = item.partition("=")
        if not value:
            raise AplabError(f"point entry {item!r} should read symbol=value")
        out[name.strip()] = EpsRational.coerce(value)
    return out


def _parse_mapping(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        name, _, form = item.partition("=")
        if not form:
            raise AplabError(f"substitution entry {item!r} should read target=form")
        out[name.strip()] = form.strip()
    return out


def cmd_exp_check(args) -> Result:
    system = _load_system(args.system)
    point = _parse_point(args.point)
    ok, bad = system.check_point(point)
    res = {
        "system": system.name,
        "point": {k: str(v) for k, v in point.items()},
        "ok": ok,
        "first_violation": str(bad) if bad else None,
    }
    return res, "ok" if ok else f"violated: {bad}", [res]


def cmd_exp_max(args) -> Result:
    system = _load_system(args.system)
    sup = maximize(system, args.objective)
    res = {
        "system": system.name,
        "objective": args.objective,
        "sup": str(sup.value),
        "sup_const": str(sup.value.const_part),
        "sup_eps": str(sup.value.eps_coeff),
        "attained": sup.attained,
        "sup_decimal": float(sup.value.const_part),
    }
    return res, str(sup), [res]


def cmd_exp_implies(args) -> Result:
    if args.chains:
        groups = []
        rows = []
        for g in chain_groups():
            verdicts = g.run()
            groups.append(
                {
                    "name": g.name,
                    "premises": g.premises,
                    "extra_premises": list(g.extra_premises),
                    "subst": dict(g.subst),
                    "note": g.note,
                    "verdicts": [v.as_json() for v in verdicts],
                }
            )
            for v in verdicts:
                rows.append({"group": g.name, "conclusion": v.conclusion, "status": v.status,
                             "sup": str(v.sup) if v.sup is not None else "",
                             "rescale": str(v.rescale) if v.rescale is not None else ""})
        res = {"groups": groups, "findings": [f.as_json() for f in findings()]}
        counts: dict[str, int] = {}
        for r in rows:
            counts[r["status"]] = counts.get(r["status"], 0) + 1
        head = ", ".join(f"{k}: {v}" for k, v in sorted(counts.items()))
        return res, head, rows
    if not args.premises or not (args.conclusion or args.conclusions):
        raise AplabError("exp-implies needs --premises and conclusions, or --chains")
    premises = _load_system(args.premises)
    extra = [c for line in args.assume for c in parse_constraints(line)]
    if extra:
        premises = premises.with_constraints(extra)
    rows_c = [c for line in args.conclusion for c in parse_constraints(line)]
    if args.conclusions:
        rows_c += list(_load_system(args.conclusions).constraints)
    verdicts = implies(premises, Substitution.from_text(_parse_mapping(args.subst)), rows_c)
    res = {"premises": premises.name, "verdicts": [v.as_json() for v in verdicts]}
    head = "; ".join(f"{v.conclusion}: {v.status}" + (f" (eps x{v.rescale})" if v.rescale else "") for v in verdicts)
    rows = [{k: json.dumps(_jsonable(val)) if isinstance(val, dict) else val
             for k, val in v.as_json().items()} for v in verdicts]
    return res, head, rows


def cmd_exp_catalog(args) -> Result:
    names = [args.name] if args.name else catalog_names()
    systems = [builtin_system(n) for n in names]
    res: dict = {"systems": [s.as_json() for s in systems]}
    if args.findings:
        res["findings"] = [f.as_json() for f in findings()]
    rows = [{"system": s.name, "symbols": " ".join(s.symbols), "constraint": str(c)}
            for s in systems for c in s.constraints]
    if args.name:
        head = f"{systems[0].name}: " + "; ".join(systems[0].render())
    else:
        head = ", ".join(names)
    return res, head, rows


def cmd_constants(args) -> Result:
    items = constants(args.digits)
    rows = [c.as_json() for c in items]
    head = ", ".join(f"{c.name}={c.rendered()}" for c in items)
    return {"constants": rows}, head, rows


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run options")
    g.add_argument("--format", choices=("table", "json", "csv"), default="table")
    g.add_argument("--reproducible", action="store_true", help="omit timestamp and execution knobs")
    g.add_argument("--threads", type=integer, default=1)
    g.add_argument("--cache-dir", default=None, help="sieve cache directory (default $APLAB_CACHE_DIR)")
    g.add_argument("--seed", type=integer, default=0)
    g.add_argument("--budget", type=integer, default=None, help="cap on enumerated terms")


def _ensemble_opts(p: argparse.ArgumentParser, x_required: bool = True) -> None:
    p.add_argument("--x", type=integer, required=x_required)
    p.add_argument("--a", type=integer, default=1)
    p.add_argument("--beta", type=rational, default=Fraction(7, 20))
    p.add_argument("--theta", type=rational, default=Fraction(17, 32))
    p.add_argument("--eps-desk", type=rational, default=Fraction(1, 100))
    p.add_argument("--H", type=integer, default=8)


COMMANDS: dict[str, tuple[Callable, str]] = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aplab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"aplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name: str, fn: Callable, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, description=help_)
        _common(p)
        p.set_defaults(func=fn)
        return p

    p = add("pi", cmd_pi, "count primes up to x")
    p.add_argument("--x", type=integer, required=True)

    p = add("pi-ap", cmd_pi_ap, "count primes up to x congruent to a mod q")
    p.add_argument("--x", type=integer, required=True)
    p.add_argument("--q", type=integer, required=True)
    p.add_argument("--a", type=integer, required=True)

    p = add("factor", cmd_factor, "factor integers and list phi, tau, mu, P-, P+")
    p.add_argument("--n", type=integer, nargs="+", required=True)

    p = add("smooth-shifted", cmd_smooth_shifted, "count primes x < p <= 2x with p - a smooth")
    p.add_argument("--x", type=integer, required=True)
    p.add_argument("--a", type=integer, default=1)
    p.add_argument("--beta", type=rational, nargs="+")

    p = add("ensemble", cmd_ensemble, "build the moduli ensemble L and G")
    _ensemble_opts(p)

    p = add("gamma", cmd_gamma, "multiplicities Gamma(p), or the tuple-set sizes when --p is omitted")
    _ensemble_opts(p)
    p.add_argument("--p", type=integer, nargs="+")
    p.add_argument("--reading", choices=("set", "display"), default="set")
    p.add_argument("--all", action="store_true", help="do not require p - a to be smooth")

    p = add("singular-series", cmd_singular_series, "truncated singular series G_l")
    p.add_argument("--a", type=integer, default=1)
    p.add_argument("--l", type=integer, required=True)
    p.add_argument("--cutoff", type=integer, default=10**6)

    p = add("mertens", cmd_mertens, "sum of 1/p over (x^beta, 2x^(1-theta)]")
    p.add_argument("--x", type=integer, required=True)
    p.add_argument("--theta", type=rational, default=Fraction(17, 32))
    p.add_argument("--beta", type=rational, default=Fraction(7, 20))

    p = add("n-count", cmd_n_count, "|N| by direct count and by the closed form")
    _ensemble_opts(p)
    p.add_argument("--mode", choices=("brute", "formula", "both"), default="both")
    p.add_argument("--cutoff", type=integer, default=10**5)

    p = add("discrepancy", cmd_discrepancy, "pi(x;q,a) - pi(x)/phi(q); all units when --a is omitted")
    p.add_argument("--x", type=integer, required=True)
    p.add_argument("--q", type=integer, required=True)
    p.add_argument("--a", type=integer)

    p = add("s-weight", cmd_s_weight, "the weight S_n, or S_d(z) with --d")
    p.add_argument("--n", type=integer)
    p.add_argument("--q", type=integer, required=True)
    p.add_argument("--a", type=integer, default=1)
    p.add_argument("--d", type=integer)
    p.add_argument("--z", type=integer, default=1)
    p.add_argument("--x", type=integer)

    p = add("multilinear", cmd_multilinear, "weighted discrepancy sum over factored moduli")
    _ensemble_opts(p, x_required=False)
    p.add_argument("--spec", help="JSON file with x, a, mode, main_term, prime_range, factors")
    p.add_argument("--factor", action="append", default=[], help="LO:HI or LO:HI:WEIGHT (repeatable)")
    p.add_argument("--mode", choices=("sharp_le", "dyadic"), default="sharp_le")
    p.add_argument("--prime-range", choices=("le", "dyadic"), default="le")
    p.add_argument("--no-main-term", action="store_true")
    p.add_argument("--section3", action="store_true", help="|N1| from the ensemble coefficients")

    p = add("kloosterman", cmd_kloosterman, "S(m, n; c) and its Weil ratio")
    p.add_argument("--m", type=integer, required=True)
    p.add_argument("--n", type=integer, required=True)
    p.add_argument("--c", type=integer, required=True)

    p = add("ramanujan", cmd_ramanujan, "Ramanujan sum c_c(m)")
    p.add_argument("--m", type=integer, required=True)
    p.add_argument("--c", type=integer, required=True)

    p = add("weil-audit", cmd_weil_audit, "largest Kloosterman-to-Weil ratio")
    p.add_argument("--c-max", type=integer, required=True)
    p.add_argument("--mode", choices=("full", "sampled"), default="full")
    p.add_argument("--samples", type=integer, default=10**5)

    p = add("exp-check", cmd_exp_check, "check a point against an exponent system")
    p.add_argument("--system", required=True, help="catalog name or constraint file")
    p.add_argument("--point", required=True, help="e.g. q=15/32,r=1/32-2e")

    p = add("exp-max", cmd_exp_max, "supremum of a linear objective")
    p.add_argument("--system", required=True)
    p.add_argument("--objective", required=True)

    p = add("exp-implies", cmd_exp_implies, "entailment verdicts with margins and witnesses")
    p.add_argument("--premises")
    p.add_argument("--subst", help="e.g. q=q1,r=q2+q3,s=q3")
    p.add_argument("--assume", action="append", default=[], help="extra premise (repeatable)")
    p.add_argument("--conclusion", action="append", default=[], help="conclusion (repeatable)")
    p.add_argument("--conclusions", help="catalog name or constraint file")
    p.add_argument("--chains", action="store_true", help="run every built-in chain and list findings")

    p = add("exp-catalog", cmd_exp_catalog, "list built-in exponent systems")
    p.add_argument("--name")
    p.add_argument("--findings", action="store_true")

    p = add("constants", cmd_constants, "named exponents")
    p.add_argument("--digits", type=integer, default=4)
    return parser


_RUN_KEYS = ("format", "reproducible", "threads", "cache_dir", "seed", "budget", "func", "command")


def _report(args, results: dict) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in _RUN_KEYS}
    config = {"subcommand": args.command, "params": params, "seed": args.seed, "budget": args.budget}
    if not args.reproducible:
        config["threads"] = args.threads
        config["cache_dir"] = args.cache_dir
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "aplab", "version": __version__},
        "config": config,
        "results": results,
    }
    if not args.reproducible:
        report["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return _jsonable(report)


def _flat(value: Any) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(_jsonable(value), separators=(",", ":"))
    return str(_jsonable(value))


def render(args, results: dict, headline: str, rows: list[dict]) -> str:
    if args.format == "json":
        return json.dumps(_report(args, results), indent=2) + "\n"
    if args.format == "csv":
        buf = io.StringIO()
        fields: list[str] = []
        for r in rows:
            fields.extend(k for k in r if k not in fields)
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _flat(r.get(k, "")) for k in fields})
        return buf.getvalue()
    lines = [headline]
    for k, v in _jsonable(results).items():
        lines.append(f"{k}: {_flat(v)}")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.cache_dir is None:
        args.cache_dir = os.environ.get("APLAB_CACHE_DIR") or None
    if args.threads < 1:
        print("aplab: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        results, headline, rows = args.func(args)
    except AplabError as exc:
        print(f"aplab {args.command}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(render(args, results, headline, rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
