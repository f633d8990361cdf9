"""Command-line front end.

Exit codes: 0 success or positive verdict, 1 negative verdict (gap found,
no equilibrium, check failed), 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import lp as lpmod
from .allocation import DeskLimits, NoFeasibleOutcome, SizeLimitError, detect_gap, outcome_function
from .convexity import (
    FiniteIntFunction,
    OutsideHullError,
    PointSet,
    PreconditionError,
    concave_extension_eval,
    facet_set,
    is_m_concave_fn,
    is_m_convex_fn,
    is_m_convex_set,
    is_msharp_concave_fn,
    is_msharp_convex_fn,
    is_msharp_convex_set,
)
from .equilibrium import (
    InfeasibleOutcome,
    certify_nonexistence,
    find_arc_prices,
    find_prices_with_rents,
    verify_ce,
)
from .instances import BUILTINS, InstanceError, load_instance
from .network import NetworkError, classify_structure
from .rational import Vec, as_rat, format_rat
from .suites import SUITES

OK, NEGATIVE, ERROR = 0, 1, 2

PROPERTIES = {
    "msharp-concave": is_msharp_concave_fn,
    "m-concave": is_m_concave_fn,
    "msharp-convex": is_msharp_convex_fn,
    "m-convex": is_m_convex_fn,
    "m-convex-set": lambda f: is_m_convex_set(PointSet(f.index, f.domain)),
    "msharp-convex-set": lambda f: is_msharp_convex_set(PointSet(f.index, f.domain)),
}

COMPLEMENTS = FiniteIntFunction(("a", "b"), {(0, 0): 1, (1, 1): 1, (1, 0): 0, (0, 1): 0})


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return format_rat(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, Vec):
        return {k: format_rat(v) for k, v in obj.as_dict().items()}
    return str(obj)


def _emit(args, doc: dict, human: str) -> None:
    if args.output == "json":
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n")
    else:
        sys.stdout.write(human.rstrip("\n") + "\n")


def _limits(args) -> DeskLimits:
    return DeskLimits(args.limit_arcs, args.limit_capacity, args.limit_domain)


def _instance(args, default: str = "example1"):
    if getattr(args, "instance", None):
        return load_instance(args.instance)
    name = getattr(args, "builtin", None) or default
    if name not in BUILTINS:
        raise UsageError(f"unknown built-in instance {name!r}; choose from {sorted(BUILTINS)}")
    return BUILTINS[name]()


def _named_function(args, name: str) -> FiniteIntFunction:
    if name == "complements":
        return COMPLEMENTS
    inst = _instance(args)
    if name == "g":
        return outcome_function(inst, _limits(args))
    agent = name[1:] if name.startswith("w") and name[1:] in inst.valuations else name
    if agent not in inst.valuations:
        raise UsageError(f"unknown function {name!r}; use an agent id, w<agent>, 'g' or 'complements'")
    return inst.valuations[agent].fn


def _parse_point(text: str, index) -> tuple:
    """``1/2,1/2`` (positional) or ``e=1/2,g=1/2`` (named)."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if parts and all("=" in p for p in parts):
        named = dict(p.split("=", 1) for p in parts)
        if set(named) != set(map(str, index)):
            raise UsageError(f"point must name exactly the coordinates {list(index)}")
        parts = [named[str(k)] for k in index]
    if len(parts) != len(index):
        raise UsageError(f"point needs {len(index)} coordinates, got {len(parts)}")
    try:
        return tuple(as_rat(p) for p in parts)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise UsageError(f"bad point {text!r}: {exc}") from None


def _fmt_point(index, values) -> str:
    return "(" + ", ".join(f"{k}={format_rat(v)}" for k, v in zip(index, values)) + ")"


# ----------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    inst = _instance(args)
    inst.check_limits(_limits(args))
    rep = classify_structure(inst.graph, inst.valuations)
    doc = {
        "valid": True,
        "agents": list(inst.graph.agents),
        "arcs": [a.id for a in inst.graph.arcs],
        "constraint": inst.constraint is not None,
        "msharp_concave": {a: bool(is_msharp_concave_fn(inst.valuations[a].fn)) for a in inst.graph.agents},
        "structure": {
            "two_sided": rep.two_sided,
            "outgoing_concave_form": rep.outgoing_concave_form,
            "incoming_concave_form": rep.incoming_concave_form,
            "separable": {s.agent: s.separable for s in rep.agents},
        },
    }
    lines = [f"valid instance: {len(inst.graph.agents)} agents, {len(inst.graph.arcs)} arcs, "
             f"constraint {'present' if inst.constraint is not None else 'absent'}"]
    for a in inst.graph.agents:
        lines.append(f"  agent {a}: M-natural-concave={doc['msharp_concave'][a]}, separable={doc['structure']['separable'][a]}")
    lines.append(f"  separable-market hypotheses: {rep.separable_market_hypotheses}")
    _emit(args, doc, "\n".join(lines))
    return OK


def cmd_check(args) -> int:
    f = _named_function(args, args.function)
    result = PROPERTIES[args.property](f)
    doc = {"function": args.function, "property": args.property, "holds": bool(result),
           "witness": result.witness, "reason": result.reason}
    human = f"{args.function} {args.property}: {bool(result)}"
    if not result:
        human += f"\n  witness: {result.witness}\n  reason: {result.reason}"
    _emit(args, doc, human)
    return OK if result else NEGATIVE


def cmd_extension(args) -> int:
    f = _named_function(args, args.function)
    x = _parse_point(args.point, f.index)
    value, lottery = concave_extension_eval(f, x)
    B = facet_set(f, x)
    m_convex = bool(is_m_convex_set(B))
    doc = {
        "function": args.function,
        "point": dict(zip(f.index, map(format_rat, x))),
        "value": format_rat(value),
        "lottery": [{"point": z.as_dict(), "weight": format_rat(w)} for z, w in lottery.support],
        "facet_set": [dict(zip(f.index, z)) for z in B.sorted()],
        "facet_set_m_convex": m_convex,
        "facet_set_msharp_convex": bool(is_msharp_convex_set(B)),
    }
    lot = " + ".join(f"{format_rat(w)}*{_fmt_point(f.index, z.values)}" for z, w in lottery.support)
    human = (f"concave closure of {args.function} at {_fmt_point(f.index, x)} = {format_rat(value)}\n"
             f"  lottery: {lot}\n"
             f"  facet set: {[z for z in B.sorted()]} (M-convex: {m_convex})")
    _emit(args, doc, human)
    return OK


def _solve_human(rep) -> str:
    argmax = ", ".join(_fmt_point(z.index, z.values) for z in rep.integral_argmax)
    lot = " + ".join(f"{format_rat(w)}*{_fmt_point(z.index, z.values)}" for z, w in rep.lottery.support)
    return (f"integral optimum: {format_rat(rep.integral_value)} at {argmax}\n"
            f"fractional optimum: {format_rat(rep.fractional_value)} with lottery {lot}\n"
            f"gap: {rep.gap}")


def cmd_solve(args) -> int:
    inst = _instance(args)
    rep = detect_gap(inst, _limits(args))
    _emit(args, rep.to_json(), _solve_human(rep))
    return NEGATIVE if rep.gap else OK


def _recheck_or_fail(args, ok: bool) -> None:
    if args.recheck and not ok:
        raise lpmod.LPError("certificate failed independent re-verification")


def cmd_prices(args) -> int:
    inst = _instance(args)
    if args.outcome:
        x = Vec(inst.graph.arc_ids, tuple(int(a) for a in _parse_point(args.outcome, inst.graph.arc_ids)))
    else:
        x = detect_gap(inst, _limits(args)).integral_argmax[0]
    if args.rents:
        if inst.constraint is None:
            raise UsageError("--rents needs an instance with a constraint")
        search = find_prices_with_rents(inst, x)
    else:
        search = find_arc_prices(inst, x)
    _recheck_or_fail(args, search.recheck())
    doc = search.to_json()
    if search:
        doc["verify_ce"] = verify_ce(inst, x, search.found).to_json()
        ps = search.found.to_json()
        human = f"[{search.notion}] prices found at {_fmt_point(x.index, x.values)}: p={ps['p']}"
        if ps["rents"]:
            human += f", rents={ps['rents']}"
    else:
        human = f"[{search.notion}] no supporting prices at {_fmt_point(x.index, x.values)}"
        for row in doc.get("farkas", {}).get("rows", []):
            human += f"\n  {row['multiplier']} x [{row['constraint']}]"
        if search.reason:
            human += f"\n  {search.reason}"
    _emit(args, doc, human)
    return OK if search else NEGATIVE


def _certify_human(cert) -> str:
    if cert.exists:
        return (f"equilibrium exists at {_fmt_point(cert.outcome.index, cert.outcome.values)} "
                f"[{cert.prices.notion}] p={cert.prices.to_json()['p']} rents={cert.prices.to_json()['rents']}")
    lines = ["no competitive equilibrium; certificates:"]
    for s in cert.certificate.searches:
        lines.append(f"  {_fmt_point(s.outcome.index, s.outcome.values)} [{s.notion}]: "
                     + ("Farkas certificate" if s.certificate is not None else s.reason))
    return "\n".join(lines)


def cmd_certify(args) -> int:
    inst = _instance(args)
    inst.check_limits(_limits(args))
    cert = certify_nonexistence(inst)
    if not cert.exists:
        _recheck_or_fail(args, cert.certificate.recheck())
    else:
        _recheck_or_fail(args, verify_ce(inst, cert.outcome, cert.prices).verdict)
    _emit(args, cert.to_json(), _certify_human(cert))
    return OK if cert.exists else NEGATIVE


def cmd_cycle_example(args) -> int:
    inst = BUILTINS["example1"]()
    rep = detect_gap(inst)
    cert = certify_nonexistence(inst)
    if not cert.exists:
        _recheck_or_fail(args, cert.certificate.recheck())
    doc = {"instance": "example1", "solve": rep.to_json(), "certify": cert.to_json()}
    _emit(args, doc, _solve_human(rep) + "\n" + _certify_human(cert))
    return NEGATIVE if rep.gap or not cert.exists else OK


def cmd_suite(args) -> int:
    names = list(SUITES) if args.name == "all" else [args.name]
    lpmod.reset_stats()
    results = []
    for name in names:
        kwargs = {"seed": args.seed}
        if args.count is not None:
            kwargs["count"] = args.count
        if args.max_arcs is not None and name in ("integrality", "separable-market", "multi-sided"):
            kwargs["max_arcs"] = args.max_arcs
        results.append(SUITES[name](**kwargs))
    doc = {
        "seed": args.seed,
        "suites": [r.to_json() for r in results],
        "lp": {"solves": lpmod.STATS["solves"], "duality_checked": lpmod.STATS["duality_checked"],
               "farkas_verified": lpmod.STATS["farkas_verified"]},
    }
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.passed}/{r.count} ({r.elapsed:.1f}s) {r.tallies}")
        for fl in r.failures[:3]:
            lines.append(f"    instance {fl['instance']}: {fl['detail']}")
    lines.append(f"LP solves: {doc['lp']['solves']}, optimal with duality checked: {doc['lp']['duality_checked']}, "
                 f"Farkas certificates verified: {doc['lp']['farkas_verified']}")
    _emit(args, doc, "\n".join(lines))
    return OK if all(r.ok for r in results) else NEGATIVE


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polytrade", description="Exact equilibrium and allocation toolkit "
                                     "for trading networks under polymatroid constraints.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("human", "json"), default="human")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--instance", help="path to an instance JSON document")
    src.add_argument("--builtin", help=f"built-in instance: {', '.join(sorted(BUILTINS))} (default example1)")
    common.add_argument("--recheck", action="store_true", help="re-verify certificates before printing")
    common.add_argument("--limit-arcs", type=int, default=DeskLimits.max_arcs)
    common.add_argument("--limit-capacity", type=int, default=DeskLimits.max_capacity)
    common.add_argument("--limit-domain", type=int, default=DeskLimits.max_domain)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="validate an instance").set_defaults(func=cmd_validate)

    p = sub.add_parser("check", parents=[common], help="exchange-property checks on a named table")
    p.add_argument("--function", required=True, help="agent id, w<agent>, 'g' (aggregate) or 'complements'")
    p.add_argument("--property", required=True, choices=sorted(PROPERTIES))
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("extension", parents=[common], help="concave closure and facet set at a point")
    p.add_argument("--function", required=True)
    p.add_argument("--point", required=True, help="e.g. 1/2,1/2 or e=1/2,g=1/2")
    p.set_defaults(func=cmd_extension)

    sub.add_parser("solve", parents=[common], help="integral and relaxed optimum, gap").set_defaults(func=cmd_solve)

    p = sub.add_parser("prices", parents=[common], help="supporting prices at an outcome")
    p.add_argument("--outcome", help="e.g. e=1,g=0 (default: first integral optimum)")
    p.add_argument("--rents", action="store_true", help="allow constraint rents")
    p.set_defaults(func=cmd_prices)

    sub.add_parser("certify", parents=[common], help="equilibrium or non-existence certificate").set_defaults(
        func=cmd_certify)
    sub.add_parser("paper-example1", parents=[common], help="the built-in two-agent cycle, end to end").set_defaults(
        func=cmd_cycle_example)

    p = sub.add_parser("suite", parents=[common], help="run property suites")
    p.add_argument("--name", default="all", choices=["all"] + list(SUITES))
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--count", type=int, help="instances per suite (default: each suite's own)")
    p.add_argument("--max-arcs", type=int, help="largest generated arc set")
    p.set_defaults(func=cmd_suite)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else ERROR
    if getattr(args, "seed", 0) is not None and getattr(args, "seed", 0) < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return ERROR
    try:
        return args.func(args)
    except (InstanceError, NetworkError, SizeLimitError, UsageError, InfeasibleOutcome,
            NoFeasibleOutcome, PreconditionError, OutsideHullError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    except lpmod.LPError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return ERROR


def main() -> None:
    sys.exit(run())
