"""Command-line front end: one executable over all modules, JSON in and out.

Subcommand grammar::

    ampnef check  {flag|x|partial|minimal} (--problem F | --p P --sig F --weight F) [--mode ample|nef]
    ampnef cone   {rays|member|decompose|fixpoint} --p P --a 1,1,1 [--x 1,3/2,2] [--iters K]
    ampnef picard {reduce|identity|feasible-t} [--relations F --expr F --basis g1,g2 | numeric flags]
    ampnef slope  {generic|from-ranks|tower|diagram} --sig F [--rank R --rtilde 2,1,0,2 --slope 3,0,4 --svg out.svg]
    ampnef zip    {sample|slope|quotient} --sig F --p P [--seed S] [--rank R]
    ampnef weyl   strata --sig F [--order twisted|bruhat]
    ampnef selftest
    ampnef batch list.json

Every invocation writes exactly one JSON document to stdout (or ``--out``):
an envelope ``{"command", "params", "result"}`` with exact rationals as
"num/den" strings.  The SVG for ``slope diagram`` goes to a side file, never
to stdout.  All randomness funnels through ``--seed`` (default 0), so a fixed
argv is byte-reproducible.  Exit codes: 0 = computed (the verdict itself
lives in the payload), 2 = input error, 3 = internal error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema

from . import __version__
from .cones import averaging_closure, csv_cone, csv_rays, decompose_in_rays
from .criteria import (
    check_X,
    check_flag,
    check_minimal_crosscheck,
    check_partial_nef,
    classify_case,
    crosscheck_case,
)
from .datum import (
    DatumError,
    MinimalFlagWeight,
    ParallelWeightX,
    Signature,
    check_prime,
    frac,
    frac_str,
    load_json,
    problem_from_json,
    problem_to_json,
    signature_from_json,
    signature_to_json,
    weight_from_json,
    weight_to_json,
)
from .picard import ClassExpr, feasible_t, reduce_class, verify_identity
from .slopes import generic_slope, render_diagram, slope_from_ranks, tower
from .weyl import min_reps, strata_poset
from .zipmodp import (
    conjugate_chain,
    coordinate_chain,
    empirical_slope,
    quotient_dims,
    random_coordinate_subsets,
    random_subspace,
    sample_point,
    standard_lattice,
)

_SCHEMA_DIR = Path(__file__).resolve().parents[2] / "schemas"
_schema_cache: dict = {}


def _schema(name: str) -> dict:
    if name not in _schema_cache:
        path = _SCHEMA_DIR / f"{name}.schema.json"
        if not path.is_file():
            raise RuntimeError(
                f"schema {name!r} not found under {_SCHEMA_DIR} "
                "(run from a source checkout)"
            )
        with open(path, "r", encoding="utf-8") as fh:
            _schema_cache[name] = json.load(fh)
    return _schema_cache[name]


def _validated(path: str, schema_name: str):
    doc = load_json(path)
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(s) for s in exc.absolute_path) or "(root)"
        raise DatumError(
            f"{path} violates the {schema_name} schema at {where}: {exc.message}"
        ) from exc
    return doc


def _int_csv(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError as exc:
        raise DatumError(f"{flag} wants comma-separated integers, got {text!r}") from exc


def _frac_csv(text: str, flag: str) -> tuple[Fraction, ...]:
    try:
        return tuple(frac(s) for s in text.split(","))
    except (ValueError, DatumError) as exc:
        raise DatumError(f"{flag} wants comma-separated rationals, got {text!r}") from exc


# ---------------------------------------------------------------------------
# handlers: each returns (params_echo, result, exit_code)


def _load_problem(args):
    if args.problem:
        p, sig, w = problem_from_json(_validated(args.problem, "problem"))
    else:
        missing = [
            f for f, v in (("--p", args.p), ("--sig", args.sig), ("--weight", args.weight))
            if v is None
        ]
        if missing:
            raise DatumError(
                "need either --problem or all of --p/--sig/--weight "
                f"(missing {', '.join(missing)})"
            )
        sig = signature_from_json(_validated(args.sig, "signature"))
        w = weight_from_json(_validated(args.weight, "weight"))
        p = check_prime(args.p)
    return p, sig, w


def _cmd_check(args):
    p, sig, w = _load_problem(args)
    params = problem_to_json(p, sig, w)
    target = args.target
    if target == "flag":
        params["mode"] = args.mode
        params["case2Form"] = args.case2_form
        v = check_flag(p, sig, w, mode=args.mode, case2_form=args.case2_form)
        result = dict(v.to_json(), case=classify_case(sig).value)
    elif target == "x":
        params["mode"] = args.mode
        if not isinstance(w, ParallelWeightX):
            raise DatumError("check x wants a parallelX weight")
        result = check_X(p, sig, w, mode=args.mode).to_json()
    elif target == "partial":
        result = check_partial_nef(p, sig, w).to_json()
    else:  # minimal
        if not isinstance(w, MinimalFlagWeight):
            raise DatumError("check minimal wants a minimal weight")
        v = check_minimal_crosscheck(p, sig, w)
        result = dict(v.to_json(), family=crosscheck_case(sig, w))
    return f"check.{target}", params, result, 0


def _cmd_cone(args):
    p = check_prime(args.p)
    a = _int_csv(args.a, "--a")
    params = {"p": p, "a": list(a)}
    action = args.action
    if action == "rays":
        rays = csv_rays(p, a)
        result = {"rays": [[frac_str(v) for v in ray] for ray in rays]}
    elif action in ("member", "decompose"):
        if args.x is None:
            raise DatumError(f"cone {action} needs --x")
        x = _frac_csv(args.x, "--x")
        params["x"] = [frac_str(v) for v in x]
        if action == "member":
            ok, bad = csv_cone(p, a).member(x)
            result = {"member": ok, "violated": bad}
        else:
            coeffs = decompose_in_rays(p, a, x)
            result = {
                "member": coeffs is not None,
                "coefficients": None if coeffs is None else [frac_str(c) for c in coeffs],
            }
    else:  # fixpoint
        params["iters"] = args.iters
        closure = averaging_closure(p, a, max_iter=args.iters)
        result = closure.to_json()
    return f"cone.{action}", params, result, 0


def _class_file(path: str) -> ClassExpr:
    return ClassExpr.from_json(_validated(path, "classexpr"))


def _cmd_picard(args):
    action = args.action
    if action == "feasible-t":
        p = check_prime(args.p)
        params = {
            "p": p, "N": args.N, "a1": args.a1, "s": args.s,
            "k1": frac_str(frac(args.k1)), "k2": frac_str(frac(args.k2)),
            "alpha": frac_str(frac(args.alpha)), "variant": args.variant,
        }
        extra = {}
        for key in ("n", "m", "delta", "offset"):
            v = getattr(args, key)
            if v is not None:
                extra[key] = v
                params[key] = v
        window = feasible_t(
            p, args.N, args.a1, args.s,
            frac(args.k1), frac(args.k2), frac(args.alpha),
            variant=args.variant, **extra,
        )
        result = {
            "feasible": window is not None,
            "interval": None if window is None else [frac_str(window[0]), frac_str(window[1])],
        }
        return "picard.feasible-t", params, result, 0

    if args.relations is None:
        raise DatumError(f"picard {action} needs --relations")
    relations = [
        ClassExpr.from_json(doc)
        for doc in _validated(args.relations, "relations")
    ]
    params = {"relations": [r.to_json() for r in relations]}
    if action == "reduce":
        if args.expr is None or args.basis is None:
            raise DatumError("picard reduce needs --expr and --basis")
        expr = _class_file(args.expr)
        basis = tuple(s.strip() for s in args.basis.split(","))
        params["expr"] = expr.to_json()
        params["basis"] = list(basis)
        reduced = reduce_class(expr, relations, basis)
        result = {"reduced": reduced.to_json()}
    else:  # identity
        if args.lhs is None or args.rhs is None:
            raise DatumError("picard identity needs --lhs and --rhs")
        lhs, rhs = _class_file(args.lhs), _class_file(args.rhs)
        params["lhs"] = lhs.to_json()
        params["rhs"] = rhs.to_json()
        result = {"holds": verify_identity(lhs, rhs, relations)}
    return f"picard.{action}", params, result, 0


def _cmd_slope(args):
    sig = signature_from_json(_validated(args.sig, "signature"))
    params = {"signature": signature_to_json(sig)}
    action = args.action
    if action == "generic":
        params["place"] = args.place
        params["rank"] = args.rank
        if args.rank is None:
            raise DatumError("slope generic needs --rank")
        result = {"slope": generic_slope(sig, args.place, args.rank).to_json()}
    elif action == "from-ranks":
        if args.rtilde is None:
            raise DatumError("slope from-ranks needs --rtilde")
        trace = _int_csv(args.rtilde, "--rtilde")
        params["place"] = args.place
        params["rtilde"] = list(trace)
        result = {"slope": slope_from_ranks(sig, args.place, trace).to_json()}
    elif action == "tower":
        if args.rank is None or args.slope is None:
            raise DatumError("slope tower needs --rank and --slope")
        slope_vec = _int_csv(args.slope, "--slope")
        params["rank"] = args.rank
        params["slope"] = list(slope_vec)
        result = {"tower": tower(sig, 1, args.rank, slope_vec).to_json()}
    else:  # diagram
        overlays = [_int_csv(t, "--overlay") for t in (args.overlay or [])]
        params["overlays"] = [list(t) for t in overlays]
        dg = render_diagram(sig, overlays)
        result = {"diagram": dg.to_json()}
        if args.svg:
            with open(args.svg, "w", encoding="utf-8") as fh:
                fh.write(dg.to_svg())
            result["svgPath"] = args.svg
    return f"slope.{action}", params, result, 0


def _cmd_zip(args):
    sig = signature_from_json(_validated(args.sig, "signature"))
    p = check_prime(args.p)
    params = {"signature": signature_to_json(sig), "p": p, "seed": args.seed}
    action = args.action
    if action == "sample":
        pt = sample_point(sig, p, args.seed)
        result = {"V": [list(map(list, M)) for M in pt.V],
                  "F": [list(map(list, M)) for M in pt.F]}
    elif action == "slope":
        if args.rank is None:
            raise DatumError("zip slope needs --rank")
        params["place"] = args.place
        params["rank"] = args.rank
        pt = sample_point(sig, p, args.seed)
        rng = random.Random(args.seed)
        basis = pt.omega_tilde(args.place)
        S = random_subspace(rng, p, basis, args.rank)
        sv = empirical_slope(pt, args.place, S)
        result = {"subspace": [list(row) for row in S], "slope": sv.to_json()}
    else:  # quotient
        lp = standard_lattice(sig, p)
        rng = random.Random(args.seed)
        subsets = random_coordinate_subsets(sig, rng)
        chain = coordinate_chain(sig, p, subsets)
        lp2, chain2 = conjugate_chain(lp, chain, seed=args.seed)
        dims = quotient_dims(lp2, chain2)
        lengths = list(chain.lengths)
        predicted = [
            sig.m_at(i) - lengths[i - 1] + lengths[sig.place(i - 1) - 1]
            for i in range(1, sig.N + 1)
        ]
        result = {
            "subsets": [sorted(s) for s in subsets],
            "lengths": lengths,
            "dims": dims,
            "predicted": predicted,
        }
    return f"zip.{action}", params, result, 0


def _cmd_weyl(args):
    sig = signature_from_json(_validated(args.sig, "signature"))
    params = {"signature": signature_to_json(sig), "order": args.order}
    poset = strata_poset(sig, order=args.order)
    return "weyl.strata", params, poset, 0


# ---------------------------------------------------------------------------
# selftest: embedded worked vectors


def _selftest_vectors():
    from .picard import chain_relations  # local: avoid a hot import on every run

    sig_slope = Signature(3, 5, (4, 2, 3))

    def slope_trace():
        sv = slope_from_ranks(sig_slope, 1, (2, 1, 0, 2))
        return sv.r == (2, 3, 1), {"r": list(sv.r)}

    def slope_generic():
        sv = generic_slope(sig_slope, 1, 2)
        return sv.r == (2, 3, 3), {"r": list(sv.r)}

    def tower_table():
        t = tower(Signature(3, 7, (5, 6, 4)), 1, 2, (3, 0, 4))
        good = (
            t.m0 == 1
            and t.layers == ((4, 1, 2), (5, 2, 3), (6, 3, 4))
            and t.termination_layer == 4
        )
        return good, t.to_json()

    def blowdown_n3():
        rels = chain_relations(Signature(1, 3, (2,)), 2, [((1, 2), (1, 1))])
        red = reduce_class(ClassExpr.single("sub:1:F_1"), rels, ("omega:1",))
        return red.coeff("omega:1") == Fraction(3, 2), {"reduced": red.to_json()}

    def blowdown_n3_two_places():
        rels = chain_relations(
            Signature(2, 3, (2, 3)), 2, [((1, 2), (2, 2)), ((2, 2), (1, 1))]
        )
        red = reduce_class(ClassExpr.single("sub:1:F_1"), rels, ("omega:1",))
        return red.coeff("omega:1") == Fraction(5, 4), {"reduced": red.to_json()}

    def feasible_window():
        window = feasible_t(2, 2, 1, 2, 2, 2, 1)
        ok = window == (Fraction(4, 5), Fraction(4, 5))
        return ok, {"interval": None if window is None else [frac_str(v) for v in window]}

    def cone_ray_table():
        rays = csv_rays(2, (1, 1, 1))
        want = ((1, 2, 4), (4, 1, 2), (2, 4, 1))
        ok = tuple(tuple(v for v in ray) for ray in rays) == want
        return ok, {"rays": [[frac_str(v) for v in ray] for ray in rays]}

    def hodge_ample():
        v = check_X(2, Signature(2, 3, (1, 2)), ParallelWeightX((1, 1)), mode="ample")
        return v.satisfied, v.to_json()

    def weyl_count():
        reps = min_reps(Signature(2, 3, (1, 2)))
        return len(reps) == 9, {"count": len(reps)}

    def zip_omega_slope():
        pt = sample_point(sig_slope, 2, 0)
        sv = empirical_slope(pt, 1, pt.omega(1))
        ok = sv.r_tilde == (4, 3, 2, 4) and sv.r == (2, 3, 1)
        return ok, sv.to_json()

    return [
        ("slope.rank-trace", slope_trace),
        ("slope.generic", slope_generic),
        ("slope.tower-table", tower_table),
        ("picard.blowdown-n3", blowdown_n3),
        ("picard.blowdown-n3-two-places", blowdown_n3_two_places),
        ("picard.feasible-window", feasible_window),
        ("cone.ray-table", cone_ray_table),
        ("check.hodge-ample", hodge_ample),
        ("weyl.stratum-count", weyl_count),
        ("zip.omega-slope", zip_omega_slope),
    ]


def _cmd_selftest(args):
    cases = []
    all_ok = True
    for name, fn in _selftest_vectors():
        try:
            ok, detail = fn()
        except Exception as exc:  # a selftest crash is a defect, not bad input
            ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
        all_ok &= bool(ok)
        cases.append({"name": name, "ok": bool(ok), "detail": detail})
    result = {"cases": cases, "allOk": all_ok}
    return "selftest", {}, result, 0 if all_ok else 3


# ---------------------------------------------------------------------------
# batch


def _cmd_batch(args):
    entries = _validated(args.file, "batch")
    results = []
    worst = 0
    for argv in entries:
        if argv and argv[0] == "batch":
            results.append({"error": "nested batch is not allowed", "exitCode": 2})
            worst = max(worst, 2)
            continue
        try:
            sub = _build_parser().parse_args(argv)
        except SystemExit as exc:
            code = int(exc.code) if exc.code else 0
            results.append({"error": "argument parsing failed", "exitCode": code})
            worst = max(worst, code)
            continue
        try:
            command, params, result, code = sub.func(sub)
            results.append({"command": command, "params": params, "result": result})
            worst = max(worst, code)
        except DatumError as exc:
            results.append({"error": str(exc), "exitCode": 2})
            worst = max(worst, 2)
        except Exception as exc:
            results.append(
                {"error": f"{type(exc).__name__}: {exc}", "exitCode": 3}
            )
            worst = max(worst, 3)
    return "batch", {"count": len(entries)}, results, worst


# ---------------------------------------------------------------------------
# parser assembly


def _build_parser() -> argparse.ArgumentParser:
    out_flag = argparse.ArgumentParser(add_help=False)
    out_flag.add_argument("--out", help="write the JSON document here instead of stdout")

    ap = argparse.ArgumentParser(
        prog="ampnef",
        description="Exact ample/nef verdicts, cones, divisor classes, slopes, "
        "zip points and stratum combinatorics for mod-p unitary moduli.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="ample/nef verdicts for weights")
    csub = check.add_subparsers(dest="target", required=True)
    for name in ("flag", "x", "partial", "minimal"):
        t = csub.add_parser(name, parents=[out_flag])
        t.add_argument("--problem", help="combined problem JSON (p, N, n, m, weight)")
        t.add_argument("--p", type=int, help="prime (with --sig/--weight)")
        t.add_argument("--sig", help="signature JSON file")
        t.add_argument("--weight", help="weight JSON file")
        if name in ("flag", "x"):
            t.add_argument("--mode", choices=("ample", "nef"), default="ample")
        if name == "flag":
            t.add_argument(
                "--case2-form",
                dest="case2_form",
                choices=("lemma", "theorem"),
                default="lemma",
                help="third-line coefficient at a single essential place of "
                "corank one (the two published forms differ off the parallel locus)",
            )
        t.set_defaults(func=_cmd_check)

    cone = sub.add_parser("cone", help="cross-place cone: rays, membership, averaging")
    cosub = cone.add_subparsers(dest="action", required=True)
    for name in ("rays", "member", "decompose", "fixpoint"):
        t = cosub.add_parser(name, parents=[out_flag])
        t.add_argument("--p", type=int, required=True)
        t.add_argument("--a", required=True, help="comma-separated essential gaps")
        if name in ("member", "decompose"):
            t.add_argument("--x", help="comma-separated rational coordinates")
        if name == "fixpoint":
            t.add_argument("--iters", type=int, default=30)
        t.set_defaults(func=_cmd_cone)

    picard = sub.add_parser("picard", help="divisor-class reduction and identities")
    psub = picard.add_subparsers(dest="action", required=True)
    for name in ("reduce", "identity", "feasible-t"):
        t = psub.add_parser(name, parents=[out_flag])
        if name == "feasible-t":
            t.add_argument("--p", type=int, required=True)
            t.add_argument("--N", type=int, required=True)
            t.add_argument("--a1", type=int, required=True)
            t.add_argument("--s", type=int, required=True)
            t.add_argument("--k1", required=True)
            t.add_argument("--k2", required=True)
            t.add_argument("--alpha", required=True)
            t.add_argument(
                "--variant",
                choices=("case1", "case2", "case3", "case3prime"),
                default="case1",
            )
            t.add_argument("--n", type=int)
            t.add_argument("--m", type=int)
            t.add_argument("--delta", type=int)
            t.add_argument("--offset", type=int)
        else:
            t.add_argument("--relations", help="JSON file: list of class expressions")
            if name == "reduce":
                t.add_argument("--expr", help="JSON file: class expression to reduce")
                t.add_argument("--basis", help="comma-separated generator names")
            else:
                t.add_argument("--lhs", help="JSON file: left class expression")
                t.add_argument("--rhs", help="JSON file: right class expression")
        t.set_defaults(func=_cmd_picard)

    slope = sub.add_parser("slope", help="rank traces, generic slopes, towers, diagrams")
    ssub = slope.add_subparsers(dest="action", required=True)
    for name in ("generic", "from-ranks", "tower", "diagram"):
        t = ssub.add_parser(name, parents=[out_flag])
        t.add_argument("--sig", required=True, help="signature JSON file")
        if name in ("generic", "from-ranks"):
            t.add_argument("--place", type=int, default=1)
        if name in ("generic", "tower"):
            t.add_argument("--rank", type=int)
        if name == "from-ranks":
            t.add_argument("--rtilde", help="comma-separated rank trace (N+1 entries)")
        if name == "tower":
            t.add_argument("--slope", help="comma-separated slope entries (N values)")
        if name == "diagram":
            t.add_argument(
                "--overlay",
                action="append",
                help="comma-separated rank trace to draw on top; repeatable",
            )
            t.add_argument("--svg", help="side-channel SVG output path")
        t.set_defaults(func=_cmd_slope)

    zipc = sub.add_parser("zip", help="mod-p points: sampling, slopes, quotients")
    zsub = zipc.add_subparsers(dest="action", required=True)
    for name in ("sample", "slope", "quotient"):
        t = zsub.add_parser(name, parents=[out_flag])
        t.add_argument("--sig", required=True, help="signature JSON file")
        t.add_argument("--p", type=int, required=True)
        t.add_argument("--seed", type=int, default=0)
        if name == "slope":
            t.add_argument("--place", type=int, default=1)
            t.add_argument("--rank", type=int)
        t.set_defaults(func=_cmd_zip)

    weyl = sub.add_parser("weyl", help="stratum labels and closure order")
    wsub = weyl.add_subparsers(dest="action", required=True)
    t = wsub.add_parser("strata", parents=[out_flag])
    t.add_argument("--sig", required=True, help="signature JSON file")
    t.add_argument("--order", choices=("twisted", "bruhat"), default="twisted")
    t.set_defaults(func=_cmd_weyl)

    st = sub.add_parser("selftest", parents=[out_flag], help="run embedded worked vectors")
    st.set_defaults(func=_cmd_selftest)

    batch = sub.add_parser("batch", parents=[out_flag], help="run a list of commands")
    batch.add_argument("file", help="JSON file: list of argv arrays")
    batch.set_defaults(func=_cmd_batch)

    return ap


def _emit(envelope: dict, out: str | None) -> None:
    jsonschema.validate(envelope, _schema("response"))
    text = json.dumps(envelope, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help/--version (0) or argparse usage error (2)
        return int(exc.code) if exc.code else 0
    try:
        command, params, result, code = args.func(args)
        envelope = {"command": command, "params": params, "result": result}
        _emit(envelope, args.out)
        return code
    except DatumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
