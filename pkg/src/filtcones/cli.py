"""Batch front end: parse scenario files, run computations, emit reports.

Report lines follow "QUERY | RESULT | WITNESS | STATUS"; all numbers are
printed as exact rationals with a decimal approximation.  The exit code
is 0 iff every assertion in the run passed.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional

from .novikov import INF, rat
from .filtcx import (
    FiltError, action_level, boundary_depth_elem, boundary_level,
    delta_d, parse_complex,
)
from .surface.curves import TorusCurve, intersections, parse_curve
from .surface.floer import floer_complex, hf_rank
from .surface.shadow import parse_diagram, planar_shadow
from .surface.svg import curves_to_svg, diagram_to_svg
from .surface.widths import gromov_width_rel
from .fragmetric import (
    FragError, LagObject, MetricSpace, Move, suspension_move, trace_move,
)
from . import scenarios as canned


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, Fraction):
        if x >= INF:
            return "inf"
        if x <= -INF:
            return "-inf"
        return f"{x} (~{float(x):.6g})"
    return str(x)


class Report:
    def __init__(self, out=None):
        self.lines: List[str] = []
        self.failed = 0
        self.out = out or sys.stdout

    def emit(self, query: str, result, witness="", status="ok"):
        line = f"{query} | {_fmt(result)} | {witness or '-'} | {status}"
        self.lines.append(line)
        print(line, file=self.out)
        if status not in ("ok", "pass"):
            self.failed += 1

    def check(self, query: str, result, expected, witness=""):
        status = "pass" if result == expected else f"FAIL (want {_fmt(expected)})"
        self.emit(query, result, witness, status)


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

class Scenario:
    def __init__(self):
        self.curves: Dict[str, TorusCurve] = {}
        self.objects: List[LagObject] = []
        self.families: Dict[str, List[str]] = {}
        self.moves: List[Move] = []
        self.queries: List[str] = []
        self.asserts: List[str] = []
        self.space: Optional[MetricSpace] = None

    def metric_space(self) -> MetricSpace:
        if self.space is None:
            names = {o.name for o in self.objects}
            for c in self.curves:
                if c not in names:
                    self.objects.append(LagObject(c, [c]))
                    names.add(c)
            self.space = MetricSpace(self.curves, self.objects,
                                     self.families, self.moves)
        return self.space


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("scenario "):
            parts = dict(p.split("=") for p in line.split()[2:])
            name = line.split()[1]
            eps = rat(parts.get("eps", "1/8"))
            delta = rat(parts.get("delta", "1/256"))
            if name == "lem-ex1":
                sc.space = canned.lem_ex1_space(eps, delta)
            elif name == "trace-surgery":
                sc.space = canned.trace_surgery_space(eps, delta)
            elif name == "disjoint-union":
                sc.space = canned.disjoint_union_space(eps)
            else:
                raise FragError(f"unknown canned scenario {name}")
            sc.curves = sc.space.curves
        elif line.startswith("curve "):
            c = parse_curve(line)
            sc.curves[c.name] = c
        elif line.startswith("object "):
            parts = line.split()
            name = parts[1]
            kw = dict(p.split("=") for p in parts[2:])
            sc.objects.append(LagObject(
                name,
                kw.get("carrier", name).split(","),
                kw.get("cover", "").split(",") if kw.get("cover") else None,
                kw.get("geometry")))
        elif line.startswith("family "):
            head, rest = line[7:].split("=", 1)
            sc.families[head.strip()] = rest.split()
        elif line.startswith("move suspension "):
            head, rest = line[len("move suspension "):].split(":", 1)
            arrow, kw = rest.rsplit("length=", 1)
            a, b = [s.strip() for s in arrow.split("->")]
            sc.moves.append(suspension_move(head.strip(), a, b, rat(kw)))
        elif line.startswith("move trace "):
            head, rest = line[len("move trace "):].split(":", 1)
            src, remainder = rest.split("->", 1)
            ends_part, kw_part = remainder.split(")", 1)
            ends = [e.strip() for e in ends_part.strip().lstrip("(").split(",")]
            kws = dict(p.split("=") for p in kw_part.split())
            handles = [rat(v) for v in kws["handles"].split(",")]
            groups = [int(v) for v in kws["groups"].split(",")]
            sc.moves.append(trace_move(head.strip(), src.strip(), ends,
                                       handles, groups))
        elif line.startswith("query "):
            sc.queries.append(line[6:].strip())
        elif line.startswith("assert "):
            sc.asserts.append(line[7:].strip())
        else:
            raise FragError(f"unrecognized scenario line {line!r}")
    return sc


def run_query(space: MetricSpace, q: str, rep: Report,
              expected=None):
    parts = q.split()
    kind = parts[0]
    if kind == "d_k":
        lp, l = parts[1], parts[2]
        kw = dict(p.split("=") for p in parts[3:])
        r = space.d_k(lp, l, kw.get("family", "F"), int(kw["k"]))
        val = (r.lower, r.upper)
        if expected is not None:
            rep.check(q, r.upper if r.lower != r.upper else r.lower,
                      expected, r.witness)
        else:
            rep.emit(q, f"[{_fmt(r.lower)}, {_fmt(r.upper)}]",
                     r.witness, "ok")
        return val
    if kind == "l_a":
        lp, l = parts[1], parts[2]
        kw = dict(p.split("=") for p in parts[3:])
        a = None if kw.get("a", "inf") == "inf" else rat(kw["a"])
        r = space.cone_length(lp, l, kw.get("family", "F"), a)
        if expected is not None:
            rep.check(q, r.upper, expected, r.witness)
        else:
            rep.emit(q, f"[{r.lower}, {r.upper}]", r.witness, "ok")
        return r.upper
    if kind == "d_F":
        lp, l = parts[1], parts[2]
        kw = dict(p.split("=") for p in parts[3:])
        r = space.d_f(lp, l, kw.get("family", "F"))
        if expected is not None:
            rep.check(q, r.upper, expected, r.witness)
        else:
            rep.emit(q, f"[{_fmt(r.lower)}, {_fmt(r.upper)}]", r.witness, "ok")
        return r.upper
    if kind == "floer":
        a, b = parts[1], parts[2]
        try:
            rank = hf_rank(space.curves[a], space.curves[b])
        except Exception as exc:
            rep.emit(q, None, "", f"error: {exc}")
            return None
        if expected is not None:
            rep.check(q, rank, int(expected))
        else:
            rep.emit(q, rank)
        return rank
    if kind == "intersections":
        a, b = parts[1], parts[2]
        n = len(intersections(space.curves[a], space.curves[b]))
        if expected is not None:
            rep.check(q, n, int(expected))
        else:
            rep.emit(q, n)
        return n
    if kind == "width":
        kw = dict(p.split("=") for p in parts[1:])
        carrier = [space.curves[c] for c in kw["carrier"].split(",")]
        qset = [space.curves[c] for c in kw.get("q", "").split(",") if c]
        val = gromov_width_rel(carrier, qset)
        if expected is not None:
            rep.check(q, val, rat(expected))
        else:
            rep.emit(q, val)
        return val
    rep.emit(q, None, "", f"error: unknown query {kind}")
    return None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_metric(args) -> int:
    rep = Report()
    sc = parse_scenario(open(args.scenario).read())
    space = sc.metric_space()
    queries = list(sc.queries)
    if args.query:
        queries += args.query
    for q in queries:
        run_query(space, q, rep)
    for a in sc.asserts:
        q, expected = a.rsplit("==", 1)
        run_query(space, q.strip(), rep, expected=rat(expected.strip()))
    if args.svg:
        os.makedirs(args.svg, exist_ok=True)
        path = os.path.join(args.svg, "curves.svg")
        with open(path, "w") as f:
            f.write(curves_to_svg(space.curves))
        rep.emit("svg curves", path)
    return 1 if rep.failed else 0


def cmd_floer(args) -> int:
    rep = Report()
    sc = parse_scenario(open(args.scenario).read())
    space = sc.metric_space()
    if args.pair:
        a, b = args.pair
        run_query(space, f"floer {a} {b}", rep)
        try:
            cx = floer_complex(space.curves[a], space.curves[b])
            rep.emit(f"complex {a} {b}",
                     f"{cx.dim} generators, delta_d={_fmt(delta_d(cx))}")
        except Exception as exc:
            rep.emit(f"complex {a} {b}", None, "", f"error: {exc}")
    else:
        for q in sc.queries:
            if q.startswith(("floer", "intersections")):
                run_query(space, q, rep)
    return 1 if rep.failed else 0


def cmd_depth(args) -> int:
    rep = Report()
    cx = parse_complex(open(args.complex).read(), cutoff=args.cutoff)
    for q in args.query or []:
        parts = q.split()
        kind, gen = parts[0], parts[1]
        c = cx.basis_chain(gen)
        try:
            if kind == "B":
                rep.emit(q, boundary_level(c, cx))
            elif kind == "beta":
                rep.emit(q, boundary_depth_elem(c, cx))
            elif kind == "A":
                rep.emit(q, action_level(c, cx))
            else:
                rep.emit(q, None, "", f"error: unknown depth query {kind}")
        except FiltError as exc:
            rep.emit(q, None, "", f"error: {exc}")
    rep.emit("delta_d", delta_d(cx))
    return 1 if rep.failed else 0


def cmd_shadow(args) -> int:
    rep = Report()
    d = parse_diagram(open(args.diagram).read())
    rep.emit("shadow", planar_shadow(d))
    if args.svg:
        os.makedirs(args.svg, exist_ok=True)
        path = os.path.join(args.svg, "diagram.svg")
        with open(path, "w") as f:
            f.write(diagram_to_svg(d))
        rep.emit("svg diagram", path)
    return 1 if rep.failed else 0


def cmd_width(args) -> int:
    rep = Report()
    sc = parse_scenario(open(args.scenario).read())
    space = sc.metric_space()
    for q in args.query or []:
        run_query(space, q, rep)
    return 1 if rep.failed else 0


def cmd_twisted_check(args) -> int:
    from .wfainf import Discrepancy, PreModHom, parse_category, yoneda_module
    from .twisted import IteratedConeSpec, TwistedData, \
        assemble_twisted_mu1, build_iterated_cone, check_twisted_square_zero
    from .novikov import parse_scalar
    from .filtcx import chain_add
    rep = Report()
    text = open(args.spec).read()

    def parse_chain(rhs):
        ch = {}
        for term in rhs.split("+"):
            scal, tgt = term.strip().rsplit("*", 1)
            ch = chain_add(ch, {tgt.strip():
                                parse_scalar(scal.strip(), args.cutoff)})
        return ch

    cat_lines, obj_list, cycles = [], [], {}
    phi_tables: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line.startswith("objects "):
            obj_list = line.split()[1:]
        elif line.startswith("c "):
            head, rhs = line.split("->", 1)
            _, qs, ps = head.split()
            cycles[(int(qs), int(ps))] = parse_chain(rhs)
        elif line.startswith("phi "):
            head, rhs = line.split("->", 1)
            parts = head.split(None, 2)
            i = int(parts[1])
            gens = tuple(g.strip() for g in
                         parts[2].strip().strip("()").split(","))
            phi_tables.setdefault(i, {})[gens] = parse_chain(rhs)
        elif line:
            cat_lines.append(raw)
    cat = parse_category("\n".join(cat_lines), cutoff=args.cutoff,
                         cap=args.arity_cap)
    data = TwistedData(cat, obj_list, cycles)
    sym, _ = assemble_twisted_mu1(cat, obj_list, data)
    for key in sorted(sym):
        rep.emit(f"entry {key}", sym[key])
    test_obj = cat.objects[0]
    ok = check_twisted_square_zero(cat, obj_list, data, test_obj)
    rep.emit(f"square-zero at {test_obj}", ok, "",
             "pass" if ok else "FAIL (mu_1^2 != 0)")
    if phi_tables:
        def attach(i):
            def build(k):
                src = yoneda_module(cat, obj_list[i])
                comps = {}
                for gens, ch in phi_tables[i].items():
                    comps.setdefault(len(gens), {})[gens] = ch
                f = PreModHom(src, k, comps, 0)
                meas = [s for s in f.measured_shifts() if s > -INF]
                f.shift = max(meas, default=Fraction(0))
                return f
            return build

        stages = sorted(phi_tables)
        spec = IteratedConeSpec(
            cat, obj_list[:max(stages) + 1],
            [attach(i) for i in stages],
            [0] * len(stages),
            [Discrepancy.zero(cat.cap, "hom")] * len(stages))
        try:
            k, ledger = build_iterated_cone(spec)
            for i, d in enumerate(ledger):
                rep.emit(f"cone ledger K_{i}",
                         " ".join(str(v) for v in d.values))
        except Exception as exc:
            rep.emit("iterated cone", None, "", f"error: {exc}")
    return 1 if rep.failed else 0


def cmd_repro_lemma_ex1(args) -> int:
    eps, delta = rat(args.eps), rat(args.delta)
    rep = Report()
    if not delta < eps * eps / 2:
        rep.emit("precondition delta < eps^2/2", f"{delta} vs {eps * eps / 2}",
                 "", "FAIL (refused)")
        return 1
    space = canned.lem_ex1_space(eps, delta)
    r0 = space.d_k("L'", "L", "F", 0)
    rep.check("d_0(L',L) lower", r0.lower, 4 * eps, r0.certificate)
    rep.check("d_0(L',L) upper", r0.upper, 4 * eps, r0.witness)
    r4 = space.d_k("L'", "L", "F", 4)
    rep.emit("d_4(L',L) upper", r4.upper, r4.witness,
             "pass" if r4.upper <= 2 * delta else "FAIL (> 2delta)")
    rep.check("trace footprint shadow", space.moves[1].shadow, 2 * delta)
    labs = space.cone_length("L'", "L", "F", None)
    rep.check("l(L',L)", labs.upper, 0, labs.witness)
    l2d = space.cone_length("L'", "L", "F", 2 * delta)
    rep.check("l_2delta(L',L)", l2d.upper, 4, l2d.witness)
    rep.check("l_2delta certified below", l2d.lower, 4, l2d.certificate)
    n, lp, l = space.curves["N"], space.curves["L'"], space.curves["L"]
    rep.check("#(N cap L')", len(intersections(n, lp)), 4)
    ranks = sum(hf_rank(n, space.curves[f"S{i}"]) for i in range(1, 5))
    rep.check("sum rk HF(N,S_i)", ranks, 4)
    rep.check("rk HF(N,L)", hf_rank(n, l), 0)
    status = "pass" if len(intersections(n, lp)) >= ranks + hf_rank(n, l) \
        else "FAIL"
    rep.emit("intersection inequality", f"{len(intersections(n, lp))} >= "
             f"{ranks + hf_rank(n, l)}", "", status)
    tspace = canned.trace_surgery_space(eps, delta)
    r1 = tspace.d_k("L''", "L", "F", 1)
    rep.check("d_1(L'',L) lower", r1.lower, delta, r1.certificate)
    rep.check("d_1(L'',L) upper", r1.upper, delta, r1.witness)
    dspace = canned.disjoint_union_space(eps)
    r3 = dspace.d_k("S1", "S2", "F", 3)
    rep.check("d^F_3(S1,S2) lower", r3.lower, Fraction(0), r3.certificate)
    rep.check("d^F_3(S1,S2) upper", r3.upper, Fraction(0), r3.witness)
    prev = None
    for e in (eps, eps / 2, eps / 4):
        s = planar_shadow(canned.connected_small_shadow_footprint(e))
        ok = s == e and (prev is None or s < prev)
        rep.emit(f"W_eps shadow at {e}", s, "",
                 "pass" if ok else "FAIL (not decreasing)")
        prev = s
    if args.svg:
        os.makedirs(args.svg, exist_ok=True)
        with open(os.path.join(args.svg, "lem-ex1.svg"), "w") as f:
            f.write(curves_to_svg(space.curves))
        with open(os.path.join(args.svg, "trace.svg"), "w") as f:
            f.write(diagram_to_svg(space.moves[1].footprint))
        rep.emit("svg", args.svg)
    return 1 if rep.failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="filtcones",
        description="Exact filtered-cone invariants and fragmentation "
                    "metrics on the flat torus")
    parser.add_argument("--cutoff", type=rat,
                        default=rat(os.environ.get("FILTCONES_CUTOFF", "64")))
    parser.add_argument("--arity-cap", type=int,
                        default=int(os.environ.get("FILTCONES_ARITY_CAP", "6")))
    parser.add_argument("--seed", type=int,
                        default=int(os.environ.get("FILTCONES_SEED", "0")))
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("metric", help="run scenario metric queries")
    p.add_argument("--scenario", required=True)
    p.add_argument("--query", action="append")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("floer", help="Floer ranks for curve pairs")
    p.add_argument("--scenario", required=True)
    p.add_argument("--pair", nargs=2)
    p.set_defaults(func=cmd_floer)

    p = sub.add_parser("depth", help="boundary level/depth queries")
    p.add_argument("--complex", required=True)
    p.add_argument("--query", action="append")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("shadow", help="shadow of a planar diagram")
    p.add_argument("--diagram", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_shadow)

    p = sub.add_parser("width", help="Gromov width queries")
    p.add_argument("--scenario", required=True)
    p.add_argument("--query", action="append")
    p.set_defaults(func=cmd_width)

    p = sub.add_parser("twisted-check", help="assemble and audit twisted data")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_twisted_check)

    p = sub.add_parser("repro-lemma-ex1",
                       help="reproduce the torus example end to end")
    p.add_argument("--eps", default="1/8")
    p.add_argument("--delta", default="1/256")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_repro_lemma_ex1)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
