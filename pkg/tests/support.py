"""Shared oracles and random generators for the test suite.

The oracles here deliberately take different algorithmic routes from the
library (plain F2 solves on bounded monomial windows, affine-set
enumeration) so that agreement is meaningful.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import lcm

from filtcones.novikov import INF, NovikovScalar
from filtcones.filtcx import (
    Chain, FilteredComplex, NEG_INF, action_level, chain_add, chain_scale,
)

Rat = Fraction


# ---------------------------------------------------------------------------
# brute-force boundary level via F2 solves on a monomial window
# ---------------------------------------------------------------------------

def _grid_q(cx: FilteredComplex, extra=()):
    q = 1
    for g in cx.generators:
        q = lcm(q, cx.action[g].denominator)
        for s in cx.diff[g].values():
            for e in s.exps:
                q = lcm(q, e.denominator)
    for e in extra:
        q = lcm(q, Fraction(e).denominator)
    return q


def _f2_solve(rows, rhs):
    """Solve the F2 system given as {var_index} row sets; rhs list of 0/1."""
    eqs = []
    for row, b in zip(rows, rhs):
        v = 0
        for j in row:
            v ^= 1 << j
        eqs.append((v, b))
    pivots = {}
    for v, b in eqs:
        while v:
            top = v.bit_length() - 1
            if top in pivots:
                pv, pb = pivots[top]
                v ^= pv
                b ^= pb
            else:
                pivots[top] = (v, b)
                v = 0
                b = 0
        if b:
            return False
    return True


def oracle_boundary_decision(c: Chain, cx: FilteredComplex, alpha: Fraction,
                             depth: int = 3) -> bool:
    """Is c = d b solvable with b of action <= alpha?  Window F2 solve."""
    q = _grid_q(cx, [alpha] + [e for s in c.values() for e in s.exps])
    step = Fraction(1, q)
    exps = [e for g in cx.generators for s in cx.diff[g].values() for e in s.exps]
    span = max(exps, default=Fraction(0)) + 1
    top = max([e for s in c.values() for e in s.exps], default=Fraction(0))
    top = max(top, max(cx.action.values()) - min(cx.action.values()))
    hi_exp = {g: top + span * (cx.dim + depth) for g in cx.generators}
    # variables: (g, s) with s in [A_g - alpha, hi_exp_g)
    var_index = {}
    for g in cx.generators:
        s = cx.action[g] - alpha
        while s < hi_exp[g]:
            var_index[(g, s)] = len(var_index)
            s += step
    # equations: coefficient of T^t in row i of (d b - c) = 0
    eq = {}

    def tap(i, t, var):
        eq.setdefault((i, t), [set(), 0])[0].add(var)

    for (g, s), vi in var_index.items():
        for i, scal in cx.diff[g].items():
            for e in scal.exps:
                tap(i, s + e, vi)
    rhs_terms = {}
    for i, scal in c.items():
        for e in scal.exps:
            rhs_terms[(i, e)] = rhs_terms.get((i, e), 0) ^ 1
    for key, b in rhs_terms.items():
        eq.setdefault(key, [set(), 0])[1] = 0
        eq[key][1] ^= b
    rows = [sorted(v[0]) for v in eq.values()]
    rhs = [v[1] for v in eq.values()]
    return _f2_solve(rows, rhs)


def oracle_boundary_level(c: Chain, cx: FilteredComplex):
    """Brute-force B(c;C): binary search over the exponent grid."""
    if not c:
        return NEG_INF
    q = _grid_q(cx, [e for s in c.values() for e in s.exps])
    step = Fraction(1, q)
    lo = action_level(c, cx) - step  # provably infeasible
    exps = [e for g in cx.generators for s in cx.diff[g].values() for e in s.exps]
    span = max(exps, default=Fraction(0)) + 1
    hi = max(cx.action.values()) + span * (cx.dim + 1)
    if not oracle_boundary_decision(c, cx, hi):
        return INF
    while hi - lo > step:
        mid = lo + ((hi - lo) / step // 2) * step
        if mid in (lo, hi):
            mid = lo + step
        if oracle_boundary_decision(c, cx, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# random complex generators
# ---------------------------------------------------------------------------

def nov(exps, cutoff=64):
    return NovikovScalar(exps, cutoff)


def random_complex(rng: random.Random, n=4, qden=2, cutoff=64,
                   with_split=False):
    """Random filtered complex built from bars conjugated by an
    action-compatible triangular automorphism, so d*d = 0 exactly."""
    gens = [f"g{i}" for i in range(n)]
    action = {g: Fraction(rng.randint(0, 2 * qden), qden) for g in gens}
    perm = list(range(n))
    rng.shuffle(perm)
    diff = {g: {} for g in gens}
    pairs = []
    i = 0
    while i + 1 < n:
        if rng.random() < 0.7:
            pairs.append((perm[i], perm[i + 1]))
            i += 2
        else:
            i += 1
    for (bi, xi) in pairs:
        b, x = gens[bi], gens[xi]
        drop = Fraction(rng.randint(0, 2 * qden), qden)
        e = action[x] - action[b] + drop  # A(T^e x) = A(b) - drop <= A(b)
        if e < 0:
            action[x] = action[b]
            e = drop
        diff[b] = {x: nov([e], cutoff)}
    cx = FilteredComplex(gens, action, diff, cutoff)
    # conjugate by id + N, N strictly triangular action-nonincreasing
    order = sorted(gens)
    mat = {g: {g: nov([0], cutoff)} for g in gens}
    inv = {g: {g: nov([0], cutoff)} for g in gens}
    nilp = {}
    for i, g in enumerate(order):
        for h in order[i + 1:]:
            if rng.random() < 0.4:
                e = action[h] - action[g] + Fraction(rng.randint(0, qden), qden)
                if e <= 0:
                    continue
                nilp.setdefault(g, {})[h] = nov([e], cutoff)
    # mat = id + N; inv = id + N + N^2 + ...
    def apply_n(ch):
        out = {}
        for g, s in ch.items():
            for h, t in nilp.get(g, {}).items():
                out = chain_add(out, {h: s * t})
        return out

    for g in gens:
        col = {g: nov([0], cutoff)}
        term = {g: nov([0], cutoff)}
        while True:
            term = apply_n(term)
            if not term:
                break
            col = chain_add(col, term)
        inv[g] = col
        mat[g] = chain_add({g: nov([0], cutoff)}, apply_n({g: nov([0], cutoff)}))

    def conj(dcol):
        # P d P^{-1}
        out = {g: {} for g in gens}
        for g in gens:
            img = {}
            for h, s in inv[g].items():
                img = chain_add(img, chain_scale(s, dcol[h]))
            img2 = {}
            for h, s in img.items():
                img2 = chain_add(img2, chain_scale(s, mat[h]))
            out[g] = img2
        return out

    new_diff = conj(diff)
    cx2 = FilteredComplex(gens, action, new_diff, cutoff)
    if not with_split:
        return cx2
    # split: d0 keeps the bars with drop 0 amount... use: d0 = bars part
    # conjugated, d1 = remainder scaled deeper.  Simpler split: d0 = terms of
    # minimal valuation per column where that valuation equals the action
    # drop 0; here we instead return the pre-conjugation split.
    return cx2, diff


def random_chain(rng: random.Random, cx: FilteredComplex, density=0.7,
                 qden=2, nterms=2):
    ch = {}
    for g in cx.generators:
        if rng.random() < density:
            exps = {Fraction(rng.randint(0, 4 * qden), qden)
                    for _ in range(rng.randint(1, nterms))}
            s = NovikovScalar(exps, cx.cutoff)
            if not s.is_zero():
                ch[g] = s
    return ch


def random_boundary(rng: random.Random, cx: FilteredComplex, qden=2):
    b = random_chain(rng, cx, qden=qden)
    return cx.d(b), b


# ---------------------------------------------------------------------------
# weakly filtered category fixtures
# ---------------------------------------------------------------------------

def _fc(gens, action, diff, cutoff=64):
    return FilteredComplex(gens, action, diff, cutoff, check=False)


def unital_dg_category(s=Fraction(1, 2), cutoff=64, cap=4):
    """One object, strictly unital: e plus an acyclic pair a -> T^s b."""
    from filtcones.wfainf import Discrepancy, WFCategory
    homs = {("X", "X"): _fc(
        ["e", "a", "b"], {"e": 0, "a": 0, "b": 0},
        {"e": {}, "a": {"b": nov([s], cutoff)}, "b": {}}, cutoff)}
    one = nov([0], cutoff)
    mu2 = {}
    for g in ("e", "a", "b"):
        mu2[("e", g)] = {g: one}
        if g != "e":
            mu2[(g, "e")] = {g: one}
    mu2[("e", "e")] = {"e": one}
    cat = WFCategory(["X"], homs, {2: mu2}, Discrepancy([0] * cap, "category"),
                     cap=cap, units={"X": {"e": one}}, unit_bound=0)
    return cat


def perturbed_unit_category(t=Fraction(1), s=Fraction(1, 2), cutoff=64, cap=4):
    """mu_2(e, e) = e + mu_1(c) with the witness c at action s."""
    from filtcones.wfainf import Discrepancy, WFCategory
    one = nov([0], cutoff)
    unit_sq = NovikovScalar([0, t], cutoff)  # 1 + T^t
    homs = {("X", "X"): _fc(
        ["e", "c"], {"e": 0, "c": s},
        {"e": {}, "c": {"e": nov([t], cutoff)}}, cutoff)}
    # A(mu_1 c) = -t <= A(c) = s as long as t >= -s
    mu2 = {
        ("e", "e"): {"e": unit_sq},
        ("e", "c"): {"c": unit_sq},
        ("c", "e"): {"c": unit_sq},
    }
    cat = WFCategory(["X"], homs, {2: mu2}, Discrepancy([0] * cap, "category"),
                     cap=cap, units={"X": {"e": one}}, unit_bound=0)
    return cat


def chain_category(weights=None, cutoff=64, cap=5, objects=3):
    """dg category on X, L0..L_{objects-1} with composable monomial arrows.

    hom(X, Li) has one generator x_i; hom(L_j, L_i) for i < j has one
    generator m_{j}{i}.  All differentials vanish; mu_2 composes with
    exponent weights chosen associatively (additive in endpoints).
    """
    from filtcones.wfainf import Discrepancy, WFCategory
    if weights is None:
        weights = {i: Fraction(i, 2) for i in range(objects + 1)}
    objs = ["X"] + [f"L{i}" for i in range(objects)]
    homs = {}
    gen_of = {}
    for i in range(objects):
        g = f"x{i}"
        homs[("X", f"L{i}")] = _fc([g], {g: 0}, {g: {}}, cutoff)
        gen_of[("X", f"L{i}")] = g
    for j in range(objects):
        for i in range(j):
            g = f"m{j}{i}"
            homs[(f"L{j}", f"L{i}")] = _fc([g], {g: 0}, {g: {}}, cutoff)
            gen_of[(f"L{j}", f"L{i}")] = g
    # assign omega to arrows; mu_2 exponent omega(ab)+omega(bc)-omega(ac)
    # is a coboundary, hence associative for any choice
    omega = {}
    for i in range(objects):
        omega[("X", f"L{i}")] = weights[i]
    for j in range(objects):
        for i in range(j):
            omega[(f"L{j}", f"L{i}")] = weights[j] - weights[i]
    mu2 = {}
    worst = Fraction(0)
    for (a, b), g1 in gen_of.items():
        for (b2, c), g2 in gen_of.items():
            if b2 != b:
                continue
            tgt = gen_of.get((a, c))
            if tgt is None:
                continue
            e = omega[(a, b)] + omega[(b, c)] - omega[(a, c)]
            worst = max(worst, -e, Fraction(0))
            mu2[(g1, g2)] = {tgt: nov([e], cutoff)}
    cat = WFCategory(objs, homs, {2: mu2},
                     Discrepancy([0] + [worst] * (cap - 1), "category"),
                     cap=cap)
    return cat


def strict_dg_category(nobj=3, sigma=Fraction(1, 2), cutoff=64, cap=None):
    """Strictly unital dg category on X, L0..L_{nobj-1}.

    hom(A, B) for A != B has generators one_AB, eps_AB with
    d(eps) = T^sigma one; endomorphisms are spanned by strict units.
    Products follow the epsilon-algebra rule (eps * eps = 0), which is
    associative and Leibniz-compatible in characteristic 2.
    """
    from filtcones.wfainf import Discrepancy, WFCategory
    if cap is None:
        cap = nobj + 2
    objs = ["X"] + [f"L{i}" for i in range(nobj)]
    arrows = [("X", f"L{i}") for i in range(nobj)]
    arrows += [(f"L{j}", f"L{i}") for j in range(nobj) for i in range(j)]
    homs = {}
    one_name = {}
    eps_name = {}
    for (a, b) in arrows:
        u, w = f"one[{a},{b}]", f"eps[{a},{b}]"
        one_name[(a, b)], eps_name[(a, b)] = u, w
        homs[(a, b)] = _fc([u, w], {u: 0, w: 0},
                           {u: {}, w: {u: nov([sigma], cutoff)}}, cutoff)
    units = {}
    for o in objs:
        g = f"id[{o}]"
        homs[(o, o)] = _fc([g], {g: 0}, {g: {}}, cutoff)
        units[o] = {g: nov([0], cutoff)}
        one_name[(o, o)] = g
    mu2 = {}
    one = nov([0], cutoff)
    pairs = list(one_name)
    comp = [(a, b, c) for (a, b) in pairs for (b2, c) in pairs
            if b2 == b and (a, c) in one_name]
    for (a, b, c) in comp:
        u_ab = one_name[(a, b)]
        u_bc = one_name[(b, c)]
        u_ac = one_name[(a, c)]
        mu2[(u_ab, u_bc)] = {u_ac: one}
        e_ab = eps_name.get((a, b))
        e_bc = eps_name.get((b, c))
        e_ac = eps_name.get((a, c))
        if e_ac is not None:
            if e_ab is not None:
                mu2[(e_ab, u_bc)] = {e_ac: one}
            if e_bc is not None:
                mu2[(u_ab, e_bc)] = {e_ac: one}
        if e_ab is not None and e_bc is not None:
            pass  # eps * eps = 0
    cat = WFCategory(objs, homs, {2: mu2},
                     Discrepancy([0] * cap, "category"), cap=cap,
                     units=units, unit_bound=0)
    return cat


def random_cycle_in(rng, cx, qden=2, allow_zero=False):
    """Random Lambda-combination of a cycle basis with monomial weights."""
    from filtcones.filtcx import cycle_basis, chain_add, chain_scale
    zs = cycle_basis(cx)
    out = {}
    for z in zs:
        if rng.random() < 0.6:
            lam = nov([Fraction(rng.randint(0, 4), qden)], cx.cutoff)
            out = chain_add(out, chain_scale(lam, z))
    if not out and zs and not allow_zero:
        out = dict(zs[0])
    return out


def random_split_complex(rng: random.Random, n=6, qden=2, cutoff=64):
    """Complex with a split differential d = d0 + d1: d0 collects the
    zero-drop bars, d1 the strictly dropping ones (disjoint supports),
    both conjugated by the same action-compatible automorphism."""
    gens = [f"g{i}" for i in range(n)]
    action = {g: Fraction(rng.randint(0, 2 * qden), qden) for g in gens}
    perm = list(range(n))
    rng.shuffle(perm)
    d0 = {g: {} for g in gens}
    d1 = {g: {} for g in gens}
    i = 0
    while i + 1 < n:
        r = rng.random()
        if r < 0.35:
            b, x = gens[perm[i]], gens[perm[i + 1]]
            action[x] = action[b]
            d0[b] = {x: nov([0], cutoff)}
            i += 2
        elif r < 0.75:
            b, x = gens[perm[i]], gens[perm[i + 1]]
            drop = Fraction(rng.randint(1, 2 * qden), qden)
            e = action[x] - action[b] + drop
            if e < 0:
                action[x] = action[b]
                e = drop
            d1[b] = {x: nov([e], cutoff)}
            i += 2
        else:
            i += 1
    # conjugate by id + N with N strictly triangular, action-nonincreasing
    order = sorted(gens)
    nilp = {}
    for i, g in enumerate(order):
        for h in order[i + 1:]:
            if rng.random() < 0.35:
                e = action[h] - action[g] + Fraction(rng.randint(0, qden), qden)
                if e <= 0:
                    continue
                nilp.setdefault(g, {})[h] = nov([e], cutoff)

    def apply_n(ch):
        out = {}
        for g, s in ch.items():
            for h, t in nilp.get(g, {}).items():
                out = chain_add(out, {h: s * t})
        return out

    inv = {}
    mat = {}
    for g in gens:
        col = {g: nov([0], cutoff)}
        term = {g: nov([0], cutoff)}
        while True:
            term = apply_n(term)
            if not term:
                break
            col = chain_add(col, term)
        inv[g] = col
        mat[g] = chain_add({g: nov([0], cutoff)},
                           apply_n({g: nov([0], cutoff)}))

    def conj(dcol):
        out = {}
        for g in gens:
            img = {}
            for h, s in inv[g].items():
                img = chain_add(img, chain_scale(s, dcol[h]))
            img2 = {}
            for h, s in img.items():
                img2 = chain_add(img2, chain_scale(s, mat[h]))
            out[g] = img2
        return out

    d0c = conj(d0)
    d1c = conj(d1)
    total = {g: chain_add(d0c[g], d1c[g]) for g in gens}
    cx = FilteredComplex(gens, action, total, cutoff)
    return cx, d0c, d1c


def strict_right_mult_hom(cat, m_src, m_tgt, c):
    """Module hom Yoneda(L_j) -> K given by b -> mu_2^K(b, c) (strict dg).

    Uses the target module's mu_2 so cones with arity-2 correction terms
    are handled; in the strict dg case all higher lambda components
    vanish, so the single component suffices.
    """
    from filtcones.wfainf import PreModHom
    from filtcones.filtcx import chain_add, chain_scale
    comps = {1: {}}
    for g, x in m_src.gen_value.items():
        if x not in m_tgt.values:
            continue
        img = {}
        for gc, s in c.items():
            img = chain_add(img, chain_scale(s, m_tgt.mu_gens((g, gc))))
        if img:
            comps[1][(g,)] = img
    f = PreModHom(m_src, m_tgt, comps, 0)
    meas = [s for s in f.measured_shifts() if s > -(10**9)]
    f.shift = max(meas, default=Fraction(0))
    return f
