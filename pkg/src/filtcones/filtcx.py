"""Finite filtered chain complexes over the Novikov field.

A complex carries finitely many generators, a rational action value per
generator and a square differential matrix over Novikov scalars.  The
filtration is the mixed one: A(sum l_j e_j) = max(-v(l_j) + A(e_j)).

The quantitative invariants (boundary level/depth, homotopical variants,
delta-robust subspaces) are computed exactly by a persistence-style
column reduction over the exponent grid, and independently checkable by
the brute-force oracles in the test suite.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .novikov import INF, NovikovScalar, rat, parse_scalar

NEG_INF = -INF

Chain = Dict[str, NovikovScalar]

_FIELD_CUTOFF = Fraction(10**9)


class FiltError(ValueError):
    pass


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------

def chain_add(x: Chain, y: Chain) -> Chain:
    out = dict(x)
    for g, s in y.items():
        t = out.get(g)
        s2 = s if t is None else t + s
        if s2.is_zero():
            out.pop(g, None)
        else:
            out[g] = s2
    return out


def chain_scale(s: NovikovScalar, x: Chain) -> Chain:
    out = {}
    for g, t in x.items():
        u = s * t
        if not u.is_zero():
            out[g] = u
    return out


def chain_shift(e, x: Chain) -> Chain:
    return {g: s.shift(e) for g, s in x.items() if not s.shift(e).is_zero()}


def chain_eq(x: Chain, y: Chain) -> bool:
    return not chain_add(x, y)


class FilteredComplex:
    """Generators with rational actions plus a differential over Novikov scalars.

    ``diff[j]`` is the chain d(e_j).  Standing assumptions verified at
    construction: d*d = 0 (below cutoff) and A(d e_j) <= A(e_j).
    """

    def __init__(self, generators: Sequence[str], action: Dict[str, object],
                 diff: Dict[str, Chain], cutoff=64, check: bool = True):
        self.generators = tuple(generators)
        if len(set(self.generators)) != len(self.generators):
            raise FiltError("duplicate generator names")
        self.cutoff = rat(cutoff)
        self.action = {g: rat(action[g]) for g in self.generators}
        self.diff: Dict[str, Chain] = {}
        for g in self.generators:
            col = diff.get(g, {})
            self.diff[g] = {h: s for h, s in col.items() if not s.is_zero()}
            for h in self.diff[g]:
                if h not in self.action:
                    raise FiltError(f"differential of {g} hits unknown generator {h}")
        self._grid = None
        if check:
            self._validate()

    def _validate(self):
        for g in self.generators:
            dg = self.diff[g]
            if action_level(dg, self) > self.action[g]:
                raise FiltError(f"action increases along d({g})")
            if not chain_eq(self.d(dg), {}):
                raise FiltError(f"d^2 != 0 at generator {g}")

    @property
    def dim(self) -> int:
        return len(self.generators)

    def zero(self) -> NovikovScalar:
        return NovikovScalar.zero(self.cutoff)

    def unit(self) -> NovikovScalar:
        return NovikovScalar.one(self.cutoff)

    def basis_chain(self, g: str, exp=0) -> Chain:
        s = NovikovScalar.monomial(exp, self.cutoff)
        return {g: s}

    def d(self, x: Chain) -> Chain:
        out: Chain = {}
        for g, s in x.items():
            out = chain_add(out, chain_scale(s, self.diff.get(g, {})))
        return out

    def is_cycle(self, x: Chain) -> bool:
        return not self.d(x)

    def grid(self, chains: Sequence[Chain] = ()) -> "_GridReduction":
        """Grid reduction able to express the given query chains."""
        from math import lcm
        q = _denominators(self)
        hi_need = None
        lo_need = None
        for ch in chains:
            for g, s in ch.items():
                for e in s.exps:
                    q = lcm(q, e.denominator)
                    act = self.action[g] - e
                    hi_need = act if hi_need is None else max(hi_need, act)
                    lo_need = act if lo_need is None else min(lo_need, act)
        g = self._grid
        if (g is not None and g.step.denominator % q == 0
                and (hi_need is None or g.hi >= hi_need + 1)
                and (lo_need is None or g.lo <= lo_need)):
            return g
        self._grid = _GridReduction(self, q=q, hi_need=hi_need, lo_need=lo_need)
        return self._grid

    def shift_actions(self, nu) -> "FilteredComplex":
        nu = rat(nu)
        return FilteredComplex(
            self.generators,
            {g: a + nu for g, a in self.action.items()},
            self.diff, self.cutoff, check=False)

    def action_floor(self) -> Fraction:
        return min(self.action.values()) if self.action else Fraction(0)

    def __repr__(self):
        return f"FilteredComplex({len(self.generators)} generators)"


def action_level(x: Chain, cx: FilteredComplex) -> Fraction:
    """A(sum l_j e_j) = max(-v(l_j) + A(e_j)); -infinity for the zero chain."""
    if not x:
        return NEG_INF
    return max(cx.action[g] - s.valuation() for g, s in x.items())


# ---------------------------------------------------------------------------
# filtered maps
# ---------------------------------------------------------------------------

class FilteredMap:
    """Linear map between filtered complexes with a declared action shift."""

    def __init__(self, domain: FilteredComplex, codomain: FilteredComplex,
                 matrix: Dict[str, Chain], declared_shift=0):
        self.domain = domain
        self.codomain = codomain
        self.matrix = {g: {h: s for h, s in matrix.get(g, {}).items()
                           if not s.is_zero()}
                       for g in domain.generators}
        self.declared_shift = rat(declared_shift)

    def apply(self, x: Chain) -> Chain:
        out: Chain = {}
        for g, s in x.items():
            out = chain_add(out, chain_scale(s, self.matrix.get(g, {})))
        return out

    def measured_shift(self) -> Fraction:
        """Exact maximal action shift over the generators."""
        best = NEG_INF
        for g in self.domain.generators:
            img = self.matrix.get(g, {})
            if img:
                best = max(best, action_level(img, self.codomain)
                           - self.domain.action[g])
        return best

    def is_strictly_filtered(self) -> bool:
        return self.measured_shift() <= 0

    def is_chain_map(self) -> bool:
        for g in self.domain.generators:
            lhs = self.apply(self.domain.diff[g])
            rhs = self.codomain.d(self.matrix.get(g, {}))
            if not chain_eq(lhs, rhs):
                return False
        return True

    def compose(self, other: "FilteredMap") -> "FilteredMap":
        """self after other (other first)."""
        if other.codomain is not self.domain:
            if other.codomain.generators != self.domain.generators:
                raise FiltError("composition domain mismatch")
        mat = {g: self.apply(other.matrix.get(g, {}))
               for g in other.domain.generators}
        return FilteredMap(other.domain, self.codomain, mat,
                           self.declared_shift + other.declared_shift)

    def add(self, other: "FilteredMap") -> "FilteredMap":
        mat = {g: chain_add(self.matrix.get(g, {}), other.matrix.get(g, {}))
               for g in self.domain.generators}
        return FilteredMap(self.domain, self.codomain, mat,
                           max(self.declared_shift, other.declared_shift))

    @staticmethod
    def identity(cx: FilteredComplex) -> "FilteredMap":
        return FilteredMap(cx, cx, {g: cx.basis_chain(g) for g in cx.generators}, 0)

    @staticmethod
    def zero_map(dom: FilteredComplex, cod: FilteredComplex) -> "FilteredMap":
        return FilteredMap(dom, cod, {}, 0)


def action_drop(f: FilteredMap) -> Fraction:
    """sup{r >= 0 : f(C^<=a) subset D^<=a-r}; +infinity for the zero map."""
    shift = f.measured_shift()
    if shift == NEG_INF:
        return INF
    if shift > 0:
        raise FiltError("action_drop requires a strictly filtered map")
    return -shift


def delta_d(cx: FilteredComplex) -> Fraction:
    return action_drop(FilteredMap(cx, cx, dict(cx.diff), 0))


# ---------------------------------------------------------------------------
# exact linear algebra over the Novikov field (fraction-free)
# ---------------------------------------------------------------------------

def _big(s: NovikovScalar) -> NovikovScalar:
    return NovikovScalar(s.exps, _FIELD_CUTOFF)


def _chain_vec(x: Chain, gens: Sequence[str]) -> List[NovikovScalar]:
    z = NovikovScalar.zero(_FIELD_CUTOFF)
    return [_big(x[g]) if g in x else z for g in gens]


def _vec_chain(v: Sequence[NovikovScalar], gens: Sequence[str], cutoff) -> Chain:
    out = {}
    for g, s in zip(gens, v):
        if not s.is_zero():
            out[g] = s.rebase(cutoff)
    return out


def field_rank(columns: List[List[NovikovScalar]]) -> int:
    """Rank over the Novikov field via fraction-free elimination."""
    cols = [list(c) for c in columns if any(c)]
    rank = 0
    used_rows: set = set()
    for _ in range(len(cols)):
        pivot = None
        for ci, col in enumerate(cols):
            for ri, entry in enumerate(col):
                if ri not in used_rows and not entry.is_zero():
                    pivot = (ci, ri)
                    break
            if pivot:
                break
        if pivot is None:
            break
        ci, ri = pivot
        pcol = cols.pop(ci)
        pval = pcol[ri]
        for col in cols:
            e = col[ri]
            if not e.is_zero():
                for k in range(len(col)):
                    col[k] = pval * col[k] + e * pcol[k]
        used_rows.add(ri)
        rank += 1
    return rank


def field_in_span(columns: List[List[NovikovScalar]],
                  target: List[NovikovScalar]) -> bool:
    if not any(target):
        return True
    r = field_rank(columns)
    return field_rank(columns + [target]) == r


def field_kernel(columns: List[List[NovikovScalar]]) -> List[List[NovikovScalar]]:
    """Kernel basis of the column family, as coefficient vectors."""
    ncols = len(columns)
    nrows = len(columns[0]) if columns else 0
    one = NovikovScalar.one(_FIELD_CUTOFF)
    zero = NovikovScalar.zero(_FIELD_CUTOFF)
    # augment each column with its coefficient bookkeeping
    work = [list(col) + [one if i == j else zero for j in range(ncols)]
            for i, col in enumerate(columns)]
    used_rows: set = set()
    reduced: List[List[NovikovScalar]] = []
    kernel: List[List[NovikovScalar]] = []
    for col in work:
        # eliminate against previous pivots
        for pcol, pri in reduced:
            e = col[pri]
            if not e.is_zero():
                pval = pcol[pri]
                for k in range(len(col)):
                    col[k] = pval * col[k] + e * pcol[k]
        ri = next((i for i in range(nrows)
                   if i not in used_rows and not col[i].is_zero()), None)
        if ri is None:
            if any(not col[i].is_zero() for i in range(nrows)):
                raise FiltError("elimination failed to clear column")
            kernel.append(col[nrows:])
        else:
            used_rows.add(ri)
            reduced.append((col, ri))
    return kernel


# ---------------------------------------------------------------------------
# grid reduction engine
# ---------------------------------------------------------------------------

def _denominators(cx: FilteredComplex) -> int:
    from math import lcm
    q = 1
    for g in cx.generators:
        q = lcm(q, cx.action[g].denominator)
        for s in cx.diff[g].values():
            for e in s.exps:
                q = lcm(q, e.denominator)
    return q


class _GridReduction:
    """Persistence-style reduction of a complex over the exponent grid.

    Monomials T^s e_j with action A_j - s inside a finite window form an
    F2 basis; columns d(T^s e_j) are reduced in order of increasing
    action ("birth").  Boundary levels are read off by greedy reduction
    against the reduced columns.
    """

    def __init__(self, cx: FilteredComplex, q: Optional[int] = None,
                 hi_need=None, lo_need=None):
        self.cx = cx
        if q is None:
            q = _denominators(cx)
        self.step = Fraction(1, q)
        exps = [e for g in cx.generators for s in cx.diff[g].values()
                for e in s.exps]
        span = max(exps) if exps else Fraction(0)
        acts = [cx.action[g] for g in cx.generators] or [Fraction(0)]
        pad = (span + 1) * (cx.dim + 2)
        self.lo = min(acts) - pad
        self.hi = max(acts) + span + 1
        if hi_need is not None:
            self.hi = max(self.hi, hi_need + 1)
        if lo_need is not None:
            self.lo = min(self.lo, lo_need - pad)
        # align the window to the step lattice
        self.lo = (self.lo / self.step).__floor__() * self.step
        self.hi = -((-self.hi / self.step).__floor__()) * self.step
        # monomial basis, sorted by action then by generator
        self.monomials: List[Tuple[Fraction, int]] = []
        self.gen_index = {g: i for i, g in enumerate(cx.generators)}
        for gi, g in enumerate(cx.generators):
            a = cx.action[g]
            s = a - self.hi
            # want action a - s in [lo, hi]; s in [a - hi, a - lo]
            nsteps = int((self.hi - self.lo) / self.step)
            for k in range(nsteps + 1):
                self.monomials.append((a - (s + k * self.step), gi))
        self.monomials.sort(key=lambda t: (t[0], t[1]))
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self._reduce()

    def _vec_of_chain(self, x: Chain, strict: bool = False) -> Optional[int]:
        """Bit-vector of a chain in the monomial basis.

        Monomials below the window are truncated unless ``strict``; above
        the window the result is None.
        """
        v = 0
        for g, s in x.items():
            gi = self.gen_index[g]
            a = self.cx.action[g]
            for e in s.exps:
                act = a - e
                if act < self.lo:
                    if strict:
                        return None
                    continue
                key = (act, gi)
                if key not in self.index:
                    return None
                v |= 1 << self.index[key]
        return v

    def _reduce(self):
        cx = self.cx
        cols = []  # (birth_action, bitvec of d(monomial))
        for act, gi in self.monomials:
            g = cx.generators[gi]
            s = cx.action[g] - act
            dg = chain_shift(s, cx.diff[g])
            v = self._vec_of_chain(dg)
            if v:
                cols.append((act, v))
        cols.sort(key=lambda t: t[0])
        self.low_to_col: Dict[int, Tuple[int, Fraction]] = {}
        self.rcols: List[Tuple[Fraction, int]] = []
        for birth, v in cols:
            while v:
                low = v.bit_length() - 1
                hit = self.low_to_col.get(low)
                if hit is None:
                    break
                v ^= self.rcols[hit[0]][1]
            if v:
                idx = len(self.rcols)
                self.rcols.append((birth, v))
                self.low_to_col[v.bit_length() - 1] = (idx, birth)

    def reduce_vector(self, v: int):
        """Reduce v against the R-columns; return (residual, used column set)."""
        used = 0
        while v:
            low = v.bit_length() - 1
            hit = self.low_to_col.get(low)
            if hit is None:
                return v, used
            idx, _ = hit
            v ^= self.rcols[idx][1]
            used |= 1 << idx
        return 0, used

    def boundary_level(self, x: Chain) -> Fraction:
        if not x:
            return NEG_INF
        v = self._vec_of_chain(x)
        if v is None:
            raise FiltError("chain exceeds grid window")
        res, used = self.reduce_vector(v)
        if res:
            return INF
        best = NEG_INF
        while used:
            low = used.bit_length() - 1
            best = max(best, self.rcols[low][0])
            used ^= 1 << low
        return best

    def min_beta_over_span(self, vectors: List[Chain]) -> Fraction:
        """min over nonzero u in the Lambda-span of ``vectors`` of B(u)-A(u).

        All vectors must be boundaries.  Returns +infinity for the zero
        span.  Works on the monomial window: reduce the shifted family to
        distinct action peaks, then reduce the boundary expressions to
        distinct top births; the minimum is attained on the resulting
        double-orthogonal family.
        """
        fam: List[Tuple[int, int]] = []  # (monomial bitvec, expression bitvec)
        peak_owner: Dict[int, int] = {}
        raw = []
        for u in vectors:
            if not u:
                continue
            a = action_level(u, self.cx)
            top = self.hi - 1
            s = a - top  # scale so the peak sits near the top
            hits = 0
            while True:
                shifted = chain_shift(s, u)
                v = self._vec_of_chain(shifted, strict=True)
                if v is None or v == 0:
                    break
                res, _ = self.reduce_vector(v)
                if not res:
                    raw.append(v)  # copies too close to the top cannot reach
                    hits += 1      # their primitives and are dropped
                s += self.step
            if hits == 0:
                raise FiltError("min_beta_over_span: vector is not a boundary "
                                "within the grid window")
        # distinct action peaks
        for v in sorted(raw, key=lambda v: v.bit_length(), reverse=True):
            while v:
                peak = v.bit_length() - 1
                j = peak_owner.get(peak)
                if j is None:
                    break
                v ^= fam[j][0]
            if v:
                res, used = self.reduce_vector(v)
                if res:
                    continue
                peak_owner[v.bit_length() - 1] = len(fam)
                fam.append((v, used))
        if not fam:
            return INF
        # distinct top births in the expressions, processing by peak ascending
        fam.sort(key=lambda t: t[0].bit_length())
        top_owner: Dict[int, int] = {}
        final: List[Tuple[int, int]] = []
        for v, expr in fam:
            while expr:
                top = expr.bit_length() - 1
                j = top_owner.get(top)
                if j is None:
                    break
                pv, pe = final[j]
                v ^= pv
                expr ^= pe
            if not expr:
                continue  # boundary expression vanished: element of lower span
            top_owner[expr.bit_length() - 1] = len(final)
            final.append((v, expr))
        best = INF
        best_vec = None
        for v, expr in final:
            act = self.monomials[v.bit_length() - 1][0]
            b = self.rcols[expr.bit_length() - 1][0]
            if b - act < best:
                best = b - act
                best_vec = v
        self.last_witness = None
        if best_vec is not None:
            ch: Chain = {}
            v = best_vec
            while v:
                i = v.bit_length() - 1
                v ^= 1 << i
                act, gi = self.monomials[i]
                g = self.cx.generators[gi]
                mono = NovikovScalar.monomial(self.cx.action[g] - act, self.cx.cutoff)
                ch = chain_add(ch, {g: mono})
            self.last_witness = ch
        return best


# ---------------------------------------------------------------------------
# boundary level / depth operations
# ---------------------------------------------------------------------------

def boundary_level(c: Chain, cx: FilteredComplex) -> Fraction:
    """inf{alpha : c = d b for some b in C^<=alpha}; +inf if not a boundary."""
    if not c:
        return NEG_INF
    if not cx.is_cycle(c):
        raise FiltError("boundary_level requires a cycle")
    return cx.grid([c]).boundary_level(c)


def boundary_depth_elem(c: Chain, cx: FilteredComplex) -> Fraction:
    """beta(c;C) = B(c;C) - A(c;C) for a boundary c."""
    b = boundary_level(c, cx)
    if b >= INF:
        raise FiltError("boundary_depth_elem requires a boundary")
    if b == NEG_INF:
        return Fraction(0)
    return b - action_level(c, cx)


def cycle_basis(cx: FilteredComplex) -> List[Chain]:
    cols = [_chain_vec(cx.diff[g], cx.generators) for g in cx.generators]
    coeffs = field_kernel(cols)
    out = []
    for v in coeffs:
        ch: Chain = {}
        for g, s in zip(cx.generators, v):
            if not s.is_zero():
                ch[g] = s.rebase(cx.cutoff)
        if ch:
            out.append(ch)
    return out


def image_basis(cx: FilteredComplex) -> List[Chain]:
    cols = []
    for g in cx.generators:
        if cx.diff[g]:
            cols.append(cx.diff[g])
    # prune to an independent family over the field
    out: List[Chain] = []
    vecs: List[List[NovikovScalar]] = []
    for ch in cols:
        v = _chain_vec(ch, cx.generators)
        if not field_in_span(vecs, v):
            out.append(ch)
            vecs.append(v)
    return out


def homology_rank(cx: FilteredComplex) -> int:
    cols = [_chain_vec(cx.diff[g], cx.generators) for g in cx.generators]
    r = field_rank(cols)
    return cx.dim - 2 * r


def boundary_depth_map(phi: FilteredMap) -> Fraction:
    """Minimal r such that every cycle x with phi(x) a boundary bounds
    within codomain level A(x)+r."""
    if not phi.is_chain_map():
        raise FiltError("boundary_depth_map requires a chain map")
    if phi.measured_shift() > 0:
        raise FiltError("boundary_depth_map requires a strictly filtered map")
    C, D = phi.domain, phi.codomain
    zs = cycle_basis(C)
    if not zs:
        return Fraction(0)
    img_cols = [_chain_vec(D.diff[g], D.generators) for g in D.generators]
    # subspace of cycles landing in the boundaries of D
    sub: List[Chain] = []
    phi_vecs = [_chain_vec(phi.apply(z), D.generators) for z in zs]
    ok = [field_in_span(img_cols, v) for v in phi_vecs]
    if all(ok):
        sub = zs
    else:
        # combinations of cycle basis elements whose image is a boundary
        red_cols = [_chain_vec(ch, D.generators) for ch in image_basis(D)]
        quot = _quotient_kernel(phi_vecs, red_cols)
        for coeff in quot:
            ch: Chain = {}
            for t, z in zip(coeff, zs):
                if not t.is_zero():
                    ch = chain_add(ch, chain_scale(t.rebase(C.cutoff), z))
            if ch:
                sub.append(ch)
    best = Fraction(0)
    # orthogonalize the subspace and bound via basis elements
    for z in _orthogonalize(sub, C):
        b = boundary_level(phi.apply(z), D)
        if b == NEG_INF:
            continue
        best = max(best, b - action_level(z, C))
    return best


def _quotient_kernel(cols: List[List[NovikovScalar]],
                     modulo: List[List[NovikovScalar]]):
    """Coefficient vectors t with sum t_i cols_i in span(modulo)."""
    n = len(cols)
    m = len(modulo)
    big = [list(c) for c in cols] + [list(c) for c in modulo]
    ker = field_kernel(big)
    # project kernel coefficients to the first block
    out = []
    vecs: List[List[NovikovScalar]] = []
    for k in ker:
        head = k[:n]
        if any(not s.is_zero() for s in head) and not field_in_span(vecs, head):
            out.append(head)
            vecs.append(head)
    return out


def _orthogonalize(vectors: List[Chain], cx: FilteredComplex) -> List[Chain]:
    """Action-orthogonal family spanning the same subspace.

    Greedy peak-slice reduction: repeatedly cancel the top slice of each
    vector against the kept ones; survivors have independent peak slices,
    so the action of any combination is the max of the component actions.
    """
    kept: List[Chain] = []
    for v in vectors:
        v = dict(v)
        guard = 0
        while v:
            a = action_level(v, cx)
            if a <= cx.action_floor() - (cx.cutoff / 2):
                v = {}
                break
            slice_v = _peak_slice(v, a, cx)
            basis = [_peak_slice(chain_shift(a2 - a, k), a2, cx)
                     for k, a2 in ((k, action_level(k, cx)) for k in kept)]
            combo = _f2_express(slice_v, basis)
            if combo is None:
                break
            for j in combo:
                k = kept[j]
                v = chain_add(v, chain_shift(action_level(k, cx) - a, k))
            guard += 1
            if guard > 10000:
                raise FiltError("orthogonalization failed to terminate")
        if v:
            kept.append(v)
    return kept


def _peak_slice(v: Chain, a, cx: FilteredComplex):
    out = set()
    for g, s in v.items():
        e = cx.action[g] - a
        if e in s.exps:
            out.add(g)
    return out


def _f2_express(target: set, basis: List[set]) -> Optional[List[int]]:
    """Express a set (F2 vector over generator names) in terms of basis sets."""
    piv: Dict[str, int] = {}
    reduced: List[Tuple[set, List[int]]] = []
    for i, b in enumerate(basis):
        cur, expr = set(b), [i]
        while cur:
            top = max(cur)
            j = piv.get(top)
            if j is None:
                break
            cur = cur ^ reduced[j][0]
            expr = expr + reduced[j][1]
        if cur:
            piv[max(cur)] = len(reduced)
            reduced.append((cur, expr))
    cur, expr = set(target), []
    while cur:
        top = max(cur)
        j = piv.get(top)
        if j is None:
            return None
        cur = cur ^ reduced[j][0]
        expr = expr + reduced[j][1]
    out = []
    for i in expr:
        if i in out:
            out.remove(i)
        else:
            out.append(i)
    return out


# ---------------------------------------------------------------------------
# hom complexes and homotopical boundary level
# ---------------------------------------------------------------------------

def hom_complex(C: FilteredComplex, D: FilteredComplex) -> FilteredComplex:
    """hom(C, D) with generators E[i<-j], action A_D(i) - A_C(j) and
    differential f -> d_D f + f d_C (characteristic 2)."""
    gens = []
    action = {}
    for i in D.generators:
        for j in C.generators:
            g = f"E[{i}<-{j}]"
            gens.append(g)
            action[g] = D.action[i] - C.action[j]
    diff: Dict[str, Chain] = {}
    for i in D.generators:
        for j in C.generators:
            g = f"E[{i}<-{j}]"
            col: Chain = {}
            for k, s in D.diff[i].items():
                col = chain_add(col, {f"E[{k}<-{j}]": s})
            for k in C.generators:
                s = C.diff[k].get(j)
                if s is not None:
                    col = chain_add(col, {f"E[{i}<-{k}]": s})
            diff[g] = col
    return FilteredComplex(gens, action, diff, C.cutoff, check=False)


def map_to_chain(f: FilteredMap) -> Chain:
    out: Chain = {}
    for j, col in f.matrix.items():
        for i, s in col.items():
            out[f"E[{i}<-{j}]"] = s
    return out


def chain_to_map(ch: Chain, C: FilteredComplex, D: FilteredComplex,
                 shift=0) -> FilteredMap:
    mat: Dict[str, Chain] = {}
    for g, s in ch.items():
        body = g[2:-1]
        i, j = body.split("<-")
        mat.setdefault(j, {})[i] = s
    return FilteredMap(C, D, mat, shift)


def homotopical_boundary_level(psi: FilteredMap) -> Fraction:
    """B_h(psi): infimal action shift of a null-homotopy; +inf if none."""
    H = hom_complex(psi.domain, psi.codomain)
    ch = map_to_chain(psi)
    if not ch:
        return NEG_INF
    if not H.is_cycle(ch):
        raise FiltError("homotopical boundary level requires a chain map")
    return boundary_level(ch, H)


def homotopical_boundary_depth(psi: FilteredMap) -> Fraction:
    H = hom_complex(psi.domain, psi.codomain)
    ch = map_to_chain(psi)
    b = homotopical_boundary_level(psi)
    if b >= INF:
        raise FiltError("map is not null-homotopic")
    if b == NEG_INF:
        return Fraction(0)
    return b - action_level(ch, H)


# ---------------------------------------------------------------------------
# delta-robust subspaces
# ---------------------------------------------------------------------------

def is_delta_robust(V: List[Chain], delta, cx: FilteredComplex) -> bool:
    """True iff every boundary in span(V) has beta >= delta."""
    delta = rat(delta)
    for v in V:
        if not cx.is_cycle(v):
            raise FiltError("delta-robustness requires cycles")
    span = [v for v in V if v]
    if not span:
        return True
    # restrict to span(V) intersect im(d)
    img = image_basis(cx)
    img_vecs = [_chain_vec(ch, cx.generators) for ch in img]
    v_vecs = [_chain_vec(v, cx.generators) for v in span]
    inside: List[Chain] = []
    if all(field_in_span(img_vecs, v) for v in v_vecs):
        inside = span
    else:
        coeffs = _quotient_kernel_complement(v_vecs, img_vecs)
        for coeff in coeffs:
            ch: Chain = {}
            for t, v in zip(coeff, span):
                if not t.is_zero():
                    ch = chain_add(ch, chain_scale(t.rebase(cx.cutoff), v))
            if ch:
                inside.append(ch)
    if not inside:
        return True
    m = cx.grid(inside).min_beta_over_span(inside)
    return m >= delta


def _quotient_kernel_complement(v_vecs, img_vecs):
    """Coefficients t with sum t_i v_i inside span(img)."""
    n = len(v_vecs)
    ker = field_kernel([list(c) for c in v_vecs] + [list(c) for c in img_vecs])
    out, vecs = [], []
    for k in ker:
        head = k[:n]
        if any(not s.is_zero() for s in head) and not field_in_span(vecs, head):
            out.append(head)
            vecs.append(head)
    return out


def min_beta_subspace(V: List[Chain], cx: FilteredComplex) -> Fraction:
    """Exact min of beta over span(V) minus 0 (all must be boundaries)."""
    span = [v for v in V if v]
    if not span:
        return INF
    return cx.grid(span).min_beta_over_span(span)


def find_robust_subspace(cx: FilteredComplex, d0: Dict[str, Chain],
                         d1: Dict[str, Chain]):
    """Split d = d0 + d1 and produce a proper delta_{d1}-robust subspace.

    Returns (V, k) with k = (dim H(C,d0) - dim H(C,d))/2 and V the kernel
    of an action-nonincreasing projection onto im(d0), restricted to
    im(d).  V is verified delta_{d1}-robust before returning.
    """
    C0 = FilteredComplex(cx.generators, cx.action, d0, cx.cutoff)
    for g in cx.generators:
        total = chain_add(d0.get(g, {}), d1.get(g, {}))
        if not chain_eq(total, cx.diff[g]):
            raise FiltError("d0 + d1 does not match the differential")
    d1map = FilteredMap(cx, cx, d1, 0)
    if d1map.measured_shift() > 0:
        raise FiltError("d1 must not raise action")
    h0 = homology_rank(C0)
    h = homology_rank(cx)
    if h0 < h:
        raise FiltError("dim H(C,d0) < dim H(C,d)")
    if (h0 - h) % 2 != 0:
        raise FiltError("homology dimension defect must be even")
    k = (h0 - h) // 2
    # projection onto im(d0) along an action-orthogonal completion
    im0 = _orthogonalize(image_basis(C0), cx)
    completion = list(im0)
    for g in sorted(cx.generators, key=lambda g: cx.action[g]):
        cand = _reduce_mod(cx.basis_chain(g), completion, cx)
        if cand:
            completion.append(cand)
    basis_im = completion[:len(im0)]

    def pi(x: Chain) -> Chain:
        coeffs = _expand(x, completion, cx)
        out: Chain = {}
        for lam, b in zip(coeffs[:len(im0)], basis_im):
            out = chain_add(out, chain_scale(lam, b))
        return out

    imd = image_basis(cx)
    pi_vecs = [_chain_vec(pi(ch), cx.generators) for ch in imd]
    coeffs = field_kernel(pi_vecs)
    V: List[Chain] = []
    for coeff in coeffs:
        ch: Chain = {}
        for t, b in zip(coeff, imd):
            if not t.is_zero():
                ch = chain_add(ch, chain_scale(t.rebase(cx.cutoff), b))
        if ch:
            V.append(ch)
    if len(V) < k:
        raise FiltError("projection kernel smaller than predicted")
    dd1 = action_drop(d1map) if any(d1.get(g) for g in cx.generators) else INF
    if dd1 < INF and not is_delta_robust(V, dd1, cx):
        raise FiltError("constructed subspace fails robustness check")
    return V, k


def _reduce_mod(v: Chain, kept: List[Chain], cx: FilteredComplex) -> Chain:
    v = dict(v)
    guard = 0
    while v:
        a = action_level(v, cx)
        slice_v = _peak_slice(v, a, cx)
        basis = [_peak_slice(chain_shift(action_level(k, cx) - a, k), a, cx)
                 for k in kept]
        combo = _f2_express(slice_v, basis)
        if combo is None:
            return v
        for j in combo:
            k = kept[j]
            v = chain_add(v, chain_shift(action_level(k, cx) - a, k))
        guard += 1
        if guard > 10000:
            raise FiltError("reduction failed to terminate")
    return v


def _expand(x: Chain, basis: List[Chain], cx: FilteredComplex) -> List[NovikovScalar]:
    """Coefficients of x in an action-orthogonal basis (greedy peel-off)."""
    coeffs = [NovikovScalar.zero(cx.cutoff) for _ in basis]
    v = dict(x)
    floor = cx.action_floor() - cx.cutoff
    guard = 0
    while v:
        a = action_level(v, cx)
        if a < floor:
            break
        slice_v = _peak_slice(v, a, cx)
        sl_basis = [_peak_slice(chain_shift(action_level(k, cx) - a, k), a, cx)
                    for k in basis]
        combo = _f2_express(slice_v, sl_basis)
        if combo is None:
            raise FiltError("vector not in the span of the basis")
        for j in combo:
            k = basis[j]
            s = action_level(k, cx) - a
            coeffs[j] = coeffs[j] + NovikovScalar.monomial(s, cx.cutoff)
            v = chain_add(v, chain_shift(s, k))
        guard += 1
        if guard > 100000:
            raise FiltError("expansion failed to terminate")
    return coeffs


# ---------------------------------------------------------------------------
# rigidity lemmas
# ---------------------------------------------------------------------------

def verify_rig_cplx2(cx: FilteredComplex, d0: Dict[str, Chain],
                     d1: Dict[str, Chain], f: FilteredMap) -> dict:
    """Check the rank inequality dim(im f) >= dim H(C, d0) under the
    splitting hypotheses; failures are reported, not raised."""
    report = {"hypotheses_ok": False, "checked": False}
    try:
        C0 = FilteredComplex(cx.generators, cx.action, d0, cx.cutoff)
    except FiltError as exc:
        report["error"] = f"d0: {exc}"
        return report
    for g in cx.generators:
        if not chain_eq(chain_add(d0.get(g, {}), d1.get(g, {})), cx.diff[g]):
            report["error"] = "d0 + d1 != d"
            return report
    h0 = homology_rank(C0)
    h = homology_rank(cx)
    report["dim_H_d0"] = h0
    report["dim_H_d"] = h
    d1map = FilteredMap(cx, cx, d1, 0)
    nonzero_d1 = any(d1.get(g) for g in cx.generators)
    dd1 = action_drop(d1map) if nonzero_d1 else INF
    report["delta_d1"] = dd1
    ident = FilteredMap.identity(cx)
    diffm = f.add(_negate(ident))
    bh = homotopical_boundary_level(diffm) if diffm.matrix else NEG_INF
    if not any(diffm.matrix.values()):
        bh = NEG_INF
    report["Bh_f_minus_id"] = bh
    rank_f = field_rank([_chain_vec(f.matrix.get(g, {}), cx.generators)
                         for g in cx.generators])
    report["rank_f"] = rank_f
    hyp = h0 >= h and bh < dd1
    report["hypotheses_ok"] = hyp
    report["checked"] = True
    report["inequality_holds"] = rank_f >= h0
    return report


def _negate(f: FilteredMap) -> FilteredMap:
    return f  # characteristic 2


def check_injectivity_lemma(f: FilteredMap, g: FilteredMap) -> bool:
    """Lemma: if g is a strictly filtered iso with strictly filtered inverse
    and B_h(f-g) < min(delta_dC, delta_dD), then f is strictly filtered and
    injective.  Verifies hypotheses exactly and then asserts the conclusion.
    """
    C, D = f.domain, f.codomain
    if not (f.is_chain_map() and g.is_chain_map()):
        raise FiltError("inputs must be chain maps")
    g_cols = [_chain_vec(g.matrix.get(x, {}), D.generators) for x in C.generators]
    if field_rank(g_cols) != C.dim or C.dim != D.dim:
        return False
    if g.measured_shift() > 0:
        return False
    ginv = invert_map(g)
    if ginv.measured_shift() > 0:
        return False
    diff = f.add(g)
    bh = homotopical_boundary_level(diff) if any(diff.matrix.values()) else NEG_INF
    bound = min(delta_d(C), delta_d(D))
    if not bh < bound:
        return False
    # conclusion, verified exactly
    if f.measured_shift() > 0:
        raise FiltError("lemma conclusion failed: f not strictly filtered")
    rank_f = field_rank([_chain_vec(f.matrix.get(x, {}), D.generators)
                         for x in C.generators])
    if rank_f != C.dim:
        raise FiltError("lemma conclusion failed: f not injective")
    return True


def invert_map(g: FilteredMap) -> FilteredMap:
    """Inverse of a linear iso over the Novikov field (below cutoff)."""
    C, D = g.domain, g.codomain
    n = C.dim
    cols = [[_big(g.matrix.get(x, {}).get(y, NovikovScalar.zero(C.cutoff)))
             for y in D.generators] for x in C.generators]
    inv_cols = []
    for i, target_gen in enumerate(D.generators):
        t = [NovikovScalar.one(_FIELD_CUTOFF) if k == i
             else NovikovScalar.zero(_FIELD_CUTOFF) for k in range(n)]
        sol = _field_solve(cols, t, C.cutoff)
        if sol is None:
            raise FiltError("map is not invertible")
        inv_cols.append(sol)
    mat: Dict[str, Chain] = {}
    for i, src in enumerate(D.generators):
        col: Chain = {}
        for k, s in enumerate(inv_cols[i]):
            if not s.is_zero():
                col[C.generators[k]] = s
        mat[src] = col
    return FilteredMap(D, C, mat, -g.declared_shift)


def _field_solve(cols, target, cutoff):
    """Solve sum x_i cols_i = target over the field (truncated witnesses).

    Columns are augmented with coefficient bookkeeping so the answer is
    expressed in the original variables after elimination.
    """
    n = len(cols)
    m = len(target)
    zero = NovikovScalar.zero(cutoff)
    one = NovikovScalar.one(cutoff)
    work = []
    for i, col in enumerate(cols):
        vec = [NovikovScalar(e.exps, cutoff, e.truncated) for e in col]
        vec += [one if j == i else zero for j in range(n)]
        work.append(vec)
    tgt = [NovikovScalar(e.exps, cutoff, e.truncated) for e in target]
    used_rows = []
    avail = list(range(n))
    order = []
    for _ in range(n):
        pivot = None
        best = None
        for ci in avail:
            for ri in range(m):
                if ri in used_rows:
                    continue
                e = work[ci][ri]
                if not e.is_zero():
                    v = e.valuation()
                    if best is None or v < best:
                        best = v
                        pivot = (ci, ri)
        if pivot is None:
            break
        ci, ri = pivot
        avail.remove(ci)
        used_rows.append(ri)
        order.append((ci, ri))
        pval = work[ci][ri]
        for cj in avail:
            e = work[cj][ri]
            if not e.is_zero():
                lam = e.divide(pval)
                for k in range(m + n):
                    work[cj][k] = work[cj][k] + lam * work[ci][k]
    xs = [zero] * n
    # the pivot rows/columns form a lower-triangular system in pivot
    # order (elimination clears each pivot row from all later columns)
    for ci, ri in order:
        num = tgt[ri]
        if num.is_zero():
            continue
        lam = num.divide(work[ci][ri])
        for j in range(n):
            coeff = work[ci][m + j]
            if not coeff.is_zero():
                xs[j] = xs[j] + lam * coeff
        for k in range(m):
            tgt[k] = tgt[k] + lam * work[ci][k]
    if any(not t.is_zero() for t in tgt):
        return None
    return xs


def filtered_inverse(f: FilteredMap, g: FilteredMap) -> FilteredMap:
    """Inversion-trick inverse a.g^-1 for f = g(id - k), k action-decreasing."""
    C = f.domain
    ginv = invert_map(g)
    k = ginv.compose(f.add(g))  # g^-1 (f - g) ; char 2 makes this -k
    if any(k.matrix.values()):
        if k.measured_shift() >= 0:
            raise FiltError("series requires strictly action-decreasing k")
    acc = FilteredMap.identity(C)
    power = FilteredMap.identity(C)
    while True:
        power = k.compose(power)
        if not any(power.matrix.values()):
            break
        acc = acc.add(power)
    return acc.compose(ginv)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def parse_complex(text: str, cutoff=64) -> FilteredComplex:
    gens: List[str] = []
    action: Dict[str, Fraction] = {}
    diff: Dict[str, Chain] = {}
    cutoff = rat(cutoff)
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("cutoff "):
            cutoff = rat(line.split()[1])
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("cutoff"):
            continue
        if line.startswith("gen "):
            parts = line.split()
            if len(parts) != 4 or parts[2] != "action":
                raise FiltError(f"bad generator line: {line!r}")
            gens.append(parts[1])
            action[parts[1]] = rat(parts[3])
        elif line.startswith("d "):
            head, rhs = line[2:].split("=", 1)
            src = head.strip()
            col: Chain = {}
            rhs = rhs.strip()
            if rhs != "0":
                for term in rhs.split("+"):
                    term = term.strip()
                    scal, tgt = term.rsplit("*", 1)
                    s = parse_scalar(scal.strip(), cutoff)
                    col = chain_add(col, {tgt.strip(): s})
            diff[src] = col
        else:
            raise FiltError(f"unrecognized line: {line!r}")
    return FilteredComplex(gens, action, diff, cutoff)


def serialize_complex(cx: FilteredComplex) -> str:
    lines = [f"cutoff {cx.cutoff}"]
    for g in cx.generators:
        lines.append(f"gen {g} action {cx.action[g]}")
    for g in cx.generators:
        col = cx.diff[g]
        if col:
            rhs = " + ".join(f"{s}*{h}" for h, s in sorted(col.items()))
            lines.append(f"d {g} = {rhs}")
    return "\n".join(lines) + "\n"
