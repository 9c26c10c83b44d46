"""Arity-capped weakly filtered A-infinity categories and modules.

Operations are stored as sparse tables on generator tuples with Novikov
coefficients.  Discrepancy sequences track by how much each mu_d may
overshoot the additive action bound; the calculus on them (pointwise
max, the star product, Assumption E) is implemented verbatim.

Generator names are required to be globally unique across all hom
complexes of a category so that chains can be moved between modules and
cones without relabeling.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .novikov import INF, rat
from .filtcx import (
    Chain, FilteredComplex, FilteredMap, NEG_INF, action_level,
    boundary_level, chain_add, chain_scale, cycle_basis,
    homotopical_boundary_level, _orthogonalize,
)


class CapError(ValueError):
    """An operation was requested beyond the arity cap."""


class WfError(ValueError):
    pass


# ---------------------------------------------------------------------------
# discrepancy sequences
# ---------------------------------------------------------------------------

class Discrepancy:
    """Sequence eps_1..eps_cap of nonnegative rationals.

    ``kind`` is "category"/"module" (forces eps_1 = 0) or "hom" (eps_1
    free).
    """

    def __init__(self, values: Sequence, kind: str = "hom"):
        self.values = tuple(rat(v) for v in values)
        self.kind = kind
        if kind != "raw" and any(v < 0 for v in self.values):
            raise WfError("discrepancies must be nonnegative")
        if kind in ("category", "module") and self.values and self.values[0] != 0:
            raise WfError(f"{kind} discrepancy must have eps_1 = 0")

    @property
    def cap(self) -> int:
        return len(self.values)

    def __getitem__(self, d: int) -> Fraction:
        if not 1 <= d <= self.cap:
            raise CapError(f"discrepancy index {d} beyond cap {self.cap}")
        return self.values[d - 1]

    def __eq__(self, other):
        return isinstance(other, Discrepancy) and self.values == other.values

    def __le__(self, other: "Discrepancy") -> bool:
        self._check(other)
        return all(a <= b for a, b in zip(self.values, other.values))

    def _check(self, other: "Discrepancy"):
        if self.cap != other.cap:
            raise CapError(f"cap mismatch {self.cap} vs {other.cap}")

    def add_const(self, c) -> "Discrepancy":
        c = rat(c)
        return Discrepancy([v + c for v in self.values], "hom")

    def minus_first(self) -> "Discrepancy":
        """eps - eps_1: first entry 0, later entries possibly negative;
        only meaningful inside a pointwise max with module discrepancies."""
        e1 = self.values[0] if self.values else Fraction(0)
        return Discrepancy([v - e1 for v in self.values], "raw")

    @staticmethod
    def zero(cap: int, kind: str = "module") -> "Discrepancy":
        return Discrepancy([0] * cap, kind)

    def __repr__(self):
        return f"Discrepancy({list(map(str, self.values))})"


def disc_max(seqs: Sequence[Discrepancy], kind: str = "hom") -> Discrepancy:
    if not seqs:
        raise WfError("disc_max of an empty family")
    cap = seqs[0].cap
    for s in seqs:
        seqs[0]._check(s)
    return Discrepancy(
        [max(s.values[i] for s in seqs) for i in range(cap)], kind)


def disc_star(ef: Discrepancy, eg: Discrepancy) -> Discrepancy:
    """(ef * eg)_d = max{ef_i + eg_j : i + j = d + 1}."""
    ef._check(eg)
    cap = ef.cap
    out = []
    for d in range(1, cap + 1):
        out.append(max(ef[i] + eg[d + 1 - i] for i in range(1, d + 1)))
    return Discrepancy(out, "hom")


def check_assumption_E(eps: Discrepancy, eps_m: Discrepancy,
                       eps_A: Discrepancy) -> bool:
    """eps_d >= max{eps^m_i + eps_j, eps^A_i + eps_j : i+j = d+1}."""
    cap = eps.cap
    eps._check(eps_m)
    eps._check(eps_A)
    for d in range(1, cap + 1):
        for i in range(1, d + 1):
            j = d + 1 - i
            if eps[d] < eps_m[i] + eps[j] or eps[d] < eps_A[i] + eps[j]:
                return False
    return True


def choose_eps(delta: Discrepancy, eps_m: Discrepancy,
               eps_A: Discrepancy):
    """Smallest inductive sequence >= delta satisfying Assumption E.

    Returns (eps, measured_ratios) where the ratios report eps_d against
    the sum of the inputs up to d (the universal bound is emitted as a
    measurement, never asserted).
    """
    cap = delta.cap
    delta._check(eps_m)
    delta._check(eps_A)
    vals: List[Fraction] = []
    for d in range(1, cap + 1):
        cand = delta[d]
        for i in range(2, d + 1):
            j = d + 1 - i
            cand = max(cand, eps_m[i] + vals[j - 1], eps_A[i] + vals[j - 1])
        vals.append(cand)
    eps = Discrepancy(vals, "hom")
    ratios = []
    for d in range(1, cap + 1):
        denom = sum(eps_A[j] + eps_m[j] + delta[j] for j in range(1, d + 1))
        ratios.append(None if denom == 0 else vals[d - 1] / denom)
    return eps, ratios


def check_mod_squared_condition(eps_h: Discrepancy) -> bool:
    """eps_d + eps_1 >= eps_i + eps_j for all i + j = d + 1."""
    cap = eps_h.cap
    for d in range(1, cap + 1):
        for i in range(1, d + 1):
            j = d + 1 - i
            if eps_h[d] + eps_h[1] < eps_h[i] + eps_h[j]:
                return False
    return True


# ---------------------------------------------------------------------------
# weakly filtered categories
# ---------------------------------------------------------------------------

MuTable = Dict[int, Dict[Tuple[str, ...], Chain]]


class WFCategory:
    """Objects, hom complexes and higher operations up to the arity cap."""

    def __init__(self, objects: Sequence[str],
                 homs: Dict[Tuple[str, str], FilteredComplex],
                 mu: MuTable, disc: Discrepancy, cap: int = 6,
                 units: Optional[Dict[str, Chain]] = None,
                 unit_bound=0, check: bool = True):
        self.objects = tuple(objects)
        self.homs = dict(homs)
        self.cap = cap
        if disc.cap != cap:
            raise CapError("discrepancy cap must equal the arity cap")
        self.disc = disc
        self.mu_tables: MuTable = {d: dict(t) for d, t in mu.items() if d >= 2}
        self.units = dict(units) if units else None
        self.unit_bound = rat(unit_bound)
        # generator registry
        self.gen_hom: Dict[str, Tuple[str, str]] = {}
        for (x, y), cx in self.homs.items():
            for g in cx.generators:
                if g in self.gen_hom:
                    raise WfError(f"generator name {g} reused across homs")
                self.gen_hom[g] = (x, y)
        if check:
            self.check_ainf_relations()
            if self.units:
                self._check_units()

    def hom(self, x: str, y: str) -> FilteredComplex:
        try:
            return self.homs[(x, y)]
        except KeyError:
            raise WfError(f"no hom complex for ({x}, {y})")

    def cutoff(self):
        return next(iter(self.homs.values())).cutoff

    # -- evaluation ----------------------------------------------------

    def mu_gens(self, gens: Tuple[str, ...]) -> Chain:
        d = len(gens)
        if d > self.cap:
            raise CapError(f"mu_{d} beyond arity cap {self.cap}")
        if d == 1:
            g = gens[0]
            return self.hom(*self.gen_hom[g]).diff[g]
        return self.mu_tables.get(d, {}).get(gens, {})

    def mu(self, chains: Sequence[Chain]) -> Chain:
        """Multilinear extension of mu_d to chains."""
        d = len(chains)
        if d > self.cap:
            raise CapError(f"mu_{d} beyond arity cap {self.cap}")
        out: Chain = {}
        for combo, coeff in _tuples(chains):
            term = chain_scale(coeff, self.mu_gens(combo))
            out = chain_add(out, term)
        return out

    # -- verification ---------------------------------------------------

    def max_op_arity(self) -> int:
        """Largest arity carrying a nonzero operation (mu_1 included)."""
        tops = [1] + [d for d, t in self.mu_tables.items() if t]
        return max(tops)

    def check_ainf_relations(self, max_arity: Optional[int] = None):
        """A-infinity relations on generator tuples up to cap - 1.

        Relations at arity n are vacuous once n exceeds twice the top
        nonzero operation arity minus one, so the check stops there.
        """
        top = max_arity if max_arity is not None else \
            min(self.cap - 1, 2 * self.max_op_arity() - 1)
        for n in range(1, top + 1):
            for gens in self._composable_tuples(n):
                acc: Chain = {}
                for m in range(1, n + 1):
                    for j in range(0, n - m + 1):
                        inner = self.mu_gens(gens[j:j + m])
                        if not inner:
                            continue
                        for g_in, s in inner.items():
                            outer = self.mu_gens(
                                gens[:j] + (g_in,) + gens[j + m:])
                            acc = chain_add(acc, chain_scale(s, outer))
                if acc:
                    raise WfError(f"A-infinity relation fails at {gens}")
        self._check_disc_bound()

    def _check_disc_bound(self):
        for d, table in self.mu_tables.items():
            for gens, out in table.items():
                if not out:
                    continue
                tgt = self.gen_hom[out and next(iter(out))]
                total = sum(self.hom(*self.gen_hom[g]).action[g] for g in gens)
                a_out = action_level(out, self.hom(*tgt))
                if a_out > total + self.disc[d]:
                    raise WfError(
                        f"mu_{d}{gens} violates the declared discrepancy")

    def measured_discrepancy(self) -> List[Fraction]:
        """Per-arity worst action overshoot actually attained."""
        out = [Fraction(0)] * self.cap
        for d, table in self.mu_tables.items():
            for gens, img in table.items():
                if not img:
                    continue
                tgt = self.gen_hom[next(iter(img))]
                total = sum(self.hom(*self.gen_hom[g]).action[g] for g in gens)
                a_out = action_level(img, self.hom(*tgt))
                out[d - 1] = max(out[d - 1], a_out - total)
        return out

    def _composable_tuples(self, n: int):
        if n == 1:
            for g in self.gen_hom:
                yield (g,)
            return
        for gens in self._composable_tuples(n - 1):
            last = gens[-1]
            _, y = self.gen_hom[last]
            for g, (x2, _) in self.gen_hom.items():
                if x2 == y:
                    yield gens + (g,)

    def _check_units(self):
        for x, e in self.units.items():
            cx = self.hom(x, x)
            if not cx.is_cycle(e):
                raise WfError(f"unit of {x} is not a cycle")
            if action_level(e, cx) > self.unit_bound:
                raise WfError(f"unit of {x} exceeds the declared bound")


def _tuples(chains: Sequence[Chain]):
    """All generator tuples with accumulated Novikov coefficients."""
    combos = [((), None)]
    for ch in chains:
        nxt = []
        for gens, coeff in combos:
            for g, s in ch.items():
                c = s if coeff is None else coeff * s
                if not c.is_zero():
                    nxt.append((gens + (g,), c))
        combos = nxt
    for gens, coeff in combos:
        if coeff is None:
            continue
        yield gens, coeff


# ---------------------------------------------------------------------------
# weakly filtered modules
# ---------------------------------------------------------------------------

class WFModule:
    """Module over a weakly filtered category, stored as sparse mu-tables.

    ``mu_tables[d]`` maps (a_1, ..., a_{d-1}, m) generator tuples (the
    last entry a module generator) to chains in the value complex of the
    first object.
    """

    def __init__(self, cat: WFCategory, values: Dict[str, FilteredComplex],
                 mu: MuTable, disc: Discrepancy, check: bool = True):
        self.cat = cat
        self.values = dict(values)
        self.mu_tables = {d: dict(t) for d, t in mu.items() if d >= 2}
        self.disc = disc
        self.gen_value: Dict[str, str] = {}
        for x, cx in self.values.items():
            for g in cx.generators:
                if g in self.gen_value:
                    raise WfError(f"module generator {g} reused across values")
                self.gen_value[g] = x
        if check:
            self.check_module_relations()

    @property
    def cap(self) -> int:
        return self.cat.cap

    def value(self, x: str) -> FilteredComplex:
        return self.values[x]

    def mu_gens(self, gens: Tuple[str, ...]) -> Chain:
        d = len(gens)
        if d > self.cap:
            raise CapError(f"module mu_{d} beyond arity cap")
        if d == 1:
            g = gens[0]
            return self.values[self.gen_value[g]].diff[g]
        return self.mu_tables.get(d, {}).get(gens, {})

    def mu(self, a_chains: Sequence[Chain], b: Chain) -> Chain:
        out: Chain = {}
        for combo, coeff in _tuples(list(a_chains) + [b]):
            out = chain_add(out, chain_scale(coeff, self.mu_gens(combo)))
        return out

    def module_tuples(self, n: int):
        """Composable (a_1..a_{n-1}, m) generator tuples."""
        if n == 1:
            for g in self.gen_value:
                yield (g,)
            return
        for gens in self.cat._composable_tuples(n - 1):
            _, y = self.cat.gen_hom[gens[-1]]
            for m, x in self.gen_value.items():
                if x == y:
                    yield gens + (m,)

    def max_op_arity(self) -> int:
        tops = [1, self.cat.max_op_arity()]
        tops += [d for d, t in self.mu_tables.items() if t]
        return max(tops)

    def check_module_relations(self, max_arity: Optional[int] = None):
        top = max_arity if max_arity is not None else \
            min(self.cap - 1, 2 * self.max_op_arity() - 1)
        for n in range(1, top + 1):
            for gens in self.module_tuples(n):
                acc: Chain = {}
                # inner category operation
                for m in range(1, n):
                    for j in range(0, n - m):
                        inner = self.cat.mu_gens(gens[j:j + m])
                        for g_in, s in inner.items():
                            outer = self.mu_gens(gens[:j] + (g_in,) + gens[j + m:])
                            acc = chain_add(acc, chain_scale(s, outer))
                # inner module operation
                for m in range(1, n + 1):
                    inner = self.mu_gens(gens[n - m:])
                    for g_in, s in inner.items():
                        outer = self.mu_gens(gens[:n - m] + (g_in,))
                        acc = chain_add(acc, chain_scale(s, outer))
                if acc:
                    raise WfError(f"module relation fails at {gens}")
        self._check_disc_bound()

    def _check_disc_bound(self):
        meas = self.measured_discrepancy()
        for d in range(2, self.cap + 1):
            if meas[d - 1] > self.disc[d]:
                raise WfError(
                    f"module mu_{d} exceeds the declared discrepancy")

    def measured_discrepancy(self) -> List[Fraction]:
        out = [Fraction(0)] * self.cap
        for d, table in self.mu_tables.items():
            for gens, img in table.items():
                if not img:
                    continue
                total = Fraction(0)
                for g in gens[:-1]:
                    x, y = self.cat.gen_hom[g]
                    total += self.cat.hom(x, y).action[g]
                mval = self.values[self.gen_value[gens[-1]]]
                total += mval.action[gens[-1]]
                tgt = self.values[self.gen_value[next(iter(img))]]
                out[d - 1] = max(out[d - 1], action_level(img, tgt) - total)
        return out

    def action_table(self) -> Dict[str, Fraction]:
        """Generator -> action, the cone filtration in tabular form."""
        out = {}
        for x, cx in self.values.items():
            for g in cx.generators:
                out[g] = cx.action[g]
        return out


def yoneda_module(cat: WFCategory, y: str) -> WFModule:
    """The module X -> hom(X, Y) with the category operations."""
    values = {x: cat.hom(x, y) for x in cat.objects if (x, y) in cat.homs}
    mu: MuTable = {}
    for d, table in cat.mu_tables.items():
        sub = {}
        for gens, img in table.items():
            _, tgt = cat.gen_hom[gens[-1]]
            if tgt == y:
                sub[gens] = img
        if sub:
            mu[d] = sub
    return WFModule(cat, values, mu, Discrepancy(cat.disc.values, "module"),
                    check=False)


# ---------------------------------------------------------------------------
# pre-module homomorphisms
# ---------------------------------------------------------------------------

class PreModHom:
    """Weakly filtered pre-module homomorphism f = (f_1, f_2, ...).

    ``components[d]`` maps (a_1..a_{d-1}, m) tuples to chains in
    M1(first object).
    """

    def __init__(self, source: WFModule, target: WFModule,
                 components: MuTable, shift=0,
                 disc: Optional[Discrepancy] = None):
        self.source = source
        self.target = target
        self.components = {d: {k: v for k, v in t.items() if v}
                           for d, t in components.items()}
        self.components = {d: t for d, t in self.components.items() if t}
        self.shift = rat(shift)
        self.disc = disc if disc is not None else Discrepancy.zero(
            source.cap, "hom")

    @property
    def cap(self) -> int:
        return self.source.cap

    def comp_gens(self, gens: Tuple[str, ...]) -> Chain:
        d = len(gens)
        if d > self.cap:
            raise CapError("component beyond arity cap")
        return self.components.get(d, {}).get(gens, {})

    def apply(self, a_chains: Sequence[Chain], b: Chain) -> Chain:
        out: Chain = {}
        for combo, coeff in _tuples(list(a_chains) + [b]):
            out = chain_add(out, chain_scale(coeff, self.comp_gens(combo)))
        return out

    def first_order_map(self, x: str) -> FilteredMap:
        mat = {}
        for (g,), img in self.components.get(1, {}).items():
            if self.source.gen_value[g] == x:
                mat[g] = img
        return FilteredMap(self.source.value(x), self.target.value(x), mat,
                           self.shift)

    def measured_shifts(self) -> List[Fraction]:
        """Per-arity maximal action overshoot (before the rho/eps split)."""
        out = [NEG_INF] * self.cap
        for d, table in self.components.items():
            for gens, img in table.items():
                if not img:
                    continue
                total = Fraction(0)
                for g in gens[:-1]:
                    total += self.source.cat.hom(
                        *self.source.cat.gen_hom[g]).action[g]
                total += self.source.value(
                    self.source.gen_value[gens[-1]]).action[gens[-1]]
                tgt = self.target.value(self.target.gen_value[next(iter(img))])
                out[d - 1] = max(out[d - 1], action_level(img, tgt) - total)
        return out

    def in_hom(self, rho, eps: Discrepancy) -> bool:
        """Membership in hom^{<= rho; eps}."""
        rho = rat(rho)
        meas = self.measured_shifts()
        return all(meas[d - 1] <= rho + eps[d] for d in range(1, self.cap + 1))

    def add(self, other: "PreModHom") -> "PreModHom":
        comps: MuTable = {}
        for d in set(self.components) | set(other.components):
            t: Dict[Tuple[str, ...], Chain] = {}
            for gens in set(self.components.get(d, {})) | set(other.components.get(d, {})):
                v = chain_add(self.comp_gens(gens), other.comp_gens(gens))
                if v:
                    t[gens] = v
            if t:
                comps[d] = t
        return PreModHom(self.source, self.target, comps,
                         max(self.shift, other.shift),
                         disc_max([self.disc, other.disc]))

    def is_zero(self) -> bool:
        return not self.components

    @staticmethod
    def identity(m: WFModule) -> "PreModHom":
        comps = {1: {(g,): m.values[x].basis_chain(g)
                     for g, x in m.gen_value.items()}}
        return PreModHom(m, m, comps, 0)

    @staticmethod
    def zero(m0: WFModule, m1: WFModule) -> "PreModHom":
        return PreModHom(m0, m1, {}, 0)


def mu1_mod(f: PreModHom) -> PreModHom:
    """Differential of the dg-category of modules (characteristic 2)."""
    m0, m1 = f.source, f.target
    cat = m0.cat
    comps: MuTable = {}
    maxf = max([d for d, t in f.components.items() if t], default=0)
    maxmu = max(m0.max_op_arity(), m1.max_op_arity())
    top = min(f.cap, maxf + maxmu - 1) if maxf else 0
    for n in range(1, top + 1):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens in m0.module_tuples(n):
            acc: Chain = {}
            # target module operation applied to f
            for k in range(0, n):
                inner = f.comp_gens(gens[k:])
                for g_in, s in inner.items():
                    outer = m1.mu_gens(gens[:k] + (g_in,))
                    acc = chain_add(acc, chain_scale(s, outer))
            # f applied to source module operation
            for k in range(0, n):
                inner = m0.mu_gens(gens[k:])
                for g_in, s in inner.items():
                    outer = f.comp_gens(gens[:k] + (g_in,))
                    acc = chain_add(acc, chain_scale(s, outer))
            # f applied around inner category operations
            for m in range(1, n):
                for j in range(0, n - m):
                    inner = cat.mu_gens(gens[j:j + m])
                    for g_in, s in inner.items():
                        outer = f.comp_gens(gens[:j] + (g_in,) + gens[j + m:])
                        acc = chain_add(acc, chain_scale(s, outer))
            if acc:
                table[gens] = acc
        if table:
            comps[n] = table
    return PreModHom(m0, m1, comps, f.shift, f.disc)


def mu2_mod(f: PreModHom, g: PreModHom) -> PreModHom:
    """Composition g o f; lands in hom^{<= rho_f + rho_g; eps_f * eps_g}."""
    if f.target is not g.source:
        if f.target.gen_value.keys() != g.source.gen_value.keys():
            raise WfError("mu2_mod: modules do not compose")
    comps: MuTable = {}
    maxf = max([d for d, t in f.components.items() if t], default=0)
    maxg = max([d for d, t in g.components.items() if t], default=0)
    top = min(f.cap, maxf + maxg - 1) if maxf and maxg else 0
    for n in range(1, top + 1):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens in f.source.module_tuples(n):
            acc: Chain = {}
            for k in range(0, n):
                inner = f.comp_gens(gens[k:])
                for g_in, s in inner.items():
                    outer = g.comp_gens(gens[:k] + (g_in,))
                    acc = chain_add(acc, chain_scale(s, outer))
            if acc:
                table[gens] = acc
        if table:
            comps[n] = table
    return PreModHom(f.source, g.target, comps, f.shift + g.shift,
                     disc_star(f.disc, g.disc))


def verify_hom_filtration(m0: WFModule, m1: WFModule, eps_h: Discrepancy,
                          homs: Sequence[PreModHom], rho=None) -> bool:
    """mu1_mod preserves hom^{<= rho; eps_h} on the given sample maps."""
    for f in homs:
        r = rho
        if r is None:
            meas = f.measured_shifts()
            r = max((meas[d - 1] - eps_h[d] for d in range(1, f.cap + 1)
                     if meas[d - 1] > NEG_INF), default=Fraction(0))
        if not f.in_hom(r, eps_h):
            raise WfError("sample map not in the stated hom filtration")
        if not mu1_mod(f).in_hom(r, eps_h):
            return False
    return True


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

class ConeModule(WFModule):
    """Weakly filtered mapping cone; records (rho, eps^f) of the attaching map."""

    def __init__(self, f: PreModHom, rho, epsf: Discrepancy, **kw):
        self.attaching = f
        self.rho = rat(rho)
        self.epsf = epsf
        super().__init__(**kw)


def cone(f: PreModHom, rho=None, epsf: Optional[Discrepancy] = None) -> ConeModule:
    """Weakly filtered Cone(f; rho, eps^f).

    The value at X is M0(X) + M1(X) with the M0 part shifted up by
    rho + eps^f_1; discrepancy max{eps^M0, eps^M1, eps^f - eps^f_1}.
    """
    if not mu1_mod(f).is_zero():
        raise WfError("cone requires a module homomorphism (mu1_mod f = 0)")
    m0, m1 = f.source, f.target
    rho = f.shift if rho is None else rat(rho)
    epsf = f.disc if epsf is None else epsf
    if not f.in_hom(rho, epsf):
        raise WfError("attaching map not in hom^{<= rho; eps^f}")
    shift0 = rho + epsf[1]
    values: Dict[str, FilteredComplex] = {}
    for x in m1.values:
        if x not in m0.values:
            continue
        c0, c1 = m0.value(x), m1.value(x)
        gens = list(c0.generators) + list(c1.generators)
        if set(c0.generators) & set(c1.generators):
            raise WfError("cone requires disjoint generator names; "
                          "rename one side first")
        action = {g: c0.action[g] + shift0 for g in c0.generators}
        action.update({g: c1.action[g] for g in c1.generators})
        diff: Dict[str, Chain] = {}
        for g in c0.generators:
            diff[g] = chain_add(dict(c0.diff[g]),
                                f.comp_gens((g,)))
        for g in c1.generators:
            diff[g] = dict(c1.diff[g])
        values[x] = FilteredComplex(gens, action, diff, c1.cutoff, check=False)
    kept = {g for cx in values.values() for g in cx.generators}
    mu: MuTable = {}
    for d in range(2, f.cap + 1):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens, img in m0.mu_tables.get(d, {}).items():
            table[gens] = chain_add(dict(img), {})
        for gens in list(f.components.get(d, {})):
            img = f.comp_gens(gens)
            table[gens] = chain_add(table.get(gens, {}), img)
        for gens, img in m1.mu_tables.get(d, {}).items():
            table[gens] = chain_add(table.get(gens, {}), img)
        table = {k: v for k, v in table.items()
                 if v and k[-1] in kept and all(g in kept for g in v)}
        if table:
            mu[d] = table
    disc = disc_max([m0.disc, m1.disc, epsf.minus_first()], kind="module")
    return ConeModule(f, rho, epsf, cat=m0.cat, values=values, mu=mu,
                      disc=disc, check=False)


def rename_module(m: WFModule, prefix: str) -> WFModule:
    """Clone with prefixed value-generator names (for self-cones)."""
    def rn(g: str) -> str:
        return f"{prefix}{g}"

    values = {}
    for x, cx in m.values.items():
        gens = [rn(g) for g in cx.generators]
        action = {rn(g): cx.action[g] for g in cx.generators}
        diff = {rn(g): {rn(h): s for h, s in cx.diff[g].items()}
                for g in cx.generators}
        values[x] = FilteredComplex(gens, action, diff, cx.cutoff,
                                    check=False)
    mu: MuTable = {}
    for d, table in m.mu_tables.items():
        mu[d] = {gens[:-1] + (rn(gens[-1]),):
                 {rn(h): s for h, s in img.items()}
                 for gens, img in table.items()}
    return WFModule(m.cat, values, mu, m.disc, check=False)


def rename_hom_into(f: PreModHom, new_target: WFModule,
                    prefix: str) -> PreModHom:
    """Reinterpret f with its target replaced by a renamed clone."""
    comps: MuTable = {}
    for d, table in f.components.items():
        comps[d] = {gens: {f"{prefix}{h}": s for h, s in img.items()}
                    for gens, img in table.items()}
    return PreModHom(f.source, new_target, comps, f.shift, f.disc)


def shift_module(m: WFModule, nu) -> WFModule:
    """Action-shift S^nu M: (S^nu M)^{<= a} = M^{<= a + nu}, so every
    element's action drops by nu."""
    nu = rat(nu)
    values = {x: cx.shift_actions(-nu) for x, cx in m.values.items()}
    return WFModule(m.cat, values, m.mu_tables, m.disc, check=False)


def cone_compose(f: PreModHom, xi: PreModHom) -> PreModHom:
    """psi: Cone(f) -> Cone(xi o f) with psi_1(b0,b1) = (b0, xi_1(b1)).

    Shift <= shift(xi), discrepancy <= eps^xi; the square with the
    inclusions and projections commutes exactly.
    """
    fprime = mu2_mod(f, xi)
    c_src = cone(f)
    c_tgt = cone(fprime, f.shift + xi.shift, disc_star(f.disc, xi.disc))
    comps: MuTable = {1: {}}
    for g, x in c_src.gen_value.items():
        if g in f.source.gen_value:
            comps[1][(g,)] = c_tgt.value(x).basis_chain(g)
        else:
            img = xi.apply([], f.target.value(x).basis_chain(g))
            if img:
                comps[1][(g,)] = img
    for d in range(2, f.cap + 1):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens, img in xi.components.get(d, {}).items():
            table[gens] = img
        if table:
            comps[d] = table
    psi = PreModHom(c_src, c_tgt, comps, xi.shift, xi.disc)
    psi.cone_source = c_src
    psi.cone_target = c_tgt
    return psi


def cone_boundary_correction(f: PreModHom, theta: PreModHom,
                             rho=None, eps: Optional[Discrepancy] = None) -> PreModHom:
    """vartheta: Cone(f) -> Cone(f + mu1_mod theta), action shift <= 0,
    discrepancy <= eps - eps_1 (signs vanish in characteristic 2)."""
    rho = f.shift if rho is None else rat(rho)
    eps = f.disc if eps is None else eps
    fprime = f.add(mu1_mod(theta))
    c_src = cone(f, rho, eps)
    c_tgt = cone(fprime, rho, eps)
    comps: MuTable = {1: {}}
    for g, x in c_src.gen_value.items():
        base = c_tgt.value(x).basis_chain(g)
        if g in f.source.gen_value:
            img = chain_add(base, theta.apply([], f.source.value(x).basis_chain(g)))
        else:
            img = base
        comps[1][(g,)] = img
    for d in range(2, f.cap + 1):
        table = {}
        for gens, img in theta.components.get(d, {}).items():
            table[gens] = img
        if table:
            comps[d] = table
    out = PreModHom(c_src, c_tgt, comps, 0, eps.minus_first())
    out.cone_source = c_src
    out.cone_target = c_tgt
    return out


# ---------------------------------------------------------------------------
# pullbacks along weakly filtered functors
# ---------------------------------------------------------------------------

class WFFunctor:
    """Functor data: object map, component tables F_s, discrepancy."""

    def __init__(self, source: WFCategory, target: WFCategory,
                 obj_map: Dict[str, str], components: MuTable,
                 disc: Discrepancy):
        self.source = source
        self.target = target
        self.obj_map = dict(obj_map)
        self.components = {d: dict(t) for d, t in components.items()}
        self.disc = disc

    def comp_gens(self, gens: Tuple[str, ...]) -> Chain:
        return self.components.get(len(gens), {}).get(gens, {})

    def higher_vanish(self) -> bool:
        return all(d == 1 or not t for d, t in self.components.items())


def pullback_disc(f_disc: Discrepancy, inner_disc: Discrepancy,
                  first_free: bool = False,
                  higher_vanish: bool = True) -> Discrepancy:
    """max{eps^F_{s_1}+...+eps^F_{s_k} + inner_{k+1} : s_1+...+s_k = d-1}.

    When the higher functor terms vanish only the all-singleton partition
    contributes, giving (d-1) eps^F_1 + inner_d exactly.
    """
    cap = inner_disc.cap
    out = [inner_disc[1] if first_free else Fraction(0)]
    for d in range(2, cap + 1):
        if higher_vanish:
            best = (d - 1) * f_disc[1] + inner_disc[d]
        else:
            best = Fraction(0)
            for k in range(1, d):
                for split in _compositions(d - 1, k):
                    tot = sum(f_disc[s] for s in split) + inner_disc[k + 1]
                    best = max(best, tot)
        out.append(best)
    kind = "hom" if first_free else "module"
    if not first_free:
        out[0] = Fraction(0)
    return Discrepancy(out, kind)


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def pullback_module(F: WFFunctor, m: WFModule) -> WFModule:
    values = {x: m.value(F.obj_map[x]) for x in F.source.objects
              if F.obj_map.get(x) in m.values}
    mu: MuTable = {}
    cap = m.cap
    for d in range(2, cap + 1):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens in _pullback_tuples(F, m, d):
            img = _pullback_value(F, m.mu, m, gens)
            if img:
                table[gens] = img
        if table:
            mu[d] = table
    disc = pullback_disc(F.disc, m.disc, higher_vanish=F.higher_vanish())
    return WFModule(F.source, values, mu, disc, check=False)


def _pullback_tuples(F: WFFunctor, m: WFModule, d: int):
    # tuples (a_1..a_{d-1}, b) from the source category and the module
    if d == 1:
        yield from ((g,) for g in m.gen_value)
        return
    for gens in F.source._composable_tuples(d - 1):
        _, y = F.source.gen_hom[gens[-1]]
        for g, x in m.gen_value.items():
            if x == F.obj_map.get(y):
                yield gens + (g,)


def _pullback_value(F: WFFunctor, mu_unused, m: WFModule,
                    gens: Tuple[str, ...]) -> Chain:
    d = len(gens)
    a_gens, b = gens[:-1], gens[-1]
    out: Chain = {}
    for k in range(1, d):
        for split in _compositions(d - 1, k):
            blocks = []
            pos = 0
            for s in split:
                blocks.append(a_gens[pos:pos + s])
                pos += s
            # multilinear: image chains of each block under F
            block_chains = [F.comp_gens(bl) for bl in blocks]
            if any(not bc for bc in block_chains):
                continue
            for combo, coeff in _tuples(block_chains):
                term = m.mu_gens(combo + (b,))
                out = chain_add(out, chain_scale(coeff, term))
    if d == 1:
        out = m.mu_gens((b,))
    return out


def pullback_hom(F: WFFunctor, f: PreModHom, pm0: WFModule,
                 pm1: WFModule) -> PreModHom:
    cap = f.cap
    comps: MuTable = {}
    for d in range(1, cap + 1):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens in _pullback_tuples(F, f.source, d):
            a_gens, b = gens[:-1], gens[-1]
            acc: Chain = {}
            if d == 1:
                acc = f.comp_gens((b,))
            else:
                for k in range(1, d):
                    for split in _compositions(d - 1, k):
                        blocks, pos = [], 0
                        for s in split:
                            blocks.append(a_gens[pos:pos + s])
                            pos += s
                        block_chains = [F.comp_gens(bl) for bl in blocks]
                        if any(not bc for bc in block_chains):
                            continue
                        for combo, coeff in _tuples(block_chains):
                            term = f.comp_gens(combo + (b,))
                            acc = chain_add(acc, chain_scale(coeff, term))
            if acc:
                table[gens] = acc
        if table:
            comps[d] = table
    disc = pullback_disc(F.disc, f.disc, first_free=True,
                         higher_vanish=F.higher_vanish())
    return PreModHom(pm0, pm1, comps, f.shift, disc)


def pullback_cone(F: WFFunctor, f: PreModHom, pm0: WFModule, pm1: WFModule,
                  rho=None, epsf: Optional[Discrepancy] = None):
    """F*(Cone(f; rho, eps)) and Cone(F*f; rho, eps^{F*f}).

    The two agree as filtration tables (the first pull-back discrepancy
    entry equals eps^f_1, so the bottom shift matches); returns the pair
    for table comparison.
    """
    rho = f.shift if rho is None else rat(rho)
    epsf = f.disc if epsf is None else epsf
    c = cone(f, rho, epsf)
    pulled_cone = pullback_module(F, c)
    pf = pullback_hom(F, f, pm0, pm1)
    pf_eps = pullback_disc(F.disc, epsf, first_free=True,
                           higher_vanish=F.higher_vanish())
    cone_of_pulled = cone(PreModHom(pm0, pm1, pf.components, rho, pf_eps),
                          rho, pf_eps)
    return pulled_cone, cone_of_pulled


# ---------------------------------------------------------------------------
# the lambda map
# ---------------------------------------------------------------------------

def lambda_map(m: WFModule, y: str, c: Chain,
               eps_h: Optional[Discrepancy] = None) -> PreModHom:
    """lambda(c)_d(a_1..a_{d-1}, b) = mu^M_{d+1}(a_1..a_{d-1}, b, c).

    Requires eps^h_d >= eps^M_{d+1} when a target filtration eps_h is
    supplied; lands in hom^{<= A(c); eps_h}.
    """
    cat = m.cat
    yon = yoneda_module(cat, y)
    if eps_h is not None:
        for d in range(1, m.cap):
            if eps_h[d] < m.disc[d + 1]:
                raise WfError("eps^h_d >= eps^M_{d+1} violated")
    comps: MuTable = {}
    for d in range(1, m.cap):
        table: Dict[Tuple[str, ...], Chain] = {}
        for gens in yon.module_tuples(d):
            acc: Chain = {}
            for g_c, s in c.items():
                term = m.mu_gens(gens + (g_c,))
                acc = chain_add(acc, chain_scale(s, term))
            if acc:
                table[gens] = acc
        if table:
            comps[d] = table
    if c:
        shift = action_level(c, m.value(y))
    else:
        shift = Fraction(0)
    return PreModHom(yon, m, comps, shift,
                     eps_h if eps_h is not None else
                     Discrepancy([m.disc[min(d + 1, m.cap)]
                                  for d in range(1, m.cap + 1)], "hom"))


# ---------------------------------------------------------------------------
# unit assumptions
# ---------------------------------------------------------------------------

def check_Ue(cat: WFCategory, zeta=None):
    """mu_2(e_X, e_X) = e_X + mu_1(c) with A(c) <= zeta.

    Returns (ok, minimal-zeta); minimal over the exact linear solve.
    """
    if not cat.units:
        raise WfError("category carries no units")
    floor = 2 * cat.unit_bound + cat.disc[2]
    worst = floor
    for x, e in cat.units.items():
        cx = cat.hom(x, x)
        w = chain_add(cat.mu([e, e]), e)
        if not w:
            continue
        b = boundary_level(w, cx)
        if b >= INF:
            return (False, INF) if zeta is not None else (False, INF)
        worst = max(worst, b)
    ok = True if zeta is None else rat(zeta) >= worst
    return ok, worst


def _unit_action_map(m: WFModule, x: str) -> FilteredMap:
    """b -> mu_2^M(e_X, b) as a filtered map on M(X)."""
    e = m.cat.units[x]
    cx = m.value(x)
    mat = {}
    for g in cx.generators:
        img = m.mu([e], cx.basis_chain(g))
        if img:
            mat[g] = img
    return FilteredMap(cx, cx, mat, 0)


def check_Uw(m: WFModule, kappa=None):
    """Homology version: [mu_2(e, .)] equals the inclusion-induced map.

    Minimal kappa computed over an action-orthogonal cycle basis via
    boundary levels of v(z) - z.
    """
    if not m.cat.units:
        raise WfError("category carries no units")
    floor = m.cat.unit_bound + m.disc[2]
    worst = floor
    for x in m.values:
        cx = m.value(x)
        v = _unit_action_map(m, x)
        for z in _orthogonalize(cycle_basis(cx), cx):
            w = chain_add(v.apply(z), z)
            if not w:
                continue
            b = boundary_level(w, cx)
            if b >= INF:
                return False, INF
            worst = max(worst, b - action_level(z, cx))
    ok = True if kappa is None else rat(kappa) >= worst
    return ok, worst


def check_Us(m: WFModule, kappa=None):
    """Homotopy version: mu_2(e, .) chain homotopic to the identity."""
    if not m.cat.units:
        raise WfError("category carries no units")
    floor = m.cat.unit_bound + m.disc[2]
    worst = floor
    for x in m.values:
        cx = m.value(x)
        v = _unit_action_map(m, x)
        diff = v.add(FilteredMap.identity(cx))
        if not any(diff.matrix.values()):
            continue
        b = homotopical_boundary_level(diff)
        if b >= INF:
            return False, INF
        worst = max(worst, b)
    ok = True if kappa is None else rat(kappa) >= worst
    return ok, worst


def check_URe(cat: WFCategory, y: str, kappa=None):
    """b -> mu_2(b, e_Y) on C(X, Y) chain homotopic to the identity."""
    if not cat.units:
        raise WfError("category carries no units")
    e = cat.units[y]
    floor = cat.disc[2] + cat.unit_bound
    worst = floor
    for x in cat.objects:
        if (x, y) not in cat.homs:
            continue
        cx = cat.hom(x, y)
        mat = {}
        for g in cx.generators:
            img = cat.mu([cx.basis_chain(g), e])
            if img:
                mat[g] = img
        r = FilteredMap(cx, cx, mat, 0)
        diff = r.add(FilteredMap.identity(cx))
        if not any(diff.matrix.values()):
            continue
        b = homotopical_boundary_level(diff)
        if b >= INF:
            return False, INF
        worst = max(worst, b)
    ok = True if kappa is None else rat(kappa) >= worst
    return ok, worst


def unit_square_homotopy(m: WFModule, x: str, c_witness: Chain) -> FilteredMap:
    """h(b) = mu_3(e, e, b) + mu_2(c, b): chain homotopy between v and
    v o v, shifting action by <= max{2u + eps_3, zeta + eps_2}."""
    e = m.cat.units[x]
    cx = m.value(x)
    mat = {}
    for g in cx.generators:
        img = chain_add(m.mu([e, e], cx.basis_chain(g)),
                        m.mu([c_witness], cx.basis_chain(g)))
        if img:
            mat[g] = img
    return FilteredMap(cx, cx, mat, 0)


def assh_cone_kappa(kappa0, kappa1, u, zeta, eps2_c, eps3_c) -> Fraction:
    """kappa = max{2k0, 2k1, 2u + eps_3^C, 2u + 2eps_2^C, zeta + eps_2^C}."""
    kappa0, kappa1, u, zeta = rat(kappa0), rat(kappa1), rat(u), rat(zeta)
    eps2_c, eps3_c = rat(eps2_c), rat(eps3_c)
    return max(2 * kappa0, 2 * kappa1, 2 * u + eps3_c,
               2 * u + 2 * eps2_c, zeta + eps2_c)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def parse_category(text: str, cutoff=64, cap: int = 6) -> WFCategory:
    """Toy-category format::

        object X
        hom X X: gen e action 0 ; gen a action 1/2
        d a = T^1*b
        mu 2 (e,e) -> T^0*e
        disc 0 1/2 1/2 ...
        unit X = T^0*e bound 0
    """
    from .novikov import parse_scalar
    from .filtcx import parse_complex
    objects: List[str] = []
    hom_lines: Dict[Tuple[str, str], List[str]] = {}
    mu: MuTable = {}
    disc_vals = None
    units: Dict[str, Chain] = {}
    unit_bound = Fraction(0)
    gen_home: Dict[str, Tuple[str, str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("object "):
            objects.append(line.split()[1])
        elif line.startswith("hom "):
            head, rest = line[4:].split(":", 1)
            x, y = head.split()
            body = []
            for piece in rest.split(";"):
                piece = piece.strip()
                if piece:
                    body.append(piece)
                    if piece.startswith("gen "):
                        gen_home[piece.split()[1]] = (x, y)
            hom_lines[(x, y)] = hom_lines.get((x, y), []) + body
        elif line.startswith("d "):
            src = line[2:].split("=", 1)[0].strip()
            if src not in gen_home:
                raise WfError(f"differential for unknown generator {src}")
            hom_lines[gen_home[src]].append(line)
        elif line.startswith("mu "):
            head, rhs = line[3:].split("->", 1)
            parts = head.strip().split(None, 1)
            d = int(parts[0])
            gens = tuple(g.strip() for g in
                         parts[1].strip().strip("()").split(","))
            ch: Chain = {}
            for term in rhs.split("+"):
                term = term.strip()
                scal, tgt = term.rsplit("*", 1)
                s = parse_scalar(scal.strip(), cutoff)
                ch = chain_add(ch, {tgt.strip(): s})
            mu.setdefault(d, {})[gens] = ch
        elif line.startswith("disc"):
            disc_vals = [rat(v) for v in line.split()[1:]]
        elif line.startswith("unit "):
            head, rest = line[5:].split("=", 1)
            x = head.strip()
            body = rest
            bound = Fraction(0)
            if " bound " in rest:
                body, btxt = rest.rsplit(" bound ", 1)
                bound = rat(btxt.strip())
            ch = {}
            for term in body.split("+"):
                scal, tgt = term.strip().rsplit("*", 1)
                ch = chain_add(ch, {tgt.strip():
                                    parse_scalar(scal.strip(), cutoff)})
            units[x] = ch
            unit_bound = max(unit_bound, bound)
        else:
            raise WfError(f"unrecognized category line {line!r}")
    homs = {}
    for key, body in hom_lines.items():
        homs[key] = parse_complex("\n".join(body), cutoff)
    if disc_vals is None:
        disc_vals = [0] * cap
    while len(disc_vals) < cap:
        disc_vals.append(disc_vals[-1])
    disc = Discrepancy(disc_vals[:cap], "category")
    return WFCategory(objects, homs, mu, disc, cap=cap,
                      units=units or None, unit_bound=unit_bound)
