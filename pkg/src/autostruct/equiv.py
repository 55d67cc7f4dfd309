"""Automatic equivalence structures and their class-size census.

The census h maps each class size n ∈ N₊ ∪ {ℵ₀} to the number of classes
of that size. It is computed exactly from the presentation: llex-least
representatives are carved out with the order constraint, the pair
relation restricted to representatives is determinized, and per-state
multiplicity vectors (capped just above the queried size) count each
representative's class. The isomorphism checker compares censuses and is
sound for refutation; full isomorphism is only co-semi-decidable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import CensusCapError
from .nfa import PAD, Nfa, run_automaton
from .polynomials import Polynomial, pairing_square, parse_polynomial
from .relations import AlphabetOrder, ExtendedCount, cardinality
from .tracked import (
    ComparatorConstraint,
    Rel,
    constrain,
    determinize_rel,
    diff,
    join,
    project,
    rel_cardinality,
    rel_enumerate,
    rel_is_empty,
    word_track,
)
from .verdicts import ConsistentUpTo, Isomorphic, NonIsomorphic, Verdict
from . import fo

DEFAULT_CENSUS_CAP = 12


@dataclass(frozen=True)
class EquivPresentation:
    """A presentation whose single binary relation E is an equivalence."""

    pres: fo.Presentation

    def __post_init__(self):
        if "E" not in self.pres.relations:
            raise ValueError("equivalence presentations need a relation named E")
        arity, _ = self.pres.relations["E"]
        if arity != 2:
            raise ValueError("E must be binary")

    @property
    def domain(self) -> Nfa:
        return self.pres.domain

    @property
    def order(self) -> AlphabetOrder:
        return self.pres.order

    @property
    def relation(self) -> Nfa:
        return self.pres.relations["E"][1]

    def validate(self, cap: int | None = None) -> bool:
        return fo.validate_equivalence(self.pres, "E", cap)

    def member(self, u, v) -> bool:
        from .relations import convolution

        return self.relation.accepts(convolution([tuple(u), tuple(v)]))

    @cached_property
    def _census(self) -> "_FiberCensus":
        e = Rel.from_nfa(self.relation, ("x", "y"))
        smaller = constrain(
            e, ComparatorConstraint("y", "x", self.order, "llex", strict=True))
        nonleast = project(smaller, "y")
        reps = diff(word_track(self.domain, "x"), nonleast)
        return _FiberCensus(reps, e, "x", "y")


# -- weighted fiber census ---------------------------------------------------------


class _FiberCensus:
    """Counts, per n, the base words whose relational fiber has size n.

    ``base`` is 1-track over ``xvar``; ``rel`` is 2-track over (xvar, yvar).
    Vectors of per-state path multiplicities are capped just above the
    largest queried size, so every answer at or below the cap is exact.
    """

    def __init__(self, base: Rel, rel: Rel, xvar: str, yvar: str):
        self.base = base
        self.rel = rel
        self.xvar = xvar
        self.yvar = yvar
        fib = join(base, rel)
        det = determinize_rel(fib)
        ix = det.vars.index(xvar)
        # split det transitions into x-phase letters and y-suffix edges
        self._xsteps: dict = {}
        suffix: dict = {}
        for (s, col), t in det.step.items():
            if col[ix] != PAD:
                bucket = self._xsteps.setdefault(s, {})
                pairs = bucket.setdefault(col[ix], {})
                pairs[t] = pairs.get(t, 0) + 1
            else:
                suffix.setdefault(s, []).append(t)
        self._final = det.final
        self._initial = det.initial
        self._suffix_count = self._suffix_counts(suffix, det.final)
        self._vector_dfas: dict = {}

    @staticmethod
    def _suffix_counts(suffix: dict, final) -> dict:
        """W(s): number of accepted y-only suffixes from s; None means ℵ₀."""
        from .relations import _topo_or_cycle

        rev: dict = {}
        for s, ts in suffix.items():
            for t in ts:
                rev.setdefault(t, []).append(s)
        live = set(final)
        stack = list(live)
        while stack:
            q = stack.pop()
            for s in rev.get(q, ()):
                if s not in live:
                    live.add(s)
                    stack.append(s)
        restricted = {s: [t for t in ts if t in live]
                      for s, ts in suffix.items() if s in live}
        order = _topo_or_cycle(sorted(live), restricted)
        counts: dict = {}
        if order is None:
            # some suffix cycle exists; mark states reaching a cycle as ℵ₀
            cyc = fo._cycle_states(restricted)
            rev2: dict = {}
            for s, ts in restricted.items():
                for t in ts:
                    rev2.setdefault(t, []).append(s)
            inf_states = set(cyc)
            stack = list(inf_states)
            while stack:
                q = stack.pop()
                for s in rev2.get(q, ()):
                    if s not in inf_states:
                        inf_states.add(s)
                        stack.append(s)
            # count the rest by topological order of the acyclic remainder
            acyclic = {s: [t for t in ts if t not in inf_states]
                       for s, ts in restricted.items() if s not in inf_states}
            order2 = _topo_or_cycle(sorted(set(live) - inf_states), acyclic)
            for q in reversed(order2 or []):
                total = 1 if q in final else 0
                for t in acyclic.get(q, ()):
                    total += counts[t]
                counts[q] = total
            for q in inf_states:
                counts[q] = None
        else:
            for q in reversed(order):
                total = 1 if q in final else 0
                for t in restricted.get(q, ()):
                    total += counts[t]
                counts[q] = total
        return counts

    def _vector_dfa(self, cap: int):
        """Deterministic automaton over x-letters; states are capped
        multiplicity vectors, each annotated with its exact-or-overflow
        fiber size (None = ℵ₀)."""
        if cap in self._vector_dfas:
            return self._vector_dfas[cap]
        hard = cap + 1
        start = ((self._initial, 1),)
        index = {start: 0}
        order = [start]
        steps: dict = {}
        outs: list = []
        i = 0
        while i < len(order):
            vec = order[i]
            total = 0
            infinite = False
            for s, c in vec:
                w = self._suffix_count.get(s, 0)
                if w is None:
                    infinite = True
                    break
                total += c * w
                if total > hard:
                    total = hard
            outs.append(None if infinite else min(total, hard))
            bucket: dict = {}
            for s, c in vec:
                for letter, targets in self._xsteps.get(s, {}).items():
                    acc = bucket.setdefault(letter, {})
                    for t, mult in targets.items():
                        acc[t] = min(hard, acc.get(t, 0) + c * mult)
            for letter, acc in bucket.items():
                key = tuple(sorted(acc.items()))
                if key not in index:
                    index[key] = len(order)
                    order.append(key)
                steps[(i, letter)] = index[key]
            i += 1
        dfa = (steps, outs)
        self._vector_dfas[cap] = dfa
        return dfa

    def count_fiber_size(self, n: int, cap: int) -> ExtendedCount:
        """|{x in base : fiber(x) = n}| for 1 <= n <= cap, exactly."""
        if not 1 <= n <= cap:
            raise CensusCapError(f"size {n} outside census cap {cap}")
        steps, outs = self._vector_dfa(cap)
        finals = {i for i, o in enumerate(outs) if o == n}
        return self._count_words(steps, finals, len(outs))

    def count_infinite_fiber(self) -> ExtendedCount:
        steps, outs = self._vector_dfa(1)
        finals = {i for i, o in enumerate(outs) if o is None}
        return self._count_words(steps, finals, len(outs))

    def count_empty_fiber(self) -> ExtendedCount:
        """Base words with no partner at all."""
        paired = project(join(self.base, self.rel), self.yvar)
        return rel_cardinality(diff(self.base, paired))

    @staticmethod
    def _count_words(steps: dict, finals: set, n_states: int) -> ExtendedCount:
        from .relations import _topo_or_cycle

        if not finals:
            return ExtendedCount.finite(0)
        adj: dict = {}
        for (s, _), t in steps.items():
            adj.setdefault(s, []).append(t)
        rev: dict = {}
        for s, ts in adj.items():
            for t in ts:
                rev.setdefault(t, []).append(s)
        live = set(finals)
        stack = list(live)
        while stack:
            q = stack.pop()
            for s in rev.get(q, ()):
                if s not in live:
                    live.add(s)
                    stack.append(s)
        if 0 not in live:
            return ExtendedCount.finite(0)
        restricted = {s: [t for t in ts if t in live]
                      for s, ts in adj.items() if s in live}
        order = _topo_or_cycle([0], restricted)
        if order is None:
            return ExtendedCount.INFINITE
        counts: dict = {}
        for q in reversed(order):
            total = 1 if q in finals else 0
            for t in restricted.get(q, ()):
                total += counts[t]
            counts[q] = total
        return ExtendedCount.finite(counts.get(0, 0))


# -- census surface ----------------------------------------------------------------


@dataclass
class SizeCensus:
    """Recorded census queries: class size -> number of classes."""

    entries: dict = field(default_factory=dict)

    def record(self, size, count: ExtendedCount):
        key = "inf" if size is ExtendedCount.INFINITE or size is None else int(size)
        self.entries[key] = count
        return count

    def to_json(self) -> dict:
        return {str(k): ("inf" if v.is_infinite else v.value)
                for k, v in self.entries.items()}


def class_size_count(ep: EquivPresentation, size, cap: int = DEFAULT_CENSUS_CAP
                     ) -> ExtendedCount:
    """h_E(size): the number of equivalence classes of the given size.

    ``size`` is a positive int or ExtendedCount.INFINITE / None for ℵ₀.
    Finite queries above ``cap`` raise CensusCapError.
    """
    census = ep._census
    if size is None or size is ExtendedCount.INFINITE or \
            (isinstance(size, ExtendedCount) and size.is_infinite):
        return census.count_infinite_fiber()
    size = int(size)
    if size < 1:
        raise ValueError("class sizes start at 1")
    if size > cap:
        raise CensusCapError(
            f"class size {size} exceeds the census cap {cap}")
    return census.count_fiber_size(size, cap)


# -- gadget constructions ----------------------------------------------------------


def equiv_from_poly(p: Polynomial, k: int, letter: str = "a") -> EquivPresentation:
    """E(p): runs of the p-ambiguity automaton, equivalent when they
    project to the same input word; the class over a^{c̄} has p(c̄) members."""
    from .nfa import poly_automaton_conv

    a = poly_automaton_conv(p, k, letter)
    return equiv_of_runs(a)


def equiv_of_runs(a: Nfa) -> EquivPresentation:
    """The run-fiber equivalence of an automaton with ε ∉ L(a)."""
    run, pi = run_automaton(a)
    if run.accepts_empty():
        raise ValueError("run-fiber structures need ε outside the language")
    letters = run.alphabet
    rel = _pi_pair_automaton(run, pi)
    pres = fo.Presentation(AlphabetOrder(letters), run, {"E": (2, rel)})
    return EquivPresentation(pres)


def _pi_pair_automaton(run: Nfa, pi: dict) -> Nfa:
    """Pairs of runs with letterwise-equal projection (equal lengths)."""
    groups: dict = {}
    for i, letter in enumerate(run.alphabet):
        groups.setdefault(pi[letter], []).append(i)
    cols = []
    for sym, members in sorted(groups.items(), key=lambda kv: str(kv[0])):
        for i in members:
            for j in members:
                cols.append((run.alphabet[i], run.alphabet[j]))
    col_index = {c: i for i, c in enumerate(cols)}
    out = run.out_map
    index: dict = {}
    order: list = []

    def sid(st):
        if st not in index:
            index[st] = len(order)
            order.append(st)
        return index[st]

    for p in sorted(run.initial):
        for q in sorted(run.initial):
            sid((p, q))
    trans = []
    i = 0
    while i < len(order):
        p, q = order[i]
        for y1, d1 in out.get(p, ()):
            l1 = run.alphabet[y1]
            for y2, d2 in out.get(q, ()):
                l2 = run.alphabet[y2]
                if pi[l1] == pi[l2]:
                    trans.append((i, col_index[(l1, l2)], sid((d1, d2))))
        i += 1
    finals = [i for i, (p, q) in enumerate(order)
              if p in run.final and q in run.final]
    return Nfa.make(tuple(cols), max(len(order), 1),
                    list(range(len(run.initial) ** 2)), finals, trans).trim()


def tag_letters(pres: fo.Presentation, tag: str) -> fo.Presentation:
    """Prefix every base letter with ``tag:`` to force disjoint alphabets."""
    mapping = {letter: f"{tag}:{letter}" for letter in pres.order.letters}

    def map_sym(sym):
        if isinstance(sym, tuple):
            return tuple(mapping.get(x, x) if x != PAD else PAD for x in sym)
        return mapping[sym]

    domain = pres.domain.relabel({s: map_sym(s) for s in pres.domain.alphabet})
    rels = {}
    for name, (arity, aut) in pres.relations.items():
        rels[name] = (arity, aut.relabel({s: map_sym(s) for s in aut.alphabet}))
    return fo.Presentation(AlphabetOrder(tuple(mapping[x] for x in pres.order.letters)),
                           domain, rels)


def presentation_union(p1: fo.Presentation, p2: fo.Presentation) -> fo.Presentation:
    """Disjoint union of two presentations over disjoint alphabets."""
    if set(p1.order.letters) & set(p2.order.letters):
        raise ValueError("presentation union needs disjoint alphabets")
    letters = p1.order.letters + p2.order.letters
    from .nfa import nfa_union

    domain = nfa_union(p1.domain.with_alphabet(letters),
                       p2.domain.with_alphabet(letters))
    rels = {}
    names = set(p1.relations) | set(p2.relations)
    for name in names:
        parts = []
        arity = None
        for p in (p1, p2):
            if name in p.relations:
                ar, aut = p.relations[name]
                if arity is None:
                    arity = ar
                elif arity != ar:
                    raise ValueError(f"arity clash for {name!r}")
                parts.append(aut)
        merged_cols = tuple(sorted({c for a in parts for c in a.alphabet}))
        acc = parts[0].with_alphabet(merged_cols)
        for extra in parts[1:]:
            acc = nfa_union(acc, extra.with_alphabet(merged_cols))
        rels[name] = (arity, acc)
    return fo.Presentation(AlphabetOrder(letters), domain, rels)


COUNTER = "$"


def flatten_counter_letter(counter_part: str, inner: str) -> str:
    return f"{counter_part}&{inner}"


def omega_copies(pres: fo.Presentation, counter: str = COUNTER) -> fo.Presentation:
    """ℵ₀ disjoint copies: each element u becomes $^j ⊗ u for j ≥ 0,
    flattened to an ordinary base alphabet; relations hold within a copy."""
    if pres.domain.accepts_empty():
        raise ValueError("omega_copies needs ε outside the domain")
    letters = pres.order.letters
    flat = []
    for c in (counter, PAD):
        for x in letters + (PAD,):
            if c == PAD and x == PAD:
                continue
            flat.append(flatten_counter_letter(c, x))
    flat = tuple(flat)
    flat_index = {s: i for i, s in enumerate(flat)}

    domain = _copies_domain(pres.domain, counter, flat, flat_index)
    rels = {}
    for name, (arity, aut) in pres.relations.items():
        if arity != 2:
            raise ValueError("omega_copies supports binary relations")
        rels[name] = (2, _copies_relation(aut, counter))
    return fo.Presentation(AlphabetOrder(flat), domain, rels)


def _copies_domain(domain: Nfa, counter: str, flat, flat_index) -> Nfa:
    DONE = -1
    index: dict = {}
    order: list = []

    def sid(st):
        if st not in index:
            index[st] = len(order)
            order.append(st)
        return index[st]

    starts = [(True, q) for q in sorted(domain.initial)]
    for st in starts:
        sid(st)
    trans = []
    out = domain.out_map
    i = 0
    while i < len(order):
        counting, d = order[i]
        copts = [counter, PAD] if counting else [PAD]
        for c in copts:
            nc = counting and c == counter
            if d == DONE:
                if c == counter:
                    trans.append((i, flat_index[flatten_counter_letter(c, PAD)],
                                  sid((nc, DONE))))
                continue
            for y, t in out.get(d, ()):
                letter = domain.alphabet[y]
                trans.append((i, flat_index[flatten_counter_letter(c, letter)],
                              sid((nc, t))))
            if d in domain.final and c == counter:
                trans.append((i, flat_index[flatten_counter_letter(c, PAD)],
                              sid((nc, DONE))))
        i += 1
    finals = [ix for ix, (counting, d) in enumerate(order)
              if d == DONE or d in domain.final]
    return Nfa.make(flat, max(len(order), 1),
                    [index[st] for st in starts], finals, trans).trim()


def _copies_relation(rel: Nfa, counter: str) -> Nfa:
    """(($^j ⊗ u), ($^j ⊗ v)) for (u, v) in the relation."""
    FIN = -1
    inner_cols = {}
    for i, sym in enumerate(rel.alphabet):
        inner_cols[sym] = i
    out = rel.out_map
    index: dict = {}
    order: list = []

    def sid(st):
        if st not in index:
            index[st] = len(order)
            order.append(st)
        return index[st]

    starts = [(True, q) for q in sorted(rel.initial)]
    for st in starts:
        sid(st)
    cols: dict = {}
    trans = []

    def col_id(c1, x1, c2, x2):
        left = PAD if (c1 == PAD and x1 == PAD) else flatten_counter_letter(c1, x1)
        right = PAD if (c2 == PAD and x2 == PAD) else flatten_counter_letter(c2, x2)
        col = (left, right)
        if col not in cols:
            cols[col] = len(cols)
        return cols[col]

    i = 0
    while i < len(order):
        counting, e = order[i]
        copts = [counter, PAD] if counting else [PAD]
        for c in copts:
            nc = counting and c == counter
            if e == FIN:
                if c == counter:
                    trans.append((i, col_id(c, PAD, c, PAD), sid((nc, FIN))))
                continue
            for y, t in out.get(e, ()):
                x1, x2 = rel.alphabet[y]
                trans.append((i, col_id(c, x1, c, x2), sid((nc, t))))
            if e in rel.final and c == counter:
                trans.append((i, col_id(c, PAD, c, PAD), sid((nc, FIN))))
        i += 1
    col_list = [None] * len(cols)
    for col, ix in cols.items():
        col_list[ix] = col
    finals = [ix for ix, (counting, e) in enumerate(order)
              if e == FIN or (e != FIN and e in rel.final)]
    return Nfa.make(tuple(col_list), max(len(order), 1),
                    [index[st] for st in starts], finals, trans).trim()


def good_component_polynomials() -> tuple:
    """S₂ = C(x1+x2, x1) and S₃ = C(x1, x1+x2): together they realize
    exactly the off-diagonal values of the pairing combiner."""
    x1 = parse_polynomial("x1", nvars=2)
    x2 = parse_polynomial("x2", nvars=2)
    return pairing_square(x1 + x2, x1), pairing_square(x1, x1 + x2)


def build_e_good() -> EquivPresentation:
    """The target structure: ℵ₀ classes of every off-diagonal combined size."""
    s2, s3 = good_component_polynomials()
    e2 = tag_letters(equiv_from_poly(s2, 2).pres, "2")
    e3 = tag_letters(equiv_from_poly(s3, 2).pres, "3")
    merged = presentation_union(e2, e3)
    return EquivPresentation(omega_copies(merged))


def e_good_reduction(p1: Polynomial, p2: Polynomial, k: int | None = None
                     ) -> EquivPresentation:
    """The reduction structure for a polynomial pair.

    Isomorphic to the target of build_e_good exactly when p1(c̄) ≠ p2(c̄)
    for every all-positive c̄.
    """
    if p1.is_zero or p2.is_zero:
        raise ValueError("both polynomials must be non-zero")
    k_eff = max(k or 0, 2, p1.nvars, p2.nvars)
    p1w, p2w = p1.widen(k_eff), p2.widen(k_eff)
    s1 = pairing_square(p1w, p2w)
    s2, s3 = good_component_polynomials()
    e1 = tag_letters(equiv_from_poly(s1, k_eff).pres, "1")
    e2 = tag_letters(equiv_from_poly(s2, 2).pres, "2")
    e3 = tag_letters(equiv_from_poly(s3, 2).pres, "3")
    merged = presentation_union(presentation_union(e1, e2), e3)
    return EquivPresentation(omega_copies(merged))


# -- isomorphism checking ----------------------------------------------------------


def finite_class_sizes(ep: EquivPresentation, limit: int = 4096) -> list:
    """All class sizes of a finite structure, by enumeration."""
    card = cardinality(ep.domain)
    if card.is_infinite:
        raise ValueError("finite_class_sizes needs a finite domain")
    words = rel_enumerate(word_track(ep.domain, "x"), card.value)
    if len(words) != card.value or card.value > limit:
        raise ValueError("domain enumeration failed")
    sizes = []
    remaining = set(words)
    while remaining:
        u = remaining.pop()
        cls = {u}
        for v in list(remaining):
            if ep.member(u, v):
                cls.add(v)
                remaining.discard(v)
        sizes.append(len(cls))
    return sorted(sizes)


def iso_check_equiv(e1: EquivPresentation, e2: EquivPresentation,
                    bound: int) -> Verdict:
    """Compare censuses over {1..bound} ∪ {ℵ₀}.

    NonIsomorphic verdicts carry the differing size with both counts and
    are always sound; Isomorphic is only claimed for finite structures.
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    finite1 = not cardinality(e1.domain).is_infinite
    finite2 = not cardinality(e2.domain).is_infinite
    if finite1 != finite2:
        witness = {"kind": "domain_cardinality",
                   "left": cardinality(e1.domain),
                   "right": cardinality(e2.domain)}
        return NonIsomorphic(witness)
    if finite1 and finite2:
        s1, s2 = finite_class_sizes(e1), finite_class_sizes(e2)
        if s1 == s2:
            return Isomorphic()
        for n in sorted(set(s1) | set(s2)):
            c1, c2 = s1.count(n), s2.count(n)
            if c1 != c2:
                return NonIsomorphic({"kind": "class_size", "size": n,
                                      "left": ExtendedCount.finite(c1),
                                      "right": ExtendedCount.finite(c2)})
    for n in list(range(1, bound + 1)) + [None]:
        h1 = class_size_count(e1, n, cap=bound)
        h2 = class_size_count(e2, n, cap=bound)
        if h1 != h2:
            return NonIsomorphic({"kind": "class_size",
                                  "size": "inf" if n is None else n,
                                  "left": h1, "right": h2})
    return ConsistentUpTo({"size_bound": bound})


def census_sweep(ep: EquivPresentation, bound: int) -> SizeCensus:
    out = SizeCensus()
    for n in range(1, bound + 1):
        out.record(n, class_size_count(ep, n, cap=bound))
    out.record(None, class_size_count(ep, None, cap=bound))
    return out
