"""Joins of track-named relation automata.

A Rel is an NFA whose letters are columns aligned to a sorted tuple of
track names. Joins synchronize two Rels on their shared tracks, handling
the pad discipline of convolutions: a component whose tracks have all been
exhausted freezes (it must sit on a final state) while the others continue.
Per-state transition lists stay sparse, so joins never materialize the
(|Σ|+1)^k column alphabet; constraints with dense transition structure
(word-order comparators) participate symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import CapExceeded
from .nfa import PAD, Nfa
from .relations import AlphabetOrder, ExtendedCount

FROZEN = "frozen"


@dataclass(frozen=True)
class Rel:
    """Column-NFA over named tracks; ``trans[s]`` lists (column, dst)."""

    vars: tuple
    n: int
    initial: frozenset
    final: frozenset
    trans: tuple  # tuple of tuples of (col, dst), indexed by state

    def out(self, s: int):
        return self.trans[s] if 0 <= s < len(self.trans) else ()

    @property
    def arity(self) -> int:
        return len(self.vars)

    @property
    def truth(self) -> bool:
        """For 0-ary relations: whether the unit language is non-empty."""
        if self.vars:
            raise ValueError("truth is defined for 0-ary relations only")
        return bool(self.initial & self.final)

    def accepts(self, cols: Sequence) -> bool:
        states = set(self.initial)
        for col in cols:
            nxt = set()
            for s in states:
                for c, d in self.out(s):
                    if c == col:
                        nxt.add(d)
            states = nxt
            if not states:
                return False
        return bool(states & self.final)

    def accepts_tracks(self, assignment: dict) -> bool:
        """Membership for a named assignment of words to tracks."""
        words = [tuple(assignment[v]) for v in self.vars]
        length = max((len(w) for w in words), default=0)
        cols = [tuple(w[i] if i < len(w) else PAD for w in words)
                for i in range(length)]
        return self.accepts(cols)

    @staticmethod
    def from_nfa(nfa: Nfa, var_names: Sequence[str]) -> "Rel":
        """Wrap a (tuple- or base-alphabet) automaton as a named relation.

        ``var_names`` name the automaton's tracks in its own entry order;
        tracks are re-sorted by name.
        """
        names = tuple(var_names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate track names")
        arity = len(names)
        perm = sorted(range(arity), key=lambda i: names[i])
        svars = tuple(names[i] for i in perm)
        cols = []
        for sym in nfa.alphabet:
            if arity == 1:
                if isinstance(sym, tuple):
                    if len(sym) != 1:
                        raise ValueError("arity mismatch")
                    entry = sym
                else:
                    entry = (sym,)
            else:
                if not isinstance(sym, tuple) or len(sym) != arity:
                    raise ValueError("arity mismatch")
                entry = sym
            cols.append(tuple(entry[i] for i in perm))
        trans: list = [[] for _ in range(nfa.n_states)]
        for s, y, d in nfa.transitions:
            trans[s].append((cols[y], d))
        return Rel(svars, nfa.n_states, nfa.initial, nfa.final,
                   tuple(tuple(t) for t in trans))

    def to_nfa(self) -> Nfa:
        """Back to an Nfa; arity 1 yields a base-alphabet automaton."""
        colset = sorted({c for row in self.trans for c, _ in row},
                        key=lambda c: tuple(str(x) for x in c))
        if self.arity == 1:
            alphabet = tuple(c[0] for c in colset)
            index = {c: i for i, c in enumerate(colset)}
        else:
            alphabet = tuple(colset)
            index = {c: i for i, c in enumerate(colset)}
        trans = []
        for s, row in enumerate(self.trans):
            for c, d in row:
                trans.append((s, index[c], d))
        return Nfa.make(alphabet, max(self.n, 1), self.initial, self.final, trans)

    def rename(self, mapping: dict) -> "Rel":
        new_names = tuple(mapping.get(v, v) for v in self.vars)
        if len(set(new_names)) != len(new_names):
            raise ValueError("rename collides track names")
        perm = sorted(range(len(new_names)), key=lambda i: new_names[i])
        svars = tuple(new_names[i] for i in perm)
        trans = tuple(
            tuple((tuple(c[i] for i in perm), d) for c, d in row)
            for row in self.trans)
        return Rel(svars, self.n, self.initial, self.final, trans)

    def trim(self) -> "Rel":
        fwd = set(self.initial)
        stack = list(fwd)
        while stack:
            q = stack.pop()
            for _, d in self.out(q):
                if d not in fwd:
                    fwd.add(d)
                    stack.append(d)
        rev: dict = {}
        for s in range(self.n):
            for _, d in self.out(s):
                rev.setdefault(d, []).append(s)
        bwd = set(self.final)
        stack = list(bwd)
        while stack:
            q = stack.pop()
            for s in rev.get(q, ()):
                if s not in bwd:
                    bwd.add(s)
                    stack.append(s)
        keep = sorted(fwd & bwd)
        if not keep:
            return Rel(self.vars, 1, frozenset([0]), frozenset(), ((),))
        remap = {q: i for i, q in enumerate(keep)}
        trans = tuple(
            tuple((c, remap[d]) for c, d in self.out(q) if d in remap)
            for q in keep)
        return Rel(self.vars, len(keep),
                   frozenset(remap[q] for q in self.initial if q in remap),
                   frozenset(remap[q] for q in self.final if q in remap),
                   trans)


def word_track(nfa: Nfa, var: str) -> Rel:
    """A domain automaton as a 1-track relation."""
    return Rel.from_nfa(nfa, (var,))


def equality_rel(domain: Nfa, x: str, y: str) -> Rel:
    """{(w, w) : w ∈ L(domain)} as a 2-track relation."""
    if x == y:
        raise ValueError("equality needs two distinct tracks")
    trans: list = [[] for _ in range(domain.n_states)]
    names = (x, y)
    for s, sym, d in domain.transitions:
        letter = domain.alphabet[sym]
        if isinstance(letter, tuple):
            raise ValueError("equality_rel expects a base-alphabet domain")
        trans[s].append(((letter, letter), d))
    return Rel(tuple(sorted(names)), domain.n_states, domain.initial,
               domain.final, tuple(tuple(t) for t in trans))


class SymbolicConstraint:
    """Deterministic constraint over a subset of a driver's tracks.

    Subclasses provide ``initial``, ``step(state, subcol) -> state|None``
    and ``is_final(state)``. The constraint never introduces columns of its
    own; it prunes a join driven by explicit relations.
    """

    vars: tuple

    def initial(self):  # pragma: no cover - interface
        raise NotImplementedError

    def step(self, state, subcol):  # pragma: no cover - interface
        raise NotImplementedError

    def is_final(self, state) -> bool:  # pragma: no cover - interface
        raise NotImplementedError


class ComparatorConstraint(SymbolicConstraint):
    """u (<|<=)_{lex|llex} v over tracks (x, y) without materialization."""

    def __init__(self, x: str, y: str, order: AlphabetOrder, kind: str,
                 strict: bool = False):
        if kind not in ("lex", "llex"):
            raise ValueError(f"unknown order kind {kind!r}")
        self.vars = tuple(sorted((x, y)))
        self._flip = self.vars != (x, y)
        self._ranks = order.rank_map
        self._kind = kind
        self._strict = strict

    def initial(self):
        return 0

    def step(self, state, subcol):
        a, b = subcol
        if self._flip:
            a, b = b, a
        length_dominates = self._kind == "llex"
        if a != PAD and b != PAD:
            if a == b:
                return state
            ra, rb = self._ranks.get(a), self._ranks.get(b)
            if ra is None or rb is None:
                return None
            if state == 0:
                return 1 if ra < rb else 2
            return state
        if a == PAD and b == PAD:
            return state  # only reachable via frozen handling
        if a == PAD:
            if state in (0, 3) or length_dominates:
                return 3
            return state if state in (1, 2) else None
        if state in (0, 4) or length_dominates:
            return 4
        return state if state in (1, 2) else None

    def is_final(self, state) -> bool:
        return state in ((1, 3) if self._strict else (0, 1, 3))


def join(r1: Rel, r2: Rel, cap: int | None = None) -> Rel:
    """Synchronized product on shared tracks with pad-freezing."""
    budget = cap if cap is not None else 10_000_000
    merged_vars = tuple(sorted(set(r1.vars) | set(r2.vars)))
    pos = {v: i for i, v in enumerate(merged_vars)}
    idx1 = [pos[v] for v in r1.vars]
    idx2 = [pos[v] for v in r2.vars]
    shared = sorted(set(r1.vars) & set(r2.vars))
    sh1 = [r1.vars.index(v) for v in shared]
    sh2 = [r2.vars.index(v) for v in shared]
    only2 = [i for i, v in enumerate(r2.vars) if v not in r1.vars]

    # index r2's transitions per state by shared projection
    index2: list = []
    for s in range(r2.n):
        bucket: dict = {}
        for c, d in r2.out(s):
            bucket.setdefault(tuple(c[i] for i in sh2), []).append((c, d))
        index2.append(bucket)
    pads_shared = tuple(PAD for _ in shared)

    def freezable1(s):
        return s in r1.final

    def freezable2(s):
        return s in r2.final

    state_ix: dict = {}
    order: list = []

    def sid(st):
        if st not in state_ix:
            if len(order) >= budget:
                raise CapExceeded(f"join exceeded {budget} states")
            state_ix[st] = len(order)
            order.append(st)
        return state_ix[st]

    inits1 = list(r1.initial) + ([FROZEN] if r1.initial & r1.final else [])
    inits2 = list(r2.initial) + ([FROZEN] if r2.initial & r2.final else [])
    start = [(a, b) for a in inits1 for b in inits2]
    for st in start:
        sid(st)
    def merged_col(c1, c2):
        col = [PAD] * len(merged_vars)
        if c1 is not None:
            for j, p in enumerate(idx1):
                col[p] = c1[j]
        if c2 is not None:
            for j, p in enumerate(idx2):
                col[p] = c2[j]
        return tuple(col)

    out_rows: list = []
    i = 0
    while i < len(order):
        s1, s2 = order[i]
        row: list = []
        if s1 != FROZEN and s2 != FROZEN:
            for c1, d1 in r1.out(s1):
                proj = tuple(c1[j] for j in sh1)
                for c2, d2 in index2[s2].get(proj, ()):
                    row.append((merged_col(c1, c2), sid((d1, d2))))
            if freezable1(s1):
                for c2, d2 in index2[s2].get(pads_shared, ()):
                    col = merged_col(None, c2)
                    if any(x != PAD for x in col):
                        row.append((col, sid((FROZEN, d2))))
            if freezable2(s2):
                for c1, d1 in r1.out(s1):
                    if all(c1[j] == PAD for j in sh1):
                        col = merged_col(c1, None)
                        if any(x != PAD for x in col):
                            row.append((col, sid((d1, FROZEN))))
        elif s1 == FROZEN and s2 != FROZEN:
            for c2, d2 in index2[s2].get(pads_shared, ()):
                col = merged_col(None, c2)
                if any(x != PAD for x in col):
                    row.append((col, sid((FROZEN, d2))))
        elif s2 == FROZEN and s1 != FROZEN:
            for c1, d1 in r1.out(s1):
                if all(c1[j] == PAD for j in sh1):
                    col = merged_col(c1, None)
                    if any(x != PAD for x in col):
                        row.append((col, sid((d1, FROZEN))))
        out_rows.append(row)
        i += 1

    finals = []
    for ix, (s1, s2) in enumerate(order):
        ok1 = s1 == FROZEN or s1 in r1.final
        ok2 = s2 == FROZEN or s2 in r2.final
        if ok1 and ok2:
            finals.append(ix)
    initials = [state_ix[st] for st in start]
    return Rel(merged_vars, max(len(order), 1), frozenset(initials),
               frozenset(finals), tuple(tuple(r) for r in out_rows)).trim()


def constrain(driver: Rel, constraint: SymbolicConstraint,
              cap: int | None = None) -> Rel:
    """Prune a driver by a symbolic constraint over a subset of its tracks."""
    missing = set(constraint.vars) - set(driver.vars)
    if missing:
        raise ValueError(f"constraint tracks {missing} not in driver")
    budget = cap if cap is not None else 10_000_000
    sub = [driver.vars.index(v) for v in constraint.vars]
    state_ix: dict = {}
    order: list = []

    def sid(st):
        if st not in state_ix:
            if len(order) >= budget:
                raise CapExceeded(f"constrain exceeded {budget} states")
            state_ix[st] = len(order)
            order.append(st)
        return state_ix[st]

    c0 = constraint.initial()
    start = [(q, c0) for q in driver.initial]
    for st in start:
        sid(st)
    rows: list = []
    i = 0
    while i < len(order):
        q, cs = order[i]
        row = []
        for col, d in driver.out(q):
            subcol = tuple(col[j] for j in sub)
            nxt = constraint.step(cs, subcol)
            if nxt is not None:
                row.append((col, sid((d, nxt))))
        rows.append(row)
        i += 1
    finals = [ix for ix, (q, cs) in enumerate(order)
              if q in driver.final and constraint.is_final(cs)]
    return Rel(driver.vars, max(len(order), 1),
               frozenset(state_ix[st] for st in start), frozenset(finals),
               tuple(tuple(r) for r in rows)).trim()


def union_rel(r1: Rel, r2: Rel) -> Rel:
    if r1.vars != r2.vars:
        raise ValueError("union needs identical track sets")
    shift = r1.n
    trans = list(r1.trans) + [tuple((c, d + shift) for c, d in row)
                              for row in r2.trans]
    return Rel(r1.vars, r1.n + r2.n,
               r1.initial | frozenset(q + shift for q in r2.initial),
               r1.final | frozenset(q + shift for q in r2.final),
               tuple(trans))


def project(rel: Rel, var: str) -> Rel:
    """Existential projection: delete a track and contract its tail columns."""
    if var not in rel.vars:
        raise ValueError(f"no track {var!r}")
    i = rel.vars.index(var)
    new_vars = tuple(v for v in rel.vars if v != var)
    eps: dict = {}
    rows: list = []
    for s in range(rel.n):
        row = set()
        for c, d in rel.out(s):
            reduced = c[:i] + c[i + 1:]
            if new_vars and any(x != PAD for x in reduced):
                row.add((reduced, d))
            else:
                eps.setdefault(s, set()).add(d)
        rows.append(tuple(sorted(row, key=lambda t: (tuple(map(str, t[0])), t[1]))))
    # final extension through trailing var-only columns
    rev: dict = {}
    for s, ds in eps.items():
        for d in ds:
            rev.setdefault(d, []).append(s)
    finals = set(rel.final)
    stack = list(finals)
    while stack:
        q = stack.pop()
        for s in rev.get(q, ()):
            if s not in finals:
                finals.add(s)
                stack.append(s)
    return Rel(new_vars, rel.n, rel.initial, frozenset(finals),
               tuple(rows)).trim() if new_vars else Rel(
        new_vars, rel.n, rel.initial, frozenset(finals), tuple(() for _ in range(rel.n)))


@dataclass
class DetRel:
    """Deterministic column automaton with an implicit reject sink."""

    vars: tuple
    n: int
    initial: int
    final: frozenset
    step: dict  # (state, col) -> state

    def run(self, cols) -> bool:
        s = self.initial
        for c in cols:
            nxt = self.step.get((s, c))
            if nxt is None:
                return False
            s = nxt
        return s in self.final


def determinize_rel(rel: Rel, cap: int | None = None) -> DetRel:
    budget = cap if cap is not None else 5_000_000
    start = frozenset(rel.initial)
    ix = {start: 0}
    order = [start]
    step: dict = {}
    i = 0
    while i < len(order):
        subset = order[i]
        bucket: dict = {}
        for q in subset:
            for c, d in rel.out(q):
                bucket.setdefault(c, set()).add(d)
        for c, ds in bucket.items():
            key = frozenset(ds)
            if key not in ix:
                if len(order) >= budget:
                    raise CapExceeded(f"determinize_rel exceeded {budget} states")
                ix[key] = len(order)
                order.append(key)
            step[(i, c)] = ix[key]
        i += 1
    finals = frozenset(i for i, sub in enumerate(order) if sub & rel.final)
    return DetRel(rel.vars, len(order), 0, finals, step)


def diff(a: Rel, b: Rel, cap: int | None = None) -> Rel:
    """L(a) ∖ L(b); a drives, b is determinized with an implicit sink."""
    if a.vars != b.vars:
        raise ValueError("difference needs identical track sets")
    det = determinize_rel(b, cap)
    SINK = -1
    state_ix: dict = {}
    order: list = []

    def sid(st):
        if st not in state_ix:
            state_ix[st] = len(order)
            order.append(st)
        return state_ix[st]

    start = [(q, det.initial) for q in a.initial]
    for st in start:
        sid(st)
    rows: list = []
    i = 0
    while i < len(order):
        q, d = order[i]
        row = []
        for c, t in a.out(q):
            nd = det.step.get((d, c), SINK) if d != SINK else SINK
            row.append((c, sid((t, nd))))
        rows.append(tuple(row))
        i += 1
    finals = [ix for ix, (q, d) in enumerate(order)
              if q in a.final and (d == SINK or d not in det.final)]
    return Rel(a.vars, max(len(order), 1),
               frozenset(state_ix[st] for st in start),
               frozenset(finals), tuple(rows)).trim()


def intersect_det(a: Rel, det: DetRel) -> Rel:
    """L(a) ∩ L(det); a drives."""
    if a.vars != det.vars:
        raise ValueError("intersection needs identical track sets")
    state_ix: dict = {}
    order: list = []

    def sid(st):
        if st not in state_ix:
            state_ix[st] = len(order)
            order.append(st)
        return state_ix[st]

    start = [(q, det.initial) for q in a.initial]
    for st in start:
        sid(st)
    rows: list = []
    i = 0
    while i < len(order):
        q, d = order[i]
        row = []
        for c, t in a.out(q):
            nd = det.step.get((d, c))
            if nd is not None:
                row.append((c, sid((t, nd))))
        rows.append(tuple(row))
        i += 1
    finals = [ix for ix, (q, d) in enumerate(order)
              if q in a.final and d in det.final]
    return Rel(a.vars, max(len(order), 1),
               frozenset(state_ix[st] for st in start),
               frozenset(finals), tuple(rows)).trim()


def rel_is_empty(rel: Rel) -> bool:
    t = rel.trim()
    return not (t.initial and t.final)


def rel_cardinality(rel: Rel, cap: int | None = None) -> ExtendedCount:
    det = determinize_rel(rel, cap)
    adj: dict = {}
    for (s, _), t in det.step.items():
        adj.setdefault(s, []).append(t)
    # restrict to states co-accessible to finals
    rev: dict = {}
    for s, ts in adj.items():
        for t in ts:
            rev.setdefault(t, []).append(s)
    live = set(det.final)
    stack = list(live)
    while stack:
        q = stack.pop()
        for s in rev.get(q, ()):
            if s not in live:
                live.add(s)
                stack.append(s)
    if det.initial not in live:
        return ExtendedCount.finite(0)
    adj_live = {s: [t for t in ts if t in live]
                for s, ts in adj.items() if s in live}
    from .relations import _topo_or_cycle

    order = _topo_or_cycle([det.initial], adj_live)
    if order is None:
        return ExtendedCount.INFINITE
    counts: dict = {}
    for q in reversed(order):
        total = 1 if q in det.final else 0
        for t in adj_live.get(q, ()):
            total += counts[t]
        counts[q] = total
    return ExtendedCount.finite(counts.get(det.initial, 0))


def rel_enumerate(rel: Rel, limit: int, rank: Callable | None = None,
                  max_len: int | None = None) -> list:
    """First ``limit`` one-track words in llex order (rank orders letters)."""
    if rel.arity != 1:
        raise ValueError("enumeration is for one-track relations")
    det = determinize_rel(rel)
    # keep only states that can still reach a final state
    adj: dict = {}
    for (s, c), t in det.step.items():
        adj.setdefault(t, []).append(s)
    live = set(det.final)
    stack = list(live)
    while stack:
        q = stack.pop()
        for s in adj.get(q, ()):
            if s not in live:
                live.add(s)
                stack.append(s)
    out: list = []
    if det.initial in det.final:
        out.append(())
    if det.initial not in live:
        return out[:limit]
    key = rank if rank is not None else (lambda letter: str(letter))
    by_state: dict = {}
    for (s, c), t in det.step.items():
        if s in live and t in live:
            by_state.setdefault(s, []).append((c[0], t))
    for s in by_state:
        by_state[s].sort(key=lambda it: key(it[0]))
    frontier = [((), det.initial)]
    depth = 0
    while frontier and len(out) < limit:
        depth += 1
        if max_len is not None and depth > max_len:
            break
        nxt = []
        for w, q in frontier:
            for letter, t in by_state.get(q, ()):
                nxt.append((w + (letter,), t))
        frontier = nxt
        for w, q in frontier:
            if q in det.final:
                out.append(w)
                if len(out) >= limit:
                    break
    return out[:limit]


def join_all(rels: Iterable[Rel], cap: int | None = None) -> Rel:
    items = list(rels)
    if not items:
        raise ValueError("join_all needs at least one relation")
    acc = items[0]
    for r in items[1:]:
        acc = join(acc, r, cap)
    return acc
