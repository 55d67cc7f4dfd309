"""Convolutions, synchronous relations, word orders, and a regular toolkit.

Relations of arity n are automata over tuple symbols of arity n whose
entries come from a base alphabet plus the pad. A valid convolution pads
every track at the end only and never shows an all-pad column.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cmp_to_key
from itertools import product as _cartesian
from typing import Iterable, Sequence

from .errors import CapExceeded
from .nfa import PAD, Nfa, as_word, determinize, nfa_product, state_cap


# -- extended counts -----------------------------------------------------------


@dataclass(frozen=True, order=False)
class ExtendedCount:
    """A count in N ∪ {ℵ₀}; ``value is None`` encodes the infinite case."""

    value: int | None

    @staticmethod
    def finite(n: int) -> "ExtendedCount":
        if n < 0:
            raise ValueError("counts are naturals")
        return ExtendedCount(n)

    INFINITE: "ExtendedCount" = None  # set below

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)


ExtendedCount.INFINITE = ExtendedCount(None)


# -- convolution ---------------------------------------------------------------


def convolution(words: Sequence) -> tuple:
    """Overlay words track-by-track, padding exhausted tracks."""
    ws = [as_word(w) for w in words]
    if not ws:
        raise ValueError("convolution needs at least one track")
    n = max(len(w) for w in ws)
    out = []
    for i in range(n):
        out.append(tuple(w[i] if i < len(w) else PAD for w in ws))
    return tuple(out)


def deconvolution(cw: Iterable[tuple]) -> list:
    """Split a convolution word back into its tracks."""
    cols = list(cw)
    if not cols:
        return []
    arity = len(cols[0])
    tracks = []
    for t in range(arity):
        letters = []
        ended = False
        for col in cols:
            if len(col) != arity:
                raise ValueError("ragged convolution word")
            x = col[t]
            if x == PAD:
                ended = True
            else:
                if ended:
                    raise ValueError("pad not a suffix in track")
                letters.append(x)
        tracks.append(tuple(letters))
    if all(x == PAD for x in cols[-1]):
        raise ValueError("all-pad column")
    return tracks


def conv_language(a: Nfa, k: int) -> Nfa:
    """⊗_k(L(a)): all k-track convolutions of words from L(a).

    Track components run ``a`` independently; a track switches to the done
    marker exactly when it reads its first pad, which requires it to sit on
    a final state.
    """
    if any(not isinstance(s, str) for s in a.alphabet):
        raise ValueError("conv_language expects a base-alphabet automaton")
    letters = tuple(a.alphabet)
    cols = [c for c in _cartesian(letters + (PAD,), repeat=k)
            if any(x != PAD for x in c)]
    DONE = -1
    starts = [tuple(combo) for combo in _cartesian(sorted(a.initial), repeat=k)]
    index: dict = {}
    order: list = []

    def sid(state):
        if state not in index:
            index[state] = len(order)
            order.append(state)
        return index[state]

    for s in starts:
        sid(s)
    trans = []
    out = a.out_map
    i = 0
    col_index = {c: j for j, c in enumerate(cols)}
    while i < len(order):
        state = order[i]
        # per-track options for each column entry
        per_track: list = []
        for comp in state:
            opts: dict = {}
            if comp == DONE:
                opts[PAD] = [DONE]
            else:
                opts_pad = [DONE] if comp in a.final else None
                if opts_pad:
                    opts[PAD] = opts_pad
                for sym, dst in out.get(comp, ()):  # advance on a letter
                    opts.setdefault(letters[sym], []).append(dst)
            per_track.append(opts)
        for col in cols:
            branches = []
            ok = True
            for t, entry in enumerate(col):
                nxts = per_track[t].get(entry)
                if not nxts:
                    ok = False
                    break
                branches.append(nxts)
            if not ok:
                continue
            isym = col_index[col]
            for combo in _cartesian(*branches):
                trans.append((i, isym, sid(tuple(combo))))
        i += 1
    finals = [j for j, st in enumerate(order)
              if all(c == DONE or c in a.final for c in st)]
    return Nfa.make(tuple(cols), max(len(order), 1),
                    [index[s] for s in starts], finals, trans).trim()


# -- alphabet orders and word comparisons ---------------------------------------


@dataclass(frozen=True)
class AlphabetOrder:
    """A total order on base letters, given as the ordered letter tuple."""

    letters: tuple

    def __post_init__(self):
        if len(set(self.letters)) != len(self.letters):
            raise ValueError("duplicate letters in order")

    def rank(self, letter: str) -> int:
        try:
            return self.letters.index(letter)
        except ValueError:
            raise ValueError(f"letter {letter!r} not in the alphabet order")

    @property
    def rank_map(self) -> dict:
        return {x: i for i, x in enumerate(self.letters)}


def lex_compare(u, v, order: AlphabetOrder) -> int:
    """-1 / 0 / +1 with proper prefixes first, then first-difference rank."""
    u, v = as_word(u), as_word(v)
    ranks = order.rank_map
    for x, y in zip(u, v):
        if x != y:
            rx, ry = ranks.get(x), ranks.get(y)
            if rx is None or ry is None:
                raise ValueError("letter outside the alphabet order")
            return -1 if rx < ry else 1
    if len(u) == len(v):
        return 0
    return -1 if len(u) < len(v) else 1


def llex_compare(u, v, order: AlphabetOrder) -> int:
    """Length first, lexicographic among equals."""
    u, v = as_word(u), as_word(v)
    if len(u) != len(v):
        return -1 if len(u) < len(v) else 1
    return lex_compare(u, v, order)


def _comparator_dfa(order: AlphabetOrder, kind: str, strict: bool) -> Nfa:
    """DFA over 2-track columns deciding u (<|<=)_kind v on valid convolutions.

    States: 0 equal so far, 1 first difference made u smaller, 2 made u
    larger, 3 u ended first, 4 v ended first. For lex a first difference is
    absorbing regardless of later pads; for llex the length decides first,
    so pads override an earlier letter difference.
    """
    letters = order.letters
    cols = [c for c in _cartesian(letters + (PAD,), repeat=2)
            if any(x != PAD for x in c)]
    ranks = order.rank_map
    length_dominates = kind == "llex"
    if kind not in ("lex", "llex"):
        raise ValueError(f"unknown order kind {kind!r}")
    trans = []
    for isym, (x, y) in enumerate(cols):
        if x != PAD and y != PAD:
            if x == y:
                nxt = {0: 0, 1: 1, 2: 2}
            elif ranks[x] < ranks[y]:
                nxt = {0: 1, 1: 1, 2: 2}
            else:
                nxt = {0: 2, 1: 1, 2: 2}
        elif x == PAD:
            nxt = {0: 3, 3: 3}
            nxt.update({1: 3, 2: 3} if length_dominates else {1: 1, 2: 2})
        else:
            nxt = {0: 4, 4: 4}
            nxt.update({1: 4, 2: 4} if length_dominates else {1: 1, 2: 2})
        for s, t in nxt.items():
            trans.append((s, isym, t))
    final = {1, 3} if strict else {0, 1, 3}
    return Nfa.make(tuple(cols), 5, [0], final, trans)


def order_relation_automaton(domain: Nfa, kind: str, order: AlphabetOrder,
                             strict: bool = False) -> Nfa:
    """Automaton for {u ⊗ v : u,v ∈ L(domain), u (<=|<)_kind v}."""
    both = conv_language(domain, 2)
    cmp_dfa = _comparator_dfa(order, kind, strict).with_alphabet(both.alphabet)
    return nfa_product(cmp_dfa, both)


# -- cardinality and the toolkit -------------------------------------------------


def cardinality(a: Nfa, cap: int | None = None) -> ExtendedCount:
    """|L(a)| as an ExtendedCount, via the trimmed DFA."""
    dfa = determinize(a, cap).trim()
    if not dfa.final:
        return ExtendedCount.finite(0)
    adj: dict = {}
    for s, _, t in dfa.transitions:
        adj.setdefault(s, []).append(t)
    order = _topo_or_cycle(sorted(dfa.initial), adj)
    if order is None:
        return ExtendedCount.INFINITE
    counts: dict = {}
    for q in reversed(order):
        total = 1 if q in dfa.final else 0
        for t in adj.get(q, ()):
            total += counts[t]
        counts[q] = total
    return ExtendedCount.finite(sum(counts[q] for q in dfa.initial))


def _topo_or_cycle(roots, adj):
    """Topological order of the reachable subgraph, or None on a cycle."""
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict = {}
    order: list = []
    for root in roots:
        if color.get(root, WHITE) != WHITE:
            continue
        stack = [(root, iter(adj.get(root, ())))]
        color[root] = GREY
        while stack:
            q, it = stack[-1]
            advanced = False
            for t in it:
                c = color.get(t, WHITE)
                if c == GREY:
                    return None
                if c == WHITE:
                    color[t] = GREY
                    stack.append((t, iter(adj.get(t, ()))))
                    advanced = True
                    break
            if not advanced:
                color[q] = BLACK
                order.append(q)
                stack.pop()
    order.reverse()
    return order


def complement(a: Nfa, universe: Nfa, cap: int | None = None) -> Nfa:
    """universe ∖ L(a). Complementation is always relative to a universe."""
    if set(universe.alphabet) != set(a.alphabet):
        raise ValueError("complement: universe alphabet mismatch")
    dfa = determinize(a.with_alphabet(universe.alphabet), cap)
    # complete with a sink, flip finals, intersect with the universe
    sink = dfa.n_states
    trans = list(dfa.transitions)
    have = {(s, y) for s, y, _ in trans}
    for s in range(dfa.n_states + 1):
        for y in range(len(dfa.alphabet)):
            if (s, y) not in have:
                trans.append((s, y, sink))
    flipped = Nfa.make(dfa.alphabet, dfa.n_states + 1, dfa.initial,
                       set(range(dfa.n_states + 1)) - set(dfa.final), trans)
    return nfa_product(flipped, universe)


def intersect(a: Nfa, b: Nfa) -> Nfa:
    return nfa_product(a, b)


def minimize(a: Nfa, cap: int | None = None) -> Nfa:
    """Moore minimization of the determinized, trimmed automaton."""
    dfa = determinize(a, cap).trim()
    if dfa.n_states == 0:
        return dfa
    n = dfa.n_states
    nsym = len(dfa.alphabet)
    step = {}
    for s, y, t in dfa.transitions:
        step[(s, y)] = t
    block = [1 if q in dfa.final else 0 for q in range(n)]
    while True:
        sig = {}
        new = [0] * n
        for q in range(n):
            key = (block[q], tuple(block[step[(q, y)]] if (q, y) in step else -1
                                   for y in range(nsym)))
            if key not in sig:
                sig[key] = len(sig)
            new[q] = sig[key]
        if new == block:
            break
        block = new
    nblocks = max(block) + 1
    trans = set()
    for (s, y), t in step.items():
        trans.add((block[s], y, block[t]))
    finals = {block[q] for q in dfa.final}
    initials = {block[q] for q in dfa.initial}
    return Nfa.make(dfa.alphabet, nblocks, initials, finals, trans)


def is_empty(a: Nfa) -> bool:
    t = a.trim()
    return not (t.final and t.initial)


def includes(a: Nfa, b: Nfa, cap: int | None = None) -> bool:
    """L(b) ⊆ L(a)."""
    if set(a.alphabet) != set(b.alphabet):
        raise ValueError("includes: alphabet mismatch")
    dfa = determinize(a.with_alphabet(b.alphabet), cap)
    step = {}
    for s, y, t in dfa.transitions:
        step[(s, y)] = t
    # product of b with the complemented dfa, lazily; sink = None
    start_d = next(iter(dfa.initial), None)
    if b.accepts_empty():
        if start_d is None or start_d not in dfa.final:
            return False
    seen = set()
    stack = []
    for q in b.initial:
        key = (q, start_d)
        seen.add(key)
        stack.append(key)
    while stack:
        q, d = stack.pop()
        for y, t in b.out_map.get(q, ()):
            nd = step.get((d, y)) if d is not None else None
            if t in b.final and (nd is None or nd not in dfa.final):
                return False
            key = (t, nd)
            if key not in seen:
                seen.add(key)
                stack.append(key)
    return True


def language_equal(a: Nfa, b: Nfa, cap: int | None = None) -> bool:
    return includes(a, b, cap) and includes(b, a, cap)


def enumerate_words(a: Nfa, limit: int, order: AlphabetOrder | None = None,
                    max_len: int | None = None) -> list:
    """The first ``limit`` words of L(a) in llex order.

    ``order`` fixes the lexicographic tie-break (default: alphabet order of
    ``a``). Works on trimmed DFAs so every explored prefix is viable.
    """
    if limit <= 0:
        return []
    dfa = determinize(a).trim()
    out: list = []
    if dfa.accepts_empty():
        out.append(())
    if order is None:
        ranked = sorted(range(len(dfa.alphabet)),
                        key=lambda i: _symbol_sort_key(dfa.alphabet[i]))
    else:
        if any(isinstance(s, tuple) for s in dfa.alphabet):
            rank = order.rank_map
            ranked = sorted(range(len(dfa.alphabet)),
                            key=lambda i: tuple(rank.get(x, len(rank)) for x in dfa.alphabet[i]))
        else:
            rank = order.rank_map
            ranked = sorted(range(len(dfa.alphabet)), key=lambda i: rank[dfa.alphabet[i]])
    step: dict = {}
    for s, y, t in dfa.transitions:
        step[(s, y)] = t
    frontier = [((), q) for q in sorted(dfa.initial)]
    depth = 0
    while frontier and len(out) < limit:
        depth += 1
        if max_len is not None and depth > max_len:
            break
        nxt = []
        for w, q in frontier:
            for y in ranked:
                t = step.get((q, y))
                if t is None:
                    continue
                word = w + (dfa.alphabet[y],)
                nxt.append((word, t))
        frontier = nxt
        for w, q in frontier:
            if q in dfa.final:
                out.append(w)
                if len(out) >= limit:
                    break
    return out[:limit]


def _symbol_sort_key(sym):
    if isinstance(sym, tuple):
        return (1, sym)
    return (0, sym)
