"""Nondeterministic finite automata with exact accepting-run counting.

A symbol is either a plain letter (str) or a tuple of letters-and-pads used
for synchronous multi-tape input; "_" is the pad. Transitions are kept as an
ordered, duplicate-free list: the list order is the fixed total order on the
transition relation that run words and run-word comparisons refer to.
Run counts are plain Python ints, i.e. arbitrary precision.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from itertools import product as _cartesian
from typing import Iterable, Sequence, Union

from .errors import AmbiguityError, CapExceeded
from .polynomials import Polynomial, pairing_square

PAD = "_"

Symbol = Union[str, tuple]
Word = tuple  # tuple of Symbol

DEFAULT_STATE_CAP = 200_000


def state_cap() -> int:
    """Determinization budget; AUTOSTRUCT_STATE_CAP overrides the default."""
    raw = os.environ.get("AUTOSTRUCT_STATE_CAP")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"AUTOSTRUCT_STATE_CAP must be an integer, got {raw!r}")
    return DEFAULT_STATE_CAP


def symbol_arity(sym: Symbol) -> int:
    return len(sym) if isinstance(sym, tuple) else 0


def check_symbol(sym: Symbol) -> None:
    if isinstance(sym, tuple):
        if len(sym) < 1:
            raise ValueError("tuple symbols need arity >= 1")
        if all(x == PAD for x in sym):
            raise ValueError("the all-pad tuple is not a symbol")
        for x in sym:
            if not isinstance(x, str) or not x:
                raise ValueError(f"bad tuple entry {x!r}")
    else:
        if not isinstance(sym, str) or not sym:
            raise ValueError(f"bad letter {sym!r}")


def as_word(w: Union[str, Iterable[Symbol]]) -> Word:
    """Coerce to a word: a str becomes a tuple of its characters."""
    if isinstance(w, str):
        return tuple(w)
    return tuple(w)


@dataclass(frozen=True)
class Nfa:
    alphabet: tuple
    n_states: int
    initial: frozenset
    final: frozenset
    transitions: tuple  # of (src, sym_index, dst)

    def __post_init__(self):
        arities = {symbol_arity(s) for s in self.alphabet}
        if len(arities) > 1:
            raise ValueError("mixed-arity alphabet")
        for s in self.alphabet:
            check_symbol(s)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate alphabet symbols")
        for q in self.initial | self.final:
            if not 0 <= q < self.n_states:
                raise ValueError("state index out of range")
        n, nsym = self.n_states, len(self.alphabet)
        if len(set(self.transitions)) != len(self.transitions):
            raise ValueError("duplicate transition")
        for src, sym, dst in self.transitions:
            if not (0 <= src < n and 0 <= dst < n and 0 <= sym < nsym):
                raise ValueError("transition component out of range")

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def make(alphabet: Sequence[Symbol], n_states: int, initial: Iterable[int],
             final: Iterable[int], transitions: Iterable[tuple]) -> "Nfa":
        """Build with the canonical (src, sym, dst) transition order."""
        return Nfa(tuple(alphabet), n_states, frozenset(initial), frozenset(final),
                   tuple(sorted(set(transitions))))

    @staticmethod
    def unchecked(alphabet: tuple, n_states: int, initial: frozenset,
                  final: frozenset, transitions: tuple) -> "Nfa":
        """Fast path for internal transforms whose output is valid by
        construction; sorts transitions but skips invariant validation."""
        self = object.__new__(Nfa)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "n_states", n_states)
        object.__setattr__(self, "initial", frozenset(initial))
        object.__setattr__(self, "final", frozenset(final))
        object.__setattr__(self, "transitions", tuple(sorted(set(transitions))))
        return self

    @cached_property
    def sym_index(self) -> dict:
        return {s: i for i, s in enumerate(self.alphabet)}

    @cached_property
    def by_symbol(self) -> list:
        """For each symbol index, the list of (src, dst) pairs."""
        table: list = [[] for _ in self.alphabet]
        for src, sym, dst in self.transitions:
            table[sym].append((src, dst))
        return table

    @cached_property
    def out_map(self) -> dict:
        """src -> list of (sym_index, dst)."""
        table: dict = {}
        for src, sym, dst in self.transitions:
            table.setdefault(src, []).append((sym, dst))
        return table

    @cached_property
    def is_deterministic(self) -> bool:
        if len(self.initial) > 1:
            return False
        seen = set()
        for src, sym, _ in self.transitions:
            if (src, sym) in seen:
                return False
            seen.add((src, sym))
        return True

    # -- basic semantics -----------------------------------------------------

    def word_indices(self, w: Union[str, Iterable[Symbol]]) -> list:
        word = as_word(w)
        idx = self.sym_index
        out = []
        for sym in word:
            if sym not in idx:
                raise ValueError(f"symbol {sym!r} not in alphabet")
            out.append(idx[sym])
        return out

    def accepts(self, w: Union[str, Iterable[Symbol]]) -> bool:
        idx = self.sym_index
        states = set(self.initial)
        for letter in as_word(w):
            sym = idx.get(letter)
            if sym is None:
                return False
            nxt = set()
            for src, dst in self.by_symbol[sym]:
                if src in states:
                    nxt.add(dst)
            states = nxt
            if not states:
                return False
        return bool(states & self.final)

    def accepts_empty(self) -> bool:
        return bool(self.initial & self.final)

    def trim(self) -> "Nfa":
        """Restrict to states both reachable and co-accessible."""
        fwd = set(self.initial)
        stack = list(fwd)
        out = self.out_map
        while stack:
            q = stack.pop()
            for _, dst in out.get(q, ()):
                if dst not in fwd:
                    fwd.add(dst)
                    stack.append(dst)
        rev: dict = {}
        for src, _, dst in self.transitions:
            rev.setdefault(dst, []).append(src)
        bwd = set(self.final)
        stack = list(bwd)
        while stack:
            q = stack.pop()
            for src in rev.get(q, ()):
                if src not in bwd:
                    bwd.add(src)
                    stack.append(src)
        keep = fwd & bwd
        if not keep:
            return Nfa.make(self.alphabet, 1, [0], [], [])
        order = sorted(keep)
        remap = {q: i for i, q in enumerate(order)}
        return Nfa.make(
            self.alphabet, len(order),
            [remap[q] for q in self.initial if q in keep],
            [remap[q] for q in self.final if q in keep],
            [(remap[s], a, remap[d]) for s, a, d in self.transitions
             if s in keep and d in keep])

    def relabel(self, mapping: dict) -> "Nfa":
        """Rename alphabet symbols; the mapping must be injective."""
        new = [mapping.get(s, s) for s in self.alphabet]
        if len(set(new)) != len(new):
            raise ValueError("relabel mapping is not injective on the alphabet")
        return Nfa(tuple(new), self.n_states, self.initial, self.final, self.transitions)

    def with_alphabet(self, alphabet: Sequence[Symbol]) -> "Nfa":
        """Re-index symbols to a target alphabet (a superset, any order)."""
        target = tuple(alphabet)
        pos = {s: i for i, s in enumerate(target)}
        for s in self.alphabet:
            if s not in pos:
                raise ValueError(f"symbol {s!r} missing from target alphabet")
        remap = [pos[s] for s in self.alphabet]
        return Nfa.make(target, self.n_states, self.initial, self.final,
                        [(src, remap[sym], dst) for src, sym, dst in self.transitions])


# -- run counting -------------------------------------------------------------


def count_accepting_runs(a: Nfa, w: Union[str, Iterable[Symbol]]):
    """Exact number of accepting runs of ``a`` on the non-empty word ``w``.

    Words using letters outside the alphabet are outside the language and
    have zero runs.
    """
    word = as_word(w)
    if not word:
        raise ValueError("run counts are defined for non-empty words only")
    idx = a.sym_index
    counts = [0] * a.n_states
    for q in a.initial:
        counts[q] = 1
    for letter in word:
        sym = idx.get(letter)
        if sym is None:
            return 0
        nxt = [0] * a.n_states
        for src, dst in a.by_symbol[sym]:
            c = counts[src]
            if c:
                nxt[dst] += c
        counts = nxt
    return sum(counts[q] for q in a.final)


# -- boolean-style combinations preserving run counts -------------------------


def _require_same_alphabet(a1: Nfa, a2: Nfa) -> Nfa:
    if set(a1.alphabet) != set(a2.alphabet):
        raise ValueError("alphabet mismatch")
    if a1.alphabet == a2.alphabet:
        return a2
    return a2.with_alphabet(a1.alphabet)


def nfa_union(a1: Nfa, a2: Nfa) -> Nfa:
    """Disjoint union: run counts add, languages unite."""
    a2 = _require_same_alphabet(a1, a2)
    shift = a1.n_states
    trans = list(a1.transitions)
    trans.extend((s + shift, y, d + shift) for s, y, d in a2.transitions)
    return Nfa.make(a1.alphabet, a1.n_states + a2.n_states,
                    set(a1.initial) | {q + shift for q in a2.initial},
                    set(a1.final) | {q + shift for q in a2.final},
                    trans)


def nfa_product(a1: Nfa, a2: Nfa) -> Nfa:
    """Synchronous product: run counts multiply on the intersection."""
    a2 = _require_same_alphabet(a1, a2)
    # Lazy exploration keeps the product at reachable pairs only; trimming
    # afterwards preserves run counts exactly.
    index: dict = {}
    order: list = []

    def state_id(p, q):
        key = (p, q)
        if key not in index:
            index[key] = len(order)
            order.append(key)
        return index[key]

    for p in sorted(a1.initial):
        for q in sorted(a2.initial):
            state_id(p, q)
    initial = list(range(len(order)))
    trans = []
    i = 0
    out2: dict = {}
    for src, sym, dst in a2.transitions:
        out2.setdefault((src, sym), []).append(dst)
    while i < len(order):
        p, q = order[i]
        for sym, d1 in a1.out_map.get(p, ()):
            for d2 in out2.get((q, sym), ()):
                trans.append((i, sym, state_id(d1, d2)))
        i += 1
    final = [i for i, (p, q) in enumerate(order)
             if p in a1.final and q in a2.final]
    return Nfa.make(a1.alphabet, max(len(order), 1), initial, final, trans).trim()


def determinize(a: Nfa, cap: int | None = None) -> Nfa:
    """Subset construction. Errors via CapExceeded past the state budget."""
    budget = cap if cap is not None else state_cap()
    start = frozenset(a.initial)
    index = {start: 0}
    order = [start]
    trans = []
    i = 0
    while i < len(order):
        subset = order[i]
        step: dict = {}
        for q in subset:
            for sym, dst in a.out_map.get(q, ()):
                step.setdefault(sym, set()).add(dst)
        for sym, dsts in sorted((s, frozenset(d)) for s, d in step.items()):
            if dsts not in index:
                if len(order) >= budget:
                    raise CapExceeded(
                        f"determinization exceeded {budget} states")
                index[dsts] = len(order)
                order.append(dsts)
            trans.append((i, sym, index[dsts]))
        i += 1
    final = [i for i, subset in enumerate(order) if subset & a.final]
    return Nfa.make(a.alphabet, len(order), [0], final, trans)


def guarded_union(d: Nfa, a: Nfa) -> Nfa:
    """Union with the guard determinized first (one run per guard word)."""
    return nfa_union(determinize(_require_same_alphabet(a, d)), a)


def guarded_product(d: Nfa, a: Nfa) -> Nfa:
    """Intersection with a determinized guard: preserves a's run counts."""
    return nfa_product(determinize(_require_same_alphabet(a, d)), a)


def concat_unambiguous(d: Nfa, a: Nfa, verify: bool = False) -> Nfa:
    """Concatenation D·L(A) assuming the product is unambiguous.

    ``d`` is determinized; crossing transitions consume the last letter of
    the D-part and land in A's initial states, so for u1 in D and non-empty
    u2 in L(A) the run count on u1·u2 equals A's count on u2.
    """
    dd = determinize(_require_same_alphabet(a, d))
    if verify:
        _verify_unambiguous_concat(dd, a)
    shift = dd.n_states
    out = list(dd.transitions)
    for s, y, t in dd.transitions:
        if t in dd.final:
            for p in a.initial:
                out.append((s, y, p + shift))
    out.extend((s + shift, y, t + shift) for s, y, t in a.transitions)
    initial = set(dd.initial)
    if dd.accepts_empty():
        initial |= {q + shift for q in a.initial}
    final = {q + shift for q in a.final}
    return Nfa.make(a.alphabet, shift + a.n_states, initial, final, out).trim()


def _verify_unambiguous_concat(dd: Nfa, a: Nfa) -> None:
    """Raise if some word admits two different D / L(A) split points.

    Simulates a word with two split hypotheses at strictly different
    positions. Phase 1 reads the common D-prefix, phase 2 carries one
    guessed A-run after the first split while D continues, phase 3 carries
    both A-runs; ambiguity is a reachable doubly-accepting configuration.
    """
    dd_out: dict = {}
    for s, y, t in dd.transitions:
        dd_out[(s, y)] = t
    a_out: dict = {}
    for s, y, t in a.transitions:
        a_out.setdefault((s, y), []).append(t)
    n_sym = len(dd.alphabet)
    a_eps = a.accepts_empty()

    phase1 = set(dd.initial)
    stack1 = list(phase1)
    phase2: set = set()
    stack2: list = []
    phase3: set = set()
    stack3: list = []

    def spawn2(dstate):
        for y in range(n_sym):
            t = dd_out.get((dstate, y))
            if t is None:
                continue
            for a0 in a.initial:
                for a1 in a_out.get((a0, y), ()):
                    cand = (t, a1)
                    if cand not in phase2:
                        phase2.add(cand)
                        stack2.append(cand)

    while stack1:
        dstate = stack1.pop()
        if dstate in dd.final:
            spawn2(dstate)
        for y in range(n_sym):
            t = dd_out.get((dstate, y))
            if t is not None and t not in phase1:
                phase1.add(t)
                stack1.append(t)

    while stack2:
        dstate, a1 = stack2.pop()
        if dstate in dd.final:
            if a1 in a.final and a_eps:
                raise AmbiguityError("concatenation product is ambiguous")
            for y in range(n_sym):
                for a1n in a_out.get((a1, y), ()):
                    for a0 in a.initial:
                        for a2n in a_out.get((a0, y), ()):
                            cand = (a1n, a2n)
                            if cand not in phase3:
                                phase3.add(cand)
                                stack3.append(cand)
        for y in range(n_sym):
            t = dd_out.get((dstate, y))
            if t is None:
                continue
            for a1n in a_out.get((a1, y), ()):
                cand = (t, a1n)
                if cand not in phase2:
                    phase2.add(cand)
                    stack2.append(cand)

    while stack3:
        a1, a2 = stack3.pop()
        if a1 in a.final and a2 in a.final:
            raise AmbiguityError("concatenation product is ambiguous")
        for y in range(n_sym):
            for a1n in a_out.get((a1, y), ()):
                for a2n in a_out.get((a2, y), ()):
                    cand = (a1n, a2n)
                    if cand not in phase3:
                        phase3.add(cand)
                        stack3.append(cand)


# -- run automata --------------------------------------------------------------


def run_automaton(a: Nfa) -> tuple:
    """The automaton over transition letters accepting exactly a's runs.

    Returns (run_nfa, projection) where the run alphabet letter "t{i}" stands
    for the i-th transition of ``a`` and projection maps each run letter to
    the symbol that transition reads. The equality between run-language
    preimage sizes and run counts holds for non-empty words only.
    """
    letters = tuple(f"t{i}" for i in range(len(a.transitions)))
    trans = [(src, i, dst) for i, (src, sym, dst) in enumerate(a.transitions)]
    run = Nfa.make(letters, max(a.n_states, 1), a.initial, a.final, trans)
    projection = {f"t{i}": a.alphabet[sym]
                  for i, (_, sym, _) in enumerate(a.transitions)}
    return run, projection


def project_run_word(projection: dict, w: Iterable[str]) -> Word:
    return tuple(projection[letter] for letter in w)


# -- polynomial-ambiguity automata ---------------------------------------------


def conv_alphabet(letter: str, k: int) -> tuple:
    """{letter, pad}^k minus the all-pad tuple, in a fixed order."""
    syms = [t for t in _cartesian((letter, PAD), repeat=k) if any(x != PAD for x in t)]
    return tuple(sorted(syms))


def full_conv_dfa(letter: str, k: int) -> Nfa:
    """Deterministic automaton for ⊗_k(letter⁺).

    States: 0 = start, then one per proper subset of already-padded tracks.
    The first column must be all-letter; pads only grow and never cover
    every track.
    """
    alphabet = conv_alphabet(letter, k)
    subsets = [frozenset(s) for s in _subsets_upto(k)]
    index = {s: i + 1 for i, s in enumerate(subsets)}
    trans = []
    all_letter = tuple(letter for _ in range(k))
    trans.append((0, alphabet.index(all_letter), index[frozenset()]))
    for s in subsets:
        for isym, sym in enumerate(alphabet):
            padded = frozenset(i for i, x in enumerate(sym) if x == PAD)
            if padded >= s and len(padded) < k:
                # tracks already padded must stay padded
                if all(sym[i] == PAD for i in s):
                    trans.append((index[s], isym, index[padded]))
    return Nfa.make(alphabet, 1 + len(subsets), [0],
                    [index[s] for s in subsets], trans)


def _subsets_upto(k: int):
    from itertools import combinations
    for r in range(k):
        for combo in combinations(range(k), r):
            yield combo


def sharp_shape_dfa(letter: str, k: int, sharp: str = "#") -> Nfa:
    """Deterministic automaton for (letter⁺ sharp)^k."""
    alphabet = (sharp, letter)
    # states: 2j = "block j pending, no letter yet", 2j+1 = "block j, letters seen"
    trans = []
    for j in range(k):
        trans.append((2 * j, 1, 2 * j + 1))
        trans.append((2 * j + 1, 1, 2 * j + 1))
        trans.append((2 * j + 1, 0, 2 * j + 2))
    return Nfa.make(alphabet, 2 * k + 1, [0], [2 * k], trans)


def _conv_variable_nfa(i: int, k: int, letter: str) -> Nfa:
    """Two-state automaton with c_i accepting runs on a^{c̄} (convolution style)."""
    alphabet = conv_alphabet(letter, k)
    trans = []
    for isym, sym in enumerate(alphabet):
        if sym[i - 1] == letter:
            trans.append((0, isym, 0))
            trans.append((0, isym, 1))
        trans.append((1, isym, 1))
    return Nfa.make(alphabet, 2, [0], [1], trans)


def _sharp_variable_nfa(i: int, k: int, letter: str, sharp: str) -> Nfa:
    """(k+2)-state automaton with c_i accepting runs on a^{c1}#…a^{ck}#."""
    alphabet = (sharp, letter)
    # states 0..k are the block counters, k+1 is the primed detour state
    trans = []
    for j in range(1, k + 1):
        if j != i:
            trans.append((j - 1, 0, j))
    for q in range(k + 2):
        trans.append((q, 1, q))
    trans.append((i - 1, 1, k + 1))
    trans.append((k + 1, 0, i))
    return Nfa.make(alphabet, k + 2, [0], [k], trans)


def _poly_automaton(p: Polynomial, k: int, one: Nfa, var) -> Nfa:
    if p.is_zero:
        raise ValueError("the zero polynomial has no run-count automaton")
    if k < p.nvars:
        raise ValueError(f"k={k} smaller than the polynomial's variable count")
    parts = []
    for exps, coeff in sorted(p.terms):
        mono: Nfa | None = None
        for i, e in enumerate(exps):
            for _ in range(e):
                factor = var(i + 1)
                mono = factor if mono is None else nfa_product(mono, factor)
        if mono is None:
            mono = one
        term = mono
        for _ in range(coeff - 1):
            term = nfa_union(term, mono)
        parts.append(term)
    body = parts[0]
    for extra in parts[1:]:
        body = nfa_union(body, extra)
    # The structural recursion alone accepts a superset of the target
    # language; the deterministic guard pins it down without changing counts.
    return nfa_product(one, body)


def poly_automaton_conv(p: Polynomial, k: int, letter: str = "a") -> Nfa:
    """Automaton over the k-track convolution alphabet with language
    ⊗_k(letter⁺) and exactly p(c̄) accepting runs on letter^{c̄}."""
    one = full_conv_dfa(letter, k)
    return _poly_automaton(p, k, one, lambda i: _conv_variable_nfa(i, k, letter))


def poly_automaton_sharp(p: Polynomial, k: int, letter: str = "a",
                         sharp: str = "#") -> Nfa:
    """Automaton over {letter, sharp} with language (letter⁺ sharp)^k and
    exactly p(c̄) accepting runs on letter^{c1} sharp … letter^{ck} sharp."""
    one = sharp_shape_dfa(letter, k, sharp)
    return _poly_automaton(p, k, one, lambda i: _sharp_variable_nfa(i, k, letter, sharp))


def conv_tuple_word(lengths: Sequence[int], letter: str = "a") -> Word:
    """The convolution letter^{c1} ⊗ … ⊗ letter^{ck} as a tuple-symbol word."""
    n = max(lengths)
    word = []
    for pos in range(n):
        word.append(tuple(letter if pos < c else PAD for c in lengths))
    return tuple(word)


def sharp_word(lengths: Sequence[int], letter: str = "a", sharp: str = "#") -> Word:
    out: list = []
    for c in lengths:
        out.extend([letter] * c)
        out.append(sharp)
    return tuple(out)
