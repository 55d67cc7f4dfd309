"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive: explicit path enumeration, explicit
word enumeration, explicit bijection search. The library must agree with
these on small inputs.
"""

from __future__ import annotations

import random
from itertools import permutations, product

from autostruct.nfa import Nfa, as_word


def enumerate_accepting_runs(a: Nfa, w) -> list:
    """All accepting runs as tuples of transition indices, by brute DFS."""
    word = a.word_indices(w)
    trans = list(enumerate(a.transitions))
    runs = []

    def extend(pos, state, acc):
        if pos == len(word):
            if state in a.final:
                runs.append(tuple(acc))
            return
        for i, (src, sym, dst) in trans:
            if src == state and sym == word[pos]:
                acc.append(i)
                extend(pos + 1, dst, acc)
                acc.pop()

    for q in sorted(a.initial):
        extend(0, q, [])
    return runs


def brute_run_count(a: Nfa, w) -> int:
    return len(enumerate_accepting_runs(a, w))


def words_upto(alphabet, max_len):
    """Every word over ``alphabet`` of length <= max_len (includes ε)."""
    for n in range(max_len + 1):
        for tup in product(alphabet, repeat=n):
            yield tup


def language_slice(a: Nfa, max_len) -> set:
    """L(a) restricted to words of length <= max_len, by exhaustion."""
    return {w for w in words_upto(a.alphabet, max_len) if (a.accepts(w) if w else a.accepts_empty())}


def random_nfa(rng: random.Random, alphabet, max_states=5, t_density=0.35) -> Nfa:
    n = rng.randint(1, max_states)
    trans = []
    for src in range(n):
        for sym in range(len(alphabet)):
            for dst in range(n):
                if rng.random() < t_density:
                    trans.append((src, sym, dst))
    initial = {q for q in range(n) if rng.random() < 0.5} or {0}
    final = {q for q in range(n) if rng.random() < 0.4}
    return Nfa.make(tuple(alphabet), n, initial, final, trans)


def finite_classes_isomorphic(sizes1: list, sizes2: list) -> bool:
    return sorted(sizes1) == sorted(sizes2)


def brute_tree_isomorphic(nodes1, edges1, root1, nodes2, edges2, root2) -> bool:
    """Rooted-tree isomorphism by exhaustive bijection search (small inputs)."""
    if len(nodes1) != len(nodes2):
        return False
    n1, n2 = sorted(nodes1), sorted(nodes2)
    e1 = set(edges1)
    e2 = set(edges2)
    for perm in permutations(n2):
        m = dict(zip(n1, perm))
        if m[root1] != root2:
            continue
        if all(((m[u], m[v]) in e2) == ((u, v) in e1)
               for u in n1 for v in n1):
            return True
    return False
