import random
from itertools import product

import pytest

from autostruct.fo import (
    And,
    Atom,
    Eq,
    Formula,
    Not,
    Or,
    Presentation,
    Quant,
    decide_sentence,
    eval_formula,
    eval_to_rel,
    exinf,
    exists,
    forall,
    implies,
    infinity_projection,
    parse_formula,
    validate_equivalence,
    validate_linear_order,
    validate_tree,
)
from autostruct.nfa import PAD, Nfa, nfa_product
from autostruct.relations import AlphabetOrder, convolution, lex_compare, llex_compare

from .oracles import language_slice, random_nfa, words_upto


# -- helpers to build small presentations -----------------------------------------


def nfa_from_words(words, alphabet):
    """Trie automaton accepting exactly the given word set."""
    states = {(): 0}
    trans = []
    finals = set()
    for w in words:
        w = tuple(w)
        for i in range(len(w)):
            prefix = w[: i + 1]
            if prefix not in states:
                states[prefix] = len(states)
                trans.append((states[w[:i]], alphabet.index(w[i]), states[prefix]))
        finals.add(states[w])
    return Nfa.make(alphabet, len(states), [0], finals, trans)


def relation_from_tuples(tuples, alphabet, arity):
    """Automaton accepting exactly the convolutions of the given tuples."""
    conv_words = [convolution(list(t)) for t in tuples]
    symbols = sorted({c for w in conv_words for c in w})
    if not symbols:
        symbols = [tuple([alphabet[0]] + [PAD] * (arity - 1))]
    states = {(): 0}
    trans = []
    finals = set()
    for w in conv_words:
        for i in range(len(w)):
            prefix = w[: i + 1]
            if prefix not in states:
                states[prefix] = len(states)
                trans.append((states[w[:i]], symbols.index(w[i]), states[prefix]))
        finals.add(states[w])
    return Nfa.make(tuple(symbols), len(states), [0], finals, trans)


def finite_presentation(words, relations, alphabet=("a", "b")):
    """A presentation of an explicit finite structure."""
    order = AlphabetOrder(tuple(alphabet))
    domain = nfa_from_words(words, tuple(alphabet))
    rels = {}
    for name, (arity, tuples) in relations.items():
        rels[name] = (arity, relation_from_tuples(tuples, alphabet, arity))
    return Presentation(order, domain, rels)


# -- naive model checking oracle ---------------------------------------------------


def naive_eval(words, relations, order, formula, assignment):
    if isinstance(formula, Atom):
        if formula.name == "lex":
            u, v = (assignment[a] for a in formula.args)
            return lex_compare(u, v, order) <= 0
        if formula.name == "llex":
            u, v = (assignment[a] for a in formula.args)
            return llex_compare(u, v, order) <= 0
        tuples = relations[formula.name][1]
        return tuple(assignment[a] for a in formula.args) in tuples
    if isinstance(formula, Eq):
        return assignment[formula.left] == assignment[formula.right]
    if isinstance(formula, Not):
        return not naive_eval(words, relations, order, formula.body, assignment)
    if isinstance(formula, And):
        return all(naive_eval(words, relations, order, p, assignment)
                   for p in formula.parts)
    if isinstance(formula, Or):
        return any(naive_eval(words, relations, order, p, assignment)
                   for p in formula.parts)
    if isinstance(formula, Quant):
        if formula.kind == "exinf":
            return False  # finite domains never satisfy ∃∞
        hits = (naive_eval(words, relations, order, formula.body,
                           {**assignment, formula.var: w}) for w in words)
        return any(hits) if formula.kind == "exists" else all(
            naive_eval(words, relations, order, formula.body,
                       {**assignment, formula.var: w}) for w in words)
    raise TypeError(formula)


# -- fixtures ----------------------------------------------------------------------


def prefix_presentation():
    """(a*; prefix-leq): an automatic copy of (N; <=)."""
    a_star = Nfa.make(("a",), 1, [0], [0], [(0, 0, 0)])
    # u <= v iff u is a prefix of v: columns (a,a) then (_,a)
    cols = (("a", "a"), (PAD, "a"), ("a", PAD))
    rel = Nfa.make(cols, 2, [0], [0, 1], [(0, 0, 0), (0, 1, 1), (1, 1, 1)])
    return Presentation(AlphabetOrder(("a",)), a_star, {"leq": (2, rel)})


class TestSpecExamples:
    def test_least_element(self):
        p = prefix_presentation()
        vars_, aut = eval_formula(p, "(forall y (leq x y))")
        assert vars_ == ("x",)
        assert aut.accepts_empty()
        assert not aut.accepts(("a",))
        assert not aut.accepts(("a", "a"))

    def test_every_element_has_infinitely_many_above(self):
        p = prefix_presentation()
        vars_, aut = eval_formula(p, "(exinf y (leq x y))")
        assert aut.accepts_empty()
        for n in range(1, 5):
            assert aut.accepts(("a",) * n)

    def test_sentence_least_exists(self):
        p = prefix_presentation()
        assert decide_sentence(p, "(exists x (forall y (leq x y)))")

    def test_exinf_false_on_finite(self):
        p = finite_presentation([("a",), ("b",)], {"E": (2, {(("a",), ("a",)), (("b",), ("b",))})})
        assert not decide_sentence(p, "(exinf x (= x x))")
        assert decide_sentence(p, "(exists x (= x x))")

    def test_equality_projection(self):
        p = prefix_presentation()
        vars_, aut = eval_formula(p, "(exists y (= x y))")
        # every domain word has itself as a witness
        assert aut.accepts_empty()
        assert aut.accepts(("a", "a"))


class TestParser:
    def test_roundtrip_structures(self):
        f = parse_formula("(forall y (or (not (E x y)) (lex x y)))")
        assert isinstance(f, Quant) and f.kind == "forall"
        assert f.free_vars() == {"x"}

    def test_imp_sugar(self):
        f = parse_formula("(imp (E x y) (E y x))")
        assert isinstance(f, Or)

    def test_errors(self):
        with pytest.raises(ValueError):
            parse_formula("(exists)")
        with pytest.raises(ValueError):
            parse_formula("(and (E x y)")
        with pytest.raises(ValueError):
            parse_formula("x")


def _random_finite_presentation(rng, n_words=6):
    universe = [w for w in words_upto(("a", "b"), 3) if w]
    words = rng.sample(universe, min(n_words, len(universe)))
    pairs = set()
    for u in words:
        for v in words:
            if rng.random() < 0.3:
                pairs.add((u, v))
    return words, {"E": (2, pairs)}, finite_presentation(words, {"E": (2, pairs)})


FORMULA_SUITE = [
    "(exists x (E x x))",
    "(forall x (E x x))",
    "(exists x (exists y (E x y)))",
    "(forall x (forall y (imp (E x y) (E y x))))",
    "(forall x (forall y (forall z (imp (and (E x y) (E y z)) (E x z)))))",
    "(exists x (forall y (lex x y)))",
    "(exists x (forall y (llex x y)))",
    "(forall x (exists y (llex x y)))",
    "(exists x (not (E x x)))",
    "(forall x (exists y (and (E x y) (not (= x y)))))",
    "(exists x (exists y (and (E x y) (llex y x) (not (= x y)))))",
    "(exinf x (= x x))",
    "(forall x (or (E x x) (not (E x x))))",
    "(exists x (exists y (exists z (and (E x y) (E y z)))))",
    "(forall x (imp (exists y (E x y)) (E x x)))",
    "(exists y (forall x (llex y x)))",
    "(forall x (forall y (or (llex x y) (llex y x))))",
    "(exists x (exinf y (E x y)))",
    "(forall x (not (exinf y (E x y))))",
    "(exists x (and (= x x) (not (exists y (and (E y x) (not (= y x)))))))",
]


class TestOracleEquivalence:
    def test_sentences_match_naive_model_checking(self):
        rng = random.Random(12345)
        for _ in range(30):
            words, rels, pres = _random_finite_presentation(rng)
            order = AlphabetOrder(("a", "b"))
            for text in FORMULA_SUITE:
                f = parse_formula(text)
                want = naive_eval(words, rels, order, f, {})
                got = decide_sentence(pres, f)
                assert got == want, (text, sorted(words), sorted(rels["E"][1]))

    def test_open_formulas_match_naive(self):
        rng = random.Random(99)
        for _ in range(10):
            words, rels, pres = _random_finite_presentation(rng)
            order = AlphabetOrder(("a", "b"))
            for text in [
                "(exists y (E x y))",
                "(forall y (imp (E x y) (llex x y)))",
                "(and (E x y) (E y x))",
                "(not (E x y))",
            ]:
                f = parse_formula(text)
                fv = sorted(f.free_vars())
                rel = eval_to_rel(pres, f)
                for assign_words in product(words, repeat=len(fv)):
                    assignment = dict(zip(fv, assign_words))
                    want = naive_eval(words, rels, order, f, assignment)
                    got = rel.accepts_tracks(assignment)
                    assert got == want, (text, assignment)

    def test_quantifier_duality(self):
        rng = random.Random(5)
        for _ in range(10):
            words, rels, pres = _random_finite_presentation(rng)
            body = parse_formula("(E x y)")
            f1 = forall("y", body)
            f2 = Not(exists("y", Not(body)))
            r1 = eval_to_rel(pres, f1)
            r2 = eval_to_rel(pres, f2)
            for w in words:
                assert r1.accepts_tracks({"x": w}) == r2.accepts_tracks({"x": w})

    def test_double_negation(self):
        rng = random.Random(6)
        words, rels, pres = _random_finite_presentation(rng)
        body = parse_formula("(exists y (E x y))")
        r1 = eval_to_rel(pres, body)
        r2 = eval_to_rel(pres, Not(Not(body)))
        for w in words:
            assert r1.accepts_tracks({"x": w}) == r2.accepts_tracks({"x": w})


# -- infinity projection ------------------------------------------------------------


def pumping_window_infinite(rel_nfa: Nfa, xbar) -> bool:
    """Oracle: infinitely many y completing x̄ iff one exists in the window
    (|x̄|+|Q|, |x̄|+2|Q|]."""
    n_states = rel_nfa.n_states
    lx = len(xbar)
    states = set(rel_nfa.initial)
    by_sym = rel_nfa.by_symbol
    alpha = rel_nfa.alphabet
    for pos in range(lx):
        nxt = set()
        for isym, sym in enumerate(alpha):
            if sym[0] != xbar[pos] or sym[1] == PAD:
                continue
            for src, dst in by_sym[isym]:
                if src in states:
                    nxt.add(dst)
        states = nxt
        if not states:
            return False
    lo, hi = n_states, 2 * n_states
    depth = 0
    frontier = states
    seen_at = {}
    while depth < hi:
        depth += 1
        nxt = set()
        for isym, sym in enumerate(alpha):
            if sym[0] != PAD or sym[1] == PAD:
                continue
            for src, dst in by_sym[isym]:
                if src in frontier:
                    nxt.add(dst)
        frontier = nxt
        if not frontier:
            return False
        if depth > lo and frontier & set(rel_nfa.final):
            return True
    return False


def prefix_relation_nfa():
    cols = (("a", "a"), (PAD, "a"), ("a", PAD))
    # n <= m : (a,a)* then (_,a)*
    return Nfa.make(cols, 2, [0], [0, 1], [(0, 0, 0), (0, 1, 1), (1, 1, 1)])


class TestInfinityProjection:
    def test_leq_relation_all_accepted(self):
        out = infinity_projection(prefix_relation_nfa())
        assert out.accepts_empty()
        for n in range(1, 6):
            assert out.accepts(("a",) * n)

    def test_equality_empty(self):
        cols = (("a", "a"),)
        eq = Nfa.make(cols, 1, [0], [0], [(0, 0, 0)])
        out = infinity_projection(eq)
        assert not out.accepts_empty()
        for n in range(1, 4):
            assert not out.accepts(("a",) * n)

    def test_prefix_of_x_empty(self):
        # y prefix of x: finitely many prefixes each
        cols = (("a", "a"), ("a", PAD))
        rel = Nfa.make(cols, 2, [0], [0, 1], [(0, 0, 0), (0, 1, 1), (1, 1, 1)])
        out = infinity_projection(rel)
        for n in range(0, 4):
            w = ("a",) * n
            assert not (out.accepts(w) if w else out.accepts_empty())

    def test_matches_pumping_oracle_on_random_relations(self):
        rng = random.Random(777)
        cols = [c for c in product(("a", "b", PAD), repeat=2) if any(x != PAD for x in c)]
        # universe of well-formed pair convolutions
        from autostruct.relations import conv_language

        ab_star = Nfa.make(("a", "b"), 1, [0], [0], [(0, 0, 0), (0, 1, 0)])
        universe = conv_language(ab_star, 2)
        checked = 0
        while checked < 50:
            raw = random_nfa(rng, tuple(cols), max_states=4, t_density=0.15)
            rel = nfa_product(determinize_small(universe), raw)
            if rel.n_states > 60:
                continue
            checked += 1
            out = infinity_projection(rel)
            for xbar in words_upto(("a", "b"), 4):
                want = pumping_window_infinite(rel, xbar)
                got = out.accepts(xbar) if xbar else out.accepts_empty()
                assert got == want, (xbar, rel)


def determinize_small(a):
    from autostruct.nfa import determinize

    return determinize(a)


# -- validators ----------------------------------------------------------------------


class TestValidators:
    def test_equivalence_validator(self):
        words = [("a",), ("b",), ("a", "a")]
        eq_pairs = {(u, v) for u in words for v in words
                    if (u == v or {u, v} == {("a",), ("a", "a")})}
        pres = finite_presentation(words, {"E": (2, eq_pairs)})
        assert validate_equivalence(pres)

    def test_not_symmetric(self):
        words = [("a",), ("b",)]
        pairs = {(u, u) for u in words} | {((("a",)), (("b",)))}
        pres = finite_presentation(words, {"E": (2, pairs)})
        assert not validate_equivalence(pres)

    def test_not_transitive(self):
        w = [("a",), ("b",), ("a", "a")]
        pairs = {(u, u) for u in w}
        pairs |= {(w[0], w[1]), (w[1], w[0]), (w[1], w[2]), (w[2], w[1])}
        pres = finite_presentation(w, {"E": (2, pairs)})
        assert not validate_equivalence(pres)

    def test_linear_order_validator(self):
        pres = prefix_presentation()
        assert validate_linear_order(pres)

    def test_partial_order_is_not_linear(self):
        words = [("a",), ("b",)]
        pairs = {(u, u) for u in words}  # two incomparable elements
        pres = finite_presentation(words, {"leq": (2, pairs)})
        assert not validate_linear_order(pres)

    def test_tree_validator(self):
        words = [("a",), ("a", "a"), ("a", "b"), ("a", "a", "a")]
        edges = {(("a",), ("a", "a")), (("a",), ("a", "b")),
                 (("a", "a"), ("a", "a", "a"))}
        pres = finite_presentation(words, {"E": (2, edges)})
        assert validate_tree(pres, 2)
        assert not validate_tree(pres, 1)  # depth-2 node exists

    def test_antichain_without_bottom_fails(self):
        words = [("a",), ("b",)]
        pres = finite_presentation(words, {"E": (2, set())})
        assert not validate_tree(pres, 1)  # two roots

    def test_forest_fails_tree(self):
        words = [("a",), ("b",), ("a", "a")]
        edges = {(("a",), ("a", "a"))}
        pres = finite_presentation(words, {"E": (2, edges)})
        assert not validate_tree(pres, 2)  # two roots

    def test_validate_contained(self):
        pres = prefix_presentation()
        pres.validate_contained()
        bad_rel = Nfa.make((("b", "b"),), 2, [0], [1], [(0, 0, 1)])
        bad = Presentation(AlphabetOrder(("a", "b")),
                           Nfa.make(("a",), 1, [0], [0], [(0, 0, 0)]).with_alphabet(("a", "b")) if False else Nfa.make(("a", "b"), 1, [0], [0], [(0, 0, 0)]),
                           {"R": (2, bad_rel)})
        with pytest.raises(ValueError):
            bad.validate_contained()
