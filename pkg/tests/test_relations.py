import random
from functools import cmp_to_key
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autostruct.nfa import PAD, Nfa, as_word
from autostruct.relations import (
    AlphabetOrder,
    ExtendedCount,
    cardinality,
    complement,
    conv_language,
    convolution,
    deconvolution,
    enumerate_words,
    includes,
    intersect,
    language_equal,
    lex_compare,
    llex_compare,
    minimize,
    order_relation_automaton,
)

from .oracles import language_slice, random_nfa, words_upto


def a_plus():
    return Nfa.make(("a",), 2, [0], [1], [(0, 0, 1), (1, 0, 1)])


def a_star():
    return Nfa.make(("a",), 1, [0], [0], [(0, 0, 0)])


AB = AlphabetOrder(("a", "b"))


class TestConvolution:
    def test_spec_examples(self):
        assert convolution(["ab", "b"]) == (("a", "b"), ("b", PAD))
        assert convolution(["", "a"]) == ((PAD, "a"),)
        assert convolution(["ab", "ba"]) == (("a", "b"), ("b", "a"))

    def test_roundtrip_exhaustive(self):
        for u in words_upto(("a", "b"), 4):
            for v in words_upto(("a", "b"), 4):
                if not u and not v:
                    continue
                assert deconvolution(convolution([u, v])) == [u, v]

    def test_deconvolution_rejects_bad_words(self):
        with pytest.raises(ValueError):
            deconvolution(((PAD, "a"), ("a", "a")))  # pad not a suffix
        with pytest.raises(ValueError):
            deconvolution((("a", "a"), (PAD, PAD)))  # all-pad column


class TestConvLanguage:
    def test_membership_forced(self):
        c = conv_language(a_plus(), 2)
        assert c.accepts(convolution(["a", "aa"]))
        assert not c.accepts(convolution(["a", ""]))  # ε not in a+

    def test_agrees_with_bruteforce_product(self):
        rng = random.Random(11)
        for _ in range(15):
            a = random_nfa(rng, ("a", "b"), max_states=3)
            c = conv_language(a, 2)
            words = [w for w in language_slice(a, 3)]
            expect = set()
            for u in words:
                for v in words:
                    expect.add(convolution([u, v]))
            got = {w for w in language_slice(c, 3)}
            assert got == {w for w in expect if len(w) <= 3}

    def test_empty_included_when_base_has_it(self):
        c = conv_language(a_star(), 2)
        assert c.accepts_empty()  # ε ⊗ ε is the empty convolution


class TestComparators:
    def test_prefix_is_lex_smaller(self):
        assert lex_compare("a", "ab", AB) == -1

    def test_llex_shorter_first(self):
        assert llex_compare("b", "ab", AB) == -1

    def test_lex_first_difference(self):
        assert lex_compare("aa", "ab", AB) == -1
        assert lex_compare("ab", "aa", AB) == 1
        assert lex_compare("ab", "ab", AB) == 0

    def test_lex_decision_beats_length(self):
        assert lex_compare("ab", "b", AB) == -1  # a < b at position 0


class TestOrderAutomata:
    @pytest.mark.parametrize("kind,cmp", [("lex", lex_compare), ("llex", llex_compare)])
    def test_agrees_with_comparator(self, kind, cmp):
        d = Nfa.make(("a", "b"), 1, [0], [0], [(0, 0, 0), (0, 1, 0)])  # (a|b)*
        rel = order_relation_automaton(d, kind, AB)
        for u in words_upto(("a", "b"), 3):
            for v in words_upto(("a", "b"), 3):
                if not u and not v:
                    continue
                want = cmp(u, v, AB) <= 0
                assert rel.accepts(convolution([u, v])) == want, (u, v)

    def test_reflexive_and_antisymmetric_on_samples(self):
        d = a_plus()
        rel = order_relation_automaton(d, "llex", AlphabetOrder(("a",)))
        for n in range(1, 5):
            u = "a" * n
            assert rel.accepts(convolution([u, u]))
            for m in range(1, 5):
                if m != n:
                    v = "a" * m
                    both = rel.accepts(convolution([u, v])) and rel.accepts(convolution([v, u]))
                    assert not both

    def test_strict_variant(self):
        d = Nfa.make(("a", "b"), 1, [0], [0], [(0, 0, 0), (0, 1, 0)])
        rel = order_relation_automaton(d, "llex", AB, strict=True)
        assert not rel.accepts(convolution(["a", "a"]))
        assert rel.accepts(convolution(["a", "b"]))


class TestCardinality:
    def test_infinite(self):
        a = Nfa.make(("a", "b"), 2, [0], [1], [(0, 0, 0), (0, 1, 1)])  # a*b
        assert cardinality(a) == ExtendedCount.INFINITE

    def test_small_finite(self):
        # {ab, b}
        a = Nfa.make(("a", "b"), 3, [0], [2], [(0, 0, 1), (1, 1, 2), (0, 1, 2)])
        assert cardinality(a) == ExtendedCount.finite(2)

    def test_matches_enumeration_on_random_finite(self):
        rng = random.Random(404)
        found = 0
        while found < 100:
            a = random_nfa(rng, ("a", "b"), max_states=4, t_density=0.2)
            card = cardinality(a)
            if card.is_infinite or card.value > 30:
                continue
            found += 1
            slice_all = language_slice(a, 8)
            # finite language with <=30 words over <=4 states fits in length 8
            assert card.value == len(slice_all)

    def test_cardinality_enumeration_consistency(self):
        rng = random.Random(77)
        for _ in range(100):
            a = random_nfa(rng, ("a", "b"), max_states=4, t_density=0.25)
            card = cardinality(a)
            if card.is_infinite:
                words = enumerate_words(a, 200)
                assert len(words) == 200 or len(words) > 30  # plenty of words
            else:
                words = enumerate_words(a, card.value + 1)
                assert len(words) == card.value


class TestToolkit:
    def test_complement_relative(self):
        comp = complement(a_plus(), a_star())
        assert language_slice(comp, 4) == {()}

    def test_includes(self):
        a_plus_a = Nfa.make(("a",), 3, [0], [2], [(0, 0, 1), (1, 0, 2), (2, 0, 2)])
        assert includes(a_plus(), a_plus_a)
        assert not includes(a_plus_a, a_plus())

    def test_enumerate_llex(self):
        assert enumerate_words(a_star(), 3) == [(), ("a",), ("a", "a")]

    def test_enumerate_respects_order(self):
        d = Nfa.make(("b", "a"), 1, [0], [0], [(0, 0, 0), (0, 1, 0)])
        words = enumerate_words(d, 7, AlphabetOrder(("a", "b")))
        assert words == [(), ("a",), ("b",), ("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]

    def test_minimize_preserves_language(self):
        rng = random.Random(3)
        for _ in range(25):
            a = random_nfa(rng, ("a", "b"), max_states=4)
            m = minimize(a)
            assert language_slice(m, 4) == language_slice(a, 4)

    def test_intersect(self):
        both = intersect(a_plus(), a_star())
        assert language_equal(both, a_plus())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from("ab"), max_size=4), st.lists(st.sampled_from("ab"), max_size=4))
def test_order_totality(u, v):
    u, v = tuple(u), tuple(v)
    c = llex_compare(u, v, AB)
    assert c == -llex_compare(v, u, AB)
    if u == v:
        assert c == 0


def test_order_transitivity_exhaustive():
    words = list(words_upto(("a", "b"), 3))
    key = cmp_to_key(lambda x, y: llex_compare(x, y, AB))
    ordered = sorted(words, key=key)
    for i in range(len(ordered) - 1):
        assert llex_compare(ordered[i], ordered[i + 1], AB) <= 0
