import random
from itertools import product

from autostruct.nfa import PAD, Nfa
from autostruct.relations import AlphabetOrder, ExtendedCount, convolution, llex_compare
from autostruct.tracked import (
    ComparatorConstraint,
    Rel,
    constrain,
    determinize_rel,
    diff,
    equality_rel,
    join,
    project,
    rel_cardinality,
    rel_enumerate,
    rel_is_empty,
    union_rel,
    word_track,
)

from .oracles import language_slice, random_nfa, words_upto

AB = AlphabetOrder(("a", "b"))


def ab_star():
    return Nfa.make(("a", "b"), 1, [0], [0], [(0, 0, 0), (0, 1, 0)])


def a_plus():
    return Nfa.make(("a",), 2, [0], [1], [(0, 0, 1), (1, 0, 1)])


def assignment_cols(assignment, vars_):
    words = [tuple(assignment[v]) for v in vars_]
    n = max((len(w) for w in words), default=0)
    return [tuple(w[i] if i < len(w) else PAD for w in words) for i in range(n)]


class TestJoin:
    def test_cartesian_universe(self):
        u = join(word_track(ab_star(), "x"), word_track(ab_star(), "y"))
        assert u.vars == ("x", "y")
        for x in words_upto(("a", "b"), 2):
            for y in words_upto(("a", "b"), 2):
                assert u.accepts_tracks({"x": x, "y": y})

    def test_shared_track_intersection(self):
        # x in a+, x in (a|b)* with a cap of two symbols of 'b'... simpler:
        r1 = word_track(a_plus().with_alphabet(("a", "b")), "x")
        r2 = word_track(ab_star(), "x")
        j = join(r1, r2)
        assert j.accepts_tracks({"x": ("a", "a")})
        assert not j.accepts_tracks({"x": ("a", "b")})
        assert not j.accepts_tracks({"x": ()})

    def test_three_way_chain(self):
        eq = equality_rel(ab_star(), "x", "y")
        eq2 = equality_rel(ab_star(), "y", "z")
        j = join(eq, eq2)
        assert j.accepts_tracks({"x": ("a",), "y": ("a",), "z": ("a",)})
        assert not j.accepts_tracks({"x": ("a",), "y": ("a",), "z": ("b",)})

    def test_unequal_lengths_with_freezing(self):
        eq = equality_rel(ab_star(), "x", "y")
        dz = word_track(ab_star(), "z")
        j = join(eq, dz)
        assert j.accepts_tracks({"x": ("a",), "y": ("a",), "z": ("b", "b", "a")})
        assert j.accepts_tracks({"x": ("a", "b"), "y": ("a", "b"), "z": ()})
        assert not j.accepts_tracks({"x": ("a",), "y": ("b",), "z": ("b", "b")})

    def test_join_matches_bruteforce(self):
        rng = random.Random(2)
        for _ in range(10):
            a = random_nfa(rng, ("a", "b"), max_states=3)
            b = random_nfa(rng, ("a", "b"), max_states=3)
            ra = word_track(a, "x")
            rb = word_track(b, "y")
            j = join(ra, rb)
            for x in words_upto(("a", "b"), 2):
                for y in words_upto(("a", "b"), 2):
                    inx = x in language_slice(a, 2)
                    iny = y in language_slice(b, 2)
                    assert j.accepts_tracks({"x": x, "y": y}) == (inx and iny)


class TestComparator:
    def test_constraint_matches_comparator(self):
        u = join(word_track(ab_star(), "x"), word_track(ab_star(), "y"))
        for strict in (False, True):
            c = constrain(u, ComparatorConstraint("x", "y", AB, "llex", strict))
            for x in words_upto(("a", "b"), 3):
                for y in words_upto(("a", "b"), 3):
                    cmpv = llex_compare(x, y, AB)
                    want = cmpv < 0 if strict else cmpv <= 0
                    assert c.accepts_tracks({"x": x, "y": y}) == want, (x, y)

    def test_reversed_track_names(self):
        # constraint written as (y <= x): track sort order differs
        u = join(word_track(ab_star(), "x"), word_track(ab_star(), "y"))
        c = constrain(u, ComparatorConstraint("y", "x", AB, "llex"))
        assert c.accepts_tracks({"x": ("b",), "y": ("a",)})
        assert not c.accepts_tracks({"x": ("a",), "y": ("b",)})


class TestProject:
    def test_simple_projection(self):
        eq = equality_rel(a_plus(), "x", "y")
        p = project(eq, "y")
        assert p.vars == ("x",)
        assert p.accepts_tracks({"x": ("a", "a")})
        assert not p.accepts_tracks({"x": ()})

    def test_projection_with_longer_witness(self):
        # R = {(w, ww') : ...} style: x prefix of y over a-plus domain
        d = a_plus()
        u = join(word_track(d, "x"), word_track(d, "y"))
        c = constrain(u, ComparatorConstraint("x", "y", AlphabetOrder(("a",)), "lex"))
        p = project(c, "y")
        # every a^n has a witness y >= it
        for n in range(1, 4):
            assert p.accepts_tracks({"x": ("a",) * n})

    def test_project_to_zero_ary(self):
        d = word_track(a_plus(), "x")
        z = project(d, "x")
        assert z.vars == ()
        assert z.truth

    def test_project_empty_language(self):
        empty = Nfa.make(("a",), 1, [0], [], [])
        z = project(word_track(empty, "x"), "x")
        assert not z.truth


class TestDiff:
    def test_difference(self):
        star = word_track(ab_star(), "x")
        plus_a = word_track(a_plus().with_alphabet(("a", "b")), "x")
        d = diff(star, plus_a)
        assert d.accepts_tracks({"x": ("b",)})
        assert d.accepts_tracks({"x": ()})
        assert not d.accepts_tracks({"x": ("a", "a")})

    def test_diff_requires_same_tracks(self):
        star = word_track(ab_star(), "x")
        other = word_track(ab_star(), "y")
        try:
            diff(star, other)
            assert False
        except ValueError:
            pass

    def test_diff_with_sink(self):
        # b not even readable by the subtrahend: lands in the sink, kept
        a_only = word_track(a_plus(), "x")
        d = diff(word_track(ab_star(), "x"), a_only.rename({"x": "x"}))
        assert d.accepts_tracks({"x": ("b", "b")})


class TestCountingAndEnumeration:
    def test_cardinality_finite(self):
        two = Nfa.make(("a", "b"), 2, [0], [1], [(0, 0, 1), (0, 1, 1)])
        assert rel_cardinality(word_track(two, "x")) == ExtendedCount.finite(2)

    def test_cardinality_infinite(self):
        assert rel_cardinality(word_track(ab_star(), "x")) == ExtendedCount.INFINITE

    def test_enumerate_llex(self):
        words = rel_enumerate(word_track(ab_star(), "x"), 5)
        assert words == [(), ("a",), ("b",), ("a", "a"), ("a", "b")]

    def test_union(self):
        r1 = word_track(a_plus().with_alphabet(("a", "b")), "x")
        b_word = Nfa.make(("a", "b"), 2, [0], [1], [(0, 1, 1)])
        r2 = word_track(b_word, "x")
        u = union_rel(r1, r2)
        assert u.accepts_tracks({"x": ("b",)})
        assert u.accepts_tracks({"x": ("a",)})
        assert not u.accepts_tracks({"x": ("b", "b")})

    def test_is_empty(self):
        empty = Nfa.make(("a",), 1, [0], [], [])
        assert rel_is_empty(word_track(empty, "x"))
        assert not rel_is_empty(word_track(a_plus(), "x"))


class TestRoundTrip:
    def test_to_nfa_and_back(self):
        eq = equality_rel(a_plus(), "x", "y")
        nfa = eq.to_nfa()
        back = Rel.from_nfa(nfa, ("x", "y"))
        for n in range(1, 4):
            w = ("a",) * n
            assert back.accepts_tracks({"x": w, "y": w})

    def test_accepts_matches_convolution(self):
        eq = equality_rel(a_plus(), "x", "y")
        cols = list(convolution([("a", "a"), ("a", "a")]))
        assert eq.accepts(cols)
