"""Automatic presentations and FO+∃∞ evaluation.

A presentation is a domain automaton plus named relation automata over
convolution alphabets. Formulas compile to track-named relations bottom-up:
atoms pull in relation automata, connectives join/union/difference, ∃
projects a track, ∃∞ keeps the tuples with infinitely many witnesses.
lex and llex are always available as built-in binary relations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import CapExceeded
from .nfa import PAD, Nfa
from .relations import AlphabetOrder, ExtendedCount
from .tracked import (
    ComparatorConstraint,
    DetRel,
    Rel,
    SymbolicConstraint,
    constrain,
    determinize_rel,
    diff,
    equality_rel,
    join,
    project,
    rel_cardinality,
    rel_is_empty,
    union_rel,
    word_track,
)

BUILTIN_ORDERS = ("lex", "llex")


# -- formulas -------------------------------------------------------------------


class Formula:
    def free_vars(self) -> frozenset:
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(Formula):
    name: str
    args: tuple

    def free_vars(self):
        return frozenset(self.args)


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str

    def free_vars(self):
        return frozenset((self.left, self.right))


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def free_vars(self):
        return self.body.free_vars()


@dataclass(frozen=True)
class And(Formula):
    parts: tuple

    def free_vars(self):
        out = frozenset()
        for p in self.parts:
            out |= p.free_vars()
        return out


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple

    def free_vars(self):
        out = frozenset()
        for p in self.parts:
            out |= p.free_vars()
        return out


@dataclass(frozen=True)
class Quant(Formula):
    kind: str  # "exists" | "forall" | "exinf"
    var: str
    body: Formula

    def free_vars(self):
        return self.body.free_vars() - {self.var}


def exists(var, body):
    return Quant("exists", var, body)


def forall(var, body):
    return Quant("forall", var, body)


def exinf(var, body):
    return Quant("exinf", var, body)


def implies(a, b):
    return Or((Not(a), b))


_CONNECTIVES = {"and", "or", "not", "imp", "->", "exists", "forall", "exinf", "="}


def parse_formula(text: str) -> Formula:
    """Parse the s-expression surface syntax, e.g. (forall y (leq x y))."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of formula")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(read())
            if pos >= len(tokens):
                raise ValueError("missing )")
            pos += 1
            return items
        if tok == ")":
            raise ValueError("unexpected )")
        return tok

    tree = read()
    if pos != len(tokens):
        raise ValueError("trailing tokens after formula")

    def build(node) -> Formula:
        if isinstance(node, str):
            raise ValueError(f"bare token {node!r} is not a formula")
        if not node:
            raise ValueError("empty form")
        head = node[0]
        if not isinstance(head, str):
            raise ValueError("formula head must be a symbol")
        rest = node[1:]
        if head == "not":
            (body,) = rest
            return Not(build(body))
        if head == "and":
            return And(tuple(build(p) for p in rest)) if rest else And(())
        if head == "or":
            return Or(tuple(build(p) for p in rest)) if rest else Or(())
        if head in ("imp", "->"):
            a, b = rest
            return implies(build(a), build(b))
        if head in ("exists", "forall", "exinf"):
            var, body = rest
            if not isinstance(var, str):
                raise ValueError("quantified variable must be a symbol")
            return Quant(head, var, build(body))
        if head == "=":
            a, b = rest
            if not (isinstance(a, str) and isinstance(b, str)):
                raise ValueError("equality arguments must be variables")
            return Eq(a, b)
        args = []
        for a in rest:
            if not isinstance(a, str):
                raise ValueError("atom arguments must be variables")
            args.append(a)
        return Atom(head, tuple(args))

    return build(tree)


# -- presentations ---------------------------------------------------------------


@dataclass(frozen=True)
class Presentation:
    order: AlphabetOrder
    domain: Nfa
    relations: dict

    def __post_init__(self):
        base = set(self.domain.alphabet)
        if base - set(self.order.letters):
            raise ValueError("domain alphabet not covered by the alphabet order")
        for name, (arity, aut) in self.relations.items():
            if name in BUILTIN_ORDERS or name == "=":
                raise ValueError(f"relation name {name!r} is reserved")
            if arity == 1:
                continue
            for sym in aut.alphabet:
                if not isinstance(sym, tuple) or len(sym) != arity:
                    raise ValueError(
                        f"relation {name!r}: alphabet arity mismatch")

    def relation(self, name: str):
        if name not in self.relations:
            raise ValueError(f"unknown relation {name!r}")
        return self.relations[name]

    def validate_contained(self, cap: int | None = None) -> None:
        """Check every relation's language sits inside ⊗_arity(domain)."""
        for name, (arity, aut) in self.relations.items():
            names = tuple(f"v{i:03d}" for i in range(arity))
            rel = Rel.from_nfa(aut, names)
            uni = word_track(self.domain, names[0])
            for v in names[1:]:
                uni = join(uni, word_track(self.domain, v), cap)
            bad = diff(rel, uni, cap)
            if not rel_is_empty(bad):
                raise ValueError(
                    f"relation {name!r} accepts tuples outside the domain")


# -- compilation -----------------------------------------------------------------


class _Compiler:
    def __init__(self, pres: Presentation, cap: int | None = None):
        self.p = pres
        self.cap = cap
        self._fresh = 0

    def fresh(self) -> str:
        self._fresh += 1
        return f"~aux{self._fresh}"

    def domain_track(self, var: str) -> Rel:
        return word_track(self.p.domain, var)

    def universe(self, vars_: frozenset) -> Rel:
        names = sorted(vars_)
        if not names:
            raise ValueError("universe of no tracks")
        acc = self.domain_track(names[0])
        for v in names[1:]:
            acc = join(acc, self.domain_track(v), self.cap)
        return acc

    def compile(self, f: Formula) -> Rel:
        if isinstance(f, Atom):
            return self.atom(f)
        if isinstance(f, Eq):
            if f.left == f.right:
                return self.domain_track(f.left)
            return equality_rel(self.p.domain, f.left, f.right)
        if isinstance(f, Not):
            body = self.compile(f.body)
            fv = f.free_vars()
            if not fv:
                truth = not body.truth
                return _const_rel(truth)
            return diff(self.universe(fv), body, self.cap)
        if isinstance(f, And):
            if not f.parts:
                return _const_rel(True)
            acc = None
            for part in f.parts:
                c = self.compile(part)
                if not c.vars:
                    if not c.truth:
                        return _const_rel(False) if not f.free_vars() else \
                            _empty_rel(tuple(sorted(f.free_vars())))
                    continue
                acc = c if acc is None else join(acc, c, self.cap)
            if acc is None:
                return _const_rel(True)
            missing = f.free_vars() - set(acc.vars)
            for v in sorted(missing):
                acc = join(acc, self.domain_track(v), self.cap)
            return acc
        if isinstance(f, Or):
            fv = f.free_vars()
            if not f.parts:
                return _const_rel(False)
            expanded = []
            for part in f.parts:
                c = self.compile(part)
                if not fv:
                    if c.truth:
                        return _const_rel(True)
                    continue
                for v in sorted(fv - set(c.vars)):
                    c = join(c, self.domain_track(v), self.cap)
                expanded.append(c)
            if not fv:
                return _const_rel(False)
            acc = expanded[0]
            for c in expanded[1:]:
                acc = union_rel(acc, c)
            return acc.trim()
        if isinstance(f, Quant):
            if f.kind == "forall":
                return self.compile(Not(Quant("exists", f.var, Not(f.body))))
            body = self.compile(f.body)
            if f.var not in body.vars:
                body = join(body, self.domain_track(f.var), self.cap)
            if f.kind == "exists":
                return project(body, f.var)
            if f.kind == "exinf":
                return infinity_project_rel(body, f.var)
            raise ValueError(f"unknown quantifier {f.kind!r}")
        raise TypeError(f"not a formula: {f!r}")

    def atom(self, f: Atom) -> Rel:
        if f.name in BUILTIN_ORDERS:
            if len(f.args) != 2:
                raise ValueError(f"{f.name} expects two arguments")
            x, y = f.args
            if x == y:
                return self.domain_track(x)  # reflexive
            base = join(self.domain_track(x), self.domain_track(y), self.cap)
            return constrain(base, ComparatorConstraint(x, y, self.p.order, f.name),
                             self.cap)
        arity, aut = self.p.relation(f.name)
        if len(f.args) != arity:
            raise ValueError(
                f"relation {f.name!r} has arity {arity}, got {len(f.args)}")
        names = []
        dups = []  # (fresh_name, original)
        seen = set()
        for a in f.args:
            if a in seen:
                fresh = self.fresh()
                dups.append((fresh, a))
                names.append(fresh)
            else:
                seen.add(a)
                names.append(a)
        rel = Rel.from_nfa(aut, tuple(names))
        for fresh, orig in dups:
            rel = join(rel, equality_rel(self.p.domain, fresh, orig), self.cap)
            rel = project(rel, fresh)
        return rel


def _const_rel(truth: bool) -> Rel:
    if truth:
        return Rel((), 1, frozenset([0]), frozenset([0]), ((),))
    return Rel((), 1, frozenset([0]), frozenset(), ((),))


def _empty_rel(vars_: tuple) -> Rel:
    return Rel(vars_, 1, frozenset([0]), frozenset(), ((),))


def infinity_project_rel(rel: Rel, var: str) -> Rel:
    """Tuples x̄ with infinitely many var-words completing them in rel.

    A prefix of length |x̄| is read with the quantified track carrying a
    letter throughout; acceptance requires landing on a state whose residual
    language over var-only columns is infinite.
    """
    if var not in rel.vars:
        raise ValueError(f"no track {var!r}")
    i = rel.vars.index(var)
    others = tuple(v for v in rel.vars if v != var)
    # var-only edges
    var_only: dict = {}
    for s in range(rel.n):
        for c, d in rel.out(s):
            if c[i] != PAD and all(c[j] == PAD for j in range(len(c)) if j != i):
                var_only.setdefault(s, []).append(d)
    # states co-accessible to a final state through var-only edges
    rev: dict = {}
    for s, ds in var_only.items():
        for d in ds:
            rev.setdefault(d, []).append(s)
    co = set(rel.final)
    stack = list(co)
    while stack:
        q = stack.pop()
        for s in rev.get(q, ()):
            if s not in co:
                co.add(s)
                stack.append(s)
    # cycle states within the co-accessible var-only graph
    restricted = {s: [d for d in ds if d in co]
                  for s, ds in var_only.items() if s in co}
    cyc = _cycle_states(restricted)
    # states reaching a cycle state through restricted edges
    rev2: dict = {}
    for s, ds in restricted.items():
        for d in ds:
            rev2.setdefault(d, []).append(s)
    inf_states = set(cyc)
    stack = list(inf_states)
    while stack:
        q = stack.pop()
        for s in rev2.get(q, ()):
            if s not in inf_states:
                inf_states.add(s)
                stack.append(s)
    if not others:
        return Rel((), rel.n, rel.initial, frozenset(inf_states),
                   tuple(() for _ in range(rel.n)))
    rows: list = []
    for s in range(rel.n):
        row = set()
        for c, d in rel.out(s):
            if c[i] == PAD:
                continue
            reduced = c[:i] + c[i + 1:]
            if any(x != PAD for x in reduced):
                row.add((reduced, d))
        rows.append(tuple(sorted(row, key=lambda t: (tuple(map(str, t[0])), t[1]))))
    return Rel(others, rel.n, rel.initial, frozenset(inf_states),
               tuple(rows)).trim()


def _cycle_states(adj: dict) -> set:
    """States lying on a cycle (Tarjan SCCs, iterative)."""
    index: dict = {}
    low: dict = {}
    on: set = set()
    stack: list = []
    out: set = set()
    counter = [0]
    nodes = set(adj)
    for ds in adj.values():
        nodes.update(ds)

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(adj.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on.add(nxt)
                    work.append((nxt, iter(adj.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    q = stack.pop()
                    on.discard(q)
                    comp.append(q)
                    if q == node:
                        break
                if len(comp) > 1:
                    out.update(comp)
                else:
                    q = comp[0]
                    if q in adj.get(q, ()):
                        out.add(q)
    return out


def eval_formula(pres: Presentation, formula: Formula | str,
                 cap: int | None = None):
    """Compile a formula to (free variable names, automaton).

    The automaton accepts exactly the convolutions of satisfying tuples,
    tracks ordered by variable name. Sentences yield a 0-ary result: an
    automaton whose language is {ε} for true and ∅ for false.
    """
    if isinstance(formula, str):
        formula = parse_formula(formula)
    rel = _Compiler(pres, cap).compile(formula)
    if not rel.vars:
        alphabet = ("a",)
        if rel.truth:
            return (), Nfa.make(alphabet, 1, [0], [0], [])
        return (), Nfa.make(alphabet, 1, [0], [], [])
    return rel.vars, rel.to_nfa()


def eval_to_rel(pres: Presentation, formula: Formula | str,
                cap: int | None = None) -> Rel:
    if isinstance(formula, str):
        formula = parse_formula(formula)
    return _Compiler(pres, cap).compile(formula)


def decide_sentence(pres: Presentation, formula: Formula | str,
                    cap: int | None = None) -> bool:
    if isinstance(formula, str):
        formula = parse_formula(formula)
    if formula.free_vars():
        raise ValueError("decide_sentence needs a closed formula")
    return _Compiler(pres, cap).compile(formula).truth


def infinity_projection(rel_nfa: Nfa, arity: int | None = None) -> Nfa:
    """Project away the last track, keeping tuples with infinitely many
    completions. Public Nfa-level surface for the ∃∞ step."""
    if arity is None:
        arities = {len(s) for s in rel_nfa.alphabet if isinstance(s, tuple)}
        if len(arities) != 1:
            raise ValueError("cannot infer arity")
        arity = arities.pop()
    names = tuple(f"v{i:03d}" for i in range(arity))
    rel = Rel.from_nfa(rel_nfa, names)
    out = infinity_project_rel(rel, names[-1])
    if not out.vars:
        if out.truth:
            return Nfa.make(("a",), 1, [0], [0], [])
        return Nfa.make(("a",), 1, [0], [], [])
    return out.to_nfa()


# -- symbolic constraint over a determinized sub-relation -------------------------


class DetConstraint(SymbolicConstraint):
    """Require (or forbid) a sub-tuple of the driver to lie in a relation.

    The relation is determinized once; the constraint streams the driver's
    sub-columns through it, freezing at the first all-pad sub-column.
    """

    _RUN, _DONE = 0, 1
    _SINK = -1

    def __init__(self, det: DetRel, negate: bool = False):
        self.vars = det.vars
        self._det = det
        self._negate = negate

    def initial(self):
        return (self._RUN, self._det.initial)

    def step(self, state, subcol):
        phase, s = state
        if all(x == PAD for x in subcol):
            if phase == self._RUN:
                verdict = s != self._SINK and s in self._det.final
                return (self._DONE, verdict)
            return state
        if phase == self._DONE:
            return None  # pads must be a suffix
        if s == self._SINK:
            return state
        nxt = self._det.step.get((s, subcol), self._SINK)
        return (self._RUN, nxt)

    def is_final(self, state) -> bool:
        phase, s = state
        if phase == self._DONE:
            inside = bool(s)
        else:
            inside = s != self._SINK and s in self._det.final
        return inside != self._negate


def require_subrelation(driver: Rel, sub: Rel, cap: int | None = None) -> Rel:
    return constrain(driver, DetConstraint(determinize_rel(sub, cap)), cap)


def forbid_subrelation(driver: Rel, sub: Rel, cap: int | None = None) -> Rel:
    return constrain(driver, DetConstraint(determinize_rel(sub, cap), negate=True), cap)


# -- class validators --------------------------------------------------------------


def _binary_rel(pres: Presentation, name: str, x: str, y: str) -> Rel:
    arity, aut = pres.relation(name)
    if arity != 2:
        raise ValueError(f"relation {name!r} is not binary")
    return Rel.from_nfa(aut, (x, y))


def _image(pres: Presentation, frontier: Rel, edge_name: str,
           cap: int | None = None) -> Rel:
    """1-track successor image: {y : ∃x ∈ frontier, E(x, y)} named like frontier."""
    (v,) = frontier.vars
    e = _binary_rel(pres, edge_name, v, "~img")
    step = project(join(frontier, e, cap), v)
    return step.rename({"~img": v})


def validate_equivalence(pres: Presentation, rel_name: str = "E",
                         cap: int | None = None) -> bool:
    """Decide reflexivity + symmetry + transitivity of a binary relation."""
    e = _binary_rel(pres, rel_name, "x", "y")
    diag = equality_rel(pres.domain, "x", "y")
    if not rel_is_empty(diff(diag, e, cap)):
        return False
    swapped = _binary_rel(pres, rel_name, "y", "x")
    if not rel_is_empty(diff(e, swapped, cap)):
        return False
    e_yz = _binary_rel(pres, rel_name, "y", "z")
    two = join(e, e_yz, cap)
    e_xz_det = determinize_rel(_binary_rel(pres, rel_name, "x", "z"), cap)
    bad = constrain(two, DetConstraint(e_xz_det, negate=True), cap)
    return rel_is_empty(bad)


def validate_linear_order(pres: Presentation, rel_name: str = "leq",
                          cap: int | None = None) -> bool:
    """Decide the total-order axioms for a binary relation."""
    r = _binary_rel(pres, rel_name, "x", "y")
    diag = equality_rel(pres.domain, "x", "y")
    if not rel_is_empty(diff(diag, r, cap)):
        return False  # not reflexive
    swapped = _binary_rel(pres, rel_name, "y", "x")
    both = join(r, swapped, cap)
    off_diag = constrain(both, DetConstraint(determinize_rel(diag, cap), negate=True), cap)
    if not rel_is_empty(off_diag):
        return False  # not antisymmetric
    r_yz = _binary_rel(pres, rel_name, "y", "z")
    two = join(r, r_yz, cap)
    r_xz_det = determinize_rel(_binary_rel(pres, rel_name, "x", "z"), cap)
    if not rel_is_empty(constrain(two, DetConstraint(r_xz_det, negate=True), cap)):
        return False  # not transitive
    universe = join(word_track(pres.domain, "x"), word_track(pres.domain, "y"), cap)
    either = union_rel(r, swapped)
    missing = constrain(universe,
                        DetConstraint(determinize_rel(either, cap), negate=True), cap)
    return rel_is_empty(missing)  # totality


def root_relation(pres: Presentation, edge_name: str = "E",
                  cap: int | None = None) -> Rel:
    """Nodes without incoming edges, as a 1-track relation over 'x'."""
    e = _binary_rel(pres, edge_name, "~src", "x")
    has_parent = project(e, "~src")
    dom = word_track(pres.domain, "x")
    return diff(dom, has_parent, cap)


def validate_dag(pres: Presentation, height: int, edge_name: str = "E",
                 cap: int | None = None) -> bool:
    """Height-bounded acyclicity plus a nonempty root set."""
    roots = root_relation(pres, edge_name, cap)
    if rel_is_empty(roots):
        return False
    frontier = word_track(pres.domain, "x")
    for _ in range(height + 1):
        frontier = _image(pres, frontier, edge_name, cap)
        if rel_is_empty(frontier):
            return True
    return False  # a path of length height+1 exists


def validate_tree(pres: Presentation, height: int, edge_name: str = "E",
                  cap: int | None = None) -> bool:
    """Tree of height <= ``height``: one root, unique parents, full coverage."""
    roots = root_relation(pres, edge_name, cap)
    if rel_cardinality(roots, cap) != ExtendedCount.finite(1):
        return False
    # unique parent: no node with two distinct parents
    e_yx = _binary_rel(pres, edge_name, "y", "x")
    e_zx = _binary_rel(pres, edge_name, "z", "x")
    pair = join(e_yx, e_zx, cap)
    diag_yz = equality_rel(pres.domain, "y", "z")
    two_parents = constrain(
        pair, DetConstraint(determinize_rel(diag_yz, cap), negate=True), cap)
    if not rel_is_empty(two_parents):
        return False
    # every node within `height` steps of the root
    covered = roots
    frontier = roots
    for _ in range(height):
        frontier = _image(pres, frontier, edge_name, cap)
        if rel_is_empty(frontier):
            break
        covered = union_rel(covered, frontier)
    else:
        beyond = _image(pres, frontier, edge_name, cap)
        if not rel_is_empty(beyond):
            return False
    uncovered = diff(word_track(pres.domain, "x"), covered, cap)
    return rel_is_empty(uncovered)
