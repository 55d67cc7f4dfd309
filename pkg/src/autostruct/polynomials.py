"""Multivariate polynomials over the natural numbers.

Coefficients live in N, variables are x1, x2, ... (1-based in the text
syntax, 0-based in exponent vectors). These are the inputs to the
run-count automaton builders and the counter gadget constructions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product as _cartesian


@dataclass(frozen=True)
class Polynomial:
    """A polynomial with coefficients in N.

    ``terms`` maps an exponent vector (length ``nvars``) to a positive
    coefficient. The zero polynomial has no terms.
    """

    nvars: int
    terms: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self):
        seen = set()
        for exps, coeff in self.terms:
            if len(exps) != self.nvars:
                raise ValueError("exponent vector length mismatch")
            if coeff <= 0:
                raise ValueError("coefficients must be positive naturals")
            if any(e < 0 for e in exps):
                raise ValueError("exponents must be naturals")
            if exps in seen:
                raise ValueError("duplicate exponent vector")
            seen.add(exps)

    @staticmethod
    def from_dict(nvars: int, terms: dict[tuple[int, ...], int]) -> "Polynomial":
        items = tuple(sorted((e, c) for e, c in terms.items() if c != 0))
        return Polynomial(nvars, items)

    @staticmethod
    def constant(c: int, nvars: int = 0) -> "Polynomial":
        if c == 0:
            return Polynomial(nvars, ())
        return Polynomial.from_dict(nvars, {(0,) * nvars: c})

    @staticmethod
    def variable(i: int, nvars: int) -> "Polynomial":
        """The polynomial x_i (1-based) in ``nvars`` variables."""
        if not 1 <= i <= nvars:
            raise ValueError(f"variable x{i} out of range for {nvars} variables")
        exps = tuple(1 if j == i - 1 else 0 for j in range(nvars))
        return Polynomial.from_dict(nvars, {exps: 1})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def widen(self, nvars: int) -> "Polynomial":
        """Reinterpret in a larger variable set (new variables unused)."""
        if nvars < self.nvars:
            raise ValueError("cannot narrow a polynomial")
        pad = (0,) * (nvars - self.nvars)
        return Polynomial.from_dict(nvars, {e + pad: c for e, c in self.terms})

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(self.nvars, other.nvars)
        a, b = self.widen(n), other.widen(n)
        out: dict[tuple[int, ...], int] = dict(a.terms)
        for e, c in b.terms:
            out[e] = out.get(e, 0) + c
        return Polynomial.from_dict(n, out)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        n = max(self.nvars, other.nvars)
        a, b = self.widen(n), other.widen(n)
        out: dict[tuple[int, ...], int] = {}
        for e1, c1 in a.terms:
            for e2, c2 in b.terms:
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial.from_dict(n, out)

    def __call__(self, *args: int) -> int:
        if len(args) != self.nvars:
            raise ValueError(f"expected {self.nvars} arguments, got {len(args)}")
        total = 0
        for exps, coeff in self.terms:
            val = coeff
            for a, e in zip(args, exps):
                val *= a**e
            total += val
        return total

    def compose(self, args: list["Polynomial"]) -> "Polynomial":
        """Substitute args[i] for x_{i+1}."""
        if len(args) != self.nvars:
            raise ValueError("wrong number of substitution arguments")
        n = max([a.nvars for a in args], default=0)
        result = Polynomial.constant(0, n)
        for exps, coeff in self.terms:
            term = Polynomial.constant(coeff, n)
            for arg, e in zip(args, exps):
                for _ in range(e):
                    term = term * arg
            result = result + term
        return result

    def positive_image_upto(self, bound: int) -> set[int]:
        """Img+(p) ∩ [1, bound]: values over all-positive arguments.

        Coefficients in N make p monotone in each coordinate, so arguments
        are searched only while the value stays within the bound.
        """
        if self.is_zero:
            return set()
        out: set[int] = set()
        # Monotonicity: p(c) >= p(1,...,1) and raising any coordinate never
        # lowers the value, so coordinates range over a finite box.
        base = self(*([1] * self.nvars)) if self.nvars else self()
        if base > bound:
            return set()
        limit = bound + 1  # safe per-coordinate cap: value >= coordinate growth or constant
        ranges = []
        for i in range(self.nvars):
            if any(e[i] > 0 for e, _ in self.terms):
                ranges.append(range(1, limit + 1))
            else:
                ranges.append(range(1, 2))  # unused variable: value independent
        for point in _cartesian(*ranges):
            v = self(*point)
            if v <= bound:
                out.add(v)
        return out

    def text(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for exps, coeff in sorted(self.terms, reverse=True):
            factors = [] if coeff == 1 and any(exps) else [str(coeff)]
            for i, e in enumerate(exps):
                if e == 1:
                    factors.append(f"x{i + 1}")
                elif e > 1:
                    factors.append(f"x{i + 1}^{e}")
            parts.append("*".join(factors) if factors else str(coeff))
        return "+".join(parts)

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return self.text()


_TERM_RE = re.compile(r"^(?:(\d+)|x(\d+)(?:\^(\d+))?)$")


def parse_polynomial(text: str, nvars: int | None = None) -> Polynomial:
    """Parse `+`-separated terms of `*`-separated factors: "x1*x2^2+3*x1+2".

    Whitespace is ignored. ``nvars`` widens the result; by default the
    highest variable index seen is used.
    """
    cleaned = text.replace(" ", "").replace("\t", "")
    if not cleaned:
        raise ValueError("empty polynomial")
    max_var = 0
    raw_terms: list[tuple[int, dict[int, int]]] = []
    for chunk in cleaned.split("+"):
        if not chunk:
            raise ValueError(f"empty term in {text!r}")
        coeff = 1
        exps: dict[int, int] = {}
        for factor in chunk.split("*"):
            m = _TERM_RE.match(factor)
            if not m:
                raise ValueError(f"cannot parse factor {factor!r}")
            if m.group(1) is not None:
                coeff *= int(m.group(1))
            else:
                idx = int(m.group(2))
                if idx < 1:
                    raise ValueError("variables are numbered from x1")
                power = int(m.group(3)) if m.group(3) else 1
                exps[idx] = exps.get(idx, 0) + power
                max_var = max(max_var, idx)
        raw_terms.append((coeff, exps))
    n = max_var if nvars is None else nvars
    if n < max_var:
        raise ValueError(f"polynomial uses x{max_var} but nvars={n}")
    acc: dict[tuple[int, ...], int] = {}
    for coeff, exps in raw_terms:
        if coeff == 0:
            continue
        vec = tuple(exps.get(i + 1, 0) for i in range(n))
        acc[vec] = acc.get(vec, 0) + coeff
    return Polynomial.from_dict(n, acc)


def pairing_square(x: Polynomial, y: Polynomial) -> Polynomial:
    """The injective combiner (x+y)^2 + 3x + y used by all counter gadgets."""
    s = x + y
    return s * s + Polynomial.constant(3, 0) * x + y


def pairing_square_value(x: int, y: int) -> int:
    return (x + y) ** 2 + 3 * x + y
