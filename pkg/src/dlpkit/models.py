"""Polynomial phenomenon models, their measures and partial orders.

A model is an equation ``sum_i coef_i * monomial_i = rhs`` over a fixed list of
variables.  Coefficients are exact rationals or named unknowns.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

from .lattice import BoolVec

Monomial = tuple[int, ...]


@dataclass(frozen=True, order=True)
class Unknown:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


Coefficient = Union[Fraction, Unknown]


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos} in {text!r}")


class Order(enum.Enum):
    GREATER = ">"
    LESS = "<"
    EQUAL = "="
    INCOMPARABLE = "||"

    @property
    def geq(self) -> bool:
        return self in (Order.GREATER, Order.EQUAL)


def _compare_numbers(a, b) -> Order:
    if a > b:
        return Order.GREATER
    if a < b:
        return Order.LESS
    return Order.EQUAL


def _grlex_key(mono: Monomial):
    return (sum(mono), tuple(-e for e in mono))


def format_monomial(mono: Monomial, variables: Sequence[str]) -> str:
    parts = []
    for v, e in zip(variables, mono):
        if e == 1:
            parts.append(v)
        elif e > 1:
            parts.append(f"{v}^{e}")
    return "".join(parts) if parts else "1"


def _format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Term:
    monomial: Monomial
    coef: Coefficient


@dataclass(frozen=True)
class PolyModel:
    variables: tuple[str, ...]
    terms: tuple[Term, ...]
    rhs: Fraction = Fraction(0)

    def __post_init__(self):
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"repeated variable names in {variables}")
        terms = []
        seen = set()
        symbols = set()
        for t in self.terms:
            if len(t.monomial) != len(variables) or any(e < 0 for e in t.monomial):
                raise ValueError(f"bad monomial {t.monomial} for variables {variables}")
            if t.monomial in seen:
                raise ValueError(f"repeated monomial {format_monomial(t.monomial, variables)}")
            seen.add(t.monomial)
            if isinstance(t.coef, Unknown):
                if t.coef.symbol in variables:
                    raise ValueError(f"unknown coefficient {t.coef.symbol!r} collides with a variable")
                if t.coef.symbol in symbols:
                    raise ValueError(f"unknown coefficient {t.coef.symbol!r} used twice")
                symbols.add(t.coef.symbol)
                terms.append(t)
            else:
                q = Fraction(t.coef)
                if q != 0:
                    terms.append(Term(t.monomial, q))
        terms.sort(key=lambda t: _grlex_key(t.monomial))
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def coefficient(self, mono: Monomial) -> Coefficient:
        for t in self.terms:
            if t.monomial == mono:
                return t.coef
        return Fraction(0)

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(t.monomial for t in self.terms)

    @property
    def unknowns(self) -> tuple[str, ...]:
        return tuple(t.coef.symbol for t in self.terms if isinstance(t.coef, Unknown))

    def lhs(self, point: dict) -> Fraction:
        if self.unknowns:
            raise ValueError(f"model {self} has unknown coefficients {self.unknowns}")
        total = Fraction(0)
        for t in self.terms:
            val = t.coef
            for var, e in zip(self.variables, t.monomial):
                if e:
                    val *= Fraction(point[var]) ** e
            total += val
        return total

    def __str__(self) -> str:
        if not self.terms:
            return f"0 = {_format_fraction(self.rhs)}"
        out = ""
        for i, t in enumerate(self.terms):
            mono = format_monomial(t.monomial, self.variables)
            if isinstance(t.coef, Unknown):
                body, neg = t.coef.symbol + ("" if mono == "1" else mono), False
            else:
                neg = t.coef < 0
                mag = abs(t.coef)
                if mono == "1":
                    body = _format_fraction(mag)
                else:
                    body = ("" if mag == 1 else _format_fraction(mag)) + mono
            if i == 0:
                out += ("-" if neg else "") + body
            else:
                out += (" - " if neg else " + ") + body
        return f"{out} = {_format_fraction(self.rhs)}"


# -- parsing -------------------------------------------------------------------

_NUMBER = re.compile(r"\d+(?:/\d+|\.\d+)?")


def _number(tok: str) -> Fraction:
    return Fraction(tok)


def parse_poly(text: str, variables: Sequence[str]) -> PolyModel:
    """Parse ``"5x + by^2 = 0"``.

    Letters (or listed variable names) are variables; any other single letter
    is an unknown coefficient.  ``*`` and ``·`` may separate factors.
    """
    variables = tuple(variables)
    names = sorted(variables, key=len, reverse=True)
    if text.count("=") != 1:
        raise ParseError("expected exactly one '='", text, text.find("=") if "=" in text else len(text))
    eq = text.index("=")
    pos = 0
    n = len(text)

    def skip():
        nonlocal pos
        while pos < n and text[pos] in " \t":
            pos += 1

    def read_term(sign: int):
        nonlocal pos
        start = pos
        coef = Fraction(1)
        symbol = None
        mono = [0] * len(variables)
        got = False
        while True:
            skip()
            if pos >= eq:
                break
            ch = text[pos]
            if ch in "*·":
                if not got:
                    raise ParseError("dangling multiplication", text, pos)
                pos += 1
                continue
            m = _NUMBER.match(text, pos)
            if m:
                coef *= _number(m.group())
                pos = m.end()
                got = True
                continue
            if ch.isalpha():
                name = next((v for v in names if text.startswith(v, pos)), None)
                if name is None:
                    if symbol is not None:
                        raise ParseError("two unknown coefficients in one term", text, pos)
                    symbol = ch
                    pos += 1
                    got = True
                    continue
                pos += len(name)
                power = 1
                skip()
                if pos < eq and text[pos] == "^":
                    pos += 1
                    skip()
                    m = re.compile(r"\d+").match(text, pos)
                    if not m:
                        raise ParseError("expected integer power", text, pos)
                    power = int(m.group())
                    pos = m.end()
                mono[variables.index(name)] += power
                got = True
                continue
            break
        if not got:
            raise ParseError("expected a term", text, start)
        if symbol is not None:
            if coef != 1:
                raise ParseError("numeric factor on unknown coefficient", text, start)
            return Term(tuple(mono), Unknown(symbol)), start
        return Term(tuple(mono), sign * coef), start

    terms = []
    seen = {}
    skip()
    sign = 1
    if pos < eq and text[pos] in "+-":
        sign = -1 if text[pos] == "-" else 1
        pos += 1
    while True:
        term, start = read_term(sign)
        if term.monomial in seen:
            raise ParseError(f"repeated monomial {format_monomial(term.monomial, variables)}", text, start)
        seen[term.monomial] = True
        if isinstance(term.coef, Unknown) and term.coef.symbol in {t.coef.symbol for t in terms if isinstance(t.coef, Unknown)}:
            raise ParseError(f"unknown coefficient {term.coef.symbol!r} used twice", text, start)
        terms.append(term)
        skip()
        if pos >= eq:
            break
        if text[pos] not in "+-":
            raise ParseError(f"unexpected {text[pos]!r}", text, pos)
        sign = -1 if text[pos] == "-" else 1
        pos += 1
    rhs_text = text[eq + 1:].strip()
    m = re.fullmatch(r"([+-]?)\s*(" + _NUMBER.pattern + r")", rhs_text)
    if not m:
        raise ParseError("right-hand side must be a rational constant", text, eq + 1)
    rhs = _number(m.group(2)) * (-1 if m.group(1) == "-" else 1)
    return PolyModel(variables, tuple(terms), rhs)


def parse_monomial(text: str, variables: Sequence[str]) -> Monomial:
    text = text.strip()
    if text == "1":
        return (0,) * len(variables)
    model = parse_poly(f"{text} = 0", variables)
    if len(model.terms) != 1 or model.terms[0].coef != 1:
        raise ValueError(f"not a monomial: {text!r}")
    return model.terms[0].monomial


# -- measures --------------------------------------------------------------------

@dataclass(frozen=True)
class ModelMeasures:
    nuc: int
    hp: int
    hpv: frozenset
    sp: int

    def describe(self, variables: Sequence[str]) -> dict:
        return {
            "NUC": self.nuc,
            "HP": self.hp,
            "HPV": sorted(format_monomial(m, variables) for m in self.hpv),
            "SP": self.sp,
        }


def measures(m: PolyModel) -> ModelMeasures:
    nuc = len(m.unknowns)
    sp = sum(sum(t.monomial) for t in m.terms)
    per_var = [max((t.monomial[i] for t in m.terms), default=0) for i in range(len(m.variables))]
    hp = max(per_var, default=0)
    hpv = frozenset()
    if hp > 0:
        hpv = frozenset(
            tuple(hp if j == i else 0 for j in range(len(m.variables)))
            for i, e in enumerate(per_var) if e == hp
        )
    return ModelMeasures(nuc, hp, hpv, sp)


def c_specializes(mi: PolyModel, mj: PolyModel) -> bool:
    """Is ``mi`` obtained from ``mj`` by fixing some of ``mj``'s unknowns?

    Unknowns of ``mj`` may take any rational (0 drops the term) or be renamed
    injectively to unknowns of ``mi``; known coefficients must match exactly.
    """
    if mi.variables != mj.variables:
        raise ValueError("models use different variables")
    if mi.rhs != mj.rhs:
        return False
    rename: dict[str, str] = {}
    used: set[str] = set()
    for mono in set(mi.monomials) | set(mj.monomials):
        ci, cj = mi.coefficient(mono), mj.coefficient(mono)
        if isinstance(cj, Unknown):
            if isinstance(ci, Unknown):
                if ci.symbol in used:
                    return False
                rename[cj.symbol] = ci.symbol
                used.add(ci.symbol)
        elif isinstance(ci, Unknown) or ci != cj:
            return False
    return True


def order_mu(mi: PolyModel, mj: PolyModel) -> Order:
    """Uncertainty order by number of unknown coefficients."""
    return _compare_numbers(len(mi.unknowns), len(mj.unknowns))


def order_mg(mi: PolyModel, mj: PolyModel) -> Order:
    """Generality order from C-specialization."""
    down = c_specializes(mj, mi)
    up = c_specializes(mi, mj)
    if down and up:
        return Order.EQUAL
    if down:
        return Order.GREATER
    if up:
        return Order.LESS
    return Order.INCOMPARABLE


def order_ms(mi: PolyModel, mj: PolyModel) -> Order:
    """Simplicity order; the smaller sum of powers is the simpler (greater) model."""
    return _compare_numbers(measures(mj).sp, measures(mi).sp)


# -- parameterization ----------------------------------------------------------------

@dataclass(frozen=True)
class ParamTemplate:
    slots: tuple[Monomial, ...]

    def __post_init__(self):
        if len(set(self.slots)) != len(self.slots):
            raise ValueError("template slots must be distinct")

    @classmethod
    def parse(cls, text: str, variables: Sequence[str]) -> "ParamTemplate":
        return cls(tuple(parse_monomial(s, variables) for s in text.split(",")))

    def encodable(self, m: PolyModel) -> bool:
        return set(m.monomials) <= set(self.slots)


def parameterize(m: PolyModel, template: ParamTemplate) -> BoolVec:
    """Bit ``i`` is 1 iff the coefficient at slot ``i`` is unknown."""
    extra = set(m.monomials) - set(template.slots)
    if extra:
        names = sorted(format_monomial(e, m.variables) for e in extra)
        raise ValueError(f"monomials {names} are not template slots")
    return BoolVec.from_bits([int(isinstance(m.coefficient(s), Unknown)) for s in template.slots])


# -- empirical systems -------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalSystem:
    objects: tuple[tuple, ...]
    attributes: tuple[str, ...]
    name: str = "E"

    def __post_init__(self):
        objs = tuple(tuple(o) for o in self.objects)
        for o in objs:
            if len(o) != len(self.attributes):
                raise ValueError(f"object {o} does not match attributes {self.attributes}")
        object.__setattr__(self, "objects", objs)
        object.__setattr__(self, "attributes", tuple(self.attributes))

    def rows(self) -> Iterable[dict]:
        for o in self.objects:
            yield dict(zip(self.attributes, o))

    def __or__(self, other: "EmpiricalSystem") -> "EmpiricalSystem":
        if other.attributes != self.attributes:
            raise ValueError("attribute mismatch")
        return EmpiricalSystem(self.objects + other.objects, self.attributes, f"{self.name}|{other.name}")


def boolean_similarity(m: PolyModel, e: EmpiricalSystem, tolerance=0) -> int:
    """1 iff every object of ``e`` satisfies ``m`` within ``tolerance``."""
    if m.unknowns:
        raise ValueError(f"boolean similarity needs a fully known model; {m} has {m.unknowns}")
    missing = set(m.variables) - set(e.attributes)
    if missing:
        raise ValueError(f"data lacks variables {sorted(missing)}")
    tol = Fraction(tolerance)
    return int(all(abs(m.lhs(row) - m.rhs) <= tol for row in e.rows()))


# -- match mappings ----------------------------------------------------------------------

@dataclass
class MatchReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


_POLY_ORDERS = {"g": order_mg, "u": order_mu, "s": order_ms}


def verify_match_mapping(models: Sequence, measures_: Sequence, f_map: dict,
                         model_orders: Optional[dict[str, Callable]] = None) -> MatchReport:
    """Check that ``f_map`` is a homomorphism of the three orders.

    ``measures_[f_map[a]]`` must support ``geq_g``, ``geq_u`` and ``geq_s``.
    Each violation is ``(a, b, relation)``: ``M_a >=_M{rel} M_b`` holds but
    the image pair is not ordered the same way.
    """
    orders = model_orders or _POLY_ORDERS
    missing = [i for i in range(len(models)) if i not in f_map]
    if missing:
        raise ValueError(f"match mapping undefined for models {missing}")
    report = MatchReport()
    for a in range(len(models)):
        for b in range(len(models)):
            la, lb = measures_[f_map[a]], measures_[f_map[b]]
            for rel in ("g", "u", "s"):
                if orders[rel](models[a], models[b]).geq and not getattr(la, f"geq_{rel}")(lb):
                    report.violations.append((a, b, rel))
    return report
