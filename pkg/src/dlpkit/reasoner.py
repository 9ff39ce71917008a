"""Forward chaining over facts ``w(from, evidence, to)``.

Evidence terms are atoms combined by union and intersection.  Five rules are
available:

* ``CA``  w(i,e1,k) or w(i,e2,k)    =>  w(i, e1 u e2, k)
* ``DA``  w(i,e1,k) and w(i,e2,k)   =>  w(i, e1 n e2, k)
* ``DCA`` w(i,e1,k) and w(i,e2,k)   =>  w(i, e1 u e2, k)
* ``IA``  w(i, e1 n e2, k)          =>  w(i, e1 u e2, k)
* ``TA``  w(i,e,j) and w(j,e,k)     =>  w(i,e,k)

Only terms whose union/intersection nesting stays within a depth bound are
generated, which keeps the closure finite.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union as TUnion

import numpy as np

RULES = ("CA", "DA", "DCA", "IA", "TA")
GIVEN = "Given"
MAX_UNIVERSE = 20000


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name

    @property
    def depth(self) -> int:
        return 0


@dataclass(frozen=True)
class Union:
    args: frozenset

    def __str__(self) -> str:
        return "(" + " u ".join(sorted(map(str, self.args))) + ")"

    @property
    def depth(self) -> int:
        return 1 + max(a.depth for a in self.args)


@dataclass(frozen=True)
class Intersect:
    args: frozenset

    def __str__(self) -> str:
        return "(" + " n ".join(sorted(map(str, self.args))) + ")"

    @property
    def depth(self) -> int:
        return 1 + max(a.depth for a in self.args)


EvidenceTerm = TUnion[Atom, Union, Intersect]


def _combine(kind, terms: Iterable[EvidenceTerm]) -> EvidenceTerm:
    flat = set()
    for t in terms:
        if isinstance(t, kind):
            flat |= t.args
        else:
            flat.add(t)
    if not flat:
        raise ValueError("empty combination")
    if len(flat) == 1:
        return next(iter(flat))
    return kind(frozenset(flat))


def union(*terms: EvidenceTerm) -> EvidenceTerm:
    return _combine(Union, terms)


def intersect(*terms: EvidenceTerm) -> EvidenceTerm:
    return _combine(Intersect, terms)


def atoms_of(t: EvidenceTerm) -> set[str]:
    if isinstance(t, Atom):
        return {t.name}
    return set().union(*(atoms_of(a) for a in t.args))


@dataclass(frozen=True)
class Fact:
    from_model: str
    evidence: EvidenceTerm
    to_model: str

    def __str__(self) -> str:
        return f"w({self.from_model}, {self.evidence}, {self.to_model})"


# -- parsing -------------------------------------------------------------------------

_TOK = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|(\()|(\))|(,))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOK.match(text, pos)
            if not m:
                raise ValueError(f"unexpected character at position {pos} in {text!r}")
            kind = m.lastindex
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind is not None and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value or {1: "a name", 2: "'('", 3: "')'", 4: "','"}.get(kind, "a token")
            raise ValueError(f"expected {want} at position {tok[2]} in {self.text!r}")
        self.i += 1
        return tok

    def term(self) -> EvidenceTerm:
        kind, val, pos = self.peek()
        if kind == 1:
            self.take()
            return Atom(val)
        self.take(2)
        parts = [self.term()]
        op = None
        while self.peek()[0] == 1 and self.peek()[1] in ("u", "n"):
            o = self.take()[1]
            if op is not None and o != op:
                raise ValueError(f"mixed 'u' and 'n' without parentheses at position {self.peek()[2]}")
            op = o
            parts.append(self.term())
        self.take(3)
        if op is None:
            return parts[0]
        return union(*parts) if op == "u" else intersect(*parts)

    def fact(self) -> Fact:
        self.take(1, "w")
        self.take(2)
        a = self.take(1)[1]
        self.take(4)
        e = self.term()
        self.take(4)
        b = self.take(1)[1]
        self.take(3)
        return Fact(a, e, b)

    def done(self):
        if self.peek()[0] is not None:
            raise ValueError(f"trailing input at position {self.peek()[2]} in {self.text!r}")


def parse_term(text: str) -> EvidenceTerm:
    p = _Parser(text)
    t = p.term()
    p.done()
    return t


def parse_fact(text: str) -> Fact:
    p = _Parser(text)
    f = p.fact()
    p.done()
    return f


def parse_kb(text: str) -> set[Fact]:
    out = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.add(parse_fact(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out


# -- term universe ---------------------------------------------------------------------

class Universe:
    """All terms over a set of atoms up to a nesting depth, with operation tables."""

    def __init__(self, atoms: Iterable[str], depth: int):
        if depth < 0:
            raise ValueError("depth must be non-negative")
        level = {Atom(a) for a in atoms}
        for _ in range(depth):
            base = sorted(level, key=str)
            if 2 ** len(base) > 4 * MAX_UNIVERSE:
                raise ValueError(f"term universe too large at depth {depth}")
            nxt = set(level)
            for r in range(2, len(base) + 1):
                for combo in itertools.combinations(base, r):
                    nxt.add(union(*combo))
                    nxt.add(intersect(*combo))
            level = {t for t in nxt if t.depth <= depth}
            if len(level) > MAX_UNIVERSE:
                raise ValueError(f"term universe exceeds {MAX_UNIVERSE} terms")
        self.depth = depth
        self.terms = sorted(level, key=lambda t: (t.depth, str(t)))
        self.index = {t: i for i, t in enumerate(self.terms)}
        self._union = None
        self._inter = None

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, t) -> bool:
        return t in self.index

    def _table(self, op) -> np.ndarray:
        u = len(self.terms)
        tab = np.full((u, u), -1, dtype=np.int64)
        for i, a in enumerate(self.terms):
            for j in range(i, u):
                k = self.index.get(op(a, self.terms[j]), -1)
                tab[i, j] = tab[j, i] = k
        return tab

    @property
    def union_table(self) -> np.ndarray:
        if self._union is None:
            self._union = self._table(union)
        return self._union

    @property
    def inter_table(self) -> np.ndarray:
        if self._inter is None:
            self._inter = self._table(intersect)
        return self._inter

    def inclusion_targets(self, t: EvidenceTerm) -> set[int]:
        """Indices of ``e1 u e2`` for every split ``t = e1 n e2`` (arguments may overlap)."""
        if not isinstance(t, Intersect):
            return set()
        args = sorted(t.args, key=str)
        out = set()
        subsets = [frozenset(c) for r in range(1, len(args) + 1) for c in itertools.combinations(args, r)]
        for s1 in subsets:
            for s2 in subsets:
                if s1 | s2 != t.args:
                    continue
                k = self.index.get(union(intersect(*s1), intersect(*s2)), -1)
                if k >= 0:
                    out.add(k)
        return out


def _models_and_atoms(kb: Iterable[Fact]):
    models, atoms = set(), set()
    for f in kb:
        models |= {f.from_model, f.to_model}
        atoms |= atoms_of(f.evidence)
    return sorted(models), sorted(atoms)


def _check_rules(rules) -> frozenset:
    rules = frozenset(rules)
    bad = rules - set(RULES)
    if bad:
        raise ValueError(f"unknown rules {sorted(bad)}")
    return rules


# -- closure ------------------------------------------------------------------------------

def closure(kb: Iterable[Fact], depth: int = 1, rules: Iterable[str] = RULES,
            extra_atoms: Iterable[str] = ()) -> set[Fact]:
    """Least fixpoint of ``rules`` over terms of nesting depth at most ``depth``."""
    kb = set(kb)
    rules = _check_rules(rules)
    if not kb:
        return set()
    models, atoms = _models_and_atoms(kb)
    uni = Universe(set(atoms) | set(extra_atoms), depth)
    for f in kb:
        if f.evidence not in uni:
            raise ValueError(f"{f} exceeds the depth bound {depth}")
    mi = {m: i for i, m in enumerate(models)}
    M, U = len(models), len(uni)
    F = np.zeros((M, M, U), dtype=bool)
    for f in kb:
        F[mi[f.from_model], mi[f.to_model], uni.index[f.evidence]] = True

    ca = ia = None
    if "CA" in rules:
        ut = uni.union_table
        ca = np.zeros((U, U), dtype=bool)
        for t in range(U):
            tgt = ut[t][ut[t] >= 0]
            ca[t, tgt] = True
    if "IA" in rules:
        ia = np.zeros((U, U), dtype=bool)
        for t, term in enumerate(uni.terms):
            for s in uni.inclusion_targets(term):
                ia[t, s] = True

    while True:
        before = int(F.sum())
        flat = F.reshape(M * M, U)
        if ca is not None:
            flat |= (flat.astype(np.int32) @ ca.astype(np.int32)) > 0
        if ia is not None:
            flat |= (flat.astype(np.int32) @ ia.astype(np.int32)) > 0
        for rule, tab in (("DA", "inter_table"), ("DCA", "union_table")):
            if rule not in rules:
                continue
            table = getattr(uni, tab)
            for p in np.flatnonzero(flat.any(axis=1)):
                idx = np.flatnonzero(flat[p])
                res = table[np.ix_(idx, idx)].ravel()
                flat[p, res[res >= 0]] = True
        if "TA" in rules:
            for k in range(M):
                F |= F[:, k:k + 1, :] & F[k:k + 1, :, :]
        if int(F.sum()) == before:
            break
    out = set()
    for i, k, t in zip(*np.nonzero(F)):
        out.add(Fact(models[i], uni.terms[t], models[k]))
    return out


# -- derivations ------------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivationStep:
    rule: str
    premises: tuple[int, ...]
    conclusion: Fact

    def __str__(self) -> str:
        refs = ", ".join(f"#{p}" for p in self.premises)
        return f"{self.conclusion}  [{self.rule}{' ' + refs if refs else ''}]"


@dataclass(frozen=True)
class Derivation:
    goal: Fact
    steps: tuple[DerivationStep, ...]

    @property
    def length(self) -> int:
        return sum(1 for s in self.steps if s.rule != GIVEN)

    def __str__(self) -> str:
        return "\n".join(f"#{i} {s}" for i, s in enumerate(self.steps))


def _one_round(known: dict, uni: Universe, rules: frozenset, ia_cache: dict) -> dict:
    """All facts derivable in one rule application from ``known`` and not yet in it."""
    new: dict = {}
    by_pair: dict = {}
    by_from: dict = {}
    for (i, t, k) in known:
        by_pair.setdefault((i, k), []).append(t)
        by_from.setdefault((i, t), []).append(k)

    def add(fact, rule, prem):
        if fact not in known and fact not in new:
            new[fact] = (rule, prem)

    for (i, k), ts in sorted(by_pair.items()):
        ts = sorted(ts)
        if "CA" in rules:
            ut = uni.union_table
            for t in ts:
                for s in ut[t]:
                    if s >= 0:
                        add((i, int(s), k), "CA", ((i, t, k),))
        for rule, tab in (("DA", "inter_table"), ("DCA", "union_table")):
            if rule in rules:
                table = getattr(uni, tab)
                for a in ts:
                    for b in ts:
                        s = int(table[a, b])
                        if s >= 0:
                            add((i, s, k), rule, ((i, a, k), (i, b, k)))
        if "IA" in rules:
            for t in ts:
                if t not in ia_cache:
                    ia_cache[t] = sorted(uni.inclusion_targets(uni.terms[t]))
                for s in ia_cache[t]:
                    add((i, s, k), "IA", ((i, t, k),))
    if "TA" in rules:
        for (i, t, j) in sorted(known):
            for k in sorted(by_from.get((j, t), ())):
                add((i, t, k), "TA", ((i, t, j), (j, t, k)))
    return new


def derive(kb: Iterable[Fact], goal: Fact, depth: int = 1, rules: Iterable[str] = RULES,
           max_rounds: int = 64) -> Optional[Derivation]:
    """Breadth-first search for ``goal``; returns ``None`` when it is not derivable."""
    kb = set(kb)
    rules = _check_rules(rules)
    if not kb:
        return None
    models, atoms = _models_and_atoms(kb)
    try:
        uni = Universe(set(atoms) | atoms_of(goal.evidence), depth)
    except ValueError:
        return None
    if goal.evidence not in uni:
        return None

    def enc(f: Fact):
        return (f.from_model, uni.index[f.evidence], f.to_model)

    def dec(key) -> Fact:
        return Fact(key[0], uni.terms[key[1]], key[2])

    known = {enc(f): (GIVEN, ()) for f in kb}
    target = enc(goal)
    ia_cache: dict = {}
    rounds = 0
    while target not in known:
        new = _one_round(known, uni, rules, ia_cache)
        if not new or rounds >= max_rounds:
            return None
        known.update(new)
        rounds += 1

    order: list = []
    seen: set = set()

    def visit(key):
        if key in seen:
            return
        seen.add(key)
        for p in known[key][1]:
            visit(p)
        order.append(key)

    visit(target)
    pos = {k: i for i, k in enumerate(order)}
    steps = tuple(DerivationStep(known[k][0], tuple(pos[p] for p in known[k][1]), dec(k)) for k in order)
    return Derivation(goal, steps)


def semantic_fact_holds(check, fact: Fact, datasets: dict, models: dict) -> bool:
    """Evaluate a fact by combining named datasets and calling ``check(mi, data, mk)``.

    Union concatenates the datasets; intersection keeps shared rows.
    """
    def build(t: EvidenceTerm):
        if isinstance(t, Atom):
            return [tuple(np.atleast_1d(r)) for r in datasets[t.name]]
        parts = [build(a) for a in t.args]
        if isinstance(t, Union):
            seen, out = set(), []
            for p in parts:
                for r in p:
                    if r not in seen:
                        seen.add(r)
                        out.append(r)
            return out
        common = set(parts[0]).intersection(*map(set, parts[1:]))
        return [r for r in parts[0] if r in common]

    return bool(check(models[fact.from_model], build(fact.evidence), models[fact.to_model]))
