"""Restoration of monotone Boolean functions from an oracle along Hansel chains."""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .lattice import BoolVec, _check_dim, hansel_chains, to_bits
from .trace import INFERRED, TESTED, Trace

UNKNOWN, ZERO, ONE = -1, 0, 1
_SRC_NONE, _SRC_TESTED, _SRC_INFERRED = 0, 1, 2

# full down-set matrices are cached up to this dimension (4096^2 bytes)
_MATRIX_MAX_DIM = 12


class OracleInconsistency(ValueError):
    """Oracle answers contradict monotonicity.

    ``pair`` is ``(low, high)`` with ``low <= high``, ``f(low) = 1`` and
    ``f(high) = 0``; ``vector`` is the vector whose answer exposed it.
    """

    def __init__(self, low: BoolVec, high: BoolVec, vector: Optional[BoolVec] = None):
        self.pair = (low, high)
        self.vector = vector
        super().__init__(f"non-monotone oracle: f({low})=1 but f({high})=0 with {low} <= {high}")


class RestorationAborted(RuntimeError):
    def __init__(self, message: str, trace: Trace):
        super().__init__(message)
        self.trace = trace


def shannon_bound(n: int) -> int:
    _check_dim(n)
    return comb(n, n // 2) + comb(n, n // 2 + 1)


@lru_cache(maxsize=None)
def _index(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


@lru_cache(maxsize=8)
def _down_matrix(n: int) -> np.ndarray:
    idx = _index(n)
    return (idx[None, :] & ~idx[:, None]) == 0  # [v, w] -> w <= v


def _down_mask(n: int, v: int) -> np.ndarray:
    if n <= _MATRIX_MAX_DIM:
        return _down_matrix(n)[v]
    idx = _index(n)
    return (idx & ~v) == 0


def _up_mask(n: int, v: int) -> np.ndarray:
    if n <= _MATRIX_MAX_DIM:
        return _down_matrix(n)[:, v]
    idx = _index(n)
    return (idx & v) == v


@dataclass
class FnTable:
    n: int
    values: np.ndarray

    def __post_init__(self):
        _check_dim(self.n)
        vals = np.asarray(self.values, dtype=np.uint8)
        if vals.shape != (1 << self.n,):
            raise ValueError(f"table needs {1 << self.n} entries, got {vals.shape}")
        if np.any(vals > 1):
            raise ValueError("table values must be 0/1")
        self.values = vals

    def __call__(self, v: Union[BoolVec, int, str]) -> int:
        return int(self.values[_as_int(v, self.n)])

    def __eq__(self, other) -> bool:
        return isinstance(other, FnTable) and self.n == other.n and np.array_equal(self.values, other.values)

    def ones(self) -> list[BoolVec]:
        return [BoolVec(self.n, int(v)) for v in np.flatnonzero(self.values)]

    @classmethod
    def from_callable(cls, n: int, f: Callable[[BoolVec], int]) -> "FnTable":
        return cls(n, np.array([int(f(BoolVec(n, v))) for v in range(1 << n)], dtype=np.uint8))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "FnTable":
        if not mapping:
            raise ValueError("empty table")
        keys = [BoolVec.parse(k) if isinstance(k, str) else k for k in mapping]
        n = keys[0].n
        vals = np.full(1 << n, 255, dtype=np.int64)
        for k, val in zip(keys, mapping.values()):
            if k.n != n:
                raise ValueError("mixed dimensions in table")
            vals[k.value] = int(val)
        if np.any(vals == 255):
            missing = to_bits(int(np.flatnonzero(vals == 255)[0]), n)
            raise ValueError(f"table is not total: no value for {missing}")
        return cls(n, vals)

    def to_text(self) -> str:
        return "".join(f"{to_bits(v, self.n)} {int(x)}\n" for v, x in enumerate(self.values))

    @classmethod
    def from_text(cls, text: str) -> "FnTable":
        mapping = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("0", "1"):
                raise ValueError(f"line {lineno}: expected '<bits> <0|1>', got {line!r}")
            if parts[0] in mapping:
                raise ValueError(f"line {lineno}: duplicate vector {parts[0]}")
            mapping[parts[0]] = int(parts[1])
        return cls.from_mapping(mapping)


def _as_int(v, n: int) -> int:
    if isinstance(v, BoolVec):
        if v.n != n:
            raise ValueError(f"dimension mismatch: {v.n} vs {n}")
        return v.value
    if isinstance(v, str):
        return _as_int(BoolVec.parse(v), n)
    return int(v)


# -- monotone expressions ---------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(x\d+)|(AND|and|&&?|\*)|(OR|or|\|\|?|\+)|([01])|(\()|(\)))")


def parse_expression(text: str, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a negation-free formula over ``x1..xn`` into a vectorized evaluator.

    The evaluator maps an int array of vectors to a 0/1 array.
    """
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad token at position {pos} in {text!r}")
        kind = m.lastindex
        tok = m.group(kind)
        if kind == 1:
            i = int(tok[1:])
            if not 1 <= i <= n:
                raise ValueError(f"variable {tok} out of range 1..{n}")
        tokens.append((kind, tok, m.start(kind)))
        pos = m.end()
    tokens.append((0, "", len(text)))
    i = 0

    def peek():
        return tokens[i]

    def take(kind):
        nonlocal i
        if tokens[i][0] != kind:
            raise ValueError(f"unexpected {tokens[i][1] or 'end'!r} at position {tokens[i][2]}")
        i += 1
        return tokens[i - 1]

    def expr():
        node = term()
        while peek()[0] == 3:
            take(3)
            node = ("or", node, term())
        return node

    def term():
        node = factor()
        while peek()[0] == 2:
            take(2)
            node = ("and", node, factor())
        return node

    def factor():
        kind = peek()[0]
        if kind == 1:
            return ("var", int(take(1)[1][1:]))
        if kind == 4:
            return ("const", int(take(4)[1]))
        if kind == 5:
            take(5)
            node = expr()
            take(6)
            return node
        tok = peek()
        raise ValueError(f"unexpected {tok[1] or 'end'!r} at position {tok[2]}")

    tree = expr()
    take(0)

    def ev(node, idx):
        op = node[0]
        if op == "var":
            return (idx >> (n - node[1])) & 1
        if op == "const":
            return np.full(idx.shape, node[1], dtype=np.int64)
        a, b = ev(node[1], idx), ev(node[2], idx)
        return a & b if op == "and" else a | b

    return lambda idx: ev(tree, np.asarray(idx, dtype=np.int64)).astype(np.uint8)


def expression_table(text: str, n: int) -> FnTable:
    return FnTable(n, parse_expression(text, n)(_index(n)))


# -- oracles -----------------------------------------------------------------

class TableOracle:
    def __init__(self, table: Union[FnTable, str, Path]):
        if not isinstance(table, FnTable):
            table = FnTable.from_text(Path(table).read_text())
        self.table = table
        self.n = table.n

    def __call__(self, v: int) -> int:
        return int(self.table.values[v])


class ExpressionOracle:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self._table = expression_table(text, n)

    def __call__(self, v: int) -> int:
        return int(self._table.values[v])


class ScriptedOracle:
    """Wraps a callback ``BoolVec -> 0/1``."""

    def __init__(self, n: int, callback: Callable[[BoolVec], int]):
        self.n = n
        self.callback = callback

    def __call__(self, v: int) -> int:
        ans = int(self.callback(BoolVec(self.n, v)))
        if ans not in (0, 1):
            raise ValueError(f"oracle returned {ans!r} for {to_bits(v, self.n)}")
        return ans


class OracleAbort(Exception):
    pass


class InteractiveOracle:
    """Prompts ``f(<bits>)? [0/1]``; ``q`` or end of input aborts."""

    def __init__(self, n: int, stdin=None, stdout=None):
        self.n = n
        self.stdin = stdin if stdin is not None else sys.stdin
        self.stdout = stdout if stdout is not None else sys.stdout

    def __call__(self, v: int) -> int:
        while True:
            self.stdout.write(f"f({to_bits(v, self.n)})? [0/1] ")
            self.stdout.flush()
            line = self.stdin.readline()
            if not line or line.strip().lower() in ("q", "quit"):
                raise OracleAbort(f"aborted at {to_bits(v, self.n)}")
            if line.strip() in ("0", "1"):
                return int(line.strip())


def make_oracle(spec: str, n: int, stdin=None, stdout=None):
    """Build an oracle from ``table:<path>``, ``expr:<formula>`` or ``interactive``."""
    if spec == "interactive":
        return InteractiveOracle(n, stdin, stdout)
    kind, _, arg = spec.partition(":")
    if kind == "table":
        o = TableOracle(arg)
        if o.n != n:
            raise ValueError(f"table has dimension {o.n}, expected {n}")
        return o
    if kind == "expr":
        return ExpressionOracle(arg, n)
    raise ValueError(f"unknown oracle spec {spec!r}")


# -- restoration -------------------------------------------------------------

@dataclass
class AssignmentState:
    n: int
    status: np.ndarray = field(init=False)
    source: np.ndarray = field(init=False)
    forced_by: np.ndarray = field(init=False)

    def __post_init__(self):
        size = 1 << _check_dim(self.n)
        self.status = np.full(size, UNKNOWN, dtype=np.int8)
        self.source = np.zeros(size, dtype=np.int8)
        self.forced_by = np.full(size, -1, dtype=np.int64)
        self._log: list = []  # (vector(s), value, source, chain_index, forced_by)

    def __getitem__(self, v) -> int:
        return int(self.status[_as_int(v, self.n)])

    def determined(self) -> bool:
        return bool(np.all(self.status != UNKNOWN))

    def table(self) -> FnTable:
        if not self.determined():
            raise ValueError("assignment is incomplete")
        return FnTable(self.n, self.status.astype(np.uint8))

    def trace(self) -> Trace:
        t = Trace()
        seq_of = {}
        for vecs, val, src, ci, fb in self._log:
            if src == TESTED:
                seq_of[int(vecs)] = len(t.events)
                t.append(vector=to_bits(int(vecs), self.n), verdict=val, source=TESTED, chain_index=ci)
            else:
                fseq = seq_of[fb]
                for w in vecs:
                    t.append(vector=to_bits(int(w), self.n), verdict=val, source=INFERRED,
                             chain_index=ci, forced_by=fseq)
        return t


def _tested_witness(state: AssignmentState, w: int) -> int:
    """Tested vector responsible for the value of ``w``."""
    if state.source[w] == _SRC_TESTED:
        return w
    return int(state.forced_by[w])


def expand(state: AssignmentState, v, value: int, chain_index: Optional[int] = None) -> set:
    """Record the tested value of ``v`` and propagate it by monotonicity.

    A 0 forces every unknown vector below ``v`` to 0, a 1 forces every unknown
    vector above ``v`` to 1.  Returns the newly forced ``(BoolVec, value)``
    pairs.
    """
    n = state.n
    vi = _as_int(v, n)
    if value not in (0, 1):
        raise ValueError(f"value must be 0 or 1, got {value!r}")
    cur = state.status[vi]
    if cur != UNKNOWN and cur != value:
        src = _tested_witness(state, vi)
        low, high = (vi, src) if value == 1 else (src, vi)
        raise OracleInconsistency(BoolVec(n, low), BoolVec(n, high), BoolVec(n, vi))
    if value == 0:
        region = _down_mask(n, vi)
        clash = np.flatnonzero(region & (state.status == ONE))
        if clash.size:
            low = _tested_witness(state, int(clash[0]))
            raise OracleInconsistency(BoolVec(n, low), BoolVec(n, vi), BoolVec(n, vi))
    else:
        region = _up_mask(n, vi)
        clash = np.flatnonzero(region & (state.status == ZERO))
        if clash.size:
            high = _tested_witness(state, int(clash[0]))
            raise OracleInconsistency(BoolVec(n, vi), BoolVec(n, high), BoolVec(n, vi))
    state.status[vi] = value
    state.source[vi] = _SRC_TESTED
    state.forced_by[vi] = -1
    state._log.append((vi, value, TESTED, chain_index, None))
    forced = np.flatnonzero(region & (state.status == UNKNOWN))
    if forced.size:
        state.status[forced] = value
        state.source[forced] = _SRC_INFERRED
        state.forced_by[forced] = vi
        state._log.append((forced, value, INFERRED, chain_index, vi))
    return {(BoolVec(n, int(w)), value) for w in forced}


@dataclass
class QueryStats:
    queries_asked: int
    per_chain_queries: list[int]
    bound: int


def restore(n: int, oracle, state: Optional[AssignmentState] = None):
    """Restore a monotone function with the Hansel-chain strategy.

    Chains are visited shortest first; on each chain the contiguous unknown
    segment is binary-searched for the 0/1 boundary (probe = middle element,
    rounding low), expanding every answer.  Returns ``(FnTable, QueryStats,
    Trace)``.
    """
    cover = hansel_chains(n)
    state = state if state is not None else AssignmentState(n)
    per_chain = []
    for ci, chain in enumerate(cover.chains):
        elems = np.asarray(chain.elements, dtype=np.int64)
        asked = 0
        while True:
            unknown = np.flatnonzero(state.status[elems] == UNKNOWN)
            if unknown.size == 0:
                break
            lo, hi = int(unknown[0]), int(unknown[-1])
            v = int(elems[lo + (hi - lo) // 2])
            try:
                ans = oracle(v)
            except OracleAbort as exc:
                raise RestorationAborted(str(exc), state.trace()) from None
            asked += 1
            expand(state, v, int(ans), chain_index=ci)
        per_chain.append(asked)
    stats = QueryStats(sum(per_chain), per_chain, shannon_bound(n))
    return state.table(), stats, state.trace()


# -- analysis of complete tables ---------------------------------------------

def monotonicity_witness(table: FnTable):
    """Return a violating pair ``(v, w)`` with ``v <= w``, ``f(v)=1``, ``f(w)=0``, or None."""
    n = table.n
    vals = table.values
    # checking covering pairs (one bit flipped up) suffices
    idx = _index(n)
    for bit in range(n):
        m = 1 << bit
        lower = idx[(idx & m) == 0]
        bad = np.flatnonzero((vals[lower] == 1) & (vals[lower | m] == 0))
        if bad.size:
            v = int(lower[bad[0]])
            return BoolVec(n, v), BoolVec(n, v | m)
    return None


def is_monotone(table: FnTable) -> bool:
    return monotonicity_witness(table) is None


@dataclass(frozen=True)
class LowerUnits:
    units: frozenset
    smallest: frozenset

    def __iter__(self):
        return iter(sorted(self.units))

    def __len__(self) -> int:
        return len(self.units)


def lower_units(table: FnTable) -> LowerUnits:
    """Minimal vectors of ``f^-1(1)``; ``smallest`` holds those of least weight."""
    wit = monotonicity_witness(table)
    if wit is not None:
        raise ValueError(f"table is not monotone: f({wit[0]})=1, f({wit[1]})=0")
    n = table.n
    ones = np.flatnonzero(table.values)
    minimal = []
    for v in ones:
        v = int(v)
        below = [v & ~(1 << b) for b in range(n) if v >> b & 1]
        if not any(table.values[u] for u in below):
            minimal.append(v)
    units = frozenset(BoolVec(n, v) for v in minimal)
    if not units:
        return LowerUnits(units, frozenset())
    wmin = min(u.weight for u in units)
    return LowerUnits(units, frozenset(u for u in units if u.weight == wmin))


def to_dnf(units, n: int) -> str:
    """Disjunctive normal form of the upward closure of ``units``."""
    units = sorted(units, key=lambda u: (u.weight, str(u)))
    if not units:
        return "0"
    terms = []
    for u in units:
        lits = [f"x{i + 1}" for i, b in enumerate(u.bits) if b]
        terms.append(" AND ".join(lits) if lits else "1")
    if "1" in terms:
        return "1"
    return " OR ".join(f"({t})" if " AND " in t and len(terms) > 1 else t for t in terms)


def upward_closure(n: int, generators) -> FnTable:
    vals = np.zeros(1 << n, dtype=np.uint8)
    for g in generators:
        vals[_up_mask(n, _as_int(g, n))] = 1
    return FnTable(n, vals)


def random_monotone_table(n: int, rng: np.random.Generator, max_units: Optional[int] = None) -> FnTable:
    """Upward closure of a random antichain (dominated candidates rejected)."""
    _check_dim(n)
    size = 1 << n
    if max_units is None:
        max_units = max(1, comb(n, n // 2))
    k = int(rng.integers(0, max_units + 1))
    # weights concentrated near the middle layer give richer borders
    chosen: list[int] = []
    for _ in range(k):
        w = int(np.clip(rng.binomial(n, 0.5), 0, n))
        bits = rng.permutation(n)[:w]
        v = int(sum(1 << int(b) for b in bits))
        if any((v & c) == c or (v & c) == v for c in chosen):
            continue
        chosen.append(v)
    if k and not chosen:
        chosen.append(int(rng.integers(0, size)))
    return upward_closure(n, chosen)
