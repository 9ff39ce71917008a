"""Boolean and k-valued parameter vectors and the Hansel chain cover of {0,1}^n.

Vectors are stored as integers; the canonical text form is most-significant
bit first, so ``BoolVec.parse("1110").value == 0b1110``.  Position ``i`` of the
text (0-based, left to right) is parameter ``x_{i+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

MAX_DIM = 24


def _check_dim(n: int) -> int:
    if not isinstance(n, (int,)) or isinstance(n, bool) or not 1 <= n <= MAX_DIM:
        raise ValueError(f"dimension must be an integer in 1..{MAX_DIM}, got {n!r}")
    return n


@dataclass(frozen=True, order=True)
class BoolVec:
    n: int
    value: int

    def __post_init__(self):
        _check_dim(self.n)
        if not 0 <= self.value < (1 << self.n):
            raise ValueError(f"value {self.value} does not fit in {self.n} bits")

    @classmethod
    def parse(cls, text: str) -> "BoolVec":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(len(text), int(text, 2))

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "BoolVec":
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"bits must be 0/1: {bits!r}")
        return cls.parse("".join(str(b) for b in bits))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> (self.n - 1 - i)) & 1 for i in range(self.n))

    @property
    def weight(self) -> int:
        return bin(self.value).count("1")

    def __str__(self) -> str:
        return format(self.value, f"0{self.n}b")

    def __repr__(self) -> str:
        return f"BoolVec('{self}')"


def to_bits(value: int, n: int) -> str:
    return format(value, f"0{n}b")


def vec_leq(a: BoolVec, b: BoolVec) -> bool:
    """Componentwise ``a <= b``."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    return a.value & ~b.value == 0


@dataclass(frozen=True)
class KValuedVec:
    """Vector over ``U = {0, 1/(k-1), ..., 1}``."""

    values: tuple[Fraction, ...]
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        vals = tuple(Fraction(v) for v in self.values)
        for v in vals:
            level = v * (self.k - 1)
            if level.denominator != 1 or not 0 <= level <= self.k - 1:
                raise ValueError(f"{v} is not a level of U for k={self.k}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(int(v * (self.k - 1)) for v in self.values)


def kvec_leq(a: KValuedVec, b: KValuedVec) -> bool:
    if a.k != b.k:
        raise ValueError(f"level count mismatch: {a.k} vs {b.k}")
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    return all(x <= y for x, y in zip(a.values, b.values))


@dataclass(frozen=True)
class HanselChain:
    n: int
    elements: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[BoolVec]:
        return (BoolVec(self.n, v) for v in self.elements)

    @property
    def minimum(self) -> int:
        return self.elements[0]

    def __str__(self) -> str:
        return " < ".join(to_bits(v, self.n) for v in self.elements)


@dataclass(frozen=True)
class ChainCover:
    n: int
    chains: tuple[HanselChain, ...]

    def __len__(self) -> int:
        return len(self.chains)

    def __iter__(self) -> Iterator[HanselChain]:
        return iter(self.chains)

    def lengths(self) -> list[int]:
        return [len(c) for c in self.chains]

    def to_text(self) -> str:
        return "".join(f"{c}\n" for c in self.chains)

    @classmethod
    def from_text(cls, text: str) -> "ChainCover":
        chains = []
        n = None
        for line in text.splitlines():
            if not line.strip():
                continue
            vecs = [BoolVec.parse(tok) for tok in line.split("<")]
            if n is None:
                n = vecs[0].n
            if any(v.n != n for v in vecs):
                raise ValueError(f"mixed dimensions in chain line {line!r}")
            chains.append(HanselChain(n, tuple(v.value for v in vecs)))
        if n is None:
            raise ValueError("empty chain cover")
        return cls(n, tuple(chains))


@lru_cache(maxsize=None)
def _raw_chains(n: int) -> tuple[tuple[int, ...], ...]:
    if n == 1:
        return ((0, 1),)
    top = 1 << (n - 1)
    out = []
    for c in _raw_chains(n - 1):
        out.append(c + (c[-1] | top,))
        if len(c) > 1:
            out.append(tuple(v | top for v in c[:-1]))
    return tuple(out)


@lru_cache(maxsize=None)
def hansel_chains(n: int) -> ChainCover:
    """Partition {0,1}^n into saturated symmetric chains.

    Grow-shrink recursion: every chain (v1..vk) over n-1 bits yields
    (v1·0, .., vk·0, vk·1) and (v1·1, .., v(k-1)·1), the new bit being the most
    significant one.  Chains are sorted by length, then by minimum element.
    """
    _check_dim(n)
    raw = sorted(_raw_chains(n), key=lambda c: (len(c), c[0]))
    return ChainCover(n, tuple(HanselChain(n, c) for c in raw))
