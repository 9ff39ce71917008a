"""Coarse-to-fine model search that refines models and similarity measures together.

A :class:`SearchFamily` supplies candidate models, the match mapping from a
model to its similarity measure, and the specialization step that refines a
model into a denser candidate block.  :func:`run_ddlmo` drives the loop and
produces a :class:`DDLMOResult` whose consecutive steps can be re-verified
with :func:`check_w`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import mbf
from .lattice import BoolVec
from .models import (EmpiricalSystem, Order, ParamTemplate, PolyModel, Term, Unknown,
                     order_mg, order_ms, order_mu)
from .trace import Trace


class Orientation(enum.Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"

    def better(self, a: float, b: float) -> bool:
        return a > b if self is Orientation.MAXIMIZE else a < b

    @property
    def worst(self) -> float:
        return -math.inf if self is Orientation.MAXIMIZE else math.inf


@dataclass(frozen=True)
class SimilarityMeasure:
    family: str
    level: float
    params: tuple = ()
    orientation: Orientation = Orientation.MAXIMIZE
    complexity: float = 0.0

    def _same(self, other: "SimilarityMeasure"):
        if other.family != self.family:
            raise ValueError(f"measures from different families: {self.family} vs {other.family}")

    def geq_u(self, other: "SimilarityMeasure") -> bool:
        self._same(other)
        return self.level >= other.level

    def geq_g(self, other: "SimilarityMeasure") -> bool:
        self._same(other)
        return self.level >= other.level

    def geq_s(self, other: "SimilarityMeasure") -> bool:
        return self.complexity <= other.complexity

    def __str__(self) -> str:
        extra = ",".join(f"{p:g}" if isinstance(p, (int, float)) else str(p) for p in self.params)
        return f"{self.family}[{self.level:g}]" + (f"({extra})" if extra else "")


_EVALUATORS: dict[str, Callable[[SimilarityMeasure, Any, Any], float]] = {}


def register_family(name: str, evaluator: Callable[[SimilarityMeasure, Any, Any], float]) -> None:
    _EVALUATORS[name] = evaluator


def measure_eval(measure: SimilarityMeasure, model, data) -> float:
    try:
        evaluator = _EVALUATORS[measure.family]
    except KeyError:
        raise ValueError(f"no evaluator registered for measure family {measure.family!r}") from None
    return float(evaluator(measure, model, data))


# Identity family: the measure matched to M(c, r) accepts models of radius <= r + eps.

RADIUS_TOLERANCE = "radius-tolerance"


def radius_tolerance_measure(center: float, radius: float, eps: float = 0.0) -> SimilarityMeasure:
    return SimilarityMeasure(RADIUS_TOLERANCE, level=radius + eps, params=(center, eps))


def _radius_tolerance_eval(measure: SimilarityMeasure, model, data) -> float:
    center, _eps = measure.params
    for attr in ("c", "r"):
        if not hasattr(model, attr):
            raise ValueError(f"radius-tolerance measures need models with c and r, got {model!r}")
    return float(model.c == center and model.r <= measure.level)


register_family(RADIUS_TOLERANCE, _radius_tolerance_eval)


def identity_match(model, eps: float = 0.0) -> SimilarityMeasure:
    return radius_tolerance_measure(model.c, model.r, eps)


# -- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class Config:
    threshold: Optional[float] = None
    max_depth: int = 3
    refine_factor: int = 2
    window: int = 1
    orientation: str = "maximize"
    kappa: float = 0.5
    shrink_rho: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.threshold is not None and not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if not isinstance(self.max_depth, int) or not 0 <= self.max_depth <= 16:
            raise ValueError("max_depth must be an integer in 0..16")
        if not isinstance(self.refine_factor, int) or self.refine_factor < 2:
            raise ValueError("refine_factor must be an integer >= 2")
        if not isinstance(self.window, int) or self.window < 1:
            raise ValueError("window must be a positive integer")
        Orientation(self.orientation)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.shrink_rho < 1:
            raise ValueError("shrink_rho must lie in (0, 1)")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer")

    @property
    def orient(self) -> Orientation:
        return Orientation(self.orientation)

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def override(self, **kw) -> "Config":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# -- candidate sets and families ------------------------------------------------------

class RefinementExhausted(Exception):
    """Raised when no further candidates can be produced."""


@dataclass
class CandidateSet:
    models: list
    level: int
    relocated: bool = False
    exhausted: bool = False
    explored: frozenset = frozenset()

    def __post_init__(self):
        if not self.exhausted and not self.models:
            raise ValueError("a live candidate set must be nonempty")

    def __len__(self) -> int:
        return len(self.models)


@dataclass(frozen=True)
class GridModel:
    """A point of a parameter grid; ``stride`` is its uncertainty."""

    kind: str
    params: tuple[int, ...]
    stride: int

    def __str__(self) -> str:
        return f"{self.kind}({','.join(map(str, self.params))};s={self.stride})"


def grid_order_u(a: GridModel, b: GridModel) -> Order:
    return Order.GREATER if a.stride > b.stride else Order.LESS if a.stride < b.stride else Order.EQUAL


def grid_order_g(a: GridModel, b: GridModel, window: int = 1) -> Order:
    """``a`` is more general than ``b`` when ``b`` is a finer point inside ``a``'s window."""
    if a == b:
        return Order.EQUAL

    def covers(p: GridModel, q: GridModel) -> bool:
        return p.stride > q.stride and all(abs(x - y) <= window * p.stride for x, y in zip(p.params, q.params))

    if covers(a, b):
        return Order.GREATER
    if covers(b, a):
        return Order.LESS
    return Order.INCOMPARABLE


def grid_order_s(a: GridModel, b: GridModel) -> Order:
    return Order.EQUAL if len(a.params) == len(b.params) else Order.INCOMPARABLE


class SearchFamily:
    """Interface for one model/measure family driven by :func:`run_ddlmo`."""

    name = "family"
    orientation = Orientation.MAXIMIZE
    max_depth = 0

    def __init__(self):
        self.evaluations = 0

    # required
    def initial_candidates(self, cfg: Config) -> list:
        raise NotImplementedError

    def match(self, model) -> SimilarityMeasure:
        raise NotImplementedError

    def score(self, measure: SimilarityMeasure, model, data) -> float:
        return measure_eval(measure, model, data)

    def depth(self, model) -> int:
        raise NotImplementedError

    def refine(self, model, cfg: Config) -> list:
        raise NotImplementedError

    # overridable policy
    def threshold(self, cfg: Config) -> float:
        return cfg.threshold if cfg.threshold is not None else self.orientation.worst

    def accepted(self, model, score: float, cfg: Config) -> bool:
        t = self.threshold(cfg)
        return score >= t if self.orientation is Orientation.MAXIMIZE else score <= t

    def poor(self, model, score: float, cfg: Config) -> bool:
        t = self.threshold(cfg)
        if not math.isfinite(t):
            return False
        # half the threshold for positive thresholds, mirrored for negative ones
        if self.orientation is Orientation.MAXIMIZE:
            return score < t - abs(t) / 2
        return score > t + abs(t)

    def is_final(self, measure: SimilarityMeasure) -> bool:
        raise NotImplementedError

    def model_orders(self) -> dict[str, Callable]:
        return {"u": grid_order_u, "g": grid_order_g, "s": grid_order_s}

    def canonical_key(self, model):
        return str(model)

    def describe(self, model) -> str:
        return str(model)

    def root_key(self, model):
        """Identity of the coarse cell a model descends from (used by relocation)."""
        return self.canonical_key(model)

    def evaluate(self, model, data) -> tuple[SimilarityMeasure, float]:
        measure = self.match(model)
        self.evaluations += 1
        return measure, self.score(measure, model, data)


def match_f(model, family: SearchFamily) -> SimilarityMeasure:
    return family.match(model)


# -- selection -----------------------------------------------------------------------

def select_model(candidates: Sequence, scores: Sequence[float], orders: Optional[dict] = None,
                 orientation: Orientation = Orientation.MAXIMIZE,
                 key: Callable = str) -> tuple[Any, int, bool]:
    """Pick the best-scoring candidate, preferring the most uncertain then the most general.

    Returns ``(model, index, arbitrary)``; ``arbitrary`` is set when the final
    choice among tied, mutually maximal candidates fell to canonical order.
    """
    if len(candidates) != len(scores):
        raise ValueError("candidates and scores differ in length")
    if not candidates:
        raise ValueError("cannot select from an empty candidate list")
    if any(isinstance(s, float) and math.isnan(s) for s in scores):
        raise ValueError("scores contain NaN")
    orders = orders or {"u": order_mu, "g": order_mg}
    best = scores[0]
    for s in scores[1:]:
        if orientation.better(s, best):
            best = s
    pool = [i for i, s in enumerate(scores) if s == best]
    for rel in ("u", "g"):
        if len(pool) > 1:
            pool = [i for i in pool
                    if not any(orders[rel](candidates[j], candidates[i]) is Order.GREATER for j in pool)]
    arbitrary = len(pool) > 1
    idx = min(pool, key=lambda i: (key(candidates[i]), i))
    return candidates[idx], idx, arbitrary


# -- the engine --------------------------------------------------------------------------

@dataclass
class SearchState:
    """Relocation bookkeeping: coarse candidates ranked by score, and those already tried."""

    coarse: tuple = ()
    explored: frozenset = frozenset()
    relocations: int = 0


def specialize_h(model, score: float, family: SearchFamily, cfg: Config,
                 state: SearchState, max_relocations: int = 4) -> CandidateSet:
    """Produce the refined candidate block around ``model``.

    When ``model`` scores poorly, or sits at maximum depth without being
    accepted, the block is taken from the best unexplored coarse cell instead.
    An exhausted set is returned when neither option remains.
    """
    depth = family.depth(model)
    stuck = depth >= family.max_depth and not family.accepted(model, score, cfg)
    if family.poor(model, score, cfg) or stuck:
        if state.relocations >= max_relocations:
            return CandidateSet([], depth, relocated=True, exhausted=True, explored=state.explored)
        for coarse_model, _ in state.coarse:
            k = family.root_key(coarse_model)
            if k in state.explored:
                continue
            kids = family.refine(coarse_model, cfg)
            explored = state.explored | {k}
            if not kids:
                return CandidateSet([], depth, relocated=True, exhausted=True, explored=explored)
            return CandidateSet(kids, family.depth(coarse_model) + 1, relocated=True, explored=explored)
        return CandidateSet([], depth, relocated=True, exhausted=True, explored=state.explored)
    if depth >= family.max_depth:
        return CandidateSet([], depth, exhausted=True, explored=state.explored)
    kids = family.refine(model, cfg)
    if not kids:
        return CandidateSet([], depth, exhausted=True, explored=state.explored)
    return CandidateSet(kids, depth + 1, explored=state.explored)


@dataclass
class Step:
    model: Any
    measure: SimilarityMeasure
    score: float
    depth: int
    relocated: bool = False
    arbitrary: bool = False
    state: Optional[SearchState] = None  # state before the step that produced this one
    evaluated: int = 0


@dataclass
class LearnResult:
    model: Any
    measure: SimilarityMeasure
    score: float
    state: SearchState
    relocated: bool
    arbitrary: bool
    evaluated: int


def learn_step(model, score: float, data, family: SearchFamily, cfg: Config,
               state: SearchState, max_relocations: int = 4) -> LearnResult:
    """One application of the learning operator: refine, evaluate, select.

    A relocated block is kept only if its best model strictly beats
    ``model``'s score; otherwise the next unexplored coarse cell is tried.
    Raises :class:`RefinementExhausted` when nothing is left.
    """
    evaluated = 0
    while True:
        cs = specialize_h(model, score, family, cfg, state, max_relocations)
        if cs.exhausted:
            raise RefinementExhausted(f"no refinement left for {family.describe(model)}")
        if cs.relocated:
            state = replace(state, explored=cs.explored, relocations=state.relocations + 1)
        results = [family.evaluate(c, data) for c in cs.models]
        evaluated += len(results)
        scores = [s for _, s in results]
        best, idx, arbitrary = select_model(cs.models, scores, family.model_orders(),
                                            family.orientation, family.canonical_key)
        if cs.relocated and not family.orientation.better(scores[idx], score):
            continue
        return LearnResult(best, results[idx][0], scores[idx], state, cs.relocated, arbitrary, evaluated)


@dataclass
class DDLMOResult:
    steps: list[Step]
    found: bool
    counters: dict = field(default_factory=dict)
    run: int = 0

    @property
    def model(self):
        return self.steps[-1].model if self.found else None

    @property
    def outcome(self) -> str:
        return "found" if self.found else "exhausted"

    def trace(self, family: SearchFamily, cfg: Config, into: Optional[Trace] = None) -> Trace:
        t = into if into is not None else Trace()
        for s in self.steps:
            t.append(verdict=int(family.accepted(s.model, s.score, cfg)), model=family.describe(s.model),
                     level=float(s.measure.level),
                     score=float(s.score) if math.isfinite(s.score) else None,
                     depth=s.depth, run=self.run, relocated=s.relocated or None,
                     arbitrary=s.arbitrary or None)
        for k, v in self.counters.items():
            t.counters[k] = t.counters.get(k, 0) + v
        return t


def run_ddlmo(family: SearchFamily, data, cfg: Config, *, state: Optional[SearchState] = None,
              max_relocations: int = 4, run: int = 0) -> DDLMOResult:
    """Iterate the learning operator until the final measure accepts a model.

    The first step is the best initial candidate.  The loop ends with success
    when the matched measure is final and the model is accepted, and with an
    exhausted outcome when no refinement or relocation remains.
    """
    start = family.evaluations
    expansions = 0
    initial = family.initial_candidates(cfg)
    if not initial:
        return DDLMOResult([], False, {"evaluations": 0, "expansions": 0}, run)
    results = [family.evaluate(c, data) for c in initial]
    scores = [s for _, s in results]
    ranked = sorted(range(len(initial)),
                    key=lambda i: (-scores[i] if family.orientation is Orientation.MAXIMIZE else scores[i],
                                   family.canonical_key(initial[i])))
    base = state or SearchState()
    coarse = tuple((initial[i], scores[i]) for i in ranked
                   if family.root_key(initial[i]) not in base.explored)
    if not coarse:
        return DDLMOResult([], False, {"evaluations": family.evaluations - start, "expansions": 0}, run)
    best, idx, arbitrary = select_model([m for m, _ in coarse], [s for _, s in coarse],
                                        family.model_orders(), family.orientation, family.canonical_key)
    state = SearchState(coarse, base.explored | {family.root_key(best)}, base.relocations)
    measure = family.match(best)
    steps = [Step(best, measure, coarse[idx][1], family.depth(best), arbitrary=arbitrary)]
    found = False
    while True:
        cur = steps[-1]
        if family.is_final(cur.measure) and family.accepted(cur.model, cur.score, cfg):
            found = True
            break
        before = state
        try:
            lr = learn_step(cur.model, cur.score, data, family, cfg, state, max_relocations)
        except RefinementExhausted:
            break
        expansions += 1
        state = lr.state
        steps.append(Step(lr.model, lr.measure, lr.score, family.depth(lr.model), lr.relocated,
                          lr.arbitrary, before, lr.evaluated))
    counters = {"evaluations": family.evaluations - start, "expansions": expansions}
    result = DDLMOResult(steps, found, counters, run)
    result.final_state = state
    return result


def check_w(prev: Step, data, nxt: Step, family: SearchFamily, cfg: Config,
            max_relocations: int = 4) -> bool:
    """Improvement relation between two consecutive steps.

    ``nxt`` must be what the learning operator produces from ``prev`` (it is
    recomputed) and must improve on it: strictly less uncertain, strictly less
    general, strictly simpler, or strictly better scored under its own measure.
    """
    if nxt.state is None:
        return False
    saved = family.evaluations
    try:
        lr = learn_step(prev.model, prev.score, data, family, cfg, nxt.state, max_relocations)
    except RefinementExhausted:
        return False
    finally:
        family.evaluations = saved
    if family.canonical_key(lr.model) != family.canonical_key(nxt.model):
        return False
    orders = family.model_orders()
    mi, mj = prev.model, nxt.model
    li, lj = family.match(mi), family.match(mj)
    saved = family.evaluations
    score_i, score_j = family.score(li, mi, data), family.score(lj, mj, data)
    family.evaluations = saved
    return (orders["u"](mi, mj) is Order.GREATER
            or orders["g"](mi, mj) is Order.GREATER
            or orders["s"](mj, mi) is Order.GREATER
            or family.orientation.better(score_j, score_i))


def check_trace(result: DDLMOResult, data, family: SearchFamily, cfg: Config,
                max_relocations: int = 4) -> list[int]:
    """Indices ``i`` at which ``check_w(steps[i-1], steps[i])`` fails."""
    return [i for i in range(1, len(result.steps))
            if not check_w(result.steps[i - 1], data, result.steps[i], family, cfg, max_relocations)]


# -- single-measure family ----------------------------------------------------------------

STATIC = "static"


class StaticFamily(SearchFamily):
    """A fixed candidate list scored by one measure: plain argmax with overfitting-aware ties."""

    name = STATIC

    def __init__(self, models: Sequence, scorer: Callable[[Any, Any], float],
                 orders: Optional[dict] = None, orientation: Orientation = Orientation.MAXIMIZE,
                 key: Callable = str):
        super().__init__()
        self.models = list(models)
        self.scorer = scorer
        self.orders = orders or {"u": order_mu, "g": order_mg, "s": order_ms}
        self.orientation = orientation
        self.key = key
        self.final = SimilarityMeasure(STATIC, 0.0, orientation=orientation)

    def initial_candidates(self, cfg):
        return list(self.models)

    def match(self, model):
        return self.final

    def score(self, measure, model, data):
        return float(self.scorer(model, data))

    def depth(self, model):
        return 0

    def refine(self, model, cfg):
        return []

    def is_final(self, measure):
        return True

    def model_orders(self):
        return self.orders

    def canonical_key(self, model):
        return self.key(model)


# -- polynomial parameter lattice ------------------------------------------------------------

def _monomial_values(mono, variables, rows) -> np.ndarray:
    out = np.ones(len(rows))
    for i, var in enumerate(variables):
        if mono[i]:
            out *= np.array([float(r[var]) for r in rows]) ** mono[i]
    return out


def fit_residual(base: PolyModel, free_slots: Sequence, data: EmpiricalSystem) -> float:
    """RMS residual after least-squares fitting the coefficients at ``free_slots``.

    All other coefficients stay at their values in ``base``.
    """
    rows = list(data.rows())
    if not rows:
        return 0.0
    target = np.full(len(rows), float(base.rhs))
    for t in base.terms:
        if t.monomial in free_slots:
            continue
        if isinstance(t.coef, Unknown):
            raise ValueError(f"base model has an unknown coefficient at a fixed slot: {t.coef}")
        target -= float(t.coef) * _monomial_values(t.monomial, base.variables, rows)
    if free_slots:
        design = np.column_stack([_monomial_values(s, base.variables, rows) for s in free_slots])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        target = target - design @ coef
    return float(np.sqrt(np.mean(target ** 2)))


def lattice_model(base: PolyModel, template: ParamTemplate, v: BoolVec) -> PolyModel:
    """The model obtained from ``base`` by turning the slots flagged in ``v`` into unknowns."""
    names = iter("abcdefghijklmnopqrstuvw")
    terms = []
    for bit, slot in zip(v.bits, template.slots):
        if bit:
            sym = next(names)
            while sym in base.variables:
                sym = next(names)
            terms.append(Term(slot, Unknown(sym)))
        else:
            c = base.coefficient(slot)
            if isinstance(c, Unknown):
                raise ValueError(f"base model must be fully known, found {c}")
            terms.append(Term(slot, c))
    return PolyModel(base.variables, tuple(terms), base.rhs)


@dataclass
class LatticeSearch:
    template: ParamTemplate
    table: mbf.FnTable
    stats: mbf.QueryStats
    trace: Trace
    units: mbf.LowerUnits
    models: list[PolyModel]


def lattice_verdicts(base: PolyModel, template: ParamTemplate, data: EmpiricalSystem,
                     tol: float) -> Callable[[BoolVec], int]:
    def oracle(v: BoolVec) -> int:
        free = [s for b, s in zip(v.bits, template.slots) if b]
        return int(fit_residual(base, free, data) <= tol)

    return oracle


def lattice_search(base: PolyModel, template: ParamTemplate, data: EmpiricalSystem,
                   tol: float = 1e-9) -> LatticeSearch:
    """Find the most specific parameterizations of ``base`` that fit ``data``.

    A lattice vector frees the flagged coefficients; its verdict is 1 when the
    freed model fits within ``tol``.  Freeing more coefficients can only lower
    the residual, so the verdicts form a monotone Boolean function, which is
    restored with Hansel-chain queries.
    """
    n = len(template.slots)
    if not template.encodable(base):
        raise ValueError("base model does not fit the template")
    table, stats, trace = mbf.restore(n, mbf.ScriptedOracle(n, lattice_verdicts(base, template, data, tol)))
    units = mbf.lower_units(table)
    models = [lattice_model(base, template, u) for u in sorted(units.units, key=lambda u: (u.weight, u.value))]
    for ev in trace:
        if ev.vector is not None:
            ev.model = str(lattice_model(base, template, BoolVec.parse(ev.vector)))
    return LatticeSearch(template, table, stats, trace, units, models)
