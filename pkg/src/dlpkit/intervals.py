"""Localizing a hidden interval of [0, 10] with a sharpening Gaussian kernel.

The search starts from the class of all intervals centred at 5, judged by a
broad kernel N(5, 10).  Each level shrinks the kernel width by ``rho``,
re-centres it on the interval chosen at the previous level, and evaluates a
denser grid of intervals around that choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from . import dlp
from .dlp import Config, DDLMOResult, SearchFamily, SimilarityMeasure
from .models import Order
from .trace import Trace

DOMAIN = 10.0
KERNEL = "kernel"


@dataclass(frozen=True)
class IntervalModel:
    c: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("interval radius must be positive")
        if self.c - self.r < -1e-12 or self.c + self.r > DOMAIN + 1e-12:
            raise ValueError(f"interval [{self.a:g}, {self.b:g}] leaves [0, {DOMAIN:g}]")

    @property
    def a(self) -> float:
        return self.c - self.r

    @property
    def b(self) -> float:
        return self.c + self.r

    @classmethod
    def from_bounds(cls, a: float, b: float) -> "IntervalModel":
        return cls((a + b) / 2.0, (b - a) / 2.0)

    def __str__(self) -> str:
        return f"[{self.a:.4g}, {self.b:.4g}]"


@dataclass(frozen=True)
class ModelClass:
    """All intervals centred at ``c`` with radius at most ``r_max``."""

    c: float
    r_max: float

    def __post_init__(self):
        if not self.r_max > 0 or self.c - self.r_max < -1e-12 or self.c + self.r_max > DOMAIN + 1e-12:
            raise ValueError("model class must fit in the domain")

    @property
    def support(self) -> tuple[float, float]:
        return (self.c - self.r_max, self.c + self.r_max)


@dataclass(frozen=True)
class KernelMeasure:
    mu: float
    sigma: float
    threshold: float = 0.8

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("kernel sigma must be positive")

    def as_measure(self) -> SimilarityMeasure:
        return SimilarityMeasure(KERNEL, float(self.sigma), (float(self.mu), float(self.threshold)))

    def __str__(self) -> str:
        return f"N({self.mu:.4g},{self.sigma:.4g})"


def gen_interval_data(target: IntervalModel, m: int, contrast: float = 3.0, seed: int = 0) -> np.ndarray:
    """Samples on [0, 10] whose density inside ``target`` is ``contrast`` times the outside density."""
    if not contrast > 1:
        raise ValueError("contrast must exceed 1")
    if m < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    out = []
    count = 0
    while count < m:
        x = rng.uniform(0, DOMAIN, size=max(64, 2 * (m - count)))
        inside = (x >= target.a) & (x <= target.b)
        x = x[inside | (rng.uniform(size=x.size) < 1.0 / contrast)]
        out.append(x[: m - count])
        count += len(out[-1])
    return np.concatenate(out)


def _kernel(x: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2)


def kernel_mass_ratio(kernel: KernelMeasure, lo: float, hi: float, samples: np.ndarray) -> float:
    w = _kernel(np.asarray(samples, dtype=np.float64), kernel.mu, kernel.sigma)
    total = w.sum()
    if total == 0:
        return 0.0
    inside = (samples >= lo) & (samples <= hi)
    return float(w[inside].sum() / total)


def kernel_accepts(kernel: KernelMeasure, cls: ModelClass, samples: np.ndarray) -> int:
    """1 iff the kernel-weighted share of samples in the class support beats ``threshold`` times its length share."""
    lo, hi = cls.support
    lo, hi = max(lo, 0.0), min(hi, DOMAIN)
    return int(kernel_mass_ratio(kernel, lo, hi, samples) > kernel.threshold * (hi - lo) / DOMAIN)


def _kernel_eval(measure: SimilarityMeasure, model, samples) -> float:
    """Kernel mass share of the model's support divided by its length share."""
    mu, threshold = measure.params
    if isinstance(model, ModelClass):
        lo, hi = model.support
    elif isinstance(model, (IntervalModel, IntervalCandidate)):
        lo, hi = model.a, model.b
    else:
        raise ValueError(f"kernel measures apply to intervals, got {model!r}")
    lo, hi = max(lo, 0.0), min(hi, DOMAIN)
    k = KernelMeasure(mu, measure.level, threshold)
    return kernel_mass_ratio(k, lo, hi, samples) / ((hi - lo) / DOMAIN)


dlp.register_family(KERNEL, _kernel_eval)


def interval_llr(a: float, b: float, samples: np.ndarray, blur: float = 0.0) -> float:
    """Two-density log-likelihood ratio of ``[a, b]`` against uniform density.

    With ``blur > 0`` interior endpoints get a Gaussian edge of that width.
    Returns ``-inf`` when the inside is not denser than the outside.
    """
    x = np.asarray(samples, dtype=np.float64)
    m = x.size
    length = b - a
    if length >= DOMAIN or m == 0:
        return 0.0
    if blur > 0:
        w = np.ones(m)
        if a > 0:
            w *= ndtr((x - a) / blur)
        if b < DOMAIN:
            w *= ndtr((b - x) / blur)
        k = float(w.sum())
    else:
        k = float(np.count_nonzero((x >= a) & (x <= b)))
    ko = m - k
    out = DOMAIN - length
    if k * out <= ko * length:
        return -math.inf
    val = (k * math.log(k / length) if k > 0 else 0.0) + (ko * math.log(ko / out) if ko > 0 else 0.0)
    return val - m * math.log(m / DOMAIN)


@dataclass(frozen=True, order=True)
class IntervalCandidate:
    """Interval ``[a, b]`` judged at refinement ``depth`` by a kernel centred at ``mu``."""

    depth: int
    a: float
    b: float
    mu: float

    @property
    def c(self) -> float:
        return (self.a + self.b) / 2.0

    @property
    def r(self) -> float:
        return (self.b - self.a) / 2.0

    def __str__(self) -> str:
        return f"[{self.a:.4g}, {self.b:.4g}]"


def _snap(v: float) -> float:
    return round(v, 9)


class IntervalFamily(SearchFamily):
    name = KERNEL

    def __init__(self, sigma0: float = 10.0, mu0: float = 5.0, r0: float = 5.0, rho: float = 0.7,
                 resolution: float = 0.1, threshold: float = 0.8, min_gain: float = 15.0,
                 pitch_ratio: float = 0.1, window: int = 2):
        super().__init__()
        if not 0 < rho < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if not resolution > 0 or sigma0 <= resolution:
            raise ValueError("resolution must be positive and below the starting sigma")
        self.sigma0, self.mu0, self.r0, self.rho = sigma0, mu0, r0, rho
        self.resolution, self.kthreshold, self.min_gain = resolution, threshold, min_gain
        self.pitch_ratio, self.window = pitch_ratio, window
        self.max_depth = int(math.ceil(math.log(resolution / sigma0) / math.log(rho) - 1e-12))
        self._cache: dict = {}

    def sigma(self, depth: int) -> float:
        return self.sigma0 * self.rho ** depth

    def pitch(self, depth: int) -> float:
        return self.pitch_ratio * self.sigma(depth)

    def kernel(self, model: IntervalCandidate) -> KernelMeasure:
        return KernelMeasure(model.mu, self.sigma(model.depth), self.kthreshold)

    def initial_candidates(self, cfg):
        return [IntervalCandidate(0, _snap(self.mu0 - self.r0), _snap(self.mu0 + self.r0), self.mu0)]

    def match(self, model):
        return self.kernel(model).as_measure()

    def score(self, measure, model, samples):
        k = KernelMeasure(measure.params[0], measure.level, measure.params[1])
        if model.depth == 0:
            return 0.0 if kernel_accepts(k, ModelClass(model.c, model.r), samples) else -math.inf
        lo, hi = max(model.a, 0.0), min(model.b, DOMAIN)
        if kernel_mass_ratio(k, lo, hi, samples) <= k.threshold * (hi - lo) / DOMAIN:
            return -math.inf
        return interval_llr(model.a, model.b, samples, blur=self.pitch(model.depth))

    def evaluate(self, model, samples):
        if model not in self._cache:
            measure = self.match(model)
            self.evaluations += 1
            self._cache[model] = (measure, self.score(measure, model, samples))
        return self._cache[model]

    def depth(self, model):
        return model.depth

    def is_final(self, measure):
        return measure.level <= self.resolution + 1e-12

    def refine(self, model, cfg):
        d = model.depth + 1
        if d > self.max_depth:
            return []
        p = self.pitch(d)
        if model.depth == 0:
            steps = int(math.floor(DOMAIN / p + 1e-9))
            grid = [_snap(i * p) for i in range(steps + 1)]
            if grid[-1] < DOMAIN:
                grid.append(DOMAIN)
            pairs = [(a, b) for i, a in enumerate(grid) for b in grid[i + 1:]]
        else:
            reach = int(math.floor(self.window * self.pitch(model.depth) / p + 1e-9))
            offs = [j * p for j in range(-reach, reach + 1)]
            axs = [sorted({_snap(min(max(model.a + o, 0.0), DOMAIN)) for o in offs}),
                   sorted({_snap(min(max(model.b + o, 0.0), DOMAIN)) for o in offs})]
            pairs = [(a, b) for a in axs[0] for b in axs[1] if b - a > 1e-9]
        mu = _snap(model.c)
        return [IntervalCandidate(d, a, b, mu) for a, b in pairs]

    def accepted(self, model, score, cfg):
        if model.depth == 0:
            return score > -math.inf
        return score >= self.min_gain

    def poor(self, model, score, cfg):
        return not self.accepted(model, score, cfg)

    def model_orders(self):
        return {"u": _order_u, "g": _order_u, "s": lambda a, b: Order.EQUAL}

    def canonical_key(self, model):
        return (model.depth, model.a, model.b)

    def root_key(self, model):
        return "root"

    def describe(self, model):
        return f"{model} by {self.kernel(model)}"


def _order_u(a: IntervalCandidate, b: IntervalCandidate) -> Order:
    if a.depth < b.depth:
        return Order.GREATER
    if a.depth > b.depth:
        return Order.LESS
    return Order.EQUAL if a == b else Order.INCOMPARABLE


@dataclass
class RefineResult:
    trace: Trace
    estimate: Optional[IntervalModel]
    run: DDLMOResult
    family: IntervalFamily
    kernels: list[KernelMeasure]

    @property
    def failed(self) -> bool:
        return self.estimate is None

    @property
    def evaluations(self) -> int:
        return self.run.counters["evaluations"]


def refine_loop(samples: np.ndarray, cfg: Optional[Config] = None, resolution: float = 0.1,
                sigma0: float = 10.0, mu0: float = 5.0, r0: float = 5.0,
                threshold: float = 0.8, min_gain: float = 15.0) -> RefineResult:
    """Shrink the kernel by ``cfg.shrink_rho`` per level until sigma drops to ``resolution``."""
    cfg = cfg or Config()
    fam = IntervalFamily(sigma0, mu0, r0, cfg.shrink_rho, resolution, threshold, min_gain)
    samples = np.asarray(samples, dtype=np.float64)
    res = dlp.run_ddlmo(fam, samples, cfg, max_relocations=0)
    trace = res.trace(fam, cfg)
    trace.counters["evaluations"] = res.counters["evaluations"]
    kernels = [fam.kernel(s.model) for s in res.steps]
    est = IntervalModel.from_bounds(res.model.a, res.model.b) if res.found else None
    return RefineResult(trace, est, res, fam, kernels)


def exhaustive_scan(samples: np.ndarray, pitch: float = 0.1) -> tuple[IntervalModel, int]:
    """Best interval on the full ``pitch`` grid by the unblurred likelihood ratio."""
    steps = int(round(DOMAIN / pitch))
    grid = [i * pitch for i in range(steps + 1)]
    best, best_score, evals = None, -math.inf, 0
    for i, a in enumerate(grid):
        for b in grid[i + 1:]:
            evals += 1
            s = interval_llr(a, b, samples)
            if s > best_score:
                best, best_score = (a, b), s
    if best is None:
        raise ValueError("no interval is denser than its complement")
    return IntervalModel.from_bounds(*best), evals
