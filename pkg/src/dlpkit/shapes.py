"""Noisy planted-shape scenes, the density difference test and shape search.

Points live in ``[0, n) x [0, n)``.  A circle ``(cx, cy, r)`` has an integer
center on a grid node and an integer radius; a lens ``(xa, xg, yb, h)`` is the
region between two parabolas through ``(xa, yb)`` and ``(xg, yb)`` with apexes
at ``yb + h`` and ``yb - h`` over the midpoint.  Region areas are counted in
grid cells whose centers lie inside the shape.

The base operation is one point-in-shape test.  Counters report the number of
such tests an exhaustive sweep performs; the circle sweep obtains the same
answers from one distance computation per (center, point) pair.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ndtr

from . import dlp
from .dlp import Config, GridModel, SearchFamily, SimilarityMeasure
from .trace import Trace

CIRCLE_CAP = 200
LENS_CAP = 40


@dataclass(frozen=True)
class CircleParams:
    cx: int
    cy: int
    r: int

    def __str__(self) -> str:
        return f"circle:{self.cx},{self.cy},{self.r}"

    @property
    def params(self) -> tuple[int, int, int]:
        return (self.cx, self.cy, self.r)


@dataclass(frozen=True)
class LensParams:
    xa: int
    xg: int
    yb: int
    h: int

    def __post_init__(self):
        if not self.xa < self.xg:
            raise ValueError("lens needs xa < xg")
        if self.h <= 0:
            raise ValueError("lens needs h > 0")

    def __str__(self) -> str:
        return f"lens:{self.xa},{self.xg},{self.yb},{self.h}"

    @property
    def params(self) -> tuple[int, int, int, int]:
        return (self.xa, self.xg, self.yb, self.h)


Shape = Union[CircleParams, LensParams]


def parse_shape(text: str) -> Shape:
    kind, _, rest = text.partition(":")
    try:
        vals = [int(v) for v in rest.split(",")]
    except ValueError:
        raise ValueError(f"bad shape parameters in {text!r}") from None
    if kind == "circle" and len(vals) == 3:
        return CircleParams(*vals)
    if kind == "lens" and len(vals) == 4:
        return LensParams(*vals)
    raise ValueError(f"expected circle:cx,cy,r or lens:xa,xg,yb,h, got {text!r}")


@dataclass
class OpCounters:
    membership_tests: int = 0
    ddt_calls: int = 0
    wall_time: float = 0.0

    def add(self, other: "OpCounters") -> "OpCounters":
        return OpCounters(self.membership_tests + other.membership_tests,
                          self.ddt_calls + other.ddt_calls, self.wall_time + other.wall_time)


@dataclass
class PointCloud:
    points: np.ndarray
    inside: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"x": float(x), "y": float(y)}) + "\n" for x, y in self.points)

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "PointCloud":
        pts = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pts.append((float(rec["x"]), float(rec["y"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ValueError(f"line {lineno}: expected {{\"x\": .., \"y\": ..}}") from None
        return cls(np.array(pts, dtype=np.float64).reshape(-1, 2))

    @classmethod
    def read(cls, path) -> "PointCloud":
        return cls.from_jsonl(Path(path).read_text())

    def check_bounds(self, n: int) -> None:
        p = self.points
        if p.size and (p.min() < 0 or p.max() >= n):
            raise ValueError(f"points must lie in [0, {n})^2")


# -- membership and areas ------------------------------------------------------------

def circle_contains(c: CircleParams, x, y) -> np.ndarray:
    return (x - c.cx) ** 2 + (y - c.cy) ** 2 <= c.r ** 2


def lens_contains(s: LensParams, x, y) -> np.ndarray:
    """Two quadratic forms: below the upper parabola and above the lower one."""
    half = (s.xg - s.xa) / 2.0
    u = (x - (s.xa + s.xg) / 2.0) / half
    lift = s.h * (1.0 - u * u)
    return (y - s.yb - lift <= 0) & (s.yb - lift - y <= 0)


def contains(shape: Shape, x, y) -> np.ndarray:
    if isinstance(shape, CircleParams):
        return circle_contains(shape, x, y)
    return lens_contains(shape, x, y)


def _cell_centers(n: int):
    g = np.arange(n) + 0.5
    return np.meshgrid(g, g, indexing="ij")


def shape_area(shape: Shape, n: int) -> int:
    """Number of grid cells whose center lies inside ``shape``."""
    gx, gy = _cell_centers(n)
    return int(np.count_nonzero(contains(shape, gx, gy)))


@lru_cache(maxsize=8)
def circle_area_table(n: int) -> np.ndarray:
    """``A[cx, cy, r-1]``: inside cell count for every grid circle."""
    out = np.empty((n, n, n), dtype=np.int64)
    ones = np.ones((n, n))
    for r in range(1, n + 1):
        off = np.arange(-r - 1, r + 1) + 0.5
        kern = ((off[:, None] ** 2 + off[None, :] ** 2) <= r * r).astype(float)
        # kernel index k corresponds to cell offset k - r - 1 from the node
        full = fftconvolve(ones, kern[::-1, ::-1], mode="full")
        # node (cx, cy) collects cells cx + a, a in [-r-1, r]
        block = full[r: r + n, r: r + n]
        out[:, :, r - 1] = np.rint(block).astype(np.int64)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=4)
def lens_area_table(n: int) -> np.ndarray:
    """``A[xa, w-1, yb, h-1]`` for lenses with ``xg = xa + w``."""
    out = np.zeros((n, n, n, n), dtype=np.int32)
    cx = np.arange(n) + 0.5
    cy = np.arange(n) + 0.5
    for w in range(1, n + 1):
        for xa in range(n):
            u = (cx - (xa + w / 2.0)) / (w / 2.0)
            base = 1.0 - u * u
            inside_cols = base > 0
            if not inside_cols.any():
                continue
            b = base[inside_cols]
            # rows with |y - yb| <= h * b, counted per column via bounds
            yb = np.arange(n)[:, None, None]
            h = np.arange(1, n + 1)[None, :, None]
            lift = h * b[None, None, :]
            lo = np.ceil(yb - lift - 0.5)
            hi = np.floor(yb + lift - 0.5)
            lo = np.clip(lo, 0, n)
            hi = np.clip(hi, -1, n - 1)
            cnt = np.maximum(hi - lo + 1, 0).sum(axis=2)
            out[xa, w - 1] = cnt.astype(np.int32)
    out.flags.writeable = False
    return out


# -- scenes --------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneSpec:
    n: int
    m: int
    shapes: tuple = ()
    contrast: float = 3.0
    seed: int = 0

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError("grid size must be at least 2")
        if not self.contrast > 1:
            raise ValueError("contrast must exceed 1")
        if self.m < max(1, len(self.shapes)):
            raise ValueError("need at least one point per shape")
        total = 0
        for s in self.shapes:
            if isinstance(s, CircleParams):
                if s.r < 1 or s.cx - s.r < 0 or s.cy - s.r < 0 or s.cx + s.r > self.n or s.cy + s.r > self.n:
                    raise ValueError(f"{s} does not fit in the {self.n}x{self.n} grid")
            else:
                if s.xa < 0 or s.xg > self.n or s.yb - s.h < 0 or s.yb + s.h > self.n:
                    raise ValueError(f"{s} does not fit in the {self.n}x{self.n} grid")
            total += shape_area(s, self.n)
        if 3 * total >= self.n * self.n:
            raise ValueError("planted shapes must cover less than a third of the grid")


def gen_scene(spec: SceneSpec) -> PointCloud:
    """Rejection sampling: inside points are always kept, outside ones with probability 1/contrast."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n, spec.m
    kept = []
    tags = []
    count = 0
    while count < m:
        batch = max(64, 2 * (m - count))
        pts = rng.uniform(0, n, size=(batch, 2))
        inside = np.zeros(batch, dtype=bool)
        for s in spec.shapes:
            inside |= contains(s, pts[:, 0], pts[:, 1])
        keep = inside | (rng.uniform(size=batch) < 1.0 / spec.contrast)
        pts, inside = pts[keep], inside[keep]
        take = min(len(pts), m - count)
        kept.append(pts[:take])
        tags.append(inside[:take])
        count += take
    return PointCloud(np.concatenate(kept), np.concatenate(tags))


# -- density difference test ------------------------------------------------------------

def default_threshold(n: int, m: int, contrast: float = 3.0) -> float:
    """Half the inside-outside density gap a planted shape of the given contrast would produce."""
    return (contrast - 1.0) * m / (2.0 * n * n)


def _densities(k_in, a_in, m, n):
    k_in = np.asarray(k_in, dtype=np.float64)
    a_in = np.asarray(a_in, dtype=np.float64)
    a_out = n * n - a_in
    with np.errstate(divide="ignore", invalid="ignore"):
        d_in = np.where(a_in > 0, k_in / a_in, 0.0)
        d_out = np.where(a_out > 0, (m - k_in) / a_out, 0.0)
    return d_in, d_out, a_out


def scan_llr(k_in, a_in, m, n):
    """Log-likelihood ratio of a two-density split against uniform density.

    Only splits with a denser inside count; others score ``-inf``.
    """
    k = np.asarray(k_in, dtype=np.float64)
    a = np.asarray(a_in, dtype=np.float64)
    ko = m - k
    ao = n * n - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t_in = np.where(k > 0, k * np.log(k / a), 0.0)
        t_out = np.where(ko > 0, ko * np.log(ko / ao), 0.0)
        val = t_in + t_out - (m * math.log(m / float(n * n)) if m else 0.0)
        return np.where((a > 0) & (ao > 0) & (k * ao > ko * a), val, -np.inf)


def ddt(shape: Shape, cloud: PointCloud, t: float, n: int,
        counters: Optional[OpCounters] = None) -> tuple[int, float, float]:
    """Density difference test: 1 iff inside density exceeds outside density by more than ``t``."""
    area = shape_area(shape, n)
    if area == 0:
        raise ValueError(f"{shape} covers no grid cell")
    k = int(np.count_nonzero(contains(shape, cloud.x, cloud.y)))
    if counters is not None:
        counters.membership_tests += len(cloud)
        counters.ddt_calls += 1
    d_in, d_out, a_out = _densities(k, area, len(cloud), n)
    verdict = int(a_out > 0 and float(d_in - d_out) > t)
    return verdict, float(d_in), float(d_out)


# -- brute force ------------------------------------------------------------------------

@dataclass
class Detection:
    shape: Shape
    score: float
    d_in: float
    d_out: float


def _needed_radius(d2: np.ndarray, n: int) -> np.ndarray:
    """Smallest integer r >= 1 with d2 <= r^2, or n + 1 when no grid radius reaches."""
    r = np.ceil(np.sqrt(d2)).astype(np.int64)
    r = np.where(r * r < d2, r + 1, r)
    r = np.where((r > 0) & ((r - 1) ** 2 >= d2), r - 1, r)
    return np.clip(r, 1, n + 1)


def circle_counts(cloud: PointCloud, n: int) -> np.ndarray:
    """``K[cx, cy, r-1]``: points inside every grid circle."""
    m = len(cloud)
    out = np.empty((n, n, n), dtype=np.int64)
    ys = np.arange(n, dtype=np.float64)
    for cx in range(n):
        d2 = (cloud.x[None, :] - cx) ** 2 + (cloud.y[None, :] - ys[:, None]) ** 2  # (cy, m)
        need = _needed_radius(d2, n)
        flat = (np.arange(n)[:, None] * (n + 2) + need).ravel()
        hist = np.bincount(flat, minlength=n * (n + 2)).reshape(n, n + 2)
        out[cx] = np.cumsum(hist[:, 1:n + 1], axis=1)
    if m == 0:
        out[:] = 0
    return out


def circle_counts_direct(cloud: PointCloud, n: int) -> np.ndarray:
    """Reference implementation testing every point against every grid circle."""
    out = np.empty((n, n, n), dtype=np.int64)
    for cx in range(n):
        for cy in range(n):
            d2 = (cloud.x - cx) ** 2 + (cloud.y - cy) ** 2
            r2 = (np.arange(1, n + 1) ** 2)[:, None]
            out[cx, cy] = np.count_nonzero(d2[None, :] <= r2, axis=1)
    return out


def lens_counts(cloud: PointCloud, n: int) -> np.ndarray:
    """``K[xa, w-1, yb, h-1]``: points inside every grid lens."""
    out = np.zeros((n, n, n, n), dtype=np.int32)
    if len(cloud) == 0:
        return out
    x, y = cloud.x, cloud.y
    yb = np.arange(n, dtype=np.float64)[:, None, None]
    h = np.arange(1, n + 1, dtype=np.float64)[None, :, None]
    for w in range(1, n + 1):
        half = w / 2.0
        for xa in range(n):
            u = (x - (xa + half)) / half
            lift = h * (1.0 - u * u)[None, None, :]
            dy = y[None, None, :] - yb
            inside = (dy - lift <= 0) & (-dy - lift <= 0)
            out[xa, w - 1] = np.count_nonzero(inside, axis=2)
    return out


def _suppress(cands: list[tuple[float, Shape]], limit: Optional[int]) -> list[tuple[float, Shape]]:
    kept: list[tuple[float, Shape]] = []
    for score, s in cands:
        if any(_overlaps(s, k) for _, k in kept):
            continue
        kept.append((score, s))
        if limit is not None and len(kept) >= limit:
            break
    return kept


def _overlaps(a: Shape, b: Shape) -> bool:
    if isinstance(a, CircleParams) and isinstance(b, CircleParams):
        return math.hypot(a.cx - b.cx, a.cy - b.cy) < a.r + b.r
    if isinstance(a, LensParams) and isinstance(b, LensParams):
        return a.xa < b.xg and b.xa < a.xg and abs(a.yb - b.yb) < a.h + b.h
    return False


def _detections_from_field(k, area, m, n, t, llr_min, build, limit) -> list[Detection]:
    d_in, d_out, a_out = _densities(k, area, m, n)
    z = scan_llr(k, area, m, n)
    ok = (a_out > 0) & (area > 0) & (d_in - d_out > t) & (z >= llr_min)
    idx = np.flatnonzero(ok.ravel())
    order = idx[np.lexsort((idx, -z.ravel()[idx]))]
    cands = []
    for i in order:
        cands.append((float(z.ravel()[i]), build(np.unravel_index(i, k.shape))))
        if len(cands) > 20000:
            break
    kept = _suppress(cands, limit)
    out = []
    for score, s in kept:
        i = np.ravel_multi_index(_index_of(s), k.shape)
        out.append(Detection(s, score, float(d_in.ravel()[i]), float(d_out.ravel()[i])))
    return out


def _index_of(s: Shape):
    if isinstance(s, CircleParams):
        return (s.cx, s.cy, s.r - 1)
    return (s.xa, s.xg - s.xa - 1, s.yb, s.h - 1)


DEFAULT_LLR = 20.0


def brute_force_search(cloud: PointCloud, n: int, kind: str = "circle", t: Optional[float] = None,
                       llr_min: float = DEFAULT_LLR, allow_huge: bool = False,
                       limit: Optional[int] = None) -> tuple[list[Detection], OpCounters]:
    """Density difference test on every grid candidate, then non-maximum suppression.

    Circles: ``n*n`` centers times ``n`` radii.  Lenses: ``n^4`` tuples
    ``(xa, xa+w, yb, h)`` with ``w, h`` in ``1..n``.  Accepted candidates are
    ranked by the scan log-likelihood ratio and overlapping ones dropped.
    """
    start = time.perf_counter()
    m = len(cloud)
    cloud.check_bounds(n)
    t = default_threshold(n, m) if t is None else t
    if kind == "circle":
        if n > CIRCLE_CAP and not allow_huge:
            raise ValueError(f"circle sweep capped at n={CIRCLE_CAP}; pass allow_huge to override")
        k = circle_counts(cloud, n)
        area = circle_area_table(n)
        build = lambda ix: CircleParams(int(ix[0]), int(ix[1]), int(ix[2]) + 1)
        candidates = n ** 3
    elif kind == "lens":
        if n > LENS_CAP and not allow_huge:
            raise ValueError(f"lens sweep capped at n={LENS_CAP}; pass allow_huge to override")
        k = lens_counts(cloud, n)
        area = lens_area_table(n)
        build = lambda ix: LensParams(int(ix[0]), int(ix[0] + ix[1] + 1), int(ix[2]), int(ix[3]) + 1)
        candidates = n ** 4
    else:
        raise ValueError(f"unknown shape kind {kind!r}")
    dets = _detections_from_field(k, area, m, n, t, llr_min, build, limit)
    counters = OpCounters(candidates * m, candidates, time.perf_counter() - start)
    return dets, counters


# -- coarse-to-fine search ------------------------------------------------------------------

DENSITY = "density"


@dataclass
class ShapeData:
    cloud: PointCloud
    n: int
    t: float


def _soft_inside(kind: str, params, sigma: float, x, y) -> np.ndarray:
    """Membership weights; hard 0/1 when ``sigma`` is 0, a Gaussian-blurred edge otherwise."""
    if kind == "circle":
        cx, cy, r = params
        margin = r - np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
    else:
        xa, w, yb, h = params
        half = w / 2.0
        u = (x - (xa + half)) / half
        margin = h * (1.0 - u * u) - np.abs(y - yb)
    if sigma == 0:
        return (margin >= 0).astype(np.float64)
    return ndtr(margin / sigma)


def _model_shape(model: GridModel) -> Shape:
    if model.kind == "circle":
        return CircleParams(*model.params)
    xa, w, yb, h = model.params
    return LensParams(xa, xa + w, yb, h)


def _model_area(model: GridModel, n: int) -> int:
    if model.kind == "circle":
        cx, cy, r = model.params
        return int(circle_area_table(n)[cx, cy, r - 1])
    if n <= LENS_CAP:
        xa, w, yb, h = model.params
        return int(lens_area_table(n)[xa, w - 1, yb, h - 1])
    return shape_area(_model_shape(model), n)


def density_eval(measure: SimilarityMeasure, model: GridModel, data: ShapeData) -> float:
    """Scan log-likelihood ratio of the (possibly blurred) inside count."""
    if not isinstance(model, GridModel) or model.kind not in ("circle", "lens"):
        raise ValueError(f"density measures apply to circle or lens grid models, got {model!r}")
    sigma = measure.params[0]
    w = _soft_inside(model.kind, model.params, sigma, data.cloud.x, data.cloud.y)
    return float(scan_llr(w.sum(), _model_area(model, data.n), len(data.cloud), data.n))


dlp.register_family(DENSITY, density_eval)


class ShapeFamily(SearchFamily):
    """Grid models of one shape kind refined from a coarse stride down to stride 1.

    The measure matched to a stride-``s`` model blurs membership with a
    Gaussian edge of width ``kappa * s``; at stride 1 the edge is hard and the
    measure is final.
    """

    name = DENSITY

    def __init__(self, kind: str, n: int, cfg: Config):
        super().__init__()
        if kind not in ("circle", "lens"):
            raise ValueError(f"unknown shape kind {kind!r}")
        self.kind = kind
        self.n = n
        self.kappa = cfg.kappa
        self.factor = cfg.refine_factor
        self.window = cfg.window
        self.max_depth = cfg.max_depth
        self.coarse = cfg.refine_factor ** cfg.max_depth
        if self.coarse > n:
            raise ValueError(f"coarse stride {self.coarse} exceeds grid size {n}")
        self.membership_tests = 0
        self._cache: dict = {}

    # parameter ranges: position-like parameters in [0, n), size-like in [1, n]
    def _ranges(self):
        n = self.n
        if self.kind == "circle":
            return [(0, n - 1), (0, n - 1), (1, n)]
        return [(0, n - 1), (1, n), (0, n - 1), (1, n)]

    def _valid(self, params) -> bool:
        return all(lo <= p <= hi for p, (lo, hi) in zip(params, self._ranges()))

    def initial_candidates(self, cfg):
        s = self.coarse
        axes = []
        for lo, hi in self._ranges():
            start = s if lo == 1 else 0
            stop = min(hi, self.n // 2) if lo == 1 else hi
            axes.append(range(start, stop + 1, s))
        return [GridModel(self.kind, p, s) for p in itertools.product(*axes)]

    def match(self, model: GridModel) -> SimilarityMeasure:
        sigma = 0.0 if model.stride <= 1 else self.kappa * model.stride
        return SimilarityMeasure(DENSITY, float(model.stride), (sigma,))

    def depth(self, model: GridModel) -> int:
        return int(round(math.log(self.coarse / model.stride, self.factor)))

    def is_final(self, measure: SimilarityMeasure) -> bool:
        return measure.level <= 1

    def refine(self, model: GridModel, cfg) -> list:
        if model.stride <= 1:
            return []
        fine = model.stride // self.factor
        reach = self.window * model.stride // fine
        offsets = range(-reach, reach + 1)
        out = []
        for delta in itertools.product(offsets, repeat=len(model.params)):
            p = tuple(v + d * fine for v, d in zip(model.params, delta))
            if self._valid(p):
                out.append(GridModel(self.kind, p, fine))
        return out

    def root_key(self, model: GridModel):
        s = self.coarse
        return tuple(int(round(p / s)) * s for p in model.params)

    def evaluate(self, model, data: ShapeData):
        if model not in self._cache:
            measure = self.match(model)
            self.evaluations += 1
            self.membership_tests += len(data.cloud)
            w = _soft_inside(model.kind, model.params, measure.params[0], data.cloud.x, data.cloud.y)
            k, area, m = w.sum(), _model_area(model, data.n), len(data.cloud)
            d_in, d_out, _ = _densities(k, area, m, data.n)
            self._cache[model] = (measure, float(scan_llr(k, area, m, data.n)), float(d_in - d_out))
        measure, score, _ = self._cache[model]
        return measure, score

    def threshold(self, cfg):
        return DEFAULT_LLR if cfg.threshold is None else cfg.threshold

    def accepted(self, model, score, cfg):
        if not score >= self.threshold(cfg):
            return False
        hit = self._cache.get(model)
        return hit is None or hit[2] > self.ddt_t

    ddt_t = 0.0

    def describe(self, model: GridModel) -> str:
        return f"{_model_shape(model)}@{model.stride}"


@dataclass
class DLPSearch:
    detections: list[Detection]
    counters: OpCounters
    trace: Trace
    runs: list
    family: ShapeFamily


def dlp_search(cloud: PointCloud, n: int, kind: str = "circle", cfg: Optional[Config] = None,
               t: Optional[float] = None, max_shapes: int = 5, max_relocations: int = 4) -> "DLPSearch":
    """Coarse-to-fine detection: one DDLMO run per detected shape.

    Each run starts from the best coarse cell not yet explored; cells whose
    shapes overlap an earlier result are marked explored beforehand, and a run
    ending on a shape that overlaps an earlier detection is discarded.
    """
    start = time.perf_counter()
    cfg = cfg or Config()
    cloud.check_bounds(n)
    fam = ShapeFamily(kind, n, cfg)
    m = len(cloud)
    fam.ddt_t = default_threshold(n, m) if t is None else t
    data = ShapeData(cloud, n, fam.ddt_t)
    trace = Trace()
    detections: list[Detection] = []
    runs = []
    explored: frozenset = frozenset()
    for run in range(max_shapes):
        res = dlp.run_ddlmo(fam, data, cfg, state=dlp.SearchState(explored=explored),
                            max_relocations=max_relocations, run=run)
        res.trace(fam, cfg, into=trace)
        runs.append(res)
        if not res.found:
            break
        best = res.model
        shape = _model_shape(best)
        if not any(_overlaps(shape, d.shape) for d in detections):
            d_in, d_out, _ = _densities(
                float(np.count_nonzero(contains(shape, cloud.x, cloud.y))), _model_area(best, n), m, n)
            detections.append(Detection(shape, float(res.steps[-1].score), float(d_in), float(d_out)))
        explored = res.final_state.explored | {
            fam.root_key(c) for c in fam.initial_candidates(cfg) if _overlaps(_model_shape(c), shape)}
    counters = OpCounters(fam.membership_tests, fam.evaluations, time.perf_counter() - start)
    trace.counters.update(membership_tests=fam.membership_tests, ddt_calls=fam.evaluations)
    return DLPSearch(detections, counters, trace, runs, fam)


# -- scaling -------------------------------------------------------------------------------

@dataclass
class ScalingRow:
    n: int
    m: int
    predicted: int
    measured: int
    wall_time: float


def scaling_report(kind: str, sizes: Sequence[tuple[int, int]], seed: int = 0,
                   allow_huge: bool = False) -> tuple[list[ScalingRow], Optional[float]]:
    """Brute-force operation counts per (n, m) and the log-log slope of counts against n."""
    cap = CIRCLE_CAP if kind == "circle" else LENS_CAP
    if kind not in ("circle", "lens"):
        raise ValueError(f"unknown shape kind {kind!r}")
    rows = []
    for n, m in sizes:
        if n > cap and not allow_huge:
            raise ValueError(f"{kind} scaling capped at n={cap}; pass allow_huge to override")
        cloud = gen_scene(SceneSpec(n, m, (), 3.0, seed))
        _, c = brute_force_search(cloud, n, kind, allow_huge=allow_huge)
        power = 3 if kind == "circle" else 4
        rows.append(ScalingRow(n, m, n ** power * m, c.membership_tests, c.wall_time))
    slope = None
    if len({r.n for r in rows}) >= 2:
        x = np.log([r.n for r in rows])
        y = np.log([max(r.measured, 1) for r in rows])
        slope = float(np.polyfit(x, y, 1)[0])
    return rows, slope


def random_circle_spec(n: int = 100, m: int = 1000, contrast: float = 3.0, seed: int = 0,
                       r_range: tuple[int, int] = (10, 20)) -> SceneSpec:
    """One circle with radius and center drawn from ``seed``; the circle fits the grid."""
    rng = np.random.default_rng(seed)
    r = int(rng.integers(r_range[0], r_range[1] + 1))
    cx = int(rng.integers(r, n - r + 1))
    cy = int(rng.integers(r, n - r + 1))
    return SceneSpec(n, m, (CircleParams(cx, cy, r),), contrast, seed)
