"""Densities, control regions, thickness probes and slowly varying ball covers."""
from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, OverlapViolation
from .hermite import (HermiteExpansion, apply_monomial_derivative, gauss_hermite_rule,
                      hermite_functions, multi_indices)
from .sequences import DoubleSequence

DEFAULT_SEED = 20240229


def _bracket(x: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


def _points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1 and x.ndim == 1:
        x = x[:, None]
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != d:
        raise DomainError(f"points must have {d} coordinates")
    return x


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityModel:
    """A positive contraction ``rho`` with ``m <= rho(x) <= R <x>^delta``.

    ``constant``: ``rho = m``.  ``power``: ``rho(x) = R <x>^delta`` with
    Lipschitz certificate ``L = R delta``.  ``custom``: a user callable with
    declared constants that are only checked on samples.
    """

    kind: str
    m: float = 1.0
    R: float = 1.0
    delta: float = 0.0
    lipschitz_L: float | None = None
    func: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == "constant":
            if not self.m > 0:
                raise DomainError("constant density needs m > 0")
            object.__setattr__(self, "R", self.m)
            object.__setattr__(self, "delta", 0.0)
            object.__setattr__(self, "lipschitz_L", 0.0)
        elif self.kind == "power":
            if not (self.R > 0 and 0 <= self.delta <= 1):
                raise DomainError("power density needs R > 0 and 0 <= delta <= 1")
            object.__setattr__(self, "m", self.R)
            object.__setattr__(self, "lipschitz_L", self.R * self.delta)
        elif self.kind == "custom":
            if self.func is None or self.lipschitz_L is None:
                raise DomainError("custom density needs a callable and a declared Lipschitz constant")
            if not (self.m > 0 and self.R > 0 and 0 <= self.delta <= 1):
                raise DomainError("custom density needs m, R > 0 and 0 <= delta <= 1")
        else:
            raise DomainError(f"unknown density kind {self.kind!r}")

    @classmethod
    def constant(cls, m: float = 1.0) -> DensityModel:
        return cls("constant", m=float(m))

    @classmethod
    def power(cls, R: float, delta: float) -> DensityModel:
        return cls("power", R=float(R), delta=float(delta))

    @property
    def is_contraction(self) -> bool:
        return self.lipschitz_L < 1.0

    @property
    def slowness_C(self) -> float:
        """``C = 1/(1 - L)``."""
        if not self.is_contraction:
            raise DomainError(f"density is not a contraction (L = {self.lipschitz_L})")
        return 1.0 / (1.0 - self.lipschitz_L)

    def __call__(self, x, d: int | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or (d == 1 and x.ndim == 1):
            x = x.reshape(-1, 1)
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.m)
        if self.kind == "power":
            return self.R * _bracket(x) ** self.delta
        return np.asarray(self.func(x), dtype=float)

    def check_bounds(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        v = self(x)
        upper = self.R * _bracket(x) ** self.delta
        return bool(np.all(v >= self.m * (1 - 1e-12)) and np.all(v <= upper * (1 + 1e-12)))

    def sampled_lipschitz(self, x, y) -> float:
        """Max ``|rho(x) - rho(y)| / |x - y|`` over paired samples."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        dist = np.linalg.norm(x - y, axis=-1)
        keep = dist > 0
        return float(np.max(np.abs(self(x) - self(y))[keep] / dist[keep]))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "params": {"m": self.m}}
        if self.kind == "power":
            return {"kind": "power", "params": {"R": self.R, "delta": self.delta}}
        raise DomainError("custom densities are not serialisable")

    @classmethod
    def from_dict(cls, data: dict) -> DensityModel:
        kind, params = data.get("kind"), data.get("params", data)
        if kind == "constant":
            return cls.constant(params.get("m", 1.0))
        if kind == "power":
            return cls.power(params["R"], params["delta"])
        raise DomainError(f"unknown density kind {kind!r}")


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------

STRUCTURES = ("all_space", "empty", "box_union", "periodic_1d", "half_space", "complement")


@dataclass(frozen=True)
class RegionModel:
    """A structured control set ``omega`` in ``R^dim``.

    Structures: ``all_space``, ``empty``, ``box_union`` (open axis boxes
    ``(lo, hi)``), ``periodic_1d`` (points whose residue modulo ``period``
    lies in ``[a, b]``), ``half_space`` (``normal . x >= offset``) and
    ``complement``.
    """

    dim: int
    structure: str
    boxes: tuple = ()
    period: float = 1.0
    kept: tuple[float, float] = (0.0, 0.5)
    normal: tuple[float, ...] = ()
    offset: float = 0.0
    inner: RegionModel | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        if self.structure not in STRUCTURES:
            raise DomainError(f"unknown region structure {self.structure!r}")
        if self.structure == "box_union":
            boxes = []
            for lo, hi in self.boxes:
                lo = tuple(float(v) for v in np.atleast_1d(lo))
                hi = tuple(float(v) for v in np.atleast_1d(hi))
                if len(lo) != self.dim or len(hi) != self.dim or any(a > b for a, b in zip(lo, hi)):
                    raise DomainError("box bounds must match dim and satisfy lo <= hi")
                boxes.append((lo, hi))
            object.__setattr__(self, "boxes", tuple(boxes))
        if self.structure == "periodic_1d":
            a, b = (float(v) for v in self.kept)
            if self.dim != 1 or not (self.period > 0 and 0 <= a <= b <= self.period):
                raise DomainError("periodic_1d needs dim 1, period > 0 and 0 <= a <= b <= period")
            object.__setattr__(self, "kept", (a, b))
        if self.structure == "half_space":
            n = tuple(float(v) for v in np.atleast_1d(self.normal))
            if len(n) != self.dim or not any(n):
                raise DomainError("half_space needs a non-zero normal of length dim")
            object.__setattr__(self, "normal", n)
        if self.structure == "complement":
            if self.inner is None or self.inner.dim != self.dim:
                raise DomainError("complement needs an inner region of the same dim")

    # constructors -------------------------------------------------------
    @classmethod
    def all_space(cls, dim: int = 1) -> RegionModel:
        return cls(dim, "all_space")

    @classmethod
    def empty(cls, dim: int = 1) -> RegionModel:
        return cls(dim, "empty")

    @classmethod
    def box_union(cls, boxes, dim: int | None = None) -> RegionModel:
        boxes = list(boxes)
        if dim is None:
            dim = len(np.atleast_1d(boxes[0][0])) if boxes else 1
        return cls(dim, "box_union", boxes=tuple(boxes))

    @classmethod
    def periodic_1d(cls, period: float = 1.0, a: float = 0.0, b: float = 0.5) -> RegionModel:
        return cls(1, "periodic_1d", period=float(period), kept=(a, b))

    @classmethod
    def half_space(cls, normal, offset: float = 0.0) -> RegionModel:
        normal = tuple(np.atleast_1d(normal))
        return cls(len(normal), "half_space", normal=normal, offset=float(offset))

    def complement(self) -> RegionModel:
        return RegionModel(self.dim, "complement", inner=self)

    # membership ---------------------------------------------------------
    def indicator(self, x) -> np.ndarray:
        x = _points(x, self.dim)
        s = self.structure
        if s == "all_space":
            return np.ones(x.shape[0], dtype=bool)
        if s == "empty":
            return np.zeros(x.shape[0], dtype=bool)
        if s == "box_union":
            out = np.zeros(x.shape[0], dtype=bool)
            for lo, hi in self.boxes:
                out |= np.all((x > np.array(lo)) & (x < np.array(hi)), axis=1)
            return out
        if s == "periodic_1d":
            r = np.mod(x[:, 0], self.period)
            a, b = self.kept
            return (r >= a) & (r <= b)
        if s == "half_space":
            return x @ np.array(self.normal) >= self.offset
        return ~self.inner.indicator(x)

    def is_axis_aligned(self) -> bool:
        s = self.structure
        if s == "half_space":
            return sum(1 for v in self.normal if v != 0) == 1
        if s == "complement":
            return self.inner.is_axis_aligned()
        return True

    def breakpoints(self, lo: np.ndarray, hi: np.ndarray) -> list[np.ndarray]:
        """Per-axis coordinates inside ``[lo, hi]`` where the indicator may jump."""
        if not self.is_axis_aligned():
            raise DomainError("only axis-aligned structures admit an exact cell decomposition")
        if self.structure == "complement":
            return self.inner.breakpoints(lo, hi)
        cuts = [[lo[i], hi[i]] for i in range(self.dim)]
        region = self
        s = region.structure
        if s == "box_union":
            for blo, bhi in region.boxes:
                for i in range(self.dim):
                    cuts[i] += [blo[i], bhi[i]]
        elif s == "periodic_1d":
            a, b = region.kept
            k0 = math.floor(lo[0] / region.period) - 1
            k1 = math.ceil(hi[0] / region.period) + 1
            for k in range(k0, k1 + 1):
                cuts[0] += [k * region.period + a, k * region.period + b]
        elif s == "half_space":
            i = next(j for j, v in enumerate(region.normal) if v != 0)
            cuts[i].append(region.offset / region.normal[i])
        return [np.unique(np.clip(np.array(c, dtype=float), lo[i], hi[i])) for i, c in enumerate(cuts)]

    def cells(self, lo, hi) -> list[tuple[np.ndarray, np.ndarray]]:
        """Disjoint axis boxes whose union is ``omega`` inside ``[lo, hi]`` up to a null set."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim,))
        if self.structure == "all_space":
            return [(lo.copy(), hi.copy())]
        if self.structure == "empty":
            return []
        cuts = self.breakpoints(lo, hi)
        mids = [0.5 * (c[1:] + c[:-1]) for c in cuts]
        grids = np.meshgrid(*mids, indexing="ij")
        centers = np.stack([g.ravel() for g in grids], axis=1)
        inside = self.indicator(centers).reshape(grids[0].shape)
        out = []
        for idx in zip(*np.nonzero(inside)):
            clo = np.array([cuts[i][j] for i, j in enumerate(idx)])
            chi = np.array([cuts[i][j + 1] for i, j in enumerate(idx)])
            out.append((clo, chi))
        if self.dim == 1:
            out = _merge_intervals(out)
        return out

    def measure_in_box(self, lo, hi) -> float:
        return float(sum(np.prod(b - a) for a, b in self.cells(lo, hi)))

    def to_dict(self) -> dict:
        s = self.structure
        out = {"structure": s, "dim": self.dim}
        if s == "box_union":
            out["boxes"] = [[list(lo), list(hi)] for lo, hi in self.boxes]
        elif s == "periodic_1d":
            out["period"] = self.period
            out["kept"] = list(self.kept)
        elif s == "half_space":
            out["normal"] = list(self.normal)
            out["offset"] = self.offset
        elif s == "complement":
            out["inner"] = self.inner.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> RegionModel:
        s = data.get("structure")
        dim = int(data.get("dim", 1))
        if s == "all_space":
            return cls.all_space(dim)
        if s == "empty":
            return cls.empty(dim)
        if s == "box_union":
            return cls(dim, "box_union", boxes=tuple((lo, hi) for lo, hi in data["boxes"]))
        if s == "periodic_1d":
            a, b = data.get("kept", (0.0, 0.5))
            return cls.periodic_1d(data.get("period", 1.0), a, b)
        if s == "half_space":
            return cls(dim, "half_space", normal=tuple(data["normal"]),
                       offset=float(data.get("offset", 0.0)))
        if s == "complement":
            return cls.from_dict(data["inner"]).complement()
        raise DomainError(f"unknown region structure {s!r}")


def _merge_intervals(cells):
    merged = []
    for a, b in sorted(cells, key=lambda c: c[0][0]):
        if merged and merged[-1][1][0] >= a[0]:
            merged[-1] = (merged[-1][0], np.maximum(merged[-1][1], b))
        else:
            merged.append((a.copy(), b.copy()))
    return merged


# ---------------------------------------------------------------------------
# Thickness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThicknessProbe:
    """Where and how thickness is probed.

    ``centers`` overrides the regular grid of ``count`` points per axis on
    ``[lo, hi]^d``.  ``method`` is ``auto`` (exact when possible, else Monte
    Carlo), ``exact``, ``mc`` or ``halton``.
    """

    centers: np.ndarray | None = None
    lo: float = -5.0
    hi: float = 5.0
    count: int = 11
    samples: int = 10_000
    seed: int = DEFAULT_SEED
    method: str = "auto"

    def center_points(self, d: int) -> np.ndarray:
        if self.centers is not None:
            return _points(self.centers, d)
        axis = np.linspace(self.lo, self.hi, self.count)
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass
class ThicknessReport:
    """Probed thickness: the minimum ratio over the probed centers only."""

    gamma_hat: float
    centers: np.ndarray
    ratios: np.ndarray
    std_errors: np.ndarray
    method: str
    seed: int
    samples: int
    label: str = "probed thickness"

    @property
    def worst_index(self) -> int:
        return int(np.argmin(self.ratios)) if self.ratios.size else -1

    @property
    def std_error(self) -> float:
        return float(self.std_errors[self.worst_index]) if self.ratios.size else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.centers.shape[1]
        w.writerow([f"x{i + 1}" for i in range(d)] + ["ratio", "std_error"])
        for c, r, e in zip(self.centers, self.ratios, self.std_errors):
            w.writerow([f"{v:.17g}" for v in c] + [f"{r:.17g}", f"{e:.17g}"])
        return buf.getvalue()


def _unit_ball_samples(d: int, n: int, method: str, rng: np.random.Generator,
                       seed: int) -> np.ndarray:
    if method == "halton":
        sampler = qmc.Halton(d=d, scramble=True, seed=seed)
        pts = []
        have = 0
        while have < n:
            batch = 2.0 * sampler.random(2 * n) - 1.0
            batch = batch[np.sum(batch**2, axis=1) < 1.0]
            pts.append(batch)
            have += batch.shape[0]
        return np.concatenate(pts)[:n]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / d)


def thickness_estimate(omega: RegionModel, rho: DensityModel,
                       probe: ThicknessProbe | None = None) -> ThicknessReport:
    """Minimum over probed centers of ``|omega ∩ B(x, rho(x))| / |B(x, rho(x))|``.

    In one dimension with an interval-decomposable region the ratios are
    exact; otherwise each ball is sampled (Monte Carlo or scrambled Halton)
    and a binomial standard error is attached.
    """
    probe = probe or ThicknessProbe()
    d = omega.dim
    centers = probe.center_points(d)
    if centers.shape[0] == 0:
        raise DomainError("probe has no centers")
    radii = np.atleast_1d(rho(centers))
    if np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise DomainError("density produced a zero or non-finite radius")
    # underflow: a ball that is invisible at the centers' resolution or has zero volume
    if np.any(centers + radii[:, None] == centers) or np.any(radii ** d == 0):
        raise DomainError("density radius underflows: the ball has numerically zero size")
    method = probe.method
    if method == "auto":
        method = "exact" if (d == 1 and omega.is_axis_aligned()) or omega.structure in (
            "all_space", "empty") else "mc"
    ratios = np.empty(centers.shape[0])
    errs = np.zeros(centers.shape[0])
    if method == "exact":
        for i, (c, r) in enumerate(zip(centers, radii)):
            if omega.structure in ("all_space", "empty"):
                ratios[i] = 1.0 if omega.structure == "all_space" else 0.0
            elif d == 1:
                ratios[i] = omega.measure_in_box(c - r, c + r) / (2.0 * r)
            else:
                raise DomainError("exact thickness is only available in one dimension")
    elif method in ("mc", "halton"):
        rng = np.random.default_rng(probe.seed)
        n = int(probe.samples)
        if n < 1:
            raise DomainError("samples per ball must be >= 1")
        for i, (c, r) in enumerate(zip(centers, radii)):
            pts = c + r * _unit_ball_samples(d, n, method, rng, probe.seed + i)
            hit = float(np.mean(omega.indicator(pts)))
            ratios[i] = hit
            errs[i] = math.sqrt(max(hit * (1.0 - hit), 0.0) / n)
    else:
        raise DomainError(f"unknown thickness method {method!r}")
    k = int(np.argmin(ratios))
    return ThicknessReport(float(ratios[k]), centers, ratios, errs, method, probe.seed,
                           probe.samples if method != "exact" else 0)


# ---------------------------------------------------------------------------
# Covers
# ---------------------------------------------------------------------------

def overlap_bound(L: float, d: int) -> int:
    """``floor((4 C^3 + 1)^d)`` with ``C = 1/(1 - L)``."""
    if not 0 <= L < 1:
        raise DomainError("need 0 <= L < 1")
    C = 1.0 / (1.0 - L)
    return int(math.floor((4.0 * C**3 + 1.0) ** d * (1 + 1e-12)))


@dataclass
class BallCover:
    centers: np.ndarray
    radii: np.ndarray
    domain: tuple[np.ndarray, np.ndarray] | None
    overlap_bound: int
    lipschitz_L: float
    grid_step: float = 0.0

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self):
        return self.centers.shape[0]

    def multiplicity(self, x) -> np.ndarray:
        """Number of open balls containing each point."""
        x = _points(x, self.dim)
        out = np.zeros(x.shape[0], dtype=np.int64)
        for start in range(0, x.shape[0], 4096):
            chunk = x[start:start + 4096]
            dist = np.linalg.norm(chunk[:, None, :] - self.centers[None, :, :], axis=2)
            out[start:start + 4096] = np.sum(dist < self.radii[None, :], axis=1)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ball_id"] + [f"x{i + 1}" for i in range(self.dim)] + ["radius"])
        for k, (c, r) in enumerate(zip(self.centers, self.radii)):
            w.writerow([k] + [f"{v:.17g}" for v in c] + [f"{r:.17g}"])
        return buf.getvalue()


def domain_grid(lo, hi, step: float) -> np.ndarray:
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    axes = [np.linspace(a, b, max(2, int(math.ceil((b - a) / step)) + 1)) if b > a else np.array([a])
            for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def build_cover(rho: DensityModel, lo, hi, d: int, grid_step: float | None = None) -> BallCover:
    """Greedy ball cover of the box ``[lo, hi]^d``.

    Grid points are scanned in lexicographic order and a new ball
    ``B(x, rho(x))`` is opened at every point not yet covered with margin
    ``h sqrt(d)/2`` (``h`` the grid step), which guarantees that the whole
    continuous box is covered, not only the grid.
    """
    if not rho.is_contraction:
        raise DomainError(f"density is not a contraction (L = {rho.lipschitz_L})")
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,)).copy()
    bound = overlap_bound(rho.lipschitz_L, d)
    if np.any(hi < lo):
        return BallCover(np.zeros((0, d)), np.zeros(0), None, bound, rho.lipschitz_L)
    h = grid_step if grid_step is not None else 0.25 * rho.m
    grid = domain_grid(lo, hi, h)
    h_eff = max([(hi[i] - lo[i]) / max(1, len(np.unique(grid[:, i])) - 1) for i in range(d)] + [0.0])
    margin = 0.5 * h_eff * math.sqrt(d)
    radii_grid = np.atleast_1d(rho(grid))
    if np.any(radii_grid <= margin):
        raise DomainError("grid step too coarse for the density; refine grid_step")
    centers, radii = [], []
    c_arr = np.zeros((0, d))
    r_arr = np.zeros(0)
    for x, rx in zip(grid, radii_grid):
        if c_arr.shape[0]:
            dist = np.linalg.norm(c_arr - x, axis=1)
            if np.any(dist < r_arr - margin):
                continue
        centers.append(x)
        radii.append(rx)
        c_arr = np.array(centers)
        r_arr = np.array(radii)
    return BallCover(c_arr, r_arr, (lo, hi), bound, rho.lipschitz_L, h_eff)


def coverage_fraction(cover: BallCover, points) -> float:
    points = _points(points, cover.dim)
    if points.shape[0] == 0:
        return 1.0
    return float(np.mean(cover.multiplicity(points) >= 1))


@dataclass(frozen=True)
class OverlapResult:
    max_multiplicity: int
    witness: np.ndarray | None
    overlap_bound: int


def verify_overlap(cover: BallCover, probe) -> OverlapResult:
    """Max number of balls containing a probe point; raises when above the bound."""
    probe = _points(probe, cover.dim)
    if len(cover) == 0 or probe.shape[0] == 0:
        return OverlapResult(0, None, cover.overlap_bound)
    mult = cover.multiplicity(probe)
    k = int(np.argmax(mult))
    res = OverlapResult(int(mult[k]), probe[k].copy(), cover.overlap_bound)
    if res.max_multiplicity > cover.overlap_bound:
        raise OverlapViolation(
            f"point {probe[k].tolist()} lies in {res.max_multiplicity} balls, "
            f"above the bound {cover.overlap_bound}", witness=probe[k].copy(),
            multiplicity=res.max_multiplicity)
    return res


# ---------------------------------------------------------------------------
# Good and bad balls
# ---------------------------------------------------------------------------

def ball_quadrature(center: np.ndarray, radius: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on the open ball ``B(center, radius)`` in one or two dimensions."""
    d = center.size
    t, w = np.polynomial.legendre.leggauss(n)
    if d == 1:
        return center + radius * t[:, None], radius * w
    if d == 2:
        r = 0.5 * radius * (t + 1.0)
        wr = 0.5 * radius * w * r
        m = 2 * n
        theta = 2.0 * math.pi * np.arange(m) / m
        rr, th = np.meshgrid(r, theta, indexing="ij")
        pts = center + np.stack([(rr * np.cos(th)).ravel(), (rr * np.sin(th)).ravel()], axis=1)
        weights = np.repeat(wr, m) * (2.0 * math.pi / m)
        return pts, weights
    raise DomainError("ball quadrature is implemented for d <= 2")


def _tensor_values(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values at points ``x (n, d)`` of a padded coefficient tensor."""
    d = t.ndim
    L = t.shape[0] - 1
    phis = [hermite_functions(L, x[:, i]) for i in range(d)]  # each (L+1, n)
    if d == 1:
        return t @ phis[0]
    if d == 2:
        return np.einsum("ij,in,jn->n", t, phis[0], phis[1])
    return np.einsum("ijk,in,jn,kn->n", t, phis[0], phis[1], phis[2])


@dataclass
class BallLabel:
    ball_id: int
    good: bool
    witness_p: int | None = None
    witness_beta: tuple[int, ...] | None = None
    mass: float = 0.0


@dataclass
class Classification:
    labels: list[BallLabel]
    epsilon: float
    cutoff: int
    K0: int
    vacuous: bool = False
    label_scope: str = "good up to order P"

    @property
    def good(self) -> list[int]:
        return [b.ball_id for b in self.labels if b.good]

    @property
    def bad(self) -> list[int]:
        return [b.ball_id for b in self.labels if not b.good]

    def bad_mass(self) -> float:
        """``sum over bad balls of int_{B_k} |f|^2`` in ball index order."""
        return float(sum(b.mass for b in self.labels if not b.good))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ball_id", "label", "witness_p", "witness_beta"])
        for b in self.labels:
            beta = "" if b.witness_beta is None else ";".join(str(v) for v in b.witness_beta)
            p = "" if b.witness_p is None else b.witness_p
            w.writerow([b.ball_id, "good" if b.good else "bad", p, beta])
        return buf.getvalue()


def classify_balls(f: HermiteExpansion, cover: BallCover, eps: float, nseq: DoubleSequence,
                   P: int = 6, rho: DensityModel | None = None,
                   nodes: int | None = None) -> Classification:
    """Label each ball of ``cover`` good or bad for ``f`` up to derivative order ``P``.

    A ball is good when every ``p <= P`` and ``|beta| <= P`` satisfy
    ``int_B |rho^p d^beta f|^2 <= eps^{-1} 2^{2(p+|beta|)+d+1} K0 N_{p,|beta|}^2 int_B |f|^2``
    with ``K0`` the cover's overlap bound.  Tests run with ``p`` in the outer
    loop and ``beta`` in graded order inside; the first failure is the witness.
    ``rho`` defaults to the constant density matching the cover radii.
    """
    d = f.dim
    if cover.dim != d:
        raise DomainError("cover and expansion dimensions differ")
    if not eps > 0:
        raise DomainError("eps must be positive")
    if eps > math.exp(2.0 * nseq.log_value(0, 0)) * (1 + 1e-12):
        raise DomainError("eps must not exceed N_{0,0}^2")
    if P < 0:
        raise DomainError("cutoff P must be >= 0")
    if rho is None:
        rho = DensityModel.constant(float(cover.radii[0])) if len(cover) else DensityModel.constant()
    K0 = cover.overlap_bound
    n = nodes or max(24, 2 * (f.level + P) + 24)
    base = f.to_tensor(P)
    betas = [tuple(int(v) for v in b) for b in multi_indices(d, P)]
    deriv = {b: apply_monomial_derivative(base, (0,) * d, b, d) for b in betas}
    labels = []
    log_eps = math.log(eps)
    for k, (c, r) in enumerate(zip(cover.centers, cover.radii)):
        pts, w = ball_quadrature(np.asarray(c, dtype=float), float(r), n)
        rv = np.atleast_1d(rho(pts))
        vals = {b: np.abs(_tensor_values(t, pts)) ** 2 for b, t in deriv.items()}
        mass = float(np.sum(w * vals[(0,) * d]))
        label = BallLabel(k, True, mass=mass)
        for p in range(P + 1):
            weight_p = w * rv ** (2 * p)
            for b in betas:
                q = sum(b)
                lhs = float(np.sum(weight_p * vals[b]))
                log_rhs = (-log_eps + (2 * (p + q) + d + 1) * math.log(2.0) + math.log(K0)
                           + 2.0 * nseq.log_value(p, q) + (math.log(mass) if mass > 0 else -math.inf))
                if lhs > 0 and (mass == 0 or math.log(lhs) > log_rhs):
                    label = BallLabel(k, False, p, b, mass)
                    break
            if not label.good:
                break
        labels.append(label)
    return Classification(labels, eps, P, K0, vacuous=(P == 0))


def density_seminorm(f: HermiteExpansion, rho: DensityModel, nseq: DoubleSequence, P: int,
                     nodes: int | None = None) -> float:
    """``sup_{p <= P, |beta| <= P} ||rho^p d^beta f|| / N_{p,|beta|}`` by Gauss-Hermite quadrature."""
    d = f.dim
    L = f.level + P
    n = nodes or min(512, L + 2 * P + 32)
    x, w = gauss_hermite_rule(n, scaled=True)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    weight = w
    for _ in range(d - 1):
        weight = np.multiply.outer(weight, w)
    weight = weight.ravel()
    rv = np.atleast_1d(rho(pts))
    base = f.to_tensor(P)
    best = 0.0
    for b in multi_indices(d, P):
        b = tuple(int(v) for v in b)
        g2 = np.abs(_tensor_values(apply_monomial_derivative(base, (0,) * d, b, d), pts)) ** 2
        for p in range(P + 1):
            val = math.sqrt(float(np.sum(weight * rv ** (2 * p) * g2)))
            best = max(best, val / math.exp(nseq.log_value(p, sum(b))))
    return best
