"""Hermite functions, Gauss-Hermite quadrature and ladder-operator algebra.

Coefficients of an expansion on ``R^d`` live in two layouts:

* a flat vector indexed by the graded multi-index list of :func:`multi_indices`
  (degree ascending, lexicographic ascending inside a degree);
* a dense tensor of shape ``(L+1,)*d`` used for operator algebra, where
  ``L = N + margin`` leaves room for the raising part of ``x`` and ``d/dx``.

On a padded tensor the per-axis operators act by

    x phi_k      = sqrt(k/2) phi_{k-1} + sqrt((k+1)/2) phi_{k+1}
    d/dx phi_k   = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1}

so ``x^a d^b`` applied to an expansion of level ``N`` is exact whenever
``N + |a| + |b| <= L``.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, special

from .errors import DomainError, PaddingError

LOG_PI_QUARTER = 0.25 * math.log(math.pi)


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _multi_indices(d: int, N: int) -> np.ndarray:
    rows = []
    for deg in range(N + 1):
        for combo in itertools.product(range(deg + 1), repeat=d):
            if sum(combo) == deg:
                rows.append(combo)
    out = np.array(rows, dtype=np.int64).reshape(-1, d)
    out.setflags(write=False)
    return out


def multi_indices(d: int, N: int) -> np.ndarray:
    """All ``alpha`` in ``N^d`` with ``|alpha| <= N`` in graded lexicographic order.

    Returns a read-only array of shape ``(binom(N+d, d), d)``.
    """
    if d < 1 or N < 0:
        raise DomainError("need d >= 1 and N >= 0")
    return _multi_indices(int(d), int(N))


def multi_indices_of_degree(d: int, k: int) -> list[tuple[int, ...]]:
    return [c for c in itertools.product(range(k + 1), repeat=d) if sum(c) == k]


def n_coefficients(d: int, N: int) -> int:
    return math.comb(N + d, d)


# ---------------------------------------------------------------------------
# Basis evaluation and quadrature
# ---------------------------------------------------------------------------

def hermite_functions(n: int, x) -> np.ndarray:
    """Evaluate ``phi_0..phi_n`` at ``x``; returns shape ``(n+1,) + x.shape``.

    Uses the normalised three-term recurrence on ``e^{x^2/2}``-scaled values
    with a running logarithmic scale, so nothing underflows before the final
    multiplication by the Gaussian.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty((n + 1, flat.size))
    log_scale = -0.5 * flat**2 - LOG_PI_QUARTER
    prev = np.zeros_like(flat)
    cur = np.ones_like(flat)
    out[0] = np.exp(log_scale)
    for k in range(n):
        nxt = flat * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if np.any(big):
            f = np.where(big, np.abs(cur), 1.0)
            cur = cur / f
            prev = prev / f
            log_scale = log_scale + np.log(f)
        out[k + 1] = cur * np.exp(log_scale)
    return out.reshape((n + 1,) + x.shape)


def hermite_eval(k: int, x):
    """``phi_k(x)``, the L2-normalised Hermite function of order ``k``."""
    if not 0 <= k <= 10**4:
        raise DomainError("k must lie in [0, 10^4]")
    val = hermite_functions(k, x)[k]
    return float(val) if np.ndim(val) == 0 else val


@lru_cache(maxsize=64)
def _gauss_hermite(n: int):
    k = np.arange(1, n)
    nodes, _ = linalg.eigh_tridiagonal(np.zeros(n), np.sqrt(k / 2.0))
    nodes = 0.5 * (nodes - nodes[::-1])  # enforce exact symmetry
    phi = hermite_functions(n - 1, nodes)
    # Christoffel numbers: e^{-x^2} w_i^{-1} = sum_k phi_k(x_i)^2
    scaled = 1.0 / np.sum(phi**2, axis=0)
    nodes.setflags(write=False)
    scaled.setflags(write=False)
    return nodes, scaled


def gauss_hermite_rule(n: int, scaled: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``int e^{-x^2} g(x) dx`` (Golub-Welsch).

    With ``scaled=True`` the weights already include ``e^{x_i^2}``, which is
    the convenient form for integrating products of Hermite functions.
    """
    if not 1 <= n <= 512:
        raise DomainError("n must lie in [1, 512]")
    nodes, w_scaled = _gauss_hermite(int(n))
    if scaled:
        return nodes.copy(), w_scaled.copy()
    return nodes.copy(), w_scaled * np.exp(-nodes**2)


# ---------------------------------------------------------------------------
# Ladder algebra
# ---------------------------------------------------------------------------

def _shift_apply(c: np.ndarray, axis: int, sign: float) -> np.ndarray:
    """Apply ``x`` (sign=+1) or ``d/dx`` (sign=-1) along ``axis`` of a padded tensor.

    ``x phi_k = sqrt(k/2) phi_{k-1} + sqrt((k+1)/2) phi_{k+1}`` and
    ``phi_k' = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1}``.
    """
    c = np.moveaxis(c, axis, -1)
    L1 = c.shape[-1]
    j = np.arange(L1, dtype=float)
    lower = np.sqrt(j[1:] / 2.0)          # weight of c[j-1] in out[j]
    upper = np.sqrt((j[:-1] + 1.0) / 2.0)  # weight of c[j+1] in out[j]
    out = np.zeros_like(c)
    out[..., :-1] += upper * c[..., 1:]
    if sign > 0:
        out[..., 1:] += lower * c[..., :-1]
    else:
        out[..., 1:] -= lower * c[..., :-1]
    return np.moveaxis(out, -1, axis)


def apply_position(c: np.ndarray, axis: int) -> np.ndarray:
    return _shift_apply(c, axis, +1.0)


def apply_derivative(c: np.ndarray, axis: int) -> np.ndarray:
    return _shift_apply(c, axis, -1.0)


def apply_monomial_derivative(c: np.ndarray, alpha, beta, d: int) -> np.ndarray:
    """``x^alpha d^beta`` on a (possibly batched) padded tensor whose last ``d`` axes are spatial."""
    nb = c.ndim - d
    for i, b in enumerate(beta):
        for _ in range(int(b)):
            c = apply_derivative(c, nb + i)
    for i, a in enumerate(alpha):
        for _ in range(int(a)):
            c = apply_position(c, nb + i)
    return c


@dataclass(frozen=True)
class LadderMatrices:
    """Dense per-axis matrices of ``x`` and ``d/dx`` on ``phi_0..phi_L``.

    ``X[i, j]`` is the coefficient of ``phi_i`` in ``x phi_j``.  Products of
    these matrices are exact on the leading ``level + 1`` block as long as
    the total order does not exceed ``margin``.
    """

    level: int
    margin: int
    X: np.ndarray
    D: np.ndarray

    @property
    def size(self) -> int:
        return self.level + self.margin + 1

    def check_order(self, order: int):
        if order > self.margin:
            raise PaddingError(
                f"operator order {order} exceeds padding margin {self.margin}; "
                f"rebuild with margin >= {order}")

    def power_product(self, a: int, b: int) -> np.ndarray:
        """Matrix of ``x^a d^b`` restricted to the unpadded block (columns) and full rows."""
        self.check_order(a + b)
        M = np.eye(self.size)
        for _ in range(b):
            M = self.D @ M
        for _ in range(a):
            M = self.X @ M
        return M[:, : self.level + 1]

    def band_rows(self) -> list[tuple[str, int, int, float]]:
        rows = []
        for name, M in (("X", self.X), ("D", self.D)):
            ii, jj = np.nonzero(M)
            rows.extend((name, int(i), int(j), float(M[i, j])) for i, j in zip(ii, jj))
        return rows

    def dump_bands_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["matrix", "row", "col", "value"])
        for name, i, j, v in self.band_rows():
            w.writerow([name, i, j, f"{v:.17g}"])
        return buf.getvalue()


@lru_cache(maxsize=64)
def ladder_matrices(level: int, margin: int) -> LadderMatrices:
    """Cached immutable ladder matrices for ``phi_0..phi_{level+margin}``."""
    if level < 0 or margin < 0:
        raise DomainError("level and margin must be >= 0")
    L1 = level + margin + 1
    j = np.arange(1, L1, dtype=float)
    band = np.sqrt(j / 2.0)
    X = np.diag(band, -1) + np.diag(band, 1)
    D = np.diag(-band, -1) + np.diag(band, 1)
    X.setflags(write=False)
    D.setflags(write=False)
    return LadderMatrices(level, margin, X, D)


# ---------------------------------------------------------------------------
# Expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HermiteExpansion:
    """Coefficients of ``f = sum_{|alpha| <= N} c_alpha Phi_alpha`` on ``R^d``."""

    dim: int
    level: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, copy=True)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        if c.shape != (n_coefficients(self.dim, self.level),):
            raise DomainError(
                f"expected {n_coefficients(self.dim, self.level)} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # constructors -------------------------------------------------------
    @classmethod
    def zeros(cls, d: int, N: int) -> HermiteExpansion:
        return cls(d, N, np.zeros(n_coefficients(d, N)))

    @classmethod
    def basis(cls, d: int, N: int, alpha) -> HermiteExpansion:
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if len(alpha) != d or sum(alpha) > N:
            raise DomainError(f"multi-index {alpha} not available at d={d}, N={N}")
        c = np.zeros(n_coefficients(d, N))
        c[index_of(alpha)] = 1.0
        return cls(d, N, c)

    @classmethod
    def random(cls, d: int, N: int, rng: np.random.Generator) -> HermiteExpansion:
        c = rng.standard_normal(n_coefficients(d, N))
        return cls(d, N, c / np.linalg.norm(c))

    @classmethod
    def from_tensor(cls, tensor: np.ndarray, level: int) -> HermiteExpansion:
        d = tensor.ndim
        idx = multi_indices(d, level)
        return cls(d, level, tensor[tuple(idx.T)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermiteExpansion):
            return NotImplemented
        return (self.dim, self.level) == (other.dim, other.level) and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    # views ----------------------------------------------------------------
    def coefficient(self, alpha) -> complex | float:
        return self.coeffs[index_of(tuple(alpha))]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def to_tensor(self, margin: int = 0) -> np.ndarray:
        L1 = self.level + margin + 1
        t = np.zeros((L1,) * self.dim, dtype=self.coeffs.dtype)
        t[tuple(multi_indices(self.dim, self.level).T)] = self.coeffs
        return t

    def evaluate(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape ``(n, d)`` (or ``(n,)`` when ``d = 1``)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and x.ndim == 1:
            x = x[:, None]
        phis = [hermite_functions(self.level, x[:, i]) for i in range(self.dim)]
        out = np.zeros(x.shape[0], dtype=self.coeffs.dtype)
        for c, alpha in zip(self.coeffs, multi_indices(self.dim, self.level)):
            if c == 0:
                continue
            term = np.ones(x.shape[0])
            for i, a in enumerate(alpha):
                term = term * phis[i][a]
            out = out + c * term
        return out

    def project(self, level: int) -> HermiteExpansion:
        return project(self, level)

    def __add__(self, other: HermiteExpansion) -> HermiteExpansion:
        if self.dim != other.dim:
            raise DomainError("dimension mismatch")
        N = max(self.level, other.level)
        return HermiteExpansion(self.dim, N, _pad(self, N).coeffs + _pad(other, N).coeffs)

    def __mul__(self, scalar) -> HermiteExpansion:
        return HermiteExpansion(self.dim, self.level, self.coeffs * scalar)

    __rmul__ = __mul__

    # CSV ----------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"alpha_{i + 1}" for i in range(self.dim)] + ["real", "imag"])
        for alpha, c in zip(multi_indices(self.dim, self.level), self.coeffs):
            c = complex(c)
            w.writerow([int(a) for a in alpha] + [f"{c.real:.17g}", f"{c.imag:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> HermiteExpansion:
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        d = len(header) - 2
        if d < 1 or header[-2:] != ["real", "imag"]:
            raise DomainError("expansion CSV needs alpha_1..alpha_d, real, imag columns")
        alphas = [tuple(int(v) for v in r[:d]) for r in body]
        N = max((sum(a) for a in alphas), default=0)
        vals = np.array([complex(float(r[d]), float(r[d + 1])) for r in body])
        c = np.zeros(n_coefficients(d, N), dtype=complex)
        for a, v in zip(alphas, vals):
            c[index_of(a)] = v
        if not np.any(c.imag):
            c = c.real
        return cls(d, N, c)


def index_of(alpha: tuple[int, ...]) -> int:
    """Position of ``alpha`` in the graded lexicographic order (dimension-agnostic)."""
    d, deg = len(alpha), sum(alpha)
    pos = math.comb(deg - 1 + d, d) if deg > 0 else 0
    # count indices of the same degree that precede alpha lexicographically
    remaining = deg
    for i, a in enumerate(alpha[:-1]):
        slots = d - i - 1
        for v in range(a):
            pos += math.comb(remaining - v + slots - 1, slots - 1)
        remaining -= a
    return pos


def _pad(f: HermiteExpansion, N: int) -> HermiteExpansion:
    if N == f.level:
        return f
    c = np.zeros(n_coefficients(f.dim, N), dtype=f.coeffs.dtype)
    c[: f.coeffs.size] = f.coeffs
    return HermiteExpansion(f.dim, N, c)


def project(f: HermiteExpansion, level: int) -> HermiteExpansion:
    """Orthogonal projection onto ``E_level`` (drop modes with ``|alpha| > level``)."""
    if not 0 <= level <= f.level:
        raise DomainError("projection level must lie in [0, f.level]")
    return HermiteExpansion(f.dim, level, f.coeffs[: n_coefficients(f.dim, level)])


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _as_multi(v, d: int) -> tuple[int, ...]:
    v = tuple(int(a) for a in np.atleast_1d(v))
    if len(v) != d or min(v) < 0:
        raise DomainError(f"multi-index {v} invalid for d={d}")
    return v


def weighted_seminorm(f: HermiteExpansion, alpha, beta, margin: int | None = None) -> float:
    """``||x^alpha d^beta f||_{L^2}`` by exact ladder algebra.

    ``margin`` defaults to ``|alpha| + |beta|``; a smaller explicit margin
    raises :class:`PaddingError`.
    """
    alpha, beta = _as_multi(alpha, f.dim), _as_multi(beta, f.dim)
    order = sum(alpha) + sum(beta)
    if margin is None:
        margin = order
    elif order > margin:
        raise PaddingError(f"order {order} exceeds padding margin {margin}")
    g = apply_monomial_derivative(f.to_tensor(margin), alpha, beta, f.dim)
    return float(np.linalg.norm(g))


def bernstein_bound(N: int, order: int) -> float:
    """``2^{order/2} sqrt((N+order)!/N!)``."""
    return math.exp(0.5 * order * math.log(2.0)
                    + 0.5 * (math.lgamma(N + order + 1) - math.lgamma(N + 1)))


def _operator_matrix(d: int, N: int, alpha, beta) -> np.ndarray:
    """Columns are ``x^alpha d^beta Phi_gamma`` (flattened padded tensors) for ``|gamma| <= N``."""
    order = sum(alpha) + sum(beta)
    idx = multi_indices(d, N)
    L1 = N + order + 1
    batch = np.zeros((idx.shape[0],) + (L1,) * d)
    batch[(np.arange(idx.shape[0]),) + tuple(idx.T)] = 1.0
    out = apply_monomial_derivative(batch, alpha, beta, d)
    return out.reshape(idx.shape[0], -1).T


def bernstein_operator_norm(d: int, N: int, alpha, beta) -> float:
    """Exact ``sup_{f in E_N} ||x^alpha d^beta f|| / ||f||`` (largest singular value)."""
    alpha, beta = _as_multi(alpha, d), _as_multi(beta, d)
    return float(np.linalg.norm(_operator_matrix(d, N, alpha, beta), 2))


def bernstein_check(N: int, alpha, beta, trials: int, seed: int, d: int | None = None) -> float:
    """Max over seeded random unit ``f in E_N`` of the Bernstein ratio.

    The ratio is ``||x^alpha d^beta f|| / (2^{(|alpha|+|beta|)/2}
    sqrt((N+|alpha|+|beta|)!/N!) ||f||)``; it never exceeds 1.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if d is None:
        d = len(np.atleast_1d(alpha))
    alpha, beta = _as_multi(alpha, d), _as_multi(beta, d)
    order = sum(alpha) + sum(beta)
    rng = np.random.default_rng(seed)
    K = n_coefficients(d, N)
    coeffs = rng.standard_normal((trials, K))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    op = _operator_matrix(d, N, alpha, beta)
    norms = np.linalg.norm(coeffs @ op.T, axis=1)
    return float(np.max(norms) / bernstein_bound(N, order))


def log_gs_theta_norm(f: HermiteExpansion, w) -> float:
    """``log ||f||_{GS_Theta}`` computed by log-sum-exp."""
    idx = multi_indices(f.dim, f.level)
    deg = idx.sum(axis=1).astype(float)
    mag = np.abs(f.coeffs)
    keep = mag > 0
    if not np.any(keep):
        return -math.inf
    terms = 2.0 * np.asarray(w(deg[keep]), dtype=float) + 2.0 * np.log(mag[keep])
    return 0.5 * float(special.logsumexp(terms))


def gs_theta_norm(f: HermiteExpansion, w) -> float:
    """``(sum_alpha e^{2 Theta(|alpha|)} |c_alpha|^2)^{1/2}``; may overflow to ``inf``."""
    with np.errstate(over="ignore"):
        return float(np.exp(log_gs_theta_norm(f, w)))


def _monomial_norms_sq(g: np.ndarray, d: int, P: int) -> dict[tuple[int, ...], float]:
    """``||x^a g||^2`` for every ``|a| <= P`` on a tensor padded by at least ``P``."""
    out = {(0,) * d: float(np.sum(np.abs(g) ** 2))}
    frontier = {(0,) * d: g}
    for _ in range(P):
        nxt = {}
        for a, t in frontier.items():
            for i in range(d):
                b = a[:i] + (a[i] + 1,) + a[i + 1:]
                if b not in nxt:
                    nxt[b] = apply_position(t, i)
        for b, t in nxt.items():
            out[b] = float(np.sum(np.abs(t) ** 2))
        frontier = nxt
    return out


def bracket_norms_sq(g: np.ndarray, d: int, P: int) -> np.ndarray:
    """``||<x>^p g||^2`` for ``p = 0..P`` via the multinomial identity.

    ``<x>^{2p} = sum_{j + |a| = p} p!/(j! a!) x^{2a}``.
    """
    mono = _monomial_norms_sq(g, d, P)
    out = np.zeros(P + 1)
    for p in range(P + 1):
        total = 0.0
        for a, v in mono.items():
            k = sum(a)
            if k > p:
                continue
            coef = math.factorial(p) / (math.factorial(p - k) * math.prod(math.factorial(x) for x in a))
            total += coef * v
        out[p] = total
    return out


def derivative_tensors(f: HermiteExpansion, P: int, margin: int):
    """Yield ``(beta, d^beta f)`` padded tensors for every ``|beta| <= P``."""
    base = f.to_tensor(margin)
    for beta in multi_indices(f.dim, P):
        yield tuple(int(b) for b in beta), apply_monomial_derivative(base, (0,) * f.dim, beta, f.dim)


def gs_pair_seminorm(f: HermiteExpansion, A: float, mu: float, nu: float, P: int,
                     return_table: bool = False, P_beta: int | None = None):
    """``sup_{p <= P, |beta| <= P} ||<x>^p d^beta f|| / (A^{p+|beta|} (p!)^nu (|beta|!)^mu)``.

    The supremum is over the truncated index box only; ``P_beta`` sets a
    separate cutoff for ``|beta|``.  With ``return_table=True`` also returns
    ``{(p, beta): ||<x>^p d^beta f||}``.
    """
    if A < 1 or P < 0:
        raise DomainError("need A >= 1 and P >= 0")
    Pb = P if P_beta is None else P_beta
    best = 0.0
    table = {}
    for beta, g in derivative_tensors(f, Pb, P + Pb):
        norms = np.sqrt(bracket_norms_sq(g, f.dim, P))
        b = sum(beta)
        for p in range(P + 1):
            denom = A ** (p + b) * math.factorial(p) ** nu * math.factorial(b) ** mu
            best = max(best, norms[p] / denom)
            table[(p, beta)] = float(norms[p])
    return (best, table) if return_table else best


def fractional_bracket_norm(g: np.ndarray, level: int, q: float, nodes: int | None = None) -> float:
    """``||<x>^q g||_{L^2}`` for real ``q >= 0`` by tensor Gauss-Hermite quadrature.

    ``g`` is a padded coefficient tensor with support in ``|alpha| <= level``.
    """
    d = g.ndim
    L = g.shape[0] - 1
    n = nodes or min(512, L + int(math.ceil(q)) + 24)
    x, w = gauss_hermite_rule(n, scaled=True)
    phi = hermite_functions(L, x)  # (L+1, n)
    vals = g
    for _ in range(d):
        vals = np.tensordot(vals, phi, axes=([0], [0]))  # contracts leading axis, appends node axis
    grids = np.meshgrid(*([x] * d), indexing="ij")
    r2 = sum(gi**2 for gi in grids)
    weight = w
    for _ in range(d - 1):
        weight = np.multiply.outer(weight, w)
    return float(math.sqrt(np.sum(weight * (1.0 + r2) ** q * np.abs(vals) ** 2)))
