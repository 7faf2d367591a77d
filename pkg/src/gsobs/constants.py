"""Closed-form constants and bounds, all evaluated in log-space.

Constants whose value is only known to exist (``K``, ``K'``, ``r``, ``D``)
are explicit inputs defaulting to 1; every report lists them under
``fitted_constants`` so that assumed values are never mistaken for derived
ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotQuasiAnalyticError
from .geometry import DensityModel
from .hermite import (HermiteExpansion, _operator_matrix, bracket_norms_sq, derivative_tensors,
                      fractional_bracket_norm, gs_pair_seminorm, log_gs_theta_norm,
                      multi_indices, n_coefficients)
from .sequences import (INFINITE, DoubleSequence, SequenceModel, WeightModel, bang_degree,
                        gamma_Gamma, is_log_convex, sequence_from_weight)

REGIME_RTOL = 1e-12
LINEAR_CUTOFF = math.log(1e300)


@dataclass(frozen=True)
class GSParams:
    """Gelfand-Shilov smoothing parameters ``(mu, nu, delta, A)`` and ``(C, r1, r2, t0)``."""

    mu: float
    nu: float
    delta: float = 0.0
    A: float = 1.0
    C: float = 1.0
    r1: float = 1.0
    r2: float = 0.0
    t0: float = 1.0

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise DomainError("mu must lie in (0, 1]")
        if not self.nu > 0 or self.mu + self.nu < 1 - REGIME_RTOL:
            raise DomainError("need nu > 0 and mu + nu >= 1")
        if not 0 <= self.delta <= self.delta_max * (1 + REGIME_RTOL) + 1e-300:
            raise DomainError(f"delta must lie in [0, (1-mu)/nu] = [0, {self.delta_max}]")
        if not (self.A >= 1 and self.C >= 1 and self.r1 > 0 and self.r2 >= 0 and 0 < self.t0 <= 1):
            raise DomainError("need A >= 1, C >= 1, r1 > 0, r2 >= 0, 0 < t0 <= 1")

    @property
    def delta_max(self) -> float:
        return (1.0 - self.mu) / self.nu

    @property
    def regime(self) -> str:
        """``critical`` when ``delta`` equals ``(1-mu)/nu`` within relative tolerance 1e-12."""
        dm = self.delta_max
        if abs(self.delta - dm) <= REGIME_RTOL * max(abs(dm), 1.0):
            return "critical"
        return "strict"

    @property
    def gap(self) -> float:
        """``1 - mu - delta nu``."""
        return 1.0 - self.mu - self.delta * self.nu

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("mu", "nu", "delta", "A", "C", "r1", "r2", "t0")}


@dataclass
class ConstantReport:
    name: str
    inputs: dict
    log_value: float
    formula: str
    regime: str | None = None
    fitted_constants: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log_value):
            raise DomainError(f"{self.name}: value is not finite")

    @property
    def linear_value(self) -> float | None:
        return math.exp(self.log_value) if self.log_value < LINEAR_CUTOFF else None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "inputs": self.inputs,
            "log_value": self.log_value,
            "regime": self.regime,
            "citations": [self.formula],
            "fitted_constants": self.fitted_constants,
            "notes": list(self.notes),
        }
        if self.linear_value is not None:
            out["linear_value"] = self.linear_value
        out.update(self.extra)
        return out


# ---------------------------------------------------------------------------
# Propagation of smallness
# ---------------------------------------------------------------------------

def _log_gamma_power(m: SequenceModel, n: int, log_base: float, power: int) -> float:
    """``power * (log_base + log Gamma_M(n))``; zero when ``power == 0``."""
    if power == 0:
        return 0.0
    g, _ = gamma_Gamma(m, n)
    return power * (log_base + math.log(4.0) + 4.0 + 4.0 * g)


@dataclass
class NSVReport:
    n_star: int
    log_linf: float
    log_l2: float
    r: float
    normalization: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"n_star": self.n_star, "log_linf_factor": self.log_linf,
                "log_l2_factor": self.log_l2, "bang_budget": self.r,
                "log_M0_divided_out": self.normalization, "notes": self.notes}


def nsv_constants(m: SequenceModel, t: float, gamma: float, d: int, diam: float) -> NSVReport:
    """Propagation-of-smallness factors for a quasi-analytic sequence.

    With ``n = bang_degree(m, t, d diam e)``: the sup-norm factor is
    ``((d/gamma) Gamma_M(2n))^{2n}`` and the L2 factor is
    ``(2/gamma) ((2d/gamma) Gamma_M(2n))^{4n}``.  Both are returned as logs.
    """
    if not (0 < t <= 1 and 0 < gamma <= 1 and d >= 1 and diam > 0):
        raise DomainError("need 0 < t <= 1, 0 < gamma <= 1, d >= 1, diam > 0")
    notes = []
    log_m0 = m.log_value(0)
    if log_m0 != 0.0:
        # ratios M_{n-1}/M_n and second differences are invariant under M -> M/M_0
        notes.append(f"normalised by M_0 = exp({log_m0!r}); ratio sums and Bang budget unchanged")
    r = d * diam * math.e
    n = bang_degree(m, t, r)
    if n == INFINITE:
        raise NotQuasiAnalyticError("not quasi-analytic at these parameters: Bang degree is infinite")
    n = int(n)
    log_linf = _log_gamma_power(m, 2 * n, math.log(d / gamma), 2 * n) if n else 0.0
    log_l2 = math.log(2.0 / gamma) + (_log_gamma_power(m, 2 * n, math.log(2 * d / gamma), 4 * n)
                                      if n else 0.0)
    return NSVReport(n, log_linf, log_l2, r, log_m0, notes)


def general_up_constant(nseq: DoubleSequence, rho: DensityModel, gamma: float, d: int, eps: float,
                        K: float = 1.0, K_prime: float = 1.0, r: float = 1.0) -> ConstantReport:
    """``C_eps = K' ((2d/gamma) Gamma(2n))^{4n}`` with ``n`` the Bang degree of the diagonal.

    ``t0 = eps^{1/2} / (K N_{d,d})``; values of ``t0`` above 1 are clamped
    since ratio sums start at ``n = 1`` anyway.
    """
    if not (0 < gamma <= 1 and d >= 1):
        raise DomainError("need 0 < gamma <= 1 and d >= 1")
    if not (K >= 1 and K_prime >= 1 and r >= 1):
        raise DomainError("K, K' and r must be >= 1")
    if not rho.is_contraction:
        raise DomainError("density must be a contraction")
    log_n00 = nseq.log_value(0, 0)
    if not 0 < eps <= math.exp(2 * log_n00) * (1 + 1e-12):
        raise DomainError("eps must lie in (0, N_{0,0}^2]")
    diag = nseq.diagonal()
    lc = is_log_convex(diag, min(64, diag.max_index or 64))
    if not lc:
        raise DomainError(f"diagonal sequence is not log-convex at p={lc.first_violation}")
    log_t0 = 0.5 * math.log(eps) - math.log(K) - nseq.log_value(d, d)
    notes = []
    if log_t0 > 0:
        notes.append(f"t0 = exp({log_t0!r}) > 1 clamped to 1")
    t0 = math.exp(min(log_t0, 0.0))
    n = bang_degree(diag, t0, r)
    if n == INFINITE:
        raise NotQuasiAnalyticError("not quasi-analytic at these parameters: Bang degree is infinite")
    n = int(n)
    log_c = math.log(K_prime) + (_log_gamma_power(diag, 2 * n, math.log(2 * d / gamma), 4 * n)
                                 if n else 0.0)
    return ConstantReport(
        "general_up_constant",
        {"gamma": gamma, "d": d, "eps": eps, "N": nseq.to_dict(), "rho": rho.to_dict()
         if rho.kind != "custom" else "custom"},
        log_c, "C_eps = K' ((2d/gamma) Gamma(2n))^(4n), n = n_{t0,N,r}, t0 = sqrt(eps)/(K N_{d,d})",
        fitted_constants={"K": K, "K_prime": K_prime, "r": r}, notes=notes,
        extra={"n_star": n, "t0": t0})


def specific_up_constant(g: GSParams, eps: float, K: float = 1.0) -> ConstantReport:
    """Upper bound on ``log C_{eps,A}`` with regime dispatch.

    strict: ``K (1 - log eps + A^{2/(1-mu-delta nu)})``;
    critical: ``K (1 - log eps + log A) e^{K A^2}``.
    """
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    if K < 1:
        raise DomainError("K must be >= 1")
    if g.regime == "strict":
        if g.gap <= 0:
            raise DomainError("strict regime needs mu + delta nu < 1")
        val = K * (1.0 - math.log(eps) + g.A ** (2.0 / g.gap))
        formula = "K (1 - log eps + A^(2/(1 - mu - delta nu)))"
    else:
        val = K * (1.0 - math.log(eps) + math.log(g.A)) * math.exp(K * g.A**2)
        formula = "K (1 - log eps + log A) exp(K A^2)"
    return ConstantReport("specific_up_constant", {"params": g.to_dict(), "eps": eps}, val,
                          formula, regime=g.regime, fitted_constants={"K": K})


# ---------------------------------------------------------------------------
# Shubin indices and observability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShubinIndices:
    nu: float
    mu: float
    delta_star: float | None
    note: str = ""

    def as_params(self, delta: float | None = None, **kw) -> GSParams:
        if delta is None:
            if self.delta_star is None:
                raise DomainError("delta* is undefined for these indices")
            delta = min(self.delta_star, (1 - self.mu) / self.nu)
        return GSParams(mu=self.mu, nu=self.nu, delta=delta, **kw)


def shubin_indices(m: int, k: int, s: float) -> ShubinIndices:
    """Gelfand-Shilov indices of the fractional anisotropic Shubin semigroup.

    ``nu = max(1/(2sk), m/(k+m))``, ``mu = max(1/(2sm), k/(k+m))`` and
    ``delta* = 1`` if ``s >= (m+k)/(2mk)``, else ``(k/m)(2sm - 1)``;
    ``delta*`` is undefined for ``s <= 1/(2m)``.
    """
    if m < 1 or k < 1 or not s > 0:
        raise DomainError("need m, k >= 1 and s > 0")
    nu = max(1.0 / (2 * s * k), m / (k + m))
    mu = max(1.0 / (2 * s * m), k / (k + m))
    if s <= 1.0 / (2 * m):
        return ShubinIndices(nu, mu, None, "s <= 1/(2m): no delta* available")
    if s >= (m + k) / (2.0 * m * k):
        return ShubinIndices(nu, mu, 1.0)
    return ShubinIndices(nu, mu, (k / m) * (2 * s * m - 1))


def observability_exponent(g: GSParams) -> float:
    """``2 r1 / (1 - mu - delta nu)``."""
    if g.regime == "critical":
        raise DomainError("critical regime: no theoretical cost bound is available (open problem)")
    return 2.0 * g.r1 / g.gap


def observability_cost_bound(g: GSParams, T: float, K: float = 1.0) -> ConstantReport:
    """``log(K exp(K / T^{2 r1/(1-mu-delta nu)}))`` in the strict regime."""
    if not T > 0:
        raise DomainError("T must be positive")
    if K < 1:
        raise DomainError("K must be >= 1")
    e = observability_exponent(g)
    val = math.log(K) + K * T ** (-e)
    return ConstantReport("observability_cost_bound", {"params": g.to_dict(), "T": T}, val,
                          "K exp(K / T^(2 r1/(1 - mu - delta nu)))", regime=g.regime,
                          fitted_constants={"K": K}, extra={"exponent": e})


def lr_q_lower_bound(K_prime: float, r1: float, s: float) -> float:
    """``max((2K'/(2K' + 1/2))^{(1-s)/(2 r1)}, 1/2)``."""
    return max((2.0 * K_prime / (2.0 * K_prime + 0.5)) ** ((1.0 - s) / (2.0 * r1)), 0.5)


def lr_step_factor(tau, q: float, K_prime: float, r1: float, s: float):
    """``(1 - q) exp(-2K' tau^{-2 r1/(1-s)})``, increasing in ``tau``."""
    tau = np.asarray(tau, dtype=float)
    return (1.0 - q) * np.exp(-2.0 * K_prime * tau ** (-2.0 * r1 / (1.0 - s)))


@dataclass
class LRSchedule:
    tau: np.ndarray
    T_k: np.ndarray
    q: float
    q_min: float
    log_final_constant: float
    residual: float

    @property
    def total(self) -> float:
        return math.fsum(self.tau)


def lebeau_robbiano_schedule(T: float, q: float, K_prime: float, r1: float, s: float,
                             n_terms: int | None = None) -> LRSchedule:
    """Geometric time schedule ``tau_k = q^k (1-q) T`` and the resulting constant.

    ``T_0 = T`` and ``T_{k+1} = T_k - tau_k``.  Without ``n_terms`` the
    schedule runs until ``T_k <= 1e-16 T`` so that ``sum tau_k`` equals ``T``
    to rounding.  The final constant is
    ``(1/(1-q)) exp(2K' / ((1-q) T)^{2 r1/(1-s)})``, returned as a log.
    """
    if not (T > 0 and K_prime >= 1 and r1 > 0 and 0 < s < 1):
        raise DomainError("need T > 0, K' >= 1, r1 > 0 and 0 < s < 1")
    q_min = lr_q_lower_bound(K_prime, r1, s)
    if not q_min <= q < 1:
        raise DomainError(f"q must lie in [{q_min!r}, 1)")
    if n_terms is None:
        n_terms = max(1, int(math.ceil(math.log(1e-16) / math.log(q))) + 1)
    k = np.arange(n_terms)
    tau = q**k * (1.0 - q) * T
    T_k = T * q ** np.arange(n_terms + 1)  # closed form of T_k - tau_k recursion
    log_c = -math.log(1.0 - q) + 2.0 * K_prime * ((1.0 - q) * T) ** (-2.0 * r1 / (1.0 - s))
    return LRSchedule(tau, T_k, q, q_min, log_c, float(T_k[-1]))


# ---------------------------------------------------------------------------
# Bernstein-type bounds
# ---------------------------------------------------------------------------

def bernstein_theta_index(d: int, s: float, r: float, beta_total: int) -> int:
    """``floor((r + 1 + |beta| + (2-s)(d+1)) / (2s)) + 1``."""
    return int(math.floor((r + 1 + beta_total + (2 - s) * (d + 1)) / (2 * s))) + 1


def bernstein_theta_bound(w: WeightModel, d: int, s: float, r: float, beta_total: int,
                          D: float = 1.0) -> float:
    """``log(D^{1+r+|beta|} M_q^s)`` with ``q`` from :func:`bernstein_theta_index`."""
    if not (d >= 1 and 0 < s <= 1 and r >= 0 and beta_total >= 0 and D > 0):
        raise DomainError("need d >= 1, 0 < s <= 1, r >= 0, |beta| >= 0, D > 0")
    if w.linear_majorant() is None:
        raise DomainError("(H2) is not certified for this weight")
    q = bernstein_theta_index(d, s, r, beta_total)
    log_m = sequence_from_weight(w, q)
    if not math.isfinite(log_m):
        raise DomainError(f"M_{q} is infinite")
    return (1 + r + beta_total) * math.log(D) + s * log_m


def _bracket_operator(d: int, N: int, r: int, beta) -> np.ndarray:
    """Stacked operator whose norm squared equals ``||<x>^r d^beta f||^2`` on ``E_N``."""
    blocks = []
    for a in multi_indices(d, r):
        k = int(sum(a))
        coef = math.factorial(r) / (math.factorial(r - k) * math.prod(math.factorial(int(v)) for v in a))
        op = _operator_matrix(d, N, tuple(int(v) for v in a), beta)
        # pad rows to a common padded tensor size
        blocks.append((math.sqrt(coef), op, k))
    L1 = N + r + sum(beta) + 1
    size = L1**d
    stacked = []
    for c, op, k in blocks:
        full = np.zeros((size, op.shape[1]))
        src_L1 = N + k + sum(beta) + 1
        idx = np.indices((src_L1,) * d).reshape(d, -1)
        dest = np.ravel_multi_index(idx, (L1,) * d)
        full[dest] = op
        stacked.append(c * full)
    return np.vstack(stacked)


def bernstein_theta_sup(w: WeightModel, d: int, N: int, r: int, beta) -> float:
    """Exact ``log sup_{f in E_N} ||<x>^r d^beta f|| / ||f||_{GS_Theta}``."""
    beta = tuple(int(b) for b in beta)
    op = _bracket_operator(d, N, int(r), beta)
    deg = multi_indices(d, N).sum(axis=1).astype(float)
    theta = np.asarray(w(deg), dtype=float)
    return math.log(np.linalg.norm(op * np.exp(-theta)[None, :], 2))


@dataclass
class BernsteinFit:
    D: float
    D_exact: float | None
    per_order: dict


def fit_bernstein_D(w: WeightModel, d: int, s: float, N: int, orders, trials: int = 200,
                    seed: int = 0, exact: bool = False) -> BernsteinFit:
    """Smallest ``D`` making the Bernstein-Theta bound hold on random ``f in E_N``.

    ``orders`` lists ``(r, beta)`` pairs with integer ``r``.  Coefficients
    are Gaussian draws damped by ``e^{-Theta(|alpha|)}`` so that every level
    contributes comparably to the GS norm.  With ``exact`` the supremum over
    all of ``E_N`` is also computed by an SVD.
    """
    rng = np.random.default_rng(seed)
    K = n_coefficients(d, N)
    deg = multi_indices(d, N).sum(axis=1).astype(float)
    draws = rng.standard_normal((trials, K)) * np.exp(-np.asarray(w(deg), dtype=float))
    draws /= np.linalg.norm(draws, axis=1, keepdims=True)
    best = 0.0
    best_exact = 0.0 if exact else None
    per = {}
    for r, beta in orders:
        beta = tuple(int(b) for b in np.atleast_1d(beta))
        if len(beta) != d:
            raise DomainError("beta length must equal d")
        n_tot = 1 + r + sum(beta)
        log_m = bernstein_theta_bound(w, d, s, r, sum(beta), 1.0)
        ratios = []
        for c in draws:
            f = HermiteExpansion(d, N, c)
            _, g = next((b, t) for b, t in derivative_tensors(f, sum(beta), r + sum(beta))
                        if b == beta)
            lhs = 0.5 * math.log(bracket_norms_sq(g, d, int(r))[int(r)])
            ratios.append(lhs - log_gs_theta_norm(f, w))
        D_r = math.exp((max(ratios) - log_m) / n_tot)
        per[(r, beta)] = D_r
        best = max(best, D_r)
        if exact:
            sup = bernstein_theta_sup(w, d, N, int(r), beta)
            best_exact = max(best_exact, math.exp((sup - log_m) / n_tot))
    return BernsteinFit(best, best_exact, per)


# ---------------------------------------------------------------------------
# Interpolation bound
# ---------------------------------------------------------------------------

@dataclass
class InterpolationCheck:
    max_ratio: float
    C: float
    ratios: dict


def interpolation_bound_check(f: HermiteExpansion, A: float, mu: float, nu: float, delta: float,
                              P: int) -> InterpolationCheck:
    """Check ``||<x>^{delta p} d^beta f|| <= C (8^nu e^nu A)^{p+|beta|} (p!)^{delta nu} (|beta|!)^mu``.

    ``C`` is the pair seminorm of ``f`` over ``p <= P + 1`` and
    ``|beta| <= P``, which covers every index the Holder interpolation uses.
    Fractional weights are integrated by Gauss-Hermite quadrature.
    """
    if not (mu > 0 and nu > 0 and mu + nu >= 1 and 0 <= delta <= 1 and A >= 1 and P >= 0):
        raise DomainError("need mu, nu > 0, mu + nu >= 1, 0 <= delta <= 1, A >= 1, P >= 0")
    C = gs_pair_seminorm(f, A, mu, nu, P + 1, P_beta=P)
    base = 8.0**nu * math.e**nu * A
    ratios = {}
    for beta, g in derivative_tensors(f, P, P):
        b = sum(beta)
        for p in range(P + 1):
            lhs = fractional_bracket_norm(g, f.level + b, delta * p)
            rhs = C * base ** (p + b) * math.factorial(p) ** (delta * nu) * math.factorial(b) ** mu
            ratios[(p, beta)] = lhs / rhs if rhs > 0 else 0.0
    return InterpolationCheck(max(ratios.values()), C, ratios)
