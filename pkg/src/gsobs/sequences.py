"""Log-convex sequences, Bang degrees and the Denjoy-Carleman diagnostic.

Every sequence is handled through ``log M_p``.  Ratios ``M_{n-1}/M_n`` are
``exp`` of first differences and the gamma functional uses ``expm1`` of second
differences, so factorial-sized values never materialise.

Families
--------
power_factorial(A, s)
    ``M_p = A^p (p!)^s``.  ``s = 0`` gives the geometric sequence ``A^p``
    (``A = 1`` is the constant sequence); ``s > 1`` is accepted as a
    non-quasi-analytic comparison family.
weight_induced(w)
    ``M_p = sup_{t >= 0} t^p exp(-Theta(t))`` for a :class:`WeightModel`.
explicit(table)
    A finite table of ``log M_p``, ``p = 0..len-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import DomainError

INFINITE = math.inf
LOG_CONVEX_TOL = 1e-9

# Hard ceiling on the number of ratio terms summed by bang_degree.
MAX_BANG_TERMS = 10**8

QUASI_ANALYTIC = "quasi_analytic"
NOT_QUASI_ANALYTIC = "not_quasi_analytic"
UNDECIDED = "undecided"


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

WEIGHT_KINDS = ("linear", "power", "bertrand", "tabulated")


@dataclass(frozen=True)
class WeightModel:
    """A non-negative continuous weight ``Theta`` on ``[0, inf)``.

    Parameters
    ----------
    kind : {'linear', 'power', 'bertrand', 'tabulated'}
        ``linear``: ``Theta(t) = t``.  ``power``: ``Theta(t) = coef * t**s``.
        ``bertrand``: ``t**s / (g(t) g(g(t)) ... g^k(t))`` with
        ``g(t) = log(e + t)``.  ``tabulated``: piecewise linear through
        ``(nodes, values)``, extended past the last node with the last slope.
    s : float
        Exponent for ``power`` (any ``s > 0``) and ``bertrand``
        (``1/2 <= s <= 1``).
    k : int
        Number of iterated logarithms for ``bertrand``.
    coef : float
        Multiplier for ``power``.
    """

    kind: str
    s: float = 1.0
    k: int = 1
    coef: float = 1.0
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if self.kind == "power" and not (self.s > 0 and self.coef > 0):
            raise DomainError("power weight needs s > 0 and coef > 0")
        if self.kind == "bertrand":
            if int(self.k) != self.k or self.k < 1:
                raise DomainError("bertrand weight needs an integer k >= 1")
            if not 0.5 <= self.s <= 1.0:
                raise DomainError("bertrand weight needs 1/2 <= s <= 1")
        if self.kind == "tabulated":
            nodes = np.asarray(self.nodes, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if nodes.ndim != 1 or nodes.size < 2 or nodes.size != values.size:
                raise DomainError("tabulated weight needs >= 2 matching nodes/values")
            if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
                raise DomainError("tabulated nodes must start at 0 and increase")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise DomainError("tabulated values must be finite and >= 0")
            if values[-1] < values[-2]:
                raise DomainError("tabulated weight must not decrease past its last node")
            object.__setattr__(self, "nodes", tuple(float(v) for v in nodes))
            object.__setattr__(self, "values", tuple(float(v) for v in values))

    # constructors -------------------------------------------------------
    @classmethod
    def linear(cls) -> WeightModel:
        return cls("linear")

    @classmethod
    def power(cls, s: float, coef: float = 1.0) -> WeightModel:
        return cls("power", s=float(s), coef=float(coef))

    @classmethod
    def bertrand(cls, k: int, s: float) -> WeightModel:
        return cls("bertrand", s=float(s), k=int(k))

    @classmethod
    def tabulated(cls, nodes, values) -> WeightModel:
        return cls("tabulated", nodes=tuple(nodes), values=tuple(values))

    # evaluation ---------------------------------------------------------
    @property
    def final_slope(self) -> float:
        if self.kind != "tabulated":
            raise AttributeError("final_slope only exists for tabulated weights")
        n, v = self.nodes, self.values
        return (v[-1] - v[-2]) / (n[-1] - n[-2])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("weights are defined on t >= 0 only")
        if self.kind == "linear":
            out = t.copy()
        elif self.kind == "power":
            out = self.coef * t**self.s
        elif self.kind == "bertrand":
            denom = np.ones_like(t)
            g = t
            for _ in range(self.k):
                g = np.log(np.e + g)
                denom = denom * g
            out = t**self.s / denom
        else:
            nodes = np.asarray(self.nodes)
            values = np.asarray(self.values)
            out = np.interp(t, nodes, values)
            beyond = t > nodes[-1]
            out = np.where(beyond, values[-1] + self.final_slope * (t - nodes[-1]), out)
        return out if out.ndim else float(out)

    def linear_majorant(self) -> tuple[float, float] | None:
        """Return ``(a, b)`` with ``Theta(t) <= a t + b`` on ``[0, inf)``, if one exists."""
        if self.kind == "linear":
            return 1.0, 0.0
        if self.kind in ("power", "bertrand"):
            # bertrand(k, s) <= t**s because every iterated log is >= 1
            coef = self.coef if self.kind == "power" else 1.0
            s = self.s
            if s > 1:
                return None
            if s == 1:
                return coef, 0.0
            t_star = (coef * s) ** (1.0 / (1.0 - s))
            return 1.0, max(0.0, coef * t_star**s - t_star)
        a = max(1.0, self.final_slope)
        b = max(0.0, max(v - a * n for n, v in zip(self.nodes, self.values)))
        return a, b

    def to_dict(self) -> dict:
        if self.kind == "linear":
            params = {}
        elif self.kind == "power":
            params = {"s": self.s, "coef": self.coef}
        elif self.kind == "bertrand":
            params = {"k": self.k, "s": self.s}
        else:
            params = {"nodes": list(self.nodes), "values": list(self.values)}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, data: dict) -> WeightModel:
        kind = data.get("kind")
        params = data.get("params", data)
        if kind == "linear":
            return cls.linear()
        if kind == "power":
            return cls.power(params["s"], params.get("coef", 1.0))
        if kind == "bertrand":
            return cls.bertrand(params["k"], params["s"])
        if kind == "tabulated":
            return cls.tabulated(params["nodes"], params["values"])
        raise DomainError(f"unknown weight kind {kind!r}")


def _tabulated_log_sup(w: WeightModel, p: int) -> float:
    nodes = np.asarray(w.nodes)
    values = np.asarray(w.values)
    if p == 0:
        return -float(values.min())
    if w.final_slope <= 0:
        return INFINITE
    # p log t - (a + b t) is concave on each segment: the max is at an end
    # point or at the stationary point t = p / b.
    candidates = [float(p * np.log(nodes[i]) - values[i]) for i in range(1, nodes.size)]
    slopes = np.diff(values) / np.diff(nodes)
    for i, b in enumerate(slopes):
        if b <= 0:
            continue
        t = p / b
        if nodes[i] < t < nodes[i + 1]:
            candidates.append(float(p * np.log(t) - np.interp(t, nodes, values)))
    b = w.final_slope
    t = max(p / b, nodes[-1])
    candidates.append(float(p * np.log(t) - w(t)))
    return max(candidates)


@lru_cache(maxsize=65536)
def _log_sup_cached(w: WeightModel, p: int) -> float:
    if w.kind == "tabulated":
        return _tabulated_log_sup(w, p)
    if p == 0:
        return -float(w(0.0))

    def objective(u):
        return p * u - float(w(math.exp(u)))

    # Coarse scan in u = log t to bracket the unimodal maximum.
    u0 = math.log(p)
    step = 0.5
    us = [u0 + step * j for j in range(-60, 61)]
    vals = [objective(u) for u in us]
    while vals[-1] >= vals[-2]:
        if us[-1] > 700.0:
            return INFINITE
        us.append(us[-1] + step)
        vals.append(objective(us[-1]))
    j = int(np.argmax(vals))
    if j == 0:
        raise DomainError("could not bracket the maximiser of p log t - Theta(t)")
    u_best = optimize.golden(lambda u: -objective(u), brack=(us[j - 1], us[j], us[j + 1]),
                             tol=1e-12)
    return max(objective(u_best), vals[j])


def sequence_from_weight(w: WeightModel, p: int) -> float:
    """Return ``log M_p`` with ``M_p = sup_{t >= 0} t^p exp(-Theta(t))``.

    The supremum is located by scanning ``u = log t`` on a coarse grid and
    refining with golden-section search.  Tabulated weights are solved
    exactly segment by segment.  Returns ``math.inf`` when the supremum is
    unbounded, which violates (H1).
    """
    if int(p) != p or p < 0:
        raise DomainError("p must be a non-negative integer")
    return _log_sup_cached(w, int(p))


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------

FAMILIES = ("power_factorial", "weight_induced", "explicit")


@dataclass(frozen=True)
class SequenceModel:
    """A positive sequence ``(M_p)`` stored through ``log M_p``."""

    family: str
    A: float = 1.0
    s: float = 1.0
    weight: WeightModel | None = None
    table: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown sequence family {self.family!r}")
        if self.family == "power_factorial" and not (self.A >= 1 and self.s >= 0):
            raise DomainError("power_factorial needs A >= 1 and s >= 0")
        if self.family == "weight_induced" and not isinstance(self.weight, WeightModel):
            raise DomainError("weight_induced needs a WeightModel")
        if self.family == "explicit":
            table = np.asarray(self.table, dtype=float)
            if table.ndim != 1 or table.size == 0 or not np.all(np.isfinite(table)):
                raise DomainError("explicit table must be a non-empty finite list of log values")
            object.__setattr__(self, "table", tuple(float(v) for v in table))

    # constructors -------------------------------------------------------
    @classmethod
    def power_factorial(cls, A: float = 1.0, s: float = 1.0) -> SequenceModel:
        return cls("power_factorial", A=float(A), s=float(s))

    @classmethod
    def constant(cls) -> SequenceModel:
        return cls.power_factorial(1.0, 0.0)

    @classmethod
    def from_weight(cls, w: WeightModel) -> SequenceModel:
        return cls("weight_induced", weight=w)

    @classmethod
    def explicit(cls, log_values) -> SequenceModel:
        return cls("explicit", table=tuple(log_values))

    @classmethod
    def explicit_values(cls, values) -> SequenceModel:
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0):
            raise DomainError("sequence values must be strictly positive")
        return cls.explicit(np.log(values))

    # access ---------------------------------------------------------------
    @property
    def max_index(self) -> int | None:
        """Largest defined index, ``None`` for closed forms."""
        return len(self.table) - 1 if self.family == "explicit" else None

    def _check_index(self, p: int):
        if p < 0:
            raise DomainError("sequence indices start at 0")
        if self.max_index is not None and p > self.max_index:
            raise DomainError(f"index {p} exceeds table length {self.max_index + 1}")

    def log_value(self, p: int) -> float:
        self._check_index(p)
        if self.family == "power_factorial":
            return p * math.log(self.A) + self.s * math.lgamma(p + 1)
        if self.family == "weight_induced":
            return sequence_from_weight(self.weight, p)
        return self.table[p]

    def log_values(self, upto: int) -> np.ndarray:
        """``log M_p`` for ``p = 0..upto``."""
        self._check_index(upto)
        p = np.arange(upto + 1)
        if self.family == "power_factorial":
            return p * math.log(self.A) + self.s * special.gammaln(p + 1.0)
        if self.family == "explicit":
            return np.asarray(self.table[: upto + 1])
        return np.array([self.log_value(int(q)) for q in p])

    def log_ratios(self, lo: int, hi: int) -> np.ndarray:
        """``log(M_{n-1}/M_n)`` for ``n = lo..hi`` (``lo >= 1``)."""
        if lo < 1:
            raise DomainError("ratios start at n = 1")
        self._check_index(hi)
        n = np.arange(lo, hi + 1, dtype=float)
        if self.family == "power_factorial":
            return -math.log(self.A) - self.s * np.log(n)
        if self.family == "explicit":
            t = np.asarray(self.table)
            return t[lo - 1 : hi] - t[lo : hi + 1]
        vals = np.array([self.log_value(q) for q in range(lo - 1, hi + 1)])
        if not np.all(np.isfinite(vals)):
            raise DomainError("weight-induced sequence is infinite (H1 fails)")
        return vals[:-1] - vals[1:]

    def second_differences(self, upto: int) -> np.ndarray:
        """``log(M_{j+1} M_{j-1} / M_j^2)`` for ``j = 1..upto``."""
        self._check_index(upto + 1)
        j = np.arange(1, upto + 1, dtype=float)
        if self.family == "power_factorial":
            return self.s * np.log1p(1.0 / j)
        lv = self.log_values(upto + 1)
        return lv[2:] + lv[:-2] - 2.0 * lv[1:-1]

    # certificates ---------------------------------------------------------
    def divergence_exponent(self) -> float | None:
        """Exponent ``a`` with ``M_{n-1}/M_n`` comparable to ``n^{-a}``, when known analytically."""
        if self.family == "power_factorial":
            return self.s
        if self.family == "weight_induced":
            w = self.weight
            if w.kind == "linear":
                return 1.0
            if w.kind == "power":
                return 1.0 / w.s
        return None

    def to_dict(self) -> dict:
        if self.family == "power_factorial":
            params = {"A": self.A, "s": self.s}
        elif self.family == "weight_induced":
            params = {"weight": self.weight.to_dict()}
        else:
            params = {"log_values": list(self.table)}
        return {"family": self.family, "params": params}

    @classmethod
    def from_dict(cls, data: dict) -> SequenceModel:
        family = data.get("family")
        params = data.get("params", data)
        if family == "constant":
            return cls.constant()
        if family == "factorial":
            return cls.power_factorial(1.0, params.get("s", 1.0))
        if family == "power_factorial":
            return cls.power_factorial(params.get("A", 1.0), params.get("s", 1.0))
        if family == "weight_induced":
            return cls.from_weight(WeightModel.from_dict(params["weight"]))
        if family == "explicit":
            if "log_values" in params:
                return cls.explicit(params["log_values"])
            return cls.explicit_values(params["values"])
        raise DomainError(f"unknown sequence family {family!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogConvexity:
    ok: bool
    first_violation: int | None = None

    def __bool__(self):
        return self.ok


def is_log_convex(m: SequenceModel, up_to: int) -> LogConvexity:
    """Check ``2 log M_p <= log M_{p+1} + log M_{p-1}`` for ``1 <= p <= up_to - 1``."""
    if m.max_index is not None and up_to > m.max_index:
        raise DomainError("up_to exceeds the table length")
    if up_to < 2:
        return LogConvexity(True)
    d2 = m.second_differences(up_to - 1)
    bad = np.nonzero(d2 < -LOG_CONVEX_TOL)[0]
    if bad.size:
        return LogConvexity(False, int(bad[0]) + 1)
    return LogConvexity(True)


@dataclass
class QAReport:
    """Outcome of the Denjoy-Carleman diagnostic and the (H1)-(H3) checks.

    ``dc_partial_sums[P-1]`` holds ``sum_{p=1}^{P} (M_{p-1}/M_p)^exponent``.
    """

    is_log_convex: bool
    dc_partial_sums: np.ndarray
    verdict: str
    exponent: float = 1.0
    undecided_at: int | None = None
    certificate: dict | None = None
    first_violation: int | None = None
    h1: bool | None = None
    h2_status: str | None = None
    h2_constants: tuple[float, float] | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "is_log_convex": self.is_log_convex,
            "first_violation": self.first_violation,
            "dc_partial_sums": [float(v) for v in self.dc_partial_sums],
            "verdict": self.verdict,
            "exponent": self.exponent,
            "undecided_at": self.undecided_at,
            "certificate": self.certificate,
            "notes": list(self.notes),
        }
        if self.h1 is not None:
            out["h1"] = self.h1
            out["h2_status"] = self.h2_status
            out["h2_constants"] = None if self.h2_constants is None else list(self.h2_constants)
        return out


def _explicit_tail_certificate(ratios: np.ndarray, start: int) -> dict | None:
    """Fit ``ratio_n <= C n^{-a}`` on the tail half; certify summability if ``a > 1``."""
    n = np.arange(start, start + ratios.size, dtype=float)
    half = ratios.size // 2
    if ratios.size - half < 16:
        return None
    tail_n, tail_r = n[half:], ratios[half:]
    if np.any(tail_r <= 0):
        return None
    slope, _ = np.polyfit(np.log(tail_n), np.log(tail_r), 1)
    a = -float(slope)
    if a <= 1.05:
        return None
    c = float(np.max(tail_r * tail_n**a))
    return {"kind": "comparison", "constant": c, "exponent": a, "from_index": int(tail_n[0])}


def denjoy_carleman_diagnostic(m: SequenceModel, P: int, exponent: float = 1.0) -> QAReport:
    """Partial sums of ``sum (M_{p-1}/M_p)^exponent`` and a quasi-analyticity verdict.

    A definite verdict requires an analytic certificate: a closed-form family
    with a known ratio exponent, a Bertrand weight, or (for explicit tables) a
    comparison ``ratio <= C n^{-a}`` with exhibited ``a > 1``.  Otherwise the
    verdict is ``undecided`` at ``P``.
    """
    if P < 1:
        raise DomainError("P must be >= 1")
    if m.max_index is not None:
        P = min(P, m.max_index)
    lc = is_log_convex(m, min(P + 1, m.max_index) if m.max_index is not None else P + 1)
    if not lc:
        raise DomainError(
            f"sequence is not log-convex (first violation at p={lc.first_violation}); "
            "the Denjoy-Carleman diagnostic is undefined")
    ratios = np.exp(exponent * m.log_ratios(1, P))
    sums = np.cumsum(ratios)
    report = QAReport(True, sums, UNDECIDED, exponent=exponent, undecided_at=P)

    a = m.divergence_exponent()
    if a is not None:
        eff = a * exponent
        report.certificate = {"kind": "closed_form", "ratio_exponent": eff}
        report.verdict = QUASI_ANALYTIC if eff <= 1.0 else NOT_QUASI_ANALYTIC
        report.undecided_at = None
    elif m.family == "weight_induced" and m.weight.kind == "bertrand":
        w = m.weight
        if exponent <= w.s:
            report.certificate = {"kind": "bertrand", "k": w.k, "s": w.s}
            report.verdict = QUASI_ANALYTIC
        else:
            # Theta_{k,s} <= t^s, so M >= M^{t^s} whose ratios^exponent are summable.
            report.certificate = {"kind": "bertrand_comparison", "ratio_exponent": exponent / w.s}
            report.verdict = NOT_QUASI_ANALYTIC
        report.undecided_at = None
    elif m.family == "explicit":
        cert = _explicit_tail_certificate(ratios, 1)
        if cert is not None:
            report.certificate = cert
            report.verdict = NOT_QUASI_ANALYTIC
            report.undecided_at = None
    return report


def _snap_start_index(t: float) -> int:
    """Smallest integer ``n`` with ``n > -log t``."""
    x = -math.log(t)
    k = round(x)
    if abs(x - k) <= 1e-12 * max(1.0, abs(x)):
        x = float(k)
    return int(math.floor(x)) + 1


def bang_degree(m: SequenceModel, t: float, r: float) -> float:
    """Return ``sup{N : sum_{-log t < n <= N} M_{n-1}/M_n < r}``.

    The result is an integer-valued float, or :data:`INFINITE` when the
    tail sum provably stays below ``r`` (closed-form convergent families) or
    an explicit table runs out before reaching ``r``.
    """
    if not (0 < t <= 1):
        raise DomainError("t must lie in (0, 1]")
    if not r > 0:
        raise DomainError("r must be positive")
    start = _snap_start_index(t)
    total = 0.0
    chunk = 256
    summed = 0
    convergent_tail = m.family == "power_factorial" and m.s > 1
    while True:
        hi = start + chunk - 1
        if m.max_index is not None:
            hi = min(hi, m.max_index)
            if hi < start:
                return INFINITE
        if convergent_tail and total + special.zeta(m.s, start) / m.A <= r:
            return INFINITE
        cs = total + np.cumsum(np.exp(m.log_ratios(start, hi)))
        hit = np.nonzero(cs >= r)[0]
        if hit.size:
            return float(start + int(hit[0]) - 1)
        total = float(cs[-1])
        summed += hi - start + 1
        if summed > MAX_BANG_TERMS:
            raise DomainError("Bang degree exceeds the summation limit; the value is astronomically large")
        start = hi + 1
        chunk = min(chunk * 2, 1 << 22)


def gamma_Gamma(m: SequenceModel, p: int) -> tuple[float, float]:
    """Return ``(gamma_M(p), Gamma_M(p))``.

    ``gamma_M(p) = max_{1<=j<=p} j (M_{j+1} M_{j-1} / M_j^2 - 1)`` and
    ``Gamma_M(p) = 4 exp(4 + 4 gamma_M(p))``.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    j = np.arange(1, p + 1, dtype=float)
    g = float(np.max(j * np.expm1(m.second_differences(p))))
    return g, 4.0 * math.exp(4.0 + 4.0 * g)


def log_Gamma(m: SequenceModel, p: int) -> float:
    """``log Gamma_M(p)`` without overflow."""
    g, _ = gamma_Gamma(m, p) if p >= 1 else (0.0, None)
    return math.log(4.0) + 4.0 + 4.0 * g


def bang_bound_power_factorial(s: float, A: float, t: float, r: float) -> float:
    """Upper bound on the Bang degree of ``(A^p (p!)^s)``.

    ``2^{1/(1-s)} (1 - log t + (A r)^{1/(1-s)})`` for ``s < 1`` and
    ``(1 - log t) e^{A r}`` for ``s = 1``.
    """
    if not (0 <= s <= 1 and A >= 1 and 0 < t <= 1 and r > 0):
        raise DomainError("need 0 <= s <= 1, A >= 1, 0 < t <= 1, r > 0")
    if s == 1:
        return (1.0 - math.log(t)) * math.exp(A * r)
    e = 1.0 / (1.0 - s)
    return 2.0**e * (1.0 - math.log(t) + (A * r) ** e)


def check_hypotheses(w: WeightModel, s: float, P: int) -> QAReport:
    """Diagnose (H1), (H2) and (H3)_s for the sequence induced by ``w``.

    (H1) is checked by finiteness of ``log M_p`` for ``p <= P``.  (H2) is
    certified when ``Theta(t) <= a t + b``: then ``M_p >= e^{-b} (p/(a e))^p``
    and ``(C, L) = (e^b, max(1, a e))``.  (H3)_s runs the Denjoy-Carleman
    diagnostic on ``(M_p^s)``.
    """
    if not 0 < s <= 1:
        raise DomainError("s must lie in (0, 1]")
    m = SequenceModel.from_weight(w)
    logs = m.log_values(P + 1)
    h1 = bool(np.all(np.isfinite(logs)))
    if not h1:
        return QAReport(False, np.zeros(0), UNDECIDED, exponent=s, undecided_at=P, h1=False,
                        h2_status="undecided", notes=["(H1) fails: supremum is infinite"])
    report = denjoy_carleman_diagnostic(m, P, exponent=s)
    report.h1 = True
    maj = w.linear_majorant()
    if maj is not None:
        a, b = maj
        C, L = math.exp(b), max(1.0, a * math.e)
        p = np.arange(P + 1, dtype=float)
        lhs = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        if np.all(lhs <= math.log(C) + p * math.log(L) + logs[: P + 1] + 1e-9):
            report.h2_status = "certified"
            report.h2_constants = (C, L)
        else:
            report.h2_status = "undecided"
            report.notes.append("linear majorant found but numerical (H2) check failed")
    elif w.kind == "power" and w.s > 1:
        # M_p = (p/(c s e))^{p/s}, so p^p / M_p grows faster than any L^p.
        report.h2_status = "fails"
        report.notes.append("(H2) fails: Theta grows faster than linearly")
    else:
        report.h2_status = "undecided"
    return report


# ---------------------------------------------------------------------------
# Double-index sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoubleSequence:
    """A positive double sequence ``(N_{p,q})`` stored through its logarithm.

    ``gevrey``: ``N_{p,q} = A^{p+q} (p!)^nu (q!)^mu``.
    ``table``: an explicit square table of ``log N_{p,q}``.
    """

    kind: str = "gevrey"
    A: float = 1.0
    nu: float = 1.0
    mu: float = 1.0
    table: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind == "gevrey":
            if not (self.A > 0 and self.nu >= 0 and self.mu >= 0):
                raise DomainError("gevrey double sequence needs A > 0 and nu, mu >= 0")
        elif self.kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[0] != t.shape[1] or not np.all(np.isfinite(t)):
                raise DomainError("double-sequence table must be a finite square array of logs")
            object.__setattr__(self, "table", tuple(tuple(float(v) for v in row) for row in t))
        else:
            raise DomainError(f"unknown double-sequence kind {self.kind!r}")

    @classmethod
    def gevrey(cls, A: float, nu: float, mu: float) -> DoubleSequence:
        return cls("gevrey", A=float(A), nu=float(nu), mu=float(mu))

    @classmethod
    def constant(cls) -> DoubleSequence:
        return cls.gevrey(1.0, 0.0, 0.0)

    def log_value(self, p: int, q: int) -> float:
        if p < 0 or q < 0:
            raise DomainError("indices must be >= 0")
        if self.kind == "gevrey":
            return ((p + q) * math.log(self.A) + self.nu * math.lgamma(p + 1)
                    + self.mu * math.lgamma(q + 1))
        if max(p, q) >= len(self.table):
            raise DomainError("index beyond the double-sequence table")
        return self.table[p][q]

    def diagonal(self) -> SequenceModel:
        """The diagonal ``(N_{p,p})`` as a :class:`SequenceModel`."""
        if self.kind == "gevrey":
            return SequenceModel.power_factorial(self.A**2, self.nu + self.mu) if self.A >= 1 \
                else SequenceModel.explicit([self.log_value(p, p) for p in range(2048)])
        return SequenceModel.explicit([self.table[p][p] for p in range(len(self.table))])

    def to_dict(self) -> dict:
        if self.kind == "gevrey":
            return {"kind": "gevrey", "params": {"A": self.A, "nu": self.nu, "mu": self.mu}}
        return {"kind": "table", "params": {"log_values": [list(r) for r in self.table]}}

    @classmethod
    def from_dict(cls, data: dict) -> DoubleSequence:
        kind = data.get("kind", "gevrey")
        params = data.get("params", data)
        if kind == "constant":
            return cls.constant()
        if kind == "gevrey":
            return cls.gevrey(params.get("A", 1.0), params.get("nu", 1.0), params.get("mu", 1.0))
        if kind == "table":
            return cls("table", table=tuple(tuple(r) for r in params["log_values"]))
        raise DomainError(f"unknown double-sequence kind {kind!r}")
