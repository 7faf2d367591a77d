import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gsobs.errors import DomainError
from gsobs.sequences import (INFINITE, NOT_QUASI_ANALYTIC, QUASI_ANALYTIC, UNDECIDED, DoubleSequence,
                             SequenceModel, WeightModel, bang_bound_power_factorial, bang_degree,
                             check_hypotheses, denjoy_carleman_diagnostic, gamma_Gamma, is_log_convex,
                             sequence_from_weight)

FACT = SequenceModel.power_factorial(1.0, 1.0)
ONE = SequenceModel.constant()


# -- sequence_from_weight ---------------------------------------------------

def test_linear_weight_closed_form():
    assert sequence_from_weight(WeightModel.linear(), 3) == pytest.approx(3 * math.log(3 / math.e), abs=1e-12)
    assert sequence_from_weight(WeightModel.linear(), 0) == 0.0


def test_quadratic_weight_stationary_point():
    # t^2/2 peaks at t = sqrt(p): log M_4 = 2 log 4 - 2
    w = WeightModel.power(2.0, 0.5)
    assert sequence_from_weight(w, 4) == pytest.approx(2 * math.log(4) - 2, abs=1e-10)


def test_linear_weight_matches_p_log_p():
    for p in range(1, 61):
        assert abs(sequence_from_weight(WeightModel.linear(), p) - p * (math.log(p) - 1)) <= 1e-10


def test_bounded_weight_is_infinite():
    w = WeightModel.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 1.0])
    assert sequence_from_weight(w, 2) == INFINITE


def test_tabulated_weight_matches_linear():
    nodes = np.linspace(0, 200, 2001)
    w = WeightModel.tabulated(nodes, nodes)
    for p in (1, 5, 20):
        assert sequence_from_weight(w, p) == pytest.approx(p * (math.log(p) - 1), abs=1e-6)


# -- log-convexity ------------------------------------------------------------

def test_log_convex_examples():
    assert is_log_convex(FACT, 100)
    assert is_log_convex(ONE, 100)
    res = is_log_convex(SequenceModel.explicit_values([1, 10, 10, 10]), 3)
    assert not res and res.first_violation == 1


def test_factorial_log_convex_integer_oracle():
    # exact check (p!)^2 <= (p+1)! (p-1)! for p <= 20
    for p in range(1, 20):
        assert math.factorial(p) ** 2 <= math.factorial(p + 1) * math.factorial(p - 1)
    assert is_log_convex(FACT, 20)


# -- Denjoy-Carleman ----------------------------------------------------------

def test_dc_factorial_harmonic():
    rep = denjoy_carleman_diagnostic(FACT, 4)
    assert rep.dc_partial_sums[-1] == pytest.approx(25 / 12, abs=1e-14)
    assert rep.verdict == QUASI_ANALYTIC


def test_dc_harmonic_numbers_to_1e12():
    rep = denjoy_carleman_diagnostic(FACT, 200)
    ref = [float(oracles.harmonic(n)) for n in range(1, 201)]
    assert np.max(np.abs(rep.dc_partial_sums - ref)) <= 1e-12


def test_dc_factorial_squared():
    rep = denjoy_carleman_diagnostic(SequenceModel.power_factorial(1.0, 2.0), 2000)
    assert rep.verdict == NOT_QUASI_ANALYTIC
    assert rep.dc_partial_sums[-1] < math.pi ** 2 / 6


def test_dc_constant():
    rep = denjoy_carleman_diagnostic(ONE, 17)
    assert rep.dc_partial_sums[-1] == 17
    assert rep.verdict == QUASI_ANALYTIC


def test_dc_explicit_table_undecided_or_certified():
    slow = SequenceModel.explicit([math.lgamma(p + 1) for p in range(60)])
    assert denjoy_carleman_diagnostic(slow, 50).verdict == UNDECIDED
    fast = SequenceModel.explicit([3 * math.lgamma(p + 1) for p in range(60)])
    assert denjoy_carleman_diagnostic(fast, 50).verdict == NOT_QUASI_ANALYTIC


def test_dc_rejects_non_log_convex():
    with pytest.raises(DomainError):
        denjoy_carleman_diagnostic(SequenceModel.explicit_values([1, 10, 10, 10]), 3)


# -- Bang degree --------------------------------------------------------------

def test_bang_examples():
    assert bang_degree(ONE, 1.0, 3.5) == 3
    assert bang_degree(FACT, 1.0, 2.0) == 3
    assert bang_degree(SequenceModel.power_factorial(1.0, 2.0), 1.0, 2.0) == INFINITE


def test_bang_domain_errors():
    for t, r in ((0.0, 1.0), (1.5, 1.0), (1.0, 0.0)):
        with pytest.raises(DomainError):
            bang_degree(FACT, t, r)


def test_bang_integer_log_t_is_strict():
    # -log t = 2 exactly: the sum starts at n = 3
    assert bang_degree(ONE, math.exp(-2.0), 1.5) == 3


def test_bang_infinite_threshold_factorial_squared():
    sq = SequenceModel.power_factorial(1.0, 2.0)
    assert bang_degree(sq, 1.0, math.pi ** 2 / 6 - 0.01) == oracles.bang_brute(
        oracles.lgamma_ratio(2), 1.0, math.pi ** 2 / 6 - 0.01)
    assert bang_degree(sq, 1.0, math.pi ** 2 / 6 + 1e-9) == INFINITE


def test_bang_explicit_table_exhausted():
    m = SequenceModel.explicit([0.0] * 5)
    assert bang_degree(m, 1.0, 10.0) == INFINITE


@settings(max_examples=60, deadline=None)
@given(s=st.sampled_from([0.0, 0.5, 1.0]), t1=st.floats(0.01, 1.0), t2=st.floats(0.01, 1.0),
       r1=st.floats(0.1, 4.0), r2=st.floats(0.1, 4.0))
def test_bang_monotone(s, t1, t2, r1, r2):
    m = SequenceModel.power_factorial(1.0, s)
    (ta, tb), (ra, rb) = sorted((t1, t2)), sorted((r1, r2))
    assert bang_degree(m, ta, ra) >= bang_degree(m, tb, ra)
    assert bang_degree(m, ta, ra) <= bang_degree(m, ta, rb)


@settings(max_examples=60, deadline=None)
@given(s=st.sampled_from([0.25, 0.5, 0.75, 1.0]), A=st.floats(1.0, 3.0), t=st.floats(0.01, 1.0),
       r=st.floats(0.1, 2.5))
def test_bang_below_power_factorial_bound(s, A, t, r):
    m = SequenceModel.power_factorial(A, s)
    assert bang_degree(m, t, r) <= bang_bound_power_factorial(s, A, t, r)


def test_bang_bound_examples():
    assert bang_bound_power_factorial(1.0, 1.0, 1.0, 2.0) == pytest.approx(math.e ** 2)
    assert bang_bound_power_factorial(0.5, 1.0, 1.0, 1.0) == pytest.approx(8.0)
    assert bang_bound_power_factorial(1.0, 2.0, math.exp(-1), 1.0) == pytest.approx(2 * math.e ** 2)


# -- gamma / Gamma ----------------------------------------------------------

def test_gamma_examples():
    g, G = gamma_Gamma(FACT, 50)
    assert g == pytest.approx(1.0, abs=1e-12) and G == pytest.approx(4 * math.e ** 8, rel=1e-12)
    g, G = gamma_Gamma(ONE, 10)
    assert g == 0.0 and G == pytest.approx(4 * math.e ** 4)
    g, _ = gamma_Gamma(SequenceModel.power_factorial(1.0, 0.5), 200)
    assert 0.49 < g <= 0.5


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.01, 1.0), p=st.integers(1, 500), A=st.floats(1.0, 5.0))
def test_gamma_bounded_by_s_and_monotone(s, p, A):
    m = SequenceModel.power_factorial(A, s)
    g, _ = gamma_Gamma(m, p)
    assert g <= s + 1e-12
    if p > 1:
        assert gamma_Gamma(m, p - 1)[0] <= g


# -- hypotheses -------------------------------------------------------------

def test_check_hypotheses_linear():
    rep = check_hypotheses(WeightModel.linear(), 1.0, 50)
    assert rep.h1 and rep.h2_status == "certified" and rep.verdict == QUASI_ANALYTIC


def test_check_hypotheses_bertrand():
    rep = check_hypotheses(WeightModel.bertrand(1, 1.0), 1.0, 50)
    assert rep.h1 and rep.h2_status == "certified" and rep.verdict == QUASI_ANALYTIC
    C, L = rep.h2_constants
    # p^p <= C L^p M_p on a range
    m = SequenceModel.from_weight(WeightModel.bertrand(1, 1.0))
    for p in range(1, 40):
        assert p * math.log(p) <= math.log(C) + p * math.log(L) + m.log_value(p) + 1e-9


def test_check_hypotheses_quadratic_weight():
    # t^2 grows faster than t: no linear majorant, and M_p ~ (p/2e)^{p/2}
    # has ratio sums diverging like sqrt(P)
    rep = check_hypotheses(WeightModel.power(2.0), 1.0, 50)
    assert rep.h1 and rep.h2_status == "fails"
    assert rep.verdict == QUASI_ANALYTIC


# -- serialization ----------------------------------------------------------

@pytest.mark.parametrize("m", [FACT, ONE, SequenceModel.power_factorial(2.0, 0.5),
                               SequenceModel.from_weight(WeightModel.bertrand(2, 0.75)),
                               SequenceModel.explicit([0.0, 0.5, 1.5])])
def test_sequence_roundtrip(m):
    assert SequenceModel.from_dict(m.to_dict()) == m


def test_double_sequence():
    n = DoubleSequence.gevrey(2.0, 1.0, 1.0)
    assert n.log_value(2, 3) == pytest.approx(5 * math.log(2) + math.log(2) + math.log(6))
    assert DoubleSequence.from_dict(n.to_dict()) == n
    diag = n.diagonal()
    assert diag.log_value(4) == pytest.approx(n.log_value(4, 4))
