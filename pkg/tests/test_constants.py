import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsobs.constants import (GSParams, bernstein_theta_bound, bernstein_theta_index, fit_bernstein_D,
                             general_up_constant, interpolation_bound_check, lebeau_robbiano_schedule,
                             lr_q_lower_bound, lr_step_factor, nsv_constants, observability_cost_bound,
                             observability_exponent, shubin_indices, specific_up_constant)
from gsobs.errors import DomainError, NotQuasiAnalyticError
from gsobs.geometry import DensityModel
from gsobs.hermite import HermiteExpansion
from gsobs.sequences import DoubleSequence, SequenceModel, WeightModel, gamma_Gamma

ONE = SequenceModel.constant()


# -- NSV ----------------------------------------------------------------------

def test_nsv_constant_sequence():
    # d diam e = 3.5 puts the Bang degree of M = 1 at 3
    rep = nsv_constants(ONE, 1.0, 1.0, 1, 3.5 / math.e)
    assert rep.n_star == 3
    assert rep.log_linf == pytest.approx(6 * (math.log(4) + 4), rel=1e-14)
    assert rep.log_l2 == pytest.approx(math.log(2) + 12 * (math.log(8) + 4), rel=1e-14)


def test_nsv_refuses_infinite_bang():
    with pytest.raises(NotQuasiAnalyticError):
        nsv_constants(SequenceModel.power_factorial(1.0, 2.0), 1.0, 1.0, 1, 0.7)


def test_nsv_normalises_m0():
    scaled = SequenceModel.explicit([2.0 + p * 0.0 for p in range(50)])
    rep = nsv_constants(scaled, 1.0, 1.0, 1, 3.5 / math.e)
    assert rep.n_star == 3 and rep.normalization == 2.0 and rep.notes


@pytest.mark.parametrize("s", [0.25, 0.5, 1.0])
def test_gamma_bound_power_factorial(s):
    for n in (1, 5, 50, 300):
        _, G = gamma_Gamma(SequenceModel.power_factorial(1.0, s), n)
        assert G <= 4 * math.exp(4 + 4 * s) * (1 + 1e-12)


def test_nsv_l2_decreasing_in_gamma():
    vals = [nsv_constants(ONE, 1.0, g, 1, 3.5 / math.e).log_l2 for g in (0.2, 0.5, 0.8, 1.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# -- general / specific uncertainty constants -------------------------------

def test_general_up_constant_trivial():
    rep = general_up_constant(DoubleSequence.constant(), DensityModel.constant(1.0), 1.0, 1, 1.0)
    assert rep.log_value == 0.0 and rep.extra["n_star"] == 0 and rep.extra["t0"] == 1.0


def test_general_up_constant_domain():
    with pytest.raises(DomainError):
        general_up_constant(DoubleSequence.constant(), DensityModel.constant(1.0), 1.0, 1, 2.0)


@settings(max_examples=30, deadline=None)
@given(e1=st.floats(1e-6, 1.0), e2=st.floats(1e-6, 1.0), g1=st.floats(0.05, 1.0), g2=st.floats(0.05, 1.0))
def test_general_up_constant_monotone(e1, e2, g1, g2):
    nseq = DoubleSequence.gevrey(1.0, 0.5, 0.5)
    rho = DensityModel.constant(1.0)
    (ea, eb), (ga, gb) = sorted((e1, e2)), sorted((g1, g2))
    assert general_up_constant(nseq, rho, ga, 1, ea, r=2.0).log_value >= \
        general_up_constant(nseq, rho, ga, 1, eb, r=2.0).log_value
    assert general_up_constant(nseq, rho, ga, 1, ea, r=2.0).log_value >= \
        general_up_constant(nseq, rho, gb, 1, ea, r=2.0).log_value


def test_specific_up_examples():
    strict = specific_up_constant(GSParams(0.5, 0.5), 1.0)
    assert strict.regime == "strict" and strict.log_value == pytest.approx(2.0)
    crit = specific_up_constant(GSParams(0.5, 0.5, delta=1.0), 1.0)
    assert crit.regime == "critical" and crit.log_value == pytest.approx(math.e)


def test_regime_tolerance():
    assert GSParams(0.5, 0.5, delta=1.0 - 5e-13).regime == "critical"
    assert GSParams(0.5, 0.5, delta=1.0 - 1e-9).regime == "strict"


@settings(max_examples=30, deadline=None)
@given(e1=st.floats(1e-8, 1.0), e2=st.floats(1e-8, 1.0), crit=st.booleans())
def test_specific_up_monotone_in_eps(e1, e2, crit):
    g = GSParams(0.5, 0.5, delta=1.0 if crit else 0.0)
    lo, hi = sorted((e1, e2))
    if lo < hi:
        assert specific_up_constant(g, lo).log_value > specific_up_constant(g, hi).log_value


# -- Shubin indices ---------------------------------------------------------

def test_shubin_examples():
    si = shubin_indices(1, 1, 1.0)
    assert (si.nu, si.mu, si.delta_star) == (0.5, 0.5, 1.0)
    assert shubin_indices(1, 1, 0.75).delta_star == pytest.approx(0.5)
    si = shubin_indices(1, 2, 1.0)
    assert si.nu == pytest.approx(1 / 3) and si.mu == pytest.approx(2 / 3)
    assert shubin_indices(1, 1, 0.4).delta_star is None


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_shubin_admissible_and_monotone(m, k):
    prev = -1.0
    for s in np.round(np.arange(0.3, 2.0001, 0.05), 10):
        si = shubin_indices(m, k, float(s))
        assert si.mu + si.nu >= 1 - 1e-15
        if si.delta_star is not None:
            assert si.delta_star >= prev - 1e-15
            prev = si.delta_star
    # continuity at the switch point
    s0 = (m + k) / (2 * m * k)
    assert shubin_indices(m, k, s0 * (1 - 1e-12)).delta_star == pytest.approx(1.0, abs=1e-9)


# -- observability bound ----------------------------------------------------

def test_observability_exponent_and_bound():
    assert observability_exponent(GSParams(0.5, 0.5)) == pytest.approx(4.0)
    assert observability_exponent(GSParams(0.5, 0.5, r1=2.0)) == pytest.approx(8.0)
    rep = observability_cost_bound(GSParams(0.5, 0.5), 1e8, K=3.0)
    assert rep.log_value == pytest.approx(math.log(3.0), abs=1e-20 + 1e-12)
    with pytest.raises(DomainError):
        observability_cost_bound(GSParams(0.5, 0.5, delta=1.0), 1.0)


@settings(max_examples=30, deadline=None)
@given(t1=st.floats(0.01, 10), t2=st.floats(0.01, 10))
def test_observability_bound_non_increasing(t1, t2):
    a, b = sorted((t1, t2))
    g = GSParams(0.5, 0.5)
    assert observability_cost_bound(g, a).log_value >= observability_cost_bound(g, b).log_value


# -- Lebeau-Robbiano --------------------------------------------------------

def test_lr_q_lower_bound_example():
    assert lr_q_lower_bound(1.0, 1.0, 0.5) == pytest.approx(0.8 ** 0.25, abs=1e-12)
    assert lr_q_lower_bound(1.0, 0.25, 0.5) == pytest.approx(0.8, abs=1e-12)


def test_lr_schedule_sum():
    sch = lebeau_robbiano_schedule(1.0, 0.9, 1.0, 0.25, 0.5)
    assert abs(math.fsum(sch.tau) - 1.0) <= 1e-12
    assert sch.T_k[0] == 1.0
    assert np.allclose(sch.T_k[1:], sch.T_k[:-1] - sch.tau, rtol=0, atol=1e-15)


def test_lr_schedule_200_terms_residual():
    # a finite head of the geometric series leaves q^200 T behind
    sch = lebeau_robbiano_schedule(1.0, 0.9, 1.0, 0.25, 0.5, n_terms=200)
    assert math.fsum(sch.tau) == pytest.approx(1.0 - 0.9 ** 200, abs=1e-15)


def test_lr_inadmissible_q():
    with pytest.raises(DomainError, match="0.94"):
        lebeau_robbiano_schedule(1.0, 0.9, 1.0, 1.0, 0.5)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(1e-3, 5.0), b=st.floats(1e-3, 5.0))
def test_lr_step_factor_increasing(a, b):
    lo, hi = sorted((a, b))
    assert lr_step_factor(lo, 0.9, 1.0, 0.25, 0.5) <= lr_step_factor(hi, 0.9, 1.0, 0.25, 0.5)


# -- Bernstein for GS_Theta -------------------------------------------------

def test_bernstein_theta_index_and_value():
    assert bernstein_theta_index(1, 1.0, 0, 0) == 2
    assert bernstein_theta_bound(WeightModel.linear(), 1, 1.0, 0, 0) == pytest.approx(2 * math.log(2 / math.e))


def test_bernstein_D_fit_stable_across_seeds():
    orders = [(r, (b,)) for r in range(5) for b in range(5 - r)]
    fits = [fit_bernstein_D(WeightModel.linear(), 1, 1.0, 10, orders, trials=100, seed=s).D for s in range(4)]
    assert all(np.isfinite(fits))
    mid = float(np.mean(fits))
    assert max(abs(f / mid - 1) for f in fits) <= 0.2
    exact = fit_bernstein_D(WeightModel.linear(), 1, 1.0, 10, orders, trials=1, seed=0, exact=True).D_exact
    assert max(fits) <= exact * (1 + 1e-9)


# -- interpolation ----------------------------------------------------------

def test_interpolation_phi0():
    chk = interpolation_bound_check(HermiteExpansion.basis(1, 0, (0,)), 1.0, 0.5, 0.5, 0.5, 4)
    assert chk.max_ratio <= 1 + 1e-9


@pytest.mark.parametrize("delta", [0.0, 0.3, 1.0])
def test_interpolation_random(delta):
    f = HermiteExpansion.random(1, 6, np.random.default_rng(5))
    chk = interpolation_bound_check(f, 1.0, 0.5, 0.5, delta, 3)
    assert chk.max_ratio <= 1 + 1e-9
    if delta == 0.0:
        for b in range(4):
            row = [chk.ratios[(p, (b,))] for p in range(4)]
            assert max(row) == row[0]
