import math
import warnings

import numpy as np
import pytest

from carnot import calculus as calc, heat, inequalities as ineq, lsh
from carnot.errors import ParameterError
from carnot.reports import MODE_EXPLORATORY, MODE_VERIFIED


def exp_ax(a):
    return calc.Exp(calc.Prod(calc.Const(a), calc.x(1, 1)))


def gaussian_closed_forms(a):
    """s = 2 (standard Gaussian) moments of f = e^{ax}, the standing oracle."""
    m = math.exp(a * a / 2.0)
    return {"l1": m, "entropy": a * a * m, "dirichlet": a * a * m, "euler": a * a * m}


# -- estimate -------------------------------------------------------------------


def test_constant_field_estimates(r1_batch_s2):
    ent = ineq.estimate("entropy", calc.Const(1.0), r1_batch_s2)
    assert ent.value == 0.0 and ent.stderr == 0.0
    l2 = ineq.estimate("lp", calc.Const(3.0), r1_batch_s2, p=2.0)
    assert np.isclose(l2.value, 3.0) and l2.stderr < 1e-12
    assert ineq.estimate("l1", calc.Const(3.0), r1_batch_s2).value == 3.0


def test_gaussian_oracle_suite(r1, r1_batch_s2_tilt2):
    # tilted at the integrand scale: every closed form within 4 stderr
    batch_a1 = heat.sample(r1, 2.0, 200_000, 8, seed=107, tilt=np.array([1.0]))
    for a, batch in [(1.0, batch_a1), (2.0, r1_batch_s2_tilt2)]:
        f = exp_ax(a)
        for fid, want in gaussian_closed_forms(a).items():
            est = ineq.estimate(fid, f, batch)
            assert abs(est.value - want) < 4 * est.stderr + 1e-12, (a, fid)
            assert est.stderr < 0.01 * abs(want) + 1e-12
    lp = ineq.estimate("lp", exp_ax(2.0), r1_batch_s2_tilt2, p=2.0)
    assert abs(lp.value - math.exp(4.0)) < 4 * lp.stderr


def test_estimate_validates_inputs(r1_batch_s2):
    with pytest.raises(ParameterError):
        ineq.estimate("lp", calc.Const(1.0), r1_batch_s2)
    with pytest.raises(ParameterError):
        ineq.estimate("santa", calc.Const(1.0), r1_batch_s2)
    with pytest.raises(ParameterError, match="sample"):
        ineq.estimate("entropy", calc.x(1, 1), r1_batch_s2)


# -- LSI / sLSI -------------------------------------------------------------------


def test_gaussian_lsi_slsi_equality(r1_batch_s2_tilt2):
    # c = 1/2, beta = 0 is the equality case for f = e^{ax}
    f = exp_ax(2.0)
    r_lsi = ineq.check_lsi(f, r1_batch_s2_tilt2, 0.5, 0.0)
    assert r_lsi.verdict == "holds"
    assert abs(r_lsi.margin) < 4 * r_lsi.stderr + 1e-12
    r_slsi = ineq.check_slsi(f, r1_batch_s2_tilt2, 0.5, 0.0, lsh_status="lsh")
    assert r_slsi.verdict == "holds"
    assert abs(r_slsi.margin) < 4 * r_slsi.stderr + 1e-12
    assert r_lsi.mode == MODE_VERIFIED


def test_gaussian_lsi_negative_control(r1_batch_s2_tilt2):
    # c = 0.1 fails: closed-form margin (0.1 - 0.5) * 4 e^2
    rep = ineq.check_lsi(exp_ax(2.0), r1_batch_s2_tilt2, 0.1, 0.0)
    assert rep.verdict == "violated"
    want = (0.1 - 0.5) * 4.0 * math.exp(2.0)
    assert abs(rep.margin - want) < 4 * rep.stderr


def test_constant_field_lsi_holds(r1_batch_s2):
    rep = ineq.check_lsi(calc.Const(2.0), r1_batch_s2, 0.5, 0.0)
    assert rep.verdict == "holds"
    # entropy functional of a constant: f log f - |f|_1 log |f|_1 = 0
    assert abs(rep.margin) < 1e-12


def test_lsi_l2_form_equals_l1_on_square(r1_batch_s2_tilt2):
    # (LSI-L2) for f is (LSI-L1) for f^2 up to an exact factor of 2
    f = exp_ax(1.0)
    f_sq = calc.Pow(f, 2.0)
    r2 = ineq.check_lsi(f, r1_batch_s2_tilt2, 0.5, 0.3, form="L2")
    r1_ = ineq.check_lsi(f_sq, r1_batch_s2_tilt2, 0.5, 0.3, form="L1")
    assert np.isclose(r1_.margin, 2.0 * r2.margin, rtol=1e-9, atol=1e-12)
    assert np.isclose(r1_.stderr, 2.0 * r2.stderr, rtol=1e-9, atol=1e-12)


def test_slsi_positive_margin_on_h3(h3_batch_s1):
    # frozen closed form: margin = (s/4) e^{s/4} at c = 1, beta = 0, s = 1
    rep = ineq.check_slsi(calc.Exp(calc.x(1, 1)), h3_batch_s1, 1.0, 0.0,
                          lsh_status="lsh")
    assert rep.verdict == "holds"
    want = 0.25 * math.exp(0.25)
    assert abs(rep.margin - want) < 4 * rep.stderr
    assert rep.margin > 4 * rep.stderr  # strictly positive margin


def test_slsi_warns_on_non_lsh(h3_batch_s1, h3):
    bad = lsh.library_field(h3, "gauss-neg")
    with pytest.warns(UserWarning, match="log-subharmonic"):
        ineq.check_slsi(bad.field, h3_batch_s1, 1.0, 0.0)
    with pytest.warns(UserWarning):
        ineq.check_slsi(bad.field, h3_batch_s1, 1.0, 0.0, lsh_status="not-lsh")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ineq.check_slsi(calc.Exp(calc.x(1, 1)), h3_batch_s1, 1.0, 0.0,
                        lsh_status="lsh")


def test_slsi_verdicts_scale_invariant_in_s(h3):
    # with the dilation-matched family f_s = exp(x1) o delta_{1/sqrt(s)},
    # the sLSI margin is the same constant for every s
    margins = []
    for i, s in enumerate([0.5, 1.0, 2.0]):
        batch = heat.sample(h3, s, 40_000, 64, seed=300 + i)
        f = calc.compose_dilation(calc.Exp(calc.x(1, 1)), 1.0 / math.sqrt(s))
        rep = ineq.check_slsi(f, batch, 1.0, 0.0, lsh_status="lsh")
        margins.append((rep.margin, rep.stderr))
        assert rep.verdict == "holds"
    want = 0.25 * math.exp(0.25)
    for m, se in margins:
        assert abs(m - want) < 4 * se


# -- time-space and the chain ------------------------------------------------------


def test_time_space_x1_squared(h3):
    for s, seed in [(1.0, 61), (2.0, 62)]:
        batch = heat.sample(h3, s, 50_000, 128, seed=seed)
        rep = ineq.check_time_space(calc.x(1, 1) ** 2, batch)
        assert rep.verdict == "holds" and rep.two_sided
        assert abs(rep.lhs - s) / s < 0.015
        assert abs(rep.rhs - s) / s < 0.015


def test_time_space_constant_and_exp(h3_batch_s1):
    rep = ineq.check_time_space(calc.Const(5.0), h3_batch_s1)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.verdict == "holds"
    rep = ineq.check_time_space(calc.Exp(calc.x(1, 1)), h3_batch_s1)
    want = 0.5 * math.exp(0.25)  # (s/2) e^{s/4} at s = 1
    assert abs(rep.lhs - want) < 4 * rep.stderr
    assert rep.verdict == "holds"


def test_gaussian_time_space(r1_batch_s2_tilt2):
    rep = ineq.check_time_space(exp_ax(2.0), r1_batch_s2_tilt2)
    assert rep.verdict == "holds"
    assert abs(rep.lhs - 4.0 * math.exp(2.0)) < 4 * rep.stderr


def test_chain_check(h3_batch_s1, h3):
    rep = ineq.check_lsi_implies_slsi_chain(calc.Exp(calc.x(1, 1)), h3_batch_s1,
                                            lsh_status="lsh")
    assert rep.verdict == "holds"
    # equality case: Delta f = |grad f|^2 / f = f pointwise
    assert np.isclose(rep.lhs, rep.rhs, rtol=1e-9)
    assert rep.details["time_space"]["verdict"] == "holds"

    bad = lsh.library_field(h3, "gauss-neg")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        neg = ineq.check_lsi_implies_slsi_chain(bad.field, h3_batch_s1)
    assert neg.verdict == "violated"  # Delta f - |grad f|^2/f = -2f < 0


# -- sHC ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def r1_batch_tilt3(r1):
    # midpoint tilt keeps both e^{2x} and e^{4x} integrands light-tailed
    return heat.sample(r1, 2.0, 200_000, 8, seed=88, tilt=np.array([3.0]))


def test_shc_gaussian_equality_at_janson_time(r1_batch_tilt3):
    f = exp_ax(2.0)
    t_j = ineq.janson_time(1, 4, 0.5)
    assert np.isclose(t_j, 0.5 * math.log(4.0))
    rep = ineq.check_shc(f, r1_batch_tilt3, 1.0, 4.0, t_j, 0.5, 0.0,
                         lsh_status="lsh")
    assert rep.verdict == "holds"
    assert abs(rep.lhs / rep.rhs - 1.0) < 3 * rep.stderr / rep.rhs
    assert rep.stderr / rep.rhs < 0.02


def test_shc_below_janson_time_violated(r1_batch_tilt3):
    f = exp_ax(2.0)
    t_j = ineq.janson_time(1, 4, 0.5)
    rep = ineq.check_shc(f, r1_batch_tilt3, 1.0, 4.0, 0.9 * t_j, 0.5, 0.0,
                         exploratory=True, lsh_status="lsh")
    assert rep.verdict == "violated"
    assert rep.margin < -4 * rep.stderr
    # closed form: ratio exceeds 1 by exp(a^2(2^{1-1.8} - 1/2)) - 1
    want_ratio = math.exp(4.0 * (2.0 * 2.0 ** -1.8 - 0.5))
    assert abs(rep.lhs / rep.rhs - want_ratio) < 0.02


def test_shc_refuses_early_time_without_flag(r1_batch_tilt3):
    with pytest.raises(ParameterError, match="Janson"):
        ineq.check_shc(exp_ax(2.0), r1_batch_tilt3, 1.0, 4.0, 0.1, 0.5, 0.0,
                       lsh_status="lsh")
    with pytest.raises(ParameterError):
        ineq.check_shc(exp_ax(2.0), r1_batch_tilt3, 4.0, 1.0, 1.0, 0.5, 0.0,
                       lsh_status="lsh")


def test_shc_p_equals_q_identity(r1_batch_s2):
    rep = ineq.check_shc(exp_ax(1.0), r1_batch_s2, 2.0, 2.0, 0.0, 0.5, 0.0,
                         lsh_status="lsh")
    assert rep.verdict == "holds"
    assert rep.margin == 0.0 and rep.stderr == 0.0  # M = 1, t_J = 0, same field
    assert rep.params["M"] == 1.0 and rep.params["t_J"] == 0.0


def test_shc_reduction_to_p_one(r1_batch_tilt3):
    # the (p,q) check on f equals the (1, q/p) check on f^p: norms map by ^p
    f = exp_ax(1.0)
    p, q = 2.0, 8.0
    t = ineq.janson_time(p, q, 0.5)
    gen = ineq.check_shc(f, r1_batch_tilt3, p, q, t, 0.5, 0.2, lsh_status="lsh")
    red = ineq.check_shc(calc.Pow(f, p), r1_batch_tilt3, 1.0, q / p, t, 0.5, 0.2,
                         lsh_status="lsh")
    assert np.isclose(red.lhs, gen.lhs ** p, rtol=1e-9)
    assert np.isclose(red.rhs, gen.rhs ** p, rtol=1e-9)
    assert np.isclose(red.params["t_J"], gen.params["t_J"], rtol=1e-12)
    assert np.isclose(red.params["M"], gen.params["M"] ** p, rtol=1e-12)


def test_shc_heavy_tail_flagged_without_tilt(r1_batch_s2):
    rep = ineq.check_shc(exp_ax(2.0), r1_batch_s2, 1.0, 4.0,
                         ineq.janson_time(1, 4, 0.5), 0.5, 0.0, lsh_status="lsh")
    assert rep.verdict == "inconclusive"
    assert any("heavy tail" in note for note in rep.notes)


def test_shc_defect_factor(r1_batch_s2):
    # beta > 0 loosens the bound by M(p,q) = exp(beta (1/p - 1/q))
    assert np.isclose(ineq.defect_m(1.0, 4.0, 0.8), math.exp(0.8 * 0.75))
    rep = ineq.check_shc(exp_ax(1.0), r1_batch_s2, 1.0, 2.0,
                         ineq.janson_time(1, 2, 0.5), 0.5, 0.8, lsh_status="lsh")
    assert rep.verdict == "holds"
    assert rep.margin > 0


# -- sweeps -------------------------------------------------------------------------


def test_alpha_sweep_gaussian_constant(r1_batch_tilt3):
    # equality case: alpha(t) = e^2 for all t
    rep = ineq.sweep_alpha(exp_ax(2.0), r1_batch_tilt3, 0.5, 0.0, 4.0,
                           lsh_status="lsh")
    assert rep.verdict == "holds"
    assert rep.monotone_nonincreasing and rep.monotone_nondecreasing
    for v, se in zip(rep.values, rep.stderrs):
        assert abs(v - math.exp(2.0)) < 4 * se + 1e-9


def test_alpha_sweep_constant_field(r1_batch_s2):
    rep = ineq.sweep_alpha(calc.Const(3.0), r1_batch_s2, 1.0, 0.0, math.e,
                           lsh_status="lsh")
    assert rep.monotone_nonincreasing and rep.monotone_nondecreasing
    assert np.allclose(rep.values, 3.0)


def test_alpha_sweep_h3_decreasing(h3_batch_s1):
    # exponent r(t) e^{-t} = 1 for all t at c=1: alpha(t) = exp((s/4) e^{-t})
    rep = ineq.sweep_alpha(calc.Exp(calc.x(1, 1)), h3_batch_s1, 1.0, 0.0, math.e,
                           lsh_status="lsh")
    assert rep.verdict == "holds"
    assert rep.monotone_nonincreasing
    assert not rep.monotone_nondecreasing
    for t, v, se in zip(rep.ts, rep.values, rep.stderrs):
        assert abs(v - math.exp(0.25 * math.exp(-t))) < 4 * se + 1e-9
    assert np.isclose(rep.ts[-1], 1.0)  # t_J(1, e) = c log q = 1


def test_l1_contractivity_h3(h3_batch_s1, h3):
    rep = ineq.check_l1_contractivity(calc.Exp(calc.x(1, 1)), h3_batch_s1,
                                      lsh_status="lsh")
    assert rep.verdict == "holds" and rep.monotone_nonincreasing
    # closed form |e^{-tE} f|_1 = exp(e^{-2t} s/4)
    for t, v, se in zip(rep.ts, rep.values, rep.stderrs):
        assert abs(v - math.exp(math.exp(-2 * t) * 0.25)) < 4 * se + 1e-9

    bad = lsh.library_field(h3, "gauss-neg")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        neg = ineq.check_l1_contractivity(bad.field, h3_batch_s1)
    assert neg.verdict == "violated"
    assert neg.monotone_nondecreasing and not neg.monotone_nonincreasing
    # closed form: E[exp(-e^{-2t} x1^2)] = 1/sqrt(1 + e^{-2t} s)
    for t, v, se in zip(neg.ts, neg.values, neg.stderrs):
        assert abs(v - 1.0 / math.sqrt(1 + math.exp(-2 * t))) < 4 * se + 1e-9


def test_l1_contractivity_constant(r1_batch_s2):
    rep = ineq.check_l1_contractivity(calc.Const(2.0), r1_batch_s2,
                                      lsh_status="lsh")
    assert rep.monotone_nonincreasing and rep.monotone_nondecreasing
    assert np.allclose(rep.values, 2.0)


# -- calibration and labeling -------------------------------------------------------


def test_common_random_numbers_calibration(h3):
    # re-running with fresh seeds moves the margin by < 4 combined stderr
    f = calc.Exp(calc.x(1, 1))
    reps = []
    for seed in range(20):
        batch = heat.sample(h3, 1.0, 5000, 32, seed=1000 + seed)
        reps.append(ineq.check_slsi(f, batch, 1.0, 0.0, lsh_status="lsh"))
    base = reps[0]
    ok = sum(
        abs(r.margin - base.margin) < 4 * math.hypot(r.stderr, base.stderr)
        for r in reps[1:]
    )
    assert ok >= 18  # 4 sigma: essentially all


def test_mode_labels(h3, engel, r1_batch_s2):
    assert ineq.lsi_mode(h3) == MODE_VERIFIED
    assert ineq.lsi_mode(engel) == MODE_EXPLORATORY
    batch = heat.sample(engel, 1.0, 2000, 16, seed=3)
    rep = ineq.check_slsi(calc.Exp(calc.x(1, 1)), batch, 1.0, 0.0, lsh_status="lsh")
    assert rep.mode == MODE_EXPLORATORY
    assert ineq.check_lsi(exp_ax(1.0), r1_batch_s2, 0.5, 0.0).mode == MODE_VERIFIED


def test_every_estimate_carries_stderr(r1_batch_s2):
    est = ineq.estimate("l1", exp_ax(1.0), r1_batch_s2)
    d = est.as_dict()
    assert "stderr" in d and d["stderr"] > 0
    rep = ineq.check_lsi(exp_ax(1.0), r1_batch_s2, 0.5, 0.0)
    assert "stderr" in rep.as_dict()
