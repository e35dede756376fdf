import numpy as np
import pytest

from carnot import algebra, calculus as calc, group
from carnot.errors import ConfigError, DomainError


def rand_points(alg, n, seed, scale=2.0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, alg.dim)) * scale


# -- Jet2 arithmetic against hand-computed chain rules ---------------------------


def test_jet_product_and_chain_rules():
    a = calc.Jet2(2.0, 3.0, -1.0)
    b = calc.Jet2(-1.0, 0.5, 2.0)
    p = a * b
    assert (p.val, p.d1, p.d2) == (-2.0, 3.0 * -1.0 + 2.0 * 0.5, (-1.0) * -1.0 + 2 * 3.0 * 0.5 + 2.0 * 2.0)
    e = a.exp()
    assert np.isclose(e.d1, np.exp(2.0) * 3.0)
    assert np.isclose(e.d2, np.exp(2.0) * (-1.0 + 9.0))
    l = a.log()
    assert np.isclose(l.d1, 3.0 / 2.0)
    assert np.isclose(l.d2, -1.0 / 2.0 - (3.0 / 2.0) ** 2)
    q = a.pow(2.5)
    assert np.isclose(q.d1, 2.5 * 2.0 ** 1.5 * 3.0)
    assert np.isclose(q.d2, 2.5 * 2.0 ** 1.5 * -1.0 + 2.5 * 1.5 * 2.0 ** 0.5 * 9.0)


def test_jets_match_polynomial_differentiation(r1):
    # f(x) = sum_k c_k x^k along x(t) = x0 + v t: exact derivative comparison
    rng = np.random.default_rng(8)
    coeffs = rng.standard_normal(5)
    f = calc.Sum(*[calc.Prod(calc.Const(c), calc.Pow(calc.x(1, 1), float(k)))
                   for k, c in enumerate(coeffs)])
    x0, v = 0.7, 1.3
    jets = [calc.Jet2(x0, v, 0.0)]
    out = f._eval(calc.EvalContext(r1, jets))
    d1 = sum(k * c * x0 ** (k - 1) for k, c in enumerate(coeffs) if k >= 1) * v
    d2 = sum(k * (k - 1) * c * x0 ** (k - 2) for k, c in enumerate(coeffs) if k >= 2) * v ** 2
    assert np.isclose(out.d1, d1, atol=1e-12)
    assert np.isclose(out.d2, d2, atol=1e-12)


# -- invariant vector fields on H3 ------------------------------------------------


def test_h3_left_invariant_fields(h3):
    pt = group.element(h3, [0.0, 1.0, 0.0])
    jet = calc.left_invariant_derivative(calc.x(2, 1), [1.0, 0.0, 0.0], pt)
    assert np.isclose(jet.d1, -0.5)
    jet = calc.right_invariant_derivative(calc.x(2, 1), [1.0, 0.0, 0.0], pt)
    assert np.isclose(jet.d1, 0.5)


def test_h3_xi1_on_x1_squared(h3):
    rng = np.random.default_rng(9)
    for _ in range(5):
        pt = group.element(h3, rng.standard_normal(3))
        jet = calc.left_invariant_derivative(calc.x(1, 1) ** 2, [1.0, 0, 0], pt)
        assert np.isclose(jet.val, pt.coords[0] ** 2)
        assert np.isclose(jet.d1, 2 * pt.coords[0])
        assert np.isclose(jet.d2, 2.0)


def test_abelian_left_equals_right(r1):
    rng = np.random.default_rng(10)
    f = calc.Exp(calc.Prod(calc.Const(0.8), calc.x(1, 1)))
    for _ in range(5):
        pt = group.element(r1, rng.standard_normal(1))
        l = calc.left_invariant_derivative(f, [1.0], pt)
        r = calc.right_invariant_derivative(f, [1.0], pt)
        assert np.isclose(l.d1, r.d1) and np.isclose(l.d2, r.d2)


def test_left_right_agree_at_identity(h3):
    rng = np.random.default_rng(11)
    f = calc.Exp(calc.Sum(calc.x(1, 1), calc.Prod(calc.Const(0.5), calc.x(2, 1))))
    e = group.identity(h3)
    for _ in range(5):
        xi = rng.standard_normal(3)
        l = calc.left_invariant_derivative(f, xi, e)
        r = calc.right_invariant_derivative(f, xi, e)
        assert np.isclose(l.d1, r.d1, atol=1e-12)


# -- sub-Laplacian, sub-gradient, Euler field -------------------------------------


def test_h3_closed_form_operators(h3):
    P = rand_points(h3, 1000, 12)
    lap = calc.sub_laplacian_batch(calc.x(2, 1) ** 2, h3, P)
    assert np.max(np.abs(lap - (P[:, 0] ** 2 + P[:, 1] ** 2) / 2)) < 1e-12
    gs = calc.sub_gradient_sq_batch(calc.x(2, 1), h3, P)
    assert np.max(np.abs(gs - (P[:, 0] ** 2 + P[:, 1] ** 2) / 4)) < 1e-12
    f = calc.x(1, 1) * calc.x(1, 2) + calc.x(2, 1)
    ef = calc.euler_derivative_batch(f, h3, P)
    assert np.max(np.abs(ef - 2 * (P[:, 0] * P[:, 1] + P[:, 2]))) < 1e-12
    assert np.max(np.abs(calc.sub_laplacian_batch(calc.x(1, 1) ** 2, h3, P) - 2.0)) < 1e-12


def test_gradient_of_coordinate_and_constant(h3):
    P = rand_points(h3, 100, 13)
    assert np.allclose(calc.sub_gradient_sq_batch(calc.x(1, 1), h3, P), 1.0)
    assert np.allclose(calc.sub_gradient_sq_batch(calc.Const(4.2), h3, P), 0.0)
    assert np.allclose(calc.euler_derivative_batch(calc.Const(4.2), h3, P), 0.0)


def test_euclidean_euler_field(r1):
    rng = np.random.default_rng(14)
    Q = rng.standard_normal((200, 1))
    f = calc.Exp(calc.Prod(calc.Const(1.5), calc.x(1, 1)))
    ef = calc.euler_derivative_batch(f, r1, Q)
    assert np.max(np.abs(ef - 1.5 * Q[:, 0] * np.exp(1.5 * Q[:, 0]))) < 1e-12


def test_euler_curve_vs_coordinate_formula(h3, engel):
    for alg in (h3, engel):
        P = rand_points(alg, 200, 15)
        f = calc.Exp(calc.Prod(calc.Const(0.3), calc.x(1, 1)))
        f = calc.Sum(f, calc.Prod(calc.x(1, 2), calc.x(2, 1)))
        curve = calc.euler_derivative_batch(f, alg, P)
        coord = calc.euler_derivative_coordinate_formula(f, alg, P)
        assert np.max(np.abs(curve - coord)) < 1e-12


def test_delta_dilation_identity(h3):
    # Delta[f o delta_lam](x) = lam^2 (Delta f)(delta_lam x)
    P = rand_points(h3, 200, 16)
    f = calc.Exp(calc.Sum(calc.x(1, 1), calc.Prod(calc.Const(0.2), calc.x(2, 1))))
    for lam in (0.5, 2.0):
        fd = calc.compose_dilation(f, lam)
        lhs = calc.sub_laplacian_batch(fd, h3, P)
        rhs = lam ** 2 * calc.sub_laplacian_batch(f, h3, group.dilate_batch(h3, lam, P))
        assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(rhs) + 1)


def test_xi_f_dilation_identity(h3):
    P = rand_points(h3, 100, 17)
    f = calc.Sum(calc.Prod(calc.x(1, 1), calc.x(1, 2)), calc.Pow(calc.x(2, 1), 2.0))
    lam = 1.7
    fd = calc.compose_dilation(f, lam)
    for xi, layer in [([1.0, 0, 0], 1), ([0, 1.0, 0], 1), ([0, 0, 1.0], 2)]:
        for p in P[:40]:
            lhs = calc.left_invariant_derivative(fd, xi, group.element(h3, p)).d1
            moved = group.element(h3, group.dilate_batch(h3, lam, p))
            rhs = lam ** layer * calc.left_invariant_derivative(f, xi, moved).d1
            assert abs(lhs - rhs) < 1e-10


def test_leibniz_rule_for_sub_laplacian(h3):
    rng = np.random.default_rng(18)
    P = rand_points(h3, 100, 19)
    f = calc.Sum(calc.Pow(calc.x(1, 1), 2.0), calc.Prod(calc.x(1, 2), calc.x(2, 1)))
    g = calc.Sum(calc.Prod(calc.x(1, 1), calc.x(1, 2)), calc.Const(0.5))
    fg = calc.Prod(f, g)
    lap_fg = calc.sub_laplacian_batch(fg, h3, P)
    fv = calc.evaluate_batch(f, h3, P)
    gv = calc.evaluate_batch(g, h3, P)
    lap_f = calc.sub_laplacian_batch(f, h3, P)
    lap_g = calc.sub_laplacian_batch(g, h3, P)
    cross = np.zeros(len(P))
    for jf, jg in zip(calc.horizontal_jets(f, h3, P), calc.horizontal_jets(g, h3, P)):
        cross += np.asarray(jf.d1 * jg.d1, dtype=float)
    assert np.max(np.abs(lap_fg - (fv * lap_g + gv * lap_f + 2 * cross))) < 1e-10


def test_left_invariant_coefficients_are_polynomial(engel):
    # coefficient of d/dx_{a,b} in the flow of xi_{j,k}, sampled pointwise,
    # must be fit exactly by polynomials of degree <= 2 on the engel group
    rng = np.random.default_rng(20)
    P = rng.standard_normal((120, 4)) * 1.5
    monos = [
        np.ones(len(P)), P[:, 0], P[:, 1], P[:, 2], P[:, 3],
        P[:, 0] ** 2, P[:, 0] * P[:, 1], P[:, 1] ** 2,
    ]
    design = np.column_stack(monos)
    for src in range(4):
        xi = np.zeros(4)
        xi[src] = 1.0
        for tgt in range(4):
            coeff = calc.curve_jet(calc.Var(*engel.pair_index(tgt)), engel, P, xi).d1
            coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (len(P),))
            sol, *_ = np.linalg.lstsq(design, coeff, rcond=None)
            assert np.max(np.abs(design @ sol - coeff)) < 1e-9


# -- dilation pullback --------------------------------------------------------------


def test_pullback_identity_and_substitution(r1, h3):
    f = calc.Exp(calc.Prod(calc.Const(0.9), calc.x(1, 1)))
    P = rand_points(r1, 50, 21)
    assert np.allclose(
        calc.evaluate_batch(calc.dilation_pullback(f, 0.0), r1, P),
        calc.evaluate_batch(f, r1, P),
    )
    t = 0.6
    got = calc.evaluate_batch(calc.dilation_pullback(f, t), r1, P)
    want = np.exp(0.9 * np.exp(-t) * P[:, 0])
    assert np.max(np.abs(got - want)) < 1e-12
    Q = rand_points(h3, 50, 22)
    got = calc.evaluate_batch(calc.dilation_pullback(calc.x(2, 1), np.log(2)), h3, Q)
    assert np.max(np.abs(got - Q[:, 2] / 4)) < 1e-14


def test_pullback_composition_is_exact(h3):
    f = calc.x(2, 1)
    g = calc.dilation_pullback(calc.dilation_pullback(f, 0.3), 0.4)
    assert isinstance(g, calc.Dilated)
    assert g.t == 0.7


def test_evaluate_single_point(h3):
    pt = group.element(h3, [1.0, 2.0, 3.0])
    f = calc.x(1, 1) * calc.x(1, 2) + calc.x(2, 1)
    assert calc.evaluate(f, pt) == 5.0
    assert calc.sub_laplacian(f, pt) == 0.0
    assert np.isclose(calc.euler_derivative(f, pt), 2 * 5.0)
    assert np.isclose(calc.sub_gradient_sq(calc.x(2, 1), pt), (1 + 4) / 4)


def test_metric_enters_the_frame():
    stretched = algebra.StratifiedAlgebra(
        (2, 1), [((1, 1), (1, 2), [((2, 1), 1.0)])],
        metric_v1=[[4.0, 0.0], [0.0, 1.0]],
    )
    frame = stretched.orthonormal_v1_frame()
    assert np.allclose(frame.T @ stretched.metric_v1 @ frame, np.eye(2), atol=1e-12)
    P = np.zeros((1, 3))
    # Delta x1^2 = 2 <u1, e1>^2 = 2/4 with the stretched metric
    lap = calc.sub_laplacian_batch(calc.x(1, 1) ** 2, stretched, P)
    assert np.isclose(lap[0], 0.5)


# -- mini-language ------------------------------------------------------------------


def test_parse_field_roundtrip(h3):
    expr = "(exp (+ (* a x_1_1) (* b x_1_2)))"
    f = calc.parse_field(expr, {"a": 0.5, "b": -1.0})
    P = rand_points(h3, 20, 23)
    want = np.exp(0.5 * P[:, 0] - P[:, 1])
    assert np.allclose(calc.evaluate_batch(f, h3, P), want)
    reparsed = calc.parse_field(calc.to_expr(f))
    assert np.allclose(calc.evaluate_batch(reparsed, h3, P), want)


def test_parse_field_forms(r1):
    P = np.array([[0.3]])
    cases = {
        "(- x_1_1)": -0.3,
        "(- (pow x_1_1 2) x_1_1)": 0.09 - 0.3,
        "(log (exp x_1_1))": 0.3,
        "(+ 1 2 x_1_1)": 3.3,
        "2.5": 2.5,
    }
    for expr, want in cases.items():
        assert np.isclose(calc.evaluate_batch(calc.parse_field(expr), r1, P)[0], want)


def test_parse_field_errors():
    for expr in ["", "(boom x_1_1)", "(exp x_1_1", "(pow x_1_1 x_1_2)", "y_1_1",
                 "(exp x_1_1) trailing"]:
        with pytest.raises(ConfigError):
            calc.parse_field(expr)


def test_domain_errors_name_the_sample(r1):
    P = np.array([[1.0], [-2.0], [3.0]])
    with pytest.raises(DomainError, match="sample 1"):
        calc.evaluate_batch(calc.Log(calc.x(1, 1)), r1, P)
    with pytest.raises(DomainError):
        calc.evaluate_batch(calc.Pow(calc.x(1, 1), 0.5), r1, P)
    # integer powers of negative values are fine
    out = calc.evaluate_batch(calc.Pow(calc.x(1, 1), 3.0), r1, P)
    assert np.allclose(out, [1.0, -8.0, 27.0])
