"""Tests for the log-convex expression algebra."""

import math

import numpy as np
import pytest

from zevrpp.gp import convexity, expression
from zevrpp.gp.expression import (
    ExpOfMonomial,
    Max,
    Monomial,
    Posynomial,
    Power,
    Product,
    Registry,
    Sum,
)


@pytest.fixture
def registry() -> Registry:
    return Registry()


def _random_posynomial(
    rng: np.random.Generator, variables: list[expression.Variable], terms: int
) -> Posynomial:
    return Posynomial(
        Monomial(
            float(rng.lognormal()),
            [(v, float(rng.normal())) for v in variables if rng.uniform() < 0.7],
        )
        for _ in range(terms)
    )


def _composite(registry: Registry) -> expression.Expression:
    x, y, z = registry.continuous("x"), registry.continuous("y"), registry.continuous("z")
    posy = 0.5 * x**-1 + x**2 / 20 + y * z
    return Sum(
        [
            Product([Power(posy, 0.7), ExpOfMonomial(0.3 * x**0.5 * y**-0.2)]),
            3 * z**2 * x**-1,
        ]
    )


def test_mono_algebra_cancels_and_scales(registry: Registry) -> None:
    x, y = registry.continuous("x"), registry.continuous("y")
    product = expression.mono_algebra("mul", 2 * x, 3 * x**-1)
    assert product.coefficient == pytest.approx(6.0)
    assert product.exponents == ()

    power = expression.mono_algebra("pow", x * y**2, 0.5)
    assert power.exponent_map == {x: 0.5, y: 1.0}


def test_mono_algebra_metacentric_radius(registry: Registry) -> None:
    L, B, T = (registry.continuous(n) for n in "LBT")
    c_b = 0.623555
    inertia = 7 * L * B**3
    volume = 120 * c_b * L * B * T
    h_bm = expression.mono_algebra("div", inertia, volume)
    assert h_bm.coefficient == pytest.approx(7 / (120 * c_b))
    assert h_bm.exponent_map == {B: 2.0, T: -1.0}
    assert expression.evaluate(h_bm, {B: 30.0, T: 7.0}) == pytest.approx(12.027, abs=1e-3)


def test_monomial_rejects_nonpositive_coefficient(registry: Registry) -> None:
    x = registry.continuous("x")
    with pytest.raises(ValueError, match="positive"):
        Monomial(0.0, [(x, 1.0)])


def test_registry_rejects_duplicate_names(registry: Registry) -> None:
    registry.continuous("x")
    with pytest.raises(ValueError, match="Duplicate"):
        registry.integer("x")


def test_evaluate_examples(registry: Registry) -> None:
    x, r = registry.continuous("x"), registry.continuous("r")
    assert expression.evaluate(x**-1, {x: 3.107}) == pytest.approx(0.32185, abs=1e-5)
    posy = 0.5 * x**-1 + x**2 / 20
    assert expression.evaluate(posy, {x: 1.0}) == pytest.approx(0.55)
    assert expression.evaluate(Max([1.0, r.as_monomial()]), {r: 0.5}) == 1.0


def test_evaluate_errors(registry: Registry) -> None:
    x, y = registry.continuous("x"), registry.continuous("y")
    with pytest.raises(KeyError, match="'y'"):
        expression.evaluate(x * y, {x: 1.0})
    with pytest.raises(ValueError, match="positive"):
        expression.evaluate(x * y, {x: 1.0, y: 0.0})


def test_log_transform_examples(registry: Registry) -> None:
    x, y = registry.continuous("x"), registry.continuous("y")
    assert expression.log_transform_eval(2 * x / y, {x: 0.0, y: 0.0}) == pytest.approx(
        math.log(2)
    )
    doubled = x.as_monomial() + x.as_monomial()
    assert isinstance(doubled, Posynomial)
    assert expression.log_transform_eval(doubled, {x: 0.0}) == pytest.approx(math.log(2))
    x1 = 30 ** (1 / 3)
    assert expression.log_transform_eval(x**-1, {x: math.log(x1)}) == pytest.approx(
        -math.log(x1)
    )


def test_gradient_of_monomial_is_exponent_vector(registry: Registry) -> None:
    x, y = registry.continuous("x"), registry.continuous("y")
    g = expression.gradient(4 * x**1.5 * y**-2, {x: 0.3, y: -1.2})
    assert g == {x: pytest.approx(1.5), y: pytest.approx(-2.0)}


def test_gradient_of_equal_terms_is_softmax_average(registry: Registry) -> None:
    x, y = registry.continuous("x"), registry.continuous("y")
    g = expression.gradient(x + y, {x: 0.0, y: 0.0})
    assert g == {x: pytest.approx(0.5), y: pytest.approx(0.5)}


def test_gradient_matches_central_differences(registry: Registry) -> None:
    rng = np.random.default_rng(7)
    variables = [registry.continuous(f"x{i}") for i in range(8)]
    h = 1e-6
    for _ in range(100):
        posy = _random_posynomial(rng, variables, int(rng.integers(1, 11)))
        u = {v: float(rng.normal()) for v in variables}
        analytic = expression.gradient(posy, u)
        for v in posy.variables():
            plus = expression.log_transform_eval(posy, {**u, v: u[v] + h})
            minus = expression.log_transform_eval(posy, {**u, v: u[v] - h})
            numeric = (plus - minus) / (2 * h)
            assert analytic[v] == pytest.approx(numeric, rel=1e-6, abs=1e-8)


def test_composite_hessian_matches_gradient_differences(registry: Registry) -> None:
    expr = _composite(registry)
    ordered = sorted(expr.variables(), key=lambda v: v.id)
    index = {v: i for i, v in enumerate(ordered)}
    compiled = expr.compile(index)
    u = np.array([0.2, -0.4, 0.1])
    d = compiled(u)
    h = 1e-6
    for j in range(len(ordered)):
        step = np.zeros(len(ordered))
        step[j] = h
        numeric = (compiled(u + step).gradient - compiled(u - step).gradient) / (2 * h)
        np.testing.assert_allclose(d.hessian[:, j], numeric, rtol=1e-5, atol=1e-7)
        value_diff = (compiled(u + step).value - compiled(u - step).value) / (2 * h)
        assert d.gradient[j] == pytest.approx(value_diff, rel=1e-6, abs=1e-8)


def test_max_cannot_be_differentiated(registry: Registry) -> None:
    x = registry.continuous("x")
    with pytest.raises(ValueError, match="lowered"):
        expression.gradient(Max([1.0, x.as_monomial()]), {x: 0.0})


def test_monomial_log_transform_is_affine(registry: Registry) -> None:
    variables = [registry.continuous(f"x{i}") for i in range(4)]
    mono = Monomial(2.5, [(v, e) for v, e in zip(variables, [1.0, -0.5, 2.0, 0.3])])
    rng = np.random.default_rng(0)
    for _ in range(50):
        u = rng.normal(size=4)
        d = rng.normal(size=4)

        def at(point: np.ndarray) -> float:
            return expression.log_transform_eval(mono, dict(zip(variables, point)))

        assert at(u + d) - 2 * at(u) + at(u - d) == pytest.approx(0.0, abs=1e-12)


def test_evaluate_and_log_transform_round_trip(registry: Registry) -> None:
    expr = _composite(registry)
    rng = np.random.default_rng(3)
    ordered = sorted(expr.variables(), key=lambda v: v.id)
    for _ in range(20):
        u = {v: float(rng.normal(scale=0.5)) for v in ordered}
        direct = expression.evaluate(expr, {v: math.exp(value) for v, value in u.items()})
        assert direct == pytest.approx(math.exp(expression.log_transform_eval(expr, u)))


def test_public_constructors_are_log_convex(registry: Registry) -> None:
    rng = np.random.default_rng(11)
    variables = [registry.continuous(f"x{i}") for i in range(5)]
    candidates: list[expression.Expression] = [
        _random_posynomial(rng, variables, 6),
        Power(_random_posynomial(rng, variables, 3), 2.5),
        Product([variables[0] ** 1.2, ExpOfMonomial(0.2 * variables[1] * variables[2])]),
        Sum([_random_posynomial(rng, variables, 2), Power(variables[3] ** -1 + 1, 0.5)]),
    ]
    for candidate in candidates:
        report = convexity.check_log_convex(candidate, spread=0.7)
        assert report.passed, candidate


def test_posy_sum_merges_terms(registry: Registry) -> None:
    x, y = registry.continuous("x"), registry.continuous("y")
    total = expression.posy_sum([x.as_monomial(), 2 * x + y, 3 * y])
    assert isinstance(total, Posynomial)
    assert expression.evaluate(total, {x: 1.0, y: 1.0}) == pytest.approx(7.0)
    assert len(total.terms) == 2
