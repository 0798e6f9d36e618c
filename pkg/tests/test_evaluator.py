import math

import numpy as np
import pytest

from levyflow.evaluator import (
    Bump,
    CutoffRegion,
    PairProfile,
    TestField,
    VertexKernel,
    VertexKernelSet,
    build_integrand,
    evaluate_configuration,
    integrate,
)
from levyflow.graphs import enumerate_configurations, parse_canonical
from levyflow.noise_models import (
    ChargeMeasure,
    GaussianModel,
    IntensityProfile,
    PoissonModel,
    charge_moment,
    gaussian_pair_kernel,
    intensity_integral,
)
from levyflow.quadrature import (
    Axis,
    Factor,
    FactorIntegrand,
    QuadratureSpec,
    integrate_factors,
)
from levyflow.shapes import bump_integral_1d

from conftest import simpson


def test_field_basics():
    zero = TestField.zero()
    assert zero.is_zero
    assert zero(np.array([0.0, 1.0])).tolist() == [0.0, 0.0]
    f = TestField.of([((0.0,), 0.5, 2.0)])
    assert f(np.array(0.0)) == pytest.approx(2.0)
    assert f(np.array(0.6)) == 0.0
    assert f.negated()(np.array(0.0)) == pytest.approx(-2.0)
    g = f + f.negated()
    assert g(np.array(0.2)) == pytest.approx(0.0, abs=1e-15)
    lo, hi = f.support_box
    assert lo == (-0.5,) and hi == (0.5,)


def test_field_validation():
    with pytest.raises(ValueError):
        Bump((0.0,), -1.0, 1.0)
    with pytest.raises(ValueError):
        TestField.of([((0.0, 0.0), 0.5, 1.0)], dimension=1)


def test_kernel_set_validation():
    with pytest.raises(ValueError):
        VertexKernelSet.of([VertexKernel(2, 1.0), VertexKernel(2, 2.0)])
    with pytest.raises(ValueError):
        VertexKernelSet.of([VertexKernel(0, 1.0)])
    ks = VertexKernelSet.of([VertexKernel(2, 1.0), VertexKernel(3, 0.0)])
    assert ks.degrees_with_coupling() == (2,)
    with pytest.raises(KeyError) as err:
        ks.get(5)
    assert "5" in str(err.value)


def test_build_integrand_poisson_collapse(symmetric_model, benchmark_kernels,
                                          bump_field):
    config = parse_canonical("1;2;K=;I=[(1,1)(1,2)]")
    ig = build_integrand(config, benchmark_kernels, symmetric_model,
                         bump_field, 2.0, 0.8)
    assert ig.dimension == 1
    assert len(ig.variables) == 1


def test_build_integrand_gaussian_no_collapse(benchmark_kernels, bump_field):
    model = GaussianModel("heat", "square", 1)
    config = parse_canonical("1;2;K=;I=[(1,1)(1,2)]")
    ig = build_integrand(config, benchmark_kernels, model, bump_field,
                         2.0, 1.0)
    assert ig.dimension == 2
    config3 = parse_canonical("1;3;K=;I=[(1,1)(1,2)(1,3)]")
    kernels3 = VertexKernelSet.of([VertexKernel(3, 1.0)])
    ig3 = build_integrand(config3, kernels3, model, bump_field, 2.0, 1.0)
    assert ig3.is_zero


def test_build_integrand_zero_field_outer(symmetric_model, benchmark_kernels):
    config = parse_canonical("1;2;K=(1,1);I=[(1,2)]")
    ig = build_integrand(config, benchmark_kernels, symmetric_model,
                         TestField.zero(), 2.0, 0.8)
    assert ig.is_zero


def test_build_integrand_missing_degree(symmetric_model, bump_field):
    kernels = VertexKernelSet.of([VertexKernel(2, 1.0)])
    config = parse_canonical("1;3;K=;I=[(1,1)(1,2)(1,3)]")
    with pytest.raises(KeyError) as err:
        build_integrand(config, kernels, symmetric_model, bump_field,
                        2.0, 0.8)
    assert "3" in str(err.value)


def test_integrate_zero_costs_nothing(symmetric_model, benchmark_kernels):
    config = parse_canonical("1;2;K=(1,1);I=[(1,2)]")
    ig = build_integrand(config, benchmark_kernels, symmetric_model,
                         TestField.zero(), 2.0, 0.8)
    res = integrate(ig, QuadratureSpec())
    assert res.value == 0.0 and res.error_estimate == 0.0
    assert res.evaluations == 0 and res.scheme == "zero"


def test_integrate_unit_mass_bump():
    height = 1.0 / (0.7 * bump_integral_1d())
    field = TestField.of([((0.3,), 0.7, height)])
    ig = FactorIntegrand((Axis(-0.4, 1.0, 0.35),),
                         (Factor((0,), lambda x: field(x), "bump"),))
    res = integrate_factors(ig, QuadratureSpec(tol=1e-12))
    assert res.value == pytest.approx(1.0, abs=1e-10)


def test_integrate_fubini_product():
    f = TestField.of([((0.0,), 0.5, 1.0)])
    g = TestField.of([((0.1,), 0.4, 0.7)])
    axes = (Axis(-0.5, 0.5, 0.25), Axis(-0.3, 0.5, 0.2),
            Axis(-0.5, 0.5, 0.25), Axis(-0.3, 0.5, 0.2))
    pair = lambda x, y: f(x) * g(y)
    joint = FactorIntegrand(axes, (Factor((0, 1), pair, "a"),
                                   Factor((2, 3), pair, "b")))
    left = FactorIntegrand(axes[:2], (Factor((0, 1), pair, "a"),))
    spec = QuadratureSpec(tol=1e-12)
    whole = integrate_factors(joint, spec).value
    part = integrate_factors(left, spec).value
    assert whole == pytest.approx(part * part, rel=1e-10)


def test_vacuum_configuration_value(symmetric_model, benchmark_kernels,
                                    bump_field, scheme):
    config = parse_canonical("1;2;K=;I=[(1,1)(1,2)]")
    res = evaluate_configuration(config, benchmark_kernels, symmetric_model,
                                 bump_field, 0.0, 1.5, scheme,
                                 mode="absolute")
    expected = 0.4 * 1.0 * 1.0 * intensity_integral(symmetric_model.profile,
                                                    1.5)
    assert res.value == pytest.approx(expected, abs=1e-8)


def test_single_leg_field_graph(symmetric_model, bump_field, scheme):
    kernels = VertexKernelSet.of([VertexKernel(1, 0.7)])
    config = parse_canonical("1;1;K=(1,1);I=[]")
    res = evaluate_configuration(config, kernels, symmetric_model,
                                 bump_field, 2.0, 0.8, scheme)
    expected = -0.7 * 0.5 * bump_integral_1d()
    assert res.value == pytest.approx(expected, abs=1e-10)


def test_coupling_linearity(symmetric_model, bump_field, scheme):
    def value(g, canonical):
        kernels = VertexKernelSet.of([VertexKernel(2, g, PairProfile("gaussian", 1.0))])
        config = parse_canonical(canonical)
        return evaluate_configuration(config, kernels, symmetric_model,
                                      bump_field, 2.0, 0.8, scheme).value

    one_vertex = "1;2;K=;I=[(1,1)(1,2)]"
    two_vertex = "2;2,2;K=;I=[(1,1)(2,1)|(1,2)(2,2)]"
    assert value(0.6, one_vertex) == pytest.approx(
        1.5 * value(0.4, one_vertex), rel=1e-12)
    assert value(0.8, two_vertex) == pytest.approx(
        4.0 * value(0.4, two_vertex), rel=1e-12)


def test_disconnected_factorization(symmetric_model, benchmark_kernels,
                                    bump_field, scheme):
    whole = evaluate_configuration(
        parse_canonical("2;2,2;K=(1,1)(1,2);I=[(2,1)(2,2)]"),
        benchmark_kernels, symmetric_model, bump_field, 2.0, 0.8, scheme)
    outer = evaluate_configuration(
        parse_canonical("1;2;K=(1,1)(1,2);I=[]"),
        benchmark_kernels, symmetric_model, bump_field, 2.0, 0.8, scheme)
    closed = evaluate_configuration(
        parse_canonical("1;2;K=;I=[(1,1)(1,2)]"),
        benchmark_kernels, symmetric_model, bump_field, 2.0, 0.8, scheme)
    assert whole.value == pytest.approx(outer.value * closed.value, abs=1e-8)


def test_gaussian_classical_against_direct(bump_field, scheme):
    """Classical pairing value vs an independently assembled integrand on a
    Gauss-Legendre grid."""
    model = GaussianModel("heat", "square", 1)
    kernels = VertexKernelSet.of(
        [VertexKernel(2, 0.5, PairProfile("gaussian", 1.0))],
        cutoff=CutoffRegion(radius=6.0, shoulder_width=1.0))
    config = parse_canonical("2;2,2;K=(1,1)(2,2);I=[(1,2)(2,1)]")
    got = evaluate_configuration(config, kernels, model, bump_field,
                                 2.0, 1.0, scheme)

    pair = gaussian_pair_kernel(model, 2.0, 1.0)
    n, w = np.polynomial.legendre.leggauss(120)
    xf = 0.5 * n  # field legs live on the field support
    wf = 0.5 * w
    xb = 7.0 * n  # bound legs live on the cutoff box
    wb = 7.0 * w
    lam = lambda a, b: 0.5 * np.exp(-(a - b) ** 2 / 2.0)
    chi = kernels.cutoff
    # legs: x11 (outer), x12 (block a), x21 (block a), x22 (outer)
    val = np.einsum(
        lam(xf[:, None], xb[None, :]) * chi(np.abs(xf))[:, None]
        * chi(np.abs(xb))[None, :], [0, 1],
        lam(xb[:, None], xf[None, :]) * chi(np.abs(xb))[:, None]
        * chi(np.abs(xf))[None, :], [2, 3],
        pair((xb[:, None] - xb[None, :]) ** 2), [1, 2],
        -bump_field(xf), [0], -bump_field(xf), [3],
        wf, [0], wb, [1], wb, [2], wf, [3], [])
    assert got.value == pytest.approx(float(val), rel=1e-8)


def test_cutoff_region_is_transparent(symmetric_model, bump_field, scheme):
    """Compactly supported factors never reach the shoulder, so widening the
    flat region leaves Poisson values unchanged."""
    config = parse_canonical("2;2,2;K=(1,1);I=[(1,2)(2,1)|(2,2)]")
    values = []
    for radius in (10.0, 25.0):
        kernels = VertexKernelSet.of(
            [VertexKernel(2, 0.4, PairProfile("gaussian", 1.0))],
            cutoff=CutoffRegion(radius=radius, shoulder_width=1.0))
        values.append(evaluate_configuration(
            config, kernels, symmetric_model, bump_field, 2.0, 0.8,
            scheme).value)
    assert values[0] == pytest.approx(values[1], rel=1e-12)


def test_monte_carlo_determinism(symmetric_model, benchmark_kernels,
                                 bump_field):
    config = parse_canonical("1;2;K=;I=[(1,1)(1,2)]")
    spec = QuadratureSpec(kind="monte_carlo", seed=7, samples=20000)
    a = evaluate_configuration(config, benchmark_kernels, symmetric_model,
                               bump_field, 2.0, 0.8, spec)
    b = evaluate_configuration(config, benchmark_kernels, symmetric_model,
                               bump_field, 2.0, 0.8, spec)
    assert a.value == b.value and a.scheme == "monte_carlo"
    other = evaluate_configuration(
        config, benchmark_kernels, symmetric_model, bump_field, 2.0, 0.8,
        QuadratureSpec(kind="monte_carlo", seed=8, samples=20000))
    assert other.value != a.value
    tensor = evaluate_configuration(config, benchmark_kernels,
                                    symmetric_model, bump_field, 2.0, 0.8,
                                    QuadratureSpec(tol=1e-10))
    assert a.value == pytest.approx(tensor.value, abs=4 * a.error_estimate)


def test_monte_carlo_requires_seed():
    with pytest.raises(ValueError):
        QuadratureSpec(kind="monte_carlo")
