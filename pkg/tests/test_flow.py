import math

import numpy as np
import pytest

from levyflow.evaluator import (
    PairProfile,
    TestField,
    VertexKernel,
    VertexKernelSet,
    evaluate_configuration,
)
from levyflow.flow import (
    Series,
    correlation_functional,
    effective_action_series,
    partition_function_series,
    renormalized_correlation,
    series_exp,
    series_mul,
    td_limit_scan,
    vacuum_counterterm,
)
from levyflow.graphs import enumerate_configurations, is_connected
from levyflow.noise_models import (
    ChargeMeasure,
    GaussianModel,
    IntensityProfile,
    PoissonModel,
    charge_moment,
    gaussian_pair_kernel,
    intensity_integral,
)
from levyflow.quadrature import QuadratureSpec

from conftest import simpson


def test_series_exp_single_term():
    c = Series.of([0.0, 2.0, 0.0, 0.0])
    e = series_exp(c)
    assert e.values() == pytest.approx([1.0, 2.0, 2.0, 8.0 / 6.0])


def test_series_exp_requires_zero_constant():
    with pytest.raises(ValueError):
        series_exp(Series.of([1.0, 2.0]))


def test_series_mul_cauchy():
    a = Series.of([1.0, 2.0, 3.0])
    b = Series.of([1.0, -1.0, 0.5])
    out = series_mul(a, b)
    assert out.values() == pytest.approx([1.0, 1.0, 1.5])


def test_partition_series_order_zero(symmetric_model, benchmark_kernels,
                                     bump_field, scheme):
    series = partition_function_series(benchmark_kernels, symmetric_model,
                                       bump_field, 2.0, 0.8, 0, scheme)
    assert series.values().tolist() == [1.0]


def test_partition_series_zero_couplings(symmetric_model, bump_field, scheme):
    kernels = VertexKernelSet.of([VertexKernel(2, 0.0)])
    series = partition_function_series(kernels, symmetric_model, bump_field,
                                       2.0, 0.8, 3, scheme)
    assert series.values().tolist() == [1.0, 0.0, 0.0, 0.0]
    connected = effective_action_series(kernels, symmetric_model, bump_field,
                                        2.0, 0.8, 3, scheme)
    assert connected.values().tolist() == [0.0, 0.0, 0.0, 0.0]


def test_partition_series_against_direct_sum(symmetric_model,
                                             benchmark_kernels, bump_field,
                                             scheme):
    """Order terms recomputed by an independent per-configuration loop."""
    series = partition_function_series(benchmark_kernels, symmetric_model,
                                       bump_field, 2.0, 0.8, 2, scheme)
    for m, degrees in ((1, (2,)), (2, (2, 2))):
        total = 0.0
        for config in enumerate_configurations(degrees):
            total += evaluate_configuration(
                config, benchmark_kernels, symmetric_model, bump_field,
                2.0, 0.8, scheme).value
        expected = (-1.0) ** m / math.factorial(m) * total
        assert series.terms[m].value == pytest.approx(expected, rel=1e-10)


def test_effective_action_single_field_vertex(symmetric_model, bump_field,
                                              scheme):
    # one degree-1 vertex: the order-1 connected term is +g * int(field)
    kernels = VertexKernelSet.of([VertexKernel(1, 0.7)])
    series = effective_action_series(kernels, symmetric_model, bump_field,
                                     2.0, 2.0, 1, scheme)
    int_phi = simpson(lambda x: bump_field(x), -0.5, 0.5)
    assert series.terms[1].value == pytest.approx(0.7 * int_phi, rel=1e-8)


def test_linked_cluster_low_order(symmetric_model, benchmark_kernels,
                                  bump_field, scheme):
    full = partition_function_series(benchmark_kernels, symmetric_model,
                                     bump_field, 2.0, 0.8, 2, scheme)
    connected = effective_action_series(benchmark_kernels, symmetric_model,
                                        bump_field, 2.0, 0.8, 2, scheme)
    expected = series_exp(connected)
    assert full.values() == pytest.approx(expected.values(), rel=1e-9)


def test_constant_coupling_folds_exponentially(symmetric_model, bump_field,
                                               scheme):
    kernels = VertexKernelSet.of([], constant=0.3)
    series = partition_function_series(kernels, symmetric_model, bump_field,
                                       2.0, 0.8, 3, scheme)
    expected = [(-0.3) ** k / math.factorial(k) for k in range(4)]
    assert series.values() == pytest.approx(expected, rel=1e-12)
    connected = effective_action_series(kernels, symmetric_model, bump_field,
                                        2.0, 0.8, 2, scheme)
    assert connected.values() == pytest.approx([0.0, -0.3, 0.0], abs=1e-15)


def test_correlation_zero_couplings(symmetric_model, bump_field, scheme):
    kernels = VertexKernelSet.of([VertexKernel(2, 0.0)])
    rho = correlation_functional(kernels, symmetric_model, bump_field,
                                 1.5, 2, scheme)
    assert rho.values().tolist() == [1.0, 0.0, 0.0]


def test_correlation_first_order_with_first_moment(asymmetric_model,
                                                   bump_field, scheme):
    # single degree-1 kernel: order-1 term is -g (int field + r1 * total)
    g = 0.45
    kernels = VertexKernelSet.of([VertexKernel(1, g)])
    t = 1.5
    rho = correlation_functional(kernels, asymmetric_model, bump_field, t,
                                 1, scheme)
    int_phi = simpson(lambda x: bump_field(x), -0.5, 0.5)
    r1 = charge_moment(asymmetric_model.charges, 1)
    total = intensity_integral(asymmetric_model.profile, t)
    assert rho.terms[1].value == pytest.approx(-g * (int_phi + r1 * total),
                                               rel=1e-8)


def test_correlation_first_order_symmetric_zero(symmetric_model, scheme):
    kernels = VertexKernelSet.of([VertexKernel(1, 0.45)])
    rho = correlation_functional(kernels, symmetric_model, TestField.zero(),
                                 1.5, 1, scheme)
    assert rho.terms[1].value == 0.0


def test_vacuum_counterterm_values(symmetric_model, benchmark_kernels,
                                   scheme):
    T0 = 1.5
    delta = vacuum_counterterm(benchmark_kernels, symmetric_model, T0, 2,
                               scheme)
    first_vacuum_graph = (0.4 * charge_moment(symmetric_model.charges, 2)
                          * intensity_integral(symmetric_model.profile, T0))
    assert delta[0] == pytest.approx(-first_vacuum_graph, rel=1e-9)
    assert len(delta) == 2


def test_vacuum_counterterm_trivial_cases(symmetric_model, scheme):
    zero = VertexKernelSet.of([VertexKernel(2, 0.0)])
    assert vacuum_counterterm(zero, symmetric_model, 1.5, 2, scheme) == [0.0, 0.0]
    odd = VertexKernelSet.of([VertexKernel(1, 0.5), VertexKernel(3, 0.2)])
    delta = vacuum_counterterm(odd, symmetric_model, 1.5, 1, scheme)
    assert delta[0] == 0.0


def test_renormalized_vacuum_is_one(symmetric_model, benchmark_kernels,
                                    scheme):
    rho = renormalized_correlation(benchmark_kernels, symmetric_model,
                                   TestField.zero(), 1.5, 2, scheme)
    assert rho.terms[0].value == pytest.approx(1.0)
    assert abs(rho.terms[1].value) < 1e-9
    assert abs(rho.terms[2].value) < 1e-9


def test_renormalized_zero_couplings_matches_correlation(symmetric_model,
                                                         bump_field, scheme):
    kernels = VertexKernelSet.of([VertexKernel(2, 0.0)])
    a = renormalized_correlation(kernels, symmetric_model, bump_field, 1.5,
                                 2, scheme)
    b = correlation_functional(kernels, symmetric_model, bump_field, 1.5,
                               2, scheme)
    assert a.values() == pytest.approx(b.values())


def test_renormalized_dual_paths_agree(symmetric_model, benchmark_kernels,
                                       bump_field, scheme):
    sub = renormalized_correlation(benchmark_kernels, symmetric_model,
                                   bump_field, 1.5, 2, scheme,
                                   method="subtract")
    drop = renormalized_correlation(benchmark_kernels, symmetric_model,
                                    bump_field, 1.5, 2, scheme,
                                    method="drop")
    assert sub.values() == pytest.approx(drop.values(), abs=1e-9)
    with pytest.raises(ValueError):
        renormalized_correlation(benchmark_kernels, symmetric_model,
                                 bump_field, 1.5, 2, scheme, method="other")


def test_gaussian_first_order_effective_action(scheme):
    """Order-1 connected term against direct double quadrature at zero field."""
    from levyflow.evaluator import CutoffRegion

    model = GaussianModel("heat", "square", 1)
    kernels = VertexKernelSet.of(
        [VertexKernel(2, 0.5, PairProfile("gaussian", 1.0))],
        cutoff=CutoffRegion(radius=6.0, shoulder_width=1.0))
    series = effective_action_series(kernels, model, TestField.zero(),
                                     2.0, 1.0, 1, scheme)
    pair = gaussian_pair_kernel(model, 2.0, 1.0)
    n, w = np.polynomial.legendre.leggauss(400)
    radius = kernels.cutoff.outer_radius
    x = radius * n
    wx = radius * w
    lam = 0.5 * np.exp(-(x[:, None] - x[None, :]) ** 2 / 2.0)
    chi = kernels.cutoff(np.abs(x))
    direct = np.einsum(lam * pair((x[:, None] - x[None, :]) ** 2),
                       [0, 1], chi * wx, [0], chi * wx, [1], [])
    assert series.terms[1].value == pytest.approx(-float(direct), rel=1e-8)


def test_td_scan_vacuum_exponent(symmetric_model, benchmark_kernels, scheme):
    scan = td_limit_scan(benchmark_kernels, symmetric_model,
                         TestField.zero(), [5.0, 10.0, 20.0, 40.0], 1,
                         scheme, quantity="vacuum")
    assert not scan.degenerate
    assert scan.exponent == pytest.approx(1.0, abs=1e-6)


def test_td_scan_graph_cauchy(symmetric_model, scheme):
    kernels = VertexKernelSet.of([
        VertexKernel(3, 1.0, PairProfile("gaussian", 1.0))])
    field = TestField.of([((0.0,), 0.5, 1.0)])
    scan = td_limit_scan(kernels, symmetric_model, field,
                         [5.0, 10.0, 20.0, 40.0], 1, scheme,
                         quantity="graph",
                         graph="1;3;K=(1,1);I=[(1,2)(1,3)]")
    assert not scan.degenerate
    assert scan.cauchy_decreasing


def test_td_scan_degenerate_zero_field(symmetric_model, benchmark_kernels,
                                       scheme):
    scan = td_limit_scan(benchmark_kernels, symmetric_model,
                         TestField.zero(), [5.0, 10.0, 20.0, 40.0], 1,
                         scheme, quantity="graph",
                         graph="1;2;K=(1,1);I=[(1,2)]")
    assert scan.degenerate
    assert scan.exponent is None


def test_td_scan_validation(symmetric_model, benchmark_kernels, scheme):
    with pytest.raises(ValueError):
        td_limit_scan(benchmark_kernels, symmetric_model, TestField.zero(),
                      [5.0, 4.0, 6.0, 7.0], 1, scheme)
    with pytest.raises(ValueError):
        td_limit_scan(benchmark_kernels, symmetric_model, TestField.zero(),
                      [5.0, 6.0, 7.0], 1, scheme)
    with pytest.raises(ValueError):
        td_limit_scan(benchmark_kernels, symmetric_model, TestField.zero(),
                      [5.0, 6.0, 7.0, 8.0], 1, scheme, quantity="graph")
