import numpy as np
import pytest

from levyflow import (
    ChargeMeasure,
    IntensityProfile,
    PairProfile,
    PoissonModel,
    QuadratureSpec,
    TestField,
    VertexKernel,
    VertexKernelSet,
)


@pytest.fixture(scope="session")
def symmetric_model():
    return PoissonModel(ChargeMeasure.symmetric_unit(),
                        IntensityProfile("bump", 1.0, 1))


@pytest.fixture(scope="session")
def asymmetric_model():
    return PoissonModel(ChargeMeasure.of([(2.0, 0.25), (-1.0, 0.75)]),
                        IntensityProfile("bump", 1.0, 1))


@pytest.fixture(scope="session")
def benchmark_kernels():
    return VertexKernelSet.of([VertexKernel(2, 0.4, PairProfile("gaussian", 1.0))])


@pytest.fixture(scope="session")
def bump_field():
    return TestField.of([((0.0,), 0.5, 1.0)])


@pytest.fixture(scope="session")
def scheme():
    return QuadratureSpec(tol=1e-11)


def simpson(f, a, b, n=20001):
    """Dense Simpson rule, independent of the package quadrature."""
    x = np.linspace(a, b, n)
    y = f(x)
    h = x[1] - x[0]
    coeff = np.ones(n)
    coeff[1:-1:2] = 4.0
    coeff[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(coeff * y))
