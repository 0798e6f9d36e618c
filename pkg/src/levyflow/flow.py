"""Perturbative series assembly, vacuum normalization, and cutoff scans.

Series are finite truncations graded by the number of vertices m, with term
weights (-1)^m / m!.  Order m sums over all ordered degree tuples with a
nonzero coupling (labeled vertices, no symmetrization) and over every
configuration of each tuple.  The degree-0 coupling has no legs, so it
enters as a scalar exponential factor folded in per order.

Sign conventions: a configuration value carries -field(x) on each outer
leg, so the assembled partition series represents the noise average of
exp(-V(noise - field)).  The correlation functional of a field therefore
evaluates the series at the negated field, which matches the direct
particle-average definition used by the Monte Carlo oracle.

The vacuum counterterm collects the connected vacuum graphs per order; the
renormalized correlation divides by its exponential (equivalently, drops
every configuration with a vacuum component), pinning the renormalized
vacuum value to 1 at every order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .evaluator import TestField, VertexKernelSet, evaluate_configuration
from .graphs import (
    Configuration,
    enumerate_configurations,
    has_vacuum_component,
    is_connected,
    is_vacuum,
    parse_canonical,
)
from .noise_models import NoiseModel
from .quadrature import QuadratureSpec

__all__ = [
    "SeriesTerm",
    "Series",
    "ScanResult",
    "series_mul",
    "series_exp",
    "partition_function_series",
    "effective_action_series",
    "correlation_functional",
    "vacuum_counterterm",
    "renormalized_correlation",
    "td_limit_scan",
]


@dataclass(frozen=True)
class SeriesTerm:
    value: float
    error: float
    graph_count: int


@dataclass(frozen=True)
class Series:
    """Graded accumulation of graph values by perturbative order."""

    terms: tuple[SeriesTerm, ...]

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def term(self, m: int) -> SeriesTerm:
        return self.terms[m]

    def values(self) -> np.ndarray:
        return np.array([t.value for t in self.terms])

    def errors(self) -> np.ndarray:
        return np.array([t.error for t in self.terms])

    @classmethod
    def of(cls, values: Sequence[float], errors: Sequence[float] | None = None,
           counts: Sequence[int] | None = None) -> "Series":
        n = len(values)
        errors = errors if errors is not None else [0.0] * n
        counts = counts if counts is not None else [0] * n
        return cls(tuple(SeriesTerm(float(v), float(e), int(c))
                         for v, e, c in zip(values, errors, counts)))


def series_mul(a: Series, b: Series, order: int | None = None) -> Series:
    """Cauchy product of two truncated series with first-order errors."""
    m = min(a.order, b.order) if order is None else order
    values, errors = [], []
    for k in range(m + 1):
        val = math.fsum(a.terms[i].value * b.terms[k - i].value
                        for i in range(k + 1))
        err2 = math.fsum(
            (a.terms[i].value * b.terms[k - i].error) ** 2
            + (a.terms[i].error * b.terms[k - i].value) ** 2
            for i in range(k + 1))
        values.append(val)
        errors.append(math.sqrt(err2))
    counts = [a.terms[k].graph_count if k <= a.order else 0
              for k in range(m + 1)]
    return Series.of(values, errors, counts)


def series_exp(c: Series, order: int | None = None) -> Series:
    """Formal exponential of a series with zero constant term."""
    m = c.order if order is None else order
    if c.terms[0].value != 0.0:
        raise ValueError("series_exp needs a zero constant term")
    e = [1.0]
    for k in range(1, m + 1):
        e.append(math.fsum(i * c.terms[i].value * e[k - i]
                           for i in range(1, k + 1)) / k)
    errors = [0.0]
    for k in range(1, m + 1):
        err2 = math.fsum((e[k - i] * c.terms[i].error) ** 2
                         for i in range(1, k + 1))
        errors.append(math.sqrt(err2))
    counts = [c.terms[k].graph_count if k <= c.order else 0
              for k in range(m + 1)]
    return Series.of(e, errors, counts)


def _constant_factor_series(constant: float, order: int) -> Series:
    # exp(-constant * u) as a graded series: one degree-0 vertex per order
    values = [(-constant) ** k / math.factorial(k) for k in range(order + 1)]
    return Series.of(values)


def _degree_tuples(degrees: Sequence[int], m: int) -> Iterable[tuple[int, ...]]:
    if m == 0:
        yield ()
        return
    yield from itertools.product(degrees, repeat=m)


def _graph_sum(kernels: VertexKernelSet, model: NoiseModel, field: TestField,
               t: float, T0: float, m: int, scheme: QuadratureSpec,
               mode: str,
               config_filter: Callable[[Configuration], bool] | None):
    degrees = kernels.degrees_with_coupling()
    values, errors2 = [], []
    count = 0
    for tup in _degree_tuples(degrees, m):
        for config in enumerate_configurations(tup, predicate=config_filter):
            count += 1
            res = evaluate_configuration(config, kernels, model, field,
                                         t, T0, scheme, mode=mode)
            values.append(res.value)
            errors2.append(res.error_estimate**2)
    weight = (-1.0) ** m / math.factorial(m)
    return (weight * math.fsum(values),
            abs(weight) * math.sqrt(math.fsum(errors2)),
            count)


def _assemble(kernels, model, field, t, T0, M, scheme, mode, config_filter,
              include_constant: bool):
    terms = [SeriesTerm(1.0, 0.0, 1)]
    for m in range(1, M + 1):
        value, error, count = _graph_sum(kernels, model, field, t, T0, m,
                                         scheme, mode, config_filter)
        terms.append(SeriesTerm(value, error, count))
    series = Series(tuple(terms))
    if include_constant and kernels.constant != 0.0:
        series = series_mul(series, _constant_factor_series(kernels.constant, M), M)
    return series


def partition_function_series(kernels: VertexKernelSet, model: NoiseModel,
                              field: TestField, t: float, T0: float, M: int,
                              scheme: QuadratureSpec,
                              mode: str = "incremental") -> Series:
    """Full graph sum per order: the expansion of the flowed exponential."""
    return _assemble(kernels, model, field, t, T0, M, scheme, mode,
                     None, include_constant=True)


def effective_action_series(kernels: VertexKernelSet, model: NoiseModel,
                            field: TestField, t: float, T0: float, M: int,
                            scheme: QuadratureSpec,
                            mode: str = "incremental") -> Series:
    """Connected graphs only: the log of the partition series, per order.

    Order 0 is 0 by convention (the empty configuration is not connected);
    the degree-0 coupling contributes -constant at order 1.
    """
    series = _assemble(kernels, model, field, t, T0, M, scheme, mode,
                       is_connected, include_constant=False)
    terms = list(series.terms)
    terms[0] = SeriesTerm(0.0, 0.0, 0)
    if kernels.constant != 0.0 and M >= 1:
        t1 = terms[1]
        terms[1] = SeriesTerm(t1.value - kernels.constant, t1.error,
                              t1.graph_count + 1)
    return Series(tuple(terms))


def correlation_functional(kernels: VertexKernelSet, model: NoiseModel,
                           field: TestField, t: float, M: int,
                           scheme: QuadratureSpec) -> Series:
    """Perturbative particle correlation functional at cutoff scale t.

    Absolute-mode cumulants of the noise measure at scale t; the graph
    series is evaluated at the negated field (see module docstring).
    """
    return partition_function_series(kernels, model, field.negated(),
                                     0.0, t, M, scheme, mode="absolute")


def vacuum_counterterm(kernels: VertexKernelSet, model: NoiseModel,
                       T0: float, M: int,
                       scheme: QuadratureSpec) -> list[float]:
    """Connected vacuum sums per order 1..M at zero field, absolute mode.

    Values carry the series weights (-1)^m / m!; the degree-0 coupling
    contributes -constant at order 1.
    """
    zero_field = TestField.zero(model.dimension)
    out = []
    for m in range(1, M + 1):
        value, error, _ = _graph_sum(
            kernels, model, zero_field, 0.0, T0, m, scheme, "absolute",
            lambda c: is_connected(c) and is_vacuum(c))
        if m == 1:
            value -= kernels.constant
        out.append(value)
    return out


def renormalized_correlation(kernels: VertexKernelSet, model: NoiseModel,
                             field: TestField, T0: float, M: int,
                             scheme: QuadratureSpec,
                             method: str = "subtract") -> Series:
    """Correlation functional normalized so the vacuum value is 1 per order.

    method="subtract": shift the constant coupling by the counterterm and
    re-expand (implemented as dividing by the exponential of the graded
    counterterm series).  method="drop": re-sum keeping only configurations
    without a vacuum component.  The two must agree termwise.
    """
    if method == "subtract":
        rho = correlation_functional(kernels, model, field, T0, M, scheme)
        delta = vacuum_counterterm(kernels, model, T0, M, scheme)
        neg = Series.of([0.0] + [-v for v in delta])
        return series_mul(rho, series_exp(neg, M), M)
    if method == "drop":
        series = _assemble(kernels, model, field.negated(), 0.0, T0, M,
                           scheme, "absolute",
                           lambda c: not has_vacuum_component(c),
                           include_constant=False)
        return series
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ScanResult:
    """Cutoff-scan rows with a log-log exponent fit or difference report."""

    quantity: str
    rows: tuple[tuple[float, float, float], ...]  # (T0, value, error)
    exponent: float | None
    exponent_width: float | None
    differences: tuple[float, ...]
    cauchy_decreasing: bool | None
    degenerate: bool


def _fit_exponent(t0s, values):
    x = np.log(np.asarray(t0s, dtype=float))
    y = np.log(np.abs(np.asarray(values, dtype=float)))
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(max(cov[0, 0], 0.0)))


def td_limit_scan(kernels: VertexKernelSet, model: NoiseModel,
                  field: TestField, T0_list: Sequence[float], M: int,
                  scheme: QuadratureSpec, quantity: str = "vacuum",
                  graph: str | None = None) -> ScanResult:
    """Scan the cutoff scale: vacuum growth exponent or graph convergence.

    quantity="vacuum": per cutoff, the order-1 vacuum sum; fits the growth
    exponent in log-log coordinates (expected: the dimension d).
    quantity="graph": a single non-vacuum configuration given by its
    canonical text; reports successive differences, which should decrease.
    """
    t0s = [float(x) for x in T0_list]
    if len(t0s) < 4 or any(b <= a for a, b in zip(t0s, t0s[1:])):
        raise ValueError("need at least 4 strictly increasing cutoff values")
    rows = []
    if quantity == "vacuum":
        zero_field = TestField.zero(model.dimension)
        for T0 in t0s:
            value, error, _ = _graph_sum(
                kernels, model, zero_field, 0.0, T0, 1, scheme, "absolute",
                lambda c: is_connected(c) and is_vacuum(c))
            rows.append((T0, value - kernels.constant, error))
    elif quantity == "graph":
        if graph is None:
            raise ValueError("quantity='graph' needs a canonical graph text")
        config = parse_canonical(graph)
        for T0 in t0s:
            res = evaluate_configuration(config, kernels, model,
                                         field.negated(), 0.0, T0, scheme,
                                         mode="absolute")
            rows.append((T0, res.value, res.error_estimate))
    else:
        raise ValueError(f"unknown scan quantity {quantity!r}")

    values = [r[1] for r in rows]
    spread = max(abs(v) for v in values) - min(abs(v) for v in values)
    degenerate = (any(v == 0.0 for v in values)
                  or spread <= 1e-13 * max(abs(v) for v in values))
    differences = tuple(abs(b - a) for a, b in zip(values, values[1:]))
    exponent = width = None
    cauchy = None
    if quantity == "vacuum" and not degenerate:
        exponent, width = _fit_exponent(t0s, values)
    if quantity == "graph" and not degenerate:
        cauchy = all(b < a for a, b in zip(differences, differences[1:]))
    return ScanResult(quantity=quantity, rows=tuple(rows), exponent=exponent,
                      exponent_width=width, differences=differences,
                      cauchy_decreasing=cauchy, degenerate=degenerate)
