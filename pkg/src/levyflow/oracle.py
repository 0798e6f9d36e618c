"""Independent validators: particle sampling, Monte Carlo averages,
from-scratch partition sums, series exponentiation, and the mollified-delta
check of the diagonal collapse.

Nothing here reuses the graph-series assembly: the Monte Carlo estimate
averages exp(-V) over explicitly sampled particle configurations, the
partition check re-enumerates partitions with a different algorithm, and
the mollified evaluator rebuilds configuration integrands over all leg
variables with the diagonal delta replaced by a narrow normalized bump.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .combinatorics import CumulantSequence, moments_from_cumulants
from .evaluator import TestField, VertexKernelSet
from .flow import Series
from .graphs import Configuration
from .noise_models import (
    NoiseModel,
    PoissonModel,
    cumulant_kernel,
    intensity,
    intensity_integral,
)
from .quadrature import (
    Axis,
    Factor,
    FactorIntegrand,
    QuadratureSpec,
    derive_seed,
    integrate_factors,
)
from .shapes import quartic_kernel

__all__ = [
    "PointConfiguration",
    "MCEstimate",
    "ExpSeriesReport",
    "PartitionTransformReport",
    "sample_poisson_field",
    "mc_correlation",
    "exp_series_check",
    "partition_transform_check",
    "insertion_partitions",
    "mollified_configuration_value",
]


@dataclass(frozen=True)
class PointConfiguration:
    """One sampled particle configuration: locations with charges."""

    points: tuple[tuple[tuple[float, ...], float], ...]
    expected_count: float
    seed: int

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int


def _require_poisson(model: NoiseModel) -> PoissonModel:
    if model.kind != "poisson":
        raise ValueError("particle sampling needs the Poisson model")
    return model


def _sample_positions(rng, profile, t: float, count: int) -> np.ndarray:
    d = profile.dimension
    out = np.empty((count, d))
    filled = 0
    while filled < count:
        n = max(64, 2 * (count - filled))
        proposal = rng.uniform(-t, t, size=(n, d))
        accept_p = intensity(profile, proposal, t) / profile.amplitude
        keep = proposal[rng.uniform(size=n) < accept_p]
        take = min(len(keep), count - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_poisson_field(model: NoiseModel, t: float, seed: int) -> PointConfiguration:
    """Draw one particle configuration of the grand-canonical system.

    Count is Poisson with the total intensity; locations follow the local
    density by rejection inside the support ball; charges are independent
    draws from the charge measure.
    """
    model = _require_poisson(model)
    rng = np.random.default_rng(derive_seed(seed, "sample_poisson_field"))
    total = intensity_integral(model.profile, t)
    count = int(rng.poisson(total))
    positions = _sample_positions(rng, model.profile, t, count)
    charges = rng.choice(model.charges.charges(), size=count,
                         p=model.charges.weights())
    points = tuple((tuple(float(x) for x in pos), float(s))
                   for pos, s in zip(positions, charges))
    return PointConfiguration(points=points, expected_count=total, seed=seed)


def _field_nodes(field: TestField, spec_panels: int = 24):
    from .quadrature import GK_NODES, GK_WEIGHTS

    lo, hi = field.support_box
    if field.dimension != 1:
        raise NotImplementedError("particle averages implemented for d = 1")
    edges = np.linspace(lo[0], hi[0], spec_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
    weights = (half[:, None] * GK_WEIGHTS[None, :]).ravel()
    return nodes, weights


class _InitialAction:
    """V(field + atomic noise) evaluated by multinomial expansion.

    Kernel slots are filled by either the smooth field (integrated on a
    fixed grid) or atom locations (point evaluations); the binomial weight
    counts slot choices of a symmetric kernel.
    """

    def __init__(self, kernels: VertexKernelSet, field: TestField,
                 dimension: int):
        if dimension != 1:
            raise NotImplementedError("particle averages implemented for d = 1")
        self.kernels = kernels
        self.field = field
        if field.is_zero:
            self.nodes = np.zeros(0)
            self.weights = np.zeros(0)
            self.phi = np.zeros(0)
        else:
            self.nodes, self.weights = _field_nodes(field)
            self.phi = field(self.nodes)
        self.base = {}
        for p, entry in kernels.entries.items():
            self.base[p] = self._field_only(p, entry)

    def _field_only(self, p: int, entry) -> float:
        if self.field.is_zero:
            return 0.0
        pair = entry.pair.of_diff2
        n = self.nodes
        pw = self.phi * self.weights
        if p == 1:
            return float(entry.coupling * pw.sum())
        if p == 2:
            mat = pair((n[:, None] - n[None, :]) ** 2)
            return float(entry.coupling * pw @ mat @ pw)
        if p == 3:
            m01 = pair((n[:, None] - n[None, :]) ** 2)
            val = np.einsum(m01, [0, 1], m01, [0, 2], m01, [1, 2],
                            pw, [0], pw, [1], pw, [2], [])
            return float(entry.coupling * val)
        raise NotImplementedError("field-only term implemented for p <= 3")

    def _partial(self, p: int, entry, atoms: np.ndarray) -> np.ndarray:
        """W(a_1..a_k): kernel with k slots at atoms, rest against the field.

        ``atoms`` has shape (T, k); returns (T,).
        """
        pair = entry.pair.of_diff2
        k = atoms.shape[1]
        value = np.full(len(atoms), entry.coupling)
        for i in range(k):
            for j in range(i + 1, k):
                value = value * pair((atoms[:, i] - atoms[:, j]) ** 2)
        rest = p - k
        if rest == 0:
            return value
        if self.field.is_zero:
            return np.zeros(len(atoms))
        n = self.nodes
        pw = self.phi * self.weights
        if rest == 1:
            cross = np.ones((len(atoms), len(n)))
            for i in range(k):
                cross = cross * pair((atoms[:, i, None] - n[None, :]) ** 2)
            return value * (cross @ pw)
        if rest == 2:
            mat = pair((n[:, None] - n[None, :]) ** 2)
            out = np.empty(len(atoms))
            for start in range(0, len(atoms), 512):
                chunk = atoms[start:start + 512]
                cross = np.ones((len(chunk), len(n)))
                for i in range(k):
                    cross = cross * pair((chunk[:, i, None] - n[None, :]) ** 2)
                out[start:start + 512] = np.einsum(
                    cross, [0, 1], cross, [0, 2], mat, [1, 2],
                    pw, [1], pw, [2], [0])
            return value * out
        raise NotImplementedError("more than two field slots per vertex")

    def value(self, positions: np.ndarray, charges: np.ndarray) -> float:
        total = self.kernels.constant
        count = len(positions)
        for p, entry in self.kernels.entries.items():
            if entry.coupling == 0.0:
                continue
            term = self.base[p]
            for k in range(1, p + 1):
                if count == 0:
                    break
                idx = np.indices((count,) * k).reshape(k, -1).T
                atoms = positions[idx].reshape(len(idx), k)
                weight = np.prod(charges[idx], axis=1)
                term += math.comb(p, k) * float(weight @ self._partial(p, entry, atoms))
            total += term
        return total


def mc_correlation(model: NoiseModel, kernels: VertexKernelSet,
                   field: TestField, t: float, samples: int,
                   seed: int, action_bound: float = 100.0) -> MCEstimate:
    """Sample mean of exp(-V(field + noise)) over particle configurations.

    Aborts if the sampled action falls below ``-action_bound`` (the model
    assumes the initial action is bounded below).
    """
    model = _require_poisson(model)
    rng = np.random.default_rng(derive_seed(seed, "mc_correlation"))
    total = intensity_integral(model.profile, t)
    action = _InitialAction(kernels, field, model.dimension)
    counts = rng.poisson(total, size=samples)
    all_positions = _sample_positions(rng, model.profile, t, int(counts.sum()))
    all_charges = rng.choice(model.charges.charges(), size=int(counts.sum()),
                             p=model.charges.weights())
    offsets = np.concatenate([[0], np.cumsum(counts)])
    values = np.empty(samples)
    for i in range(samples):
        pos = all_positions[offsets[i]:offsets[i + 1], 0]
        chg = all_charges[offsets[i]:offsets[i + 1]]
        v = action.value(pos, chg)
        if v < -action_bound:
            raise RuntimeError(
                f"initial action unbounded below on sample {i}: V = {v:.3e}")
        values[i] = math.exp(-v)
    mean = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return MCEstimate(mean=mean, std_error=std_error, samples=samples,
                      seed=seed)


@dataclass(frozen=True)
class ExpSeriesReport:
    """Per-order comparison of exp(connected series) with the full series."""

    orders: tuple[int, ...]
    expected: tuple[float, ...]
    actual: tuple[float, ...]
    abs_deviation: tuple[float, ...]
    rel_deviation: tuple[float, ...]
    error_budget: tuple[float, ...]
    passed: bool


def exp_series_check(connected: Series, full: Series, M: int,
                     rel_tol: float = 1e-7) -> ExpSeriesReport:
    """Exponentiate the connected series and compare to the full series.

    The pass verdict allows the stated relative tolerance plus the
    combined propagated quadrature budget of both series.
    """
    e = [1.0]
    c = connected.values()
    for k in range(1, M + 1):
        e.append(math.fsum(i * c[i] * e[k - i] for i in range(1, k + 1)) / k)
    exp_err = [0.0]
    for k in range(1, M + 1):
        err2 = math.fsum((e[k - i] * connected.terms[i].error) ** 2
                         for i in range(1, k + 1))
        exp_err.append(math.sqrt(err2))
    orders, absdev, reldev, budget = [], [], [], []
    ok = True
    for m in range(M + 1):
        actual = full.terms[m].value
        dev = abs(e[m] - actual)
        scale = max(abs(actual), 1e-300)
        b = exp_err[m] + full.terms[m].error
        orders.append(m)
        absdev.append(dev)
        reldev.append(dev / scale)
        budget.append(b)
        floor = 1e-14 * max(1.0, abs(e[m]))
        if dev > rel_tol * abs(actual) + 3.0 * b + floor:
            ok = False
    return ExpSeriesReport(orders=tuple(orders), expected=tuple(e),
                           actual=tuple(full.values()),
                           abs_deviation=tuple(absdev),
                           rel_deviation=tuple(reldev),
                           error_budget=tuple(budget), passed=ok)


def insertion_partitions(n: int) -> Iterator[list[list[int]]]:
    """Partitions of {1..n} by element insertion; independent of the
    restricted-growth enumerator used elsewhere."""
    if n == 0:
        yield []
        return
    for smaller in insertion_partitions(n - 1):
        for i in range(len(smaller)):
            yield smaller[:i] + [smaller[i] + [n]] + smaller[i + 1:]
        yield smaller + [[n]]


@dataclass(frozen=True)
class PartitionTransformReport:
    n_max: int
    sequences: int
    mismatches: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.mismatches == 0


def partition_transform_check(n_max: int, sequences: int = 100,
                              seed: int = 2024) -> PartitionTransformReport:
    """Compare the moment transform against a from-scratch partition sum.

    Exact agreement is required: both sides accumulate the identical
    multiset of per-partition products (blocks in canonical order) with an
    exactly rounded sum.
    """
    if n_max > 10:
        raise ValueError("partition_transform_check limited to n_max <= 10")
    rng = np.random.default_rng(derive_seed(seed, "partition_transform"))
    mismatches = 0
    for _ in range(sequences):
        kappa = rng.uniform(-2.0, 2.0, size=n_max)
        c = CumulantSequence.of([float(k) for k in kappa])
        for n in range(1, n_max + 1):
            terms = []
            for blocks in insertion_partitions(n):
                blocks = sorted((sorted(b) for b in blocks), key=lambda b: b[0])
                prod = 1.0
                for b in blocks:
                    prod = prod * c.get(len(b))
                terms.append(prod)
            if math.fsum(terms) != moments_from_cumulants(c, n):
                mismatches += 1
    return PartitionTransformReport(n_max=n_max, sequences=sequences,
                                    mismatches=mismatches, seed=seed)


def _mollified_single(config: Configuration, kernels: VertexKernelSet,
                      model: PoissonModel, field: TestField, t: float,
                      T0: float, mode: str, width: float,
                      spec: QuadratureSpec) -> float:
    """One mollified evaluation over all leg variables at a fixed width.

    Every block keeps its first leg as the anchor; the other legs are
    parametrized as anchor + width * u with u on the unit interval, which
    keeps all axes smooth at unit scale regardless of the width.
    """
    d = model.dimension
    if d != 1:
        raise NotImplementedError("mollified oracle implemented for d = 1")
    axes: list[Axis] = []
    factors: list[Factor] = []
    prefactor = 1.0

    # positions: leg -> (axis of base variable, offset axis or None)
    position: dict = {}
    for b, block in enumerate(config.blocks):
        kern = cumulant_kernel(model, len(block), t, T0, mode)
        if kern.is_zero:
            return 0.0
        prefactor *= kern.coefficient
        anchor_axis = len(axes)
        axes.append(Axis(-kern.spatial_radius, kern.spatial_radius,
                         kern.spatial_scale, max_panels=8))
        factors.append(Factor((anchor_axis,),
                              (lambda fn: lambda x: fn(x**2))(kern.spatial),
                              f"cumulant[{b}]"))
        position[block[0]] = (anchor_axis, None)
        for leg in block[1:]:
            # offset axis: leg position = anchor + width * u; the quartic
            # mollifier is polynomial, one Kronrod panel is exact
            off_axis = len(axes)
            axes.append(Axis(-1.0, 1.0, 2.0, max_panels=1))
            factors.append(Factor((off_axis,), quartic_kernel, "mollifier"))
            position[leg] = (anchor_axis, off_axis)
    if config.outer and field.is_zero:
        return 0.0
    lo, hi = field.support_box
    for leg in config.outer:
        axis = len(axes)
        axes.append(Axis(lo[0], hi[0], field.feature_scale))
        factors.append(Factor((axis,), lambda x: -field(x), "field"))
        position[leg] = (axis, None)

    def leg_expr(leg, arrs, index_of):
        base, off = position[leg]
        value = arrs[index_of[base]]
        if off is not None:
            value = value + width * arrs[index_of[off]]
        return value

    for v, degree in enumerate(config.legset.degrees, start=1):
        entry = kernels.get(degree)
        prefactor *= entry.coupling
        legs = [leg for leg in config.legset.legs if leg.vertex == v]
        for i in range(len(legs)):
            for j in range(i + 1, len(legs)):
                involved = []
                for leg in (legs[i], legs[j]):
                    base, off = position[leg]
                    involved.append(base)
                    if off is not None:
                        involved.append(off)
                involved = tuple(dict.fromkeys(involved))
                index_of = {a: k for k, a in enumerate(involved)}
                la, lb = legs[i], legs[j]

                def closure(*arrs, _la=la, _lb=lb, _idx=index_of,
                            _pair=entry.pair.of_diff2):
                    diff = leg_expr(_la, arrs, _idx) - leg_expr(_lb, arrs, _idx)
                    return _pair(diff**2)

                factors.append(Factor(involved, closure, "pair"))
    ig = FactorIntegrand(tuple(axes), tuple(factors), prefactor)
    return integrate_factors(ig, spec).value


def mollified_configuration_value(config: Configuration,
                                  kernels: VertexKernelSet,
                                  model: NoiseModel, field: TestField,
                                  t: float, T0: float,
                                  mode: str = "absolute",
                                  widths: Sequence[float] = (0.2, 0.15, 0.1, 0.05),
                                  tol: float = 3e-9) -> float:
    """Full-dimensional configuration value with mollified diagonal kernels,
    extrapolated to zero mollifier width.

    The mollified integral is even in the width, so a polynomial fit in
    width^2 through the computed points extrapolates to the sharp value.
    """
    model = _require_poisson(model)
    spec = QuadratureSpec(tol=tol)
    values = [
        _mollified_single(config, kernels, model, field, t, T0, mode, w, spec)
        for w in widths]
    if all(v == 0.0 for v in values):
        return 0.0
    w2 = np.array([w * w for w in widths])
    coeffs = np.linalg.solve(np.vander(w2, increasing=True), np.array(values))
    return float(coeffs[0])
