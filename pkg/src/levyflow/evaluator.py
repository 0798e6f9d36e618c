"""Graph evaluation: assemble the integrand of a configuration and integrate.

The rules: every leg of a full vertex carries a point in R^d; each degree-p
vertex contributes its kernel at its legs' points, each block its connected
moment kernel, each outer leg a factor -field(x); then integrate over all
points.  For the Poisson model the diagonal cumulant support collapses all
legs of a block onto one shared variable, so the integration dimension is
d * (#outer legs + #blocks); for the Gaussian model every leg keeps its own
variable and only size-2 blocks survive.

Vertex kernels are couplings times a product of pair profiles in the leg
differences times a smooth cutoff per leg; the cutoff is exactly 1 on the
working region, and for compactly supported noise/field factors the
integration boxes never reach its shoulder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .graphs import Configuration
from .noise_models import NoiseModel, cumulant_kernel
from .quadrature import (
    Axis,
    Factor,
    FactorIntegrand,
    IntegrationResult,
    QuadratureSpec,
    derive_seed,
    integrate_factors,
)
from .shapes import standard_bump_radial2, shoulder

__all__ = [
    "PairProfile",
    "CutoffRegion",
    "VertexKernel",
    "VertexKernelSet",
    "Bump",
    "TestField",
    "VariableSpec",
    "Integrand",
    "build_integrand",
    "integrate",
    "evaluate_configuration",
]


@dataclass(frozen=True)
class PairProfile:
    """Symmetric rapidly decaying profile of one leg difference.

    The vertex profile is the product over leg pairs, which keeps every
    integrand factor at most two variables wide.
    """

    kind: str = "gaussian"
    width: float = 1.0

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unknown pair profile {self.kind!r}")
        if self.width <= 0:
            raise ValueError("pair width must be positive")

    def of_diff2(self, diff2):
        return np.exp(-np.asarray(diff2, dtype=float) / (2.0 * self.width**2))

    @property
    def at_zero(self) -> float:
        return 1.0


@dataclass(frozen=True)
class CutoffRegion:
    """Per-argument cutoff: exactly 1 inside ``radius``, smooth shoulder."""

    radius: float
    shoulder_width: float = 1.0

    def __call__(self, r):
        return shoulder(np.asarray(r, dtype=float), self.radius,
                        self.shoulder_width)

    @property
    def outer_radius(self) -> float:
        return self.radius + self.shoulder_width


@dataclass(frozen=True)
class VertexKernel:
    degree: int
    coupling: float
    pair: PairProfile = PairProfile()


@dataclass(frozen=True)
class VertexKernelSet:
    """Vertex kernels by degree plus the degree-0 coupling constant."""

    entries: Mapping[int, VertexKernel]
    constant: float = 0.0
    cutoff: CutoffRegion = CutoffRegion(radius=50.0)

    @classmethod
    def of(cls, entries: Sequence[VertexKernel], constant: float = 0.0,
           cutoff: CutoffRegion | None = None) -> "VertexKernelSet":
        table = {e.degree: e for e in entries}
        if len(table) != len(entries):
            raise ValueError("duplicate kernel degree")
        if any(p < 1 for p in table):
            raise ValueError("kernel degrees start at 1; use `constant`")
        return cls(entries=table, constant=constant,
                   cutoff=cutoff or CutoffRegion(radius=50.0))

    @property
    def max_degree(self) -> int:
        return max(self.entries, default=0)

    def degrees_with_coupling(self) -> tuple[int, ...]:
        return tuple(sorted(p for p, e in self.entries.items()
                            if e.coupling != 0.0))

    def get(self, degree: int) -> VertexKernel:
        try:
            return self.entries[degree]
        except KeyError:
            raise KeyError(f"no vertex kernel of degree {degree}") from None

    def kernel_value(self, degree: int, points: np.ndarray) -> np.ndarray:
        """Evaluate the full kernel at explicit leg points.

        ``points`` has shape (..., p, d); used by the particle oracle.
        """
        entry = self.get(degree)
        pts = np.asarray(points, dtype=float)
        value = np.full(pts.shape[:-2], entry.coupling)
        p = pts.shape[-2]
        for i in range(p):
            for j in range(i + 1, p):
                diff2 = np.sum((pts[..., i, :] - pts[..., j, :]) ** 2, axis=-1)
                value = value * entry.pair.of_diff2(diff2)
        radii = np.sqrt(np.sum(pts**2, axis=-1))
        for i in range(p):
            value = value * self.cutoff(radii[..., i])
        return value


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bump width must be positive")


@dataclass(frozen=True)
class TestField:
    """Finite sum of smooth compactly supported bumps in R^d."""

    __test__ = False  # keep pytest from collecting the class by name

    bumps: tuple[Bump, ...] = ()
    dimension: int = 1

    @classmethod
    def of(cls, bumps, dimension: int = 1) -> "TestField":
        out = []
        for b in bumps:
            if isinstance(b, Bump):
                out.append(b)
            else:
                center, width, height = b
                if np.isscalar(center):
                    center = (float(center),)
                out.append(Bump(tuple(float(x) for x in center),
                                float(width), float(height)))
        field = cls(tuple(out), dimension)
        for b in field.bumps:
            if len(b.center) != dimension:
                raise ValueError("bump center dimension mismatch")
        return field

    @classmethod
    def zero(cls, dimension: int = 1) -> "TestField":
        return cls((), dimension)

    @property
    def is_zero(self) -> bool:
        return all(b.height == 0.0 for b in self.bumps)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        out = np.zeros(x.shape[:-1])
        for b in self.bumps:
            if b.height == 0.0:
                continue
            r2 = np.sum((x - np.array(b.center)) ** 2, axis=-1) / b.width**2
            out = out + b.height * standard_bump_radial2(r2)
        return out

    @property
    def support_box(self):
        if not self.bumps:
            origin = (0.0,) * self.dimension
            return origin, origin
        lo = [min(b.center[a] - b.width for b in self.bumps)
              for a in range(self.dimension)]
        hi = [max(b.center[a] + b.width for b in self.bumps)
              for a in range(self.dimension)]
        return tuple(lo), tuple(hi)

    @property
    def feature_scale(self) -> float:
        widths = [b.width for b in self.bumps if b.height != 0.0]
        return min(widths) if widths else 1.0

    def negated(self) -> "TestField":
        return self.scaled(-1.0)

    def scaled(self, factor: float) -> "TestField":
        return TestField(tuple(Bump(b.center, b.width, factor * b.height)
                               for b in self.bumps), self.dimension)

    def __add__(self, other: "TestField") -> "TestField":
        if other.dimension != self.dimension:
            raise ValueError("field dimension mismatch")
        return TestField(self.bumps + other.bumps, self.dimension)


@dataclass(frozen=True)
class VariableSpec:
    """One integration variable (a d-dimensional point)."""

    name: str
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    scale: float


@dataclass(frozen=True)
class Integrand:
    """Bound integrand of one configuration: variables plus factor graph."""

    variables: tuple[VariableSpec, ...]
    core: FactorIntegrand
    note: str = ""

    @property
    def dimension(self) -> int:
        return self.core.dimension

    @property
    def is_zero(self) -> bool:
        return self.core.zero or self.core.prefactor == 0.0


class _IntegrandBuilder:
    def __init__(self, dimension: int):
        self.d = dimension
        self.variables: list[VariableSpec] = []
        self.axes: list[Axis] = []
        self.factors: list[Factor] = []
        self.prefactor = 1.0
        self.zero = False

    def add_variable(self, name, lo, hi, scale) -> int:
        index = len(self.variables)
        if np.isscalar(lo):
            lo = (float(lo),) * self.d
            hi = (float(hi),) * self.d
        self.variables.append(VariableSpec(name, tuple(lo), tuple(hi), scale))
        for a in range(self.d):
            self.axes.append(Axis(lo[a], hi[a], scale))
        return index

    def var_axes(self, index: int) -> tuple[int, ...]:
        return tuple(index * self.d + a for a in range(self.d))

    def add_radial(self, var: int, fn_r2, label: str):
        axes = self.var_axes(var)

        def closure(*arrs):
            return fn_r2(sum(a**2 for a in arrs))

        self.factors.append(Factor(axes, closure, label))

    def add_field(self, var: int, field: TestField, sign: float, label: str):
        axes = self.var_axes(var)

        def closure(*arrs):
            stacked = np.stack(np.broadcast_arrays(*arrs), axis=-1) \
                if len(arrs) > 1 else arrs[0]
            return sign * field(stacked)

        self.factors.append(Factor(axes, closure, label))

    def add_pair(self, var_a: int, var_b: int, fn_diff2, scale: float,
                 label: str):
        if var_a == var_b:
            self.prefactor *= float(fn_diff2(np.zeros(())))
            return
        axes = self.var_axes(var_a) + self.var_axes(var_b)
        d = self.d

        def closure(*arrs):
            diff2 = sum((arrs[a] - arrs[d + a]) ** 2 for a in range(d))
            return fn_diff2(diff2)

        self.factors.append(Factor(axes, closure, label))
        self._tighten_scale(var_a, scale)
        self._tighten_scale(var_b, scale)

    def add_cutoff(self, var: int, cutoff: CutoffRegion):
        spec = self.variables[var]
        inside = max(max(abs(v) for v in spec.lo),
                     max(abs(v) for v in spec.hi)) <= cutoff.radius
        if inside:
            return
        self.add_radial(var, lambda r2: cutoff(np.sqrt(r2)), "cutoff")

    def _tighten_scale(self, var: int, scale: float):
        spec = self.variables[var]
        if scale < spec.scale:
            self.variables[var] = replace(spec, scale=scale)
            for a in self.var_axes(var):
                self.axes[a] = replace(self.axes[a], scale=scale)

    def build(self, note: str = "") -> Integrand:
        core = FactorIntegrand(tuple(self.axes), tuple(self.factors),
                               self.prefactor, self.zero)
        return Integrand(tuple(self.variables), core, note)


def _vertex_pairs(builder, config, kernels, leg_var):
    for v, degree in enumerate(config.legset.degrees, start=1):
        entry = kernels.get(degree)
        builder.prefactor *= entry.coupling
        if entry.coupling == 0.0:
            builder.zero = True
        legs = [leg for leg in config.legset.legs if leg.vertex == v]
        for i in range(len(legs)):
            for j in range(i + 1, len(legs)):
                builder.add_pair(leg_var[legs[i]], leg_var[legs[j]],
                                 entry.pair.of_diff2, entry.pair.width,
                                 f"pair[v{v}]")
        for leg in legs:
            builder.add_cutoff(leg_var[leg], kernels.cutoff)


def build_integrand(config: Configuration, kernels: VertexKernelSet,
                    model: NoiseModel, field: TestField, t: float, T0: float,
                    mode: str = "incremental") -> Integrand:
    """Bind a configuration to kernels, noise model, field and scales."""
    d = model.dimension
    if field.bumps and field.dimension != d:
        raise ValueError("field dimension does not match the model")
    for degree in set(config.legset.degrees):
        kernels.get(degree)
    builder = _IntegrandBuilder(d)
    if config.n_vertices == 0:
        return builder.build("empty configuration")

    leg_var: dict = {}
    note = ""
    if model.kind == "poisson":
        for b, block in enumerate(config.blocks):
            kern = cumulant_kernel(model, len(block), t, T0, mode)
            if kern.is_zero:
                builder.zero = True
                builder.prefactor = 0.0
                return builder.build("vanishing cumulant coefficient")
            var = builder.add_variable(f"block{b}", -kern.spatial_radius,
                                       kern.spatial_radius,
                                       kern.spatial_scale)
            builder.prefactor *= kern.coefficient
            builder.add_radial(var, kern.spatial, f"cumulant[{len(block)}]")
            for leg in block:
                leg_var[leg] = var
        note = "poisson diagonal collapse"
    else:
        if any(len(block) != 2 for block in config.blocks):
            builder.zero = True
            builder.prefactor = 0.0
            return builder.build("gaussian cumulants vanish beyond order 2")
        kern = cumulant_kernel(model, 2, t, T0, mode)
        if kern.is_zero:
            builder.zero = True
            builder.prefactor = 0.0
            return builder.build("vanishing gaussian kernel")
        radius = kernels.cutoff.outer_radius
        for b, block in enumerate(config.blocks):
            vars_ = []
            for leg in block:
                var = builder.add_variable(
                    f"leg{leg.vertex}.{leg.slot}", -radius, radius,
                    kern.pair_scale)
                leg_var[leg] = var
                vars_.append(var)
            builder.add_pair(vars_[0], vars_[1], kern.pair, kern.pair_scale,
                             f"propagator[{b}]")
        note = "gaussian pairing"

    if config.outer and field.is_zero:
        builder.zero = True
        builder.prefactor = 0.0
        return builder.build("zero field on outer legs")
    lo, hi = field.support_box
    for leg in config.outer:
        var = builder.add_variable(f"outer{leg.vertex}.{leg.slot}", lo, hi,
                                   field.feature_scale)
        leg_var[leg] = var
        builder.add_field(var, field, -1.0, "field")

    _vertex_pairs(builder, config, kernels, leg_var)
    return builder.build(note)


def integrate(ig: Integrand, scheme: QuadratureSpec,
              tol: float | None = None,
              seed_seq=None) -> IntegrationResult:
    """Integrate a bound integrand; zero integrands cost nothing."""
    spec = scheme if tol is None else replace(scheme, tol=tol)
    return integrate_factors(ig.core, spec, seed_seq)


def evaluate_configuration(config: Configuration, kernels: VertexKernelSet,
                           model: NoiseModel, field: TestField,
                           t: float, T0: float, scheme: QuadratureSpec,
                           tol: float | None = None,
                           mode: str = "incremental") -> IntegrationResult:
    """Analytic value of one configuration at the given scales and field.

    Deterministic: Monte Carlo substreams are derived from the scheme seed
    and the configuration's canonical form.
    """
    ig = build_integrand(config, kernels, model, field, t, T0, mode)
    seed_seq = None
    if scheme.kind == "monte_carlo":
        seed_seq = derive_seed(scheme.seed, config.canonical())
    return integrate(ig, scheme, tol, seed_seq)
