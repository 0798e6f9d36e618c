"""Run-configuration parsing and validation.

A run is described by one YAML document (a key-value tree with typed
leaves).  Validation is complete, not first-error: every problem is
reported with its path into the tree.  See README for the schema.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import yaml

from .evaluator import (
    CutoffRegion,
    PairProfile,
    TestField,
    VertexKernel,
    VertexKernelSet,
)
from .noise_models import (
    ChargeMeasure,
    GaussianModel,
    IntensityProfile,
    NoiseModel,
    PoissonModel,
)
from .quadrature import QuadratureSpec

__all__ = ["ConfigError", "RunConfig", "parse_config"]

JOB_KINDS = ("enumerate", "evaluate", "series", "counterterm", "scan", "oracle")
SERIES_KINDS = ("partition", "effective", "correlation", "renormalized")
ENUM_FILTERS = ("all", "connected", "vacuum", "classical")
ORACLE_CHECKS = ("mc_correlation", "exp_series", "partition_transform")


class ConfigError(ValueError):
    """Carries the full list of (path, message) validation failures."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "\n".join(f"  {path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid configuration:\n{lines}")


@dataclass(frozen=True)
class RunConfig:
    model: NoiseModel
    kernels: VertexKernelSet
    field: TestField
    job_kind: str
    job: dict
    scheme: QuadratureSpec
    order: int
    t: float
    t0: float
    mode: str
    seed: int | None
    out_dir: str
    plot_data: bool


class _Checker:
    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def fail(self, path, msg):
        self.errors.append((path, msg))

    def expect_keys(self, mapping, path, required, optional=()):
        if not isinstance(mapping, dict):
            self.fail(path, f"expected a mapping, got {type(mapping).__name__}")
            return False
        for key in mapping:
            if key not in required and key not in optional:
                self.fail(f"{path}.{key}", "unknown key")
        ok = True
        for key in required:
            if key not in mapping:
                self.fail(f"{path}.{key}", "missing required key")
                ok = False
        return ok

    def number(self, value, path, positive=False):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.fail(path, f"expected a number, got {value!r}")
            return None
        if positive and value <= 0:
            self.fail(path, "must be positive")
            return None
        return float(value)

    def integer(self, value, path, minimum=None):
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, f"expected an integer, got {value!r}")
            return None
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}")
            return None
        return value

    def choice(self, value, path, options):
        if value not in options:
            self.fail(path, f"expected one of {sorted(options)}, got {value!r}")
            return None
        return value


def _parse_model(ck: _Checker, raw: Any) -> NoiseModel | None:
    if not ck.expect_keys(raw, "model", ("kind",),
                          ("charges", "profile", "kernel", "dimension")):
        return None
    kind = ck.choice(raw["kind"], "model.kind", ("poisson", "gaussian"))
    dim = ck.integer(raw.get("dimension", 1), "model.dimension", minimum=1)
    if kind == "poisson":
        charges_raw = raw.get("charges")
        if not isinstance(charges_raw, list) or not charges_raw:
            ck.fail("model.charges", "expected a non-empty list of [charge, weight] pairs")
            return None
        atoms = []
        for i, pair in enumerate(charges_raw):
            if (not isinstance(pair, list) or len(pair) != 2
                    or any(not isinstance(v, (int, float)) for v in pair)):
                ck.fail(f"model.charges[{i}]", "expected [charge, weight]")
                return None
            atoms.append((float(pair[0]), float(pair[1])))
        prof_raw = raw.get("profile", {})
        if not ck.expect_keys(prof_raw, "model.profile", (), ("shape", "amplitude")):
            return None
        try:
            charges = ChargeMeasure.of(atoms)
            profile = IntensityProfile(prof_raw.get("shape", "bump"),
                                       float(prof_raw.get("amplitude", 1.0)),
                                       dim or 1)
            return PoissonModel(charges, profile)
        except ValueError as exc:
            ck.fail("model", str(exc))
            return None
    if kind == "gaussian":
        kern_raw = raw.get("kernel", {})
        if not ck.expect_keys(kern_raw, "model.kernel", (), ("name", "scale_law")):
            return None
        try:
            return GaussianModel(kern_raw.get("name", "heat"),
                                 kern_raw.get("scale_law", "square"),
                                 dim or 1)
        except ValueError as exc:
            ck.fail("model.kernel", str(exc))
            return None
    return None


def _parse_kernels(ck: _Checker, raw: Any) -> VertexKernelSet | None:
    if not ck.expect_keys(raw, "kernels", ("entries",), ("constant", "cutoff")):
        return None
    entries = []
    raw_entries = raw["entries"]
    if not isinstance(raw_entries, list):
        ck.fail("kernels.entries", "expected a list")
        return None
    for i, e in enumerate(raw_entries):
        path = f"kernels.entries[{i}]"
        if not ck.expect_keys(e, path, ("degree", "coupling"), ("pair_width",)):
            continue
        degree = ck.integer(e["degree"], f"{path}.degree", minimum=1)
        coupling = ck.number(e["coupling"], f"{path}.coupling")
        width = ck.number(e.get("pair_width", 1.0), f"{path}.pair_width",
                          positive=True)
        if None not in (degree, coupling, width):
            entries.append(VertexKernel(degree, coupling,
                                        PairProfile("gaussian", width)))
    constant = ck.number(raw.get("constant", 0.0), "kernels.constant")
    cutoff_raw = raw.get("cutoff", {})
    if not ck.expect_keys(cutoff_raw, "kernels.cutoff", (), ("radius", "shoulder")):
        return None
    radius = ck.number(cutoff_raw.get("radius", 50.0), "kernels.cutoff.radius",
                       positive=True)
    sh = ck.number(cutoff_raw.get("shoulder", 1.0), "kernels.cutoff.shoulder",
                   positive=True)
    if ck.errors:
        return None
    try:
        return VertexKernelSet.of(entries, constant=constant or 0.0,
                                  cutoff=CutoffRegion(radius, sh))
    except ValueError as exc:
        ck.fail("kernels", str(exc))
        return None


def _parse_field(ck: _Checker, raw: Any, dimension: int) -> TestField | None:
    if raw is None:
        return TestField.zero(dimension)
    if not ck.expect_keys(raw, "field", (), ("bumps",)):
        return None
    bumps = []
    for i, b in enumerate(raw.get("bumps", [])):
        path = f"field.bumps[{i}]"
        if not ck.expect_keys(b, path, ("center", "width", "height")):
            continue
        center = b["center"]
        if not isinstance(center, list) or len(center) != dimension:
            ck.fail(f"{path}.center", f"expected a list of {dimension} numbers")
            continue
        width = ck.number(b["width"], f"{path}.width", positive=True)
        height = ck.number(b["height"], f"{path}.height")
        if None not in (width, height):
            bumps.append((tuple(float(c) for c in center), width, height))
    if ck.errors:
        return None
    return TestField.of(bumps, dimension)


def _parse_job(ck: _Checker, raw: Any, kernels: VertexKernelSet | None):
    if not isinstance(raw, dict):
        ck.fail("job", "expected a mapping with exactly one job kind")
        return None, None
    kinds = [k for k in raw if k in JOB_KINDS]
    unknown = [k for k in raw if k not in JOB_KINDS]
    for k in unknown:
        ck.fail(f"job.{k}", "unknown job kind")
    if len(kinds) != 1:
        ck.fail("job", f"exactly one job required, found {len(kinds)}")
        return None, None
    kind = kinds[0]
    body = raw[kind] or {}
    path = f"job.{kind}"
    if kind == "enumerate":
        if ck.expect_keys(body, path, ("degrees",), ("filter",)):
            degrees = body["degrees"]
            if (not isinstance(degrees, list) or not degrees
                    or any(not isinstance(p, int) or p < 1 for p in degrees)):
                ck.fail(f"{path}.degrees", "expected a list of positive integers")
            ck.choice(body.get("filter", "all"), f"{path}.filter", ENUM_FILTERS)
    elif kind == "evaluate":
        if ck.expect_keys(body, path, ("graph",)):
            _check_graph(ck, body["graph"], f"{path}.graph", kernels)
    elif kind == "series":
        if ck.expect_keys(body, path, ("kind",)):
            ck.choice(body["kind"], f"{path}.kind", SERIES_KINDS)
    elif kind == "counterterm":
        ck.expect_keys(body, path, ())
    elif kind == "scan":
        if ck.expect_keys(body, path, ("quantity", "t0_values"), ("graph",)):
            q = ck.choice(body["quantity"], f"{path}.quantity", ("vacuum", "graph"))
            values = body["t0_values"]
            if (not isinstance(values, list) or len(values) < 4
                    or any(not isinstance(v, (int, float)) for v in values)):
                ck.fail(f"{path}.t0_values", "expected a list of at least 4 numbers")
            if q == "graph":
                if "graph" not in body:
                    ck.fail(f"{path}.graph", "required for quantity=graph")
                else:
                    _check_graph(ck, body["graph"], f"{path}.graph", kernels)
    elif kind == "oracle":
        if ck.expect_keys(body, path, ("check",), ("samples", "n_max")):
            ck.choice(body["check"], f"{path}.check", ORACLE_CHECKS)
            if "samples" in body:
                ck.integer(body["samples"], f"{path}.samples", minimum=1)
            if "n_max" in body:
                ck.integer(body["n_max"], f"{path}.n_max", minimum=1)
    return kind, body


def _check_graph(ck: _Checker, text: Any, path: str,
                 kernels: VertexKernelSet | None):
    from .graphs import parse_canonical

    if not isinstance(text, str):
        ck.fail(path, "expected a canonical configuration string")
        return
    try:
        config = parse_canonical(text)
    except ValueError as exc:
        ck.fail(path, str(exc))
        return
    if kernels is not None:
        for p in set(config.legset.degrees):
            if p not in kernels.entries:
                ck.fail(path, f"graph references degree {p} but no vertex "
                              f"kernel of degree {p} is configured")


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a YAML run description.

    Raises :class:`ConfigError` listing every validation failure with its
    path into the configuration tree.
    """
    ck = _Checker()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<document>", f"YAML parse error: {exc}")])
    if not isinstance(raw, dict):
        raise ConfigError([("<document>", "expected a mapping at top level")])
    ck.expect_keys(raw, "<document>",
                   ("model", "kernels", "job", "numerics"),
                   ("field", "output"))
    model = _parse_model(ck, raw.get("model", {}))
    kernels = _parse_kernels(ck, raw.get("kernels", {}))
    dim = model.dimension if model is not None else 1
    fld = _parse_field(ck, raw.get("field"), dim)
    job_kind, job = _parse_job(ck, raw.get("job", {}), kernels)

    num = raw.get("numerics", {})
    scheme = None
    order = 1
    t = t0 = 1.0
    mode = "incremental"
    seed = None
    if ck.expect_keys(num, "numerics", ("t0",),
                      ("scheme", "tol", "order", "seed", "t", "mode")):
        scheme_kind = ck.choice(num.get("scheme", "tensor_gk"),
                                "numerics.scheme", ("tensor_gk", "monte_carlo"))
        tol = ck.number(num.get("tol", 1e-8), "numerics.tol", positive=True)
        order = ck.integer(num.get("order", 1), "numerics.order", minimum=0)
        t0 = ck.number(num["t0"], "numerics.t0", positive=True)
        t = ck.number(num.get("t", t0 or 1.0), "numerics.t")
        mode = ck.choice(num.get("mode", "incremental"), "numerics.mode",
                         ("incremental", "absolute"))
        if "seed" in num:
            seed = ck.integer(num["seed"], "numerics.seed", minimum=0)
        needs_seed = (scheme_kind == "monte_carlo"
                      or (job_kind == "oracle"
                          and job.get("check") == "mc_correlation"))
        if needs_seed and seed is None:
            ck.fail("numerics.seed", "seed is required for stochastic schemes")
        if None not in (scheme_kind, tol):
            try:
                scheme = QuadratureSpec(kind=scheme_kind, tol=tol, seed=seed)
            except ValueError as exc:
                ck.fail("numerics.scheme", str(exc))

    out = raw.get("output", {}) or {}
    out_dir = "out"
    plot_data = False
    if ck.expect_keys(out, "output", (), ("directory", "plot_data")):
        out_dir = out.get("directory", "out")
        if not isinstance(out_dir, str):
            ck.fail("output.directory", "expected a string")
            out_dir = "out"
        plot_data = bool(out.get("plot_data", False))

    if ck.errors:
        raise ConfigError(ck.errors)
    return RunConfig(model=model, kernels=kernels, field=fld,
                     job_kind=job_kind, job=job, scheme=scheme,
                     order=order or 0, t=t if t is not None else t0, t0=t0,
                     mode=mode, seed=seed, out_dir=out_dir,
                     plot_data=plot_data)
