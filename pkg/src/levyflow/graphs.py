"""Leg sets, graph configurations, and their connectivity classification.

A configuration is a pair (outer legs, block partition of the remaining
legs) over the leg set of a tuple of vertex degrees.  Configurations are
labeled objects: no isomorphism reduction or symmetry factors anywhere.

Canonical text form (stable wire format, used for goldens, logs and the
CLI): ``m;p1,...,pm;K=(v,s)(v,s)...;I=[(v,s)(v,s)|(v,s)...]`` where K lists
the outer legs and I the blocks, both in canonical order.  The empty
configuration is ``0;;K=;I=[]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

from .combinatorics import (
    PARTITION_LIMIT,
    EnumerationLimitError,
    IndexSet,
    SetPartition,
    _rgs,
)

__all__ = [
    "LegLabel",
    "LegSet",
    "Configuration",
    "GraphClass",
    "build_leg_set",
    "enumerate_configurations",
    "count_configurations",
    "is_connected",
    "is_vacuum",
    "connected_components",
    "classical_reduction",
    "classify",
    "has_vacuum_component",
    "parse_canonical",
]


class LegLabel(NamedTuple):
    vertex: int
    slot: int


@dataclass(frozen=True)
class LegSet:
    """All legs of m labeled vertices with degrees (p_1, ..., p_m)."""

    degrees: tuple[int, ...]
    legs: tuple[LegLabel, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.degrees)

    def __len__(self):
        return len(self.legs)


def build_leg_set(degrees) -> LegSet:
    """Legs in lexicographic (vertex, slot) order; degrees must be >= 1."""
    degrees = tuple(int(p) for p in degrees)
    if any(p < 1 for p in degrees):
        raise ValueError("vertex degrees must be >= 1 (degree-0 vertices are "
                         "scalar factors handled by the flow assembly)")
    legs = tuple(LegLabel(v + 1, s + 1)
                 for v, p in enumerate(degrees) for s in range(p))
    return LegSet(degrees, legs)


@dataclass(frozen=True)
class Configuration:
    """Outer-leg subset plus a block partition of the remaining legs."""

    legset: LegSet
    outer: tuple[LegLabel, ...]
    blocks: tuple[tuple[LegLabel, ...], ...]

    def validate(self):
        seen = set(self.outer)
        if len(seen) != len(self.outer):
            raise ValueError("duplicate outer legs")
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            for leg in block:
                if leg in seen:
                    raise ValueError(f"leg {leg} bound twice")
                seen.add(leg)
        if seen != set(self.legset.legs):
            raise ValueError("outer legs and blocks must exhaust the leg set")

    @property
    def n_vertices(self) -> int:
        return self.legset.n_vertices

    def canonical(self) -> str:
        deg = ",".join(str(p) for p in self.legset.degrees)
        k = "".join(f"({v},{s})" for v, s in self.outer)
        blocks = "|".join("".join(f"({v},{s})" for v, s in b)
                          for b in self.blocks)
        return f"{self.n_vertices};{deg};K={k};I=[{blocks}]"


_LEG_RE = re.compile(r"\((\d+),(\d+)\)")


def parse_canonical(text: str) -> Configuration:
    """Inverse of :meth:`Configuration.canonical`."""
    try:
        m_part, deg_part, k_part, i_part = text.split(";")
        m = int(m_part)
        degrees = tuple(int(p) for p in deg_part.split(",")) if deg_part else ()
        if not k_part.startswith("K=") or not i_part.startswith("I=["):
            raise ValueError
        outer = tuple(LegLabel(int(a), int(b))
                      for a, b in _LEG_RE.findall(k_part[2:]))
        body = i_part[3:].rstrip("]")
        blocks = tuple(tuple(LegLabel(int(a), int(b))
                             for a, b in _LEG_RE.findall(part))
                       for part in body.split("|") if part)
    except ValueError as exc:
        raise ValueError(f"malformed configuration text {text!r}") from exc
    if m != len(degrees):
        raise ValueError(f"vertex count {m} does not match degrees {degrees}")
    config = Configuration(build_leg_set(degrees), outer, blocks)
    config.validate()
    return config


@dataclass(frozen=True)
class GraphClass:
    connected: bool
    vacuum: bool
    classical: bool


def enumerate_configurations(
    degrees,
    predicate: Callable[[Configuration], bool] | None = None,
    limit: int = PARTITION_LIMIT,
) -> Iterator[Configuration]:
    """Stream every configuration exactly once, deterministically ordered.

    Outer subsets come in bitmask order over the lexicographic leg list;
    for each subset the partitions of the remaining legs follow in
    restricted-growth order.  Total count is sum_K Bell(|legs \\ K|).
    """
    legset = build_leg_set(degrees)
    n = len(legset)
    if n > limit:
        raise EnumerationLimitError(
            f"total degree {n} exceeds the enumeration limit {limit}")
    legs = legset.legs
    for mask in range(1 << n):
        outer = tuple(legs[i] for i in range(n) if mask >> i & 1)
        rest = [legs[i] for i in range(n) if not (mask >> i & 1)]
        if not rest:
            config = Configuration(legset, outer, ())
            if predicate is None or predicate(config):
                yield config
            continue
        r = len(rest)
        for a in _rgs(r):
            k = max(a) + 1
            blocks = [[] for _ in range(k)]
            for i, bi in enumerate(a):
                blocks[bi].append(rest[i])
            config = Configuration(legset, outer,
                                   tuple(tuple(b) for b in blocks))
            if predicate is None or predicate(config):
                yield config


def count_configurations(degrees) -> int:
    """Closed-form count: sum over outer subsets of Bell numbers."""
    import math as _math

    from .combinatorics import bell_number

    n = sum(int(p) for p in degrees)
    return sum(_math.comb(n, k) * bell_number(n - k) for k in range(n + 1))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _vertex_components(c: Configuration) -> list[list[int]]:
    m = c.n_vertices
    uf = _UnionFind(m)
    for block in c.blocks:
        first = block[0].vertex - 1
        for leg in block[1:]:
            uf.union(first, leg.vertex - 1)
    groups: dict[int, list[int]] = {}
    for v in range(m):
        groups.setdefault(uf.find(v), []).append(v + 1)
    return sorted(groups.values(), key=lambda g: g[0])


def is_connected(c: Configuration) -> bool:
    """Whether all vertices are linked through shared blocks.

    Outer legs never join components; the empty configuration counts as
    not connected.
    """
    if c.n_vertices == 0:
        return False
    return len(_vertex_components(c)) == 1


def is_vacuum(c: Configuration) -> bool:
    """No outer legs at all: the value is field-independent."""
    return len(c.outer) == 0


def connected_components(c: Configuration) -> SetPartition:
    """Partition of the vertex indices 1..m by block-sharing."""
    groups = _vertex_components(c)
    if not groups:
        return SetPartition(())
    return SetPartition.of(groups, IndexSet.range(c.n_vertices))


def classical_reduction(c: Configuration):
    """The perfect-matching view if every block has size 2, else None."""
    if any(len(b) != 2 for b in c.blocks):
        return None
    return tuple((b[0], b[1]) for b in c.blocks)


def classify(c: Configuration) -> GraphClass:
    return GraphClass(
        connected=is_connected(c),
        vacuum=is_vacuum(c),
        classical=classical_reduction(c) is not None,
    )


def has_vacuum_component(c: Configuration) -> bool:
    """True if some connected component carries no outer leg.

    Degree-0 vertices never appear here (they are excluded from leg sets),
    but any vertex group whose legs are all bound into blocks qualifies.
    The empty configuration has no components and returns False.
    """
    if c.n_vertices == 0:
        return False
    outer_vertices = {leg.vertex for leg in c.outer}
    for group in _vertex_components(c):
        if not outer_vertices.intersection(group):
            return True
    return False
