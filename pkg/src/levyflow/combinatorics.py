"""Exact subset and set-partition enumeration and moment/cumulant transforms.

All operations are pure functions on immutable inputs.  Enumeration output
is deterministic: subsets come in bitmask order, partitions in
restricted-growth-string order, with blocks canonically sorted by their
smallest element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

__all__ = [
    "IndexSet",
    "SetPartition",
    "CumulantSequence",
    "EnumerationLimitError",
    "SUBSET_LIMIT",
    "PARTITION_LIMIT",
    "subsets",
    "iter_subsets",
    "set_partitions",
    "iter_set_partitions",
    "bell_number",
    "moments_from_cumulants",
    "cumulants_from_moments",
]

SUBSET_LIMIT = 20
PARTITION_LIMIT = 14
BELL_LIMIT = 25


class EnumerationLimitError(ValueError):
    """A materializing enumeration was asked to exceed its size limit."""


@dataclass(frozen=True)
class IndexSet:
    """An ordered finite set of distinct hashable labels."""

    elements: tuple

    def __post_init__(self):
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("IndexSet labels must be distinct")

    @classmethod
    def of(cls, iterable) -> "IndexSet":
        return cls(tuple(iterable))

    @classmethod
    def range(cls, n: int) -> "IndexSet":
        return cls(tuple(range(1, n + 1)))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, item):
        return item in self.elements


@dataclass(frozen=True)
class SetPartition:
    """A partition of a finite set into disjoint non-empty blocks.

    Blocks are stored sorted by smallest element, elements sorted within
    each block (element order taken from the parent IndexSet).
    """

    blocks: tuple[tuple, ...]

    @classmethod
    def of(cls, blocks, parent: IndexSet | None = None) -> "SetPartition":
        order = None
        if parent is not None:
            order = {e: i for i, e in enumerate(parent.elements)}
        key = (lambda e: order[e]) if order else (lambda e: e)
        canon = tuple(sorted((tuple(sorted(b, key=key)) for b in blocks),
                             key=lambda b: key(b[0])))
        part = cls(canon)
        part.validate(parent)
        return part

    def validate(self, parent: IndexSet | None = None):
        seen = set()
        for block in self.blocks:
            if not block:
                raise ValueError("empty block in partition")
            for e in block:
                if e in seen:
                    raise ValueError(f"element {e!r} appears in two blocks")
                seen.add(e)
        if parent is not None and seen != set(parent.elements):
            raise ValueError("blocks do not cover the parent set")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)


def iter_subsets(s: IndexSet) -> Iterator[IndexSet]:
    """All subsets of ``s`` in bitmask order (bit i = element i present)."""
    elems = s.elements
    n = len(elems)
    for mask in range(1 << n):
        yield IndexSet(tuple(elems[i] for i in range(n) if mask >> i & 1))


def subsets(s: IndexSet, limit: int = SUBSET_LIMIT) -> list[IndexSet]:
    if len(s) > limit:
        raise EnumerationLimitError(
            f"refusing to materialize 2^{len(s)} subsets (limit {limit})")
    return list(iter_subsets(s))


def _rgs(n: int) -> Iterator[list[int]]:
    # restricted growth strings: a[0]=0, a[i] <= max(a[:i]) + 1
    a = [0] * n
    b = [0] * n  # b[i] = max(a[:i+1]) prefix maxima
    while True:
        yield a
        i = n - 1
        while i > 0 and a[i] == b[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        b[i] = max(b[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            b[j] = b[i]


def iter_set_partitions(s: IndexSet) -> Iterator[SetPartition]:
    """All partitions of ``s``, streamed in restricted-growth order."""
    elems = s.elements
    n = len(elems)
    if n == 0:
        yield SetPartition(())
        return
    for a in _rgs(n):
        k = max(a) + 1
        blocks = [[] for _ in range(k)]
        for i, bi in enumerate(a):
            blocks[bi].append(elems[i])
        yield SetPartition(tuple(tuple(b) for b in blocks))


def set_partitions(s: IndexSet, limit: int = PARTITION_LIMIT) -> list[SetPartition]:
    if len(s) > limit:
        raise EnumerationLimitError(
            f"refusing to materialize Bell({len(s)}) partitions (limit {limit})")
    return list(iter_set_partitions(s))


def bell_number(n: int) -> int:
    """Exact Bell number via the Bell-triangle recurrence (n <= 25)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > BELL_LIMIT:
        raise EnumerationLimitError(f"bell_number limited to n <= {BELL_LIMIT}")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


@dataclass(frozen=True)
class CumulantSequence:
    """Scalar cumulant coefficients kappa_1..kappa_N, indexed from 1."""

    values: tuple

    @classmethod
    def of(cls, values: Sequence) -> "CumulantSequence":
        return cls(tuple(values))

    @property
    def order(self) -> int:
        return len(self.values)

    def get(self, n: int):
        if not 1 <= n <= self.order:
            raise KeyError(f"cumulant order {n} not available (have 1..{self.order})")
        return self.values[n - 1]


def _accumulate(terms):
    if all(isinstance(t, float) for t in terms):
        return math.fsum(terms)
    return sum(terms)


@lru_cache(maxsize=None)
def _partition_shapes(n: int) -> tuple[tuple[int, ...], ...]:
    # block-size tuples of every partition of {1..n}, in enumeration order
    return tuple(part.block_sizes()
                 for part in iter_set_partitions(IndexSet.range(n)))


def moments_from_cumulants(c: CumulantSequence, n: int):
    """n-th moment as the sum over set partitions of products of cumulants.

    Computed literally as the per-partition sum (one product per partition,
    exactly rounded accumulation) so that comparisons with an independent
    partition enumerator using the same arithmetic agree bit for bit.
    Fraction-valued cumulants are carried exactly; the float round trip
    with :func:`cumulants_from_moments` is limited by the conditioning of
    the inversion (use Fractions where strict identity matters).
    """
    if n == 0:
        return 1.0
    if c.order < n:
        raise KeyError(f"cumulant order {n} not available (have 1..{c.order})")
    values = c.values
    terms = []
    for sizes in _partition_shapes(n):
        prod = values[sizes[0] - 1]
        for size in sizes[1:]:
            prod = prod * values[size - 1]
        terms.append(prod)
    return _accumulate(terms)


def cumulants_from_moments(m: Sequence, n: int):
    """n-th cumulant by Moebius inversion on the partition lattice.

    ``m`` holds the moments m_1..m_N (index 0 is m_1).
    """
    if n == 0:
        return 0.0
    if len(m) < n:
        raise KeyError(f"moment order {n} not available (have 1..{len(m)})")
    terms = []
    for sizes in _partition_shapes(n):
        k = len(sizes)
        prod = math.factorial(k - 1) * (-1) ** (k - 1)
        for size in sizes:
            prod = prod * m[size - 1]
        terms.append(prod)
    return _accumulate(terms)
