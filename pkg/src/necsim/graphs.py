"""Labeled simple graphs with canonical bitset adjacency.

A graph on nodes {1..n} is stored as the pair (n, adj) where bit k of the
integer ``adj`` holds the k-th unordered pair (i, j), i < j, taken in
row-major order by smaller endpoint: (1,2), (1,3), ..., (1,n), (2,3), ...,
(n-1,n). Equality of (n, adj) is graph equality, so the encoding is
canonical and hashable. The text form is ``n:HEX`` with ``adj`` written as
lowercase hex; the 3-node graph with edges {1,2} and {1,3} reads ``3:3``.

Full state-space enumeration (all graphs on 1..n_max nodes) is capped at
ENUM_CAP because the number of graphs grows as 2^(n(n-1)/2) per level;
simulation-only code paths accept graphs up to SIM_CAP nodes since they
never materialize the space.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .errors import BoundsError, InvalidDeletionError

ENUM_CAP = 6
SIM_CAP = 64

_GRAPH_RE = re.compile(r"^(\d+):([0-9a-f]+)$")


def pair_count(n: int) -> int:
    """Number of unordered node pairs on n nodes."""
    return n * (n - 1) // 2


def pair_index(n: int, i: int, j: int) -> int:
    """Bit position of pair (i, j), 1 <= i < j <= n, in the fixed layout."""
    return (i - 1) * (2 * n - i) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def _pair_table(n: int) -> tuple[tuple[int, int], ...]:
    """Inverse of pair_index: bit position -> (i, j)."""
    return tuple((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1))


@dataclass(frozen=True, slots=True)
class LabeledGraph:
    """Immutable labeled simple graph on nodes {1..n}.

    ``adj`` must only use the first n(n-1)/2 bits; no self-loops or
    multi-edges are representable.
    """

    n: int
    adj: int = 0

    def __post_init__(self):
        if not 1 <= self.n <= SIM_CAP:
            raise BoundsError(f"node count must lie in [1, {SIM_CAP}], got {self.n}")
        if self.adj < 0 or self.adj >> pair_count(self.n):
            raise ValueError(
                f"adjacency bitset uses bits beyond the {pair_count(self.n)} "
                f"pairs of a {self.n}-node graph"
            )

    @property
    def edge_count(self) -> int:
        return self.adj.bit_count()

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        if i > j:
            i, j = j, i
        if not 1 <= i < j <= self.n:
            raise ValueError(f"pair ({i},{j}) out of range for n={self.n}")
        return bool(self.adj >> pair_index(self.n, i, j) & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield edges as (i, j) with i < j, ascending bit position."""
        table = _pair_table(self.n)
        a = self.adj
        while a:
            low = a & -a
            yield table[low.bit_length() - 1]
            a ^= low

    def encode(self) -> str:
        return f"{self.n}:{self.adj:x}"

    def __str__(self) -> str:
        return self.encode()


SINGLE_NODE = LabeledGraph(1, 0)


def parse_graph(text: str) -> LabeledGraph:
    """Parse the ``n:HEX`` text encoding."""
    m = _GRAPH_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a graph encoding: {text!r}")
    return LabeledGraph(int(m.group(1)), int(m.group(2), 16))


def triangle_count(g: LabeledGraph) -> int:
    """Number of 3-cliques, counted combinatorially over node triples.

    Each triangle {i<j<k} is counted once, at its lexicographically first
    edge (i, j), by intersecting neighbor masks above j.
    """
    if g.n < 3 or g.adj == 0:
        return 0
    masks = [0] * (g.n + 1)
    edge_list = list(g.edges())
    for i, j in edge_list:
        masks[i] |= 1 << j
        masks[j] |= 1 << i
    total = 0
    for i, j in edge_list:
        total += (masks[i] & masks[j] & -(1 << (j + 1))).bit_count()
    return total


def delete_node(g: LabeledGraph, label: int) -> LabeledGraph:
    """Remove the node with the given label and compact labels.

    Edges among surviving nodes are preserved; every surviving label
    greater than ``label`` is reduced by one.
    """
    if g.n == 1:
        raise InvalidDeletionError("cannot delete the last node of a graph")
    if not 1 <= label <= g.n:
        raise ValueError(f"label {label} out of range 1..{g.n}")
    n2 = g.n - 1
    adj2 = 0
    for i, j in g.edges():
        if i == label or j == label:
            continue
        adj2 |= 1 << pair_index(n2, i - (i > label), j - (j > label))
    return LabeledGraph(n2, adj2)


def add_node(g: LabeledGraph, edge_pattern: int) -> LabeledGraph:
    """Append node n+1 wired to existing nodes per ``edge_pattern``.

    Bit i-1 of the pattern requests the edge {i, n+1}; existing edges are
    unchanged.
    """
    if edge_pattern < 0 or edge_pattern >> g.n:
        raise ValueError(
            f"edge pattern must use exactly {g.n} bits, got {edge_pattern:#x}"
        )
    if g.n >= SIM_CAP:
        raise BoundsError(f"cannot grow beyond {SIM_CAP} nodes")
    n2 = g.n + 1
    adj2 = 0
    for i, j in g.edges():
        adj2 |= 1 << pair_index(n2, i, j)
    p = edge_pattern
    while p:
        low = p & -p
        adj2 |= 1 << pair_index(n2, low.bit_length(), n2)
        p ^= low
    return LabeledGraph(n2, adj2)


def split_highest(g: LabeledGraph) -> tuple[LabeledGraph, int]:
    """Inverse of add_node: drop node n, returning (rest, its edge pattern)."""
    if g.n == 1:
        raise InvalidDeletionError("cannot split a single-node graph")
    n2 = g.n - 1
    adj2 = 0
    pattern = 0
    for i, j in g.edges():
        if j == g.n:
            pattern |= 1 << (i - 1)
        else:
            adj2 |= 1 << pair_index(n2, i, j)
    return LabeledGraph(n2, adj2), pattern


class StateSpace:
    """All labeled graphs on 1..n_max nodes, in a fixed order.

    Order: ascending node count, then ascending adjacency bitset value.
    Graph ids are dense integers; id <-> graph conversion is O(1) from the
    per-level offsets, so the space is never materialized as objects.
    """

    def __init__(self, n_max: int):
        if not 1 <= n_max <= ENUM_CAP:
            raise BoundsError(
                f"state-space enumeration supports n_max in [1, {ENUM_CAP}], got {n_max}"
            )
        self.n_max = n_max
        offsets = [0]
        for n in range(1, n_max + 1):
            offsets.append(offsets[-1] + (1 << pair_count(n)))
        self._offsets = tuple(offsets)

    def __len__(self) -> int:
        return self._offsets[-1]

    def __iter__(self) -> Iterator[LabeledGraph]:
        for n in range(1, self.n_max + 1):
            for adj in range(1 << pair_count(n)):
                yield LabeledGraph(n, adj)

    def ids_for(self, n: int) -> range:
        """Dense id range of the graphs with exactly n nodes."""
        if not 1 <= n <= self.n_max:
            raise BoundsError(f"node count {n} outside [1, {self.n_max}]")
        return range(self._offsets[n - 1], self._offsets[n])

    def graph(self, idx: int) -> LabeledGraph:
        if not 0 <= idx < len(self):
            raise IndexError(f"graph id {idx} outside [0, {len(self)})")
        for n in range(1, self.n_max + 1):
            if idx < self._offsets[n]:
                return LabeledGraph(n, idx - self._offsets[n - 1])
        raise AssertionError("unreachable")

    def index(self, g: LabeledGraph) -> int:
        if g.n > self.n_max:
            raise BoundsError(
                f"graph {g.encode()} has more than n_max={self.n_max} nodes"
            )
        return self._offsets[g.n - 1] + g.adj

    def __contains__(self, g: LabeledGraph) -> bool:
        return isinstance(g, LabeledGraph) and g.n <= self.n_max


def enumerate_state_space(n_max: int) -> StateSpace:
    """State space of all labeled graphs with 1..n_max nodes."""
    return StateSpace(n_max)
