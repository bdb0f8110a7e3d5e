"""Graded enumeration of nonnegative integer multi-indices.

Multi-indices are plain tuples of nonnegative ints. A :class:`GradedBasis`
concatenates the layers of total order ``1..N``; inside a layer the order
is graded-lexicographic descending, e.g. ``(2,0), (1,1), (0,2)``.
Flat positions are 0-based and the order-0 index is never part of a basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidArgument, NotFound

MultiIndex = tuple[int, ...]


def order(m: Sequence[int]) -> int:
    """Total order ``|m|`` of a nonnegative multi-index."""
    return int(sum(m))


@lru_cache(maxsize=None)
def _layer(d: int, k: int) -> tuple[MultiIndex, ...]:
    # k == 0 is allowed internally so the recursion can bottom out
    if d == 1:
        return ((k,),)
    out: list[MultiIndex] = []
    for first in range(k, -1, -1):
        out.extend((first,) + rest for rest in _layer(d - 1, k - first))
    return tuple(out)


def enumerate_layer(d: int, k: int) -> list[MultiIndex]:
    """All multi-indices of order ``k`` in ``d`` variables, graded-lex descending."""
    if d < 1 or k < 1:
        raise InvalidArgument(f"need d >= 1 and k >= 1, got d={d}, k={k}")
    return list(_layer(d, k))


def layer_size(d: int, k: int) -> int:
    """Number of multi-indices of order ``k`` in ``d`` variables."""
    if d < 1 or k < 0:
        raise InvalidArgument(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    return comb(k + d - 1, d - 1)


def total_dimension(d: int, N: int) -> int:
    """Number of multi-indices of order ``1..N`` in ``d`` variables."""
    if d < 1 or N < 1:
        raise InvalidArgument(f"need d >= 1 and N >= 1, got d={d}, N={N}")
    return comb(N + d, d) - 1


def indices_up_to(d: int, N: int) -> list[MultiIndex]:
    """Multi-indices of order ``0..N``, the zero index first."""
    out: list[MultiIndex] = [(0,) * d]
    for k in range(1, N + 1):
        out.extend(_layer(d, k))
    return out


@dataclass(frozen=True)
class GradedBasis:
    """Layers of multi-indices of order ``1..N`` with their flat offsets."""

    d: int
    N: int
    layers: tuple[tuple[MultiIndex, ...], ...] = field(init=False, repr=False)
    offsets: tuple[int, ...] = field(init=False, repr=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise InvalidArgument(f"need d >= 1 and N >= 1, got d={self.d}, N={self.N}")
        layers = tuple(_layer(self.d, k) for k in range(1, self.N + 1))
        offsets = [0]
        for layer in layers:
            offsets.append(offsets[-1] + len(layer))
        index = {m: p for p, m in enumerate(m for layer in layers for m in layer)}
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "offsets", tuple(offsets))
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return self.offsets[-1]

    def __iter__(self) -> Iterator[MultiIndex]:
        for layer in self.layers:
            yield from layer

    def __getitem__(self, position: int) -> MultiIndex:
        k = int(np.searchsorted(self.offsets, position, side="right"))
        if position < 0 or k > self.N:
            raise IndexError(position)
        return self.layers[k - 1][position - self.offsets[k - 1]]

    def layer(self, k: int) -> tuple[MultiIndex, ...]:
        return self.layers[k - 1]

    def layer_slice(self, k: int) -> slice:
        """Flat slice covering layer ``k`` (1-based)."""
        if not 1 <= k <= self.N:
            raise NotFound(f"layer {k} outside 1..{self.N}")
        return slice(self.offsets[k - 1], self.offsets[k])

    def position_of(self, m: Sequence[int]) -> int:
        key = tuple(int(v) for v in m)
        try:
            return self._index[key]
        except KeyError:
            raise NotFound(f"multi-index {key} is not in the basis (d={self.d}, N={self.N})") from None

    def contains(self, m: Sequence[int]) -> bool:
        return tuple(m) in self._index

    def as_array(self) -> np.ndarray:
        """Integer array of shape ``(len(self), d)`` listing the basis in order."""
        return np.array(list(self), dtype=np.int64).reshape(len(self), self.d)


def position_of(basis: GradedBasis, m: Sequence[int]) -> int:
    """0-based flat position of ``m`` in ``basis``; raises ``NotFound`` if absent."""
    return basis.position_of(m)
