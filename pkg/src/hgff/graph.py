"""Hamming graph combinatorics.

Vertices of H(d, n) are words in {0, ..., n-1}^d.  A vertex is identified by
its integer rank, whose base-n digits (least significant first) are the word.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, DomainError

DEFAULT_CAP = 4096


def dense_cap() -> int:
    """Vertex cap for dense matrices; ``HGFF_CAP`` overrides the default."""
    raw = os.environ.get("HGFF_CAP")
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"HGFF_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DomainError(f"HGFF_CAP must be positive, got {cap}")
    return cap


def check_capacity(vertex_count: int, cap: int | None = None) -> None:
    cap = dense_cap() if cap is None else cap
    if vertex_count > cap:
        raise CapacityError(f"n^d = {vertex_count} exceeds the dense vertex cap {cap}")


@dataclass(frozen=True)
class GraphSpec:
    """The Hamming graph H(d, n)."""

    d: int
    n: int
    vertex_count: int = field(init=False)

    def __post_init__(self):
        if isinstance(self.d, bool) or isinstance(self.n, bool):
            raise DomainError("d and n must be integers")
        if int(self.d) != self.d or int(self.n) != self.n:
            raise DomainError(f"d and n must be integers, got d={self.d}, n={self.n}")
        if self.d < 2 or self.n < 2:
            raise DomainError(f"H(d,n) requires d >= 2 and n >= 2, got d={self.d}, n={self.n}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "vertex_count", self.n**self.d)

    def vertex(self, rank: int) -> "Vertex":
        return Vertex.from_rank(self, rank)

    def from_digits(self, digits: Sequence[int]) -> "Vertex":
        return Vertex.from_digits(self, digits)

    @property
    def origin(self) -> "Vertex":
        return Vertex(0, (0,) * self.d)

    def sphere_sizes(self) -> list[int]:
        return [sphere_size(self, i) for i in range(self.d + 1)]


def make_graph(d: int, n: int) -> GraphSpec:
    return GraphSpec(d, n)


@dataclass(frozen=True)
class Vertex:
    rank: int
    digits: tuple[int, ...]

    @classmethod
    def from_rank(cls, g: GraphSpec, rank: int) -> "Vertex":
        rank = int(rank)
        if not 0 <= rank < g.vertex_count:
            raise DomainError(f"rank {rank} outside [0, {g.vertex_count})")
        digits = []
        r = rank
        for _ in range(g.d):
            r, q = divmod(r, g.n)
            digits.append(q)
        return cls(rank, tuple(digits))

    @classmethod
    def from_digits(cls, g: GraphSpec, digits: Sequence[int]) -> "Vertex":
        digits = tuple(int(v) for v in digits)
        if len(digits) != g.d:
            raise DomainError(f"expected {g.d} digits, got {len(digits)}")
        if any(not 0 <= v < g.n for v in digits):
            raise DomainError(f"digits must lie in [0, {g.n}), got {digits}")
        rank = sum(v * g.n**k for k, v in enumerate(digits))
        return cls(rank, digits)


def _as_vertex(g: GraphSpec, x) -> Vertex:
    if isinstance(x, Vertex):
        if len(x.digits) != g.d or not 0 <= x.rank < g.vertex_count:
            raise DomainError(f"vertex {x} is not a vertex of H({g.d},{g.n})")
        return x
    if isinstance(x, (int, np.integer)):
        return Vertex.from_rank(g, int(x))
    return Vertex.from_digits(g, x)


@dataclass(frozen=True)
class BoundarySpec:
    """Either the empty boundary (``r is None``) or the ball boundary of radius r.

    ``Ball(r)`` removes every vertex at distance greater than r from the origin.
    """

    r: int | None = None

    @classmethod
    def empty(cls) -> "BoundarySpec":
        return cls(None)

    @classmethod
    def ball(cls, r: int) -> "BoundarySpec":
        return cls(int(r))

    @property
    def is_empty(self) -> bool:
        return self.r is None

    def validate(self, g: GraphSpec) -> "BoundarySpec":
        if self.r is not None and not 1 <= self.r <= g.d - 1:
            raise DomainError(f"boundary radius r={self.r} outside [1, {g.d - 1}]")
        return self

    def __str__(self) -> str:
        return "none" if self.r is None else f"ball({self.r})"


EMPTY = BoundarySpec.empty()


def hamming_distance(g: GraphSpec, x, y) -> int:
    xv, yv = _as_vertex(g, x), _as_vertex(g, y)
    return sum(a != b for a, b in zip(xv.digits, yv.digits))


def sphere_size(g: GraphSpec, i: int) -> int:
    """kappa_i = C(d, i) (n-1)^i, exact."""
    if not 0 <= i <= g.d:
        raise DomainError(f"sphere index i={i} outside [0, {g.d}]")
    return math.comb(g.d, i) * (g.n - 1) ** i


def log_sphere_size(g: GraphSpec, i: int) -> float:
    """log kappa_i via log-gamma, for sweeps where kappa_i is astronomically large."""
    if not 0 <= i <= g.d:
        raise DomainError(f"sphere index i={i} outside [0, {g.d}]")
    return (
        math.lgamma(g.d + 1)
        - math.lgamma(i + 1)
        - math.lgamma(g.d - i + 1)
        + i * math.log(g.n - 1)
    )


def boundary_size(g: GraphSpec, r: int) -> int:
    """|∂_r|: number of vertices at distance r+1..d from the origin."""
    if not 1 <= r <= g.d - 1:
        raise DomainError(f"boundary radius r={r} outside [1, {g.d - 1}]")
    return sum(sphere_size(g, i) for i in range(r + 1, g.d + 1))


def character_phase(g: GraphSpec, x, y) -> complex:
    """zeta^(x.y) with zeta = exp(2 pi i / n); the exponent is reduced mod n first."""
    xv, yv = _as_vertex(g, x), _as_vertex(g, y)
    k = sum(a * b for a, b in zip(xv.digits, yv.digits)) % g.n
    return _root_table(g.n)[k]


def _root_table(n: int) -> np.ndarray:
    k = np.arange(n)
    roots = np.exp(2j * np.pi * k / n)
    # exact values at the quarter points keep n = 2, 4 phases clean
    for idx in range(n):
        if (4 * idx) % n == 0:
            roots[idx] = (1, 1j, -1, -1j)[(4 * idx // n) % 4]
    return roots


def enumerate_sphere(g: GraphSpec, center, i: int) -> list[Vertex]:
    """All vertices at Hamming distance i from ``center``, in increasing rank order."""
    if not 0 <= i <= g.d:
        raise DomainError(f"sphere index i={i} outside [0, {g.d}]")
    c = _as_vertex(g, center)
    out = []
    for coords in itertools.combinations(range(g.d), i):
        for shifts in itertools.product(range(1, g.n), repeat=i):
            digits = list(c.digits)
            for k, s in zip(coords, shifts):
                digits[k] = (digits[k] + s) % g.n
            out.append(Vertex.from_digits(g, digits))
    out.sort(key=lambda v: v.rank)
    return out


def iter_vertices(g: GraphSpec) -> Iterator[Vertex]:
    for rank in range(g.vertex_count):
        yield Vertex.from_rank(g, rank)


# -- vectorised helpers for the dense oracles ---------------------------------


def digit_array(g: GraphSpec, cap: int | None = None) -> np.ndarray:
    """(n^d, d) array of digits, row = vertex rank."""
    check_capacity(g.vertex_count, cap)
    ranks = np.arange(g.vertex_count, dtype=np.int64)
    powers = g.n ** np.arange(g.d, dtype=np.int64)
    return (ranks[:, None] // powers[None, :]) % g.n


def distance_matrix(g: GraphSpec, cap: int | None = None) -> np.ndarray:
    dig = digit_array(g, cap)
    dist = np.zeros((g.vertex_count, g.vertex_count), dtype=np.int16)
    for k in range(g.d):
        col = dig[:, k]
        dist += col[:, None] != col[None, :]
    return dist


def distance_from_origin(g: GraphSpec, cap: int | None = None) -> np.ndarray:
    return np.count_nonzero(digit_array(g, cap), axis=1)


def retained_vertices(g: GraphSpec, b: BoundarySpec, cap: int | None = None) -> np.ndarray:
    """Ranks of Y = X minus the boundary, ascending."""
    b.validate(g)
    if b.is_empty:
        check_capacity(g.vertex_count, cap)
        return np.arange(g.vertex_count)
    return np.flatnonzero(distance_from_origin(g, cap) <= b.r)


def character_table(d: int, n: int, cap: int = 16) -> np.ndarray:
    """The n^d x n^d matrix [zeta^(x.y)] of Z_n^d (d >= 1 allowed here)."""
    if d < 1 or n < 2:
        raise DomainError(f"character table needs d >= 1 and n >= 2, got d={d}, n={n}")
    size = n**d
    check_capacity(size, cap)
    ranks = np.arange(size, dtype=np.int64)
    powers = n ** np.arange(d, dtype=np.int64)
    dig = (ranks[:, None] // powers[None, :]) % n
    expo = (dig @ dig.T) % n
    return _root_table(n)[expo]
