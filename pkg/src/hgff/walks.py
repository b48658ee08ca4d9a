"""Radial random walks on H(d, n): weights, spectra, dense and lumped transition matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError
from .graph import (
    EMPTY,
    BoundarySpec,
    GraphSpec,
    dense_cap,
    digit_array,
    distance_matrix,
    retained_vertices,
    sphere_size,
)
from .krawtchouk import kraw_exact, kraw_over_kappa

MODELS = ("uniform", "nn", "binomial", "custom")
STOCHASTIC_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


@dataclass(frozen=True)
class WalkWeights:
    """Radial weights w_0..w_d; P = sum_i (w_i / kappa_i) A_i.

    ``exact`` carries the weights as fractions when the model has rational
    weights (uniform and nearest-neighbour); rational-arithmetic paths use it.
    """

    g: GraphSpec
    w: tuple[float, ...]
    model: str = "custom"
    gamma: float | None = None
    exact: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}")
        if len(self.w) != self.g.d + 1:
            raise DomainError(f"need {self.g.d + 1} weights, got {len(self.w)}")
        if any(v < 0 for v in self.w):
            raise DomainError("weights must be non-negative")
        if abs(math.fsum(self.w) - 1.0) > STOCHASTIC_TOL:
            raise DomainError(f"weights sum to {math.fsum(self.w)!r}, not 1")

    @property
    def couplings(self) -> np.ndarray:
        """w_i / kappa_i, i = 0..d (index 0 is the holding probability)."""
        return np.array([v / sphere_size(self.g, i) for i, v in enumerate(self.w)])

    @property
    def label(self) -> str:
        return f"binomial({self.gamma!r})" if self.model == "binomial" else self.model


def weights_uniform(g: GraphSpec) -> WalkWeights:
    N = g.vertex_count
    exact = tuple(Fraction(sphere_size(g, i), N) for i in range(g.d + 1))
    return WalkWeights(g, tuple(float(v) for v in exact), "uniform", exact=exact)


def weights_nn(g: GraphSpec) -> WalkWeights:
    exact = tuple(Fraction(int(i == 1)) for i in range(g.d + 1))
    return WalkWeights(g, tuple(float(v) for v in exact), "nn", exact=exact)


def weights_binomial(g: GraphSpec, gamma: float) -> WalkWeights:
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    w = [math.comb(g.d, i) * gamma**i * (1.0 - gamma) ** (g.d - i) for i in range(g.d + 1)]
    s = math.fsum(w)
    return WalkWeights(g, tuple(v / s for v in w), "binomial", gamma=gamma)


def weights_custom(g: GraphSpec, w: Sequence[float]) -> WalkWeights:
    w = [float(v) for v in w]
    if len(w) != g.d + 1:
        raise DomainError(f"need {g.d + 1} weights for d={g.d}, got {len(w)}")
    if any(not math.isfinite(v) or v < 0 for v in w):
        raise DomainError(f"weights must be finite and non-negative, got {w}")
    s = math.fsum(w)
    if abs(s - 1.0) > RENORMALIZE_TOL:
        raise DomainError(f"weights sum to {s}, not 1 (tolerance {RENORMALIZE_TOL})")
    return WalkWeights(g, tuple(v / s for v in w), "custom")


def make_weights(g: GraphSpec, model: str, gamma: float | None = None, weights=None) -> WalkWeights:
    if model == "uniform":
        return weights_uniform(g)
    if model == "nn":
        return weights_nn(g)
    if model == "binomial":
        if gamma is None:
            raise DomainError("binomial model needs gamma")
        return weights_binomial(g, gamma)
    if model == "custom":
        if weights is None:
            raise DomainError("custom model needs a weight vector")
        return weights_custom(g, weights)
    raise DomainError(f"unknown model {model!r}")


# -- spectrum ------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    lambdas: np.ndarray
    degeneracies: tuple[int, ...]

    def __post_init__(self):
        self.lambdas.setflags(write=False)

    @property
    def second_largest(self) -> float:
        return float(np.max(self.lambdas[1:]))


def eigenvalues_generic(ww: WalkWeights) -> np.ndarray:
    g = ww.g
    return np.array(
        [
            math.fsum(ww.w[j] * kraw_over_kappa(g, j, i) for j in range(g.d + 1))
            for i in range(g.d + 1)
        ]
    )


def eigenvalues_closed_form(ww: WalkWeights) -> np.ndarray | None:
    g = ww.g
    i = np.arange(g.d + 1, dtype=float)
    if ww.model == "uniform":
        return (i == 0).astype(float)
    if ww.model == "nn":
        return 1.0 - g.n * i / ((g.n - 1) * g.d)
    if ww.model == "binomial":
        return (1.0 - g.n * ww.gamma / (g.n - 1)) ** i
    return None


def eigenvalues(ww: WalkWeights, method: str = "auto") -> Spectrum:
    """lambda_i = sum_j (w_j / kappa_j) K_j(i), with closed forms for the named models."""
    if method not in ("auto", "generic"):
        raise DomainError(f"unknown eigenvalue method {method!r}")
    lam = eigenvalues_closed_form(ww) if method == "auto" else None
    if lam is None:
        lam = eigenvalues_generic(ww)
    return Spectrum(lam, tuple(ww.g.sphere_sizes()))


def step_distribution(ww: WalkWeights, t: int, j: int, spectrum: Spectrum | None = None) -> float:
    """(P^t)_{x,x'} for rho(x, x') = j."""
    g = ww.g
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if not 0 <= j <= g.d:
        raise DomainError(f"j={j} outside [0, {g.d}]")
    if t == 0:
        return float(j == 0)
    lam = (spectrum or eigenvalues(ww)).lambdas
    N = g.vertex_count
    return math.fsum(lam[i] ** t * (kraw_exact(g, i, j) / N) for i in range(g.d + 1))


# -- dense matrices --------------------------------------------------------------


def dense_transition(ww: WalkWeights, b: BoundarySpec = EMPTY, cap: int | None = None) -> np.ndarray:
    """P, or its restriction to Y x Y when a ball boundary is given (rows in rank order)."""
    g = ww.g
    b.validate(g)
    P = ww.couplings[distance_matrix(g, cap)]
    if b.is_empty:
        return P
    keep = retained_vertices(g, b, cap)
    return P[np.ix_(keep, keep)]


# -- lumped chain ------------------------------------------------------------------


@dataclass(frozen=True)
class LumpedChain:
    """Walk projected onto distance-from-origin classes h_0..h_d."""

    tilde_p: np.ndarray
    r: int | None = None

    def __post_init__(self):
        self.tilde_p.setflags(write=False)


def canonical_representative(g: GraphSpec, i: int) -> tuple[int, ...]:
    return (1,) * i + (0,) * (g.d - i)


def lumped_counts_enumerate(g: GraphSpec, representative: Sequence[int], cap: int | None = None) -> np.ndarray:
    """c[j, k] = #{x' : rho(0, x') = j, rho(rep, x') = k}, by enumerating every vertex."""
    dig = digit_array(g, cap)
    rep = np.asarray(representative)
    j = np.count_nonzero(dig, axis=1)
    k = np.count_nonzero(dig != rep[None, :], axis=1)
    out = np.zeros((g.d + 1, g.d + 1), dtype=np.int64)
    np.add.at(out, (j, k), 1)
    return out


@lru_cache(maxsize=256)
def _factored_counts(d: int, n: int, i: int) -> tuple[tuple[int, ...], ...]:
    # per coordinate, x'_k contributes (distance-from-origin, distance-from-rep) increments:
    # rep digit 1: 0 -> (0,1), 1 -> (1,0), other n-2 values -> (1,1)
    # rep digit 0: 0 -> (0,0), other n-1 values -> (1,1)
    poly = {(0, 0): 1}
    factors = [{(0, 1): 1, (1, 0): 1, (1, 1): n - 2}] * i + [{(0, 0): 1, (1, 1): n - 1}] * (d - i)
    for fac in factors:
        nxt: dict[tuple[int, int], int] = {}
        for (a, b), c in poly.items():
            for (da, db), e in fac.items():
                if e:
                    key = (a + da, b + db)
                    nxt[key] = nxt.get(key, 0) + c * e
        poly = nxt
    rows = [[0] * (d + 1) for _ in range(d + 1)]
    for (a, b), c in poly.items():
        rows[a][b] = c
    return tuple(tuple(r) for r in rows)


def lumped_counts(g: GraphSpec, i: int, method: str = "auto") -> np.ndarray:
    """Class/distance counts seen from the canonical representative of h_i.

    Enumerates all vertices when n^d fits under the dense cap; otherwise
    counts coordinate-wise with an exact product of per-coordinate tallies.
    """
    method = _count_method(g, method)
    if method == "enumerate":
        return lumped_counts_enumerate(g, canonical_representative(g, i))
    dtype = np.int64 if g.vertex_count < 2**62 else object
    return np.array(_factored_counts(g.d, g.n, i), dtype=dtype)


def _count_method(g: GraphSpec, method: str) -> str:
    if method == "auto":
        return "enumerate" if g.vertex_count <= dense_cap() else "factored"
    if method not in ("enumerate", "factored"):
        raise DomainError(f"unknown counting method {method!r}")
    return method


def lumped_transition(ww: WalkWeights, r: int | None = None, method: str = "auto") -> LumpedChain:
    g = ww.g
    coup = ww.couplings
    tp = np.empty((g.d + 1, g.d + 1))
    method = _count_method(g, method)
    for i in range(g.d + 1):
        if method == "enumerate":
            c = lumped_counts_enumerate(g, canonical_representative(g, i)).tolist()
        else:
            c = _factored_counts(g.d, g.n, i)
        for j in range(g.d + 1):
            tp[i, j] = math.fsum(c[j][k] * coup[k] for k in range(g.d + 1))
    return LumpedChain(tp, r)


def lumped_transition_exact(ww: WalkWeights) -> list[list[Fraction]]:
    """Rational lumped matrix for models with rational weights."""
    if ww.exact is None:
        raise DomainError(f"model {ww.model!r} has no exact rational weights")
    g = ww.g
    coup = [ww.exact[k] / sphere_size(g, k) for k in range(g.d + 1)]
    out = []
    for i in range(g.d + 1):
        c = _factored_counts(g.d, g.n, i)
        out.append([sum((c[j][k] * coup[k] for k in range(g.d + 1)), Fraction(0)) for j in range(g.d + 1)])
    return out
