"""Exact sampling of the massive Gaussian free field on H(d, n) without boundary.

The field is synthesised in the character basis zeta^(x.y) / sqrt(n^d): the
coefficient of frequency y has variance 1 / (beta (1/alpha - lambda_rho(y))).
Coefficients of y and -y (mod n) are drawn as a conjugate pair, and
self-conjugate frequencies (2y = 0 mod n) as real Gaussians, so the
synthesised field is real with covariance (alpha / beta) G_{alpha, empty}.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, EmptyStats, HGFFError, MasslessWithoutBoundary
from .graph import (
    EMPTY,
    BoundarySpec,
    GraphSpec,
    _as_vertex,
    character_table,
    check_capacity,
    digit_array,
    distance_from_origin,
    distance_matrix,
)
from .green import MassSpec
from .walks import WalkWeights, dense_transition, eigenvalues

IMAG_TOL = 1e-12


@dataclass(frozen=True)
class FieldSample:
    values: np.ndarray
    weights: WalkWeights
    mass: MassSpec
    seed: int | None = None


@dataclass
class SampleStats:
    count: int
    mean: np.ndarray
    cov_entries: dict[tuple[int, int], tuple[float, float]]
    spatial_mean_sq: tuple[float, float] = (math.nan, math.nan)
    energy: tuple[float, float] = (math.nan, math.nan)


@lru_cache(maxsize=16)
def _synthesis_tables(d: int, n: int):
    g = GraphSpec(d, n)
    check_capacity(g.vertex_count)
    chars = character_table(d, n, cap=g.vertex_count)
    dig = digit_array(g)
    powers = n ** np.arange(d, dtype=np.int64)
    neg = ((-dig) % n) @ powers
    ranks = np.arange(g.vertex_count)
    self_paired = np.flatnonzero(neg == ranks)
    lead = np.flatnonzero(neg > ranks)
    rho = distance_from_origin(g)
    chars.setflags(write=False)
    return chars, self_paired, lead, neg[lead], rho


def frequency_amplitudes(ww: WalkWeights, ms: MassSpec) -> np.ndarray:
    """1 / sqrt(1/alpha - lambda_rho(y)) for every frequency y, in rank order."""
    if ms.massless:
        raise MasslessWithoutBoundary("the character expansion needs m > 0")
    g = ww.g
    lam = eigenvalues(ww).lambdas
    den = ms.m2 + (1.0 - lam)
    *_, rho = _synthesis_tables(g.d, g.n)
    return 1.0 / np.sqrt(den[rho])


def _coefficients(z: np.ndarray, self_paired, lead, partner) -> np.ndarray:
    c = np.zeros(z.shape, dtype=complex)
    c[:, self_paired] = z[:, self_paired]
    pair = (z[:, lead] + 1j * z[:, partner]) / math.sqrt(2.0)
    c[:, lead] = pair
    c[:, partner] = np.conj(pair)
    return c


def sample_fields(ww: WalkWeights, ms: MassSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """(size, n^d) array of independent field samples."""
    g = ww.g
    amp = frequency_amplitudes(ww, ms)
    chars, self_paired, lead, partner, _ = _synthesis_tables(g.d, g.n)
    z = rng.standard_normal((size, g.vertex_count))
    coef = _coefficients(z, self_paired, lead, partner) * amp
    field_c = coef @ chars / math.sqrt(ms.beta * g.vertex_count)
    scale = max(1.0, float(np.max(np.abs(field_c.real)))) if size else 1.0
    resid = float(np.max(np.abs(field_c.imag))) if size else 0.0
    if resid > IMAG_TOL * scale * math.sqrt(g.vertex_count):
        raise HGFFError(f"synthesised field has imaginary residue {resid}")
    return np.ascontiguousarray(field_c.real)


def sample_field(ww: WalkWeights, ms: MassSpec, seed: int) -> FieldSample:
    if ms.massless:
        raise MasslessWithoutBoundary("m = 0 without boundary: no Gaussian free field exists")
    rng = np.random.default_rng(seed)
    return FieldSample(sample_fields(ww, ms, 1, rng)[0], ww, ms, seed)


def field_frequency_coefficients(ww: WalkWeights, fields: np.ndarray) -> np.ndarray:
    """hat g_y = (1/sqrt(n^d)) sum_x g_x zeta^(-x.y)."""
    g = ww.g
    chars, *_ = _synthesis_tables(g.d, g.n)
    return np.atleast_2d(fields) @ np.conj(chars) / math.sqrt(g.vertex_count)


# -- Hamiltonian --------------------------------------------------------------------


def _field_values(ww: WalkWeights, field) -> np.ndarray:
    xi = np.asarray(field.values if isinstance(field, FieldSample) else field, dtype=float)
    if xi.shape != (ww.g.vertex_count,):
        raise DomainError(f"field must have {ww.g.vertex_count} entries, got shape {xi.shape}")
    return xi


def _interior_mask(ww: WalkWeights, b: BoundarySpec, xi: np.ndarray) -> np.ndarray:
    g = ww.g
    b.validate(g)
    if b.is_empty:
        return np.ones(g.vertex_count, dtype=bool)
    inside = distance_from_origin(g) <= b.r
    if np.any(xi[~inside] != 0):
        raise DomainError(f"field must vanish on the boundary {b}")
    return inside


def hamiltonian(ww: WalkWeights, ms: MassSpec, field, b: BoundarySpec = EMPTY) -> float:
    """(1/4) sum_i J_i sum_{(x,x') in R_i} (xi_x - xi_x')^2 + (m^2/2) sum_{x in Y} xi_x^2.

    J_i = w_i / kappa_i; R_i runs over ordered pairs at distance i >= 1.
    """
    xi = _field_values(ww, field)
    inside = _interior_mask(ww, b, xi)
    J = ww.couplings.copy()
    J[0] = 0.0
    W = J[distance_matrix(ww.g)]
    diff = xi[:, None] - xi[None, :]
    return 0.25 * float(np.sum(W * diff * diff)) + 0.5 * ms.m2 * float(np.sum(xi[inside] ** 2))


def hamiltonian_quadratic(ww: WalkWeights, ms: MassSpec, field, b: BoundarySpec = EMPTY) -> float:
    """Same energy as ``hamiltonian`` written as (1/(2 alpha)) xi^T (I - alpha P_hat) xi.

    Expanded: ((1+m^2)/2) sum xi^2 - (1/2) sum_{i>=0} (w_i/kappa_i) sum_{R_i} xi_x xi_x';
    the i = 0 term carries the holding weight w_0.
    """
    xi = _field_values(ww, field)
    inside = _interior_mask(ww, b, xi)
    y = xi[inside]
    P = dense_transition(ww, b)
    return 0.5 * (1.0 + ms.m2) * float(y @ y) - 0.5 * float(y @ P @ y)


def _batch_energies(ww: WalkWeights, ms: MassSpec, fields: np.ndarray, P: np.ndarray) -> np.ndarray:
    quad = np.einsum("bi,bi->b", fields, fields)
    cross = np.einsum("bi,bi->b", fields @ P, fields)
    return 0.5 * (1.0 + ms.m2) * quad - 0.5 * cross


# -- streaming statistics ---------------------------------------------------------------


@dataclass
class _Moments:
    count: int = 0
    field_sum: np.ndarray | None = None
    prod_sum: np.ndarray | None = None
    prod_sq: np.ndarray | None = None
    mean_sq: list = field(default_factory=lambda: [0.0, 0.0])
    energy: list = field(default_factory=lambda: [0.0, 0.0])

    def merge(self, other: "_Moments") -> "_Moments":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        return _Moments(
            self.count + other.count,
            self.field_sum + other.field_sum,
            self.prod_sum + other.prod_sum,
            self.prod_sq + other.prod_sq,
            [a + b for a, b in zip(self.mean_sq, other.mean_sq)],
            [a + b for a, b in zip(self.energy, other.energy)],
        )


def _parse_pairs(g: GraphSpec, probe_pairs: Iterable) -> list[tuple[int, int]]:
    out = []
    for a, b in probe_pairs:
        out.append((_as_vertex(g, a).rank, _as_vertex(g, b).rank))
    return out


def _batch_moments(ww, ms, size, seed_seq, pairs, P) -> _Moments:
    rng = np.random.default_rng(seed_seq)
    fields = sample_fields(ww, ms, size, rng)
    a = np.array([p[0] for p in pairs], dtype=np.int64)
    b = np.array([p[1] for p in pairs], dtype=np.int64)
    prods = fields[:, a] * fields[:, b] if pairs else np.zeros((size, 0))
    spatial = fields.mean(axis=1) ** 2
    energy = ms.beta * _batch_energies(ww, ms, fields, P)
    return _Moments(
        size,
        fields.sum(axis=0),
        prods.sum(axis=0),
        (prods**2).sum(axis=0),
        [float(spatial.sum()), float((spatial**2).sum())],
        [float(energy.sum()), float((energy**2).sum())],
    )


def _mean_se(s1: float, s2: float, count: int) -> tuple[float, float]:
    mean = s1 / count
    var = max(s2 / count - mean * mean, 0.0) * count / max(count - 1, 1)
    return mean, math.sqrt(var / count)


def accumulate_stats(
    ww: WalkWeights,
    ms: MassSpec,
    n_samples: int,
    seed: int,
    probe_pairs: Sequence = (),
    batch_size: int = 20_000,
    jobs: int = 1,
) -> SampleStats:
    """Stream ``n_samples`` fields and accumulate per-vertex means, probe-pair
    products, the squared spatial mean and beta * H, each with a standard error.

    Batch sub-seeds are spawned from ``seed``; the result is independent of ``jobs``.
    """
    g = ww.g
    if ms.massless:
        raise MasslessWithoutBoundary("m = 0 without boundary: no Gaussian free field exists")
    if n_samples < 0:
        raise DomainError(f"n_samples must be non-negative, got {n_samples}")
    pairs = _parse_pairs(g, probe_pairs)
    if n_samples == 0:
        return SampleStats(0, np.zeros(g.vertex_count), {})
    sizes = [batch_size] * (n_samples // batch_size)
    if n_samples % batch_size:
        sizes.append(n_samples % batch_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    P = dense_transition(ww)

    def run(k):
        return _batch_moments(ww, ms, sizes[k], seeds[k], pairs, P)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]
    # merge in batch order so that floating sums do not depend on scheduling
    total = _Moments()
    for part in parts:
        total = total.merge(part)
    count = total.count
    cov = {
        pair: _mean_se(float(total.prod_sum[k]), float(total.prod_sq[k]), count)
        for k, pair in enumerate(pairs)
    }
    return SampleStats(
        count,
        total.field_sum / count,
        cov,
        _mean_se(*total.mean_sq, count),
        _mean_se(*total.energy, count),
    )


def field_mean_variance(stats: SampleStats) -> float:
    """Empirical variance of the spatial mean (1/n^d) sum_x g_x (the field is centred)."""
    if stats.count == 0:
        raise EmptyStats("no samples accumulated")
    return stats.spatial_mean_sq[0]


def spatial_mean_variance_exact(g: GraphSpec, ms: MassSpec) -> float:
    """1 / (n^d beta m^2)."""
    if ms.massless:
        raise MasslessWithoutBoundary("spatial mean variance diverges at m = 0")
    return 1.0 / (g.vertex_count * ms.beta * ms.m2)
