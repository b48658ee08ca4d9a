"""Green functions and covariances of the killed radial walk.

Three regimes are covered:

* massive, no boundary: spectral sums over the Krawtchouk basis;
* any mass with a ball boundary: dense inverse of ``I - alpha P_hat``;
* massless with a ball boundary, origin-origin entry: gambler's-ruin solve
  on the lumped distance chain.

A Monte-Carlo killed-walk estimator is provided as an independent check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, MasslessWithoutBoundary, ReducibleChain, SingularSystem
from .graph import (
    EMPTY,
    BoundarySpec,
    GraphSpec,
    _as_vertex,
    boundary_size,
    hamming_distance,
    retained_vertices,
    sphere_size,
)
from .krawtchouk import kraw_exact
from .walks import (
    Spectrum,
    WalkWeights,
    dense_transition,
    eigenvalues,
    lumped_transition,
    lumped_transition_exact,
    make_weights,
)

IRREDUCIBLE_TOL = 1e-12


@dataclass(frozen=True)
class MassSpec:
    m: float
    beta: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.m) or self.m < 0:
            raise DomainError(f"mass must be a finite m >= 0, got {self.m}")
        if not math.isfinite(self.beta) or self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")

    @property
    def alpha(self) -> float:
        """Survival probability 1 / (1 + m^2)."""
        return 1.0 / (1.0 + self.m * self.m)

    @property
    def m2(self) -> float:
        return self.m * self.m

    @property
    def massless(self) -> bool:
        return self.m == 0


@dataclass(frozen=True)
class GreenResult:
    """Green function values: radial (index = distance) or a matrix over Y."""

    values: np.ndarray
    provenance: str
    weights: WalkWeights
    mass: MassSpec
    boundary: BoundarySpec = EMPTY
    retained: np.ndarray | None = None
    se: np.ndarray | None = None

    @property
    def is_radial(self) -> bool:
        return self.values.ndim == 1

    def full_matrix(self) -> np.ndarray:
        """Matrix over all of X; zero on every row and column in the boundary."""
        g = self.weights.g
        if self.is_radial:
            from .graph import distance_matrix

            return self.values[distance_matrix(g)]
        out = np.zeros((g.vertex_count, g.vertex_count))
        out[np.ix_(self.retained, self.retained)] = self.values
        return out


class MCEstimate(NamedTuple):
    estimate: float
    se: float
    n_walks: int


@dataclass(frozen=True)
class HitProbabilities:
    """p_i = P_x(hit the boundary before returning to the origin), x in h_i, i = 1..r."""

    p: tuple[float, ...]
    r: int


def _require_defined(ms: MassSpec, b: BoundarySpec) -> None:
    if ms.massless and b.is_empty:
        raise MasslessWithoutBoundary(
            "m = 0 with an empty boundary: the Green function and the Gaussian free field are undefined"
        )


# -- spectral (massive, no boundary) ------------------------------------------------


def _denominators(ms: MassSpec, spec: Spectrum) -> np.ndarray:
    # 1/alpha - lambda_j = m^2 + (1 - lambda_j), exact at lambda_0 = 1
    return ms.m2 + (1.0 - spec.lambdas)


def alpha_green_radial(ww: WalkWeights, ms: MassSpec, rho: int, spectrum: Spectrum | None = None) -> float:
    """alpha * G(rho) = (1/n^d) sum_j K_j(rho) / (1/alpha - lambda_j)."""
    g = ww.g
    _require_defined(ms, EMPTY)
    if not 0 <= rho <= g.d:
        raise DomainError(f"rho={rho} outside [0, {g.d}]")
    den = _denominators(ms, spectrum or eigenvalues(ww))
    N = g.vertex_count
    return math.fsum((kraw_exact(g, j, rho) / N) / den[j] for j in range(g.d + 1))


def green_massive_radial(ww: WalkWeights, ms: MassSpec, rho: int, spectrum: Spectrum | None = None) -> float:
    """G_{alpha, empty}(rho) = (1/n^d) sum_j K_j(rho) / (1 - alpha lambda_j)."""
    return (1.0 + ms.m2) * alpha_green_radial(ww, ms, rho, spectrum)


def green_radial(ww: WalkWeights, ms: MassSpec) -> GreenResult:
    spec = eigenvalues(ww)
    vals = np.array([green_massive_radial(ww, ms, rho, spec) for rho in range(ww.g.d + 1)])
    return GreenResult(vals, "spectral", ww, ms)


# -- dense oracle --------------------------------------------------------------------


def _spd_inverse(M: np.ndarray) -> np.ndarray:
    factor = scipy.linalg.cho_factor(M, lower=True)
    inv = scipy.linalg.cho_solve(factor, np.eye(M.shape[0]))
    return 0.5 * (inv + inv.T)


def green_dense_oracle(ww: WalkWeights, ms: MassSpec, b: BoundarySpec = EMPTY, cap: int | None = None) -> GreenResult:
    """(I - alpha P_hat)^{-1} over the retained vertices, by Cholesky solve."""
    g = ww.g
    b.validate(g)
    _require_defined(ms, b)
    keep = retained_vertices(g, b, cap)
    P = dense_transition(ww, b, cap)
    M = np.eye(len(keep)) - ms.alpha * P
    try:
        G = _spd_inverse(M)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"I - alpha P_hat is singular for {ww.label}, {b}") from exc
    return GreenResult(G, "dense", ww, ms, b, keep)


def green_dense_column(ww: WalkWeights, ms: MassSpec, b: BoundarySpec, x, cap: int | None = None) -> np.ndarray:
    """Column x of (I - alpha P_hat)^{-1} over the retained vertices: one Cholesky solve, no full inverse."""
    g = ww.g
    b.validate(g)
    _require_defined(ms, b)
    keep = retained_vertices(g, b, cap)
    xv = _as_vertex(g, x)
    hit = np.flatnonzero(keep == xv.rank)
    if hit.size == 0:
        raise DomainError(f"vertex {xv.digits} lies in the boundary {b}")
    M = np.eye(len(keep)) - ms.alpha * dense_transition(ww, b, cap)
    rhs = np.zeros(len(keep))
    rhs[hit[0]] = 1.0
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(M, lower=True), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"I - alpha P_hat is singular for {ww.label}, {b}") from exc


def covariance(ww: WalkWeights, ms: MassSpec, x, x2, b: BoundarySpec = EMPTY) -> float:
    """Cov(g_x, g_x') = (alpha / beta) G_{alpha, b}(x, x')."""
    g = ww.g
    b.validate(g)
    _require_defined(ms, b)
    xv, yv = _as_vertex(g, x), _as_vertex(g, x2)
    if b.is_empty:
        return alpha_green_radial(ww, ms, hamming_distance(g, xv, yv)) / ms.beta
    for v in (xv, yv):
        if sum(c != 0 for c in v.digits) > b.r:
            raise DomainError(f"vertex {v.digits} lies in the boundary {b}")
    res = green_dense_oracle(ww, ms, b)
    pos = {int(r): k for k, r in enumerate(res.retained)}
    return ms.alpha * res.values[pos[xv.rank], pos[yv.rank]] / ms.beta


def uniform_boundary_green(g: GraphSpec, ms: MassSpec, r: int) -> tuple[float, float]:
    """(diagonal, off-diagonal) of G_{alpha, ∂_r} for the uniform model, closed form."""
    N = g.vertex_count
    dr = boundary_size(g, r)
    off = (1.0 / N) / (ms.m2 + dr / N)
    return 1.0 + off, off


# -- massless with boundary: lumped gambler's-ruin solve -----------------------------


def _reaches_boundary(tp: np.ndarray, r: int) -> bool:
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(tp[i] > 0):
            if j > r:
                return True
            if j not in seen:
                seen.add(int(j))
                frontier.append(int(j))
    return False


def hit_probabilities(ww: WalkWeights, r: int) -> HitProbabilities:
    g = ww.g
    BoundarySpec.ball(r).validate(g)
    tp = lumped_transition(ww, r).tilde_p
    if not _reaches_boundary(tp, r):
        raise SingularSystem(f"the walk {ww.label} cannot reach the boundary ∂_{r}")
    inner = tp[1 : r + 1, 1 : r + 1]
    rhs = 1.0 - tp[1 : r + 1, : r + 1].sum(axis=1)
    A = np.eye(r) - inner
    try:
        p = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"hitting system singular for {ww.label}, r={r}") from exc
    if np.linalg.cond(A) > 1e12:
        raise SingularSystem(f"hitting system ill-conditioned for {ww.label}, r={r}")
    return HitProbabilities(tuple(float(v) for v in p), r)


def _solve_fractions(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    aug = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next((k for k in range(col, n) if aug[k][col] != 0), None)
        if piv is None:
            raise SingularSystem("rational hitting system is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        for k in range(n):
            if k != col and aug[k][col] != 0:
                f = aug[k][col] / aug[col][col]
                aug[k] = [a - f * c for a, c in zip(aug[k], aug[col])]
    return [aug[k][n] / aug[k][k] for k in range(n)]


def green_massless_origin(ww: WalkWeights, r: int, exact: bool = False) -> float | Fraction:
    """G_{1, ∂_r}(0, 0) = 1 / (sum_{i<=r} w_i p_i + sum_{i>r} w_i).

    With ``exact=True`` the lumped chain and the linear solve are carried out
    in rational arithmetic (models with rational weights only).
    """
    g = ww.g
    BoundarySpec.ball(r).validate(g)
    if exact:
        tp = lumped_transition_exact(ww)
        A = [[Fraction(int(i == j)) - tp[i][j] for j in range(1, r + 1)] for i in range(1, r + 1)]
        rhs = [1 - sum(tp[i][: r + 1]) for i in range(1, r + 1)]
        p = _solve_fractions(A, rhs)
        w = ww.exact
        denom = sum((w[i] * p[i - 1] for i in range(1, r + 1)), Fraction(0)) + sum(w[r + 1 :])
        if denom == 0:
            raise SingularSystem(f"the walk {ww.label} never escapes to ∂_{r}")
        return 1 / denom
    p = hit_probabilities(ww, r).p
    denom = math.fsum([ww.w[i] * p[i - 1] for i in range(1, r + 1)] + list(ww.w[r + 1 :]))
    if denom <= 0:
        raise SingularSystem(f"the walk {ww.label} never escapes to ∂_{r}")
    return 1.0 / denom


def hit_prob_nn_series(g: GraphSpec, r: int, exact: bool = False) -> float | Fraction:
    """beta Var(g_0) for the nearest-neighbour model: sum_{i<=r} 1 / (C(d-1, i) (n-1)^i)."""
    if not 1 <= r <= g.d - 1:
        raise DomainError(f"boundary radius r={r} outside [1, {g.d - 1}]")
    terms = [Fraction(1, math.comb(g.d - 1, i) * (g.n - 1) ** i) for i in range(r + 1)]
    if exact:
        return sum(terms, Fraction(0))
    return math.fsum(float(t) for t in terms)


# -- asymptotic coefficients -----------------------------------------------------------


def asym_coeff_nn(d: int, m: float, rho: int) -> float:
    """Large-n coefficient of n^{-rho} in beta Cov, NN model: d B(d(1+m^2) - rho, rho + 1)."""
    if m <= 0:
        raise DomainError(f"asymptotic coefficient needs m > 0, got {m}")
    if not 0 <= rho <= d:
        raise DomainError(f"rho={rho} outside [0, {d}]")
    a = d * (1.0 + m * m) - rho
    if a <= 0:
        raise DomainError(f"Beta argument d(1+m^2) - rho = {a} is not positive")
    return d * math.exp(math.lgamma(a) + math.lgamma(rho + 1) - math.lgamma(a + rho + 1))


def asym_coeff_binomial(d: int, m: float, gamma: float, rho: int, tol: float = 1e-14) -> float:
    """Large-n coefficient for the binomial model as the series
    alpha sum_k (alpha (1-gamma)^(d-rho))^k (1 - (1-gamma)^k)^rho,
    truncated once the tail bound alpha^(k+1) / (1 - alpha) drops below ``tol``.
    """
    if m <= 0:
        raise DomainError(f"asymptotic coefficient needs m > 0, got {m}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if not 0 <= rho <= d:
        raise DomainError(f"rho={rho} outside [0, {d}]")
    alpha = 1.0 / (1.0 + m * m)
    one_minus = m * m / (1.0 + m * m)
    # smallest K with alpha^(K+1) / (1 - alpha) < tol
    kmax = max(1, math.ceil(math.log(tol * one_minus) / math.log(alpha)))
    log1mg = math.log1p(-gamma)
    total = []
    chunk = 1 << 16
    for start in range(0, kmax + 1, chunk):
        k = np.arange(start, min(start + chunk, kmax + 1), dtype=float)
        decay = np.exp(k * (math.log(alpha) + (d - rho) * log1mg))
        bracket = (-np.expm1(k * log1mg)) ** rho
        total.append(math.fsum(decay * bracket))
    return alpha * math.fsum(total)


def asym_coeff_binomial_finite(d: int, m: float, gamma: float, rho: int) -> float:
    """Same coefficient from the alternating finite sum over i <= rho (oracle)."""
    inv_alpha = 1.0 + m * m
    return math.fsum(
        math.comb(rho, i) * (-1) ** i / (inv_alpha - (1.0 - gamma) ** (i + d - rho)) for i in range(rho + 1)
    )


def asym_coeff_from_limit_spectrum(ww_limit_lambdas: Sequence[float], d: int, m: float, rho: int) -> float:
    """sum_i C(rho, i) (-1)^i / (1 + m^2 - lambda_{i+d-rho}) for a given limiting spectrum."""
    lam = list(ww_limit_lambdas)
    return math.fsum(
        math.comb(rho, i) * (-1) ** i / (1.0 + m * m - lam[i + d - rho]) for i in range(rho + 1)
    )


def binomial_gap_rate(n: int, gamma: float) -> float:
    """sup_{i>=1} a_i(gamma), a_i = (1-1/n)(1 - n gamma/(n-1))^i + 1/n."""
    b = 1.0 - n * gamma / (n - 1)
    a1 = (1 - 1 / n) * b + 1 / n
    a2 = (1 - 1 / n) * b * b + 1 / n
    return max(a1, a2)


# -- limit diagnostics ---------------------------------------------------------------


def _check_irreducible(ww: WalkWeights, spec: Spectrum) -> None:
    if spec.second_largest >= 1.0 - IRREDUCIBLE_TOL:
        raise ReducibleChain(f"walk {ww.label} is reducible (max_{{i>=1}} lambda_i = {spec.second_largest})")


def limit_diagnostic_m_to_zero(ww: WalkWeights, beta: float, x, x2, m_grid: Sequence[float]) -> list[dict]:
    """Rows (m, m^2 n^d beta Cov, Corr) along a decreasing mass grid."""
    g = ww.g
    spec = eigenvalues(ww)
    _check_irreducible(ww, spec)
    rho = hamming_distance(g, x, x2)
    N = g.vertex_count
    rows = []
    for m in m_grid:
        ms = MassSpec(float(m), beta)
        cov = alpha_green_radial(ww, ms, rho, spec) / beta
        var = alpha_green_radial(ww, ms, 0, spec) / beta
        rows.append({"m": ms.m, "scaled_cov": ms.m2 * N * beta * cov, "corr": cov / var})
    return rows


def limit_diagnostic_large_d(
    model: str,
    n: int,
    m: float,
    rho: int,
    d_grid: Sequence[int],
    beta: float = 1.0,
    gamma: float | None = None,
) -> list[dict]:
    """Covariance at fixed Hamming distance along growing d, normalised per model.

    nn: ``ratio`` = beta Cov d^rho (1+m^2) / rho!  and
        ``ratio_exact_prefactor`` = beta Cov ((n-1) d)^rho / (rho! alpha^(rho+1)).
    uniform: ``scaled`` = n^d beta Cov (constant for 0 < rho).
    binomial: ``gap`` = |beta Cov - delta/(1+m^2)| and ``rate`` = (sup_i a_i)^d.
    """
    if m <= 0:
        raise DomainError(f"large-d diagnostic needs m > 0, got {m}")
    rows = []
    alpha = 1.0 / (1.0 + m * m)
    for d in d_grid:
        g = GraphSpec(int(d), n)
        if rho > g.d:
            raise DomainError(f"rho={rho} exceeds d={d}")
        ww = make_weights(g, model, gamma=gamma)
        ms = MassSpec(m, beta)
        bcov = alpha_green_radial(ww, ms, rho)
        row = {"d": g.d, "beta_cov": bcov}
        if model == "nn":
            row["ratio"] = bcov * g.d**rho * (1.0 + m * m) / math.factorial(rho)
            row["ratio_exact_prefactor"] = bcov * ((n - 1) * g.d) ** rho / (math.factorial(rho) * alpha ** (rho + 1))
        elif model == "uniform":
            row["scaled"] = bcov * g.vertex_count
        elif model == "binomial":
            row["gap"] = abs(bcov - (alpha if rho == 0 else 0.0))
            row["rate"] = binomial_gap_rate(n, gamma) ** g.d
        rows.append(row)
    return rows


def limit_diagnostic_large_n(
    model: str,
    d: int,
    m: float,
    rho: int,
    n_grid: Sequence[int],
    beta: float = 1.0,
    gamma: float | None = None,
) -> list[dict]:
    """Rows (n, n^rho beta Cov, C_{m,d}(rho), |difference|) along growing n."""
    if m <= 0:
        raise DomainError(f"large-n diagnostic needs m > 0, got {m}")
    if model == "nn":
        coeff = asym_coeff_nn(d, m, rho)
    elif model == "binomial":
        coeff = asym_coeff_binomial(d, m, gamma, rho)
    elif model == "uniform":
        # limiting spectrum lambda_i = delta_{i,0}
        coeff = asym_coeff_from_limit_spectrum([1.0] + [0.0] * d, d, m, rho)
    else:
        coeff = None
    rows = []
    for n in n_grid:
        g = GraphSpec(d, int(n))
        ww = make_weights(g, model, gamma=gamma)
        scaled = g.n**rho * alpha_green_radial(ww, MassSpec(m, beta), rho)
        row = {"n": g.n, "scaled_cov": scaled, "coeff": coeff}
        row["abs_diff"] = None if coeff is None else abs(scaled - coeff)
        rows.append(row)
    return rows


def massless_variance_sweep(n: int, d_grid: Sequence[int], beta: float = 1.0) -> list[dict]:
    """beta Var(g_0) for the NN model with boundary ∂_r, r = floor(d/2), along growing d."""
    rows = []
    for d in d_grid:
        g = GraphSpec(int(d), n)
        r = max(1, g.d // 2)
        rows.append({"d": g.d, "r": r, "beta_var": float(hit_prob_nn_series(g, r))})
    return rows


# -- Monte-Carlo killed walks -----------------------------------------------------------


def _walk_batch_vertices(ww, alpha, b, start, target, size, seed_seq, max_steps):
    g = ww.g
    rng = np.random.default_rng(seed_seq)
    cum_w = np.cumsum(ww.w)
    cum_w[-1] = 1.0
    pos = np.tile(np.asarray(start.digits, dtype=np.int64), (size, 1))
    tgt = np.asarray(target.digits, dtype=np.int64)
    alive = np.ones(size, dtype=bool)
    visits = np.zeros(size, dtype=np.int64)
    cols = np.arange(g.d)
    for _ in range(max_steps):
        visits += alive & np.all(pos == tgt, axis=1)
        if alpha < 1.0:
            alive &= rng.random(size) < alpha
        jump = np.searchsorted(cum_w, rng.random(size), side="right")
        order = np.argsort(rng.random((size, g.d)), axis=1)
        mask = np.zeros((size, g.d), dtype=bool)
        np.put_along_axis(mask, order, cols[None, :] < jump[:, None], axis=1)
        shift = rng.integers(1, g.n, size=(size, g.d))
        pos = np.where(mask, (pos + shift) % g.n, pos)
        if not b.is_empty:
            alive &= np.count_nonzero(pos, axis=1) <= b.r
        if not alive.any():
            return visits
    raise SingularSystem(f"killed walks still alive after {max_steps} steps")


def _walk_batch_lumped(tp, alpha, b, size, seed_seq, max_steps):
    rng = np.random.default_rng(seed_seq)
    cum = np.cumsum(tp, axis=1)
    cum[:, -1] = 1.0
    state = np.zeros(size, dtype=np.int64)
    alive = np.ones(size, dtype=bool)
    visits = np.zeros(size, dtype=np.int64)
    for _ in range(max_steps):
        visits += alive & (state == 0)
        if alpha < 1.0:
            alive &= rng.random(size) < alpha
        u = rng.random(size)
        state = np.sum(u[:, None] >= cum[state], axis=1)
        if not b.is_empty:
            alive &= state <= b.r
        if not alive.any():
            return visits
    raise SingularSystem(f"killed walks still alive after {max_steps} steps")


def green_mc_estimate(
    ww: WalkWeights,
    ms: MassSpec,
    b: BoundarySpec,
    x,
    x2,
    n_walks: int,
    seed: int,
    batch_size: int = 10_000,
    jobs: int = 1,
    max_steps: int = 1_000_000,
    use_lumped: bool = True,
) -> MCEstimate:
    """Mean number of visits to x' by walks from x, killed w.p. 1-alpha per step
    and absorbed on the boundary.

    Batches get sub-seeds spawned from ``seed`` in a fixed order, so the
    result does not depend on ``jobs``.
    """
    g = ww.g
    b.validate(g)
    _require_defined(ms, b)
    if n_walks < 1:
        raise DomainError(f"n_walks must be positive, got {n_walks}")
    xv, yv = _as_vertex(g, x), _as_vertex(g, x2)
    for v in (xv, yv):
        if not b.is_empty and sum(c != 0 for c in v.digits) > b.r:
            raise DomainError(f"vertex {v.digits} lies in the boundary {b}")
    if ms.massless:
        tp = lumped_transition(ww).tilde_p
        if not _reaches_boundary(tp, b.r):
            raise SingularSystem(f"the walk {ww.label} cannot reach the boundary {b}")
    sizes = [batch_size] * (n_walks // batch_size)
    if n_walks % batch_size:
        sizes.append(n_walks % batch_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    alpha = ms.alpha
    lumped = use_lumped and xv.rank == 0 and yv.rank == 0
    if lumped:
        tp = lumped_transition(ww).tilde_p

        def run(k):
            return _walk_batch_lumped(tp, alpha, b, sizes[k], seeds[k], max_steps)

    else:

        def run(k):
            return _walk_batch_vertices(ww, alpha, b, xv, yv, sizes[k], seeds[k], max_steps)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(run, range(len(sizes))))
    else:
        batches = [run(k) for k in range(len(sizes))]
    s1 = math.fsum(float(v.sum()) for v in batches)
    s2 = math.fsum(float((v.astype(float) ** 2).sum()) for v in batches)
    mean = s1 / n_walks
    var = max(s2 / n_walks - mean * mean, 0.0) * n_walks / max(n_walks - 1, 1)
    return MCEstimate(mean, math.sqrt(var / n_walks), n_walks)
