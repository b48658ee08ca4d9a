"""Log-partition functions, free and internal energy, and their oracles.

Everything is kept in log space; the 1/m prefactor of the massive partition
function is an additive -log m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapacityError, DomainError, MasslessWithoutBoundary, SingularSystem
from .graph import EMPTY, BoundarySpec, GraphSpec, character_table, retained_vertices
from .green import MassSpec, _check_irreducible
from .walks import WalkWeights, dense_transition, eigenvalues

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PartitionReport:
    log_z: float
    free_energy_per_site: float
    internal_energy: float
    weights: WalkWeights
    mass: MassSpec
    boundary: BoundarySpec = EMPTY
    method: str = "spectral"

    def as_dict(self) -> dict:
        g = self.weights.g
        return {
            "log_z": self.log_z,
            "free_energy_per_site": self.free_energy_per_site,
            "internal_energy": self.internal_energy,
            "params": {
                "d": g.d,
                "n": g.n,
                "model": self.weights.model,
                "gamma": self.weights.gamma,
                "weights": list(self.weights.w),
                "m": self.mass.m,
                "beta": self.mass.beta,
                "boundary": str(self.boundary),
                "method": self.method,
            },
        }


def log_partition_spectral(ww: WalkWeights, ms: MassSpec) -> float:
    """(n^d/2) log(2 pi / beta) - log m - sum_{i>=1} (kappa_i / 2) log(1 + m^2 - lambda_i)."""
    if ms.massless:
        raise MasslessWithoutBoundary("m = 0 without boundary: the partition function does not exist")
    g = ww.g
    lam = eigenvalues(ww).lambdas
    kappa = g.sphere_sizes()
    terms = [0.5 * g.vertex_count * (LOG_2PI - math.log(ms.beta)), -math.log(ms.m)]
    terms += [-0.5 * kappa[i] * math.log(ms.m2 + (1.0 - lam[i])) for i in range(1, g.d + 1)]
    return math.fsum(terms)


def log_partition_dense_oracle(ww: WalkWeights, ms: MassSpec, b: BoundarySpec = EMPTY, cap: int | None = None) -> float:
    """(|Y|/2) log(2 pi alpha / beta) - (1/2) log det(I - alpha P_hat), via Cholesky."""
    g = ww.g
    b.validate(g)
    if ms.massless and b.is_empty:
        raise MasslessWithoutBoundary("m = 0 without boundary: the partition function does not exist")
    P = dense_transition(ww, b, cap)
    size = P.shape[0]
    M = np.eye(size) - ms.alpha * P
    try:
        L = scipy.linalg.cholesky(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"I - alpha P_hat is not positive definite for {ww.label}, {b}") from exc
    logdet = 2.0 * math.fsum(np.log(np.diag(L)))
    return 0.5 * size * (LOG_2PI + math.log(ms.alpha) - math.log(ms.beta)) - 0.5 * logdet


def log_partition_uniform(g: GraphSpec, ms: MassSpec, b: BoundarySpec = EMPTY) -> float:
    """Closed forms for the uniform model, with or without a ball boundary."""
    b.validate(g)
    N = g.vertex_count
    lb = math.log(ms.beta)
    if b.is_empty:
        if ms.massless:
            raise MasslessWithoutBoundary("m = 0 without boundary: the partition function does not exist")
        return 0.5 * N * (LOG_2PI - lb) - math.log(ms.m) - 0.5 * (N - 1) * math.log1p(ms.m2)
    from .graph import boundary_size

    dr = boundary_size(g, b.r)
    ysize = N - dr
    return 0.5 * ysize * (LOG_2PI - lb - math.log1p(ms.m2)) + 0.5 * (
        math.log1p(ms.m2) - math.log(dr / N + ms.m2)
    )


def internal_energy(g: GraphSpec, beta: float) -> float:
    """-d log Z / d beta = n^d / (2 beta)."""
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return g.vertex_count / (2.0 * beta)


def internal_energy_numeric(ww: WalkWeights, ms: MassSpec, rel_step: float = 1e-5) -> float:
    h = rel_step * ms.beta
    up = log_partition_spectral(ww, MassSpec(ms.m, ms.beta + h))
    dn = log_partition_spectral(ww, MassSpec(ms.m, ms.beta - h))
    return -(up - dn) / (2.0 * h)


def partition_report(ww: WalkWeights, ms: MassSpec, b: BoundarySpec = EMPTY, method: str = "spectral") -> PartitionReport:
    if method == "spectral":
        if not b.is_empty:
            raise DomainError("the spectral partition function is defined without boundary; use method='dense'")
        log_z = log_partition_spectral(ww, ms)
    elif method == "dense":
        log_z = log_partition_dense_oracle(ww, ms, b)
    else:
        raise DomainError(f"unknown partition method {method!r}")
    g = ww.g
    # every site of X counts, boundary sites included
    free = -log_z / (ms.beta * g.vertex_count)
    size = g.vertex_count if b.is_empty else len(retained_vertices(g, b))
    return PartitionReport(log_z, free, size / (2.0 * ms.beta), ww, ms, b, method)


def free_energy_per_site(ww: WalkWeights, ms: MassSpec) -> float:
    return -log_partition_spectral(ww, ms) / (ms.beta * ww.g.vertex_count)


def limit_eigenvalue(model: str, which: str, *, n: int | None = None, d: int | None = None, gamma: float | None = None) -> float:
    """lambda_* (d -> inf, fixed n) or lambda_# (n -> inf, fixed d) for the named models."""
    if which not in ("d_to_inf", "n_to_inf"):
        raise DomainError(f"which must be 'd_to_inf' or 'n_to_inf', got {which!r}")
    if model in ("uniform", "nn"):
        return 0.0
    if model == "binomial":
        if gamma is None or not 0.0 < gamma < 1.0:
            raise DomainError(f"binomial limit needs gamma in (0, 1), got {gamma}")
        if which == "d_to_inf":
            return 0.0
        if d is None:
            raise DomainError("n -> inf limit needs the fixed dimension d")
        return (1.0 - gamma) ** d
    raise DomainError(f"free-energy limit is not constructive for model {model!r}")


def free_energy_limit(
    model: str,
    m: float,
    beta: float,
    which: str,
    *,
    n: int | None = None,
    d: int | None = None,
    gamma: float | None = None,
) -> float:
    """(1/(2 beta)) (log(1 + m^2 - lambda_limit) - log(2 pi / beta))."""
    if m <= 0:
        raise DomainError(f"free-energy limit needs m > 0, got {m}")
    lam = limit_eigenvalue(model, which, n=n, d=d, gamma=gamma)
    return (math.log(1.0 + m * m - lam) - (LOG_2PI - math.log(beta))) / (2.0 * beta)


def massless_limit_log_partition(ww: WalkWeights, beta: float) -> float:
    """lim_{m->0} log(m Z) = (n^d/2) log(2 pi/beta) - sum_{i>=1} (kappa_i/2) log(1 - lambda_i)."""
    spec = eigenvalues(ww)
    _check_irreducible(ww, spec)
    g = ww.g
    kappa = g.sphere_sizes()
    terms = [0.5 * g.vertex_count * (LOG_2PI - math.log(beta))]
    terms += [-0.5 * kappa[i] * math.log(1.0 - spec.lambdas[i]) for i in range(1, g.d + 1)]
    return math.fsum(terms)


def massless_convergence_table(ww: WalkWeights, beta: float, m_grid) -> list[dict]:
    target = massless_limit_log_partition(ww, beta)
    rows = []
    for m in m_grid:
        val = math.log(m) + log_partition_spectral(ww, MassSpec(float(m), beta))
        rows.append({"m": float(m), "log_mz": val, "limit": target, "gap": abs(val - target)})
    return rows


def massive_convergence_table(ww: WalkWeights, beta: float, m_grid) -> list[dict]:
    """log Z - (n^d/2) log(2 pi / (beta m^2)) along growing m (tends to 0)."""
    N = ww.g.vertex_count
    rows = []
    for m in m_grid:
        m = float(m)
        val = log_partition_spectral(ww, MassSpec(m, beta))
        ref = 0.5 * N * (LOG_2PI - math.log(beta) - 2.0 * math.log(m))
        rows.append({"m": m, "log_z": val, "gap": val - ref})
    return rows


def finite_size_free_energy(model: str, n: int, m: float, beta: float, d_grid, gamma: float | None = None) -> list[dict]:
    from .walks import make_weights

    limit = free_energy_limit(model, m, beta, "d_to_inf", n=n, gamma=gamma)
    rows = []
    for d in d_grid:
        ww = make_weights(GraphSpec(int(d), n), model, gamma=gamma)
        f = free_energy_per_site(ww, MassSpec(m, beta))
        rows.append({"d": int(d), "free_energy": f, "limit": limit, "gap": abs(f - limit)})
    return rows


def char_table_det_check(g: GraphSpec, cap: int = 16) -> tuple[float, float]:
    """(|det [zeta^(x.y)]|, (n^d)^(n^d/2)) for the group Z_n^d."""
    return char_table_det_check_dn(g.d, g.n, cap)


def char_table_det_check_dn(d: int, n: int, cap: int = 16) -> tuple[float, float]:
    size = n**d
    if size > cap:
        raise CapacityError(f"character table determinant limited to n^d <= {cap}, got {size}")
    table = character_table(d, n, cap=cap)
    _, logabs = np.linalg.slogdet(table)
    return math.exp(logabs), float(size) ** (size / 2.0)


def bernstein_index_eigenvalue(ww: WalkWeights) -> float:
    """lambda at index floor((1 - 1/n) d) for the given finite d (no extrapolation)."""
    g = ww.g
    return float(eigenvalues(ww).lambdas[int((1.0 - 1.0 / g.n) * g.d)])


def free_energy_finite_index(ww: WalkWeights, ms: MassSpec) -> float:
    """Free-energy limit formula evaluated with the finite-d eigenvalue at the Bernstein index."""
    if ms.massless:
        raise DomainError("free-energy limit needs m > 0")
    lam = bernstein_index_eigenvalue(ww)
    return (math.log(1.0 + ms.m2 - lam) - (LOG_2PI - math.log(ms.beta))) / (2.0 * ms.beta)
