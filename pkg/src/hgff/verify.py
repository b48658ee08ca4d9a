"""Invariant groups run by ``hgff verify``.

Each group returns ``(passed, detail)``.  The quick level uses small grids;
the full level widens them and adds the statistical groups.
"""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from typing import Callable

import numpy as np

from . import graph, green, krawtchouk, partition, sampler, walks
from .graph import BoundarySpec, GraphSpec

GroupResult = tuple[bool, str]


def _models(g: GraphSpec):
    return [walks.weights_uniform(g), walks.weights_nn(g), walks.weights_binomial(g, 0.3), walks.weights_binomial(g, 0.8)]


def group_sphere_sizes(level: str) -> GroupResult:
    dmax = 6 if level == "quick" else 12
    for d, n in itertools.product(range(2, dmax + 1), range(2, 6)):
        g = GraphSpec(d, n)
        if sum(g.sphere_sizes()) != g.vertex_count:
            return False, f"sum kappa != n^d at d={d}, n={n}"
    for d, n in ((2, 2), (2, 3), (3, 3), (4, 2)):
        g = GraphSpec(d, n)
        for i in range(d + 1):
            if len(graph.enumerate_sphere(g, g.origin, i)) != graph.sphere_size(g, i):
                return False, f"enumerated sphere size mismatch at d={d}, n={n}, i={i}"
    return True, "sphere sizes sum to n^d; enumeration matches kappa_i"


def group_character_orthogonality(level: str) -> GroupResult:
    grid = [(2, 2), (3, 2), (2, 3)] if level == "quick" else [(2, 2), (3, 2), (2, 3), (4, 2), (2, 4), (3, 4), (6, 2), (2, 8)]
    worst = 0.0
    for d, n in grid:
        N = n**d
        T = graph.character_table(d, n, cap=N)
        worst = max(worst, float(np.max(np.abs(T @ T.conj().T - N * np.eye(N)))))
    return worst <= 1e-12 * 64, f"max |sum_x zeta^(x.(y-y')) - n^d delta| = {worst:.2e}"


def group_kraw_genfun(level: str) -> GroupResult:
    dmax = 10 if level == "quick" else 20
    for d in range(2, dmax + 1):
        for n in (2, 3, 5):
            g = GraphSpec(d, n)
            for j in range(d + 1):
                row = krawtchouk.kraw_row_genfun_exact(g, j)
                if any(krawtchouk.kraw(g, i, j) != float(row[i]) for i in range(d + 1)):
                    return False, f"explicit sum != generating function at d={d}, n={n}, j={j}"
    return True, f"K_i(j) equals generating-function coefficients for d <= {dmax}"


def group_kraw_orthogonality(level: str) -> GroupResult:
    dmax = 10 if level == "quick" else 20
    worst = 0.0
    for d in range(2, dmax + 1):
        for n in (2, 3, 5):
            g = GraphSpec(d, n)
            K = krawtchouk.kraw_table(g).values
            mass = np.array([math.comb(d, l) * (1 / n) ** (d - l) * (1 - 1 / n) ** l for l in range(d + 1)])
            gram = (K * mass[None, :]) @ K.T
            kappa = np.array(g.sphere_sizes(), dtype=float)
            err = np.abs(gram - np.diag(kappa)) / np.sqrt(np.outer(kappa, kappa))
            worst = max(worst, float(np.max(err)))
    return worst <= 1e-9, f"max relative orthogonality defect {worst:.2e}"


def group_fourier_identity(level: str) -> GroupResult:
    rng = np.random.default_rng(0)
    worst = 0.0
    for d, n in ((2, 2), (3, 2), (2, 3), (3, 3), (2, 8), (3, 4)):
        g = GraphSpec(d, n)
        f = rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1)
        for x in range(g.vertex_count):
            a = krawtchouk.radial_fourier(g, f, x)
            b = krawtchouk.radial_fourier_bruteforce(g, f, x)
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst <= 1e-10, f"max relative Fourier defect {worst:.2e}"


def group_spectrum(level: str) -> GroupResult:
    grid = [(2, 2), (2, 3), (3, 2)] if level == "quick" else [(2, 2), (2, 3), (3, 2), (3, 3), (4, 3), (2, 9)]
    closed = dense = 0.0
    for d, n in grid:
        g = GraphSpec(d, n)
        for ww in _models(g):
            spec = walks.eigenvalues(ww)
            gen = walks.eigenvalues(ww, "generic").lambdas
            closed = max(closed, float(np.max(np.abs(spec.lambdas - gen))))
            expected = np.sort(np.repeat(spec.lambdas, spec.degeneracies))
            eig = np.linalg.eigvalsh(walks.dense_transition(ww))
            dense = max(dense, float(np.max(np.abs(np.sort(eig) - expected))))
    return closed <= 1e-12 and dense <= 1e-8, f"closed form vs generic {closed:.2e}; dense eigenvalues {dense:.2e}"


def group_step_distribution(level: str) -> GroupResult:
    worst = 0.0
    for d, n in ((2, 2), (2, 3), (3, 3), (4, 3)):
        g = GraphSpec(d, n)
        D = graph.distance_matrix(g)
        for ww in _models(g):
            P = walks.dense_transition(ww)
            Pt = np.eye(g.vertex_count)
            for t in range(7):
                for j in range(d + 1):
                    x2 = int(np.flatnonzero(D[0] == j)[0])
                    worst = max(worst, abs(walks.step_distribution(ww, t, j) - Pt[0, x2]))
                Pt = Pt @ P
    return worst <= 1e-10, f"max |P_t(j) - (P^t)_(x,x')| = {worst:.2e}"


def green_equivalence_defect() -> float:
    worst = 0.0
    for d, n in itertools.product((2, 3), (2, 3)):
        g = GraphSpec(d, n)
        for ww in _models(g):
            for m in (0.5, 1.0, 2.0):
                ms = green.MassSpec(m)
                spec = green.green_radial(ww, ms).full_matrix()
                dense = green.green_dense_oracle(ww, ms).values
                worst = max(worst, float(np.max(np.abs(spec - dense))))
    return worst


def group_green_equivalence(level: str) -> GroupResult:
    worst = green_equivalence_defect()
    return worst <= 1e-10, f"max |spectral - dense| = {worst:.2e}"


def group_harmonicity(level: str) -> GroupResult:
    worst = 0.0
    for d, n in ((2, 2), (3, 2), (3, 3)):
        g = GraphSpec(d, n)
        bounds = [BoundarySpec.empty()] + [BoundarySpec.ball(r) for r in range(1, d)]
        for ww in _models(g):
            for b in bounds:
                for m in (0.0, 0.5, 2.0):
                    if m == 0 and b.is_empty:
                        continue
                    ms = green.MassSpec(m)
                    G = green.green_dense_oracle(ww, ms, b).values
                    M = np.eye(G.shape[0]) - ms.alpha * walks.dense_transition(ww, b)
                    worst = max(worst, float(np.max(np.abs(M @ G - np.eye(G.shape[0])))))
    return worst <= 1e-9, f"max |(I - alpha P_hat) G - I| = {worst:.2e}"


def partition_equivalence_defect() -> float:
    worst = 0.0
    for d, n in itertools.product((2, 3), (2, 3)):
        g = GraphSpec(d, n)
        for ww in _models(g):
            for m in (0.5, 1.0, 2.0):
                ms = green.MassSpec(m)
                a = partition.log_partition_spectral(ww, ms)
                b = partition.log_partition_dense_oracle(ww, ms)
                worst = max(worst, abs(a - b) / abs(b))
    return worst


def group_partition(level: str) -> GroupResult:
    worst = partition_equivalence_defect()
    closed = 0.0
    for d, n in itertools.product((2, 3), (2, 3)):
        g = GraphSpec(d, n)
        ww = walks.weights_uniform(g)
        for b in [BoundarySpec.empty()] + [BoundarySpec.ball(r) for r in range(1, d)]:
            for m in (0.0, 0.5, 1.0, 2.0):
                if m == 0 and b.is_empty:
                    continue
                ms = green.MassSpec(m, 1.5)
                a = partition.log_partition_uniform(g, ms, b)
                o = partition.log_partition_dense_oracle(ww, ms, b)
                closed = max(closed, abs(a - o) / abs(o))
    return max(worst, closed) <= 1e-9, f"spectral/dense {worst:.2e}, uniform closed forms {closed:.2e}"


def massless_boundary_defect() -> tuple[bool, float]:
    exact_ok = True
    worst = 0.0
    for d in range(2, 9):
        for n in range(2, 5):
            g = GraphSpec(d, n)
            uni = walks.weights_uniform(g)
            nn = walks.weights_nn(g)
            dense_ok = g.vertex_count <= graph.dense_cap()
            for r in range(1, d):
                dr = graph.boundary_size(g, r)
                if green.green_massless_origin(uni, r, exact=True) != Fraction(1 + dr, dr):
                    exact_ok = False
                series = green.hit_prob_nn_series(g, r)
                lumped = green.green_massless_origin(nn, r)
                worst = max(worst, abs(series - lumped))
                if dense_ok:
                    col = green.green_dense_column(nn, green.MassSpec(0.0), BoundarySpec.ball(r), 0)
                    worst = max(worst, abs(series - col[0]))
    return exact_ok, worst


def group_massless_boundary(level: str) -> GroupResult:
    exact_ok, worst = massless_boundary_defect()
    return exact_ok and worst <= 1e-10, f"uniform exact: {exact_ok}; NN series/lumped/dense defect {worst:.2e}"


def group_char_det(level: str) -> GroupResult:
    worst = 0.0
    for d, n in ((2, 2), (3, 2), (2, 3), (4, 2), (2, 4)):
        mod, expect = partition.char_table_det_check_dn(d, n)
        worst = max(worst, abs(mod - expect) / expect)
    return worst <= 1e-8, f"max relative determinant defect {worst:.2e}"


def group_limits(level: str) -> GroupResult:
    g = GraphSpec(2, 2)
    rows = green.limit_diagnostic_m_to_zero(walks.weights_nn(g), 1.0, 0, 3, [1e-3])
    ok_m0 = abs(rows[0]["scaled_cov"] - 1) <= 1e-3 and rows[0]["corr"] > 0.999
    ok_n = True
    for rho in (1, 2):
        t = green.limit_diagnostic_large_n("nn", 4, 1.0, rho, [16, 64])
        ok_n &= t[1]["abs_diff"] < t[0]["abs_diff"]
    t = green.limit_diagnostic_large_d("nn", 2, 1.0, 1, [7, 14])
    ok_d = abs(t[1]["ratio_exact_prefactor"] - 1) < abs(t[0]["ratio_exact_prefactor"] - 1)
    ok = ok_m0 and ok_n and ok_d
    return ok, f"m->0: {ok_m0}; n->inf: {ok_n}; d->inf (proof prefactor): {ok_d}"


def group_sampler(level: str) -> GroupResult:
    g = GraphSpec(2, 2)
    ms = green.MassSpec(1.0)
    fails = 0
    checks = 0
    for ww in (walks.weights_nn(g), walks.weights_uniform(g)):
        st = sampler.accumulate_stats(ww, ms, 50_000 if level == "full" else 10_000, 11, [(0, 0), (0, 1), (0, 3)])
        for (a, b), (val, se) in st.cov_entries.items():
            checks += 1
            fails += abs(val - green.covariance(ww, ms, a, b)) > 4 * se
        mv, se = st.spatial_mean_sq
        checks += 1
        fails += abs(mv - sampler.spatial_mean_variance_exact(g, ms)) > 4 * se
        e, se = st.energy
        checks += 1
        fails += abs(e - g.vertex_count / 2) > 4 * se
    return fails == 0, f"{checks - fails}/{checks} statistics within 4 SE"


def group_monte_carlo(level: str) -> GroupResult:
    g = GraphSpec(2, 3)
    ww = walks.weights_nn(g)
    cases = [(green.MassSpec(1.0), BoundarySpec.empty(), 0, 1), (green.MassSpec(0.0), BoundarySpec.ball(1), 0, 0)]
    fails = 0
    for ms, b, x, y in cases:
        est = green.green_mc_estimate(ww, ms, b, x, y, 40_000 if level == "full" else 10_000, 5)
        exact = green.green_dense_oracle(ww, ms, b)
        pos = {int(r): k for k, r in enumerate(exact.retained)}
        fails += abs(est.estimate - exact.values[pos[x], pos[y]]) > 4 * est.se
    return fails == 0, f"{len(cases) - fails}/{len(cases)} Monte-Carlo estimates within 4 SE"


QUICK_GROUPS: dict[str, Callable[[str], GroupResult]] = {
    "sphere_sizes": group_sphere_sizes,
    "character_orthogonality": group_character_orthogonality,
    "krawtchouk_genfun": group_kraw_genfun,
    "krawtchouk_orthogonality": group_kraw_orthogonality,
    "fourier_identity": group_fourier_identity,
    "spectrum": group_spectrum,
    "step_distribution": group_step_distribution,
    "green_equivalence": group_green_equivalence,
    "harmonicity": group_harmonicity,
    "partition": group_partition,
    "massless_boundary": group_massless_boundary,
    "character_determinant": group_char_det,
    "limits": group_limits,
    "sampler": group_sampler,
    "monte_carlo": group_monte_carlo,
}


def run_verification_suite(level: str = "quick") -> dict:
    if level not in ("quick", "full"):
        raise ValueError(f"level must be 'quick' or 'full', got {level!r}")
    groups = []
    for name, fn in QUICK_GROUPS.items():
        t0 = time.perf_counter()
        try:
            passed, detail = fn(level)
        except Exception as exc:  # a crashing group is a failing group
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        groups.append({"name": name, "passed": bool(passed), "detail": detail, "seconds": time.perf_counter() - t0})
    return {"level": level, "passed": all(gr["passed"] for gr in groups), "groups": groups}
