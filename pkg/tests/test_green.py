import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hgff import graph, green, walks
from hgff.errors import DomainError, MasslessWithoutBoundary, ReducibleChain, SingularSystem
from hgff.graph import BoundarySpec, GraphSpec
from hgff.green import MassSpec

from conftest import SMALL_GRID, named_models


def test_mass_spec_validation():
    assert MassSpec(1.0).alpha == 0.5
    assert MassSpec(0.0).massless
    for m, beta in [(-1, 1), (1, 0), (math.inf, 1), (1, -2)]:
        with pytest.raises(DomainError):
            MassSpec(m, beta)


def test_green_massive_radial_examples():
    g = GraphSpec(2, 2)
    nn = walks.weights_nn(g)
    ms = MassSpec(1.0)
    assert green.green_massive_radial(nn, ms, 0) == pytest.approx(7 / 6, abs=1e-15)
    assert green.green_massive_radial(nn, ms, 1) == pytest.approx(1 / 3, abs=1e-15)
    dense = green.green_dense_oracle(nn, ms).values
    assert dense[0, 0] == pytest.approx(7 / 6, abs=1e-12)
    assert dense[0, 1] == pytest.approx(1 / 3, abs=1e-12)
    uni = walks.weights_uniform(g)
    assert green.green_massive_radial(uni, ms, 1) == pytest.approx(0.25, abs=1e-15)
    assert green.green_dense_oracle(uni, ms).values[0, 1] == pytest.approx(0.25, abs=1e-12)


def test_covariance_examples():
    g = GraphSpec(2, 2)
    uni = walks.weights_uniform(g)
    assert green.covariance(uni, MassSpec(1.0), 0, 0) == pytest.approx(5 / 8, abs=1e-15)
    assert green.covariance(uni, MassSpec(1.0), 0, 3) == pytest.approx(1 / 8, abs=1e-15)
    for ww in named_models(GraphSpec(3, 2)):
        for x, y in [(0, 0), (1, 6), (0, 7)]:
            one = green.covariance(ww, MassSpec(0.7, 1.0), x, y)
            two = green.covariance(ww, MassSpec(0.7, 2.0), x, y)
            assert two == pytest.approx(one / 2, rel=1e-14)


def test_covariance_with_boundary_rejects_boundary_vertex():
    g = GraphSpec(3, 2)
    ww = walks.weights_nn(g)
    b = BoundarySpec.ball(1)
    assert green.covariance(ww, MassSpec(0.0), 0, 1, b) > 0
    with pytest.raises(DomainError):
        green.covariance(ww, MassSpec(0.0), 0, 7, b)


@pytest.mark.parametrize("d,n", SMALL_GRID)
def test_spectral_equals_dense(d, n):
    g = GraphSpec(d, n)
    for ww in named_models(g):
        for m in (0.5, 1.0, 2.0):
            ms = MassSpec(m)
            spec = green.green_radial(ww, ms).full_matrix()
            dense = green.green_dense_oracle(ww, ms).values
            assert np.max(np.abs(spec - dense)) <= 1e-10


def test_uniform_boundary_closed_form_against_dense():
    # diagonal delta + (1/N) / (m^2 + |boundary|/N); see the decisions ledger for the sign
    for d, n in [(2, 2), (2, 3), (3, 2), (3, 3)]:
        g = GraphSpec(d, n)
        uni = walks.weights_uniform(g)
        for r in range(1, d):
            for m in (0.0, 0.3, 1.0, 2.0):
                res = green.green_dense_oracle(uni, MassSpec(m), BoundarySpec.ball(r)).values
                diag, off = green.uniform_boundary_green(g, MassSpec(m), r)
                size = res.shape[0]
                expected = np.full((size, size), off) + np.eye(size) * (diag - off)
                np.testing.assert_allclose(res, expected, atol=1e-12)


def test_massless_without_boundary_is_rejected():
    g = GraphSpec(2, 2)
    ww = walks.weights_uniform(g)
    with pytest.raises(MasslessWithoutBoundary):
        green.green_dense_oracle(ww, MassSpec(0.0))
    with pytest.raises(MasslessWithoutBoundary):
        green.green_massive_radial(ww, MassSpec(0.0), 0)
    with pytest.raises(MasslessWithoutBoundary):
        green.green_mc_estimate(ww, MassSpec(0.0), BoundarySpec.empty(), 0, 0, 10, 1)


def test_green_function_is_entrywise_positive_and_symmetric():
    for d, n in [(3, 2), (2, 3)]:
        g = GraphSpec(d, n)
        for ww in named_models(g):
            for b in [BoundarySpec.empty(), BoundarySpec.ball(1)]:
                G = green.green_dense_oracle(ww, MassSpec(0.0 if not b.is_empty else 0.4), b).values
                assert np.all(G >= -1e-14)
                np.testing.assert_allclose(G, G.T)


def test_massless_origin_examples():
    uni_cases = [(2, 2), (3, 3), (5, 4), (30, 3)]
    for d, n in uni_cases:
        g = GraphSpec(d, n)
        for r in range(1, d):
            dr = graph.boundary_size(g, r)
            assert green.green_massless_origin(walks.weights_uniform(g), r, exact=True) == Fraction(1 + dr, dr)
    g = GraphSpec(3, 2)
    nn = walks.weights_nn(g)
    assert green.green_massless_origin(nn, 1, exact=True) == Fraction(3, 2)
    assert green.green_massless_origin(nn, 2, exact=True) == Fraction(5, 2)
    for r, expected in [(1, 1.5), (2, 2.5)]:
        G = green.green_dense_oracle(nn, MassSpec(0.0), BoundarySpec.ball(r)).values
        assert G[0, 0] == pytest.approx(expected, abs=1e-12)


def test_hit_prob_series_examples():
    g = GraphSpec(2, 2)
    assert green.hit_prob_nn_series(g, 1) == 2
    assert green.green_massless_origin(walks.weights_nn(g), 1) == pytest.approx(2.0, abs=1e-14)
    g10 = GraphSpec(10, 2)
    expected = math.fsum(1 / math.comb(9, i) for i in range(6))
    assert green.hit_prob_nn_series(g10, 5) == pytest.approx(expected, rel=1e-15)
    assert green.green_massless_origin(walks.weights_nn(g10), 5) == pytest.approx(expected, rel=1e-12)
    vals = [green.hit_prob_nn_series(g10, r) for r in range(1, 10)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_massless_beyond_dense_cap():
    # 3^12 vertices exceeds the dense cap; the lumped solve still runs
    g = GraphSpec(12, 3)
    series = green.hit_prob_nn_series(g, 6, exact=True)
    assert green.green_massless_origin(walks.weights_nn(g), 6, exact=True) == series


def test_hit_probabilities_are_probabilities():
    g = GraphSpec(5, 3)
    hp = green.hit_probabilities(walks.weights_nn(g), 3)
    assert len(hp.p) == 3
    assert all(0 < p <= 1 for p in hp.p)
    assert list(hp.p) == sorted(hp.p)


def test_walk_that_cannot_escape_is_singular():
    # a holding-only walk never leaves the origin
    g = GraphSpec(3, 2)
    lazy = walks.weights_custom(g, (1.0, 0.0, 0.0, 0.0))
    with pytest.raises(SingularSystem):
        green.green_massless_origin(lazy, 1)


def test_asym_coeff_nn_examples():
    for d, m in [(3, 0.5), (4, 1.0), (7, 2.0)]:
        assert green.asym_coeff_nn(d, m, 0) == pytest.approx(1 / (1 + m * m), rel=1e-13)
    assert green.asym_coeff_nn(4, 1.0, 1) == pytest.approx(1 / 14, rel=1e-13)
    with pytest.raises(DomainError):
        green.asym_coeff_nn(4, 0.0, 1)


def test_asym_coeff_binomial_examples():
    for d, m, gamma in [(3, 1.0, 0.5), (4, 0.7, 0.3), (6, 2.0, 0.9)]:
        alpha = 1 / (1 + m * m)
        assert green.asym_coeff_binomial(d, m, gamma, 0) == pytest.approx(alpha / (1 - alpha * (1 - gamma) ** d), rel=1e-12)
    rng = np.random.default_rng(7)
    for _ in range(50):
        d = int(rng.integers(2, 9))
        rho = int(rng.integers(0, d + 1))
        m = float(rng.uniform(0.2, 3.0))
        gamma = float(rng.uniform(0.01, 0.99))
        c = green.asym_coeff_binomial(d, m, gamma, rho)
        assert c <= 1 / (m * m) + 1e-12
        assert c == pytest.approx(green.asym_coeff_binomial_finite(d, m, gamma, rho), rel=1e-9, abs=1e-15)
    near_one = green.asym_coeff_binomial(3, 1.0, 0.999, 1)
    assert near_one == pytest.approx(green.asym_coeff_binomial_finite(3, 1.0, 0.999, 1), rel=1e-8)


def test_m_to_zero_examples():
    nn = walks.weights_nn(GraphSpec(2, 2))
    row = green.limit_diagnostic_m_to_zero(nn, 1.0, 0, 1, [1e-3])[0]
    assert 0.999 <= row["scaled_cov"] <= 1.001
    assert row["corr"] > 0.999
    g = GraphSpec(3, 3)
    for m in (0.1, 0.5, 2.0):
        row = green.limit_diagnostic_m_to_zero(walks.weights_uniform(g), 1.0, 0, 5, [m])[0]
        assert row["scaled_cov"] == pytest.approx(1 / (1 + m * m), rel=1e-12)


def test_m_to_zero_requires_irreducible_walk():
    g = GraphSpec(2, 2)
    # only distance-2 jumps: the chain splits into two classes, lambda_1 = 1
    split = walks.weights_custom(g, (0.0, 0.0, 1.0))
    with pytest.raises(ReducibleChain):
        green.limit_diagnostic_m_to_zero(split, 1.0, 0, 3, [1e-2])


def test_large_d_examples():
    rows = green.limit_diagnostic_large_d("nn", 2, 1.0, 0, [5, 10, 20, 40])
    gaps = [abs(r["beta_cov"] * 2 - 1) for r in rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    rows = green.limit_diagnostic_large_d("uniform", 3, 0.8, 1, [3, 5, 8])
    for r in rows:
        assert r["scaled"] == pytest.approx(1 / ((1 + 0.64) * 0.64), rel=1e-10)
    # the normalisation beta Cov ((n-1) d)^rho / (rho! alpha^(rho+1)) tends to 1
    rows = green.limit_diagnostic_large_d("nn", 2, 1.0, 1, [7, 14, 28])
    errs = [abs(r["ratio_exact_prefactor"] - 1) for r in rows]
    assert errs[2] < errs[1] < errs[0]
    # the plain d^rho (1 + m^2) / rho! normalisation approaches alpha^rho / (n-1)^rho instead
    assert rows[-1]["ratio"] == pytest.approx(0.5, abs=0.03)


def test_large_n_trend():
    for rho in (1, 2):
        rows = green.limit_diagnostic_large_n("nn", 4, 1.0, rho, [16, 64])
        assert rows[1]["abs_diff"] < rows[0]["abs_diff"]
    rows = green.limit_diagnostic_large_n("uniform", 3, 1.0, 1, [8, 32])
    assert rows[0]["coeff"] == 0.0


def test_massless_variance_sweep_tends_to_inverse_beta():
    rows = green.massless_variance_sweep(2, [4, 8, 16, 32])
    vals = [r["beta_var"] for r in rows]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - 1) < 0.07


def test_mc_examples():
    g = GraphSpec(2, 2)
    est = green.green_mc_estimate(walks.weights_nn(g), MassSpec(1.0), BoundarySpec.empty(), 0, 0, 100_000, 1)
    assert abs(est.estimate - 7 / 6) < 4 * est.se
    est = green.green_mc_estimate(walks.weights_uniform(g), MassSpec(0.0), BoundarySpec.ball(1), 0, 0, 100_000, 2)
    assert abs(est.estimate - 2.0) < 4 * est.se
    est = green.green_mc_estimate(walks.weights_nn(g), MassSpec(100.0), BoundarySpec.empty(), 0, 0, 10_000, 3)
    assert abs(est.estimate - 1.0) < 1e-3


def test_mc_reproducible_and_job_independent():
    g = GraphSpec(3, 3)
    ww = walks.weights_binomial(g, 0.4)
    args = (ww, MassSpec(0.8), BoundarySpec.empty(), 0, 5, 30_000, 42)
    a = green.green_mc_estimate(*args, batch_size=5000, jobs=1)
    b = green.green_mc_estimate(*args, batch_size=5000, jobs=3)
    assert a == b
    c = green.green_mc_estimate(*args, batch_size=5000, jobs=1, use_lumped=False)
    assert abs(c.estimate - green.green_massive_radial(ww, MassSpec(0.8), 2)) < 4 * c.se


def test_mc_vertex_path_off_origin_with_boundary():
    g = GraphSpec(3, 2)
    ww = walks.weights_uniform(g)
    b = BoundarySpec.ball(2)
    exact = green.green_dense_oracle(ww, MassSpec(0.0), b)
    pos = {int(r): k for k, r in enumerate(exact.retained)}
    est = green.green_mc_estimate(ww, MassSpec(0.0), b, 1, 6, 50_000, 9)
    assert abs(est.estimate - exact.values[pos[1], pos[6]]) < 4 * est.se


def test_dense_column_matches_full_inverse():
    g = GraphSpec(3, 3)
    for ww in named_models(g):
        for ms, b in [(MassSpec(0.7), BoundarySpec.empty()), (MassSpec(0.0), BoundarySpec.ball(2))]:
            full = green.green_dense_oracle(ww, ms, b)
            col = green.green_dense_column(ww, ms, b, 4)
            k = int(np.flatnonzero(full.retained == 4)[0])
            np.testing.assert_allclose(col, full.values[:, k], atol=1e-12)
    with pytest.raises(DomainError):
        green.green_dense_column(walks.weights_nn(g), MassSpec(0.0), BoundarySpec.ball(1), 26)
