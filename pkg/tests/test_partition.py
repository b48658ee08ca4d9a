import itertools
import math

import numpy as np
import pytest

from hgff import graph, partition, walks
from hgff.errors import CapacityError, DomainError, MasslessWithoutBoundary
from hgff.graph import BoundarySpec, GraphSpec
from hgff.green import MassSpec

from conftest import SMALL_GRID, named_models


def test_log_partition_spectral_example():
    g = GraphSpec(2, 2)
    val = partition.log_partition_spectral(walks.weights_uniform(g), MassSpec(1.0))
    assert val == pytest.approx(2 * math.log(2 * math.pi) - 1.5 * math.log(2), rel=1e-14)
    assert val == pytest.approx(2.636034, abs=1e-6)


def test_beta_scaling():
    g = GraphSpec(3, 2)
    for ww in named_models(g):
        one = partition.log_partition_spectral(ww, MassSpec(0.6, 1.0))
        for beta in (0.5, 3.0):
            other = partition.log_partition_spectral(ww, MassSpec(0.6, beta))
            assert other - one == pytest.approx(-(8 / 2) * math.log(beta), abs=1e-12)


@pytest.mark.parametrize("d,n", SMALL_GRID)
def test_spectral_equals_logdet(d, n):
    g = GraphSpec(d, n)
    for ww in named_models(g):
        for m in (0.5, 1.0, 2.0):
            a = partition.log_partition_spectral(ww, MassSpec(m))
            b = partition.log_partition_dense_oracle(ww, MassSpec(m))
            assert abs(a - b) <= 1e-9 * abs(b)


def test_uniform_boundary_forms():
    for d, n in [(2, 2), (2, 3), (3, 2), (3, 3)]:
        g = GraphSpec(d, n)
        uni = walks.weights_uniform(g)
        for r in range(1, d):
            b = BoundarySpec.ball(r)
            ysize = g.vertex_count - graph.boundary_size(g, r)
            for m, beta in itertools.product((0.4, 1.0, 2.0), (1.0, 2.5)):
                ms = MassSpec(m, beta)
                assert partition.log_partition_uniform(g, ms, b) == pytest.approx(
                    partition.log_partition_dense_oracle(uni, ms, b), rel=1e-9
                )
            for beta in (1.0, 2.5):
                limit = 0.5 * ysize * math.log(2 * math.pi / beta) + 0.5 * math.log(g.vertex_count / graph.boundary_size(g, r))
                ms = MassSpec(0.0, beta)
                assert partition.log_partition_dense_oracle(uni, ms, b) == pytest.approx(limit, rel=1e-9)
                assert partition.log_partition_uniform(g, ms, b) == pytest.approx(limit, rel=1e-12)


def test_massless_without_boundary_rejected():
    ww = walks.weights_nn(GraphSpec(2, 2))
    with pytest.raises(MasslessWithoutBoundary):
        partition.log_partition_spectral(ww, MassSpec(0.0))
    with pytest.raises(MasslessWithoutBoundary):
        partition.log_partition_dense_oracle(ww, MassSpec(0.0))


def test_internal_energy_examples():
    assert partition.internal_energy(GraphSpec(2, 2), 1.0) == 2
    assert partition.internal_energy(GraphSpec(3, 3), 2.0) == 27 / 4
    for ww, ms in [
        (walks.weights_nn(GraphSpec(2, 2)), MassSpec(1.0, 1.0)),
        (walks.weights_binomial(GraphSpec(3, 3), 0.3), MassSpec(0.4, 2.0)),
        (walks.weights_uniform(GraphSpec(3, 3)), MassSpec(3.0, 2.0)),
    ]:
        num = partition.internal_energy_numeric(ww, ms)
        assert num == pytest.approx(partition.internal_energy(ww.g, ms.beta), rel=1e-6)
    with pytest.raises(DomainError):
        partition.internal_energy(GraphSpec(2, 2), 0.0)


def test_partition_report():
    ww = walks.weights_uniform(GraphSpec(2, 2))
    rep = partition.partition_report(ww, MassSpec(1.0))
    out = rep.as_dict()
    assert set(out) == {"log_z", "free_energy_per_site", "internal_energy", "params"}
    assert out["internal_energy"] == 2.0
    assert out["free_energy_per_site"] == pytest.approx(-rep.log_z / 4)
    rep_b = partition.partition_report(ww, MassSpec(0.0), BoundarySpec.ball(1), "dense")
    assert math.isfinite(rep_b.log_z)
    with pytest.raises(DomainError):
        partition.partition_report(ww, MassSpec(1.0), BoundarySpec.ball(1), "spectral")


def test_free_energy_limit_examples():
    assert partition.free_energy_limit("uniform", 1.0, 1.0, "d_to_inf", n=2) == pytest.approx(
        0.5 * (math.log(2) - math.log(2 * math.pi))
    )
    assert partition.free_energy_limit("binomial", 1.0, 1.0, "n_to_inf", d=3, gamma=0.5) == pytest.approx(
        0.5 * (math.log(2 - 0.125) - math.log(2 * math.pi))
    )
    nn_d = partition.free_energy_limit("nn", 1.0, 1.0, "d_to_inf", n=2)
    nn_n = partition.free_energy_limit("nn", 1.0, 1.0, "n_to_inf", d=3)
    assert nn_d == nn_n
    with pytest.raises(DomainError):
        partition.free_energy_limit("custom", 1.0, 1.0, "d_to_inf", n=2)
    with pytest.raises(DomainError):
        partition.free_energy_limit("nn", 0.0, 1.0, "d_to_inf", n=2)


def test_finite_size_free_energy_converges():
    rows = partition.finite_size_free_energy("nn", 2, 1.0, 1.0, [4, 6, 8])
    gaps = [r["gap"] for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]


def test_custom_weights_report_finite_index_value():
    g = GraphSpec(4, 2)
    ww = walks.weights_custom(g, [0.1, 0.4, 0.2, 0.2, 0.1])
    lam = walks.eigenvalues(ww).lambdas[2]
    assert partition.bernstein_index_eigenvalue(ww) == lam
    expected = (math.log(2 - lam) - math.log(2 * math.pi)) / 2
    assert partition.free_energy_finite_index(ww, MassSpec(1.0)) == pytest.approx(expected)


def test_mass_limit_tables():
    ww = walks.weights_nn(GraphSpec(3, 2))
    rows = partition.massless_convergence_table(ww, 1.0, [1e-2, 1e-3, 1e-4])
    gaps = [r["gap"] for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]
    rows = partition.massive_convergence_table(ww, 1.0, [10, 100, 1000])
    gaps = [abs(r["gap"]) for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]


def test_char_table_determinant_examples():
    cases = [((2, 2), 16.0), ((3, 2), 4096.0), ((1, 3), 3 ** 1.5)]
    for (d, n), expected in cases:
        mod, closed = partition.char_table_det_check_dn(d, n)
        assert closed == pytest.approx(expected, rel=1e-14)
        assert mod == pytest.approx(expected, rel=1e-8)
    mod, closed = partition.char_table_det_check(GraphSpec(2, 3))
    assert mod == pytest.approx(closed, rel=1e-8)
    with pytest.raises(CapacityError):
        partition.char_table_det_check(GraphSpec(3, 3))
