import cmath
import itertools
import math

import numpy as np
import pytest

from hgff import graph
from hgff.errors import CapacityError, DomainError
from hgff.graph import BoundarySpec, GraphSpec, Vertex


def test_make_graph_examples():
    g = graph.make_graph(2, 2)
    assert (g.d, g.n, g.vertex_count) == (2, 2, 4)
    assert graph.make_graph(3, 3).vertex_count == 27
    with pytest.raises(DomainError):
        graph.make_graph(1, 5)
    with pytest.raises(DomainError):
        graph.make_graph(3, 1)


def test_vertex_rank_digits_roundtrip():
    g = GraphSpec(3, 3)
    for rank in range(g.vertex_count):
        v = g.vertex(rank)
        assert g.from_digits(v.digits).rank == rank
    # least-significant digit first
    assert g.vertex(1).digits == (1, 0, 0)
    assert g.vertex(3).digits == (0, 1, 0)
    with pytest.raises(DomainError):
        g.vertex(27)
    with pytest.raises(DomainError):
        g.from_digits((0, 3, 0))


def test_hamming_distance_examples():
    g = GraphSpec(2, 2)
    assert graph.hamming_distance(g, g.origin, g.origin) == 0
    assert graph.hamming_distance(g, 0, 3) == 2
    g3 = GraphSpec(3, 3)
    assert graph.hamming_distance(g3, (0, 1, 2), (0, 2, 2)) == 1


def test_sphere_size_examples():
    assert graph.sphere_size(GraphSpec(2, 2), 1) == 2
    g = GraphSpec(2, 3)
    assert graph.sphere_size(g, 2) == 4
    assert len(graph.enumerate_sphere(g, g.origin, 2)) == 4
    for d, n in itertools.product(range(2, 5), range(2, 5)):
        assert graph.sphere_size(GraphSpec(d, n), 0) == 1


def test_log_sphere_size_matches_exact():
    g = GraphSpec(40, 7)
    for i in range(41):
        assert graph.log_sphere_size(g, i) == pytest.approx(math.log(graph.sphere_size(g, i)), rel=1e-12, abs=1e-12)


def test_boundary_size_examples_and_enumeration():
    cases = [((2, 2), 1, 1), ((2, 3), 1, 4), ((3, 2), 2, 1)]
    for (d, n), r, expected in cases:
        g = GraphSpec(d, n)
        assert graph.boundary_size(g, r) == expected
        enumerated = sum(1 for v in graph.iter_vertices(g) if sum(c != 0 for c in v.digits) > r)
        assert enumerated == expected


def test_boundary_spec_validation():
    g = GraphSpec(3, 2)
    assert str(BoundarySpec.empty()) == "none"
    assert str(BoundarySpec.ball(2)) == "ball(2)"
    for r in (0, 3, 4):
        with pytest.raises(DomainError):
            BoundarySpec.ball(r).validate(g)
    assert len(graph.retained_vertices(g, BoundarySpec.ball(1))) == 4


def test_character_phase_examples():
    g = GraphSpec(3, 2)
    for y in range(g.vertex_count):
        assert graph.character_phase(g, g.origin, y) == 1
    assert graph.character_phase(g, (1, 1, 0), (1, 0, 0)) == -1
    g4 = GraphSpec(2, 4)
    assert graph.character_phase(g4, (1, 0), (1, 0)) == 1j
    assert graph.character_phase(g4, (3, 1), (1, 2)) == 1j  # 3 + 2 = 5 = 1 mod 4


def test_character_phase_large_exponent_reduced_first():
    g = GraphSpec(4, 7)
    x, y = (6, 6, 6, 6), (6, 6, 6, 5)
    expected = cmath.exp(2j * math.pi * ((36 * 3 + 30) % 7) / 7)
    assert abs(graph.character_phase(g, x, y) - expected) < 1e-14


def test_enumerate_sphere_examples():
    g = GraphSpec(2, 2)
    assert graph.enumerate_sphere(g, g.origin, 0) == [g.origin]
    assert [v.rank for v in graph.enumerate_sphere(g, g.origin, 1)] == [1, 2]
    g3 = GraphSpec(3, 3)
    sphere = graph.enumerate_sphere(g3, g3.vertex(5), 2)
    assert len(sphere) == 12
    assert all(graph.hamming_distance(g3, g3.vertex(5), v) == 2 for v in sphere)


def test_distance_matrix_matches_pairwise():
    g = GraphSpec(3, 3)
    D = graph.distance_matrix(g)
    for a, b in itertools.product(range(g.vertex_count), repeat=2):
        assert D[a, b] == graph.hamming_distance(g, a, b)


def test_capacity_guard(monkeypatch):
    g = GraphSpec(3, 4)
    monkeypatch.setenv("HGFF_CAP", "32")
    with pytest.raises(CapacityError):
        graph.distance_matrix(g)
    monkeypatch.setenv("HGFF_CAP", "64")
    assert graph.distance_matrix(g).shape == (64, 64)


def test_character_table_is_unitary_up_to_scale():
    T = graph.character_table(2, 3, cap=9)
    assert np.allclose(T @ T.conj().T, 9 * np.eye(9), atol=1e-12)
    with pytest.raises(CapacityError):
        graph.character_table(3, 3)


def test_vertex_type_accepts_forms():
    g = GraphSpec(2, 3)
    v = Vertex.from_digits(g, (2, 1))
    assert graph._as_vertex(g, v) is v
    assert graph._as_vertex(g, 5) == v
    assert graph._as_vertex(g, [2, 1]) == v
