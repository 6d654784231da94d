from fractions import Fraction

import numpy as np
import pytest

from rbfkrylov.collocation import (PointSet, gen_cube, gen_sphere,
                                   halton_points, load_points, radical_inverse,
                                   save_points, uniform_cube_boundary_count)


def radical_inverse_oracle(index, base):
    """Digit-reversal in exact rational arithmetic."""
    digits = []
    i = index
    while i > 0:
        digits.append(i % base)
        i //= base
    value = Fraction(0)
    for d, digit in enumerate(digits, start=1):
        value += Fraction(digit, base ** d)
    return float(value)


def test_cube_corners_all_boundary():
    ps = gen_cube((2, 2, 2), "uniform", 0)
    assert ps.counts == (0, 8)
    corners = {tuple(c) for c in ps.coords}
    assert corners == {(a, b, c) for a in (0.0, 1.0) for b in (0.0, 1.0) for c in (0.0, 1.0)}


def test_cube_3x3x3_single_interior():
    ps = gen_cube((3, 3, 3), "uniform", 0)
    assert ps.counts == (1, 26)
    interior = ps.coords[~ps.is_boundary]
    assert np.allclose(interior, [[0.5, 0.5, 0.5]])


def test_halton_first_points():
    pts = halton_points(3)
    expected = np.array([[1 / 2, 1 / 3, 1 / 5],
                         [1 / 4, 2 / 3, 2 / 5],
                         [3 / 4, 1 / 9, 3 / 5]])
    assert np.abs(pts - expected).max() < 1e-15
    for index in (1, 2, 7, 30, 123):
        for base in (2, 3, 5):
            assert abs(radical_inverse(index, base)
                       - radical_inverse_oracle(index, base)) < 1e-15


def test_cube_nongrid_boundary_count_matches_uniform():
    for dist in ("random", "halton"):
        ps = gen_cube((4, 4, 4), dist, 3)
        assert ps.counts[1] == uniform_cube_boundary_count((4, 4, 4))
        on_surface = np.isclose(ps.coords, 0.0) | np.isclose(ps.coords, 1.0)
        assert np.array_equal(on_surface.any(axis=1), ps.is_boundary)


def test_cube_uniform_face_coverage():
    m = 4
    ps = gen_cube((m, m, m), "uniform", 0)
    for axis in range(3):
        for value in (0.0, 1.0):
            face = np.isclose(ps.coords[:, axis], value)
            assert face.sum() >= m * m


def test_halton_octant_balance():
    pts = halton_points(1000)
    for ox in (0, 1):
        for oy in (0, 1):
            for oz in (0, 1):
                mask = ((pts[:, 0] >= 0.5) == ox) & ((pts[:, 1] >= 0.5) == oy) \
                    & ((pts[:, 2] >= 0.5) == oz)
                assert 95 <= mask.sum() <= 155


def test_sphere_boundary_on_unit_sphere():
    ps = gen_sphere((4, 4, 4), "uniform", 0)
    radii = np.linalg.norm(ps.coords, axis=1)
    assert np.abs(radii[ps.is_boundary] - 1.0).max() < 1e-12
    assert (radii[~ps.is_boundary] < 1.0).all()
    boundary = ps.boundary_indices
    assert np.abs(ps.normals[boundary] - ps.coords[boundary]).max() < 1e-12
    # interior-first index layout
    assert not ps.is_boundary[: ps.counts[0]].any()
    assert ps.is_boundary[ps.counts[0]:].all()


def test_sphere_nongrid_variants():
    for dist in ("random", "halton"):
        ps = gen_sphere((5, 5, 5), dist, 11)
        radii = np.linalg.norm(ps.coords, axis=1)
        assert np.abs(radii[ps.is_boundary] - 1.0).max() < 1e-12
        assert (radii[~ps.is_boundary] < 1.0).all()


def test_generation_determinism():
    for gen, dist in ((gen_cube, "random"), (gen_sphere, "random"),
                      (gen_cube, "halton"), (gen_cube, "uniform")):
        a = gen((4, 4, 4), dist, 42)
        b = gen((4, 4, 4), dist, 42)
        assert np.array_equal(a.coords, b.coords)
        assert np.array_equal(a.is_boundary, b.is_boundary)
        assert np.array_equal(np.nan_to_num(a.normals), np.nan_to_num(b.normals))


def test_shape_too_small():
    with pytest.raises(ValueError):
        gen_cube((1, 4, 4), "uniform", 0)
    with pytest.raises(ValueError):
        gen_sphere((1, 2, 2), "uniform", 0)


def test_duplicate_points_rejected():
    coords = np.array([[0.0, 0, 0], [0.0, 0, 0]])
    with pytest.raises(ValueError, match="coincide"):
        PointSet((2, 1, 1), coords, np.array([True, True]))


def test_point_accessor():
    ps = gen_cube((2, 2, 2), "uniform", 0)
    pt = ps[0]
    assert pt.kind == "B"
    assert abs(np.linalg.norm(pt.normal) - 1.0) < 1e-12


def test_load_minimal_file(tmp_path):
    path = tmp_path / "pts.txt"
    path.write_text("# two points\n2 1 1\n0 0 0 I\n1 0 0 B 1 0 0\n")
    ps = load_points(path)
    assert tuple(ps.shape) == (2, 1, 1)
    assert ps.counts == (1, 1)
    assert ps[1].normal == (1.0, 0.0, 0.0)


def test_load_errors_carry_line_numbers(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1 1\n0 0 0 I\n1 0 nope B\n")
    with pytest.raises(ValueError, match=r"bad.txt:3"):
        load_points(bad)
    short = tmp_path / "short.txt"
    short.write_text("3 1 1\n0 0 0 I\n1 0 0 I\n")
    with pytest.raises(ValueError, match="promises 3"):
        load_points(short)
    dup = tmp_path / "dup.txt"
    dup.write_text("2 1 1\n0.5 0 0 I\n0.5 0 0 I\n")
    with pytest.raises(ValueError, match="coincide"):
        load_points(dup)


def test_round_trip(tmp_path):
    ps = gen_cube((3, 3, 3), "random", 9)
    path = tmp_path / "cube.txt"
    save_points(ps, path)
    loaded = load_points(path)
    assert np.array_equal(loaded.coords, ps.coords)
    assert np.array_equal(loaded.is_boundary, ps.is_boundary)
    assert np.array_equal(np.nan_to_num(loaded.normals), np.nan_to_num(ps.normals))
