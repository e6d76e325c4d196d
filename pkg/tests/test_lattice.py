import numpy as np
import pytest

from latharm.lattice import (
    Box,
    GridFunction,
    LatticeSpec,
    enumerate_boundary,
    face_interior_points,
    is_harmonic,
    laplacian_residual,
    residual_field,
    sup_norm,
    validate_boundary_data,
)


class TestSpecAndBox:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            LatticeSpec(1, 4)
        with pytest.raises(ValueError):
            LatticeSpec(2, 0)
        assert LatticeSpec(2, 4).h == 0.25

    def test_cube_constructor(self):
        spec = LatticeSpec(2, 4)
        assert spec.unit_cube() == Box((-4, -4), (4, 4))
        assert spec.cube(0.5) == Box((-2, -2), (2, 2))
        with pytest.raises(ValueError):
            spec.cube(0.3)  # 1.2 mesh steps is not integral

    def test_box_validation(self):
        with pytest.raises(ValueError):
            Box((0, 0), (1,))
        with pytest.raises(ValueError):
            Box((1, 0), (0, 5))

    def test_box_queries(self):
        b = Box((-1, 0), (2, 3))
        assert b.shape == (4, 4)
        assert b.point_count() == 16
        assert b.contains((2, 3)) and not b.contains((3, 3))
        assert b.index((-1, 0)) == (0, 0)
        assert b.interior() == Box((0, 1), (1, 2))
        assert b.extremal_count((-1, 0)) == 2
        assert b.extremal_count((0, 0)) == 1
        assert b.extremal_count((0, 1)) == 0


class TestLaplacianResidual:
    def test_constant_is_harmonic(self):
        spec = LatticeSpec(2, 3)
        u = GridFunction.constant(spec.unit_cube(), 7.0)
        assert laplacian_residual(u, (0, 0)) == 0.0

    def test_linear_is_harmonic(self):
        spec = LatticeSpec(3, 2)
        u = GridFunction.from_callable(spec.unit_cube(), lambda p: p[0] * spec.h)
        assert laplacian_residual(u, (0, 1, 0)) == 0.0

    def test_square_residual_is_2h2(self):
        spec = LatticeSpec(2, 4)
        u = GridFunction.from_callable(spec.unit_cube(), lambda p: (p[0] * spec.h) ** 2)
        h2 = spec.h**2
        assert laplacian_residual(u, (1, -2)) == pytest.approx(2 * h2, abs=1e-15)

    def test_harmonic_quadratic(self):
        spec = LatticeSpec(2, 4)
        u = GridFunction.from_callable(
            spec.unit_cube(), lambda p: (p[0] * spec.h) ** 2 - (p[1] * spec.h) ** 2
        )
        assert np.max(np.abs(residual_field(u))) < 1e-15

    def test_out_of_box_neighbor_is_error(self):
        spec = LatticeSpec(2, 2)
        u = GridFunction.constant(spec.unit_cube(), 1.0)
        with pytest.raises(KeyError):
            laplacian_residual(u, (2, 0))

    def test_linearity(self, rng):
        spec = LatticeSpec(2, 3)
        box = spec.unit_cube()
        u = GridFunction(box, rng.uniform(-1, 1, box.shape))
        v = GridFunction(box, rng.uniform(-1, 1, box.shape))
        a, b = 1.7, -0.4
        combo = GridFunction(box, a * u.values + b * v.values)
        for x in box.interior().points():
            lhs = laplacian_residual(combo, x)
            rhs = a * laplacian_residual(u, x) + b * laplacian_residual(v, x)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


class TestIsHarmonic:
    def test_constant_true_at_zero_tol(self):
        spec = LatticeSpec(2, 4)
        u = GridFunction.constant(spec.unit_cube(), 1.0)
        assert is_harmonic(u, spec.cube(0.5), 0.0)

    def test_square_fails_at_h2_tol(self):
        spec = LatticeSpec(2, 4)
        u = GridFunction.from_callable(spec.unit_cube(), lambda p: (p[0] * spec.h) ** 2)
        assert not is_harmonic(u, spec.cube(0.5), spec.h**2)

    def test_solved_dirichlet_is_harmonic(self, rng):
        from latharm.oracle import solve_dirichlet

        from conftest import random_boundary

        spec = LatticeSpec(2, 6)
        g = random_boundary(spec, rng)
        rep = solve_dirichlet(spec.unit_cube(), g)
        assert is_harmonic(rep.solution, spec.unit_cube().interior(), 1e-10)

    def test_region_exceeding_box_is_error(self):
        spec = LatticeSpec(2, 2)
        u = GridFunction.constant(spec.unit_cube(), 1.0)
        with pytest.raises(ValueError):
            residual_field(u, spec.unit_cube())


class TestSupNorm:
    def test_constant(self):
        spec = LatticeSpec(2, 2)
        u = GridFunction.constant(spec.unit_cube(), -3.0)
        assert sup_norm(u) == 3.0

    def test_linear_on_unit_cube(self):
        spec = LatticeSpec(2, 5)
        u = GridFunction.from_callable(spec.unit_cube(), lambda p: p[0] * spec.h)
        assert sup_norm(u, spec.unit_cube()) == 1.0

    def test_matches_exhaustive_scan(self, rng):
        spec = LatticeSpec(3, 2)
        box = spec.unit_cube()
        u = GridFunction(box, rng.standard_normal(box.shape))
        region = Box((-1, -2, 0), (1, 1, 2))
        expected = max(abs(u.at(p)) for p in region.points())
        assert sup_norm(u, region) == expected


class TestEnumerateBoundary:
    @pytest.mark.parametrize(
        "n,N,count_all,count_face",
        [(2, 1, 8, 4), (2, 2, 16, 12), (3, 2, 98, 54)],
    )
    def test_counts(self, n, N, count_all, count_face):
        box = LatticeSpec(n, N).unit_cube()
        assert len(enumerate_boundary(box, "all")) == count_all
        assert len(enumerate_boundary(box, "face_interior")) == count_face

    @pytest.mark.parametrize("n,N", [(2, 3), (3, 2), (3, 3)])
    def test_count_formulas(self, n, N):
        box = LatticeSpec(n, N).unit_cube()
        assert len(enumerate_boundary(box, "all")) == (2 * N + 1) ** n - (2 * N - 1) ** n
        assert len(enumerate_boundary(box, "face_interior")) == 2 * n * (2 * N - 1) ** (n - 1)

    def test_decomposition(self):
        box = LatticeSpec(3, 2).unit_cube()
        all_pts = set(enumerate_boundary(box, "all"))
        face = set(enumerate_boundary(box, "face_interior"))
        multi = {p for p in all_pts if box.extremal_count(p) >= 2}
        assert face | multi == all_pts
        assert not face & multi

    def test_no_duplicates(self):
        box = LatticeSpec(3, 3).unit_cube()
        pts = enumerate_boundary(box, "all")
        assert len(pts) == len(set(pts))

    def test_degenerate_box_is_error(self):
        with pytest.raises(ValueError):
            enumerate_boundary(Box((0, 0), (0, 3)))


class TestBoundaryData:
    def test_validation_accepts_corner_extras(self):
        box = LatticeSpec(2, 2).unit_cube()
        g = {pt: 1.0 for pt in enumerate_boundary(box, "all")}
        cleaned = validate_boundary_data(box, g)
        assert set(cleaned) == set(face_interior_points(box))

    def test_missing_point_is_error(self):
        box = LatticeSpec(2, 2).unit_cube()
        g = {pt: 1.0 for pt in face_interior_points(box)}
        g.pop((2, 0))
        with pytest.raises(ValueError, match="missing"):
            validate_boundary_data(box, g)

    def test_interior_key_is_error(self):
        box = LatticeSpec(2, 2).unit_cube()
        g = {pt: 1.0 for pt in face_interior_points(box)}
        g[(0, 0)] = 1.0
        with pytest.raises(ValueError, match="not a boundary point"):
            validate_boundary_data(box, g)


class TestMaximumPrinciple:
    def test_interior_below_boundary(self, rng):
        from latharm.oracle import solve_dirichlet

        from conftest import random_boundary

        spec = LatticeSpec(2, 5)
        g = random_boundary(spec, rng)
        rep = solve_dirichlet(spec.unit_cube(), g)
        boundary_sup = max(abs(v) for v in g.values())
        interior_sup = sup_norm(rep.solution, spec.unit_cube().interior())
        assert interior_sup <= boundary_sup + 1e-12 * boundary_sup
