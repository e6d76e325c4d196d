import math
import warnings

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import random_boundary
from latharm.kernel import (
    STANDARD_DOMAIN,
    ComplexDomain,
    basis_eval,
    batch_solve,
    fit_bound_constant,
    holomorphic_sup,
    kernel_complex_eval,
    kernel_eval,
    kernel_field,
    kernel_table,
    mode_rate,
    rate_lower_bound,
    represent,
)
from latharm.lattice import (
    Box,
    GridFunction,
    LatticeSpec,
    face_interior_points,
    residual_field,
    sup_norm,
)
from latharm.oracle import solve_dirichlet


def _root_find_rate(spec, K):
    """Independent root-finder oracle for cosh(h a / 2) = n - sum cos(pi k h / 2)."""
    rhs = spec.n - sum(math.cos(math.pi * k / (2 * spec.N)) for k in K)
    f = lambda a: math.cosh(a / (2 * spec.N)) - rhs
    return brentq(f, 1e-12, 16 * spec.N, xtol=1e-13, rtol=1e-15)


class TestModeRate:
    def test_closed_form_example(self):
        spec = LatticeSpec(2, 2)
        a = mode_rate(spec, (2,))
        assert a == pytest.approx(4.0 * math.acosh(2.0), rel=1e-14)
        assert a == pytest.approx(_root_find_rate(spec, (2,)), rel=1e-11)

    def test_top_mode(self):
        for N in (2, 5, 9):
            spec = LatticeSpec(2, N)
            a = mode_rate(spec, (2 * N - 1,))
            expect = 2 * N * math.acosh(2 + math.cos(math.pi / (2 * N)))
            assert a == pytest.approx(expect, rel=1e-14)
            assert a == pytest.approx(_root_find_rate(spec, (2 * N - 1,)), rel=1e-11)

    @pytest.mark.parametrize("n", [2, 3])
    def test_lower_bound_exhaustive(self, n):
        for N in range(1, 17):
            spec = LatticeSpec(n, N)
            table = kernel_table(spec)
            for idx in np.ndindex(table.rates.shape):
                K = tuple(int(i) + 1 for i in idx)
                assert table.rates[idx] >= rate_lower_bound(spec, K)

    def test_monotone_in_each_index(self):
        for n, N in ((2, 8), (3, 4)):
            table = kernel_table(LatticeSpec(n, N))
            for axis in range(n - 1):
                assert np.all(np.diff(table.rates, axis=axis) > 0)

    def test_range_validation(self):
        spec = LatticeSpec(2, 4)
        with pytest.raises(ValueError):
            mode_rate(spec, (0,))
        with pytest.raises(ValueError):
            mode_rate(spec, (8,))
        with pytest.raises(ValueError):
            mode_rate(spec, (1, 1))


class TestBasis:
    def test_vanishes_on_sides(self):
        spec = LatticeSpec(2, 4)
        assert basis_eval(spec, (3,), (0, -4)) == 0.0
        assert abs(basis_eval(spec, (3,), (-4, 2))) < 1e-12
        assert abs(basis_eval(spec, (3,), (4, 2))) < 1e-12

    @pytest.mark.parametrize("n,N_max", [(2, 8), (3, 4)])
    def test_harmonic_exhaustive(self, n, N_max):
        for N in range(1, N_max + 1):
            spec = LatticeSpec(n, N)
            cube = spec.unit_cube()
            ks = [1, N, 2 * N - 1] if N > 1 else [1]
            for k in ks:
                K = (k,) * (n - 1)
                f = GridFunction.from_callable(cube, lambda p: basis_eval(spec, K, p))
                scale = max(1.0, sup_norm(f))
                assert np.max(np.abs(residual_field(f))) <= 1e-10 * scale


class TestKernelDelta:
    @pytest.mark.parametrize("n,N", [(2, 1), (2, 4), (3, 2)])
    def test_delta_property(self, n, N):
        table = kernel_table(LatticeSpec(n, N))
        fis = face_interior_points(table.cube())
        for y in fis:
            col = kernel_field(table, y)
            for z in fis:
                expect = 1.0 if z == y else 0.0
                assert abs(col.at(z) - expect) <= 1e-10

    def test_kernel_harmonic_and_positive(self):
        table = kernel_table(LatticeSpec(2, 4))
        cube = table.cube()
        for y in face_interior_points(cube):
            col = kernel_field(table, y)
            scale = max(1.0, sup_norm(col))
            assert np.max(np.abs(residual_field(col))) <= 1e-10 * scale
            assert float(np.min(col.values)) >= -1e-10

    def test_positivity_matches_delta_solve(self, rng):
        spec = LatticeSpec(2, 3)
        table = kernel_table(spec)
        cube = spec.unit_cube()
        fis = face_interior_points(cube)
        y = fis[int(rng.integers(len(fis)))]
        g = {pt: (1.0 if pt == y else 0.0) for pt in fis}
        oracle_col = solve_dirichlet(cube, g).solution
        col = kernel_field(table, y)
        interior = cube.interior()
        dev = np.abs(col.sub_array(interior) - oracle_col.sub_array(interior))
        assert dev.max() <= 1e-12

    def test_row_sums_to_one(self):
        table = kernel_table(LatticeSpec(2, 4))
        fis = face_interior_points(table.cube())
        for x in [(0, 0), (1, -2), (3, 3)]:
            total = sum(kernel_eval(table, x, y) for y in fis)
            assert total == pytest.approx(1.0, abs=1e-10)


class TestFaceSymmetry:
    def test_signed_permutation_invariance(self, rng):
        spec = LatticeSpec(3, 2)
        table = kernel_table(spec)
        fis = face_interior_points(spec.unit_cube())
        perms = [(1, 0, 2), (2, 1, 0), (0, 2, 1)]
        signs = [(1, -1, 1), (-1, -1, 1), (1, 1, -1)]
        for _ in range(12):
            y = fis[int(rng.integers(len(fis)))]
            x = (int(rng.integers(-1, 2)), int(rng.integers(-1, 2)), int(rng.integers(-1, 2)))
            base = kernel_eval(table, x, y)
            for perm, sgn in zip(perms, signs):
                xm = tuple(sgn[i] * x[perm[i]] for i in range(3))
                ym = tuple(sgn[i] * y[perm[i]] for i in range(3))
                assert kernel_eval(table, xm, ym) == pytest.approx(base, abs=1e-12)


class TestRepresent:
    def test_constant_data(self):
        table = kernel_table(LatticeSpec(2, 4))
        g = {pt: 1.0 for pt in face_interior_points(table.cube())}
        assert represent(table, g, (0, 0)) == pytest.approx(1.0, abs=1e-12)

    def test_linear_data(self):
        spec = LatticeSpec(2, 4)
        table = kernel_table(spec)
        g = {pt: pt[0] * spec.h for pt in face_interior_points(table.cube())}
        for x in [(1, 0), (-2, 3), (0, -3)]:
            assert represent(table, g, x) == pytest.approx(x[0] * spec.h, abs=1e-12)

    @pytest.mark.parametrize("n,N", [(2, 8), (3, 3)])
    def test_matches_oracle(self, n, N, rng):
        spec = LatticeSpec(n, N)
        table = kernel_table(spec)
        cube = spec.unit_cube()
        g = random_boundary(spec, rng)
        sol = solve_dirichlet(cube, g).solution
        scale = max(1.0, sup_norm(sol))
        for _ in range(20):
            x = tuple(int(v) for v in rng.integers(-N + 1, N, size=n))
            assert abs(represent(table, g, x) - sol.at(x)) <= 1e-9 * scale


class TestBatchSolve:
    def test_constant(self):
        table = kernel_table(LatticeSpec(2, 4))
        g = {pt: 1.0 for pt in face_interior_points(table.cube())}
        u = batch_solve(table, g, table.cube().interior())
        assert np.max(np.abs(u.values - 1.0)) <= 1e-12

    def test_transform_matches_pointwise(self, rng):
        spec = LatticeSpec(2, 5)
        table = kernel_table(spec)
        g = random_boundary(spec, rng)
        region = spec.unit_cube()
        fast = batch_solve(table, g, region, method="transform")
        slow = batch_solve(table, g, region, method="pointwise")
        scale = max(1.0, sup_norm(fast))
        assert np.max(np.abs(fast.values - slow.values)) <= 1e-12 * scale

    @pytest.mark.parametrize("n,N", [(2, 8), (3, 3)])
    def test_matches_oracle(self, n, N, rng):
        spec = LatticeSpec(n, N)
        table = kernel_table(spec)
        g = random_boundary(spec, rng)
        u = batch_solve(table, g, spec.unit_cube())
        sol = solve_dirichlet(spec.unit_cube(), g).solution
        scale = max(1.0, sup_norm(sol))
        assert np.max(np.abs(u.values - sol.values)) <= 1e-9 * scale

    def test_subregion_slice(self, rng):
        spec = LatticeSpec(2, 6)
        table = kernel_table(spec)
        g = random_boundary(spec, rng)
        full = batch_solve(table, g, spec.unit_cube())
        sub = Box((-2, -1), (3, 4))
        part = batch_solve(table, g, sub)
        assert np.array_equal(part.values, full.sub_array(sub))


class TestComplexEval:
    def test_real_restriction_all_faces(self):
        # every face orientation, both continued axes, several frozen reals
        spec = LatticeSpec(2, 8)
        table = kernel_table(spec)
        for face_axis in (0, 1):
            for sgn in (-1, 1):
                y = [0, 0]
                y[face_axis] = sgn * 8
                y[1 - face_axis] = 3
                y = tuple(y)
                for axis in (0, 1):
                    for xi in (-4, 0, 3):
                        for fro in (-4, -2, 3):
                            pt = [0, 0]
                            pt[axis] = xi
                            pt[1 - axis] = fro
                            val = kernel_complex_eval(
                                table, y, (fro / 8.0,), axis, complex(xi / 8.0)
                            )
                            assert val.imag == pytest.approx(0.0, abs=1e-12)
                            assert val.real == pytest.approx(
                                kernel_eval(table, tuple(pt), y), abs=1e-12
                            )

    def test_conjugation_symmetry(self):
        table = kernel_table(LatticeSpec(2, 8))
        y = (-2, -8)
        z = 0.3 + 0.05j
        f = kernel_complex_eval(table, y, (0.5,), 0, z)
        fc = kernel_complex_eval(table, y, (0.5,), 0, z.conjugate())
        assert fc == pytest.approx(f.conjugate(), abs=1e-14)

    def test_3d_real_restriction(self):
        spec = LatticeSpec(3, 2)
        table = kernel_table(spec)
        y = (1, 0, 2)
        val = kernel_complex_eval(table, y, (0.0, 0.5), 1, complex(-0.5))
        expect = kernel_eval(table, (0, -1, 1), y)
        assert val.real == pytest.approx(expect, abs=1e-13)
        assert val.imag == pytest.approx(0.0, abs=1e-13)

    def test_outside_domain_warns(self):
        table = kernel_table(LatticeSpec(2, 4))
        with pytest.warns(UserWarning, match="outside the declared domain"):
            kernel_complex_eval(table, (1, 4), (0.0,), 0, 0.9 + 0.0j)

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            ComplexDomain(1.0, -1.0, 0.0, 0.0)
        assert STANDARD_DOMAIN.contains(0.5 + 0.0625j)
        assert not STANDARD_DOMAIN.contains(0.5 + 0.07j)


class TestHolomorphicBound:
    def test_sup_scales_like_inverse_N(self):
        sups = {}
        for N in (8, 16, 32):
            sups[N] = holomorphic_sup(kernel_table(LatticeSpec(2, N)))
        assert sups[16] == pytest.approx(sups[8] / 2, rel=0.15)
        assert sups[32] == pytest.approx(sups[16] / 2, rel=0.15)

    def test_fitted_slope(self):
        C, slope = fit_bound_constant(2, (8, 16, 32, 64))
        assert -1.3 <= slope <= -0.7
        assert C > 0
