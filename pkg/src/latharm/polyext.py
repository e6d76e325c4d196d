"""Exact-rational extension of cube data to discrete harmonic polynomials.

Any function that is discrete harmonic on the cube K_N = [-N, N]^n of the
integer lattice extends to a polynomial P with Delta_d P identically zero
and total degree at most 6N(n-1) + 1.  The construction is fully
constructive and runs in exact rational arithmetic:

1. pad the cube data to the slab [-3N, 3N]^(n-1) x [-N, N] by layer-wise
   harmonic extension (integer stencil recursion, side data configurable);
2. the padded function is determined by its two bottom layers, which are
   interpolated exactly into polynomials G0, G1 of n-1 variables;
3. a one-variable basis q_j with q_j(t+1) + q_j(t-1) - 2 q_j(t) = t^(j-2),
   q_j(0) = q_j(1) = 0 turns harmonicity of P = sum q_j(x_n) Q_j(x) into a
   triangular-by-degree linear system for the cross-section polynomials Q_j,
   solved by finitely many passes of its (nilpotent) correction operator;
4. the assembled polynomial is shifted back and verified: exact match on
   K_N, symbolic vanishing of the stencil, and the degree cap.

"Matches on K_N" always means literal equality of rationals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .lattice import Box, Coords, GridFunction

Monomial = tuple[int, ...]
Rational = Fraction | int

_ZERO = Fraction(0)

DEFAULT_BIT_BUDGET = 1_000_000


class NonHarmonicInputError(ValueError):
    """Input data fails the stencil at some interior point."""

    def __init__(self, point: Coords, residual: Fraction):
        self.point = point
        self.residual = residual
        super().__init__(f"input is not discrete harmonic at {point}: residual {residual}")


class ResourceLimitError(RuntimeError):
    """Exact coefficients outgrew the configured bit budget."""


@dataclass(frozen=True)
class UnivarRationalPoly:
    """One-variable polynomial with exact rational coefficients (index = power)."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        c = tuple(Fraction(x) for x in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, power: int) -> Fraction:
        return self.coeffs[power] if 0 <= power < len(self.coeffs) else Fraction(0)

    def __call__(self, t: Rational) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def second_difference(self) -> "UnivarRationalPoly":
        """p(t+1) + p(t-1) - 2 p(t), expanded exactly."""
        out = [Fraction(0)] * max(1, len(self.coeffs) - 1)
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            for l in range(2, i + 1, 2):
                out[i - l] += 2 * c * math.comb(i, l)
        return UnivarRationalPoly(tuple(out))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)


def _second_difference_monomial(i: int) -> list[tuple[int, Fraction]]:
    """(power, coefficient) terms of Delta_d t^i."""
    return [(i - l, Fraction(2 * math.comb(i, l))) for l in range(2, i + 1, 2)]


def second_difference_basis(j_max: int) -> list[UnivarRationalPoly]:
    """Polynomials q_0 = 1, q_1 = t, and for j >= 2 the unique q_j with

    Delta_d q_j = t^(j-2), q_j(0) = 0, q_j(1) = 0, deg q_j = j.
    """
    if j_max < 0:
        raise ValueError("j_max must be nonnegative")
    basis = [UnivarRationalPoly((Fraction(1),)), UnivarRationalPoly((Fraction(0), Fraction(1)))]
    for j in range(2, j_max + 1):
        coeff = [Fraction(0)] * (j + 1)
        rem = [Fraction(0)] * max(1, j - 1)
        rem[j - 2] = Fraction(1)
        for i in range(j, 1, -1):
            lead = rem[i - 2]
            if lead == 0:
                continue
            c_i = lead / (2 * math.comb(i, 2))
            coeff[i] = c_i
            for power, factor in _second_difference_monomial(i):
                rem[power] -= c_i * factor
        if any(rem):
            raise AssertionError("second-difference elimination left a nonzero remainder")
        coeff[1] = -sum(coeff[2:], Fraction(0))
        basis.append(UnivarRationalPoly(tuple(coeff)))
    return basis[: j_max + 1]


class MultivarRationalPoly:
    """Sparse multivariate polynomial over exact rationals.

    Terms map exponent multi-indices to coefficients; zero coefficients are
    never stored, so the zero polynomial has an empty term map.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, Rational] | None = None):
        if nvars < 1:
            raise ValueError("need at least one variable")
        self.nvars = nvars
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coef in terms.items():
                coef = Fraction(coef)
                if coef == 0:
                    continue
                mono = tuple(int(e) for e in mono)
                if len(mono) != nvars or any(e < 0 for e in mono):
                    raise ValueError(f"bad exponent tuple {mono} for {nvars} variables")
                self.terms[mono] = coef

    # -- constructors ------------------------------------------------------

    @classmethod
    def _raw(cls, nvars: int, terms: dict[Monomial, Fraction]) -> "MultivarRationalPoly":
        """Trusted constructor: terms already validated and zero-free."""
        out = cls.__new__(cls)
        out.nvars = nvars
        out.terms = terms
        return out

    @classmethod
    def constant(cls, nvars: int, value: Rational) -> "MultivarRationalPoly":
        return cls(nvars, {(0,) * nvars: Fraction(value)})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "MultivarRationalPoly":
        mono = [0] * nvars
        mono[index] = 1
        return cls(nvars, {tuple(mono): Fraction(1)})

    # -- ring operations ---------------------------------------------------

    def _check_compatible(self, other: "MultivarRationalPoly") -> None:
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")

    def __add__(self, other: "MultivarRationalPoly") -> "MultivarRationalPoly":
        self._check_compatible(other)
        out = dict(self.terms)
        for mono, coef in other.terms.items():
            new = out.get(mono, _ZERO) + coef
            if new == 0:
                out.pop(mono, None)
            else:
                out[mono] = new
        return MultivarRationalPoly._raw(self.nvars, out)

    def __neg__(self) -> "MultivarRationalPoly":
        return MultivarRationalPoly._raw(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "MultivarRationalPoly") -> "MultivarRationalPoly":
        return self + (-other)

    def scaled(self, factor: Rational) -> "MultivarRationalPoly":
        factor = Fraction(factor)
        if factor == 0:
            return MultivarRationalPoly(self.nvars)
        return MultivarRationalPoly._raw(
            self.nvars, {m: c * factor for m, c in self.terms.items()}
        )

    def __mul__(self, other: "MultivarRationalPoly") -> "MultivarRationalPoly":
        self._check_compatible(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                new = out.get(mono, _ZERO) + c1 * c2
                if new == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = new
        return MultivarRationalPoly._raw(self.nvars, out)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MultivarRationalPoly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self) -> int:  # pragma: no cover
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- structure ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def degree_in(self, var: int) -> int:
        return max((m[var] for m in self.terms), default=-1)

    def shift(self, var: int, delta: int) -> "MultivarRationalPoly":
        """Substitute x_var -> x_var + delta, expanded by the binomial theorem."""
        if delta == 0:
            return self
        out: dict[Monomial, Fraction] = {}
        for mono, coef in self.terms.items():
            e = mono[var]
            base = list(mono)
            power = 1
            for l in range(e, -1, -1):
                base[var] = l
                c = coef * (math.comb(e, l) * power)
                power *= delta
                key = tuple(base)
                new = out.get(key, _ZERO) + c
                if new == 0:
                    out.pop(key, None)
                else:
                    out[key] = new
        return MultivarRationalPoly._raw(self.nvars, out)

    def discrete_lap(self) -> "MultivarRationalPoly":
        """sum_j [p(x + e_j) + p(x - e_j) - 2 p(x)] over all variables, exact.

        Odd-order binomial terms cancel in the symmetric stencil, so only the
        even part is generated: Delta_d x^e = sum_{l < e, e-l even} 2 C(e,l) x^l.
        """
        out: dict[Monomial, Fraction] = {}
        for var in range(self.nvars):
            for mono, coef in self.terms.items():
                e = mono[var]
                if e < 2:
                    continue
                base = list(mono)
                for l in range(e - 2, -1, -2):
                    base[var] = l
                    c = coef * (2 * math.comb(e, l))
                    key = tuple(base)
                    new = out.get(key, _ZERO) + c
                    if new == 0:
                        out.pop(key, None)
                    else:
                        out[key] = new
        return MultivarRationalPoly._raw(self.nvars, out)

    def __call__(self, point: Iterable[Rational]) -> Fraction:
        pt = list(point)
        if len(pt) != self.nvars:
            raise ValueError("point dimension mismatch")
        if all(isinstance(x, int) for x in pt):
            return self._eval_int(pt)
        return self._eval_frac([Fraction(x) for x in pt])

    def _eval_int(self, pt: list[int]) -> Fraction:
        # integer points: clear the common denominator and work in plain ints
        den = math.lcm(*(c.denominator for c in self.terms.values())) if self.terms else 1
        powers: list[list[int]] = []
        for v in range(self.nvars):
            row = [1]
            for _ in range(max(0, self.degree_in(v))):
                row.append(row[-1] * pt[v])
            powers.append(row)
        acc = 0
        for mono, coef in self.terms.items():
            term = coef.numerator * (den // coef.denominator)
            for v, e in enumerate(mono):
                if e:
                    term *= powers[v][e]
            acc += term
        return Fraction(acc, den)

    def _eval_frac(self, pt: list[Fraction]) -> Fraction:
        powers: list[list[Fraction]] = []
        for v in range(self.nvars):
            row = [Fraction(1)]
            for _ in range(max(0, self.degree_in(v))):
                row.append(row[-1] * pt[v])
            powers.append(row)
        acc = Fraction(0)
        for mono, coef in self.terms.items():
            term = coef
            for v, e in enumerate(mono):
                if e:
                    term *= powers[v][e]
            acc += term
        return acc

    def lift(self, nvars: int, positions: tuple[int, ...]) -> "MultivarRationalPoly":
        """Re-embed into a larger variable set; positions[i] is the new slot of var i."""
        out: dict[Monomial, Fraction] = {}
        for mono, coef in self.terms.items():
            new = [0] * nvars
            for pos, e in zip(positions, mono):
                new[pos] = e
            out[tuple(new)] = coef
        return MultivarRationalPoly(nvars, out)

    def max_coeff_bits(self) -> int:
        return max(
            (c.numerator.bit_length() + c.denominator.bit_length() for c in self.terms.values()),
            default=0,
        )

    def total_bits(self) -> int:
        return sum(
            c.numerator.bit_length() + c.denominator.bit_length() for c in self.terms.values()
        )

    def to_json_map(self) -> dict[str, str]:
        return {
            ",".join(map(str, mono)): f"{c.numerator}/{c.denominator}"
            for mono, c in sorted(self.terms.items())
        }

    @classmethod
    def from_json_map(cls, nvars: int, data: Mapping[str, str]) -> "MultivarRationalPoly":
        terms = {
            tuple(int(p) for p in key.split(",")): Fraction(val) for key, val in data.items()
        }
        return cls(nvars, terms)

    def __repr__(self) -> str:  # pragma: no cover
        return f"MultivarRationalPoly(nvars={self.nvars}, terms={len(self.terms)})"


# ---------------------------------------------------------------------------
# Exact grid interpolation (tensor Newton form)
# ---------------------------------------------------------------------------


def _newton_1d(xs: list[int], vals: list[Fraction]) -> list[Fraction]:
    """Divided differences of (xs, vals), exact."""
    dd = list(vals)
    n = len(xs)
    for level in range(1, n):
        for i in range(n - 1, level - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level])
    return dd


def _univar_from_newton(xs: list[int], dd: list[Fraction]) -> UnivarRationalPoly:
    coeffs = [Fraction(0)]
    basis = [Fraction(1)]  # coefficients of prod_{j<i} (t - x_j)
    for i, d in enumerate(dd):
        for p, b in enumerate(basis):
            if len(coeffs) <= p:
                coeffs.append(Fraction(0))
            coeffs[p] += d * b
        # extend the basis polynomial by (t - xs[i])
        new = [Fraction(0)] * (len(basis) + 1)
        for p, b in enumerate(basis):
            new[p] -= b * xs[i]
            new[p + 1] += b
        basis = new
    return UnivarRationalPoly(tuple(coeffs))


def grid_interpolate(box: Box, values: Mapping[Coords, Rational]) -> MultivarRationalPoly:
    """Exact tensor-product Newton interpolant of values on a full integer grid.

    Agrees with the input at every grid point; the degree in each variable is
    at most (grid size - 1) along that axis.  An incomplete grid is an error.
    """
    nvars = box.ndim
    vals: dict[Coords, Fraction] = {}
    for pt in box.points():
        if pt not in values:
            raise ValueError(f"grid value missing at {pt}")
        vals[pt] = Fraction(values[pt])
    return _grid_interpolate_rec(box, vals)


def _grid_interpolate_rec(box: Box, vals: dict[Coords, Fraction]) -> MultivarRationalPoly:
    nvars = box.ndim
    xs = list(range(box.lo[0], box.hi[0] + 1))
    if nvars == 1:
        dd = _newton_1d(xs, [vals[(x,)] for x in xs])
        uni = _univar_from_newton(xs, dd)
        return MultivarRationalPoly(1, {(p,): c for p, c in enumerate(uni.coeffs)})
    rest_box = Box(box.lo[1:], box.hi[1:])
    rest_pts = list(rest_box.points())
    # divided differences along axis 0 for every cross point
    dd_per_rest = {
        rest: _newton_1d(xs, [vals[(x,) + rest] for x in xs]) for rest in rest_pts
    }
    total = MultivarRationalPoly(nvars)
    basis = UnivarRationalPoly((Fraction(1),))
    positions = tuple(range(1, nvars))
    for i in range(len(xs)):
        level_vals = {rest: dd_per_rest[rest][i] for rest in rest_pts}
        c_i = _grid_interpolate_rec(rest_box, level_vals).lift(nvars, positions)
        basis_poly = MultivarRationalPoly(
            nvars, {(p,) + (0,) * (nvars - 1): c for p, c in enumerate(basis.coeffs)}
        )
        total = total + basis_poly * c_i
        # multiply the running basis by (t - xs[i])
        shifted = [Fraction(0)] * (len(basis.coeffs) + 1)
        for p, b in enumerate(basis.coeffs):
            shifted[p] -= b * xs[i]
            shifted[p + 1] += b
        basis = UnivarRationalPoly(tuple(shifted))
    return total


# ---------------------------------------------------------------------------
# The layer-coefficient system
# ---------------------------------------------------------------------------


def solve_coefficient_system(
    G0: MultivarRationalPoly, G1: MultivarRationalPoly, M: int
) -> list[MultivarRationalPoly]:
    """Cross-section polynomials Q_0..Q_(M+1) with Q_0 = G0, Q_1 = G1 - G0 and

        Q_(i+2) + sum_k c_(k,i) Delta_d Q_k = 0   for i = 0..M-1,

    where c_(k,i) is the t^i coefficient of q_k.  Degrees are capped
    structurally (deg Q_j <= M - j + 1); uniqueness makes any failure to
    stabilize an internal error, not a data error.
    """
    if G0.nvars != G1.nvars:
        raise ValueError("G0 and G1 must share a variable set")
    if max(G0.degree(), G1.degree()) > M:
        raise ValueError("input polynomial degree exceeds M")
    nvars = G0.nvars
    qs = second_difference_basis(M + 1)
    coeffs = [[qs[k].coefficient(i) for i in range(M + 2)] for k in range(M + 2)]
    Qs: list[MultivarRationalPoly] = [G0, G1 - G0] + [
        MultivarRationalPoly(nvars) for _ in range(M)
    ]
    laps = [Q.discrete_lap() for Q in Qs]
    for _ in range(M + 4):
        new_Qs = list(Qs[:2])
        stale: list[int] = []
        for i in range(M):
            acc = MultivarRationalPoly(nvars)
            for k in range(M + 2):
                c = coeffs[k][i]
                if c != 0 and not laps[k].is_zero():
                    acc = acc + laps[k].scaled(c)
            candidate = -acc
            new_Qs.append(candidate)
            if candidate != Qs[i + 2]:
                stale.append(i + 2)
        Qs = new_Qs
        if not stale:
            break
        for j in stale:
            laps[j] = Qs[j].discrete_lap()
    else:
        raise RuntimeError(
            "layer-coefficient iteration failed to stabilize; this is a bug, not a data error"
        )
    _verify_coefficient_system(Qs, coeffs, M)
    return Qs


def _verify_coefficient_system(
    Qs: list[MultivarRationalPoly], coeffs: list[list[Fraction]], M: int
) -> None:
    nvars = Qs[0].nvars
    laps = [Q.discrete_lap() for Q in Qs]
    for i in range(M + 2):
        acc = Qs[i + 2] if i < M else MultivarRationalPoly(nvars)
        for k in range(M + 2):
            c = coeffs[k][i]
            if c != 0:
                acc = acc + laps[k].scaled(c)
        if not acc.is_zero():
            raise AssertionError(f"coefficient-system identity fails at power {i}")
    for j in range(2, M + 2):
        if Qs[j].degree() > M - j + 1:
            raise AssertionError(f"degree cap violated for Q_{j}")


def assemble(
    Qs: list[MultivarRationalPoly], qs: list[UnivarRationalPoly]
) -> MultivarRationalPoly:
    """P(x, t) = sum_j q_j(t) Q_j(x), over (nvars + 1) variables."""
    if len(Qs) > len(qs):
        raise ValueError("need a q_j for every Q_j")
    nvars = Qs[0].nvars + 1
    out: dict[Monomial, Fraction] = {}
    for Q, q in zip(Qs, qs):
        for mono, coef in Q.terms.items():
            for power, c in enumerate(q.coeffs):
                if c == 0:
                    continue
                key = mono + (power,)
                new = out.get(key, Fraction(0)) + coef * c
                if new == 0:
                    out.pop(key, None)
                else:
                    out[key] = new
    return MultivarRationalPoly(nvars, out)


# ---------------------------------------------------------------------------
# Exact lattice helpers
# ---------------------------------------------------------------------------


def _exact_residual(vals: Mapping[Coords, Fraction], pt: Coords, n: int) -> Fraction:
    acc = Fraction(-2 * n) * vals[pt]
    for j in range(n):
        for step in (1, -1):
            nb = list(pt)
            nb[j] += step
            acc += vals[tuple(nb)]
    return acc


def _newton_extrapolate(xs: list[int], dd: list[Fraction], t: int) -> Fraction:
    """Evaluate the Newton-form interpolant of (xs, dd) at t, exact."""
    acc = Fraction(0)
    basis = Fraction(1)
    for x, d in zip(xs, dd):
        acc += d * basis
        basis *= t - x
    return acc


def _extend_axis_exact(
    box: Box,
    vals: dict[Coords, Fraction],
    axis: int,
    new_lo: int,
    new_hi: int,
    side: Rational | None,
) -> tuple[Box, dict[Coords, Fraction]]:
    """Exact layer recursion along one axis.

    Wall values of the new layers come from `side` (a constant), or, when
    side is None, from exact Newton extrapolation of each wall line -- that
    choice reproduces restrictions of harmonic polynomials exactly, since
    their wall lines are themselves polynomials of degree the line covers.
    """
    n = box.ndim
    out = dict(vals)
    new_box = box.with_axis(axis, new_lo, new_hi)
    cross = [
        (j, range(box.lo[j], box.hi[j] + 1)) for j in range(n) if j != axis
    ]
    xs = list(range(box.lo[axis], box.hi[axis] + 1))
    wall_dd: dict[Coords, list[Fraction]] = {}

    def wall_value(combo: Coords, t: int) -> Fraction:
        if side is not None:
            return Fraction(side)
        if combo not in wall_dd:
            line = []
            for x in xs:
                pt = [0] * n
                pt[axis] = x
                for (j, _), c in zip(cross, combo):
                    pt[j] = c
                line.append(vals[tuple(pt)])
            wall_dd[combo] = _newton_1d(xs, line)
        return _newton_extrapolate(xs, wall_dd[combo], t)

    def fill(t: int, direction: int) -> None:
        for combo in itertools.product(*(rng for _, rng in cross)):
            pt = [0] * n
            pt[axis] = t
            wall = False
            for (j, _), c in zip(cross, combo):
                pt[j] = c
                if c == box.lo[j] or c == box.hi[j]:
                    wall = True
            pt_t = tuple(pt)
            if wall:
                out[pt_t] = wall_value(combo, t)
                continue
            prev1 = list(pt)
            prev1[axis] = t - direction
            prev2 = list(pt)
            prev2[axis] = t - 2 * direction
            acc = 2 * n * out[tuple(prev1)] - out[tuple(prev2)]
            for (j, _), c in zip(cross, combo):
                nb = list(prev1)
                nb[j] = c + 1
                acc -= out[tuple(nb)]
                nb[j] = c - 1
                acc -= out[tuple(nb)]
            out[pt_t] = acc

    for t in range(box.hi[axis] + 1, new_hi + 1):
        fill(t, +1)
    for t in range(box.lo[axis] - 1, new_lo - 1, -1):
        fill(t, -1)
    return new_box, out


def exact_harmonic_cube(
    box: Box, boundary: Mapping[Coords, Rational]
) -> dict[Coords, Fraction]:
    """Exact Dirichlet solve on a box: rational Gaussian elimination.

    Boundary values are taken on all boundary points (corner values default
    to 0 if not supplied; they never feed the interior).  Intended for the
    small cubes the polynomial extension works on.
    """
    from .lattice import enumerate_boundary

    n = box.ndim
    interior = [pt for pt in box.points() if box.extremal_count(pt) == 0]
    index = {pt: i for i, pt in enumerate(interior)}
    vals: dict[Coords, Fraction] = {pt: Fraction(0) for pt in enumerate_boundary(box, "all")}
    for pt, v in boundary.items():
        pt = tuple(int(c) for c in pt)
        if not box.contains(pt) or box.extremal_count(pt) == 0:
            raise ValueError(f"{pt} is not a boundary point of the box")
        vals[pt] = Fraction(v)
    m = len(interior)
    mat = [[Fraction(0)] * m for _ in range(m)]
    rhs = [Fraction(0)] * m
    for pt, i in index.items():
        mat[i][i] = Fraction(2 * n)
        for j in range(n):
            for step in (1, -1):
                nb = list(pt)
                nb[j] += step
                nb_t = tuple(nb)
                if nb_t in index:
                    mat[i][index[nb_t]] -= 1
                else:
                    rhs[i] += vals[nb_t]
    sol = _solve_exact(mat, rhs)
    out = dict(vals)
    for pt, i in index.items():
        out[pt] = sol[i]
    return out


def _solve_exact(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    m = len(mat)
    a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if a[r][col] != 0), None)
        if pivot is None:
            raise AssertionError("singular system in exact solve; this is a bug")
        a[col], a[pivot] = a[pivot], a[col]
        pv = a[col][col]
        for r in range(m):
            if r == col or a[r][col] == 0:
                continue
            f = a[r][col] / pv
            for c in range(col, m + 1):
                a[r][c] -= f * a[col][c]
    return [a[i][m] / a[i][i] for i in range(m)]


# ---------------------------------------------------------------------------
# The extension pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtensionResult:
    """A verified discrete harmonic polynomial extension."""

    P: MultivarRationalPoly
    degree: int
    match_verified: bool
    harmonicity_sample: dict
    max_coeff_bits: int
    total_bits: int


def _as_exact_values(
    f: GridFunction | Mapping[Coords, Rational], box: Box | None
) -> tuple[Box, dict[Coords, Fraction]]:
    if isinstance(f, GridFunction):
        vals = {pt: Fraction(f.at(pt)) for pt in f.box.points()}
        return f.box, vals
    if box is None:
        raise ValueError("a plain mapping needs an explicit box")
    vals = {}
    for pt in box.points():
        if pt not in f:
            raise ValueError(f"cube value missing at {pt}")
        vals[pt] = Fraction(f[pt])
    return box, vals


def extend_from_cube(
    f: GridFunction | Mapping[Coords, Rational],
    box: Box | None = None,
    *,
    side: Rational | None = None,
    bit_budget: int = DEFAULT_BIT_BUDGET,
) -> ExtensionResult:
    """Extend discrete harmonic cube data to a harmonic polynomial on the lattice.

    f lives on K_N = [-N, N]^n (a GridFunction, whose float values are taken
    as the exact rationals they are, or an explicit mapping with `box`).
    Raises NonHarmonicInputError naming the first violating interior point,
    and ResourceLimitError if exact coefficients outgrow `bit_budget` total
    bits.  The result satisfies P = f on K_N exactly, Delta_d P = 0
    symbolically, and deg P <= 6N(n-1) + 1.

    The padding's wall data defaults to exact polynomial extrapolation, so
    restrictions of low-degree harmonic polynomials extend to themselves; a
    constant `side` overrides it (the vanishing witness needs a nonzero one).
    """
    cube, vals = _as_exact_values(f, box)
    n = cube.ndim
    if cube.lo != tuple(-h for h in cube.hi) or len(set(cube.hi)) != 1:
        raise ValueError("cube data must live on [-N, N]^n")
    N = cube.hi[0]
    for pt in cube.points():
        if cube.extremal_count(pt) == 0:
            res = _exact_residual(vals, pt, n)
            if res != 0:
                raise NonHarmonicInputError(pt, res)

    # pad each cross axis out to +-3N
    domain = cube
    for axis in range(n - 1):
        domain, vals = _extend_axis_exact(domain, vals, axis, -3 * N, 3 * N, side)
        _check_bits(vals, bit_budget)

    cross_box = Box((-3 * N,) * (n - 1), (3 * N,) * (n - 1))
    layer0 = {pt[:-1]: v for pt, v in vals.items() if pt[-1] == -N}
    layer1 = {pt[:-1]: v for pt, v in vals.items() if pt[-1] == -N + 1}
    G0 = grid_interpolate(cross_box, layer0)
    G1 = grid_interpolate(cross_box, layer1)
    M = 6 * N * (n - 1)
    if max(G0.degree(), G1.degree()) > M:
        raise AssertionError("interpolants exceed the expected degree bound")
    qs = second_difference_basis(M + 1)
    Qs = solve_coefficient_system(G0, G1, M)
    P = assemble(Qs, qs).shift(n - 1, N)
    if P.total_bits() > bit_budget:
        raise ResourceLimitError(
            f"extension coefficients reached {P.total_bits()} bits (budget {bit_budget})"
        )

    for pt in cube.points():
        if P(pt) != vals[pt]:
            raise AssertionError(f"extension mismatch at {pt}; this is a bug")
    lap = P.discrete_lap()
    if not lap.is_zero():
        raise AssertionError("assembled polynomial is not discrete harmonic; this is a bug")
    degree = P.degree()
    if degree > M + 1:
        raise AssertionError("degree bound violated; this is a bug")
    harmonicity = {
        "symbolic_stencil_zero": True,
        "match_points": cube.point_count(),
    }
    return ExtensionResult(P, degree, True, harmonicity, P.max_coeff_bits(), P.total_bits())


def _check_bits(vals: Mapping[Coords, Fraction], budget: int) -> None:
    total = sum(v.numerator.bit_length() + v.denominator.bit_length() for v in vals.values())
    if total > budget:
        raise ResourceLimitError(f"padded data reached {total} bits (budget {budget})")


def vanishing_witness(N: int, n: int = 2) -> MultivarRationalPoly:
    """A nonzero discrete harmonic polynomial vanishing on all of K_N.

    Built by extending the zero cube with nonzero padding side data: the
    padded function is still harmonic and still zero on the cube, but its
    polynomial extension picks up the side values and cannot vanish
    identically.
    """
    if N < 1 or n < 2:
        raise ValueError("need N >= 1 and n >= 2")
    cube = Box((-N,) * n, (N,) * n)
    zeros = {pt: Fraction(0) for pt in cube.points()}
    result = extend_from_cube(zeros, cube, side=1)
    if result.P.is_zero():
        raise AssertionError("witness degenerated to the zero polynomial; this is a bug")
    return result.P
