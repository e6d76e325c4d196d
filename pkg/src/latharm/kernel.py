"""The explicit discrete Poisson kernel on the unit cube.

Separated modes: for each multi-index K in [1, 2N-1]^(n-1) the rate a_K is
the positive solution of cosh(h a / 2) = n - sum_j cos(pi k_j h / 2), and

    f_K(x) = sinh(a_K (x_n + 1)/2) * prod_j sin(pi k_j (x_j + 1)/2)

is discrete harmonic on the cube and vanishes on every face except x_n = 1.
Summing over K with discrete-sine orthogonality yields the kernel P(x, y)
that is 1 at the boundary point y and 0 at every other boundary point, so
u(x) = sum_y g(y) P(x, y) solves the Dirichlet problem.

Arbitrary faces reduce to the canonical face x_n = 1 through the cube's
symmetry group (an axis swap plus an optional reflection, applied to x and y
simultaneously).  All sinh ratios are evaluated in exp-difference form so no
intermediate overflows, whatever the mesh count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .lattice import (
    BoundaryData,
    Box,
    Coords,
    GridFunction,
    LatticeSpec,
    validate_boundary_data,
)

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class ComplexDomain:
    """Axis-aligned rectangle in the complex plane."""

    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self) -> None:
        if self.re_lo > self.re_hi or self.im_lo > self.im_hi:
            raise ValueError("degenerate complex domain")

    def contains(self, z: complex) -> bool:
        return self.re_lo <= z.real <= self.re_hi and self.im_lo <= z.imag <= self.im_hi

    def grid(self, n_re: int, n_im: int) -> np.ndarray:
        re = np.linspace(self.re_lo, self.re_hi, n_re)
        im = np.linspace(self.im_lo, self.im_hi, n_im)
        return re[:, None] + 1j * im[None, :]


#: Strip where the one-variable sections of the kernel stay uniformly small.
STANDARD_DOMAIN = ComplexDomain(-0.5, 0.5, -1.0 / 16.0, 1.0 / 16.0)


def mode_rate(spec: LatticeSpec, K: MultiIndex) -> float:
    """Positive rate a solving cosh(h a / 2) = n - sum_j cos(pi k_j h / 2)."""
    _check_multi_index(spec, K)
    rhs = spec.n - math.fsum(math.cos(math.pi * k / (2 * spec.N)) for k in K)
    return 2.0 * spec.N * math.acosh(rhs)


def rate_lower_bound(spec: LatticeSpec, K: MultiIndex) -> float:
    """min(2N, ||K||): every mode rate sits above this."""
    return min(2.0 * spec.N, math.sqrt(sum(k * k for k in K)))


def _check_multi_index(spec: LatticeSpec, K: MultiIndex) -> None:
    if len(K) != spec.n - 1:
        raise ValueError(f"multi-index must have length {spec.n - 1}, got {len(K)}")
    if any(not 1 <= k <= 2 * spec.N - 1 for k in K):
        raise ValueError(f"multi-index {K} outside [1, {2 * spec.N - 1}]^{spec.n - 1}")


class KernelTable:
    """Precomputed mode rates and normalizations for one lattice spec.

    Immutable after construction; all evaluations are pure functions of the
    table, so it can be shared freely across parallel workers.
    """

    __slots__ = ("spec", "rates", "denom_neg_expm1", "face_norm")

    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        n, N = spec.n, spec.N
        k = np.arange(1, 2 * N, dtype=np.float64)
        cos_k = np.cos(np.pi * k / (2 * N))
        grids = np.meshgrid(*([cos_k] * (n - 1)), indexing="ij")
        rhs = n - sum(grids)
        self.rates = 2.0 * N * np.arccosh(rhs)
        self.rates.setflags(write=False)
        # 1 - exp(-2a), the sinh(a) denominator in exp-difference form
        self.denom_neg_expm1 = -np.expm1(-2.0 * self.rates)
        self.denom_neg_expm1.setflags(write=False)
        self.face_norm = float(N) ** (1 - n)

    def rate(self, K: MultiIndex) -> float:
        _check_multi_index(self.spec, K)
        return float(self.rates[tuple(k - 1 for k in K)])

    def cube(self) -> Box:
        return self.spec.unit_cube()


def kernel_table(spec: LatticeSpec) -> KernelTable:
    return KernelTable(spec)


def basis_eval(spec: LatticeSpec, K: MultiIndex, x: Coords) -> float:
    """The separated harmonic mode sinh(a (x_n+1)/2) prod_j sin(pi k_j (x_j+1)/2).

    Raw formula; fine for moderate N (the kernel itself always goes through
    the overflow-safe ratio form).
    """
    _check_multi_index(spec, K)
    if not spec.unit_cube().contains(x):
        raise ValueError(f"point {x} outside the closed unit cube")
    N = spec.N
    a = mode_rate(spec, K)
    val = math.sinh(a * (x[-1] + N) / (2 * N))
    for k, xi in zip(K, x[:-1]):
        val *= math.sin(math.pi * k * (xi + N) / (2 * N))
    return val


# ---------------------------------------------------------------------------
# Face reduction
# ---------------------------------------------------------------------------


def face_of(box: Box, y: Coords) -> tuple[int, int]:
    """(axis, sign) of the unique face a face-interior boundary point sits on."""
    ext = [
        (j, -1 if y[j] == box.lo[j] else 1)
        for j in range(box.ndim)
        if y[j] == box.lo[j] or y[j] == box.hi[j]
    ]
    if len(ext) != 1:
        raise ValueError(f"{y} is not a face-interior boundary point")
    return ext[0]


def _to_canonical(coords: Coords, axis: int, sign: int) -> tuple[int, ...]:
    """Swap `axis` with the last axis, then reflect the last axis if sign < 0."""
    c = list(coords)
    c[axis], c[-1] = c[-1], c[axis]
    if sign < 0:
        c[-1] = -c[-1]
    return tuple(c)


def _from_canonical_field(field: np.ndarray, axis: int, sign: int) -> np.ndarray:
    """Inverse of _to_canonical applied to a full-cube field array."""
    if sign < 0:
        field = np.flip(field, axis=-1)
    return np.swapaxes(field, axis, field.ndim - 1)


@lru_cache(maxsize=32)
def _sine_matrix(N: int) -> np.ndarray:
    """S[p, k] = sin(pi k p / (2N)) for p in 0..2N, k in 1..2N-1."""
    p = np.arange(0, 2 * N + 1, dtype=np.float64)
    k = np.arange(1, 2 * N, dtype=np.float64)
    S = np.sin(np.pi * np.outer(p, k) / (2 * N))
    S[0, :] = 0.0
    S[2 * N, :] = 0.0  # sin(pi k) exactly
    S.setflags(write=False)
    return S


def _ratio_rows(table: KernelTable, levels: np.ndarray) -> np.ndarray:
    """sinh(a t)/sinh(a) for t = level/(2N), stacked over levels.

    Shape: (len(levels),) + rates.shape.  Exp-difference form:
    exp(a (t-1)) * (1 - exp(-2 a t)) / (1 - exp(-2 a)); every exponent is
    nonpositive, so the evaluation never overflows.
    """
    N = table.spec.N
    t = np.asarray(levels, dtype=np.float64) / (2.0 * N)
    t = t.reshape((-1,) + (1,) * table.rates.ndim)
    a = table.rates[None, ...]
    return np.exp(a * (t - 1.0)) * (-np.expm1(-2.0 * a * t)) / table.denom_neg_expm1[None, ...]


def _transverse_sines(table: KernelTable, offsets: tuple[int, ...]) -> list[np.ndarray]:
    """sin(pi k (p_j)/(2N)) vectors for each transverse axis, p_j = coord + N."""
    S = _sine_matrix(table.spec.N)
    return [S[p, :] for p in offsets]


def _mode_weights(table: KernelTable, y_canon: tuple[int, ...]) -> np.ndarray:
    """prod_j sin(pi k_j (y_j + 1)/2) over the mode grid for a canonical y."""
    N = table.spec.N
    vecs = _transverse_sines(table, tuple(c + N for c in y_canon[:-1]))
    w = vecs[0]
    for v in vecs[1:]:
        w = np.multiply.outer(w, v)
    return w


def kernel_eval(table: KernelTable, x: Coords, y: Coords) -> float:
    """P(x, y): the discrete harmonic measure of boundary point y, evaluated at x."""
    cube = table.cube()
    if not cube.contains(x):
        raise ValueError(f"point {x} outside the closed unit cube")
    axis, sign = face_of(cube, y)
    N = table.spec.N
    xc = _to_canonical(x, axis, sign)
    yc = _to_canonical(y, axis, sign)
    wy = _mode_weights(table, yc)
    vecs = _transverse_sines(table, tuple(c + N for c in xc[:-1]))
    wx = vecs[0]
    for v in vecs[1:]:
        wx = np.multiply.outer(wx, v)
    ratio = _ratio_rows(table, np.array([xc[-1] + N]))[0]
    return table.face_norm * float(np.sum(wx * wy * ratio))


def kernel_field(table: KernelTable, y: Coords) -> GridFunction:
    """P(., y) over the whole closed cube as a GridFunction."""
    cube = table.cube()
    axis, sign = face_of(cube, y)
    N, n = table.spec.N, table.spec.n
    yc = _to_canonical(y, axis, sign)
    wy = _mode_weights(table, yc)
    levels = np.arange(0, 2 * N + 1)
    ratios = _ratio_rows(table, levels)  # (L, modes...)
    weighted = wy[None, ...] * ratios
    S = _sine_matrix(N)
    # contract each transverse mode axis against the sine matrix
    out = weighted  # axes: (L, k_1, ..., k_{n-1})
    for _ in range(n - 1):
        out = np.tensordot(out, S, axes=([1], [1]))  # -> (L, ..., p)
    # out axes: (L, p_1, ..., p_{n-1}); move L to the end
    out = np.moveaxis(out, 0, -1) * table.face_norm
    field = _from_canonical_field(out, axis, sign)
    return GridFunction(cube, field)


def _face_mode_coefficients(
    table: KernelTable, g: BoundaryData
) -> dict[tuple[int, int], np.ndarray]:
    """Per-face DST-I coefficients of the boundary data, in canonical coords."""
    cube = table.cube()
    g = validate_boundary_data(cube, g)
    N, n = table.spec.N, table.spec.n
    shape = (2 * N - 1,) * (n - 1)
    per_face: dict[tuple[int, int], np.ndarray] = {}
    for axis in range(n):
        for sign in (-1, 1):
            per_face[(axis, sign)] = np.zeros(shape)
    for pt, val in g.items():
        axis, sign = face_of(cube, pt)
        pc = _to_canonical(pt, axis, sign)
        idx = tuple(c + N - 1 for c in pc[:-1])
        per_face[(axis, sign)][idx] = val
    norm = 2.0 ** (n - 1)
    return {
        face: scipy.fft.dstn(arr, type=1) / norm for face, arr in per_face.items()
    }


def represent(table: KernelTable, g: BoundaryData, x: Coords) -> float:
    """sum_y g(y) P(x, y): the harmonic extension of g evaluated at x."""
    cube = table.cube()
    if not cube.contains(x):
        raise ValueError(f"point {x} outside the closed unit cube")
    N = table.spec.N
    modes = _face_mode_coefficients(table, g)
    total = 0.0
    for (axis, sign), ghat in sorted(modes.items()):
        xc = _to_canonical(x, axis, sign)
        vecs = _transverse_sines(table, tuple(c + N for c in xc[:-1]))
        wx = vecs[0]
        for v in vecs[1:]:
            wx = np.multiply.outer(wx, v)
        ratio = _ratio_rows(table, np.array([xc[-1] + N]))[0]
        total += float(np.sum(ghat * wx * ratio))
    return table.face_norm * total


def batch_solve(
    table: KernelTable, g: BoundaryData, region: Box, method: str = "transform"
) -> GridFunction:
    """Values of the harmonic extension of g at every point of `region`.

    method="transform" evaluates the mode sums by fast discrete sine
    transforms over whole layers; method="pointwise" calls `represent` at
    each point and serves as the slow correctness oracle.  Both use the same
    fixed summation structures, so results differ only at roundoff level.
    """
    cube = table.cube()
    if not cube.contains_box(region):
        raise ValueError(f"region {region.lo}..{region.hi} exceeds the unit cube")
    if method == "pointwise":
        arr = np.empty(region.shape)
        modes = _face_mode_coefficients(table, g)  # validates g once
        for pt in region.points():
            arr[region.index(pt)] = _represent_from_modes(table, modes, pt)
        return GridFunction(region, arr)
    if method != "transform":
        raise ValueError(f"unknown method {method!r}")

    N, n = table.spec.N, table.spec.n
    modes = _face_mode_coefficients(table, g)
    inner = slice(1, 2 * N)  # p = 1 .. 2N-1
    norm = 2.0 ** (n - 1)
    total = np.zeros(cube.shape)
    ratios = _ratio_rows(table, np.arange(0, 2 * N + 1))  # (L, modes...)
    for (axis, sign), ghat in sorted(modes.items()):
        v = ghat[None, ...] * ratios
        rows = scipy.fft.dstn(v, type=1, axes=tuple(range(1, n))) / norm  # (L, p...)
        canon = np.zeros(cube.shape)
        sel: list[slice] = [inner] * (n - 1) + [slice(None)]
        canon[tuple(sel)] = np.moveaxis(rows, 0, -1)
        total += _from_canonical_field(canon, axis, sign)
    total *= table.face_norm
    return GridFunction(region, total[cube.slices_for(region)].copy())


def _represent_from_modes(
    table: KernelTable, modes: dict[tuple[int, int], np.ndarray], x: Coords
) -> float:
    N = table.spec.N
    total = 0.0
    for (axis, sign), ghat in sorted(modes.items()):
        xc = _to_canonical(x, axis, sign)
        vecs = _transverse_sines(table, tuple(c + N for c in xc[:-1]))
        wx = vecs[0]
        for v in vecs[1:]:
            wx = np.multiply.outer(wx, v)
        ratio = _ratio_rows(table, np.array([xc[-1] + N]))[0]
        total += float(np.sum(ghat * wx * ratio))
    return table.face_norm * total


# ---------------------------------------------------------------------------
# Complex one-variable sections
# ---------------------------------------------------------------------------


def kernel_complex_eval(
    table: KernelTable,
    y: Coords,
    frozen: tuple[float, ...],
    axis: int,
    z: complex,
    domain: ComplexDomain = STANDARD_DOMAIN,
) -> complex:
    """P(x, y) with physical coordinate x_axis continued to complex z.

    `frozen` holds the remaining n-1 physical coordinates (in axis order,
    skipping `axis`); the uniform bound only holds when they lie in
    [-1/2, 1/2] and z in the declared domain.  The formula itself is entire,
    so a z outside the domain is a warning, not an error.

    Exponents of the sine and sinh factors are combined before
    exponentiation, so the evaluation stays finite for any mesh count.
    """
    n, N = table.spec.n, table.spec.N
    if len(frozen) != n - 1:
        raise ValueError(f"need {n - 1} frozen coordinates, got {len(frozen)}")
    if not 0 <= axis < n:
        raise ValueError(f"axis {axis} out of range")
    if not domain.contains(complex(z)):
        warnings.warn(
            f"z={z} outside the declared domain; the uniform bound does not apply",
            stacklevel=2,
        )
    cube = table.cube()
    face_axis, sign = face_of(cube, y)
    # physical coordinates with a symbolic slot
    coords: list[complex | float | None] = list(frozen[:axis]) + [None] + list(frozen[axis:])
    # canonical map: swap the face axis to the end, then reflect the last
    # coordinate if y sits on the negative face
    coords[face_axis], coords[-1] = coords[-1], coords[face_axis]
    zz = complex(z)
    if sign < 0:
        if coords[-1] is None:
            zz = -zz
        else:
            coords[-1] = -float(coords[-1])
    yc = _to_canonical(y, face_axis, sign)
    wy = _mode_weights(table, yc)

    slot = coords.index(None)
    rates = table.rates
    k_axis = np.arange(1, 2 * N, dtype=np.float64)

    weight = wy.astype(np.complex128)
    for pos in range(n - 1):
        if pos == slot:
            continue
        vec = np.sin(np.pi * k_axis * (float(coords[pos]) + 1.0) / 2.0)
        shape = [1] * (n - 1)
        shape[pos] = 2 * N - 1
        weight = weight * vec.reshape(shape)

    if slot == n - 1:
        # complex argument in the sinh ratio
        t = (zz + 1.0) / 2.0
        a = rates
        ratio = np.exp(a * (t - 1.0)) * (1.0 - np.exp(-2.0 * a * t)) / table.denom_neg_expm1
        total = np.sum(weight * ratio)
    else:
        t_real = (float(coords[n - 1]) + 1.0) / 2.0
        a = rates
        log_ratio_exp = a * (t_real - 1.0)  # <= 0
        bounded_ratio = (-np.expm1(-2.0 * a * t_real)) / table.denom_neg_expm1
        # scaled complex sine: sin(w) = e^m * (e^{iw-m} - e^{-iw-m}) / 2i
        w = np.pi * k_axis * (zz + 1.0) / 2.0
        shape = [1] * (n - 1)
        shape[slot] = 2 * N - 1
        m = np.abs(w.imag)
        scaled_sin = (np.exp(1j * w - m) - np.exp(-1j * w - m)) / 2j
        expo = np.exp(m.reshape(shape) + log_ratio_exp)
        total = np.sum(weight * bounded_ratio * expo * scaled_sin.reshape(shape))
    return complex(table.face_norm * total)


def holomorphic_sup(
    table: KernelTable,
    *,
    n_re: int = 9,
    n_im: int = 5,
    frozen_values: tuple[float, ...] = (-0.5, -0.25, 0.0, 0.25, 0.5),
    domain: ComplexDomain = STANDARD_DOMAIN,
) -> float:
    """Sampled sup of |P| over the complex strip, across sections and faces.

    Deterministic sample set: a few boundary points per face orientation,
    every axis as the continued variable, frozen coordinates on a fixed grid,
    z on an (n_re x n_im) grid over the domain.
    """
    spec = table.spec
    n, N = spec.n, spec.N
    zs = domain.grid(n_re, n_im).ravel()
    # boundary points on the canonical face at a few transverse positions
    fracs = (0.5, 0.25)
    t_idx = sorted({max(1, min(2 * N - 1, int(round(f * 2 * N)))) for f in fracs})
    ys = []
    for ti in t_idx:
        ys.append(tuple([ti - N] * (n - 1) + [N]))
    # one off-canonical face to exercise the reduction
    ys.append(tuple([-N] + [t_idx[0] - N] * (n - 1)))
    best = 0.0
    for y in ys:
        for axis in range(n):
            for fvals in _frozen_grid(frozen_values, n - 1):
                for z in zs:
                    val = abs(kernel_complex_eval(table, y, fvals, axis, complex(z), domain))
                    if val > best:
                        best = val
    return best


def _frozen_grid(values: tuple[float, ...], count: int) -> list[tuple[float, ...]]:
    if count == 1:
        return [(v,) for v in values]
    # keep the sample count bounded in higher dimensions
    return [tuple([v] * count) for v in values] + [
        tuple(values[(i + j) % len(values)] for j in range(count)) for i in range(len(values))
    ]


def fit_bound_constant(n: int, Ns: tuple[int, ...] = (8, 16, 32, 64, 128)) -> tuple[float, float]:
    """Fit sup_Omega |P| ~ C N^(1-n) over a mesh sweep.

    Returns (C, slope): C is the largest observed sup * N^(n-1), slope the
    log-log fit of sup against N (ideal value 1-n).
    """
    sups = []
    for N in Ns:
        table = KernelTable(LatticeSpec(n, N))
        sups.append(holomorphic_sup(table))
    logs = np.log(np.array(sups))
    slope = float(np.polyfit(np.log(np.array(Ns, dtype=float)), logs, 1)[0])
    C = float(max(s * N ** (n - 1) for s, N in zip(sups, Ns)))
    return C, slope
