"""Lattice geometry, grid functions, and the discrete Laplace stencil.

Points are integer coordinate vectors; a point with integer vector i sits at
physical position i*h where h = 1/N.  Keeping coordinates integral makes
membership tests and boundary classification exact, so no floating-point
tolerance ever enters the geometry.

Boundary convention: a boundary point of a box has at least one coordinate on
the box's bounds; a *face-interior* point has exactly one.  Interior stencils
never reach points with two or more extremal coordinates, so corner and edge
values never influence interior values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

Coords = tuple[int, ...]

# Boundary data is a plain mapping from face-interior points to values.
BoundaryData = Mapping[Coords, float]


@dataclass(frozen=True)
class LatticeSpec:
    """Mesh description: dimension n >= 2 and mesh count N >= 1 (h = 1/N)."""

    n: int
    N: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")
        if self.N < 1:
            raise ValueError(f"mesh count must be >= 1, got {self.N}")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def unit_cube(self) -> "Box":
        """The closed cube [-1, 1]^n, i.e. integer bounds [-N, N]^n."""
        return self.cube(1.0)

    def cube(self, d: float) -> "Box":
        """The closed cube [-d, d]^n; d*N must be a (positive) integer."""
        k = d * self.N
        ik = int(round(k))
        if abs(k - ik) > 1e-9 or ik < 0:
            raise ValueError(f"cube radius {d} is not a nonnegative multiple of h=1/{self.N}")
        return Box((-ik,) * self.n, (ik,) * self.n)


@dataclass(frozen=True)
class Box:
    """Axis-aligned integer box with inclusive bounds per axis."""

    lo: Coords
    hi: Coords

    def __post_init__(self) -> None:
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same length")
        if not lo:
            raise ValueError("box must have at least one axis")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box: lo={lo}, hi={hi}")

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    def point_count(self) -> int:
        return int(np.prod(self.shape))

    def contains(self, pt: Coords) -> bool:
        return len(pt) == self.ndim and all(
            a <= int(p) <= b for p, a, b in zip(pt, self.lo, self.hi)
        )

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c for a, c in zip(self.lo, other.lo)) and all(
            d <= b for d, b in zip(other.hi, self.hi)
        )

    def index(self, pt: Coords) -> tuple[int, ...]:
        """Array offset of a point inside the box."""
        if not self.contains(pt):
            raise KeyError(f"point {tuple(pt)} outside box {self.lo}..{self.hi}")
        return tuple(int(p) - a for p, a in zip(pt, self.lo))

    def points(self) -> Iterator[Coords]:
        """All lattice points of the box in lexicographic (row-major) order."""
        return itertools.product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    def interior(self) -> "Box":
        """The box shrunk by one layer on every side."""
        lo = tuple(a + 1 for a in self.lo)
        hi = tuple(b - 1 for b in self.hi)
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box {self.lo}..{self.hi} has empty interior")
        return Box(lo, hi)

    def has_interior(self) -> bool:
        return all(b - a >= 2 for a, b in zip(self.lo, self.hi))

    def extremal_count(self, pt: Coords) -> int:
        """Number of coordinates of pt sitting on the box bounds."""
        if not self.contains(pt):
            raise KeyError(f"point {tuple(pt)} outside box {self.lo}..{self.hi}")
        return sum(1 for p, a, b in zip(pt, self.lo, self.hi) if p == a or p == b)

    def slices_for(self, sub: "Box") -> tuple[slice, ...]:
        """Array slices selecting a sub-box of this box."""
        if not self.contains_box(sub):
            raise ValueError(f"region {sub.lo}..{sub.hi} exceeds box {self.lo}..{self.hi}")
        return tuple(
            slice(c - a, d - a + 1) for a, c, d in zip(self.lo, sub.lo, sub.hi)
        )

    def with_axis(self, axis: int, lo: int, hi: int) -> "Box":
        new_lo = list(self.lo)
        new_hi = list(self.hi)
        new_lo[axis] = lo
        new_hi[axis] = hi
        return Box(tuple(new_lo), tuple(new_hi))


class GridFunction:
    """Real values on every lattice point of a box, stored dense row-major.

    The value array is frozen after construction; all operations treat a
    GridFunction as an immutable value, so instances can be shared freely
    across parallel workers.
    """

    __slots__ = ("box", "values")

    def __init__(self, box: Box, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != box.shape:
            raise ValueError(
                f"value array shape {values.shape} does not match box shape {box.shape}"
            )
        values.setflags(write=False)
        self.box = box
        self.values = values

    @classmethod
    def from_callable(cls, box: Box, fn: Callable[[Coords], float]) -> "GridFunction":
        arr = np.empty(box.shape)
        for pt in box.points():
            arr[box.index(pt)] = fn(pt)
        return cls(box, arr)

    @classmethod
    def constant(cls, box: Box, value: float) -> "GridFunction":
        return cls(box, np.full(box.shape, float(value)))

    def at(self, pt: Coords) -> float:
        return float(self.values[self.box.index(pt)])

    def sub_array(self, region: Box) -> np.ndarray:
        """Values over a sub-box, as a read-only view."""
        return self.values[self.box.slices_for(region)]

    def __repr__(self) -> str:  # pragma: no cover
        return f"GridFunction(box={self.box.lo}..{self.box.hi})"


def laplacian_residual(u: GridFunction, x: Coords) -> float:
    """Stencil residual sum_j [u(x+e_j) + u(x-e_j)] - 2n u(x).

    Zero exactly when u is discrete harmonic at x.  All 2n neighbours of x
    must lie inside u's box.
    """
    box = u.box
    n = box.ndim
    terms = [-2.0 * n * u.at(x)]
    for j in range(n):
        for step in (1, -1):
            nb = list(x)
            nb[j] += step
            terms.append(u.at(tuple(nb)))
    return math.fsum(terms)


def residual_field(u: GridFunction, region: Box | None = None) -> np.ndarray:
    """Stencil residuals at every point of `region` (default: interior of u's box).

    The region's 1-neighbourhood must lie inside u's box.
    """
    box = u.box
    if region is None:
        region = box.interior()
    grown = Box(tuple(a - 1 for a in region.lo), tuple(b + 1 for b in region.hi))
    if not box.contains_box(grown):
        raise ValueError(
            f"region {region.lo}..{region.hi} has neighbours outside box {box.lo}..{box.hi}"
        )
    n = box.ndim
    center = u.sub_array(region)
    res = -2.0 * n * center
    for j in range(n):
        for step in (1, -1):
            shifted = region.with_axis(j, region.lo[j] + step, region.hi[j] + step)
            res = res + u.sub_array(shifted)
    return res


def is_harmonic(u: GridFunction, region: Box, tol: float) -> bool:
    """True iff |residual| <= tol * max(1, sup|u|) at every point of region."""
    res = residual_field(u, region)
    scale = max(1.0, float(np.max(np.abs(u.values))))
    return bool(np.max(np.abs(res)) <= tol * scale)


def sup_norm(u: GridFunction, region: Box | None = None) -> float:
    """Maximum of |u| over the lattice points of region (default: whole box)."""
    arr = u.values if region is None else u.sub_array(region)
    if arr.size == 0:
        raise ValueError("empty region")
    return float(np.max(np.abs(arr)))


def enumerate_boundary(box: Box, mode: str = "all") -> list[Coords]:
    """Boundary points of a box.

    mode="all": points with at least one extremal coordinate, each listed once.
    mode="face_interior": points with exactly one extremal coordinate.

    Order is deterministic: by (axis, low side first), then lexicographic in
    the remaining coordinates.
    """
    if mode not in ("all", "face_interior"):
        raise ValueError(f"unknown mode {mode!r}")
    n = box.ndim
    if any(a == b for a, b in zip(box.lo, box.hi)):
        raise ValueError("boundary enumeration requires a non-degenerate box")
    open_ranges = [tuple(range(box.lo[j] + 1, box.hi[j])) for j in range(n)]
    full_ranges = [tuple(range(box.lo[j], box.hi[j] + 1)) for j in range(n)]
    out: list[Coords] = []
    for axis in range(n):
        for side_val in (box.lo[axis], box.hi[axis]):
            ranges: list[tuple[int, ...]] = []
            for j in range(n):
                if j == axis:
                    ranges.append((side_val,))
                elif mode == "face_interior" or j < axis:
                    # face_interior: every other axis non-extremal;
                    # "all": axes before this one non-extremal, so each point
                    # is attributed to its first extremal axis only
                    ranges.append(open_ranges[j])
                else:
                    ranges.append(full_ranges[j])
            if all(ranges):
                out.extend(itertools.product(*ranges))
    return out


def face_interior_points(box: Box) -> list[Coords]:
    return enumerate_boundary(box, "face_interior")


def boundary_from_callable(box: Box, fn: Callable[[Coords], float]) -> dict[Coords, float]:
    """Boundary data dict over the face-interior points of a box."""
    return {pt: float(fn(pt)) for pt in face_interior_points(box)}


def boundary_array(box: Box, g: BoundaryData) -> np.ndarray:
    """Dense array over the box holding g on its keys and 0 elsewhere."""
    arr = np.zeros(box.shape)
    for pt, val in g.items():
        arr[box.index(pt)] = val
    return arr


def validate_boundary_data(box: Box, g: BoundaryData) -> dict[Coords, float]:
    """Check g covers exactly the face-interior boundary of box.

    Keys with two or more extremal coordinates are tolerated and dropped
    (they can never influence interior values); anything else off the
    face-interior set is an error, as is a missing face-interior point.
    """
    face = set(face_interior_points(box))
    cleaned: dict[Coords, float] = {}
    for pt, val in g.items():
        pt = tuple(int(c) for c in pt)
        if pt in face:
            cleaned[pt] = float(val)
            continue
        if box.contains(pt) and box.extremal_count(pt) >= 2:
            continue
        raise ValueError(f"boundary datum at {pt} is not a boundary point of the box")
    missing = face.difference(cleaned)
    if missing:
        raise ValueError(
            f"boundary data missing at {len(missing)} face-interior points, e.g. {sorted(missing)[0]}"
        )
    return cleaned
