import numpy as np
import pytest

from latharm.lattice import LatticeSpec, face_interior_points


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_boundary(spec: LatticeSpec, rng, lo=-1.0, hi=1.0):
    """Uniform boundary data over the face interior of the unit cube."""
    pts = face_interior_points(spec.unit_cube())
    vals = rng.uniform(lo, hi, size=len(pts))
    return {pt: float(v) for pt, v in zip(pts, vals)}
