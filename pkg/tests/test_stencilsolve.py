import numpy as np
import pytest

from stgwave.errors import SolverError, UsageError
from stgwave.mesh import Grid2D, GridFunction, interior_operators, unit_square
from stgwave.stencilsolve import assemble, solve


def dense_reference(grid, a, b, r):
    A, L = (m.toarray() for m in interior_operators(grid))
    return a * A - b * L - A @ np.diag(r)


@pytest.mark.parametrize("grid", [unit_square(10), Grid2D(0.0, 1.0, 0.0, 3.0, 7, 5)])
def test_assembly_matches_dense_operators(grid):
    rng = np.random.default_rng(0)
    r = rng.uniform(-2, 2, grid.interior_shape)
    K = assemble(grid, 37.0, 0.02, r)
    np.testing.assert_allclose(K.matrix.toarray(), dense_reference(grid, 37.0, 0.02, r.ravel()),
                               rtol=1e-14, atol=1e-12)


def test_reaction_accepts_all_forms():
    g = unit_square(5)
    base = assemble(g, 2.0, 0.1, 0.5).matrix.toarray()
    full = np.full(g.shape, 0.5)
    for r in (full, np.full(g.interior_shape, 0.5), GridFunction(g, full)):
        np.testing.assert_array_equal(assemble(g, 2.0, 0.1, r).matrix.toarray(), base)


def test_solve_matches_dense_solve():
    g = unit_square(9)
    rng = np.random.default_rng(1)
    r = rng.uniform(-1, 0, g.interior_shape)
    K = assemble(g, 50.0, 0.01, r)
    rhs = GridFunction.from_interior(g, rng.standard_normal(g.interior_shape))
    ref = np.linalg.solve(dense_reference(g, 50.0, 0.01, r.ravel()), rhs.interior.ravel())
    out = solve(K, rhs)
    assert out.zero_boundary
    np.testing.assert_allclose(out.interior.ravel(), ref, rtol=1e-12, atol=1e-14)


def test_zero_rhs_gives_zero():
    K = assemble(unit_square(4), 1.0, 1.0)
    assert not solve(K, GridFunction.zeros(unit_square(4))).values.any()


def test_singular_matrix_raises_with_step():
    g = unit_square(4)
    K = assemble(g, 0.0, 0.0)
    with pytest.raises(SolverError, match="step 7"):
        K.solve_vector(np.ones(9), step=7)


def test_usage_errors():
    g = unit_square(4)
    with pytest.raises(UsageError):
        assemble(g, 1.0, -1.0)
    with pytest.raises(UsageError):
        assemble(g, 1.0, 1.0, np.ones(5))
    K = assemble(g, 1.0, 1.0)
    with pytest.raises(UsageError):
        solve(K, GridFunction.zeros(unit_square(5)))
    with pytest.raises(UsageError):
        solve(K, GridFunction(g, np.ones(g.shape)))
