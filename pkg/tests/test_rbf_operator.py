import numpy as np
import pytest

from rbfkrylov.collocation import Point, gen_cube
from rbfkrylov.experiment import compute_relative_error
from rbfkrylov.rbf_operator import (ExactSolution, HelmholtzProblem, MQKernel,
                                    assemble_A, assemble_F, assemble_H,
                                    evaluate_U, exact_field, mq_eval,
                                    mq_helmholtz_row)
from rbfkrylov.tensor_core import Operator6

from conftest import random_tensor


def fd_laplacian(fn, center, h=1e-4):
    """6-point second-order finite-difference Laplacian of a scalar field.
    h balances truncation against cancellation for unit-scale fields."""
    center = np.asarray(center, dtype=np.float64)
    acc = 0.0
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        acc += (fn(center + step) - 2.0 * fn(center) + fn(center - step)) / h ** 2
    return acc


def test_mq_eval_basics():
    k = MQKernel(0.7)
    assert mq_eval(k, 0.0) == 1.0
    assert abs(mq_eval(MQKernel(1.0), 1.0) - 1.4142135623730951) < 1e-15
    rng = np.random.default_rng(4)
    for _ in range(10):
        eps, r = rng.uniform(0.1, 3.0), rng.uniform(0.0, 5.0)
        import math
        exact = math.sqrt(math.fsum([1.0, (eps * r) ** 2]))
        assert abs(mq_eval(MQKernel(eps), r) - exact) < 1e-14


def test_mq_laplacian_matches_finite_differences():
    kern = MQKernel(0.9)
    source = np.array([0.2, -0.1, 0.4])

    def phi(x):
        return float(kern.value(np.linalg.norm(x - source)))

    rng = np.random.default_rng(8)
    for _ in range(8):
        x = rng.uniform(-1, 1, size=3)
        r = np.linalg.norm(x - source)
        fd = fd_laplacian(phi, x)
        assert abs(float(kern.laplacian3(r)) - fd) < 1e-6 * max(1.0, abs(fd))


def test_helmholtz_row_interior_r0():
    kern = MQKernel(1.3)
    prob = HelmholtzProblem(wavenumber=2.0)
    p = Point(0.1, 0.2, 0.3, "I", None)
    got = mq_helmholtz_row(kern, prob, p, p)
    assert abs(got - (3 * 1.3 ** 2 + 4.0)) < 1e-12
    # central finite differences around the source reproduce 3 eps^2
    fd = fd_laplacian(lambda x: float(kern.value(np.linalg.norm(x))), np.zeros(3), h=1e-4)
    assert abs(fd - 3 * 1.3 ** 2) < 1e-5


def test_helmholtz_row_dirichlet_reduces_to_kernel():
    kern = MQKernel(0.8)
    prob = HelmholtzProblem(wavenumber=1.0, boundary_a=1.0, boundary_b=0.0)
    src = Point(0.0, 0.0, 0.0, "I", None)
    tgt = Point(0.6, 0.0, 0.0, "B", (1.0, 0.0, 0.0))
    assert mq_helmholtz_row(kern, prob, src, tgt) == mq_eval(kern, 0.6)


def test_helmholtz_row_interior_matches_fd():
    kern = MQKernel(1.1)
    prob = HelmholtzProblem(wavenumber=0.7)
    src = Point(0.0, 0.0, 0.0, "I", None)
    rng = np.random.default_rng(10)
    for _ in range(6):
        x = rng.uniform(-1, 1, size=3)
        tgt = Point(*x, "I", None)
        fn = lambda y: float(kern.value(np.linalg.norm(y)))
        expected = fd_laplacian(fn, x) + 0.7 ** 2 * fn(x)
        got = mq_helmholtz_row(kern, prob, src, tgt)
        assert abs(got - expected) < 1e-6 * max(1.0, abs(expected))


def test_helmholtz_row_normal_derivative():
    kern = MQKernel(0.9)
    prob = HelmholtzProblem(wavenumber=1.0, boundary_a=0.5, boundary_b=2.0)
    src = Point(0.1, 0.2, 0.0, "I", None)
    normal = np.array([0.0, 0.0, 1.0])
    tgt = Point(0.4, 0.1, 0.8, "B", tuple(normal))
    h = 1e-6
    fn = lambda y: float(kern.value(np.linalg.norm(y - np.array([0.1, 0.2, 0.0]))))
    x = np.array([0.4, 0.1, 0.8])
    dn = (fn(x + h * normal) - fn(x - h * normal)) / (2 * h)
    expected = 0.5 * fn(x) + 2.0 * dn
    assert abs(mq_helmholtz_row(kern, prob, src, tgt) - expected) < 1e-8
    with pytest.raises(ValueError, match="normal"):
        mq_helmholtz_row(kern, prob, src, Point(0.4, 0.1, 0.8, "B", None))


def test_assemble_A_symmetric_unit_diagonal():
    pts = gen_cube((3, 3, 3), "uniform", 0)
    a = assemble_A(pts, MQKernel(1.0))
    assert np.array_equal(a.flat, a.flat.T)
    assert np.array_equal(np.diag(a.flat), np.ones(27))
    # pairwise-distance brute force
    expected = np.empty((27, 27))
    for i in range(27):
        for j in range(27):
            r = np.linalg.norm(pts.coords[i] - pts.coords[j])
            expected[i, j] = np.sqrt(1.0 + r * r)
    assert np.abs(a.flat - expected).max() < 1e-14


def test_assemble_A_two_points():
    pts_coords = np.array([[0.0, 0, 0], [0.0, 0, 0.5]])
    from rbfkrylov.collocation import PointSet
    ps = PointSet((2, 1, 1), pts_coords, np.array([True, True]),
                  np.array([[0.0, 0, -1.0], [0.0, 0, 1.0]]))
    a = assemble_A(ps, MQKernel(2.0))
    off = np.sqrt(1.0 + 4.0 * 0.25)
    assert np.allclose(a.flat, [[1.0, off], [off, 1.0]], atol=1e-15)


def test_assemble_H_dirichlet_everywhere_equals_A():
    pts = gen_cube((2, 2, 2), "uniform", 0)    # all points on the boundary
    kern = MQKernel(0.6)
    prob = HelmholtzProblem(wavenumber=3.0, boundary_a=1.0, boundary_b=0.0)
    assert np.array_equal(assemble_H(pts, kern, prob).flat,
                          assemble_A(pts, kern).flat)


def test_assemble_H_entrywise_reconstruction():
    pts = gen_cube((3, 3, 3), "random", 5)
    kern = MQKernel(1.2)
    prob = HelmholtzProblem(wavenumber=0.0, boundary_a=1.0, boundary_b=0.5)
    h = assemble_H(pts, kern, prob)
    for i in range(27):
        for j in range(0, 27, 5):
            expected = mq_helmholtz_row(kern, prob, pts[j], pts[i])
            assert abs(h.flat[i, j] - expected) < 1e-13
    # k = 0 interior rows are the pure kernel Laplacian
    interior = pts.interior_indices
    i = interior[0]
    for j in range(27):
        r = np.linalg.norm(pts.coords[i] - pts.coords[j])
        assert abs(h.flat[i, j] - float(kern.laplacian3(r))) < 1e-13


def test_assemble_F_center_value():
    from rbfkrylov.collocation import PointSet
    sigma = 4.0
    coords = np.array([[0.25, 0.25, 0.25], [0.9, 0.9, 0.9]])
    ps = PointSet((2, 1, 1), coords, np.array([False, True]),
                  np.array([[np.nan] * 3, [0.57735026918962584] * 3]))
    exact = ExactSolution(((0.25, 0.25, 0.25),), (sigma,))
    prob = HelmholtzProblem(wavenumber=1.5, exact=exact)
    f = assemble_F(ps, prob)
    assert abs(f.ravel()[0] - (-6.0 / sigma + 1.5 ** 2)) < 1e-12
    assert abs(f.ravel()[1] - exact.value(coords[1:2])[0]) < 1e-15


def test_assemble_F_matches_fd_laplacian():
    pts = gen_cube((3, 3, 3), "halton", 0)
    exact = ExactSolution(((0.3, 0.6, 0.1), (0.9, 0.2, 0.5)), (2.0, 0.7))
    prob = HelmholtzProblem(wavenumber=1.1, exact=exact)
    f = assemble_F(pts, prob).ravel()
    fn = lambda x: float(exact.value(x[None, :])[0])
    for i in pts.interior_indices:
        expected = fd_laplacian(fn, pts.coords[i]) + 1.1 ** 2 * fn(pts.coords[i])
        assert abs(f[i] - expected) < 1e-6 * max(1.0, abs(expected))
    for i in pts.boundary_indices:
        assert abs(f[i] - fn(pts.coords[i])) < 1e-14


def test_exact_gradient_matches_fd():
    exact = ExactSolution(((0.2, -0.3, 0.5),), (1.5,))
    x = np.array([0.7, 0.1, -0.2])
    grad = exact.gradient(x[None, :])[0]
    h = 1e-6
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        fd = (exact.value((x + step)[None, :])[0] - exact.value((x - step)[None, :])[0]) / (2 * h)
        assert abs(grad[axis] - fd) < 1e-8


def test_evaluate_U_trivials():
    shape = (2, 2, 2)
    ident = Operator6.identity(shape)
    y = random_tensor(shape, 1)
    assert np.array_equal(evaluate_U(ident, y), y)
    assert np.array_equal(evaluate_U(ident, np.zeros(shape)), np.zeros(shape))


def test_interpolation_identity():
    pts = gen_cube((4, 4, 4), "uniform", 0)
    kern = MQKernel(1.0)
    a = assemble_A(pts, kern)
    exact = ExactSolution(((0.0, 0.0, 0.0),), (20.0,))
    u = exact.value(pts.coords).reshape(4, 4, 4)
    gamma = np.linalg.solve(a.flat, u.ravel())
    u_back = (a.flat @ gamma).reshape(4, 4, 4)
    assert compute_relative_error(u_back, u) <= 1e-8


def test_manufactured_consistency():
    pts = gen_cube((5, 5, 5), "uniform", 0)
    kern = MQKernel(0.5)
    prob = HelmholtzProblem(wavenumber=1.0, exact=ExactSolution(((0.0, 0.0, 0.0),), (20.0,)))
    h = assemble_H(pts, kern, prob)
    a = assemble_A(pts, kern)
    f = assemble_F(pts, prob).ravel()
    u = exact_field(pts, prob).ravel()
    residual = f - h.flat @ np.linalg.solve(a.flat, u)
    assert np.linalg.norm(residual) / np.linalg.norm(f) <= 1e-3


def test_problem_validation():
    with pytest.raises(ValueError):
        HelmholtzProblem(boundary_a=0.0, boundary_b=0.0)
    with pytest.raises(ValueError):
        MQKernel(0.0)
    with pytest.raises(ValueError):
        ExactSolution(((0, 0, 0),), (-1.0,))
