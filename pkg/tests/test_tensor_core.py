import numpy as np
import pytest

from rbfkrylov.tensor_core import (Operator6, Shape3, SliceStack, as_shape,
                                   einstein_apply, einstein_apply_transpose,
                                   fro_norm, inner, mode4_matmul, mode4_vecmul)

from conftest import random_operator, random_tensor


def six_loop_apply(flat, x):
    """Brute-force Einstein product: explicit summation over all six indices."""
    m, n, p = x.shape
    out = np.zeros((m, n, p))
    op = flat.reshape(m, n, p, m, n, p)
    for i in range(m):
        for j in range(n):
            for k in range(p):
                acc = 0.0
                for a in range(m):
                    for b in range(n):
                        for c in range(p):
                            acc += op[i, j, k, a, b, c] * x[a, b, c]
                out[i, j, k] = acc
    return out


def test_shape_validation():
    assert as_shape((2, 3, 4)).total == 24
    with pytest.raises(ValueError):
        as_shape((0, 1, 1))


def test_apply_identity_and_zero():
    shape = (2, 3, 2)
    x = random_tensor(shape, 3)
    ident = Operator6.identity(shape)
    assert np.array_equal(einstein_apply(ident, x), x)
    op = random_operator(shape, 4)
    assert np.array_equal(einstein_apply(op, np.zeros(shape)), np.zeros(shape))


def test_apply_matches_six_loop_oracle():
    for seed in range(5):
        shape = (2, 2, 2)
        op = random_operator(shape, seed)
        x = random_tensor(shape, 100 + seed)
        expected = six_loop_apply(op.flat, x)
        assert np.abs(einstein_apply(op, x) - expected).max() < 1e-13


def test_apply_shape_mismatch_reports_both_shapes():
    op = random_operator((2, 2, 2), 0)
    with pytest.raises(ValueError, match=r"2, 2, 2"):
        einstein_apply(op, np.zeros((2, 2, 3)))


def test_transpose_entry_swap_oracle():
    shape = (2, 2, 2)
    op = random_operator(shape, 11)
    x = random_tensor(shape, 12)
    # b_{mnp ijk} = a_{ijk mnp}
    swapped = op.flat.reshape(2, 2, 2, 2, 2, 2).transpose(3, 4, 5, 0, 1, 2)
    expected = six_loop_apply(swapped.reshape(8, 8), x)
    assert np.abs(einstein_apply_transpose(op, x) - expected).max() < 1e-13


def test_transpose_of_symmetric_and_identity():
    shape = (2, 2, 1)
    rng = np.random.default_rng(5)
    sym = rng.standard_normal((4, 4))
    op = Operator6(sym + sym.T, shape)
    x = random_tensor(shape, 6)
    assert np.allclose(einstein_apply(op, x), einstein_apply_transpose(op, x),
                       rtol=1e-14, atol=1e-14)
    ident = Operator6.identity(shape)
    assert np.array_equal(einstein_apply_transpose(ident, x), x)


def test_inner_trivials_and_trace_oracle():
    shape = (2, 3, 2)
    x = random_tensor(shape, 7)
    assert inner(x, np.zeros(shape)) == 0.0
    e111 = np.zeros(shape)
    e111[0, 0, 0] = 1.0
    assert inner(e111, e111) == 1.0
    y = random_tensor(shape, 8)
    acc = 0.0              # trace form tr(x^T * y): all three modes contracted
    for i in range(shape[0]):
        for j in range(shape[1]):
            for k in range(shape[2]):
                acc += x[i, j, k] * y[i, j, k]
    assert abs(inner(x, y) - acc) < 1e-12


def test_fro_norm():
    shape = (3, 2, 2)
    assert fro_norm(np.zeros(shape)) == 0.0
    e = np.zeros(shape)
    e[0, 0, 0] = 1.0
    assert fro_norm(e) == 1.0
    x = random_tensor(shape, 9)
    acc = 0.0
    for v in x.ravel():
        acc += v * v
    assert abs(fro_norm(x) - np.sqrt(acc)) < 1e-12


def test_norm_inner_consistency():
    for seed in range(5):
        x = random_tensor((3, 3, 3), seed)
        assert abs(fro_norm(x) ** 2 - inner(x, x)) <= 1e-14 * abs(inner(x, x))


def test_mode4_matmul():
    shape = (2, 2, 2)
    slices = [random_tensor(shape, s) for s in range(3)]
    stack = SliceStack(slices)
    out = mode4_matmul(stack, np.eye(3))
    for a, b in zip(out, slices):
        assert np.allclose(a, b, atol=0, rtol=0)
    swap = mode4_matmul(SliceStack(slices[:2]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.array_equal(swap[0], slices[1])
    assert np.array_equal(swap[1], slices[0])
    w = np.random.default_rng(33).standard_normal((2, 3))
    out = mode4_matmul(stack, w)
    for r in range(2):
        expected = np.zeros(shape)
        for s in range(3):
            expected += w[r, s] * slices[s]
        assert np.abs(out[r] - expected).max() < 1e-13


def test_mode4_vecmul():
    shape = (2, 2, 2)
    slices = [random_tensor(shape, 40 + s) for s in range(3)]
    stack = SliceStack(slices)
    assert np.array_equal(mode4_vecmul(stack, np.array([1.0, 0, 0])), slices[0])
    assert np.array_equal(mode4_vecmul(stack, np.zeros(3)), np.zeros(shape))
    y = np.array([0.3, -1.2, 2.0])
    expected = 0.3 * slices[0] - 1.2 * slices[1] + 2.0 * slices[2]
    assert np.abs(mode4_vecmul(stack, y) - expected).max() < 1e-13
    with pytest.raises(ValueError):
        mode4_vecmul(stack, np.zeros(4))


def test_flattening_faithfulness():
    # flat(A * B) computed through the unflattened six-index contraction
    # equals flat(A) @ flat(B)
    for seed in range(5):
        shape = (3, 2, 3)
        t = 18
        a = random_operator(shape, seed).flat
        b = random_operator(shape, 50 + seed).flat
        a6 = a.reshape(3, 2, 3, 3, 2, 3)
        b6 = b.reshape(3, 2, 3, 3, 2, 3)
        ab = np.einsum("ijkmnp,mnpqrs->ijkqrs", a6, b6).reshape(t, t)
        assert np.abs(ab - a @ b).max() < 1e-13 * max(1.0, np.abs(ab).max())


def test_transpose_adjoint_consistency():
    for seed in range(10):
        shape = (3, 2, 2)
        op = random_operator(shape, seed)
        x = random_tensor(shape, 200 + seed)
        y = random_tensor(shape, 300 + seed)
        lhs = inner(einstein_apply(op, x), y)
        rhs = inner(x, einstein_apply_transpose(op, y))
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_trace_cyclic_property():
    for seed in range(5):
        shape = (2, 2, 2)
        a6 = random_operator(shape, seed).flat.reshape(2, 2, 2, 2, 2, 2)
        b6 = random_operator(shape, 70 + seed).flat.reshape(2, 2, 2, 2, 2, 2)
        ab = np.einsum("ijkmnp,mnpqrs->ijkqrs", a6, b6)
        ba = np.einsum("mnpqrs,qrsijk->mnpijk", b6, a6)
        tr_ab = sum(ab[i, j, k, i, j, k] for i in range(2) for j in range(2) for k in range(2))
        tr_ba = sum(ba[i, j, k, i, j, k] for i in range(2) for j in range(2) for k in range(2))
        assert abs(tr_ab - tr_ba) < 1e-12


def test_gram_of_orthonormal_stack():
    rng = np.random.default_rng(77)
    q, _ = np.linalg.qr(rng.standard_normal((8, 3)))
    stack = SliceStack([q[:, i].reshape(2, 2, 2) for i in range(3)])
    assert np.abs(stack.gram() - np.eye(3)).max() < 1e-12
