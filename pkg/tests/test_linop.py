import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isd.linop import (
    SynthesisTransform,
    adjoint,
    apply,
    compose_synthesis,
    make_dense,
    make_gaussian,
    make_partial_dct,
)


def dct_matrix(n):
    """Orthonormal DCT-II written out from the cosine formula."""
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    C = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * j + 1) * i / (2 * n))
    C[0] /= np.sqrt(2.0)
    return C


def all_ops():
    g = make_gaussian(6, 16, seed=3)
    d = make_partial_dct(16, 6, seed=3)
    w = SynthesisTransform(4, 2)
    return [g, d, compose_synthesis(d, w), compose_synthesis(g, w)]


def test_gaussian_shape_and_determinism():
    a = make_gaussian(3, 5, seed=1)
    assert a.shape == (3, 5)
    assert a.dense_entries is not None
    assert np.array_equal(a.dense_entries, make_gaussian(3, 5, seed=1).dense_entries)
    assert not np.array_equal(a.dense_entries, make_gaussian(3, 5, seed=2).dense_entries)


def test_gaussian_column_means():
    means = np.mean([make_gaussian(3, 5, seed=s).dense_entries for s in range(10_000)], axis=0)
    assert np.all(np.abs(means) < 0.05)


@pytest.mark.parametrize("m, n", [(0, 5), (6, 5)])
def test_dimension_errors(m, n):
    with pytest.raises(ValueError):
        make_gaussian(m, n)
    with pytest.raises(ValueError):
        make_partial_dct(n, m)


def test_partial_dct_rows():
    op = make_partial_dct(8, 3, seed=5)
    assert 0 in op.rows and len(op.rows) == 3
    assert np.all(np.diff(op.rows) > 0) and op.rows.max() < 8


def test_partial_dct_matches_cosine_formula():
    op = make_partial_dct(32, 12, seed=2)
    C = dct_matrix(32)[op.rows]
    x = np.random.default_rng(0).standard_normal(32)
    np.testing.assert_allclose(op.apply(x), C @ x, atol=1e-12)
    y = np.random.default_rng(1).standard_normal(12)
    np.testing.assert_allclose(op.adjoint(y), C.T @ y, atol=1e-12)


def test_full_dct_is_orthonormal():
    op = make_partial_dct(8, 8, seed=0)
    rng = np.random.default_rng(0)
    y = rng.standard_normal(8)
    np.testing.assert_allclose(op.apply(op.adjoint(y)), y, atol=1e-10)
    x = rng.standard_normal(8)
    assert abs(np.linalg.norm(op.apply(x)) - np.linalg.norm(x)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**31 - 1))
def test_partial_dct_nonexpansive(m, seed):
    op = make_partial_dct(20, m, seed=seed)
    x = np.random.default_rng(seed).standard_normal(20)
    assert np.linalg.norm(op.apply(x)) <= np.linalg.norm(x) + 1e-10
    assert np.linalg.norm(dct_matrix(20)[op.rows] @ x) <= np.linalg.norm(x) + 1e-10


def test_adjoint_identity_all_kinds():
    rng = np.random.default_rng(7)
    for op in all_ops():
        for _ in range(100):
            x = rng.standard_normal(op.n)
            y = rng.standard_normal(op.m)
            gap = abs(op.apply(x) @ y - x @ op.adjoint(y))
            assert gap <= 1e-10 * (1 + np.linalg.norm(x) * np.linalg.norm(y))


def test_linearity():
    rng = np.random.default_rng(8)
    for op in all_ops():
        assert np.all(apply(op, np.zeros(op.n)) == 0)
        x1, x2 = rng.standard_normal((2, op.n))
        np.testing.assert_allclose(apply(op, x1 + x2), apply(op, x1) + apply(op, x2), atol=1e-12)


def test_dense_matches_naive_matvec():
    op = make_gaussian(4, 7, seed=11)
    x = np.random.default_rng(0).standard_normal(7)
    naive = [sum(op.dense_entries[i, j] * x[j] for j in range(7)) for i in range(4)]
    np.testing.assert_allclose(op.apply(x), naive, atol=1e-12)
    y = np.arange(4.0)
    naive_t = [sum(op.dense_entries[i, j] * y[i] for i in range(4)) for j in range(7)]
    np.testing.assert_allclose(adjoint(op, y), naive_t, atol=1e-12)


def test_length_mismatch():
    op = make_gaussian(3, 5)
    with pytest.raises(ValueError):
        op.apply(np.ones(4))
    with pytest.raises(ValueError):
        op.adjoint(np.ones(5))


def test_make_dense_roundtrip():
    A = np.arange(6.0).reshape(2, 3)
    op = make_dense(A)
    np.testing.assert_array_equal(op.apply(np.ones(3)), A.sum(axis=1))
    np.testing.assert_array_equal(op.to_dense(), A)


def test_identity_composition():
    op = make_partial_dct(16, 5, seed=1)
    assert compose_synthesis(op, SynthesisTransform(4, 0)) is op


def test_composition_size_mismatch():
    with pytest.raises(ValueError):
        compose_synthesis(make_partial_dct(16, 5), SynthesisTransform(8, 1))


def test_composed_full_dct_roundtrip():
    w = SynthesisTransform(8, 3)
    op = compose_synthesis(make_partial_dct(64, 64, seed=0), w)
    x = np.random.default_rng(0).standard_normal(64)
    np.testing.assert_allclose(op.adjoint(op.apply(x)), x, atol=1e-10)
    np.testing.assert_allclose(w.analyze(w.synthesize(x)), x, atol=1e-10)


def test_composed_dense_matches_product():
    w = SynthesisTransform(4, 2)
    base = make_partial_dct(16, 6, seed=4)
    op = compose_synthesis(base, w)
    W = np.column_stack([w.synthesize(e) for e in np.eye(16)])
    np.testing.assert_allclose(op.to_dense(), dct_matrix(16)[base.rows] @ W, atol=1e-12)


def test_gram_and_orthonormal_flag():
    d = make_partial_dct(16, 6, seed=0)
    assert d.has_orthonormal_rows
    np.testing.assert_allclose(d.gram, d.to_dense() @ d.to_dense().T, atol=1e-12)
    g = make_gaussian(4, 9, seed=0)
    assert not g.has_orthonormal_rows
    Q = np.linalg.qr(g.dense_entries.T)[0].T
    assert make_dense(Q).has_orthonormal_rows
