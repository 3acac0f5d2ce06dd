import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circular_conv_sum, dft_sum, matmul_loops
from tokenmix.errors import ShapeError
from tokenmix.tensor import causal_convolve, circular_convolve, dft, idft, matmul, naive_dft


def test_matmul_identity():
    m = np.arange(12.0).reshape(3, 4)
    assert np.array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_example():
    assert np.array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((7, 5)), rng.standard_normal((5, 3))
    np.testing.assert_allclose(matmul(a, b), matmul_loops(a.tolist(), b.tolist()), rtol=0, atol=1e-13)


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match="2x3 by 2x3"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_bit_reproducible():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((64, 33)), rng.standard_normal((33, 17))
    assert matmul(a, b).tobytes() == matmul(a, b).tobytes()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 8), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_matmul_associative(n, k, m, p, seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.standard_normal((n, k)), rng.standard_normal((k, m)), rng.standard_normal((m, p))
    left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
    assert np.max(np.abs(left - right)) <= 1e-9 * max(1.0, np.max(np.abs(left)))


def test_dft_constant_vector():
    out = dft(np.full(4, 2.5))
    np.testing.assert_allclose(out, [10, 0, 0, 0], atol=1e-15)


def test_dft_matches_explicit_sum():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    np.testing.assert_allclose(dft(v), dft_sum(v), rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [3, 5, 6, 12])
def test_non_power_of_two_uses_naive_path(n):
    v = np.random.default_rng(n).standard_normal(n)
    np.testing.assert_allclose(dft(v), dft_sum(v), atol=1e-12)


def test_round_trip():
    rng = np.random.default_rng(3)
    v = rng.standard_normal((64, 3)) + 1j * rng.standard_normal((64, 3))
    assert np.max(np.abs(idft(dft(v)) - v)) <= 1e-9


def test_axis_one_transforms_rows():
    rng = np.random.default_rng(4)
    m = rng.standard_normal((3, 16))
    np.testing.assert_allclose(dft(m, axis=1), np.vstack([dft(r) for r in m]), atol=1e-12)


@pytest.mark.parametrize("e", range(1, 13))
def test_fft_matches_naive_up_to_4096(e):
    rng = np.random.default_rng(e)
    n = 2 ** e
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    fast, slow = dft(v), naive_dft(v)
    assert np.max(np.abs(fast - slow)) <= 1e-9 * np.max(np.abs(slow))


def test_empty_dft_rejected():
    with pytest.raises(ShapeError):
        dft(np.zeros((0, 3)))


def test_convolve_impulse_is_identity():
    g = np.random.default_rng(5).standard_normal(16)
    delta = np.zeros(16)
    delta[0] = 1.0
    np.testing.assert_allclose(circular_convolve(delta, g), g, atol=1e-14)


def test_convolve_commutes():
    rng = np.random.default_rng(6)
    f, g = rng.standard_normal(16), rng.standard_normal(16)
    np.testing.assert_allclose(circular_convolve(f, g), circular_convolve(g, f), atol=1e-13)


def test_convolve_matches_direct_sum():
    rng = np.random.default_rng(7)
    f, g = rng.standard_normal(16), rng.standard_normal(16)
    assert np.max(np.abs(circular_convolve(f, g) - circular_conv_sum(f, g))) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_convolution_sum_distributes(seed):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal(32), rng.standard_normal(32)
    total = circular_convolve(f, g).sum()
    expected = f.sum() * g.sum()
    assert abs(total - expected) <= 1e-8 * max(1.0, abs(expected))


def test_convolve_length_mismatch():
    with pytest.raises(ShapeError, match="length mismatch"):
        circular_convolve(np.ones(4), np.ones(8))


def test_causal_convolve_non_power_of_two_length():
    rng = np.random.default_rng(8)
    u, w = rng.standard_normal(37), rng.standard_normal(5)
    expected = np.convolve(w, u)[:37]
    np.testing.assert_allclose(causal_convolve(w, u), expected, atol=1e-12)
