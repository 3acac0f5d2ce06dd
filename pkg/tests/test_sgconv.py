import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import causal_conv_sum
from tokenmix.errors import ParameterError, ShapeError
from tokenmix.mixers import ConvParams, conv_mix
from tokenmix.sgconv import (
    SgconvParams,
    audit_csv,
    build_kernel,
    interpolate_rows,
    kernel_count,
    memory_audit,
    sgconv_mix,
)


@pytest.mark.parametrize("L,k,s", [(1024, 16, 7), (16, 16, 1), (17, 16, 2), (256, 16, 5), (100, 16, 4)])
def test_kernel_count(L, k, s):
    assert kernel_count(L, k) == s


def test_kernel_count_short_sequence():
    with pytest.raises(ParameterError):
        kernel_count(8, 16)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(0, 10))
def test_doubling_adds_one_kernel(k, e):
    L = k * 2 ** e
    assert kernel_count(2 * L, k) == kernel_count(L, k) + 1


def test_single_scale_kernel_is_weights():
    p = SgconvParams.for_length(16, 16, 3, seed=1)
    kernel, ledger = build_kernel(p, 16)
    np.testing.assert_array_equal(kernel, p.sub_weights[0])
    assert ledger.s == 1


def test_decaying_blocks():
    p = SgconvParams.for_length(256, 16, 1, fill=1.0, decay=0.5)
    kernel, _ = build_kernel(p, 256)
    expected = np.concatenate([np.full(16, 1.0), np.full(32, 0.5), np.full(64, 0.25),
                               np.full(128, 0.125), np.full(16, 0.0625)])
    np.testing.assert_array_equal(kernel[:, 0], expected)


def test_block_magnitudes_non_increasing():
    p = SgconvParams.for_length(1024, 8, 2, fill=0.7, decay=0.8)
    kernel, _ = build_kernel(p, 1024)
    starts = [0] + list(np.cumsum([8 * 2 ** i for i in range(p.s)]))
    means = [np.mean(np.abs(kernel[a:min(b, 1024)])) for a, b in zip(starts, starts[1:]) if a < 1024]
    assert all(m1 >= m2 for m1, m2 in zip(means, means[1:]))


def test_interpolation_keeps_endpoints():
    w = np.array([[0.0, 1.0], [2.0, 3.0], [10.0, -1.0]])
    out = interpolate_rows(w, 5)
    np.testing.assert_allclose(out[:, 0], [0.0, 1.0, 2.0, 6.0, 10.0])
    np.testing.assert_array_equal(out[[0, -1]], w[[0, -1]])


def test_param_and_kernel_accounting():
    p = SgconvParams.for_length(512, 16, 3, seed=2)
    kernel, ledger = build_kernel(p, 512)
    assert p.param_elements == p.s * 16 * 3 == ledger.param_elements
    assert kernel.shape == (512, 3) and ledger.kernel_elements == 512 * 3


def test_length_mismatch_rejected():
    p = SgconvParams.for_length(128, 16, 1)
    with pytest.raises(ParameterError):
        build_kernel(p, 512)


def test_delta_kernel_is_identity():
    p = SgconvParams.for_length(16, 16, 2, fill=0.0)
    p.sub_weights[0][0] = 1.0
    x = np.random.default_rng(3).standard_normal((16, 2))
    np.testing.assert_allclose(sgconv_mix(x, p), x, atol=1e-14)


def test_matches_direct_sum():
    x = np.random.default_rng(4).standard_normal((128, 4))
    p = SgconvParams.for_length(128, 16, 4, seed=5)
    kernel, _ = build_kernel(p, 128)
    assert np.max(np.abs(sgconv_mix(x, p) - causal_conv_sum(kernel, x))) <= 1e-8


def test_matches_banded_conv():
    x = np.random.default_rng(6).standard_normal((256, 2))
    p = SgconvParams.for_length(256, 16, 2, seed=7)
    kernel, _ = build_kernel(p, 256)
    assert np.max(np.abs(sgconv_mix(x, p) - conv_mix(x, ConvParams(kernel), "matrix"))) <= 1e-8


def test_dim_mismatch():
    p = SgconvParams.for_length(32, 16, 2)
    with pytest.raises(ShapeError):
        sgconv_mix(np.ones((32, 3)), p)


def test_decay_range():
    with pytest.raises(ParameterError):
        SgconvParams((np.ones((4, 1)),), decay=0.0)


def test_memory_audit_examples():
    rows = {r.L: r for r in memory_audit(16, 1, [1024, 2048])}
    assert (rows[1024].s, rows[1024].param_elements) == (7, 112)
    assert (rows[2048].s, rows[2048].param_elements) == (8, 128)
    assert rows[2048].param_elements - rows[1024].param_elements == 16


def test_memory_audit_sweep():
    lengths = [64 * 2 ** i for i in range(8)]
    rows = memory_audit(16, 1, lengths)
    assert [r.kernel_elements for r in rows] == lengths
    ratios = [r.param_elements / r.kernel_elements for r in rows]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert all(b.param_elements - a.param_elements == 16 for a, b in zip(rows, rows[1:]))


def test_audit_csv():
    text = audit_csv(memory_audit(16, 1, [64, 128]))
    assert text == "L,s,param_elements,kernel_elements\n64,3,48,64\n128,4,64,128\n"
