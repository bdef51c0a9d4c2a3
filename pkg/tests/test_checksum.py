import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import softcheck as sc
from softcheck.checksum import checksum_batch, checksum_grad_batch

W = 0.0001

finite_vectors = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=1, max_size=12
)


def test_linear_sum():
    assert sc.checksum(sc.ChecksumSpec("linear"), [1.0, 2.0, 3.0]) == 6.0


def test_sinusoid_zero_sum_is_zero():
    spec = sc.ChecksumSpec("sinusoid", w=W)
    assert sc.checksum(spec, [1.0, -1.0]) == 0.0


def test_sinusoid_quarter_period_is_one():
    spec = sc.ChecksumSpec("sinusoid", w=W)
    total = math.pi / (2 * W)
    assert sc.checksum(spec, [total]) == pytest.approx(1.0, abs=1e-15)


def test_grad_linear_is_ones():
    g = sc.checksum_grad(sc.ChecksumSpec("linear"), [0.3, -2.0, 5.0, 1.0])
    assert np.array_equal(g, np.ones(4))


def test_grad_sinusoid_zero_sum_is_zero_vector():
    g = sc.checksum_grad(sc.ChecksumSpec("sinusoid", w=W), [2.0, -2.0])
    assert np.array_equal(g, np.zeros(2))


@pytest.mark.parametrize("kind,w", [("linear", W), ("sinusoid", 0.7), ("sinusoid", W)])
def test_grad_matches_finite_difference(rng, kind, w):
    spec = sc.ChecksumSpec(kind, w=w)
    h = 1e-6
    for _ in range(30):
        y = rng.normal(size=rng.integers(1, 9))
        if abs(y.sum()) < 1e-3:
            continue
        g = sc.checksum_grad(spec, y)
        for i in range(y.size):
            e = np.zeros_like(y)
            e[i] = h
            fd = (sc.checksum(spec, y + e) - sc.checksum(spec, y - e)) / (2 * h)
            assert g[i] == pytest.approx(fd, abs=1e-6)


def test_checksum_error_examples():
    linear = sc.ChecksumSpec("linear")
    sinus = sc.ChecksumSpec("sinusoid", w=W)
    y = np.array([1.0, 1.0])
    assert sc.checksum_error(sc.checksum(linear, y), y, linear) == 0.0
    assert sc.checksum_error(0.0, y, linear) == 4.0
    assert sc.checksum_error(0.5, np.array([3.0, -3.0]), sinus) == 0.25


def test_batch_matches_per_row(rng):
    for kind in ("linear", "sinusoid"):
        spec = sc.ChecksumSpec(kind, w=0.3)
        y = rng.normal(size=(17, 5))
        batch = checksum_batch(spec, y)
        grads = checksum_grad_batch(spec, y)
        for i in range(17):
            assert batch[i] == sc.checksum(spec, y[i])
            assert np.array_equal(grads[i], sc.checksum_grad(spec, y[i]))


@settings(max_examples=60)
@given(finite_vectors)
def test_linear_permutation_invariant(values):
    spec = sc.ChecksumSpec("linear")
    assert sc.checksum(spec, values) == pytest.approx(
        sc.checksum(spec, sorted(values)), rel=1e-12, abs=1e-12
    )


@settings(max_examples=60)
@given(finite_vectors)
def test_sinusoid_sign_flip_invariant(values):
    spec = sc.ChecksumSpec("sinusoid", w=0.01)
    y = np.array(values)
    assert sc.checksum(spec, y) == sc.checksum(spec, -y)


@settings(max_examples=60)
@given(finite_vectors, st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_checksum_error_is_squared_residual(values, c_hat):
    spec = sc.ChecksumSpec("linear")
    err = sc.checksum_error(c_hat, np.array(values), spec)
    assert err >= 0.0
    # exact IEEE identity; the square may underflow, so this is the
    # strongest statement that holds
    assert err == (c_hat - sc.checksum(spec, values)) ** 2


def test_sinusoid_bounded(rng):
    spec = sc.ChecksumSpec("sinusoid", w=2.5)
    for _ in range(200):
        v = sc.checksum(spec, rng.normal(size=6) * 100)
        assert -1.0 <= v <= 1.0


def test_spec_validation():
    with pytest.raises(sc.ConfigError):
        sc.ChecksumSpec("fourier")
    with pytest.raises(sc.ConfigError):
        sc.ChecksumSpec("sinusoid", w=0.0)
    with pytest.raises(sc.ConfigError):
        sc.ChecksumSpec("sinusoid", w=float("nan"))
    with pytest.raises(sc.ConfigError):
        sc.ChecksumSpec.from_dict({"kind": "linear", "frequency": 2.0})


def test_spec_round_trip():
    spec = sc.ChecksumSpec("sinusoid", w=0.25)
    assert sc.ChecksumSpec.from_dict(spec.to_dict()) == spec


def test_input_validation():
    spec = sc.ChecksumSpec("linear")
    with pytest.raises(sc.ShapeError):
        sc.checksum(spec, [])
    with pytest.raises(sc.ShapeError):
        sc.checksum(spec, [[1.0, 2.0]])
    with pytest.raises(sc.NumericError):
        sc.checksum(spec, [1.0, float("inf")])
