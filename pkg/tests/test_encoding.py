import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkfl.crypto import ORDER, Scalar
from zkfl.encoding import (
    FixedPointConfig,
    QuantizedUpdate,
    decode_from_scalars,
    dequantize,
    encode_ints,
    encode_to_scalars,
    l2_norm_squared,
    quantize,
)
from zkfl.errors import EncodingError, ShapeError


def test_round_half_to_even_and_clamp():
    cfg = FixedPointConfig(5, fractional_bits=1, clamp_magnitude=2.0)
    q = quantize([0.25, 0.75, -0.25, 10.0, -10.0], cfg)
    assert q.values.tolist() == [0, 2, 0, 4, -4]


def test_dequantize_error_is_half_quantum():
    cfg = FixedPointConfig(64)
    x = np.random.default_rng(0).uniform(-4, 4, 64)
    err = np.abs(dequantize(quantize(x, cfg), cfg) - x)
    assert err.max() <= 0.5 / cfg.scale


def test_shape_and_finiteness_checks():
    cfg = FixedPointConfig(3)
    with pytest.raises(ShapeError):
        quantize([1.0, 2.0], cfg)
    with pytest.raises(EncodingError):
        quantize([1.0, np.nan, 0.0], cfg)
    other = FixedPointConfig(3, fractional_bits=8)
    with pytest.raises(EncodingError):
        dequantize(quantize([0, 0, 0], cfg), other)


def test_config_rejects_overflow_risk():
    with pytest.raises(EncodingError):
        FixedPointConfig(4, fractional_bits=48, clamp_magnitude=1e6, max_clients=1 << 20)
    with pytest.raises(EncodingError):
        FixedPointConfig(0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=-(2**40), max_value=2**40), min_size=1, max_size=20))
def test_field_encoding_round_trip(values):
    cfg = FixedPointConfig(len(values), max_clients=1 << 20)
    assert decode_from_scalars(encode_to_scalars(values), cfg) == values


def test_encode_rejects_out_of_bound():
    with pytest.raises(EncodingError):
        encode_ints([ORDER // 2])
    with pytest.raises(EncodingError):
        encode_ints([11], bound=10)
    cfg = FixedPointConfig(1)
    with pytest.raises(EncodingError):
        decode_from_scalars([Scalar(cfg.aggregate_bound + 1)], cfg)


def test_l2_norm_exact_integer():
    assert l2_norm_squared([3, -4]) == 25
    big = [2**31] * 4
    assert l2_norm_squared(big) == 4 * 2**62


def test_serialization_round_trip():
    cfg = FixedPointConfig(3, fractional_bits=10, clamp_magnitude=3.5, max_clients=7, max_weight=99)
    assert FixedPointConfig.from_bytes(cfg.to_bytes()) == cfg
    q = quantize([0.1, -0.2, 0.3], cfg, round_t=4)
    assert QuantizedUpdate.from_bytes(q.to_bytes()) == q
    assert cfg.config_id() != FixedPointConfig(3).config_id()
