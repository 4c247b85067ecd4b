import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffsteg.codec import (
    EmbedLayout,
    StegoImage,
    bits_to_bytes,
    bytes_to_bits,
    capacity,
    dequantize,
    embed,
    extract,
    quantize,
)
from diffsteg.numerics import dct2, idct2


def test_embed_all_ones():
    z = embed(np.ones(4), (1, 2, 2))
    assert np.allclose(z, idct2(np.ones((1, 2, 2))), atol=1e-15)
    assert np.allclose(dct2(z), 1.0, atol=1e-15)


def test_embed_row_major_signs():
    z = embed([1, 0, 1, 1], (1, 2, 2))
    assert np.allclose(dct2(z), [[[1, -1], [1, 1]]], atol=1e-15)


def test_embed_amplitude_scales():
    d = [0, 1, 1, 0]
    z = embed(d, (1, 2, 2), EmbedLayout(amplitude=2.5))
    assert np.allclose(dct2(z), 2.5 * np.array([[[-1, 1], [1, -1]]]), atol=1e-14)
    assert np.array_equal(extract(z), np.array(d, dtype=np.uint8))


def _latent_from_coeff(coeff):
    return idct2(np.asarray(coeff, dtype=float).reshape(1, 1, -1))


def test_extract_signs():
    assert list(extract(_latent_from_coeff([-0.3, 0.7]))) == [0, 1]


def test_extract_exact_zero_is_one():
    assert list(extract(np.zeros((1, 1, 3)))) == [1, 1, 1]


def test_embed_rejects_wrong_length_and_values():
    with pytest.raises(ValueError, match="holds exactly 4"):
        embed([1, 0, 1], (1, 2, 2))
    with pytest.raises(ValueError):
        embed([1, 0, 2, 1], (1, 2, 2))


def test_capacity():
    assert capacity((3, 64, 64)) == 12288
    assert capacity((1, 16, 16)) == 256


def test_layout_bijective_exhaustive():
    # every 4-bit payload maps to a distinct latent and decodes back
    seen = set()
    for d in itertools.product([0, 1], repeat=4):
        z = embed(d, (1, 2, 2))
        assert tuple(extract(z)) == d
        seen.add(np.round(z, 12).tobytes())
    assert len(seen) == 16


def test_permuted_layout(rng):
    perm = tuple(int(i) for i in rng.permutation(12))
    layout = EmbedLayout(permutation=perm)
    d = rng.integers(0, 2, 12)
    z = embed(d, (3, 2, 2), layout)
    assert np.array_equal(extract(z, layout), d)
    flat = dct2(z).ravel()
    assert np.allclose(flat[list(perm)], 2.0 * d - 1.0, atol=1e-14)
    with pytest.raises(ValueError):
        EmbedLayout(permutation=(0, 0, 1))
    with pytest.raises(ValueError):
        embed(d[:4], (1, 2, 2), layout)


@settings(max_examples=60, deadline=None)
@given(
    dims=st.tuples(st.integers(1, 3), st.integers(1, 12), st.integers(1, 12)),
    seed=st.integers(0, 2**31),
    amp=st.floats(1e-3, 1e3),
)
def test_round_trip_property(dims, seed, amp):
    d = np.random.default_rng(seed).integers(0, 2, capacity(dims))
    assert np.array_equal(extract(embed(d, dims, EmbedLayout(amplitude=amp))), d)


# -- bytes <-> bits ----------------------------------------------------------


def test_bytes_to_bits_msb_first():
    assert list(bytes_to_bits(b"\xa0", 8)) == [1, 0, 1, 0, 0, 0, 0, 0]
    assert list(bytes_to_bits(b"\x80\xff", 9)) == [1, 0, 0, 0, 0, 0, 0, 0, 1]


def test_bytes_to_bits_ignores_excess():
    assert list(bytes_to_bits(b"\x0f\x00\x00", 4)) == [0, 0, 0, 0]


def test_bytes_to_bits_short_payload():
    with pytest.raises(ValueError, match="requires 32 bytes"):
        bytes_to_bits(b"x" * 31, 256)


def test_bits_to_bytes_pads_with_zero():
    assert bits_to_bytes([1, 1, 1]) == b"\xe0"
    assert bits_to_bytes([]) == b""


def test_bytes_bits_round_trip(rng):
    data = rng.integers(0, 256, 32, dtype=np.uint8).tobytes()
    assert bits_to_bytes(bytes_to_bits(data, 256)) == data


# -- quantizer -----------------------------------------------------------------


@pytest.mark.parametrize("x,q", [(-1.0, 0), (1.0, 255), (0.0, 128), (-3.0, 0), (7.0, 255)])
def test_quantize_values(x, q):
    assert quantize(np.full((1, 1, 1), x)).pixels.item() == q


@pytest.mark.parametrize("q,x", [(0, -1.0), (255, 1.0)])
def test_dequantize_endpoints(q, x):
    assert dequantize(np.array([[[q]]], dtype=np.uint8)).item() == x


def test_dequantize_128():
    assert dequantize(np.array([[[128]]], dtype=np.uint8)).item() == pytest.approx(128 / 127.5 - 1, abs=1e-15)
    assert dequantize(np.array([[[128]]])).item() == pytest.approx(0.00392, abs=1e-5)


def test_quantize_dequantize_identity_exhaustive():
    q = np.arange(256, dtype=np.uint8).reshape(1, 16, 16)
    assert np.array_equal(quantize(dequantize(q)).pixels, q)


def test_quantize_idempotent(rng):
    x = rng.uniform(-1.2, 1.2, (3, 8, 8))
    once = quantize(x).pixels
    assert np.array_equal(quantize(dequantize(once)).pixels, once)


def test_quantize_rejects_nan():
    with pytest.raises(FloatingPointError):
        quantize(np.full((1, 1, 2), np.nan))


def test_dequantize_rejects_out_of_range():
    with pytest.raises(ValueError):
        dequantize(np.array([[[256]]]))
    with pytest.raises(ValueError):
        dequantize(np.array([[[1.5]]]))


def test_stego_image_metadata():
    img = quantize(np.zeros((1, 2, 3)), S=10, seed=4, schedule_id="linear-1000")
    assert isinstance(img, StegoImage)
    assert img.dims == (1, 2, 3)
    assert img.pixels.dtype == np.uint8
    assert (img.S, img.seed, img.schedule_id) == (10, 4, "linear-1000")
    assert np.allclose(dequantize(img), 128 / 127.5 - 1)
