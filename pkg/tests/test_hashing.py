"""Tests for the Toeplitz extractor and bit serialization."""

import numpy as np
import pytest

from cvot import hashing
from cvot.core import InvalidParams, SeededRng


class TestDescriptor:
    def test_seed_length_enforced(self):
        with pytest.raises(InvalidParams):
            hashing.ToeplitzDescriptor(m=8, ell=3, seed_bits=np.zeros(9, dtype=np.uint8))
        with pytest.raises(InvalidParams):
            hashing.ToeplitzDescriptor(m=0, ell=3, seed_bits=np.zeros(2, dtype=np.uint8))
        with pytest.raises(InvalidParams):
            hashing.ToeplitzDescriptor(m=2, ell=2, seed_bits=np.array([0, 1, 2], dtype=np.uint8))

    def test_dense_structure(self):
        seed = np.arange(6) % 2
        desc = hashing.ToeplitzDescriptor(m=4, ell=3, seed_bits=seed.astype(np.uint8))
        t = desc.dense()
        assert t.shape == (3, 4)
        # constant along diagonals: T[i, j] = T[i+1, j+1]
        assert np.array_equal(t[:-1, :-1], t[1:, 1:])
        # row i is the reversed seed window s[i : i + m]
        for i in range(3):
            assert np.array_equal(t[i], seed[i:i + 4][::-1])

    def test_dense_size_cap(self):
        desc = hashing.sample_hash(1 << 12, 1 << 11, SeededRng(0))
        with pytest.raises(InvalidParams):
            desc.dense()

    def test_sample_deterministic(self):
        a = hashing.sample_hash(100, 20, SeededRng(5))
        b = hashing.sample_hash(100, 20, SeededRng(5))
        assert np.array_equal(a.seed_bits, b.seed_bits)


class TestApplyHash:
    @pytest.mark.parametrize("m,ell", [
        (1, 1), (8, 3), (9, 3), (24, 24), (64, 10),
        (65, 17), (100, 1), (130, 64), (1000, 128),
    ])
    def test_matches_dense_matmul(self, m, ell):
        rng = SeededRng(m * 1000 + ell).generator()
        desc = hashing.sample_hash(m, ell, rng)
        t = desc.dense()
        for _ in range(4):
            x = rng.integers(0, 2, size=m, dtype=np.uint8)
            want = (t @ x) % 2
            assert np.array_equal(hashing.apply_hash(desc, x), want)

    def test_linear_in_input(self):
        rng = SeededRng(17).generator()
        desc = hashing.sample_hash(300, 40, rng)
        x = rng.integers(0, 2, size=300, dtype=np.uint8)
        y = rng.integers(0, 2, size=300, dtype=np.uint8)
        assert np.array_equal(hashing.apply_hash(desc, x ^ y),
                              hashing.apply_hash(desc, x) ^ hashing.apply_hash(desc, y))

    def test_zero_maps_to_zero(self):
        desc = hashing.sample_hash(64, 16, SeededRng(3))
        assert not hashing.apply_hash(desc, np.zeros(64, dtype=np.uint8)).any()

    def test_wrong_length_rejected(self):
        desc = hashing.sample_hash(64, 16, SeededRng(3))
        with pytest.raises(InvalidParams):
            hashing.apply_hash(desc, np.zeros(63, dtype=np.uint8))


class TestSerialization:
    def test_symbols_little_endian(self):
        bits = hashing.serialize_symbols(np.array([1, 2, 1024]))
        assert bits.shape == (30,)
        assert np.array_equal(bits[:10], np.zeros(10))           # bin 1 -> value 0
        assert np.array_equal(bits[10:20], [1] + [0] * 9)        # bin 2 -> value 1, lsb first
        assert np.array_equal(bits[20:30], [1] * 10)             # bin 1024 -> value 1023

    def test_symbols_out_of_range(self):
        with pytest.raises(InvalidParams):
            hashing.serialize_symbols(np.array([0]))
        with pytest.raises(InvalidParams):
            hashing.serialize_symbols(np.array([1025]))

    def test_bits_bytes_round_trip(self):
        rng = SeededRng(9).generator()
        for n in (1, 7, 8, 9, 130):
            bits = rng.integers(0, 2, size=n, dtype=np.uint8)
            back = hashing.bytes_to_bits(hashing.bits_to_bytes(bits), n)
            assert np.array_equal(back, bits)

    def test_bytes_to_bits_underflow(self):
        with pytest.raises(InvalidParams):
            hashing.bytes_to_bits(b"\x00", 9)


class TestDescriptorWire:
    def test_round_trip(self):
        desc = hashing.sample_hash(777, 31, SeededRng(21))
        blob = hashing.encode_descriptor(desc)
        assert len(blob) == 8 + (777 + 31 - 1 + 7) // 8
        back = hashing.decode_descriptor(blob)
        assert back.m == desc.m and back.ell == desc.ell
        assert np.array_equal(back.seed_bits, desc.seed_bits)

    def test_rejects_malformed(self):
        desc = hashing.sample_hash(40, 8, SeededRng(2))
        blob = hashing.encode_descriptor(desc)
        with pytest.raises(InvalidParams):
            hashing.decode_descriptor(blob[:4])
        with pytest.raises(InvalidParams):
            hashing.decode_descriptor(blob + b"\x00")
        with pytest.raises(InvalidParams):
            hashing.decode_descriptor(b"\x00" * 8 + blob[8:])
