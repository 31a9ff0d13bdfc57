r"""Two-universal hashing with Toeplitz matrices over GF(2).

The extractor output is T x, where T is an ell x m Toeplitz matrix with
entries T[i, j] = s[m - 1 + i - j] drawn from m + ell - 1 uniform seed
bits.  Row i is therefore the reverse of the seed window s[i : i + m],
so T x can be evaluated as parities of AND products between a single
reversed input and byte-packed windows of the seed — no dense matrix is
ever materialized.  A 10-bit symbol string of length N serializes to
m = 10 N input bits, least significant bit first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import InvalidParams, SeededRng

SYMBOL_BITS = 10

_POP8 = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class ToeplitzDescriptor:
    """Seed of an ell x m Toeplitz extractor: T[i, j] = seed_bits[m - 1 + i - j]."""

    m: int
    ell: int
    seed_bits: np.ndarray    # (m + ell - 1,) uint8 in {0, 1}

    def __post_init__(self):
        bits = np.ascontiguousarray(np.asarray(self.seed_bits, dtype=np.uint8))
        issues = []
        if self.m < 1 or self.ell < 1:
            issues.append(("InvalidHash", f"need m, ell >= 1, got ({self.m}, {self.ell})"))
        elif bits.shape != (self.m + self.ell - 1,):
            issues.append(("InvalidHash",
                           f"seed must have m + ell - 1 = {self.m + self.ell - 1} bits, got {bits.shape}"))
        elif bits.max(initial=0) > 1:
            issues.append(("InvalidHash", "seed entries must be bits"))
        if issues:
            raise InvalidParams(issues)
        object.__setattr__(self, "seed_bits", bits)

    def dense(self) -> np.ndarray:
        """Materialize T; intended for small sizes (tests and cross-checks)."""
        if self.m * self.ell > 1 << 22:
            raise InvalidParams([("InvalidHash", "dense() refused for matrices beyond 4M entries")])
        i = np.arange(self.ell)[:, None]
        j = np.arange(self.m)[None, :]
        return self.seed_bits[self.m - 1 + i - j]


def sample_hash(m: int, ell: int, rng: SeededRng | np.random.Generator) -> ToeplitzDescriptor:
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    bits = gen.integers(0, 2, size=m + ell - 1, dtype=np.uint8)
    return ToeplitzDescriptor(m=m, ell=ell, seed_bits=bits)


def apply_hash(desc: ToeplitzDescriptor, bits: np.ndarray) -> np.ndarray:
    """T x for an m-bit input, returned as ell bits.

    Row i of T is seed[i : i + m] reversed, so parity(row_i AND x) equals
    parity(seed[i : i + m] AND reverse(x)); the seed is packed once at the
    eight possible bit offsets and the per-row windows become plain byte
    slices gathered with fancy indexing.
    """
    x = np.asarray(bits, dtype=np.uint8)
    if x.shape != (desc.m,):
        raise InvalidParams([("InvalidHash", f"expected {desc.m} input bits, got {x.shape}")])
    xr = x[::-1]
    nbytes = (desc.m + 7) // 8
    x_packed = np.packbits(xr, bitorder="little")
    if x_packed.size < nbytes:
        x_packed = np.pad(x_packed, (0, nbytes - x_packed.size))

    seed = desc.seed_bits
    # eight byte-packed copies of the seed, one per starting bit offset;
    # row i begins at byte i // 8, so cover (ell - 1) // 8 + nbytes bytes
    span = 8 * ((desc.ell - 1) // 8 + nbytes)
    ext = np.zeros(span + 7, dtype=np.uint8)
    ext[:seed.size] = seed
    packed = np.stack([np.packbits(ext[off:off + span], bitorder="little")
                       for off in range(8)])

    i = np.arange(desc.ell)
    starts, offs = i // 8, i % 8
    out = np.empty(desc.ell, dtype=np.uint8)
    cols = np.arange(nbytes)
    for off in range(8):
        sel = offs == off
        if not np.any(sel):
            continue
        rows = packed[off][starts[sel][:, None] + cols[None, :]]
        out[sel] = (_POP8[rows & x_packed].sum(axis=1, dtype=np.int64) & 1).astype(np.uint8)
    return out


def serialize_symbols(symbols: np.ndarray, bits: int = SYMBOL_BITS) -> np.ndarray:
    """1-based bin indices -> bit string, each symbol little-endian in ``bits`` bits."""
    z = np.asarray(symbols, dtype=np.int64) - 1
    if z.size and (z.min() < 0 or z.max() >= 1 << bits):
        raise InvalidParams([("InvalidSymbols", f"symbols must fit {bits} bits")])
    shifts = np.arange(bits)
    return ((z[:, None] >> shifts[None, :]) & 1).astype(np.uint8).reshape(-1)


def bits_to_bytes(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def bytes_to_bits(data: bytes, n_bits: int) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8)
    bits = np.unpackbits(arr, bitorder="little")
    if bits.size < n_bits:
        raise InvalidParams([("InvalidHash", f"need {n_bits} bits, got {bits.size}")])
    return bits[:n_bits]


def encode_descriptor(desc: ToeplitzDescriptor) -> bytes:
    """u32 m, u32 ell, then the seed bits packed little-endian."""
    return struct.pack("<II", desc.m, desc.ell) + bits_to_bytes(desc.seed_bits)


def decode_descriptor(data: bytes) -> ToeplitzDescriptor:
    if len(data) < 8:
        raise InvalidParams([("InvalidHash", "descriptor shorter than its header")])
    m, ell = struct.unpack("<II", data[:8])
    if m < 1 or ell < 1:
        raise InvalidParams([("InvalidHash", f"bad descriptor dimensions ({m}, {ell})")])
    n_seed = m + ell - 1
    if len(data) - 8 != (n_seed + 7) // 8:
        raise InvalidParams([("InvalidHash", "descriptor payload has wrong length")])
    return ToeplitzDescriptor(m=m, ell=ell, seed_bits=bytes_to_bits(data[8:], n_seed))
