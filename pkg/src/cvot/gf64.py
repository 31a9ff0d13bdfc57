"""Arithmetic tables for GF(64) built on the primitive polynomial x^6 + x + 1.

Elements are integers 0..63 whose bits are polynomial coefficients; addition
is XOR.  Everything is table-driven so the belief-propagation decoder can
express field multiplication as fancy indexing.
"""

from __future__ import annotations

import numpy as np

ORDER = 64
POLY = 0b1000011   # x^6 + x + 1


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(ORDER - 1, dtype=np.uint8)
    log = np.zeros(ORDER, dtype=np.int16)
    acc = 1
    for i in range(ORDER - 1):
        exp[i] = acc
        log[acc] = i
        acc <<= 1
        if acc & ORDER:
            acc ^= POLY
    if acc != 1:
        raise AssertionError("generator polynomial is not primitive")
    return exp, log


EXP, LOG = _build_tables()

#: MUL[a, b] = a * b in the field; row/column 0 are zero
MUL = np.zeros((ORDER, ORDER), dtype=np.uint8)
_nz = np.arange(1, ORDER)
MUL[1:, 1:] = EXP[(LOG[_nz][:, None] + LOG[_nz][None, :]) % (ORDER - 1)]

#: INV[a] = multiplicative inverse; INV[0] = 0 as a harmless placeholder
INV = np.zeros(ORDER, dtype=np.uint8)
INV[1:] = EXP[(-LOG[_nz]) % (ORDER - 1)]

#: DIV_IDX[h, y] = y / h — the permutation mapping a message on c to one on u = h*c
DIV_IDX = MUL[INV]


def mul(a, b):
    """Field product, elementwise over arrays."""
    return MUL[np.asarray(a, dtype=np.intp), np.asarray(b, dtype=np.intp)]


def inv(a):
    """Field inverse, elementwise; raises on zero."""
    arr = np.asarray(a, dtype=np.intp)
    if np.any(arr == 0):
        raise ZeroDivisionError("inverse of 0 in GF(64)")
    return INV[arr]


def wht64(x: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform over the last axis (length 64), unnormalized.

    This is the Fourier transform of the additive group of GF(64), so
    pointwise products in the transformed domain realize convolutions of
    probability vectors under field addition (XOR).  Self-inverse up to a
    factor of 64.
    """
    y = np.array(x, dtype=np.float64, copy=True)
    if y.shape[-1] != ORDER:
        raise ValueError(f"last axis must have length {ORDER}, got {y.shape[-1]}")
    h = 1
    while h < ORDER:
        view = y.reshape(y.shape[:-1] + (ORDER // (2 * h), 2, h))
        a = view[..., 0, :].copy()
        b = view[..., 1, :]
        view[..., 0, :] = a + b
        view[..., 1, :] = a - b
        h *= 2
    return y
