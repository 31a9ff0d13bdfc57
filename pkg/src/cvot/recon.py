r"""Information reconciliation for 10-bit binned quadrature symbols.

Each sifted symbol (a 1-based bin index in 1..1024) splits into two
planes: the 4 least significant bits of (index - 1) are disclosed
verbatim, and the 6 most significant bits are protected by a rate-R
non-binary LDPC code over GF(64).  The sender transmits the syndrome of
her high plane; the receiver runs belief propagation seeded with
Gaussian channel priors for his correlated outcomes.  Total disclosure
is 4 + 6 (1 - R) bits per symbol.

The code is (2, dc)-regular: every symbol participates in exactly two
checks, no two symbols share the same pair of checks (so the Tanner
graph has girth at least six), and check degrees stay within one of each
other.  Edge coefficients are uniform nonzero field elements.  The
decoder does check updates in the Walsh-Hadamard domain, where the
XOR-convolution of the per-edge messages becomes a pointwise product,
with leave-one-out prefix/suffix products, damped message updates and a
hard syndrome-match stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf64
from .core import (DecodeFailure, DiscretizationScheme, InvalidParams,
                   SeededRng)
from .gaussmodel import ChannelStats

LOW_BITS = 4
HIGH_BITS = 6
LOW_MOD = 1 << LOW_BITS          # 16
FIELD = 1 << HIGH_BITS           # 64


def leakage_per_symbol(rate: float) -> float:
    """Bits disclosed per reconciled symbol: 4 + 6 (1 - R)."""
    if not (0.0 < rate < 1.0):
        raise InvalidParams([("InvalidCode", f"rate must be in (0, 1), got {rate}")])
    return LOW_BITS + HIGH_BITS * (1.0 - rate)


def split_planes(symbols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1-based bin indices -> (low 4-bit plane, high 6-bit plane)."""
    z = np.asarray(symbols, dtype=np.int64) - 1
    if z.size and (z.min() < 0 or z.max() >= LOW_MOD * FIELD):
        raise InvalidParams([("InvalidSymbols", "bin indices must be in 1..1024")])
    return (z % LOW_MOD).astype(np.uint8), (z // LOW_MOD).astype(np.uint8)


def combine_planes(low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Inverse of split_planes, back to 1-based bin indices."""
    return (np.asarray(high, dtype=np.int64) * LOW_MOD
            + np.asarray(low, dtype=np.int64) + 1).astype(np.int32)


# ---------------------------------------------------------------------------
# code construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gf64Code:
    """A (2, dc)-regular parity structure over GF(64).

    var_checks[i] holds the two distinct check indices of symbol i and
    coeffs[i] the corresponding nonzero edge coefficients.
    """

    n: int
    rate: float
    seed: int
    var_checks: np.ndarray   # (n, 2) int32
    coeffs: np.ndarray       # (n, 2) uint8

    @property
    def m(self) -> int:
        return int(self.var_checks.max()) + 1

    def check_degrees(self) -> np.ndarray:
        return np.bincount(self.var_checks.ravel(), minlength=self.m)


def build_code(n: int, rate: float, seed: int) -> Gf64Code:
    """Construct the parity structure deterministically from a seed.

    Greedy progressive construction: each symbol takes the two currently
    least-loaded checks whose pair it would not duplicate, with seeded
    random tie-breaking.  m = ceil(n (1 - rate)) checks.
    """
    if not (0.0 < rate < 1.0):
        raise InvalidParams([("InvalidCode", f"rate must be in (0, 1), got {rate}")])
    m = int(math.ceil(n * (1.0 - rate)))
    if m < 2:
        raise InvalidParams([("InvalidCode", f"rate {rate} leaves fewer than 2 checks for n = {n}")])
    if n > m * (m - 1) // 2:
        raise InvalidParams([("InvalidCode",
                              f"cannot place {n} distinct check pairs among {m} checks")])
    gen = SeededRng(seed, stream=0xC0DE).generator()
    deg = np.zeros(m, dtype=np.int64)
    used: set[tuple[int, int]] = set()
    var_checks = np.empty((n, 2), dtype=np.int32)
    for i in range(n):
        order = np.lexsort((gen.random(m), deg))
        a = int(order[0])
        b = None
        for cand in order[1:]:
            cand = int(cand)
            pair = (a, cand) if a < cand else (cand, a)
            if pair not in used:
                b = cand
                used.add(pair)
                break
        if b is None:   # cannot happen given the pair-count guard, but stay safe
            raise InvalidParams([("InvalidCode", "ran out of distinct check pairs")])
        var_checks[i] = (a, b)
        deg[a] += 1
        deg[b] += 1
    coeffs = gen.integers(1, FIELD, size=(n, 2), dtype=np.uint8)
    return Gf64Code(n=n, rate=rate, seed=seed, var_checks=var_checks, coeffs=coeffs)


def syndrome(code: Gf64Code, high: np.ndarray) -> np.ndarray:
    """GF(64) syndrome of a high-plane word: s_j = sum_i h_ji c_i."""
    high = np.asarray(high, dtype=np.uint8)
    if high.shape != (code.n,):
        raise InvalidParams([("InvalidSymbols", f"expected {code.n} symbols, got {high.shape}")])
    s = np.zeros(code.m, dtype=np.uint8)
    for k in (0, 1):
        np.bitwise_xor.at(s, code.var_checks[:, k],
                          gf64.MUL[code.coeffs[:, k], high])
    return s


# ---------------------------------------------------------------------------
# channel priors
# ---------------------------------------------------------------------------

def channel_priors(values_b: np.ndarray, low: np.ndarray, stats: ChannelStats,
                   scheme: DiscretizationScheme) -> np.ndarray:
    """Posterior over the sender's high plane given receiver values and the low plane.

    For symbol i with disclosed low plane l_i, candidate high value h puts
    the sender in the bin centered at -alpha + (16 h + l_i + 1/2) delta;
    the sender value given the receiver's is Gaussian with mean
    rho (sigma_a / sigma_b) y_i and std sigma_a sqrt(1 - rho^2).  Rows are
    normalized probability vectors of length 64.
    """
    y = np.asarray(values_b, dtype=float)
    low = np.asarray(low, dtype=np.int64)
    if scheme.n_bins != LOW_MOD * FIELD:
        raise InvalidParams([("InvalidScheme",
                              f"reconciliation expects {LOW_MOD * FIELD} bins, got {scheme.n_bins}")])
    centers = (-scheme.alpha_cut
               + (LOW_MOD * np.arange(FIELD)[None, :] + low[:, None] + 0.5) * scheme.delta)
    mean = stats.conditional_slope() * y
    sig = stats.conditional_sigma()
    logp = -0.5 * ((centers - mean[:, None]) / sig) ** 2
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    p /= p.sum(axis=1, keepdims=True)
    return p


# ---------------------------------------------------------------------------
# belief propagation
# ---------------------------------------------------------------------------

_MSG_FLOOR = 1e-30


@dataclass(frozen=True)
class _CheckLayout:
    """Edge bookkeeping for vectorized check updates."""

    edge_check: np.ndarray    # (2n,) check index of each edge
    edge_coeff: np.ndarray    # (2n,) field coefficient of each edge
    pad_edge: np.ndarray      # (m, d_max) edge id, -1 on padding
    pad_mask: np.ndarray      # (m, d_max) bool, True on real slots
    edge_slot: np.ndarray     # (2n,) position of each edge inside its check row


def _layout(code: Gf64Code) -> _CheckLayout:
    e = 2 * code.n
    edge_check = code.var_checks.reshape(e)
    edge_coeff = code.coeffs.reshape(e)
    order = np.argsort(edge_check, kind="stable")
    deg = np.bincount(edge_check, minlength=code.m)
    d_max = int(deg.max())
    starts = np.concatenate(([0], np.cumsum(deg)))
    pad_edge = np.full((code.m, d_max), -1, dtype=np.int64)
    rows = edge_check[order]
    cols = np.arange(e) - starts[rows]
    pad_edge[rows, cols] = order
    pad_mask = pad_edge >= 0
    edge_slot = np.empty(e, dtype=np.int64)
    edge_slot[order] = cols
    return _CheckLayout(edge_check=edge_check, edge_coeff=edge_coeff,
                        pad_edge=pad_edge, pad_mask=pad_mask, edge_slot=edge_slot)


def decode(code: Gf64Code, synd: np.ndarray, priors: np.ndarray,
           max_iter: int = 100, damping: float = 0.8) -> tuple[np.ndarray, int]:
    """Belief-propagation decode of the high plane from its syndrome.

    Returns (decoded high plane, iterations used).  Success means the hard
    decision reproduces the syndrome exactly; anything else raises
    DecodeFailure after ``max_iter`` sweeps.
    """
    synd = np.asarray(synd, dtype=np.uint8)
    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (code.n, FIELD):
        raise InvalidParams([("InvalidPriors",
                              f"expected priors of shape {(code.n, FIELD)}, got {priors.shape}")])
    if synd.shape != (code.m,):
        raise InvalidParams([("InvalidSyndrome",
                              f"expected syndrome of length {code.m}, got {synd.shape}")])
    hard = np.argmax(priors, axis=1).astype(np.uint8)
    if np.array_equal(syndrome(code, hard), synd):
        return hard, 0

    lay = _layout(code)
    e = 2 * code.n

    # index tables: u = h*c domain for check updates, back to c for outputs
    to_u = gf64.DIV_IDX[lay.edge_coeff]              # (e, 64)
    from_u = gf64.MUL[lay.edge_coeff]                # (e, 64)
    shift = synd[lay.edge_check, None] ^ np.arange(FIELD)[None, :]   # (e, 64)
    rows = np.arange(e)[:, None]

    c2v = np.full((e, FIELD), 1.0 / FIELD)
    for it in range(1, max_iter + 1):
        # variable -> check: prior times the *other* incoming message
        other = c2v.reshape(code.n, 2, FIELD)[:, ::-1, :].reshape(e, FIELD)
        v2c = np.repeat(priors, 2, axis=0) * other
        v2c = np.maximum(v2c, _MSG_FLOOR)
        v2c /= v2c.sum(axis=1, keepdims=True)

        # check update in the WHT domain with leave-one-out products
        w = gf64.wht64(v2c[rows, to_u])
        padded = np.ones((code.m, lay.pad_edge.shape[1], FIELD))
        padded[lay.pad_mask] = w[lay.pad_edge[lay.pad_mask]]
        pre = np.ones_like(padded)
        np.cumprod(padded[:, :-1, :], axis=1, out=pre[:, 1:, :])
        suf = np.ones_like(padded)
        np.cumprod(padded[:, :0:-1, :], axis=1, out=suf[:, -2::-1, :])
        loo = pre * suf
        conv = gf64.wht64(loo[lay.edge_check, lay.edge_slot]) / FIELD
        out = np.maximum(conv[rows, shift][rows, from_u], _MSG_FLOOR)
        out /= out.sum(axis=1, keepdims=True)

        c2v = damping * out + (1.0 - damping) * c2v
        c2v /= c2v.sum(axis=1, keepdims=True)

        post = priors * c2v.reshape(code.n, 2, FIELD).prod(axis=1)
        hard = np.argmax(post, axis=1).astype(np.uint8)
        if np.array_equal(syndrome(code, hard), synd):
            return hard, it
    raise DecodeFailure(f"no syndrome match after {max_iter} iterations")


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def write_code(code: Gf64Code, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={code.n} rate={code.rate!r} q={FIELD} seed={code.seed}\n")
        for i in range(code.n):
            a, b = code.var_checks[i]
            ca, cb = code.coeffs[i]
            fh.write(f"{a} {b} {ca} {cb}\n")


def read_code(path: str) -> Gf64Code:
    with open(path, "r", encoding="utf-8") as fh:
        header = dict(kv.split("=") for kv in fh.readline().split())
        if int(header.get("q", -1)) != FIELD:
            raise InvalidParams([("InvalidCode", f"unsupported field size {header.get('q')}")])
        body = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    n = int(header["n"])
    if body.shape != (n, 4):
        raise InvalidParams([("InvalidCode", f"expected {n} rows of 4 columns, got {body.shape}")])
    return Gf64Code(n=n, rate=float(header["rate"]), seed=int(header["seed"]),
                    var_checks=body[:, :2].astype(np.int32),
                    coeffs=body[:, 2:].astype(np.uint8))
