"""Shared conventions, parameter records, seeded randomness and config I/O.

Unit convention used throughout the package: hbar = 1, so the vacuum
variance of each quadrature is 1/2 and [X, P] = i.  All entropies and
rates are in bits (log base 2).

Laboratory data sheets for homodyne experiments are usually normalized
to shot-noise units (SNU), where the vacuum variance is 1.  Config files
may declare ``units = snu``; quadrature-valued quantities are then scaled
by 1/sqrt(2) (variances by 1/2) when the model is assembled, and the
package works in natural units from there on.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

HBAR = 1.0
VACUUM_VAR = 0.5

#: multiply an SNU quadrature value by this to get natural (hbar = 1) units
SNU_QUAD_SCALE = 1.0 / math.sqrt(2.0)
#: multiply an SNU variance by this to get natural units
SNU_VAR_SCALE = 0.5

ENV_SEED = "CVOT_SEED"


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

class CvotError(Exception):
    """Base class for package errors."""


class InvalidParams(CvotError):
    """Parameter validation failed; carries a list of (code, message) pairs."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = list(issues)
        super().__init__("; ".join(f"[{c}] {m}" for c, m in self.issues))


class InsufficientData(CvotError):
    """Not enough (or degenerate) records for an estimate."""


class InfeasibleBudget(CvotError):
    """The epsilon budget cannot be satisfied (e.g. cutoff error too large)."""


class InfeasibleRate(CvotError):
    """No positive secure length exists for the given parameters."""


class DecodeFailure(CvotError):
    """Belief propagation did not reach a syndrome-consistent word."""


class ProtocolAbort(CvotError):
    """A party aborted; ``reason`` is a short machine-readable code."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


# ---------------------------------------------------------------------------
# seeded randomness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeededRng:
    """Deterministic RNG handle: (seed, stream) -> independent PCG64 stream.

    Identical (seed, stream) pairs produce identical byte streams; distinct
    stream ids give statistically independent generators.  The protocol
    reserves stream 0 for the shared record sampler, 1 for Alice's private
    randomness, 2 for Bob's, and 3 for code construction.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise InvalidParams([("InvalidSeed", f"seed must be u64, got {self.seed}")])
        if not (0 <= int(self.stream) < 2 ** 32):
            raise InvalidParams([("InvalidSeed", f"stream must be u32, got {self.stream}")])

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), int(self.stream)])

    def bytes(self, n: int) -> bytes:
        return self.generator().bytes(n)

    def child(self, stream: int) -> "SeededRng":
        return SeededRng(self.seed, stream)


def seed_from_env(default: int) -> int:
    """Return CVOT_SEED if set (decimal or 0x hex), else ``default``."""
    raw = os.environ.get(ENV_SEED)
    if raw is None or raw.strip() == "":
        return default
    return int(raw.strip(), 0)


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscretizationScheme:
    """Symmetric binning of the real line into 2**bits intervals of width delta.

    Bin k (1-based) covers (-alpha_cut + (k-1)*delta, -alpha_cut + k*delta];
    the two edge bins absorb the overflow.  ``alpha_cut`` must equal
    2**(bits-1) * delta so the grid is symmetric about zero.
    """

    delta: float
    alpha_cut: float
    bits: int = 10

    @property
    def n_bins(self) -> int:
        return 1 << self.bits

    def issues(self) -> list[tuple[str, str]]:
        out = []
        if not (self.delta > 0 and math.isfinite(self.delta)):
            out.append(("InvalidScheme", f"delta must be positive, got {self.delta}"))
        if not (1 <= self.bits <= 16):
            out.append(("InvalidScheme", f"bits must be in [1, 16], got {self.bits}"))
        else:
            want = (1 << (self.bits - 1)) * self.delta
            if not math.isclose(self.alpha_cut, want, rel_tol=1e-12, abs_tol=0.0):
                out.append(("InvalidScheme",
                            f"alpha_cut must be 2**(bits-1)*delta = {want!r}, got {self.alpha_cut!r}"))
        return out

    def scaled(self, factor: float) -> "DiscretizationScheme":
        return replace(self, delta=self.delta * factor, alpha_cut=self.alpha_cut * factor)

    def bin_centers(self) -> np.ndarray:
        k = np.arange(1, self.n_bins + 1)
        return -self.alpha_cut + (k - 0.5) * self.delta

    def bin_edges(self) -> np.ndarray:
        return -self.alpha_cut + self.delta * np.arange(self.n_bins + 1)


@dataclass(frozen=True)
class EpsilonBudget:
    """Failure-probability budget for the secure-length computation.

    A fully specified budget obeys eps_a > 4*eps_1 > 4*eps_2 > 4*eps_cut > 0.
    eps_1 and eps_2 may be left None; the rate engine then optimizes them.
    eps_cut is derived from the cutoff probability and is filled in by the
    engine as well.
    """

    eps_a: float
    eps_1: float | None = None
    eps_2: float | None = None
    eps_cut: float | None = None

    def issues(self) -> list[tuple[str, str]]:
        out = []
        if not (0.0 < self.eps_a < 1.0):
            out.append(("InvalidBudget", f"eps_a must be in (0, 1), got {self.eps_a}"))
        # weight 1 for eps_a, weight 4 for the subordinate epsilons: the chain
        # eps_a > 4 eps_1 > 4 eps_2 > 4 eps_cut > 0 over whichever are specified
        chain = [("eps_a", self.eps_a, 1.0)]
        for name in ("eps_1", "eps_2", "eps_cut"):
            v = getattr(self, name)
            if v is None:
                continue
            if not (0.0 < v < 1.0):
                out.append(("InvalidBudget", f"{name} must be in (0, 1), got {v}"))
            else:
                chain.append((name, v, 4.0))
        for (hi_name, hi, whi), (lo_name, lo, wlo) in zip(chain, chain[1:]):
            if not whi * hi > wlo * lo:
                out.append(("InvalidBudget",
                            f"require {whi:g}*{hi_name} > {wlo:g}*{lo_name}, "
                            f"got {hi_name}={hi!r}, {lo_name}={lo!r}"))
        return out


ENCODINGS = ("arbitrary", "gaussian", "iid")


@dataclass(frozen=True)
class MemoryAssumption:
    """Model of the adversary's quantum storage.

    encoding: 'arbitrary', 'gaussian', or 'iid' (independent and identical
    over blocks of ``iid_block`` modes).  nu is the storage rate (memory
    cells per transmitted signal), eta the optical transmittance of the
    memory, n_max the photon-number cutoff of the stored modes, and xi the
    strong-converse prefactor of the storage channel.
    """

    encoding: str = "gaussian"
    nu: float = 0.001
    eta: float = 0.75
    n_max: float = 100.0
    xi: float = 1.0
    iid_block: int = 10

    def issues(self) -> list[tuple[str, str]]:
        out = []
        if self.encoding not in ENCODINGS:
            out.append(("InvalidMemory", f"encoding must be one of {ENCODINGS}, got {self.encoding!r}"))
        if not (self.nu >= 0.0):
            out.append(("InvalidMemory", f"nu must be >= 0, got {self.nu}"))
        if not (0.0 <= self.eta <= 1.0):
            out.append(("InvalidMemory", f"eta must be in [0, 1], got {self.eta}"))
        if not (self.n_max >= 0.0):
            out.append(("InvalidMemory", f"n_max must be >= 0, got {self.n_max}"))
        if not (0.0 < self.xi <= 1.0):
            out.append(("InvalidMemory", f"xi must be in (0, 1], got {self.xi}"))
        if self.encoding == "iid" and self.iid_block < 1:
            out.append(("InvalidMemory", f"iid_block must be >= 1, got {self.iid_block}"))
        return out


def validate_params(scheme: DiscretizationScheme,
                    budget: EpsilonBudget,
                    memory: MemoryAssumption) -> None:
    """Raise InvalidParams carrying every issue found; no-op when all valid."""
    issues = scheme.issues() + budget.issues() + memory.issues()
    if issues:
        raise InvalidParams(issues)


# ---------------------------------------------------------------------------
# config files: flat "key = value" text, '#' comments, utf-8
# ---------------------------------------------------------------------------

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(raw: str):
    s = raw.strip()
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(s, 0) if not any(c in s for c in ".eE") or s.startswith("0x") else float(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def dump_config(cfg: Mapping[str, object]) -> str:
    lines = [f"{k} = {_fmt_value(cfg[k])}" for k in sorted(cfg)]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> dict[str, object]:
    out: dict[str, object] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams([("InvalidConfig", f"line {ln}: expected 'key = value', got {raw!r}")])
        key, _, val = line.partition("=")
        key = key.strip()
        if not key:
            raise InvalidParams([("InvalidConfig", f"line {ln}: empty key")])
        out[key] = _parse_value(val)
    return out


def load_config(path: str) -> dict[str, object]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def save_config(cfg: Mapping[str, object], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
