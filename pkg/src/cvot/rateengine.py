r"""Secure key-length accounting for the randomized OT protocol.

Pulls together the uncertainty bounds, the storage-channel capacity and
the reconciliation disclosure into the number of extractable string bits
``ell``.  With n measured pulses (about n/2 surviving the basis sift),
security parameter budget (eps_a, eps_1, eps_2, eps_cut) and a storage
channel of classical capacity C used nu times per pulse, the default
accounting is

    r_ot = 1/2 * ( lambda - r_ec - (2/n) * (log2(1/(eps_1 - eps_2)^2) + 1) )
    ell  = floor( (n/2) * xi * (r_ot - nu * C) - log2(1/(eps_a - 4 eps_1)) )

clamped at zero, where lambda is the min-entropy rate certified at
smoothing eps_2 - eps_cut and r_ec the bits per symbol disclosed during
reconciliation.  A looser variant that subtracts the storage term from
the unhalved margin is available as ``formula="full_margin"``.
The free epsilons are optimized over a log-spaced grid; the epsilon
chain must satisfy eps_a > 4 eps_1 > 4 eps_2 > 4 eps_cut > 0.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gaussmodel, uncertainty
from .core import (DiscretizationScheme, EpsilonBudget, InfeasibleBudget,
                   InfeasibleRate, InvalidParams, MemoryAssumption)

#: number of interior grid points per free epsilon in the optimizer
EPS_GRID_POINTS = 40


def g_capacity(x: float) -> float:
    """Capacity-style function (x+1) log2(x+1) - x log2(x), with g(0) = 0."""
    if x < 0:
        raise InvalidParams([("InvalidCapacity", f"argument must be >= 0, got {x}")])
    if x == 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def memory_capacity(memory: MemoryAssumption) -> float:
    """Classical capacity in bits per use of the attenuated storage channel."""
    return g_capacity(memory.eta * memory.n_max)


def eps_cutoff(p_out: float, n: float) -> float:
    """Abort-probability term sqrt(2 (1 - (1 - p_out)^n)).

    ``p_out`` is the per-pulse probability of an outcome beyond the edge
    bins; the complement form keeps precision when n * p_out is tiny.
    """
    if not (0.0 <= p_out <= 1.0) or n <= 0:
        raise InvalidParams([("InvalidCutoff", f"need p_out in [0, 1] and n > 0, got ({p_out}, {n})")])
    if p_out == 1.0:
        return math.sqrt(2.0)
    return math.sqrt(max(0.0, -2.0 * math.expm1(n * math.log1p(-p_out))))


def reconciliation_leakage(sigma_a: float, rho: float,
                           scheme: DiscretizationScheme, beta: float) -> float:
    """Disclosure per symbol of a reconciliation scheme of efficiency beta.

    H(Z) - beta * I, with H(Z) the binned symbol entropy of the sender
    marginal and I the Gaussian mutual information of the matched pair.
    """
    h_z = gaussmodel.symbol_entropy(sigma_a, scheme)
    i_ab = -0.5 * math.log2(1.0 - rho * rho)
    return h_z - beta * i_ab


def reconciliation_efficiency(sigma_a: float, rho: float,
                              scheme: DiscretizationScheme, r_ec: float) -> float:
    """Efficiency beta = (H(Z) - r_ec) / I of a scheme disclosing r_ec bits/symbol."""
    h_z = gaussmodel.symbol_entropy(sigma_a, scheme)
    i_ab = -0.5 * math.log2(1.0 - rho * rho)
    return (h_z - r_ec) / i_ab


def correctness_eps(eps_ir: float, eps_a: float) -> float:
    """Overall correctness failure bound min(1, eps_ir + 2 eps_a)."""
    return min(1.0, eps_ir + 2.0 * eps_a)


# ---------------------------------------------------------------------------
# secure length
# ---------------------------------------------------------------------------

FORMULAS = ("half_margin", "full_margin")


@dataclass(frozen=True)
class RateInputs:
    """Operating point for the secure-length computation (natural units)."""

    n: float
    scheme: DiscretizationScheme
    sigma_a: float
    rho: float
    r_ec: float
    budget: EpsilonBudget
    memory: MemoryAssumption
    formula: str = "half_margin"
    p_out: float | None = None   # per-pulse out-of-range probability; derived from sigma_a if None

    def issues(self) -> list[tuple[str, str]]:
        out = []
        out.extend(self.scheme.issues())
        out.extend(self.budget.issues())
        out.extend(self.memory.issues())
        if self.n <= 0:
            out.append(("InvalidRate", f"n must be positive, got {self.n}"))
        if self.sigma_a <= 0:
            out.append(("InvalidRate", f"sigma_a must be positive, got {self.sigma_a}"))
        if not (0.0 < self.rho < 1.0):
            out.append(("InvalidRate", f"rho must be in (0, 1), got {self.rho}"))
        if self.r_ec < 0:
            out.append(("InvalidRate", f"r_ec must be >= 0, got {self.r_ec}"))
        if self.formula not in FORMULAS:
            out.append(("InvalidRate", f"formula must be one of {FORMULAS}, got {self.formula!r}"))
        if self.p_out is not None and not (0.0 <= self.p_out <= 1.0):
            out.append(("InvalidRate", f"p_out must be in [0, 1], got {self.p_out}"))
        return out


@dataclass(frozen=True)
class RateResult:
    """Secure length and the budget split that achieved it."""

    ell: int
    rate: float
    r_ot: float
    lam: float
    alpha: float
    eps_1: float
    eps_2: float
    eps_cut: float
    r_ec: float
    capacity: float
    formula: str


def _lambda_for(memory: MemoryAssumption, scheme: DiscretizationScheme,
                n: float, eps: float, sigma_a: float) -> uncertainty.LambdaResult:
    if memory.encoding == "arbitrary":
        return uncertainty.lambda_majorization(scheme.delta, n, eps)
    if memory.encoding == "gaussian":
        return uncertainty.lambda_gaussian(scheme.delta, n, eps)
    rate = uncertainty.lambda_iid(scheme.delta, n, eps, memory.iid_block, sigma_a)
    return uncertainty.LambdaResult(rate=rate, alpha=math.nan)


def _eps_grid(lo: float, hi: float) -> np.ndarray:
    return np.geomspace(lo, hi, EPS_GRID_POINTS + 2)[1:-1]


def secure_length(inputs: RateInputs,
                  lam_cache: dict[float, uncertainty.LambdaResult] | None = None) -> RateResult:
    """Maximal extractable string length for the given operating point.

    Free epsilons (those left as None in the budget) are optimized over a
    log-spaced grid between the cutoff and eps_a / 4.  ``lam_cache`` maps
    smoothing epsilons to uncertainty-bound results and may be shared
    across calls that keep scheme, n, memory and sigma_a fixed (a region
    sweep); the same cache must not be reused across those changing.

    Raises InfeasibleBudget when no valid epsilon chain exists at all;
    an operating point that merely yields zero length returns ell = 0.
    """
    issues = inputs.issues()
    if issues:
        raise InvalidParams(issues)

    budget, memory, scheme = inputs.budget, inputs.memory, inputs.scheme
    n = float(inputs.n)
    eps_a = budget.eps_a

    if budget.eps_cut is not None:
        e_cut = budget.eps_cut
    else:
        p_out = inputs.p_out
        if p_out is None:
            p_out = math.erfc(scheme.alpha_cut / (inputs.sigma_a * math.sqrt(2.0)))
        e_cut = eps_cutoff(p_out, n)

    if 4.0 * e_cut >= eps_a:
        raise InfeasibleBudget(
            f"cutoff eps {e_cut:.3e} leaves no room in eps_a = {eps_a:.3e}")

    lo = max(e_cut * 1.0000001, 1e-15)
    hi = eps_a / 4.0
    if lo >= hi:
        raise InfeasibleBudget(f"epsilon grid empty: lo {lo:.3e} >= hi {hi:.3e}")

    eps1_values = [budget.eps_1] if budget.eps_1 is not None else list(_eps_grid(lo, hi))
    eps2_values = [budget.eps_2] if budget.eps_2 is not None else list(_eps_grid(lo, hi))

    capacity = memory_capacity(memory)
    if lam_cache is None:
        lam_cache = {}

    best: RateResult | None = None
    for e2 in eps2_values:
        if not e2 > e_cut:
            continue
        smoothing = e2 - e_cut
        found = lam_cache.get(smoothing)
        if found is None:
            found = _lambda_for(memory, scheme, n, smoothing, inputs.sigma_a)
            lam_cache[smoothing] = found
        lam = found.rate
        for e1 in eps1_values:
            if not (e2 < e1 and 4.0 * e1 < eps_a):
                continue
            spread = (2.0 / n) * (math.log2(1.0 / (e1 - e2) ** 2) + 1.0)
            r_ot = 0.5 * (lam - inputs.r_ec - spread)
            if inputs.formula == "half_margin":
                raw = (n / 2.0) * memory.xi * (r_ot - memory.nu * capacity)
            else:
                raw = (n / 2.0) * memory.xi * (lam - inputs.r_ec - spread - memory.nu * capacity)
            raw -= math.log2(1.0 / (eps_a - 4.0 * e1))
            ell = max(0, int(math.floor(raw)))
            if best is None or ell > best.ell:
                best = RateResult(ell=ell, rate=ell / n, r_ot=r_ot, lam=lam,
                                  alpha=found.alpha, eps_1=float(e1), eps_2=float(e2),
                                  eps_cut=e_cut, r_ec=inputs.r_ec,
                                  capacity=capacity, formula=inputs.formula)
    if best is None:
        raise InfeasibleBudget(
            "no epsilon assignment satisfies eps_a > 4 eps_1 > 4 eps_2 > 4 eps_cut"
            f" (eps_a = {eps_a:.3e}, eps_cut = {e_cut:.3e})")
    return best


# ---------------------------------------------------------------------------
# region sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionResult:
    """OT rate over a (storage rate nu) x (channel loss mu) grid."""

    mus: np.ndarray
    nus: np.ndarray
    rates: np.ndarray   # shape (len(nus), len(mus))
    ells: np.ndarray    # same shape, integer lengths


def _point_inputs(source: gaussmodel.SourceModel, mu: float,
                  scheme: DiscretizationScheme, n: float, budget: EpsilonBudget,
                  memory: MemoryAssumption, beta: float,
                  formula: str) -> RateInputs:
    stats = gaussmodel.channel_stats(source.with_loss_b(mu))
    cm = gaussmodel.epr_covariance(source.with_loss_b(mu))
    r_ec = reconciliation_leakage(stats.sigma_a, stats.rho, scheme, beta)
    return RateInputs(n=n, scheme=scheme, sigma_a=stats.sigma_a, rho=stats.rho,
                      r_ec=r_ec, budget=budget, memory=memory, formula=formula,
                      p_out=gaussmodel.p_outside_range(cm, scheme))


def rate_at_loss(source: gaussmodel.SourceModel, mu: float,
                 scheme: DiscretizationScheme, n: float, budget: EpsilonBudget,
                 memory: MemoryAssumption, beta: float, formula: str = "half_margin",
                 lam_cache: dict | None = None) -> RateResult:
    """Secure rate of the tuned source when the receiver arm has loss mu."""
    inputs = _point_inputs(source, mu, scheme, n, budget, memory, beta, formula)
    return secure_length(inputs, lam_cache=lam_cache)


def security_region(source: gaussmodel.SourceModel, scheme: DiscretizationScheme,
                    n: float, budget: EpsilonBudget, memory: MemoryAssumption,
                    beta: float, mus: np.ndarray, nus: np.ndarray,
                    formula: str = "half_margin") -> RegionResult:
    """Sweep the OT rate over channel loss and storage rate.

    The sender marginal (hence the cutoff epsilon and the uncertainty
    bound) does not depend on the receiver-arm loss, so one lambda cache
    per nu serves the whole loss sweep.
    """
    mus = np.asarray(mus, dtype=float)
    nus = np.asarray(nus, dtype=float)
    rates = np.zeros((nus.size, mus.size))
    ells = np.zeros((nus.size, mus.size), dtype=np.int64)
    lam_cache: dict[float, uncertainty.LambdaResult] = {}
    for i, nu in enumerate(nus):
        mem = dataclasses.replace(memory, nu=float(nu))
        for j, mu in enumerate(mus):
            res = rate_at_loss(source, float(mu), scheme, n, budget, mem, beta,
                               formula=formula, lam_cache=lam_cache)
            rates[i, j] = res.rate
            ells[i, j] = res.ell
    return RegionResult(mus=mus, nus=nus, rates=rates, ells=ells)


def loss_threshold(source: gaussmodel.SourceModel, scheme: DiscretizationScheme,
                   n: float, budget: EpsilonBudget, memory: MemoryAssumption,
                   beta: float, lo: float = 0.0, hi: float = 0.9,
                   tol: float = 1e-4, formula: str = "half_margin") -> float:
    """Largest receiver-arm loss with a positive OT rate, by bisection.

    Raises InfeasibleRate if the rate already vanishes at ``lo``; returns
    ``hi`` if it is still positive there.
    """
    lam_cache: dict[float, uncertainty.LambdaResult] = {}

    def rate(mu: float) -> float:
        return rate_at_loss(source, mu, scheme, n, budget, memory, beta,
                            formula=formula, lam_cache=lam_cache).rate

    if rate(lo) <= 0.0:
        raise InfeasibleRate(f"rate is zero already at loss {lo}")
    if rate(hi) > 0.0:
        return hi
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if rate(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# min-entropy splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingCheck:
    """Exact-arithmetic witness for the min-entropy splitting bound."""

    p_guess: Fraction
    p_max: Fraction
    holds: bool


def splitting_bound_check(joint) -> SplittingCheck:
    """Check the splitting strategy on an explicit joint distribution.

    ``joint[i][j]`` are nonnegative weights for (z0 = i, z1 = j); they are
    normalized exactly.  The split flags z0 values whose marginal exceeds
    sqrt(p_max) (compared via squares, so everything stays rational):
    on the light branch the adversary guesses z0, on the heavy branch z1.
    The lemma promises p_guess^2 <= 4 p_max; ``holds`` reports exactly that,
    evaluated in Fraction arithmetic with no rounding anywhere.
    """
    rows = [[Fraction(v) for v in row] for row in joint]
    if not rows or not rows[0]:
        raise InvalidParams([("InvalidJoint", "joint distribution must be non-empty")])
    if any(v < 0 for row in rows for v in row):
        raise InvalidParams([("InvalidJoint", "joint weights must be nonnegative")])
    total = sum(v for row in rows for v in row)
    if total <= 0:
        raise InvalidParams([("InvalidJoint", "joint weights must not all vanish")])
    rows = [[v / total for v in row] for row in rows]

    p_max = max(v for row in rows for v in row)
    marg0 = [sum(row) for row in rows]
    heavy = [i for i, p in enumerate(marg0) if p * p > p_max]
    light_max = max((p for i, p in enumerate(marg0) if i not in set(heavy)),
                    default=Fraction(0))
    n_cols = len(rows[0])
    col = [sum(rows[i][j] for i in heavy) for j in range(n_cols)]
    heavy_max = max(col, default=Fraction(0))
    p_guess = light_max + heavy_max
    return SplittingCheck(p_guess=p_guess, p_max=p_max,
                          holds=p_guess * p_guess <= 4 * p_max)
