r"""Two-mode squeezed source model, quadrature sampling and discretization.

The simulated source interferes two orthogonally squeezed vacua on a
balanced beam splitter, giving an EPR pair whose X quadratures are
correlated and P quadratures anti-correlated.  With squeezed variance
``v_sq`` and anti-squeezed variance ``v_anti`` (natural units, vacuum =
1/2), the lossless two-mode covariance matrix over (X_A, P_A, X_B, P_B)
is

    [[ vbar, 0,    cbar, 0   ],
     [ 0,    vbar, 0,   -cbar],
     [ cbar, 0,    vbar, 0   ],
     [ 0,   -cbar, 0,    vbar]],

with vbar = (v_sq + v_anti)/2 and cbar = (v_anti - v_sq)/2.  Independent
loss channels of transmissivity (1 - loss) on each arm shrink variances
toward the vacuum and scale the cross covariance by sqrt of the combined
transmissivities.

Receiver-side post-processing follows the convention of the protocol:
the receiver divides his outcomes by sqrt(1 - loss_b) and flips the sign
of P results, so that honest records are positively correlated in both
bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import (CvotError, DiscretizationScheme, InsufficientData,
                   InvalidParams, SeededRng, VACUUM_VAR)

RECORD_DTYPE = np.dtype([
    ("basis_a", "u1"),
    ("basis_b", "u1"),
    ("value_a", "<f8"),
    ("value_b", "<f8"),   # receiver value, rescaled by 1/sqrt(1-loss_b), P sign-flipped
])

X, P = 0, 1


# ---------------------------------------------------------------------------
# covariance matrices
# ---------------------------------------------------------------------------

_OMEGA = np.array([[0, 1, 0, 0],
                   [-1, 0, 0, 0],
                   [0, 0, 0, 1],
                   [0, 0, -1, 0]], dtype=float)


@dataclass(frozen=True)
class CovarianceMatrix:
    """4x4 covariance matrix over (X_A, P_A, X_B, P_B), natural units."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if m.shape != (4, 4):
            raise InvalidParams([("InvalidCM", f"expected 4x4 matrix, got {m.shape}")])
        object.__setattr__(self, "mat", m)

    def issues(self, tol: float = 1e-9) -> list[tuple[str, str]]:
        out = []
        m = self.mat
        if not np.allclose(m, m.T, atol=tol):
            out.append(("InvalidCM", "covariance matrix is not symmetric"))
        # uncertainty bound: Gamma + (i/2) Omega >= 0
        eig = np.linalg.eigvalsh(m + 0.5j * _OMEGA)
        if eig.min() < -tol:
            out.append(("InvalidCM", f"uncertainty bound violated (min eig {eig.min():.3e})"))
        return out

    @property
    def var_xa(self) -> float: return float(self.mat[0, 0])

    @property
    def var_pa(self) -> float: return float(self.mat[1, 1])

    @property
    def var_xb(self) -> float: return float(self.mat[2, 2])

    @property
    def var_pb(self) -> float: return float(self.mat[3, 3])

    @property
    def cov_x(self) -> float: return float(self.mat[0, 2])

    @property
    def cov_p(self) -> float: return float(self.mat[1, 3])

    def pearson_x(self) -> float:
        return self.cov_x / math.sqrt(self.var_xa * self.var_xb)

    def pearson_p(self) -> float:
        return self.cov_p / math.sqrt(self.var_pa * self.var_pb)


def duan_value(cm: CovarianceMatrix) -> float:
    """Two-mode entanglement witness in dB.

    Computes 10*log10 of [Var(X_A - X_B) + Var(P_A + P_B)] normalized to
    its vacuum value of two.  Negative means entangled; the magnitude is
    commonly quoted as "dB of entanglement".
    """
    m = cm.mat
    vx = m[0, 0] + m[2, 2] - 2.0 * m[0, 2]
    vp = m[1, 1] + m[3, 3] + 2.0 * m[1, 3]
    total = (vx + vp) / (4.0 * VACUUM_VAR)
    return 10.0 * math.log10(total)


# ---------------------------------------------------------------------------
# source model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceModel:
    """EPR source with per-arm losses (natural units, vacuum variance 1/2)."""

    v_sq: float
    v_anti: float
    loss_a: float = 0.0
    loss_b: float = 0.0

    def issues(self) -> list[tuple[str, str]]:
        out = []
        if not (0.0 < self.v_sq <= self.v_anti):
            out.append(("InvalidSource", f"need 0 < v_sq <= v_anti, got ({self.v_sq}, {self.v_anti})"))
        elif self.v_sq * self.v_anti < 0.25 * (1.0 - 1e-12):
            out.append(("InvalidSource",
                        f"squeezed-mode uncertainty product v_sq*v_anti = {self.v_sq * self.v_anti:.6g} < 1/4"))
        for name in ("loss_a", "loss_b"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                out.append(("InvalidSource", f"{name} must be in [0, 1), got {v}"))
        return out

    def validated(self) -> "SourceModel":
        issues = self.issues()
        if issues:
            raise InvalidParams(issues)
        return self

    @property
    def vbar(self) -> float:
        return 0.5 * (self.v_sq + self.v_anti)

    @property
    def cbar(self) -> float:
        return 0.5 * (self.v_anti - self.v_sq)

    def with_loss_b(self, loss_b: float) -> "SourceModel":
        return SourceModel(self.v_sq, self.v_anti, self.loss_a, loss_b)

    @classmethod
    def tuned(cls, sigma_a: float, rho: float, loss_a: float = 0.0,
              loss_b: float = 0.0) -> "SourceModel":
        """Solve (v_sq, v_anti) so the lossy state has the given sender
        standard deviation and matched-basis Pearson coefficient."""
        if not (0.0 < rho < 1.0):
            raise InvalidParams([("InvalidSource", f"rho must be in (0, 1), got {rho}")])
        va = sigma_a * sigma_a
        vbar = (va - loss_a * VACUUM_VAR) / (1.0 - loss_a)
        vb = (1.0 - loss_b) * vbar + loss_b * VACUUM_VAR
        c = rho * math.sqrt(va * vb)
        cbar = c / math.sqrt((1.0 - loss_a) * (1.0 - loss_b))
        return cls(vbar - cbar, vbar + cbar, loss_a, loss_b).validated()


def epr_covariance(source: SourceModel) -> CovarianceMatrix:
    """Covariance matrix of the lossy two-mode squeezed state."""
    ta = 1.0 - source.loss_a
    tb = 1.0 - source.loss_b
    va = ta * source.vbar + source.loss_a * VACUUM_VAR
    vb = tb * source.vbar + source.loss_b * VACUUM_VAR
    c = math.sqrt(ta * tb) * source.cbar
    m = np.array([[va, 0.0, c, 0.0],
                  [0.0, va, 0.0, -c],
                  [c, 0.0, vb, 0.0],
                  [0.0, -c, 0.0, vb]])
    return CovarianceMatrix(m)


@dataclass(frozen=True)
class ChannelStats:
    """Second moments of the record stream the protocol actually processes.

    sigma_a: sender marginal std; sigma_b: receiver std after rescaling by
    1/sqrt(1 - loss_b); rho: matched-basis Pearson coefficient (sign flip
    already applied, so it is positive in both bases).
    """

    sigma_a: float
    sigma_b: float
    rho: float

    def conditional_sigma(self) -> float:
        """Std of the sender value given the receiver value."""
        return self.sigma_a * math.sqrt(1.0 - self.rho * self.rho)

    def conditional_slope(self) -> float:
        """Regression coefficient of sender value on receiver value."""
        return self.rho * self.sigma_a / self.sigma_b

    def mutual_information(self) -> float:
        """Gaussian mutual information in bits, -1/2 log2(1 - rho^2)."""
        return -0.5 * math.log2(1.0 - self.rho * self.rho)


def channel_stats(source: SourceModel) -> ChannelStats:
    cm = epr_covariance(source)
    scale = 1.0 / math.sqrt(1.0 - source.loss_b)
    return ChannelStats(
        sigma_a=math.sqrt(cm.var_xa),
        sigma_b=math.sqrt(cm.var_xb) * scale,
        rho=cm.pearson_x(),
    )


def symbol_entropy(sigma: float, scheme: DiscretizationScheme) -> float:
    """Shannon entropy in bits of a centered Gaussian discretized by ``scheme``."""
    edges = scheme.bin_edges() / sigma
    cdf = stats.norm.cdf(edges)
    cdf[0] = 0.0
    cdf[-1] = 1.0
    z = np.diff(cdf)
    z = z[z > 0]
    return float(-(z * np.log2(z)).sum())


# ---------------------------------------------------------------------------
# sampling and discretization
# ---------------------------------------------------------------------------

def sample_records(source: SourceModel, n: int, rng: SeededRng | np.random.Generator) -> np.ndarray:
    """Draw ``n`` measurement records from the source.

    Both parties pick X or P uniformly at random.  The receiver column is
    rescaled by 1/sqrt(1 - loss_b) and sign-flipped for P outcomes, as the
    protocol prescribes, so matched-basis records are positively correlated.
    """
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    cm = epr_covariance(source)
    va, vb, c = cm.var_xa, cm.var_xb, cm.cov_x

    out = np.zeros(n, dtype=RECORD_DTYPE)
    out["basis_a"] = gen.integers(0, 2, size=n, dtype=np.uint8)
    out["basis_b"] = gen.integers(0, 2, size=n, dtype=np.uint8)

    a = gen.normal(0.0, math.sqrt(va), size=n)
    out["value_a"] = a

    # receiver value: conditionally Gaussian given the sender outcome when
    # bases match, independent otherwise
    matched = out["basis_a"] == out["basis_b"]
    slope = c / va
    cond_var = vb - c * c / va
    b = np.empty(n)
    b[~matched] = gen.normal(0.0, math.sqrt(vb), size=int((~matched).sum()))
    sign = np.where(out["basis_a"][matched] == X, 1.0, -1.0)  # P quadratures anti-correlated
    b[matched] = sign * slope * a[matched] + gen.normal(0.0, math.sqrt(cond_var),
                                                        size=int(matched.sum()))
    b /= math.sqrt(1.0 - source.loss_b)
    b[out["basis_b"] == P] *= -1.0
    out["value_b"] = b
    return out


def discretize(values: np.ndarray, scheme: DiscretizationScheme) -> np.ndarray:
    """Map real values to 1-based bin indices, clamping to the edge bins."""
    k = np.ceil((np.asarray(values, dtype=float) + scheme.alpha_cut) / scheme.delta)
    return np.clip(k, 1, scheme.n_bins).astype(np.int32)


def p_within_range(cm: CovarianceMatrix, scheme: DiscretizationScheme) -> float:
    """Worst-case probability that a sender outcome lies inside the binning range."""
    return 1.0 - p_outside_range(cm, scheme)


def p_outside_range(cm: CovarianceMatrix, scheme: DiscretizationScheme) -> float:
    """Worst-case probability that a sender outcome lands beyond the edge bins.

    Computed with erfc so values far below machine epsilon survive; the
    abort-probability penalty in the rate analysis needs this complement,
    not the (double-rounded) inside probability.
    """
    probs = [math.erfc(scheme.alpha_cut / (math.sqrt(v) * math.sqrt(2.0)))
             for v in (cm.var_xa, cm.var_pa)]
    return max(probs)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

def estimate_cm(records: np.ndarray) -> tuple[CovarianceMatrix, float, float]:
    """Estimate (covariance matrix, pooled Pearson rho, sender std) from records.

    The estimate is in the *rescaled* convention: receiver variances are those
    of the rescaled record stream (they coincide with the physical ones only
    for a lossless channel).  The P sign flip is undone for the covariance
    entries, so the returned matrix has the physical sign structure.

    Raises InsufficientData when any quadrature pairing has fewer than two
    samples or a marginal is degenerate.
    """
    r = np.asarray(records)
    if r.dtype != RECORD_DTYPE:
        raise InvalidParams([("InvalidRecords", f"expected dtype {RECORD_DTYPE}, got {r.dtype}")])

    a_bas, b_bas = r["basis_a"], r["basis_b"]
    va, vb = r["value_a"], r["value_b"]
    # undo the receiver sign flip to recover physical P values (still rescaled)
    vb_phys = np.where(b_bas == P, -vb, vb)

    def _var(vals, who):
        if vals.size < 2:
            raise InsufficientData(f"fewer than 2 samples for {who}")
        v = float(np.var(vals, ddof=1))
        if v < 1e-12:
            raise InsufficientData(f"degenerate (constant) samples for {who}")
        return v

    m = np.zeros((4, 4))
    m[0, 0] = _var(va[a_bas == X], "X_A")
    m[1, 1] = _var(va[a_bas == P], "P_A")
    m[2, 2] = _var(vb_phys[b_bas == X], "X_B")
    m[3, 3] = _var(vb_phys[b_bas == P], "P_B")

    def _cov(i, j, sel, x, y):
        if int(sel.sum()) < 2:
            raise InsufficientData(f"fewer than 2 joint samples for entry ({i},{j})")
        cov = float(np.cov(x[sel], y[sel], ddof=1)[0, 1])
        m[i, j] = m[j, i] = cov

    _cov(0, 2, (a_bas == X) & (b_bas == X), va, vb_phys)
    _cov(1, 3, (a_bas == P) & (b_bas == P), va, vb_phys)
    _cov(0, 3, (a_bas == X) & (b_bas == P), va, vb_phys)
    _cov(1, 2, (a_bas == P) & (b_bas == X), va, vb_phys)

    # pooled matched-basis correlation on the protocol's (flipped) values
    matched = a_bas == b_bas
    if int(matched.sum()) < 4:
        raise InsufficientData("fewer than 4 matched-basis records")
    rho = float(np.corrcoef(va[matched], vb[matched])[0, 1])
    sigma_a = float(np.std(va, ddof=1))
    return CovarianceMatrix(m), rho, sigma_a


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def write_records(records: np.ndarray, path: str) -> None:
    np.asarray(records, dtype=RECORD_DTYPE).tofile(path)


def read_records(path: str) -> np.ndarray:
    return np.fromfile(path, dtype=RECORD_DTYPE)


def write_cm(cm: CovarianceMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in cm.mat:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_cm(path: str) -> CovarianceMatrix:
    vals = np.loadtxt(path, dtype=float)
    return CovarianceMatrix(np.asarray(vals, dtype=float).reshape(4, 4))
