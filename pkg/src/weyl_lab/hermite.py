"""Hermite and Laguerre functions, the truncated Hermite basis of L^2(R^n),
and spectral bookkeeping for the harmonic oscillator.

Hermite functions use the pi-adapted scaling

    h_m(s) = (2 pi)^{1/4} psi_m(sqrt(2 pi) s),

where psi_m is the L^2-normalised eigenfunction of -d^2/dx^2 + x^2.  In this
scaling h_0(s) = 2^{1/4} exp(-pi s^2) and the Fourier transform
F f(xi) = int f(t) exp(-2 pi i xi t) dt acts on h_m by (-i)^m.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import CapacityError, ValidationError

MAX_HERMITE_ORDER = 10_000
MAX_LAGUERRE_ORDER = 1_000_000
MAX_BASIS_SIZE = 50_000
CONVERGES = "converges"
DIVERGES = "diverges"


def hermite_eval(m, s):
    """Evaluate h_m at ``s`` (scalar or array)."""
    m = int(m)
    if m < 0 or m > MAX_HERMITE_ORDER:
        raise ValidationError(f"Hermite order must lie in [0, {MAX_HERMITE_ORDER}], got {m}")
    arr = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("Hermite argument must be finite")
    vals = kernels.hermite_table(m, arr.ravel())[m]
    return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)


def hermite_functions(mmax, s):
    """Table of h_0..h_mmax at the points ``s``; shape (mmax + 1,) + s.shape."""
    arr = np.asarray(s, dtype=np.float64)
    if mmax < 0 or mmax > MAX_HERMITE_ORDER:
        raise ValidationError(f"Hermite order must lie in [0, {MAX_HERMITE_ORDER}], got {mmax}")
    return kernels.hermite_table(int(mmax), arr.ravel()).reshape((mmax + 1,) + arr.shape)


def laguerre_eval(k, a, x):
    """Generalised Laguerre polynomial L_k^{(a)}(x) by upward recurrence."""
    k = int(k)
    if k < 0 or k > MAX_LAGUERRE_ORDER:
        raise ValidationError(f"Laguerre degree must lie in [0, {MAX_LAGUERRE_ORDER}], got {k}")
    if a < 0:
        raise ValidationError("Laguerre type must be nonnegative")
    return float(kernels.laguerre_table(k, float(a), float(x), 0.0)[k])


def laguerre_sequence(kmax, a, x, log_prefactor=0.0):
    """L_k^{(a)}(x) * exp(log_prefactor) for k = 0..kmax.

    Passing ``log_prefactor = -x/2`` yields Laguerre functions without
    intermediate overflow even when L_k itself is not representable.
    """
    if kmax < 0 or kmax > MAX_LAGUERRE_ORDER:
        raise ValidationError(f"Laguerre degree must lie in [0, {MAX_LAGUERRE_ORDER}], got {kmax}")
    return kernels.laguerre_table(int(kmax), float(a), float(x), float(log_prefactor))


@dataclass(frozen=True)
class BasisSpec:
    """Truncated tensor Hermite basis {Phi_alpha : |alpha| <= K} of L^2(R^n).

    Multi-indices are ordered graded-lexicographically, so each eigenspace
    stratum |alpha| = k is a contiguous block ``offsets[k]:offsets[k+1]``.
    ``calibration`` records the Laguerre scaling constant once verified.
    """

    n: int
    K: int
    indices: np.ndarray = field(repr=False, compare=False)
    calibration: float | None = None

    @property
    def size(self):
        return self.indices.shape[0]

    @property
    def degrees(self):
        return self.indices.sum(axis=1)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(stratum_sizes(self.n, self.K))]).astype(np.int64)

    def stratum(self, k):
        off = self.offsets
        return slice(int(off[k]), int(off[k + 1]))

    def interior(self, kmax=None):
        """Boolean mask of basis elements with |alpha| <= kmax (default K // 2)."""
        kmax = self.K // 2 if kmax is None else kmax
        return self.degrees <= kmax

    def with_calibration(self, c):
        return BasisSpec(self.n, self.K, self.indices, float(c))

    def position(self, alpha):
        alpha = np.asarray(alpha)
        hit = np.nonzero((self.indices == alpha).all(axis=1))[0]
        if hit.size == 0:
            raise KeyError(tuple(alpha))
        return int(hit[0])


def stratum_sizes(n, K):
    return [comb(k + n - 1, n - 1) for k in range(K + 1)]


def basis_enumerate(n, K):
    """Enumerate the multi-indices with |alpha| <= K in graded-lex order."""
    if n < 1 or K < 0:
        raise ValidationError(f"need n >= 1 and K >= 0, got n={n}, K={K}")
    size = comb(K + n, n)
    if size > MAX_BASIS_SIZE:
        raise CapacityError(f"basis size {size} exceeds cap {MAX_BASIS_SIZE}")
    rows = []
    for k in range(K + 1):
        stratum = []
        # multisets of k axes <-> multi-indices of total degree k
        for combo in combinations_with_replacement(range(n), k):
            alpha = [0] * n
            for axis in combo:
                alpha[axis] += 1
            stratum.append(tuple(alpha))
        rows.extend(sorted(stratum))
    return BasisSpec(n, K, np.array(rows, dtype=np.int64).reshape(size, n))


class OscillatorSpectrum(NamedTuple):
    eigenvalues: np.ndarray
    multiplicities: np.ndarray


def oscillator_spectrum(n, K):
    """Eigenvalues 2k + n of H = -Delta + |t|^2 with multiplicities, k <= K."""
    k = np.arange(K + 1)
    return OscillatorSpectrum(2 * k + n, multiplicity(k, n))


def multiplicity(k, n):
    """binomial(k + n - 1, n - 1) as floats, vectorised over k."""
    k = np.asarray(k, dtype=np.float64)
    out = np.ones_like(k)
    for j in range(1, n):
        out *= (k + j) / j
    return out


class TailVerdict(NamedTuple):
    verdict: str
    critical_p: float


def schatten_tail_classifier(d, e, p):
    """Classify sum_k k^d (k^e)^p: converges iff d + e p < -1.

    The boundary p = p* = -(1 + d)/e is reported as divergent.
    """
    if e >= 0:
        raise ValidationError("envelope exponent must be negative")
    critical = -(1.0 + d) / e
    gap = d + e * p + 1.0
    # boundary tolerance absorbs rounding in d + e p
    tol = 1e-12 * max(1.0, abs(d), abs(e * p))
    return TailVerdict(CONVERGES if gap < -tol else DIVERGES, critical)


class SchattenPartialSum(NamedTuple):
    partial_sum: float
    verdict: str


def oscillator_inverse_schatten(n, K, p):
    """Partial sum of tr(H^{-p}) over strata k <= K and the analytic verdict."""
    if p <= 0:
        raise ValidationError("p must be positive")
    k = np.arange(int(K) + 1, dtype=np.float64)
    terms = multiplicity(k, n) * (2.0 * k + n) ** (-float(p))
    # sum smallest terms first
    partial = float(np.sum(terms[::-1]))
    return SchattenPartialSum(partial, schatten_tail_classifier(n - 1, -1.0, p).verdict)
