"""Pure-Python (numpy) implementations of the numerical kernels.

Signatures and results match the compiled ``_core`` extension; this module is
used when the extension is not built or ``WEYL_LAB_PURE_PYTHON`` is set.
"""

import math

import numpy as np

_BIG = 1e150
_LOG_BIG = math.log(_BIG)
_LOG_H0 = 0.25 * math.log(2.0)


def hermite_table(mmax, s):
    """Hermite functions h_0..h_mmax at the points ``s`` (pi convention).

    Returns an array of shape ``(mmax + 1, len(s))``.  The recurrence runs on
    mantissas with a per-point log scale so that neither the Gaussian factor
    nor the polynomial growth over- or underflows.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    sig = math.sqrt(2.0 * math.pi) * s
    out = np.empty((mmax + 1, s.size))
    logscale = _LOG_H0 - math.pi * s * s
    prev = np.zeros_like(s)
    cur = np.ones_like(s)
    out[0] = np.exp(logscale)
    for m in range(mmax):
        nxt = math.sqrt(2.0 / (m + 1)) * sig * cur - math.sqrt(m / (m + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            cur = np.where(big, cur / _BIG, cur)
            prev = np.where(big, prev / _BIG, prev)
            logscale = np.where(big, logscale + _LOG_BIG, logscale)
        with np.errstate(divide="ignore"):
            out[m + 1] = np.sign(cur) * np.exp(np.log(np.abs(cur)) + logscale)
    return out


def laguerre_table(kmax, a, x, log_prefactor=0.0):
    """L_k^{(a)}(x) * exp(log_prefactor) for k = 0..kmax, scalar ``x``."""
    a = float(a)
    x = float(x)
    out = np.empty(kmax + 1)
    logscale = float(log_prefactor)
    prev = 0.0
    cur = 1.0
    out[0] = math.exp(logscale)
    for k in range(kmax):
        nxt = ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
        prev, cur = cur, nxt
        if abs(cur) > 1e300:
            cur *= 1e-300
            prev *= 1e-300
            logscale += 690.7755278982137
        out[k + 1] = _scaled(cur, logscale)
    return out


def _scaled(mant, logscale):
    if mant == 0.0:
        return 0.0
    e = math.log(abs(mant)) + logscale
    if e > 709.78:
        return math.copysign(math.inf, mant)
    return math.copysign(math.exp(e), mant)


def assemble_graded(factors, coeffs, index, batch=None):
    """Sum over nodes of coeff * tensor product of per-axis factor matrices.

    ``factors`` has shape (N, n, D, D), ``coeffs`` shape (N,), ``index`` the
    (B, n) multi-index table.  Returns ``out[b, a] = sum_i c_i prod_j
    F[i, j, index[b, j], index[a, j]]``.
    """
    factors = np.asarray(factors, dtype=np.complex128)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    index = np.asarray(index, dtype=np.int64)
    N, n, D, _ = factors.shape
    B = index.shape[0]
    head = D ** (2 * (n - 1))
    if head * D * D > 2**23:
        return _assemble_gather(factors, coeffs, index)
    if batch is None:
        batch = max(1, int(2**22 // max(head, 1)))
    acc = np.zeros((head, D * D), dtype=np.complex128)
    for lo in range(0, N, batch):
        F = factors[lo:lo + batch]
        kr = coeffs[lo:lo + batch, None] * np.ones((1, 1), dtype=np.complex128)
        for j in range(n - 1):
            kr = (kr[:, :, None] * F[:, j].reshape(len(F), D * D)[:, None, :]).reshape(len(F), -1)
        acc += kr.T @ F[:, n - 1].reshape(len(F), D * D)
    # flat position of (beta_0, alpha_0, ..., beta_{n-2}, alpha_{n-2}) in kr
    row = np.zeros((B, B), dtype=np.int64)
    for j in range(n - 1):
        row = row * (D * D) + index[:, j][:, None] * D + index[:, j][None, :]
    col = index[:, n - 1][:, None] * D + index[:, n - 1][None, :]
    return acc[row, col]


def _assemble_gather(factors, coeffs, index):
    N, n = factors.shape[:2]
    B = index.shape[0]
    batch = max(1, int(2**21 // (B * B)))
    out = np.zeros((B, B), dtype=np.complex128)
    for lo in range(0, N, batch):
        F = factors[lo:lo + batch]
        prod = coeffs[lo:lo + batch, None, None] * F[:, 0][:, index[:, 0][:, None], index[:, 0][None, :]]
        for j in range(1, n):
            prod = prod * F[:, j][:, index[:, j][:, None], index[:, j][None, :]]
        out += prod.sum(axis=0)
    return out
