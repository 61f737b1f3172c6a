"""Weyl transforms as dense matrices in the truncated Hermite basis.

The Schroedinger representation acts by

    (rho(x, y) phi)(t) = exp(pi i (x . y + 2 y . t)) phi(t + x),

and W(mu) = int rho(w) dmu(w).  Matrix entries are M[beta, alpha] =
<rho Phi_alpha, Phi_beta>, so operators act on coefficient columns.  Each
rho(x, y) factorises over coordinates; the 1-D factors are computed by
Gauss-Hermite quadrature centred on the peak of h_a(t + x) h_b(t) and the
n-D matrix is assembled from them by ``kernels.assemble_graded``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import roots_hermite

from . import kernels
from . import measure as msr
from . import surface as surf
from .errors import (
    AccuracyError,
    CalibrationError,
    CapacityError,
    PreconditionError,
    ValidationError,
)
from .hermite import (
    DIVERGES,
    BasisSpec,
    basis_enumerate,
    hermite_functions,
    laguerre_sequence,
    multiplicity,
    schatten_tail_classifier,
)

PROVENANCES = ("measure-quadrature", "kernel-route", "closed-form", "derived", "representation")
UNITARITY_TOL = 1e-6
ALIASING_TOL = 1e-4
CALIBRATION_TOL = 1e-3
MAX_SVD_SIZE = 3000
SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass
class OperatorMatrix:
    """Dense matrix of an operator on span{Phi_alpha : |alpha| <= K}.

    ``entries[beta, alpha] = <A Phi_alpha, Phi_beta>`` in ``basis`` order.
    ``meta`` carries diagnostics such as the unitarity defect.
    """

    basis: BasisSpec
    entries: np.ndarray
    provenance: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        b = self.basis.size
        if self.entries.shape != (b, b):
            raise ValidationError(f"matrix shape {self.entries.shape} does not match basis size {b}")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")

    @property
    def calibration(self):
        return self.basis.calibration

    def interior_block(self, kmax=None):
        mask = self.basis.interior(kmax)
        return self.entries[np.ix_(mask, mask)]

    def hs_norm(self, interior=False):
        block = self.interior_block() if interior else self.entries
        return float(np.linalg.norm(block))

    def derived(self, entries, **meta):
        return OperatorMatrix(self.basis, entries, "derived", meta)

    def __add__(self, other):
        _same_basis(self, other)
        return self.derived(self.entries + other.entries)

    def __sub__(self, other):
        _same_basis(self, other)
        return self.derived(self.entries - other.entries)

    def __mul__(self, scalar):
        return self.derived(self.entries * scalar)

    __rmul__ = __mul__


def _same_basis(a, b):
    if a.basis.n != b.basis.n or a.basis.K != b.basis.K:
        raise ValidationError("operators live on different bases")


# ------------------------------------------------------- representation


@lru_cache(maxsize=64)
def gauss_hermite(N):
    """Nodes u and rescaled weights w e^{u^2} of N-point Gauss-Hermite.

    The rescaled weights are 1 / (N psi_{N-1}(u)^2) with psi the normalised
    Hermite function, which avoids the overflow of forming e^{u^2} directly.
    """
    u, _ = roots_hermite(N)
    psi = hermite_functions(N - 1, u / SQRT_2PI)[N - 1] / (2.0 * np.pi) ** 0.25
    return u, 1.0 / (N * psi**2)


def gh_node_count(K, ymax=0.0):
    """Quadrature size for 1-D factors: 4(K+1), raised for large modulation.

    The modulation exp(2 pi i y t) behaves like a polynomial of degree about
    2 pi y^2 against the Gaussian weight.
    """
    return int(max(4 * (K + 1), K + np.ceil(2.0 * np.pi * ymax**2) + 16))


def rep_factors(points, K, chunk=1024):
    """1-D factors F[i, j, b, a] = <rho(x_ij, y_ij) h_a, h_b> for points (N, 2n)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    N, d = points.shape
    n = d // 2
    D = K + 1
    out = np.empty((N, n, D, D), dtype=np.complex128)
    for lo in range(0, N, chunk):
        P = points[lo:lo + chunk]
        m = len(P)
        for j in range(n):
            x, y = P[:, j], P[:, n + j]
            u, ws = gauss_hermite(gh_node_count(K, float(np.abs(y).max(initial=0.0))))
            t = u[None, :] / SQRT_2PI - 0.5 * x[:, None]
            Ha = kernels.hermite_table(K, (t + x[:, None]).ravel()).reshape(D, m, -1)
            Hb = kernels.hermite_table(K, t.ravel()).reshape(D, m, -1)
            ph = np.exp(1j * np.pi * (x[:, None] * y[:, None] + 2.0 * y[:, None] * t)) * (ws / SQRT_2PI)
            out[lo:lo + m, j] = (Hb.transpose(1, 0, 2) * ph[:, None, :]) @ Ha.transpose(1, 2, 0)
    return out


def translation_reach(level, shift, tol=1e-13):
    """Smallest K' such that rho(w) Phi_alpha, |alpha| <= ``level``, has all
    coefficients beyond degree K' below ``tol`` when sqrt(pi)|w| = ``shift``.

    Total degree is invariant under unitary mode rotations, so the 1-D
    displacement by the full shift is the worst case in any n.  Coefficients
    decay super-exponentially past the bulk, so the discarded mass is of the
    order of ``tol``; ``tol`` must stay above the quadrature roundoff floor
    (about 1e-15).  Two extra degrees guard against coefficients that sit
    within roundoff of ``tol``.
    """
    shift = float(shift)
    if shift == 0.0:
        return int(level)
    big = int(np.ceil((np.sqrt(level) + shift + 10.0) ** 2)) + 10
    F = rep_factors(np.array([[shift / np.sqrt(np.pi), 0.0]]), big)[0, 0]
    amp = np.abs(F[:, : level + 1]).max(axis=1)
    above = np.nonzero(amp >= tol)[0]
    return max(int(level), int(above[-1]) + 2)


def _unitarity_defect_1d(x, y, kmax):
    """Column defect of 1-D factors on degrees <= kmax in a basis large enough
    that nothing leaks; isolates quadrature error from truncation."""
    worst = 0.0
    for xj, yj in zip(x, y):
        big = translation_reach(kmax, np.sqrt(np.pi) * np.hypot(xj, yj))
        F = rep_factors(np.array([[xj, yj]]), big)[0, 0][:, : kmax + 1]
        worst = max(worst, float(np.abs(F.conj().T @ F - np.eye(kmax + 1)).max()))
    return worst


def rep_matrix(x, y, basis, check=True):
    """Matrix of rho(x, y, 1) on ``basis``.

    With ``check`` the 1-D factors are verified to be unitary on the
    interior degrees (in an untruncated working size); a defect above 1e-6
    means the quadrature is underresolved and raises AccuracyError.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != (basis.n,) or y.shape != (basis.n,):
        raise ValidationError("point dimension does not match the basis")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("point must be finite")
    F = rep_factors(np.concatenate([x, y])[None, :], basis.K)
    entries = kernels.assemble_graded(F, np.ones(1, dtype=np.complex128), basis.indices)
    meta = {"point": np.concatenate([x, y]).tolist()}
    if check:
        defect = _unitarity_defect_1d(x, y, basis.K // 2)
        meta["unitarity_defect"] = defect
        if defect > UNITARITY_TOL:
            raise AccuracyError(f"representation quadrature underresolved: defect {defect:.2e}")
    return OperatorMatrix(basis, entries, "representation", meta)


# ------------------------------------------------------------ transforms


def weyl_of_measure(measure, basis, chunk=2048):
    """W(mu) = sum_i c_i rho(w_i) over the quadrature nodes of ``measure``."""
    nodes = measure.nodes
    if nodes.shape[1] != 2 * basis.n:
        raise ValidationError(f"measure lives in R^{nodes.shape[1]}, basis needs R^{2 * basis.n}")
    coeffs = np.asarray(measure.coefficients, dtype=np.complex128)
    entries = np.zeros((basis.size, basis.size), dtype=np.complex128)
    for lo in range(0, len(coeffs), chunk):
        F = rep_factors(nodes[lo:lo + chunk], basis.K)
        entries += kernels.assemble_graded(F, coeffs[lo:lo + chunk], basis.indices)
    return OperatorMatrix(basis, entries, "measure-quadrature", {"measure": measure.name, "nodes": len(coeffs)})


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid [-extent, extent]^{2n} with the given spacing."""

    extent: float
    spacing: float

    def axis(self):
        m = int(round(self.extent / self.spacing))
        return self.spacing * np.arange(-m, m + 1)

    def points(self, dim):
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * dim), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def refined(self):
        return Grid(self.extent, self.spacing / 2.0)


def _function_measure(f, grid, dim):
    pts = grid.points(dim)
    vals = np.asarray(f(pts)) if callable(f) else np.asarray(f).ravel()
    if vals.shape != (len(pts),):
        raise ValidationError("sample array does not match the grid")
    keep = vals != 0
    cell = grid.spacing**dim
    return msr.atomic_measure(pts[keep] if keep.any() else pts[:1], (vals[keep] if keep.any() else vals[:1]) * cell,
                              name="grid-function")


def weyl_of_function(f, basis, grid, check=True):
    """W(f) for f on R^{2n} by the midpoint rule on ``grid``.

    ``f`` is a callable on (N, 2n) points or an array of samples on the grid.
    With a callable and ``check``, the transform is recomputed on a grid of
    half the spacing; disagreement above 1e-4 (relative HS) signals aliasing.
    """
    dim = 2 * basis.n
    A = weyl_of_measure(_function_measure(f, grid, dim), basis)
    A.meta = {"grid": [grid.extent, grid.spacing]}
    if check and callable(f):
        B = weyl_of_measure(_function_measure(f, grid.refined(), dim), basis)
        scale = max(B.hs_norm(), 1e-300)
        gap = float(np.linalg.norm(A.entries - B.entries)) / scale if B.hs_norm() > 0 else 0.0
        A.meta["refinement_gap"] = gap
        if gap > ALIASING_TOL:
            raise AccuracyError(f"grid underresolves the Weyl transform: refinement gap {gap:.2e}")
    return A


def fourier_matrix(basis):
    """Diagonal of the Fourier transform, (-i)^{|alpha|}, in basis order."""
    return (-1j) ** (basis.degrees % 4)


def fourier_conjugation_check(measure, basis, interior=False):
    """||W(mu) - F^{-1} W(J_* mu) F||_HS / ||W(mu)||_HS."""
    A = weyl_of_measure(measure, basis)
    B = weyl_of_measure(measure.pushforward(msr.J_map), basis)
    f = fourier_matrix(basis)
    R = A.entries - f.conj()[:, None] * B.entries * f[None, :]
    if interior:
        mask = basis.interior()
        R, ref = R[np.ix_(mask, mask)], A.interior_block()
    else:
        ref = A.entries
    return float(np.linalg.norm(R) / np.linalg.norm(ref))


def weyl_kernel_operator(field, basis, angular=32, radial=24):
    """Matrix of the integral operator with kernel k(t, u) = eta^_{u-t} at
    the kernel phase, for n = 2.

    Entries are int int k(t, t + x) Phi_alpha(t + x) Phi_beta(t) dt dx with a
    polar Gauss-Legendre rule in x over Pi_1(S) and tensor Gauss-Hermite in
    t centred at -x/2.  The kernel is evaluated numerically from the slice
    measures, independently of the surface mesh used by ``weyl_of_measure``.
    """
    if basis.n != 2 or field.n != 2:
        raise ValidationError("the kernel route is implemented for n = 2")
    K = basis.K
    surface = field.surface
    xs, xw = msr.projected_quadrature(surface, angular, radial)
    ymax = float(np.abs(surf.mesh_surface(surface, 32).nodes[:, 2:]).max()) * 1.05
    u, ws = gauss_hermite(gh_node_count(K, ymax))
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    Ut = np.stack([U1.ravel(), U2.ravel()], axis=1) / SQRT_2PI
    wt = np.outer(ws, ws).ravel() / (2.0 * np.pi)
    idx = basis.indices
    top = 0.5 * (2.0 * np.abs(Ut).max() * np.sqrt(2.0) + field.support_radius) + 1.0
    entries = np.zeros((basis.size, basis.size), dtype=np.complex128)
    for start, batch, coeff in msr._batched_slices(surface, xs, field.density, top, chunk=128):
        for i in range(len(batch.xs)):
            lo, hi = batch.offsets[i], batch.offsets[i + 1]
            if hi == lo:
                continue
            x = batch.xs[i]
            ys, c = batch.nodes[lo:hi, 2:], coeff[lo:hi]
            t = Ut - 0.5 * x
            # k(t, t + x) = sum_y c_y exp(pi i (2t + x) . y)
            kv = np.exp(1j * np.pi * ((2.0 * t + x) @ ys.T)) @ c
            Pa = _basis_values(idx, t + x, K)
            Pb = _basis_values(idx, t, K)
            entries += xw[start + i] * ((Pb * (kv * wt)) @ Pa.T)
    return OperatorMatrix(basis, entries, "kernel-route", {"angular": angular, "radial": radial})


def _basis_values(indices, pts, K):
    """Phi_alpha(pts) as a (B, N) array."""
    out = np.ones((indices.shape[0], len(pts)))
    for j in range(indices.shape[1]):
        H = kernels.hermite_table(K, pts[:, j])
        out *= H[indices[:, j]]
    return out


# ------------------------------------------------------- sphere spectrum


@dataclass
class SpectrumReport:
    """Singular values with multiplicities, stratum means and envelope fit.

    ``singular_values`` are distinct values in descending order with their
    ``multiplicities``; dense reports have unit multiplicities.
    """

    singular_values: np.ndarray
    multiplicities: np.ndarray
    stratum_means: np.ndarray
    envelope_fit: msr.DecayFit | None
    critical_p: float | None
    eigenvalues: np.ndarray | None = None
    n: int | None = None
    meta: dict = field(default_factory=dict)


def envelope_fit(k, values, window=None):
    """Power-law fit through the local maxima of |values| against k."""
    k = np.asarray(k, dtype=np.float64)
    v = np.abs(np.asarray(values, dtype=np.float64))
    peaks = msr.local_maxima(v)
    peaks = peaks[v[peaks] > 0]
    if window is not None:
        peaks = peaks[(k[peaks] >= window[0]) & (k[peaks] <= window[1])]
    if len(peaks) < 8:
        return None
    return msr.decay_fit(k[peaks], v[peaks])


def sphere_eigenvalues(n, r, K, c=np.pi):
    """lambda_k = L_k^{(n-1)}(c r^2) e^{-c r^2 / 2} / binomial(k + n - 1, n - 1)."""
    x = c * r * r
    lag = laguerre_sequence(int(K), n - 1, x, -0.5 * x)
    return lag / multiplicity(np.arange(int(K) + 1), n)


def sphere_weyl_closed_form(n, r, K, window=None):
    """Closed-form spectrum of W(mu_r) for k <= K with envelope analysis.

    The envelope is fitted over peaks with k >= max(100, 10 pi r^2) by
    default, where the Laguerre asymptotics have set in.
    """
    if n < 1 or r <= 0:
        raise ValidationError("need n >= 1 and r > 0")
    lam = sphere_eigenvalues(n, r, K)
    k = np.arange(int(K) + 1)
    mult = multiplicity(k, n)
    if window is None:
        window = (max(100.0, 10.0 * np.pi * r * r), float(K))
    fit = envelope_fit(k, lam, window)
    crit = schatten_tail_classifier(n - 1, fit.exponent, 1.0).critical_p if fit and fit.exponent < 0 else None
    sv = np.abs(lam)
    order = np.argsort(-sv, kind="stable")
    return SpectrumReport(sv[order], mult[order], sv.copy(), fit, crit, lam, n,
                          {"r": r, "K": int(K), "window": list(window)})


def spectrum_report(A, window=None):
    """Singular values of a dense operator plus per-stratum means.

    A stratum mean is the mean singular value of the diagonal block on
    |alpha| = k, which for block-diagonal operators is the grouping of the
    spectrum by oscillator eigenspace.
    """
    sv = singular_values(A)
    basis = A.basis
    means = np.array([np.linalg.svd(A.entries[basis.stratum(k), basis.stratum(k)], compute_uv=False).mean()
                      for k in range(basis.K + 1)])
    fit = envelope_fit(np.arange(basis.K + 1), means, window)
    crit = -float(basis.n) / fit.exponent if fit and fit.exponent < 0 else None
    return SpectrumReport(sv, np.ones_like(sv), means, fit, crit, None, basis.n)


class Calibration(NamedTuple):
    c: float
    residual: float


def calibrate_normalization(n, r, basis, resolution=None):
    """Fit c so quadrature eigenvalues of W(mu_r) match the Laguerre closed form.

    Stratum means of the diagonal of W(mu_r) for k <= K/2 are matched in
    least squares; a max residual above 1e-3 raises CalibrationError.
    """
    if basis.K < 6:
        raise PreconditionError("calibration needs K >= 6")
    if basis.n != n:
        raise ValidationError("basis dimension does not match n")
    res = resolution or (2 * basis.K + 4 if n > 1 else 4 * basis.K + 8)
    W = weyl_of_measure(msr.sphere_measure(n, r, res), basis)
    kmax = basis.K // 2
    diag = np.real(np.diag(W.entries))
    target = np.array([diag[basis.stratum(k)].mean() for k in range(kmax + 1)])

    def loss(c):
        return float(np.sum((sphere_eigenvalues(n, r, kmax, c) - target) ** 2))

    grid = np.linspace(0.25, 12.0, 471)
    c0 = grid[int(np.argmin([loss(c) for c in grid]))]
    best = minimize_scalar(loss, bracket=(c0 - 0.025, c0, c0 + 0.025), tol=1e-14)
    c = float(best.x)
    residual = float(np.abs(sphere_eigenvalues(n, r, kmax, c) - target).max())
    if residual > CALIBRATION_TOL:
        raise CalibrationError(f"closed form does not fit quadrature eigenvalues: residual {residual:.2e}")
    return Calibration(c, residual)


# ------------------------------------------------- spectra and norms


def singular_values(A):
    """Descending singular values by dense SVD."""
    M = A.entries if isinstance(A, OperatorMatrix) else np.asarray(A)
    if M.ndim != 2 or not np.all(np.isfinite(M)):
        raise ValidationError("singular values need a finite 2-D matrix")
    if max(M.shape) > MAX_SVD_SIZE:
        raise CapacityError(f"dense SVD is limited to {MAX_SVD_SIZE} rows")
    return np.linalg.svd(M, compute_uv=False)


class SchattenNorm(NamedTuple):
    value: float
    tail_flag: bool
    tail_estimate: float


def schatten_norm(values, p, multiplicities=None):
    """(sum_i m_i s_i^p)^{1/p} with a truncation-tail flag.

    For a SpectrumReport with an envelope fit A k^e, the tail beyond the
    retained strata is estimated as int_K^inf k^{n-1}/(n-1)! (A k^e)^p dk; the
    flag is raised when that exceeds 1% of the retained sum (or diverges).
    """
    if p <= 0:
        raise ValidationError("p must be positive")
    tail = 0.0
    if isinstance(values, SpectrumReport):
        report = values
        s, m = report.singular_values, report.multiplicities
    else:
        report = None
        s = np.abs(np.asarray(values, dtype=np.float64))
        m = np.ones_like(s) if multiplicities is None else np.asarray(multiplicities, dtype=np.float64)
    terms = m * s**p
    total = float(np.sum(np.sort(terms)))
    if report is not None and report.envelope_fit is not None and report.eigenvalues is not None:
        d = report.n - 1
        e = report.envelope_fit.exponent
        K = len(report.eigenvalues) - 1
        gap = d + e * p + 1.0
        if gap >= 0:
            tail = np.inf
        else:
            tail = np.exp(p * report.envelope_fit.intercept) * K**gap / (-gap) / factorial(d)
    flag = bool(tail > 0.01 * total)
    return SchattenNorm(total ** (1.0 / p), flag, float(tail))


class PartialSumTrend(NamedTuple):
    cutoffs: np.ndarray
    partial_sums: np.ndarray
    divergent: bool
    tail_flag: bool


def schatten_partial_sums(n, r, p, cutoffs=(10**3, 10**4, 10**5, 10**6)):
    """Partial sums of sum_k m_k |lambda_k|^p at each cutoff for mu_r.

    ``divergent`` classifies the series with the fitted envelope exponent;
    ``tail_flag`` says the predicted tail beyond the largest cutoff exceeds
    1% of the partial sum.
    """
    cutoffs = np.asarray(cutoffs, dtype=np.int64)
    report = sphere_weyl_closed_form(n, r, int(cutoffs.max()))
    terms = multiplicity(np.arange(len(report.eigenvalues)), n) * np.abs(report.eigenvalues) ** p
    cums = np.cumsum(terms)
    verdict = schatten_tail_classifier(n - 1, report.envelope_fit.exponent, p).verdict
    return PartialSumTrend(cutoffs, cums[cutoffs], verdict == DIVERGES, schatten_norm(report, p).tail_flag)


# ------------------------------------------------------ oscillator


def oscillator_diagonal(basis):
    return (2.0 * basis.degrees + basis.n).astype(np.float64)


def compose_with_oscillator(A, basis=None):
    """H A with H = -Delta + |t|^2 acting diagonally as 2|alpha| + n."""
    basis = A.basis if basis is None else basis
    if basis.calibration is None:
        raise PreconditionError("basis has not been calibrated")
    return OperatorMatrix(basis, oscillator_diagonal(basis)[:, None] * A.entries, "derived",
                          {"composed": "oscillator"})


def oscillator_composite_trend(n, r, K, window=None):
    """Envelope fit of (2k + n) |lambda_k| for the closed-form sphere spectrum."""
    lam = sphere_eigenvalues(n, r, K)
    k = np.arange(int(K) + 1)
    if window is None:
        window = (max(100.0, 10.0 * np.pi * r * r), float(K))
    return envelope_fit(k, (2.0 * k + n) * np.abs(lam), window)


def calibrated_basis(n, K, r=1.0):
    basis = basis_enumerate(n, K)
    return basis.with_calibration(calibrate_normalization(n, r, basis).c)
