"""Quantum translation of operators, translate difference equations and
linear independence of translates.

The translate of A by (x1, y1) is rho(x1, y1) A rho(x1, y1)^{-1}.  For a
measure lambda it satisfies

    (x1, y1) . W(lambda) = W(e((x1, y1), .) lambda),
    e((x', y'), (x, y)) = exp(2 pi i (x' . y - y' . x)).

A truncated translate is only faithful on degrees the shift cannot push
past the truncation.  Identity checks therefore run in a working basis
enlarged by ``weyl.translation_reach`` and are scored on the interior
strata |alpha| <= K/2 of the requested basis.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from . import measure as msr
from . import surface as surf
from . import weyl
from .errors import AccuracyError, CapacityError, PreconditionError, ValidationError
from .hermite import basis_enumerate

TRANSLATE_DEFECT_TOL = 1e-4
DEFAULT_SHIFT_CAP = 2.0
MAX_WORKING_SIZE = 3000
MAX_TRANSLATES = 32


def modulation_e(xp, yp, x, y):
    """e((x', y'), (x, y)) = exp(2 pi i (x' . y - y' . x)), broadcasting."""
    xp, yp, x, y = (np.asarray(a, dtype=np.float64) for a in (xp, yp, x, y))
    if not (xp.shape[-1:] == yp.shape[-1:] == x.shape[-1:] == y.shape[-1:]):
        raise ValidationError("modulation arguments have mismatched dimensions")
    val = np.exp(2j * np.pi * (np.sum(xp * y, axis=-1) - np.sum(yp * x, axis=-1)))
    return complex(val) if np.ndim(val) == 0 else val


def _modulation_at(point, nodes):
    n = nodes.shape[1] // 2
    return modulation_e(point[:n], point[n:], nodes[:, :n], nodes[:, n:])


@lru_cache(maxsize=8)
def calibration_constant(n):
    """Laguerre scaling constant verified once per dimension."""
    return weyl.calibrate_normalization(n, 1.0, basis_enumerate(n, 8)).c


def calibrated(basis):
    return basis if basis.calibration is not None else basis.with_calibration(calibration_constant(basis.n))


def working_basis(basis, level, shift):
    """Calibrated basis large enough for translates by ``shift`` (sqrt(pi)|w|)
    of vectors of degree <= ``level``."""
    K = max(basis.K, weyl.translation_reach(level, shift))
    if math.comb(K + basis.n, basis.n) > MAX_WORKING_SIZE:
        raise CapacityError(f"working basis K={K} at n={basis.n} exceeds {MAX_WORKING_SIZE} elements")
    return calibrated(basis_enumerate(basis.n, K))


def _shift(point):
    return float(np.sqrt(np.pi) * np.linalg.norm(point))


def _conjugate(R, A, mask=None):
    """R A R^H, optionally only on the rows and columns in ``mask``."""
    Rm = R if mask is None else R[mask]
    return Rm @ A @ Rm.conj().T


def quantum_translate(A, x1, y1, interior=None):
    """(x1, y1) . A = rho A rho^H in A's basis.

    The interior-strata unitarity defect max|(R^H R - I)| over degrees
    <= ``interior`` (default K/2) is stored in ``meta``; above 1e-4 the
    truncation cannot represent the translate and AccuracyError is raised.
    """
    basis = A.basis
    if basis.calibration is None:
        raise PreconditionError("quantum translation needs a calibrated basis")
    x1 = np.atleast_1d(np.asarray(x1, dtype=np.float64))
    y1 = np.atleast_1d(np.asarray(y1, dtype=np.float64))
    if not np.any(x1) and not np.any(y1):
        return weyl.OperatorMatrix(basis, A.entries.copy(), "derived", {"unitarity_defect": 0.0})
    R = weyl.rep_matrix(x1, y1, basis).entries
    mask = basis.interior(interior)
    cols = R[:, mask]
    defect = float(np.abs(cols.conj().T @ cols - np.eye(int(mask.sum()))).max())
    if defect > TRANSLATE_DEFECT_TOL:
        raise AccuracyError(f"translate leaves the truncated basis: interior defect {defect:.2e}")
    return weyl.OperatorMatrix(basis, _conjugate(R, A.entries), "derived", {"unitarity_defect": defect})


def covariance_check(lam, x1, y1, basis, cap=DEFAULT_SHIFT_CAP):
    """||(x1, y1) . W(lambda) - W(e lambda)||_HS / ||W(lambda)||_HS on interior strata.

    Both sides are computed in a working basis wide enough that the
    conjugation is exact on degrees <= K/2.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=np.float64))
    y1 = np.atleast_1d(np.asarray(y1, dtype=np.float64))
    point = np.concatenate([x1, y1])
    if point.size != 2 * basis.n or lam.dim != 2 * basis.n:
        raise ValidationError("dimensions of measure, shift and basis disagree")
    if np.linalg.norm(point) > cap:
        raise ValidationError(f"translate norm {np.linalg.norm(point):.3g} exceeds the cap {cap}")
    level = basis.K // 2
    work = working_basis(basis, level, _shift(point))
    mask = work.degrees <= level
    W = weyl.weyl_of_measure(lam, work).entries
    We = weyl.weyl_of_measure(lam.modulated(lambda w: _modulation_at(point, w)), work).entries
    if np.any(point):
        T = _conjugate(weyl.rep_matrix(x1, y1, work).entries, W, mask)
    else:
        T = W[np.ix_(mask, mask)]
    ref = np.linalg.norm(W[np.ix_(mask, mask)])
    if ref == 0:
        raise ValidationError("W(lambda) vanishes on the interior strata")
    return float(np.linalg.norm(T - We[np.ix_(mask, mask)]) / ref)


# ---------------------------------------------------------- stencils


@dataclass
class TranslateStencil:
    """Difference operator D A = sum_i c_i (x_i, y_i) . A.

    ``points`` has shape (k, 2n) in (x, y) layout; points must be distinct.
    """

    points: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128).ravel()
        if len(self.points) != len(self.coeffs):
            raise ValidationError("stencil needs one coefficient per point")
        if self.points.shape[1] % 2:
            raise ValidationError("stencil points live in R^{2n}")
        if len(self.points) > 1:
            diff = self.points[:, None, :] - self.points[None, :, :]
            dist = np.linalg.norm(diff, axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= 1e-12:
                raise ValidationError("stencil points must be distinct")

    @property
    def n(self):
        return self.points.shape[1] // 2

    def max_shift(self):
        return float(np.linalg.norm(self.points, axis=1).max())


class CharPoly(NamedTuple):
    stencil: TranslateStencil
    fn: Callable

    def __call__(self, x, y):
        return self.fn(x, y)


def char_poly(stencil):
    """The trigonometric polynomial (x, y) -> sum_i c_i e((x_i, y_i), (x, y))."""
    n = stencil.n
    P, c = stencil.points, stencil.coeffs

    def fn(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        e = modulation_e(P[:, None, :n], P[:, None, n:], np.reshape(x, (1, -1, n)), np.reshape(y, (1, -1, n)))
        val = np.tensordot(c, e, axes=(0, 0)).reshape(np.shape(x)[:-1])
        return complex(val) if val.ndim == 0 else val

    return CharPoly(stencil, fn)


def eq_de_stencil(n):
    """One-sided stencil 2(2n - 1) at the origin and -1 at the 4n unit translates.

    Its characteristic polynomial is 2(2n - 1) - 2 sum_j (cos 2 pi x_j + cos 2 pi y_j),
    the level function of ``surface.trig_level_surface(n)``.
    """
    pts = [np.zeros(2 * n)]
    coeffs = [2.0 * (2 * n - 1)]
    for j in range(2 * n):
        for sign in (1.0, -1.0):
            p = np.zeros(2 * n)
            p[j] = sign
            pts.append(p)
            coeffs.append(-1.0)
    return TranslateStencil(np.array(pts), np.array(coeffs))


def difference_apply(A, stencil, interior=None):
    """D A = sum_i c_i (x_i, y_i) . A in A's basis."""
    if stencil.n != A.basis.n:
        raise ValidationError("stencil and operator dimensions differ")
    out = np.zeros_like(A.entries)
    for p, c in zip(stencil.points, stencil.coeffs):
        out += c * quantum_translate(A, p[: stencil.n], p[stencil.n:], interior).entries
    return weyl.OperatorMatrix(A.basis, out, "derived", {"stencil_size": len(stencil.coeffs)})


def stencil_residual(lam, stencil, basis):
    """||D W(lambda)||_HS / ||W(lambda)||_HS on interior strata, translates
    taken in a working basis wide enough to be exact there."""
    level = basis.K // 2
    work = working_basis(basis, level, np.sqrt(np.pi) * stencil.max_shift())
    mask = work.degrees <= level
    W = weyl.weyl_of_measure(lam, work).entries
    n = stencil.n
    D = np.zeros((int(mask.sum()),) * 2, dtype=np.complex128)
    for p, c in zip(stencil.points, stencil.coeffs):
        if np.any(p):
            D += c * _conjugate(weyl.rep_matrix(p[:n], p[n:], work).entries, W, mask)
        else:
            D += c * W[np.ix_(mask, mask)]
    return float(np.linalg.norm(D) / np.linalg.norm(W[np.ix_(mask, mask)]))


def trig_surface_measure(n, resolution, perturb=0.0):
    """Surface measure on the trigonometric level set, optionally with nodes
    pushed a distance ``perturb`` along the outward normal."""
    rule = surf.mesh_surface(surf.trig_level_surface(n), resolution)
    nodes = rule.nodes - perturb * rule.normals if perturb else rule.nodes
    moved = surf.QuadratureRule(nodes, rule.weights, rule.normals)
    return msr.SmoothMeasure(moved, name=f"sigma(n={n}, res={resolution}, perturb={perturb:g})")


def difference_equation_residual(n, resolution, basis, perturb=0.0):
    """Residual of the one-sided translate equation for A = W(sigma).

    sigma is the surface measure on {p = 0} from ``trig_level_surface(n)``;
    since p vanishes on its support, D A = W(p sigma) = 0 up to quadrature.
    """
    if n not in (1, 2) or basis.n != n:
        raise ValidationError("difference equation residual needs n in {1, 2} matching the basis")
    return stencil_residual(trig_surface_measure(n, resolution, perturb), eq_de_stencil(n), basis)


# ----------------------------------------------------------- Gram test


class GramReport(NamedTuple):
    min_eigenvalue: float
    condition_number: float
    gram: np.ndarray


def _hs_inner(a, b):
    """<a, b>_HS = sum conj(a) b with compensated summation."""
    prod = (a.conj() * b).ravel()
    return complex(math.fsum(prod.real), math.fsum(prod.imag))


def gram_independence(A, translates):
    """Gram matrix of translates (x_i, y_i) . A and its conditioning.

    A is treated as the finite-rank operator it represents; translates are
    computed exactly in a working basis that contains all of them.
    """
    pts = np.atleast_2d(np.asarray(translates, dtype=np.float64))
    basis = A.basis
    if pts.shape[1] != 2 * basis.n:
        raise ValidationError("translate dimension does not match the basis")
    if len(pts) > MAX_TRANSLATES:
        raise CapacityError(f"at most {MAX_TRANSLATES} translates")
    TranslateStencil(pts, np.ones(len(pts)))  # distinctness check
    if not np.any(A.entries):
        raise ValidationError("A must be nonzero")
    shift = max(_shift(p) for p in pts)
    work = working_basis(basis, basis.K, shift)
    pos = np.array([work.position(a) for a in basis.indices])
    n = basis.n
    Ts = []
    for p in pts:
        if np.any(p):
            R = weyl.rep_matrix(p[:n], p[n:], work).entries[:, pos]
            Ts.append(R @ A.entries @ R.conj().T)
        else:
            T = np.zeros((work.size, work.size), dtype=np.complex128)
            T[np.ix_(pos, pos)] = A.entries
            Ts.append(T)
    k = len(Ts)
    G = np.zeros((k, k), dtype=np.complex128)
    for i in range(k):
        for j in range(i, k):
            G[i, j] = _hs_inner(Ts[i], Ts[j])
            G[j, i] = np.conj(G[i, j])
    ev = np.linalg.eigvalsh(G)
    lo, hi = float(ev[0]), float(ev[-1])
    cond = hi / lo if lo > 0 else np.inf
    return GramReport(lo, cond, G)
