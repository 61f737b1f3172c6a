"""Measures carried by quadrature rules, their Fourier transforms, the slice
pushforwards eta_x and the integral kernel k(t, u) of W(mu).

Fourier convention throughout: mu^(xi) = int exp(-2 pi i xi . w) dmu(w).
The kernel phase exp(pi i (x + 2t) . y) at x = u - t is this transform at
xi = -(u + t) / 2; ``kernel_phase_to_xi`` is the single adapter.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import surface as surf
from .errors import ValidationError
from .surface import QuadratureRule

MAX_SLICE_RESOLUTION = 8192


@dataclass
class SmoothMeasure:
    """mu = psi * sigma realised on a quadrature rule.

    ``density`` is psi (None means psi = 1).  ``coefficients`` may override
    weight * psi with arbitrary complex masses, which is how modulated
    measures e(w, .) lambda and atomic measures are represented.
    """

    rule: QuadratureRule
    density: Callable | None = None
    coefficients: np.ndarray | None = None
    name: str = "measure"
    _mass: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.coefficients is None:
            psi = np.ones(len(self.rule)) if self.density is None else np.asarray(self.density(self.rule.nodes))
            self.coefficients = self.rule.weights * psi
        self.coefficients = np.asarray(self.coefficients)
        if not np.all(np.isfinite(self.coefficients)):
            raise ValidationError("measure has non-finite effective weights")

    @property
    def nodes(self):
        return self.rule.nodes

    @property
    def dim(self):
        return self.rule.dim

    @property
    def total_mass(self):
        if self._mass is None:
            self._mass = complex(np.sum(self.coefficients)) if np.iscomplexobj(self.coefficients) \
                else float(np.sum(self.coefficients))
        return self._mass

    def __len__(self):
        return len(self.rule)

    def with_coefficients(self, coefficients, name=None):
        return SmoothMeasure(self.rule, coefficients=np.asarray(coefficients), name=name or self.name)

    def modulated(self, fn, name=None):
        """The measure fn(w) d mu(w)."""
        return self.with_coefficients(self.coefficients * fn(self.nodes), name)

    def pushforward(self, mapping, name=None):
        """Image measure under a pointwise map of R^d (e.g. J(x, y) = (-y, x))."""
        rule = QuadratureRule(mapping(self.nodes), self.rule.weights, mapping(self.rule.normals))
        return SmoothMeasure(rule, coefficients=self.coefficients.copy(), name=name or self.name)


def atomic_measure(points, masses, name="atomic"):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    masses = np.asarray(masses)
    rule = QuadratureRule(points, np.ones(len(points)), np.zeros_like(points))
    return SmoothMeasure(rule, coefficients=masses.astype(np.result_type(masses, np.float64)), name=name)


def point_mass(point, mass=1.0):
    return atomic_measure([point], [mass], name="point-mass")


def normalized_surface_measure(rule, name="normalized"):
    return SmoothMeasure(rule, coefficients=rule.weights / rule.weights.sum(), name=name)


def sphere_measure(n, r, resolution):
    """Normalised surface measure mu_r on {|z| = r} in C^n = R^{2n}."""
    rule = surf.mesh_surface(surf.sphere(2 * n, r), resolution)
    return normalized_surface_measure(rule, name=f"mu_r(n={n}, r={r:g})")


def J_map(points):
    """J(x, y) = (-y, x) on R^{2n}."""
    points = np.asarray(points)
    n = points.shape[-1] // 2
    return np.concatenate([-points[..., n:], points[..., :n]], axis=-1)


# ---------------------------------------------------------------- Fourier


def trust_radius(measure):
    """Frequency up to which the quadrature resolves exp(-2 pi i xi . w).

    The Nyquist frequency of the largest nearest-neighbour spacing.
    """
    nodes = measure.nodes
    if len(nodes) < 2:
        return np.inf
    dist, _ = cKDTree(nodes).query(nodes, k=2)
    return 1.0 / (2.0 * dist[:, 1].max())


def fourier_transform(measure, xi, return_trust=False):
    """mu^(xi) = sum_i c_i exp(-2 pi i xi . w_i); ``xi`` has shape (..., d)."""
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape[-1] != measure.dim:
        raise ValidationError("frequency dimension does not match the measure")
    phase = np.tensordot(xi, measure.nodes, axes=([-1], [1]))
    value = np.exp(-2j * np.pi * phase) @ measure.coefficients
    value = complex(value) if value.ndim == 0 else value
    if return_trust:
        trusted = np.linalg.norm(xi, axis=-1) <= trust_radius(measure)
        return value, trusted
    return value


def kernel_phase_to_xi(t, u):
    """Frequency at which exp(pi i (u + t) . y) equals exp(-2 pi i xi . y)."""
    return -0.5 * (np.asarray(t) + np.asarray(u))


# ---------------------------------------------------------------- decay fits


@dataclass
class DecayFit:
    """Least-squares power law value ~ exp(intercept) * radius^exponent."""

    radii: np.ndarray
    values: np.ndarray
    exponent: float
    intercept: float
    rms: float
    fit_window: tuple

    def as_dict(self):
        return {"exponent": self.exponent, "intercept": self.intercept, "rms": self.rms,
                "window": list(self.fit_window)}


def decay_fit(radii, values, window=None):
    radii = np.asarray(radii, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if window is None:
        window = (radii.min(), radii.max())
    sel = (radii >= window[0]) & (radii <= window[1])
    if sel.sum() < 8:
        raise ValidationError("decay fit needs at least 8 samples in the window")
    if np.any(values[sel] <= 0):
        raise ValidationError("decay fit needs positive values; take suprema of |.| first")
    lr, lv = np.log(radii[sel]), np.log(values[sel])
    slope, intercept = np.polyfit(lr, lv, 1)
    rms = float(np.sqrt(np.mean((lv - (slope * lr + intercept)) ** 2)))
    return DecayFit(radii[sel], values[sel], float(slope), float(intercept), rms, tuple(float(w) for w in window))


def local_maxima(values):
    """Indices of interior local maxima of a sequence."""
    v = np.asarray(values)
    return np.nonzero((v[1:-1] >= v[:-2]) & (v[1:-1] > v[2:]))[0] + 1


def random_directions(dim, count, seed=0):
    g = np.random.default_rng(seed).normal(size=(count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def shell_sup(fn, dim, radii, n_directions=64, seed=0):
    """sup over fixed random directions of |fn(r * direction)| per radius."""
    dirs = random_directions(dim, n_directions, seed)
    return np.array([np.abs(fn(r * dirs)).max() for r in radii])


# ---------------------------------------------------------------- slices and kernel


def _smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=np.float64)

    def f(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    return f(s) / (f(s) + f(1.0 - s))


def projection_cutoff(inner=0.5, outer=0.8):
    """Smooth cutoff psi(x, y) in the x-variables: 1 for |x| <= inner, 0 for |x| >= outer.

    Keeps the density away from the rim of Pi_1(S) of the unit sphere, where
    slices shrink to points and 1 / J_{Pi_1} blows up.
    """
    if not 0 <= inner < outer:
        raise ValidationError("cutoff radii must satisfy 0 <= inner < outer")

    def psi(w):
        w = np.asarray(w, dtype=np.float64)
        n = w.shape[-1] // 2
        r = np.sqrt(np.sum(w[..., :n] ** 2, axis=-1))
        return _smooth_step((outer - r) / (outer - inner))

    return psi


def pushforward_slice_measure(surface, x, psi=None, resolution=64):
    """eta_x = (Pi_2)_* (psi_1(x, .) sigma_x) with psi_1 = psi / J_{Pi_1}."""
    n = surface.dim // 2
    rule = surf.slice_surface(surface, x, resolution)
    if len(rule) == 0:
        return SmoothMeasure(QuadratureRule.empty(n), coefficients=np.zeros(0), name="eta_x")
    psi_vals = np.ones(len(rule)) if psi is None else np.asarray(psi(rule.nodes))
    coeffs = rule.weights * psi_vals / rule.annotations["jacobian"]
    normals = rule.normals[:, n:]
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    proj = QuadratureRule(rule.nodes[:, n:], rule.weights, normals, {"jacobian": rule.annotations["jacobian"]})
    return SmoothMeasure(proj, coefficients=coeffs, name="eta_x")


def projected_quadrature(surface, resolution, radial=None):
    """Quadrature over Pi_1(S) in polar form about Pi_1(center).

    The radius is parametrised as rho_max (1 - v^2) with Gauss-Legendre v, so
    the square-root behaviour of slices near the boundary of Pi_1(S) becomes
    smooth.  Returns (points, weights).
    """
    n = surface.dim // 2
    c = surface.center[:n]
    radial = max(4, resolution // 2) if radial is None else radial
    if n == 1:
        dirs, dw = np.array([[1.0], [-1.0]]), np.ones(2)
    else:
        dirs, dw = surf.sphere_directions(n, resolution)
    v, wv = np.polynomial.legendre.leggauss(radial)
    v, wv = 0.5 * (v + 1.0), 0.5 * wv
    pts, wts = [], []
    for d, w in zip(dirs, dw):
        rmax = surf.projected_region_radius(surface, d)
        rad = rmax * (1.0 - v**2)
        jac = rad ** (n - 1) * 2.0 * rmax * v
        pts.append(c + rad[:, None] * d)
        wts.append(w * wv * jac)
    return np.concatenate(pts), np.concatenate(wts)


@dataclass
class KernelField:
    """k(t, u) = eta^_{u-t} evaluated with phase exp(pi i (u + t) . y).

    ``support_radius`` bounds |x| over Pi_1(S); the kernel vanishes for
    |t - u| beyond it.
    """

    surface: surf.ImplicitSurface
    density: Callable | None = None
    support_radius: float | None = None
    resolution: int = 64
    _bank: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.surface.dim % 2:
            raise ValidationError("kernel fields live on R^{2n}")
        if self.support_radius is None:
            n = self.surface.dim // 2
            nodes = surf.mesh_surface(self.surface, 32).nodes
            self.support_radius = float(np.linalg.norm(nodes[:, :n], axis=1).max()) * 1.01

    @property
    def n(self):
        return self.surface.dim // 2

    def eta(self, x, frequency=0.0):
        """eta_x at a slice resolution whose trust radius covers ``frequency``."""
        res = self.resolution
        while True:
            key = (tuple(np.round(np.asarray(x, dtype=np.float64), 15)), res)
            if key not in self._bank:
                self._bank[key] = pushforward_slice_measure(self.surface, x, self.density, res)
            eta = self._bank[key]
            trust = trust_radius(eta) if len(eta) >= 2 else np.inf
            if trust >= frequency or res >= MAX_SLICE_RESOLUTION:
                return eta
            # trust radius grows linearly with resolution
            res = min(MAX_SLICE_RESOLUTION, int(2 ** np.ceil(np.log2(res * frequency / trust))))


def kernel_eval(field, t, u, resolution=None):
    """k(t, u); zero outside the support slab and on empty slices."""
    t = np.asarray(t, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    x = u - t
    if np.linalg.norm(x) > field.support_radius:
        return 0j
    if resolution is not None and resolution != field.resolution:
        field = KernelField(field.surface, field.density, field.support_radius, resolution)
    xi = kernel_phase_to_xi(t, u)
    eta = field.eta(x, np.linalg.norm(xi))
    if len(eta) == 0:
        return 0j
    return fourier_transform(eta, xi)


def kernel_laplacian(field, t, u, h=1e-3):
    """Central second-difference Laplacian of k in the t variable."""
    if not 1e-4 <= h <= 1e-2:
        raise ValidationError("step must lie in [1e-4, 1e-2]")
    t = np.asarray(t, dtype=np.float64)
    centre = kernel_eval(field, t, u)
    total = 0j
    for i in range(t.size):
        e = np.zeros_like(t)
        e[i] = h
        total += kernel_eval(field, t + e, u) + kernel_eval(field, t - e, u) - 2.0 * centre
    return total / (h * h)


class ShellSamples(NamedTuple):
    x: np.ndarray
    v_dirs: np.ndarray


def kernel_shell_samples(field, count=64, seed=0):
    """Fixed random (x, direction of t + u) pairs with x uniform in Pi_1(S)."""
    rng = np.random.default_rng(seed)
    n = field.n
    xs = []
    while len(xs) < count:
        cand = rng.uniform(-field.support_radius, field.support_radius, size=n)
        if np.linalg.norm(cand) <= field.support_radius and len(field.eta(cand)) > 0:
            xs.append(cand)
    return ShellSamples(np.array(xs), random_directions(n, count, seed + 1))


def kernel_shell_sup(field, radii, count=64, seed=0, laplacian=False, h=1e-3):
    """Shellwise sup over fixed samples of |k(t, u)| (or |Delta_t k|) at |t + u| = r."""
    samples = kernel_shell_samples(field, count, seed)
    out = []
    for r in radii:
        best = 0.0
        for x, vd in zip(samples.x, samples.v_dirs):
            v = r * vd
            t, u = 0.5 * (v - x), 0.5 * (v + x)
            val = kernel_laplacian(field, t, u, h) if laplacian else kernel_eval(field, t, u)
            best = max(best, abs(val))
        out.append(best)
    return np.array(out)


def slice_resolutions(surface, xs, frequency, floor=32):
    """Per-x slice resolution whose Nyquist frequency covers ``frequency``.

    A coarse pass measures each slice's extent in y; node spacing scales like
    2 pi extent / resolution for n = 2.  Results are powers of two.
    """
    n = surface.dim // 2
    xs = np.atleast_2d(xs)
    if n == 1:
        return np.full(len(xs), 2, dtype=np.int64)
    coarse = surf.slice_batch(surface, xs, floor)
    ext = np.zeros(len(xs))
    if len(coarse.weights):
        ys = coarse.nodes[:, n:]
        own = coarse.owner
        mid = np.zeros((len(xs), n))
        np.add.at(mid, own, ys)
        cnt = np.maximum(np.diff(coarse.offsets), 1)
        mid /= cnt[:, None]
        np.maximum.at(ext, own, np.linalg.norm(ys - mid[own], axis=1))
    need = np.maximum(floor, 1.25 * 4.0 * np.pi * ext * frequency)
    res = 2 ** np.ceil(np.log2(need))
    return np.minimum(res, MAX_SLICE_RESOLUTION).astype(np.int64)


def _batched_slices(surface, xs, psi, frequency, chunk=512):
    """Yield (index range, SliceBatch, eta coefficients) over chunks of xs."""
    for start in range(0, len(xs), chunk):
        part = xs[start:start + chunk]
        batch = surf.slice_batch(surface, part, slice_resolutions(surface, part, frequency))
        psi_vals = np.ones(len(batch.weights)) if psi is None else np.asarray(psi(batch.nodes))
        yield start, batch, batch.weights * psi_vals / batch.jacobian


def kernel_mass_profile(field, direction, radii, resolution=32, radial=None):
    """Row masses int |k(t, u)| du at t = r dir and column masses
    int |k(t, u)| dt at u = r dir, by quadrature over the support slab.

    With x = u - t the slab is Pi_1(S); each x contributes |eta^_x| at the
    kernel phase 2t + x (rows) or 2u - x (columns).  ``resolution`` sets the
    angular x-grid; the radial grid defaults to 4 points per unit of the
    largest radius so that the Bessel-type oscillation in x is resolved.
    """
    surface = field.surface
    n = field.n
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    radii = np.asarray(radii, dtype=np.float64)
    top = float(radii.max()) + field.support_radius
    radial = max(32, int(4 * radii.max())) if radial is None else radial
    xs, xw = projected_quadrature(surface, resolution, radial)
    rows = np.zeros(len(radii))
    cols = np.zeros(len(radii))
    for start, batch, coeff in _batched_slices(surface, xs, field.density, top):
        if len(coeff) == 0:
            continue
        ys = batch.nodes[:, n:]
        xrep = batch.nodes[:, :n]
        counts = np.diff(batch.offsets)
        live = np.nonzero(counts)[0]
        seg = batch.offsets[live]
        w = xw[start + live]
        base = np.exp(1j * np.pi * np.einsum("ij,ij->i", xrep, ys)) * coeff
        proj = ys @ direction
        for k, r in enumerate(radii):
            shift = np.exp(2j * np.pi * r * proj)
            # phase exp(pi i (2p + x) . y) for rows, exp(pi i (2p - x) . y) for columns
            rows[k] += np.abs(np.add.reduceat(shift * base, seg)) @ w
            cols[k] += np.abs(np.add.reduceat(shift * base.conj(), seg)) @ w
    return rows, cols


def coarea_total(surface, resolution, psi=None):
    """int_{Pi_1(S)} int_{S_x} psi / J_{Pi_1} d sigma_x dx (equals int_S psi d sigma)."""
    xs, xw = projected_quadrature(surface, resolution)
    total = 0.0
    for start, batch, coeff in _batched_slices(surface, xs, psi, 0.0):
        total += float(np.add.reduceat(np.append(coeff, 0.0), batch.offsets[:-1]) @ xw[start:start + len(batch.xs)]
                       ) if len(coeff) else 0.0
    return total
