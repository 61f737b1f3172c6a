"""Implicit compact hypersurfaces and their quadrature, curvature and slices.

A surface is the component of {q = 0} through a seed point, with q < 0 on the
enclosed side so that grad q points outward.  Second fundamental forms and
principal curvatures are taken with respect to the inward unit normal, so a
unit sphere has all principal curvatures equal to +1.

Points in R^{2n} are laid out as (x_1..x_n, y_1..y_n); the projections
``Pi_1`` and ``Pi_2`` keep the first and last n coordinates.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize

from .errors import (
    CapacityError,
    RegularityError,
    SingularityError,
    TracingError,
    TransversalityError,
    ValidationError,
)

NODE_TOL = 1e-10
GRAD_TOL = 1e-8
TRANSVERSALITY_ANGLE = 1e-3
REGULARITY_TOL = 1e-6


@dataclass
class ImplicitSurface:
    """Level-set description of a compact hypersurface in R^dim.

    The callables are vectorised over leading axes: ``level_fn`` maps
    (..., d) -> (...), ``grad_fn`` (..., d) -> (..., d) and ``hess_fn``
    (..., d) -> (..., d, d).
    """

    dim: int
    level_fn: Callable
    grad_fn: Callable
    hess_fn: Callable
    seed: np.ndarray
    bbox: np.ndarray
    center: np.ndarray | None = None
    name: str = "surface"
    atlas: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        self.seed = np.asarray(self.seed, dtype=np.float64)
        self.bbox = np.asarray(self.bbox, dtype=np.float64)
        if self.center is None:
            self.center = self.bbox.mean(axis=0)
        self.center = np.asarray(self.center, dtype=np.float64)
        if abs(float(self.level_fn(self.seed))) >= 1e-12:
            raise ValidationError(f"seed is not on the surface: q(seed) = {float(self.level_fn(self.seed)):.3e}")
        if _outward_ray_crosses(self):
            q, g, h = self.level_fn, self.grad_fn, self.hess_fn
            self.level_fn = lambda w: -q(w)
            self.grad_fn = lambda w: -g(w)
            self.hess_fn = lambda w: -h(w)

    def q(self, w):
        return self.level_fn(np.asarray(w, dtype=np.float64))

    def grad(self, w):
        return self.grad_fn(np.asarray(w, dtype=np.float64))

    def hess(self, w):
        return self.hess_fn(np.asarray(w, dtype=np.float64))

    def inward_normal(self, w):
        g = self.grad(w)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.any(norm < GRAD_TOL):
            raise SingularityError("gradient vanishes; normal undefined")
        return -g / norm

    def inside_bbox(self, w, pad=1e-9):
        w = np.asarray(w)
        return np.all((w >= self.bbox[0] - pad) & (w <= self.bbox[1] + pad), axis=-1)


def _outward_ray_crosses(surface):
    g = surface.grad_fn(surface.seed)
    gn = np.linalg.norm(g)
    if gn < GRAD_TOL:
        raise SingularityError("gradient vanishes at seed")
    direction = g / gn
    span = np.linalg.norm(surface.bbox[1] - surface.bbox[0])
    s = np.linspace(1e-6 * span, span, 400)
    pts = surface.seed + s[:, None] * direction
    inside = np.all((pts >= surface.bbox[0]) & (pts <= surface.bbox[1]), axis=-1)
    vals = surface.level_fn(pts[inside])
    return bool(np.any(np.diff(np.sign(vals)) != 0))


@dataclass
class QuadratureRule:
    """Nodes, positive weights and inward unit normals of a surface measure.

    ``annotations`` holds optional per-node arrays, e.g. the normal Jacobian
    of Pi_1 on slice rules under the key ``"jacobian"``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    annotations: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.normals = np.asarray(self.normals, dtype=np.float64)

    def __len__(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def total(self):
        return float(np.sum(self.weights))

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros((0, dim)), {"jacobian": np.zeros(0)})


@dataclass
class Plane:
    """Affine subspace basepoint + span(frame rows); frame is (d', d)."""

    basepoint: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        self.basepoint = np.asarray(self.basepoint, dtype=np.float64)
        self.frame = np.atleast_2d(np.asarray(self.frame, dtype=np.float64))
        gram = self.frame @ self.frame.T
        if np.abs(gram - np.eye(len(gram))).max() > 1e-12:
            raise ValidationError("plane frame is not orthonormal")

    @classmethod
    def from_normal(cls, normal, offset):
        """Hyperplane {w : w . normal = offset} with unit ``normal``."""
        normal = np.asarray(normal, dtype=np.float64)
        normal = normal / np.linalg.norm(normal)
        return cls(offset * normal, _complement_basis(normal[None, :]))

    def to_ambient(self, s):
        return self.basepoint + np.asarray(s) @ self.frame


# ---------------------------------------------------------------- builders


def sphere(dim, r=1.0, center=None):
    """Round sphere of radius ``r``; meshed by an exact parametric atlas."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    seed = c.copy()
    seed[0] += r
    surf = ImplicitSurface(
        dim=dim,
        level_fn=lambda w: np.sum((w - c) ** 2, axis=-1) - r * r,
        grad_fn=lambda w: 2.0 * (w - c),
        hess_fn=lambda w: np.broadcast_to(2.0 * np.eye(dim), np.shape(w)[:-1] + (dim, dim)).copy(),
        seed=seed,
        bbox=np.stack([c - 1.5 * r, c + 1.5 * r]),
        center=c,
        name=f"sphere{dim}(r={r:g})",
    )

    def atlas(resolution):
        dirs, dw = sphere_directions(dim, resolution)
        return QuadratureRule(c + r * dirs, dw * r ** (dim - 1), -dirs)

    surf.atlas = atlas
    return surf


def ellipsoid(axes, center=None):
    """Ellipsoid sum_i ((w_i - c_i) / a_i)^2 = 1."""
    a = np.asarray(axes, dtype=np.float64)
    dim = a.size
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    inv2 = 1.0 / a**2
    seed = c.copy()
    seed[0] += a[0]
    return ImplicitSurface(
        dim=dim,
        level_fn=lambda w: np.sum((w - c) ** 2 * inv2, axis=-1) - 1.0,
        grad_fn=lambda w: 2.0 * (w - c) * inv2,
        hess_fn=lambda w: np.broadcast_to(np.diag(2.0 * inv2), np.shape(w)[:-1] + (dim, dim)).copy(),
        seed=seed,
        bbox=np.stack([c - 1.5 * a, c + 1.5 * a]),
        center=c,
        name=f"ellipsoid{tuple(a.tolist())}",
    )


def trig_level_surface(n):
    """Component through (1/4, 0, ..., 0) of the zero set of
    p(x, y) = 2(2n-1) - 2 sum_j (cos 2 pi x_j + cos 2 pi y_j)."""
    if n not in (1, 2):
        raise CapacityError("trigonometric surfaces are supported for n in {1, 2}")
    dim = 2 * n
    tau = 2.0 * np.pi
    seed = np.zeros(dim)
    seed[0] = 0.25

    def q(w):
        return 2.0 * (2 * n - 1) - 2.0 * np.sum(np.cos(tau * w), axis=-1)

    def grad(w):
        return 2.0 * tau * np.sin(tau * w)

    def hess(w):
        d = 2.0 * tau * tau * np.cos(tau * w)
        return d[..., :, None] * np.eye(dim)

    return ImplicitSurface(dim, q, grad, hess, seed, np.stack([-0.5 * np.ones(dim), 0.5 * np.ones(dim)]),
                           center=np.zeros(dim), name=f"trig{dim}")


# ---------------------------------------------------------------- quadrature


def sphere_directions(dim, resolution):
    """Unit directions and solid-angle weights on S^{dim-1}.

    dim 2: uniform angles; dim 3: Gauss-Legendre in cos(theta) times uniform
    azimuth; dim 4: Hopf coordinates, Gauss-Legendre in |z_2|^2 times two
    uniform phases.  Points in R^4 are ordered (x_1, x_2, y_1, y_2) with
    z_j = x_j + i y_j.
    """
    res = int(resolution)
    if res < 4:
        raise ValidationError("resolution must be at least 4")
    if dim == 2:
        th = 2.0 * np.pi * np.arange(res) / res
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(res, 2.0 * np.pi / res)
    if dim == 3:
        z, wz = leggauss(max(2, res // 2))
        ph = 2.0 * np.pi * np.arange(res) / res
        Z, P = np.meshgrid(z, ph, indexing="ij")
        rho = np.sqrt(1.0 - Z**2)
        dirs = np.stack([rho * np.cos(P), rho * np.sin(P), Z], axis=-1).reshape(-1, 3)
        w = np.repeat(wz, res) * (2.0 * np.pi / res)
        return dirs, w
    if dim == 4:
        g, wg = leggauss(max(2, res // 2))
        u = 0.5 * (g + 1.0)
        wu = 0.5 * wg
        xi = 2.0 * np.pi * np.arange(res) / res
        U, X1, X2 = np.meshgrid(u, xi, xi, indexing="ij")
        a, b = np.sqrt(1.0 - U), np.sqrt(U)
        dirs = np.stack([a * np.cos(X1), b * np.cos(X2), a * np.sin(X1), b * np.sin(X2)], axis=-1).reshape(-1, 4)
        w = np.repeat(wu, res * res) * 0.5 * (2.0 * np.pi / res) ** 2
        return dirs, w
    raise CapacityError(f"sphere quadrature not available in dimension {dim}")


def ray_solve(level_fn, grad_fn, origin, dirs, rmax, scan=64):
    """Smallest r in (0, rmax] with q(origin + r dir) = 0, per ray.

    ``origin`` is one point or one point per ray.  A coarse scan brackets the
    first crossing, bisection narrows it and safeguarded Newton polishes.
    """
    dirs = np.atleast_2d(dirs)
    origin = np.broadcast_to(np.asarray(origin, dtype=np.float64), dirs.shape)
    if np.any(level_fn(origin) >= 0):
        raise ValidationError("ray origin is not strictly inside the surface")
    s = np.linspace(0.0, rmax, scan + 1)[1:]
    vals = level_fn(origin[:, None, :] + s[None, :, None] * dirs[:, None, :])
    crossed = vals >= 0
    if not np.all(crossed.any(axis=1)):
        raise TracingError("surface component escapes the bounding box along a ray")
    first = crossed.argmax(axis=1)
    hi = s[first]
    lo = np.where(first > 0, s[np.maximum(first - 1, 0)], 0.0)
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        v = level_fn(origin + mid[:, None] * dirs)
        lo = np.where(v < 0, mid, lo)
        hi = np.where(v < 0, hi, mid)
    r = 0.5 * (lo + hi)
    for _ in range(20):
        p = origin + r[:, None] * dirs
        qv = level_fn(p)
        if np.all(np.abs(qv) < 1e-15):
            break
        d = np.einsum("ij,ij->i", grad_fn(p), dirs)
        r = np.clip(r - qv / d, lo, hi)
    return r


def radial_atlas(surface, resolution, origin=None):
    """Quadrature for a component that is star-shaped about ``origin``.

    Each sphere direction is pushed out to the surface; the weight picks up
    the Jacobian r^{d-1} |grad q| / |grad q . dir|.
    """
    origin = surface.center if origin is None else np.asarray(origin)
    dirs, dw = sphere_directions(surface.dim, resolution)
    rmax = np.linalg.norm(surface.bbox[1] - surface.bbox[0])
    r = ray_solve(surface.level_fn, surface.grad_fn, origin, dirs, rmax)
    nodes = origin + r[:, None] * dirs
    g = surface.grad(nodes)
    gn = np.linalg.norm(g, axis=1)
    weights = dw * r ** (surface.dim - 1) * gn / np.abs(np.einsum("ij,ij->i", g, dirs))
    return QuadratureRule(nodes, weights, -g / gn[:, None])


def newton_project(surface, pts, tol=1e-14, maxiter=50):
    """Project points onto {q = 0} by Newton steps along grad q."""
    w = np.array(pts, dtype=np.float64, copy=True)
    for _ in range(maxiter):
        qv = surface.q(w)
        if np.all(np.abs(qv) < tol):
            break
        g = surface.grad(w)
        w = w - (qv / np.sum(g * g, axis=-1))[..., None] * g
    return w


def trace_curve(surface, resolution):
    """Arc-length tracing of a closed curve in R^2.

    Predictor along the tangent, corrector by Newton projection.  Node weights
    are half the adjacent arc lengths, each arc estimated from its chord with
    a curvature correction, so total length is fourth-order accurate and
    general integrals second-order.
    """
    if surface.dim != 2:
        raise ValidationError("curve tracing needs a planar curve")
    span = np.linalg.norm(surface.bbox[1] - surface.bbox[0])
    pilot = _trace(surface, span / 512.0)
    length = np.sum(_arcs(surface, pilot))
    nodes = _trace(surface, length / int(resolution))
    arcs = _arcs(surface, nodes)
    weights = 0.5 * (arcs + np.roll(arcs, 1))
    return QuadratureRule(nodes, weights, surface.inward_normal(nodes))


def _trace(surface, h):
    start = newton_project(surface, surface.seed)
    pts = [start]
    w = start
    max_steps = int(50 * np.linalg.norm(surface.bbox[1] - surface.bbox[0]) / h) + 1000
    for step in range(max_steps):
        g = surface.grad(w)
        gn = np.linalg.norm(g)
        if gn < GRAD_TOL:
            raise SingularityError(f"gradient vanishes near {w}")
        tangent = np.array([-g[1], g[0]]) / gn
        # close when the start lies less than 1.5 steps ahead
        if step > 2 and np.linalg.norm(start - w) < 2.0 * h and np.dot(start - w, tangent) < 1.5 * h:
            break
        nxt = newton_project(surface, w + h * tangent)
        if not surface.inside_bbox(nxt):
            raise TracingError("traced curve left the bounding box")
        pts.append(nxt)
        w = nxt
    else:
        raise TracingError("curve did not close")
    return np.array(pts)


def _arcs(surface, nodes):
    chords = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
    kappa = np.abs(curvatures_2d(surface, nodes))
    kbar = 0.5 * (kappa + np.roll(kappa, -1))
    return chords * (1.0 + (kbar * chords) ** 2 / 24.0)


def curvatures_2d(surface, nodes):
    g = surface.grad(nodes)
    H = surface.hess(nodes)
    gn = np.linalg.norm(g, axis=-1)
    t = np.stack([-g[..., 1], g[..., 0]], axis=-1) / gn[..., None]
    return np.einsum("...i,...ij,...j->...", t, H, t) / gn


def mesh_surface(surface, resolution):
    """Quadrature rule for the surface measure on the seed component."""
    if surface.atlas is not None:
        rule = surface.atlas(resolution)
    elif surface.dim == 2:
        rule = trace_curve(surface, resolution)
    elif surface.dim in (3, 4):
        rule = radial_atlas(surface, resolution)
    else:
        raise CapacityError(f"no mesher for generic level sets in dimension {surface.dim}")
    _check_nodes(surface, rule.nodes)
    return rule


def _check_nodes(surface, nodes, node_tol=NODE_TOL):
    if len(nodes) == 0:
        return
    if np.abs(surface.q(nodes)).max() >= node_tol:
        raise TracingError("mesh node off the surface beyond node tolerance")
    gn = np.linalg.norm(surface.grad(nodes), axis=-1)
    if gn.min() < GRAD_TOL:
        raise SingularityError(f"gradient vanishes at node {nodes[gn.argmin()]}")


# ---------------------------------------------------------------- curvature


def tangent_basis(normal):
    """Orthonormal basis (rows) of the complement of one unit normal."""
    return _complement_basis(np.atleast_2d(normal))


def _complement_basis(rows):
    rows = np.atleast_2d(rows)
    d = rows.shape[1]
    _, _, vt = np.linalg.svd(rows, full_matrices=True)
    return vt[rows.shape[0]:d]


def _on_surface(surface, w, tol=1e-8):
    w = np.asarray(w, dtype=np.float64)
    if abs(float(surface.q(w))) >= tol:
        raise ValidationError(f"point is not on the surface: |q| = {abs(float(surface.q(w))):.3e}")
    g = surface.grad(w)
    if np.linalg.norm(g) < GRAD_TOL:
        raise SingularityError("gradient too small to define curvature")
    return w, g


def shape_operator(surface, w):
    """Shape operator (inward normal) in a tangent basis; returns (S, basis)."""
    w, g = _on_surface(surface, w)
    gn = np.linalg.norm(g)
    T = tangent_basis(g / gn)
    return T @ surface.hess(w) @ T.T / gn, T


def gaussian_curvature(surface, w):
    """Gauss curvature and ascending principal curvatures at ``w``."""
    S, _ = shape_operator(surface, w)
    k = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(np.prod(k)), k


def second_fundamental_form(surface, w, X, Y):
    """K(X, Y) = X^T Hess(q) Y / |grad q| for tangent vectors X, Y."""
    w, g = _on_surface(surface, w)
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    gn = np.linalg.norm(g)
    for v in (X, Y):
        if abs(v @ g) >= 1e-8 * np.linalg.norm(v) * gn:
            raise ValidationError("vector is not tangent to the surface")
    return float(X @ surface.hess(w) @ Y / gn)


def min_principal_curvature(surface, nodes):
    return min(gaussian_curvature(surface, w)[1][0] for w in nodes)


# ---------------------------------------------------------------- projections


def _projection_svals(surface, w):
    if surface.dim % 2:
        raise ValidationError("projections need an even ambient dimension")
    n = surface.dim // 2
    g = surface.grad(w)
    gn = np.linalg.norm(g)
    if gn < GRAD_TOL:
        raise SingularityError("gradient vanishes")
    T = tangent_basis(g / gn)  # (d-1, d)
    s1 = np.linalg.svd(T[:, :n], compute_uv=False)
    s2 = np.linalg.svd(T[:, n:], compute_uv=False)
    return s1, s2


def projection_regularity(surface, w):
    """Smallest singular values of dPi_1 and dPi_2 restricted to T_w S."""
    s1, s2 = _projection_svals(surface, w)
    return float(s1.min()), float(s2.min())


def normal_jacobian(surface, w, which=1):
    """Product of the singular values of dPi_which on T_w S."""
    s1, s2 = _projection_svals(surface, w)
    return float(np.prod(s1 if which == 1 else s2))


def _slice_level(surface, x):
    x = np.asarray(x, dtype=np.float64)
    n = surface.dim // 2

    def q(y):
        y = np.asarray(y)
        return surface.level_fn(np.concatenate([np.broadcast_to(x, y.shape[:-1] + (n,)), y], axis=-1))

    def g(y):
        y = np.asarray(y)
        full = np.concatenate([np.broadcast_to(x, y.shape[:-1] + (n,)), y], axis=-1)
        return surface.grad_fn(full)[..., n:]

    def h(y):
        y = np.asarray(y)
        full = np.concatenate([np.broadcast_to(x, y.shape[:-1] + (n,)), y], axis=-1)
        return surface.hess_fn(full)[..., n:, n:]

    return q, g, h


def slice_interior_point(surface, x):
    """A point y minimising q(x, .), with the minimum value."""
    n = surface.dim // 2
    q, g, _ = _slice_level(surface, x)
    res = minimize(lambda y: float(q(y)), surface.center[n:], jac=lambda y: g(y), method="BFGS",
                   options={"gtol": 1e-12})
    return res.x, float(res.fun)


@dataclass
class SliceBatch:
    """Slice quadratures for many x at once, stored back to back.

    Slice i occupies ``offsets[i]:offsets[i+1]`` of the node arrays; empty
    slices have zero length.
    """

    xs: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    jacobian: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray

    def rule(self, i):
        sl = slice(int(self.offsets[i]), int(self.offsets[i + 1]))
        return QuadratureRule(self.nodes[sl], self.weights[sl], self.normals[sl], {"jacobian": self.jacobian[sl]})

    @property
    def owner(self):
        return np.repeat(np.arange(len(self.xs)), np.diff(self.offsets))


def slice_batch(surface, xs, resolution):
    """Slices S_x for every row of ``xs``; ``resolution`` may vary per x."""
    if surface.dim % 2:
        raise ValidationError("slices need an even ambient dimension")
    n = surface.dim // 2
    d = surface.dim
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64)).reshape(-1, n)
    m = len(xs)
    res = np.broadcast_to(np.asarray(resolution, dtype=np.int64), (m,))

    # interior point of each slice: Pi_2(center) when inside, else a minimiser
    y0 = np.broadcast_to(surface.center[n:], (m, n)).copy()
    qmin = surface.level_fn(np.concatenate([xs, y0], axis=1))
    for i in np.nonzero(qmin >= 0)[0]:
        y0[i], qmin[i] = slice_interior_point(surface, xs[i])
    live = qmin < 0

    counts = np.zeros(m, dtype=np.int64)
    dir_cache = {}
    ray_x, ray_y0, ray_dir, ray_w = [], [], [], []
    for i in np.nonzero(live)[0]:
        key = int(res[i])
        if key not in dir_cache:
            dir_cache[key] = (np.array([[1.0], [-1.0]]), np.ones(2)) if n == 1 else sphere_directions(n, key)
        dirs, dw = dir_cache[key]
        counts[i] = len(dirs)
        ray_x.append(np.broadcast_to(xs[i], (len(dirs), n)))
        ray_y0.append(np.broadcast_to(y0[i], (len(dirs), n)))
        ray_dir.append(dirs)
        ray_w.append(dw)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    if offsets[-1] == 0:
        z = np.zeros((0, d))
        return SliceBatch(xs, z, np.zeros(0), np.zeros(0), z, offsets)
    rx, ry0, rdir, rw = (np.concatenate(a) for a in (ray_x, ray_y0, ray_dir, ray_w))

    def q(y):
        return surface.level_fn(np.concatenate([np.broadcast_to(rx, y.shape[:-1] + (n,)) if y.ndim == 2
                                                else np.broadcast_to(rx[:, None, :], y.shape[:-1] + (n,)), y],
                                               axis=-1))

    def g(y):
        return surface.grad_fn(np.concatenate([rx, y], axis=-1))[..., n:]

    rmax = np.linalg.norm(surface.bbox[1, n:] - surface.bbox[0, n:])
    r = ray_solve(q, g, ry0, rdir, rmax)
    ys = ry0 + r[:, None] * rdir
    nodes = np.concatenate([rx, ys], axis=1)
    gfull = surface.grad(nodes)
    gfn = np.linalg.norm(gfull, axis=1)
    gy = gfull[:, n:]
    gyn = np.linalg.norm(gy, axis=1)
    if n == 1:
        weights = np.ones(len(nodes))
    else:
        weights = rw * r ** (n - 1) * gyn / np.abs(np.einsum("ij,ij->i", gy, rdir))
    # J_{Pi_1} = |y-part of the unit normal|; equals the singular-value product
    jac = gyn / gfn
    bad = jac < REGULARITY_TOL
    if bad.any():
        k = int(bad.argmax())
        raise RegularityError(f"slice at x={rx[k]} meets the critical set of Pi_1", node=nodes[k])
    return SliceBatch(xs, nodes, weights, jac, -gfull / gfn[:, None], offsets)


def slice_surface(surface, x, resolution):
    """Quadrature for sigma_x on S_x = Pi_1^{-1}{x}, annotated with J_{Pi_1}.

    Nodes are full points (x, y) of R^{2n}.  An empty slice yields an empty
    rule; a slice touching the critical set of Pi_1 raises RegularityError.
    """
    n = surface.dim // 2
    return slice_batch(surface, np.asarray(x, dtype=np.float64).reshape(1, n), resolution).rule(0)


def projected_region_radius(surface, direction, tol=1e-10):
    """Extent of Pi_1(S) from Pi_1(center) along a unit direction in R^n."""
    n = surface.dim // 2
    c = surface.center[:n]
    lo, hi = 0.0, np.linalg.norm(surface.bbox[1, :n] - surface.bbox[0, :n])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slice_interior_point(surface, c + mid * direction)[1] < 0:
            lo = mid
        else:
            hi = mid
    return lo


def slice_gaussian_curvatures(surface, x, resolution):
    """Gauss curvature of Pi_2(S_x) in R^n at each slice node."""
    n = surface.dim // 2
    rule = slice_surface(surface, x, resolution)
    _, g, h = _slice_level(surface, x)
    out = []
    for node in rule.nodes:
        y = node[n:]
        gy = g(y)
        gn = np.linalg.norm(gy)
        T = tangent_basis(gy / gn)
        out.append(np.prod(np.linalg.eigvalsh(T @ h(y) @ T.T / gn)))
    return np.array(out)


# ---------------------------------------------------------------- slice curvature identity


def slice_curvature_check(surface, plane, sample_count=16, seed=0, h=2e-3):
    """Compare K_{N in H}(X, X) with K_{M}(X, X) / (n_M . n_N) on N = M cap H.

    K_{N in H} is measured independently of the Hessian formula: the normal
    section of N through y along X is solved pointwise and its curvature
    taken by Richardson-extrapolated second differences.

    Returns (max relative identity error, min ratio K_{N in H} / K_M).
    """
    rng = np.random.default_rng(seed)
    E = plane.frame
    dprime = E.shape[0]

    def qH(s):
        return surface.level_fn(plane.to_ambient(s))

    def gH(s):
        return surface.grad_fn(plane.to_ambient(s)) @ E.T

    start = (surface.center - plane.basepoint) @ E.T
    res = minimize(lambda s: float(qH(s)), start, jac=lambda s: gH(s), method="BFGS", options={"gtol": 1e-12})
    if res.fun >= 0:
        raise TransversalityError("plane does not cut through the surface")
    dirs = rng.normal(size=(sample_count, dprime))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rmax = np.linalg.norm(surface.bbox[1] - surface.bbox[0])
    r = ray_solve(qH, gH, res.x, dirs, rmax)
    pts = plane.to_ambient(res.x + r[:, None] * dirs)

    max_err, min_ratio = 0.0, np.inf
    sin_tol = np.sin(TRANSVERSALITY_ANGLE)
    for y in pts:
        g = surface.grad(y)
        gn = np.linalg.norm(g)
        gh = E @ g
        ghn = np.linalg.norm(gh)
        if ghn < sin_tol * gn:
            raise TransversalityError(f"plane is tangent to the surface near {y}")
        n_M = -g / gn
        n_N = -(gh @ E) / ghn
        X = rng.normal(size=dprime)
        X -= (X @ gh) / ghn**2 * gh
        X = (X / np.linalg.norm(X)) @ E
        K_M = float(X @ surface.hess(y) @ X / gn)
        K_N = _normal_section_curvature(surface, y, X, n_N, h)
        predicted = K_M / float(n_M @ n_N)
        max_err = max(max_err, abs(K_N - predicted) / abs(K_N))
        min_ratio = min(min_ratio, K_N / K_M)
    return max_err, min_ratio


def _normal_section_curvature(surface, y, X, normal, h):
    def offset(t):
        d = 0.0
        for _ in range(30):
            p = y + t * X + d * normal
            step = float(surface.q(p)) / float(surface.grad(p) @ normal)
            d -= step
            if abs(step) < 1e-17:
                break
        return d

    def second_diff(t):
        return (offset(t) + offset(-t)) / (t * t)

    k1, k2, k4 = second_diff(h), second_diff(h / 2), second_diff(h / 4)
    r1 = (4.0 * k2 - k1) / 3.0
    r2 = (4.0 * k4 - k2) / 3.0
    return (16.0 * r2 - r1) / 15.0


def random_transversal_planes(surface, count, seed=0, codim=1, max_offset=0.6):
    """Random affine planes of codimension ``codim`` through the interior.

    Offsets are a fraction of the distance to the surface along the plane
    normal, which keeps every plane transversal for convex surfaces.
    """
    rng = np.random.default_rng(seed)
    d = surface.dim
    planes = []
    rmax = np.linalg.norm(surface.bbox[1] - surface.bbox[0])
    for _ in range(count):
        normals = np.linalg.qr(rng.normal(size=(d, codim)))[0].T
        frame = _complement_basis(normals)
        u = normals[0]
        reach = ray_solve(surface.level_fn, surface.grad_fn, surface.center, u[None, :], rmax)[0]
        base = surface.center + rng.uniform(-max_offset, max_offset) * reach * u
        planes.append(Plane(base, frame))
    return planes
