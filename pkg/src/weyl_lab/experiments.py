"""The numerical experiments behind the command line runner.

Each function computes one experiment and returns plain dictionaries and
arrays; writing files is left to the caller.  Operators that are expensive
to assemble go through an optional ``OperatorCache``.
"""

import numpy as np
from scipy.special import j0

from . import heisenberg as hb
from . import measure as msr
from . import surface as surf
from . import weyl
from .cache import cache_key
from .errors import ValidationError
from .hermite import basis_enumerate, oscillator_inverse_schatten, schatten_tail_classifier

DEFAULT_SEED = 42


def _cached(cache, key, compute):
    return compute() if cache is None else cache.fetch(key, compute)


def gaussian(w):
    """f(w) = 2 exp(-pi |w|^2); on R^2 its L^2 norm is sqrt(2)."""
    return 2.0 * np.exp(-np.pi * np.sum(np.asarray(w) ** 2, axis=-1))


def gaussian_l2_norm(dim):
    # int 4 exp(-2 pi |w|^2) dw = 4 / 2^{dim/2}
    return float(np.sqrt(4.0 / 2.0 ** (dim / 2)))


# ------------------------------------------------------------ spectrum


def sphere_spectrum(n, r=1.0, kmax=100_000, p_grid=None):
    """Closed-form W(mu_r) spectrum, envelope fit and Schatten verdicts."""
    report = weyl.sphere_weyl_closed_form(n, r, kmax)
    if report.envelope_fit is None:
        raise ValidationError("too few oscillation peaks for an envelope fit; raise kmax")
    e = report.envelope_fit.exponent
    p_grid = np.round(np.arange(1.0, 6.0 + 1e-9, 0.5), 10) if p_grid is None else np.asarray(p_grid, dtype=float)
    verdicts = [{"p": float(p),
                 "weyl": schatten_tail_classifier(n - 1, e, p).verdict,
                 "oscillator_inverse": oscillator_inverse_schatten(n, 10, p).verdict} for p in p_grid]
    summary = {
        "n": n, "r": r, "kmax": int(kmax),
        "envelope": report.envelope_fit.as_dict(),
        "critical_p": report.critical_p,
        "threshold_formula": 4.0 * n / (2 * n - 1),
        "lambda_0": float(report.eigenvalues[0]),
        "lambda_1": float(report.eigenvalues[1]) if kmax >= 1 else None,
        "schatten": verdicts,
    }
    return report, summary


def oscillator_classification(n_max=6, p_lo=0.01, p_hi=8.0, step=0.01):
    """Grid scan of oscillator_inverse_schatten verdicts against p > n."""
    p = np.round(np.arange(p_lo, p_hi + step / 2, step), 10)
    mismatches = []
    for n in range(1, n_max + 1):
        for pv in p:
            got = oscillator_inverse_schatten(n, 10, float(pv)).verdict == "converges"
            if got != (pv > n):
                mismatches.append((n, float(pv)))
    return {"grid_points": int(len(p) * n_max), "mismatches": mismatches}


def block_structure(n, r, K=10, cache=None):
    """Quadrature W(mu_r) against its calibrated closed form."""
    basis = basis_enumerate(n, K)
    res = 2 * K + 4 if n > 1 else 4 * K + 8
    A = _cached(cache, cache_key("weyl_of_measure/sphere", n=n, r=r, K=K, res=res),
                lambda: weyl.weyl_of_measure(msr.sphere_measure(n, r, res), basis))
    E = A.entries
    diag = np.diag(E)
    off = float(np.abs(E - np.diag(diag)).max())
    spread = max(float(np.ptp(diag[basis.stratum(k)].real)) + float(np.abs(diag[basis.stratum(k)].imag).max())
                 for k in range(K + 1))
    cal = weyl.calibrate_normalization(n, r, basis, res)
    closed = weyl.sphere_eigenvalues(n, r, K, cal.c)
    means = np.array([diag[basis.stratum(k)].real.mean() for k in range(K + 1)])
    return {"n": n, "r": r, "K": K, "offdiag_max": off, "stratum_spread": spread, "c": cal.c,
            "calibration_residual": cal.residual, "closed_form_error": float(np.abs(means - closed).max())}


# ----------------------------------------------------------- Plancherel


def plancherel(K=16, extent=5.0, spacing=0.1, cache=None):
    """||W(f)||_HS / ||f||_2 on interior strata for the Gaussian f at n = 1."""
    basis = basis_enumerate(1, K)
    grid = weyl.Grid(extent, spacing)
    A = _cached(cache, cache_key("weyl_of_function/gaussian", K=K, extent=extent, spacing=spacing),
                lambda: weyl.weyl_of_function(gaussian, basis, grid))
    ratio = A.hs_norm(interior=True) / gaussian_l2_norm(2)
    return A, {"K": K, "extent": extent, "spacing": spacing, "hs_ratio": ratio,
               "refinement_gap": A.meta.get("refinement_gap")}


# ----------------------------------------------------------- covariance


def covariance_draws(n=1, K=16, draws=20, seed=DEFAULT_SEED, cap=hb.DEFAULT_SHIFT_CAP):
    """Covariance residuals for random atomic measures and shifts.

    Each draw has 1 to 3 atoms in [-1, 1]^{2n} with complex Gaussian masses
    and a shift of norm uniform in [0, cap].
    """
    rng = np.random.default_rng(seed)
    basis = basis_enumerate(n, K)
    out = []
    for _ in range(draws):
        k = int(rng.integers(1, 4))
        pts = rng.uniform(-1.0, 1.0, size=(k, 2 * n))
        masses = rng.normal(size=k) + 1j * rng.normal(size=k)
        shift = rng.normal(size=2 * n)
        shift *= rng.uniform(0.0, cap) / np.linalg.norm(shift)
        res = hb.covariance_check(msr.atomic_measure(pts, masses), shift[:n], shift[n:], basis, cap)
        out.append({"atoms": k, "shift": shift.tolist(), "residual": res})
    return {"n": n, "K": K, "draws": out, "max_residual": max(d["residual"] for d in out)}


# ------------------------------------------------------ difference eq


def difference_equation(n=1, resolution=512, K=12, perturbations=(1e-3, 2e-3)):
    basis = basis_enumerate(n, K)
    base = hb.difference_equation_residual(n, resolution, basis)
    pert = [hb.difference_equation_residual(n, resolution, basis, d) for d in perturbations]
    slopes = [p / d for p, d in zip(pert, perturbations)]
    return {"n": n, "resolution": resolution, "K": K, "residual": base,
            "perturbations": list(perturbations), "perturbed_residuals": pert,
            "slope_spread": float(max(slopes) / min(slopes) - 1.0) if len(slopes) > 1 else 0.0}


# ----------------------------------------------------------------- Gram


def gram_test(K=16, count=6, seed=DEFAULT_SEED, box=1.5, cache=None):
    """Gram conditioning of random translates of W(2 exp(-pi |w|^2)) at n = 1."""
    A, _ = plancherel(K, cache=cache)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box, box, size=(count, 2))
    rep = hb.gram_independence(A, pts)
    return {"K": K, "count": count, "points": pts.tolist(), "min_eigenvalue": rep.min_eigenvalue,
            "condition_number": rep.condition_number}


# ---------------------------------------------------------- slice kernel


def kernel_routes(K=4, angular=32, radial=24, mesh_resolution=16, cache=None):
    """Measure route against kernel route for sigma on the unit 3-sphere."""
    s4 = surf.sphere(4)
    basis = basis_enumerate(2, K)
    A = _cached(cache, cache_key("weyl_of_measure/S3", K=K, res=mesh_resolution),
                lambda: weyl.weyl_of_measure(msr.SmoothMeasure(surf.mesh_surface(s4, mesh_resolution)), basis))
    B = _cached(cache, cache_key("weyl_kernel_operator/S3", K=K, angular=angular, radial=radial),
                lambda: weyl.weyl_kernel_operator(msr.KernelField(s4), basis, angular, radial))
    herm = [float(np.linalg.norm(M.entries - M.entries.conj().T)) for M in (A, B)]
    return {"K": K, "max_entry_difference": float(np.abs(A.entries - B.entries).max()),
            "max_entry": float(np.abs(A.entries).max()),
            "hermiticity_defect_measure": herm[0], "hermiticity_defect_kernel": herm[1]}


def kernel_decay(radii=None, count=64, seed=0, cutoff=(0.5, 0.8)):
    """Shellwise sup of |k(t, u)| over |t + u| = r for the 3-sphere with a cutoff density."""
    radii = np.geomspace(8.0, 60.0, 20) if radii is None else np.asarray(radii, dtype=float)
    field = msr.KernelField(surf.sphere(4), density=msr.projection_cutoff(*cutoff))
    sups = msr.kernel_shell_sup(field, radii, count=count, seed=seed)
    fit = msr.decay_fit(radii, sups)
    return radii, sups, {"fit": fit.as_dict(), "count": count, "cutoff_radii": list(cutoff),
                         "expected_exponent": -0.5}


def kernel_mass(radii=None, direction=(1.0, 0.3), resolution=16):
    """Row and column L^1 masses of the 3-sphere kernel along a ray."""
    radii = np.geomspace(4.0, 60.0, 16) if radii is None else np.asarray(radii, dtype=float)
    field = msr.KernelField(surf.sphere(4))
    rows, cols = msr.kernel_mass_profile(field, direction, radii, resolution)
    shell = 2.0 * field.support_radius  # beyond the support shell of the slab
    after = radii >= shell
    fits = {name: msr.decay_fit(radii, v, (max(shell, radii.min()), radii.max())).as_dict()
            for name, v in (("rows", rows), ("cols", cols))}
    mono = {name: bool(np.all(np.diff(v[after]) < 0)) for name, v in (("rows", rows), ("cols", cols))}
    return radii, rows, cols, {"fits": fits, "monotone": mono, "support_shell": shell}


# ------------------------------------------------------------ Fourier


def circle_decay(resolution=2048, r_max=100.0, step=0.05, n_directions=16, seed=0):
    """Normalised circle measure: transform against J0(2 pi |xi|) and decay fit."""
    mu = msr.sphere_measure(1, 1.0, resolution)
    trust = msr.trust_radius(mu)
    top = min(r_max, trust)
    radii = np.arange(1.0, top + step / 2, step)
    dirs = msr.random_directions(2, n_directions, seed)
    vals = np.array([msr.fourier_transform(mu, r * dirs) for r in radii])  # (R, D)
    ref = j0(2.0 * np.pi * radii)[:, None]
    err = float(np.abs(vals - ref).max())
    sups = np.abs(vals).max(axis=1)
    peaks = msr.local_maxima(sups)
    fit = msr.decay_fit(radii[peaks], sups[peaks])
    return radii, sups, {"trust_radius": trust, "max_j0_error": err, "fit": fit.as_dict(),
                         "n_directions": n_directions, "expected_exponent": -0.5}


# ------------------------------------------------------------ geometry


def curvature_planes(surface_name="ellipsoid", planes=50, seed=DEFAULT_SEED, samples=8):
    """Slice curvature identity on random transversal hyperplanes."""
    surface = test_surface(surface_name)
    rows = []
    for i, plane in enumerate(surf.random_transversal_planes(surface, planes, seed)):
        err, ratio = surf.slice_curvature_check(surface, plane, samples, seed + i)
        rows.append((i, err, ratio))
    arr = np.array(rows)
    return arr, {"surface": surface_name, "planes": planes, "max_error": float(arr[:, 1].max()),
                 "min_ratio": float(arr[:, 2].min())}


def test_surface(name):
    table = {
        "sphere": lambda: surf.sphere(3),
        "ellipsoid": lambda: surf.ellipsoid([1.0, 0.7, 1.3]),
        "sphere4": lambda: surf.sphere(4),
        "ellipsoid4": lambda: surf.ellipsoid([1.0, 0.8, 1.2, 0.9]),
        "circle": lambda: surf.sphere(2),
        "ellipse": lambda: surf.ellipsoid([1.0, 0.6]),
        "trig1": lambda: surf.trig_level_surface(1),
        "trig2": lambda: surf.trig_level_surface(2),
    }
    if name not in table:
        raise ValidationError(f"unknown surface {name!r}; choose from {sorted(table)}")
    return table[name]()


SUBMERSION_SURFACES = ("circle", "ellipse", "trig1", "sphere4", "ellipsoid4", "trig2")


def submersion_scan(names=SUBMERSION_SURFACES, resolution=24):
    """min over mesh nodes of max(s1, s2) for each even-dimensional test surface."""
    out = {}
    for name in names:
        s = test_surface(name)
        rule = surf.mesh_surface(s, resolution if s.dim == 4 else 8 * resolution)
        worst = min(max(surf.projection_regularity(s, w)) for w in rule.nodes)
        out[name] = {"nodes": len(rule), "min_max_sval": float(worst)}
    return out
