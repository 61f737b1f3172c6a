"""Command line runner: one subcommand per experiment.

Configuration precedence is flags, then a JSON config file, then built-in
defaults.  Every run writes its artifacts plus ``manifest.json`` (config
echo, versions, wall time, SHA-256 of each artifact) to the output
directory.  Failures write ``error.json`` and exit with 2 (invalid input),
3 (accuracy) or 4 (capacity).
"""

import argparse
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import scipy

from . import __version__, experiments, io, kernels
from .cache import OperatorCache, resolve_cache_dir
from .errors import CapacityError, ValidationError, WeylLabError
from .heisenberg import eq_de_stencil
from .hermite import MAX_BASIS_SIZE

log = logging.getLogger("weyl_lab")

EXPERIMENTS = ("sphere-spectrum", "plancherel", "covariance", "difference-eq",
               "slice-kernel", "curvature", "decay", "gram")


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 1
    K: int = 16
    r: float = 1.0
    resolution: int = 512
    p_grid: list = field(default_factory=lambda: [round(1.0 + 0.5 * i, 10) for i in range(11)])
    seed: int = experiments.DEFAULT_SEED
    output_dir: str = "weyl_lab_out"
    cache_dir: str | None = None
    no_cache: bool = False
    kmax: int = 100_000
    surface: str = "ellipsoid"
    planes: int = 50
    draws: int = 20
    count: int = 6
    target: str = "circle"
    extent: float = 5.0
    spacing: float = 0.1

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}")
        if self.n < 1 or self.n > 6:
            raise ValidationError("n must lie in [1, 6]")
        if self.K < 0 or self.kmax < 1 or self.kmax > 1_000_000:
            raise ValidationError("need K >= 0 and 1 <= kmax <= 1e6")
        if self.r <= 0 or self.spacing <= 0 or self.extent <= 0:
            raise ValidationError("r, extent and spacing must be positive")
        if self.resolution < 4:
            raise ValidationError("resolution must be at least 4")
        if any(p <= 0 for p in self.p_grid):
            raise ValidationError("p-grid values must be positive")
        if self.planes < 1 or self.draws < 1 or not 1 <= self.count <= 32:
            raise ValidationError("planes and draws must be positive, count in [1, 32]")
        if self.experiment in ("difference-eq",) and self.n not in (1, 2):
            raise ValidationError("difference-eq supports n in {1, 2}")
        if self.experiment in ("plancherel", "gram") and self.n != 1:
            raise ValidationError(f"{self.experiment} runs at n = 1")
        if self.experiment == "decay" and self.target not in ("circle", "kernel-mass"):
            raise ValidationError("decay target must be 'circle' or 'kernel-mass'")
        from math import comb

        if comb(self.K + self.n, self.n) > MAX_BASIS_SIZE:
            raise CapacityError("basis size exceeds the supported cap")
        return self


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--no-cache", dest="no_cache", action="store_const", const=True)
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--K", type=int)
    common.add_argument("--r", type=float)
    common.add_argument("--resolution", type=int)
    common.add_argument("--p-grid", dest="p_grid", type=float, nargs="+")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="weyl-lab", description="Weyl transform experiments")
    parser.add_argument("--version", action="version", version=f"weyl-lab {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    specs = {
        "sphere-spectrum": [("--kmax", int)],
        "plancherel": [("--extent", float), ("--spacing", float)],
        "covariance": [("--draws", int)],
        "difference-eq": [],
        "slice-kernel": [],
        "curvature": [("--surface", str), ("--planes", int)],
        "decay": [("--target", str)],
        "gram": [("--count", int)],
    }
    for name, extra in specs.items():
        p = sub.add_parser(name, parents=[common])
        for flag, typ in extra:
            p.add_argument(flag, type=typ, dest=flag[2:].replace("-", "_"))
    return parser


def resolve_config(args):
    """Merge defaults, the config file and explicit flags (highest priority)."""
    values = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        unknown = set(data) - _FIELD_NAMES
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for key, val in vars(args).items():
        if key in _FIELD_NAMES and val is not None:
            values[key] = val
    values["experiment"] = args.experiment
    values["cache_dir"] = resolve_cache_dir(args.cache_dir, values.get("cache_dir"),
                                            os.path.join(values.get("output_dir", "weyl_lab_out"), ".cache"))
    return ExperimentConfig(**values).validate()


# ---------------------------------------------------------------- runners


def _run_sphere_spectrum(cfg, out, cache):
    report, summary = experiments.sphere_spectrum(cfg.n, cfg.r, cfg.kmax, cfg.p_grid)
    io.write_spectrum_csv(report, os.path.join(out, "spectrum.csv"))
    io.write_json(os.path.join(out, "fit.json"), summary)
    return summary


def _run_plancherel(cfg, out, cache):
    A, summary = experiments.plancherel(cfg.K, cfg.extent, cfg.spacing, cache)
    io.save_operator(A, os.path.join(out, "operator.wlop"))
    io.write_json(os.path.join(out, "plancherel.json"), {**summary, "basis": io.basis_metadata(A.basis)})
    return summary


def _run_covariance(cfg, out, cache):
    summary = experiments.covariance_draws(cfg.n, cfg.K, cfg.draws, cfg.seed)
    io.write_json(os.path.join(out, "covariance.json"), summary)
    return {"max_residual": summary["max_residual"], "draws": cfg.draws}


def _run_difference_eq(cfg, out, cache):
    summary = experiments.difference_equation(cfg.n, cfg.resolution, cfg.K)
    from .hermite import basis_enumerate

    summary["basis"] = io.basis_metadata(basis_enumerate(cfg.n, cfg.K))
    io.save_stencil(eq_de_stencil(cfg.n), os.path.join(out, "stencil.json"))
    io.write_json(os.path.join(out, "residual.json"), summary)
    return summary


def _run_slice_kernel(cfg, out, cache):
    routes = experiments.kernel_routes(min(cfg.K, 6), cache=cache)
    radii, sups, decay = experiments.kernel_decay(seed=cfg.seed)
    io.write_json(os.path.join(out, "routes.json"), routes)
    io.write_decay_csv(radii, sups, decay["count"], os.path.join(out, "kernel_decay.csv"))
    io.write_json(os.path.join(out, "kernel_decay_fit.json"), decay)
    return {"routes": routes, "decay_exponent": decay["fit"]["exponent"]}


def _run_curvature(cfg, out, cache):
    rows, summary = experiments.curvature_planes(cfg.surface, cfg.planes, cfg.seed)
    lines = ["plane,max_relative_error,min_ratio"]
    lines.extend(f"{int(i)},{io._f(e)},{io._f(q)}" for i, e, q in rows)
    io.atomic_write(os.path.join(out, "curvature.csv"), ("\n".join(lines) + "\n").encode())
    summary["submersion"] = experiments.submersion_scan()
    io.write_json(os.path.join(out, "curvature.json"), summary)
    return {k: summary[k] for k in ("surface", "planes", "max_error", "min_ratio")}


def _run_decay(cfg, out, cache):
    if cfg.target == "circle":
        radii, sups, summary = experiments.circle_decay(seed=cfg.seed)
        io.write_decay_csv(radii, sups, summary["n_directions"], os.path.join(out, "decay.csv"))
        io.write_json(os.path.join(out, "decay_fit.json"), summary)
        return {"exponent": summary["fit"]["exponent"], "max_j0_error": summary["max_j0_error"]}
    radii, rows, cols, summary = experiments.kernel_mass()
    lines = ["radius,row_mass,col_mass"]
    lines.extend(f"{io._f(r)},{io._f(a)},{io._f(b)}" for r, a, b in zip(radii, rows, cols))
    io.atomic_write(os.path.join(out, "mass.csv"), ("\n".join(lines) + "\n").encode())
    io.write_json(os.path.join(out, "mass.json"), summary)
    return summary


def _run_gram(cfg, out, cache):
    summary = experiments.gram_test(cfg.K, cfg.count, cfg.seed, cache=cache)
    io.write_json(os.path.join(out, "gram.json"), summary)
    return summary


RUNNERS = {
    "sphere-spectrum": _run_sphere_spectrum,
    "plancherel": _run_plancherel,
    "covariance": _run_covariance,
    "difference-eq": _run_difference_eq,
    "slice-kernel": _run_slice_kernel,
    "curvature": _run_curvature,
    "decay": _run_decay,
    "gram": _run_gram,
}


def versions():
    return {"weyl_lab": __version__, "backend": kernels.BACKEND, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def run(cfg):
    """Run one experiment; returns (exit status, summary)."""
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    cache = OperatorCache(cfg.cache_dir, enabled=not cfg.no_cache)
    t0 = time.perf_counter()
    summary = RUNNERS[cfg.experiment](cfg, out, cache)
    wall = time.perf_counter() - t0
    produced = sorted(f for f in os.listdir(out)
                      if os.path.isfile(os.path.join(out, f)) and f not in ("manifest.json", "error.json"))
    manifest = {
        "config": asdict(cfg),
        "versions": versions(),
        "wall_time_s": wall,
        "cache": {"hits": cache.hits, "misses": cache.misses, "enabled": cache.enabled},
        "files": {f: io.file_sha256(os.path.join(out, f)) for f in produced},
        "summary": summary,
    }
    io.write_json(os.path.join(out, "manifest.json"), manifest)
    return 0, summary


def _report_error(exc, output_dir):
    code = getattr(exc, "exit_code", 1)
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(payload), file=sys.stderr)
    if output_dir:
        try:
            io.write_json(os.path.join(output_dir, "error.json"), payload)
        except OSError:
            pass
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    output_dir = args.output_dir
    try:
        cfg = resolve_config(args)
        output_dir = cfg.output_dir
        status, summary = run(cfg)
    except WeylLabError as exc:
        return _report_error(exc, output_dir)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        err = ValidationError(f"{type(exc).__name__}: {exc}")
        return _report_error(err, output_dir)
    print(io.dumps_json(summary), end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
