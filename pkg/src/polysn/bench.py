"""Benchmark harness: configs, experiment sweeps, CSV and manifest output.

An experiment is one mesh and ordinate set swept over total cross sections
(and optionally scattering ratios), running each requested iteration
variant against the coupled discrete reference.  One CSV per variant is
written, one row per (scattering ratio, cross section) pair, with full
precision so downstream plotting does not lose digits.  A JSON manifest
records the config hash, seed, and library versions for reproducibility.
"""

import configparser
import csv
import hashlib
import io
import json
import platform
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from ._version import __version__
from .dgspace import DgSpace
from .dsa import DiffusionCoefficients, DiffusionConfig, assemble_diffusion
from .mesh import Rectangle, generate_voronoi, mesh_quality
from .quadrature import trapezoidal_angular
from .solver import dsa_iteration, reference_solution, source_iteration
from .transport import (
    AssemblyCache,
    CrossSections,
    ManufacturedProblem,
    TransportSystem,
)

VARIANT_NAMES = ("none", "sip-dirichlet", "sip-marshak", "mip-dirichlet", "mip-marshak")

CSV_COLUMNS = (
    "experiment",
    "variant",
    "scalar",
    "scattering_ratio",
    "n_cells",
    "h",
    "n_ordinates",
    "degree",
    "eta",
    "spectral_radius",
    "n_iterations",
    "termination",
    "divergent",
    "error_initial",
    "error_final",
    "window",
    "reference_kind",
    "status",
    "sweep_time",
    "dsa_source_time",
    "dsa_solve_time",
    "update_time",
    "total_time",
)

DEFAULT_CONFIG = """\
[experiment]
name = baseline
; domain rectangle: xmin ymin xmax ymax
domain = 0 0 10 10
cells = 256
lloyd_iterations = 10
seed = 2025
degree = 1
ordinates = 16
; either an explicit list:  sigma_t = 0.5 10 1e4
; or a log-spaced grid:     sigma_t_log = <min> <max> <count>
sigma_t_log = 1e-3 1e6 20
scattering_ratio = 0.999
variants = none sip-dirichlet sip-marshak mip-dirichlet mip-marshak
tolerance = 1e-12
cap = 50
penalty_prefactor = 10.0
threads = 1
out_dir = results
reference_cap = 250000
"""


@dataclass
class ExperimentConfig:
    name: str = "baseline"
    domain: Rectangle = field(default_factory=lambda: Rectangle(0.0, 0.0, 10.0, 10.0))
    n_cells: int = 256
    lloyd_iterations: int = 10
    seed: int = 2025
    degree: int = 1
    n_ordinates: int = 16
    sigma_t: tuple = ()
    scattering_ratio: tuple = (0.999,)
    variants: tuple = VARIANT_NAMES
    tolerance: float = 1e-12
    cap: int = 50
    penalty_prefactor: float = 10.0
    threads: int = 1
    out_dir: str = "results"
    reference_cap: int = 250_000
    source_text: str = ""

    def __post_init__(self):
        if not self.sigma_t:
            self.sigma_t = tuple(np.logspace(-3.0, 6.0, 20))
        self.sigma_t = tuple(float(s) for s in self.sigma_t)
        self.scattering_ratio = tuple(float(c) for c in self.scattering_ratio)
        self.variants = tuple(self.variants)
        unknown = set(self.variants) - set(VARIANT_NAMES)
        if unknown:
            raise ValueError(f"unknown variants {sorted(unknown)}")
        if self.n_cells < 1 or self.cap < 1 or self.n_ordinates < 2:
            raise ValueError("cells, cap, and ordinates must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not self.variants or not self.scattering_ratio:
            raise ValueError("variant and scattering-ratio lists must be non-empty")
        if any(s <= 0.0 for s in self.sigma_t):
            raise ValueError("sigma_t values must be positive")
        if any(not 0.0 < c <= 1.0 for c in self.scattering_ratio):
            raise ValueError("scattering ratios must lie in (0, 1]")


def default_config_text():
    return DEFAULT_CONFIG


def parse_config(text):
    """Build an ExperimentConfig from INI text (section [experiment])."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_string(text)
    if "experiment" not in parser:
        raise ValueError("config needs an [experiment] section")
    sec = parser["experiment"]

    def floats(key):
        return tuple(float(t) for t in sec.get(key).split())

    kwargs = {"source_text": text}
    if "name" in sec:
        kwargs["name"] = sec.get("name")
    if "domain" in sec:
        vals = floats("domain")
        if len(vals) != 4:
            raise ValueError("domain needs 4 numbers: xmin ymin xmax ymax")
        kwargs["domain"] = Rectangle(*vals)
    for key, attr in (
        ("cells", "n_cells"),
        ("lloyd_iterations", "lloyd_iterations"),
        ("seed", "seed"),
        ("degree", "degree"),
        ("ordinates", "n_ordinates"),
        ("cap", "cap"),
        ("threads", "threads"),
        ("reference_cap", "reference_cap"),
    ):
        if key in sec:
            kwargs[attr] = sec.getint(key)
    for key, attr in (
        ("tolerance", "tolerance"),
        ("penalty_prefactor", "penalty_prefactor"),
    ):
        if key in sec:
            kwargs[attr] = sec.getfloat(key)
    if "sigma_t" in sec and "sigma_t_log" in sec:
        raise ValueError("give sigma_t or sigma_t_log, not both")
    if "sigma_t" in sec:
        kwargs["sigma_t"] = floats("sigma_t")
    elif "sigma_t_log" in sec:
        lo, hi, count = sec.get("sigma_t_log").split()
        kwargs["sigma_t"] = tuple(
            np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count))
        )
    if "scattering_ratio" in sec:
        kwargs["scattering_ratio"] = floats("scattering_ratio")
    if "variants" in sec:
        kwargs["variants"] = tuple(sec.get("variants").split())
    if "out_dir" in sec:
        kwargs["out_dir"] = sec.get("out_dir")
    return ExperimentConfig(**kwargs)


def load_config(path):
    return parse_config(Path(path).read_text())


def apply_overrides(config, out_dir=None, seed=None, threads=None, cap=None,
                    tol=None):
    """Command-line overrides on top of a parsed config."""
    updates = {}
    if out_dir is not None:
        updates["out_dir"] = str(out_dir)
    if seed is not None:
        updates["seed"] = int(seed)
    if threads is not None:
        updates["threads"] = int(threads)
    if cap is not None:
        updates["cap"] = int(cap)
    if tol is not None:
        updates["tolerance"] = float(tol)
    return replace(config, **updates) if updates else config


def _variant_report(variant, system, config, reference):
    if variant == "none":
        return source_iteration(
            system,
            tol=config.tolerance,
            cap=config.cap,
            reference=reference,
            threads=config.threads,
        )
    kind, boundary = variant.split("-")
    coeffs = DiffusionCoefficients.from_cross_sections(system.xs)
    dconf = DiffusionConfig(
        variant=kind, boundary=boundary, prefactor=config.penalty_prefactor
    )
    operator = assemble_diffusion(
        system.mesh, system.space, coeffs, dconf, system.quad
    )
    return dsa_iteration(
        system,
        operator,
        tol=config.tolerance,
        cap=config.cap,
        reference=reference,
        threads=config.threads,
    )


def run_experiment(config, progress=None):
    """All variant runs for one config; returns a list of row dicts."""
    mesh = generate_voronoi(
        config.domain, config.n_cells, seed=config.seed,
        lloyd_iterations=config.lloyd_iterations,
    )
    quality = mesh_quality(mesh, inscribed=False)
    eta = quality.summary["max_anisotropy"]
    space = DgSpace(mesh, config.degree)
    quad = trapezoidal_angular(config.n_ordinates)
    problem = ManufacturedProblem(quad)
    cache = AssemblyCache(mesh, space)

    rows = []
    for c in config.scattering_ratio:
        for sigma_t in config.sigma_t:
            xs = CrossSections.homogeneous(mesh.n_cells, sigma_t, c)
            system = TransportSystem(mesh, space, xs, quad, problem, cache=cache)
            try:
                reference = reference_solution(system, config.reference_cap)
                ref_err = None
            except Exception as err:  # keep sweeping the grid
                reference = None
                ref_err = f"reference failed: {err}"
            for variant in config.variants:
                row = {
                    "experiment": config.name,
                    "variant": variant,
                    "scalar": sigma_t,
                    "scattering_ratio": c,
                    "n_cells": mesh.n_cells,
                    "h": mesh.h,
                    "n_ordinates": len(quad),
                    "degree": config.degree,
                    "eta": eta,
                    "spectral_radius": np.nan,
                    "n_iterations": 0,
                    "termination": "",
                    "divergent": 0,
                    "error_initial": np.nan,
                    "error_final": np.nan,
                    "window": 0,
                    "reference_kind": reference.kind if reference else "",
                    "status": "ok",
                    "sweep_time": 0.0,
                    "dsa_source_time": 0.0,
                    "dsa_solve_time": 0.0,
                    "update_time": 0.0,
                    "total_time": 0.0,
                }
                if ref_err is not None:
                    row["status"] = ref_err
                    rows.append(row)
                    continue
                t0 = time.perf_counter()
                try:
                    report = _variant_report(variant, system, config, reference)
                    row["spectral_radius"] = report.rho
                    row["n_iterations"] = report.n_iterations
                    row["termination"] = report.termination
                    row["divergent"] = int(report.divergent)
                    if report.errors is not None and len(report.errors):
                        row["error_initial"] = report.errors[0]
                        row["error_final"] = report.errors[-1]
                    row["window"] = report.window
                    for phase in ("sweep", "dsa_source", "dsa_solve", "update"):
                        row[f"{phase}_time"] = report.timings.get(phase, 0.0)
                except Exception as err:
                    row["status"] = f"error: {err}"
                row["total_time"] = time.perf_counter() - t0
                rows.append(row)
                if progress is not None:
                    progress(row)
    return rows


def _format(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_csv(rows, path):
    """Write rows (possibly none) to one CSV file, 17-digit floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format(row[c]) for c in CSV_COLUMNS])
    return path


def write_variant_csvs(rows, out_dir, name):
    """One CSV per variant, rows kept in sweep order; returns written paths."""
    out = Path(out_dir)
    variants = []
    for row in rows:
        if row["variant"] not in variants:
            variants.append(row["variant"])
    return [
        emit_csv(
            [row for row in rows if row["variant"] == variant],
            out / f"{name}_{variant}.csv",
        )
        for variant in variants
    ]


def write_manifest(config, out_dir, extra=None):
    """JSON provenance record: config hash, seed, versions, timestamp."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = config.source_text or repr(config)
    manifest = {
        "experiment": config.name,
        "config_sha256": hashlib.sha256(source.encode()).hexdigest(),
        "seed": config.seed,
        "versions": {
            "polysn": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        manifest.update(extra)
    path = out / f"{config.name}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def mesh_stats(config, inscribed=True):
    """Mesh quality summary for the config's mesh (no solves)."""
    mesh = generate_voronoi(
        config.domain, config.n_cells, seed=config.seed,
        lloyd_iterations=config.lloyd_iterations,
    )
    quality = mesh_quality(mesh, inscribed=inscribed)
    stats = dict(quality.summary)
    stats["n_vertices"] = mesh.n_vertices
    stats["n_facets"] = mesh.n_facets
    return stats
