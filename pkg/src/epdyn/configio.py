"""JSON problem configs and deterministic CSV/JSON emission.

Configs validate against the published schema (schema.json next to this
module).  All numeric output is formatted with 17 significant digits so that
seeded reruns are byte-identical.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .core import (
    Grid,
    PhysicalConstants,
    build_grid,
    build_kinetic,
    assemble_existence,
    HermitianOperator,
)
from .effective import ensemble_from_probabilities
from .errors import ConfigurationError
from .hopping import HopConfig
from .universal import HamiltonianSpec, Term


def _schema():
    with resources.files("epdyn").joinpath("schema.json").open() as fh:
        return json.load(fh)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"{path}: invalid at {where}: {exc.message}") from exc
    return cfg


def grid_from_config(section: dict) -> Grid:
    return build_grid(section["n"], section["min"], section["max"])


def parse_constants(cfg: dict) -> PhysicalConstants:
    c = cfg.get("constants", {})
    return PhysicalConstants(hbar=c.get("hbar", 1.0), c=c.get("c", 1.0),
                             mass=c.get("mass", 1.0))


def _to_complex_matrix(rows):
    def cell(v):
        if isinstance(v, (list, tuple)):
            return complex(v[0], v[1])
        return complex(v)
    return np.array([[cell(v) for v in row] for row in rows])


def _to_scalar(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return v


def potential_values(spec: dict, grid: Grid) -> np.ndarray:
    family = spec["family"]
    x = grid.points
    if family == "box":
        return np.zeros(grid.n)
    if family == "harmonic":
        k = spec.get("strength", 1.0)
        x0 = spec.get("center", 0.5 * (grid.min + grid.max))
        return 0.5 * k * (x - x0) ** 2
    if family == "constant":
        return np.full(grid.n, spec.get("value", 0.0))
    if family == "gaussian":
        x0 = spec.get("center", 0.5 * (grid.min + grid.max))
        w = spec.get("width", 1.0)
        return spec.get("strength", 1.0) * np.exp(-((x - x0) / w) ** 2)
    if family == "tabulated":
        vals = np.asarray(spec["values"], dtype=float)
        if vals.shape != (grid.n,):
            raise ConfigurationError("tabulated potential length mismatch")
        return vals
    raise ConfigurationError(f"unknown potential family {family!r}")


def coupling_values(spec: dict, grid_q: Grid, grid_xi: Grid) -> np.ndarray:
    family = spec["family"]
    if family == "zero":
        return np.zeros((grid_q.n, grid_xi.n))
    if family == "constant":
        return np.full((grid_q.n, grid_xi.n), spec.get("value", 0.0))
    if family == "separable_gaussian":
        scale = spec.get("scale", 1.0)
        wq = spec.get("width_q", 1.0)
        wxi = spec.get("width_xi", 1.0)
        q0 = 0.5 * (grid_q.min + grid_q.max)
        xi0 = 0.5 * (grid_xi.min + grid_xi.max)
        fq = np.exp(-(((grid_q.points - q0) / wq) ** 2))
        fxi = np.exp(-(((grid_xi.points - xi0) / wxi) ** 2))
        return scale * np.outer(fq, fxi)
    if family == "tabulated":
        vals = np.asarray(spec["values"], dtype=float)
        if vals.shape != (grid_q.n, grid_xi.n):
            raise ConfigurationError("tabulated coupling shape mismatch")
        return vals
    raise ConfigurationError(f"unknown coupling family {family!r}")


def build_problem(cfg: dict):
    """ExistenceProblem from the config's problem section."""
    section = cfg.get("problem")
    if section is None:
        raise ConfigurationError("config has no problem section")
    constants = parse_constants(cfg)
    if "matrix" in section:
        mats = section["matrix"]
        h_e = HermitianOperator(_to_complex_matrix(mats["h_e"]))
        h_g = HermitianOperator(_to_complex_matrix(mats["h_g"]))
        coupling = np.real(_to_complex_matrix(mats["coupling"]))
        return assemble_existence(h_e, h_g, coupling, constants=constants)
    try:
        grid_q = grid_from_config(section["grid_q"])
        grid_xi = grid_from_config(section["grid_xi"])
    except KeyError as exc:
        raise ConfigurationError(f"problem section missing {exc}") from exc
    bc = section.get("boundary", "dirichlet")
    vq = potential_values(section.get("potential_q", {"family": "box"}), grid_q)
    vxi = potential_values(section.get("potential_xi", {"family": "box"}), grid_xi)
    h_e = HermitianOperator(build_kinetic(grid_q, constants, bc=bc).matrix + np.diag(vq))
    h_g = HermitianOperator(build_kinetic(grid_xi, constants, bc=bc).matrix + np.diag(vxi))
    coupling = coupling_values(section.get("coupling", {"family": "zero"}), grid_q, grid_xi)
    return assemble_existence(h_e, h_g, coupling, constants=constants,
                              grid_q=grid_q, grid_xi=grid_xi)


def partition_selector(cfg: dict):
    section = cfg.get("partition", {})
    if section.get("selector", "xi-channel") == "indices":
        return section["indices"]
    return None  # default xi ground channel


def build_hop_config(cfg: dict, seed_override=None) -> HopConfig:
    h = cfg.get("hop", {})
    seed = seed_override if seed_override is not None else h.get("seed", 0)
    return HopConfig(
        regime=h.get("regime", "chaos"),
        steps=h.get("steps", 1000),
        seed=int(seed),
        tau=h.get("tau", 1.0),
        localization_threshold=h.get("localization_threshold", 0.0),
    )


def build_synthetic_ensemble(cfg: dict):
    """Hop ensemble declared directly in the config, if present."""
    h = cfg.get("hop", {})
    if "probabilities" not in h:
        return None
    probs = h["probabilities"]
    centroids = h.get("centroids")
    widths = h.get("widths")
    densities = None
    if widths is not None:
        # realisations with a declared RMS width, as two-point densities
        cents = np.asarray(centroids, dtype=float)
        coords = np.sort(np.unique(np.concatenate([cents - widths, cents + widths, cents])))
        densities = []
        for c, w in zip(cents, widths):
            rho = np.zeros(len(coords))
            if w == 0.0:
                rho[int(np.argmin(np.abs(coords - c)))] = 1.0
            else:
                rho[int(np.argmin(np.abs(coords - (c - w))))] = 0.5
                rho[int(np.argmin(np.abs(coords - (c + w))))] = 0.5
            densities.append(rho)
        return ensemble_from_probabilities(probs, centroids=cents, densities=densities,
                                           coordinates=coords)
    return ensemble_from_probabilities(probs, centroids=centroids)


def build_pde_spec(section: dict) -> HamiltonianSpec:
    terms = tuple(
        Term(m=t["m"], n=t["n"], coefficient=_to_scalar(t["coeff"]))
        for t in section["terms"]
    )
    return HamiltonianSpec(
        terms=terms,
        a0=_to_scalar(section.get("a0", 1.0)),
        wave_like=section.get("wave_like", False),
        boundary=section.get("boundary", "periodic"),
    )


def fmt(x) -> str:
    """Fixed 17-significant-digit formatting for deterministic output."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def write_json(path, payload) -> None:
    def default(obj):
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(f"not JSON serializable: {type(obj)}")

    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")
