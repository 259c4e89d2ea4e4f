"""Command-line front end.

Subcommands: spectrum, ep-roots, hop, evolve, verify.  Exit codes:
0 success, 2 config error, 3 completeness warning, 4 check failure,
5 runtime blow-up.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import configio
from .core import Hamiltonian1D, WaveField, full_spectrum
from .effective import (
    cluster_realisations,
    enumerate_roots,
    make_partition,
    root_centroid,
)
from .errors import (
    BlowUpError,
    CompletenessWarning,
    ConfigurationError,
    EpdynError,
    StepSizeError,
)
from .hopping import empirical_frequencies, kinematic_observables, simulate_hops
from .quantization import assemble_schrodinger
from .universal import PDEState, build_universal_pde, step_pde

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPLETENESS = 3
EXIT_CHECK_FAILED = 4
EXIT_BLOWUP = 5


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spectrum(args) -> int:
    cfg = configio.load_config(args.config)
    problem = configio.build_problem(cfg)
    spec = full_spectrum(problem)
    out = _out_dir(args) / "spectrum.csv"
    configio.write_csv(out, "index,eigenvalue",
                       [(i, e) for i, e in enumerate(spec.eigenvalues)])
    print(f"wrote {len(spec)} eigenvalues to {out}")
    return EXIT_OK


def cmd_ep_roots(args) -> int:
    cfg = configio.load_config(args.config)
    problem = configio.build_problem(cfg)
    partition = make_partition(problem, configio.partition_selector(cfg))
    scan = cfg.get("scan", {})
    incomplete = False
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CompletenessWarning)
        roots = enumerate_roots(
            partition,
            e_min=scan.get("e_min"), e_max=scan.get("e_max"),
            scan_points=scan.get("points"), tol=scan.get("tol"),
        )
        incomplete = any(issubclass(w.category, CompletenessWarning) for w in caught)
    ensemble = cluster_realisations(roots, partition, width=cfg.get("cluster_width", 0.0))

    cluster_of = {}
    for ci, real in enumerate(ensemble.realisations):
        for member in real.members:
            cluster_of[member.branch_id] = ci
    rows = []
    for r in roots:
        ci = cluster_of[r.branch_id]
        alpha = ensemble.probabilities[ci]
        rows.append((r.branch_id, r.energy, r.residual, root_centroid(r, partition),
                     ci, ensemble.realisations[ci].elementary_count,
                     alpha.numerator, alpha.denominator))
    out = _out_dir(args) / "roots.csv"
    configio.write_csv(out, "branch_id,E,residual,centroid,cluster_id,N_r,alpha_num,alpha_den", rows)

    decoupled = partition.decoupled_poles()
    if len(decoupled):
        configio.write_csv(_out_dir(args) / "decoupled_poles.csv", "index,eigenvalue",
                           [(i, e) for i, e in enumerate(decoupled)])
    total = len(roots) + len(decoupled)
    print(f"{len(roots)} roots + {len(decoupled)} decoupled poles "
          f"= {total} of dimension {partition.dimension}")
    if problem.dimension <= 4096:
        oracle = full_spectrum(problem)
        combined = np.sort(np.concatenate([[r.energy for r in roots], decoupled]))
        if total == partition.dimension:
            dev = float(np.max(np.abs(combined - oracle.eigenvalues)))
            print(f"max |E_EP - E_oracle| = {dev:.3e}")
    if incomplete:
        print("completeness warning: scan missed roots", file=sys.stderr)
        return EXIT_COMPLETENESS
    return EXIT_OK


def cmd_hop(args) -> int:
    cfg = configio.load_config(args.config)
    ensemble = configio.build_synthetic_ensemble(cfg)
    if ensemble is None:
        problem = configio.build_problem(cfg)
        partition = make_partition(problem, configio.partition_selector(cfg))
        roots = enumerate_roots(partition, check_completeness=False)
        ensemble = cluster_realisations(roots, partition, width=cfg.get("cluster_width", 0.0))
    config = configio.build_hop_config(cfg, seed_override=args.seed)
    trajectory = simulate_hops(ensemble, config)
    out = _out_dir(args)
    configio.write_csv(
        out / "trajectory.csv", "step,realisation,centroid",
        [(k + 1, int(i), c) for k, (i, c) in
         enumerate(zip(trajectory.indices, trajectory.centroids))],
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stats = empirical_frequencies(trajectory, ensemble)
    kin = kinematic_observables(stats, configio.parse_constants(cfg), config)

    def finite_or_none(x):
        return x if math.isfinite(x) else None

    configio.write_json(out / "stats.json", {
        "frequencies": stats.frequencies.tolist(),
        "counts": stats.counts.tolist(),
        "v": stats.drift_velocity,
        "lambda": stats.mean_jump_length,
        "E": kin.energy,
        "p": finite_or_none(kin.momentum),
        "lambda_B": finite_or_none(kin.de_broglie_length),
        "frozen_at": trajectory.frozen_at,
        "sigma_bounds": [
            3.0 * math.sqrt(float(a) * (1.0 - float(a)) / config.steps)
            for a in ensemble.probabilities
        ],
    })
    print(f"frequencies {np.array2string(stats.frequencies, precision=5)}"
          f" frozen_at={trajectory.frozen_at}")
    return EXIT_OK


def _initial_field(spec: dict, grid, ham: Hamiltonian1D | None):
    x = grid.points
    family = spec.get("family", "gaussian")
    if family == "gaussian":
        x0 = spec.get("center", 0.5 * (grid.min + grid.max))
        w = spec.get("width", 0.1 * (grid.max - grid.min))
        k0 = spec.get("momentum", 0.0)
        amps = np.exp(-((x - x0) ** 2) / (2.0 * w * w)) * np.exp(1j * k0 * x)
        return WaveField.normalize(amps, measure=grid.spacing).amplitudes
    if family == "eigenstate":
        if ham is None:
            raise ConfigurationError("eigenstate initial field needs a linear problem")
        k = spec.get("index", 0)
        return full_spectrum(ham).eigenstates[k].amplitudes
    if family == "uniform":
        return np.full(grid.n, complex(spec.get("value", 1.0)))
    if family == "zero":
        return np.zeros(grid.n, dtype=complex)
    raise ConfigurationError(f"unknown initial family {family!r}")


def cmd_evolve(args) -> int:
    cfg = configio.load_config(args.config)
    section = cfg.get("evolve")
    if section is None:
        raise ConfigurationError("config has no evolve section")
    constants = configio.parse_constants(cfg)
    grid = configio.grid_from_config(section.get("grid", {"n": 200, "min": 0.0, "max": 1.0}))
    dt, n_steps = section["dt"], section["steps"]
    frame_every = section.get("frame_every", max(1, n_steps // 10))
    out = _out_dir(args)

    potential = configio.potential_values(section.get("potential", {"family": "box"}), grid)
    ham = Hamiltonian1D(grid=grid, potential=potential, constants=constants)
    psi0 = _initial_field(section.get("initial", {"family": "gaussian"}), grid, ham)

    frames = [(0.0, psi0)]
    if section["kind"] == "linear":
        propagator = assemble_schrodinger(grid, potential, constants)
        psi = psi0
        for block in range(0, n_steps, frame_every):
            m = min(frame_every, n_steps - block)
            psi = propagator.step(psi, dt, m)
            frames.append(((block + m) * dt, psi))
    else:
        spec = configio.build_pde_spec(section["pde"])
        stepper = build_universal_pde(spec, grid)
        state = PDEState(values=psi0, dt=dt)
        for block in range(0, n_steps, frame_every):
            m = min(frame_every, n_steps - block)
            state = step_pde(state, stepper, m)
            frames.append((state.time, state.values))
        if section.get("cross_check"):
            propagator = assemble_schrodinger(grid, potential, constants)
            ref = propagator.step(psi0, dt, n_steps)
            dev = float(np.max(np.abs(frames[-1][1] - ref)))
            print(f"cross-check max deviation vs linear propagator: {dev:.3e}")

    rows = []
    for t, psi in frames:
        for xi, v in zip(grid.points, psi):
            rows.append((t, xi, v.real, v.imag, abs(v) ** 2))
    configio.write_csv(out / "frames.csv", "t,x,re,im,abs2", rows)
    print(f"wrote {len(frames)} frames to {out / 'frames.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    results = verify.run_suite(suite=args.suite)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    configio.write_json(out / "verify.json", [r.as_dict() for r in results])
    for r in results:
        print(r.summary_line())
    n_fail = sum(not r.passed for r in results)
    total = sum(r.runtime for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed in {total:.1f}s")
    return EXIT_OK if n_fail == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epdyn")
    parser.add_argument("--config", help="JSON problem configuration")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS threads (determinism aid)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", help="dense oracle spectrum to CSV")
    sub.add_parser("ep-roots", help="enumerate EP roots and realisations")
    sub.add_parser("hop", help="simulate realisation hopping")
    sub.add_parser("evolve", help="propagate a linear or universal PDE member")
    pv = sub.add_parser("verify", help="run the acceptance verification suite")
    pv.add_argument("--suite", default="all",
                    choices=["all", "ep", "hop", "quantize", "universal", "cli"])
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "ep-roots": cmd_ep_roots,
    "hop": cmd_hop,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
}

NEEDS_CONFIG = {"spectrum", "ep-roots", "hop", "evolve"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    if args.command in NEEDS_CONFIG and not args.config:
        print("error: --config is required for this command", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, StepSizeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except EpdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
