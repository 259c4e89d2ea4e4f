"""Discretized coupled two-block eigenproblem: grids, operators, dense oracle.

The central object is ExistenceProblem, a Hermitian operator on the tensor
product of two 1D grids, H = h_e (x) I + I (x) h_g + diag(V).  full_spectrum
is the brute-force diagonalization oracle that every reduced method in the
package is checked against.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, NormalizationError, OracleScaleError

DEFAULT_ORACLE_CAP = 4096
HERMITICITY_ATOL = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """Action quantum, speed scale and inertial mass. Natural units by default."""

    hbar: float = 1.0
    c: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.c > 0 and self.mass > 0):
            raise ConfigurationError("hbar, c and mass must all be positive")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar


@dataclass(frozen=True)
class Grid:
    """Uniform 1D grid with n points on [min, max]."""

    n: int
    min: float
    max: float

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError(f"grid needs at least 2 points, got {self.n}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ConfigurationError("grid bounds must be finite")
        if not self.max > self.min:
            raise ConfigurationError("grid max must exceed min")

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = np.linspace(self.min, self.max, self.n)
        pts.setflags(write=False)
        return pts


def build_grid(n: int, lo: float, hi: float) -> Grid:
    """Uniform grid; spacing = (hi - lo)/(n - 1)."""
    return Grid(n=int(n), min=float(lo), max=float(hi))


class HermitianOperator:
    """Dense complex Hermitian matrix, validated at construction."""

    def __init__(self, matrix):
        mat = np.asarray(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ConfigurationError(f"operator must be square, got shape {mat.shape}")
        scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
        if not np.allclose(mat, mat.conj().T, rtol=0.0, atol=HERMITICITY_ATOL * scale):
            raise ConfigurationError("operator is not Hermitian within relative 1e-12")
        # symmetrize away the allowed sub-1e-12 noise so eigh sees an exact Hermitian
        mat = 0.5 * (mat + mat.conj().T)
        mat.setflags(write=False)
        self.matrix = mat

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def norm(self) -> float:
        """Spectral norm (dense; desk-scale operators only)."""
        return float(np.linalg.norm(self.matrix, 2))

    def __matmul__(self, other):
        return self.matrix @ other


@dataclass(frozen=True)
class WaveField:
    """Complex amplitudes on a grid (or product grid) with a norm convention.

    The discrete norm is sum(|psi|^2) * measure, where measure is the grid
    spacing (product of spacings on a product grid).
    """

    amplitudes: np.ndarray
    measure: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized:
            nrm = self.norm()
            if abs(nrm - 1.0) > 1e-10:
                raise NormalizationError(f"field norm {nrm} != 1 within 1e-10")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2).real * self.measure)

    @staticmethod
    def normalize(amplitudes, measure: float = 1.0) -> "WaveField":
        amps = np.asarray(amplitudes, dtype=complex)
        nrm = math.sqrt(float(np.sum(np.abs(amps) ** 2).real * measure))
        if nrm == 0.0:
            raise NormalizationError("cannot normalize the zero field")
        return WaveField(amps / nrm, measure=measure, normalized=True)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) with orthonormal eigenstates."""

    eigenvalues: np.ndarray
    eigenstates: list  # list[WaveField], same order

    def __len__(self):
        return len(self.eigenvalues)

    def __iter__(self):
        return zip(self.eigenvalues, self.eigenstates)


def build_kinetic(grid: Grid, constants: PhysicalConstants, bc: str = "dirichlet") -> HermitianOperator:
    """-hbar^2/(2m) times the three-point second difference on the grid.

    bc is "dirichlet" (hard wall, default) or "periodic".
    """
    n, s = grid.n, grid.spacing
    coef = constants.hbar**2 / (2.0 * constants.mass * s * s)
    mat = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    mat[idx, idx] = 2.0 * coef
    mat[idx[:-1], idx[1:]] = -coef
    mat[idx[1:], idx[:-1]] = -coef
    if bc == "periodic":
        mat[0, n - 1] = -coef
        mat[n - 1, 0] = -coef
    elif bc != "dirichlet":
        raise ConfigurationError(f"unknown boundary condition {bc!r}")
    return HermitianOperator(mat)


def second_difference(psi: np.ndarray, spacing: float, bc: str = "dirichlet") -> np.ndarray:
    """Three-point second difference of a 1D field, matching build_kinetic."""
    psi = np.asarray(psi, dtype=complex)
    if bc == "periodic":
        return (np.roll(psi, -1) - 2.0 * psi + np.roll(psi, 1)) / spacing**2
    padded = np.concatenate(([0.0], psi, [0.0]))
    return (padded[2:] - 2.0 * psi + padded[:-2]) / spacing**2


@dataclass(frozen=True)
class Hamiltonian1D:
    """Kinetic + diagonal potential on a single grid."""

    grid: Grid
    potential: np.ndarray
    constants: PhysicalConstants
    bc: str = "dirichlet"

    def __post_init__(self):
        pot = np.asarray(self.potential, dtype=float)
        if pot.shape != (self.grid.n,):
            raise ConfigurationError(
                f"potential shape {pot.shape} does not match grid size {self.grid.n}"
            )
        pot.setflags(write=False)
        object.__setattr__(self, "potential", pot)

    @cached_property
    def operator(self) -> HermitianOperator:
        kin = build_kinetic(self.grid, self.constants, bc=self.bc)
        return HermitianOperator(kin.matrix + np.diag(self.potential))


@dataclass(frozen=True)
class ExistenceProblem:
    """Coupled two-block Hermitian eigenproblem on a product grid.

    Full operator (built on demand): H = h_e (x) I + I (x) h_g + diag(V),
    with flattening index q_i * n_xi + xi_j (C order of the coupling array).
    """

    grid_q: Grid
    grid_xi: Grid
    h_e: HermitianOperator
    h_g: HermitianOperator
    coupling: np.ndarray
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.h_e.dimension != self.grid_q.n or self.h_g.dimension != self.grid_xi.n:
            raise ConfigurationError("block dimensions do not match their grids")
        cpl = np.asarray(self.coupling, dtype=float)
        if cpl.shape != (self.grid_q.n, self.grid_xi.n):
            raise ConfigurationError(
                f"coupling shape {cpl.shape} != ({self.grid_q.n}, {self.grid_xi.n})"
            )
        cpl.setflags(write=False)
        object.__setattr__(self, "coupling", cpl)

    @property
    def dimension(self) -> int:
        return self.grid_q.n * self.grid_xi.n

    @property
    def measure(self) -> float:
        return self.grid_q.spacing * self.grid_xi.spacing

    @cached_property
    def full_operator(self) -> HermitianOperator:
        nq, nxi = self.grid_q.n, self.grid_xi.n
        full = np.kron(self.h_e.matrix, np.eye(nxi)) + np.kron(np.eye(nq), self.h_g.matrix)
        full += np.diag(self.coupling.ravel())
        return HermitianOperator(full)


def assemble_existence(h_e, h_g, coupling, constants=None, grid_q=None, grid_xi=None) -> ExistenceProblem:
    """Bundle two Hermitian blocks and a diagonal coupling into a problem.

    Grids default to unit-spacing index grids when not supplied (abstract,
    matrix-valued problems).
    """
    if not isinstance(h_e, HermitianOperator):
        h_e = HermitianOperator(h_e)
    if not isinstance(h_g, HermitianOperator):
        h_g = HermitianOperator(h_g)
    constants = constants or PhysicalConstants()
    if grid_q is None:
        grid_q = Grid(h_e.dimension, 0.0, float(h_e.dimension - 1)) if h_e.dimension >= 2 else None
    if grid_xi is None:
        grid_xi = Grid(h_g.dimension, 0.0, float(h_g.dimension - 1)) if h_g.dimension >= 2 else None
    if grid_q is None or grid_xi is None:
        raise ConfigurationError("blocks must be at least 2x2 or grids given explicitly")
    return ExistenceProblem(
        grid_q=grid_q, grid_xi=grid_xi, h_e=h_e, h_g=h_g,
        coupling=coupling, constants=constants,
    )


def oracle_cap(explicit=None) -> int:
    if explicit is not None:
        return int(explicit)
    return int(os.environ.get("EPDYN_ORACLE_CAP", DEFAULT_ORACLE_CAP))


def full_spectrum(problem, cap=None, measure=None) -> Spectrum:
    """All eigenpairs of the full operator by dense diagonalization.

    Accepts an ExistenceProblem, a Hamiltonian1D, or a HermitianOperator.
    The brute-force oracle: O(dim^3), refused above the cap (default 4096,
    override via EPDYN_ORACLE_CAP or the cap argument).
    """
    if isinstance(problem, ExistenceProblem):
        op, meas = problem.full_operator, problem.measure
    elif isinstance(problem, Hamiltonian1D):
        op, meas = problem.operator, problem.grid.spacing
    elif isinstance(problem, HermitianOperator):
        op, meas = problem, 1.0
    else:
        op, meas = HermitianOperator(problem), 1.0
    if measure is not None:
        meas = measure
    cap = oracle_cap(cap)
    if op.dimension > cap:
        raise OracleScaleError(
            f"dimension {op.dimension} exceeds oracle cap {cap}"
        )
    evals, evecs = np.linalg.eigh(op.matrix)
    scale = 1.0 / math.sqrt(meas)
    states = [
        WaveField(evecs[:, k] * scale, measure=meas, normalized=True)
        for k in range(op.dimension)
    ]
    evals = np.asarray(evals, dtype=float)
    evals.setflags(write=False)
    return Spectrum(eigenvalues=evals, eigenstates=states)


def expectation_energy(psi, hamiltonian: Hamiltonian1D):
    """Kinetic, potential and total energy expectation of a normalized 1D field.

    K = -(hbar^2/2m) * sum(psi* D2 psi) * spacing with the same stencil and
    boundary condition as the Hamiltonian, so K + V_psi equals <psi|H|psi>.
    """
    if isinstance(psi, WaveField):
        amps, meas = psi.amplitudes, psi.measure
    else:
        amps, meas = np.asarray(psi, dtype=complex), hamiltonian.grid.spacing
    nrm = float(np.sum(np.abs(amps) ** 2).real * meas)
    if abs(nrm - 1.0) > 1e-10:
        raise NormalizationError(f"field norm {nrm} != 1 within 1e-10")
    consts = hamiltonian.constants
    d2 = second_difference(amps, hamiltonian.grid.spacing, bc=hamiltonian.bc)
    kinetic = float(
        (-(consts.hbar**2) / (2.0 * consts.mass)
         * np.sum(np.conj(amps) * d2) * meas).real
    )
    v_psi = float((np.sum(np.conj(amps) * hamiltonian.potential * amps) * meas).real)
    return kinetic, v_psi, kinetic + v_psi
