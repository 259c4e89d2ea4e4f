"""Generalized Hamilton-Jacobi residuals and the configurable PDE family.

One family member is a coefficient table h_mn over (psi-power m, derivative
order n); the evolution law is

    dpsi/dt + sum_{n>0,m} h_mn psi^m d^n psi/dx^n + sum_m h_m0 psi^(m+1) = 0,

integrated by explicit RK4 over a method-of-lines central-difference
discretization.  With h_02 = -i hbar/(2 m) and h_00 = i V / hbar the member
is the linear Schrodinger equation and must agree with the implicit
propagator; that reduction is the module's load-bearing check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import Grid
from .errors import BlowUpError, ConfigurationError, NodeSingularityError, StepSizeError
from .quantization import NODE_EPS, QuantizationRule

MAX_DERIVATIVE_ORDER = 4
RK4_STABILITY_CONSTANT = 2.5


@dataclass(frozen=True)
class Term:
    """One expansion term: coefficient * psi^m * d^n psi / dx^n."""

    m: int
    n: int
    coefficient: object  # complex scalar, array over x, or name of a profile

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ConfigurationError("term powers must be nonnegative")
        if self.n > MAX_DERIVATIVE_ORDER:
            raise ConfigurationError(
                f"derivative order {self.n} above the configured max {MAX_DERIVATIVE_ORDER}"
            )


# named coefficient profiles over x, kept deliberately small: no expression parser
PROFILES = {
    "harmonic": lambda x: 0.5 * x**2,
    "gaussian": lambda x: np.exp(-(x**2)),
    "box": lambda x: np.zeros_like(x),
}


@dataclass(frozen=True)
class HamiltonianSpec:
    """Coefficient table defining one member of the PDE family."""

    terms: tuple
    a0: complex = 1.0
    wave_like: bool = False
    boundary: str = "periodic"

    def __post_init__(self):
        terms = tuple(t if isinstance(t, Term) else Term(**t) for t in self.terms)
        if not terms:
            raise ConfigurationError("spec needs at least one term")
        object.__setattr__(self, "terms", terms)
        if self.boundary not in ("periodic", "dirichlet"):
            raise ConfigurationError(f"unknown boundary {self.boundary!r}")


def linear_schrodinger_spec(potential, constants) -> HamiltonianSpec:
    """The member reproducing the linear equation (A0 = -i*hbar folding)."""
    hbar, m = constants.hbar, constants.mass
    v = np.asarray(potential, dtype=float)
    return HamiltonianSpec(
        terms=(
            Term(m=0, n=2, coefficient=-1j * hbar / (2.0 * m)),
            Term(m=0, n=0, coefficient=1j * v / hbar),
        ),
        a0=-1j * hbar,
        wave_like=True,
        boundary="dirichlet",
    )


@dataclass(frozen=True)
class ActionField:
    """Real action values A(x_i, t_k) on a space grid times a time sequence."""

    values: np.ndarray  # (n_t, n_x) or (n_x,) for stationary fields
    dx: float
    dt: float = 1.0
    x0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.isfinite(vals).all():
            raise ConfigurationError("action values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PDEState:
    """Field at the current time plus step controls."""

    values: np.ndarray
    dt: float
    time: float = 0.0
    diagnostics: tuple = ()  # (step, norm, max amplitude) triples

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if not np.isfinite(vals.view(float)).all():
            raise ConfigurationError("state values must be finite")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def hj_residual(h_eval: Callable, action: ActionField) -> np.ndarray:
    """Residual of dA/dt + H(x, dA/dx, t) at interior points (central stencils).

    h_eval(x, p, t) must broadcast over arrays.  Returns shape
    (n_t - 2, n_x - 2), interior of the space-time grid.
    """
    a = action.values
    if a.ndim != 2:
        raise ConfigurationError("time-dependent residual needs a 2D action field")
    da_dt = (a[2:, 1:-1] - a[:-2, 1:-1]) / (2.0 * action.dt)
    da_dx = (a[1:-1, 2:] - a[1:-1, :-2]) / (2.0 * action.dx)
    n_t, n_x = a.shape
    x = action.x0 + np.arange(1, n_x - 1) * action.dx
    t = action.t0 + np.arange(1, n_t - 1) * action.dt
    xs, ts = np.meshgrid(x, t)
    return da_dt + h_eval(xs, da_dx, ts)


def hj_stationary_residual(h_eval: Callable, action: ActionField, energy: float) -> np.ndarray:
    """Residual of H(x, dA/dx) - E for a stationary 1D action field."""
    a = action.values
    if a.ndim != 1:
        raise ConfigurationError("stationary residual needs a 1D action field")
    da_dx = (a[2:] - a[:-2]) / (2.0 * action.dx)
    x = action.x0 + np.arange(1, len(a) - 1) * action.dx
    return h_eval(x, da_dx) - energy


def causal_quantize(delta_action: float, psi_value: complex, delta_psi: complex,
                    rule: QuantizationRule) -> complex:
    """Residual of the generalized quantization relation dA = -A0 dpsi/psi.

    Returns delta_action + coeff * delta_psi / psi, with coeff = i*A0 for
    wave-like rules; zero when the relation holds.
    """
    if abs(psi_value) < NODE_EPS:
        raise NodeSingularityError(f"|psi|={abs(psi_value):.3e} below {NODE_EPS}")
    return delta_action + rule.coefficient * delta_psi / psi_value


def _derivative_matrix_free(values, order, dx, boundary):
    """Central difference of the given order; ghost cells zero for Dirichlet."""
    if boundary == "periodic":
        def sh(k):
            return np.roll(values, -k)
    else:
        padded = np.concatenate((np.zeros(2, dtype=values.dtype), values,
                                 np.zeros(2, dtype=values.dtype)))
        def sh(k):
            return padded[2 + k: 2 + k + len(values)]
    if order == 0:
        return values
    if order == 1:
        return (sh(1) - sh(-1)) / (2.0 * dx)
    if order == 2:
        return (sh(1) - 2.0 * values + sh(-1)) / dx**2
    if order == 3:
        return (sh(2) - 2.0 * sh(1) + 2.0 * sh(-1) - sh(-2)) / (2.0 * dx**3)
    if order == 4:
        return (sh(2) - 4.0 * sh(1) + 6.0 * values - 4.0 * sh(-1) + sh(-2)) / dx**4
    raise ConfigurationError(f"unsupported derivative order {order}")


# worst-case modulus of the central stencil symbol on a grid of spacing dx
_SYMBOL_MAX = {0: lambda dx: 1.0,
               1: lambda dx: 1.0 / dx,
               2: lambda dx: 4.0 / dx**2,
               3: lambda dx: 3.0 / dx**3,
               4: lambda dx: 16.0 / dx**4}


class UniversalStepper:
    """Explicit RK4 method-of-lines integrator for one family member."""

    def __init__(self, spec: HamiltonianSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        self._coeffs = []
        for term in spec.terms:
            coeff = term.coefficient
            if isinstance(coeff, str):
                coeff = PROFILES[coeff](grid.points) if coeff in PROFILES else None
                if coeff is None:
                    raise ConfigurationError(f"unknown profile {term.coefficient!r}")
            elif np.ndim(coeff) > 0:
                coeff = np.asarray(coeff, dtype=complex)
                if coeff.shape != (grid.n,):
                    raise ConfigurationError("tabulated coefficient shape mismatch")
            else:
                coeff = complex(coeff)
            self._coeffs.append((term.m, term.n, coeff))

    def rhs(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        dx = self.grid.spacing
        for m, n, coeff in self._coeffs:
            if n > 0:
                deriv = _derivative_matrix_free(psi, n, dx, self.spec.boundary)
                out -= coeff * psi**m * deriv
            else:
                out -= coeff * psi ** (m + 1)
        return out

    def stability_budget(self, psi: np.ndarray) -> float:
        """Largest dt the RK4 stability region tolerates for this field."""
        dx = self.grid.spacing
        amp = float(np.max(np.abs(psi))) if len(psi) else 0.0
        rate = 0.0
        for m, n, coeff in self._coeffs:
            cmax = float(np.max(np.abs(coeff)))
            rate += cmax * max(amp, 1e-300) ** m * _SYMBOL_MAX[n](dx)
        if rate == 0.0:
            return math.inf
        return RK4_STABILITY_CONSTANT / rate

    def step(self, psi: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(psi)
        k2 = self.rhs(psi + 0.5 * dt * k1)
        k3 = self.rhs(psi + 0.5 * dt * k2)
        k4 = self.rhs(psi + dt * k3)
        return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def build_universal_pde(spec: HamiltonianSpec, grid: Grid) -> UniversalStepper:
    return UniversalStepper(spec, grid)


def step_pde(state: PDEState, stepper: UniversalStepper, n_steps: int) -> PDEState:
    """Advance n_steps, validating the stability budget and finiteness."""
    budget = stepper.stability_budget(state.values)
    if state.dt > budget:
        raise StepSizeError(state.dt, budget)
    psi = np.array(state.values, dtype=complex)
    diagnostics = list(state.diagnostics)
    dx = stepper.grid.spacing
    step0 = len(diagnostics)
    for k in range(n_steps):
        psi = stepper.step(psi, state.dt)
        if not np.isfinite(psi.view(float)).all():
            raise BlowUpError(step0 + k)
        norm = float(np.sum(np.abs(psi) ** 2) * dx)
        diagnostics.append((step0 + k + 1, norm, float(np.max(np.abs(psi)))))
    return replace(state, values=psi, time=state.time + n_steps * state.dt,
                   diagnostics=tuple(diagnostics))
