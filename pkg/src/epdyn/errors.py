"""Exception hierarchy shared across the toolkit."""


class EpdynError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(EpdynError):
    """Invalid construction parameters (bad grid, dimension mismatch, bad JSON)."""


class OracleScaleError(EpdynError):
    """Dense-diagonalization oracle requested above the configured dimension cap."""


class NormalizationError(EpdynError):
    """A wavefield required to be normalized is not."""


class PartitionError(EpdynError):
    """P/Q split is empty or covers the whole space."""


class PoleProximityError(EpdynError):
    """Effective Hamiltonian evaluated too close to an H_QQ eigenvalue."""

    def __init__(self, energy, nearest_pole):
        self.energy = energy
        self.nearest_pole = nearest_pole
        super().__init__(
            f"E={energy!r} within pole guard of H_QQ eigenvalue {nearest_pole!r}"
        )


class CompletenessWarning(UserWarning):
    """Root scan found fewer roots than the problem dimension requires."""


class RegimeMismatchWarning(UserWarning):
    """Statistics requested on a trajectory from the wrong hopping regime."""


class NodeSingularityError(EpdynError):
    """Division by the wavefunction attempted at a node (|psi| below 1e-12)."""


class StepSizeError(EpdynError):
    """Requested time step violates the configured accuracy/stability budget."""

    def __init__(self, dt, suggested_dt, message=""):
        self.dt = dt
        self.suggested_dt = suggested_dt
        super().__init__(
            message or f"dt={dt:g} over budget; try dt <= {suggested_dt:g}"
        )


class BlowUpError(EpdynError):
    """Non-finite value encountered during propagation."""

    def __init__(self, step_index):
        self.step_index = step_index
        super().__init__(f"non-finite field value at step {step_index}")


class DomainError(EpdynError):
    """Argument outside the mathematical domain (e.g. v >= c)."""
