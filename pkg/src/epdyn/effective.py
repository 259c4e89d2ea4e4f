"""Energy-dependent effective-potential reduction and realisation enumeration.

Eliminating the Q block of a Hermitian problem gives the energy-dependent
operator H_eff(E) = H_PP + H_PQ (E - H_QQ)^-1 H_QP on the retained P space.
Self-consistent energies (EP roots) are exactly the eigenvalues of the full
operator whose eigenvectors have nonzero P projection; the remaining
eigenvalues sit on decoupled H_QQ channels and are reported as such.

Roots are grouped into realisations by clustering their density centroids,
and each realisation carries the probability alpha_r = N_r / N_total held as
an exact integer ratio.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .core import ExistenceProblem, HermitianOperator
from .errors import CompletenessWarning, PartitionError, PoleProximityError

DEFAULT_POLE_GUARD = 1e-9  # relative to ||H||
DEDUP_FACTOR = 10.0
DECOUPLING_RTOL = 1e-10


@dataclass(frozen=True)
class Partition:
    """Split of the full index space into retained (P) and eliminated (Q) sets."""

    matrix: np.ndarray  # full Hermitian operator
    p_indices: np.ndarray
    q_indices: np.ndarray
    p_coordinates: np.ndarray  # positions attached to P indices (for centroids)
    measure: float = 1.0  # quadrature weight on the P coordinates

    def __post_init__(self):
        for name in ("matrix", "p_indices", "q_indices", "p_coordinates"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.matrix.shape[0]
        p, q = set(self.p_indices.tolist()), set(self.q_indices.tolist())
        if not p or not q:
            raise PartitionError("both P and Q must be nonempty")
        if p & q or (p | q) != set(range(n)):
            raise PartitionError("P and Q must partition the full index space")
        if len(self.p_coordinates) != len(self.p_indices):
            raise PartitionError("one coordinate per P index required")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def blocks(self):
        p, q = self.p_indices, self.q_indices
        return (
            self.matrix[np.ix_(p, p)],
            self.matrix[np.ix_(p, q)],
            self.matrix[np.ix_(q, q)],
        )

    @cached_property
    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    @cached_property
    def _q_eig(self):
        h_pp, h_pq, h_qq = self.blocks
        lam, u = np.linalg.eigh(h_qq)
        return lam, u, h_pq @ u  # poles, Q eigenbasis, coupling rows in that basis

    @property
    def poles(self) -> np.ndarray:
        return self._q_eig[0]

    def decoupled_poles(self, rtol: float = DECOUPLING_RTOL) -> np.ndarray:
        """H_QQ eigenvalues whose eigenvectors do not couple to P.

        These are exact eigenvalues of the full operator with zero P
        projection and are invisible to the EP root scan.
        """
        lam, _, w = self._q_eig
        strength = np.linalg.norm(w, axis=0)
        return lam[strength <= rtol * max(self.operator_norm, 1.0)]


def make_partition(problem, p_selector=None) -> Partition:
    """Build a Partition from an ExistenceProblem or a dense Hermitian matrix.

    p_selector is either an iterable of retained full-space indices or None,
    which keeps the xi ground channel (xi index 0) of a product-grid problem.
    """
    if isinstance(problem, ExistenceProblem):
        matrix = problem.full_operator.matrix
        n = problem.dimension
        if p_selector is None:
            nxi = problem.grid_xi.n
            p = np.arange(0, n, nxi)  # xi channel 0 under q-major flattening
        else:
            p = np.asarray(sorted(set(int(i) for i in p_selector)), dtype=int)
            if p.size == 0 or p.min() < 0 or p.max() >= n:
                raise PartitionError("selector must be a nonempty set of valid indices")
        coords_full = np.repeat(problem.grid_q.points, problem.grid_xi.n)
        coords = coords_full[p]
        measure = problem.grid_q.spacing
    else:
        matrix = problem.matrix if isinstance(problem, HermitianOperator) else \
            HermitianOperator(problem).matrix
        n = matrix.shape[0]
        if p_selector is None:
            raise PartitionError("p_selector required for matrix-valued problems")
        p = np.asarray(sorted(set(int(i) for i in p_selector)), dtype=int)
        if p.size == 0 or p.min() < 0 or p.max() >= n:
            raise PartitionError("selector must be a nonempty set of valid indices")
        coords = p.astype(float)
        measure = 1.0
    if p.size == 0 or p.size == n:
        raise PartitionError("selector must yield a nonempty proper subset")
    if p.min() < 0 or p.max() >= n:
        raise PartitionError("selector index out of range")
    q = np.setdiff1d(np.arange(n), p)
    return Partition(matrix=matrix, p_indices=p, q_indices=q,
                     p_coordinates=coords, measure=measure)


def _check_pole(partition: Partition, energy: float, pole_guard: float):
    lam = partition.poles
    gap = np.abs(lam - energy)
    guard = pole_guard * max(partition.operator_norm, 1.0)
    k = int(np.argmin(gap))
    if gap[k] < guard:
        raise PoleProximityError(energy, float(lam[k]))


def effective_hamiltonian(partition: Partition, energy: float,
                          pole_guard: float = DEFAULT_POLE_GUARD) -> HermitianOperator:
    """H_PP + H_PQ (E - H_QQ)^-1 H_QP, Hermitian for real E off the poles."""
    _check_pole(partition, energy, pole_guard)
    h_pp, _, _ = partition.blocks
    lam, _, w = partition._q_eig
    mat = h_pp + (w / (energy - lam)) @ w.conj().T
    return HermitianOperator(mat)


@dataclass(frozen=True)
class EPCharacteristic:
    """Sign and log-magnitude of det(H_eff(E) - E I)."""

    sign: float
    log_magnitude: float

    @property
    def value(self) -> float:
        if self.sign == 0.0:
            return 0.0
        return self.sign * math.exp(min(self.log_magnitude, 700.0))


def _ep_char_raw(partition: Partition, energy: float, pole_guard: float) -> EPCharacteristic:
    # scan-loop fast path: same arithmetic as ep_characteristic without the
    # HermitianOperator revalidation on every energy sample
    _check_pole(partition, energy, pole_guard)
    h_pp, _, _ = partition.blocks
    lam, _, w = partition._q_eig
    mat = h_pp + (w / (energy - lam)) @ w.conj().T
    shifted = mat - energy * np.eye(mat.shape[0])
    sign, logdet = np.linalg.slogdet(shifted)
    # shifted is Hermitian up to roundoff; its determinant is real
    return EPCharacteristic(sign=float(np.sign(sign.real)), log_magnitude=float(logdet))


def ep_characteristic(partition: Partition, energy: float,
                      pole_guard: float = DEFAULT_POLE_GUARD) -> EPCharacteristic:
    """Root indicator for the self-consistency condition, sign tracked stably."""
    h_eff = effective_hamiltonian(partition, energy, pole_guard=pole_guard)
    shifted = h_eff.matrix - energy * np.eye(h_eff.dimension)
    sign, logdet = np.linalg.slogdet(shifted)
    return EPCharacteristic(sign=float(np.sign(sign.real)), log_magnitude=float(logdet))


@dataclass(frozen=True)
class BranchRoot:
    """One self-consistent EP root with its reconstructed full eigenstate."""

    branch_id: int
    energy: float
    psi_p: np.ndarray
    psi_full: np.ndarray
    residual: float  # ||H psi - E psi|| / ||H||


def root_density(root: BranchRoot, partition: Partition) -> np.ndarray:
    """Normalized P-space density of the reconstructed state."""
    rho = np.abs(root.psi_full[partition.p_indices]) ** 2
    total = rho.sum() * partition.measure
    if total == 0.0:
        return rho
    return rho / total


def root_centroid(root: BranchRoot, partition: Partition) -> float:
    rho = root_density(root, partition)
    return float(np.sum(partition.p_coordinates * rho) * partition.measure)


def reconstruct_full_state(partition: Partition, energy: float, psi_p,
                           pole_guard: float = DEFAULT_POLE_GUARD) -> np.ndarray:
    """Back-substitute psi_Q = (E - H_QQ)^-1 H_QP psi_P; unit full vector."""
    _check_pole(partition, energy, pole_guard)
    psi_p = np.asarray(psi_p, dtype=complex)
    lam, u, w = partition._q_eig
    # H_QP psi_P in the Q eigenbasis is w^dagger psi_P
    psi_q = u @ ((w.conj().T @ psi_p) / (energy - lam))
    full = np.zeros(partition.dimension, dtype=complex)
    full[partition.p_indices] = psi_p
    full[partition.q_indices] = psi_q
    return full / np.linalg.norm(full)


def _solve_root_vector(partition: Partition, energy: float, pole_guard: float):
    h_eff = effective_hamiltonian(partition, energy, pole_guard=pole_guard)
    evals, evecs = np.linalg.eigh(h_eff.matrix)
    k = int(np.argmin(np.abs(evals - energy)))
    return evecs[:, k]


def enumerate_roots(partition: Partition, e_min=None, e_max=None,
                    scan_points=None, tol=None,
                    pole_guard: float = DEFAULT_POLE_GUARD,
                    check_completeness: bool = True) -> list:
    """Scan, bracket and bisect every root of det(H_eff(E) - E I).

    The scan range defaults to the Gershgorin bounds of the full operator
    plus a margin, which covers the whole spectrum.  Pole neighborhoods are
    excluded; sign changes are bisected to |dE| < tol and deduplicated at
    10*tol.  When check_completeness is set, a count shortfall against the
    full dimension raises a CompletenessWarning (roots still returned).
    """
    scale = max(partition.operator_norm, 1.0)
    if e_min is None or e_max is None:
        margin = 0.05 * scale + 1.0
        lo = -partition.operator_norm - margin
        hi = partition.operator_norm + margin
        e_min = lo if e_min is None else e_min
        e_max = hi if e_max is None else e_max
    if tol is None:
        tol = 1e-12 * scale
    if scan_points is None:
        # 64 points per mean level spacing across the scanned range
        scan_points = max(256, 64 * partition.dimension)

    guard = pole_guard * scale
    poles = np.sort(partition.poles)
    # split [e_min, e_max] at poles; segment edges sit at twice the guard so
    # roundoff cannot push an endpoint inside the excluded zone
    edges = [e_min]
    for p in poles:
        if e_min < p < e_max:
            edges.extend([p - 2.0 * guard, p + 2.0 * guard])
    edges.append(e_max)

    def f(e):
        return _ep_char_raw(partition, e, pole_guard)

    roots_e = []
    total_span = e_max - e_min
    for lo, hi in zip(edges[::2], edges[1::2]):
        if hi <= lo:
            continue
        n_seg = max(8, int(round(scan_points * (hi - lo) / total_span)))
        es = np.linspace(lo, hi, n_seg)
        vals = [f(e) for e in es]
        for a, b, fa, fb in zip(es[:-1], es[1:], vals[:-1], vals[1:]):
            if fa.sign == 0.0:
                roots_e.append(float(a))
                continue
            if fa.sign * fb.sign < 0.0:
                roots_e.append(_bisect(f, float(a), float(b), fa.sign, tol))
        if vals and vals[-1].sign == 0.0:
            roots_e.append(float(es[-1]))

    roots_e.sort()
    deduped = []
    for e in roots_e:
        if not deduped or e - deduped[-1] > DEDUP_FACTOR * tol:
            deduped.append(e)

    roots = []
    norm = partition.operator_norm
    for k, e in enumerate(deduped):
        psi_p = _solve_root_vector(partition, e, pole_guard)
        full = reconstruct_full_state(partition, e, psi_p, pole_guard=pole_guard)
        residual = float(np.linalg.norm(partition.matrix @ full - e * full) / max(norm, 1e-300))
        roots.append(BranchRoot(branch_id=k, energy=e, psi_p=psi_p,
                                psi_full=full, residual=residual))

    if check_completeness:
        n_dec = len(partition.decoupled_poles())
        if len(roots) + n_dec != partition.dimension:
            warnings.warn(
                f"root scan found {len(roots)} roots + {n_dec} decoupled poles "
                f"for dimension {partition.dimension}; scan range "
                f"[{e_min:g}, {e_max:g}], {scan_points} points",
                CompletenessWarning,
            )
    return roots


def _bisect(f, a: float, b: float, sign_a: float, tol: float) -> float:
    while b - a > tol:
        mid = 0.5 * (a + b)
        try:
            fm = f(mid)
        except PoleProximityError:
            # pole guard hit mid-bracket; nudge off-center
            mid = a + 0.45 * (b - a)
            fm = f(mid)
        if fm.sign == 0.0:
            return mid
        if fm.sign == sign_a:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass(frozen=True)
class Realisation:
    """Cluster of elementary roots observed as one combined realisation."""

    members: tuple  # BranchRoots
    centroid: float
    density: np.ndarray  # on the P coordinates, integrates to N_r

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "density", d)

    @property
    def elementary_count(self) -> int:
        return len(self.members)

    def localization_length(self, coordinates, measure) -> float:
        """RMS spread of the realisation density about its centroid."""
        rho = self.density / self.elementary_count
        var = float(np.sum((coordinates - self.centroid) ** 2 * rho) * measure)
        return math.sqrt(max(var, 0.0))


@dataclass(frozen=True)
class RealisationEnsemble:
    realisations: tuple
    probabilities: tuple  # Fractions, sum exactly 1
    coordinates: np.ndarray
    measure: float
    clustering_width: float

    def __post_init__(self):
        c = np.asarray(self.coordinates, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coordinates", c)

    @property
    def total_count(self) -> int:
        return sum(r.elementary_count for r in self.realisations)

    @property
    def centroids(self) -> np.ndarray:
        return np.array([r.centroid for r in self.realisations])


def cluster_realisations(roots, partition: Partition, width: float = 0.0) -> RealisationEnsemble:
    """Single-linkage clustering of root centroids at distance threshold width.

    width = 0 keeps every root as its own realisation.  Probabilities are
    exact Fractions N_r / N_total.
    """
    if not roots:
        raise PartitionError("cannot cluster an empty root list")
    if width < 0:
        raise PartitionError("cluster width must be nonnegative")
    cents = np.array([root_centroid(r, partition) for r in roots])
    order = np.argsort(cents, kind="stable")
    clusters = []
    if width == 0.0:
        clusters = [[int(i)] for i in order]
    else:
        # in 1D single linkage at threshold `width` = split at gaps > width
        current = [int(order[0])]
        for prev, nxt in zip(order[:-1], order[1:]):
            if cents[nxt] - cents[prev] > width:
                clusters.append(current)
                current = []
            current.append(int(nxt))
        clusters.append(current)

    realisations = []
    for members_idx in clusters:
        members = tuple(roots[i] for i in members_idx)
        density = np.zeros(len(partition.p_indices))
        for r in members:
            density = density + root_density(r, partition)
        n_r = len(members)
        centroid = float(np.sum(partition.p_coordinates * density) * partition.measure / n_r)
        realisations.append(Realisation(members=members, centroid=centroid, density=density))

    total = sum(r.elementary_count for r in realisations)
    probs = tuple(Fraction(r.elementary_count, total) for r in realisations)
    assert sum(probs) == 1
    return RealisationEnsemble(
        realisations=tuple(realisations),
        probabilities=probs,
        coordinates=partition.p_coordinates,
        measure=partition.measure,
        clustering_width=width,
    )


def ensemble_from_probabilities(probabilities, centroids=None, densities=None,
                                coordinates=None, measure: float = 1.0) -> RealisationEnsemble:
    """Synthetic ensemble for hopping studies, bypassing the root machinery.

    probabilities are integer weights or Fractions; densities default to
    unit point masses at the centroids.
    """
    fracs = [Fraction(p) for p in probabilities]
    total = sum(fracs)
    fracs = [p / total for p in fracs]
    k = len(fracs)
    if centroids is None:
        centroids = np.arange(k, dtype=float)
    centroids = np.asarray(centroids, dtype=float)
    if coordinates is None:
        coordinates = np.asarray(sorted(set(centroids.tolist())))
    coordinates = np.asarray(coordinates, dtype=float)
    realisations = []
    denom = math.lcm(*[f.denominator for f in fracs])
    for i, frac in enumerate(fracs):
        n_r = int(frac * denom)
        if densities is not None:
            rho = np.asarray(densities[i], dtype=float) * n_r
        else:
            rho = np.zeros(len(coordinates))
            j = int(np.argmin(np.abs(coordinates - centroids[i])))
            rho[j] = n_r / measure
        realisations.append(Realisation(members=(None,) * n_r,
                                        centroid=float(centroids[i]), density=rho))
    probs = tuple(Fraction(r.elementary_count, denom) for r in realisations)
    return RealisationEnsemble(
        realisations=tuple(realisations), probabilities=probs,
        coordinates=coordinates, measure=measure, clustering_width=0.0,
    )


def assemble_density(ensemble: RealisationEnsemble) -> np.ndarray:
    """Expectation reading of the probabilistic sum: sum_r alpha_r rho_r.

    Each realisation density is renormalized to unit integral before
    weighting, so the result is nonnegative and integrates to 1.
    """
    out = np.zeros(len(ensemble.coordinates))
    for real, alpha in zip(ensemble.realisations, ensemble.probabilities):
        out = out + float(alpha) * real.density / real.elementary_count
    return out
