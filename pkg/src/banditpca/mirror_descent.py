"""Log-determinant mirror descent on the density-matrix simplex.

The fast path updates the maintained eigensystem directly, one branch per
estimator shape (rank-one on an eigenvector, rank-two across a pair, or the
full-rank dense sign branch), then restores unit trace by shifting the
inverse eigenvalues with a scalar multiplier found by a safeguarded Newton
search.  ``slow_reference_update`` materializes the same update with dense
matrices and the Jacobi eigensolver; it exists to cross-check the fast
branches and is not used inside the game loop.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from . import _kernels as K
from .samplers import LossEstimate
from .symlinalg import EigenSystem, full_eigendecompose

DEFAULT_FLOOR = 1e-15
PROJECTION_TOL = 1e-12
PROJECTION_MAX_ITER = 200


class ProjectionError(RuntimeError):
    pass


@dataclass
class DensityState:
    """Eigensystem of the learner's density matrix plus its eigenvalue floor."""

    es: EigenSystem
    floor: float = DEFAULT_FLOOR

    @property
    def dim(self) -> int:
        return self.es.dim

    @property
    def values(self) -> np.ndarray:
        return self.es.values

    @property
    def vectors(self) -> np.ndarray:
        return self.es.vectors

    def copy(self) -> "DensityState":
        return DensityState(self.es.copy(), self.floor)

    def reconstruct(self) -> np.ndarray:
        return self.es.reconstruct()

    def validate(self, trace_tol: float = 1e-10, orth_tol: float = 1e-8) -> None:
        if abs(self.values.sum() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.values.sum()!r} deviates from 1")
        if np.any(self.values < 0.0):
            raise ValueError("negative eigenvalue in density state")
        self.es.validate(orth_tol)


@dataclass
class LearnerConfig:
    eta: float
    gamma: float
    dim: int
    floor: float = DEFAULT_FLOOR
    reorthogonalize_every: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.dim < 2:
            raise ValueError(f"dim must be at least 2, got {self.dim}")


def initial_state(dim: int, floor: float = DEFAULT_FLOOR) -> DensityState:
    return DensityState(EigenSystem(np.full(dim, 1.0 / dim), np.eye(dim)), floor)


def _rows(state: DensityState) -> tuple[np.ndarray, np.ndarray]:
    # kernels work on row-major eigenvector storage
    return state.values.copy(), np.ascontiguousarray(state.vectors.T)


def _from_rows(values: np.ndarray, basis: np.ndarray, floor: float) -> DensityState:
    return DensityState(EigenSystem(values, basis.T.copy()), floor)


def update_sparse_diag(state: DensityState, idx: int, coeff: float, eta: float) -> DensityState:
    """Apply a c * u_idx u_idx^T loss estimate; only that eigenvalue moves."""
    values, basis = _rows(state)
    status = backend.active().diag_update(values, idx, coeff, eta)
    if status != K.OK:
        raise ValueError(
            f"non-positive update denominator 1 + eta*c*mu = "
            f"{1.0 + eta * coeff * state.values[idx]!r} at index {idx}; "
            f"eta is outside the stable step-size range"
        )
    return _from_rows(values, basis, state.floor)


def update_sparse_offdiag(state: DensityState, i: int, j: int, beta: float) -> DensityState:
    """Apply the rank-two rotation for an off-diagonal pair estimate.

    ``beta`` is eta times the in-plane coupling, i.e.
    eta * sqrt(mu_i mu_j) * s * loss / (2 lam_i lam_j).
    """
    if i == j:
        raise ValueError("off-diagonal update needs two distinct indices")
    values, basis = _rows(state)
    status = backend.active().pair_update(values, basis, i, j, beta)
    if status != K.OK:
        raise ValueError(
            f"|beta| = {abs(beta)!r} >= 1 violates the rank-two step-size "
            f"regime (|b| <= 1/(2 eta))"
        )
    return _from_rows(values, basis, state.floor)


def update_dense_ondiag(state: DensityState, idx: int, loss: float, eta: float) -> DensityState:
    """Dense scheme, single-eigenvector branch: scale eigenvalue idx by 1/(1+2*eta*loss)."""
    values, basis = _rows(state)
    status = backend.active().dense_ondiag_update(values, idx, loss, eta)
    if status != K.OK:
        raise ValueError(f"non-positive denominator 1 + 2*eta*loss = {1.0 + 2.0 * eta * loss!r}")
    return _from_rows(values, basis, state.floor)


def update_dense_offdiag(
    state: DensityState,
    signs: np.ndarray,
    loss: float,
    eta: float,
    lam: np.ndarray | None = None,
) -> DensityState:
    """Dense scheme, sign-mixture branch (full-rank estimate, O(d^3)).

    ``lam`` is the sampling weight vector; when omitted the eigenvalues
    themselves are used (no exploration mixing), which is the regime the
    closed Sherman-Morrison form applies to.
    """
    values, basis = _rows(state)
    signs = np.asarray(signs, dtype=np.float64)
    isotropic = lam is None
    lam_arr = values.copy() if isotropic else np.asarray(lam, dtype=np.float64)
    status = backend.active().dense_offdiag_update(
        values, basis, signs, loss, eta, lam_arr, isotropic
    )
    if status == K.ERR_DENOMINATOR:
        raise ValueError(
            f"dense update needs |eta*loss| < 1 and 1 + eta*(d-1)*loss > 0; "
            f"got eta*loss = {eta * loss!r}"
        )
    if status == K.ERR_NOT_PD:
        raise ValueError("dense update produced a non-positive-definite intermediate")
    return _from_rows(values, basis, state.floor)


def project_trace_one(state: DensityState) -> DensityState:
    """Bregman projection onto unit trace; eigenvectors are untouched."""
    if np.any(state.values <= 0.0):
        raise ValueError("projection requires strictly positive eigenvalues")
    values, basis = _rows(state)
    status, theta, lo, hi, _ = backend.active().project_trace_one(
        values, state.floor, PROJECTION_TOL, PROJECTION_MAX_ITER
    )
    if status != K.OK:
        raise ProjectionError(
            f"trace root-find did not converge within {PROJECTION_MAX_ITER} "
            f"iterations; bracket [{lo!r}, {hi!r}]"
        )
    order = np.argsort(-values, kind="stable")
    return _from_rows(values[order], basis[order], state.floor)


def slow_reference_update(state: DensityState, estimate: LossEstimate, eta: float) -> DensityState:
    """Dense-matrix oracle for the incremental branches.

    Materializes (W^{-1} + eta * Ltilde)^{-1} through a full Jacobi
    eigendecomposition and applies the same trace projection.  Quadratic
    memory and cubic time; only used for cross-checking.
    """
    v = state.vectors
    w_inv = (v / state.values) @ v.T
    m = w_inv + eta * estimate.to_matrix(v)
    es = full_eigendecompose((m + m.T) / 2.0)
    if es.values[-1] <= 0.0:
        raise ValueError(
            f"W^{{-1}} + eta*Ltilde is not positive definite "
            f"(smallest eigenvalue {es.values[-1]!r})"
        )
    nu = 1.0 / es.values
    unprojected = DensityState(EigenSystem(nu[::-1].copy(), es.vectors[:, ::-1].copy()), state.floor)
    return project_trace_one(unprojected)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityState):
        return x.reconstruct()
    if isinstance(x, EigenSystem):
        return x.reconstruct()
    return np.asarray(x, dtype=np.float64)


def stein_divergence(w, u) -> float:
    """tr(U^{-1} W) - log det(U^{-1} W) - d, the Bregman divergence of -log det."""
    wm = _as_matrix(w)
    um = _as_matrix(u)
    d = wm.shape[0]
    for name, m in (("first", wm), ("second", um)):
        if np.linalg.eigvalsh(m)[0] <= 0.0:
            raise ValueError(f"{name} argument is not positive definite")
    tr = float(np.trace(np.linalg.solve(um, wm)))
    logdet = float(np.linalg.slogdet(wm)[1] - np.linalg.slogdet(um)[1])
    return tr - logdet - d
