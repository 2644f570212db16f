"""Dense symmetric linear algebra used by the mirror-descent core and tests.

Matrices are plain float64 numpy arrays; ``check_symmetric`` validates the
symmetric-and-finite contract at module boundaries.  The eigendecomposition
is a cyclic Jacobi sweep, chosen for robustness at the moderate dimensions
the slow reference path works at, and kept independent of LAPACK so it can
cross-check the fast incremental updates.
"""

from dataclasses import dataclass

import numpy as np

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


class ConvergenceError(RuntimeError):
    pass


def check_symmetric(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    if m.shape[0] > 0 and np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise ValueError(f"{name} is not symmetric")
    return m


@dataclass
class EigenSystem:
    """Orthonormal eigenbasis with eigenvalues sorted non-increasing.

    ``vectors`` stores the eigenvectors as columns, so the represented
    matrix is ``vectors @ diag(values) @ vectors.T``.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "EigenSystem":
        return EigenSystem(self.values.copy(), self.vectors.copy())

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T

    def validate(self, orth_tol: float = 1e-8) -> None:
        if np.any(np.diff(self.values) > 1e-12):
            raise ValueError("eigenvalues not sorted non-increasing")
        err = orthogonality_error(self)
        if err > orth_tol:
            raise ValueError(f"basis orthonormality error {err:.3e} exceeds {orth_tol:.1e}")


def _offdiag_norm(a: np.ndarray) -> float:
    b = a.copy()
    np.fill_diagonal(b, 0.0)
    return float(np.linalg.norm(b))


def _sign_normalize(vectors: np.ndarray) -> np.ndarray:
    # first component with non-negligible magnitude is made positive
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        big = np.abs(col) > 1e-12 * max(1.0, np.max(np.abs(col)))
        if np.any(big):
            lead = np.argmax(big)
            if col[lead] < 0:
                vectors[:, j] = -col
    return vectors


def full_eigendecompose(m: np.ndarray, tol: float = JACOBI_TOL) -> EigenSystem:
    """Eigendecompose a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below ``tol``
    (which bounds the Frobenius reconstruction error by the same amount),
    capped at 100 sweeps.

    Raises
    ------
    ConvergenceError
        If the cap is reached; the message reports the remaining residual.
    """
    a = check_symmetric(m, "input").copy()
    d = a.shape[0]
    v = np.eye(d)
    if d == 1:
        return EigenSystem(np.array([a[0, 0]]), v)

    for _ in range(JACOBI_MAX_SWEEPS):
        if _offdiag_norm(a) <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 0.25 * tol / d:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-36 * abs(diff):
                    t = apq / diff
                else:
                    phi = diff / (2.0 * apq)
                    t = 1.0 / (abs(phi) + np.sqrt(phi * phi + 1.0))
                    if phi < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p] = rot_p
                a[:, q] = rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :] = rot_p
                a[q, :] = rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p] = rot_p
                v[:, q] = rot_q
    else:
        raise ConvergenceError(
            f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps; "
            f"off-diagonal residual {_offdiag_norm(a):.3e}"
        )

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return EigenSystem(values[order], _sign_normalize(v[:, order]))


def orthogonality_error(es: EigenSystem) -> float:
    """Largest deviation of the basis Gram matrix from the identity."""
    gram = es.vectors.T @ es.vectors
    return float(np.max(np.abs(gram - np.eye(es.dim))))


def reorthogonalize(es: EigenSystem) -> EigenSystem:
    """Exact Gram-Schmidt pass over an approximately orthonormal basis.

    Eigenvalues are carried through unchanged.  Requires the input basis to
    be within 1e-3 of orthonormal; a vector collapsing to near-zero norm
    raises with the offending index.
    """
    err = orthogonality_error(es)
    if err >= 1e-3:
        raise ValueError(f"basis too far from orthonormal to repair (error {err:.3e})")
    vectors = es.vectors.copy()
    for _ in range(2):
        for i in range(vectors.shape[1]):
            col = vectors[:, i]
            if i > 0:
                col = col - vectors[:, :i] @ (vectors[:, :i].T @ col)
            nrm = np.linalg.norm(col)
            if nrm < 1e-8:
                raise ValueError(f"vector {i} collapsed during re-orthogonalization")
            vectors[:, i] = col / nrm
    return EigenSystem(es.values.copy(), vectors)


def spectral_norm_estimate(m: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral norm of a symmetric matrix."""
    m = np.asarray(m, dtype=np.float64)
    d = m.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(d)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = m @ x
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        prev, est = est, nrm
        if abs(est - prev) <= 1e-14 * max(1.0, est):
            break
    return float(est)
