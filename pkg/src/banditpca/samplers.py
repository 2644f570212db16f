"""The two action-sampling schemes and their unbiased loss estimators.

Both schemes sample a unit vector ``w`` whose outer product has expectation
equal to the mixed covariance ``sum_i lam_i u_i u_i^T``, then turn the scalar
loss ``w^T L w`` into a sparse estimate of the whole loss matrix, expressed
in the eigenbasis.  ``enumerate_outcomes`` walks the full outcome
distribution so the unbiasedness identities can be tested exactly.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from ._kernels import draw_index

ENUMERATION_CAP = 12


@dataclass(frozen=True)
class DenseOn:
    index: int

    tag = "dense_on"


@dataclass(frozen=True)
class DenseOff:
    signs: np.ndarray  # entries +-1.0

    tag = "dense_off"


@dataclass(frozen=True)
class SparseDiag:
    index: int

    tag = "sparse_diag"


@dataclass(frozen=True)
class SparseOff:
    i: int
    j: int
    sign: int

    tag = "sparse_off"


Branch = Union[DenseOn, DenseOff, SparseDiag, SparseOff]


@dataclass(frozen=True)
class Action:
    """Unit-norm decision vector plus the branch data its estimator needs."""

    w: np.ndarray
    branch: Branch


@dataclass(frozen=True)
class LossEstimate:
    """Sparse symmetric matrix in the current eigenbasis.

    ``diag_terms`` holds (i, c) contributions c * u_i u_i^T and
    ``offdiag_terms`` holds (i, j, c) contributions c * (u_i u_j^T + u_j u_i^T).
    The dense sign branch additionally needs a diagonal profile
    (``basis_diag``, one coefficient per basis vector) and a rank-one part
    ``coeff * (sum_i b_i u_i)(sum_j b_j u_j)^T`` stored as ``basis_rank_one``.
    """

    dim: int
    diag_terms: tuple = ()
    offdiag_terms: tuple = ()
    basis_diag: np.ndarray | None = None
    basis_rank_one: tuple | None = None

    def in_basis_matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for i, c in self.diag_terms:
            m[i, i] += c
        for i, j, c in self.offdiag_terms:
            m[i, j] += c
            m[j, i] += c
        if self.basis_diag is not None:
            m[np.diag_indices(self.dim)] += self.basis_diag
        if self.basis_rank_one is not None:
            c, b = self.basis_rank_one
            m += c * np.outer(b, b)
        return m

    def to_matrix(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.in_basis_matrix() @ vectors.T

    def is_zero(self) -> bool:
        return (
            all(c == 0.0 for _, c in self.diag_terms)
            and all(c == 0.0 for _, _, c in self.offdiag_terms)
            and (self.basis_diag is None or not np.any(self.basis_diag))
            and (self.basis_rank_one is None or self.basis_rank_one[0] == 0.0)
        )


def mix_weights(mu: np.ndarray, gamma: float) -> np.ndarray:
    """lam = (1 - gamma) mu + gamma/d, the distribution actions are drawn from."""
    mu = np.asarray(mu, dtype=np.float64)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    if abs(mu.sum() - 1.0) > 1e-10:
        raise ValueError(f"eigenvalues must sum to 1, got {mu.sum()!r}")
    return (1.0 - gamma) * mu + gamma / mu.shape[0]


def sample_sparse(lam: np.ndarray, basis: np.ndarray, rng: np.random.Generator) -> Action:
    """Draw I, J from lam; play u_I when they collide, else (u_I + s u_J)/sqrt(2)."""
    u = rng.random(3)
    i = draw_index(lam, u[0])
    j = draw_index(lam, u[1])
    if i == j:
        return Action(basis[:, i].copy(), SparseDiag(i))
    s = 1 if u[2] < 0.5 else -1
    w = (basis[:, i] + s * basis[:, j]) / np.sqrt(2.0)
    return Action(w, SparseOff(i, j, s))


def sample_dense(lam: np.ndarray, basis: np.ndarray, rng: np.random.Generator) -> Action:
    """Fair coin between a single eigenvector and a random-sign mixture of all."""
    u = rng.random(2 + lam.shape[0])
    if u[0] < 0.5:
        i = draw_index(lam, u[1])
        return Action(basis[:, i].copy(), DenseOn(i))
    signs = np.where(u[2:] < 0.5, 1.0, -1.0)
    w = basis @ (signs * np.sqrt(lam))
    return Action(w, DenseOff(signs))


def estimate_sparse(action: Action, loss: float, lam: np.ndarray) -> LossEstimate:
    """Importance-weighted estimate from the two-eigenvector scheme."""
    d = lam.shape[0]
    b = action.branch
    if isinstance(b, SparseDiag):
        return LossEstimate(d, diag_terms=((b.index, loss / lam[b.index] ** 2),))
    if isinstance(b, SparseOff):
        coeff = b.sign * loss / (2.0 * lam[b.i] * lam[b.j])
        return LossEstimate(d, offdiag_terms=((b.i, b.j, coeff),))
    raise ValueError(f"sparse estimator got a {b.tag} action")


def estimate_dense(action: Action, loss: float, lam: np.ndarray) -> LossEstimate:
    """Importance-weighted estimate from the coin-flip scheme.

    The single-eigenvector branch senses one diagonal entry; the sign branch
    senses the off-diagonal part through
    ``loss * (V^{-1} w w^T V^{-1} - V^{-1})`` where V is the sampling
    covariance, whose basis entries are
    ``loss * (s_i s_j / sqrt(lam_i lam_j) - delta_ij / lam_i)``.
    """
    d = lam.shape[0]
    b = action.branch
    if isinstance(b, DenseOn):
        return LossEstimate(d, diag_terms=((b.index, 2.0 * loss / lam[b.index]),))
    if isinstance(b, DenseOff):
        return LossEstimate(
            d,
            basis_diag=-loss / lam,
            basis_rank_one=(loss, b.signs / np.sqrt(lam)),
        )
    raise ValueError(f"dense estimator got a {b.tag} action")


def enumerate_outcomes(scheme: str, lam: np.ndarray, basis: np.ndarray):
    """Every (probability, Action) pair the scheme can produce.

    Outcomes with zero probability are omitted; the returned probabilities
    sum to one.  Dimension is capped at 12 (the dense scheme enumerates all
    2^d sign patterns).
    """
    d = lam.shape[0]
    if d > ENUMERATION_CAP:
        raise ValueError(f"enumeration supports d <= {ENUMERATION_CAP}, got {d}")
    out = []
    if scheme == "sparse":
        for i in range(d):
            if lam[i] == 0.0:
                continue
            out.append((lam[i] ** 2, Action(basis[:, i].copy(), SparseDiag(i))))
        for i in range(d):
            for j in range(d):
                if i == j or lam[i] == 0.0 or lam[j] == 0.0:
                    continue
                for s in (1, -1):
                    w = (basis[:, i] + s * basis[:, j]) / np.sqrt(2.0)
                    out.append((0.5 * lam[i] * lam[j], Action(w, SparseOff(i, j, s))))
    elif scheme == "dense":
        for i in range(d):
            if lam[i] == 0.0:
                continue
            out.append((0.5 * lam[i], Action(basis[:, i].copy(), DenseOn(i))))
        sqrt_lam = np.sqrt(lam)
        for bits in range(2**d):
            signs = np.array([1.0 if (bits >> k) & 1 == 0 else -1.0 for k in range(d)])
            w = basis @ (signs * sqrt_lam)
            out.append((0.5 / 2**d, Action(w, DenseOff(signs))))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return out


def estimate(scheme: str, action: Action, loss: float, lam: np.ndarray) -> LossEstimate:
    if scheme == "sparse":
        return estimate_sparse(action, loss, lam)
    if scheme == "dense":
        return estimate_dense(action, loss, lam)
    raise ValueError(f"unknown scheme {scheme!r}")
