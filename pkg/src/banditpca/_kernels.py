"""Hot numeric kernels for the per-trial update loop.

Every function here is written in a numba-friendly subset of numpy so the
same source runs either interpreted (pure numpy) or through ``@njit``.
The backend module decides which variant is active; see ``backend.py``.

Conventions shared by all kernels:

* ``values`` holds the eigenvalues of the learner's density matrix, sorted
  non-increasing except transiently inside a trial.
* ``basis`` stores eigenvectors as *rows* at fixed positions; ``perm`` maps
  sorted slot k to its row, so re-sorting after an update moves eight-byte
  scalars instead of length-d vectors.  The eigenvector paired with
  ``values[k]`` is ``basis[perm[k]]``.
* Kernels mutate their array arguments in place and report problems through
  integer status codes (0 = ok); wrappers turn nonzero codes into exceptions
  with context that numba cannot format itself.
"""

import numpy as np

# status codes shared with the wrappers
OK = 0
ERR_DENOMINATOR = 1
ERR_BETA_RANGE = 2
ERR_NOT_PD = 3
ERR_NO_CONVERGENCE = 4
ERR_RANK_DEFICIENT = 5

BETA_SKIP = 1e-14  # below this the rank-two rotation is the identity


def mix_weights(values, gamma):
    """Sampling weights: blend the eigenvalues with the uniform distribution."""
    d = values.shape[0]
    lam = np.empty(d)
    u = gamma / d
    c = 1.0 - gamma
    for i in range(d):
        lam[i] = c * values[i] + u
    return lam


def draw_index(lam, u):
    """Inverse-CDF draw from the weight vector using one uniform u in [0,1)."""
    d = lam.shape[0]
    total = 0.0
    for i in range(d):
        total += lam[i]
    target = u * total
    acc = 0.0
    for i in range(d):
        acc += lam[i]
        if target < acc:
            return i
    return d - 1


def diag_update(values, idx, coeff, eta):
    """Rank-one loss term on eigenvector idx: nu_idx = mu_idx / (1 + eta*c*mu_idx)."""
    denom = 1.0 + eta * coeff * values[idx]
    if denom <= 0.0:
        return ERR_DENOMINATOR
    values[idx] = values[idx] / denom
    return OK


def dense_ondiag_update(values, idx, loss, eta):
    """On-diagonal dense branch: the touched eigenvalue shrinks by 1/(1 + 2*eta*loss)."""
    denom = 1.0 + 2.0 * eta * loss
    if denom <= 0.0:
        return ERR_DENOMINATOR
    values[idx] = values[idx] / denom
    return OK


def pair_update(values, basis, perm, i, j, beta):
    """Rank-two loss term on the eigenpair at sorted slots (i, j).

    Replaces the two eigenvalues by

        mu_pm = (mu_i + mu_j +- sqrt((mu_i - mu_j)^2 + 4 mu_i mu_j beta^2))
                / (2 (1 - beta^2))

    and rotates the two eigenvectors inside their shared plane.  Only two
    rows of ``basis`` are touched, so the work is O(d).
    """
    if beta * beta >= 1.0:
        return ERR_BETA_RANGE
    if beta > -BETA_SKIP and beta < BETA_SKIP:
        return OK
    # mu_plus lands on the smaller slot so that, with values sorted
    # non-increasing, each new eigenvalue can only drift toward its own end
    if j < i:
        tmp = i
        i = j
        j = tmp
    mi = values[i]
    mj = values[j]
    root = np.sqrt((mi - mj) * (mi - mj) + 4.0 * mi * mj * beta * beta)
    scale = 1.0 / (2.0 * (1.0 - beta * beta))
    mu_plus = (mi + mj + root) * scale
    mu_minus = (mi + mj - root) * scale
    b = -beta * np.sqrt(mi * mj)

    d = basis.shape[1]
    ri = perm[i]
    rj = perm[j]
    row_i = np.empty(d)
    row_j = np.empty(d)
    for k in range(d):
        row_i[k] = basis[ri, k]
        row_j[k] = basis[rj, k]

    # The 2x2 block [[mi, b], [b, mj]] has eigenvector (b, sigma - mi) for
    # eigenvalue sigma; when that form degenerates (sigma close to mi) the
    # algebraically equivalent (sigma - mj, b) stays well conditioned.
    for which in range(2):
        if which == 0:
            sigma = mu_plus * (1.0 - beta * beta)
            target = ri
        else:
            sigma = mu_minus * (1.0 - beta * beta)
            target = rj
        ci_a = b
        cj_a = sigma - mi
        ci_b = sigma - mj
        cj_b = b
        na = ci_a * ci_a + cj_a * cj_a
        nb = ci_b * ci_b + cj_b * cj_b
        if na >= nb:
            ci = ci_a
            cj = cj_a
            nrm = np.sqrt(na)
        else:
            ci = ci_b
            cj = cj_b
            nrm = np.sqrt(nb)
        ci /= nrm
        cj /= nrm
        for k in range(d):
            basis[target, k] = ci * row_i[k] + cj * row_j[k]

    values[i] = mu_plus
    values[j] = mu_minus
    return OK


def dense_offdiag_update(values, basis, signs, loss, eta, lam, isotropic):
    """Full-rank dense branch via the inverted rank-one-modified diagonal core.

    With sampling weights equal to the eigenvalues (``isotropic`` true, the
    exploration-free case) the unprojected solution is

        (1 / (1 - eta*loss)) * U (Lam - eta*loss vt vt^T / (1 + eta (d-1) loss)) U^T

    with vt_i = s_i sqrt(lam_i).  Otherwise the core is assembled from
    W^{-1} + eta*Ltilde expressed in the eigenbasis and inverted through its
    eigendecomposition.  Either way the new eigensystem replaces the old one,
    already sorted non-increasing.  Cost is O(d^3) from the basis rotation.
    """
    d = values.shape[0]
    core = np.zeros((d, d))
    if isotropic:
        c1 = 1.0 - eta * loss
        c2 = 1.0 + eta * (d - 1.0) * loss
        if c1 <= 0.0 or c2 <= 0.0 or np.abs(eta * loss) >= 1.0:
            return ERR_DENOMINATOR
        f = eta * loss / c2
        for a in range(d):
            sa = signs[a] * np.sqrt(lam[a])
            for b2 in range(d):
                core[a, b2] = -f * sa * signs[b2] * np.sqrt(lam[b2])
            core[a, a] += lam[a]
        sig, q = np.linalg.eigh(core)
        if sig[0] <= 0.0:
            return ERR_NOT_PD
        new_vals = sig / c1
        # eigh returns ascending order; flip for non-increasing storage
        rotated = np.dot(q.T, basis)
        for a in range(d):
            values[a] = new_vals[d - 1 - a]
            for k in range(d):
                basis[a, k] = rotated[d - 1 - a, k]
        return OK

    # general sampling weights: invert diag(1/mu - eta*loss/lam) + eta*loss vt vt^T
    el = eta * loss
    for a in range(d):
        sa = signs[a] / np.sqrt(lam[a])
        for b2 in range(d):
            core[a, b2] = el * sa * signs[b2] / np.sqrt(lam[b2])
        core[a, a] += 1.0 / values[a] - el / lam[a]
    sig, q = np.linalg.eigh(core)
    if sig[0] <= 0.0:
        return ERR_NOT_PD
    rotated = np.dot(q.T, basis)
    for a in range(d):
        values[a] = 1.0 / sig[a]
        for k in range(d):
            basis[a, k] = rotated[a, k]
    return OK


def project_trace_one(values, floor, tol, max_iter):
    """Bregman projection onto unit trace: mu_i = 1/(1/nu_i + theta), sum = 1.

    Safeguarded Newton iteration on g(theta) = sum_i 1/(1/nu_i + theta) - 1,
    which is strictly decreasing and convex on the feasible bracket.  After
    the root is found the eigenvalues are clamped to ``floor`` and
    renormalized (then re-clamped so the floor holds exactly).

    Returns (status, theta, bracket_lo, bracket_hi, iterations).
    """
    d = values.shape[0]
    w = np.empty(d)
    nu_max = values[0]
    for i in range(d):
        w[i] = 1.0 / values[i]
        if values[i] > nu_max:
            nu_max = values[i]

    lo = -1.0 / nu_max + 1e-14
    theta = 0.0
    if theta <= lo:
        theta = lo

    # g diverges to +inf at lo; grow hi geometrically until g(hi) < 1
    hi = 1.0
    for _ in range(200):
        g = -1.0
        for i in range(d):
            g += 1.0 / (w[i] + hi)
        if g < 0.0:
            break
        hi *= 2.0

    it = 0
    status = ERR_NO_CONVERGENCE
    for it in range(max_iter):
        g = -1.0
        gp = 0.0
        for i in range(d):
            q = w[i] + theta
            g += 1.0 / q
            gp -= 1.0 / (q * q)
        if np.abs(g) <= tol:
            status = OK
            break
        if g > 0.0:
            lo = theta
        else:
            hi = theta
        step = g / gp
        cand = theta - step
        if cand <= lo or cand >= hi:
            cand = 0.5 * (lo + hi)
        theta = cand

    if status != OK:
        return status, theta, lo, hi, it + 1

    total = 0.0
    for i in range(d):
        m = 1.0 / (w[i] + theta)
        if m < floor:
            m = floor
        values[i] = m
        total += m
    for i in range(d):
        m = values[i] / total
        if m < floor:
            m = floor
        values[i] = m
    return OK, theta, lo, hi, it + 1


def restore_order(values, basis, idx):
    """Move entry idx of an otherwise sorted (non-increasing) system into place."""
    d = values.shape[0]
    v = values[idx]
    pos = idx
    while pos > 0 and values[pos - 1] < v:
        pos -= 1
    if pos < idx:
        row = np.empty(basis.shape[1])
        for k in range(basis.shape[1]):
            row[k] = basis[idx, k]
        for m in range(idx, pos, -1):
            values[m] = values[m - 1]
            for k in range(basis.shape[1]):
                basis[m, k] = basis[m - 1, k]
        values[pos] = v
        for k in range(basis.shape[1]):
            basis[pos, k] = row[k]
        return
    while pos < d - 1 and values[pos + 1] > v:
        pos += 1
    if pos > idx:
        row = np.empty(basis.shape[1])
        for k in range(basis.shape[1]):
            row[k] = basis[idx, k]
        for m in range(idx, pos):
            values[m] = values[m + 1]
            for k in range(basis.shape[1]):
                basis[m, k] = basis[m + 1, k]
        values[pos] = v
        for k in range(basis.shape[1]):
            basis[pos, k] = row[k]


def orthogonality_error(basis):
    """max_{i,j} |<u_i, u_j> - delta_ij| over the stored eigenvector rows."""
    gram = np.dot(basis, basis.T)
    d = gram.shape[0]
    err = 0.0
    for i in range(d):
        for j in range(d):
            g = gram[i, j]
            if i == j:
                g -= 1.0
            if np.abs(g) > err:
                err = np.abs(g)
    return err


def gram_schmidt(basis):
    """Two-pass classical Gram-Schmidt on the eigenvector rows, in place.

    Returns -1 on success or the index of a row whose residual collapsed.
    """
    n = basis.shape[0]
    for _ in range(2):
        for i in range(n):
            for j in range(i):
                dot = 0.0
                for k in range(basis.shape[1]):
                    dot += basis[j, k] * basis[i, k]
                for k in range(basis.shape[1]):
                    basis[i, k] -= dot * basis[j, k]
            nrm = 0.0
            for k in range(basis.shape[1]):
                nrm += basis[i, k] * basis[i, k]
            nrm = np.sqrt(nrm)
            if nrm < 1e-8:
                return i
            inv = 1.0 / nrm
            for k in range(basis.shape[1]):
                basis[i, k] *= inv
    return -1


ALL_KERNELS = (
    "mix_weights",
    "draw_index",
    "diag_update",
    "dense_ondiag_update",
    "pair_update",
    "dense_offdiag_update",
    "project_trace_one",
    "restore_order",
    "orthogonality_error",
    "gram_schmidt",
)
