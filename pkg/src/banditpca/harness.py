"""Game loop, learning-rate tuning rules, regret accounting, diagnostics.

``run_game`` wires one learner, one sampling scheme, and one environment
for a fixed horizon.  Per trial it mixes the sampling weights, draws an
action, queries the scalar loss, applies the branch-matched incremental
eigensystem update, and projects back to unit trace.  Sparse-scheme trials
cost O(d) plus amortized re-orthogonalization; dense trials may cost O(d^3).
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend
from . import _kernels as K
from .environments import LossOracle, cumulative_matrix
from .mirror_descent import (
    PROJECTION_MAX_ITER,
    PROJECTION_TOL,
    DensityState,
    LearnerConfig,
    ProjectionError,
)
from .samplers import (
    Action,
    DenseOff,
    DenseOn,
    LossEstimate,
    SparseDiag,
    SparseOff,
    estimate_dense,
    estimate_sparse,
)
from .symlinalg import EigenSystem


@dataclass
class TrialRecord:
    t: int
    loss: float
    branch: str
    eta: float
    gamma: float
    update_ns: int
    mh_term: float | None = None
    logdet_term: float | None = None


@dataclass
class RunResult:
    records: list
    cumulative_loss: float
    comparator_realized: float | None
    comparator_pseudo: float | None
    regret_realized: float | None
    regret_pseudo: float | None
    pseudo_cumulative_loss: float | None
    config: LearnerConfig
    scheme: str
    horizon: int
    total_runtime_ns: int
    actions: np.ndarray = field(repr=False, default=None)
    final_state: DensityState = field(repr=False, default=None)


class RunError(RuntimeError):
    """A trial failed; carries the trial index and the cause."""

    def __init__(self, trial: int, cause: str):
        super().__init__(f"run aborted at trial {trial}: {cause}")
        self.trial = trial
        self.cause = cause


_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def tune_eta_worstcase(d: int, horizon: int) -> tuple[float, float]:
    """Worst-case dense tuning: eta = min(sqrt(ln T / (d T)), 1/(2d)), no exploration."""
    if d < 2 or horizon < 2:
        raise ValueError("worst-case tuning needs d >= 2 and T >= 2")
    eta = min(np.sqrt(np.log(horizon) / (d * horizon)), 1.0 / (2.0 * d))
    return float(eta), 0.0


def tune_eta_firstorder(d: int, horizon: int, lstar_bound: float) -> tuple[float, float]:
    """First-order dense tuning for nonnegative (PSD) losses with a known
    bound on the comparator's cumulative loss."""
    if lstar_bound <= 0.0:
        raise ValueError(f"comparator-loss bound must be positive, got {lstar_bound}")
    eta = min(np.sqrt(np.log(horizon) / (d * lstar_bound)), 1.0 / (4.0 * d * d))
    return float(eta), 0.0


def tune_eta_sparse(d: int, horizon: int, r_bound: float) -> tuple[float, float]:
    """Sparse tuning from a known bound r on the mean squared Frobenius norm."""
    if not 0.0 < r_bound <= d:
        raise ValueError(f"r bound must lie in (0, {d}], got {r_bound}")
    eta = float(min(np.sqrt(np.log(horizon) / (r_bound * horizon)), 1.0 / (2.0 * d)))
    gamma = d * eta
    if gamma > 1.0:
        raise ValueError(f"exploration rate gamma = d*eta = {gamma} exceeds 1")
    assert gamma <= 0.5 + 1e-12, "eta cap should keep gamma at or below 1/2"
    return eta, float(gamma)


def probe_variance_terms(state: DensityState, estimate: LossEstimate) -> tuple[float, float]:
    """Exact variance diagnostics for a loss estimate against the current state.

    Returns (tr(W Ltilde^2), tr((W^{1/2} Ltilde W^{1/2})^2)); the first is
    the progress term a quantum-entropy regularizer would pay, the second
    the log-determinant one.
    """
    mu = state.values
    if (
        estimate.basis_diag is None
        and estimate.basis_rank_one is None
        and len(estimate.diag_terms) + len(estimate.offdiag_terms) == 1
    ):
        if estimate.diag_terms:
            i, c = estimate.diag_terms[0]
            return c * c * mu[i], c * c * mu[i] * mu[i]
        i, j, c = estimate.offdiag_terms[0]
        return c * c * (mu[i] + mu[j]), 2.0 * c * c * mu[i] * mu[j]
    m = estimate.in_basis_matrix()
    m2 = m * m
    mh = float(mu @ m2.sum(axis=1))
    logdet = float(mu @ m2 @ mu)
    return mh, logdet


def _trial_uniforms(seed: int, horizon: int, width: int) -> np.ndarray:
    # one counter-based stream, one fixed-width row per trial: trial t's
    # draws live at row t no matter what earlier branches consumed
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.random((horizon, width))


def run_game(
    config: LearnerConfig,
    scheme: str,
    oracle: LossOracle,
    horizon: int,
    *,
    allow_unbounded: bool = False,
    probe_variance: bool = False,
    measure_time: bool = True,
    regret: str = "auto",
    validate_every: int = 0,
) -> RunResult:
    if scheme not in ("dense", "sparse"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if oracle.dim != config.dim:
        raise ValueError(f"oracle dimension {oracle.dim} != learner dimension {config.dim}")
    if horizon > oracle.horizon:
        raise ValueError(f"horizon {horizon} exceeds environment horizon {oracle.horizon}")
    if not oracle.bounded and not allow_unbounded:
        raise ValueError(
            "environment does not certify a unit spectral-norm bound; "
            "pass allow_unbounded=True to run anyway"
        )
    if regret not in ("auto", "skip"):
        raise ValueError(f"regret mode must be 'auto' or 'skip', got {regret!r}")

    k = backend.active()
    d = config.dim
    eta = config.eta
    gamma = config.gamma
    run_start = time.perf_counter_ns()

    width = 3 if scheme == "sparse" else 2 + d
    uniforms = _trial_uniforms(config.seed, horizon, width)
    values = np.full(d, 1.0 / d)
    basis = np.eye(d)
    actions = np.empty((horizon, d))
    signs_buf = np.empty(d)
    records: list[TrialRecord] = []
    cum_loss = 0.0
    cadence = config.reorthogonalize_every

    for t in range(horizon):
        oracle.prepare(t)
        row = uniforms[t]
        t0 = time.perf_counter_ns() if measure_time else 0
        lam = k.mix_weights(values, gamma)
        w = actions[t]

        if scheme == "sparse":
            i = k.draw_index(lam, row[0])
            j = k.draw_index(lam, row[1])
            if i == j:
                s = 1
                w[:] = basis[i]
            else:
                s = 1 if row[2] < 0.5 else -1
                w[:] = basis[i] + s * basis[j]
                w *= _INV_SQRT2
            sample_ns = (time.perf_counter_ns() - t0) if measure_time else 0
            loss = oracle.query(w, t)
            t1 = time.perf_counter_ns() if measure_time else 0
            if i == j:
                branch = "sparse_diag"
                probes = _maybe_probe(probe_variance, values, basis, w, SparseDiag(i), loss, lam)
                status = k.diag_update(values, i, loss / (lam[i] * lam[i]), eta)
                if status != K.OK:
                    raise RunError(t, "sparse diagonal update hit a non-positive denominator")
                touched = (i,)
            else:
                branch = "sparse_off"
                probes = _maybe_probe(probe_variance, values, basis, w, SparseOff(i, j, s), loss, lam)
                coeff = s * loss / (2.0 * lam[i] * lam[j])
                beta = eta * coeff * np.sqrt(values[i] * values[j])
                status = k.pair_update(values, basis, i, j, beta)
                if status != K.OK:
                    raise RunError(t, f"rank-two rotation rejected beta = {beta!r}")
                # the kernel parks mu_plus at the smaller index; restoring
                # left-mover before right-mover keeps both scans single-entry
                touched = (i, j) if i < j else (j, i)
        else:
            if row[0] < 0.5:
                branch = "dense_on"
                i = k.draw_index(lam, row[1])
                w[:] = basis[i]
                sample_ns = (time.perf_counter_ns() - t0) if measure_time else 0
                loss = oracle.query(w, t)
                t1 = time.perf_counter_ns() if measure_time else 0
                probes = _maybe_probe(probe_variance, values, basis, w, DenseOn(i), loss, lam)
                if gamma == 0.0:
                    status = k.dense_ondiag_update(values, i, loss, eta)
                else:
                    status = k.diag_update(values, i, 2.0 * loss / lam[i], eta)
                if status != K.OK:
                    raise RunError(t, "dense diagonal update hit a non-positive denominator")
                touched = (i,)
            else:
                branch = "dense_off"
                np.copyto(signs_buf, np.where(row[2:] < 0.5, 1.0, -1.0))
                w[:] = (signs_buf * np.sqrt(lam)) @ basis
                sample_ns = (time.perf_counter_ns() - t0) if measure_time else 0
                loss = oracle.query(w, t)
                t1 = time.perf_counter_ns() if measure_time else 0
                probes = _maybe_probe(
                    probe_variance, values, basis, w, DenseOff(signs_buf.copy()), loss, lam
                )
                status = k.dense_offdiag_update(
                    values, basis, signs_buf, loss, eta, lam, gamma == 0.0
                )
                if status == K.ERR_DENOMINATOR:
                    raise RunError(t, f"dense update precondition failed (eta*loss = {eta * loss!r})")
                if status == K.ERR_NOT_PD:
                    raise RunError(t, "dense update produced a non-positive-definite intermediate")
                touched = ()

        pstatus, theta, lo, hi, _ = k.project_trace_one(
            values, config.floor, PROJECTION_TOL, PROJECTION_MAX_ITER
        )
        if pstatus != K.OK:
            raise RunError(t, f"trace projection did not converge; bracket [{lo!r}, {hi!r}]")
        for idx in touched:
            k.restore_order(values, basis, idx)
        if cadence > 0 and (t + 1) % cadence == 0:
            bad = k.gram_schmidt(basis)
            if bad >= 0:
                raise RunError(t, f"eigenvector {bad} collapsed during re-orthogonalization")
        update_ns = sample_ns + (time.perf_counter_ns() - t1) if measure_time else 0

        cum_loss += loss
        rec = TrialRecord(t, loss, branch, eta, gamma, update_ns)
        if probes is not None:
            rec.mh_term, rec.logdet_term = probes
        records.append(rec)
        if validate_every and (t + 1) % validate_every == 0:
            DensityState(EigenSystem(values, basis.T), config.floor).validate()

    final = DensityState(EigenSystem(values, basis.T.copy()), config.floor)
    result = RunResult(
        records=records,
        cumulative_loss=cum_loss,
        comparator_realized=None,
        comparator_pseudo=None,
        regret_realized=None,
        regret_pseudo=None,
        pseudo_cumulative_loss=None,
        config=replace(config),
        scheme=scheme,
        horizon=horizon,
        total_runtime_ns=time.perf_counter_ns() - run_start,
        actions=actions,
        final_state=final,
    )
    if regret == "auto":
        fill_regret(result, oracle)
        result.total_runtime_ns = time.perf_counter_ns() - run_start
    return result


def _maybe_probe(enabled, values, basis, w, branch, loss, lam):
    if not enabled:
        return None
    state = DensityState(EigenSystem(values, basis.T))
    action = Action(w, branch)
    if isinstance(branch, (SparseDiag, SparseOff)):
        est = estimate_sparse(action, loss, lam)
    else:
        est = estimate_dense(action, loss, lam)
    return probe_variance_terms(state, est)


def _regret_parts(result: RunResult, oracle: LossOracle) -> dict:
    horizon = result.horizon
    parts: dict = {}
    total = cumulative_matrix(oracle, horizon, expected=False)
    if total is not None:
        comparator = float(np.linalg.eigvalsh(total)[0])
        parts["comparator_realized"] = comparator
        parts["regret_realized"] = result.cumulative_loss - comparator
    exp_total = cumulative_matrix(oracle, horizon, expected=True)
    if exp_total is not None and result.actions is not None:
        pseudo_loss = 0.0
        for t in range(horizon):
            m = oracle.expected_matrix(t)
            w = result.actions[t]
            pseudo_loss += float(w @ m @ w)
        comparator = float(np.linalg.eigvalsh(exp_total)[0])
        parts["comparator_pseudo"] = comparator
        parts["pseudo_cumulative_loss"] = pseudo_loss
        parts["regret_pseudo"] = pseudo_loss - comparator
    return parts


def compute_regret(result: RunResult, oracle: LossOracle) -> tuple[float | None, float | None]:
    """Regret against the best fixed unit vector in hindsight.

    Realized regret compares the observed cumulative loss with the bottom
    eigenvalue of the summed revealed matrices; pseudo-regret replaces both
    sides by their conditional expectations (wherever the environment
    exposes expected matrices).  Either figure is None when the matrix view
    it needs is unavailable.
    """
    parts = _regret_parts(result, oracle)
    return parts.get("regret_realized"), parts.get("regret_pseudo")


def fill_regret(result: RunResult, oracle: LossOracle) -> None:
    for key, value in _regret_parts(result, oracle).items():
        setattr(result, key, value)
