"""Loss-matrix environments and regret-accounting helpers.

Every oracle answers scalar queries ``w^T L_t w``; environments that can
also expose the per-trial matrix (for realized-regret accounting) or its
expectation (for pseudo-regret in stochastic settings) do so through
``reveal_matrix`` / ``expected_matrix``, returning None otherwise.
``bounded`` asserts a unit spectral-norm bound on every loss matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from .symlinalg import check_symmetric, spectral_norm_estimate

SPECTRAL_SLACK = 1e-9


@dataclass
class EnvConfig:
    kind: str  # rank1 | psd | spiked | static | adaptive
    dim: int
    horizon: int
    seed: int = 0
    epsilon: float | None = None  # spiked spike strength; defaults to d/(4 sqrt(T))
    rank: int | None = None  # psd rank cap
    path: str | None = None  # rank1 file mode
    profile: np.ndarray | None = None  # psd eigenvalue profile, clipped to [0, 1]
    randomize: bool = True  # psd: rescale the profile by fresh U[0,1] draws each trial
    matrix: np.ndarray | None = None  # static loss matrix

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError(f"horizon must be non-negative, got {self.horizon}")
        if self.dim < 2:
            raise ValueError(f"dim must be at least 2, got {self.dim}")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


class LossOracle:
    """Base interface; trials are indexed 0..T-1."""

    dim: int
    horizon: int
    bounded: bool = False

    def prepare(self, t: int) -> None:
        """Called before the learner draws its action for trial t."""

    def query(self, w: np.ndarray, t: int) -> float:
        raise NotImplementedError

    def reveal_matrix(self, t: int) -> np.ndarray | None:
        return None

    def expected_matrix(self, t: int) -> np.ndarray | None:
        return None


def sample_unit_sphere(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def load_vectors(path: str, dim: int) -> np.ndarray:
    """Read one vector per line (whitespace separated, '#' comments allowed)."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} columns, found {len(parts)}"
                )
            try:
                vec = np.array([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            nrm = np.linalg.norm(vec)
            if nrm == 0.0 or not np.isfinite(nrm):
                raise ValueError(f"{path}:{lineno}: zero or non-finite vector")
            rows.append(vec / nrm)
    return np.array(rows)


class RankOneStream(LossOracle):
    """L_t = -x_t x_t^T for a pre-drawn (or file-loaded) unit vector stream."""

    bounded = True

    def __init__(self, config: EnvConfig, rng: np.random.Generator | None = None):
        self.dim = config.dim
        self.horizon = config.horizon
        if config.path is not None:
            x = load_vectors(config.path, config.dim)
            if x.shape[0] < config.horizon:
                raise ValueError(
                    f"{config.path} provides {x.shape[0]} vectors, horizon needs {config.horizon}"
                )
            self.x = x[: config.horizon]
        else:
            rng = rng or np.random.default_rng(config.seed)
            x = rng.standard_normal((config.horizon, config.dim))
            self.x = x / np.linalg.norm(x, axis=1, keepdims=True)

    def query(self, w, t):
        return -float(np.dot(w, self.x[t]) ** 2)

    def reveal_matrix(self, t):
        return -np.outer(self.x[t], self.x[t])


class SpikedGaussian(LossOracle):
    """L_t = Z_t I - eps u u^T with a hidden unit spike and fresh N(0,1) noise.

    The spectral norm is unbounded (Gaussian tails), so runs must opt in
    explicitly.  The expected matrix -eps u u^T is exposed for pseudo-regret.
    """

    bounded = False

    def __init__(self, config: EnvConfig, rng: np.random.Generator | None = None):
        self.dim = config.dim
        self.horizon = config.horizon
        rng = rng or np.random.default_rng(config.seed)
        if config.epsilon is None:
            self.epsilon = config.dim / (4.0 * np.sqrt(config.horizon))
        else:
            self.epsilon = config.epsilon
        self.spike = sample_unit_sphere(rng, config.dim)
        self.noise = rng.standard_normal(config.horizon)

    def query(self, w, t):
        return float(self.noise[t] * np.dot(w, w) - self.epsilon * np.dot(w, self.spike) ** 2)

    def reveal_matrix(self, t):
        return self.noise[t] * np.eye(self.dim) - self.epsilon * np.outer(self.spike, self.spike)

    def expected_matrix(self, t):
        return -self.epsilon * np.outer(self.spike, self.spike)


class PsdStream(LossOracle):
    """Positive semidefinite losses of bounded rank and unit spectral norm.

    A rotation is drawn once per stream; each trial rotates a freshly
    rescaled copy of the eigenvalue profile (clipped into [0, 1]), so
    ``rank <= r`` and ``0 <= L_t <= I`` hold by construction.
    """

    bounded = True

    def __init__(self, config: EnvConfig, rng: np.random.Generator | None = None):
        self.dim = config.dim
        self.horizon = config.horizon
        rng = rng or np.random.default_rng(config.seed)
        r = config.rank if config.rank is not None else config.dim
        if not 1 <= r <= config.dim:
            raise ValueError(f"rank must be in [1, {config.dim}], got {r}")
        self.rank = r
        if config.profile is not None:
            profile = np.clip(np.asarray(config.profile, dtype=np.float64), 0.0, 1.0)
            if profile.shape != (r,):
                raise ValueError(f"profile must have shape ({r},), got {profile.shape}")
        else:
            profile = np.ones(r)
        self.profile = profile
        q, _ = np.linalg.qr(rng.standard_normal((config.dim, config.dim)))
        self.q = q[:, :r]
        if config.randomize:
            self.scales = rng.random((config.horizon, r))
        else:
            self.scales = np.ones((config.horizon, r))
        self.randomize = config.randomize

    def _values(self, t):
        return self.profile * self.scales[t]

    def query(self, w, t):
        proj = self.q.T @ w
        return float(np.dot(self._values(t) * proj, proj))

    def reveal_matrix(self, t):
        return (self.q * self._values(t)) @ self.q.T

    def expected_matrix(self, t):
        mean = self.profile * (0.5 if self.randomize else 1.0)
        return (self.q * mean) @ self.q.T


class StaticMatrix(LossOracle):
    """The same symmetric loss matrix every trial."""

    bounded = True

    def __init__(self, config: EnvConfig):
        self.dim = config.dim
        self.horizon = config.horizon
        m = check_symmetric(config.matrix, "static loss matrix")
        nrm = spectral_norm_estimate(m)
        if nrm > 1.0 + SPECTRAL_SLACK:
            raise ValueError(f"static loss spectral norm {nrm:.6f} exceeds 1")
        self.matrix = m

    def query(self, w, t):
        return float(w @ self.matrix @ w)

    def reveal_matrix(self, t):
        return self.matrix.copy()

    def expected_matrix(self, t):
        return self.matrix.copy()


class AdaptiveOracle(LossOracle):
    """Adversary driven by a history callback.

    The callback receives ``(t, history)`` where history is the tuple of
    (action, loss) pairs from trials strictly before t, and must return a
    symmetric matrix of spectral norm at most 1.  It runs inside
    ``prepare``, before the learner draws w_t, so the current action can
    never leak into the loss choice.
    """

    bounded = True

    def __init__(self, callback, dim: int, horizon: int):
        self.callback = callback
        self.dim = dim
        self.horizon = horizon
        self.history: list[tuple[np.ndarray, float]] = []
        self._matrices: dict[int, np.ndarray] = {}

    def prepare(self, t):
        if t in self._matrices:
            return
        m = np.asarray(self.callback(t, tuple(self.history)), dtype=np.float64)
        m = check_symmetric(m, f"adaptive loss at trial {t}")
        nrm = spectral_norm_estimate(m)
        if nrm > 1.0 + SPECTRAL_SLACK:
            raise ValueError(f"adaptive loss at trial {t} has spectral norm {nrm:.6f} > 1")
        self._matrices[t] = m

    def query(self, w, t):
        self.prepare(t)
        loss = float(w @ self._matrices[t] @ w)
        self.history.append((np.array(w, copy=True), loss))
        return loss

    def reveal_matrix(self, t):
        if t not in self._matrices:
            raise ValueError(f"trial {t} has not been played yet")
        return self._matrices[t].copy()


def adaptive_hook(callback, dim: int, horizon: int) -> AdaptiveOracle:
    return AdaptiveOracle(callback, dim, horizon)


def rank_one_stream(config: EnvConfig, rng: np.random.Generator | None = None) -> RankOneStream:
    return RankOneStream(config, rng)


def spiked_gaussian(config: EnvConfig, rng: np.random.Generator | None = None) -> SpikedGaussian:
    return SpikedGaussian(config, rng)


def psd_stream(config: EnvConfig, rng: np.random.Generator | None = None) -> PsdStream:
    return PsdStream(config, rng)


def make_oracle(config: EnvConfig, rng: np.random.Generator | None = None) -> LossOracle:
    if config.kind == "rank1":
        return rank_one_stream(config, rng)
    if config.kind == "psd":
        return psd_stream(config, rng)
    if config.kind == "spiked":
        return spiked_gaussian(config, rng)
    if config.kind == "static":
        return StaticMatrix(config)
    raise ValueError(f"unknown environment kind {config.kind!r}")


def cumulative_matrix(oracle: LossOracle, horizon: int, expected: bool = False) -> np.ndarray | None:
    total = None
    for t in range(horizon):
        m = oracle.expected_matrix(t) if expected else oracle.reveal_matrix(t)
        if m is None:
            return None
        total = m if total is None else total + m
    if total is None and horizon == 0:
        total = np.zeros((oracle.dim, oracle.dim))
    return total


def best_fixed_comparator(oracle: LossOracle, horizon: int) -> tuple[np.ndarray, float]:
    """Best unit vector in hindsight: bottom eigenpair of the cumulative loss.

    Uses revealed matrices when available, falling back to expected ones.
    """
    total = cumulative_matrix(oracle, horizon, expected=False)
    if total is None:
        total = cumulative_matrix(oracle, horizon, expected=True)
    if total is None:
        raise ValueError("environment exposes neither realized nor expected loss matrices")
    vals, vecs = np.linalg.eigh(total)
    return vecs[:, 0].copy(), float(vals[0])
