"""Data-augmentation sampler for Gaussian-mixture compound Poisson models.

The latent state is the table of jump counts per type on every segment with
a nonzero increment. One sweep of the chain

1. updates every active segment by an independence Metropolis-Hastings step
   whose proposal is the prior of the counts conditioned on at least one
   jump (zero-truncated Poisson total, multinomial split by ``psi / lam``);
   the Poisson factors cancel, leaving the ratio of Gaussian likelihoods;
2. draws ``psi_j | counts ~ Gamma(alpha0 + s_j, beta0 + T)`` and then
   ``(mu, tau) | z, counts`` jointly from their Normal-Gamma conditional.

Randomness for segment ``i`` at iteration ``t`` comes from the stream keyed
``(seed, SEGMENTS, t)`` at a position fixed by ``i`` alone, so results do not
depend on the traversal order of the segments. Parameter draws use the
stream ``(seed, PARAMS, t)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import gammaln, xlogy

from . import _random
from .data import AuxiliaryState, ObservationSet
from .model import ModelParams, normal_logpdf

__all__ = [
    "Hyperparameters",
    "InitPolicy",
    "ChainState",
    "Trace",
    "SamplerError",
    "MuTauConditional",
    "default_init_params",
    "init_aux",
    "propose_segment",
    "proposal_logpmf",
    "accept_ratio",
    "update_segments",
    "psi_conditional",
    "update_psi",
    "mu_tau_conditional",
    "update_mu_tau",
    "log_prior",
    "log_joint",
    "conditional_posterior_mean",
    "run_chain",
]


class SamplerError(RuntimeError):
    """An internal invariant of the chain was violated."""


@dataclass(frozen=True)
class Hyperparameters:
    """Prior settings.

    ``psi_j ~ Gamma(alpha0, beta0)`` independently, ``tau ~ Gamma(alpha1, beta1)``
    and ``mu | tau ~ N(xi, I / (tau * kappa))``. Gammas use the shape/rate form.
    """

    xi: np.ndarray
    alpha0: float = 1.0
    beta0: float = 1.0
    alpha1: float = 1.0
    beta1: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        object.__setattr__(self, "xi", xi)
        for name in ("alpha0", "beta0", "alpha1", "beta1", "kappa"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value}")

    @classmethod
    def default(cls, J: int, **kw) -> "Hyperparameters":
        return cls(np.zeros(J), **kw)

    @property
    def J(self) -> int:
        return self.xi.size

    def as_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "alpha1": self.alpha1,
            "beta1": self.beta1,
            "kappa": self.kappa,
            "xi": self.xi.tolist(),
        }


class InitPolicy(enum.Enum):
    PRIOR_CONDITIONED = "prior_conditioned"
    SINGLE_NEAREST_MEAN = "single_nearest_mean"


@dataclass
class ChainState:
    params: ModelParams
    aux: AuxiliaryState
    iteration: int = 0
    accepted: np.ndarray | None = None
    proposed: np.ndarray | None = None

    def __post_init__(self):
        size = self.aux.index.size
        if self.accepted is None:
            self.accepted = np.zeros(size, dtype=np.int64)
        if self.proposed is None:
            self.proposed = np.zeros(size, dtype=np.int64)

    def acceptance_rate(self) -> float:
        total = self.proposed.sum()
        return float(self.accepted.sum() / total) if total else math.nan


@dataclass
class Trace:
    """Recorded iterates of the chain.

    Row ``r`` holds the state after iteration ``iterations[r]``. The
    per-iteration acceptance counts cover every iteration, recorded or not.
    """

    iterations: np.ndarray
    psi: np.ndarray
    mu: np.ndarray
    tau: np.ndarray
    thin: int = 1
    burn_in: int = 0
    accepted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_active: int = 0

    def __post_init__(self):
        self.iterations = np.asarray(self.iterations, dtype=np.int64)
        self.psi = np.atleast_2d(np.asarray(self.psi, dtype=float)).reshape(self.iterations.size, -1)
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=float)).reshape(self.iterations.size, -1)
        self.tau = np.asarray(self.tau, dtype=float).reshape(-1)
        self.accepted = np.asarray(self.accepted, dtype=np.int64)

    def __len__(self) -> int:
        return self.iterations.size

    @property
    def J(self) -> int:
        return self.psi.shape[1]

    @property
    def lam(self) -> np.ndarray:
        return self.psi.sum(axis=1)

    def columns(self) -> dict[str, np.ndarray]:
        """Named parameter columns in the trace file order."""
        out = {f"psi_{j + 1}": self.psi[:, j] for j in range(self.J)}
        out.update({f"mu_{j + 1}": self.mu[:, j] for j in range(self.J)})
        out["tau"] = self.tau
        out["lambda"] = self.lam
        return out

    def params_at(self, row: int) -> ModelParams:
        return ModelParams(self.psi[row], self.mu[row], self.tau[row])

    def retained(self, burn_in: int = 0, thin: int = 1) -> np.ndarray:
        """Row indices after dropping iterations ``<= burn_in`` and striding by ``thin``."""
        if thin < 1:
            raise ValueError("thin must be >= 1")
        return np.flatnonzero(self.iterations > burn_in)[::thin]

    def acceptance_rate(self, burn_in: int = 0) -> float:
        """Fraction of accepted segment proposals over iterations after ``burn_in``."""
        acc = self.accepted[burn_in:]
        if acc.size == 0 or self.n_active == 0:
            return math.nan
        return float(acc.sum() / (acc.size * self.n_active))


# ---------------------------------------------------------------------------
# segment proposals


def _ztp_width(rate_max: float) -> int:
    # tail of Poisson(rate) beyond this is far below double precision
    return int(rate_max + 10.0 * math.sqrt(rate_max) + 20)


def _ztp_counts(rates: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Zero-truncated Poisson draws by inversion of the truncated cdf."""
    uniq, inv = np.unique(rates, return_inverse=True)
    width = _ztp_width(float(uniq.max()))
    k = np.arange(1, width + 1)
    logp = k * np.log(uniq)[:, None] - gammaln(k + 1) - np.log(np.expm1(uniq))[:, None]
    cdf = np.cumsum(np.exp(logp), axis=1)
    if uniq.size == 1:
        n = 1 + np.searchsorted(cdf[0], u, side="left")
    else:
        n = 1 + (cdf[inv] < u[:, None]).sum(axis=1)
    return np.minimum(n, width)


def _split_types(n: np.ndarray, rho: np.ndarray, label_u: np.ndarray) -> np.ndarray:
    """Multinomial split of ``n[r]`` jumps using the first ``n[r]`` uniforms of column ``r``."""
    J = rho.size
    counts = np.zeros((n.size, J), dtype=np.int64)
    if J == 1:
        counts[:, 0] = n
        return counts
    labels = np.searchsorted(np.cumsum(rho)[:-1], label_u, side="right")
    used = np.arange(label_u.shape[0])[:, None] < n[None, :]
    for j in range(J):
        counts[:, j] = ((labels == j) & used).sum(axis=0)
    return counts


def _propose(params: ModelParams, deltas: np.ndarray, u_count: np.ndarray, draw_labels) -> np.ndarray:
    n = _ztp_counts(params.lam * deltas, u_count)
    label_u = draw_labels(int(n.max()) if n.size else 0)
    return _split_types(n, params.rho, label_u)


def propose_segment(params: ModelParams, delta: float, rng) -> np.ndarray:
    """Draw proposed type counts for one segment.

    The total is zero-truncated Poisson with mean ``lam * delta``; it is
    split over types multinomially with probabilities ``psi / lam``.
    """
    rng = _random.as_generator(rng)
    u = rng.random(1)
    counts = _propose(params, np.array([float(delta)]), u, lambda k: rng.random((k, 1)))
    return counts[0]


def proposal_logpmf(params: ModelParams, delta: float, counts) -> float:
    """Log proposal mass ``q(counts | theta)`` for one segment."""
    counts = np.asarray(counts)
    if counts.sum() < 1:
        return -math.inf
    rates = params.psi * delta
    return float(
        -math.log(math.expm1(params.lam * delta)) + (xlogy(counts, rates) - gammaln(counts + 1)).sum()
    )


def _log_gauss_height(z, counts, mu, tau):
    n = counts.sum(axis=-1)
    return normal_logpdf(z, counts @ mu, n / tau)


def accept_ratio(params: ModelParams, z: float, current, proposal) -> float:
    """Metropolis-Hastings ratio ``A`` for replacing ``current`` by ``proposal``.

    Equal to the ratio of Gaussian likelihoods of ``z``; accept with
    probability ``min(1, A)``.
    """
    cur = np.asarray(current)
    prop = np.asarray(proposal)
    if cur.sum() < 1 or prop.sum() < 1:
        raise ValueError("both count vectors need at least one jump")
    log_a = _log_gauss_height(z, prop, params.mu, params.tau) - _log_gauss_height(z, cur, params.mu, params.tau)
    return float(np.exp(log_a))


def update_segments(state: ChainState, data: ObservationSet, seed: int, purpose: int = _random.SEGMENTS) -> ChainState:
    """One Metropolis-Hastings update of every active segment.

    Uses the stream keyed by ``(seed, iteration)`` where ``iteration`` is
    ``state.iteration + 1``. Returns a new state; ``iteration`` itself is
    left for the caller to advance.
    """
    aux = state.aux
    params = state.params
    if aux.index.size == 0:
        return ChainState(params, aux.copy(), state.iteration, state.accepted.copy(), state.proposed.copy())
    rng = _random.stream(seed, purpose, state.iteration + 1)
    head = rng.random((2, data.n))
    idx = aux.index
    u_count, u_accept = head[0, idx], head[1, idx]

    def draw_labels(k):
        return rng.random((k, data.n))[:, idx]

    prop = _propose(params, data.deltas[idx], u_count, draw_labels)
    z = data.z[idx]
    log_a = _log_gauss_height(z, prop, params.mu, params.tau) - _log_gauss_height(z, aux.counts, params.mu, params.tau)
    accept = u_accept < np.exp(np.minimum(log_a, 0.0))
    counts = np.where(accept[:, None], prop, aux.counts)
    return ChainState(
        params,
        AuxiliaryState(idx, counts),
        state.iteration,
        state.accepted + accept,
        state.proposed + 1,
    )


# ---------------------------------------------------------------------------
# parameter updates


def psi_conditional(aux: AuxiliaryState, hyper: Hyperparameters, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Shape and rate of the Gamma conditionals of ``psi``."""
    if not T > 0:
        raise ValueError("total time T must be positive")
    shape = hyper.alpha0 + aux.s.astype(float)
    rate = np.full(aux.J, hyper.beta0 + T)
    return shape, rate


def update_psi(aux: AuxiliaryState, hyper: Hyperparameters, T: float, rng) -> np.ndarray:
    shape, rate = psi_conditional(aux, hyper, T)
    return _random.as_generator(rng).gamma(shape, 1.0 / rate)


@dataclass(frozen=True)
class MuTauConditional:
    """Normal-Gamma conditional of ``(mu, tau)`` given increments and counts.

    ``tau ~ Gamma(tau_shape, tau_rate)`` and ``mu | tau ~ N(mean, P^{-1} / tau)``
    with ``P = chol @ chol.T``.
    """

    P: np.ndarray
    q: np.ndarray
    R: float
    chol: np.ndarray
    mean: np.ndarray
    tau_shape: float
    tau_rate: float

    @property
    def residual(self) -> float:
        """``R - q' P^{-1} q``, twice the excess of the Gamma rate over ``beta1``."""
        return float(self.R - self.q @ self.mean)


def mu_tau_conditional(data: ObservationSet, aux: AuxiliaryState, hyper: Hyperparameters) -> MuTauConditional:
    counts = aux.counts.astype(float)
    z = data.z[aux.index]
    if counts.shape[0] and np.any(counts.sum(axis=1) < 1):
        raise SamplerError("active segment with zero jumps")
    w = 1.0 / counts.sum(axis=1) if counts.shape[0] else np.zeros(0)
    J = hyper.J
    P = hyper.kappa * np.eye(J) + (counts * w[:, None]).T @ counts
    q = hyper.kappa * hyper.xi + counts.T @ (w * z)
    R = float(hyper.kappa * hyper.xi @ hyper.xi + (w * z * z).sum())
    try:
        c, lower = cho_factor(P, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SamplerError(f"precision matrix not positive definite: {P}") from exc
    mean = cho_solve((c, lower), q)
    resid = R - float(q @ mean)
    if resid < -1e-10 * max(1.0, R):
        raise SamplerError(f"negative Gamma rate excess R - q'P^-1 q = {resid}")
    if resid <= 0.0:
        warnings.warn("R - q'P^-1 q is zero to rounding; tau rate reduces to beta1", RuntimeWarning, stacklevel=2)
        resid = 0.0
    return MuTauConditional(
        P=P,
        q=q,
        R=R,
        chol=np.tril(c),
        mean=mean,
        tau_shape=hyper.alpha1 + 0.5 * aux.index.size,
        tau_rate=hyper.beta1 + 0.5 * resid,
    )


def update_mu_tau(data: ObservationSet, aux: AuxiliaryState, hyper: Hyperparameters, rng) -> tuple[np.ndarray, float]:
    """Draw ``tau`` from its marginal conditional, then ``mu | tau``."""
    rng = _random.as_generator(rng)
    cond = mu_tau_conditional(data, aux, hyper)
    tau = float(rng.gamma(cond.tau_shape, 1.0 / cond.tau_rate))
    eps = rng.standard_normal(hyper.J)
    mu = cond.mean + solve_triangular(cond.chol, eps, lower=True, trans="T") / math.sqrt(tau)
    return mu, tau


# ---------------------------------------------------------------------------
# joint density


def _gamma_logpdf(x, shape, rate):
    return shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x


def log_prior(params: ModelParams, hyper: Hyperparameters) -> float:
    lp = _gamma_logpdf(params.psi, hyper.alpha0, hyper.beta0).sum()
    lp += normal_logpdf(params.mu, hyper.xi, 1.0 / (params.tau * hyper.kappa)).sum()
    lp += _gamma_logpdf(params.tau, hyper.alpha1, hyper.beta1)
    return float(lp)


def log_joint(params: ModelParams, data: ObservationSet, aux: AuxiliaryState, hyper: Hyperparameters) -> float:
    """Log density of ``(theta, z, counts)`` under the hierarchical model.

    Segments outside the active set carry zero counts and contribute only
    their Poisson factor ``exp(-lam * delta_i)``. Returns ``-inf`` (with a
    ``RuntimeWarning``) if the counts are inconsistent with the data.
    """
    if not np.array_equal(aux.index, data.active) or (aux.index.size and np.any(aux.n < 1)):
        warnings.warn("counts inconsistent with the active segments", RuntimeWarning, stacklevel=2)
        return -math.inf
    counts = aux.counts
    rates = np.outer(data.deltas[aux.index], params.psi)
    poisson_part = -params.lam * data.T + float((xlogy(counts, rates) - gammaln(counts + 1)).sum())
    gauss_part = float(_log_gauss_height(data.z[aux.index], counts, params.mu, params.tau).sum())
    return log_prior(params, hyper) + poisson_part + gauss_part


def conditional_posterior_mean(data: ObservationSet, aux: AuxiliaryState, hyper: Hyperparameters) -> ModelParams:
    """Posterior mean of ``theta`` given known counts (e.g. the simulation truth)."""
    shape, rate = psi_conditional(aux, hyper, data.T)
    cond = mu_tau_conditional(data, aux, hyper)
    return ModelParams(shape / rate, cond.mean, cond.tau_shape / cond.tau_rate)


# ---------------------------------------------------------------------------
# initialisation and driver


def _kmeans_1d(y: np.ndarray, k: int, n_steps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    centres = np.quantile(y, (np.arange(k) + 0.5) / k)
    labels = np.zeros(y.size, dtype=np.int64)
    for _ in range(n_steps):
        labels = np.argmin(np.abs(y[:, None] - centres[None, :]), axis=1)
        new = np.array([y[labels == j].mean() if np.any(labels == j) else centres[j] for j in range(k)])
        if np.allclose(new, centres):
            break
        centres = new
    return centres, labels


def _count_table(J: int, max_total: int) -> np.ndarray:
    """Count vectors with ``1 <= sum <= max_total``."""
    from .model import _count_vectors

    return np.concatenate([_count_vectors(J, m) for m in range(1, max_total + 1)])


def _em_refine(
    data: ObservationSet, params: ModelParams, n_steps: int, max_vectors: int = 500, max_points: int = 3000
) -> tuple[ModelParams, float]:
    """EM for the counts model with the count vectors enumerated up to a cap.

    Returns the final parameters and the log-likelihood (up to a constant,
    with the count sums truncated) at the last E-step. With more than
    ``max_points`` nonzero increments an evenly spaced subset is used.
    """
    idx = data.active
    T = data.T
    if idx.size > max_points:
        # thin evenly; rescale the exposure so rates stay comparable
        keep = idx[np.linspace(0, idx.size - 1, max_points).astype(np.int64)]
        T *= keep.size / idx.size
        idx = keep
    z, logd = data.z[idx], np.log(data.deltas[idx])
    J = params.J
    rate_max = params.lam * float(data.deltas[idx].max())
    max_total = max(3, int(rate_max + 4.0 * math.sqrt(rate_max) + 3))
    while max_total > 1 and math.comb(max_total + J, J) - 1 > max_vectors:
        max_total -= 1
    A = _count_table(J, max_total).astype(float)
    n = A.sum(axis=1)
    lg = gammaln(A + 1).sum(axis=1)
    psi, mu, tau = params.psi, params.mu, params.tau
    loglik = -math.inf
    for _ in range(n_steps):
        logw = (A @ np.log(psi) - lg)[None, :] + logd[:, None] * n[None, :]
        logw = logw + normal_logpdf(z[:, None], (A @ mu)[None, :], (n / tau)[None, :])
        top = logw.max(axis=1, keepdims=True)
        w = np.exp(logw - top)
        norm = w.sum(axis=1, keepdims=True)
        loglik = float((top + np.log(norm)).sum()) - float(psi.sum()) * T
        w /= norm
        v = w.sum(axis=0)
        new_psi = np.maximum((w @ A).sum(axis=0) / T, 1e-8)
        P = (A * (v / n)[:, None]).T @ A + 1e-10 * np.eye(J)
        q = A.T @ ((w * z[:, None]).sum(axis=0) / n)
        new_mu = np.linalg.solve(P, q)
        resid = (w * (z[:, None] - (A @ new_mu)[None, :]) ** 2 / n[None, :]).sum()
        new_tau = idx.size / resid if resid > 0 else tau
        done = np.allclose(new_psi, psi, rtol=1e-6) and np.allclose(new_mu, mu, rtol=1e-6, atol=1e-8)
        psi, mu, tau = new_psi, new_mu, float(new_tau)
        if done:
            break
    return ModelParams(psi, mu, tau), loglik


def default_init_params(data: ObservationSet, J: int, em_steps: int = 200) -> ModelParams:
    """Deterministic data-driven starting point.

    The total rate comes from the fraction of zero increments. Component
    means are started from several guesses (1-d k-means on the nonzero
    increments, their quantiles, and the values nearest zero) and each
    start is refined by ``em_steps`` EM iterations for the augmented model.
    The refined start with the largest likelihood wins. Sums of several
    jumps create spurious clusters, so a single start is easily trapped in
    a local optimum where the components merge.
    """
    n = data.n
    p0 = 1.0 - data.n_active / n
    p0 = min(max(p0, 0.5 / n), 1.0 - 0.5 / n)
    lam = -math.log(p0) / (data.T / n)
    z = data.z[data.active]
    if z.size < 2 * J:
        return ModelParams(np.full(J, lam / J), np.zeros(J), 1.0)
    centres, labels = _kmeans_1d(z, J)
    within = float(((z - centres[labels]) ** 2).mean())
    tau = 1.0 / within if within > 0 else 1.0
    sizes = np.bincount(labels, minlength=J) + 1.0
    starts = [ModelParams(lam * sizes / sizes.sum(), centres, tau)]
    # single jumps dominate among the smaller |z| once multi-jump sums are removed
    mid = z[np.argsort(np.abs(z))[: max(2 * J, int(z.size * math.exp(-lam * data.T / n)))]]
    for sample in (z, mid):
        guess = np.quantile(sample, (np.arange(J) + 0.5) / J)
        spread = float(np.var(sample)) / J
        starts.append(ModelParams(np.full(J, lam / J), guess, 1.0 / spread if spread > 0 else 1.0))
    if em_steps < 1:
        return starts[0]
    best, best_ll = starts[0], -math.inf
    for start in starts:
        try:
            fitted, ll = _em_refine(data, start, em_steps)
        except (ValueError, np.linalg.LinAlgError, FloatingPointError):
            continue
        if ll > best_ll and np.all(np.isfinite(fitted.mu)):
            best, best_ll = fitted, ll
    return best


def init_aux(data: ObservationSet, params: ModelParams, policy=InitPolicy.PRIOR_CONDITIONED, seed: int = 0) -> AuxiliaryState:
    """Starting counts with at least one jump on every active segment."""
    policy = InitPolicy(policy)
    idx = data.active
    if idx.size == 0:
        return AuxiliaryState.empty(params.J)
    if policy is InitPolicy.SINGLE_NEAREST_MEAN:
        nearest = np.argmin(np.abs(data.z[idx, None] - params.mu[None, :]), axis=1)
        counts = np.zeros((idx.size, params.J), dtype=np.int64)
        counts[np.arange(idx.size), nearest] = 1
        return AuxiliaryState(idx, counts)
    rng = _random.stream(seed, _random.INIT_AUX)
    u = rng.random(data.n)[idx]
    counts = _propose(params, data.deltas[idx], u, lambda k: rng.random((k, data.n))[:, idx])
    return AuxiliaryState(idx, counts)


def run_chain(
    data: ObservationSet,
    hyper: Hyperparameters,
    n_iter: int,
    thin: int = 1,
    seed: int = 0,
    init_policy=InitPolicy.PRIOR_CONDITIONED,
    init_params: ModelParams | None = None,
    burn_in: int = 0,
    warmup_sweeps: int = 20,
) -> Trace:
    """Run the sampler for ``n_iter`` sweeps, recording every ``thin``-th.

    Before the first sweep the counts get ``warmup_sweeps`` segment updates
    with the parameters held at their starting values, so the first
    parameter draw does not see counts that ignore the data. ``burn_in`` is
    stored on the trace as a marker only; all recorded iterations are kept.
    """
    if n_iter < 1 or thin < 1:
        raise ValueError("n_iter and thin must be >= 1")
    J = hyper.J
    params = init_params if init_params is not None else default_init_params(data, J)
    if params.J != J:
        raise ValueError(f"initial parameters have {params.J} components, hyperparameters {J}")
    aux = init_aux(data, params, init_policy, seed)
    for k in range(warmup_sweeps):
        aux = update_segments(ChainState(params, aux, k), data, seed, _random.WARMUP).aux
    state = ChainState(params, aux)
    T = data.T
    n_rec = n_iter // thin
    iterations = np.empty(n_rec, dtype=np.int64)
    psi_rows = np.empty((n_rec, J))
    mu_rows = np.empty((n_rec, J))
    tau_rows = np.empty(n_rec)
    accepted = np.empty(n_iter, dtype=np.int64)
    r = 0
    for t in range(1, n_iter + 1):
        try:
            before = int(state.accepted.sum())
            state = update_segments(state, data, seed)
            accepted[t - 1] = int(state.accepted.sum()) - before
            rng = _random.stream(seed, _random.PARAMS, t)
            psi = update_psi(state.aux, hyper, T, rng)
            mu, tau = update_mu_tau(data, state.aux, hyper, rng)
            state = ChainState(ModelParams(psi, mu, tau), state.aux, t, state.accepted, state.proposed)
        except (SamplerError, ValueError, FloatingPointError) as exc:
            raise SamplerError(f"iteration {t}: {exc}") from exc
        if t % thin == 0:
            iterations[r] = t
            psi_rows[r] = state.params.psi
            mu_rows[r] = state.params.mu
            tau_rows[r] = state.params.tau
            r += 1
    return Trace(iterations, psi_rows, mu_rows, tau_rows, thin, burn_in, accepted, aux.index.size)
