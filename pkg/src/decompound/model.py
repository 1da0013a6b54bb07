"""Jump densities and the law of compound Poisson increments.

The jump density is a Gaussian location mixture with a common precision,

    f(x) = sum_j rho_j N(x; mu_j, 1/tau),

and an increment over a window of length ``delta`` has an atom at zero of
weight ``exp(-lambda * delta)`` plus a continuous part that is a Poisson
weighted sum of the convolution powers of ``f``.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import comb, gammaln, logsumexp, xlogy
from scipy.stats import poisson

__all__ = [
    "MixtureDensity",
    "ModelParams",
    "IncrementLaw",
    "TruncationError",
    "CombinatorialLimitError",
    "normal_logpdf",
    "mixture_pdf",
    "mixture_logpdf",
    "convolution_pdf",
    "increment_pdf",
    "continuous_weights",
    "truncation_level",
    "reparametrise",
    "log_continuous_likelihood",
]

LOG_2PI = math.log(2.0 * math.pi)

#: Tail mass of the Poisson weights left out of the convolution series.
DEFAULT_TAIL_TOL = 1e-12
#: Largest number of type-count vectors enumerated for one convolution power.
MAX_CONVOLUTION_TERMS = 10**6


class TruncationError(ValueError):
    """Raised when a truncated convolution series drops too much mass."""


class CombinatorialLimitError(ValueError):
    """Raised when a multinomial expansion would exceed the term cap."""


def normal_logpdf(x, mean, var):
    """Log density of N(mean, var), vectorised over all arguments."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (LOG_2PI + np.log(var) + (x - mean) ** 2 / var)


@dataclass(frozen=True)
class MixtureDensity:
    """Gaussian location mixture with shared precision.

    Parameters
    ----------
    weights : array_like
        Mixing probabilities ``rho``; must sum to one.
    means : array_like
        Component means ``mu``.
    precision : float
        Common precision ``tau`` (inverse variance).
    """

    weights: np.ndarray
    means: np.ndarray
    precision: float

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.atleast_1d(np.asarray(self.means, dtype=float))
        if w.ndim != 1 or w.shape != m.shape or w.size < 1:
            raise ValueError("weights and means must be 1-d arrays of equal length >= 1")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must be a probability vector, got {w}")
        if not (self.precision > 0 and np.isfinite(self.precision)):
            raise ValueError(f"precision must be positive, got {self.precision}")
        if not np.all(np.isfinite(m)):
            raise ValueError("means must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "precision", float(self.precision))

    @property
    def J(self) -> int:
        return self.weights.size

    @property
    def variance(self) -> float:
        return 1.0 / self.precision

    def mean(self) -> float:
        """First moment of a single jump."""
        return float(self.weights @ self.means)

    def second_moment(self) -> float:
        return float(self.weights @ (self.means**2) + self.variance)

    def window(self, n_sd: float = 10.0) -> tuple[float, float]:
        """Interval covering every component mean +/- ``n_sd`` standard deviations."""
        sd = math.sqrt(self.variance)
        return float(self.means.min() - n_sd * sd), float(self.means.max() + n_sd * sd)


@dataclass(frozen=True)
class ModelParams:
    """Per-type intensities ``psi`` with component means and common precision.

    ``lam = sum(psi)`` is the total jump rate and ``rho = psi / lam`` the
    mixing weights of the jump density.
    """

    psi: np.ndarray
    mu: np.ndarray
    tau: float

    def __post_init__(self):
        psi = np.atleast_1d(np.asarray(self.psi, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if psi.ndim != 1 or psi.shape != mu.shape:
            raise ValueError("psi and mu must be 1-d arrays of equal length")
        if np.any(~(psi > 0)):
            raise ValueError(f"all psi must be positive, got {psi}")
        if not (self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def J(self) -> int:
        return self.psi.size

    @property
    def lam(self) -> float:
        return float(self.psi.sum())

    @property
    def rho(self) -> np.ndarray:
        return self.psi / self.psi.sum()

    @property
    def jump_density(self) -> MixtureDensity:
        rho = self.rho
        # renormalise so the sum-to-one check is exact to rounding
        return MixtureDensity(rho / rho.sum(), self.mu, self.tau)

    @classmethod
    def from_rate(cls, lam: float, f: MixtureDensity) -> "ModelParams":
        return cls(lam * f.weights, f.means, f.precision)


def reparametrise(psi) -> tuple[float, np.ndarray]:
    """Map per-type intensities to ``(lam, rho)``.

    >>> lam, rho = reparametrise([2.4, 0.6])
    >>> round(lam, 12), rho.round(12).tolist()
    (3.0, [0.8, 0.2])
    """
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if psi.size == 0 or np.any(~(psi > 0)):
        raise ValueError(f"psi entries must be positive, got {psi}")
    lam = float(psi.sum())
    return lam, psi / lam


def mixture_logpdf(f: MixtureDensity, x):
    x = np.asarray(x, dtype=float)
    comp = normal_logpdf(x[..., None], f.means, f.variance)
    with np.errstate(divide="ignore"):
        logw = np.log(f.weights)
    return logsumexp(comp + logw, axis=-1)


def mixture_pdf(f: MixtureDensity, x):
    """Evaluate the mixture density at ``x`` (scalar or array)."""
    out = np.exp(mixture_logpdf(f, x))
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=256)
def _count_vectors(J: int, k: int) -> np.ndarray:
    """All nonnegative integer vectors of length J summing to k."""
    rows = [np.bincount(c, minlength=J) for c in combinations_with_replacement(range(J), k)]
    out = np.array(rows, dtype=np.int64).reshape(-1, J)
    out.flags.writeable = False
    return out


def _convolution_logpdf(f: MixtureDensity, k: int, x, max_terms: int = MAX_CONVOLUTION_TERMS):
    n_terms = comb(k + f.J - 1, f.J - 1, exact=True)
    if n_terms > max_terms:
        raise CombinatorialLimitError(
            f"{k}-fold convolution of a {f.J}-component mixture needs {n_terms} terms (cap {max_terms})"
        )
    counts = _count_vectors(f.J, k)
    # multinomial coefficient times prod_j rho_j^{n_j}
    log_coef = gammaln(k + 1) - gammaln(counts + 1).sum(axis=1) + xlogy(counts, f.weights).sum(axis=1)
    centres = counts @ f.means
    x = np.asarray(x, dtype=float)
    comp = normal_logpdf(x[..., None], centres, k / f.precision)
    return logsumexp(comp + log_coef, axis=-1)


def convolution_pdf(f: MixtureDensity, k: int, x, max_terms: int = MAX_CONVOLUTION_TERMS):
    """Density of the sum of ``k`` independent jumps drawn from ``f``.

    Expands over type-count vectors: each vector ``c`` with ``sum(c) == k``
    contributes ``Multinomial(c; k, rho) * N(x; c @ mu, k / tau)``.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    out = np.exp(_convolution_logpdf(f, int(k), x, max_terms))
    return float(out) if np.ndim(out) == 0 else out


def continuous_weights(rate: float, m_max: int) -> np.ndarray:
    """Weights ``a_m(rate)`` for m = 1..m_max.

    ``a_m(x) = x**m / m! / (exp(x) - 1)``; they sum to one over all m >= 1.
    """
    m = np.arange(1, m_max + 1)
    return np.exp(m * math.log(rate) - gammaln(m + 1) - math.log(math.expm1(rate)))


def _weight_tail(rate: float, m_max: int) -> float:
    return float(poisson.sf(m_max, rate) / -math.expm1(-rate))


def truncation_level(rate: float, tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest ``m`` whose remaining weight ``sum_{k>m} a_k(rate)`` is below ``tol``."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    m = max(1, int(rate))
    while _weight_tail(rate, m) >= tol:
        m += 1
    return m


@dataclass(frozen=True)
class IncrementLaw:
    """Law of one increment over a window of length ``delta``.

    ``m_max`` truncates the convolution series; left as ``None`` it is chosen
    by :func:`truncation_level` for ``tail_tol``.
    """

    params: ModelParams
    delta: float
    m_max: int | None = None
    tail_tol: float = DEFAULT_TAIL_TOL
    _weights: np.ndarray = field(init=False, repr=False, compare=False)
    _terms: tuple | None = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        m_max = self.m_max
        if m_max is None:
            m_max = truncation_level(self.rate, self.tail_tol)
        elif m_max < 1:
            raise ValueError("m_max must be >= 1")
        object.__setattr__(self, "m_max", int(m_max))
        object.__setattr__(self, "_weights", continuous_weights(self.rate, self.m_max))

    @property
    def rate(self) -> float:
        """Expected jump count ``lam * delta`` in the window."""
        return self.params.lam * self.delta

    @property
    def atom(self) -> float:
        return math.exp(-self.rate)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def weight_tail(self) -> float:
        """Mass ``sum_{m > m_max} a_m`` dropped by the truncation."""
        return _weight_tail(self.rate, self.m_max)

    def truncation_bound(self) -> float:
        """Uniform bound on the error of the truncated continuous density.

        Uses ``sup_x f^{*m}(x) <= sqrt(tau / (2 pi m))`` for ``m > m_max``.
        """
        sup = math.sqrt(self.params.tau / (2.0 * math.pi * (self.m_max + 1)))
        return -math.expm1(-self.rate) * self.weight_tail() * sup

    def _term_table(self):
        """Flattened (log weight, centre, variance) of every Gaussian in the series."""
        f = self.params.jump_density
        logs, centres, variances = [], [], []
        log_a = np.log(self._weights)
        for m in range(1, self.m_max + 1):
            counts = _count_vectors(f.J, m)
            if counts.shape[0] > MAX_CONVOLUTION_TERMS:
                raise CombinatorialLimitError(f"{m}-fold convolution exceeds the term cap")
            logs.append(
                log_a[m - 1] + gammaln(m + 1) - gammaln(counts + 1).sum(axis=1) + xlogy(counts, f.weights).sum(axis=1)
            )
            centres.append(counts @ f.means)
            variances.append(np.full(counts.shape[0], m / f.precision))
        return np.concatenate(logs), np.concatenate(centres), np.concatenate(variances)

    def continuous_pdf(self, z):
        """Density of the absolutely continuous part (integrates to ``1 - atom``)."""
        if self.weight_tail() > self.tail_tol:
            raise TruncationError(
                f"series truncated at m_max={self.m_max} drops weight {self.weight_tail():.3e} "
                f"> tolerance {self.tail_tol:.1e}"
            )
        if self._terms is None:
            object.__setattr__(self, "_terms", self._term_table())
        log_w, centres, variances = self._terms
        z = np.asarray(z, dtype=float)
        comp = normal_logpdf(z[..., None], centres, variances)
        out = -math.expm1(-self.rate) * np.exp(logsumexp(comp + log_w, axis=-1))
        return float(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        return self.rate * self.params.jump_density.mean()

    def variance(self) -> float:
        return self.rate * self.params.jump_density.second_moment()


def increment_pdf(law: IncrementLaw, z):
    """Density of an increment w.r.t. Lebesgue measure plus a unit atom at zero.

    Returns the atom weight ``exp(-lam * delta)`` where ``z == 0`` and the
    continuous density elsewhere.
    """
    z_arr = np.asarray(z, dtype=float)
    cont = np.asarray(law.continuous_pdf(z_arr))
    out = np.where(z_arr == 0.0, law.atom, cont)
    return float(out) if out.ndim == 0 else out


def log_continuous_likelihood(params: ModelParams, jumps, T: float) -> float:
    """Log-likelihood of a continuously observed path on ``[0, T]``.

    ``jumps`` is a sequence of ``(time, size)`` pairs. Returns
    ``|V| log(lam) - lam T + sum log f(size)``; ``-inf`` with a
    ``RuntimeWarning`` if some jump has zero density in floating point.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    jumps = np.asarray(jumps, dtype=float).reshape(-1, 2)
    times, sizes = jumps[:, 0], jumps[:, 1]
    if np.any((times < 0) | (times > T)):
        raise ValueError("all jump times must lie in [0, T]")
    lam = params.lam
    logf = mixture_logpdf(params.jump_density, sizes)
    if np.any(np.isneginf(logf)):
        warnings.warn("jump density underflows to zero at an observed jump", RuntimeWarning, stacklevel=2)
        return -math.inf
    return float(sizes.size * math.log(lam) - lam * T + logf.sum())
