"""Trace post-processing and the posterior contraction harness."""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _random
from .data import AuxiliaryState, ObservationSet
from .distances import hellinger_scaled
from .model import ModelParams, mixture_pdf
from .sampler import (
    Hyperparameters,
    Trace,
    conditional_posterior_mean,
    mu_tau_conditional,
    psi_conditional,
    run_chain,
)
from .simulate import simulate_increments

__all__ = [
    "autocorrelation",
    "effective_sample_size",
    "ParamSummary",
    "PosteriorSummary",
    "posterior_summary",
    "posterior_mean_params",
    "posterior_mean_density",
    "relabel",
    "ContractionRow",
    "ContractionReport",
    "contraction_experiment",
    "mcmc_fitter",
    "known_counts_fitter",
    "contraction_radius",
]


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag`` (biased normalisation)."""
    x = np.asarray(series, dtype=float).reshape(-1)
    if max_lag < 0 or x.size <= max_lag:
        raise ValueError("series must be longer than max_lag")
    x = x - x.mean()
    denom = float(x @ x)
    if denom <= 0.0:
        raise ValueError("autocorrelation of a constant series is undefined")
    size = 1 << (2 * x.size - 1).bit_length()
    spec = np.fft.rfft(x, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[: max_lag + 1]
    out = acov / denom
    out[0] = 1.0
    return out


def effective_sample_size(series) -> float:
    """ESS by Geyer's initial monotone sequence estimator, capped at the sample size."""
    x = np.asarray(series, dtype=float).reshape(-1)
    n = x.size
    if n < 4 or np.ptp(x) == 0.0:
        return float(n)
    rho = autocorrelation(x, n - 1)
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    positive = np.flatnonzero(pairs <= 0.0)
    stop = positive[0] if positive.size else pairs.size
    gamma = np.minimum.accumulate(pairs[:stop])
    tau = -1.0 + 2.0 * gamma.sum()
    if tau <= 0:
        return float(n)
    return float(min(n, n / tau))


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    sd: float
    q025: float
    q50: float
    q975: float
    ess: float


@dataclass
class PosteriorSummary:
    params: dict[str, ParamSummary]
    n_retained: int
    acceptance_rate: float

    def __getitem__(self, name: str) -> ParamSummary:
        return self.params[name]

    def means(self) -> dict[str, float]:
        return {k: v.mean for k, v in self.params.items()}


def posterior_summary(trace: Trace, burn_in: int = 0, thin: int = 1) -> PosteriorSummary:
    """Mean, sd, quantiles and ESS of each parameter over retained iterates.

    ``burn_in`` counts chain iterations (not rows); ``thin`` strides the
    retained rows.
    """
    rows = trace.retained(burn_in, thin)
    if rows.size == 0:
        raise ValueError("no iterations retained after burn-in")
    out = {}
    for name, col in trace.columns().items():
        x = col[rows]
        q = np.quantile(x, [0.025, 0.5, 0.975])
        out[name] = ParamSummary(
            mean=float(x.mean()),
            sd=float(x.std(ddof=1)) if x.size > 1 else 0.0,
            q025=float(q[0]),
            q50=float(q[1]),
            q975=float(q[2]),
            ess=effective_sample_size(x),
        )
    return PosteriorSummary(out, int(rows.size), trace.acceptance_rate(burn_in))


def posterior_mean_params(trace: Trace, burn_in: int = 0, thin: int = 1) -> ModelParams:
    rows = trace.retained(burn_in, thin)
    if rows.size == 0:
        raise ValueError("no iterations retained after burn-in")
    return ModelParams(trace.psi[rows].mean(axis=0), trace.mu[rows].mean(axis=0), float(trace.tau[rows].mean()))


def posterior_mean_density(trace: Trace, burn_in: int, thin: int, grid, predictive: bool = False) -> np.ndarray:
    """Jump density evaluated on ``grid``.

    By default the mixture is evaluated at the posterior mean of
    ``(psi, mu, tau)``. With ``predictive=True`` the per-iterate densities
    are averaged instead.
    """
    grid = np.asarray(grid, dtype=float)
    if not predictive:
        return np.asarray(mixture_pdf(posterior_mean_params(trace, burn_in, thin).jump_density, grid))
    rows = trace.retained(burn_in, thin)
    if rows.size == 0:
        raise ValueError("no iterations retained after burn-in")
    acc = np.zeros_like(grid)
    for r in rows:
        acc += mixture_pdf(trace.params_at(r).jump_density, grid)
    return acc / rows.size


def relabel(trace: Trace, reference_mu, burn_in: int = 0) -> Trace:
    """Permute component labels so the posterior means of ``mu`` best match ``reference_mu``.

    One permutation is applied to the whole trace; it does not undo label
    switching within the run.
    """
    ref = np.asarray(reference_mu, dtype=float)
    means = trace.mu[trace.retained(burn_in)].mean(axis=0)
    best = min(itertools.permutations(range(trace.J)), key=lambda p: float(((means[list(p)] - ref) ** 2).sum()))
    perm = list(best)
    return Trace(
        trace.iterations.copy(),
        trace.psi[:, perm],
        trace.mu[:, perm],
        trace.tau.copy(),
        trace.thin,
        trace.burn_in,
        trace.accepted.copy(),
        trace.n_active,
    )


# ---------------------------------------------------------------------------
# contraction study


def contraction_radius(n_delta: float, log_power: float = 1.0) -> float:
    """``log(n delta)**log_power / sqrt(n delta)``."""
    return math.log(n_delta) ** log_power / math.sqrt(n_delta)


@dataclass(frozen=True)
class FitResult:
    mean: ModelParams
    draws: list[ModelParams]


def mcmc_fitter(n_iter: int = 3000, burn_in: int = 1000, thin: int = 1, n_draws: int = 200):
    """Fitter running the data-augmentation chain from its default start."""
    return _McmcFitter(n_iter, burn_in, thin, n_draws)


@dataclass(frozen=True)
class _McmcFitter:
    n_iter: int
    burn_in: int
    thin: int
    n_draws: int

    def __call__(self, data: ObservationSet, true_aux: AuxiliaryState, hyper: Hyperparameters, seed: int) -> FitResult:
        trace = run_chain(data, hyper, self.n_iter, thin=self.thin, seed=seed, burn_in=self.burn_in)
        rows = trace.retained(self.burn_in)
        pick = rows[np.linspace(0, rows.size - 1, min(self.n_draws, rows.size)).astype(int)]
        return FitResult(posterior_mean_params(trace, self.burn_in), [trace.params_at(r) for r in pick])


@dataclass(frozen=True)
class known_counts_fitter:  # noqa: N801 - used like a function
    """Posterior given the true latent counts; exact and cheap, for calibration."""

    n_draws: int = 200

    def __call__(self, data: ObservationSet, true_aux: AuxiliaryState, hyper: Hyperparameters, seed: int) -> FitResult:
        rng = _random.stream(seed, _random.PARAMS, 0)
        shape, rate = psi_conditional(true_aux, hyper, data.T)
        cond = mu_tau_conditional(data, true_aux, hyper)
        draws = []
        for _ in range(self.n_draws):
            psi = rng.gamma(shape, 1.0 / rate)
            tau = rng.gamma(cond.tau_shape, 1.0 / cond.tau_rate)
            mu = cond.mean + np.linalg.solve(cond.chol.T, rng.standard_normal(hyper.J)) / math.sqrt(tau)
            draws.append(ModelParams(psi, mu, tau))
        return FitResult(conditional_posterior_mean(data, true_aux, hyper), draws)


@dataclass(frozen=True)
class ContractionRow:
    n: int
    delta: float
    replicate: int
    distance: float
    mass_outside: float
    error: str | None = None

    @property
    def n_delta(self) -> float:
        return self.n * self.delta


@dataclass
class ContractionReport:
    """Per-replicate distances to the truth and the fitted log-log slope."""

    rows: list[ContractionRow]
    radius_multiplier: float
    slope: float = math.nan
    slope_se: float = math.nan
    intercept: float = math.nan
    failures: list[ContractionRow] = field(default_factory=list)

    @property
    def slope_defined(self) -> bool:
        return math.isfinite(self.slope)

    def cell_means(self) -> list[tuple[int, float, float, float]]:
        """(n, delta, mean distance, mean mass outside) per grid cell."""
        out = []
        for key, grp in itertools.groupby(self.rows, key=lambda r: (r.n, r.delta)):
            grp = list(grp)
            out.append((key[0], key[1], float(np.mean([g.distance for g in grp])), float(np.mean([g.mass_outside for g in grp]))))
        return out


def _fit_slope(rows: list[ContractionRow]) -> tuple[float, float, float]:
    x = np.log([r.n_delta for r in rows])
    y = np.log([r.distance for r in rows])
    if np.unique(x).size < 2:
        return math.nan, math.nan, math.nan
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    dof = x.size - 2
    if dof <= 0:
        return float(coef[1]), math.nan, float(coef[0])
    resid = y - X @ coef
    sigma2 = float(resid @ resid) / dof
    se = math.sqrt(sigma2 / float(((x - x.mean()) ** 2).sum()))
    return float(coef[1]), se, float(coef[0])


def _run_replicate(task):
    cell, rep, n, delta, truth, hyper, fitter, seed, radius = task
    rep_seed = int(np.random.SeedSequence(seed, spawn_key=(_random.REPLICATE, cell, rep)).generate_state(1)[0])
    try:
        data, aux = simulate_increments(truth, np.full(n, delta), rep_seed)
        fit = fitter(data, aux, hyper, rep_seed)
        f0, lam0 = truth.jump_density, truth.lam
        distance = hellinger_scaled(fit.mean.lam, fit.mean.jump_density, lam0, f0)
        ball = radius * contraction_radius(n * delta)
        outside = [hellinger_scaled(d.lam, d.jump_density, lam0, f0) > ball for d in fit.draws]
        mass = float(np.mean(outside)) if outside else math.nan
        return ContractionRow(n, delta, rep, distance, mass)
    except Exception as exc:  # noqa: BLE001 - failures are reported per cell
        return ContractionRow(n, delta, rep, math.nan, math.nan, f"{type(exc).__name__}: {exc}")


def contraction_experiment(
    truth: ModelParams,
    cells,
    replications: int,
    seed: int,
    hyper: Hyperparameters | None = None,
    fitter: Callable | None = None,
    radius_multiplier: float = 1.0,
    workers: int = 1,
) -> ContractionReport:
    """Distance of the posterior mean to the truth across sample sizes.

    For each ``(n, delta)`` cell and replicate, simulates ``n`` increments,
    fits them, and records the small-window scaled Hellinger distance
    between the posterior-mean model and the truth, plus the fraction of
    posterior draws outside the ball of radius
    ``radius_multiplier * log(n delta) / sqrt(n delta)``. The slope of
    log distance against log ``n delta`` is fitted by least squares over
    all successful replicates.
    """
    cells = sorted([(int(n), float(d)) for n, d in cells], key=lambda c: c[0] * c[1])
    if replications < 1 or not cells:
        raise ValueError("need at least one cell and one replication")
    hyper = hyper if hyper is not None else Hyperparameters.default(truth.J)
    fitter = fitter if fitter is not None else mcmc_fitter()
    tasks = [
        (c, r, n, d, truth, hyper, fitter, seed, radius_multiplier)
        for c, (n, d) in enumerate(cells)
        for r in range(replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replicate, tasks))
    else:
        results = [_run_replicate(t) for t in tasks]
    ok = [r for r in results if r.error is None]
    failed = [r for r in results if r.error is not None]
    report = ContractionReport(ok, radius_multiplier, failures=failed)
    if failed:
        warnings.warn(f"{len(failed)} replicate fits failed; see report.failures", RuntimeWarning, stacklevel=2)
    slope, se, intercept = _fit_slope(ok) if ok else (math.nan, math.nan, math.nan)
    if not math.isfinite(slope):
        warnings.warn("slope undefined: fewer than two distinct n*delta values", RuntimeWarning, stacklevel=2)
    report.slope, report.slope_se, report.intercept = slope, se, intercept
    return report
