"""Hellinger, Kullback-Leibler and V divergences.

All integrals are computed by adaptive Gauss-Kronrod quadrature over a
finite window that covers every mixture component +/- 10 standard
deviations. The functions accept unnormalised nonnegative integrands:

    h2(f, g) = int (sqrt f - sqrt g)^2
    K(f, g)  = int f log(f/g) - int f + int g
    V(f, g)  = int f log^2(f/g)

Divergences between increment laws add the contribution of the atom at
zero to the integral over the continuous part. Divided by the window
length ``delta`` they converge, as ``delta -> 0``, to the divergences
between the Levy measures ``lam * f`` and ``lam0 * f0`` given by
:func:`limit_divergence`.
"""

from __future__ import annotations

import enum
import math
import warnings
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .model import IncrementLaw, MixtureDensity, mixture_logpdf

__all__ = [
    "DivergenceKind",
    "Divergence",
    "QuadratureError",
    "scalar_K",
    "density_divergence",
    "mixture_divergence",
    "increment_divergence",
    "limit_divergence",
    "hellinger_scaled",
]

EPSABS = 1e-10
#: Below this density value the V integrand is taken as zero.
TINY = 1e-300


class DivergenceKind(enum.Enum):
    HELLINGER_SQ = "hellinger_sq"
    KL = "kl"
    V = "v"

    @classmethod
    def parse(cls, value) -> "DivergenceKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"h2": "hellinger_sq", "hellinger": "hellinger_sq", "k": "kl"}
        return cls(aliases.get(key, key))


class Divergence(NamedTuple):
    value: float
    error: float


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, value: float, error: float):
        super().__init__(f"{msg} (value {value:.6g}, achieved error {error:.3g})")
        self.value = value
        self.error = error


def scalar_K(x: float, y: float) -> float:
    """``x log(x/y) - x + y`` for positive ``x, y``."""
    if not (x > 0 and y > 0):
        raise ValueError(f"scalar_K needs positive arguments, got ({x}, {y})")
    return x * math.log(x / y) - x + y


def _pointwise(kind: DivergenceKind, fx: float, gx: float) -> float:
    if kind is DivergenceKind.HELLINGER_SQ:
        return (math.sqrt(fx) - math.sqrt(gx)) ** 2
    if fx < TINY:
        return gx if kind is DivergenceKind.KL else 0.0
    if gx <= 0.0:
        return math.inf
    r = math.log(fx / gx)
    if kind is DivergenceKind.KL:
        return fx * r - fx + gx
    return fx * r * r


def _integrate(integrand: Callable[[float], float], lower: float, upper: float, points=None) -> Divergence:
    pts = None
    if points is not None:
        pts = sorted({float(p) for p in points if lower < p < upper})[:80] or None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        value, err = quad(integrand, lower, upper, points=pts, epsabs=EPSABS, epsrel=1e-10, limit=500)
    if any(issubclass(w.category, IntegrationWarning) for w in caught):
        if err > max(100 * EPSABS, 1e-8 * abs(value)):
            raise QuadratureError("quadrature did not converge", value, err)
    return Divergence(float(value), float(err))


def density_divergence(kind, f: Callable, g: Callable, lower: float, upper: float, points=None) -> Divergence:
    """Divergence between two nonnegative functions over ``[lower, upper]``.

    Parameters
    ----------
    kind : DivergenceKind or str
    f, g : callable
        Scalar functions returning nonnegative values.
    lower, upper : float
        Integration window; both functions are treated as zero outside.
    points : sequence of float, optional
        Break points handed to the quadrature (e.g. mixture modes).
    """
    kind = DivergenceKind.parse(kind)
    return _integrate(lambda x: _pointwise(kind, f(x), g(x)), lower, upper, points)


def _joint_window(*densities: MixtureDensity) -> tuple[float, float]:
    lows, highs = zip(*(d.window() for d in densities))
    return min(lows), max(highs)


def mixture_divergence(kind, f: MixtureDensity, g: MixtureDensity, scale_f: float = 1.0, scale_g: float = 1.0) -> Divergence:
    """Divergence between ``scale_f * f`` and ``scale_g * g`` for mixture densities."""
    kind = DivergenceKind.parse(kind)
    lo, hi = _joint_window(f, g)
    lf, lg = math.log(scale_f), math.log(scale_g)

    def integrand(x):
        a = float(mixture_logpdf(f, x)) + lf
        b = float(mixture_logpdf(g, x)) + lg
        fa, gb = math.exp(a), math.exp(b)
        if kind is DivergenceKind.HELLINGER_SQ:
            return (math.exp(0.5 * a) - math.exp(0.5 * b)) ** 2
        if fa < TINY:
            return gb if kind is DivergenceKind.KL else 0.0
        r = a - b
        return fa * r - fa + gb if kind is DivergenceKind.KL else fa * r * r

    return _integrate(integrand, lo, hi, points=np.concatenate([f.means, g.means]))


def _law_window(law: IncrementLaw) -> tuple[float, float, np.ndarray]:
    f = law.params.jump_density
    m = law.m_max
    sd = math.sqrt(m / f.precision)
    lo = min(0.0, m * f.means.min()) - 10.0 * sd
    hi = max(0.0, m * f.means.max()) + 10.0 * sd
    ks = np.arange(1, min(m, 6) + 1)
    return lo, hi, np.concatenate([np.outer(ks, f.means).ravel(), [0.0]])


def increment_divergence(kind, law0: IncrementLaw, law1: IncrementLaw) -> Divergence:
    """Divergence between two increment laws over the same window length.

    The atom at zero contributes its term in closed form; the continuous
    parts are integrated numerically. Divide by ``delta`` for the scaled
    versions.
    """
    kind = DivergenceKind.parse(kind)
    if not math.isclose(law0.delta, law1.delta, rel_tol=1e-12):
        raise ValueError("increment laws must share the same delta")
    lo0, hi0, p0 = _law_window(law0)
    lo1, hi1, p1 = _law_window(law1)
    cont = density_divergence(
        kind, law0.continuous_pdf, law1.continuous_pdf, min(lo0, lo1), max(hi0, hi1), np.concatenate([p0, p1])
    )
    atom = _pointwise(kind, law0.atom, law1.atom)
    return Divergence(atom + cont.value, cont.error)


def limit_divergence(kind, lam: float, f: MixtureDensity, lam0: float, f0: MixtureDensity) -> Divergence:
    """Small-window limit of ``divergence(Q^delta, Q0^delta) / delta``.

    Equals the divergence between the Levy measures ``lam f`` and
    ``lam0 f0``; for KL this splits as ``lam K(f, f0) + K(lam, lam0)``.
    """
    kind = DivergenceKind.parse(kind)
    if not (lam > 0 and lam0 > 0):
        raise ValueError("intensities must be positive")
    if kind is DivergenceKind.KL:
        inner = mixture_divergence(kind, f, f0)
        return Divergence(lam * inner.value + scalar_K(lam, lam0), lam * inner.error)
    return mixture_divergence(kind, f, f0, lam, lam0)


def hellinger_scaled(lam: float, f: MixtureDensity, lam0: float, f0: MixtureDensity) -> float:
    """Small-window proxy of the scaled Hellinger distance ``h / sqrt(delta)``."""
    return math.sqrt(max(limit_divergence(DivergenceKind.HELLINGER_SQ, lam, f, lam0, f0).value, 0.0))
