"""Minimum effective dose (MED) estimation and the test for similar MEDs.

The MED of a fitted curve is the dose whose response exceeds the placebo
response by the clinically relevant amount ``delta_clinical`` (which carries
its sign; use a negative value when smaller responses are better).  The
MED difference is always ``med1 - med2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from curveq._stats import norm_cdf, norm_pdf, norm_ppf
from curveq.errors import DomainError, NotAttainableError
from curveq.fitting import FitResult, covariance_of_estimate

__all__ = [
    "MedEstimate",
    "MedInference",
    "estimate_med",
    "med_gradient",
    "tau_hat",
    "med_ci",
    "critical_constant",
    "test_med",
    "infer_med",
]


@dataclass(frozen=True)
class MedEstimate:
    med: float
    delta_clinical: float
    attainable: bool
    target: float = math.nan
    reason: str = ""


@dataclass(frozen=True)
class MedInference:
    med1: MedEstimate
    med2: MedEstimate
    diff_hat: float
    tau_hat: float
    ci: tuple[float, float]
    eta: float
    c_critical: float
    reject_H: bool
    alpha: float


def estimate_med(fit: FitResult, delta_clinical: float, *, upper: float | None = None) -> MedEstimate:
    """MED of a fitted curve.

    An unattainable target (at or beyond an asymptote, or on the wrong side
    of placebo) gives ``attainable=False`` and a NaN dose.  A curve that is
    not monotone raises :class:`~curveq.errors.UnsupportedModelError`.
    """
    if delta_clinical == 0:
        raise DomainError("clinically relevant effect must be nonzero")
    model, theta = fit.model, fit.theta_hat
    target = model.evaluate(theta, 0.0) + delta_clinical
    try:
        med = model.inverse(theta, target, upper)
    except NotAttainableError as exc:
        return MedEstimate(math.nan, float(delta_clinical), False, float(target), str(exc))
    return MedEstimate(float(med), float(delta_clinical), True, float(target))


def med_gradient(fit: FitResult, delta_clinical: float, *, total: bool = True) -> np.ndarray:
    """Gradient of the MED with respect to the fitted parameters.

    Implicit differentiation of ``m(theta, d) - m(theta, 0) = delta``.  With
    ``total=False`` the target response is treated as a constant, dropping
    the dependence of the placebo response on theta.
    """
    est = estimate_med(fit, delta_clinical)
    if not est.attainable:
        raise NotAttainableError(est.reason)
    model, theta = fit.model, fit.theta_hat
    g = model.gradient(theta, est.med)
    if total:
        g = g - model.gradient(theta, 0.0)
    return -g / model.dose_derivative(theta, est.med)


def tau_hat(fit1: FitResult, fit2: FitResult, delta_clinical: float, *, total: bool = True) -> float:
    """Delta-method standard error of ``med1 - med2``."""
    var = 0.0
    for f in (fit1, fit2):
        g = med_gradient(f, delta_clinical, total=total)
        var += float(g @ covariance_of_estimate(f) @ g)
    return math.sqrt(max(var, 0.0))


def med_ci(diff_hat: float, tau_hat: float, alpha: float) -> tuple[float, float]:
    """Two-sided ``1 - alpha`` interval ``diff_hat -/+ u_{1-alpha/2} tau_hat``.

    Works elementwise on arrays.
    """
    if np.any(np.asarray(tau_hat) < 0):
        raise DomainError("standard error must be nonnegative")
    half = float(norm_ppf(1.0 - alpha / 2.0)) * tau_hat
    return (diff_hat - half, diff_hat + half)


def _size(c: float, eta: float, tau: float) -> float:
    return float(norm_cdf((c - eta) / tau) - norm_cdf((-c - eta) / tau))


def critical_constant(eta: float, tau_hat: float, alpha: float, *, tol: float = 1e-12) -> float:
    """Rejection threshold ``c`` for ``|med1 - med2|``.

    Solves ``alpha = Phi((c - eta)/tau) - Phi((-c - eta)/tau)`` by Newton's
    method inside a maintained bracket, falling back to bisection whenever
    a Newton step would leave it.  The left side increases strictly in
    ``c``, so the root is unique.
    """
    if eta < 0:
        raise DomainError("margin eta must be nonnegative")
    if not tau_hat > 0:
        raise DomainError("tau_hat must be positive")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    lo, hi = 0.0, eta + 10.0 * tau_hat
    while _size(hi, eta, tau_hat) < alpha:
        hi *= 2.0
    c = eta + tau_hat * float(norm_ppf(alpha))
    if not lo < c < hi:
        c = tau_hat * float(norm_ppf(0.5 + alpha / 2.0)) if eta == 0 else 0.5 * (lo + hi)
    for _ in range(200):
        r = _size(c, eta, tau_hat) - alpha
        if abs(r) < tol:
            break
        if r < 0:
            lo = c
        else:
            hi = c
        slope = float(norm_pdf((c - eta) / tau_hat) + norm_pdf((c + eta) / tau_hat)) / tau_hat
        nxt = c - r / slope if slope > 0 else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == c:
            break
        c = nxt
    return c


def test_med(
    med1: MedEstimate, med2: MedEstimate, tau_hat: float, eta: float, alpha: float = 0.05
) -> MedInference:
    """Claim similar MEDs when ``|med1 - med2| < c``.

    ``eta = 0`` is accepted so size studies at a zero true difference can be
    run, even though the alternative is then empty.
    """
    for m in (med1, med2):
        if not m.attainable:
            raise NotAttainableError(f"MED not attainable: {m.reason}")
    diff = med1.med - med2.med
    c = critical_constant(eta, tau_hat, alpha)
    return MedInference(
        med1=med1,
        med2=med2,
        diff_hat=diff,
        tau_hat=tau_hat,
        ci=med_ci(diff, tau_hat, alpha),
        eta=float(eta),
        c_critical=c,
        reject_H=bool(abs(diff) < c),
        alpha=alpha,
    )


test_med.__test__ = False


def infer_med(
    fit1: FitResult,
    fit2: FitResult,
    delta_clinical: float,
    eta: float,
    alpha: float = 0.05,
    *,
    total: bool = True,
) -> MedInference:
    """Estimate both MEDs, their standard error, and run the test."""
    m1 = estimate_med(fit1, delta_clinical)
    m2 = estimate_med(fit2, delta_clinical)
    for m, f in ((m1, fit1), (m2, fit2)):
        if not m.attainable:
            who = f.label or str(f.model)
            raise NotAttainableError(f"MED of {who} not attainable: {m.reason}")
    return test_med(m1, m2, tau_hat(fit1, fit2, delta_clinical, total=total), eta, alpha)
